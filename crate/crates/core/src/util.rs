//! Small shared helpers: deterministic parallel mapping and the report
//! float formatter.

/// Applies `f` to every input, possibly on `width` threads. Results are
/// keyed by input index, so the output is identical for every width,
/// including 1 (sequential).
pub fn parallel_map<T, R, F>(inputs: &[T], width: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if width <= 1 || inputs.len() <= 1 {
        return inputs.iter().map(f).collect();
    }
    let width = width.min(inputs.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<R>>> =
        inputs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..width {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= inputs.len() {
                    break;
                }
                let r = f(&inputs[i]);
                *slots[i].lock().expect("worker poisoned a result slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("worker poisoned a result slot")
                .expect("every slot filled")
        })
        .collect()
}

/// Three-decimal formatting used by all human-readable reports. Negative
/// zero is normalized so byte-level diffs never depend on the sign of a
/// rounded-away residue.
pub fn fmt3(value: f64) -> String {
    let s = format!("{value:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_matches_sequential_for_any_width() {
        let inputs: Vec<u64> = (0..97).collect();
        let seq = parallel_map(&inputs, 1, |&x| x * x + 1);
        for width in [2, 3, 8, 64] {
            assert_eq!(parallel_map(&inputs, width, |&x| x * x + 1), seq);
        }
    }

    #[test]
    fn fmt3_normalizes_negative_zero() {
        assert_eq!(fmt3(-0.0001), "0.000");
        assert_eq!(fmt3(0.0), "0.000");
        assert_eq!(fmt3(-0.0006), "-0.001");
        assert_eq!(fmt3(0.5554), "0.555");
    }
}
