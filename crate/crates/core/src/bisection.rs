/// Result of a maximum-feasible-value bisection.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bracket {
    /// Largest value known to be feasible.
    pub lo: f64,
    pub iterations: usize,
}

/// Bisects for the largest `x` in `[lo, hi]` with `feasible(x)`, assuming the
/// predicate is monotone (true below a threshold) and `feasible(lo)` holds.
///
/// Keeps halving while `keep_going(lo, hi)` returns true, up to `max_iter`
/// midpoints.
pub(crate) fn max_feasible(
    mut lo: f64,
    mut hi: f64,
    max_iter: usize,
    mut feasible: impl FnMut(f64) -> bool,
    mut keep_going: impl FnMut(f64, f64) -> bool,
) -> Bracket {
    let mut iterations = 0;
    while iterations < max_iter && keep_going(lo, hi) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Bracket { lo, iterations }
}

/// Relative bracket width, `(hi - lo) / hi`.
pub(crate) fn rel_width(lo: f64, hi: f64) -> f64 {
    if hi == 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_square_root_threshold() {
        let b = max_feasible(
            0.0,
            4.0,
            200,
            |x| x * x <= 2.0,
            |lo, hi| rel_width(lo, hi) > 1e-12,
        );
        assert!((b.lo - 2f64.sqrt()).abs() < 1e-11);
        assert!(b.lo * b.lo <= 2.0);
        assert!(b.iterations < 60);
    }

    #[test]
    fn respects_iteration_cap() {
        let b = max_feasible(0.0, 1.0, 3, |_| true, |_, _| true);
        assert_eq!(b.iterations, 3);
        assert_eq!(b.lo, 0.875);
    }
}
