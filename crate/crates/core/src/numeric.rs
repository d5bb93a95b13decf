//! Small numeric kernels shared across the crate: deterministic pairwise
//! summation, the `phi1` exponential quotient and integer square roots.

use num_complex::Complex64;

/// Base-case length below which pairwise summation falls back to a serial loop.
const PAIRWISE_BASE: usize = 32;

/// Sums `f(i)` for `i` in `[lo, hi)` with a fixed tree reduction order.
///
/// The reduction order depends only on the index range, so the result is
/// bit-identical no matter how callers schedule the surrounding work.
pub fn pairwise_sum_fn<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    debug_assert!(lo <= hi);
    let len = hi - lo;
    if len <= PAIRWISE_BASE {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    } else {
        let mid = lo + len / 2;
        pairwise_sum_fn(lo, mid, f) + pairwise_sum_fn(mid, hi, f)
    }
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_fn(0, xs.len(), &|i| xs[i])
}

/// Euclidean norm of a complex vector, accumulated pairwise.
pub fn l2_norm(xs: &[Complex64]) -> f64 {
    l2_norm_sq(xs).sqrt()
}

/// Squared Euclidean norm of a complex vector, accumulated pairwise.
pub fn l2_norm_sq(xs: &[Complex64]) -> f64 {
    pairwise_sum_fn(0, xs.len(), &|i| xs[i].norm_sqr())
}

/// Evaluates `phi1(w) = (exp(w) - 1) / w` without cancellation.
///
/// For small `|w|` the direct quotient loses all accuracy, so a truncated
/// Taylor series is used there; the series converges to machine precision
/// well inside the switch radius.
pub fn phi1(w: Complex64) -> Complex64 {
    if w.norm() <= 0.5 {
        // sum_{m>=0} w^m / (m+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for m in 1..=20 {
            term = term * w / (m as f64 + 1.0);
            acc += term;
            if term.norm() <= f64::EPSILON * acc.norm() {
                break;
            }
        }
        acc
    } else {
        (w.exp() - 1.0) / w
    }
}

/// Floor of the square root of `n`, in integer arithmetic.
pub fn integer_sqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    // f64 seed is exact enough to land within one step of the answer.
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Certified lower/upper bracket of a positive quantity (typically a series
/// tail). The true value lies in `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TailBound {
    pub lower: f64,
    pub upper: f64,
}

impl TailBound {
    pub fn zero() -> Self {
        TailBound {
            lower: 0.0,
            upper: 0.0,
        }
    }

    pub fn exact(v: f64) -> Self {
        TailBound { lower: v, upper: v }
    }

    /// Midpoint estimate of the bracketed value.
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn add(&self, other: &TailBound) -> TailBound {
        TailBound {
            lower: self.lower + other.lower,
            upper: self.upper + other.upper,
        }
    }

    pub fn scale(&self, c: f64) -> TailBound {
        debug_assert!(c >= 0.0);
        TailBound {
            lower: self.lower * c,
            upper: self.upper * c,
        }
    }
}

/// Brackets `sum_{k>=a} f(k)` for a positive, decreasing, convex `f`.
///
/// `f_a = f(a)` and `rest(x) = int_x^inf f`. Convexity gives the midpoint
/// bound `sum <= int_{a-1/2}^inf f` and the trapezoid bound
/// `sum >= int_a^inf f + f(a)/2`.
pub fn convex_tail_bracket<F: Fn(f64) -> f64>(a: f64, f_a: f64, rest: F) -> TailBound {
    debug_assert!(a >= 1.0);
    let lower = rest(a) + 0.5 * f_a;
    let upper = rest(a - 0.5);
    TailBound {
        lower: lower.min(upper),
        upper,
    }
}

/// A series split into a materialized window sum plus a bracketed tail.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum TailSum {
    Finite(TailBound),
    Divergent,
}

impl TailSum {
    pub fn is_finite(&self) -> bool {
        matches!(self, TailSum::Finite(_))
    }

    pub fn bound(&self) -> Option<TailBound> {
        match self {
            TailSum::Finite(b) => Some(*b),
            TailSum::Divergent => None,
        }
    }

    pub fn add(&self, other: &TailSum) -> TailSum {
        match (self, other) {
            (TailSum::Finite(a), TailSum::Finite(b)) => TailSum::Finite(a.add(b)),
            _ => TailSum::Divergent,
        }
    }

    pub fn scale(&self, c: f64) -> TailSum {
        match self {
            TailSum::Finite(b) => TailSum::Finite(b.scale(c)),
            TailSum::Divergent => TailSum::Divergent,
        }
    }
}

/// Windowed sum with a certified tail, as reported for series quantities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SumWithTail {
    /// Sum over the materialized index window.
    pub window: f64,
    /// What the omitted modes contribute.
    pub tail: TailSum,
}

impl SumWithTail {
    pub fn is_finite(&self) -> bool {
        self.tail.is_finite()
    }

    /// Best estimate: window sum plus tail midpoint. `None` when divergent.
    pub fn estimate(&self) -> Option<f64> {
        self.tail.bound().map(|b| self.window + b.estimate())
    }

    /// Certified upper bound. `None` when divergent.
    pub fn upper(&self) -> Option<f64> {
        self.tail.bound().map(|b| self.window + b.upper)
    }

    /// Certified lower bound; the window sum alone when divergent.
    pub fn lower(&self) -> f64 {
        match self.tail {
            TailSum::Finite(b) => self.window + b.lower,
            TailSum::Divergent => self.window,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_inputs() {
        let xs: Vec<f64> = (1..=100).map(|k| 1.0 / k as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() <= 1e-13);
    }

    #[test]
    fn pairwise_is_independent_of_caller_chunking() {
        let xs: Vec<f64> = (0..10_000u64)
            .map(|k| ((k * 2654435761) % 1000) as f64 * 1e-3)
            .collect();
        let whole = pairwise_sum(&xs);
        let again = pairwise_sum(&xs);
        assert_eq!(whole.to_bits(), again.to_bits());
    }

    #[test]
    fn phi1_series_matches_direct_quotient() {
        // points inside the series radius where the quotient is still stable
        for &(re, im) in &[(0.49, 0.1), (0.3, -0.39), (-0.45, 0.0), (0.0, 0.49)] {
            let w = Complex64::new(re, im);
            let series = phi1(w);
            let direct = (w.exp() - 1.0) / w;
            assert!((series - direct).norm() <= 1e-14 * direct.norm());
        }
        // exact limits
        assert!((phi1(Complex64::new(0.0, 0.0)) - 1.0).norm() == 0.0);
        let one = Complex64::new(1.0, 0.0);
        assert!((phi1(one) - (1f64.exp() - 1.0)).norm() <= 1e-15);
    }

    #[test]
    fn integer_sqrt_exact_near_large_squares() {
        for l in [1u64, 2, 3, 10, 10_000, 4_294_967_295] {
            let sq = l * l;
            assert_eq!(integer_sqrt(sq), l);
            assert_eq!(integer_sqrt(sq - 1), l - 1, "k = {} - 1", sq);
            if sq < u64::MAX - 2 {
                assert_eq!(integer_sqrt(sq + 1), l);
            }
        }
    }

    #[test]
    fn convex_bracket_contains_true_tail() {
        // sum_{k>=a} k^-2 with known closed integral x^-1
        let a = 50u64;
        let cutoff = 50_000_000u64;
        let partial: f64 = (a..cutoff).map(|k| 1.0 / (k as f64 * k as f64)).sum();
        // the true tail lies in [partial, partial + int_{cutoff-1} x^-2 dx]
        let remainder = 1.0 / (cutoff - 1) as f64;
        let b = convex_tail_bracket(a as f64, 1.0 / (a as f64 * a as f64), |x| 1.0 / x);
        assert!(b.lower <= partial + remainder);
        assert!(partial <= b.upper);
        assert!(b.upper - b.lower <= 1e-5);
    }
}
