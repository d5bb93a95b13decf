//! The input map `Phi_t(u) = int_0^t e^{As} B u(s) ds` for structured
//! scalar inputs.
//!
//! Inputs are finite lists of modulated rectangular pieces
//! `u(s) = amplitude * e^{-i omega s}` on `[start, end)`. For such inputs
//! every mode integral has an exact antiderivative, which is the primary
//! evaluation path; an adaptive composite-Simpson oracle provides an
//! independent check.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::numeric::{l2_norm, l2_norm_sq, pairwise_sum_fn, phi1};
use crate::spectral::{IndexWindow, TruncatedSystem};

/// One modulated rectangular piece: `amplitude * e^{-i frequency s}` on
/// `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPiece {
    pub start: f64,
    pub end: f64,
    pub amplitude: Complex64,
    pub frequency: f64,
}

/// Piecewise-modulated scalar input, zero outside its pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    pieces: Vec<SignalPiece>,
}

impl InputSignal {
    /// Pieces must be ordered, disjoint and of positive length.
    pub fn new(pieces: Vec<SignalPiece>) -> Result<Self> {
        let mut prev_end = 0.0_f64;
        for (i, p) in pieces.iter().enumerate() {
            if !p.start.is_finite() || !p.end.is_finite() || p.start < 0.0 {
                return Err(CoreError::InvalidSignal(format!(
                    "piece {i} has invalid interval [{}, {})",
                    p.start, p.end
                )));
            }
            if p.end <= p.start {
                return Err(CoreError::InvalidSignal(format!(
                    "piece {i} has nonpositive length"
                )));
            }
            if p.start < prev_end {
                return Err(CoreError::InvalidSignal(format!(
                    "piece {i} overlaps its predecessor"
                )));
            }
            prev_end = p.end;
        }
        Ok(InputSignal { pieces })
    }

    pub fn zero() -> Self {
        InputSignal { pieces: Vec::new() }
    }

    pub fn pieces(&self) -> &[SignalPiece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `||u||_2^2 = sum |amplitude|^2 (end - start)`.
    pub fn l2_norm_sq(&self) -> f64 {
        pairwise_sum_fn(0, self.pieces.len(), &|i| {
            let p = &self.pieces[i];
            p.amplitude.norm_sqr() * (p.end - p.start)
        })
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        for p in &self.pieces {
            if p.start <= s && s < p.end {
                return p.amplitude * Complex64::new(0.0, -p.frequency * s).exp();
            }
        }
        Complex64::new(0.0, 0.0)
    }

    /// End of the last piece (0 for the zero signal).
    pub fn end_time(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.end)
    }

    /// All piece endpoints, in order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut ts = Vec::with_capacity(2 * self.pieces.len());
        for p in &self.pieces {
            ts.push(p.start);
            ts.push(p.end);
        }
        ts
    }

    /// Same pieces with amplitudes scaled by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        InputSignal {
            pieces: self
                .pieces
                .iter()
                .map(|p| SignalPiece {
                    amplitude: c * p.amplitude,
                    ..*p
                })
                .collect(),
        }
    }
}

/// The divergence witness input `u_n(s) = n^(-1/2) 1_[0,n](s) e^{-i beta_n s}`.
pub fn make_un_signal(n: u64, beta_n: f64) -> InputSignal {
    assert!(n >= 1, "witness index must be at least 1");
    InputSignal {
        pieces: vec![SignalPiece {
            start: 0.0,
            end: n as f64,
            amplitude: Complex64::new(1.0 / (n as f64).sqrt(), 0.0),
            frequency: beta_n,
        }],
    }
}

/// `int_0^t u(s) e^{lambda s} ds` by the exact per-piece antiderivative.
///
/// Each piece contributes `amplitude (e^{mu b} - e^{mu a}) / mu` with
/// `mu = lambda - i omega` and `[a, b]` the piece clipped to `[0, t]`,
/// evaluated as `amplitude (b-a) e^{mu a} phi1(mu (b-a))` so the degenerate
/// direction `mu -> 0` (the resonant choice `omega = beta_n`) costs
/// no accuracy.
///
/// ```
/// use admissibility_core::mild::{mode_integral, InputSignal, SignalPiece};
/// use num_complex::Complex64;
///
/// let u = InputSignal::new(vec![SignalPiece {
///     start: 0.0,
///     end: 1.0,
///     amplitude: Complex64::new(1.0, 0.0),
///     frequency: 0.0,
/// }])
/// .unwrap();
/// let v = mode_integral(Complex64::new(-1.0, 0.0), &u, 1.0);
/// assert!((v.re - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
/// ```
pub fn mode_integral(lambda: Complex64, signal: &InputSignal, t: f64) -> Complex64 {
    assert!(t >= 0.0, "time must be nonnegative");
    let mut acc = Complex64::new(0.0, 0.0);
    for p in signal.pieces() {
        let a = p.start.max(0.0);
        let b = p.end.min(t);
        if b <= a {
            continue;
        }
        let mu = lambda - Complex64::new(0.0, p.frequency);
        let d = b - a;
        acc += p.amplitude * d * (mu * a).exp() * phi1(mu * d);
    }
    acc
}

/// State vector `Phi_t(u)` over a truncation window.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    pub values: Vec<Complex64>,
    pub window: IndexWindow,
    pub time: f64,
}

impl TruncatedState {
    /// Truncated l^2 norm.
    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn norm_sq(&self) -> f64 {
        l2_norm_sq(&self.values)
    }
}

/// `Phi_t(u)` per mode: `b_k * int_0^t u(s) e^{lambda_k s} ds`.
pub fn phi_state(sys: &TruncatedSystem, signal: &InputSignal, t: f64) -> TruncatedState {
    let values: Vec<Complex64> = sys
        .lambda()
        .iter()
        .zip(sys.b())
        .map(|(lambda, b)| b * mode_integral(*lambda, signal, t))
        .collect();
    TruncatedState {
        values,
        window: sys.window(),
        time: t,
    }
}

/// Max of `||Phi_t(u)||` over a time grid; returns the value and the
/// maximizing grid time. A lower bound for the true sup over `t`.
pub fn phi_sup_norm(
    sys: &TruncatedSystem,
    signal: &InputSignal,
    t_grid: &[f64],
) -> Result<(f64, f64)> {
    if t_grid.is_empty() {
        return Err(CoreError::EmptyTimeGrid);
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_t = t_grid[0];
    for &t in t_grid {
        let norm = phi_state(sys, signal, t).norm();
        if norm > best {
            best = norm;
            best_t = t;
        }
    }
    Ok((best, best_t))
}

/// Geometric time grid on `(0, t_max]` with all signal breakpoints merged
/// in. The divergence witnesses peak exactly at piece endpoints, so those are
/// always included.
pub fn default_time_grid(signal: &InputSignal, t_max: f64, points: usize) -> Vec<f64> {
    assert!(t_max > 0.0 && points >= 2);
    let ratio = 1e-3_f64.powf(1.0 / (points - 1) as f64);
    let mut ts: Vec<f64> = (0..points).map(|i| t_max * ratio.powi(i as i32)).collect();
    for t in signal.breakpoints() {
        if t > 0.0 && t <= t_max {
            ts.push(t);
        }
    }
    ts.push(t_max);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    ts
}

/// Result of the quadrature oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: Complex64,
    /// Richardson indicator `|I_2n - I_n| / 15`, summed over pieces.
    pub error_indicator: f64,
    pub panels: u32,
}

/// Composite-Simpson evaluation of `int_0^t u(s) e^{lambda s} ds`,
/// independent of the antiderivative path.
///
/// Panels are sized from the residual oscillation `|Im lambda - omega|` of
/// each piece (and the decay rate `|Re lambda|`), then doubled until the
/// Richardson indicator meets `rel_tol`.
pub fn quadrature_oracle(
    lambda: Complex64,
    signal: &InputSignal,
    t: f64,
    panels_per_period: u32,
    rel_tol: f64,
) -> Result<QuadratureEstimate> {
    assert!(t >= 0.0, "time must be nonnegative");
    assert!(
        panels_per_period >= 8,
        "at least 8 panels per period required"
    );
    let mut value = Complex64::new(0.0, 0.0);
    let mut indicator = 0.0;
    let mut panels_total = 0u32;
    for p in signal.pieces() {
        let a = p.start.max(0.0);
        let b = p.end.min(t);
        if b <= a {
            continue;
        }
        let integrand = |s: f64| -> Complex64 {
            p.amplitude * Complex64::new(0.0, -p.frequency * s).exp() * (lambda * s).exp()
        };
        let rate = (lambda.im - p.frequency).abs().max(lambda.re.abs());
        let periods = (b - a) * rate / std::f64::consts::TAU;
        let mut n = (panels_per_period as f64 * periods.max(1.0)).ceil() as u32;
        let mut coarse = simpson(&integrand, a, b, n);
        let mut converged = false;
        let mut last_err = f64::INFINITY;
        // refinement is capped: once the indicator sits at the roundoff
        // floor (or the panel count explodes) the tolerance is unreachable
        while n <= (1 << 22) {
            let fine = simpson(&integrand, a, b, 2 * n);
            let err = (fine - coarse).norm() / 15.0;
            if err <= rel_tol * (1.0 + fine.norm()) {
                value += fine;
                indicator += err;
                panels_total = panels_total.saturating_add(2 * n);
                converged = true;
                break;
            }
            if err >= 0.5 * last_err && err <= 1e-14 * (1.0 + fine.norm()) {
                break;
            }
            last_err = err;
            coarse = fine;
            n *= 2;
        }
        if !converged {
            return Err(CoreError::QuadratureTolerance {
                tol: rel_tol,
                indicator: last_err,
                panels: n,
            });
        }
    }
    Ok(QuadratureEstimate {
        value,
        error_indicator: indicator,
        panels: panels_total,
    })
}

/// Composite Simpson with `n` subintervals (endpoint + midpoint form).
fn simpson<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, n: u32) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let s0 = a + i as f64 * h;
        let s1 = if i == n - 1 { b } else { s0 + h };
        let mid = 0.5 * (s0 + s1);
        acc += (f(s0) + 4.0 * f(mid) + f(s1)) * ((s1 - s0) / 6.0);
    }
    acc
}
