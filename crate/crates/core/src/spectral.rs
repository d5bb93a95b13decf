//! Diagonal generator families, truncation and perturbation structure.
//!
//! Systems are never stored as data tables: a [`DiagonalSystem`] is a closed
//! form (the [`Family`]) plus the index window that is currently
//! materialized. All tail quantities (control norms, weighted sums, `M`
//! bounds, criterion sums) come from per-family integral-test brackets, so
//! every truncated result carries a certified bound on what the omitted
//! modes contribute.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::numeric::{
    convex_tail_bracket, integer_sqrt, pairwise_sum_fn, SumWithTail, TailBound, TailSum,
};

/// Mode index. Example-1-style families live on k >= 1, the
/// Example-2 families on all of Z.
pub type ModeIndex = i64;

/// Contiguous inclusive index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub lo: ModeIndex,
    pub hi: ModeIndex,
}

impl IndexWindow {
    pub fn new(lo: ModeIndex, hi: ModeIndex) -> Self {
        assert!(lo <= hi, "empty index window [{lo}, {hi}]");
        IndexWindow { lo, hi }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    /// Windows are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: ModeIndex) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = ModeIndex> {
        self.lo..=self.hi
    }
}

/// Imaginary-part profile `beta_k` for the Example 1 generator.
///
/// The linear profile `beta_k = k` is the default; a custom strictly
/// increasing table may be supplied instead. Closed-form tail bounds are
/// only available for the linear profile, so custom profiles fall back to
/// coarser (still certified) bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaProfile {
    Linear,
    Custom(Vec<f64>),
}

impl BetaProfile {
    fn validate(&self, window_hi: i64) -> Result<()> {
        match self {
            BetaProfile::Linear => Ok(()),
            BetaProfile::Custom(table) => {
                for i in 1..table.len() {
                    if table[i] <= table[i - 1] {
                        return Err(CoreError::BetaNotIncreasing(i));
                    }
                }
                if (table.len() as i64) < window_hi {
                    return Err(CoreError::BetaTableTooShort {
                        have: table.len(),
                        need: window_hi as usize,
                    });
                }
                Ok(())
            }
        }
    }

    /// `beta_k` for `k >= 1`.
    pub fn value(&self, k: ModeIndex) -> f64 {
        debug_assert!(k >= 1);
        match self {
            BetaProfile::Linear => k as f64,
            BetaProfile::Custom(table) => table[(k - 1) as usize],
        }
    }
}

/// Parameters of the synthetic power-law family on k >= 1:
/// `lambda_k = -alpha_coeff k^alpha_pow + i beta_coeff k^beta_pow` and
/// `b_k = control_coeff k^-control_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub alpha_coeff: f64,
    pub alpha_pow: f64,
    pub beta_coeff: f64,
    pub beta_pow: f64,
    pub control_coeff: f64,
    pub control_pow: f64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.alpha_coeff.is_nan() || self.alpha_coeff <= 0.0 {
            return Err(CoreError::InvalidSynthetic(format!(
                "alpha_coeff must be positive for Re lambda_k < 0, got {}",
                self.alpha_coeff
            )));
        }
        if self.control_coeff < 0.0 {
            return Err(CoreError::InvalidSynthetic(
                "control_coeff must be nonnegative".into(),
            ));
        }
        let im_separates = self.beta_coeff != 0.0 && self.beta_pow != 0.0;
        let re_separates = self.alpha_pow != 0.0;
        if !im_separates && !re_separates {
            return Err(CoreError::InvalidSynthetic(
                "eigenvalues would not be pairwise distinct".into(),
            ));
        }
        Ok(())
    }
}

/// Canonical form of the eigenvalue closed form, used to decide whether two
/// families have identical spectra (finite-rank-zero perturbation) or not.
#[derive(Debug, Clone, PartialEq)]
enum EigenForm {
    PowerLaw { a: f64, p: f64, c: f64, q: f64 },
    CustomBeta(Vec<f64>),
    Example2A,
    Example2Aprime,
}

/// Generator family: the closed forms for `lambda_k` and `b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Example 1 diagonal part: `lambda_k = -1/k + i beta_k`, perfect-square
    /// indices get `b_k = k^(-3/8)`, all others `b_k = 1/k`.
    Example1A0 { beta: BetaProfile },
    /// Example 2 first generator on Z.
    Example2A,
    /// Example 2 perturbed generator on Z.
    Example2Aprime,
    /// Synthetic power-law family on k >= 1.
    Synthetic(SyntheticSpec),
}

impl Family {
    /// Name used in reports and file artifacts.
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Example1A0 { .. } => "example1-A0",
            Family::Example2A => "example2-A",
            Family::Example2Aprime => "example2-Aprime",
            Family::Synthetic(_) => "synthetic",
        }
    }

    /// Whether `k` is in the family's index set.
    pub fn is_valid_index(&self, k: ModeIndex) -> bool {
        match self {
            Family::Example1A0 {
                beta: BetaProfile::Custom(t),
            } => k >= 1 && k <= t.len() as i64,
            Family::Example1A0 { .. } | Family::Synthetic(_) => k >= 1,
            Family::Example2A | Family::Example2Aprime => true,
        }
    }

    /// Closed-form eigenvalue. Panics on an index outside the family's
    /// index set; construction-time validation keeps callers inside it.
    pub fn eigenvalue(&self, k: ModeIndex) -> Complex64 {
        assert!(
            self.is_valid_index(k),
            "mode index {k} invalid for {}",
            self.tag()
        );
        match self {
            Family::Example1A0 { beta } => Complex64::new(-1.0 / k as f64, beta.value(k)),
            Family::Example2A => {
                if k >= 1 {
                    Complex64::new(-1.0 / (k as f64).sqrt(), k as f64)
                } else {
                    Complex64::new(-((-k) as f64 + 1.0).sqrt(), 0.0)
                }
            }
            Family::Example2Aprime => {
                if k >= 1 {
                    Complex64::new(-(-(k as f64)).exp(), k as f64)
                } else {
                    Complex64::new(-((-k) as f64 + 1.0).sqrt(), 0.0)
                }
            }
            Family::Synthetic(s) => Complex64::new(
                -s.alpha_coeff * (k as f64).powf(s.alpha_pow),
                s.beta_coeff * (k as f64).powf(s.beta_pow),
            ),
        }
    }

    /// Closed-form control coefficient (real in every family).
    pub fn control(&self, k: ModeIndex) -> Complex64 {
        assert!(
            self.is_valid_index(k),
            "mode index {k} invalid for {}",
            self.tag()
        );
        let b = match self {
            Family::Example1A0 { .. } => {
                if is_perfect_square(k as u64) {
                    (k as f64).powf(-0.375)
                } else {
                    1.0 / k as f64
                }
            }
            Family::Example2A | Family::Example2Aprime => {
                if k >= 1 {
                    1.0 / k as f64
                } else if k == 0 {
                    0.0
                } else {
                    1.0 / ((-k) as f64).sqrt()
                }
            }
            Family::Synthetic(s) => s.control_coeff * (k as f64).powf(-s.control_pow),
        };
        Complex64::new(b, 0.0)
    }

    fn eigen_form(&self) -> EigenForm {
        match self {
            Family::Example1A0 {
                beta: BetaProfile::Linear,
            } => EigenForm::PowerLaw {
                a: 1.0,
                p: -1.0,
                c: 1.0,
                q: 1.0,
            },
            Family::Example1A0 {
                beta: BetaProfile::Custom(t),
            } => EigenForm::CustomBeta(t.clone()),
            Family::Example2A => EigenForm::Example2A,
            Family::Example2Aprime => EigenForm::Example2Aprime,
            Family::Synthetic(s) => EigenForm::PowerLaw {
                a: s.alpha_coeff,
                p: s.alpha_pow,
                c: s.beta_coeff,
                q: s.beta_pow,
            },
        }
    }

    fn on_integers(&self) -> bool {
        matches!(self, Family::Example2A | Family::Example2Aprime)
    }

    /// Whether `|lambda_k| -> infinity` holds by closed form (the compact
    /// resolvent hypothesis). Custom beta tables are finite, so the limit
    /// cannot be certified for them.
    pub fn abs_lambda_unbounded(&self) -> bool {
        match self {
            Family::Example1A0 {
                beta: BetaProfile::Linear,
            } => true,
            Family::Example1A0 {
                beta: BetaProfile::Custom(_),
            } => false,
            Family::Example2A | Family::Example2Aprime => true,
            Family::Synthetic(s) => s.alpha_pow > 0.0 || (s.beta_coeff != 0.0 && s.beta_pow > 0.0),
        }
    }

    /// `sup { Re lambda_k : k outside the window }`.
    pub fn tail_sup_re(&self, window: IndexWindow) -> f64 {
        match self {
            // -1/k increases to 0 beyond any window
            Family::Example1A0 { .. } => 0.0,
            // positive side tends to 0 from below in both variants
            Family::Example2A | Family::Example2Aprime => 0.0,
            Family::Synthetic(s) => {
                let next = (window.hi + 1) as f64;
                if s.alpha_pow > 0.0 {
                    -s.alpha_coeff * next.powf(s.alpha_pow)
                } else if s.alpha_pow == 0.0 {
                    -s.alpha_coeff
                } else {
                    0.0
                }
            }
        }
    }

    /// Certified lower bound on `min { |lambda_k| : k outside the window }`.
    /// Grows without bound exactly when [`Self::abs_lambda_unbounded`].
    pub fn tail_min_abs_lambda(&self, window: IndexWindow) -> f64 {
        let next = (window.hi + 1) as f64;
        match self {
            Family::Example1A0 {
                beta: BetaProfile::Linear,
            } => next,
            Family::Example1A0 {
                beta: BetaProfile::Custom(t),
            } => {
                // monotone profile: beta_k >= last materialized entry
                t.last().copied().unwrap_or(0.0)
            }
            Family::Example2A | Family::Example2Aprime => (next + 1.0).sqrt(),
            Family::Synthetic(s) => {
                if s.beta_coeff != 0.0 && s.beta_pow > 0.0 {
                    s.beta_coeff.abs() * next.powf(s.beta_pow)
                } else if s.alpha_pow > 0.0 {
                    s.alpha_coeff * next.powf(s.alpha_pow)
                } else {
                    0.0
                }
            }
        }
    }

    /// Bracket for `sum_{k>N} k^-s` (positive integers); divergent for s <= 1.
    fn power_tail(n: i64, s: f64) -> TailSum {
        if s <= 1.0 {
            return TailSum::Divergent;
        }
        let a = (n + 1) as f64;
        TailSum::Finite(convex_tail_bracket(a, a.powf(-s), |x| {
            x.powf(1.0 - s) / (s - 1.0)
        }))
    }

    /// Tail of `sum |b_k|^2` outside the window.
    pub fn b_sq_tail(&self, window: IndexWindow) -> TailSum {
        match self {
            Family::Example1A0 { .. } => {
                let n = window.hi;
                // perfect squares k = l^2 > N contribute l^-(3/2)
                let l0 = integer_sqrt(n as u64) as i64 + 1;
                let squares = Self::power_tail(l0 - 1, 1.5);
                // non-squares contribute k^-2; subtract the squares' k^-2 part
                let all_inv_sq = Self::power_tail(n, 2.0);
                let squares_inv_sq = Self::power_tail(l0 - 1, 4.0);
                match (squares, all_inv_sq, squares_inv_sq) {
                    (TailSum::Finite(sq), TailSum::Finite(all), TailSum::Finite(sq4)) => {
                        TailSum::Finite(TailBound {
                            lower: sq.lower + (all.lower - sq4.upper).max(0.0),
                            upper: sq.upper + all.upper,
                        })
                    }
                    _ => unreachable!("all three exponents exceed 1"),
                }
            }
            Family::Example2A | Family::Example2Aprime => {
                // negative side sums 1/|k|, a divergent harmonic tail
                TailSum::Divergent
            }
            Family::Synthetic(s) => Self::power_tail(window.hi, 2.0 * s.control_pow)
                .scale(s.control_coeff * s.control_coeff),
        }
    }

    /// Tail of the extrapolation-space sum `sum |b_k|^2 / (1 + |lambda_k|^2)`.
    pub fn weighted_b_sq_tail(&self, window: IndexWindow) -> TailSum {
        match self {
            Family::Example1A0 { beta } => {
                let n = window.hi;
                match beta {
                    BetaProfile::Linear => {
                        // b_k^2 <= k^(-3/4) and 1 + |lambda_k|^2 >= k^2
                        let upper = match Self::power_tail(n, 2.75) {
                            TailSum::Finite(b) => b.upper,
                            TailSum::Divergent => unreachable!(),
                        };
                        // b_k^2 >= k^-2 and 1 + |lambda_k|^2 <= 3 k^2
                        let lower = match Self::power_tail(n, 4.0) {
                            TailSum::Finite(b) => b.lower / 3.0,
                            TailSum::Divergent => unreachable!(),
                        };
                        TailSum::Finite(TailBound { lower, upper })
                    }
                    BetaProfile::Custom(t) => {
                        // beta is increasing, so 1 + |lambda_k|^2 >= 1 + beta_N^2
                        let beta_last = t.last().copied().unwrap_or(0.0);
                        let scale = 1.0 / (1.0 + beta_last * beta_last);
                        match self.b_sq_tail(window) {
                            TailSum::Finite(b) => TailSum::Finite(TailBound {
                                lower: 0.0,
                                upper: b.upper * scale,
                            }),
                            TailSum::Divergent => TailSum::Divergent,
                        }
                    }
                }
            }
            Family::Example2A | Family::Example2Aprime => {
                let n = window.hi;
                // positive side: terms lie in [k^-4 / 3, k^-4]
                let pos = match Self::power_tail(n, 4.0) {
                    TailSum::Finite(b) => TailBound {
                        lower: b.lower / 3.0,
                        upper: b.upper,
                    },
                    TailSum::Divergent => unreachable!(),
                };
                // negative side telescopes exactly:
                // sum_{m>N} 1/(m(m+2)) = (1/(N+1) + 1/(N+2)) / 2
                let m = (-window.lo) as f64;
                let neg = 0.5 * (1.0 / (m + 1.0) + 1.0 / (m + 2.0));
                TailSum::Finite(pos.add(&TailBound::exact(neg)))
            }
            Family::Synthetic(s) => {
                let g2 = s.control_coeff * s.control_coeff;
                if g2 == 0.0 {
                    return TailSum::Finite(TailBound::zero());
                }
                let two_m = (2.0 * s.alpha_pow).max(2.0 * s.beta_pow).max(0.0);
                let exponent = 2.0 * s.control_pow + two_m;
                if exponent <= 1.0 {
                    return TailSum::Divergent;
                }
                let a2 = s.alpha_coeff * s.alpha_coeff;
                let c2 = s.beta_coeff * s.beta_coeff;
                let denom_hi = 1.0 + a2 + c2;
                let denom_lo = if two_m == 0.0 {
                    1.0
                } else if 2.0 * s.alpha_pow >= 2.0 * s.beta_pow {
                    a2
                } else {
                    c2
                };
                match Self::power_tail(window.hi, exponent) {
                    TailSum::Finite(b) => TailSum::Finite(TailBound {
                        lower: g2 * b.lower / denom_hi,
                        upper: g2 * b.upper / denom_lo,
                    }),
                    TailSum::Divergent => TailSum::Divergent,
                }
            }
        }
    }

    /// Tail of the criterion constant `M = sum |b_k|^2 / |Re lambda_k|`.
    pub fn m_tail(&self, window: IndexWindow) -> TailSum {
        match self {
            // non-square indices alone contribute k |b_k|^2 = 1/k
            Family::Example1A0 { .. } => TailSum::Divergent,
            Family::Example2A => {
                let n = window.hi;
                let pos = Self::power_tail(n, 1.5);
                // negative side: f(m) = 1/(m sqrt(m+1)),
                // int f = ln((sqrt(x+1)+1)/(sqrt(x+1)-1))
                let m = (-window.lo) as f64;
                let a = m + 1.0;
                let f_a = 1.0 / (a * (a + 1.0).sqrt());
                let neg = convex_tail_bracket(a, f_a, |x| {
                    let s = (x + 1.0).sqrt();
                    ((s + 1.0) / (s - 1.0)).ln()
                });
                pos.add(&TailSum::Finite(neg))
            }
            // positive side terms e^k / k^2 grow without bound
            Family::Example2Aprime => TailSum::Divergent,
            Family::Synthetic(s) => {
                let g2 = s.control_coeff * s.control_coeff;
                if g2 == 0.0 {
                    return TailSum::Finite(TailBound::zero());
                }
                Self::power_tail(window.hi, 2.0 * s.control_pow + s.alpha_pow)
                    .scale(g2 / s.alpha_coeff)
            }
        }
    }

    /// Tail of the criterion sum `S(z) = sum |b_k|^2 / |z - lambda_k|^2`
    /// outside the window, for `Re z > 0`.
    ///
    /// Modes between the window edge and the point where `|Im z - Im
    /// lambda_k|` starts to dominate are evaluated exactly from the closed
    /// forms; beyond that an integral bracket applies.
    pub fn criterion_tail(&self, window: IndexWindow, z: Complex64) -> TailSum {
        debug_assert!(z.re > 0.0);
        match self {
            Family::Example1A0 { beta } => match beta {
                BetaProfile::Linear => {
                    let exact = self.exact_extension_pos(window.hi, z);
                    // |b_k|^2 <= k^(-3/4), |Im z - k|^2 >= k^2/4 past K
                    let k_edge = self.im_dominance_edge(window.hi, z, 1.0, 1.0);
                    let beyond = 4.0 * (4.0 / 7.0) * (k_edge as f64 + 0.5).powf(-1.75);
                    TailSum::Finite(TailBound {
                        lower: exact,
                        upper: exact + beyond,
                    })
                }
                BetaProfile::Custom(_) => {
                    // no closed form past the table; |z - lambda_k| >= Re z
                    match self.b_sq_tail(window) {
                        TailSum::Finite(b) => TailSum::Finite(TailBound {
                            lower: 0.0,
                            upper: b.upper / (z.re * z.re),
                        }),
                        TailSum::Divergent => TailSum::Divergent,
                    }
                }
            },
            Family::Example2A | Family::Example2Aprime => {
                let exact = self.exact_extension_pos(window.hi, z);
                let k_edge = self.im_dominance_edge(window.hi, z, 1.0, 1.0);
                // |b_k|^2 = k^-2 and |z - lambda_k|^2 >= k^2/4 past K
                let pos_beyond = 4.0 / 3.0 * (k_edge as f64 + 0.5).powi(-3);
                // negative side: |z - lambda_k|^2 >= (m+1), terms <= 1/(m(m+1)),
                // which telescopes to 1/(N+1)
                let m = (-window.lo) as f64;
                let neg = 1.0 / (m + 1.0);
                TailSum::Finite(TailBound {
                    lower: exact,
                    upper: exact + pos_beyond + neg,
                })
            }
            Family::Synthetic(s) => {
                let g2 = s.control_coeff * s.control_coeff;
                if g2 == 0.0 {
                    return TailSum::Finite(TailBound::zero());
                }
                let re_exp = 2.0 * s.control_pow + 2.0 * s.alpha_pow;
                let im_exp = 2.0 * s.control_pow + 2.0 * s.beta_pow;
                if s.alpha_pow > 0.0 && re_exp > 1.0 {
                    // |z - lambda_k|^2 >= (Re z + a k^p)^2 >= a^2 k^(2p)
                    Self::power_tail(window.hi, re_exp).scale(g2 / (s.alpha_coeff * s.alpha_coeff))
                } else if s.beta_coeff > 0.0 && s.beta_pow > 0.0 && im_exp > 1.0 {
                    let exact = self.exact_extension_pos(window.hi, z);
                    let k_edge = self.im_dominance_edge(window.hi, z, s.beta_coeff, s.beta_pow);
                    let beyond = match Self::power_tail(k_edge, im_exp)
                        .scale(4.0 * g2 / (s.beta_coeff * s.beta_coeff))
                    {
                        TailSum::Finite(b) => b.upper,
                        TailSum::Divergent => unreachable!(),
                    };
                    TailSum::Finite(TailBound {
                        lower: exact,
                        upper: exact + beyond,
                    })
                } else {
                    match self.b_sq_tail(window) {
                        TailSum::Finite(b) => TailSum::Finite(TailBound {
                            lower: 0.0,
                            upper: b.upper / (z.re * z.re),
                        }),
                        TailSum::Divergent => TailSum::Divergent,
                    }
                }
            }
        }
    }

    /// First index `K >= n` past which `|Im lambda_k| >= 2 max(Im z, 0)`,
    /// i.e. `|Im z - Im lambda_k| >= |Im lambda_k| / 2`.
    fn im_dominance_edge(&self, n: i64, z: Complex64, c: f64, q: f64) -> i64 {
        let im = z.im.max(0.0);
        if im == 0.0 {
            return n;
        }
        let k_min = (2.0 * im / c).powf(1.0 / q).ceil() as i64;
        n.max(k_min)
    }

    /// Exact sum of `|b_k|^2 / |z - lambda_k|^2` for window-adjacent
    /// positive modes up to the imaginary-dominance edge.
    fn exact_extension_pos(&self, n: i64, z: Complex64) -> f64 {
        let (c, q) = match self {
            Family::Example1A0 {
                beta: BetaProfile::Linear,
            } => (1.0, 1.0),
            Family::Example2A | Family::Example2Aprime => (1.0, 1.0),
            Family::Synthetic(s) => (s.beta_coeff, s.beta_pow),
            _ => return 0.0,
        };
        let k_edge = self.im_dominance_edge(n, z, c, q);
        if k_edge <= n {
            return 0.0;
        }
        let lo = (n + 1) as usize;
        let hi = (k_edge + 1) as usize;
        pairwise_sum_fn(lo, hi, &|i| {
            let k = i as i64;
            let b = self.control(k).re;
            b * b / (z - self.eigenvalue(k)).norm_sqr()
        })
    }
}

fn is_perfect_square(k: u64) -> bool {
    let r = integer_sqrt(k);
    r * r == k
}

/// Membership test for the first example's perfect-square index set.
///
/// Uses integer arithmetic only; floating-point square roots misclassify
/// near large squares.
pub fn is_in_i1(k: ModeIndex) -> Result<bool> {
    if k <= 0 {
        return Err(CoreError::InvalidModeIndex(k));
    }
    Ok(is_perfect_square(k as u64))
}

/// A diagonal generator together with its scalar control sequence,
/// materialized lazily over `window` from the family closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSystem {
    family: Family,
    window: IndexWindow,
}

impl DiagonalSystem {
    pub fn new(family: Family, window: IndexWindow) -> Result<Self> {
        if let Family::Example1A0 { beta } = &family {
            beta.validate(window.hi)?;
        }
        if let Family::Synthetic(s) = &family {
            s.validate()?;
        }
        if !family.is_valid_index(window.lo) || !family.is_valid_index(window.hi) {
            return Err(CoreError::InvalidModeIndex(
                if family.is_valid_index(window.hi) {
                    window.lo
                } else {
                    window.hi
                },
            ));
        }
        Ok(DiagonalSystem { family, window })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn window(&self) -> IndexWindow {
        self.window
    }

    pub fn eigenvalue(&self, k: ModeIndex) -> Complex64 {
        self.family.eigenvalue(k)
    }

    pub fn control(&self, k: ModeIndex) -> Complex64 {
        self.family.control(k)
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> {
        self.window.iter()
    }

    /// Same family on a narrower window of half-width `n`.
    pub fn restrict(&self, n: usize) -> Result<DiagonalSystem> {
        let window = self.subwindow(n)?;
        Ok(DiagonalSystem {
            family: self.family.clone(),
            window,
        })
    }

    fn subwindow(&self, n: usize) -> Result<IndexWindow> {
        if n == 0 {
            return Err(CoreError::EmptyWindow(0));
        }
        let extent = self.window.hi as usize;
        if n > extent {
            return Err(CoreError::TruncationOutOfWindow { n, max: extent });
        }
        Ok(if self.family.on_integers() {
            IndexWindow::new(-(n as i64), n as i64)
        } else {
            IndexWindow::new(1, n as i64)
        })
    }

    /// Windowed extrapolation-space sum `sum |b_k|^2 / (1 + |lambda_k|^2)`
    /// with its certified tail. Finiteness of this quantity is what stands
    /// in for membership of the control sequence in `X_{-1}`.
    pub fn x_minus1_report(&self) -> SumWithTail {
        let modes: Vec<ModeIndex> = self.modes().collect();
        let window = pairwise_sum_fn(0, modes.len(), &|i| {
            let k = modes[i];
            let b = self.control(k).re;
            b * b / (1.0 + self.eigenvalue(k).norm_sqr())
        });
        SumWithTail {
            window,
            tail: self.family.weighted_b_sq_tail(self.window),
        }
    }
}

/// Builds the Example 1 diagonal generator `A0` on the window `1..=n`,
/// control sequence included.
pub fn make_example1(n: usize, beta: BetaProfile) -> Result<DiagonalSystem> {
    if n == 0 {
        return Err(CoreError::EmptyWindow(0));
    }
    DiagonalSystem::new(Family::Example1A0 { beta }, IndexWindow::new(1, n as i64))
}

/// Builds the Example 2 pair `(A, A')` on the window `-n..=n`. Both systems
/// share the same control sequence.
pub fn make_example2(n: usize) -> Result<(DiagonalSystem, DiagonalSystem)> {
    if n == 0 {
        return Err(CoreError::EmptyWindow(0));
    }
    let window = IndexWindow::new(-(n as i64), n as i64);
    Ok((
        DiagonalSystem::new(Family::Example2A, window)?,
        DiagonalSystem::new(Family::Example2Aprime, window)?,
    ))
}

/// Builds a synthetic power-law system on `1..=n`.
pub fn make_synthetic(spec: SyntheticSpec, n: usize) -> Result<DiagonalSystem> {
    if n == 0 {
        return Err(CoreError::EmptyWindow(0));
    }
    DiagonalSystem::new(Family::Synthetic(spec), IndexWindow::new(1, n as i64))
}

/// How the control operator sits relative to the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlClass {
    /// `sum |b_k|^2 < infinity`: B maps into X.
    Bounded,
    /// `sum |b_k|^2 = infinity` but the weighted sum converges: B lands in
    /// `X_{-1} \ X`.
    Unbounded,
    /// Even the weighted sum diverges; the sequence is not a control
    /// operator for this generator at all.
    InadmissibleForXMinus1,
}

/// Outcome of [`classify_control`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub class: ControlClass,
    /// `sum |b_k|^2`, windowed plus tail.
    pub norm_sq: SumWithTail,
    /// `sum |b_k|^2 / (1 + |lambda_k|^2)`, windowed plus tail.
    pub weighted: SumWithTail,
}

/// Decides boundedness of the control operator from the family's certified
/// tail estimates.
pub fn classify_control(sys: &DiagonalSystem) -> ControlReport {
    let modes: Vec<ModeIndex> = sys.modes().collect();
    let window_b_sq = pairwise_sum_fn(0, modes.len(), &|i| {
        let b = sys.control(modes[i]).re;
        b * b
    });
    let norm_sq = SumWithTail {
        window: window_b_sq,
        tail: sys.family().b_sq_tail(sys.window()),
    };
    let weighted = sys.x_minus1_report();
    let class = if norm_sq.is_finite() {
        ControlClass::Bounded
    } else if weighted.is_finite() {
        ControlClass::Unbounded
    } else {
        ControlClass::InadmissibleForXMinus1
    };
    ControlReport {
        class,
        norm_sq,
        weighted,
    }
}

/// Declared rank of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank {
    Finite(usize),
    Infinite,
}

/// Diagonal perturbation `q_k = lambda'_k - lambda_k` between two systems
/// on the same window, with its compactness diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSequence {
    window: IndexWindow,
    entries: Vec<Complex64>,
    declared_rank: Rank,
    sup_abs: f64,
    tail_sup_beyond_window: f64,
    tail_sup_profile: Vec<(ModeIndex, f64)>,
}

impl PerturbationSequence {
    pub fn window(&self) -> IndexWindow {
        self.window
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, k: ModeIndex) -> Complex64 {
        assert!(self.window.contains(k));
        self.entries[(k - self.window.lo) as usize]
    }

    pub fn declared_rank(&self) -> Rank {
        self.declared_rank
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|q| q.norm() != 0.0).count()
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    /// Certified upper bound on `sup { |q_k| : k outside the window }`.
    pub fn tail_sup_beyond_window(&self) -> f64 {
        self.tail_sup_beyond_window
    }

    /// `(cutoff, sup_{|k| > cutoff} |q_k|)` pairs; the decay of this profile
    /// is the computable surrogate for compactness of the perturbation.
    pub fn tail_sup_profile(&self) -> &[(ModeIndex, f64)] {
        &self.tail_sup_profile
    }

    /// Restriction to the sub-window of half-width `n`.
    pub fn restrict(&self, n: usize) -> Result<PerturbationSequence> {
        if n == 0 {
            return Err(CoreError::EmptyWindow(0));
        }
        let on_z = self.window.lo < 0;
        let sub = if on_z {
            IndexWindow::new(-(n as i64), n as i64)
        } else {
            IndexWindow::new(1, n as i64)
        };
        if !self.window.contains(sub.lo) || !self.window.contains(sub.hi) {
            return Err(CoreError::TruncationOutOfWindow {
                n,
                max: self.window.hi as usize,
            });
        }
        let entries: Vec<Complex64> = sub.iter().map(|k| self.entry(k)).collect();
        Ok(build_perturbation(
            sub,
            entries,
            self.declared_rank,
            self.tail_sup_beyond_window,
        ))
    }
}

fn build_perturbation(
    window: IndexWindow,
    entries: Vec<Complex64>,
    declared_rank: Rank,
    tail_sup_beyond_window: f64,
) -> PerturbationSequence {
    let sup_abs = entries
        .iter()
        .map(|q| q.norm())
        .fold(0.0_f64, f64::max)
        .max(tail_sup_beyond_window);
    // geometric cutoffs across the window, largest first
    let mut cutoffs = Vec::new();
    let mut c = window.hi;
    while c >= 1 {
        cutoffs.push(c);
        c /= 2;
    }
    cutoffs.reverse();
    let tail_sup_profile = cutoffs
        .into_iter()
        .map(|cut| {
            let materialized = window
                .iter()
                .filter(|k| k.abs() > cut)
                .map(|k| entries[(k - window.lo) as usize].norm())
                .fold(0.0_f64, f64::max);
            (cut, materialized.max(tail_sup_beyond_window))
        })
        .collect();
    PerturbationSequence {
        window,
        entries,
        declared_rank,
        sup_abs,
        tail_sup_beyond_window,
        tail_sup_profile,
    }
}

/// Entrywise difference `lambda'_k - lambda_k` between two diagonal systems
/// on the same window.
pub fn perturbation_between(
    from: &DiagonalSystem,
    to: &DiagonalSystem,
) -> Result<PerturbationSequence> {
    if from.window() != to.window() {
        return Err(CoreError::WindowMismatch(
            from.window().lo,
            from.window().hi,
            to.window().lo,
            to.window().hi,
        ));
    }
    let window = from.window();
    let entries: Vec<Complex64> = window
        .iter()
        .map(|k| to.eigenvalue(k) - from.eigenvalue(k))
        .collect();

    let form_from = from.family().eigen_form();
    let form_to = to.family().eigen_form();
    let declared_rank = if form_from == form_to {
        Rank::Finite(0)
    } else {
        Rank::Infinite
    };

    let tail_sup_beyond = perturbation_tail_sup(&form_from, &form_to, window)?;
    Ok(build_perturbation(
        window,
        entries,
        declared_rank,
        tail_sup_beyond,
    ))
}

/// `sup_{k >= next} |c1 k^p1 - c2 k^p2|`; errors when the difference grows.
fn power_diff_sup(c1: f64, p1: f64, c2: f64, p2: f64, next: f64) -> Result<f64> {
    // equal powers collapse into one term, which may cancel growth
    let terms: [(f64, f64); 2] = if p1 == p2 {
        [(c1 - c2, p1), (0.0, 0.0)]
    } else {
        [(c1, p1), (c2, p2)]
    };
    let mut bound = 0.0;
    for (c, p) in terms {
        if c == 0.0 {
            continue;
        }
        if p > 0.0 {
            return Err(CoreError::PerturbationUnbounded);
        }
        bound += c.abs() * next.powf(p);
    }
    Ok(bound)
}

/// Closed-form upper bound for `sup |q_k|` beyond the window; errors when
/// the difference of the closed forms is unbounded.
fn perturbation_tail_sup(a: &EigenForm, b: &EigenForm, window: IndexWindow) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let next = (window.hi + 1) as f64;
    match (a, b) {
        // the example-2 pair: q_k = 1/sqrt(k) - e^-k for k > 0, zero on k <= 0;
        // both pieces decrease, so their window-edge values bound the sup
        (EigenForm::Example2A, EigenForm::Example2Aprime)
        | (EigenForm::Example2Aprime, EigenForm::Example2A) => Ok(next.powf(-0.5) + (-next).exp()),
        (
            EigenForm::PowerLaw {
                a: a1,
                p: p1,
                c: c1,
                q: q1,
            },
            EigenForm::PowerLaw {
                a: a2,
                p: p2,
                c: c2,
                q: q2,
            },
        ) => {
            let re = power_diff_sup(*a1, *p1, *a2, *p2, next)?;
            let im = power_diff_sup(*c1, *q1, *c2, *q2, next)?;
            Ok(re + im)
        }
        _ => Err(CoreError::PerturbationUnbounded),
    }
}

/// Finite materialization of a [`DiagonalSystem`] plus certified tail data.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSystem {
    origin: DiagonalSystem,
    window: IndexWindow,
    lambda: Vec<Complex64>,
    b: Vec<Complex64>,
    tail_sup_re: f64,
    tail_b_sq: TailSum,
}

impl TruncatedSystem {
    pub fn origin(&self) -> &DiagonalSystem {
        &self.origin
    }

    pub fn family(&self) -> &Family {
        self.origin.family()
    }

    pub fn window(&self) -> IndexWindow {
        self.window
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn lambda(&self) -> &[Complex64] {
        &self.lambda
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    /// Mode index of storage slot `i`.
    pub fn mode_at(&self, i: usize) -> ModeIndex {
        self.window.lo + i as i64
    }

    /// Storage slot of mode `k`.
    pub fn slot_of(&self, k: ModeIndex) -> Option<usize> {
        self.window
            .contains(k)
            .then(|| (k - self.window.lo) as usize)
    }

    /// `sup { Re lambda_k : k outside the window }`.
    pub fn tail_sup_re(&self) -> f64 {
        self.tail_sup_re
    }

    /// Tail of `sum |b_k|^2` outside the window.
    pub fn tail_b_sq(&self) -> TailSum {
        self.tail_b_sq
    }

    /// Largest `|Im lambda_k|` in the window.
    pub fn max_abs_im(&self) -> f64 {
        self.lambda.iter().map(|l| l.im.abs()).fold(0.0, f64::max)
    }

    /// Largest `Re lambda_k` in the window.
    pub fn max_re(&self) -> f64 {
        self.lambda
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn b_norm_sq(&self) -> f64 {
        crate::numeric::l2_norm_sq(&self.b)
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm_sq().sqrt()
    }
}

/// Restriction of `sys` to half-width `n`, together with family-specific
/// tail data for the omitted modes.
pub fn truncate(sys: &DiagonalSystem, n: usize) -> Result<TruncatedSystem> {
    let restricted = sys.restrict(n)?;
    let window = restricted.window();
    let lambda: Vec<Complex64> = window.iter().map(|k| sys.eigenvalue(k)).collect();
    let b: Vec<Complex64> = window.iter().map(|k| sys.control(k)).collect();
    Ok(TruncatedSystem {
        origin: sys.clone(),
        window,
        lambda,
        b,
        tail_sup_re: sys.family().tail_sup_re(window),
        tail_b_sq: sys.family().b_sq_tail(window),
    })
}
