//! Run configuration: one JSON file plus flag overrides, flags winning.
//! Every default that influences the numbers ends up echoed in the result.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use admissibility_core::criterion::GridSpec;
use admissibility_core::feedback::DENSE_LIMIT;
use admissibility_core::spectral::BetaProfile;

/// The named experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Lower bounds on `sup_t ||Phi_t||^2` for the first example's diagonal
    /// generator, via the witness inputs `u_n`.
    Ex1Divergence,
    /// Stabilized system `A0 - BB*`: hypotheses, the `1/2 ||u||^2` bound,
    /// rank-one structure of `Q = BB*` and the non-exponential witnesses.
    Ex1Feedback,
    /// Criterion sums and `M` bound for the second example's generator `A`.
    Ex2Criterion,
    /// Witness probes `z_n = e^-n + i n` against the perturbed generator.
    Ex2Divergence,
    /// The diagonal perturbation `Q = A' - A` and its compactness profile.
    Ex2Perturbation,
    /// Sup search of `Re z * S(z)` for a configurable system.
    CriterionScan,
    /// Spectrum, contraction and decay diagnostics.
    StabilityReport,
    /// Deterministic invariant battery; nonzero exit on any violation.
    Selftest,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Ex1Divergence => "ex1-divergence",
            Experiment::Ex1Feedback => "ex1-feedback",
            Experiment::Ex2Criterion => "ex2-criterion",
            Experiment::Ex2Divergence => "ex2-divergence",
            Experiment::Ex2Perturbation => "ex2-perturbation",
            Experiment::CriterionScan => "criterion-scan",
            Experiment::StabilityReport => "stability-report",
            Experiment::Selftest => "selftest",
        }
    }
}

/// Which generator a generic experiment targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SystemChoice {
    /// Example 1 diagonal part (feedback is applied where relevant).
    Example1A0,
    Example2A,
    Example2Aprime,
}

/// Numeric knobs, all echoed into the result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Witness value past which an increasing sequence flips the verdict.
    pub divergence_threshold: f64,
    /// Relative tolerance of the quadrature oracle.
    pub quad_rel_tol: f64,
    /// Splitting step for semigroup propagation; `None` picks the
    /// resolution-based default.
    pub evolve_dt: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            divergence_threshold: admissibility_core::criterion::DEFAULT_DIVERGENCE_THRESHOLD,
            quad_rel_tol: 1e-10,
            evolve_dt: None,
        }
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(rename = "N")]
    pub n: usize,
    pub beta_profile: BetaProfile,
    pub n_list: Vec<u64>,
    pub grid: GridSpec,
    pub out_dir: PathBuf,
    pub tolerances: Tolerances,
    pub system: SystemChoice,
}

/// Partial configuration as read from a JSON file; omitted fields fall
/// back to the experiment defaults.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct PartialConfig {
    pub experiment: Option<Experiment>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub beta_profile: Option<BetaProfile>,
    pub n_list: Option<Vec<u64>>,
    pub grid: Option<GridSpec>,
    pub out_dir: Option<PathBuf>,
    pub tolerances: Option<Tolerances>,
    pub system: Option<SystemChoice>,
}

impl RunConfig {
    /// Experiment-specific defaults.
    pub fn default_for(experiment: Experiment) -> RunConfig {
        let (n, n_list): (usize, Vec<u64>) = match experiment {
            Experiment::Ex1Divergence => (12_000, vec![16, 256, 10_000]),
            Experiment::Ex1Feedback => (256, vec![4, 10, 16, 100]),
            Experiment::Ex2Criterion => (2_000, vec![]),
            Experiment::Ex2Divergence => (500, vec![5, 10, 20]),
            Experiment::Ex2Perturbation => (2_000, vec![]),
            Experiment::CriterionScan => (2_000, vec![]),
            Experiment::StabilityReport => (64, vec![5, 10, 20, 30]),
            Experiment::Selftest => (64, vec![]),
        };
        let system = match experiment {
            Experiment::Ex1Divergence | Experiment::Ex1Feedback => SystemChoice::Example1A0,
            Experiment::Ex2Divergence => SystemChoice::Example2Aprime,
            _ => SystemChoice::Example2A,
        };
        RunConfig {
            experiment,
            n,
            beta_profile: BetaProfile::Linear,
            n_list,
            grid: GridSpec::default(),
            out_dir: PathBuf::from("out"),
            tolerances: Tolerances::default(),
            system,
        }
    }

    /// Defaults overridden by a config file, overridden by flags.
    pub fn resolve(
        experiment: Experiment,
        file: Option<PartialConfig>,
        flags: PartialConfig,
    ) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default_for(experiment);
        for layer in [file.unwrap_or_default(), flags] {
            if let Some(n) = layer.n {
                cfg.n = n;
            }
            if let Some(beta) = layer.beta_profile {
                cfg.beta_profile = beta;
            }
            if let Some(n_list) = layer.n_list {
                cfg.n_list = n_list;
            }
            if let Some(grid) = layer.grid {
                cfg.grid = grid;
            }
            if let Some(out) = layer.out_dir {
                cfg.out_dir = out;
            }
            if let Some(t) = layer.tolerances {
                cfg.tolerances = t;
            }
            if let Some(s) = layer.system {
                cfg.system = s;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("N must be positive".into());
        }
        if !(self.grid.re_min > 0.0 && self.grid.re_min < self.grid.re_max) {
            return Err("grid Re range must satisfy 0 < re_min < re_max".into());
        }
        if self.grid.re_points == 0 || self.grid.im_points == 0 {
            return Err("grid must have at least one point per axis".into());
        }
        if self.grid.im_pad < 0.0 {
            return Err("grid im_pad must be nonnegative".into());
        }
        if let BetaProfile::Custom(table) = &self.beta_profile {
            for i in 1..table.len() {
                if table[i] <= table[i - 1] {
                    return Err(format!(
                        "custom beta table must be strictly increasing (position {i})"
                    ));
                }
            }
            let builds_example1 = matches!(
                self.experiment,
                Experiment::Ex1Divergence | Experiment::Ex1Feedback
            ) || (matches!(
                self.experiment,
                Experiment::CriterionScan | Experiment::StabilityReport
            ) && self.system == SystemChoice::Example1A0);
            if builds_example1 && table.len() < self.n {
                return Err(format!(
                    "custom beta table has {} entries but the window needs {}",
                    table.len(),
                    self.n
                ));
            }
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.tolerances.divergence_threshold) {
            return Err("divergence_threshold must be positive".into());
        }
        if !positive(self.tolerances.quad_rel_tol) {
            return Err("quad_rel_tol must be positive".into());
        }
        if let Some(dt) = self.tolerances.evolve_dt {
            if !positive(dt) {
                return Err("evolve_dt must be positive".into());
            }
        }
        match self.experiment {
            Experiment::Ex1Divergence => {
                if self.n_list.is_empty() {
                    return Err("ex1-divergence needs a nonempty n_list".into());
                }
                for &n in &self.n_list {
                    if n == 0 || !admissibility_core::spectral::is_in_i1(n as i64).unwrap_or(false)
                    {
                        return Err(format!(
                            "ex1-divergence witness indices must be perfect squares, got {n}"
                        ));
                    }
                    if n as usize > self.n {
                        return Err(format!("witness index {n} exceeds the window N={}", self.n));
                    }
                }
            }
            Experiment::Ex2Divergence => {
                if self.n_list.is_empty() {
                    return Err("ex2-divergence needs a nonempty n_list".into());
                }
                for &n in &self.n_list {
                    if n == 0 || n > 700 {
                        return Err(format!(
                            "ex2-divergence probe index {n} must lie in 1..=700 (e^-n must not underflow)"
                        ));
                    }
                    if n as usize > self.n {
                        return Err(format!("probe index {n} exceeds the window N={}", self.n));
                    }
                }
            }
            Experiment::Ex1Feedback | Experiment::StabilityReport => {
                if self.n > DENSE_LIMIT {
                    return Err(format!(
                        "{} requires N <= {DENSE_LIMIT} for dense diagnostics",
                        self.experiment.name()
                    ));
                }
                for &n in &self.n_list {
                    if n == 0 || n as usize > self.n {
                        return Err(format!("mode index {n} outside the window 1..={}", self.n));
                    }
                }
            }
            Experiment::CriterionScan => {
                for &n in &self.n_list {
                    if n == 0 || n > 700 {
                        return Err(format!(
                            "criterion-scan probe index {n} must lie in 1..=700 (e^-n must not underflow)"
                        ));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}
