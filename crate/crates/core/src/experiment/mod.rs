//! Batch experiment layer behind the `roundlab` binary: configuration,
//! instance construction, and the `gen`, `run`, `verify` and `curve` jobs.
//!
//! Every job is a pure function of the configuration and seed. Grid points
//! run on a rayon pool and are merged in grid order, so outputs are
//! byte-identical across runs and thread counts.

mod curve;
mod run;
mod verify;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{smooth_w_star_norm, thm1_rounds_cvx, thm1_rounds_sc, thm2_rounds_scaled};
use crate::instances::{
    build_nonsmooth_hard_pair, build_one_round_pair, build_smooth_hard_pair, default_b, Family, InstanceBundle,
    InstanceParams,
};
use crate::numkit::norm;
use crate::oracle::best_in_subspace;
use crate::solvers::SolverConfig;

pub use curve::{cmd_curve, cmd_gen, curve_rows, CurveRow, CURVE_HEADER};
pub use run::{cmd_run, run_experiment, PointResult, SummaryRow, ROUNDS_HEADER, SUMMARY_HEADER};
pub use verify::{cmd_verify, verify_checks};

/// Failures of an experiment job, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("instance validation failed: {0}")]
    Validation(String),

    #[error("verification failed: {}", .0.join(", "))]
    Verify(Vec<String>),

    #[error(transparent)]
    Lib(#[from] crate::Error),
}

impl ExperimentError {
    /// 1 for failed verification, 3 for model violations, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            ExperimentError::Verify(_) => 1,
            ExperimentError::Lib(
                E::AssumptionViolation { .. } | E::LocalBudgetExceeded { .. } | E::NegativeCoefficient { .. },
            ) => 3,
            _ => 2,
        }
    }
}

pub type ExpResult<T> = std::result::Result<T, ExperimentError>;

/// What a job printed and wrote. `failed` lists failed check names (only
/// `verify` fills it).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JobOutput {
    pub stdout: String,
    pub files: Vec<PathBuf>,
    pub failed: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> ExpResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

/// Parameter overrides for one grid point of a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveGrid {
    #[serde(default, rename = "T_min")]
    pub t_min: usize,
    #[serde(default = "default_t_max", rename = "T_max")]
    pub t_max: usize,
}

fn default_t_max() -> usize {
    30
}

impl Default for CurveGrid {
    fn default() -> Self {
        CurveGrid {
            t_min: 0,
            t_max: default_t_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Rounds driven per solver in the support sweep (capped at `d − 1`).
    #[serde(default = "default_progress_rounds")]
    pub progress_rounds: usize,
    /// Kink rules swept by the non-smooth support checks.
    #[serde(default = "default_tie_alphas")]
    pub tie_alphas: Vec<f64>,
    /// Dominance grid; defaults to the curve grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveGrid>,
}

fn default_progress_rounds() -> usize {
    40
}

fn default_tie_alphas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            progress_rounds: default_progress_rounds(),
            tie_alphas: default_tie_alphas(),
            curve: None,
        }
    }
}

/// Output file names, resolved against `--out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub instance: String,
    pub rounds: String,
    pub summary: String,
    pub transcript: String,
    pub curve: String,
    pub report: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            instance: "instance.json".into(),
            rounds: "rounds.csv".into(),
            summary: "summary.csv".into(),
            transcript: "transcript.jsonl".into(),
            curve: "curve.csv".into(),
            report: "verify.txt".into(),
        }
    }
}

/// A complete experiment description; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub params: InstanceParams,
    #[serde(default)]
    pub seed: u64,
    /// Load this instance file instead of building one. Relative paths are
    /// resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub solvers: Vec<SolverConfig>,
    #[serde(default)]
    pub eps_grid: Vec<f64>,
    #[serde(default)]
    pub sweep: Vec<SweepPoint>,
    #[serde(default)]
    pub curve: CurveGrid,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> ExpResult<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> ExpResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(inst), Some(dir)) = (&cfg.instance, path.parent()) {
            if inst.is_relative() {
                cfg.instance = Some(dir.join(inst));
            }
        }
        Ok(cfg)
    }

    /// Schema checks that need no instance.
    pub fn validate(&self) -> ExpResult<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if let Some(e) = self.eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return bad(format!("eps_grid entry {e} must be positive and finite"));
        }
        for s in &self.solvers {
            s.validate()?;
        }
        if self.curve.t_min > self.curve.t_max {
            return bad(format!("curve T_min={} exceeds T_max={}", self.curve.t_min, self.curve.t_max));
        }
        for a in &self.verify.tie_alphas {
            crate::instances::TieRule::new(*a)?;
        }
        Ok(())
    }

    /// Parameters of every grid point: the base params alone, or one
    /// override per sweep entry.
    pub fn grid(&self) -> Vec<InstanceParams> {
        if self.sweep.is_empty() {
            return vec![self.params.clone()];
        }
        self.sweep
            .iter()
            .map(|s| {
                let mut p = self.params.clone();
                p.delta = s.delta.unwrap_or(p.delta);
                p.lambda = s.lambda.unwrap_or(p.lambda);
                p.d = s.d.unwrap_or(p.d);
                p.t = s.t.or(p.t);
                p
            })
            .collect()
    }

    /// The instance of the base point: loaded from `instance` or built.
    pub fn base_instance(&self) -> ExpResult<InstanceBundle> {
        match &self.instance {
            Some(path) => load_instance(path, self.family),
            None => Ok(build_instance(self.family, &self.params, self.seed)?),
        }
    }
}

/// Reads an instance file and checks its family.
pub fn load_instance(path: &Path, family: Family) -> ExpResult<InstanceBundle> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let bundle = InstanceBundle::from_json(&text)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
    if bundle.family != family {
        return Err(ExperimentError::Config(format!(
            "{} holds a {} instance, config says {}",
            path.display(),
            bundle.family.name(),
            family.name()
        )));
    }
    Ok(bundle)
}

/// Default anchor offset of the non-smooth pair. Scaling the absolute terms
/// by `s` is the unscaled instance with ridge `λ/s`, so the valid-regime
/// offset uses `λ/s`; without a ridge the anchor sits at `1/√k`.
pub fn nonsmooth_default_b(lambda: f64, scale: f64, t: usize) -> crate::Result<f64> {
    if lambda > 0.0 {
        default_b(lambda / scale, t)
    } else {
        Ok(1.0 / ((t + 2) as f64).sqrt())
    }
}

/// Builds the hard instance of `family`. Non-smooth instances use `scale`
/// (default 1) as their δ; one-round instances default `j` to `d`.
pub fn build_instance(family: Family, p: &InstanceParams, seed: u64) -> crate::Result<InstanceBundle> {
    match family {
        Family::Smooth => build_smooth_hard_pair(p.delta, p.lambda, p.d, p.m),
        Family::Nonsmooth => {
            let t = p.t.ok_or_else(|| crate::Error::BadParams("non-smooth family needs params.T".into()))?;
            let scale = p.scale.unwrap_or(1.0);
            let b = match p.b {
                Some(b) => b,
                None => nonsmooth_default_b(p.lambda, scale, t)?,
            };
            build_nonsmooth_hard_pair(p.lambda, t, p.d, b, scale, p.m)
        }
        Family::OneRound => build_one_round_pair(p.delta, p.lambda, p.d, p.j.unwrap_or(p.d), p.m, seed).map(|(b, _)| b),
    }
}

/// `⌈max(0, R)⌉` for the theorem bound `R` matching the instance, when the
/// theorem's hypotheses hold on this finite instance:
///
/// - smooth, `λ > 0`: the strongly convex bound, needing `R ≤ d − 1`;
/// - smooth, `λ = 0`: the convex bound with this instance's `‖w*‖`, needing
///   the matched dimension `d = 2R + 1`;
/// - non-smooth: the scaled Lipschitz bound inside its `ε` regime, needing
///   `R ≤ T + 1` and `ε` below the exact gap of every `E_r`, `r ≤ T + 1`.
///
/// One-round instances carry no round bound.
pub fn round_lower_bound(inst: &InstanceBundle, eps: f64) -> crate::Result<Option<usize>> {
    let p = &inst.params;
    let rounds = |v: f64| v.max(0.0).ceil() as usize;
    Ok(match inst.family {
        Family::Smooth if p.lambda > 0.0 => {
            let r = rounds(thm1_rounds_sc(p.delta, p.lambda, eps, smooth_w_star_norm(p.delta, p.lambda)?)?);
            (r < p.d).then_some(r)
        }
        Family::Smooth => {
            let r = rounds(thm1_rounds_cvx(p.delta, eps, norm(&inst.optimum))?);
            (p.d == 2 * r + 1).then_some(r)
        }
        Family::Nonsmooth => {
            let t = p.t.unwrap_or(0);
            let rb = thm2_rounds_scaled(p.scale.unwrap_or(1.0), p.lambda, eps)?;
            let r = rounds(rb.value);
            let gap = best_in_subspace(inst, 1)?.gap;
            (rb.valid && r <= t + 1 && eps < gap).then_some(r)
        }
        Family::OneRound => None,
    })
}

/// Runs `job` on a pool with `threads` workers (rayon's default when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> ExpResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(ExperimentError::Config("threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(pool.install(job))
}

/// Shortest round-trip decimal form, `.` separator.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
