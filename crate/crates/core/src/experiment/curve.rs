use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{build_instance, fmt_f64, write_file, ExpResult, ExperimentConfig, ExperimentError, JobOutput};
use crate::bounds::{nonsmooth_t0, smooth_w_star_norm, subopt_curve_nonsmooth, subopt_curve_smooth};
use crate::instances::{validate_bundle, Family, InstanceBundle};
use crate::numkit::norm;
use crate::oracle::best_in_subspace;

pub const CURVE_HEADER: &str = "T,measured_best_in_subspace,bound_curve,ratio";

/// One row of the dominance curve: the exact gap of the best point in
/// `E_{T+1}` against the closed-form floor (absent outside its regime).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub t: usize,
    pub measured: f64,
    pub curve: Option<f64>,
}

impl CurveRow {
    /// `measured / curve` when the curve is positive.
    pub fn ratio(&self) -> Option<f64> {
        self.curve.filter(|c| *c > 0.0).map(|c| self.measured / c)
    }

    /// Dominance with a relative slack.
    pub fn dominates(&self, rel_slack: f64) -> bool {
        self.curve.is_none_or(|c| self.measured >= c - rel_slack * c.abs())
    }

    fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), fmt_f64);
        format!("{},{},{},{}", self.t, fmt_f64(self.measured), opt(self.curve), opt(self.ratio()))
    }
}

fn gap_clamped(inst: &InstanceBundle, k: usize) -> crate::Result<f64> {
    Ok(best_in_subspace(inst, k.min(inst.dim()))?.gap)
}

fn smooth_row(base: &InstanceBundle, t: usize) -> crate::Result<CurveRow> {
    let p = &base.params;
    if p.lambda > 0.0 {
        let wn = smooth_w_star_norm(p.delta, p.lambda)?;
        return Ok(CurveRow {
            t,
            measured: gap_clamped(base, t + 1)?,
            curve: subopt_curve_smooth(t, p.delta, p.lambda, p.d, wn).ok(),
        });
    }
    // Without a ridge the floor holds on the instance of matched dimension.
    let dt = 2 * t + 3;
    if dt > p.d {
        return Ok(CurveRow {
            t,
            measured: gap_clamped(base, t + 1)?,
            curve: None,
        });
    }
    let inst = build_instance(Family::Smooth, &crate::instances::InstanceParams { d: dt, ..p.clone() }, 0)?;
    Ok(CurveRow {
        t,
        measured: best_in_subspace(&inst, t + 1)?.gap,
        curve: Some(subopt_curve_smooth(t, p.delta, 0.0, dt, norm(&inst.optimum))?),
    })
}

fn nonsmooth_row(base: &InstanceBundle, t: usize) -> crate::Result<CurveRow> {
    let p = &base.params;
    let scale = p.scale.unwrap_or(1.0);
    let eff = p.lambda / scale;
    // Rows below T₀ use the smallest instance whose default offset is valid.
    let t_build = if p.lambda > 0.0 { t.max(nonsmooth_t0(eff) as usize) } else { t };
    let params = crate::instances::InstanceParams {
        t: Some(t_build),
        d: p.d.max(t_build + 2),
        b: None,
        ..p.clone()
    };
    let inst = build_instance(Family::Nonsmooth, &params, 0)?;
    Ok(CurveRow {
        t,
        measured: best_in_subspace(&inst, t + 1)?.gap,
        curve: Some(scale * subopt_curve_nonsmooth(t, eff)?),
    })
}

/// Dominance rows for `T = T_min..=T_max`, computed in parallel and
/// returned in grid order.
pub fn curve_rows(cfg: &ExperimentConfig, t_min: usize, t_max: usize) -> ExpResult<Vec<CurveRow>> {
    let base = cfg.base_instance()?;
    let row: fn(&InstanceBundle, usize) -> crate::Result<CurveRow> = match base.family {
        Family::Smooth => smooth_row,
        Family::Nonsmooth => nonsmooth_row,
        Family::OneRound => {
            return Err(ExperimentError::Config("curves are defined for the smooth and nonsmooth families".into()))
        }
    };
    let rows: Vec<_> = (t_min..=t_max).into_par_iter().map(|t| row(&base, t)).collect();
    Ok(rows.into_iter().collect::<crate::Result<_>>()?)
}

/// The `curve` job.
pub fn cmd_curve(cfg: &ExperimentConfig, out: &Path) -> ExpResult<JobOutput> {
    let rows = curve_rows(cfg, cfg.curve.t_min, cfg.curve.t_max)?;
    let mut csv = String::from(CURVE_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    let below = rows.iter().filter(|r| !r.dominates(1e-10)).count();
    let stdout = format!(
        "{} rows, {} in regime, {} below the curve\n",
        rows.len(),
        rows.iter().filter(|r| r.curve.is_some()).count(),
        below
    );
    let path = write_file(out, &cfg.output.curve, &csv)?;
    Ok(JobOutput { stdout, files: vec![path], failed: Vec::new() })
}

/// The `gen` job: builds (or loads) the instance, validates it, and writes
/// it only when every check passes.
pub fn cmd_gen(cfg: &ExperimentConfig, out: &Path) -> ExpResult<JobOutput> {
    let inst = cfg.base_instance()?;
    let checks = validate_bundle(&inst)?;
    let mut stdout = String::new();
    for c in &checks {
        let _ = writeln!(stdout, "{}", c.line());
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.line()).collect();
    if !failed.is_empty() {
        return Err(ExperimentError::Validation(failed.join("; ")));
    }
    let path = write_file(out, &cfg.output.instance, &inst.to_json())?;
    Ok(JobOutput { stdout, files: vec![path], failed: Vec::new() })
}
