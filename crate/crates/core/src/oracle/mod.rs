//! Machine-model simulator.
//!
//! Each machine owns a span `W_j` (initially `{0}`). A machine may create a
//! point `w` only if `γw + ν∇F_j(w)` equals a combination of points of `W_j`,
//! local gradients at such points, and shifted Hessian products or solves
//! against such points. Requests are validated a posteriori: the oracle
//! computes every primitive itself, solves or checks `w`, and only then
//! admits it. `communicate` merges all spans and counts a round.

mod subspace;

pub use subspace::{best_in_subspace, SubspaceBest};

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{InstanceBundle, LocalFunction, TieRule};
use crate::numkit::{axpy, norm, Ldlt, SpanBasis, DEFAULT_SPAN_TOL};

/// Per-machine, per-round cap on admitted local points.
pub const DEFAULT_LOCAL_CAP: usize = 10_000;

/// Threshold below which a coordinate counts as zero in support profiles.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// One building block of a request's right-hand side. Every vector field
/// must already lie in the machine's span.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Point(Vec<f64>),
    /// Gradient, or tie-rule subgradient, at `at`.
    Gradient { at: Vec<f64> },
    /// `(∇²F(at) + diag(shift)) v`
    HessianApply { at: Vec<f64>, shift: Vec<f64>, v: Vec<f64> },
    /// `(∇²F(at) + diag(shift))⁻¹ v`
    HessianSolve { at: Vec<f64>, shift: Vec<f64>, v: Vec<f64> },
}

impl Primitive {
    fn referenced(&self) -> Vec<&[f64]> {
        match self {
            Primitive::Point(p) => vec![p],
            Primitive::Gradient { at } => vec![at],
            Primitive::HessianApply { at, v, .. } | Primitive::HessianSolve { at, v, .. } => vec![at, v],
        }
    }
}

/// A proposed point with an optional subgradient certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub w: Vec<f64>,
    pub subgradient: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleRequest {
    /// A point `w` with `γw + νg(w) = Σ coef·primitive`. Without a candidate
    /// the oracle solves for `w` in closed form.
    NewPoint {
        gamma: f64,
        nu: f64,
        rhs: Vec<(f64, Primitive)>,
        candidate: Option<Candidate>,
        tie: TieRule,
    },
    /// The combination itself, i.e. `γ = 1, ν = 0`.
    RawSpanPoint { rhs: Vec<(f64, Primitive)>, tie: TieRule },
}

impl OracleRequest {
    /// The local gradient at a known point.
    pub fn gradient(at: &[f64]) -> Self {
        OracleRequest::RawSpanPoint {
            rhs: vec![(1.0, Primitive::Gradient { at: at.to_vec() })],
            tie: TieRule::MIDPOINT,
        }
    }

    /// The tie-rule subgradient at a known point.
    pub fn subgradient(at: &[f64], tie: TieRule) -> Self {
        OracleRequest::RawSpanPoint {
            rhs: vec![(1.0, Primitive::Gradient { at: at.to_vec() })],
            tie,
        }
    }

    /// Exact minimizer of the local function (`γ = 0, ν = 1`, zero rhs).
    pub fn local_minimizer() -> Self {
        OracleRequest::NewPoint {
            gamma: 0.0,
            nu: 1.0,
            rhs: Vec::new(),
            candidate: None,
            tie: TieRule::MIDPOINT,
        }
    }

    /// `prox_{t·F}(y)`: the `w` with `w + t∇F(w) = y`, scaled as `γ = 1/(1+t)`, `ν = t/(1+t)`.
    pub fn prox(y: &[f64], t: f64) -> Self {
        let s = 1.0 + t;
        OracleRequest::NewPoint {
            gamma: 1.0 / s,
            nu: t / s,
            rhs: vec![(1.0 / s, Primitive::Point(y.to_vec()))],
            candidate: None,
            tie: TieRule::MIDPOINT,
        }
    }

    /// `(∇²F(at) + diag(shift)) v`
    pub fn hessian_apply(at: &[f64], shift: &[f64], v: &[f64]) -> Self {
        OracleRequest::RawSpanPoint {
            rhs: vec![(
                1.0,
                Primitive::HessianApply {
                    at: at.to_vec(),
                    shift: shift.to_vec(),
                    v: v.to_vec(),
                },
            )],
            tie: TieRule::MIDPOINT,
        }
    }

    /// `(∇²F(at) + diag(shift))⁻¹ v`
    pub fn hessian_solve(at: &[f64], shift: &[f64], v: &[f64]) -> Self {
        OracleRequest::RawSpanPoint {
            rhs: vec![(
                1.0,
                Primitive::HessianSolve {
                    at: at.to_vec(),
                    shift: shift.to_vec(),
                    v: v.to_vec(),
                },
            )],
            tie: TieRule::MIDPOINT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Relative tolerance for span membership and the defining equation.
    pub tol: f64,
    pub local_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            tol: DEFAULT_SPAN_TOL,
            local_cap: DEFAULT_LOCAL_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MachineState {
    pub id: usize,
    pub span: SpanBasis,
    /// `(round, point)` for every admitted point.
    pub log: Vec<(usize, Vec<f64>)>,
    shared_rank: usize,
    used_this_round: usize,
}

impl MachineState {
    fn new(id: usize, dim: usize, tol: f64) -> Self {
        MachineState {
            id,
            span: SpanBasis::with_tolerance(dim, tol),
            log: Vec::new(),
            shared_rank: 0,
            used_this_round: 0,
        }
    }
}

/// One line of the JSON-lines transcript, written at each communication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub span_dims: Vec<usize>,
    pub support_profile: Vec<usize>,
    pub best_value: Option<f64>,
    pub broadcast_reals: usize,
}

pub struct Simulation<'a> {
    instance: &'a InstanceBundle,
    machines: Vec<MachineState>,
    round: usize,
    config: OracleConfig,
    factors: HashMap<(usize, Vec<u64>), Ldlt>,
    records: Vec<RoundRecord>,
    best_value: Option<f64>,
}

impl<'a> Simulation<'a> {
    pub fn new(instance: &'a InstanceBundle) -> Self {
        Self::with_config(instance, OracleConfig::default())
    }

    pub fn with_config(instance: &'a InstanceBundle, config: OracleConfig) -> Self {
        let d = instance.dim();
        Simulation {
            instance,
            machines: (0..instance.m()).map(|i| MachineState::new(i, d, config.tol)).collect(),
            round: 0,
            config,
            factors: HashMap::new(),
            records: Vec::new(),
            best_value: None,
        }
    }

    pub fn instance(&self) -> &'a InstanceBundle {
        self.instance
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn m(&self) -> usize {
        self.machines.len()
    }

    pub fn dim(&self) -> usize {
        self.instance.dim()
    }

    /// Machine that produces the final output.
    pub fn designated(&self) -> usize {
        self.machines.len() - 1
    }

    pub fn machine(&self, j: usize) -> &MachineState {
        &self.machines[j]
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn config(&self) -> OracleConfig {
        self.config
    }

    fn violation(&self, machine: usize, detail: impl Into<String>) -> Error {
        Error::AssumptionViolation {
            machine,
            round: self.round,
            detail: detail.into(),
        }
    }

    fn check_in_span(&self, machine: usize, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(self.violation(machine, format!("{what} has wrong dimension {}", v.len())));
        }
        if !self.machines[machine].span.contains(v) {
            return Err(self.violation(machine, format!("{what} is outside the machine's span")));
        }
        Ok(())
    }

    fn cached_solve(&mut self, machine: usize, shift: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let local = &self.instance.locals[machine];
        let q = match local {
            LocalFunction::Quadratic(q) => q,
            LocalFunction::PiecewiseAbs(_) => return local.hessian_shift_solve(shift, v),
        };
        let key = (machine, shift.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        if !self.factors.contains_key(&key) {
            self.factors.insert(key.clone(), q.shifted_factor(shift)?);
        }
        Ok(self.factors[&key].solve(v))
    }

    fn evaluate(&mut self, machine: usize, p: &Primitive, tie: TieRule) -> Result<Vec<f64>> {
        let local = &self.instance.locals[machine];
        Ok(match p {
            Primitive::Point(v) => v.clone(),
            Primitive::Gradient { at } => local.first_order(at, tie),
            Primitive::HessianApply { shift, v, .. } => local.hessian_shift_apply(shift, v),
            Primitive::HessianSolve { shift, v, .. } => self.cached_solve(machine, shift, v)?,
        })
    }

    /// Validates `request` for `machine`, admits the resulting point into its
    /// span, and returns it.
    pub fn local_compute(&mut self, machine: usize, request: OracleRequest) -> Result<Vec<f64>> {
        if machine >= self.m() {
            return Err(Error::bad(format!("machine {machine} out of range")));
        }
        let (gamma, nu, rhs, candidate, tie) = match request {
            OracleRequest::NewPoint {
                gamma,
                nu,
                rhs,
                candidate,
                tie,
            } => (gamma, nu, rhs, candidate, tie),
            OracleRequest::RawSpanPoint { rhs, tie } => (1.0, 0.0, rhs, None, tie),
        };
        if gamma < 0.0 || nu < 0.0 {
            return Err(Error::NegativeCoefficient { gamma, nu });
        }
        if !(gamma + nu > 0.0) || !gamma.is_finite() || !nu.is_finite() {
            return Err(Error::bad(format!("need finite gamma + nu > 0, got {gamma}, {nu}")));
        }
        if self.machines[machine].used_this_round >= self.config.local_cap {
            return Err(Error::LocalBudgetExceeded {
                machine,
                round: self.round,
                cap: self.config.local_cap,
            });
        }
        for (_, p) in &rhs {
            for v in p.referenced() {
                self.check_in_span(machine, v, "referenced point")?;
            }
        }
        let d = self.dim();
        let mut r = vec![0.0; d];
        for (coef, p) in &rhs {
            let v = self.evaluate(machine, p, tie)?;
            if !v.iter().all(|x| x.is_finite()) {
                return Err(self.violation(machine, "primitive evaluated to a non-finite vector"));
            }
            axpy(*coef, &v, &mut r);
        }

        let local = &self.instance.locals[machine];
        let (w, g) = match (candidate, local) {
            (Some(c), LocalFunction::Quadratic(q)) => {
                let g = q.grad(&c.w);
                (c.w, g)
            }
            (Some(c), LocalFunction::PiecewiseAbs(p)) => {
                let g = match c.subgradient {
                    Some(g) => {
                        if !p.is_subgradient(&c.w, &g, self.config.tol) {
                            return Err(self.violation(machine, "certificate is not a subgradient"));
                        }
                        g
                    }
                    None => p.subgrad(&c.w, tie),
                };
                (c.w, g)
            }
            (None, LocalFunction::Quadratic(q)) => {
                let w = q.local_solve(gamma, nu, &r)?;
                let g = q.grad(&w);
                (w, g)
            }
            (None, LocalFunction::PiecewiseAbs(p)) => {
                if nu == 0.0 {
                    let w: Vec<f64> = r.iter().map(|x| x / gamma).collect();
                    (w, vec![0.0; d])
                } else {
                    p.local_solve(gamma, nu, &r)?
                }
            }
        };
        if w.len() != d || !w.iter().all(|x| x.is_finite()) {
            return Err(self.violation(machine, "proposed point is malformed"));
        }
        let lhs: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| gamma * wi + nu * gi).collect();
        let resid = norm(&crate::numkit::sub(&lhs, &r));
        let scale = norm(&r).max(gamma * norm(&w)).max(1.0);
        if resid > self.config.tol * scale {
            return Err(self.violation(
                machine,
                format!("defining equation residual {resid:.3e} exceeds tolerance"),
            ));
        }
        let st = &mut self.machines[machine];
        st.span.insert(&w);
        st.used_this_round += 1;
        st.log.push((self.round, w.clone()));
        Ok(w)
    }

    /// Merges every machine's span into all others and advances the round.
    /// Returns the number of reals broadcast.
    pub fn communicate(&mut self) -> usize {
        let d = self.dim();
        let mut merged = self.machines[0].span.clone();
        // Columns below `shared_rank` are common to every machine already.
        let mut broadcast = 0;
        for (j, st) in self.machines.iter().enumerate() {
            let fresh = &st.span.columns()[st.shared_rank..];
            broadcast += fresh.len() * d;
            if j > 0 {
                merged.absorb(fresh);
            }
        }
        let rank = merged.rank();
        for st in &mut self.machines {
            st.span = merged.clone();
            st.shared_rank = rank;
            st.used_this_round = 0;
        }
        self.round += 1;
        self.records.push(RoundRecord {
            round: self.round,
            span_dims: vec![rank; self.machines.len()],
            support_profile: self.support_profile(),
            best_value: self.best_value,
            broadcast_reals: broadcast,
        });
        broadcast
    }

    /// Largest one-based coordinate carried by each machine's span.
    pub fn support_profile(&self) -> Vec<usize> {
        self.machines
            .iter()
            .map(|m| m.span.support_max(SUPPORT_THRESHOLD))
            .collect()
    }

    /// Records a solver iterate held by `machine`; it must lie in that span.
    /// Returns the average objective at the point.
    pub fn observe(&mut self, machine: usize, w: &[f64]) -> Result<f64> {
        self.check_in_span(machine, w, "observed iterate")?;
        let v = self.instance.eval(w);
        let best = self.best_value.map_or(v, |b| b.min(v));
        self.best_value = Some(best);
        if let Some(last) = self.records.last_mut() {
            last.best_value = Some(best);
        }
        Ok(v)
    }

    /// The transcript as JSON lines.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialization cannot fail"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_nonsmooth_hard_pair, build_smooth_hard_pair};
    use crate::numkit::unit;

    fn stub(d: usize, m: usize) -> InstanceBundle {
        build_smooth_hard_pair(1.0, 0.1, d, m).unwrap()
    }

    #[test]
    fn gradient_step_from_origin() {
        let inst = stub(6, 2);
        let mut sim = Simulation::new(&inst);
        let eta = 0.5;
        let req = OracleRequest::RawSpanPoint {
            rhs: vec![(-eta, Primitive::Gradient { at: vec![0.0; 6] })],
            tie: TieRule::MIDPOINT,
        };
        let w = sim.local_compute(0, req).unwrap();
        let g = inst.locals[0].first_order(&[0.0; 6], TieRule::MIDPOINT);
        assert_eq!(w, g.iter().map(|x| -eta * x).collect::<Vec<_>>());
    }

    #[test]
    fn local_minimizer_of_second_local_is_origin() {
        let inst = stub(6, 2);
        let mut sim = Simulation::new(&inst);
        let w = sim.local_compute(1, OracleRequest::local_minimizer()).unwrap();
        assert_eq!(w, vec![0.0; 6]);
        assert_eq!(sim.machine(1).span.rank(), 0);
    }

    #[test]
    fn referencing_unknown_point_is_a_violation() {
        let inst = stub(6, 2);
        let mut sim = Simulation::new(&inst);
        let err = sim.local_compute(0, OracleRequest::gradient(&unit(6, 3))).unwrap_err();
        assert!(matches!(err, Error::AssumptionViolation { machine: 0, round: 0, .. }));
    }

    #[test]
    fn negative_coefficients_rejected() {
        let inst = stub(4, 2);
        let mut sim = Simulation::new(&inst);
        let req = OracleRequest::NewPoint {
            gamma: -1.0,
            nu: 1.0,
            rhs: vec![],
            candidate: None,
            tie: TieRule::MIDPOINT,
        };
        assert!(matches!(sim.local_compute(0, req), Err(Error::NegativeCoefficient { .. })));
    }

    #[test]
    fn wrong_candidate_is_a_violation() {
        let inst = stub(4, 2);
        let mut sim = Simulation::new(&inst);
        let req = OracleRequest::NewPoint {
            gamma: 0.0,
            nu: 1.0,
            rhs: vec![],
            candidate: Some(Candidate {
                w: unit(4, 2),
                subgradient: None,
            }),
            tie: TieRule::MIDPOINT,
        };
        assert!(matches!(sim.local_compute(0, req), Err(Error::AssumptionViolation { .. })));
    }

    #[test]
    fn communicate_unions_spans() {
        let inst = stub(4, 4);
        let mut sim = Simulation::new(&inst);
        // Seed disjoint singleton spans through their local minimizers' gradients.
        let w0 = sim.local_compute(0, OracleRequest::local_minimizer()).unwrap();
        assert!(sim.machine(0).span.rank() == 1 && sim.machine(2).span.rank() == 0);
        let cost = sim.communicate();
        assert_eq!(sim.round(), 1);
        assert_eq!(cost, 4);
        for j in 0..4 {
            assert!(sim.machine(j).span.contains(&w0));
        }
        assert_eq!(sim.communicate(), 0);
        assert_eq!(sim.round(), 2);
    }

    #[test]
    fn fresh_simulation_has_empty_support() {
        let inst = stub(5, 2);
        let sim = Simulation::new(&inst);
        assert_eq!(sim.support_profile(), vec![0, 0]);
    }

    #[test]
    fn local_budget_is_enforced() {
        let inst = stub(4, 2);
        let mut sim = Simulation::with_config(&inst, OracleConfig { tol: 1e-9, local_cap: 3 });
        for _ in 0..3 {
            sim.local_compute(0, OracleRequest::gradient(&[0.0; 4])).unwrap();
        }
        assert!(matches!(
            sim.local_compute(0, OracleRequest::gradient(&[0.0; 4])),
            Err(Error::LocalBudgetExceeded { cap: 3, .. })
        ));
        sim.communicate();
        assert!(sim.local_compute(0, OracleRequest::gradient(&[0.0; 4])).is_ok());
    }

    #[test]
    fn nonsmooth_prox_request_is_admitted() {
        let inst = build_nonsmooth_hard_pair(0.1, 4, 8, 0.2, 1.0, 2).unwrap();
        let mut sim = Simulation::new(&inst);
        let g = sim.local_compute(0, OracleRequest::gradient(&[0.0; 8])).unwrap();
        let p = sim.local_compute(0, OracleRequest::prox(&g, 0.3)).unwrap();
        assert!(sim.machine(0).span.contains(&p));
        assert!(crate::numkit::support_max(&p, 1e-12) <= 1);
    }

    #[test]
    fn bogus_certificate_rejected() {
        let inst = build_nonsmooth_hard_pair(0.1, 4, 8, 0.2, 1.0, 2).unwrap();
        let mut sim = Simulation::new(&inst);
        let req = OracleRequest::NewPoint {
            gamma: 1.0,
            nu: 1.0,
            rhs: vec![],
            candidate: Some(Candidate {
                w: vec![0.0; 8],
                subgradient: Some(unit(8, 5)),
            }),
            tie: TieRule::MIDPOINT,
        };
        assert!(matches!(sim.local_compute(0, req), Err(Error::AssumptionViolation { .. })));
    }

    #[test]
    fn transcript_has_one_line_per_round() {
        let inst = stub(4, 2);
        let mut sim = Simulation::new(&inst);
        sim.local_compute(0, OracleRequest::gradient(&[0.0; 4])).unwrap();
        sim.communicate();
        sim.observe(1, &[0.0; 4]).unwrap();
        sim.communicate();
        let text = sim.transcript_jsonl();
        assert_eq!(text.lines().count(), 2);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["round"], 1);
        assert_eq!(first["support_profile"], serde_json::json!([1, 1]));
        assert_eq!(first["best_value"], serde_json::json!(0.0));
    }
}
