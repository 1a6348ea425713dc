//! Why kinks of untouched difference terms must contribute zero.

use roundlab::instances::{build_nonsmooth_hard_pair, default_b, TermKind, TieRule};
use roundlab::numkit::support_max;
use roundlab::oracle::{OracleRequest, Primitive, Simulation};
use roundlab::Error;

/// Subgradient that applies `α` at every kink, including difference terms
/// whose coordinates are both still zero.
fn naive_subgradient(p: &roundlab::instances::PiecewiseAbsLocal, w: &[f64], alpha: f64) -> Vec<f64> {
    let mut g: Vec<f64> = w.iter().map(|x| p.ridge * x).collect();
    for t in &p.terms {
        let beta = p.scale * t.weight;
        let (r, i, j) = match t.kind {
            TermKind::Boundary { coord, offset } => (w[coord] - offset, coord, None),
            TermKind::Difference { i, j } => (w[i] - w[j], i, Some(j)),
        };
        let s = if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 2.0 * alpha - 1.0 };
        g[i] += beta * s;
        if let Some(j) = j {
            g[j] -= beta * s;
        }
    }
    g
}

#[test]
fn naive_kink_rule_escapes_the_span_at_the_origin() {
    let inst = build_nonsmooth_hard_pair(0.05, 18, 64, default_b(0.05, 18).unwrap(), 1.0, 2).unwrap();
    let zero = vec![0.0; 64];
    for alpha in [0.0, 1.0] {
        let tie = TieRule::new(alpha).unwrap();
        let mut sim = Simulation::new(&inst);
        for (j, f) in inst.locals.iter().enumerate() {
            let p = f.as_piecewise().unwrap();
            // The crate's rule: at most the anchored coordinate.
            let g = sim.local_compute(j, OracleRequest::subgradient(&zero, tie)).unwrap();
            assert!(support_max(&g, 0.0) <= 1);

            // The naive rule lights up every chain coordinate at once.
            let naive = naive_subgradient(p, &zero, alpha);
            assert!(support_max(&naive, 0.0) >= 19, "alpha {alpha}, machine {j}");
            let err = sim
                .local_compute(
                    j,
                    OracleRequest::RawSpanPoint {
                        rhs: vec![(1.0, Primitive::Point(naive))],
                        tie,
                    },
                )
                .unwrap_err();
            assert!(matches!(err, Error::AssumptionViolation { round: 0, .. }), "{err}");
        }
    }
}

#[test]
fn midpoint_rule_agrees_with_naive_rule() {
    // At α = 1/2 every kink contributes zero under both rules.
    let inst = build_nonsmooth_hard_pair(0.05, 18, 64, default_b(0.05, 18).unwrap(), 1.0, 2).unwrap();
    let w: Vec<f64> = (0..64).map(|i| if i < 5 { 0.1 } else { 0.0 }).collect();
    for f in &inst.locals {
        let p = f.as_piecewise().unwrap();
        assert_eq!(p.subgrad(&w, TieRule::MIDPOINT), naive_subgradient(p, &w, 0.5));
    }
}
