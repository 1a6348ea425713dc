use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_even_m, split_assignment, Family, InstanceBundle, InstanceParams, LocalFunction, QuadraticLocal};
use crate::error::{Error, Result};
use crate::numkit::{spectral_norm, unit, Ldlt, SymMat};

/// Norm constant `c` in the acceptance test `‖M‖ ≤ c√d`.
pub const ONE_ROUND_NORM_CONSTANT: f64 = 3.0;

const MAX_DRAWS: usize = 1000;

/// `δ ≥ 3λ > 0`, allowing one part in 10¹² so that e.g. `δ = 0.3, λ = 0.1`
/// (where `3.0 * 0.1 > 0.3` in binary) is accepted.
pub(crate) fn delta_dominates(delta: f64, lambda: f64) -> bool {
    lambda > 0.0 && delta >= 3.0 * lambda * (1.0 - 1e-12)
}

/// An accepted sign matrix and the number of draws it took.
#[derive(Debug, Clone, PartialEq)]
pub struct SignMatrixSample {
    pub matrix: SymMat,
    pub draws: usize,
}

/// Symmetric `±1` matrix with iid upper triangle, resampled until `‖M‖ ≤ 3√d`.
pub fn sample_sign_matrix(rng: &mut impl Rng, d: usize) -> Result<SignMatrixSample> {
    let limit = ONE_ROUND_NORM_CONSTANT * (d as f64).sqrt();
    for draws in 1..=MAX_DRAWS {
        let m = SymMat::from_upper_fn(d, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        if spectral_norm(&m)? <= limit {
            return Ok(SignMatrixSample { matrix: m, draws });
        }
    }
    Err(Error::RejectionExhausted { draws: MAX_DRAWS })
}

fn check_one_round_params(delta: f64, lambda: f64, d: usize, j: usize) -> Result<()> {
    if !delta_dominates(delta, lambda) {
        return Err(Error::bad(format!(
            "one-round pair needs delta >= 3*lambda > 0, got delta={delta}, lambda={lambda}"
        )));
    }
    if d < 8 {
        return Err(Error::bad(format!("dimension d={d} must be at least 8")));
    }
    if j < d.div_ceil(2) || j > d {
        return Err(Error::bad(format!("j={j} outside [ceil(d/2), d] for d={d}")));
    }
    Ok(())
}

/// Builds the pair from a given sign matrix `M` (any symmetric matrix with
/// `‖M‖ ≤ 3√d` keeps the spectra inside `[λ, 9λ]`). `j` is one-based.
pub fn one_round_pair_from_matrix(
    delta: f64,
    lambda: f64,
    j: usize,
    m_matrix: &SymMat,
    m: usize,
    seed: Option<u64>,
) -> Result<InstanceBundle> {
    let d = m_matrix.dim();
    check_one_round_params(delta, lambda, d, j)?;
    check_even_m(m)?;
    let c_sqrt_d = 2.0 * ONE_ROUND_NORM_CONSTANT * (d as f64).sqrt();
    let mut mp = m_matrix.scale(1.0 / c_sqrt_d);
    mp.add_diag(&vec![1.0; d]);
    let fac = Ldlt::factor(&mp)?;
    let inv_cols: Vec<Vec<f64>> = (0..d).map(|i| fac.solve(&unit(d, i))).collect();
    // Q₁ = 3λ((I + M/(2c√d))⁻¹ − I/2), mirrored from the upper triangle.
    let q1 = SymMat::from_upper_fn(d, |r, c| {
        let v = 0.5 * (inv_cols[c][r] + inv_cols[r][c]);
        3.0 * lambda * (v - if r == c { 0.5 } else { 0.0 })
    });
    let f1 = LocalFunction::Quadratic(QuadraticLocal {
        a: q1,
        b: vec![0.0; d],
        c: 0.0,
        certified_lambda: lambda,
        certified_smooth: 9.0 * lambda,
    });
    let mut b2 = vec![0.0; d];
    b2[j - 1] = -delta;
    let f2 = LocalFunction::Quadratic(QuadraticLocal {
        a: SymMat::from_diag(&vec![1.5 * lambda; d]),
        b: b2,
        c: 0.0,
        certified_lambda: lambda,
        certified_smooth: 9.0 * lambda,
    });
    let params = InstanceParams {
        delta,
        lambda,
        d,
        m,
        t: None,
        b: None,
        j: Some(j),
        scale: None,
    };
    let mut bundle = InstanceBundle {
        family: Family::OneRound,
        params,
        seed,
        locals: split_assignment(m, f1, f2),
        optimum: Vec::new(),
        optimum_value: 0.0,
    };
    // w* = (δ/(6λ)) (I + M/(2c√d)) e_j
    bundle.optimum = mp
        .matvec(&unit(d, j - 1))
        .iter()
        .map(|x| delta / (6.0 * lambda) * x)
        .collect();
    bundle.optimum_value = bundle.eval(&bundle.optimum);
    Ok(bundle)
}

/// Samples `M` from `seed` and builds the one-round pair. `j` is one-based.
pub fn build_one_round_pair(
    delta: f64,
    lambda: f64,
    d: usize,
    j: usize,
    m: usize,
    seed: u64,
) -> Result<(InstanceBundle, SignMatrixSample)> {
    check_one_round_params(delta, lambda, d, j)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = sample_sign_matrix(&mut rng, d)?;
    let bundle = one_round_pair_from_matrix(delta, lambda, j, &sample.matrix, m, Some(seed))?;
    Ok((bundle, sample))
}
