//! Auxiliary conservative operators `P_{k,n}^N` and brute-force
//! verification of the Doeblin minoration, the projective contraction
//! inequalities, and the sandwich bounds.
//!
//! `P_{k,n}^N(x,y) = (m_{n,N}(y) / m_{k,N}(x)) M_{k,n}(x,y)` is
//! row-stochastic; it is built here from the normalized window product and
//! normalized mass vector, so all scales cancel exactly and the
//! construction stays in range for any `N - k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::PositiveKernel;
use crate::measure::{check_dim, tv_distance, SignedMeasure};
use crate::window::ProductWindow;

/// Row-stochastic reweighting of `M_{k,n}` by the future masses `m_{.,N}`.
#[derive(Debug, Clone)]
pub struct AuxiliaryOperator {
    pub matrix: PositiveKernel,
    pub k: usize,
    pub n: usize,
    pub big_n: usize,
}

impl AuxiliaryOperator {
    /// `delta_x P_{k,n}^N` as a probability measure.
    pub fn row(&self, x: usize) -> SignedMeasure {
        let p = self.matrix.dim();
        SignedMeasure::new((0..p).map(|y| self.matrix.entry(x, y)).collect())
    }
}

/// One inequality-check outcome; `slack = rhs - lhs` (negative = violated).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn new(check: &str, params: serde_json::Value, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        CheckRecord {
            check: check.to_string(),
            params,
            lhs,
            rhs,
            slack,
            pass: slack >= -tol,
        }
    }
}

/// Builds `P_{k,n}^N`. Requires `k <= n <= N` and `m_{k,N}(x) > 0` for
/// every `x`.
pub fn aux_p(window: &ProductWindow, k: usize, n: usize, big_n: usize) -> Result<AuxiliaryOperator> {
    if !(k <= n && n <= big_n && big_n <= window.len()) {
        return Err(Error::IndexRange(format!(
            "aux_p needs k <= n <= N <= len, got ({k},{n},{big_n}) with len {}",
            window.len()
        )));
    }
    let p = window.dim();
    let future = window.mass_vector(n, big_n)?;
    let prod = window.product(k, n)?;
    let mut entries = vec![0.0; p * p];
    for x in 0..p {
        let mut row: Vec<f64> = (0..p)
            .map(|y| prod.kernel.entry(x, y) * future.values[y])
            .collect();
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroRow { state: x });
        }
        for v in &mut row {
            *v /= total;
        }
        entries[x * p..(x + 1) * p].copy_from_slice(&row);
    }
    Ok(AuxiliaryOperator {
        matrix: PositiveKernel::dense(p, entries)?,
        k,
        n,
        big_n,
    })
}

/// The minorating measure `nu_{n,N}(y) = nu_n(y) m_{n+1,N}(y) /
/// nu_n(m_{n+1,N})` of the Doeblin lemma.
pub fn doeblin_nu(
    window: &ProductWindow,
    nu: &SignedMeasure,
    n: usize,
    big_n: usize,
) -> Result<SignedMeasure> {
    check_dim(window.dim(), nu.dim())?;
    let future = window.mass_vector(n + 1, big_n)?;
    let weights: Vec<f64> = nu
        .weights()
        .iter()
        .zip(&future.values)
        .map(|(w, v)| w * v)
        .collect();
    let (out, _) = SignedMeasure::new(weights)
        .normalize()
        .map_err(|_| Error::DegenerateProduct { n: big_n - n })?;
    Ok(out)
}

/// Verifies `delta_x P_{n,n+1}^N >= gamma_n nu_{n,N}` entrywise for the
/// given step triplet.
pub fn check_doeblin_minoration(
    window: &ProductWindow,
    n: usize,
    big_n: usize,
    nu: &SignedMeasure,
    gamma_n: f64,
    tol: f64,
) -> Result<CheckRecord> {
    let p = window.dim();
    let aux = aux_p(window, n, n + 1, big_n)?;
    let nu_mix = doeblin_nu(window, nu, n, big_n)?;
    let mut worst = f64::INFINITY;
    let mut witness = (0, 0);
    for x in 0..p {
        for y in 0..p {
            let slack = aux.matrix.entry(x, y) - gamma_n * nu_mix.weight(y);
            if slack < worst {
                worst = slack;
                witness = (x, y);
            }
        }
    }
    Ok(CheckRecord::new(
        "doeblin_minoration",
        serde_json::json!({"n": n, "N": big_n, "gamma": gamma_n, "witness": witness}),
        gamma_n * nu_mix.weight(witness.1),
        aux.matrix.entry(witness.0, witness.1),
        tol,
    ))
}

/// `||mu1 . M_{k,n} - mu2 . M_{k,n}||_TV <= 2 prod_{i=k}^{n-1} (1 - gamma_i)`.
pub fn projective_contraction_check(
    window: &ProductWindow,
    mu1: &SignedMeasure,
    mu2: &SignedMeasure,
    k: usize,
    n: usize,
    gammas: &[f64],
) -> Result<CheckRecord> {
    let (pi1, _) = window.evolve(mu1, k, n)?;
    let (pi2, _) = window.evolve(mu2, k, n)?;
    let lhs = tv_distance(&pi1, &pi2)?;
    let factor: f64 = gammas[k..n].iter().map(|&g| 1.0 - g).product();
    let rhs = 2.0 * factor;
    Ok(CheckRecord::new(
        "projective_contraction",
        serde_json::json!({"k": k, "n": n}),
        lhs,
        rhs,
        1e-12,
    ))
}

/// `gamma_{n-1} |mu1(m_{k,N})/mu1(m_{k,n}) - mu2(m_{k,N})/mu2(m_{k,n})|
/// <= 2 (mu2(m_{k,N})/mu2(m_{k,n})) prod_{i=k}^{n-1} (1 - gamma_i)`.
pub fn growth_ratio_check(
    window: &ProductWindow,
    mu1: &SignedMeasure,
    mu2: &SignedMeasure,
    k: usize,
    n: usize,
    big_n: usize,
    gammas: &[f64],
) -> Result<CheckRecord> {
    if !(k <= n && n <= big_n && n >= 1) {
        return Err(Error::IndexRange(format!(
            "growth_ratio_check needs k <= n <= N, n >= 1; got ({k},{n},{big_n})"
        )));
    }
    let far = window.mass_vector(k, big_n)?;
    let near = window.mass_vector(k, n)?;
    let ratio = |mu: &SignedMeasure| -> Result<f64> {
        Ok((far.log_pair(mu)? - near.log_pair(mu)?).exp())
    };
    let r1 = ratio(mu1)?;
    let r2 = ratio(mu2)?;
    let factor: f64 = gammas[k..n].iter().map(|&g| 1.0 - g).product();
    let lhs = gammas[n - 1] * (r1 - r2).abs();
    let rhs = 2.0 * r2 * factor;
    Ok(CheckRecord::new(
        "growth_ratio",
        serde_json::json!({"k": k, "n": n, "N": big_n}),
        lhs,
        rhs,
        1e-12 * rhs.max(1.0),
    ))
}

/// Sandwich of the log-mass increments, in log space:
/// `gamma_k ||mu M_{0,k+1}|| |||M_{k+1,n}||| <= ||mu M_{0,n}|| <=
/// ||mu M_{0,k+1}|| |||M_{k+1,n}|||`.
pub fn sandwich_gamma_check(
    window: &ProductWindow,
    mu: &SignedMeasure,
    k: usize,
    n: usize,
    gamma_k: f64,
) -> Result<SandwichRecord> {
    if k >= n {
        return Err(Error::IndexRange(format!(
            "sandwich_gamma_check needs k < n, got ({k},{n})"
        )));
    }
    let (_, log_full) = window.evolve(mu, 0, n)?;
    let (_, log_head) = window.evolve(mu, 0, k + 1)?;
    let log_tail_norm = window.log_op_norm(k + 1, n)?;
    let upper = log_head + log_tail_norm;
    let tol = 1e-12 * upper.abs().max(1.0);
    let upper_ok = log_full <= upper + tol;
    let lower_ok = if gamma_k > 0.0 {
        gamma_k.ln() + upper <= log_full + tol
    } else {
        true
    };
    Ok(SandwichRecord {
        log_lower: if gamma_k > 0.0 {
            gamma_k.ln() + upper
        } else {
            f64::NEG_INFINITY
        },
        log_mid: log_full,
        log_upper: upper,
        pass: upper_ok && lower_ok,
    })
}

/// The three log quantities of the sandwich inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichRecord {
    pub log_lower: f64,
    pub log_mid: f64,
    pub log_upper: f64,
    pub pass: bool,
}
