//! Hilbert-metric comparison layer: uniform positivity certificates,
//! Hennion-style lower bounds for `d`, Birkhoff contraction coefficients,
//! and the discretized continuous-kernel example.
//!
//! The Birkhoff machinery is external-standard material included for
//! side-by-side comparison with the coupling constants; reports label it
//! as such.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contraction::aux_p;
use crate::doeblin::{best_triplet, AdmissibleTriplet, Provenance, TripletCertificate};
use crate::error::{Error, Result};
use crate::kernel::PositiveKernel;
use crate::measure::{check_dim, tv_distance, SignedMeasure};
use crate::window::ProductWindow;

/// Witness for the sandwich `K^-1 b(f) h <= Qf <= K b(f) h` over the
/// coordinate basis, with `h = Q1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformPositivityCertificate {
    pub flag: bool,
    pub h: Vec<f64>,
    pub k_const: f64,
    /// Sandwich re-verified on every basis function (with `b(f)` the
    /// geometric mean of the extreme ratios `(Qf)(x)/h(x)`).
    pub sandwich_verified: bool,
}

/// Positive-entries test with an explicit sandwich constant: for each
/// basis column the ratio spread `R_y = max_x r(x) / min_x r(x)` of
/// `r(x) = (Q e_y)(x) / h(x)` gives `K = max_y sqrt(R_y)`.
pub fn is_uniformly_positive(q: &PositiveKernel) -> UniformPositivityCertificate {
    let p = q.dim();
    let h = q.row_sums();
    if !q.all_entries_positive() {
        return UniformPositivityCertificate {
            flag: false,
            h,
            k_const: f64::INFINITY,
            sandwich_verified: false,
        };
    }
    let mut k_const = 1.0_f64;
    for y in 0..p {
        let ratios: Vec<f64> = (0..p).map(|x| q.entry(x, y) / h[x]).collect();
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        k_const = k_const.max((hi / lo).sqrt());
    }
    let mut verified = true;
    for y in 0..p {
        let ratios: Vec<f64> = (0..p).map(|x| q.entry(x, y) / h[x]).collect();
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let b = (hi * lo).sqrt();
        for &r in &ratios {
            if r > k_const * b * (1.0 + 1e-12) || r < b / k_const * (1.0 - 1e-12) {
                verified = false;
            }
        }
    }
    UniformPositivityCertificate {
        flag: true,
        h,
        k_const,
        sandwich_verified: verified,
    }
}

/// `inf_{x,y,z} M_{1,k}(y,z) / M_{1,k}(x,z)`: a lower bound for
/// `nu(m_{1,n}) / ||m_{1,n}||_inf` at every horizon `n >= k` and every
/// probability measure `nu`. Returns 0 when some entry of the window
/// product vanishes.
pub fn hennion_d_bound(window: &ProductWindow, nu: &SignedMeasure, k: usize) -> Result<f64> {
    check_dim(window.dim(), nu.dim())?;
    if k < 1 || k > window.len() {
        return Err(Error::IndexRange(format!(
            "hennion_d_bound needs 1 <= k <= len, got {k} with len {}",
            window.len()
        )));
    }
    let p = window.dim();
    let prod = window.product(0, k)?;
    let mut bound = f64::INFINITY;
    for z in 0..p {
        let col: Vec<f64> = (0..p).map(|x| prod.kernel.entry(x, z)).collect();
        let hi = col.iter().cloned().fold(0.0, f64::max);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        if lo <= 0.0 {
            return Ok(0.0);
        }
        bound = bound.min(lo / hi);
    }
    Ok(bound)
}

/// `d_H(u, v) = log(max_i u_i/v_i * max_j v_j/u_j)`; `+inf` when either
/// vector has a nonpositive entry.
pub fn hilbert_distance(u: &[f64], v: &[f64]) -> f64 {
    if u.len() != v.len() || u.iter().chain(v).any(|&w| w <= 0.0) {
        return f64::INFINITY;
    }
    let fwd = u
        .iter()
        .zip(v)
        .map(|(a, b)| a / b)
        .fold(0.0_f64, f64::max);
    let bwd = v
        .iter()
        .zip(u)
        .map(|(a, b)| a / b)
        .fold(0.0_f64, f64::max);
    (fwd * bwd).ln()
}

/// Birkhoff contraction coefficient `tau(Q) = (1 - sqrt(phi)) /
/// (1 + sqrt(phi))` with `phi` the minimal cross-ratio
/// `Q(x,z)Q(y,w) / (Q(y,z)Q(x,w))`; 1 (no contraction certified) when
/// some entry is nonpositive.
pub fn birkhoff_coefficient(q: &PositiveKernel) -> f64 {
    if !q.all_entries_positive() {
        return 1.0;
    }
    let p = q.dim();
    let mut phi = f64::INFINITY;
    for x in 0..p {
        for y in 0..p {
            for z in 0..p {
                for w in 0..p {
                    let ratio =
                        q.entry(x, z) * q.entry(y, w) / (q.entry(y, z) * q.entry(x, w));
                    phi = phi.min(ratio);
                }
            }
        }
    }
    let root = phi.sqrt();
    (1.0 - root) / (1.0 + root)
}

/// One line of the coupling-vs-Birkhoff comparison table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub instance_id: usize,
    pub gamma: f64,
    pub one_minus_gamma: f64,
    /// External-standard Birkhoff coefficient.
    pub tau_birkhoff: f64,
    /// Worst observed one-step TV factor of the conservative chain.
    pub observed_tv_factor: f64,
    /// Worst observed one-step projective Hilbert factor.
    pub observed_hilbert_factor: f64,
}

/// Builds the comparison table: per instance, the coupling constant
/// `gamma` of the best scanned triplet, the Birkhoff coefficient, and the
/// worst observed contraction factors over `pairs` random measure pairs.
/// The TV column tracks the conservative chain `P_{0,1}^2` (contraction
/// by `1 - gamma`), the Hilbert column the raw projective action
/// (contraction by `tau`).
pub fn compare_contractions(
    kernels: &[PositiveKernel],
    pairs: usize,
    seed: u64,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::with_capacity(kernels.len());
    for (instance_id, q) in kernels.iter().enumerate() {
        let p = q.dim();
        let window = ProductWindow::new(vec![q.clone(), q.clone()])?;
        let triplet = best_triplet(&window, 0, 1)?;
        let gamma = triplet.gamma();
        let aux = aux_p(&window, 0, 1, 2)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ instance_id as u64);
        let mut tv_factor = 0.0_f64;
        let mut hilbert_factor = 0.0_f64;
        for _ in 0..pairs {
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..p).map(|_| rng.random_range(0.05..1.0)).collect()
            };
            let (mu1, _) = SignedMeasure::new(draw(&mut rng)).normalize()?;
            let (mu2, _) = SignedMeasure::new(draw(&mut rng)).normalize()?;
            let before = tv_distance(&mu1, &mu2)?;
            if before > 1e-12 {
                let push = |mu: &SignedMeasure| mu.weights().to_vec();
                let step = |mu: &SignedMeasure| -> Result<SignedMeasure> {
                    let mut out = vec![0.0; p];
                    for (x, &w) in push(mu).iter().enumerate() {
                        for (y, o) in out.iter_mut().enumerate() {
                            *o += w * aux.matrix.entry(x, y);
                        }
                    }
                    Ok(SignedMeasure::new(out))
                };
                let after = tv_distance(&step(&mu1)?, &step(&mu2)?)?;
                tv_factor = tv_factor.max(after / before);
            }
            let u1 = draw(&mut rng);
            let u2 = draw(&mut rng);
            let before = hilbert_distance(&u1, &u2);
            if before > 1e-12 {
                let pushed = |u: &[f64]| -> Result<Vec<f64>> {
                    Ok(q.act_left(&SignedMeasure::new(u.to_vec()))?.weights().to_vec())
                };
                let after = hilbert_distance(&pushed(&u1)?, &pushed(&u2)?);
                hilbert_factor = hilbert_factor.max(after / before);
            }
        }
        rows.push(ComparisonRow {
            instance_id,
            gamma,
            one_minus_gamma: 1.0 - gamma,
            tau_birkhoff: birkhoff_coefficient(q),
            observed_tv_factor: tv_factor,
            observed_hilbert_factor: hilbert_factor,
        });
    }
    Ok(rows)
}

/// Grid truncation of the continuous-kernel example
/// `M(x, dy) = m(x) Q(x, y) dy` on `[0,1]` with midpoint nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretizedExample {
    pub kernel: PositiveKernel,
    pub triplet: AdmissibleTriplet,
    /// `K = max(1/min Q, max Q)` over the grid.
    pub k_const: f64,
    pub certificate: TripletCertificate,
}

/// Discretizes `M(x,y) = m(x) Q(x,y) / grid_n` at midpoint nodes
/// `x_i = (i + 1/2)/grid_n` and returns the example's closed-form triplet
/// `(nu = uniform, c = 1/K, d = (mean m) / (K^4 sup m))`, re-certified
/// against the built kernel.
pub fn discretize_kernel_example(
    grid_n: usize,
    m_func: impl Fn(f64) -> f64,
    q_func: impl Fn(f64, f64) -> f64,
) -> Result<DiscretizedExample> {
    if grid_n == 0 {
        return Err(Error::InvalidSpec("discretization needs grid_n >= 1".into()));
    }
    let node = |i: usize| (i as f64 + 0.5) / grid_n as f64;
    let m: Vec<f64> = (0..grid_n).map(|i| m_func(node(i))).collect();
    if m.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidSpec("m must be positive on the grid".into()));
    }
    let mut q_min = f64::INFINITY;
    let mut q_max = 0.0_f64;
    let mut entries = vec![0.0; grid_n * grid_n];
    for i in 0..grid_n {
        for j in 0..grid_n {
            let q = q_func(node(i), node(j));
            if q <= 0.0 || !q.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "Q must be positive on the grid, got {q} at ({i},{j})"
                )));
            }
            q_min = q_min.min(q);
            q_max = q_max.max(q);
            entries[i * grid_n + j] = m[i] * q / grid_n as f64;
        }
    }
    let kernel = PositiveKernel::dense(grid_n, entries)?;
    let k_const = (1.0 / q_min).max(q_max).max(1.0);
    let m_mean = m.iter().sum::<f64>() / grid_n as f64;
    let m_sup = m.iter().cloned().fold(0.0, f64::max);
    let triplet = AdmissibleTriplet {
        nu: SignedMeasure::uniform(grid_n),
        c: 1.0 / k_const,
        d: m_mean / (k_const.powi(4) * m_sup),
        horizon_certified: 1,
        provenance: Provenance::Exact,
    };
    let window = ProductWindow::new(vec![kernel.clone(), kernel.clone()])?;
    let certificate = triplet.certify(&window, 0)?;
    Ok(DiscretizedExample {
        kernel,
        triplet,
        k_const,
        certificate,
    })
}

/// Checks the structural obstruction of Leslie products to uniform
/// positivity: after `n` steps only ages `y < n` (rebirth paths) and
/// `y = x + n` (pure survival) are reachable, so `M_{0,n}(x, y) = 0`
/// whenever `y >= n` and `y != x + n`. Verifies the predicted zeros and
/// the negative positivity flag for every `n <= n_max`; `p > n_max + 1`
/// guarantees the pattern is nonempty.
pub fn leslie_zero_pattern_persists(window: &ProductWindow, n_max: usize) -> Result<bool> {
    let p = window.dim();
    for n in 1..=n_max.min(window.len()) {
        let prod = window.product(0, n)?;
        for x in 0..p {
            for y in 0..p {
                if y >= n && y != x + n && prod.kernel.entry(x, y) != 0.0 {
                    return Ok(false);
                }
            }
        }
        let has_zero = (0..p).any(|x| (0..p).any(|y| y >= n && y != x + n));
        if has_zero && is_uniformly_positive(&prod.kernel).flag {
            return Ok(false);
        }
    }
    Ok(true)
}
