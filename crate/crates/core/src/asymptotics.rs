//! The main limit theorems as estimators: the random function `h`, the
//! uniform rank-one approximation, Lyapunov exponents by three routes
//! (sequential cocycle, Kingman subadditive minimum, stationary integral),
//! and stationary-law sampling by time reversal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doeblin::{default_eps, delta, GammaSeries};
use crate::environment::{EnvironmentSpec, EnvironmentStream};
use crate::error::{Error, Result};
use crate::kernel::PositiveKernel;
use crate::measure::{tv_distance, BoundedFunction, SignedMeasure};
use crate::window::{NormalizedKernel, ProductWindow};

/// Stream-role tags for derived replica seeds.
pub mod roles {
    pub const SEQUENTIAL: u64 = 1;
    pub const KINGMAN: u64 = 2;
    pub const STATIONARY: u64 = 3;
    pub const INTEGRAL: u64 = 4;
    pub const INVARIANCE: u64 = 5;
    pub const CRITICAL: u64 = 6;
}

/// The mass-ratio limit `h_k(x) = lim_n m_{k,n}(x) / m_{k,n}(x0)`,
/// anchored at `h(x0) = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HEstimate {
    pub values: Vec<f64>,
    pub anchor: usize,
    /// Achieved relative-error envelope (`Delta/2`-style bound).
    pub error_bound: f64,
    pub n_used: usize,
}

impl HEstimate {
    pub fn pair(&self, mu: &SignedMeasure) -> Result<f64> {
        mu.pair(&BoundedFunction::new(self.values.clone()))
    }
}

/// One draw approximating the stationary projective law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectiveSample {
    pub measure: SignedMeasure,
    pub depth: usize,
    pub tv_increment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    Sequential,
    Kingman,
    Integral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub method: LyapunovMethod,
    pub n: usize,
    pub replicas: usize,
    pub std_error: Option<f64>,
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Estimates `h_k` on the realized future of `stream` (whose cursor is
/// taken as time `k`). Stops at the first checkpoint where the coupling
/// envelope falls below `tol`, or at `n_max` with the achieved envelope.
pub fn estimate_h(
    stream: &mut EnvironmentStream,
    anchor: Option<usize>,
    tol: f64,
    n_max: usize,
) -> Result<HEstimate> {
    if tol <= 0.0 || n_max == 0 {
        return Err(Error::InvalidSpec("estimate_h needs tol > 0, n_max >= 1".into()));
    }
    let mut kernels: Vec<PositiveKernel> = Vec::new();
    let mut acc: Option<NormalizedKernel> = None;
    let mut checkpoint = 1usize;
    let mut best: Option<HEstimate> = None;
    while kernels.len() < n_max {
        let m = stream.next_operator()?;
        let next = match &acc {
            None => NormalizedKernel::from_kernel(&m)?,
            Some(a) => {
                let raw = a.kernel.compose(&m)?;
                let norm = raw.op_norm();
                if norm <= 0.0 {
                    return Err(Error::DegenerateProduct { n: kernels.len() + 1 });
                }
                NormalizedKernel {
                    kernel: raw.scale(1.0 / norm)?,
                    log_scale: a.log_scale + norm.ln(),
                }
            }
        };
        kernels.push(m);
        acc = Some(next);
        let n = kernels.len();
        if n == checkpoint || n == n_max {
            checkpoint = (checkpoint * 2).min(n_max);
            let prod = acc.as_ref().unwrap();
            let window = ProductWindow::new(kernels.clone())?;
            let series = GammaSeries::from_window(&window, n, n.max(2))?;
            let eps = match default_eps(&series.gammas) {
                Some(e) => e,
                None => continue,
            };
            let envelope = match delta(0, n, eps, &series.gammas) {
                Some(d) => d / 2.0,
                None => continue,
            };
            let masses = prod.kernel.row_sums();
            if masses.iter().any(|&v| v <= 0.0) {
                return Err(Error::DegenerateProduct { n });
            }
            let x0 = anchor.unwrap_or_else(|| {
                masses
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            });
            let values: Vec<f64> = masses.iter().map(|&v| v / masses[x0]).collect();
            let est = HEstimate {
                values,
                anchor: x0,
                error_bound: envelope,
                n_used: n,
            };
            let improved = best
                .as_ref()
                .map_or(true, |b| est.error_bound <= b.error_bound);
            if improved {
                best = Some(est);
            }
            if best.as_ref().unwrap().error_bound <= tol {
                break;
            }
        }
    }
    best.ok_or(Error::NoCoupling { n_max })
}

/// One row of the uniform-approximation decay table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxRow {
    pub n: usize,
    /// `||mu1 M_{0,n} - (mu1(h)/mu2(h)) mu2 M_{0,n}|| / ||mu1 M_{0,n}||`.
    pub relative_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformApproxReport {
    pub rows: Vec<ApproxRow>,
    /// First `n` from which `relative_error <= delta^n` through the end of
    /// the range.
    pub crossover: Option<usize>,
    pub h_bound: f64,
}

/// Checks the rank-one approximation `||mu1 M_{0,n} - (mu1(h)/mu2(h))
/// mu2 M_{0,n}|| <= delta^n ||mu1 M_{0,n}||` over `n` in
/// `n_range = (n_lo, n_hi)`.
pub fn check_uniform_approx(
    spec: &EnvironmentSpec,
    mu1: &SignedMeasure,
    mu2: &SignedMeasure,
    delta_rate: f64,
    n_range: (usize, usize),
) -> Result<UniformApproxReport> {
    let (n_lo, n_hi) = n_range;
    if n_lo == 0 || n_hi < n_lo || !(0.0..1.0).contains(&delta_rate) {
        return Err(Error::InvalidSpec("bad uniform-approx range or rate".into()));
    }
    let mut h_stream = spec.stream();
    let h = estimate_h(&mut h_stream, None, 1e-10, (4 * n_hi).max(200))?;
    let ratio_h = h.pair(mu1)? / h.pair(mu2)?;
    let window = spec.stream().take_window(n_hi)?;
    let mut rows = Vec::with_capacity(n_hi - n_lo + 1);
    for n in n_lo..=n_hi {
        let (pi1, l1) = window.evolve(mu1, 0, n)?;
        let (pi2, l2) = window.evolve(mu2, 0, n)?;
        // LHS/||mu1 M|| in normalized space: the exp factor transports
        // mu2's log mass onto mu1's scale
        let scale = ratio_h * (l2 - l1).exp();
        let err: f64 = pi1
            .weights()
            .iter()
            .zip(pi2.weights())
            .map(|(a, b)| (a - scale * b).abs())
            .sum();
        rows.push(ApproxRow {
            n,
            relative_error: err,
            bound: delta_rate.powi(n as i32),
        });
    }
    let mut crossover = None;
    for i in (0..rows.len()).rev() {
        if rows[i].relative_error <= rows[i].bound {
            crossover = Some(rows[i].n);
        } else {
            break;
        }
    }
    Ok(UniformApproxReport {
        rows,
        crossover,
        h_bound: h.error_bound,
    })
}

/// `(1/n) sum_k log ||mu_k M_k||` over the normalized projective chain;
/// equals `(1/n) log (||mu M_{0,n}|| / ||mu||)` exactly by telescoping.
pub fn lyapunov_sequential(
    stream: &mut EnvironmentStream,
    mu: &SignedMeasure,
    n: usize,
) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(Error::InvalidSpec("lyapunov_sequential needs n >= 1".into()));
    }
    let (mut pi, _) = mu.normalize()?;
    let mut total = 0.0;
    for step in 0..n {
        let m = stream.next_operator()?;
        let (next, inc) = crate::kernel::projective_step(&pi, &m)
            .map_err(|_| Error::MassAnnihilated { step })?;
        pi = next;
        total += inc;
    }
    Ok(LyapunovEstimate {
        lambda: total / n as f64,
        method: LyapunovMethod::Sequential,
        n,
        replicas: 1,
        std_error: None,
    })
}

/// Sequential estimates across replicas with derived seeds; returns the
/// mean with its standard error.
pub fn lyapunov_sequential_replicated(
    spec: &EnvironmentSpec,
    mu: &SignedMeasure,
    n: usize,
    replicas: usize,
) -> Result<LyapunovEstimate> {
    let estimates: Result<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stream = spec.replica_stream(r as u64, roles::SEQUENTIAL);
            Ok(lyapunov_sequential(&mut stream, mu, n)?.lambda)
        })
        .collect();
    let estimates = estimates?;
    let (mean, se) = mean_and_se(&estimates);
    Ok(LyapunovEstimate {
        lambda: mean,
        method: LyapunovMethod::Sequential,
        n,
        replicas,
        std_error: Some(se),
    })
}

/// `min_{N <= n_max} (1/N) E log |||M_{0,N}|||` by Monte Carlo; an upper
/// bound on the Lyapunov exponent in expectation, nonincreasing in `N` up
/// to noise.
pub fn lyapunov_kingman(
    spec: &EnvironmentSpec,
    n_max: usize,
    replicas: usize,
) -> Result<LyapunovEstimate> {
    if n_max == 0 || replicas == 0 {
        return Err(Error::InvalidSpec("lyapunov_kingman needs n_max, replicas >= 1".into()));
    }
    // per replica, the whole curve N -> log |||M_{0,N}|||
    let curves: Result<Vec<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stream = spec.replica_stream(r as u64, roles::KINGMAN);
            let mut acc: Option<NormalizedKernel> = None;
            let mut curve = Vec::with_capacity(n_max);
            for step in 0..n_max {
                let m = stream.next_operator()?;
                let next = match &acc {
                    None => NormalizedKernel::from_kernel(&m)?,
                    Some(a) => {
                        let raw = a.kernel.compose(&m)?;
                        let norm = raw.op_norm();
                        if norm <= 0.0 {
                            return Err(Error::DegenerateProduct { n: step + 1 });
                        }
                        NormalizedKernel {
                            kernel: raw.scale(1.0 / norm)?,
                            log_scale: a.log_scale + norm.ln(),
                        }
                    }
                };
                let a = next;
                curve.push(a.kernel.op_norm().ln() + a.log_scale);
                acc = Some(a);
            }
            Ok(curve)
        })
        .collect();
    let curves = curves?;
    let mut best = (f64::INFINITY, 0.0, 1usize);
    for n in 1..=n_max {
        let samples: Vec<f64> = curves.iter().map(|c| c[n - 1] / n as f64).collect();
        let (mean, se) = mean_and_se(&samples);
        if mean < best.0 {
            best = (mean, se, n);
        }
    }
    Ok(LyapunovEstimate {
        lambda: best.0,
        method: LyapunovMethod::Kingman,
        n: best.2,
        replicas,
        std_error: Some(best.1),
    })
}

/// Draws from the stationary projective law by time reversal: fresh
/// i.i.d. kernels are prepended to the product (`Pi <- M_new Pi`) until
/// the TV increment of `mu . Pi` falls below `tol`. Exact only for i.i.d.
/// environments.
pub fn sample_stationary(
    spec: &EnvironmentSpec,
    tol: f64,
    n_max: usize,
    replicas: usize,
) -> Result<Vec<ProjectiveSample>> {
    if !spec.is_iid() {
        return Err(Error::NonIidSampling);
    }
    if tol <= 0.0 || n_max == 0 {
        return Err(Error::InvalidSpec("sample_stationary needs tol > 0, n_max >= 1".into()));
    }
    let mu = SignedMeasure::uniform(spec.dim());
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stream = spec.replica_stream(r as u64, roles::STATIONARY);
            let mut prod: Option<NormalizedKernel> = None;
            let mut sample: Option<SignedMeasure> = None;
            let mut increment = f64::INFINITY;
            let mut depth = 0;
            for step in 0..n_max {
                let m = stream.next_operator()?;
                let next = match &prod {
                    None => NormalizedKernel::from_kernel(&m)?,
                    Some(a) => {
                        // prepend: Pi <- M_new . Pi reverses time
                        let raw = m.compose(&a.kernel)?;
                        let norm = raw.op_norm();
                        if norm <= 0.0 {
                            return Err(Error::DegenerateProduct { n: step + 1 });
                        }
                        NormalizedKernel {
                            kernel: raw.scale(1.0 / norm)?,
                            log_scale: a.log_scale + norm.ln(),
                        }
                    }
                };
                let pushed = next.kernel.act_left(&mu)?;
                let (pi, _) = pushed
                    .normalize()
                    .map_err(|_| Error::MassAnnihilated { step })?;
                depth = step + 1;
                if let Some(prev) = &sample {
                    increment = tv_distance(prev, &pi)?;
                }
                sample = Some(pi);
                prod = Some(next);
                if increment < tol {
                    break;
                }
            }
            Ok(ProjectiveSample {
                measure: sample.expect("n_max >= 1"),
                depth,
                tv_increment: if increment.is_finite() { increment } else { 0.0 },
            })
        })
        .collect()
}

/// `lambda = int log ||mu M|| dLambda(mu) dP(M)` by Monte Carlo over
/// paired draws.
pub fn lyapunov_integral(
    spec: &EnvironmentSpec,
    samples: &[ProjectiveSample],
) -> Result<LyapunovEstimate> {
    if !spec.is_iid() {
        return Err(Error::NonIidSampling);
    }
    if samples.is_empty() {
        return Err(Error::InvalidSpec("lyapunov_integral needs Lambda samples".into()));
    }
    let terms: Result<Vec<f64>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut stream = spec.replica_stream(i as u64, roles::INTEGRAL);
            let m = stream.next_operator()?;
            let pushed = m.act_left(&s.measure)?;
            let norm = pushed.tv_norm();
            if norm <= 0.0 {
                return Err(Error::MassAnnihilated { step: 0 });
            }
            Ok(norm.ln())
        })
        .collect();
    let terms = terms?;
    let (mean, se) = mean_and_se(&terms);
    Ok(LyapunovEstimate {
        lambda: mean,
        method: LyapunovMethod::Integral,
        n: 1,
        replicas: samples.len(),
        std_error: Some(se),
    })
}

/// Energy-distance invariance diagnostic for the stationary law: pushes
/// each sample through one random projective step and compares the
/// before/after empirical laws in TV geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub statistic: f64,
    pub p_value: f64,
    pub compared: usize,
}

pub fn invariance_check(
    spec: &EnvironmentSpec,
    samples: &[ProjectiveSample],
    max_points: usize,
    permutations: usize,
) -> Result<InvarianceReport> {
    if !spec.is_iid() {
        return Err(Error::NonIidSampling);
    }
    let m_points = samples.len().min(max_points.max(2));
    let before: Vec<&SignedMeasure> = samples[..m_points].iter().map(|s| &s.measure).collect();
    let after: Result<Vec<SignedMeasure>> = before
        .par_iter()
        .enumerate()
        .map(|(i, mu)| {
            let mut stream = spec.replica_stream(i as u64, roles::INVARIANCE);
            let m = stream.next_operator()?;
            let pushed = m.act_left(mu)?;
            let (pi, _) = pushed
                .normalize()
                .map_err(|_| Error::MassAnnihilated { step: 0 })?;
            Ok(pi)
        })
        .collect();
    let after = after?;
    let pooled: Vec<&SignedMeasure> = before
        .iter()
        .copied()
        .chain(after.iter())
        .collect();
    let total = pooled.len();
    let mut dist = vec![0.0; total * total];
    for i in 0..total {
        for j in (i + 1)..total {
            let d = tv_distance(pooled[i], pooled[j])?;
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }
    }
    let energy = |idx_a: &[usize], idx_b: &[usize]| -> f64 {
        let avg = |ids_a: &[usize], ids_b: &[usize]| -> f64 {
            let mut s = 0.0;
            for &i in ids_a {
                for &j in ids_b {
                    s += dist[i * total + j];
                }
            }
            s / (ids_a.len() * ids_b.len()) as f64
        };
        2.0 * avg(idx_a, idx_b) - avg(idx_a, idx_a) - avg(idx_b, idx_b)
    };
    let base_a: Vec<usize> = (0..m_points).collect();
    let base_b: Vec<usize> = (m_points..total).collect();
    let statistic = energy(&base_a, &base_b);
    // permutation p-value with a deterministic derived-seed shuffler
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(crate::environment::derive_seed(
        spec.master_seed,
        0,
        roles::INVARIANCE,
    ));
    let mut at_least = 1usize;
    let mut indices: Vec<usize> = (0..total).collect();
    for _ in 0..permutations {
        indices.shuffle(&mut rng);
        let stat = energy(&indices[..m_points], &indices[m_points..]);
        if stat >= statistic {
            at_least += 1;
        }
    }
    Ok(InvarianceReport {
        statistic,
        p_value: at_least as f64 / (permutations + 1) as f64,
        compared: m_points,
    })
}
