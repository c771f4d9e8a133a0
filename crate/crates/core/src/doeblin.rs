//! Admissible triplets `(nu, c, d)` and the derived coupling-coefficient
//! series: `gamma_n`, `gamma_bar`, `Gamma_{k,n}`, `tau_n^eps`,
//! `Delta_{k,n}^eps`.
//!
//! A triplet certifies the Doeblin minoration `M(x,y) >= c m(x) nu(y)`
//! entrywise and the mass-capture inequality `nu(m_{1,n}) >= d |||M_{1,n}|||`
//! up to a horizon. `gamma = c d` is the per-step coupling strength.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::PositiveKernel;
use crate::measure::{check_dim, SignedMeasure};
use crate::window::ProductWindow;

/// How a triplet's `d` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Inequalities hold at every horizon (structural argument).
    Exact,
    /// `d` certified only for horizons up to `n_max`.
    HorizonBounded { n_max: usize },
    /// Leslie closed forms `c = (1 + sup s/f)^-1`, `d = 1/(d' d'')`.
    LeslieClosedForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibleTriplet {
    pub nu: SignedMeasure,
    pub c: f64,
    pub d: f64,
    pub horizon_certified: usize,
    pub provenance: Provenance,
}

impl AdmissibleTriplet {
    pub fn gamma(&self) -> f64 {
        self.c * self.d
    }

    /// Re-verifies both defining inequalities against a realized window:
    /// the entrywise minoration on `window.kernel(step)` and the horizon
    /// inequality over the kernels after it. Returns the worst slacks
    /// (negative = violated).
    pub fn certify(&self, window: &ProductWindow, step: usize) -> Result<TripletCertificate> {
        let m = window.kernel(step);
        check_dim(m.dim(), self.nu.dim())?;
        let mass = m.row_sums();
        let mut c_slack = f64::INFINITY;
        let mut c_witness = (0, 0);
        for x in 0..m.dim() {
            for y in 0..m.dim() {
                let slack = m.entry(x, y) - self.c * mass[x] * self.nu.weight(y);
                if slack < c_slack {
                    c_slack = slack;
                    c_witness = (x, y);
                }
            }
        }
        let mut d_slack = f64::INFINITY;
        let mut d_witness = 1;
        let horizon = self
            .horizon_certified
            .min(window.len() - step);
        for n in 1..=horizon {
            let ratio = if n == 1 {
                1.0
            } else {
                let mass = window.mass_vector(step + 1, step + n)?;
                (mass.log_pair(&self.nu)? - mass.log_max()).exp()
            };
            let slack = ratio - self.d;
            if slack < d_slack {
                d_slack = slack;
                d_witness = n;
            }
        }
        Ok(TripletCertificate {
            c_slack,
            c_witness,
            d_slack,
            d_witness,
        })
    }
}

/// Worst slacks of the two triplet inequalities, with witnesses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripletCertificate {
    pub c_slack: f64,
    pub c_witness: (usize, usize),
    pub d_slack: f64,
    pub d_witness: usize,
}

impl TripletCertificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.c_slack >= -tol && self.d_slack >= -tol
    }
}

/// The largest `c` with `M(x,y) >= c m(x) nu(y)` entrywise:
/// `min_x min_{y: nu(y)>0} M(x,y) / (m(x) nu(y))`, clamped to `[0,1]`.
pub fn max_c(m: &PositiveKernel, nu: &SignedMeasure) -> Result<f64> {
    check_dim(m.dim(), nu.dim())?;
    let mass = m.row_sums();
    if let Some(x) = mass.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroRow { state: x });
    }
    let mut c = f64::INFINITY;
    for x in 0..m.dim() {
        for y in 0..m.dim() {
            let w = nu.weight(y);
            if w > 0.0 {
                c = c.min(m.entry(x, y) / (mass[x] * w));
            }
        }
    }
    Ok(c.clamp(0.0, 1.0))
}

/// The horizon-bounded `d`: `min_{1 <= n <= n_max} nu(m_{1,n}) / |||M_{1,n}|||`
/// over a window whose kernels are `M_1, M_2, ..` (time 1 onward). The
/// `n = 1` ratio is 1 (`m_{1,1} = 1`). Monotone nonincreasing in `n_max`.
pub fn d_horizon(
    nu: &SignedMeasure,
    window_from_1: &ProductWindow,
    n_max: usize,
) -> Result<(f64, usize)> {
    if n_max < 1 {
        return Err(Error::InvalidSpec("d_horizon needs n_max >= 1".into()));
    }
    check_dim(window_from_1.dim(), nu.dim())?;
    let horizon = n_max.min(window_from_1.len() + 1);
    let mut d = 1.0_f64;
    for n in 2..=horizon {
        let mass = window_from_1.mass_vector(0, n - 1)?;
        let ratio = (mass.log_pair(nu)? - mass.log_max()).exp();
        d = d.min(ratio);
    }
    Ok((d, horizon))
}

/// `gamma_bar = exp E[log(1 - gamma)]`; 0 when some `gamma = 1` drives the
/// log-mean to `-inf`.
pub fn gamma_bar(gammas: &[f64]) -> Result<f64> {
    if gammas.is_empty() {
        return Err(Error::InvalidSpec("gamma_bar of an empty sample".into()));
    }
    let mean: f64 =
        gammas.iter().map(|&g| (1.0 - g).ln()).sum::<f64>() / gammas.len() as f64;
    Ok(mean.exp())
}

/// Sentinel-valued last coupling time `tau_n^eps = max{i <= n : gamma_{i-1}
/// >= eps}`; `None` when no coupling of strength `eps` occurred.
pub fn tau_eps(gammas: &[f64], n: usize, eps: f64) -> Option<usize> {
    (1..=n.min(gammas.len()))
        .rev()
        .find(|&i| gammas[i - 1] >= eps)
}

/// `Gamma_{k,n} = (1/gamma_{n-1}) prod_{i=k}^{n-1} (1 - gamma_i)`;
/// `+inf` when `gamma_{n-1} = 0`.
pub fn big_gamma(k: usize, n: usize, gammas: &[f64]) -> f64 {
    assert!(k <= n && n >= 1 && n <= gammas.len());
    if gammas[n - 1] <= 0.0 {
        return f64::INFINITY;
    }
    let prod: f64 = gammas[k..n].iter().map(|&g| 1.0 - g).product();
    prod / gammas[n - 1]
}

/// `Delta_{k,n}^eps = 8 Gamma_{k,tau} / (1 - 2 Gamma_{k,tau})` with
/// `tau = tau_n^eps`; `None` while `tau` is undefined or `2 Gamma >= 1`
/// (the caller must grow `n`).
pub fn delta(k: usize, n: usize, eps: f64, gammas: &[f64]) -> Option<f64> {
    let tau = tau_eps(gammas, n, eps)?;
    if tau <= k {
        return None;
    }
    let g = big_gamma(k, tau, gammas);
    if 2.0 * g < 1.0 {
        Some(8.0 * g / (1.0 - 2.0 * g))
    } else {
        None
    }
}

/// Default `eps` for `tau_n^eps`: the 25th percentile of the positive
/// gamma values (the theory only needs `P[gamma >= eps] > 0`).
pub fn default_eps(gammas: &[f64]) -> Option<f64> {
    let mut positive: Vec<f64> = gammas.iter().copied().filter(|&g| g > 0.0).collect();
    if positive.is_empty() {
        return None;
    }
    positive.sort_by(|a, b| a.total_cmp(b));
    Some(positive[(positive.len() - 1) / 4])
}

/// Candidate minoration measures for one kernel: Diracs, uniform, and the
/// normalized column maxima.
pub fn nu_candidates(m: &PositiveKernel) -> Vec<SignedMeasure> {
    let p = m.dim();
    let mut cands: Vec<SignedMeasure> = (0..p).map(|y| SignedMeasure::dirac(p, y)).collect();
    cands.push(SignedMeasure::uniform(p));
    let col_max: Vec<f64> = (0..p)
        .map(|y| (0..p).map(|x| m.entry(x, y)).fold(0.0_f64, f64::max))
        .collect();
    if let Ok((nu, _)) = SignedMeasure::new(col_max).normalize() {
        cands.push(nu);
    }
    cands
}

/// Scans the candidate `nu` list and keeps the triplet maximizing
/// `gamma = c d` for the kernel at `step`, with `d` certified over the
/// kernels after `step` up to `n_max`.
pub fn best_triplet(
    window: &ProductWindow,
    step: usize,
    n_max: usize,
) -> Result<AdmissibleTriplet> {
    let m = window.kernel(step);
    let tail = if step + 1 < window.len() {
        Some(ProductWindow::new(window.kernels()[step + 1..].to_vec())?)
    } else {
        None
    };
    let mut best: Option<AdmissibleTriplet> = None;
    for nu in nu_candidates(m) {
        let c = max_c(m, &nu)?;
        let (d, horizon) = match &tail {
            Some(t) => d_horizon(&nu, t, n_max)?,
            None => (1.0, 1),
        };
        let cand = AdmissibleTriplet {
            nu,
            c,
            d,
            horizon_certified: horizon,
            provenance: Provenance::HorizonBounded { n_max: horizon },
        };
        if best.as_ref().is_none_or(|b| cand.gamma() > b.gamma()) {
            best = Some(cand);
        }
    }
    Ok(best.expect("candidate list is never empty"))
}

/// The per-step coupling series of one realized window: `gamma_k` from the
/// best scanned triplet at each step `k < n`, each `d` certified over the
/// remaining window capped at `d_horizon_cap`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaSeries {
    pub gammas: Vec<f64>,
    pub eps: Option<f64>,
}

impl GammaSeries {
    pub fn from_window(window: &ProductWindow, n: usize, d_horizon_cap: usize) -> Result<Self> {
        let mut gammas = Vec::with_capacity(n);
        for k in 0..n.min(window.len()) {
            gammas.push(best_triplet(window, k, d_horizon_cap)?.gamma());
        }
        let eps = default_eps(&gammas);
        Ok(GammaSeries { gammas, eps })
    }

    pub fn from_values(gammas: Vec<f64>) -> Self {
        let eps = default_eps(&gammas);
        GammaSeries { gammas, eps }
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// `prod_{i=k}^{n-1} (1 - gamma_i)`, the TV contraction factor.
    pub fn contraction_factor(&self, k: usize, n: usize) -> f64 {
        self.gammas[k..n].iter().map(|&g| 1.0 - g).product()
    }

    pub fn gamma_bar(&self) -> Result<f64> {
        gamma_bar(&self.gammas)
    }

    pub fn frac_at_least(&self, eps: f64) -> f64 {
        if self.gammas.is_empty() {
            return 0.0;
        }
        self.gammas.iter().filter(|&&g| g >= eps).count() as f64 / self.gammas.len() as f64
    }

    pub fn tau(&self, n: usize, eps: f64) -> Option<usize> {
        tau_eps(&self.gammas, n, eps)
    }

    pub fn big_gamma(&self, k: usize, n: usize) -> f64 {
        big_gamma(k, n, &self.gammas)
    }

    pub fn delta(&self, k: usize, n: usize, eps: f64) -> Option<f64> {
        delta(k, n, eps, &self.gammas)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_kernel(rng: &mut impl Rng, p: usize) -> PositiveKernel {
        let entries = (0..p * p).map(|_| rng.random_range(0.05..2.0)).collect();
        PositiveKernel::dense(p, entries).unwrap()
    }

    #[test]
    fn max_c_rank_one_uniform() {
        let m = PositiveKernel::ones(2);
        let nu = SignedMeasure::uniform(2);
        assert_eq!(max_c(&m, &nu).unwrap(), 1.0);
    }

    #[test]
    fn max_c_identity_is_zero() {
        let m = PositiveKernel::identity(2);
        let nu = SignedMeasure::uniform(2);
        assert_eq!(max_c(&m, &nu).unwrap(), 0.0);
    }

    #[test]
    fn max_c_leslie_matches_closed_form() {
        // c = (1 + sup s/f)^-1 = (1 + 0.5)^-1 = 2/3 with nu = delta_0
        let m = PositiveKernel::leslie(vec![1.0, 1.0, 1.0], vec![0.5, 0.5, 0.0]).unwrap();
        let nu = SignedMeasure::dirac(3, 0);
        let c = max_c(&m, &nu).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-15);
        // brute-force oracle over a c-grid
        let mass = m.row_sums();
        let holds = |c: f64| {
            (0..3).all(|x| (0..3).all(|y| m.entry(x, y) >= c * mass[x] * nu.weight(y) - 1e-15))
        };
        assert!(holds(c));
        assert!(!holds(c + 1e-6));
    }

    #[test]
    fn max_c_zero_row_rejected() {
        let m = PositiveKernel::dense(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            max_c(&m, &SignedMeasure::uniform(2)),
            Err(Error::ZeroRow { state: 0 })
        ));
    }

    #[test]
    fn max_c_tightness_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let p = rng.random_range(2..=6);
            let m = random_kernel(&mut rng, p);
            let nu = SignedMeasure::uniform(p);
            let c = max_c(&m, &nu).unwrap();
            let mass = m.row_sums();
            let slack_at = |c: f64| {
                (0..p)
                    .flat_map(|x| (0..p).map(move |y| (x, y)))
                    .map(|(x, y)| m.entry(x, y) - c * mass[x] * nu.weight(y))
                    .fold(f64::INFINITY, f64::min)
            };
            assert!(slack_at(c - 1e-9) >= 0.0);
            assert!(slack_at(c + 1e-9) < 0.0);
        }
    }

    #[test]
    fn d_horizon_constant_ones_is_one() {
        let w = ProductWindow::new(vec![PositiveKernel::ones(2); 10]).unwrap();
        let (d, h) = d_horizon(&SignedMeasure::uniform(2), &w, 8).unwrap();
        assert_eq!(d, 1.0);
        assert_eq!(h, 8);
    }

    #[test]
    fn d_horizon_matches_perron_ratio() {
        // constant M = [[2,1],[1,1]]: nu(m_n)/||m_n||_inf -> nu(h)/||h||_inf
        let m = PositiveKernel::dense(2, vec![2.0, 1.0, 1.0, 1.0]).unwrap();
        let w = ProductWindow::new(vec![m.clone(); 60]).unwrap();
        let nu = SignedMeasure::uniform(2);
        let (d, _) = d_horizon(&nu, &w, 50).unwrap();
        // power-iteration oracle for the right Perron vector
        let mut h: Vec<f64> = vec![1.0, 1.0];
        for _ in 0..2000 {
            let next = [2.0 * h[0] + h[1], h[0] + h[1]];
            let max = next[0].max(next[1]);
            h = vec![next[0] / max, next[1] / max];
        }
        let oracle = 0.5 * (h[0] + h[1]);
        assert!((d - oracle).abs() < 1e-6, "{d} vs {oracle}");
        assert!((d - 0.8090).abs() < 1e-3);
    }

    #[test]
    fn d_horizon_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let kernels: Vec<_> = (0..20).map(|_| random_kernel(&mut rng, 3)).collect();
        let w = ProductWindow::new(kernels).unwrap();
        let nu = SignedMeasure::uniform(3);
        let mut prev = f64::INFINITY;
        for n_max in 1..=20 {
            let (d, _) = d_horizon(&nu, &w, n_max).unwrap();
            assert!(d <= prev + 1e-15);
            prev = d;
        }
    }

    #[test]
    fn gamma_bar_arithmetic() {
        assert!((gamma_bar(&[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        let g = gamma_bar(&[0.0, 0.5]).unwrap();
        assert!((g - 0.5_f64.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_bar(&[1.0, 0.5]).unwrap(), 0.0);
        assert!(gamma_bar(&[]).is_err());
    }

    #[test]
    fn tau_eps_cases() {
        let g = [0.5, 0.0, 0.2];
        assert_eq!(tau_eps(&g, 3, 0.3), Some(1));
        assert_eq!(tau_eps(&g, 3, 0.1), Some(3));
        assert_eq!(tau_eps(&g, 3, 0.6), None);
    }

    #[test]
    fn big_gamma_cases() {
        let g = [0.5, 0.5, 0.5];
        assert!((big_gamma(0, 3, &g) - 0.25).abs() < 1e-15);
        assert_eq!(big_gamma(0, 2, &[0.5, 0.0]), f64::INFINITY);
        // loop oracle on a random sequence
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gs: Vec<f64> = (0..30).map(|_| rng.random_range(0.01..0.99)).collect();
        for &(k, n) in &[(0usize, 10usize), (3, 17), (10, 30)] {
            let mut prod = 1.0;
            for i in k..n {
                prod *= 1.0 - gs[i];
            }
            let oracle = prod / gs[n - 1];
            assert!((big_gamma(k, n, &gs) - oracle).abs() <= 1e-14 * oracle.abs());
        }
    }

    #[test]
    fn delta_cases() {
        // Gamma_{0,3} = 0.5^3/0.5 = 0.25: 8*0.25/0.5 = 4
        let g = [0.5; 3];
        let d = delta(0, 3, 0.1, &g).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
        // Gamma_{1,3} = 0.5 -> boundary, undefined
        assert!(delta(1, 3, 0.1, &g).is_none());
        assert!(delta(0, 5, 0.1, &[0.0; 5]).is_none());
    }

    #[test]
    fn delta_geometric_decay_rate() {
        // gamma = 0.5: log Delta slope -> log 0.5; fitted rate <= 0.55
        let gs = vec![0.5; 60];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for n in 3..=60 {
            if let Some(d) = delta(0, n, 0.1, &gs) {
                xs.push(n as f64);
                ys.push(d.ln());
            }
        }
        assert!(xs.len() > 40);
        let nx = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / nx;
        let my = ys.iter().sum::<f64>() / nx;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(slope.exp() <= 0.55, "rate {}", slope.exp());
    }

    #[test]
    fn contraction_product_converges_to_gamma_bar() {
        // (prod (1-gamma_i))^(1/n) within 0.02 of gamma_bar at n = 1e4
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut log_sum = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let g = if rng.random::<bool>() { 0.2 } else { 0.6 };
            log_sum += (1.0_f64 - g).ln();
        }
        let emp = (log_sum / n as f64).exp();
        let bar = gamma_bar(&[0.2, 0.6]).unwrap();
        assert!((emp - bar).abs() < 0.02);
    }

    #[test]
    fn best_triplet_certificate_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let p = rng.random_range(2..=6);
            let kernels: Vec<_> = (0..6).map(|_| random_kernel(&mut rng, p)).collect();
            let w = ProductWindow::new(kernels).unwrap();
            let t = best_triplet(&w, 0, 5).unwrap();
            assert!(t.gamma() > 0.0);
            let cert = t.certify(&w, 0).unwrap();
            assert!(cert.passes(1e-12), "cert {cert:?}");
        }
    }

    #[test]
    fn default_eps_quantile() {
        assert_eq!(default_eps(&[0.0, 0.0]), None);
        let g = [0.1, 0.4, 0.0, 0.2, 0.3];
        assert_eq!(default_eps(&g), Some(0.1));
    }
}
