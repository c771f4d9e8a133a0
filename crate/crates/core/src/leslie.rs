//! Leslie-matrix application suite: closed-form admissible triplets
//! `(delta_0, c, d)`, condition audits for the sufficient hypotheses, and
//! the `gamma = 0` counterexample built from block-structured fertility
//! boosts.

use serde::{Deserialize, Serialize};

use crate::doeblin::{AdmissibleTriplet, Provenance};
use crate::environment::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::kernel::{PositiveKernel, Storage};
use crate::measure::SignedMeasure;
use crate::window::ProductWindow;

/// Fertility/survival view of a Leslie kernel.
pub fn leslie_parts(kernel: &PositiveKernel) -> Option<(&[f64], &[f64])> {
    match kernel.storage() {
        Storage::Leslie { f, s } => Some((f, s)),
        Storage::Dense(_) => None,
    }
}

/// Builds the truncated Leslie kernel with first column `f` and
/// superdiagonal `s`; the positivity assumption requires `f_x + s_x > 0`
/// for every age `x`.
pub fn build_leslie(f: Vec<f64>, s: Vec<f64>) -> Result<PositiveKernel> {
    if let Some(x) = f.iter().zip(&s).position(|(&a, &b)| a + b <= 0.0) {
        return Err(Error::ZeroRow { state: x });
    }
    PositiveKernel::leslie(f, s)
}

/// Worst-case fertility ratio report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DPrimeReport {
    /// `sup_{k, x <= y} f_y^k / f_x^k`; `+inf` when a zero fertility sits
    /// below a positive one.
    pub value: f64,
    /// `(sample index, x, y)` attaining the sup.
    pub witness: Option<(usize, usize, usize)>,
    /// The running sup still grew between the first and second half of
    /// the sample: essential sup may be unbounded.
    pub unbounded_suspect: bool,
}

/// `d' = sup` over sampled fertility sequences and pairs `x <= y` of
/// `f_y / f_x`.
pub fn d_prime(f_samples: &[Vec<f64>]) -> Result<DPrimeReport> {
    if f_samples.is_empty() {
        return Err(Error::InvalidSpec("d_prime needs samples".into()));
    }
    let sup_of = |samples: &[Vec<f64>]| {
        let mut sup = 0.0_f64;
        let mut witness = None;
        for (k, f) in samples.iter().enumerate() {
            for x in 0..f.len() {
                for y in x..f.len() {
                    let ratio = if f[x] > 0.0 {
                        f[y] / f[x]
                    } else if f[y] > 0.0 {
                        f64::INFINITY
                    } else {
                        continue;
                    };
                    if ratio > sup {
                        sup = ratio;
                        witness = Some((k, x, y));
                    }
                }
            }
        }
        (sup, witness)
    };
    let (half_sup, _) = sup_of(&f_samples[..f_samples.len().div_ceil(2)]);
    let (value, witness) = sup_of(f_samples);
    Ok(DPrimeReport {
        value,
        witness,
        unbounded_suspect: f_samples.len() > 1 && value > half_sup && value.is_finite(),
    })
}

/// Horizon-bounded survival-chain ratio sup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DDoublePrimeReport {
    pub value: f64,
    pub horizon: usize,
    /// True when the monotone-survival pattern held and the closed bound
    /// applied exactly.
    pub exact: bool,
}

/// `d'' = sup_{x, k <= horizon} (s_x^0 .. s_{x+k}^k) / (s_0^0 .. s_k^k)`
/// over time-indexed survival sequences `s^0, s^1, ..`, in log space.
/// When every sampled sequence is nonincreasing in age the sup is 1
/// (attained at `x = 0`) and the value is exact at every horizon.
pub fn d_double_prime(s_seqs: &[Vec<f64>], horizon: usize) -> Result<DDoublePrimeReport> {
    if s_seqs.is_empty() {
        return Err(Error::InvalidSpec("d_double_prime needs survival sequences".into()));
    }
    let mut horizon = horizon.min(s_seqs.len() - 1);
    let ages = s_seqs[0].len();
    let monotone = s_seqs
        .iter()
        .all(|s| s.windows(2).all(|w| w[1] <= w[0] || w[1] == 0.0));
    let mut sup = 1.0_f64; // x = 0 term is ratio 1 at every k
    let mut log_denominator = 0.0;
    for k in 0..=horizon {
        // denominator chain s_0^0 .. s_k^k
        let step = s_seqs[k].get(k).copied().unwrap_or(0.0);
        if step <= 0.0 {
            // the chain cannot extend past a dead survival: the sup over
            // longer windows is vacuous, so the horizon saturates here
            if k == 0 {
                return Err(Error::DegenerateProduct { n: 0 });
            }
            horizon = k - 1;
            break;
        }
        log_denominator += step.ln();
        for x in 1..ages {
            if x + k >= ages {
                break;
            }
            let mut log_num = 0.0;
            let mut dead = false;
            for j in 0..=k {
                let v = s_seqs[j][x + j];
                if v <= 0.0 {
                    dead = true;
                    break;
                }
                log_num += v.ln();
            }
            if !dead {
                sup = sup.max((log_num - log_denominator).exp());
            }
        }
    }
    Ok(DDoublePrimeReport {
        value: if monotone { 1.0 } else { sup },
        horizon,
        exact: monotone,
    })
}

/// Closed-form `c = (1 + sup_x s_x / f_x)^-1` with `nu = delta_0`;
/// 0 when some fertility vanishes while its survival does not.
pub fn leslie_c(kernel: &PositiveKernel) -> Result<f64> {
    let (f, s) = leslie_parts(kernel)
        .ok_or_else(|| Error::InvalidSpec("leslie_c needs Leslie storage".into()))?;
    let mut sup = 0.0_f64;
    for (&fx, &sx) in f.iter().zip(s) {
        if fx <= 0.0 {
            if sx > 0.0 {
                return Ok(0.0);
            }
        } else {
            sup = sup.max(sx / fx);
        }
    }
    Ok(1.0 / (1.0 + sup))
}

/// The Leslie closed-form triplet for the kernel at time 0 of a realized
/// window: `nu = delta_0`, `c` from the time-0 kernel, `d = 1/(d' d'')`
/// over the shifted (time 1 onward) kernels up to `horizon`.
pub fn leslie_triplet(window: &ProductWindow, horizon: usize) -> Result<AdmissibleTriplet> {
    let first = window.kernel(0);
    let c = leslie_c(first)?;
    let shifted: Vec<(&[f64], &[f64])> = window.kernels()[1..]
        .iter()
        .map(|k| {
            leslie_parts(k)
                .ok_or_else(|| Error::InvalidSpec("leslie_triplet needs Leslie kernels".into()))
        })
        .collect::<Result<_>>()?;
    let d = if shifted.is_empty() {
        1.0
    } else {
        let f_samples: Vec<Vec<f64>> = shifted.iter().map(|(f, _)| f.to_vec()).collect();
        let s_seqs: Vec<Vec<f64>> = shifted.iter().map(|(_, s)| s.to_vec()).collect();
        let dp = d_prime(&f_samples)?;
        let dpp = d_double_prime(&s_seqs, horizon)?;
        if dp.value.is_finite() {
            1.0 / (dp.value * dpp.value)
        } else {
            0.0
        }
    };
    Ok(AdmissibleTriplet {
        nu: SignedMeasure::dirac(first.dim(), 0),
        c,
        d,
        horizon_certified: horizon,
        provenance: Provenance::LeslieClosedForm,
    })
}

/// Per-condition audit of the sufficient hypotheses for a Leslie
/// environment family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeslieAuditReport {
    /// i) `f_x + s_x > 0` for every age of every member.
    pub positivity: bool,
    /// ii) `sup_x (f_x + s_x)` finite for every member.
    pub log_plus_sup: bool,
    /// iii) a deterministic bound `A` on the fertility ratios.
    pub fertility_ratio_bound: Option<f64>,
    /// iv) positive probability of finite `sup s/f` and finite `d''`.
    pub coupling_possible: bool,
    /// v) `sup s/f` finite for every member (log+ integrability).
    pub log_plus_sf: bool,
    /// vi) `d''` finite and log-integrable at the audit horizon.
    pub d_double_prime_finite: bool,
    /// Empirical `P[gamma > 0]` across the family.
    pub gamma_pos_prob: f64,
    /// True when the audit could only sample, not enumerate.
    pub empirical: bool,
    /// `d'' -> 0` style warning: closed-form `d` kept shrinking with the
    /// horizon, so `gamma = 0` is suspected.
    pub gamma_zero_suspect: bool,
}

impl LeslieAuditReport {
    pub fn all_pass(&self) -> bool {
        self.positivity
            && self.log_plus_sup
            && self.fertility_ratio_bound.is_some()
            && self.coupling_possible
            && self.log_plus_sf
            && self.d_double_prime_finite
    }
}

pub fn audit_conditions(spec: &EnvironmentSpec, horizon: usize) -> Result<LeslieAuditReport> {
    let family: Vec<(&[f64], &[f64])> = spec
        .family()
        .iter()
        .map(|k| {
            leslie_parts(k)
                .ok_or_else(|| Error::InvalidSpec("audit_conditions needs Leslie kernels".into()))
        })
        .collect::<Result<_>>()?;
    let positivity = family
        .iter()
        .all(|(f, s)| f.iter().zip(*s).all(|(&a, &b)| a + b > 0.0));
    let log_plus_sup = family
        .iter()
        .all(|(f, s)| f.iter().zip(*s).all(|(&a, &b)| (a + b).is_finite()));
    let f_samples: Vec<Vec<f64>> = family.iter().map(|(f, _)| f.to_vec()).collect();
    let dp = d_prime(&f_samples)?;
    let fertility_ratio_bound = dp.value.is_finite().then_some(dp.value);
    let sf_finite = |f: &[f64], s: &[f64]| {
        f.iter()
            .zip(s)
            .all(|(&fx, &sx)| fx > 0.0 || sx == 0.0)
    };
    let log_plus_sf = family.iter().all(|(f, s)| sf_finite(f, s));
    let frac_sf = family.iter().filter(|(f, s)| sf_finite(f, s)).count() as f64
        / family.len() as f64;
    // d'' over a synthetic constant-in-time replay of each member
    let mut dpp_finite = true;
    let mut d_curve_shrinks = false;
    let mut gamma_pos = 0usize;
    for k in spec.family() {
        let window = ProductWindow::new(vec![k.clone(); horizon + 1])?;
        match leslie_triplet(&window, horizon) {
            Ok(t) => {
                if t.gamma() > 0.0 {
                    gamma_pos += 1;
                }
                let short = leslie_triplet(&window, horizon / 2)?;
                if t.d < 1e-3 && t.d < short.d * 0.5 {
                    d_curve_shrinks = true;
                }
            }
            Err(_) => dpp_finite = false,
        }
    }
    let gamma_pos_prob = gamma_pos as f64 / family.len() as f64;
    Ok(LeslieAuditReport {
        positivity,
        log_plus_sup,
        fertility_ratio_bound,
        coupling_possible: frac_sf > 0.0 && dpp_finite,
        log_plus_sf,
        d_double_prime_finite: dpp_finite,
        gamma_pos_prob,
        empirical: false,
        gamma_zero_suspect: d_curve_shrinks || gamma_pos_prob == 0.0,
    })
}

/// Generator for the 0/1 fertility-boost sequence `eps` of the
/// counterexample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BlockRule {
    /// Concatenated blocks `0^{j^2} 1^j`, `j = 1, 2, ..`: prefix density
    /// `S_x / x <= 1/2` with `S_x / x -> 0`, and arbitrarily long 1-runs.
    SquareGap,
    /// Explicit 0/1 prefix.
    Explicit(Vec<u8>),
}

impl BlockRule {
    pub fn prefix(&self, len: usize) -> Vec<u8> {
        match self {
            BlockRule::SquareGap => {
                let mut out = Vec::with_capacity(len);
                let mut j = 1usize;
                while out.len() < len {
                    for _ in 0..j * j {
                        out.push(0);
                    }
                    for _ in 0..j {
                        out.push(1);
                    }
                    j += 1;
                }
                out.truncate(len);
                out
            }
            BlockRule::Explicit(bits) => bits.iter().take(len).copied().collect(),
        }
    }
}

/// Longest 1-run fully inside the prefix: `(start, length)`.
pub fn longest_one_run(eps: &[u8]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut run_start = 0;
    let mut run_len = 0;
    for (i, &e) in eps.iter().enumerate() {
        if e == 1 {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if run_len > best.1 {
                best = (run_start, run_len);
            }
        } else {
            run_len = 0;
        }
    }
    best
}

/// One verified depth of the counterexample growth table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    /// `log (||m_{0,n}||_inf / m_{0,n}(0))`.
    pub lhs_log_ratio: f64,
    /// `n log (a^{1-alpha} (1-c) / 2)`.
    pub rhs_log_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub alpha: f64,
    pub c: f64,
    pub criterion_value: f64,
    pub criterion_met: bool,
    pub run_start: usize,
    pub run_len: usize,
    pub rows: Vec<GrowthRow>,
    /// `(n_max, d)` curve of the horizon-bounded `d` with `nu = delta_0`.
    pub d_curve: Vec<(usize, f64)>,
}

/// Builds the constant-environment Leslie kernel
/// `f_x = delta m(x)`, `s_x = (1 - delta) m(x)`, `m(x) = 1 + (a-1) eps_x`
/// and verifies the mass-ratio growth `||m_{0,n}||_inf / m_{0,n}(0) >=
/// (a^{1-alpha} (1-c) / 2)^n` along the longest 1-run, plus the decay of
/// the horizon-bounded `d`.
pub fn build_counterexample(
    a: f64,
    delta: f64,
    rule: &BlockRule,
    truncation: usize,
    d_horizon_max: usize,
) -> Result<(PositiveKernel, CounterexampleReport)> {
    if a <= 1.0 || !(0.0..1.0).contains(&delta) || delta <= 0.0 {
        return Err(Error::InvalidSpec("counterexample needs a > 1, delta in (0,1)".into()));
    }
    let eps = rule.prefix(truncation);
    // prefix-density constraints: S_x/x bounded away from 1 and vanishing
    let mut running = 0usize;
    let mut alpha = 0.0_f64;
    for (x, &e) in eps.iter().enumerate() {
        running += e as usize;
        alpha = alpha.max(running as f64 / (x + 1) as f64);
    }
    if alpha >= 1.0 {
        return Err(Error::InvalidSpec(
            "block rule has an all-ones prefix: S_x / x must stay below 1".into(),
        ));
    }
    let tail_density = running as f64 / truncation as f64;
    if tail_density > alpha.min(0.5) + 1e-12 && tail_density > 0.25 {
        return Err(Error::InvalidSpec(format!(
            "block rule density {tail_density} does not vanish over the prefix"
        )));
    }
    let (run_start, run_len) = longest_one_run(&eps);
    if run_start + run_len + run_len > truncation {
        return Err(Error::InvalidSpec(format!(
            "truncation {truncation} too small: longest run ends at {}",
            run_start + run_len
        )));
    }
    let m: Vec<f64> = eps
        .iter()
        .map(|&e| 1.0 + (a - 1.0) * e as f64)
        .collect();
    let f: Vec<f64> = m.iter().map(|&v| delta * v).collect();
    let s: Vec<f64> = m.iter().map(|&v| (1.0 - delta) * v).collect();
    let kernel = build_leslie(f, s)?;
    let c = leslie_c(&kernel)?;
    let criterion_value = a.powf(1.0 - alpha) * (1.0 - c) / 2.0;
    let criterion_met = criterion_value > 1.0;
    let mut rows = Vec::new();
    if criterion_met {
        let window = ProductWindow::new(vec![kernel.clone(); run_len])?;
        for n in 1..=run_len {
            let mass = window.mass_vector(0, n)?;
            let lhs = mass.log_max() - mass.log_value(0);
            rows.push(GrowthRow {
                n,
                lhs_log_ratio: lhs,
                rhs_log_bound: n as f64 * criterion_value.ln(),
            });
        }
    }
    let mut d_curve = Vec::new();
    if d_horizon_max > 0 {
        let window = ProductWindow::new(vec![kernel.clone(); d_horizon_max])?;
        let nu = SignedMeasure::dirac(truncation, 0);
        for n_max in (10..=d_horizon_max).step_by(10) {
            let (d, _) = crate::doeblin::d_horizon(&nu, &window, n_max)?;
            d_curve.push((n_max, d));
        }
    }
    Ok((
        kernel,
        CounterexampleReport {
            alpha,
            c,
            criterion_value,
            criterion_met,
            run_start,
            run_len,
            rows,
            d_curve,
        },
    ))
}
