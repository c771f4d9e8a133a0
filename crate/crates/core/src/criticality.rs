//! Critical-case (`lambda = 0`) diagnostics: oscillation of
//! `S_n = log ||mu M_{0,n}||` and an empirical null-homology detector.
//!
//! The null-homology detector is a declared heuristic: (NH) is
//! undecidable from finite data, so the verdict rests on whether the
//! spread of `S_n` among replicas with TV-close `mu_n` stays bounded
//! (coboundary-like) or grows like a random walk.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::roles;
use crate::environment::{EnvVariant, EnvironmentSpec, EnvironmentStream};
use crate::error::{Error, Result};
use crate::kernel::projective_step;
use crate::measure::{tv_distance, SignedMeasure};
use crate::window::NormalizedKernel;

/// Rescales every kernel of the spec by `exp(-lambda_hat)`, which shifts
/// every `(1/n) log ||mu M_{0,n}||` by exactly `-lambda_hat`.
pub fn center_environment(spec: &EnvironmentSpec, lambda_hat: f64) -> Result<EnvironmentSpec> {
    if !lambda_hat.is_finite() {
        return Err(Error::InvalidSpec("lambda_hat must be finite".into()));
    }
    let factor = (-lambda_hat).exp();
    let scale_all = |kernels: &[crate::kernel::PositiveKernel]| -> Result<Vec<_>> {
        kernels.iter().map(|k| k.scale(factor)).collect()
    };
    let variant = match &spec.variant {
        EnvVariant::Iid { kernels, weights } => EnvVariant::Iid {
            kernels: scale_all(kernels)?,
            weights: weights.clone(),
        },
        EnvVariant::Markov {
            kernels,
            transition,
            start,
        } => EnvVariant::Markov {
            kernels: scale_all(kernels)?,
            transition: transition.clone(),
            start: start.clone(),
        },
        EnvVariant::Periodic { kernels } => EnvVariant::Periodic {
            kernels: scale_all(kernels)?,
        },
        EnvVariant::Scripted { kernels } => EnvVariant::Scripted {
            kernels: scale_all(kernels)?,
        },
    };
    Ok(EnvironmentSpec {
        variant,
        master_seed: spec.master_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscVerdict {
    /// Both `+threshold` and `-threshold` crossed.
    Oscillating,
    /// Only one side crossed.
    OneSided,
    /// Neither side crossed.
    Bounded,
}

/// Excursion statistics of `S_n` relative to its start `S_0 = log ||mu||`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscReport {
    pub s_start: f64,
    pub s_final: f64,
    pub max_s: f64,
    pub min_s: f64,
    /// First `n` with `S_n - S_0 >= +threshold`.
    pub first_up: Option<usize>,
    /// First `n` with `S_n - S_0 <= -threshold`.
    pub first_down: Option<usize>,
    pub verdict: OscVerdict,
    pub n: usize,
}

/// Tracks `S_n = log ||mu M_{0,n}||_TV` over `n` steps and reports
/// threshold crossings of the centered excursion `S_n - S_0`.
pub fn oscillation_stats(
    stream: &mut EnvironmentStream,
    mu: &SignedMeasure,
    n: usize,
    threshold: f64,
) -> Result<OscReport> {
    if threshold <= 0.0 || n == 0 {
        return Err(Error::InvalidSpec("oscillation needs threshold > 0, n >= 1".into()));
    }
    let start = mu.tv_norm().ln();
    let (mut pi, _) = mu.normalize()?;
    let mut s = start;
    let mut max_s = s;
    let mut min_s = s;
    let mut first_up = None;
    let mut first_down = None;
    for step in 1..=n {
        let m = stream.next_operator()?;
        let (next, inc) =
            projective_step(&pi, &m).map_err(|_| Error::MassAnnihilated { step })?;
        pi = next;
        s += inc;
        max_s = max_s.max(s);
        min_s = min_s.min(s);
        if first_up.is_none() && s - start >= threshold {
            first_up = Some(step);
        }
        if first_down.is_none() && s - start <= -threshold {
            first_down = Some(step);
        }
    }
    let verdict = match (first_up.is_some(), first_down.is_some()) {
        (true, true) => OscVerdict::Oscillating,
        (false, false) => OscVerdict::Bounded,
        _ => OscVerdict::OneSided,
    };
    Ok(OscReport {
        s_start: start,
        s_final: s,
        max_s,
        min_s,
        first_up,
        first_down,
        verdict,
        n,
    })
}

/// `S_n` sampled at the given (sorted, ascending) checkpoint times.
pub fn s_trajectory(
    stream: &mut EnvironmentStream,
    mu: &SignedMeasure,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    let (mut pi, _) = mu.normalize()?;
    let mut s = mu.tv_norm().ln();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut step = 0usize;
    for &cp in checkpoints {
        while step < cp {
            let m = stream.next_operator()?;
            let (next, inc) =
                projective_step(&pi, &m).map_err(|_| Error::MassAnnihilated { step })?;
            pi = next;
            s += inc;
            step += 1;
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NhVerdict {
    NhConsistent,
    NhRejected,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NhReport {
    pub verdict: NhVerdict,
    /// Fitted growth exponent of the matched spread; `None` when there
    /// were too few TV-close pairs.
    pub spread_exponent: Option<f64>,
    /// `(checkpoint n, matched pair count, RMS spread)` rows.
    pub spreads: Vec<(usize, usize, f64)>,
}

/// Heuristic null-homology detector: across replicas, pairs with TV-close
/// `mu_n` should have close `S_n` under (NH). The verdict compares the
/// fitted spread-growth exponent against 0.25 (bounded vs `sqrt(n)`).
pub fn nh_diagnostic(
    spec: &EnvironmentSpec,
    replicas: usize,
    n: usize,
    match_tol: f64,
) -> Result<NhReport> {
    if !spec.is_iid() {
        return Err(Error::NonIidSampling);
    }
    if replicas < 2 {
        return Ok(NhReport {
            verdict: NhVerdict::Inconclusive,
            spread_exponent: None,
            spreads: Vec::new(),
        });
    }
    let checkpoints: Vec<usize> = (1..=4).map(|k| k * n / 4).filter(|&c| c > 0).collect();
    let mu = SignedMeasure::uniform(spec.dim());
    let states: Result<Vec<Vec<(SignedMeasure, f64)>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut stream = spec.replica_stream(r as u64, roles::CRITICAL);
            let (mut pi, _) = mu.normalize()?;
            let mut s = 0.0;
            let mut step = 0usize;
            let mut out = Vec::with_capacity(checkpoints.len());
            for &cp in &checkpoints {
                while step < cp {
                    let m = stream.next_operator()?;
                    let (next, inc) =
                        projective_step(&pi, &m).map_err(|_| Error::MassAnnihilated { step })?;
                    pi = next;
                    s += inc;
                    step += 1;
                }
                out.push((pi.clone(), s));
            }
            Ok(out)
        })
        .collect();
    let states = states?;
    let mut spreads = Vec::new();
    for (ci, &cp) in checkpoints.iter().enumerate() {
        let mut sq_sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..replicas {
            for j in (i + 1)..replicas {
                let (mu_i, s_i) = &states[i][ci];
                let (mu_j, s_j) = &states[j][ci];
                if tv_distance(mu_i, mu_j)? < match_tol {
                    sq_sum += (s_i - s_j).powi(2);
                    pairs += 1;
                }
            }
        }
        let rms = if pairs > 0 {
            (sq_sum / pairs as f64).sqrt()
        } else {
            f64::NAN
        };
        spreads.push((cp, pairs, rms));
    }
    if spreads.iter().any(|&(_, pairs, _)| pairs == 0) {
        return Ok(NhReport {
            verdict: NhVerdict::Inconclusive,
            spread_exponent: None,
            spreads,
        });
    }
    // all spreads numerically zero: S_n is a function of mu_n
    if spreads.iter().all(|&(_, _, s)| s < 1e-9) {
        return Ok(NhReport {
            verdict: NhVerdict::NhConsistent,
            spread_exponent: Some(0.0),
            spreads,
        });
    }
    let pts: Vec<(f64, f64)> = spreads
        .iter()
        .filter(|&&(_, _, s)| s > 0.0)
        .map(|&(cp, _, s)| ((cp as f64).ln(), s.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(NhReport {
            verdict: NhVerdict::Inconclusive,
            spread_exponent: None,
            spreads,
        });
    }
    let n_pts = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n_pts;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n_pts;
    let exponent = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let verdict = if exponent > 0.25 {
        NhVerdict::NhRejected
    } else {
        NhVerdict::NhConsistent
    };
    Ok(NhReport {
        verdict,
        spread_exponent: Some(exponent),
        spreads,
    })
}

/// Per-seed agreement of the oscillation verdict across starting
/// measures, and against the op-norm trajectory `log |||M_{0,n}|||`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroOneReport {
    /// One row per seed: verdicts per supplied measure, then the op-norm
    /// verdict.
    pub rows: Vec<(Vec<OscVerdict>, OscVerdict)>,
    pub all_agree: bool,
}

pub fn zero_one_check(
    spec: &EnvironmentSpec,
    measures: &[SignedMeasure],
    n: usize,
    replicas: usize,
    threshold: f64,
) -> Result<ZeroOneReport> {
    if measures.is_empty() {
        return Err(Error::InvalidSpec("zero_one_check needs measures".into()));
    }
    let rows: Result<Vec<(Vec<OscVerdict>, OscVerdict)>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let verdicts: Result<Vec<OscVerdict>> = measures
                .iter()
                .map(|mu| {
                    // coupled: same derived seed, hence same kernels
                    let mut stream = spec.replica_stream(r as u64, roles::CRITICAL);
                    Ok(oscillation_stats(&mut stream, mu, n, threshold)?.verdict)
                })
                .collect();
            let verdicts = verdicts?;
            // op-norm trajectory on the same realization
            let mut stream = spec.replica_stream(r as u64, roles::CRITICAL);
            let mut acc: Option<NormalizedKernel> = None;
            let mut first_up = None;
            let mut first_down = None;
            let mut start = 0.0;
            for step in 1..=n {
                let m = stream.next_operator()?;
                let next = match &acc {
                    None => NormalizedKernel::from_kernel(&m)?,
                    Some(a) => {
                        let raw = a.kernel.compose(&m)?;
                        let norm = raw.op_norm();
                        if norm <= 0.0 {
                            return Err(Error::DegenerateProduct { n: step });
                        }
                        NormalizedKernel {
                            kernel: raw.scale(1.0 / norm)?,
                            log_scale: a.log_scale + norm.ln(),
                        }
                    }
                };
                let s = next.kernel.op_norm().ln() + next.log_scale;
                if step == 1 {
                    start = s;
                }
                if first_up.is_none() && s - start >= threshold {
                    first_up = Some(step);
                }
                if first_down.is_none() && s - start <= -threshold {
                    first_down = Some(step);
                }
                acc = Some(next);
            }
            let norm_verdict = match (first_up.is_some(), first_down.is_some()) {
                (true, true) => OscVerdict::Oscillating,
                (false, false) => OscVerdict::Bounded,
                _ => OscVerdict::OneSided,
            };
            Ok((verdicts, norm_verdict))
        })
        .collect();
    let rows = rows?;
    let all_agree = rows.iter().all(|(vs, nv)| vs.iter().all(|v| v == nv));
    Ok(ZeroOneReport { rows, all_agree })
}
