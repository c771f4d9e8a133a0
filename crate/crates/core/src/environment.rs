//! Stationary ergodic kernel sequences `(M_n) = (M o theta^n)` with
//! reproducible seeding.
//!
//! Draws are a pure function of `(seed, index)`: the n-th i.i.d. or
//! Markov-modulated draw does not depend on how many times the stream was
//! advanced, so shifted streams and parallel replicas agree regardless of
//! schedule.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::PositiveKernel;
use crate::window::ProductWindow;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a replica stream seed from the master seed. Using a hash of
/// `(master_seed, replica_index, stream_role)` keeps parallel Monte Carlo
/// schedule-independent: the seed never depends on which thread ran first.
pub fn derive_seed(master_seed: u64, replica_index: u64, stream_role: u64) -> u64 {
    let s = splitmix64(master_seed);
    let s = splitmix64(s ^ splitmix64(replica_index.wrapping_add(0x71CE)));
    splitmix64(s ^ splitmix64(stream_role.wrapping_add(0xD0EB_11A5)))
}

fn index_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(0xA5A5_0F0F))))
}

const MARKOV_INIT_INDEX: u64 = u64::MAX;

/// The law of the environment, without a cursor.
#[derive(Debug, Clone)]
pub enum EnvVariant {
    /// i.i.d. draws from a finite kernel family with sampling weights.
    Iid {
        kernels: Vec<PositiveKernel>,
        weights: Vec<f64>,
    },
    /// Kernel indexed by a finite environment chain started at its
    /// stationary law; irreducibility makes the induced shift ergodic.
    Markov {
        kernels: Vec<PositiveKernel>,
        transition: Vec<Vec<f64>>,
        start: Vec<f64>,
    },
    /// Deterministic cyclic environment.
    Periodic { kernels: Vec<PositiveKernel> },
    /// Explicit finite kernel list; exhausts.
    Scripted { kernels: Vec<PositiveKernel> },
}

/// Flat, variant-tagged JSON schema:
/// `{"variant": "iid"|"markov"|"periodic"|"scripted", "kernels": [..],
/// "master_seed": u64, ...}` with `weights` (iid) and
/// `transition`/`start` (markov) present exactly when their variant
/// requires them. Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    variant: String,
    kernels: Vec<PositiveKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<Vec<f64>>,
    master_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct EnvironmentSpec {
    pub variant: EnvVariant,
    pub master_seed: u64,
}

impl From<EnvironmentSpec> for SpecRepr {
    fn from(spec: EnvironmentSpec) -> SpecRepr {
        let master_seed = spec.master_seed;
        match spec.variant {
            EnvVariant::Iid { kernels, weights } => SpecRepr {
                variant: "iid".into(),
                kernels,
                weights: Some(weights),
                transition: None,
                start: None,
                master_seed,
            },
            EnvVariant::Markov {
                kernels,
                transition,
                start,
            } => SpecRepr {
                variant: "markov".into(),
                kernels,
                weights: None,
                transition: Some(transition),
                start: Some(start),
                master_seed,
            },
            EnvVariant::Periodic { kernels } => SpecRepr {
                variant: "periodic".into(),
                kernels,
                weights: None,
                transition: None,
                start: None,
                master_seed,
            },
            EnvVariant::Scripted { kernels } => SpecRepr {
                variant: "scripted".into(),
                kernels,
                weights: None,
                transition: None,
                start: None,
                master_seed,
            },
        }
    }
}

impl TryFrom<SpecRepr> for EnvironmentSpec {
    type Error = String;

    fn try_from(repr: SpecRepr) -> std::result::Result<Self, String> {
        let reject = |field: &str, variant: &str| {
            format!("field {field} is not accepted by variant {variant}")
        };
        let variant = match repr.variant.as_str() {
            "iid" => {
                if repr.transition.is_some() || repr.start.is_some() {
                    return Err(reject("transition/start", "iid"));
                }
                EnvVariant::Iid {
                    kernels: repr.kernels,
                    weights: repr.weights.ok_or("iid variant requires weights")?,
                }
            }
            "markov" => {
                if repr.weights.is_some() {
                    return Err(reject("weights", "markov"));
                }
                EnvVariant::Markov {
                    kernels: repr.kernels,
                    transition: repr
                        .transition
                        .ok_or("markov variant requires transition")?,
                    start: repr.start.ok_or("markov variant requires start")?,
                }
            }
            tag @ ("periodic" | "scripted") => {
                if repr.weights.is_some() || repr.transition.is_some() || repr.start.is_some() {
                    return Err(reject("weights/transition/start", tag));
                }
                if tag == "periodic" {
                    EnvVariant::Periodic {
                        kernels: repr.kernels,
                    }
                } else {
                    EnvVariant::Scripted {
                        kernels: repr.kernels,
                    }
                }
            }
            other => return Err(format!("unknown environment variant: {other}")),
        };
        let spec = EnvironmentSpec {
            variant,
            master_seed: repr.master_seed,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl EnvironmentSpec {
    pub fn iid(kernels: Vec<PositiveKernel>, weights: Vec<f64>, master_seed: u64) -> Result<Self> {
        let spec = EnvironmentSpec {
            variant: EnvVariant::Iid { kernels, weights },
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn markov(
        kernels: Vec<PositiveKernel>,
        transition: Vec<Vec<f64>>,
        start: Vec<f64>,
        master_seed: u64,
    ) -> Result<Self> {
        let spec = EnvironmentSpec {
            variant: EnvVariant::Markov {
                kernels,
                transition,
                start,
            },
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn periodic(kernels: Vec<PositiveKernel>, master_seed: u64) -> Result<Self> {
        let spec = EnvironmentSpec {
            variant: EnvVariant::Periodic { kernels },
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn scripted(kernels: Vec<PositiveKernel>, master_seed: u64) -> Result<Self> {
        let spec = EnvironmentSpec {
            variant: EnvVariant::Scripted { kernels },
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(kernel: PositiveKernel, master_seed: u64) -> Result<Self> {
        Self::iid(vec![kernel], vec![1.0], master_seed)
    }

    /// The finite kernel family backing the law.
    pub fn family(&self) -> &[PositiveKernel] {
        match &self.variant {
            EnvVariant::Iid { kernels, .. }
            | EnvVariant::Markov { kernels, .. }
            | EnvVariant::Periodic { kernels }
            | EnvVariant::Scripted { kernels } => kernels,
        }
    }

    pub fn dim(&self) -> usize {
        self.family().first().map_or(0, |k| k.dim())
    }

    pub fn is_iid(&self) -> bool {
        matches!(self.variant, EnvVariant::Iid { .. })
    }

    /// Periodic and scripted environments carry no randomness.
    pub fn is_deterministic(&self) -> bool {
        matches!(
            self.variant,
            EnvVariant::Periodic { .. } | EnvVariant::Scripted { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.family();
        if family.is_empty() {
            return Err(Error::InvalidSpec("empty kernel family".into()));
        }
        let p = family[0].dim();
        for k in family {
            if k.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: k.dim(),
                });
            }
        }
        match &self.variant {
            EnvVariant::Iid { kernels, weights } => {
                if weights.len() != kernels.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{} weights for {} kernels",
                        weights.len(),
                        kernels.len()
                    )));
                }
                check_probability_vector(weights, "iid weights")?;
            }
            EnvVariant::Markov {
                kernels,
                transition,
                start,
            } => {
                let e = kernels.len();
                if transition.len() != e {
                    return Err(Error::InvalidSpec(format!(
                        "transition matrix has {} rows for {} environment states",
                        transition.len(),
                        e
                    )));
                }
                for row in transition {
                    if row.len() != e {
                        return Err(Error::InvalidSpec("transition matrix is not square".into()));
                    }
                    check_probability_vector(row, "transition row")?;
                }
                if start.len() != e {
                    return Err(Error::InvalidSpec("start law has wrong length".into()));
                }
                check_probability_vector(start, "start law")?;
                if !is_irreducible(transition) {
                    return Err(Error::InvalidSpec(
                        "environment chain is not irreducible; the shift need not be ergodic"
                            .into(),
                    ));
                }
            }
            EnvVariant::Periodic { .. } | EnvVariant::Scripted { .. } => {}
        }
        Ok(())
    }

    pub fn stream(&self) -> EnvironmentStream {
        EnvironmentStream::new(self.clone(), self.master_seed)
    }

    /// A stream with a replica-specific derived seed.
    pub fn replica_stream(&self, replica_index: u64, stream_role: u64) -> EnvironmentStream {
        EnvironmentStream::new(
            self.clone(),
            derive_seed(self.master_seed, replica_index, stream_role),
        )
    }
}

fn check_probability_vector(w: &[f64], what: &str) -> Result<()> {
    if w.iter().any(|&x| !(0.0..=1.0).contains(&x) || !x.is_finite()) {
        return Err(Error::InvalidSpec(format!("{what} outside [0,1]")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!("{what} sum to {sum}, not 1")));
    }
    Ok(())
}

fn is_irreducible(transition: &[Vec<f64>]) -> bool {
    let e = transition.len();
    // strong connectivity of the positive-entry digraph, one BFS per state
    for start in 0..e {
        let mut seen = vec![false; e];
        let mut queue = vec![start];
        seen[start] = true;
        while let Some(i) = queue.pop() {
            for j in 0..e {
                if transition[i][j] > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push(j);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return false;
        }
    }
    true
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// A cursor over the realized kernel sequence of one environment.
///
/// Single-owner: never advanced concurrently. `spawn_shifted` is the
/// sanctioned way to parallelize.
#[derive(Debug, Clone)]
pub struct EnvironmentStream {
    spec: EnvironmentSpec,
    seed: u64,
    cursor: usize,
    markov_state: Option<usize>,
}

impl EnvironmentStream {
    fn new(spec: EnvironmentSpec, seed: u64) -> Self {
        EnvironmentStream {
            spec,
            seed,
            cursor: 0,
            markov_state: None,
        }
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Returns `M_n` at the current cursor and advances.
    pub fn next_operator(&mut self) -> Result<PositiveKernel> {
        let n = self.cursor;
        let kernel = match &self.spec.variant {
            EnvVariant::Scripted { kernels } => kernels
                .get(n)
                .cloned()
                .ok_or(Error::EndOfScript { len: kernels.len() })?,
            EnvVariant::Periodic { kernels } => kernels[n % kernels.len()].clone(),
            EnvVariant::Iid { kernels, weights } => {
                let idx = sample_index(weights, &mut index_rng(self.seed, n as u64));
                kernels[idx].clone()
            }
            EnvVariant::Markov {
                kernels,
                transition,
                start,
            } => {
                let state = match self.markov_state {
                    Some(s) => s,
                    None => sample_index(start, &mut index_rng(self.seed, MARKOV_INIT_INDEX)),
                };
                let next =
                    sample_index(&transition[state], &mut index_rng(self.seed, n as u64));
                let k = kernels[state].clone();
                self.markov_state = Some(next);
                k
            }
        };
        self.cursor += 1;
        Ok(kernel)
    }

    /// The stream observing `theta^k` of this one's environment: its j-th
    /// output equals this stream's (cursor + k + j)-th output. The parent
    /// is unaffected.
    pub fn spawn_shifted(&self, k: usize) -> Result<EnvironmentStream> {
        let mut child = self.clone();
        if matches!(self.spec.variant, EnvVariant::Markov { .. }) {
            for _ in 0..k {
                child.next_operator()?;
            }
        } else {
            child.cursor += k;
        }
        Ok(child)
    }

    /// Realizes the next `n` kernels as a `ProductWindow`, advancing the
    /// cursor past them.
    pub fn take_window(&mut self, n: usize) -> Result<ProductWindow> {
        let mut kernels = Vec::with_capacity(n);
        for _ in 0..n {
            kernels.push(self.next_operator()?);
        }
        ProductWindow::new(kernels)
    }
}

/// Verdict on the standing assumptions for one environment family:
/// positivity of the one-step mass function and integrability of its
/// log norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Every family member has strictly positive row sums.
    pub positivity: bool,
    /// `(kernel index, state)` pairs with a zero row.
    pub positivity_violations: Vec<(usize, usize)>,
    /// `E[log+ ||m_{0,1}||_inf] < inf`: finite op norms across the family.
    pub log_plus_integrable: bool,
    /// `E[|log ||m_{0,1}||_inf|] < inf`: op norms also bounded away from 0.
    pub log_abs_integrable: bool,
    /// Finite families get exact verdicts; "empirical" marks verdicts
    /// supported only by sampling.
    pub empirical: bool,
    pub samples_checked: usize,
    pub deterministic_environment: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.positivity && self.log_plus_integrable && self.log_abs_integrable
    }
}

/// Checks the standing assumptions. The family is a finite kernel list in
/// every variant, so the verdicts are exact scans of the family;
/// `sample_size` additionally replays the stream as a smoke test.
pub fn check_basic_assumptions(spec: &EnvironmentSpec, sample_size: usize) -> Result<AssumptionReport> {
    spec.validate()?;
    let mut violations = Vec::new();
    let mut log_plus = true;
    let mut log_abs = true;
    for (i, kernel) in spec.family().iter().enumerate() {
        for state in kernel.zero_rows() {
            violations.push((i, state));
        }
        let norm = kernel.op_norm();
        if !norm.is_finite() {
            log_plus = false;
        }
        if norm <= 0.0 || !norm.is_finite() {
            log_abs = false;
        }
    }
    let mut checked = 0;
    if sample_size > 0 && !matches!(spec.variant, EnvVariant::Scripted { .. }) {
        let mut stream = spec.stream();
        for _ in 0..sample_size {
            let k = stream.next_operator()?;
            debug_assert!(k.op_norm().is_finite());
            checked += 1;
        }
    }
    Ok(AssumptionReport {
        positivity: violations.is_empty(),
        positivity_violations: violations,
        log_plus_integrable: log_plus,
        log_abs_integrable: log_abs,
        empirical: false,
        samples_checked: checked,
        deterministic_environment: spec.is_deterministic(),
    })
}
