//! Positive kernels on a finite state space.
//!
//! A `PositiveKernel` is a p x p nonnegative matrix acting on signed
//! measures from the left and on bounded functions from the right, with the
//! operator norm `|||Q||| = max_x sum_y Q(x,y)`. Dense storage covers
//! p <= 512; the Leslie-sparse layout (first column of fertilities plus a
//! survival superdiagonal) is mandatory above that, so long truncations of
//! age-structured models stay affordable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{check_dim, BoundedFunction, SignedMeasure};

/// Largest dimension accepted for dense storage.
pub const DENSE_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// Row-major `p * p` entries.
    Dense(Vec<f64>),
    /// First column `f` (fertilities) and superdiagonal `s` (survivals);
    /// `s[p-1]` is forced to 0 by truncation.
    Leslie { f: Vec<f64>, s: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveKernel {
    p: usize,
    storage: Storage,
}

impl PositiveKernel {
    pub fn dense(p: usize, entries: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidSpec("state space must have p >= 1".into()));
        }
        if p > DENSE_LIMIT {
            return Err(Error::DenseTooLarge { p, max: DENSE_LIMIT });
        }
        if entries.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p * p,
                got: entries.len(),
            });
        }
        for (i, &v) in entries.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidEntry {
                    x: i / p,
                    y: i % p,
                    value: v,
                });
            }
        }
        Ok(PositiveKernel {
            p,
            storage: Storage::Dense(entries),
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let p = rows.len();
        let mut entries = Vec::with_capacity(p * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: r.len(),
                });
            }
            entries.extend_from_slice(r);
        }
        Self::dense(p, entries)
    }

    /// Leslie-sparse kernel: first column `f`, superdiagonal `s`.
    pub fn leslie(f: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        let p = f.len();
        if p == 0 {
            return Err(Error::InvalidSpec("state space must have p >= 1".into()));
        }
        if s.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: s.len(),
            });
        }
        for (x, &v) in f.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidEntry { x, y: 0, value: v });
            }
        }
        for (x, &v) in s.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidEntry { x, y: x + 1, value: v });
            }
        }
        let mut s = s;
        // truncation: nothing survives past the last age class
        s[p - 1] = 0.0;
        Ok(PositiveKernel {
            p,
            storage: Storage::Leslie { f, s },
        })
    }

    pub fn identity(p: usize) -> Self {
        let mut e = vec![0.0; p * p];
        for x in 0..p {
            e[x * p + x] = 1.0;
        }
        PositiveKernel {
            p,
            storage: Storage::Dense(e),
        }
    }

    pub fn ones(p: usize) -> Self {
        PositiveKernel {
            p,
            storage: Storage::Dense(vec![1.0; p * p]),
        }
    }

    /// Rank-one kernel `u v^T`.
    pub fn rank_one(u: &[f64], v: &[f64]) -> Result<Self> {
        let p = u.len();
        let mut e = Vec::with_capacity(p * p);
        for &ux in u {
            for &vy in v {
                e.push(ux * vy);
            }
        }
        Self::dense(p, e)
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn is_leslie(&self) -> bool {
        matches!(self.storage, Storage::Leslie { .. })
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        match &self.storage {
            Storage::Dense(e) => e[x * self.p + y],
            Storage::Leslie { f, s } => {
                if y == 0 {
                    f[x]
                } else if y == x + 1 {
                    s[x]
                } else {
                    0.0
                }
            }
        }
    }

    pub fn row_sum(&self, x: usize) -> f64 {
        match &self.storage {
            Storage::Dense(e) => e[x * self.p..(x + 1) * self.p].iter().sum(),
            Storage::Leslie { f, s } => f[x] + s[x],
        }
    }

    /// The mass function `m_{0,1} = Q 1` as a vector of row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.p).map(|x| self.row_sum(x)).collect()
    }

    /// `|||Q||| = max_x sum_y Q(x,y)`.
    pub fn op_norm(&self) -> f64 {
        (0..self.p).map(|x| self.row_sum(x)).fold(0.0, f64::max)
    }

    /// States with vanishing row sum; nonempty breaks the positivity of
    /// `m_{0,1}` that downstream modules require.
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.p).filter(|&x| self.row_sum(x) == 0.0).collect()
    }

    pub fn check_positive_rows(&self) -> Result<()> {
        match self.zero_rows().first() {
            Some(&state) => Err(Error::ZeroRow { state }),
            None => Ok(()),
        }
    }

    pub fn all_entries_positive(&self) -> bool {
        match &self.storage {
            Storage::Dense(e) => e.iter().all(|&v| v > 0.0),
            Storage::Leslie { .. } => self.p == 1 && self.entry(0, 0) > 0.0,
        }
    }

    /// Left action `(mu Q)(y) = sum_x mu(x) Q(x,y)`.
    pub fn act_left(&self, mu: &SignedMeasure) -> Result<SignedMeasure> {
        check_dim(self.p, mu.dim())?;
        let mut out = vec![0.0; self.p];
        match &self.storage {
            Storage::Dense(e) => {
                for x in 0..self.p {
                    let w = mu.weight(x);
                    if w == 0.0 {
                        continue;
                    }
                    let row = &e[x * self.p..(x + 1) * self.p];
                    for (y, &q) in row.iter().enumerate() {
                        out[y] += w * q;
                    }
                }
            }
            Storage::Leslie { f, s } => {
                for x in 0..self.p {
                    let w = mu.weight(x);
                    out[0] += w * f[x];
                    if x + 1 < self.p {
                        out[x + 1] += w * s[x];
                    }
                }
            }
        }
        Ok(SignedMeasure::new(out))
    }

    /// Right action `(Qf)(x) = sum_y Q(x,y) f(y)`.
    pub fn act_right(&self, f: &BoundedFunction) -> Result<BoundedFunction> {
        check_dim(self.p, f.dim())?;
        let mut out = vec![0.0; self.p];
        match &self.storage {
            Storage::Dense(e) => {
                for x in 0..self.p {
                    let row = &e[x * self.p..(x + 1) * self.p];
                    out[x] = row
                        .iter()
                        .zip(f.values())
                        .map(|(&q, &v)| q * v)
                        .sum();
                }
            }
            Storage::Leslie { f: fert, s } => {
                for x in 0..self.p {
                    out[x] = fert[x] * f.value(0)
                        + if x + 1 < self.p {
                            s[x] * f.value(x + 1)
                        } else {
                            0.0
                        };
                }
            }
        }
        Ok(BoundedFunction::new(out))
    }

    /// Composition `(Q1 Q2)(x,y) = sum_z Q1(x,z) Q2(z,y)`. The result is
    /// densified, so it is limited to p <= 512.
    pub fn compose(&self, other: &PositiveKernel) -> Result<PositiveKernel> {
        check_dim(self.p, other.dim())?;
        if self.p > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                p: self.p,
                max: DENSE_LIMIT,
            });
        }
        let p = self.p;
        let mut out = vec![0.0; p * p];
        match &other.storage {
            Storage::Dense(b) => {
                for x in 0..p {
                    for z in 0..p {
                        let a = self.entry(x, z);
                        if a == 0.0 {
                            continue;
                        }
                        let brow = &b[z * p..(z + 1) * p];
                        let orow = &mut out[x * p..(x + 1) * p];
                        for (y, &bv) in brow.iter().enumerate() {
                            orow[y] += a * bv;
                        }
                    }
                }
            }
            Storage::Leslie { f, s } => {
                for x in 0..p {
                    for z in 0..p {
                        let a = self.entry(x, z);
                        if a == 0.0 {
                            continue;
                        }
                        out[x * p] += a * f[z];
                        if z + 1 < p {
                            out[x * p + z + 1] += a * s[z];
                        }
                    }
                }
            }
        }
        PositiveKernel::dense(p, out)
    }

    /// Scalar multiple `c Q`, `c >= 0`.
    pub fn scale(&self, c: f64) -> Result<PositiveKernel> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "scaling factor must be finite and nonnegative, got {c}"
            )));
        }
        let storage = match &self.storage {
            Storage::Dense(e) => Storage::Dense(e.iter().map(|v| c * v).collect()),
            Storage::Leslie { f, s } => Storage::Leslie {
                f: f.iter().map(|v| c * v).collect(),
                s: s.iter().map(|v| c * v).collect(),
            },
        };
        Ok(PositiveKernel { p: self.p, storage })
    }

    pub fn to_dense_entries(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(e) => e.clone(),
            Storage::Leslie { f, s } => {
                let p = self.p;
                let mut e = vec![0.0; p * p];
                for x in 0..p {
                    e[x * p] = f[x];
                    if x + 1 < p {
                        e[x * p + x + 1] = s[x];
                    }
                }
                e
            }
        }
    }
}

/// Projective step `mu -> (mu Q / ||mu Q||, log ||mu Q||)`.
///
/// The log norm is the cocycle increment `rho(mu, Q)`; a vanishing image
/// signals annihilated mass, which breaks the positivity assumption.
pub fn projective_step(
    mu: &SignedMeasure,
    q: &PositiveKernel,
) -> Result<(SignedMeasure, f64)> {
    let pushed = q.act_left(mu)?;
    pushed.normalize()
}

// JSON exchange format:
// {"p": int, "storage": "dense"|"leslie",
//  "entries": row-major array | {"f": array, "s": array}}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    p: usize,
    storage: String,
    entries: EntriesRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EntriesRepr {
    Dense(Vec<f64>),
    Leslie { f: Vec<f64>, s: Vec<f64> },
}

impl Serialize for PositiveKernel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match &self.storage {
            Storage::Dense(e) => KernelRepr {
                p: self.p,
                storage: "dense".into(),
                entries: EntriesRepr::Dense(e.clone()),
            },
            Storage::Leslie { f, s } => KernelRepr {
                p: self.p,
                storage: "leslie".into(),
                entries: EntriesRepr::Leslie {
                    f: f.clone(),
                    s: s.clone(),
                },
            },
        };
        repr.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for PositiveKernel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = KernelRepr::deserialize(de)?;
        let kernel = match (repr.storage.as_str(), repr.entries) {
            ("dense", EntriesRepr::Dense(e)) => {
                PositiveKernel::dense(repr.p, e).map_err(D::Error::custom)?
            }
            ("leslie", EntriesRepr::Leslie { f, s }) => {
                if f.len() != repr.p {
                    return Err(D::Error::custom(format!(
                        "leslie kernel: expected {} fertilities, got {}",
                        repr.p,
                        f.len()
                    )));
                }
                PositiveKernel::leslie(f, s).map_err(D::Error::custom)?
            }
            (tag, _) => {
                return Err(D::Error::custom(format!(
                    "storage tag {tag:?} does not match the entries layout"
                )))
            }
        };
        Ok(kernel)
    }
}
