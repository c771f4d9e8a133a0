//! Lazily materialized products `M_{k,n}` of a kernel trajectory.
//!
//! All long products are carried in log-normalized form: a normalized
//! kernel (or mass vector) together with a scalar log offset. The cocycle
//! identity `log ||mu M_{0,n}|| = sum_k log ||mu_k M_k||` is the
//! accumulation rule, which keeps windows of length up to 1e6 free of
//! overflow and underflow.

use crate::error::{Error, Result};
use crate::kernel::{projective_step, PositiveKernel};
use crate::measure::{check_dim, BoundedFunction, SignedMeasure};

/// A kernel carried as `exp(log_scale) * kernel` with `|||kernel||| = 1`.
#[derive(Debug, Clone)]
pub struct NormalizedKernel {
    pub kernel: PositiveKernel,
    pub log_scale: f64,
}

impl NormalizedKernel {
    pub fn from_kernel(q: &PositiveKernel) -> Result<Self> {
        let norm = q.op_norm();
        if norm <= 0.0 {
            return Err(Error::DegenerateProduct { n: 1 });
        }
        Ok(NormalizedKernel {
            kernel: q.scale(1.0 / norm)?,
            log_scale: norm.ln(),
        })
    }

    /// Entry of the represented kernel in log space; `-inf` for zeros.
    pub fn log_entry(&self, x: usize, y: usize) -> f64 {
        self.kernel.entry(x, y).ln() + self.log_scale
    }

    /// Materializes the represented kernel at its true scale.
    pub fn materialize(&self) -> Result<PositiveKernel> {
        self.kernel.scale(self.log_scale.exp())
    }
}

/// A nonnegative vector carried as `exp(log_scale) * values` with
/// `max values = 1`.
#[derive(Debug, Clone)]
pub struct LogVec {
    pub values: Vec<f64>,
    pub log_scale: f64,
}

impl LogVec {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `log v(x)`; `-inf` when the component vanishes.
    pub fn log_value(&self, x: usize) -> f64 {
        self.values[x].ln() + self.log_scale
    }

    /// `log max_x v(x)`.
    pub fn log_max(&self) -> f64 {
        self.log_scale
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// `log mu(v)` for a nonnegative measure `mu`.
    pub fn log_pair(&self, mu: &SignedMeasure) -> Result<f64> {
        check_dim(self.dim(), mu.dim())?;
        let s: f64 = self
            .values
            .iter()
            .zip(mu.weights())
            .map(|(v, w)| v * w)
            .sum();
        Ok(s.ln() + self.log_scale)
    }

    fn from_values(values: Vec<f64>, carried: f64) -> Result<Self> {
        let max = values.iter().fold(0.0_f64, |m, &v| m.max(v));
        if max <= 0.0 || !max.is_finite() {
            return Err(Error::DegenerateProduct { n: 0 });
        }
        Ok(LogVec {
            values: values.iter().map(|v| v / max).collect(),
            log_scale: carried + max.ln(),
        })
    }
}

/// The family `M_{k,n} = M_k ... M_{n-1}` over a realized kernel list.
///
/// Indices follow the half-open convention: `product(k, n)` multiplies
/// kernels `k..n`, and `product(k, k)` is the identity.
#[derive(Debug, Clone)]
pub struct ProductWindow {
    kernels: Vec<PositiveKernel>,
    p: usize,
}

impl ProductWindow {
    pub fn new(kernels: Vec<PositiveKernel>) -> Result<Self> {
        let p = match kernels.first() {
            Some(k) => k.dim(),
            None => return Err(Error::InvalidSpec("empty kernel window".into())),
        };
        for k in &kernels {
            check_dim(p, k.dim())?;
        }
        Ok(ProductWindow { kernels, p })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn kernel(&self, i: usize) -> &PositiveKernel {
        &self.kernels[i]
    }

    pub fn kernels(&self) -> &[PositiveKernel] {
        &self.kernels
    }

    fn check_range(&self, k: usize, n: usize) -> Result<()> {
        if k <= n && n <= self.kernels.len() {
            Ok(())
        } else {
            Err(Error::IndexRange(format!(
                "window range {k}..{n} outside 0..{}",
                self.kernels.len()
            )))
        }
    }

    /// Materializes `M_{k,n}` in log-normalized form, renormalizing after
    /// every composition.
    pub fn product(&self, k: usize, n: usize) -> Result<NormalizedKernel> {
        self.check_range(k, n)?;
        let mut acc = NormalizedKernel {
            kernel: PositiveKernel::identity(self.p),
            log_scale: 0.0,
        };
        for j in k..n {
            let raw = acc.kernel.compose(&self.kernels[j])?;
            let norm = raw.op_norm();
            if norm <= 0.0 {
                return Err(Error::DegenerateProduct { n: j + 1 - k });
            }
            acc = NormalizedKernel {
                kernel: raw.scale(1.0 / norm)?,
                log_scale: acc.log_scale + norm.ln(),
            };
        }
        Ok(acc)
    }

    /// The mass vector `m_{k,n} = M_{k,n} 1`, computed by the backward
    /// recursion `m_{k,n} = M_k m_{k+1,n}` so Leslie-sparse windows never
    /// densify. `log ||m_{k,n}||_inf = log |||M_{k,n}|||` is the log scale.
    pub fn mass_vector(&self, k: usize, n: usize) -> Result<LogVec> {
        self.check_range(k, n)?;
        let mut v = LogVec {
            values: vec![1.0; self.p],
            log_scale: 0.0,
        };
        for j in (k..n).rev() {
            let pushed = self.kernels[j].act_right(&BoundedFunction::new(v.values))?;
            v = LogVec::from_values(pushed.values().to_vec(), v.log_scale)
                .map_err(|_| Error::DegenerateProduct { n: n - j })?;
        }
        Ok(v)
    }

    /// `log |||M_{k,n}|||`.
    pub fn log_op_norm(&self, k: usize, n: usize) -> Result<f64> {
        Ok(self.mass_vector(k, n)?.log_max())
    }

    /// Pushes `mu` through `M_{k,n}` by chained projective steps. Returns
    /// the normalized measure `mu . M_{k,n}` and `log ||mu M_{k,n}||_TV`
    /// (absolute, including the initial mass).
    pub fn evolve(
        &self,
        mu: &SignedMeasure,
        k: usize,
        n: usize,
    ) -> Result<(SignedMeasure, f64)> {
        self.check_range(k, n)?;
        check_dim(self.p, mu.dim())?;
        let (mut pi, mut total) = mu.normalize()?;
        for j in k..n {
            let (next, inc) = projective_step(&pi, &self.kernels[j])
                .map_err(|_| Error::MassAnnihilated { step: j })?;
            pi = next;
            total += inc;
        }
        Ok((pi, total))
    }

    /// Like `evolve` but also returns the per-step cocycle increments
    /// `log ||mu_j M_j||` for `j` in `k..n`.
    pub fn evolve_with_increments(
        &self,
        mu: &SignedMeasure,
        k: usize,
        n: usize,
    ) -> Result<(SignedMeasure, f64, Vec<f64>)> {
        self.check_range(k, n)?;
        let (mut pi, start) = mu.normalize()?;
        let mut incs = Vec::with_capacity(n - k);
        let mut total = start;
        for j in k..n {
            let (next, inc) = projective_step(&pi, &self.kernels[j])
                .map_err(|_| Error::MassAnnihilated { step: j })?;
            pi = next;
            incs.push(inc);
            total += inc;
        }
        Ok((pi, total, incs))
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
    fn semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let kernels: Vec<_> = (0..6).map(|_| random_kernel(&mut rng, 4)).collect();
        let w = ProductWindow::new(kernels).unwrap();
        let full = w.product(0, 6).unwrap();
        let left = w.product(0, 3).unwrap();
        let right = w.product(3, 6).unwrap();
        let glued = left.kernel.compose(&right.kernel).unwrap();
        let glued_scale = left.log_scale + right.log_scale + glued.op_norm().ln();
        let glued_norm = glued.scale(1.0 / glued.op_norm()).unwrap();
        assert!((full.log_scale - glued_scale).abs() < 1e-12 * full.log_scale.abs().max(1.0));
        for x in 0..4 {
            for y in 0..4 {
                let a = full.kernel.entry(x, y);
                let b = glued_norm.entry(x, y);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn log_normalized_product_matches_direct_product() {
        // n <= 30 small kernels: direct product stays in range
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let kernels: Vec<_> = (0..30).map(|_| random_kernel(&mut rng, 3)).collect();
        let mut direct = PositiveKernel::identity(3);
        for k in &kernels {
            direct = direct.compose(k).unwrap();
        }
        let w = ProductWindow::new(kernels).unwrap();
        let norm = w.product(0, 30).unwrap();
        let scale = norm.log_scale.exp();
        for x in 0..3 {
            for y in 0..3 {
                let a = direct.entry(x, y);
                let b = norm.kernel.entry(x, y) * scale;
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "({x},{y}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn mass_vector_matches_product_row_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kernels: Vec<_> = (0..8).map(|_| random_kernel(&mut rng, 4)).collect();
        let w = ProductWindow::new(kernels).unwrap();
        let m = w.mass_vector(1, 7).unwrap();
        let prod = w.product(1, 7).unwrap();
        for x in 0..4 {
            let via_product = prod.kernel.row_sum(x).ln() + prod.log_scale;
            assert!((m.log_value(x) - via_product).abs() < 1e-10);
        }
        assert!((w.log_op_norm(1, 7).unwrap() - (prod.log_scale)).abs() < 1e-10);
    }

    #[test]
    fn evolve_matches_unnormalized_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kernels: Vec<_> = (0..5).map(|_| random_kernel(&mut rng, 3)).collect();
        let w = ProductWindow::new(kernels.clone()).unwrap();
        let mu = SignedMeasure::new(vec![0.2, 0.5, 0.3]);
        let (pi, log_norm) = w.evolve(&mu, 0, 5).unwrap();
        let mut direct = mu.clone();
        for k in &kernels {
            direct = k.act_left(&direct).unwrap();
        }
        assert!((log_norm - direct.tv_norm().ln()).abs() < 1e-12);
        let (expect, _) = direct.normalize().unwrap();
        for (a, b) in pi.weights().iter().zip(expect.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((pi.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_range_is_identity() {
        let w = ProductWindow::new(vec![PositiveKernel::ones(2)]).unwrap();
        let id = w.product(0, 0).unwrap();
        assert_eq!(id.kernel, PositiveKernel::identity(2));
        assert_eq!(id.log_scale, 0.0);
    }
}
