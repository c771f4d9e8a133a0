//! Signed measures and bounded functions on a finite state space.
//!
//! A state space of size `p` stands for either a finite set or a truncation
//! of the nonnegative integers. Measures are weight vectors in l1, bounded
//! functions are value vectors in l-infinity, and the duality pairing
//! `mu(f) = sum_x mu(x) f(x)` connects the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A signed measure on `{0, .., p-1}`, carried as a weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    weights: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(weights: Vec<f64>) -> Self {
        SignedMeasure { weights }
    }

    /// Dirac mass at `x`.
    pub fn dirac(p: usize, x: usize) -> Self {
        let mut w = vec![0.0; p];
        w[x] = 1.0;
        SignedMeasure { weights: w }
    }

    /// Uniform probability measure.
    pub fn uniform(p: usize) -> Self {
        SignedMeasure {
            weights: vec![1.0 / p as f64; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total variation norm `sum_x |mu(x)|`.
    pub fn tv_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Total mass `mu(X)`; equals the TV norm for positive measures.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }

    /// Duality pairing `mu(f)`.
    pub fn pair(&self, f: &BoundedFunction) -> Result<f64> {
        check_dim(self.dim(), f.dim())?;
        Ok(self
            .weights
            .iter()
            .zip(f.values())
            .map(|(w, v)| w * v)
            .sum())
    }

    /// Normalizes a positive nonzero measure to a probability vector,
    /// returning the log of the discarded mass.
    pub fn normalize(&self) -> Result<(SignedMeasure, f64)> {
        let mass = self.tv_norm();
        if mass <= 0.0 {
            return Err(Error::MassAnnihilated { step: 0 });
        }
        let w = self.weights.iter().map(|x| x / mass).collect();
        Ok((SignedMeasure::new(w), mass.ln()))
    }

    pub fn scale(&self, c: f64) -> SignedMeasure {
        SignedMeasure::new(self.weights.iter().map(|w| c * w).collect())
    }
}

/// A bounded measurable function on `{0, .., p-1}`, carried as a value vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedFunction {
    values: Vec<f64>,
}

impl BoundedFunction {
    pub fn new(values: Vec<f64>) -> Self {
        BoundedFunction { values }
    }

    /// The unit function.
    pub fn ones(p: usize) -> Self {
        BoundedFunction {
            values: vec![1.0; p],
        }
    }

    /// Coordinate basis function `e_y`.
    pub fn basis(p: usize, y: usize) -> Self {
        let mut v = vec![0.0; p];
        v[y] = 1.0;
        BoundedFunction { values: v }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Supremum norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Total variation distance `sum_x |mu1(x) - mu2(x)|`.
pub fn tv_distance(mu1: &SignedMeasure, mu2: &SignedMeasure) -> Result<f64> {
    check_dim(mu1.dim(), mu2.dim())?;
    Ok(mu1
        .weights()
        .iter()
        .zip(mu2.weights())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_norm_is_total_mass_for_positive() {
        let mu = SignedMeasure::new(vec![0.2, 0.5, 1.3]);
        assert_eq!(mu.tv_norm(), mu.total_mass());
    }

    #[test]
    fn tv_distance_diracs() {
        let a = SignedMeasure::dirac(3, 0);
        let b = SignedMeasure::dirac(3, 1);
        assert_eq!(tv_distance(&a, &b).unwrap(), 2.0);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn tv_distance_arithmetic() {
        let a = SignedMeasure::new(vec![0.3, 0.7]);
        let b = SignedMeasure::new(vec![0.5, 0.5]);
        assert!((tv_distance(&a, &b).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = SignedMeasure::dirac(3, 0);
        let b = SignedMeasure::dirac(4, 0);
        assert!(tv_distance(&a, &b).is_err());
    }

    #[test]
    fn normalize_probability() {
        let mu = SignedMeasure::new(vec![1.0, 3.0]);
        let (p, log_mass) = mu.normalize().unwrap();
        assert_eq!(p.weights(), &[0.25, 0.75]);
        assert!((log_mass - 4.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn normalize_zero_mass_fails() {
        let mu = SignedMeasure::new(vec![0.0, 0.0]);
        assert!(mu.normalize().is_err());
    }
}
