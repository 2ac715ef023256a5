//! Finite Fourier series b(x) = Σ b̂(θ) e^{i⟨θ,x⟩} with exact coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{ExactComplex, QuadSurd};
use crate::frequency_lattice::{FrequencySet, FrequencyVector, GeneratorBasis};

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    dim: usize,
    basis: GeneratorBasis,
    coeffs: BTreeMap<FrequencyVector, ExactComplex>,
}

impl Potential {
    /// Builds a real potential; Fourier data must satisfy b̂(−θ) = conj b̂(θ).
    pub fn new(
        dim: usize,
        basis: GeneratorBasis,
        coeffs: impl IntoIterator<Item = (FrequencyVector, ExactComplex)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (th, c) in coeffs {
            if th.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: th.dim() });
            }
            if c.is_zero() {
                continue;
            }
            if map.insert(th.clone(), c).is_some() {
                return Err(Error::Malformed(format!("frequency {th} listed twice")));
            }
        }
        for (th, c) in &map {
            let mirror = map.get(&th.neg()).cloned().unwrap_or_default();
            if mirror != c.conj() {
                return Err(Error::NonHermitianPotential(format!(
                    "b̂({th}) = {:?} but b̂(−θ) = {:?}",
                    c.to_c64(),
                    mirror.to_c64()
                )));
            }
        }
        // validates generators
        FrequencySet::new(dim, basis, map.keys().cloned())?;
        Ok(Self { dim, basis, coeffs: map })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, basis: GeneratorBasis::rational(), coeffs: BTreeMap::new() }
    }

    /// `Σ_i amp·2cos(x_i)` style helper: b = v·(e^{iθx} + e^{−iθx}) for integer θ.
    pub fn cosine(dim: usize, theta: &[i64], v: QuadSurd) -> Result<Self> {
        let th = FrequencyVector::from_integers(theta);
        let c = ExactComplex::real(v);
        Self::new(dim, GeneratorBasis::rational(), [(th.neg(), c.clone()), (th, c)])
    }

    /// Mathieu potential 2v·cos x in d = 1.
    pub fn mathieu(v: QuadSurd) -> Self {
        Self::cosine(1, &[1], v).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &BTreeMap<FrequencyVector, ExactComplex> {
        &self.coeffs
    }

    pub fn coeff(&self, th: &FrequencyVector) -> ExactComplex {
        self.coeffs.get(th).cloned().unwrap_or_default()
    }

    pub fn coeff_c64(&self, th: &FrequencyVector) -> Complex64 {
        self.coeffs.get(th).map_or(Complex64::zero(), ExactComplex::to_c64)
    }

    /// The frequency set Θ: support ∪ {0}, symmetrized.
    pub fn frequency_set(&self) -> FrequencySet {
        FrequencySet::new(self.dim, self.basis, self.coeffs.keys().cloned()).expect("validated")
    }

    pub fn is_periodic(&self) -> bool {
        self.coeffs.keys().all(FrequencyVector::is_integral)
    }

    pub fn scaled(&self, c: &QuadSurd) -> Self {
        Self {
            dim: self.dim,
            basis: self.basis,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, v)| (k.clone(), v.scale(c)))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(th, c)| c.to_c64() * Complex64::from_polar(1.0, th.dot_f64(x)))
            .sum::<Complex64>()
            .re
    }

    /// Δb(x).
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(th, c)| {
                let n2: f64 = th.to_f64().iter().map(|t| t * t).sum();
                -n2 * c.to_c64() * Complex64::from_polar(1.0, th.dot_f64(x))
            })
            .sum::<Complex64>()
            .re
    }

    /// Σ|b̂(θ)|.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.to_c64().norm()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let th = FrequencyVector::from_integers(&[1]);
        let one = ExactComplex::real(QuadSurd::from_integer(1));
        let two = ExactComplex::real(QuadSurd::from_integer(2));
        let r = Potential::new(1, GeneratorBasis::rational(), [(th.clone(), one), (th.neg(), two)]);
        assert!(matches!(r, Err(Error::NonHermitianPotential(_))));
        let lone = Potential::new(
            1,
            GeneratorBasis::rational(),
            [(th, ExactComplex::new(QuadSurd::zero(), QuadSurd::from_integer(1)))],
        );
        assert!(lone.is_err());
    }

    #[test]
    fn mathieu_values() {
        let b = Potential::mathieu(QuadSurd::from_integer(1));
        assert!((b.eval(&[0.0]) - 2.0).abs() < 1e-15);
        assert!((b.eval(&[std::f64::consts::PI]) + 2.0).abs() < 1e-15);
        assert!((b.laplacian(&[0.0]) + 2.0).abs() < 1e-15);
        assert_eq!(b.frequency_set().len(), 3);
        assert!(b.is_periodic());
    }
}
