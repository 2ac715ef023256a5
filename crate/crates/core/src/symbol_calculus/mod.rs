//! Quasi-periodic symbols b(x, ξ) = Σ_θ b̂(θ, ξ) e^{i⟨θ,x⟩}: evaluation,
//! composition, class norms, symmetry and the action on exponential sums.

mod expr;
mod jet;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::frequency_lattice::{FrequencyVector, GeneratorBasis};
use crate::potential::Potential;

pub use expr::{iota_derivative, CoefficientExpr, Node, IOTA_HIGH, IOTA_LOW};

#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    dim: usize,
    /// declared class order α
    pub order: f64,
    terms: BTreeMap<FrequencyVector, CoefficientExpr>,
}

impl Symbol {
    pub fn zero(dim: usize) -> Self {
        Self { dim, order: 0.0, terms: BTreeMap::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::single(FrequencyVector::zero(dim), CoefficientExpr::one())
    }

    pub fn single(theta: FrequencyVector, c: CoefficientExpr) -> Self {
        let mut s = Self::zero(theta.dim());
        s.insert(theta, c);
        s
    }

    /// Symbol of multiplication by b.
    pub fn multiplication(b: &Potential) -> Self {
        let mut s = Self::zero(b.dim());
        for (th, c) in b.coeffs() {
            s.insert(th.clone(), CoefficientExpr::constant(c.to_c64()));
        }
        s
    }

    /// |ξ|², the symbol of −Δ.
    pub fn laplacian(dim: usize) -> Self {
        let mut s = Self::single(FrequencyVector::zero(dim), CoefficientExpr::shifted_norm2(&vec![0.0; dim]));
        s.order = 2.0;
        s
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (FrequencyVector, CoefficientExpr)>) -> Self {
        let mut s = Self::zero(dim);
        for (k, v) in terms {
            s.add_term(k, v);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<FrequencyVector, CoefficientExpr> {
        &self.terms
    }

    pub fn support(&self) -> impl Iterator<Item = &FrequencyVector> {
        self.terms.keys()
    }

    pub fn coeff(&self, theta: &FrequencyVector) -> Option<&CoefficientExpr> {
        self.terms.get(theta)
    }

    /// b̂(θ, ξ), zero off the support.
    pub fn coeff_at(&self, theta: &FrequencyVector, xi: &[f64]) -> Complex64 {
        self.terms.get(theta).map_or(Complex64::new(0.0, 0.0), |c| c.eval(xi))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, theta: FrequencyVector, c: CoefficientExpr) {
        if c.is_zero() {
            self.terms.remove(&theta);
        } else {
            self.terms.insert(theta, c);
        }
    }

    pub fn add_term(&mut self, theta: FrequencyVector, c: CoefficientExpr) {
        let merged = match self.terms.get(&theta) {
            Some(old) => old.add(&c),
            None => c,
        };
        self.insert(theta, merged);
    }

    pub fn add(&self, o: &Symbol) -> Symbol {
        let mut s = self.clone();
        for (k, v) in &o.terms {
            s.add_term(k.clone(), v.clone());
        }
        s.order = self.order.max(o.order);
        s
    }

    pub fn scale(&self, c: Complex64) -> Symbol {
        let mut s = Symbol::zero(self.dim);
        s.order = self.order;
        for (k, v) in &self.terms {
            s.insert(k.clone(), v.scale(c));
        }
        s
    }

    pub fn sub(&self, o: &Symbol) -> Symbol {
        self.add(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise map of coefficients.
    pub fn map(&self, f: impl Fn(&FrequencyVector, &CoefficientExpr) -> CoefficientExpr) -> Symbol {
        let mut s = Symbol::zero(self.dim);
        s.order = self.order;
        for (k, v) in &self.terms {
            s.insert(k.clone(), f(k, v));
        }
        s
    }

    /// True when no coefficient depends on ξ.
    pub fn is_multiplication(&self) -> bool {
        self.terms.values().all(CoefficientExpr::is_constant)
    }

    /// b(x, ξ) = Σ_θ b̂(θ, ξ) e^{i⟨θ,x⟩}.
    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(th, c)| c.eval(xi) * Complex64::from_polar(1.0, th.dot_f64(x)))
            .sum()
    }

    /// (b∘g)^(χ, ξ) = Σ_{θ+φ=χ} b̂(θ, ξ+φ) ĝ(φ, ξ).
    pub fn compose(&self, g: &Symbol) -> Symbol {
        let mut out = Symbol::zero(self.dim);
        out.order = self.order + g.order;
        let mut acc: BTreeMap<FrequencyVector, Vec<CoefficientExpr>> = BTreeMap::new();
        for (phi, gc) in &g.terms {
            let shift = phi.to_f64();
            for (th, bc) in &self.terms {
                let term = CoefficientExpr::product([bc.shift(&shift), gc.clone()]);
                if !term.is_zero() {
                    acc.entry(th.add(phi)).or_default().push(term);
                }
            }
        }
        for (chi, ts) in acc {
            out.insert(chi, CoefficientExpr::sum(ts));
        }
        out
    }

    /// [b, g] = b∘g − g∘b.
    pub fn commutator(&self, g: &Symbol) -> Symbol {
        self.compose(g).sub(&g.compose(self))
    }

    /// Sampled version of ⦀b⦀^{(α)}_{l,s}; a lower bound for the sup over ℝ^d.
    pub fn class_norm(&self, alpha: f64, l: f64, s: usize, beta: f64, grid: &[Vec<f64>]) -> f64 {
        let mut best = 0.0_f64;
        for ms in multi_indices(self.dim, s) {
            let order: usize = ms.iter().sum();
            let mut total = 0.0;
            for (th, c) in &self.terms {
                let dc = c.diff_multi(&ms);
                let sup = grid
                    .iter()
                    .map(|xi| bracket(xi).powf((-alpha + order as f64) * beta) * dc.eval(xi).norm())
                    .fold(0.0_f64, f64::max);
                total += bracket(&th.to_f64()).powf(l) * sup;
            }
            best = best.max(total);
        }
        best
    }

    /// Largest violation of b̂(θ, ξ) = conj b̂(−θ, ξ+θ) over the grid, each
    /// measured relative to max(1, |b̂|).
    pub fn symmetry_defect(&self, grid: &[Vec<f64>]) -> f64 {
        let mut keys: Vec<FrequencyVector> = self.terms.keys().cloned().collect();
        keys.extend(self.terms.keys().map(FrequencyVector::neg));
        keys.sort();
        keys.dedup();
        let mut worst = 0.0_f64;
        for th in &keys {
            let thf = th.to_f64();
            let mth = th.neg();
            for xi in grid {
                let a = self.coeff_at(th, xi);
                let shifted: Vec<f64> = xi.iter().zip(&thf).map(|(x, t)| x + t).collect();
                let b = self.coeff_at(&mth, &shifted).conj();
                let scale = a.norm().max(b.norm()).max(1.0);
                let diff = (a - b).norm();
                let defect = if diff.is_nan() { f64::INFINITY } else { diff / scale };
                worst = worst.max(defect);
            }
        }
        worst
    }

    pub fn is_symmetric(&self, grid: &[Vec<f64>]) -> bool {
        self.symmetry_defect(grid) <= 1e-12
    }

    /// Op(b) Σ c_η e_η = Σ_η Σ_θ c_η b̂(θ, η) e_{η+θ}.
    pub fn apply_to_wave(&self, wave: &Wave) -> Wave {
        let mut out = Wave::new(wave.base.clone());
        for (off, c) in &wave.amps {
            let eta = wave.point(off);
            for (th, bc) in &self.terms {
                out.add(off.add(th), c * bc.eval(&eta));
            }
        }
        out.prune();
        out
    }

    /// Matrix of Op(b) on the exponentials e_{base+o}: M[i][j] = b̂(o_i − o_j, base + o_j).
    pub fn matrix_on(&self, base: &[f64], offsets: &[FrequencyVector]) -> DMatrix<Complex64> {
        let n = offsets.len();
        DMatrix::from_fn(n, n, |i, j| {
            let th = offsets[i].sub(&offsets[j]);
            match self.terms.get(&th) {
                Some(c) => {
                    let eta: Vec<f64> = base.iter().zip(offsets[j].to_f64()).map(|(a, b)| a + b).collect();
                    c.eval(&eta)
                }
                None => Complex64::new(0.0, 0.0),
            }
        })
    }

    pub fn to_json(&self, basis: &GeneratorBasis) -> SymbolJson {
        SymbolJson {
            dim: self.dim,
            order: self.order,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| TermJson { frequency: k.rational_matrix(basis), coefficient: v.clone() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolJson {
    pub dim: usize,
    pub order: f64,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TermJson {
    pub frequency: Vec<Vec<String>>,
    pub coefficient: CoefficientExpr,
}

/// Finite exponential sum Σ c_o e_{base+o} with exact offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct Wave {
    pub base: Vec<f64>,
    pub amps: BTreeMap<FrequencyVector, Complex64>,
}

impl Wave {
    pub fn new(base: Vec<f64>) -> Self {
        Self { base, amps: BTreeMap::new() }
    }

    pub fn single(base: Vec<f64>) -> Self {
        let d = base.len();
        let mut w = Self::new(base);
        w.add(FrequencyVector::zero(d), Complex64::new(1.0, 0.0));
        w
    }

    pub fn add(&mut self, off: FrequencyVector, c: Complex64) {
        *self.amps.entry(off).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn point(&self, off: &FrequencyVector) -> Vec<f64> {
        self.base.iter().zip(off.to_f64()).map(|(a, b)| a + b).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn prune(&mut self) {
        self.amps.retain(|_, c| *c != Complex64::new(0.0, 0.0));
    }
}

/// ⟨t⟩ = (1 + |t|²)^{1/2}
pub fn bracket(t: &[f64]) -> f64 {
    (1.0 + t.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// All multi-indices of length `d` with |s| ≤ s.
pub fn multi_indices(d: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d]];
    for _ in 0..s {
        let mut next = Vec::new();
        for m in &out {
            for i in 0..d {
                let mut c = m.clone();
                c[i] += 1;
                next.push(c);
            }
        }
        out.extend(next);
        out.sort();
        out.dedup();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::QuadSurd;

    fn mathieu(v: i64) -> Symbol {
        Symbol::multiplication(&Potential::mathieu(QuadSurd::from_integer(v)))
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(Symbol::identity(2).evaluate(&[0.3, 0.1], &[5.0, 1.0]), Complex64::new(1.0, 0.0));
        assert!((mathieu(3).evaluate(&[0.0], &[7.0]).re - 6.0).abs() < 1e-15);
    }

    #[test]
    fn compose_examples() {
        let b = mathieu(1);
        assert_eq!(b.compose(&Symbol::identity(1)), b);
        let th1 = FrequencyVector::from_integers(&[1, 2]);
        let th2 = FrequencyVector::from_integers(&[-3, 1]);
        let p = Symbol::single(th1.clone(), CoefficientExpr::one())
            .compose(&Symbol::single(th2.clone(), CoefficientExpr::one()));
        assert_eq!(p, Symbol::single(th1.add(&th2), CoefficientExpr::one()));
        let sq = b.compose(&b);
        let keys: Vec<_> = sq.support().map(|k| k.to_integers().unwrap()[0]).collect();
        assert_eq!(keys, vec![-2, 0, 2]);
        assert_eq!(sq.coeff_at(&FrequencyVector::zero(1), &[0.0]), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn class_norm_examples() {
        let grid = vec![vec![0.0], vec![10.0]];
        assert!((mathieu(1).class_norm(0.0, 0.0, 0, 0.1, &grid) - 2.0).abs() < 1e-15);
        assert_eq!(Symbol::zero(1).class_norm(0.0, 0.0, 2, 0.1, &grid), 0.0);
        let n3 = mathieu(1).scale(Complex64::new(0.0, -3.0)).class_norm(0.0, 0.0, 0, 0.1, &grid);
        assert!((n3 - 6.0).abs() < 1e-14);
    }

    #[test]
    fn symmetry_examples() {
        let grid: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 3.7]).collect();
        assert!(mathieu(2).is_symmetric(&grid));
        let lone = Symbol::single(FrequencyVector::from_integers(&[1]), CoefficientExpr::one());
        assert!(!lone.is_symmetric(&grid));
    }

    #[test]
    fn wave_examples() {
        let lap = Symbol::laplacian(2);
        let out = lap.apply_to_wave(&Wave::single(vec![3.0, 4.0]));
        assert_eq!(out.amps[&FrequencyVector::zero(2)], Complex64::new(25.0, 0.0));
        let out = mathieu(1).apply_to_wave(&Wave::single(vec![0.0]));
        assert_eq!(out.amps.len(), 2);
        assert_eq!(out.amps[&FrequencyVector::from_integers(&[1])], Complex64::new(1.0, 0.0));
        assert_eq!(out.amps[&FrequencyVector::from_integers(&[-1])], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(1, 3).len(), 4);
    }
}
