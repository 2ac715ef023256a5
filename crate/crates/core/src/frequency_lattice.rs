//! Frequency sets with exact coordinates in ℚ or ℚ(√D), their algebraic sums,
//! Condition A, quasi-lattice subspaces and the Diophantine constants s, r, R.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::QuadSurd;

/// Generators γ₁ = 1 and optionally γ₂ = √D.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct GeneratorBasis {
    surd: Option<u64>,
}

impl GeneratorBasis {
    pub fn rational() -> Self {
        Self { surd: None }
    }

    pub fn with_surd(d: u64) -> Result<Self> {
        let r = (d as f64).sqrt().round() as u64;
        if d < 2 || (r.saturating_sub(1)..=r + 1).any(|q| q * q == d) {
            return Err(Error::UnsupportedGenerators(format!(
                "√{d} is rational; the generators would be dependent"
            )));
        }
        Ok(Self { surd: Some(d) })
    }

    /// Builds a basis from a list of requested radicands; more than one
    /// distinct surd is outside exact support.
    pub fn from_radicands(list: &[u64]) -> Result<Self> {
        let distinct: BTreeSet<u64> = list.iter().copied().collect();
        match distinct.len() {
            0 => Ok(Self::rational()),
            1 => Self::with_surd(*distinct.iter().next().unwrap()),
            _ => Err(Error::UnsupportedGenerators(format!(
                "at most one quadratic surd is supported, got {distinct:?}"
            ))),
        }
    }

    pub fn surd(&self) -> Option<u64> {
        self.surd
    }

    /// Number of generators g.
    pub fn len(&self) -> usize {
        1 + self.surd.is_some() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn admits(&self, x: &QuadSurd) -> bool {
        x.radicand() == 0 || Some(x.radicand()) == self.surd
    }
}

/// An exact frequency in ℝ^d with coordinates in ℚ(√D).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FrequencyVector {
    coords: Vec<QuadSurd>,
}

impl FrequencyVector {
    pub fn new(coords: Vec<QuadSurd>) -> Self {
        Self { coords }
    }

    pub fn zero(d: usize) -> Self {
        Self { coords: vec![QuadSurd::zero(); d] }
    }

    pub fn from_integers(v: &[i64]) -> Self {
        Self { coords: v.iter().map(|&x| QuadSurd::from_integer(x)).collect() }
    }

    /// Unit vector e_i in ℝ^d.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = Self::zero(d);
        v.coords[i] = QuadSurd::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[QuadSurd] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a - b).collect() }
    }

    pub fn neg(&self) -> Self {
        Self { coords: self.coords.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, c: &QuadSurd) -> Self {
        Self { coords: self.coords.iter().map(|a| a * c).collect() }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&QuadSurd::from_integer(n))
    }

    pub fn dot(&self, o: &Self) -> QuadSurd {
        self.coords
            .iter()
            .zip(&o.coords)
            .fold(QuadSurd::zero(), |acc, (a, b)| &acc + &(a * b))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(QuadSurd::to_f64).collect()
    }

    pub fn norm_f64(&self) -> f64 {
        self.to_f64().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot_f64(&self, xi: &[f64]) -> f64 {
        self.coords.iter().zip(xi).map(|(a, x)| a.to_f64() * x).sum()
    }

    /// True when every coordinate is an integer.
    pub fn is_integral(&self) -> bool {
        self.coords
            .iter()
            .all(|c| c.is_rational() && c.rational_part().is_integer())
    }

    /// Integer coordinates, when [`Self::is_integral`].
    pub fn to_integers(&self) -> Option<Vec<i64>> {
        use num_traits::ToPrimitive;
        if !self.is_integral() {
            return None;
        }
        self.coords.iter().map(|c| c.rational_part().to_integer().to_i64()).collect()
    }

    /// Canonical representative of {θ, −θ}: the one whose first nonzero coordinate is positive.
    pub fn sign_normalized(&self) -> Self {
        match self.coords.iter().find(|c| !c.is_zero()) {
            Some(c) if c.signum() < 0 => self.neg(),
            _ => self.clone(),
        }
    }

    /// The d × g rational matrix, entries as "p/q" strings.
    pub fn rational_matrix(&self, basis: &GeneratorBasis) -> Vec<Vec<String>> {
        self.coords
            .iter()
            .map(|c| {
                let mut row = vec![c.rational_part().to_string()];
                if basis.surd.is_some() {
                    row.push(c.surd_part().to_string());
                }
                row
            })
            .collect()
    }

    /// Coordinates flattened over ℚ: (rat₁, irr₁, rat₂, irr₂, …).
    fn flatten_rational(&self) -> Vec<QuadSurd> {
        self.coords
            .iter()
            .flat_map(|c| {
                [
                    QuadSurd::from_rational(c.rational_part().clone()),
                    QuadSurd::from_rational(c.surd_part().clone()),
                ]
            })
            .collect()
    }
}

impl fmt::Debug for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Finite symmetric frequency set containing zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencySet {
    dim: usize,
    basis: GeneratorBasis,
    elements: BTreeSet<FrequencyVector>,
}

impl FrequencySet {
    /// Closes `elements` under negation and adds 0. Spanning is checked
    /// separately with [`FrequencySet::require_spanning`].
    pub fn new(
        dim: usize,
        basis: GeneratorBasis,
        elements: impl IntoIterator<Item = FrequencyVector>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        set.insert(FrequencyVector::zero(dim));
        for v in elements {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
            }
            if let Some(c) = v.coords.iter().find(|c| !basis.admits(c)) {
                return Err(Error::UnsupportedGenerators(format!(
                    "coordinate {c} is outside the declared generators"
                )));
            }
            set.insert(v.neg());
            set.insert(v);
        }
        Ok(Self { dim, basis, elements: set })
    }

    /// Integer frequency set, e.g. `{±e₁, ±e₂}`.
    pub fn from_integer_vectors(dim: usize, vs: &[Vec<i64>]) -> Result<Self> {
        Self::new(dim, GeneratorBasis::rational(), vs.iter().map(|v| FrequencyVector::from_integers(v)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    pub fn elements(&self) -> &BTreeSet<FrequencyVector> {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, v: &FrequencyVector) -> bool {
        self.elements.contains(v)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = &FrequencyVector> {
        self.elements.iter().filter(|v| !v.is_zero())
    }

    /// One representative per ± pair of nonzero elements.
    pub fn half(&self) -> Vec<FrequencyVector> {
        self.nonzero()
            .map(FrequencyVector::sign_normalized)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn spans(&self) -> bool {
        rank(self.elements.iter().map(|v| v.coords.clone()).collect()) == self.dim
    }

    pub fn require_spanning(&self) -> Result<()> {
        if self.spans() {
            Ok(())
        } else {
            Err(Error::NotSpanning(self.dim))
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut e = self.elements.clone();
        e.extend(other.elements.iter().cloned());
        Self { dim: self.dim, basis: self.basis, elements: e }
    }
}

/// Θ_k = Θ + … + Θ (k times).
pub fn algebraic_sum(s: &FrequencySet, k: usize) -> FrequencySet {
    let mut acc = s.elements.clone();
    for _ in 1..k.max(1) {
        let mut next = BTreeSet::new();
        for a in &acc {
            for b in &s.elements {
                next.insert(a.add(b));
            }
        }
        acc = next;
    }
    FrequencySet { dim: s.dim, basis: s.basis, elements: acc }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionAReport {
    pub passed: bool,
    pub witness: Option<Vec<FrequencyVector>>,
    pub tuples_checked: usize,
    /// The sum order actually inspected; Condition A itself quantifies over all orders.
    pub k_max: usize,
}

/// A d-tuple violates Condition A when it is ℝ-dependent yet ℚ-independent
/// (no integer relation). Tuples are drawn from Θ_{k_max} up to sign.
pub fn check_condition_a(s: &FrequencySet, k_max: usize) -> Result<ConditionAReport> {
    let theta = algebraic_sum(s, k_max.max(1));
    let reps = theta.half();
    let d = s.dim;
    let mut checked = 0;
    for tuple in reps.iter().combinations(d) {
        checked += 1;
        let real_rank = rank(tuple.iter().map(|v| v.coords.clone()).collect());
        if real_rank == d {
            continue;
        }
        let q_rank = rank(tuple.iter().map(|v| v.flatten_rational()).collect());
        if q_rank == d {
            return Ok(ConditionAReport {
                passed: false,
                witness: Some(tuple.into_iter().cloned().collect()),
                tuples_checked: checked,
                k_max,
            });
        }
    }
    Ok(ConditionAReport { passed: true, witness: None, tuples_checked: checked, k_max })
}

/// Linear span of exact frequencies, kept in reduced row-echelon form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuasiLatticeSubspace {
    ambient: usize,
    rows: Vec<Vec<QuadSurd>>,
}

impl QuasiLatticeSubspace {
    pub fn span(ambient: usize, vectors: &[FrequencyVector]) -> Self {
        let rows = rref(vectors.iter().map(|v| v.coords.clone()).collect());
        Self { ambient, rows }
    }

    pub fn zero(ambient: usize) -> Self {
        Self { ambient, rows: vec![] }
    }

    pub fn full(ambient: usize) -> Self {
        let vs: Vec<_> = (0..ambient).map(|i| FrequencyVector::unit(ambient, i)).collect();
        Self::span(ambient, &vs)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Canonical basis (the RREF rows).
    pub fn basis(&self) -> Vec<FrequencyVector> {
        self.rows.iter().cloned().map(FrequencyVector::new).collect()
    }

    pub fn contains(&self, v: &FrequencyVector) -> bool {
        let mut rows = self.rows.clone();
        rows.push(v.coords.clone());
        rank(rows) == self.dim()
    }

    pub fn is_subspace_of(&self, other: &Self) -> bool {
        self.rows.iter().all(|r| other.contains(&FrequencyVector::new(r.clone())))
    }

    pub fn sum(&self, other: &Self) -> Self {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Self { ambient: self.ambient, rows: rref(rows) }
    }

    pub fn with_vector(&self, v: &FrequencyVector) -> Self {
        let mut rows = self.rows.clone();
        rows.push(v.coords.clone());
        Self { ambient: self.ambient, rows: rref(rows) }
    }

    /// Exact orthogonal complement in ℝ^d.
    pub fn orthogonal_complement(&self) -> Self {
        Self { ambient: self.ambient, rows: rref(null_space(&self.rows, self.ambient)) }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.orthogonal_complement()
            .sum(&other.orthogonal_complement())
            .orthogonal_complement()
    }

    /// `self ⊖ w`: the orthogonal complement of `w` inside `self` (w ⊂ self).
    pub fn ominus(&self, w: &Self) -> Self {
        self.orthogonal_complement().sum(w).orthogonal_complement()
    }

    /// Orthonormal basis (floating point), obtained by Gram–Schmidt on the canonical rows.
    pub fn orthonormal_basis(&self) -> Vec<Vec<f64>> {
        gram_schmidt(self.rows.iter().map(|r| r.iter().map(QuadSurd::to_f64).collect()).collect())
    }
}

impl fmt::Debug for QuasiLatticeSubspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{:?}", self.basis())
    }
}

/// Every distinct span of m independent elements of `s`.
pub fn enumerate_subspaces(s: &FrequencySet, m: usize) -> Vec<QuasiLatticeSubspace> {
    let d = s.dim;
    let mut layer: BTreeSet<QuasiLatticeSubspace> = BTreeSet::new();
    layer.insert(QuasiLatticeSubspace::zero(d));
    let reps = s.half();
    for _ in 0..m.min(d) {
        let mut next = BTreeSet::new();
        for v in &layer {
            for th in &reps {
                if !v.contains(th) {
                    next.insert(v.with_vector(th));
                }
            }
        }
        layer = next;
    }
    if m > d {
        return vec![];
    }
    layer.into_iter().collect()
}

/// All quasi-lattice subspaces grouped by dimension 0..=d.
pub fn enumerate_all_subspaces(s: &FrequencySet) -> Vec<Vec<QuasiLatticeSubspace>> {
    let d = s.dim;
    let reps = s.half();
    let mut out = vec![vec![QuasiLatticeSubspace::zero(d)]];
    for _ in 0..d {
        let mut next = BTreeSet::new();
        for v in out.last().unwrap() {
            for th in &reps {
                if !v.contains(th) {
                    next.insert(v.with_vector(th));
                }
            }
        }
        out.push(next.into_iter().collect());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiophantineReport {
    pub s: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

/// Sine of the angle between `u ⊖ w` and `v ⊖ w`, w = u ∩ v. Gram matrices
/// are exact; only the final eigenvalue is taken in floating point.
pub fn subspace_angle_sine(u: &QuasiLatticeSubspace, v: &QuasiLatticeSubspace) -> f64 {
    let w = u.intersection(v);
    let a = u.ominus(&w).rows;
    let b = v.ominus(&w).rows;
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let gram = |x: &[Vec<QuadSurd>], y: &[Vec<QuadSurd>]| -> Vec<Vec<QuadSurd>> {
        x.iter().map(|p| y.iter().map(|q| dot(p, q)).collect()).collect()
    };
    let gaa_inv = invert(&gram(&a, &a));
    let gbb_inv = invert(&gram(&b, &b));
    let gab = gram(&a, &b);
    let gba = gram(&b, &a);
    let m = matmul(&matmul(&gaa_inv, &gab), &matmul(&gbb_inv, &gba));
    let n = m.len();
    let mf = DMatrix::from_fn(n, n, |i, j| m[i][j].to_f64());
    let cos2 = mf
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(0.0_f64, f64::max)
        .clamp(0.0, 1.0);
    (1.0 - cos2).sqrt()
}

pub fn diophantine_constants(s: &FrequencySet) -> DiophantineReport {
    let layers = enumerate_all_subspaces(s);
    let d = s.dim;
    let proper: Vec<&QuasiLatticeSubspace> =
        layers.iter().take(d).skip(1).flatten().collect();
    let mut smin = 1.0_f64;
    for (i, u) in proper.iter().enumerate() {
        for v in &proper[i + 1..] {
            let w = u.intersection(v);
            if w.dim() < u.dim() && w.dim() < v.dim() {
                smin = smin.min(subspace_angle_sine(u, v));
            }
        }
    }
    let norms: Vec<f64> = s.nonzero().map(FrequencyVector::norm_f64).collect();
    let r = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let big_r = norms.iter().copied().fold(0.0, f64::max);
    DiophantineReport { s: smin, r, big_r }
}

fn dot(a: &[QuadSurd], b: &[QuadSurd]) -> QuadSurd {
    a.iter().zip(b).fold(QuadSurd::zero(), |acc, (x, y)| &acc + &(x * y))
}

fn matmul(a: &[Vec<QuadSurd>], b: &[Vec<QuadSurd>]) -> Vec<Vec<QuadSurd>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).fold(QuadSurd::zero(), |acc, (x, br)| &acc + &(x * &br[j])))
                .collect()
        })
        .collect()
}

/// Gauss–Jordan inverse; the input must be nonsingular.
fn invert(m: &[Vec<QuadSurd>]) -> Vec<Vec<QuadSurd>> {
    let n = m.len();
    let mut aug: Vec<Vec<QuadSurd>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { QuadSurd::one() } else { QuadSurd::zero() }));
            r
        })
        .collect();
    let red = rref(std::mem::take(&mut aug));
    assert_eq!(red.len(), n, "singular Gram matrix");
    red.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Reduced row-echelon form, zero rows dropped. Pivots are the leftmost
/// nonzero column and the first available row, so the result is canonical.
pub(crate) fn rref(mut rows: Vec<Vec<QuadSurd>>) -> Vec<Vec<QuadSurd>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut lead = 0;
    for col in 0..ncols {
        let Some(p) = (lead..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(lead, p);
        let inv = rows[lead][col].inv().expect("nonzero pivot");
        for x in rows[lead].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = rows[lead].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != lead && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, pv) in row.iter_mut().zip(&pivot_row) {
                    *x = &*x - &(&f * pv);
                }
            }
        }
        lead += 1;
        if lead == rows.len() {
            break;
        }
    }
    rows.truncate(lead);
    rows
}

pub(crate) fn rank(rows: Vec<Vec<QuadSurd>>) -> usize {
    rref(rows).len()
}

/// Null space basis of the matrix with the given rows.
fn null_space(rows: &[Vec<QuadSurd>], ncols: usize) -> Vec<Vec<QuadSurd>> {
    let red = rref(rows.to_vec());
    let mut pivots = Vec::new();
    for row in &red {
        pivots.push(row.iter().position(|x| !x.is_zero()).unwrap());
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![QuadSurd::zero(); ncols];
        v[free] = QuadSurd::one();
        for (row, &pc) in red.iter().zip(&pivots) {
            v[pc] = -&row[free];
        }
        basis.push(v);
    }
    basis
}

pub(crate) fn gram_schmidt(vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in vs {
        for _ in 0..2 {
            for e in &out {
                let c: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes2() -> FrequencySet {
        FrequencySet::from_integer_vectors(2, &[vec![1, 0], vec![0, 1]]).unwrap()
    }

    #[test]
    fn sum_of_axes_has_thirteen() {
        let s2 = algebraic_sum(&axes2(), 2);
        assert_eq!(s2.len(), 13);
        for v in [[1, 1], [1, -1], [2, 0], [0, 2], [-1, -1], [0, -2]] {
            assert!(s2.contains(&FrequencyVector::from_integers(&v)));
        }
        assert_eq!(algebraic_sum(&axes2(), 1), axes2());
    }

    #[test]
    fn condition_a_surd_witness() {
        let basis = GeneratorBasis::with_surd(2).unwrap();
        let s = FrequencySet::new(
            2,
            basis,
            [
                FrequencyVector::from_integers(&[1, 0]),
                FrequencyVector::new(vec![QuadSurd::sqrt_of(2), QuadSurd::zero()]),
            ],
        )
        .unwrap();
        let rep = check_condition_a(&s, 1).unwrap();
        assert!(!rep.passed);
        let w = rep.witness.unwrap();
        assert!(w.contains(&FrequencyVector::from_integers(&[1, 0])));
        assert!(check_condition_a(&axes2(), 3).unwrap().passed);
    }

    #[test]
    fn rejects_square_radicand_and_two_surds() {
        assert!(GeneratorBasis::with_surd(4).is_err());
        assert!(matches!(
            GeneratorBasis::from_radicands(&[2, 3]),
            Err(Error::UnsupportedGenerators(_))
        ));
    }

    #[test]
    fn subspace_counts() {
        let s = axes2();
        assert_eq!(enumerate_subspaces(&s, 1).len(), 2);
        assert_eq!(enumerate_subspaces(&s, 0), vec![QuasiLatticeSubspace::zero(2)]);
        assert_eq!(enumerate_subspaces(&s, 2), vec![QuasiLatticeSubspace::full(2)]);
        assert_eq!(enumerate_subspaces(&algebraic_sum(&s, 2), 1).len(), 4);
    }

    #[test]
    fn span_equality_is_exact() {
        let a = QuasiLatticeSubspace::span(2, &[FrequencyVector::from_integers(&[2, 2])]);
        let b = QuasiLatticeSubspace::span(2, &[FrequencyVector::from_integers(&[-1, -1])]);
        assert_eq!(a, b);
    }

    #[test]
    fn diophantine_examples() {
        let rep = diophantine_constants(&axes2());
        assert!((rep.s - 1.0).abs() < 1e-14 && rep.r == 1.0 && rep.big_r == 1.0);
        let rep2 = diophantine_constants(&algebraic_sum(&axes2(), 2));
        assert!((rep2.s - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!((rep2.r, rep2.big_r), (1.0, 2.0));
        let one = FrequencySet::from_integer_vectors(1, &[vec![1]]).unwrap();
        let rep1 = diophantine_constants(&one);
        assert_eq!((rep1.s, rep1.r, rep1.big_r), (1.0, 1.0, 1.0));
    }

    #[test]
    fn three_dimensional_angle() {
        // plane z=0 and plane x=0 meet in the y-axis; the residual lines are orthogonal
        let u = QuasiLatticeSubspace::span(
            3,
            &[FrequencyVector::from_integers(&[1, 0, 0]), FrequencyVector::from_integers(&[0, 1, 0])],
        );
        let v = QuasiLatticeSubspace::span(
            3,
            &[FrequencyVector::from_integers(&[0, 1, 0]), FrequencyVector::from_integers(&[0, 0, 1])],
        );
        assert!((subspace_angle_sine(&u, &v) - 1.0).abs() < 1e-14);
        let w = QuasiLatticeSubspace::span(
            3,
            &[FrequencyVector::from_integers(&[0, 1, 0]), FrequencyVector::from_integers(&[1, 0, 1])],
        );
        assert!((subspace_angle_sine(&u, &w) - 0.5f64.sqrt()).abs() < 1e-14);
    }
}
