//! Numerical checks tying the expansion to the Bloch oracle, plus
//! finite-dimensional validators for the projection-perturbation bounds,
//! the contour (change of integration order) identity and the geometric
//! resolvent series.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bloch_oracle::{adaptive_gk15, build_fiber, fiber_spectrum, BlochOracle, OracleConfig};
use crate::error::{Error, Result};
use crate::heat_invariants::{pi_multiple_f64, ExpansionCoefficients};
use crate::potential::Potential;

/// λ^{d/2}(C_d + Σ_{j≤L} a_j(x) λ^{−j}).
pub fn expansion_eval(coeffs: &ExpansionCoefficients, lambda: f64, x: &[f64], l: usize) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!("λ must be positive, got {lambda}")));
    }
    if l > coeffs.a.len() {
        return Err(Error::InvalidParameter(format!("L = {l} exceeds the {} available coefficients", coeffs.a.len())));
    }
    let mut s = pi_multiple_f64(&coeffs.weyl);
    for j in 1..=l {
        s += coeffs.a_at(j, x) * lambda.powi(-(j as i32));
    }
    Ok(lambda.powf(coeffs.dim as f64 / 2.0) * s)
}

/// Leading off-diagonal term (2/(2π|x−y|)^{(d+1)/2}) λ^{(d−1)/4} sin(λ^{1/2}|x−y| − π(d−1)/4).
pub fn free_offdiagonal(lambda: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let r = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::CoincidingPoints);
    }
    let d = x.len() as f64;
    Ok(2.0 / (2.0 * PI * r).powf((d + 1.0) / 2.0)
        * lambda.powf((d - 1.0) / 4.0)
        * (lambda.sqrt() * r - PI * (d - 1.0) / 4.0).sin())
}

/// Ratio of the geometric λ-bins used in slope fits.
pub const BIN_RATIO: f64 = 1.3;

#[derive(Clone, Debug, Serialize)]
pub struct LadderFit {
    pub l: usize,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub bins_used: usize,
    pub bins_excluded: usize,
    pub noise_floor: bool,
    /// leading coefficient c in R_L ≈ c λ^{d/2−L−1} + c′ λ^{d/2−L−2}
    pub coefficient: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualLadder {
    pub dim: usize,
    pub x: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub oracle: Vec<f64>,
    /// residuals[L][i] = N_oracle(λ_i) − expansion_eval(L)
    pub residuals: Vec<Vec<f64>>,
    pub fits: Vec<LadderFit>,
}

struct Bin {
    lambda: f64,
    value: f64,
}

/// Groups a ladder into geometric bins of ratio [`BIN_RATIO`]. With
/// `sign_robust`, bins whose residual changes sign are dropped and the rest
/// are summarized by the median |R|; otherwise by max |R| (an envelope).
fn bin_ladder(lambdas: &[f64], values: &[f64], sign_robust: bool) -> (Vec<Bin>, usize) {
    let l0 = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut groups: std::collections::BTreeMap<i64, Vec<(f64, f64)>> = Default::default();
    for (&l, &v) in lambdas.iter().zip(values) {
        let idx = ((l / l0).ln() / BIN_RATIO.ln() + 1e-12).floor() as i64;
        groups.entry(idx).or_default().push((l, v));
    }
    let mut bins = Vec::new();
    let mut excluded = 0;
    for g in groups.values() {
        let lam = (g.iter().map(|(l, _)| l.ln()).sum::<f64>() / g.len() as f64).exp();
        if sign_robust {
            let pos = g.iter().any(|(_, v)| *v > 0.0);
            let neg = g.iter().any(|(_, v)| *v < 0.0);
            if pos && neg {
                excluded += 1;
                continue;
            }
            let mut a: Vec<f64> = g.iter().map(|(_, v)| v.abs()).collect();
            a.sort_by(f64::total_cmp);
            let m = a.len();
            let med = if m % 2 == 1 { a[m / 2] } else { 0.5 * (a[m / 2 - 1] + a[m / 2]) };
            bins.push(Bin { lambda: lam, value: med });
        } else {
            bins.push(Bin { lambda: lam, value: g.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max) });
        }
    }
    (bins, excluded)
}

/// Least-squares line through (ln λ, ln v); returns (slope, intercept, r²).
fn loglog_fit(bins: &[Bin]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = bins.iter().filter(|b| b.value > 0.0).map(|b| (b.lambda.ln(), b.value.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

/// Two-term fit R ≈ c λ^p + c′ λ^{p−1}; returns c.
fn leading_coefficient(lambdas: &[f64], values: &[f64], p: f64) -> Option<f64> {
    if lambdas.len() < 2 {
        return None;
    }
    // R λ^{−p} = c + c′/λ
    let rows: Vec<(f64, f64)> = lambdas.iter().zip(values).map(|(&l, &v)| (1.0 / l, v * l.powf(-p))).collect();
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let sxx: f64 = rows.iter().map(|r| (r.0 - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.0 - mx) * (r.1 - my)).sum();
    if sxx == 0.0 {
        return Some(my);
    }
    Some(my - sxy / sxx * mx)
}

/// Residual ladder of the on-diagonal expansion against the Bloch oracle.
pub fn residual_ladder(
    b: &Potential,
    x: &[f64],
    l_max: usize,
    lambdas: &[f64],
    oracle_cfg: &OracleConfig,
) -> Result<ResidualLadder> {
    let oracle = BlochOracle::new(b, oracle_cfg.clone())?;
    let coeffs = ExpansionCoefficients::closed_form(b)?;
    let values: Vec<f64> = oracle.ladder(lambdas, &[(x.to_vec(), x.to_vec())])?.into_iter().map(|v| v[0]).collect();
    ladder_from_values(&coeffs, x, l_max, lambdas, values)
}

/// Same as [`residual_ladder`] for precomputed oracle values.
pub fn ladder_from_values(
    coeffs: &ExpansionCoefficients,
    x: &[f64],
    l_max: usize,
    lambdas: &[f64],
    oracle: Vec<f64>,
) -> Result<ResidualLadder> {
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("λ ladder must be strictly increasing".into()));
    }
    let d = coeffs.dim as f64;
    let mut residuals = Vec::new();
    let mut fits = Vec::new();
    for l in 0..=l_max {
        let r: Vec<f64> = lambdas
            .iter()
            .zip(&oracle)
            .map(|(&lam, &n)| expansion_eval(coeffs, lam, x, l).map(|e| n - e))
            .collect::<Result<_>>()?;
        let (bins, excluded) = bin_ladder(lambdas, &r, true);
        let fit = loglog_fit(&bins);
        let scale = lambdas.iter().map(|l| pi_multiple_f64(&coeffs.weyl) * l.powf(d / 2.0)).fold(0.0, f64::max);
        let tiny = r.iter().all(|v| v.abs() <= 1e-13 * scale);
        let noise_floor = tiny || fit.is_none_or(|(_, _, r2)| r2 < 0.8);
        fits.push(LadderFit {
            l,
            slope: fit.map(|f| f.0),
            r_squared: fit.map(|f| f.2),
            bins_used: bins.len(),
            bins_excluded: excluded,
            noise_floor,
            coefficient: leading_coefficient(lambdas, &r, d / 2.0 - l as f64 - 1.0),
        });
        residuals.push(r);
    }
    Ok(ResidualLadder { dim: coeffs.dim, x: x.to_vec(), lambdas: lambdas.to_vec(), oracle, residuals, fits })
}

#[derive(Clone, Debug, Serialize)]
pub struct OffDiagonalLadder {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub oracle: Vec<f64>,
    pub free: Vec<f64>,
    /// max |e_oracle − free| per geometric bin: (bin λ, envelope)
    pub envelope: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    /// slope minus the leading-order exponent (d−1)/4
    pub relative_slope: Option<f64>,
}

/// Off-diagonal oracle against the free leading term, with the error envelope slope.
pub fn offdiagonal_ladder(b: &Potential, x: &[f64], y: &[f64], lambdas: &[f64], oracle_cfg: &OracleConfig) -> Result<OffDiagonalLadder> {
    let oracle = BlochOracle::new(b, oracle_cfg.clone())?;
    let values: Vec<f64> = oracle.ladder(lambdas, &[(x.to_vec(), y.to_vec())])?.into_iter().map(|v| v[0]).collect();
    let free: Vec<f64> = lambdas.iter().map(|&l| free_offdiagonal(l, x, y)).collect::<Result<_>>()?;
    let err: Vec<f64> = values.iter().zip(&free).map(|(a, b)| a - b).collect();
    let (bins, _) = bin_ladder(lambdas, &err, false);
    let fit = loglog_fit(&bins);
    let d = x.len() as f64;
    Ok(OffDiagonalLadder {
        x: x.to_vec(),
        y: y.to_vec(),
        lambdas: lambdas.to_vec(),
        oracle: values,
        free,
        envelope: bins.iter().map(|b| (b.lambda, b.value)).collect(),
        slope: fit.map(|f| f.0),
        relative_slope: fit.map(|f| f.0 - (d - 1.0) / 4.0),
    })
}

/// Geometric ladder of `n` points from `lo` to `hi` inclusive.
pub fn geometric_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

// ---------------------------------------------------------------------------
// Projection perturbation

fn gue(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&a + a.adjoint()) * Complex64::from(0.5)
}

fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().max()
}

/// Eigen-data of a Hermitian matrix.
struct Herm {
    vals: Vec<f64>,
    vecs: DMatrix<Complex64>,
}

impl Herm {
    fn new(m: &DMatrix<Complex64>) -> Self {
        let sym = (m + m.adjoint()) * Complex64::from(0.5);
        let e = sym.symmetric_eigen();
        Self { vals: e.eigenvalues.iter().cloned().collect(), vecs: e.eigenvectors }
    }

    fn from_parts(vals: Vec<f64>, vecs: DMatrix<Complex64>) -> Self {
        Self { vals, vecs }
    }

    fn func(&self, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(self.vals.len(), self.vals.iter().map(|&v| Complex64::from(f(v)))));
        &self.vecs * d * self.vecs.adjoint()
    }

    fn proj(&self, pred: impl Fn(f64) -> bool) -> DMatrix<Complex64> {
        self.func(|v| if pred(v) { 1.0 } else { 0.0 })
    }

    fn matrix(&self) -> DMatrix<Complex64> {
        self.func(|v| v)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionTrial {
    pub a: f64,
    pub lambda: f64,
    pub lemma1_lhs: f64,
    pub lemma1_bound: f64,
    pub lemma2_lhs: f64,
    pub lemma2_bound: f64,
}

impl ProjectionTrial {
    pub fn holds(&self) -> bool {
        self.lemma1_lhs <= self.lemma1_bound && self.lemma2_lhs <= self.lemma2_bound
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub n: usize,
    pub s: u32,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub violations: usize,
    pub lemma1_max_ratio: f64,
    pub lemma2_max_ratio: f64,
    /// min over trials of bound − lhs
    pub min_slack: f64,
    pub passed: bool,
}

/// Both projection bounds for explicit H₂ (by its eigen-data), E and f.
#[allow(clippy::too_many_arguments)]
pub fn projection_bounds(
    h2_vals: &[f64],
    h2_vecs: &DMatrix<Complex64>,
    e: &DMatrix<Complex64>,
    a: f64,
    s: u32,
    eps: f64,
    lambda: f64,
    delta: f64,
    f: &DVector<Complex64>,
) -> ProjectionTrial {
    let h2 = Herm::from_parts(h2_vals.to_vec(), h2_vecs.clone());
    let h1 = Herm::new(&(h2.matrix() + e));
    let weight = h2.func(|v| (v - a + 1.0).powi(s as i32));
    let lhs1 = op_norm(&(h1.proj(|v| v <= lambda - delta) * h2.proj(|v| v >= lambda + delta) * &weight));
    let bound1 = PI * eps / delta;

    let e2f = h2.proj(|v| v <= lambda) * f;
    let e1f = h1.proj(|v| v <= lambda) * f;
    let lhs2 = (&e2f - e1f).norm();
    let band = (h2.proj(|v| (lambda - delta..=lambda + delta).contains(&v)) * f).norm();
    let inv_weight = (h2.func(|v| (v - a + 1.0).powi(-(s as i32))) * f).norm();
    let bound2 = 2.0 * band + 2.0 * PI * eps / delta * e2f.norm() + 2.0 * PI * eps / delta * inv_weight;
    ProjectionTrial { a, lambda, lemma1_lhs: lhs1, lemma1_bound: bound1, lemma2_lhs: lhs2, lemma2_bound: bound2 }
}

fn projection_trial(n: usize, s: u32, eps: f64, delta: f64, seed: u64, trial: u64) -> ProjectionTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let a: f64 = rng.random_range(-5.0..5.0);
    // GUE spectrum mapped affinely onto [a+1, a+10]
    let g = Herm::new(&gue(n, &mut rng));
    let (lo, hi) = g.vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let vals: Vec<f64> = g.vals.iter().map(|&v| a + 1.0 + 9.0 * (v - lo) / (hi - lo)).collect();
    let h2 = Herm::from_parts(vals, g.vecs);
    let weight = h2.func(|v| (v - a + 1.0).powi(s as i32));
    let p = gue(n, &mut rng);
    let scale: f64 = rng.random_range(0.5..0.99) * eps / op_norm(&(&p * &weight));
    let e = p * Complex64::from(scale);
    let lambda = rng.random_range(a + 1.0..a + 10.0);
    let f = DVector::from_fn(n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let f = &f / Complex64::from(f.norm());
    projection_bounds(&h2.vals, &h2.vecs, &e, a, s, eps, lambda, delta, &f)
}

/// Random-trial check of both projection bounds with δ = √ε.
pub fn check_projection_perturbation(n: usize, s: u32, eps: f64, trials: usize, seed: u64) -> Result<ProjectionReport> {
    check_projection_perturbation_with_delta(n, s, eps, eps.sqrt(), trials, seed)
}

pub fn check_projection_perturbation_with_delta(n: usize, s: u32, eps: f64, delta: f64, trials: usize, seed: u64) -> Result<ProjectionReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    if delta < eps {
        return Err(Error::InvalidParameter(format!("δ = {delta} must be at least ε = {eps}")));
    }
    let results: Vec<ProjectionTrial> = (0..trials as u64).into_par_iter().map(|t| projection_trial(n, s, eps, delta, seed, t)).collect();
    let violations = results.iter().filter(|t| !t.holds()).count();
    let r1 = results.iter().map(|t| t.lemma1_lhs / t.lemma1_bound).fold(0.0, f64::max);
    let r2 = results.iter().map(|t| t.lemma2_lhs / t.lemma2_bound).fold(0.0, f64::max);
    let slack = results
        .iter()
        .map(|t| (t.lemma1_bound - t.lemma1_lhs).min(t.lemma2_bound - t.lemma2_lhs))
        .fold(f64::INFINITY, f64::min);
    Ok(ProjectionReport {
        n,
        s,
        eps,
        delta,
        trials,
        violations,
        lemma1_max_ratio: r1,
        lemma2_max_ratio: r2,
        min_slack: slack,
        passed: violations == 0,
    })
}

// ---------------------------------------------------------------------------
// Matrix families H₂(r) = r² I + S(r)

/// S(r) = Σ_p r^p S_p with Hermitian S_p.
#[derive(Clone, Debug)]
pub struct MatrixFamily {
    pub coeffs: Vec<DMatrix<Complex64>>,
}

/// Vector polynomial Σ_p r^p v_p.
#[derive(Clone, Debug)]
pub struct VectorPoly {
    pub coeffs: Vec<DVector<Complex64>>,
}

impl VectorPoly {
    pub fn constant(v: DVector<Complex64>) -> Self {
        Self { coeffs: vec![v] }
    }

    pub fn eval(&self, z: Complex64) -> DVector<Complex64> {
        let n = self.coeffs[0].len();
        let mut out = DVector::zeros(n);
        for c in self.coeffs.iter().rev() {
            out = out * z + c;
        }
        out
    }

    /// conj(g(z̄)), which is analytic in z.
    pub fn eval_reflected(&self, z: Complex64) -> DVector<Complex64> {
        self.eval(z.conj()).map(|c| c.conj())
    }
}

impl MatrixFamily {
    pub fn new(coeffs: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let n = coeffs.first().map(|c| c.nrows()).ok_or_else(|| Error::InvalidParameter("empty family".into()))?;
        for c in &coeffs {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.nrows() });
            }
            if (c - c.adjoint()).norm() > 1e-12 * (1.0 + c.norm()) {
                return Err(Error::InvalidParameter("family coefficients must be Hermitian".into()));
            }
        }
        Ok(Self { coeffs })
    }

    pub fn zero(n: usize) -> Self {
        Self { coeffs: vec![DMatrix::zeros(n, n)] }
    }

    pub fn size(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn s(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.size();
        let mut out = DMatrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            out = out * z + c;
        }
        out
    }

    pub fn s_prime(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.size();
        let mut out = DMatrix::zeros(n, n);
        for (p, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            out = out * z + c * Complex64::from(p as f64);
        }
        out
    }

    pub fn h2(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.size();
        DMatrix::identity(n, n) * (z * z) + self.s(z)
    }

    fn eigenvalues(&self, r: f64) -> Vec<f64> {
        let h = self.h2(Complex64::from(r));
        let mut v: Vec<f64> = ((&h + h.adjoint()) * Complex64::from(0.5)).symmetric_eigenvalues().iter().cloned().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Random family of the given polynomial degree with ‖S_p‖ = scales[p].
    pub fn random(n: usize, scales: &[f64], rng: &mut ChaCha8Rng) -> Self {
        let coeffs = scales
            .iter()
            .map(|&s| {
                let g = gue(n, rng);
                let nm = op_norm(&g);
                g * Complex64::from(s / nm)
            })
            .collect();
        Self { coeffs }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum LineRule {
    /// adaptive Gauss–Kronrod on each piece between crossings
    Adaptive { tol: f64 },
    /// composite trapezoid with `panels` panels per piece
    Trapezoid { panels: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContourQuadrature {
    pub line: LineRule,
    pub circle_nodes: usize,
    pub mu_nodes: usize,
    /// contour radius; default (b−a)/2 plus a quarter of that
    pub radius: Option<f64>,
    /// smallest admissible σ_min(H₂(z) − μ) on the contour
    pub required_margin: f64,
}

impl Default for ContourQuadrature {
    fn default() -> Self {
        Self { line: LineRule::Adaptive { tol: 1e-13 }, circle_nodes: 256, mu_nodes: 48, radius: None, required_margin: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContourReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_error: f64,
    pub r_interval: (f64, f64),
    pub center: f64,
    pub radius: f64,
    pub margin: f64,
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn count_in_window(fam: &MatrixFamily, r: f64, lo: f64, hi: f64) -> usize {
    fam.eigenvalues(r).iter().filter(|&&e| e >= lo && e <= hi).count()
}

fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Both sides of the contour identity
/// ∫_a^b (E(H₂(r); [λ′,λ″]) f(r), g(r)) dr = (2πi)^{−1} ∫_{λ′}^{λ″} dμ ∮ ((H₂(z) − μ)^{−1} f(z), g(z̄)) dz.
pub fn check_contour_identity(
    fam: &MatrixFamily,
    window: (f64, f64),
    f: &VectorPoly,
    g: &VectorPoly,
    q: &ContourQuadrature,
) -> Result<ContourReport> {
    let (l1, l2) = window;
    if !(l1 > 0.0 && l2 > l1) {
        return Err(Error::InvalidParameter(format!("window [{l1}, {l2}] must be a positive interval")));
    }
    let n = fam.size();
    if f.coeffs[0].len() != n || g.coeffs[0].len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.coeffs[0].len() });
    }
    // r-interval: largest eigenvalue reaches λ′ at a, smallest reaches λ″ at b
    let s_bound: f64 = fam.coeffs.iter().map(op_norm).sum::<f64>();
    let r_hi = (l2 + s_bound).sqrt() + 1.0;
    let r_lo = 1e-3;
    let top = |r: f64| *fam.eigenvalues(r).last().unwrap() - l1;
    let bot = |r: f64| fam.eigenvalues(r)[0] - l2;
    if top(r_lo) >= 0.0 {
        return Err(Error::InvalidParameter("window lies below the spectrum near r = 0".into()));
    }
    let a = bisect_root(top, r_lo, r_hi);
    let b = bisect_root(bot, r_lo, r_hi + s_bound);
    // monotone eigenvalue curves: ‖S′(r)‖ < 2r on [a, b]
    for i in 0..=32 {
        let r = a + (b - a) * i as f64 / 32.0;
        if op_norm(&fam.s_prime(Complex64::from(r))) >= 2.0 * r {
            return Err(Error::InvalidParameter(format!("‖S′({r})‖ ≥ 2r: eigenvalue curves not monotone")));
        }
    }
    let lhs = contour_lhs(fam, l1, l2, a, b, f, g, &q.line);

    let center = 0.5 * (a + b);
    let radius = q.radius.unwrap_or(0.625 * (b - a));
    if radius <= 0.5 * (b - a) {
        return Err(Error::ContourTooClose { margin: radius - 0.5 * (b - a), required: q.required_margin });
    }
    let (mx, mw) = gauss_legendre(q.mu_nodes);
    let m = q.circle_nodes;
    let mut margin = f64::INFINITY;
    let mut rhs = Complex64::new(0.0, 0.0);
    let zs: Vec<(Complex64, Complex64)> = (0..m)
        .map(|k| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
            (center + radius * e, Complex64::i() * radius * e * (2.0 * PI / m as f64))
        })
        .collect();
    let fz: Vec<DVector<Complex64>> = zs.iter().map(|(z, _)| f.eval(*z)).collect();
    let gz: Vec<DVector<Complex64>> = zs.iter().map(|(z, _)| g.eval_reflected(*z)).collect();
    let hz: Vec<DMatrix<Complex64>> = zs.iter().map(|(z, _)| fam.h2(*z)).collect();
    for (xi, wi) in mx.iter().zip(&mw) {
        let mu = 0.5 * (l1 + l2) + 0.5 * (l2 - l1) * xi;
        let mut inner = Complex64::new(0.0, 0.0);
        for k in 0..m {
            let shifted = &hz[k] - DMatrix::identity(n, n) * Complex64::from(mu);
            margin = margin.min(shifted.clone().singular_values().min());
            let sol = shifted.lu().solve(&fz[k]).ok_or(Error::ContourTooClose { margin: 0.0, required: q.required_margin })?;
            let ip: Complex64 = sol.iter().zip(gz[k].iter()).map(|(s, gg)| s * gg).sum();
            inner += ip * zs[k].1;
        }
        rhs += inner * (0.5 * (l2 - l1) * wi);
    }
    if margin < q.required_margin {
        return Err(Error::ContourTooClose { margin, required: q.required_margin });
    }
    rhs /= Complex64::new(0.0, 2.0 * PI);
    Ok(ContourReport { lhs, rhs, abs_error: (lhs - rhs).norm(), r_interval: (a, b), center, radius, margin })
}

#[allow(clippy::too_many_arguments)]
fn contour_lhs(fam: &MatrixFamily, l1: f64, l2: f64, a: f64, b: f64, f: &VectorPoly, g: &VectorPoly, rule: &LineRule) -> Complex64 {
    // split [a, b] where eigenvalues cross λ′ or λ″
    const COARSE: usize = 64;
    let grid: Vec<f64> = (0..=COARSE).map(|i| a + (b - a) * i as f64 / COARSE as f64).collect();
    let counts: Vec<usize> = grid.iter().map(|&r| count_in_window(fam, r, l1, l2)).collect();
    let mut cuts = vec![a];
    for i in 0..COARSE {
        if counts[i] != counts[i + 1] {
            split_crossings(fam, grid[i], grid[i + 1], counts[i], counts[i + 1], l1, l2, &mut cuts, 0);
        }
    }
    cuts.push(b);
    let integrand = |r: f64| {
        let h = fam.h2(Complex64::from(r));
        let herm = Herm::new(&h);
        let p = herm.proj(|v| v >= l1 && v <= l2);
        let fv = f.eval(Complex64::from(r));
        let gv = g.eval(Complex64::from(r));
        let pf = p * fv;
        vec![pf.iter().zip(gv.iter()).map(|(x, y)| x * y.conj()).sum::<Complex64>()]
    };
    let mut total = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        total += match rule {
            LineRule::Adaptive { tol } => adaptive_gk15(&integrand, lo, hi, *tol, 0)[0],
            LineRule::Trapezoid { panels } => {
                let h = (hi - lo) / *panels as f64;
                // endpoints sit on crossings; evaluate just inside the piece
                let inset = 1e-12 * (hi - lo);
                let mut s = 0.5 * (integrand(lo + inset)[0] + integrand(hi - inset)[0]);
                for i in 1..*panels {
                    s += integrand(lo + h * i as f64)[0];
                }
                s * h
            }
        };
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn split_crossings(fam: &MatrixFamily, lo: f64, hi: f64, clo: usize, chi: usize, l1: f64, l2: f64, out: &mut Vec<f64>, depth: u32) {
    if clo == chi {
        return;
    }
    let mid = 0.5 * (lo + hi);
    if depth >= 60 || mid <= lo || mid >= hi {
        out.push(mid);
        return;
    }
    let cm = count_in_window(fam, mid, l1, l2);
    split_crossings(fam, lo, mid, clo, cm, l1, l2, out, depth + 1);
    split_crossings(fam, mid, hi, cm, chi, l1, l2, out, depth + 1);
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventSeriesReport {
    pub s_norm: f64,
    pub gap: f64,
    pub ratio: f64,
    /// ‖partial sum through l − true resolvent‖ for l = 0..terms
    pub errors: Vec<f64>,
    /// geometric mean of successive error ratios
    pub rate: Option<f64>,
}

/// Partial sums of Σ_l (−1)^l S^l(z) (z² − μ)^{−(l+1)} against (H₂(z) − μ)^{−1}.
pub fn resolvent_series_check(fam: &MatrixFamily, z: Complex64, mu: f64, terms: usize) -> Result<ResolventSeriesReport> {
    let n = fam.size();
    let s = fam.s(z);
    let s_norm = op_norm(&s);
    let w = z * z - mu;
    let gap = w.norm();
    if s_norm >= gap {
        return Err(Error::DivergentSeries { s_norm, gap });
    }
    let exact = (fam.h2(z) - DMatrix::identity(n, n) * Complex64::from(mu))
        .try_inverse()
        .ok_or(Error::DivergentSeries { s_norm, gap })?;
    let mut partial = DMatrix::zeros(n, n);
    let mut term = DMatrix::identity(n, n) / w;
    let mut errors = Vec::with_capacity(terms + 1);
    for _ in 0..=terms {
        partial += &term;
        errors.push(op_norm(&(&partial - &exact)));
        term = -(&s * term) / w;
    }
    let ratios: Vec<f64> = errors.windows(2).filter(|e| e[0] > 1e-300 && e[1] > 1e-14 * errors[0]).map(|e| e[1] / e[0]).collect();
    let rate = (!ratios.is_empty()).then(|| (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp());
    Ok(ResolventSeriesReport { s_norm, gap, ratio: s_norm / gap, errors, rate })
}

// ---------------------------------------------------------------------------
// Wave-packet check

#[derive(Clone, Debug, Serialize)]
pub struct WavePacketRow {
    pub lambda: f64,
    pub oracle: f64,
    pub packet_norm2: f64,
    /// e_λ(x,x) / (C_d λ^{d/2})
    pub weyl_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WavePacketReport {
    pub rows: Vec<WavePacketRow>,
    pub max_abs_diff: f64,
    pub max_idempotence_defect: f64,
    pub max_weyl_ratio: f64,
    pub bound: f64,
    pub passed: bool,
}

/// e_λ(x,x) from the oracle against ‖P_λ v_x‖² summed over the same k-grid,
/// v_x the x-concentrated packet (e^{−i⟨k+m,x⟩})_m in the truncated basis.
pub fn wave_packet_check(b: &Potential, x: &[f64], lambdas: &[f64], m_cut: u32, nk: usize, bound: f64) -> Result<WavePacketReport> {
    let d = b.dim();
    let oracle = BlochOracle::new(b, OracleConfig::midpoint(m_cut, nk))?;
    let values = oracle.ladder(lambdas, &[(x.to_vec(), x.to_vec())])?;
    let total = nk.pow(d as u32);
    let norm = 1.0 / (total as f64 * (2.0 * PI).powi(d as i32));
    let mut packet = vec![0.0; lambdas.len()];
    let mut idem: f64 = 0.0;
    for idx in 0..total {
        let mut r = idx;
        let k: Vec<f64> = (0..d)
            .map(|_| {
                let v = -0.5 + ((r % nk) as f64 + 0.5) / nk as f64;
                r /= nk;
                v
            })
            .collect();
        let fiber = build_fiber(&k, b, m_cut)?;
        let spec = fiber_spectrum(&fiber);
        let v = DVector::from_iterator(
            fiber.modes.len(),
            fiber.modes.iter().map(|m| {
                let ph: f64 = m.iter().zip(&k).zip(x).map(|((&mi, ki), xi)| (ki + mi as f64) * xi).sum();
                Complex64::from_polar(1.0, -ph)
            }),
        );
        for (i, &l) in lambdas.iter().enumerate() {
            let p = spec.projector(l);
            idem = idem.max((&p * &p - &p).norm());
            packet[i] += (p * &v).norm_squared() * norm;
        }
    }
    let cd = pi_multiple_f64(&crate::heat_invariants::weyl_constant(d));
    let rows: Vec<WavePacketRow> = lambdas
        .iter()
        .zip(values)
        .zip(&packet)
        .map(|((&l, v), &p)| WavePacketRow { lambda: l, oracle: v[0], packet_norm2: p, weyl_ratio: v[0] / (cd * l.powf(d as f64 / 2.0)) })
        .collect();
    let max_abs_diff = rows.iter().map(|r| (r.oracle - r.packet_norm2).abs()).fold(0.0, f64::max);
    let max_weyl_ratio = rows.iter().map(|r| r.weyl_ratio).fold(0.0, f64::max);
    let passed = max_abs_diff <= 1e-10 * (1.0 + rows.iter().map(|r| r.oracle.abs()).fold(0.0, f64::max))
        && idem <= 1e-10
        && max_weyl_ratio <= bound;
    Ok(WavePacketReport { rows, max_abs_diff, max_idempotence_defect: idem, max_weyl_ratio, bound, passed })
}

/// Nondecreasing check for a sampled ladder of N(λ; x).
pub fn is_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}
