//! Cut-offs e_θ, φ_θ, χ̃_θ and the order-by-order gauge transform
//! H₁ = e^{−iΨ} H e^{iΨ} that moves −Δ + b to −Δ + W with W supported near
//! the resonance zones.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frequency_lattice::{algebraic_sum, check_condition_a, FrequencySet, FrequencyVector};
use crate::resonance_geometry::{in_lambda, ResonanceGeometry};
use crate::symbol_calculus::{iota_derivative, CoefficientExpr, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffFamily {
    pub rho: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffKind {
    E,
    Phi,
    Chi,
}

impl CutoffFamily {
    pub fn new(rho: f64, beta: f64) -> Self {
        Self { rho, beta }
    }

    /// e_θ(ξ) = ι(|(|ξ + θ/2| − 3ρ)/(10ρ)|)
    pub fn e_expr(&self, theta: &[f64]) -> CoefficientExpr {
        let half: Vec<f64> = theta.iter().map(|t| t / 2.0).collect();
        let r = CoefficientExpr::shifted_norm2(&half).sqrt();
        let arg = r
            .sub(&CoefficientExpr::real(3.0 * self.rho))
            .scale(Complex64::new(1.0 / (10.0 * self.rho), 0.0))
            .abs();
        CoefficientExpr::iota(0, &arg)
    }

    /// φ_θ(ξ) = 1 − ι(|⟨θ, ξ + θ/2⟩|/(ρ^β|θ|))
    pub fn phi_expr(&self, theta: &[f64]) -> CoefficientExpr {
        let n = norm(theta);
        let s = 1.0 / (self.rho.powf(self.beta) * n);
        let v: Vec<f64> = theta.iter().map(|t| t * s).collect();
        let arg = CoefficientExpr::affine(&v, 0.5 * n * n * s).abs();
        CoefficientExpr::one().sub(&CoefficientExpr::iota(0, &arg))
    }

    /// e_θ φ_θ
    pub fn ephi_expr(&self, theta: &[f64]) -> CoefficientExpr {
        CoefficientExpr::product([self.e_expr(theta), self.phi_expr(theta)])
    }

    /// χ̃_θ = e_θ φ_θ / (2⟨θ, ξ + θ/2⟩), χ̃₀ = 0.
    pub fn chi_expr(&self, theta: &[f64]) -> CoefficientExpr {
        if theta.iter().all(|&t| t == 0.0) {
            return CoefficientExpr::zero();
        }
        let n2: f64 = theta.iter().map(|t| t * t).sum();
        let denom = CoefficientExpr::affine(theta, 0.5 * n2);
        CoefficientExpr::product([self.ephi_expr(theta), CoefficientExpr::real(0.5), denom.recip()])
    }

    /// Direct scalar evaluation, independent of the expression trees.
    pub fn eval(&self, kind: CutoffKind, theta: &[f64], xi: &[f64]) -> Result<f64> {
        let zero = theta.iter().all(|&t| t == 0.0);
        let shifted: Vec<f64> = xi.iter().zip(theta).map(|(x, t)| x + t / 2.0).collect();
        let e = iota_derivative(0, ((norm(&shifted) - 3.0 * self.rho) / (10.0 * self.rho)).abs());
        if kind == CutoffKind::E {
            return Ok(e);
        }
        if zero {
            return Err(Error::ZeroFrequency);
        }
        let ip: f64 = theta.iter().zip(&shifted).map(|(a, b)| a * b).sum();
        let phi = 1.0 - iota_derivative(0, ip.abs() / (self.rho.powf(self.beta) * norm(theta)));
        match kind {
            CutoffKind::Phi => Ok(phi),
            _ => {
                let num = e * phi;
                Ok(if num == 0.0 { 0.0 } else { num / (2.0 * ip) })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub j: usize,
    pub measured: f64,
    /// ρ^{β(1−γ−2j)}(⦀b⦀)^j with unit constant
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct GaugeOutput {
    pub ktilde: usize,
    pub cutoffs: CutoffFamily,
    pub psi: Vec<Symbol>,
    pub psi_prime: Vec<Symbol>,
    /// Y_j: all order-j terms of the conjugated operator other than [H₀, X_j]
    pub y: Vec<Symbol>,
    pub w: Symbol,
    /// Y_{k̃+1}, the leading term left out of w
    pub remainder: Symbol,
    pub norms: Vec<NormRow>,
    pub convention: &'static str,
}

/// ψ̂₁(θ, ξ) = i b̂(θ) χ̃_θ(ξ).
pub fn first_order_psi(b: &Symbol, cf: &CutoffFamily) -> Result<Symbol> {
    if !b.is_multiplication() {
        return Err(Error::NonMultiplicationInput("coefficients depend on ξ".into()));
    }
    Ok(b.map(|th, c| c.mul(&cf.chi_expr(&th.to_f64())).scale(Complex64::new(0.0, 1.0))))
}

/// Ordered compositions of n into positive parts.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Order-j part of e^{−X}(H₀ + B)e^{X} other than [H₀, X_j]; `x[m-1]` = X_m, `t[m-1]` = [H₀, X_m].
fn order_term(j: usize, b: &Symbol, x: &[Symbol], t: &[Symbol]) -> Symbol {
    let d = b.dim();
    let mut y = Symbol::zero(d);
    for m in 1..j {
        for parts in compositions(j - m) {
            let mut term = t[m - 1].clone();
            for &c in &parts {
                term = term.commutator(&x[c - 1]);
            }
            y = y.add(&term.scale(real(1.0 / factorial(parts.len() + 1))));
        }
    }
    if j == 1 {
        y = y.add(b);
    } else {
        for parts in compositions(j - 1) {
            let mut term = b.clone();
            for &c in &parts {
                term = term.commutator(&x[c - 1]);
            }
            y = y.add(&term.scale(real(1.0 / factorial(parts.len()))));
        }
    }
    y
}

/// Builds ψ_1..ψ_k̃ and w. `theta` is Θ (the support of b with 0), used for
/// the Condition A check up to order k̃. `grid` feeds the sampled norms.
pub fn run_gauge(
    b: &Symbol,
    ktilde: usize,
    cf: &CutoffFamily,
    theta: &FrequencySet,
    grid: &[Vec<f64>],
) -> Result<GaugeOutput> {
    if !b.is_multiplication() {
        return Err(Error::NonMultiplicationInput("coefficients depend on ξ".into()));
    }
    if ktilde == 0 {
        return Err(Error::InvalidParameter("ktilde must be positive".into()));
    }
    let ca = check_condition_a(theta, ktilde)?;
    if !ca.passed {
        return Err(Error::ConditionAViolation { witness: format!("{:?}", ca.witness.unwrap_or_default()) });
    }
    let d = b.dim();
    let mut x: Vec<Symbol> = Vec::new();
    let mut t: Vec<Symbol> = Vec::new();
    let mut ys: Vec<Symbol> = Vec::new();
    let mut psi = Vec::new();
    let mut w = Symbol::zero(d);
    let mut remainder = Symbol::zero(d);
    for j in 1..=ktilde + 1 {
        let y = order_term(j, b, &x, &t);
        if j == ktilde + 1 {
            remainder = y;
            break;
        }
        let xj = y.map(|th, c| c.mul(&cf.chi_expr(&th.to_f64())).neg());
        let tj = y.map(|th, c| {
            if th.is_zero() {
                CoefficientExpr::zero()
            } else {
                c.mul(&cf.ephi_expr(&th.to_f64())).neg()
            }
        });
        let wj = y.map(|th, c| {
            if th.is_zero() {
                c.clone()
            } else {
                c.mul(&CoefficientExpr::one().sub(&cf.ephi_expr(&th.to_f64())))
            }
        });
        w = w.add(&wj);
        psi.push(xj.scale(Complex64::new(0.0, -1.0)));
        x.push(xj);
        t.push(tj);
        ys.push(y);
    }
    let psi_prime = (1..=ktilde)
        .map(|m| {
            let mut s = Symbol::zero(d);
            for parts in compositions(m) {
                let mut prod = Symbol::identity(d);
                for &c in &parts {
                    prod = prod.compose(&x[c - 1]);
                }
                s = s.add(&prod.scale(real(1.0 / factorial(parts.len()))));
            }
            s
        })
        .collect();
    let bnorm = b.class_norm(0.0, 0.0, 0, cf.beta, grid);
    let norms = psi
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let j = i + 1;
            NormRow {
                j,
                measured: p.class_norm(0.0, 0.0, 0, cf.beta, grid),
                bound: cf.rho.powf(cf.beta * (1.0 - 2.0 * j as f64)) * bnorm.powi(j as i32),
            }
        })
        .collect();
    Ok(GaugeOutput {
        ktilde,
        cutoffs: *cf,
        psi,
        psi_prime,
        y: ys,
        w,
        remainder,
        norms,
        convention: "H1 = exp(-i Psi) H exp(i Psi), psi_1 = i b chi",
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct B3Violation {
    pub theta: Vec<f64>,
    pub xi: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct B3Report {
    pub samples: usize,
    pub samples_in_a: usize,
    pub assertions: usize,
    pub violations: Vec<B3Violation>,
    pub support_within_theta_k: bool,
    pub passed: bool,
}

/// ŵ(θ, ξ) must vanish for ξ ∈ 𝒜 whenever ξ ∉ Λ(θ) or ξ + θ ∉ Λ(θ), and off Θ_k̃.
pub fn verify_b3(out: &GaugeOutput, samples: &[Vec<f64>], theta: &FrequencySet, geom: &ResonanceGeometry) -> Result<B3Report> {
    let zp = geom.zone_parameters();
    let theta_k = algebraic_sum(theta, out.ktilde);
    let support_ok = out.w.support().all(|th| theta_k.contains(th));
    let mut in_a = 0;
    let mut assertions = 0;
    let mut violations = Vec::new();
    for xi in samples {
        if !geom.in_annulus_union(xi)? {
            continue;
        }
        in_a += 1;
        for (th, c) in out.w.terms() {
            if th.is_zero() {
                continue;
            }
            let thf = th.to_f64();
            let moved: Vec<f64> = xi.iter().zip(&thf).map(|(a, b)| a + b).collect();
            if in_lambda(th, xi, zp)? && in_lambda(th, &moved, zp)? {
                continue;
            }
            assertions += 1;
            let v = c.eval(xi).norm();
            if !(v <= 1e-12) {
                violations.push(B3Violation { theta: thf, xi: xi.clone(), value: v });
            }
        }
    }
    let passed = violations.is_empty() && support_ok;
    Ok(B3Report { samples: samples.len(), samples_in_a: in_a, assertions, violations, support_within_theta_k: support_ok, passed })
}

/// Finite-section surrogate for ‖H₁ − H₂‖: on exponentials e_{ξ+o}, o ∈ Θ_depth,
/// conjugate H₀ + B by exp(X) with matrix exponentials and compare with H₀ + W
/// on the block that sits k̃ + 1 steps away from the truncation edge.
pub fn finite_section_defect(
    out: &GaugeOutput,
    b: &Symbol,
    theta: &FrequencySet,
    xi: &[f64],
    depth: usize,
) -> f64 {
    let offsets: Vec<FrequencyVector> = algebraic_sum(theta, depth).elements().iter().cloned().collect();
    let inner_set = algebraic_sum(theta, depth.saturating_sub(out.ktilde + 1).max(1));
    let x_sym = out
        .psi
        .iter()
        .fold(Symbol::zero(b.dim()), |acc, p| acc.add(&p.scale(Complex64::new(0.0, 1.0))));
    let h = Symbol::laplacian(b.dim()).add(b);
    let hm = h.matrix_on(xi, &offsets);
    let xm = x_sym.matrix_on(xi, &offsets);
    let u = xm.clone().exp();
    let uinv = (-xm).exp();
    let h1 = &uinv * hm * &u;
    let h2 = Symbol::laplacian(b.dim()).add(&out.w).matrix_on(xi, &offsets);
    let diff: DMatrix<Complex64> = h1 - h2;
    let idx: Vec<usize> = offsets
        .iter()
        .enumerate()
        .filter(|(_, o)| inner_set.contains(o))
        .map(|(i, _)| i)
        .collect();
    let mut worst = 0.0_f64;
    for &i in &idx {
        for &j in &idx {
            worst = worst.max(diff[(i, j)].norm());
        }
    }
    worst
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
