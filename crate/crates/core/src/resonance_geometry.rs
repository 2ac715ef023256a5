//! Resonance zones Λ(θ), the regions Ξ(V), resonant congruence classes Υ(ξ)
//! and shifted cylindrical coordinates inside a simplex component Ξ(V)_p.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frequency_lattice::{
    enumerate_all_subspaces, gram_schmidt, FrequencySet, FrequencyVector, QuasiLatticeSubspace,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZoneParameters {
    pub rho: f64,
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub ktilde: usize,
}

impl ZoneParameters {
    /// α_j = (1 + j/(2d))/(4d), β = α₁/2.
    pub fn with_defaults(d: usize, rho: f64, ktilde: usize) -> Self {
        let df = d as f64;
        let alpha: Vec<f64> = (1..=d).map(|j| (1.0 + j as f64 / (2.0 * df)) / (4.0 * df)).collect();
        let beta = alpha[0] / 2.0;
        Self { rho, alpha, beta, ktilde }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.alpha.len();
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if d == 0 {
            return bad("empty alpha list".into());
        }
        if !(self.rho > 1.0) {
            return bad(format!("rho must exceed 1, got {}", self.rho));
        }
        if self.alpha[0] <= 0.0 || self.alpha.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("alpha must be positive and strictly increasing: {:?}", self.alpha));
        }
        if self.alpha[d - 1] >= 1.0 / (2.0 * d as f64) {
            return bad(format!("alpha_d = {} must stay below 1/(2d)", self.alpha[d - 1]));
        }
        if !(self.beta > 0.0 && self.beta < self.alpha[0]) {
            return bad(format!("beta = {} must lie in (0, alpha_1)", self.beta));
        }
        if self.ktilde == 0 {
            return bad("ktilde must be positive".into());
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// L_j = ρ^{α_j}, 1-based.
    pub fn l(&self, j: usize) -> f64 {
        self.rho.powf(self.alpha[j - 1])
    }

    pub fn lambda_n(&self) -> f64 {
        self.rho * self.rho
    }

    /// ξ ∈ 𝒳_n: |ξ|² ∈ [0.7λ_n, 17.5λ_n].
    pub fn in_shell(&self, xi: &[f64]) -> bool {
        let n2 = norm2(xi);
        let l = self.lambda_n();
        (0.7 * l..=17.5 * l).contains(&n2)
    }
}

/// |⟨ξ, θ/|θ|⟩| ≤ L₁.
pub fn in_lambda(theta: &FrequencyVector, xi: &[f64], zp: &ZoneParameters) -> Result<bool> {
    if theta.is_zero() {
        return Err(Error::ZeroFrequency);
    }
    Ok(theta.dot_f64(xi).abs() / theta.norm_f64() <= zp.l(1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZoneLabel {
    pub subspace: QuasiLatticeSubspace,
}

#[derive(Clone, Debug)]
struct Node {
    space: QuasiLatticeSubspace,
    onb: Vec<Vec<f64>>,
    /// (parent index in the previous layer, unit normal of V ⊖ V′)
    parents: Vec<(usize, Vec<f64>)>,
    /// (child index in the next layer, unit normal of U ⊖ V)
    children: Vec<(usize, Vec<f64>)>,
}

/// Precomputed subspace lattice for a fixed Θ̃ and zone parameters.
#[derive(Clone, Debug)]
pub struct ResonanceGeometry {
    d: usize,
    zp: ZoneParameters,
    theta: FrequencySet,
    steps: Vec<(Vec<f64>, f64, FrequencyVector)>,
    layers: Vec<Vec<Node>>,
    /// contains[m][i] lists every (m′, i′) whose subspace lies inside layer m, index i.
    contains: Vec<Vec<Vec<(usize, usize)>>>,
    cap: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CongruenceClass {
    pub seed: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    #[serde(skip)]
    pub offsets: Vec<FrequencyVector>,
    #[serde(skip)]
    pub subspace: QuasiLatticeSubspace,
    pub dim: usize,
}

impl CongruenceClass {
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0_f64;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.max(dist(p, q));
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CylindricalCoords {
    pub x: Vec<f64>,
    pub r: f64,
    pub phi: Vec<f64>,
    pub sin_phi: Vec<f64>,
    /// Signs of ⟨ξ_{V⊥}, μ_j⟩ over all normal directions; identifies the component.
    pub component: Vec<i8>,
    pub apex: Vec<f64>,
    pub mu_tilde: Vec<Vec<f64>>,
    /// e_j = Σ_l a_{jl} μ̃_l
    pub a_matrix: Vec<Vec<f64>>,
    /// orthonormal basis e_1..e_{K+1} of V⊥, last axis through M_p
    pub perp_basis: Vec<Vec<f64>>,
    pub v_basis: Vec<Vec<f64>>,
}

impl CylindricalCoords {
    /// Σ_j (Σ_q a_{jq} sin Φ_q)²; equals 1 on the constraint surface.
    pub fn odin(&self) -> f64 {
        self.eta_prime().iter().map(|x| x * x).sum()
    }

    pub fn eta_prime(&self) -> Vec<f64> {
        self.a_matrix
            .iter()
            .map(|row| row.iter().zip(&self.sin_phi).map(|(a, s)| a * s).sum())
            .collect()
    }

    /// (1 − Σ_{j≤K} η′_j²)^{1/2}.
    pub fn surface_denominator(&self) -> f64 {
        let e = self.eta_prime();
        let k = e.len() - 1;
        (1.0 - e[..k].iter().map(|x| x * x).sum::<f64>()).max(0.0).sqrt()
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let d = self.apex.len();
        let mut out = self.apex.clone();
        for (xi, v) in self.x.iter().zip(&self.v_basis) {
            axpy(&mut out, *xi, v);
        }
        for (ej, c) in self.perp_basis.iter().zip(self.eta_prime()) {
            axpy(&mut out, self.r * c, ej);
        }
        debug_assert_eq!(out.len(), d);
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerProductProfile {
    pub constant: f64,
    pub linear: f64,
    pub b: Vec<f64>,
    pub sign_coherent: bool,
}

impl ResonanceGeometry {
    /// `theta_tilde` should be Θ̃ = Θ_k̃.
    pub fn new(theta_tilde: &FrequencySet, zp: &ZoneParameters) -> Result<Self> {
        zp.validate()?;
        let d = theta_tilde.dim();
        if zp.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: zp.dim() });
        }
        let all = enumerate_all_subspaces(theta_tilde);
        let mut layers: Vec<Vec<Node>> = all
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|s| Node {
                        space: s.clone(),
                        onb: s.orthonormal_basis(),
                        parents: vec![],
                        children: vec![],
                    })
                    .collect()
            })
            .collect();
        for m in 1..layers.len() {
            for i in 0..layers[m].len() {
                for p in 0..layers[m - 1].len() {
                    if layers[m - 1][p].space.is_subspace_of(&layers[m][i].space) {
                        let nu = complement_direction(&layers[m][i].onb, &layers[m - 1][p].onb);
                        layers[m][i].parents.push((p, nu.clone()));
                        layers[m - 1][p].children.push((i, nu));
                    }
                }
            }
        }
        let mut contains = Vec::new();
        for m in 0..layers.len() {
            let mut lm = Vec::new();
            for i in 0..layers[m].len() {
                let mut inside = Vec::new();
                for (m2, layer2) in layers.iter().enumerate().take(m + 1) {
                    for (i2, n2) in layer2.iter().enumerate() {
                        if n2.space.is_subspace_of(&layers[m][i].space) {
                            inside.push((m2, i2));
                        }
                    }
                }
                lm.push(inside);
            }
            contains.push(lm);
        }
        let steps = theta_tilde
            .half()
            .into_iter()
            .map(|t| {
                let n = t.norm_f64();
                let unit: Vec<f64> = t.to_f64().iter().map(|x| x / n).collect();
                (unit, n, t)
            })
            .collect();
        Ok(Self { d, zp: zp.clone(), theta: theta_tilde.clone(), steps, layers, contains, cap: 1_000_000 })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn zone_parameters(&self) -> &ZoneParameters {
        &self.zp
    }

    pub fn frequencies(&self) -> &FrequencySet {
        &self.theta
    }

    pub fn subspaces(&self, m: usize) -> Vec<&QuasiLatticeSubspace> {
        self.layers[m].iter().map(|n| &n.space).collect()
    }

    /// Ξ₁ membership for every subspace, layer by layer: ξ ∈ Ξ₁(V) iff some
    /// parent V′ has ξ ∈ Ξ₁(V′) and |⟨ξ, ν⟩| ≤ L_m for ν the unit normal of V ⊖ V′.
    pub fn xi1_membership(&self, xi: &[f64]) -> Vec<Vec<bool>> {
        let mut mem = vec![vec![true]];
        for m in 1..self.layers.len() {
            let lm = self.zp.l(m);
            let row = self.layers[m]
                .iter()
                .map(|node| {
                    node.parents
                        .iter()
                        .any(|(p, nu)| mem[m - 1][*p] && dot(xi, nu).abs() <= lm)
                })
                .collect();
            mem.push(row);
        }
        mem
    }

    /// Maximal V with ξ ∈ Ξ₁(V) and no strictly larger U having ξ ∈ Ξ₁(U).
    /// Ties (possible only when ρ is too small for the sum rule Ξ₁(U)∩Ξ₁(V) ⊂ Ξ₁(U+V))
    /// resolve to the first highest-dimensional candidate.
    pub fn classify_point(&self, xi: &[f64]) -> ZoneLabel {
        let (m, i) = self.classify_index(xi);
        ZoneLabel { subspace: self.layers[m][i].space.clone() }
    }

    fn classify_index(&self, xi: &[f64]) -> (usize, usize) {
        let mem = self.xi1_membership(xi);
        for m in (0..mem.len()).rev() {
            if let Some(i) = mem[m].iter().position(|&b| b) {
                return (m, i);
            }
        }
        (0, 0)
    }

    /// Every V with ξ ∈ Ξ(V), evaluated two ways: by the maximality rule
    /// (Ξ₁(V) minus all strictly larger Ξ₁(U)) and by the subtraction over
    /// all U ⊄ V. On a true partition both lists are the same singleton.
    pub fn region_memberships(&self, xi: &[f64]) -> (Vec<QuasiLatticeSubspace>, Vec<QuasiLatticeSubspace>) {
        let mem = self.xi1_membership(xi);
        let mut by_max = Vec::new();
        let mut by_bis = Vec::new();
        for m in 0..mem.len() {
            for i in 0..mem[m].len() {
                if !mem[m][i] {
                    continue;
                }
                let v = &self.layers[m][i].space;
                let larger_hit = (m + 1..mem.len()).any(|m2| {
                    (0..mem[m2].len()).any(|i2| mem[m2][i2] && self.contains[m2][i2].contains(&(m, i)))
                });
                if !larger_hit {
                    by_max.push(v.clone());
                }
                let outside_hit = (0..mem.len()).any(|m2| {
                    (0..mem[m2].len())
                        .any(|i2| mem[m2][i2] && !self.contains[m][i].contains(&(m2, i2)))
                });
                if !outside_hit {
                    by_bis.push(v.clone());
                }
            }
        }
        (by_max, by_bis)
    }

    /// Υ(ξ) by breadth-first closure over in-slab integer steps l·θ.
    pub fn congruence_class(&self, xi: &[f64]) -> Result<CongruenceClass> {
        let l1 = self.zp.l(1);
        let zero = FrequencyVector::zero(self.d);
        let mut seen: BTreeMap<FrequencyVector, Vec<f64>> = BTreeMap::new();
        seen.insert(zero.clone(), xi.to_vec());
        let mut queue = VecDeque::from([(zero, xi.to_vec())]);
        while let Some((off, p)) = queue.pop_front() {
            for (unit, norm, th) in &self.steps {
                let proj = dot(&p, unit);
                if proj.abs() > l1 {
                    continue;
                }
                let lo = ((-l1 - proj) / norm).ceil() as i64;
                let hi = ((l1 - proj) / norm).floor() as i64;
                for l in lo..=hi {
                    if l == 0 {
                        continue;
                    }
                    let q: Vec<f64> = p.iter().zip(th.to_f64()).map(|(a, t)| a + l as f64 * t).collect();
                    if dot(&q, unit).abs() > l1 {
                        continue;
                    }
                    let o = off.add(&th.scale_int(l));
                    if seen.contains_key(&o) {
                        continue;
                    }
                    // positions are rebuilt from exact offsets to avoid drift along long chains
                    let exact: Vec<f64> = xi.iter().zip(o.to_f64()).map(|(a, b)| a + b).collect();
                    seen.insert(o.clone(), exact.clone());
                    if seen.len() > self.cap {
                        return Err(Error::CapExceeded { cap: self.cap });
                    }
                    queue.push_back((o, exact));
                }
            }
        }
        let label = self.classify_point(xi);
        let (offsets, points): (Vec<_>, Vec<_>) = seen.into_iter().unzip();
        Ok(CongruenceClass {
            seed: xi.to_vec(),
            points,
            offsets,
            dim: label.subspace.dim(),
            subspace: label.subspace,
        })
    }

    /// ξ ∈ 𝒜: some point of Υ(ξ) lies in the shell 𝒳_n.
    pub fn in_annulus_union(&self, xi: &[f64]) -> Result<bool> {
        let n2 = norm2(xi);
        let l = self.zp.lambda_n();
        if n2 < 0.4 * l || n2 > 19.0 * l {
            return Ok(false);
        }
        if self.zp.in_shell(xi) {
            return Ok(true);
        }
        Ok(self.congruence_class(xi)?.points.iter().any(|p| self.zp.in_shell(p)))
    }

    fn locate(&self, v: &QuasiLatticeSubspace) -> Option<(usize, usize)> {
        let m = v.dim();
        self.layers.get(m)?.iter().position(|n| &n.space == v).map(|i| (m, i))
    }

    pub fn component_coordinates(&self, xi: &[f64], label: &ZoneLabel) -> Result<CylindricalCoords> {
        let (m, i) = self
            .locate(&label.subspace)
            .ok_or_else(|| Error::InvalidParameter("subspace is not generated by the frequency set".into()))?;
        let d = self.d;
        if m >= d {
            return Err(Error::InvalidParameter("no cylindrical coordinates in Ξ(ℝ^d)".into()));
        }
        let node = &self.layers[m][i];
        let k1 = d - m;
        let v_basis = node.onb.clone();
        let x: Vec<f64> = v_basis.iter().map(|v| dot(xi, v)).collect();
        let mut xi_perp = xi.to_vec();
        for (c, v) in x.iter().zip(&v_basis) {
            axpy(&mut xi_perp, -c, v);
        }
        let mut component = Vec::new();
        let mut mu_tilde = Vec::new();
        for (_, mu) in &node.children {
            let s = dot(&xi_perp, mu);
            let sg = if s > 0.0 { 1 } else if s < 0.0 { -1 } else { 0 };
            component.push(sg);
            let sgf = if sg >= 0 { 1.0 } else { -1.0 };
            mu_tilde.push(mu.iter().map(|c| sgf * c).collect::<Vec<f64>>());
        }
        let defining = extreme_rays(&mu_tilde);
        if defining.len() != k1 {
            return Err(Error::NonSimplexComponent { defining: defining.len(), expected: k1 });
        }
        let mu_tilde: Vec<Vec<f64>> = defining.into_iter().map(|j| mu_tilde[j].clone()).collect();
        // orthonormal basis of V⊥ and coordinates of μ̃ in it
        let mut span = v_basis.clone();
        span.extend((0..d).map(|j| unit(d, j)));
        let perp: Vec<Vec<f64>> = gram_schmidt(span).into_iter().skip(m).collect();
        let mu_mat = DMatrix::from_fn(k1, k1, |q, c| dot(&mu_tilde[q], &perp[c]));
        let lm1 = self.zp.l(m + 1);
        let lu = mu_mat.clone().lu();
        let coeff = lu
            .solve(&DVector::from_element(k1, lm1))
            .ok_or_else(|| Error::NonSimplexComponent { defining: k1, expected: k1 })?;
        let mut apex = vec![0.0; d];
        for (c, f) in coeff.iter().zip(&perp) {
            axpy(&mut apex, *c, f);
        }
        let eta: Vec<f64> = xi_perp.iter().zip(&apex).map(|(a, b)| a - b).collect();
        let r = norm2(&eta).sqrt();
        let sin_phi: Vec<f64> = mu_tilde
            .iter()
            .map(|mu| if r > 0.0 { (dot(&eta, mu) / r).clamp(-1.0, 1.0) } else { 0.0 })
            .collect();
        let phi = sin_phi.iter().map(|s| s.asin()).collect();
        // basis with the last axis along the apex direction, which lies inside M_p
        let an = norm2(&apex).sqrt();
        let last: Vec<f64> = apex.iter().map(|a| a / an).collect();
        let mut seeds = vec![last.clone()];
        seeds.extend(perp.iter().cloned());
        let mut e = gram_schmidt(seeds);
        e.truncate(k1);
        e.rotate_left(1);
        // A = E·M⁻¹ in V⊥ coordinates
        let e_mat = DMatrix::from_fn(k1, k1, |j, c| dot(&e[j], &perp[c]));
        let mu_inv = mu_mat
            .try_inverse()
            .ok_or_else(|| Error::NonSimplexComponent { defining: k1, expected: k1 })?;
        let a = e_mat * mu_inv;
        let a_matrix = (0..k1).map(|j| (0..k1).map(|q| a[(j, q)]).collect()).collect();
        Ok(CylindricalCoords {
            x,
            r,
            phi,
            sin_phi,
            component,
            apex,
            mu_tilde,
            a_matrix,
            perp_basis: e,
            v_basis,
        })
    }

    /// ⟨ξ, θ⟩ = constant + r·linear in the cylindrical coordinates of ξ.
    pub fn inner_product_profile(
        &self,
        xi: &[f64],
        theta: &FrequencyVector,
        label: &ZoneLabel,
    ) -> Result<InnerProductProfile> {
        let coords = self.component_coordinates(xi, label)?;
        let th = theta.to_f64();
        let th_v: Vec<f64> = coords.v_basis.iter().map(|v| dot(&th, v)).collect();
        let base: f64 = coords.x.iter().zip(&th_v).map(|(a, b)| a * b).sum();
        if label.subspace.contains(theta) {
            return Ok(InnerProductProfile { constant: base, linear: 0.0, b: vec![], sign_coherent: true });
        }
        let mut th_perp = th.clone();
        for (c, v) in th_v.iter().zip(&coords.v_basis) {
            axpy(&mut th_perp, -c, v);
        }
        let k1 = coords.mu_tilde.len();
        let mat = DMatrix::from_fn(self.d, k1, |r, q| coords.mu_tilde[q][r]);
        let b = mat
            .svd(true, true)
            .solve(&DVector::from_vec(th_perp), 1e-14)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let b: Vec<f64> = b.iter().copied().collect();
        let tol = 1e-9;
        let sign_coherent = b.iter().all(|&x| x >= -tol) || b.iter().all(|&x| x <= tol);
        let lm1 = self.zp.l(label.subspace.dim() + 1);
        let constant = base + lm1 * b.iter().sum::<f64>();
        let linear = b.iter().zip(&coords.sin_phi).map(|(a, s)| a * s).sum();
        Ok(InnerProductProfile { constant, linear, b, sign_coherent })
    }

    /// Uniform sample from the shell 𝒳_n; with probability `resonant_fraction`
    /// the point is pushed into a random slab Λ(θ) instead.
    pub fn sample_shell<R: Rng>(&self, rng: &mut R, resonant_fraction: f64) -> Vec<f64> {
        let d = self.d;
        let lam = self.zp.lambda_n();
        loop {
            let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = norm2(&dir).sqrt();
            if n == 0.0 {
                continue;
            }
            let (r0, r1) = ((0.7 * lam).sqrt(), (17.5 * lam).sqrt());
            let u: f64 = rng.random();
            let rad = (r0.powi(d as i32) + u * (r1.powi(d as i32) - r0.powi(d as i32))).powf(1.0 / d as f64);
            let mut p: Vec<f64> = dir.iter().map(|x| x / n * rad).collect();
            if !self.steps.is_empty() && rng.random::<f64>() < resonant_fraction {
                let (unit, _, _) = &self.steps[rng.random_range(0..self.steps.len())];
                let target = (rng.random::<f64>() * 2.0 - 1.0) * self.zp.l(1);
                let shift = target - dot(&p, unit);
                axpy(&mut p, shift, unit);
            }
            if self.zp.in_shell(&p) {
                return p;
            }
        }
    }
}

/// Unit vector spanning big ⊖ small (dimensions differ by one).
fn complement_direction(big: &[Vec<f64>], small: &[Vec<f64>]) -> Vec<f64> {
    let mut seeds = small.to_vec();
    seeds.extend(big.iter().cloned());
    gram_schmidt(seeds).pop().expect("one extra dimension")
}

/// Indices of vectors that are not in the closed cone spanned by the others.
/// The inputs are unit vectors lying in an open half-space.
fn extreme_rays(vs: &[Vec<f64>]) -> Vec<usize> {
    let mut keep = Vec::new();
    for k in 0..vs.len() {
        let others: Vec<&Vec<f64>> = vs.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| v).collect();
        if others.is_empty() {
            keep.push(k);
            continue;
        }
        let d = vs[k].len();
        let a = DMatrix::from_fn(d, others.len(), |r, c| others[c][r]);
        let x = nnls(&a, &DVector::from_column_slice(&vs[k]));
        let resid = (&a * &x - DVector::from_column_slice(&vs[k])).norm();
        if resid > 1e-9 {
            keep.push(k);
        }
    }
    keep
}

/// Lawson–Hanson non-negative least squares, min ‖Ax − b‖ with x ≥ 0.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12;
    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let z = sub.svd(true, true).solve(b, 1e-14).expect("svd solve");
            if z.iter().all(|&v| v > tol) {
                x.fill(0.0);
                for (c, &k) in idx.iter().enumerate() {
                    x[k] = z[c];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (c, &k) in idx.iter().enumerate() {
                if z[c] <= tol {
                    alpha = alpha.min(x[k] / (x[k] - z[c]));
                }
            }
            for (c, &k) in idx.iter().enumerate() {
                x[k] += alpha * (z[c] - x[k]);
                if x[k] <= tol {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    x
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(u, v)| *u += a * v);
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[j] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency_lattice::algebraic_sum;

    fn axes() -> FrequencySet {
        FrequencySet::from_integer_vectors(2, &[vec![1, 0], vec![0, 1]]).unwrap()
    }

    #[test]
    fn default_lengths() {
        let zp = ZoneParameters::with_defaults(2, 1e3, 2);
        zp.validate().unwrap();
        assert!((zp.l(1) - 1e3f64.powf(5.0 / 32.0)).abs() < 1e-12);
        assert!((zp.l(2) - 1e3f64.powf(6.0 / 32.0)).abs() < 1e-12);
        assert!(zp.l(1) < zp.l(2));
    }

    #[test]
    fn lambda_membership() {
        let zp = ZoneParameters::with_defaults(2, 1e3, 1);
        let e1 = FrequencyVector::from_integers(&[1, 0]);
        let e2 = FrequencyVector::from_integers(&[0, 1]);
        assert!(in_lambda(&e2, &[1e3, 0.0], &zp).unwrap());
        assert!(in_lambda(&e1, &[zp.l(1), 0.0], &zp).unwrap());
        assert!(!in_lambda(&e1, &[1e3, 0.0], &zp).unwrap());
        assert_eq!(in_lambda(&FrequencyVector::zero(2), &[0.0, 0.0], &zp), Err(Error::ZeroFrequency));
    }

    #[test]
    fn classification_examples() {
        let zp = ZoneParameters::with_defaults(2, 1e3, 1);
        let g = ResonanceGeometry::new(&axes(), &zp).unwrap();
        let e2 = QuasiLatticeSubspace::span(2, &[FrequencyVector::from_integers(&[0, 1])]);
        assert_eq!(g.classify_point(&[1e3, 0.0]).subspace, e2);
        assert_eq!(g.classify_point(&[0.0, 0.0]).subspace, QuasiLatticeSubspace::full(2));
        assert_eq!(g.classify_point(&[700.0, 900.0]).subspace, QuasiLatticeSubspace::zero(2));
    }

    #[test]
    fn line_class_matches_hand_count() {
        let zp = ZoneParameters::with_defaults(2, 1e3, 1);
        let g = ResonanceGeometry::new(&axes(), &zp).unwrap();
        let t = 0.3;
        let cls = g.congruence_class(&[1e3, t]).unwrap();
        let l1 = zp.l(1);
        let expected = (-10..=10).filter(|l| (t + *l as f64).abs() <= l1).count();
        assert_eq!(cls.len(), expected);
        assert!(cls.points.iter().all(|p| p[0] == 1e3));
        assert_eq!(cls.dim, 1);
        let non = g.congruence_class(&[700.0, 900.0]).unwrap();
        assert_eq!(non.points, vec![vec![700.0, 900.0]]);
    }

    #[test]
    fn cap_is_enforced() {
        let zp = ZoneParameters::with_defaults(2, 1e3, 1);
        let g = ResonanceGeometry::new(&axes(), &zp).unwrap().with_cap(3);
        assert_eq!(g.congruence_class(&[1e3, 0.1]).unwrap_err(), Error::CapExceeded { cap: 3 });
    }

    #[test]
    fn line_coordinates() {
        let zp = ZoneParameters::with_defaults(2, 1e3, 1);
        let g = ResonanceGeometry::new(&axes(), &zp).unwrap();
        let xi = [1e3, 1.5];
        let label = g.classify_point(&xi);
        let c = g.component_coordinates(&xi, &label).unwrap();
        assert!((c.x[0].abs() - 1.5).abs() < 1e-12);
        assert!((c.r - (1e3 - zp.l(2))).abs() < 1e-9);
        assert!((c.odin() - 1.0).abs() < 1e-12);
        let back = c.reconstruct();
        assert!(dist(&back, &xi) < 1e-10);
        let prof = g.inner_product_profile(&xi, &FrequencyVector::from_integers(&[1, 0]), &label).unwrap();
        assert!(prof.sign_coherent);
        assert!((prof.constant + c.r * prof.linear - 1e3).abs() < 1e-9);
        let along = g.inner_product_profile(&xi, &FrequencyVector::from_integers(&[0, 1]), &label).unwrap();
        assert_eq!(along.linear, 0.0);
    }

    #[test]
    fn non_resonant_coordinates_in_plane() {
        let zp = ZoneParameters::with_defaults(2, 1e3, 2);
        let g = ResonanceGeometry::new(&algebraic_sum(&axes(), 2), &zp).unwrap();
        let xi = [800.0, 300.0];
        let label = g.classify_point(&xi);
        assert_eq!(label.subspace.dim(), 0);
        let c = g.component_coordinates(&xi, &label).unwrap();
        assert_eq!(c.mu_tilde.len(), 2);
        assert!((c.odin() - 1.0).abs() < 1e-12);
        assert!(c.surface_denominator() >= 0.5);
        assert!(dist(&c.reconstruct(), &xi) < 1e-9);
        for th in algebraic_sum(&axes(), 2).nonzero() {
            let p = g.inner_product_profile(&xi, th, &label).unwrap();
            assert!(p.sign_coherent, "{th}: {:?}", p.b);
            assert!((p.constant + c.r * p.linear - th.dot_f64(&xi)).abs() < 1e-8);
        }
    }

    #[test]
    fn nnls_recovers_cone_member() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let x = nnls(&a, &DVector::from_vec(vec![0.6, 0.8]));
        assert!((x[0] - 0.6).abs() < 1e-12 && (x[1] - 0.8).abs() < 1e-12);
        let y = nnls(&a, &DVector::from_vec(vec![-1.0, 0.5]));
        assert_eq!(y[0], 0.0);
    }
}
