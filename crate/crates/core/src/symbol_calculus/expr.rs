//! Closed-form coefficient functions of ξ as shared expression trees.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::jet::Jet;

/// Lower plateau of the smooth step: ι = 1 for z ≤ 1/4.
pub const IOTA_LOW: f64 = 0.25;
/// Upper plateau: ι = 0 for z ≥ 1.1/4.
pub const IOTA_HIGH: f64 = 0.275;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Node {
    Const { value: Complex64 },
    /// ξ_i
    Coord { index: usize },
    Sum { terms: Vec<CoefficientExpr> },
    Product { factors: Vec<CoefficientExpr> },
    Recip { arg: CoefficientExpr },
    Sqrt { arg: CoefficientExpr },
    Abs { arg: CoefficientExpr },
    Sign { arg: CoefficientExpr },
    /// n-th derivative of the smooth step ι at `arg`.
    Iota { order: usize, arg: CoefficientExpr },
    /// `inner` evaluated at ξ + by.
    Shift { inner: CoefficientExpr, by: Vec<f64> },
}

/// Immutable expression in ξ; cloning shares the tree.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientExpr(Arc<Node>);

impl fmt::Debug for CoefficientExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const { value } => write!(f, "{value}"),
            Node::Coord { index } => write!(f, "ξ{index}"),
            Node::Sum { terms } => write!(f, "Sum{terms:?}"),
            Node::Product { factors } => write!(f, "Prod{factors:?}"),
            Node::Recip { arg } => write!(f, "1/({arg:?})"),
            Node::Sqrt { arg } => write!(f, "√({arg:?})"),
            Node::Abs { arg } => write!(f, "|{arg:?}|"),
            Node::Sign { arg } => write!(f, "sgn({arg:?})"),
            Node::Iota { order, arg } => write!(f, "ι^({order})({arg:?})"),
            Node::Shift { inner, by } => write!(f, "({inner:?})@+{by:?}"),
        }
    }
}

impl CoefficientExpr {
    fn wrap(n: Node) -> Self {
        Self(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: Complex64) -> Self {
        Self::wrap(Node::Const { value: c })
    }

    pub fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Self::real(0.0)
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    pub fn coord(i: usize) -> Self {
        Self::wrap(Node::Coord { index: i })
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match &*self.0 {
            Node::Const { value } => Some(*value),
            _ => None,
        }
    }

    /// Structurally zero (not merely zero at some points).
    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(Complex64::new(0.0, 0.0))
    }

    /// True when the tree does not depend on ξ.
    pub fn is_constant(&self) -> bool {
        match &*self.0 {
            Node::Const { .. } => true,
            Node::Coord { .. } => false,
            Node::Sum { terms } => terms.iter().all(Self::is_constant),
            Node::Product { factors } => factors.iter().all(Self::is_constant),
            Node::Recip { arg } | Node::Sqrt { arg } | Node::Abs { arg } | Node::Sign { arg } => arg.is_constant(),
            Node::Iota { arg, .. } => arg.is_constant(),
            Node::Shift { inner, .. } => inner.is_constant(),
        }
    }

    pub fn sum(terms: impl IntoIterator<Item = CoefficientExpr>) -> Self {
        let mut c = Complex64::new(0.0, 0.0);
        let mut rest = Vec::new();
        for t in terms {
            match &*t.0 {
                Node::Const { value } => c += value,
                Node::Sum { terms } => {
                    for u in terms {
                        match u.as_const() {
                            Some(v) => c += v,
                            None => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(t),
            }
        }
        if c != Complex64::new(0.0, 0.0) {
            rest.insert(0, Self::constant(c));
        }
        match rest.len() {
            0 => Self::zero(),
            1 => rest.pop().unwrap(),
            _ => Self::wrap(Node::Sum { terms: rest }),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = CoefficientExpr>) -> Self {
        let mut c = Complex64::new(1.0, 0.0);
        let mut rest = Vec::new();
        for f in factors {
            match &*f.0 {
                Node::Const { value } => c *= value,
                Node::Product { factors } => {
                    for u in factors {
                        match u.as_const() {
                            Some(v) => c *= v,
                            None => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(f),
            }
        }
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        if c != Complex64::new(1.0, 0.0) {
            rest.insert(0, Self::constant(c));
        }
        match rest.len() {
            0 => Self::one(),
            1 => rest.pop().unwrap(),
            _ => Self::wrap(Node::Product { factors: rest }),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::product([Self::constant(c), self.clone()])
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::sum([self.clone(), o.clone()])
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::sum([self.clone(), o.neg()])
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::product([self.clone(), o.clone()])
    }

    pub fn recip(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(if c == Complex64::new(0.0, 0.0) { Complex64::new(f64::INFINITY, 0.0) } else { 1.0 / c }),
            None => Self::wrap(Node::Recip { arg: self.clone() }),
        }
    }

    pub fn sqrt(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.sqrt()),
            None => Self::wrap(Node::Sqrt { arg: self.clone() }),
        }
    }

    pub fn abs(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::real(c.re.abs()),
            None => Self::wrap(Node::Abs { arg: self.clone() }),
        }
    }

    pub fn sign(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::real(sign(c.re)),
            None => Self::wrap(Node::Sign { arg: self.clone() }),
        }
    }

    pub fn iota(order: usize, arg: &Self) -> Self {
        match arg.as_const() {
            Some(c) => Self::real(iota_derivative(order, c.re)),
            None => Self::wrap(Node::Iota { order, arg: arg.clone() }),
        }
    }

    /// ξ ↦ f(ξ + by).
    pub fn shift(&self, by: &[f64]) -> Self {
        if by.iter().all(|&x| x == 0.0) || self.is_constant() {
            return self.clone();
        }
        match &*self.0 {
            Node::Shift { inner, by: b0 } => {
                let total: Vec<f64> = b0.iter().zip(by).map(|(a, b)| a + b).collect();
                inner.shift(&total)
            }
            _ => Self::wrap(Node::Shift { inner: self.clone(), by: by.to_vec() }),
        }
    }

    /// Affine form ⟨v, ξ⟩ + c.
    pub fn affine(v: &[f64], c: f64) -> Self {
        let mut terms = vec![Self::real(c)];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                terms.push(Self::coord(i).scale(Complex64::new(vi, 0.0)));
            }
        }
        Self::sum(terms)
    }

    /// |ξ + v|².
    pub fn shifted_norm2(v: &[f64]) -> Self {
        Self::sum(v.iter().enumerate().map(|(i, &vi)| {
            let l = Self::sum([Self::coord(i), Self::real(vi)]);
            l.mul(&l)
        }))
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        match &*self.0 {
            Node::Const { value } => *value,
            Node::Coord { index } => Complex64::new(xi[*index], 0.0),
            Node::Sum { terms } => terms.iter().map(|t| t.eval(xi)).sum(),
            Node::Product { factors } => {
                // exact zero wins over inf/NaN in sibling factors (the 0/0 = 0 convention)
                let mut acc = Complex64::new(1.0, 0.0);
                for f in factors {
                    let v = f.eval(xi);
                    if v == Complex64::new(0.0, 0.0) {
                        return v;
                    }
                    acc *= v;
                }
                acc
            }
            Node::Recip { arg } => {
                let v = arg.eval(xi);
                if v == Complex64::new(0.0, 0.0) {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    1.0 / v
                }
            }
            Node::Sqrt { arg } => arg.eval(xi).sqrt(),
            Node::Abs { arg } => Complex64::new(arg.eval(xi).re.abs(), 0.0),
            Node::Sign { arg } => Complex64::new(sign(arg.eval(xi).re), 0.0),
            Node::Iota { order, arg } => Complex64::new(iota_derivative(*order, arg.eval(xi).re), 0.0),
            Node::Shift { inner, by } => {
                let p: Vec<f64> = xi.iter().zip(by).map(|(a, b)| a + b).collect();
                inner.eval(&p)
            }
        }
    }

    /// ∂/∂ξ_i, symbolic. |·| and sgn are differentiated away from their kinks.
    pub fn diff(&self, i: usize) -> Self {
        match &*self.0 {
            Node::Const { .. } | Node::Sign { .. } => Self::zero(),
            Node::Coord { index } => Self::real(if *index == i { 1.0 } else { 0.0 }),
            Node::Sum { terms } => Self::sum(terms.iter().map(|t| t.diff(i))),
            Node::Product { factors } => Self::sum((0..factors.len()).map(|k| {
                let dk = factors[k].diff(i);
                if dk.is_zero() {
                    return Self::zero();
                }
                Self::product(
                    factors
                        .iter()
                        .enumerate()
                        .map(|(j, f)| if j == k { dk.clone() } else { f.clone() }),
                )
            })),
            Node::Recip { arg } => {
                let da = arg.diff(i);
                Self::product([da.neg(), self.clone(), self.clone()])
            }
            Node::Sqrt { arg } => {
                let da = arg.diff(i);
                Self::product([da, Self::real(0.5), self.recip()])
            }
            Node::Abs { arg } => arg.sign().mul(&arg.diff(i)),
            Node::Iota { order, arg } => {
                let da = arg.diff(i);
                Self::iota(order + 1, arg).mul(&da)
            }
            Node::Shift { inner, by } => inner.diff(i).shift(by),
        }
    }

    /// D^s for a multi-index s.
    pub fn diff_multi(&self, s: &[usize]) -> Self {
        let mut e = self.clone();
        for (i, &k) in s.iter().enumerate() {
            for _ in 0..k {
                e = e.diff(i);
            }
        }
        e
    }

    /// Number of distinct nodes reachable (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        self.count_into(&mut seen);
        seen.len()
    }

    fn count_into(&self, seen: &mut std::collections::HashSet<*const Node>) {
        if !seen.insert(Arc::as_ptr(&self.0)) {
            return;
        }
        match &*self.0 {
            Node::Const { .. } | Node::Coord { .. } => {}
            Node::Sum { terms: v } | Node::Product { factors: v } => v.iter().for_each(|c| c.count_into(seen)),
            Node::Recip { arg } | Node::Sqrt { arg } | Node::Abs { arg } | Node::Sign { arg } | Node::Iota { arg, .. } => {
                arg.count_into(seen)
            }
            Node::Shift { inner, .. } => inner.count_into(seen),
        }
    }

    /// FNV-1a hash of the JSON form; stable across runs.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("serializable");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The smooth step ι and its derivatives. ι(z) = 1 for z ≤ 1/4, 0 for
/// z ≥ 1.1/4, and σ((1.1/4 − z)/(0.1/4)) in between, with
/// σ(u) = f(u)/(f(u) + f(1 − u)), f(u) = exp(−1/u).
pub fn iota_derivative(order: usize, z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z <= IOTA_LOW {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if z >= IOTA_HIGH {
        return 0.0;
    }
    let u = (IOTA_HIGH - z) / (IOTA_HIGH - IOTA_LOW);
    let s = sigma_jet(u, order);
    // dz = −0.025 du
    s.derivative(order) * (-1.0 / (IOTA_HIGH - IOTA_LOW)).powi(order as i32)
}

fn bump_jet(u0: f64, n: usize) -> Jet {
    if (-1.0 / u0).exp() == 0.0 {
        return Jet::constant(0.0, n);
    }
    Jet::variable(u0, n).recip().scale(-1.0).exp()
}

fn sigma_jet(u: f64, n: usize) -> Jet {
    let f = bump_jet(u, n);
    // f(1 − u) as a series in t where u = u0 + t: substitute t → −t
    let mut g = bump_jet(1.0 - u, n);
    for (k, c) in g.0.iter_mut().enumerate() {
        if k % 2 == 1 {
            *c = -*c;
        }
    }
    f.div(&f.add(&g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iota_plateaus_and_midpoint() {
        assert_eq!(iota_derivative(0, 0.0), 1.0);
        assert_eq!(iota_derivative(0, 0.25), 1.0);
        assert_eq!(iota_derivative(0, 0.275), 0.0);
        assert_eq!(iota_derivative(0, 3.0), 0.0);
        assert!((iota_derivative(0, 0.2625) - 0.5).abs() < 1e-15);
        assert_eq!(iota_derivative(2, 0.1), 0.0);
    }

    #[test]
    fn iota_derivatives_match_finite_differences() {
        for &z in &[0.2551, 0.26, 0.2625, 0.27, 0.2745] {
            for n in 0..3 {
                let h = 1e-7;
                let fd = (iota_derivative(n, z + h) - iota_derivative(n, z - h)) / (2.0 * h);
                let an = iota_derivative(n + 1, z);
                let scale = an.abs().max(1.0);
                assert!((fd - an).abs() / scale < 1e-5, "n={n} z={z}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn symbolic_derivative_matches_finite_difference() {
        let xi = CoefficientExpr::coord(0);
        let eta = CoefficientExpr::coord(1);
        let e = CoefficientExpr::product([
            CoefficientExpr::iota(0, &xi.scale(Complex64::new(0.01, 0.0)).abs()),
            CoefficientExpr::affine(&[1.0, 2.0], 0.5).recip(),
            CoefficientExpr::shifted_norm2(&[0.3, -0.1]).sqrt(),
            eta.add(&CoefficientExpr::real(2.0)),
        ])
        .shift(&[0.1, 0.2]);
        let p = [26.0, 1.3];
        for i in 0..2 {
            let h = 1e-5;
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let fd = (e.eval(&a) - e.eval(&b)) / (2.0 * h);
            let an = e.diff(i).eval(&p);
            assert!((fd - an).norm() / an.norm().max(1e-12) < 1e-6, "i={i}: {fd} vs {an}");
        }
    }

    #[test]
    fn zero_factor_beats_infinity() {
        let bad = CoefficientExpr::coord(0).recip();
        let z = CoefficientExpr::iota(0, &CoefficientExpr::real(0.0)).sub(&CoefficientExpr::one());
        assert!(z.is_zero());
        let e = CoefficientExpr::product([CoefficientExpr::coord(1), bad]);
        assert_eq!(e.eval(&[0.0, 0.0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn json_round_trip() {
        let e = CoefficientExpr::iota(1, &CoefficientExpr::coord(0)).shift(&[0.5]);
        let s = serde_json::to_string(&e).unwrap();
        let back: CoefficientExpr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.digest(), e.digest());
    }
}
