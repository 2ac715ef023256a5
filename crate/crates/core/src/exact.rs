//! Exact scalars: elements of ℚ(√D), complex numbers over that field, and
//! rational multiples of half-integer powers of π.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An element `rat + irr·√radicand` of the real quadratic field ℚ(√D).
///
/// `radicand == 0` marks a plain rational; it is normalized to zero whenever
/// `irr` vanishes, so derived equality and hashing are value equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QuadSurd {
    rat: BigRational,
    irr: BigRational,
    radicand: u64,
}

impl QuadSurd {
    pub fn new(rat: BigRational, irr: BigRational, radicand: u64) -> Self {
        let mut v = Self { rat, irr, radicand };
        v.normalize();
        v
    }

    pub fn from_rational(rat: BigRational) -> Self {
        Self { rat, irr: BigRational::zero(), radicand: 0 }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// `√D` itself.
    pub fn sqrt_of(radicand: u64) -> Self {
        Self::new(BigRational::zero(), BigRational::one(), radicand)
    }

    fn normalize(&mut self) {
        if self.irr.is_zero() || self.radicand == 0 {
            if self.radicand == 0 && !self.irr.is_zero() {
                panic!("surd coefficient without a radicand");
            }
            self.irr = BigRational::zero();
            self.radicand = 0;
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.irr
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.irr.is_zero()
    }

    fn joint_radicand(&self, other: &Self) -> u64 {
        match (self.radicand, other.radicand) {
            (0, d) | (d, 0) => d,
            (a, b) if a == b => a,
            (a, b) => panic!("mixed quadratic fields √{a} and √{b}"),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self { rat: self.rat.clone(), irr: -self.irr.clone(), radicand: self.radicand }
    }

    /// Field norm `rat² − D·irr²`, nonzero for nonzero elements since D is not a square.
    pub fn norm(&self) -> BigRational {
        let d = BigRational::from_integer(BigInt::from(self.radicand));
        &self.rat * &self.rat - d * &self.irr * &self.irr
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        let c = self.conjugate();
        Some(Self::new(c.rat / &n, c.irr / n, self.radicand))
    }

    pub fn signum(&self) -> i32 {
        let a = sign_of(&self.rat);
        let b = sign_of(&self.irr);
        if b == 0 {
            return a;
        }
        if a == 0 || a == b {
            return if a == 0 { b } else { a };
        }
        // opposite signs: compare rat² with D·irr²
        let lhs = &self.rat * &self.rat;
        let rhs = BigRational::from_integer(BigInt::from(self.radicand)) * &self.irr * &self.irr;
        match lhs.cmp(&rhs) {
            Ordering::Greater => a,
            Ordering::Less => b,
            Ordering::Equal => 0,
        }
    }

    /// Exact numeric comparison.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match (self - other).signum() {
            x if x < 0 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = ratio_to_f64(&self.rat);
        if self.irr.is_zero() {
            r
        } else {
            r + ratio_to_f64(&self.irr) * (self.radicand as f64).sqrt()
        }
    }

    /// Parses `"p/q"`, `"p"`, or a decimal literal such as `"0.25"`.
    pub fn parse_rational(s: &str) -> Result<BigRational> {
        parse_rational(s)
    }
}

fn sign_of(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // very large numerator/denominator: scale down by a common power of two
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::Malformed(format!("not a rational literal: {s:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("{}{}", int_part, frac_part).parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(all);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// Exact rational for an `f64` via its shortest round-trip decimal form, so
/// `0.1` becomes `1/10` rather than the binary expansion.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::Malformed(format!("non-finite number {x}")));
    }
    parse_rational(&format!("{x:e}"))
}

impl fmt::Debug for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irr.is_zero() {
            write!(f, "{}", self.rat)
        } else if self.rat.is_zero() {
            write!(f, "{}√{}", self.irr, self.radicand)
        } else {
            write!(f, "{}+{}√{}", self.rat, self.irr, self.radicand)
        }
    }
}

impl PartialOrd for QuadSurd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Structural order (rational part, then surd part); used for deterministic
/// container ordering, not for numeric comparison.
impl Ord for QuadSurd {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rat.cmp(&other.rat).then_with(|| self.irr.cmp(&other.irr))
    }
}

impl Zero for QuadSurd {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_zero()
    }
}

impl One for QuadSurd {
    fn one() -> Self {
        Self::from_integer(1)
    }
}

impl<'a> Add<&'a QuadSurd> for &'a QuadSurd {
    type Output = QuadSurd;
    fn add(self, o: &QuadSurd) -> QuadSurd {
        let d = self.joint_radicand(o);
        QuadSurd::new(&self.rat + &o.rat, &self.irr + &o.irr, d)
    }
}

impl<'a> Sub<&'a QuadSurd> for &'a QuadSurd {
    type Output = QuadSurd;
    fn sub(self, o: &QuadSurd) -> QuadSurd {
        let d = self.joint_radicand(o);
        QuadSurd::new(&self.rat - &o.rat, &self.irr - &o.irr, d)
    }
}

impl<'a> Mul<&'a QuadSurd> for &'a QuadSurd {
    type Output = QuadSurd;
    fn mul(self, o: &QuadSurd) -> QuadSurd {
        let d = self.joint_radicand(o);
        let dd = BigRational::from_integer(BigInt::from(d));
        QuadSurd::new(
            &self.rat * &o.rat + dd * &self.irr * &o.irr,
            &self.rat * &o.irr + &self.irr * &o.rat,
            d,
        )
    }
}

impl Add for QuadSurd {
    type Output = QuadSurd;
    fn add(self, o: QuadSurd) -> QuadSurd {
        &self + &o
    }
}

impl Sub for QuadSurd {
    type Output = QuadSurd;
    fn sub(self, o: QuadSurd) -> QuadSurd {
        &self - &o
    }
}

impl Mul for QuadSurd {
    type Output = QuadSurd;
    fn mul(self, o: QuadSurd) -> QuadSurd {
        &self * &o
    }
}

impl AddAssign<&QuadSurd> for QuadSurd {
    fn add_assign(&mut self, o: &QuadSurd) {
        *self = &*self + o;
    }
}

impl Neg for QuadSurd {
    type Output = QuadSurd;
    fn neg(self) -> QuadSurd {
        QuadSurd { rat: -self.rat, irr: -self.irr, radicand: self.radicand }
    }
}

impl<'a> Neg for &'a QuadSurd {
    type Output = QuadSurd;
    fn neg(self) -> QuadSurd {
        -self.clone()
    }
}

/// Complex number with real and imaginary parts in ℚ(√D).
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct ExactComplex {
    pub re: QuadSurd,
    pub im: QuadSurd,
}

impl ExactComplex {
    pub fn new(re: QuadSurd, im: QuadSurd) -> Self {
        Self { re, im }
    }

    pub fn real(re: QuadSurd) -> Self {
        Self { re, im: QuadSurd::zero() }
    }

    pub fn i() -> Self {
        Self { re: QuadSurd::zero(), im: QuadSurd::one() }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale(&self, s: &QuadSurd) -> Self {
        Self { re: &self.re * s, im: &self.im * s }
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl Zero for ExactComplex {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl<'a> Add<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn add(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Add for ExactComplex {
    type Output = ExactComplex;
    fn add(self, o: ExactComplex) -> ExactComplex {
        &self + &o
    }
}

impl<'a> Sub<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn sub(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a ExactComplex> for &'a ExactComplex {
    type Output = ExactComplex;
    fn mul(self, o: &ExactComplex) -> ExactComplex {
        ExactComplex {
            re: &(&self.re * &o.re) - &(&self.im * &o.im),
            im: &(&self.re * &o.im) + &(&self.im * &o.re),
        }
    }
}

impl Mul for ExactComplex {
    type Output = ExactComplex;
    fn mul(self, o: ExactComplex) -> ExactComplex {
        &self * &o
    }
}

impl Neg for ExactComplex {
    type Output = ExactComplex;
    fn neg(self) -> ExactComplex {
        ExactComplex { re: -self.re, im: -self.im }
    }
}

impl AddAssign<&ExactComplex> for ExactComplex {
    fn add_assign(&mut self, o: &ExactComplex) {
        *self = &*self + o;
    }
}

/// `coeff · π^(half_power/2)`; closed under multiplication.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PiMultiple {
    pub coeff: BigRational,
    pub half_power: i32,
}

impl PiMultiple {
    pub fn rational(coeff: BigRational) -> Self {
        Self { coeff, half_power: 0 }
    }

    pub fn zero() -> Self {
        Self::rational(BigRational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn mul(&self, o: &PiMultiple) -> PiMultiple {
        PiMultiple { coeff: &self.coeff * &o.coeff, half_power: self.half_power + o.half_power }
    }

    pub fn recip(&self) -> Option<PiMultiple> {
        if self.coeff.is_zero() {
            None
        } else {
            Some(PiMultiple { coeff: self.coeff.recip(), half_power: -self.half_power })
        }
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.coeff) * std::f64::consts::PI.powf(self.half_power as f64 / 2.0)
    }
}

impl fmt::Display for PiMultiple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.half_power {
            0 => write!(f, "{}", self.coeff),
            h if h % 2 == 0 => write!(f, "({})·π^{}", self.coeff, h / 2),
            h => write!(f, "({})·π^({}/2)", self.coeff, h),
        }
    }
}

/// Γ at a positive half-integer `twice_arg / 2`, as a rational multiple of a
/// power of √π. Returns `None` at the poles (non-positive integers).
pub fn gamma_half_integer(twice_arg: i64) -> Option<PiMultiple> {
    if twice_arg % 2 == 0 {
        let n = twice_arg / 2;
        if n <= 0 {
            return None;
        }
        return Some(PiMultiple::rational(BigRational::from_integer(factorial(n - 1))));
    }
    // Γ(1/2) = √π, Γ(x+1) = xΓ(x), Γ(x−1) = Γ(x)/(x−1)
    let mut value = BigRational::one();
    let mut t = 1i64; // current twice-argument
    while t < twice_arg {
        value *= BigRational::new(BigInt::from(t), BigInt::from(2));
        t += 2;
    }
    while t > twice_arg {
        t -= 2;
        value /= BigRational::new(BigInt::from(t), BigInt::from(2));
    }
    Some(PiMultiple { coeff: value, half_power: 1 })
}

pub fn factorial(n: i64) -> BigInt {
    (1..=n.max(0)).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Reduced integer content helper used by canonical forms.
pub fn gcd_bigint(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}
