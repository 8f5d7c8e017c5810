//! Exact holonomy functions over the shape variables.
//!
//! Every corner parameter is `±z^a (1-z)^b`, so holonomy derivatives are
//! single signed monomials and translational parts are short sums of them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::ops::Pow;
use rug::{Complex, Float};
use thiserror::Error;

use crate::manifold::{CornerKind, CornerRef, CuspCurve, CuspData, IdealTriangulation, VertexRecord};
use crate::num::{self, DEFAULT_GUARD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HolonomyError {
    #[error("shape {tet} = {value} is within the degeneracy guard of 0 or 1")]
    Degenerate { tet: usize, value: String },
    #[error("cusp parameter denominator vanishes at this point")]
    ZeroDenominator,
    #[error("assignment has {got} shapes, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

/// `sign * prod_i z_i^a_i (1 - z_i)^b_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedMonomial {
    pub sign: i8,
    pub a: Vec<i32>,
    pub b: Vec<i32>,
}

impl SignedMonomial {
    pub fn new(sign: i8, a: Vec<i32>, b: Vec<i32>) -> Self {
        assert_eq!(a.len(), b.len());
        assert!(sign == 1 || sign == -1);
        SignedMonomial { sign, a, b }
    }

    pub fn one(n: usize) -> Self {
        SignedMonomial { sign: 1, a: vec![0; n], b: vec![0; n] }
    }

    pub fn n_vars(&self) -> usize {
        self.a.len()
    }

    /// z -> (1, 0, +), zeta1 -> (0, -1, +), zeta2 -> (-1, 1, -).
    pub fn corner(n: usize, c: CornerRef) -> Self {
        let mut m = Self::one(n);
        match c.kind {
            CornerKind::E0 => m.a[c.tet] = 1,
            CornerKind::E1 => m.b[c.tet] = -1,
            CornerKind::E2 => {
                m.a[c.tet] = -1;
                m.b[c.tet] = 1;
                m.sign = -1;
            }
        }
        m
    }

    pub fn from_corners(n: usize, corners: &[CornerRef]) -> Self {
        corners.iter().fold(Self::one(n), |acc, &c| &acc * &Self::corner(n, c))
    }

    pub fn from_record(n: usize, r: &VertexRecord) -> Self {
        &Self::from_corners(n, &r.word) * &Self::from_corners(n, &r.inverse).inv()
    }

    pub fn is_one(&self) -> bool {
        self.sign == 1 && self.is_constant()
    }

    pub fn is_constant(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&e| e == 0)
    }

    pub fn inv(&self) -> Self {
        SignedMonomial {
            sign: self.sign,
            a: self.a.iter().map(|e| -e).collect(),
            b: self.b.iter().map(|e| -e).collect(),
        }
    }

    pub fn pow(&self, k: i32) -> Self {
        SignedMonomial {
            sign: if k % 2 == 0 { 1 } else { self.sign },
            a: self.a.iter().map(|e| e * k).collect(),
            b: self.b.iter().map(|e| e * k).collect(),
        }
    }

    fn unsigned(&self) -> Self {
        SignedMonomial { sign: 1, ..self.clone() }
    }

    /// Numerator and denominator with non-negative exponents; the sign goes
    /// on the numerator.
    pub fn split(&self) -> (SignedMonomial, SignedMonomial) {
        let pos = |v: &[i32]| v.iter().map(|&e| e.max(0)).collect::<Vec<_>>();
        let neg = |v: &[i32]| v.iter().map(|&e| (-e).max(0)).collect::<Vec<_>>();
        (
            SignedMonomial { sign: self.sign, a: pos(&self.a), b: pos(&self.b) },
            SignedMonomial { sign: 1, a: neg(&self.a), b: neg(&self.b) },
        )
    }

    /// The cleared-denominator equation `N - D` for `self = 1`.
    pub fn cleared(&self) -> MonomialSum {
        let (n, d) = self.split();
        &MonomialSum::from(n) - &MonomialSum::from(d)
    }

    pub fn evaluate(&self, z: &ShapeAssignment) -> Result<Complex, HolonomyError> {
        z.check(self.n_vars())?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &ShapeAssignment) -> Complex {
        let mut acc = Complex::with_val(z.precision_bits, self.sign as i32);
        for i in 0..self.n_vars() {
            if self.a[i] != 0 {
                acc *= z.z[i].clone().pow(self.a[i]);
            }
            if self.b[i] != 0 {
                acc *= z.one_minus[i].clone().pow(self.b[i]);
            }
        }
        acc
    }

    /// Principal-sheet logarithm assembled from shape logarithms:
    /// `sum a_i log z_i + b_i log(1 - z_i)` plus `i*pi` for a negative sign.
    pub fn log_eval(&self, z: &ShapeAssignment) -> Complex {
        let p = z.precision_bits;
        let mut acc = Complex::new(p);
        for i in 0..self.n_vars() {
            if self.a[i] != 0 {
                acc += z.z[i].clone().ln() * self.a[i];
            }
            if self.b[i] != 0 {
                acc += z.one_minus[i].clone().ln() * self.b[i];
            }
        }
        if self.sign < 0 {
            acc += Complex::with_val(p, (0, num::pi(p)));
        }
        acc
    }

    /// Coefficients `c_i` with `d log m / d z_i = c_i` evaluated at `z`.
    pub fn log_gradient(&self, z: &ShapeAssignment) -> Vec<Complex> {
        (0..self.n_vars())
            .map(|i| {
                let mut g = Complex::new(z.precision_bits);
                if self.a[i] != 0 {
                    g += Complex::with_val(z.precision_bits, self.a[i]) / &z.z[i];
                }
                if self.b[i] != 0 {
                    g -= Complex::with_val(z.precision_bits, self.b[i]) / &z.one_minus[i];
                }
                g
            })
            .collect()
    }

    fn shifted(&self, i: usize, da: i32, db: i32) -> Self {
        let mut m = self.unsigned();
        m.a[i] += da;
        m.b[i] += db;
        m
    }
}

impl Mul for &SignedMonomial {
    type Output = SignedMonomial;
    fn mul(self, o: &SignedMonomial) -> SignedMonomial {
        assert_eq!(self.n_vars(), o.n_vars());
        SignedMonomial {
            sign: self.sign * o.sign,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
            b: self.b.iter().zip(&o.b).map(|(x, y)| x + y).collect(),
        }
    }
}

impl fmt::Display for SignedMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = factors(self);
        match (self.sign < 0, body.is_empty()) {
            (false, true) => write!(f, "1"),
            (true, true) => write!(f, "-1"),
            (false, false) => write!(f, "{body}"),
            (true, false) => write!(f, "-{body}"),
        }
    }
}

fn factors(m: &SignedMonomial) -> String {
    let mut parts = Vec::new();
    for i in 0..m.n_vars() {
        if m.a[i] != 0 {
            parts.push(format!("z{i}^{}", m.a[i]));
        }
        if m.b[i] != 0 {
            parts.push(format!("(1-z{i})^{}", m.b[i]));
        }
    }
    parts.join("*")
}

/// Integer combination of unsigned monomials, like terms merged.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MonomialSum {
    n: usize,
    terms: BTreeMap<(Vec<i32>, Vec<i32>), i64>,
}

impl MonomialSum {
    pub fn zero(n: usize) -> Self {
        MonomialSum { n, terms: BTreeMap::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms as (coefficient, positive-sign monomial), in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, SignedMonomial)> + '_ {
        self.terms.iter().map(|((a, b), &c)| (c, SignedMonomial { sign: 1, a: a.clone(), b: b.clone() }))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, coef: i64, m: &SignedMonomial) {
        assert_eq!(m.n_vars(), self.n);
        let c = coef * m.sign as i64;
        if c == 0 {
            return;
        }
        let key = (m.a.clone(), m.b.clone());
        let e = self.terms.entry(key.clone()).or_insert(0);
        *e += c;
        if *e == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut out = Self::zero(self.n);
        for (c, m) in self.terms() {
            out.add_term(c * k, &m);
        }
        out
    }

    pub fn mul_monomial(&self, m: &SignedMonomial) -> Self {
        let mut out = Self::zero(self.n);
        for (c, t) in self.terms() {
            out.add_term(c, &(&t * m));
        }
        out
    }

    pub fn evaluate(&self, z: &ShapeAssignment) -> Result<Complex, HolonomyError> {
        z.check(self.n)?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &ShapeAssignment) -> Complex {
        let mut acc = Complex::new(z.precision_bits);
        for (c, m) in self.terms() {
            acc += m.eval_unchecked(z) * c;
        }
        acc
    }

    /// Exact partial derivative: `d m / d z_i = m (a_i / z_i - b_i / (1 - z_i))`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (c, m) in self.terms() {
            if m.a[i] != 0 {
                out.add_term(c * m.a[i] as i64, &m.shifted(i, -1, 0));
            }
            if m.b[i] != 0 {
                out.add_term(-c * m.b[i] as i64, &m.shifted(i, 0, -1));
            }
        }
        out
    }
}

impl From<SignedMonomial> for MonomialSum {
    fn from(m: SignedMonomial) -> Self {
        let mut s = MonomialSum::zero(m.n_vars());
        s.add_term(1, &m);
        s
    }
}

impl From<&SignedMonomial> for MonomialSum {
    fn from(m: &SignedMonomial) -> Self {
        m.clone().into()
    }
}

impl Add for &MonomialSum {
    type Output = MonomialSum;
    fn add(self, o: &MonomialSum) -> MonomialSum {
        let mut out = self.clone();
        for (c, m) in o.terms() {
            out.add_term(c, &m);
        }
        out
    }
}

impl Sub for &MonomialSum {
    type Output = MonomialSum;
    fn sub(self, o: &MonomialSum) -> MonomialSum {
        self + &o.scale(-1)
    }
}

impl Neg for &MonomialSum {
    type Output = MonomialSum;
    fn neg(self) -> MonomialSum {
        self.scale(-1)
    }
}

impl Mul for &MonomialSum {
    type Output = MonomialSum;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: &MonomialSum) -> MonomialSum {
        let mut out = MonomialSum::zero(self.n);
        for (c, m) in o.terms() {
            out = &out + &self.mul_monomial(&m).scale(c);
        }
        out
    }
}

impl fmt::Display for MonomialSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, m)) in self.terms().enumerate() {
            let body = factors(&m);
            let mag = c.unsigned_abs();
            let neg = c < 0;
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            match (mag, body.is_empty()) {
                (_, true) => write!(f, "{mag}")?,
                (1, false) => write!(f, "{body}")?,
                (_, false) => write!(f, "{mag}*{body}")?,
            }
        }
        Ok(())
    }
}

/// Anything convertible to a monomial sum can be differentiated exactly.
pub fn partial_derivative<F: Into<MonomialSum>>(f: F, i: usize) -> MonomialSum {
    f.into().partial(i)
}

/// One complex shape per tetrahedron at a fixed working precision.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeAssignment {
    pub z: Vec<Complex>,
    pub precision_bits: u32,
    one_minus: Vec<Complex>,
    guard: f64,
}

impl ShapeAssignment {
    pub fn new(z: Vec<Complex>, precision_bits: u32) -> Self {
        let z: Vec<Complex> = z.into_iter().map(|v| Complex::with_val(precision_bits, v)).collect();
        let one_minus = z.iter().map(|v| Complex::with_val(precision_bits, 1 - v)).collect();
        ShapeAssignment { z, precision_bits, one_minus, guard: DEFAULT_GUARD }
    }

    pub fn from_f64(values: &[(f64, f64)], precision_bits: u32) -> Self {
        Self::new(values.iter().map(|&v| Complex::with_val(precision_bits, v)).collect(), precision_bits)
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn at_precision(&self, bits: u32) -> Self {
        Self::new(self.z.clone(), bits).with_guard(self.guard)
    }

    /// First coordinate within the guard of 0 or 1, if any.
    pub fn degenerate_at(&self) -> Option<usize> {
        (0..self.z.len()).find(|&i| {
            Float::with_val(53, self.z[i].abs_ref()).to_f64() < self.guard
                || Float::with_val(53, self.one_minus[i].abs_ref()).to_f64() < self.guard
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate_at().is_some()
    }

    fn check(&self, n: usize) -> Result<(), HolonomyError> {
        if self.z.len() != n {
            return Err(HolonomyError::Dimension { got: self.z.len(), expected: n });
        }
        match self.degenerate_at() {
            Some(tet) => Err(HolonomyError::Degenerate { tet, value: num::fmt_complex(&self.z[tet], 12) }),
            None => Ok(()),
        }
    }
}

/// Holonomy derivative `(-1)^m prod_j w_j` of a cusp curve.
pub fn mu(tri: &IdealTriangulation, curve: &CuspCurve) -> SignedMonomial {
    let n = tri.n_tet;
    let m = curve.vertices.iter().fold(SignedMonomial::one(n), |acc, v| &acc * &SignedMonomial::from_record(n, v));
    if curve.vertices.len() % 2 == 1 {
        SignedMonomial { sign: -m.sign, ..m }
    } else {
        m
    }
}

fn w0_monomial(n: usize, curve: &CuspCurve) -> SignedMonomial {
    &SignedMonomial::from_corners(n, &curve.w0_word) * &SignedMonomial::from_corners(n, &curve.w0_inverse).inv()
}

/// Translational part `sum_l (-1)^l prod_{j<=l} w_j`, with `w_0` taken from the curve's w0 word.
pub fn tau(tri: &IdealTriangulation, curve: &CuspCurve) -> MonomialSum {
    let n = tri.n_tet;
    let mut out = MonomialSum::zero(n);
    let mut prod = w0_monomial(n, curve);
    for (l, v) in curve.vertices.iter().enumerate() {
        if l > 0 {
            prod = &prod * &SignedMonomial::from_record(n, v);
        }
        out.add_term(if l % 2 == 0 { 1 } else { -1 }, &prod);
    }
    out
}

/// `tau(l) / tau(m)`, kept as an exact pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CuspParameter {
    pub numerator: MonomialSum,
    pub denominator: MonomialSum,
}

impl CuspParameter {
    pub fn evaluate(&self, z: &ShapeAssignment) -> Result<Complex, HolonomyError> {
        let num = self.numerator.evaluate(z)?;
        let den = self.denominator.evaluate(z)?;
        if num::is_negligible(&den, z.precision_bits) {
            return Err(HolonomyError::ZeroDenominator);
        }
        Ok(num / den)
    }
}

pub fn cusp_parameter(tri: &IdealTriangulation, cusp: &CuspData) -> CuspParameter {
    CuspParameter { numerator: tau(tri, &cusp.longitude), denominator: tau(tri, &cusp.meridian) }
}
