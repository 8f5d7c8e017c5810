//! Minimal polynomials of numerically known algebraic numbers, and the
//! resulting cusp-field classification.

use std::fmt;

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::lll;
use crate::num;

pub const DEFAULT_MAX_DEGREE: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgdepError {
    #[error("precision {0} bits is below the 128-bit minimum")]
    Precision(u32),
    #[error("max degree must be at least 1")]
    Degree,
    #[error("no integer relation of degree <= {0} found")]
    NoRelation(usize),
}

/// Primitive integer polynomial, constant term first.
#[derive(Clone, Debug, PartialEq)]
pub struct MinPoly {
    pub coefficients: Vec<Integer>,
    /// |p(x)| at the input value, evaluated at twice the input precision.
    pub residual: Float,
    pub height: Integer,
    /// True when some reduction mod p is irreducible.
    pub modular_certificate: bool,
}

impl MinPoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn from_coefficients(c: &[i64]) -> Self {
        let coefficients: Vec<Integer> = c.iter().map(|&v| Integer::from(v)).collect();
        let height = coefficients.iter().map(|v| v.clone().abs()).max().unwrap_or_default();
        MinPoly { modular_certificate: modular_irreducible(&coefficients), coefficients, residual: Float::new(64), height }
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.coefficients.iter().map(Integer::to_i64).collect()
    }

    pub fn discriminant(&self) -> Option<Integer> {
        if self.degree() != 2 {
            return None;
        }
        let (c, b, a) = (&self.coefficients[0], &self.coefficients[1], &self.coefficients[2]);
        Some(Integer::from(b * b) - Integer::from(a * c) * 4u32)
    }
}

impl fmt::Display for MinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coefficients.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = *c < 0;
            let a = c.clone().abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show = k == 0 || a != 1;
            match (show, k) {
                (true, 0) => write!(f, "{a}")?,
                (true, 1) => write!(f, "{a}x")?,
                (true, _) => write!(f, "{a}x^{k}")?,
                (false, 1) => write!(f, "x")?,
                (false, _) => write!(f, "x^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Serialize for MinPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.coefficients.len()))?;
        for c in &self.coefficients {
            match c.to_i64() {
                Some(v) => seq.serialize_element(&v)?,
                None => seq.serialize_element(&c.to_string())?,
            }
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for MinPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Coef {
            Int(i64),
            Big(String),
        }
        let raw = Vec::<Coef>::deserialize(d)?;
        let coefficients: Vec<Integer> = raw
            .into_iter()
            .map(|c| match c {
                Coef::Int(v) => Ok(Integer::from(v)),
                Coef::Big(s) => Integer::from_str_radix(&s, 10).map_err(D::Error::custom),
            })
            .collect::<Result<_, _>>()?;
        if coefficients.len() < 2 {
            return Err(D::Error::custom("minimal polynomial needs degree >= 1"));
        }
        let height = coefficients.iter().map(|v| v.clone().abs()).max().unwrap_or_default();
        Ok(MinPoly { modular_certificate: modular_irreducible(&coefficients), coefficients, residual: Float::new(64), height })
    }
}

fn eval(c: &[Integer], x: &Complex) -> Complex {
    let prec = x.prec().0;
    let mut acc = Complex::new(prec);
    for v in c.iter().rev() {
        acc *= x;
        acc += v;
    }
    acc
}

fn normalize(mut c: Vec<Integer>) -> Option<Vec<Integer>> {
    while c.last().is_some_and(|v| v.is_zero()) {
        c.pop();
    }
    if c.len() < 2 {
        return None;
    }
    let g = c.iter().fold(Integer::new(), |g, v| g.gcd(v));
    if g.is_zero() {
        return None;
    }
    for v in c.iter_mut() {
        *v /= &g;
    }
    if *c.last().unwrap() < 0 {
        for v in c.iter_mut() {
            *v = -v.clone();
        }
    }
    Some(c)
}

fn height(c: &[Integer]) -> Integer {
    c.iter().map(|v| v.clone().abs()).max().unwrap_or_default()
}

/// Lowest degree, then lowest height, then lexicographic (constant first).
fn better(a: &[Integer], b: &[Integer]) -> bool {
    (a.len(), height(a), a.to_vec()) < (b.len(), height(b), b.to_vec())
}

/// A relation must use fewer bits than the input carries: `(d + 1) log2 H <= 0.6 p`.
/// Lattice reduction always finds vectors of height about `2^(1.6 p / (d + 1))`
/// whose residual sits near the threshold; this rejects them.
fn significant(c: &[Integer], p: u32) -> bool {
    let h = height(c);
    let bits = if h.is_zero() { 0.0 } else { h.to_f64().log2() };
    c.len() as f64 * bits <= 0.6 * p as f64
}

/// Integer relation search among `1, x, ..., x^n` by lattice reduction.
pub fn algdep(x: &Complex, max_degree: usize) -> Result<MinPoly, AlgdepError> {
    let p = x.prec().0.max(x.prec().1);
    if p < 128 {
        return Err(AlgdepError::Precision(p));
    }
    if max_degree == 0 {
        return Err(AlgdepError::Degree);
    }
    let wp = 2 * p + 64;
    let xw = Complex::with_val(2 * p, x);
    let scale = Float::with_val(wp, 2).pow(Float::with_val(wp, 0.8 * p as f64).floor());
    let threshold = Float::with_val(2 * p, 2).pow(-0.6 * p as f64);
    let mut powers = vec![Complex::with_val(wp, 1)];
    for k in 1..=max_degree {
        let next = Complex::with_val(wp, &powers[k - 1] * x);
        powers.push(next);
    }
    let round = |f: &Float| Float::with_val(wp, f * &scale).round().to_integer().unwrap_or_default();
    for d in 1..=max_degree {
        let mut basis: Vec<Vec<Integer>> = (0..=d)
            .map(|k| {
                let mut row = vec![Integer::new(); d + 3];
                row[k] = Integer::from(1);
                row[d + 1] = round(powers[k].real());
                row[d + 2] = round(powers[k].imag());
                row
            })
            .collect();
        lll::reduce(&mut basis, wp);
        let mut best: Option<(Vec<Integer>, Float)> = None;
        for row in &basis {
            let Some(c) = normalize(row[..=d].to_vec()) else { continue };
            let r = num::abs(&eval(&c, &xw));
            if r >= threshold || !significant(&c, p) || !irreducible(&c) {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _)| better(&c, b)) {
                best = Some((c, r));
            }
        }
        if let Some((c, residual)) = best {
            return Ok(MinPoly { height: height(&c), modular_certificate: modular_irreducible(&c), coefficients: c, residual });
        }
    }
    Err(AlgdepError::NoRelation(max_degree))
}

/// Roots by Weierstrass iteration at 128 bits.
fn roots(c: &[Integer]) -> Vec<Complex> {
    let prec = 128;
    let n = c.len() - 1;
    let lead = Complex::with_val(prec, &c[n]);
    let bound = 1.0 + c[..n].iter().map(|v| (Rational::from((v, &c[n]))).to_f64().abs()).fold(0.0, f64::max);
    let seed = Complex::with_val(prec, (0.4, 0.9));
    let mut z: Vec<Complex> = (0..n).map(|k| Complex::with_val(prec, seed.clone().pow(k as u32)) * bound).collect();
    let cw: Vec<Integer> = c.to_vec();
    for _ in 0..800 {
        let mut change = 0f64;
        for i in 0..n {
            let mut den = lead.clone();
            for j in 0..n {
                if i != j {
                    den *= Complex::with_val(prec, &z[i] - &z[j]);
                }
            }
            if num::abs_f64(&den) == 0.0 {
                den += Complex::with_val(prec, 1e-30);
            }
            let step = eval(&cw, &z[i]) / den;
            change = change.max(num::abs_f64(&step));
            z[i] -= step;
        }
        if change < 1e-34 {
            break;
        }
    }
    z
}

fn poly_rem_is_zero(p: &[Integer], g: &[Integer]) -> bool {
    let mut r: Vec<Rational> = p.iter().map(Rational::from).collect();
    let gd = g.len() - 1;
    let lead = Rational::from(&g[gd]);
    while r.len() > gd {
        let top = r.len() - 1;
        let q = Rational::from(&r[top] / &lead);
        for (k, gk) in g.iter().enumerate() {
            let idx = top - gd + k;
            r[idx] -= Rational::from(&q * gk);
        }
        r.pop();
    }
    r.iter().all(|v| *v == 0)
}

/// True unless an explicit rational factor is found among root subsets.
fn irreducible(c: &[Integer]) -> bool {
    let n = c.len() - 1;
    if n == 1 {
        return true;
    }
    if n == 2 {
        let d = Integer::from(&c[1] * &c[1]) - Integer::from(&c[0] * &c[2]) * 4u32;
        return !d.is_perfect_square();
    }
    if modular_irreducible(c) {
        return true;
    }
    let rs = roots(c);
    let lead = Complex::with_val(128, &c[n]);
    let mut subset = Vec::new();
    !(1..=n / 2).any(|k| factor_search(c, &rs, &lead, 0, k, &mut subset))
}

fn factor_search(c: &[Integer], rs: &[Complex], lead: &Complex, start: usize, k: usize, subset: &mut Vec<usize>) -> bool {
    if subset.len() == k {
        let prec = 128;
        let mut g = vec![lead.clone()];
        for &i in subset.iter() {
            let mut next = vec![Complex::new(prec); g.len() + 1];
            for (j, gj) in g.iter().enumerate() {
                next[j + 1] += gj;
                next[j] -= Complex::with_val(prec, gj * &rs[i]);
            }
            g = next;
        }
        let mut ints = Vec::with_capacity(g.len());
        for v in &g {
            let re = v.real().to_f64();
            if v.imag().to_f64().abs() > 1e-8 || (re - re.round()).abs() > 1e-8 || re.abs() > 1e15 {
                return false;
            }
            ints.push(Integer::from(re.round() as i64));
        }
        return normalize(ints).is_some_and(|g| poly_rem_is_zero(c, &g));
    }
    for i in start..rs.len() {
        subset.push(i);
        if factor_search(c, rs, lead, i + 1, k, subset) {
            return true;
        }
        subset.pop();
    }
    false
}

const SMALL_PRIMES: [u64; 24] = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

type Fp = Vec<u64>;

fn fp_trim(mut a: Fp) -> Fp {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn fp_inv(a: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let (mut b, mut e) = (a % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn fp_rem(a: &Fp, m: &Fp, p: u64) -> Fp {
    let mut r = a.clone();
    let dm = m.len() - 1;
    let inv = fp_inv(m[dm], p);
    while r.len() > dm {
        let top = r.len() - 1;
        let q = r[top] * inv % p;
        if q != 0 {
            for (k, mk) in m.iter().enumerate() {
                let idx = top - dm + k;
                r[idx] = (r[idx] + p - q * mk % p) % p;
            }
        }
        r.pop();
    }
    fp_trim(r)
}

fn fp_mulmod(a: &Fp, b: &Fp, m: &Fp, p: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    fp_rem(&out, m, p)
}

fn fp_powmod(base: &Fp, mut e: u64, m: &Fp, p: u64) -> Fp {
    let mut r: Fp = vec![1];
    let mut b = fp_rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            r = fp_mulmod(&r, &b, m, p);
        }
        b = fp_mulmod(&b, &b, m, p);
        e >>= 1;
    }
    r
}

fn fp_gcd(a: &Fp, b: &Fp, p: u64) -> Fp {
    let (mut a, mut b) = (fp_trim(a.clone()), fp_trim(b.clone()));
    while !b.is_empty() {
        let r = fp_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// `x^(p^k) mod m`.
fn frobenius(k: usize, m: &Fp, p: u64) -> Fp {
    let mut x: Fp = vec![0, 1];
    for _ in 0..k {
        x = fp_powmod(&x, p, m, p);
    }
    x
}

fn fp_sub_x(a: &Fp, p: u64) -> Fp {
    let mut r = a.clone();
    if r.len() < 2 {
        r.resize(2, 0);
    }
    r[1] = (r[1] + p - 1) % p;
    fp_trim(r)
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q) {
            out.push(q);
            while n.is_multiple_of(q) {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's test over small primes not dividing the leading coefficient.
pub fn modular_irreducible(c: &[Integer]) -> bool {
    let n = c.len() - 1;
    if n <= 1 {
        return true;
    }
    SMALL_PRIMES.iter().any(|&p| {
        let f: Fp = c.iter().map(|v| Integer::from(v.mod_u(p as u32)).to_u64().unwrap()).collect();
        if f[n] == 0 {
            return false;
        }
        if !fp_sub_x(&frobenius(n, &f, p), p).is_empty() {
            return false;
        }
        prime_factors(n).iter().all(|&q| {
            let h = fp_sub_x(&frobenius(n / q, &f, p), p);
            fp_gcd(&f, &h, p).len() == 1
        })
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FieldClass {
    GaussianRational,
    EisensteinRational,
    OtherImaginaryQuadratic(i64),
    /// Squarefree part d > 1 of the discriminant.
    RealQuadratic(i64),
    NonQuadratic(usize),
    Rational,
    Unrecognized,
}

impl fmt::Display for FieldClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldClass::GaussianRational => write!(f, "Q(i)"),
            FieldClass::EisensteinRational => write!(f, "Q(sqrt(-3))"),
            FieldClass::OtherImaginaryQuadratic(d) | FieldClass::RealQuadratic(d) => write!(f, "Q(sqrt({d}))"),
            FieldClass::NonQuadratic(n) => write!(f, "degree {n}"),
            FieldClass::Rational => write!(f, "Q"),
            FieldClass::Unrecognized => write!(f, "unrecognized"),
        }
    }
}

impl FieldClass {
    pub fn tag(&self) -> String {
        match self {
            FieldClass::GaussianRational => "GaussianRational".into(),
            FieldClass::EisensteinRational => "EisensteinRational".into(),
            FieldClass::OtherImaginaryQuadratic(d) => format!("OtherImaginaryQuadratic({d})"),
            FieldClass::RealQuadratic(d) => format!("RealQuadratic({d})"),
            FieldClass::NonQuadratic(n) => format!("NonQuadratic({n})"),
            FieldClass::Rational => "Rational".into(),
            FieldClass::Unrecognized => "Unrecognized".into(),
        }
    }

    /// A rational cusp parameter cannot occur at a complete structure.
    pub fn flagged(&self) -> bool {
        *self == FieldClass::Rational
    }
}

/// Squarefree part, keeping the sign.
pub fn squarefree_part(n: &Integer) -> Integer {
    if n.is_zero() {
        return Integer::new();
    }
    let mut m = n.clone().abs();
    let mut out = Integer::from(1);
    let mut q = 2u32;
    while q < 1_000_000 && Integer::from(q) * q <= m {
        let mut e = 0;
        while m.is_divisible_u(q) {
            m /= q;
            e += 1;
        }
        if e % 2 == 1 {
            out *= q;
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if !m.is_perfect_square() {
        out *= m;
    }
    if *n < 0 {
        -out
    } else {
        out
    }
}

pub fn classify_field(mp: &MinPoly) -> FieldClass {
    match mp.degree() {
        1 => FieldClass::Rational,
        2 => {
            let d = squarefree_part(&mp.discriminant().expect("quadratic"));
            match d.to_i64() {
                Some(-1) => FieldClass::GaussianRational,
                Some(-3) => FieldClass::EisensteinRational,
                Some(v) if v < 0 => FieldClass::OtherImaginaryQuadratic(v),
                Some(v) => FieldClass::RealQuadratic(v),
                None => FieldClass::Unrecognized,
            }
        }
        n => FieldClass::NonQuadratic(n),
    }
}

/// Field compatible with a rigid cusp: Q(i), Q(sqrt(-3)), or the flagged Rational case.
pub fn rigid_compatible(fc: &FieldClass) -> bool {
    matches!(fc, FieldClass::GaussianRational | FieldClass::EisensteinRational | FieldClass::Rational)
}

/// algdep followed by classification; failures classify as Unrecognized.
pub fn recognize(x: &Complex, max_degree: usize) -> (Option<MinPoly>, FieldClass) {
    match algdep(x, max_degree) {
        Ok(mp) => {
            let fc = classify_field(&mp);
            (Some(mp), fc)
        }
        Err(_) => (None, FieldClass::Unrecognized),
    }
}
