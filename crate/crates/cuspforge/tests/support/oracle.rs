//! Independent reference computations: exact univariate rational functions,
//! exact arithmetic in Q(sqrt(-d)), small dense complex solves.

use cuspforge::holonomy::SignedMonomial;
use rug::{Complex, Float, Integer, Rational};

pub type Poly = Vec<Integer>;

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    if p.is_empty() {
        p.push(Integer::new());
    }
    p
}

pub fn pconst(c: i64) -> Poly {
    vec![Integer::from(c)]
}

/// `c0 + c1 x + ...` from small coefficients.
pub fn poly(c: &[i64]) -> Poly {
    trim(c.iter().map(|&v| Integer::from(v)).collect())
}

pub fn pmul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Integer::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Integer::from(x * y);
        }
    }
    trim(out)
}

pub fn psub(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let get = |p: &Poly, i: usize| p.get(i).cloned().unwrap_or_default();
    trim((0..n).map(|i| get(a, i) - get(b, i)).collect())
}

pub fn ppow(a: &Poly, k: u32) -> Poly {
    (0..k).fold(pconst(1), |acc, _| pmul(&acc, a))
}

/// `num / den` over Z[x].
#[derive(Clone, Debug)]
pub struct RatFn {
    pub num: Poly,
    pub den: Poly,
}

impl RatFn {
    pub fn new(num: Poly, den: Poly) -> Self {
        RatFn { num, den }
    }

    pub fn mul(&self, o: &RatFn) -> RatFn {
        RatFn::new(pmul(&self.num, &o.num), pmul(&self.den, &o.den))
    }

    pub fn add(&self, o: &RatFn) -> RatFn {
        let num = psub(&pmul(&self.num, &o.den), &pmul(&pmul(&o.num, &pconst(-1)), &self.den));
        RatFn::new(num, pmul(&self.den, &o.den))
    }

    pub fn scale(&self, k: i64) -> RatFn {
        RatFn::new(pmul(&self.num, &pconst(k)), self.den.clone())
    }

    pub fn inv(&self) -> RatFn {
        RatFn::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, k: i32) -> RatFn {
        let base = if k < 0 { self.inv() } else { self.clone() };
        RatFn::new(ppow(&base.num, k.unsigned_abs()), ppow(&base.den, k.unsigned_abs()))
    }

    /// Cleared-denominator identity `n1 d2 = n2 d1`.
    pub fn same(&self, o: &RatFn) -> bool {
        psub(&pmul(&self.num, &o.den), &pmul(&o.num, &self.den)) == pconst(0)
    }
}

/// Substitute `z_i = subs[i]` into `sign * prod z_i^a_i (1 - z_i)^b_i`.
pub fn restrict(m: &SignedMonomial, subs: &[RatFn]) -> RatFn {
    let mut out = RatFn::new(pconst(m.sign as i64), pconst(1));
    for (i, s) in subs.iter().enumerate() {
        let one_minus = RatFn::new(psub(&s.den, &s.num), s.den.clone());
        out = out.mul(&s.pow(m.a[i])).mul(&one_minus.pow(m.b[i]));
    }
    out
}

/// `(w, x, y, z) = (-1/x, x, -1/x, x)`.
pub fn whitehead_curve() -> Vec<RatFn> {
    let minus_inv = RatFn::new(pconst(-1), poly(&[0, 1]));
    let x = RatFn::new(poly(&[0, 1]), pconst(1));
    vec![minus_inv.clone(), x.clone(), minus_inv, x]
}

/// Exact element `re + im sqrt(-d)` of Q(sqrt(-d)).
#[derive(Clone, Debug, PartialEq)]
pub struct Quad {
    pub re: Rational,
    pub im: Rational,
    pub d: i64,
}

impl Quad {
    pub fn new(re: Rational, im: Rational, d: i64) -> Self {
        Quad { re, im, d }
    }

    pub fn int(k: i64, d: i64) -> Self {
        Quad::new(Rational::from(k), Rational::new(), d)
    }

    pub fn add(&self, o: &Quad) -> Quad {
        Quad::new(Rational::from(&self.re + &o.re), Rational::from(&self.im + &o.im), self.d)
    }

    pub fn mul(&self, o: &Quad) -> Quad {
        let d = Rational::from(self.d);
        let re = Rational::from(&self.re * &o.re) - Rational::from(&self.im * &o.im) * &d;
        let im = Rational::from(&self.re * &o.im) + Rational::from(&self.im * &o.re);
        Quad::new(re, im, self.d)
    }

    pub fn norm(&self) -> Rational {
        Rational::from(self.re.square_ref()) + Rational::from(self.im.square_ref()) * Rational::from(self.d)
    }

    pub fn inv(&self) -> Quad {
        let n = self.norm();
        Quad::new(Rational::from(&self.re / &n), -Rational::from(&self.im / &n), self.d)
    }

    pub fn div(&self, o: &Quad) -> Quad {
        self.mul(&o.inv())
    }

    pub fn to_complex(&self, prec: u32) -> Complex {
        let s = Float::with_val(prec, self.d).sqrt();
        Complex::with_val(prec, (Float::with_val(prec, &self.re), Float::with_val(prec, &self.im) * s))
    }

    /// Primitive minimal polynomial, constant term first, positive leading term.
    pub fn minpoly(&self) -> Poly {
        // (x - re)^2 + im^2 d
        let c0 = self.norm();
        let c1 = Rational::from(&self.re * -2);
        let l = Integer::from(c0.denom().lcm_ref(c1.denom()));
        let k = |r: &Rational| r.numer() * Integer::from(&l / r.denom());
        let mut p = vec![k(&c0), k(&c1), l];
        let g = p.iter().fold(Integer::new(), |acc, c| acc.gcd(c));
        for c in p.iter_mut() {
            *c /= &g;
        }
        p
    }
}

pub fn c(prec: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(prec, (re, im))
}

pub fn dist(a: &Complex, b: &Complex) -> f64 {
    let d = Complex::with_val(a.prec().0.max(b.prec().0), a - b);
    Float::with_val(53, d.abs_ref()).to_f64()
}

/// `z^k` by repeated multiplication.
pub fn ipow(z: &Complex, k: i64) -> Complex {
    let prec = z.prec().0;
    let base = if k < 0 { Complex::with_val(prec, 1) / z } else { z.clone() };
    (0..k.unsigned_abs()).fold(Complex::with_val(prec, 1), |acc, _| acc * &base)
}

/// `eta = (1 + sqrt(-3)) / 2`.
pub fn eta(prec: u32) -> Complex {
    Quad::new(Rational::from((1, 2)), Rational::from((1, 2)), 3).to_complex(prec)
}

fn det3(m: &[[Complex; 3]; 3]) -> Complex {
    let p = m[0][0].prec().0;
    let t = |a: &Complex, b: &Complex, c: &Complex| Complex::with_val(p, a * b) * c;
    t(&m[0][0], &m[1][1], &m[2][2]) + t(&m[0][1], &m[1][2], &m[2][0]) + t(&m[0][2], &m[1][0], &m[2][1])
        - t(&m[0][2], &m[1][1], &m[2][0])
        - t(&m[0][0], &m[1][2], &m[2][1])
        - t(&m[0][1], &m[1][0], &m[2][2])
}

/// Cramer's rule for a 3x3 system; `None` when singular at the working precision.
pub fn solve3(m: &[[Complex; 3]; 3], b: &[Complex; 3]) -> Option<(Complex, [Complex; 3])> {
    let det = det3(m);
    let prec = det.prec().0;
    if Float::with_val(53, det.abs_ref()).to_f64() < 2f64.powi(-(prec as i32) / 2) {
        return None;
    }
    let mut x: [Complex; 3] = [Complex::new(prec), Complex::new(prec), Complex::new(prec)];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m.clone();
        for r in 0..3 {
            mk[r][k] = b[r].clone();
        }
        *xk = det3(&mk) / &det;
    }
    Some((det, x))
}
