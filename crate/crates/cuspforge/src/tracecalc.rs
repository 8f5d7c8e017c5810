//! Cusp parameters from traces of peripheral elements, and the Whitehead
//! trace coordinates.

use rug::{Complex, Float};
use thiserror::Error;

use crate::holonomy::{cusp_parameter, HolonomyError, ShapeAssignment};
use crate::manifold::IdealTriangulation;
use crate::num;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("2 I_mu_mu' - I_mu I_mu' vanishes (mu and mu' commute)")]
    Guard,
    #[error("matrix {0} has determinant {1}, expected 1")]
    Determinant(&'static str, String),
    #[error("meridian and longitude matrices do not commute")]
    NotPeripheral,
    #[error("x = {0} is degenerate (0 or +-1)")]
    Degenerate(String),
    #[error("{0}")]
    Holonomy(#[from] HolonomyError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceTuple {
    pub i_mu: Complex,
    pub i_mu_prime: Complex,
    pub i_lambda: Complex,
    pub i_lambda_mu_prime: Complex,
    pub i_mu_mu_prime: Complex,
}

/// `C = (2 I_lm' - I_l I_m') / (2 I_mm' - I_m I_m')`.
pub fn cusp_parameter_from_traces(t: &TraceTuple) -> Result<Complex, TraceError> {
    let prec = t.i_mu.prec().0;
    let num_ = Complex::with_val(prec, &t.i_lambda_mu_prime * 2u32) - Complex::with_val(prec, &t.i_lambda * &t.i_mu_prime);
    let den = Complex::with_val(prec, &t.i_mu_mu_prime * 2u32) - Complex::with_val(prec, &t.i_mu * &t.i_mu_prime);
    if num::is_negligible(&den, prec) {
        return Err(TraceError::Guard);
    }
    Ok(num_ / den)
}

/// 2x2 complex matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat2(pub [[Complex; 2]; 2]);

impl Mat2 {
    pub fn new(prec: u32, e: [[(f64, f64); 2]; 2]) -> Self {
        let c = |v: (f64, f64)| Complex::with_val(prec, v);
        Mat2([[c(e[0][0]), c(e[0][1])], [c(e[1][0]), c(e[1][1])]])
    }

    pub fn from_entries(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        Mat2([[a, b], [c, d]])
    }

    fn prec(&self) -> u32 {
        self.0[0][0].prec().0
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let p = self.prec();
        let e = |r: usize, c: usize| {
            Complex::with_val(p, &self.0[r][0] * &o.0[0][c]) + Complex::with_val(p, &self.0[r][1] * &o.0[1][c])
        };
        Mat2([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }

    pub fn det(&self) -> Complex {
        let p = self.prec();
        Complex::with_val(p, &self.0[0][0] * &self.0[1][1]) - Complex::with_val(p, &self.0[0][1] * &self.0[1][0])
    }

    pub fn trace(&self) -> Complex {
        Complex::with_val(self.prec(), &self.0[0][0] + &self.0[1][1])
    }

    /// Inverse of a determinant-one matrix.
    pub fn sl_inverse(&self) -> Mat2 {
        let p = self.prec();
        let [[a, b], [c, d]] = &self.0;
        Mat2([[d.clone(), Complex::with_val(p, -b)], [Complex::with_val(p, -c), a.clone()]])
    }

    fn dist(&self, o: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                m = m.max(num::abs_f64(&Complex::with_val(self.prec(), &self.0[r][c] - &o.0[r][c])));
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRep {
    pub m_mu: Mat2,
    pub m_lambda: Mat2,
    pub m_gamma: Mat2,
}

impl MatrixRep {
    pub fn validate(&self) -> Result<(), TraceError> {
        let prec = self.m_mu.prec();
        let tol = num::pow2(-(prec as f64) / 2.0);
        for (name, m) in [("mu", &self.m_mu), ("lambda", &self.m_lambda), ("gamma", &self.m_gamma)] {
            let d = m.det();
            if num::abs_f64(&Complex::with_val(prec, &d - 1u32)) > tol {
                return Err(TraceError::Determinant(name, num::fmt_complex(&d, 12)));
            }
        }
        if self.m_mu.mul(&self.m_lambda).dist(&self.m_lambda.mul(&self.m_mu)) > tol {
            return Err(TraceError::NotPeripheral);
        }
        Ok(())
    }

    /// Conjugate every generator by `g`.
    pub fn conjugate(&self, g: &Mat2) -> MatrixRep {
        let gi = g.sl_inverse();
        let c = |m: &Mat2| g.mul(m).mul(&gi);
        MatrixRep { m_mu: c(&self.m_mu), m_lambda: c(&self.m_lambda), m_gamma: c(&self.m_gamma) }
    }
}

/// Traces of mu, mu' = gamma mu^-1 gamma^-1, lambda, lambda mu', mu mu'.
pub fn traces_from_matrices(r: &MatrixRep) -> Result<TraceTuple, TraceError> {
    r.validate()?;
    let mu_prime = r.m_gamma.mul(&r.m_mu.sl_inverse()).mul(&r.m_gamma.sl_inverse());
    Ok(TraceTuple {
        i_mu: r.m_mu.trace(),
        i_mu_prime: mu_prime.trace(),
        i_lambda: r.m_lambda.trace(),
        i_lambda_mu_prime: r.m_lambda.mul(&mu_prime).trace(),
        i_mu_mu_prime: r.m_mu.mul(&mu_prime).trace(),
    })
}

/// Traces on the Whitehead curve W0 at `t = I_ab`.
pub fn w0_traces(t: &Complex) -> TraceTuple {
    let prec = t.prec().0;
    let two = Complex::with_val(prec, 2);
    let t2 = Complex::with_val(prec, t.square_ref());
    let mixed = Complex::with_val(prec, &t2 + 2u32) / &t2 * 2u32;
    TraceTuple {
        i_mu: two.clone(),
        i_mu_prime: two,
        i_lambda: Complex::with_val(prec, -2),
        i_lambda_mu_prime: mixed.clone(),
        i_mu_mu_prime: mixed,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaImage {
    pub i_a: Complex,
    pub i_b: Complex,
    pub i_ab: Complex,
}

/// `I_a = 2`, `I_b = (x^2 - 2x - 1)/s`, `I_ab = -2x/s`, `s = sqrt(x(1 - x^2))` principal.
pub fn whitehead_theta(x: &Complex) -> Result<ThetaImage, TraceError> {
    let prec = x.prec().0;
    let tiny = num::pow2(-(prec as f64) / 2.0);
    for v in [0i32, 1, -1] {
        if num::abs_f64(&Complex::with_val(prec, x - v)) < tiny {
            return Err(TraceError::Degenerate(num::fmt_complex(x, 12)));
        }
    }
    let x2 = Complex::with_val(prec, x.square_ref());
    let s = Complex::with_val(prec, x * Complex::with_val(prec, 1 - &x2)).sqrt();
    let i_b = (x2 - Complex::with_val(prec, x * 2u32) - 1u32) / &s;
    let i_ab = Complex::with_val(prec, x * -2i32) / &s;
    Ok(ThetaImage { i_a: Complex::with_val(prec, 2), i_b, i_ab })
}

/// `I_ab^2 - I_ab I_b + 2`; vanishes on W0.
pub fn w0_equation(th: &ThetaImage) -> Complex {
    let prec = th.i_ab.prec().0;
    Complex::with_val(prec, th.i_ab.square_ref()) - Complex::with_val(prec, &th.i_ab * &th.i_b) + 2u32
}

/// `p = I_a I_b - (I_a^2 + I_b^2 - 2) I_ab + I_a I_b I_ab^2 - I_ab^3`.
pub fn whitehead_polynomial(i_a: &Complex, i_b: &Complex, i_ab: &Complex) -> Complex {
    let prec = i_a.prec().0;
    let ab = Complex::with_val(prec, i_a * i_b);
    let sq = Complex::with_val(prec, i_a.square_ref()) + Complex::with_val(prec, i_b.square_ref()) - 2u32;
    let i_ab2 = Complex::with_val(prec, i_ab.square_ref());
    Complex::with_val(prec, &ab)
        - Complex::with_val(prec, &sq * i_ab)
        + Complex::with_val(prec, &ab * &i_ab2)
        - Complex::with_val(prec, &i_ab2 * i_ab)
}

/// `C` evaluated through the W0 traces at `I_ab` of the Theta image.
pub fn c_of_theta(x: &Complex) -> Result<Complex, TraceError> {
    let th = whitehead_theta(x)?;
    cusp_parameter_from_traces(&w0_traces(&th.i_ab))
}

/// Whitehead shapes `(w, x, y, z) = (-1/x, x, -1/x, x)` on the completeness curve.
pub fn whitehead_curve_point(x: &Complex) -> ShapeAssignment {
    let prec = x.prec().0;
    let w = Complex::with_val(prec, -1) / x;
    ShapeAssignment::new(vec![w.clone(), x.clone(), w, x.clone()], prec)
}

#[derive(Clone, Debug)]
pub struct Reconciliation {
    /// Nearest integer to the common value of `C(Theta(x)) - tau_c(x)`.
    pub constant: i64,
    /// Max distance of any sample from the first sample's difference.
    pub spread: f64,
    /// Distance of the difference from the nearest integer.
    pub integrality: f64,
}

/// Measure `C(Theta(x)) - tau_c(x)` on the Whitehead fixture over samples `xs`.
pub fn reconcile(tri: &IdealTriangulation, cusp: usize, xs: &[Complex]) -> Result<Reconciliation, TraceError> {
    let par = cusp_parameter(tri, &tri.cusps[cusp]);
    let mut diffs = Vec::with_capacity(xs.len());
    for x in xs {
        let prec = x.prec().0;
        let tau = par.evaluate(&whitehead_curve_point(x))?;
        diffs.push(Complex::with_val(prec, c_of_theta(x)? - tau));
    }
    let first = diffs.first().cloned().unwrap_or_else(|| Complex::new(64));
    let spread = diffs.iter().map(|d| num::abs_f64(&Complex::with_val(d.prec().0, d - &first))).fold(0.0, f64::max);
    let k = Float::with_val(first.prec().0, first.real().round_ref());
    let near = Complex::with_val(first.prec().0, (&k, 0));
    let integrality = diffs.iter().map(|d| num::abs_f64(&Complex::with_val(d.prec().0, d - &near))).fold(0.0, f64::max);
    Ok(Reconciliation { constant: k.to_f64() as i64, spread, integrality })
}
