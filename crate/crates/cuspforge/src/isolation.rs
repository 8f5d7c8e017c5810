//! Non-isolation certificates: is the cusp parameter non-constant on the
//! completeness curve through the complete structure?

use rug::{Complex, Float};
use serde_json::{json, Value};
use thiserror::Error;

use crate::holonomy::{cusp_parameter, HolonomyError, MonomialSum, ShapeAssignment};
use crate::linalg::{self, CMatrix};
use crate::manifold::IdealTriangulation;
use crate::num;
use crate::solver::{completeness_system, trace_completeness_curve, CurvePoint, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsolationError {
    #[error("kernel dimension is ambiguous near the rank threshold (singular value ratio {ratio:e})")]
    AmbiguousKernel { ratio: f64 },
    #[error("Jacobian kernel has dimension {dimension}, expected 1")]
    KernelDimension { dimension: usize },
    #[error("every pinned Jacobian is singular")]
    SingularPinning,
    #[error("unknown cusp index {0}")]
    Cusp(usize),
    #[error("{0}")]
    Holonomy(#[from] HolonomyError),
}

#[derive(Clone, Debug)]
pub struct CompletenessJacobian {
    pub matrix: CMatrix,
    pub rank: usize,
    pub kernel: Vec<Vec<Complex>>,
}

pub fn kernel_threshold(prec: u32) -> f64 {
    num::pow2(-(prec as f64) / 4.0)
}

/// Jacobian of the cleared edge equations and cleared `mu(meridian) - 1`.
pub fn completeness_jacobian(
    tri: &IdealTriangulation,
    cusp: usize,
    z: &ShapeAssignment,
) -> Result<CompletenessJacobian, IsolationError> {
    if cusp >= tri.cusps.len() {
        return Err(IsolationError::Cusp(cusp));
    }
    let prec = z.precision_bits;
    let matrix = completeness_system(tri, cusp).jacobian(z);
    let thr = kernel_threshold(prec);
    let f = linalg::pivoted_qr(&matrix, thr);
    let window = num::pow2((prec as f64) / 8.0);
    if let Some(r) = f.diag_ratios.iter().find(|&&r| r > thr / window && r < thr * window) {
        return Err(IsolationError::AmbiguousKernel { ratio: *r });
    }
    let kernel = f.kernel();
    Ok(CompletenessJacobian { rank: f.rank, matrix, kernel })
}

#[derive(Clone, Debug)]
pub struct TauDerivatives {
    /// Coordinate used as the curve parameter.
    pub pin: usize,
    pub tangent: Vec<Complex>,
    /// `dz/dz_pin` and `d^2 z/dz_pin^2`.
    pub dz: Vec<Complex>,
    pub d2z: Vec<Complex>,
    pub d_tau: Complex,
    pub d2_tau: Option<Complex>,
}

/// Coordinates ordered by decreasing |tangent entry|; ties keep the lower index.
fn pin_order(t: &[Complex]) -> Vec<usize> {
    let mags: Vec<f64> = t.iter().map(num::abs_f64).collect();
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ma, mb) = (mags[a], mags[b]);
        if (ma - mb).abs() <= 1e-12 * ma.max(mb) {
            a.cmp(&b)
        } else {
            mb.partial_cmp(&ma).unwrap()
        }
    });
    idx
}

fn contract(h: &[Vec<MonomialSum>], z: &ShapeAssignment, v: &[Complex]) -> Complex {
    let prec = z.precision_bits;
    let mut acc = Complex::new(prec);
    for (j, row) in h.iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            if !e.is_zero() {
                acc += e.eval_unchecked(z) * Complex::with_val(prec, &v[j] * &v[k]);
            }
        }
    }
    acc
}

fn hessian(e: &MonomialSum, n: usize) -> Vec<Vec<MonomialSum>> {
    (0..n).map(|j| (0..n).map(|k| e.partial(j).partial(k)).collect()).collect()
}

/// Derivatives of `tau_c` along the completeness curve with respect to the
/// pinned coordinate, by implicit differentiation of the pinned system.
pub fn tau_derivatives(
    tri: &IdealTriangulation,
    cusp: usize,
    z0: &ShapeAssignment,
    order: usize,
) -> Result<TauDerivatives, IsolationError> {
    let cj = completeness_jacobian(tri, cusp, z0)?;
    if cj.kernel.len() != 1 {
        return Err(IsolationError::KernelDimension { dimension: cj.kernel.len() });
    }
    let prec = z0.precision_bits;
    let n = tri.n_tet;
    let tangent = cj.kernel[0].clone();
    let sys = completeness_system(tri, cusp);
    let mut chosen = None;
    for pin in pin_order(&tangent) {
        let cols: Vec<usize> = (0..n).filter(|&i| i != pin).collect();
        let jy = cj.matrix.select_columns(&cols);
        let f = linalg::pivoted_qr(&jy, kernel_threshold(prec));
        if f.rank == n - 1 {
            chosen = Some((pin, cols, f));
            break;
        }
    }
    let (pin, cols, fy) = chosen.ok_or(IsolationError::SingularPinning)?;
    let jp = cj.matrix.column(pin);
    let rhs: Vec<Complex> = jp.iter().map(|v| Complex::with_val(prec, -v)).collect();
    let y1 = fy.solve(&rhs);
    let mut dz = vec![Complex::new(prec); n];
    dz[pin] = Complex::with_val(prec, 1);
    for (c, v) in cols.iter().zip(&y1) {
        dz[*c] = v.clone();
    }

    let par = cusp_parameter(tri, &tri.cusps[cusp]);
    let (num_f, den_f) = (&par.numerator, &par.denominator);
    let tau = par.evaluate(z0)?;
    let d = den_f.evaluate(z0)?;
    let grad = |e: &MonomialSum| -> Vec<Complex> { (0..n).map(|j| e.partial(j).eval_unchecked(z0)).collect() };
    let nj = grad(num_f);
    let dj = grad(den_f);
    let tau_j: Vec<Complex> = (0..n)
        .map(|j| Complex::with_val(prec, &nj[j] - Complex::with_val(prec, &tau * &dj[j])) / &d)
        .collect();
    let dot = |a: &[Complex], b: &[Complex]| {
        let mut acc = Complex::new(prec);
        for (x, y) in a.iter().zip(b) {
            acc += Complex::with_val(prec, x * y);
        }
        acc
    };
    let d_tau = dot(&tau_j, &dz);

    let mut d2z = vec![Complex::new(prec); n];
    let mut d2_tau = None;
    if order >= 2 {
        let rhs: Vec<Complex> = sys.eqs.iter().map(|e| -contract(&hessian(e, n), z0, &dz)).collect();
        let y2 = fy.solve(&rhs);
        for (c, v) in cols.iter().zip(&y2) {
            d2z[*c] = v.clone();
        }
        // tau_jk = (N_jk - tau_j D_k - tau_k D_j - tau D_jk) / D, contracted with dz twice.
        let n2 = contract(&hessian(num_f, n), z0, &dz);
        let d2 = contract(&hessian(den_f, n), z0, &dz);
        let tdz = dot(&tau_j, &dz);
        let ddz = dot(&dj, &dz);
        let cross = Complex::with_val(prec, &tdz * &ddz) * 2u32;
        let quad = (n2 - cross - Complex::with_val(prec, &tau * &d2)) / &d;
        d2_tau = Some(quad + dot(&tau_j, &d2z));
    }
    Ok(TauDerivatives { pin, tangent, dz, d2z, d_tau, d2_tau })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
    Continuation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    NotIsolated(Order),
    /// Constancy is never claimed; no certificate of non-constancy was found.
    Inconclusive,
}

impl Verdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::NotIsolated(_) => "NotIsolated",
            Verdict::Inconclusive => "Inconclusive",
        }
    }

    pub fn order(&self) -> Option<&'static str> {
        match self {
            Verdict::NotIsolated(Order::First) => Some("1"),
            Verdict::NotIsolated(Order::Second) => Some("2"),
            Verdict::NotIsolated(Order::Continuation) => Some("continuation"),
            Verdict::Inconclusive => None,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.order() {
            Some(o) => write!(f, "{}({})", self.tag(), o),
            None => write!(f, "{}", self.tag()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IsolationOptions {
    /// Non-constancy threshold; defaults to `1e-20` at 256 bits, scaled with precision.
    pub tolerance: Option<f64>,
    pub n_points: usize,
    pub step: f64,
}

impl Default for IsolationOptions {
    fn default() -> Self {
        IsolationOptions { tolerance: None, n_points: 6, step: 1e-3 }
    }
}

impl IsolationOptions {
    pub fn tol(&self, prec: u32) -> f64 {
        self.tolerance.unwrap_or_else(|| 10f64.powf(-20.0 * prec as f64 / 256.0))
    }
}

#[derive(Clone, Debug)]
pub struct IsolationEvidence {
    pub cusp: usize,
    pub jacobian_rank: usize,
    pub pin: usize,
    pub tangent: Vec<Complex>,
    pub d_tau: Complex,
    pub d2_tau: Option<Complex>,
    pub continuation_spread: Option<Float>,
    pub continuation_points: usize,
    /// Why continuation produced no spread, when it failed.
    pub continuation_error: Option<String>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl IsolationEvidence {
    pub fn to_json(&self) -> Value {
        let c = |z: &Complex| {
            let (re, im) = num::decimal_pair(z);
            json!({"re": re, "im": im})
        };
        json!({
            "cusp": self.cusp,
            "jacobian_rank": self.jacobian_rank,
            "pin": self.pin,
            "tangent": self.tangent.iter().map(c).collect::<Vec<_>>(),
            "d_tau": c(&self.d_tau),
            "d2_tau": self.d2_tau.as_ref().map(c),
            "continuation_spread": self.continuation_spread.as_ref().map(|f| num::fmt_float(f, 20)),
            "continuation_points": self.continuation_points,
            "continuation_error": self.continuation_error,
            "tolerance": format!("{:e}", self.tolerance),
            "verdict": self.verdict.tag(),
            "order": self.verdict.order(),
        })
    }
}

fn spread(points: &[CurvePoint], tau0: &Complex) -> Float {
    let prec = tau0.prec().0;
    let mut worst = Float::new(prec);
    for p in points {
        let d = num::abs(&Complex::with_val(prec, &p.tau - tau0));
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// Derivative tests to order 2, then continuation. NotIsolated needs a
/// value above tolerance; otherwise the verdict is Inconclusive.
pub fn isolation_verdict(
    tri: &IdealTriangulation,
    cusp: usize,
    z0: &ShapeAssignment,
    opts: &IsolationOptions,
) -> Result<IsolationEvidence, IsolationError> {
    let prec = z0.precision_bits;
    let tol = opts.tol(prec);
    let cj = completeness_jacobian(tri, cusp, z0)?;
    let der = tau_derivatives(tri, cusp, z0, 2)?;
    let tau0 = cusp_parameter(tri, &tri.cusps[cusp]).evaluate(z0)?;
    let (continuation_spread, continuation_points, continuation_error) =
        match trace_completeness_curve(tri, z0, cusp, opts.n_points, opts.step) {
            Ok(points) => (Some(spread(&points, &tau0)), points.len(), None),
            Err(e) => (None, 0, Some(e.to_string())),
        };
    let verdict = if num::abs_f64(&der.d_tau) > tol {
        Verdict::NotIsolated(Order::First)
    } else if der.d2_tau.as_ref().is_some_and(|v| num::abs_f64(v) > tol) {
        Verdict::NotIsolated(Order::Second)
    } else if continuation_spread.as_ref().is_some_and(|s| s.to_f64() > tol) {
        Verdict::NotIsolated(Order::Continuation)
    } else {
        Verdict::Inconclusive
    };
    Ok(IsolationEvidence {
        cusp,
        jacobian_rank: cj.rank,
        pin: der.pin,
        tangent: der.tangent,
        d_tau: der.d_tau,
        d2_tau: der.d2_tau,
        continuation_spread,
        continuation_points,
        continuation_error,
        tolerance: tol,
        verdict,
    })
}

impl From<SolveError> for IsolationError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::KernelDimension { dimension } => IsolationError::KernelDimension { dimension },
            SolveError::Holonomy(h) => IsolationError::Holonomy(h),
            _ => IsolationError::SingularPinning,
        }
    }
}
