//! Newton solving for complete and Dehn-filled structures, and continuation
//! along the curve where one cusp stays complete.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complex, Float};
use serde_json::{json, Value};
use thiserror::Error;

use crate::holonomy::{cusp_parameter, mu, HolonomyError, MonomialSum, ShapeAssignment, SignedMonomial};
use crate::linalg::{self, CMatrix};
use crate::manifold::{edge_equation, gcd, CornerKind, ExponentMatrix, IdealTriangulation};
use crate::num;

pub const DEFAULT_PRECISION: u32 = 256;
pub const REGULAR_SHAPE: (f64, f64) = (0.5, 0.8660254);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FillTarget {
    Complete,
    Filled(i64, i64),
    /// No condition on the cusp; used while tracing deformations.
    Free,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("Newton did not converge after {attempts} attempts (best residual {best_residual:e})")]
    NonConvergence { attempts: usize, best_residual: f64 },
    #[error("filling ({p}, {q}) on cusp {cusp} is outside the principal logarithm branch")]
    BranchViolation { cusp: usize, p: i64, q: i64 },
    #[error("filling ({p}, {q}) on cusp {cusp} is not a primitive slope")]
    BadFilling { cusp: usize, p: i64, q: i64 },
    #[error("filled solution is degenerate: shape {tet} is near 0 or 1")]
    Degenerate { tet: usize },
    #[error("Jacobian kernel has dimension {dimension}, expected 1")]
    KernelDimension { dimension: usize },
    #[error("continuation corrector failed at point {point} (step below {floor:e})")]
    CorrectorDivergence { point: usize, floor: f64 },
    #[error("{0}")]
    Holonomy(#[from] HolonomyError),
    #[error("expected {expected} fill targets, got {got}")]
    TargetCount { expected: usize, got: usize },
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub precision_bits: u32,
    /// Success threshold on the residual; defaults to `2^(-precision/2)`.
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub max_restarts: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { precision_bits: DEFAULT_PRECISION, tolerance: None, seed: 0, max_restarts: 32, max_iterations: 120 }
    }
}

impl SolverOptions {
    pub fn with_precision(bits: u32) -> Self {
        SolverOptions { precision_bits: bits, ..Default::default() }
    }

    pub fn tol(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| num::pow2(-(self.precision_bits as f64) / 2.0))
    }
}

/// Per-cusp holonomy monomials of the meridian and longitude.
#[derive(Clone, Debug, PartialEq)]
pub struct CuspEquations {
    pub meridian: SignedMonomial,
    pub longitude: SignedMonomial,
}

/// Edge equations, cusp holonomies and what to impose at each cusp.
#[derive(Clone, Debug, PartialEq)]
pub struct GluingSystem {
    pub n: usize,
    pub edges: Vec<SignedMonomial>,
    pub cusps: Vec<CuspEquations>,
    pub targets: Vec<FillTarget>,
    /// Number of E2 corners per edge, when known; fixes the angle-sum sheet
    /// so seeding can run on shape logarithms.
    pub edge_flips: Option<Vec<usize>>,
}

impl GluingSystem {
    pub fn from_triangulation(tri: &IdealTriangulation, targets: Vec<FillTarget>) -> Result<Self, SolveError> {
        if targets.len() != tri.cusps.len() {
            return Err(SolveError::TargetCount { expected: tri.cusps.len(), got: targets.len() });
        }
        Ok(GluingSystem {
            n: tri.n_tet,
            edges: (0..tri.edges.len()).map(|i| edge_equation(tri, i)).collect(),
            cusps: tri
                .cusps
                .iter()
                .map(|c| CuspEquations { meridian: mu(tri, &c.meridian), longitude: mu(tri, &c.longitude) })
                .collect(),
            targets,
            edge_flips: Some(
                tri.edges.iter().map(|e| e.corners.iter().filter(|c| c.kind == CornerKind::E2).count()).collect(),
            ),
        })
    }

    pub fn complete(tri: &IdealTriangulation) -> Self {
        Self::from_triangulation(tri, vec![FillTarget::Complete; tri.cusps.len()]).expect("target count")
    }

    pub fn from_exponent_matrix(m: &ExponentMatrix, targets: Vec<FillTarget>) -> Result<Self, SolveError> {
        if targets.len() != m.cusps.len() {
            return Err(SolveError::TargetCount { expected: m.cusps.len(), got: targets.len() });
        }
        Ok(GluingSystem {
            n: m.n_tet,
            edges: m.edges.clone(),
            cusps: m.cusps.iter().map(|(a, b)| CuspEquations { meridian: a.clone(), longitude: b.clone() }).collect(),
            targets,
            edge_flips: None,
        })
    }

    fn check_targets(&self) -> Result<(), SolveError> {
        for (cusp, t) in self.targets.iter().enumerate() {
            if let FillTarget::Filled(p, q) = *t {
                if gcd(p, q) != 1 {
                    return Err(SolveError::BadFilling { cusp, p, q });
                }
            }
        }
        Ok(())
    }

    /// Polynomial part: cleared edge equations and cleared completeness conditions.
    pub fn polynomial_part(&self) -> PolySystem {
        let mut ms = self.edges.clone();
        for (c, t) in self.cusps.iter().zip(&self.targets) {
            if *t == FillTarget::Complete {
                ms.push(c.meridian.clone());
                ms.push(c.longitude.clone());
            }
        }
        PolySystem::new(self.n, ms)
    }

    /// Max over all conditions of `|monomial - 1|` and `|p u + q v - 2 pi i|`.
    pub fn residual(&self, z: &ShapeAssignment, shifts: &[(Complex, Complex)]) -> Float {
        let prec = z.precision_bits;
        let one = Complex::with_val(prec, 1);
        let mut worst = Float::new(prec);
        let mut bump = |v: Complex| {
            let a = num::abs(&v);
            if a > worst {
                worst = a;
            }
        };
        for e in &self.edges {
            bump(e.eval_unchecked(z) - &one);
        }
        for (k, (c, t)) in self.cusps.iter().zip(&self.targets).enumerate() {
            match *t {
                FillTarget::Complete => {
                    bump(c.meridian.eval_unchecked(z) - &one);
                    bump(c.longitude.eval_unchecked(z) - &one);
                }
                FillTarget::Filled(p, q) => {
                    bump(filling_value(c, p, q, z, &shifts[k], &Float::with_val(prec, 1)))
                }
                FillTarget::Free => {}
            }
        }
        worst
    }
}

/// `p u + q v - 2 pi i` with `u, v` the shape-log sums minus their sheet shifts.
fn filling_value(
    c: &CuspEquations,
    p: i64,
    q: i64,
    z: &ShapeAssignment,
    shift: &(Complex, Complex),
    frac: &Float,
) -> Complex {
    let prec = z.precision_bits;
    let u = c.meridian.log_eval(z) - &shift.0;
    let v = c.longitude.log_eval(z) - &shift.1;
    Complex::with_val(prec, &u * p) + Complex::with_val(prec, &v * q) - num::two_pi_i(prec) * frac
}

fn filling_gradient(c: &CuspEquations, p: i64, q: i64, z: &ShapeAssignment) -> Vec<Complex> {
    let gu = c.meridian.log_gradient(z);
    let gv = c.longitude.log_gradient(z);
    gu.into_iter().zip(gv).map(|(a, b)| a * p + b * q).collect()
}

/// Cleared equations `N - D` of monomial conditions `m = 1`, with exact gradients.
#[derive(Clone, Debug)]
pub struct PolySystem {
    pub n: usize,
    pub sources: Vec<SignedMonomial>,
    pub eqs: Vec<MonomialSum>,
    pub grads: Vec<Vec<MonomialSum>>,
}

impl PolySystem {
    pub fn new(n: usize, sources: Vec<SignedMonomial>) -> Self {
        let eqs: Vec<MonomialSum> = sources.iter().map(SignedMonomial::cleared).collect();
        let grads = eqs.iter().map(|e| (0..n).map(|i| e.partial(i)).collect()).collect();
        PolySystem { n, sources, eqs, grads }
    }

    /// `m(z) - 1` for every source monomial.
    pub fn defects(&self, z: &ShapeAssignment) -> Vec<Complex> {
        let one = Complex::with_val(z.precision_bits, 1);
        self.sources.iter().map(|m| m.eval_unchecked(z) - &one).collect()
    }

    pub fn values(&self, z: &ShapeAssignment) -> Vec<Complex> {
        self.eqs.iter().map(|e| e.eval_unchecked(z)).collect()
    }

    /// Jacobian of the defects `m(z) - 1`: rows `m(z) * grad log m(z)`.
    pub fn defect_jacobian(&self, z: &ShapeAssignment) -> CMatrix {
        let rows = self
            .sources
            .iter()
            .map(|m| {
                let v = m.eval_unchecked(z);
                m.log_gradient(z).into_iter().map(|g| g * &v).collect()
            })
            .collect();
        CMatrix::from_rows(rows, z.precision_bits)
    }

    pub fn jacobian(&self, z: &ShapeAssignment) -> CMatrix {
        let prec = z.precision_bits;
        let mut j = CMatrix::zeros(self.eqs.len(), self.n, prec);
        for (r, row) in self.grads.iter().enumerate() {
            for (c, g) in row.iter().enumerate() {
                if !g.is_zero() {
                    j[(r, c)] = g.eval_unchecked(z);
                }
            }
        }
        j
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub shapes: ShapeAssignment,
    pub residual: Float,
    pub geometric: bool,
    pub iterations: usize,
    /// 0 for the regular-shape start, k for the k-th randomized restart.
    pub attempt: usize,
    pub seed: u64,
}

impl SolveResult {
    pub fn to_json(&self) -> Value {
        let shapes: Vec<Value> = self
            .shapes
            .z
            .iter()
            .map(|z| {
                let (re, im) = num::decimal_pair(z);
                json!({"re": re, "im": im})
            })
            .collect();
        json!({
            "shapes": shapes,
            "residual": num::fmt_float(&self.residual, 12),
            "geometric": self.geometric,
            "iterations": self.iterations,
            "attempt": self.attempt,
            "seed": self.seed,
            "precision_bits": self.shapes.precision_bits,
        })
    }
}

fn is_geometric(z: &ShapeAssignment) -> bool {
    z.z.iter().all(|v| v.imag().is_sign_positive() && !v.imag().is_zero())
}

struct NewtonOutcome {
    z: ShapeAssignment,
    iterations: usize,
}

/// Equations for one Newton run: polynomial conditions plus filling conditions.
struct NewtonSystem<'a> {
    sys: &'a GluingSystem,
    poly: PolySystem,
    shifts: Vec<(Complex, Complex)>,
    /// Fixed coordinate (index, value) for pinned continuation steps.
    pin: Option<(usize, Complex)>,
    scale: Vec<Float>,
    /// Homotopy parameter: filled cusps aim at `frac * 2 pi i`.
    frac: Float,
    /// Edge rows as `sum log(corner) = 2 pi i` instead of `m - 1`.
    edge_logs: Option<Vec<Complex>>,
}

impl<'a> NewtonSystem<'a> {
    fn new(sys: &'a GluingSystem, poly: PolySystem, shifts: Vec<(Complex, Complex)>, prec: u32) -> Self {
        let m = poly.eqs.len() + sys.targets.iter().filter(|t| matches!(t, FillTarget::Filled(..))).count();
        NewtonSystem { sys, poly, shifts, pin: None, scale: vec![Float::with_val(prec, 1); m], frac: Float::with_val(prec, 1), edge_logs: None }
    }

    /// Log-form targets: with `c` E2 corners the principal shape logs of an
    /// edge sum to `2 pi i - c i pi`; `log_eval` already adds `i pi` for odd `c`.
    fn use_edge_logs(&mut self, prec: u32) {
        if let Some(flips) = &self.sys.edge_flips {
            let ipi = Complex::with_val(prec, (0, num::pi(prec)));
            self.edge_logs = Some(
                flips.iter().map(|&c| Complex::with_val(prec, &ipi * (2 - c as i64 + (c % 2) as i64))).collect(),
            );
        }
    }

    fn raw(&self, z: &ShapeAssignment) -> Vec<Complex> {
        let mut f = self.poly.defects(z);
        if let Some(t) = &self.edge_logs {
            for (i, target) in t.iter().enumerate() {
                f[i] = self.poly.sources[i].log_eval(z) - target;
            }
        }
        for (k, (c, t)) in self.sys.cusps.iter().zip(&self.sys.targets).enumerate() {
            if let FillTarget::Filled(p, q) = *t {
                f.push(filling_value(c, p, q, z, &self.shifts[k], &self.frac));
            }
        }
        f
    }

    fn values(&self, z: &ShapeAssignment) -> Vec<Complex> {
        let mut f = self.raw(z);
        for (v, s) in f.iter_mut().zip(&self.scale) {
            *v *= s;
        }
        f
    }

    fn merit(&self, z: &ShapeAssignment) -> Float {
        linalg::norm(&self.raw(z))
    }

    fn jacobian(&self, z: &ShapeAssignment) -> CMatrix {
        let mut j = self.poly.defect_jacobian(z);
        let mut rows: Vec<Vec<Complex>> = (0..j.rows).map(|r| j.row(r)).collect();
        if let Some(t) = &self.edge_logs {
            for (i, row) in rows.iter_mut().enumerate().take(t.len()) {
                *row = self.poly.sources[i].log_gradient(z);
            }
        }
        for (c, t) in self.sys.cusps.iter().zip(&self.sys.targets) {
            if let FillTarget::Filled(p, q) = *t {
                rows.push(filling_gradient(c, p, q, z));
            }
        }
        for (row, s) in rows.iter_mut().zip(&self.scale) {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        j = CMatrix::from_rows(rows, z.precision_bits);
        match &self.pin {
            Some((k, _)) => {
                let keep: Vec<usize> = (0..self.sys.n).filter(|i| i != k).collect();
                j.select_columns(&keep)
            }
            None => j,
        }
    }

    /// Row scaling so that every equation has a unit gradient at `z`.
    fn normalize_rows(&mut self, z: &ShapeAssignment) {
        self.scale = vec![Float::with_val(z.precision_bits, 1); self.scale.len()];
        let j = self.jacobian(z);
        for r in 0..j.rows {
            let nm = linalg::norm(&j.row(r));
            if !nm.is_zero() {
                self.scale[r] = Float::with_val(z.precision_bits, 1) / nm;
            }
        }
    }

    fn run(&self, start: ShapeAssignment, max_iter: usize, guard: f64) -> NewtonOutcome {
        let prec = start.precision_bits;
        let target = num::pow2(-(prec as f64) + 12.0);
        let mut z = start;
        let mut f = self.values(&z);
        let mut merit = self.merit(&z);
        let mut history: Vec<f64> = Vec::new();
        let mut it = 0;
        while it < max_iter {
            history.push(merit.to_f64());
            if history.len() > 12 && merit.to_f64() > 0.5 * history[history.len() - 12] {
                break;
            }
            if linalg::norm(&f).to_f64() < target {
                break;
            }
            it += 1;
            let j = self.jacobian(&z);
            let rhs: Vec<Complex> = f.iter().map(|v| Complex::with_val(prec, -v)).collect();
            let (dx, _) = linalg::lstsq(&j, &rhs, num::pow2(-(prec as f64) * 0.75));
            let dx = self.expand(dx);
            let mut t = Float::with_val(prec, 1);
            let mut accepted = false;
            for _ in 0..30 {
                let cand: Vec<Complex> =
                    z.z.iter().zip(&dx).map(|(a, d)| Complex::with_val(prec, a + Complex::with_val(prec, d * &t))).collect();
                let zc = ShapeAssignment::new(cand, prec).with_guard(guard);
                if zc.is_degenerate() {
                    t /= 2u32;
                    continue;
                }
                let mc = self.merit(&zc);
                if mc < merit {
                    f = self.values(&zc);
                    z = zc;
                    merit = mc;
                    accepted = true;
                    break;
                }
                t /= 2u32;
            }
            if !accepted {
                break;
            }
        }
        NewtonOutcome { z, iterations: it }
    }

    fn expand(&self, dx: Vec<Complex>) -> Vec<Complex> {
        match &self.pin {
            None => dx,
            Some((k, _)) => {
                let prec = dx.first().map_or(64, |v| v.prec().0);
                let mut out = dx;
                out.insert(*k, Complex::new(prec));
                out
            }
        }
    }
}

fn no_shifts(sys: &GluingSystem, prec: u32) -> Vec<(Complex, Complex)> {
    vec![(Complex::new(prec), Complex::new(prec)); sys.cusps.len()]
}

/// Complete structure: all edge equations and all cusp holonomies equal to one.
pub fn solve_complete(tri: &IdealTriangulation, opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    solve_system_complete(&GluingSystem::complete(tri), opts)
}

pub fn solve_system_complete(sys: &GluingSystem, opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    let mut complete = sys.clone();
    complete.targets = vec![FillTarget::Complete; sys.cusps.len()];
    let prec = opts.precision_bits;
    let shifts = no_shifts(&complete, prec);
    let ns = NewtonSystem::new(&complete, complete.polynomial_part(), shifts.clone(), prec);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tol = opts.tol();
    let mut best: Option<SolveResult> = None;
    let mut best_residual = f64::INFINITY;
    for attempt in 0..=opts.max_restarts {
        let start: Vec<(f64, f64)> = (0..sys.n)
            .map(|_| {
                if attempt == 0 {
                    REGULAR_SHAPE
                } else {
                    let spread = 0.3 + 0.1 * attempt as f64;
                    let re = REGULAR_SHAPE.0 + rng.random_range(-spread..spread);
                    let im = (REGULAR_SHAPE.1 + rng.random_range(-spread..spread)).max(0.05);
                    (re, im)
                }
            })
            .collect();
        let mut seed_stage = NewtonSystem::new(&complete, complete.polynomial_part(), shifts.clone(), prec);
        seed_stage.use_edge_logs(prec);
        let start = ShapeAssignment::from_f64(&start, prec);
        let (seeded, seed_iters) = if seed_stage.edge_logs.is_some() {
            let o = seed_stage.run(start, opts.max_iterations, num::DEFAULT_GUARD);
            (o.z, o.iterations)
        } else {
            (start, 0)
        };
        let out = ns.run(seeded, opts.max_iterations, num::DEFAULT_GUARD);
        let residual = complete.residual(&out.z, &shifts);
        let r = residual.to_f64();
        if r < best_residual {
            best_residual = r;
        }
        if r < tol && !out.z.is_degenerate() {
            let res = SolveResult {
                geometric: is_geometric(&out.z),
                shapes: out.z,
                residual,
                iterations: seed_iters + out.iterations,
                attempt,
                seed: opts.seed,
            };
            if res.geometric {
                return Ok(res);
            }
            if best.is_none() {
                best = Some(res);
            }
        }
    }
    best.ok_or(SolveError::NonConvergence { attempts: opts.max_restarts + 1, best_residual })
}

/// Near-branch detection: a shape or its complement close to the negative real axis.
fn branch_violation(z: &ShapeAssignment) -> bool {
    let near = |v: &Complex| {
        let re = v.real().to_f64();
        let im = v.imag().to_f64().abs();
        re < 0.0 && im < 1e-9 * (1.0 + re.abs())
    };
    z.z.iter().any(|v| near(v) || near(&Complex::with_val(53, 1 - v)))
}

/// Dehn-filled structure. Filled cusps satisfy `p log mu(m) + q log mu(l) = 2 pi i`,
/// with the logarithms on the sheet that vanishes at the complete structure.
pub fn solve_filled(
    tri: &IdealTriangulation,
    fillings: &[FillTarget],
    opts: &SolverOptions,
) -> Result<SolveResult, SolveError> {
    let sys = GluingSystem::from_triangulation(tri, fillings.to_vec())?;
    solve_system_filled(&sys, opts)
}

pub fn solve_system_filled(sys: &GluingSystem, opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    sys.check_targets()?;
    let complete = solve_system_complete(sys, opts)?;
    if sys.targets.iter().all(|t| *t == FillTarget::Complete) {
        return Ok(complete);
    }
    let prec = opts.precision_bits;
    let z0 = complete.shapes.clone();
    let two_pi = num::pi(prec) * 2u32;
    let sheet = |m: &SignedMonomial| {
        let l = m.log_eval(&z0);
        let k = Float::with_val(prec, l.imag() / &two_pi).round();
        Complex::with_val(prec, (0, k * &two_pi))
    };
    let shifts: Vec<(Complex, Complex)> = sys.cusps.iter().map(|c| (sheet(&c.meridian), sheet(&c.longitude))).collect();
    let filled_cusp = sys.targets.iter().position(|t| matches!(t, FillTarget::Filled(..))).unwrap_or(0);
    let (fp, fq) = match sys.targets[filled_cusp] {
        FillTarget::Filled(p, q) => (p, q),
        _ => (0, 0),
    };
    let tol = opts.tol();
    let mut total_iters = 0;
    let mut best_residual = f64::INFINITY;
    // Straight Newton from the complete structure, then homotopies in the 2 pi i target.
    for steps in [1usize, 4, 16, 64] {
        let mut z = z0.clone();
        let mut ok = true;
        for s in 1..=steps {
            let mut ns = NewtonSystem::new(sys, sys.polynomial_part(), shifts.clone(), prec);
            ns.frac = Float::with_val(prec, s as u32) / steps as u32;
            ns.normalize_rows(&z);
            let out = ns.run(z.clone(), opts.max_iterations, num::DEFAULT_GUARD);
            total_iters += out.iterations;
            let r = linalg::max_abs(&ns.values(&out.z)).to_f64();
            if branch_violation(&out.z) {
                return Err(SolveError::BranchViolation { cusp: filled_cusp, p: fp, q: fq });
            }
            if r.is_nan() || r >= tol {
                best_residual = best_residual.min(r);
                ok = false;
                break;
            }
            z = out.z;
        }
        if !ok {
            continue;
        }
        if let Some(tet) = z.degenerate_at() {
            return Err(SolveError::Degenerate { tet });
        }
        let residual = sys.residual(&z, &shifts);
        if residual.to_f64() < tol {
            return Ok(SolveResult {
                geometric: is_geometric(&z),
                shapes: z,
                residual,
                iterations: total_iters,
                attempt: complete.attempt,
                seed: opts.seed,
            });
        }
        best_residual = best_residual.min(residual.to_f64());
    }
    Err(SolveError::NonConvergence { attempts: 4, best_residual })
}

/// One traced point of the completeness curve.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub shapes: ShapeAssignment,
    pub tau: Complex,
    pub residual: Float,
}

/// Equations cutting out the locus where cusp `cusp` stays complete:
/// cleared edge equations and the cleared meridian condition.
pub fn completeness_system(tri: &IdealTriangulation, cusp: usize) -> PolySystem {
    let mut ms: Vec<SignedMonomial> = (0..tri.edges.len()).map(|i| edge_equation(tri, i)).collect();
    ms.push(mu(tri, &tri.cusps[cusp].meridian));
    PolySystem::new(tri.n_tet, ms)
}

fn kernel_direction(poly: &PolySystem, z: &ShapeAssignment) -> Result<Vec<Complex>, SolveError> {
    let prec = z.precision_bits;
    let j = poly.jacobian(z);
    let f = linalg::pivoted_qr(&j, num::pow2(-(prec as f64) / 4.0));
    let k = f.kernel();
    if k.len() != 1 {
        return Err(SolveError::KernelDimension { dimension: k.len() });
    }
    Ok(k.into_iter().next().unwrap())
}

fn pin_index(t: &[Complex]) -> usize {
    let mut best = 0;
    let mut best_abs = num::abs(&t[0]);
    for (i, v) in t.iter().enumerate().skip(1) {
        let a = num::abs(v);
        // Strictly larger wins; near-ties keep the lower index.
        if a > Float::with_val(a.prec(), &best_abs * (1.0 + 1e-12)) {
            best = i;
            best_abs = a;
        }
    }
    best
}

/// Predictor-corrector continuation from `start` along the completeness curve of `cusp`.
pub fn trace_completeness_curve(
    tri: &IdealTriangulation,
    start: &ShapeAssignment,
    cusp: usize,
    n_points: usize,
    step: f64,
) -> Result<Vec<CurvePoint>, SolveError> {
    let prec = start.precision_bits;
    let poly = completeness_system(tri, cusp);
    let mut sys = GluingSystem::complete(tri);
    sys.targets = vec![FillTarget::Free; tri.cusps.len()];
    let tau_c = cusp_parameter(tri, &tri.cusps[cusp]);
    let floor = 1e-8;
    let tol = num::pow2(-(prec as f64) / 2.0);
    let mut z = start.clone();
    let mut t = kernel_direction(&poly, &z)?;
    let mut out = Vec::with_capacity(n_points);
    let mut h = step;
    for point in 0..n_points {
        loop {
            if h < floor {
                return Err(SolveError::CorrectorDivergence { point, floor });
            }
            let hf = Float::with_val(prec, h);
            let pred: Vec<Complex> =
                z.z.iter().zip(&t).map(|(a, d)| Complex::with_val(prec, a + Complex::with_val(prec, d * &hf))).collect();
            let pred = ShapeAssignment::new(pred, prec);
            let k = pin_index(&t);
            let mut ns = NewtonSystem::new(&sys, poly.clone(), no_shifts(&sys, prec), prec);
            ns.pin = Some((k, pred.z[k].clone()));
            let outcome = ns.run(pred.clone(), 60, num::DEFAULT_GUARD);
            let residual = linalg::max_abs(&poly.values(&outcome.z));
            let moved: Vec<Complex> =
                outcome.z.z.iter().zip(&pred.z).map(|(a, b)| Complex::with_val(prec, a - b)).collect();
            let drift = linalg::norm(&moved).to_f64();
            if residual.to_f64() < tol && drift < 4.0 * h && !outcome.z.is_degenerate() {
                let tau = tau_c.evaluate(&outcome.z)?;
                let mut t_new = kernel_direction(&poly, &outcome.z)?;
                let mut dot = Complex::new(prec);
                for (a, b) in t_new.iter().zip(&t) {
                    dot += Complex::with_val(prec, a * Complex::with_val(prec, b.conj_ref()));
                }
                // Keep the orientation and the phase of the previous direction.
                let dabs = num::abs(&dot);
                if !dabs.is_zero() {
                    let phase = Complex::with_val(prec, dot.conj_ref()) / dabs;
                    for v in t_new.iter_mut() {
                        *v *= &phase;
                    }
                }
                t = t_new;
                z = outcome.z;
                out.push(CurvePoint { shapes: z.clone(), tau, residual });
                break;
            }
            h /= 2.0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn near(z: &Complex, re: f64, im: f64, tol: f64) -> bool {
        let prec = z.prec().0;
        let target = Complex::with_val(prec, (re, im));
        num::abs_f64(&Complex::with_val(prec, z - target)) < tol
    }

    fn near_regular(z: &Complex) -> bool {
        let prec = z.prec().0;
        let eta = Complex::with_val(prec, (0.5, Float::with_val(prec, 3).sqrt() / 2u32));
        num::abs_f64(&Complex::with_val(prec, z - eta)) < 1e-30
    }

    #[test]
    fn whitehead_complete_is_all_i() {
        let r = solve_complete(&fixtures::whitehead(), &SolverOptions::with_precision(128)).unwrap();
        assert!(r.geometric);
        for z in &r.shapes.z {
            assert!(near(z, 0.0, 1.0, 1e-30), "{z}");
        }
    }

    #[test]
    fn berge_complete_is_regular() {
        let r = solve_complete(&fixtures::berge(), &SolverOptions::with_precision(128)).unwrap();
        for z in &r.shapes.z {
            assert!(near_regular(z), "{z}");
        }
    }

    #[test]
    fn all_complete_fill_matches_complete() {
        let tri = fixtures::berge();
        let opts = SolverOptions::with_precision(128);
        let a = solve_complete(&tri, &opts).unwrap();
        let b = solve_filled(&tri, &[FillTarget::Complete, FillTarget::Complete], &opts).unwrap();
        assert_eq!(a.shapes, b.shapes);
    }

    #[test]
    fn non_primitive_filling_is_rejected() {
        let e = solve_filled(
            &fixtures::whitehead(),
            &[FillTarget::Complete, FillTarget::Filled(2, 4)],
            &SolverOptions::with_precision(128),
        )
        .unwrap_err();
        assert!(matches!(e, SolveError::BadFilling { .. }));
    }

    #[test]
    fn target_count_is_checked() {
        assert!(matches!(
            solve_filled(&fixtures::berge(), &[FillTarget::Complete], &SolverOptions::default()),
            Err(SolveError::TargetCount { .. })
        ));
    }

    #[test]
    fn exponent_matrix_input_solves() {
        let tri = fixtures::berge();
        let mut text = String::from("n 4\n");
        let row = |m: &SignedMonomial| {
            let v = |x: &[i32]| x.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
            format!("{} | {} | {}", v(&m.a), v(&m.b), m.sign)
        };
        for i in 0..4 {
            text += &format!("edge : {}\n", row(&edge_equation(&tri, i)));
        }
        for c in &tri.cusps {
            text += &format!("meridian : {}\n", row(&mu(&tri, &c.meridian)));
            text += &format!("longitude : {}\n", row(&mu(&tri, &c.longitude)));
        }
        let m = crate::manifold::parse_exponent_matrix(&text).unwrap();
        let sys = GluingSystem::from_exponent_matrix(&m, vec![FillTarget::Complete; 2]).unwrap();
        let r = solve_system_complete(&sys, &SolverOptions::with_precision(128)).unwrap();
        assert!(near_regular(&r.shapes.z[0]));
    }

    #[test]
    fn json_has_decimal_strings() {
        let r = solve_complete(&fixtures::whitehead(), &SolverOptions::with_precision(128)).unwrap();
        let v = r.to_json();
        let im = Float::parse(v["shapes"][0]["im"].as_str().unwrap()).unwrap();
        assert!((Float::with_val(128, im) - 1u32).abs() < 1e-30);
        assert_eq!(v["geometric"], true);
    }
}
