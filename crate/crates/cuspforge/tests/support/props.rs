//! Property checks shared by the `properties` and `acceptance` targets.
//! Each returns `Err` with a description of the first counterexample.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rug::{Complex, Float, Rational};

use cuspforge::fixtures;
use cuspforge::holonomy::{cusp_parameter, mu, tau, ShapeAssignment, SignedMonomial};
use cuspforge::isolation::{isolation_verdict, tau_derivatives, IsolationOptions};
use cuspforge::manifold::{concat_curves, curve_power, edge_equation, reverse_curve, CuspCurve, IdealTriangulation};
use cuspforge::numberlab::{self, algdep, classify_field, rigid_compatible, FieldClass};
use cuspforge::screen::{self, ScreenOptions};
use cuspforge::solver::{self, solve_complete, FillTarget, SolveResult, SolverOptions};
use cuspforge::tracecalc::{self, Mat2, MatrixRep};
use cuspforge::{num, parse_triangulation};

use super::oracle::{self, dist, Quad};

pub const SEED: [u8; 32] = *b"cuspforge-property-suite-seed-01";
const P: u32 = 256;

pub fn runner(cases: u32) -> TestRunner {
    let cfg = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &SEED))
}

fn run<S: Strategy>(cases: u32, strat: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strat, test).map_err(|e| e.to_string())
}

fn fixture(i: usize) -> IdealTriangulation {
    fixtures::all().swap_remove(i % 3)
}

fn z0(tri: &IdealTriangulation, prec: u32) -> SolveResult {
    solve_complete(tri, &SolverOptions::with_precision(prec)).expect("fixture solves")
}

/// Word in `m, l, m^-1, l^-1` as a cusp curve.
fn word_curve(tri: &IdealTriangulation, cusp: usize, word: &[u8]) -> CuspCurve {
    let c = &tri.cusps[cusp];
    let gens = [c.meridian.clone(), c.longitude.clone(), reverse_curve(&c.meridian), reverse_curve(&c.longitude)];
    let mut out = gens[word[0] as usize].clone();
    for &g in &word[1..] {
        out = concat_curves(&out, &gens[g as usize]).expect("common reference");
    }
    out
}

fn shapes_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.5f64..2.5, 0.2f64..2.0), 6)
}

fn assignment(tri: &IdealTriangulation, v: &[(f64, f64)]) -> ShapeAssignment {
    ShapeAssignment::from_f64(&v[..tri.n_tet], P)
}

fn words() -> impl Strategy<Value = (usize, usize, Vec<u8>, Vec<u8>)> {
    (0usize..3, 0usize..2, proptest::collection::vec(0u8..4, 1..4), proptest::collection::vec(0u8..4, 1..4))
}

/// `mu(a * b) = mu(a) mu(b)` as canonical monomials.
pub fn mu_homomorphism(cases: u32) -> Result<(), String> {
    run(cases, words(), |(f, c, wa, wb)| {
        let tri = fixture(f);
        let (a, b) = (word_curve(&tri, c, &wa), word_curve(&tri, c, &wb));
        let ab = concat_curves(&a, &b).unwrap();
        prop_assert_eq!(mu(&tri, &ab), &mu(&tri, &a) * &mu(&tri, &b));
        Ok(())
    })
}

/// `tau(a * b)(z) = tau(a)(z) + mu(a)(z) tau(b)(z)` at 20 random points per pair.
pub fn tau_cocycle(cases: u32) -> Result<(), String> {
    run(cases, (words(), proptest::collection::vec(shapes_strategy(), 20)), |((f, c, wa, wb), zs)| {
        let tri = fixture(f);
        let (a, b) = (word_curve(&tri, c, &wa), word_curve(&tri, c, &wb));
        let ab = concat_curves(&a, &b).unwrap();
        let (ta, tb, tab, ma) = (tau(&tri, &a), tau(&tri, &b), tau(&tri, &ab), mu(&tri, &a));
        for v in &zs {
            let z = assignment(&tri, v);
            let lhs = tab.evaluate(&z).unwrap();
            let rhs = ta.evaluate(&z).unwrap() + ma.evaluate(&z).unwrap() * tb.evaluate(&z).unwrap();
            let scale = 1.0 + num::abs_f64(&lhs);
            prop_assert!(dist(&lhs, &rhs) < 1e-60 * scale, "cocycle off by {:e} at {:?}", dist(&lhs, &rhs), v);
        }
        Ok(())
    })
}

/// Edge product, serialization round trip, completeness, non-vanishing and non-real cusp parameters.
pub fn fixture_invariants() -> Result<(), String> {
    for tri in fixtures::all() {
        let n = tri.n_tet;
        let prod = (0..tri.edges.len()).fold(SignedMonomial::one(n), |acc, e| &acc * &edge_equation(&tri, e));
        if prod != SignedMonomial::one(n) {
            return Err(format!("{}: edge product is {prod}", tri.name));
        }
        if parse_triangulation(&tri.to_json()).map_err(|e| e.to_string())? != tri {
            return Err(format!("{}: round trip differs", tri.name));
        }
        let z = z0(&tri, P).shapes;
        let one = Complex::with_val(P, 1);
        for cd in &tri.cusps {
            for g in [&cd.meridian, &cd.longitude] {
                let m = mu(&tri, g).evaluate(&z).unwrap();
                if dist(&m, &one) >= 1e-40 {
                    return Err(format!("{}: mu({}) - 1 = {:e}", tri.name, g.name, dist(&m, &one)));
                }
                if num::abs_f64(&tau(&tri, g).evaluate(&z).unwrap()) == 0.0 {
                    return Err(format!("{}: tau({}) vanishes", tri.name, g.name));
                }
            }
            let t = cusp_parameter(&tri, cd).evaluate(&z).unwrap();
            if t.imag().to_f64().abs() < 1e-6 {
                return Err(format!("{}: cusp {} parameter is real", tri.name, cd.name));
            }
        }
    }
    Ok(())
}

/// Replacing `l` by `l m^k` shifts `tau_c` by `k` and keeps the verdict.
pub fn basis_covariance() -> Result<(), String> {
    let opts = IsolationOptions::default();
    for tri in fixtures::all() {
        let z = z0(&tri, P).shapes;
        for cusp in 0..tri.cusps.len() {
            let base = isolation_verdict(&tri, cusp, &z, &opts).map_err(|e| e.to_string())?;
            let t0 = cusp_parameter(&tri, &tri.cusps[cusp]).evaluate(&z).unwrap();
            for k in [1i32, -1] {
                let mut moved = tri.clone();
                let cd = &mut moved.cusps[cusp];
                let mk = curve_power(&cd.meridian, k).unwrap();
                cd.longitude = concat_curves(&cd.longitude, &mk).unwrap();
                let t1 = cusp_parameter(&moved, &moved.cusps[cusp]).evaluate(&z).unwrap();
                let shift = Complex::with_val(P, &t1 - &t0);
                if dist(&shift, &Complex::with_val(P, k)) > 1e-40 {
                    return Err(format!("{} cusp {cusp} k={k}: shift {}", tri.name, num::fmt_complex(&shift, 20)));
                }
                let ev = isolation_verdict(&moved, cusp, &z, &opts).map_err(|e| e.to_string())?;
                if ev.verdict != base.verdict {
                    return Err(format!("{} cusp {cusp} k={k}: verdict {} vs {}", tri.name, ev.verdict, base.verdict));
                }
            }
        }
    }
    Ok(())
}

/// Rigid-compatible cusp fields stay rigid-compatible at twice the precision.
pub fn precision_doubling() -> Result<(), String> {
    for tri in fixtures::all() {
        let lo = z0(&tri, P).shapes;
        let hi = z0(&tri, 2 * P).shapes;
        for cd in &tri.cusps {
            let par = cusp_parameter(&tri, cd);
            let (_, f_lo) = numberlab::recognize(&par.evaluate(&lo).unwrap(), numberlab::DEFAULT_MAX_DEGREE);
            let (_, f_hi) = numberlab::recognize(&par.evaluate(&hi).unwrap(), numberlab::DEFAULT_MAX_DEGREE);
            if rigid_compatible(&f_lo) && !rigid_compatible(&f_hi) {
                return Err(format!("{} cusp {}: {} at {P} bits, {} at {} bits", tri.name, cd.name, f_lo, f_hi, 2 * P));
            }
        }
    }
    Ok(())
}

fn quad_strategy(ds: &'static [i64]) -> impl Strategy<Value = (i64, i64, i64, i64, i64)> {
    (-50i64..=50, 1i64..=50, (-50i64..=50).prop_filter("irrational", |b| *b != 0), 1i64..=50, 0..ds.len())
        .prop_map(move |(p1, q1, p2, q2, k)| (p1, q1, p2, q2, ds[k]))
}

const DS: &[i64] = &[1, 2, 3, 7, 11];

fn quad_of((p1, q1, p2, q2, d): (i64, i64, i64, i64, i64)) -> Quad {
    Quad::new(Rational::from((p1, q1)), Rational::from((p2, q2)), d)
}

fn expected_class(d: i64) -> FieldClass {
    match d {
        1 => FieldClass::GaussianRational,
        3 => FieldClass::EisensteinRational,
        d => FieldClass::OtherImaginaryQuadratic(-d),
    }
}

/// algdep recovers the exact quadratic of `a + b sqrt(-d)` and its field.
pub fn algdep_round_trip(cases: u32) -> Result<(), String> {
    run(cases, quad_strategy(DS), |q| {
        let x = quad_of(q);
        let want = x.minpoly();
        let got = algdep(&x.to_complex(P), numberlab::DEFAULT_MAX_DEGREE).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&got.coefficients, &want, "value {:?}", x);
        prop_assert_eq!(classify_field(&got), expected_class(x.d));
        Ok(())
    })
}

/// A polynomial found at precision p is found again at 2p.
pub fn algdep_precision_monotone(cases: u32) -> Result<(), String> {
    run(cases, quad_strategy(DS), |q| {
        let x = quad_of(q);
        if let Ok(lo) = algdep(&x.to_complex(P), numberlab::DEFAULT_MAX_DEGREE) {
            let hi = algdep(&x.to_complex(2 * P), numberlab::DEFAULT_MAX_DEGREE).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(lo.coefficients, hi.coefficients);
        }
        Ok(())
    })
}

fn sl2z() -> impl Strategy<Value = (i64, i64, i64, i64)> {
    (-3i64..=3, -3i64..=3, -3i64..=3, -3i64..=3).prop_filter("det 1", |(a, b, c, d)| a * d - b * c == 1)
}

/// The field class of a rigid value is invariant under SL(2, Z).
pub fn modular_invariance(cases: u32) -> Result<(), String> {
    run(cases, (quad_strategy(&[1, 3]), sl2z()), |(q, (a, b, c, d))| {
        let t = quad_of(q);
        let k = t.d;
        let num = Quad::int(a, k).mul(&t).add(&Quad::int(b, k));
        let den = Quad::int(c, k).mul(&t).add(&Quad::int(d, k));
        let moved = num.div(&den);
        let (_, f0) = numberlab::recognize(&t.to_complex(P), numberlab::DEFAULT_MAX_DEGREE);
        let (_, f1) = numberlab::recognize(&moved.to_complex(P), numberlab::DEFAULT_MAX_DEGREE);
        prop_assert_eq!(&f0, &expected_class(k));
        prop_assert_eq!(f1, f0);
        Ok(())
    })
}

/// At points of the Whitehead completeness curve away from `x = i`, the first
/// derivative predicts the continuation step within a factor 2.
pub fn derivative_continuation(cases: u32) -> Result<(), String> {
    let tri = fixtures::whitehead();
    let strat = (-0.4f64..0.4, 0.6f64..1.5).prop_filter("away from x = i", |(re, im)| re.hypot(im - 1.0) > 0.15);
    run(cases, strat, |(re, im)| {
        let x = oracle::c(P, re, im);
        let start = tracecalc::whitehead_curve_point(&x);
        let der = tau_derivatives(&tri, 0, &start, 1).map_err(|e| TestCaseError::fail(e.to_string()))?;
        // tau = 4x/(1-x^2) - 2, dtau/dx = 4(1+x^2)/(1-x^2)^2; w = -1/x has dw/dx = 1/x^2.
        let x2 = Complex::with_val(P, x.square_ref());
        let om = Complex::with_val(P, 1 - &x2);
        let dtdx = Complex::with_val(P, 1 + &x2) * 4u32 / Complex::with_val(P, om.square_ref());
        let want = match der.pin {
            0 | 2 => Complex::with_val(P, &dtdx * &x2),
            _ => dtdx,
        };
        prop_assert!(dist(&der.d_tau, &want) < 1e-40, "d_tau vs analytic: {:e}", dist(&der.d_tau, &want));
        let tol = IsolationOptions::default().tol(P);
        prop_assert!(num::abs_f64(&der.d_tau) > tol);
        let par = cusp_parameter(&tri, &tri.cusps[0]);
        let t0 = par.evaluate(&start).unwrap();
        for h in [1e-3, 1e-4] {
            let pts = solver::trace_completeness_curve(&tri, &start, 0, 1, h).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let p = &pts[0];
            let dz = dist(&p.shapes.z[der.pin], &start.z[der.pin]);
            let ratio = dist(&p.tau, &t0) / (num::abs_f64(&der.d_tau) * dz);
            prop_assert!((0.5..=2.0).contains(&ratio), "h = {h}: ratio {ratio}");
        }
        Ok(())
    })
}

/// Isolation evidence recomputed at twice the precision agrees to half the digits.
pub fn evidence_precision_agreement() -> Result<(), String> {
    let opts = IsolationOptions::default();
    let half = num::pow2(-(P as f64) / 2.0);
    for tri in fixtures::all() {
        let lo = z0(&tri, P).shapes;
        let hi = z0(&tri, 2 * P).shapes;
        for cusp in 0..tri.cusps.len() {
            let a = isolation_verdict(&tri, cusp, &lo, &opts).map_err(|e| e.to_string())?;
            let b = isolation_verdict(&tri, cusp, &hi, &opts).map_err(|e| e.to_string())?;
            let d2 = |e: &cuspforge::isolation::IsolationEvidence| e.d2_tau.clone().unwrap_or_else(|| Complex::new(P));
            if a.verdict != b.verdict || dist(&a.d_tau, &b.d_tau) > half || dist(&d2(&a), &d2(&b)) > half {
                return Err(format!("{} cusp {cusp}: evidence differs between {P} and {} bits", tri.name, 2 * P));
            }
        }
    }
    Ok(())
}

/// Every monomial condition holds at twice the working precision.
fn certify(tri: &IdealTriangulation, targets: &[FillTarget], r: &SolveResult, tol: f64) -> Result<(), String> {
    let z = r.shapes.at_precision(2 * r.shapes.precision_bits);
    let prec = z.precision_bits;
    let one = Complex::with_val(prec, 1);
    let mut worst: f64 = 0.0;
    for e in 0..tri.edges.len() {
        worst = worst.max(dist(&edge_equation(tri, e).evaluate(&z).unwrap(), &one));
    }
    for (cd, t) in tri.cusps.iter().zip(targets) {
        let (m, l) = (mu(tri, &cd.meridian).evaluate(&z).unwrap(), mu(tri, &cd.longitude).evaluate(&z).unwrap());
        match *t {
            FillTarget::Complete => worst = worst.max(dist(&m, &one)).max(dist(&l, &one)),
            FillTarget::Filled(p, q) => {
                let v = oracle::ipow(&m, p) * oracle::ipow(&l, q);
                worst = worst.max(dist(&v, &one));
            }
            FillTarget::Free => {}
        }
    }
    if worst < tol {
        Ok(())
    } else {
        Err(format!("{} {:?}: residual {worst:e} at {prec} bits exceeds {tol:e}", tri.name, targets))
    }
}

pub fn residual_certificate() -> Result<(), String> {
    let opts = SolverOptions::default();
    for tri in fixtures::all() {
        let r = solve_complete(&tri, &opts).map_err(|e| e.to_string())?;
        certify(&tri, &vec![FillTarget::Complete; tri.cusps.len()], &r, opts.tol())?;
    }
    let w = fixtures::whitehead();
    for n in [1, 2, -2, 3] {
        let targets = [FillTarget::Complete, FillTarget::Filled(1, n)];
        let r = solver::solve_filled(&w, &targets, &opts).map_err(|e| e.to_string())?;
        certify(&w, &targets, &r, opts.tol())?;
    }
    Ok(())
}

/// Identical inputs give byte-identical reports, whatever the pool size.
pub fn report_determinism() -> Result<(), String> {
    let inputs: Vec<String> = fixtures::names().iter().map(|s| s.to_string()).collect();
    let render = |parallelism: usize| -> Vec<String> {
        let opts = ScreenOptions { parallelism, ..ScreenOptions::default() };
        let mut out: Vec<String> = screen::screen(&inputs, &opts).iter().map(|r| r.to_json_string()).collect();
        let w = fixtures::whitehead();
        out.extend(screen::fill_and_screen("whitehead", &w, 1, &[(1, 1), (1, 2)], &opts).iter().map(|r| r.to_json_string()));
        out
    };
    let a = render(1);
    for (i, b) in [render(1), render(3)].iter().enumerate() {
        if &a != b {
            return Err(format!("run {} differs from the first", i + 2));
        }
    }
    Ok(())
}

fn sl2(prec: u32, e: [(f64, f64); 4]) -> Mat2 {
    let [a, b, c, d] = e.map(|v| Complex::with_val(prec, v));
    let det = Complex::with_val(prec, &a * &d) - Complex::with_val(prec, &b * &c);
    let s = det.sqrt();
    Mat2::from_entries(a / &s, b / &s, c / &s, d / &s)
}

/// The trace formula is invariant under simultaneous conjugation.
pub fn trace_conjugation(cases: u32) -> Result<(), String> {
    let entry = || (-2.0f64..2.0, -2.0f64..2.0);
    let strat = ((-1.0f64..1.0, 0.5f64..2.0), [entry(), entry(), entry(), entry()], [entry(), entry(), entry(), entry()]);
    run(cases, strat, |((tr, ti), gam, conj)| {
        let one = (1.0, 0.0);
        let rep = MatrixRep {
            m_mu: sl2(P, [one, one, (0.0, 0.0), one]),
            m_lambda: sl2(P, [one, (tr, ti), (0.0, 0.0), one]),
            m_gamma: sl2(P, gam),
        };
        let Ok(base) = tracecalc::traces_from_matrices(&rep).and_then(|t| tracecalc::cusp_parameter_from_traces(&t)) else {
            return Ok(());
        };
        let g = sl2(P, conj);
        let moved = tracecalc::traces_from_matrices(&rep.conjugate(&g))
            .and_then(|t| tracecalc::cusp_parameter_from_traces(&t))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let scale = 1.0 + num::abs_f64(&base);
        prop_assert!(dist(&base, &moved) < 1e-50 * scale);
        Ok(())
    })
}

/// C on W0 depends on I_ab only through its square.
pub fn theta_branch_independence(cases: u32) -> Result<(), String> {
    let strat = (-0.9f64..0.9, 0.1f64..1.5);
    run(cases, strat, |(re, im)| {
        let x = oracle::c(P, re, im);
        let th = tracecalc::whitehead_theta(&x).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let flipped = Complex::with_val(P, -&th.i_ab);
        let a = tracecalc::cusp_parameter_from_traces(&tracecalc::w0_traces(&th.i_ab)).unwrap();
        let b = tracecalc::cusp_parameter_from_traces(&tracecalc::w0_traces(&flipped)).unwrap();
        prop_assert!(dist(&a, &b) < 1e-60 * (1.0 + num::abs_f64(&a)));
        let c = tracecalc::c_of_theta(&x).unwrap();
        prop_assert!(dist(&a, &c) < 1e-60 * (1.0 + num::abs_f64(&a)));
        Ok(())
    })
}

/// A rational value is recognized as degree 1 and flagged.
pub fn rational_inputs_are_flagged() -> Result<(), String> {
    let (mp, fc) = numberlab::recognize(&Complex::with_val(P, (Float::with_val(P, 7) / 3, 0)), 12);
    match (mp, fc) {
        (Some(m), FieldClass::Rational) if m.degree() == 1 => Ok(()),
        (m, f) => Err(format!("7/3 gave {:?} / {f}", m.map(|m| m.to_string()))),
    }
}

/// Every property with its standard case count.
pub type Property = fn() -> Result<(), String>;

pub fn all() -> Vec<(&'static str, Property)> {
    vec![
        ("mu homomorphism", || mu_homomorphism(64)),
        ("tau cocycle", || tau_cocycle(16)),
        ("fixture invariants", fixture_invariants),
        ("basis covariance k = +1, -1", basis_covariance),
        ("precision doubling stability", precision_doubling),
        ("report determinism", report_determinism),
        ("algdep round trip", || algdep_round_trip(64)),
        ("algdep precision monotone", || algdep_precision_monotone(16)),
        ("modular invariance", || modular_invariance(32)),
        ("derivative continuation consistency", || derivative_continuation(8)),
        ("evidence precision agreement", evidence_precision_agreement),
        ("residual certificate", residual_certificate),
        ("trace conjugation invariance", || trace_conjugation(10)),
        ("theta branch independence", || theta_branch_independence(20)),
        ("rational inputs flagged", rational_inputs_are_flagged),
    ]
}
