//! Batch screening: solve, recognize cusp fields, test isolation, and write
//! reports.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rug::Complex;
use serde_json::{json, Value};

use crate::fixtures;
use crate::holonomy::cusp_parameter;
use crate::isolation::{isolation_verdict, IsolationEvidence, IsolationOptions, Verdict};
use crate::manifold::{parse_triangulation, IdealTriangulation};
use crate::num;
use crate::numberlab::{self, rigid_compatible, FieldClass, MinPoly};
use crate::solver::{solve_complete, solve_filled, FillTarget, SolveResult, SolverOptions};

pub const PROVENANCE_TAG: &str = "non-verified computation";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct ScreenOptions {
    pub solver: SolverOptions,
    pub max_degree: usize,
    pub isolation: IsolationOptions,
    /// Worker threads; 0 means rayon's default.
    pub parallelism: usize,
}

impl Default for ScreenOptions {
    fn default() -> Self {
        ScreenOptions {
            solver: SolverOptions::default(),
            max_degree: numberlab::DEFAULT_MAX_DEGREE,
            isolation: IsolationOptions::default(),
            parallelism: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CuspRecord {
    pub cusp: String,
    pub tau: Option<Complex>,
    pub minpoly: Option<MinPoly>,
    pub field: FieldClass,
    pub rigid_compatible: bool,
    pub isolation: Option<IsolationEvidence>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverallVerdict {
    FailsRigidField,
    RigidFieldButNotIsolated,
    Undetermined,
}

impl OverallVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            OverallVerdict::FailsRigidField => "FailsRigidField",
            OverallVerdict::RigidFieldButNotIsolated => "RigidFieldButNotIsolated",
            OverallVerdict::Undetermined => "Undetermined",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScreenReport {
    pub manifold: String,
    /// `cusp(p,q)` for filled structures.
    pub filling: Option<String>,
    pub solve: Option<SolveResult>,
    pub cusps: Vec<CuspRecord>,
    pub verdict: OverallVerdict,
    pub precision_bits: u32,
    pub seed: u64,
    pub error: Option<String>,
    /// True when the input could not be read or parsed.
    pub parse_failure: bool,
}

impl CuspRecord {
    /// A cusp counts as screened once its field was recognized; an algdep
    /// failure is not evidence against a rigid field.
    pub fn screened(&self) -> bool {
        self.error.is_none() && self.field != FieldClass::Unrecognized
    }
}

fn all_screened_fail(cusps: &[CuspRecord]) -> bool {
    let screened: Vec<&CuspRecord> = cusps.iter().filter(|c| c.screened()).collect();
    !screened.is_empty() && screened.iter().all(|c| !c.rigid_compatible)
}

fn overall(cusps: &[CuspRecord]) -> OverallVerdict {
    if all_screened_fail(cusps) {
        return OverallVerdict::FailsRigidField;
    }
    let certified = cusps
        .iter()
        .any(|c| c.rigid_compatible && c.isolation.as_ref().is_some_and(|e| matches!(e.verdict, Verdict::NotIsolated(_))));
    if certified {
        OverallVerdict::RigidFieldButNotIsolated
    } else {
        OverallVerdict::Undetermined
    }
}

impl ScreenReport {
    fn failed(manifold: &str, opts: &ScreenOptions, error: String, parse_failure: bool) -> Self {
        ScreenReport {
            manifold: manifold.to_string(),
            filling: None,
            solve: None,
            cusps: Vec::new(),
            verdict: OverallVerdict::Undetermined,
            precision_bits: opts.solver.precision_bits,
            seed: opts.solver.seed,
            error: Some(error),
            parse_failure,
        }
    }

    /// Checks the verdict rules; run before anything is written.
    pub fn audit(&self) -> Result<(), String> {
        if (self.verdict == OverallVerdict::FailsRigidField) != all_screened_fail(&self.cusps) {
            return Err(format!("{}: FailsRigidField must hold iff every screened cusp fails the rigid field test", self.manifold));
        }
        if self.verdict == OverallVerdict::RigidFieldButNotIsolated
            && !self.cusps.iter().any(|c| {
                c.rigid_compatible && c.isolation.as_ref().is_some_and(|e| matches!(e.verdict, Verdict::NotIsolated(_)))
            })
        {
            return Err(format!("{}: RigidFieldButNotIsolated without NotIsolated evidence", self.manifold));
        }
        for c in &self.cusps {
            if let Some(e) = &c.isolation {
                if let Verdict::NotIsolated(_) = e.verdict {
                    let d1 = num::abs_f64(&e.d_tau) > e.tolerance;
                    let d2 = e.d2_tau.as_ref().is_some_and(|v| num::abs_f64(v) > e.tolerance);
                    let sp = e.continuation_spread.as_ref().is_some_and(|s| s.to_f64() > e.tolerance);
                    if !(d1 || d2 || sp) {
                        return Err(format!("{}: NotIsolated on {} without evidence above tolerance", self.manifold, c.cusp));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let cusps: Vec<Value> = self
            .cusps
            .iter()
            .map(|c| {
                json!({
                    "cusp": c.cusp,
                    "shape": c.tau.as_ref().map(|t| {
                        let (re, im) = num::decimal_pair(t);
                        json!({"re": re, "im": im})
                    }),
                    "minpoly": c.minpoly,
                    "field": c.field.tag(),
                    "rigid_compatible": c.rigid_compatible,
                    "flagged": c.field.flagged(),
                    "isolation": c.isolation.as_ref().map(IsolationEvidence::to_json),
                    "error": c.error,
                })
            })
            .collect();
        json!({
            "manifold": self.manifold,
            "filling": self.filling,
            "solve": self.solve.as_ref().map(SolveResult::to_json),
            "cusps": cusps,
            "verdict": self.verdict.tag(),
            "error": self.error,
            "parse_failure": self.parse_failure,
            "provenance": {
                "precision_bits": self.precision_bits,
                "seed": self.seed,
                "tool_version": TOOL_VERSION,
                "tag": PROVENANCE_TAG,
            },
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json") + "\n"
    }

    /// File stem for the per-manifold JSON document.
    pub fn file_stem(&self) -> String {
        let base = match &self.filling {
            Some(f) => format!("{}_{}", self.manifold, f),
            None => self.manifold.clone(),
        };
        base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
    }
}

fn record_cusp(
    tri: &IdealTriangulation,
    cusp: usize,
    solved: &SolveResult,
    opts: &ScreenOptions,
    with_isolation: bool,
) -> CuspRecord {
    let name = tri.cusps[cusp].name.clone();
    let tau = match cusp_parameter(tri, &tri.cusps[cusp]).evaluate(&solved.shapes) {
        Ok(t) => t,
        Err(e) => {
            return CuspRecord {
                cusp: name,
                tau: None,
                minpoly: None,
                field: FieldClass::Unrecognized,
                rigid_compatible: false,
                isolation: None,
                error: Some(e.to_string()),
            }
        }
    };
    let (minpoly, field) = numberlab::recognize(&tau, opts.max_degree);
    let rigid = rigid_compatible(&field);
    let mut error = None;
    let isolation = if rigid && with_isolation {
        match isolation_verdict(tri, cusp, &solved.shapes, &opts.isolation) {
            Ok(e) => Some(e),
            Err(e) => {
                error = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };
    CuspRecord { cusp: name, tau: Some(tau), minpoly, field, rigid_compatible: rigid, isolation, error }
}

/// Screen every cusp of one triangulation at its complete structure.
pub fn screen_triangulation(name: &str, tri: &IdealTriangulation, opts: &ScreenOptions) -> ScreenReport {
    let solved = match solve_complete(tri, &opts.solver) {
        Ok(s) => s,
        Err(e) => return ScreenReport::failed(name, opts, e.to_string(), false),
    };
    let cusps: Vec<CuspRecord> = (0..tri.cusps.len()).map(|c| record_cusp(tri, c, &solved, opts, true)).collect();
    ScreenReport {
        manifold: name.to_string(),
        filling: None,
        verdict: overall(&cusps),
        solve: Some(solved),
        cusps,
        precision_bits: opts.solver.precision_bits,
        seed: opts.solver.seed,
        error: None,
        parse_failure: false,
    }
}

fn pool(opts: &ScreenOptions) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(opts.parallelism).build().expect("thread pool")
}

/// Screen files or bundled fixture names; failures stay inside their report.
pub fn screen(inputs: &[String], opts: &ScreenOptions) -> Vec<ScreenReport> {
    pool(opts).install(|| {
        inputs
            .par_iter()
            .map(|arg| {
                let Some((name, text)) = fixtures::resolve(arg) else {
                    return ScreenReport::failed(arg, opts, format!("cannot read {arg}"), true);
                };
                match parse_triangulation(&text) {
                    Ok(tri) => screen_triangulation(&name, &tri, opts),
                    Err(e) => ScreenReport::failed(&name, opts, e.to_string(), true),
                }
            })
            .collect()
    })
}

/// Fill `cusp` along each slope and screen the remaining cusps.
pub fn fill_and_screen(
    name: &str,
    tri: &IdealTriangulation,
    cusp: usize,
    slopes: &[(i64, i64)],
    opts: &ScreenOptions,
) -> Vec<ScreenReport> {
    pool(opts).install(|| {
        slopes
            .par_iter()
            .map(|&(p, q)| {
                let mut targets = vec![FillTarget::Complete; tri.cusps.len()];
                targets[cusp] = FillTarget::Filled(p, q);
                let label = format!("{}({},{})", tri.cusps[cusp].name, p, q);
                let mut report = match solve_filled(tri, &targets, &opts.solver) {
                    Ok(solved) => {
                        let cusps: Vec<CuspRecord> = (0..tri.cusps.len())
                            .filter(|&c| c != cusp)
                            .map(|c| record_cusp(tri, c, &solved, opts, false))
                            .collect();
                        let verdict = overall(&cusps);
                        ScreenReport {
                            manifold: name.to_string(),
                            filling: None,
                            verdict,
                            solve: Some(solved),
                            cusps,
                            precision_bits: opts.solver.precision_bits,
                            seed: opts.solver.seed,
                            error: None,
                            parse_failure: false,
                        }
                    }
                    Err(e) => ScreenReport::failed(name, opts, e.to_string(), false),
                };
                report.filling = Some(label);
                report
            })
            .collect()
    })
}

pub const CSV_HEADER: [&str; 6] = ["manifold", "cusp", "field", "rigid_compatible", "isolation", "provenance"];

pub fn write_csv<W: Write>(reports: &[ScreenReport], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in reports {
        let manifold = match &r.filling {
            Some(f) => format!("{} {}", r.manifold, f),
            None => r.manifold.clone(),
        };
        if r.cusps.is_empty() {
            out.write_record([manifold.as_str(), "", "", "", r.error.as_deref().unwrap_or(""), PROVENANCE_TAG])?;
        }
        for c in &r.cusps {
            let iso = c.isolation.as_ref().map(|e| e.verdict.to_string()).unwrap_or_else(|| "not run".into());
            out.write_record([
                manifold.as_str(),
                c.cusp.as_str(),
                &c.field.tag(),
                if c.rigid_compatible { "true" } else { "false" },
                &iso,
                PROVENANCE_TAG,
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Audit, then write `<stem>.json` per report and an aggregate `screen.csv`.
pub fn write_reports(reports: &[ScreenReport], dir: &Path) -> Result<Vec<PathBuf>, String> {
    for r in reports {
        r.audit()?;
    }
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let mut written = Vec::new();
    for r in reports {
        let path = dir.join(format!("{}.json", r.file_stem()));
        std::fs::write(&path, r.to_json_string()).map_err(|e| e.to_string())?;
        written.push(path);
    }
    let csv_path = dir.join("screen.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| e.to_string())?;
    write_csv(reports, file).map_err(|e| e.to_string())?;
    written.push(csv_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_are_rigid_but_not_isolated() {
        let names: Vec<String> = ["whitehead", "622", "berge"].iter().map(|s| s.to_string()).collect();
        let reports = screen(&names, &ScreenOptions::default());
        for r in &reports {
            r.audit().unwrap();
            assert_eq!(r.verdict, OverallVerdict::RigidFieldButNotIsolated, "{}", r.manifold);
        }
        assert_eq!(reports[0].cusps[0].field, FieldClass::GaussianRational);
        assert_eq!(reports[1].cusps[0].field, FieldClass::EisensteinRational);
        assert_eq!(reports[2].cusps[0].field, FieldClass::EisensteinRational);
    }

    #[test]
    fn unreadable_input_is_recorded() {
        let reports = screen(&["/nonexistent/file.json".to_string()], &ScreenOptions::default());
        assert!(reports[0].parse_failure);
        assert_eq!(reports[0].verdict, OverallVerdict::Undetermined);
    }

    #[test]
    fn audit_catches_inconsistent_verdict() {
        let mut r = ScreenReport::failed("x", &ScreenOptions::default(), "e".into(), false);
        r.verdict = OverallVerdict::FailsRigidField;
        assert!(r.audit().is_err());
    }

    #[test]
    fn exceptional_filling_is_flagged() {
        let tri = fixtures::whitehead();
        let reports = fill_and_screen("whitehead", &tri, 1, &[(0, 1), (1, 2)], &ScreenOptions::default());
        assert!(reports[0].error.is_some());
        assert_eq!(reports[0].verdict, OverallVerdict::Undetermined);
        assert_eq!(reports[1].verdict, OverallVerdict::FailsRigidField);
        assert_eq!(reports[1].cusps[0].field, FieldClass::NonQuadratic(4));
        assert_eq!(reports[1].file_stem(), "whitehead_c2_1_2_");
    }

    #[test]
    fn csv_has_provenance_column() {
        let tri = fixtures::whitehead();
        let reports = fill_and_screen("whitehead", &tri, 1, &[(1, 1)], &ScreenOptions::default());
        let mut buf = Vec::new();
        write_csv(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("manifold,cusp,field,rigid_compatible,isolation,provenance\n"));
        assert!(text.contains("\"whitehead c2(1,1)\",c1,EisensteinRational,true,not run,non-verified computation"), "{text}");
    }
}
