//! Command-line front end: solve, shape, field, isolate, fill, screen.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cuspforge::holonomy::cusp_parameter;
use cuspforge::isolation::{isolation_verdict, IsolationOptions};
use cuspforge::manifold::{parse_exponent_matrix, IdealTriangulation};
use cuspforge::numberlab::{self, rigid_compatible};
use cuspforge::screen::{self, ScreenOptions, ScreenReport, PROVENANCE_TAG, TOOL_VERSION};
use cuspforge::solver::{self, FillTarget, GluingSystem, SolveResult, SolverOptions};
use cuspforge::{fixtures, num, parse_triangulation};

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "cuspforge", version, about = "Cusp shapes, fields and isolation tests for cusped hyperbolic 3-manifolds")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = solver::DEFAULT_PRECISION, value_parser = clap::value_parser!(u32).range(64..=65536))]
    precision_bits: u32,
    /// Largest degree tried by algdep.
    #[arg(long, global = true, default_value_t = numberlab::DEFAULT_MAX_DEGREE, value_parser = parse_degree)]
    max_degree: usize,
    /// Residual threshold for solve/shape/fill; verdict threshold for isolate/screen.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Seed for solver restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; a directory for `screen` and `fill`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the gluing equations (complete, or with fillings).
    Solve {
        /// Triangulation file, exponent-matrix file, or bundled fixture name.
        input: String,
        /// Filling `CUSP:P,Q`; repeatable. Other cusps stay complete.
        #[arg(long = "fill", value_parser = parse_fill, allow_hyphen_values = true)]
        fills: Vec<(String, i64, i64)>,
    },
    /// Cusp parameters at the complete structure.
    Shape { input: String },
    /// Minimal polynomial and field of a value or of every cusp parameter.
    Field {
        input: Option<String>,
        /// A complex number such as `-2+2i` or `1,1.7320508`.
        #[arg(long, conflicts_with = "input", allow_hyphen_values = true)]
        value: Option<String>,
    },
    /// Isolation verdict for one cusp along its completeness curve.
    Isolate {
        input: String,
        /// Cusp name or index.
        #[arg(long)]
        cusp: String,
    },
    /// Fill one cusp along several slopes and screen the rest.
    Fill {
        input: String,
        /// Cusp to fill, by name or index.
        #[arg(long)]
        cusp: String,
        /// Slope `P,Q`; repeatable.
        #[arg(long = "slope", value_parser = parse_slope, allow_hyphen_values = true)]
        slopes: Vec<(i64, i64)>,
        /// Slopes (1,n) for n in `A..B` (inclusive, n = 0 skipped).
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        range: Option<(i64, i64)>,
    },
    /// Screen triangulations and write one report per manifold.
    Screen {
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        parallelism: usize,
    },
}

fn parse_degree(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if (1..=40).contains(&d) => Ok(d),
        _ => Err("expected an integer in 1..=40".into()),
    }
}

fn parse_slope(s: &str) -> Result<(i64, i64), String> {
    let (p, q) = s.split_once(',').ok_or("expected P,Q")?;
    let p = p.trim().parse::<i64>().map_err(|e| e.to_string())?;
    let q = q.trim().parse::<i64>().map_err(|e| e.to_string())?;
    Ok((p, q))
}

fn parse_fill(s: &str) -> Result<(String, i64, i64), String> {
    let (c, slope) = s.rsplit_once(':').ok_or("expected CUSP:P,Q")?;
    let (p, q) = parse_slope(slope)?;
    Ok((c.to_string(), p, q))
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a = a.trim().parse::<i64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<i64>().map_err(|e| e.to_string())?;
    if a > b {
        return Err("empty range".into());
    }
    Ok((a, b))
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

fn parse_fail(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_PARSE, msg: msg.into() }
}

fn compute(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_COMPUTE, msg: msg.into() }
}

/// Rendered output of a subcommand.
struct Output {
    json: Value,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Output {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.json).expect("json") + "\n",
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).expect("csv");
                for r in &self.rows {
                    w.write_record(r).expect("csv");
                }
                String::from_utf8(w.into_inner().expect("csv")).expect("utf8")
            }
            Format::Table => table(&self.header, &self.rows),
        }
    }
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cells: &[String]| {
        let cols: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(s, "{}", cols.join("  ").trim_end());
    };
    line(&mut s, header);
    line(&mut s, &width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for r in rows {
        line(&mut s, r);
    }
    s
}

fn provenance(c: &Common) -> Value {
    json!({
        "precision_bits": c.precision_bits,
        "seed": c.seed,
        "tool_version": TOOL_VERSION,
        "tag": PROVENANCE_TAG,
    })
}

fn solver_options(c: &Common, residual_tol: bool) -> SolverOptions {
    SolverOptions {
        precision_bits: c.precision_bits,
        tolerance: if residual_tol { c.tolerance } else { None },
        seed: c.seed,
        ..Default::default()
    }
}

fn isolation_options(c: &Common) -> IsolationOptions {
    IsolationOptions { tolerance: c.tolerance, ..Default::default() }
}

fn screen_options(c: &Common, parallelism: usize, verdict_tol: bool) -> ScreenOptions {
    ScreenOptions {
        solver: solver_options(c, !verdict_tol),
        max_degree: c.max_degree,
        isolation: if verdict_tol { isolation_options(c) } else { IsolationOptions::default() },
        parallelism,
    }
}

enum Input {
    Triangulation(IdealTriangulation),
    Matrix(GluingSystem),
}

fn read_source(arg: &str) -> Result<(String, String), Failure> {
    fixtures::resolve(arg).ok_or_else(|| parse_fail(format!("cannot read {arg}: not a file or bundled fixture")))
}

fn load_input(arg: &str, allow_matrix: bool) -> Result<(String, Input), Failure> {
    let (name, text) = read_source(arg)?;
    if !text.trim_start().starts_with('{') {
        if !allow_matrix {
            return Err(usage(format!("{arg}: exponent-matrix input is accepted by `solve` only")));
        }
        let m = parse_exponent_matrix(&text).map_err(|e| parse_fail(format!("{arg}: {e}")))?;
        let n = m.cusps.len();
        let sys = GluingSystem::from_exponent_matrix(&m, vec![FillTarget::Complete; n]).map_err(|e| parse_fail(format!("{arg}: {e}")))?;
        return Ok((name, Input::Matrix(sys)));
    }
    let tri = parse_triangulation(&text).map_err(|e| parse_fail(format!("{arg}: {e}")))?;
    Ok((name, Input::Triangulation(tri)))
}

fn load_triangulation(arg: &str) -> Result<(String, IdealTriangulation), Failure> {
    match load_input(arg, false)? {
        (name, Input::Triangulation(t)) => Ok((name, t)),
        (_, Input::Matrix(_)) => unreachable!(),
    }
}

fn shape_rows(r: &SolveResult) -> Vec<Vec<String>> {
    r.shapes
        .z
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let (re, im) = num::decimal_pair(z);
            vec![i.to_string(), re, im]
        })
        .collect()
}

fn cmd_solve(c: &Common, input: &str, fills: &[(String, i64, i64)]) -> Result<Output, Failure> {
    let (name, input) = load_input(input, true)?;
    let opts = solver_options(c, true);
    let result = match input {
        Input::Triangulation(tri) => {
            let mut targets = vec![FillTarget::Complete; tri.cusps.len()];
            for (cusp, p, q) in fills {
                let i = tri.cusp_index(cusp).map_err(|e| usage(e.to_string()))?;
                targets[i] = FillTarget::Filled(*p, *q);
            }
            solver::solve_filled(&tri, &targets, &opts)
        }
        Input::Matrix(mut sys) => {
            for (cusp, p, q) in fills {
                let i = cusp.parse::<usize>().ok().filter(|&i| i < sys.cusps.len());
                let i = i.ok_or_else(|| usage(format!("exponent-matrix cusps are indexed 0..{}", sys.cusps.len())))?;
                sys.targets[i] = FillTarget::Filled(*p, *q);
            }
            if fills.is_empty() {
                solver::solve_system_complete(&sys, &opts)
            } else {
                solver::solve_system_filled(&sys, &opts)
            }
        }
    }
    .map_err(|e| compute(format!("{name}: {e}")))?;
    let mut json = result.to_json();
    json["manifold"] = json!(name);
    json["provenance"] = provenance(c);
    Ok(Output { json, header: vec!["tet".into(), "re".into(), "im".into()], rows: shape_rows(&result) })
}

fn complete_point(c: &Common, tri: &IdealTriangulation, name: &str) -> Result<SolveResult, Failure> {
    solver::solve_complete(tri, &solver_options(c, true)).map_err(|e| compute(format!("{name}: {e}")))
}

fn cmd_shape(c: &Common, input: &str) -> Result<Output, Failure> {
    let (name, tri) = load_triangulation(input)?;
    let solved = complete_point(c, &tri, &name)?;
    let mut cusps = Vec::new();
    let mut rows = Vec::new();
    for cd in &tri.cusps {
        let tau = cusp_parameter(&tri, cd).evaluate(&solved.shapes).map_err(|e| compute(format!("{name}: {e}")))?;
        let (re, im) = num::decimal_pair(&tau);
        rows.push(vec![cd.name.clone(), re.clone(), im.clone()]);
        cusps.push(json!({"cusp": cd.name, "shape": {"re": re, "im": im}}));
    }
    let json = json!({
        "manifold": name,
        "cusps": cusps,
        "solve": solved.to_json(),
        "provenance": provenance(c),
    });
    Ok(Output { json, header: vec!["cusp".into(), "re".into(), "im".into()], rows })
}

fn field_entry(label: &str, x: &rug::Complex, max_degree: usize) -> (Value, Vec<String>) {
    let (mp, fc) = numberlab::recognize(x, max_degree);
    let (re, im) = num::decimal_pair(x);
    let rigid = rigid_compatible(&fc);
    let json = json!({
        "label": label,
        "value": {"re": re, "im": im},
        "minpoly": mp,
        "field": fc.tag(),
        "rigid_compatible": rigid,
        "flagged": fc.flagged(),
    });
    let row = vec![
        label.to_string(),
        mp.as_ref().map(|m| m.to_string()).unwrap_or_default(),
        fc.tag(),
        rigid.to_string(),
    ];
    (json, row)
}

fn cmd_field(c: &Common, input: Option<&str>, value: Option<&str>) -> Result<Output, Failure> {
    let header = vec!["label".into(), "minpoly".into(), "field".into(), "rigid_compatible".into()];
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    let name = match (input, value) {
        (_, Some(v)) => {
            let x = num::parse_complex(v, c.precision_bits).ok_or_else(|| usage(format!("cannot parse complex value `{v}`")))?;
            let (j, r) = field_entry(v, &x, c.max_degree);
            entries.push(j);
            rows.push(r);
            None
        }
        (Some(input), None) => {
            let (name, tri) = load_triangulation(input)?;
            let solved = complete_point(c, &tri, &name)?;
            for cd in &tri.cusps {
                let tau = cusp_parameter(&tri, cd).evaluate(&solved.shapes).map_err(|e| compute(format!("{name}: {e}")))?;
                let (j, r) = field_entry(&cd.name, &tau, c.max_degree);
                entries.push(j);
                rows.push(r);
            }
            Some(name)
        }
        (None, None) => return Err(usage("field needs an INPUT or --value")),
    };
    let json = json!({"manifold": name, "fields": entries, "provenance": provenance(c)});
    Ok(Output { json, header, rows })
}

fn cmd_isolate(c: &Common, input: &str, cusp: &str) -> Result<Output, Failure> {
    let (name, tri) = load_triangulation(input)?;
    let ci = tri.cusp_index(cusp).map_err(|e| usage(e.to_string()))?;
    let solved = complete_point(c, &tri, &name)?;
    let ev = isolation_verdict(&tri, ci, &solved.shapes, &isolation_options(c)).map_err(|e| compute(format!("{name}: {e}")))?;
    let mut json = ev.to_json();
    json["manifold"] = json!(name);
    json["cusp_name"] = json!(tri.cusps[ci].name);
    json["provenance"] = provenance(c);
    let d2 = ev.d2_tau.as_ref().map(|v| num::fmt_complex(v, 20)).unwrap_or_default();
    let rows = vec![vec![
        tri.cusps[ci].name.clone(),
        ev.verdict.to_string(),
        ev.pin.to_string(),
        num::fmt_complex(&ev.d_tau, 20),
        d2,
        ev.continuation_spread.as_ref().map(|s| format!("{:e}", s.to_f64())).unwrap_or_default(),
    ]];
    let header = ["cusp", "verdict", "pin", "d_tau", "d2_tau", "continuation_spread"].map(String::from).to_vec();
    Ok(Output { json, header, rows })
}

fn report_output(reports: &[ScreenReport]) -> Result<Output, Failure> {
    for r in reports {
        r.audit().map_err(compute)?;
    }
    let json = Value::Array(reports.iter().map(ScreenReport::to_json).collect());
    let mut rows = Vec::new();
    for r in reports {
        let manifold = match &r.filling {
            Some(f) => format!("{} {}", r.manifold, f),
            None => r.manifold.clone(),
        };
        if r.cusps.is_empty() {
            rows.push(vec![manifold.clone(), String::new(), String::new(), String::new(), r.error.clone().unwrap_or_default(), PROVENANCE_TAG.into()]);
        }
        for cr in &r.cusps {
            let iso = cr.isolation.as_ref().map(|e| e.verdict.to_string()).unwrap_or_else(|| "not run".into());
            rows.push(vec![manifold.clone(), cr.cusp.clone(), cr.field.tag(), cr.rigid_compatible.to_string(), iso, PROVENANCE_TAG.into()]);
        }
    }
    Ok(Output { json, header: screen::CSV_HEADER.map(String::from).to_vec(), rows })
}

fn cmd_fill(c: &Common, input: &str, cusp: &str, slopes: &[(i64, i64)], range: Option<(i64, i64)>) -> Result<(Output, Vec<ScreenReport>), Failure> {
    let (name, tri) = load_triangulation(input)?;
    let ci = tri.cusp_index(cusp).map_err(|e| usage(e.to_string()))?;
    let mut all: Vec<(i64, i64)> = slopes.to_vec();
    if let Some((a, b)) = range {
        all.extend((a..=b).filter(|&n| n != 0).map(|n| (1, n)));
    }
    if all.is_empty() {
        all.extend((-5..=5).filter(|&n| n != 0).map(|n| (1, n)));
    }
    let reports = screen::fill_and_screen(&name, &tri, ci, &all, &screen_options(c, 0, false));
    Ok((report_output(&reports)?, reports))
}

fn cmd_screen(c: &Common, inputs: &[String], parallelism: usize) -> Result<(Output, Vec<ScreenReport>), Failure> {
    let reports = screen::screen(inputs, &screen_options(c, parallelism, true));
    Ok((report_output(&reports)?, reports))
}

fn emit(out: &Output, c: &Common) -> Result<(), Failure> {
    let text = out.render(c.format);
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(|e| compute(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).and_then(|_| so.flush()).map_err(|e| compute(e.to_string()))
        }
    }
}

/// `--out` names a directory for batch commands.
fn emit_reports(out: &Output, reports: &[ScreenReport], c: &Common) -> Result<(), Failure> {
    match &c.out {
        Some(dir) => {
            let written = write_batch(reports, dir)?;
            let mut so = std::io::stdout().lock();
            for p in written {
                let _ = writeln!(so, "{}", p.display());
            }
            Ok(())
        }
        None => emit(out, c),
    }
}

fn write_batch(reports: &[ScreenReport], dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    screen::write_reports(reports, dir).map_err(compute)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let c = &cli.common;
    match &cli.command {
        Command::Solve { input, fills } => emit(&cmd_solve(c, input, fills)?, c)?,
        Command::Shape { input } => emit(&cmd_shape(c, input)?, c)?,
        Command::Field { input, value } => emit(&cmd_field(c, input.as_deref(), value.as_deref())?, c)?,
        Command::Isolate { input, cusp } => emit(&cmd_isolate(c, input, cusp)?, c)?,
        Command::Fill { input, cusp, slopes, range } => {
            let (out, reports) = cmd_fill(c, input, cusp, slopes, *range)?;
            emit_reports(&out, &reports, c)?;
        }
        Command::Screen { inputs, parallelism } => {
            let (out, reports) = cmd_screen(c, inputs, *parallelism)?;
            emit_reports(&out, &reports, c)?;
            if reports.iter().any(|r| r.parse_failure) {
                for r in reports.iter().filter(|r| r.parse_failure) {
                    eprintln!("cuspforge: {}: {}", r.manifold, r.error.as_deref().unwrap_or("parse failure"));
                }
                return Ok(EXIT_PARSE);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("cuspforge: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
