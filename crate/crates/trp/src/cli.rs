//! Command-line front end: instance I/O, the solve/dual/gap/certify/repro/
//! batch subcommands, and the JSON report schema.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::duality::{full_report, DualityReport, BIS_TOL};
use crate::linalg::{Mat, SpdMatrix, SymMatrix};
use crate::model::{ngtrp_to_gtrp, NgtrpInstance, ProblemInstance};
use crate::slemma::CERT_TOL;
use crate::solver::{dinkelbach_solve_with, oracle_search, DINK_MAX_ITERS, DINK_TOL};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Relative asymmetry above which an input matrix is rejected instead of
/// being symmetrized by averaging.
const ASYM_TOL: f64 = 1e-8;

const SCHEMA_VERSION: &str = "1";

#[derive(Parser)]
#[command(
    name = "trp",
    version,
    about = "Globally solves trace ratio maximization over the Stiefel manifold \
             and reports Lagrangian dual values, duality gaps, and machine-checkable \
             multiplier certificates.",
    after_help = "Exit codes: 0 success, 2 validation error, 3 numerical failure.\n\
                  Set TRP_LOG=error|info|debug to control logging."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Stopping tolerance for the primal iteration
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap for the primal iteration
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed for the deterministic starting point
    #[arg(long)]
    seed: Option<u64>,
    /// Extra sampling budget for an independent lower-bound cross-check
    #[arg(long)]
    samples: Option<usize>,
    /// Emit the JSON report (default)
    #[arg(long, conflicts_with = "table")]
    json: bool,
    /// Emit a human-readable table instead of JSON
    #[arg(long)]
    table: bool,
    /// Write output to FILE instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file and report the optimal ratio and maximizer
    Solve {
        path: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Report all four Lagrangian dual values of an instance
    Dual {
        path: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Report the duality gaps and the eigenspace-multiplicity condition
    Gap {
        path: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Produce verified multiplier certificates for the dual values
    Certify {
        path: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Rebuild a named benchmark and print its reference quantities
    Repro { name: String },
    /// Process every *.json instance in a directory
    Batch {
        dir: PathBuf,
        /// Number of worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        flags: CommonFlags,
    },
}

/// On-disk instance: dimensions, the three matrices, and optional affine
/// constants marking an inhomogeneous ratio to be homogenized on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub p: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalSection {
    pub value: f64,
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSection {
    pub gtrp: f64,
    pub gr: f64,
    pub gs: f64,
    pub grs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSection {
    pub gtrp: f64,
    pub gs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConditionSection {
    pub multiplicity: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrsCertificateSection {
    pub mu: f64,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "minEig")]
    pub min_eig: f64,
    #[serde(rename = "traceSlack")]
    pub trace_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsCertificateSection {
    pub rho: f64,
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    #[serde(rename = "minEig")]
    pub min_eig: f64,
    #[serde(rename = "traceS")]
    pub trace_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSection {
    pub grs: GrsCertificateSection,
    pub gs: GsCertificateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSection {
    pub solver: f64,
    pub bisection: f64,
    pub certificate: f64,
}

/// Shift applied when an inhomogeneous instance was homogenized on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationSection {
    pub alpha: f64,
    pub beta: f64,
    pub shift_a: f64,
    pub shift_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSection {
    pub tolerances: ToleranceSection,
    pub seed: u64,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogenization: Option<HomogenizationSection>,
}

/// Full JSON report emitted by the solve/dual/gap/certify subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub primal: PrimalSection,
    pub duals: DualSection,
    pub gaps: GapSection,
    pub gap_condition: GapConditionSection,
    pub certificates: CertificateSection,
    pub meta: MetaSection,
}

/// Entry point for the binary. Returns the process exit code.
pub fn run() -> i32 {
    let _ = env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("TRP_LOG", "error"),
    )
    .try_init();

    let cli = Cli::parse();
    match cli.command {
        Command::Solve { path, flags }
        | Command::Dual { path, flags }
        | Command::Gap { path, flags }
        | Command::Certify { path, flags } => cmd_report(&path, &flags),
        Command::Repro { name } => cmd_repro(&name),
        Command::Batch { dir, jobs, flags } => cmd_batch(&dir, jobs, &flags),
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::DimensionMismatch(_)
        | Error::NotPositiveDefinite { .. }
        | Error::ZeroMatrix
        | Error::RankDeficient(_)
        | Error::InvalidArgument(_) => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

fn load_matrix(name: &str, rows: &[Vec<f64>], n: usize) -> Result<SymMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "matrix {name} must be {n}x{n}"
        )));
    }
    let m = Mat::from_rows(rows)?;
    let scale = 1.0 + m.max_abs();
    if SymMatrix::asymmetry_of(&m) > ASYM_TOL * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix {name} is asymmetric beyond the {ASYM_TOL:.0e} relative tolerance"
        )));
    }
    SymMatrix::new(m)
}

fn spd_named(name: &str, base: SymMatrix) -> Result<SpdMatrix> {
    SpdMatrix::new(base).map_err(|e| match e {
        Error::NotPositiveDefinite { detail, .. } => Error::NotPositiveDefinite {
            name: name.into(),
            detail,
        },
        other => other,
    })
}

/// Parse and validate an instance file, homogenizing it when the affine
/// constants are present. Returns the solvable instance and the applied
/// shift, if any.
pub fn load_instance(path: &Path) -> Result<(ProblemInstance, Option<HomogenizationSection>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidArgument(format!(
            "malformed instance JSON at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    instance_from_file(&file)
}

/// Validate a parsed instance description.
pub fn instance_from_file(
    file: &InstanceFile,
) -> Result<(ProblemInstance, Option<HomogenizationSection>)> {
    if file.p > file.n || file.p == 0 {
        return Err(Error::DimensionMismatch(format!(
            "need 1 <= p <= n, got p = {}, n = {}",
            file.p, file.n
        )));
    }
    let a = spd_named("A", load_matrix("A", &file.a, file.n)?)?;
    let b = load_matrix("B", &file.b, file.n)?;
    let g = spd_named("G", load_matrix("G", &file.g, file.p)?)?;
    let base = ProblemInstance::new(a, b, g)?;

    match (file.alpha, file.beta) {
        (None, None) => Ok((base, None)),
        (alpha, beta) => {
            let alpha = alpha.unwrap_or(0.0);
            let beta = beta.unwrap_or(0.0);
            let tr_g = base.g().mat().trace();
            let ng = NgtrpInstance {
                base,
                alpha,
                beta,
            };
            let inst = ngtrp_to_gtrp(&ng)?;
            Ok((
                inst,
                Some(HomogenizationSection {
                    alpha,
                    beta,
                    shift_a: alpha / tr_g,
                    shift_b: beta / tr_g,
                }),
            ))
        }
    }
}

fn report_from(
    inst: &ProblemInstance,
    flags: &CommonFlags,
    homogenization: Option<HomogenizationSection>,
) -> Result<ReportFile> {
    let tol = flags.tol.unwrap_or(DINK_TOL);
    let max_iter = flags.max_iter.unwrap_or(DINK_MAX_ITERS);
    let seed = flags.seed.unwrap_or(42);

    let mut report = full_report(inst)?;
    if flags.tol.is_some() || flags.max_iter.is_some() || flags.seed.is_some() {
        let solve = dinkelbach_solve_with(inst, tol, max_iter, seed)?;
        report.gap_gtrp = (solve.value - report.dual_gtrp).abs();
        report.gap_gs = (solve.value - report.dual_gs).abs();
        report.primal = solve.value;
        report.solve = solve;
    }
    if let Some(samples) = flags.samples {
        let lower = oracle_search(inst, samples, seed);
        if lower > report.primal + 1e-8 {
            return Err(Error::Degenerate(format!(
                "sampled lower bound {lower} exceeds reported optimum {}",
                report.primal
            )));
        }
        log::info!("sampling cross-check: oracle {lower} <= primal {}", report.primal);
    }
    Ok(render_sections(&report, seed, tol, homogenization))
}

fn render_sections(
    report: &DualityReport,
    seed: u64,
    tol: f64,
    homogenization: Option<HomogenizationSection>,
) -> ReportFile {
    ReportFile {
        primal: PrimalSection {
            value: report.primal,
            x: report.solve.maximizer.mat().to_nested(),
            iterations: report.solve.iterations,
            residual: report.solve.residual,
        },
        duals: DualSection {
            gtrp: report.dual_gtrp,
            gr: report.dual_gr,
            gs: report.dual_gs,
            grs: report.dual_grs,
        },
        gaps: GapSection {
            gtrp: report.gap_gtrp,
            gs: report.gap_gs,
        },
        gap_condition: GapConditionSection {
            multiplicity: report.top_multiplicity,
            holds: report.gap_condition_holds,
        },
        certificates: CertificateSection {
            grs: GrsCertificateSection {
                mu: report.dual_grs,
                m: report.certificate.m.mat().to_nested(),
                w: report.certificate.w.mat().to_nested(),
                min_eig: report.certificate.min_eig,
                trace_slack: report.certificate.trace_slack,
            },
            gs: GsCertificateSection {
                rho: report.gs_certificate.rho,
                s: report.gs_certificate.s.mat().to_nested(),
                min_eig: report.gs_certificate.min_eig,
                trace_s: report.gs_certificate.trace_s,
            },
        },
        meta: MetaSection {
            tolerances: ToleranceSection {
                solver: tol,
                bisection: BIS_TOL,
                certificate: CERT_TOL,
            },
            seed,
            version: SCHEMA_VERSION.into(),
            homogenization,
        },
    }
}

fn format_table(r: &ReportFile) -> String {
    let mut s = String::new();
    s.push_str(&format!("primal value        {:.12}\n", r.primal.value));
    s.push_str(&format!("iterations          {}\n", r.primal.iterations));
    s.push_str(&format!("residual            {:.3e}\n", r.primal.residual));
    s.push_str(&format!("dual (plain)        {:.12}\n", r.duals.gtrp));
    s.push_str(&format!("dual (redundant)    {:.12}\n", r.duals.gr));
    s.push_str(&format!("dual (scaled)       {:.12}\n", r.duals.gs));
    s.push_str(&format!("dual (scaled+red.)  {:.12}\n", r.duals.grs));
    s.push_str(&format!("gap (plain)         {:.12}\n", r.gaps.gtrp));
    s.push_str(&format!("gap (scaled)        {:.12}\n", r.gaps.gs));
    s.push_str(&format!("top multiplicity    {}\n", r.gap_condition.multiplicity));
    s.push_str(&format!("gap closed          {}\n", r.gap_condition.holds));
    s
}

fn emit(text: &str, out: &Option<PathBuf>) -> i32 {
    match out {
        Some(path) => match fs::write(path, text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                EXIT_VALIDATION
            }
        },
        None => {
            println!("{text}");
            EXIT_OK
        }
    }
}

fn cmd_report(path: &Path, flags: &CommonFlags) -> i32 {
    let report = load_instance(path)
        .and_then(|(inst, homog)| report_from(&inst, flags, homog));
    match report {
        Ok(r) => {
            let text = if flags.table {
                format_table(&r)
            } else {
                serde_json::to_string_pretty(&r).expect("report serialization")
            };
            emit(&text, &flags.out)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn repro_gs1() -> Result<()> {
    let inst = ProblemInstance::example_gs1();
    let report = full_report(&inst)?;
    println!("v(GS1)  = {:.6}", report.primal);
    println!("v(DGS1) = {:.6}", report.dual_gs);
    println!("gap     = {:.6}", report.gap_gtrp);

    let expect = [
        (report.primal, 7.0 / 3.0, 1e-8),
        (report.dual_gs, 3.0, 1e-5),
        (report.gap_gtrp, 2.0 / 3.0, 1e-5),
    ];
    for (got, want, tol) in expect {
        if (got - want).abs() > tol {
            return Err(Error::Degenerate(format!(
                "reference value drifted: got {got}, expected {want}"
            )));
        }
    }

    let ga = crate::linalg::kron(inst.g().mat(), inst.a().mat());
    let gb = crate::linalg::kron(inst.g().mat(), inst.b().mat());
    let slack = ga.scale(report.dual_gs).sub(&gb);
    println!("rho*(G x A) - (G x B) =");
    for row in slack.to_nested() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:10.6}")).collect();
        println!("  [{}]", cells.join(", "));
    }
    Ok(())
}

fn repro_grq1() -> Result<()> {
    let mut ok = 0usize;
    let total = 50usize;
    for seed in 0..total as u64 {
        let n = 2 + (seed as usize % 3);
        let inst = crate::model::random_instance(n, 1, 7000 + seed);
        let report = full_report(&inst)?;
        if report.gap_gtrp > 1e-7 {
            return Err(Error::Degenerate(format!(
                "single-column instance (seed {seed}) shows gap {}",
                report.gap_gtrp
            )));
        }
        ok += 1;
    }
    println!("{ok}/{total} single-column instances: zero duality gap");
    Ok(())
}

fn cmd_repro(name: &str) -> i32 {
    let result = match name {
        "gs1" => repro_gs1(),
        "grq1" => repro_grq1(),
        other => {
            eprintln!("error: unknown reproduction target {other:?}; available: gs1, grq1");
            return EXIT_VALIDATION;
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct BatchRow {
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    millis: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn batch_one(path: &Path, flags: &CommonFlags) -> (BatchRow, i32) {
    let start = Instant::now();
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    match load_instance(path).and_then(|(inst, homog)| report_from(&inst, flags, homog)) {
        Ok(r) => (
            BatchRow {
                file: name,
                value: Some(r.primal.value),
                dual: Some(r.duals.gtrp),
                gap: Some(r.gaps.gtrp),
                millis: start.elapsed().as_millis(),
                error: None,
            },
            EXIT_OK,
        ),
        Err(e) => (
            BatchRow {
                file: name,
                value: None,
                dual: None,
                gap: None,
                millis: start.elapsed().as_millis(),
                error: Some(e.to_string()),
            },
            exit_code_for(&e),
        ),
    }
}

fn cmd_batch(dir: &Path, jobs: usize, flags: &CommonFlags) -> i32 {
    let entries = match fs::read_dir(dir) {
        Ok(rd) => rd,
        Err(e) => {
            eprintln!("error: cannot read directory {}: {e}", dir.display());
            return EXIT_VALIDATION;
        }
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();

    let jobs = jobs.max(1);
    let queue = Mutex::new(files.iter().cloned().enumerate().collect::<Vec<_>>());
    let results: Mutex<Vec<Option<(BatchRow, i32)>>> = Mutex::new(vec![None; files.len()]);

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(files.len().max(1)) {
            scope.spawn(|| loop {
                let item = queue.lock().unwrap().pop();
                let Some((idx, path)) = item else { break };
                let outcome = batch_one(&path, flags);
                results.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let rows: Vec<(BatchRow, i32)> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every batch entry processed"))
        .collect();

    let mut worst = EXIT_OK;
    let mut table = String::new();
    table.push_str(&format!(
        "{:<30} {:>18} {:>18} {:>14} {:>8}\n",
        "file", "value", "dual", "gap", "ms"
    ));
    for (row, code) in &rows {
        worst = worst.max(*code);
        match &row.error {
            None => table.push_str(&format!(
                "{:<30} {:>18.12} {:>18.12} {:>14.3e} {:>8}\n",
                row.file,
                row.value.unwrap(),
                row.dual.unwrap(),
                row.gap.unwrap(),
                row.millis
            )),
            Some(err) => table.push_str(&format!("{:<30} error: {err}\n", row.file)),
        }
    }

    let aggregate: Vec<&BatchRow> = rows.iter().map(|(r, _)| r).collect();
    let json = serde_json::to_string_pretty(&aggregate).expect("batch serialization");
    let text = if flags.table {
        table
    } else if flags.json {
        json
    } else {
        format!("{table}\n{json}")
    };
    let emitted = emit(&text, &flags.out);
    if emitted != EXIT_OK {
        return emitted;
    }
    worst
}
