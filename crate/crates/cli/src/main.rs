//! Command-line entry point: every verification pipeline as a
//! subcommand, JSON configs in, JSON/CSV reports out.
//!
//! Exit codes: 0 all checks pass, 1 at least one failure, 2 config or
//! input error, 3 inconclusive results only.

mod config;
mod report;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pluripot::catalog;
use pluripot::lelong;
use pluripot::potential;
use pluripot::prekopa;
use pluripot::scan::{CellValue, LineGrid, TGrid};
use report::{sig12, CheckRecord, Provenance, Report, ReportVerdict};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "pluripot",
    about = "Numerical verification runs for kernel, potential and marginal convexity claims",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan log K_t(z,z) over a complex parameter grid
    PshScan(RunArgs),
    /// Evaluate a weighted Bergman kernel at chosen points
    Bergman(RunArgs),
    /// Marginal integrals, convexity checks and p-marginal limits
    Prekopa(RunArgs),
    /// Lelong numbers, integrability indices and attenuation values
    Lelong(RunArgs),
    /// Green-energy scans over domain families
    Green(RunArgs),
    /// Robin function values, convexity scans and harmonic centers
    Robin(RunArgs),
    /// Run every acceptance criterion and print a summary table
    VerifyAll {
        /// Named suite (only "desk" is shipped)
        #[arg(long, default_value = "desk")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Serial mode: deterministic reductions, byte-identical reports
        #[arg(long)]
        serial: bool,
    },
    /// Inspect the shipped family/weight catalog
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// List every entry with the claim it exercises
    List,
    /// Show one entry in full
    Show { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scan tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Override the quadrature mesh size
    #[arg(long)]
    h: Option<f64>,
    /// Override the basis degree
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed recorded in the provenance block (randomised suites only)
    #[arg(long)]
    seed: Option<u64>,
    /// Serial mode: deterministic reductions, byte-identical reports
    #[arg(long)]
    serial: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::PshScan(args) => emit(run_psh_scan(&args)?, &args),
        Cmd::Bergman(args) => emit(run_bergman(&args)?, &args),
        Cmd::Prekopa(args) => emit(run_prekopa(&args)?, &args),
        Cmd::Lelong(args) => emit(run_lelong(&args)?, &args),
        Cmd::Green(args) => emit(run_green(&args)?, &args),
        Cmd::Robin(args) => emit(run_robin(&args)?, &args),
        Cmd::VerifyAll {
            suite,
            seed,
            out,
            serial,
        } => run_verify_all(&suite, seed, out.as_deref(), serial),
        Cmd::Catalog { action } => run_catalog(action),
    }
}

type CsvPayload = (String, Vec<&'static str>, Vec<Vec<String>>);

struct Run {
    report: Report,
    csv: Option<CsvPayload>,
    extra_csv: Vec<CsvPayload>,
}

impl Run {
    fn new(report: Report, csv: Option<CsvPayload>) -> Run {
        Run {
            report,
            csv,
            extra_csv: Vec::new(),
        }
    }
}

fn emit(mut run: Run, args: &RunArgs) -> Result<i32> {
    if args.serial {
        run.report.provenance.wall_time_ms = None;
    }
    let extra_csv = std::mem::take(&mut run.extra_csv);
    for check in &run.report.checks {
        println!(
            "[{}] {}{}",
            match check.verdict {
                ReportVerdict::Pass => "pass",
                ReportVerdict::Fail => "FAIL",
                ReportVerdict::Inconclusive => "inconclusive",
            },
            check.check,
            check
                .locator
                .as_ref()
                .map(|l| format!(" (at {l})"))
                .unwrap_or_default()
        );
    }
    if let Some(dir) = &args.out {
        let path = run.report.write_json(dir)?;
        println!("report: {}", path.display());
        if args.format == Format::Csv {
            if let Some((name, header, rows)) = &run.csv {
                let path = report::write_csv(dir, name, header, rows)?;
                println!("payload: {}", path.display());
            }
            for (name, header, rows) in &extra_csv {
                let path = report::write_csv(dir, name, header, rows)?;
                println!("payload: {}", path.display());
            }
        }
    }
    Ok(run.report.exit_code())
}

fn provenance(
    args: &RunArgs,
    subcommand: &'static str,
    h: Option<f64>,
    degree: Option<usize>,
    tol: Option<f64>,
    started: Instant,
) -> Provenance {
    Provenance {
        subcommand,
        config: Some(args.config.display().to_string()),
        grid_h: h,
        degree,
        tolerance: tol,
        seed: args.seed,
        serial: args.serial,
        wall_time_ms: if args.serial {
            None
        } else {
            Some(started.elapsed().as_millis())
        },
    }
}

fn scan_csv_rows(field: &pluripot::scan::Field) -> Vec<Vec<String>> {
    field
        .rows()
        .into_iter()
        .map(|(re, im, v, lap)| {
            vec![
                sig12(re),
                sig12(im),
                match v {
                    CellValue::Finite(x) => sig12(x),
                    CellValue::NegInf => "-inf".into(),
                    CellValue::Void => "void".into(),
                },
                lap.map(sig12).unwrap_or_default(),
            ]
        })
        .collect()
}

fn run_psh_scan(args: &RunArgs) -> Result<Run> {
    let started = Instant::now();
    let cfg: config::PshScanConfig = config::load(&args.config)?;
    let fam = cfg.family(args.h, args.degree)?;
    let tol = args.tol.or(cfg.tol);
    let scan = fam.psh_scan(tol)?;
    let checks = vec![CheckRecord {
        check: "log-kernel field has nonnegative discrete laplacian".into(),
        verdict: scan.verdict.into(),
        locator: Some(format!("t = {:.4} + {:.4}i", scan.argmin.0, scan.argmin.1)),
        detail: Some(format!(
            "min {:.6}, tol {:.6}, skipped {}",
            scan.min_laplacian, scan.tol, scan.skipped_stencils
        )),
    }];
    let rows = scan_csv_rows(&scan.field);
    let payload = serde_json::to_value(&scan)?;
    Ok(Run::new(
        Report {
            schema_version: report::SCHEMA_VERSION,
            checks,
            payload,
            provenance: provenance(
                args,
                "psh-scan",
                Some(fam.defaults.h),
                Some(fam.defaults.degree),
                Some(scan.tol),
                started,
            ),
        },
        Some((
            "field.csv".into(),
            vec!["t_re", "t_im", "field", "laplacian"],
            rows,
        )),
    ))
}

fn run_bergman(args: &RunArgs) -> Result<Run> {
    let started = Instant::now();
    let cfg: config::BergmanConfig = config::load(&args.config)?;
    let (problem, points) = cfg.build(args.h, args.degree)?;
    let engine = problem.engine()?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for z in &points {
        let eval = engine.diag(z);
        values.push(serde_json::json!({
            "z": [z[0].re, z[0].im],
            "kernel": eval.value,
            "log_kernel": eval.log_value(),
            "gram_condition": eval.gram_condition,
            "truncated": eval.truncated,
        }));
        rows.push(vec![
            sig12(z[0].re),
            sig12(z[0].im),
            sig12(eval.value),
            sig12(eval.log_value()),
        ]);
    }
    checks.push(CheckRecord {
        check: format!("kernel evaluated at {} points", points.len()),
        verdict: ReportVerdict::Pass,
        locator: None,
        detail: None,
    });
    let mut radial_json = serde_json::Value::Null;
    if cfg.radial {
        let radial = pluripot::bergman::kernel_diag_radial(&problem)?;
        let origin = vec![Complex64::new(0.0, 0.0)];
        let gram = engine.diag(&origin).value;
        let rel = (gram - radial).abs() / radial.abs().max(1e-300);
        checks.push(CheckRecord {
            check: "rotation-invariant shortcut agrees with the Gram route".into(),
            verdict: if rel < 0.02 {
                ReportVerdict::Pass
            } else {
                ReportVerdict::Fail
            },
            locator: Some("z = 0".into()),
            detail: Some(format!("gram {gram:.6}, mean-value {radial:.6}")),
        });
        radial_json = serde_json::json!(radial);
    }
    let mut extra_csv = Vec::new();
    if cfg.dump_grid {
        let dom = problem.domain();
        let d = dom.real_dim();
        let mut coords = [0.0f64; 4];
        let mut grid_rows = Vec::with_capacity(dom.cell_count());
        for idx in 0..dom.cell_count() {
            dom.node_coords(idx, &mut coords);
            let mut row: Vec<String> = coords[..d].iter().map(|&c| sig12(c)).collect();
            row.push(if dom.is_interior(idx) { "1".into() } else { "0".into() });
            row.push(sig12(dom.weight(idx)));
            grid_rows.push(row);
        }
        extra_csv.push((
            "grid.csv".to_string(),
            vec!["x", "y", "mask", "weight"],
            grid_rows,
        ));
    }
    let mut run = Run::new(
        Report {
            schema_version: report::SCHEMA_VERSION,
            checks,
            payload: serde_json::json!({ "points": values, "radial": radial_json }),
            provenance: provenance(
                args,
                "bergman",
                Some(problem.domain().h()),
                Some(problem.degree()),
                None,
                started,
            ),
        },
        Some((
            "kernel.csv".into(),
            vec!["z_re", "z_im", "kernel", "log_kernel"],
            rows,
        )),
    );
    run.extra_csv = extra_csv;
    Ok(run)
}

fn run_prekopa(args: &RunArgs) -> Result<Run> {
    let started = Instant::now();
    let cfg: config::PrekopaConfig = config::load(&args.config)?;
    let problem = cfg.build()?;
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-6);
    let values = problem.marginal()?;
    let check = prekopa::convexity_check(&values, problem.x_grid.h, tol)?;
    let mut checks = vec![CheckRecord {
        check: "marginal passes the second-difference convexity scan".into(),
        verdict: check.verdict.into(),
        locator: Some(format!("x = {:.4}", problem.x_grid.x(check.scan.argmin))),
        detail: Some(format!("min second difference {:.6}", check.scan.min)),
    }];
    let mut minimum = serde_json::Value::Null;
    if let Some(ladder) = &cfg.p_ladder {
        let rep = prekopa::minimum_principle_limit(&problem, ladder)?;
        checks.push(CheckRecord {
            check: "p-marginals approach the fiber infimum monotonically".into(),
            verdict: if rep.pass {
                ReportVerdict::Pass
            } else {
                ReportVerdict::Fail
            },
            locator: None,
            detail: Some(format!("max gap {:.5}, band {:.5}", rep.max_gap, rep.band)),
        });
        minimum = serde_json::json!({
            "ladder": rep.p_ladder,
            "max_gap": rep.max_gap,
            "band": rep.band,
            "monotone": rep.monotone_ok,
        });
    }
    let mut rows = Vec::with_capacity(values.len());
    for (i, x) in problem.x_grid.points().enumerate() {
        let second = if i > 0 && i + 1 < values.len() {
            let s = (values[i - 1] - 2.0 * values[i] + values[i + 1])
                / (problem.x_grid.h * problem.x_grid.h);
            sig12(s)
        } else {
            String::new()
        };
        rows.push(vec![sig12(x), sig12(values[i]), second]);
    }
    Ok(Run::new(
        Report {
            schema_version: report::SCHEMA_VERSION,
            checks,
            payload: serde_json::json!({
                "marginal": values,
                "min_second_difference": check.scan.min,
                "minimum_principle": minimum,
            }),
            provenance: provenance(args, "prekopa", None, None, Some(tol), started),
        },
        Some((
            "marginal.csv".into(),
            vec!["x", "phi_tilde", "second_difference"],
            rows,
        )),
    ))
}

fn run_lelong(args: &RunArgs) -> Result<Run> {
    let started = Instant::now();
    let cfg: config::LelongConfig = config::load(&args.config)?;
    let sample = cfg.build()?;
    let mut checks = Vec::new();
    let mut payload = serde_json::Map::new();
    let mut lelong_est = f64::NAN;
    let mut chi_val = f64::NAN;
    let mut eps_values: Vec<(f64, f64)> = Vec::new();
    if cfg.lelong {
        let est = lelong::lelong_number(&sample)?;
        lelong_est = est.mean_slope;
        checks.push(CheckRecord {
            check: "density and sup slope estimates agree within 0.1".into(),
            verdict: if est.dense_singularity || (est.mean_slope - est.sup_slope).abs() < 0.1 {
                ReportVerdict::Pass
            } else {
                ReportVerdict::Inconclusive
            },
            locator: None,
            detail: Some(format!(
                "mean {:.4}, sup {:.4}{}",
                est.mean_slope,
                est.sup_slope,
                if est.dense_singularity {
                    " (dense singularity)"
                } else {
                    ""
                }
            )),
        });
        payload.insert(
            "lelong".into(),
            serde_json::json!({
                "mean_slope": est.mean_slope,
                "sup_slope": est.sup_slope,
                "dense_singularity": est.dense_singularity,
            }),
        );
    }
    if cfg.integrability {
        let est = lelong::integrability_index(&sample)?;
        checks.push(CheckRecord {
            check: "integrability index located".into(),
            verdict: if est.coarse {
                ReportVerdict::Inconclusive
            } else {
                ReportVerdict::Pass
            },
            locator: None,
            detail: Some(format!(
                "estimate {:.4}, bracket [{:.4}, {:.4}]",
                est.estimate, est.bracket[0], est.bracket[1]
            )),
        });
        payload.insert(
            "integrability".into(),
            serde_json::json!({
                "estimate": est.estimate,
                "bracket": est.bracket,
                "coarse": est.coarse,
            }),
        );
    }
    for &eps in &cfg.attenuated_eps {
        let z: Vec<Complex64> = (0..sample.n())
            .map(|i| Complex64::new(sample.basepoint[2 * i], sample.basepoint[2 * i + 1]))
            .collect();
        let att = lelong::attenuated(&sample, &z, eps)?;
        eps_values.push((eps, att.value));
    }
    if !eps_values.is_empty() {
        payload.insert(
            "attenuated".into(),
            serde_json::json!(eps_values
                .iter()
                .map(|(e, v)| serde_json::json!({"eps": e, "value": v}))
                .collect::<Vec<_>>()),
        );
    }
    if cfg.chi {
        let a: Vec<Complex64> = (0..sample.n())
            .map(|i| Complex64::new(sample.basepoint[2 * i], sample.basepoint[2 * i + 1]))
            .collect();
        chi_val = lelong::chi(&sample, &a)?;
        payload.insert("chi".into(), serde_json::json!(chi_val));
    }
    if checks.is_empty() {
        checks.push(CheckRecord {
            check: "sample evaluated".into(),
            verdict: ReportVerdict::Pass,
            locator: None,
            detail: None,
        });
    }
    // per-run provenance: ladders, rule size, basis degree, mesh
    payload.insert(
        "run".into(),
        serde_json::json!({
            "radii": sample.radii(),
            "m": sample.m,
            "degree": sample.disk_degree,
            "h": sample.disk_h,
        }),
    );
    let row = vec![
        sig12(sample.basepoint[0]),
        sig12(sample.basepoint[1]),
        sig12(chi_val),
        eps_values.first().map(|(_, v)| sig12(*v)).unwrap_or_default(),
        sig12(lelong_est),
    ];
    Ok(Run::new(
        Report {
            schema_version: report::SCHEMA_VERSION,
            checks,
            payload: serde_json::Value::Object(payload),
            provenance: provenance(args, "lelong", Some(sample.disk_h), Some(sample.disk_degree), None, started),
        },
        Some((
            "singularity.csv".into(),
            vec!["a_re", "a_im", "chi", "phi_eps", "lelong_estimate"],
            vec![row],
        )),
    ))
}

fn run_green(args: &RunArgs) -> Result<Run> {
    let started = Instant::now();
    let cfg: config::GreenConfig = config::load(&args.config)?;
    let fam = cfg.build(args.h)?;
    let tol = args.tol.or(cfg.tol);
    match &cfg.mode {
        config::GreenModeConfig::ComplexSubharmonic { t_grid } => {
            let grid: TGrid = t_grid.build()?;
            let scan = potential::energy_scan_complex(&fam, grid, tol)?;
            let checks = vec![CheckRecord {
                check: "green energy has nonnegative discrete laplacian".into(),
                verdict: scan.verdict.into(),
                locator: Some(format!("t = {:.4} + {:.4}i", scan.argmin.0, scan.argmin.1)),
                detail: Some(format!("min {:.6}, tol {:.6}", scan.min_laplacian, scan.tol)),
            }];
            let rows = scan_csv_rows(&scan.field);
            let payload = serde_json::to_value(&scan)?;
            Ok(Run::new(
                Report {
                    schema_version: report::SCHEMA_VERSION,
                    checks,
                    payload,
                    provenance: provenance(args, "green", Some(cfg.h), None, tol, started),
                },
                Some((
                    "energy.csv".into(),
                    vec!["t_re", "t_im", "u", "laplacian"],
                    rows,
                )),
            ))
        }
        config::GreenModeConfig::RealConvex { t_range, t_h } => {
            let line = LineGrid::new(*t_range, *t_h);
            let scan = potential::energy_scan_real(&fam, line, tol)?;
            let checks = vec![CheckRecord {
                check: "green energy is convex along the parameter line".into(),
                verdict: scan.verdict.into(),
                locator: Some(format!("t = {:.4}", line.x(scan.scan.argmin))),
                detail: Some(format!("min second difference {:.6}, tol {:.6}", scan.scan.min, scan.tol)),
            }];
            let mut rows = Vec::new();
            for (i, t) in line.points().enumerate() {
                let second = if i > 0 && i + 1 < scan.values.len() {
                    sig12(
                        (scan.values[i - 1] - 2.0 * scan.values[i] + scan.values[i + 1])
                            / (line.h * line.h),
                    )
                } else {
                    String::new()
                };
                rows.push(vec![sig12(t), sig12(scan.values[i]), second]);
            }
            let payload = serde_json::json!({
                "values": scan.values,
                "min_second_difference": scan.scan.min,
                "tol": scan.tol,
            });
            Ok(Run::new(
                Report {
                    schema_version: report::SCHEMA_VERSION,
                    checks,
                    payload,
                    provenance: provenance(args, "green", Some(cfg.h), None, tol, started),
                },
                Some((
                    "energy.csv".into(),
                    vec!["t", "u", "second_difference"],
                    rows,
                )),
            ))
        }
    }
}

fn run_robin(args: &RunArgs) -> Result<Run> {
    let started = Instant::now();
    let cfg: config::RobinConfig = config::load(&args.config)?;
    let (rp, segments) = cfg.build(args.h)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for p in &cfg.points {
        let v = potential::robin_function(&rp, p)?;
        values.push(serde_json::json!({ "x": p, "lambda": v }));
        rows.push(vec![sig12(p[0]), sig12(p[1]), sig12(p[2]), sig12(v)]);
    }
    let mut scan_json = serde_json::Value::Null;
    if !segments.is_empty() {
        let margin = args.tol.or(cfg.margin).unwrap_or(0.01);
        let scan = potential::robin_convexity_scan(&rp, &segments, margin)?;
        checks.push(CheckRecord {
            check: "robin function strictly convex along segments".into(),
            verdict: scan.verdict.into(),
            locator: None,
            detail: Some(format!("per-segment minima {:?}", scan.per_segment_min)),
        });
        scan_json = serde_json::json!({
            "per_segment_min": scan.per_segment_min,
            "margin": scan.margin,
        });
    }
    let mut center_json = serde_json::Value::Null;
    if cfg.find_center {
        let c = potential::harmonic_center(&rp, 3)?;
        center_json = serde_json::json!(c);
        checks.push(CheckRecord {
            check: "harmonic center located".into(),
            verdict: ReportVerdict::Pass,
            locator: Some(format!("({:.4}, {:.4}, {:.4})", c[0], c[1], c[2])),
            detail: None,
        });
    }
    if checks.is_empty() {
        checks.push(CheckRecord {
            check: format!("robin function evaluated at {} points", cfg.points.len()),
            verdict: ReportVerdict::Pass,
            locator: None,
            detail: None,
        });
    }
    Ok(Run::new(
        Report {
            schema_version: report::SCHEMA_VERSION,
            checks,
            payload: serde_json::json!({
                "values": values,
                "scan": scan_json,
                "center": center_json,
            }),
            provenance: provenance(args, "robin", Some(cfg.h), None, None, started),
        },
        Some((
            "robin.csv".into(),
            vec!["x1", "x2", "x3", "lambda"],
            rows,
        )),
    ))
}

fn run_verify_all(suite: &str, seed: u64, out: Option<&std::path::Path>, serial: bool) -> Result<i32> {
    if suite != "desk" {
        bail!("unknown suite `{suite}`; only `desk` is shipped");
    }
    let started = Instant::now();
    let outcomes = pluripot::verify::run_all(seed);
    let mut failed = 0usize;
    for out in &outcomes {
        println!(
            "criterion {:2} [{}] {}",
            out.id,
            if out.passed { "PASS" } else { "FAIL" },
            out.name
        );
        print!("{}", out.details);
        if !out.passed {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        outcomes.len() - failed,
        outcomes.len()
    );
    let checks = outcomes
        .iter()
        .map(|o| CheckRecord {
            check: format!("criterion {}: {}", o.id, o.name),
            verdict: if o.passed {
                ReportVerdict::Pass
            } else {
                ReportVerdict::Fail
            },
            locator: None,
            detail: Some(o.details.clone()),
        })
        .collect();
    let report = Report {
        schema_version: report::SCHEMA_VERSION,
        checks,
        payload: serde_json::to_value(&outcomes)?,
        provenance: Provenance {
            subcommand: "verify-all",
            config: None,
            grid_h: None,
            degree: None,
            tolerance: None,
            seed: Some(seed),
            serial,
            wall_time_ms: if serial {
                None
            } else {
                Some(started.elapsed().as_millis())
            },
        },
    };
    if let Some(dir) = out {
        let path = report.write_json(dir)?;
        println!("report: {}", path.display());
    }
    Ok(report.exit_code())
}

fn run_catalog(action: CatalogAction) -> Result<i32> {
    match action {
        CatalogAction::List => {
            for e in catalog::entries() {
                println!("{:24} {}", e.name, e.summary);
                println!("{:24} claim: {}", "", e.claim);
            }
            Ok(0)
        }
        CatalogAction::Show { name } => match catalog::find(&name) {
            Some(e) => {
                println!("{}", e.name);
                println!("  {}", e.summary);
                println!("  claim: {}", e.claim);
                for (k, v) in &e.fields {
                    println!("  {k}: {v}");
                }
                Ok(0)
            }
            None => bail!("unknown catalog entry `{name}`"),
        },
    }
}
