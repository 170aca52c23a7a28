//! Command-line front end: verification runs with text or JSON reports.
//!
//! Exit codes: 0 all checks passed, 1 at least one FAIL, 2 usage or I/O
//! error. Reports are byte-identical for identical (catalog, seed, flags)
//! at any `--jobs` value; `--timings` opts into wall-clock fields and gives
//! that determinism up.

use crate::catalog::{known_errata, Catalog, CatalogRow};
use crate::classify::{
    reduced_differential_part, verify_invariant_rep, verify_source,
};
use crate::collision::{
    collision_integral_mc, collision_moments, maxwellian, verify_reduced_1_2, verify_reduced_1_8,
    CollisionKernel, McConfig,
};
use crate::expr::Expr;
use crate::geometry::{pushforward, ChartName};
use crate::liealg::{commutator_table, l11_basis, verify_x11_scaling};
use crate::report::{catalog_hash, CheckStatus, Overall, Report, RowVerdict};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;

/// Prints a line, tolerating a closed pipe (e.g. `lieboltz brackets | head`).
fn emit(line: std::fmt::Arguments<'_>) -> bool {
    let mut out = std::io::stdout().lock();
    out.write_fmt(line).and_then(|_| out.write_all(b"\n")).is_ok()
}

macro_rules! outln {
    ($($arg:tt)*) => {
        if !emit(format_args!($($arg)*)) {
            return 0;
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhatToVerify {
    Source,
    Invariants,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CollisionTest {
    Maxwellian,
    Moments,
    Scaling,
    #[value(name = "reduced-1.8")]
    Reduced18,
    #[value(name = "reduced-1.2")]
    Reduced12,
}

#[derive(Debug, Parser)]
#[command(
    name = "lieboltz",
    version,
    about = "Audits the source-term classification tables of the kinetic equation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct VerifyOpts {
    /// Catalog file; the built-in transcription is used when absent.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Row filter, repeatable; matches a row id or a case-split base id.
    #[arg(long)]
    id: Vec<String>,
    /// Restrict to one subalgebra dimension.
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long, value_enum, default_value = "both")]
    what: WhatToVerify,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Monte-Carlo sample count (collision checks only; accepted here for
    /// flag uniformity).
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Worker threads for the row fan-out; 0 keeps the library default.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Fill wall_ms with real durations (breaks byte-for-byte report
    /// determinism).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify filtered catalog rows against their determining equations
    /// and invariant representations.
    Verify(VerifyOpts),
    /// Verify every catalog row.
    VerifyAll(VerifyOpts),
    /// Print the commutator table of the symmetry algebra.
    Brackets {
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Push one basis generator to another chart.
    Transform {
        /// Basis index 1..11.
        #[arg(long)]
        basis: usize,
        #[arg(long, value_enum)]
        chart: ChartName,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Print the reduced differential part of a row in invariant variables.
    Reduce {
        #[arg(long)]
        id: String,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Numerical collision-integral checks.
    Collision {
        #[arg(long, value_enum)]
        test: CollisionTest,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

fn load_catalog(path: &Option<PathBuf>) -> Result<(Catalog, String), String> {
    match path {
        None => Ok((
            Catalog::builtin().clone(),
            catalog_hash(crate::catalog::BUILTIN_CATALOG),
        )),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            let catalog = Catalog::parse(&text).map_err(|e| e.to_string())?;
            Ok((catalog, catalog_hash(&text)))
        }
    }
}

fn configure_jobs(jobs: usize) {
    if jobs > 0 {
        // ignore failure when a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Verify(opts) => run_verify(opts, false),
        Command::VerifyAll(opts) => run_verify(opts, true),
        Command::Brackets { format } => run_brackets(format),
        Command::Transform {
            basis,
            chart,
            format,
        } => run_transform(basis, chart, format),
        Command::Reduce {
            id,
            catalog,
            format,
        } => run_reduce(&id, &catalog, format),
        Command::Collision { test, n, seed } => run_collision(test, n, seed),
    }
}

fn aspect_overall(verdict: &RowVerdict) -> &'static str {
    match verdict.overall {
        Overall::Pass => "PASS",
        Overall::PassNumeric => "PASS-numeric",
        Overall::Fail => "FAIL",
        Overall::Skip => "SKIP(None)",
    }
}

fn run_verify(opts: VerifyOpts, all: bool) -> i32 {
    configure_jobs(opts.jobs);
    let (catalog, hash) = match load_catalog(&opts.catalog) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let rows: Vec<&CatalogRow> = if all || (opts.id.is_empty() && opts.dim.is_none()) {
        catalog.rows.iter().collect()
    } else {
        let mut picked: Vec<&CatalogRow> = Vec::new();
        for id in &opts.id {
            let matched = catalog.matching(id);
            if matched.is_empty() {
                eprintln!("error: no catalog row matches id `{id}`");
                return 2;
            }
            picked.extend(matched);
        }
        if let Some(dim) = opts.dim {
            if opts.id.is_empty() {
                picked = catalog.rows.iter().filter(|r| r.dimension == dim).collect();
            } else {
                picked.retain(|r| r.dimension == dim);
            }
        }
        picked
    };
    if rows.is_empty() {
        eprintln!("error: row filter selected nothing");
        return 2;
    }
    let what = opts.what;
    let results: Vec<Result<(RowVerdict, Vec<(String, String)>), String>> = rows
        .par_iter()
        .map(|row| {
            let start = std::time::Instant::now();
            let mut checks = Vec::new();
            let mut aspects = Vec::new();
            let mut skip = false;
            if matches!(what, WhatToVerify::Source | WhatToVerify::Both) {
                let v = verify_source(&catalog, row, opts.seed).map_err(|e| e.to_string())?;
                aspects.push(("source".to_string(), aspect_overall(&v).to_string()));
                checks.extend(v.checks);
            }
            if matches!(what, WhatToVerify::Invariants | WhatToVerify::Both) {
                let v =
                    verify_invariant_rep(&catalog, row, opts.seed).map_err(|e| e.to_string())?;
                aspects.push(("invariants".to_string(), aspect_overall(&v).to_string()));
                if v.overall == Overall::Skip {
                    skip = matches!(what, WhatToVerify::Invariants);
                }
                checks.extend(v.checks);
            }
            let mut verdict =
                RowVerdict::aggregate(&row.id, &row.chart.to_string(), checks, skip);
            if opts.timings {
                verdict.wall_ms = start.elapsed().as_millis() as u64;
            }
            Ok((verdict, aspects))
        })
        .collect();
    let mut verdicts = Vec::with_capacity(results.len());
    let mut aspect_lines = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok((v, aspects)) => {
                aspect_lines.push((v.id.clone(), aspects));
                verdicts.push(v);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    let report = Report::new(hash, verdicts);
    match opts.format {
        OutputFormat::Json => {
            outln!("{}", serde_json::to_string_pretty(&report).unwrap());
        }
        OutputFormat::Text => {
            for v in &report.rows {
                let aspects = aspect_lines
                    .iter()
                    .find(|(id, _)| *id == v.id)
                    .map(|(_, a)| {
                        a.iter()
                            .map(|(k, s)| format!("{k}={s}"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .unwrap_or_default();
                outln!("{:>7}  {:<11} {}", v.id, v.chart, aspects);
                for c in &v.checks {
                    if c.status == CheckStatus::Fail {
                        let witness = c
                            .witness
                            .as_ref()
                            .map(|w| format!(" witness {w}"))
                            .unwrap_or_default();
                        outln!("         FAIL {}{witness}", c.name);
                    }
                }
            }
            let s = &report.summary;
            outln!(
                "summary: pass {} pass-numeric {} fail {} skip {}",
                s.pass, s.pass_numeric, s.fail, s.skip
            );
            if s.fail > 0 {
                outln!("errata registry covers:");
                for e in known_errata() {
                    outln!("  {} ({}): {}", e.subject, e.field, e.note);
                }
            }
        }
    }
    if report.summary.fail > 0 {
        1
    } else {
        0
    }
}

fn run_brackets(format: OutputFormat) -> i32 {
    let table = match commutator_table() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match format {
        OutputFormat::Json => {
            // 11x11 array of 11-vectors of rational coefficients as "p/q"
            let as_strings: Vec<Vec<Vec<String>>> = table
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|combo| {
                            combo
                                .coeffs
                                .iter()
                                .map(|c| {
                                    let r = c.as_rational().cloned().unwrap_or_default();
                                    format!("{}/{}", r.numer(), r.denom())
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            outln!("{}", serde_json::to_string(&as_strings).unwrap());
        }
        OutputFormat::Text => {
            for (i, row) in table.iter().enumerate() {
                for (j, combo) in row.iter().enumerate() {
                    if j <= i {
                        continue;
                    }
                    let terms: Vec<String> = combo
                        .coeffs
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(k, c)| {
                            if c.is_one() {
                                format!("X{}", k + 1)
                            } else {
                                format!("{}*X{}", c, k + 1)
                            }
                        })
                        .collect();
                    let rhs = if terms.is_empty() {
                        "0".to_string()
                    } else {
                        terms.join(" + ")
                    };
                    outln!("[X{}, X{}] = {rhs}", i + 1, j + 1);
                }
            }
        }
    }
    0
}

fn run_transform(basis: usize, chart: ChartName, format: OutputFormat) -> i32 {
    if !(1..=11).contains(&basis) {
        eprintln!("error: basis index must be 1..11");
        return 2;
    }
    let cart = l11_basis(ChartName::Cartesian);
    let vf = match pushforward(&cart[basis - 1], chart) {
        Ok(vf) => vf,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let coords = crate::geometry::Chart::get(chart).coords;
    match format {
        OutputFormat::Json => {
            let mut map = serde_json::Map::new();
            for (k, coeff) in vf.coefficients().iter().enumerate() {
                if !coeff.is_zero() {
                    map.insert(
                        coords[k].to_string(),
                        serde_json::Value::String(coeff.to_string()),
                    );
                }
            }
            let out = serde_json::json!({
                "basis": basis,
                "chart": chart.to_string(),
                "coefficients": serde_json::Value::Object(map),
            });
            println!("{out}");
        }
        OutputFormat::Text => {
            let mut pieces = Vec::new();
            for (k, coeff) in vf.coefficients().iter().enumerate() {
                if coeff.is_zero() {
                    continue;
                }
                if coeff.is_one() {
                    pieces.push(format!("∂_{}", coords[k]));
                } else {
                    pieces.push(format!("({}) ∂_{}", coeff, coords[k]));
                }
            }
            println!(
                "X{basis} on {chart}: {}",
                if pieces.is_empty() {
                    "0".to_string()
                } else {
                    pieces.join(" + ")
                }
            );
        }
    }
    0
}

fn run_reduce(id: &str, catalog_path: &Option<PathBuf>, format: OutputFormat) -> i32 {
    let (catalog, _) = match load_catalog(catalog_path) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let rows = catalog.matching(id);
    let Some(row) = rows.first() else {
        eprintln!("error: no catalog row matches id `{id}`");
        return 2;
    };
    match reduced_differential_part(&catalog, row) {
        Ok(form) => {
            match format {
                OutputFormat::Json => {
                    let invariants: serde_json::Map<String, serde_json::Value> = form
                        .invariants
                        .iter()
                        .map(|(name, expr)| {
                            (name.clone(), serde_json::Value::String(expr.to_string()))
                        })
                        .collect();
                    let out = serde_json::json!({
                        "id": row.id,
                        "chart": row.chart.to_string(),
                        "prefactor": form.prefactor.to_string(),
                        "reduced": form.reduced.to_string(),
                        "invariants": invariants,
                    });
                    println!("{}", serde_json::to_string_pretty(&out).unwrap());
                }
                OutputFormat::Text => {
                    println!("row {} ({})", row.id, row.chart);
                    for (name, expr) in &form.invariants {
                        println!("  {name} = {expr}");
                    }
                    println!("  transport part = ({}) * [ {} ]", form.prefactor, form.reduced);
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run_collision(test: CollisionTest, n: usize, seed: u64) -> i32 {
    let cfg = match McConfig::new(n, seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let kernel = CollisionKernel::pseudo_maxwell();
    let mut failed = false;
    match test {
        CollisionTest::Maxwellian => {
            let f = maxwellian(1.0, [0.2, -0.1, 0.0], 0.9);
            match collision_integral_mc(&f, &[0.0; 3], &[0.4, 0.1, -0.3], 1.0, &kernel, &cfg) {
                Ok(est) => {
                    let scale = est.loss.value.abs();
                    let ok = est.value.value.abs()
                        <= 3.0 * est.value.stderr + 1e-12 * scale
                        && est.loss.stderr / scale < 0.01;
                    failed |= !ok;
                    println!(
                        "maxwellian-annihilation: {} (estimate {:.3e}, stderr {:.3e}, loss scale {:.3e})",
                        if ok { "PASS" } else { "FAIL" },
                        est.value.value,
                        est.value.stderr,
                        scale
                    );
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        CollisionTest::Moments => {
            let f = move |x: &crate::collision::Vec3, v: &crate::collision::Vec3, t: f64| {
                maxwellian(1.0, [0.6, 0.0, 0.0], 0.8)(x, v, t)
                    + maxwellian(0.8, [-0.7, 0.1, 0.0], 1.1)(x, v, t)
            };
            let inner = McConfig {
                samples: (n / 500).max(1000),
                seed,
                proposal_sd: cfg.proposal_sd,
            };
            match collision_moments(&f, &[0.0; 3], 1.0, &kernel, &inner, 5.0, 8) {
                Ok(checks) => {
                    for c in checks {
                        let ok = c.direct.value.abs() <= 3.0 * c.direct.stderr + 1e-10;
                        failed |= !ok;
                        println!(
                            "moment[{}]: {} (estimate {:.3e}, stderr {:.3e}, symmetrized max {:.1e})",
                            c.label,
                            if ok { "PASS" } else { "FAIL" },
                            c.direct.value,
                            c.direct.stderr,
                            c.symmetrized_max
                        );
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        CollisionTest::Scaling => {
            let f0 = Expr::parse(
                "exp(0 - (13*u^2 + 7*v^2 + 10*w^2)/20 - (x^2 + y^2 + z^2)/8 - t^2/10)",
            )
            .unwrap();
            match verify_x11_scaling(&f0, 0.5, &cfg) {
                Ok(checks) => {
                    for c in checks {
                        failed |= !c.passed;
                        println!(
                            "scaling[{}]: {} ({})",
                            c.name,
                            if c.passed { "PASS" } else { "FAIL" },
                            c.detail
                        );
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        CollisionTest::Reduced18 | CollisionTest::Reduced12 => {
            let result = match test {
                CollisionTest::Reduced18 => {
                    verify_reduced_1_8(&[1.0, 1.0, 1.0], &[0.3, -0.2, 0.1], 2.0, &cfg)
                }
                _ => verify_reduced_1_2(0.7, &[0.8, 1.1, 0.9], &[0.4, -0.3, 0.2], 2.0, &cfg),
            };
            match result {
                Ok(cmp) => {
                    let scale = cmp.cartesian.value.abs().max(cmp.reduced.value.abs());
                    let ok = cmp.coupled_diff.value.abs()
                        <= 3.0 * cmp.coupled_diff.stderr + 1e-12 * scale;
                    failed |= !ok;
                    let ratio = cmp.cartesian.value / cmp.reduced.value;
                    println!(
                        "reduced-collision: {} (J_full {:.5e}, J_reduced {:.5e}, ratio {:.4} vs factor {:.4}, coupled diff {:.2e})",
                        if ok { "PASS" } else { "FAIL" },
                        cmp.cartesian.value,
                        cmp.reduced.value,
                        ratio,
                        cmp.factor,
                        cmp.coupled_diff.value
                    );
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
    }
    if failed {
        1
    } else {
        0
    }
}
