//! Experiment runner: catalog listing, configured runs, regression baselines.

mod bundle;
mod experiments;
mod params;

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bundle::{diff_bundles, write_bundle, ReportBundle};
use params::Params;
use submet_core::spaces::CATALOG_SPACES;
use submet_core::submetry::CATALOG_SUBMETRIES;

const DEFAULT_SEED: u64 = 20240817;

#[derive(Parser)]
#[command(name = "submet", about = "submetry workbench experiment runner", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List spaces, submetries, algebras, and named experiments.
    Catalog,
    /// Run a named experiment and write its report bundle.
    Run {
        experiment: String,
        /// key = value overrides, e.g. `--phi 0.7 --n 4000`
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Compare a bundle against a stored baseline (or store it with --init).
    Baseline {
        bundle: PathBuf,
        file: PathBuf,
        #[arg(long)]
        init: bool,
    },
}

const ALGEBRAS: &[(&str, &str)] = &[
    ("s2-zonal", "z"),
    ("s2-even", "z^2"),
    ("s2-cubic", "z^3"),
    ("s3-hopf-quadrics", "h1, h2, h3"),
];

fn catalog() {
    println!("spaces:");
    for s in CATALOG_SPACES {
        println!("  {s}");
    }
    println!("submetries:");
    for s in CATALOG_SUBMETRIES {
        println!("  {s}");
    }
    println!("algebras:");
    for (name, gens) in ALGEBRAS {
        println!("  {name}: {gens}");
    }
    println!("experiments:");
    for e in experiments::EXPERIMENTS {
        println!("  {}: {}", e.name, e.about);
    }
}

fn run(experiment: &str, overrides: &[String]) -> ExitCode {
    let Some(exp) = experiments::find(experiment) else {
        eprintln!("unknown experiment `{experiment}`; see `submet catalog`");
        return ExitCode::from(2);
    };
    // config file first (if any), then flags on top
    let mut params = Params::default();
    let mut config_path: Option<String> = None;
    {
        let mut probe = Params::default();
        if probe.apply_overrides(overrides).is_ok() {
            config_path = probe.get("config").map(str::to_string);
        }
    }
    if let Some(path) = &config_path {
        params = match Params::load_section(Path::new(path), experiment) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        };
    }
    if let Err(e) = params.apply_overrides(overrides) {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    if let Err(e) = params.check_keys(exp.keys) {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    let seed = match params.u64("seed", DEFAULT_SEED) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let outdir = PathBuf::from(params.get("out").unwrap_or("out"));
    match (exp.run)(&params, seed) {
        Ok(output) => {
            let bundle = ReportBundle::new(experiment, seed, output.reports, output.traces);
            if let Err(e) = write_bundle(&outdir, &bundle, &output.artifacts) {
                eprintln!("cannot write {}: {e}", outdir.display());
                return ExitCode::from(1);
            }
            for r in &bundle.reports {
                println!(
                    "{} [{}] {}: spread {:.3e} (tol {:.1e})",
                    if r.pass { "pass" } else { "FAIL" },
                    r.case,
                    r.operation,
                    r.spread,
                    r.tolerance
                );
            }
            for t in &bundle.traces {
                println!(
                    "{} [{}] trace: series {:.9} vs direct {:.9}",
                    if t.pass { "pass" } else { "FAIL" },
                    t.case,
                    t.trace_series_accel,
                    t.trace_direct
                );
            }
            println!(
                "{}: {} -> {}",
                experiment,
                if bundle.pass { "pass" } else { "FAIL" },
                outdir.join("bundle.json").display()
            );
            if bundle.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{experiment}: {e}");
            match e {
                submet_core::Error::UnknownSpace(_)
                | submet_core::Error::UnknownSubmetry(_)
                | submet_core::Error::PolyParse { .. }
                | submet_core::Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn baseline(bundle_path: &Path, file: &Path, init: bool) -> ExitCode {
    let bundle_text = match std::fs::read_to_string(bundle_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read bundle {}: {e}", bundle_path.display());
            return ExitCode::from(2);
        }
    };
    if init {
        if let Some(dir) = file.parent() {
            let _ = std::fs::create_dir_all(dir);
        }
        if let Err(e) = std::fs::write(file, &bundle_text) {
            eprintln!("cannot write baseline {}: {e}", file.display());
            return ExitCode::from(2);
        }
        println!("baseline written: {}", file.display());
        return ExitCode::SUCCESS;
    }
    let baseline_text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(_) => {
            eprintln!(
                "baseline {} does not exist; pass --init to create it",
                file.display()
            );
            return ExitCode::from(2);
        }
    };
    let a: serde_json::Value = match serde_json::from_str(&bundle_text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("bundle is not valid JSON: {e}");
            return ExitCode::from(2);
        }
    };
    let b: serde_json::Value = match serde_json::from_str(&baseline_text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("baseline is not valid JSON: {e}");
            return ExitCode::from(2);
        }
    };
    let drift = diff_bundles(&b, &a, 1e-9);
    if drift.is_empty() {
        println!("no drift against {}", file.display());
        ExitCode::SUCCESS
    } else {
        for field in &drift {
            println!("drift: {field}");
        }
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Catalog => {
            catalog();
            ExitCode::SUCCESS
        }
        Cmd::Run { experiment, overrides } => run(&experiment, &overrides),
        Cmd::Baseline { bundle, file, init } => baseline(&bundle, &file, init),
    }
}
