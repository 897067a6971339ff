use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use undulate::sim::compare::{compare_reduced_engine, ComparisonSettings};
use undulate::sim::plot::{render_svg, PlotSpec};
use undulate::sim::scenario::{run_variant_recorded, Scenario, VariantRun, BUILTIN_NAMES};
use undulate::sim::table::write_csv;
use undulate::Error;

#[derive(Parser)]
#[command(name = "undulate", version, about = "Simulate two-link wheeled robots on fixed and free platforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a scenario file.
    Run {
        /// Built-in name, or path to a scenario TOML file.
        scenario: String,
        /// Directory for the artifacts.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Write one CSV table per variant.
        #[arg(long)]
        csv: bool,
        /// Write an SVG plot of all variants.
        #[arg(long)]
        svg: bool,
        /// Scenario file to run in place of the built-in settings; the
        /// positional name then only labels the artifacts.
        #[arg(long, value_name = "FILE")]
        seed_config: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    List,
    /// Check a scenario file, or export the built-ins as scenario files.
    Validate {
        config: Option<PathBuf>,
        /// Write every built-in scenario as `<name>.toml` into this directory.
        #[arg(long, value_name = "DIR")]
        emit_defaults: Option<PathBuf>,
    },
    /// Cross-check the reduced model against the constrained engine.
    Compare {
        /// Momentum is compared only where |sin α| exceeds this.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
    /// Run every built-in scenario in parallel and write CSV and SVG artifacts.
    Figures {
        #[arg(long, default_value = "figures")]
        out: PathBuf,
    },
}

/// Exit status 1 for bad input, 2 for a numerical failure.
fn exit_code(err: &Error) -> u8 {
    if err.is_validation() || matches!(err, Error::Io { .. } | Error::Csv { .. }) {
        1
    } else {
        2
    }
}

fn resolve(name: &str) -> Result<Scenario, Error> {
    let path = Path::new(name);
    if !BUILTIN_NAMES.contains(&name) && path.extension().is_some_and(|e| e == "toml") {
        Scenario::load(path)
    } else {
        Scenario::builtin(name)
    }
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn summarize(name: &str, run: &VariantRun, stopped: bool) {
    let traj = &run.trajectory;
    let (Some(first), Some(last)) = (traj.first(), traj.last()) else {
        println!("{name}/{}: no samples", traj.label);
        return;
    };
    let e0 = first.diagnostics.total_energy();
    let drift = (last.diagnostics.total_energy() - e0).abs() / e0.abs().max(f64::MIN_POSITIVE);
    let steps = if stopped {
        "stopped early".to_string()
    } else {
        format!("{} steps ({} rejected)", run.stats.accepted, run.stats.rejected)
    };
    println!(
        "{name}/{}: {} samples to t = {:.3}, {steps}, max residual {:.2e}, max |P| {:.2e}, energy change {:.2e}",
        traj.label,
        traj.len(),
        last.t,
        traj.max_constraint_residual(),
        traj.max_momentum_norm(),
        drift,
    );
}

/// Runs all variants and writes the requested artifacts, including partial
/// ones when integration stops early. Returns the first numerical failure.
fn run_and_write(scenario: &Scenario, label: &str, out: &Path, csv: bool, svg: bool) -> Result<Option<Error>, Error> {
    scenario.validate()?;
    create_dir(out)?;
    let mut runs = Vec::with_capacity(scenario.variants.len());
    let mut failure = None;
    for variant in &scenario.variants {
        let (run, err) = run_variant_recorded(scenario, variant)?;
        summarize(label, &run, err.is_some());
        if csv {
            let file = if scenario.variants.len() == 1 {
                format!("{label}.csv")
            } else {
                format!("{label}_{}.csv", variant.label)
            };
            write_csv(&run.trajectory, &out.join(file))?;
        }
        runs.push(run.trajectory);
        if let Some(e) = err {
            failure = Some(e);
            break;
        }
    }
    if svg {
        let mut spec = PlotSpec::for_scenario(&scenario.name);
        spec.title = label.to_string();
        render_svg(&runs, &spec, &out.join(format!("{label}.svg")))?;
    }
    Ok(failure)
}

fn report(label: &str, outcome: Result<Option<Error>, Error>) -> u8 {
    match outcome {
        Ok(None) => 0,
        Ok(Some(err)) | Err(err) => {
            eprintln!("{label}: {err}");
            exit_code(&err)
        }
    }
}

fn execute(command: Command) -> u8 {
    match command {
        Command::Run {
            scenario,
            out,
            csv,
            svg,
            seed_config,
        } => {
            let loaded = match &seed_config {
                Some(path) => Scenario::load(path),
                None => resolve(&scenario),
            };
            let label = Path::new(&scenario)
                .file_stem()
                .map_or(scenario.clone(), |s| s.to_string_lossy().into_owned());
            // no artifact flag means all artifacts
            let (csv, svg) = if csv || svg { (csv, svg) } else { (true, true) };
            report(&label, loaded.and_then(|s| run_and_write(&s, &label, &out, csv, svg)))
        }
        Command::List => {
            for s in Scenario::builtins() {
                println!("{:<16} {}", s.name, s.description);
            }
            0
        }
        Command::Validate { config, emit_defaults } => {
            if config.is_none() && emit_defaults.is_none() {
                eprintln!("validate: give a scenario file or --emit-defaults DIR");
                return 1;
            }
            if let Some(dir) = emit_defaults {
                let written = create_dir(&dir).and_then(|()| {
                    Scenario::builtins()
                        .iter()
                        .try_for_each(|s| s.save(&dir.join(format!("{}.toml", s.name))))
                });
                if let Err(e) = written {
                    eprintln!("{e}");
                    return exit_code(&e);
                }
                println!("wrote {} scenario files to {}", BUILTIN_NAMES.len(), dir.display());
            }
            if let Some(path) = config {
                match Scenario::load(&path) {
                    Ok(s) => println!("{}: valid scenario `{}` with {} variant(s)", path.display(), s.name, s.variants.len()),
                    Err(e) => {
                        eprintln!("{e}");
                        return exit_code(&e);
                    }
                }
            }
            0
        }
        Command::Compare { delta } => {
            if !(delta.is_finite() && delta >= 0.0) {
                eprintln!("compare: --delta must be a non-negative number, got {delta}");
                return 1;
            }
            let settings = ComparisonSettings {
                exclusion: delta,
                ..ComparisonSettings::oracle_default()
            };
            match compare_reduced_engine(&settings) {
                Ok(r) => {
                    let [x, y, theta, alpha] = r.pose_gap;
                    println!("samples           {}", r.samples);
                    println!("gap x             {x:.3e}");
                    println!("gap y             {y:.3e}");
                    println!("gap theta         {theta:.3e}");
                    println!("gap alpha         {alpha:.3e}");
                    println!(
                        "gap p             {:.3e} (relative {:.3e}, {} samples with |sin alpha| > {delta})",
                        r.momentum_gap,
                        r.relative_momentum_gap(),
                        r.momentum_samples
                    );
                    0
                }
                Err(e) => {
                    eprintln!("compare: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Figures { out } => {
            let codes: Vec<u8> = Scenario::builtins()
                .par_iter()
                .map(|s| report(&s.name, run_and_write(s, &s.name, &out, true, true)))
                .collect();
            codes.into_iter().max().unwrap_or(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    ExitCode::from(execute(cli.command))
}
