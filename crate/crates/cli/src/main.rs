//! `dnls`: experiments on cubic derivative NLS systems.

mod analyze;
mod check;
mod config;
mod pipeline;
mod rundir;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dnls_core::analysis::{integrate_reduced, kms_verify, KmsInput};
use dnls_core::structure::Condition;
use dnls_core::{CubicSystem, Error, HermitianForm, SamplePlan};
use rayon::prelude::*;

const EXIT_VIOLATED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BLOWUP: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dnls",
    version,
    about = "Numerical lab for 1D cubic derivative NLS systems"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Overrides the seed of the condition-check sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parent directory for run directories.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural conditions of a model.
    Check {
        model: PathBuf,
        /// Hermitian matrix A as text, one row per line.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Conditions to require (a, gauge, b0, b1, b2, b3); default classifies.
        #[arg(long, value_delimiter = ',')]
        condition: Vec<String>,
        #[arg(long, default_value_t = dnls_core::structure::DEFAULT_XI_SAMPLES)]
        xi_samples: usize,
        #[arg(long, default_value_t = dnls_core::structure::DEFAULT_SPHERE_SAMPLES)]
        sphere_samples: usize,
        /// Print the JSON summary instead of the text report.
        #[arg(long)]
        json: bool,
    },
    /// Run the solver for one config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the model named in the config.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Profiles, residuals and decay fits of a finished run.
    Analyze { run_dir: PathBuf },
    /// Integrate the reduced profile equation from a profile CSV.
    Reduce {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Output CSV; stdout if omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the ODE comparison bound for `Ψ' = -C0 Ψ^p / t + C1 / t^q`.
    #[command(allow_negative_numbers = true)]
    Kms {
        #[arg(long)]
        c0: f64,
        #[arg(long, default_value_t = 0.0)]
        c1: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        psi2: f64,
        #[arg(long, default_value_t = 1e6)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// check, simulate and analyze with a consolidated report.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the pipeline for several configs in parallel.
    Sweep {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

/// Exit code for a library error.
fn code(e: &Error) -> u8 {
    match e {
        Error::BlowUp { .. } => EXIT_BLOWUP,
        _ => EXIT_USAGE,
    }
}

fn fail(context: &str, e: &Error) -> ExitCode {
    eprintln!("error: {context}: {e}");
    ExitCode::from(code(e))
}

fn load(config_path: &Path, model: Option<&Path>) -> dnls_core::Result<config::Loaded> {
    let mut loaded = config::load(config_path)?;
    if let Some(m) = model {
        loaded.model_text = config::read(m)?;
        loaded.model = CubicSystem::from_toml_str(&loaded.model_text).map_err(|e| config::at(m, e))?;
    }
    Ok(loaded)
}

fn cmd_check(
    g: &Global,
    model: &Path,
    matrix: Option<&Path>,
    conditions: &[String],
    plan: SamplePlan,
    json: bool,
) -> dnls_core::Result<u8> {
    let text = config::read(model)?;
    let sys = CubicSystem::from_toml_str(&text).map_err(|e| config::at(model, e))?;
    let a = match matrix {
        Some(p) => Some(HermitianForm::from_text(&config::read(p)?)?),
        None => None,
    };
    let requested = conditions
        .iter()
        .map(|c| Condition::parse(c))
        .collect::<dnls_core::Result<Vec<_>>>()?;
    let outcome = check::check(&sys, &requested, a.as_ref(), &plan)?;
    let report = check::report_text(&sys, &outcome);
    let summary = check::report_json(&sys, &outcome);
    if let Some(out) = &g.out {
        let stem = model
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into());
        let dir = rundir::RunDir::create(out, &format!("{stem}-check"), "check")?;
        dir.write("report.txt", report.as_bytes())?;
        let mut rows = String::new();
        for row in summary["conditions"].as_array().into_iter().flatten() {
            rows.push_str(&row.to_string());
            rows.push('\n');
        }
        dir.write("summary.jsonl", rows.as_bytes())?;
        dir.write("model.toml", text.as_bytes())?;
        dir.seal(&text, Some(plan.seed))?;
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
    } else {
        print!("{report}");
    }
    Ok(if outcome.passed { 0 } else { EXIT_VIOLATED })
}

fn out_dir(g: &Global) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from("runs"))
}

fn run(cli: Cli) -> ExitCode {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match &cli.command {
        Command::Check {
            model,
            matrix,
            condition,
            xi_samples,
            sphere_samples,
            json,
        } => {
            let plan = match SamplePlan::new(*xi_samples, *sphere_samples, g.seed.unwrap_or(0)) {
                Ok(p) => p,
                Err(e) => return fail("check", &e),
            };
            match cmd_check(g, model, matrix.as_deref(), condition, plan, *json) {
                Ok(c) => ExitCode::from(c),
                Err(e) => fail("check", &e),
            }
        }
        Command::Simulate { config, model } => {
            let loaded = match load(config, model.as_deref()) {
                Ok(l) => l,
                Err(e) => return fail("simulate", &e),
            };
            match simulate::simulate(&loaded, &out_dir(g), g.seed, g.quiet) {
                Ok(o) => {
                    println!("{}", o.root.display());
                    match o.blowup {
                        Some(e) => fail("simulate", &e),
                        None => ExitCode::SUCCESS,
                    }
                }
                Err(e) => fail("simulate", &e),
            }
        }
        Command::Analyze { run_dir } => {
            let parent = g
                .out
                .clone()
                .unwrap_or_else(|| run_dir.parent().map(Path::to_path_buf).unwrap_or_default());
            match analyze::analyze(run_dir, &parent, g.quiet) {
                Ok(o) => {
                    println!("{}", o.root.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail("analyze", &e),
            }
        }
        Command::Reduce {
            model,
            profile,
            t_end,
            steps,
            output,
        } => {
            let result = (|| {
                let sys = CubicSystem::from_toml_str(&config::read(model)?)?;
                let start = analyze::parse_profile_csv(&config::read(profile)?)?;
                let end = integrate_reduced(&sys, &start, *t_end, *steps)?;
                let csv = analyze::profile_csv(&end);
                match output {
                    Some(p) => std::fs::write(p, csv)?,
                    None => print!("{csv}"),
                }
                Ok(())
            })();
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail("reduce", &e),
            }
        }
        Command::Kms {
            c0,
            c1,
            p,
            q,
            psi2,
            t_max,
            samples,
        } => {
            let input = KmsInput {
                c0: *c0,
                c1: *c1,
                p: *p,
                q: *q,
                psi2: *psi2,
            };
            match kms_verify(&input, *t_max, *samples) {
                Ok(r) => {
                    println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                    ExitCode::from(if r.holds() { 0 } else { EXIT_VIOLATED })
                }
                Err(e) => fail("kms", &e),
            }
        }
        Command::Pipeline { config, model } => {
            let loaded = match load(config, model.as_deref()) {
                Ok(l) => l,
                Err(e) => return fail("pipeline", &e),
            };
            match pipeline::pipeline(&loaded, &out_dir(g), g.seed, g.quiet) {
                Ok(r) => {
                    print!("{}", r.text());
                    let ok = r.stopped.is_none() && r.law_matches != Some(false);
                    ExitCode::from(if ok { 0 } else { EXIT_VIOLATED })
                }
                Err(e) => fail(&format!("pipeline stage {}", e.stage), &e.error),
            }
        }
        Command::Sweep { configs } => {
            let out = out_dir(g);
            let codes: Vec<u8> = configs
                .par_iter()
                .map(|c| {
                    let r = load(c, None)
                        .map_err(|error| pipeline::StageError { stage: "load", error })
                        .and_then(|l| pipeline::pipeline(&l, &out, g.seed, true));
                    println!("{}", pipeline::sweep_row(c, &r));
                    match &r {
                        Ok(rep) if rep.stopped.is_none() && rep.law_matches != Some(false) => 0,
                        Ok(_) => EXIT_VIOLATED,
                        Err(e) => code(&e.error),
                    }
                })
                .collect();
            ExitCode::from(codes.into_iter().max().unwrap_or(0))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    run(cli)
}
