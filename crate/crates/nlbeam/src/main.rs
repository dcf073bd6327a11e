use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::Value;

use nlbeam::model_io::{
    emit_results, gen_cantilever_moment, gen_frames, gen_honeycomb, gen_periodic_cell, gen_williams_toggle,
    parse_model_file, HoneycombSpec, LoadingMode, ModelFile, OutputFormat, Toggle,
};
use nlbeam::solver::run_analysis;

#[derive(Parser)]
#[command(name = "nlbeam", version, about = "Geometrically nonlinear analysis of plane beam frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis described by a model file and write CSV results.
    Run {
        model: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a benchmark model file.
    Generate {
        #[command(subcommand)]
        benchmark: Benchmark,
        /// Output file; standard output if omitted.
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Run one model per value of a parameter, e.g. `elements.*.N=10,20,40`.
    Sweep {
        model: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Tension,
    Compression,
}

impl From<Mode> for LoadingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Tension => LoadingMode::Tension,
            Mode::Compression => LoadingMode::Compression,
        }
    }
}

#[derive(Subcommand)]
enum Benchmark {
    /// Cantilever wound into a circle by an end moment.
    CantileverMoment {
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        ei: f64,
        #[arg(long, default_value_t = 100.0)]
        ea: f64,
        #[arg(long, default_value_t = 100)]
        segments: usize,
        #[arg(long, default_value_t = 6)]
        steps: usize,
    },
    /// Williams toggle under displacement control.
    Toggle {
        #[arg(long)]
        psi: f64,
        #[arg(long, default_value_t = 40)]
        segments: usize,
        #[arg(long, default_value_t = 1.0)]
        w_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    SquareFrame {
        #[arg(long, default_value_t = 100.0)]
        ea: f64,
        #[arg(long, default_value_t = 30)]
        segments: usize,
    },
    DiamondFrame {
        #[arg(long, default_value_t = 1e4)]
        ea: f64,
        #[arg(long, default_value_t = 30)]
        segments: usize,
    },
    Buckling {
        #[arg(long, default_value_t = 1e4)]
        ea: f64,
        #[arg(long, default_value_t = 100)]
        segments: usize,
    },
    Honeycomb {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1e4)]
        ea: f64,
        #[arg(long, default_value_t = 1.0)]
        ei: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.3)]
        strain: f64,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 20)]
        segments: usize,
        /// Add a row of vertical struts under the bottom nodes.
        #[arg(long)]
        boundary_layer: bool,
    },
    PeriodicCell {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1e4)]
        ea: f64,
        #[arg(long, default_value_t = 1.0)]
        ei: f64,
        #[arg(long, default_value_t = 0.3)]
        strain: f64,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long, default_value_t = 40)]
        segments: usize,
    },
}

/// Failure classes mapped to exit codes.
enum Outcome {
    Converged,
    Stopped,
}

fn generate(b: Benchmark) -> Result<ModelFile> {
    Ok(match b {
        Benchmark::CantileverMoment { length, ei, ea, segments, steps } => {
            gen_cantilever_moment(length, ei, ea, segments, steps)?
        }
        Benchmark::Toggle { psi, segments, w_max, steps } => {
            gen_williams_toggle(&Toggle { segments, w_max, steps, ..Toggle::williams(psi) })?
        }
        Benchmark::SquareFrame { ea, segments } => gen_frames(ea, segments).square_quarter,
        Benchmark::DiamondFrame { ea, segments } => gen_frames(ea, segments).diamond_quarter,
        Benchmark::Buckling { ea, segments } => gen_frames(ea, segments).buckling_cantilever,
        Benchmark::Honeycomb { n, mode, a, ea, ei, t, strain, steps, segments, boundary_layer } => {
            gen_honeycomb(&HoneycombSpec {
                n,
                a,
                ea,
                ei,
                t,
                mode: mode.into(),
                add_boundary_layer: boundary_layer,
                strain,
                steps,
                segments,
            })?
        }
        Benchmark::PeriodicCell { mode, a, ea, ei, strain, steps, segments } => {
            gen_periodic_cell(a, ea, ei, mode.into(), strain, steps, segments)?
        }
    })
}

fn run_file(file: &ModelFile, out: &Path) -> Result<(Outcome, String)> {
    let model = file.to_model()?;
    let analysis = run_analysis(&model, file.solver_config()?)?;
    emit_results(out, &model, &analysis.map, &analysis.steps, &OutputFormat::ALL)
        .with_context(|| format!("writing results to {}", out.display()))?;
    let done = format!("{} of {} steps converged", analysis.steps.len(), file.solver.steps);
    Ok(match analysis.failure {
        None => (Outcome::Converged, done),
        Some(e) => (Outcome::Stopped, format!("{done}; stopped: {e}")),
    })
}

fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model_file(&text).with_context(|| format!("in {}", path.display()))
}

/// Sets every value matched by a dotted path; `*` matches all array entries.
fn set_path(v: &mut Value, path: &[&str], new: &Value) -> usize {
    let Some((&head, rest)) = path.split_first() else {
        *v = new.clone();
        return 1;
    };
    match v {
        Value::Array(items) if head == "*" => items.iter_mut().map(|x| set_path(x, rest, new)).sum(),
        Value::Array(items) => match head.parse::<usize>().ok().and_then(|i| items.get_mut(i)) {
            Some(x) => set_path(x, rest, new),
            None => 0,
        },
        Value::Object(map) => match map.get_mut(head) {
            Some(x) => set_path(x, rest, new),
            None if rest.is_empty() => {
                map.insert(head.to_string(), new.clone());
                1
            }
            None => 0,
        },
        _ => 0,
    }
}

fn sweep_value(raw: &str) -> Result<Value> {
    let x: f64 = raw.trim().parse().with_context(|| format!("sweep value {raw:?} is not a number"))?;
    // Integral values stay integers so that counts such as `N` still parse.
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Ok(Value::from(x as i64))
    } else {
        Ok(Value::from(x))
    }
}

fn sweep(model: &Path, param: &str, out: &Path) -> Result<Outcome> {
    let (path, list) = param.split_once('=').ok_or_else(|| anyhow!("--param must look like <path>=<v1>,<v2>,…"))?;
    let keys: Vec<&str> = path.split('.').collect();
    let base: Value = serde_json::to_value(read_model(model)?)?;
    let variants = list
        .split(',')
        .map(|raw| {
            let value = sweep_value(raw)?;
            let mut doc = base.clone();
            if set_path(&mut doc, &keys, &value) == 0 {
                bail!("path {path} matches nothing in the model");
            }
            let file = parse_model_file(&doc.to_string()).with_context(|| format!("{path}={}", raw.trim()))?;
            Ok((raw.trim().to_string(), file))
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<(String, Result<(Outcome, String)>)> = variants
        .par_iter()
        .map(|(raw, file)| (raw.clone(), run_file(file, &out.join(format!("{path}={raw}")))))
        .collect();
    let mut outcome = Outcome::Converged;
    for (raw, r) in results {
        let (o, msg) = r.with_context(|| format!("{path}={raw}"))?;
        println!("{path}={raw}: {msg}");
        if let Outcome::Stopped = o {
            outcome = Outcome::Stopped;
        }
    }
    Ok(outcome)
}

fn execute(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Run { model, out } => {
            let (outcome, msg) = run_file(&read_model(&model)?, &out)?;
            println!("{msg}");
            Ok(outcome)
        }
        Command::Generate { benchmark, output } => {
            let json = generate(benchmark)?.to_json();
            match output {
                Some(p) => std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
            Ok(Outcome::Converged)
        }
        Command::Sweep { model, param, out } => sweep(&model, &param, &out),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(Outcome::Converged) => ExitCode::SUCCESS,
        Ok(Outcome::Stopped) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
