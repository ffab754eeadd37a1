//! Batch front-end: JSON configs in, CSV/JSON artifacts and a manifest out.
//!
//! Exit codes: 0 success, 1 failed checks (or replay mismatch), 2 config
//! error, 3 solver or runtime error.

use crate::datum::Datum;
use crate::effective::{effective_curve, ensemble_effective, EffectiveConfig, EffectiveEstimate};
use crate::error::{invalid, Error, Result};
use crate::media::{sample_medium, MediumSpec};
use crate::problem::ProblemSpec;
use crate::report::{config_hash, hex_digest, summary_table, Status};
use crate::solver::{solve, SolveConfig};
use crate::verify::{min_formula_curves, run_suite, SuiteConfig};
use clap::{Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "hjhomog", version, about = "Effective Hamiltonians by numerical homogenization")]
pub struct Cli {
    /// Override the config's seed (ensembles use seed, seed+1, ...).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Treat inconclusive checks as failures.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one Cauchy problem and write the grid solution.
    Solve { config: PathBuf },
    /// Effective Hamiltonian on a theta grid.
    Effective { config: PathBuf },
    /// Across-seed statistics of the ladder values.
    Ensemble { config: PathBuf },
    /// Run a verification suite and write JSONL reports.
    Verify { config: PathBuf },
    /// Sample a medium on a grid.
    MediaSample { config: PathBuf },
    /// Re-run a manifest and compare output hashes.
    Replay { manifest: PathBuf },
}

fn default_datum() -> Datum {
    Datum::Linear { theta: 0.0 }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRun {
    pub problem: ProblemSpec,
    #[serde(default = "default_datum")]
    pub datum: Datum,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub seed: u64,
    /// Write `solution.bin` instead of `solution.csv`.
    #[serde(default)]
    pub binary: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveRun {
    pub problem: ProblemSpec,
    pub thetas: Vec<f64>,
    #[serde(default)]
    pub effective: EffectiveConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Also compute the curves of the two halves split at this pin and their
    /// min-composition (single seed only).
    #[serde(default)]
    pub split_pin: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleRun {
    pub problem: ProblemSpec,
    pub thetas: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub effective: EffectiveConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaSampleRun {
    pub medium: MediumSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_x_min() -> f64 {
    -10.0
}
fn default_x_max() -> f64 {
    10.0
}
fn default_points() -> usize {
    2001
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config: Value,
    pub config_hash: String,
    /// File name (relative to the output directory) to hex SHA-256.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Run(Error),
    Checks(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid { .. }
            | Error::PinMismatch { .. }
            | Error::ConvexityViolation { .. }
            | Error::NotPinned(_)
            | Error::UnknownMedium(_)
            | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let work = || dispatch(&cli);
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(Failure::Config(format!("invalid --threads: {e}"))),
        },
        None => work(),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Checks(msg)) => {
            eprintln!("{msg}");
            1
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            3
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::Replay { manifest } => replay(cli, manifest),
        cmd => {
            let (name, path) = match cmd {
                Command::Solve { config } => ("solve", config),
                Command::Effective { config } => ("effective", config),
                Command::Ensemble { config } => ("ensemble", config),
                Command::Verify { config } => ("verify", config),
                Command::MediaSample { config } => ("media-sample", config),
                Command::Replay { .. } => unreachable!(),
            };
            let doc = load_document(path, name)?;
            execute(name, &doc, cli.seed, cli.strict, &cli.out_dir)
                .map(|_| ())
                .map_err(|e| match e {
                    Failure::Config(msg) if !msg.starts_with(&*path.to_string_lossy()) => {
                        Failure::Config(format!("{}: {msg}", path.display()))
                    }
                    other => other,
                })
        }
    }
}

/// Text of a config, or of the config recorded in a manifest.
fn load_document(path: &Path, command: &str) -> Outcome<String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if value.get("manifest_version").is_none() {
        // parse the original text so diagnostics point into the user's file
        return Ok(text);
    }
    let m: Manifest = serde_json::from_value(value)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if m.command != command {
        return Err(Failure::Config(format!(
            "{}: manifest is for `{}`, not `{command}`",
            path.display(),
            m.command
        )));
    }
    Ok(serde_json::to_string_pretty(&m.config).map_err(Error::from)?)
}

fn parse<T: DeserializeOwned>(doc: &str) -> Outcome<T> {
    serde_json::from_str(doc).map_err(|e| Failure::Config(e.to_string()))
}

struct Output {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Output {
    fn new(dir: &Path) -> Outcome<Self> {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Outcome<()> {
        std::fs::write(self.dir.join(name), bytes).map_err(Error::from)?;
        self.hashes.insert(name.to_string(), hex_digest(bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Outcome<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(Error::from)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn finish<T: Serialize>(self, command: &str, config: &T) -> Outcome<Manifest> {
        let manifest = Manifest {
            manifest_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(Error::from)?,
            config_hash: config_hash(config),
            outputs: self.hashes,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(Error::from)?;
        bytes.push(b'\n');
        std::fs::write(self.dir.join("manifest.json"), bytes).map_err(Error::from)?;
        Ok(manifest)
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Outcome<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn execute(command: &str, doc: &str, seed: Option<u64>, strict: bool, dir: &Path) -> Outcome<Manifest> {
    match command {
        "solve" => {
            let mut cfg: SolveRun = parse(doc)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.solve.validate()?;
            let realized = cfg.problem.realize(cfg.seed)?;
            let datum = cfg.datum.clone();
            let sol = solve(&realized.hamiltonian, &realized.diffusion, &|x| datum.eval(x), &cfg.solve)?;
            let mut out = Output::new(dir)?;
            if cfg.binary {
                out.write("solution.bin", &csv_bytes(|b| sol.write_binary(b))?)?;
            } else {
                out.write("solution.csv", &csv_bytes(|b| sol.write_csv(b))?)?;
            }
            out.json("meta.json", &sol.meta)?;
            println!(
                "u(T, 0) = {}  (L = {}, steps = {}, margin = {:.4})",
                sol.final_at_origin(),
                sol.meta.half_width,
                sol.meta.steps,
                sol.meta.boundary_margin
            );
            out.finish(command, &cfg)
        }
        "effective" => {
            let mut cfg: EffectiveRun = parse(doc)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            cfg.effective.validate()?;
            let curve = effective_curve(&cfg.problem, &cfg.thetas, &cfg.seeds, &cfg.effective)?;
            let mut out = Output::new(dir)?;
            out.write("effective.csv", &csv_bytes(|b| curve.write_csv(b))?)?;
            out.json("estimates.json", &curve.estimates)?;
            print_curve(&curve.estimates);
            if let Some(k) = cfg.split_pin {
                if cfg.seeds.len() != 1 {
                    return Err(Failure::Config(
                        invalid("split_pin", "split-and-compose needs exactly one seed").to_string(),
                    ));
                }
                let realized = cfg.problem.realize(cfg.seeds[0])?;
                let c = min_formula_curves(&realized, k, &cfg.thetas, &cfg.effective)?;
                out.write("effective_minus.csv", &csv_bytes(|b| c.minus.write_csv(b))?)?;
                out.write("effective_plus.csv", &csv_bytes(|b| c.plus.write_csv(b))?)?;
                out.write("effective_composed.csv", &csv_bytes(|b| c.composed.write_csv(b))?)?;
                let (d, at, err) = c.direct.max_discrepancy(&c.composed)?;
                out.json(
                    "min_formula.json",
                    &serde_json::json!({
                        "max_discrepancy": d,
                        "theta": at,
                        "combined_error": err,
                    }),
                )?;
                println!("direct vs min-composed: max discrepancy {d:.3e} at theta = {at} (combined error {err:.3e})");
            }
            out.finish(command, &cfg)
        }
        "ensemble" => {
            let mut cfg: EnsembleRun = parse(doc)?;
            if let Some(s) = seed {
                let n = cfg.seeds.len() as u64;
                cfg.seeds = (s..s + n).collect();
            }
            cfg.effective.validate()?;
            let stats = cfg
                .thetas
                .iter()
                .map(|&t| ensemble_effective(&cfg.problem, t, &cfg.seeds, &cfg.effective))
                .collect::<Result<Vec<_>>>()?;
            let mut out = Output::new(dir)?;
            let bytes = csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["theta", "eps", "mean", "variance", "std_dev"])?;
                for s in &stats {
                    for i in 0..s.eps.len() {
                        w.write_record([
                            s.theta.to_string(),
                            s.eps[i].to_string(),
                            s.mean[i].to_string(),
                            s.variance[i].to_string(),
                            s.std_dev[i].to_string(),
                        ])?;
                    }
                }
                w.flush()?;
                Ok(())
            })?;
            out.write("ensemble.csv", &bytes)?;
            out.json("ensemble.json", &stats)?;
            for s in &stats {
                println!(
                    "theta = {:>8}  mean = {:.6}  tau = {:+.3}  p = {:.4}  concentrating = {}",
                    s.theta, s.mean_extrapolated, s.trend.tau, s.trend.p_decreasing, s.concentrating
                );
            }
            out.finish(command, &cfg)
        }
        "verify" => {
            let mut cfg: SuiteConfig = parse(doc)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let reports = run_suite(&cfg)?;
            let mut out = Output::new(dir)?;
            let mut lines = String::new();
            for r in &reports {
                lines.push_str(&r.to_json_line());
                lines.push('\n');
            }
            out.write("reports.jsonl", lines.as_bytes())?;
            print!("{}", summary_table(&reports));
            let manifest = out.finish(command, &cfg)?;
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| r.status == Status::Fail)
                .map(|r| r.check_name.as_str())
                .collect();
            let inconclusive: Vec<&str> = reports
                .iter()
                .filter(|r| r.status == Status::Inconclusive)
                .map(|r| r.check_name.as_str())
                .collect();
            let mut msg = Vec::new();
            if !failed.is_empty() {
                msg.push(format!("failed checks: {}", failed.join(", ")));
            }
            if strict && !inconclusive.is_empty() {
                msg.push(format!("inconclusive checks (strict): {}", inconclusive.join(", ")));
            }
            if msg.is_empty() {
                Ok(manifest)
            } else {
                Err(Failure::Checks(msg.join("\n")))
            }
        }
        "media-sample" => {
            let mut cfg: MediaSampleRun = parse(doc)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if cfg.points < 2 || !(cfg.x_max > cfg.x_min) {
                return Err(Failure::Config(
                    invalid("points", "need at least two points on a nonempty interval").to_string(),
                ));
            }
            let sample = sample_medium(&cfg.medium, cfg.seed)?;
            let bytes = csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["x", "value"])?;
                let h = (cfg.x_max - cfg.x_min) / (cfg.points - 1) as f64;
                for i in 0..cfg.points {
                    let x = cfg.x_min + i as f64 * h;
                    w.write_record([x.to_string(), sample.eval(x).to_string()])?;
                }
                w.flush()?;
                Ok(())
            })?;
            let mut out = Output::new(dir)?;
            out.write("medium.csv", &bytes)?;
            out.json("provenance.json", &sample.provenance())?;
            out.finish(command, &cfg)
        }
        other => Err(Failure::Config(format!("unknown command `{other}`"))),
    }
}

fn print_curve(estimates: &[EffectiveEstimate]) {
    println!("{:>10}  {:>14}  {:>10}", "theta", "h_eff", "err");
    for e in estimates {
        println!("{:>10}  {:>14.8}  {:>10.2e}", e.theta, e.extrapolated, e.error_bar);
    }
}

fn replay(cli: &Cli, path: &Path) -> Outcome<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let recorded: Manifest = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let doc = serde_json::to_string_pretty(&recorded.config).map_err(Error::from)?;
    let fresh = match execute(&recorded.command, &doc, None, cli.strict, &cli.out_dir) {
        Ok(m) => m,
        // a failing suite still writes its outputs and manifest
        Err(Failure::Checks(_)) if recorded.command == "verify" => {
            let text = std::fs::read_to_string(cli.out_dir.join("manifest.json")).map_err(Error::from)?;
            serde_json::from_str(&text).map_err(Error::from)?
        }
        Err(e) => return Err(e),
    };
    let mut mismatches = Vec::new();
    for (name, hash) in &recorded.outputs {
        match fresh.outputs.get(name) {
            Some(h) if h == hash => {}
            Some(_) => mismatches.push(format!("{name}: content differs")),
            None => mismatches.push(format!("{name}: not produced")),
        }
    }
    if mismatches.is_empty() {
        println!("replay reproduced {} outputs", recorded.outputs.len());
        Ok(())
    } else {
        Err(Failure::Checks(format!("replay mismatch:\n  {}", mismatches.join("\n  "))))
    }
}
