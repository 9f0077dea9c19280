//! Command line runner for the maxlab experiments.
//!
//! Exit codes: 0 when every threshold passes, 2 when a threshold fails,
//! 1 for invalid input.

pub mod config;
pub mod experiments;
pub mod selftest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use maxlab_core::bump_factory::{make_beta, make_eta, make_eta_with_band, make_father, make_gamma, make_mother, FourierProfile};
use maxlab_core::inequality_lab::{random_band_field, random_raw_field, stream_rng, Envelope};
use maxlab_core::sample_grid::GridSpec;
use serde_json::{json, Value};

use config::{Format, Overrides};
use experiments::ThresholdCheck;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_THRESHOLD: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "maxlab", version, about = "Numerical experiments on maximal operators and dyadic norms")]
pub struct Cli {
    /// Output directory [env: MAXLAB_OUT_DIR]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON config file with `params`, `thresholds`, `out_dir`, `workers`, `formats`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sample field or profile.
    Synth(SynthArgs),
    /// Run a ratio check.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(experiments::VERIFY_CHECKS))]
        check: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run a counterexample family.
    Counterexample {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(experiments::COUNTEREXAMPLES))]
        family: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run the internal consistency suite.
    Selftest {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Work with written reports.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportAction {
    /// Combine report JSON files into one summary.
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Summary file; defaults to `summary.json` in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// Number of random trials.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Largest truncation level; the ladder doubles from 16 up to it.
    #[arg(long = "K")]
    pub big_k: Option<u32>,
    /// Set any parameter, `KEY=JSON`, dotted keys for nested fields.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Override a threshold, `KEY=VALUE`.
    #[arg(long = "threshold", value_name = "KEY=VALUE")]
    pub threshold: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Random field with a band certificate.
    Band,
    /// Random field over all frequencies with decaying amplitudes.
    Raw,
    /// A tabulated profile from the bump factory.
    Profile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileName {
    Mother,
    Father,
    Eta,
    Gamma,
    Beta,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub kind: SynthKind,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub log2_side: i32,
    #[arg(long, default_value_t = 8)]
    pub log2_n: i32,
    /// Band scale: radius `a 2^k`.
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    pub k: i32,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Amplitude decay exponent for raw fields.
    #[arg(long, default_value_t = 1.0)]
    pub decay: f64,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ProfileName::Mother)]
    pub profile: ProfileName,
    /// Cube exponent for the beta profile.
    #[arg(long, default_value_t = 3)]
    pub m: u32,
}

/// Parses arguments, runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INVALID
        }
    }
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(config::OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn base_overrides(cli: &Cli) -> Overrides {
    Overrides { out_dir: cli.out.clone(), workers: cli.workers, formats: cli.format.clone(), ..Default::default() }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Verify { check, params } => run_experiment(cli, check, params),
        Command::Counterexample { family, params } => run_experiment(cli, family, params),
        Command::Selftest { inject_fault } => run_selftest(cli, *inject_fault),
        Command::Synth(args) => run_synth(cli, args),
        Command::Report { action: ReportAction::Merge { inputs, output } } => merge_reports(cli, inputs, output.as_deref()),
    }
}

fn exponent_value(s: &str) -> Result<Value> {
    let v = maxlab_core::real::extended_float::parse(s).map_err(|e| anyhow!(e))?;
    Ok(if v.is_infinite() { json!("inf") } else { json!(v) })
}

fn param_overrides(name: &str, p: &ParamArgs) -> Result<(Vec<(String, Value)>, Vec<(String, Value)>)> {
    let mut out = Vec::new();
    let mut put = |flag: &str, v: Value| out.push((experiments::flag_key(name, flag), v));
    if let Some(v) = &p.p {
        put("p", exponent_value(v)?);
    }
    if let Some(v) = &p.q {
        put("q", exponent_value(v)?);
    }
    for (flag, v) in [("r", p.r), ("t", p.t), ("m", p.m)] {
        if let Some(v) = v {
            // integral values stay integers so integer fields accept them
            put(flag, if v.fract() == 0.0 && v.abs() < 1e15 { json!(v as i64) } else { json!(v) });
        }
    }
    if let Some(v) = p.alpha {
        put("alpha", json!(v));
    }
    if let Some(v) = p.trials {
        put("trials", json!(v));
    }
    if let Some(v) = p.seed {
        put("seed", json!(v));
    }
    if let Some(v) = p.dim {
        put("dim", json!(v));
    }
    if let Some(k) = p.big_k {
        put("K", json!(experiments::ladder_to(k)));
    }
    for s in &p.set {
        out.push(config::parse_assignment(s)?);
    }
    let thresholds = p.threshold.iter().map(|s| config::parse_assignment(s)).collect::<Result<Vec<_>>>()?;
    Ok((out, thresholds))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().context("starting worker pool")
}

fn certificates(params: &Value) -> Result<Value> {
    let m = params.get("m").and_then(Value::as_u64).unwrap_or(3) as u32;
    let certs = |p: &FourierProfile| serde_json::to_value(&p.certificates);
    // the modulated family widens the eta band
    let eta = match params.get("eta_band").and_then(Value::as_f64) {
        Some(band) => make_eta_with_band(band),
        None => make_eta(),
    };
    Ok(json!({
        "eta": certs(&eta)?,
        "beta": certs(&make_beta(m)?)?,
        "gamma": certs(&make_gamma())?,
    }))
}

/// Serializes with sorted keys and a trailing newline.
pub fn to_json_text(v: &Value) -> Result<String> {
    // serde_json maps are ordered by key, so this output is canonical
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run_experiment(cli: &Cli, name: &str, p: &ParamArgs) -> Result<i32> {
    let (params, thresholds) = experiments::defaults(name).ok_or_else(|| anyhow!("unknown experiment `{name}`"))?;
    let (pflags, tflags) = param_overrides(name, p)?;
    let overrides = Overrides { params: pflags, thresholds: tflags, ..base_overrides(cli) };
    let (run, exec) = config::resolve(name, params, thresholds, cli.config.as_deref(), env_out_dir(), &overrides)?;
    let outcome = pool(exec.workers)?.install(|| experiments::execute(name, &run.params, &run.thresholds))?;
    let pass = outcome.checks.iter().all(|c| c.pass);
    let doc = json!({
        "config": serde_json::to_value(&run)?,
        "certificates": certificates(&run.params)?,
        "report": outcome.report,
        "thresholds": serde_json::to_value(&outcome.checks)?,
        "pass": pass,
    });
    if exec.formats.contains(&Format::Json) {
        write_file(&exec.out_dir, &format!("{name}.json"), &to_json_text(&doc)?)?;
    }
    if exec.formats.contains(&Format::Csv) {
        for (suffix, text) in &outcome.csv {
            let file = if suffix.is_empty() { format!("{name}.csv") } else { format!("{name}_{suffix}.csv") };
            write_file(&exec.out_dir, &file, text)?;
        }
    }
    print_checks(name, &outcome.checks);
    Ok(if pass { EXIT_PASS } else { EXIT_THRESHOLD })
}

fn print_checks(name: &str, checks: &[ThresholdCheck]) {
    for c in checks {
        let tag = if c.pass { "pass" } else { "FAIL" };
        println!("{name}: {tag} {} = {} ({} {})", c.name, c.value, c.relation, c.limit);
    }
}

fn run_selftest(cli: &Cli, inject_fault: bool) -> Result<i32> {
    let (run, exec) = config::resolve("selftest", json!({}), json!({}), cli.config.as_deref(), env_out_dir(), &base_overrides(cli))?;
    let fault = if inject_fault { selftest::Fault::MotherProfile } else { selftest::Fault::None };
    let items = pool(exec.workers)?.install(|| selftest::run(fault));
    let pass = items.iter().all(|i| i.pass);
    for i in &items {
        println!("selftest: {} {}: {}", if i.pass { "pass" } else { "FAIL" }, i.name, i.detail);
    }
    let doc = json!({ "config": serde_json::to_value(&run)?, "items": serde_json::to_value(&items)?, "pass": pass });
    if exec.formats.contains(&Format::Json) {
        write_file(&exec.out_dir, "selftest.json", &to_json_text(&doc)?)?;
    }
    Ok(if pass { EXIT_PASS } else { EXIT_THRESHOLD })
}

fn run_synth(cli: &Cli, a: &SynthArgs) -> Result<i32> {
    let (_, exec) = config::resolve("synth", json!({}), json!({}), cli.config.as_deref(), env_out_dir(), &base_overrides(cli))?;
    let (name, json_text, csv) = match a.kind {
        SynthKind::Profile => {
            let p = match a.profile {
                ProfileName::Mother => make_mother(),
                ProfileName::Father => make_father(),
                ProfileName::Eta => make_eta(),
                ProfileName::Gamma => make_gamma(),
                ProfileName::Beta => make_beta(a.m)?,
            };
            let mut csv = String::from("xi,value\n");
            for (i, v) in p.samples.iter().enumerate() {
                csv.push_str(&format!("{},{}\n", i as f64 * p.sample_spacing, v));
            }
            ("profile", p.to_json()?, csv)
        }
        SynthKind::Band | SynthKind::Raw => {
            let g = GridSpec::new(a.dim, a.log2_side, 1usize << a.log2_n)?;
            let mut rng = stream_rng(a.seed, &[]);
            let f = if a.kind == SynthKind::Band {
                random_band_field(g, a.k, a.a, Envelope::Flat, &mut rng)?
            } else {
                random_raw_field(g, a.decay, &mut rng)
            };
            let mut csv = Vec::new();
            f.write_csv(&mut csv)?;
            (if a.kind == SynthKind::Band { "band" } else { "raw" }, f.to_json()?, String::from_utf8(csv)?)
        }
    };
    if exec.formats.contains(&Format::Json) {
        let p = write_file(&exec.out_dir, &format!("synth_{name}.json"), &json_text)?;
        println!("wrote {}", p.display());
    }
    if exec.formats.contains(&Format::Csv) {
        let p = write_file(&exec.out_dir, &format!("synth_{name}.csv"), &csv)?;
        println!("wrote {}", p.display());
    }
    Ok(EXIT_PASS)
}

fn merge_reports(cli: &Cli, inputs: &[PathBuf], output: Option<&Path>) -> Result<i32> {
    let mut entries = serde_json::Map::new();
    let mut all = true;
    for path in inputs {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let name = doc
            .pointer("/config/experiment")
            .and_then(Value::as_str)
            .ok_or_else(|| anyhow!("{} is not a maxlab report", path.display()))?
            .to_string();
        let pass = doc.get("pass").and_then(Value::as_bool).ok_or_else(|| anyhow!("{} has no pass flag", path.display()))?;
        all &= pass;
        if entries.contains_key(&name) {
            bail!("experiment `{name}` appears twice");
        }
        let version = doc.pointer("/config/version").cloned().unwrap_or(Value::Null);
        let thresholds = doc.get("thresholds").cloned().unwrap_or(Value::Null);
        entries.insert(name, json!({ "pass": pass, "version": version, "thresholds": thresholds }));
    }
    let summary = json!({ "experiments": entries, "pass": all });
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let (_, exec) = config::resolve("report", json!({}), json!({}), cli.config.as_deref(), env_out_dir(), &base_overrides(cli))?;
            exec.out_dir.join("summary.json")
        }
    };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file = path.file_name().and_then(|f| f.to_str()).ok_or_else(|| anyhow!("bad output path"))?;
    write_file(dir, file, &to_json_text(&summary)?)?;
    println!("merged {} reports, pass = {all}", inputs.len());
    Ok(if all { EXIT_PASS } else { EXIT_THRESHOLD })
}
