//! Command line driver for the verification library.
//!
//! Every library-level check is reachable through exactly one subcommand;
//! `CHECK_MAP` records that correspondence and a unit test enforces it.
//! Commands print a single deterministic JSON summary to stdout — same
//! inputs, same bytes, no timestamps — and exit with:
//!
//! * `0` when every check passed,
//! * `1` when at least one check failed (a real negative result),
//! * `2` on configuration errors (bad flags, unknown keys, invalid models).
//!
//! Parameters resolve in layers: built-in defaults, then `--config FILE`
//! (a JSON object or `key = value` lines), then command line flags, then
//! the `--sweep` entry.  `--out-dir DIR` (or the `SEMIGEN_OUT_DIR`
//! environment variable; the flag wins) additionally writes `summary.json`
//! and any CSV traces into DIR.  `--sweep key=v1,v2,...` repeats the
//! command over parameter values concurrently, each entry writing to its
//! own subdirectory.

use std::cell::RefCell;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use semigen_core::{
    build_as, coercivity_report, counterexample_fixture, crank_nicolson_trace,
    dissipation_identity_residual, dissipativity_margin, duality_functional, expm_trace,
    generation_certificate, heat_direct, hilbert_coercivity, implicit_euler_trace,
    isometry_deviation, multiplication_s, q_diagonalize, resolvent_via_extension,
    sip_axiom_report, square_group_op, wave_ext, Closure, DiscreteFunction, Error,
    EvolutionTrace, GridSpace, LambdaProfile, ResolventMode, ResolventQuery, Sampler, Space,
    Tolerances, C64, DEFAULT_SEED,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// All subcommand names, in help order.
pub const SUBCOMMANDS: [&str; 9] = [
    "sip-axioms",
    "coercivity",
    "wave-cert",
    "wave2heat",
    "resolvent-check",
    "counterexample",
    "square-group",
    "evolve",
    "isometry",
];

/// Which subcommand exercises each library check.  Each check appears
/// exactly once and every subcommand carries at least one check; the
/// audit test below keeps this table honest.
pub const CHECK_MAP: &[(&str, &str)] = &[
    ("sip_axiom_report", "sip-axioms"),
    ("duality_functional", "sip-axioms"),
    ("coercivity_report", "coercivity"),
    ("hilbert_coercivity", "coercivity"),
    ("generation_certificate", "wave-cert"),
    ("growth_bound_fit", "wave-cert"),
    ("wave/heat generator equality", "wave2heat"),
    ("dissipation_identity_residual", "wave2heat"),
    ("dissipativity_margin", "wave2heat"),
    ("resolvent_via_extension", "resolvent-check"),
    ("counterexample_fixture", "counterexample"),
    ("norm_dissipativity_check", "counterexample"),
    ("square_group_op", "square-group"),
    ("q_diagonalize", "square-group"),
    ("implicit_euler_trace", "evolve"),
    ("crank_nicolson_trace", "evolve"),
    ("expm_trace", "evolve"),
    ("isometry_deviation", "isometry"),
];

/// Config keys any command may read; unknown keys in config files or
/// sweeps are rejected so typos fail loudly instead of silently running
/// with defaults.
const KNOWN_KEYS: [&str; 18] = [
    "dt",
    "identity_samples",
    "k1",
    "k2",
    "lambda",
    "mode",
    "n",
    "p",
    "profile",
    "queries",
    "samples",
    "scheme",
    "seed",
    "snapshots",
    "system",
    "t",
    "t_end",
    "x0",
];

// ── Command line definition ──────────────────────────────────────────────

#[derive(Parser, Debug)]
#[command(
    name = "semigen",
    version,
    about = "Dissipativity, coercivity, and semigroup checks for block operators on discrete l^p spaces"
)]
struct Cli {
    /// Directory for summary.json and CSV outputs (beats SEMIGEN_OUT_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Config file: a JSON object or `key = value` lines (# comments).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    /// Repeat the command over `key=v1,v2,...`, isolating outputs per value.
    #[arg(long, global = true, value_name = "KEY=V1,V2,...")]
    sweep: Option<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check semi-inner-product axioms and the duality representation.
    #[command(name = "sip-axioms")]
    SipAxioms(SipAxiomsArgs),
    /// Certify coercivity constants of a multiplication closure.
    #[command(name = "coercivity")]
    Coercivity(CoercivityArgs),
    /// Generation certificate for the wave operator with reflecting ends.
    #[command(name = "wave-cert")]
    WaveCert(WaveCertArgs),
    /// Compare the closed wave operator against the direct heat build.
    #[command(name = "wave2heat")]
    Wave2Heat(Wave2HeatArgs),
    /// Solve resolvent queries through the extension and check residuals.
    #[command(name = "resolvent-check")]
    ResolventCheck(ResolventCheckArgs),
    /// Evaluate the non-dissipative extension with dissipative closure.
    #[command(name = "counterexample")]
    Counterexample(CounterexampleArgs),
    /// Square the off-diagonal group generator and inspect its blocks.
    #[command(name = "square-group")]
    SquareGroup(SquareGroupArgs),
    /// Integrate a model in time and record the norm trace.
    #[command(name = "evolve")]
    Evolve(EvolveArgs),
    /// Measure norm preservation of the energy-conserving wave flow.
    #[command(name = "isometry")]
    Isometry(IsometryArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::SipAxioms(_) => "sip-axioms",
            Cmd::Coercivity(_) => "coercivity",
            Cmd::WaveCert(_) => "wave-cert",
            Cmd::Wave2Heat(_) => "wave2heat",
            Cmd::ResolventCheck(_) => "resolvent-check",
            Cmd::Counterexample(_) => "counterexample",
            Cmd::SquareGroup(_) => "square-group",
            Cmd::Evolve(_) => "evolve",
            Cmd::Isometry(_) => "isometry",
        }
    }

    /// Fold explicit command line flags over the config-file layer.
    fn apply_overrides(&self, map: &mut Map<String, Value>) {
        match self {
            Cmd::SipAxioms(a) => a.apply(map),
            Cmd::Coercivity(a) => a.apply(map),
            Cmd::WaveCert(a) => a.apply(map),
            Cmd::Wave2Heat(a) => a.apply(map),
            Cmd::ResolventCheck(a) => a.apply(map),
            Cmd::Counterexample(a) => a.apply(map),
            Cmd::SquareGroup(a) => a.apply(map),
            Cmd::Evolve(a) => a.apply(map),
            Cmd::Isometry(a) => a.apply(map),
        }
    }
}

fn set_f64(map: &mut Map<String, Value>, key: &str, v: Option<f64>) {
    if let Some(v) = v {
        map.insert(key.to_string(), json!(v));
    }
}

fn set_usize(map: &mut Map<String, Value>, key: &str, v: Option<usize>) {
    if let Some(v) = v {
        map.insert(key.to_string(), json!(v));
    }
}

fn set_u64(map: &mut Map<String, Value>, key: &str, v: Option<u64>) {
    if let Some(v) = v {
        map.insert(key.to_string(), json!(v));
    }
}

fn set_str(map: &mut Map<String, Value>, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        map.insert(key.to_string(), json!(v));
    }
}

fn set_bool(map: &mut Map<String, Value>, key: &str, v: Option<bool>) {
    if let Some(v) = v {
        map.insert(key.to_string(), json!(v));
    }
}

fn set_f64_list(map: &mut Map<String, Value>, key: &str, v: &Option<Vec<f64>>) {
    if let Some(v) = v {
        map.insert(key.to_string(), json!(v));
    }
}

#[derive(Args, Debug)]
struct SipAxiomsArgs {
    /// Grid cells (the space dimension follows the grid kind).
    #[arg(long)]
    n: Option<usize>,
    /// Exponents to test, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Option<Vec<f64>>,
    /// Random draws per exponent.
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl SipAxiomsArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_usize(map, "n", self.n);
        set_f64_list(map, "p", &self.p);
        set_usize(map, "samples", self.samples);
        set_u64(map, "seed", self.seed);
    }
}

#[derive(Args, Debug)]
struct CoercivityArgs {
    /// Diffusion profile, e.g. "2", "1+0.5*xi", "2+sin".
    #[arg(long)]
    profile: Option<String>,
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Space exponent p.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    /// Random draws for sampled constants.
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl CoercivityArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_str(map, "profile", &self.profile);
        set_usize(map, "n", self.n);
        set_f64(map, "p", self.p);
        set_usize(map, "samples", self.samples);
        set_u64(map, "seed", self.seed);
    }
}

#[derive(Args, Debug)]
struct WaveCertArgs {
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Right-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k1: Option<f64>,
    /// Left-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k2: Option<f64>,
    /// Space exponent p.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    /// Shift used for the range condition (must be positive).
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Random draws for sampled margins.
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl WaveCertArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_usize(map, "n", self.n);
        set_f64(map, "k1", self.k1);
        set_f64(map, "k2", self.k2);
        set_f64(map, "p", self.p);
        set_f64(map, "lambda", self.lambda);
        set_usize(map, "samples", self.samples);
        set_u64(map, "seed", self.seed);
    }
}

#[derive(Args, Debug)]
struct Wave2HeatArgs {
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Diffusion profile sampled at cell midpoints.
    #[arg(long)]
    profile: Option<String>,
    /// Right-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k1: Option<f64>,
    /// Left-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k2: Option<f64>,
    /// Space exponent p for the dissipation identity.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    /// Random states for the dissipation identity.
    #[arg(long)]
    identity_samples: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Wave2HeatArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_usize(map, "n", self.n);
        set_str(map, "profile", &self.profile);
        set_f64(map, "k1", self.k1);
        set_f64(map, "k2", self.k2);
        set_f64(map, "p", self.p);
        set_usize(map, "identity_samples", self.identity_samples);
        set_u64(map, "seed", self.seed);
    }
}

#[derive(Args, Debug)]
struct ResolventCheckArgs {
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Diffusion profile defining the closure.
    #[arg(long)]
    profile: Option<String>,
    /// Right-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k1: Option<f64>,
    /// Left-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k2: Option<f64>,
    /// Fixed shift; when absent, shifts spread over the certified window.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Number of right-hand sides to solve.
    #[arg(long)]
    queries: Option<usize>,
    /// "certified" rejects shifts outside the window; "exploratory" solves anyway.
    #[arg(long)]
    mode: Option<String>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ResolventCheckArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_usize(map, "n", self.n);
        set_str(map, "profile", &self.profile);
        set_f64(map, "k1", self.k1);
        set_f64(map, "k2", self.k2);
        set_f64(map, "lambda", self.lambda);
        set_usize(map, "queries", self.queries);
        set_str(map, "mode", &self.mode);
        set_u64(map, "seed", self.seed);
    }
}

#[derive(Args, Debug)]
struct CounterexampleArgs {}

impl CounterexampleArgs {
    fn apply(&self, _map: &mut Map<String, Value>) {}
}

#[derive(Args, Debug)]
struct SquareGroupArgs {
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Diffusion profile defining the closure.
    #[arg(long)]
    profile: Option<String>,
    /// Right-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k1: Option<f64>,
    /// Left-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k2: Option<f64>,
}

impl SquareGroupArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_usize(map, "n", self.n);
        set_str(map, "profile", &self.profile);
        set_f64(map, "k1", self.k1);
        set_f64(map, "k2", self.k2);
    }
}

#[derive(Args, Debug)]
struct EvolveArgs {
    /// Model to integrate: "heat" or "wave".
    #[arg(long)]
    system: Option<String>,
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Diffusion profile (heat system).
    #[arg(long)]
    profile: Option<String>,
    /// Right-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k1: Option<f64>,
    /// Left-end reflection coefficient in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    k2: Option<f64>,
    /// Integrator: "implicit-euler", "crank-nicolson", or "expm".
    #[arg(long)]
    scheme: Option<String>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Initial data: "cos", "bump", "ones", or "random".
    #[arg(long)]
    x0: Option<String>,
    /// Record state snapshots alongside the norm trace.
    #[arg(long)]
    snapshots: Option<bool>,
    /// RNG seed (random initial data).
    #[arg(long)]
    seed: Option<u64>,
}

impl EvolveArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_str(map, "system", &self.system);
        set_usize(map, "n", self.n);
        set_str(map, "profile", &self.profile);
        set_f64(map, "k1", self.k1);
        set_f64(map, "k2", self.k2);
        set_str(map, "scheme", &self.scheme);
        set_f64(map, "dt", self.dt);
        set_f64(map, "t_end", self.t_end);
        set_str(map, "x0", &self.x0);
        set_bool(map, "snapshots", self.snapshots);
        set_u64(map, "seed", self.seed);
    }
}

#[derive(Args, Debug)]
struct IsometryArgs {
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Times to evaluate the flow at, comma separated (negatives allowed).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Random states per time.
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl IsometryArgs {
    fn apply(&self, map: &mut Map<String, Value>) {
        set_usize(map, "n", self.n);
        set_f64_list(map, "t", &self.t);
        set_usize(map, "samples", self.samples);
        set_u64(map, "seed", self.seed);
    }
}

// ── Parameter resolution ─────────────────────────────────────────────────

/// Resolved key/value configuration for one command run.  Getters record
/// the effective value (explicit or default) so the JSON summary can echo
/// exactly what was used.
struct Params {
    map: Map<String, Value>,
    used: RefCell<Map<String, Value>>,
}

type Config<T> = std::result::Result<T, String>;

impl Params {
    fn new(map: Map<String, Value>) -> Self {
        Params {
            map,
            used: RefCell::new(Map::new()),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn record(&self, key: &str, v: Value) {
        self.used.borrow_mut().insert(key.to_string(), v);
    }

    fn f64(&self, key: &str, default: f64) -> Config<f64> {
        let v = match self.map.get(key) {
            None => default,
            Some(v) => value_as_f64(v)
                .ok_or_else(|| format!("config key '{key}' expects a number, got {v}"))?,
        };
        self.record(key, json!(v));
        Ok(v)
    }

    fn usize(&self, key: &str, default: usize) -> Config<usize> {
        let v = match self.map.get(key) {
            None => default,
            Some(v) => value_as_u64(v)
                .ok_or_else(|| format!("config key '{key}' expects a nonnegative integer, got {v}"))?
                as usize,
        };
        self.record(key, json!(v));
        Ok(v)
    }

    fn u64(&self, key: &str, default: u64) -> Config<u64> {
        let v = match self.map.get(key) {
            None => default,
            Some(v) => value_as_u64(v)
                .ok_or_else(|| format!("config key '{key}' expects a nonnegative integer, got {v}"))?,
        };
        self.record(key, json!(v));
        Ok(v)
    }

    fn str(&self, key: &str, default: &str) -> Config<String> {
        let v = match self.map.get(key) {
            None => default.to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(other) => return Err(format!("config key '{key}' expects a string, got {other}")),
        };
        self.record(key, json!(v));
        Ok(v)
    }

    fn bool(&self, key: &str, default: bool) -> Config<bool> {
        let v = match self.map.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(Value::String(s)) if s == "true" => true,
            Some(Value::String(s)) if s == "false" => false,
            Some(other) => return Err(format!("config key '{key}' expects a boolean, got {other}")),
        };
        self.record(key, json!(v));
        Ok(v)
    }

    fn f64_list(&self, key: &str, default: &[f64]) -> Config<Vec<f64>> {
        let v: Vec<f64> = match self.map.get(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|it| {
                    value_as_f64(it)
                        .ok_or_else(|| format!("config key '{key}' expects numbers, got {it}"))
                })
                .collect::<Config<_>>()?,
            Some(v) => match value_as_f64(v) {
                Some(x) => vec![x],
                None => {
                    return Err(format!("config key '{key}' expects a number list, got {v}"))
                }
            },
        };
        self.record(key, json!(v));
        Ok(v)
    }

    fn used_value(&self) -> Value {
        Value::Object(self.used.borrow().clone())
    }
}

fn value_as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn value_as_u64(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64().or_else(|| {
            n.as_f64()
                .filter(|x| x.fract() == 0.0 && *x >= 0.0 && *x < 2.0_f64.powi(53))
                .map(|x| x as u64)
        }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Load a config file: a JSON object, or `key = value` lines where each
/// value is parsed as JSON when possible and kept as a string otherwise.
fn load_config(path: &Path) -> Config<Map<String, Value>> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(&text) {
        return Ok(map);
    }
    let mut map = Map::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {} is not `key = value`: {raw}", idx + 1))?;
        let key = k.trim().to_string();
        let val = v.trim();
        let parsed = serde_json::from_str::<Value>(val)
            .unwrap_or_else(|_| Value::String(val.to_string()));
        map.insert(key, parsed);
    }
    Ok(map)
}

fn reject_unknown_keys(map: &Map<String, Value>, origin: &str) -> Config<()> {
    for key in map.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(format!(
                "unknown {origin} key '{key}' (known keys: {})",
                KNOWN_KEYS.join(", ")
            ));
        }
    }
    Ok(())
}

// ── Error classification ─────────────────────────────────────────────────

enum CliError {
    /// The run could not be configured; exit 2.
    Config(String),
}

impl From<String> for CliError {
    fn from(msg: String) -> Self {
        CliError::Config(msg)
    }
}

type CmdResult = std::result::Result<(Map<String, Value>, bool), CliError>;

/// Library errors caused by parameters are configuration mistakes; the
/// rest are genuine negative results the summary should report.
fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidBoundary { .. }
            | Error::NonPositiveCoefficient { .. }
            | Error::DimensionMismatch { .. }
    )
}

/// Convert a core error into either a config error or a failing payload.
fn core_failure(e: Error) -> CmdResult {
    if is_config_error(&e) {
        Err(CliError::Config(e.to_string()))
    } else {
        let mut payload = Map::new();
        payload.insert("error".to_string(), json!(e.to_string()));
        Ok((payload, false))
    }
}

macro_rules! try_core {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => return core_failure(e),
        }
    };
}

// ── Entry points ─────────────────────────────────────────────────────────

/// Run with the process environment: real args, stdout, and
/// `SEMIGEN_OUT_DIR`.  Returns the process exit code.
pub fn run_from_env() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let mut stdout = std::io::stdout();
    run(&args, &mut stdout)
}

/// Run the command line given as `args` (including the program name),
/// writing the JSON summary to `out`.  Returns the exit code.
pub fn run(args: &[String], out: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args.iter()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_CONFIG,
            };
        }
    };

    let mut tol = Tolerances::default();
    for entry in &cli.tol {
        if let Err(msg) = apply_tol_override(&mut tol, entry) {
            return emit_config_error(out, cli.cmd.name(), &msg);
        }
    }

    let out_dir: Option<PathBuf> = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("SEMIGEN_OUT_DIR").map(PathBuf::from));

    let mut base = Map::new();
    if let Some(path) = &cli.config {
        match load_config(path).and_then(|m| {
            reject_unknown_keys(&m, "config")?;
            Ok(m)
        }) {
            Ok(m) => base.extend(m),
            Err(msg) => return emit_config_error(out, cli.cmd.name(), &msg),
        }
    }
    cli.cmd.apply_overrides(&mut base);

    match &cli.sweep {
        None => {
            let (value, code) = execute_resolved(&cli.cmd, base, &tol, out_dir.as_deref());
            emit(out, &value);
            code
        }
        Some(entry) => match parse_sweep(entry) {
            Err(msg) => emit_config_error(out, cli.cmd.name(), &msg),
            Ok((key, values)) => {
                let (value, code) =
                    run_sweep(&cli.cmd, &base, &tol, out_dir.as_deref(), &key, &values);
                emit(out, &value);
                code
            }
        },
    }
}

fn apply_tol_override(tol: &mut Tolerances, entry: &str) -> Config<()> {
    let (name, value) = entry
        .split_once('=')
        .ok_or_else(|| format!("tolerance override must be name=value, got '{entry}'"))?;
    let parsed: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("tolerance value for '{name}' is not a number: '{value}'"))?;
    if !tol.set_by_name(name.trim(), parsed) {
        return Err(format!("unknown tolerance name '{}'", name.trim()));
    }
    Ok(())
}

fn parse_sweep(entry: &str) -> Config<(String, Vec<Value>)> {
    let (key, rest) = entry
        .split_once('=')
        .ok_or_else(|| format!("sweep must be key=v1,v2,..., got '{entry}'"))?;
    let key = key.trim().to_string();
    if !KNOWN_KEYS.contains(&key.as_str()) {
        return Err(format!(
            "unknown sweep key '{key}' (known keys: {})",
            KNOWN_KEYS.join(", ")
        ));
    }
    let values: Vec<Value> = rest
        .split(',')
        .map(|v| {
            let v = v.trim();
            serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::String(v.to_string()))
        })
        .collect();
    if values.is_empty() || rest.trim().is_empty() {
        return Err(format!("sweep '{key}' has no values"));
    }
    Ok((key, values))
}

fn run_sweep(
    cmd: &Cmd,
    base: &Map<String, Value>,
    tol: &Tolerances,
    out_dir: Option<&Path>,
    key: &str,
    values: &[Value],
) -> (Value, i32) {
    let mut results: Vec<(Value, i32)> = Vec::with_capacity(values.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|v| {
                let mut map = base.clone();
                map.insert(key.to_string(), v.clone());
                let sub: Option<PathBuf> =
                    out_dir.map(|d| d.join(format!("{key}_{}", sanitize(v))));
                scope.spawn(move || execute_resolved(cmd, map, tol, sub.as_deref()))
            })
            .collect();
        for handle in handles {
            results.push(handle.join().unwrap_or_else(|_| {
                (
                    json!({"schema": 1, "error": "sweep worker panicked"}),
                    EXIT_CONFIG,
                )
            }));
        }
    });

    let mut entries = Vec::with_capacity(values.len());
    let mut code = EXIT_PASS;
    for (v, (summary, entry_code)) in values.iter().zip(&results) {
        code = code.max(*entry_code);
        entries.push(json!({
            "value": v,
            "exit": entry_code,
            "summary": summary,
        }));
    }
    let value = json!({
        "schema": 1,
        "command": cmd.name(),
        "sweep": {"key": key, "values": values},
        "entries": entries,
        "pass": code == EXIT_PASS,
    });
    if let Some(dir) = out_dir {
        if let Err(msg) = write_summary(dir, &value) {
            return (
                json!({"schema": 1, "command": cmd.name(), "error": msg}),
                EXIT_CONFIG,
            );
        }
    }
    (value, code)
}

fn sanitize(v: &Value) -> String {
    let raw = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn emit(out: &mut dyn Write, value: &Value) {
    let text = serde_json::to_string_pretty(value).expect("JSON summaries serialize");
    let _ = writeln!(out, "{text}");
}

fn emit_config_error(out: &mut dyn Write, command: &str, msg: &str) -> i32 {
    emit(out, &json!({"schema": 1, "command": command, "error": msg}));
    EXIT_CONFIG
}

fn write_summary(dir: &Path, value: &Value) -> Config<()> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(value).expect("JSON summaries serialize");
    fs::write(&path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Resolve parameters, dispatch, compose the summary object, and write it
/// to the output directory when one is set.
fn execute_resolved(
    cmd: &Cmd,
    map: Map<String, Value>,
    tol: &Tolerances,
    out_dir: Option<&Path>,
) -> (Value, i32) {
    let params = Params::new(map);
    match dispatch(cmd, &params, tol, out_dir) {
        Err(CliError::Config(msg)) => (
            json!({"schema": 1, "command": cmd.name(), "error": msg}),
            EXIT_CONFIG,
        ),
        Ok((payload, pass)) => {
            let mut obj = Map::new();
            obj.insert("schema".to_string(), json!(1));
            obj.insert("command".to_string(), json!(cmd.name()));
            obj.insert("pass".to_string(), json!(pass));
            obj.insert("params".to_string(), params.used_value());
            for (k, v) in payload {
                obj.insert(k, v);
            }
            let value = Value::Object(obj);
            if let Some(dir) = out_dir {
                if let Err(msg) = write_summary(dir, &value) {
                    return (
                        json!({"schema": 1, "command": cmd.name(), "error": msg}),
                        EXIT_CONFIG,
                    );
                }
            }
            let code = if pass { EXIT_PASS } else { EXIT_CHECK_FAILED };
            (value, code)
        }
    }
}

fn dispatch(cmd: &Cmd, params: &Params, tol: &Tolerances, out_dir: Option<&Path>) -> CmdResult {
    match cmd {
        Cmd::SipAxioms(_) => cmd_sip_axioms(params, tol),
        Cmd::Coercivity(_) => cmd_coercivity(params, tol),
        Cmd::WaveCert(_) => cmd_wave_cert(params, tol),
        Cmd::Wave2Heat(_) => cmd_wave2heat(params, tol),
        Cmd::ResolventCheck(_) => cmd_resolvent_check(params, tol),
        Cmd::Counterexample(_) => cmd_counterexample(params, tol),
        Cmd::SquareGroup(_) => cmd_square_group(params, tol),
        Cmd::Evolve(_) => cmd_evolve(params, tol, out_dir),
        Cmd::Isometry(_) => cmd_isometry(params, tol),
    }
}

// ── Shared parameter helpers ─────────────────────────────────────────────

fn grid_cells(params: &Params) -> Config<usize> {
    let n = params.usize("n", 64)?;
    if n < 2 {
        return Err(format!("need at least 2 grid cells, got {n}"));
    }
    Ok(n)
}

fn exponent(params: &Params, default: f64) -> Config<f64> {
    let p = params.f64("p", default)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(format!("exponent p must satisfy 1 <= p < infinity, got {p}"));
    }
    Ok(p)
}

fn profile(params: &Params, default: &str) -> Config<LambdaProfile> {
    let text = params.str("profile", default)?;
    let prof: LambdaProfile = text
        .parse()
        .map_err(|e: String| format!("cannot parse profile '{text}': {e}"))?;
    prof.validate().map_err(|e| e.to_string())?;
    Ok(prof)
}

fn reflection(params: &Params, key: &str, default: f64) -> Config<f64> {
    params.f64(key, default)
}

fn closure_from_profile(
    prof: &LambdaProfile,
    n: usize,
    tol: &Tolerances,
) -> std::result::Result<Closure, Error> {
    let samples = prof.samples_at_midpoints(n);
    multiplication_s(&samples, tol)
}

// ── Commands ─────────────────────────────────────────────────────────────

fn cmd_sip_axioms(params: &Params, tol: &Tolerances) -> CmdResult {
    let n = grid_cells(params)?;
    let ps = params.f64_list("p", &[1.0, 1.5, 2.0, 3.0])?;
    let samples = params.usize("samples", 400)?;
    let seed = params.u64("seed", DEFAULT_SEED)?;
    for &p in &ps {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(CliError::Config(format!(
                "exponent p must satisfy 1 <= p < infinity, got {p}"
            )));
        }
    }

    let mut axioms = Vec::with_capacity(ps.len());
    let mut pass = true;
    for &p in &ps {
        let space = Space::Grid(GridSpace::nodes(p, n));
        let mut sampler = Sampler::new(seed);
        let report = sip_axiom_report(space, samples, &mut sampler, tol);
        pass &= report.pass;
        axioms.push(serde_json::to_value(&report).expect("axiom report serializes"));
    }

    // Duality spot check: the functional represented by g reproduces
    // [f, g] through a plain pairing and carries dual norm ||g||.
    let mut pairing_residual = 0.0f64;
    let mut dual_norm_residual = 0.0f64;
    let duality_draws = samples.clamp(1, 100);
    for &p in &ps {
        let grid = GridSpace::nodes(p, n);
        let space = Space::Grid(grid);
        let mut sampler = Sampler::new(seed ^ 0x9e37_79b9_7f4a_7c15);
        for _ in 0..duality_draws {
            let g = sampler.complex_vector(space.dim());
            let f = sampler.complex_vector(space.dim());
            let g_norm = space.norm(&g);
            if g_norm < 1e-9 {
                continue;
            }
            let functional = duality_functional(
                &DiscreteFunction::new(grid, g.clone()).expect("draw matches the grid"),
                tol,
            );
            let direct = space.sip(&f, &g, tol);
            let paired = functional.pair(&f);
            pairing_residual =
                pairing_residual.max((paired - direct).norm() / (1.0 + direct.norm()));
            dual_norm_residual =
                dual_norm_residual.max((functional.dual_norm() - g_norm).abs() / g_norm);
        }
    }
    let duality_pass = pairing_residual <= tol.linearity && dual_norm_residual <= 1e-8;
    pass &= duality_pass;

    let mut payload = Map::new();
    payload.insert("axioms".to_string(), Value::Array(axioms));
    payload.insert(
        "duality".to_string(),
        json!({
            "pairing_residual": pairing_residual,
            "dual_norm_residual": dual_norm_residual,
            "pass": duality_pass,
        }),
    );
    Ok((payload, pass))
}

fn cmd_coercivity(params: &Params, tol: &Tolerances) -> CmdResult {
    let n = grid_cells(params)?;
    let p = exponent(params, 2.0)?;
    let samples = params.usize("samples", 400)?;
    let seed = params.u64("seed", DEFAULT_SEED)?;
    let prof = profile(params, "2+sin")?;

    let closure = try_core!(closure_from_profile(&prof, n, tol));
    let space = GridSpace::midpoints(p, n);
    let mut sampler = Sampler::new(seed);
    let report = try_core!(coercivity_report(&closure.s, &space, samples, &mut sampler, tol));

    let (lambda_min, lambda_max) = prof.min_max();
    let bound = prof.coercivity_bound();
    let epsilon = (p == 2.0).then(|| hilbert_coercivity(&closure.s, &space, tol));
    let pass = report.m2 >= bound - 1e-9 && report.lambda_window > 0.0;

    let mut payload = Map::new();
    payload.insert(
        "report".to_string(),
        serde_json::to_value(&report).expect("coercivity report serializes"),
    );
    payload.insert(
        "profile_range".to_string(),
        json!([lambda_min, lambda_max]),
    );
    payload.insert("profile_bound".to_string(), json!(bound));
    payload.insert("hilbert_epsilon".to_string(), json!(epsilon));
    payload.insert(
        "closure_inverse_residual".to_string(),
        json!(closure.inverse_residual),
    );
    Ok((payload, pass))
}

fn cmd_wave_cert(params: &Params, tol: &Tolerances) -> CmdResult {
    let n = grid_cells(params)?;
    let k1 = reflection(params, "k1", 0.5)?;
    let k2 = reflection(params, "k2", -0.5)?;
    let p = exponent(params, 2.0)?;
    let lambda = params.f64("lambda", 1.0)?;
    let samples = params.usize("samples", 200)?;
    let seed = params.u64("seed", DEFAULT_SEED)?;
    if !(lambda > 0.0) {
        return Err(CliError::Config(format!(
            "the range-condition shift must be positive, got {lambda}"
        )));
    }

    let model = try_core!(wave_ext(n, k1, k2, p));
    let space = Space::Product(model.blocks.space());
    let mut sampler = Sampler::new(seed);
    let cert = try_core!(generation_certificate(
        &model.blocks.assembled,
        &space,
        lambda,
        samples,
        &mut sampler,
        tol,
    ));

    let pass = cert.pass;
    let mut payload = Map::new();
    payload.insert(
        "certificate".to_string(),
        serde_json::to_value(&cert).expect("certificate serializes"),
    );
    payload.insert("space".to_string(), json!(space.describe()));
    payload.insert(
        "dims".to_string(),
        json!({"nodes": model.blocks.x1.n, "midpoints": model.blocks.x2.n}),
    );
    Ok((payload, pass))
}

fn cmd_wave2heat(params: &Params, tol: &Tolerances) -> CmdResult {
    let n = grid_cells(params)?;
    let k1 = reflection(params, "k1", 0.5)?;
    let k2 = reflection(params, "k2", -0.5)?;
    let p = exponent(params, 2.0)?;
    let identity_samples = params.usize("identity_samples", 50)?;
    let seed = params.u64("seed", DEFAULT_SEED)?;
    let prof = profile(params, "2+sin")?;

    let model = try_core!(wave_ext(n, k1, k2, p));
    let closure = try_core!(closure_from_profile(&prof, n, tol));
    let lambda_samples = prof.samples_at_midpoints(n);
    let heat = try_core!(heat_direct(n, &lambda_samples, k1, k2));
    let a_s = try_core!(build_as(&model.blocks, &closure));

    // Entrywise comparison, relative to 1 + |a| + |b| per entry, plus a
    // bitwise flag (the two assembly routes share their operation order).
    let mut max_rel = 0.0f64;
    for i in 0..a_s.rows() {
        for j in 0..a_s.cols() {
            let a = a_s.get(i, j);
            let b = heat.direct.get(i, j);
            let rel = (a - b).norm() / (1.0 + a.norm() + b.norm());
            max_rel = max_rel.max(rel);
        }
    }
    let bitwise = a_s.sub(&heat.direct).max_abs() == 0.0;

    let mut sampler = Sampler::new(seed);
    let mut worst_identity = 0.0f64;
    for _ in 0..identity_samples {
        let x = sampler.complex_vector(model.blocks.x1.n);
        let res = try_core!(dissipation_identity_residual(&model.blocks, &closure, &x, tol));
        worst_identity = worst_identity.max(res);
    }

    let node_space = Space::Grid(model.blocks.x1);
    let margin = dissipativity_margin(&heat.direct, &node_space, identity_samples, &mut sampler, tol);

    let pass = max_rel <= tol.matrix_equality_rel
        && worst_identity <= tol.identity_residual_rel
        && margin.value <= tol.margin_pass;

    let mut payload = Map::new();
    payload.insert("max_rel_diff".to_string(), json!(max_rel));
    payload.insert("bitwise_equal".to_string(), json!(bitwise));
    payload.insert("identity_residual".to_string(), json!(worst_identity));
    payload.insert(
        "heat_margin".to_string(),
        serde_json::to_value(&margin).expect("margin serializes"),
    );
    payload.insert(
        "dims".to_string(),
        json!({"nodes": model.blocks.x1.n, "midpoints": model.blocks.x2.n}),
    );
    Ok((payload, pass))
}

fn cmd_resolvent_check(params: &Params, tol: &Tolerances) -> CmdResult {
    let n = grid_cells(params)?;
    let k1 = reflection(params, "k1", 0.5)?;
    let k2 = reflection(params, "k2", -0.5)?;
    let queries = params.usize("queries", 5)?.max(1);
    let seed = params.u64("seed", DEFAULT_SEED)?;
    let prof = profile(params, "2+sin")?;
    let mode_text = params.str("mode", "certified")?;
    let mode = match mode_text.as_str() {
        "certified" => ResolventMode::Certified,
        "exploratory" => ResolventMode::Exploratory,
        other => {
            return Err(CliError::Config(format!(
                "mode must be 'certified' or 'exploratory', got '{other}'"
            )))
        }
    };

    let model = try_core!(wave_ext(n, k1, k2, 2.0));
    let closure = try_core!(closure_from_profile(&prof, n, tol));
    let mut window_sampler = Sampler::new(seed ^ 0x5bd1_e995);
    let coercivity = try_core!(coercivity_report(
        &closure.s,
        &GridSpace::midpoints(2.0, n),
        200,
        &mut window_sampler,
        tol,
    ));
    let window = coercivity.lambda_window;

    let lambdas: Vec<f64> = if params.has("lambda") {
        vec![params.f64("lambda", 0.0)?]
    } else {
        // The fraction is computed first so the last shift is exactly the
        // window edge rather than one rounding step past it.
        (1..=queries)
            .map(|i| window * (i as f64 / queries as f64))
            .collect()
    };

    let mut sampler = Sampler::new(seed);
    let mut entries = Vec::with_capacity(lambdas.len());
    let mut max_defect = 0.0f64;
    let mut max_residual = 0.0f64;
    let mut all_solved = true;
    for &lambda in &lambdas {
        let g = sampler.complex_vector(model.blocks.x1.n);
        let query = ResolventQuery { lambda, g, mode };
        match resolvent_via_extension(&model.blocks, &closure, window, &query, tol) {
            Ok(sol) => {
                max_defect = max_defect.max(sol.closure_defect_rel);
                max_residual = max_residual.max(sol.resolvent_residual_rel);
                entries.push(json!({
                    "lambda": lambda,
                    "closure_defect_rel": sol.closure_defect_rel,
                    "resolvent_residual_rel": sol.resolvent_residual_rel,
                    "condition_estimate": sol.condition_estimate,
                    "in_window": sol.in_window,
                }));
            }
            Err(e) if is_config_error(&e) => return Err(CliError::Config(e.to_string())),
            Err(e) => {
                all_solved = false;
                entries.push(json!({"lambda": lambda, "error": e.to_string()}));
            }
        }
    }

    let pass = all_solved
        && max_defect <= tol.resolvent_defect_rel
        && max_residual <= tol.resolvent_defect_rel;

    let mut payload = Map::new();
    payload.insert("window".to_string(), json!(window));
    payload.insert("m2".to_string(), json!(coercivity.m2));
    payload.insert("queries".to_string(), Value::Array(entries));
    payload.insert("max_closure_defect".to_string(), json!(max_defect));
    payload.insert("max_resolvent_residual".to_string(), json!(max_residual));
    Ok((payload, pass))
}

fn cmd_counterexample(_params: &Params, tol: &Tolerances) -> CmdResult {
    let report = counterexample_fixture(tol);
    let extension_dissipative = report.ext_margin <= tol.margin_pass;
    let restriction_dissipative = report.a_s_margin <= tol.margin_pass;
    let pass = !extension_dissipative
        && restriction_dissipative
        && !report.norm_report.holds
        && report.witness_sip.re > 0.0;

    let mut payload = Map::new();
    payload.insert("ext_margin".to_string(), json!(report.ext_margin));
    payload.insert(
        "witness_sip".to_string(),
        json!({"re": report.witness_sip.re, "im": report.witness_sip.im}),
    );
    payload.insert("a_s_margin".to_string(), json!(report.a_s_margin));
    payload.insert(
        "extension_dissipative".to_string(),
        json!(extension_dissipative),
    );
    payload.insert(
        "restriction_dissipative".to_string(),
        json!(restriction_dissipative),
    );
    payload.insert(
        "norm_check".to_string(),
        serde_json::to_value(&report.norm_report).expect("norm report serializes"),
    );
    Ok((payload, pass))
}

fn cmd_square_group(params: &Params, tol: &Tolerances) -> CmdResult {
    let n = grid_cells(params)?;
    let k1 = reflection(params, "k1", 1.0)?;
    let k2 = reflection(params, "k2", 1.0)?;
    let prof = profile(params, "2+sin")?;

    let model = try_core!(wave_ext(n, k1, k2, 2.0));
    let closure = try_core!(closure_from_profile(&prof, n, tol));
    let square = try_core!(square_group_op(
        &model.blocks.a12(),
        &model.blocks.a2,
        &closure.s,
    ));
    let qdiag = q_diagonalize(&model);

    // When the first generator row carries no boundary terms, the square's
    // upper-left block reproduces the closed operator exactly.
    let special_form = model.blocks.a11().max_abs() == 0.0;
    let ul_matches = if special_form {
        let a_s = try_core!(build_as(&model.blocks, &closure));
        Some(square.ul.sub(&a_s).max_abs() == 0.0)
    } else {
        None
    };

    let pass = square.off_diag_max == 0.0
        && qdiag.off_diagonal_max == 0.0
        && ul_matches.unwrap_or(true);

    let mut payload = Map::new();
    payload.insert("off_diag_max".to_string(), json!(square.off_diag_max));
    payload.insert(
        "q_off_diagonal_max".to_string(),
        json!(qdiag.off_diagonal_max),
    );
    payload.insert("special_form".to_string(), json!(special_form));
    payload.insert("ul_matches_generator".to_string(), json!(ul_matches));
    payload.insert(
        "dims".to_string(),
        json!({"group": square.cal_a.rows(), "square": square.square.rows()}),
    );
    Ok((payload, pass))
}

fn cmd_evolve(params: &Params, tol: &Tolerances, out_dir: Option<&Path>) -> CmdResult {
    let system = params.str("system", "heat")?;
    let is_heat = match system.as_str() {
        "heat" => true,
        "wave" => false,
        other => {
            return Err(CliError::Config(format!(
                "system must be 'heat' or 'wave', got '{other}'"
            )))
        }
    };
    let n = grid_cells(params)?;
    let default_k = if is_heat { -1.0 } else { 1.0 };
    let k1 = reflection(params, "k1", default_k)?;
    let k2 = reflection(params, "k2", default_k)?;
    let scheme = params.str("scheme", "crank-nicolson")?;
    let dt = params.f64("dt", 1e-3)?;
    let t_end = params.f64("t_end", 0.1)?;
    let x0_kind = params.str("x0", "cos")?;
    let snapshots = params.bool("snapshots", false)?;
    let seed = params.u64("seed", DEFAULT_SEED)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CliError::Config(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(CliError::Config(format!(
            "t_end must be at least dt, got t_end={t_end}, dt={dt}"
        )));
    }

    // Assemble the generator, the space it acts on, and node coordinates.
    let (a, space, xi, extra_dims) = if is_heat {
        let prof = profile(params, "2+sin")?;
        let samples = prof.samples_at_midpoints(n);
        let heat = try_core!(heat_direct(n, &samples, k1, k2));
        let dim = heat.direct.rows();
        let space = Space::Grid(GridSpace::nodes(2.0, n).with_dim(dim));
        let xi: Vec<f64> = heat
            .retained_nodes
            .iter()
            .map(|&node| node as f64 / n as f64)
            .collect();
        (heat.direct, space, xi, 0usize)
    } else {
        let model = try_core!(wave_ext(n, k1, k2, 2.0));
        let xi = model.node_xi();
        let midpoints = model.blocks.x2.n;
        (
            model.blocks.assembled.clone(),
            Space::Product(model.blocks.space()),
            xi,
            midpoints,
        )
    };
    let dim = a.rows();

    let mut sampler = Sampler::new(seed);
    let x0: Vec<C64> = match x0_kind.as_str() {
        "cos" => profile_state(&xi, extra_dims, |x| (std::f64::consts::PI * x).cos()),
        "bump" => profile_state(&xi, extra_dims, |x| (-50.0 * (x - 0.5).powi(2)).exp()),
        "ones" => profile_state(&xi, extra_dims, |_| 1.0),
        "random" => sampler.complex_vector(dim),
        other => {
            return Err(CliError::Config(format!(
                "x0 must be one of cos, bump, ones, random; got '{other}'"
            )))
        }
    };

    let trace: EvolutionTrace = match scheme.as_str() {
        "implicit-euler" => {
            try_core!(implicit_euler_trace(&a, &x0, t_end, dt, &space, snapshots, tol))
        }
        "crank-nicolson" => {
            try_core!(crank_nicolson_trace(&a, &x0, t_end, dt, &space, snapshots, tol))
        }
        "expm" => try_core!(expm_trace(&a, &x0, t_end, dt, &space, snapshots, tol)),
        other => {
            return Err(CliError::Config(format!(
                "scheme must be implicit-euler, crank-nicolson, or expm; got '{other}'"
            )))
        }
    };

    let mut trace_csv = Value::Null;
    let mut states_csv = Value::Null;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join("trace.csv");
        fs::write(&path, trace.to_csv_string())
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
        trace_csv = json!("trace.csv");
        if let Some(csv) = trace.states_csv_string() {
            let path = dir.join("states.csv");
            fs::write(&path, csv)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            states_csv = json!("states.csv");
        }
    }

    let non_increasing = trace.is_non_increasing(tol.contraction_slack);
    let pass = non_increasing;

    let mut payload = Map::new();
    payload.insert("scheme".to_string(), json!(trace.scheme.label()));
    payload.insert("steps".to_string(), json!(trace.times.len() - 1));
    payload.insert("initial_norm".to_string(), json!(trace.norms[0]));
    payload.insert(
        "final_norm".to_string(),
        json!(*trace.norms.last().expect("trace has at least one entry")),
    );
    payload.insert("max_step_growth".to_string(), json!(trace.max_step_growth()));
    payload.insert("non_increasing".to_string(), json!(non_increasing));
    payload.insert("dim".to_string(), json!(dim));
    payload.insert("trace_csv".to_string(), trace_csv);
    payload.insert("states_csv".to_string(), states_csv);
    Ok((payload, pass))
}

/// Real-valued node profile followed by zeros on the midpoint block.
fn profile_state(xi: &[f64], midpoints: usize, f: impl Fn(f64) -> f64) -> Vec<C64> {
    let mut state: Vec<C64> = xi.iter().map(|&x| C64::new(f(x), 0.0)).collect();
    state.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(midpoints));
    state
}

fn cmd_isometry(params: &Params, tol: &Tolerances) -> CmdResult {
    let n = grid_cells(params)?;
    let ts = params.f64_list("t", &[-1.0, -0.1, 0.1, 1.0])?;
    let samples = params.usize("samples", 20)?.max(1);
    let seed = params.u64("seed", DEFAULT_SEED)?;
    if ts.is_empty() || ts.iter().any(|t| !t.is_finite()) {
        return Err(CliError::Config("t must be a nonempty list of finite times".into()));
    }

    let model = try_core!(wave_ext(n, 1.0, 1.0, 2.0));
    let a = &model.blocks.assembled;
    let space = Space::Product(model.blocks.space());
    let antisymmetry = a.add(&a.transpose()).max_abs();
    let mut sampler = Sampler::new(seed);
    let deviation = try_core!(isometry_deviation(a, &ts, samples, &space, &mut sampler, tol));

    let pass = deviation <= tol.isometry && antisymmetry == 0.0;
    let mut payload = Map::new();
    payload.insert("deviation".to_string(), json!(deviation));
    payload.insert("antisymmetry".to_string(), json!(antisymmetry));
    payload.insert("times".to_string(), json!(ts));
    payload.insert("dim".to_string(), json!(a.rows()));
    Ok((payload, pass))
}

// ── Tests ────────────────────────────────────────────────────────────────
