//! Argument handling, config files and exit codes for the `ellq` binary.

use clap::{Args, Parser, Subcommand, ValueEnum};
use ellq_core::{make_params, Report, RunConfig, Suite, Truncation, C64};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CHECKS_FAILED: u8 = 1;
    /// Malformed flags; clap's own usage errors share this code.
    pub const USAGE: u8 = 2;
    pub const UNKNOWN_SUITE: u8 = 3;
    pub const INVALID_PARAMS: u8 = 4;
    pub const UNWRITABLE_OUTPUT: u8 = 5;
    pub const BAD_CONFIG: u8 = 6;
    pub const NUMERIC_FAILURE: u8 = 7;
}

/// Environment variable read for the default worker-thread count.
pub const THREADS_ENV: &str = "ELLQ_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ellq", version, about = "Numerical verification of elliptic quantum group identities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a verification suite and write a report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    /// theta, qseries, modes, ope, exchange, rmatrix, dybe, evalrep, identities, constants or all.
    #[arg(long)]
    pub suite: Option<String>,
    /// Rank N of sl_N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Level c.
    #[arg(long)]
    pub c: Option<f64>,
    /// Sample points per sampled family (suite default if unset).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance applied to every ordinary case (suite defaults if unset).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report path; stdout when unset.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; defaults to the ELLQ_THREADS environment variable.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Cap on product and mode-sum terms.
    #[arg(long)]
    pub max_terms: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
}

/// A failure that maps to a specific exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

/// Parse a `key = value` config file. Blank lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let k = k.trim().replace('-', "_");
        if k.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

const CONFIG_KEYS: [&str; 13] =
    ["suite", "n", "q", "r", "c", "points", "seed", "tol", "out", "format", "threads", "max_terms", "tail_tol"];

fn fill<T: FromStr>(slot: &mut Option<T>, cfg: &BTreeMap<String, String>, key: &str) -> Result<(), String> {
    if slot.is_none() {
        if let Some(v) = cfg.get(key) {
            *slot = Some(v.parse().map_err(|_| format!("config key `{key}`: cannot parse `{v}`"))?);
        }
    }
    Ok(())
}

/// Fill unset flags from a config map.
pub fn merge_config(args: &mut VerifyArgs, cfg: &BTreeMap<String, String>) -> Result<(), String> {
    if let Some(k) = cfg.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(format!("unknown config key `{k}`"));
    }
    fill(&mut args.suite, cfg, "suite")?;
    fill(&mut args.n, cfg, "n")?;
    fill(&mut args.q, cfg, "q")?;
    fill(&mut args.r, cfg, "r")?;
    fill(&mut args.c, cfg, "c")?;
    fill(&mut args.points, cfg, "points")?;
    fill(&mut args.seed, cfg, "seed")?;
    fill(&mut args.tol, cfg, "tol")?;
    fill(&mut args.out, cfg, "out")?;
    fill(&mut args.format, cfg, "format")?;
    fill(&mut args.threads, cfg, "threads")?;
    fill(&mut args.max_terms, cfg, "max_terms")?;
    fill(&mut args.tail_tol, cfg, "tail_tol")?;
    Ok(())
}

pub const DEFAULT_SUITE: &str = "all";
pub const DEFAULT_N: usize = 2;
pub const DEFAULT_Q: f64 = 0.5;
pub const DEFAULT_R: f64 = 7.3;
pub const DEFAULT_C: f64 = 0.0;
pub const DEFAULT_SEED: u64 = 42;

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub suite: Suite,
    pub run: RunConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

/// Apply config file and defaults, then validate.
pub fn resolve(mut args: VerifyArgs) -> Result<Resolved, Failure> {
    if let Some(path) = args.config.clone() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::new(exit::BAD_CONFIG, format!("cannot read config {}: {e}", path.display())))?;
        let map = parse_config(&text).map_err(|e| Failure::new(exit::BAD_CONFIG, format!("{}: {e}", path.display())))?;
        merge_config(&mut args, &map).map_err(|e| Failure::new(exit::BAD_CONFIG, format!("{}: {e}", path.display())))?;
    }
    let suite: Suite = args
        .suite
        .as_deref()
        .unwrap_or(DEFAULT_SUITE)
        .parse()
        .map_err(|e: ellq_core::Error| Failure::new(exit::UNKNOWN_SUITE, e.to_string()))?;
    let invalid = |m: String| Failure::new(exit::INVALID_PARAMS, m);
    let params = make_params(
        C64::new(args.q.unwrap_or(DEFAULT_Q), 0.0),
        args.r.unwrap_or(DEFAULT_R),
        args.c.unwrap_or(DEFAULT_C),
        args.n.unwrap_or(DEFAULT_N),
    )
    .map_err(|e| invalid(e.to_string()))?;
    let defaults = Truncation::default();
    let trunc = Truncation::new(args.max_terms.unwrap_or(defaults.max_terms), args.tail_tol.unwrap_or(defaults.tail_tol))
        .map_err(|e| invalid(e.to_string()))?;
    if args.points == Some(0) {
        return Err(invalid("--points must be >= 1".into()));
    }
    if let Some(t) = args.tol {
        if !(t >= 0.0) {
            return Err(invalid(format!("--tol must be a nonnegative number, got {t}")));
        }
    }
    let threads = match args.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| invalid(format!("{THREADS_ENV}={v} is not a thread count")))?),
            Err(_) => None,
        },
    };
    if threads == Some(0) {
        return Err(invalid("thread count must be >= 1".into()));
    }
    Ok(Resolved {
        suite,
        run: RunConfig { params, points: args.points, seed: args.seed.unwrap_or(DEFAULT_SEED), tol: args.tol, trunc },
        out: args.out,
        format: args.format.unwrap_or(Format::Json),
        threads,
    })
}

/// Serialize a report in the chosen format.
pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report is always serializable");
            s.push('\n');
            s
        }
        Format::Csv => report.to_csv(),
    }
}

/// One summary line per suite present in the report.
pub fn summary_lines(report: &Report) -> Vec<String> {
    let mut groups: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for c in &report.cases {
        let suite = c.name.split('/').next().unwrap_or(&report.suite);
        let g = groups.entry(suite).or_insert((0, 0, 0.0));
        g.0 += 1;
        if c.pass {
            g.1 += 1;
        }
        if !c.is_control() && (c.residual > g.2 || c.residual.is_nan()) {
            g.2 = c.residual;
        }
    }
    groups
        .into_iter()
        .map(|(s, (total, passed, max))| {
            let verdict = if passed == total { "PASS" } else { "FAIL" };
            format!("{verdict} {s}: {passed}/{total} cases, max_residual {max:e}")
        })
        .collect()
}

fn open_output(path: &Path) -> Result<File, Failure> {
    File::create(path).map_err(|e| Failure::new(exit::UNWRITABLE_OUTPUT, format!("cannot write {}: {e}", path.display())))
}

/// Run `verify` and return the exit code.
pub fn verify(args: VerifyArgs) -> Result<u8, Failure> {
    let res = resolve(args)?;
    // Open the output before the run so an unwritable path fails fast.
    let mut out_file = res.out.as_deref().map(open_output).transpose()?;
    let run = || ellq_core::run(res.suite, &res.run);
    let report = match res.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::new(exit::INVALID_PARAMS, format!("cannot start {n} threads: {e}")))?
            .install(run),
        None => run(),
    }
    .map_err(|e| Failure::new(exit::NUMERIC_FAILURE, e.to_string()))?;
    let text = render(&report, res.format);
    match (&mut out_file, &res.out) {
        (Some(f), Some(path)) => f
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new(exit::UNWRITABLE_OUTPUT, format!("cannot write {}: {e}", path.display())))?,
        _ => print!("{text}"),
    }
    for line in summary_lines(&report) {
        eprintln!("{line}");
    }
    Ok(if report.all_pass() { exit::OK } else { exit::CHECKS_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let m = parse_config("# header\nq = 0.4\n\n seed=7 # trailing\nmax-terms = 300\n").unwrap();
        assert_eq!(m["q"], "0.4");
        assert_eq!(m["seed"], "7");
        assert_eq!(m["max_terms"], "300");
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn flags_beat_config_beat_defaults() {
        let mut a = VerifyArgs { q: Some(0.3), ..Default::default() };
        let m = parse_config("q = 0.4\nr = 5.5\n").unwrap();
        merge_config(&mut a, &m).unwrap();
        assert_eq!(a.q, Some(0.3));
        assert_eq!(a.r, Some(5.5));
        let res = resolve(a).unwrap();
        assert_eq!(res.run.params.n, DEFAULT_N);
        assert_eq!(res.run.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let mut a = VerifyArgs::default();
        assert!(merge_config(&mut a, &parse_config("colour = red").unwrap()).is_err());
    }

    #[test]
    fn error_codes() {
        let bad_suite = VerifyArgs { suite: Some("nope".into()), ..Default::default() };
        assert_eq!(resolve(bad_suite).unwrap_err().code, exit::UNKNOWN_SUITE);
        let bad_q = VerifyArgs { q: Some(1.2), ..Default::default() };
        assert_eq!(resolve(bad_q).unwrap_err().code, exit::INVALID_PARAMS);
        let bad_cfg = VerifyArgs { config: Some("/nonexistent/ellq.conf".into()), ..Default::default() };
        assert_eq!(resolve(bad_cfg).unwrap_err().code, exit::BAD_CONFIG);
    }
}
