//! `pnc`: command-line front end.
//!
//! Subcommands read JSON (matrices as arrays of rows of `[re, im]` pairs)
//! and write JSON or CSV. Failures print one `error:` line and exit with
//! status 1; usage errors exit with status 2.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use pnc::cfwd::{computation_rate, select_coefficients, ChannelVector, CoeffVector};
use pnc::gint::GaussInt;
use pnc::lattice::build_partition;
use pnc::netsim::{self, Experiment, SchemeKind, SimConfig, TrialOptions};
use pnc::snf::{smith_normal_form, GMatrix};

#[derive(Parser)]
#[command(
    name = "pnc",
    version,
    about = "Lattice network coding over the Gaussian integers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smith normal form of a square Gaussian-integer matrix.
    Snf {
        /// JSON matrix file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Print a short summary instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Index, invariant factors and field structure of a partition {G, J}.
    AnalyzePartition {
        /// JSON file with keys `G` (complex) and `J` (Gaussian integers);
        /// stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Monte Carlo throughput curves for the two-relay network.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the trial count of the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the master seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = SchemeArg::Both)]
        scheme: SchemeArg,
    },
    /// Best coefficient vector and computation rate for a channel.
    Rate {
        /// Comma-separated gains, e.g. "1,0" or "0.5+1.2i,-1i".
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long = "snr-db", allow_hyphen_values = true)]
        snr_db: f64,
        /// Number of users; must match the length of `--h`.
        #[arg(long = "L")]
        users: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    SignalCode,
    Qam,
    Both,
}

impl SchemeArg {
    fn kinds(self) -> Vec<SchemeKind> {
        match self {
            SchemeArg::SignalCode => vec![SchemeKind::SignalCode],
            SchemeArg::Qam => vec![SchemeKind::Qam],
            SchemeArg::Both => vec![SchemeKind::SignalCode, SchemeKind::Qam],
        }
    }
}

type AnyResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::FAILURE;
    }
    let outcome = match cli.command {
        Command::Snf { input, text } => cmd_snf(input.as_deref(), text),
        Command::AnalyzePartition { input } => cmd_analyze(input.as_deref()),
        Command::Simulate {
            config,
            out,
            trials,
            seed,
            scheme,
        } => cmd_simulate(&config, &out, trials, seed, scheme),
        Command::Rate { h, snr_db, users } => cmd_rate(&h, snr_db, users),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

/// Honors `PNC_THREADS` for the simulation worker pool.
fn configure_threads() -> AnyResult<()> {
    let Ok(raw) = std::env::var("PNC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("PNC_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn read_input(path: Option<&Path>) -> AnyResult<String> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| format!("stdin: {e}"))?;
            Ok(s)
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> AnyResult<T> {
    serde_json::from_str(text).map_err(|e| format!("malformed {what}: {e}"))
}

fn cmd_snf(input: Option<&Path>, text: bool) -> AnyResult<()> {
    let j: GMatrix = parse_json(&read_input(input)?, "matrix JSON")?;
    let s = smith_normal_form(&j).map_err(|e| e.to_string())?;
    if text {
        let diag: Vec<String> = s.d.diag().iter().map(|&g| short(g)).collect();
        println!("D = diag({})", diag.join(", "));
        let inv: Vec<String> = s.invariant_factors.iter().map(|&g| short(g)).collect();
        println!("invariant factors: [{}]", inv.join(", "));
    } else {
        println!("{}", serde_json::to_string(&s).map_err(|e| e.to_string())?);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionInput {
    #[serde(rename = "G")]
    g: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "J")]
    j: GMatrix,
}

fn cmd_analyze(input: Option<&Path>) -> AnyResult<()> {
    let inp: PartitionInput = parse_json(&read_input(input)?, "partition JSON")?;
    let rows = inp.g.len();
    let cols = inp.g.first().map_or(0, Vec::len);
    if inp.g.iter().any(|r| r.len() != cols) {
        return Err("G has rows of different lengths".into());
    }
    let g = nalgebra::DMatrix::from_fn(rows, cols, |i, c| {
        let [re, im] = inp.g[i][c];
        Complex64::new(re, im)
    });
    let part = build_partition(&g, &inp.j).map_err(|e| e.to_string())?;
    let ann = part.snf().annihilator();
    let factorization = ann.factor().map_err(|e| e.to_string())?;
    let verdict = part.is_vector_space().map_err(|e| e.to_string())?;
    let report = json!({
        "index": part.index(),
        "invariant_factors": part.snf().invariant_factors,
        "annihilator": ann,
        "annihilator_factorization": factorization,
        "annihilator_factorization_text": factorization.to_string(),
        "vector_space": verdict.map(|(q, k)| json!({ "q": q, "k": k })),
    });
    println!("{report}");
    Ok(())
}

fn cmd_simulate(
    config_path: &Path,
    out: &Path,
    trials: Option<usize>,
    seed: Option<u64>,
    scheme: SchemeArg,
) -> AnyResult<()> {
    let mut config: SimConfig = parse_json(&read_input(Some(config_path))?, "config")?;
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().map_err(|e| e.to_string())?;

    let mut points = Vec::new();
    for kind in scheme.kinds() {
        let exp = Experiment::new(&config, kind).map_err(|e| e.to_string())?;
        points.extend(
            netsim::simulate(
                &exp,
                &config.snr_db,
                config.trials,
                &TrialOptions::default(),
            )
            .map_err(|e| e.to_string())?,
        );
    }
    fs::write(out, netsim::to_csv(&points)).map_err(|e| format!("{}: {e}", out.display()))?;

    let sidecar_path = sidecar_path(out);
    let mut text = serde_json::to_string_pretty(&config).map_err(|e| e.to_string())?;
    text.push('\n');
    fs::write(&sidecar_path, text).map_err(|e| format!("{}: {e}", sidecar_path.display()))?;
    eprintln!(
        "wrote {} and {} ({})",
        out.display(),
        sidecar_path.display(),
        scheme
            .kinds()
            .into_iter()
            .map(SchemeKind::name)
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

/// `results.csv` → `results.config.json`, next to the CSV.
fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.config.json"))
}

fn parse_gains(s: &str) -> AnyResult<Vec<Complex64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<Complex64>()
                .map_err(|_| format!("cannot parse channel gain {t:?}"))
        })
        .collect()
}

fn cmd_rate(h: &str, snr_db: f64, users: Option<usize>) -> AnyResult<()> {
    let h = parse_gains(h)?;
    if let Some(l) = users {
        if l != h.len() {
            return Err(format!("--L {l} does not match {} gains in --h", h.len()));
        }
    }
    let ch = ChannelVector::from_db(h, snr_db).map_err(|e| e.to_string())?;
    let a = select_coefficients(&ch).map_err(|e| e.to_string())?;
    let r = computation_rate(&ch, &a).map_err(|e| e.to_string())?;
    println!("a={}", short_vec(&a));
    println!("R={r:?}");
    Ok(())
}

/// Compact rendering: `0`, `1`, `-i`, `2+3i`.
fn short(g: GaussInt) -> String {
    let imag = |b: i64| match b {
        1 => "i".to_string(),
        -1 => "-i".to_string(),
        b => format!("{b}i"),
    };
    match (g.re, g.im) {
        (a, 0) => a.to_string(),
        (0, b) => imag(b),
        (a, b) if b < 0 => format!("{a}-{}", imag(-b)),
        (a, b) => format!("{a}+{}", imag(b)),
    }
}

fn short_vec(a: &CoeffVector) -> String {
    let parts: Vec<String> = a.0.iter().map(|&g| short(g)).collect();
    format!("({})", parts.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms() {
        assert_eq!(short(GaussInt::new(0, 0)), "0");
        assert_eq!(short(GaussInt::new(-3, 0)), "-3");
        assert_eq!(short(GaussInt::new(0, -1)), "-i");
        assert_eq!(short(GaussInt::new(2, 3)), "2+3i");
        assert_eq!(short(GaussInt::new(2, -1)), "2-i");
    }

    #[test]
    fn gains_parse() {
        let h = parse_gains("1,0").unwrap();
        assert_eq!(h, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let h = parse_gains("0.5+1.5i, -2i").unwrap();
        assert_eq!(h, vec![Complex64::new(0.5, 1.5), Complex64::new(0.0, -2.0)]);
        assert!(parse_gains("1,x").is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/run.csv")),
            PathBuf::from("/tmp/run.config.json")
        );
    }
}
