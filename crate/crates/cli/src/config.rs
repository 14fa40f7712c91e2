//! Run configuration: command-line flags layered over an optional
//! `key = value` file, layered over the built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use spin_cooling::coherent::DEFAULT_STEPS;
use spin_cooling::{LarmorSign, SpinSystemParams};

use crate::error::{config, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ideal,
    Kinetic,
    CoherentCheck,
}

impl Mode {
    fn from_str_value(s: &str) -> Result<Self, CliError> {
        <Mode as ValueEnum>::from_str(s.trim(), true).map_err(|_| {
            config(format!(
                "unknown mode '{s}' (expected ideal, kinetic or coherent-check)"
            ))
        })
    }
}

/// Options shared by every command. All optional so that a config file can
/// fill the gaps.
#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// Key-value configuration file; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Engine: ideal, kinetic or coherent-check.
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    /// Number of permutations.
    #[arg(long = "np", global = true, value_name = "N")]
    pub n_p: Option<usize>,
    /// Triplet reset delay τ, s.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Evolution delay before detection, s.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau_ev: Option<f64>,
    /// Reset delay before the final swap of the enhancement protocol, s.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau_prime: Option<f64>,
    /// J coupling, Hz.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub j: Option<f64>,
    /// Chemical-shift difference, ppm.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_ppm: Option<f64>,
    /// Static field, T.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b0: Option<f64>,
    /// Magnetogyric ratio, rad/s/T.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Sample temperature, K.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub temperature: Option<f64>,
    /// Longitudinal relaxation time, s.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t1: Option<f64>,
    /// Singlet-order lifetime, s.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub ts: Option<f64>,
    /// Output file (directory for coherent-check); stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// τ grid: comma list, `log:a:b:n` or `lin:a:b:n`.
    #[arg(long, global = true, value_name = "GRID")]
    pub tau_grid: Option<String>,
    /// Evolution-delay grid, same syntax as --tau-grid.
    #[arg(long, global = true, value_name = "GRID")]
    pub tau_ev_grid: Option<String>,
    /// Pulse-shape coefficient file, one value per line.
    #[arg(long, global = true, value_name = "FILE")]
    pub apsoc_coefficients: Option<PathBuf>,
    /// Time steps for the shaped-pulse propagation.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Sign convention of the Larmor frequency: negative or positive.
    #[arg(long, global = true, value_name = "SIGN")]
    pub larmor_sign: Option<String>,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// False when the mode came from the defaults.
    pub mode_explicit: bool,
    pub n_p: usize,
    pub tau: f64,
    pub tau_ev: f64,
    pub tau_prime: f64,
    pub params: SpinSystemParams,
    pub out: Option<PathBuf>,
    pub tau_grid: Option<Vec<f64>>,
    pub tau_ev_grid: Option<Vec<f64>>,
    pub apsoc_coefficients: Option<PathBuf>,
    pub steps: usize,
    pub larmor_sign: LarmorSign,
}

const KEYS: &[&str] = &[
    "mode",
    "np",
    "tau",
    "tau_ev",
    "tau_prime",
    "j",
    "delta_ppm",
    "b0",
    "gamma",
    "temperature",
    "t1",
    "ts",
    "out",
    "tau_grid",
    "tau_ev_grid",
    "apsoc_coefficients",
    "steps",
    "larmor_sign",
];

/// Parses `key = value` lines; `#` starts a comment. Keys accept `-` or `_`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config(format!("line {}: expected key = value", lineno + 1)))?;
        let mut key = k.trim().to_ascii_lowercase().replace('-', "_");
        if key == "n_p" {
            key = "np".into();
        }
        if !KEYS.contains(&key.as_str()) {
            return Err(config(format!(
                "line {}: unknown key '{}'",
                lineno + 1,
                k.trim()
            )));
        }
        if map.insert(key, v.trim().to_string()).is_some() {
            return Err(config(format!(
                "line {}: duplicate key '{}'",
                lineno + 1,
                k.trim()
            )));
        }
    }
    Ok(map)
}

/// Comma-separated values, or `log:a:b:n` / `lin:a:b:n`. Must be strictly
/// increasing.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    let grid = if let Some(spec) = s.strip_prefix("log:").or_else(|| s.strip_prefix("lin:")) {
        let log = s.starts_with("log:");
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(config(format!("grid '{s}': expected {}:a:b:n", &s[..3])));
        };
        let a = parse_f64(a, "grid start")?;
        let b = parse_f64(b, "grid end")?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| config(format!("grid '{s}': point count must be an integer")))?;
        if n < 2 {
            return Err(config(format!("grid '{s}': need at least two points")));
        }
        if log && !(a > 0.0 && b > 0.0) {
            return Err(config(format!(
                "grid '{s}': logarithmic bounds must be positive"
            )));
        }
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let f = i as f64 / last;
                if i == n - 1 {
                    b
                } else if log {
                    a * (b / a).powf(f)
                } else {
                    a + (b - a) * f
                }
            })
            .collect()
    } else {
        s.split(',')
            .map(|v| parse_f64(v, "grid value"))
            .collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err(config("empty grid"));
    }
    if grid.iter().any(|&x| x < 0.0) {
        return Err(config(format!("grid '{s}': durations must be nonnegative")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config(format!("grid '{s}' is not strictly increasing")));
    }
    Ok(grid)
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| config(format!("{what}: '{}' is not a number", s.trim())))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config(format!("{what} must be finite")))
    }
}

fn duration(v: f64, what: &str) -> Result<f64, CliError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(config(format!("{what} must be nonnegative, got {v}")))
    }
}

impl RunConfig {
    /// Merges flags over the file named by `--config` (if any) over defaults.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                parse_config_file(&text).map_err(|e| match e {
                    CliError::Config(m) => config(format!("{}: {m}", path.display())),
                    other => other,
                })?
            }
            None => BTreeMap::new(),
        };
        Self::merge(args, &file)
    }

    pub fn merge(args: &RunArgs, file: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let num = |flag: Option<f64>, key: &str, default: f64| -> Result<f64, CliError> {
            match (flag, file.get(key)) {
                (Some(v), _) if v.is_finite() => Ok(v),
                (Some(_), _) => Err(config(format!("{key} must be finite"))),
                (None, Some(s)) => parse_f64(s, key),
                (None, None) => Ok(default),
            }
        };
        let text = |flag: &Option<String>, key: &str| -> Option<String> {
            flag.clone().or_else(|| file.get(key).cloned())
        };
        let path = |flag: &Option<PathBuf>, key: &str| -> Option<PathBuf> {
            flag.clone().or_else(|| file.get(key).map(PathBuf::from))
        };

        let (mode, mode_explicit) = match (args.mode, file.get("mode")) {
            (Some(m), _) => (m, true),
            (None, Some(s)) => (Mode::from_str_value(s)?, true),
            (None, None) => (Mode::Kinetic, false),
        };
        let n_p = match (args.n_p, file.get("np")) {
            (Some(n), _) => n,
            (None, Some(s)) => s
                .parse()
                .map_err(|_| config(format!("np: '{s}' is not a nonnegative integer")))?,
            (None, None) => 6,
        };
        let steps = match (args.steps, file.get("steps")) {
            (Some(n), _) => n,
            (None, Some(s)) => s
                .parse()
                .map_err(|_| config(format!("steps: '{s}' is not a positive integer")))?,
            (None, None) => DEFAULT_STEPS,
        };
        if steps == 0 {
            return Err(config("steps must be positive"));
        }
        let larmor_sign = match text(&args.larmor_sign, "larmor_sign") {
            Some(s) => s
                .parse()
                .map_err(|e: spin_cooling::Error| config(e.to_string()))?,
            None => LarmorSign::default(),
        };

        let d = SpinSystemParams::default();
        let params = SpinSystemParams {
            j_coupling: num(args.j, "j", d.j_coupling)?,
            delta_shift: num(args.delta_ppm, "delta_ppm", d.delta_shift)?,
            b0: num(args.b0, "b0", d.b0)?,
            gamma: num(args.gamma, "gamma", d.gamma)?,
            temperature: num(args.temperature, "temperature", d.temperature)?,
            t1: num(args.t1, "t1", d.t1)?,
            ts: num(args.ts, "ts", d.ts)?,
        };
        params.validate().map_err(|e| config(e.to_string()))?;

        let grid = |key: &str, flag: &Option<String>| -> Result<Option<Vec<f64>>, CliError> {
            text(flag, key).map(|s| parse_grid(&s)).transpose()
        };

        Ok(RunConfig {
            mode,
            mode_explicit,
            n_p,
            tau: duration(num(args.tau, "tau", 28.0)?, "tau")?,
            tau_ev: duration(num(args.tau_ev, "tau_ev", 0.0)?, "tau_ev")?,
            tau_prime: duration(num(args.tau_prime, "tau_prime", 18.0)?, "tau_prime")?,
            params,
            out: path(&args.out, "out"),
            tau_grid: grid("tau_grid", &args.tau_grid)?,
            tau_ev_grid: grid("tau_ev_grid", &args.tau_ev_grid)?,
            apsoc_coefficients: path(&args.apsoc_coefficients, "apsoc_coefficients"),
            steps,
            larmor_sign,
        })
    }

    pub fn out_path(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}
