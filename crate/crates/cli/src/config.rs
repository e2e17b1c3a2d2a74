//! Run configuration: a TOML document and command-line flags, merged with
//! flags taking precedence.

use crate::CliError;
use clap::{Parser, ValueEnum};
use nonlocal_meter::{ObservableSpec, Preset};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

pub const DEFAULT_SHOTS: f64 = 1e5;
pub const DEFAULT_RESAMPLES: usize = 200;
pub const DEFAULT_PHI_GRID: &str = "0:pi:9";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Protocol,
    WeakSweep,
    Optics,
    Tomography,
    Table1,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Protocol => "protocol",
            Mode::WeakSweep => "weak-sweep",
            Mode::Optics => "optics",
            Mode::Tomography => "tomography",
            Mode::Table1 => "table1",
        }
    }

    /// Modes that draw random numbers and therefore need a seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Mode::Optics | Mode::Tomography)
    }

    fn needs_input(self) -> bool {
        self != Mode::Table1
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputSpec {
    Preset(Preset),
    /// Normalized amplitudes in `|00⟩, |01⟩, |10⟩, |11⟩` order.
    Amplitudes([Complex64; 4]),
}

impl InputSpec {
    pub fn amplitudes(&self) -> [Complex64; 4] {
        match self {
            InputSpec::Preset(p) => p.amplitudes().map(|(re, im)| Complex64::new(re, im)),
            InputSpec::Amplitudes(a) => *a,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: Option<InputSpec>,
    pub phi_grid: Vec<f64>,
    pub shots: f64,
    pub seed: Option<u64>,
    pub noise_p: f64,
    pub visibility: f64,
    pub resamples: usize,
    pub observable: ObservableSpec,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub timing: bool,
}

/// Amplitudes may be written as numbers or as complex literals like `"0.5i"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AmpEntry {
    Real(f64),
    Text(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AmpsValue {
    List(Vec<AmpEntry>),
    Text(String),
}

/// One configuration layer. Every key is optional so layers can be merged.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigLayer {
    pub mode: Option<Mode>,
    pub preset: Option<String>,
    pub amps: Option<AmpsValue>,
    pub phi_grid: Option<String>,
    pub shots: Option<f64>,
    pub seed: Option<u64>,
    pub noise_p: Option<f64>,
    pub visibility: Option<f64>,
    pub resamples: Option<usize>,
    pub observable: Option<String>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub timing: Option<bool>,
}

impl ConfigLayer {
    /// Keys set in `over` replace those in `self`. Preset and amplitudes
    /// count as one key, so a flag for either overrides both from the file.
    pub fn merged(self, over: ConfigLayer) -> ConfigLayer {
        let input_override = over.preset.is_some() || over.amps.is_some();
        let (preset, amps) = if input_override { (over.preset, over.amps) } else { (self.preset, self.amps) };
        ConfigLayer {
            mode: over.mode.or(self.mode),
            preset,
            amps,
            phi_grid: over.phi_grid.or(self.phi_grid),
            shots: over.shots.or(self.shots),
            seed: over.seed.or(self.seed),
            noise_p: over.noise_p.or(self.noise_p),
            visibility: over.visibility.or(self.visibility),
            resamples: over.resamples.or(self.resamples),
            observable: over.observable.or(self.observable),
            out: over.out.or(self.out),
            csv: over.csv.or(self.csv),
            timing: over.timing.or(self.timing),
        }
    }

    pub fn validate(self) -> Result<RunConfig, CliError> {
        let mode = self.mode.ok_or_else(|| config_err("no mode given"))?;
        let input = match (self.preset, self.amps) {
            (Some(_), Some(_)) => return Err(config_err("give either preset or amps, not both")),
            (Some(p), None) => Some(InputSpec::Preset(p.parse().map_err(config_err)?)),
            (None, Some(a)) => Some(InputSpec::Amplitudes(parse_amps(&a)?)),
            (None, None) => None,
        };
        if mode.needs_input() && input.is_none() {
            return Err(config_err(format!("mode {mode} needs a preset or amps")));
        }
        if mode.is_stochastic() && self.seed.is_none() {
            return Err(config_err(format!("mode {mode} is stochastic and needs a seed")));
        }
        let phi_grid = parse_phi_grid(self.phi_grid.as_deref().unwrap_or(DEFAULT_PHI_GRID))?;
        let shots = self.shots.unwrap_or(DEFAULT_SHOTS);
        if !(shots.is_finite() && shots > 0.0) {
            return Err(config_err(format!("shots must be positive, got {shots}")));
        }
        let noise_p = self.noise_p.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&noise_p) {
            return Err(config_err(format!("noise-p must lie in [0, 1], got {noise_p}")));
        }
        let visibility = self.visibility.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&visibility) {
            return Err(config_err(format!("visibility must lie in [0, 1], got {visibility}")));
        }
        let resamples = self.resamples.unwrap_or(DEFAULT_RESAMPLES);
        if resamples < 100 {
            return Err(config_err(format!("resamples must be at least 100, got {resamples}")));
        }
        let observable = match self.observable {
            Some(s) => s.parse().map_err(config_err)?,
            None => ObservableSpec::ZZ,
        };
        if self.csv.is_some() && mode != Mode::WeakSweep {
            return Err(config_err("csv output is only produced by weak-sweep"));
        }
        Ok(RunConfig {
            mode,
            input,
            phi_grid,
            shots,
            seed: self.seed,
            noise_p,
            visibility,
            resamples,
            observable,
            out: self.out,
            csv: self.csv,
            timing: self.timing.unwrap_or(false),
        })
    }
}

/// Parses a TOML configuration document into a validated config.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_layer(text)?.validate()
}

pub fn parse_layer(text: &str) -> Result<ConfigLayer, CliError> {
    toml::from_str(text).map_err(|e| config_err(e.message()))
}

fn config_err(msg: impl fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

fn parse_amps(value: &AmpsValue) -> Result<[Complex64; 4], CliError> {
    let entries: Vec<Complex64> = match value {
        AmpsValue::Text(s) => s.split(',').map(parse_complex).collect::<Result<_, _>>()?,
        AmpsValue::List(v) => v
            .iter()
            .map(|e| match e {
                AmpEntry::Real(x) => Ok(Complex64::new(*x, 0.0)),
                AmpEntry::Text(s) => parse_complex(s),
            })
            .collect::<Result<_, _>>()?,
    };
    let amps: [Complex64; 4] =
        entries.try_into().map_err(|v: Vec<_>| config_err(format!("expected 4 amplitudes, got {}", v.len())))?;
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(config_err("amplitudes must be finite and not all zero"));
    }
    Ok(amps.map(|a| a / norm))
}

fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    // num-complex wants an explicit coefficient on a bare imaginary unit.
    let t = match t.as_str() {
        "i" | "+i" => "1i".to_string(),
        "-i" => "-1i".to_string(),
        _ => t,
    };
    t.parse::<Complex64>().map_err(|_| config_err(format!("malformed amplitude {s:?}")))
}

/// `start:stop:count` with endpoints included, or a single angle. Angles
/// accept `pi` in forms like `pi`, `pi/4`, `3pi/4`, `0.5pi`.
pub fn parse_phi_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => vec![parse_angle(single)?],
        [start, stop, count] => {
            let (a, b) = (parse_angle(start)?, parse_angle(stop)?);
            let n: usize = count.trim().parse().map_err(|_| config_err(format!("bad grid count {count:?}")))?;
            match n {
                0 => return Err(config_err("phi grid needs at least one point")),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            }
        }
        _ => return Err(config_err(format!("phi grid {spec:?} is not start:stop:count"))),
    };
    if let Some(bad) = grid.iter().find(|&&p| !(0.0..=PI + 1e-12).contains(&p)) {
        return Err(config_err(format!("coupling angle {bad} outside [0, pi]")));
    }
    Ok(grid.into_iter().map(|p| p.min(PI)).collect())
}

fn parse_angle(s: &str) -> Result<f64, CliError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    let bad = || config_err(format!("malformed angle {s:?}"));
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let value = match num.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let k = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            k * PI
        }
        None => num.parse::<f64>().map_err(|_| bad())?,
    };
    let v = value / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nonlocal-meter", version, about = "Simulate nonlocal product-Pauli measurements")]
pub struct Cli {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// phi1, phi2, phi3 or phi4.
    #[arg(long)]
    pub preset: Option<String>,
    /// Four comma-separated complex amplitudes, e.g. "1,0,0,0.5i".
    #[arg(long, allow_hyphen_values = true)]
    pub amps: Option<String>,
    /// Coupling angles as start:stop:count, e.g. "0:pi:9".
    #[arg(long)]
    pub phi_grid: Option<String>,
    #[arg(long)]
    pub shots: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise_p: Option<f64>,
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Bootstrap resamples for tomography error bars.
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Product Pauli observable for protocol mode, e.g. "XZ".
    #[arg(long)]
    pub observable: Option<String>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV path for the weak-sweep table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Include wall-clock timing in the report (breaks byte-reproducibility).
    #[arg(long)]
    pub timing: bool,
}

impl Cli {
    pub fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            mode: self.mode,
            preset: self.preset.clone(),
            amps: self.amps.clone().map(AmpsValue::Text),
            phi_grid: self.phi_grid.clone(),
            shots: self.shots,
            seed: self.seed,
            noise_p: self.noise_p,
            visibility: self.visibility,
            resamples: self.resamples,
            observable: self.observable.clone(),
            out: self.out.clone(),
            csv: self.csv.clone(),
            timing: self.timing.then_some(true),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
                parse_layer(&text)?
            }
            None => ConfigLayer::default(),
        };
        base.merged(self.layer()).validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled() {
        let cfg = parse_config("mode = \"protocol\"\npreset = \"phi4\"").unwrap();
        assert_eq!(cfg.shots, 1e5);
        assert_eq!(cfg.noise_p, 0.0);
        assert_eq!(cfg.visibility, 1.0);
        assert_eq!(cfg.phi_grid.len(), 9);
        assert_eq!(cfg.observable, ObservableSpec::ZZ);
    }

    #[test]
    fn phi4_preset_amplitudes() {
        let cfg = parse_config("mode = \"protocol\"\npreset = \"phi4\"").unwrap();
        let a = cfg.input.unwrap().amplitudes();
        let r2 = 2f64.sqrt();
        for (x, e) in a.iter().zip([2.0 / 3.0, r2 / 3.0, r2 / 3.0, 1.0 / 3.0]) {
            assert!((x - e).norm() < 1e-15);
        }
    }

    #[test]
    fn phi1_preset_amplitudes() {
        let a = InputSpec::Preset(Preset::Phi1).amplitudes();
        let h = 0.5f64.sqrt();
        assert_eq!(a.map(|z| z.re), [h, 0.0, h, 0.0]);
    }

    #[test]
    fn amplitudes_are_normalized() {
        let cfg = parse_config("mode = \"protocol\"\namps = [1, 1, 1, 1]").unwrap();
        assert!(cfg.input.unwrap().amplitudes().iter().all(|a| (a - 0.5).norm() < 1e-15));
        let cfg = parse_config("mode = \"protocol\"\namps = \"1, i, 1, -i\"").unwrap();
        let a = cfg.input.unwrap().amplitudes();
        assert!((a[1] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((a[3] - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        let cfg = parse_config("mode = \"protocol\"\namps = [\"0.6\", 0, \"0.8i\", 0]").unwrap();
        assert!((cfg.input.unwrap().amplitudes()[2] - Complex64::new(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn config_errors() {
        for text in [
            "mode = \"bogus\"\npreset = \"phi1\"",
            "preset = \"phi1\"",
            "mode = \"protocol\"",
            "mode = \"protocol\"\npreset = \"phi9\"",
            "mode = \"protocol\"\namps = [1, 1, 1]",
            "mode = \"protocol\"\namps = [0, 0, 0, 0]",
            "mode = \"protocol\"\namps = \"1, x, 0, 0\"",
            "mode = \"protocol\"\npreset = \"phi1\"\namps = [1, 0, 0, 0]",
            "mode = \"optics\"\npreset = \"phi1\"",
            "mode = \"tomography\"\npreset = \"phi1\"",
            "mode = \"protocol\"\npreset = \"phi1\"\nnoise-p = 1.5",
            "mode = \"protocol\"\npreset = \"phi1\"\nshots = 0",
            "mode = \"protocol\"\npreset = \"phi1\"\nunknown = 1",
            "mode = \"protocol\"\npreset = \"phi1\"\ncsv = \"x.csv\"",
            "mode = \"tomography\"\npreset = \"phi1\"\nseed = 1\nresamples = 10",
        ] {
            assert!(matches!(parse_config(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn table1_needs_no_input() {
        assert!(parse_config("mode = \"table1\"").is_ok());
    }

    #[test]
    fn phi_grid_forms() {
        let g = parse_phi_grid("0:pi:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - PI / 2.0).abs() < 1e-15);
        assert_eq!(g[4], PI);
        assert!((parse_phi_grid("3pi/4").unwrap()[0] - 0.75 * PI).abs() < 1e-15);
        assert!((parse_phi_grid("0.5*pi").unwrap()[0] - 0.5 * PI).abs() < 1e-15);
        assert!((parse_phi_grid("pi/4:pi/2:2").unwrap()[1] - PI / 2.0).abs() < 1e-15);
        for bad in ["", "0:pi", "0:4:3", "0:pi:0", "-pi/4", "x", "0:pi:two"] {
            assert!(parse_phi_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file = parse_layer("mode = \"protocol\"\npreset = \"phi1\"\nshots = 10\nseed = 3").unwrap();
        let flags = ConfigLayer { amps: Some(AmpsValue::Text("1,0,0,0".into())), seed: Some(9), ..Default::default() };
        let cfg = file.merged(flags).validate().unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.shots, 10.0);
        assert!(matches!(cfg.input, Some(InputSpec::Amplitudes(_))));
    }
}
