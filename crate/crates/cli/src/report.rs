//! Serializable report types. Field order here is the order in the JSON.

use crate::config::{InputSpec, Mode, RunConfig};
use nonlocal_meter::{DensityMatrix64, Outcome, PureState64};
use num_complex::Complex64;
use serde::Serialize;

/// Complex number as `[re, im]`.
pub type ComplexPair = [f64; 2];

fn pair(z: Complex64) -> ComplexPair {
    [z.re, z.im]
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub library: LibraryInfo,
    pub config: ConfigEcho,
    pub results: ModeResults,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report types always serialize");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LibraryInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for LibraryInfo {
    fn default() -> Self {
        Self { name: "nonlocal-meter", version: env!("CARGO_PKG_VERSION") }
    }
}

/// The resolved config, limited to the keys the mode reads. Output paths
/// are left out so that reports written to different files compare equal.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<ComplexPair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(c: &RunConfig) -> Self {
        let m = c.mode;
        let when = |modes: &[Mode]| modes.contains(&m);
        Self {
            mode: m.name().to_string(),
            preset: match &c.input {
                Some(InputSpec::Preset(p)) => Some(p.name().to_string()),
                _ => None,
            },
            amplitudes: c.input.as_ref().map(|i| i.amplitudes().iter().copied().map(pair).collect()),
            observable: when(&[Mode::Protocol]).then(|| c.observable.to_string()),
            phi_grid: when(&[Mode::WeakSweep]).then(|| c.phi_grid.clone()),
            shots: when(&[Mode::Optics, Mode::Tomography]).then_some(c.shots),
            seed: c.seed.filter(|_| m.is_stochastic()),
            noise_p: when(&[Mode::Tomography]).then_some(c.noise_p),
            visibility: when(&[Mode::Optics]).then_some(c.visibility),
            resamples: when(&[Mode::Tomography]).then_some(c.resamples),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeResults {
    Protocol(ProtocolReport),
    WeakSweep(WeakSweepReport),
    Optics(OpticsReport),
    Tomography(TomographyReport),
    Table1(Table1Report),
}

#[derive(Clone, Debug, Serialize)]
pub struct StateReport {
    /// `|HH⟩, |HV⟩, |VH⟩, |VV⟩` amplitudes.
    pub amplitudes: Vec<ComplexPair>,
    pub ket: String,
}

impl From<&PureState64> for StateReport {
    fn from(s: &PureState64) -> Self {
        Self { amplitudes: s.amplitudes().iter().copied().map(pair).collect(), ket: ket_string(s.amplitudes()) }
    }
}

/// Renders two-qubit amplitudes in polarization notation with the global
/// phase fixed so the first nonzero amplitude is real and positive.
pub fn ket_string(amps: &[Complex64]) -> String {
    const LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];
    let cut = 1e-9;
    let phase = amps.iter().find(|a| a.norm() > cut).map(|a| a.conj() / a.norm()).unwrap_or(Complex64::new(1.0, 0.0));
    let snap = |x: f64| if x.abs() < cut { 0.0 } else { x };
    let mut out = String::new();
    for (a, label) in amps.iter().zip(LABELS) {
        if a.norm() <= cut {
            continue;
        }
        let z = a * phase;
        let (re, im) = (snap(z.re), snap(z.im));
        let (negative, coef) = match (re, im) {
            (r, 0.0) if (r.abs() - 1.0).abs() < cut => (r < 0.0, String::new()),
            (r, 0.0) => (r < 0.0, format!("{:.4}", r.abs())),
            (0.0, i) => (i < 0.0, format!("{:.4}i", i.abs())),
            (r, i) => (false, format!("({r:.4}{i:+.4}i)")),
        };
        if out.is_empty() {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        out.push_str(&coef);
        out.push_str(&format!("|{label}⟩"));
    }
    out
}

pub fn matrix_rows(rho: &DensityMatrix64) -> Vec<Vec<ComplexPair>> {
    (0..rho.dim()).map(|i| (0..rho.dim()).map(|j| pair(rho.entry(i, j))).collect()).collect()
}

pub fn outcome_label(o: Outcome) -> String {
    o.to_string()
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolReport {
    pub observable: String,
    pub analytic: AnalyticReport,
    pub circuit: Vec<CircuitRow>,
    pub max_probability_deviation: f64,
    pub min_fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticReport {
    pub p_plus: f64,
    pub p_minus: f64,
    pub state_plus: Option<StateReport>,
    pub state_minus: Option<StateReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CircuitRow {
    pub erasure_outcome: String,
    pub erasure_prob: f64,
    pub step2_success_prob: f64,
    pub outcome: String,
    pub probability: f64,
    pub state: Option<StateReport>,
    pub fidelity_vs_analytic: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakSweepReport {
    pub p_minus: f64,
    pub rows: Vec<WeakRow>,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakRow {
    pub phi: f64,
    pub p_meter_1: f64,
    /// `P− sin²(φ/2)`.
    pub predicted: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpticsReport {
    pub visibility: f64,
    pub alice_prob: f64,
    pub erasure_prob: f64,
    pub readout_efficiency: f64,
    pub herald_prob: f64,
    pub outcomes: Vec<OpticsRow>,
    pub total_variation: f64,
    pub coincidences: Coincidences,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpticsRow {
    pub outcome: String,
    pub probability: f64,
    pub analytic_probability: f64,
    pub fidelity_vs_analytic: Option<f64>,
    pub purity: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Coincidences {
    pub shots: u64,
    pub plus: u64,
    pub minus: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TomographyReport {
    pub noise_p: f64,
    pub mean_shots: f64,
    pub resamples: usize,
    pub branches: Vec<TomographyBranch>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TomographyBranch {
    pub outcome: String,
    pub ideal_probability: f64,
    pub total_counts: u64,
    pub hv_counts: u64,
    pub reconstructed: Vec<Vec<ComplexPair>>,
    pub fidelity: Estimate,
    pub probability: Estimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub preset: String,
    pub input: String,
    pub outcomes: Vec<Table1Cell>,
    pub probability_sum: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Cell {
    pub outcome: String,
    pub probability: f64,
    pub state: Option<StateReport>,
    pub table_ket: String,
    pub fidelity_vs_table: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}
