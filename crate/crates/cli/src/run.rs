//! Mode runners.

use crate::config::{Mode, RunConfig};
use crate::report::*;
use crate::CliError;
use nonlocal_meter::optics::sample_coincidences;
use nonlocal_meter::protocol::analytic_expected_observable;
use nonlocal_meter::qstate::QubitRegister;
use nonlocal_meter::{
    analytic_expected, apply_depolarizing, estimate_fidelity_and_probability, run_observable, run_setup, run_weak,
    tomography, CouplingAngle, DensityMatrix64, ErasurePolicy, Outcome, Preset, PureState64, Role, SystemInput64,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::time::Instant;

/// Probabilities of an ideal run must sum to one at least this closely.
const SUM_TOL: f64 = 1e-6;

type Result<T> = std::result::Result<T, CliError>;

/// Runs `config` and returns the report without writing anything.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let ctx = format!("mode {}", config.mode);
    let core = |e| CliError::from_core(&ctx, e);
    let input = config.input.as_ref().map(|i| SystemInput64::normalized(i.amplitudes())).transpose().map_err(core)?;
    let input = input.as_ref();
    let needs = || input.ok_or_else(|| CliError::Config(format!("{ctx}: no input state")));
    let results = match config.mode {
        Mode::Protocol => ModeResults::Protocol(protocol(config, needs()?).map_err(core)?),
        Mode::WeakSweep => ModeResults::WeakSweep(weak_sweep(config, needs()?).map_err(core)?),
        Mode::Optics => ModeResults::Optics(optics(config, needs()?).map_err(core)?),
        Mode::Tomography => ModeResults::Tomography(tomography_mode(config, needs()?).map_err(core)?),
        Mode::Table1 => ModeResults::Table1(table1().map_err(core)?),
    };
    check_sums(&results).map_err(|m| CliError::Numerical(format!("{ctx}: {m}")))?;
    Ok(RunReport {
        library: LibraryInfo::default(),
        config: config.into(),
        results,
        timing_ms: config.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Runs `config`, writes the report to its output path (or returns it for
/// printing when there is none) and writes the sweep CSV if requested.
pub fn execute(config: &RunConfig) -> Result<String> {
    let report = run(config)?;
    let json = report.to_json();
    if let Some(path) = &config.out {
        std::fs::write(path, &json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    if let (Some(path), ModeResults::WeakSweep(sweep)) = (&config.csv, &report.results) {
        write_sweep_csv(path, sweep)?;
    }
    Ok(json)
}

fn write_sweep_csv(path: &std::path::Path, sweep: &WeakSweepReport) -> Result<()> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut text = String::from("phi,p_meter_1,predicted\n");
    for r in &sweep.rows {
        text.push_str(&format!("{},{},{}\n", r.phi, r.p_meter_1, r.predicted));
    }
    std::fs::write(path, text).map_err(io)
}

fn check_sums(results: &ModeResults) -> std::result::Result<(), String> {
    let check = |what: &str, s: f64| {
        if (s - 1.0).abs() > SUM_TOL {
            Err(format!("{what} probabilities sum to {s}"))
        } else {
            Ok(())
        }
    };
    match results {
        ModeResults::Protocol(p) => {
            check("analytic", p.analytic.p_plus + p.analytic.p_minus)?;
            for pair in p.circuit.chunks(2) {
                check("circuit", pair.iter().map(|r| r.probability).sum())?;
            }
            Ok(())
        }
        ModeResults::Optics(o) if o.visibility == 1.0 => {
            check("optics", o.outcomes.iter().map(|r| r.probability).sum())
        }
        ModeResults::Table1(t) => t.rows.iter().try_for_each(|r| check(&r.preset, r.probability_sum)),
        _ => Ok(()),
    }
}

fn state_fidelity(a: Option<&PureState64>, b: Option<&PureState64>) -> nonlocal_meter::Result<Option<f64>> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some(a.overlap(b)?)),
        _ => Ok(None),
    }
}

fn protocol(config: &RunConfig, input: &SystemInput64) -> nonlocal_meter::Result<ProtocolReport> {
    let expected = analytic_expected_observable(input, config.observable)?;
    let results = run_observable(input, config.observable, ErasurePolicy::KeepBoth)?;
    let mut max_dev: f64 = 0.0;
    let mut min_fid: f64 = 1.0;
    let mut circuit = Vec::with_capacity(results.len());
    for r in &results {
        let fid = state_fidelity(r.conditional_state.as_ref(), expected.state(r.outcome))?;
        max_dev = max_dev.max((r.probability - expected.probability(r.outcome)).abs());
        if let Some(f) = fid {
            min_fid = min_fid.min(f);
        }
        circuit.push(CircuitRow {
            erasure_outcome: outcome_label(r.erasure_outcome),
            erasure_prob: r.erasure_prob,
            step2_success_prob: r.step2_success_prob,
            outcome: outcome_label(r.outcome),
            probability: r.probability,
            state: r.conditional_state.as_ref().map(Into::into),
            fidelity_vs_analytic: fid,
        });
    }
    Ok(ProtocolReport {
        observable: config.observable.to_string(),
        analytic: AnalyticReport {
            p_plus: expected.p_plus,
            p_minus: expected.p_minus,
            state_plus: expected.psi_plus.as_ref().map(Into::into),
            state_minus: expected.psi_minus.as_ref().map(Into::into),
        },
        circuit,
        max_probability_deviation: max_dev,
        min_fidelity: min_fid,
    })
}

fn weak_sweep(config: &RunConfig, input: &SystemInput64) -> nonlocal_meter::Result<WeakSweepReport> {
    let p_minus = analytic_expected(input).p_minus;
    let rows: Vec<WeakRow> = config
        .phi_grid
        .par_iter()
        .map(|&phi| {
            let weak = run_weak(input, CouplingAngle::new(phi)?)?;
            let predicted = p_minus * (phi / 2.0).sin().powi(2);
            Ok(WeakRow { phi, p_meter_1: weak.p_meter_1, predicted, deviation: (weak.p_meter_1 - predicted).abs() })
        })
        .collect::<nonlocal_meter::Result<_>>()?;
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(WeakSweepReport { p_minus, rows, max_deviation })
}

fn optics(config: &RunConfig, input: &SystemInput64) -> nonlocal_meter::Result<OpticsReport> {
    let setup = run_setup(input, config.visibility)?;
    let expected = analytic_expected(input);
    let mut outcomes = Vec::new();
    let mut tv = 0.0;
    for o in &setup.outcomes {
        let analytic = expected.probability(o.outcome);
        tv += (o.probability - analytic).abs() / 2.0;
        let fidelity = match (&o.conditional, expected.state(o.outcome)) {
            (Some(rho), Some(psi)) => Some(rho.fidelity(&psi.to_density())?),
            _ => None,
        };
        outcomes.push(OpticsRow {
            outcome: outcome_label(o.outcome),
            probability: o.probability,
            analytic_probability: analytic,
            fidelity_vs_analytic: fidelity,
            purity: o.conditional.as_ref().map(|r| r.purity()),
        });
    }
    let shots = config.shots.round() as u64;
    let [plus, minus] = sample_coincidences(&setup, shots, config.seed.unwrap_or_default())?;
    Ok(OpticsReport {
        visibility: setup.visibility,
        alice_prob: setup.alice_prob,
        erasure_prob: setup.erasure_prob,
        readout_efficiency: setup.readout_efficiency,
        herald_prob: setup.herald_prob(),
        outcomes,
        total_variation: tv,
        coincidences: Coincidences { shots, plus, minus },
    })
}

fn tomography_mode(config: &RunConfig, input: &SystemInput64) -> nonlocal_meter::Result<TomographyReport> {
    let seed = config.seed.unwrap_or_default();
    let expected = analytic_expected(input);
    let ideal = |o: Outcome| -> nonlocal_meter::Result<DensityMatrix64> {
        let psi = expected
            .state(o)
            .ok_or(nonlocal_meter::Error::ImpossibleOutcome { probability: expected.probability(o) })?;
        Ok(psi.to_density())
    };
    let (ideal_plus, ideal_minus) = (ideal(Outcome::Plus)?, ideal(Outcome::Minus)?);
    let noisy_plus = apply_depolarizing(&ideal_plus, config.noise_p)?;
    let noisy_minus = apply_depolarizing(&ideal_minus, config.noise_p)?;
    let (counts_plus, counts_minus) =
        tomography::simulate_branches(&noisy_plus, expected.p_plus, &noisy_minus, config.shots, seed)?;
    // Streams of seed and seed + 1 drew the counts.
    let est = estimate_fidelity_and_probability(
        &counts_plus,
        &counts_minus,
        &ideal_plus,
        &ideal_minus,
        config.resamples,
        seed.wrapping_add(2),
    )?;
    let branch = |o: Outcome,
                  counts: &tomography::CountsTable,
                  f: &tomography::EstimateWithError,
                  p: &tomography::EstimateWithError|
     -> nonlocal_meter::Result<TomographyBranch> {
        let rho: DensityMatrix64 = tomography::reconstruct(counts)?;
        Ok(TomographyBranch {
            outcome: outcome_label(o),
            ideal_probability: expected.probability(o),
            total_counts: counts.total(),
            hv_counts: counts.hv_total(),
            reconstructed: matrix_rows(&rho),
            fidelity: Estimate { value: f.value, sigma: f.sigma },
            probability: Estimate { value: p.value, sigma: p.sigma },
        })
    };
    Ok(TomographyReport {
        noise_p: config.noise_p,
        mean_shots: config.shots,
        resamples: config.resamples,
        branches: vec![
            branch(Outcome::Plus, &counts_plus, &est.f_plus, &est.p_plus)?,
            branch(Outcome::Minus, &counts_minus, &est.f_minus, &est.p_minus)?,
        ],
    })
}

/// Reference kets for the table1 mode: input label, `Π+` ket, `Π−` ket, with amplitudes
/// written as `(re, im)` over a common normalization.
struct TableRow {
    preset: Preset,
    input: &'static str,
    plus: (&'static str, [(f64, f64); 4]),
    minus: (&'static str, [(f64, f64); 4]),
}

const TABLE1: [TableRow; 4] = [
    TableRow {
        preset: Preset::Phi1,
        input: "|+⟩|H⟩",
        plus: ("|HH⟩", [(1., 0.), (0., 0.), (0., 0.), (0., 0.)]),
        minus: ("|HV⟩", [(0., 0.), (1., 0.), (0., 0.), (0., 0.)]),
    },
    TableRow {
        preset: Preset::Phi2,
        input: "|+⟩|+⟩",
        plus: ("(|HH⟩+|VV⟩)/√2", [(1., 0.), (0., 0.), (0., 0.), (1., 0.)]),
        minus: ("(|HV⟩+|VH⟩)/√2", [(0., 0.), (1., 0.), (1., 0.), (0., 0.)]),
    },
    TableRow {
        preset: Preset::Phi3,
        input: "|+⟩|R⟩",
        plus: ("(|HH⟩+i|VV⟩)/√2", [(1., 0.), (0., 0.), (0., 0.), (0., 1.)]),
        minus: ("(i|HV⟩+|VH⟩)/√2", [(0., 0.), (0., 1.), (1., 0.), (0., 0.)]),
    },
    TableRow {
        preset: Preset::Phi4,
        input: "(√2|H⟩+|V⟩)(√2|H⟩+|V⟩)/3",
        plus: ("(2|HH⟩+|VV⟩)/√5", [(2., 0.), (0., 0.), (0., 0.), (1., 0.)]),
        minus: ("(|HV⟩+|VH⟩)/√2", [(0., 0.), (1., 0.), (1., 0.), (0., 0.)]),
    },
];

fn table_state(amps: [(f64, f64); 4]) -> nonlocal_meter::Result<PureState64> {
    PureState64::normalized(
        QubitRegister::new(vec![Role::A, Role::B])?,
        amps.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
    )
}

fn table1() -> nonlocal_meter::Result<Table1Report> {
    let mut rows = Vec::new();
    for row in &TABLE1 {
        let expected = analytic_expected(&SystemInput64::preset(row.preset));
        let mut cells = Vec::new();
        for (outcome, (label, amps)) in [(Outcome::Plus, row.plus), (Outcome::Minus, row.minus)] {
            let state = expected.state(outcome);
            let fidelity = state_fidelity(state, Some(&table_state(amps)?))?;
            let note = match (state, fidelity) {
                (Some(s), Some(f)) if (f - 1.0).abs() > 1e-9 => Some(format!(
                    "the table lists {label}, but projecting {} onto this outcome gives {}",
                    row.input,
                    ket_string(s.amplitudes())
                )),
                _ => None,
            };
            cells.push(Table1Cell {
                outcome: outcome_label(outcome),
                probability: expected.probability(outcome),
                state: state.map(Into::into),
                table_ket: label.to_string(),
                fidelity_vs_table: fidelity,
                note,
            });
        }
        rows.push(Table1Row {
            preset: row.preset.name().to_string(),
            input: row.input.to_string(),
            probability_sum: cells.iter().map(|c| c.probability).sum(),
            outcomes: cells,
        });
    }
    Ok(Table1Report { rows })
}
