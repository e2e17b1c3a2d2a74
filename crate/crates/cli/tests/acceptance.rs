//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use nonlocal_meter::measurement::kraus_apply;
use nonlocal_meter::optics::run_setup;
use nonlocal_meter::protocol::{analytic_expected, run_strong, run_weak, ErasurePolicy, Preset, SystemInput};
use nonlocal_meter::qstate::QubitRegister;
use nonlocal_meter::tomography::{
    all_settings, apply_depolarizing, estimate_fidelity_and_probability, reconstruct, simulate_branches,
    simulate_counts,
};
use nonlocal_meter::{
    decomposition_check, stream_rng, weak_decomposition_check, CouplingAngle, KrausSet, Outcome, PureState64, Role,
    SystemInput64,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::Command;
use std::time::{Duration, Instant};

type Check = Result<String, String>;

/// Criterion number, optional runtime budget, check.
type Criterion = (u32, Option<Duration>, fn() -> Check);

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ab() -> QubitRegister {
    QubitRegister::new(vec![Role::A, Role::B]).unwrap()
}

fn ket(amps: [(f64, f64); 4]) -> PureState64 {
    PureState64::normalized(ab(), amps.iter().map(|&(r, i)| Complex64::new(r, i)).collect()).unwrap()
}

fn haar(n: usize, seed: u64) -> Vec<SystemInput64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| SystemInput::random(&mut rng)).collect()
}

fn criterion_1() -> Check {
    let mut worst: f64 = 0.0;
    for (preset, p_plus) in [(Preset::Phi1, 0.5), (Preset::Phi2, 0.5), (Preset::Phi3, 0.5), (Preset::Phi4, 5.0 / 9.0)] {
        for r in run_strong(&SystemInput64::preset(preset), ErasurePolicy::KeepBoth).map_err(|e| e.to_string())? {
            let want = if r.outcome == Outcome::Plus { p_plus } else { 1.0 - p_plus };
            worst = worst.max((r.probability - want).abs());
        }
    }
    ensure(worst < 1e-10, format!("max |P - P_ideal| = {worst:.2e}"))
}

/// Table 1 kets, with the first row's `Π−` entry replaced by `|VH⟩`.
fn table_kets() -> [(Preset, PureState64, PureState64); 4] {
    let z = (0.0, 0.0);
    let one = (1.0, 0.0);
    [
        (Preset::Phi1, ket([one, z, z, z]), ket([z, z, one, z])),
        (Preset::Phi2, ket([one, z, z, one]), ket([z, one, one, z])),
        (Preset::Phi3, ket([one, z, z, (0.0, 1.0)]), ket([z, (0.0, 1.0), one, z])),
        (Preset::Phi4, ket([(2.0, 0.0), z, z, one]), ket([z, one, one, z])),
    ]
}

fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for (preset, plus, minus) in table_kets() {
        for r in run_strong(&SystemInput64::preset(preset), ErasurePolicy::KeepBoth).map_err(|e| e.to_string())? {
            let target = if r.outcome == Outcome::Plus { &plus } else { &minus };
            let state = r.conditional_state.ok_or(format!("{preset} {}: no state", r.outcome))?;
            worst = worst.max(1.0 - state.overlap(target).unwrap());
        }
    }
    let cfg = nonlocal_meter_cli::parse_config("mode = \"table1\"").unwrap();
    let json = nonlocal_meter_cli::run(&cfg).map_err(|e| e.to_string())?.to_json();
    let notes = json.matches("\"note\"").count();
    ensure(
        worst < 1e-10 && notes == 1 && json.contains("gives |VH⟩"),
        format!("max 1 - F = {worst:.2e}, row-1 note emitted: {}", notes == 1),
    )
}

fn criterion_3() -> Check {
    let strong = decomposition_check::<f64>();
    let weak: Vec<f64> = [PI / 4.0, PI / 2.0]
        .iter()
        .map(|&p| weak_decomposition_check(CouplingAngle::new(p).unwrap()).residual)
        .collect();
    ensure(
        strong < 1e-10 && weak.iter().all(|&r| r < 1e-10),
        format!("strong {strong:.2e}, weak pi/4 {:.2e}, pi/2 {:.2e}", weak[0], weak[1]),
    )
}

fn criterion_4() -> Check {
    let kraus = KrausSet::<f64>::zz(Role::A, Role::B).map_err(|e| e.to_string())?;
    let completeness = kraus.completeness_deviation();
    let mut inputs: Vec<SystemInput64> = Preset::ALL.iter().map(|&p| SystemInput64::preset(p)).collect();
    inputs.extend(haar(50, 404));
    let mut worst: f64 = 0.0;
    for input in &inputs {
        for r in run_strong(input, ErasurePolicy::KeepBoth).map_err(|e| e.to_string())? {
            let Some(state) = r.conditional_state else { continue };
            let again = kraus_apply(&state, &kraus).map_err(|e| e.to_string())?;
            let same = again.iter().find(|m| m.outcome == r.outcome).unwrap().probability;
            worst = worst.max((1.0 - same).abs());
        }
    }
    ensure(
        completeness < 1e-12 && worst < 1e-10,
        format!("|Π+ + Π- - I| = {completeness:.2e}, max |1 - P(repeat)| = {worst:.2e}"),
    )
}

fn criterion_5() -> Check {
    let (mut dev, mut fid): (f64, f64) = (0.0, 1.0);
    for input in haar(200, 505) {
        let expected = analytic_expected(&input);
        for r in run_strong(&input, ErasurePolicy::KeepBoth).map_err(|e| e.to_string())? {
            dev = dev.max((r.probability - expected.probability(r.outcome)).abs());
            if let (Some(s), Some(e)) = (&r.conditional_state, expected.state(r.outcome)) {
                fid = fid.min(s.overlap(e).unwrap());
            }
        }
    }
    ensure(dev < 1e-9 && fid > 1.0 - 1e-9, format!("max dP = {dev:.2e}, min F = 1 - {:.2e}", 1.0 - fid))
}

fn criterion_6() -> Check {
    let (mut dev, mut strong_dev): (f64, f64) = (0.0, 0.0);
    for input in haar(20, 606) {
        let a = input.amplitudes();
        let p_minus = a[1].norm_sqr() + a[2].norm_sqr();
        for k in 0..9 {
            let phi = PI * k as f64 / 8.0;
            let weak = run_weak(&input, CouplingAngle::new(phi).unwrap()).map_err(|e| e.to_string())?;
            dev = dev.max((weak.p_meter_1 - p_minus * (phi / 2.0).sin().powi(2)).abs());
            if k == 8 {
                for r in run_strong(&input, ErasurePolicy::KeepPlus).map_err(|e| e.to_string())? {
                    strong_dev =
                        strong_dev.max((weak.branches[0].meter[r.outcome.index()].probability - r.probability).abs());
                    if let (Some(rho), Some(psi)) = (weak.conditional_state(r.outcome), &r.conditional_state) {
                        strong_dev = strong_dev.max(1.0 - rho.fidelity(&psi.to_density()).unwrap());
                    }
                }
            }
        }
    }
    ensure(
        dev < 1e-9 && strong_dev < 1e-9,
        format!("max |p1 - P- sin^2(phi/2)| = {dev:.2e}, phi = pi vs strong {strong_dev:.2e}"),
    )
}

fn criterion_7() -> Check {
    let (mut tv, mut fid, mut book): (f64, f64, f64) = (0.0, 1.0, 0.0);
    for input in haar(100, 707) {
        let expected = analytic_expected(&input);
        let setup = run_setup(&input, 1.0).map_err(|e| e.to_string())?;
        tv = tv.max(
            setup.outcomes.iter().map(|o| (o.probability - expected.probability(o.outcome)).abs()).sum::<f64>() / 2.0,
        );
        for o in &setup.outcomes {
            if let (Some(rho), Some(psi)) = (&o.conditional, expected.state(o.outcome)) {
                fid = fid.min(rho.fidelity(&psi.to_density()).unwrap());
            }
        }
        book = book.max((setup.herald_prob() - 0.5 * 0.5).abs());
    }
    ensure(
        tv < 1e-9 && fid > 1.0 - 1e-9 && book < 1e-9,
        format!("max TV = {tv:.2e}, min F = 1 - {:.2e}, herald bookkeeping {book:.2e}", 1.0 - fid),
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn criterion_8() -> Check {
    let mut min_fid: f64 = 1.0;
    for preset in Preset::ALL {
        let expected = analytic_expected(&SystemInput64::preset(preset));
        for (k, o) in Outcome::BOTH.iter().enumerate() {
            let rho = expected.state(*o).unwrap().to_density();
            let counts = simulate_counts(&rho, &all_settings(), 1e6, 80 + k as u64).map_err(|e| e.to_string())?;
            let back = reconstruct::<f64>(&counts).map_err(|e| e.to_string())?;
            min_fid = min_fid.min(back.fidelity(&rho).unwrap());
        }
    }
    let expected = analytic_expected(&SystemInput64::preset(Preset::Phi4));
    let plus = expected.psi_plus.as_ref().unwrap().to_density();
    let minus = expected.psi_minus.as_ref().unwrap().to_density();
    let sigmas = |shots: f64, seed: u64| {
        let (tp, tm) = simulate_branches(&plus, expected.p_plus, &minus, shots, seed).unwrap();
        let e = estimate_fidelity_and_probability(&tp, &tm, &plus, &minus, 100, seed + 7).unwrap();
        [e.f_plus.sigma, e.f_minus.sigma, e.p_plus.sigma]
    };
    let ratios: Vec<[f64; 3]> = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let (lo, hi) = (sigmas(1e4, 10 * s), sigmas(4e4, 10 * s + 3));
            [hi[0] / lo[0], hi[1] / lo[1], hi[2] / lo[2]]
        })
        .collect();
    let med: Vec<f64> = (0..3).map(|i| median(ratios.iter().map(|r| r[i]).collect())).collect();
    let halves = med.iter().all(|&m| (m - 0.5).abs() <= 0.1);
    ensure(
        min_fid >= 0.999 && halves,
        format!(
            "min F at 1e6 shots = {min_fid:.5}, median sigma ratio F+ {:.3} F- {:.3} P+ {:.3}",
            med[0], med[1], med[2]
        ),
    )
}

fn criterion_9() -> Check {
    let psi = ket([(FRAC_1_SQRT_2, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, FRAC_1_SQRT_2)]).to_density();
    let fids: Vec<f64> =
        (0..6).map(|k| apply_depolarizing(&psi, k as f64 / 5.0).unwrap().fidelity(&psi).unwrap()).collect();
    let monotone = fids.windows(2).all(|w| w[1] <= w[0]);
    let at_02 = (fids[1] - 0.85).abs();
    ensure(monotone && at_02 < 1e-9, format!("monotone {monotone}, |F(0.2) - 0.85| = {at_02:.2e}"))
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let modes: [&[&str]; 5] = [
        &["--mode", "protocol", "--preset", "phi4"],
        &["--mode", "weak-sweep", "--preset", "phi3"],
        &["--mode", "optics", "--preset", "phi2", "--seed", "11", "--visibility", "0.9"],
        &["--mode", "tomography", "--preset", "phi4", "--seed", "11", "--noise-p", "0.05"],
        &["--mode", "table1"],
    ];
    for (i, args) in modes.iter().enumerate() {
        let mut outputs = Vec::new();
        for (run, threads) in ["1", "4"].iter().enumerate() {
            let path = dir.path().join(format!("{i}-{run}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_nonlocal-meter"))
                .args(*args)
                .arg("--out")
                .arg(&path)
                .env("NONLOCAL_METER_THREADS", threads)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{} exited with {status}", args.join(" ")));
            }
            outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{} differs between runs", args.join(" ")));
        }
    }
    Ok("5 modes, byte-identical across runs and thread counts".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, Some(Duration::from_secs(1)), criterion_1),
        (2, Some(Duration::from_secs(1)), criterion_2),
        (3, Some(Duration::from_secs(1)), criterion_3),
        (4, None, criterion_4),
        (5, Some(Duration::from_secs(10)), criterion_5),
        (6, Some(Duration::from_secs(5)), criterion_6),
        (7, Some(Duration::from_secs(60)), criterion_7),
        (8, Some(Duration::from_secs(60)), criterion_8),
        (9, None, criterion_9),
        (10, None, criterion_10),
    ];
    let mut failed = 0;
    for (n, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let over = budget.filter(|b| elapsed > *b);
        let (verdict, detail) = match (&result, over) {
            (Ok(d), None) => ("PASS", d.clone()),
            (Ok(d), Some(b)) => ("FAIL", format!("{d}; over the {:.0?} budget", b)),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("criterion {n:>2}: {verdict} ({:.3} s) {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} of 10 passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
