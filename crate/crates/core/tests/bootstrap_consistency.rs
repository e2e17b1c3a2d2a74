//! The bootstrap sigma should describe the real scatter of the estimates.

use nonlocal_meter::protocol::{analytic_expected, Preset, SystemInput};
use nonlocal_meter::tomography::{estimate_fidelity_and_probability, simulate_branches, BranchEstimates};
use rayon::prelude::*;

type Picker = fn(&BranchEstimates) -> (f64, f64);

fn std_dev(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[test]
fn sigma_matches_spread_over_independent_realizations() {
    let expected = analytic_expected(&SystemInput::<f64>::preset(Preset::Phi4));
    let plus = expected.psi_plus.as_ref().unwrap().to_density();
    let minus = expected.psi_minus.as_ref().unwrap().to_density();
    let runs: Vec<BranchEstimates> = (0..200u64)
        .into_par_iter()
        .map(|r| {
            let (tp, tm) = simulate_branches(&plus, expected.p_plus, &minus, 1e4, 1000 + 2 * r).unwrap();
            estimate_fidelity_and_probability(&tp, &tm, &plus, &minus, 100, 5000 + r).unwrap()
        })
        .collect();
    let pick: [(&str, Picker); 3] = [
        ("F+", |e| (e.f_plus.value, e.f_plus.sigma)),
        ("F-", |e| (e.f_minus.value, e.f_minus.sigma)),
        ("P+", |e| (e.p_plus.value, e.p_plus.sigma)),
    ];
    for (name, f) in pick {
        let (values, sigmas): (Vec<f64>, Vec<f64>) = runs.iter().map(f).unzip();
        let spread = std_dev(&values);
        let mean_sigma = sigmas.iter().sum::<f64>() / sigmas.len() as f64;
        let ratio = spread / mean_sigma;
        assert!((ratio - 1.0).abs() < 0.3, "{name}: spread {spread:.3e} vs sigma {mean_sigma:.3e}");
    }
}
