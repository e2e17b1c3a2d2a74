//! Two-qubit polarization tomography from finite coincidence counts.
//!
//! Every pairing of the six single-qubit eigenstates `H, V, D, A, R, L` is a
//! setting (36 in total). Counts are Poisson with mean `shots · Tr(ρ Π)`.
//! Reconstruction is linear inversion over the nine basis-pair blocks followed
//! by projection onto the nearest density matrix, so noiseless probabilities reproduce `ρ` exactly.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::measurement::stream_rng;
use crate::qstate::{DensityMatrix, QubitRegister};
use crate::scalar::{c, Real};
use num_complex::Complex;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

/// Single-qubit projector label. `H`/`V` are `|0⟩`/`|1⟩`, `D`/`A` are
/// `(|0⟩ ± |1⟩)/√2`, `R`/`L` are `(|0⟩ ± i|1⟩)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProjectorLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

/// Pauli axis measured by a pair of projector labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Axis {
    Z,
    X,
    Y,
}

impl ProjectorLabel {
    pub const ALL: [ProjectorLabel; 6] = [
        ProjectorLabel::H,
        ProjectorLabel::V,
        ProjectorLabel::D,
        ProjectorLabel::A,
        ProjectorLabel::R,
        ProjectorLabel::L,
    ];

    pub fn ket<R: Real>(self) -> [Complex<R>; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            ProjectorLabel::H => [c(1., 0.), c(0., 0.)],
            ProjectorLabel::V => [c(0., 0.), c(1., 0.)],
            ProjectorLabel::D => [c(h, 0.), c(h, 0.)],
            ProjectorLabel::A => [c(h, 0.), c(-h, 0.)],
            ProjectorLabel::R => [c(h, 0.), c(0., h)],
            ProjectorLabel::L => [c(h, 0.), c(0., -h)],
        }
    }

    fn axis(self) -> Axis {
        match self {
            ProjectorLabel::H | ProjectorLabel::V => Axis::Z,
            ProjectorLabel::D | ProjectorLabel::A => Axis::X,
            ProjectorLabel::R | ProjectorLabel::L => Axis::Y,
        }
    }

    /// Eigenvalue of the axis Pauli on this state.
    fn sign(self) -> f64 {
        match self {
            ProjectorLabel::H | ProjectorLabel::D | ProjectorLabel::R => 1.0,
            _ => -1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ProjectorLabel::H => "H",
            ProjectorLabel::V => "V",
            ProjectorLabel::D => "D",
            ProjectorLabel::A => "A",
            ProjectorLabel::R => "R",
            ProjectorLabel::L => "L",
        }
    }
}

impl fmt::Display for ProjectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProjectorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProjectorLabel::ALL
            .into_iter()
            .find(|l| l.name() == s.trim())
            .ok_or_else(|| Error::Csv(format!("unknown projector label {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TomographySetting {
    pub basis_a: ProjectorLabel,
    pub basis_b: ProjectorLabel,
}

impl TomographySetting {
    pub fn new(basis_a: ProjectorLabel, basis_b: ProjectorLabel) -> Self {
        Self { basis_a, basis_b }
    }

    /// `|a⟩⟨a| ⊗ |b⟩⟨b|`.
    pub fn projector<R: Real>(self) -> CMatrix<R> {
        CMatrix::outer(&self.basis_a.ket()).kron(&CMatrix::outer(&self.basis_b.ket()))
    }
}

impl fmt::Display for TomographySetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.basis_a, self.basis_b)
    }
}

/// The 36 product settings in label order.
pub fn all_settings() -> Vec<TomographySetting> {
    ProjectorLabel::ALL
        .iter()
        .flat_map(|&a| ProjectorLabel::ALL.iter().map(move |&b| TomographySetting::new(a, b)))
        .collect()
}

/// `Tr(ρ Π)` for every setting.
pub fn expected_probabilities<R: Real>(rho: &DensityMatrix<R>) -> Result<BTreeMap<TomographySetting, f64>> {
    check_two_qubit(rho)?;
    Ok(all_settings().into_iter().map(|s| (s, (rho.matrix() * &s.projector()).trace().re.as_f64().max(0.0))).collect())
}

fn check_two_qubit<R: Real>(rho: &DensityMatrix<R>) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { left: 4, right: rho.dim() });
    }
    Ok(())
}

/// Coincidence counts keyed by setting.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsTable {
    counts: BTreeMap<TomographySetting, u64>,
    /// Mean coincidences per setting used to generate the table, if simulated.
    pub mean_shots: Option<f64>,
    pub seed: Option<u64>,
}

impl CountsTable {
    pub fn new(counts: BTreeMap<TomographySetting, u64>) -> Self {
        Self { counts, mean_shots: None, seed: None }
    }

    pub fn get(&self, s: TomographySetting) -> Option<u64> {
        self.counts.get(&s).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TomographySetting, u64)> + '_ {
        self.counts.iter().map(|(s, n)| (*s, *n))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Counts summed over the `{H, V} × {H, V}` block.
    pub fn hv_total(&self) -> u64 {
        self.iter().filter(|(s, _)| s.basis_a.axis() == Axis::Z && s.basis_b.axis() == Axis::Z).map(|(_, n)| n).sum()
    }

    /// CSV with header `basisA,basisB,count`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["basisA", "basisB", "count"])?;
        for (s, n) in self.iter() {
            w.write_record([s.basis_a.name(), s.basis_b.name(), &n.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn read_csv<Rd: io::Read>(reader: Rd) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut counts = BTreeMap::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| Error::Csv(format!("row has {} fields", rec.len())));
            let setting = TomographySetting::new(field(0)?.parse()?, field(1)?.parse()?);
            let n = field(2)?.trim().parse::<u64>().map_err(|e| Error::Csv(e.to_string()))?;
            counts.insert(setting, n);
        }
        Ok(Self::new(counts))
    }
}

fn poisson_draw(mean: f64, rng: &mut impl rand::Rng) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::MalformedDistribution(e.to_string()))?;
    Ok(d.sample(rng) as u64)
}

/// Poisson counts for `settings`; setting `i` draws from stream `i` of `seed`.
pub fn simulate_counts<R: Real>(
    rho: &DensityMatrix<R>,
    settings: &[TomographySetting],
    mean_shots: f64,
    seed: u64,
) -> Result<CountsTable> {
    check_two_qubit(rho)?;
    if !(mean_shots > 0.0 && mean_shots.is_finite()) {
        return Err(Error::InvalidShots(mean_shots));
    }
    let mut counts = BTreeMap::new();
    for (i, &s) in settings.iter().enumerate() {
        let p = (rho.matrix() * &s.projector()).trace().re.as_f64().max(0.0);
        counts.insert(s, poisson_draw(mean_shots * p, &mut stream_rng(seed, i as u64))?);
    }
    Ok(CountsTable { counts, mean_shots: Some(mean_shots), seed: Some(seed) })
}

fn pauli<R: Real>(axis: Option<Axis>) -> CMatrix<R> {
    let (o, z, i) = (c(1., 0.), c(0., 0.), c(0., 1.));
    match axis {
        None => CMatrix::identity(2),
        Some(Axis::X) => CMatrix::from_rows([[z, o], [o, z]]),
        Some(Axis::Y) => CMatrix::from_rows([[z, -i], [i, z]]),
        Some(Axis::Z) => CMatrix::from_rows([[o, z], [z, -o]]),
    }
}

const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Linear inversion from per-setting probabilities normalized within each
/// basis-pair block, followed by PSD repair.
fn invert<R: Real>(probs: &BTreeMap<TomographySetting, f64>) -> Result<DensityMatrix<R>> {
    // Correlators ⟨σi ⊗ σj⟩ and the marginals, averaged over the blocks they appear in.
    let mut corr = [[0.0f64; 3]; 3];
    let mut marg_a = [0.0f64; 3];
    let mut marg_b = [0.0f64; 3];
    for (ia, &xa) in AXES.iter().enumerate() {
        for (ib, &xb) in AXES.iter().enumerate() {
            let block: Vec<(TomographySetting, f64)> = probs
                .iter()
                .filter(|(s, _)| s.basis_a.axis() == xa && s.basis_b.axis() == xb)
                .map(|(s, p)| (*s, *p))
                .collect();
            let total: f64 = block.iter().map(|(_, p)| p).sum();
            if total <= 0.0 {
                return Err(Error::ZeroCounts);
            }
            for (s, p) in block {
                let (sa, sb) = (s.basis_a.sign(), s.basis_b.sign());
                corr[ia][ib] += sa * sb * p / total;
                marg_a[ia] += sa * p / total / 3.0;
                marg_b[ib] += sb * p / total / 3.0;
            }
        }
    }
    let mut m = pauli::<R>(None).kron(&pauli(None));
    for (ia, &xa) in AXES.iter().enumerate() {
        m = &m + &pauli::<R>(Some(xa)).kron(&pauli(None)).scale_real(R::lit(marg_a[ia]));
        m = &m + &pauli::<R>(None).kron(&pauli(Some(xa))).scale_real(R::lit(marg_b[ia]));
        for (ib, &xb) in AXES.iter().enumerate() {
            m = &m + &pauli::<R>(Some(xa)).kron(&pauli(Some(xb))).scale_real(R::lit(corr[ia][ib]));
        }
    }
    psd_repair(&m.scale_real(R::lit(0.25)))
}

/// Nearest unit-trace PSD matrix in Frobenius norm. The eigenvalues are
/// projected onto the probability simplex: shifted by a common `τ` and
/// clipped at zero, with `τ` fixed by the unit-trace condition.
pub fn psd_repair<R: Real>(m: &CMatrix<R>) -> Result<DensityMatrix<R>> {
    let herm = (m + &m.adjoint()).scale_real(R::lit(0.5));
    let (vals, vecs) = herm.eigh();
    let clipped = simplex_projection(&vals.iter().map(|v| v.as_f64()).collect::<Vec<_>>())?;
    let d = herm.dim();
    let rebuilt = CMatrix::from_fn(d, |i, j| {
        (0..d).fold(Complex::new(R::zero(), R::zero()), |acc, k| {
            acc + vecs[(i, k)] * vecs[(j, k)].conj() * R::lit(clipped[k])
        })
    });
    // Symmetrize once more so rounding in the rebuild cannot trip the Hermitian check.
    let rebuilt = (&rebuilt + &rebuilt.adjoint()).scale_real(R::lit(0.5));
    DensityMatrix::new(QubitRegister::new(vec![crate::qstate::Role::A, crate::qstate::Role::B])?, rebuilt)
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx = 1}`.
fn simplex_projection(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    Ok(v.iter().map(|&x| (x - tau).max(0.0)).collect())
}

fn check_complete<T>(map: &BTreeMap<TomographySetting, T>) -> Result<()> {
    let missing: Vec<String> =
        all_settings().into_iter().filter(|s| !map.contains_key(s)).map(|s| s.to_string()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::IncompleteSettings(missing.join(",")))
    }
}

/// Reconstructs `ρ` on `(A, B)` from a complete 36-setting table.
pub fn reconstruct<R: Real>(counts: &CountsTable) -> Result<DensityMatrix<R>> {
    check_complete(&counts.counts)?;
    if counts.total() == 0 {
        return Err(Error::ZeroCounts);
    }
    let probs = counts.counts.iter().map(|(s, &n)| (*s, n as f64)).collect();
    invert(&probs)
}

/// Same pipeline from exact (or estimated) setting probabilities.
pub fn reconstruct_from_probabilities<R: Real>(probs: &BTreeMap<TomographySetting, f64>) -> Result<DensityMatrix<R>> {
    check_complete(probs)?;
    if probs.values().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::MalformedDistribution("negative or non-finite probability".into()));
    }
    invert(probs)
}

/// `(1 − p) ρ + p I/d`.
pub fn apply_depolarizing<R: Real>(rho: &DensityMatrix<R>, p: R) -> Result<DensityMatrix<R>> {
    if !(R::zero()..=R::one()).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p.as_f64()));
    }
    let mixed = DensityMatrix::maximally_mixed(rho.register().clone());
    DensityMatrix::mixture(&[(R::one() - p, rho), (p, &mixed)])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchEstimates {
    pub f_plus: EstimateWithError,
    pub f_minus: EstimateWithError,
    pub p_plus: EstimateWithError,
    pub p_minus: EstimateWithError,
}

fn point_estimates<R: Real>(
    plus: &CountsTable,
    minus: &CountsTable,
    ideal_plus: &DensityMatrix<R>,
    ideal_minus: &DensityMatrix<R>,
) -> Result<[f64; 3]> {
    let (np, nm) = (plus.hv_total() as f64, minus.hv_total() as f64);
    if np + nm == 0.0 {
        return Err(Error::ZeroCounts);
    }
    let fp = reconstruct::<R>(plus)?.fidelity(ideal_plus)?.as_f64();
    let fm = reconstruct::<R>(minus)?.fidelity(ideal_minus)?.as_f64();
    Ok([fp, fm, np / (np + nm)])
}

fn resample(table: &CountsTable, rng: &mut impl rand::Rng) -> Result<CountsTable> {
    let counts = table.counts.iter().map(|(s, &n)| Ok((*s, poisson_draw(n as f64, rng)?))).collect::<Result<_>>()?;
    Ok(CountsTable::new(counts))
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Fidelities of both reconstructed branches to their ideals, and the branch
/// probability `P+ = N+ / (N+ + N−)` from `{H, V}`-block totals. Sigmas come
/// from a parametric bootstrap: every count is redrawn as Poisson around its
/// observed value and the whole pipeline is rerun. Resample `k` uses stream
/// `k` of `seed`, so the result does not depend on thread scheduling.
pub fn estimate_fidelity_and_probability<R: Real>(
    counts_plus: &CountsTable,
    counts_minus: &CountsTable,
    ideal_plus: &DensityMatrix<R>,
    ideal_minus: &DensityMatrix<R>,
    resamples: usize,
    seed: u64,
) -> Result<BranchEstimates> {
    if resamples < 100 {
        return Err(Error::TooFewResamples(resamples));
    }
    let point = point_estimates(counts_plus, counts_minus, ideal_plus, ideal_minus)?;
    let draws: Vec<[f64; 3]> = (0..resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let plus = resample(counts_plus, &mut rng)?;
            let minus = resample(counts_minus, &mut rng)?;
            point_estimates(&plus, &minus, ideal_plus, ideal_minus)
        })
        .collect::<Result<_>>()?;
    let sigma = |i: usize| sample_std(&draws.iter().map(|d| d[i]).collect::<Vec<_>>());
    let sp = sigma(2);
    Ok(BranchEstimates {
        f_plus: EstimateWithError { value: point[0], sigma: sigma(0) },
        f_minus: EstimateWithError { value: point[1], sigma: sigma(1) },
        p_plus: EstimateWithError { value: point[2], sigma: sp },
        p_minus: EstimateWithError { value: 1.0 - point[2], sigma: sp },
    })
}

/// Counts for both outcome branches, each scaled by its probability so that
/// the `{H, V}`-block totals carry the branch ratio. Branch `+` uses
/// `seed`, branch `−` uses `seed + 1`.
pub fn simulate_branches<R: Real>(
    rho_plus: &DensityMatrix<R>,
    p_plus: f64,
    rho_minus: &DensityMatrix<R>,
    mean_shots: f64,
    seed: u64,
) -> Result<(CountsTable, CountsTable)> {
    if !(0.0..=1.0).contains(&p_plus) {
        return Err(Error::ProbabilityOutOfRange(p_plus));
    }
    let settings = all_settings();
    let plus = simulate_counts(rho_plus, &settings, mean_shots * p_plus, seed)?;
    let minus = simulate_counts(rho_minus, &settings, mean_shots * (1.0 - p_plus), seed.wrapping_add(1))?;
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{PureState, Role};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn ab() -> QubitRegister {
        QubitRegister::new(vec![Role::A, Role::B]).unwrap()
    }

    fn pure(amps: [Complex<f64>; 4]) -> DensityMatrix<f64> {
        PureState::normalized(ab(), amps.to_vec()).unwrap().to_density()
    }

    fn hh() -> DensityMatrix<f64> {
        pure([c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)])
    }

    fn setting(a: ProjectorLabel, b: ProjectorLabel) -> TomographySetting {
        TomographySetting::new(a, b)
    }

    #[test]
    fn thirty_six_distinct_settings() {
        let s = all_settings();
        assert_eq!(s.len(), 36);
        let uniq: std::collections::BTreeSet<_> = s.iter().collect();
        assert_eq!(uniq.len(), 36);
    }

    #[test]
    fn count_examples() {
        use ProjectorLabel::*;
        let t = simulate_counts(&hh(), &[setting(H, H), setting(V, V)], 1000.0, 1).unwrap();
        let n = t.get(setting(H, H)).unwrap() as f64;
        assert!((n - 1000.0).abs() < 4.0 * 1000f64.sqrt());
        assert_eq!(t.get(setting(V, V)), Some(0));
        let mixed = DensityMatrix::<f64>::maximally_mixed(ab());
        let t = simulate_counts(&mixed, &all_settings(), 1000.0, 2).unwrap();
        for (_, n) in t.iter() {
            assert!((n as f64 - 250.0).abs() < 4.0 * 250f64.sqrt());
        }
    }

    #[test]
    fn counts_are_seeded() {
        let rho = pure([c(2., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        let a = simulate_counts(&rho, &all_settings(), 500.0, 9).unwrap();
        assert_eq!(a, simulate_counts(&rho, &all_settings(), 500.0, 9).unwrap());
        assert_ne!(a, simulate_counts(&rho, &all_settings(), 500.0, 10).unwrap());
        assert_eq!(simulate_counts(&rho, &all_settings(), 0.0, 9), Err(Error::InvalidShots(0.0)));
    }

    #[test]
    fn exact_probabilities_invert_exactly() {
        let rho = hh();
        let back: DensityMatrix<f64> = reconstruct_from_probabilities(&expected_probabilities(&rho).unwrap()).unwrap();
        assert!((back.fidelity(&rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn million_shots_converge() {
        let ideal = pure([c(2., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        let t = simulate_counts(&ideal, &all_settings(), 1e6, 42).unwrap();
        assert!(reconstruct::<f64>(&t).unwrap().fidelity(&ideal).unwrap() >= 0.999);
    }

    #[test]
    fn incomplete_and_empty_tables() {
        let mut t = simulate_counts(&hh(), &all_settings(), 100.0, 1).unwrap();
        t.counts.remove(&setting(ProjectorLabel::R, ProjectorLabel::L));
        assert!(matches!(reconstruct::<f64>(&t), Err(Error::IncompleteSettings(s)) if s == "RL"));
        let zeros = CountsTable::new(all_settings().into_iter().map(|s| (s, 0)).collect());
        assert_eq!(reconstruct::<f64>(&zeros), Err(Error::ZeroCounts));
    }

    #[test]
    fn csv_round_trip() {
        let t = simulate_counts(&hh(), &all_settings(), 100.0, 4).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("basisA,basisB,count\n"));
        assert_eq!(text.lines().count(), 37);
        let back = CountsTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.counts, t.counts);
        assert!(CountsTable::read_csv("basisA,basisB,count\nQ,H,3\n".as_bytes()).is_err());
    }

    #[test]
    fn depolarizing_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = pure([c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]);
        assert_eq!(apply_depolarizing(&bell, 0.0).unwrap().matrix().max_abs_diff(bell.matrix()), 0.0);
        let full = apply_depolarizing(&bell, 1.0).unwrap();
        assert!(full.matrix().max_abs_diff(DensityMatrix::maximally_mixed(ab()).matrix()) < 1e-15);
        let f = apply_depolarizing(&bell, 0.2).unwrap().fidelity(&bell).unwrap();
        assert!((f - 0.85).abs() < 1e-12);
        assert!(apply_depolarizing(&bell, 1.2).is_err());
    }

    #[test]
    fn ideal_branches_give_ideal_estimates() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = pure([c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]);
        let minus = pure([c(0., 0.), c(h, 0.), c(h, 0.), c(0., 0.)]);
        let (tp, tm) = simulate_branches(&plus, 0.5, &minus, 1e6, 3).unwrap();
        let est = estimate_fidelity_and_probability(&tp, &tm, &plus, &minus, 100, 8).unwrap();
        assert!(est.f_plus.value > 0.999 && est.f_minus.value > 0.999);
        assert!((est.p_plus.value - 0.5).abs() < 5.0 * est.p_plus.sigma.max(1e-4));
        assert!((est.p_plus.value + est.p_minus.value - 1.0).abs() < 1e-15);
        assert_eq!(estimate_fidelity_and_probability(&tp, &tm, &plus, &minus, 99, 8), Err(Error::TooFewResamples(99)));
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let plus = pure([c(2., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        let minus = pure([c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let (tp, tm) = simulate_branches(&plus, 5.0 / 9.0, &minus, 1e4, 3).unwrap();
        let a = estimate_fidelity_and_probability(&tp, &tm, &plus, &minus, 120, 5).unwrap();
        let b = estimate_fidelity_and_probability(&tp, &tm, &plus, &minus, 120, 5).unwrap();
        assert_eq!(a, b);
    }

    fn arb_rho() -> impl Strategy<Value = DensityMatrix<f64>> {
        // Mixture of two random pure states: full-rank-ish, arbitrary phases.
        let amps = prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8);
        (amps, 0.0f64..1.0).prop_filter_map("nonzero", |(v, w)| {
            let mk = |s: &[(f64, f64)]| PureState::normalized(ab(), s.iter().map(|&(r, i)| c(r, i)).collect()).ok();
            let (a, b) = (mk(&v[..4])?, mk(&v[4..])?);
            DensityMatrix::mixture(&[(w, &a.to_density()), (1.0 - w, &b.to_density())]).ok()
        })
    }

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(simplex_projection(&[0.5, 0.3, 0.2, 0.0]).unwrap(), vec![0.5, 0.3, 0.2, 0.0]);
        let p = simplex_projection(&[1.02, 0.01, -0.01, -0.02]).unwrap();
        // τ = 0.015 removes the excess trace from the two positive entries.
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1..].iter().all(|&x| x == 0.0));
        let p = simplex_projection(&[0.6, 0.6, -0.2, 0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn simplex_projection_is_a_distribution(v in prop::collection::vec(-1.0f64..2.0, 4)) {
            let p = simplex_projection(&v).unwrap();
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn noiseless_inversion_is_exact(rho in arb_rho()) {
            let back: DensityMatrix<f64> = reconstruct_from_probabilities(&expected_probabilities(&rho).unwrap()).unwrap();
            prop_assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-9);
        }

        #[test]
        fn reconstructions_are_valid_states(rho in arb_rho(), seed in 0u64..1000) {
            let t = simulate_counts(&rho, &all_settings(), 50.0, seed).unwrap();
            if let Ok(r) = reconstruct::<f64>(&t) {
                prop_assert!(r.min_eigenvalue() >= -1e-8);
                prop_assert!((r.trace_re() - 1.0).abs() < 1e-10);
                prop_assert!(r.matrix().hermiticity_deviation() < 1e-10);
            }
        }

        #[test]
        fn depolarizing_lowers_fidelity(a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4), p in 0.0f64..1.0, dp in 0.0f64..0.5) {
            if let Ok(s) = PureState::normalized(ab(), a.iter().map(|&(r, i)| c(r, i)).collect()) {
                let rho = s.to_density();
                let q = (p + dp).min(1.0);
                let f1 = apply_depolarizing(&rho, p).unwrap().fidelity(&rho).unwrap();
                let f2 = apply_depolarizing(&rho, q).unwrap().fidelity(&rho).unwrap();
                prop_assert!(f2 <= f1 + 1e-12);
            }
        }
    }
}
