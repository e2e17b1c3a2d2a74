//! The ancilla-assisted nonlocal measurement of `σz ⊗ σz`, its weak-coupling
//! variant, and other Pauli products through local basis changes.
//!
//! The circuit runs on `(A, B, N_A, N_B, M)`. Alice couples her qubit to `N_A`
//! and keeps only `N_A = 0`; Bob writes the parity `a ⊕ b` into `N_B`, copies
//! it (fully or partially) into the meter `M`, and erases `N_B` in the
//! `{|+⟩, |−⟩}` basis so the meter is left correlated with the joint parity
//! alone.

use crate::error::{Error, Result};
use crate::gates::{apply_cnot, apply_controlled_rx, apply_single, CouplingAngle, GateMatrix};
use crate::linalg::CMatrix;
use crate::measurement::{kraus_apply, project, Basis, KrausSet, Outcome};
use crate::qstate::{DensityMatrix, PureState, QubitRegister, Role};
use crate::scalar::{c, Real};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::str::FromStr;

/// Two-qubit system state `a1|00⟩ + a2|01⟩ + a3|10⟩ + a4|11⟩` on `(A, B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemInput<R> {
    state: PureState<R>,
}

pub(crate) fn ab_register() -> QubitRegister {
    QubitRegister::new(vec![Role::A, Role::B]).expect("static register")
}

impl<R: Real> SystemInput<R> {
    /// Amplitudes must already be normalized within 1e-6.
    pub fn new(amps: [Complex<R>; 4]) -> Result<Self> {
        Ok(Self { state: PureState::new(ab_register(), amps.to_vec())? })
    }

    /// Accepts any nonzero amplitudes and rescales them.
    pub fn normalized(amps: [Complex<R>; 4]) -> Result<Self> {
        Ok(Self { state: PureState::normalized(ab_register(), amps.to_vec())? })
    }

    pub fn preset(preset: Preset) -> Self {
        let amps = preset.amplitudes().map(|(re, im)| c(re, im));
        Self::new(amps).expect("presets are normalized")
    }

    /// Haar-random pure state: i.i.d. complex Gaussians, normalized.
    pub fn random<G: Rng + ?Sized>(rng: &mut G) -> Self {
        loop {
            let amps: [Complex<R>; 4] = std::array::from_fn(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(re, im)
            });
            if let Ok(s) = Self::normalized(amps) {
                return s;
            }
        }
    }

    pub fn amplitudes(&self) -> [Complex<R>; 4] {
        std::array::from_fn(|i| self.state.amplitude(i))
    }

    pub fn state(&self) -> &PureState<R> {
        &self.state
    }

    /// `P− = |a2|² + |a3|²`.
    pub fn odd_weight(&self) -> R {
        self.state.amplitude(1).norm_sqr() + self.state.amplitude(2).norm_sqr()
    }
}

/// The four input states used in the optical experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// `|+⟩|H⟩`
    Phi1,
    /// `|+⟩|+⟩`
    Phi2,
    /// `|+⟩|R⟩` with `|R⟩ = (|H⟩ + i|V⟩)/√2`
    Phi3,
    /// `(√2|H⟩ + |V⟩)(√2|H⟩ + |V⟩)/3`
    Phi4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Phi1, Preset::Phi2, Preset::Phi3, Preset::Phi4];

    /// `(re, im)` pairs in `|00⟩, |01⟩, |10⟩, |11⟩` order.
    pub fn amplitudes(self) -> [(f64, f64); 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r2 = std::f64::consts::SQRT_2;
        match self {
            Preset::Phi1 => [(h, 0.), (0., 0.), (h, 0.), (0., 0.)],
            Preset::Phi2 => [(0.5, 0.); 4],
            Preset::Phi3 => [(0.5, 0.), (0., 0.5), (0.5, 0.), (0., 0.5)],
            Preset::Phi4 => [(2. / 3., 0.), (r2 / 3., 0.), (r2 / 3., 0.), (1. / 3., 0.)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Phi1 => "phi1",
            Preset::Phi2 => "phi2",
            Preset::Phi3 => "phi3",
            Preset::Phi4 => "phi4",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown preset {s:?}, expected phi1..phi4"))
    }
}

/// Which outcomes of the `N_B` erasure are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErasurePolicy {
    KeepPlus,
    #[default]
    KeepBoth,
}

impl ErasurePolicy {
    fn kept(self) -> &'static [Outcome] {
        match self {
            ErasurePolicy::KeepPlus => &[Outcome::Plus],
            ErasurePolicy::KeepBoth => &Outcome::BOTH,
        }
    }
}

/// One meter outcome within one erasure branch.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult<R> {
    pub outcome: Outcome,
    /// Probability of this meter reading given the erasure outcome.
    pub probability: R,
    /// State of `(A, B)`; `None` if the outcome cannot occur.
    pub conditional_state: Option<PureState<R>>,
    pub step2_success_prob: R,
    pub erasure_outcome: Outcome,
    pub erasure_prob: R,
}

/// `Σ a_ab |ab⟩_{AB} |a⊕b⟩_{N_B} |a⊕b⟩_M`, the state right before erasure.
pub fn expected_psi4<R: Real>(input: &SystemInput<R>) -> PureState<R> {
    let register = QubitRegister::new(vec![Role::A, Role::B, Role::NB, Role::M]).expect("static register");
    let mut amps = vec![Complex::new(R::zero(), R::zero()); 16];
    for (idx, a) in input.amplitudes().into_iter().enumerate() {
        let parity = (idx >> 1) ^ (idx & 1);
        amps[(idx << 2) | (parity << 1) | parity] = a;
    }
    PureState::new(register, amps).expect("permutation of a normalized vector")
}

fn initial_register() -> QubitRegister {
    QubitRegister::new(vec![Role::A, Role::B, Role::NA, Role::NB, Role::M]).expect("static register")
}

/// Steps 1 and 2: attach the ancilla pair and meter, couple A to `N_A`, keep `N_A = 0`.
fn alice_stage<R: Real>(input: &SystemInput<R>) -> Result<(R, PureState<R>)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ancilla =
        PureState::new(QubitRegister::new(vec![Role::NA, Role::NB])?, vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)])?;
    let meter = PureState::basis(QubitRegister::new(vec![Role::M])?, 0)?;
    let s = input.state.tensor(&ancilla)?.tensor(&meter)?;
    debug_assert_eq!(s.register(), &initial_register());
    let s = apply_cnot(&s, Role::A, Role::NA)?;
    let rec = project(&s, Role::NA, &Basis::computational(), 0)?;
    Ok((rec.probability, rec.post_state.expect("project returns a state")))
}

/// Probability and renormalized branch, with impossible branches mapped to `None`.
fn branch<R: Real>(s: &PureState<R>, q: Role, basis: &Basis<R>, k: usize) -> Result<(R, Option<PureState<R>>)> {
    match project(s, q, basis, k) {
        Ok(rec) => Ok((rec.probability, rec.post_state)),
        Err(Error::ImpossibleOutcome { probability }) => Ok((R::lit(probability), None)),
        Err(e) => Err(e),
    }
}

fn read_meter<R: Real>(
    after_erasure: &PureState<R>,
    step2: R,
    erasure_outcome: Outcome,
    erasure_prob: R,
) -> Result<Vec<ProtocolResult<R>>> {
    Outcome::BOTH
        .iter()
        .map(|&outcome| {
            let (probability, conditional_state) =
                branch(after_erasure, Role::M, &Basis::computational(), outcome.index())?;
            Ok(ProtocolResult {
                outcome,
                probability,
                conditional_state,
                step2_success_prob: step2,
                erasure_outcome,
                erasure_prob,
            })
        })
        .collect()
}

/// Full strong-coupling protocol. Returns two results (meter `|0⟩` ↦ +1,
/// meter `|1⟩` ↦ −1) for every kept erasure outcome.
pub fn run_strong<R: Real>(input: &SystemInput<R>, policy: ErasurePolicy) -> Result<Vec<ProtocolResult<R>>> {
    let (step2, s) = alice_stage(input)?;
    let s = apply_cnot(&s, Role::B, Role::NB)?;
    let s = apply_cnot(&s, Role::NB, Role::M)?;
    let expected = expected_psi4(input);
    let drift = s.amplitudes().iter().zip(expected.amplitudes()).map(|(x, y)| (x - y).norm()).fold(R::zero(), R::max);
    if drift > R::drift_tol() {
        return Err(Error::NumericalDrift(format!("pre-erasure state deviates by {}", drift.as_f64())));
    }
    let mut out = Vec::with_capacity(4);
    for &e in policy.kept() {
        let (pe, erased) = branch(&s, Role::NB, &Basis::plus_minus(), e.index())?;
        let erased = erased.ok_or(Error::ImpossibleOutcome { probability: pe.as_f64() })?;
        out.extend(read_meter(&erased, step2, e, pe)?);
    }
    Ok(out)
}

/// Ideal `Π±` probabilities and projected states, evaluated in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct Expected<R> {
    pub p_plus: R,
    pub p_minus: R,
    pub psi_plus: Option<PureState<R>>,
    pub psi_minus: Option<PureState<R>>,
}

impl<R: Real> Expected<R> {
    pub fn probability(&self, outcome: Outcome) -> R {
        match outcome {
            Outcome::Plus => self.p_plus,
            Outcome::Minus => self.p_minus,
        }
    }

    pub fn state(&self, outcome: Outcome) -> Option<&PureState<R>> {
        match outcome {
            Outcome::Plus => self.psi_plus.as_ref(),
            Outcome::Minus => self.psi_minus.as_ref(),
        }
    }
}

pub fn analytic_expected<R: Real>(input: &SystemInput<R>) -> Expected<R> {
    let [a1, a2, a3, a4] = input.amplitudes();
    let zero = Complex::new(R::zero(), R::zero());
    let p_plus = a1.norm_sqr() + a4.norm_sqr();
    let p_minus = a2.norm_sqr() + a3.norm_sqr();
    let project = |p: R, amps: [Complex<R>; 4]| {
        (p >= R::zero_prob()).then(|| PureState::normalized(ab_register(), amps.to_vec()).expect("nonzero branch"))
    };
    Expected {
        p_plus,
        p_minus,
        psi_plus: project(p_plus, [a1, zero, zero, a4]),
        psi_minus: project(p_minus, [zero, a2, a3, zero]),
    }
}

/// Ideal statistics for `P ⊗ Q` from the conjugated spectral projectors.
pub fn analytic_expected_observable<R: Real>(input: &SystemInput<R>, spec: ObservableSpec) -> Result<Expected<R>> {
    let rot = rotate_observable::<R>(spec);
    let kraus = KrausSet::zz(Role::A, Role::B)?.conjugated(&rot.pre[0], &rot.pre[1])?;
    let mut recs = kraus_apply(input.state(), &kraus)?.into_iter();
    let (plus, minus) = (recs.next().expect("two outcomes"), recs.next().expect("two outcomes"));
    Ok(Expected {
        p_plus: plus.probability,
        p_minus: minus.probability,
        psi_plus: plus.post_state,
        psi_minus: minus.post_state,
    })
}

/// One erasure branch of a weak run.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakBranch<R> {
    pub erasure_outcome: Outcome,
    pub erasure_prob: R,
    /// Meter `|0⟩` and `|1⟩` results, in that order.
    pub meter: Vec<ProtocolResult<R>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakResult<R> {
    pub phi: R,
    /// Probability that the meter reads `|1⟩`, averaged over kept erasure branches.
    pub p_meter_1: R,
    pub step2_success_prob: R,
    pub branches: Vec<WeakBranch<R>>,
    /// `(A, B)` state per meter reading, mixed over kept erasure branches.
    pub conditional: [Option<DensityMatrix<R>>; 2],
}

impl<R: Real> WeakResult<R> {
    pub fn conditional_state(&self, outcome: Outcome) -> Option<&DensityMatrix<R>> {
        self.conditional[outcome.index()].as_ref()
    }
}

/// Weak variant keeping only the `|+⟩` erasure outcome. Under `|−⟩` the
/// meter-0 branch picks up a relative `σz ⊗ σz` sign whenever `0 < φ < π`,
/// so mixing both erasure outcomes would dephase the conditional state.
pub fn run_weak<R: Real>(input: &SystemInput<R>, phi: CouplingAngle<R>) -> Result<WeakResult<R>> {
    run_weak_with_policy(input, phi, ErasurePolicy::KeepPlus)
}

pub fn run_weak_with_policy<R: Real>(
    input: &SystemInput<R>,
    phi: CouplingAngle<R>,
    policy: ErasurePolicy,
) -> Result<WeakResult<R>> {
    let (step2, s) = alice_stage(input)?;
    let s = apply_cnot(&s, Role::B, Role::NB)?;
    let s = apply_controlled_rx(&s, Role::NB, Role::M, phi)?;
    let mut branches = Vec::new();
    for &e in policy.kept() {
        let (pe, erased) = branch(&s, Role::NB, &Basis::plus_minus(), e.index())?;
        let erased = erased.ok_or(Error::ImpossibleOutcome { probability: pe.as_f64() })?;
        branches.push(WeakBranch { erasure_outcome: e, erasure_prob: pe, meter: read_meter(&erased, step2, e, pe)? });
    }
    let kept = branches.iter().map(|b| b.erasure_prob).fold(R::zero(), |s, x| s + x);
    let weight = |b: &WeakBranch<R>, k: usize| b.erasure_prob * b.meter[k].probability / kept;
    let p_meter_1 = branches.iter().map(|b| weight(b, 1)).fold(R::zero(), |s, x| s + x);
    let conditional = [0, 1].map(|k| {
        let densities: Vec<(R, DensityMatrix<R>)> = branches
            .iter()
            .filter_map(|b| b.meter[k].conditional_state.as_ref().map(|s| (weight(b, k), s.to_density())))
            .collect();
        let parts: Vec<(R, &DensityMatrix<R>)> = densities.iter().map(|(w, d)| (*w, d)).collect();
        DensityMatrix::mixture(&parts).ok()
    });
    Ok(WeakResult { phi: phi.radians(), p_meter_1, step2_success_prob: step2, branches, conditional })
}

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn gate<R: Real>(self) -> GateMatrix<R> {
        match self {
            Pauli::X => GateMatrix::pauli_x(),
            Pauli::Y => GateMatrix::pauli_y(),
            Pauli::Z => GateMatrix::pauli_z(),
        }
    }

    /// Unitary taking this Pauli's `+1`/`−1` eigenvectors to `|0⟩`/`|1⟩`.
    /// For `Y` that is `[[1, −i], [1, i]]/√2`, mapping `(|0⟩ ± i|1⟩)/√2` to `|0⟩`, `|1⟩`.
    pub fn basis_change<R: Real>(self) -> GateMatrix<R> {
        match self {
            Pauli::Z => GateMatrix::identity(1),
            Pauli::X => GateMatrix::hadamard(),
            Pauli::Y => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                GateMatrix::new(CMatrix::from_rows([[c(h, 0.), c(0., -h)], [c(h, 0.), c(0., h)]]))
                    .expect("unitary by construction")
            }
        }
    }
}

/// Product observable `P_A ⊗ P_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ObservableSpec {
    pub pauli_a: Pauli,
    pub pauli_b: Pauli,
}

impl ObservableSpec {
    pub const ZZ: ObservableSpec = ObservableSpec { pauli_a: Pauli::Z, pauli_b: Pauli::Z };

    pub fn new(pauli_a: Pauli, pauli_b: Pauli) -> Self {
        Self { pauli_a, pauli_b }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.pauli_a, self.pauli_b)
    }
}

impl FromStr for ObservableSpec {
    type Err = String;

    /// Two letters from `XYZ`, e.g. `"XZ"`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let letter = |ch: char| match ch.to_ascii_uppercase() {
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(format!("{other:?} is not a Pauli label")),
        };
        let chars: Vec<char> = s.trim().chars().collect();
        match chars.as_slice() {
            [a, b] => Ok(Self::new(letter(*a)?, letter(*b)?)),
            _ => Err(format!("observable {s:?} must be two letters from XYZ")),
        }
    }
}

/// Basis changes applied to A and B before step 1 (`pre`) and after step 6 (`post`).
#[derive(Clone, Debug, PartialEq)]
pub struct Rotations<R> {
    pub pre: [GateMatrix<R>; 2],
    pub post: [GateMatrix<R>; 2],
}

pub fn rotate_observable<R: Real>(spec: ObservableSpec) -> Rotations<R> {
    let pre = [spec.pauli_a.basis_change(), spec.pauli_b.basis_change()];
    let post = [pre[0].adjoint(), pre[1].adjoint()];
    Rotations { pre, post }
}

/// Nonlocal measurement of `P_A ⊗ P_B`: rotate, run the `σz ⊗ σz` circuit,
/// rotate the conditional states back.
pub fn run_observable<R: Real>(
    input: &SystemInput<R>,
    spec: ObservableSpec,
    policy: ErasurePolicy,
) -> Result<Vec<ProtocolResult<R>>> {
    let rot = rotate_observable::<R>(spec);
    let rotated = apply_single(input.state(), &rot.pre[0], Role::A)?;
    let rotated = apply_single(&rotated, &rot.pre[1], Role::B)?;
    let amps: [Complex<R>; 4] = std::array::from_fn(|i| rotated.amplitude(i));
    let mut results = run_strong(&SystemInput::new(amps)?, policy)?;
    for r in &mut results {
        if let Some(s) = r.conditional_state.take() {
            let s = apply_single(&s, &rot.post[0], Role::A)?;
            r.conditional_state = Some(apply_single(&s, &rot.post[1], Role::B)?);
        }
    }
    Ok(results)
}

/// Meter qubit as a pointer `cos(q/2)|0⟩ + i sin(q/2)|1⟩` at zenith `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeterPointer<R> {
    state: PureState<R>,
    zenith: R,
}

impl<R: Real> MeterPointer<R> {
    pub fn at_zenith(q: R) -> Result<Self> {
        if !(R::zero()..=R::PI()).contains(&q) {
            return Err(Error::AngleOutOfRange(q.as_f64()));
        }
        let half = q / R::lit(2.0);
        let amps = vec![Complex::new(half.cos(), R::zero()), Complex::new(R::zero(), half.sin())];
        Ok(Self { state: PureState::new(QubitRegister::new(vec![Role::M])?, amps)?, zenith: q })
    }

    /// Reads the zenith of any single-qubit state, `q = 2·atan2(|β|, |α|)`.
    pub fn from_state(state: PureState<R>) -> Result<Self> {
        if state.num_qubits() != 1 {
            return Err(Error::DimensionMismatch { left: 2, right: state.dim() });
        }
        let zenith = R::lit(2.0) * state.amplitude(1).norm().atan2(state.amplitude(0).norm());
        Ok(Self { state, zenith })
    }

    pub fn state(&self) -> &PureState<R> {
        &self.state
    }

    pub fn zenith(&self) -> R {
        self.zenith
    }

    /// Applies `e^{iθσx}`.
    pub fn rotate(&self, theta: R) -> Result<Self> {
        let g = crate::gates::exp_involution(theta, &GateMatrix::pauli_x());
        let role = self.state.register().roles()[0];
        Self::from_state(apply_single(&self.state, &g, role)?)
    }
}
