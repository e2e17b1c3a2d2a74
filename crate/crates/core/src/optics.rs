//! Linear-optics realization with two photons, each carrying three qubits:
//! polarization (`H`=0, `V`=1), path (`d`=0, `u`=1) and orbital angular
//! momentum (`r`=0, `l`=1).
//!
//! Roles: photon 1 is Alice's, with `A` on polarization and `N_A` on OAM.
//! Photon 2 is Bob's, with `B` on polarization, `N_B` on OAM until his Dove
//! prism and the meter on OAM afterwards. Bob's path qubit plays the erased
//! ancilla, which is the swap of `N_B` and `M` relative to the abstract circuit.
//!
//! Elements are ideal: no loss, exact 50:50 splitting, and a Dove prism that is
//! a pure OAM flip. Detection is a projective post-selection on the register.

use crate::error::{Error, Result};
use crate::gates::{apply_gate, embed, GateMatrix};
use crate::linalg::CMatrix;
use crate::measurement::{postselect, project, stream_rng, Basis, Outcome};
use crate::protocol::SystemInput;
use crate::qstate::{DensityMatrix, PureState, QubitRegister, Role};
use crate::scalar::{c, Real};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::fmt;

/// Photon register order: `pol1, path1, oam1, pol2, path2, oam2`.
pub fn photon_register() -> QubitRegister {
    QubitRegister::new(vec![Role::Pol1, Role::Path1, Role::Oam1, Role::Pol2, Role::Path2, Role::Oam2])
        .expect("static register")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Photon {
    One,
    Two,
}

impl Photon {
    pub fn pol(self) -> Role {
        match self {
            Photon::One => Role::Pol1,
            Photon::Two => Role::Pol2,
        }
    }

    pub fn path(self) -> Role {
        match self {
            Photon::One => Role::Path1,
            Photon::Two => Role::Path2,
        }
    }

    pub fn oam(self) -> Role {
        match self {
            Photon::One => Role::Oam1,
            Photon::Two => Role::Oam2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathMode {
    D,
    U,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OamMode {
    R,
    L,
    /// Fundamental Gaussian mode; only appears as a detection label.
    G,
}

/// Single-photon mode label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhotonModeLabel {
    pub polarization: Polarization,
    pub path: PathMode,
    pub oam: OamMode,
}

impl PhotonModeLabel {
    /// Label of basis bits `(pol, path, oam)`. After a spiral phase plate the
    /// `r` component is the one coupled to the detector and reads as `G`.
    pub fn from_bits(pol: usize, path: usize, oam: usize, after_spp: bool) -> Self {
        Self {
            polarization: if pol == 0 { Polarization::H } else { Polarization::V },
            path: if path == 0 { PathMode::D } else { PathMode::U },
            oam: match (oam, after_spp) {
                (0, true) => OamMode::G,
                (0, false) => OamMode::R,
                _ => OamMode::L,
            },
        }
    }
}

impl fmt::Display for PhotonModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.polarization {
            Polarization::H => 'H',
            Polarization::V => 'V',
        };
        let q = match self.path {
            PathMode::D => 'd',
            PathMode::U => 'u',
        };
        let o = match self.oam {
            OamMode::R => 'r',
            OamMode::L => 'l',
            OamMode::G => 'G',
        };
        write!(f, "{p}{q}{o}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementKind<R> {
    /// Polarizing beam splitter: `H` stays on its path, `V` switches path.
    Pbs,
    /// Half-wave plate, fast axis at the given angle from `H` in radians.
    Hwp(R),
    /// Quarter-wave plate, fast axis at the given angle from `H` in radians.
    Qwp(R),
    /// Dove prism placed in one arm: flips OAM on that arm only.
    DovePrism(PathMode),
    /// Spiral phase plate before a fiber coupler: relabels `r` as `G`.
    Spp,
    /// 50:50 beam splitter that swaps OAM on reflection: `(I + i σx⊗σx)/√2` on (path, oam).
    BsOam,
    /// Small-angle prism followed by a 50:50 splitter; sends `(|d⟩+|u⟩)/√2` to port `d`.
    PathPrismBs,
    /// Path-length compensator.
    Compensator,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpticalElement<R> {
    pub kind: ElementKind<R>,
    pub photon: Photon,
}

impl<R: Real> OpticalElement<R> {
    pub fn new(kind: ElementKind<R>, photon: Photon) -> Self {
        Self { kind, photon }
    }
}

/// 50:50 splitter on a path qubit, reflected amplitude multiplied by `i`.
fn beam_splitter<R: Real>() -> CMatrix<R> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_rows([[c(h, 0.), c(0., h)], [c(0., h), c(h, 0.)]])
}

/// Unitary of `element` and the roles it acts on, top qubit first.
pub fn element_unitary<R: Real>(element: &OpticalElement<R>) -> (GateMatrix<R>, Vec<Role>) {
    let p = element.photon;
    let trusted = |m: CMatrix<R>| GateMatrix::new(m).expect("optical elements are unitary");
    match element.kind {
        ElementKind::Pbs => (GateMatrix::cnot(), vec![p.pol(), p.path()]),
        ElementKind::Hwp(theta) => (GateMatrix::hwp(theta), vec![p.pol()]),
        ElementKind::Qwp(theta) => (GateMatrix::qwp(theta), vec![p.pol()]),
        ElementKind::DovePrism(arm) => {
            let x = GateMatrix::pauli_x();
            let gate = match arm {
                PathMode::U => x.controlled(),
                PathMode::D => {
                    let (zero, one) = (c(0., 0.), c(1., 0.));
                    trusted(CMatrix::from_rows([
                        [zero, one, zero, zero],
                        [one, zero, zero, zero],
                        [zero, zero, one, zero],
                        [zero, zero, zero, one],
                    ]))
                }
            };
            (gate, vec![p.path(), p.oam()])
        }
        ElementKind::Spp => (GateMatrix::identity(1), vec![p.oam()]),
        ElementKind::BsOam => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let xx = GateMatrix::<R>::pauli_x().kron(&GateMatrix::pauli_x());
            let m = CMatrix::identity(4).scale_real(R::lit(h));
            let m = &m + &xx.matrix().scale(c(0., h));
            (trusted(m), vec![p.path(), p.oam()])
        }
        ElementKind::PathPrismBs => {
            let prism = CMatrix::diagonal(&[c(1., 0.), c(0., -1.)]);
            (trusted(&beam_splitter() * &prism), vec![p.path()])
        }
        ElementKind::Compensator => (GateMatrix::identity(1), vec![p.path()]),
    }
}

/// One step of an assembly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage<R> {
    Element(OpticalElement<R>),
    /// Detector condition: keep only `role = index`. The qubit stays in the register.
    PostSelect {
        role: Role,
        index: usize,
    },
    /// Final which-port readout: index 0 is `Π+`, index 1 is `Π−`.
    Outcome {
        role: Role,
    },
}

fn el<R: Real>(kind: ElementKind<R>, photon: Photon) -> Stage<R> {
    Stage::Element(OpticalElement::new(kind, photon))
}

/// Alice's interferometer: a polarization-controlled OAM NOT followed by OAM
/// readout in `{r, l}` keeping `r`.
///
/// The leading HWP at 0° is a `σz` on her polarization. It cancels the sign of
/// the `−|ll⟩` source term, which otherwise survives the `r` post-selection as
/// a `(−1)^a` phase on the system.
pub fn assemble_alice<R: Real>() -> Vec<Stage<R>> {
    let one = Photon::One;
    let q = R::FRAC_PI_4();
    vec![
        el(ElementKind::Hwp(R::zero()), one),
        el(ElementKind::Pbs, one),
        el(ElementKind::DovePrism(PathMode::U), one),
        el(ElementKind::Compensator, one),
        el(ElementKind::Hwp(q), one),
        el(ElementKind::Pbs, one),
        el(ElementKind::Hwp(q), one),
        el(ElementKind::Spp, one),
        Stage::PostSelect { role: Role::Oam1, index: 0 },
    ]
}

/// Bob's setup: polarization-path CNOT, path-OAM CNOT, path erasure in
/// `(|d⟩ ± |u⟩)/√2` keeping `+`, then the OAM parity readout on a splitter.
pub fn assemble_bob<R: Real>() -> Vec<Stage<R>> {
    let two = Photon::Two;
    vec![
        el(ElementKind::Pbs, two),
        el(ElementKind::DovePrism(PathMode::U), two),
        el(ElementKind::PathPrismBs, two),
        Stage::PostSelect { role: Role::Path2, index: 0 },
        el(ElementKind::BsOam, two),
        el(ElementKind::Spp, two),
        Stage::PostSelect { role: Role::Oam2, index: 0 },
        Stage::Outcome { role: Role::Path2 },
    ]
}

/// `(a1|HH⟩ + a2|HV⟩ + a3|VH⟩ + a4|VV⟩) ⊗ (|rr⟩ − |ll⟩)/√2`, both photons on `d`.
pub fn encode_initial<R: Real>(input: &SystemInput<R>) -> PureState<R> {
    let reg = photon_register();
    let h = R::FRAC_1_SQRT_2();
    let mut amps = vec![Complex::new(R::zero(), R::zero()); reg.dim()];
    // Bit layout, most significant first: pol1 path1 oam1 pol2 path2 oam2.
    for (idx, a) in input.amplitudes().into_iter().enumerate() {
        let (pa, pb) = (idx >> 1, idx & 1);
        let base = (pa << 5) | (pb << 2);
        amps[base] = a * h;
        amps[base | (1 << 3) | 1] = -a * h;
    }
    PureState::new(reg, amps).expect("normalized by construction")
}

/// Result of evolving through a stage list up to (not including) an outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolution<R> {
    pub state: PureState<R>,
    /// Product of all post-selection probabilities met on the way.
    pub postselection_prob: R,
    /// Individual post-selection probabilities in order.
    pub postselections: Vec<R>,
}

/// Applies elements and post-selections in order. Stops at the first
/// [`Stage::Outcome`] and returns it alongside the evolution.
pub fn evolve<R: Real>(state: &PureState<R>, stages: &[Stage<R>]) -> Result<(Evolution<R>, Option<Role>)> {
    let mut s = state.clone();
    let mut probs = Vec::new();
    for stage in stages {
        match stage {
            Stage::Element(e) => {
                let (g, roles) = element_unitary(e);
                s = apply_gate(&s, &g, &roles)?;
            }
            Stage::PostSelect { role, index } => {
                let (p, next) = postselect(&s, *role, &Basis::computational(), *index)?;
                probs.push(p);
                s = next;
            }
            Stage::Outcome { role } => {
                let total = probs.iter().fold(R::one(), |acc, &p| acc * p);
                return Ok((Evolution { state: s, postselection_prob: total, postselections: probs }, Some(*role)));
            }
        }
    }
    let total = probs.iter().fold(R::one(), |acc, &p| acc * p);
    Ok((Evolution { state: s, postselection_prob: total, postselections: probs }, None))
}

/// Unitaries of the detection-free segments of `stages` on `register`.
pub fn segment_unitaries<R: Real>(register: &QubitRegister, stages: &[Stage<R>]) -> Result<Vec<CMatrix<R>>> {
    let mut out = Vec::new();
    let mut current: Option<CMatrix<R>> = None;
    for stage in stages {
        match stage {
            Stage::Element(e) => {
                let (g, roles) = element_unitary(e);
                let m = embed(register, &g, &roles)?;
                current = Some(match current {
                    Some(u) => &m * &u,
                    None => m,
                });
            }
            _ => out.extend(current.take()),
        }
    }
    out.extend(current);
    Ok(out)
}

/// Ideal-conditional-state degradation per interferometer. With visibility `v`
/// each polarization qubit is dephased: `ρ ↦ (1+v)/2 ρ + (1−v)/2 σz ρ σz`.
pub fn apply_visibility<R: Real>(rho: &DensityMatrix<R>, visibility: R) -> Result<DensityMatrix<R>> {
    if !(R::zero()..=R::one()).contains(&visibility) {
        return Err(Error::ProbabilityOutOfRange(visibility.as_f64()));
    }
    let keep = (R::one() + visibility) / R::lit(2.0);
    let flip = R::one() - keep;
    let mut m = rho.matrix().clone();
    for &role in rho.register().roles() {
        let z = embed(rho.register(), &GateMatrix::pauli_z(), &[role])?;
        let dephased = &(&z * &m) * &z;
        m = &m.scale_real(keep) + &dephased.scale_real(flip);
    }
    DensityMatrix::new(rho.register().clone(), m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpticsOutcome<R> {
    pub outcome: Outcome,
    /// Probability given all heralding conditions.
    pub probability: R,
    /// Polarization state on `(A, B)`; `None` if the outcome cannot occur.
    pub conditional: Option<DensityMatrix<R>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetupResult<R> {
    /// Probability that Alice's OAM detector heralds `r`.
    pub alice_prob: R,
    /// Probability that Bob's path erasure lands in port `d`.
    pub erasure_prob: R,
    /// Probability that Bob's OAM readout photon reaches a coupled detector.
    pub readout_efficiency: R,
    pub visibility: R,
    pub outcomes: Vec<OpticsOutcome<R>>,
}

impl<R: Real> SetupResult<R> {
    /// Heralding share comparable to the abstract step-2 × erasure probability.
    pub fn herald_prob(&self) -> R {
        self.alice_prob * self.erasure_prob
    }

    pub fn outcome(&self, outcome: Outcome) -> &OpticsOutcome<R> {
        &self.outcomes[outcome.index()]
    }
}

/// Evolves the encoded input through both assemblies and reads `Π±` from
/// Bob's final port. `visibility = 1` is the ideal setup.
pub fn run_setup<R: Real>(input: &SystemInput<R>, visibility: R) -> Result<SetupResult<R>> {
    let psi0 = encode_initial(input);
    let (alice, _) = evolve(&psi0, &assemble_alice())?;
    let (bob, readout) = evolve(&alice.state, &assemble_bob())?;
    let readout = readout.ok_or_else(|| Error::NumericalDrift("Bob's assembly has no readout".into()))?;
    let [erasure_prob, readout_efficiency] = bob.postselections[..] else {
        return Err(Error::NumericalDrift("Bob's assembly changed shape".into()));
    };
    let ab = QubitRegister::new(vec![Role::A, Role::B])?;
    let outcomes = Outcome::BOTH
        .iter()
        .map(|&outcome| {
            let (probability, conditional) =
                match project(&bob.state, readout, &Basis::computational(), outcome.index()) {
                    Ok(rec) => {
                        let rho = rec.post_state.expect("project returns a state").to_density();
                        let pol = rho.partial_trace(&[Role::Pol1, Role::Pol2])?.relabel(ab.clone())?;
                        (rec.probability, Some(apply_visibility(&pol, visibility)?))
                    }
                    Err(Error::ImpossibleOutcome { probability }) => (R::lit(probability), None),
                    Err(e) => return Err(e),
                };
            Ok(OpticsOutcome { outcome, probability, conditional })
        })
        .collect::<Result<_>>()?;
    Ok(SetupResult { alice_prob: alice.postselection_prob, erasure_prob, readout_efficiency, visibility, outcomes })
}

/// Coincidence counts per outcome for `shots` heralded events.
pub fn sample_coincidences<R: Real>(result: &SetupResult<R>, shots: u64, seed: u64) -> Result<[u64; 2]> {
    let p = result.outcome(Outcome::Plus).probability.as_f64().clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p).map_err(|e| Error::MalformedDistribution(e.to_string()))?;
    let plus = dist.sample(&mut stream_rng(seed, 0));
    Ok([plus, shots - plus])
}

/// Draws individual detection events, each as a pair of mode labels.
pub fn sample_events<R: Real, G: Rng + ?Sized>(
    result: &SetupResult<R>,
    n: usize,
    rng: &mut G,
) -> Result<Vec<(PhotonModeLabel, PhotonModeLabel)>> {
    let probs: Vec<f64> = result.outcomes.iter().map(|o| o.probability.as_f64()).collect();
    (0..n)
        .map(|_| {
            let k = crate::measurement::sample_index(&probs, rng)?;
            let rho = result.outcomes[k].conditional.as_ref().ok_or(Error::ImpossibleOutcome { probability: 0.0 })?;
            let diag: Vec<f64> = (0..4).map(|i| rho.entry(i, i).re.as_f64().max(0.0)).collect();
            let total: f64 = diag.iter().sum();
            let pol = crate::measurement::sample_index(&diag.iter().map(|d| d / total).collect::<Vec<_>>(), rng)?;
            Ok((PhotonModeLabel::from_bits(pol >> 1, 1, 0, true), PhotonModeLabel::from_bits(pol & 1, k, 0, true)))
        })
        .collect()
}

/// Two `|H, r⟩` photons entering opposite ports of the OAM-swapping splitter.
/// Keeps only outcomes with one photon per output port and names the photons
/// by port. Returns the coincidence probability and the OAM state on
/// `(oam1, oam2)`.
pub fn source_coincidence<R: Real>() -> Result<(R, PureState<R>)> {
    let reg = photon_register();
    // Photon 1 enters port d, photon 2 enters port u, both H and r.
    let s = PureState::basis(reg.clone(), 1 << reg.bit(Role::Path2)?)?;
    let s = evolve(&s, &[el(ElementKind::BsOam, Photon::One), el(ElementKind::BsOam, Photon::Two)])?.0.state;
    let oam = QubitRegister::new(vec![Role::Oam1, Role::Oam2])?;
    let mut amps = vec![Complex::new(R::zero(), R::zero()); 4];
    let bit = |i: usize, role: Role| reg.bit(role).map(|b| (i >> b) & 1);
    for (i, &z) in s.amplitudes().iter().enumerate() {
        let (p1, p2) = (bit(i, Role::Path1)?, bit(i, Role::Path2)?);
        if p1 == p2 {
            continue;
        }
        let (o1, o2) = (bit(i, Role::Oam1)?, bit(i, Role::Oam2)?);
        // Port d's photon becomes photon 1.
        let (od, ou) = if p1 == 0 { (o1, o2) } else { (o2, o1) };
        amps[(od << 1) | ou] += z;
    }
    let p = amps.iter().map(|z| z.norm_sqr()).fold(R::zero(), |s, x| s + x);
    if p < R::zero_prob() {
        return Err(Error::ImpossibleOutcome { probability: p.as_f64() });
    }
    Ok((p, PureState::normalized(oam, amps)?))
}
