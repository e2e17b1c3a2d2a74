//! Projective measurement, post-selection and projector-valued Kraus channels.

use crate::error::{Error, Result};
use crate::gates::{apply_matrix, distinct_bits, GateMatrix};
use crate::linalg::CMatrix;
use crate::qstate::{PureState, QubitRegister, Role};
use crate::scalar::{c, Real};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Binary outcome label. Index 0 is `Plus` (eigenvalue +1, first basis vector).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Outcome::Plus),
            1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn eigenvalue(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// Orthonormal single-qubit basis `{|b₀⟩, |b₁⟩}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis<R> {
    kets: [[Complex<R>; 2]; 2],
}

impl<R: Real> Basis<R> {
    pub fn new(b0: [Complex<R>; 2], b1: [Complex<R>; 2]) -> Result<Self> {
        let dot = |u: &[Complex<R>; 2], v: &[Complex<R>; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
        let tol = R::drift_tol();
        let one = Complex::new(R::one(), R::zero());
        if (dot(&b0, &b0) - one).norm() > tol || (dot(&b1, &b1) - one).norm() > tol || dot(&b0, &b1).norm() > tol {
            return Err(Error::InvalidBasis);
        }
        Ok(Self { kets: [b0, b1] })
    }

    /// `{|0⟩, |1⟩}`.
    pub fn computational() -> Self {
        Self { kets: [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)]] }
    }

    /// `{|+⟩, |−⟩}`.
    pub fn plus_minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { kets: [[c(h, 0.), c(h, 0.)], [c(h, 0.), c(-h, 0.)]] }
    }

    /// `{(|0⟩+i|1⟩)/√2, (|0⟩−i|1⟩)/√2}`.
    pub fn circular() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { kets: [[c(h, 0.), c(0., h)], [c(h, 0.), c(0., -h)]] }
    }

    pub fn ket(&self, index: usize) -> [Complex<R>; 2] {
        self.kets[index]
    }

    /// `|b_k⟩⟨b_k|`.
    pub fn projector(&self, index: usize) -> CMatrix<R> {
        CMatrix::outer(&self.kets[index])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord<R> {
    pub outcome: Outcome,
    pub probability: R,
    /// `None` when the branch probability is below the zero-probability floor.
    pub post_state: Option<PureState<R>>,
}

fn branch_probability<R: Real>(amps: &[Complex<R>]) -> R {
    amps.iter().map(|z| z.norm_sqr()).fold(R::zero(), |s, x| s + x)
}

fn impossible<R: Real>(p: R) -> Error {
    Error::ImpossibleOutcome { probability: p.as_f64() }
}

/// Measures `q` in `basis`, keeping outcome `outcome_index`. The measured
/// qubit is removed from the register of the post-measurement state.
pub fn project<R: Real>(
    state: &PureState<R>,
    q: Role,
    basis: &Basis<R>,
    outcome_index: usize,
) -> Result<MeasurementRecord<R>> {
    let outcome = Outcome::from_index(outcome_index).ok_or(Error::InvalidBasis)?;
    let register = state.register();
    let shift = register.bit(q)?;
    let remaining = register.without(q)?;
    let b = basis.ket(outcome_index);
    let low = (1usize << shift) - 1;
    let amps = state.amplitudes();
    let branch: Vec<Complex<R>> = (0..remaining.dim())
        .map(|j| {
            let i0 = ((j & !low) << 1) | (j & low);
            b[0].conj() * amps[i0] + b[1].conj() * amps[i0 | (1 << shift)]
        })
        .collect();
    let probability = branch_probability(&branch);
    if probability < R::zero_prob() {
        return Err(impossible(probability));
    }
    let post_state = PureState::normalized(remaining, branch)?;
    Ok(MeasurementRecord { outcome, probability, post_state: Some(post_state) })
}

/// Projects `q` onto `|b_k⟩` but keeps it in the register. Returns the branch
/// probability and the renormalized state.
pub fn postselect<R: Real>(
    state: &PureState<R>,
    q: Role,
    basis: &Basis<R>,
    outcome_index: usize,
) -> Result<(R, PureState<R>)> {
    if outcome_index > 1 {
        return Err(Error::InvalidBasis);
    }
    let shifts = distinct_bits(state.register(), &[q])?;
    let branch = apply_matrix(state.amplitudes(), &basis.projector(outcome_index), &shifts);
    let probability = branch_probability(&branch);
    if probability < R::zero_prob() {
        return Err(impossible(probability));
    }
    Ok((probability, PureState::normalized(state.register().clone(), branch)?))
}

/// Labelled projector pair acting on a fixed list of roles.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet<R> {
    targets: Vec<Role>,
    labels: Vec<Outcome>,
    operators: Vec<CMatrix<R>>,
}

impl<R: Real> KrausSet<R> {
    /// Checks that every operator is a Hermitian idempotent on `targets` and
    /// that they sum to the identity.
    pub fn new(targets: Vec<Role>, labels: Vec<Outcome>, operators: Vec<CMatrix<R>>) -> Result<Self> {
        QubitRegister::new(targets.clone())?;
        if labels.len() != operators.len() || operators.is_empty() {
            return Err(Error::InvalidKraus("one label per operator".into()));
        }
        let dim = 1usize << targets.len();
        let tol = R::drift_tol();
        let mut sum = CMatrix::zeros(dim);
        for k in &operators {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: k.dim() });
            }
            if k.hermiticity_deviation() > tol {
                return Err(Error::InvalidKraus("operator is not Hermitian".into()));
            }
            if (k * k).max_abs_diff(k) > tol {
                return Err(Error::InvalidKraus("operator is not idempotent".into()));
            }
            sum = &sum + k;
        }
        if sum.max_abs_diff(&CMatrix::identity(dim)) > tol {
            return Err(Error::InvalidKraus("operators do not sum to the identity".into()));
        }
        Ok(Self { targets, labels, operators })
    }

    /// Spectral projectors of `σz ⊗ σz` on `(a, b)`: `Π+` onto `{|00⟩, |11⟩}`
    /// and `Π−` onto `{|01⟩, |10⟩}`.
    pub fn zz(a: Role, b: Role) -> Result<Self> {
        if a == b {
            return Err(Error::SameQubit(a));
        }
        let (one, zero) = (c(1., 0.), c(0., 0.));
        let plus = CMatrix::diagonal(&[one, zero, zero, one]);
        let minus = CMatrix::diagonal(&[zero, one, one, zero]);
        Ok(Self { targets: vec![a, b], labels: Outcome::BOTH.to_vec(), operators: vec![plus, minus] })
    }

    /// `K ↦ U† K U` with `U = rot_a ⊗ rot_b`. If `U` maps the eigenbasis of
    /// `P` to the computational basis, `zz` becomes the projector pair of `P ⊗ Q`.
    pub fn conjugated(&self, rot_a: &GateMatrix<R>, rot_b: &GateMatrix<R>) -> Result<Self> {
        if self.targets.len() != 2 || rot_a.num_qubits() != 1 || rot_b.num_qubits() != 1 {
            return Err(Error::GateArity {
                gate: rot_a.num_qubits() + rot_b.num_qubits(),
                targets: self.targets.len(),
            });
        }
        let u = rot_a.kron(rot_b);
        let ud = u.adjoint();
        let operators = self.operators.iter().map(|k| &(ud.matrix() * k) * u.matrix()).collect();
        Self::new(self.targets.clone(), self.labels.clone(), operators)
    }

    pub fn targets(&self) -> &[Role] {
        &self.targets
    }

    pub fn labels(&self) -> &[Outcome] {
        &self.labels
    }

    pub fn operators(&self) -> &[CMatrix<R>] {
        &self.operators
    }

    /// Entrywise distance of `Σ K†K` from the identity.
    pub fn completeness_deviation(&self) -> R {
        let dim = 1usize << self.targets.len();
        let sum = self.operators.iter().fold(CMatrix::zeros(dim), |acc, k| &acc + &(&k.adjoint() * k));
        sum.max_abs_diff(&CMatrix::identity(dim))
    }
}

/// One record per Kraus operator. Post-states keep the full register.
pub fn kraus_apply<R: Real>(state: &PureState<R>, kraus: &KrausSet<R>) -> Result<Vec<MeasurementRecord<R>>> {
    let shifts = distinct_bits(state.register(), &kraus.targets)?;
    let records: Vec<MeasurementRecord<R>> = kraus
        .labels
        .iter()
        .zip(&kraus.operators)
        .map(|(&outcome, k)| {
            let branch = apply_matrix(state.amplitudes(), k, &shifts);
            let probability = branch_probability(&branch);
            let post_state = if probability < R::zero_prob() {
                None
            } else {
                Some(PureState::normalized(state.register().clone(), branch)?)
            };
            Ok(MeasurementRecord { outcome, probability, post_state })
        })
        .collect::<Result<_>>()?;
    let total = records.iter().map(|r| r.probability).fold(R::zero(), |s, x| s + x);
    if (total - R::one()).abs() > R::drift_tol() {
        return Err(Error::NumericalDrift(format!("Kraus probabilities sum to {}", total.as_f64())));
    }
    Ok(records)
}

/// Independent, reproducible stream `stream` under root seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws an index from `probs`, which must sum to 1 within 1e-9.
pub fn sample_index<G: Rng + ?Sized>(probs: &[f64], rng: &mut G) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::MalformedDistribution("empty".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::MalformedDistribution("negative or non-finite weight".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::MalformedDistribution(format!("weights sum to {total}")));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // u landed in the rounding gap at the top; return the last possible outcome.
    Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1))
}

pub fn sample_outcome<R: Real, G: Rng + ?Sized>(records: &[MeasurementRecord<R>], rng: &mut G) -> Result<Outcome> {
    let probs: Vec<f64> = records.iter().map(|r| r.probability.as_f64()).collect();
    Ok(records[sample_index(&probs, rng)?].outcome)
}
