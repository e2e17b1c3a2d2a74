//! Unitary gates, their application to state vectors, and the identities that
//! relate Bob's cascaded controlled gates to the three-body meter coupling.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qstate::{PureState, QubitRegister, Role, MAX_QUBITS};
use crate::scalar::{c, Real};
use num_complex::Complex;

/// Unitary on one to eight qubits. The first target passed to
/// [`apply_gate`] is the most significant index bit of the matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix<R> {
    matrix: CMatrix<R>,
    qubits: usize,
}

impl<R: Real> GateMatrix<R> {
    pub fn new(matrix: CMatrix<R>) -> Result<Self> {
        let dim = matrix.dim();
        if dim < 2 || !dim.is_power_of_two() || dim > (1 << MAX_QUBITS) {
            return Err(Error::DimensionMismatch { left: dim, right: dim.next_power_of_two().max(2) });
        }
        let deviation = matrix.unitarity_deviation();
        if deviation > R::drift_tol() {
            return Err(Error::NotUnitary { deviation: deviation.as_f64() });
        }
        Ok(Self { qubits: dim.trailing_zeros() as usize, matrix })
    }

    /// Products of gates that are unitary by construction.
    fn trusted(matrix: CMatrix<R>) -> Self {
        debug_assert!(matrix.unitarity_deviation() <= R::drift_tol());
        Self { qubits: matrix.dim().trailing_zeros() as usize, matrix }
    }

    pub fn identity(qubits: usize) -> Self {
        Self::trusted(CMatrix::identity(1 << qubits))
    }

    pub fn pauli_x() -> Self {
        Self::trusted(CMatrix::from_rows([[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]]))
    }

    pub fn pauli_y() -> Self {
        Self::trusted(CMatrix::from_rows([[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]]))
    }

    pub fn pauli_z() -> Self {
        Self::trusted(CMatrix::from_rows([[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]]))
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::trusted(CMatrix::from_rows([[c(h, 0.), c(h, 0.)], [c(h, 0.), c(-h, 0.)]]))
    }

    /// `diag(1, e^{iχ})`.
    pub fn phase(chi: R) -> Self {
        let one = Complex::new(R::one(), R::zero());
        Self::trusted(CMatrix::diagonal(&[one, Complex::from_polar(R::one(), chi)]))
    }

    /// `e^{−i (angle/2) σx}`; any real angle.
    pub fn rx(angle: R) -> Self {
        exp_involution(-angle / R::lit(2.0), &Self::pauli_x())
    }

    /// Half-wave plate with fast axis at `theta` from H: `R(θ)·diag(1,−1)·R(−θ)`.
    pub fn hwp(theta: R) -> Self {
        let (s2, c2) = (theta + theta).sin_cos();
        let z = R::zero();
        Self::trusted(CMatrix::from_rows([
            [Complex::new(c2, z), Complex::new(s2, z)],
            [Complex::new(s2, z), Complex::new(-c2, z)],
        ]))
    }

    /// Quarter-wave plate with fast axis at `theta` from H: `R(θ)·diag(1,i)·R(−θ)`.
    pub fn qwp(theta: R) -> Self {
        let (s, co) = theta.sin_cos();
        let (cc, ss, cs) = (co * co, s * s, co * s);
        Self::trusted(CMatrix::from_rows([
            [Complex::new(cc, ss), Complex::new(cs, -cs)],
            [Complex::new(cs, -cs), Complex::new(ss, cc)],
        ]))
    }

    /// Two-qubit CNOT, control on the first (most significant) qubit.
    pub fn cnot() -> Self {
        Self::pauli_x().controlled()
    }

    /// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ self`, with the new control as the top qubit.
    pub fn controlled(&self) -> Self {
        let d = self.matrix.dim();
        let m = CMatrix::from_fn(2 * d, |i, j| match (i < d, j < d) {
            (true, true) => {
                if i == j {
                    Complex::new(R::one(), R::zero())
                } else {
                    Complex::new(R::zero(), R::zero())
                }
            }
            (false, false) => self.matrix[(i - d, j - d)],
            _ => Complex::new(R::zero(), R::zero()),
        });
        Self::trusted(m)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::trusted(self.matrix.kron(&other.matrix))
    }

    /// Operator product `self · other` (`other` acts first).
    pub fn then_after(&self, other: &Self) -> Result<Self> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch { left: self.matrix.dim(), right: other.matrix.dim() });
        }
        Ok(Self::trusted(&self.matrix * &other.matrix))
    }

    pub fn adjoint(&self) -> Self {
        Self::trusted(self.matrix.adjoint())
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }
}

/// `e^{iθP} = cos θ · I + i sin θ · P` for a Hermitian unitary `P` (so `P² = I`).
pub fn exp_involution<R: Real>(theta: R, p: &GateMatrix<R>) -> GateMatrix<R> {
    debug_assert!(p.matrix.hermiticity_deviation() <= R::drift_tol());
    let (s, co) = theta.sin_cos();
    let id = CMatrix::identity(p.matrix.dim()).scale_real(co);
    let rot = p.matrix.scale(Complex::new(R::zero(), s));
    GateMatrix::trusted(&id + &rot)
}

/// Discrete coupling strength φ ∈ [0, π] of the controlled meter rotation.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct CouplingAngle<R>(R);

impl<R: Real> CouplingAngle<R> {
    pub fn new(phi: R) -> Result<Self> {
        if !(phi >= R::zero() && phi <= R::PI()) {
            return Err(Error::AngleOutOfRange(phi.as_f64()));
        }
        Ok(Self(phi))
    }

    /// φ = π: the projective limit where the controlled rotation acts as a NOT.
    pub fn strong() -> Self {
        Self(R::PI())
    }

    pub fn radians(self) -> R {
        self.0
    }
}

pub(crate) fn distinct_bits(register: &QubitRegister, targets: &[Role]) -> Result<Vec<usize>> {
    for (i, t) in targets.iter().enumerate() {
        if targets[..i].contains(t) {
            return Err(Error::SameQubit(*t));
        }
    }
    targets.iter().map(|&t| register.bit(t)).collect()
}

fn apply_to_amplitudes<R: Real>(amps: &[Complex<R>], gate: &GateMatrix<R>, shifts: &[usize]) -> Vec<Complex<R>> {
    apply_matrix(amps, &gate.matrix, shifts)
}

/// Applies any `2^k × 2^k` matrix to the index bits at `shifts`; the first
/// shift is the matrix's most significant bit. Also used for projectors.
pub(crate) fn apply_matrix<R: Real>(amps: &[Complex<R>], matrix: &CMatrix<R>, shifts: &[usize]) -> Vec<Complex<R>> {
    let k = shifts.len();
    let sub_dim = 1usize << k;
    let deposit: Vec<usize> =
        (0..sub_dim).map(|sub| (0..k).fold(0, |acc, t| acc | (((sub >> (k - 1 - t)) & 1) << shifts[t]))).collect();
    let mask = deposit[sub_dim - 1];
    let zero = Complex::new(R::zero(), R::zero());
    let mut out = vec![zero; amps.len()];
    for (i, &a) in amps.iter().enumerate() {
        if a == zero {
            continue;
        }
        let base = i & !mask;
        let sub_i = (0..k).fold(0, |acc, t| (acc << 1) | ((i >> shifts[t]) & 1));
        for (sub_j, &dep) in deposit.iter().enumerate() {
            let u = matrix[(sub_j, sub_i)];
            if u != zero {
                out[base | dep] += u * a;
            }
        }
    }
    out
}

/// Applies `gate` to the listed roles; the first role is the gate's top qubit.
pub fn apply_gate<R: Real>(state: &PureState<R>, gate: &GateMatrix<R>, targets: &[Role]) -> Result<PureState<R>> {
    if gate.num_qubits() != targets.len() {
        return Err(Error::GateArity { gate: gate.num_qubits(), targets: targets.len() });
    }
    let shifts = distinct_bits(state.register(), targets)?;
    let out = apply_to_amplitudes(state.amplitudes(), gate, &shifts);
    PureState::from_engine(state.register().clone(), out)
}

pub fn apply_single<R: Real>(state: &PureState<R>, gate: &GateMatrix<R>, target: Role) -> Result<PureState<R>> {
    apply_gate(state, gate, &[target])
}

/// Controlled-`gate` with a computational-basis control.
pub fn apply_controlled<R: Real>(
    state: &PureState<R>,
    gate: &GateMatrix<R>,
    control: Role,
    target: Role,
) -> Result<PureState<R>> {
    if control == target {
        return Err(Error::SameQubit(control));
    }
    apply_gate(state, &gate.controlled(), &[control, target])
}

pub fn apply_cnot<R: Real>(state: &PureState<R>, control: Role, target: Role) -> Result<PureState<R>> {
    apply_controlled(state, &GateMatrix::pauli_x(), control, target)
}

/// Controlled-`e^{−i φ/2 σx}`. At φ = π the control-1 block is `−i σx`.
pub fn apply_controlled_rx<R: Real>(
    state: &PureState<R>,
    control: Role,
    target: Role,
    phi: CouplingAngle<R>,
) -> Result<PureState<R>> {
    apply_controlled(state, &GateMatrix::rx(phi.radians()), control, target)
}

/// Full-register matrix of `gate` acting on `targets`.
pub fn embed<R: Real>(register: &QubitRegister, gate: &GateMatrix<R>, targets: &[Role]) -> Result<CMatrix<R>> {
    if gate.num_qubits() != targets.len() {
        return Err(Error::GateArity { gate: gate.num_qubits(), targets: targets.len() });
    }
    let shifts = distinct_bits(register, targets)?;
    let dim = register.dim();
    let mut m = CMatrix::zeros(dim);
    let mut column = vec![Complex::new(R::zero(), R::zero()); dim];
    for j in 0..dim {
        column[j] = Complex::new(R::one(), R::zero());
        for (i, z) in apply_to_amplitudes(&column, gate, &shifts).into_iter().enumerate() {
            m[(i, j)] = z;
        }
        column[j] = Complex::new(R::zero(), R::zero());
    }
    Ok(m)
}

fn pauli_string<R: Real>(factors: &[GateMatrix<R>]) -> GateMatrix<R> {
    factors[1..].iter().fold(factors[0].clone(), |acc, g| acc.kron(g))
}

/// `exp(−i (φ/4) σz ⊗ σz ⊗ σx)` on (system-or-ancilla, system-or-ancilla, meter).
pub fn three_qubit_interaction<R: Real>(phi: CouplingAngle<R>) -> GateMatrix<R> {
    let zzx = pauli_string(&[GateMatrix::pauli_z(), GateMatrix::pauli_z(), GateMatrix::pauli_x()]);
    exp_involution(-phi.radians() / R::lit(4.0), &zzx)
}

fn bob_register() -> QubitRegister {
    QubitRegister::new(vec![Role::B, Role::NB, Role::M]).expect("static register")
}

/// `|+⟩⟨+|` on N_B inside (B, N_B, M): the erasure branch Bob keeps.
fn erased_branch<R: Real>() -> CMatrix<R> {
    let h = c::<R>(0.5, 0.);
    let plus = CMatrix::from_rows([[h, h], [h, h]]);
    CMatrix::identity(2).kron(&plus).kron(&CMatrix::identity(2))
}

/// Bob's gate sequence CNOT(N_B→M)·CNOT(B→N_B) on (B, N_B, M).
pub fn cascaded_cnots<R: Real>() -> CMatrix<R> {
    cascade_with(&GateMatrix::pauli_x())
}

fn cascade_with<R: Real>(meter_gate: &GateMatrix<R>) -> CMatrix<R> {
    let reg = bob_register();
    let first = embed(&reg, &GateMatrix::cnot(), &[Role::B, Role::NB]).expect("static roles");
    let second = embed(&reg, &meter_gate.controlled(), &[Role::NB, Role::M]).expect("static roles");
    &second * &first
}

/// `e^{−iσθ σzσzσx} · e^{iχ σzσz ⊗ I} · e^{iσθ I⊗I⊗σx}` with θ = φ/4 and
/// orientation sign σ.
fn interaction_form<R: Real>(quarter_phi: R, orientation: R, chi: R) -> CMatrix<R> {
    let (z, x, id) = (GateMatrix::pauli_z(), GateMatrix::pauli_x(), GateMatrix::identity(1));
    let coupling = exp_involution(-orientation * quarter_phi, &pauli_string(&[z.clone(), z.clone(), x.clone()]));
    let compensation = exp_involution(chi, &pauli_string(&[z.clone(), z, id.clone()]));
    let meter = exp_involution(orientation * quarter_phi, &pauli_string(&[id.clone(), id, x]));
    &(&coupling.matrix * &compensation.matrix) * &meter.matrix
}

/// `e^{−iπ/4 σz^B σz^{N_B} σx^M} · e^{iπ/4 σz^B σz^{N_B}} · e^{iπ/4 σx^M}`.
pub fn strong_interaction_form<R: Real>() -> CMatrix<R> {
    let q = R::FRAC_PI_4();
    interaction_form(q, R::one(), q)
}

fn erased_residual<R: Real>(lhs: &CMatrix<R>, rhs: &CMatrix<R>) -> R {
    let keep = erased_branch::<R>();
    (&keep * lhs).max_abs_diff_up_to_phase(&(&keep * rhs))
}

/// Residual between the two cascaded CNOTs and the three-factor interaction
/// on the branch where N_B is erased to `|+⟩`, after removing one global
/// phase. The identity is exact there; on the full space the two operators
/// differ by the parity bookkeeping left on N_B (see [`ancilla_relabel_residual`]).
pub fn decomposition_check<R: Real>() -> R {
    erased_residual(&cascaded_cnots(), &strong_interaction_form())
}

/// Full-space form of the same identity: the cascade equals the interaction
/// followed by CNOT(B→N_B), which only rewrites N_B from `a` to `a ⊕ b`.
pub fn ancilla_relabel_residual<R: Real>() -> R {
    let reg = bob_register();
    let relabel = embed(&reg, &GateMatrix::cnot(), &[Role::B, Role::NB]).expect("static roles");
    cascaded_cnots::<R>().max_abs_diff_up_to_phase(&(&relabel * &strong_interaction_form()))
}

/// Sign convention of the rotation exponents in the weak interaction form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `e^{−iφ/4 σzσzσx} … e^{+iφ/4 σx}`.
    AsWritten,
    /// `e^{+iφ/4 σzσzσx} … e^{−iφ/4 σx}`.
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakDecomposition<R> {
    /// Best erased-branch residual over both orientations.
    pub residual: R,
    pub orientation: Orientation,
    /// Fitted χ of the `e^{iχ σzσz}` compensation.
    pub compensation: R,
    /// Best residual reachable with the [`Orientation::AsWritten`] signs.
    pub as_written_residual: R,
}

/// Weak analogue of [`decomposition_check`]: the second CNOT is replaced by
/// controlled-`e^{−iφ/2 σx}` and compared, on the erased branch, with
/// `e^{∓iφ/4 σzσzσx} e^{iχ σzσz} e^{±iφ/4 σx}`. The compensation angle χ is
/// not assumed; it is fitted by a grid scan refined with golden-section search.
pub fn weak_decomposition_check<R: Real>(phi: CouplingAngle<R>) -> WeakDecomposition<R> {
    let lhs = cascade_with(&GateMatrix::rx(phi.radians()));
    let quarter = phi.radians() / R::lit(4.0);
    let fit = |orientation: R| {
        let residual = |chi: R| erased_residual(&lhs, &interaction_form(quarter, orientation, chi));
        fit_angle(residual)
    };
    let (chi_w, res_w) = fit(R::one());
    let (chi_r, res_r) = fit(-R::one());
    if res_r < res_w {
        WeakDecomposition {
            residual: res_r,
            orientation: Orientation::Reversed,
            compensation: chi_r,
            as_written_residual: res_w,
        }
    } else {
        WeakDecomposition {
            residual: res_w,
            orientation: Orientation::AsWritten,
            compensation: chi_w,
            as_written_residual: res_w,
        }
    }
}

/// Minimizes `f` over χ ∈ [−π/2, π/2]; `e^{iχ σzσz}` repeats with period π up
/// to a global sign.
fn fit_angle<R: Real>(f: impl Fn(R) -> R) -> (R, R) {
    const GRID: usize = 720;
    let lo = -R::FRAC_PI_2();
    let step = R::PI() / R::lit(GRID as f64);
    let at = |k: usize| lo + step * R::lit(k as f64);
    let (best_k, _) =
        (0..=GRID).map(|k| (k, f(at(k)))).fold((0, R::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best });
    let (mut a, mut b) = (at(best_k) - step, at(best_k) + step);
    let golden = R::lit(0.618_033_988_749_894_9);
    for _ in 0..120 {
        let x1 = b - golden * (b - a);
        let x2 = a + golden * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let chi = (a + b) / R::lit(2.0);
    (chi, f(chi))
}
