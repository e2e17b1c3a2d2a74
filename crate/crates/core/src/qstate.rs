//! Registers, pure states and density matrices.
//!
//! Basis indices follow the ket notation left to right: the role listed first
//! in a [`QubitRegister`] is the most significant bit, so for the register
//! `(A, B)` the amplitude of `|01⟩` sits at index 1 and that of `|10⟩` at
//! index 2.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{is_finite, Real};
use num_complex::Complex;
use std::fmt;

pub const MAX_QUBITS: usize = 8;

/// Name of a qubit inside a register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// Alice's system qubit.
    A,
    /// Bob's system qubit.
    B,
    /// Alice's half of the shared ancilla pair.
    NA,
    /// Bob's half of the shared ancilla pair.
    NB,
    /// Bob's meter.
    M,
    Pol1,
    Path1,
    Oam1,
    Pol2,
    Path2,
    Oam2,
    /// Free-form label for scratch registers.
    Aux(u8),
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::A => f.write_str("A"),
            Role::B => f.write_str("B"),
            Role::NA => f.write_str("N_A"),
            Role::NB => f.write_str("N_B"),
            Role::M => f.write_str("M"),
            Role::Pol1 => f.write_str("pol1"),
            Role::Path1 => f.write_str("path1"),
            Role::Oam1 => f.write_str("oam1"),
            Role::Pol2 => f.write_str("pol2"),
            Role::Path2 => f.write_str("path2"),
            Role::Oam2 => f.write_str("oam2"),
            Role::Aux(k) => write!(f, "q{k}"),
        }
    }
}

/// Ordered, duplicate-free list of qubit roles.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QubitRegister {
    roles: Vec<Role>,
}

impl QubitRegister {
    pub fn new(roles: impl Into<Vec<Role>>) -> Result<Self> {
        let roles = roles.into();
        if roles.len() > MAX_QUBITS {
            return Err(Error::RegisterTooLarge(roles.len()));
        }
        for (i, r) in roles.iter().enumerate() {
            if roles[..i].contains(r) {
                return Err(Error::RoleCollision(*r));
            }
        }
        Ok(Self { roles })
    }

    pub fn empty() -> Self {
        Self { roles: Vec::new() }
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.roles.len()
    }

    pub fn contains(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }

    /// Position of `role` in the listing order.
    pub fn position(&self, role: Role) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    /// Bit shift of `role` inside a basis index.
    pub fn bit(&self, role: Role) -> Result<usize> {
        self.position(role).map(|p| self.roles.len() - 1 - p).ok_or(Error::UnknownRole(role))
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut roles = self.roles.clone();
        roles.extend_from_slice(&other.roles);
        Self::new(roles)
    }

    pub fn without(&self, role: Role) -> Result<Self> {
        if !self.contains(role) {
            return Err(Error::UnknownRole(role));
        }
        Ok(Self { roles: self.roles.iter().copied().filter(|&r| r != role).collect() })
    }
}

impl fmt::Display for QubitRegister {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, r) in self.roles.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str(")")
    }
}

fn check_same_register(a: &QubitRegister, b: &QubitRegister) -> Result<()> {
    if a != b {
        return Err(Error::RegisterMismatch { left: a.to_string(), right: b.to_string() });
    }
    Ok(())
}

/// Normalized state vector over a register.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<R> {
    register: QubitRegister,
    amps: Vec<Complex<R>>,
}

fn norm_sqr<R: Real>(amps: &[Complex<R>]) -> R {
    amps.iter().map(|z| z.norm_sqr()).fold(R::zero(), |s, x| s + x)
}

impl<R: Real> PureState<R> {
    /// Builds a state from amplitudes whose norm is already within the input
    /// tolerance of 1; the result is renormalized exactly.
    pub fn new(register: QubitRegister, amps: Vec<Complex<R>>) -> Result<Self> {
        let n2 = Self::checked_norm_sqr(&register, &amps)?;
        let norm = n2.sqrt();
        if (norm - R::one()).abs() > R::input_tol() {
            return Err(Error::NotNormalized { norm: norm.as_f64() });
        }
        Ok(Self::scaled(register, amps, norm))
    }

    /// Builds a state from any nonzero amplitude vector, normalizing it.
    pub fn normalized(register: QubitRegister, amps: Vec<Complex<R>>) -> Result<Self> {
        let n2 = Self::checked_norm_sqr(&register, &amps)?;
        Ok(Self::scaled(register, amps, n2.sqrt()))
    }

    /// Computational basis state; bits of `index` follow the register order.
    pub fn basis(register: QubitRegister, index: usize) -> Result<Self> {
        let dim = register.dim();
        if index >= dim {
            return Err(Error::LengthMismatch { expected: dim, found: index + 1 });
        }
        let mut amps = vec![Complex::new(R::zero(), R::zero()); dim];
        amps[index] = Complex::new(R::one(), R::zero());
        Ok(Self { register, amps })
    }

    fn checked_norm_sqr(register: &QubitRegister, amps: &[Complex<R>]) -> Result<R> {
        if amps.len() != register.dim() {
            return Err(Error::LengthMismatch { expected: register.dim(), found: amps.len() });
        }
        if !amps.iter().all(|z| is_finite(*z)) {
            return Err(Error::NonFinite);
        }
        let n2 = norm_sqr(amps);
        if n2 <= R::min_positive_value() {
            return Err(Error::ZeroVector);
        }
        Ok(n2)
    }

    fn scaled(register: QubitRegister, amps: Vec<Complex<R>>, norm: R) -> Self {
        let inv = R::one() / norm;
        Self { register, amps: amps.into_iter().map(|z| z * inv).collect() }
    }

    /// Wraps amplitudes produced by norm-preserving engine arithmetic.
    pub(crate) fn from_engine(register: QubitRegister, amps: Vec<Complex<R>>) -> Result<Self> {
        let n2 = norm_sqr(&amps);
        if (n2 - R::one()).abs() > R::drift_tol() {
            return Err(Error::NumericalDrift(format!("state norm² drifted to {}", n2.as_f64())));
        }
        Ok(Self { register, amps })
    }

    pub fn register(&self) -> &QubitRegister {
        &self.register
    }

    pub fn amplitudes(&self) -> &[Complex<R>] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex<R> {
        self.amps[index]
    }

    pub fn num_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> R {
        norm_sqr(&self.amps)
    }

    /// `self ⊗ other`; the roles of `self` come first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let register = self.register.concat(&other.register)?;
        let amps = self.amps.iter().flat_map(|&a| other.amps.iter().map(move |&b| a * b)).collect();
        Ok(Self { register, amps })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<R>> {
        check_same_register(&self.register, &other.register)?;
        Ok(self.amps.iter().zip(&other.amps).fold(Complex::new(R::zero(), R::zero()), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> Result<R> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Same amplitudes under new role names.
    pub fn relabel(&self, register: QubitRegister) -> Result<Self> {
        if register.len() != self.register.len() {
            return Err(Error::DimensionMismatch { left: self.register.dim(), right: register.dim() });
        }
        Ok(Self { register, amps: self.amps.clone() })
    }

    pub fn to_density(&self) -> DensityMatrix<R> {
        DensityMatrix { register: self.register.clone(), matrix: CMatrix::outer(&self.amps) }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix over a register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<R> {
    register: QubitRegister,
    matrix: CMatrix<R>,
}

impl<R: Real> DensityMatrix<R> {
    /// Validates hermiticity, unit trace and the eigenvalue floor.
    pub fn new(register: QubitRegister, matrix: CMatrix<R>) -> Result<Self> {
        if matrix.dim() != register.dim() {
            return Err(Error::DimensionMismatch { left: register.dim(), right: matrix.dim() });
        }
        if !matrix.as_slice().iter().all(|z| is_finite(*z)) {
            return Err(Error::NonFinite);
        }
        let herm = matrix.hermiticity_deviation();
        if herm > R::drift_tol() {
            return Err(Error::NotHermitian { deviation: herm.as_f64() });
        }
        let tr = matrix.trace();
        if (tr.re - R::one()).abs() > R::drift_tol() || tr.im.abs() > R::drift_tol() {
            return Err(Error::InvalidTrace { trace: tr.re.as_f64() });
        }
        let rho = Self { register, matrix };
        let min = rho.min_eigenvalue();
        if min < -R::lit(R::NEG_EIGEN_TOL) {
            return Err(Error::NotPositive { min_eigenvalue: min.as_f64() });
        }
        Ok(rho)
    }

    pub fn maximally_mixed(register: QubitRegister) -> Self {
        let d = register.dim();
        let matrix = CMatrix::identity(d).scale_real(R::one() / R::from_usize(d).unwrap_or_else(R::one));
        Self { register, matrix }
    }

    pub fn register(&self) -> &QubitRegister {
        &self.register
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<R> {
        self.matrix[(i, j)]
    }

    pub fn eigenvalues(&self) -> Vec<R> {
        self.matrix.eigh().0
    }

    pub fn min_eigenvalue(&self) -> R {
        self.eigenvalues().first().copied().unwrap_or_else(R::zero)
    }

    pub fn trace_re(&self) -> R {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> R {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Von Neumann entropy in bits.
    pub fn entropy_bits(&self) -> R {
        let cutoff = R::epsilon();
        self.eigenvalues().into_iter().filter(|&l| l > cutoff).map(|l| -l * l.log2()).fold(R::zero(), |s, x| s + x)
    }

    pub fn relabel(&self, register: QubitRegister) -> Result<Self> {
        if register.len() != self.register.len() {
            return Err(Error::DimensionMismatch { left: self.register.dim(), right: register.dim() });
        }
        Ok(Self { register, matrix: self.matrix.clone() })
    }

    /// Reduced state on the roles in `keep`, listed in register order.
    pub fn partial_trace(&self, keep: &[Role]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        for &r in keep {
            if !self.register.contains(r) {
                return Err(Error::UnknownRole(r));
            }
        }
        let kept_roles: Vec<Role> = self.register.roles().iter().copied().filter(|r| keep.contains(r)).collect();
        let kept_bits: Vec<usize> = kept_roles.iter().map(|&r| self.register.bit(r)).collect::<Result<_>>()?;
        let traced_bits: Vec<usize> = self
            .register
            .roles()
            .iter()
            .filter(|r| !keep.contains(r))
            .map(|&r| self.register.bit(r))
            .collect::<Result<_>>()?;
        let gather = |index: usize, bits: &[usize]| bits.iter().fold(0usize, |acc, &b| (acc << 1) | ((index >> b) & 1));
        let register = QubitRegister::new(kept_roles)?;
        let mut out = CMatrix::zeros(register.dim());
        let dim = self.dim();
        for i in 0..dim {
            let (ki, ti) = (gather(i, &kept_bits), gather(i, &traced_bits));
            for j in 0..dim {
                if gather(j, &traced_bits) == ti {
                    out[(ki, gather(j, &kept_bits))] += self.matrix[(i, j)];
                }
            }
        }
        Ok(Self { register, matrix: out })
    }

    /// `Re Tr(ρ σ)`; for a pure `σ` this is the usual state fidelity.
    pub fn fidelity(&self, other: &Self) -> Result<R> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        check_same_register(&self.register, &other.register)?;
        let tr = (&self.matrix * &other.matrix).trace();
        if tr.im.abs() > R::drift_tol() {
            return Err(Error::NumericalDrift(format!("Tr(ρσ) has imaginary part {}", tr.im.as_f64())));
        }
        Ok(tr.re.max(R::zero()).min(R::one()))
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights are renormalized.
    pub fn mixture(parts: &[(R, &Self)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::ZeroVector)?.1;
        let total = parts.iter().map(|p| p.0).fold(R::zero(), |s, x| s + x);
        if total <= R::zero() || parts.iter().any(|p| p.0 < R::zero()) {
            return Err(Error::MalformedDistribution("mixture weights".into()));
        }
        let mut acc = CMatrix::zeros(first.dim());
        for (w, rho) in parts {
            check_same_register(&first.register, &rho.register)?;
            acc = &acc + &rho.matrix.scale_real(*w / total);
        }
        Ok(Self { register: first.register.clone(), matrix: acc })
    }
}
