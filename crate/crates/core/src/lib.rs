//! Simulation of a nonlocal von Neumann measurement of `σz ⊗ σz` built from
//! local operations, a shared Bell pair and quantum erasure.
//!
//! The crate covers the abstract five-qubit circuit and its weak-coupling
//! variant ([`protocol`]), the two-photon optical implementation that encodes
//! the same circuit in polarization, path and OAM ([`optics`]), and the
//! tomography pipeline used to analyze finite-count outputs ([`tomography`]).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the tolerances are tuned for.
//!
//! ```
//! use nonlocal_meter::{run_strong, ErasurePolicy, Outcome, Preset, SystemInput};
//!
//! let input = SystemInput::<f64>::preset(Preset::Phi4);
//! let results = run_strong(&input, ErasurePolicy::KeepPlus).unwrap();
//! let plus = results.iter().find(|r| r.outcome == Outcome::Plus).unwrap();
//! assert!((plus.probability - 5.0 / 9.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod gates;
pub mod linalg;
pub mod measurement;
pub mod optics;
pub mod protocol;
pub mod qstate;
pub mod scalar;
pub mod tomography;

pub use error::{Error, Result};
pub use gates::{decomposition_check, weak_decomposition_check, CouplingAngle, GateMatrix};
pub use measurement::{kraus_apply, project, sample_outcome, stream_rng, Basis, KrausSet, MeasurementRecord, Outcome};
pub use optics::{run_setup, SetupResult};
pub use protocol::{
    analytic_expected, run_observable, run_strong, run_weak, ErasurePolicy, ObservableSpec, Pauli, Preset,
    ProtocolResult, SystemInput, WeakResult,
};
pub use qstate::{DensityMatrix, PureState, QubitRegister, Role};
pub use scalar::Real;
pub use tomography::{
    apply_depolarizing, estimate_fidelity_and_probability, reconstruct, CountsTable, EstimateWithError,
};

pub type PureState64 = PureState<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type SystemInput64 = SystemInput<f64>;
pub type GateMatrix64 = GateMatrix<f64>;
pub type CouplingAngle64 = CouplingAngle<f64>;

pub type PureState32 = PureState<f32>;
pub type DensityMatrix32 = DensityMatrix<f32>;
pub type SystemInput32 = SystemInput<f32>;
