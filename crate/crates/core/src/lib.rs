//! Quantum feature maps for kernel support vector machines.
//!
//! Circuits are simulated exactly on dense statevectors and turned into
//! fidelity kernels for an SMO-trained SVM. Feature maps can be searched
//! with a genetic algorithm, trained as variational ansatzes, compiled from
//! unitaries and simplified.

pub mod ansatz;
pub mod benchmark;
pub mod circuit;
pub mod dataset;
pub mod decompose;
pub mod error;
pub mod ga;
pub mod kernel;
pub mod linalg;
pub mod optim;
pub mod simplify;
pub mod statevector;
pub mod svm;

pub use ansatz::{build_he, build_ud, AnsatzSpec};
pub use circuit::{gate_cost, AngleExpr, Axis, Circuit, Gate};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use kernel::{EvalMode, FeatureMap, Kernel, KernelMatrix, QuantumKernel};
pub use statevector::{apply_gate, run, unitary_of, Statevector};
pub use svm::{SvmConfig, SvmModel};

pub type C64 = nalgebra::Complex<f64>;
