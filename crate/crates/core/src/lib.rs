//! Quantum-latent convolutional autoencoder: statevector simulation, circuit
//! ansätze, parameter-shift gradients, a small CNN toolkit, MNIST I/O and SSIM.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom fix the scalar for common use.

pub mod ansatz;
pub mod data;
mod error;
pub mod gradient;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod quantum;
mod scalar;

pub use ansatz::{BoundCircuit, CircuitFamily, CircuitTemplate, ParameterSlot, SlotGate, SlotRole};
pub use data::{MnistSet, NoiseSpec};
pub use error::{Error, Result};
pub use gradient::{psr_gradient, CircuitEvaluator, PsrResult, QuantumJacobian, ShiftEvaluation};
pub use metrics::{mean_ssim, ssim, RunRecord, SsimConfig, SsimWindow};
pub use model::{train, Autoencoder, DenoisingSet, ModelKind, ModelSpec, QuantumSpec, TrainConfig};
pub use nn::{Adam, AdamConfig, LayerSpec, Sequential, Tensor};
pub use quantum::{GateKind, GateOp, NoiseChannel, Simulator, StateVector, MAX_QUBITS};
pub use scalar::Real;

pub type StateVector64 = StateVector<f64>;
pub type StateVector32 = StateVector<f32>;
pub type Simulator64 = Simulator<f64>;
pub type Simulator32 = Simulator<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type Autoencoder64 = Autoencoder<f64>;
pub type Autoencoder32 = Autoencoder<f32>;
