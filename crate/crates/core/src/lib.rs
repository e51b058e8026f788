//! Simulation and capacity optimization for dense coding with a coherently
//! routed sender.
//!
//! A control quantum system superposes M single-receiver dense coding
//! processes, so the sender's qubit is encoded and routed to M labs at once;
//! post-selecting the uniform control outcome leaves the labs holding a
//! superposed encoded ensemble. This crate builds those ensembles on dense
//! density matrices and numerically maximizes the resulting classical
//! capacities under global and one-way-LOCC decoding.
//!
//! Module map:
//! - [`linalg`]: complex matrices, register layouts, Kronecker/embed/SWAP,
//!   partial traces and Hermitian spectra.
//! - [`states`]: GHZ, maximally mixed, separable mixed and product inputs.
//! - [`encoding`]: single-qubit and KAK-parameterized unitaries, the
//!   shift-and-multiply basis, softmax probabilities.
//! - [`routing`]: the multiplexed unitary, post-selected routing, encoded
//!   ensembles.
//! - [`information`]: entropies, Holevo quantities, dense-coding capacities,
//!   LOCC bounds and one-way-LOCC mutual information.
//! - [`capacity`]: multi-restart optimizers, figures of merit, theta sweeps.

pub mod capacity;
pub mod encoding;
pub mod error;
pub mod information;
pub mod linalg;
pub mod optim;
pub mod routing;
pub mod states;

pub use error::{Error, Result};
