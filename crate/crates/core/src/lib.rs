//! Directed edge-Laplacian algebra, stability certificates for quantized
//! second-order consensus, and closed-loop simulation.
//!
//! The crate is organized around the pipeline used to certify and validate a
//! relative-measurement consensus protocol on a weighted digraph:
//!
//! 1. [`graph`]: digraph construction, edge-list parsing, and the
//!    quasi-strong connectivity check (existence of a directed spanning
//!    tree).
//! 2. [`decomposition`]: incidence algebra. Builds the incidence matrix `E`,
//!    the weighted in-incidence matrix, the graph and edge Laplacians, the
//!    tree/co-tree split with its cut-space and flow-space bases, and the
//!    essential edge Laplacian that governs the reduced tree dynamics.
//! 3. [`quantizer`]: uniform and logarithmic quantizers with their
//!    per-component error contracts.
//! 4. [`certify`]: the Lyapunov certificate. Solves a small Lyapunov
//!    equation, assembles the composite quadratic form, and exposes the
//!    certified gain threshold, stability margin, steady-state radius under
//!    uniform quantization, and exponential envelope under logarithmic
//!    quantization.
//! 5. [`dynamics`]: the closed-loop plant. Drift models, the quantized
//!    relative-feedback control law, a fixed-step RK4 integrator, and a
//!    finite-difference consistency check of the reduced tree dynamics.
//!
//! All matrices are dense (`nalgebra::DMatrix<f64>`); the sizes involved are
//! node and edge counts of engineered networks, not discretized PDEs. The
//! crate is `no_std`-compatible (with `alloc`) when built without the
//! default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub use nalgebra;

pub mod certify;
pub mod decomposition;
pub mod dynamics;
pub mod graph;
pub(crate) mod linalg;
pub mod quantizer;

pub use certify::{
    build_certificate, estimate_lipschitz, solve_lyapunov, CertifyError, Envelope,
    EnvelopeVariant, Infeasibility, LipschitzBounds, StabilityCertificate,
};
pub use decomposition::{decompose, EdgeDecomposition, SimilarityReport, SpectrumReport};
pub use dynamics::{
    control_input, reduced_rhs_check, simulate, ChuaParams, Drift, DriftModel, InitialState,
    RhsCheck, SimError, SimParams, Trajectory,
};
pub use graph::{parse_edge_list, Digraph, Edge, GraphError};
pub use quantizer::{QuantizerError, QuantizerSpec};
