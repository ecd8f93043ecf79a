//! Diffeomorphic image registration by optimal control relaxation.
//!
//! A template image `T` is deformed onto a reference `R` by a grid flow
//! `dω/dt = u(ω)/h(ω, t)`. At each time step an augmented-Lagrangian
//! iteration ([`almm`]) finds the control increment `u` under the constraint
//! `div u = -∂h/∂t`, the grid is advanced with RK4 ([`flow`]), and folded
//! cells are detected and repaired ([`meshq`]). [`engine::register`] drives
//! the whole loop.
//!
//! ```
//! use ocrdir::{engine, synth};
//!
//! let (t, r) = synth::gen_pair(synth::PairKind::TranslatedBlob, 32, 32, 0).unwrap();
//! let cfg = engine::Config { n_steps: 4, ..Default::default() };
//! let res = engine::register(&t, &r, &cfg).unwrap();
//! assert!(res.metrics.r_min > 0.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod almm;
pub mod emit;
pub mod engine;
pub mod error;
pub mod field;
pub mod flow;
pub mod homotopy;
pub mod io;
pub mod meshq;
pub mod metrics;
pub mod sampler;
pub mod synth;

pub use engine::{active_demons, register, Config, RegistrationResult};
pub use error::{Error, Result};
pub use field::{BoundaryKind, Deformation, GridSpec, ScalarField, VectorField};
pub use homotopy::CompositeKind;
pub use sampler::Image;
