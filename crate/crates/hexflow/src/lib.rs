//! Probabilistic visual-motion estimation with temporal coherence.
//!
//! `hexflow` maintains, at every node of a periodic hexagonal lattice, a
//! probability distribution over a polar grid of velocity hypotheses, and
//! evolves those distributions through a predict-measure cycle:
//!
//! * **predict** - the distributions drift along their velocities and
//!   diffuse in position and velocity, either by an explicit Gaussian prior
//!   ([`prediction::predict_kernel`]) or by finite differences on the local
//!   forward equation ([`prediction::PdeEngine`]);
//! * **measure** - a frame of moving dots excites velocity-tuned cells
//!   ([`measurement::respond`]), whose activities enter a strictly positive
//!   likelihood ([`likelihood::evaluate`]) that can downweight but never
//!   veto a hypothesis;
//! * **estimate** - Bayes multiplication fuses the two
//!   ([`estimation::update`]), reporting per-node confidence and sharpness.
//!
//! The [`harness`] module packages the cycle into reproducible experiments
//! (dot tracking, occlusion, motion outliers, speed discrimination) behind a
//! plain-text configuration format and a command-line front end.
//!
//! ```
//! use hexflow::geometry::{build_hex_lattice, build_velocity_grid};
//! use hexflow::prediction::ProbabilityField;
//!
//! let lattice = build_hex_lattice(32, 32)?;
//! let vgrid = build_velocity_grid(6, 5, std::f64::consts::TAU / 6.0, 2.0, 2.0)?;
//! assert_eq!(lattice.n_nodes(), 1024);
//! assert_eq!(vgrid.n_channels(), 30);
//!
//! // Knowing nothing, every node holds the uniform distribution.
//! let field = ProbabilityField::uniform(lattice.n_nodes(), vgrid.n_channels());
//! assert!(field.max_normalization_error() < 1e-12);
//! # Ok::<(), hexflow::Error>(())
//! ```

pub mod error;
mod gauss;
pub mod geometry;

pub mod estimation;
pub mod harness;
pub mod likelihood;
pub mod measurement;
pub mod prediction;
pub mod stimuli;

pub use error::{Error, Result};
