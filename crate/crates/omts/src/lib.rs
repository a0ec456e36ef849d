//! Finite open metric transition systems: a library and CLI for checking and
//! quantifying (τ, ε)-conformance, computing space-time approximate
//! simulation relations and simulation functions by exact fixed-point
//! iteration, building feedback interconnections, and mechanically verifying
//! small-gain compositionality certificates, with hybrid-time-domain label
//! metrics for sampled trajectories.
//!
//! All arithmetic is exact rational; every sup/inf uses the conventions
//! `inf ∅ = +inf` and `sup ∅ = -inf`.
//!
//! ```
//! use omts::metrics::MetricSuite;
//! use omts::model::{Label, OmtsBuilder};
//! use omts::rational::{Ext, Rational};
//! use omts::stas::{precision_from_v, smallest_sim_function};
//!
//! let step = Label::timed("a", Rational::one());
//! let nominal = OmtsBuilder::new()
//!     .state("p", vec![Rational::zero()], true)
//!     .arrow("p", step.clone(), "p", Label::Empty)
//!     .build();
//! let derived = OmtsBuilder::new()
//!     .state("q", vec![Rational::new(1, 2)], true)
//!     .arrow("q", step, "q", Label::Empty)
//!     .build();
//!
//! let suite = MetricSuite::default();
//! let v = smallest_sim_function(&nominal, &derived, &suite, &Rational::zero()).unwrap();
//! let precision = precision_from_v(&v, &nominal.initial, &derived.initial).unwrap();
//! assert_eq!(precision, Ext::Fin(Rational::new(1, 2)));
//! ```

pub mod cli;
pub mod composition;
pub mod conformance;
pub mod error;
pub mod gen;
pub mod hybrid;
pub mod metrics;
pub mod model;
pub mod rational;
pub mod stas;

pub use error::{Error, Result};
pub use metrics::MetricSuite;
pub use model::{DerivationRelation, Label, Omts, OutputPoint, Transition};
pub use rational::{Ext, Rational};
