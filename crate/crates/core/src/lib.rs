//! Part probabilistic cloning and part unambiguous discrimination of
//! linearly dependent pure states.
//!
//! A set of pure states that is linearly dependent cannot be cloned
//! probabilistically as a whole. Some of its members still can: exactly those
//! in the maximal independent subset that no dependent state's expansion uses.
//! This crate
//!
//! - partitions a state set into clonable, blocked and dependent states
//!   ([`stateset`]),
//! - decides and maximizes cloning efficiencies through positive
//!   semidefiniteness of `X⁽¹⁾ − √Γ X_z⁽ᴺ⁾ √Γ` ([`feasibility`]),
//! - synthesizes and simulates the cloning map ([`synthesis`]) and the
//!   analogous unambiguous discriminator ([`discrimination`]),
//! - and exposes all of it through the `pqclone` command-line tool ([`cli`]).
//!
//! ```
//! use pqclone::{feasibility, instances, stateset};
//!
//! let set = instances::four_state();
//! let part = stateset::analyze(&set).unwrap();
//! assert_eq!(part.clonable, vec![0]);
//!
//! let pgram = feasibility::PGram::identity(part.m());
//! let (t_star, _) = feasibility::max_uniform_efficiency(&set, &part, &pgram, 2).unwrap();
//! assert!((t_star - 1.0 / 3.0).abs() < 1e-9);
//! ```

pub mod cli;
pub mod discrimination;
pub mod error;
pub mod feasibility;
pub mod instances;
pub mod matrixkit;
pub mod stateset;
pub mod synthesis;

pub use error::{Error, Result};
pub use matrixkit::CMatrix;
pub use num_complex::Complex64;
pub use stateset::{Partition, QState, StateSet};
