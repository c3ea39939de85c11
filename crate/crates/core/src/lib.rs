//! Finite operational probabilistic theories.
//!
//! The crate provides the compositional calculus on tests, classical and
//! labeled-classical backends, coarse-graining and conditioning,
//! quotienting, ontological models with axiom checkers, a verifier for the
//! collapse of shared transformations, and a search for noncontextual models
//! of prepare-measure fragments.

pub mod backend;
pub mod calculus;
pub mod coarse;
pub mod conditioning;
pub mod error;
pub mod format;
pub mod lemma;
pub mod matrix;
pub mod ncsearch;
pub mod ontmodel;
pub mod quotient;
pub mod random;
pub mod rational;
pub mod report;

pub use backend::{Backend, GptFragment, Theory, TheoryKind};
pub use calculus::{
    braiding_test, compose_par, compose_seq, identity_test, interchange_check, scalar_test, sliding_check, Context,
    Event, Outcome, OutcomeSet, SystemRef, Test, TheoryId,
};
pub use error::{OptError, Result};
pub use matrix::Matrix;
pub use rational::Rational;
