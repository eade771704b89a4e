//! Analysis of infinite-state Markov chains induced by weighted counter
//! systems (PVASS), lossy channel systems (PLCS) and noisy Turing machines
//! (PNTM).
//!
//! The crate provides three layers:
//!
//! * model frontends ([`pvass`], [`plcs`], [`pntm`]) that turn a static model
//!   description into an effective Markov chain with exact rational
//!   transition probabilities and membership oracles for a target set `F`
//!   and its unreachable complement;
//! * generic engines: backward coverability over well-quasi-orders ([`wqo`])
//!   for the qualitative (probability one / zero) deciders, and breadth-first
//!   path-mass enumeration ([`algorithms`]) for approximate quantitative
//!   queries with certified `theta <= P <= theta + eps` bounds;
//! * an independent ground-truth layer ([`oracle`]) used by the test suite:
//!   finite truncations, exact rational absorption solves, bottom-SCC
//!   analysis and seeded Monte Carlo simulation.
//!
//! All probability arithmetic is exact ([`Rational`]); no floating point is
//! used anywhere on a decision path.

pub mod algorithms;
pub mod chain;
pub mod gambler;
pub mod minsky;
pub mod oracle;
pub mod parse;
pub mod plcs;
pub mod pntm;
pub mod pvass;
pub mod rational;
pub mod wqo;

pub use chain::{
    validate_chain_contract, CertificateKind, ContractReport, ContractViolation,
    DecisivenessCertificate, Distribution, EffectiveChain, QueryResult, TriBool,
};
pub use rational::{rat, rat_int, Rational};
