//! The effective-Markov-chain interface shared by all model frontends,
//! together with the result and certificate types returned by queries.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hash;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::{pow, Rational};

/// A finite probability distribution over states.
///
/// Invariants (enforced by [`Distribution::try_new`] and the weighted
/// constructors): entries have distinct states, every probability is
/// strictly positive, and the probabilities sum to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution<S> {
    entries: Vec<(S, Rational)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistributionError {
    #[error("probabilities sum to {total} instead of 1")]
    SumNotOne { total: Rational },
    #[error("entry has non-positive probability {value}")]
    NonPositive { value: Rational },
    #[error("duplicate state in distribution entries")]
    DuplicateState,
    #[error("weighted distribution has zero total weight")]
    ZeroTotalWeight,
}

impl<S: Ord + Clone> Distribution<S> {
    /// Point distribution on a single state.
    pub fn singleton(state: S) -> Self {
        Distribution {
            entries: vec![(state, Rational::one())],
        }
    }

    /// Validates the distribution invariants and constructs the value.
    pub fn try_new(entries: Vec<(S, Rational)>) -> Result<Self, DistributionError> {
        let mut seen = BTreeMap::new();
        let mut total = Rational::zero();
        for (state, p) in &entries {
            if p <= &Rational::zero() {
                return Err(DistributionError::NonPositive { value: p.clone() });
            }
            if seen.insert(state.clone(), ()).is_some() {
                return Err(DistributionError::DuplicateState);
            }
            total += p;
        }
        if !total.is_one() {
            return Err(DistributionError::SumNotOne { total });
        }
        Ok(Distribution { entries })
    }

    /// Builds a distribution from unnormalized weights, merging duplicate
    /// states and dividing by the total weight.
    pub fn from_weighted(
        weighted: impl IntoIterator<Item = (S, Rational)>,
    ) -> Result<Self, DistributionError> {
        let mut merged: BTreeMap<S, Rational> = BTreeMap::new();
        for (state, w) in weighted {
            if w <= Rational::zero() {
                return Err(DistributionError::NonPositive { value: w });
            }
            *merged.entry(state).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = merged.values().fold(Rational::zero(), |acc, w| acc + w);
        if total.is_zero() {
            return Err(DistributionError::ZeroTotalWeight);
        }
        Ok(Distribution {
            entries: merged.into_iter().map(|(s, w)| (s, w / &total)).collect(),
        })
    }

    /// Constructs without validating. Callers must guarantee the invariants;
    /// intended for adapters that produce entries already in canonical form
    /// and for tests that deliberately build broken chains.
    pub fn from_entries_unchecked(entries: Vec<(S, Rational)>) -> Self {
        Distribution { entries }
    }

    pub fn entries(&self) -> &[(S, Rational)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &(S, Rational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact sum of all probabilities.
    pub fn total(&self) -> Rational {
        self.entries
            .iter()
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    /// Probability assigned to `state` (zero if absent).
    pub fn probability_of(&self, state: &S) -> Rational
    where
        S: PartialEq,
    {
        self.entries
            .iter()
            .find(|(s, _)| s == state)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }
}

/// An effective Markov chain: a (possibly infinite) chain whose successor
/// distributions can be enumerated and whose target set `F` and
/// unreachable set (the states from which `F` cannot be reached) have
/// decidable membership.
///
/// `in_avoid2` additionally decides membership in the unreachable set of the
/// unreachable set of `F`. Models for which this is not computable return
/// `None`; callers must treat that as unsupported rather than as `false`.
pub trait EffectiveChain {
    type State: Clone + Eq + Ord + Hash + fmt::Debug;

    /// The designated initial state.
    fn initial(&self) -> Self::State;

    /// One-step successor distribution. Must be finitely branching and
    /// deterministic: the same input always yields the same output.
    fn successors(&self, state: &Self::State) -> Distribution<Self::State>;

    /// Membership in the target set `F`.
    fn in_target(&self, state: &Self::State) -> bool;

    /// Membership in the set of states from which `F` is unreachable.
    fn in_avoid(&self, state: &Self::State) -> bool;

    /// Membership in the set of states from which `in_avoid` states are
    /// unreachable, or `None` when the model cannot decide this.
    fn in_avoid2(&self, _state: &Self::State) -> Option<bool> {
        None
    }
}

/// Verdict of a qualitative (probability one / probability zero) decider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriBool {
    Holds,
    Fails,
    Unknown(String),
}

impl TriBool {
    /// Swaps `Holds` and `Fails`, preserving `Unknown`.
    pub fn negate(self) -> TriBool {
        match self {
            TriBool::Holds => TriBool::Fails,
            TriBool::Fails => TriBool::Holds,
            unknown => unknown,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, TriBool::Unknown(_))
    }
}

impl fmt::Display for TriBool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriBool::Holds => write!(f, "holds"),
            TriBool::Fails => write!(f, "fails"),
            TriBool::Unknown(reason) => write!(f, "unknown ({reason})"),
        }
    }
}

/// Result of a query against a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    /// Outcome of a qualitative decider.
    Qualitative { verdict: TriBool },
    /// Successful approximation: `theta <= P <= theta + eps`, with
    /// `theta = yes` and `yes + no >= 1 - eps`.
    Approx {
        theta: Rational,
        eps: Rational,
        depth: usize,
        yes: Rational,
        no: Rational,
        expansions: usize,
    },
    /// The expansion budget ran out first. `yes` is still a valid lower
    /// bound on the probability and `1 - no` a valid upper bound.
    BudgetExhausted {
        yes: Rational,
        no: Rational,
        expansions: usize,
    },
}

/// Evidence that a chain is decisive with respect to a target set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateKind {
    /// The chain almost surely keeps returning to a finite set of states;
    /// `note` describes that set.
    FiniteAttractor { note: String },
    /// The chain is coarse (every nonzero transition probability is at
    /// least `beta`) and finitely spanning (every state that can reach the
    /// target does so within `span` steps), hence reaches the target from
    /// any non-avoid state with probability at least `alpha = beta^span`.
    GloballyCoarse {
        beta: Rational,
        span: usize,
        alpha: Rational,
    },
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisivenessCertificate {
    pub kind: CertificateKind,
    /// Human-readable description of the target set the certificate is for.
    pub target: String,
}

impl DecisivenessCertificate {
    /// Builds a globally-coarse certificate, computing `alpha = beta^span`.
    /// Panics if `beta` is outside `(0, 1]`.
    pub fn globally_coarse(beta: Rational, span: usize, target: String) -> Self {
        assert!(
            beta > Rational::zero() && beta <= Rational::one(),
            "coarseness must lie in (0, 1], got {beta}"
        );
        let alpha = pow(&beta, span);
        DecisivenessCertificate {
            kind: CertificateKind::GloballyCoarse { beta, span, alpha },
            target,
        }
    }

    pub fn finite_attractor(note: String, target: String) -> Self {
        DecisivenessCertificate {
            kind: CertificateKind::FiniteAttractor { note },
            target,
        }
    }
}

/// A single contract violation found by [`validate_chain_contract`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractViolation {
    /// Debug rendering of the offending state.
    pub state: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Successor probabilities do not sum to 1.
    SumNotOne { total: Rational },
    /// A successor entry has probability `<= 0`.
    NonPositiveProbability { value: Rational },
    /// The state is flagged as both target and avoid.
    TargetAvoidOverlap,
    /// `in_avoid2` claims true while `in_avoid` also holds.
    Avoid2Inconsistent,
}

impl fmt::Display for ContractViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::SumNotOne { total } => {
                write!(f, "state {}: successor mass {} != 1", self.state, total)
            }
            ViolationKind::NonPositiveProbability { value } => {
                write!(f, "state {}: non-positive probability {}", self.state, value)
            }
            ViolationKind::TargetAvoidOverlap => {
                write!(f, "state {}: in_target and in_avoid overlap", self.state)
            }
            ViolationKind::Avoid2Inconsistent => {
                write!(f, "state {}: in_avoid2 true but state is in_avoid", self.state)
            }
        }
    }
}

/// Per-state report of [`validate_chain_contract`].
#[derive(Debug, Clone, Default)]
pub struct ContractReport {
    pub states_checked: usize,
    pub violations: Vec<ContractViolation>,
}

impl ContractReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the effective-chain contract on a sample of states: successor
/// distributions sum to exactly 1 with positive entries, `in_target` and
/// `in_avoid` are disjoint, and `in_avoid2` never contradicts `in_avoid`.
/// Violations are data in the report, not errors.
pub fn validate_chain_contract<C: EffectiveChain>(
    chain: &C,
    samples: &[C::State],
) -> ContractReport {
    let mut report = ContractReport::default();
    for state in samples {
        report.states_checked += 1;
        let name = format!("{state:?}");
        let dist = chain.successors(state);
        for (_, p) in dist.iter() {
            if p <= &Rational::zero() {
                report.violations.push(ContractViolation {
                    state: name.clone(),
                    kind: ViolationKind::NonPositiveProbability { value: p.clone() },
                });
            }
        }
        let total = dist.total();
        if !total.is_one() {
            report.violations.push(ContractViolation {
                state: name.clone(),
                kind: ViolationKind::SumNotOne { total },
            });
        }
        if chain.in_target(state) && chain.in_avoid(state) {
            report.violations.push(ContractViolation {
                state: name.clone(),
                kind: ViolationKind::TargetAvoidOverlap,
            });
        }
        if chain.in_avoid2(state) == Some(true) && chain.in_avoid(state) {
            report.violations.push(ContractViolation {
                state: name,
                kind: ViolationKind::Avoid2Inconsistent,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gambler::Gambler;
    use crate::rational::rat;

    #[test]
    fn distribution_rejects_bad_inputs() {
        assert_eq!(
            Distribution::try_new(vec![(0u32, rat(1, 2)), (1, rat(1, 4))]),
            Err(DistributionError::SumNotOne { total: rat(3, 4) })
        );
        assert_eq!(
            Distribution::try_new(vec![(0u32, rat(0, 1)), (1, rat(1, 1))]),
            Err(DistributionError::NonPositive { value: rat(0, 1) })
        );
        assert_eq!(
            Distribution::try_new(vec![(0u32, rat(1, 2)), (0, rat(1, 2))]),
            Err(DistributionError::DuplicateState)
        );
    }

    #[test]
    fn weighted_constructor_merges_and_normalizes() {
        // Two transitions with equal effect merge into a single entry.
        let d = Distribution::from_weighted(vec![
            (7u32, rat(1, 1)),
            (7, rat(1, 1)),
        ])
        .unwrap();
        assert_eq!(d.entries(), &[(7, rat(1, 1))]);

        let d = Distribution::from_weighted(vec![(0u32, rat(2, 1)), (1, rat(1, 1))]).unwrap();
        assert_eq!(d.probability_of(&0), rat(2, 3));
        assert_eq!(d.probability_of(&1), rat(1, 3));
        assert!(d.total().is_one());
    }

    /// A deliberately broken chain: successors leak probability mass.
    struct Leaky;

    impl EffectiveChain for Leaky {
        type State = u32;
        fn initial(&self) -> u32 {
            0
        }
        fn successors(&self, _s: &u32) -> Distribution<u32> {
            Distribution::from_entries_unchecked(vec![(0, rat(9, 10))])
        }
        fn in_target(&self, s: &u32) -> bool {
            *s == 1
        }
        fn in_avoid(&self, _s: &u32) -> bool {
            false
        }
    }

    #[test]
    fn contract_flags_leaky_chain() {
        let report = validate_chain_contract(&Leaky, &[0]);
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0].kind {
            ViolationKind::SumNotOne { total } => assert_eq!(total, &rat(9, 10)),
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn contract_clean_on_gambler() {
        // Gambler at state 1 with up-probability 2/3: successors 2 and 0
        // with probabilities 2/3 and 1/3; all checks pass.
        let chain = Gambler::new(rat(2, 3));
        let d = chain.successors(&1);
        assert_eq!(d.probability_of(&2), rat(2, 3));
        assert_eq!(d.probability_of(&0), rat(1, 3));
        let report = validate_chain_contract(&chain, &[0, 1, 2, 3, 10]);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn certificate_alpha_is_beta_pow_span() {
        let cert = DecisivenessCertificate::globally_coarse(rat(1, 3), 2, "demo".into());
        match cert.kind {
            CertificateKind::GloballyCoarse { alpha, .. } => assert_eq!(alpha, rat(1, 9)),
            _ => unreachable!(),
        }
    }
}
