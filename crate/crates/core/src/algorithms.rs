//! Approximate quantitative reachability and repeated reachability over any
//! effective chain.
//!
//! Both algorithms enumerate the reachability tree breadth first, carrying
//! exact rational path masses. Mass reaching the target (resp. the set from
//! which the target is almost-surely revisited) accumulates in `yes`; mass
//! reaching the avoid set accumulates in `no`. Once `yes + no >= 1 - eps`
//! the value `yes` satisfies `yes <= P <= yes + eps`.
//!
//! Termination at a fixed `eps` is guaranteed exactly when the chain is
//! decisive with respect to the relevant sets; for all other inputs the
//! mandatory expansion budget turns the run into a pair of valid lower and
//! upper bounds (`yes`, `1 - no`).
//!
//! Identical states in one depth layer are merged, summing their masses.
//! Identical states have identical futures, and cylinder-set measures add,
//! so per-depth `yes` / `no` equal those of the unmerged per-path queue at
//! an exponentially smaller frontier.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::chain::{EffectiveChain, QueryResult};
use crate::rational::Rational;

/// Unreduced path mass. The frontier kernel multiplies and merges masses
/// millions of times; skipping normalization there and reducing only when
/// mass is absorbed into an accumulator keeps the arithmetic linear in the
/// number size instead of paying a gcd per operation.
struct Mass {
    numer: BigInt,
    denom: BigInt,
}

impl Mass {
    fn one() -> Mass {
        Mass {
            numer: BigInt::from(1),
            denom: BigInt::from(1),
        }
    }

    fn times(&self, p: &Rational) -> Mass {
        Mass {
            numer: &self.numer * p.numer(),
            denom: &self.denom * p.denom(),
        }
    }

    fn add_assign(&mut self, other: Mass) {
        if self.denom == other.denom {
            self.numer += other.numer;
        } else {
            self.numer = &self.numer * &other.denom + &other.numer * &self.denom;
            self.denom *= &other.denom;
        }
    }

    fn reduced(&self) -> Rational {
        Rational::new(self.numer.clone(), self.denom.clone())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgorithmError {
    #[error("precision must be positive, got {eps}")]
    InvalidEpsilon { eps: Rational },
    #[error("the chain does not support membership queries for the doubly-unreachable set")]
    Avoid2Unsupported,
}

/// How a state is classified when popped from the frontier.
enum Class {
    Yes,
    No,
    Expand,
}

/// Per-depth snapshot of the accumulators, exposed for invariant checks and
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthStats {
    pub depth: usize,
    pub yes: Rational,
    pub no: Rational,
    /// Pending mass still in the frontier after this depth.
    pub frontier_mass: Rational,
    pub frontier_states: usize,
}

struct BreadthRun {
    yes: Rational,
    no: Rational,
    depth: usize,
    expansions: usize,
    exhausted: bool,
}

fn breadth_run<C: EffectiveChain>(
    chain: &C,
    mut classify: impl FnMut(&C::State) -> Class,
    eps: &Rational,
    budget: usize,
    max_depth: usize,
    mut per_depth: Option<&mut Vec<DepthStats>>,
) -> BreadthRun {
    let mut frontier: BTreeMap<C::State, Mass> = BTreeMap::new();
    frontier.insert(chain.initial(), Mass::one());
    let mut yes = Rational::zero();
    let mut no = Rational::zero();
    let mut expansions = 0usize;
    let mut depth = 0usize;
    let goal = Rational::one() - eps;

    loop {
        let mut next: BTreeMap<C::State, Mass> = BTreeMap::new();
        for (state, mass) in frontier {
            match classify(&state) {
                Class::Yes => yes += mass.reduced(),
                Class::No => no += mass.reduced(),
                Class::Expand => {
                    if expansions >= budget {
                        return BreadthRun {
                            yes,
                            no,
                            depth,
                            expansions,
                            exhausted: true,
                        };
                    }
                    expansions += 1;
                    for (succ, p) in chain.successors(&state).iter() {
                        let contribution = mass.times(p);
                        match next.entry(succ.clone()) {
                            std::collections::btree_map::Entry::Occupied(mut e) => {
                                e.get_mut().add_assign(contribution)
                            }
                            std::collections::btree_map::Entry::Vacant(v) => {
                                v.insert(contribution);
                            }
                        }
                    }
                }
            }
        }
        if let Some(stats) = per_depth.as_deref_mut() {
            let frontier_mass = next
                .values()
                .fold(Rational::zero(), |acc, m| acc + m.reduced());
            stats.push(DepthStats {
                depth,
                yes: yes.clone(),
                no: no.clone(),
                frontier_mass,
                frontier_states: next.len(),
            });
        }
        if &yes + &no >= goal || next.is_empty() {
            return BreadthRun {
                yes,
                no,
                depth,
                expansions,
                exhausted: false,
            };
        }
        if depth >= max_depth {
            return BreadthRun {
                yes,
                no,
                depth,
                expansions,
                exhausted: true,
            };
        }
        frontier = next;
        depth += 1;
    }
}

fn finish(run: BreadthRun, eps: &Rational) -> QueryResult {
    if run.exhausted && &run.yes + &run.no < Rational::one() - eps {
        QueryResult::BudgetExhausted {
            yes: run.yes,
            no: run.no,
            expansions: run.expansions,
        }
    } else {
        QueryResult::Approx {
            theta: run.yes.clone(),
            eps: eps.clone(),
            depth: run.depth,
            yes: run.yes,
            no: run.no,
            expansions: run.expansions,
        }
    }
}

fn check_eps(eps: &Rational) -> Result<(), AlgorithmError> {
    if eps <= &Rational::zero() {
        return Err(AlgorithmError::InvalidEpsilon { eps: eps.clone() });
    }
    Ok(())
}

/// Approximates `P(eventually reach F)` from the initial state of `chain`.
///
/// On success the returned `theta` satisfies `theta <= P <= theta + eps`.
/// If the budget runs out first, `yes` is a valid lower bound on `P` and
/// `1 - no` a valid upper bound.
pub fn approx_reach<C: EffectiveChain>(
    chain: &C,
    eps: &Rational,
    budget: usize,
) -> Result<QueryResult, AlgorithmError> {
    check_eps(eps)?;
    let run = breadth_run(
        chain,
        |s| {
            if chain.in_target(s) {
                Class::Yes
            } else if chain.in_avoid(s) {
                Class::No
            } else {
                Class::Expand
            }
        },
        eps,
        budget,
        usize::MAX,
        None,
    );
    Ok(finish(run, eps))
}

/// Approximates `P(reach F infinitely often)` from the initial state.
///
/// Mass entering the set from which the avoid set is unreachable (where
/// `F` is almost surely revisited forever) accumulates in `yes`; mass
/// entering the avoid set accumulates in `no`. Requires the chain to
/// support `in_avoid2`; fails with [`AlgorithmError::Avoid2Unsupported`]
/// otherwise.
pub fn approx_repeat_reach<C: EffectiveChain>(
    chain: &C,
    eps: &Rational,
    budget: usize,
) -> Result<QueryResult, AlgorithmError> {
    check_eps(eps)?;
    if chain.in_avoid2(&chain.initial()).is_none() {
        return Err(AlgorithmError::Avoid2Unsupported);
    }
    let mut unsupported = false;
    let run = breadth_run(
        chain,
        |s| match chain.in_avoid2(s) {
            Some(true) => Class::Yes,
            _ if chain.in_avoid(s) => Class::No,
            Some(false) => Class::Expand,
            None => {
                unsupported = true;
                Class::No
            }
        },
        eps,
        budget,
        usize::MAX,
        None,
    );
    if unsupported {
        return Err(AlgorithmError::Avoid2Unsupported);
    }
    Ok(finish(run, eps))
}

/// Runs the reachability enumeration for `max_depth` layers and reports the
/// per-depth accumulators. Used by invariant checks: for every depth `j`,
/// `yes_j <= P(eventually F) <= 1 - no_j`, and
/// `yes_j + no_j + frontier_mass_j = 1` exactly.
pub fn reach_depth_trace<C: EffectiveChain>(chain: &C, max_depth: usize) -> Vec<DepthStats> {
    let mut stats = Vec::new();
    // eps = 0 never triggers the early exit; the depth cutoff stops the run.
    breadth_run(
        chain,
        |s| {
            if chain.in_target(s) {
                Class::Yes
            } else if chain.in_avoid(s) {
                Class::No
            } else {
                Class::Expand
            }
        },
        &Rational::zero(),
        usize::MAX,
        max_depth,
        Some(&mut stats),
    );
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Distribution;
    use crate::gambler::Gambler;
    use crate::rational::{rat, rat_int};

    /// Chain whose initial state is already in the target.
    struct Instant;
    impl EffectiveChain for Instant {
        type State = u8;
        fn initial(&self) -> u8 {
            0
        }
        fn successors(&self, _: &u8) -> Distribution<u8> {
            Distribution::singleton(0)
        }
        fn in_target(&self, s: &u8) -> bool {
            *s == 0
        }
        fn in_avoid(&self, _: &u8) -> bool {
            false
        }
        fn in_avoid2(&self, s: &u8) -> Option<bool> {
            Some(*s == 0)
        }
    }

    #[test]
    fn initial_in_target_terminates_at_depth_zero() {
        let r = approx_reach(&Instant, &rat(1, 100), 10).unwrap();
        match r {
            QueryResult::Approx { theta, depth, .. } => {
                assert_eq!(theta, rat_int(1));
                assert_eq!(depth, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn initial_in_avoid2_terminates_at_depth_zero() {
        let r = approx_repeat_reach(&Instant, &rat(1, 100), 10).unwrap();
        match r {
            QueryResult::Approx { theta, depth, .. } => {
                assert_eq!(theta, rat_int(1));
                assert_eq!(depth, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_eps() {
        assert_eq!(
            approx_reach(&Instant, &rat_int(0), 10),
            Err(AlgorithmError::InvalidEpsilon { eps: rat_int(0) })
        );
    }

    #[test]
    fn repeat_requires_avoid2() {
        let chain = Gambler::new(rat(1, 3));
        assert_eq!(
            approx_repeat_reach(&chain, &rat(1, 10), 100),
            Err(AlgorithmError::Avoid2Unsupported)
        );
    }

    #[test]
    fn decisive_gambler_terminates() {
        // Down-biased gambler reaches 0 almost surely; theta in [0.99, 1].
        let chain = Gambler::new(rat(1, 3));
        let r = approx_reach(&chain, &rat(1, 100), 1_000_000).unwrap();
        match r {
            QueryResult::Approx { theta, depth, .. } => {
                assert!(theta >= rat(99, 100) && theta <= rat_int(1), "theta {theta}");
                assert!(depth <= 1000, "depth {depth}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_decisive_gambler_exhausts_budget_with_valid_bounds() {
        // Up-biased gambler: P(reach 0 from 1) = 1/2 but the avoid set is
        // empty, so no mass ever lands in `no` and the run cannot meet eps.
        let chain = Gambler::new(rat(2, 3));
        let r = approx_reach(&chain, &rat(1, 100), 3_000).unwrap();
        match r {
            QueryResult::BudgetExhausted { yes, no, .. } => {
                assert!(yes <= rat(1, 2), "yes {yes}");
                assert!(yes >= rat(2, 5), "yes {yes} too small for this budget");
                assert_eq!(no, rat_int(0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn depth_trace_conserves_mass() {
        let chain = Gambler::new(rat(1, 2));
        for stats in reach_depth_trace(&chain, 10) {
            let total = &stats.yes + &stats.no + &stats.frontier_mass;
            assert_eq!(total, rat_int(1), "mass leak at depth {}", stats.depth);
        }
    }

    #[test]
    fn yes_and_no_are_monotone() {
        let chain = Gambler::new(rat(1, 2));
        let trace = reach_depth_trace(&chain, 12);
        for pair in trace.windows(2) {
            assert!(pair[1].yes >= pair[0].yes);
            assert!(pair[1].no >= pair[0].no);
            assert!(&pair[1].yes + &pair[1].no <= rat_int(1));
        }
    }
}
