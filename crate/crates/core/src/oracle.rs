//! Independent ground-truth engines used by the test suite: finite
//! truncations of effective chains, exact rational absorption solves,
//! bottom-SCC classification for repeated reachability, and seeded Monte
//! Carlo simulation.
//!
//! The oracle's contract is interval-valued: truncation error is made
//! explicit as the probability mass absorbed by an overflow sink, and every
//! exact solve returns `(lower, upper)` with
//! `lower <= true value <= upper`. For chains enumerated without overflow
//! the two bounds coincide.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::EffectiveChain;
use crate::rational::{to_f64, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("truncation exceeded the state limit of {limit}")]
    LimitExceeded { limit: usize },
    #[error("absorption system is singular; the chain rows are malformed")]
    SingularSystem,
}

/// An explicit finite Markov chain with exact rational rows.
///
/// `overflow`, when present, is an absorbing sink that collects the
/// probability mass of truncated-away successors; it is excluded from
/// target sets and from bottom-SCC classification, and its absorption mass
/// is exactly the width of the oracle's answer intervals.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    rows: Vec<Vec<(usize, Rational)>>,
    target: Vec<bool>,
    avoid: Vec<bool>,
    initial: usize,
    overflow: Option<usize>,
}

impl FiniteChain {
    /// Builds a chain from explicit rows. Every row must sum to exactly 1.
    pub fn new(
        rows: Vec<Vec<(usize, Rational)>>,
        target: Vec<bool>,
        avoid: Vec<bool>,
        initial: usize,
        overflow: Option<usize>,
    ) -> Result<Self, OracleError> {
        let n = rows.len();
        assert_eq!(target.len(), n);
        assert_eq!(avoid.len(), n);
        assert!(initial < n);
        for row in &rows {
            let total: Rational = row.iter().fold(Rational::zero(), |acc, (j, p)| {
                assert!(*j < n, "successor index out of range");
                acc + p
            });
            if !total.is_one() {
                return Err(OracleError::SingularSystem);
            }
        }
        if let Some(o) = overflow {
            assert!(rows[o].len() == 1 && rows[o][0].0 == o, "overflow must be absorbing");
        }
        Ok(FiniteChain {
            rows,
            target,
            avoid,
            initial,
            overflow,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn overflow(&self) -> Option<usize> {
        self.overflow
    }

    pub fn target_flags(&self) -> &[bool] {
        &self.target
    }

    pub fn avoid_flags(&self) -> &[bool] {
        &self.avoid
    }

    pub fn row(&self, i: usize) -> &[(usize, Rational)] {
        &self.rows[i]
    }

    /// States from which no state flagged in `of` is reachable.
    pub fn unreachable_flags(&self, of: &[bool]) -> Vec<bool> {
        let n = self.rows.len();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, _) in row {
                preds[*j].push(i);
            }
        }
        let mut reach = of.to_vec();
        let mut stack: Vec<usize> = (0..n).filter(|&i| of[i]).collect();
        while let Some(v) = stack.pop() {
            for &p in &preds[v] {
                if !reach[p] {
                    reach[p] = true;
                    stack.push(p);
                }
            }
        }
        reach.iter().map(|r| !r).collect()
    }
}

/// Result of truncating an effective chain: the finite chain plus the
/// enumerated states in index order.
pub struct Truncated<S> {
    pub chain: FiniteChain,
    pub states: Vec<S>,
}

/// Enumerates the states of `chain` reachable within `in_bounds` by BFS,
/// up to `state_limit` states. Successor mass leaving the bounds is
/// redirected to an absorbing overflow sink; target and avoid flags are
/// copied from the chain's oracles. Fails if the in-bounds set itself
/// exceeds the limit.
pub fn truncate<C: EffectiveChain>(
    chain: &C,
    in_bounds: impl Fn(&C::State) -> bool,
    state_limit: usize,
) -> Result<Truncated<C::State>, OracleError> {
    let init = chain.initial();
    assert!(in_bounds(&init), "initial state must be in bounds");
    let mut index: BTreeMap<C::State, usize> = BTreeMap::new();
    let mut states = vec![init.clone()];
    index.insert(init, 0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut rows: Vec<Vec<(usize, Rational)>> = Vec::new();
    let mut overflow_used = false;

    // Successor index resolution; overflow gets its slot after enumeration.
    let mut raw_rows: Vec<Vec<(Option<usize>, Rational)>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let state = states[i].clone();
        let mut row = Vec::new();
        for (succ, p) in chain.successors(&state).iter() {
            if in_bounds(succ) {
                let j = match index.get(succ) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= state_limit {
                            return Err(OracleError::LimitExceeded { limit: state_limit });
                        }
                        let j = states.len();
                        states.push(succ.clone());
                        index.insert(succ.clone(), j);
                        queue.push_back(j);
                        j
                    }
                };
                row.push((Some(j), p.clone()));
            } else {
                overflow_used = true;
                row.push((None, p.clone()));
            }
        }
        raw_rows.push(row);
        debug_assert_eq!(raw_rows.len(), i + 1);
    }

    let n = states.len();
    let overflow = if overflow_used { Some(n) } else { None };
    for raw in raw_rows {
        let mut row: Vec<(usize, Rational)> = Vec::new();
        let mut overflow_mass = Rational::zero();
        for (j, p) in raw {
            match j {
                Some(j) => row.push((j, p)),
                None => overflow_mass += p,
            }
        }
        if !overflow_mass.is_zero() {
            row.push((n, overflow_mass));
        }
        rows.push(row);
    }
    let mut target: Vec<bool> = states.iter().map(|s| chain.in_target(s)).collect();
    let mut avoid: Vec<bool> = states.iter().map(|s| chain.in_avoid(s)).collect();
    if overflow.is_some() {
        rows.push(vec![(n, Rational::one())]);
        target.push(false);
        avoid.push(false);
    }
    let chain = FiniteChain::new(rows, target, avoid, 0, overflow)?;
    Ok(Truncated { chain, states })
}

/// Solves `A x = b` by Gaussian elimination over the rationals. Pivots on
/// the entry of smallest bit size to keep intermediate values small.
fn solve_linear(
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
) -> Result<Vec<Rational>, OracleError> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[perm[r]][col].is_zero())
            .min_by_key(|&r| {
                let v = &a[perm[r]][col];
                v.numer().bits() + v.denom().bits()
            })
            .ok_or(OracleError::SingularSystem)?;
        perm.swap(col, pivot);
        let prow = perm[col];
        let pivot_val = a[prow][col].clone();
        for r in col + 1..n {
            let row = perm[r];
            if a[row][col].is_zero() {
                continue;
            }
            let factor = &a[row][col] / &pivot_val;
            for c in col..n {
                let delta = &factor * &a[prow][c];
                a[row][c] -= delta;
            }
            let delta = &factor * &b[prow];
            b[row] -= delta;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for col in (0..n).rev() {
        let row = perm[col];
        let mut acc = b[row].clone();
        for c in col + 1..n {
            acc -= &a[row][c] * &x[c];
        }
        x[col] = acc / &a[row][col];
    }
    Ok(x)
}

/// Exact probability, per state, of eventually reaching a state flagged in
/// `flags`. States from which the flagged set is unreachable get exactly 0;
/// the remaining transient system is solved exactly.
pub fn reach_probabilities(
    fc: &FiniteChain,
    flags: &[bool],
) -> Result<Vec<Rational>, OracleError> {
    let n = fc.len();
    assert_eq!(flags.len(), n);
    let cannot = fc.unreachable_flags(flags);
    let interior: Vec<usize> = (0..n).filter(|&i| !flags[i] && !cannot[i]).collect();
    let pos: BTreeMap<usize, usize> = interior.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let m = interior.len();
    let mut a = vec![vec![Rational::zero(); m]; m];
    let mut b = vec![Rational::zero(); m];
    for (k, &i) in interior.iter().enumerate() {
        a[k][k] = Rational::one();
        for (j, p) in fc.row(i) {
            if flags[*j] {
                b[k] += p;
            } else if let Some(&kj) = pos.get(j) {
                a[k][kj] -= p;
            }
        }
    }
    let x = solve_linear(a, b)?;
    let mut out = vec![Rational::zero(); n];
    for i in 0..n {
        if flags[i] {
            out[i] = Rational::one();
        } else if let Some(&k) = pos.get(&i) {
            out[i] = x[k].clone();
        }
    }
    Ok(out)
}

/// Exact bracket on the infinite-chain probability of reaching the target:
/// `lower` treats overflow as absorbing non-target, `upper` adds the
/// overflow absorption mass. `lower <= P <= upper`.
pub fn exact_reach_prob(
    fc: &FiniteChain,
    target: &[bool],
) -> Result<(Rational, Rational), OracleError> {
    let lower = reach_probabilities(fc, target)?[fc.initial()].clone();
    let upper = match fc.overflow() {
        Some(o) => {
            let mut of = vec![false; fc.len()];
            of[o] = true;
            let escape = reach_probabilities(fc, &of)?[fc.initial()].clone();
            &lower + &escape
        }
        None => lower.clone(),
    };
    Ok((lower, upper))
}

/// Strongly connected components by Kosaraju's algorithm (iterative).
fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // Iterative post-order DFS.
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (v, row) in adj.iter().enumerate() {
        for &w in row {
            radj[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![start];
        comp[start] = id;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &radj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        comps.push(members);
    }
    comps
}

/// States belonging to a bottom SCC (no edge leaves the component).
/// The overflow sink, when present, is excluded.
pub fn bottom_scc_states(fc: &FiniteChain) -> Vec<bool> {
    let n = fc.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| fc.row(i).iter().map(|(j, _)| *j).collect())
        .collect();
    let comps = strongly_connected_components(&adj);
    let mut comp_of = vec![0usize; n];
    for (id, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = id;
        }
    }
    let mut bottom = vec![true; comps.len()];
    for (v, row) in adj.iter().enumerate() {
        for &w in row {
            if comp_of[w] != comp_of[v] {
                bottom[comp_of[v]] = false;
            }
        }
    }
    let mut out = vec![false; n];
    for (id, members) in comps.iter().enumerate() {
        if bottom[id] {
            for &v in members {
                out[v] = true;
            }
        }
    }
    if let Some(o) = fc.overflow() {
        out[o] = false;
    }
    out
}

/// Exact bracket on the probability of visiting the target infinitely
/// often: the probability of reaching a bottom SCC that intersects the
/// target. Inside a bottom SCC of a finite chain, every state of the SCC is
/// almost surely visited infinitely often, so the event holds with
/// probability one there and zero in target-free bottom SCCs.
pub fn exact_repeat_reach_prob(
    fc: &FiniteChain,
    target: &[bool],
) -> Result<(Rational, Rational), OracleError> {
    let n = fc.len();
    let bottom = bottom_scc_states(fc);
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| fc.row(i).iter().map(|(j, _)| *j).collect())
        .collect();
    let mut good = vec![false; n];
    for members in strongly_connected_components(&adj) {
        if members.iter().all(|&v| bottom[v]) && members.iter().any(|&v| target[v]) {
            for v in members {
                good[v] = true;
            }
        }
    }
    let lower = reach_probabilities(fc, &good)?[fc.initial()].clone();
    let upper = match fc.overflow() {
        Some(o) => {
            let mut of = vec![false; n];
            of[o] = true;
            let escape = reach_probabilities(fc, &of)?[fc.initial()].clone();
            &lower + &escape
        }
        None => lower.clone(),
    };
    Ok((lower, upper))
}

/// Monte Carlo estimate with a 95% Wilson score interval.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Estimates `P(reach the target within `horizon` steps)` by `trials`
/// independent runs. Runs stop early in avoid states (the target can no
/// longer be reached). Fully reproducible given `(seed, trials, horizon)`:
/// trial `i` uses the ChaCha8 generator seeded with `seed` on stream `i`.
pub fn monte_carlo<C: EffectiveChain>(
    chain: &C,
    horizon: usize,
    trials: u64,
    seed: u64,
) -> McEstimate {
    assert!(trials >= 1);
    let mut hits = 0u64;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut state = chain.initial();
        let mut hit = chain.in_target(&state);
        let mut steps = 0;
        while !hit && steps < horizon && !chain.in_avoid(&state) {
            let dist = chain.successors(&state);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = None;
            for (succ, p) in dist.iter() {
                acc += to_f64(p);
                if u < acc {
                    chosen = Some(succ.clone());
                    break;
                }
            }
            state = chosen.unwrap_or_else(|| {
                dist.entries()
                    .last()
                    .map(|(s, _)| s.clone())
                    .expect("nonempty distribution")
            });
            hit = chain.in_target(&state);
            steps += 1;
        }
        if hit {
            hits += 1;
        }
    }
    let (lo, hi) = wilson_interval(hits, trials);
    McEstimate {
        hits,
        trials,
        estimate: hits as f64 / trials as f64,
        wilson_low: lo,
        wilson_high: hi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Distribution;
    use crate::gambler::Gambler;
    use crate::rational::{rat, rat_int};

    fn coin_chain() -> FiniteChain {
        // 0 -> {1: 1/2, 2: 1/2}; 1 target absorbing; 2 absorbing.
        FiniteChain::new(
            vec![
                vec![(1, rat(1, 2)), (2, rat(1, 2))],
                vec![(1, rat_int(1))],
                vec![(2, rat_int(1))],
            ],
            vec![false, true, false],
            vec![false, false, true],
            0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn truncate_finite_chain_is_faithful() {
        // A two-state chain embedded as an effective chain; bounds cover
        // everything, so the copy is exact and no overflow appears.
        struct TwoState;
        impl EffectiveChain for TwoState {
            type State = u8;
            fn initial(&self) -> u8 {
                0
            }
            fn successors(&self, s: &u8) -> Distribution<u8> {
                match s {
                    0 => Distribution::try_new(vec![(0, rat(1, 3)), (1, rat(2, 3))]).unwrap(),
                    _ => Distribution::singleton(1),
                }
            }
            fn in_target(&self, s: &u8) -> bool {
                *s == 1
            }
            fn in_avoid(&self, _: &u8) -> bool {
                false
            }
        }
        let t = truncate(&TwoState, |_| true, 100).unwrap();
        assert_eq!(t.chain.len(), 2);
        assert!(t.chain.overflow().is_none());
        let (lo, hi) = exact_reach_prob(&t.chain, t.chain.target_flags()).unwrap();
        assert_eq!(lo, rat_int(1));
        assert_eq!(hi, rat_int(1));
    }

    #[test]
    fn truncate_gambler_bound_ten() {
        let chain = Gambler::new(rat(1, 2));
        let t = truncate(&chain, |s| *s <= 10, 1000).unwrap();
        // 0..=10 plus the overflow sink.
        assert_eq!(t.chain.len(), 12);
        assert!(t.chain.overflow().is_some());
    }

    #[test]
    fn exact_reach_trivial_and_coin() {
        let fc = coin_chain();
        let mut init_is_target = vec![false; 3];
        init_is_target[0] = true;
        assert_eq!(
            exact_reach_prob(&fc, &init_is_target).unwrap(),
            (rat_int(1), rat_int(1))
        );
        assert_eq!(
            exact_reach_prob(&fc, fc.target_flags()).unwrap(),
            (rat(1, 2), rat(1, 2))
        );
    }

    #[test]
    fn gambler_up_biased_brackets_one_half() {
        // Closed form: P(reach 0 from 1) = (1-x)/x = 1/2 for x = 2/3.
        let chain = Gambler::new(rat(2, 3));
        let t = truncate(&chain, |s| *s <= 40, 10_000).unwrap();
        let (lo, hi) = exact_reach_prob(&t.chain, t.chain.target_flags()).unwrap();
        assert!(lo <= rat(1, 2) && rat(1, 2) <= hi);
        assert!(rat(1, 2) - &lo < rat(1, 1000), "lower bound {lo} too loose");
    }

    #[test]
    fn repeat_reach_cases() {
        // Irreducible two-cycle with a target: repeat-reach probability 1.
        let fc = FiniteChain::new(
            vec![vec![(1, rat_int(1))], vec![(0, rat_int(1))]],
            vec![true, false],
            vec![false, false],
            0,
            None,
        )
        .unwrap();
        assert_eq!(
            exact_repeat_reach_prob(&fc, fc.target_flags()).unwrap(),
            (rat_int(1), rat_int(1))
        );

        // Target only in a transient state: probability 0.
        let fc = FiniteChain::new(
            vec![vec![(1, rat_int(1))], vec![(1, rat_int(1))]],
            vec![true, false],
            vec![false, false],
            0,
            None,
        )
        .unwrap();
        assert_eq!(
            exact_repeat_reach_prob(&fc, fc.target_flags()).unwrap(),
            (rat_int(0), rat_int(0))
        );

        // Branch into two absorbing states, only one of them a target.
        let fc = FiniteChain::new(
            vec![
                vec![(1, rat(1, 3)), (2, rat(2, 3))],
                vec![(1, rat_int(1))],
                vec![(2, rat_int(1))],
            ],
            vec![false, true, false],
            vec![false, false, true],
            0,
            None,
        )
        .unwrap();
        assert_eq!(
            exact_repeat_reach_prob(&fc, fc.target_flags()).unwrap(),
            (rat(1, 3), rat(1, 3))
        );
    }

    #[test]
    fn monte_carlo_cases() {
        // Event true at the initial state.
        struct Done;
        impl EffectiveChain for Done {
            type State = u8;
            fn initial(&self) -> u8 {
                0
            }
            fn successors(&self, _: &u8) -> Distribution<u8> {
                Distribution::singleton(0)
            }
            fn in_target(&self, _: &u8) -> bool {
                true
            }
            fn in_avoid(&self, _: &u8) -> bool {
                false
            }
        }
        let est = monte_carlo(&Done, 10, 100, 7);
        assert_eq!(est.hits, 100);
        assert_eq!(est.wilson_high, 1.0);

        // Fair one-step coin: interval contains 1/2 at n = 10^4.
        struct Coin;
        impl EffectiveChain for Coin {
            type State = u8;
            fn initial(&self) -> u8 {
                0
            }
            fn successors(&self, s: &u8) -> Distribution<u8> {
                match s {
                    0 => Distribution::try_new(vec![(1, rat(1, 2)), (2, rat(1, 2))]).unwrap(),
                    s => Distribution::singleton(*s),
                }
            }
            fn in_target(&self, s: &u8) -> bool {
                *s == 1
            }
            fn in_avoid(&self, s: &u8) -> bool {
                *s == 2
            }
        }
        let est = monte_carlo(&Coin, 5, 10_000, 42);
        assert!(est.wilson_low <= 0.5 && 0.5 <= est.wilson_high);

        // Down-biased gambler reaches 0 almost surely within horizon 1000.
        let chain = Gambler::new(rat(1, 3));
        let est = monte_carlo(&chain, 1000, 10_000, 11);
        assert!(est.wilson_low <= 1.0 && est.wilson_high >= 1.0 - 1e-9);
        // Reproducibility.
        let again = monte_carlo(&chain, 1000, 10_000, 11);
        assert_eq!(est, again);
    }

    #[test]
    fn repeat_equals_one_minus_reach_of_avoid_without_overflow() {
        let fc = coin_chain();
        let avoid = fc.unreachable_flags(fc.target_flags());
        let (repeat_lo, repeat_hi) = exact_repeat_reach_prob(&fc, fc.target_flags()).unwrap();
        let (avoid_lo, _) = exact_reach_prob(&fc, &avoid).unwrap();
        assert_eq!(repeat_lo, repeat_hi);
        assert_eq!(repeat_lo, rat_int(1) - avoid_lo);
    }

    #[test]
    fn monotone_refinement_of_bounds() {
        let chain = Gambler::new(rat(2, 3));
        let t1 = truncate(&chain, |s| *s <= 10, 10_000).unwrap();
        let t2 = truncate(&chain, |s| *s <= 20, 10_000).unwrap();
        let (lo1, hi1) = exact_reach_prob(&t1.chain, t1.chain.target_flags()).unwrap();
        let (lo2, hi2) = exact_reach_prob(&t2.chain, t2.chain.target_flags()).unwrap();
        assert!(lo2 >= lo1);
        assert!(hi2 <= hi1);
    }
}
