//! Probabilistic noisy Turing machines: the induced chain with
//! timestamp-boosted noise, the finite control-graph abstraction and its
//! query engine, the four qualitative deciders, and decisiveness
//! certificates.
//!
//! Noise is applied lazily: only the cell under each head is resampled,
//! with probability `1 - (1-eps)^k` where `k` counts the noise phases since
//! the cell's content was last fixed. The noise phase of a step happens
//! after the clock ticks, so a cell written in the previous step has `k = 1`
//! and every step resamples each head symbol with probability at least
//! `eps`. This is what makes the control graph a faithful abstraction: any
//! control path can be realized with positive probability because the read
//! symbols can always flip to enable the desired transition.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;
use thiserror::Error;

use crate::chain::{DecisivenessCertificate, Distribution, EffectiveChain, TriBool};
use crate::rational::{pow, rat_int, Rational};

/// Tape symbol: an index into the machine's tape alphabet.
pub type Sym = u8;

/// One tape: the visited region, the head position inside it, and the last
/// write time of every visited cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TapeConfig {
    /// Absolute position of the leftmost visited cell.
    pub origin: i64,
    /// Absolute head position; always within the visited region.
    pub head: i64,
    pub cells: Vec<Sym>,
    pub stamps: Vec<u64>,
}

impl TapeConfig {
    pub fn new(cells: Vec<Sym>, head: usize) -> Self {
        assert!(head < cells.len(), "head outside the visited region");
        let stamps = vec![0; cells.len()];
        TapeConfig {
            origin: 0,
            head: head as i64,
            cells,
            stamps,
        }
    }

    fn head_index(&self) -> usize {
        (self.head - self.origin) as usize
    }

    pub fn head_symbol(&self) -> Sym {
        self.cells[self.head_index()]
    }

    pub fn head_stamp(&self) -> u64 {
        self.stamps[self.head_index()]
    }
}

/// A global state: control state, elapsed time, one tape configuration per
/// tape. Stamps never exceed the current time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PntmState {
    pub control: usize,
    pub time: u64,
    pub tapes: Vec<TapeConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PntmTransition {
    pub src: usize,
    pub read: Vec<Sym>,
    pub dst: usize,
    pub write: Vec<Sym>,
    /// Head moves, entries in {-1, 0, +1}.
    pub moves: Vec<i8>,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pntm {
    pub control_names: Vec<String>,
    /// Tape alphabet; must contain the blank symbol `#`.
    pub gamma: Vec<char>,
    pub tapes: usize,
    pub transitions: Vec<PntmTransition>,
    pub epsilon: Rational,
    pub initial: PntmState,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PntmError {
    #[error("noise level must satisfy 0 < eps < 1, got {0}")]
    BadNoise(Rational),
    #[error("transition weight must be positive")]
    ZeroWeight,
    #[error("tape alphabet must contain the blank symbol '#'")]
    MissingBlank,
    #[error("no transition for control state {state} reading {reads}; rerun with auto totality enabled")]
    NotTotal { state: String, reads: String },
    #[error("state is malformed: {0}")]
    MalformedState(String),
    #[error("index out of range: {0}")]
    BadIndex(String),
}

impl Pntm {
    pub fn blank(&self) -> Sym {
        self.gamma
            .iter()
            .position(|&c| c == '#')
            .expect("validated machine has a blank symbol") as Sym
    }

    /// Validates structural invariants, in particular totality: every
    /// (control state, read vector) pair must have at least one transition.
    /// With `auto_total`, missing pairs get a stay-put self-loop of weight 1
    /// that writes back what it read.
    pub fn validate(mut self, auto_total: bool) -> Result<Self, PntmError> {
        if self.epsilon <= rat_int(0) || self.epsilon >= Rational::one() {
            return Err(PntmError::BadNoise(self.epsilon.clone()));
        }
        if !self.gamma.contains(&'#') {
            return Err(PntmError::MissingBlank);
        }
        let states = self.control_names.len();
        let symbols = self.gamma.len();
        for t in &self.transitions {
            if t.weight == 0 {
                return Err(PntmError::ZeroWeight);
            }
            if t.src >= states
                || t.dst >= states
                || t.read.len() != self.tapes
                || t.write.len() != self.tapes
                || t.moves.len() != self.tapes
                || t.read.iter().chain(&t.write).any(|&s| s as usize >= symbols)
                || t.moves.iter().any(|&m| !(-1..=1).contains(&m))
            {
                return Err(PntmError::BadIndex(format!("transition {t:?}")));
            }
        }
        if self.initial.control >= states || self.initial.tapes.len() != self.tapes {
            return Err(PntmError::MalformedState("initial state".into()));
        }
        for tape in &self.initial.tapes {
            if tape.cells.is_empty()
                || tape.head < tape.origin
                || tape.head >= tape.origin + tape.cells.len() as i64
                || tape.cells.iter().any(|&s| s as usize >= symbols)
                || tape.stamps.len() != tape.cells.len()
                || tape.stamps.iter().any(|&s| s > self.initial.time)
            {
                return Err(PntmError::MalformedState("initial tape".into()));
            }
        }
        // Totality over all read vectors.
        let mut missing = Vec::new();
        for state in 0..states {
            for reads in read_vectors(symbols, self.tapes) {
                let any = self
                    .transitions
                    .iter()
                    .any(|t| t.src == state && t.read == reads);
                if !any {
                    if auto_total {
                        missing.push((state, reads));
                    } else {
                        return Err(PntmError::NotTotal {
                            state: self.control_names[state].clone(),
                            reads: reads
                                .iter()
                                .map(|&s| self.gamma[s as usize])
                                .collect::<String>(),
                        });
                    }
                }
            }
        }
        for (state, reads) in missing {
            self.transitions.push(PntmTransition {
                src: state,
                read: reads.clone(),
                dst: state,
                write: reads,
                moves: vec![0; self.tapes],
                weight: 1,
            });
        }
        Ok(self)
    }

    pub fn control_index(&self, name: &str) -> Option<usize> {
        self.control_names.iter().position(|n| n == name)
    }

    pub fn symbol_index(&self, symbol: char) -> Option<Sym> {
        self.gamma.iter().position(|&c| c == symbol).map(|i| i as Sym)
    }

    /// Per-tape distribution over the symbol read at the head when the
    /// noise phase happens at `at_time`: with `k = at_time - stamp` the
    /// cell resamples uniformly over the alphabet with probability
    /// `1 - (1-eps)^k` and keeps its content otherwise. `k = 0` means a
    /// noise-free read.
    fn tape_read_distribution(&self, tape: &TapeConfig, at_time: u64) -> Vec<(Sym, Rational)> {
        let current = tape.head_symbol();
        let k = (at_time - tape.head_stamp()) as usize;
        if k == 0 {
            return vec![(current, Rational::one())];
        }
        let survive = pow(&(Rational::one() - &self.epsilon), k);
        let flip_each = (Rational::one() - &survive) / rat_int(self.gamma.len() as i64);
        (0..self.gamma.len() as Sym)
            .map(|s| {
                let p = if s == current {
                    &flip_each + &survive
                } else {
                    flip_each.clone()
                };
                (s, p)
            })
            .filter(|(_, p)| p > &rat_int(0))
            .collect()
    }

    /// Joint distribution over read vectors for the noise phase at
    /// `state.time`, tapes independent.
    pub fn noise_distribution(&self, state: &PntmState) -> Distribution<Vec<Sym>> {
        self.noise_distribution_at(state, state.time)
    }

    fn noise_distribution_at(&self, state: &PntmState, at_time: u64) -> Distribution<Vec<Sym>> {
        let mut acc: Vec<(Vec<Sym>, Rational)> = vec![(Vec::new(), Rational::one())];
        for tape in &state.tapes {
            let marginal = self.tape_read_distribution(tape, at_time);
            let mut next = Vec::with_capacity(acc.len() * marginal.len());
            for (prefix, p) in &acc {
                for (s, q) in &marginal {
                    let mut v = prefix.clone();
                    v.push(*s);
                    next.push((v, p * q));
                }
            }
            acc = next;
        }
        Distribution::try_new(acc).expect("noise outcomes form a distribution")
    }

    fn apply(&self, state: &PntmState, t: &PntmTransition) -> PntmState {
        let new_time = state.time + 1;
        let blank = self.blank();
        let tapes = state
            .tapes
            .iter()
            .zip(t.write.iter().zip(&t.moves))
            .map(|(tape, (&write, &mv))| {
                let mut tape = tape.clone();
                let idx = tape.head_index();
                tape.cells[idx] = write;
                tape.stamps[idx] = new_time;
                tape.head += mv as i64;
                if tape.head < tape.origin {
                    tape.origin -= 1;
                    tape.cells.insert(0, blank);
                    tape.stamps.insert(0, 0);
                } else if tape.head >= tape.origin + tape.cells.len() as i64 {
                    tape.cells.push(blank);
                    tape.stamps.push(0);
                }
                tape
            })
            .collect();
        PntmState {
            control: t.dst,
            time: new_time,
            tapes,
        }
    }

    /// One step of the induced chain: the clock ticks, the head cells are
    /// subjected to noise, and a transition matching the noised read vector
    /// is chosen with probability proportional to its weight. Written cells
    /// are stamped with the new time; cells visited for the first time
    /// carry a blank with stamp 0, so their next read sees the full elapsed
    /// noise exposure.
    pub fn step_distribution(&self, state: &PntmState) -> Result<Distribution<PntmState>, PntmError> {
        if state.control >= self.control_names.len() || state.tapes.len() != self.tapes {
            return Err(PntmError::MalformedState(format!("{state:?}")));
        }
        let noise = self.noise_distribution_at(state, state.time + 1);
        let mut weighted: Vec<(PntmState, Rational)> = Vec::new();
        for (reads, p_noise) in noise.iter() {
            let matching: Vec<&PntmTransition> = self
                .transitions
                .iter()
                .filter(|t| t.src == state.control && &t.read == reads)
                .collect();
            if matching.is_empty() {
                return Err(PntmError::NotTotal {
                    state: self.control_names[state.control].clone(),
                    reads: reads
                        .iter()
                        .map(|&s| self.gamma[s as usize])
                        .collect::<String>(),
                });
            }
            let total: u64 = matching.iter().map(|t| t.weight).sum();
            for t in matching {
                let p = p_noise * rat_int(t.weight as i64) / rat_int(total as i64);
                weighted.push((self.apply(state, t), p));
            }
        }
        Distribution::from_weighted(weighted)
            .map_err(|_| PntmError::MalformedState(format!("{state:?}")))
    }

    /// The finite control graph obtained by abstracting away the tapes.
    pub fn graph(&self) -> ControlGraph {
        let mut adj = vec![Vec::new(); self.control_names.len()];
        for t in &self.transitions {
            if !adj[t.src].contains(&t.dst) {
                adj[t.src].push(t.dst);
            }
        }
        ControlGraph { adj }
    }

    /// Qualitative decider for a target given by a set of control states.
    /// Exact and never unknown: all four questions reduce to fixpoints on
    /// the control graph.
    pub fn qual_decide(&self, init: &PntmState, q: &[usize], query: QualQuery) -> TriBool {
        let g = self.graph();
        let n = self.control_names.len();
        let mut q_flags = vec![false; n];
        for &s in q {
            q_flags[s] = true;
        }
        let holds = match query {
            QualQuery::ReachZero => !g.ef(&q_flags)[init.control],
            QualQuery::ReachOne => {
                // Fails iff the avoid controls can be reached while dodging
                // the target controls.
                let q_prime = g.not_ef(&q_flags);
                !g.e_until(&q_flags, &q_prime)[init.control]
            }
            QualQuery::RepeatOne => g.ag_ef(&q_flags)[init.control],
            QualQuery::RepeatZero => {
                let q_prime = g.not_ef(&q_flags);
                let q_second = g.not_ef(&q_prime);
                !g.ef(&q_second)[init.control]
            }
        };
        if holds {
            TriBool::Holds
        } else {
            TriBool::Fails
        }
    }

    /// Globally-coarse decisiveness certificate, valid for any target set
    /// of control states: the span is the number of control states (a
    /// control path witnessing reachability never needs to be longer), and
    /// every one-step successor probability is at least
    /// `(eps/|Gamma|)^tapes * w_min / w_max_total`, the noise floor times
    /// the worst weight ratio among transitions sharing a read vector.
    pub fn certificate(&self) -> DecisivenessCertificate {
        let span = self.control_names.len();
        let noise_floor = pow(
            &(self.epsilon.clone() / rat_int(self.gamma.len() as i64)),
            self.tapes,
        );
        let mut groups: BTreeMap<(usize, &[Sym]), (u64, u64)> = BTreeMap::new();
        for t in &self.transitions {
            let entry = groups
                .entry((t.src, t.read.as_slice()))
                .or_insert((u64::MAX, 0));
            entry.0 = entry.0.min(t.weight);
            entry.1 += t.weight;
        }
        let weight_floor = groups
            .values()
            .map(|&(min, total)| rat_int(min as i64) / rat_int(total as i64))
            .min()
            .unwrap_or_else(Rational::one);
        let beta = noise_floor * weight_floor;
        DecisivenessCertificate::globally_coarse(
            beta,
            span,
            "any set of states selected by control states".into(),
        )
    }

    /// The induced chain for a control-state target. Exact: states carry
    /// full timestamps and are never merged.
    pub fn chain(&self, q: &[usize]) -> PntmChain<'_> {
        let (target, avoid, avoid2) = self.control_flags(q);
        PntmChain {
            model: self,
            target,
            avoid,
            avoid2,
        }
    }

    /// A finite-state quotient of the induced chain for machines whose
    /// heads never move: states are keyed by per-cell noise gaps (capped at
    /// `gap_cap`) instead of absolute timestamps. For stay-put machines
    /// every gap is exactly 1, so the quotient is exact; for machines with
    /// moving heads gaps can exceed the cap and the quotient's step
    /// probabilities are approximate. Use [`Pntm::chain`] for exact
    /// semantics.
    pub fn folded_chain(&self, q: &[usize], gap_cap: u64) -> FoldedPntmChain<'_> {
        assert!(gap_cap >= 1);
        let (target, avoid, avoid2) = self.control_flags(q);
        FoldedPntmChain {
            model: self,
            gap_cap,
            target,
            avoid,
            avoid2,
        }
    }

    fn control_flags(&self, q: &[usize]) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
        let g = self.graph();
        let n = self.control_names.len();
        let mut target = vec![false; n];
        for &s in q {
            target[s] = true;
        }
        let avoid = g.not_ef(&target);
        let avoid2 = g.not_ef(&avoid);
        (target, avoid, avoid2)
    }
}

/// Which qualitative question to decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualQuery {
    ReachOne,
    ReachZero,
    RepeatOne,
    RepeatZero,
}

fn read_vectors(symbols: usize, tapes: usize) -> Vec<Vec<Sym>> {
    let mut acc: Vec<Vec<Sym>> = vec![Vec::new()];
    for _ in 0..tapes {
        let mut next = Vec::with_capacity(acc.len() * symbols);
        for prefix in &acc {
            for s in 0..symbols as Sym {
                let mut v = prefix.clone();
                v.push(s);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// The control graph of a machine and the fixpoint queries the deciders
/// need.
#[derive(Debug, Clone)]
pub struct ControlGraph {
    adj: Vec<Vec<usize>>,
}

impl ControlGraph {
    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); nodes];
        for &(a, b) in edges {
            assert!(a < nodes && b < nodes);
            if !adj[a].contains(&b) {
                adj[a].push(b);
            }
        }
        ControlGraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    /// Nodes that can reach a flagged node (including the flagged nodes).
    pub fn ef(&self, q: &[bool]) -> Vec<bool> {
        let mut out = q.to_vec();
        loop {
            let mut changed = false;
            for v in 0..self.adj.len() {
                if !out[v] && self.adj[v].iter().any(|&w| out[w]) {
                    out[v] = true;
                    changed = true;
                }
            }
            if !changed {
                return out;
            }
        }
    }

    /// Complement of [`ControlGraph::ef`]: nodes from which no flagged node
    /// is reachable.
    pub fn not_ef(&self, q: &[bool]) -> Vec<bool> {
        self.ef(q).into_iter().map(|b| !b).collect()
    }

    /// Nodes with a path into `q1` that avoids `q2` strictly before
    /// arrival; nodes in `q1` qualify outright.
    pub fn e_until(&self, q2: &[bool], q1: &[bool]) -> Vec<bool> {
        let mut out = q1.to_vec();
        loop {
            let mut changed = false;
            for v in 0..self.adj.len() {
                if !out[v] && !q2[v] && self.adj[v].iter().any(|&w| out[w]) {
                    out[v] = true;
                    changed = true;
                }
            }
            if !changed {
                return out;
            }
        }
    }

    /// Nodes from which every reachable node can still reach a flagged
    /// node.
    pub fn ag_ef(&self, q: &[bool]) -> Vec<bool> {
        let cannot = self.not_ef(q);
        self.not_ef(&cannot)
    }
}

/// The Markov chain induced by a machine with a control-state target.
pub struct PntmChain<'a> {
    model: &'a Pntm,
    target: Vec<bool>,
    avoid: Vec<bool>,
    avoid2: Vec<bool>,
}

impl EffectiveChain for PntmChain<'_> {
    type State = PntmState;

    fn initial(&self) -> PntmState {
        self.model.initial.clone()
    }

    fn successors(&self, state: &PntmState) -> Distribution<PntmState> {
        self.model
            .step_distribution(state)
            .expect("validated machine is total")
    }

    fn in_target(&self, state: &PntmState) -> bool {
        self.target[state.control]
    }

    fn in_avoid(&self, state: &PntmState) -> bool {
        self.avoid[state.control]
    }

    fn in_avoid2(&self, state: &PntmState) -> Option<bool> {
        Some(self.avoid2[state.control])
    }
}

/// Gap-folded machine state: per-cell noise gaps replace absolute
/// timestamps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FoldedState {
    pub control: usize,
    pub tapes: Vec<FoldedTape>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FoldedTape {
    pub head: usize,
    pub cells: Vec<Sym>,
    /// Noise gap the next step will see, capped.
    pub gaps: Vec<u64>,
}

/// See [`Pntm::folded_chain`].
pub struct FoldedPntmChain<'a> {
    model: &'a Pntm,
    gap_cap: u64,
    target: Vec<bool>,
    avoid: Vec<bool>,
    avoid2: Vec<bool>,
}

impl FoldedPntmChain<'_> {
    fn fold(&self, state: &PntmState) -> FoldedState {
        FoldedState {
            control: state.control,
            tapes: state
                .tapes
                .iter()
                .map(|t| FoldedTape {
                    head: t.head_index(),
                    cells: t.cells.clone(),
                    gaps: t
                        .stamps
                        .iter()
                        .map(|&s| (state.time + 1 - s).min(self.gap_cap))
                        .collect(),
                })
                .collect(),
        }
    }
}

impl EffectiveChain for FoldedPntmChain<'_> {
    type State = FoldedState;

    fn initial(&self) -> FoldedState {
        self.fold(&self.model.initial)
    }

    fn successors(&self, state: &FoldedState) -> Distribution<FoldedState> {
        // Reconstruct a representative full state whose next-step gaps are
        // exactly the stored ones: time = gap_cap, stamps = time + 1 - gap.
        let time = self.gap_cap;
        let full = PntmState {
            control: state.control,
            time,
            tapes: state
                .tapes
                .iter()
                .map(|t| TapeConfig {
                    origin: 0,
                    head: t.head as i64,
                    cells: t.cells.clone(),
                    stamps: t.gaps.iter().map(|&g| time + 1 - g).collect(),
                })
                .collect(),
        };
        let dist = self
            .model
            .step_distribution(&full)
            .expect("validated machine is total");
        let entries: Vec<(FoldedState, Rational)> = dist
            .entries()
            .iter()
            .map(|(s, p)| (self.fold(s), p.clone()))
            .collect();
        // Folding can merge distinct full states; re-aggregate.
        Distribution::from_weighted(entries).expect("folded outcomes form a distribution")
    }

    fn in_target(&self, state: &FoldedState) -> bool {
        self.target[state.control]
    }

    fn in_avoid(&self, state: &FoldedState) -> bool {
        self.avoid[state.control]
    }

    fn in_avoid2(&self, state: &FoldedState) -> Option<bool> {
        Some(self.avoid2[state.control])
    }
}

impl fmt::Display for PntmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(q{}, t={})", self.control, self.time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    /// Single control state, one tape over {a, b, #}, stay-put transitions
    /// for every read, all weights 1, eps = 1/2.
    fn two_symbol_machine() -> Pntm {
        Pntm {
            control_names: vec!["s".into()],
            gamma: vec!['a', 'b', '#'],
            tapes: 1,
            transitions: vec![],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        }
        .validate(true)
        .unwrap()
    }

    #[test]
    fn noise_identity_when_just_written() {
        let m = two_symbol_machine();
        // stamps equal to time: gap 0 on all tapes.
        let s = PntmState {
            control: 0,
            time: 5,
            tapes: vec![TapeConfig {
                origin: 0,
                head: 0,
                cells: vec![0],
                stamps: vec![5],
            }],
        };
        let d = m.noise_distribution(&s);
        assert_eq!(d.entries(), &[(vec![0], rat_int(1))]);
    }

    #[test]
    fn noise_gap_one_binary_alphabet() {
        // Gamma = {a, b}, eps = 1/2, k = 1, current a: stay 3/4, flip 1/4.
        let m = Pntm {
            control_names: vec!["s".into()],
            gamma: vec!['a', 'b'],
            tapes: 1,
            transitions: vec![],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        };
        // skip validation: '#' missing deliberately, noise only
        let s = PntmState {
            control: 0,
            time: 1,
            tapes: vec![TapeConfig {
                origin: 0,
                head: 0,
                cells: vec![0],
                stamps: vec![0],
            }],
        };
        let d = m.noise_distribution(&s);
        assert_eq!(d.probability_of(&vec![0]), rat(3, 4));
        assert_eq!(d.probability_of(&vec![1]), rat(1, 4));
    }

    #[test]
    fn noise_product_over_tapes() {
        let m = Pntm {
            control_names: vec!["s".into()],
            gamma: vec!['a', 'b'],
            tapes: 2,
            transitions: vec![],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0), TapeConfig::new(vec![0], 0)],
            },
        };
        let s = PntmState {
            control: 0,
            time: 1,
            tapes: vec![
                TapeConfig { origin: 0, head: 0, cells: vec![0], stamps: vec![0] },
                TapeConfig { origin: 0, head: 0, cells: vec![0], stamps: vec![0] },
            ],
        };
        let d = m.noise_distribution(&s);
        assert_eq!(d.probability_of(&vec![0, 0]), rat(9, 16));
        assert_eq!(d.probability_of(&vec![0, 1]), rat(3, 16));
        assert_eq!(d.probability_of(&vec![1, 1]), rat(1, 16));
        assert!(d.total().is_one());
    }

    #[test]
    fn step_merges_converging_branches() {
        // All reads lead to the same write and stay put, so the successor
        // is unique despite the noisy read.
        let m = Pntm {
            control_names: vec!["s".into()],
            gamma: vec!['a', '#'],
            tapes: 1,
            transitions: vec![
                PntmTransition { src: 0, read: vec![0], dst: 0, write: vec![0], moves: vec![0], weight: 1 },
                PntmTransition { src: 0, read: vec![1], dst: 0, write: vec![0], moves: vec![0], weight: 1 },
            ],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        }
        .validate(false)
        .unwrap();
        let d = m.step_distribution(&m.initial.clone()).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.total().is_one());
    }

    #[test]
    fn step_weight_normalization_within_noise_outcome() {
        // Two transitions match read 'a' with weights 1 and 3.
        let m = Pntm {
            control_names: vec!["s".into(), "t".into(), "u".into()],
            gamma: vec!['a', '#'],
            tapes: 1,
            transitions: vec![
                PntmTransition { src: 0, read: vec![0], dst: 1, write: vec![0], moves: vec![0], weight: 1 },
                PntmTransition { src: 0, read: vec![0], dst: 2, write: vec![0], moves: vec![0], weight: 3 },
            ],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        }
        .validate(true)
        .unwrap();
        // Gap 1 at the first step: read stays 'a' with probability 3/4.
        let d = m.step_distribution(&m.initial.clone()).unwrap();
        let to_t: Rational = d
            .iter()
            .filter(|(s, _)| s.control == 1)
            .map(|(_, p)| p.clone())
            .fold(rat_int(0), |a, b| a + b);
        let to_u: Rational = d
            .iter()
            .filter(|(s, _)| s.control == 2)
            .map(|(_, p)| p.clone())
            .fold(rat_int(0), |a, b| a + b);
        // The 'a' read survives with probability 3/4 and then splits 1:3;
        // the '#' read keeps the machine in place via the totality loop.
        assert_eq!(to_t, rat(3, 4) * rat(1, 4));
        assert_eq!(to_u, rat(3, 4) * rat(3, 4));
    }

    #[test]
    fn graph_query_examples() {
        // p -> r -> q, no edge into p.
        let g = ControlGraph::from_edges(3, &[(0, 1), (1, 2), (2, 2)]);
        let q = [false, false, true];
        assert_eq!(g.ef(&q), vec![true, true, true]);
        let isolated = ControlGraph::from_edges(3, &[(1, 2), (2, 2), (0, 0)]);
        assert_eq!(isolated.ef(&q), vec![false, true, true]);

        // E(not q2 until q1) with q1 = q2 = {q}: only q itself qualifies
        // when the route is blocked by q2 = {r}.
        let g2 = ControlGraph::from_edges(3, &[(0, 1), (1, 2), (2, 2)]);
        let q1 = [false, false, true];
        let q2 = [false, true, false];
        assert_eq!(g2.e_until(&q2, &q1), vec![false, false, true]);

        // Strongly connected graph with a nonempty target: AG EF holds
        // everywhere.
        let scc = ControlGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(scc.ag_ef(&[true, false, false]), vec![true, true, true]);
    }

    fn chain_machine() -> Pntm {
        // Control chain p -> q -> r with r absorbing; fully probabilistic
        // via auto-totality.
        Pntm {
            control_names: vec!["p".into(), "q".into(), "r".into()],
            gamma: vec!['a', '#'],
            tapes: 1,
            transitions: vec![
                PntmTransition { src: 0, read: vec![0], dst: 1, write: vec![0], moves: vec![0], weight: 1 },
                PntmTransition { src: 0, read: vec![1], dst: 1, write: vec![1], moves: vec![0], weight: 1 },
                PntmTransition { src: 1, read: vec![0], dst: 2, write: vec![0], moves: vec![0], weight: 1 },
                PntmTransition { src: 1, read: vec![1], dst: 2, write: vec![1], moves: vec![0], weight: 1 },
            ],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        }
        .validate(true)
        .unwrap()
    }

    #[test]
    fn qual_decide_examples() {
        let m = chain_machine();
        let init = m.initial.clone();
        // reach-one of {q} from p: the avoid controls {r} can only be
        // reached through q, so the probability is one.
        assert_eq!(m.qual_decide(&init, &[1], QualQuery::ReachOne), TriBool::Holds);
        // repeat-one of {q} fails: r is absorbing and cannot reach q.
        assert_eq!(m.qual_decide(&init, &[1], QualQuery::RepeatOne), TriBool::Fails);
        // Unreachable target: reach-zero and repeat-zero hold.
        let m2 = Pntm {
            control_names: vec!["p".into(), "z".into()],
            gamma: vec!['a', '#'],
            tapes: 1,
            transitions: vec![
                PntmTransition { src: 1, read: vec![0], dst: 1, write: vec![0], moves: vec![0], weight: 1 },
            ],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        }
        .validate(true)
        .unwrap();
        let init2 = m2.initial.clone();
        assert_eq!(m2.qual_decide(&init2, &[1], QualQuery::ReachZero), TriBool::Holds);
        assert_eq!(m2.qual_decide(&init2, &[1], QualQuery::RepeatZero), TriBool::Holds);
        // Strongly connected control graph: repeat-one holds everywhere.
        let m3 = Pntm {
            control_names: vec!["a".into(), "b".into()],
            gamma: vec!['a', '#'],
            tapes: 1,
            transitions: vec![
                PntmTransition { src: 0, read: vec![0], dst: 1, write: vec![0], moves: vec![0], weight: 1 },
                PntmTransition { src: 0, read: vec![1], dst: 1, write: vec![1], moves: vec![0], weight: 1 },
                PntmTransition { src: 1, read: vec![0], dst: 0, write: vec![0], moves: vec![0], weight: 1 },
                PntmTransition { src: 1, read: vec![1], dst: 0, write: vec![1], moves: vec![0], weight: 1 },
            ],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        }
        .validate(true)
        .unwrap();
        assert_eq!(
            m3.qual_decide(&m3.initial.clone(), &[1], QualQuery::RepeatOne),
            TriBool::Holds
        );
    }

    #[test]
    fn certificate_examples() {
        // Uniform weights, one transition per (state, read): beta is the
        // bare noise floor (eps/|Gamma|)^tapes.
        let m = two_symbol_machine();
        let cert = m.certificate();
        match cert.kind {
            crate::chain::CertificateKind::GloballyCoarse { beta, span, alpha } => {
                assert_eq!(beta, rat(1, 6));
                assert_eq!(span, 1);
                assert_eq!(alpha, rat(1, 6));
            }
            other => panic!("unexpected {other:?}"),
        }

        // Two control states: span 2, alpha = beta^2.
        let m = chain_machine();
        let cert = m.certificate();
        match cert.kind {
            crate::chain::CertificateKind::GloballyCoarse { beta, span, alpha } => {
                assert_eq!(span, 3);
                assert_eq!(alpha, pow(&beta, 3));
            }
            other => panic!("unexpected {other:?}"),
        }

        // Weights 1 and 3 on one (state, read): weight factor 1/4.
        let m = Pntm {
            control_names: vec!["s".into(), "t".into()],
            gamma: vec!['a', '#'],
            tapes: 1,
            transitions: vec![
                PntmTransition { src: 0, read: vec![0], dst: 0, write: vec![0], moves: vec![0], weight: 1 },
                PntmTransition { src: 0, read: vec![0], dst: 1, write: vec![0], moves: vec![0], weight: 3 },
            ],
            epsilon: rat(1, 2),
            initial: PntmState {
                control: 0,
                time: 0,
                tapes: vec![TapeConfig::new(vec![0], 0)],
            },
        }
        .validate(true)
        .unwrap();
        match m.certificate().kind {
            crate::chain::CertificateKind::GloballyCoarse { beta, .. } => {
                assert_eq!(beta, rat(1, 4) * rat(1, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn folded_chain_matches_exact_for_stay_put() {
        let m = chain_machine();
        let exact = m.chain(&[1]);
        let folded = m.folded_chain(&[1], 4);
        // One exact step from the initial state, folded: distributions
        // agree after folding.
        let exact_step = exact.successors(&m.initial.clone());
        let folded_step = folded.successors(&folded.initial());
        let mut folded_from_exact: Vec<(FoldedState, Rational)> = Vec::new();
        for (s, p) in exact_step.iter() {
            let f = folded.fold(s);
            match folded_from_exact.iter_mut().find(|(g, _)| *g == f) {
                Some((_, q)) => *q += p,
                None => folded_from_exact.push((f, p.clone())),
            }
        }
        for (f, p) in folded_from_exact {
            assert_eq!(folded_step.probability_of(&f), p);
        }
    }

    proptest! {
        // Abstraction soundness: every step successor's control move is an
        // edge of the control graph, and the step distribution sums to 1.
        #[test]
        fn step_respects_graph(seed_cell in 0u8..2, time in 0u64..5) {
            let m = chain_machine();
            let g = m.graph();
            let s = PntmState {
                control: 0,
                time,
                tapes: vec![TapeConfig {
                    origin: 0,
                    head: 0,
                    cells: vec![seed_cell],
                    stamps: vec![time.saturating_sub(1)],
                }],
            };
            let d = m.step_distribution(&s).unwrap();
            prop_assert!(d.total().is_one());
            for (succ, _) in d.iter() {
                prop_assert!(g.successors(s.control).contains(&succ.control));
            }
        }

        // EF agrees with a plain forward-BFS oracle on random graphs.
        #[test]
        fn ef_matches_bfs(edges in proptest::collection::vec((0usize..12, 0usize..12), 0..40),
                          targets in proptest::collection::vec(0usize..12, 0..4)) {
            let g = ControlGraph::from_edges(12, &edges);
            let mut q = vec![false; 12];
            for t in &targets {
                q[*t] = true;
            }
            let ef = g.ef(&q);
            for start in 0..12 {
                // BFS from start over the edge list.
                let mut seen = vec![false; 12];
                let mut stack = vec![start];
                seen[start] = true;
                let mut hit = q[start];
                while let Some(v) = stack.pop() {
                    for &(a, b) in &edges {
                        if a == v && !seen[b] {
                            seen[b] = true;
                            if q[b] {
                                hit = true;
                            }
                            stack.push(b);
                        }
                    }
                }
                prop_assert_eq!(ef[start], hit);
            }
        }
    }
}
