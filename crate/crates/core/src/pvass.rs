//! Probabilistic vector addition systems with states: semantics of the
//! induced chain, backward coverability, the four qualitative deciders and
//! decisiveness certificates.
//!
//! Counters range over the naturals; a transition is enabled when applying
//! its effect keeps every counter non-negative, and enabled transitions are
//! chosen with probability proportional to their weights. Upward-closed
//! sets of markings are represented by antichains of minimal elements.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_traits::One;
use thiserror::Error;

use crate::chain::{DecisivenessCertificate, Distribution, EffectiveChain, TriBool};
use crate::rational::{rat_int, Rational};
use crate::wqo::{
    saturate_pre, Antichain, SaturationError, SaturationResult, Wqo, DEFAULT_BASIS_LIMIT,
};

/// A global state: control location plus a natural-valued counter vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking {
    pub control: usize,
    pub valuation: Vec<u64>,
}

impl Marking {
    pub fn new(control: usize, valuation: Vec<u64>) -> Self {
        Marking { control, valuation }
    }
}

impl Wqo for Marking {
    fn leq(&self, other: &Self) -> bool {
        self.control == other.control
            && self
                .valuation
                .iter()
                .zip(&other.valuation)
                .all(|(a, b)| a <= b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PvassTransition {
    pub src: usize,
    /// Per-variable effect, each entry in {-1, 0, +1}.
    pub op: Vec<i8>,
    pub dst: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pvass {
    pub control_names: Vec<String>,
    pub var_names: Vec<String>,
    pub transitions: Vec<PvassTransition>,
    pub initial: Marking,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PvassError {
    #[error("transition weight must be positive")]
    ZeroWeight,
    #[error("transition op entry out of {{-1,0,1}}")]
    BadOpEntry,
    #[error("control state {0} has no always-enabled transition (deadlock); rerun with auto self-loops enabled")]
    Deadlock(String),
    #[error("marking is malformed: {0}")]
    MalformedState(String),
    #[error("probability-one reachability requires a control-state target")]
    NotQStateTarget,
    #[error(transparent)]
    Saturation(#[from] SaturationError),
    #[error("index out of range: {0}")]
    BadIndex(String),
}

impl Pvass {
    /// Validates structural invariants. With `auto_selfloop`, control states
    /// lacking an always-enabled transition get a weight-1 self-loop that
    /// leaves the counters unchanged; otherwise such states are rejected.
    pub fn validate(mut self, auto_selfloop: bool) -> Result<Self, PvassError> {
        let vars = self.var_names.len();
        let states = self.control_names.len();
        if self.initial.control >= states || self.initial.valuation.len() != vars {
            return Err(PvassError::MalformedState("initial marking".into()));
        }
        for t in &self.transitions {
            if t.weight == 0 {
                return Err(PvassError::ZeroWeight);
            }
            if t.op.len() != vars || t.op.iter().any(|&e| !(-1..=1).contains(&e)) {
                return Err(PvassError::BadOpEntry);
            }
            if t.src >= states || t.dst >= states {
                return Err(PvassError::BadIndex(format!("transition {t:?}")));
            }
        }
        for s in 0..states {
            let always_enabled = self
                .transitions
                .iter()
                .any(|t| t.src == s && t.op.iter().all(|&e| e >= 0));
            if !always_enabled {
                if auto_selfloop {
                    self.transitions.push(PvassTransition {
                        src: s,
                        op: vec![0; vars],
                        dst: s,
                        weight: 1,
                    });
                } else {
                    return Err(PvassError::Deadlock(self.control_names[s].clone()));
                }
            }
        }
        Ok(self)
    }

    pub fn control_index(&self, name: &str) -> Option<usize> {
        self.control_names.iter().position(|n| n == name)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|n| n == name)
    }

    fn enabled<'a>(&'a self, m: &'a Marking) -> impl Iterator<Item = &'a PvassTransition> + 'a {
        self.transitions.iter().filter(move |t| {
            t.src == m.control
                && t.op
                    .iter()
                    .zip(&m.valuation)
                    .all(|(&e, &v)| v as i64 + e as i64 >= 0)
        })
    }

    fn apply(t: &PvassTransition, m: &Marking) -> Marking {
        Marking {
            control: t.dst,
            valuation: m
                .valuation
                .iter()
                .zip(&t.op)
                .map(|(&v, &e)| (v as i64 + e as i64) as u64)
                .collect(),
        }
    }

    /// One-step successor distribution: enabled transitions weighted and
    /// normalized, entries merged per target marking.
    pub fn successors(&self, m: &Marking) -> Result<Distribution<Marking>, PvassError> {
        if m.control >= self.control_names.len() || m.valuation.len() != self.var_names.len() {
            return Err(PvassError::MalformedState(format!("{m:?}")));
        }
        let weighted: Vec<(Marking, Rational)> = self
            .enabled(m)
            .map(|t| (Self::apply(t, m), rat_int(t.weight as i64)))
            .collect();
        Distribution::from_weighted(weighted)
            .map_err(|_| PvassError::MalformedState(format!("deadlock at {m:?}")))
    }

    /// The unique minimal marking whose `t`-successor covers `target_min`,
    /// or `None` when `t` cannot produce a covering successor (control
    /// mismatch). Component-wise: the predecessor must reach at least
    /// `target - op` and must keep `op` enabled.
    pub fn min_pre_transition(
        &self,
        t: &PvassTransition,
        target_min: &Marking,
    ) -> Option<Marking> {
        if t.dst != target_min.control {
            return None;
        }
        let valuation = target_min
            .valuation
            .iter()
            .zip(&t.op)
            .map(|(&v, &e)| {
                let needed = v as i64 - e as i64;
                let enabled = (-(e as i64)).max(0);
                needed.max(enabled).max(0) as u64
            })
            .collect();
        Some(Marking {
            control: t.src,
            valuation,
        })
    }

    /// Basis of `Pre*` of the upward-closed set `F` under the
    /// non-probabilistic semantics; `rounds` is the span with respect to
    /// `F`.
    pub fn pre_star_upward(&self, f: &UpwardTarget) -> Result<SaturationResult<Marking>, PvassError> {
        let basis = f.basis(self);
        Ok(saturate_pre(
            basis,
            |m| {
                self.transitions
                    .iter()
                    .filter_map(|t| self.min_pre_transition(t, m))
                    .collect()
            },
            DEFAULT_BASIS_LIMIT,
        )?)
    }

    /// Removes every outgoing transition of the given control states and
    /// gives each of them a weight-1 self-loop that leaves the counters
    /// unchanged.
    fn cut_outgoing(&self, controls: &[usize]) -> Pvass {
        let cut: HashSet<usize> = controls.iter().copied().collect();
        let vars = self.var_names.len();
        let mut transitions: Vec<PvassTransition> = self
            .transitions
            .iter()
            .filter(|t| !cut.contains(&t.src))
            .cloned()
            .collect();
        for &s in &cut {
            transitions.push(PvassTransition {
                src: s,
                op: vec![0; vars],
                dst: s,
                weight: 1,
            });
        }
        Pvass {
            control_names: self.control_names.clone(),
            var_names: self.var_names.clone(),
            transitions,
            initial: self.initial.clone(),
        }
    }

    /// Best-effort decision whether a downward-closed set (the complement
    /// of the upward closure of `complement_basis`) is reachable from
    /// `init`.
    ///
    /// `Holds` comes with a concrete witness path; `Fails` is certified
    /// either by full enumeration of a finite reachable set or by a
    /// coverability-tree argument showing that no control state of the
    /// set's bottoms is coverable at all. Everything else is `Unknown`.
    pub fn best_effort_reach_downward(
        &self,
        init: &Marking,
        complement_basis: &Antichain<Marking>,
        limits: &SearchLimits,
    ) -> ReachDownward {
        let in_down = |m: &Marking| !complement_basis.covers(m);
        if in_down(init) {
            return ReachDownward::Holds { witness: vec![init.clone()] };
        }
        // Controls whose zero marking lies in the downward-closed set. Every
        // member of a downward-closed set sits above such a zero marking, so
        // if none of these controls is coverable the set is unreachable.
        let vars = self.var_names.len();
        let bottoms: Vec<usize> = (0..self.control_names.len())
            .filter(|&q| in_down(&Marking::new(q, vec![0; vars])))
            .collect();
        if bottoms.is_empty() {
            return ReachDownward::Fails {
                certificate: EmptinessCertificate::NoBottomControls,
            };
        }
        if let Some(coverable) = self.coverable_controls(init, limits.coverability_nodes) {
            if bottoms.iter().all(|q| !coverable.contains(q)) {
                return ReachDownward::Fails {
                    certificate: EmptinessCertificate::ControlUnreachable,
                };
            }
        }
        // Forward search: either finds a witness or exhausts the reachable
        // set, proving emptiness.
        let mut seen: HashSet<Marking> = HashSet::new();
        let mut parents: Vec<(Marking, Option<usize>)> = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        seen.insert(init.clone());
        parents.push((init.clone(), None));
        queue.push_back(0);
        while let Some(i) = queue.pop_front() {
            let m = parents[i].0.clone();
            for t in self.enabled(&m) {
                let next = Self::apply(t, &m);
                if in_down(&next) {
                    let mut witness = vec![next];
                    let mut cur = Some(i);
                    while let Some(k) = cur {
                        witness.push(parents[k].0.clone());
                        cur = parents[k].1;
                    }
                    witness.reverse();
                    return ReachDownward::Holds { witness };
                }
                if seen.insert(next.clone()) {
                    if parents.len() >= limits.forward_states {
                        return ReachDownward::Unknown {
                            reason: format!(
                                "forward exploration exceeded {} states without finding a witness",
                                limits.forward_states
                            ),
                        };
                    }
                    parents.push((next, Some(i)));
                    queue.push_back(parents.len() - 1);
                }
            }
        }
        ReachDownward::Fails {
            certificate: EmptinessCertificate::ExhaustiveEnumeration {
                states: parents.len(),
            },
        }
    }

    /// Control states coverable from `init`, via a coverability tree with
    /// omega acceleration. Returns `None` if the node limit is hit.
    fn coverable_controls(&self, init: &Marking, node_limit: usize) -> Option<HashSet<usize>> {
        #[derive(Clone, PartialEq, Eq)]
        struct ExtMarking {
            control: usize,
            // None encodes omega (arbitrarily large).
            vals: Vec<Option<u64>>,
        }
        impl ExtMarking {
            fn leq(&self, other: &ExtMarking) -> bool {
                self.control == other.control
                    && self.vals.iter().zip(&other.vals).all(|(a, b)| match (a, b) {
                        (_, None) => true,
                        (None, Some(_)) => false,
                        (Some(x), Some(y)) => x <= y,
                    })
            }
        }
        let root = ExtMarking {
            control: init.control,
            vals: init.valuation.iter().map(|&v| Some(v)).collect(),
        };
        let mut nodes: Vec<(ExtMarking, Option<usize>)> = vec![(root, None)];
        let mut queue: VecDeque<usize> = VecDeque::from([0]);
        let mut coverable: HashSet<usize> = HashSet::from([init.control]);
        while let Some(i) = queue.pop_front() {
            let current = nodes[i].0.clone();
            for t in &self.transitions {
                if t.src != current.control {
                    continue;
                }
                let enabled = current
                    .vals
                    .iter()
                    .zip(&t.op)
                    .all(|(v, &e)| match v {
                        None => true,
                        Some(v) => *v as i64 + e as i64 >= 0,
                    });
                if !enabled {
                    continue;
                }
                let mut succ = ExtMarking {
                    control: t.dst,
                    vals: current
                        .vals
                        .iter()
                        .zip(&t.op)
                        .map(|(v, &e)| v.map(|v| (v as i64 + e as i64) as u64))
                        .collect(),
                };
                // Omega acceleration along the ancestor chain.
                let mut anc = Some(i);
                while let Some(a) = anc {
                    let candidate = &nodes[a].0;
                    if candidate.leq(&succ) && *candidate != succ {
                        for (sv, av) in succ.vals.iter_mut().zip(&candidate.vals) {
                            if let (Some(s), Some(a)) = (sv.as_ref(), av.as_ref()) {
                                if s > a {
                                    *sv = None;
                                }
                            }
                        }
                    }
                    anc = nodes[a].1;
                }
                // Prune nodes subsumed by an existing one.
                if nodes.iter().any(|(n, _)| succ.leq(n)) {
                    coverable.insert(succ.control);
                    continue;
                }
                coverable.insert(succ.control);
                nodes.push((succ, Some(i)));
                if nodes.len() > node_limit {
                    return None;
                }
                queue.push_back(nodes.len() - 1);
            }
        }
        Some(coverable)
    }

    /// Qualitative decider for reachability and repeated reachability.
    ///
    /// * `Reach`/`Zero`: exact for any upward-closed target via backward
    ///   coverability; never unknown.
    /// * `Reach`/`One`: requires a control-state target. The target's
    ///   outgoing transitions are cut and the question reduces to
    ///   best-effort reachability of the target's unreachable complement.
    /// * `Repeat`/`One`: works for any upward-closed target, reducing to
    ///   reachability of the unreachable complement in the original system.
    /// * `Repeat`/`Zero`: no sound procedure is available for weighted
    ///   counter systems; always `Unknown`.
    pub fn qual_decide(
        &self,
        init: &Marking,
        target: &PvassTarget,
        query: QualQuery,
        limits: &SearchLimits,
    ) -> Result<TriBool, PvassError> {
        match query {
            QualQuery::ReachZero => {
                let pre = self.pre_star_upward(&target.upward())?;
                Ok(if pre.basis.covers(init) {
                    TriBool::Fails
                } else {
                    TriBool::Holds
                })
            }
            QualQuery::ReachOne => {
                let controls = match target {
                    PvassTarget::QStates(controls) => controls.clone(),
                    PvassTarget::Upward(_) => return Err(PvassError::NotQStateTarget),
                };
                let modified = self.cut_outgoing(&controls);
                let pre = modified.pre_star_upward(&target.upward())?;
                Ok(modified
                    .best_effort_reach_downward(init, &pre.basis, limits)
                    .into_tribool()
                    .negate())
            }
            QualQuery::RepeatOne => {
                let pre = self.pre_star_upward(&target.upward())?;
                Ok(self
                    .best_effort_reach_downward(init, &pre.basis, limits)
                    .into_tribool()
                    .negate())
            }
            QualQuery::RepeatZero => Ok(TriBool::Unknown(
                "no sound probability-zero decider exists for repeated reachability on weighted \
                 counter systems; the answer depends on the numeric transition weights"
                    .into(),
            )),
        }
    }

    /// Globally-coarse decisiveness certificate for an upward-closed
    /// target.
    ///
    /// The coarseness bound takes, per control state, the minimum
    /// transition weight over the sum of all its transition weights; since
    /// every enabled set is a subset of all outgoing transitions this is a
    /// valid positive lower bound on any one-step probability. The span is
    /// the saturation round count of `Pre*(F)` and `alpha = beta^span`.
    pub fn decisiveness_certificate(
        &self,
        f: &UpwardTarget,
    ) -> Result<DecisivenessCertificate, PvassError> {
        let beta = self.coarseness_lower_bound();
        let span = self.pre_star_upward(f)?.rounds;
        Ok(DecisivenessCertificate::globally_coarse(
            beta,
            span,
            f.describe(self),
        ))
    }

    /// Positive lower bound on every one-step transition probability:
    /// min over control states of (min weight) / (total weight).
    pub fn coarseness_lower_bound(&self) -> Rational {
        let mut beta = Rational::one();
        for s in 0..self.control_names.len() {
            let weights: Vec<u64> = self
                .transitions
                .iter()
                .filter(|t| t.src == s)
                .map(|t| t.weight)
                .collect();
            if weights.is_empty() {
                continue;
            }
            let min = *weights.iter().min().expect("nonempty");
            let total: u64 = weights.iter().sum();
            let bound = rat_int(min as i64) / rat_int(total as i64);
            if bound < beta {
                beta = bound;
            }
        }
        beta
    }

    /// The induced effective chain for an upward-closed target. Precomputes
    /// `Pre*(F)` so that avoid-set membership is a coverability check.
    pub fn chain(&self, target: &PvassTarget) -> Result<PvassChain<'_>, PvassError> {
        let pre_star = self.pre_star_upward(&target.upward())?.basis;
        Ok(PvassChain {
            model: self,
            target_basis: target.upward().basis(self),
            pre_star,
        })
    }
}

/// Search limits for the best-effort downward-reachability decider.
#[derive(Debug, Clone)]
pub struct SearchLimits {
    pub coverability_nodes: usize,
    pub forward_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            coverability_nodes: 100_000,
            forward_states: 100_000,
        }
    }
}

/// Outcome of [`Pvass::best_effort_reach_downward`].
#[derive(Debug, Clone)]
pub enum ReachDownward {
    Holds { witness: Vec<Marking> },
    Fails { certificate: EmptinessCertificate },
    Unknown { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmptinessCertificate {
    /// The downward-closed set is empty (it has no control-state bottoms).
    NoBottomControls,
    /// No control state of the set's bottoms appears in the coverability
    /// tree, so no state of the set is reachable.
    ControlUnreachable,
    /// The reachable set was fully enumerated and avoids the set.
    ExhaustiveEnumeration { states: usize },
}

impl ReachDownward {
    pub fn into_tribool(self) -> TriBool {
        match self {
            ReachDownward::Holds { .. } => TriBool::Holds,
            ReachDownward::Fails { .. } => TriBool::Fails,
            ReachDownward::Unknown { reason } => TriBool::Unknown(reason),
        }
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

/// An upward-closed target set for a PVASS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PvassTarget {
    /// All markings whose control state lies in the set.
    QStates(Vec<usize>),
    /// Upward closure of explicit basis markings.
    Upward(Vec<Marking>),
}

impl PvassTarget {
    pub fn upward(&self) -> UpwardTarget {
        match self {
            PvassTarget::QStates(controls) => UpwardTarget {
                controls: Some(controls.clone()),
                basis: Vec::new(),
            },
            PvassTarget::Upward(basis) => UpwardTarget {
                controls: None,
                basis: basis.clone(),
            },
        }
    }
}

/// Basis view of an upward-closed set of markings. Control-state targets
/// are represented by zero-valuation basis elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpwardTarget {
    controls: Option<Vec<usize>>,
    basis: Vec<Marking>,
}

impl UpwardTarget {
    pub fn from_markings(basis: Vec<Marking>) -> Self {
        UpwardTarget {
            controls: None,
            basis,
        }
    }

    pub fn from_q_states(controls: Vec<usize>) -> Self {
        UpwardTarget {
            controls: Some(controls),
            basis: Vec::new(),
        }
    }

    pub fn basis(&self, model: &Pvass) -> Antichain<Marking> {
        let vars = model.var_names.len();
        match &self.controls {
            Some(controls) => Antichain::from_elements(
                controls.iter().map(|&q| Marking::new(q, vec![0; vars])),
            ),
            None => Antichain::from_elements(self.basis.iter().cloned()),
        }
    }

    pub fn describe(&self, model: &Pvass) -> String {
        match &self.controls {
            Some(controls) => format!(
                "control states {{{}}}",
                controls
                    .iter()
                    .map(|&q| model.control_names[q].as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            None => format!("upward closure of {} markings", self.basis.len()),
        }
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(q{}, {:?})", self.control, self.valuation)
    }
}

/// The Markov chain induced by a PVASS with a fixed upward-closed target.
pub struct PvassChain<'a> {
    model: &'a Pvass,
    target_basis: Antichain<Marking>,
    pre_star: Antichain<Marking>,
}

impl EffectiveChain for PvassChain<'_> {
    type State = Marking;

    fn initial(&self) -> Marking {
        self.model.initial.clone()
    }

    fn successors(&self, state: &Marking) -> Distribution<Marking> {
        self.model
            .successors(state)
            .expect("validated model has no deadlocks")
    }

    fn in_target(&self, state: &Marking) -> bool {
        self.target_basis.covers(state)
    }

    fn in_avoid(&self, state: &Marking) -> bool {
        !self.pre_star.covers(state)
    }

    // in_avoid2 stays None: deciding membership in the doubly-unreachable
    // set is not supported for counter systems.
}
