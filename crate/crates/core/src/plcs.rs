//! Probabilistic lossy channel systems: loss/discrete composed chain
//! semantics, lossy backward coverability, and the four qualitative
//! deciders.
//!
//! A configuration is a control state plus one finite message word per
//! channel. Every Markov-chain step fires one weighted discrete transition
//! and then subjects every message to independent loss with rate `lambda`;
//! one extra loss phase precedes the very first discrete step, so runs
//! observe configurations after losses. Configurations are ordered by
//! control-state equality and per-channel subword embedding; under this
//! order the predecessor set of any upward-closed set is upward-closed,
//! which the deciders exploit.

use std::fmt;

use num_traits::One;
use thiserror::Error;

use crate::chain::{DecisivenessCertificate, Distribution, EffectiveChain, TriBool};
use crate::rational::{pow, rat_int, Rational};
use crate::wqo::{
    saturate_pre, saturate_pre_filtered, subword_leq, Antichain, SaturationError,
    SaturationResult, Wqo, DEFAULT_BASIS_LIMIT,
};

/// Message symbol: an index into the model's message alphabet.
pub type Msg = u8;

/// A global configuration: control state and per-channel contents, head of
/// each word being the next message to be received.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub control: usize,
    pub contents: Vec<Vec<Msg>>,
}

impl Config {
    pub fn new(control: usize, contents: Vec<Vec<Msg>>) -> Self {
        Config { control, contents }
    }

    pub fn message_count(&self) -> usize {
        self.contents.iter().map(|w| w.len()).sum()
    }
}

impl Wqo for Config {
    fn leq(&self, other: &Self) -> bool {
        self.control == other.control
            && self
                .contents
                .iter()
                .zip(&other.contents)
                .all(|(a, b)| subword_leq(a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelOp {
    Nop,
    /// Append the message to the tail of the channel.
    Send { channel: usize, msg: Msg },
    /// Consume the message from the head of the channel; enabled only when
    /// the head matches.
    Recv { channel: usize, msg: Msg },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlcsTransition {
    pub src: usize,
    pub op: ChannelOp,
    pub dst: usize,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plcs {
    pub control_names: Vec<String>,
    pub channel_names: Vec<String>,
    pub message_names: Vec<char>,
    pub transitions: Vec<PlcsTransition>,
    pub lambda: Rational,
    pub initial: Config,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlcsError {
    #[error("loss rate must satisfy 0 < lambda < 1, got {0}")]
    BadLossRate(Rational),
    #[error("transition weight must be positive")]
    ZeroWeight,
    #[error("control state {0} has no always-enabled transition (deadlock); rerun with auto self-loops enabled")]
    Deadlock(String),
    #[error("configuration is malformed: {0}")]
    MalformedState(String),
    #[error("index out of range: {0}")]
    BadIndex(String),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
}

impl Plcs {
    /// Validates structural invariants. With `auto_selfloop`, control
    /// states whose every transition is a receive get a weight-1 nop
    /// self-loop; otherwise such states are rejected as deadlocks.
    pub fn validate(mut self, auto_selfloop: bool) -> Result<Self, PlcsError> {
        if self.lambda <= rat_int(0) || self.lambda >= Rational::one() {
            return Err(PlcsError::BadLossRate(self.lambda.clone()));
        }
        let states = self.control_names.len();
        let channels = self.channel_names.len();
        let messages = self.message_names.len();
        if self.initial.control >= states || self.initial.contents.len() != channels {
            return Err(PlcsError::MalformedState("initial configuration".into()));
        }
        for w in &self.initial.contents {
            if w.iter().any(|&m| m as usize >= messages) {
                return Err(PlcsError::MalformedState("initial channel word".into()));
            }
        }
        for t in &self.transitions {
            if t.weight == 0 {
                return Err(PlcsError::ZeroWeight);
            }
            if t.src >= states || t.dst >= states {
                return Err(PlcsError::BadIndex(format!("transition {t:?}")));
            }
            match t.op {
                ChannelOp::Nop => {}
                ChannelOp::Send { channel, msg } | ChannelOp::Recv { channel, msg } => {
                    if channel >= channels || msg as usize >= messages {
                        return Err(PlcsError::BadIndex(format!("transition {t:?}")));
                    }
                }
            }
        }
        for s in 0..states {
            let always_enabled = self
                .transitions
                .iter()
                .any(|t| t.src == s && !matches!(t.op, ChannelOp::Recv { .. }));
            if !always_enabled {
                if auto_selfloop {
                    self.transitions.push(PlcsTransition {
                        src: s,
                        op: ChannelOp::Nop,
                        dst: s,
                        weight: 1,
                    });
                } else {
                    return Err(PlcsError::Deadlock(self.control_names[s].clone()));
                }
            }
        }
        Ok(self)
    }

    pub fn control_index(&self, name: &str) -> Option<usize> {
        self.control_names.iter().position(|n| n == name)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|n| n == name)
    }

    pub fn message_index(&self, symbol: char) -> Option<Msg> {
        self.message_names
            .iter()
            .position(|&c| c == symbol)
            .map(|i| i as Msg)
    }

    fn enabled<'a>(
        &'a self,
        cfg: &'a Config,
    ) -> impl Iterator<Item = &'a PlcsTransition> + 'a {
        self.transitions.iter().filter(move |t| {
            t.src == cfg.control
                && match t.op {
                    ChannelOp::Recv { channel, msg } => {
                        cfg.contents[channel].first() == Some(&msg)
                    }
                    _ => true,
                }
        })
    }

    fn apply(t: &PlcsTransition, cfg: &Config) -> Config {
        let mut contents = cfg.contents.clone();
        match t.op {
            ChannelOp::Nop => {}
            ChannelOp::Send { channel, msg } => contents[channel].push(msg),
            ChannelOp::Recv { channel, .. } => {
                contents[channel].remove(0);
            }
        }
        Config {
            control: t.dst,
            contents,
        }
    }
}

/// Per-channel map from kept subsequence to its number of distinct
/// embeddings into the original word. Built by scanning the word once,
/// branching on keep/lose per position; duplicate subsequences merge, so
/// the map size is the number of distinct subwords rather than `2^n`.
fn subword_embedding_counts(word: &[Msg]) -> Vec<(Vec<Msg>, u64)> {
    let mut counts: Vec<(Vec<Msg>, u64)> = vec![(Vec::new(), 1)];
    for &c in word {
        let mut next: Vec<(Vec<Msg>, u64)> = Vec::with_capacity(counts.len() * 2);
        for (sub, k) in counts {
            // lose c
            merge_count(&mut next, sub.clone(), k);
            // keep c
            let mut kept = sub;
            kept.push(c);
            merge_count(&mut next, kept, k);
        }
        counts = next;
    }
    counts
}

fn merge_count(acc: &mut Vec<(Vec<Msg>, u64)>, key: Vec<Msg>, k: u64) {
    match acc.iter_mut().find(|(s, _)| *s == key) {
        Some((_, existing)) => *existing += k,
        None => acc.push((key, k)),
    }
}

/// Distribution of one loss phase on `cfg`: every message is independently
/// lost with probability `lambda`. The probability of a particular result
/// is `a * lambda^b * (1 - lambda)^c` where `a` is the number of ways to
/// obtain it, `b` the number of lost messages and `c` the number kept.
pub fn loss_distribution(cfg: &Config, lambda: &Rational) -> Distribution<Config> {
    let keep = Rational::one() - lambda;
    // Per-channel outcome tables, then their product across channels.
    let tables: Vec<Vec<(Vec<Msg>, u64)>> = cfg
        .contents
        .iter()
        .map(|w| subword_embedding_counts(w))
        .collect();
    let mut outcomes: Vec<(Vec<Vec<Msg>>, u64)> = vec![(Vec::new(), 1)];
    for table in &tables {
        let mut next = Vec::with_capacity(outcomes.len() * table.len());
        for (prefix, a) in &outcomes {
            for (sub, k) in table {
                let mut contents = prefix.clone();
                contents.push(sub.clone());
                next.push((contents, a * k));
            }
        }
        outcomes = next;
    }
    let total: usize = cfg.message_count();
    let entries = outcomes
        .into_iter()
        .map(|(contents, a)| {
            let kept: usize = contents.iter().map(|w| w.len()).sum();
            let lost = total - kept;
            let p = rat_int(a as i64) * pow(lambda, lost) * pow(&keep, kept);
            (
                Config {
                    control: cfg.control,
                    contents,
                },
                p,
            )
        })
        .collect();
    Distribution::try_new(entries).expect("loss outcomes form a distribution")
}

impl Plcs {
    /// One Markov-chain step from `cfg`: a weighted discrete transition
    /// followed by one loss phase on its result. The chain's first step
    /// from the initial configuration is preceded by one extra loss phase;
    /// see [`PlcsChain`].
    pub fn step_distribution(&self, cfg: &Config) -> Result<Distribution<Config>, PlcsError> {
        if cfg.control >= self.control_names.len()
            || cfg.contents.len() != self.channel_names.len()
        {
            return Err(PlcsError::MalformedState(format!("{cfg:?}")));
        }
        let discrete: Vec<(Config, Rational)> = self
            .enabled(cfg)
            .map(|t| (Self::apply(t, cfg), rat_int(t.weight as i64)))
            .collect();
        if discrete.is_empty() {
            return Err(PlcsError::MalformedState(format!("deadlock at {cfg:?}")));
        }
        let discrete = Distribution::from_weighted(discrete)
            .map_err(|_| PlcsError::MalformedState(format!("{cfg:?}")))?;
        let mut composed: Vec<(Config, Rational)> = Vec::new();
        for (mid, p) in discrete.iter() {
            for (out, q) in loss_distribution(mid, &self.lambda).iter() {
                composed.push((out.clone(), p * q));
            }
        }
        Distribution::from_weighted(composed)
            .map_err(|_| PlcsError::MalformedState(format!("{cfg:?}")))
    }

    /// The unique minimal configuration whose `t`-step (discrete, with
    /// losses allowed afterwards) covers `target_min`; `None` on control
    /// mismatch.
    pub fn min_pre_lcs(&self, t: &PlcsTransition, target_min: &Config) -> Option<Config> {
        if t.dst != target_min.control {
            return None;
        }
        let mut contents = target_min.contents.clone();
        match t.op {
            ChannelOp::Nop => {}
            ChannelOp::Recv { channel, msg } => {
                contents[channel].insert(0, msg);
            }
            ChannelOp::Send { channel, msg } => {
                // If the target ends with the sent message the send can
                // account for it; otherwise the sent message was lost.
                if contents[channel].last() == Some(&msg) {
                    contents[channel].pop();
                }
            }
        }
        Some(Config {
            control: t.src,
            contents,
        })
    }

    /// Basis of `Pre*` of the upward-closed set generated by `basis` in
    /// lossy semantics. Loss steps never add predecessors of an
    /// upward-closed set (any superword is already covered), so saturation
    /// over discrete minimal predecessors is complete.
    pub fn pre_star_upward(
        &self,
        basis: Antichain<Config>,
    ) -> Result<SaturationResult<Config>, PlcsError> {
        Ok(saturate_pre(
            basis,
            |cfg| {
                self.transitions
                    .iter()
                    .filter_map(|t| self.min_pre_lcs(t, cfg))
                    .collect()
            },
            DEFAULT_BASIS_LIMIT,
        )?)
    }

    /// Control states `q` whose empty-channel configuration lies outside
    /// the upward-closed set with the given `Pre*` basis. These are the
    /// bottoms of the downward-closed complement: the complement is
    /// nonempty at `q` exactly when `(q, empty)` is in it.
    pub fn bottom_states(&self, pre_star_basis: &Antichain<Config>) -> Vec<usize> {
        let empty = vec![Vec::new(); self.channel_names.len()];
        (0..self.control_names.len())
            .filter(|&q| !pre_star_basis.covers(&Config::new(q, empty.clone())))
            .collect()
    }

    fn q_state_basis(&self, controls: &[usize]) -> Antichain<Config> {
        let empty = vec![Vec::new(); self.channel_names.len()];
        Antichain::from_elements(
            controls
                .iter()
                .map(|&q| Config::new(q, empty.clone())),
        )
    }

    /// Qualitative decider; exact for every upward-closed target, never
    /// unknown.
    ///
    /// * reach-zero: the initial configuration is outside `Pre*(F)`.
    /// * reach-one: no configuration below the initial one can reach the
    ///   complement of `Pre*(F)` while avoiding `F`; the constrained
    ///   fixpoint is seeded with the complement's control-state bottoms
    ///   (whose upward closure equals the upward closure of the
    ///   complement, because losses can always drop extra messages and no
    ///   complement member lies in `F`).
    /// * repeat-one: the complement of `Pre*(F)` is unreachable outright.
    /// * repeat-zero: the doubly-unreachable set is unreachable.
    pub fn qual_decide(
        &self,
        init: &Config,
        target: &PlcsTarget,
        query: QualQuery,
    ) -> Result<TriBool, PlcsError> {
        let f_basis = target.basis(self);
        let pre_f = self.pre_star_upward(f_basis.clone())?.basis;
        let verdict = match query {
            QualQuery::ReachZero => !pre_f.covers(init),
            QualQuery::ReachOne => {
                let q_err = self.bottom_states(&pre_f);
                let seed = self.q_state_basis(&q_err);
                let x = saturate_pre_filtered(
                    seed,
                    |cfg| {
                        self.transitions
                            .iter()
                            .filter_map(|t| self.min_pre_lcs(t, cfg))
                            .collect()
                    },
                    |cfg| !f_basis.covers(cfg),
                    DEFAULT_BASIS_LIMIT,
                )?;
                !x.basis.covers(init)
            }
            QualQuery::RepeatOne => {
                let q_err = self.bottom_states(&pre_f);
                let pre_avoid = self.pre_star_upward(self.q_state_basis(&q_err))?.basis;
                !pre_avoid.covers(init)
            }
            QualQuery::RepeatZero => {
                let q_err = self.bottom_states(&pre_f);
                let pre_avoid = self.pre_star_upward(self.q_state_basis(&q_err))?.basis;
                let q2 = self.bottom_states(&pre_avoid);
                let pre_avoid2 = self.pre_star_upward(self.q_state_basis(&q2))?.basis;
                !pre_avoid2.covers(init)
            }
        };
        Ok(if verdict { TriBool::Holds } else { TriBool::Fails })
    }

    /// Decisiveness evidence: lossy channel chains almost surely keep
    /// returning to the finite set of empty-channel configurations, which
    /// makes them decisive with respect to every target set.
    pub fn decisiveness_certificate(&self, target: &PlcsTarget) -> DecisivenessCertificate {
        DecisivenessCertificate::finite_attractor(
            format!(
                "the {} empty-channel configurations are almost surely revisited: every loss \
                 phase empties each channel with positive probability bounded away from zero",
                self.control_names.len()
            ),
            target.describe(self),
        )
    }

    /// The induced chain for an upward-closed target: precomputes the
    /// coverability sets backing the target, avoid and doubly-unreachable
    /// membership oracles.
    pub fn chain(&self, target: &PlcsTarget) -> Result<PlcsChain<'_>, PlcsError> {
        let f_basis = target.basis(self);
        let pre_f = self.pre_star_upward(f_basis.clone())?.basis;
        let q_err = self.bottom_states(&pre_f);
        let pre_avoid = self.pre_star_upward(self.q_state_basis(&q_err))?.basis;
        Ok(PlcsChain {
            model: self,
            target_basis: f_basis,
            pre_f,
            pre_avoid,
        })
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

/// An upward-closed target set of configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlcsTarget {
    /// All configurations with a control state in the set.
    QStates(Vec<usize>),
    /// Upward closure (subword order per channel) of basis configurations.
    Upward(Vec<Config>),
}

impl PlcsTarget {
    pub fn basis(&self, model: &Plcs) -> Antichain<Config> {
        match self {
            PlcsTarget::QStates(controls) => model.q_state_basis(controls),
            PlcsTarget::Upward(basis) => Antichain::from_elements(basis.iter().cloned()),
        }
    }

    pub fn describe(&self, model: &Plcs) -> String {
        match self {
            PlcsTarget::QStates(controls) => format!(
                "control states {{{}}}",
                controls
                    .iter()
                    .map(|&q| model.control_names[q].as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            PlcsTarget::Upward(basis) => {
                format!("upward closure of {} configurations", basis.len())
            }
        }
    }
}

/// State of the induced chain. `Start` sits before the leading loss phase:
/// its successor distribution is the loss distribution of the initial
/// configuration, and it is classified as neither target nor avoid so that
/// all probability mass is measured on post-loss configurations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlcsState {
    Start,
    Cfg(Config),
}

impl fmt::Display for PlcsState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlcsState::Start => write!(f, "start"),
            PlcsState::Cfg(c) => write!(f, "(q{}, {:?})", c.control, c.contents),
        }
    }
}

/// The Markov chain induced by a lossy channel system with a fixed
/// upward-closed target.
pub struct PlcsChain<'a> {
    model: &'a Plcs,
    target_basis: Antichain<Config>,
    /// Basis of the configurations that can reach the target.
    pre_f: Antichain<Config>,
    /// Basis of the configurations that can reach the avoid set.
    pre_avoid: Antichain<Config>,
}

impl EffectiveChain for PlcsChain<'_> {
    type State = PlcsState;

    fn initial(&self) -> PlcsState {
        PlcsState::Start
    }

    fn successors(&self, state: &PlcsState) -> Distribution<PlcsState> {
        let dist = match state {
            PlcsState::Start => loss_distribution(&self.model.initial, &self.model.lambda),
            PlcsState::Cfg(cfg) => self
                .model
                .step_distribution(cfg)
                .expect("validated model has no deadlocks"),
        };
        Distribution::from_entries_unchecked(
            dist.entries()
                .iter()
                .map(|(c, p)| (PlcsState::Cfg(c.clone()), p.clone()))
                .collect(),
        )
    }

    fn in_target(&self, state: &PlcsState) -> bool {
        match state {
            PlcsState::Start => false,
            PlcsState::Cfg(cfg) => self.target_basis.covers(cfg),
        }
    }

    fn in_avoid(&self, state: &PlcsState) -> bool {
        match state {
            PlcsState::Start => false,
            PlcsState::Cfg(cfg) => !self.pre_f.covers(cfg),
        }
    }

    fn in_avoid2(&self, state: &PlcsState) -> Option<bool> {
        Some(match state {
            PlcsState::Start => false,
            PlcsState::Cfg(cfg) => !self.pre_avoid.covers(cfg),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn msgs(s: &str) -> Vec<Msg> {
        s.bytes().map(|b| (b - b'a') as Msg).collect()
    }

    /// One control state with a nop self-loop, one channel, messages a, b.
    fn one_state(lambda: Rational) -> Plcs {
        Plcs {
            control_names: vec!["q".into()],
            channel_names: vec!["c".into()],
            message_names: vec!['a', 'b'],
            transitions: vec![PlcsTransition {
                src: 0,
                op: ChannelOp::Nop,
                dst: 0,
                weight: 1,
            }],
            lambda,
            initial: Config::new(0, vec![vec![]]),
        }
        .validate(false)
        .unwrap()
    }

    #[test]
    fn loss_distribution_examples() {
        let cfg = Config::new(0, vec![msgs("aa")]);
        let d = loss_distribution(&cfg, &rat(1, 2));
        assert_eq!(d.probability_of(&Config::new(0, vec![msgs("aa")])), rat(1, 4));
        assert_eq!(d.probability_of(&Config::new(0, vec![msgs("a")])), rat(1, 2));
        assert_eq!(d.probability_of(&Config::new(0, vec![vec![]])), rat(1, 4));

        let empty = Config::new(0, vec![vec![], vec![]]);
        let d = loss_distribution(&empty, &rat(1, 3));
        assert_eq!(d.entries(), &[(empty.clone(), rat_int(1))]);

        let cfg = Config::new(0, vec![msgs("ab")]);
        let d = loss_distribution(&cfg, &rat(1, 3));
        assert_eq!(d.probability_of(&Config::new(0, vec![msgs("ab")])), rat(4, 9));
        assert_eq!(d.probability_of(&Config::new(0, vec![msgs("a")])), rat(2, 9));
        assert_eq!(d.probability_of(&Config::new(0, vec![msgs("b")])), rat(2, 9));
        assert_eq!(d.probability_of(&Config::new(0, vec![vec![]])), rat(1, 9));
    }

    #[test]
    fn step_distribution_examples() {
        // nop self-loop with content "a": keep or lose.
        let m = one_state(rat(1, 2));
        let d = m
            .step_distribution(&Config::new(0, vec![msgs("a")]))
            .unwrap();
        assert_eq!(d.probability_of(&Config::new(0, vec![msgs("a")])), rat(1, 2));
        assert_eq!(d.probability_of(&Config::new(0, vec![vec![]])), rat(1, 2));

        // send onto an empty channel: the sent message may be lost.
        let m = Plcs {
            control_names: vec!["q".into(), "r".into()],
            channel_names: vec!["c".into()],
            message_names: vec!['a'],
            transitions: vec![
                PlcsTransition { src: 0, op: ChannelOp::Send { channel: 0, msg: 0 }, dst: 1, weight: 1 },
                PlcsTransition { src: 1, op: ChannelOp::Nop, dst: 1, weight: 1 },
            ],
            lambda: rat(1, 2),
            initial: Config::new(0, vec![vec![]]),
        }
        .validate(false)
        .unwrap();
        let d = m.step_distribution(&Config::new(0, vec![vec![]])).unwrap();
        assert_eq!(d.probability_of(&Config::new(1, vec![msgs("a")])), rat(1, 2));
        assert_eq!(d.probability_of(&Config::new(1, vec![vec![]])), rat(1, 2));

        // two nops with weights 1 and 3, empty channels: pure weight split.
        let m = Plcs {
            control_names: vec!["p".into(), "q1".into(), "q2".into()],
            channel_names: vec!["c".into()],
            message_names: vec!['a'],
            transitions: vec![
                PlcsTransition { src: 0, op: ChannelOp::Nop, dst: 1, weight: 1 },
                PlcsTransition { src: 0, op: ChannelOp::Nop, dst: 2, weight: 3 },
                PlcsTransition { src: 1, op: ChannelOp::Nop, dst: 1, weight: 1 },
                PlcsTransition { src: 2, op: ChannelOp::Nop, dst: 2, weight: 1 },
            ],
            lambda: rat(1, 2),
            initial: Config::new(0, vec![vec![]]),
        }
        .validate(false)
        .unwrap();
        let d = m.step_distribution(&Config::new(0, vec![vec![]])).unwrap();
        assert_eq!(d.probability_of(&Config::new(1, vec![vec![]])), rat(1, 4));
        assert_eq!(d.probability_of(&Config::new(2, vec![vec![]])), rat(3, 4));
    }

    #[test]
    fn min_pre_examples() {
        let m = Plcs {
            control_names: vec!["p".into(), "q".into()],
            channel_names: vec!["c".into()],
            message_names: vec!['a', 'b'],
            transitions: vec![
                PlcsTransition { src: 0, op: ChannelOp::Recv { channel: 0, msg: 0 }, dst: 1, weight: 1 },
                PlcsTransition { src: 0, op: ChannelOp::Send { channel: 0, msg: 0 }, dst: 1, weight: 1 },
                PlcsTransition { src: 0, op: ChannelOp::Nop, dst: 0, weight: 1 },
                PlcsTransition { src: 1, op: ChannelOp::Nop, dst: 1, weight: 1 },
            ],
            lambda: rat(1, 2),
            initial: Config::new(0, vec![vec![]]),
        }
        .validate(false)
        .unwrap();
        let recv = &m.transitions[0];
        let send = &m.transitions[1];
        // Reversing a receive prepends the consumed message.
        assert_eq!(
            m.min_pre_lcs(recv, &Config::new(1, vec![msgs("b")])),
            Some(Config::new(0, vec![msgs("ab")]))
        );
        // Reversing a send strips the trailing sent symbol...
        assert_eq!(
            m.min_pre_lcs(send, &Config::new(1, vec![msgs("ba")])),
            Some(Config::new(0, vec![msgs("b")]))
        );
        // ...unless it is absent, in which case it was lost.
        assert_eq!(
            m.min_pre_lcs(send, &Config::new(1, vec![msgs("b")])),
            Some(Config::new(0, vec![msgs("b")]))
        );
    }

    #[test]
    fn bottom_states_examples() {
        let m = one_state(rat(1, 2));
        // Empty upward set: every control is a bottom of the complement.
        assert_eq!(m.bottom_states(&Antichain::new()), vec![0]);
        // Whole space: no bottoms.
        let all = m.q_state_basis(&[0]);
        assert!(m.bottom_states(&all).is_empty());

        let m2 = Plcs {
            control_names: vec!["q1".into(), "q2".into()],
            channel_names: vec!["c".into()],
            message_names: vec!['a'],
            transitions: vec![
                PlcsTransition { src: 0, op: ChannelOp::Nop, dst: 0, weight: 1 },
                PlcsTransition { src: 1, op: ChannelOp::Nop, dst: 1, weight: 1 },
            ],
            lambda: rat(1, 2),
            initial: Config::new(0, vec![vec![]]),
        }
        .validate(false)
        .unwrap();
        let basis = Antichain::from_elements(vec![Config::new(0, vec![msgs("a")])]);
        assert_eq!(m2.bottom_states(&basis), vec![0, 1]);
    }

    #[test]
    fn qual_decide_examples() {
        // Single state, nop loop, F = everything.
        let m = one_state(rat(1, 2));
        let init = Config::new(0, vec![vec![]]);
        let everything = PlcsTarget::QStates(vec![0]);
        assert_eq!(
            m.qual_decide(&init, &everything, QualQuery::ReachOne).unwrap(),
            TriBool::Holds
        );
        assert_eq!(
            m.qual_decide(&init, &everything, QualQuery::RepeatOne).unwrap(),
            TriBool::Holds
        );
        assert_eq!(
            m.qual_decide(&init, &everything, QualQuery::ReachZero).unwrap(),
            TriBool::Fails
        );

        // p -> q (nop), q absorbing: from p both reach-one and repeat-one.
        let m = Plcs {
            control_names: vec!["p".into(), "q".into()],
            channel_names: vec!["c".into()],
            message_names: vec!['a'],
            transitions: vec![
                PlcsTransition { src: 0, op: ChannelOp::Nop, dst: 1, weight: 1 },
                PlcsTransition { src: 1, op: ChannelOp::Nop, dst: 1, weight: 1 },
            ],
            lambda: rat(1, 2),
            initial: Config::new(0, vec![vec![]]),
        }
        .validate(false)
        .unwrap();
        let init = Config::new(0, vec![vec![]]);
        let q_states = PlcsTarget::QStates(vec![1]);
        assert_eq!(
            m.qual_decide(&init, &q_states, QualQuery::ReachOne).unwrap(),
            TriBool::Holds
        );
        assert_eq!(
            m.qual_decide(&init, &q_states, QualQuery::RepeatOne).unwrap(),
            TriBool::Holds
        );

        // F requires a message that nobody ever sends.
        let m = one_state(rat(1, 2));
        let unreachable_target =
            PlcsTarget::Upward(vec![Config::new(0, vec![msgs("a")])]);
        assert_eq!(
            m.qual_decide(&init, &unreachable_target, QualQuery::ReachZero)
                .unwrap(),
            TriBool::Holds
        );
    }

    #[test]
    fn chain_has_leading_loss() {
        let m = Plcs {
            control_names: vec!["q".into()],
            channel_names: vec!["c".into()],
            message_names: vec!['a'],
            transitions: vec![PlcsTransition {
                src: 0,
                op: ChannelOp::Nop,
                dst: 0,
                weight: 1,
            }],
            lambda: rat(1, 2),
            initial: Config::new(0, vec![msgs("a")]),
        }
        .validate(false)
        .unwrap();
        let target = PlcsTarget::Upward(vec![Config::new(0, vec![msgs("a")])]);
        let chain = m.chain(&target).unwrap();
        let d = chain.successors(&PlcsState::Start);
        // The initial message is lost before the first discrete step with
        // probability 1/2.
        assert_eq!(
            d.probability_of(&PlcsState::Cfg(Config::new(0, vec![vec![]]))),
            rat(1, 2)
        );
        assert!(!chain.in_target(&PlcsState::Start));
    }

    proptest! {
        // The loss law sums to one and successor configs embed into the
        // original for random configurations.
        #[test]
        fn loss_sums_to_one(
            word_a in proptest::collection::vec(0u8..2, 0..5),
            word_b in proptest::collection::vec(0u8..2, 0..4),
            num in 1i64..6,
        ) {
            let lambda = rat(num, 7);
            let cfg = Config::new(0, vec![word_a, word_b]);
            let d = loss_distribution(&cfg, &lambda);
            prop_assert!(d.total().is_one());
            for (c, _) in d.iter() {
                prop_assert!(c.leq(&cfg));
            }
        }

        // Coverage by Pre* is upward-closed over the subword order.
        #[test]
        fn pre_star_coverage_monotone(extra in proptest::collection::vec(0u8..2, 0..4)) {
            let m = Plcs {
                control_names: vec!["p".into(), "q".into()],
                channel_names: vec!["c".into()],
                message_names: vec!['a', 'b'],
                transitions: vec![
                    PlcsTransition { src: 0, op: ChannelOp::Recv { channel: 0, msg: 0 }, dst: 1, weight: 1 },
                    PlcsTransition { src: 0, op: ChannelOp::Nop, dst: 0, weight: 1 },
                    PlcsTransition { src: 1, op: ChannelOp::Nop, dst: 1, weight: 1 },
                ],
                lambda: rat(1, 2),
                initial: Config::new(0, vec![vec![]]),
            }
            .validate(false)
            .unwrap();
            let basis = Antichain::from_elements(vec![Config::new(1, vec![vec![1]])]);
            let pre = m.pre_star_upward(basis).unwrap();
            let small = Config::new(0, vec![vec![0, 1]]);
            if pre.basis.covers(&small) {
                let mut bigger = small.clone();
                bigger.contents[0].extend(extra);
                prop_assert!(pre.basis.covers(&bigger));
            }
        }
    }
}
