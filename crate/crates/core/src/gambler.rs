//! The gambler's-ruin chain: the standard worked example of a chain whose
//! decisiveness depends on a parameter.
//!
//! States are the naturals; from `i >= 1` the chain moves up with
//! probability `x` and down with probability `1 - x`; state 0 is absorbing.
//! The target set is `{0}`. For `x < 1` every state can reach 0, so the
//! avoid set is empty; for `x > 1/2` the chain is therefore not decisive
//! w.r.t. `{0}` and the probability of ruin from 1 is `(1 - x) / x`.

use num_traits::One;

use crate::chain::{Distribution, EffectiveChain};
use crate::rational::Rational;

#[derive(Debug, Clone)]
pub struct Gambler {
    up: Rational,
}

impl Gambler {
    /// `up` is the probability of moving from `i` to `i + 1`; must lie in
    /// the open interval `(0, 1)`.
    pub fn new(up: Rational) -> Self {
        assert!(
            up > Rational::new(0.into(), 1.into()) && up < Rational::one(),
            "up-probability must lie in (0, 1)"
        );
        Gambler { up }
    }
}

impl EffectiveChain for Gambler {
    type State = u64;

    fn initial(&self) -> u64 {
        1
    }

    fn successors(&self, state: &u64) -> Distribution<u64> {
        if *state == 0 {
            return Distribution::singleton(0);
        }
        let down = Rational::one() - &self.up;
        Distribution::try_new(vec![(state + 1, self.up.clone()), (state - 1, down)])
            .expect("gambler probabilities sum to 1")
    }

    fn in_target(&self, state: &u64) -> bool {
        *state == 0
    }

    fn in_avoid(&self, _state: &u64) -> bool {
        // 0 is reachable from every state for up < 1.
        false
    }
}
