//! Well-quasi-orders, antichain representations of upward-closed sets, and
//! the generic backward-saturation engine computing minimal elements of
//! `Pre*` of an upward-closed set.

use thiserror::Error;

/// A well-quasi-order on `Self`. `leq` must be reflexive and transitive;
/// well-quasi-orderedness (every infinite sequence contains a rising pair)
/// is assumed, not checked, and is what guarantees termination of
/// [`saturate_pre`].
pub trait Wqo: Sized {
    fn leq(&self, other: &Self) -> bool;
}

/// Componentwise order on equal-length natural vectors.
/// Panics on carrier mismatch (different lengths).
pub fn vector_leq(a: &[u64], b: &[u64]) -> bool {
    assert_eq!(a.len(), b.len(), "vector order: dimension mismatch");
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Subword (scattered substring) order: `a <= b` iff `a` embeds into `b`
/// as a not necessarily contiguous subsequence.
pub fn subword_leq<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

impl Wqo for Vec<u64> {
    fn leq(&self, other: &Self) -> bool {
        vector_leq(self, other)
    }
}

impl Wqo for u64 {
    fn leq(&self, other: &Self) -> bool {
        self <= other
    }
}

/// A finite set of pairwise-incomparable elements, canonically representing
/// the upward-closed set generated by them.
///
/// Two antichains represent the same upward-closed set iff each covers
/// every element of the other; compare with [`Antichain::same_upward_set`],
/// not with `==` on element vectors.
#[derive(Debug, Clone)]
pub struct Antichain<T: Wqo> {
    elements: Vec<T>,
}

impl<T: Wqo + Clone> Default for Antichain<T> {
    fn default() -> Self {
        Antichain::new()
    }
}

impl<T: Wqo + Clone> Antichain<T> {
    pub fn new() -> Self {
        Antichain {
            elements: Vec::new(),
        }
    }

    pub fn from_elements(elements: impl IntoIterator<Item = T>) -> Self {
        let mut ac = Antichain::new();
        for e in elements {
            ac.insert(e);
        }
        ac
    }

    /// Adds `x` to the represented set. If `x` is already covered, the
    /// antichain is unchanged and `false` is returned; otherwise `x` is
    /// inserted, every element above it removed, and `true` returned.
    pub fn insert(&mut self, x: T) -> bool {
        if self.covers(&x) {
            return false;
        }
        self.elements.retain(|y| !x.leq(y));
        self.elements.push(x);
        true
    }

    /// True iff `x` lies in the represented upward-closed set.
    pub fn covers(&self, x: &T) -> bool {
        self.elements.iter().any(|m| m.leq(x))
    }

    /// True iff both antichains represent the same upward-closed set.
    pub fn same_upward_set(&self, other: &Antichain<T>) -> bool {
        self.elements.iter().all(|e| other.covers(e))
            && other.elements.iter().all(|e| self.covers(e))
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Outcome of [`saturate_pre`]: the basis of the least fixpoint and the
/// number of saturation rounds until no new minimal element appeared. The
/// round count is the span of the system with respect to the input set:
/// every state that can reach the input set does so within `rounds` steps.
#[derive(Debug, Clone)]
pub struct SaturationResult<T: Wqo> {
    pub basis: Antichain<T>,
    pub rounds: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SaturationError {
    #[error("saturation basis exceeded the element limit of {limit}")]
    ResourceExhausted { limit: usize },
}

/// Default safety limit on the number of basis elements.
pub const DEFAULT_BASIS_LIMIT: usize = 1_000_000;

/// Computes the minimal elements of the least upward-closed set that
/// contains `basis` and is closed under `min_pre`.
///
/// `min_pre(e)` must return a finite basis of the minimal one-step
/// predecessors of the upward closure of `e`; soundness of that function is
/// the caller's obligation. Saturation is breadth-layered: each round
/// expands every current basis element, so `rounds` counts exactly the
/// breadth layers that contributed a new minimal element.
///
/// Termination is guaranteed by the well-quasi-order; the `limit` guards
/// against intractable instances.
pub fn saturate_pre<T: Wqo + Clone>(
    basis: Antichain<T>,
    min_pre: impl Fn(&T) -> Vec<T>,
    limit: usize,
) -> Result<SaturationResult<T>, SaturationError> {
    saturate_pre_filtered(basis, min_pre, |_| true, limit)
}

/// Like [`saturate_pre`] but discards candidate predecessors rejected by
/// `keep`. The seed basis is exempt from the filter. Used for
/// constrained-reachability fixpoints where predecessors inside a
/// forbidden set must not be traversed.
pub fn saturate_pre_filtered<T: Wqo + Clone>(
    basis: Antichain<T>,
    min_pre: impl Fn(&T) -> Vec<T>,
    keep: impl Fn(&T) -> bool,
    limit: usize,
) -> Result<SaturationResult<T>, SaturationError> {
    let mut current = basis;
    let mut rounds = 0;
    loop {
        let mut added = false;
        let candidates: Vec<T> = current
            .elements()
            .iter()
            .flat_map(|e| min_pre(e))
            .collect();
        for cand in candidates {
            if !keep(&cand) {
                continue;
            }
            if current.insert(cand) {
                added = true;
                if current.len() > limit {
                    return Err(SaturationError::ResourceExhausted { limit });
                }
            }
        }
        if !added {
            return Ok(SaturationResult {
                basis: current,
                rounds,
            });
        }
        rounds += 1;
    }
}
