//! Epoch permutations for the three sampling orders.
//!
//! `make_permutation` is a pure function of `(scheme, n, epoch)`:
//! incremental-gradient always yields the identity, single-shuffle yields one
//! seeded permutation reused every epoch, and random-reshuffle draws an
//! independent permutation per epoch from the stream `(seed, epoch)` (see
//! [`crate::seeding`] for the derivation rule). Shuffles are Fisher-Yates on
//! ChaCha8.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeding::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShufflingScheme {
    /// Fixed deterministic order 1..n every epoch.
    IncrementalGradient,
    /// One seeded permutation, identical across epochs.
    SingleShuffle { seed: u64 },
    /// A fresh seeded permutation per epoch.
    RandomReshuffle { seed: u64 },
}

impl ShufflingScheme {
    /// CLI short code: `ig`, `ss`, `rr`.
    pub fn code(&self) -> &'static str {
        match self {
            ShufflingScheme::IncrementalGradient => "ig",
            ShufflingScheme::SingleShuffle { .. } => "ss",
            ShufflingScheme::RandomReshuffle { .. } => "rr",
        }
    }

    pub fn from_code(code: &str, seed: u64) -> Option<Self> {
        match code {
            "ig" => Some(ShufflingScheme::IncrementalGradient),
            "ss" => Some(ShufflingScheme::SingleShuffle { seed }),
            "rr" => Some(ShufflingScheme::RandomReshuffle { seed }),
            _ => None,
        }
    }
}

/// A bijection of the component indices `0..n` (1-based in persisted traces).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Component visited at inner step `i` (0-based).
    pub fn at(&self, i: usize) -> usize {
        self.order[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    /// 1-based view for traces and reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.order.iter().map(|i| i + 1).collect()
    }

    /// Builds from an explicit 0-based order; panics if it is not a bijection.
    pub fn from_order(order: Vec<usize>) -> Self {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert!(
            sorted.iter().copied().eq(0..order.len()),
            "order must be a bijection of 0..n"
        );
        Self { order }
    }
}

/// Permutation for the given epoch (`epoch >= 1`).
pub fn make_permutation(scheme: ShufflingScheme, n: usize, epoch: usize) -> Permutation {
    assert!(n >= 1, "permutation of an empty index set");
    assert!(epoch >= 1, "epochs are 1-based");
    let order = match scheme {
        ShufflingScheme::IncrementalGradient => (0..n).collect(),
        ShufflingScheme::SingleShuffle { seed } => fisher_yates(n, seed, 0),
        ShufflingScheme::RandomReshuffle { seed } => fisher_yates(n, seed, epoch as u64),
    };
    Permutation { order }
}

fn fisher_yates(n: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, stream);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    order
}
