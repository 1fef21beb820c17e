//! The two-item VCG auction over single-minded bids.
//!
//! Every function is generic over the value type so the exact pipeline can use
//! [`Rational`] while Monte Carlo runs on scaled integers.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::{Add, Sub};

use num_traits::{One, Zero};

use crate::rational::Rational;
use crate::{Error, Result};

/// Values the mechanism can compute with.
pub trait Amount: Clone + Ord + Zero + Add<Output = Self> + Sub<Output = Self> {}
impl<T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T>> Amount for T {}

/// Number of items a bid demands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Demand {
    One,
    Two,
}

impl Demand {
    pub fn from_u8(g: u8) -> Result<Self> {
        match g {
            1 => Ok(Demand::One),
            2 => Ok(Demand::Two),
            _ => Err(Error::InvalidBid(alloc::format!("demand must be 1 or 2, got {g}"))),
        }
    }

    pub fn items(self) -> u8 {
        match self {
            Demand::One => 1,
            Demand::Two => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bid<V = Rational> {
    pub demand: Demand,
    /// Per-item value.
    pub value: V,
}

impl Bid<Rational> {
    /// A bid with demand in {1, 2} and value in [0, 1].
    pub fn new(demand: u8, value: Rational) -> Result<Self> {
        let demand = Demand::from_u8(demand)?;
        if value < Rational::zero() || value > Rational::one() {
            return Err(Error::InvalidBid(alloc::format!(
                "value {value} outside [0, 1]"
            )));
        }
        Ok(Self { demand, value })
    }
}

impl<V: Amount> Bid<V> {
    pub fn one(value: V) -> Self {
        Self {
            demand: Demand::One,
            value,
        }
    }

    pub fn two(value: V) -> Self {
        Self {
            demand: Demand::Two,
            value,
        }
    }

    /// `demand · value`.
    pub fn worth(&self) -> V {
        match self.demand {
            Demand::One => self.value.clone(),
            Demand::Two => self.value.clone() + self.value.clone(),
        }
    }
}

pub type BidProfile<V = Rational> = Vec<Bid<V>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome<V = Rational> {
    /// Sorted ascending.
    pub winners: Vec<usize>,
    /// Sorted ascending.
    pub losers: Vec<usize>,
    pub welfare: V,
    pub payments: BTreeMap<usize, V>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocalReport<V = Rational> {
    pub true_type: Bid<V>,
    pub own_bids: Vec<Bid<V>>,
}

/// Best feasible set under the tie rule, skipping index `skip`.
///
/// Feasible sets are the empty set, any single bid, and any pair of 1-type
/// bids. Ties go to fewer winners, then to the lexicographically smallest
/// sorted index list; scanning in that order and replacing only on strict
/// improvement implements the rule.
fn best_set<V: Amount>(bids: &[Bid<V>], skip: Option<usize>) -> (V, Vec<usize>) {
    let mut best = V::zero();
    let mut set: Vec<usize> = Vec::new();
    let live = |i: usize| Some(i) != skip;
    for (i, b) in bids.iter().enumerate().filter(|(i, _)| live(*i)) {
        let w = b.worth();
        if w > best {
            best = w;
            set = alloc::vec![i];
        }
    }
    for (i, a) in bids.iter().enumerate() {
        if a.demand != Demand::One || !live(i) {
            continue;
        }
        for (j, b) in bids.iter().enumerate().skip(i + 1) {
            if b.demand != Demand::One || !live(j) {
                continue;
            }
            let w = a.value.clone() + b.value.clone();
            if w > best {
                best = w;
                set = alloc::vec![i, j];
            }
        }
    }
    (best, set)
}

pub fn social_welfare<V: Amount>(profile: &[Bid<V>]) -> V {
    best_set(profile, None).0
}

pub fn vcg_outcome<V: Amount>(profile: &[Bid<V>]) -> Outcome<V> {
    let (welfare, winners) = best_set(profile, None);
    let mut payments = BTreeMap::new();
    for &b in &winners {
        let without = best_set(profile, Some(b)).0;
        let others_with = welfare.clone() - profile[b].worth();
        payments.insert(b, without - others_with);
    }
    let losers = (0..profile.len()).filter(|i| !winners.contains(i)).collect();
    Outcome {
        winners,
        losers,
        welfare,
        payments,
    }
}

/// Quasi-linear utility of the focal bidder: own bids come first in the
/// concatenated profile.
pub fn focal_utility<V: Amount>(report: &FocalReport<V>, adversary_bids: &[Bid<V>]) -> V {
    let mut profile = report.own_bids.clone();
    profile.extend_from_slice(adversary_bids);
    let outcome = vcg_outcome(&profile);
    let mut items = 0u8;
    let mut paid = V::zero();
    for (&i, p) in &outcome.payments {
        if i < report.own_bids.len() {
            items += report.own_bids[i].demand.items();
            paid = paid + p.clone();
        }
    }
    if items >= report.true_type.demand.items() {
        report.true_type.worth() - paid
    } else {
        V::zero() - paid
    }
}
