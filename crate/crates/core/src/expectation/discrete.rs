//! Exact expectations for finite distributions by enumerating adversary
//! multisets through the mechanism itself.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::{DiffByK, Scenario};
use crate::distributions::{Atom, TypeModel, ValueDistribution};
use crate::mechanism::{focal_utility, Bid, Demand};
use crate::polynomial::RatPoly;
use crate::rational::{binomial_q, Rational};
use crate::{Error, Result};

/// Upper bound on `(|F1| + |F2|)^ñ`.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Count vectors of length `n_atoms` summing to `size`, in lexicographic order.
fn compositions(n_atoms: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n_atoms];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for c in (0..=left).rev() {
            cur[i] = c;
            rec(i + 1, left - c, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, size, &mut cur, &mut out);
    out
}

/// Probability of a count vector under i.i.d. draws, and the bids it stands for.
fn weighted_bids(atoms: &[Atom], counts: &[usize], demand: Demand) -> (Rational, Vec<Bid>) {
    let mut left = counts.iter().sum::<usize>() as u64;
    let mut w = Rational::one();
    let mut bids = Vec::new();
    for (a, &c) in atoms.iter().zip(counts) {
        w *= binomial_q(left, c as u64);
        left -= c as u64;
        for _ in 0..c {
            w *= &a.prob;
            bids.push(Bid {
                demand,
                value: a.value.clone(),
            });
        }
    }
    (w, bids)
}

fn atoms_of(d: &ValueDistribution) -> Result<&[Atom]> {
    d.atoms().ok_or(Error::UnsupportedDistribution(
        "enumeration needs discrete distributions",
    ))
}

pub fn discrete_diff_by_k(model: &TypeModel, scenario: &Scenario) -> Result<DiffByK> {
    let a1 = atoms_of(&model.f1)?;
    let a2 = atoms_of(&model.f2)?;
    let nt = scenario.n_tilde();
    let base = (a1.len() + a2.len()) as u128;
    let terms = (0..nt).try_fold(1u128, |acc, _| acc.checked_mul(base));
    match terms {
        Some(t) if t <= ENUMERATION_LIMIT => {}
        t => {
            return Err(Error::EnumerationTooLarge {
                terms: t.unwrap_or(u128::MAX),
                limit: ENUMERATION_LIMIT,
            })
        }
    }
    let truth = scenario.truthful().report();
    let attack = scenario.report();
    let mut per_k = Vec::with_capacity(nt + 1);
    for k in 0..=nt {
        let ones: Vec<_> = compositions(a1.len(), k)
            .iter()
            .map(|c| weighted_bids(a1, c, Demand::One))
            .collect();
        let twos: Vec<_> = compositions(a2.len(), nt - k)
            .iter()
            .map(|c| weighted_bids(a2, c, Demand::Two))
            .collect();
        let mut acc = Rational::zero();
        let mut profile = Vec::with_capacity(nt);
        for (w1, b1) in &ones {
            for (w2, b2) in &twos {
                profile.clear();
                profile.extend_from_slice(b1);
                profile.extend_from_slice(b2);
                let d = focal_utility(&truth, &profile) - focal_utility(&attack, &profile);
                if !d.is_zero() {
                    acc += w1 * w2 * d;
                }
            }
        }
        per_k.push(acc);
    }
    Ok(DiffByK::from_per_k(scenario.n, per_k))
}

/// Truth-minus-attack expected utility as a polynomial in `q`.
pub fn discrete_expected_diff(model: &TypeModel, scenario: &Scenario) -> Result<RatPoly> {
    Ok(discrete_diff_by_k(model, scenario)?.q_poly)
}
