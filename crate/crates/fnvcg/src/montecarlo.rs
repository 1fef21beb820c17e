//! Sampling estimates of expected utility differences, computed through the
//! full mechanism rather than the reduced forms.
//!
//! Values are simulated as scaled integers: every draw is a multiple of
//! `1 / D` where `D` is the lcm of `2^53` and all denominators in play, so the
//! mechanism runs exactly on `i128`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use fnvcg_core::distributions::{
    sample_adversary_profile, AdversarySampler, Draw, TypeModel, ValueDistribution, DYADIC_BITS,
};
use fnvcg_core::expectation::{reduced_utility, Scenario, Strategy, TopStats};
use fnvcg_core::mechanism::{focal_utility, vcg_outcome, Bid, Demand, FocalReport};
use fnvcg_core::rational::{rat, Rational};
use fnvcg_core::{Error, Result};

/// Shards are fixed so results do not depend on the thread count.
pub const SHARDS: u64 = 64;
pub const MIN_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean − exact| <= k · stderr`.
    pub fn agrees_with(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.stderr
    }
}

struct Scale {
    d: i128,
    dyadic_factor: i128,
    atoms1: Vec<i128>,
    atoms2: Vec<i128>,
}

impl Scale {
    fn new(model: &TypeModel, extra: &[&Rational]) -> Result<Self> {
        let mut d = BigInt::one() << DYADIC_BITS;
        let mut all: Vec<&Rational> = extra.to_vec();
        for f in [&model.f1, &model.f2] {
            if let Some(atoms) = f.atoms() {
                all.extend(atoms.iter().map(|a| &a.value));
            }
        }
        for r in &all {
            d = d.lcm(r.denom());
        }
        if d.bits() > 100 {
            return Err(Error::InvalidParameter(
                "denominators too large for integer simulation".into(),
            ));
        }
        let di = d.to_i128().expect("checked size");
        let scale = |r: &Rational| -> i128 {
            (r * Rational::from_integer(d.clone()))
                .to_integer()
                .to_i128()
                .expect("checked size")
        };
        let atoms = |f: &ValueDistribution| -> Vec<i128> {
            f.atoms().map(|a| a.iter().map(|a| scale(&a.value)).collect()).unwrap_or_default()
        };
        Ok(Self {
            d: di,
            dyadic_factor: di >> DYADIC_BITS,
            atoms1: atoms(&model.f1),
            atoms2: atoms(&model.f2),
        })
    }

    fn rational(&self, r: &Rational) -> i128 {
        (r * Rational::from_integer(BigInt::from(self.d)))
            .to_integer()
            .to_i128()
            .expect("checked size")
    }

    fn draw(&self, demand: Demand, d: Draw) -> i128 {
        match (d, demand) {
            (Draw::Dyadic(k), _) => k as i128 * self.dyadic_factor,
            (Draw::Atom(i), Demand::One) => self.atoms1[i],
            (Draw::Atom(i), Demand::Two) => self.atoms2[i],
        }
    }
}

fn int_report(report: &FocalReport, scale: &Scale) -> FocalReport<i128> {
    let conv = |b: &Bid| Bid {
        demand: b.demand,
        value: scale.rational(&b.value),
    };
    FocalReport {
        true_type: conv(&report.true_type),
        own_bids: report.own_bids.iter().map(conv).collect(),
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    count: u64,
    sum: i128,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, diff: i128, d: f64) {
        self.count += 1;
        self.sum += diff;
        let x = diff as f64 / d;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.count == 0 {
            return o;
        }
        if o.count == 0 {
            return self;
        }
        let n = self.count + o.count;
        let delta = o.mean - self.mean;
        Moments {
            count: n,
            sum: self.sum + o.sum,
            mean: self.mean + delta * o.count as f64 / n as f64,
            m2: self.m2 + o.m2 + delta * delta * (self.count as f64 * o.count as f64) / n as f64,
        }
    }
}

fn shard_sizes(samples: u64) -> Vec<u64> {
    (0..SHARDS)
        .map(|s| samples / SHARDS + u64::from(s < samples % SHARDS))
        .collect()
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Mean and standard error of truth-minus-attack utility, with truth and
/// attack evaluated on the same adversary draws.
pub fn estimate_expected_diff(model: &TypeModel, scenario: &Scenario, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples"
        )));
    }
    if scenario.strategy == Strategy::Truthful {
        return Err(Error::InvalidParameter("scenario has no attack".into()));
    }
    let mut extra = vec![&scenario.theta];
    if let Strategy::Attack { x, y } = &scenario.strategy {
        extra.push(x);
        extra.push(y);
    }
    let scale = Scale::new(model, &extra)?;
    let truth = int_report(&scenario.truthful().report(), &scale);
    let attack = int_report(&scenario.report(), &scale);
    let sampler = AdversarySampler::new(model);
    let nt = scenario.n_tilde();
    let df = scale.d as f64;

    let parts: Vec<Moments> = shard_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(shard, size)| {
            let mut rng = shard_rng(seed, shard as u64);
            let mut m = Moments::default();
            let mut adv: Vec<Bid<i128>> = Vec::with_capacity(nt);
            for _ in 0..size {
                adv.clear();
                for _ in 0..nt {
                    let (demand, d) = sampler.draw(&mut rng);
                    adv.push(Bid {
                        demand,
                        value: scale.draw(demand, d),
                    });
                }
                let diff = focal_utility(&truth, &adv) - focal_utility(&attack, &adv);
                m.push(diff, df);
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let n = total.count as f64;
    let var = if total.count > 1 { total.m2 / (n - 1.0) } else { 0.0 };
    Ok(McEstimate {
        mean: total.sum as f64 / df / n,
        stderr: (var.max(0.0) / n).sqrt(),
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub trials: u64,
    /// Reduced utility differs from the mechanism.
    pub mismatches: u64,
    /// Appending dominated adversary bids changed the utility.
    pub append_mismatches: u64,
    /// Instances regenerated because feasible sets tied in welfare.
    pub ties_skipped: u64,
}

/// Distinct welfare for every feasible set of the profile.
fn tie_free(profile: &[Bid]) -> bool {
    let mut w: Vec<Rational> = profile.iter().map(|b| b.worth()).collect();
    for (i, a) in profile.iter().enumerate() {
        for b in &profile[i + 1..] {
            if a.demand == Demand::One && b.demand == Demand::One {
                w.push(&a.value + &b.value);
            }
        }
    }
    w.push(Rational::default());
    w.sort();
    w.windows(2).all(|p| p[0] != p[1])
}

fn random_unit(rng: &mut ChaCha8Rng) -> Rational {
    rat((rng.next_u32() >> 12) as i64, 1 << 20)
}

fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let n = 3 + (rng.next_u32() % 4) as usize;
    let demand = if rng.next_u32() & 1 == 0 { Demand::One } else { Demand::Two };
    let theta = random_unit(rng);
    let strategy = if rng.next_u32().is_multiple_of(4) {
        Strategy::Truthful
    } else {
        let (a, b) = (random_unit(rng), random_unit(rng));
        Strategy::Attack {
            x: a.clone().max(b.clone()),
            y: a.min(b),
        }
    };
    Scenario::new(demand, theta, strategy, n).expect("parameters drawn in range")
}

/// Checks on random tie-free instances that the reduced utility of the top
/// statistics equals the mechanism's utility on the full profile, and that
/// appending a 1-type below `v2` and a 2-type below `w1` changes nothing.
pub fn oracle_consistency(trials: u64, seed: u64) -> Result<OracleReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        trials,
        mismatches: 0,
        append_mismatches: 0,
        ties_skipped: 0,
    };
    let mut done = 0;
    while done < trials {
        let scenario = random_scenario(&mut rng);
        let q = random_unit(&mut rng);
        let model = TypeModel::new(q, ValueDistribution::uniform())?;
        let adv = sample_adversary_profile(&model, scenario.n_tilde(), &mut rng);
        let report_bids = scenario.report();
        let mut full = report_bids.own_bids.clone();
        full.extend(adv.iter().cloned());
        let mut truth_full = vec![scenario.true_type()];
        truth_full.extend(adv.iter().cloned());
        if !tie_free(&full) || !tie_free(&truth_full) || !checks_winners(&full) {
            report.ties_skipped += 1;
            continue;
        }
        done += 1;
        let direct = focal_utility(&report_bids, &adv);
        let stats = TopStats::from_profile(&adv);
        if reduced_utility(&scenario, &stats)? != direct {
            report.mismatches += 1;
        }
        let mut more = adv.clone();
        more.push(Bid::one(&stats.v2 / Rational::from_integer(2.into())));
        more.push(Bid::two(&stats.w1 / Rational::from_integer(2.into())));
        if focal_utility(&report_bids, &more) != direct {
            report.append_mismatches += 1;
        }
    }
    Ok(report)
}

/// Removing any winner must also leave a unique best set.
fn checks_winners(profile: &[Bid]) -> bool {
    let o = vcg_outcome(profile);
    o.winners.iter().all(|&w| {
        let rest: Vec<Bid> = profile
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != w)
            .map(|(_, b)| b.clone())
            .collect();
        tie_free(&rest)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fnvcg_core::rational::int;

    #[test]
    fn point_mass_has_zero_variance() {
        let f = ValueDistribution::point_mass(int(1)).unwrap();
        let model = TypeModel::new(int(0), f).unwrap();
        let s = Scenario::split(3).unwrap();
        let e = estimate_expected_diff(&model, &s, 1000, 1).unwrap();
        assert_eq!(e.stderr, 0.0);
        // truth wins the tie at price 2, the attack wins nothing
        let exact = fnvcg_core::expectation::discrete_diff_by_k(&model, &s).unwrap().at(&int(0));
        assert_eq!(e.mean, fnvcg_core::rational::to_f64(&exact));
    }

    #[test]
    fn reproducible() {
        let model = TypeModel::new(rat(1, 2), ValueDistribution::uniform()).unwrap();
        let s = Scenario::split(3).unwrap();
        let a = estimate_expected_diff(&model, &s, 5000, 9).unwrap();
        let b = estimate_expected_diff(&model, &s, 5000, 9).unwrap();
        assert_eq!(a, b);
        assert!(estimate_expected_diff(&model, &s, 10, 9).is_err());
    }

    #[test]
    fn shard_sizes_sum() {
        assert_eq!(shard_sizes(1001).iter().sum::<u64>(), 1001);
    }

    #[test]
    fn tie_detection() {
        let tied = [Bid::one(rat(1, 2)), Bid::one(rat(1, 2)), Bid::two(rat(1, 2))];
        assert!(!tie_free(&tied));
        let ok = [Bid::one(rat(1, 3)), Bid::one(rat(1, 5)), Bid::two(rat(2, 7))];
        assert!(tie_free(&ok));
    }

    #[test]
    fn oracle_small_run() {
        let r = oracle_consistency(300, 5).unwrap();
        assert_eq!(r.mismatches, 0);
        assert_eq!(r.append_mismatches, 0);
    }
}
