//! Expected utility differences between truthful bidding and a two-bid
//! false-name attack, exact per number `k` of 1-type adversaries and mixed
//! into a polynomial in `q`.

mod closed_form;
mod discrete;
mod interpolate;
mod pieces;
mod region;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::distributions::{beta_pdf_cdf_uni, ValueDistribution};
use crate::mechanism::{Bid, Demand, FocalReport};
use crate::polynomial::{RatPoly, Var};
use crate::rational::{binomial_q, int, Rational};
use crate::{Error, Result};

pub use closed_form::uniform_split_closed_form;
pub use discrete::{discrete_diff_by_k, discrete_expected_diff, ENUMERATION_LIMIT};
pub use interpolate::{
    interpolate_chambers, interpolate_diff_polynomial, Chamber, ChamberPolynomial, Range,
};
use pieces::{attack_pieces, truth_pieces, Cond, Piece};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Strategy {
    Truthful,
    /// Own bids `(1, x)` and `(1, y)` with `y <= x`.
    Attack { x: Rational, y: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub demand: Demand,
    pub theta: Rational,
    pub strategy: Strategy,
    /// Total number of bidders, the focal one included.
    pub n: usize,
}

fn in_unit(r: &Rational) -> bool {
    r >= &Rational::zero() && r <= &Rational::one()
}

impl Scenario {
    pub fn new(demand: Demand, theta: Rational, strategy: Strategy, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
        }
        if !in_unit(&theta) {
            return Err(Error::InvalidParameter(format!("theta = {theta} outside [0, 1]")));
        }
        if let Strategy::Attack { x, y } = &strategy {
            if !in_unit(x) || !in_unit(y) || y > x {
                return Err(Error::InvalidParameter(format!(
                    "attack ({x}, {y}) must satisfy 0 <= y <= x <= 1"
                )));
            }
        }
        Ok(Self {
            demand,
            theta,
            strategy,
            n,
        })
    }

    pub fn attack(demand: Demand, theta: Rational, x: Rational, y: Rational, n: usize) -> Result<Self> {
        Self::new(demand, theta, Strategy::Attack { x, y }, n)
    }

    /// True type (2, 1) bidding (1, 1), (1, 1).
    pub fn split(n: usize) -> Result<Self> {
        Self::attack(Demand::Two, Rational::one(), Rational::one(), Rational::one(), n)
    }

    pub fn n_tilde(&self) -> usize {
        self.n - 1
    }

    pub fn true_type(&self) -> Bid {
        Bid {
            demand: self.demand,
            value: self.theta.clone(),
        }
    }

    pub fn truthful(&self) -> Scenario {
        Scenario {
            strategy: Strategy::Truthful,
            ..self.clone()
        }
    }

    pub fn report(&self) -> FocalReport {
        let own_bids = match &self.strategy {
            Strategy::Truthful => vec![self.true_type()],
            Strategy::Attack { x, y } => vec![Bid::one(x.clone()), Bid::one(y.clone())],
        };
        FocalReport {
            true_type: self.true_type(),
            own_bids,
        }
    }

    fn attack_params(&self) -> Result<(&Rational, &Rational)> {
        match &self.strategy {
            Strategy::Attack { x, y } => Ok((x, y)),
            Strategy::Truthful => Err(Error::InvalidParameter(
                "scenario has no attack to compare against".into(),
            )),
        }
    }

    pub(crate) fn pieces(&self) -> Vec<Piece> {
        match &self.strategy {
            Strategy::Truthful => truth_pieces(self.demand, &self.theta),
            Strategy::Attack { x, y } => attack_pieces(self.demand, &self.theta, x, y),
        }
    }
}

/// Top adversary statistics; absent bids count as 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopStats {
    pub w1: Rational,
    pub v1: Rational,
    pub v2: Rational,
}

impl TopStats {
    pub fn from_profile(profile: &[Bid]) -> Self {
        let mut w1 = Rational::zero();
        let mut v1 = Rational::zero();
        let mut v2 = Rational::zero();
        for b in profile {
            match b.demand {
                Demand::Two => {
                    if b.value > w1 {
                        w1 = b.value.clone();
                    }
                }
                Demand::One => {
                    if b.value > v1 {
                        v2 = core::mem::replace(&mut v1, b.value.clone());
                    } else if b.value > v2 {
                        v2 = b.value.clone();
                    }
                }
            }
        }
        Self { w1, v1, v2 }
    }

    fn point(&self) -> [(Var, Rational); 3] {
        [
            (Var::W1, self.w1.clone()),
            (Var::V1, self.v1.clone()),
            (Var::V2, self.v2.clone()),
        ]
    }
}

/// The focal bidder's utility as a function of the top statistics only.
pub fn reduced_utility(scenario: &Scenario, stats: &TopStats) -> Result<Rational> {
    if stats.v2 > stats.v1 {
        return Err(Error::InvalidParameter("top statistics need v2 <= v1".into()));
    }
    let point = stats.point();
    for piece in scenario.pieces() {
        if piece.conds.iter().all(|c| c.holds_at(&point)) {
            return Ok(piece.value.evaluate(&point).expect("value over w1, v1, v2"));
        }
    }
    Ok(Rational::zero())
}

/// Joint density of the statistics given `k` 1-type adversaries out of
/// `n_tilde`, the values fixed at 0 for absent bids, the support, and the
/// integration order (innermost first).
struct KDensity {
    density: RatPoly,
    fixed: Vec<(Var, Rational)>,
    support: Vec<Cond>,
    order: Vec<Var>,
}

fn k_density(alpha: u32, beta: u32, n_tilde: usize, k: usize) -> Result<KDensity> {
    if k > n_tilde {
        return Err(Error::KOutOfRange { k, n_tilde });
    }
    let (pdf, cdf) = beta_pdf_cdf_uni(alpha, beta)?;
    let f = |v: Var| RatPoly::from_univariate(&pdf, v);
    let cdf_of = |v: Var| RatPoly::from_univariate(&cdf, v);
    let ge = |e: RatPoly| Cond { expr: e, strict: false };
    let var = RatPoly::var;
    let mut density = RatPoly::one();
    let mut fixed = Vec::new();
    let mut support = Vec::new();
    let mut order = Vec::new();
    let m = n_tilde - k;
    if m >= 1 {
        density = &density * &(&f(Var::W1) * &cdf_of(Var::W1).pow(m as u32 - 1)).scale(&int(m as i64));
        support.push(ge(var(Var::W1)));
        support.push(ge(&RatPoly::one() - &var(Var::W1)));
        order.push(Var::W1);
    } else {
        fixed.push((Var::W1, Rational::zero()));
    }
    match k {
        0 => {
            fixed.push((Var::V1, Rational::zero()));
            fixed.push((Var::V2, Rational::zero()));
        }
        1 => {
            density = &density * &f(Var::V1);
            fixed.push((Var::V2, Rational::zero()));
            support.push(ge(var(Var::V1)));
            support.push(ge(&RatPoly::one() - &var(Var::V1)));
            order.push(Var::V1);
        }
        _ => {
            let kk = int((k * (k - 1)) as i64);
            density = &density
                * &(&(&f(Var::V1) * &f(Var::V2)) * &cdf_of(Var::V2).pow(k as u32 - 2)).scale(&kk);
            support.push(ge(var(Var::V2)));
            support.push(ge(&var(Var::V1) - &var(Var::V2)));
            support.push(ge(&RatPoly::one() - &var(Var::V1)));
            order.push(Var::V2);
            order.push(Var::V1);
        }
    }
    Ok(KDensity {
        density,
        fixed,
        support,
        order,
    })
}

fn beta_params(dist: &ValueDistribution) -> Result<(u32, u32)> {
    match dist {
        ValueDistribution::Beta { alpha, beta } => Ok((*alpha, *beta)),
        ValueDistribution::Discrete(_) => Err(Error::UnsupportedDistribution(
            "the integration pipeline needs a beta distribution",
        )),
    }
}

fn expected_from_pieces(pieces: &[Piece], kd: &KDensity) -> Rational {
    let mut total = Rational::zero();
    for piece in pieces {
        let mut conds: Vec<Cond> = piece.conds.iter().map(|c| c.substitute_all(&kd.fixed)).collect();
        conds.extend(kd.support.iter().cloned());
        let value = piece.value.substitute_all(&kd.fixed);
        let integrand = &kd.density * &value;
        total += region::integrate(&integrand, conds, &kd.order);
    }
    total
}

/// Expected utility of the scenario's strategy given exactly `k` 1-type
/// adversaries.
pub fn expected_utility_given_k(scenario: &Scenario, dist: &ValueDistribution, k: usize) -> Result<Rational> {
    let (a, b) = beta_params(dist)?;
    let kd = k_density(a, b, scenario.n_tilde(), k)?;
    Ok(expected_from_pieces(&scenario.pieces(), &kd))
}

/// `E_truth − E_attack` given exactly `k` 1-type adversaries.
pub fn expected_diff_given_k(scenario: &Scenario, dist: &ValueDistribution, k: usize) -> Result<Rational> {
    scenario.attack_params()?;
    let truth = expected_utility_given_k(&scenario.truthful(), dist, k)?;
    let attack = expected_utility_given_k(scenario, dist, k)?;
    Ok(truth - attack)
}

/// Per-k differences and their binomial mixture in `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffByK {
    pub n: usize,
    pub per_k: Vec<Rational>,
    pub q_poly: RatPoly,
}

impl DiffByK {
    pub fn from_per_k(n: usize, per_k: Vec<Rational>) -> Self {
        let polys: Vec<RatPoly> = per_k.iter().cloned().map(RatPoly::constant).collect();
        let q_poly = binomial_mixture(&polys);
        Self { n, per_k, q_poly }
    }

    pub fn at(&self, q: &Rational) -> Rational {
        self.q_poly.evaluate(&[(Var::Q, q.clone())]).expect("univariate in q")
    }
}

/// `Σ_k C(ñ, k) q^k (1 − q)^{ñ − k} c_k` with `ñ = coeffs.len() − 1`.
pub fn binomial_mixture(coeffs: &[RatPoly]) -> RatPoly {
    let nt = coeffs.len().saturating_sub(1);
    let q = RatPoly::var(Var::Q);
    let one_minus = &RatPoly::one() - &q;
    let mut out = RatPoly::zero();
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let w = (&q.pow(k as u32) * &one_minus.pow((nt - k) as u32)).scale(&binomial_q(nt as u64, k as u64));
        out += &(&w * c);
    }
    out
}

pub fn expected_diff_poly_q(scenario: &Scenario, dist: &ValueDistribution) -> Result<DiffByK> {
    scenario.attack_params()?;
    let (a, b) = beta_params(dist)?;
    let truth = truth_pieces(scenario.demand, &scenario.theta);
    let attack = scenario.pieces();
    let nt = scenario.n_tilde();
    let mut per_k = Vec::with_capacity(nt + 1);
    for k in 0..=nt {
        let kd = k_density(a, b, nt, k)?;
        per_k.push(expected_from_pieces(&truth, &kd) - expected_from_pieces(&attack, &kd));
    }
    Ok(DiffByK::from_per_k(scenario.n, per_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::mechanism::focal_utility;
    use crate::rational::rat;

    fn stats(w1: Rational, v1: Rational, v2: Rational) -> TopStats {
        TopStats { w1, v1, v2 }
    }

    #[test]
    fn reduced_utility_examples() {
        let s = Scenario::new(Demand::One, int(1), Strategy::Truthful, 3).unwrap();
        assert_eq!(reduced_utility(&s, &stats(int(0), int(0), int(0))).unwrap(), int(1));

        let s = Scenario::new(Demand::Two, rat(1, 2), Strategy::Truthful, 4).unwrap();
        let st = stats(rat(1, 5), rat(3, 10), rat(1, 10));
        assert_eq!(reduced_utility(&s, &st).unwrap(), rat(3, 5));
        let adv = [Bid::two(rat(1, 5)), Bid::one(rat(3, 10)), Bid::one(rat(1, 10))];
        assert_eq!(focal_utility(&s.report(), &adv), rat(3, 5));

        let s = Scenario::split(4).unwrap();
        let st = stats(rat(9, 10), rat(4, 5), rat(1, 10));
        assert_eq!(reduced_utility(&s, &st).unwrap(), rat(2, 5));
        let adv = [Bid::two(rat(9, 10)), Bid::one(rat(4, 5)), Bid::one(rat(1, 10))];
        assert_eq!(focal_utility(&s.report(), &adv), rat(2, 5));

        assert!(reduced_utility(&s, &stats(int(0), rat(1, 5), rat(1, 2))).is_err());
    }

    #[test]
    fn split_per_k_n3() {
        let s = Scenario::split(3).unwrap();
        let u = ValueDistribution::uniform();
        assert_eq!(expected_diff_given_k(&s, &u, 2).unwrap(), rat(1, 3));
        assert_eq!(expected_diff_given_k(&s, &u, 0).unwrap(), rat(-1, 2));
        assert_eq!(expected_diff_given_k(&s, &u, 1).unwrap(), rat(1, 12));
        assert_eq!(
            expected_diff_given_k(&s, &u, 3),
            Err(Error::KOutOfRange { k: 3, n_tilde: 2 })
        );
        let d = expected_diff_poly_q(&s, &u).unwrap();
        assert_eq!(d.q_poly.to_string(), "-1/2 + 7/6 * q - 1/3 * q^2");
        assert_eq!(d.at(&int(0)), d.per_k[0]);
        assert_eq!(d.at(&int(1)), d.per_k[2]);
    }

    #[test]
    fn split_vanishes_at_half() {
        let u = ValueDistribution::uniform();
        for n in 3..=6 {
            let d = expected_diff_poly_q(&Scenario::split(n).unwrap(), &u).unwrap();
            assert!(d.at(&rat(1, 2)).is_zero(), "n = {n}");
            assert!(d.q_poly.degree_in(Var::Q) as usize <= n - 1);
        }
    }

    #[test]
    fn truthful_scenario_has_no_diff() {
        let s = Scenario::new(Demand::One, int(1), Strategy::Truthful, 3).unwrap();
        assert!(expected_diff_poly_q(&s, &ValueDistribution::uniform()).is_err());
    }

    #[test]
    fn discrete_rejected_by_integration() {
        let s = Scenario::split(3).unwrap();
        let d = ValueDistribution::point_mass(int(1)).unwrap();
        assert!(matches!(
            expected_diff_given_k(&s, &d, 0),
            Err(Error::UnsupportedDistribution(_))
        ));
    }

    #[test]
    fn invalid_scenarios() {
        assert!(Scenario::attack(Demand::One, int(1), rat(1, 5), rat(1, 2), 3).is_err());
        assert!(Scenario::split(1).is_err());
        assert!(Scenario::new(Demand::One, rat(3, 2), Strategy::Truthful, 3).is_err());
    }
}
