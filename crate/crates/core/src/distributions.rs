//! Value distributions, the common prior, and seeded sampling.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand_core::RngCore;

use crate::mechanism::{Bid, BidProfile, Demand};
use crate::polynomial::{RatPoly, UniPoly, Var};
use crate::rational::{int, parse_rational, to_fraction_string, Rational};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub value: Rational,
    pub prob: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueDistribution {
    Beta { alpha: u32, beta: u32 },
    Discrete(Vec<Atom>),
}

impl ValueDistribution {
    pub fn beta(alpha: u32, beta: u32) -> Result<Self> {
        if alpha < 1 || beta < 1 {
            return Err(Error::InvalidDistribution(format!(
                "beta parameters must be integers >= 1, got ({alpha}, {beta})"
            )));
        }
        Ok(ValueDistribution::Beta { alpha, beta })
    }

    pub fn uniform() -> Self {
        ValueDistribution::Beta { alpha: 1, beta: 1 }
    }

    /// Atoms with strictly increasing values in [0, 1] and positive
    /// probabilities summing to exactly 1.
    pub fn discrete(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut total = Rational::zero();
        for (i, (v, p)) in atoms.iter().enumerate() {
            if v < &Rational::zero() || v > &Rational::one() {
                return Err(Error::InvalidDistribution(format!("atom {v} outside [0, 1]")));
            }
            if p <= &Rational::zero() {
                return Err(Error::InvalidDistribution(format!("probability {p} not positive")));
            }
            if i > 0 && &atoms[i - 1].0 >= v {
                return Err(Error::InvalidDistribution(
                    "atom values must be strictly increasing".into(),
                ));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(ValueDistribution::Discrete(
            atoms
                .into_iter()
                .map(|(value, prob)| Atom { value, prob })
                .collect(),
        ))
    }

    pub fn point_mass(v: Rational) -> Result<Self> {
        Self::discrete(alloc::vec![(v, Rational::one())])
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match self {
            ValueDistribution::Discrete(a) => Some(a),
            ValueDistribution::Beta { .. } => None,
        }
    }
}

/// Parses `beta:A,B` and `discrete:v1:p1,v2:p2,...`.
impl FromStr for ValueDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("distribution {s:?}: {m}"));
        let (kind, rest) = s.trim().split_once(':').ok_or_else(|| bad("missing ':'"))?;
        match kind {
            "beta" => {
                let (a, b) = rest.split_once(',').ok_or_else(|| bad("expected beta:A,B"))?;
                let a: u32 = a.trim().parse().map_err(|_| bad("alpha must be an integer"))?;
                let b: u32 = b.trim().parse().map_err(|_| bad("beta must be an integer"))?;
                Self::beta(a, b)
            }
            "discrete" => {
                let mut atoms = Vec::new();
                for part in rest.split(',') {
                    let (v, p) = part.split_once(':').ok_or_else(|| bad("expected value:prob"))?;
                    atoms.push((parse_rational(v)?, parse_rational(p)?));
                }
                atoms.sort_by(|a, b| a.0.cmp(&b.0));
                Self::discrete(atoms)
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

impl fmt::Display for ValueDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueDistribution::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            ValueDistribution::Discrete(atoms) => {
                f.write_str("discrete:")?;
                for (i, a) in atoms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(
                        f,
                        "{}:{}",
                        to_fraction_string(&a.value),
                        to_fraction_string(&a.prob)
                    )?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeModel {
    /// Probability that an adversary demands one item.
    pub q: Rational,
    pub f1: ValueDistribution,
    pub f2: ValueDistribution,
}

impl TypeModel {
    pub fn new(q: Rational, f: ValueDistribution) -> Result<Self> {
        Self::with_split(q, f.clone(), f)
    }

    pub fn with_split(q: Rational, f1: ValueDistribution, f2: ValueDistribution) -> Result<Self> {
        if q < Rational::zero() || q > Rational::one() {
            return Err(Error::InvalidParameter(format!("q = {q} outside [0, 1]")));
        }
        Ok(Self { q, f1, f2 })
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Density and cdf of Beta(α, β) as polynomials in `var`.
pub fn beta_pdf_cdf(alpha: u32, beta: u32, var: Var) -> Result<(RatPoly, RatPoly)> {
    let (pdf, cdf) = beta_pdf_cdf_uni(alpha, beta)?;
    Ok((
        RatPoly::from_univariate(&pdf, var),
        RatPoly::from_univariate(&cdf, var),
    ))
}

pub(crate) fn beta_pdf_cdf_uni(alpha: u32, beta: u32) -> Result<(UniPoly, UniPoly)> {
    ValueDistribution::beta(alpha, beta)?;
    let norm = Rational::new(
        factorial(alpha + beta - 1),
        factorial(alpha - 1) * factorial(beta - 1),
    );
    // v^{α-1} (1-v)^{β-1}
    let b = (beta - 1) as u64;
    let mut coeffs = alloc::vec![Rational::zero(); (alpha - 1 + beta) as usize];
    for j in 0..=b {
        let c = Rational::from_integer(crate::rational::binomial(b, j));
        let c = if j % 2 == 1 { -c } else { c };
        coeffs[(alpha - 1) as usize + j as usize] = c * &norm;
    }
    let pdf = UniPoly::new(coeffs);
    let mut anti = alloc::vec![Rational::zero()];
    for (j, c) in pdf.coeffs().iter().enumerate() {
        anti.push(c / int(j as i64 + 1));
    }
    Ok((pdf, UniPoly::new(anti)))
}

/// One draw: a dyadic value `k / 2^53` (beta) or an atom index (discrete).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Draw {
    Dyadic(u64),
    Atom(usize),
}

pub const DYADIC_BITS: u32 = 53;

fn uniform_bits(rng: &mut dyn RngCore) -> u64 {
    rng.next_u64() >> (64 - DYADIC_BITS)
}

fn uniform_unit(rng: &mut dyn RngCore) -> f64 {
    uniform_bits(rng) as f64 / (1u64 << DYADIC_BITS) as f64
}

fn to_dyadic(v: f64) -> u64 {
    let scale = (1u64 << DYADIC_BITS) as f64;
    let k = libm::floor(v.clamp(0.0, 1.0) * scale);
    (k as u64).min(1u64 << DYADIC_BITS)
}

/// Sampler with the distribution's numeric tables prepared once.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Uniform,
    PowerLaw(f64),
    InverseCdf(UniPoly),
    Atoms(Vec<Rational>),
}

impl Sampler {
    pub fn new(dist: &ValueDistribution) -> Self {
        let kind = match dist {
            ValueDistribution::Beta { alpha: 1, beta: 1 } => SamplerKind::Uniform,
            ValueDistribution::Beta { alpha, beta: 1 } => SamplerKind::PowerLaw(1.0 / *alpha as f64),
            ValueDistribution::Beta { alpha, beta } => {
                let (_, cdf) = beta_pdf_cdf_uni(*alpha, *beta).expect("validated parameters");
                SamplerKind::InverseCdf(cdf)
            }
            ValueDistribution::Discrete(atoms) => {
                let mut acc = Rational::zero();
                SamplerKind::Atoms(
                    atoms
                        .iter()
                        .map(|a| {
                            acc += &a.prob;
                            acc.clone()
                        })
                        .collect(),
                )
            }
        };
        Self { kind }
    }

    pub fn draw(&self, rng: &mut dyn RngCore) -> Draw {
        match &self.kind {
            SamplerKind::Uniform => Draw::Dyadic(uniform_bits(rng)),
            SamplerKind::PowerLaw(inv) => Draw::Dyadic(to_dyadic(libm::pow(uniform_unit(rng), *inv))),
            SamplerKind::InverseCdf(cdf) => {
                let u = uniform_unit(rng);
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while hi - lo > 1.0 / (1u64 << 40) as f64 {
                    let m = 0.5 * (lo + hi);
                    if cdf.eval_f64(m) < u {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                Draw::Dyadic(to_dyadic(0.5 * (lo + hi)))
            }
            SamplerKind::Atoms(cum) => {
                // exact comparison of u = k/2^53 against cumulative masses
                let u = Rational::new(
                    BigInt::from(uniform_bits(rng)),
                    BigInt::one() << DYADIC_BITS,
                );
                let i = cum.iter().position(|c| &u < c).unwrap_or(cum.len() - 1);
                Draw::Atom(i)
            }
        }
    }
}

impl Draw {
    pub fn to_rational(self, dist: &ValueDistribution) -> Rational {
        match self {
            Draw::Dyadic(k) => Rational::new(BigInt::from(k), BigInt::one() << DYADIC_BITS),
            Draw::Atom(i) => dist.atoms().expect("atom draw from discrete")[i].value.clone(),
        }
    }
}

pub fn sample_value(dist: &ValueDistribution, rng: &mut dyn RngCore) -> Rational {
    Sampler::new(dist).draw(rng).to_rational(dist)
}

/// `k < ceil(q · 2^53)` for a 53-bit draw `k`, i.e. `k / 2^53 < q`.
fn bernoulli_cut(q: &Rational) -> u64 {
    let scaled = q * Rational::from_integer(BigInt::one() << DYADIC_BITS);
    let c = scaled.ceil().to_integer();
    u64::try_from(c.clamp(BigInt::zero(), BigInt::one() << DYADIC_BITS)).expect("at most 2^53")
}

/// True with probability `q`, by exact comparison against a 53-bit draw.
pub fn bernoulli(q: &Rational, rng: &mut dyn RngCore) -> bool {
    uniform_bits(rng) < bernoulli_cut(q)
}

/// Adversary types and raw value draws; [`sample_adversary_profile`] is this
/// mapped to exact bids, consuming the generator identically.
pub struct AdversarySampler {
    cut: u64,
    s1: Sampler,
    s2: Sampler,
}

impl AdversarySampler {
    pub fn new(model: &TypeModel) -> Self {
        Self {
            cut: bernoulli_cut(&model.q),
            s1: Sampler::new(&model.f1),
            s2: Sampler::new(&model.f2),
        }
    }

    pub fn draw(&self, rng: &mut dyn RngCore) -> (Demand, Draw) {
        if uniform_bits(rng) < self.cut {
            (Demand::One, self.s1.draw(rng))
        } else {
            (Demand::Two, self.s2.draw(rng))
        }
    }
}

pub fn sample_adversary_profile(model: &TypeModel, count: usize, rng: &mut dyn RngCore) -> BidProfile {
    let s = AdversarySampler::new(model);
    (0..count)
        .map(|_| {
            let (demand, d) = s.draw(rng);
            let dist = match demand {
                Demand::One => &model.f1,
                Demand::Two => &model.f2,
            };
            Bid {
                demand,
                value: d.to_rational(dist),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::rational::rat;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beta_polynomials() {
        let (p, c) = beta_pdf_cdf(1, 1, Var::V1).unwrap();
        assert_eq!(p, RatPoly::one());
        assert_eq!(c, RatPoly::var(Var::V1));
        let (p, c) = beta_pdf_cdf(2, 1, Var::V1).unwrap();
        assert_eq!(p.to_string(), "2 * v1");
        assert_eq!(c.to_string(), "1 * v1^2");
        let (p, c) = beta_pdf_cdf(1, 2, Var::V1).unwrap();
        assert_eq!(p.to_string(), "2 - 2 * v1");
        assert_eq!(c.to_string(), "2 * v1 - 1 * v1^2");
        assert!(beta_pdf_cdf(0, 1, Var::V1).is_err());
    }

    #[test]
    fn literals() {
        let d: ValueDistribution = "beta:2,1".parse().unwrap();
        assert_eq!(d, ValueDistribution::Beta { alpha: 2, beta: 1 });
        let d: ValueDistribution = "discrete:1:1/2,0.1:0.5".parse().unwrap();
        let atoms = d.atoms().unwrap();
        assert_eq!(atoms[0].value, rat(1, 10));
        assert_eq!(atoms[1].value, int(1));
        assert_eq!(d.to_string(), "discrete:1/10:1/2,1:1/2");
        assert!("beta:1.5,1".parse::<ValueDistribution>().is_err());
        assert!("discrete:0.1:0.3".parse::<ValueDistribution>().is_err());
        assert!("discrete:0.1:0.5,0.1:0.5".parse::<ValueDistribution>().is_err());
        assert!("gamma:1,1".parse::<ValueDistribution>().is_err());
    }

    #[test]
    fn point_mass_sampling() {
        let d = ValueDistribution::point_mass(rat(1, 10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_value(&d, &mut rng), rat(1, 10));
        }
    }

    #[test]
    fn degenerate_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = TypeModel::new(int(1), ValueDistribution::uniform()).unwrap();
        assert!(sample_adversary_profile(&m, 200, &mut rng)
            .iter()
            .all(|b| b.demand == Demand::One));
        let m = TypeModel::new(int(0), ValueDistribution::uniform()).unwrap();
        assert!(sample_adversary_profile(&m, 200, &mut rng)
            .iter()
            .all(|b| b.demand == Demand::Two));
        assert!(TypeModel::new(rat(3, 2), ValueDistribution::uniform()).is_err());
    }

    #[test]
    fn general_beta_draws_stay_in_range() {
        let d = ValueDistribution::beta(2, 3).unwrap();
        let s = Sampler::new(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sum = 0.0;
        let n = 20_000;
        for _ in 0..n {
            let v = crate::rational::to_f64(&s.draw(&mut rng).to_rational(&d));
            assert!((0.0..=1.0).contains(&v));
            sum += v;
        }
        // mean 2/5, sd 0.2
        let se = 0.2 / libm::sqrt(n as f64);
        assert!((sum / n as f64 - 0.4).abs() < 4.0 * se);
    }
}
