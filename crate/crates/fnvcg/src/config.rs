//! Run configuration: flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use fnvcg_core::distributions::ValueDistribution;
use fnvcg_core::mechanism::Demand;
use fnvcg_core::rational::{parse_rational, Rational};

/// Every field is optional; commands check for what they need.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Value distribution, `beta:A,B` or `discrete:v:p,...`
    #[arg(long)]
    pub dist: Option<String>,
    /// Number of bidders; `reproduce` also takes ranges like `3..9`
    #[arg(long)]
    pub n: Option<String>,
    /// Probability that an adversary is a 1-type (for `verify`, the lower end
    /// of the certified range)
    #[arg(long)]
    pub q: Option<String>,
    /// `split` or `x,y`
    #[arg(long)]
    pub attack: Option<String>,
    /// Demand of the true type, 1 or 2
    #[arg(long)]
    pub demand: Option<u8>,
    /// Per-item value of the true type
    #[arg(long)]
    pub theta: Option<String>,
    /// Search grid step
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bernstein subdivision depth limit
    #[arg(long)]
    pub depth: Option<u32>,
    /// Write a JSON report here
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write a CSV table here
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Output path for `reproduce`
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (falls back to FNVCG_THREADS)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Alpha values for `reproduce`, e.g. `1..5`
    #[arg(long)]
    pub alphas: Option<String>,
    /// Also run global certification in `reproduce`
    #[arg(long)]
    #[serde(default)]
    pub verify: bool,
}

pub const DEFAULT_DEPTH: u32 = 12;
pub const DEFAULT_SAMPLES: u64 = 200_000;
pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            dist: self.dist.or(base.dist),
            n: self.n.or(base.n),
            q: self.q.or(base.q),
            attack: self.attack.or(base.attack),
            demand: self.demand.or(base.demand),
            theta: self.theta.or(base.theta),
            grid: self.grid.or(base.grid),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            depth: self.depth.or(base.depth),
            json: self.json.or(base.json),
            csv: self.csv.or(base.csv),
            out: self.out.or(base.out),
            threads: self.threads.or(base.threads),
            alphas: self.alphas.or(base.alphas),
            verify: self.verify || base.verify,
        }
    }

    pub fn dist(&self) -> anyhow::Result<ValueDistribution> {
        let s = self.dist.as_deref().context("--dist is required")?;
        Ok(s.parse()?)
    }

    pub fn n(&self) -> anyhow::Result<usize> {
        let s = self.n.as_deref().context("--n is required")?;
        s.trim().parse().with_context(|| format!("--n {s:?} is not an integer"))
    }

    pub fn q(&self) -> anyhow::Result<Rational> {
        rational_flag("--q", self.q.as_deref())
    }

    pub fn theta(&self) -> anyhow::Result<Rational> {
        match &self.theta {
            Some(s) => rational_flag("--theta", Some(s)),
            None => Ok(Rational::from_integer(1.into())),
        }
    }

    pub fn demand(&self) -> anyhow::Result<Demand> {
        Ok(Demand::from_u8(self.demand.unwrap_or(1))?)
    }

    /// `(demand, θ, x, y)`; `split` fixes demand 2 and `θ = x = y = 1`.
    pub fn attack(&self) -> anyhow::Result<(Demand, Rational, Rational, Rational)> {
        let s = self.attack.as_deref().context("--attack is required")?;
        if s.trim() == "split" {
            let one = Rational::from_integer(1.into());
            return Ok((Demand::Two, one.clone(), one.clone(), one));
        }
        let (x, y) = s.split_once(',').context("--attack must be `split` or `x,y`")?;
        Ok((
            self.demand()?,
            self.theta()?,
            parse_rational(x.trim())?,
            parse_rational(y.trim())?,
        ))
    }

    pub fn grid(&self) -> anyhow::Result<Rational> {
        match &self.grid {
            Some(s) => rational_flag("--grid", Some(s)),
            None => Ok(Rational::new(1.into(), 32.into())),
        }
    }
}

fn rational_flag(name: &str, s: Option<&str>) -> anyhow::Result<Rational> {
    let s = s.with_context(|| format!("{name} is required"))?;
    parse_rational(s.trim()).with_context(|| format!("{name} {s:?}"))
}

/// `a..b` (inclusive), `a,b,c`, or a single integer.
pub fn parse_list(s: &str) -> anyhow::Result<Vec<u32>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().with_context(|| format!("range {s:?}"))?;
        let b: u32 = b.trim().parse().with_context(|| format!("range {s:?}"))?;
        if a > b {
            bail!("empty range {s:?}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse().with_context(|| format!("list {s:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("3..5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_list("1, 4").unwrap(), vec![1, 4]);
        assert_eq!(parse_list("7").unwrap(), vec![7]);
        assert!(parse_list("5..3").is_err());
        assert!(parse_list("x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"dist": "beta:1,1", "n": "4", "seed": 3}"#).unwrap();
        let flags = RunConfig {
            n: Some("5".into()),
            ..Default::default()
        };
        let c = flags.over(file);
        assert_eq!(c.n().unwrap(), 5);
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.dist.as_deref(), Some("beta:1,1"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"nn": 3}"#).is_err());
    }

    #[test]
    fn attack_forms() {
        let c = RunConfig {
            attack: Some("split".into()),
            ..Default::default()
        };
        assert_eq!(c.attack().unwrap().0, Demand::Two);
        let c = RunConfig {
            attack: Some("1, 1/5".into()),
            ..Default::default()
        };
        let (d, t, x, y) = c.attack().unwrap();
        assert_eq!((d, t, x), (Demand::One, Rational::from_integer(1.into()), Rational::from_integer(1.into())));
        assert_eq!(y, Rational::new(1.into(), 5.into()));
    }
}
