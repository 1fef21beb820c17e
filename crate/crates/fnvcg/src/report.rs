//! JSON and CSV renderings of results. Rationals are written exactly as
//! `{num, den}` with a 12-digit decimal alongside.

use std::io::Write;

use serde_json::{json, Value};

use fnvcg_core::expectation::{Scenario, Strategy};
use fnvcg_core::mechanism::Demand;
use fnvcg_core::polynomial::{PositivityVerdict, Var};
use fnvcg_core::rational::{to_decimal, to_fraction_string, Rational};
use fnvcg_core::thresholds::{
    AttackSearchReport, ImpossibilityWitness, QStar, Scope, ThresholdCertificate,
};

pub const DIGITS: usize = 12;

pub fn rational(r: &Rational) -> Value {
    json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "decimal": to_decimal(r, DIGITS),
    })
}

pub fn q_star(q: &QStar) -> Value {
    match q {
        QStar::Exact(r) => rational(r),
        QStar::Interval(i) => json!({ "lo": rational(&i.lower), "hi": rational(&i.upper) }),
    }
}

/// 12-digit decimal for display: exact value or interval midpoint.
pub fn q_star_decimal(q: &QStar) -> String {
    to_decimal(&q.midpoint(), DIGITS)
}

pub fn demand(d: Demand) -> u8 {
    d.items()
}

pub fn scenario(s: &Scenario) -> Value {
    let (x, y) = match &s.strategy {
        Strategy::Attack { x, y } => (rational(x), rational(y)),
        Strategy::Truthful => (Value::Null, Value::Null),
    };
    json!({
        "demand": demand(s.demand),
        "theta": rational(&s.theta),
        "x": x,
        "y": y,
        "n": s.n,
    })
}

pub fn verdict_name(v: &PositivityVerdict) -> &'static str {
    match v {
        PositivityVerdict::Certified => "certified",
        PositivityVerdict::Counterexample { .. } => "counterexample",
        PositivityVerdict::Inconclusive { .. } => "inconclusive",
    }
}

fn point(p: &[(Var, Rational)]) -> Value {
    let mut m = serde_json::Map::new();
    for (v, r) in p {
        let name = if *v == Var::T { "theta" } else { v.name() };
        m.insert(name.to_string(), rational(r));
    }
    Value::Object(m)
}

pub fn certificate(c: &ThresholdCertificate, seconds: f64) -> Value {
    let scope = match &c.scope {
        Scope::FixedAttack { scenario: s } => json!({ "kind": "fixed_attack", "scenario": scenario(s) }),
        Scope::Global { dist, n } => json!({ "kind": "global", "dist": dist.to_string(), "n": n }),
    };
    let verdict = c.verification.as_ref().map(verdict_name);
    let mut witness = Value::Null;
    if let Some(PositivityVerdict::Counterexample { point: p, value }) = &c.verification {
        witness = json!({
            "point": point(p),
            "value": rational(value),
            "demand": c.violating_demand.map(demand),
        });
    } else if let Some((q, value)) = &c.falsification {
        witness = json!({ "point": { "q": rational(q) }, "value": rational(value) });
    }
    let depth = match &c.verification {
        Some(PositivityVerdict::Inconclusive { depth_reached }) => json!(depth_reached),
        _ => Value::Null,
    };
    json!({
        "scope": scope,
        "q_star": q_star(&c.q_star),
        "verdict": verdict,
        "depth_reached": depth,
        "witness": witness,
        "roots": c.roots.iter().map(|r| json!({ "lo": rational(&r.lower), "hi": rational(&r.upper) })).collect::<Vec<_>>(),
        "polynomial": c.polynomial.as_ref().map(|p| p.to_string()),
        "timing": { "seconds": seconds },
    })
}

pub fn witness(w: &ImpossibilityWitness, seconds: f64) -> Value {
    let atoms: Vec<Value> = w
        .distribution
        .atoms()
        .unwrap_or_default()
        .iter()
        .map(|a| json!({ "value": rational(&a.value), "prob": rational(&a.prob) }))
        .collect();
    json!({
        "q": rational(&w.q),
        "n": w.n,
        "epsilon": rational(&w.epsilon),
        "distribution": { "literal": w.distribution.to_string(), "atoms": atoms },
        "scenario": scenario(&w.scenario),
        "diff": rational(&w.diff),
        "timing": { "seconds": seconds },
    })
}

pub fn search(r: &AttackSearchReport, seconds: f64) -> Value {
    json!({
        "best": { "x": rational(&r.best.0), "y": rational(&r.best.1) },
        "best_gain": rational(&r.best_diff),
        "grid_step": rational(&r.grid_step),
        "beneficial": r.beneficial.iter().map(|((x, y), g)| json!({
            "x": rational(x), "y": rational(y), "gain": rational(g),
        })).collect::<Vec<_>>(),
        "timing": { "seconds": seconds },
    })
}

pub fn search_csv<W: Write>(r: &AttackSearchReport, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "gain", "gain_exact"])?;
    for ((x, y), g) in &r.beneficial {
        out.write_record([
            to_fraction_string(x),
            to_fraction_string(y),
            to_decimal(g, DIGITS),
            to_fraction_string(g),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One cell of the split-attack threshold table.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub alpha: u32,
    pub n: u32,
    pub q_star: QStar,
    pub verdict: Option<String>,
}

pub fn fig3_csv<W: Write>(rows: &[Fig3Row], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["alpha", "n", "q_star", "q_star_lower", "q_star_upper", "q_star_exact", "verdict"])?;
    for r in rows {
        let exact = match &r.q_star {
            QStar::Exact(e) => to_fraction_string(e),
            QStar::Interval(_) => String::new(),
        };
        out.write_record([
            r.alpha.to_string(),
            r.n.to_string(),
            q_star_decimal(&r.q_star),
            to_fraction_string(r.q_star.lower()),
            to_fraction_string(r.q_star.upper()),
            exact,
            r.verdict.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fnvcg_core::rational::rat;

    #[test]
    fn rational_json() {
        let v = rational(&rat(-1, 3));
        assert_eq!(v["num"], "-1");
        assert_eq!(v["den"], "3");
        assert_eq!(v["decimal"], "-0.333333333333");
    }

    #[test]
    fn fig3_rows() {
        let rows = [Fig3Row {
            alpha: 1,
            n: 3,
            q_star: QStar::Exact(rat(1, 2)),
            verdict: None,
        }];
        let mut buf = Vec::new();
        fig3_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "alpha,n,q_star,q_star_lower,q_star_upper,q_star_exact,verdict\n1,3,0.500000000000,1/2,1/2,1/2,\n"
        );
    }
}
