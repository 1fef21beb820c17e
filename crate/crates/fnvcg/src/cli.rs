//! The `fnvcg` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use fnvcg_core::distributions::{TypeModel, ValueDistribution};
use fnvcg_core::expectation::{discrete_diff_by_k, expected_diff_poly_q, Scenario};
use fnvcg_core::polynomial::PositivityVerdict;
use fnvcg_core::rational::{to_decimal, to_f64, to_fraction_string, Rational};
use fnvcg_core::thresholds::{
    best_attack_search, impossibility_witness, qstar_fixed_attack, qstar_global, QStar,
};

use crate::config::{parse_list, RunConfig, DEFAULT_DEPTH, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::montecarlo::estimate_expected_diff;
use crate::report::{self, Fig3Row};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "fnvcg", version, about = "Truthfulness thresholds for the two-item VCG auction under false-name bids")]
struct Cli {
    /// JSON config file with the same keys as the flags; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// q* of a single attack
    Threshold(RunConfig),
    /// Certify that no attack gains for any q in [--q, 1]
    Verify(RunConfig),
    /// Distribution on which an attack beats truth at --q
    Witness(RunConfig),
    /// Monte Carlo estimate of truth minus attack
    Simulate(RunConfig),
    /// Exact grid search for the best attack
    Search(RunConfig),
    /// Regenerate a published table
    Reproduce {
        table: Table,
        #[command(flatten)]
        flags: RunConfig,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Table {
    Fig3,
}

/// Parses `argv` (program name first), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn threads(cfg: &RunConfig) -> anyhow::Result<Option<usize>> {
    if let Some(t) = cfg.threads {
        return Ok(Some(t));
    }
    match std::env::var("FNVCG_THREADS") {
        Ok(s) => Ok(Some(s.trim().parse().context("FNVCG_THREADS must be an integer")?)),
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    let base = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let (name, flags, table) = match cli.command {
        Command::Threshold(f) => ("threshold", f, None),
        Command::Verify(f) => ("verify", f, None),
        Command::Witness(f) => ("witness", f, None),
        Command::Simulate(f) => ("simulate", f, None),
        Command::Search(f) => ("search", f, None),
        Command::Reproduce { table, flags } => ("reproduce", flags, Some(table)),
    };
    let cfg = flags.over(base);
    writeln!(out, "config: {}", serde_json::to_string(&cfg)?)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads(&cfg)? {
        pool = pool.num_threads(t);
    }
    let pool = pool.build()?;
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| {
        let w = &mut buf;
        match (name, table) {
            ("threshold", _) => threshold(&cfg, w),
            ("verify", _) => verify(&cfg, w),
            ("witness", _) => witness(&cfg, w),
            ("simulate", _) => simulate(&cfg, w),
            ("search", _) => search(&cfg, w),
            (_, Some(Table::Fig3)) => fig3(&cfg, w),
            _ => unreachable!("every subcommand is matched"),
        }
    });
    out.write_all(&buf)?;
    result
}

fn write_json(path: &Option<PathBuf>, cfg: &RunConfig, mut body: Value) -> anyhow::Result<()> {
    if let Some(p) = path {
        body["config"] = serde_json::to_value(cfg)?;
        let text = serde_json::to_string_pretty(&body)? + "\n";
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn fmt_q_star(q: &QStar) -> String {
    match q {
        QStar::Exact(r) => format!("{} ({})", to_fraction_string(r), to_decimal(r, report::DIGITS)),
        QStar::Interval(i) => format!(
            "{} in [{}, {}]",
            report::q_star_decimal(q),
            to_decimal(&i.lower, 15),
            to_decimal(&i.upper, 15)
        ),
    }
}

fn scenario(cfg: &RunConfig) -> anyhow::Result<Scenario> {
    let (d, t, x, y) = cfg.attack()?;
    Ok(Scenario::attack(d, t, x, y, cfg.n()?)?)
}

fn threshold(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let dist = cfg.dist()?;
    let s = scenario(cfg)?;
    let t0 = Instant::now();
    let c = qstar_fixed_attack(&s, &dist)?;
    let secs = t0.elapsed().as_secs_f64();
    writeln!(out, "q* = {}", fmt_q_star(&c.q_star))?;
    if let Some(p) = &c.polynomial {
        writeln!(out, "truth - attack = {p}")?;
    }
    let roots: Vec<String> = c
        .roots
        .iter()
        .map(|r| to_decimal(&r.midpoint(), report::DIGITS))
        .collect();
    writeln!(out, "roots in [0, 1]: [{}]", roots.join(", "))?;
    write_json(&cfg.json, cfg, report::certificate(&c, secs))?;
    Ok(EXIT_OK)
}

fn verify(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let dist = cfg.dist()?;
    let n = cfg.n()?;
    let q = cfg.q()?;
    let depth = cfg.depth.unwrap_or(DEFAULT_DEPTH);
    let t0 = Instant::now();
    let c = qstar_global(&dist, n, &q, depth)?;
    let secs = t0.elapsed().as_secs_f64();
    let v = c.verification.clone().expect("global certificates carry a verdict");
    let code = match &v {
        PositivityVerdict::Certified => {
            writeln!(out, "certified: no attack gains for q in [{}, 1]", to_fraction_string(&q))?;
            EXIT_OK
        }
        PositivityVerdict::Counterexample { point, value } => {
            let p: Vec<String> = point
                .iter()
                .map(|(v, r)| format!("{}={}", v, to_fraction_string(r)))
                .collect();
            writeln!(
                out,
                "counterexample (demand {}): {} gives truth - attack = {}",
                c.violating_demand.map(|d| d.items()).unwrap_or(0),
                p.join(" "),
                to_fraction_string(value)
            )?;
            EXIT_FALSIFIED
        }
        PositivityVerdict::Inconclusive { depth_reached } => {
            writeln!(out, "inconclusive at depth {depth_reached}")?;
            EXIT_FALSIFIED
        }
    };
    write_json(&cfg.json, cfg, report::certificate(&c, secs))?;
    Ok(code)
}

fn witness(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let q = cfg.q()?;
    let n = cfg.n()?;
    let t0 = Instant::now();
    let w = impossibility_witness(&q, n)?;
    let secs = t0.elapsed().as_secs_f64();
    writeln!(out, "epsilon = {}", to_fraction_string(&w.epsilon))?;
    writeln!(out, "distribution = {}", w.distribution)?;
    writeln!(
        out,
        "truth - attack = {} ({})",
        to_fraction_string(&w.diff),
        to_decimal(&w.diff, report::DIGITS)
    )?;
    write_json(&cfg.json, cfg, report::witness(&w, secs))?;
    Ok(EXIT_OK)
}

fn exact_diff(model: &TypeModel, s: &Scenario) -> Option<Rational> {
    let d = match &model.f1 {
        ValueDistribution::Beta { .. } => expected_diff_poly_q(s, &model.f1).ok()?,
        ValueDistribution::Discrete(_) => discrete_diff_by_k(model, s).ok()?,
    };
    Some(d.at(&model.q))
}

fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let model = TypeModel::new(cfg.q()?, cfg.dist()?)?;
    let s = scenario(cfg)?;
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let t0 = Instant::now();
    let e = estimate_expected_diff(&model, &s, samples, seed)?;
    let secs = t0.elapsed().as_secs_f64();
    let exact = exact_diff(&model, &s);
    writeln!(out, "truth - attack ~ {:.6} +/- {:.6} ({} samples, seed {})", e.mean, e.stderr, e.samples, e.seed)?;
    if let Some(x) = &exact {
        writeln!(out, "exact: {} ({})", to_fraction_string(x), to_decimal(x, report::DIGITS))?;
    }
    let body = json!({
        "scenario": report::scenario(&s),
        "estimate": e,
        "exact": exact.as_ref().map(report::rational),
        "within_3_stderr": exact.as_ref().map(|x| e.agrees_with(to_f64(x), 3.0)),
        "timing": { "seconds": secs },
    });
    write_json(&cfg.json, cfg, body)?;
    Ok(EXIT_OK)
}

fn search(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let dist = cfg.dist()?;
    let t0 = Instant::now();
    let r = best_attack_search(cfg.demand()?, &cfg.theta()?, &dist, cfg.n()?, &cfg.q()?, &cfg.grid()?)?;
    let secs = t0.elapsed().as_secs_f64();
    writeln!(
        out,
        "best attack ({}, {}) gains {}",
        to_fraction_string(&r.best.0),
        to_fraction_string(&r.best.1),
        to_fraction_string(&r.best_diff)
    )?;
    writeln!(out, "beneficial grid points: {}", r.beneficial.len())?;
    write_json(&cfg.json, cfg, report::search(&r, secs))?;
    if let Some(p) = &cfg.csv {
        let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        report::search_csv(&r, f)?;
    }
    Ok(if r.beneficial.is_empty() { EXIT_OK } else { EXIT_FALSIFIED })
}

/// Four-decimal guess just above the split threshold.
fn rounded_guess(q: &QStar) -> Rational {
    let scale = Rational::from_integer(10_000.into());
    (q.upper() * &scale).ceil() / scale
}

fn fig3_cell(alpha: u32, n: u32, verify: bool, depth: u32) -> anyhow::Result<Fig3Row> {
    let dist = ValueDistribution::beta(alpha, 1)?;
    let c = qstar_fixed_attack(&Scenario::split(n as usize)?, &dist)?;
    let verdict = if verify {
        let g = qstar_global(&dist, n as usize, &rounded_guess(&c.q_star), depth)?;
        g.verification.as_ref().map(|v| report::verdict_name(v).to_string())
    } else {
        None
    };
    Ok(Fig3Row {
        alpha,
        n,
        q_star: c.q_star,
        verdict,
    })
}

fn fig3(cfg: &RunConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let alphas = parse_list(cfg.alphas.as_deref().unwrap_or("1..5"))?;
    let ns = parse_list(cfg.n.as_deref().unwrap_or("3..9"))?;
    if let Some(bad) = ns.iter().find(|&&n| n < 3) {
        anyhow::bail!("n = {bad}: the table starts at n = 3");
    }
    let depth = cfg.depth.unwrap_or(DEFAULT_DEPTH);
    let cells: Vec<(u32, u32)> = alphas.iter().flat_map(|&a| ns.iter().map(move |&n| (a, n))).collect();
    let rows: Vec<Fig3Row> = cells
        .par_iter()
        .map(|&(a, n)| fig3_cell(a, n, cfg.verify, depth))
        .collect::<anyhow::Result<_>>()?;
    for r in &rows {
        writeln!(
            out,
            "alpha={} n={} q*={}{}",
            r.alpha,
            r.n,
            report::q_star_decimal(&r.q_star),
            r.verdict.as_deref().map(|v| format!(" {v}")).unwrap_or_default()
        )?;
    }
    match cfg.out.as_deref().or(cfg.csv.as_deref()) {
        Some(p) => write_csv_file(p, &rows)?,
        None => report::fig3_csv(&rows, &mut *out)?,
    }
    let falsified = rows.iter().any(|r| r.verdict.as_deref().is_some_and(|v| v != "certified"));
    Ok(if falsified { EXIT_FALSIFIED } else { EXIT_OK })
}

fn write_csv_file(p: &Path, rows: &[Fig3Row]) -> anyhow::Result<()> {
    let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
    report::fig3_csv(rows, f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    /// Runs serialize so the environment test cannot leak into others.
    static ENV: Mutex<()> = Mutex::new(());

    struct Output {
        code: i32,
        stdout: String,
        stderr: String,
    }

    fn fnvcg(args: &[&str]) -> Output {
        let _guard = ENV.lock().unwrap_or_else(|e| e.into_inner());
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("fnvcg").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        Output {
            code,
            stdout: String::from_utf8(out).unwrap(),
            stderr: String::from_utf8(err).unwrap(),
        }
    }

    fn read_json(p: &Path) -> Value {
        serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
    }

    #[test]
    fn threshold_split_uniform() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("t.json");
        let o = fnvcg(&[
            "threshold", "--dist", "beta:1,1", "--n", "3", "--attack", "split", "--json", json.to_str().unwrap(),
        ]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let text = o.stdout.clone();
        assert!(text.starts_with("config: {"));
        assert!(text.contains("q* = 1/2 (0.500000000000)"), "{text}");
        let v = read_json(&json);
        assert_eq!(v["q_star"]["num"], "1");
        assert_eq!(v["q_star"]["den"], "2");
        assert_eq!(v["scope"]["kind"], "fixed_attack");
        assert_eq!(v["config"]["dist"], "beta:1,1");
        assert!(v["timing"]["seconds"].is_number());
    }

    #[test]
    fn threshold_irrational_root_is_an_interval() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("t.json");
        let o = fnvcg(&[
            "threshold", "--dist", "discrete:0.1:0.5,1:0.5", "--n", "3", "--attack", "split", "--json",
            json.to_str().unwrap(),
        ]);
        assert_eq!(o.code, 0);
        let v = read_json(&json);
        let lo: f64 = v["q_star"]["lo"]["decimal"].as_str().unwrap().parse().unwrap();
        let hi: f64 = v["q_star"]["hi"]["decimal"].as_str().unwrap().parse().unwrap();
        let want = (6.0 - 34f64.sqrt()) / 2.0;
        assert!(lo <= want + 1e-12 && want - 1e-12 <= hi);
    }

    #[test]
    fn verify_exit_codes() {
        let ok = fnvcg(&["verify", "--dist", "beta:1,1", "--n", "3", "--q", "1/2"]);
        assert_eq!(ok.code, 0);
        assert!(ok.stdout.clone().contains("certified"));

        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("v.json");
        let bad = fnvcg(&["verify", "--dist", "beta:1,1", "--n", "3", "--q", "0.4", "--json", json.to_str().unwrap()]);
        assert_eq!(bad.code, 1);
        assert!(bad.stdout.clone().contains("counterexample"));
        let v = read_json(&json);
        assert_eq!(v["verdict"], "counterexample");
        assert!(v["witness"]["value"]["num"].as_str().unwrap().starts_with('-'));
    }

    #[test]
    fn witness_command() {
        let o = fnvcg(&["witness", "--q", "0.9", "--n", "3"]);
        assert_eq!(o.code, 0);
        let text = o.stdout.clone();
        assert!(text.contains("epsilon = 8333/500000000"), "{text}");
        assert!(text.contains("truth - attack = -"));
        // no witness exists for two bidders
        assert_eq!(fnvcg(&["witness", "--q", "0.9", "--n", "2"]).code, 2);
    }

    #[test]
    fn simulate_reports_exact_value() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("s.json");
        let args = [
            "simulate", "--dist", "beta:2,1", "--n", "3", "--q", "0.3", "--attack", "split", "--samples", "20000",
            "--seed", "9", "--json", json.to_str().unwrap(),
        ];
        let o = fnvcg(&args);
        assert_eq!(o.code, 0);
        let v = read_json(&json);
        assert_eq!(v["exact"]["num"], "-443");
        assert_eq!(v["exact"]["den"], "4000");
        assert_eq!(v["estimate"]["samples"], 20000);
        assert_eq!(v["within_3_stderr"], true);
        // same seed, same estimate, regardless of threads
        let again = fnvcg(&[&args[..13], &["--threads", "3"]].concat());
        let mean = |s: &str| s.lines().nth(1).unwrap().to_string();
        assert_eq!(mean(&o.stdout.clone()), mean(&again.stdout.clone()));
    }

    #[test]
    fn search_writes_csv_and_flags_gains() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("g.csv");
        let o = fnvcg(&[
            "search", "--dist", "beta:1,1", "--n", "3", "--q", "0.3", "--demand", "2", "--grid", "1/8", "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.code, 1);
        let table = std::fs::read_to_string(&csv).unwrap();
        assert!(table.starts_with("x,y,gain,gain_exact\n"));
        assert!(table.lines().count() > 1);

        let none = fnvcg(&["search", "--dist", "beta:1,1", "--n", "3", "--q", "0.9", "--grid", "1/4"]);
        assert_eq!(none.code, 0);
        assert!(none.stdout.clone().contains("beneficial grid points: 0"));
    }

    #[test]
    fn fig3_reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let args = |p: &Path, t: &str| {
            vec![
                "reproduce".to_string(),
                "fig3".into(),
                "--alphas".into(),
                "1..3".into(),
                "--n".into(),
                "3..5".into(),
                "--threads".into(),
                t.into(),
                "--out".into(),
                p.to_str().unwrap().into(),
            ]
        };
        let run = |v: Vec<String>| {
            let refs: Vec<&str> = v.iter().map(String::as_str).collect();
            fnvcg(&refs)
        };
        assert_eq!(run(args(&a, "1")).code, 0);
        assert_eq!(run(args(&b, "4")).code, 0);
        let first = std::fs::read(&a).unwrap();
        assert_eq!(first, std::fs::read(&b).unwrap());
        let text = String::from_utf8(first).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains("\n1,3,0.500000000000,1/2,1/2,1/2,\n"));
    }

    #[test]
    fn config_file_with_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"dist": "beta:2,1", "n": "9", "attack": "split"}"#).unwrap();
        let o = fnvcg(&["--config", cfg.to_str().unwrap(), "threshold", "--n", "3"]);
        assert_eq!(o.code, 0);
        let text = o.stdout.clone();
        let first = text.lines().next().unwrap();
        let echoed: Value = serde_json::from_str(first.strip_prefix("config: ").unwrap()).unwrap();
        assert_eq!(echoed["n"], "3");
        assert_eq!(echoed["dist"], "beta:2,1");
        assert!(text.contains("q* = 0.4525"), "{text}");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(fnvcg(&[]).code, 2);
        assert_eq!(fnvcg(&["threshold", "--dist", "beta:1,1"]).code, 2);
        assert_eq!(fnvcg(&["threshold", "--dist", "gamma:1", "--n", "3", "--attack", "split"]).code, 2);
        assert_eq!(fnvcg(&["threshold", "--bogus"]).code, 2);
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"nn": 3}"#).unwrap();
        assert_eq!(fnvcg(&["--config", cfg.to_str().unwrap(), "threshold"]).code, 2);
        let o = fnvcg(&["threshold", "--dist", "beta:1,1", "--n", "3", "--attack", "split", "--threads", "x"]);
        assert_eq!(o.code, 2);
    }

    #[test]
    fn thread_count_from_environment() {
        let _guard = ENV.lock().unwrap_or_else(|e| e.into_inner());
        std::env::set_var("FNVCG_THREADS", "nope");
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = ["fnvcg", "threshold", "--dist", "beta:1,1", "--n", "3", "--attack", "split"];
        let code = run_with(argv, &mut out, &mut err);
        std::env::remove_var("FNVCG_THREADS");
        assert_eq!(code, EXIT_USAGE);
        assert!(String::from_utf8(err).unwrap().contains("FNVCG_THREADS"));
    }
}
