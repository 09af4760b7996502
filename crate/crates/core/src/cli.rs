//! Command-line driver. Every command prints one JSON document (or CSV
//! where supported) tagged with the engine version and seed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::codes::{mds_check, mds_search};
use crate::constructive::{dp_represent, fiber_lift_represent, pair_padding_represent};
use crate::critical::{dichotomy_table, mu_k_exact, spot_theorem_a, CriticalRecord, DEFAULT_BUDGET, DEFAULT_CERTIFY_ORDER};
use crate::elliptic::{Curve, GroupIso, Point};
use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::obstruct::obstruction_scan;
use crate::set::ElementSet;
use crate::sumset::SumsetTable;
use crate::verify::{verify_suite, Tier};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "sumsetlab", version, about = "Restricted sumsets, critical numbers and elliptic MDS codes")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// RNG seed for randomized commands
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Γ_k(A) for k = 0..=kmax
    Sumset {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        set: String,
        #[arg(long, alias = "k")]
        kmax: usize,
    },
    /// Critical number μ_k(G)
    Mu {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Largest order searched exhaustively
        #[arg(long, default_value_t = DEFAULT_CERTIFY_ORDER)]
        certify_order: usize,
    },
    /// μ_k for every group with order in a range
    Dichotomy {
        #[arg(long, default_value_t = 4)]
        g_min: u64,
        #[arg(long, default_value_t = 16)]
        g_max: u64,
        /// Comma-separated lengths
        #[arg(long, default_value = "3")]
        k: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = DEFAULT_CERTIFY_ORDER)]
        certify_order: usize,
    },
    /// Structural alternatives for a set
    Obstruct {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        set: String,
        /// Allowed number of elements outside the coset(s)
        #[arg(long, default_value_t = 0)]
        slack: usize,
    },
    /// Explicit k-subset of A summing to a target
    Represent {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long)]
        set: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        target: usize,
        #[arg(long, value_enum, default_value_t = RepMethod::Dp)]
        method: RepMethod,
        /// Quotient prime for fiber lifting
        #[arg(long)]
        prime: Option<u64>,
        /// Which quotient map of that prime, in enumeration order
        #[arg(long, default_value_t = 0)]
        map_index: usize,
    },
    /// Point count and group structure of a curve
    Curve {
        #[arg(long)]
        curve: Curve,
        /// Include every point
        #[arg(long)]
        points: bool,
    },
    /// MDS verdict for the code of k·Q on the given points
    MdsCheck {
        #[arg(long)]
        curve: Curve,
        #[arg(long)]
        k: usize,
        /// Points as `(x,y)` separated by spaces or semicolons
        #[arg(long)]
        points: String,
        #[arg(long, default_value = "inf")]
        q: String,
        #[arg(long, default_value = "both")]
        method: String,
    },
    /// Large MDS evaluation sets over a range of primes
    MdsSearch {
        #[arg(long, default_value_t = 5)]
        p_min: u64,
        #[arg(long, default_value_t = 23)]
        p_max: u64,
        /// Curves sampled per prime
        #[arg(long, default_value_t = 2)]
        curves: usize,
        #[arg(long, default_value_t = 20_000)]
        budget: u64,
    },
    /// Coverage by random sets just above half the group
    SpotTheoremA {
        #[arg(long)]
        group: GroupSpec,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, alias = "k", default_value_t = 10)]
        kmax: usize,
    },
    /// Library self-checks
    Verify {
        #[arg(long, value_enum, default_value_t = Tier::Fast)]
        tier: Tier,
        /// Corrupt one DP bit to demonstrate detection
        #[arg(long)]
        inject_fault: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepMethod {
    Dp,
    Pair,
    Lift,
}

/// Indices separated by commas, with `a-b` ranges, or `hex:<bits>`.
pub fn parse_set(order: usize, s: &str) -> Result<ElementSet> {
    let s = s.trim();
    if let Some(bits) = s.strip_prefix("hex:") {
        return ElementSet::from_hex(order, bits);
    }
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad element `{t}`")));
        match item.split_once('-') {
            Some((lo, hi)) => out.extend(num(lo)?..=num(hi)?),
            None => out.push(num(item)?),
        }
    }
    ElementSet::from_indices(order, out)
}

pub fn parse_points(curve: &Curve, s: &str) -> Result<Vec<Point>> {
    let mut pts = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == ';' || c == ',');
        if rest.is_empty() {
            break;
        }
        let end = if rest.starts_with("inf") {
            3
        } else {
            rest.find(')').map(|i| i + 1).ok_or_else(|| Error::Parse(format!("unterminated point in `{s}`")))?
        };
        let pt: Point = rest[..end].parse()?;
        curve.check(&pt)?;
        pts.push(pt);
        rest = &rest[end..];
    }
    Ok(pts)
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExhausted(_) => 3,
        Error::Internal(_) => 4,
        _ => 2,
    }
}

struct Output {
    body: String,
    status: i32,
}

fn envelope(command: &str, seed: u64, result: impl Serialize) -> Result<String> {
    let v = json!({
        "engine_version": ENGINE_VERSION,
        "command": command,
        "seed": seed,
        "result": result,
    });
    serde_json::to_string_pretty(&v).map(|s| s + "\n").map_err(|e| Error::Internal(e.to_string()))
}

fn json_only(format: Format, command: &str) -> Result<()> {
    if format == Format::Csv {
        return Err(Error::InvalidParameter(format!("`{command}` has no CSV form")));
    }
    Ok(())
}

fn dichotomy_csv(records: &[CriticalRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(["group", "g", "torsion2", "p_min", "k", "mu_exact", "mu_lower", "mu_upper", "witness", "hypothesis_flags", "note"])
        .map_err(csv_err)?;
    for r in records {
        let witness = r.witness.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let flags = r
            .prediction
            .hypotheses
            .iter()
            .map(|(k, v)| format!("{k}={}", u8::from(*v)))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.group.to_string(),
            r.order.to_string(),
            r.torsion2.to_string(),
            r.p_min.to_string(),
            r.k.to_string(),
            r.mu_exact.map(|m| m.to_string()).unwrap_or_default(),
            r.mu_lower.to_string(),
            r.mu_upper.to_string(),
            witness,
            flags,
            r.note.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?).map_err(|e| Error::Internal(e.to_string()))
}

fn run_command(cli: &Cli) -> Result<Output> {
    let seed = cli.common.seed;
    let format = cli.common.format;
    let ok = |body: String| Ok(Output { body, status: 0 });
    match &cli.command {
        Command::Sumset { group, set, kmax } => {
            json_only(format, "sumset")?;
            let a = parse_set(group.order(), set)?;
            let table = SumsetTable::build(group, &a, *kmax)?;
            let layers: Vec<Value> = table
                .layers()
                .iter()
                .enumerate()
                .map(|(k, l)| json!({"k": k, "size": l.len(), "covers": l.is_full(), "elements": l}))
                .collect();
            ok(envelope("sumset", seed, json!({"group": group, "set": a, "kmax": kmax, "layers": layers}))?)
        }
        Command::Mu { group, k, budget, certify_order } => {
            json_only(format, "mu")?;
            let r = mu_k_exact(group, *k, *budget, *certify_order)?;
            let status = if !r.certified && group.order() <= *certify_order { 3 } else { 0 };
            Ok(Output { body: envelope("mu", seed, &r)?, status })
        }
        Command::Dichotomy { g_min, g_max, k, budget, certify_order } => {
            if g_min > g_max || *g_min < 1 {
                return Err(Error::InvalidParameter(format!("order range {g_min}..={g_max} is empty")));
            }
            let ks: Vec<usize> = k
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad length `{t}`"))))
                .collect::<Result<_>>()?;
            let records = dichotomy_table(*g_min..=*g_max, &ks, *budget, *certify_order)?;
            let status = if records.iter().any(|r| !r.certified && r.order as usize <= *certify_order) { 3 } else { 0 };
            let body = match format {
                Format::Json => envelope("dichotomy", seed, &records)?,
                Format::Csv => dichotomy_csv(&records)?,
            };
            Ok(Output { body, status })
        }
        Command::Obstruct { group, set, slack } => {
            json_only(format, "obstruct")?;
            let a = parse_set(group.order(), set)?;
            ok(envelope("obstruct", seed, obstruction_scan(group, &a, *slack)?)?)
        }
        Command::Represent { group, set, k, target, method, prime, map_index } => {
            json_only(format, "represent")?;
            let a = parse_set(group.order(), set)?;
            let w = match method {
                RepMethod::Dp => dp_represent(group, &a, *k, *target)?
                    .ok_or_else(|| Error::Hypothesis(format!("target {target} not in Gamma_{k}(A)")))?,
                RepMethod::Pair => pair_padding_represent(group, &a, *k, *target)?,
                RepMethod::Lift => {
                    let p = prime.ok_or_else(|| Error::InvalidParameter("fiber lifting needs --prime".into()))?;
                    let maps = group.quotient_maps(p)?;
                    let pi = maps
                        .get(*map_index)
                        .ok_or_else(|| Error::InvalidParameter(format!("only {} quotient maps to Z_{p}", maps.len())))?;
                    fiber_lift_represent(group, pi, &a, *k, *target)?
                }
            };
            ok(envelope("represent", seed, w)?)
        }
        Command::Curve { curve, points } => {
            json_only(format, "curve")?;
            let iso = GroupIso::new(curve)?;
            let (m, n) = iso.invariants();
            let (p1, p2) = iso.generators();
            let mut v = json!({
                "curve": curve,
                "N": iso.points().len(),
                "hasse": crate::elliptic::hasse_holds(curve.p(), iso.points().len() as u64),
                "group": iso.structure_name(),
                "m": m,
                "n": n,
                "generators": [p1, p2],
            });
            if *points {
                v["points"] = json!(iso.points());
            }
            ok(envelope("curve", seed, v)?)
        }
        Command::MdsCheck { curve, k, points, q, method } => {
            json_only(format, "mds-check")?;
            let iso = GroupIso::new(curve)?;
            let pts = parse_points(curve, points)?;
            let q: Point = q.parse()?;
            ok(envelope("mds-check", seed, mds_check(&iso, &pts, q, *k, method)?)?)
        }
        Command::MdsSearch { p_min, p_max, curves, budget } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut records = Vec::new();
            for p in (*p_min.max(&5)..=*p_max).filter(|&p| crate::arith::is_prime(p)) {
                let mut seen = std::collections::BTreeSet::new();
                let mut tries = 0;
                while seen.len() < *curves && tries < 50 * curves {
                    tries += 1;
                    let (a, b) = (rng.gen_range(0..p as i64), rng.gen_range(0..p as i64));
                    let Ok(curve) = Curve::new(p, a, b) else { continue };
                    if seen.insert((a, b)) {
                        records.push(mds_search(&curve, *budget, seed)?);
                    }
                }
            }
            let status = if records.iter().any(|r| r.partial) { 3 } else { 0 };
            let body = match format {
                Format::Json => envelope("mds-search", seed, &records)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let e = |e: csv::Error| Error::Internal(e.to_string());
                    w.write_record(["q", "a", "b", "N", "group", "best_size", "gap_half", "gap_half_plus", "k", "rank_verified", "certified", "partial"])
                        .map_err(e)?;
                    for r in &records {
                        w.write_record([
                            r.q.to_string(),
                            r.a.to_string(),
                            r.b.to_string(),
                            r.n_points.to_string(),
                            r.group.clone(),
                            r.best_size.to_string(),
                            r.gap_half.to_string(),
                            r.gap_half_plus.to_string(),
                            r.k.to_string(),
                            r.rank_verified.to_string(),
                            r.certified.to_string(),
                            r.partial.to_string(),
                        ])
                        .map_err(e)?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
                        .map_err(|e| Error::Internal(e.to_string()))?
                }
            };
            Ok(Output { body, status })
        }
        Command::SpotTheoremA { group, trials, kmax } => {
            json_only(format, "spot-theorem-a")?;
            let r = spot_theorem_a(group, *trials, *kmax, seed)?;
            let status = if r.failures.is_empty() { 0 } else { 4 };
            Ok(Output { body: envelope("spot-theorem-a", seed, r)?, status })
        }
        Command::Verify { tier, inject_fault } => {
            json_only(format, "verify")?;
            let r = verify_suite(*tier, seed, *inject_fault)?;
            let status = if r.passed() { 0 } else { 4 };
            let summary: BTreeMap<&str, bool> = r.checks.iter().map(|c| (c.name, c.passed)).collect();
            Ok(Output { body: envelope("verify", seed, json!({"report": r, "summary": summary}))?, status })
        }
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let out = match run_command(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &cli.common.out {
        Some(path) => std::fs::write(path, &out.body),
        None => std::io::stdout().write_all(out.body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return 2;
    }
    out.status
}
