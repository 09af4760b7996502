//! Self-check harness run by `sumsetlab verify`: each invariant of the
//! library is exercised on seeded random or exhaustive instances and the
//! first failing instance is kept.

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::codes::{build_code, is_mds_rank, is_mds_sumset};
use crate::constructive::{dp_represent, pair_padding_represent};
use crate::critical::{mu_k_exact, spot_theorem_a, DEFAULT_BUDGET};
use crate::elliptic::{hasse_holds, Curve, GroupIso};
use crate::error::Result;
use crate::group::{all_groups_of_order, GroupSpec};
use crate::obstruct::consecutive_cover;
use crate::set::ElementSet;
use crate::sumset::{dgm_bound, dsh_bound, Multiset, SumsetTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Fast,
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: u64,
    pub passed: bool,
    pub counterexample: Option<Value>,
    pub millis: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub tier: Tier,
    pub seed: u64,
    pub fault_injected: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Check {
    instances: u64,
    failure: Option<Value>,
}

impl Check {
    fn new() -> Self {
        Check { instances: 0, failure: None }
    }

    /// Counts one instance; keeps the first failure.
    fn record(&mut self, ok: bool, instance: impl FnOnce() -> Value) {
        self.instances += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(instance());
        }
    }
}

fn random_subset(rng: &mut ChaCha8Rng, g: usize) -> ElementSet {
    let size = rng.gen_range(0..=g);
    ElementSet::from_indices(g, sample(rng, g, size).into_iter()).unwrap()
}

/// `Γ_k` by walking all k-subsets.
fn gamma_brute(group: &GroupSpec, elems: &[usize], k: usize) -> ElementSet {
    fn walk(group: &GroupSpec, elems: &[usize], start: usize, left: usize, acc: usize, out: &mut ElementSet) {
        if left == 0 {
            out.insert(acc);
            return;
        }
        for i in start..elems.len() {
            if elems.len() - i < left {
                break;
            }
            walk(group, elems, i + 1, left - 1, group.add(acc, elems[i]), out);
        }
    }
    let mut out = ElementSet::empty(group.order());
    if k <= elems.len() {
        walk(group, elems, 0, k, 0, &mut out);
    }
    out
}

struct Scale {
    max_order: u64,
    sets_per_group: usize,
    random: usize,
    hasse_p: u64,
    cover3_u: usize,
    cover5_u: usize,
    mu_order: u64,
}

/// Runs every check of `tier`. With `inject_fault`, one DP bit is flipped
/// before the complement-identity check, which must then fail.
pub fn verify_suite(tier: Tier, seed: u64, inject_fault: bool) -> Result<VerifyReport> {
    let scale = match tier {
        Tier::Fast => Scale { max_order: 12, sets_per_group: 20, random: 200, hasse_p: 31, cover3_u: 8, cover5_u: 6, mu_order: 10 },
        Tier::Full => Scale { max_order: 24, sets_per_group: 200, random: 1000, hasse_p: 61, cover3_u: 12, cover5_u: 10, mu_order: 16 },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut(&mut Check) -> Result<()>| -> Result<()> {
        let start = Instant::now();
        let mut c = Check::new();
        f(&mut c)?;
        checks.push(CheckResult {
            name,
            instances: c.instances,
            passed: c.failure.is_none(),
            counterexample: c.failure,
            millis: start.elapsed().as_millis(),
        });
        Ok(())
    };

    let groups: Vec<GroupSpec> = (1..=scale.max_order).flat_map(all_groups_of_order).collect();

    run("dp layers equal k-subset enumeration", &mut |c| {
        for g in &groups {
            for _ in 0..scale.sets_per_group {
                let a = random_subset(&mut rng, g.order());
                let elems = a.to_vec();
                let table = SumsetTable::build(g, &a, a.len())?;
                for k in 0..=a.len() {
                    let brute = gamma_brute(g, &elems, k);
                    c.record(table.layer(k).unwrap() == &brute, || json!({"group": g, "set": a, "k": k}));
                }
            }
        }
        Ok(())
    })?;

    run("complement identity", &mut |c| {
        let mut pending_fault = inject_fault;
        for g in &groups {
            for _ in 0..scale.sets_per_group {
                let a = random_subset(&mut rng, g.order());
                let mut table = SumsetTable::build(g, &a, a.len())?;
                if pending_fault && a.len() >= 2 {
                    table.inject_fault(1, 0);
                    pending_fault = false;
                }
                let total = g.sum(&a);
                for k in 0..=a.len() {
                    let via = g.reflect(total, table.layer(a.len() - k).unwrap());
                    let direct = table.layer(k).unwrap();
                    c.record(&via == direct, || {
                        let bad = (0..g.order()).find(|&x| via.contains(x) != direct.contains(x));
                        json!({"group": g, "set": a, "k": k, "element": bad})
                    });
                }
            }
        }
        Ok(())
    })?;

    run("translation covariance and monotonicity", &mut |c| {
        for g in &groups {
            for _ in 0..scale.sets_per_group / 4 + 1 {
                let a = random_subset(&mut rng, g.order());
                let t = rng.gen_range(0..g.order());
                let shifted = g.translate(&a, t);
                let ta = SumsetTable::build(g, &a, a.len())?;
                let ts = SumsetTable::build(g, &shifted, a.len())?;
                let mut bigger = a.clone();
                bigger.insert(rng.gen_range(0..g.order()));
                let tb = SumsetTable::build(g, &bigger, a.len())?;
                for k in 0..=a.len() {
                    let moved = g.translate(ta.layer(k).unwrap(), g.smul(k as i64, t));
                    c.record(&moved == ts.layer(k).unwrap(), || json!({"group": g, "set": a, "shift": t, "k": k}));
                    c.record(ta.layer(k).unwrap().is_subset(tb.layer(k).unwrap()), || json!({"group": g, "set": a, "k": k}));
                }
            }
        }
        Ok(())
    })?;

    run("dsh lower bound in Z_p", &mut |c| {
        for p in [5u64, 7, 11, 13, 17, 19, 23, 29, 31] {
            let g = GroupSpec::cyclic(p)?;
            for _ in 0..scale.random / 10 {
                let a = random_subset(&mut rng, p as usize);
                let table = SumsetTable::build(&g, &a, a.len())?;
                for k in 1..=a.len() {
                    let bound = dsh_bound(p, a.len() as u64, k as u64)?;
                    let size = table.layer(k).unwrap().len() as u64;
                    c.record(size >= bound, || json!({"p": p, "set": a, "k": k, "size": size, "bound": bound}));
                }
            }
        }
        Ok(())
    })?;

    run("dgm lower bound for proper subsum sets", &mut |c| {
        for _ in 0..scale.random {
            let p = [5u64, 7, 11, 13, 17, 19, 23, 29, 31][rng.gen_range(0..9)];
            let mult: Vec<usize> = (0..p).map(|_| if rng.gen_bool(0.4) { rng.gen_range(0..4) } else { 0 }).collect();
            let u = Multiset::new(p, mult)?;
            for (len, s) in u.sigma_all().iter().enumerate().skip(1) {
                if !s.is_full() {
                    let bound = dgm_bound(&u, len)?;
                    c.record(s.len() as i64 >= bound, || json!({"p": p, "mult": u.multiplicities(), "len": len}));
                }
            }
        }
        Ok(())
    })?;

    run("consecutive-length coverage", &mut |c| {
        for (p, max_u) in [(3u64, scale.cover3_u), (5, scale.cover5_u)] {
            for_each_multiset(p, max_u, &mut |u| {
                let width = p as usize - 1;
                if u.total() >= width {
                    for start in 0..=u.total() - width {
                        let report = consecutive_cover(p, u, start)?;
                        c.record(report.covered, || json!({"p": p, "mult": u.multiplicities(), "start": start}));
                    }
                }
                Ok(())
            })?;
        }
        Ok(())
    })?;

    run("constructive witnesses agree with dp membership", &mut |c| {
        for _ in 0..scale.random / 2 {
            let n = rng.gen_range(7..=45u64);
            let g = GroupSpec::cyclic(n)?;
            let size = rng.gen_range(n as usize / 2..=n as usize);
            let a = ElementSet::from_indices(n as usize, sample(&mut rng, n as usize, size).into_iter())?;
            let k = rng.gen_range(3..=size.min(11));
            let target = rng.gen_range(0..n as usize);
            let dp = dp_represent(&g, &a, k, target)?;
            match pair_padding_represent(&g, &a, k, target) {
                Ok(w) => c.record(dp.is_some() && w.elements.len() == k, || json!({"group": g, "set": a, "k": k, "target": target})),
                Err(crate::Error::Hypothesis(_)) => c.record(true, || Value::Null),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    })?;

    run("hasse interval for all curves", &mut |c| {
        for p in (5..=scale.hasse_p).filter(|&p| crate::arith::is_prime(p)) {
            for a in 0..p as i64 {
                for b in 0..p as i64 {
                    let Ok(curve) = Curve::new(p, a, b) else { continue };
                    let n = curve.enumerate_points()?.len() as u64;
                    c.record(hasse_holds(p, n), || json!({"curve": curve, "N": n}));
                }
            }
        }
        Ok(())
    })?;

    run("minor test equals sum criterion", &mut |c| {
        for _ in 0..scale.random / 4 {
            let p = [5u64, 7, 11, 13, 17, 19, 23][rng.gen_range(0..7)];
            let Ok(curve) = Curve::new(p, rng.gen_range(0..p as i64), rng.gen_range(0..p as i64)) else { continue };
            let iso = GroupIso::new(&curve)?;
            let pts = iso.points();
            if pts.len() < 3 {
                continue;
            }
            let q = pts[rng.gen_range(0..pts.len())];
            let rest: Vec<_> = pts.iter().copied().filter(|x| *x != q).collect();
            let n = rng.gen_range(2..=rest.len().min(10));
            let eval: Vec<_> = sample(&mut rng, rest.len(), n).into_iter().map(|i| rest[i]).collect();
            let k = rng.gen_range(1..n);
            let code = build_code(&curve, &eval, q, k)?;
            let by_rank = is_mds_rank(&code);
            let by_sum = is_mds_sumset(&code, &iso)?;
            c.record(by_rank == by_sum, || json!({"curve": curve, "P": eval, "Q": q, "k": k}));
        }
        Ok(())
    })?;

    run("certified critical numbers match brute force", &mut |c| {
        for g in (4..=scale.mu_order).flat_map(all_groups_of_order) {
            for k in 1..=3usize.min(g.order()) {
                let r = mu_k_exact(&g, k, DEFAULT_BUDGET, g.order())?;
                let brute = brute_mu(&g, k);
                c.record(r.mu_exact == Some(brute), || json!({"group": g, "k": k, "found": r.mu_exact, "brute": brute}));
            }
        }
        Ok(())
    })?;

    if tier == Tier::Full {
        run("covering at density one half, Z46320", &mut |c| {
            let g = GroupSpec::cyclic(46320)?;
            let report = spot_theorem_a(&g, 20, 10, seed)?;
            for (trial, k) in &report.failures {
                c.record(false, || json!({"trial": trial, "k": k}));
            }
            c.instances += (report.trials * (report.k_low.len() + report.k_high.len())) as u64;
            Ok(())
        })?;
    }

    Ok(VerifyReport { tier, seed, fault_injected: inject_fault, checks })
}

/// Least `m` with every `m`-subset covering, scanning all subsets.
fn brute_mu(group: &GroupSpec, k: usize) -> u64 {
    let g = group.order();
    let mut largest_bad = 0;
    for mask in 0u64..(1 << g) {
        let size = mask.count_ones() as usize;
        if size <= largest_bad {
            continue;
        }
        let elems: Vec<usize> = (0..g).filter(|i| mask >> i & 1 == 1).collect();
        if !gamma_brute(group, &elems, k).is_full() {
            largest_bad = size;
        }
    }
    largest_bad as u64 + 1
}

fn for_each_multiset(p: u64, max_total: usize, f: &mut dyn FnMut(&Multiset) -> Result<()>) -> Result<()> {
    // multiplicities of the nonzero residues, v_0 = 0
    let slots = p as usize - 1;
    let mut mult = vec![0usize; slots];
    loop {
        let total: usize = mult.iter().sum();
        if total <= max_total {
            let mut full = vec![0usize];
            full.extend_from_slice(&mult);
            f(&Multiset::new(p, full)?)?;
        }
        let mut i = 0;
        loop {
            if i == slots {
                return Ok(());
            }
            mult[i] += 1;
            if mult.iter().sum::<usize>() <= max_total {
                break;
            }
            mult[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_tier_passes() {
        let r = verify_suite(Tier::Fast, 0, false).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{} failed: {:?}", c.name, c.counterexample);
            assert!(c.instances > 0, "{}", c.name);
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let r = verify_suite(Tier::Fast, 0, true).unwrap();
        let c = r.checks.iter().find(|c| c.name == "complement identity").unwrap();
        assert!(!c.passed);
        assert!(c.counterexample.is_some());
    }
}
