//! Evaluation codes on elliptic curves for one-point divisors `k·Q`, with
//! two MDS tests: all maximal minors, and the `k`-fold sum of evaluation
//! points hitting `[k]Q`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{binomial, mod_inv};
use crate::elliptic::{Curve, GroupIso, Point};
use crate::error::{Error, Result};
use crate::set::ElementSet;
use crate::sumset::SumsetTable;

/// Formal sum `Σ n_i·Q_i` of points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DivisorSpec {
    pub terms: Vec<(Point, i64)>,
}

impl DivisorSpec {
    pub fn single(q: Point, k: i64) -> Self {
        DivisorSpec { terms: vec![(q, k)] }
    }

    pub fn degree(&self) -> i64 {
        self.terms.iter().map(|(_, n)| n).sum()
    }

    pub fn support(&self) -> Vec<Point> {
        let mut s: Vec<Point> = self.terms.iter().filter(|(_, n)| *n != 0).map(|(q, _)| *q).collect();
        s.sort();
        s.dedup();
        s
    }
}

/// `Σ [n_i]Q_i` under the group law.
pub fn divisor_point(curve: &Curve, d: &DivisorSpec) -> Result<Point> {
    let mut acc = Point::Inf;
    for (q, n) in &d.terms {
        curve.check(q)?;
        acc = curve.add(&acc, &curve.mul_scalar(*n, q));
    }
    Ok(acc)
}

/// Exponents `(i, j)` of `x^i·y^j` spanning `L(k·O)`, by pole order
/// `0, 2, 3, .., k`.
pub fn basis_exponents(k: usize) -> Vec<(u32, u32)> {
    std::iter::once(0)
        .chain(2..=k)
        .filter(|&t| t <= k)
        .map(|t| if t % 2 == 0 { (t as u32 / 2, 0) } else { ((t as u32 - 3) / 2, 1) })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeInstance {
    pub curve: Curve,
    pub points: Vec<Point>,
    pub q: Point,
    pub k: usize,
    /// `k × n` over `F_p`.
    pub gen: Vec<Vec<u64>>,
}

/// Generator matrix of `{(f(P_1), .., f(P_n)) : f ∈ L(k·Q)}`, evaluating
/// the `L(k·O)` basis at `P_i ⊖ Q`.
pub fn build_code(curve: &Curve, points: &[Point], q: Point, k: usize) -> Result<CodeInstance> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("need 0 < k < n, got k = {k}, n = {n}")));
    }
    curve.check(&q)?;
    let mut sorted = points.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != n {
        return Err(Error::InvalidParameter("evaluation points must be distinct".into()));
    }
    if points.contains(&q) {
        return Err(Error::InvalidParameter(format!("divisor support {q} meets the evaluation points")));
    }
    let p = curve.p();
    let mut shifted = Vec::with_capacity(n);
    for pt in points {
        curve.check(pt)?;
        match curve.sub(pt, &q) {
            Point::Affine(x, y) => shifted.push((x, y)),
            Point::Inf => return Err(Error::Internal("evaluation point equals Q".into())),
        }
    }
    let pow = |b: u64, e: u32| crate::arith::mod_pow(b, e as u64, p);
    let gen: Vec<Vec<u64>> = basis_exponents(k)
        .into_iter()
        .map(|(i, j)| shifted.iter().map(|&(x, y)| pow(x, i) * pow(y, j) % p).collect())
        .collect();
    let code = CodeInstance { curve: *curve, points: points.to_vec(), q, k, gen };
    let r = rank(&code.gen, p);
    if r != k {
        return Err(Error::Internal(format!("generator rank {r} != k = {k}")));
    }
    Ok(code)
}

/// Rank over `F_p` by Gaussian elimination.
pub fn rank(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, piv);
        let inv = mod_inv(m[r][c], p);
        for v in m[r].iter_mut() {
            *v = *v * inv % p;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + p * p - f * m[r][j] % p) % p;
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Every `k × k` minor nonzero; stops at the first singular one.
pub fn is_mds_rank(code: &CodeInstance) -> bool {
    let n = code.points.len();
    let k = code.k;
    let p = code.curve.p();
    let mut cols: Vec<usize> = (0..k).collect();
    loop {
        let sub: Vec<Vec<u64>> = code.gen.iter().map(|row| cols.iter().map(|&c| row[c]).collect()).collect();
        if rank(&sub, p) < k {
            return false;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if cols[i] < n - k + i {
                cols[i] += 1;
                for j in i + 1..k {
                    cols[j] = cols[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// MDS iff `[k]Q ∉ Γ_k(P)`, computed in the abstract group.
pub fn is_mds_sumset(code: &CodeInstance, iso: &GroupIso) -> Result<bool> {
    if iso.curve() != &code.curve {
        return Err(Error::InvalidParameter("isomorphism belongs to a different curve".into()));
    }
    let g = iso.group();
    let pset = ElementSet::from_indices(g.order(), code.points.iter().map(|pt| iso.fwd(pt)).collect::<Result<Vec<_>>>()?)?;
    let qd = iso.fwd(&divisor_point(&code.curve, &DivisorSpec::single(code.q, code.k as i64))?)?;
    let gamma = crate::sumset::restricted_sumset(g, &pset, code.k)?;
    Ok(!gamma.contains(qd))
}

/// Both verdicts, erroring if they disagree.
pub fn is_mds_both(code: &CodeInstance, iso: &GroupIso) -> Result<bool> {
    let by_rank = is_mds_rank(code);
    let by_sum = is_mds_sumset(code, iso)?;
    if by_rank != by_sum {
        return Err(Error::Internal(format!(
            "minor test says {by_rank}, sum test says {by_sum} on {} k={}",
            code.curve, code.k
        )));
    }
    Ok(by_rank)
}

/// One MDS-check result.
#[derive(Debug, Clone, Serialize)]
pub struct MdsRecord {
    pub q: u64,
    pub a: u64,
    pub b: u64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub group: String,
    #[serde(rename = "P")]
    pub points: Vec<Point>,
    pub k: usize,
    #[serde(rename = "Q")]
    pub divisor_point: Point,
    pub mds: bool,
    pub method: &'static str,
}

/// Minors above this count are skipped by the search's dual verification.
pub const MINOR_CHECK_CAP: u128 = 200_000;

pub fn mds_check(iso: &GroupIso, points: &[Point], q: Point, k: usize, method: &str) -> Result<MdsRecord> {
    let curve = iso.curve();
    let code = build_code(curve, points, q, k)?;
    let (mds, method) = match method {
        "rank" => (is_mds_rank(&code), "rank"),
        "sumset" => (is_mds_sumset(&code, iso)?, "sumset"),
        "both" => (is_mds_both(&code, iso)?, "both"),
        other => return Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
    };
    Ok(MdsRecord {
        q: curve.p(),
        a: curve.a(),
        b: curve.b(),
        n_points: iso.points().len(),
        group: iso.structure_name(),
        points: points.to_vec(),
        k,
        divisor_point: q,
        mds,
        method,
    })
}

/// Largest MDS evaluation set found on one curve.
#[derive(Debug, Clone, Serialize)]
pub struct SearchRecord {
    pub q: u64,
    pub a: u64,
    pub b: u64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub n_even: bool,
    pub group: String,
    pub best_size: usize,
    /// `⌊N/2⌋ − best_size`
    pub gap_half: i64,
    /// `⌊(N+5)/2⌋ − best_size`
    pub gap_half_plus: i64,
    #[serde(rename = "P")]
    pub points: Vec<Point>,
    pub k: usize,
    #[serde(rename = "Q")]
    pub divisor_point: Point,
    /// Minor test run and agreeing, or skipped above `MINOR_CHECK_CAP`.
    pub rank_verified: bool,
    /// Exhaustive over all subsets.
    pub certified: bool,
    /// Local search stopped on budget.
    pub partial: bool,
}

/// Smallest `k ∈ [3, |P|−3]` and some `Q ∉ P` giving an MDS code, by the
/// sum criterion on abstract indices.
fn feasible(iso: &GroupIso, set: &ElementSet) -> Result<Option<(usize, usize)>> {
    let size = set.len();
    if size < 6 {
        return Ok(None);
    }
    let g = iso.group();
    let table = SumsetTable::build(g, set, size / 2)?;
    for k in 3..=size - 3 {
        let gamma = table.gamma(k)?;
        for q in 0..g.order() {
            if !set.contains(q) && !gamma.contains(g.smul(k as i64, q)) {
                return Ok(Some((k, q)));
            }
        }
    }
    Ok(None)
}

/// Greedy growth plus remove-one-add-two local search, seeded with the
/// non-identity coset of each index-2 subgroup. Exhaustive when `N <= 12`.
pub fn mds_search(curve: &Curve, budget: u64, seed: u64) -> Result<SearchRecord> {
    let iso = GroupIso::new(curve)?;
    let g = iso.group().clone();
    let n = g.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(ElementSet, usize, usize)> = None;
    let mut certified = false;
    let mut partial = false;
    let consider = |s: &ElementSet, best: &mut Option<(ElementSet, usize, usize)>| -> Result<bool> {
        if best.as_ref().is_some_and(|(b, _, _)| b.len() >= s.len()) {
            return Ok(false);
        }
        if let Some((k, q)) = feasible(&iso, s)? {
            *best = Some((s.clone(), k, q));
            return Ok(true);
        }
        Ok(false)
    };
    if n <= 12 {
        for mask in 0u32..(1 << n) {
            let s = ElementSet::from_predicate(n, |i| mask >> i & 1 == 1);
            consider(&s, &mut best)?;
        }
        certified = true;
    } else {
        if n % 2 == 0 {
            for (_, cosets) in g.subgroups_of_index(2)? {
                let other = cosets.into_iter().find(|c| !c.contains(0)).unwrap();
                consider(&other, &mut best)?;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        // greedy growth, tracking sets below size 6 without a feasibility test
        let mut cur = ElementSet::empty(n);
        let mut spent = 0u64;
        for &x in &order {
            let mut next = cur.clone();
            next.insert(x);
            spent += 1;
            if next.len() < 6 || feasible(&iso, &next)?.is_some() {
                cur = next;
            }
        }
        consider(&cur, &mut best)?;
        let mut cur = best.as_ref().map(|b| b.0.clone()).unwrap_or(cur);
        'outer: loop {
            let inside = cur.to_vec();
            let outside = cur.complement().to_vec();
            for &r in &inside {
                for (i, &x) in outside.iter().enumerate() {
                    for &y in &outside[i + 1..] {
                        spent += 1;
                        if spent > budget {
                            partial = true;
                            break 'outer;
                        }
                        let mut s = cur.clone();
                        s.remove(r);
                        s.insert(x);
                        s.insert(y);
                        if consider(&s, &mut best)? {
                            cur = s;
                            continue 'outer;
                        }
                    }
                }
            }
            break;
        }
    }
    let (set, k, qi) = best.ok_or_else(|| Error::BudgetExhausted(budget))?;
    let points: Vec<Point> = set.iter().map(|i| iso.back(i)).collect::<Result<_>>()?;
    let q = iso.back(qi)?;
    let code = build_code(curve, &points, q, k)?;
    if !is_mds_sumset(&code, &iso)? {
        return Err(Error::Internal("search record fails the sum criterion".into()));
    }
    let rank_verified = if binomial(points.len() as u64, k as u64) <= MINOR_CHECK_CAP {
        if !is_mds_rank(&code) {
            return Err(Error::Internal("search record fails the minor test".into()));
        }
        true
    } else {
        false
    };
    let size = points.len() as i64;
    Ok(SearchRecord {
        q: curve.p(),
        a: curve.a(),
        b: curve.b(),
        n_points: n,
        n_even: n % 2 == 0,
        group: iso.structure_name(),
        best_size: points.len(),
        gap_half: (n / 2) as i64 - size,
        gap_half_plus: ((n + 5) / 2) as i64 - size,
        points,
        k,
        divisor_point: q,
        rank_verified,
        certified,
        partial,
    })
}
