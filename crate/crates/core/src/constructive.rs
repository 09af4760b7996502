//! Explicit k-sum witnesses: disjoint pairs with a common sum, padding of a
//! short base solution by such pairs, and lifting through a quotient to a
//! prime.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupSpec, QuotientMap};
use crate::obstruct::{normalize_translate, sigma_full_predicate};
use crate::set::ElementSet;
use crate::sumset::{check_witness, Multiset, SumsetTable};

/// Disjoint unordered pairs `{α, β−α}` inside `A`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairFamily {
    pub beta: usize,
    pub pairs: Vec<(usize, usize)>,
    pub n_pair: usize,
}

impl PairFamily {
    /// All pairs `{α, β−α} ⊆ A` with `α < β−α`. Distinct orbits of the
    /// involution `α ↦ β−α` never share an element.
    pub fn for_sum(group: &GroupSpec, a: &ElementSet, beta: usize) -> Self {
        let pairs: Vec<(usize, usize)> = a
            .iter()
            .filter_map(|x| {
                let y = group.sub(beta, x);
                (x < y && a.contains(y)).then_some((x, y))
            })
            .collect();
        PairFamily { beta, n_pair: pairs.len(), pairs }
    }

    pub fn validate(&self, group: &GroupSpec, a: &ElementSet) -> Result<()> {
        let mut seen = ElementSet::empty(group.order());
        for &(x, y) in &self.pairs {
            if x == y || !a.contains(x) || !a.contains(y) || seen.contains(x) || seen.contains(y) || group.add(x, y) != self.beta {
                return Err(Error::Internal(format!("pair ({x}, {y}) invalid for sum {}", self.beta)));
            }
            seen.insert(x);
            seen.insert(y);
        }
        if self.n_pair != self.pairs.len() {
            return Err(Error::Internal("pair count mismatch".into()));
        }
        Ok(())
    }
}

/// Number of ordered `(x, y) ∈ A²` with `x + y = β`, for every `β`.
pub fn representation_counts(group: &GroupSpec, a: &ElementSet) -> Vec<usize> {
    let mut counts = vec![0usize; group.order()];
    let elems = a.to_vec();
    for &x in &elems {
        for &y in &elems {
            counts[group.add(x, y)] += 1;
        }
    }
    counts
}

/// The pair sum `β` with the most ordered representations (smallest index
/// on ties) and its disjoint pairs. Odd order only, so each involution has
/// exactly one fixed point.
pub fn best_pair_sum(group: &GroupSpec, a: &ElementSet) -> Result<PairFamily> {
    if group.order() % 2 == 0 {
        return Err(Error::InvalidParameter("pair extraction needs odd order".into()));
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter("pair extraction needs |A| >= 2".into()));
    }
    let counts = representation_counts(group, a);
    let max = *counts.iter().max().unwrap();
    let beta = counts.iter().position(|&c| c == max).unwrap();
    let family = PairFamily::for_sum(group, a, beta);
    family.validate(group, a)?;
    Ok(family)
}

/// Pair family with the most pairs over all sums, any order.
fn widest_pair_family(group: &GroupSpec, a: &ElementSet) -> PairFamily {
    let counts = representation_counts(group, a);
    let mut best: Option<PairFamily> = None;
    for beta in 0..group.order() {
        // upper bound on pairs is counts/2
        if best.as_ref().is_some_and(|b| counts[beta] / 2 <= b.n_pair) {
            continue;
        }
        let f = PairFamily::for_sum(group, a, beta);
        if best.as_ref().map_or(true, |b| f.n_pair > b.n_pair) {
            best = Some(f);
        }
    }
    best.unwrap_or(PairFamily { beta: 0, pairs: Vec::new(), n_pair: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PairPadding,
    FiberLift,
    Dp,
}

/// A validated k-subset summing to `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub k: usize,
    pub target: usize,
    pub method: Method,
    /// Sorted element indices.
    pub elements: Vec<usize>,
}

fn finish(group: &GroupSpec, a: &ElementSet, k: usize, target: usize, method: Method, mut w: Vec<usize>) -> Result<Witness> {
    w.sort_unstable();
    check_witness(group, a, k, target, &w)?;
    Ok(Witness { k, target, method, elements: w })
}

const BASE_RETRIES: usize = 32;

/// A k-subset of `A` summing to `target`, built from a base triple (odd
/// `k`) or quadruple (even `k`) hitting `target − ℓβ` plus `ℓ` disjoint
/// `β`-pairs that avoid the base.
pub fn pair_padding_represent(group: &GroupSpec, a: &ElementSet, k: usize, target: usize) -> Result<Witness> {
    group.check(target)?;
    if k < 3 {
        return Err(Error::Hypothesis("k >= 3".into()));
    }
    if k > a.len() {
        return Err(Error::Hypothesis("k <= |A|".into()));
    }
    let base_len = if k % 2 == 1 { 3 } else { 4 };
    let ell = (k - base_len) / 2;
    if ell == 0 {
        let table = SumsetTable::build(group, a, base_len)?;
        let w = table
            .witness(k, target)?
            .ok_or_else(|| Error::Hypothesis(format!("target not in Gamma_{k}(A)")))?;
        return finish(group, a, k, target, Method::PairPadding, w);
    }
    let table = SumsetTable::build(group, a, 4.min(a.len()))?;
    for (m, name) in [(3, "Gamma_3(A) = G"), (4, "Gamma_4(A) = G")] {
        if !table.covers(m)? {
            return Err(Error::Hypothesis(name.into()));
        }
    }
    let family = widest_pair_family(group, a);
    family.validate(group, a)?;
    let need = (k - 3) / 2 + 4;
    if family.n_pair < need {
        return Err(Error::Hypothesis(format!("pair count {} >= floor((k-3)/2)+4 = {need}", family.n_pair)));
    }
    let base_target = group.sub(target, group.smul(ell as i64, family.beta));
    for attempt in 0..=BASE_RETRIES.min(family.n_pair) {
        // retry i avoids the elements of pair i-1 entirely
        let base = if attempt == 0 {
            table.witness(base_len, base_target)?
        } else {
            let (x, y) = family.pairs[attempt - 1];
            let mut reduced = a.clone();
            reduced.remove(x);
            reduced.remove(y);
            let t = SumsetTable::build(group, &reduced, base_len)?;
            t.witness(base_len, base_target)?
        };
        let Some(base) = base else { continue };
        let free: Vec<&(usize, usize)> =
            family.pairs.iter().filter(|(x, y)| !base.contains(x) && !base.contains(y)).collect();
        if free.len() < ell {
            continue;
        }
        let mut w = base;
        for &&(x, y) in free.iter().take(ell) {
            w.push(x);
            w.push(y);
        }
        return finish(group, a, k, target, Method::PairPadding, w);
    }
    Err(Error::Hypothesis("base solution avoiding enough pairs".into()))
}

/// A k-subset of `A` summing to `target`: `ℓ = k − 3` elements outside the
/// kernel of `π` with residues summing to `π(target)`, completed by a triple
/// from the densest fiber. `A` is first translated so that fiber lies in
/// the kernel.
pub fn fiber_lift_represent(
    group: &GroupSpec,
    pi: &QuotientMap,
    a: &ElementSet,
    k: usize,
    target: usize,
) -> Result<Witness> {
    group.check(target)?;
    let p = pi.prime();
    if p < 7 {
        return Err(Error::Hypothesis("p >= 7".into()));
    }
    let kernel = pi.kernel().members();
    let h = kernel.len();
    if h < 4 {
        return Err(Error::Hypothesis("kernel size >= 4".into()));
    }
    if k < 3 {
        return Err(Error::Hypothesis("k >= 3".into()));
    }
    let norm = normalize_translate(group, pi, a)?;
    let shifted = &norm.translated;
    let t0 = group.sub(target, group.smul(k as i64, norm.shift));
    let dense = shifted.intersection(kernel);
    let dense_table = SumsetTable::build(group, &dense, 3.min(dense.len()))?;
    if dense.len() < 3 || dense_table.gamma(3)? != *kernel {
        return Err(Error::Hypothesis("dense fiber: Gamma_3(A_0) = H".into()));
    }
    let ell = k - 3;
    let outside = shifted.difference(kernel);
    let mut outside_elems: Vec<Vec<usize>> = vec![Vec::new(); p as usize];
    for x in outside.iter() {
        outside_elems[pi.residue(x) as usize].push(x);
    }
    let mut chosen = Vec::new();
    if ell > 0 {
        if ell < 3 {
            return Err(Error::Hypothesis("length range: 3 <= k-3".into()));
        }
        let u = Multiset::from_elements(p, outside.iter().map(|x| pi.residue(x)))?;
        let check = sigma_full_predicate(p, h, &u, ell)?;
        if !check.hypothesis_met {
            let total = u.total() as u64;
            let name = if 2 * total <= (p - 2) * h as u64 { "mass hypothesis" } else { "length range: k-3 <= u-p+1" };
            return Err(Error::Hypothesis(name.into()));
        }
        let counts = u
            .sigma_witness(ell, pi.residue(t0))?
            .ok_or_else(|| Error::Internal("full subsum set lacks the target residue".into()))?;
        for (r, &c) in counts.iter().enumerate() {
            chosen.extend_from_slice(&outside_elems[r][..c]);
        }
    } else if !kernel.contains(t0) {
        return Err(Error::Hypothesis("target residue: k = 3 needs the normalized target in H".into()));
    }
    let rest = group.sub(t0, group.sum_of(chosen.iter()));
    let triple = dense_table
        .witness(3, rest)?
        .ok_or_else(|| Error::Internal("kernel triple missing although Gamma_3(A_0) = H".into()))?;
    chosen.extend(triple);
    let lifted: Vec<usize> = chosen.iter().map(|&x| group.add(x, norm.shift)).collect();
    finish(group, a, k, target, Method::FiberLift, lifted)
}

/// Witness read back from the sumset table.
pub fn dp_represent(group: &GroupSpec, a: &ElementSet, k: usize, target: usize) -> Result<Option<Witness>> {
    group.check(target)?;
    if k > a.len() {
        return Ok(None);
    }
    let table = SumsetTable::build(group, a, k.min(a.len() - k))?;
    match table.witness(k, target)? {
        Some(w) => finish(group, a, k, target, Method::Dp, w).map(Some),
        None => Ok(None),
    }
}
