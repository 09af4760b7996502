//! Restricted sumsets `Γ_k(A)`, fixed-length multiset subsums `Σ_ℓ(U)` over
//! `Z_p`, and the closed-form lower bounds they are checked against.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::set::ElementSet;

/// Default cap on the bytes a single [`SumsetTable`] may allocate.
pub const DEFAULT_MEM_CAP: u64 = 1 << 30;

/// Environment variable overriding [`DEFAULT_MEM_CAP`].
pub const MEM_CAP_ENV: &str = "SUMSETLAB_MEM_CAP";

pub fn memory_cap() -> u64 {
    std::env::var(MEM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MEM_CAP)
}

fn table_bytes(order: usize, layers: usize) -> u64 {
    layers as u64 * order.div_ceil(64) as u64 * 8
}

/// `Γ_0(A), .., Γ_{k_max}(A)` for a fixed `A`.
///
/// Built by the 0/1-knapsack update: elements of `A` in ascending index,
/// and for each one the layers in descending `k`, so no element is used twice.
#[derive(Debug, Clone)]
pub struct SumsetTable {
    group: GroupSpec,
    source: ElementSet,
    elements: Vec<usize>,
    k_max: usize,
    layers: Vec<ElementSet>,
}

impl SumsetTable {
    pub fn build(group: &GroupSpec, a: &ElementSet, k_max: usize) -> Result<Self> {
        Self::build_with_cap(group, a, k_max, memory_cap())
    }

    pub fn build_with_cap(group: &GroupSpec, a: &ElementSet, k_max: usize, cap: u64) -> Result<Self> {
        if a.order() != group.order() {
            return Err(Error::InvalidParameter(format!(
                "set over order {} used with group of order {}",
                a.order(),
                group.order()
            )));
        }
        if k_max > a.len() {
            return Err(Error::InvalidParameter(format!("k_max {k_max} exceeds |A| = {}", a.len())));
        }
        let requested = table_bytes(group.order(), k_max + 1);
        if requested > cap {
            return Err(Error::MemoryCap { requested, cap });
        }
        let elements = a.to_vec();
        let layers = run_dp(group, &elements, k_max, None).0;
        Ok(SumsetTable { group: group.clone(), source: a.clone(), elements, k_max, layers })
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn source(&self) -> &ElementSet {
        &self.source
    }

    pub fn set_size(&self) -> usize {
        self.elements.len()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn layers(&self) -> &[ElementSet] {
        &self.layers
    }

    /// `Ā`, the sum of all elements of `A`.
    pub fn source_sum(&self) -> usize {
        self.group.sum_of(&self.elements)
    }

    /// `Γ_k(A)` for `k <= k_max`, read directly from the table.
    pub fn layer(&self, k: usize) -> Option<&ElementSet> {
        self.layers.get(k)
    }

    /// `Ā − Γ_{a−k}(A)`, which equals `Γ_k(A)`.
    pub fn complement_transform(&self, k: usize) -> Result<ElementSet> {
        let a = self.set_size();
        if k > a {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds |A| = {a}")));
        }
        let layer = self.layers.get(a - k).ok_or_else(|| {
            Error::InvalidParameter(format!("a - k = {} exceeds table k_max {}", a - k, self.k_max))
        })?;
        Ok(self.group.reflect(self.source_sum(), layer))
    }

    /// `Γ_k(A)` for any `k` reachable directly or through the complement identity.
    pub fn gamma(&self, k: usize) -> Result<ElementSet> {
        if k > self.set_size() {
            return Ok(ElementSet::empty(self.group.order()));
        }
        match self.layer(k) {
            Some(l) => Ok(l.clone()),
            None => self.complement_transform(k),
        }
    }

    pub fn contains(&self, k: usize, target: usize) -> Result<bool> {
        self.group.check(target)?;
        if k > self.set_size() {
            return Ok(false);
        }
        match self.layer(k) {
            Some(l) => Ok(l.contains(target)),
            None => Ok(self.complement_transform(k)?.contains(target)),
        }
    }

    pub fn covers(&self, k: usize) -> Result<bool> {
        Ok(self.gamma(k)?.is_full())
    }

    /// `k` distinct elements of `A` summing to `target`, or `None` when
    /// `target ∉ Γ_k(A)`. The witness is checked before it is returned.
    pub fn witness(&self, k: usize, target: usize) -> Result<Option<Vec<usize>>> {
        self.group.check(target)?;
        let a = self.set_size();
        if k > a {
            return Ok(None);
        }
        let found = if k <= self.k_max {
            if !self.layers[k].contains(target) {
                return Ok(None);
            }
            backtrace(&self.group, &self.elements, k, target)
        } else {
            let rest = a - k;
            if rest > self.k_max {
                return Err(Error::InvalidParameter(format!(
                    "neither k = {k} nor a - k = {rest} is within table k_max {}",
                    self.k_max
                )));
            }
            let dual = self.group.sub(self.source_sum(), target);
            if !self.layers[rest].contains(dual) {
                return Ok(None);
            }
            let drop = backtrace(&self.group, &self.elements, rest, dual);
            self.elements.iter().copied().filter(|x| !drop.contains(x)).collect()
        };
        check_witness(&self.group, &self.source, k, target, &found)?;
        Ok(Some(found))
    }

    /// The table for `A ∪ {x}`: one step of the knapsack update.
    pub fn with_element(&self, x: usize) -> Result<SumsetTable> {
        self.group.check(x)?;
        if self.source.contains(x) {
            return Err(Error::InvalidParameter(format!("element {x} already in A")));
        }
        let mut next = self.clone();
        next.source.insert(x);
        next.elements.push(x);
        next.elements.sort_unstable();
        if self.k_max == self.elements.len() {
            // Γ_{a+1}(A) is empty, so the table can grow by one layer
            next.k_max += 1;
            next.layers.push(ElementSet::empty(self.group.order()));
        }
        let top = next.k_max;
        for k in (1..=top).rev() {
            let (lo, hi) = next.layers.split_at_mut(k);
            self.group.translate_into(&lo[k - 1], x, &mut hi[0]);
        }
        Ok(next)
    }

    /// Flips one bit of one layer. Exists only so the verification harness
    /// can demonstrate that its checks catch a corrupted table.
    pub(crate) fn inject_fault(&mut self, k: usize, index: usize) {
        self.layers[k].toggle(index);
    }
}

/// Knapsack DP over `elements` with layers `0..=k_max`. When `watch` is
/// `Some((k, t))`, returns the position of the first element after which
/// `t ∈ Γ_k` (the DP stops there).
fn run_dp(
    group: &GroupSpec,
    elements: &[usize],
    k_max: usize,
    watch: Option<(usize, usize)>,
) -> (Vec<ElementSet>, Option<usize>) {
    let g = group.order();
    let mut layers = vec![ElementSet::empty(g); k_max + 1];
    layers[0].insert(0);
    let mut full = vec![false; k_max + 1];
    full[0] = g == 1;
    for (pos, &x) in elements.iter().enumerate() {
        let top = k_max.min(pos + 1);
        for k in (1..=top).rev() {
            if full[k] {
                continue;
            }
            let (lo, hi) = layers.split_at_mut(k);
            group.translate_into(&lo[k - 1], x, &mut hi[0]);
            if full[k - 1] || pos % 64 == 63 {
                full[k] = hi[0].is_full();
            }
        }
        if let Some((k, t)) = watch {
            if layers[k].contains(t) {
                return (layers, Some(pos));
            }
        }
    }
    (layers, None)
}

/// Recovers a representation by re-running prefix DPs: the first prefix in
/// which `t` enters layer `k` must use its last element.
fn backtrace(group: &GroupSpec, elements: &[usize], k: usize, target: usize) -> Vec<usize> {
    let mut end = elements.len();
    let mut t = target;
    let mut out = Vec::with_capacity(k);
    for kk in (1..=k).rev() {
        let pos = run_dp(group, &elements[..end], kk, Some((kk, t)))
            .1
            .expect("target present in layer implies a first entry");
        out.push(elements[pos]);
        t = group.sub(t, elements[pos]);
        end = pos;
    }
    debug_assert_eq!(t, 0);
    out.sort_unstable();
    out
}

/// Verifies `|w| = k`, `w ⊆ A`, distinct entries and `Σ w = target`.
pub fn check_witness(group: &GroupSpec, a: &ElementSet, k: usize, target: usize, w: &[usize]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    let ok = w.len() == k
        && w.iter().all(|&x| a.contains(x) && seen.insert(x))
        && group.sum_of(w) == target;
    if ok {
        Ok(())
    } else {
        Err(Error::Internal(format!("invalid witness {w:?} for k = {k}, target = {target}")))
    }
}

/// `Γ_k(A)` in one call, using `min(k, a−k)` layers.
pub fn restricted_sumset(group: &GroupSpec, a: &ElementSet, k: usize) -> Result<ElementSet> {
    let size = a.len();
    if k > size {
        return Ok(ElementSet::empty(group.order()));
    }
    let t = SumsetTable::build(group, a, k.min(size - k))?;
    t.gamma(k)
}

/// Whether `Γ_k(A) = G`.
pub fn covers(group: &GroupSpec, a: &ElementSet, k: usize) -> Result<bool> {
    Ok(restricted_sumset(group, a, k)?.is_full())
}

/// A multiset over `Z_p` given by its multiplicity vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Multiset {
    p: u64,
    mult: Vec<usize>,
}

impl Multiset {
    pub fn new(p: u64, mult: Vec<usize>) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidParameter("multiset modulus must be >= 2".into()));
        }
        if mult.len() != p as usize {
            return Err(Error::InvalidParameter(format!("need {p} multiplicities, got {}", mult.len())));
        }
        Ok(Multiset { p, mult })
    }

    pub fn from_elements<I: IntoIterator<Item = u64>>(p: u64, elems: I) -> Result<Self> {
        let mut mult = vec![0; p as usize];
        for e in elems {
            mult[(e % p) as usize] += 1;
        }
        Self::new(p, mult)
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn mult(&self, alpha: u64) -> usize {
        self.mult[(alpha % self.p) as usize]
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.mult
    }

    pub fn total(&self) -> usize {
        self.mult.iter().sum()
    }

    fn zp(&self) -> GroupSpec {
        GroupSpec::cyclic(self.p).expect("p >= 2")
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len > self.total() {
            Err(Error::InvalidParameter(format!("length {len} exceeds multiset size {}", self.total())))
        } else {
            Ok(())
        }
    }

    /// Tables `T[c]` = sums of `c` elements drawn from values `from..p`.
    fn suffix_tables(&self, zp: &GroupSpec, len: usize, from: usize) -> Vec<ElementSet> {
        let p = self.p as usize;
        let mut t = vec![ElementSet::empty(p); len + 1];
        t[0].insert(0);
        for alpha in (from..p).rev() {
            let v = self.mult[alpha];
            if v == 0 {
                continue;
            }
            let mut next = t.clone();
            for (c, slot) in next.iter_mut().enumerate().skip(1) {
                let mut shift = 0;
                for j in 1..=v.min(c) {
                    shift = zp.add(shift, alpha);
                    zp.translate_into(&t[c - j], shift, slot);
                }
            }
            t = next;
        }
        t
    }

    /// `Σ_ℓ(U)`: sums of `ℓ` elements respecting multiplicities.
    pub fn sigma(&self, len: usize) -> Result<ElementSet> {
        self.check_len(len)?;
        let zp = self.zp();
        Ok(self.suffix_tables(&zp, len, 0).swap_remove(len))
    }

    /// `Σ_0(U), .., Σ_u(U)`.
    pub fn sigma_all(&self) -> Vec<ElementSet> {
        let zp = self.zp();
        self.suffix_tables(&zp, self.total(), 0)
    }

    /// Lexicographically least count vector `(c_0, .., c_{p-1})` with
    /// `Σ c_α = ℓ`, `c_α <= v_α` and `Σ c_α·α = target`.
    pub fn sigma_witness(&self, len: usize, target: u64) -> Result<Option<Vec<usize>>> {
        self.check_len(len)?;
        if target >= self.p {
            return Err(Error::InvalidParameter(format!("target {target} not in Z_{}", self.p)));
        }
        let zp = self.zp();
        let p = self.p as usize;
        let suffixes: Vec<Vec<ElementSet>> = (0..=p).map(|from| self.suffix_tables(&zp, len, from)).collect();
        if !suffixes[0][len].contains(target as usize) {
            return Ok(None);
        }
        let mut counts = vec![0usize; p];
        let mut remaining = len;
        let mut t = target as usize;
        for alpha in 0..p {
            let choice = (0..=self.mult[alpha].min(remaining)).find(|&c| {
                let rest = zp.sub(t, zp.smul(c as i64, alpha));
                suffixes[alpha + 1][remaining - c].contains(rest)
            });
            let c = choice.ok_or_else(|| Error::Internal("multiset witness back-trace lost the target".into()))?;
            counts[alpha] = c;
            remaining -= c;
            t = zp.sub(t, zp.smul(c as i64, alpha));
        }
        if remaining != 0 || t != 0 {
            return Err(Error::Internal("multiset witness incomplete".into()));
        }
        Ok(Some(counts))
    }
}

/// `min{p, k·a − k² + 1}`.
pub fn dsh_bound(p: u64, a: u64, k: u64) -> Result<u64> {
    if k < 1 || k > a || a > p {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= a <= p, got k={k}, a={a}, p={p}")));
    }
    Ok(p.min(k * a - k * k + 1))
}

/// `1 − ℓ + Σ_γ min{ℓ, v_γ(U)}`. Meaningful only when `Σ_ℓ(U) ≠ Z_p`.
pub fn dgm_bound(u: &Multiset, len: usize) -> Result<i64> {
    if len < 1 || len > u.total() {
        return Err(Error::InvalidParameter(format!("need 1 <= l <= u = {}, got l={len}", u.total())));
    }
    let trunc: usize = u.multiplicities().iter().map(|&v| v.min(len)).sum();
    Ok(1 - len as i64 + trunc as i64)
}

/// Minimum of `Σ min(ℓ, v_i)` over `0 <= v_i <= h`, `Σ v_i = u`, `p−1`
/// coordinates: `qℓ + min(ℓ, r)` with `u = qh + r`.
pub fn min_truncated_mass(p: u64, h: u64, len: u64, u: u64) -> Result<u64> {
    if p < 2 || h < 1 || len < 1 || len > h || u > (p - 1) * h {
        return Err(Error::InvalidParameter(format!(
            "need p>=2, h>=1, 1<=l<=h, u<=(p-1)h; got p={p}, h={h}, l={len}, u={u}"
        )));
    }
    let q = u / h;
    let r = u - q * h;
    Ok(q * len + len.min(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GroupSpec {
        s.parse().unwrap()
    }

    fn set(order: usize, v: &[usize]) -> ElementSet {
        ElementSet::from_indices(order, v.iter().copied()).unwrap()
    }

    fn brute(group: &GroupSpec, a: &[usize], k: usize) -> ElementSet {
        let mut out = ElementSet::empty(group.order());
        let n = a.len();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == k {
                let s = (0..n).filter(|i| mask >> i & 1 == 1).fold(0, |acc, i| group.add(acc, a[i]));
                out.insert(s);
            }
        }
        out
    }

    #[test]
    fn table_examples() {
        let z7 = g("Z7");
        let a = set(7, &[1, 2, 3]);
        let t = SumsetTable::build(&z7, &a, 2).unwrap();
        assert_eq!(t.layer(2).unwrap().to_vec(), vec![3, 4, 5]);
        assert_eq!(t.layer(0).unwrap().to_vec(), vec![0]);
        let v4 = g("Z2xZ2");
        let t = SumsetTable::build(&v4, &ElementSet::full(4), 3).unwrap();
        assert!(t.layer(3).unwrap().is_full());
    }

    #[test]
    fn layers_empty_beyond_size() {
        let z7 = g("Z7");
        let a = set(7, &[1, 2, 3]);
        let t = SumsetTable::build(&z7, &a, 3).unwrap();
        assert_eq!(t.layer(3).unwrap().to_vec(), vec![6]);
        assert!(t.gamma(4).unwrap().is_empty());
        assert!(SumsetTable::build(&z7, &a, 4).is_err());
    }

    #[test]
    fn matches_brute_force_small() {
        for spec in ["Z12", "Z2xZ6", "Z3xZ3", "Z2xZ2xZ2", "Z70"] {
            let gr = g(spec);
            let a: Vec<usize> = (0..gr.order()).filter(|i| (i * 5 + 1) % 3 != 0).take(9).collect();
            let aset = ElementSet::from_indices(gr.order(), a.clone()).unwrap();
            let t = SumsetTable::build(&gr, &aset, a.len()).unwrap();
            for k in 0..=a.len() {
                assert_eq!(t.layer(k).unwrap(), &brute(&gr, &a, k), "{spec} k={k}");
            }
        }
    }

    #[test]
    fn memory_cap_enforced() {
        let gr = g("Z1000");
        let a = ElementSet::full(1000);
        let err = SumsetTable::build_with_cap(&gr, &a, 10, 100).unwrap_err();
        assert!(matches!(err, Error::MemoryCap { .. }));
    }

    #[test]
    fn witness_examples() {
        let z7 = g("Z7");
        let a = set(7, &[1, 2, 3]);
        let t = SumsetTable::build(&z7, &a, 3).unwrap();
        assert_eq!(t.witness(2, 4).unwrap(), Some(vec![1, 3]));
        assert_eq!(t.witness(2, 0).unwrap(), None);
        assert_eq!(t.witness(3, t.source_sum()).unwrap(), Some(vec![1, 2, 3]));
    }

    #[test]
    fn witness_via_complement() {
        let gr = g("Z31");
        let a = ElementSet::from_predicate(31, |i| i % 3 != 1);
        let t = SumsetTable::build(&gr, &a, 3).unwrap();
        let k = a.len() - 2;
        for target in 0..31 {
            let w = t.witness(k, target).unwrap();
            assert_eq!(w.is_some(), t.contains(k, target).unwrap());
        }
    }

    #[test]
    fn complement_examples() {
        let z7 = g("Z7");
        let a = set(7, &[1, 2, 3]);
        let t = SumsetTable::build(&z7, &a, 3).unwrap();
        assert_eq!(t.source_sum(), 6);
        assert_eq!(t.complement_transform(2).unwrap().to_vec(), vec![3, 4, 5]);
        assert_eq!(t.complement_transform(3).unwrap().to_vec(), vec![6]);
        assert_eq!(t.complement_transform(0).unwrap().to_vec(), vec![0]);
        let short = SumsetTable::build(&z7, &a, 1).unwrap();
        assert!(short.complement_transform(1).is_err());
    }

    #[test]
    fn with_element_extends() {
        let gr = g("Z3xZ5");
        let mut t = SumsetTable::build(&gr, &ElementSet::empty(15), 0).unwrap();
        for x in [7, 1, 12, 4, 9] {
            t = t.with_element(x).unwrap();
        }
        let direct = SumsetTable::build(&gr, t.source(), 5).unwrap();
        assert_eq!(t.layers(), direct.layers());
        assert!(t.with_element(7).is_err());
    }

    #[test]
    fn sigma_examples() {
        let u = Multiset::from_elements(5, [1, 1, 2]).unwrap();
        assert_eq!(u.sigma(2).unwrap().to_vec(), vec![2, 3]);
        assert_eq!(u.sigma(0).unwrap().to_vec(), vec![0]);
        let u = Multiset::from_elements(3, [1, 1]).unwrap();
        assert_eq!(u.sigma(2).unwrap().to_vec(), vec![2]);
        assert!(u.sigma(3).is_err());
    }

    fn brute_counts(u: &Multiset, len: usize, target: u64) -> Option<Vec<usize>> {
        // lexicographic order of count vectors = odometer with c_0 most significant
        let p = u.modulus() as usize;
        let mut best: Option<Vec<usize>> = None;
        let mut c = vec![0usize; p];
        loop {
            let s: usize = c.iter().sum();
            let w: usize = c.iter().enumerate().map(|(a, n)| a * n).sum();
            if s == len && w as u64 % u.modulus() == target && best.as_ref().map_or(true, |b| c < *b) {
                best = Some(c.clone());
            }
            let mut i = p;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if c[i] < u.mult(i as u64) {
                    c[i] += 1;
                    break;
                }
                c[i] = 0;
            }
        }
    }

    #[test]
    fn sigma_witness_is_lex_least() {
        for mult in [vec![0, 2, 1, 2, 0, 1, 0], vec![3, 0, 2, 0, 1, 1, 2], vec![1, 1, 1, 1, 1, 1, 1]] {
            let u = Multiset::new(7, mult).unwrap();
            for len in 0..=u.total() {
                for t in 0..7 {
                    assert_eq!(u.sigma_witness(len, t).unwrap(), brute_counts(&u, len, t), "len={len} t={t}");
                }
            }
        }
    }

    #[test]
    fn dsh_examples() {
        assert_eq!(dsh_bound(13, 7, 3).unwrap(), 13);
        assert_eq!(dsh_bound(5, 3, 2).unwrap(), 3);
        assert_eq!(dsh_bound(11, 4, 1).unwrap(), 4);
        assert!(dsh_bound(5, 3, 4).is_err());
        assert!(dsh_bound(5, 6, 1).is_err());
    }

    #[test]
    fn dgm_examples() {
        let u = Multiset::from_elements(5, [1, 1, 2]).unwrap();
        assert_eq!(dgm_bound(&u, 2).unwrap(), 2);
        assert_eq!(dgm_bound(&u, 1).unwrap(), 2);
        let u = Multiset::from_elements(7, [1; 7]).unwrap();
        assert_eq!(dgm_bound(&u, 3).unwrap(), 1);
        assert_eq!(u.sigma(3).unwrap().to_vec(), vec![3]);
        assert!(dgm_bound(&u, 0).is_err());
    }

    #[test]
    fn min_truncated_mass_examples() {
        assert_eq!(min_truncated_mass(7, 4, 3, 10).unwrap(), 8);
        assert_eq!(min_truncated_mass(7, 4, 3, 0).unwrap(), 0);
        assert_eq!(min_truncated_mass(5, 3, 2, 5).unwrap(), 4);
        assert!(min_truncated_mass(5, 3, 4, 5).is_err());
        assert!(min_truncated_mass(5, 3, 2, 13).is_err());
    }
}
