//! Finite abelian groups as products of cyclic groups.
//!
//! Elements are addressed by a mixed-radix index over the factor list as
//! written: the last factor varies fastest, so a translation acts on
//! contiguous blocks of `n_r` bits and reduces to block moves plus
//! in-block rotations. This is what keeps the sumset DP word-parallel.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, rem, smallest_prime_factor};
use crate::error::{Error, Result};
use crate::set::{or_bit_range, ElementSet};

/// Upper bound on group order accepted by [`GroupSpec::new`].
pub const MAX_ORDER: usize = 1 << 20;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    factors: Vec<u64>,
    order: usize,
    strides: Vec<usize>,
    invariant_factors: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStats {
    pub order: u64,
    pub torsion2: u64,
    pub p_min: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupElement {
    pub index: usize,
    pub coords: Vec<u64>,
}

impl GroupSpec {
    pub fn new(factors: Vec<u64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("group needs at least one factor".into()));
        }
        if let Some(&bad) = factors.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidParameter(format!("cyclic factor Z{bad} must have order >= 2")));
        }
        let mut order: usize = 1;
        for &n in &factors {
            order = order
                .checked_mul(n as usize)
                .filter(|&g| g <= MAX_ORDER)
                .ok_or_else(|| Error::InvalidParameter(format!("group order exceeds cap {MAX_ORDER}")))?;
        }
        let mut strides = vec![1usize; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factors[i + 1] as usize;
        }
        let invariant_factors = invariant_factors(&factors);
        Ok(GroupSpec { factors, order, strides, invariant_factors })
    }

    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Invariant factors `m_1 | m_2 | .. | m_r`, ascending.
    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariant_factors
    }

    pub fn canonical(&self) -> GroupSpec {
        GroupSpec::new(self.invariant_factors.clone()).expect("invariant factors form a valid group")
    }

    pub fn is_isomorphic(&self, other: &GroupSpec) -> bool {
        self.invariant_factors == other.invariant_factors
    }

    pub fn is_cyclic(&self) -> bool {
        self.invariant_factors.len() == 1
    }

    pub fn stats(&self) -> GroupStats {
        let even = self.factors.iter().filter(|&&n| n % 2 == 0).count() as u32;
        GroupStats {
            order: self.order as u64,
            torsion2: 1 << even,
            p_min: smallest_prime_factor(self.order as u64),
        }
    }

    pub fn coords(&self, index: usize) -> Vec<u64> {
        self.factors
            .iter()
            .zip(&self.strides)
            .map(|(&n, &s)| ((index / s) % n as usize) as u64)
            .collect()
    }

    pub fn index_of(&self, coords: &[u64]) -> Result<usize> {
        if coords.len() != self.factors.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.factors.len(),
                coords.len()
            )));
        }
        let mut idx = 0;
        for ((&x, &n), &s) in coords.iter().zip(&self.factors).zip(&self.strides) {
            if x >= n {
                return Err(Error::InvalidParameter(format!("coordinate {x} out of range for Z{n}")));
            }
            idx += x as usize * s;
        }
        Ok(idx)
    }

    pub fn element(&self, index: usize) -> Result<GroupElement> {
        self.check(index)?;
        Ok(GroupElement { index, coords: self.coords(index) })
    }

    pub fn check(&self, index: usize) -> Result<()> {
        if index >= self.order {
            Err(Error::InvalidParameter(format!("element index {index} out of range for order {}", self.order)))
        } else {
            Ok(())
        }
    }

    #[inline]
    pub fn add(&self, x: usize, y: usize) -> usize {
        if self.factors.len() == 1 {
            let s = x + y;
            return if s >= self.order { s - self.order } else { s };
        }
        let mut out = 0;
        for (&n, &s) in self.factors.iter().zip(&self.strides) {
            let n = n as usize;
            let d = (x / s) % n + (y / s) % n;
            out += if d >= n { d - n } else { d } * s;
        }
        out
    }

    #[inline]
    pub fn neg(&self, x: usize) -> usize {
        if self.factors.len() == 1 {
            return if x == 0 { 0 } else { self.order - x };
        }
        let mut out = 0;
        for (&n, &s) in self.factors.iter().zip(&self.strides) {
            let n = n as usize;
            let d = (x / s) % n;
            out += if d == 0 { 0 } else { n - d } * s;
        }
        out
    }

    pub fn sub(&self, x: usize, y: usize) -> usize {
        self.add(x, self.neg(y))
    }

    /// Scalar multiple `m·x` for any integer `m`.
    pub fn smul(&self, m: i64, x: usize) -> usize {
        let mut out = 0;
        for (&n, &s) in self.factors.iter().zip(&self.strides) {
            let d = ((x / s) % n as usize) as u64;
            let v = rem((m.rem_euclid(n as i64)) * d as i64 % n as i64, n);
            out += v as usize * s;
        }
        out
    }

    /// Sum of all elements of a set.
    pub fn sum(&self, set: &ElementSet) -> usize {
        set.iter().fold(0, |acc, x| self.add(acc, x))
    }

    pub fn sum_of<'a, I: IntoIterator<Item = &'a usize>>(&self, elems: I) -> usize {
        elems.into_iter().fold(0, |acc, &x| self.add(acc, x))
    }

    /// ORs `src + t` into `dst`.
    pub fn translate_into(&self, src: &ElementSet, t: usize, dst: &mut ElementSet) {
        debug_assert_eq!(src.order(), self.order);
        let block = *self.factors.last().unwrap() as usize;
        let shift = t % block;
        let t_outer = t - shift;
        let blocks = self.order / block;
        let dw = dst.words_mut();
        for b in 0..blocks {
            let from = b * block;
            let to = if t_outer == 0 { from } else { self.add(from, t_outer) };
            // bits [from, from+block-shift) -> [to+shift, to+block)
            or_bit_range(dw, to + shift, src.words(), from, block - shift);
            if shift > 0 {
                or_bit_range(dw, to, src.words(), from + block - shift, shift);
            }
        }
    }

    pub fn translate(&self, src: &ElementSet, t: usize) -> ElementSet {
        let mut out = ElementSet::empty(self.order);
        self.translate_into(src, t, &mut out);
        out
    }

    /// `{c - x : x ∈ set}`
    pub fn reflect(&self, c: usize, set: &ElementSet) -> ElementSet {
        let mut out = ElementSet::empty(self.order);
        for x in set.iter() {
            out.insert(self.sub(c, x));
        }
        out
    }

    /// Every homomorphism `G → Z_d` for prime `d`, up to scaling by units,
    /// paired with its kernel.
    pub fn quotient_maps(&self, d: u64) -> Result<Vec<QuotientMap>> {
        if d < 2 || smallest_prime_factor(d) != d {
            return Err(Error::InvalidParameter(format!("quotient order {d} is not prime")));
        }
        if self.order as u64 % d != 0 {
            return Err(Error::NotDivisor { divisor: d, order: self.order as u64 });
        }
        let free: Vec<usize> = (0..self.factors.len()).filter(|&i| self.factors[i] % d == 0).collect();
        let mut out = Vec::new();
        let total = (d as usize).pow(free.len() as u32);
        for code in 1..total {
            let mut coeffs = vec![0u64; self.factors.len()];
            let mut c = code;
            for &i in &free {
                coeffs[i] = (c % d as usize) as u64;
                c /= d as usize;
            }
            // normalize: first nonzero coefficient is 1
            let lead = free.iter().map(|&i| coeffs[i]).find(|&v| v != 0).unwrap();
            if lead != 1 {
                continue;
            }
            out.push(QuotientMap::from_coeffs(self, d, coeffs)?);
        }
        Ok(out)
    }

    /// Index-`d` subgroups for prime `d`, each with its `d` cosets.
    pub fn subgroups_of_index(&self, d: u64) -> Result<Vec<(Subgroup, Vec<ElementSet>)>> {
        Ok(self
            .quotient_maps(d)?
            .into_iter()
            .map(|q| {
                let cosets = q.cosets();
                (q.kernel, cosets)
            })
            .collect())
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|n| format!("Z{n}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSpec({self})")
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses `Z<n>(xZ<n>)*`, e.g. `Z4xZ2`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty group spec".into()));
        }
        let mut factors = Vec::new();
        for part in text.split(['x', 'X']) {
            let digits = part
                .strip_prefix('Z')
                .ok_or_else(|| Error::Parse(format!("group factor {part:?} must look like Z<n>")))?;
            let n: u64 = digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad cyclic order in {part:?}")))?;
            factors.push(n);
        }
        GroupSpec::new(factors)
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Invariant factor decomposition of `Z_{n_1} × .. × Z_{n_r}` via the
/// primary decomposition.
fn invariant_factors(factors: &[u64]) -> Vec<u64> {
    let mut by_prime: std::collections::BTreeMap<u64, Vec<u32>> = Default::default();
    for &n in factors {
        for (p, e) in factorize(n) {
            by_prime.entry(p).or_default().push(e);
        }
    }
    let len = by_prime.values().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![1u64; len];
    for (p, mut exps) in by_prime {
        exps.sort_unstable_by(|a, b| b.cmp(a));
        for (j, e) in exps.into_iter().enumerate() {
            out[j] *= p.pow(e);
        }
    }
    out.reverse();
    out
}

/// One representative per isomorphism type of abelian group of order `n`,
/// in invariant-factor form.
pub fn all_groups_of_order(n: u64) -> Vec<GroupSpec> {
    fn partitions(e: u32, max: u32) -> Vec<Vec<u32>> {
        if e == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in (1..=e.min(max)).rev() {
            for mut rest in partitions(e - first, first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    if n < 2 {
        return Vec::new();
    }
    let mut combos: Vec<Vec<u64>> = vec![vec![]];
    for (p, e) in factorize(n) {
        let mut next = Vec::new();
        for base in &combos {
            for part in partitions(e, e) {
                let mut f = base.clone();
                if f.len() < part.len() {
                    f.resize(part.len(), 1);
                }
                // largest parts pair with the largest factor slots (index 0)
                for (j, &pe) in part.iter().enumerate() {
                    f[j] *= p.pow(pe);
                }
                next.push(f);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .map(|mut f| {
            f.retain(|&m| m > 1);
            f.sort_unstable();
            GroupSpec::new(f).expect("valid factors")
        })
        .collect()
}

/// A subgroup given by its member mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    members: ElementSet,
    index: usize,
}

impl Subgroup {
    /// Validates closure (exhaustive when `|H|^2 <= 65536`, otherwise 10^4
    /// sampled pairs) and that `|H|` divides `g`.
    pub fn from_members(group: &GroupSpec, members: ElementSet) -> Result<Self> {
        let h = members.len();
        if h == 0 || !members.contains(0) || group.order() % h != 0 {
            return Err(Error::InvalidParameter("subgroup must contain 0 and have order dividing g".into()));
        }
        let elems = members.to_vec();
        let closed = |x: usize, y: usize| members.contains(group.add(x, y)) && members.contains(group.neg(x));
        let ok = if h * h <= 65536 {
            elems.iter().all(|&x| elems.iter().all(|&y| closed(x, y)))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(h as u64);
            (0..10_000).all(|_| closed(elems[rng.gen_range(0..h)], elems[rng.gen_range(0..h)]))
        };
        if !ok {
            return Err(Error::InvalidParameter("member set is not closed under the group law".into()));
        }
        Ok(Subgroup { index: group.order() / h, members })
    }

    pub fn members(&self) -> &ElementSet {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn coset(&self, group: &GroupSpec, rep: usize) -> ElementSet {
        group.translate(&self.members, rep)
    }
}

/// A surjection `G → Z_p`, `x ↦ Σ c_i x_i mod p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientMap {
    prime: u64,
    coeffs: Vec<u64>,
    kernel: Subgroup,
    residue: Vec<u32>,
}

impl QuotientMap {
    pub fn from_coeffs(group: &GroupSpec, p: u64, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.len() != group.factors().len() {
            return Err(Error::InvalidParameter("coefficient vector length mismatch".into()));
        }
        for (&c, &n) in coeffs.iter().zip(group.factors()) {
            if c % p != 0 && n % p != 0 {
                return Err(Error::InvalidParameter(format!("Z{n} admits no nonzero map to Z{p}")));
            }
        }
        if coeffs.iter().all(|&c| c % p == 0) {
            return Err(Error::InvalidParameter("zero map is not surjective".into()));
        }
        let residue: Vec<u32> = (0..group.order())
            .map(|i| {
                let r: u64 = group.coords(i).iter().zip(&coeffs).map(|(&x, &c)| (x % p) * (c % p)).sum();
                (r % p) as u32
            })
            .collect();
        let kernel_mask = ElementSet::from_predicate(group.order(), |i| residue[i] == 0);
        let kernel = Subgroup::from_members(group, kernel_mask)?;
        Ok(QuotientMap { prime: p, coeffs, kernel, residue })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn kernel(&self) -> &Subgroup {
        &self.kernel
    }

    #[inline]
    pub fn residue(&self, x: usize) -> u64 {
        self.residue[x] as u64
    }

    pub fn fiber(&self, r: u64) -> ElementSet {
        ElementSet::from_predicate(self.residue.len(), |i| self.residue[i] as u64 == r)
    }

    pub fn cosets(&self) -> Vec<ElementSet> {
        (0..self.prime).map(|r| self.fiber(r)).collect()
    }

    /// Checks `π(x+y) = π(x)+π(y)`: all pairs when `g <= 128`, else 10^4 seeded samples.
    pub fn verify_homomorphism(&self, group: &GroupSpec) -> bool {
        let g = group.order();
        let p = self.prime;
        let ok = |x: usize, y: usize| self.residue(group.add(x, y)) == (self.residue(x) + self.residue(y)) % p;
        if g <= 128 {
            (0..g).all(|x| (0..g).all(|y| ok(x, y)))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(g as u64);
            (0..10_000).all(|_| ok(rng.gen_range(0..g), rng.gen_range(0..g)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GroupSpec {
        s.parse().unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(g("Z8").factors(), &[8]);
        assert_eq!(g("Z8").order(), 8);
        assert_eq!(g("Z4xZ2").factors(), &[4, 2]);
        assert_eq!(g("Z4xZ2").order(), 8);
        assert_eq!(g("Z2xZ4").invariant_factors(), &[2, 4]);
        assert_eq!(g("Z4xZ2").to_string(), "Z4xZ2");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("Z1".parse::<GroupSpec>(), Err(Error::InvalidParameter(_))));
        assert!(matches!("Q8".parse::<GroupSpec>(), Err(Error::Parse(_))));
        assert!(matches!("Z4x".parse::<GroupSpec>(), Err(Error::Parse(_))));
        assert!(matches!("".parse::<GroupSpec>(), Err(Error::Parse(_))));
        assert!("Z1024xZ1024xZ2".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn stats_examples() {
        let s = g("Z8").stats();
        assert_eq!((s.order, s.torsion2, s.p_min), (8, 2, 2));
        let s = g("Z2xZ4").stats();
        assert_eq!((s.order, s.torsion2, s.p_min), (8, 4, 2));
        let s = g("Z45").stats();
        assert_eq!((s.order, s.torsion2, s.p_min), (45, 1, 3));
    }

    #[test]
    fn torsion2_matches_enumeration() {
        for spec in ["Z8", "Z2xZ4", "Z2xZ2xZ6", "Z9xZ3", "Z12"] {
            let gr = g(spec);
            let count = (0..gr.order()).filter(|&x| gr.add(x, x) == 0).count() as u64;
            assert_eq!(gr.stats().torsion2, count, "{spec}");
        }
    }

    #[test]
    fn arithmetic_examples() {
        let gr = g("Z4xZ2");
        let x = gr.index_of(&[3, 1]).unwrap();
        let y = gr.index_of(&[2, 1]).unwrap();
        assert_eq!(gr.coords(gr.add(x, y)), vec![1, 0]);
        let z7 = g("Z7");
        assert_eq!(z7.smul(-1, 3), 4);
        let z5 = g("Z5");
        assert_eq!(z5.sum(&ElementSet::from_indices(5, [1, 2, 3]).unwrap()), 1);
        assert!(gr.element(8).is_err());
    }

    #[test]
    fn smul_matches_repeated_addition() {
        let gr = g("Z6xZ4");
        for x in 0..gr.order() {
            let mut acc = 0;
            for m in 0..13i64 {
                assert_eq!(gr.smul(m, x), acc);
                assert_eq!(gr.smul(-m, x), gr.neg(acc));
                acc = gr.add(acc, x);
            }
        }
    }

    #[test]
    fn translate_matches_pointwise() {
        for spec in ["Z7", "Z70", "Z3xZ5", "Z4xZ2", "Z2xZ66", "Z130"] {
            let gr = g(spec);
            let src = ElementSet::from_predicate(gr.order(), |i| (i * 7 + 3) % 5 < 2);
            for t in 0..gr.order() {
                let expect = ElementSet::from_predicate(gr.order(), |i| src.contains(gr.sub(i, t)));
                assert_eq!(gr.translate(&src, t), expect, "{spec} t={t}");
            }
        }
    }

    #[test]
    fn quotient_examples() {
        let z8 = g("Z8");
        let subs = z8.subgroups_of_index(2).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].0.members().to_vec(), vec![0, 2, 4, 6]);
        assert_eq!(g("Z2xZ2").subgroups_of_index(2).unwrap().len(), 3);
        let z45 = g("Z45").subgroups_of_index(5).unwrap();
        assert_eq!(z45.len(), 1);
        assert_eq!(z45[0].0.size(), 9);
        assert!(matches!(z8.quotient_maps(3), Err(Error::NotDivisor { .. })));
    }

    #[test]
    fn quotient_count_formula_and_homomorphism() {
        for spec in ["Z2xZ2xZ2", "Z3xZ9", "Z5xZ5", "Z6xZ10", "Z2xZ4xZ8"] {
            let gr = g(spec);
            for p in [2u64, 3, 5] {
                if gr.order() as u64 % p != 0 {
                    continue;
                }
                let s = gr.factors().iter().filter(|&&n| n % p == 0).count() as u32;
                let maps = gr.quotient_maps(p).unwrap();
                assert_eq!(maps.len() as u64, (p.pow(s) - 1) / (p - 1), "{spec} p={p}");
                for q in &maps {
                    assert!(q.verify_homomorphism(&gr));
                    assert_eq!(q.kernel().index() * q.kernel().size(), gr.order());
                    assert_eq!(q.kernel().index() as u64, p);
                }
                // distinct kernels
                for i in 0..maps.len() {
                    for j in 0..i {
                        assert_ne!(maps[i].kernel(), maps[j].kernel());
                    }
                }
            }
        }
    }

    #[test]
    fn non_subgroup_rejected() {
        let gr = g("Z8");
        let bad = ElementSet::from_indices(8, [0, 1, 2, 3]).unwrap();
        assert!(Subgroup::from_members(&gr, bad).is_err());
    }

    #[test]
    fn canonical_idempotent() {
        for spec in ["Z6xZ4", "Z2xZ3xZ4", "Z12xZ18", "Z5"] {
            let c = g(spec).canonical();
            assert_eq!(c.canonical(), c);
            assert!(c.is_isomorphic(&g(spec)));
        }
    }

    #[test]
    fn group_counts_by_order() {
        let counts: Vec<usize> = (2..=24).map(|n| all_groups_of_order(n).len()).collect();
        // OEIS A000688
        assert_eq!(counts, vec![1, 1, 2, 1, 1, 1, 3, 2, 1, 1, 2, 1, 1, 1, 5, 1, 2, 1, 2, 1, 1, 1, 3]);
        for n in 2..=64 {
            for gr in all_groups_of_order(n) {
                assert_eq!(gr.order() as u64, n);
                assert_eq!(gr.canonical(), gr);
            }
        }
    }
}
