//! Structural obstructions to full coverage: dense sets trapped in an
//! index-2 coset or in two cosets of an index-5 subgroup, fiber
//! normalization along a prime quotient, and covering of `Z_3` / `Z_5` by
//! subsums of consecutive lengths.

use serde::Serialize;

use crate::arith::is_prime;
use crate::error::{Error, Result};
use crate::group::{GroupSpec, QuotientMap};
use crate::set::ElementSet;
use crate::sumset::{restricted_sumset, Multiset};

/// `A' = A − shift` with its densest fiber moved into the kernel.
#[derive(Debug, Clone, Serialize)]
pub struct Normalization {
    pub translated: ElementSet,
    pub shift: usize,
    /// `|A' ∩ π⁻¹(r)|` for `r = 0..p`.
    pub fiber_sizes: Vec<usize>,
    pub kernel_size: usize,
    /// `Some(|A'_0| > h/2)` when `|A| > g/2`, where the bound is guaranteed.
    pub dense_exceeds_half: Option<bool>,
}

impl Normalization {
    pub fn dense_fiber_size(&self) -> usize {
        self.fiber_sizes[0]
    }
}

pub fn normalize_translate(group: &GroupSpec, pi: &QuotientMap, a: &ElementSet) -> Result<Normalization> {
    let p = pi.prime();
    let mut sizes = vec![0usize; p as usize];
    for x in a.iter() {
        sizes[pi.residue(x) as usize] += 1;
    }
    // smallest residue among the maximal fibers
    let best = *sizes.iter().max().unwrap();
    let r0 = sizes.iter().position(|&s| s == best).unwrap() as u64;
    let shift = (0..group.order()).find(|&x| pi.residue(x) == r0).unwrap();
    let translated = group.translate(a, group.neg(shift));
    let fiber_sizes: Vec<usize> = (0..p).map(|r| sizes[((r + r0) % p) as usize]).collect();
    let h = pi.kernel().size();
    let dense_exceeds_half = if 2 * a.len() > group.order() {
        let ok = 2 * fiber_sizes[0] > h;
        if !ok {
            return Err(Error::Internal("pigeonhole violated: dense fiber not above h/2".into()));
        }
        Some(ok)
    } else {
        None
    };
    Ok(Normalization { translated, shift, fiber_sizes, kernel_size: h, dense_exceeds_half })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CosetHit {
    /// Coefficients of the map `G → Z_2` whose kernel is the subgroup.
    pub subgroup: Vec<u64>,
    pub coset: u64,
    pub excess: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CosetPairHit {
    /// Coefficients of the map `G → Z_5` whose kernel is the subgroup.
    pub subgroup: Vec<u64>,
    pub cosets: (u64, u64),
    pub excess: usize,
}

/// Which of the four structural alternatives hold for a set. All holding
/// alternatives are listed; they are not exclusive.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub group: String,
    pub size: usize,
    pub slack: usize,
    /// `13|A| <= 5g`
    #[serde(rename = "(i)")]
    pub density_low: bool,
    /// index-2 cosets `C` with `|A \ C| <= slack`
    #[serde(rename = "(ii)")]
    pub index2_cosets: Vec<CosetHit>,
    /// two cosets `C_1, C_2` of one index-5 subgroup with `|A \ (C_1 ∪ C_2)| <= slack`
    #[serde(rename = "(iii)")]
    pub index5_pairs: Vec<CosetPairHit>,
    #[serde(rename = "(iv)")]
    pub gamma3_full: bool,
}

impl ObstructionReport {
    /// No structural alternative (i)-(iii) applies.
    pub fn unobstructed(&self) -> bool {
        !self.density_low && self.index2_cosets.is_empty() && self.index5_pairs.is_empty()
    }

    /// At least one of the four alternatives holds.
    pub fn some_alternative_holds(&self) -> bool {
        !self.unobstructed() || self.gamma3_full
    }
}

pub fn obstruction_scan(group: &GroupSpec, a: &ElementSet, slack: usize) -> Result<ObstructionReport> {
    let g = group.order();
    let mut index2 = Vec::new();
    if g % 2 == 0 {
        for q in group.quotient_maps(2)? {
            for (r, coset) in q.cosets().iter().enumerate() {
                let excess = a.difference_len(coset);
                if excess <= slack {
                    index2.push(CosetHit { subgroup: q.coeffs().to_vec(), coset: r as u64, excess });
                }
            }
        }
    }
    let mut index5 = Vec::new();
    if g % 5 == 0 {
        for q in group.quotient_maps(5)? {
            let cosets = q.cosets();
            for i in 0..5 {
                for j in i + 1..5 {
                    let excess = a.difference_len(&cosets[i].union(&cosets[j]));
                    if excess <= slack {
                        index5.push(CosetPairHit {
                            subgroup: q.coeffs().to_vec(),
                            cosets: (i as u64, j as u64),
                            excess,
                        });
                    }
                }
            }
        }
    }
    let gamma3_full = a.len() >= 3 && restricted_sumset(group, a, 3)?.is_full();
    let report = ObstructionReport {
        group: group.to_string(),
        size: a.len(),
        slack,
        density_low: 13 * a.len() <= 5 * g,
        index2_cosets: index2,
        index5_pairs: index5,
        gamma3_full,
    };
    validate_report(group, a, &report)?;
    Ok(report)
}

fn validate_report(group: &GroupSpec, a: &ElementSet, report: &ObstructionReport) -> Result<()> {
    for hit in &report.index2_cosets {
        let q = QuotientMap::from_coeffs(group, 2, hit.subgroup.clone())?;
        if a.difference_len(&q.fiber(hit.coset)) != hit.excess || hit.excess > report.slack {
            return Err(Error::Internal(format!("index-2 hit {hit:?} fails revalidation")));
        }
    }
    for hit in &report.index5_pairs {
        let q = QuotientMap::from_coeffs(group, 5, hit.subgroup.clone())?;
        let union = q.fiber(hit.cosets.0).union(&q.fiber(hit.cosets.1));
        if a.difference_len(&union) != hit.excess || hit.excess > report.slack {
            return Err(Error::Internal(format!("index-5 hit {hit:?} fails revalidation")));
        }
    }
    Ok(())
}

/// Largest `|C_1 ∩ C_2|` over distinct index-2 cosets; checked against `g/4`.
pub fn coset_intersection_audit(group: &GroupSpec) -> Result<usize> {
    let g = group.order();
    if g % 2 != 0 {
        return Err(Error::NotDivisor { divisor: 2, order: g as u64 });
    }
    let cosets: Vec<ElementSet> = group.quotient_maps(2)?.iter().flat_map(|q| q.cosets()).collect();
    let mut best = 0;
    for i in 0..cosets.len() {
        for j in 0..i {
            if cosets[i] != cosets[j] {
                best = best.max(cosets[i].intersection_len(&cosets[j]));
            }
        }
    }
    if 4 * best > g {
        return Err(Error::Internal(format!("index-2 cosets meet in {best} > g/4 elements")));
    }
    Ok(best)
}

/// For one residue: the window length used and the multiplicity counts of
/// the submultiset realizing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueWitness {
    pub residue: u64,
    pub length: usize,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub p: u64,
    pub start: usize,
    pub covered: bool,
    pub witnesses: Vec<ResidueWitness>,
}

/// Whether `Σ_ℓ(U) ∪ .. ∪ Σ_{ℓ+p−1}(U) = Z_p` for `p ∈ {3, 5}` and `U`
/// supported on nonzero residues.
pub fn consecutive_cover(p: u64, u: &Multiset, start: usize) -> Result<CoverReport> {
    if p != 3 && p != 5 {
        return Err(Error::InvalidParameter(format!("consecutive cover is defined for p in {{3, 5}}, got {p}")));
    }
    if u.modulus() != p {
        return Err(Error::InvalidParameter("multiset modulus differs from p".into()));
    }
    if u.mult(0) != 0 {
        return Err(Error::InvalidParameter("multiset support contains 0".into()));
    }
    let width = p as usize;
    let total = u.total();
    if total < width - 1 || start + width - 1 > total {
        return Err(Error::InvalidParameter(format!(
            "window {start}..={} out of range for u = {total}",
            start + width - 1
        )));
    }
    let sigmas = u.sigma_all();
    let mut witnesses = Vec::new();
    for s in 0..p {
        if let Some(len) = (start..start + width).find(|&l| sigmas[l].contains(s as usize)) {
            let counts = u
                .sigma_witness(len, s)?
                .ok_or_else(|| Error::Internal("sigma membership without witness".into()))?;
            witnesses.push(ResidueWitness { residue: s, length: len, counts });
        }
    }
    Ok(CoverReport { p, start, covered: witnesses.len() == width, witnesses })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SigmaFullCheck {
    pub hypothesis_met: bool,
    pub asserted_full: bool,
    /// Result of the direct computation of `Σ_ℓ(U)`, when performed.
    pub verified_full: Option<bool>,
}

/// Evaluates the mass hypothesis `u > (p−2)h/2`, `3 <= ℓ <= u−p+1` for a
/// multiset over `Z_p^×` with multiplicities capped by `h`; when it holds,
/// `Σ_ℓ(U) = Z_p` is asserted and confirmed by direct computation.
pub fn sigma_full_predicate(p: u64, h: usize, u: &Multiset, len: usize) -> Result<SigmaFullCheck> {
    if p < 7 || !is_prime(p) {
        return Err(Error::InvalidParameter(format!("p = {p} must be a prime >= 7")));
    }
    if h < 4 {
        return Err(Error::InvalidParameter(format!("cap h = {h} must be >= 4")));
    }
    if u.modulus() != p {
        return Err(Error::InvalidParameter("multiset modulus differs from p".into()));
    }
    if u.mult(0) != 0 {
        return Err(Error::InvalidParameter("multiplicity of 0 must be zero".into()));
    }
    if let Some(v) = u.multiplicities().iter().find(|&&v| v > h) {
        return Err(Error::InvalidParameter(format!("multiplicity {v} exceeds cap h = {h}")));
    }
    let total = u.total();
    let mass = 2 * total > (p as usize - 2) * h;
    let range = len >= 3 && len + p as usize - 1 <= total;
    if !(mass && range) {
        return Ok(SigmaFullCheck { hypothesis_met: false, asserted_full: false, verified_full: None });
    }
    let full = u.sigma(len)?.is_full();
    if !full {
        return Err(Error::Internal(format!("mass hypothesis met but Σ_{len}(U) ≠ Z_{p}")));
    }
    Ok(SigmaFullCheck { hypothesis_met: true, asserted_full: true, verified_full: Some(true) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GroupSpec {
        s.parse().unwrap()
    }

    #[test]
    fn normalize_examples() {
        let z6 = g("Z6");
        let pi = &z6.quotient_maps(3).unwrap()[0];
        let a = ElementSet::from_indices(6, [1, 2, 4, 5]).unwrap();
        let n = normalize_translate(&z6, pi, &a).unwrap();
        assert_eq!(n.shift, 1);
        assert_eq!(n.translated.to_vec(), vec![0, 1, 3, 4]);
        assert_eq!(n.translated.intersection(pi.kernel().members()).to_vec(), vec![0, 3]);
        assert_eq!(n.dense_exceeds_half, Some(true));

        let z15 = g("Z15");
        let pi = &z15.quotient_maps(3).unwrap()[0];
        let mut a = pi.kernel().members().clone();
        a.insert(1);
        let n = normalize_translate(&z15, pi, &a).unwrap();
        assert_eq!(n.shift, 0);
        assert_eq!(n.dense_fiber_size(), 5);
        assert_eq!(n.dense_exceeds_half, None);

        let sub = ElementSet::from_indices(15, [0, 6]).unwrap();
        assert_eq!(normalize_translate(&z15, pi, &sub).unwrap().shift, 0);
    }

    #[test]
    fn scan_examples() {
        let z8 = g("Z8");
        let a = ElementSet::from_indices(8, [0, 2, 4, 6]).unwrap();
        let r = obstruction_scan(&z8, &a, 0).unwrap();
        assert_eq!(r.index2_cosets, vec![CosetHit { subgroup: vec![1], coset: 0, excess: 0 }]);
        assert!(!r.gamma3_full);

        let z45 = g("Z45");
        let q = &z45.quotient_maps(5).unwrap()[0];
        let a = q.fiber(1).union(&q.fiber(3));
        assert_eq!(a.len(), 18);
        let r = obstruction_scan(&z45, &a, 0).unwrap();
        assert_eq!(r.index5_pairs.len(), 1);
        assert_eq!(r.index5_pairs[0].cosets, (1, 3));

        // 13·3 = 39 > 35 = 5·7: exact comparison puts {1,2,3} above the threshold
        let z7 = g("Z7");
        let a = ElementSet::from_indices(7, [1, 2, 3]).unwrap();
        let r = obstruction_scan(&z7, &a, 0).unwrap();
        assert!(!r.density_low);
        let a = ElementSet::from_indices(7, [1, 2]).unwrap();
        assert!(obstruction_scan(&z7, &a, 0).unwrap().density_low);
    }

    #[test]
    fn scan_json_uses_alternative_labels() {
        let z8 = g("Z8");
        let a = ElementSet::from_indices(8, [0, 2, 4, 6]).unwrap();
        let v = serde_json::to_value(obstruction_scan(&z8, &a, 0).unwrap()).unwrap();
        for key in ["(i)", "(ii)", "(iii)", "(iv)"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn audit_examples() {
        assert_eq!(coset_intersection_audit(&g("Z2xZ2")).unwrap(), 1);
        assert_eq!(coset_intersection_audit(&g("Z8")).unwrap(), 0);
        assert_eq!(coset_intersection_audit(&g("Z2xZ4")).unwrap(), 2);
        assert!(coset_intersection_audit(&g("Z9")).is_err());
    }

    #[test]
    fn cover_examples() {
        let u = Multiset::from_elements(3, [1, 1]).unwrap();
        let r = consecutive_cover(3, &u, 0).unwrap();
        assert!(r.covered);
        let lens: Vec<usize> = r.witnesses.iter().map(|w| w.length).collect();
        assert_eq!(lens, vec![0, 1, 2]);

        let u = Multiset::from_elements(5, [1, 1, 1, 1]).unwrap();
        assert!(consecutive_cover(5, &u, 0).unwrap().covered);
        let u = Multiset::from_elements(3, [1, 2]).unwrap();
        assert!(consecutive_cover(3, &u, 0).unwrap().covered);
    }

    #[test]
    fn cover_errors() {
        let u = Multiset::from_elements(3, [0, 1, 2]).unwrap();
        assert!(consecutive_cover(3, &u, 0).is_err());
        let u = Multiset::from_elements(3, [1, 2]).unwrap();
        assert!(consecutive_cover(3, &u, 1).is_err());
        let u = Multiset::from_elements(7, [1, 2]).unwrap();
        assert!(consecutive_cover(7, &u, 0).is_err());
    }

    #[test]
    fn sigma_full_examples() {
        // u = 11 spread over Z_7^x
        let u = Multiset::new(7, vec![0, 2, 2, 2, 2, 2, 1]).unwrap();
        let c = sigma_full_predicate(7, 4, &u, 3).unwrap();
        assert!(c.hypothesis_met && c.asserted_full);
        assert_eq!(c.verified_full, Some(true));

        let u10 = Multiset::new(7, vec![0, 2, 2, 2, 2, 1, 1]).unwrap();
        assert!(!sigma_full_predicate(7, 4, &u10, 3).unwrap().hypothesis_met);

        // l = u - p + 2 is just outside the range
        assert!(!sigma_full_predicate(7, 4, &u, 11 - 7 + 2).unwrap().hypothesis_met);
        assert!(sigma_full_predicate(7, 4, &u, 11 - 7 + 1).unwrap().hypothesis_met);

        let over = Multiset::new(7, vec![0, 5, 2, 2, 2, 0, 0]).unwrap();
        assert!(sigma_full_predicate(7, 4, &over, 3).is_err());
        let zero = Multiset::new(7, vec![1, 2, 2, 2, 2, 2, 0]).unwrap();
        assert!(sigma_full_predicate(7, 4, &zero, 3).is_err());
    }
}
