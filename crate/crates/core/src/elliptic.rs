//! Short Weierstrass curves over prime fields, point enumeration and an
//! explicit isomorphism onto `Z_m × Z_n`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{factorize, is_prime, lcm, mod_inv, rem};
use crate::error::{Error, Result};
use crate::group::GroupSpec;

/// Largest field prime accepted by point enumeration.
pub const ENUMERATION_CAP: u64 = 10_000;

/// `y² = x³ + ax + b` over `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Curve {
    p: u64,
    a: u64,
    b: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Inf,
    Affine(u64, u64),
}

impl Curve {
    pub fn new(p: u64, a: i64, b: i64) -> Result<Self> {
        if p < 5 || !is_prime(p) {
            return Err(Error::InvalidParameter(format!("field characteristic {p} must be a prime >= 5")));
        }
        let c = Curve { p, a: rem(a, p), b: rem(b, p) };
        let disc = (4 * c.mul(c.mul(c.a, c.a), c.a) + 27 * c.mul(c.b, c.b)) % p;
        if disc == 0 {
            return Err(Error::SingularCurve(p));
        }
        Ok(c)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.p as u128) as u64
    }

    fn add_f(&self, x: u64, y: u64) -> u64 {
        (x + y) % self.p
    }

    fn sub_f(&self, x: u64, y: u64) -> u64 {
        (x + self.p - y) % self.p
    }

    fn rhs(&self, x: u64) -> u64 {
        self.add_f(self.add_f(self.mul(self.mul(x, x), x), self.mul(self.a, x)), self.b)
    }

    pub fn is_on_curve(&self, pt: &Point) -> bool {
        match *pt {
            Point::Inf => true,
            Point::Affine(x, y) => x < self.p && y < self.p && self.mul(y, y) == self.rhs(x),
        }
    }

    pub fn point(&self, x: i64, y: i64) -> Result<Point> {
        let pt = Point::Affine(rem(x, self.p), rem(y, self.p));
        self.check(&pt)?;
        Ok(pt)
    }

    pub fn check(&self, pt: &Point) -> Result<()> {
        if self.is_on_curve(pt) {
            Ok(())
        } else {
            Err(Error::OffCurve(format!("{pt} not on {self}")))
        }
    }

    pub fn neg(&self, pt: &Point) -> Point {
        match *pt {
            Point::Inf => Point::Inf,
            Point::Affine(x, y) => Point::Affine(x, (self.p - y) % self.p),
        }
    }

    /// Chord-tangent addition. Inputs are assumed on the curve.
    pub fn add(&self, p1: &Point, p2: &Point) -> Point {
        let (x1, y1, x2, y2) = match (*p1, *p2) {
            (Point::Inf, q) | (q, Point::Inf) => return q,
            (Point::Affine(x1, y1), Point::Affine(x2, y2)) => (x1, y1, x2, y2),
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % self.p == 0 {
                return Point::Inf;
            }
            let num = self.add_f(self.mul(3, self.mul(x1, x1)), self.a);
            self.mul(num, mod_inv(self.mul(2, y1), self.p))
        } else {
            self.mul(self.sub_f(y2, y1), mod_inv(self.sub_f(x2, x1), self.p))
        };
        let x3 = self.sub_f(self.sub_f(self.mul(lambda, lambda), x1), x2);
        let y3 = self.sub_f(self.mul(lambda, self.sub_f(x1, x3)), y1);
        Point::Affine(x3, y3)
    }

    pub fn checked_add(&self, p1: &Point, p2: &Point) -> Result<Point> {
        self.check(p1)?;
        self.check(p2)?;
        Ok(self.add(p1, p2))
    }

    pub fn sub(&self, p1: &Point, p2: &Point) -> Point {
        self.add(p1, &self.neg(p2))
    }

    /// `[m]P` by double-and-add; negative `m` negates.
    pub fn mul_scalar(&self, m: i64, pt: &Point) -> Point {
        let mut base = if m < 0 { self.neg(pt) } else { *pt };
        let mut e = m.unsigned_abs();
        let mut acc = Point::Inf;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.add(&acc, &base);
            }
            base = self.add(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// All points, `O` first and then by `(x, y)`.
    pub fn enumerate_points(&self) -> Result<Vec<Point>> {
        self.enumerate_points_capped(ENUMERATION_CAP)
    }

    pub fn enumerate_points_capped(&self, cap: u64) -> Result<Vec<Point>> {
        if self.p > cap {
            return Err(Error::InvalidParameter(format!("p = {} exceeds enumeration cap {cap}", self.p)));
        }
        let p = self.p;
        let mut root: Vec<Option<u64>> = vec![None; p as usize];
        for y in 0..=p / 2 {
            let sq = self.mul(y, y) as usize;
            root[sq].get_or_insert(y);
        }
        let mut pts = vec![Point::Inf];
        for x in 0..p {
            if let Some(y) = root[self.rhs(x) as usize] {
                pts.push(Point::Affine(x, y));
                if y != 0 {
                    pts.push(Point::Affine(x, p - y));
                }
            }
        }
        pts.sort();
        let n = pts.len() as u64;
        if !hasse_holds(p, n) {
            return Err(Error::Internal(format!("{self} has {n} points, outside the Hasse interval")));
        }
        Ok(pts)
    }

    /// Order of `pt`, given a multiple `n` of it.
    pub fn point_order(&self, pt: &Point, n: u64) -> u64 {
        let mut order = n;
        for (q, _) in factorize(n) {
            while order % q == 0 && self.mul_scalar((order / q) as i64, pt) == Point::Inf {
                order /= q;
            }
        }
        order
    }
}

/// `|N − p − 1| ≤ 2√p`, in integers.
pub fn hasse_holds(p: u64, n: u64) -> bool {
    let d = n as i128 - p as i128 - 1;
    d * d <= 4 * p as i128
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={},a={},b={}", self.p, self.a, self.b)
    }
}

impl FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut vals: [Option<i64>; 3] = [None; 3];
        for part in s.split(',') {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("curve term `{part}` is not key=value")))?;
            let slot = match key.trim() {
                "p" => 0,
                "a" => 1,
                "b" => 2,
                other => return Err(Error::Parse(format!("unknown curve key `{other}`"))),
            };
            let v: i64 = val.trim().parse().map_err(|_| Error::Parse(format!("bad integer `{val}`")))?;
            if vals[slot].replace(v).is_some() {
                return Err(Error::Parse(format!("duplicate curve key `{key}`")));
            }
        }
        match vals {
            [Some(p), Some(a), Some(b)] if p > 0 => Curve::new(p as u64, a, b),
            _ => Err(Error::Parse(format!("curve `{s}` needs p=<prime>,a=<int>,b=<int>"))),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Inf => write!(f, "inf"),
            Point::Affine(x, y) => write!(f, "({x},{y})"),
        }
    }
}

impl FromStr for Point {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" {
            return Ok(Point::Inf);
        }
        let inner = s
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("point `{s}` is not inf or (x,y)")))?;
        let (x, y) = inner.split_once(',').ok_or_else(|| Error::Parse(format!("point `{s}` needs two coordinates")))?;
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad coordinate `{t}`")));
        Ok(Point::Affine(parse(x)?, parse(y)?))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Curve {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `E(F_p) ≅ Z_m × Z_n` with `m | n`, via `[i]P2 ⊕ [j]P1 ↦ (i, j)`.
#[derive(Debug, Clone)]
pub struct GroupIso {
    curve: Curve,
    abstract_group: GroupSpec,
    points: Vec<Point>,
    fwd: HashMap<Point, usize>,
    back: Vec<Point>,
    m: u64,
    n: u64,
    gens: (Point, Point),
}

impl GroupIso {
    pub fn new(curve: &Curve) -> Result<Self> {
        let points = curve.enumerate_points()?;
        let total = points.len() as u64;
        let orders: Vec<u64> = points.iter().map(|pt| curve.point_order(pt, total)).collect();
        let n = orders.iter().fold(1, |acc, &o| lcm(acc, o));
        let p1 = points[orders.iter().position(|&o| o == n).ok_or_else(|| Error::Internal("no point of exponent order".into()))?];
        let m = total / n;
        if m * n != total || n % m != 0 {
            return Err(Error::Internal(format!("exponent {n} incompatible with {total} points")));
        }
        let mut cyclic_part = HashMap::with_capacity(n as usize);
        let mut acc = Point::Inf;
        for j in 0..n {
            cyclic_part.insert(acc, j);
            acc = curve.add(&acc, &p1);
        }
        let p2 = if m == 1 {
            Point::Inf
        } else {
            *points
                .iter()
                .zip(&orders)
                .find(|(pt, &o)| {
                    o == m && (1..m).all(|i| !cyclic_part.contains_key(&curve.mul_scalar(i as i64, pt)))
                })
                .map(|(pt, _)| pt)
                .ok_or_else(|| Error::Internal("no complementary generator".into()))?
        };
        let abstract_group = if m == 1 { GroupSpec::cyclic(n)? } else { GroupSpec::new(vec![m, n])? };
        let mut back = vec![Point::Inf; total as usize];
        let mut fwd = HashMap::with_capacity(total as usize);
        let mut row = Point::Inf;
        for i in 0..m {
            let mut pt = row;
            for j in 0..n {
                let idx = (i * n + j) as usize;
                if fwd.insert(pt, idx).is_some() {
                    return Err(Error::Internal("generators do not give a bijection".into()));
                }
                back[idx] = pt;
                pt = curve.add(&pt, &p1);
            }
            row = curve.add(&row, &p2);
        }
        if fwd.len() as u64 != total {
            return Err(Error::Internal("discrete-log table incomplete".into()));
        }
        let iso = GroupIso { curve: *curve, abstract_group, points, fwd, back, m, n, gens: (p1, p2) };
        iso.verify(10_000, 0)?;
        Ok(iso)
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn group(&self) -> &GroupSpec {
        &self.abstract_group
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// `(m, n)` with `m | n`.
    pub fn invariants(&self) -> (u64, u64) {
        (self.m, self.n)
    }

    /// Generators `(P1, P2)` of orders `n` and `m`.
    pub fn generators(&self) -> (Point, Point) {
        self.gens
    }

    pub fn fwd(&self, pt: &Point) -> Result<usize> {
        self.fwd.get(pt).copied().ok_or_else(|| Error::OffCurve(format!("{pt} not on {}", self.curve)))
    }

    pub fn back(&self, idx: usize) -> Result<Point> {
        self.back.get(idx).copied().ok_or_else(|| Error::InvalidParameter(format!("index {idx} out of range")))
    }

    /// `"ZmxZn"`, or `"Z1xZN"` when cyclic.
    pub fn structure_name(&self) -> String {
        format!("Z{}xZ{}", self.m, self.n)
    }

    /// Homomorphism and inverse checks: all pairs when `N <= 200`,
    /// otherwise `samples` seeded random pairs.
    pub fn verify(&self, samples: usize, seed: u64) -> Result<()> {
        let total = self.back.len();
        let g = &self.abstract_group;
        let check = |i: usize, j: usize| -> Result<()> {
            let sum = self.curve.add(&self.back[i], &self.back[j]);
            if self.fwd(&sum)? != g.add(i, j) {
                return Err(Error::Internal(format!("iso fails on {} + {}", self.back[i], self.back[j])));
            }
            Ok(())
        };
        for (idx, pt) in self.back.iter().enumerate() {
            if self.fwd(pt)? != idx {
                return Err(Error::Internal("back then fwd is not the identity".into()));
            }
        }
        if total <= 200 {
            for i in 0..total {
                for j in 0..total {
                    check(i, j)?;
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                check(rng.gen_range(0..total), rng.gen_range(0..total))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_examples() {
        assert!(matches!(Curve::new(13, 1, 3), Err(Error::SingularCurve(13))));
        assert!(Curve::new(13, 1, 1).is_ok());
        assert!(matches!(Curve::new(5, 0, 0), Err(Error::SingularCurve(5))));
        assert!(Curve::new(9, 1, 1).is_err());
        assert!(Curve::new(3, 1, 1).is_err());
    }

    #[test]
    fn parse_and_display() {
        let c: Curve = "p=13,a=1,b=1".parse().unwrap();
        assert_eq!(c.to_string(), "p=13,a=1,b=1");
        let c: Curve = "p=13,a=-1,b=14".parse().unwrap();
        assert_eq!((c.a(), c.b()), (12, 1));
        assert!("p=13,a=1".parse::<Curve>().is_err());
        assert!("p=13,a=1,b=1,a=2".parse::<Curve>().is_err());
        assert_eq!("inf".parse::<Point>().unwrap(), Point::Inf);
        assert_eq!("(3, 4)".parse::<Point>().unwrap(), Point::Affine(3, 4));
        assert_eq!(Point::Affine(3, 4).to_string(), "(3,4)");
    }

    #[test]
    fn group_laws_exhaustive() {
        for (p, a, b) in [(13, 1, 1), (11, 1, 3), (7, 3, 2), (17, 0, 5)] {
            let c = Curve::new(p, a, b).unwrap();
            let pts = c.enumerate_points().unwrap();
            assert!(pts.len() <= 100);
            for x in &pts {
                assert_eq!(c.add(x, &Point::Inf), *x);
                assert_eq!(c.add(x, &c.neg(x)), Point::Inf);
                for y in &pts {
                    let s = c.add(x, y);
                    assert!(c.is_on_curve(&s));
                    assert_eq!(s, c.add(y, x));
                    for z in &pts {
                        assert_eq!(c.add(&s, z), c.add(x, &c.add(y, z)));
                    }
                }
            }
        }
    }

    #[test]
    fn count_divisible_by_point_orders() {
        let c = Curve::new(13, 1, 1).unwrap();
        let pts = c.enumerate_points().unwrap();
        let n = pts.len() as i64;
        for pt in &pts {
            assert_eq!(c.mul_scalar(n, pt), Point::Inf);
        }
        // brute-force count over all (x, y)
        let brute = 1 + (0..13).flat_map(|x| (0..13).map(move |y| (x, y))).filter(|&(x, y)| c.is_on_curve(&Point::Affine(x, y))).count();
        assert_eq!(pts.len(), brute);
    }

    #[test]
    fn hasse_small_prime() {
        for a in 0..5 {
            for b in 0..5 {
                if let Ok(c) = Curve::new(5, a, b) {
                    let n = c.enumerate_points().unwrap().len();
                    assert!((2..=10).contains(&n));
                }
            }
        }
    }

    #[test]
    fn iso_scalar_agreement() {
        for a in 0..13 {
            for b in 0..13 {
                let Ok(c) = Curve::new(13, a, b) else { continue };
                let iso = GroupIso::new(&c).unwrap();
                let (m, n) = iso.invariants();
                assert_eq!(n % m, 0);
                assert_eq!((m * n) as usize, iso.points().len());
                assert_eq!(iso.fwd(&Point::Inf).unwrap(), 0);
                let g = iso.group();
                for pt in iso.points() {
                    let x = iso.fwd(pt).unwrap();
                    for s in 0..=iso.points().len() as i64 {
                        assert_eq!(iso.fwd(&c.mul_scalar(s, pt)).unwrap(), g.smul(s, x));
                    }
                }
            }
        }
    }

    #[test]
    fn non_cyclic_structure_found() {
        // y² = x³ − x over F_p with p ≡ 3 mod 4 has full 2-torsion
        let c = Curve::new(11, -1, 0).unwrap();
        let iso = GroupIso::new(&c).unwrap();
        assert_eq!(iso.invariants(), (2, 6));
        assert_eq!(iso.structure_name(), "Z2xZ6");
    }

    #[test]
    fn enumeration_cap() {
        let c = Curve::new(10_007, 1, 1).unwrap();
        assert!(c.enumerate_points().is_err());
    }
}
