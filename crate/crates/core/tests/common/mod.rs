//! Brute-force reference implementations. None of these call into the
//! library's DP, sumset, coding or curve code; group arithmetic is redone
//! from the cyclic factors.

#![allow(dead_code)]

/// Element arithmetic on `Z_{n_1} × .. × Z_{n_r}` with the last factor
/// varying fastest in the index.
#[derive(Clone, Debug)]
pub struct Arith {
    pub factors: Vec<usize>,
    pub order: usize,
}

impl Arith {
    pub fn new(factors: &[u64]) -> Self {
        let factors: Vec<usize> = factors.iter().map(|&f| f as usize).collect();
        let order = factors.iter().product();
        Arith { factors, order }
    }

    fn coords(&self, mut x: usize) -> Vec<usize> {
        let mut c = vec![0; self.factors.len()];
        for (i, &f) in self.factors.iter().enumerate().rev() {
            c[i] = x % f;
            x /= f;
        }
        c
    }

    fn index(&self, c: &[usize]) -> usize {
        c.iter().zip(&self.factors).fold(0, |acc, (&v, &f)| acc * f + v)
    }

    pub fn add(&self, x: usize, y: usize) -> usize {
        let (a, b) = (self.coords(x), self.coords(y));
        let c: Vec<usize> = a.iter().zip(&b).zip(&self.factors).map(|((u, v), f)| (u + v) % f).collect();
        self.index(&c)
    }

    /// Addition table, `table[x * order + y]`.
    pub fn table(&self) -> Vec<usize> {
        let n = self.order;
        let mut t = vec![0; n * n];
        for x in 0..n {
            for y in 0..n {
                t[x * n + y] = self.add(x, y);
            }
        }
        t
    }
}

/// `out[k][s]` is true iff some k-subset of `elems` sums to `s`.
pub fn gamma_all(ar: &Arith, table: &[usize], elems: &[usize]) -> Vec<Vec<bool>> {
    let n = ar.order;
    let mut out = vec![vec![false; n]; elems.len() + 1];
    fn dfs(i: usize, size: usize, sum: usize, elems: &[usize], n: usize, table: &[usize], out: &mut [Vec<bool>]) {
        if i == elems.len() {
            out[size][sum] = true;
            return;
        }
        dfs(i + 1, size, sum, elems, n, table, out);
        dfs(i + 1, size + 1, table[sum * n + elems[i]], elems, n, table, out);
    }
    dfs(0, 0, 0, elems, n, table, &mut out);
    out
}

/// Least `m` such that every `m`-subset has `Γ_k = G`, over all `2^g` subsets.
pub fn brute_mu(ar: &Arith, k: usize) -> usize {
    let n = ar.order;
    let table = ar.table();
    let mut largest_bad = 0;
    for mask in 0u64..(1u64 << n) {
        let size = mask.count_ones() as usize;
        if size <= largest_bad {
            continue;
        }
        let elems: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let covers = if k <= size { gamma_all(ar, &table, &elems)[k].iter().all(|&b| b) } else { false };
        if !covers {
            largest_bad = size;
        }
    }
    largest_bad + 1
}

/// `out[l][s]`: some sub-multiset of length `l` sums to `s` mod `p`.
pub fn sigma_all(p: usize, mult: &[usize]) -> Vec<Vec<bool>> {
    let total: usize = mult.iter().sum();
    let mut out = vec![vec![false; p]; total + 1];
    let mut counts = vec![0usize; p];
    loop {
        let len: usize = counts.iter().sum();
        let s = counts.iter().enumerate().map(|(a, c)| a * c).sum::<usize>() % p;
        out[len][s] = true;
        let mut i = 0;
        loop {
            if i == p {
                return out;
            }
            if counts[i] < mult[i] {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// Minimum Hamming weight of a nonzero codeword, by enumerating all
/// `p^k` messages.
pub fn min_distance(gen: &[Vec<u64>], p: u64) -> usize {
    let k = gen.len();
    let n = gen[0].len();
    let mut msg = vec![0u64; k];
    let mut word = vec![0u64; n];
    let mut best = n + 1;
    loop {
        // odometer step, updating the codeword incrementally
        let mut i = 0;
        loop {
            if i == k {
                return best;
            }
            msg[i] += 1;
            for (w, g) in word.iter_mut().zip(&gen[i]) {
                *w = (*w + g) % p;
            }
            if msg[i] < p {
                break;
            }
            msg[i] = 0;
            i += 1;
        }
        let weight = word.iter().filter(|&&w| w != 0).count();
        best = best.min(weight);
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// `|E(F_p)|` from Euler's criterion: `1 + Σ_x (1 + (f(x)/p))`.
pub fn count_points(p: u64, a: u64, b: u64) -> u64 {
    let mut n = 1;
    for x in 0..p {
        let f = (x * x % p * x + a * x + b) % p;
        n += if f == 0 {
            1
        } else if pow_mod(f, (p - 1) / 2, p) == 1 {
            2
        } else {
            0
        };
    }
    n
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}
