//! The extractor / sampler / disperser / code zoo. Every object carries a
//! declared contract; the oracle certifies the declaration by exact
//! measurement, and randomized constructions are resampled until their
//! certificate holds.

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::gf2::{enumerate_affine_subspaces, BitString, Gf2Matrix};
use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How a certification quantity was measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertMethod {
    Exhaustive,
    Sampled { count: u64, seed: u64 },
}

// ---------------------------------------------------------------------------
// Extractor specs

#[derive(Clone, Debug)]
enum ExtImpl {
    /// `M_s[i][j] = s[i+j]`; needs the first `n+m-1` seed bits.
    ToeplitzHash,
    /// Dense table indexed by `(x << d) | s`.
    TruthTable(Vec<u16>),
    /// One m-by-n matrix per seed.
    SeedLinear(Vec<Gf2Matrix>),
    /// Seedless table indexed by `x` (affine extractors).
    SeedlessTable(Vec<u16>),
}

/// A seeded (or seedless, when `d = 0`) extractor with its declared
/// contract. `eval` is total and deterministic; when `linear` is set,
/// `eval(., s)` is GF(2)-linear for every seed.
#[derive(Clone, Debug)]
pub struct ExtractorSpec {
    pub n: u32,
    pub d: u32,
    pub m: u32,
    /// Entropy the declared error refers to.
    pub claimed_entropy: u32,
    pub declared_eps: f64,
    pub strong: bool,
    pub linear: bool,
    imp: ExtImpl,
}

impl ExtractorSpec {
    pub fn eval(&self, x: &BitString, s: &BitString) -> BitString {
        assert_eq!(x.len(), self.n, "extractor input width");
        assert_eq!(s.len(), self.d, "extractor seed width");
        match &self.imp {
            ExtImpl::ToeplitzHash => {
                let xm = x.raw();
                let mut out = BitString::zero(self.m);
                for i in 0..self.m {
                    let row = (s.raw() >> i) & ((1u128 << self.n) - 1);
                    out.set(i, ((row & xm).count_ones() & 1) as u8);
                }
                out
            }
            ExtImpl::TruthTable(t) => {
                let idx = ((x.raw_u64() as usize) << self.d) | s.raw_u64() as usize;
                BitString::from_u64(self.m, t[idx] as u64)
            }
            ExtImpl::SeedLinear(mats) => mats[s.raw_u64() as usize].mul_vec(x),
            ExtImpl::SeedlessTable(t) => {
                BitString::from_u64(self.m, t[x.raw_u64() as usize] as u64)
            }
        }
    }

    pub fn eval_raw(&self, x: u64, s: u64) -> u64 {
        self.eval(
            &BitString::from_u64(self.n, x),
            &BitString::from_u64(self.d, s),
        )
        .raw_u64()
    }

    pub fn seed_count(&self) -> u64 {
        1u64 << self.d
    }

    /// The linear map applied at a fixed seed, when the implementation is
    /// linear.
    pub fn matrix_for_seed(&self, s: &BitString) -> Option<Gf2Matrix> {
        assert_eq!(s.len(), self.d);
        match &self.imp {
            ExtImpl::ToeplitzHash => {
                let mut mat = Gf2Matrix::zero(self.m as usize, self.n as usize);
                for i in 0..self.m {
                    let row = (s.raw() >> i) & ((1u128 << self.n) - 1);
                    mat.set_row(i as usize, &BitString::from_raw(self.n, row));
                }
                Some(mat)
            }
            ExtImpl::SeedLinear(mats) => Some(mats[s.raw_u64() as usize].clone()),
            _ => None,
        }
    }

    /// Checks GF(2)-linearity of `eval(., s)` for every seed by exhaustive
    /// superposition against the basis decomposition.
    pub fn audit_linearity(&self) -> bool {
        assert!(self.n + self.d <= 22, "linearity audit budget");
        for s in 0..self.seed_count() {
            if self.eval_raw(0, s) != 0 {
                return false;
            }
            for x in 1u64..(1u64 << self.n) {
                let low = x & x.wrapping_neg();
                if x != low {
                    let want = self.eval_raw(x ^ low, s) ^ self.eval_raw(low, s);
                    if self.eval_raw(x, s) != want {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Universal-hash strong seeded extractor: the seed's first `n+m-1` bits
/// define a Toeplitz-structured matrix, and the declared error follows the
/// leftover-hash bound once an entropy claim is attached.
pub fn hash_extractor(n: u32, d: u32, m: u32) -> Result<ExtractorSpec> {
    if m > n {
        return Err(Error::Infeasible(format!(
            "hash extractor needs m <= n, got m={m}, n={n}"
        )));
    }
    if d < n + m - 1 {
        return Err(Error::Infeasible(format!(
            "hash extractor needs d >= n+m-1 = {}, got d={d}",
            n + m - 1
        )));
    }
    Ok(ExtractorSpec {
        n,
        d,
        m,
        claimed_entropy: 0,
        declared_eps: 1.0,
        strong: true,
        linear: true,
        imp: ExtImpl::ToeplitzHash,
    })
}

impl ExtractorSpec {
    /// Attaches a leftover-hash entropy claim: error `2^((m-k)/2 - 1)`.
    pub fn with_entropy_claim(mut self, k: u32) -> Self {
        assert!(
            matches!(self.imp, ExtImpl::ToeplitzHash),
            "leftover-hash claim on a hash extractor"
        );
        self.claimed_entropy = k;
        self.declared_eps = 2f64.powf((self.m as f64 - k as f64) / 2.0 - 1.0);
        self
    }

    /// Overrides the declared error with a measured value.
    pub fn with_measured_eps(mut self, k: u32, eps: f64) -> Self {
        self.claimed_entropy = k;
        self.declared_eps = eps;
        self
    }
}

/// Per-seed random full-rank linear maps; the declared error is attached
/// after certification against a source family.
pub fn seed_linear_extractor(n: u32, d: u32, m: u32, seed: u64) -> Result<ExtractorSpec> {
    if m > n {
        return Err(Error::Infeasible(format!(
            "linear extractor needs m <= n, got m={m}"
        )));
    }
    if d > 12 {
        return Err(Error::Infeasible(
            "seed-linear extractor capped at d <= 12".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats = (0..1u64 << d)
        .map(|_| loop {
            let mut mat = Gf2Matrix::zero(m as usize, n as usize);
            for i in 0..m as usize {
                let row: u64 = rng.gen::<u64>() & ((1u64 << n) - 1);
                mat.set_row(i, &BitString::from_u64(n, row));
            }
            if mat.rank() == m as usize {
                break mat;
            }
        })
        .collect();
    Ok(ExtractorSpec {
        n,
        d,
        m,
        claimed_entropy: 0,
        declared_eps: 1.0,
        strong: true,
        linear: true,
        imp: ExtImpl::SeedLinear(mats),
    })
}

// ---------------------------------------------------------------------------
// Exact strong-extractor error (integer arithmetic)

/// Exact strong distance `Δ((E(X,S),S),(U_m,S))` for a flat source and a
/// uniform seed, via integer counting:
/// `sum_s sum_v |count_{s,v} * 2^m - S| / (2 * S * 2^m * D)`.
pub fn strong_distance_flat(e: &ExtractorSpec, support: &[u64]) -> BigRational {
    let s_len = support.len() as u128;
    let dcount = e.seed_count();
    let mut acc: u128 = 0;
    let mut counts = vec![0u64; 1usize << e.m];
    for s in 0..dcount {
        counts.fill(0);
        for &x in support {
            counts[e.eval_raw(x, s) as usize] += 1;
        }
        for &c in counts.iter() {
            acc += ((c as u128) << e.m).abs_diff(s_len);
        }
    }
    let den = BigUint::from(2u64)
        * BigUint::from(s_len)
        * (BigUint::from(1u64) << e.m)
        * BigUint::from(dcount);
    BigRational::new(BigUint::from(acc).into(), den.into())
}

/// Exact strong distance with an arbitrary seed distribution (used for the
/// deficient-seed degradation checks).
pub fn strong_distance_flat_seeded(
    e: &ExtractorSpec,
    support: &[u64],
    seed_dist: &Distribution,
) -> BigRational {
    assert_eq!(seed_dist.n(), e.d);
    let s_len = support.len() as u128;
    let mut acc = BigUint::from(0u32);
    let mut counts = vec![0u64; 1usize << e.m];
    for (s, w) in seed_dist.iter() {
        counts.fill(0);
        for &x in support {
            counts[e.eval_raw(x, s) as usize] += 1;
        }
        let mut inner: u128 = 0;
        for &c in counts.iter() {
            inner += ((c as u128) << e.m).abs_diff(s_len);
        }
        acc += BigUint::from(inner) * w;
    }
    let den = BigUint::from(2u64)
        * BigUint::from(s_len)
        * (BigUint::from(1u64) << e.m)
        * seed_dist.total().clone();
    BigRational::new(acc.into(), den.into())
}

/// Exact (seedless) extractor distance `Δ(E(X), U_m)` for a flat source.
pub fn seedless_distance_flat(e: &ExtractorSpec, support: &[u64]) -> BigRational {
    assert_eq!(e.d, 0);
    let s_len = support.len() as u128;
    let mut counts = vec![0u64; 1usize << e.m];
    for &x in support {
        counts[e.eval_raw(x, 0) as usize] += 1;
    }
    let mut acc: u128 = 0;
    for &c in counts.iter() {
        acc += ((c as u128) << e.m).abs_diff(s_len);
    }
    let den = BigUint::from(2u64) * BigUint::from(s_len) * (BigUint::from(1u64) << e.m);
    BigRational::new(BigUint::from(acc).into(), den.into())
}

// ---------------------------------------------------------------------------
// Brute-force-optimal extractor search

pub struct BruteSearch {
    pub n: u32,
    pub d: u32,
    pub m: u32,
    pub k: u32,
    pub target_eps: f64,
    pub seed: u64,
    pub max_iters: u64,
}

/// The adversarial flat-source family the search optimizes against: every
/// support of size `2^k` when that is feasible, otherwise a seeded random
/// family plus structured supports (intervals and low-weight strings).
pub fn adversarial_flat_family(n: u32, k: u32, seed: u64) -> Vec<Vec<u64>> {
    let space = 1u64 << n;
    let size = 1u64 << k;
    let exhaustive_feasible = {
        let mut c: u128 = 1;
        let mut ok = true;
        for i in 0..size {
            c = c * (space - i) as u128 / (i + 1) as u128;
            if c > 3000 {
                ok = false;
                break;
            }
        }
        ok
    };
    if exhaustive_feasible {
        return (0..space).combinations(size as usize).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family: Vec<Vec<u64>> = Vec::new();
    // Intervals.
    for start in (0..space).step_by((space / 8).max(1) as usize) {
        family.push((0..size).map(|i| (start + i) % space).collect());
    }
    // Lowest-weight strings.
    let mut by_weight: Vec<u64> = (0..space).collect();
    by_weight.sort_by_key(|&x| (x.count_ones(), x));
    family.push(by_weight[..size as usize].to_vec());
    // Random supports.
    while family.len() < 150 {
        let mut sup = std::collections::BTreeSet::new();
        while (sup.len() as u64) < size {
            sup.insert(rng.gen_range(0..space));
        }
        family.push(sup.into_iter().collect());
    }
    family
}

/// Randomized local search over truth tables minimizing the worst-case
/// strong error against the adversarial family. The returned spec declares
/// the *measured* error.
pub fn brute_optimal_extractor(p: BruteSearch) -> Result<ExtractorSpec> {
    if p.n > 12 || p.d > 6 || p.m > 2 {
        return Err(Error::Infeasible(format!(
            "brute search capped at n<=12, d<=6, m<=2; got n={}, d={}, m={}",
            p.n, p.d, p.m
        )));
    }
    let family = adversarial_flat_family(p.n, p.k, p.seed ^ 0xfa111e5);
    let dcount = 1u64 << p.d;
    let out_count = 1usize << p.m;
    let support_size = 1u64 << p.k;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut table: Vec<u16> = (0..(1u64 << (p.n + p.d)))
        .map(|_| rng.gen_range(0..out_count as u16))
        .collect();

    let member_of: Vec<Vec<u32>> = {
        let mut mo = vec![Vec::new(); 1usize << p.n];
        for (fi, sup) in family.iter().enumerate() {
            for &x in sup {
                mo[x as usize].push(fi as u32);
            }
        }
        mo
    };
    let mut counts = vec![0u64; family.len() * dcount as usize * out_count];
    let idx = |f: usize, s: u64, v: usize| (f * dcount as usize + s as usize) * out_count + v;
    for (f, sup) in family.iter().enumerate() {
        for s in 0..dcount {
            for &x in sup {
                let v = table[((x << p.d) | s) as usize] as usize;
                counts[idx(f, s, v)] += 1;
            }
        }
    }
    let term = |c: u64| ((c as u128) << p.m).abs_diff(support_size as u128) as u64;
    let recompute = |table: &[u16], counts: &mut [u64], err_num: &mut [u64]| {
        counts.fill(0);
        for (f, sup) in family.iter().enumerate() {
            for s in 0..dcount {
                for &x in sup {
                    let v = table[((x << p.d) | s) as usize] as usize;
                    counts[idx(f, s, v)] += 1;
                }
            }
        }
        for (f, e) in err_num.iter_mut().enumerate() {
            *e = (0..dcount)
                .map(|s| {
                    (0..out_count)
                        .map(|v| term(counts[idx(f, s, v)]))
                        .sum::<u64>()
                })
                .sum();
        }
    };
    let mut err_num = vec![0u64; family.len()];
    recompute(&table, &mut counts, &mut err_num);

    let worst = |err: &[u64]| *err.iter().max().expect("nonempty family");
    let den = 2.0 * support_size as f64 * (1u64 << p.m) as f64 * dcount as f64;
    let target_num = (p.target_eps * den).floor() as u64;
    let mut cur = worst(&err_num);
    let mut best = cur;
    let mut best_table = table.clone();
    let mut stall = 0u64;

    let mut it = 0u64;
    while best > target_num && it < p.max_iters {
        it += 1;
        // Kick out of plateaus: perturb a slice of the table and rescore.
        if stall > 2000 {
            stall = 0;
            for _ in 0..(table.len() / 16).max(1) {
                let i = rng.gen_range(0..table.len());
                table[i] = rng.gen_range(0..out_count as u16);
            }
            recompute(&table, &mut counts, &mut err_num);
            cur = worst(&err_num);
            continue;
        }
        let x = rng.gen_range(0..1u64 << p.n);
        let s = rng.gen_range(0..dcount);
        let old_v = table[((x << p.d) | s) as usize] as usize;
        let new_v = rng.gen_range(0..out_count);
        if new_v == old_v {
            continue;
        }
        let mut touched: Vec<(usize, i64)> = Vec::new();
        for &f in &member_of[x as usize] {
            let f = f as usize;
            let before = term(counts[idx(f, s, old_v)]) + term(counts[idx(f, s, new_v)]);
            counts[idx(f, s, old_v)] -= 1;
            counts[idx(f, s, new_v)] += 1;
            let after = term(counts[idx(f, s, old_v)]) + term(counts[idx(f, s, new_v)]);
            touched.push((f, after as i64 - before as i64));
        }
        for &(f, delta) in &touched {
            err_num[f] = (err_num[f] as i64 + delta) as u64;
        }
        let w = worst(&err_num);
        if w <= cur {
            if w < best {
                stall = 0;
            }
            cur = w;
            table[((x << p.d) | s) as usize] = new_v as u16;
            if w < best {
                best = w;
                best_table = table.clone();
            } else {
                stall += 1;
            }
        } else {
            stall += 1;
            for &(f, delta) in &touched {
                err_num[f] = (err_num[f] as i64 - delta) as u64;
            }
            for &f in &member_of[x as usize] {
                let f = f as usize;
                counts[idx(f, s, new_v)] -= 1;
                counts[idx(f, s, old_v)] += 1;
            }
        }
    }

    let table = best_table;
    let measured = best as f64 / den;
    if measured > p.target_eps {
        return Err(Error::SearchExhausted(format!(
            "brute extractor search: measured {measured:.4} > target {} after {it} iters",
            p.target_eps
        )));
    }
    Ok(ExtractorSpec {
        n: p.n,
        d: p.d,
        m: p.m,
        claimed_entropy: p.k,
        declared_eps: measured,
        strong: true,
        linear: false,
        imp: ExtImpl::TruthTable(table),
    })
}

// ---------------------------------------------------------------------------
// Brute-force-certified affine extractor (seedless)

/// Searches for a function whose output is close to uniform on *every*
/// affine source of dimension `k` in {0,1}^l, certified exhaustively.
/// Returns the spec with the measured worst-case error declared.
pub fn brute_affine_extractor(
    l: u32,
    k: u32,
    m: u32,
    target_eps: f64,
    seed: u64,
    max_iters: u64,
) -> Result<ExtractorSpec> {
    if l > 12 {
        return Err(Error::Infeasible(
            "affine extractor search capped at l <= 12".into(),
        ));
    }
    let (spaces, _) = enumerate_affine_subspaces(l, k, Some(5_000_000))?;
    let supports: Vec<Vec<u64>> = spaces
        .iter()
        .map(|s| {
            s.enumerate()
                .expect("within budget")
                .map(|p| p.raw_u64())
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support_size = 1u64 << k;
    let out_count = 1usize << m;
    let term = |counts: &[u32]| -> u64 {
        counts
            .iter()
            .map(|&c| ((c as u64) << m).abs_diff(support_size))
            .sum()
    };

    // Incidence lists: which subspaces contain each point.
    let mut member_of: Vec<Vec<u32>> = vec![Vec::new(); 1usize << l];
    for (si, sup) in supports.iter().enumerate() {
        for &x in sup {
            member_of[x as usize].push(si as u32);
        }
    }

    let mut table: Vec<u16> = (0..1u64 << l)
        .map(|_| rng.gen_range(0..1u64 << m) as u16)
        .collect();
    // Per-subspace output counts and error terms.
    let mut counts: Vec<Vec<u32>> = vec![vec![0; out_count]; supports.len()];
    let mut errs: Vec<u64> = vec![0; supports.len()];
    let recompute = |table: &[u16], counts: &mut Vec<Vec<u32>>, errs: &mut Vec<u64>| {
        for (si, sup) in supports.iter().enumerate() {
            counts[si].fill(0);
            for &x in sup {
                counts[si][table[x as usize] as usize] += 1;
            }
            errs[si] = term(&counts[si]);
        }
    };
    recompute(&table, &mut counts, &mut errs);
    // Lexicographic score: (worst error, how many subspaces attain it).
    let score = |errs: &[u64]| -> (u64, u64) {
        let w = *errs.iter().max().expect("nonempty");
        (w, errs.iter().filter(|&&e| e == w).count() as u64)
    };
    let mut cur = score(&errs);
    let mut best = cur;
    let mut best_table = table.clone();
    let den = 2.0 * support_size as f64 * out_count as f64;
    let target_num = (target_eps * den).floor() as u64;
    let mut stall = 0u64;
    let mut it = 0u64;
    while best.0 > target_num && it < max_iters {
        it += 1;
        if stall > 3000 {
            stall = 0;
            for _ in 0..(table.len() / 8).max(1) {
                let i = rng.gen_range(0..table.len());
                table[i] = rng.gen_range(0..out_count as u16);
            }
            recompute(&table, &mut counts, &mut errs);
            cur = score(&errs);
            continue;
        }
        let x = rng.gen_range(0..1u64 << l) as usize;
        let old = table[x] as usize;
        let mut new_v = rng.gen_range(0..out_count);
        while new_v == old {
            new_v = rng.gen_range(0..out_count);
        }
        for &si in &member_of[x] {
            let si = si as usize;
            counts[si][old] -= 1;
            counts[si][new_v] += 1;
            errs[si] = term(&counts[si]);
        }
        let s = score(&errs);
        if s <= cur {
            table[x] = new_v as u16;
            cur = s;
            if s < best {
                best = s;
                best_table = table.clone();
                stall = 0;
            } else {
                stall += 1;
            }
        } else {
            stall += 1;
            for &si in &member_of[x] {
                let si = si as usize;
                counts[si][new_v] -= 1;
                counts[si][old] += 1;
                errs[si] = term(&counts[si]);
            }
        }
    }
    let table = best_table;
    let measured = best.0 as f64 / den;
    if measured > target_eps {
        return Err(Error::SearchExhausted(format!(
            "affine extractor search: measured {measured:.4} > target {target_eps} after {it} iters"
        )));
    }
    Ok(ExtractorSpec {
        n: l,
        d: 0,
        m,
        claimed_entropy: k,
        declared_eps: measured,
        strong: false,
        linear: false,
        imp: ExtImpl::SeedlessTable(table),
    })
}

// ---------------------------------------------------------------------------
// Extractor as sampler

/// The `2^d` outputs of the extractor on `x` across all seeds, in seed
/// order.
pub fn extractor_as_sampler(e: &ExtractorSpec, x: &BitString) -> Vec<BitString> {
    (0..e.seed_count())
        .map(|s| e.eval(x, &BitString::from_u64(e.d, s)))
        .collect()
}

// ---------------------------------------------------------------------------
// Averaging sampler

/// Pairwise-independent index hopping with deterministic distinctness
/// repair (collisions advance to the next unused index).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AveragingSampler {
    pub r_bits: u32,
    pub n_items: u32,
    pub t_samples: u32,
    prime: u64,
}

fn next_prime(n: u64) -> u64 {
    let mut c = n.max(2);
    loop {
        if (2..)
            .take_while(|p| p * p <= c)
            .all(|p| !c.is_multiple_of(p))
        {
            return c;
        }
        c += 1;
    }
}

impl AveragingSampler {
    pub fn new(r_bits: u32, n_items: u32, t_samples: u32) -> Result<Self> {
        if t_samples > n_items {
            return Err(Error::Infeasible(format!(
                "sampler needs t <= n, got t={t_samples}, n={n_items}"
            )));
        }
        if r_bits > 24 {
            return Err(Error::Infeasible("sampler seed capped at 24 bits".into()));
        }
        Ok(AveragingSampler {
            r_bits,
            n_items,
            t_samples,
            prime: next_prime(n_items as u64),
        })
    }

    /// Distinct indices in [n], deterministic in the seed.
    pub fn sample_raw(&self, seed: u64) -> Vec<u32> {
        debug_assert!(self.r_bits == 64 || seed < (1u64 << self.r_bits));
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15));
        let a = rng.gen_range(0..self.prime);
        let b = rng.gen_range(0..self.prime);
        let mut used = vec![false; self.n_items as usize];
        let mut out = Vec::with_capacity(self.t_samples as usize);
        for j in 0..self.t_samples as u64 {
            let mut i = ((a + j * b) % self.prime) % self.n_items as u64;
            while used[i as usize] {
                i = (i + 1) % self.n_items as u64;
            }
            used[i as usize] = true;
            out.push(i as u32);
        }
        out
    }

    pub fn sample(&self, seed: &BitString) -> Vec<u32> {
        assert_eq!(seed.len(), self.r_bits, "sampler seed width");
        self.sample_raw(seed.raw_u64())
    }
}

// ---------------------------------------------------------------------------
// Dispersers

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisperserCert {
    pub method: CertMethod,
    /// Smallest neighborhood size observed over audited K-subsets.
    pub min_coverage: u64,
}

/// A table function `Γ: [N] x [D] -> [M]` with a coverage certificate: for
/// every audited `X` of size `K`, `|Γ(X)| >= eps * M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisperserTable {
    pub n_log: u32,
    pub d_log: u32,
    pub m_log: u32,
    pub k_thresh: u64,
    pub eps: f64,
    pub table: Vec<u32>,
    pub cert: DisperserCert,
}

impl DisperserTable {
    pub fn left_size(&self) -> u64 {
        1u64 << self.n_log
    }
    pub fn degree(&self) -> u64 {
        1u64 << self.d_log
    }
    pub fn right_size(&self) -> u64 {
        1u64 << self.m_log
    }

    pub fn map(&self, x: u64, y: u64) -> u64 {
        self.table[(x * self.degree() + y) as usize] as u64
    }

    fn coverage(&self, subset: &[u64]) -> u64 {
        let mut seen = vec![false; self.right_size() as usize];
        let mut cov = 0u64;
        for &x in subset {
            for y in 0..self.degree() {
                let v = self.map(x, y) as usize;
                if !seen[v] {
                    seen[v] = true;
                    cov += 1;
                }
            }
        }
        cov
    }

    /// Audits the coverage property; exhaustive over K-subsets when
    /// feasible, otherwise over `sample_count` seeded random subsets.
    pub fn audit(&self, sample_count: u64, seed: u64) -> DisperserCert {
        let n = self.left_size();
        let k = self.k_thresh;
        let exhaustive_feasible = {
            let mut c: u128 = 1;
            let mut ok = true;
            for i in 0..k {
                c = c.saturating_mul((n - i) as u128) / (i + 1) as u128;
                if c > 200_000 {
                    ok = false;
                    break;
                }
            }
            ok
        };
        let mut min_cov = u64::MAX;
        if exhaustive_feasible {
            for subset in (0..n).combinations(k as usize) {
                min_cov = min_cov.min(self.coverage(&subset));
            }
            DisperserCert {
                method: CertMethod::Exhaustive,
                min_coverage: min_cov,
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..sample_count {
                let mut subset = std::collections::BTreeSet::new();
                while (subset.len() as u64) < k {
                    subset.insert(rng.gen_range(0..n));
                }
                let subset: Vec<u64> = subset.into_iter().collect();
                min_cov = min_cov.min(self.coverage(&subset));
            }
            DisperserCert {
                method: CertMethod::Sampled {
                    count: sample_count,
                    seed,
                },
                min_coverage: min_cov,
            }
        }
    }

    pub fn required_coverage(&self) -> u64 {
        (self.eps * self.right_size() as f64).ceil() as u64
    }
}

/// Conservative (Clopper-Pearson-style) upper confidence bound on a
/// failure rate observed as `failures` out of `trials`, at the given
/// confidence level. Inverted from the exact binomial tail by bisection;
/// the zero-failure case reduces to `1 - (1-confidence)^(1/trials)`.
pub fn binomial_upper_bound(failures: u64, trials: u64, confidence: f64) -> f64 {
    assert!(failures <= trials && trials > 0);
    assert!((0.5..1.0).contains(&confidence));
    let alpha = 1.0 - confidence;
    if failures == trials {
        return 1.0;
    }
    if failures == 0 {
        return 1.0 - alpha.powf(1.0 / trials as f64);
    }
    // Smallest p with Pr[Bin(trials, p) <= failures] <= alpha.
    let tail = |p: f64| -> f64 {
        // Iterative pmf accumulation in log space for stability.
        let mut acc = 0.0f64;
        let mut log_pmf = (trials as f64) * (1.0 - p).ln();
        acc += log_pmf.exp();
        for k in 1..=failures {
            log_pmf += ((trials - k + 1) as f64).ln() - (k as f64).ln() + p.ln() - (1.0 - p).ln();
            acc += log_pmf.exp();
        }
        acc
    };
    let (mut lo, mut hi) = (failures as f64 / trials as f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Resamples random tables until the coverage property certifies.
pub fn build_disperser(
    n_log: u32,
    d_log: u32,
    m_log: u32,
    k_thresh: u64,
    eps: f64,
    seed: u64,
    max_resamples: u32,
) -> Result<DisperserTable> {
    if n_log > 12 {
        return Err(Error::Infeasible(
            "disperser construction capped at N <= 2^12".into(),
        ));
    }
    if k_thresh == 0 || k_thresh > 1u64 << n_log {
        return Err(Error::Infeasible(format!(
            "disperser threshold K={k_thresh} out of range"
        )));
    }
    for attempt in 0..max_resamples {
        let table_seed = seed
            .wrapping_add(attempt as u64)
            .wrapping_mul(0x2545f4914f6cdd1d);
        let mut rng = ChaCha8Rng::seed_from_u64(table_seed);
        let table: Vec<u32> = (0..(1u64 << (n_log + d_log)))
            .map(|_| rng.gen_range(0..1u64 << m_log) as u32)
            .collect();
        let mut g = DisperserTable {
            n_log,
            d_log,
            m_log,
            k_thresh,
            eps,
            table,
            cert: DisperserCert {
                method: CertMethod::Exhaustive,
                min_coverage: 0,
            },
        };
        let cert = g.audit(100_000, seed ^ 0xa0d17);
        if cert.min_coverage >= g.required_coverage() {
            g.cert = cert;
            return Ok(g);
        }
    }
    Err(Error::CertificationFailed(format!(
        "no disperser table met coverage {eps} after {max_resamples} resamples"
    )))
}

/// Somewhere-random sample: `Ext(x, Γ(s, z))`.
pub fn srsamp(
    e: &ExtractorSpec,
    g: &DisperserTable,
    x: &BitString,
    s: u64,
    z: u64,
) -> Result<BitString> {
    if g.m_log != e.d {
        return Err(Error::DimensionMismatch {
            context: "srsamp disperser output vs extractor seed",
            expected: e.d as usize,
            actual: g.m_log as usize,
        });
    }
    let seed = BitString::from_u64(e.d, g.map(s, z));
    Ok(e.eval(x, &seed))
}

// ---------------------------------------------------------------------------
// Linear codes

#[derive(Clone, Debug, PartialEq)]
pub struct LinearCodeSpec {
    pub n: u32,
    pub n1: u32,
    pub generator: Gf2Matrix,
    pub min_distance: u32,
    pub distance_method: CertMethod,
}

impl LinearCodeSpec {
    pub fn relative_distance(&self) -> f64 {
        self.min_distance as f64 / self.n1 as f64
    }
}

/// Encodes `msg` as `generator * msg`.
pub fn code_encode(c: &LinearCodeSpec, msg: &BitString) -> Result<BitString> {
    if msg.len() != c.n {
        return Err(Error::DimensionMismatch {
            context: "code_encode",
            expected: c.n as usize,
            actual: msg.len() as usize,
        });
    }
    Ok(c.generator.mul_vec(msg))
}

/// Exhaustive minimum weight of the nonzero codewords (n <= 16).
pub fn certify_min_distance(generator: &Gf2Matrix, n: u32) -> Result<u32> {
    if n > 16 {
        return Err(Error::BudgetExceeded(
            "exhaustive distance scan capped at n <= 16".into(),
        ));
    }
    // Walk messages in Gray order, xoring one generator column at a time.
    let cols: Vec<u128> = {
        let t = generator.transpose();
        (0..n as usize).map(|j| t.row(j).raw()).collect()
    };
    let mut word: u128 = 0;
    let mut best = u32::MAX;
    for c in 1u64..(1u64 << n) {
        let j = c.trailing_zeros() as usize;
        word ^= cols[j];
        best = best.min(word.count_ones());
    }
    Ok(best)
}

/// The default good code: each message bit is repeated three times and
/// followed by the block's parity bit, giving rate exactly 1/4.
pub fn rep3_block_parity_code(n: u32) -> Result<LinearCodeSpec> {
    if 4 * n > 128 {
        return Err(Error::Infeasible(format!(
            "codeword length 4n = {} exceeds 128",
            4 * n
        )));
    }
    let mut generator = Gf2Matrix::zero(4 * n as usize, n as usize);
    for i in 0..n as usize {
        for r in 0..4 {
            generator.set(4 * i + r, i, 1);
        }
    }
    let min_distance = certify_min_distance(&generator, n)?;
    Ok(LinearCodeSpec {
        n,
        n1: 4 * n,
        generator,
        min_distance,
        distance_method: CertMethod::Exhaustive,
    })
}

// ---------------------------------------------------------------------------
// Binary container (shared by certified objects)

const MAGIC: &[u8; 4] = b"NMXC";
const KIND_DISPERSER: u8 = 1;
const KIND_CODE: u8 = 2;
const KIND_SEED_LINEAR: u8 = 3;

fn header(kind: u8, payload_len: u64) -> [u8; 16] {
    let mut h = [0u8; 16];
    h[..4].copy_from_slice(MAGIC);
    h[4] = kind;
    h[5] = 1; // container version
    h[8..16].copy_from_slice(&payload_len.to_le_bytes());
    h
}

fn check_header(bytes: &[u8], kind: u8) -> Result<&[u8]> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Parse("bad container magic".into()));
    }
    if bytes[4] != kind {
        return Err(Error::Parse(format!(
            "container kind {} != expected {kind}",
            bytes[4]
        )));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() != 16 + len {
        return Err(Error::Parse("container length mismatch".into()));
    }
    Ok(&bytes[16..])
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(Error::Parse("short container".into()));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn done(&self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Parse("trailing bytes in container".into()))
        }
    }
}

fn push_method(out: &mut Vec<u8>, m: CertMethod) {
    match m {
        CertMethod::Exhaustive => {
            out.push(0);
            out.extend_from_slice(&[0u8; 16]);
        }
        CertMethod::Sampled { count, seed } => {
            out.push(1);
            out.extend_from_slice(&count.to_le_bytes());
            out.extend_from_slice(&seed.to_le_bytes());
        }
    }
}

fn read_method(c: &mut Cursor) -> Result<CertMethod> {
    let tag = c.u8()?;
    let count = c.u64()?;
    let seed = c.u64()?;
    match tag {
        0 => Ok(CertMethod::Exhaustive),
        1 => Ok(CertMethod::Sampled { count, seed }),
        _ => Err(Error::Parse("bad certification method tag".into())),
    }
}

impl DisperserTable {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        for v in [self.n_log, self.d_log, self.m_log] {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        payload.extend_from_slice(&self.k_thresh.to_le_bytes());
        payload.extend_from_slice(&self.eps.to_bits().to_le_bytes());
        push_method(&mut payload, self.cert.method);
        payload.extend_from_slice(&self.cert.min_coverage.to_le_bytes());
        payload.extend_from_slice(&(self.table.len() as u64).to_le_bytes());
        for &t in &self.table {
            payload.extend_from_slice(&t.to_le_bytes());
        }
        let mut out = header(KIND_DISPERSER, payload.len() as u64).to_vec();
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let payload = check_header(bytes, KIND_DISPERSER)?;
        let mut c = Cursor(payload);
        let n_log = c.u32()?;
        let d_log = c.u32()?;
        let m_log = c.u32()?;
        let k_thresh = c.u64()?;
        let eps = f64::from_bits(c.u64()?);
        let method = read_method(&mut c)?;
        let min_coverage = c.u64()?;
        let len = c.u64()? as usize;
        let mut table = Vec::with_capacity(len);
        for _ in 0..len {
            table.push(c.u32()?);
        }
        c.done()?;
        Ok(DisperserTable {
            n_log,
            d_log,
            m_log,
            k_thresh,
            eps,
            table,
            cert: DisperserCert {
                method,
                min_coverage,
            },
        })
    }
}

impl LinearCodeSpec {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        for v in [self.n, self.n1, self.min_distance] {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        push_method(&mut payload, self.distance_method);
        for i in 0..self.generator.rows() {
            payload.extend_from_slice(&self.generator.row(i).raw().to_le_bytes());
        }
        let mut out = header(KIND_CODE, payload.len() as u64).to_vec();
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let payload = check_header(bytes, KIND_CODE)?;
        let mut c = Cursor(payload);
        let n = c.u32()?;
        let n1 = c.u32()?;
        let min_distance = c.u32()?;
        let distance_method = read_method(&mut c)?;
        let mut generator = Gf2Matrix::zero(n1 as usize, n as usize);
        for i in 0..n1 as usize {
            let raw = c.u128()?;
            generator.set_row(i, &BitString::from_raw(n, raw));
        }
        c.done()?;
        Ok(LinearCodeSpec {
            n,
            n1,
            generator,
            min_distance,
            distance_method,
        })
    }
}

impl ExtractorSpec {
    /// Serializes a per-seed linear extractor; the other implementations
    /// are rebuilt from their construction parameters instead.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let ExtImpl::SeedLinear(mats) = &self.imp else {
            return Err(Error::Infeasible(
                "only seed-linear extractors serialize to the container".into(),
            ));
        };
        let mut payload = Vec::new();
        for v in [self.n, self.d, self.m, self.claimed_entropy] {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        payload.extend_from_slice(&self.declared_eps.to_bits().to_le_bytes());
        payload.push(self.strong as u8);
        payload.push(self.linear as u8);
        for mat in mats {
            for i in 0..mat.rows() {
                payload.extend_from_slice(&mat.row(i).raw().to_le_bytes());
            }
        }
        let mut out = header(KIND_SEED_LINEAR, payload.len() as u64).to_vec();
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let payload = check_header(bytes, KIND_SEED_LINEAR)?;
        let mut c = Cursor(payload);
        let n = c.u32()?;
        let d = c.u32()?;
        let m = c.u32()?;
        let claimed_entropy = c.u32()?;
        let declared_eps = f64::from_bits(c.u64()?);
        let strong = c.u8()? != 0;
        let linear = c.u8()? != 0;
        let mut mats = Vec::with_capacity(1 << d);
        for _ in 0..1u64 << d {
            let mut mat = Gf2Matrix::zero(m as usize, n as usize);
            for i in 0..m as usize {
                mat.set_row(i, &BitString::from_raw(n, c.u128()?));
            }
            mats.push(mat);
        }
        c.done()?;
        Ok(ExtractorSpec {
            n,
            d,
            m,
            claimed_entropy,
            declared_eps,
            strong,
            linear,
            imp: ExtImpl::SeedLinear(mats),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{ToPrimitive, Zero};

    #[test]
    fn toeplitz_inner_product_example() {
        // n=2, m=1: seed row (s0, s1) applied as <(s0,s1), x>.
        let e = hash_extractor(2, 2, 1).unwrap();
        let x = BitString::parse_binary("10").unwrap();
        let s = BitString::parse_binary("01").unwrap();
        assert_eq!(e.eval(&x, &s).get(0), 0);
        let s2 = BitString::parse_binary("11").unwrap();
        assert_eq!(e.eval(&x, &s2).get(0), 1);
        // x = 0 maps to 0 for every seed.
        let z = BitString::zero(2);
        for s in 0..4u64 {
            assert_eq!(e.eval(&z, &BitString::from_u64(2, s)).raw_u64(), 0);
        }
    }

    #[test]
    fn toeplitz_linearity_audit() {
        let e = hash_extractor(5, 6, 2).unwrap();
        assert!(e.audit_linearity());
        let sl = seed_linear_extractor(6, 3, 2, 99).unwrap();
        assert!(sl.audit_linearity());
    }

    #[test]
    fn hash_extractor_leftover_bound_small() {
        // Exhaustive over all support-4 flat sources at n=4, m=1, k=2:
        // measured strong distance never exceeds the leftover-hash bound.
        let e = hash_extractor(4, 4, 1).unwrap().with_entropy_claim(2);
        assert!((e.declared_eps - 2f64.powf(-1.5)).abs() < 1e-12);
        let family = adversarial_flat_family(4, 2, 0);
        assert_eq!(family.len(), 1820);
        let mut worst = BigRational::zero();
        for sup in &family {
            let d = strong_distance_flat(&e, sup);
            if d > worst {
                worst = d;
            }
        }
        assert!(worst.to_f64().unwrap() <= e.declared_eps + 1e-12);
    }

    #[test]
    fn brute_search_vacuous_and_real_target() {
        // Target 1.0: any table qualifies.
        let spec = brute_optimal_extractor(BruteSearch {
            n: 4,
            d: 2,
            m: 1,
            k: 2,
            target_eps: 1.0,
            seed: 5,
            max_iters: 0,
        })
        .unwrap();
        assert!(spec.declared_eps <= 1.0);

        // n=4, d=2, m=1, k=2: the search reaches the true optimum 0.3125
        // (exhaustively certified over all 1820 support-4 sources), and the
        // declaration equals a fresh measurement over the same family.
        let spec = brute_optimal_extractor(BruteSearch {
            n: 4,
            d: 2,
            m: 1,
            k: 2,
            target_eps: 0.32,
            seed: 7,
            max_iters: 200_000,
        })
        .unwrap();
        assert!((spec.declared_eps - 0.3125).abs() < 1e-12);
        let family = adversarial_flat_family(4, 2, 7 ^ 0xfa111e5);
        let worst = family
            .iter()
            .map(|sup| strong_distance_flat(&spec, sup))
            .max()
            .unwrap();
        assert!((worst.to_f64().unwrap() - spec.declared_eps).abs() < 1e-12);
    }

    #[test]
    fn sampler_shapes() {
        let s = AveragingSampler::new(6, 10, 10).unwrap();
        for seed in 0..64u64 {
            let mut idx = s.sample_raw(seed);
            idx.sort_unstable();
            assert_eq!(
                idx,
                (0..10).collect::<Vec<u32>>(),
                "t = n must hit every index"
            );
        }
        let s = AveragingSampler::new(8, 40, 7).unwrap();
        for seed in 0..256u64 {
            let idx = s.sample_raw(seed);
            assert_eq!(idx.len(), 7);
            let set: std::collections::BTreeSet<_> = idx.iter().collect();
            assert_eq!(set.len(), 7, "samples must be distinct");
            assert_eq!(idx, s.sample_raw(seed), "deterministic in the seed");
        }
        assert!(AveragingSampler::new(4, 3, 5).is_err());
    }

    #[test]
    fn disperser_identity_and_random() {
        // Γ(x, y) = y with D = M covers everything: qualifies for any K.
        let n_log = 3;
        let d_log = 2;
        let table: Vec<u32> = (0..1u64 << n_log)
            .flat_map(|_| (0..1u32 << d_log).collect::<Vec<_>>())
            .collect();
        let mut g = DisperserTable {
            n_log,
            d_log,
            m_log: d_log,
            k_thresh: 1,
            eps: 1.0,
            table,
            cert: DisperserCert {
                method: CertMethod::Exhaustive,
                min_coverage: 0,
            },
        };
        let cert = g.audit(0, 0);
        assert_eq!(cert.min_coverage, g.right_size());
        g.cert = cert;

        // A random certified instance.
        let g = build_disperser(4, 2, 3, 4, 0.5, 11, 50).unwrap();
        assert!(g.cert.min_coverage >= g.required_coverage());
        assert_eq!(g.cert.method, CertMethod::Exhaustive);

        // K = 1 with eps above a single row's possible coverage fails.
        assert!(build_disperser(3, 0, 3, 1, 0.5, 1, 5).is_err());
    }

    #[test]
    fn code_distance_and_encode() {
        let c = rep3_block_parity_code(8).unwrap();
        assert_eq!(c.n1, 32);
        assert_eq!(c.generator.rank(), 8);
        let zero = code_encode(&c, &BitString::zero(8)).unwrap();
        assert_eq!(zero.weight(), 0);
        // Frozen by the exhaustive weight scan over the 255 nonzero codewords.
        assert_eq!(c.min_distance, 4);
        // Distinct messages land at distance >= min_distance.
        let a = code_encode(&c, &BitString::from_u64(8, 0x35)).unwrap();
        let b = code_encode(&c, &BitString::from_u64(8, 0x36)).unwrap();
        assert!(a.xor(&b).weight() >= c.min_distance);
        assert!(code_encode(&c, &BitString::zero(4)).is_err());
    }

    #[test]
    fn container_roundtrip() {
        let g = build_disperser(4, 2, 3, 4, 0.5, 3, 50).unwrap();
        let bytes = g.to_bytes();
        assert_eq!(&bytes[..4], b"NMXC");
        let back = DisperserTable::from_bytes(&bytes).unwrap();
        assert_eq!(g, back);
        assert_eq!(bytes, back.to_bytes());

        let c = rep3_block_parity_code(6).unwrap();
        let bytes = c.to_bytes();
        let back = LinearCodeSpec::from_bytes(&bytes).unwrap();
        assert_eq!(c, back);
        assert_eq!(bytes, back.to_bytes());
    }

    #[test]
    fn srsamp_matches_direct_extraction() {
        let e = seed_linear_extractor(8, 3, 2, 42).unwrap();
        let g = build_disperser(4, 2, 3, 4, 0.5, 9, 50).unwrap();
        let x = BitString::from_u64(8, 0b1011_0010);
        for s in 0..16u64 {
            for z in 0..2u64 {
                let got = srsamp(&e, &g, &x, s, z).unwrap();
                let want = e.eval(&x, &BitString::from_u64(3, g.map(s, z)));
                assert_eq!(got, want);
            }
        }
        // Linearity in x for a linear extractor.
        let x2 = BitString::from_u64(8, 0b0110_1100);
        let lhs = srsamp(&e, &g, &x.xor(&x2), 5, 1).unwrap();
        let rhs = srsamp(&e, &g, &x, 5, 1)
            .unwrap()
            .xor(&srsamp(&e, &g, &x2, 5, 1).unwrap());
        assert_eq!(lhs, rhs);
        assert_eq!(
            srsamp(&e, &g, &BitString::zero(8), 3, 0).unwrap().raw_u64(),
            0
        );
    }

    #[test]
    fn brute_affine_extractor_certifies() {
        let e = brute_affine_extractor(6, 4, 1, 0.3, 13, 40_000).unwrap();
        assert!(e.declared_eps <= 0.3);
        // Re-certify: the declaration equals a fresh exhaustive measurement.
        let (spaces, _) = enumerate_affine_subspaces(6, 4, None).unwrap();
        let worst = spaces
            .iter()
            .map(|s| {
                let sup: Vec<u64> = s.enumerate().unwrap().map(|p| p.raw_u64()).collect();
                seedless_distance_flat(&e, &sup)
            })
            .max()
            .unwrap();
        assert!((worst.to_f64().unwrap() - e.declared_eps).abs() < 1e-12);
    }

    #[test]
    fn sampler_averaging_contract_desk() {
        // Desk instance n=64, t=16, r=10: failure fraction measured by an
        // exhaustive seed loop against 200 seeded density-mu indicators.
        // The worst observed fraction is frozen as the declared gamma.
        let r = 10u32;
        let n = 64u32;
        let t = 16u32;
        let s = AveragingSampler::new(r, n, t).unwrap();
        let mu = 0.5f64;
        let theta = 0.25f64;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut worst_fails = 0u64;
        let mut tested = 0;
        while tested < 200 {
            let f: Vec<bool> = (0..n).map(|_| rng.gen_bool(mu)).collect();
            let avg = f.iter().filter(|&&b| b).count() as f64 / n as f64;
            if avg < mu {
                continue;
            }
            tested += 1;
            let mut fails = 0u64;
            for seed in 0..(1u64 << r) {
                let hit = s
                    .sample_raw(seed)
                    .iter()
                    .filter(|&&i| f[i as usize])
                    .count() as f64
                    / t as f64;
                if hit < mu - theta {
                    fails += 1;
                }
            }
            worst_fails = worst_fails.max(fails);
        }
        // Frozen by the exhaustive loop at these seeds: the worst indicator
        // fails on 15 of the 1024 seeds, so the declared gamma is 15/1024.
        assert_eq!(worst_fails, 15, "declared gamma regression");
    }

    #[test]
    fn extractor_as_sampler_shapes() {
        let e = seed_linear_extractor(6, 3, 2, 11).unwrap();
        let x = BitString::from_u64(6, 0b101101);
        let samples = extractor_as_sampler(&e, &x);
        assert_eq!(samples.len(), 8);
        assert!(samples.iter().all(|s| s.len() == 2));
        // A constant map yields D identical samples.
        let zero = extractor_as_sampler(&e, &BitString::zero(6));
        assert!(zero.iter().all(|s| s.raw_u64() == 0));
    }

    #[test]
    fn disperser_large_sampled_audit() {
        // N=256, K=16, D=8, M=16, eps=0.5: certified by a 10^5-subset
        // sampled audit with a recorded seed.
        let g = build_disperser(8, 3, 4, 16, 0.5, 21, 10).unwrap();
        assert!(matches!(
            g.cert.method,
            CertMethod::Sampled { count: 100_000, .. }
        ));
        assert!(g.cert.min_coverage >= g.required_coverage());
        // Zero audited failures give the rule-of-three style bound.
        let bound = binomial_upper_bound(0, 100_000, 0.99);
        assert!(bound < 1e-4);
        let loose = binomial_upper_bound(3, 100, 0.95);
        assert!(loose > 0.03 && loose < 0.12, "bound {loose}");
    }

    #[test]
    fn srsamp_somewhere_random_failure_probability() {
        // The somewhere-random sampler contract measured exactly on a desk
        // instance: exhaust x over the source support and y over [D]; for
        // small target sets T, count x's where every cell of some column
        // lands in T more often than 2*eps of the columns allow.
        let e = seed_linear_extractor(8, 3, 3, 42).unwrap();
        let g = build_disperser(4, 2, 3, 4, 0.5, 9, 50).unwrap();
        let eps = 0.25f64;
        let d = g.left_size();
        let b = g.degree();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut sup = std::collections::BTreeSet::new();
        while sup.len() < 64 {
            sup.insert(rng.gen_range(0..256u64));
        }
        let mut worst_fail_frac = 0.0f64;
        for _ in 0..50 {
            // |T| <= eps * 2^m = 2.
            let t_set: Vec<u64> = vec![rng.gen_range(0..8), rng.gen_range(0..8)];
            let mut bad_x = 0u64;
            for &xr in &sup {
                let x = BitString::from_u64(8, xr);
                let mut bad_cols = 0u64;
                for s in 0..d {
                    let all_in = (0..b)
                        .all(|z| t_set.contains(&srsamp(&e, &g, &x, s, z).unwrap().raw_u64()));
                    if all_in {
                        bad_cols += 1;
                    }
                }
                if (bad_cols as f64) > 2.0 * eps * d as f64 {
                    bad_x += 1;
                }
            }
            worst_fail_frac = worst_fail_frac.max(bad_x as f64 / sup.len() as f64);
        }
        // Declared delta frozen from this exhaustive desk run.
        assert!(worst_fail_frac <= 0.047, "measured delta {worst_fail_frac}");
    }
}
