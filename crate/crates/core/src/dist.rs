//! Exact finite distributions over {0,1}^n, sources, entropy, statistical
//! distance, conditioning, pushforward, t-wise-independence testing, and
//! NOBF certification.
//!
//! Probabilities are kept exact as integer weights over a common total, so
//! every distance this module reports on an exhaustive computation is a
//! rational number, not a float. Floats only appear in derived real-valued
//! quantities (entropies, reported measurement values).

use crate::error::{Error, Result};
use crate::gf2::{AffineSubspace, BitString, FieldElem};
use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// Hard cap on outcome width for exhaustive distribution work.
pub const DIST_BITS_BUDGET: u32 = 24;

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// An exact probability mass function over `n`-bit outcomes. Outcomes are
/// stored as raw integers (bit `i` of the integer is coordinate `i`);
/// `weight / total` is the probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    n: u32,
    total: BigUint,
    pmf: Vec<(u64, BigUint)>, // sorted by outcome, weights > 0, sum = total
}

impl Distribution {
    /// Builds from outcome weights; zero weights are dropped.
    pub fn from_weights(n: u32, weights: impl IntoIterator<Item = (u64, BigUint)>) -> Result<Self> {
        assert!(n <= 63, "outcome width {n} exceeds u64 packing");
        let mut map: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (o, w) in weights {
            if w.is_zero() {
                continue;
            }
            if n < 63 && o >= (1u64 << n) {
                return Err(Error::Parse(format!("outcome {o} out of range for n={n}")));
            }
            *map.entry(o).or_insert_with(BigUint::zero) += w;
        }
        if map.is_empty() {
            return Err(Error::EmptySupport);
        }
        let total: BigUint = map.values().sum();
        let mut d = Distribution {
            n,
            total,
            pmf: map.into_iter().collect(),
        };
        d.reduce();
        Ok(d)
    }

    /// Divides all weights and the total by their gcd, so equal
    /// distributions compare equal and weights stay small.
    fn reduce(&mut self) {
        use num_integer::Integer;
        let mut g = self.total.clone();
        for (_, w) in &self.pmf {
            if g.is_one() {
                return;
            }
            g = g.gcd(w);
        }
        if g.is_one() || g.is_zero() {
            return;
        }
        self.total /= &g;
        for (_, w) in &mut self.pmf {
            *w /= &g;
        }
    }

    pub fn from_counts(n: u32, counts: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        Self::from_weights(n, counts.into_iter().map(|(o, c)| (o, big(c))))
    }

    /// Point mass.
    pub fn point(n: u32, outcome: u64) -> Self {
        Distribution {
            n,
            total: BigUint::one(),
            pmf: vec![(outcome, BigUint::one())],
        }
    }

    /// Uniform over all of {0,1}^n; materialized, so capped at 16 bits.
    pub fn uniform(n: u32) -> Self {
        assert!(
            n <= 16,
            "materialized uniform capped at 16 bits; use distance_to_uniform"
        );
        let count = 1u64 << n;
        Distribution {
            n,
            total: big(count),
            pmf: (0..count).map(|o| (o, BigUint::one())).collect(),
        }
    }

    /// Uniform over an explicit support set.
    pub fn flat(n: u32, support: impl IntoIterator<Item = u64>) -> Result<Self> {
        Self::from_counts(n, support.into_iter().map(|o| (o, 1)))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn support_size(&self) -> usize {
        self.pmf.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &BigUint)> + '_ {
        self.pmf.iter().map(|(o, w)| (*o, w))
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn prob(&self, outcome: u64) -> BigRational {
        match self.pmf.binary_search_by_key(&outcome, |e| e.0) {
            Ok(i) => ratio(self.pmf[i].1.clone(), self.total.clone()),
            Err(_) => BigRational::zero(),
        }
    }

    /// Min-entropy in bits: `-log2(max_s Pr[s])`.
    pub fn min_entropy(&self) -> f64 {
        let max_w = self.pmf.iter().map(|(_, w)| w).max().expect("nonempty");
        log2_ratio(&self.total, max_w)
    }

    /// Exact statistical distance `1/2 * sum |p(s) - q(s)|`.
    pub fn stat_distance(&self, other: &Distribution) -> Result<BigRational> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                context: "stat_distance",
                expected: self.n as usize,
                actual: other.n as usize,
            });
        }
        // Merge walk over the two sorted supports, cross-multiplied onto the
        // common denominator total_p * total_q.
        let mut acc = BigUint::zero();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.pmf.len() || j < other.pmf.len() {
            let oi = self.pmf.get(i).map(|e| e.0);
            let oj = other.pmf.get(j).map(|e| e.0);
            match (oi, oj) {
                (Some(a), Some(b)) if a == b => {
                    let pa = &self.pmf[i].1 * &other.total;
                    let qb = &other.pmf[j].1 * &self.total;
                    acc += if pa >= qb { pa - qb } else { qb - pa };
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a < b => {
                    acc += &self.pmf[i].1 * &other.total;
                    i += 1;
                }
                (Some(_), Some(_)) => {
                    acc += &other.pmf[j].1 * &self.total;
                    j += 1;
                }
                (Some(_), None) => {
                    acc += &self.pmf[i].1 * &other.total;
                    i += 1;
                }
                (None, Some(_)) => {
                    acc += &other.pmf[j].1 * &self.total;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Ok(ratio(acc, big(2) * &self.total * &other.total))
    }

    /// Exact distance to the uniform distribution on {0,1}^n, without
    /// materializing it.
    pub fn distance_to_uniform(&self) -> BigRational {
        let count = BigUint::one() << self.n;
        // Common denominator: total * 2^n. Uniform weight per outcome: total.
        let mut acc = BigUint::zero();
        for (_, w) in &self.pmf {
            let scaled = w * &count;
            acc += if scaled >= self.total {
                scaled - &self.total
            } else {
                &self.total - scaled
            };
        }
        let missing = &count - big(self.pmf.len() as u64);
        acc += missing * &self.total;
        ratio(acc, big(2) * &self.total * count)
    }

    /// Exact image distribution under a total map on outcomes.
    pub fn pushforward(&self, m: u32, f: impl Fn(u64) -> u64) -> Distribution {
        let mut map: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (o, w) in &self.pmf {
            let img = f(*o);
            debug_assert!(m == 63 || img < (1u64 << m));
            *map.entry(img).or_insert_with(BigUint::zero) += w;
        }
        let mut d = Distribution {
            n: m,
            total: self.total.clone(),
            pmf: map.into_iter().collect(),
        };
        d.reduce();
        d
    }

    /// Renormalized restriction to an event.
    pub fn condition(&self, event: impl Fn(u64) -> bool) -> Result<Distribution> {
        let pmf: Vec<(u64, BigUint)> = self
            .pmf
            .iter()
            .filter(|(o, _)| event(*o))
            .cloned()
            .collect();
        if pmf.is_empty() {
            return Err(Error::ZeroProbabilityEvent);
        }
        let total: BigUint = pmf.iter().map(|(_, w)| w).sum();
        let mut d = Distribution {
            n: self.n,
            total,
            pmf,
        };
        d.reduce();
        Ok(d)
    }

    /// Marginal on the given coordinates (in the given order).
    pub fn marginal(&self, coords: &[u32]) -> Distribution {
        for &c in coords {
            assert!(c < self.n, "marginal coordinate out of range");
        }
        self.pushforward(coords.len() as u32, |o| {
            let mut out = 0u64;
            for (k, &c) in coords.iter().enumerate() {
                out |= ((o >> c) & 1) << k;
            }
            out
        })
    }

    /// Product distribution; `self` occupies the low coordinates.
    pub fn product(&self, other: &Distribution) -> Distribution {
        let n = self.n + other.n;
        assert!(n <= 63);
        let mut pmf = Vec::with_capacity(self.pmf.len() * other.pmf.len());
        for (ob, wb) in &other.pmf {
            for (oa, wa) in &self.pmf {
                pmf.push((oa | (ob << self.n), wa * wb));
            }
        }
        pmf.sort_unstable_by_key(|e| e.0);
        let mut d = Distribution {
            n,
            total: &self.total * &other.total,
            pmf,
        };
        d.reduce();
        d
    }

    /// Serializes as `<bitstring> <num>/<den>` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (o, w) in &self.pmf {
            let bs = BitString::from_u64(self.n, *o);
            out.push_str(&format!("{bs} {w}/{}\n", self.total));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries: Vec<(u64, BigUint, BigUint)> = Vec::new();
        let mut n = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (bits, frac) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad distribution line: {line}")))?;
            let bs = BitString::parse_binary(bits)?;
            match n {
                None => n = Some(bs.len()),
                Some(m) if m != bs.len() => {
                    return Err(Error::Parse("inconsistent outcome lengths".into()))
                }
                _ => {}
            }
            let (num, den) = frac
                .split_once('/')
                .ok_or_else(|| Error::Parse(format!("bad probability: {frac}")))?;
            let num: BigUint = num
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator: {num}")))?;
            let den: BigUint = den
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator: {den}")))?;
            entries.push((bs.raw_u64(), num, den));
        }
        let n = n.ok_or(Error::EmptySupport)?;
        // Bring all fractions onto a common denominator (product of distinct
        // denominators is fine; weights stay exact).
        let common: BigUint = entries
            .iter()
            .map(|(_, _, d)| d.clone())
            .fold(BigUint::one(), num_integer_lcm);
        Distribution::from_weights(
            n,
            entries.into_iter().map(|(o, num, den)| {
                let scale = &common / den;
                (o, num * scale)
            }),
        )
    }
}

fn num_integer_lcm(a: BigUint, b: BigUint) -> BigUint {
    use num_integer::Integer;
    a.lcm(&b)
}

fn log2_big(x: &BigUint) -> f64 {
    // Stable log2 for big integers via bit length + leading 64 bits.
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().expect("small biguint").log2();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_f64().expect("53-bit mantissa");
    top.log2() + shift as f64
}

/// `log2(a / b)` for positive big integers.
fn log2_ratio(a: &BigUint, b: &BigUint) -> f64 {
    log2_big(a) - log2_big(b)
}

/// Statistical distance as an exact rational; errors on width mismatch.
pub fn stat_distance(p: &Distribution, q: &Distribution) -> Result<BigRational> {
    p.stat_distance(q)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        log2_big(r.numer().magnitude()).exp2() * if r.is_negative() { -1.0 } else { 1.0 }
            / log2_big(r.denom().magnitude()).exp2()
    })
}

// ---------------------------------------------------------------------------
// Sources

/// A weak random source: flat (uniform over an explicit support), affine
/// (uniform over an affine subspace), or a general distribution.
#[derive(Clone, Debug)]
pub enum Source {
    Flat { n: u32, support: Vec<u64> },
    Affine(AffineSubspace),
    General(Distribution),
}

impl Source {
    pub fn flat(n: u32, support: Vec<u64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut s = support;
        s.sort_unstable();
        s.dedup();
        Ok(Source::Flat { n, support: s })
    }

    pub fn n(&self) -> u32 {
        match self {
            Source::Flat { n, .. } => *n,
            Source::Affine(a) => a.ambient_len(),
            Source::General(d) => d.n(),
        }
    }

    pub fn support_size(&self) -> usize {
        match self {
            Source::Flat { support, .. } => support.len(),
            Source::Affine(a) => 1usize << a.dim(),
            Source::General(d) => d.support_size(),
        }
    }

    /// Min-entropy: log2 of the support size for flat sources, the
    /// dimension for affine sources, and the pmf minimum otherwise.
    pub fn min_entropy(&self) -> f64 {
        match self {
            Source::Flat { support, .. } => (support.len() as f64).log2(),
            Source::Affine(a) => a.dim() as f64,
            Source::General(d) => d.min_entropy(),
        }
    }

    pub fn distribution(&self) -> Distribution {
        match self {
            Source::Flat { n, support } => {
                Distribution::flat(*n, support.iter().copied()).expect("nonempty support")
            }
            Source::Affine(a) => {
                let pts = a.enumerate().expect("affine budget").map(|p| p.raw_u64());
                Distribution::flat(a.ambient_len(), pts).expect("nonempty subspace")
            }
            Source::General(d) => d.clone(),
        }
    }

    /// Support outcomes (sorted, deduplicated).
    pub fn support(&self) -> Vec<u64> {
        match self {
            Source::Flat { support, .. } => support.clone(),
            Source::Affine(a) => {
                let mut v: Vec<u64> = a
                    .enumerate()
                    .expect("affine budget")
                    .map(|p| p.raw_u64())
                    .collect();
                v.sort_unstable();
                v
            }
            Source::General(d) => d.iter().map(|(o, _)| o).collect(),
        }
    }
}

/// Min-entropy of a source; errors on empty support (unreachable for the
/// checked constructors).
pub fn min_entropy(s: &Source) -> f64 {
    s.min_entropy()
}

/// Average conditional min-entropy of the joint `(X, W)` where `X` is the
/// low `x_bits` of each outcome and `W` the rest:
/// `-log2 E_w[max_x Pr[X=x | W=w]]`.
pub fn avg_cond_min_entropy(joint: &Distribution, x_bits: u32) -> f64 {
    assert!(x_bits <= joint.n(), "x_bits exceeds joint width");
    // E_w[max_x Pr[x|w]] = sum_w max_x Pr[x, w].
    let x_mask = if x_bits == 0 { 0 } else { (1u64 << x_bits) - 1 };
    let mut per_w: HashMap<u64, BigUint> = HashMap::new();
    for (o, w) in joint.iter() {
        let wv = o & !x_mask;
        let e = per_w.entry(wv).or_insert_with(BigUint::zero);
        if w > e {
            *e = w.clone();
        }
    }
    let num: BigUint = per_w.into_values().sum();
    -log2_ratio(&num, joint.total())
}

// ---------------------------------------------------------------------------
// t-wise independence and NOBF certification

/// Worst-tuple distance from uniform: max over all size-`t` coordinate
/// tuples of the marginal's distance to `U_t`.
pub fn twise_distance(d: &Distribution, t: u32) -> Result<BigRational> {
    if t > d.n() || d.n() > DIST_BITS_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "twise_distance needs t <= n <= {DIST_BITS_BUDGET}, got t={t}, n={}",
            d.n()
        )));
    }
    let tuples: Vec<Vec<u32>> = (0..d.n()).combinations(t as usize).collect();
    let best = tuples
        .par_iter()
        .map(|tuple| d.marginal(tuple).distance_to_uniform())
        .reduce(BigRational::zero, |a, b| if a >= b { a } else { b });
    Ok(best)
}

/// Certificate that all size-`t` marginals outside the bad set `Q` are
/// within `gamma` of uniform.
#[derive(Clone, Debug)]
pub struct NobfCertificate {
    pub bad_set: Vec<u32>,
    pub t: u32,
    pub gamma: f64,
    pub max_tuple_distance: BigRational,
}

/// Outcome of a failed certification attempt.
#[derive(Clone, Debug)]
pub struct NobfFailure {
    pub attempted_bad_set: Vec<u32>,
    pub worst_distance: BigRational,
}

/// Greedily grows a bad set from coordinates participating in failing
/// t-tuples until all remaining tuples pass `gamma`; succeeds iff at most
/// `q` coordinates were excluded. The greedy choice is a heuristic — the
/// measured distances recorded in the certificate are what count.
pub fn certify_nobf(
    d: &Distribution,
    q: u32,
    t: u32,
    gamma: f64,
) -> Result<std::result::Result<NobfCertificate, NobfFailure>> {
    if d.n() > DIST_BITS_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "certify_nobf capped at {DIST_BITS_BUDGET} bits"
        )));
    }
    let gamma_r = BigRational::from_float(gamma)
        .ok_or_else(|| Error::Parse("gamma must be finite".into()))?;
    let mut bad: Vec<u32> = Vec::new();
    loop {
        let live: Vec<u32> = (0..d.n()).filter(|c| !bad.contains(c)).collect();
        let mut worst = BigRational::zero();
        let mut fail_participation: BTreeMap<u32, usize> = BTreeMap::new();
        if live.len() >= t as usize {
            let tuples: Vec<Vec<u32>> = live.iter().copied().combinations(t as usize).collect();
            let dists: Vec<(Vec<u32>, BigRational)> = tuples
                .par_iter()
                .map(|tuple| (tuple.clone(), d.marginal(tuple).distance_to_uniform()))
                .collect();
            for (tuple, dist) in dists {
                if dist > worst {
                    worst = dist.clone();
                }
                if dist > gamma_r {
                    for c in tuple {
                        *fail_participation.entry(c).or_insert(0) += 1;
                    }
                }
            }
        }
        if fail_participation.is_empty() {
            return Ok(Ok(NobfCertificate {
                bad_set: bad,
                t,
                gamma,
                max_tuple_distance: worst,
            }));
        }
        if bad.len() as u32 >= q {
            return Ok(Err(NobfFailure {
                attempted_bad_set: bad,
                worst_distance: worst,
            }));
        }
        // Most implicated coordinate; ties broken toward the smallest index.
        let (&best_coord, _) = fail_participation
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .expect("nonempty");
        bad.push(best_coord);
        bad.sort_unstable();
    }
}

// ---------------------------------------------------------------------------
// Exactly t-wise independent generator

/// The evaluation family behind [`kwise_generator`]: output bit `i` is a
/// GF(2)-linear functional (one row of `mask_rows`) of the `m*t` coefficient
/// bits of a random degree-(t-1) polynomial over GF(2^m).
#[derive(Clone, Debug)]
pub struct KwiseFamily {
    pub n: u32,
    pub t: u32,
    pub field_degree: u32,
    pub points: Vec<u32>,
    mask_rows: Vec<u64>,
}

impl KwiseFamily {
    pub fn coeff_bits(&self) -> u32 {
        self.field_degree * self.t
    }

    /// Output string for one coefficient vector.
    pub fn eval(&self, coeffs: u64) -> u64 {
        let mut out = 0u64;
        for (i, &row) in self.mask_rows.iter().enumerate() {
            out |= ((((row & coeffs).count_ones()) & 1) as u64) << i;
        }
        out
    }

    /// Streams `(outcome, weight)` over the whole polynomial family using a
    /// Gray-code walk (one mask xor per step).
    pub fn for_each_outcome(&self, mut f: impl FnMut(u64)) {
        let bits = self.coeff_bits();
        assert!(bits <= 30, "kwise enumeration capped at 2^30 polynomials");
        // Column masks: flipping coefficient bit j xors column j into the output.
        let cols: Vec<u64> = (0..bits)
            .map(|j| {
                let mut col = 0u64;
                for (i, &row) in self.mask_rows.iter().enumerate() {
                    col |= ((row >> j) & 1) << i;
                }
                col
            })
            .collect();
        let mut out = self.eval(0);
        let count = 1u64 << bits;
        f(out);
        for c in 1..count {
            let j = c.trailing_zeros();
            out ^= cols[j as usize];
            f(out);
        }
    }

    pub fn distribution(&self) -> Distribution {
        let mut counts: HashMap<u64, u64> = HashMap::new();
        self.for_each_outcome(|o| *counts.entry(o).or_insert(0) += 1);
        Distribution::from_counts(self.n, counts).expect("nonempty family")
    }
}

/// Builds the exactly t-wise independent family on `n` bits: the lowest
/// output bit of `p(alpha_1), ..., p(alpha_n)` for a uniformly random
/// degree-(t-1) polynomial `p` over GF(2^m), at distinct nonzero points
/// chosen by the seed.
pub fn kwise_family(n: u32, t: u32, seed: u64) -> Result<KwiseFamily> {
    if t == 0 || t > n {
        return Err(Error::Infeasible(format!(
            "kwise generator needs 1 <= t <= n, got t={t}"
        )));
    }
    let mut m = 1u32;
    while (1u64 << m) - 1 < n as u64 {
        m += 1;
    }
    if m > crate::gf2::MAX_FIELD_DEGREE {
        return Err(Error::Infeasible(format!(
            "n={n} too large for supported field degrees"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u32> = (1..(1u32 << m)).collect();
    pool.shuffle(&mut rng);
    let points: Vec<u32> = pool.into_iter().take(n as usize).collect();
    // mask_rows[i] bit (j*m + k) = low bit of x^k * alpha_i^j.
    let mut mask_rows = vec![0u64; n as usize];
    for (i, &alpha) in points.iter().enumerate() {
        let a = FieldElem::new(m, alpha);
        for j in 0..t {
            let aj = a.pow(j as u64);
            for k in 0..m {
                let basis = FieldElem::new(m, 1 << k);
                let bit = basis.mul(&aj).expect("same degree").low_bit();
                mask_rows[i] |= (bit as u64) << (j * m + k);
            }
        }
    }
    Ok(KwiseFamily {
        n,
        t,
        field_degree: m,
        points,
        mask_rows,
    })
}

/// Exact distribution of the t-wise independent family (materialized).
pub fn kwise_generator(n: u32, t: u32, seed: u64) -> Result<Distribution> {
    Ok(kwise_family(n, t, seed)?.distribution())
}
