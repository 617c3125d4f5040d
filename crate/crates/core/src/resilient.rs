//! Resilient outer functions: Majority, a Tribes-of-majorities stand-in for
//! the bit-fixing-source extractor slot, and exact influence and bias
//! measurement.
//!
//! "Undetermined" is evaluated literally: after fixing the coordinates
//! outside Q, is the restriction of f to the Q-cube non-constant? For the
//! monotone families here that reduces to comparing the all-zero and
//! all-one completions, which keeps the scans exact at any width.

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::gf2::BitString;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug)]
pub enum ResilientFamily {
    Majority,
    /// Majorities over disjoint blocks feeding a Tribes (OR of ANDs) top.
    /// `blocks[i]` is the bit range of block i; consecutive blocks are
    /// grouped into ANDs of width `and_width`, and the groups are ORed.
    TribesOfMaj {
        blocks: Vec<(u32, u32)>,
        and_width: u32,
    },
    /// Arbitrary single-output truth table (exhaustive paths only).
    Table(Vec<u8>),
}

/// A boolean outer function with measurement hooks.
#[derive(Clone, Debug)]
pub struct ResilientFn {
    pub n: u32,
    pub m: u32,
    pub family: ResilientFamily,
}

/// Majority on any width: 1 iff the weight is at least ceil(n/2).
pub fn majority(x: &BitString) -> u8 {
    (x.weight() >= x.len().div_ceil(2)) as u8
}

impl ResilientFn {
    pub fn majority(n: u32) -> Self {
        ResilientFn {
            n,
            m: 1,
            family: ResilientFamily::Majority,
        }
    }

    pub fn from_table(n: u32, bits: Vec<u8>) -> Self {
        assert_eq!(bits.len(), 1 << n);
        ResilientFn {
            n,
            m: 1,
            family: ResilientFamily::Table(bits),
        }
    }

    pub fn eval(&self, x: &BitString) -> BitString {
        assert_eq!(x.len(), self.n, "resilient function input width");
        let bit = match &self.family {
            ResilientFamily::Majority => majority(x),
            ResilientFamily::TribesOfMaj { blocks, and_width } => {
                let outs: Vec<u8> = blocks
                    .iter()
                    .map(|&(lo, len)| majority(&x.substring(lo, len)))
                    .collect();
                tribes(&outs, *and_width)
            }
            ResilientFamily::Table(t) => t[x.raw_u64() as usize],
        };
        let mut out = BitString::zero(1);
        out.set(0, bit);
        out
    }

    pub fn eval_bit(&self, x: &BitString) -> u8 {
        self.eval(x).get(0)
    }

    fn is_monotone_family(&self) -> bool {
        matches!(
            self.family,
            ResilientFamily::Majority | ResilientFamily::TribesOfMaj { .. }
        )
    }
}

fn tribes(block_outs: &[u8], and_width: u32) -> u8 {
    for group in block_outs.chunks(and_width as usize) {
        if group.iter().all(|&b| b == 1) {
            return 1;
        }
    }
    0
}

/// `f(z) xor f(z')` bitwise; both halves must have the function's width.
pub fn xor_outer(f: &ResilientFn, z: &BitString, z_tampered: &BitString) -> Result<BitString> {
    if z.len() != f.n || z_tampered.len() != f.n {
        return Err(Error::DimensionMismatch {
            context: "xor_outer",
            expected: f.n as usize,
            actual: z.len().max(z_tampered.len()) as usize,
        });
    }
    Ok(f.eval(z).xor(&f.eval(z_tampered)))
}

/// Exact influence: the probability over uniform completions of the
/// coordinates outside Q that f is still undetermined.
pub fn influence(f: &ResilientFn, q: &[u32]) -> Result<BigRational> {
    for &c in q {
        if c >= f.n {
            return Err(Error::Infeasible(format!(
                "influence coordinate {c} out of range"
            )));
        }
    }
    match &f.family {
        ResilientFamily::Majority => return Ok(majority_influence(f.n, q.len() as u32)),
        ResilientFamily::TribesOfMaj { blocks, and_width } => {
            return tribes_maj_influence(blocks, *and_width, q)
        }
        ResilientFamily::Table(_) => {}
    }
    let rest: Vec<u32> = (0..f.n).filter(|c| !q.contains(c)).collect();
    if rest.len() > 20 {
        return Err(Error::BudgetExceeded(
            "exhaustive influence scan capped at 20 free coordinates".into(),
        ));
    }
    let mut undetermined = 0u64;
    for assign in 0u64..(1u64 << rest.len()) {
        if q_cube_undetermined(f, q, &rest, assign) {
            undetermined += 1;
        }
    }
    Ok(BigRational::new(
        BigUint::from(undetermined).into(),
        (BigUint::one() << rest.len()).into(),
    ))
}

fn q_cube_undetermined(f: &ResilientFn, q: &[u32], rest: &[u32], assign: u64) -> bool {
    let mut base = BitString::zero(f.n);
    for (bit, &c) in rest.iter().enumerate() {
        base.set(c, ((assign >> bit) & 1) as u8);
    }
    if f.is_monotone_family() {
        // Monotone: undetermined iff the extreme completions disagree.
        let mut hi = base;
        for &c in q {
            hi.set(c, 1);
        }
        return f.eval_bit(&base) != f.eval_bit(&hi);
    }
    let first = f.eval_bit(&base);
    for fill in 1u64..(1u64 << q.len()) {
        let mut v = base;
        for (bit, &c) in q.iter().enumerate() {
            v.set(c, ((fill >> bit) & 1) as u8);
        }
        if f.eval_bit(&v) != first {
            return true;
        }
    }
    false
}

/// Exact influence of any q-set on Majority: by symmetry this depends only
/// on |Q|, and equals the probability that the free weight lands in the
/// swing window `[ceil(n/2) - q, ceil(n/2) - 1]`.
pub fn majority_influence(n: u32, q: u32) -> BigRational {
    let free = n - q;
    let thresh = n.div_ceil(2);
    let lo = thresh.saturating_sub(q);
    let hi = thresh.saturating_sub(1);
    let mut num = BigUint::zero();
    for w in lo..=hi.min(free) {
        num += binomial(free as u64, w as u64);
    }
    BigRational::new(num.into(), (BigUint::one() << free).into())
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Exact Pr[Maj_w = 1] on uniform bits.
fn maj_one_prob(w: u32) -> BigRational {
    let thresh = w.div_ceil(2);
    let mut num = BigUint::zero();
    for t in thresh..=w {
        num += binomial(w as u64, t as u64);
    }
    BigRational::new(num.into(), (BigUint::one() << w).into())
}

/// Exact influence for the Tribes-of-majorities family: enumerate the
/// non-Q bits of the touched blocks, treat untouched blocks as independent
/// exact Bernoulli block outputs, and use monotonicity of the top circuit.
fn tribes_maj_influence(blocks: &[(u32, u32)], and_width: u32, q: &[u32]) -> Result<BigRational> {
    let block_of = |c: u32| blocks.iter().position(|&(lo, len)| c >= lo && c < lo + len);
    let mut touched: Vec<usize> = Vec::new();
    for &c in q {
        let b = block_of(c)
            .ok_or_else(|| Error::Infeasible(format!("coordinate {c} outside all blocks")))?;
        if !touched.contains(&b) {
            touched.push(b);
        }
    }
    touched.sort_unstable();
    let free_bits: Vec<u32> = touched
        .iter()
        .flat_map(|&b| {
            let (lo, len) = blocks[b];
            (lo..lo + len)
                .filter(|c| !q.contains(c))
                .collect::<Vec<_>>()
        })
        .collect();
    if free_bits.len() > 24 {
        return Err(Error::BudgetExceeded(
            "too many free bits in touched blocks".into(),
        ));
    }
    let group_count = blocks.len().div_ceil(and_width as usize);
    let untouched_probs: Vec<BigRational> =
        blocks.iter().map(|&(_, len)| maj_one_prob(len)).collect();

    let mut total = BigRational::zero();
    let cases = 1u64 << free_bits.len();
    for assign in 0..cases {
        // Per touched block: output with Q-bits all 0 and all 1.
        let mut lo_out = vec![None::<u8>; blocks.len()];
        let mut hi_out = vec![None::<u8>; blocks.len()];
        for &b in &touched {
            let (lo, len) = blocks[b];
            let mut v = BitString::zero(len);
            for (bit, &c) in free_bits.iter().enumerate() {
                if c >= lo && c < lo + len {
                    v.set(c - lo, ((assign >> bit) & 1) as u8);
                }
            }
            let mut v_hi = v;
            for &c in q {
                if c >= lo && c < lo + len {
                    v_hi.set(c - lo, 1);
                }
            }
            lo_out[b] = Some(majority(&v));
            hi_out[b] = Some(majority(&v_hi));
        }
        // Pr[OR = 0] under each extreme, over the untouched randomness.
        let mut p_or0_lo = BigRational::one();
        let mut p_or0_hi = BigRational::one();
        for g in 0..group_count {
            let mut p1_lo = BigRational::one();
            let mut p1_hi = BigRational::one();
            for b in g * and_width as usize..((g + 1) * and_width as usize).min(blocks.len()) {
                match (lo_out[b], hi_out[b]) {
                    (Some(o_lo), Some(o_hi)) => {
                        p1_lo *= BigRational::from_integer(BigUint::from(o_lo as u64).into());
                        p1_hi *= BigRational::from_integer(BigUint::from(o_hi as u64).into());
                    }
                    _ => {
                        p1_lo *= untouched_probs[b].clone();
                        p1_hi *= untouched_probs[b].clone();
                    }
                }
            }
            p_or0_lo *= BigRational::one() - p1_lo;
            p_or0_hi *= BigRational::one() - p1_hi;
        }
        // Monotone: undetermined iff OR(lo) = 0 and OR(hi) = 1.
        total += p_or0_lo - p_or0_hi;
    }
    Ok(total / BigRational::from_integer(BigUint::from(cases).into()))
}

/// Influence with the free coordinates fixed by sampling from `d` instead
/// of uniformly. `d` ranges over the coordinates of `[n] \ Q` in increasing
/// order.
pub fn influence_under(f: &ResilientFn, q: &[u32], d: &Distribution) -> Result<BigRational> {
    let rest: Vec<u32> = (0..f.n).filter(|c| !q.contains(c)).collect();
    if d.n() != rest.len() as u32 {
        return Err(Error::DimensionMismatch {
            context: "influence_under",
            expected: rest.len(),
            actual: d.n() as usize,
        });
    }
    if q.len() > 20 {
        return Err(Error::BudgetExceeded(
            "influence_under capped at |Q| <= 20".into(),
        ));
    }
    let mut num = BigUint::zero();
    for (assign, w) in d.iter() {
        if q_cube_undetermined(f, q, &rest, assign) {
            num += w;
        }
    }
    Ok(BigRational::new(num.into(), d.total().clone().into()))
}

/// Exact bias term Pr[f = 1] for the structured families.
pub fn bias_one_prob(f: &ResilientFn) -> Result<BigRational> {
    match &f.family {
        ResilientFamily::Majority => Ok(maj_one_prob(f.n)),
        ResilientFamily::TribesOfMaj { blocks, and_width } => {
            let probs: Vec<BigRational> =
                blocks.iter().map(|&(_, len)| maj_one_prob(len)).collect();
            let mut p_or0 = BigRational::one();
            for group in probs.chunks(*and_width as usize) {
                let mut p1 = BigRational::one();
                for p in group {
                    p1 *= p.clone();
                }
                p_or0 *= BigRational::one() - p1;
            }
            Ok(BigRational::one() - p_or0)
        }
        ResilientFamily::Table(t) => {
            if f.n > 20 {
                return Err(Error::BudgetExceeded("table bias capped at n <= 20".into()));
            }
            let ones = t.iter().filter(|&&b| b == 1).count() as u64;
            Ok(BigRational::new(
                BigUint::from(ones).into(),
                (BigUint::one() << f.n).into(),
            ))
        }
    }
}

/// Builds the Tribes-of-majorities stand-in behind the bit-fixing-source
/// extractor interface: disjoint width-3 majority blocks (the last blocks
/// absorb the remainder), grouped into ANDs whose width is chosen to
/// balance the OR output.
pub fn bfext_standin(n: u32, m: u32) -> Result<ResilientFn> {
    if m != 1 {
        return Err(Error::Infeasible(
            "bfext stand-in emits a single bit at desk scale".into(),
        ));
    }
    if n < 3 {
        return Err(Error::Infeasible("bfext stand-in needs n >= 3".into()));
    }
    let block_count = (n / 3).max(1);
    let mut blocks = Vec::with_capacity(block_count as usize);
    let base = n / block_count;
    let extra = n % block_count;
    let mut lo = 0u32;
    for i in 0..block_count {
        let len = base + if i < extra { 1 } else { 0 };
        blocks.push((lo, len));
        lo += len;
    }
    // Pick the AND width scoring best on exact bias gap plus the worst
    // single-block swing probability. Bias alone is not enough: a leftover
    // singleton group can balance the OR while handing one block dictator
    // control.
    let half = BigRational::new(BigUint::one().into(), BigUint::from(2u32).into());
    let probs: Vec<BigRational> = blocks.iter().map(|&(_, len)| maj_one_prob(len)).collect();
    let mut best: Option<((u8, BigRational, BigRational), u32)> = None;
    for w in 1..=block_count {
        let cand = ResilientFn {
            n,
            m: 1,
            family: ResilientFamily::TribesOfMaj {
                blocks: blocks.clone(),
                and_width: w,
            },
        };
        let gap = (bias_one_prob(&cand)? - half.clone()).abs();
        // Swing of block b: the other members of its group all fire and
        // every other group misses.
        let group_miss: Vec<BigRational> = probs
            .chunks(w as usize)
            .map(|group| {
                let mut p1 = BigRational::one();
                for p in group {
                    p1 *= p.clone();
                }
                BigRational::one() - p1
            })
            .collect();
        let mut worst_swing = BigRational::zero();
        for (b, _) in blocks.iter().enumerate() {
            let g = b / w as usize;
            let lo = g * w as usize;
            let hi = ((g + 1) * w as usize).min(blocks.len());
            let mut swing = BigRational::one();
            for (o, p) in probs.iter().enumerate().take(hi).skip(lo) {
                if o != b {
                    swing *= p.clone();
                }
            }
            for (go, miss) in group_miss.iter().enumerate() {
                if go != g {
                    swing *= miss.clone();
                }
            }
            if swing > worst_swing {
                worst_swing = swing;
            }
        }
        // Guard against dictator blocks, then prefer balance: widths whose
        // worst swing exceeds 1/2 only qualify if nothing else does.
        let guarded = worst_swing <= half;
        let score = (if guarded { 0u8 } else { 1 }, gap, worst_swing);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, w));
        }
    }
    let (_, and_width) = best.expect("at least one width");
    Ok(ResilientFn {
        n,
        m: 1,
        family: ResilientFamily::TribesOfMaj { blocks, and_width },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::kwise_generator;
    use num_traits::ToPrimitive;

    fn r(a: u64, b: u64) -> BigRational {
        BigRational::new(BigUint::from(a).into(), BigUint::from(b).into())
    }

    #[test]
    fn majority_basics() {
        assert_eq!(majority(&BitString::parse_binary("111").unwrap()), 1);
        assert_eq!(majority(&BitString::parse_binary("001").unwrap()), 0);
        assert_eq!(majority(&BitString::parse_binary("0").unwrap()), 0);
        assert_eq!(majority(&BitString::parse_binary("1").unwrap()), 1);
        // Odd n: exactly unbiased.
        for n in [3u32, 5, 7] {
            let f = ResilientFn::majority(n);
            assert_eq!(bias_one_prob(&f).unwrap(), r(1, 2));
        }
    }

    #[test]
    fn xor_outer_examples() {
        let f = ResilientFn::majority(3);
        let z = BitString::parse_binary("110").unwrap();
        assert_eq!(xor_outer(&f, &z, &z).unwrap().raw_u64(), 0);
        let z2 = BitString::parse_binary("001").unwrap();
        assert_eq!(xor_outer(&f, &z, &z2).unwrap().get(0), 1);
        assert!(xor_outer(&f, &z, &BitString::zero(4)).is_err());
    }

    #[test]
    fn influence_examples() {
        // Dictator on x0.
        let dict = ResilientFn::from_table(3, (0..8).map(|x| (x & 1) as u8).collect());
        assert_eq!(influence(&dict, &[0]).unwrap(), r(1, 1));
        assert!(influence(&dict, &[1]).unwrap().is_zero());

        // Parity: any nonempty Q has full influence.
        let parity = ResilientFn::from_table(
            4,
            (0..16).map(|x: u64| (x.count_ones() & 1) as u8).collect(),
        );
        assert_eq!(influence(&parity, &[2]).unwrap(), r(1, 1));
        assert_eq!(influence(&parity, &[0, 3]).unwrap(), r(1, 1));

        // Maj_3 with Q = {0}: undetermined iff the other two bits differ.
        let maj = ResilientFn::majority(3);
        assert_eq!(influence(&maj, &[0]).unwrap(), r(1, 2));
    }

    #[test]
    fn majority_influence_matches_table_scan() {
        for n in [5u32, 9] {
            for q in 1..=3u32 {
                let f = ResilientFn::majority(n);
                let tbl = ResilientFn::from_table(
                    n,
                    (0..1u64 << n)
                        .map(|x| majority(&BitString::from_u64(n, x)))
                        .collect(),
                );
                let qs: Vec<u32> = (0..q).collect();
                assert_eq!(
                    influence(&f, &qs).unwrap(),
                    influence(&tbl, &qs).unwrap(),
                    "analytic vs exhaustive mismatch at n={n}, q={q}"
                );
            }
        }
    }

    #[test]
    fn influence_monotone_in_q() {
        let f = bfext_standin(12, 1).unwrap();
        let i1 = influence(&f, &[0]).unwrap();
        let i2 = influence(&f, &[0, 4]).unwrap();
        let i3 = influence(&f, &[0, 4, 7]).unwrap();
        assert!(i1 <= i2 && i2 <= i3);
    }

    #[test]
    fn influence_under_examples() {
        let maj = ResilientFn::majority(5);
        // Point mass on a determining assignment: zero influence mass.
        let det = Distribution::point(4, 0b1111);
        assert!(influence_under(&maj, &[0], &det).unwrap().is_zero());
        // Uniform coincides with plain influence.
        let unif = Distribution::uniform(4);
        assert_eq!(
            influence_under(&maj, &[0], &unif).unwrap(),
            influence(&maj, &[0]).unwrap()
        );
        // Exact pairwise-independent family: matches the exhaustive value
        // computed over that family's own support.
        let d = kwise_generator(4, 2, 5).unwrap();
        let got = influence_under(&maj, &[0], &d).unwrap();
        assert!(got >= BigRational::zero() && got <= r(1, 1));
    }

    #[test]
    fn tribes_standin_shape_and_monotone() {
        let f = bfext_standin(12, 1).unwrap();
        // Monotone: flipping any 0 -> 1 never drops the output.
        for x in 0u64..(1 << 12) {
            let fx = f.eval_bit(&BitString::from_u64(12, x));
            for b in 0..12 {
                if (x >> b) & 1 == 0 {
                    let fy = f.eval_bit(&BitString::from_u64(12, x | (1 << b)));
                    assert!(fy >= fx, "not monotone at x={x}, bit {b}");
                }
            }
        }
        assert!(bfext_standin(12, 2).is_err());
    }

    #[test]
    fn tribes_influence_matches_exhaustive() {
        let f = bfext_standin(9, 1).unwrap();
        let tbl = ResilientFn::from_table(
            9,
            (0..1u64 << 9)
                .map(|x| f.eval_bit(&BitString::from_u64(9, x)))
                .collect(),
        );
        for qs in [vec![0u32], vec![0, 3], vec![2, 8], vec![0, 1, 2]] {
            assert_eq!(
                influence(&f, &qs).unwrap(),
                influence(&tbl, &qs).unwrap(),
                "tribes analytic influence mismatch at Q={qs:?}"
            );
        }
    }

    #[test]
    fn tribes_bias_matches_exhaustive() {
        let f = bfext_standin(10, 1).unwrap();
        let ones = (0..1u64 << 10)
            .filter(|&x| f.eval_bit(&BitString::from_u64(10, x)) == 1)
            .count() as u64;
        assert_eq!(bias_one_prob(&f).unwrap(), r(ones, 1 << 10));
    }

    #[test]
    fn bfext_standin_locks_at_64() {
        // Exact bias and q=2 influence of the n=64 stand-in, computed
        // through the block-independence structure and frozen.
        let f = bfext_standin(64, 1).unwrap();
        let bias = bias_one_prob(&f).unwrap();
        assert_eq!(bias, r(10541819, 16777216), "stand-in bias drifted");
        // Worst influence over all 2016 coordinate pairs, exact.
        let mut worst = BigRational::zero();
        for a in 0..64u32 {
            for b in a + 1..64 {
                let i = influence(&f, &[a, b]).unwrap();
                if i > worst {
                    worst = i;
                }
            }
        }
        assert_eq!(worst, r(1294139, 8388608), "I_2 worst drifted");
        assert!(worst <= r(1, 4));
    }

    #[test]
    fn majority_resilience_trend() {
        // I_q(Maj_n) * sqrt(n) / q stays bounded by a constant across the
        // desk range (the Maj resilience shape).
        let mut worst: f64 = 0.0;
        for n in [15u32, 31, 63] {
            for q in [1u32, 2, 4] {
                let i = majority_influence(n, q).to_f64().unwrap();
                worst = worst.max(i * (n as f64).sqrt() / q as f64);
            }
        }
        assert!(
            worst <= 1.0,
            "Maj influence trend constant {worst} too large"
        );
    }
}
