//! A t-affine correlation breaker with advice, built from the classic
//! flip-flop alternating-extraction chain and certified directly against
//! the definitional contract on enumerable fixture families.

use crate::dist::rational_to_f64;
use crate::error::{Error, Result};
use crate::gf2::BitString;
use crate::oracle::{conditional_uniform_distance, Measurement, TamperFunction};
use crate::primitives::{seed_linear_extractor, ExtractorSpec};
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::HashMap;

/// One alternating-extraction round; both extractors carry state width w
/// on the seed side so the order can flip per advice bit.
#[derive(Clone, Debug)]
struct BreakerRound {
    from_x: ExtractorSpec, // n x w -> w
    from_y: ExtractorSpec, // d x w -> w
}

/// Correlation breaker specification. The whole evaluation is a pure
/// function of `(x, y, alpha)`; round extractors chain dimensionally by
/// construction.
#[derive(Clone, Debug)]
pub struct BreakerSpec {
    pub n: u32,
    pub d: u32,
    pub a: u32,
    pub m: u32,
    pub t: u32,
    pub claimed_entropy: u32,
    pub state_width: u32,
    pub declared_eps: f64,
    rounds: Vec<BreakerRound>,
    out_ext: ExtractorSpec, // d x w -> m
}

/// Builds the desk breaker: per-round seeded random full-rank linear maps,
/// one pair per advice bit, closed by a y-side output extraction.
#[allow(clippy::too_many_arguments)]
pub fn build_breaker(
    n: u32,
    d: u32,
    a: u32,
    m: u32,
    t: u32,
    claimed_entropy: u32,
    state_width: u32,
    seed: u64,
) -> Result<BreakerSpec> {
    let w = state_width;
    if w > d || m > d {
        return Err(Error::Infeasible(format!(
            "breaker state width {w} and output {m} must fit the seed width {d}"
        )));
    }
    let mut rounds = Vec::with_capacity(a as usize);
    for j in 0..a {
        let from_x = seed_linear_extractor(n, w, w, seed.wrapping_add(2 * j as u64 + 1))?;
        let from_y = seed_linear_extractor(d, w, w, seed.wrapping_add(2 * j as u64 + 2))?;
        rounds.push(BreakerRound { from_x, from_y });
    }
    let out_ext = seed_linear_extractor(d, w, m, seed.wrapping_add(0x0u64.wrapping_sub(1)))?;
    Ok(BreakerSpec {
        n,
        d,
        a,
        m,
        t,
        claimed_entropy,
        state_width: w,
        declared_eps: 1.0,
        rounds,
        out_ext,
    })
}

impl BreakerSpec {
    /// Flip-flop evaluation. For advice bit 0 the round extracts from x
    /// with the running state and refreshes the state from y; for advice
    /// bit 1 the order flips. The output is always a final y-side
    /// extraction of the state.
    pub fn eval(&self, x: &BitString, y: &BitString, alpha: &BitString) -> Result<BitString> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "breaker x input",
                expected: self.n as usize,
                actual: x.len() as usize,
            });
        }
        if y.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "breaker y input",
                expected: self.d as usize,
                actual: y.len() as usize,
            });
        }
        if alpha.len() != self.a {
            return Err(Error::DimensionMismatch {
                context: "breaker advice",
                expected: self.a as usize,
                actual: alpha.len() as usize,
            });
        }
        let mut state = y.prefix(self.state_width);
        for (j, round) in self.rounds.iter().enumerate() {
            state = if alpha.get(j as u32) == 0 {
                let pulled = round.from_x.eval(x, &state);
                round.from_y.eval(y, &pulled)
            } else {
                let pulled = round.from_y.eval(y, &state);
                round.from_x.eval(x, &pulled)
            };
        }
        Ok(self.out_ext.eval(y, &state))
    }

    /// The intermediate states after each round (for the prefix-agreement
    /// property).
    pub fn states(&self, x: &BitString, y: &BitString, alpha: &BitString) -> Vec<BitString> {
        let mut out = Vec::with_capacity(self.a as usize + 1);
        let mut state = y.prefix(self.state_width);
        out.push(state);
        for (j, round) in self.rounds.iter().enumerate() {
            state = if alpha.get(j as u32) == 0 {
                let pulled = round.from_x.eval(x, &state);
                round.from_y.eval(y, &pulled)
            } else {
                let pulled = round.from_y.eval(y, &state);
                round.from_x.eval(x, &pulled)
            };
            out.push(state);
        }
        out
    }
}

impl BreakerSpec {
    /// Serializes through the shared certified-object container: the
    /// dimensions followed by every round extractor and the output
    /// extractor, each in its own container frame.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(b"NMBK");
        for v in [self.n, self.d, self.a, self.m, self.t, self.claimed_entropy, self.state_width]
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.declared_eps.to_bits().to_le_bytes());
        let mut frames: Vec<Vec<u8>> = Vec::new();
        for round in &self.rounds {
            frames.push(round.from_x.to_bytes()?);
            frames.push(round.from_y.to_bytes()?);
        }
        frames.push(self.out_ext.to_bytes()?);
        out.extend_from_slice(&(frames.len() as u32).to_le_bytes());
        for f in frames {
            out.extend_from_slice(&(f.len() as u64).to_le_bytes());
            out.extend_from_slice(&f);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        use crate::error::Error;
        if bytes.len() < 4 + 7 * 4 + 8 + 4 || &bytes[..4] != b"NMBK" {
            return Err(Error::Parse("bad breaker container".into()));
        }
        let mut off = 4usize;
        let mut u32_at = |off: &mut usize| {
            let v = u32::from_le_bytes(bytes[*off..*off + 4].try_into().unwrap());
            *off += 4;
            v
        };
        let n = u32_at(&mut off);
        let d = u32_at(&mut off);
        let a = u32_at(&mut off);
        let m = u32_at(&mut off);
        let t = u32_at(&mut off);
        let claimed_entropy = u32_at(&mut off);
        let state_width = u32_at(&mut off);
        let declared_eps =
            f64::from_bits(u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        off += 8;
        let frame_count = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        off += 4;
        let mut frames = Vec::with_capacity(frame_count);
        for _ in 0..frame_count {
            if bytes.len() < off + 8 {
                return Err(Error::Parse("short breaker container".into()));
            }
            let len = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()) as usize;
            off += 8;
            if bytes.len() < off + len {
                return Err(Error::Parse("short breaker container".into()));
            }
            frames.push(ExtractorSpec::from_bytes(&bytes[off..off + len])?);
            off += len;
        }
        if off != bytes.len() {
            return Err(Error::Parse("trailing bytes in breaker container".into()));
        }
        if frames.len() != 2 * a as usize + 1 {
            return Err(Error::Parse("breaker container frame count mismatch".into()));
        }
        let out_ext = frames.pop().expect("nonempty");
        let mut rounds = Vec::with_capacity(a as usize);
        for pair in frames.chunks(2) {
            rounds.push(BreakerRound { from_x: pair[0].clone(), from_y: pair[1].clone() });
        }
        Ok(BreakerSpec {
            n,
            d,
            a,
            m,
            t,
            claimed_entropy,
            state_width,
            declared_eps,
            rounds,
            out_ext,
        })
    }
}

/// A generative fixture for the definitional contract: the source is
/// X = A + B with tampered copies produced by per-part deterministic
/// tampers, Y is the full uniform seed with its own tampers, and the
/// advice strings are fixed and pairwise distinct from the real one.
#[derive(Clone, Debug)]
pub struct BreakerFixture {
    pub name: String,
    /// Support of the independent part carrying the entropy claim.
    pub a_support: Vec<u64>,
    pub a_tampers: Vec<TamperFunction>,
    /// Support of the part independent of A (point mass for two-source
    /// style fixtures, a coset for affine style).
    pub b_support: Vec<u64>,
    pub b_tampers: Vec<TamperFunction>,
    pub y_tampers: Vec<TamperFunction>,
    pub advice: BitString,
    pub advice_tampered: Vec<BitString>,
}

impl BreakerFixture {
    fn validate(&self, spec: &BreakerSpec) -> Result<()> {
        let t = spec.t as usize;
        if self.a_tampers.len() != t
            || self.b_tampers.len() != t
            || self.y_tampers.len() != t
            || self.advice_tampered.len() != t
        {
            return Err(Error::Infeasible(format!(
                "fixture {} arity does not match t = {t}",
                self.name
            )));
        }
        if (self.a_support.len() as f64).log2() < spec.claimed_entropy as f64 {
            return Err(Error::Infeasible(format!(
                "fixture {}: A-part entropy below the claim",
                self.name
            )));
        }
        for (i, adv) in self.advice_tampered.iter().enumerate() {
            if adv == &self.advice {
                return Err(Error::Infeasible(format!(
                    "fixture {}: tampered advice {i} equals the real advice",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Exact strong contract distance for one fixture: the joint of the real
/// output with the full side information (Y, all tampered outputs, all
/// tampered seeds) against uniform-first-coordinate, enumerated over
/// (A, B, Y).
pub fn breaker_fixture_distance(spec: &BreakerSpec, fx: &BreakerFixture) -> Result<BigRational> {
    fx.validate(spec)?;
    let side_bits = spec.d + (spec.m + spec.d) * spec.t;
    if spec.m + side_bits > 40 {
        return Err(Error::BudgetExceeded(
            "breaker side information exceeds 40 bits".into(),
        ));
    }
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for &a_raw in &fx.a_support {
        let a = BitString::from_u64(spec.n, a_raw);
        let a_tampered: Vec<BitString> = fx.a_tampers.iter().map(|f| f.apply(&a)).collect();
        for &b_raw in &fx.b_support {
            let b = BitString::from_u64(spec.n, b_raw);
            let x = a.xor(&b);
            let x_tampered: Vec<BitString> = fx
                .b_tampers
                .iter()
                .zip(&a_tampered)
                .map(|(f, ai)| ai.xor(&f.apply(&b)))
                .collect();
            for y_raw in 0..1u64 << spec.d {
                let y = BitString::from_u64(spec.d, y_raw);
                let out = spec.eval(&x, &y, &fx.advice)?;
                // side = y, then per-copy (output, seed).
                let mut key = out.concat(&y);
                for ((xt, yt), adv) in x_tampered
                    .iter()
                    .zip(&fx.y_tampers)
                    .zip(&fx.advice_tampered)
                {
                    let yi = yt.apply(&y);
                    let oi = spec.eval(xt, &yi, adv)?;
                    key = key.concat(&oi).concat(&yi);
                }
                *counts.entry(key.raw_u64()).or_insert(0) += 1;
            }
        }
    }
    let total = (fx.a_support.len() as u128) * (fx.b_support.len() as u128) * (1u128 << spec.d);
    Ok(conditional_uniform_distance(&counts, spec.m, total))
}

/// Joint counts of the real and tampered outputs alone (no seed side
/// information), for tuple-composition checks.
pub fn breaker_fixture_output_joint(
    spec: &BreakerSpec,
    fx: &BreakerFixture,
) -> Result<(HashMap<u64, u64>, u128)> {
    fx.validate(spec)?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for &a_raw in &fx.a_support {
        let a = BitString::from_u64(spec.n, a_raw);
        let a_tampered: Vec<BitString> = fx.a_tampers.iter().map(|f| f.apply(&a)).collect();
        for &b_raw in &fx.b_support {
            let b = BitString::from_u64(spec.n, b_raw);
            let x = a.xor(&b);
            let x_tampered: Vec<BitString> = fx
                .b_tampers
                .iter()
                .zip(&a_tampered)
                .map(|(f, ai)| ai.xor(&f.apply(&b)))
                .collect();
            for y_raw in 0..1u64 << spec.d {
                let y = BitString::from_u64(spec.d, y_raw);
                let mut key = spec.eval(&x, &y, &fx.advice)?;
                for ((xt, yt), adv) in x_tampered
                    .iter()
                    .zip(&fx.y_tampers)
                    .zip(&fx.advice_tampered)
                {
                    key = key.concat(&spec.eval(xt, &yt.apply(&y), adv)?);
                }
                *counts.entry(key.raw_u64()).or_insert(0) += 1;
            }
        }
    }
    let total = (fx.a_support.len() as u128) * (fx.b_support.len() as u128) * (1u128 << spec.d);
    Ok((counts, total))
}

/// Max contract distance over the fixture family; the spec's declaration
/// is updated to the measurement.
pub fn certify_breaker(
    spec: &mut BreakerSpec,
    fixtures: &[BreakerFixture],
) -> Result<(Measurement, Vec<(String, BigRational)>)> {
    let mut per = Vec::new();
    let mut worst = BigRational::zero();
    for fx in fixtures {
        let d = breaker_fixture_distance(spec, fx)?;
        if d > worst {
            worst = d.clone();
        }
        per.push((fx.name.clone(), d));
    }
    spec.declared_eps = rational_to_f64(&worst);
    Ok((
        Measurement::exhaustive(
            format!("breaker_contract[n={},t={},a={}]", spec.n, spec.t, spec.a),
            &worst,
        ),
        per,
    ))
}

/// The desk fixture family: two-source style decompositions (B a point
/// mass) and affine style ones (B a nontrivial coset), against shift,
/// complement and seeded random tampers on each component.
pub fn desk_fixture_family(spec: &BreakerSpec, seed: u64) -> Result<Vec<BreakerFixture>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let d = spec.d;
    let k = spec.claimed_entropy;
    let t = spec.t as usize;
    let mut fixtures = Vec::new();
    if spec.a == 0 {
        return Err(Error::Infeasible(
            "breaker needs at least one advice bit".into(),
        ));
    }

    let advice_pair = |rng: &mut rand_chacha::ChaCha8Rng| {
        let real = BitString::from_u64(spec.a, rng.gen_range(0..1u64 << spec.a));
        let tampered: Vec<BitString> = (0..t)
            .map(|_| loop {
                let cand = BitString::from_u64(spec.a, rng.gen_range(0..1u64 << spec.a));
                if cand != real {
                    break cand;
                }
            })
            .collect();
        (real, tampered)
    };

    // Two-source style: A carries all the entropy, B = 0.
    for rep in 0..4 {
        let mut sup = std::collections::BTreeSet::new();
        while (sup.len() as u64) < (1u64 << k) {
            sup.insert(rng.gen_range(0..1u64 << n));
        }
        let (advice, advice_tampered) = advice_pair(&mut rng);
        let a_tampers: Vec<TamperFunction> = (0..t)
            .map(|i| match (rep + i) % 3 {
                0 => TamperFunction::complement(n),
                1 => TamperFunction::xor_const(n, rng.gen_range(1..1u64 << n)),
                _ => crate::oracle::random_fpf_affine_bijection(n, &mut rng),
            })
            .collect();
        let y_tampers: Vec<TamperFunction> = (0..t)
            .map(|i| match (rep + i) % 3 {
                0 => TamperFunction::xor_const(d, rng.gen_range(1..1u64 << d)),
                1 => TamperFunction::identity(d),
                _ => crate::oracle::random_fpf_affine_bijection(d, &mut rng),
            })
            .collect();
        fixtures.push(BreakerFixture {
            name: format!("two-source-{rep}"),
            a_support: sup.into_iter().collect(),
            a_tampers,
            b_support: vec![0],
            b_tampers: (0..t).map(|_| TamperFunction::identity(n)).collect(),
            y_tampers,
            advice,
            advice_tampered,
        });
    }

    // Affine style: A a random linear subspace of dimension k, B a coset
    // point set of a complementary direction, both affinely tampered.
    for rep in 0..4 {
        let (spaces, _) = crate::gf2::enumerate_affine_subspaces(n, k, Some(4096))?;
        let pick = rng.gen_range(0..spaces.len());
        let a_support: Vec<u64> = spaces[pick].enumerate()?.map(|p| p.raw_u64()).collect();
        let b_point = rng.gen_range(0..1u64 << n);
        let (advice, advice_tampered) = advice_pair(&mut rng);
        fixtures.push(BreakerFixture {
            name: format!("affine-{rep}"),
            a_support,
            a_tampers: (0..t)
                .map(|_| crate::oracle::random_fpf_affine_bijection(n, &mut rng))
                .collect(),
            b_support: vec![b_point, b_point ^ 1],
            b_tampers: (0..t)
                .map(|_| TamperFunction::xor_const(n, rng.gen_range(1..1u64 << n)))
                .collect(),
            y_tampers: (0..t)
                .map(|_| crate::oracle::random_fpf_affine_bijection(d, &mut rng))
                .collect(),
            advice,
            advice_tampered,
        });
    }
    Ok(fixtures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn desk_spec() -> BreakerSpec {
        build_breaker(10, 6, 2, 1, 1, 4, 2, 0xb0).unwrap()
    }

    #[test]
    fn breaker_deterministic_and_dims() {
        let spec = desk_spec();
        let x = BitString::from_u64(10, 0b10_1101_0011);
        let y = BitString::from_u64(6, 0b101_011);
        let alpha = BitString::from_u64(2, 0b10);
        let o1 = spec.eval(&x, &y, &alpha).unwrap();
        let o2 = spec.eval(&x, &y, &alpha).unwrap();
        assert_eq!(o1, o2);
        assert_eq!(o1.len(), 1);
        assert!(spec.eval(&x, &y, &BitString::zero(3)).is_err());
        assert!(spec.eval(&x, &BitString::zero(5), &alpha).is_err());
    }

    #[test]
    fn advice_bit_flips_round_order() {
        // Advice strings differing at bit 0 diverge from the first round
        // whenever the two round orders disagree on some input.
        let spec = desk_spec();
        let a0 = BitString::from_u64(2, 0b00);
        let a1 = BitString::from_u64(2, 0b01);
        let mut diverged = false;
        for x in 0..1u64 << 10 {
            let x = BitString::from_u64(10, x);
            let y = BitString::from_u64(6, (x.raw_u64() * 37) & 63);
            let s0 = spec.states(&x, &y, &a0);
            let s1 = spec.states(&x, &y, &a1);
            assert_eq!(s0[0], s1[0]);
            if s0[1] != s1[1] {
                diverged = true;
                break;
            }
        }
        assert!(diverged, "flip-flop order change never altered round 0");
    }

    #[test]
    fn advice_prefix_agreement() {
        // Shared advice prefixes keep the intermediate state identical
        // through the shared rounds.
        let spec = build_breaker(8, 6, 3, 1, 1, 3, 2, 7).unwrap();
        let x = BitString::from_u64(8, 0xa5);
        let y = BitString::from_u64(6, 0x2b);
        let a = BitString::from_u64(3, 0b011);
        let b = BitString::from_u64(3, 0b111); // shares bits 0..2
        let sa = spec.states(&x, &y, &a);
        let sb = spec.states(&x, &y, &b);
        assert_eq!(sa[0], sb[0]);
        assert_eq!(sa[1], sb[1]);
        assert_eq!(sa[2], sb[2]);
        assert_ne!(a.get(2), b.get(2));
    }

    #[test]
    fn fixture_rejects_equal_advice() {
        let spec = desk_spec();
        let fx = BreakerFixture {
            name: "bad".into(),
            a_support: (0..16).collect(),
            a_tampers: vec![TamperFunction::complement(10)],
            b_support: vec![0],
            b_tampers: vec![TamperFunction::identity(10)],
            y_tampers: vec![TamperFunction::identity(6)],
            advice: BitString::from_u64(2, 1),
            advice_tampered: vec![BitString::from_u64(2, 1)],
        };
        assert!(breaker_fixture_distance(&spec, &fx).is_err());
    }

    #[test]
    fn container_roundtrip_preserves_evaluation() {
        let spec = desk_spec();
        let bytes = spec.to_bytes().unwrap();
        let back = BreakerSpec::from_bytes(&bytes).unwrap();
        assert_eq!(bytes, back.to_bytes().unwrap());
        for x in [0u64, 0x2a5, 0x3ff] {
            for y in [0u64, 0x15, 0x3f] {
                for alpha in 0..4u64 {
                    let x = BitString::from_u64(10, x);
                    let y = BitString::from_u64(6, y);
                    let alpha = BitString::from_u64(2, alpha);
                    assert_eq!(
                        spec.eval(&x, &y, &alpha).unwrap(),
                        back.eval(&x, &y, &alpha).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn certify_desk_family() {
        let mut spec = desk_spec();
        let fixtures = desk_fixture_family(&spec, 0x5eed).unwrap();
        assert_eq!(fixtures.len(), 8);
        let (m, per) = certify_breaker(&mut spec, &fixtures).unwrap();
        assert_eq!(per.len(), 8);
        assert!(m.value <= 0.5 + 1e-12);
        assert!((spec.declared_eps - m.value).abs() < 1e-12);
        // Re-measurement reproduces the declaration exactly.
        let again = fixtures
            .iter()
            .map(|fx| breaker_fixture_distance(&spec, fx).unwrap())
            .max()
            .unwrap();
        assert!((again.to_f64().unwrap() - spec.declared_eps).abs() < 1e-15);
    }

    #[test]
    fn tuple_composition_on_fixtures() {
        // On each fixture, the joint of (real, tampered) outputs stays
        // within 2x the worse per-element conditional distance of uniform
        // (the tuple-composition inequality, t+1 = 2 elements).
        use crate::oracle::conditional_uniform_distance;
        let spec = desk_spec();
        let fixtures = desk_fixture_family(&spec, 0x5eed).unwrap();
        for fx in &fixtures {
            let (counts, total) = breaker_fixture_output_joint(&spec, fx).unwrap();
            // Element 0 conditioned on element 1 and vice versa.
            let a1 = conditional_uniform_distance(&counts, 1, total);
            let swapped: std::collections::HashMap<u64, u64> = counts
                .iter()
                .map(|(&k, &c)| ((k >> 1) | ((k & 1) << 1), c))
                .collect();
            let a2 = conditional_uniform_distance(&swapped, 1, total);
            let eps = if a1 >= a2 { a1 } else { a2 };
            // Joint distance from U_2.
            let joint =
                crate::dist::Distribution::from_counts(2, counts.iter().map(|(&k, &c)| (k, c)))
                    .unwrap();
            let d = joint.distance_to_uniform();
            let two = BigRational::from_integer(num_bigint::BigUint::from(2u32).into());
            assert!(d <= two * eps, "fixture {}: joint {} > 2 * eps", fx.name, d);
        }
    }

    #[test]
    fn t_zero_reduces_to_seeded_chain_error() {
        // With no tampering the contract distance is the strong error of
        // the composed chain given the seed.
        let mut spec = build_breaker(8, 6, 2, 1, 0, 4, 2, 0xd1).unwrap();
        let fx = BreakerFixture {
            name: "plain".into(),
            a_support: (0..16).map(|i| i * 13 % 256).collect(),
            a_tampers: vec![],
            b_support: vec![0],
            b_tampers: vec![],
            y_tampers: vec![],
            advice: BitString::from_u64(2, 0b01),
            advice_tampered: vec![],
        };
        let (m, _) = certify_breaker(&mut spec, std::slice::from_ref(&fx)).unwrap();
        assert!(m.value < 0.5);
    }
}
