//! Verification suites: numeric lemma checks, component certifications,
//! and the end-to-end pipeline measurements. Each suite returns plain
//! measurement records; budgets come from the configuration or from the
//! calling test.

use crate::advice::{advgen_distinctness, affine_advgen_distinctness};
use crate::corrbreak::{build_breaker, certify_breaker, desk_fixture_family};
use crate::dist::{
    certify_nobf, kwise_family, kwise_generator, rational_to_f64, twise_distance, Distribution,
};
use crate::error::{Error, Result};
use crate::gf2::{enumerate_affine_subspaces, BitString, Gf2Matrix};
use crate::oracle::{
    affine_scenario_suite, case_scenario_suite, certification_family, conditional_uniform_distance,
    gen_tamper_pair, marginal_uniform_distance, random_fpf_affine_bijection, Measurement,
    TamperKind,
};
use crate::pipeline::{certify_lsrext, resolve};
use crate::planner::{PlannerConfig, Profile};
use crate::primitives::{
    brute_optimal_extractor, extractor_as_sampler, hash_extractor, strong_distance_flat,
    strong_distance_flat_seeded, BruteSearch, CertMethod,
};
use crate::resilient::majority;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Calibrated once across the exact t-wise-independent family (q = 0) and
/// the planted bit-fixing fixtures (q = 1, 2), then locked; the
/// majority-xor bias checks must never exceed `C * (1/sqrt(t) + q/sqrt(n))`
/// afterwards.
pub const LOCKED_MAJ_XOR_C: f64 = 0.125;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub measurements: Vec<Measurement>,
    pub pass: bool,
}

impl SuiteReport {
    fn from_measurements(name: &str, measurements: Vec<Measurement>) -> Self {
        let pass = measurements.iter().all(|m| m.passed());
        SuiteReport {
            name: name.into(),
            measurements,
            pass,
        }
    }
}

// ---------------------------------------------------------------------------
// Numeric lemma checks

/// The xor-lemma inequality on random joint bit pairs: the conditional
/// distance never exceeds four times the larger of the marginal and xor
/// distances. Reports the worst violation margin (<= 0 passes).
pub fn lemma_xor_numeric(trials: u32, seed: u64) -> Measurement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let four = BigRational::from_integer(BigUint::from(4u32).into());
    let mut worst = BigRational::from_integer(BigUint::zero().into()) - BigRational::one();
    for _ in 0..trials {
        let weights: Vec<(u64, u64)> = (0..4u64).map(|o| (o, rng.gen_range(0..64))).collect();
        if weights.iter().all(|(_, w)| *w == 0) {
            continue;
        }
        let joint = Distribution::from_counts(2, weights).expect("nonempty");
        let w_marg = joint.marginal(&[0]);
        let xor = joint.pushforward(1, |o| (o ^ (o >> 1)) & 1);
        let a = w_marg.distance_to_uniform();
        let b = xor.distance_to_uniform();
        let eps = if a >= b { a } else { b };
        // Conditional distance from the joint counts.
        let counts: HashMap<u64, u64> = joint
            .iter()
            .map(|(o, w)| (o, w.to_u64().expect("small count")))
            .collect();
        let total: u128 = counts.values().map(|&c| c as u128).sum();
        let cond = conditional_uniform_distance(&counts, 1, total);
        let margin = cond - &four * eps;
        if margin > worst {
            worst = margin;
        }
    }
    Measurement {
        name: format!("xor_lemma_worst_margin[trials={trials}]"),
        value: rational_to_f64(&worst),
        exact: Some(format!("{}/{}", worst.numer(), worst.denom())),
        method: CertMethod::Sampled {
            count: trials as u64,
            seed,
        },
        budget: Some(1e-12),
        pass: Some(rational_to_f64(&worst) <= 1e-12),
    }
}

/// Exhaustive sampler tail check: a desk extractor-as-sampler instance on
/// one (n, 2k) flat source, twenty seeded target sets, zero tolerance for
/// tail violations beyond eps * D.
pub fn thm_sampler_tail(seed: u64) -> Result<Measurement> {
    let n = 8u32;
    let d = 3u32;
    let k = 2u32;
    let ext = brute_optimal_extractor(BruteSearch {
        n,
        d,
        m: 2,
        k,
        target_eps: 0.45,
        seed: seed ^ 0x7a11,
        max_iters: 60_000,
    })?;
    let eps = ext.declared_eps;
    let dcount = (1u64 << d) as f64;
    // One flat (n, 2k) source, seeded, avoiding the all-zero string.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = std::collections::BTreeSet::new();
    while (support.len() as u64) < (1u64 << (2 * k)) {
        support.insert(rng.gen_range(1..1u64 << n));
    }
    let mut violations = 0u64;
    let sets: Vec<u64> = (0..20).map(|_| rng.gen_range(1..15u64)).collect();
    for &x in &support {
        let samples = extractor_as_sampler(&ext, &BitString::from_u64(n, x));
        for &r_mask in &sets {
            let mu = (r_mask.count_ones() as f64) / 4.0;
            let hits = samples
                .iter()
                .filter(|s| (r_mask >> s.raw_u64()) & 1 == 1)
                .count() as f64;
            if (hits - mu * dcount).abs() > eps * dcount {
                violations += 1;
            }
        }
    }
    Ok(Measurement {
        name: format!("sampler_tail_violations[eps={eps:.4}]"),
        value: violations as f64,
        exact: Some(format!("{violations}/1")),
        method: CertMethod::Exhaustive,
        budget: Some(0.0),
        pass: Some(violations == 0),
    })
}

/// Exact affine-uniformity of the leftover-hash extractor: over every
/// dimension-4 linear subspace at n = 8, the fraction of seeds whose
/// output is exactly uniform (full-rank restriction) must reach 1 - 2eps.
/// Offsets only translate the output, so linear parts suffice.
pub fn lemma_affine_uniform() -> Result<Measurement> {
    let n = 8u32;
    let k = 4u32;
    let m = 2u32;
    let e = hash_extractor(n, n + m - 1, m)?.with_entropy_claim(k);
    let required = 1.0 - 2.0 * e.declared_eps;
    let (subspaces, truncated) = enumerate_affine_subspaces_linear_only(n, k)?;
    assert!(!truncated);
    let seeds: Vec<BitString> = (0..e.seed_count())
        .map(|s| BitString::from_u64(e.d, s))
        .collect();
    let mats: Vec<Gf2Matrix> = seeds
        .iter()
        .map(|s| e.matrix_for_seed(s).expect("linear"))
        .collect();
    let min_frac = subspaces
        .par_iter()
        .map(|basis| {
            let mut good = 0u64;
            for mat in &mats {
                let images: Vec<BitString> = basis.iter().map(|v| mat.mul_vec(v)).collect();
                if Gf2Matrix::from_rows(&images).rank() == m as usize {
                    good += 1;
                }
            }
            good as f64 / mats.len() as f64
        })
        .reduce(|| 1.0f64, f64::min);
    Ok(Measurement {
        name: format!("affine_uniform_min_fraction[required={required}]"),
        value: min_frac,
        exact: None,
        method: CertMethod::Exhaustive,
        budget: None,
        pass: Some(min_frac >= required),
    })
}

fn enumerate_affine_subspaces_linear_only(n: u32, k: u32) -> Result<(Vec<Vec<BitString>>, bool)> {
    // Reuse the canonical enumeration but keep only the bases (offset 0).
    let (spaces, truncated) = enumerate_affine_subspaces(n, k, None)?;
    Ok((
        spaces
            .into_iter()
            .filter(|s| s.offset().raw() == 0)
            .map(|s| s.basis().to_vec())
            .collect(),
        truncated,
    ))
}

/// Leftover-hash certification at n=8, k=4, m=2 over seeded flat sources
/// and sampled dimension-4 affine sources.
pub fn leftover_hash_certification(seed: u64) -> Result<Measurement> {
    let e = hash_extractor(8, 9, 2)?.with_entropy_claim(4);
    let family = certification_family(8, 4, 200, 500, seed)?;
    let worst = family
        .par_iter()
        .map(|src| strong_distance_flat(&e, &src.support()))
        .reduce(BigRational::zero, |a, b| if a >= b { a } else { b });
    let mut m = Measurement::exhaustive("leftover_hash_worst_strong_distance", &worst);
    m.budget = Some(e.declared_eps);
    m.pass = Some(worst.to_f64().unwrap_or(1.0) <= e.declared_eps + 1e-12);
    Ok(m)
}

/// Deficient-seed degradation: with lambda seed bits pinned, the measured
/// strong error stays within 2^lambda of the full-seed measurement.
pub fn deficient_seed_degradation(seed: u64) -> Result<Measurement> {
    let e = hash_extractor(6, 6, 1)?.with_entropy_claim(3);
    let family = certification_family(6, 3, 60, 0, seed)?;
    let mut worst_margin = -1.0f64;
    for lambda in 1..=2u32 {
        // Seed uniform on a subcube: the low lambda bits pinned to zero.
        let mask = (1u64 << lambda) - 1;
        let seeds: Vec<(u64, u64)> = (0..1u64 << e.d)
            .filter(|s| s & mask == 0)
            .map(|s| (s, 1))
            .collect();
        let seed_dist = Distribution::from_counts(e.d, seeds)?;
        for src in &family {
            let sup = src.support();
            let full = strong_distance_flat(&e, &sup);
            let deficient = strong_distance_flat_seeded(&e, &sup, &seed_dist);
            let bound = rational_to_f64(&full) * 2f64.powi(lambda as i32);
            let margin = rational_to_f64(&deficient) - bound;
            worst_margin = worst_margin.max(margin);
        }
    }
    Ok(Measurement {
        name: "deficient_seed_worst_margin".into(),
        value: worst_margin,
        exact: None,
        method: CertMethod::Exhaustive,
        budget: Some(1e-12),
        pass: Some(worst_margin <= 1e-12),
    })
}

/// Majority-xor bias under the exactly t-wise independent family at
/// n = 15, t = 4, q = 0, against the locked constant.
pub fn maj_xor_bias(seed: u64) -> Result<Measurement> {
    let n = 15u32;
    let t = 4u32;
    let fam = kwise_family(2 * n, t, seed)?;
    let mut ones = 0u64;
    let mut total = 0u64;
    let half = 1u64 << n;
    fam.for_each_outcome(|o| {
        let lo = BitString::from_u64(n, o & (half - 1));
        let hi = BitString::from_u64(n, o >> n);
        if majority(&lo) != majority(&hi) {
            ones += 1;
        }
        total += 1;
    });
    let bias = (ones as f64 / total as f64 - 0.5).abs();
    let budget = LOCKED_MAJ_XOR_C / (t as f64).sqrt();
    Ok(Measurement {
        name: format!("maj_xor_bias[n={n},t={t},q=0]"),
        value: bias,
        exact: Some(format!("{}/{}", ones, total)),
        method: CertMethod::Exhaustive,
        budget: Some(budget),
        pass: Some(bias <= budget),
    })
}

/// Majority-xor bias on planted non-oblivious bit-fixing fixtures: take
/// the exactly t-wise independent family on 2n bits, overwrite q
/// coordinates with adversarial functions of the rest, certify the NOBF
/// shape, and check the bias inequality with the locked constant.
pub fn maj_xor_nobf_fixtures(seed: u64) -> Result<Vec<Measurement>> {
    let n = 11u32;
    let t = 2u32;
    let base = kwise_generator(2 * n, t, seed)?;
    let mut out = Vec::new();
    for q in [1u32, 2] {
        // Bad coordinates at the front of each half; each fires against
        // the majority of its own half's remaining bits.
        let planted = base.pushforward(2 * n, move |o| {
            let mut v = o;
            for j in 0..q as u64 {
                let half = if j % 2 == 0 { 0u32 } else { n };
                let bad = half + (j / 2) as u32;
                let mut weight = 0u32;
                for c in half..half + n {
                    if c != bad {
                        weight += ((o >> c) & 1) as u32;
                    }
                }
                // Vote against the half's majority.
                let bit = (weight < n.div_ceil(2)) as u64;
                v = (v & !(1u64 << bad)) | (bit << bad);
            }
            v
        });
        let cert = certify_nobf(&planted, q, t, 1e-12)?
            .map_err(|_| Error::CertificationFailed(format!("planted q={q} fixture")))?;
        let gamma = rational_to_f64(&cert.max_tuple_distance);
        // Exact bias of Maj xor Maj under the planted distribution.
        let xor_bit = planted.pushforward(1, |o| {
            let lo = BitString::from_u64(n, o & ((1 << n) - 1));
            let hi = BitString::from_u64(n, (o >> n) & ((1 << n) - 1));
            (majority(&lo) ^ majority(&hi)) as u64
        });
        let bias = (rational_to_f64(&xor_bit.prob(1)) - 0.5).abs();
        let allowance = LOCKED_MAJ_XOR_C
            * ((t as f64).sqrt().recip() + q as f64 / (n as f64).sqrt())
            + (2.0 * n as f64).powi(t as i32) * gamma;
        out.push(Measurement {
            name: format!("maj_xor_nobf_bias[q={q},bad={:?}]", cert.bad_set),
            value: bias,
            exact: None,
            method: CertMethod::Exhaustive,
            budget: Some(allowance),
            pass: Some(bias <= allowance + 1e-12),
        });
    }
    Ok(out)
}

/// Tuple-composition inequality on random joint distributions: when every
/// element is within eps of uniform conditioned on the others, the joint
/// tuple is within t*eps of uniform.
pub fn lemma_tuple_composition(trials: u32, seed: u64) -> Measurement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = -BigRational::one();
    for _ in 0..trials {
        let t = 2 + (rng.gen::<u32>() % 2); // tuples of 2 or 3 bits
        let weights: Vec<(u64, u64)> = (0..1u64 << t).map(|o| (o, rng.gen_range(0..32))).collect();
        if weights.iter().all(|(_, w)| *w == 0) {
            continue;
        }
        let joint = Distribution::from_counts(t, weights).expect("nonempty");
        let counts: HashMap<u64, u64> = joint
            .iter()
            .map(|(o, w)| (o, w.to_u64().expect("small")))
            .collect();
        let total: u128 = counts.values().map(|&c| c as u128).sum();
        // Premise: every element of every subset, conditioned on the rest
        // of the subset, is eps-close to uniform.
        let mut eps = BigRational::zero();
        for subset in 1u64..(1u64 << t) {
            let members: Vec<u32> = (0..t).filter(|i| (subset >> i) & 1 == 1).collect();
            for &lead in &members {
                let mut remap: HashMap<u64, u64> = HashMap::new();
                for (&k, &c) in &counts {
                    let mut key = (k >> lead) & 1;
                    for (shift, &other) in (1..).zip(members.iter().filter(|&&m| m != lead)) {
                        key |= ((k >> other) & 1) << shift;
                    }
                    *remap.entry(key).or_insert(0) += c;
                }
                let d = conditional_uniform_distance(&remap, 1, total);
                if d > eps {
                    eps = d;
                }
            }
        }
        let bound = BigRational::from_integer(BigUint::from(t as u64).into()) * &eps;
        let joint_dist = joint.distance_to_uniform();
        let margin = joint_dist - bound;
        if margin > worst {
            worst = margin;
        }
    }
    Measurement {
        name: format!("tuple_composition_worst_margin[trials={trials}]"),
        value: rational_to_f64(&worst),
        exact: Some(format!("{}/{}", worst.numer(), worst.denom())),
        method: CertMethod::Sampled {
            count: trials as u64,
            seed,
        },
        budget: Some(1e-12),
        pass: Some(rational_to_f64(&worst) <= 1e-12),
    }
}

/// NOBF machinery checks: the uniform distribution certifies with an empty
/// bad set, a planted bad coordinate is identified, and the t-wise
/// generator is exactly independent for all n <= 7, t <= 3.
pub fn nobf_machinery(seed: u64) -> Result<Vec<Measurement>> {
    let mut out = Vec::new();
    let u8d = Distribution::uniform(8);
    let cert = certify_nobf(&u8d, 0, 2, 0.0)?
        .map_err(|_| Error::CertificationFailed("uniform failed nobf".into()))?;
    out.push(Measurement {
        name: "nobf_uniform_bad_set".into(),
        value: cert.bad_set.len() as f64,
        exact: Some(format!("{}/1", cert.bad_set.len())),
        method: CertMethod::Exhaustive,
        budget: Some(0.0),
        pass: Some(cert.bad_set.is_empty() && cert.max_tuple_distance.is_zero()),
    });

    // Plant: coordinate 5 = AND of the first five uniform bits.
    let planted = Distribution::uniform(5).pushforward(6, |o| o | (((o == 31) as u64) << 5));
    let cert = certify_nobf(&planted, 1, 2, 1e-9)?
        .map_err(|_| Error::CertificationFailed("planted fixture failed".into()))?;
    out.push(Measurement {
        name: "nobf_planted_bad_coordinate".into(),
        value: cert.bad_set.first().copied().unwrap_or(99) as f64,
        exact: Some(format!("{:?}", cert.bad_set).replace(' ', "")),
        method: CertMethod::Exhaustive,
        budget: None,
        pass: Some(cert.bad_set == vec![5]),
    });

    let mut worst = BigRational::zero();
    for n in 2..=7u32 {
        for t in 1..=3u32.min(n) {
            let d = kwise_generator(n, t, seed ^ ((n as u64) << 8 | t as u64))?;
            let dist = twise_distance(&d, t)?;
            if dist > worst {
                worst = dist;
            }
        }
    }
    out.push(Measurement {
        name: "kwise_exact_independence_worst".into(),
        value: rational_to_f64(&worst),
        exact: Some(format!("{}/{}", worst.numer(), worst.denom())),
        method: CertMethod::Exhaustive,
        budget: Some(0.0),
        pass: Some(worst.is_zero()),
    });
    Ok(out)
}

/// Desk correlation breaker contract (n=10, t=1, a=2) over the full desk
/// fixture family.
pub fn breaker_desk_contract(seed: u64) -> Result<Measurement> {
    let mut spec = build_breaker(10, 6, 2, 1, 1, 4, 2, seed)?;
    let fixtures = desk_fixture_family(&spec, seed ^ 0xf1f0)?;
    let (m, _) = certify_breaker(&mut spec, &fixtures)?;
    Ok(m)
}

/// Two-source advice distinctness over seeded fixed-point-free tamper
/// pairs, measured exactly per pair; reports the worst pair.
pub fn advgen_distinctness_suite(pairs: u32, seed: u64) -> Result<Measurement> {
    let cfg = crate::planner::plan(&crate::planner::PlanRequest {
        profile: Profile::Polylog2Src,
        n: 12,
        k: 6,
        eps: 0.25,
        seed,
    })?;
    let bound = resolve(&cfg)?;
    let p = bound.advgen_params().expect("two-source profile");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup_x = std::collections::BTreeSet::new();
    while sup_x.len() < 32 {
        sup_x.insert(rng.gen_range(0..1u64 << 12));
    }
    let mut sup_y = std::collections::BTreeSet::new();
    while sup_y.len() < 32 {
        sup_y.insert(rng.gen_range(0..1u64 << 12));
    }
    let xs: Vec<u64> = sup_x.into_iter().collect();
    let ys: Vec<u64> = sup_y.into_iter().collect();
    let tampers: Vec<(crate::oracle::TamperFunction, crate::oracle::TamperFunction)> = (0..pairs)
        .map(|i| {
            gen_tamper_pair(
                12,
                if i % 2 == 0 {
                    TamperKind::Table
                } else {
                    TamperKind::Affine
                },
                seed ^ (0x70_000 + i as u64),
            )
        })
        .collect();
    let worst = tampers
        .par_iter()
        .map(|(f, g)| {
            let m = advgen_distinctness(p, &xs, &ys, f, g).expect("within budget");
            BigRational::one() - parse_exact(&m)
        })
        .reduce(BigRational::zero, |a, b| if a >= b { a } else { b });
    // Report the worst distinctness (1 - worst failure probability).
    let distinct = BigRational::one() - worst;
    let mut m = Measurement::exhaustive(
        format!("advgen_distinctness_worst[pairs={pairs}]"),
        &distinct,
    );
    m.budget = Some(1.0 - cfg.eps);
    m.pass = Some(rational_to_f64(&distinct) >= 1.0 - cfg.eps - 1e-12);
    Ok(m)
}

fn parse_exact(m: &Measurement) -> BigRational {
    let s = m.exact.as_deref().expect("exact measurement");
    let (num, den) = s.split_once('/').expect("fraction");
    BigRational::new(
        num.parse::<BigUint>().expect("numerator").into(),
        den.parse::<BigUint>().expect("denominator").into(),
    )
}

/// Affine advice distinctness over seeded affine fixed-point-free
/// tamperings of enumerated affine sources.
pub fn affine_advgen_distinctness_suite(count: u32, seed: u64) -> Result<Measurement> {
    let cfg = crate::planner::plan(&crate::planner::PlanRequest {
        profile: Profile::PolylogAffine,
        n: 12,
        k: 6,
        eps: 0.25,
        seed,
    })?;
    let bound = resolve(&cfg)?;
    let p = bound.aag_params().expect("affine profile");
    let d_bits = p.l1 + p.l2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xaff);
    let (spaces, _) = enumerate_affine_subspaces(12, 6, Some(4000))?;
    // L: a full-rank map of the source onto d_bits coordinates, rebuilt per
    // source so that L(X) is uniform.
    let mut worst_fail = BigRational::zero();
    let mut tested = 0u32;
    let mut attempts = 0u32;
    while tested < count && attempts < count * 20 {
        attempts += 1;
        let src = &spaces[rng.gen_range(0..spaces.len())];
        let mut l = Gf2Matrix::zero(d_bits as usize, 12);
        for i in 0..d_bits as usize {
            l.set_row(i, &BitString::from_u64(12, rng.gen::<u64>() & 0xfff));
        }
        let images: Vec<BitString> = src.basis().iter().map(|b| l.mul_vec(b)).collect();
        if Gf2Matrix::from_rows(&images).rank() != d_bits as usize {
            continue;
        }
        let tamper = random_fpf_affine_bijection(12, &mut rng);
        let m = affine_advgen_distinctness(p, src, &l, &tamper)?;
        let fail = BigRational::one() - parse_exact(&m);
        if fail > worst_fail {
            worst_fail = fail;
        }
        tested += 1;
    }
    if tested < count {
        return Err(Error::SearchExhausted(format!(
            "only {tested} of {count} affine distinctness instances found"
        )));
    }
    let distinct = BigRational::one() - worst_fail;
    let mut m = Measurement::exhaustive(
        format!("affine_advgen_distinctness_worst[count={count}]"),
        &distinct,
    );
    m.budget = Some(1.0 - cfg.eps);
    m.pass = Some(rational_to_f64(&distinct) >= 1.0 - cfg.eps - 1e-12);
    Ok(m)
}

// ---------------------------------------------------------------------------
// Pipeline measurements

/// Per-scenario nm distance plus the cross-checks: the marginal distance
/// never exceeds the conditional one, and the xor-lemma bridge holds on
/// the pipeline's own outputs.
pub fn pipeline_suite(cfg: &PlannerConfig) -> Result<SuiteReport> {
    let bound = resolve(cfg)?;
    let mut measurements = bound.component_reports.clone();
    if cfg.profile.is_affine() {
        let scenarios = affine_scenario_suite(cfg.n, cfg.k, cfg.seed ^ 0x5a5a)?;
        for (i, sc) in scenarios.iter().enumerate() {
            let mut counts: HashMap<u64, u64> = HashMap::new();
            for x in sc.x.enumerate()? {
                let (v, _) = bound.eval_affine(&x)?;
                let (vp, _) = bound.eval_affine(&sc.tamper.apply(&x))?;
                *counts.entry(v.concat(&vp).raw_u64()).or_insert(0) += 1;
            }
            let total = 1u128 << sc.x.dim();
            measurements.extend(scenario_measurements(
                &format!("affine[{i}][{:?}]", sc.regime),
                &counts,
                cfg.m_out,
                total,
                cfg.eps_run,
            ));
        }
        if cfg.profile == Profile::ConstAffine {
            let (sources, _) = enumerate_affine_subspaces(cfg.n, cfg.k, Some(200))?;
            measurements.push(certify_lsrext(&bound, &sources, cfg.lsr_bad_budget())?);
        }
    } else {
        let scenarios = case_scenario_suite(cfg.n, cfg.cert_kx, cfg.cert_ky, cfg.seed ^ 0x5a5a)?;
        let per: Vec<Vec<Measurement>> = scenarios
            .par_iter()
            .enumerate()
            .map(|(i, sc)| {
                let xs = sc.x.support();
                let ys = sc.y.support();
                let mut counts: HashMap<u64, u64> = HashMap::new();
                for &xr in &xs {
                    let x = BitString::from_u64(cfg.n, xr);
                    let fx = sc.f.apply(&x);
                    for &yr in &ys {
                        let y = BitString::from_u64(cfg.n, yr);
                        let (v, _) = bound.eval_two(&x, &y).expect("dims checked");
                        let (vp, _) = bound.eval_two(&fx, &sc.g.apply(&y)).expect("dims checked");
                        *counts.entry(v.concat(&vp).raw_u64()).or_insert(0) += 1;
                    }
                }
                let total = (xs.len() as u128) * (ys.len() as u128);
                scenario_measurements(
                    &format!("two[{i}][{:?}]", sc.regime),
                    &counts,
                    cfg.m_out,
                    total,
                    cfg.eps_run,
                )
            })
            .collect();
        measurements.extend(per.into_iter().flatten());
    }
    Ok(SuiteReport::from_measurements(
        &format!("pipelines[{}]", cfg.profile),
        measurements,
    ))
}

fn scenario_measurements(
    label: &str,
    counts: &HashMap<u64, u64>,
    m_out: u32,
    total: u128,
    eps_run: f64,
) -> Vec<Measurement> {
    let cond = conditional_uniform_distance(counts, m_out, total);
    let marg = marginal_uniform_distance(counts, m_out, total);
    let xor = xor_uniform_distance(counts, m_out, total);
    let mut out = Vec::new();
    let mut m = Measurement::exhaustive(format!("{label}.nm_distance"), &cond);
    m.budget = Some(eps_run);
    m.pass = Some(rational_to_f64(&cond) <= eps_run + 1e-12);
    out.push(m);
    // Conditioning can only reveal more than the marginal.
    let mono_ok = marg <= cond;
    out.push(Measurement {
        name: format!("{label}.marginal_le_conditional"),
        value: rational_to_f64(&(marg.clone() - cond.clone())),
        exact: None,
        method: CertMethod::Exhaustive,
        budget: Some(0.0),
        pass: Some(mono_ok),
    });
    // Xor-lemma bridge on the pipeline's own outputs (1-bit outputs).
    if m_out == 1 {
        let eps = if marg >= xor {
            marg.clone()
        } else {
            xor.clone()
        };
        let four = BigRational::from_integer(BigUint::from(4u32).into());
        let bridge_ok = cond <= &four * &eps;
        out.push(Measurement {
            name: format!("{label}.xor_bridge"),
            value: rational_to_f64(&(cond - four * eps)),
            exact: None,
            method: CertMethod::Exhaustive,
            budget: Some(0.0),
            pass: Some(bridge_ok),
        });
    }
    out
}

/// Distance of `V xor V'` from uniform, out of joint `(v, v')` counts.
pub fn xor_uniform_distance(counts: &HashMap<u64, u64>, m_out: u32, total: u128) -> BigRational {
    let mask = (1u64 << m_out) - 1;
    let mut xor_counts: HashMap<u64, u128> = HashMap::new();
    for (&k, &c) in counts {
        *xor_counts.entry((k ^ (k >> m_out)) & mask).or_insert(0) += c as u128;
    }
    let total_b = BigUint::from(total);
    let mut acc = BigUint::zero();
    for v in 0..(1u64 << m_out) {
        let c = BigUint::from(xor_counts.get(&v).copied().unwrap_or(0)) << m_out;
        acc += if c >= total_b {
            &c - &total_b
        } else {
            &total_b - &c
        };
    }
    BigRational::new(
        acc.into(),
        (BigUint::from(2u32) * total_b * (BigUint::one() << m_out)).into(),
    )
}

// ---------------------------------------------------------------------------
// Suite drivers

/// Lemma-level numeric checks.
pub fn suite_lemmas(seed: u64) -> Result<SuiteReport> {
    let ms = vec![
        lemma_xor_numeric(10_000, seed),
        thm_sampler_tail(seed ^ 0x2_11)?,
        lemma_affine_uniform()?,
        deficient_seed_degradation(seed ^ 0x2_24)?,
        lemma_tuple_composition(2_000, seed ^ 0x2_42),
    ];
    Ok(SuiteReport::from_measurements("lemmas", ms))
}

/// Component certifications at the configuration's scale plus the global
/// desk-instance checks.
pub fn suite_components(cfg: &PlannerConfig) -> Result<SuiteReport> {
    let bound = resolve(cfg)?;
    let mut ms = bound.component_reports.clone();
    ms.push(leftover_hash_certification(cfg.seed ^ 0x1f)?);
    ms.push(maj_xor_bias(cfg.seed ^ 0x32)?);
    ms.extend(maj_xor_nobf_fixtures(0x3273)?);
    ms.extend(nobf_machinery(cfg.seed ^ 0x90)?);
    ms.push(breaker_desk_contract(0xb0)?);
    // Certify the bound row extractors against the configured entropy.
    for (name, e) in bound.named_extractors() {
        let family = certification_family(cfg.n, cfg.cert_kx, 40, 0, cfg.seed ^ 0xcf)?;
        let worst = family
            .par_iter()
            .map(|src| strong_distance_flat(e, &src.support()))
            .reduce(BigRational::zero, |a, b| if a >= b { a } else { b });
        ms.push(Measurement::exhaustive(
            format!("component[{name}].strong_distance[k={}]", cfg.cert_kx),
            &worst,
        ));
    }
    Ok(SuiteReport::from_measurements("components", ms))
}

/// All suites for `verify --suite all`.
pub fn suite_all(cfg: &PlannerConfig) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        suite_lemmas(cfg.seed)?,
        suite_components(cfg)?,
        pipeline_suite(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan, PlanRequest};

    #[test]
    fn xor_lemma_holds() {
        let m = lemma_xor_numeric(2_000, 9);
        assert!(m.passed(), "xor lemma margin {}", m.value);
    }

    #[test]
    fn nobf_suite_passes() {
        for m in nobf_machinery(5).unwrap() {
            assert!(m.passed(), "{} failed: {}", m.name, m.value);
        }
    }

    #[test]
    fn deficient_seed_holds() {
        let m = deficient_seed_degradation(3).unwrap();
        assert!(m.passed(), "margin {}", m.value);
    }

    #[test]
    fn pipeline_suite_polylogaffine() {
        let cfg = plan(&PlanRequest {
            profile: Profile::PolylogAffine,
            n: 10,
            k: 5,
            eps: 0.25,
            seed: 7,
        })
        .unwrap();
        let r = pipeline_suite(&cfg).unwrap();
        assert!(
            r.pass,
            "{:#?}",
            r.measurements
                .iter()
                .filter(|m| !m.passed())
                .collect::<Vec<_>>()
        );
    }
}
