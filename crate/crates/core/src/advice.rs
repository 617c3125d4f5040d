//! The two advice generators: one for two independent sources and one for
//! affine sources, with exact distinctness measurement against tamper
//! families.

use crate::error::{Error, Result};
use crate::gf2::{AffineSubspace, BitString, Gf2Matrix};
use crate::oracle::{Measurement, TamperFunction};
use crate::primitives::{code_encode, AveragingSampler, ExtractorSpec, LinearCodeSpec};
use num_bigint::BigUint;
use num_rational::BigRational;
use rayon::prelude::*;

/// Parameters for the two-source advice generator. The output is
/// `x1 ∘ y1 ∘ w1 ∘ w2` of length `m1 + d + 2*dprime`.
#[derive(Clone, Debug)]
pub struct AdvGenParams {
    pub n: u32,
    /// Extractor output width (and sampler seed width).
    pub m1: u32,
    /// Width of the uniform auxiliary string y1.
    pub d: u32,
    /// Sample count D'.
    pub dprime: u32,
    pub code: LinearCodeSpec,
    pub ext: ExtractorSpec,
    pub samp: AveragingSampler,
    pub eps1: f64,
    pub eps2: f64,
}

impl AdvGenParams {
    pub fn output_len(&self) -> u32 {
        self.m1 + self.d + 2 * self.dprime
    }

    pub fn validate(&self) -> Result<()> {
        if self.ext.n != self.n || self.ext.d != self.d || self.ext.m != self.m1 {
            return Err(Error::Infeasible(
                "advice extractor dimensions do not chain".into(),
            ));
        }
        if self.d < self.m1 {
            return Err(Error::Infeasible(
                "advice generator needs d >= m1 to slice the sampler seed".into(),
            ));
        }
        if self.code.n != self.n {
            return Err(Error::Infeasible(
                "advice code message width mismatch".into(),
            ));
        }
        if self.samp.r_bits != self.m1
            || self.samp.n_items != self.code.n1
            || self.samp.t_samples != self.dprime
        {
            return Err(Error::Infeasible(
                "advice sampler dimensions do not chain".into(),
            ));
        }
        Ok(())
    }
}

fn restrict(word: &BitString, indices: &[u32]) -> BitString {
    let mut out = BitString::zero(indices.len() as u32);
    for (k, &i) in indices.iter().enumerate() {
        out.set(k as u32, word.get(i));
    }
    out
}

/// Two-source advice: `x1 = Ext(x, y1)`, `w1 = Enc(y)` restricted to
/// `Samp(x1)`, `w2 = Enc(x)` restricted to `Samp(Slice(y1, m1))`.
pub fn adv_gen(
    p: &AdvGenParams,
    x: &BitString,
    y: &BitString,
    y1: &BitString,
) -> Result<BitString> {
    if x.len() != p.n || y.len() != p.n {
        return Err(Error::DimensionMismatch {
            context: "adv_gen source inputs",
            expected: p.n as usize,
            actual: x.len().max(y.len()) as usize,
        });
    }
    if y1.len() != p.d {
        return Err(Error::DimensionMismatch {
            context: "adv_gen y1",
            expected: p.d as usize,
            actual: y1.len() as usize,
        });
    }
    let x1 = p.ext.eval(x, y1);
    let enc_y = code_encode(&p.code, y)?;
    let enc_x = code_encode(&p.code, x)?;
    let w1 = restrict(&enc_y, &p.samp.sample(&x1));
    let w2 = restrict(&enc_x, &p.samp.sample(&y1.prefix(p.m1)));
    Ok(x1.concat(y1).concat(&w1).concat(&w2))
}

/// Parameters for the affine advice generator. The output is
/// `y1 ∘ y2 ∘ w1 ∘ w2` of length `l1 + l2 + dsamp + n3`.
#[derive(Clone, Debug)]
pub struct AffineAdvGenParams {
    pub n: u32,
    pub l1: u32,
    pub l2: u32,
    /// Sample count D.
    pub dsamp: u32,
    pub n3: u32,
    pub code: LinearCodeSpec,
    /// Seedless affine extractors on the two slices of y.
    pub aext1: ExtractorSpec,
    pub aext2: ExtractorSpec,
    /// Linear strong seeded extractor applied to x with seed s2.
    pub lext: ExtractorSpec,
    pub samp: AveragingSampler,
}

impl AffineAdvGenParams {
    pub fn output_len(&self) -> u32 {
        self.l1 + self.l2 + self.dsamp + self.n3
    }

    pub fn validate(&self) -> Result<()> {
        if self.aext1.n != self.l1 || self.aext1.d != 0 {
            return Err(Error::Infeasible(
                "first affine extractor dimensions".into(),
            ));
        }
        if self.aext2.n != self.l2 || self.aext2.d != 0 {
            return Err(Error::Infeasible(
                "second affine extractor dimensions".into(),
            ));
        }
        if self.lext.n != self.n || self.lext.d != self.aext2.m || self.lext.m != self.n3 {
            return Err(Error::Infeasible(
                "inner linear extractor dimensions".into(),
            ));
        }
        if !self.lext.linear {
            return Err(Error::Infeasible("inner extractor must be linear".into()));
        }
        if self.code.n != self.n {
            return Err(Error::Infeasible("affine advice code width".into()));
        }
        if self.samp.r_bits != self.aext1.m
            || self.samp.n_items != self.code.n1
            || self.samp.t_samples != self.dsamp
        {
            return Err(Error::Infeasible("affine advice sampler dimensions".into()));
        }
        Ok(())
    }
}

/// Affine advice: split `y = y1 ∘ y2 (∘ y3 ignored)`, extract sampler and
/// extractor seeds from the slices, then `w1 = Enc(x)|Samp(s1)` and
/// `w2 = LExt(x, s2)`.
pub fn affine_adv_gen(p: &AffineAdvGenParams, x: &BitString, y: &BitString) -> Result<BitString> {
    if x.len() != p.n {
        return Err(Error::DimensionMismatch {
            context: "affine_adv_gen x",
            expected: p.n as usize,
            actual: x.len() as usize,
        });
    }
    if y.len() < p.l1 + p.l2 {
        return Err(Error::DimensionMismatch {
            context: "affine_adv_gen y",
            expected: (p.l1 + p.l2) as usize,
            actual: y.len() as usize,
        });
    }
    let y1 = y.prefix(p.l1);
    let y2 = y.substring(p.l1, p.l2);
    let empty = BitString::zero(0);
    let s1 = p.aext1.eval(&y1, &empty);
    let s2 = p.aext2.eval(&y2, &empty);
    let w1 = restrict(&code_encode(&p.code, x)?, &p.samp.sample(&s1));
    let w2 = p.lext.eval(x, &s2);
    Ok(y1.concat(&y2).concat(&w1).concat(&w2))
}

// ---------------------------------------------------------------------------
// Distinctness measurement

/// Exact `Pr[advGen(X,Y,Y1) != advGen(f(X), g(Y), Y1)]` with the auxiliary
/// string uniform and *kept* by the adversary (the hardest case: any
/// tampering of y1 changes the advice verbatim).
pub fn advgen_distinctness(
    p: &AdvGenParams,
    x_support: &[u64],
    y_support: &[u64],
    f: &TamperFunction,
    g: &TamperFunction,
) -> Result<Measurement> {
    p.validate()?;
    let total = (x_support.len() as u128) * (y_support.len() as u128) * (1u128 << p.d);
    if total > 1 << 26 {
        return Err(Error::BudgetExceeded(
            "advice distinctness enumeration too large".into(),
        ));
    }
    let equal: u64 = x_support
        .par_iter()
        .map(|&xr| {
            let x = BitString::from_u64(p.n, xr);
            let fx = f.apply(&x);
            let mut eq = 0u64;
            for &yr in y_support {
                let y = BitString::from_u64(p.n, yr);
                let gy = g.apply(&y);
                for y1r in 0..1u64 << p.d {
                    let y1 = BitString::from_u64(p.d, y1r);
                    let z = adv_gen(p, &x, &y, &y1).expect("validated dims");
                    let zp = adv_gen(p, &fx, &gy, &y1).expect("validated dims");
                    if z == zp {
                        eq += 1;
                    }
                }
            }
            eq
        })
        .sum();
    let distinct = BigRational::new(
        BigUint::from(total - equal as u128).into(),
        BigUint::from(total).into(),
    );
    Ok(Measurement::exhaustive("advgen_distinctness", &distinct))
}

/// Exact `Pr[AffineAdvGen(X, L(X)) != AffineAdvGen(A(X), L(A(X)))]` over an
/// affine source, for an affine tampering without fixed points.
pub fn affine_advgen_distinctness(
    p: &AffineAdvGenParams,
    x_src: &AffineSubspace,
    l_map: &Gf2Matrix,
    tamper: &TamperFunction,
) -> Result<Measurement> {
    p.validate()?;
    if l_map.rows() < (p.l1 + p.l2) as usize || l_map.cols() != p.n as usize {
        return Err(Error::Infeasible("advice linear map shape".into()));
    }
    let mut equal = 0u64;
    let mut total = 0u64;
    for x in x_src.enumerate()? {
        let y = l_map.mul_vec(&x);
        let xp = tamper.apply(&x);
        let yp = l_map.mul_vec(&xp);
        let z = affine_adv_gen(p, &x, &y)?;
        let zp = affine_adv_gen(p, &xp, &yp)?;
        total += 1;
        if z == zp {
            equal += 1;
        }
    }
    let distinct = BigRational::new(
        BigUint::from(total - equal).into(),
        BigUint::from(total).into(),
    );
    Ok(Measurement::exhaustive(
        "affine_advgen_distinctness",
        &distinct,
    ))
}
