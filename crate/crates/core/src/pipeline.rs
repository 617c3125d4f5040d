//! The four top-level compositions, bound to certified components and
//! instrumented with replayable traces.

use crate::advice::{adv_gen, affine_adv_gen, AdvGenParams, AffineAdvGenParams};
use crate::corrbreak::{build_breaker, certify_breaker, desk_fixture_family, BreakerSpec};
use crate::error::{Error, Result};
use crate::gf2::BitString;
use crate::oracle::Measurement;
use crate::planner::{index_suffix, PlannerConfig, Profile};
use crate::primitives::{
    brute_affine_extractor, build_disperser, rep3_block_parity_code, seed_linear_extractor, srsamp,
    AveragingSampler, DisperserTable, ExtractorSpec,
};
use crate::resilient::{bfext_standin, ResilientFn};

/// Per-stage intermediate values of a single pipeline evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineTrace {
    pub stages: Vec<(String, BitString)>,
}

impl PipelineTrace {
    fn new() -> Self {
        PipelineTrace { stages: Vec::new() }
    }

    fn push(&mut self, name: String, value: BitString) {
        self.stages.push((name, value));
    }

    /// Line-oriented text dump for diffing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, value) in &self.stages {
            out.push_str(&format!("{name} {value}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut stages = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, bits) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad trace line: {line}")))?;
            stages.push((name.to_string(), BitString::parse_binary(bits)?));
        }
        Ok(PipelineTrace { stages })
    }
}

/// A planner configuration with all components built and certified.
pub struct BoundPipeline {
    pub cfg: PlannerConfig,
    /// x-side sampler extractor (Ext' in the polylog profile, the
    /// somewhere-random sampler extractor in the constant profile).
    ext_x: ExtractorSpec,
    /// y-side row extractor (two-source profiles).
    ext_y: Option<ExtractorSpec>,
    /// Row extractor applied directly to x (affine profiles).
    lext_rows: Option<ExtractorSpec>,
    /// Disperser for the grid profiles.
    disperser: Option<DisperserTable>,
    advgen: Option<AdvGenParams>,
    aag: Option<AffineAdvGenParams>,
    pub breaker: BreakerSpec,
    outer: ResilientFn,
    /// Final linear extraction from y (polylog two-source profile).
    lext_final: Option<ExtractorSpec>,
    /// Component certification records gathered during binding.
    pub component_reports: Vec<Measurement>,
}

/// Builds and certifies every component named by the configuration.
/// Deterministic in `cfg.seed`.
pub fn resolve(cfg: &PlannerConfig) -> Result<BoundPipeline> {
    let n = cfg.n;
    let seed = cfg.seed;
    let mut reports = Vec::new();

    let code = rep3_block_parity_code(n)?;

    // Two-source advice generator.
    let advgen = if !cfg.profile.is_affine() {
        let ext = seed_linear_extractor(n, cfg.adv_d, cfg.adv_m1, seed ^ 0xadc0)?;
        let samp = AveragingSampler::new(cfg.adv_m1, code.n1, cfg.adv_dprime)?;
        let p = AdvGenParams {
            n,
            m1: cfg.adv_m1,
            d: cfg.adv_d,
            dprime: cfg.adv_dprime,
            code: code.clone(),
            ext,
            samp,
            eps1: cfg.eps / 2.0,
            eps2: cfg.eps * cfg.eps / 4.0,
        };
        p.validate()?;
        Some(p)
    } else {
        None
    };

    // Affine advice generator.
    let aag = if cfg.profile.is_affine() {
        let aext1 = brute_affine_extractor(
            cfg.aag_l1,
            cfg.aag_k1,
            cfg.aag_m1,
            0.5,
            seed ^ 0xae10,
            40_000,
        )?;
        let aext2 = brute_affine_extractor(
            cfg.aag_l2,
            cfg.aag_k2,
            cfg.aag_m2,
            0.5,
            seed ^ 0xae20,
            40_000,
        )?;
        reports.push(Measurement {
            name: "affine_ext1_worst_case".into(),
            value: aext1.declared_eps,
            exact: None,
            method: crate::primitives::CertMethod::Exhaustive,
            budget: Some(0.5),
            pass: Some(aext1.declared_eps <= 0.5),
        });
        let lext = seed_linear_extractor(n, cfg.aag_m2, cfg.aag_n3, seed ^ 0x1e70)?;
        let samp = AveragingSampler::new(cfg.aag_m1, code.n1, cfg.aag_dsamp)?;
        let p = AffineAdvGenParams {
            n,
            l1: cfg.aag_l1,
            l2: cfg.aag_l2,
            dsamp: cfg.aag_dsamp,
            n3: cfg.aag_n3,
            code: code.clone(),
            aext1,
            aext2,
            lext,
            samp,
        };
        p.validate()?;
        Some(p)
    } else {
        None
    };

    // Row machinery.
    let (ext_x, ext_y, lext_rows, disperser) = match cfg.profile {
        Profile::Polylog2Src => {
            let ext_x = seed_linear_extractor(n, cfg.d_rows, cfg.xs_m, seed ^ 0xe001)?;
            let ext_y = seed_linear_extractor(n, cfg.xs_m, cfg.brk_seed, seed ^ 0xe002)?;
            (ext_x, Some(ext_y), None, None)
        }
        Profile::PolylogAffine => {
            let rows = seed_linear_extractor(n, cfg.d_rows, cfg.brk_seed, seed ^ 0xe003)?;
            let ext_x = rows.clone();
            (ext_x, None, Some(rows), None)
        }
        Profile::Const2Src => {
            // SRSamp = Ext(x, Gamma(s, z)).
            let m1 = cfg.xs_m; // disperser output width = srs ext seed width
            let g = build_disperser(
                cfg.d_rows,
                b_log(cfg.b_cols),
                m1,
                cfg.dsp_k,
                cfg.dsp_eps,
                seed ^ 0xd15,
                200,
            )?;
            reports.push(Measurement {
                name: "disperser_min_coverage".into(),
                value: g.cert.min_coverage as f64 / g.right_size() as f64,
                exact: None,
                method: g.cert.method,
                budget: None,
                pass: Some(g.cert.min_coverage >= g.required_coverage()),
            });
            let srs_ext = seed_linear_extractor(n, m1, cfg.xs_m, seed ^ 0xe004)?;
            let ext_y = seed_linear_extractor(n, cfg.xs_m, cfg.brk_seed, seed ^ 0xe005)?;
            (srs_ext, Some(ext_y), None, Some(g))
        }
        Profile::ConstAffine => {
            let m1 = cfg.xs_m;
            let g = build_disperser(
                cfg.d_rows,
                b_log(cfg.b_cols),
                m1,
                cfg.dsp_k,
                cfg.dsp_eps,
                seed ^ 0xd16,
                200,
            )?;
            let rows = seed_linear_extractor(n, m1, cfg.brk_seed, seed ^ 0xe006)?;
            (rows.clone(), None, Some(rows), Some(g))
        }
    };

    // Correlation breaker, certified against the desk fixture family.
    let mut breaker = build_breaker(
        n,
        cfg.brk_seed,
        cfg.advice_len(),
        1,
        1,
        cfg.k.min(4),
        cfg.brk_state,
        seed ^ 0xcb00,
    )?;
    let fixtures = desk_fixture_family(&breaker, seed ^ 0xf1f0)?;
    let (m, _) = certify_breaker(&mut breaker, &fixtures)?;
    reports.push(m);

    // Outer function and the final extraction. The two-source polylog
    // profile widens the outer seed to two bits: the tribes stand-in plus
    // an xor of two disjoint odd majorities. A 1-bit seed leaves the final
    // linear extraction structurally exposed to pure-shift tampering of y
    // (whenever w = w' the tampered output pins the real one), and the
    // measured distance then sits at 1/4 plus the square of the outer
    // bias, over the run budget.
    let outer = bfext_standin(cfg.row_count() as u32, 1)?;
    let lext_final = if cfg.profile == Profile::Polylog2Src {
        Some(seed_linear_extractor(
            n,
            outer_width(cfg),
            cfg.m_out,
            seed ^ 0xf17a1,
        )?)
    } else {
        None
    };

    Ok(BoundPipeline {
        cfg: cfg.clone(),
        ext_x,
        ext_y,
        lext_rows,
        disperser,
        advgen,
        aag,
        breaker,
        outer,
        lext_final,
        component_reports: reports,
    })
}

fn outer_width(cfg: &PlannerConfig) -> u32 {
    if cfg.profile == Profile::Polylog2Src {
        2
    } else {
        1
    }
}

fn b_log(b: u32) -> u32 {
    if b > 1 {
        u32::BITS - (b - 1).leading_zeros()
    } else {
        0
    }
}

impl BoundPipeline {
    pub fn advgen_params(&self) -> Option<&AdvGenParams> {
        self.advgen.as_ref()
    }

    pub fn aag_params(&self) -> Option<&AffineAdvGenParams> {
        self.aag.as_ref()
    }

    /// The bound seeded extractors with stable labels, for certification.
    pub fn named_extractors(&self) -> Vec<(&'static str, &ExtractorSpec)> {
        let mut out: Vec<(&'static str, &ExtractorSpec)> = vec![("ext_x", &self.ext_x)];
        if let Some(e) = &self.ext_y {
            out.push(("ext_y", e));
        }
        if let Some(e) = &self.lext_rows {
            out.push(("lext_rows", e));
        }
        if let Some(e) = &self.lext_final {
            out.push(("lext_final", e));
        }
        out
    }

    fn check_input(&self, name: &'static str, v: &BitString) -> Result<()> {
        if v.len() != self.cfg.n {
            return Err(Error::Stage {
                stage: name,
                message: format!("input width {} != n = {}", v.len(), self.cfg.n),
            });
        }
        Ok(())
    }

    /// Algorithm steps for the polylog two-source profile: rows from the
    /// sampled seeds, advice per row, breaker bits, outer function, final
    /// linear extraction from y.
    pub fn two_nm_ext_polylog(
        &self,
        x: &BitString,
        y: &BitString,
    ) -> Result<(BitString, PipelineTrace)> {
        if self.cfg.profile != Profile::Polylog2Src {
            return Err(Error::Infeasible(
                "config profile is not polylog2src".into(),
            ));
        }
        self.check_input("two_nm_ext_polylog input x", x)?;
        self.check_input("two_nm_ext_polylog input y", y)?;
        let advgen = self.advgen.as_ref().expect("bound advgen");
        let ext_y = self.ext_y.as_ref().expect("bound ext_y");
        let mut trace = PipelineTrace::new();
        let d = self.cfg.row_count();
        let mut z_bits = BitString::zero(d as u32);
        for i in 0..d {
            let si = self.ext_x.eval(x, &BitString::from_u64(self.cfg.d_rows, i));
            let ri = ext_y.eval(y, &si);
            let alpha = adv_gen(advgen, x, y, &ri.prefix(self.cfg.adv_d))?
                .concat(&index_suffix(i, self.cfg.index_bits()));
            let zi = self.breaker.eval(x, &ri, &alpha)?;
            trace.push(format!("row[{i}].seed"), si);
            trace.push(format!("row[{i}].r"), ri);
            trace.push(format!("row[{i}].advice"), alpha);
            trace.push(format!("row[{i}].z"), zi);
            z_bits.set(i as u32, zi.get(0));
        }
        let w = self.outer_word(&z_bits);
        trace.push("outer.w".into(), w);
        let v = self
            .lext_final
            .as_ref()
            .expect("bound final ext")
            .eval(y, &w);
        trace.push("output.v".into(), v);
        Ok((v, trace))
    }

    /// The outer seed word: the stand-in bit, extended by an xor of two
    /// disjoint odd majorities of the row bits in the two-source polylog
    /// profile.
    fn outer_word(&self, z_bits: &BitString) -> BitString {
        let w0 = self.outer.eval(z_bits);
        if outer_width(&self.cfg) == 1 {
            return w0;
        }
        let half = (z_bits.len() / 2).min(7);
        let a = crate::resilient::majority(&z_bits.substring(0, half));
        let b = crate::resilient::majority(&z_bits.substring(half, half));
        let mut w = BitString::zero(2);
        w.set(0, w0.get(0));
        w.set(1, a ^ b);
        w
    }

    /// Polylog affine profile: linear rows, affine advice, breaker bits,
    /// outer function.
    pub fn affine_nm_ext_polylog(&self, x: &BitString) -> Result<(BitString, PipelineTrace)> {
        if self.cfg.profile != Profile::PolylogAffine {
            return Err(Error::Infeasible(
                "config profile is not polylogaffine".into(),
            ));
        }
        self.check_input("affine_nm_ext_polylog input x", x)?;
        let rows = self.lext_rows.as_ref().expect("bound rows");
        let aag = self.aag.as_ref().expect("bound affine advgen");
        let mut trace = PipelineTrace::new();
        let d = self.cfg.row_count();
        let mut r_bits = BitString::zero(d as u32);
        for i in 0..d {
            let yi = rows.eval(x, &BitString::from_u64(self.cfg.d_rows, i));
            let alpha =
                affine_adv_gen(aag, x, &yi)?.concat(&index_suffix(i, self.cfg.index_bits()));
            let ri = self.breaker.eval(x, &yi, &alpha)?;
            trace.push(format!("row[{i}].y"), yi);
            trace.push(format!("row[{i}].advice"), alpha);
            trace.push(format!("row[{i}].r"), ri);
            r_bits.set(i as u32, ri.get(0));
        }
        let w = self.outer.eval(&r_bits);
        trace.push("output.w".into(), w);
        Ok((w, trace))
    }

    /// Constant-error two-source profile: somewhere-random samples, per
    /// cell advice and breaker bits, column xor, majority.
    pub fn two_nm_ext_const(
        &self,
        x: &BitString,
        y: &BitString,
    ) -> Result<(BitString, PipelineTrace)> {
        if self.cfg.profile != Profile::Const2Src {
            return Err(Error::Infeasible("config profile is not const2src".into()));
        }
        self.check_input("two_nm_ext_const input x", x)?;
        self.check_input("two_nm_ext_const input y", y)?;
        let g = self.disperser.as_ref().expect("bound disperser");
        let ext_y = self.ext_y.as_ref().expect("bound ext_y");
        let advgen = self.advgen.as_ref().expect("bound advgen");
        let mut trace = PipelineTrace::new();
        let d = self.cfg.row_count();
        let b = self.cfg.b_cols as u64;
        let mut col_bits = BitString::zero(d as u32);
        for s in 0..d {
            let mut acc = 0u8;
            for z in 0..b {
                let xsz = srsamp(&self.ext_x, g, x, s, z)?;
                let ysz = ext_y.eval(y, &xsz);
                let alpha = adv_gen(advgen, x, y, &ysz.prefix(self.cfg.adv_d))?.concat(
                    &index_suffix(s | (z << self.cfg.d_rows), self.cfg.index_bits()),
                );
                let rsz = self.breaker.eval(x, &ysz, &alpha)?;
                trace.push(format!("cell[{s},{z}].x"), xsz);
                trace.push(format!("cell[{s},{z}].y"), ysz);
                trace.push(format!("cell[{s},{z}].r"), rsz);
                acc ^= rsz.get(0);
            }
            col_bits.set(s as u32, acc);
        }
        trace.push("columns.z".into(), col_bits);
        let mut w = BitString::zero(1);
        w.set(0, crate::resilient::majority(&col_bits));
        trace.push("output.w".into(), w);
        Ok((w, trace))
    }

    /// Constant-error affine profile: linear somewhere-random rows, affine
    /// advice, breaker bits, column xor, majority.
    pub fn affine_nm_ext_const(&self, x: &BitString) -> Result<(BitString, PipelineTrace)> {
        if self.cfg.profile != Profile::ConstAffine {
            return Err(Error::Infeasible(
                "config profile is not constaffine".into(),
            ));
        }
        self.check_input("affine_nm_ext_const input x", x)?;
        let g = self.disperser.as_ref().expect("bound disperser");
        let rows = self.lext_rows.as_ref().expect("bound rows");
        let aag = self.aag.as_ref().expect("bound affine advgen");
        let mut trace = PipelineTrace::new();
        let d = self.cfg.row_count();
        let b = self.cfg.b_cols as u64;
        let mut col_bits = BitString::zero(d as u32);
        for s in 0..d {
            let mut acc = 0u8;
            for z in 0..b {
                let ysz = srsamp(rows, g, x, s, z)?;
                let alpha = affine_adv_gen(aag, x, &ysz)?.concat(&index_suffix(
                    s | (z << self.cfg.d_rows),
                    self.cfg.index_bits(),
                ));
                let rsz = self.breaker.eval(x, &ysz, &alpha)?;
                trace.push(format!("cell[{s},{z}].y"), ysz);
                trace.push(format!("cell[{s},{z}].r"), rsz);
                acc ^= rsz.get(0);
            }
            col_bits.set(s as u32, acc);
        }
        trace.push("columns.z".into(), col_bits);
        let mut w = BitString::zero(1);
        w.set(0, crate::resilient::majority(&col_bits));
        trace.push("output.w".into(), w);
        Ok((w, trace))
    }

    /// Dispatch for two-source profiles.
    pub fn eval_two(&self, x: &BitString, y: &BitString) -> Result<(BitString, PipelineTrace)> {
        match self.cfg.profile {
            Profile::Polylog2Src => self.two_nm_ext_polylog(x, y),
            Profile::Const2Src => self.two_nm_ext_const(x, y),
            _ => Err(Error::Infeasible(
                "two-source evaluation on an affine profile".into(),
            )),
        }
    }

    /// Dispatch for affine profiles.
    pub fn eval_affine(&self, x: &BitString) -> Result<(BitString, PipelineTrace)> {
        match self.cfg.profile {
            Profile::PolylogAffine => self.affine_nm_ext_polylog(x),
            Profile::ConstAffine => self.affine_nm_ext_const(x),
            _ => Err(Error::Infeasible(
                "affine evaluation on a two-source profile".into(),
            )),
        }
    }

    /// The grid of linear maps behind the constant affine profile, for the
    /// somewhere-uniform certificate.
    pub fn lsr_matrix(&self, s: u64, z: u64) -> Option<crate::gf2::Gf2Matrix> {
        let g = self.disperser.as_ref()?;
        let rows = self.lext_rows.as_ref()?;
        let seed = BitString::from_u64(rows.d, g.map(s, z));
        rows.matrix_for_seed(&seed)
    }

    /// Replays a trace: recomputes the pipeline on the same input and
    /// checks bit-exact agreement.
    pub fn replay_two(&self, x: &BitString, y: &BitString, trace: &PipelineTrace) -> Result<bool> {
        let (_, fresh) = self.eval_two(x, y)?;
        Ok(&fresh == trace)
    }

    pub fn replay_affine(&self, x: &BitString, trace: &PipelineTrace) -> Result<bool> {
        let (_, fresh) = self.eval_affine(x)?;
        Ok(&fresh == trace)
    }
}

/// Somewhere-uniform certificate for the constant affine profile: for each
/// source, all but at most `bad_budget` columns must contain a cell whose
/// linear map has full rank on the source (so its output is exactly
/// uniform). Returns the worst bad-column count over the sources.
pub fn certify_lsrext(
    b: &BoundPipeline,
    sources: &[crate::gf2::AffineSubspace],
    bad_budget: u64,
) -> Result<Measurement> {
    if b.cfg.profile != Profile::ConstAffine {
        return Err(Error::Infeasible(
            "somewhere-uniform certificate needs constaffine".into(),
        ));
    }
    let m = b.cfg.brk_seed as usize;
    let mut worst_bad = 0u64;
    for src in sources {
        let basis = src.basis();
        let mut bad = 0u64;
        for s in 0..b.cfg.row_count() {
            let mut has_uniform = false;
            for z in 0..b.cfg.b_cols as u64 {
                let mat = b.lsr_matrix(s, z).expect("grid maps exist");
                let images: Vec<BitString> = basis.iter().map(|v| mat.mul_vec(v)).collect();
                if crate::gf2::Gf2Matrix::from_rows(&images).rank() == m {
                    has_uniform = true;
                    break;
                }
            }
            if !has_uniform {
                bad += 1;
            }
        }
        worst_bad = worst_bad.max(bad);
    }
    Ok(Measurement {
        name: format!("lsrext_bad_columns[sources={}]", sources.len()),
        value: worst_bad as f64,
        exact: Some(format!("{worst_bad}/1")),
        method: crate::primitives::CertMethod::Exhaustive,
        budget: Some(bad_budget as f64),
        pass: Some(worst_bad <= bad_budget),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan, PlanRequest};

    fn bound(profile: Profile, n: u32, k: u32) -> BoundPipeline {
        let cfg = plan(&PlanRequest {
            profile,
            n,
            k,
            eps: 0.25,
            seed: 7,
        })
        .unwrap();
        resolve(&cfg).unwrap()
    }

    #[test]
    fn polylog_two_source_runs_and_replays() {
        let b = bound(Profile::Polylog2Src, 12, 6);
        let x = BitString::from_u64(12, 0xabc);
        let y = BitString::from_u64(12, 0x123);
        let (v, trace) = b.two_nm_ext_polylog(&x, &y).unwrap();
        assert_eq!(v.len(), b.cfg.m_out);
        let (v2, trace2) = b.two_nm_ext_polylog(&x, &y).unwrap();
        assert_eq!(v, v2);
        assert_eq!(trace, trace2);
        assert!(b.replay_two(&x, &y, &trace).unwrap());
        // Text round-trip.
        let text = trace.to_text();
        assert_eq!(PipelineTrace::from_text(&text).unwrap(), trace);
        // Wrong-width input names the stage.
        let err = b.two_nm_ext_polylog(&BitString::zero(5), &y).unwrap_err();
        assert!(format!("{err}").contains("two_nm_ext_polylog"));
    }

    #[test]
    fn affine_polylog_rows_are_linear() {
        let b = bound(Profile::PolylogAffine, 10, 5);
        let rows = b.lext_rows.as_ref().unwrap();
        for i in 0..b.cfg.row_count() {
            let s = BitString::from_u64(b.cfg.d_rows, i);
            let a = BitString::from_u64(10, 0x1a5);
            let c = BitString::from_u64(10, 0x2f0);
            assert_eq!(
                rows.eval(&a.xor(&c), &s),
                rows.eval(&a, &s).xor(&rows.eval(&c, &s))
            );
        }
        let (w, trace) = b
            .affine_nm_ext_polylog(&BitString::from_u64(10, 0x3ff))
            .unwrap();
        assert_eq!(w.len(), 1);
        assert!(b
            .replay_affine(&BitString::from_u64(10, 0x3ff), &trace)
            .unwrap());
    }

    #[test]
    fn const_two_source_column_parity() {
        let b = bound(Profile::Const2Src, 12, 6);
        let x = BitString::from_u64(12, 0x5a5);
        let y = BitString::from_u64(12, 0xc3c);
        let (w, trace) = b.two_nm_ext_const(&x, &y).unwrap();
        assert_eq!(w.len(), 1);
        // The column bit is the parity of its B cell bits.
        let cols: Vec<u8> = (0..b.cfg.row_count())
            .map(|s| {
                (0..b.cfg.b_cols as u64)
                    .map(|z| {
                        trace
                            .stages
                            .iter()
                            .find(|(n, _)| n == &format!("cell[{s},{z}].r"))
                            .unwrap()
                            .1
                            .get(0)
                    })
                    .fold(0u8, |a, v| a ^ v)
            })
            .collect();
        let col_stage = &trace
            .stages
            .iter()
            .find(|(n, _)| n == "columns.z")
            .unwrap()
            .1;
        for (s, &c) in cols.iter().enumerate() {
            assert_eq!(col_stage.get(s as u32), c);
        }
    }

    #[test]
    fn const_affine_grid_linear_and_zero() {
        let b = bound(Profile::ConstAffine, 10, 5);
        // Every grid map is linear: x = 0 gives all-zero rows.
        let (_, trace) = b.affine_nm_ext_const(&BitString::zero(10)).unwrap();
        for (name, v) in &trace.stages {
            if name.ends_with(".y") {
                assert_eq!(v.raw_u64(), 0, "grid row {name} nonzero at x = 0");
            }
        }
        for s in 0..b.cfg.row_count() {
            for z in 0..b.cfg.b_cols as u64 {
                let m = b.lsr_matrix(s, z).unwrap();
                let a = BitString::from_u64(10, 0x71);
                let c = BitString::from_u64(10, 0x1d3);
                assert_eq!(m.mul_vec(&a.xor(&c)), m.mul_vec(&a).xor(&m.mul_vec(&c)));
            }
        }
    }
}

/// End-to-end determinism check used by the acceptance gate: plan, bind,
/// evaluate, dump the trace to text, parse it back, and replay.
pub fn pipeline_trace_roundtrip_check(profile: Profile, n: u32, k: u32, seed: u64) -> Result<bool> {
    let cfg = crate::planner::plan(&crate::planner::PlanRequest {
        profile,
        n,
        k,
        eps: 0.25,
        seed,
    })?;
    let bound = resolve(&cfg)?;
    let x = BitString::from_u64(n, 0x5a5 & ((1 << n) - 1));
    let ok = if profile.is_affine() {
        let (_, trace) = bound.eval_affine(&x)?;
        let parsed = PipelineTrace::from_text(&trace.to_text())?;
        bound.replay_affine(&x, &parsed)?
    } else {
        let y = BitString::from_u64(n, 0xc3a & ((1 << n) - 1));
        let (_, trace) = bound.eval_two(&x, &y)?;
        let parsed = PipelineTrace::from_text(&trace.to_text())?;
        bound.replay_two(&x, &y, &parsed)?
    };
    Ok(ok)
}
