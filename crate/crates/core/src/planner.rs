//! The parameter planner: resolves every width, count and error budget the
//! compositions need to concrete desk-scale values, keeps the defining
//! relations as recorded constraints, and binds certified components.

use crate::error::{Error, Result};
use crate::gf2::BitString;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    Polylog2Src,
    PolylogAffine,
    Const2Src,
    ConstAffine,
}

impl Profile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::Polylog2Src => "polylog2src",
            Profile::PolylogAffine => "polylogaffine",
            Profile::Const2Src => "const2src",
            Profile::ConstAffine => "constaffine",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "polylog2src" => Ok(Profile::Polylog2Src),
            "polylogaffine" => Ok(Profile::PolylogAffine),
            "const2src" => Ok(Profile::Const2Src),
            "constaffine" => Ok(Profile::ConstAffine),
            _ => Err(Error::Parse(format!("unknown profile {s:?}"))),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Profile::PolylogAffine | Profile::ConstAffine)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One resolved parameter with the relation that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub key: String,
    pub relation: String,
    pub value: String,
}

/// Fully resolved desk-scale configuration for one of the four
/// compositions. Every dimension chains by construction; `resolve` binds
/// the actual certified components deterministically from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub profile: Profile,
    pub n: u32,
    pub k: u32,
    pub eps: f64,
    pub seed: u64,
    /// log2 of the row/column count D.
    pub d_rows: u32,
    /// Columns per row B (1 for the polylog profiles).
    pub b_cols: u32,
    /// Final output width.
    pub m_out: u32,
    /// x-side sampler extractor output width (d' resp. m2).
    pub xs_m: u32,
    /// Breaker seed width (d1 / d' / n1 / m).
    pub brk_seed: u32,
    /// Breaker internal state width.
    pub brk_state: u32,
    /// Two-source advice generator widths.
    pub adv_m1: u32,
    pub adv_d: u32,
    pub adv_dprime: u32,
    /// Affine advice generator widths.
    pub aag_l1: u32,
    pub aag_l2: u32,
    pub aag_m1: u32,
    pub aag_m2: u32,
    pub aag_k1: u32,
    pub aag_k2: u32,
    pub aag_dsamp: u32,
    pub aag_n3: u32,
    /// Disperser threshold and coverage (const profiles).
    pub dsp_k: u64,
    pub dsp_eps: f64,
    /// Paper constants for the O(log n) profiles.
    pub alpha: f64,
    pub delta_prime: f64,
    /// Operator budget for measured nm distances.
    pub eps_run: f64,
    /// Source entropies the certification suites run against.
    pub cert_kx: u32,
    pub cert_ky: u32,
    #[serde(skip)]
    pub relations: Vec<RelationRecord>,
}

impl PlannerConfig {
    /// Advice string length fed to the correlation breaker, including the
    /// appended fixed-width index.
    pub fn advice_len(&self) -> u32 {
        let idx = self.index_bits();
        match self.profile {
            Profile::Polylog2Src | Profile::Const2Src => {
                self.adv_m1 + self.adv_d + 2 * self.adv_dprime + idx
            }
            Profile::PolylogAffine | Profile::ConstAffine => {
                self.aag_l1 + self.aag_l2 + self.aag_dsamp + self.aag_n3 + idx
            }
        }
    }

    /// Fixed-width index suffix: ceil(log2 D) plus ceil(log2 B) for the
    /// grid profiles.
    pub fn index_bits(&self) -> u32 {
        let b_bits = if self.b_cols > 1 {
            u32::BITS - (self.b_cols - 1).leading_zeros()
        } else {
            0
        };
        self.d_rows + b_bits
    }

    pub fn row_count(&self) -> u64 {
        1u64 << self.d_rows
    }

    /// Bad-column budget for the somewhere-uniform certificate: D^gamma at
    /// gamma = 2/5.
    pub fn lsr_bad_budget(&self) -> u64 {
        (self.row_count() as f64).powf(0.4).floor() as u64
    }
}

/// Encodes a grid index as the fixed-width advice suffix.
pub fn index_suffix(i: u64, width: u32) -> BitString {
    BitString::from_u64(width, i)
}

pub struct PlanRequest {
    pub profile: Profile,
    pub n: u32,
    pub k: u32,
    pub eps: f64,
    pub seed: u64,
}

/// Resolves a full configuration. The paper's inter-parameter relations
/// are preserved as recorded constraints; absolute scales are desk values
/// chosen so that every chain stays within the exhaustive oracle's reach.
pub fn plan(req: &PlanRequest) -> Result<PlannerConfig> {
    if req.n < 4 || req.n > 16 {
        return Err(Error::Infeasible(format!(
            "desk planner needs 4 <= n <= 16 for exhaustive certification, got {}",
            req.n
        )));
    }
    if req.k > req.n {
        return Err(Error::Infeasible(format!(
            "entropy k = {} exceeds n = {}",
            req.k, req.n
        )));
    }
    if req.k < 3 {
        return Err(Error::Infeasible("desk planner needs k >= 3".into()));
    }
    if !(req.eps > 0.0 && req.eps < 1.0) {
        return Err(Error::Infeasible(format!(
            "eps must lie in (0,1), got {}",
            req.eps
        )));
    }
    let n = req.n;
    let k = req.k;
    let mut relations: Vec<RelationRecord> = Vec::new();
    let mut rel = |key: &str, relation: &str, value: String| {
        relations.push(RelationRecord {
            key: key.into(),
            relation: relation.into(),
            value,
        });
    };

    // Shared desk geometry: more rows for the polylog profiles (their
    // outer function aggregates a full row per bit), a smaller grid for
    // the constant-error profiles (each column already carries B cells).
    let d_rows = 4u32;
    rel(
        "d_rows",
        "D = 2^d rows; paper: D = poly(n), desk: 2^4..2^5",
        d_rows.to_string(),
    );
    let m_out = match req.profile {
        Profile::Polylog2Src => 1u32,
        _ => 1u32,
    };
    if m_out > k {
        return Err(Error::Infeasible(format!(
            "output m' = {m_out} exceeds entropy k = {k}"
        )));
    }
    rel(
        "m_out",
        "m' <= k (output cannot exceed entropy)",
        m_out.to_string(),
    );

    let brk_state = 3u32;
    // Affine rows are linear images of x, so their width must not exceed k
    // or they can never be exactly uniform (and the somewhere-uniform
    // certificate of the grid profile would be vacuously false).
    let brk_seed = match req.profile {
        Profile::PolylogAffine => 6u32.min(k),
        Profile::ConstAffine => 5u32.min(k.saturating_sub(1)).max(2),
        _ => 6u32.min(n),
    };
    rel(
        "brk_seed",
        "breaker seed width; paper d1 = O(ta+td+t log^3(t+1) log(n/eps)), desk override (affine: <= k)",
        brk_seed.to_string(),
    );
    rel(
        "brk_state",
        "breaker round state width; final round keeps >= 2 bits slack",
        brk_state.to_string(),
    );

    let xs_m = 4u32;
    rel(
        "xs_m",
        "x-side sampler extractor output width (d' resp. m2)",
        xs_m.to_string(),
    );

    // Two-source advice generator.
    let adv_m1 = 3u32;
    let adv_d = 4u32.min(brk_seed);
    let adv_dprime = 2u32;
    rel(
        "adv_m1",
        "m1 = log(b^2/4 * lambda*n / log(1/e2)) + ... + O(1), desk override",
        adv_m1.to_string(),
    );
    rel(
        "adv_d",
        "advice y1 width d2 = O(log(n/eps2)), desk override",
        adv_d.to_string(),
    );
    rel(
        "adv_dprime",
        "D' = O((4/beta^2) log(1/eps2)), desk override",
        adv_dprime.to_string(),
    );

    // Affine advice generator; the slices tile the row width exactly.
    let aag_l1 = brk_seed / 2;
    let aag_l2 = brk_seed - aag_l1;
    let aag_m1 = 2u32.min(aag_l1);
    let aag_m2 = 2u32.min(aag_l2);
    let aag_k1 = 1u32.max(aag_l1.saturating_sub(1)).min(aag_l1);
    let aag_k2 = 1u32.max(aag_l2.saturating_sub(1)).min(aag_l2);
    let aag_dsamp = 2u32;
    let aag_n3 = 2u32;
    rel(
        "aag_l1",
        "l1 = O(log(1/eps1)), desk override",
        aag_l1.to_string(),
    );
    rel(
        "aag_l2",
        "l2 = O(log(1/eps2)), desk override",
        aag_l2.to_string(),
    );
    rel("aag_n3", "n3 = log(n), desk override", aag_n3.to_string());

    // Const-profile grid.
    let (b_cols, alpha, delta_prime) = match req.profile {
        Profile::Const2Src => (2u32, 0.5f64, 0.1f64),
        // The wider grid keeps the somewhere-uniform certificate feasible:
        // a random width-5 row is full rank on a dim-k source often enough
        // that some z per column lands uniform.
        Profile::ConstAffine => (4u32, 0.5f64, 0.1f64),
        _ => (1u32, 0.5, 0.1),
    };
    if matches!(req.profile, Profile::Const2Src | Profile::ConstAffine) {
        rel("alpha", "alpha = 1/2", alpha.to_string());
        rel("delta_prime", "delta' = 1/10", delta_prime.to_string());
        rel("b_cols", "B = O(1) disperser degree", b_cols.to_string());
        rel(
            "k1",
            "srs extractor entropy k1 = 2*m2",
            format!("{}", 2 * xs_m),
        );
        rel(
            "eps1",
            "eps1 = eps0^(4c/alpha); desk: disperser threshold K = D^(1/(1+alpha)) rounded",
            format!("{}", (1u64 << d_rows).pow(2) as f64),
        );
    }
    // Disperser threshold: K = D^{1/(1+alpha)} = D^(2/3) at alpha = 1/2.
    let dsp_k = ((1u64 << d_rows) as f64).powf(1.0 / (1.0 + alpha)).round() as u64;
    let dsp_eps = 0.25f64;
    rel("dsp_k", "K = D^(1/(1+alpha))", dsp_k.to_string());
    rel(
        "dsp_eps",
        "disperser coverage eps_Gamma = 3*eps0, desk override",
        dsp_eps.to_string(),
    );

    // Advice suffix width: the advice suffix width left unspecified upstream.
    rel(
        "index_bits",
        "advice suffix width b = ceil(log2 D) + ceil(log2 B)",
        format!(
            "{}",
            d_rows
                + if b_cols > 1 {
                    u32::BITS - (b_cols - 1).leading_zeros()
                } else {
                    0
                }
        ),
    );

    // Error ladder: the paper's expressions collapse at desk scale; keep
    // the relations, set the absolute scale from the requested eps.
    match req.profile {
        Profile::Polylog2Src => {
            rel(
                "eps1",
                "eps1 = 2^(-4(a+d)t) * n^-4, desk: eps/4",
                format!("{}", req.eps / 4.0),
            );
            rel(
                "eps2",
                "eps2 = 2^(-4dt) * n^-2, desk: eps/4",
                format!("{}", req.eps / 4.0),
            );
            rel(
                "eps3",
                "eps3 = 2^(-2(a+d)t) * n^-2, desk: eps/4",
                format!("{}", req.eps / 4.0),
            );
        }
        Profile::PolylogAffine => {
            rel(
                "eps1",
                "eps1 = n^-2, desk: eps/4",
                format!("{}", req.eps / 4.0),
            );
            rel(
                "eps2",
                "eps2 = 1/(20 t^2 (2D)^(t+1)), desk: eps/4",
                format!("{}", req.eps / 4.0),
            );
        }
        Profile::Const2Src => {
            rel("eps0", "eps0 = 1/n", format!("{}", 1.0 / n as f64));
            rel("delta1", "delta1 = eps/32", format!("{}", req.eps / 32.0));
            rel(
                "eps2",
                "eps2 = eps/((2D)^t t B), desk: eps/4",
                format!("{}", req.eps / 4.0),
            );
        }
        Profile::ConstAffine => {
            rel(
                "eps1",
                "eps1 = eps/(24 t^2 (2D)^t), desk: eps/4",
                format!("{}", req.eps / 4.0),
            );
        }
    }

    let cert_kx = k.min(n - 1);
    let cert_ky = k.min(n - 1);

    Ok(PlannerConfig {
        profile: req.profile,
        n,
        k,
        eps: req.eps,
        seed: req.seed,
        d_rows,
        b_cols,
        m_out,
        xs_m,
        brk_seed,
        brk_state,
        adv_m1,
        adv_d,
        adv_dprime,
        aag_l1,
        aag_l2,
        aag_m1,
        aag_m2,
        aag_k1,
        aag_k2,
        aag_dsamp,
        aag_n3,
        dsp_k,
        dsp_eps,
        alpha,
        delta_prime,
        eps_run: 0.25,
        cert_kx,
        cert_ky,
        relations,
    })
}

// ---------------------------------------------------------------------------
// Flat key-value serialization

impl PlannerConfig {
    pub fn to_key_values(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("profile".into(), self.profile.to_string());
        m.insert("n".into(), self.n.to_string());
        m.insert("k".into(), self.k.to_string());
        m.insert("eps".into(), format!("{}", self.eps));
        m.insert("seed".into(), self.seed.to_string());
        m.insert("d_rows".into(), self.d_rows.to_string());
        m.insert("b_cols".into(), self.b_cols.to_string());
        m.insert("m_out".into(), self.m_out.to_string());
        m.insert("xs_m".into(), self.xs_m.to_string());
        m.insert("brk_seed".into(), self.brk_seed.to_string());
        m.insert("brk_state".into(), self.brk_state.to_string());
        m.insert("adv_m1".into(), self.adv_m1.to_string());
        m.insert("adv_d".into(), self.adv_d.to_string());
        m.insert("adv_dprime".into(), self.adv_dprime.to_string());
        m.insert("aag_l1".into(), self.aag_l1.to_string());
        m.insert("aag_l2".into(), self.aag_l2.to_string());
        m.insert("aag_m1".into(), self.aag_m1.to_string());
        m.insert("aag_m2".into(), self.aag_m2.to_string());
        m.insert("aag_k1".into(), self.aag_k1.to_string());
        m.insert("aag_k2".into(), self.aag_k2.to_string());
        m.insert("aag_dsamp".into(), self.aag_dsamp.to_string());
        m.insert("aag_n3".into(), self.aag_n3.to_string());
        m.insert("dsp_k".into(), self.dsp_k.to_string());
        m.insert("dsp_eps".into(), format!("{}", self.dsp_eps));
        m.insert("alpha".into(), format!("{}", self.alpha));
        m.insert("delta_prime".into(), format!("{}", self.delta_prime));
        m.insert("eps_run".into(), format!("{}", self.eps_run));
        m.insert("cert_kx".into(), self.cert_kx.to_string());
        m.insert("cert_ky".into(), self.cert_ky.to_string());
        m
    }

    /// One `key = value` per line, keys sorted, relations as comments.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# nmext planner configuration\n");
        for r in &self.relations {
            out.push_str(&format!(
                "# relation {}: {} -> {}\n",
                r.key, r.relation, r.value
            ));
        }
        for (k, v) in self.to_key_values() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad config line: {line}")))?;
            kv.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| -> Result<&String> {
            kv.get(key)
                .ok_or_else(|| Error::Parse(format!("missing config key {key}")))
        };
        let get_u32 = |key: &str| -> Result<u32> {
            get(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer for {key}")))
        };
        let get_u64 = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer for {key}")))
        };
        let get_f64 = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad float for {key}")))
        };
        Ok(PlannerConfig {
            profile: Profile::parse(get("profile")?)?,
            n: get_u32("n")?,
            k: get_u32("k")?,
            eps: get_f64("eps")?,
            seed: get_u64("seed")?,
            d_rows: get_u32("d_rows")?,
            b_cols: get_u32("b_cols")?,
            m_out: get_u32("m_out")?,
            xs_m: get_u32("xs_m")?,
            brk_seed: get_u32("brk_seed")?,
            brk_state: get_u32("brk_state")?,
            adv_m1: get_u32("adv_m1")?,
            adv_d: get_u32("adv_d")?,
            adv_dprime: get_u32("adv_dprime")?,
            aag_l1: get_u32("aag_l1")?,
            aag_l2: get_u32("aag_l2")?,
            aag_m1: get_u32("aag_m1")?,
            aag_m2: get_u32("aag_m2")?,
            aag_k1: get_u32("aag_k1")?,
            aag_k2: get_u32("aag_k2")?,
            aag_dsamp: get_u32("aag_dsamp")?,
            aag_n3: get_u32("aag_n3")?,
            dsp_k: get_u64("dsp_k")?,
            dsp_eps: get_f64("dsp_eps")?,
            alpha: get_f64("alpha")?,
            delta_prime: get_f64("delta_prime")?,
            eps_run: get_f64("eps_run")?,
            cert_kx: get_u32("cert_kx")?,
            cert_ky: get_u32("cert_ky")?,
            relations: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_defaults_and_feasibility() {
        let cfg = plan(&PlanRequest {
            profile: Profile::Const2Src,
            n: 12,
            k: 6,
            eps: 0.25,
            seed: 1,
        })
        .unwrap();
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.delta_prime, 0.1);
        assert!(cfg
            .relations
            .iter()
            .any(|r| r.relation.contains("k1 = 2*m2")));

        // k > n is infeasible.
        assert!(plan(&PlanRequest {
            profile: Profile::Const2Src,
            n: 4,
            k: 8,
            eps: 0.25,
            seed: 1
        })
        .is_err());
    }

    #[test]
    fn config_text_roundtrip_and_determinism() {
        let req = PlanRequest {
            profile: Profile::PolylogAffine,
            n: 10,
            k: 5,
            eps: 0.25,
            seed: 42,
        };
        let cfg = plan(&req).unwrap();
        let text = cfg.to_config_text();
        let text2 = plan(&req).unwrap().to_config_text();
        assert_eq!(text, text2, "same flags must give byte-identical config");
        // Relations are comments and are not parsed back; the key-value
        // payload round-trips exactly.
        let back = PlannerConfig::from_config_text(&text).unwrap();
        assert_eq!(back.to_key_values(), cfg.to_key_values());
        assert_eq!(
            PlannerConfig::from_config_text(&back.to_config_text())
                .unwrap()
                .to_config_text(),
            back.to_config_text()
        );
    }

    #[test]
    fn advice_length_accounts_for_index() {
        let cfg = plan(&PlanRequest {
            profile: Profile::Const2Src,
            n: 12,
            k: 6,
            eps: 0.25,
            seed: 1,
        })
        .unwrap();
        assert_eq!(
            cfg.advice_len(),
            cfg.adv_m1 + cfg.adv_d + 2 * cfg.adv_dprime + cfg.d_rows + 1
        );
        let cfg = plan(&PlanRequest {
            profile: Profile::Polylog2Src,
            n: 12,
            k: 6,
            eps: 0.25,
            seed: 1,
        })
        .unwrap();
        assert_eq!(
            cfg.advice_len(),
            cfg.adv_m1 + cfg.adv_d + 2 * cfg.adv_dprime + cfg.d_rows
        );
    }
}
