//! Upper and lower bounds for E‖Σ(f(X_i) − Pf)‖ under uniform entropy
//! models, with explicit constants assembled from the symmetrization and
//! chaining steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classes::{entropy_constants, vc_major_entropy, ClassKind, EntropyConstants, EntropyModel, FunctionClass};
use crate::error::{domain, Error, Result};
use crate::peel::{Mode, PremiseCheck, PremiseReport};
use crate::{quad, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationQuery {
    pub n: usize,
    /// σ² ≥ sup_f Pf²
    pub sigma: f64,
    /// ‖F‖₂
    pub env_norm: f64,
    pub model: EntropyModel,
    pub mode: Mode,
    /// c in nσ² ≥ c H(2‖F‖₂/σ)
    pub c: f64,
}

impl ExpectationQuery {
    pub fn new(n: usize, sigma: f64, env_norm: f64, model: EntropyModel, mode: Mode) -> Self {
        ExpectationQuery { n, sigma, env_norm, model, mode, c: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n == 0 {
            return domain("n must be at least 1");
        }
        if !(self.sigma > 0.0) || self.sigma > self.env_norm * (1.0 + 1e-12) {
            return domain(format!("need 0 < σ ≤ ‖F‖₂, got σ = {}, ‖F‖₂ = {}", self.sigma, self.env_norm));
        }
        if !(self.c > 0.0) {
            return domain("c must be positive");
        }
        Ok(())
    }

    fn h(&self, x: f64) -> f64 {
        match self.model {
            EntropyModel::VcMajor { a } => vc_major_entropy(a, self.env_norm, self.env_norm / x),
            m => m.eval(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub value: f64,
    /// "flat" (√n‖F‖₂ branch), "entropy", "small" (pure entropy term) or "unit"
    pub regime: String,
    /// K(H,c)√nσ√H(2‖F‖₂/σ) when nσ² ≥ cH(2‖F‖₂/σ)
    pub sharp: Option<f64>,
    pub constants_used: Vec<(String, f64)>,
}

fn constants(q: &ExpectationQuery) -> Result<EntropyConstants> {
    entropy_constants(&q.model)
}

/// Bound on E‖Σ(f(X_i) − Pf)‖ over the class.
///
/// Shape mode evaluates the min/max structure with C(H) = K(H,c) = k. Explicit
/// mode follows the chaining argument: with E = E‖Σε_i f(X_i)‖,
/// E ≤ 120 C_H √H(2) √n‖F‖ + t and E ≤ a + b√E + t, where
/// a = 120 C_H √nσ√H(2‖F‖/σ), b² = 8·120² C_H² H(2‖F‖/σ) and
/// t = 120 D_H √n‖F‖ e^{−9n‖F‖²/8}; the second gives E ≤ 2a + 2t + b².
/// The result is 2E. VC-major models are shape-only.
pub fn expectation_upper(q: &ExpectationQuery) -> Result<ExpectationReport> {
    q.validate()?;
    if let EntropyModel::VcMajor { a } = q.model {
        return vc_major_upper(q, a);
    }
    let k = constants(q)?;
    let nf = q.n as f64;
    let (sn, f2, s) = (nf.sqrt(), q.env_norm, q.sigma);
    let h2 = q.h(2.0 * f2 / s);
    let sharp_ok = nf * s * s >= q.c * h2;
    match q.mode {
        Mode::Shape { k: c } => {
            let flat = sn * f2;
            let ent = sn * s * h2.sqrt();
            let small = q.h((2.0 * f2 / s).min(sn * f2 / (1440.0 * k.c_h)));
            let inner = ent.max(small).max(1.0);
            let regime = if flat <= inner {
                "flat"
            } else if inner == ent {
                "entropy"
            } else if inner == small {
                "small"
            } else {
                "unit"
            };
            Ok(ExpectationReport {
                value: c * flat.min(inner),
                regime: regime.into(),
                sharp: sharp_ok.then(|| c * ent),
                constants_used: vec![("C(H)".into(), c), ("C_H".into(), k.c_h)],
            })
        }
        Mode::Explicit => {
            let t = 120.0 * k.d_h * sn * f2 * (-9.0 * nf * f2 * f2 / 8.0).exp();
            let flat = 120.0 * k.c_h * q.h(2.0).sqrt() * sn * f2 + t;
            let a = 120.0 * k.c_h * sn * s * h2.sqrt();
            let b2 = 8.0 * 120f64.powi(2) * k.c_h * k.c_h * h2;
            let local = 2.0 * a + 2.0 * t + b2;
            let regime = if flat <= local {
                "flat"
            } else if 2.0 * a >= b2 {
                "entropy"
            } else {
                "small"
            };
            let kc = explicit_k(&k, q.h(2.0), q.c);
            let ent = sn * s * h2.sqrt();
            Ok(ExpectationReport {
                value: 2.0 * flat.min(local),
                regime: regime.into(),
                sharp: sharp_ok.then(|| kc * ent),
                constants_used: vec![
                    ("C_H".into(), k.c_h),
                    ("D_H".into(), k.d_h),
                    ("A_H".into(), k.a_h),
                    ("symmetrization".into(), 2.0),
                    ("chaining".into(), 120.0),
                    ("K(H,c)".into(), kc),
                ],
            })
        }
    }
}

/// K(H,c) such that 2(2a + 2t + b²) ≤ K √nσ√H(2‖F‖/σ) whenever
/// nσ² ≥ cH(2‖F‖/σ): uses √nσ√H ≥ √c H ≥ √c H(2) and 2t ≤ 120 D_H.
fn explicit_k(k: &EntropyConstants, h_at_2: f64, c: f64) -> f64 {
    let from_a = 4.0 * 120.0 * k.c_h;
    let from_b = 2.0 * 8.0 * 120f64.powi(2) * k.c_h * k.c_h / c.sqrt();
    let from_t = if h_at_2 > 0.0 { 2.0 * 120.0 * k.d_h / (c.sqrt() * h_at_2) } else { f64::INFINITY };
    from_a + from_b + from_t
}

/// J(σ) = ∫₀^σ √H(‖F‖, τ) dτ for the VC-major entropy, via τ = σe^{−u}.
pub fn vc_major_integral(a: f64, env: f64, sigma: f64) -> f64 {
    let g = |u: f64| {
        let tau = sigma * (-u).exp();
        vc_major_entropy(a, env, tau).sqrt() * tau
    };
    quad::integrate_with(&g, 0.0, 80.0, 1e-10, 60)
}

fn vc_major_upper(q: &ExpectationQuery, a: f64) -> Result<ExpectationReport> {
    let c = match q.mode {
        Mode::Shape { k } => k,
        Mode::Explicit => {
            return Err(Error::Unsupported("VC-major expectation bounds are available in shape mode only".into()))
        }
    };
    let nf = q.n as f64;
    let (sn, f2, s) = (nf.sqrt(), q.env_norm, q.sigma);
    let h = vc_major_entropy(a, f2, s);
    let flat = sn * f2 * (1.0 + (1.0 / (a * f2)).max(1.0).ln().sqrt());
    let ent = sn * s * h.sqrt();
    let inner = ent.max(h).max(nf.ln().max(0.0).sqrt());
    let regime = if flat <= inner {
        "flat"
    } else if inner == ent {
        "entropy"
    } else if inner == h {
        "small"
    } else {
        "unit"
    };
    Ok(ExpectationReport {
        value: c * flat.min(inner),
        regime: regime.into(),
        sharp: None,
        constants_used: vec![("C(H)".into(), c), ("J(sigma)".into(), vc_major_integral(a, f2, s))],
    })
}

/// Bound on E‖Σ(f(X_i) − Pf)‖^p.
///
/// Shape mode: C^p max(core^p, p^{p/2}(√nσ)^p, p^p). Explicit mode: with E the
/// explicit expectation bound and Z ≤ E + √(2t(2E + nσ²)) + t/3 outside
/// probability e^{−t}, returns ∫₀^∞ (E + √(2t(2E + nσ²)) + t/3)^p e^{−t} dt.
pub fn moment_upper(q: &ExpectationQuery, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return domain("moment order must be at least 1");
    }
    q.validate()?;
    let nf = q.n as f64;
    let (sn, f2, s) = (nf.sqrt(), q.env_norm, q.sigma);
    match q.mode {
        Mode::Shape { k: c } => {
            let ch = match q.model {
                EntropyModel::VcMajor { .. } => 1.0,
                _ => constants(q)?.c_h,
            };
            let core = (sn * s * q.h(2.0 * f2 / s).sqrt()).max(q.h((2.0 * f2 / s).min(sn * f2 / (1440.0 * ch))));
            Ok(c.powf(p) * core.powf(p).max(p.powf(p / 2.0) * (sn * s).powf(p)).max(p.powf(p)))
        }
        Mode::Explicit => {
            let e = expectation_upper(q)?.value;
            let v = 2.0 * e + nf * s * s;
            let g = |t: f64| (e + (2.0 * t * v).sqrt() + t / 3.0).powf(p) * (-t).exp();
            let top = 60.0 + 4.0 * p;
            Ok(quad::integrate_with(&g, 0.0, top, 1e-12, 60))
        }
    }
}

/// VC-subgraph bound K₁[√n‖G‖ ∧ (√nσ√log(A‖G‖/σ) ∨ log(A‖G‖/σ ∧ √n‖G‖) ∨ 1)].
pub fn vc_subgraph_expectation(n: usize, sigma_g: f64, env_g: f64, a: f64, v: f64, k1: f64) -> Result<f64> {
    if n == 0 || !(sigma_g > 0.0) || sigma_g > env_g * (1.0 + 1e-12) || a < std::f64::consts::E || v < 1.0 || k1 < 1.0 {
        return domain("need n ≥ 1, 0 < σ ≤ ‖G‖, A ≥ e, v ≥ 1, K₁ ≥ 1");
    }
    let sn = (n as f64).sqrt();
    let x = a * env_g / sigma_g;
    let inner = (sn * sigma_g * x.ln().sqrt()).max(x.min(sn * env_g).ln()).max(1.0);
    Ok(k1 * (sn * env_g).min(inner))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerReport {
    pub premises: PremiseReport,
    /// (√nσ/(32L))√cover_log when the premises hold
    pub value: Option<f64>,
    /// the same formula evaluated regardless of the premises
    pub raw: f64,
}

/// Lower bound on E‖Σ f(X_i)‖ from a packing/covering estimate.
pub fn expectation_lower(n: usize, sigma: f64, env_norm: f64, cover_log: f64, l: f64, model: &EntropyModel) -> Result<LowerReport> {
    if cover_log < 0.0 || !(sigma > 0.0) || !(l > 0.0) || n == 0 {
        return domain("need cover_log ≥ 0, σ > 0, L > 0, n ≥ 1");
    }
    let k = entropy_constants(model)?;
    let ns2 = n as f64 * sigma * sigma;
    let first = 2500f64.max(16.0 * k.a_h / 9.0);
    let second = (672.0 * l * l).max(1.0) * 1920f64.powi(2) * k.c_h * k.c_h * model.eval(6.0 * env_norm / sigma);
    let premises = PremiseReport {
        checks: vec![
            PremiseCheck { name: "n sigma^2 >= 2500 v 16A_H/9".into(), pass: ns2 >= first, detail: format!("{ns2:.4e} vs {first:.4e}") },
            PremiseCheck { name: "n sigma^2 >= entropy threshold".into(), pass: ns2 >= second, detail: format!("{ns2:.4e} vs {second:.4e}") },
        ],
    };
    let raw = (n as f64).sqrt() * sigma / (32.0 * l) * cover_log.sqrt();
    let value = premises.all_pass().then_some(raw);
    Ok(LowerReport { premises, value, raw })
}

/// log of an explicit σ-separated family of intervals of length σ²:
/// [ih, (i+2)h] with h = σ²/2, whose pairwise L₂(λ) distances are ≥ σ.
/// Since D(σ) ≤ N(σ/2), this lower-bounds log N(𝓕, L₂, σ/2).
pub fn interval_packing_log(sigma: f64) -> f64 {
    let count = (2.0 / (sigma * sigma) - 1.0).floor().max(1.0);
    count.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fullness {
    pub packing_log: f64,
    pub count: usize,
    /// packing_log / H(‖F‖₂/σ)
    pub ratio: f64,
    /// largest |empirical − exact| L₂ distance over checked packing pairs
    pub distance_error: f64,
}

/// Greedy σ/2-packing of the class in L₂(P̂), P̂ the empirical law of
/// `mc_points` uniform draws. Members are index ranges of the sorted points
/// (half-lines: prefixes; intervals: windows with mass ≤ σ²).
pub fn fullness_estimate(class: &FunctionClass, sigma: f64, mc_points: usize, seed: u64) -> Result<Fullness> {
    if mc_points < 1000 {
        return domain("need at least 1000 discretization points");
    }
    if !(sigma > 0.0 && sigma <= 1.0) {
        return domain("σ must lie in (0, 1]");
    }
    let mut r = rng::stream(seed, 0);
    let mut pts: Vec<f64> = (0..mc_points).map(|_| r.gen::<f64>()).collect();
    pts.sort_by(f64::total_cmp);
    let m = mc_points;
    let sep2 = (sigma * sigma / 4.0 * m as f64).ceil() as usize;
    let stride = (m / 2000).max(1);
    let (members, model): (Vec<(usize, usize)>, EntropyModel) = match &class.kind {
        ClassKind::FiniteDict(d) if d.funcs.len() == 1 => {
            return Ok(Fullness { packing_log: 0.0, count: 1, ratio: 0.0, distance_error: 0.0 });
        }
        ClassKind::HalfLine1D => {
            let top = pts.partition_point(|&x| x <= 0.5);
            let top_sigma = pts.partition_point(|&x| x <= sigma * sigma).min(top);
            ((0..=top_sigma).step_by(stride).map(|j| (0, j)).collect(), crate::classes::halfline_entropy_model())
        }
        ClassKind::Intervals1D => {
            let len = (sigma * sigma * m as f64).floor() as usize;
            let mut v = Vec::new();
            for i in (0..m).step_by(stride) {
                for j in (i..=(i + len).min(m)).step_by(stride) {
                    v.push((i, j));
                }
            }
            (v, crate::classes::intervals_entropy_model())
        }
        _ => return Err(Error::Unsupported(format!("packing for {}", class.name()))),
    };
    let sym = |a: (usize, usize), b: (usize, usize)| -> usize {
        let inter = b.1.min(a.1).saturating_sub(a.0.max(b.0));
        (a.1 - a.0) + (b.1 - b.0) - 2 * inter
    };
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for &c in &members {
        if chosen.iter().all(|&p| sym(p, c) >= sep2) {
            chosen.push(c);
        }
    }
    let count = chosen.len();
    let packing_log = (count as f64).ln();
    let endpoint = |k: usize| if k == 0 { 0.0 } else { pts[k - 1] };
    let mut err = 0.0_f64;
    for w in chosen.windows(2).take(200) {
        let (a, b) = (w[0], w[1]);
        let emp = (sym(a, b) as f64 / m as f64).sqrt();
        let (a0, a1, b0, b1) = (endpoint(a.0), endpoint(a.1), endpoint(b.0), endpoint(b.1));
        let inter = (a1.min(b1) - a0.max(b0)).max(0.0);
        let exact = ((a1 - a0) + (b1 - b0) - 2.0 * inter).max(0.0).sqrt();
        err = err.max((emp - exact).abs());
    }
    let h = model.eval(1.0 / sigma);
    Ok(Fullness { packing_log, count, ratio: if h > 0.0 { packing_log / h } else { f64::INFINITY }, distance_error: err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_when_sigma_is_envelope() {
        let q = ExpectationQuery::new(100, 1.0, 1.0, EntropyModel::VcType { a: 4.0, v: 2.0 }, Mode::shape());
        let r = expectation_upper(&q).unwrap();
        assert_eq!(r.regime, "flat");
        assert_relative_eq!(r.value, 10.0);
        let bad = ExpectationQuery::new(100, 1.1, 1.0, EntropyModel::VcType { a: 4.0, v: 2.0 }, Mode::shape());
        assert!(expectation_upper(&bad).is_err());
    }

    #[test]
    fn moment_collapses() {
        let q = ExpectationQuery::new(50, 0.2, 1.0, EntropyModel::VcType { a: 4.0, v: 2.0 }, Mode::shape());
        let e = expectation_upper(&q).unwrap();
        let m1 = moment_upper(&q, 1.0).unwrap();
        assert!(m1 >= e.value - 1e-12);
        let core = {
            let h = q.h(10.0);
            (50f64.sqrt() * 0.2 * h.sqrt()).max(q.h(10f64.min(50f64.sqrt() / (1440.0 * 2.0))))
        };
        assert_relative_eq!(m1, core.max(50f64.sqrt() * 0.2).max(1.0));
    }

    #[test]
    fn premise_threshold() {
        let m = crate::classes::intervals_entropy_model();
        let r = expectation_lower(2499, 1.0, 1.0, 1.0, 1.0, &m).unwrap();
        assert!(!r.premises.checks[0].pass);
        assert!(r.value.is_none());
    }

    #[test]
    fn subgraph_substitution() {
        let (n, g, a) = (400usize, 0.3, 5.0);
        let v = vc_subgraph_expectation(n, g, g, a, 1.0, 1.0).unwrap();
        let sn = 20.0;
        let want = (sn * g).min((sn * g * a.ln().sqrt()).max(a.min(sn * g).ln()).max(1.0));
        assert_relative_eq!(v, want);
    }

    #[test]
    fn packing_counts() {
        assert_relative_eq!(interval_packing_log(0.5), 7f64.ln());
        let d = crate::classes::FiniteDict::new(vec![0.5, 0.5], vec![vec![1.0, 0.0]]).unwrap();
        let c = FunctionClass::finite(d, crate::classes::SigmaConvention::SqrtMean);
        assert_eq!(fullness_estimate(&c, 0.25, 1000, 1).unwrap().packing_log, 0.0);
    }
}
