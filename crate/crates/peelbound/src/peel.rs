//! Peeling grids, the γ function, variance proxies and deviation radii for
//! weighted suprema of |P_n f − Pf| over shells r q^{j-1} < σ_P f ≤ r q^j.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// γ⁻¹(x) = x log(1 + x).
pub fn gamma_inverse(x: f64) -> f64 {
    x * x.ln_1p()
}

/// The inverse of `gamma_inverse` on [0, ∞).
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0_f64;
    let mut hi = if x <= 2.0 { 2.0 * x.sqrt() } else { 2.0 * x / x.ln_1p() };
    while gamma_inverse(hi) < x {
        hi *= 2.0;
    }
    let mut y = if x <= 1.0 { x.sqrt() } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let g = gamma_inverse(y) - x;
        if g.abs() <= 1e-14 * x {
            return y;
        }
        if g > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let dg = y.ln_1p() + y / (1.0 + y);
        let mut next = y - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= f64::EPSILON * y {
            return next;
        }
        y = next;
    }
    y
}

/// Smallest l ≥ 0 with q^l ≥ x, up to a relative slack of 1e-12.
pub fn ceil_log(x: f64, q: f64) -> usize {
    if x <= 1.0 {
        return 0;
    }
    let target = x * (1.0 - 1e-12);
    let mut l = (x.ln() / q.ln()).ceil().max(0.0) as usize;
    while l > 0 && q.powi(l as i32 - 1) >= target {
        l -= 1;
    }
    while q.powi(l as i32) < target {
        l += 1;
    }
    l
}

/// Geometric shells ρ_j = r q^j, j = 1..l, with the last one clipped at δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelingGrid {
    pub r: f64,
    pub delta: f64,
    pub q: f64,
    pub rho: Vec<f64>,
    pub l: usize,
}

impl PeelingGrid {
    /// Upper σ-edge of shell j (1-based), clipped at δ.
    pub fn hi(&self, j: usize) -> f64 {
        self.rho[j - 1].min(self.delta)
    }

    pub fn lo(&self, j: usize) -> f64 {
        if j == 1 {
            self.r
        } else {
            self.rho[j - 2]
        }
    }

    /// (lo, hi] for every shell.
    pub fn shells(&self) -> Vec<(f64, f64)> {
        (1..=self.l).map(|j| (self.lo(j), self.hi(j))).collect()
    }

    /// 1-based index of the shell containing σ, if any.
    pub fn shell_of(&self, sigma: f64) -> Option<usize> {
        if !(sigma > self.r && sigma <= self.delta) {
            return None;
        }
        (1..=self.l).find(|&j| sigma <= self.hi(j))
    }
}

pub fn build_grid(r: f64, delta: f64, q: f64) -> Result<PeelingGrid> {
    if !(r > 0.0 && r < delta && delta <= 1.0) {
        return domain(format!("grid needs 0 < r < δ ≤ 1, got r={r}, δ={delta}"));
    }
    if !(q > 1.0 && q <= 2.0) {
        return domain(format!("grid ratio must lie in (1, 2], got {q}"));
    }
    let l = ceil_log(delta / r, q).max(1);
    let rho = (1..=l).map(|j| r * q.powi(j as i32)).collect();
    Ok(PeelingGrid { r, delta, q, rho, l })
}

/// Slowly varying factors L(u) for φ(t) = t^α L(1/t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SlowVarying {
    /// (log(u ∨ e))^β
    Log { beta: f64 },
    /// (log(log u ∨ e))^β
    LogLog { beta: f64 },
}

impl SlowVarying {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            SlowVarying::Log { beta } => u.max(std::f64::consts::E).ln().powf(beta),
            SlowVarying::LogLog { beta } => {
                let lu = if u > 1.0 { u.ln() } else { 0.0 };
                lu.max(std::f64::consts::E).ln().powf(beta)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormWeight {
    Power { alpha: f64 },
    PowerSlowVary { alpha: f64, slow: SlowVarying },
}

impl NormWeight {
    pub fn identity() -> Self {
        NormWeight::Power { alpha: 1.0 }
    }

    pub fn constant() -> Self {
        NormWeight::Power { alpha: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            NormWeight::Power { alpha } => {
                if alpha == 0.0 {
                    1.0
                } else {
                    t.powf(alpha)
                }
            }
            NormWeight::PowerSlowVary { alpha, slow } => {
                if t <= 0.0 {
                    0.0
                } else {
                    t.powf(alpha) * slow.eval(1.0 / t)
                }
            }
        }
    }

    /// φ_q(σ) = φ(hi_j) on the shell containing σ.
    pub fn stepped(&self, grid: &PeelingGrid, sigma: f64) -> Option<f64> {
        grid.shell_of(sigma).map(|j| self.eval(grid.hi(j)))
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = match *self {
            NormWeight::Power { alpha } | NormWeight::PowerSlowVary { alpha, .. } => alpha,
        };
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return domain(format!("weight exponent must be ≥ 0, got {alpha}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub psi: f64,
    pub envelope_sq: f64,
    pub vbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceProxy {
    Envelope,
    PsiBased,
    Min,
}

pub fn variance_proxy(rho: f64, psi: f64, envelope_sq: f64, policy: VarianceProxy) -> f64 {
    let by_psi = rho * rho + 16.0 * psi;
    match policy {
        VarianceProxy::Envelope => envelope_sq,
        VarianceProxy::PsiBased => by_psi,
        VarianceProxy::Min => envelope_sq.min(by_psi),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SjStrategy {
    ConstantLogL { k_prime: f64 },
    Geometric { s: f64, alpha: f64 },
    LogLogShift { s_n: f64 },
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SjPlan {
    pub s: Vec<f64>,
    /// K Σ_j e^{−s_j/K} over the grid.
    pub exact_prob: f64,
    /// Closed-form tail bound attached to the strategy, when one exists.
    pub tail_bound: Option<f64>,
}

/// Sum bounds for s_j = s q^{αj}: K/(q^α−1)(1/s)e^{−s/K} for j ≥ 1 and
/// K q^α/(q^α−1)(1/s)e^{−s/(Kq^α)}, both without the outer K.
pub fn geometric_tail_bounds(s: f64, alpha: f64, q: f64, k: f64) -> (f64, f64) {
    let qa = q.powf(alpha);
    let from_one = k / (qa - 1.0) / s * (-s / k).exp();
    let shifted = k * qa / (qa - 1.0) / s * (-s / (k * qa)).exp();
    (from_one, shifted)
}

pub fn sj_strategy(grid: &PeelingGrid, strategy: &SjStrategy, k: f64) -> Result<SjPlan> {
    let l = grid.l;
    if l == 0 {
        return Err(Error::Domain("empty grid".into()));
    }
    let (s, tail_bound) = match strategy {
        SjStrategy::ConstantLogL { k_prime } => {
            if *k_prime <= 0.0 {
                return domain("K′ must be positive");
            }
            let v = k_prime * (l as f64).ln();
            (vec![v; l], Some(k * (l as f64).powf(1.0 - k_prime / k)))
        }
        SjStrategy::Geometric { s, alpha } => {
            if *s <= 0.0 || *alpha <= 0.0 {
                return domain("geometric s_j needs s, α > 0");
            }
            let v = (1..=l).map(|j| s * grid.q.powf(alpha * j as f64)).collect();
            let (_, shifted) = geometric_tail_bounds(*s, *alpha, grid.q, k);
            (v, Some(k * shifted))
        }
        SjStrategy::LogLogShift { s_n } => {
            if *s_n <= 0.0 {
                return domain("s_n must be positive");
            }
            let q = grid.q;
            let v = (1..=l)
                .map(|j| {
                    let lq = (q * grid.delta / grid.hi(j)).ln() / q.ln();
                    s_n + k * lq.max(1.0).ln()
                })
                .collect();
            (v, None)
        }
        SjStrategy::Custom(v) => {
            if v.iter().any(|&x| !(x > 0.0)) {
                return domain("custom s_j must be positive");
            }
            (v.clone(), None)
        }
    };
    let exact_prob = k * s.iter().map(|&x| (-x / k).exp()).sum::<f64>();
    Ok(SjPlan { s, exact_prob, tail_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Poisson,
    Gaussian,
}

/// One shell's contribution: Poisson 2s/(nφ log(s/(nV))) when s > 2nV, else
/// Gaussian 2√(sV/(nφ²)). V = 0 in the Poisson branch gives 0.
pub fn shell_radius(s: f64, vbar: f64, phi: f64, n: f64) -> (f64, Branch) {
    if s > 2.0 * n * vbar {
        if vbar <= 0.0 {
            return (0.0, Branch::Poisson);
        }
        let arg = s / (n * vbar);
        assert!(arg > 1.0);
        (2.0 * s / (n * phi * arg.ln()), Branch::Poisson)
    } else {
        (2.0 * (s * vbar / (n * phi * phi)).sqrt(), Branch::Gaussian)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    pub value: f64,
    pub branches: Vec<Branch>,
}

pub fn tau_radius(
    grid: &PeelingGrid,
    weight: &NormWeight,
    stats: &[SliceStats],
    s: &[f64],
    n: usize,
) -> Result<TauReport> {
    if stats.len() != grid.l || s.len() != grid.l {
        return domain(format!(
            "expected {} shells, got {} stats and {} s_j",
            grid.l,
            stats.len(),
            s.len()
        ));
    }
    if s.iter().any(|&x| !(x > 0.0)) {
        return domain("s_j must be positive");
    }
    let mut value = 0.0_f64;
    let mut branches = Vec::with_capacity(grid.l);
    for j in 1..=grid.l {
        let phi = weight.eval(grid.hi(j));
        let (v, b) = shell_radius(s[j - 1], stats[j - 1].vbar, phi, n as f64);
        value = value.max(v);
        branches.push(b);
    }
    Ok(TauReport { value, branches })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    /// Universal constant K kept symbolic; rates and shapes only.
    Shape { k: f64 },
    /// One-sided certificates from Bousquet's inequality with numeric constants.
    Explicit,
}

impl Mode {
    pub fn shape() -> Self {
        Mode::Shape { k: 1.0 }
    }

    fn k(&self) -> f64 {
        match *self {
            Mode::Shape { k } => k,
            Mode::Explicit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub n: usize,
    pub s: Vec<f64>,
    pub mode: Mode,
}

/// A deviation certificate: the statistic is claimed to satisfy
/// scale·(center + radius) ≥ sup (upper) or |sup − center| < radius (two-sided)
/// outside an event of probability `prob_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub center: f64,
    pub radius: f64,
    pub scale: f64,
    pub prob_bound: f64,
    pub prob_raw: f64,
    pub vacuous: bool,
    pub one_sided: bool,
    pub mode: Mode,
    pub regime: String,
    pub constants_used: Vec<(String, f64)>,
}

impl BoundReport {
    fn new(center: f64, radius: f64, prob: f64, mode: Mode, regime: impl Into<String>) -> Self {
        BoundReport {
            center,
            radius: radius.max(0.0),
            scale: 1.0,
            prob_bound: prob.min(1.0),
            prob_raw: prob,
            vacuous: prob >= 1.0,
            one_sided: matches!(mode, Mode::Explicit),
            mode,
            regime: regime.into(),
            constants_used: Vec::new(),
        }
    }

    fn with(mut self, name: &str, value: f64) -> Self {
        self.constants_used.push((name.to_string(), value));
        self
    }

    /// Level the statistic must reach for the upper tail event.
    pub fn upper_threshold(&self) -> f64 {
        self.scale * (self.center + self.radius)
    }
}

/// Normalized Bousquet deviation for one class with sup-variance σ², mean ψ
/// and functions in [0, 1]: √(2t(σ² + 2ψ)/n) + t/(3n).
pub fn bousquet_deviation(t: f64, sigma_sq: f64, psi: f64, n: f64) -> f64 {
    (2.0 * t * (sigma_sq + 2.0 * psi) / n).sqrt() + t / (3.0 * n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subdivision {
    /// stats[j][k] for shell j (0-based) and piece k.
    pub stats: Vec<Vec<SliceStats>>,
    pub s: Vec<Vec<f64>>,
}

pub fn concentration_certificate(
    grid: &PeelingGrid,
    weight: &NormWeight,
    stats: &[SliceStats],
    query: &BoundQuery,
    subdivided: Option<&Subdivision>,
) -> Result<BoundReport> {
    let n = query.n as f64;
    if query.n == 0 {
        return domain("n must be at least 1");
    }
    let pieces: Vec<Vec<(SliceStats, f64)>> = match subdivided {
        None => {
            if stats.len() != grid.l || query.s.len() != grid.l {
                return domain("stats and s_j must have one entry per shell");
            }
            stats.iter().zip(&query.s).map(|(st, &s)| vec![(*st, s)]).collect()
        }
        Some(sub) => {
            if sub.stats.len() != grid.l || sub.s.len() != grid.l {
                return domain("subdivision must have one row per shell");
            }
            let mut rows = Vec::with_capacity(grid.l);
            for (st, s) in sub.stats.iter().zip(&sub.s) {
                if st.len() != s.len() || st.is_empty() {
                    return domain("each shell needs matching, nonempty pieces");
                }
                rows.push(st.iter().copied().zip(s.iter().copied()).collect());
            }
            rows
        }
    };
    if pieces.iter().flatten().any(|&(_, s)| !(s > 0.0)) {
        return domain("s_j must be positive");
    }
    let mut beta = 0.0_f64;
    let mut radius = 0.0_f64;
    let mut prob = 0.0_f64;
    let mut poisson = 0usize;
    let k = query.mode.k();
    for (j, row) in pieces.iter().enumerate() {
        let hi = grid.hi(j + 1);
        let phi = weight.eval(hi);
        for &(st, s) in row {
            beta = beta.max(st.psi / phi);
            match query.mode {
                Mode::Shape { .. } => {
                    let (v, b) = shell_radius(s, st.vbar, phi, n);
                    radius = radius.max(v);
                    poisson += (b == Branch::Poisson) as usize;
                    prob += (-s / k).exp();
                }
                Mode::Explicit => {
                    radius = radius.max(bousquet_deviation(s, hi * hi, st.psi, n) / phi);
                    prob += (-s).exp();
                }
            }
        }
    }
    let prob = k * prob;
    let regime = match (query.mode, subdivided.is_some()) {
        (Mode::Explicit, _) => "explicit one-sided Bousquet per shell".to_string(),
        (Mode::Shape { .. }, false) => format!("peeling τ ({poisson} Poisson shells)"),
        (Mode::Shape { .. }, true) => format!("subdivided peeling τ̄ ({poisson} Poisson pieces)"),
    };
    Ok(BoundReport::new(beta, radius, prob, query.mode, regime)
        .with("K", k)
        .with("shells", grid.l as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleLayerCase {
    /// ρ/φ(ρ) nonincreasing
    PhiOverTDecreasing,
    /// ρ/φ(ρ) nondecreasing
    PhiOverTIncreasing,
}

/// One application of the concentration inequality to the rescaled union of
/// shells. `psi_tilde` majorizes ρ ↦ E‖P_n − P‖ over σ ≤ ρ.
#[allow(clippy::too_many_arguments)]
pub fn single_layer_bound(
    weight: &NormWeight,
    psi_tilde: &dyn Fn(f64) -> f64,
    lambda: f64,
    n: usize,
    r: f64,
    delta: f64,
    q: f64,
    s: f64,
    case: SingleLayerCase,
    k: f64,
) -> Result<BoundReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return domain("λ must lie in (0, 1)");
    }
    if !(s > 0.0) {
        return domain("s must be positive");
    }
    let grid = build_grid(r, delta, q)?;
    let mut rhos = vec![r];
    rhos.extend((1..=grid.l).map(|j| grid.hi(j)));
    let ratio = |rho: f64| psi_tilde(rho) / weight.eval(rho).powf(lambda);
    for w in rhos.windows(2) {
        let (a, b) = (ratio(w[0]), ratio(w[1]));
        if b > a * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Premise(format!(
                "ψ̃/φ^λ increases between {} and {}",
                w[0], w[1]
            )));
        }
    }
    let phi_r = weight.eval(r);
    let c: f64 = rhos.iter().map(|&rho| (phi_r / weight.eval(rho)).powf(1.0 - lambda)).sum();
    let n_f = n as f64;
    let psi_r = psi_tilde(r);
    let (radius, branch, c_phi) = match case {
        SingleLayerCase::PhiOverTDecreasing => {
            let big_r = 1.0 + 16.0 * c * psi_r / (r * r);
            let x = s / (n_f * r * r);
            if x > 2.0 * big_r {
                let v = 2.0 * s / (n_f * phi_r * (x / big_r).ln());
                (v, Branch::Poisson, f64::NAN)
            } else {
                let v = 2.0 * (s / n_f * r * r / (phi_r * phi_r) * big_r).sqrt();
                (v, Branch::Gaussian, f64::NAN)
            }
        }
        SingleLayerCase::PhiOverTIncreasing => {
            let phi_d = weight.eval(delta);
            let c_phi = delta * delta / (phi_d * phi_d);
            let w = c_phi + 16.0 * c * psi_r / (phi_r * phi_r);
            let x = s / (n_f * phi_r * phi_r);
            if x > 2.0 * w {
                let v = 2.0 * s / (n_f * phi_r * (x / w).ln());
                (v, Branch::Poisson, c_phi)
            } else {
                let v = 2.0 * (s / n_f * w).sqrt();
                (v, Branch::Gaussian, c_phi)
            }
        }
    };
    let mode = Mode::Shape { k };
    let rep = BoundReport::new(
        f64::NAN,
        radius,
        k * (-s / k).exp(),
        mode,
        format!("single layer, {:?}, {:?} branch", case, branch),
    )
    .with("c_{q,λ,φ}", c)
    .with("ψ̃(r)", psi_r);
    Ok(if c_phi.is_nan() { rep } else { rep.with("c_φ", c_phi) })
}

/// Upper and lower certificates for sup |P_n f/Pf − 1|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPair {
    pub upper: BoundReport,
    pub lower: Option<BoundReport>,
}

/// Ratio bound with φ(t) = t² over r² < Pf ≤ δ (σ = √Pf).
pub fn ratio_bound_t2(
    n: usize,
    r: f64,
    delta: f64,
    q: f64,
    beta: f64,
    s: f64,
    mode: Mode,
) -> Result<RatioPair> {
    if !(s > 0.0) || n == 0 || beta < 0.0 {
        return domain("ratio bound needs s > 0, n ≥ 1, β ≥ 0");
    }
    let grid = build_grid(r, delta.sqrt(), q)?;
    let n_f = n as f64;
    let nr2 = n_f * r * r;
    match mode {
        Mode::Shape { k } => {
            let v = 1.0 + 16.0 * beta;
            let x = s / (nr2 * v);
            let (radius, regime) = if x > 2.0 {
                (2.0 * s / (nr2 * x.max(2.0).ln()), "Poisson")
            } else {
                (2.0 * (s / nr2 * v).sqrt(), "Gaussian")
            };
            let prob = k * k / (q * q - 1.0) / s * (-s / k).exp();
            let mut upper = BoundReport::new(beta, radius, prob, mode, format!("t² ratio, {regime}"))
                .with("K", k)
                .with("1+16β", v);
            upper.scale = q;
            let lower = BoundReport::new(beta, radius, prob, mode, format!("t² ratio lower, {regime}"))
                .with("K", k)
                .with("1+16β", v);
            Ok(RatioPair { upper, lower: Some(lower) })
        }
        Mode::Explicit => {
            let radius = (2.0 * s * (1.0 + 2.0 * beta) / nr2).sqrt() + s / (3.0 * nr2);
            let prob: f64 = (1..=grid.l)
                .map(|j| {
                    let h = grid.hi(j);
                    (-s * h * h / (r * r)).exp()
                })
                .sum();
            let mut upper = BoundReport::new(beta, radius, prob, mode, "t² ratio, explicit Bousquet shells t_j = s ρ_j²/r²")
                .with("shells", grid.l as f64);
            upper.scale = q * q;
            Ok(RatioPair { upper, lower: None })
        }
    }
}

/// Explicit one-sided certificate for φ(t) = t^α with s_j = s + 2 log j and
/// ψ_j ≤ β φ(ρ_j).
fn explicit_power(grid: &PeelingGrid, alpha: f64, n: usize, beta: f64, s: f64, label: &str) -> BoundReport {
    let n_f = n as f64;
    let mut radius = 0.0_f64;
    let mut prob = 0.0_f64;
    for j in 1..=grid.l {
        let hi = grid.hi(j);
        let phi = hi.powf(alpha);
        let sj = s + 2.0 * (j as f64).ln();
        radius = radius.max(bousquet_deviation(sj, hi * hi, beta * phi, n_f) / phi);
        prob += (-sj).exp();
    }
    BoundReport::new(beta, radius, prob, Mode::Explicit, format!("{label}, explicit Bousquet s_j = s + 2 log j"))
        .with("shells", grid.l as f64)
}

/// c_q = max_{1≤j≤l} (log j)/q^j.
pub fn c_q(q: f64, l: usize) -> f64 {
    (1..=l).map(|j| (j as f64).ln() / q.powi(j as i32)).fold(0.0, f64::max)
}

/// Ratio bound with φ(t) = t.
#[allow(clippy::too_many_arguments)]
pub fn ratio_bound_t1(
    n: usize,
    r: f64,
    delta: f64,
    q: f64,
    beta: f64,
    s: f64,
    t: f64,
    mode: Mode,
) -> Result<BoundReport> {
    if !(s > 0.0 && t > 0.0) || n == 0 || beta < 0.0 {
        return domain("ratio bound needs s, t > 0, n ≥ 1, β ≥ 0");
    }
    let grid = build_grid(r, delta, q)?;
    let k = match mode {
        Mode::Explicit => return Ok(explicit_power(&grid, 1.0, n, beta, s, "φ(t)=t")),
        Mode::Shape { k } => k,
    };
    let n_f = n as f64;
    let cq = c_q(q, grid.l);
    let ll = ((q * delta / r).ln() / q.ln()).ln();
    let core = s + 2.0 * k * ll;
    let gauss = 2.0 * 17f64.sqrt() * (core / n_f).sqrt();
    let poisson = 10.0 * (s / q + 2.0 * cq * k).sqrt() * core.sqrt()
        / (n_f * r * (((5.0 * s / q + 10.0 * cq * k) / (17.0 * n_f * r * r)).max(10.0)).ln());
    let b_n = poisson.max(gauss);
    let simplified = r.max(beta) >= (core / (34.0 * n_f)).sqrt();
    let base = if simplified { gauss } else { b_n };
    let rep = if beta <= r {
        let tag = if simplified { "case (a), Poisson term dropped" } else { "case (a)" };
        BoundReport::new(beta, base, 2.0 * k * (-s).exp(), mode, format!("φ(t)=t {tag}"))
    } else {
        let p1 = 2.0 * t / (n_f * r * ((t / (17.0 * n_f * r * beta)).max(2.0)).ln());
        let p2 = 2.0 * 17f64.sqrt() * (t * beta / (n_f * r)).sqrt();
        let radius = p1.max(p2).max(base);
        let prob = k * k / (q - 1.0) / t * (-t / k).exp() + 2.0 * k * (-s).exp();
        let tag = if simplified { "case (b), Poisson term dropped" } else { "case (b)" };
        BoundReport::new(beta, radius, prob, mode, format!("φ(t)=t {tag}"))
    };
    Ok(rep.with("K", k).with("c_q", cq).with("B_n", b_n))
}

/// c_{q,α} = sup_{0<u≤δq} u^{2(1−α)} log log_q(q²δ/u), by log-grid scan and
/// golden-section refinement, inflated by 1e-9 relative.
pub fn c_q_alpha(q: f64, alpha: f64, delta: f64) -> f64 {
    let top = delta * q;
    let f = |u: f64| {
        let lq = (q * q * delta / u).ln() / q.ln();
        u.powf(2.0 * (1.0 - alpha)) * lq.max(1.0).ln()
    };
    let m = 4000;
    let lo_exp = -40.0_f64;
    let pts: Vec<f64> = (0..=m).map(|i| top * (lo_exp * (1.0 - i as f64 / m as f64)).exp()).collect();
    let (mut bi, mut bv) = (0usize, f64::NEG_INFINITY);
    for (i, &u) in pts.iter().enumerate() {
        let v = f(u);
        if v > bv {
            bv = v;
            bi = i;
        }
    }
    let mut a = pts[bi.saturating_sub(1)].ln();
    let mut b = pts[(bi + 1).min(m)].ln();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1.exp()) < f(x2.exp()) {
            a = x1;
        } else {
            b = x2;
        }
    }
    bv.max(f((0.5 * (a + b)).exp())) * (1.0 + 1e-9)
}

/// Ratio bounds with φ(t) = t^α, α ∈ (0,1) ∪ (1,2). `t` is the second tail
/// parameter of the α < 1 case (b); `None` uses s.
#[allow(clippy::too_many_arguments)]
pub fn ratio_bound_talpha(
    n: usize,
    r: f64,
    delta: f64,
    q: f64,
    beta: f64,
    s: f64,
    t: Option<f64>,
    alpha: f64,
    mode: Mode,
) -> Result<BoundReport> {
    if !(alpha > 0.0 && alpha < 2.0 && alpha != 1.0) {
        return domain(format!("α must lie in (0,1) ∪ (1,2), got {alpha}"));
    }
    if !(s > 0.0) || n == 0 || beta < 0.0 {
        return domain("ratio bound needs s > 0, n ≥ 1, β ≥ 0");
    }
    let grid = build_grid(r, delta, q)?;
    let k = match mode {
        Mode::Explicit => return Ok(explicit_power(&grid, alpha, n, beta, s, &format!("φ(t)=t^{alpha}"))),
        Mode::Shape { k } => k,
    };
    let n_f = n as f64;
    let ra = r.powf(alpha);
    if alpha > 1.0 {
        let m = r.powf(2.0 - alpha).max(beta);
        let pois = 10.0 * s / (n_f * ra * ((s / (17.0 * n_f * ra * m)).max(10.0)).ln());
        let gauss = 2.0 * 17f64.sqrt() * (s * m / (n_f * ra)).sqrt();
        let tau = 2.0 * (alpha - 1.0);
        let prob = k * k / (q.powf(tau) - 1.0) / s * (-s / k).exp();
        let branch = if pois > gauss { "Poisson" } else { "Gaussian" };
        return Ok(BoundReport::new(beta, pois.max(gauss), prob, mode, format!("φ(t)=t^α, α>1, {branch}"))
            .with("K", k)
            .with("τ", tau));
    }
    let lhs = r.max(beta.powf(1.0 / (2.0 - alpha)));
    let ll = ((q * q * delta / r).ln() / q.ln()).ln();
    let rhs = ((s + 2.0 * k * ll) / n_f).sqrt();
    if lhs < rhs {
        return Err(Error::Premise(format!(
            "r ∨ β^(1/(2−α)) = {lhs:.6e} < {rhs:.6e}"
        )));
    }
    let c = c_q_alpha(q, alpha, delta);
    let a_term = 2.0 * 17f64.sqrt() * ((s * delta.powf(2.0 * (1.0 - alpha)) + 2.0 * k * c) / n_f).sqrt();
    let rep = if beta <= r.powf(2.0 - alpha) {
        BoundReport::new(beta, a_term, 2.0 * k * (-s).exp(), mode, "φ(t)=t^α, α<1, case (a)")
    } else {
        let t = t.unwrap_or(s);
        let p1 = 2.0 * t / (n_f * ra * ((t / (17.0 * n_f * ra * beta)).max(2.0)).ln());
        let p2 = 2.0 * 17f64.sqrt() * (t * beta / (n_f * ra)).sqrt();
        let prob = k * k / (q.powf(alpha) - 1.0) / t * (-t / k).exp() + 2.0 * k * (-s).exp();
        BoundReport::new(beta, a_term.max(p1).max(p2), prob, mode, "φ(t)=t^α, α<1, case (b)")
    };
    Ok(rep.with("K", k).with("c_{q,α}", c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailKind {
    Bernstein,
    Bousquet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailOutcome {
    /// Deviation level of Σ(f(X_i) − Pf) (Bernstein: t itself).
    pub threshold: f64,
    pub prob: f64,
}

/// Bernstein: Pr{Σ(Y_i − EY_i) ≥ t} ≤ exp(−t²/(2(nσ² + t/3))) for Y_i ∈ [0,1].
/// Bousquet: Pr{Z ≥ E + √(2t(2E + nσ²)) + t/3} ≤ e^{−t}.
pub fn tail_bounds(kind: TailKind, n: usize, sigma_sq: f64, expectation_term: f64, t: f64) -> Result<TailOutcome> {
    if sigma_sq < 0.0 || expectation_term < 0.0 || t < 0.0 {
        return domain("tail bound inputs must be nonnegative");
    }
    let v = n as f64 * sigma_sq;
    Ok(match kind {
        TailKind::Bernstein => {
            let prob = if t == 0.0 { 1.0 } else { (-t * t / (2.0 * (v + t / 3.0))).exp() };
            TailOutcome { threshold: t, prob }
        }
        TailKind::Bousquet => TailOutcome {
            threshold: expectation_term + (2.0 * t * (2.0 * expectation_term + v)).sqrt() + t / 3.0,
            prob: (-t).exp(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseReport {
    pub checks: Vec<PremiseCheck>,
}

impl PremiseReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&PremiseCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn monotone(xs: &[f64], up: bool) -> bool {
    xs.windows(2).all(|w| {
        let tol = 1e-12 * w[0].abs().max(w[1].abs());
        if up {
            w[1] >= w[0] - tol
        } else {
            w[1] <= w[0] + tol
        }
    })
}

/// Least-squares slope of log y against log x.
pub(crate) fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Premise scan for the almost-sure ratio bound on a grid of n values.
pub fn alexander_precheck(
    ns: &[f64],
    c: &[f64],
    r: &[f64],
    delta: &[f64],
    u: &[f64],
    phi: &NormWeight,
) -> Result<PremiseReport> {
    let m = ns.len();
    if m < 2 || [c.len(), r.len(), delta.len(), u.len()].iter().any(|&k| k != m) {
        return domain("sequences must share an index grid of length ≥ 2");
    }
    let c_over_n: Vec<f64> = c.iter().zip(ns).map(|(a, n)| a / n).collect();
    let sqrt_delta: Vec<f64> = delta.iter().zip(ns).map(|(d, n)| d * n.sqrt()).collect();
    let mut checks = vec![
        PremiseCheck { name: "c_n/n nonincreasing".into(), pass: monotone(&c_over_n, false), detail: String::new() },
        PremiseCheck { name: "r_n nonincreasing".into(), pass: monotone(r, false), detail: String::new() },
        PremiseCheck { name: "sqrt(n) delta_n nondecreasing".into(), pass: monotone(&sqrt_delta, true), detail: String::new() },
        PremiseCheck { name: "u_n nonincreasing".into(), pass: monotone(u, false), detail: String::new() },
    ];
    let mut infs = Vec::with_capacity(m);
    for i in 0..m {
        let (a, b) = (r[i], delta[i]);
        if !(a > 0.0 && a <= b) {
            return domain("need 0 < r_n ≤ δ_n");
        }
        let pts = 200;
        let inf = (0..=pts)
            .map(|k| {
                let t = a * (b / a).powf(k as f64 / pts as f64);
                c[i] * phi.eval(t) / t
            })
            .fold(f64::INFINITY, f64::min);
        infs.push(inf);
    }
    let positive = infs.iter().all(|&v| v > 0.0 && v.is_finite());
    let slope = if positive { loglog_slope(ns, &infs) } else { f64::NEG_INFINITY };
    checks.push(PremiseCheck {
        name: "inf c_n phi(t)/t bounded away from 0".into(),
        pass: positive && slope >= -0.05,
        detail: format!("min {:.4e}, log-log slope {:.4}", infs.iter().cloned().fold(f64::INFINITY, f64::min), slope),
    });
    Ok(PremiseReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_inverse(0.0), 0.0);
        assert_relative_eq!(gamma_inverse(1.0), 2f64.ln());
        assert_relative_eq!(gamma_inverse(2.0), 2.0 * 3f64.ln());
        assert_eq!(gamma(0.0), 0.0);
        assert_relative_eq!(gamma(2f64.ln()), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gamma(2.0 * 3f64.ln()), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gamma_tiny_and_huge() {
        for &x in &[1e-300, 1e-20, 1e-8, 1e6, 1e12] {
            let y = gamma(x);
            assert_relative_eq!(gamma_inverse(y), x, max_relative = 1e-10);
        }
    }

    #[test]
    fn ceil_log_exact_powers() {
        assert_eq!(ceil_log(4.0, 2.0), 2);
        assert_eq!(ceil_log(5.0, 2.0), 3);
        assert_eq!(ceil_log(1.0, 2.0), 0);
        assert_eq!(ceil_log(0.25 / 0.01, 2.0), 5);
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(0.1, 0.4, 2.0).unwrap();
        assert_eq!(g.l, 2);
        assert_relative_eq!(g.rho[0], 0.2);
        assert_relative_eq!(g.rho[1], 0.4);
        let g = build_grid(0.1, 0.5, 2.0).unwrap();
        assert_eq!(g.l, 3);
        assert_relative_eq!(g.lo(3), 0.4);
        assert_eq!(g.hi(3), 0.5);
        let g = build_grid(0.01, 0.25, 2.0).unwrap();
        assert_eq!(g.l, 5);
        assert!(build_grid(0.5, 0.4, 2.0).is_err());
        assert!(build_grid(0.1, 0.4, 2.5).is_err());
    }

    #[test]
    fn variance_proxy_examples() {
        let rho = 0.3;
        assert_relative_eq!(variance_proxy(rho, 0.0, rho * rho, VarianceProxy::Min), rho * rho);
        assert_relative_eq!(variance_proxy(rho, rho * rho / 16.0, 10.0, VarianceProxy::Min), 2.0 * rho * rho);
    }

    #[test]
    fn sj_examples() {
        let g = build_grid(1.0 / 256.0, 1.0, 2.0).unwrap();
        assert_eq!(g.l, 8);
        let p = sj_strategy(&g, &SjStrategy::ConstantLogL { k_prime: 3.0 }, 1.0).unwrap();
        assert!(p.s.iter().all(|&s| (s - 3.0 * 8f64.ln()).abs() < 1e-12));
        assert!(p.exact_prob <= 1.0 / 64.0 + 1e-15);
        let p = sj_strategy(&g, &SjStrategy::Custom(vec![1.0, 2.0, 3.0]), 1.0).unwrap();
        assert_eq!(p.s, vec![1.0, 2.0, 3.0]);
        let p = sj_strategy(&g, &SjStrategy::Geometric { s: 4.0, alpha: 2.0 }, 1.0).unwrap();
        let want = 4.0 / 3.0 / 4.0 * (-1.0f64).exp();
        assert_relative_eq!(p.tail_bound.unwrap(), want, max_relative = 1e-12);
        assert!(p.exact_prob <= want);
    }

    #[test]
    fn tau_boundary_goes_gaussian() {
        let g = build_grid(0.25, 0.5, 2.0).unwrap();
        let n = 100usize;
        let vbar = 0.04;
        let s = 2.0 * n as f64 * vbar;
        let st = [SliceStats { psi: 0.0, envelope_sq: vbar, vbar }];
        let rep = tau_radius(&g, &NormWeight::identity(), &st, &[s], n).unwrap();
        assert_eq!(rep.branches, vec![Branch::Gaussian]);
        assert_relative_eq!(rep.value, 2.0 * (s * vbar / (n as f64 * 0.25)).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn single_slice_certificate() {
        let g = build_grid(0.25, 0.5, 2.0).unwrap();
        let s = -(0.05f64).ln();
        let st = [SliceStats { psi: 0.0, envelope_sq: 0.25, vbar: 0.25 }];
        let q = BoundQuery { n: 1000, s: vec![s], mode: Mode::shape() };
        let rep = concentration_certificate(&g, &NormWeight::identity(), &st, &q, None).unwrap();
        assert_relative_eq!(rep.prob_bound, 0.05, max_relative = 1e-12);
        assert_eq!(rep.center, 0.0);
        assert_relative_eq!(rep.radius, 2.0 * (s * 0.25 / (1000.0 * 0.25)).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn t2_gaussian_example() {
        let n = 400;
        let r = 0.1;
        let s = n as f64 * r * r;
        let p = ratio_bound_t2(n, r, 0.5, 2.0, 0.0, s, Mode::shape()).unwrap();
        assert_relative_eq!(p.upper.radius, 2.0, max_relative = 1e-12);
        assert_eq!(p.upper.scale, 2.0);
        let big = ratio_bound_t2(n, r, 0.5, 2.0, 0.0, 100.0 * s, Mode::shape()).unwrap();
        assert!(big.upper.regime.contains("Poisson"));
    }

    #[test]
    fn t1_case_a_simplified() {
        let n = 10_000;
        let (r, delta, q, s) = (0.1, 0.5, 2.0, 3.0);
        let rep = ratio_bound_t1(n, r, delta, q, 0.05, s, 3.0, Mode::shape()).unwrap();
        let ll = ((q * delta / r).ln() / q.ln()).ln();
        let want = 2.0 * 17f64.sqrt() * ((s + 2.0 * ll) / n as f64).sqrt();
        assert_relative_eq!(rep.radius, want, max_relative = 1e-12);
        assert_relative_eq!(rep.prob_bound, 2.0 * (-s).exp(), max_relative = 1e-12);
    }

    #[test]
    fn c_q_degenerate() {
        assert_eq!(c_q(2.0, 1), 0.0);
    }

    #[test]
    fn talpha_small_alpha_premise() {
        let err = ratio_bound_talpha(10, 0.01, 1.0, 2.0, 0.0, 5.0, None, 0.5, Mode::shape());
        assert!(matches!(err, Err(Error::Premise(_))));
    }

    #[test]
    fn bousquet_reference_instance() {
        let (n, s2) = (1000usize, 0.01);
        let ns2 = n as f64 * s2;
        let t = tail_bounds(TailKind::Bousquet, n, s2, 6.0 * ns2, 26.0 * ns2).unwrap();
        assert!(t.threshold <= 41.0 * ns2);
        assert_relative_eq!(t.threshold, (6.0 + 26.0 + 26.0 / 3.0) * ns2, max_relative = 1e-12);
        assert_relative_eq!(t.prob, (-26.0 * ns2).exp());
        let b = tail_bounds(TailKind::Bernstein, 10, 0.25, 0.0, 0.0).unwrap();
        assert_eq!(b.prob, 1.0);
    }

    #[test]
    fn alexander_examples() {
        let ns: Vec<f64> = (1..=6).map(|k| 10f64.powi(k)).collect();
        let c: Vec<f64> = ns.iter().map(|n| n.ln().ln().max(1e-3).sqrt()).collect();
        let r: Vec<f64> = ns.iter().map(|n| 1.0 / n.sqrt()).collect();
        let d = vec![0.5; 6];
        let u: Vec<f64> = ns.iter().map(|n| 1.0 / n.ln()).collect();
        let id = NormWeight::identity();
        assert!(alexander_precheck(&ns, &c, &r, &d, &u, &id).unwrap().all_pass());
        let c2: Vec<f64> = ns.iter().map(|n| n * n).collect();
        let rep = alexander_precheck(&ns, &c2, &r, &d, &u, &id).unwrap();
        assert!(!rep.get("c_n/n nonincreasing").unwrap().pass);
        let ones = vec![1.0; 6];
        let sq = NormWeight::Power { alpha: 2.0 };
        let rep = alexander_precheck(&ns, &ones, &r, &d, &u, &sq).unwrap();
        assert!(!rep.get("inf c_n phi(t)/t bounded away from 0").unwrap().pass);
    }
}
