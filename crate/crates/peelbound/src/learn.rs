//! Margin-distribution ratios and excess-risk certificates, with the exact
//! empirical risk minimizers used to test them.

use serde::{Deserialize, Serialize};

use crate::classes::{basis, Member};
use crate::error::{domain, Error, Result};
use crate::peel::Mode;
use crate::sim::{self, Eta, Law, SampleBatch, Target};
use crate::stats::ReplicationSummary;
use crate::{par, quad, rng};

/// A distribution function on [0, ∞).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cdf {
    /// (t/s ∧ 1) ∨ 0 on [0, s].
    Uniform { scale: f64 },
    /// t^{1/θ} ∧ 1 on [0, 1] (law of X^θ for uniform X).
    Power { theta: f64 },
    /// Right-continuous step function: `cum[i]` = F(points[i]), points sorted.
    Step { points: Vec<f64>, cum: Vec<f64> },
    /// (ct ∧ 1) ∨ 0.
    Linear { slope: f64 },
    /// Identically zero.
    Zero,
}

impl Cdf {
    /// Step function with atoms `weights` at sorted `points`.
    pub fn step(points: Vec<f64>, weights: &[f64]) -> Cdf {
        let mut acc = 0.0;
        let cum = weights
            .iter()
            .map(|w| {
                acc += w;
                acc.min(1.0)
            })
            .collect();
        Cdf::Step { points, cum }
    }

    pub fn empirical(values: &[f64]) -> Cdf {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mut points = Vec::new();
        let mut cum = Vec::new();
        for (i, x) in v.into_iter().enumerate() {
            let c = (i + 1) as f64 / n;
            match points.last() {
                Some(&p) if p == x => *cum.last_mut().unwrap() = c,
                _ => {
                    points.push(x);
                    cum.push(c);
                }
            }
        }
        Cdf::Step { points, cum }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Cdf::Uniform { scale } => (t / scale).clamp(0.0, 1.0),
            Cdf::Power { theta } => {
                if t <= 0.0 {
                    0.0
                } else {
                    t.powf(1.0 / theta).min(1.0)
                }
            }
            Cdf::Linear { slope } => (slope * t).clamp(0.0, 1.0),
            Cdf::Step { points, cum } => match points.partition_point(|&p| p <= t) {
                0 => 0.0,
                k => cum[k - 1],
            },
            Cdf::Zero => 0.0,
        }
    }

    pub fn eval_left(&self, t: f64) -> f64 {
        match self {
            Cdf::Step { points, cum } => match points.partition_point(|&p| p < t) {
                0 => 0.0,
                k => cum[k - 1],
            },
            other => other.eval(t),
        }
    }

    fn is_step(&self) -> bool {
        matches!(self, Cdf::Step { .. } | Cdf::Zero)
    }

    fn atoms(&self) -> (&[f64], &[f64]) {
        match self {
            Cdf::Step { points, cum } => (points, cum),
            _ => (&[], &[]),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Cdf::Uniform { scale } => vec![*scale],
            Cdf::Linear { slope } if *slope > 0.0 => vec![1.0 / slope],
            Cdf::Power { .. } => vec![1.0],
            _ => Vec::new(),
        }
    }
}

const DOM_TOL: f64 = 1e-15;

/// Does F(t) ≤ cG(ct) hold for all t ∈ (a, b)?
///
/// Exact when either function is a step function: both sides are monotone
/// between consecutive jumps, so only piece endpoints matter. Two continuous
/// functions are compared on a dense log grid.
fn dominated(f: &Cdf, g: &Cdf, c: f64, a: f64, b: f64) -> bool {
    let ok = |lhs: f64, rhs: f64| lhs <= rhs + DOM_TOL;
    match (f.is_step(), g.is_step()) {
        (true, true) => {
            // pieces start at a and at every jump of F or of G(c·)
            if !ok(f.eval(a), c * g.eval(c * a)) {
                return false;
            }
            let (fp, _) = f.atoms();
            let (gp, _) = g.atoms();
            fp.iter()
                .copied()
                .chain(gp.iter().map(|y| y / c))
                .filter(|&t| t > a && t < b)
                .all(|t| ok(f.eval(t), c * g.eval(c * t)))
        }
        (true, false) => {
            // F constant and cG(c·) increasing on each piece: left ends
            let (fp, fc) = f.atoms();
            ok(f.eval(a), c * g.eval(c * a))
                && fp.iter().zip(fc).filter(|(&t, _)| t > a && t < b).all(|(&t, &v)| ok(v, c * g.eval(c * t)))
        }
        (false, true) => {
            // F increasing and cG(c·) constant on [x_{k−1}/c, x_k/c): right ends
            let (gp, gc) = g.atoms();
            let mut prev = f64::NEG_INFINITY;
            let mut level = 0.0;
            for (&x, &v) in gp.iter().zip(gc) {
                let (lo, hi) = (prev / c, x / c);
                if lo < b && hi > a && !ok(f.eval_left(hi.min(b)), c * level) {
                    return false;
                }
                prev = x;
                level = v;
            }
            let lo = prev / c;
            !(lo < b) || ok(f.eval_left(b.min(f64::MAX)), c * level)
        }
        (false, false) => {
            let mut cands: Vec<f64> = f.kinks();
            cands.extend(g.kinks().into_iter().map(|x| x / c));
            let top = if b.is_finite() { b } else { cands.iter().copied().fold(a.max(1.0), f64::max) * 2.0 };
            let lo = if a > 0.0 { a } else { top * 1e-9 };
            let m = 4000;
            cands.extend((0..=m).map(|k| lo * (top / lo).powf(k as f64 / m as f64)));
            ok(f.eval(a), c * g.eval(c * a)) && cands.iter().filter(|&&t| t > a && t < b).all(|&t| ok(f.eval(t), c * g.eval(c * t)))
        }
    }
}

/// M_{a,b}(F;G) = log inf{c > 1 : F(t) ≤ cG(ct), G(t) ≤ cF(ct), t ∈ (a,b)};
/// `f64::INFINITY` when no finite c works.
pub fn mult_levy_distance(f: &Cdf, g: &Cdf, a: f64, b: f64) -> Result<f64> {
    if !(a < b) || a < 0.0 {
        return domain("need 0 ≤ a < b");
    }
    let ok = |c: f64| dominated(f, g, c, a, b) && dominated(g, f, c, a, b);
    if ok(1.0) {
        return Ok(0.0);
    }
    let mut hi = 1.0_f64;
    loop {
        hi *= 2.0;
        if ok(hi.exp()) {
            break;
        }
        if hi > 64.0 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0_f64;
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if ok(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// δ_n(f;λ) = inf{δ ≥ 1/n : δ^{2α/(2+α)} F(δ) ≥ λ n^{−2/(2+α)}}, or +∞ when
/// no δ ≤ `cap` qualifies.
pub fn margin_cutoff(f: &Cdf, lambda: f64, n: usize, alpha: f64) -> Result<f64> {
    margin_cutoff_capped(f, lambda, n, alpha, 1.0)
}

pub fn margin_cutoff_capped(f: &Cdf, lambda: f64, n: usize, alpha: f64, cap: f64) -> Result<f64> {
    if !(lambda > 0.0) || n == 0 || !(alpha > 0.0 && alpha < 2.0) {
        return domain("need λ > 0, n ≥ 1 and α ∈ (0, 2)");
    }
    let nf = n as f64;
    let target = lambda * nf.powf(-2.0 / (2.0 + alpha));
    let e = 2.0 * alpha / (2.0 + alpha);
    let lhs = |d: f64| d.powf(e) * f.eval(d);
    let lo0 = 1.0 / nf;
    if lhs(lo0) >= target {
        return Ok(lo0);
    }
    if lo0 > cap || lhs(cap) < target {
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (lo0, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Score families with analytic margin distributions under uniform X.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScoreFamily {
    /// f_θ(x) = x^θ, F_f(t) = t^{1/θ} ∧ 1.
    Powers(Vec<f64>),
    /// f = lo on {x < p}, hi otherwise.
    TwoPoint { lo: f64, hi: f64, p: f64 },
}

impl ScoreFamily {
    fn size(&self) -> usize {
        match self {
            ScoreFamily::Powers(t) => t.len(),
            ScoreFamily::TwoPoint { .. } => 1,
        }
    }

    fn cdf(&self, k: usize) -> Cdf {
        match self {
            ScoreFamily::Powers(t) => Cdf::Power { theta: t[k] },
            ScoreFamily::TwoPoint { lo, hi, p } => Cdf::step(vec![*lo, *hi], &[*p, 1.0 - p]),
        }
    }

    fn scores(&self, k: usize, xs: &[f64]) -> Vec<f64> {
        match self {
            ScoreFamily::Powers(t) => xs.iter().map(|x| x.powf(t[k])).collect(),
            ScoreFamily::TwoPoint { lo, hi, p } => xs.iter().map(|&x| if x < *p { *lo } else { *hi }).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginSetup {
    /// entropy log N ≤ (D/ε)^α
    pub d: f64,
    pub alpha: f64,
    /// constants of the range cap A_n(t_n), t_n = 2Kq² log n
    pub k: f64,
    pub q: f64,
}

impl MarginSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) || !(self.d > 0.0) || !(self.k > 0.0) || !(self.q > 1.0) {
            return domain("need α ∈ (0,2), D > 0, K > 0, q > 1");
        }
        Ok(())
    }

    /// A_n(t) = D n^{1/2} / t^{(2+α)/(2α)}.
    pub fn range_cap(&self, n: usize, t: f64) -> f64 {
        self.d * (n as f64).sqrt() / t.powf((2.0 + self.alpha) / (2.0 * self.alpha))
    }

    pub fn default_t(&self, n: usize) -> f64 {
        2.0 * self.k * self.q * self.q * (n as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub n: usize,
    pub lambda: f64,
    pub summary: ReplicationSummary,
    /// (δ_n(f;λ), B) per member
    pub ranges: Vec<(f64, f64)>,
}

/// sup over the family of M_{δ_n(f;λ), B}(F_{n,f}, F_f), replicated.
pub fn margin_experiment(setup: &MarginSetup, family: &ScoreFamily, n: usize, lambda: f64, reps: usize, seed: u64) -> Result<MarginReport> {
    setup.validate()?;
    if reps == 0 || family.size() == 0 {
        return domain("need reps ≥ 1 and a nonempty family");
    }
    let b = setup.range_cap(n, setup.default_t(n));
    let ranges: Vec<(f64, f64)> = (0..family.size())
        .map(|k| Ok((margin_cutoff_capped(&family.cdf(k), lambda, n, setup.alpha, b.max(1.0))?, b)))
        .collect::<Result<_>>()?;
    let seeds: Vec<u64> = (0..reps).map(|i| rng::replicate_seed(seed, i as u64)).collect();
    let vals: Vec<Result<f64>> = par::map_indexed(reps, |i| {
        let batch = sim::draw_sample(&Law::Uniform1d, n, seeds[i])?;
        let mut best = 0.0_f64;
        for (k, &(lo, hi)) in ranges.iter().enumerate() {
            if !(lo < hi) {
                continue;
            }
            let emp = Cdf::empirical(&family.scores(k, &batch.x));
            best = best.max(mult_levy_distance(&emp, &family.cdf(k), lo, hi)?);
        }
        Ok(best)
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(MarginReport { n, lambda, summary: ReplicationSummary::from_values(vals, seeds), ranges })
}

/// Frequencies of the two ratio events over δ_j = q^{−j} ∈ [1/n, A_n(t)],
/// with the stated bound K q²/(q²−1) e^{−t/(Kq²)}/t for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginViolations {
    pub lower_freq: f64,
    pub upper_freq: f64,
    pub bound: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn margin_violations(
    setup: &MarginSetup,
    family: &ScoreFamily,
    n: usize,
    sigma: f64,
    c: f64,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<MarginViolations> {
    setup.validate()?;
    let q = setup.q;
    let lambda = setup.d.powf(2.0 * setup.alpha / (2.0 + setup.alpha)) / (sigma * sigma);
    let cap = setup.range_cap(n, t);
    let mut deltas = Vec::new();
    let mut d = 1.0;
    while d >= 1.0 / n as f64 {
        if d <= cap {
            deltas.push(d);
        }
        d /= q;
    }
    let cut: Vec<f64> = (0..family.size())
        .map(|k| margin_cutoff_capped(&family.cdf(k), lambda, n, setup.alpha, 1.0))
        .collect::<Result<_>>()?;
    let seeds: Vec<u64> = (0..reps).map(|i| rng::replicate_seed(seed, i as u64)).collect();
    let flags: Vec<Result<(bool, bool)>> = par::map_indexed(reps, |i| {
        let batch = sim::draw_sample(&Law::Uniform1d, n, seeds[i])?;
        let (mut lo, mut up) = (false, false);
        for k in 0..family.size() {
            let f = family.cdf(k);
            let emp = Cdf::empirical(&family.scores(k, &batch.x));
            for &d in deltas.iter().filter(|&&d| d >= cut[k]) {
                if f.eval(d) * (1.0 - c * sigma) >= emp.eval((1.0 + sigma) * d) && c * sigma < 1.0 {
                    lo = true;
                }
                if emp.eval(d) >= (1.0 + c * sigma) * f.eval((1.0 + sigma) * d) {
                    up = true;
                }
            }
        }
        Ok((lo, up))
    });
    let flags = flags.into_iter().collect::<Result<Vec<_>>>()?;
    let r = reps as f64;
    let k = setup.k;
    Ok(MarginViolations {
        lower_freq: flags.iter().filter(|f| f.0).count() as f64 / r,
        upper_freq: flags.iter().filter(|f| f.1).count() as f64 / r,
        bound: (k * q * q / (q * q - 1.0) * (-t / (k * q * q)).exp() / t).min(1.0),
    })
}

/// γ_n(r,s) = β + [2√((s/(nr))(Δ + 16β)) ∨ 2s/(nr log((s/(nr(Δ+16β))) ∨ 2))].
/// With Δ + 16β = 0 the log is taken as log 2.
pub fn gamma_n(r: f64, s: f64, n: usize, beta: f64, delta: f64) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) || n == 0 || beta < 0.0 || delta < 0.0 {
        return domain("need r, s > 0, n ≥ 1 and nonnegative β, Δ");
    }
    let nr = n as f64 * r;
    let v = delta + 16.0 * beta;
    let gauss = 2.0 * (s / nr * v).sqrt();
    let ratio = if v > 0.0 { s / (nr * v) } else { f64::INFINITY };
    let lg = if ratio.is_finite() { ratio.max(2.0).ln() } else { 2f64.ln() };
    Ok(beta + gauss.max(2.0 * s / (nr * lg)))
}

/// Capacity-type function τ(·) used by the critical radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TauModel {
    Constant(f64),
    /// τ(r) = 1/r
    Inverse,
    /// τ(r) = √d
    SqrtDim(f64),
}

impl TauModel {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            TauModel::Constant(c) => *c,
            TauModel::Inverse => 1.0 / r,
            TauModel::SqrtDim(d) => d.sqrt(),
        }
    }
}

/// Solves log τ(r)/r = n by bisection on log r.
pub fn critical_radius(tau: &TauModel, n: usize) -> Result<f64> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let nf = n as f64;
    let g = |r: f64| tau.eval(r).ln() / r - nf;
    match tau {
        TauModel::Constant(c) | TauModel::SqrtDim(c) if *c <= 1.0 => return Ok(0.0),
        TauModel::Constant(c) => return Ok(c.ln() / nf),
        TauModel::SqrtDim(d) => return Ok(d.sqrt().ln() / nf),
        TauModel::Inverse => {}
    }
    let (mut lo, mut hi) = (1e-300_f64.ln(), 0.0_f64);
    if g(hi.exp()) > 0.0 {
        return Ok(1.0);
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if g(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

/// Classification loss class for the explicit certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetClass {
    HalfLines,
    Intervals,
    Boxes2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ErmProblem {
    FiniteDimLs { d: usize },
    MonotoneLs,
    MarginClassification { class: SetClass, h: f64, vc: f64 },
    /// β_n(r) = b0/(√n r^{1/2}), Δ(r) = Δ₀: the generic two-parameter model.
    Model { b0: f64, delta0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub r_star: f64,
    pub prob: f64,
    /// admissible empirical-risk slack (1 − qγ)r*
    pub tolerance: f64,
    pub gamma: f64,
    pub feasible: bool,
    pub mode: Mode,
    pub constants_used: Vec<(String, f64)>,
}

fn smallest_feasible(gamma: &dyn Fn(f64) -> Result<f64>, q: f64, top: f64) -> Result<Option<(f64, f64)>> {
    let ok = |r: f64| -> Result<Option<f64>> {
        let g = gamma(r)?;
        Ok((q * g < 1.0).then_some(g))
    };
    let grid: Vec<f64> = (0..=600).map(|k| top * 10f64.powf(-(k as f64) / 50.0)).collect();
    let mut best = None;
    for &r in &grid {
        match ok(r)? {
            Some(g) => best = Some((r, g)),
            None => {
                if best.is_some() {
                    break;
                }
            }
        }
    }
    let (mut hi, mut g_hi) = match best {
        Some(b) => b,
        None => return Ok(None),
    };
    let mut lo = hi / 10f64.powf(1.0 / 50.0);
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        match ok(mid)? {
            Some(g) => {
                hi = mid;
                g_hi = g;
            }
            None => lo = mid,
        }
    }
    Ok(Some((hi, g_hi)))
}

/// Smallest r with qγ_n(r;s) < 1 and the probability of {𝓔_P(f̃_n) ≥ r}.
///
/// Shape mode uses the problem's β and Δ models with constant K:
/// prob = K q/(q−1) e^{−s/(Kq)}/s. Explicit mode is available for
/// margin classification; see [`classification_certificate`].
pub fn excess_risk_certificate(problem: &ErmProblem, n: usize, s: f64, q: f64, mode: Mode) -> Result<CertificateReport> {
    if !(q > 1.0) || !(s > 0.0) || n == 0 {
        return domain("need q > 1, s > 0, n ≥ 1");
    }
    let k = match mode {
        Mode::Shape { k } => k,
        Mode::Explicit => {
            return match problem {
                ErmProblem::MarginClassification { class, h, .. } => classification_certificate(*class, *h, n, s, q),
                _ => Err(Error::Unsupported("explicit certificates are implemented for margin classification".into())),
            }
        }
    };
    let nf = n as f64;
    let (beta, delta): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match problem.clone() {
        ErmProblem::Model { b0, delta0 } => (Box::new(move |r: f64| b0 / (nf.sqrt() * r.sqrt())), Box::new(move |_| delta0)),
        ErmProblem::FiniteDimLs { d } => {
            let lt = (d as f64).sqrt().ln().max(0.0);
            (Box::new(move |r: f64| k * (lt / r).sqrt() / nf.sqrt()), Box::new(|_| 16.0))
        }
        ErmProblem::MonotoneLs => (
            Box::new(move |r: f64| {
                let l = (1.0 / r).max(std::f64::consts::E).ln();
                let ll = l.max(std::f64::consts::E).ln();
                (k / (nf * r).sqrt() * l.powf(0.75) * ll.sqrt())
                    .max(k / (nf * r) * l.powf(1.5) * ll)
                    .max(nf.ln().sqrt() / (nf * r))
            }),
            Box::new(|_| 16.0),
        ),
        ErmProblem::MarginClassification { h, vc, .. } => (
            Box::new(move |r: f64| k * (vc / (nf * h * r) * (h / r).max(std::f64::consts::E).ln()).sqrt()),
            Box::new(move |_| 1.0 / h),
        ),
    };
    let gamma = |r: f64| gamma_n(r, s, n, beta(r), delta(r));
    let prob = (k * q / (q - 1.0) * (-s / (k * q)).exp() / s).min(1.0);
    Ok(match smallest_feasible(&gamma, q, 1.0)? {
        Some((r, g)) => CertificateReport {
            r_star: r,
            prob,
            tolerance: (1.0 - q * g) * r,
            gamma: g,
            feasible: true,
            mode,
            constants_used: vec![("K".into(), k)],
        },
        None => CertificateReport { r_star: f64::INFINITY, prob, tolerance: 0.0, gamma: f64::NAN, feasible: false, mode, constants_used: vec![("K".into(), k)] },
    })
}

/// Explicit bound on ψ_n(ρ) = E sup |(P_n − P)(f_{g₁} − f_{g₂})| over
/// classifiers with excess ≤ ρ, for interval (or half-line) decision sets
/// under an exact margin h and uniform X.
///
/// f_g − f_{g₀} = (I_C − I_{C₀})(x)(1 − 2y), and CΔC₀ is a union of at most
/// two intervals of mass ≤ u = ρ/(2h); so ψ ≤ 4 E sup_{|I|≤u} |(P_n − P)w_I|
/// with w_I = I_I(x)(1 − 2y). Snapping I to the grid k/m leaves two boundary
/// cells; a Bernstein maximal inequality over the grid intervals and cells
/// gives the bound.
pub fn classification_psi(rho: f64, h: f64, n: usize, pieces: f64) -> f64 {
    let nf = n as f64;
    let m = nf;
    let u = (rho / (2.0 * h)).min(1.0);
    let k_j = (m + 1.0) * (u * m + 2.0);
    let lj = (2.0 * k_j).ln();
    let lc = (2.0 * m).ln();
    let bern = |var: f64, l: f64| ((2.0 * nf * var * l).sqrt() + 2.0 / 3.0 * l) / nf;
    let one = bern(u + 2.0 / m, lj) + 2.0 * bern(1.0 / m, lc) + 4.0 / m;
    2.0 * pieces * one
}

/// Explicit-mode certificate for margin classification with shells
/// ρ_j = r q^j, Bousquet's inequality (range b = 2) at level t_j = s q^j,
/// and variance ≤ ρ_j/h. On the event that every shell stays below its
/// threshold, the minimizer has excess below r whenever qγ < 1, where
/// γ = max_j threshold_j/(nρ_j); the failure probability is Σ_j e^{−s q^j}.
pub fn classification_certificate(class: SetClass, h: f64, n: usize, s: f64, q: f64) -> Result<CertificateReport> {
    if !(h > 0.0 && h <= 0.5) {
        return domain("margin h must lie in (0, 1/2]");
    }
    let pieces = match class {
        SetClass::HalfLines => 1.0,
        SetClass::Intervals => 2.0,
        SetClass::Boxes2 => return Err(Error::Unsupported("explicit certificate for boxes".into())),
    };
    let nf = n as f64;
    let top = 2.0 * h;
    let b = 2.0;
    let shells = |r: f64| -> usize {
        let mut l = 1;
        while r * q.powi(l as i32) < top {
            l += 1;
        }
        l
    };
    let gamma = |r: f64| -> Result<f64> {
        let l = shells(r);
        let mut g = 0.0_f64;
        for j in 1..=l {
            let rho = r * q.powi(j as i32);
            let ez = nf * classification_psi(rho, h, n, pieces);
            let var = (rho / h).min(1.0);
            let t = s * q.powi(j as i32);
            let thr = ez + (2.0 * t * (nf * var + 2.0 * b * ez)).sqrt() + b * t / 3.0;
            g = g.max(thr / (nf * rho));
        }
        Ok(g)
    };
    let found = smallest_feasible(&gamma, q, top)?;
    let constants = vec![("b".into(), b), ("shell q".into(), q), ("s".into(), s)];
    Ok(match found {
        Some((r, g)) => {
            let l = shells(r);
            let prob: f64 = (1..=l).map(|j| (-s * q.powi(j as i32)).exp()).sum();
            CertificateReport { r_star: r, prob: prob.min(1.0), tolerance: (1.0 - q * g) * r, gamma: g, feasible: true, mode: Mode::Explicit, constants_used: constants }
        }
        None => CertificateReport { r_star: top, prob: 0.0, tolerance: 0.0, gamma: f64::NAN, feasible: false, mode: Mode::Explicit, constants_used: constants },
    })
}

/// Smallest s with Σ_{j≥1} e^{−s q^j} ≤ level (sum truncated at 400 shells).
pub fn level_to_s(level: f64, q: f64) -> f64 {
    let tail = |s: f64| (1..=400).map(|j| (-s * q.powi(j)).exp()).sum::<f64>();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while tail(hi) > level {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsFit {
    pub coef: Vec<f64>,
    pub empirical_risk: f64,
    /// ‖ĝ − g₀‖² − inf_g ‖g − g₀‖² over the span
    pub excess: f64,
    pub l2_error: f64,
    pub projected: bool,
    pub ridge: bool,
}

fn cholesky_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> bool {
    let d = b.len();
    for j in 0..d {
        let mut s = a[j][j];
        for k in 0..j {
            s -= a[j][k] * a[j][k];
        }
        if s <= 1e-14 {
            return false;
        }
        let l = s.sqrt();
        a[j][j] = l;
        for i in j + 1..d {
            let mut t = a[i][j];
            for k in 0..j {
                t -= a[i][k] * a[j][k];
            }
            a[i][j] = t / l;
        }
    }
    for i in 0..d {
        let mut t = b[i];
        for k in 0..i {
            t -= a[i][k] * b[k];
        }
        b[i] = t / a[i][i];
    }
    for i in (0..d).rev() {
        let mut t = b[i];
        for k in i + 1..d {
            t -= a[k][i] * b[k];
        }
        b[i] = t / a[i][i];
    }
    true
}

fn target_coefs(target: &Target, d: usize) -> Vec<f64> {
    match target {
        Target::Span(c) => (0..d).map(|k| c.get(k).copied().unwrap_or(0.0)).collect(),
        Target::Step { breaks, .. } => (0..d).map(|k| quad::integrate_pieces(|x| target.eval(x) * basis(k, x), 0.0, 1.0, breaks)).collect(),
    }
}

fn target_sq_norm(target: &Target) -> f64 {
    match target {
        Target::Span(c) => c.iter().map(|a| a * a).sum(),
        Target::Step { breaks, levels } => {
            let mut edges = vec![0.0];
            edges.extend(breaks.iter().copied());
            edges.push(1.0);
            levels.iter().zip(edges.windows(2)).map(|(l, w)| l * l * (w[1] - w[0])).sum()
        }
    }
}

/// Least squares on the first `d` cosine functions; coefficients are shrunk
/// toward the constant fit if the fit leaves [0, 1].
pub fn fit_finite_dim_ls(batch: &SampleBatch, d: usize) -> Result<LsFit> {
    let target = match &batch.law {
        Law::Regression { target, .. } => target.clone(),
        _ => return domain("least squares needs a regression batch"),
    };
    if d == 0 || d > batch.n {
        return domain("need 1 ≤ d ≤ n");
    }
    let n = batch.n as f64;
    let mut gram = vec![vec![0.0; d]; d];
    let mut rhs = vec![0.0; d];
    let mut row = vec![0.0; d];
    for (&x, &y) in batch.x.iter().zip(&batch.y) {
        for (k, r) in row.iter_mut().enumerate() {
            *r = basis(k, x);
        }
        for i in 0..d {
            rhs[i] += row[i] * y / n;
            for j in 0..=i {
                gram[i][j] += row[i] * row[j] / n;
            }
        }
    }
    let mut ridge = false;
    let mut coef = rhs.clone();
    let mut a = gram.clone();
    if !cholesky_solve(&mut a, &mut coef) {
        ridge = true;
        let mut a = gram.clone();
        for (i, r) in a.iter_mut().enumerate() {
            r[i] += 1e-10;
        }
        coef = rhs.clone();
        if !cholesky_solve(&mut a, &mut coef) {
            return Err(Error::Domain("singular Gram matrix".into()));
        }
    }
    let eval = |c: &[f64], x: f64| c.iter().enumerate().map(|(k, a)| a * basis(k, x)).sum::<f64>();
    let grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
    let inside = |c: &[f64]| grid.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&eval(c, x)));
    let mut projected = false;
    if !inside(&coef) {
        projected = true;
        let c0 = coef[0].clamp(0.0, 1.0);
        let shrink = |t: f64| -> Vec<f64> {
            let mut c: Vec<f64> = coef.iter().map(|a| a * t).collect();
            c[0] = c0 + t * (coef[0] - c0);
            c
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(&shrink(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        coef = shrink(lo);
    }
    let risk = batch.x.iter().zip(&batch.y).map(|(&x, &y)| (y - eval(&coef, x)).powi(2)).sum::<f64>() / n;
    let tc = target_coefs(&target, d);
    let excess: f64 = coef.iter().zip(&tc).map(|(a, b)| (a - b) * (a - b)).sum();
    let proj: f64 = tc.iter().map(|a| a * a).sum();
    let l2 = excess + (target_sq_norm(&target) - proj).max(0.0);
    Ok(LsFit { coef, empirical_risk: risk, excess, l2_error: l2, projected, ridge })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoFit {
    /// fitted level on [x_(i), x_(i+1)); the first level extends to 0
    pub levels: Vec<f64>,
    pub empirical_risk: f64,
    /// empirical risk of the clipped fit minus that of the unclipped fit
    pub clip_gap: f64,
    /// (log n)^{3/2} log log n/(2n)
    pub tolerance: f64,
    pub excess: f64,
}

/// ∫₀¹ (ĝ − g₀)² for the step fit on sorted `xs` against a step target.
fn step_l2(xs: &[f64], levels: &[f64], target: &Target) -> f64 {
    let mut cuts: Vec<f64> = xs[1..].to_vec();
    if let Target::Step { breaks, .. } = target {
        cuts.extend(breaks.iter().copied());
    }
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let i = xs.partition_point(|&x| x <= mid).saturating_sub(1);
        let g = levels[i];
        total += match target {
            Target::Step { .. } => (g - target.eval(mid)).powi(2) * (b - a),
            Target::Span(_) => quad::integrate(|x| (g - target.eval(x)).powi(2), a, b),
        };
    }
    total
}

pub fn fit_isotonic(batch: &SampleBatch) -> Result<IsoFit> {
    let target = match &batch.law {
        Law::Regression { target, .. } => target.clone(),
        _ => return domain("isotonic fit needs a regression batch"),
    };
    let n = batch.n as f64;
    let raw = sim::pava(&batch.y, &vec![1.0; batch.y.len()]);
    let levels: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let risk = |g: &[f64]| batch.y.iter().zip(g).map(|(y, v)| (y - v).powi(2)).sum::<f64>() / n;
    let (r_clip, r_raw) = (risk(&levels), risk(&raw));
    let ln = n.ln();
    Ok(IsoFit {
        empirical_risk: r_clip,
        clip_gap: r_clip - r_raw,
        tolerance: ln.powf(1.5) * ln.max(std::f64::consts::E).ln() / (2.0 * n),
        excess: step_l2(&batch.x, &levels, &target),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFit {
    pub set: Member,
    pub training_error: f64,
    pub excess: f64,
}

fn class_excess(eta: &Eta, set: &Member) -> Result<f64> {
    match eta {
        Eta::Constant(p) => {
            let mass = match set {
                Member::HalfLine(t) => *t,
                Member::Interval(a, b) => (b - a).max(0.0),
                Member::Box(c) => c.iter().product(),
                _ => return domain("unsupported set"),
            };
            Ok(if *p >= 0.5 { (2.0 * p - 1.0) * (1.0 - mass) } else { (1.0 - 2.0 * p) * mass })
        }
        Eta::Margin { set: bayes, h } => {
            let sym = match (bayes, set) {
                (Member::HalfLine(a), Member::HalfLine(b)) => (a - b).abs(),
                (Member::Interval(a0, b0), Member::Interval(a, b)) => {
                    let inter = (b0.min(*b) - a0.max(*a)).max(0.0);
                    (b0 - a0) + (b - a).max(0.0) - 2.0 * inter
                }
                (Member::Box(c0), Member::Box(c)) => {
                    let inter: f64 = c0.iter().zip(c).map(|(u, v)| u.min(*v)).product();
                    c0.iter().product::<f64>() + c.iter().product::<f64>() - 2.0 * inter
                }
                _ => return domain("decision set and Bayes set must share a class"),
            };
            Ok(2.0 * h * sym)
        }
    }
}

/// Exact training-error minimization over half-lines [0,t], intervals [a,b]
/// (linear-time maximum subarray on sorted x) or anchored boxes [0,x] in
/// d = 2 (cubic enumeration). Cut points are midpoints between neighbours.
pub fn fit_margin_classifier(batch: &SampleBatch, class: SetClass) -> Result<ClassifierFit> {
    let eta = match &batch.law {
        Law::Classification { eta } => eta.clone(),
        _ => return domain("classifier fit needs a classification batch"),
    };
    let n = batch.n;
    let nf = n as f64;
    let ones = batch.y.iter().filter(|&&y| y == 1.0).count() as f64;
    let w: Vec<f64> = batch.y.iter().map(|&y| 2.0 * y - 1.0).collect();
    let xs = &batch.x;
    let cut = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else if i >= n {
            1.0
        } else {
            0.5 * (xs[i - 1] + xs[i])
        }
    };
    let (set, gain) = match class {
        SetClass::HalfLines => {
            if eta.dim() != 1 {
                return domain("half-lines need one-dimensional x");
            }
            let (mut best, mut at, mut acc) = (0.0, 0usize, 0.0);
            for (i, wi) in w.iter().enumerate() {
                acc += wi;
                if acc > best {
                    best = acc;
                    at = i + 1;
                }
            }
            (Member::HalfLine(cut(at)), best)
        }
        SetClass::Intervals => {
            if eta.dim() != 1 {
                return domain("intervals need one-dimensional x");
            }
            let (mut best, mut span, mut acc, mut start) = (0.0, (0usize, 0usize), 0.0, 0usize);
            for (i, wi) in w.iter().enumerate() {
                if acc <= 0.0 {
                    acc = 0.0;
                    start = i;
                }
                acc += wi;
                if acc > best {
                    best = acc;
                    span = (start, i + 1);
                }
            }
            if span.1 == 0 {
                (Member::Interval(0.0, 0.0), 0.0)
            } else {
                (Member::Interval(cut(span.0), cut(span.1)), best)
            }
        }
        SetClass::Boxes2 => {
            if eta.dim() != 2 || n > 400 {
                return Err(Error::Unsupported("box classifiers need d = 2 and n ≤ 400".into()));
            }
            let mut c1: Vec<f64> = (0..n).map(|i| batch.x[2 * i]).collect();
            let mut c2: Vec<f64> = (0..n).map(|i| batch.x[2 * i + 1]).collect();
            c1.push(0.0);
            c2.push(0.0);
            c1.push(1.0);
            c2.push(1.0);
            let mut best = (0.0, vec![0.0, 0.0]);
            for &a in &c1 {
                for &b in &c2 {
                    let g: f64 = (0..n).filter(|&i| batch.x[2 * i] <= a && batch.x[2 * i + 1] <= b).map(|i| w[i]).sum();
                    if g > best.0 {
                        best = (g, vec![a, b]);
                    }
                }
            }
            (Member::Box(best.1), best.0)
        }
    };
    let training_error = (ones - gain) / nf;
    let excess = class_excess(&eta, &set)?;
    Ok(ClassifierFit { set, training_error, excess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn levy_examples() {
        let f = Cdf::Linear { slope: 1.0 };
        assert_eq!(mult_levy_distance(&f, &f, 0.0, 0.5).unwrap(), 0.0);
        let g = Cdf::Linear { slope: 2.0 };
        let m = mult_levy_distance(&f, &g, 0.0, 0.5).unwrap();
        assert!((m - 2f64.sqrt().ln()).abs() < 1e-6, "{m}");
        let step = Cdf::step(vec![0.5], &[1.0]);
        assert!(mult_levy_distance(&step, &Cdf::Zero, 0.0, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn cutoff_closed_form() {
        let one = Cdf::step(vec![0.0], &[1.0]);
        assert_relative_eq!(margin_cutoff(&one, 1.0, 8, 1.0).unwrap(), 0.125, max_relative = 1e-12);
        assert!(margin_cutoff(&Cdf::Zero, 1.0, 8, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn gamma_examples() {
        let (s, n, r) = (3.0, 100, 0.2);
        assert_relative_eq!(gamma_n(r, s, n, 0.0, 0.0).unwrap(), 2.0 * s / (n as f64 * r * 2f64.ln()));
        let v = gamma_n(r, n as f64 * r, n, 0.0, 1.0).unwrap();
        assert_relative_eq!(v, 2.0 / 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn critical_radius_cases() {
        assert_relative_eq!(critical_radius(&TauModel::Constant(std::f64::consts::E), 50).unwrap(), 0.02);
        let d = std::f64::consts::E.powi(2);
        assert_relative_eq!(critical_radius(&TauModel::SqrtDim(d), 50).unwrap(), 0.02, max_relative = 1e-12);
        let r = critical_radius(&TauModel::Inverse, 1000).unwrap();
        assert!(((1.0 / r).ln() / r - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn isotonic_pair() {
        let b = SampleBatch {
            law: Law::Regression { target: Target::Span(vec![0.5]), b: 0.5 },
            n: 2,
            seed: 0,
            x: vec![0.2, 0.7],
            y: vec![1.0, 0.0],
            counts: vec![],
        };
        let f = fit_isotonic(&b).unwrap();
        assert_eq!(f.levels, vec![0.5, 0.5]);
        assert_relative_eq!(f.excess, 0.0);
    }

    #[test]
    fn model_certificate_inverts() {
        let (s, n, d0) = (2.0, 10_000, 1.0);
        let rep = excess_risk_certificate(&ErmProblem::Model { b0: 0.0, delta0: d0 }, n, s, 2.0, Mode::shape()).unwrap();
        assert_relative_eq!(rep.r_star, 16.0 * s * d0 / n as f64, max_relative = 1e-6);
    }

    #[test]
    fn classifier_all_ones() {
        let law = Law::Classification { eta: Eta::Constant(1.0) };
        let b = sim::draw_sample(&law, 50, 3).unwrap();
        let f = fit_margin_classifier(&b, SetClass::Intervals).unwrap();
        assert_eq!(f.training_error, 0.0);
        assert_relative_eq!(f.excess, 0.0, epsilon = 1e-12);
        let f = fit_margin_classifier(&b, SetClass::HalfLines).unwrap();
        assert_eq!(f.set, Member::HalfLine(1.0));
    }
}
