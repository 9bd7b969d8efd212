//! Seeded Monte Carlo engine: samplers, exact suprema of weighted empirical
//! deviations over the concrete classes, replicate summaries, premise scans for
//! weighted CLTs, and an exact multinomial oracle for tiny finite spaces.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::classes::{basis, ClassKind, FiniteDict, FunctionClass, Member};
use crate::error::{domain, Error, Result};
use crate::peel::{NormWeight, PeelingGrid, SlowVarying};
use crate::stats::ReplicationSummary;
use crate::{log_e, par, rng};

/// Regression function g₀ on [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Σ_k c_k e_k with the cosine basis e_0 = 1, e_k = √2 cos(πkx).
    Span(Vec<f64>),
    /// Right-continuous step function: `levels[i]` on [breaks[i-1], breaks[i]).
    Step { breaks: Vec<f64>, levels: Vec<f64> },
}

impl Target {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Target::Span(c) => c.iter().enumerate().map(|(k, a)| a * basis(k, x)).sum(),
            Target::Step { breaks, levels } => levels[breaks.partition_point(|&b| b <= x)],
        }
    }
}

/// Regression of labels on x: η(x) = Pr{Y = 1 | X = x}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Eta {
    Constant(f64),
    /// 1/2 + h on the Bayes set, 1/2 − h off it.
    Margin { set: Member, h: f64 },
}

impl Eta {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Eta::Constant(p) => *p,
            Eta::Margin { set, h } => {
                if crate::classes::eval_member(set, x) > 0.5 {
                    0.5 + h
                } else {
                    0.5 - h
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Eta::Margin { set: Member::Box(c), .. } => c.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Law {
    Uniform1d,
    /// Sorted sample of the uniform law restricted to [0, u], with a
    /// Binomial(n, u) number of points; the rest of the sample lies above u.
    UniformPrefix { u: f64 },
    UniformBox { d: usize },
    CoordC0 { j_max: usize },
    FiniteSpace { probs: Vec<f64> },
    Regression { target: Target, b: f64 },
    Classification { eta: Eta },
}

/// One i.i.d. sample. One-dimensional designs are stored sorted; box samples
/// are row-major points; `counts` holds cell counts (finite space) or the
/// coordinate totals S_j = Σ_k ε_{k,j}, j = 1..J (c₀ law).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub law: Law,
    pub n: usize,
    pub seed: u64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub counts: Vec<u64>,
}

impl SampleBatch {
    pub fn dim(&self) -> usize {
        match &self.law {
            Law::UniformBox { d } => *d,
            Law::Classification { eta } => eta.dim(),
            _ => 1,
        }
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.x[i * d..(i + 1) * d]
    }

    /// Number of stored points (smaller than n for prefix samples).
    pub fn len(&self) -> usize {
        self.x.len() / self.dim().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// n sorted uniforms on [0, 1] from normalized exponential spacings.
pub fn sorted_uniforms<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        let e: f64 = Exp1.sample(rng);
        acc += e;
        out.push(acc);
    }
    let e: f64 = Exp1.sample(rng);
    let total = acc + e;
    for v in out.iter_mut() {
        *v /= total;
    }
    out
}

fn binomial<R: Rng>(n: usize, p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return n as u64;
    }
    if p <= 0.0 || n == 0 {
        return 0;
    }
    Binomial::new(n as u64, p).map(|b| b.sample(rng)).unwrap_or(0)
}

/// Draws from `law` using the caller's stream.
pub fn draw_with<R: Rng>(law: &Law, n: usize, seed: u64, rng: &mut R) -> Result<SampleBatch> {
    if n == 0 {
        return domain("sample size must be at least 1");
    }
    let mut batch = SampleBatch { law: law.clone(), n, seed, x: Vec::new(), y: Vec::new(), counts: Vec::new() };
    match law {
        Law::Uniform1d => batch.x = sorted_uniforms(n, rng),
        Law::UniformPrefix { u } => {
            if !(*u > 0.0 && *u <= 1.0) {
                return domain("prefix level must lie in (0, 1]");
            }
            let k = binomial(n, *u, rng) as usize;
            batch.x = sorted_uniforms(k, rng).into_iter().map(|v| v * u).collect();
        }
        Law::UniformBox { d } => {
            if !(1..=3).contains(d) {
                return Err(Error::Unsupported(format!("box dimension {d}")));
            }
            batch.x = (0..n * d).map(|_| rng.gen::<f64>()).collect();
        }
        Law::CoordC0 { j_max } => {
            batch.counts = (1..=*j_max).map(|j| binomial(n, 1.0 / (j * j) as f64, rng)).collect();
        }
        Law::FiniteSpace { probs } => {
            let total: f64 = probs.iter().sum();
            if probs.is_empty() || probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
                return domain("finite-space probabilities must sum to 1");
            }
            let mut counts = vec![0u64; probs.len()];
            let mut left = n;
            let mut mass = 1.0;
            for (i, &p) in probs.iter().enumerate() {
                if i + 1 == probs.len() {
                    counts[i] = left as u64;
                    break;
                }
                let c = binomial(left, (p / mass).min(1.0), rng);
                counts[i] = c;
                left -= c as usize;
                mass -= p;
                if left == 0 {
                    break;
                }
            }
            batch.counts = counts;
        }
        Law::Regression { target, b } => {
            if *b < 0.0 {
                return domain("noise half-width must be nonnegative");
            }
            batch.x = sorted_uniforms(n, rng);
            batch.y = batch
                .x
                .iter()
                .map(|&x| {
                    let u = if *b > 0.0 { rng.gen_range(-*b..*b) } else { 0.0 };
                    (target.eval(x) + u).clamp(0.0, 1.0)
                })
                .collect();
        }
        Law::Classification { eta } => {
            let d = eta.dim();
            if d == 1 {
                batch.x = sorted_uniforms(n, rng);
            } else {
                batch.x = (0..n * d).map(|_| rng.gen::<f64>()).collect();
            }
            let mut y = Vec::with_capacity(n);
            for i in 0..n {
                let p = eta.eval(&batch.x[i * d..(i + 1) * d]);
                y.push(f64::from(rng.gen::<f64>() < p));
            }
            batch.y = y;
        }
    }
    Ok(batch)
}

pub fn draw_sample(law: &Law, n: usize, seed: u64) -> Result<SampleBatch> {
    draw_with(law, n, seed, &mut rng::stream(seed, 0))
}

/// Counting convention for F_n at a witness point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// #{X ≤ x}
    Closed,
    /// #{X < x}, the left limit
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    None,
    HalfLine { t: f64, side: Side },
    Box { x: Vec<f64>, side: Side },
    Interval { a: f64, b: f64, side: Side },
    Coord { j: usize },
    Monotone { steps: Vec<(f64, f64)> },
    Dict { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupremumResult {
    pub value: f64,
    pub witness: Witness,
    pub range: (f64, f64),
    pub weight: NormWeight,
    /// Free-form notes: refinement, duality gap, method.
    pub notes: Vec<(String, f64)>,
}

impl SupremumResult {
    fn new(range: (f64, f64), weight: NormWeight) -> Self {
        SupremumResult { value: 0.0, witness: Witness::None, range, weight, notes: Vec::new() }
    }

    fn offer(&mut self, value: f64, witness: impl FnOnce() -> Witness) {
        if value > self.value {
            self.value = value;
            self.witness = witness();
        }
    }
}

fn count_sorted(xs: &[f64], t: f64, side: Side) -> usize {
    match side {
        Side::Closed => xs.partition_point(|&v| v <= t),
        Side::Open => xs.partition_point(|&v| v < t),
    }
}

fn box_count(batch: &SampleBatch, x: &[f64], side: Side) -> usize {
    (0..batch.len())
        .filter(|&i| {
            batch.point(i).iter().zip(x).all(|(p, c)| match side {
                Side::Closed => p <= c,
                Side::Open => p < c,
            })
        })
        .count()
}

/// Recomputes a witness's statistic from the sample.
pub fn evaluate_witness(batch: &SampleBatch, witness: &Witness, weight: &NormWeight) -> f64 {
    let n = batch.n as f64;
    match witness {
        Witness::None => 0.0,
        Witness::HalfLine { t, side } => {
            let c = count_sorted(&batch.x, *t, *side) as f64;
            (c / n - t).abs() / weight.eval(t.sqrt())
        }
        Witness::Box { x, side } => {
            let u: f64 = x.iter().product();
            let c = box_count(batch, x, *side) as f64;
            (c / n - u).abs() / weight.eval(u.sqrt())
        }
        Witness::Interval { a, b, side } => {
            let c = match side {
                Side::Closed => count_sorted(&batch.x, *b, Side::Closed) - count_sorted(&batch.x, *a, Side::Open),
                Side::Open => count_sorted(&batch.x, *b, Side::Open).saturating_sub(count_sorted(&batch.x, *a, Side::Closed)),
            } as f64;
            let len = b - a;
            (c / n - len).abs() / weight.eval(len.sqrt())
        }
        Witness::Coord { j } => {
            let s = batch.counts[j - 1] as f64;
            let jf = *j as f64;
            (s / n - 1.0 / (jf * jf)).abs() * jf * jf
        }
        Witness::Monotone { steps } => monotone_objective(batch, steps),
        Witness::Dict { .. } => f64::NAN,
    }
}

fn check_sorted_1d(batch: &SampleBatch) -> Result<()> {
    match batch.law {
        Law::Uniform1d | Law::UniformPrefix { .. } | Law::Regression { .. } => Ok(()),
        Law::Classification { ref eta } if eta.dim() == 1 => Ok(()),
        _ => domain("this supremum needs a one-dimensional uniform batch"),
    }
}

/// sup over t ∈ (lo, hi] of |F_n(t) − t|/φ(√t), exact.
pub fn sup_halfline(batch: &SampleBatch, lo: f64, hi: f64, weight: &NormWeight) -> Result<SupremumResult> {
    check_sorted_1d(batch)?;
    if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
        return domain(format!("empty or invalid range ({lo}, {hi}]"));
    }
    Ok(halfline_sorted(&batch.x, batch.n, lo, hi, weight))
}

pub(crate) fn halfline_sorted(xs: &[f64], n: usize, lo: f64, hi: f64, weight: &NormWeight) -> SupremumResult {
    let nf = n as f64;
    let mut res = SupremumResult::new((lo, hi), *weight);
    let stat = |c: usize, t: f64| (c as f64 / nf - t).abs() / weight.eval(t.sqrt());
    let c_hi = count_sorted(xs, hi, Side::Closed);
    res.offer(stat(c_hi, hi), || Witness::HalfLine { t: hi, side: Side::Closed });
    if weight.eval(lo.sqrt()) > 0.0 {
        let c_lo = count_sorted(xs, lo, Side::Closed);
        res.offer(stat(c_lo, lo), || Witness::HalfLine { t: lo, side: Side::Closed });
    }
    let start = count_sorted(xs, lo, Side::Closed);
    let mut open = start;
    for k in start..c_hi {
        let t = xs[k];
        if k > start && xs[k - 1] < t {
            open = k;
        } else if k == start {
            open = count_sorted(xs, t, Side::Open);
        }
        let mut closed = k + 1;
        while closed < xs.len() && xs[closed] == t {
            closed += 1;
        }
        res.offer(stat(closed, t), || Witness::HalfLine { t, side: Side::Closed });
        res.offer(stat(open, t), || Witness::HalfLine { t, side: Side::Open });
    }
    res
}

/// Rank/count structure over a permutation: `count_less(i, j)` is the number
/// of k < i with v[k] < j.
struct WaveletMatrix {
    levels: Vec<(Vec<u64>, Vec<u32>, usize)>,
    bits: u32,
}

impl WaveletMatrix {
    fn new(values: &[u32]) -> Self {
        let maxv = values.iter().copied().max().unwrap_or(0) as u64 + 1;
        let bits = (64 - maxv.leading_zeros()).max(1);
        let mut cur = values.to_vec();
        let mut levels = Vec::with_capacity(bits as usize);
        for l in (0..bits).rev() {
            let n = cur.len();
            let words = n / 64 + 1;
            let mut bv = vec![0u64; words];
            for (i, &v) in cur.iter().enumerate() {
                if (v >> l) & 1 == 1 {
                    bv[i / 64] |= 1 << (i % 64);
                }
            }
            let mut pre = vec![0u32; words + 1];
            for w in 0..words {
                pre[w + 1] = pre[w] + bv[w].count_ones();
            }
            let zeros = n - pre[words] as usize;
            let mut next = Vec::with_capacity(n);
            next.extend(cur.iter().copied().filter(|v| (v >> l) & 1 == 0));
            next.extend(cur.iter().copied().filter(|v| (v >> l) & 1 == 1));
            levels.push((bv, pre, zeros));
            cur = next;
        }
        WaveletMatrix { levels, bits }
    }

    #[inline]
    fn rank1(bv: &[u64], pre: &[u32], pos: usize) -> usize {
        let w = pos / 64;
        let b = pos % 64;
        let mut r = pre[w] as usize;
        if b > 0 {
            r += (bv[w] & ((1u64 << b) - 1)).count_ones() as usize;
        }
        r
    }

    fn count_less(&self, i: usize, j: usize) -> usize {
        if i == 0 || j == 0 {
            return 0;
        }
        if j as u64 >= 1u64 << self.bits {
            return i;
        }
        let (mut lo, mut hi) = (0usize, i);
        let mut res = 0;
        for (idx, (bv, pre, zeros)) in self.levels.iter().enumerate() {
            let l = self.bits - 1 - idx as u32;
            let o_lo = Self::rank1(bv, pre, lo);
            let o_hi = Self::rank1(bv, pre, hi);
            let (z_lo, z_hi) = (lo - o_lo, hi - o_hi);
            if (j >> l) & 1 == 1 {
                res += z_hi - z_lo;
                lo = zeros + o_lo;
                hi = zeros + o_hi;
            } else {
                lo = z_lo;
                hi = z_hi;
            }
        }
        res
    }
}

/// Default leaf side of the d = 2 branch-and-bound.
pub const BOX_REFINEMENT: usize = 8;

/// sup of |F_n(x) − ∏x_i|/φ(√∏x_i) over r² < ∏x_i ≤ δ², x ∈ [0,1]^d.
pub fn sup_box(batch: &SampleBatch, r: f64, delta: f64, weight: &NormWeight, refinement: usize) -> Result<SupremumResult> {
    let d = match batch.law {
        Law::UniformBox { d } => d,
        _ => return domain("sup_box needs a uniform-box batch"),
    };
    if !(r >= 0.0 && r < delta && delta <= 1.0) {
        return domain(format!("empty or invalid range ({r}, {delta}]"));
    }
    match d {
        1 => {
            let mut xs = batch.x.clone();
            xs.sort_by(f64::total_cmp);
            let mut res = halfline_sorted(&xs, batch.n, r * r, delta * delta, weight);
            if let Witness::HalfLine { t, side } = res.witness {
                res.witness = Witness::Box { x: vec![t], side };
            }
            res.range = (r, delta);
            Ok(res)
        }
        2 => Ok(sup_box2(batch, r, delta, weight, refinement.max(1))),
        3 => {
            if batch.n > 40 {
                return Err(Error::Unsupported("d = 3 box suprema are limited to n ≤ 40".into()));
            }
            Ok(sup_box_small(batch, r, delta, weight))
        }
        _ => Err(Error::Unsupported(format!("box dimension {d}"))),
    }
}

fn sup_box2(batch: &SampleBatch, r: f64, delta: f64, weight: &NormWeight, leaf: usize) -> SupremumResult {
    let n = batch.n;
    let nf = n as f64;
    let (r2, d2) = (r * r, delta * delta);
    let pts: Vec<(f64, f64)> = (0..n).map(|i| (batch.x[2 * i], batch.x[2 * i + 1])).collect();
    let mut by_x: Vec<usize> = (0..n).collect();
    by_x.sort_by(|&a, &b| pts[a].0.total_cmp(&pts[b].0));
    let mut by_y: Vec<usize> = (0..n).collect();
    by_y.sort_by(|&a, &b| pts[a].1.total_cmp(&pts[b].1));
    let mut yrank = vec![0u32; n];
    for (rk, &i) in by_y.iter().enumerate() {
        yrank[i] = rk as u32;
    }
    let ax: Vec<f64> = by_x.iter().map(|&i| pts[i].0).collect();
    let by: Vec<f64> = by_y.iter().map(|&i| pts[i].1).collect();
    let wm = WaveletMatrix::new(&by_x.iter().map(|&i| yrank[i]).collect::<Vec<_>>());
    let a = |i: usize| if i > n { 1.0 } else { ax[i - 1] };
    let b = |j: usize| if j > n { 1.0 } else { by[j - 1] };
    let cnt = |i: usize, j: usize| wm.count_less(i.min(n), j.min(n)) as f64;
    let phi = |u: f64| weight.eval(u.sqrt());

    let mut res = SupremumResult::new((r, delta), *weight);
    res.notes.push(("refinement".into(), leaf as f64));

    // Upper surface ∏x = δ²: smallest strict count along the curve.
    {
        let mut starts = Vec::new();
        let mut ends = Vec::new();
        for &(x1, x2) in &pts {
            if x1 * x2 < d2 {
                starts.push(x1);
                ends.push(if x2 > 0.0 { d2 / x2 } else { f64::INFINITY });
            }
        }
        starts.sort_by(f64::total_cmp);
        ends.sort_by(f64::total_cmp);
        let cover = |t: f64| starts.partition_point(|&s| s < t) - ends.partition_point(|&e| e <= t);
        let mut cands = vec![d2, 1.0];
        cands.extend(starts.iter().copied());
        cands.extend(ends.iter().copied());
        for t in cands {
            if (d2..=1.0).contains(&t) && t > 0.0 {
                let c = cover(t) as f64;
                res.offer((d2 - c / nf) / phi(d2), || Witness::Box { x: vec![t, d2 / t], side: Side::Open });
            }
        }
    }
    // Lower surface ∏x = r²: largest closed count along the curve.
    if r > 0.0 && phi(r2) > 0.0 {
        let mut below: Vec<(f64, f64)> = pts.iter().copied().filter(|&(x1, x2)| x1 * x2 <= r2).collect();
        below.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut ys: Vec<f64> = below.iter().map(|p| p.1).collect();
        ys.sort_by(f64::total_cmp);
        let mut fen = vec![0usize; ys.len() + 1];
        let mut best = (0usize, r2);
        for (k, &(x1, x2)) in below.iter().enumerate() {
            let mut p = ys.partition_point(|&v| v < x2) + 1;
            while p < fen.len() {
                fen[p] += 1;
                p += p & p.wrapping_neg();
            }
            if k + 1 < below.len() && below[k + 1].0 == x1 {
                continue;
            }
            let t = x1.max(r2);
            let lim = r2 / t;
            let mut q = ys.partition_point(|&v| v <= lim);
            let mut c = 0;
            while q > 0 {
                c += fen[q];
                q &= q - 1;
            }
            if c > best.0 {
                best = (c, t);
            }
        }
        let (c, t) = best;
        res.offer((c as f64 / nf - r2) / phi(r2), || Witness::Box { x: vec![t, r2 / t], side: Side::Closed });
    }

    let eval_corner = |i: usize, j: usize, res: &mut SupremumResult| {
        let (x1, x2) = (a(i), b(j));
        let u = x1 * x2;
        if !(u > r2 && u <= d2) {
            return;
        }
        let p = phi(u);
        if i <= n && j <= n {
            let c = cnt(i, j);
            res.offer((c / nf - u) / p, || Witness::Box { x: vec![x1, x2], side: Side::Closed });
        }
        let c = cnt(i - 1, j - 1);
        res.offer((u - c / nf) / p, || Witness::Box { x: vec![x1, x2], side: Side::Open });
    };
    let mut xrank = vec![0usize; n];
    for (rk, &i) in by_x.iter().enumerate() {
        xrank[i] = rk + 1;
    }
    for k in 0..n {
        eval_corner(xrank[k], yrank[k] as usize + 1, &mut res);
    }

    let mut stack = vec![(1usize, n + 1, 1usize, n + 1)];
    let mut nodes = 0usize;
    while let Some((i1, i2, j1, j2)) = stack.pop() {
        nodes += 1;
        let u_lo = a(i1) * b(j1);
        let u_hi = a(i2) * b(j2);
        if u_hi <= r2 || u_lo > d2 {
            continue;
        }
        let mut bound = f64::NEG_INFINITY;
        if i1 <= n && j1 <= n {
            let ul = u_lo.max(r2);
            let pu = phi(ul);
            let c_hi = cnt(i2.min(n), j2.min(n));
            bound = if pu > 0.0 { (c_hi / nf - ul) / pu } else { f64::INFINITY };
        }
        let uh = u_hi.min(d2);
        let c_lo = cnt(i1 - 1, j1 - 1);
        bound = bound.max((uh - c_lo / nf) / phi(uh));
        if bound <= res.value {
            continue;
        }
        let (wi, wj) = (i2 - i1 + 1, j2 - j1 + 1);
        if wi <= leaf && wj <= leaf {
            for i in i1..=i2 {
                for j in j1..=j2 {
                    eval_corner(i, j, &mut res);
                }
            }
            continue;
        }
        if wi >= wj {
            let m = (i1 + i2) / 2;
            stack.push((m + 1, i2, j1, j2));
            stack.push((i1, m, j1, j2));
        } else {
            let m = (j1 + j2) / 2;
            stack.push((i1, i2, m + 1, j2));
            stack.push((i1, i2, j1, m));
        }
    }
    res.notes.push(("nodes".into(), nodes as f64));
    res
}

/// Exhaustive candidate scan for small samples (any d ≤ 3): all corners of the
/// coordinate grid plus points of the two constraint surfaces with d − 1
/// coordinates taken from the grid.
fn sup_box_small(batch: &SampleBatch, r: f64, delta: f64, weight: &NormWeight) -> SupremumResult {
    let d = batch.dim();
    let n = batch.len();
    let nf = batch.n as f64;
    let (r2, d2) = (r * r, delta * delta);
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut v: Vec<f64> = (0..n).map(|i| batch.point(i)[k]).collect();
            v.push(1.0);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut res = SupremumResult::new((r, delta), *weight);
    res.notes.push(("exhaustive".into(), 1.0));
    let offer = |x: Vec<f64>, res: &mut SupremumResult| {
        let u: f64 = x.iter().product();
        if !(u > r2 - 1e-15 && u <= d2 * (1.0 + 1e-15)) || x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return;
        }
        let p = weight.eval(u.sqrt());
        if p <= 0.0 {
            return;
        }
        let cc = box_count(batch, &x, Side::Closed) as f64;
        let co = box_count(batch, &x, Side::Open) as f64;
        if u > r2 {
            res.offer((u - co / nf) / p, || Witness::Box { x: x.clone(), side: Side::Open });
        }
        res.offer((cc / nf - u) / p, || Witness::Box { x: x.clone(), side: Side::Closed });
    };
    let total: usize = axes.iter().map(|v| v.len()).product();
    for idx in 0..total {
        let mut rem = idx;
        let x: Vec<f64> = axes
            .iter()
            .map(|v| {
                let c = v[rem % v.len()];
                rem /= v.len();
                c
            })
            .collect();
        offer(x, &mut res);
    }
    for level in [r2, d2] {
        if level <= 0.0 {
            continue;
        }
        for free in 0..d {
            let others: Vec<usize> = (0..d).filter(|&k| k != free).collect();
            let sizes: Vec<usize> = others.iter().map(|&k| axes[k].len()).collect();
            let total: usize = sizes.iter().product();
            for idx in 0..total {
                let mut rem = idx;
                let mut x = vec![0.0; d];
                let mut prod = 1.0;
                for (m, &k) in others.iter().enumerate() {
                    x[k] = axes[k][rem % sizes[m]];
                    rem /= sizes[m];
                    prod *= x[k];
                }
                if prod <= 0.0 {
                    continue;
                }
                x[free] = level / prod;
                offer(x, &mut res);
            }
        }
    }
    res
}

/// sup over intervals [a,b] ⊂ [0,1] with r² < b − a ≤ δ² of
/// |P_n[a,b] − (b − a)|/φ(√(b − a)), exact. Linear time for constant weights,
/// quadratic otherwise.
pub fn sup_intervals(batch: &SampleBatch, r: f64, delta: f64, weight: &NormWeight) -> Result<SupremumResult> {
    check_sorted_1d(batch)?;
    if !(r >= 0.0 && r < delta && delta <= 1.0) {
        return domain(format!("empty or invalid range ({r}, {delta}]"));
    }
    let constant = matches!(weight, NormWeight::Power { alpha } if *alpha == 0.0);
    Ok(if constant {
        intervals_linear(&batch.x, batch.n, r, delta, weight)
    } else {
        intervals_quadratic(&batch.x, batch.n, r, delta, weight)
    })
}

/// Reference enumeration over all endpoint pairs.
pub fn sup_intervals_quadratic(batch: &SampleBatch, r: f64, delta: f64, weight: &NormWeight) -> Result<SupremumResult> {
    check_sorted_1d(batch)?;
    if !(r >= 0.0 && r < delta && delta <= 1.0) {
        return domain(format!("empty or invalid range ({r}, {delta}]"));
    }
    Ok(intervals_quadratic(&batch.x, batch.n, r, delta, weight))
}

fn closed_count(xs: &[f64], a: f64, b: f64) -> usize {
    count_sorted(xs, b, Side::Closed) - count_sorted(xs, a, Side::Open)
}

fn open_count(xs: &[f64], a: f64, b: f64) -> usize {
    count_sorted(xs, b, Side::Open).saturating_sub(count_sorted(xs, a, Side::Closed))
}

/// Candidates common to both algorithms: windows of the two extreme lengths.
fn interval_extremes(xs: &[f64], nf: f64, r2: f64, d2: f64, weight: &NormWeight, res: &mut SupremumResult) {
    let m = xs.len();
    // windows of length δ² ending at a point or at 1, and starting at 0
    let pd = weight.eval(d2.sqrt());
    let mut ends: Vec<f64> = xs.iter().copied().filter(|&x| x >= d2).collect();
    ends.push(1.0);
    for b in ends {
        let a = b - d2;
        let c = open_count(xs, a, b) as f64;
        res.offer((d2 - c / nf) / pd, || Witness::Interval { a, b, side: Side::Open });
    }
    let c = open_count(xs, 0.0, d2) as f64 + xs.iter().filter(|&&x| x == 0.0).count() as f64;
    res.offer((d2 - c / nf) / pd, || Witness::Interval { a: 0.0, b: d2, side: Side::Open });
    // closed windows of length r² (limit from above) starting at each point
    let pr = weight.eval(r2.sqrt());
    if pr > 0.0 {
        for i in 0..m {
            let a = xs[i].min(1.0 - r2);
            let b = a + r2;
            let c = closed_count(xs, a, b) as f64;
            res.offer((c / nf - r2) / pr, || Witness::Interval { a, b, side: Side::Closed });
        }
    }
    // full-length windows containing everything available
    if m > 0 {
        let len = xs[m - 1] - xs[0];
        if len <= r2 && pr > 0.0 {
            let c = m as f64;
            let a = xs[0].min(1.0 - r2);
            res.offer((c / nf - r2) / pr, || Witness::Interval { a, b: a + r2, side: Side::Closed });
        }
    }
}

fn intervals_quadratic(xs: &[f64], n: usize, r: f64, delta: f64, weight: &NormWeight) -> SupremumResult {
    let nf = n as f64;
    let (r2, d2) = (r * r, delta * delta);
    let m = xs.len();
    let mut res = SupremumResult::new((r, delta), *weight);
    res.notes.push(("method: pairs".into(), 1.0));
    interval_extremes(xs, nf, r2, d2, weight, &mut res);
    // closed intervals between sample points
    for i in 0..m {
        for j in i..m {
            let len = xs[j] - xs[i];
            if len > d2 {
                break;
            }
            if len > r2 {
                let c = (j - i + 1) as f64;
                res.offer((c / nf - len) / weight.eval(len.sqrt()), || Witness::Interval { a: xs[i], b: xs[j], side: Side::Closed });
            }
        }
    }
    // open gaps between consecutive anchors 0, X_(1..m), 1
    let mut anchors = Vec::with_capacity(m + 2);
    anchors.push(0.0);
    anchors.extend_from_slice(xs);
    anchors.push(1.0);
    for i in 0..anchors.len() {
        for j in i + 1..anchors.len() {
            let len = anchors[j] - anchors[i];
            if len > d2 {
                break;
            }
            if len > r2 {
                let c = (j - i - 1) as f64;
                res.offer((len - c / nf) / weight.eval(len.sqrt()), || Witness::Interval { a: anchors[i], b: anchors[j], side: Side::Open });
            }
        }
    }
    res
}

fn intervals_linear(xs: &[f64], n: usize, r: f64, delta: f64, weight: &NormWeight) -> SupremumResult {
    use std::collections::VecDeque;
    let nf = n as f64;
    let (r2, d2) = (r * r, delta * delta);
    let w = weight.eval(1.0);
    let m = xs.len();
    let mut res = SupremumResult::new((r, delta), *weight);
    res.notes.push(("method: sliding window".into(), 1.0));
    interval_extremes(xs, nf, r2, d2, weight, &mut res);
    // closed [X_i, X_j], X_j − X_i ∈ (r², δ²]: value A_j − A_i + 1/n, A_k = k/n − X_k
    let a_of = |k: usize| k as f64 / nf - xs[k];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for j in 0..m {
        while next < j && xs[j] - xs[next] > r2 {
            while let Some(&back) = dq.back() {
                if a_of(back) >= a_of(next) {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        while let Some(&front) = dq.front() {
            if xs[j] - xs[front] > d2 {
                dq.pop_front();
            } else {
                break;
            }
        }
        if let Some(&i) = dq.front() {
            let v = (a_of(j) - a_of(i) + 1.0 / nf) / w;
            res.offer(v, || Witness::Interval { a: xs[i], b: xs[j], side: Side::Closed });
        }
    }
    // open (Y_i, Y_j) over anchors Y = 0, X_(1..m), 1: value B_j − B_i + 1/n, B_k = Y_k − k/n
    let mut anchors = Vec::with_capacity(m + 2);
    anchors.push(0.0);
    anchors.extend_from_slice(xs);
    anchors.push(1.0);
    let b_of = |k: usize| anchors[k] - k as f64 / nf;
    dq.clear();
    next = 0;
    for j in 1..anchors.len() {
        while next < j && anchors[j] - anchors[next] > r2 {
            while let Some(&back) = dq.back() {
                if b_of(back) >= b_of(next) {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        while let Some(&front) = dq.front() {
            if anchors[j] - anchors[front] > d2 {
                dq.pop_front();
            } else {
                break;
            }
        }
        if let Some(&i) = dq.front() {
            let v = (b_of(j) - b_of(i) + 1.0 / nf) / w;
            res.offer(v, || Witness::Interval { a: anchors[i], b: anchors[j], side: Side::Open });
        }
    }
    res
}

/// Normalization for the c₀ coordinate class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum C0Norm {
    /// |P_n f_j/Pf_j − 1|
    Ratio,
    /// |P_n f_j − Pf_j|/φ(σ_j), σ_j = 1/(j log j)
    Weighted(NormWeight),
}

/// Max over j ∈ [j_lo, j_hi] of the chosen normalization, exact.
pub fn sup_c0(batch: &SampleBatch, j_lo: usize, j_hi: usize, norm: C0Norm) -> Result<SupremumResult> {
    let j_max = match batch.law {
        Law::CoordC0 { j_max } => j_max,
        _ => return domain("sup_c0 needs a c0 batch"),
    };
    if j_lo == 0 || j_lo > j_hi || j_hi > j_max {
        return domain(format!("coordinate range [{j_lo}, {j_hi}] outside 1..={j_max}"));
    }
    let nf = batch.n as f64;
    let weight = match norm {
        C0Norm::Ratio => NormWeight::Power { alpha: 2.0 },
        C0Norm::Weighted(w) => w,
    };
    let mut res = SupremumResult::new((crate::classes::c0_sigma(j_hi as f64), crate::classes::c0_sigma(j_lo as f64)), weight);
    for j in j_lo..=j_hi {
        let jf = j as f64;
        let dev = batch.counts[j - 1] as f64 / nf - 1.0 / (jf * jf);
        let v = match norm {
            C0Norm::Ratio => dev.abs() * jf * jf,
            C0Norm::Weighted(w) => {
                let l = log_e(jf);
                (dev / (l * l)).abs() / w.eval(crate::classes::c0_sigma(jf))
            }
        };
        res.offer(v, || Witness::Coord { j });
    }
    Ok(res)
}

/// Coordinates j ≥ 2 with r < 1/(j log j) ≤ δ.
pub fn c0_range(r: f64, delta: f64) -> (usize, usize) {
    let mut lo = 2usize;
    while crate::classes::c0_sigma(lo as f64) > delta {
        lo += 1;
    }
    let mut hi = lo;
    while crate::classes::c0_sigma((hi + 1) as f64) > r {
        hi += 1;
    }
    (lo, hi)
}

fn monotone_objective(batch: &SampleBatch, steps: &[(f64, f64)]) -> f64 {
    let nf = batch.n as f64;
    steps
        .iter()
        .map(|&(s, w)| {
            let above = batch.x.len() - count_sorted(&batch.x, s, Side::Open);
            w * (above as f64 / nf - (1.0 - s))
        })
        .sum()
}

/// Weighted pool-adjacent-violators: nondecreasing least-squares fit of `y`
/// with weights `w`.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = Vec::with_capacity(y.len());
    let mut wts: Vec<f64> = Vec::with_capacity(y.len());
    let mut lens: Vec<usize> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        vals.push(yi);
        wts.push(wi);
        lens.push(1);
        while vals.len() > 1 && vals[vals.len() - 2] > vals[vals.len() - 1] {
            let (v2, w2, l2) = (vals.pop().unwrap(), wts.pop().unwrap(), lens.pop().unwrap());
            let k = vals.len() - 1;
            let wt = wts[k] + w2;
            vals[k] = if wt > 0.0 { (vals[k] * wts[k] + v2 * w2) / wt } else { 0.5 * (vals[k] + v2) };
            wts[k] = wt;
            lens[k] += l2;
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (v, l) in vals.iter().zip(&lens) {
        out.extend(std::iter::repeat(*v).take(*l));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonotoneSolver {
    /// Exact inner solve by weighted isotonic regression.
    Pava,
    /// Conditional gradient on the penalized problem; the linear oracle over
    /// monotone [0,1]-valued levels returns a threshold function.
    FrankWolfe,
}

/// sup of (P_n − P)g over nondecreasing g: [0,1] → [0,1] with Pg² ≤ δ²
/// under uniform P. Levels g_i on [X_(i), X_(i+1)) maximize
/// Σ g_i(1/n − ℓ_i) subject to Σ g_i² ℓ_i ≤ δ²; the constraint is dualized
/// and the multiplier found by bisection. Notes carry the duality gap.
pub fn sup_monotone(batch: &SampleBatch, delta: f64, budget: usize, solver: MonotoneSolver) -> Result<SupremumResult> {
    check_sorted_1d(batch)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return domain("δ must lie in (0, 1]");
    }
    let xs = &batch.x;
    let m = xs.len();
    let nf = batch.n as f64;
    let d2 = delta * delta;
    let ell: Vec<f64> = (0..m).map(|i| if i + 1 < m { xs[i + 1] - xs[i] } else { 1.0 - xs[i] }).collect();
    let coef: Vec<f64> = ell.iter().map(|l| 1.0 / nf - l).collect();
    let obj = |g: &[f64]| g.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
    let quad = |g: &[f64]| g.iter().zip(&ell).map(|(a, l)| a * a * l).sum::<f64>();
    let mut res = SupremumResult::new((0.0, delta), NormWeight::constant());
    if m == 0 {
        return Ok(res);
    }
    // μ = 0: best threshold function
    let mut best_k = m;
    let mut acc = 0.0;
    let mut best = 0.0;
    for k in (0..m).rev() {
        acc += coef[k];
        if acc > best {
            best = acc;
            best_k = k;
        }
    }
    let threshold: Vec<f64> = (0..m).map(|i| f64::from(i >= best_k)).collect();
    let to_steps = |g: &[f64]| {
        let mut steps = Vec::new();
        let mut prev = 0.0;
        for (i, &v) in g.iter().enumerate() {
            if v > prev + 1e-300 {
                steps.push((xs[i], v - prev));
                prev = v;
            }
        }
        steps
    };
    if quad(&threshold) <= d2 {
        let v = obj(&threshold);
        res.offer(v, || Witness::Monotone { steps: to_steps(&threshold) });
        res.notes.push(("gap".into(), 0.0));
        return Ok(res);
    }
    let solve = |mu: f64| -> Vec<f64> {
        match solver {
            MonotoneSolver::Pava => {
                let y: Vec<f64> = coef.iter().zip(&ell).map(|(c, l)| if *l > 0.0 { c / (2.0 * mu * l) } else { 0.0 }).collect();
                pava(&y, &ell).into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
            }
            MonotoneSolver::FrankWolfe => {
                let mut g = vec![0.0; m];
                for _ in 0..budget.max(10) {
                    let grad: Vec<f64> = (0..m).map(|i| coef[i] - 2.0 * mu * ell[i] * g[i]).collect();
                    let mut acc = 0.0;
                    let mut best = (0.0, m);
                    for k in (0..m).rev() {
                        acc += grad[k];
                        if acc > best.0 {
                            best = (acc, k);
                        }
                    }
                    let dir: Vec<f64> = (0..m).map(|i| f64::from(i >= best.1) - g[i]).collect();
                    let gap: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
                    if gap <= 1e-14 {
                        break;
                    }
                    let curv: f64 = dir.iter().zip(&ell).map(|(a, l)| 2.0 * mu * l * a * a).sum();
                    let step = if curv > 0.0 { (gap / curv).min(1.0) } else { 1.0 };
                    for i in 0..m {
                        g[i] += step * dir[i];
                    }
                }
                g
            }
        }
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while quad(&solve(hi)) > d2 {
        hi *= 2.0;
        if hi > 1e30 {
            break;
        }
    }
    let mut primal = 0.0;
    let mut primal_g = vec![0.0; m];
    let mut dual = f64::INFINITY;
    for _ in 0..budget.clamp(60, 200) {
        let mu = 0.5 * (lo + hi);
        let g = solve(mu);
        let qv = quad(&g);
        let ov = obj(&g);
        dual = dual.min(ov - mu * (qv - d2));
        let scale = if qv > d2 { (d2 / qv).sqrt() } else { 1.0 };
        let feasible: Vec<f64> = g.iter().map(|v| v * scale).collect();
        let fv = obj(&feasible);
        if fv > primal {
            primal = fv;
            primal_g = feasible;
        }
        if qv > d2 {
            lo = mu;
        } else {
            hi = mu;
        }
        if dual - primal <= 1e-10 * primal.abs().max(1e-3) {
            break;
        }
    }
    res.offer(primal, || Witness::Monotone { steps: to_steps(&primal_g) });
    res.notes.push(("gap".into(), (dual - primal).max(0.0)));
    Ok(res)
}

/// Per-slice MC estimates of ψ_{n,q}, with β̂ = max_j ψ̂_j/φ(ρ_j) and the
/// φ_q-weighted supremum (whose mean is Ê).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiBeta {
    pub slices: Vec<ReplicationSummary>,
    pub beta_hat: f64,
    pub weighted: ReplicationSummary,
}

/// Supremum of |P_n f − Pf| over each shell of `grid`, from one sample.
pub fn slice_sups(class: &FunctionClass, grid: &PeelingGrid, batch: &SampleBatch) -> Result<Vec<f64>> {
    let one = NormWeight::constant();
    let mut out = Vec::with_capacity(grid.l);
    for (lo, hi) in grid.shells() {
        let v = match &class.kind {
            ClassKind::HalfLine1D => halfline_sorted(&batch.x, batch.n, lo * lo, (hi * hi).min(0.5), &one).value,
            ClassKind::Intervals1D => intervals_linear(&batch.x, batch.n, lo, hi, &one).value,
            ClassKind::BoxCdf { .. } => sup_box(batch, lo, hi.min(0.5f64.sqrt()), &one, BOX_REFINEMENT)?.value,
            ClassKind::CoordC0 => {
                let (a, b) = c0_range(lo, hi);
                let b = b.min(batch.counts.len());
                if a > b {
                    0.0
                } else {
                    sup_c0(batch, a, b, C0Norm::Weighted(one))?.value
                }
            }
            ClassKind::FiniteDict(dict) => dict_slice_sup(dict, class, batch, lo, hi)?,
            _ => return Err(Error::Unsupported(format!("slice suprema for {}", class.name()))),
        };
        out.push(v);
    }
    Ok(out)
}

fn dict_slice_sup(dict: &FiniteDict, class: &FunctionClass, batch: &SampleBatch, lo: f64, hi: f64) -> Result<f64> {
    let nf = batch.n as f64;
    let mut best = 0.0_f64;
    for k in 0..dict.funcs.len() {
        let s = crate::classes::sigma_of(class, &Member::Dict(k))?;
        if s > lo && s <= hi {
            let pn: f64 = dict.funcs[k].iter().zip(&batch.counts).map(|(f, &c)| f * c as f64).sum::<f64>() / nf;
            best = best.max((pn - dict.mean(k)).abs());
        }
    }
    Ok(best)
}

/// Sampling law matching a class.
pub fn law_for(class: &FunctionClass) -> Result<Law> {
    Ok(match &class.kind {
        ClassKind::HalfLine1D | ClassKind::Intervals1D => Law::Uniform1d,
        ClassKind::BoxCdf { d } => Law::UniformBox { d: *d },
        ClassKind::FiniteDict(dict) => Law::FiniteSpace { probs: dict.probs.clone() },
        _ => return Err(Error::Unsupported(format!("no sampler for {}", class.name()))),
    })
}

pub fn estimate_psi_beta(
    class: &FunctionClass,
    grid: &PeelingGrid,
    weight: &NormWeight,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<PsiBeta> {
    estimate_psi_beta_with(class, grid, weight, n, reps, seed, None)
}

/// As [`estimate_psi_beta`] with an explicit law (e.g. the c₀ law with a
/// chosen J).
pub fn estimate_psi_beta_with(
    class: &FunctionClass,
    grid: &PeelingGrid,
    weight: &NormWeight,
    n: usize,
    reps: usize,
    seed: u64,
    law: Option<Law>,
) -> Result<PsiBeta> {
    if reps == 0 {
        return domain("reps must be at least 1");
    }
    let law = match law {
        Some(l) => l,
        None => law_for(class)?,
    };
    let seeds: Vec<u64> = (0..reps).map(|i| rng::replicate_seed(seed, i as u64)).collect();
    let rows: Vec<Result<Vec<f64>>> = par::map_indexed(reps, |i| {
        let batch = draw_sample(&law, n, seeds[i])?;
        slice_sups(class, grid, &batch)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let phis: Vec<f64> = (1..=grid.l).map(|j| weight.eval(grid.hi(j))).collect();
    let slices: Vec<ReplicationSummary> = (0..grid.l)
        .map(|j| ReplicationSummary::from_values(rows.iter().map(|r| r[j]).collect(), seeds.clone()))
        .collect();
    let beta_hat = slices.iter().zip(&phis).map(|(s, p)| s.mean / p).fold(0.0, f64::max);
    let weighted = rows.iter().map(|r| r.iter().zip(&phis).map(|(v, p)| v / p).fold(0.0, f64::max)).collect();
    Ok(PsiBeta { slices, beta_hat, weighted: ReplicationSummary::from_values(weighted, seeds) })
}

/// Weight ψ(t) = t (log(log(1/t) ∨ e))^α for weighted CLT diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltWeight {
    pub alpha: f64,
}

impl CltWeight {
    pub fn new(alpha: f64) -> Result<Self> {
        let w = CltWeight { alpha };
        let ratios: Vec<f64> = (1..=8).map(|k| w.eval(10f64.powi(-k)) / 10f64.powi(-k)).collect();
        let increasing = ratios.windows(2).all(|p| p[1] > p[0]);
        if !increasing || !(ratios[7] > ratios[0]) {
            return domain("ψ(t)/t must increase without bound as t → 0");
        }
        Ok(w)
    }

    pub fn eval(&self, t: f64) -> f64 {
        NormWeight::PowerSlowVary { alpha: 1.0, slow: SlowVarying::LogLog { beta: self.alpha } }.eval(t)
    }

    /// sup_{0<x≤1/2} ψ(2x)/ψ(x) on a log grid.
    pub fn doubling_constant(&self) -> f64 {
        (0..=400)
            .map(|k| 0.5 * 10f64.powf(-(k as f64) / 20.0))
            .map(|x| self.eval(2.0 * x) / self.eval(x))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Insufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionTrend {
    pub name: String,
    pub verdict: Verdict,
    /// rows indexed by n, columns by δ (or a single column)
    pub values: Vec<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub doubling_constant: f64,
    pub conditions: Vec<ConditionTrend>,
}

impl CltReport {
    pub fn verdict(&self, name: &str) -> Option<Verdict> {
        self.conditions.iter().find(|c| c.name == name).map(|c| c.verdict)
    }
}

/// MC estimate of ψ_{n,q}(ρ) = E sup_{ρ/q < √t ≤ ρ} |F_n(t) − t| for the
/// uniform law, drawing only the sample points below ρ².
pub fn psi_halfline_prefix(n: usize, rho: f64, q: f64, reps: usize, seed: u64) -> Result<ReplicationSummary> {
    let u = rho * rho;
    let law = Law::UniformPrefix { u };
    let seeds: Vec<u64> = (0..reps).map(|i| rng::replicate_seed(seed, i as u64)).collect();
    let one = NormWeight::constant();
    let vals: Vec<Result<f64>> = par::map_indexed(reps, |i| {
        let b = draw_sample(&law, n, seeds[i])?;
        Ok(halfline_sorted(&b.x, n, u / (q * q), u, &one).value)
    });
    Ok(ReplicationSummary::from_values(vals.into_iter().collect::<Result<_>>()?, seeds))
}

/// Evaluates the weighted-CLT premises as trends over n and δ grids for the
/// uniform empirical c.d.f.: the entropy term r√(log log_q 1/r)/ψ(r), the
/// boundary term log log_q(1/r_n)/(ψ(r_n)√n), and the localized mean
/// √n ψ_{n,q}(r)/ψ(r) with MC error bars. A condition passes when its
/// limsup proxy (the max over n) decreases as δ ↓ 0 and the last n step
/// grows by at most the tolerance; the boundary term must decrease in n.
#[allow(clippy::too_many_arguments)]
pub fn clt_premise_check(
    weight: &CltWeight,
    ns: &[usize],
    r_n: &[f64],
    q: f64,
    deltas: &[f64],
    reps: usize,
    seed: u64,
    omega: Option<&dyn Fn(f64) -> f64>,
) -> Result<CltReport> {
    if ns.len() != r_n.len() || ns.len() < 2 || deltas.len() < 2 {
        return domain("need matching n and r_n grids (≥ 2) and ≥ 2 δ values");
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return domain("δ grid must be strictly decreasing");
    }
    let logq = |x: f64| x.ln() / q.ln();
    let mut conditions = Vec::new();

    // entropy term
    let h = |r: f64| r * logq(1.0 / r).max(1.0).ln().max(0.0).sqrt() / weight.eval(r);
    let mut rows = Vec::new();
    for &rn in r_n {
        let row: Vec<f64> = deltas
            .iter()
            .map(|&d| {
                let m = 400;
                (0..=m)
                    .map(|k| rn * (d / rn).powf(k as f64 / m as f64))
                    .filter(|&r| r > rn && r <= d)
                    .map(h)
                    .fold(0.0, f64::max)
            })
            .collect();
        rows.push(row);
    }
    conditions.push(trend_verdict("entropy", rows, 0.01));

    // boundary term
    let vals: Vec<f64> = ns
        .iter()
        .zip(r_n)
        .map(|(&n, &rn)| logq(1.0 / rn).max(1.0).ln() / (weight.eval(rn) * (n as f64).sqrt()))
        .collect();
    let dec = vals.windows(2).all(|w| w[1] < w[0]);
    conditions.push(ConditionTrend {
        name: "boundary".into(),
        verdict: if dec { Verdict::Pass } else { Verdict::Fail },
        detail: format!("values {:?}", vals),
        values: vec![vals],
    });

    // localized mean
    let mut rows = Vec::new();
    let mut omega_ok = true;
    for (a, (&n, &rn)) in ns.iter().zip(r_n).enumerate() {
        let mut row = Vec::with_capacity(deltas.len());
        for (b, &d) in deltas.iter().enumerate() {
            // shells ρ = δ, δ/q, … down to r_n
            let mut best = 0.0_f64;
            let mut rho = d;
            let mut k = 0u64;
            while rho > rn {
                let tag = (a as u64) << 40 | (b as u64) << 20 | k;
                let s = psi_halfline_prefix(n, rho, q, reps, rng::derive(seed, tag))?;
                best = best.max((n as f64).sqrt() * s.mean / weight.eval(rho));
                if let Some(om) = omega {
                    if om(rho) < (n as f64).sqrt() * (s.mean - 2.0 * s.stderr) {
                        omega_ok = false;
                    }
                }
                rho /= q;
                k += 1;
            }
            row.push(best);
        }
        rows.push(row);
    }
    conditions.push(trend_verdict("localized", rows, 0.1));
    if omega.is_some() {
        conditions.push(ConditionTrend {
            name: "modulus".into(),
            verdict: if omega_ok { Verdict::Pass } else { Verdict::Fail },
            values: Vec::new(),
            detail: "ω(ρ) ≥ √n ψ̂(ρ) − 2 se on every grid point".into(),
        });
    }
    Ok(CltReport { doubling_constant: weight.doubling_constant(), conditions })
}

fn trend_verdict(name: &str, rows: Vec<Vec<f64>>, tol: f64) -> ConditionTrend {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.len() < 2 || rows.iter().flatten().any(|v| !(v.is_finite() && *v > 0.0)) {
        return ConditionTrend { name: name.into(), verdict: Verdict::Insufficient, values: rows, detail: "empty grid cells".into() };
    }
    // limsup over n proxied by the max over the n grid
    let limsup: Vec<f64> = (0..cols).map(|c| rows.iter().map(|r| r[c]).fold(0.0, f64::max)).collect();
    let decreasing_in_delta = limsup.windows(2).all(|w| w[1] < w[0]);
    let k = rows.len();
    let settled = (0..cols).all(|c| rows[k - 1][c] <= rows[k - 2][c] * (1.0 + tol));
    let verdict = if decreasing_in_delta && settled { Verdict::Pass } else { Verdict::Fail };
    ConditionTrend {
        name: name.into(),
        verdict,
        detail: format!("limsup proxy {limsup:?}, decreasing in δ: {decreasing_in_delta}, settled in n: {settled}"),
        values: rows,
    }
}

/// Statistics the small oracle can tabulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SmallStatistic {
    /// ‖P_n − P‖ over the whole dictionary.
    SupDeviation,
    /// sup |P_n f/Pf − 1| over members with Pf > 0.
    SupRatio,
    /// sup over r < σ f ≤ δ of |P_n f − Pf|/φ_q(σ f), σ per the class convention.
    Weighted { grid: PeelingGrid, weight: NormWeight },
    /// sup |P_n f/Pf − 1| over r² < Pf ≤ δ.
    RatioRange { r: f64, delta: f64 },
    /// |P_n f − Pf| for a single member.
    Member(usize),
}

/// All empirical measures of an n-sample on a finite space, with their
/// multinomial probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallOracle {
    pub probs: Vec<f64>,
    pub n: usize,
    pub outcomes: Vec<(Vec<u32>, f64)>,
}

fn compositions(n: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(n);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in 0..=n {
        prefix.push(k);
        compositions(n - k, parts - 1, prefix, out);
        prefix.pop();
    }
}

pub fn exact_small_oracle(probs: &[f64], n: usize) -> Result<SmallOracle> {
    if probs.is_empty() || probs.len() > 6 || n == 0 || n > 5 {
        return Err(Error::Unsupported("oracle limited to space ≤ 6 and 1 ≤ n ≤ 5".into()));
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
        return domain("probabilities must sum to 1");
    }
    let mut comps = Vec::new();
    compositions(n as u32, probs.len(), &mut Vec::new(), &mut comps);
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let outcomes = comps
        .into_iter()
        .map(|c| {
            let mut p = fact(n as u32);
            for (&k, &pi) in c.iter().zip(probs) {
                p *= pi.powi(k as i32) / fact(k);
            }
            (c, p)
        })
        .collect();
    Ok(SmallOracle { probs: probs.to_vec(), n, outcomes })
}

impl SmallOracle {
    fn pn(&self, f: &[f64], counts: &[u32]) -> f64 {
        f.iter().zip(counts).map(|(a, &c)| a * c as f64).sum::<f64>() / self.n as f64
    }

    /// Value of `stat` on one outcome.
    pub fn statistic(&self, class: &FunctionClass, stat: &SmallStatistic, counts: &[u32]) -> Result<f64> {
        let dict = match &class.kind {
            ClassKind::FiniteDict(d) => d,
            _ => return domain("oracle statistics need a finite dictionary"),
        };
        let mut best = 0.0_f64;
        for k in 0..dict.funcs.len() {
            let f = &dict.funcs[k];
            let pf = dict.mean(k);
            let dev = self.pn(f, counts) - pf;
            let v = match stat {
                SmallStatistic::SupDeviation => dev.abs(),
                SmallStatistic::SupRatio => {
                    if pf > 0.0 {
                        (dev / pf).abs()
                    } else {
                        0.0
                    }
                }
                SmallStatistic::RatioRange { r, delta } => {
                    if pf > r * r && pf <= *delta {
                        (dev / pf).abs()
                    } else {
                        0.0
                    }
                }
                SmallStatistic::Weighted { grid, weight } => {
                    let s = crate::classes::sigma_of(class, &Member::Dict(k))?;
                    match weight.stepped(grid, s) {
                        Some(p) => dev.abs() / p,
                        None => 0.0,
                    }
                }
                SmallStatistic::Member(m) => {
                    if k == *m {
                        dev.abs()
                    } else {
                        0.0
                    }
                }
            };
            best = best.max(v);
        }
        Ok(best)
    }

    /// Exact law of `stat` as sorted (value, probability) atoms.
    pub fn law(&self, class: &FunctionClass, stat: &SmallStatistic) -> Result<Vec<(f64, f64)>> {
        let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(self.outcomes.len());
        for (c, p) in &self.outcomes {
            atoms.push((self.statistic(class, stat, c)?, *p));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if (last.0 - v).abs() <= 1e-14 * v.abs().max(1.0) => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        Ok(merged)
    }

    pub fn expectation(&self, class: &FunctionClass, stat: &SmallStatistic) -> Result<f64> {
        Ok(self.law(class, stat)?.iter().map(|(v, p)| v * p).sum())
    }

    pub fn moment(&self, class: &FunctionClass, stat: &SmallStatistic, p: f64) -> Result<f64> {
        Ok(self.law(class, stat)?.iter().map(|(v, w)| v.powf(p) * w).sum())
    }

    /// Pr{stat ≥ x}.
    pub fn tail(&self, class: &FunctionClass, stat: &SmallStatistic, x: f64) -> Result<f64> {
        Ok(self.law(class, stat)?.iter().filter(|(v, _)| *v >= x).map(|(_, p)| p).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn batch_1d(xs: &[f64]) -> SampleBatch {
        let mut x = xs.to_vec();
        x.sort_by(f64::total_cmp);
        SampleBatch { law: Law::Uniform1d, n: x.len(), seed: 0, x, y: vec![], counts: vec![] }
    }

    #[test]
    fn determinism() {
        let a = draw_sample(&Law::Uniform1d, 3, 42).unwrap();
        let b = draw_sample(&Law::Uniform1d, 3, 42).unwrap();
        assert_eq!(a, b);
        let c = draw_sample(&Law::CoordC0 { j_max: 5 }, 17, 1).unwrap();
        assert_eq!(c.counts[0], 17);
        let d = draw_sample(&Law::Classification { eta: Eta::Constant(1.0) }, 20, 3).unwrap();
        assert!(d.y.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn halfline_hand_cases() {
        let b = batch_1d(&[0.3]);
        let r = sup_halfline(&b, 0.0, 0.5, &NormWeight::constant()).unwrap();
        assert_relative_eq!(r.value, 0.7, max_relative = 1e-12);
        let n = 10;
        let grid: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
        let b = batch_1d(&grid);
        let r = sup_halfline(&b, 0.0, 1.0, &NormWeight::constant()).unwrap();
        assert_relative_eq!(r.value, 0.1, max_relative = 1e-9);
    }

    #[test]
    fn intervals_hand_cases() {
        let b = batch_1d(&[0.5]);
        let r = sup_intervals(&b, 0.0, 1.0, &NormWeight::constant()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
        let empty = SampleBatch { law: Law::Uniform1d, n: 10, seed: 0, x: vec![], y: vec![], counts: vec![] };
        let r = sup_intervals(&empty, 0.0, 0.5, &NormWeight::constant()).unwrap();
        assert_relative_eq!(r.value, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn c0_degenerate() {
        let b = SampleBatch { law: Law::CoordC0 { j_max: 6 }, n: 10, seed: 0, x: vec![], y: vec![], counts: vec![10, 0, 0, 0, 0, 0] };
        let r = sup_c0(&b, 2, 6, C0Norm::Ratio).unwrap();
        assert_relative_eq!(r.value, 1.0);
        let r = sup_c0(&b, 1, 1, C0Norm::Ratio).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn wavelet_counts() {
        let v = vec![3u32, 0, 4, 1, 2];
        let wm = WaveletMatrix::new(&v);
        for i in 0..=5 {
            for j in 0..=6 {
                let want = v[..i].iter().filter(|&&x| (x as usize) < j).count();
                assert_eq!(wm.count_less(i, j), want, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn box2_matches_exhaustive() {
        for seed in 0..30 {
            let b = draw_sample(&Law::UniformBox { d: 2 }, 12, seed).unwrap();
            for (r, d) in [(0.0, 0.7), (0.2, 0.6), (0.05, 1.0)] {
                for w in [NormWeight::constant(), NormWeight::identity()] {
                    let fast = sup_box2(&b, r, d, &w, 2).value;
                    let slow = sup_box_small(&b, r, d, &w).value;
                    assert_relative_eq!(fast, slow, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn intervals_linear_matches_pairs() {
        for seed in 0..30 {
            let b = draw_sample(&Law::Uniform1d, 25, seed).unwrap();
            for (r, d) in [(0.0, 1.0), (0.1, 0.5), (0.3, 0.4)] {
                let w = NormWeight::constant();
                let fast = intervals_linear(&b.x, b.n, r, d, &w).value;
                let slow = intervals_quadratic(&b.x, b.n, r, d, &w).value;
                assert_relative_eq!(fast, slow, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn monotone_solvers_agree() {
        let b = draw_sample(&Law::Uniform1d, 200, 5).unwrap();
        let a = sup_monotone(&b, 0.3, 200, MonotoneSolver::Pava).unwrap();
        let f = sup_monotone(&b, 0.3, 2000, MonotoneSolver::FrankWolfe).unwrap();
        assert!(a.notes[0].1 < 1e-6, "{:?}", a.notes);
        assert_relative_eq!(a.value, f.value, max_relative = 1e-3);
        let v = evaluate_witness(&b, &a.witness, &NormWeight::constant());
        assert_relative_eq!(v, a.value, max_relative = 1e-9);
    }

    #[test]
    fn pava_pairs() {
        assert_eq!(pava(&[1.0, 0.0], &[1.0, 1.0]), vec![0.5, 0.5]);
        assert_eq!(pava(&[0.1, 0.2, 0.3], &[1.0; 3]), vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn oracle_two_cells() {
        let o = exact_small_oracle(&[0.5, 0.5], 2).unwrap();
        let dict = FiniteDict::new(vec![0.5, 0.5], vec![vec![1.0, 0.0]]).unwrap();
        let class = FunctionClass::finite(dict, crate::classes::SigmaConvention::SqrtMean);
        let law = o.law(&class, &SmallStatistic::SupDeviation).unwrap();
        assert_eq!(law.len(), 2);
        assert_relative_eq!(law[0].0, 0.0);
        assert_relative_eq!(law[0].1, 0.5);
        assert_relative_eq!(law[1].0, 0.5);
        assert_relative_eq!(o.expectation(&class, &SmallStatistic::SupDeviation).unwrap(), 0.25);
    }

    #[test]
    fn clt_weight_invariant() {
        assert!(CltWeight::new(0.0).is_err());
        let w = CltWeight::new(1.0).unwrap();
        assert!(w.doubling_constant() < 2.5);
    }
}
