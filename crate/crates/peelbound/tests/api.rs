use approx::assert_relative_eq;
use peelbound::classes::{self, FiniteDict, FunctionClass, Member, SigmaConvention, UnitLaw};
use peelbound::lab::{self, StudyKind, StudySpec};
use peelbound::learn::{self, Cdf};
use peelbound::peel::{self, Mode, NormWeight};
use peelbound::sim::{self, Law, SmallStatistic};
use peelbound::{par, rng, Error};

#[test]
fn gamma_values() {
    assert_eq!(peel::gamma_inverse(0.0), 0.0);
    assert_relative_eq!(peel::gamma_inverse(1.0), 2f64.ln(), epsilon = 1e-12);
    assert_relative_eq!(peel::gamma_inverse(2.0), 2.0 * 3f64.ln(), epsilon = 1e-12);
    assert_relative_eq!(peel::gamma(2f64.ln()), 1.0, epsilon = 1e-10);
    assert_relative_eq!(peel::gamma(2.0 * 3f64.ln()), 2.0, epsilon = 1e-10);
}

#[test]
fn grid_examples() {
    let g = peel::build_grid(0.1, 0.4, 2.0).unwrap();
    assert_eq!(g.l, 2);
    assert_relative_eq!(g.hi(1), 0.2, epsilon = 1e-12);
    assert_relative_eq!(g.hi(2), 0.4, epsilon = 1e-12);
    let g = peel::build_grid(0.1, 0.5, 2.0).unwrap();
    assert_eq!(g.l, 3);
    assert_relative_eq!(g.hi(3), 0.5, epsilon = 1e-12);
    assert_eq!(peel::build_grid(0.01, 0.25, 2.0).unwrap().l, 5);
    assert!(peel::build_grid(0.5, 0.4, 2.0).is_err());
}

#[test]
fn sigma_examples() {
    assert_relative_eq!(classes::sigma_of(&FunctionClass::halfline(), &Member::HalfLine(0.25)).unwrap(), 0.5);
    assert!(classes::sigma_of(&FunctionClass::halfline(), &Member::HalfLine(0.75)).is_err());
    assert_relative_eq!(classes::monotone_envelope_sq_closed(1.0), 1.0, epsilon = 1e-12);
    assert_relative_eq!(classes::monotone_envelope_sq_closed((-0.5f64).exp()), 2.0 / std::f64::consts::E, epsilon = 1e-12);
    for law in [UnitLaw::Uniform, UnitLaw::Power(2.0)] {
        assert!((classes::monotone_envelope_sq_quadrature(0.3, law) - classes::monotone_envelope_sq_closed(0.3)).abs() < 1e-6);
    }
}

#[test]
fn t2_ratio_bound_formula() {
    let (n, r, delta, q, beta, s) = (1000, 0.1, 0.25, 2.0, 0.5, 3.0);
    let pair = peel::ratio_bound_t2(n, r, delta, q, beta, s, Mode::Explicit).unwrap();
    let nr2 = n as f64 * r * r;
    let radius = (2.0 * s * (1.0 + 2.0 * beta) / nr2).sqrt() + s / (3.0 * nr2);
    assert_relative_eq!(pair.upper.upper_threshold(), q * q * (beta + radius), max_relative = 1e-9);
}

#[test]
fn oracle_law_sums_to_one() {
    let o = sim::exact_small_oracle(&[0.2, 0.3, 0.5], 4).unwrap();
    let total: f64 = o.outcomes.iter().map(|(_, p)| p).sum();
    assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    // one cell indicator with p = 1/2, n = 1: |P_1 f − 1/2| = 1/2 always
    let dict = FiniteDict::new(vec![0.5, 0.5], vec![vec![1.0, 0.0]]).unwrap();
    let class = FunctionClass::finite(dict, SigmaConvention::SqrtMean);
    let o = sim::exact_small_oracle(&[0.5, 0.5], 1).unwrap();
    assert_relative_eq!(o.expectation(&class, &SmallStatistic::SupDeviation).unwrap(), 0.5, epsilon = 1e-12);
}

#[test]
fn bernstein_dominates_exact_binomial_tail() {
    // Σ(Y − p) for Bernoulli(p), n = 5
    let p: f64 = 0.3;
    let n = 5;
    let var = p * (1.0 - p);
    for t in [0.5, 1.0, 2.0, 3.0] {
        let bound = peel::tail_bounds(peel::TailKind::Bernstein, n, var, 0.0, t).unwrap().prob;
        let mut exact = 0.0;
        for k in 0..=n {
            if k as f64 - n as f64 * p >= t {
                let c = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
                exact += c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            }
        }
        assert!(exact <= bound + 1e-15, "t={t}: {exact} > {bound}");
    }
}

#[test]
fn halfline_sup_matches_brute_force() {
    let n = 200;
    let b = sim::draw_sample(&Law::Uniform1d, n, 5).unwrap();
    let w = NormWeight::identity();
    let fast = sim::sup_halfline(&b, 1.0 / n as f64, 0.5, &w).unwrap().value;
    let mut xs: Vec<f64> = (0..n).map(|i| b.point(i)[0]).collect();
    xs.sort_by(f64::total_cmp);
    let mut best: f64 = 0.0;
    // candidates: each order statistic (closed) and just below it (open)
    for (i, &x) in xs.iter().enumerate() {
        for (t, count) in [(x, (i + 1) as f64), (x - 1e-12, i as f64)] {
            if t > 1.0 / n as f64 && t <= 0.5 {
                best = best.max((count / n as f64 - t).abs() / t.sqrt());
            }
        }
    }
    // right end, and the limit t ↓ 1/n at the open left end
    let lo = 1.0 / n as f64;
    for (t, count) in [(0.5, xs.iter().filter(|&&x| x <= 0.5).count() as f64), (lo, xs.iter().filter(|&&x| x <= lo).count() as f64)] {
        best = best.max((count / n as f64 - t).abs() / t.sqrt());
    }
    assert!((fast - best).abs() <= 1e-6 * best.max(1.0), "{fast} vs {best}");
}

#[test]
fn replicates_do_not_depend_on_workers() {
    let f = |i: usize| {
        let b = sim::draw_sample(&Law::Uniform1d, 500, rng::replicate_seed(9, i as u64)).unwrap();
        sim::sup_intervals(&b, 0.0, 0.5, &NormWeight::constant()).unwrap().value
    };
    let a = par::with_workers(4, || par::map_indexed(16, f));
    let b = par::map_indexed_seq(16, f);
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn levy_step_against_dense_scan() {
    let f = Cdf::empirical(&[0.1, 0.15, 0.4, 0.42, 0.8]);
    let g = Cdf::Linear { slope: 1.0 };
    let m = learn::mult_levy_distance(&f, &g, 0.05, 1.0).unwrap();
    // brute force: smallest c on a fine log grid satisfying both dominations on a dense t grid
    let ts: Vec<f64> = (1..20_000).map(|k| 0.05 + 0.95 * k as f64 / 20_000.0).collect();
    let ok = |c: f64| ts.iter().all(|&t| f.eval(t) <= c * g.eval(c * t) + 1e-12 && g.eval(t) <= c * f.eval(c * t) + 1e-12);
    let mut lc = 0.0_f64;
    while !ok(lc.exp()) {
        lc += 1e-4;
    }
    assert!((m - lc).abs() < 2e-3, "{m} vs {lc}");
}

#[test]
fn study_config_round_trip() {
    let spec = StudySpec::new(StudyKind::RatioScaling)
        .with_class("halfline")
        .with_ns(&[100, 1000])
        .with_reps(3, 42)
        .with_param("hi", 0.25);
    let text = lab::emit_config(&spec).unwrap();
    assert_eq!(lab::parse_config(&text).unwrap(), spec);
}

#[test]
fn config_rejections() {
    let bad = "[study]\nkind = \"ratio-scaling\"\nclass = \"halfline\"\nns = [1000, 100]\n";
    assert!(matches!(lab::parse_config(bad), Err(Error::Config(_))));
    let bad = "[study]\nkind = \"ratio-scaling\"\nclass = \"monotone\"\nns = [100]\n";
    assert!(matches!(lab::parse_config(bad), Err(Error::Config(_))));
    let bad = "[study]\nkind = \"erm\"\nproblem = \"ls\"\nns = [100]\nreps = 0\n";
    assert!(matches!(lab::parse_config(bad), Err(Error::Config(_))));
    assert!(matches!(lab::parse_config("[study]\nkind = 3\n"), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn small_study_writes_and_reads_csv() {
    let spec = StudySpec::new(StudyKind::RatioScaling).with_class("intervals").with_ns(&[50, 100, 200]).with_reps(4, 1);
    let res = lab::run_study(&spec).unwrap();
    let csv = lab::emit_csv(&res.rows).unwrap();
    assert_eq!(lab::parse_csv(&csv).unwrap(), res.rows);
    let again = lab::run_study(&spec).unwrap();
    assert_eq!(res.fingerprint(), again.fingerprint());
    let json: serde_json::Value = serde_json::from_str(&lab::emit_json(&res).unwrap()).unwrap();
    assert_eq!(json["quantile"], "type-7");
}

#[test]
fn csv_parse_error_reports_line() {
    let text = "study,class,n,rep,statistic,value,seed\nx,y,10,0,sup,0.5,1\nx,y,ten,0,sup,0.5,1\n";
    assert!(matches!(lab::parse_csv(text), Err(Error::Parse { line: 3, .. })));
}

#[test]
fn oracle_study_rows() {
    let spec = StudySpec::new(StudyKind::Oracle).with_ns(&[2]).with_param("p0", 0.5).with_param("p1", 0.5);
    let res = lab::run_study(&spec).unwrap();
    let total: f64 = res.rows.iter().filter(|r| r.statistic == "prob").map(|r| r.value).sum();
    assert_relative_eq!(total, 1.0, epsilon = 1e-12);
}
