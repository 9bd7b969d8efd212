use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use peelbound::classes;
use peelbound::expect::{self, ExpectationQuery};
use peelbound::lab::{self, StudyKind, StudyResult, StudySpec};
use peelbound::learn::ErmProblem;
use peelbound::peel::{self, Mode};

#[derive(Parser)]
#[command(name = "peelbound", version, about = "Peeling bounds and ratio-type empirical process studies")]
struct Cli {
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ratio bound over r² < Pf ≤ δ for the t² weight.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        s: f64,
        /// shape-only constants
        #[arg(long)]
        shape: bool,
    },
    /// Upper and lower bounds on E‖Σ(f − Pf)‖ for a VC-type class.
    Expect {
        #[arg(long, default_value = "intervals")]
        class: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        envelope: f64,
        #[arg(long)]
        shape: bool,
    },
    /// Monte Carlo ratio-scaling study.
    Simulate(StudyArgs),
    /// Simulate, then fit log-log slopes of the median and mean.
    Rates(StudyArgs),
    /// Margin-ratio experiment.
    Margin(StudyArgs),
    /// ERM excess risk study, or a certificate with --certificate.
    Erm {
        #[command(flatten)]
        study: StudyArgs,
        /// print the certificate at the first n instead of simulating
        #[arg(long)]
        certificate: bool,
    },
    /// Exact law of sup |P_n f − Pf| over cell indicators.
    Oracle {
        /// comma-separated cell probabilities
        #[arg(long, value_delimiter = ',')]
        probs: Vec<f64>,
        #[arg(long)]
        n: usize,
    },
    /// Run the acceptance criteria; exit status 0 iff all pass.
    Verify {
        #[arg(long, default_value_t = lab::DEFAULT_SEED)]
        seed: u64,
        /// only these criteria (1-11); skips the determinism rerun
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args, Clone)]
struct StudyArgs {
    /// TOML study config; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    weight: Option<String>,
    /// extra parameters, key=value
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_kv(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    Ok((k.trim().into(), v.trim().parse().map_err(|_| format!("bad number {v:?}"))?))
}

impl StudyArgs {
    fn spec(&self, kind: StudyKind) -> Result<StudySpec> {
        let mut spec = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                lab::parse_config(&text)?
            }
            None => StudySpec::new(kind),
        };
        if self.config.is_some() && spec.kind != kind {
            bail!("config describes a {:?} study", spec.kind);
        }
        if self.class.is_some() {
            spec.class = self.class.clone();
        }
        if self.problem.is_some() {
            spec.problem = self.problem.clone();
        }
        if !self.ns.is_empty() {
            spec.ns = self.ns.clone();
        }
        if let Some(r) = self.reps {
            spec.reps = r;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if self.weight.is_some() {
            spec.weight = self.weight.clone();
        }
        for (k, v) in &self.params {
            spec.params.insert(k.clone(), *v);
        }
        if let Some(p) = &self.csv {
            spec.csv = Some(p.display().to_string());
        }
        if let Some(p) = &self.json {
            spec.json = Some(p.display().to_string());
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn write_outputs(res: &StudyResult) -> Result<()> {
    if let Some(p) = &res.spec.csv {
        std::fs::write(p, lab::emit_csv(&res.rows)?).with_context(|| format!("writing {p}"))?;
    }
    if let Some(p) = &res.spec.json {
        std::fs::write(p, lab::emit_json(res)?).with_context(|| format!("writing {p}"))?;
    }
    Ok(())
}

fn print_summaries(res: &StudyResult) {
    for r in res.rows.iter().filter(|r| r.rep == "summary") {
        println!("{:>9} {:<24} {}", r.n, r.statistic, r.value);
    }
    for c in &res.checks {
        println!("[{}] {} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn study(args: &StudyArgs, kind: StudyKind) -> Result<StudyResult> {
    let res = lab::run_study(&args.spec(kind)?)?;
    write_outputs(&res)?;
    Ok(res)
}

fn model_for(class: &str) -> Result<peelbound::classes::EntropyModel> {
    Ok(match class {
        "intervals" => classes::intervals_entropy_model(),
        "halfline" => classes::halfline_entropy_model(),
        other => bail!("no entropy model for class {other:?}"),
    })
}

fn mode(shape: bool) -> Mode {
    if shape {
        Mode::shape()
    } else {
        Mode::Explicit
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Bound { n, r, delta, q, beta, s, shape } => {
            let pair = peel::ratio_bound_t2(n, r, delta, q, beta, s, mode(shape))?;
            println!("{}", serde_json::to_string_pretty(&pair)?);
            println!("threshold {} with probability at least {}", pair.upper.upper_threshold(), 1.0 - pair.upper.prob_bound);
        }
        Cmd::Expect { class, n, sigma, envelope, shape } => {
            let model = model_for(&class)?;
            let up = expect::expectation_upper(&ExpectationQuery::new(n, sigma, envelope, model, mode(shape)))?;
            let low = expect::expectation_lower(n, sigma, envelope, expect::interval_packing_log(sigma), 1.0, &model)?;
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "upper": up, "lower": low }))?);
        }
        Cmd::Simulate(a) => print_summaries(&study(&a, StudyKind::RatioScaling)?),
        Cmd::Rates(a) => {
            let res = study(&a, StudyKind::RatioScaling)?;
            print_summaries(&res);
            for stat in ["sup.q50", "sup.mean"] {
                let (ns, ys) = res.series(stat);
                match lab::fit_slope(&ns, &ys) {
                    Ok(f) => println!("slope of {stat}: {:.4} (intercept {:.4}, rms {:.4})", f.slope, f.intercept, f.rms),
                    Err(e) => println!("slope of {stat}: {e}"),
                }
            }
        }
        Cmd::Margin(a) => print_summaries(&study(&a, StudyKind::Margin)?),
        Cmd::Erm { study: a, certificate } => {
            if certificate {
                let spec = a.spec(StudyKind::Erm)?;
                let n = spec.ns[0];
                let get = |k: &str, d: f64| spec.params.get(k).copied().unwrap_or(d);
                let (q, level) = (get("q", 1.5), get("level", 0.05));
                let rep = match spec.problem.as_deref() {
                    Some("classification") => lab::classification_certificate(get("h", 0.1), n, level, q)?,
                    Some("ls") => lab::shape_certificate(&ErmProblem::FiniteDimLs { d: get("d", 5.0) as usize }, n, get("s", 3.0), q)?,
                    Some("isotonic") => lab::shape_certificate(&ErmProblem::MonotoneLs, n, get("s", 3.0), q)?,
                    _ => bail!("unknown problem"),
                };
                println!("{}", serde_json::to_string_pretty(&rep)?);
            } else {
                print_summaries(&study(&a, StudyKind::Erm)?);
            }
        }
        Cmd::Oracle { probs, n } => {
            let mut spec = StudySpec::new(StudyKind::Oracle).with_ns(&[n]);
            for (i, p) in probs.iter().enumerate() {
                spec = spec.with_param(&format!("p{i}"), *p);
            }
            let res = lab::run_study(&spec)?;
            let vals: Vec<_> = res.rows.iter().filter(|r| r.statistic == "value").collect();
            let probs: Vec<_> = res.rows.iter().filter(|r| r.statistic == "prob").collect();
            println!("{:>12} {:>12}", "value", "prob");
            for (v, p) in vals.iter().zip(&probs) {
                println!("{:>12.6} {:>12.6}", v.value, p.value);
            }
            print_summaries(&StudyResult { rows: res.rows.iter().filter(|r| r.rep == "summary").cloned().collect(), ..res });
        }
        Cmd::Verify { seed, only } => {
            let print = |c: &lab::CriterionOutcome| {
                println!("[{}] criterion {:>2} {:<26} {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name, c.detail)
            };
            if only.is_empty() {
                let out = lab::verify(seed, &mut |c| print(c));
                return Ok(out.iter().all(|c| c.pass));
            }
            let mut ok = true;
            for id in only {
                let c = lab::run_criterion(id, seed)?;
                print(&c);
                ok &= c.pass;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers;
    let outcome = match workers {
        Some(k) => peelbound::par::with_workers(k, || run(cli)),
        None => run(cli),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
