//! Monte Carlo property suites behind `confset verify`.

use super::{model_of, GaussParams, VerifyArgs};
use anyhow::bail;
use clap::ValueEnum;
use confset_core::confset::{
    excess_risk_terms, gaussian_competitor, prop5_bound_check, OracleConfidenceSet,
};
use confset_core::distributions::{gaussian_oracle_risk, GaussianMixtureParams, GenerativeModel};
use confset_core::estimators::{oracle_score_model, EstimatorKind};
use confset_core::harness::{run_experiment, ExperimentReport, ExperimentSpec};
use confset_core::normal::{logit, sigmoid};
use confset_core::rng::{derive_seed, seeded};

#[derive(Clone, Copy, ValueEnum)]
pub enum Suite {
    Prop2,
    Prop3,
    Prop5,
    Control,
}

type Transform = fn(f64) -> f64;

const GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
/// Largest tolerated `|mean prop - epsilon|` in the control suite.
const CONTROL_TOLERANCE: f64 = 0.10;

#[derive(Default)]
struct Tally {
    checks: usize,
    failed: usize,
}

impl Tally {
    fn check(&mut self, ok: bool, line: String) {
        self.checks += 1;
        if ok {
            println!("ok    {line}");
        } else {
            self.failed += 1;
            println!("FAIL  {line}");
        }
    }

    fn finish(self, suite: &str) -> anyhow::Result<()> {
        println!(
            "{suite}: {} of {} checks passed",
            self.checks - self.failed,
            self.checks
        );
        if self.failed > 0 {
            bail!("{suite}: {} check(s) failed", self.failed);
        }
        Ok(())
    }
}

fn logit_plus_07(e: f64) -> f64 {
    sigmoid(logit(e) + 0.7)
}

fn shift_005(e: f64) -> f64 {
    (e + 0.05).clamp(0.0, 1.0)
}

fn sharpened(e: f64) -> f64 {
    sigmoid(2.0 * logit(e) - 0.4)
}

fn prop2(budget: usize, seed: u64) -> anyhow::Result<()> {
    let params = GaussianMixtureParams::canonical(2.0)?;
    let competitors: [(&str, Transform); 3] = [
        ("sigmoid(logit+0.7)", logit_plus_07),
        ("clamp(eta+0.05)", shift_005),
        ("sigmoid(2logit-0.4)", sharpened),
    ];
    let mut tally = Tally::default();
    let mut stream = 0;
    for eps in [0.3, 0.5, 0.8] {
        let oracle = OracleConfidenceSet::gaussian(params.clone(), eps)?;
        for (name, g) in competitors {
            let competitor = gaussian_competitor(&params, name, g, eps)?;
            let mut rng = seeded(derive_seed(seed, stream));
            stream += 1;
            let t = excess_risk_terms(&oracle, &competitor, budget, &mut rng)?;
            let tol = 3.0 * t.lhs_se;
            tally.check(
                t.lhs >= -tol,
                format!("eps={eps} {name}: excess risk {:.6} >= 0 - {tol:.6}", t.lhs),
            );
            let tol = 3.0 * t.combined_se();
            tally.check(
                (t.lhs - t.rhs()).abs() <= tol,
                format!(
                    "eps={eps} {name}: |lhs {:.6} - rhs {:.6}| <= {tol:.6} (C {:.6}, A0B0 {:.6}, A1B1 {:.6})",
                    t.lhs,
                    t.rhs(),
                    t.c_term,
                    t.a0b0_term,
                    t.a1b1_term
                ),
            );
        }
    }
    tally.finish("prop2")
}

fn oracle_sweep(
    model: GenerativeModel,
    seed: u64,
    workers: usize,
) -> anyhow::Result<ExperimentReport> {
    let spec = ExperimentSpec::new(
        model,
        EstimatorKind::Oracle,
        1,
        1000,
        1000,
        GRID.to_vec(),
        100,
        seed,
    );
    Ok(run_experiment(&spec, workers)?)
}

fn prop3(seed: u64, workers: usize) -> anyhow::Result<()> {
    let mut tally = Tally::default();
    for delta in [0.5, 1.0, 2.0, 4.0] {
        let params = GaussianMixtureParams::canonical(delta)?;
        let risks = (1..=100)
            .map(|k| gaussian_oracle_risk(&params, k as f64 / 100.0))
            .collect::<Result<Vec<_>, _>>()?;
        let drop = risks.windows(2).position(|w| w[1] < w[0]);
        let shown: Vec<String> = risks
            .iter()
            .step_by(10)
            .map(|r| format!("{r:.4}"))
            .collect();
        tally.check(
            drop.is_none(),
            match drop {
                None => format!(
                    "delta={delta}: closed-form risk non-decreasing on 0.01..1 [{}]",
                    shown.join(" ")
                ),
                Some(i) => format!(
                    "delta={delta}: risk({:.2}) = {} > risk({:.2}) = {}",
                    (i + 1) as f64 / 100.0,
                    risks[i],
                    (i + 2) as f64 / 100.0,
                    risks[i + 1]
                ),
            },
        );
    }
    for model in [GenerativeModel::Model1, GenerativeModel::model2()] {
        let report = oracle_sweep(model.clone(), seed, workers)?;
        let stats: Vec<(f64, f64, f64)> = report
            .summaries
            .iter()
            .map(|s| {
                let defined = (s.records - s.undefined_count).max(1) as f64;
                let se = s.sd_risk.unwrap_or(0.0) / defined.sqrt();
                (s.epsilon, s.mean_risk.unwrap_or(f64::NAN), se)
            })
            .collect();
        for w in stats.windows(2) {
            let ((e0, r0, s0), (e1, r1, s1)) = (w[0], w[1]);
            let tol = 2.0 * s0.hypot(s1);
            tally.check(
                r1 >= r0 - tol,
                format!(
                    "model {}: risk({e1}) {r1:.4} >= risk({e0}) {r0:.4} - {tol:.4}",
                    model.name()
                ),
            );
        }
    }
    tally.finish("prop3")
}

fn prop5(budget: usize, seed: u64) -> anyhow::Result<()> {
    let model = GenerativeModel::gaussian(GaussianMixtureParams::canonical(2.0)?);
    let oracle = oracle_score_model(&model);
    let hats = [
        ("eta*", oracle.clone()),
        (
            "sigmoid(logit+0.2)",
            oracle.map_eta("logit+0.2", true, |e| sigmoid(logit(e) + 0.2)),
        ),
        (
            "sigmoid(logit+0.8)",
            oracle.map_eta("logit+0.8", true, |e| sigmoid(logit(e) + 0.8)),
        ),
    ];
    let mut tally = Tally::default();
    let mut stream = 0;
    for eps in [0.3, 0.5, 0.8] {
        for (name, hat) in &hats {
            let mut rng = seeded(derive_seed(seed, stream));
            stream += 1;
            let b = prop5_bound_check(&model, hat, eps, budget, &mut rng)?;
            if *name == "eta*" {
                tally.check(
                    b.lhs == 0.0 && b.rhs == 0.0,
                    format!("eps={eps} {name}: lhs {} = rhs {} = 0", b.lhs, b.rhs),
                );
                continue;
            }
            let tol = 3.0 * b.combined_se();
            tally.check(
                b.holds(3.0),
                format!(
                    "eps={eps} {name}: 0 <= lhs {:.6} <= rhs {:.6} (tolerance {tol:.6}, cdf term {:.6})",
                    b.lhs, b.rhs, b.cdf_term
                ),
            );
        }
    }
    tally.finish("prop5")
}

fn control(args: &VerifyArgs) -> anyhow::Result<()> {
    let model = model_of(args.model, &GaussParams::default());
    let spec = ExperimentSpec::new(
        model,
        args.estimator.into(),
        args.n,
        100,
        1000,
        GRID.to_vec(),
        100,
        args.seed,
    );
    let report = run_experiment(&spec, args.workers)?;
    println!(
        "model {} / {} / n={} N=100 K=1000 B=100 ({} failed fits)",
        spec.model.name(),
        spec.estimator,
        spec.n_train,
        report.failed_fits
    );
    let mut tally = Tally::default();
    for s in &report.summaries {
        let dev = (s.mean_prop - s.epsilon).abs();
        let ok = dev <= CONTROL_TOLERANCE;
        let rel = if ok { "<=" } else { ">" };
        tally.check(
            ok,
            format!(
                "eps={}: |prop {:.4} - eps| = {dev:.4} {rel} {CONTROL_TOLERANCE} (sd {:.4})",
                s.epsilon, s.mean_prop, s.sd_prop
            ),
        );
    }
    if tally.failed > 0 {
        println!("proportion control violated");
    }
    tally.finish("control")
}

pub fn run(args: VerifyArgs) -> anyhow::Result<()> {
    if args.budget < 2 {
        super::usage("--budget must be at least 2");
    }
    match args.suite {
        Suite::Prop2 => prop2(args.budget, args.seed),
        Suite::Prop3 => prop3(args.seed, args.workers),
        Suite::Prop5 => prop5(args.budget, args.seed),
        Suite::Control => control(&args),
    }
}
