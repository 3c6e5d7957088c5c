use confset_core::harness::ExperimentReport;
use std::io::Write;

pub const SCHEMA_LINE: &str = "#schema=1";

const COLUMNS: [&str; 13] = [
    "model",
    "estimator",
    "n",
    "N",
    "K",
    "B",
    "epsilon",
    "mean_risk",
    "sd_risk",
    "mean_prop",
    "sd_prop",
    "undefined_count",
    "seed",
];

/// `v` rounded to `digits` significant digits, trailing zeros removed
/// (like C's `%g`).
pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        return format!("{}e{exp}", trim(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim(&format!("{v:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| sig(x, 6))
}

pub fn write_csv<W: Write>(report: &ExperimentReport, out: &mut W) -> anyhow::Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    let spec = &report.spec;
    for s in &report.summaries {
        w.write_record([
            spec.model.name(),
            spec.estimator.to_string(),
            spec.n_train.to_string(),
            spec.n_unlabeled.to_string(),
            spec.n_test.to_string(),
            spec.reps.to_string(),
            sig(s.epsilon, 6),
            opt(s.mean_risk),
            opt(s.sd_risk),
            sig(s.mean_prop, 6),
            sig(s.sd_prop, 6),
            s.undefined_count.to_string(),
            spec.master_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
