//! Report, plot-data and audit-table emission.

use std::io::Write;

use damt_core::{sorted_adjusted_series, AnalysisReport, FoldPlan, FoldScreenResult};
use serde::Serialize;

pub const REPORT_COLUMNS: [&str; 6] = ["name", "ate", "raw_p", "adjusted_p", "mean_cv_rank", "pct_top"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Delimited,
    Json,
}

/// C `%.{digits}g`: `digits` significant digits, trailing zeros dropped,
/// scientific notation when the exponent is below -4 or at least `digits`,
/// with a signed exponent of at least two digits.
pub fn format_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.unsigned_abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g6(x: f64) -> String {
    format_g(x, 6)
}

pub fn emit_report(report: &AnalysisReport, format: Format) -> Vec<u8> {
    match format {
        Format::Delimited => emit_delimited(report),
        Format::Json => emit_json(report),
    }
}

fn emit_delimited(report: &AnalysisReport) -> Vec<u8> {
    let mut w = crate::io::writer(b',', Vec::new());
    w.write_record(REPORT_COLUMNS).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.name.clone(),
            g6(r.ate),
            g6(r.raw_p),
            g6(r.adjusted_p),
            g6(r.mean_cv_rank),
            g6(r.pct_top),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Serialize)]
struct JsonReport<'a> {
    method: &'static str,
    config: JsonConfig,
    fingerprint: JsonFingerprint<'a>,
    rows: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct JsonConfig {
    folds: usize,
    top: usize,
    direction: &'static str,
    alpha: f64,
    seed: u64,
}

#[derive(Serialize)]
struct JsonFingerprint<'a> {
    n: usize,
    p: usize,
    n_treated: usize,
    n_control: usize,
    sha256: &'a str,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    name: &'a str,
    outcome: usize,
    ate: f64,
    raw_p: f64,
    adjusted_p: f64,
    mean_cv_rank: f64,
    pct_top: f64,
    z_stat: Option<f64>,
    eic_variance: f64,
    degenerate: bool,
}

fn emit_json(report: &AnalysisReport) -> Vec<u8> {
    let (c, f) = (&report.config, &report.fingerprint);
    let doc = JsonReport {
        method: report.method.as_str(),
        config: JsonConfig {
            folds: c.folds,
            top: c.p_star,
            direction: c.direction.as_str(),
            alpha: c.alpha,
            seed: c.seed,
        },
        fingerprint: JsonFingerprint {
            n: f.n,
            p: f.p,
            n_treated: f.n_treated,
            n_control: f.n_control,
            sha256: &f.checksum,
        },
        rows: report
            .rows
            .iter()
            .map(|r| JsonRow {
                name: &r.name,
                outcome: r.outcome,
                ate: r.ate,
                raw_p: r.raw_p,
                adjusted_p: r.adjusted_p,
                mean_cv_rank: r.mean_cv_rank,
                pct_top: r.pct_top,
                z_stat: r.z_stat.is_finite().then_some(r.z_stat),
                eic_variance: r.eic_variance,
                degenerate: r.degenerate,
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("serializable report");
    out.push(b'\n');
    out
}

/// `rank,adjusted_p` with adjusted p-values ascending.
pub fn emit_plot_data(report: &AnalysisReport) -> Vec<u8> {
    let mut out = b"rank,adjusted_p\n".to_vec();
    for (rank, q) in sorted_adjusted_series(report) {
        writeln!(out, "{rank},{}", g6(q)).expect("in-memory write");
    }
    out
}

/// `row,fold` with 0-based data rows and 1-based fold labels.
pub fn write_fold_plan<W: Write>(plan: &FoldPlan, out: W) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "row,fold")?;
    for (row, fold) in plan.labels().iter().enumerate() {
        writeln!(out, "{row},{fold}")?;
    }
    out.flush()
}

/// `fold,outcome,effect,rank` for every outcome, in outcome order.
pub fn write_fold_ranking<W: Write>(result: &FoldScreenResult, names: &[String], out: W) -> csv::Result<()> {
    let mut w = crate::io::writer(b',', std::io::BufWriter::new(out));
    w.write_record(["fold", "outcome", "effect", "rank"])?;
    let fold = result.fold.to_string();
    for (j, (e, r)) in result.effects.iter().zip(&result.ranks).enumerate() {
        w.write_record([fold.as_str(), names[j].as_str(), &e.to_string(), &r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (4.75, "4.75"),
            (2.0, "2"),
            (100.0, "100"),
            (9.164_819_977_848_275e-14, "9.16482e-14"),
            (1.541_725_790_028_002e-8, "1.54173e-08"),
            (0.0001, "0.0001"),
            (0.00012345678, "0.000123457"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (999999.5, "1e+06"),
            (-0.5, "-0.5"),
            (1e100, "1e+100"),
            (0.1 + 0.2, "0.3"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x, 6), want, "{x}");
        }
        assert_eq!(format_g(f64::INFINITY, 6), "inf");
    }
}
