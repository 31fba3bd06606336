//! CSV / JSON / text rendering of sweep reports.
//!
//! Exact values are written as `"num/den"` strings; float renderings carry 17
//! significant digits and are informational only. Sign columns are computed
//! from the exact values.

use std::io::Write;

use gpi_core::exact::{format_float, format_rational, to_f64, Sign};
use gpi_core::multinomial::ProbVector;
use gpi_core::ExactRational;
use serde_json::{json, Value};

use crate::convergence::ConvergenceTable;
use crate::sweep::{GapRecord, GapStats, Outcome, SummaryMatrix, SweepReport};

pub const CSV_HEADER: [&str; 14] = [
    "m",
    "d",
    "sample",
    "variant",
    "p",
    "p_float",
    "theorem_gap",
    "theorem_gap_float",
    "theorem_sign",
    "gaussian_gap",
    "gaussian_gap_float",
    "gaussian_sign",
    "finite_n",
    "status",
];

fn join_p(p: &ProbVector) -> String {
    p.entries().iter().map(format_rational).collect::<Vec<_>>().join(";")
}

fn join_p_float(p: &ProbVector) -> String {
    p.entries()
        .iter()
        .map(|x| format_float(to_f64(x)))
        .collect::<Vec<_>>()
        .join(";")
}

fn outcome_cells(o: Option<&Outcome>) -> [String; 3] {
    match o.and_then(Outcome::value) {
        Some(v) => [format_rational(v), format_float(to_f64(v)), Sign::of(v).to_string()],
        None => Default::default(),
    }
}

fn status(r: &GapRecord) -> String {
    let mut exceeded = Vec::new();
    if matches!(r.theorem_gap, Outcome::BudgetExceeded(_)) {
        exceeded.push("theorem");
    }
    if matches!(r.gaussian_gap, Some(Outcome::BudgetExceeded(_))) {
        exceeded.push("gaussian");
    }
    if r.finite_n.iter().any(|f| matches!(f.gap, Outcome::BudgetExceeded(_))) {
        exceeded.push("finite_n");
    }
    if exceeded.is_empty() {
        "ok".into()
    } else {
        format!("budget_exceeded:{}", exceeded.join("+"))
    }
}

fn finite_cell(r: &GapRecord) -> String {
    r.finite_n
        .iter()
        .map(|f| match &f.gap {
            Outcome::Value(v) => format!("{}={}", f.trials, format_rational(v)),
            Outcome::BudgetExceeded(_) => format!("{}=budget_exceeded", f.trials),
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per record. An `elapsed_ms` column is appended when timings were requested.
pub fn write_csv<W: Write>(report: &SweepReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let timings = report.config.timings;
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if timings {
        header.push("elapsed_ms");
    }
    w.write_record(&header)?;
    for r in &report.records {
        let [tg, tgf, ts] = outcome_cells(Some(&r.theorem_gap));
        let [gg, ggf, gs] = outcome_cells(r.gaussian_gap.as_ref());
        let mut row = vec![
            r.m.to_string(),
            r.d.to_string(),
            r.sample.to_string(),
            r.variant.to_string(),
            join_p(&r.p),
            join_p_float(&r.p),
            tg,
            tgf,
            ts,
            gg,
            ggf,
            gs,
            finite_cell(r),
            status(r),
        ];
        if timings {
            row.push(r.elapsed_ms.map(|ms| format!("{ms:.3}")).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn exact_json(v: Option<&ExactRational>) -> (Value, Value) {
    match v {
        Some(v) => (Value::String(format_rational(v)), num(to_f64(v))),
        None => (Value::Null, Value::Null),
    }
}

fn outcome_json(o: Option<&Outcome>) -> Value {
    match o {
        None => Value::Null,
        Some(Outcome::Value(v)) => json!({
            "exact": format_rational(v),
            "float": num(to_f64(v)),
            "sign": Sign::of(v).as_str(),
        }),
        Some(Outcome::BudgetExceeded(msg)) => json!({ "budget_exceeded": msg }),
    }
}

fn p_json(p: &ProbVector) -> Value {
    json!({
        "exact": p.entries().iter().map(format_rational).collect::<Vec<_>>(),
        "float": p.entries().iter().map(|x| num(to_f64(x))).collect::<Vec<_>>(),
    })
}

fn record_json(r: &GapRecord) -> Value {
    let mut v = json!({
        "m": r.m,
        "d": r.d,
        "sample": r.sample,
        "variant": r.variant.as_str(),
        "p": p_json(&r.p),
        "theorem_gap": outcome_json(Some(&r.theorem_gap)),
        "gaussian_gap": outcome_json(r.gaussian_gap.as_ref()),
        "finite_n": r.finite_n.iter().map(|f| json!({
            "n": f.trials,
            "scaled_gap": outcome_json(Some(&f.gap)),
        })).collect::<Vec<_>>(),
        "status": status(r),
    });
    if let Some(ms) = r.elapsed_ms {
        v["elapsed_ms"] = num(ms);
    }
    v
}

fn stats_json(s: &GapStats) -> Value {
    let (min, min_f) = exact_json(s.min.as_ref());
    let (median, median_f) = exact_json(s.median.as_ref());
    json!({
        "count": s.count,
        "min": min,
        "min_float": min_f,
        "median": median,
        "median_float": median_f,
        "negatives": s.negatives,
        "budget_exceeded": s.budget_exceeded,
    })
}

pub fn summary_json(summary: &SummaryMatrix) -> Value {
    let cells: Vec<Value> = summary
        .rows
        .iter()
        .map(|row| {
            Value::Array(
                row.iter()
                    .map(|c| {
                        let stats: serde_json::Map<String, Value> =
                            c.stats.iter().map(|s| (s.kind.clone(), stats_json(s))).collect();
                        json!({ "m": c.m, "d": c.d, "stats": stats })
                    })
                    .collect(),
            )
        })
        .collect();
    json!({
        "rows": summary.rows.len(),
        "columns": summary.rows.first().map_or(0, Vec::len),
        "cells": cells,
    })
}

pub fn report_json(report: &SweepReport) -> Value {
    let c = &report.config;
    json!({
        "config": {
            "m_max": c.m_max,
            "d_max": c.d_max,
            "samples_per_cell": c.samples_per_cell,
            "sampler": c.sampler.as_str(),
            "grid": c.grid,
            "seed": c.seed,
            "variants": c.variants.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
            "oracle": c.oracle,
            "finite_n": c.finite_n,
            "fixed_points": c.fixed_points.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "max_terms": c.budget.max_terms,
            "max_wick_degree": c.budget.max_wick_degree,
        },
        "records": report.records.iter().map(record_json).collect::<Vec<_>>(),
        "summary": summary_json(&report.summary),
        "findings": report.findings.iter().map(|f| json!({
            "m": f.m,
            "d": f.d,
            "sample": f.sample,
            "variant": f.variant.as_str(),
            "kind": f.kind.as_str(),
            "p": p_json(&f.p),
            "theorem_gap": format_rational(&f.theorem_gap),
            "gaussian_gap": format_rational(&f.gaussian_gap),
        })).collect::<Vec<_>>(),
        "conjecture_watch": report.conjecture_watch.iter().map(|v| json!({
            "m": v.m,
            "d": v.d,
            "sample": v.sample,
            "p": p_json(&v.p),
            "gaussian_gap": format_rational(&v.gaussian_gap),
        })).collect::<Vec<_>>(),
    })
}

pub fn write_json<W: Write>(report: &SweepReport, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, &report_json(report))?;
    out.write_all(b"\n")
}

/// Text matrix of one statistic: rows are `m`, columns are `d`.
pub fn render_matrix(summary: &SummaryMatrix, kind: &str) -> String {
    let mut s = format!("{kind}: min over samples (negatives in brackets)\n");
    let d_max = summary.rows.first().map_or(0, Vec::len);
    s.push_str("       ");
    for d in 1..=d_max {
        s.push_str(&format!("{:>20}", format!("d={d}")));
    }
    s.push('\n');
    for row in &summary.rows {
        let m = row.first().map_or(0, |c| c.m);
        s.push_str(&format!("m={m:<5}"));
        for cell in row {
            let text = match cell.stat(kind) {
                Some(st) => match &st.min {
                    Some(v) if st.negatives > 0 => format!("{:.6e} [{}]", to_f64(v), st.negatives),
                    Some(v) => format!("{:.6e}", to_f64(v)),
                    None if st.budget_exceeded > 0 => "budget".into(),
                    None => "-".into(),
                },
                None => "-".into(),
            };
            s.push_str(&format!("{text:>20}"));
        }
        s.push('\n');
    }
    s
}

pub fn render_convergence(t: &ConvergenceTable) -> String {
    let mut s = format!(
        "p={} m={} gaussian_gap={} ({})\n",
        t.p,
        t.m,
        format_rational(&t.gaussian_gap),
        format_float(to_f64(&t.gaussian_gap))
    );
    s.push_str("N,scaled_gap,scaled_gap_float,abs_error_float,error_ratio\n");
    for r in &t.rows {
        match (&r.scaled_gap, &r.error) {
            (Some(g), Some(e)) => s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.trials,
                format_rational(g),
                format_float(to_f64(g)),
                format_float(to_f64(e)),
                r.ratio.map(|x| format!("{x:.6}")).unwrap_or_default()
            )),
            _ => s.push_str(&format!(
                "{},skipped,,,{}\n",
                r.trials,
                r.skipped.as_deref().unwrap_or("")
            )),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::SamplerKind;
    use crate::sweep::{run_sweep, SweepConfig};
    use gpi_core::Budget;

    fn report() -> SweepReport {
        run_sweep(&SweepConfig {
            m_max: 2,
            d_max: 2,
            sampler: SamplerKind::FixedList,
            fixed_points: vec![ProbVector::parse("1/2,1/4").unwrap()],
            finite_n: vec![4],
            budget: Budget::new(1_000_000, 24),
            ..SweepConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_csv(&report(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 4);
        assert!(lines[1].starts_with("1,2,0,equality,1/2;1/4,5.0000000000000000e-1;2.5000000000000000e-1,0,"));
        assert!(lines[4].contains(",13/32,4.0625000000000000e-1,positive,15/256,"));
    }

    #[test]
    fn json_shape() {
        let v = report_json(&report());
        assert_eq!(v["records"].as_array().unwrap().len(), 4);
        assert_eq!(v["summary"]["rows"], 2);
        assert_eq!(v["summary"]["columns"], 2);
        assert_eq!(v["records"][3]["theorem_gap"]["exact"], "13/32");
        assert_eq!(v["summary"]["cells"][1][1]["stats"]["theorem:slack"]["min"], "13/32");
    }

    #[test]
    fn matrix_text() {
        let r = report();
        let text = render_matrix(&r.summary, "gaussian");
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("-"));
    }
}
