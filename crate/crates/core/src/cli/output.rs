use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::engine::{Comparison, ModelState, RunResult, RunSummary};
use crate::error::Result;
use crate::system::SystemSpec;

/// Nine significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.8e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn timeseries_header(result: &RunResult) -> Vec<String> {
    let mut h: Vec<String> = ["t_s", "mode", "T_int_C", "gamma"].iter().map(|s| s.to_string()).collect();
    match result.records.first().map(|r| &r.state) {
        Some(ModelState::Discrete(s)) => h.extend((1..=s.n_lay()).map(|k| format!("h_layer_{k}"))),
        _ => h.extend(["r_m".to_string(), "r_pcm_m".to_string()]),
    }
    h.extend(
        ["Q_pcm_W", "Q_ref_W", "Q_sec_W", "zeta_ref", "T_ref_out_C", "T_sec_out_C"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

/// Writes one row per record. Heat flows are totals over all capsules or
/// pipes; quantities of inactive circuits are left empty.
pub fn write_timeseries<W: Write>(result: &RunResult, spec: &SystemSpec, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(timeseries_header(result))?;
    for r in &result.records {
        let s = &r.solution;
        let mut row = vec![fmt_num(r.t), r.mode.as_str().to_string(), fmt_num(r.state.t_int()), fmt_num(r.gamma)];
        match &r.state {
            ModelState::Continuous(c) => row.extend([fmt_num(c.r), fmt_num(c.r_pcm)]),
            ModelState::Discrete(d) => row.extend(d.h_layers.iter().map(|h| fmt_num(*h))),
        }
        let ref_active = s.mode.is_some();
        let sec_active = s.t_sec_out.is_some();
        row.push(fmt_num(s.q_pcm_total(spec)));
        row.push(if ref_active { fmt_num(s.q_ref_total(spec)) } else { String::new() });
        row.push(if sec_active { fmt_num(s.q_sec_total(spec)) } else { String::new() });
        row.push(opt(s.zeta_ref));
        row.push(opt(s.t_ref_out));
        row.push(opt(s.t_sec_out));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_timeseries(result: &RunResult, spec: &SystemSpec, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_timeseries(result, spec, f)
}

/// Relative-error traces of a comparison, one column per layer count.
pub fn emit_comparison_series(cmp: &Comparison, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t_s".to_string()];
    header.extend(cmp.entries.iter().map(|e| format!("rel_error_n{}", e.n_lay)));
    w.write_record(&header)?;
    let rows = cmp.entries.iter().map(|e| e.series.len()).min().unwrap_or(0);
    for i in 0..rows {
        let mut row = vec![fmt_num(cmp.entries[0].series[i].0)];
        row.extend(cmp.entries.iter().map(|e| fmt_num(e.series[i].1)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ComparisonSummary<'a> {
    pub comparison: &'a Comparison,
    pub continuous: Option<&'a RunSummary>,
    pub discrete: Vec<&'a RunSummary>,
}

pub fn emit_summary<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(0.123456789123), "1.23456789e-1");
        assert_eq!(fmt_num(0.0), "0.00000000e0");
        assert_eq!(fmt_num(-3600.0), "-3.60000000e3");
    }
}
