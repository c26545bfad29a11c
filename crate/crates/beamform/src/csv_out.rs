//! Sweep table as CSV: `method,snr_db,ns,nrs,k,r,se_mean,se_std,trials,seed`.

use std::io::{Read, Write};

use thiserror::Error;

use crate::sweep::SweepRow;

pub const HEADER: [&str; 10] = ["method", "snr_db", "ns", "nrs", "k", "r", "se_mean", "se_std", "trials", "seed"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
}

/// `%.9g`-style rendering; NaN is `nan`.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let mantissa = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{mantissa}e{exp}")
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            format_sig9(r.snr_db),
            r.ns.to_string(),
            r.nrs.to_string(),
            r.k.to_string(),
            r.r.to_string(),
            format_sig9(r.se_mean),
            format_sig9(r.se_std),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<SweepRow>, CsvError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CsvError::Parse { line: 1, msg: format!("unexpected header {header:?}") });
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |field: &str, e: &dyn std::fmt::Display| CsvError::Parse { line, msg: format!("{field}: {e}") };
        let float = |i: usize| -> Result<f64, CsvError> { rec[i].parse::<f64>().map_err(|e| err(HEADER[i], &e)) };
        let count = |i: usize| -> Result<usize, CsvError> { rec[i].parse::<usize>().map_err(|e| err(HEADER[i], &e)) };
        rows.push(SweepRow {
            method: rec[0].to_string(),
            snr_db: float(1)?,
            ns: count(2)?,
            nrs: count(3)?,
            k: count(4)?,
            r: count(5)?,
            se_mean: float(6)?,
            se_std: float(7)?,
            trials: count(8)?,
            seed: rec[9].parse::<u64>().map_err(|e| err("seed", &e))?,
        });
    }
    Ok(rows)
}
