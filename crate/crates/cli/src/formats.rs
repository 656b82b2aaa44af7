//! CSV outputs. Floats are written with 17 significant digits so that every
//! file parses back to the exact values that were written.

use std::path::Path;

use excitonwit_core::process::ReducedChi;
use excitonwit_core::protocol::ChiEstimate;

use crate::error::CliError;

pub const CHI_CURVE_HEADER: [&str; 9] = [
    "tau_fs",
    "chi_aaaa_mean",
    "chi_aaaa_std",
    "chi_aabb_mean",
    "chi_aabb_std",
    "chi_bbaa_mean",
    "chi_bbaa_std",
    "chi_bbbb_mean",
    "chi_bbbb_std",
];
pub const WITNESS_HEADER: [&str; 4] = ["T1_fs", "T2_fs", "wb_sim", "wb_theory"];
pub const RSWEEP_HEADER: [&str; 2] = ["r", "sigma"];
pub const CONDITIONING_HEADER: [&str; 3] = ["pair_set", "kappa", "det"];

/// `{:.16e}`: one leading digit plus 16 decimals.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiRow {
    pub tau_fs: f64,
    pub mean: [f64; 4],
    pub std: [f64; 4],
}

impl ChiRow {
    pub fn exact(chi: &ReducedChi) -> ChiRow {
        ChiRow {
            tau_fs: chi.tau,
            mean: chi.as_array(),
            std: [0.0; 4],
        }
    }

    pub fn estimate(e: &ChiEstimate) -> ChiRow {
        ChiRow {
            tau_fs: e.mean.tau,
            mean: e.mean.as_array(),
            std: e.std,
        }
    }

    pub fn chi(&self) -> ReducedChi {
        ReducedChi::from_array(self.tau_fs, self.mean)
    }

    fn fields(&self) -> Vec<String> {
        let mut out = vec![float(self.tau_fs)];
        for (m, s) in self.mean.iter().zip(&self.std) {
            out.push(float(*m));
            out.push(float(*s));
        }
        out
    }

    fn parse(v: &[f64]) -> ChiRow {
        ChiRow {
            tau_fs: v[0],
            mean: [v[1], v[3], v[5], v[7]],
            std: [v[2], v[4], v[6], v[8]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessRow {
    pub t1_fs: f64,
    pub t2_fs: f64,
    pub wb_sim: f64,
    /// NaN when no reference curve was given.
    pub wb_theory: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSweepRow {
    pub r: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningRow {
    pub pair_set: String,
    pub kappa: f64,
    pub det: f64,
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        _ => CliError::csv(path, msg),
    }
}

/// Raw records after checking the header.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let got = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(CliError::csv(
            path,
            format!("header {:?} does not match {:?}", got.iter().collect::<Vec<_>>(), header),
        ));
    }
    r.records().map(|rec| rec.map_err(|e| csv_err(path, e))).collect()
}

fn parse_float(path: &Path, line: usize, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::csv(path, format!("row {line}: `{s}` is not a number")))
}

fn read_numeric(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    read_rows(path, header)?
        .iter()
        .enumerate()
        .map(|(i, rec)| rec.iter().map(|s| parse_float(path, i + 1, s)).collect())
        .collect()
}

pub fn write_chi_curve(path: &Path, rows: &[ChiRow]) -> Result<(), CliError> {
    write_rows(path, &CHI_CURVE_HEADER, rows.iter().map(ChiRow::fields))
}

pub fn read_chi_curve(path: &Path) -> Result<Vec<ChiRow>, CliError> {
    let rows: Vec<ChiRow> = read_numeric(path, &CHI_CURVE_HEADER)?
        .iter()
        .map(|v| ChiRow::parse(v))
        .collect();
    if rows.windows(2).any(|w| !(w[1].tau_fs > w[0].tau_fs)) {
        return Err(CliError::csv(path, "tau_fs must be strictly increasing"));
    }
    Ok(rows)
}

pub fn write_witness(path: &Path, rows: &[WitnessRow]) -> Result<(), CliError> {
    write_rows(
        path,
        &WITNESS_HEADER,
        rows.iter()
            .map(|r| vec![float(r.t1_fs), float(r.t2_fs), float(r.wb_sim), float(r.wb_theory)]),
    )
}

pub fn read_witness(path: &Path) -> Result<Vec<WitnessRow>, CliError> {
    Ok(read_numeric(path, &WITNESS_HEADER)?
        .iter()
        .map(|v| WitnessRow {
            t1_fs: v[0],
            t2_fs: v[1],
            wb_sim: v[2],
            wb_theory: v[3],
        })
        .collect())
}

pub fn write_rsweep(path: &Path, rows: &[RSweepRow]) -> Result<(), CliError> {
    write_rows(path, &RSWEEP_HEADER, rows.iter().map(|r| vec![float(r.r), float(r.sigma)]))
}

pub fn read_rsweep(path: &Path) -> Result<Vec<RSweepRow>, CliError> {
    Ok(read_numeric(path, &RSWEEP_HEADER)?
        .iter()
        .map(|v| RSweepRow { r: v[0], sigma: v[1] })
        .collect())
}

pub fn write_conditioning(path: &Path, rows: &[ConditioningRow]) -> Result<(), CliError> {
    write_rows(
        path,
        &CONDITIONING_HEADER,
        rows.iter().map(|r| vec![r.pair_set.clone(), float(r.kappa), float(r.det)]),
    )
}

pub fn read_conditioning(path: &Path) -> Result<Vec<ConditioningRow>, CliError> {
    read_rows(path, &CONDITIONING_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            Ok(ConditioningRow {
                pair_set: rec[0].to_string(),
                kappa: parse_float(path, i + 1, &rec[1])?,
                det: parse_float(path, i + 1, &rec[2])?,
            })
        })
        .collect()
}

/// Free-form numeric table (used for time-resolved pump-probe records).
pub fn write_table(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<(), CliError> {
    let n = columns.first().map_or(0, |c| c.len());
    write_rows(
        path,
        header,
        (0..n).map(|i| columns.iter().map(|c| float(c[i])).collect()),
    )
}

pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    read_numeric(path, header)
}
