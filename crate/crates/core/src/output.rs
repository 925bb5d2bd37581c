//! CSV and JSON writers for the command-line outputs.
//!
//! CSV follows RFC 4180 with `.` as decimal separator; floats are written in
//! scientific notation with 17 significant digits so they round-trip.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::dfs::DfsDecomposition;
use crate::error::{Error, Result};
use crate::gates::GateRecord;
use crate::hilbert::{HilbertSpace, State};
use crate::stats::CampaignRow;
use crate::trajectory::Histogram;

pub const GATE_HEADER: [&str; 6] = ["omega_over_g2", "gamma3_over_g2", "g3_over_g2", "initial_label", "p0", "fidelity"];
pub const EIGEN_HEADER: [&str; 4] = ["re", "im", "is_dfs", "trunc_population"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_gate_records<W: Write>(w: W, records: &[GateRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(GATE_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record([
            fmt_f64(r.omega),
            fmt_f64(r.gamma3),
            fmt_f64(r.g3),
            r.initial_label.clone(),
            fmt_f64(r.p0),
            fmt_f64(r.fidelity),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a table written by [`write_gate_records`].
pub fn read_gate_records<R: Read>(r: R) -> Result<Vec<GateRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(GATE_HEADER) {
        return Err(Error::Io(std::io::Error::other(format!("unexpected header {header:?}"))));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Io(std::io::Error::other(e)));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        out.push(GateRecord {
            omega: parse(&row[0])?,
            gamma3: parse(&row[1])?,
            g3: parse(&row[2])?,
            initial_label: row[3].to_string(),
            p0: parse(&row[4])?,
            fidelity: parse(&row[5])?,
        });
    }
    Ok(out)
}

pub fn write_eigenvalues<W: Write>(w: W, decomp: &DfsDecomposition) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EIGEN_HEADER).map_err(csv_err)?;
    for (k, l) in decomp.eigenvalues.iter().enumerate() {
        out.write_record([
            fmt_f64(l.re),
            fmt_f64(l.im),
            decomp.is_dfs(k).to_string(),
            fmt_f64(decomp.trunc_population[k]),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn complex_list(v: &State) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

/// DFS basis as an array of amplitude lists, each amplitude `[re, im]`.
pub fn dfs_basis_json(decomp: &DfsDecomposition) -> Value {
    Value::Array(decomp.dfs_basis.iter().map(complex_list).collect())
}

/// Columns `t, p0`, then `re_<ket>, im_<ket>` of the normalized conditional
/// state for every tracked ket. `states` holds the unnormalized states.
pub fn write_evolution<W: Write>(
    w: W,
    space: &HilbertSpace,
    times: &[f64],
    states: &[State],
    track: &[[usize; 3]],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "p0".to_string()];
    let mut index = Vec::with_capacity(track.len());
    for &[l1, l2, n] in track {
        index.push(space.encode(l1, l2, n)?);
        header.push(format!("re_{l1}{l2}_{n}"));
        header.push(format!("im_{l1}{l2}_{n}"));
    }
    out.write_record(&header).map_err(csv_err)?;
    for (t, psi) in times.iter().zip(states) {
        let p0 = psi.norm_squared();
        let scale = if p0 > 0.0 { 1.0 / p0.sqrt() } else { 0.0 };
        let mut row = vec![fmt_f64(*t), fmt_f64(p0)];
        for &k in &index {
            row.push(fmt_f64(psi[k].re * scale));
            row.push(fmt_f64(psi[k].im * scale));
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(w: W, h: &Histogram) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t_start", "t_end", "count"]).map_err(csv_err)?;
    for (k, c) in h.counts.iter().enumerate() {
        out.write_record([fmt_f64(h.edges[k]), fmt_f64(h.edges[k + 1]), c.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_campaign<W: Write>(w: W, rows: &[CampaignRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "p0",
        "n_gates",
        "m_runs",
        "p_no_result",
        "success",
        "exponential_approx",
        "relative_error",
        "min_repeats",
    ])
    .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            fmt_f64(r.p0),
            r.n_gates.to_string(),
            r.m_runs.to_string(),
            fmt_f64(r.p_no_result),
            fmt_f64(r.success),
            fmt_f64(r.exponential_approx),
            fmt_f64(r.relative_error),
            r.min_repeats.map(|m| m.to_string()).unwrap_or_else(|| "infeasible".into()),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

/// Reads a state vector from a JSON array of numbers or `[re, im]` pairs.
/// The state must have the dimension of `space` and unit norm.
pub fn read_amplitudes<R: Read>(r: R, space: &HilbertSpace) -> Result<State> {
    let raw: Vec<Amplitude> = serde_json::from_reader(r)?;
    if raw.len() != space.dim() {
        return Err(Error::Dimension { expected: space.dim(), got: raw.len() });
    }
    let psi = State::from_iterator(
        raw.len(),
        raw.into_iter().map(|a| match a {
            Amplitude::Real(x) => Complex64::new(x, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }),
    );
    crate::evolve::check_normalized(&psi)?;
    Ok(psi)
}
