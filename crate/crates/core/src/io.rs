//! CSV and JSON output schemas.
//!
//! | schema              | columns            |
//! |---------------------|--------------------|
//! | distribution series | `t,n,p`            |
//! | scalar series       | `t,value`          |
//! | stationary          | `n,pi`             |
//! | reference curve     | `alpha,pi0`        |
//! | gram dump           | `t,i,j,re,im`      |
//!
//! Floats are written in Rust's shortest round-trip form, so identical
//! numbers always produce identical bytes.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::ReferenceCurve;
use crate::observables::Distribution;
use crate::C64;

pub const SCHEMA_VERSION: u32 = 1;

pub const DISTRIBUTION_COLUMNS: [&str; 3] = ["t", "n", "p"];
pub const SCALAR_COLUMNS: [&str; 2] = ["t", "value"];
pub const STATIONARY_COLUMNS: [&str; 2] = ["n", "pi"];
pub const CURVE_COLUMNS: [&str; 2] = ["alpha", "pi0"];
pub const GRAM_COLUMNS: [&str; 5] = ["t", "i", "j", "re", "im"];

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}"))),
    }
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(header).map_err(csv_err)?;
    Ok(wr)
}

/// One `t,n,p` row per label and time.
pub fn write_distribution_series<'a, W, I>(w: W, series: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, &'a Distribution)>,
{
    let mut wr = writer(w, &DISTRIBUTION_COLUMNS)?;
    for (t, d) in series {
        for (l, p) in d.labels().iter().zip(d.probs()) {
            wr.write_record([t.to_string(), l.to_string(), p.to_string()]).map_err(csv_err)?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_scalar_series<W: Write>(w: W, series: &[(usize, f64)]) -> Result<()> {
    let mut wr = writer(w, &SCALAR_COLUMNS)?;
    for (t, v) in series {
        wr.write_record([t.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_stationary<W: Write>(w: W, pi: &Distribution) -> Result<()> {
    let mut wr = writer(w, &STATIONARY_COLUMNS)?;
    for (l, p) in pi.labels().iter().zip(pi.probs()) {
        wr.write_record([l.to_string(), p.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_reference_curve<W: Write>(w: W, curve: &ReferenceCurve) -> Result<()> {
    let mut wr = writer(w, &CURVE_COLUMNS)?;
    for (a, p) in curve.alphas.iter().zip(&curve.pi0) {
        wr.write_record([a.to_string(), p.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads `alpha,pi0` rows back as `(alphas, pi0)`.
pub fn read_reference_curve_rows<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != CURVE_COLUMNS {
        return Err(Error::Curve(format!("expected columns alpha,pi0, found {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Curve(format!("row {}: column {} is not a number", line + 2, CURVE_COLUMNS[k])))
        };
        xs.push(parse(0)?);
        ys.push(parse(1)?);
    }
    Ok((xs, ys))
}

/// Lower triangle (`i >= j`) of an overlap matrix at time `t`.
pub fn write_gram<W: Write>(w: W, t: usize, gram: &DMatrix<C64>) -> Result<()> {
    let mut wr = writer(w, &GRAM_COLUMNS)?;
    for i in 0..gram.nrows() {
        for j in 0..=i {
            let x = gram[(i, j)];
            wr.write_record([t.to_string(), i.to_string(), j.to_string(), x.re.to_string(), x.im.to_string()])
                .map_err(csv_err)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// JSON sidecar written next to every data file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema: String,
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub artifact_version: String,
    /// Base of every logarithm in entropy-like columns.
    pub log_base: u32,
    /// Echo of the configuration that produced the file.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl Metadata {
    pub fn new(schema: &str, columns: &[&str], config: serde_json::Value) -> Self {
        Metadata {
            schema: schema.to_string(),
            schema_version: SCHEMA_VERSION,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            artifact_version: crate::VERSION.to_string(),
            log_base: 2,
            config,
            extra: serde_json::Value::Null,
        }
    }

    pub fn with_extra(mut self, extra: serde_json::Value) -> Self {
        self.extra = extra;
        self
    }
}
