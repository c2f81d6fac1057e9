use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrators::Method;
use crate::perfmodel::Counts;

pub const CSV_HEADER: [&str; 16] = [
    "method",
    "tau",
    "tol",
    "zeta",
    "error",
    "total_cost",
    "steps",
    "matvec",
    "jacvec",
    "rhs",
    "dot",
    "lincomb",
    "scale",
    "fetch",
    "store",
    "converged",
];

/// One point of a work-precision diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkPrecisionRecord {
    pub method: Method,
    pub tau: f64,
    pub tol: f64,
    pub zeta: f64,
    /// Relative l² error, `inf` when the run failed.
    pub error: f64,
    pub total_cost: f64,
    pub steps: usize,
    pub counts: Counts,
    pub converged: bool,
}

fn real(x: f64) -> String {
    if x.is_infinite() && x > 0.0 {
        "inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

impl WorkPrecisionRecord {
    fn to_row(&self) -> Vec<String> {
        let c = &self.counts;
        vec![
            self.method.as_str().to_string(),
            real(self.tau),
            real(self.tol),
            real(self.zeta),
            real(self.error),
            real(self.total_cost),
            self.steps.to_string(),
            c.matvec.to_string(),
            c.jacvec.to_string(),
            c.rhs.to_string(),
            c.dot.to_string(),
            c.lincomb.to_string(),
            c.scale.to_string(),
            c.fetch.to_string(),
            c.store.to_string(),
            self.converged.to_string(),
        ]
    }

    fn from_row(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Io(format!(
                "expected {} fields, got {}",
                CSV_HEADER.len(),
                row.len()
            )));
        }
        let f = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| {
                Error::Io(format!(
                    "bad number {:?} in column {}",
                    &row[i], CSV_HEADER[i]
                ))
            })
        };
        let u = |i: usize| -> Result<u64> {
            row[i].parse().map_err(|_| {
                Error::Io(format!(
                    "bad count {:?} in column {}",
                    &row[i], CSV_HEADER[i]
                ))
            })
        };
        let counts = Counts {
            matvec: u(7)?,
            jacvec: u(8)?,
            rhs: u(9)?,
            dot: u(10)?,
            lincomb: u(11)?,
            scale: u(12)?,
            fetch: u(13)?,
            store: u(14)?,
            ..Counts::default()
        };
        Ok(Self {
            method: row[0].parse()?,
            tau: f(1)?,
            tol: f(2)?,
            zeta: f(3)?,
            error: f(4)?,
            total_cost: f(5)?,
            steps: u(6)? as usize,
            counts,
            converged: row[15]
                .parse()
                .map_err(|_| Error::Io(format!("bad flag {:?}", &row[15])))?,
        })
    }
}

pub fn write_csv_to(records: &[WorkPrecisionRecord], w: impl Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in records {
        wr.write_record(r.to_row())?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv(records: &[WorkPrecisionRecord], path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(records, std::fs::File::create(path)?)
}

/// Reads records written by [`write_csv_to`]. The per-term lincomb total is
/// not part of the file and comes back as zero.
pub fn read_csv_from(r: impl Read) -> Result<Vec<WorkPrecisionRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Io("unexpected CSV header".into()));
    }
    rd.records()
        .map(|row| WorkPrecisionRecord::from_row(&row?))
        .collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<WorkPrecisionRecord>> {
    read_csv_from(std::fs::File::open(path)?)
}
