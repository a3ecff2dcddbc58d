//! Record files: CSV with header `z_0,…,z_{n−1},f,g_0,…,g_{n−1}`, one record
//! per row.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::OracleRecord;

pub fn read_records<R: Read>(reader: R) -> Result<Vec<OracleRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let width = header.len();
    if width < 3 || width % 2 == 0 {
        return Err(Error::Parse(format!(
            "record header must have 2n + 1 columns, found {width}"
        )));
    }
    let n = (width - 1) / 2;
    for (k, name) in header.iter().enumerate() {
        let expected = if k < n {
            format!("z_{k}")
        } else if k == n {
            "f".to_string()
        } else {
            format!("g_{}", k - n - 1)
        };
        if name != expected {
            return Err(Error::Parse(format!(
                "record header column {k} should be `{expected}`, found `{name}`"
            )));
        }
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", row + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(OracleRecord {
            z: vals[..n].to_vec(),
            f: vals[n],
            g: vals[n + 1..].to_vec(),
        });
    }
    Ok(out)
}

pub fn write_records<W: Write>(writer: W, records: &[OracleRecord]) -> Result<()> {
    let n = records.first().map(OracleRecord::dim).ok_or(Error::EmptyModel)?;
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..n).map(|k| format!("z_{k}")).collect();
    header.push("f".into());
    header.extend((0..n).map(|k| format!("g_{k}")));
    wtr.write_record(&header)?;
    for r in records {
        crate::error::check_dim(n, r.z.len())?;
        crate::error::check_dim(n, r.g.len())?;
        let row: Vec<String> = r
            .z
            .iter()
            .chain(std::iter::once(&r.f))
            .chain(&r.g)
            .map(|v| format!("{v:?}"))
            .collect();
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
