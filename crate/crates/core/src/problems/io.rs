//! Text export of problem instances: the matrix as `row,col,value` triplets
//! in CSV plus a JSON metadata file.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FStar, Lrsp, Problem, Quad, RngSeed, SparseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceKind {
    Quad { n: usize },
    Lrsp { m: usize, n: usize, density: f64, labels: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub name: String,
    #[serde(flatten)]
    pub kind: InstanceKind,
    pub seed: Option<RngSeed>,
    pub lipschitz: f64,
    pub f_star: FStar,
    pub x0: Vec<f64>,
}

pub const MATRIX_FILE: &str = "matrix.csv";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Serialize, Deserialize)]
struct Triplet {
    row: usize,
    col: usize,
    value: f64,
}

pub fn write_triplets(path: &Path, triplets: &[(usize, usize, f64)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for &(row, col, value) in triplets {
        wtr.serialize(Triplet { row, col, value })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_triplets(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    rdr.deserialize::<Triplet>()
        .map(|t| t.map(|t| (t.row, t.col, t.value)).map_err(Error::from))
        .collect()
}

/// Writes `matrix.csv` and `metadata.json` into `dir`.
pub fn export_quad(dir: &Path, problem: &Problem, n: usize) -> Result<()> {
    let quad = Quad::new(n)?;
    let triplets: Vec<_> = quad.sigma().iter().enumerate().map(|(i, s)| (i, i, *s)).collect();
    write_triplets(&dir.join(MATRIX_FILE), &triplets)?;
    write_metadata(
        dir,
        &InstanceMetadata {
            name: problem.name().to_string(),
            kind: InstanceKind::Quad { n },
            seed: None,
            lipschitz: problem.lipschitz(),
            f_star: problem.f_star_kind(),
            x0: problem.x0().to_vec(),
        },
    )
}

pub fn export_lrsp(dir: &Path, problem: &Problem, lrsp: &Lrsp, density: f64, seed: u64) -> Result<()> {
    write_triplets(&dir.join(MATRIX_FILE), &lrsp.matrix().triplets())?;
    write_metadata(
        dir,
        &InstanceMetadata {
            name: problem.name().to_string(),
            kind: InstanceKind::Lrsp {
                m: lrsp.matrix().rows(),
                n: lrsp.matrix().cols(),
                density,
                labels: lrsp.labels().to_vec(),
            },
            seed: Some(RngSeed::chacha(seed)),
            lipschitz: problem.lipschitz(),
            f_star: problem.f_star_kind(),
            x0: problem.x0().to_vec(),
        },
    )
}

fn write_metadata(dir: &Path, meta: &InstanceMetadata) -> Result<()> {
    let file = BufWriter::new(File::create(dir.join(METADATA_FILE))?);
    serde_json::to_writer_pretty(file, meta)?;
    Ok(())
}

pub fn read_metadata(dir: &Path) -> Result<InstanceMetadata> {
    let file = BufReader::new(File::open(dir.join(METADATA_FILE))?);
    Ok(serde_json::from_reader(file)?)
}

/// Rebuilds a problem written by one of the export functions.
pub fn import_problem(dir: &Path) -> Result<Problem> {
    let meta = read_metadata(dir)?;
    let triplets = read_triplets(&dir.join(MATRIX_FILE))?;
    let x_star;
    let oracle: Box<dyn crate::oracle::Oracle> = match &meta.kind {
        InstanceKind::Quad { n } => {
            let quad = Quad::new(*n)?;
            let matches = triplets.len() == *n
                && triplets
                    .iter()
                    .all(|&(r, c, v)| r == c && r < *n && v == quad.sigma()[r]);
            if !matches {
                return Err(Error::Parse("QUAD matrix file does not match its dimension".into()));
            }
            x_star = Some(vec![0.0; *n]);
            Box::new(quad)
        }
        InstanceKind::Lrsp { m, n, labels, .. } => {
            let a = SparseMatrix::from_triplets(*m, *n, &triplets)?;
            x_star = None;
            Box::new(Lrsp::new(a, labels.clone())?)
        }
    };
    Problem::new(meta.name, oracle, meta.lipschitz, meta.x0, meta.f_star, x_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Oracle;

    #[test]
    fn lrsp_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (lrsp, x0) = Lrsp::generate(40, 10, 0.1, 9).unwrap();
        let probe = vec![0.3; 10];
        let expect = lrsp.value(&probe);
        let lip = lrsp.spectral_norm_sq(9) / 4.0;
        let copy = Lrsp::new(lrsp.matrix().clone(), lrsp.labels().to_vec()).unwrap();
        let problem = Problem::new("t".into(), Box::new(copy), lip, x0, FStar::Estimated(1.5), None).unwrap();
        export_lrsp(dir.path(), &problem, &lrsp, 0.1, 9).unwrap();
        let back = import_problem(dir.path()).unwrap();
        assert_eq!(back.value(&probe), expect);
        assert_eq!(back.lipschitz(), lip);
        assert_eq!(back.f_star_kind(), FStar::Estimated(1.5));
        assert_eq!(back.x0(), problem.x0());
        let meta = read_metadata(dir.path()).unwrap();
        assert_eq!(meta.seed, Some(RngSeed::chacha(9)));
    }

    #[test]
    fn quad_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = crate::problems::make_quad(7).unwrap();
        export_quad(dir.path(), &p, 7).unwrap();
        let back = import_problem(dir.path()).unwrap();
        assert_eq!(back.f_x0(), p.f_x0());
        assert_eq!(back.x_star(), p.x_star());
    }
}
