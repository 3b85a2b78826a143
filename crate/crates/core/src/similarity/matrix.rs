use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentPair;
use crate::error::{Error, Result};

/// Dense `m x n` emission scores, rows are simple sentences and columns
/// complex sentences, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub pair_id: String,
    m: usize,
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    pair_id: String,
    m: usize,
    n: usize,
    values: Vec<Vec<f64>>,
}

fn check_value(row: usize, col: usize, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { row, col, value })
    }
}

impl SimilarityMatrix {
    pub fn new(pair_id: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        Self::from_rows(pair_id.into(), rows.len(), n, rows)
    }

    fn from_rows(pair_id: String, m: usize, n: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != m {
            return Err(Error::dimension("matrix rows", m, rows.len()));
        }
        let mut values = Vec::with_capacity(m * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::dimension(format!("matrix row {i}"), n, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                check_value(i, j, v)?;
            }
            values.extend(row);
        }
        Ok(SimilarityMatrix {
            pair_id,
            m,
            n,
            values,
        })
    }

    /// Matrix of `m x n` filled by `f(i, j)`; values are range-checked.
    pub fn from_fn(
        pair_id: impl Into<String>,
        m: usize,
        n: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                let v = f(i, j);
                check_value(i, j, v)?;
                values.push(v);
            }
        }
        Ok(SimilarityMatrix {
            pair_id: pair_id.into(),
            m,
            n,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Restriction to the given row and column indices, in the order given.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SimilarityMatrix {
        let values = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.get(i, j)))
            .collect();
        SimilarityMatrix {
            pair_id: self.pair_id.clone(),
            m: rows.len(),
            n: cols.len(),
            values,
        }
    }

    /// Errors unless the matrix is `simple sentences x complex sentences` of `pair`.
    pub fn check_against(&self, pair: &DocumentPair) -> Result<()> {
        let (m, n) = (pair.simple.sentence_count(), pair.complex.sentence_count());
        if (self.m, self.n) != (m, n) {
            return Err(Error::dimension(
                format!("similarity matrix of pair {:?}", pair.pair_id),
                format!("{m}x{n}"),
                format!("{}x{}", self.m, self.n),
            ));
        }
        Ok(())
    }

    fn to_raw(&self) -> RawMatrix {
        RawMatrix {
            pair_id: self.pair_id.clone(),
            m: self.m,
            n: self.n,
            values: (0..self.m).map(|i| self.row(i).to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawMatrix = serde_json::from_str(text).map_err(|e| Error::Json {
            context: "similarity matrix".into(),
            source: e,
        })?;
        Self::from_rows(raw.pair_id, raw.m, raw.n, raw.values)
    }
}

pub fn save_matrix(path: impl AsRef<Path>, matrix: &SimilarityMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &matrix.to_raw()).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Loads a precomputed matrix and checks it against `pair`: pair id,
/// dimensions, and that every value is finite and within `[0, 1]`.
pub fn load_external_matrix(path: impl AsRef<Path>, pair: &DocumentPair) -> Result<SimilarityMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let raw: RawMatrix = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    if raw.pair_id != pair.pair_id {
        return Err(Error::dimension("matrix pair_id", &pair.pair_id, &raw.pair_id));
    }
    let (m, n) = (pair.simple.sentence_count(), pair.complex.sentence_count());
    if (raw.m, raw.n) != (m, n) {
        return Err(Error::dimension(
            format!("matrix {}", path.display()),
            format!("{m}x{n}"),
            format!("{}x{}", raw.m, raw.n),
        ));
    }
    SimilarityMatrix::from_rows(raw.pair_id, raw.m, raw.n, raw.values)
}
