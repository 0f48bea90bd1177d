//! Monte Carlo output matrices: loading, validation, summaries and
//! auto/cross-correlations.
//!
//! Two on-disk formats are supported:
//!
//! * CSV: comma separated, `.` decimal point, LF or CRLF line endings. A single
//!   header line is allowed if every field of the first row is non-numeric.
//!   Blank lines are ignored.
//! * raw-f64: a 16-byte header (`b"MCOV"`, `u32` n, `u32` p, `u32` reserved = 0,
//!   all little-endian) followed by `n * p` little-endian `f64` values in
//!   row-major order.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

pub const RAW_MAGIC: &[u8; 4] = b"MCOV";
pub const RAW_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainFormat {
    Csv,
    RawF64,
}

impl FromStr for ChainFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "raw" | "raw-f64" => Ok(Self::RawF64),
            other => Err(Error::InvalidArgument(format!("unknown chain format '{other}'"))),
        }
    }
}

impl ChainFormat {
    /// Guesses the format from a file extension (`.csv` or anything else as raw).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::RawF64,
        }
    }
}

/// An `n × p` matrix of Monte Carlo output, row `t` holding `g(X_t)`.
///
/// Always non-empty and finite; immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMatrix {
    values: Array2<f64>,
}

impl ChainMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::NoRows);
        }
        if values.ncols() == 0 {
            return Err(Error::Dimension("chain has zero columns".into()));
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { values: values.as_standard_layout().into_owned() })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(Vec::len).ok_or(Error::NoRows)?;
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::Dimension(format!("row {} has {} columns, expected {p}", i + 1, r.len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(Array2::from_shape_vec((rows.len(), p), flat).expect("shape checked"))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n() {
            return Err(Error::InvalidArgument(format!("head({n}) of a chain with {} rows", self.n())));
        }
        Ok(Self { values: self.values.slice(ndarray::s![..n, ..]).to_owned() })
    }

    /// Drops the first `k` rows (burn-in).
    pub fn skip(&self, k: usize) -> Result<Self> {
        if k >= self.n() {
            return Err(Error::InsufficientData(format!("skipping {k} of {} rows leaves none", self.n())));
        }
        Ok(Self { values: self.values.slice(ndarray::s![k.., ..]).to_owned() })
    }

    /// Column means.
    ///
    /// Accumulated as offsets from the first row with compensated summation, so
    /// a constant column yields exactly its value.
    pub fn mean(&self) -> Array1<f64> {
        let first = self.values.row(0);
        let n = self.n() as f64;
        Array1::from_iter((0..self.p()).map(|j| {
            let mut acc = CompensatedSum::default();
            for x in self.values.column(j) {
                acc.add(x - first[j]);
            }
            first[j] + acc.value() / n
        }))
    }

    /// `Y_t − Ȳ_n` for every row.
    pub fn centered(&self) -> Array2<f64> {
        let mean = self.mean();
        &self.values - &mean.insert_axis(Axis(0))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.n() * self.p() * 20);
        for row in self.values.rows() {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_raw_bytes(&self) -> Result<Vec<u8>> {
        let n = u32::try_from(self.n()).map_err(|_| Error::Dimension("n exceeds u32".into()))?;
        let p = u32::try_from(self.p()).map_err(|_| Error::Dimension("p exceeds u32".into()))?;
        let mut out = Vec::with_capacity(RAW_HEADER_LEN + 8 * self.n() * self.p());
        out.extend_from_slice(RAW_MAGIC);
        out.extend_from_slice(&n.to_le_bytes());
        out.extend_from_slice(&p.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        for x in self.values.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path, format: ChainFormat) -> Result<()> {
        let bytes = match format {
            ChainFormat::Csv => self.to_csv_string().into_bytes(),
            ChainFormat::RawF64 => self.to_raw_bytes()?,
        };
        std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_owned(), source })
    }
}

fn parse_fields(line: &str) -> Vec<std::result::Result<f64, std::num::ParseFloatError>> {
    line.split(',').map(|f| f.trim().parse::<f64>()).collect()
}

/// Parses CSV text into a chain.
pub fn parse_csv(text: &str) -> Result<ChainMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut first = true;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields = parse_fields(line);
        if first {
            first = false;
            if fields.iter().all(|f| f.is_err()) {
                width = Some(fields.len());
                continue;
            }
        }
        let mut row = Vec::with_capacity(fields.len());
        for (col, f) in fields.into_iter().enumerate() {
            match f {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(_) => return Err(Error::NonFinite { row: rows.len(), col }),
                Err(_) => {
                    let field = line.split(',').nth(col).unwrap_or("").trim();
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("field {} ('{field}') is not a number", col + 1),
                    });
                }
            }
        }
        match width {
            Some(w) if w != row.len() => {
                return Err(Error::Dimension(format!(
                    "line {line_no} has {} columns, expected {w}",
                    row.len()
                )))
            }
            None => width = Some(row.len()),
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    ChainMatrix::from_rows(&rows)
}

pub fn parse_raw(bytes: &[u8]) -> Result<ChainMatrix> {
    if bytes.len() < RAW_HEADER_LEN || &bytes[..4] != RAW_MAGIC {
        return Err(Error::Parse { line: 0, message: "missing MCOV header".into() });
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes")) as usize;
    let (n, p) = (word(4), word(8));
    if n == 0 {
        return Err(Error::NoRows);
    }
    let expected = RAW_HEADER_LEN + 8 * n * p;
    if bytes.len() != expected {
        return Err(Error::Dimension(format!(
            "raw file holds {} bytes, header n={n} p={p} implies {expected}",
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes[RAW_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ChainMatrix::new(Array2::from_shape_vec((n, p), data).expect("length checked"))
}

/// Reads and validates a chain file, dropping the first `skip` rows.
pub fn load_chain(path: &Path, format: ChainFormat, skip: usize) -> Result<ChainMatrix> {
    let io_err = |source| Error::Io { path: path.to_owned(), source };
    let chain = match format {
        ChainFormat::Csv => parse_csv(&std::fs::read_to_string(path).map_err(io_err)?)?,
        ChainFormat::RawF64 => parse_raw(&std::fs::read(path).map_err(io_err)?)?,
    };
    if skip > 0 {
        chain.skip(skip)
    } else {
        Ok(chain)
    }
}

/// Sample mean `θ_n` and sample covariance `Λ̂` (divisor `n − 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanAndScatter {
    #[serde(serialize_with = "crate::serde_util::vector")]
    pub mean: Array1<f64>,
    #[serde(serialize_with = "crate::serde_util::matrix")]
    pub sample_cov: Array2<f64>,
}

pub fn summarize(chain: &ChainMatrix) -> Result<MeanAndScatter> {
    let n = chain.n();
    if n < 2 {
        return Err(Error::InsufficientData("sample covariance needs at least 2 rows".into()));
    }
    let mean = chain.mean();
    let z = &chain.values - &mean.view().insert_axis(Axis(0));
    let mut cov = z.t().dot(&z) / (n - 1) as f64;
    let p = chain.p();
    for i in 0..p {
        for j in 0..i {
            let s = 0.5 * (cov[[i, j]] + cov[[j, i]]);
            cov[[i, j]] = s;
            cov[[j, i]] = s;
        }
    }
    Ok(MeanAndScatter { mean, sample_cov: cov })
}

/// Lag-`s` correlations between coordinate `i` at time `t` and coordinate `j`
/// at time `t + s`, for `s = 0..=max_lag`.
///
/// Both numerator and denominators use the `1/n` full-sample-mean convention of
/// the sample autocovariance.
pub fn acf_ccf(chain: &ChainMatrix, i: usize, j: usize, max_lag: usize) -> Result<Vec<f64>> {
    let (n, p) = (chain.n(), chain.p());
    if i >= p || j >= p {
        return Err(Error::InvalidArgument(format!("coordinate out of range for p = {p}")));
    }
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!("max_lag {max_lag} must be below n = {n}")));
    }
    let z = chain.centered();
    let (zi, zj) = (z.column(i), z.column(j));
    let var = |c: ndarray::ArrayView1<'_, f64>| c.dot(&c) / n as f64;
    let (vi, vj) = (var(zi), var(zj));
    for (coord, v) in [(i, vi), (j, vj)] {
        if !(v > 0.0) {
            return Err(Error::ZeroVariance { coord });
        }
    }
    let denom = (vi * vj).sqrt();
    Ok((0..=max_lag)
        .map(|s| {
            let num = zi.slice(ndarray::s![..n - s]).dot(&zj.slice(ndarray::s![s..])) / n as f64;
            num / denom
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn parses_simple_csv() {
        let c = parse_csv("1,2\n3,4\n5,6").unwrap();
        assert_eq!((c.n(), c.p()), (3, 2));
        assert_eq!(c.values(), array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
    }

    #[test]
    fn header_and_crlf() {
        let c = parse_csv("beta0,beta1\r\n1,2\r\n3,4\r\n").unwrap();
        assert_eq!(c.values(), array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn empty_file_has_no_rows() {
        assert!(matches!(parse_csv(""), Err(Error::NoRows)));
        assert!(matches!(parse_csv("a,b\n"), Err(Error::NoRows)));
    }

    #[test]
    fn bad_field_names_line() {
        match parse_csv("1,2\nabc,4\n") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_nonfinite() {
        assert!(matches!(parse_csv("1,2\n3\n"), Err(Error::Dimension(_))));
        assert!(matches!(parse_csv("1,2\n3,NaN\n"), Err(Error::NonFinite { row: 1, col: 1 })));
        assert!(matches!(parse_csv("1,inf\n"), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn raw_header_layout() {
        let c = ChainMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        let bytes = c.to_raw_bytes().unwrap();
        assert_eq!(bytes.len(), 16 + 32);
        assert_eq!(&bytes[..4], b"MCOV");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), 4.5);
        assert_eq!(parse_raw(&bytes).unwrap(), c);
        assert!(parse_raw(&bytes[..40]).is_err());
    }

    #[test]
    fn summarize_examples() {
        let c = ChainMatrix::from_rows(&vec![vec![0.1, 3.0]; 7]).unwrap();
        let s = summarize(&c).unwrap();
        assert_eq!(s.mean, array![0.1, 3.0]);
        assert!(s.sample_cov.iter().all(|&x| x == 0.0));

        let c = ChainMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let s = summarize(&c).unwrap();
        assert_eq!(s.mean[0], 0.0);
        assert_eq!(s.sample_cov[[0, 0]], 2.0);

        let one = ChainMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(summarize(&one), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn duplicated_column_is_rank_one() {
        let rows: Vec<Vec<f64>> = (0..20).map(|t| {
            let x = ((t * 7919) % 13) as f64 - 6.0;
            vec![x, x]
        }).collect();
        let s = summarize(&ChainMatrix::from_rows(&rows).unwrap()).unwrap();
        let det = s.sample_cov[[0, 0]] * s.sample_cov[[1, 1]] - s.sample_cov[[0, 1]].powi(2);
        assert!(det.abs() <= 1e-12 * s.sample_cov[[0, 0]].powi(2));
    }

    #[test]
    fn acf_lag_zero_and_errors() {
        let rows: Vec<Vec<f64>> = (0..50).map(|t| vec![(t as f64).sin(), 1.0]).collect();
        let c = ChainMatrix::from_rows(&rows).unwrap();
        let r = acf_ccf(&c, 0, 0, 5).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15);
        assert!(matches!(acf_ccf(&c, 1, 1, 3), Err(Error::ZeroVariance { coord: 1 })));
        assert!(acf_ccf(&c, 0, 0, 50).is_err());
        assert!(acf_ccf(&c, 0, 2, 1).is_err());
    }

    #[test]
    fn skip_and_head() {
        let c = parse_csv("1\n2\n3\n4\n").unwrap();
        assert_eq!(c.skip(1).unwrap().values(), array![[2.0], [3.0], [4.0]]);
        assert_eq!(c.head(2).unwrap().values(), array![[1.0], [2.0]]);
        assert!(c.skip(4).is_err());
    }
}
