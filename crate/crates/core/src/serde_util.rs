//! Serialization of ndarray values as plain JSON arrays (matrices row-major).

use ndarray::{Array1, Array2};
use serde::ser::{SerializeSeq, Serializer};

pub fn matrix<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for row in m.rows() {
        seq.serialize_element(&row.to_vec())?;
    }
    seq.end()
}

pub fn vector<S: Serializer>(v: &Array1<f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Option<Array2<f64>> {
    let p = rows.first()?.len();
    if rows.iter().any(|r| r.len() != p) {
        return None;
    }
    Array2::from_shape_vec((rows.len(), p), rows.iter().flatten().copied().collect()).ok()
}
