//! JSON file formats shared by the command-line tools.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, validate_unitary, BipartiteUnitary, CMatrix, CVector, PureState};

/// `{"d_a": 2, "d_b": 2, "entries": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub d_a: usize,
    pub d_b: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix, d_a: usize, d_b: usize) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect();
        Self { d_a, d_b, entries }
    }

    pub fn from_unitary(u: &BipartiteUnitary) -> Self {
        Self::from_matrix(u.matrix(), u.d_a(), u.d_b())
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.d_a * self.d_b;
        if d == 0 || self.entries.len() != d * d {
            return Err(Error::Parse(format!(
                "expected {} entries for d_a = {}, d_b = {}, found {}",
                d * d,
                self.d_a,
                self.d_b,
                self.entries.len()
            )));
        }
        Ok(CMatrix::from_row_iterator(d, d, self.entries.iter().map(|e| c(e[0], e[1]))))
    }

    pub fn to_unitary(&self, tol: f64) -> Result<BipartiteUnitary> {
        validate_unitary(self.to_matrix()?, self.d_a, self.d_b, tol)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

pub(crate) fn matrix_entries(m: &CMatrix) -> Vec<[f64; 2]> {
    MatrixFile::from_matrix(m, m.nrows(), 1).entries
}

pub(crate) fn matrix_from_entries(d: usize, entries: &[[f64; 2]]) -> Result<CMatrix> {
    if entries.len() != d * d {
        return Err(Error::Parse(format!("expected {} entries, found {}", d * d, entries.len())));
    }
    Ok(CMatrix::from_row_iterator(d, d, entries.iter().map(|e| c(e[0], e[1]))))
}

pub(crate) fn state_entries(s: &PureState) -> Vec<[f64; 2]> {
    s.amplitudes.iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn state_from_entries(entries: &[[f64; 2]]) -> Result<PureState> {
    PureState::new(CVector::from_iterator(entries.len(), entries.iter().map(|e| c(e[0], e[1]))))
}
