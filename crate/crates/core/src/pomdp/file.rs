use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{TabularPomdp, FILE_TOL};
use crate::error::{Error, Result};

/// On-disk model document. Matrices are stored row-major: `T[a][s'][s]`,
/// `O[z][s]`, `R[a][s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub horizon: usize,
    pub reward_max: f64,
    pub b1: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "O")]
    pub o: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<&TabularPomdp> for ModelFile {
    fn from(m: &TabularPomdp) -> Self {
        Self {
            states: m.num_states(),
            actions: m.num_actions(),
            observations: m.num_observations(),
            horizon: m.horizon(),
            reward_max: m.reward_max(),
            b1: m.initial_belief().iter().copied().collect(),
            t: m.transitions().iter().map(rows).collect(),
            o: rows(m.observation()),
            r: m.rewards()
                .iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for TabularPomdp {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let (n, a, z) = (f.states, f.actions, f.observations);
        if f.t.len() != a || f.r.len() != a {
            return Err(Error::Parse(format!(
                "expected {a} transition matrices and reward vectors"
            )));
        }
        if f.b1.len() != n || f.r.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(format!(
                "b1 and every R[a] must have {n} entries"
            )));
        }
        let transitions =
            f.t.iter()
                .enumerate()
                .map(|(i, t)| matrix(t, n, n, &format!("T[{i}]")))
                .collect::<Result<Vec<_>>>()?;
        let observation = matrix(&f.o, z, n, "O")?;
        TabularPomdp::with_tolerance(
            transitions,
            observation,
            f.r.into_iter().map(DVector::from_vec).collect(),
            DVector::from_vec(f.b1),
            f.horizon,
            f.reward_max,
            FILE_TOL,
        )
    }
}

impl TabularPomdp {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::make_tiger;

    #[test]
    fn round_trips_through_json() {
        let m = make_tiger(0.85, 4).unwrap();
        let back = TabularPomdp::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let m = make_tiger(0.85, 3).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v["discount"] = serde_json::json!(0.95);
        assert!(TabularPomdp::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn load_tolerates_small_drift_but_not_large() {
        let m = make_tiger(0.85, 3).unwrap();
        let mut f = ModelFile::from(&m);
        f.o[0][0] += 5e-10;
        let back = TabularPomdp::try_from(f.clone()).unwrap();
        let col: f64 = back.observation().column(0).sum();
        assert!((col - 1.0).abs() < 1e-15);
        f.o[0][0] += 1e-6;
        assert!(TabularPomdp::try_from(f).is_err());
    }
}
