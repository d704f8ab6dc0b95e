//! Column-major feature matrix with named columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>) -> Self {
        let columns = names.iter().map(|_| Vec::new()).collect();
        Self { names, columns, n_rows: 0 }
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::new(names);
        for row in rows {
            m.push_row(row)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::Data(format!(
                "row has {} values, expected {}",
                row.len(),
                self.names.len()
            )));
        }
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
        self.n_rows += 1;
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let columns: Vec<Vec<f64>> = self
            .columns
            .iter()
            .map(|c| idx.iter().map(|&i| c[i]).collect())
            .collect();
        FeatureMatrix { names: self.names.clone(), columns, n_rows: idx.len() }
    }

    /// Reorder columns to match `target` names exactly; errors name the
    /// missing and unexpected columns.
    pub fn align_to(&self, target: &[String]) -> Result<FeatureMatrix> {
        let missing: Vec<String> = target
            .iter()
            .filter(|t| !self.names.contains(t))
            .cloned()
            .collect();
        let extra: Vec<String> = self
            .names
            .iter()
            .filter(|n| !target.contains(n))
            .cloned()
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::SchemaMismatch { missing, extra });
        }
        let columns = target
            .iter()
            .map(|t| {
                let j = self.names.iter().position(|n| n == t).expect("present");
                self.columns[j].clone()
            })
            .collect();
        Ok(FeatureMatrix { names: target.to_vec(), columns, n_rows: self.n_rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn align_reorders_and_reports_mismatches() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
        )
        .unwrap();
        let aligned = m.align_to(&["b".into(), "a".into()]).unwrap();
        assert_eq!(aligned.row(0), vec![2.0, 1.0]);

        let err = m.align_to(&["a".into(), "c".into()]).unwrap_err();
        match err {
            Error::SchemaMismatch { missing, extra } => {
                assert_eq!(missing, vec!["c".to_string()]);
                assert_eq!(extra, vec!["b".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
