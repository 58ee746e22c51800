use crate::error::{Error, Result};

/// One time step's batch of observations: an `n x d` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePanel {
    t: usize,
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl TimePanel {
    pub fn new(t: usize, n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!("panel must be non-empty, got {n}x{d}")));
        }
        if data.len() != n * d {
            return Err(Error::InvalidInput(format!(
                "panel data has {} values, expected {n}x{d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(TimePanel { t, n, d, data })
    }

    pub fn from_rows(t: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(t, rows.len(), d, rows.concat())
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn with_time(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    /// Rows reordered so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let data = perm.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        TimePanel { t: self.t, n: self.n, d: self.d, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(TimePanel::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(TimePanel::new(1, 0, 2, vec![]).is_err());
        assert!(TimePanel::new(1, 2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn row_access() {
        let p = TimePanel::from_rows(3, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(p.row(1), &[3.0, 4.0]);
        assert_eq!(p.rows().count(), 2);
        assert_eq!(p.permuted(&[1, 0]).row(0), &[3.0, 4.0]);
    }
}
