use crate::error::{QkdError, Result};

/// Joint letter counts of two aligned sequences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(size: usize) -> Self {
        Self {
            counts: vec![vec![0; size]; size],
            total: 0,
        }
    }

    pub fn add(&mut self, x: usize, y: usize) {
        self.counts[x][y] += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Plug-in mutual information in bits: empirical frequencies into
    /// `Σ p(x,y) log₂ p(x,y) / (p(x) p(y))`.
    pub fn mutual_information(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        let rows: Vec<f64> = self
            .counts
            .iter()
            .map(|r| r.iter().sum::<u64>() as f64)
            .collect();
        let size = self.counts.len();
        let cols: Vec<f64> = (0..size)
            .map(|j| self.counts.iter().map(|r| r[j]).sum::<u64>() as f64)
            .collect();
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 {
                    let c = c as f64;
                    mi += c / n * (c * n / (rows[i] * cols[j])).log2();
                }
            }
        }
        mi.max(0.0)
    }
}

/// Plug-in mutual information between two equal-length symbol sequences over `0..size`.
pub fn plugin_mutual_information(xs: &[usize], ys: &[usize], size: usize) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(QkdError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let mut t = ContingencyTable::new(size);
    for (&x, &y) in xs.iter().zip(ys) {
        if x >= size || y >= size {
            return Err(QkdError::LetterOutOfRange {
                letter: x.max(y),
                dim: size,
            });
        }
        t.add(x, y);
    }
    Ok(t.mutual_information())
}
