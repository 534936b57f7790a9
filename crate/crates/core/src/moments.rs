//! Truncated moment matrices `𝔓(F)`, kernel matrices `𝔎(F)`, and numeric rank.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::fock::monomial_norm_sq;

/// Default relative threshold on `σ_i / σ_max`.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    Extended,
}

/// Entries `m_{k,k'} = ⟨ωF, z^k z̄^{k'}⟩` for `0 ≤ k < rows` and
/// `col_offset ≤ k' < col_offset + cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub entries: DMatrix<Complex64>,
    pub col_offset: usize,
    pub provenance: Provenance,
    pub precision: Precision,
}

impl MomentMatrix {
    pub fn new(entries: DMatrix<Complex64>, col_offset: usize, provenance: Provenance) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(FockError::BadParams("moment matrix needs at least one row and column".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FockError::BadParams("moment matrix has non-finite entries".into()));
        }
        Ok(Self { entries, col_offset, provenance, precision: Precision::Double })
    }

    pub fn from_fn<F>(rows: usize, cols: usize, col_offset: usize, provenance: Provenance, f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Complex64,
    {
        Self::new(DMatrix::from_fn(rows, cols, f), col_offset, provenance)
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Entry at row `k` and absolute column index `kp`.
    pub fn get(&self, k: usize, kp: usize) -> Option<Complex64> {
        if k >= self.rows() || kp < self.col_offset || kp >= self.col_offset + self.cols() {
            return None;
        }
        Some(self.entries[(k, kp - self.col_offset)])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `m_{k,k'} / √(k! k'!)`, the matrix in the orthonormal monomial basis.
    pub fn normalized(&self) -> DMatrix<Complex64> {
        let row_scale: Vec<f64> = (0..self.rows()).map(|k| inv_sqrt_factorial(k)).collect();
        let col_scale: Vec<f64> = (0..self.cols()).map(|j| inv_sqrt_factorial(j + self.col_offset)).collect();
        DMatrix::from_fn(self.rows(), self.cols(), |i, j| self.entries[(i, j)] * (row_scale[i] * col_scale[j]))
    }

    /// Numeric rank of the normalized matrix; rank is unchanged by the diagonal rescaling.
    pub fn rank(&self, rel_tol: f64) -> RankCertificate {
        let mut cert = numeric_rank(&self.normalized(), rel_tol);
        cert.rescaled = true;
        cert
    }

    /// Largest entrywise deviation from the conjugate transpose (square part only).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.rows().min(self.cols() + self.col_offset);
        let mut worst = 0.0_f64;
        for k in 0..n {
            for kp in 0..n {
                if let (Some(a), Some(b)) = (self.get(k, kp), self.get(kp, k)) {
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }

    pub fn to_json(&self) -> String {
        let doc = MatrixDoc {
            rows: self.rows(),
            cols: self.cols(),
            col_offset: self.col_offset,
            entries: (0..self.rows())
                .flat_map(|i| (0..self.cols()).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let z = self.entries[(i, j)];
                    [z.re, z.im]
                })
                .collect(),
            provenance: self.provenance,
        };
        serde_json::to_string(&doc).expect("matrix serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDoc = serde_json::from_str(text).map_err(|e| FockError::Parse(e.to_string()))?;
        if doc.entries.len() != doc.rows * doc.cols {
            return Err(FockError::Parse(format!(
                "expected {} entries for a {}x{} matrix, found {}",
                doc.rows * doc.cols,
                doc.rows,
                doc.cols,
                doc.entries.len()
            )));
        }
        let entries = DMatrix::from_fn(doc.rows, doc.cols, |i, j| {
            let [re, im] = doc.entries[i * doc.cols + j];
            Complex64::new(re, im)
        });
        Self::new(entries, doc.col_offset, doc.provenance)
    }
}

fn inv_sqrt_factorial(k: usize) -> f64 {
    1.0 / monomial_norm_sq(k).expect("truncation is capped well below 170").sqrt()
}

/// On-disk matrix layout; field order is part of the format.
#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    col_offset: usize,
    entries: Vec<[f64; 2]>,
    provenance: Provenance,
}

/// `𝔨_{k,k'} = t_F(κ_{z_k}, κ_{z_{k'}})` on a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub points: Vec<Complex64>,
    pub entries: DMatrix<Complex64>,
    pub provenance: Provenance,
}

impl KernelMatrix {
    pub fn rank(&self, rel_tol: f64) -> RankCertificate {
        numeric_rank(&self.entries, rel_tol)
    }

    /// Same JSON layout as moment matrices with `col_offset = 0`.
    pub fn to_json(&self) -> String {
        MomentMatrix::new(self.entries.clone(), 0, self.provenance)
            .map(|m| m.to_json())
            .expect("kernel matrix entries are finite")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCertificate {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rel_tol: f64,
    /// `σ_{rank+1} / σ_rank`, zero when the rank is full or zero.
    pub gap: f64,
    /// Whether the rank was computed in the normalized monomial basis.
    pub rescaled: bool,
}

/// Counts singular values above `rel_tol · σ_max`.
pub fn numeric_rank(m: &DMatrix<Complex64>, rel_tol: f64) -> RankCertificate {
    debug_assert!(rel_tol > 0.0 && rel_tol < 1.0);
    let mut sv: Vec<f64> = if m.nrows() == 0 || m.ncols() == 0 {
        Vec::new()
    } else {
        m.clone().svd(false, false).singular_values.iter().copied().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = if smax > 0.0 { sv.iter().filter(|s| **s > rel_tol * smax).count() } else { 0 };
    let gap = if rank > 0 && rank < sv.len() { sv[rank] / sv[rank - 1] } else { 0.0 };
    RankCertificate { rank, singular_values: sv, rel_tol, gap, rescaled: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_examples() {
        let ones = DMatrix::from_element(6, 6, c(1.0, 0.0));
        let cert = numeric_rank(&ones, 1e-8);
        assert_eq!(cert.rank, 1);
        assert!(cert.gap < 1e-14);
        assert!(cert.singular_values.windows(2).all(|w| w[0] >= w[1]));

        let diag = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                c(monomial_norm_sq(i).unwrap() / 2f64.powi(i as i32 + 1), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let cert = numeric_rank(&diag, 1e-8);
        assert_eq!(cert.rank, 5);
        assert_eq!(cert.gap, 0.0);

        let zero = DMatrix::from_element(4, 4, c(0.0, 0.0));
        assert_eq!(numeric_rank(&zero, 1e-8).rank, 0);
    }

    #[test]
    fn json_layout_is_fixed() {
        let m = MomentMatrix::from_fn(2, 3, 1, Provenance::Exact, |i, j| c(i as f64, -(j as f64) * 0.1)).unwrap();
        let text = m.to_json();
        assert!(text.starts_with(r#"{"rows":2,"cols":3,"col_offset":1,"entries":[[0.0,-0.0],[0.0,-0.1]"#), "{text}");
        assert!(text.ends_with(r#""provenance":"exact"}"#));
        let back = MomentMatrix::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get(1, 3), Some(c(1.0, -0.2)));
        assert_eq!(back.get(1, 0), None);
    }

    #[test]
    fn json_rejects_shape_mismatch() {
        let bad = r#"{"rows":2,"cols":2,"col_offset":0,"entries":[[1,0]],"provenance":"exact"}"#;
        assert!(matches!(MomentMatrix::from_json(bad), Err(FockError::Parse(_))));
        let bad = r#"{"rows":1,"cols":1,"col_offset":0,"entries":[[1,0]],"provenance":"guess"}"#;
        assert!(MomentMatrix::from_json(bad).is_err());
    }

    #[test]
    fn normalization_keeps_rank() {
        let m = MomentMatrix::from_fn(6, 6, 0, Provenance::Exact, |_, _| c(1.0, 0.0)).unwrap();
        let cert = m.rank(1e-8);
        assert_eq!(cert.rank, 1);
        assert!(cert.rescaled);
    }
}
