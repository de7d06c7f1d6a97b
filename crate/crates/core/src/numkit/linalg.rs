use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Validates symmetry (1e-12 relative to the largest entry) and positive
    /// definiteness, then symmetrizes exactly.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let m = (&m + m.transpose()) * 0.5;
        cholesky(&m)?;
        Ok(SpdMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0 == DMatrix::identity(self.dim(), self.dim())
    }
}

impl AsRef<DMatrix<f64>> for SpdMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Lower-triangular `L` with `L Lᵀ = m`. Only the lower triangle of `m` is read.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.unpack())
        .ok_or(Error::NotPositiveDefinite)
}

/// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
pub fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let l = cholesky(m)?;
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `m[A,B] m[B,B]⁻¹ m[B,A]` where `A = block` and `B` is its complement.
pub fn schur_complement(m: &DMatrix<f64>, block: &[usize]) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if block.is_empty() || block.len() >= n {
        return Err(Error::InvalidArgument(
            "block must be a nonempty proper subset of the indices".into(),
        ));
    }
    let mut in_block = vec![false; n];
    for &a in block {
        if a >= n || in_block[a] {
            return Err(Error::InvalidArgument(format!("bad block index {a}")));
        }
        in_block[a] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&k| !in_block[k]).collect();
    let m_ab = m.select_rows(block).select_columns(&rest);
    let m_bb = m.select_rows(&rest).select_columns(&rest);
    let solved = m_bb
        .lu()
        .solve(&m_ab.transpose())
        .ok_or(Error::SingularBlock)?;
    if solved.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularBlock);
    }
    let out = &m_ab * solved;
    Ok((&out + out.transpose()) * 0.5)
}
