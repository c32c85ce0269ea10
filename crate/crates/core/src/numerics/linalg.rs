//! Dense symmetric-matrix helpers and the precision factorization.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{precision_floor, Scalar};

/// `(m + mᵀ) / 2`.
pub fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn norm_inf<T: Scalar>(m: &DMatrix<T>) -> T {
    m.iter()
        .fold(T::zero(), |acc, &v| if v.abs() > acc { v.abs() } else { acc })
}

fn require_square<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            what,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite_value()) {
        return Err(Error::Domain(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn require_symmetric<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<()> {
    let scale = norm_inf(m);
    if scale == T::zero() {
        return Ok(());
    }
    let asym = norm_inf(&(m - m.transpose())) / scale;
    if asym > precision_floor::<T>(1e-12) {
        return Err(Error::NotSymmetric {
            what,
            asymmetry: asym.as_f64(),
        });
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .fold(T::infinity(), |acc, &v| if v < acc { v } else { acc })
}

/// Accepts `m` as positive semidefinite when every eigenvalue is at least
/// `-1e-10·‖m‖`.
pub fn check_psd<T: Scalar>(m: &DMatrix<T>, what: &'static str) -> Result<DMatrix<T>> {
    require_square(m, what)?;
    require_symmetric(m, what)?;
    let sym = symmetrize(m);
    let lam = min_eigenvalue(&sym);
    if lam < -precision_floor::<T>(1e-10) * norm_inf(&sym) {
        return Err(Error::NotPositive {
            what,
            kind: "semidefinite",
            min_eigenvalue: lam.as_f64(),
        });
    }
    Ok(sym)
}

/// Symmetric positive definite matrix, symmetrized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix<T: Scalar>(DMatrix<T>);

impl<T: Scalar> SpdMatrix<T> {
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        Self::named(m, "matrix")
    }

    /// Like [`SpdMatrix::new`], naming the matrix in any error.
    pub fn named(m: DMatrix<T>, what: &'static str) -> Result<Self> {
        require_square(&m, what)?;
        require_symmetric(&m, what)?;
        let sym = symmetrize(&m);
        if sym.nrows() == 0 {
            return Err(Error::Domain(format!("{what} is empty")));
        }
        let lam = min_eigenvalue(&sym);
        if !(lam > T::zero()) {
            return Err(Error::NotPositive {
                what,
                kind: "definite",
                min_eigenvalue: lam.as_f64(),
            });
        }
        Ok(Self(sym))
    }

    pub fn from_row_slice(dim: usize, data: &[T]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: dim * dim,
                found: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.0
    }

    pub fn cholesky(&self) -> Result<Cholesky<T, nalgebra::Dyn>> {
        Cholesky::new(self.0.clone()).ok_or(Error::Factorization("SPD matrix"))
    }

    pub fn inverse(&self) -> Result<SpdMatrix<T>> {
        Ok(Self(symmetrize(&self.cholesky()?.inverse())))
    }

    /// `ln |m|`.
    pub fn ln_det(&self) -> Result<T> {
        let l = self.cholesky()?;
        let diag = l.l_dirty().diagonal();
        Ok(diag.iter().fold(T::zero(), |acc, &d| acc + d.ln()) * T::lit(2.0))
    }

    /// Scaled copy `c·m`, `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(Error::Domain(format!("scale factor must be positive, got {}", c.as_f64())));
        }
        Ok(Self(&self.0 * c))
    }
}

impl<T: Scalar> AsRef<DMatrix<T>> for SpdMatrix<T> {
    fn as_ref(&self) -> &DMatrix<T> {
        &self.0
    }
}

/// Square root `S` with `S Sᵀ = m` from the eigendecomposition, clamping
/// negative eigenvalues to zero so singular covariances are usable.
pub fn psd_sqrt<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut v = eig.eigenvectors;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = if lam > T::zero() { lam.sqrt() } else { T::zero() };
        v.column_mut(j).scale_mut(s);
    }
    v
}

/// Factor `Φ` of the precision `Σ = nbar⁻¹` with `ΦᵀΦ = Σ`: the transpose
/// of the lower Cholesky factor of `Σ`.
pub fn factor_precision<T: Scalar>(nbar: &SpdMatrix<T>) -> Result<DMatrix<T>> {
    let sigma = nbar.inverse()?;
    let l = Cholesky::new(sigma.into_matrix()).ok_or(Error::Factorization("precision bound"))?;
    Ok(l.l().transpose())
}

/// Solves `X · s = b` for `X` with `s` SPD (i.e. `X = b s⁻¹`).
pub fn right_solve_spd<T: Scalar>(b: &DMatrix<T>, s: &DMatrix<T>) -> Result<DMatrix<T>> {
    let chol = Cholesky::new(symmetrize(s)).ok_or(Error::Factorization("innovation covariance"))?;
    Ok(chol.solve(&b.transpose()).transpose())
}
