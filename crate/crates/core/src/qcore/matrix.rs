use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invariant("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Cx::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { Cx::new(T::one(), T::zero()) } else { Cx::new(T::zero(), T::zero()) })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &[Cx<T>], v: &[Cx<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Cx<T>] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Cx<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, z: Cx<T>) {
        self.data[r * self.cols + c] = z;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.rows.min(self.cols)).fold(Cx::new(T::zero(), T::zero()), |acc, i| acc + self.get(i, i))
    }

    pub fn diagonal(&self) -> Vec<Cx<T>> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Kronecker product; `self` carries the slow index.
    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |r, c| {
            self.get(r / r2, c / c2) * other.get(r % r2, c % c2)
        })
    }

    pub fn mul_vec(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).fold(Cx::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `⟨u|M|v⟩`
    pub fn sandwich(&self, u: &[Cx<T>], v: &[Cx<T>]) -> Cx<T> {
        let mv = self.mul_vec(v);
        u.iter().zip(&mv).fold(Cx::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a.conj() * b)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn hermiticity_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// Only the Hermitian part is used. The eigensolve runs in double precision
    /// regardless of `T`.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<T>> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("eigenvalues of a non-square matrix".into()));
        }
        let n = self.rows;
        let m = DMatrix::<num_complex::Complex<f64>>::from_fn(n, n, |r, c| {
            let a = self.get(r, c);
            let b = self.get(c, r).conj();
            let z = (a + b) * T::lit(0.5);
            num_complex::Complex::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
        });
        let mut evs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        if evs.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numerical("eigensolver returned non-finite values".into()));
        }
        evs.sort_by(|a, b| a.total_cmp(b));
        Ok(evs.into_iter().map(T::lit).collect())
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in mul");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let idx = r * rhs.cols + c;
                    out.data[idx] = out.data[idx] + a * rhs.get(k, c);
                }
            }
        }
        out
    }
}
