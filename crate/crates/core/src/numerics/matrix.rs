use super::{NumericsError, Result};

/// Relative tolerance used when validating symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Sweep cap for the cyclic Jacobi eigenvalue iteration.
pub const EIG_MAX_SWEEPS: usize = 100;

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(NumericsError::DimMismatch { expected: 1, found: 0 });
        }
        if data.len() != dim * dim {
            return Err(NumericsError::DimMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(NumericsError::DimMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * dim + i] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn add(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// `D·self·D` for a diagonal `D` given by its entries.
    pub fn diag_congruence(&self, d: &[f64]) -> SquareMatrix {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] *= d[i] * d[j];
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Determinant by cofactor expansion. Exponential cost; intended for
    /// tiny matrices and test oracles.
    pub fn cofactor_det(&self) -> f64 {
        fn det(m: &[f64], n: usize) -> f64 {
            match n {
                1 => m[0],
                2 => m[0] * m[3] - m[1] * m[2],
                _ => {
                    let mut total = 0.0;
                    for col in 0..n {
                        let mut minor = Vec::with_capacity((n - 1) * (n - 1));
                        for i in 1..n {
                            for j in 0..n {
                                if j != col {
                                    minor.push(m[i * n + j]);
                                }
                            }
                        }
                        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                        total += sign * m[col] * det(&minor, n - 1);
                    }
                    total
                }
            }
        }
        det(&self.data, self.dim)
    }
}

/// Symmetric positive definite matrix with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: SquareMatrix,
    chol: Vec<f64>,
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness and caches the
    /// Cholesky factor. No regularization is ever applied.
    pub fn new(m: SquareMatrix) -> Result<Self> {
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        let asym = m.max_asymmetry();
        if asym > SYMMETRY_TOL * scale {
            return Err(NumericsError::NotSymmetric { max_asymmetry: asym });
        }
        let n = m.dim;
        let mut sym = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (sym.get(i, j), sym.get(j, i));
                if a != b {
                    let avg = 0.5 * (a + b);
                    sym.set(i, j, avg);
                    sym.set(j, i, avg);
                }
            }
        }
        let chol = cholesky(&sym)?;
        Ok(Self { matrix: sym, chol })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(SquareMatrix::identity(dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    /// Entry `(i, j)` of the lower Cholesky factor.
    pub fn chol(&self, i: usize, j: usize) -> f64 {
        self.chol[i * self.dim() + j]
    }

    pub fn logdet(&self) -> f64 {
        let n = self.dim();
        2.0 * (0..n).map(|i| self.chol[i * n + i].ln()).sum::<f64>()
    }

    /// `L·z` with `L` the Cholesky factor.
    pub fn chol_mul(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..=i).map(|j| self.chol[i * n + j] * z[j]).sum())
            .collect()
    }

    /// Solves `L·y = b` by forward substitution.
    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.chol[i * n + j] * y[j];
            }
            y[i] = acc / self.chol[i * n + i];
        }
        y
    }

    /// Solves `V·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let y = self.forward_solve(b);
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.chol[j * n + i] * x[j];
            }
            x[i] = acc / self.chol[i * n + i];
        }
        x
    }

    /// `zᵀ V⁻¹ z` via the forward solve `L y = z`, so the result is `‖y‖²`.
    pub fn quad_form_inv(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(NumericsError::DimMismatch {
                expected: self.dim(),
                found: z.len(),
            });
        }
        Ok(super::norm_sq(&self.forward_solve(z)))
    }

    /// `trace(V⁻¹ W)`.
    pub fn trace_inv_product(&self, w: &SquareMatrix) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| w.get(i, j)).collect();
            total += self.solve(&col)[j];
        }
        total
    }

    /// Smallest and largest eigenvalue.
    pub fn eig_extremes(&self) -> Result<(f64, f64)> {
        let eig = jacobi_eigenvalues(&self.matrix, EIG_MAX_SWEEPS)?;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((min, max))
    }
}

fn cholesky(m: &SquareMatrix) -> Result<Vec<f64>> {
    let n = m.dim;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(NumericsError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns all eigenvalues.
pub(crate) fn jacobi_eigenvalues(m: &SquareMatrix, max_sweeps: usize) -> Result<Vec<f64>> {
    let n = m.dim;
    let mut a = m.data.clone();
    let total: f64 = a.iter().map(|v| v * v).sum();
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off <= 1e-30 * total || off == 0.0 {
            return Ok((0..n).map(|i| a[i * n + i]).collect());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(NumericsError::ConvergenceFailure { sweeps: max_sweeps })
}

/// Diagonal positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPsd {
    diag: Vec<f64>,
}

impl DiagonalPsd {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(NumericsError::DimMismatch { expected: 1, found: 0 });
        }
        for (index, &value) in diag.iter().enumerate() {
            if !value.is_finite() {
                return Err(NumericsError::NonFinite { index });
            }
            if value < 0.0 {
                return Err(NumericsError::NegativeDiagonal { index, value });
            }
        }
        Ok(Self { diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn to_matrix(&self) -> SquareMatrix {
        SquareMatrix::from_diagonal(&self.diag)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.diag.iter().all(|&d| d > 0.0)
    }
}
