//! Dense complex linear algebra and the Cholesky-factor parameterization.
//!
//! A density matrix is written as `ρ = T†T` with `T` lower triangular and
//! real on the diagonal. For an `M`-dimensional space `T` carries exactly
//! `M²` real numbers: `M` diagonal entries and `M(M-1)/2` complex entries
//! below the diagonal. [`ParamVector`] is the flat real vector the optimizer
//! works with; its layout is fixed:
//!
//! ```text
//! t[0..M]            diagonal T[i][i]
//! t[M..]             (Re T[i][j], Im T[i][j]) for i = 1..M, j = 0..i, row by row
//! ```

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Rank-one outer product `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation `|A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending,
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

const HERMITIAN_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi diagonalization.
///
/// Each rotation first removes the phase of the pivot `A[p][q]` with a
/// diagonal unitary and then applies a real Givens rotation, so the pair
/// reduces to the classical symmetric Jacobi step.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let n = a.rows();
    let mut m = ComplexMatrix::from_fn(n, n, |r, c| (a[(r, c)] + a[(c, r)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 || r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = phase.conj() * (-s);
                let g_qq = phase.conj() * c;

                for k in 0..n {
                    let kp = m[(k, p)];
                    let kq = m[(k, q)];
                    m[(k, p)] = kp * g_pp + kq * g_qp;
                    m[(k, q)] = kp * g_pq + kq * g_qq;
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * g_pp + vq * g_qp;
                    v[(k, q)] = vp * g_pq + vq * g_qq;
                }
                for k in 0..n {
                    let pk = m[(p, k)];
                    let qk = m[(q, k)];
                    m[(p, k)] = g_pp.conj() * pk + g_qp.conj() * qk;
                    m[(q, k)] = g_pq.conj() * pk + g_qq.conj() * qk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Real eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues_hermitian(a: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(a).map(|e| e.values)
}

/// Eigen-decomposition of a real symmetric `n×n` matrix given row-major.
/// Returns ascending eigenvalues and the eigenvectors as columns (row-major).
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    let m = ComplexMatrix::from_fn(n, n, |r, c| C64::new(a[r * n + c], 0.0));
    let eig = hermitian_eigen(&m)?;
    let vectors = eig.vectors.as_slice().iter().map(|z| z.re).collect();
    Ok((eig.values, vectors))
}

/// The `M²` real parameters of a Cholesky factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    dim: usize,
    t: Vec<f64>,
}

impl ParamVector {
    pub fn new(dim: usize, t: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if t.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: t.len(),
            });
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(Self { dim, t })
    }

    /// Parameters of `T = I/√M`, the maximally mixed state.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut t = vec![0.0; dim * dim];
        let d = 1.0 / (dim as f64).sqrt();
        t[..dim].iter_mut().for_each(|x| *x = d);
        Self { dim, t }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.t
    }

    /// `Tr(T†T)`, the squared Euclidean norm of the parameters.
    pub fn gram_trace(&self) -> f64 {
        self.t.iter().map(|x| x * x).sum()
    }
}

/// Index of `Re T[i][j]` (`i > j`) inside the packed parameter vector.
#[inline]
pub fn offdiag_offset(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(j < i && i < dim);
    dim + 2 * (i * (i - 1) / 2 + j)
}

/// Lower-triangular factor with a real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    matrix: ComplexMatrix,
}

impl CholeskyFactor {
    /// Validates triangularity and the real diagonal.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                got: matrix.cols(),
            });
        }
        let n = matrix.rows();
        for i in 0..n {
            if matrix[(i, i)].im != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "diagonal entry {i} has nonzero imaginary part"
                )));
            }
            for j in i + 1..n {
                if matrix[(i, j)] != ZERO {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({i},{j}) above the diagonal is nonzero"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Unnormalized `T†T`.
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.dim();
        let t = &self.matrix;
        ComplexMatrix::from_fn(n, n, |a, b| {
            (a.max(b)..n).map(|k| t[(k, a)].conj() * t[(k, b)]).sum()
        })
    }

    pub fn gram_trace(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn params_to_factor(t: &ParamVector) -> CholeskyFactor {
    let dim = t.dim();
    let p = t.as_slice();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(p[i], 0.0);
        for j in 0..i {
            let o = offdiag_offset(dim, i, j);
            m[(i, j)] = C64::new(p[o], p[o + 1]);
        }
    }
    CholeskyFactor { matrix: m }
}

pub fn factor_to_params(f: &CholeskyFactor) -> ParamVector {
    let dim = f.dim();
    let m = &f.matrix;
    let mut t = vec![0.0; dim * dim];
    for i in 0..dim {
        t[i] = m[(i, i)].re;
        for j in 0..i {
            let o = offdiag_offset(dim, i, j);
            t[o] = m[(i, j)].re;
            t[o + 1] = m[(i, j)].im;
        }
    }
    ParamVector { dim, t }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Accepts a matrix that already satisfies the density-matrix invariants
    /// (Hermitian to 1e-12, eigenvalues ≥ -1e-10, unit trace to 1e-8).
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > 1e-12 * matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("trace is {tr}, expected 1")));
        }
        let min = eigenvalues_hermitian(&matrix)?[0];
        if min < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let s = 1.0 / norm.sqrt();
        let v: Vec<C64> = psi.iter().map(|z| z * s).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&v, &v),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_hermitian(&self.matrix).expect("density matrix is Hermitian")
    }

    /// Convex mixture `w·self + (1-w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        let a = self.matrix.scale(C64::new(w, 0.0));
        let b = other.matrix.scale(C64::new(1.0 - w, 0.0));
        Ok(Self { matrix: a.add(&b)? })
    }

    /// `Tr(ρ F)` computed directly from matrix entries.
    pub fn expectation(&self, f: &ComplexMatrix) -> Result<C64> {
        if f.rows() != self.dim() || f.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.rows(),
            });
        }
        let n = self.dim();
        let mut acc = ZERO;
        for a in 0..n {
            for b in 0..n {
                acc += self.matrix[(a, b)] * f[(b, a)];
            }
        }
        Ok(acc)
    }
}

/// `ρ = T†T / Tr(T†T)`.
pub fn factor_to_density(t: &CholeskyFactor) -> Result<DensityMatrix> {
    let tr = t.gram_trace();
    if tr == 0.0 {
        return Err(Error::DegenerateFactor);
    }
    if !tr.is_finite() {
        return Err(Error::NonFinite("factor"));
    }
    let g = t.gram();
    let n = g.rows();
    let mut m = g.scale(C64::new(1.0 / tr, 0.0));
    // Exact Hermiticity and a real diagonal.
    for a in 0..n {
        m[(a, a)] = C64::new(m[(a, a)].re, 0.0);
        for b in a + 1..n {
            m[(b, a)] = m[(a, b)].conj();
        }
    }
    Ok(DensityMatrix { matrix: m })
}

/// Finds a lower-triangular, real-diagonal `T` with `T†T = A` for a positive
/// semidefinite Hermitian `A`. Rank-deficient inputs are handled by zeroing
/// columns whose pivot falls below `1e-14·max|A|`.
pub fn density_to_factor(a: &ComplexMatrix) -> Result<CholeskyFactor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let n = a.rows();
    // Standard Cholesky R = L L† of the index-reversed matrix; T = (P L P)†.
    let rev = |i: usize| n - 1 - i;
    let r = ComplexMatrix::from_fn(n, n, |i, j| a[(rev(i), rev(j))]);
    let tol = 1e-14 * r.max_abs().max(f64::MIN_POSITIVE);
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let d = r[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if d <= tol {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let s: C64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (r[(i, j)] - s) / ljj;
        }
    }
    // U = P L P is upper triangular; T = U†.
    let t = ComplexMatrix::from_fn(n, n, |i, j| l[(rev(j), rev(i))].conj());
    CholeskyFactor::from_matrix(t)
}

/// `⟨ψ|ρ|ψ⟩`, clipped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, psi: &[C64]) -> Result<f64> {
    if psi.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: psi.len(),
        });
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "target state not normalized (norm² = {norm})"
        )));
    }
    let rp = rho.matrix().matvec(psi)?;
    let f: C64 = psi.iter().zip(&rp).map(|(a, b)| a.conj() * b).sum();
    Ok(f.re.clamp(0.0, 1.0))
}

/// Trace distance `½ Σ |λ(ρ - σ)|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let d = rho.matrix().sub(sigma.matrix())?;
    Ok(0.5 * eigenvalues_hermitian(&d)?.iter().map(|x| x.abs()).sum::<f64>())
}
