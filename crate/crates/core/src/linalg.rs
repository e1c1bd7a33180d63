//! Dense symmetric linear algebra.
//!
//! Only what the rate-distortion code needs: a square row-major matrix type,
//! a symmetric wrapper, eigendecomposition through interchangeable solvers,
//! and spectral application of scalar functions,
//! `f(A) = Q diag(f(λ_1), …, f(λ_N)) Qᵀ`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

pub const MAX_ORDER: usize = 4096;

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if order == 0 {
            return Err(Error::InvalidMatrix("matrix is empty".into()));
        }
        let mut data = Vec::with_capacity(order * order);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != order {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {order}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { order, data })
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                data.push(f(i, j));
            }
        }
        Self { order, data }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.order).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.order, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.order, rhs.order, "order mismatch");
        let n = self.order;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let lhs_row = self.row(i);
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            order: self.order,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.order, rhs.order, "order mismatch");
        Self {
            order: self.order,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.order + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.order + j]
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.order).map(|i| self.row(i)))
            .finish()
    }
}

/// Real symmetric matrix; `m[(i, j)] == m[(j, i)]` holds bit for bit.
#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix(SquareMatrix);

impl SymmetricMatrix {
    /// Wraps `m` after checking exact symmetry and finiteness.
    pub fn new(m: SquareMatrix) -> Result<Self> {
        if m.order() == 0 {
            return Err(Error::InvalidMatrix("order must be at least 1".into()));
        }
        if m.order() > MAX_ORDER {
            return Err(Error::InvalidMatrix(format!(
                "order {} exceeds the supported maximum {MAX_ORDER}",
                m.order()
            )));
        }
        if !m.is_finite() {
            return Err(Error::InvalidMatrix("matrix has non-finite entries".into()));
        }
        let n = m.order();
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) differ: {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Replaces `m` by `(m + mᵀ)/2`. Intended for products that are
    /// symmetric in exact arithmetic.
    pub fn symmetrize(m: &SquareMatrix) -> Result<Self> {
        let n = m.order();
        let sym = SquareMatrix::from_fn(n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                0.5 * (m[(a, b)] + m[(b, a)])
            }
        });
        Self::new(sym)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(SquareMatrix::from_diagonal(diag))
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

impl std::ops::Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: SquareMatrix,
}

impl EigenDecomposition {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Q diag(values) Qᵀ`, symmetrized.
    pub fn synthesize(&self, values: &[f64]) -> Result<SymmetricMatrix> {
        let n = self.order();
        let q = &self.eigenvectors;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| q[(i, k)] * values[k] * q[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        SymmetricMatrix::new(out)
    }

    pub fn reconstruct(&self) -> Result<SymmetricMatrix> {
        self.synthesize(&self.eigenvalues)
    }

    fn sort_ascending(mut self) -> Self {
        let n = self.order();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| self.eigenvalues[a].total_cmp(&self.eigenvalues[b]));
        if idx.iter().enumerate().all(|(i, &k)| i == k) {
            return self;
        }
        let values = idx.iter().map(|&k| self.eigenvalues[k]).collect();
        let vectors = SquareMatrix::from_fn(n, |i, j| self.eigenvectors[(i, idx[j])]);
        self.eigenvalues = values;
        self.eigenvectors = vectors;
        self
    }
}

/// A symmetric eigensolver.
pub trait EigenSolver: Named + Send + Sync {
    /// Eigendecomposition with eigenvalues in ascending order.
    fn decompose(&self, m: &SymmetricMatrix) -> Result<EigenDecomposition>;
}

/// Cyclic Jacobi rotations. Sweeps until every off-diagonal magnitude is
/// below `1e-12·‖m‖_F`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jacobi;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

impl Named for Jacobi {
    fn name(&self) -> &'static str {
        "jacobi"
    }
}

impl EigenSolver for Jacobi {
    fn decompose(&self, m: &SymmetricMatrix) -> Result<EigenDecomposition> {
        let n = m.order();
        let mut a = m.matrix().clone();
        let mut v = SquareMatrix::identity(n);
        let threshold = JACOBI_REL_TOL * m.frobenius_norm();

        let mut converged = n == 1;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off_max = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off_max = off_max.max(a[(p, q)].abs());
                }
            }
            if off_max <= threshold {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);

                    a[(p, p)] = app - t * apq;
                    a[(q, q)] = aqq + t * apq;
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for r in 0..n {
                        if r == p || r == q {
                            continue;
                        }
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        let new_rp = arp - s * (arq + tau * arp);
                        let new_rq = arq + s * (arp - tau * arq);
                        a[(r, p)] = new_rp;
                        a[(p, r)] = new_rp;
                        a[(r, q)] = new_rq;
                        a[(q, r)] = new_rq;
                    }
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = vrp - s * (vrq + tau * vrp);
                        v[(r, q)] = vrq + s * (vrp - tau * vrq);
                    }
                }
            }
        }
        if !converged {
            return Err(Error::Solver {
                iterations: JACOBI_MAX_SWEEPS,
                residual: a.max_abs(),
            });
        }
        let eigenvalues = (0..n).map(|i| a[(i, i)]).collect();
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors: v,
        }
        .sort_ascending())
    }
}

/// Householder reduction to tridiagonal form followed by implicit QL with
/// Wilkinson shifts. Roughly an order of magnitude faster than [`Jacobi`]
/// at the orders used by Toeplitz convergence experiments.
#[derive(Debug, Clone, Copy, Default)]
pub struct HouseholderQl;

impl Named for HouseholderQl {
    fn name(&self) -> &'static str {
        "householder-ql"
    }
}

impl EigenSolver for HouseholderQl {
    fn decompose(&self, m: &SymmetricMatrix) -> Result<EigenDecomposition> {
        let n = m.order();
        // Work on columns: v[j] is column j, which keeps the inner loops contiguous.
        let mut v: Vec<Vec<f64>> = (0..n).map(|j| m.matrix().column(j)).collect();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tridiagonalize(&mut v, &mut d, &mut e);
        tridiagonal_ql(&mut v, &mut d, &mut e)?;
        let eigenvectors = SquareMatrix::from_fn(n, |i, j| v[j][i]);
        Ok(EigenDecomposition {
            eigenvalues: d,
            eigenvectors,
        }
        .sort_ascending())
    }
}

// Symmetric Householder tridiagonalization (tred2). On return `v` holds the
// accumulated orthogonal transform column-wise, `d` the diagonal and `e` the
// subdiagonal in e[1..].
#[allow(clippy::needless_range_loop)]
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    // v is column-major here: v[j][i] == A[i][j]; A is symmetric so rows and
    // columns are interchangeable on entry.
    let at = |v: &[Vec<f64>], i: usize, j: usize| v[j][i];
    for j in 0..n {
        d[j] = at(v, n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[j][i - 1];
                v[j][i] = 0.0;
                v[i][j] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[i][j] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[j][k] * d[k];
                    e[k] += v[j][k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[j][k] -= f * e[k] + g * d[k];
                }
                d[j] = v[j][i - 1];
                v[j][i] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[i][n - 1] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[i + 1][k] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[i + 1][k] * v[j][k];
                }
                for k in 0..=i {
                    v[j][k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[i + 1][k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[j][n - 1];
        v[j][n - 1] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e) (tql2), updating the columns of v.
#[allow(clippy::needless_range_loop)]
fn tridiagonal_ql(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        let m = m.min(n - 1);
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Solver {
                        iterations: iter,
                        residual: e[l].abs(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (left, right) = v.split_at_mut(i + 1);
                    let vi = &mut left[i];
                    let vi1 = &mut right[0];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Orders at or below this use [`Jacobi`] in [`eigh`]; larger ones use
/// [`HouseholderQl`].
pub const JACOBI_MAX_AUTO_ORDER: usize = 128;

pub fn eigensolvers() -> &'static Registry<dyn EigenSolver> {
    static REGISTRY: OnceLock<Registry<dyn EigenSolver>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn EigenSolver>::new("eigensolver")
            .with("jacobi", || Box::new(Jacobi))
            .with("householder-ql", || Box::new(HouseholderQl))
    })
}

/// Eigendecomposition with the default solver for the matrix order.
pub fn eigh(m: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if m.order() <= JACOBI_MAX_AUTO_ORDER {
        Jacobi.decompose(m)
    } else {
        HouseholderQl.decompose(m)
    }
}

/// Applies `f` to the eigenvalues of `m`: `Q diag(f(λ)) Qᵀ`.
pub fn matrix_function(m: &SymmetricMatrix, f: impl Fn(f64) -> f64) -> Result<SymmetricMatrix> {
    let eig = eigh(m)?;
    apply_spectral(&eig, m.frobenius_norm(), f)
}

/// Like [`matrix_function`] but reuses an existing decomposition of a matrix
/// with Frobenius norm `norm`.
pub fn apply_spectral(
    eig: &EigenDecomposition,
    norm: f64,
    f: impl Fn(f64) -> f64,
) -> Result<SymmetricMatrix> {
    let clip = 1e-12 * norm;
    let values = eig
        .eigenvalues
        .iter()
        .map(|&lambda| {
            let lambda = if lambda < 0.0 && lambda > -clip {
                0.0
            } else {
                lambda
            };
            let y = f(lambda);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Domain(format!(
                    "matrix function is not finite at eigenvalue {lambda:e}"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    eig.synthesize(&values)
}
