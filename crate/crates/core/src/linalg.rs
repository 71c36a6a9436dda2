//! Dense symmetric eigendecomposition (Householder tridiagonalisation
//! followed by implicit QL), used by the PCA codec, the Frechet distance and
//! the mel pseudo-inverse.

use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Real> SquareMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), n * n, "matrix buffer must be n×n");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> S {
        (0..self.n).fold(S::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == S::zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    /// `(A + Aᵀ) / 2`
    pub fn symmetrized(&self) -> Self {
        let n = self.n;
        let half = S::lit(0.5);
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, half * (self.get(i, j) + self.get(j, i)));
            }
        }
        out
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<S> {
    pub values: Vec<S>,
    /// Row-major; column `j` is the eigenvector for `values[j]`.
    pub vectors: SquareMatrix<S>,
}

impl<S: Real> SymmetricEigen<S> {
    pub fn vector(&self, j: usize) -> Vec<S> {
        (0..self.vectors.n).map(|i| self.vectors.get(i, j)).collect()
    }

    /// `V · diag(f(λ)) · Vᵀ`
    pub fn reconstruct_with(&self, f: impl Fn(S) -> S) -> SquareMatrix<S> {
        let n = self.vectors.n;
        let mapped: Vec<S> = self.values.iter().map(|&v| f(v)).collect();
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = S::zero();
                for k in 0..n {
                    acc = acc + self.vectors.get(i, k) * mapped[k] * self.vectors.get(j, k);
                }
                out.set(i, j, acc);
                out.set(j, i, acc);
            }
        }
        out
    }
}

/// Eigendecomposition of the symmetric part of `a`.
pub fn symmetric_eigen<S: Real>(a: &SquareMatrix<S>) -> SymmetricEigen<S> {
    let n = a.n;
    if n == 0 {
        return SymmetricEigen {
            values: Vec::new(),
            vectors: SquareMatrix::zeros(0),
        };
    }
    let sym = a.symmetrized();
    let mut v: Vec<Vec<S>> = (0..n).map(|i| sym.data[i * n..(i + 1) * n].to_vec()).collect();
    let mut d = vec![S::zero(); n];
    let mut e = vec![S::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = SquareMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for (row, vrow) in v.iter().enumerate() {
            vectors.set(row, col, vrow[src]);
        }
    }
    SymmetricEigen { values, vectors }
}

/// Principal square root of a symmetric positive semi-definite matrix;
/// negative eigenvalues are clamped to zero.
pub fn psd_sqrt<S: Real>(a: &SquareMatrix<S>) -> SquareMatrix<S> {
    symmetric_eigen(a).reconstruct_with(|l| l.max(S::zero()).sqrt())
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix, discarding
/// eigenvalues below `rel_cutoff · max|λ|`.
pub fn pinv_symmetric<S: Real>(a: &SquareMatrix<S>, rel_cutoff: S) -> SquareMatrix<S> {
    let eig = symmetric_eigen(a);
    let top = eig
        .values
        .iter()
        .fold(S::zero(), |m, &v| if v.abs() > m { v.abs() } else { m });
    let cut = top * rel_cutoff;
    eig.reconstruct_with(|l| if l.abs() > cut { S::one() / l } else { S::zero() })
}

fn tridiagonalize<S: Real>(v: &mut [Vec<S>], d: &mut [S], e: &mut [S]) {
    let n = d.len();
    let zero = S::zero();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g = g + v[k][j] * d[k];
                    e[k] = e[k] + v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] = v[k][j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = S::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g = g + v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] = v[k][j] - g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = S::one();
    e[0] = zero;
}

fn ql_implicit<S: Real>(v: &mut [Vec<S>], d: &mut [S], e: &mut [S]) {
    let n = d.len();
    let zero = S::zero();
    let one = S::one();
    let two = S::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = S::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
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
                    for row in v.iter_mut() {
                        let hk = row[i + 1];
                        row[i + 1] = s * row[i] + c * hk;
                        row[i] = c * row[i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }
}
