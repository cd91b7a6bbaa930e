//! Small dense/sparse symmetric linear algebra, generic over the scalar type.

use crate::scalar::Scalar;

/// Symmetric linear map `y = A x`.
pub trait LinearOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    /// Overwrites `y` with `A x`.
    fn apply(&self, x: &[T], y: &mut [T]);
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    // four accumulators keep the loop vectorisable
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalises in place and returns the previous norm.
pub fn normalize<T: Scalar>(x: &mut [T]) -> T {
    let nrm = norm(x);
    if nrm > T::zero() {
        scale(T::one() / nrm, x);
    }
    nrm
}

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSym<T> {
    pub n: usize,
    pub a: Vec<T>,
}

impl<T: Scalar> DenseSym<T> {
    pub fn zeros(n: usize) -> Self {
        DenseSym { n, a: vec![T::zero(); n * n] }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> T>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    pub fn from_operator<O: LinearOperator<T> + ?Sized>(op: &O) -> Self {
        let n = op.dim();
        let mut m = Self::zeros(n);
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            op.apply(&e, &mut col);
            e[j] = T::zero();
            for i in 0..n {
                m.a[i * n + j] = col[i];
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Full eigendecomposition, eigenvalues ascending.
    pub fn eigh(&self) -> SymEigen<T> {
        let n = self.n;
        let mut v = self.a.clone();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        if n == 0 {
            return SymEigen { values: d, vectors: v, n };
        }
        tred2(n, &mut v, &mut d, &mut e);
        tql2(n, &mut v, &mut d, &mut e, true);
        SymEigen { values: d, vectors: v, n }
    }
}

impl<T: Scalar> LinearOperator<T> for DenseSym<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(&self.a[i * self.n..(i + 1) * self.n], x);
        }
    }
}

/// Eigenpairs; `vectors` is row-major with eigenvector `j` in column `j`.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> SymEigen<T> {
    pub fn vector(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal `alpha`
/// and off-diagonal `beta` (`beta.len() == alpha.len() - 1`).
pub fn tridiag_eigh<T: Scalar>(alpha: &[T], beta: &[T], vectors: bool) -> SymEigen<T> {
    let n = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![T::zero(); n];
    // tql2 expects the subdiagonal in e[1..n]
    e[1..n].copy_from_slice(&beta[..n.saturating_sub(1)]);
    let mut v = if vectors {
        let mut v = vec![T::zero(); n * n];
        for i in 0..n {
            v[i * n + i] = T::one();
        }
        v
    } else {
        vec![]
    };
    if n > 0 {
        tql2(n, &mut v, &mut d, &mut e, vectors);
    }
    SymEigen { values: d, vectors: v, n }
}

/// Householder reduction to tridiagonal form (JAMA / EISPACK tred2).
fn tred2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let z = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = z;
        let mut h = z;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == z {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = z;
                v[j * n + i] = z;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > z {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = z;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = z;
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
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = z;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = T::one();
        let h = d[i + 1];
        if h != z {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = z;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = z;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = z;
    }
    v[(n - 1) * n + n - 1] = T::one();
    e[0] = z;
}

/// Implicit QL on a symmetric tridiagonal matrix (JAMA / EISPACK tql2); sorts ascending.
fn tql2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T], vectors: bool) {
    let z = T::zero();
    let one = T::one();
    let two = one + one;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = z;
    let mut f = z;
    let mut tst1 = z;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < z {
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
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = z;
                let mut s2 = z;
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
                    if vectors {
                        for k in 0..n {
                            let hk = v[k * n + i + 1];
                            v[k * n + i + 1] = s * v[k * n + i] + c * hk;
                            v[k * n + i] = c * v[k * n + i] - s * hk;
                        }
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
        d[l] += f;
        e[l] = z;
    }
    // selection sort keeps vectors aligned
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().take(n).skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if vectors {
                for j in 0..n {
                    v.swap(j * n + i, j * n + k);
                }
            }
        }
    }
}

/// Compressed sparse rows with `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Csr {
    /// From (row, col, value) triplets; duplicates are summed.
    /// Duplicate `(row, col)` pairs are summed.
    pub fn from_triplets(n: usize, t: Vec<(u32, u32, f64)>) -> Self {
        // bucket by row, then sort each row by column
        let mut start = vec![0usize; n + 1];
        for &(r, _, _) in &t {
            start[r as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut cv = vec![(0u32, 0.0f64); t.len()];
        for (r, c, v) in t {
            let p = &mut fill[r as usize];
            cv[*p] = (c, v);
            *p += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(cv.len());
        let mut val: Vec<f64> = Vec::with_capacity(cv.len());
        for i in 0..n {
            let row = &mut cv[start[i]..start[i + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut last = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *val.last_mut().unwrap() += v;
                    continue;
                }
                last = Some(c);
                col.push(c);
                val.push(v);
            }
            row_ptr[i + 1] = col.len();
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col[a..b].iter().copied().zip(self.val[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c as usize == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense<T: Scalar>(&self) -> DenseSym<T> {
        let mut m = DenseSym::zeros(self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                m.a[i * self.n + c as usize] = T::of(v);
            }
        }
        m
    }
}

impl<T: Scalar> LinearOperator<T> for Csr {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += T::of(self.val[p]) * x[self.col[p] as usize];
            }
            *yi = s;
        }
    }
}
