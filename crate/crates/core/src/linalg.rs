//! Dense complex matrix helpers.
//!
//! The problem sizes here are small (projection Grams up to 16x16, LMMSE
//! systems up to a few hundred rows), so a plain row-major `Vec<Complex64>`
//! with textbook algorithms is all that is needed: Gauss-Jordan inversion,
//! LU with partial pivoting for repeated solves, and a cyclic Jacobi sweep
//! for Hermitian eigenvalues.

use num_complex::Complex64;

/// Hermitian inner product `sum conj(a_i) * b_i` (conjugate on the first argument).
#[inline]
pub fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

/// Squared Euclidean norm of a complex vector.
#[inline]
pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat {
            nrows,
            ncols,
            data: vec![Complex64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(nrows, ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                *m.at_mut(r, c) = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.ncols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Complex64 {
        &mut self.data[r * self.ncols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.ncols..(r + 1) * self.ncols]
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.ncols, rhs.nrows, "matrix product dimension mismatch");
        let mut out = CMat::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            for p in 0..self.ncols {
                let a = self.at(i, p);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rrow = rhs.row(p);
                let orow = &mut out.data[i * rhs.ncols..(i + 1) * rhs.ncols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        let mut out = CMat::zeros(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                *out.at_mut(c, r) = self.at(r, c).conj();
            }
        }
        out
    }

    pub fn frob_norm_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    /// Matrix-vector product `self * x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.ncols, x.len());
        (0..self.nrows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a * b)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// Pivot rejection threshold (squared), relative to the largest entry.
    fn pivot_floor_sq(&self) -> f64 {
        let scale_sq = self
            .data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(0.0f64, f64::max);
        (scale_sq * 1e-26).max(1e-300)
    }

    /// Gauss-Jordan inverse with partial pivoting. `None` if singular.
    pub fn inverse(&self) -> Option<CMat> {
        assert_eq!(self.nrows, self.ncols, "inverse needs a square matrix");
        let n = self.nrows;
        let floor = self.pivot_floor_sq();
        let mut a = self.clone();
        let mut inv = CMat::identity(n);

        for col in 0..n {
            let mut piv = col;
            let mut best = a.at(col, col).norm_sqr();
            for r in col + 1..n {
                let m = a.at(r, col).norm_sqr();
                if m > best {
                    best = m;
                    piv = r;
                }
            }
            if best < floor {
                return None;
            }
            if piv != col {
                for c in 0..n {
                    a.data.swap(piv * n + c, col * n + c);
                    inv.data.swap(piv * n + c, col * n + c);
                }
            }
            let d = a.at(col, col);
            let dinv = Complex64::new(1.0, 0.0) / d;
            for c in 0..n {
                *a.at_mut(col, c) *= dinv;
                *inv.at_mut(col, c) *= dinv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.at(r, col);
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    let av = a.at(col, c);
                    let iv = inv.at(col, c);
                    *a.at_mut(r, c) -= f * av;
                    *inv.at_mut(r, c) -= f * iv;
                }
            }
        }
        Some(inv)
    }

    /// LU factorization with partial pivoting, for repeated solves.
    pub fn lu(&self) -> Option<Lu> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let floor = self.pivot_floor_sq();
        let mut lu = self.clone();
        let mut piv = Vec::with_capacity(n);
        for col in 0..n {
            let mut p = col;
            let mut best = lu.at(col, col).norm_sqr();
            for r in col + 1..n {
                let m = lu.at(r, col).norm_sqr();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best < floor {
                return None;
            }
            piv.push(p);
            if p != col {
                for c in 0..n {
                    lu.data.swap(p * n + c, col * n + c);
                }
            }
            let d = lu.at(col, col);
            for r in col + 1..n {
                let f = lu.at(r, col) / d;
                *lu.at_mut(r, col) = f;
                for c in col + 1..n {
                    let v = lu.at(col, c);
                    *lu.at_mut(r, c) -= f * v;
                }
            }
        }
        Some(Lu { lu, piv })
    }

    /// Eigenvalues of a Hermitian matrix via cyclic Jacobi sweeps,
    /// sorted ascending. Only the lower/upper structure implied by
    /// Hermitian symmetry is assumed.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![self.at(0, 0).re];
        }
        let mut a = self.clone();
        let scale = a.frob_norm_sq().sqrt().max(1e-300);
        let tol = 1e-14 * scale;

        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in p + 1..n {
                    off += a.at(p, q).norm_sqr();
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.at(p, q);
                    let mag = apq.norm();
                    if mag <= 1e-300 {
                        continue;
                    }
                    let phase = apq / mag; // e^{i phi}
                    let app = a.at(p, p).re;
                    let aqq = a.at(q, q).re;
                    let tau = (aqq - app) / (2.0 * mag);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    // Unitary U = D * J with D = diag(1, e^{-i phi}) on (p, q).
                    let upp = Complex64::new(c, 0.0);
                    let upq = Complex64::new(s, 0.0);
                    let uqp = -s * phase.conj();
                    let uqq = c * phase.conj();

                    // A <- A * U  (columns p, q)
                    for k in 0..n {
                        let akp = a.at(k, p);
                        let akq = a.at(k, q);
                        *a.at_mut(k, p) = akp * upp + akq * uqp;
                        *a.at_mut(k, q) = akp * upq + akq * uqq;
                    }
                    // A <- U^H * A  (rows p, q)
                    for k in 0..n {
                        let apk = a.at(p, k);
                        let aqk = a.at(q, k);
                        *a.at_mut(p, k) = upp.conj() * apk + uqp.conj() * aqk;
                        *a.at_mut(q, k) = upq.conj() * apk + uqq.conj() * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a.at(i, i).re).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }

    /// Spectral (2-norm) condition number of a Hermitian PSD matrix.
    /// Returns `f64::INFINITY` when the smallest eigenvalue is not positive.
    pub fn hermitian_condition_number(&self) -> f64 {
        let eig = self.hermitian_eigenvalues();
        match (eig.first(), eig.last()) {
            (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// LU factors produced by [`CMat::lu`].
pub struct Lu {
    lu: CMat,
    piv: Vec<usize>,
}

impl Lu {
    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.lu.nrows;
        assert_eq!(b.len(), n);
        for col in 0..n {
            let p = self.piv[col];
            if p != col {
                b.swap(p, col);
            }
        }
        // forward: L y = Pb (unit lower)
        for r in 1..n {
            let mut acc = b[r];
            for c in 0..r {
                acc -= self.lu.at(r, c) * b[c];
            }
            b[r] = acc;
        }
        // back: U x = y
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..n {
                acc -= self.lu.at(r, c) * b[c];
            }
            b[r] = acc / self.lu.at(r, r);
        }
    }
}
