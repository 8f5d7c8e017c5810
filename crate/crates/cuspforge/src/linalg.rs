//! Dense complex linear algebra at arbitrary precision, sized for gluing
//! systems (a few dozen unknowns at most).

use std::ops::{Index, IndexMut};

use rug::{Complex, Float};

use crate::num;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    prec: u32,
    data: Vec<Complex>,
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (r, c): (usize, usize)) -> &Complex {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex {
        &mut self.data[r * self.cols + c]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        CMatrix { rows, cols, prec, data: vec![Complex::new(prec); rows * cols] }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Self::zeros(n, n, prec);
        for i in 0..n {
            m[(i, i)] = Complex::with_val(prec, 1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex>>, prec: u32) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c, prec);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c);
            for (j, v) in row.into_iter().enumerate() {
                m[(i, j)] = Complex::with_val(prec, v);
            }
        }
        m
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn row(&self, r: usize) -> Vec<Complex> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn column(&self, c: usize) -> Vec<Complex> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    /// The submatrix keeping the listed columns in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len(), self.prec);
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                m[(r, k)] = self[(r, c)].clone();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows, self.prec);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].clone().conj();
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &[Complex]) -> Vec<Complex> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let mut acc = Complex::new(self.prec);
                for c in 0..self.cols {
                    acc += Complex::with_val(self.prec, &self[(r, c)] * &x[c]);
                }
                acc
            })
            .collect()
    }

    pub fn mul(&self, o: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, o.rows);
        let mut m = Self::zeros(self.rows, o.cols, self.prec);
        for r in 0..self.rows {
            for c in 0..o.cols {
                let mut acc = Complex::new(self.prec);
                for k in 0..self.cols {
                    acc += Complex::with_val(self.prec, &self[(r, k)] * &o[(k, c)]);
                }
                m[(r, c)] = acc;
            }
        }
        m
    }
}

pub fn norm(v: &[Complex]) -> Float {
    let prec = v.first().map_or(64, |z| z.prec().0);
    let mut s = Float::new(prec);
    for z in v {
        s += Float::with_val(prec, z.norm_ref());
    }
    s.sqrt()
}

pub fn max_abs(v: &[Complex]) -> Float {
    let prec = v.first().map_or(64, |z| z.prec().0);
    v.iter().map(num::abs).fold(Float::new(prec), |a, b| if b > a { b } else { a })
}

/// Householder reflectors stored column by column.
struct Householder {
    vs: Vec<Vec<Complex>>,
    taus: Vec<Float>,
}

impl Householder {
    /// Apply `Q^H` (the product of reflectors, first to last) to `x`.
    fn apply_adjoint(&self, x: &mut [Complex]) {
        for (k, (v, t)) in self.vs.iter().zip(&self.taus).enumerate() {
            reflect(v, t, &mut x[k..]);
        }
    }

    /// Apply `Q` to `x`.
    fn apply(&self, x: &mut [Complex]) {
        for (k, (v, t)) in self.vs.iter().zip(&self.taus).enumerate().rev() {
            reflect(v, t, &mut x[k..]);
        }
    }
}

fn reflect(v: &[Complex], tau: &Float, x: &mut [Complex]) {
    if tau.is_zero() {
        return;
    }
    let prec = x[0].prec().0;
    let mut dot = Complex::new(prec);
    for (vi, xi) in v.iter().zip(x.iter()) {
        dot += Complex::with_val(prec, vi.conj_ref()) * xi;
    }
    dot *= tau;
    for (vi, xi) in v.iter().zip(x.iter_mut()) {
        *xi -= Complex::with_val(prec, vi * &dot);
    }
}

/// Householder QR of `a` with optional column pivoting. Returns the reflectors,
/// the upper-triangular factor in place of `a` and the column order.
fn qr(a: &mut CMatrix, pivot: bool) -> (Householder, Vec<usize>) {
    let (m, n) = (a.rows, a.cols);
    let prec = a.prec;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut h = Householder { vs: Vec::new(), taus: Vec::new() };
    for k in 0..m.min(n) {
        if pivot {
            let mut best = k;
            let mut best_norm = Float::new(prec);
            for c in k..n {
                let col: Vec<Complex> = (k..m).map(|r| a[(r, c)].clone()).collect();
                let nm = norm(&col);
                if nm > best_norm {
                    best_norm = nm;
                    best = c;
                }
            }
            if best != k {
                for r in 0..m {
                    let t = a[(r, k)].clone();
                    a[(r, k)] = a[(r, best)].clone();
                    a[(r, best)] = t;
                }
                perm.swap(k, best);
            }
        }
        let x: Vec<Complex> = (k..m).map(|r| a[(r, k)].clone()).collect();
        let xnorm = norm(&x);
        if xnorm.is_zero() {
            h.vs.push(vec![Complex::new(prec); m - k]);
            h.taus.push(Float::new(prec));
            continue;
        }
        let x0abs = num::abs(&x[0]);
        let phase = if x0abs.is_zero() { Complex::with_val(prec, 1) } else { Complex::with_val(prec, &x[0] / &x0abs) };
        let alpha = -Complex::with_val(prec, &phase * &xnorm);
        let mut v = x;
        v[0] -= &alpha;
        let vnorm2 = norm(&v).square();
        let tau = Float::with_val(prec, 2u32) / vnorm2;
        for c in k..n {
            let mut col: Vec<Complex> = (k..m).map(|r| a[(r, c)].clone()).collect();
            reflect(&v, &tau, &mut col);
            for (r, val) in (k..m).zip(col) {
                a[(r, c)] = val;
            }
        }
        for r in k + 1..m {
            a[(r, k)] = Complex::new(prec);
        }
        h.vs.push(v);
        h.taus.push(tau);
    }
    (h, perm)
}

/// Rank-revealing factorization `A P = Q R`.
pub struct PivotedQr {
    h: Householder,
    r: CMatrix,
    perm: Vec<usize>,
    pub rank: usize,
    /// `|R_kk| / |R_00|` for each diagonal entry.
    pub diag_ratios: Vec<f64>,
}

pub fn pivoted_qr(a: &CMatrix, rel_tol: f64) -> PivotedQr {
    let mut r = a.clone();
    let (h, perm) = qr(&mut r, true);
    let k = a.rows.min(a.cols);
    let d0 = if k > 0 { num::abs(&r[(0, 0)]) } else { Float::new(a.prec) };
    let diag_ratios: Vec<f64> = (0..k)
        .map(|i| if d0.is_zero() { 0.0 } else { (num::abs(&r[(i, i)]) / &d0).to_f64() })
        .collect();
    let rank = diag_ratios.iter().take_while(|&&q| q > rel_tol).count();
    PivotedQr { h, r, perm, rank, diag_ratios }
}

fn back_substitute(r: &CMatrix, rank: usize, rhs: &[Complex]) -> Vec<Complex> {
    let prec = r.prec;
    let mut y = vec![Complex::new(prec); rank];
    for i in (0..rank).rev() {
        let mut s = rhs[i].clone();
        for j in i + 1..rank {
            s -= Complex::with_val(prec, &r[(i, j)] * &y[j]);
        }
        y[i] = s / &r[(i, i)];
    }
    y
}

/// Solve `R^H y = c` for upper-triangular `R` (`rank` x `rank`).
fn forward_substitute_adjoint(r: &CMatrix, rank: usize, c: &[Complex]) -> Vec<Complex> {
    let prec = r.prec;
    let mut y = vec![Complex::new(prec); rank];
    for i in 0..rank {
        let mut s = c[i].clone();
        for j in 0..i {
            s -= Complex::with_val(prec, r[(j, i)].conj_ref()) * &y[j];
        }
        y[i] = s / Complex::with_val(prec, r[(i, i)].conj_ref());
    }
    y
}

impl PivotedQr {
    /// Minimum-norm least-squares solution of `A x = b` using the numerical rank.
    pub fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        let prec = self.r.prec;
        let n = self.r.cols;
        let rank = self.rank;
        let mut qb = b.to_vec();
        self.h.apply_adjoint(&mut qb);
        if rank == 0 {
            return vec![Complex::new(prec); n];
        }
        let y = if rank == n {
            back_substitute(&self.r, rank, &qb)
        } else {
            // Minimum norm over [R11 R12] y = c through a QR of its adjoint.
            let mut w = CMatrix::zeros(n, rank, prec);
            for i in 0..rank {
                for j in i..n {
                    w[(j, i)] = self.r[(i, j)].clone().conj();
                }
            }
            let (h2, _) = qr(&mut w, false);
            let t = forward_substitute_adjoint(&w, rank, &qb[..rank]);
            let mut full = t;
            full.resize(n, Complex::new(prec));
            h2.apply(&mut full);
            full
        };
        let mut x = vec![Complex::new(prec); n];
        for (k, &p) in self.perm.iter().enumerate() {
            if k < y.len() {
                x[p] = y[k].clone();
            }
        }
        x
    }

    /// Orthonormal basis of the numerical kernel.
    pub fn kernel(&self) -> Vec<Vec<Complex>> {
        let prec = self.r.prec;
        let n = self.r.cols;
        let rank = self.rank;
        let mut w = CMatrix::zeros(n, rank, prec);
        for i in 0..rank {
            for j in i..n {
                w[(j, i)] = self.r[(i, j)].clone().conj();
            }
        }
        let (h2, _) = qr(&mut w, false);
        (rank..n)
            .map(|k| {
                let mut e = vec![Complex::new(prec); n];
                e[k] = Complex::with_val(prec, 1);
                h2.apply(&mut e);
                let mut x = vec![Complex::new(prec); n];
                for (i, &p) in self.perm.iter().enumerate() {
                    x[p] = e[i].clone();
                }
                x
            })
            .collect()
    }
}

/// Least-squares solve with a relative rank threshold.
pub fn lstsq(a: &CMatrix, b: &[Complex], rel_tol: f64) -> (Vec<Complex>, usize) {
    let f = pivoted_qr(a, rel_tol);
    (f.solve(b), f.rank)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_square(a: &CMatrix, b: &[Complex]) -> Option<Vec<Complex>> {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let prec = a.prec;
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| num::abs(&m[(i, k)]).partial_cmp(&num::abs(&m[(j, k)])).unwrap())?;
        if m[(p, k)].is_zero() {
            return None;
        }
        if p != k {
            for c in 0..n {
                let t = m[(k, c)].clone();
                m[(k, c)] = m[(p, c)].clone();
                m[(p, c)] = t;
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = Complex::with_val(prec, &m[(i, k)] / &m[(k, k)]);
            for c in k..n {
                let sub = Complex::with_val(prec, &f * &m[(k, c)]);
                m[(i, c)] -= sub;
            }
            let sub = Complex::with_val(prec, &f * &x[k]);
            x[i] -= sub;
        }
    }
    Some(back_substitute(&m, n, &x))
}

pub fn determinant(a: &CMatrix) -> Complex {
    let n = a.rows;
    let prec = a.prec;
    let mut m = a.clone();
    let mut det = Complex::with_val(prec, 1);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| num::abs(&m[(i, k)]).partial_cmp(&num::abs(&m[(j, k)])).unwrap()).unwrap();
        if m[(p, k)].is_zero() {
            return Complex::new(prec);
        }
        if p != k {
            for c in 0..n {
                let t = m[(k, c)].clone();
                m[(k, c)] = m[(p, c)].clone();
                m[(p, c)] = t;
            }
            det = -det;
        }
        det *= &m[(k, k)];
        for i in k + 1..n {
            let f = Complex::with_val(prec, &m[(i, k)] / &m[(k, k)]);
            for c in k..n {
                let sub = Complex::with_val(prec, &f * &m[(k, c)]);
                m[(i, c)] -= sub;
            }
        }
    }
    det
}
