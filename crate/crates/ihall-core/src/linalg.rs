//! Dense matrices over a table-backed finite field.

use alloc::vec;
use alloc::vec::Vec;

use crate::groundfield::{FqElem, Gf};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<FqElem>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_cols(rows: usize, cols: &[Vec<FqElem>]) -> Mat {
        let mut m = Mat::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m.set(i, j, c[i]);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FqElem {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FqElem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<FqElem> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, gf: &Gf, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows);
        let mut r = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b != 0 {
                        let cur = r.get(i, j);
                        r.set(i, j, gf.add(cur, gf.mul(a, b)));
                    }
                }
            }
        }
        r
    }

    pub fn apply(&self, gf: &Gf, v: &[FqElem]) -> Vec<FqElem> {
        let mut out = vec![0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0;
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a != 0 && v[j] != 0 {
                    acc = gf.add(acc, gf.mul(a, v[j]));
                }
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, gf: &Gf, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| gf.add(a, b)).collect(),
        }
    }

    pub fn scale(&self, gf: &Gf, c: FqElem) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| gf.mul(a, c)).collect() }
    }

    /// In-place `self += c * o`.
    pub fn axpy(&mut self, gf: &Gf, c: FqElem, o: &Mat) {
        if c == 0 {
            return;
        }
        for (a, &b) in self.data.iter_mut().zip(&o.data) {
            if b != 0 {
                *a = gf.add(*a, gf.mul(c, b));
            }
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn pow(&self, gf: &Gf, e: u32) -> Mat {
        let mut acc = Mat::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(gf, self);
        }
        acc
    }

    /// Evaluates a polynomial (lowest coefficient first) at a square matrix.
    pub fn poly_eval(&self, gf: &Gf, f: &[FqElem]) -> Mat {
        let mut acc = Mat::zeros(self.rows, self.cols);
        for &c in f.iter().rev() {
            acc = acc.mul(gf, self);
            for i in 0..self.rows {
                let cur = acc.get(i, i);
                acc.set(i, i, gf.add(cur, c));
            }
        }
        acc
    }

    pub fn hstack(&self, o: &Mat) -> Mat {
        assert_eq!(self.rows, o.rows);
        let mut m = Mat::zeros(self.rows, self.cols + o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j));
            }
            for j in 0..o.cols {
                m.set(i, self.cols + j, o.get(i, j));
            }
        }
        m
    }

    pub fn vstack(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&o.data);
        Mat { rows: self.rows + o.rows, cols: self.cols, data }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            for j in 0..self.cols {
                m.set(r, j, self.get(i, j));
            }
        }
        m
    }

    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (c, &j) in idx.iter().enumerate() {
                m.set(i, c, self.get(i, j));
            }
        }
        m
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self, gf: &Gf) -> (Mat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.get(i, c) != 0) else { continue };
            if p != r {
                for j in 0..m.cols {
                    let (a, b) = (m.get(r, j), m.get(p, j));
                    m.set(r, j, b);
                    m.set(p, j, a);
                }
            }
            let inv = gf.inv(m.get(r, c));
            for j in 0..m.cols {
                let v = m.get(r, j);
                m.set(r, j, gf.mul(v, inv));
            }
            for i in 0..m.rows {
                if i != r {
                    let f = m.get(i, c);
                    if f != 0 {
                        for j in 0..m.cols {
                            let v = gf.sub(m.get(i, j), gf.mul(f, m.get(r, j)));
                            m.set(i, j, v);
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self, gf: &Gf) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        self.rref(gf).1.len()
    }

    /// Basis of `{x : self * x = 0}`.
    pub fn nullspace(&self, gf: &Gf) -> Vec<Vec<FqElem>> {
        let (r, piv) = self.rref(gf);
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![0; self.cols];
                v[f] = 1;
                for (row, &pc) in piv.iter().enumerate() {
                    v[pc] = gf.neg(r.get(row, f));
                }
                v
            })
            .collect()
    }

    /// Basis of the column space, as columns of a matrix.
    pub fn col_basis(&self, gf: &Gf) -> Mat {
        let (_, piv) = self.rref(gf);
        self.select_cols(&piv)
    }
}

/// Every linear combination of `basis` with coefficients in `F_q`,
/// visited in a fixed order; the first one is zero.
pub fn for_each_combination<F: FnMut(&[FqElem])>(gf: &Gf, n: usize, mut f: F) {
    let q = gf.size() as FqElem;
    let mut c = vec![0 as FqElem; n];
    loop {
        f(&c);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            c[k] += 1;
            if c[k] < q {
                break;
            }
            c[k] = 0;
            k += 1;
        }
    }
}

/// One representative per line of `F_q^n` (last nonzero entry 1) plus the
/// zero vector, each with the number of vectors it stands for.
pub fn for_each_projective<F: FnMut(&[FqElem], u64)>(gf: &Gf, n: usize, mut f: F) {
    let q = gf.size() as FqElem;
    let mut c = vec![0 as FqElem; n];
    f(&c, 1);
    for p in 0..n {
        c.iter_mut().for_each(|x| *x = 0);
        c[p] = 1;
        loop {
            f(&c, q as u64 - 1);
            let mut k = 0;
            loop {
                if k == p {
                    break;
                }
                c[k] += 1;
                if c[k] < q {
                    break;
                }
                c[k] = 0;
                k += 1;
            }
            if k == p {
                break;
            }
        }
    }
}

/// All subspaces of `F_q^n` of dimension `k`, each as a basis in reduced
/// echelon form (columns of the returned matrix).
pub fn subspaces(gf: &Gf, n: usize, k: usize) -> Vec<Mat> {
    let mut out = Vec::new();
    let mut piv = Vec::new();
    choose_pivots(gf, n, k, 0, &mut piv, &mut out);
    out
}

fn choose_pivots(gf: &Gf, n: usize, k: usize, start: usize, piv: &mut Vec<usize>, out: &mut Vec<Mat>) {
    if piv.len() == k {
        // free entries: row r, column c > piv[r], c not a pivot
        let mut slots = Vec::new();
        for (r, &p) in piv.iter().enumerate() {
            for c in p + 1..n {
                if !piv.contains(&c) {
                    slots.push((r, c));
                }
            }
        }
        for_each_combination(gf, slots.len(), |vals| {
            let mut m = Mat::zeros(k, n);
            for (r, &p) in piv.iter().enumerate() {
                m.set(r, p, 1);
            }
            for (&(r, c), &v) in slots.iter().zip(vals) {
                m.set(r, c, v);
            }
            out.push(m.transpose());
        });
        return;
    }
    for p in start..n {
        piv.push(p);
        choose_pivots(gf, n, k, p + 1, piv, out);
        piv.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projective_covers_space() {
        let gf = Gf::ground(3).unwrap();
        for n in 0..4 {
            let (mut reps, mut total) = (0u64, 0u64);
            for_each_projective(&gf, n, |c, m| {
                reps += 1;
                total += m;
                if let Some(&last) = c.iter().rev().find(|&&x| x != 0) {
                    assert_eq!(last, 1);
                }
            });
            assert_eq!(total, 3u64.pow(n as u32));
            assert_eq!(reps, 1 + (3u64.pow(n as u32) - 1) / 2);
        }
    }

    #[test]
    fn subspace_counts() {
        // Gaussian binomials at q = 2: [4 choose 2]_2 = 35
        let gf = Gf::new(2).unwrap();
        assert_eq!(subspaces(&gf, 4, 2).len(), 35);
        assert_eq!(subspaces(&gf, 3, 1).len(), 7);
        let gf3 = Gf::new(3).unwrap();
        assert_eq!(subspaces(&gf3, 3, 1).len(), 13);
        assert_eq!(subspaces(&gf3, 2, 0).len(), 1);
    }

    #[test]
    fn nullspace_rank() {
        let gf = Gf::new(3).unwrap();
        let mut m = Mat::zeros(2, 3);
        m.set(0, 0, 1);
        m.set(0, 1, 2);
        m.set(1, 2, 1);
        assert_eq!(m.rank(&gf), 2);
        let ns = m.nullspace(&gf);
        assert_eq!(ns.len(), 1);
        assert!(m.apply(&gf, &ns[0]).iter().all(|&x| x == 0));
    }
}
