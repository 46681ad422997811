//! The grading group L(p) and the Grothendieck group with its Euler form.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::groundfield::{Gf, Lambda};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightData {
    pub p: Vec<u32>,
    pub lambda: Vec<Lambda>,
}

impl WeightData {
    /// Weights with the default normalized parameters over `gf`.
    pub fn new(gf: &Gf, p: &[u32]) -> Result<Self> {
        let lambda = crate::groundfield::default_lambdas(gf, p.len())?;
        Self::with_lambda(p, lambda)
    }

    pub fn with_lambda(p: &[u32], lambda: Vec<Lambda>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::BadWeights(format!("need at least two weights, got {}", p.len())));
        }
        if p.contains(&0) {
            return Err(Error::BadWeights("weights must be positive".into()));
        }
        if lambda.len() != p.len() {
            return Err(Error::BadWeights("one parameter per weight".into()));
        }
        if lambda[0].is_some() || lambda[1] != Some(0) || (lambda.len() > 2 && lambda[2] != Some(1)) {
            return Err(Error::BadWeights("parameters must start with infinity, 0, 1".into()));
        }
        for i in 0..lambda.len() {
            for j in 0..i {
                if lambda[i] == lambda[j] {
                    return Err(Error::BadWeights("parameters must be distinct".into()));
                }
            }
        }
        Ok(WeightData { p: p.to_vec(), lambda })
    }

    pub fn t(&self) -> usize {
        self.p.len()
    }

    /// `p_i` for the 1-based branch `i`.
    pub fn weight(&self, i: usize) -> u32 {
        self.p[i - 1]
    }

    pub fn lcm(&self) -> i64 {
        self.p.iter().fold(1i64, |acc, &x| acc.lcm(&(x as i64)))
    }

    /// Offset of `S_{i,1}` in the flat `s` vector of a `K0Class`.
    fn offset(&self, i: usize) -> usize {
        self.p[..i - 1].iter().map(|&x| x as usize - 1).sum()
    }

    pub fn s_len(&self) -> usize {
        self.p.iter().map(|&x| x as usize - 1).sum()
    }
}

/// `l c + sum a_i x_i` with `0 <= a_i < p_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LVec {
    pub l: i64,
    pub a: Vec<u32>,
}

impl LVec {
    pub fn zero(w: &WeightData) -> Self {
        LVec { l: 0, a: vec![0; w.t()] }
    }

    /// Normal form of `l c + sum a_i x_i` for arbitrary integers `a_i`.
    pub fn normalize(w: &WeightData, l: i64, a: &[i64]) -> Self {
        let mut l = l;
        let mut out = vec![0u32; w.t()];
        for (i, &ai) in a.iter().enumerate() {
            let p = w.p[i] as i64;
            let (d, r) = ai.div_mod_floor(&p);
            l += d;
            out[i] = r as u32;
        }
        LVec { l, a: out }
    }

    pub fn c(w: &WeightData, l: i64) -> Self {
        LVec { l, a: vec![0; w.t()] }
    }

    /// `x_i` for the 1-based branch `i`.
    pub fn x(w: &WeightData, i: usize) -> Self {
        let mut a = vec![0i64; w.t()];
        a[i - 1] = 1;
        Self::normalize(w, 0, &a)
    }

    pub fn add(&self, w: &WeightData, o: &LVec) -> Self {
        let a: Vec<i64> = self.a.iter().zip(&o.a).map(|(&x, &y)| x as i64 + y as i64).collect();
        Self::normalize(w, self.l + o.l, &a)
    }

    pub fn sub(&self, w: &WeightData, o: &LVec) -> Self {
        let a: Vec<i64> = self.a.iter().zip(&o.a).map(|(&x, &y)| x as i64 - y as i64).collect();
        Self::normalize(w, self.l - o.l, &a)
    }

    pub fn add_x(&self, w: &WeightData, i: usize, k: i64) -> Self {
        let mut a: Vec<i64> = self.a.iter().map(|&x| x as i64).collect();
        a[i - 1] += k;
        Self::normalize(w, self.l, &a)
    }

    pub fn add_c(&self, k: i64) -> Self {
        LVec { l: self.l + k, a: self.a.clone() }
    }

    /// `deg x_i = p / p_i`.
    pub fn deg(&self, w: &WeightData) -> i64 {
        let p = w.lcm();
        self.l * p + self.a.iter().zip(&w.p).map(|(&a, &pi)| a as i64 * (p / pi as i64)).sum::<i64>()
    }

    /// Effective elements are exactly those with `l >= 0`.
    pub fn is_effective(&self) -> bool {
        self.l >= 0
    }

    /// All elements of the given degree.
    pub fn of_degree(w: &WeightData, d: i64) -> Vec<LVec> {
        let p = w.lcm();
        let mut out = Vec::new();
        let mut a = vec![0u32; w.t()];
        loop {
            let part: i64 = a.iter().zip(&w.p).map(|(&x, &pi)| x as i64 * (p / pi as i64)).sum();
            if (d - part).rem_euclid(p) == 0 {
                out.push(LVec { l: (d - part).div_euclid(p), a: a.clone() });
            }
            let mut k = 0;
            loop {
                if k == a.len() {
                    out.sort();
                    return out;
                }
                a[k] += 1;
                if a[k] < w.p[k] {
                    break;
                }
                a[k] = 0;
                k += 1;
            }
        }
    }
}

impl fmt::Display for LVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}c", self.l)?;
        for (i, &a) in self.a.iter().enumerate() {
            if a != 0 {
                write!(f, "+{}x{}", a, i + 1)?;
            }
        }
        Ok(())
    }
}

/// Coordinates on `O`, `O(c)` and `S_{ij}` for `1 <= j < p_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct K0Class {
    pub o: i64,
    pub oc: i64,
    pub s: Vec<i64>,
}

impl K0Class {
    pub fn zero(w: &WeightData) -> Self {
        K0Class { o: 0, oc: 0, s: vec![0; w.s_len()] }
    }

    pub fn is_zero(&self) -> bool {
        self.o == 0 && self.oc == 0 && self.s.iter().all(|&x| x == 0)
    }

    pub fn o_hat(w: &WeightData) -> Self {
        K0Class { o: 1, ..Self::zero(w) }
    }

    pub fn delta(w: &WeightData) -> Self {
        K0Class { o: -1, oc: 1, ..Self::zero(w) }
    }

    /// Class of the simple `S_{ij}`, `j` taken mod `p_i`.
    pub fn simple(w: &WeightData, i: usize, j: i64) -> Self {
        let p = w.weight(i) as i64;
        let j = j.rem_euclid(p);
        let off = w.offset(i);
        if j == 0 {
            let mut x = Self::delta(w);
            for k in 0..(p - 1) as usize {
                x.s[off + k] -= 1;
            }
            x
        } else {
            let mut x = Self::zero(w);
            x.s[off + j as usize - 1] = 1;
            x
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        K0Class {
            o: self.o + o.o,
            oc: self.oc + o.oc,
            s: self.s.iter().zip(&o.s).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1))
    }

    pub fn scale(&self, k: i64) -> Self {
        K0Class { o: self.o * k, oc: self.oc * k, s: self.s.iter().map(|a| a * k).collect() }
    }

    /// `O(v)` for `v = l c + sum a_i x_i`: `O + l delta + sum_i sum_{j<=a_i} S_ij`.
    pub fn line(w: &WeightData, v: &LVec) -> Self {
        let mut x = Self::o_hat(w).add(&Self::delta(w).scale(v.l));
        for (i, &a) in v.a.iter().enumerate() {
            for j in 1..=a as i64 {
                x = x.add(&Self::simple(w, i + 1, j));
            }
        }
        x
    }

    /// Uniserial at branch `i` with top `j` and length `len`.
    pub fn uniserial(w: &WeightData, i: usize, top: i64, len: u32) -> Self {
        let mut x = Self::zero(w);
        for t in 0..len as i64 {
            x = x.add(&Self::simple(w, i, top - t));
        }
        x
    }

    /// Torsion of length `len` at an ordinary point of degree `d`.
    pub fn ordinary(w: &WeightData, d: u32, len: u32) -> Self {
        Self::delta(w).scale(d as i64 * len as i64)
    }

    /// Coordinates `(A, B, s)` with `x = A O + B delta + sum s S`.
    fn split(&self) -> (i64, i64) {
        (self.o + self.oc, self.oc)
    }

    pub fn rank(&self) -> i64 {
        self.o + self.oc
    }

    pub fn deg(&self, w: &WeightData) -> i64 {
        let p = w.lcm();
        let mut d = self.oc * p;
        for i in 1..=w.t() {
            let off = w.offset(i);
            let pi = w.weight(i) as i64;
            for k in 0..(pi - 1) as usize {
                d += self.s[off + k] * (p / pi);
            }
        }
        d
    }

    pub fn euler(&self, w: &WeightData, y: &Self) -> i64 {
        let (ax, bx) = self.split();
        let (ay, by) = y.split();
        let mut e = ax * ay + ax * by - bx * ay;
        for i in 1..=w.t() {
            let off = w.offset(i);
            let pi = w.weight(i) as usize;
            if pi < 2 {
                continue;
            }
            // <S_i1, O> = -1
            e -= self.s[off] * ay;
            for j in 0..pi - 1 {
                e += self.s[off + j] * y.s[off + j];
                if j + 1 < pi - 1 {
                    // <S_{i,j+1}, S_{ij}> = -1
                    e -= self.s[off + j + 1] * y.s[off + j];
                }
            }
        }
        e
    }

    pub fn render(&self, w: &WeightData) -> String {
        let (a, b) = self.split();
        let mut out = format!("{a}O + {b}d");
        for i in 1..=w.t() {
            let off = w.offset(i);
            for j in 1..w.weight(i) as usize {
                let c = self.s[off + j - 1];
                if c != 0 {
                    out += &format!(" + {c}a{i}{j}");
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundfield::Gf;

    fn wd(p: &[u32]) -> WeightData {
        WeightData::new(&Gf::new(3).unwrap(), p).unwrap()
    }

    #[test]
    fn table() {
        let w = wd(&[2, 3]);
        let o = K0Class::o_hat(&w);
        let d = K0Class::delta(&w);
        assert_eq!(o.euler(&w, &o), 1);
        assert_eq!(o.euler(&w, &d), 1);
        assert_eq!(d.euler(&w, &o), -1);
        assert_eq!(d.euler(&w, &d), 0);
        for i in 1..=2 {
            let p = w.weight(i) as i64;
            for j in 0..p {
                let s = K0Class::simple(&w, i, j);
                assert_eq!(s.euler(&w, &d), 0);
                assert_eq!(d.euler(&w, &s), 0);
                assert_eq!(o.euler(&w, &s), (j == 0) as i64);
                assert_eq!(s.euler(&w, &o), -((j == 1) as i64));
                for j2 in 0..p {
                    let s2 = K0Class::simple(&w, i, j2);
                    let expect = (j == j2) as i64 - ((j - j2 - 1).rem_euclid(p) == 0) as i64;
                    assert_eq!(s.euler(&w, &s2), expect, "i={i} j={j} j2={j2}");
                }
            }
        }
    }

    #[test]
    fn classes() {
        let w = wd(&[2, 3]);
        assert_eq!(K0Class::uniserial(&w, 2, 0, 3), K0Class::delta(&w));
        assert_eq!(
            K0Class::line(&w, &LVec::c(&w, 1)),
            K0Class::o_hat(&w).add(&K0Class::delta(&w))
        );
        // S_{i,0}^{(p-1)} = delta - alpha_{i1}
        assert_eq!(
            K0Class::uniserial(&w, 2, 0, 2),
            K0Class::delta(&w).sub(&K0Class::simple(&w, 2, 1))
        );
        assert_eq!(K0Class::delta(&w).deg(&w), 6);
        assert_eq!(K0Class::o_hat(&w).rank(), 1);
        let w22 = wd(&[2, 2]);
        assert_eq!(K0Class::simple(&w22, 1, 1).deg(&w22), 1);
    }

    #[test]
    fn lvec_normal_form() {
        let w = wd(&[2, 3]);
        let x1 = LVec::x(&w, 1);
        assert_eq!(x1.add(&w, &x1), LVec::c(&w, 1));
        let v = LVec::normalize(&w, 0, &[-1, 4]);
        assert_eq!(v, LVec { l: 0, a: vec![1, 1] });
        assert_eq!(v.deg(&w), 3 + 2);
        for d in -7..7 {
            for v in LVec::of_degree(&w, d) {
                assert_eq!(v.deg(&w), d);
            }
        }
    }
}
