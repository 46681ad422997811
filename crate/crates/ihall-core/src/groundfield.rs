//! Finite fields, polynomials over them, and closed points of the line.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::qfield::check_ground;

/// Element of a table-backed finite field, as an index `0..size`.
pub type FqElem = u16;

/// Largest field size for which tables are built.
pub const FIELD_CAP: u32 = 256;

/// A finite field with full addition and multiplication tables.
///
/// Element `0` is zero and `1` is one. Elements encode coefficient vectors
/// over the base field in base `base_size`, lowest degree first.
#[derive(Clone, Debug)]
pub struct Gf {
    size: u32,
    char_p: u32,
    add: Vec<FqElem>,
    mul: Vec<FqElem>,
    neg: Vec<FqElem>,
    inv: Vec<FqElem>,
    modulus: Vec<FqElem>,
}

impl PartialEq for Gf {
    fn eq(&self, o: &Self) -> bool {
        self.size == o.size && self.modulus == o.modulus
    }
}

impl Gf {
    /// `F_q` for a prime power `q`.
    pub fn new(q: u32) -> Result<Gf> {
        let (p, k) = prime_power(q).ok_or(Error::BadGround(q))?;
        let prime = Gf::prime(p);
        if k == 1 {
            Ok(prime)
        } else {
            prime.extension(k)
        }
    }

    /// `F_q` restricted to the non-square sizes usable as a ground field.
    pub fn ground(q: u32) -> Result<Gf> {
        check_ground(q)?;
        Gf::new(q)
    }

    fn prime(p: u32) -> Gf {
        let n = p as usize;
        let mut add = vec![0; n * n];
        let mut mul = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                add[a * n + b] = ((a + b) % n) as FqElem;
                mul[a * n + b] = ((a * b) % n) as FqElem;
            }
        }
        Gf::finish(p, p, add, mul, vec![0, 1])
    }

    fn finish(size: u32, char_p: u32, add: Vec<FqElem>, mul: Vec<FqElem>, modulus: Vec<FqElem>) -> Gf {
        let n = size as usize;
        let mut neg = vec![0; n];
        let mut inv = vec![0; n];
        for a in 0..n {
            for b in 0..n {
                if add[a * n + b] == 0 {
                    neg[a] = b as FqElem;
                }
                if mul[a * n + b] == 1 {
                    inv[a] = b as FqElem;
                }
            }
        }
        Gf { size, char_p, add, mul, neg, inv, modulus }
    }

    /// `F_{size^d}` as `self[z]/(m)` with `m` the lexicographically least
    /// monic irreducible of degree `d`.
    pub fn extension(&self, d: u32) -> Result<Gf> {
        let big = (self.size as u64).pow(d);
        if big > FIELD_CAP as u64 {
            return Err(Error::CapExceeded(alloc::format!("field of size {big}")));
        }
        if d == 1 {
            return Ok(self.clone());
        }
        let m = self
            .monic_polys(d as usize)
            .find(|f| self.is_irreducible(f))
            .expect("irreducibles exist in every degree");
        let n = big as usize;
        let b = self.size as usize;
        let digits = |mut x: usize| {
            let mut v = vec![0 as FqElem; d as usize];
            for c in v.iter_mut() {
                *c = (x % b) as FqElem;
                x /= b;
            }
            v
        };
        let encode = |v: &[FqElem]| v.iter().rev().fold(0usize, |acc, &c| acc * b + c as usize);
        let mut add = vec![0; n * n];
        let mut mul = vec![0; n * n];
        for x in 0..n {
            let dx = digits(x);
            for y in 0..n {
                let dy = digits(y);
                let s: Vec<FqElem> = dx.iter().zip(&dy).map(|(&a, &c)| self.add(a, c)).collect();
                add[x * n + y] = encode(&s) as FqElem;
                let prod = self.poly_rem(&self.poly_mul(&dx, &dy), &m);
                let mut pr = prod.clone();
                pr.resize(d as usize, 0);
                mul[x * n + y] = encode(&pr) as FqElem;
            }
        }
        Ok(Gf::finish(big as u32, self.char_p, add, mul, m))
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn characteristic(&self) -> u32 {
        self.char_p
    }

    /// Defining polynomial over the field this one was built from.
    pub fn modulus(&self) -> &[FqElem] {
        &self.modulus
    }

    pub fn elements(&self) -> impl Iterator<Item = FqElem> {
        0..self.size as FqElem
    }

    #[inline]
    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add[a as usize * self.size as usize + b as usize]
    }

    #[inline]
    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        self.mul[a as usize * self.size as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: FqElem) -> FqElem {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }

    /// Multiplicative inverse; panics on zero.
    #[inline]
    pub fn inv(&self, a: FqElem) -> FqElem {
        assert!(a != 0, "inverse of zero in F_q");
        self.inv[a as usize]
    }

    // ---- polynomials, coefficient vectors lowest degree first ----

    pub fn poly_trim(&self, mut f: Vec<FqElem>) -> Vec<FqElem> {
        while f.last() == Some(&0) {
            f.pop();
        }
        f
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn poly_deg(&self, f: &[FqElem]) -> Option<usize> {
        f.iter().rposition(|&c| c != 0)
    }

    pub fn poly_add(&self, f: &[FqElem], g: &[FqElem]) -> Vec<FqElem> {
        let n = f.len().max(g.len());
        let r = (0..n)
            .map(|i| self.add(*f.get(i).unwrap_or(&0), *g.get(i).unwrap_or(&0)))
            .collect();
        self.poly_trim(r)
    }

    pub fn poly_sub(&self, f: &[FqElem], g: &[FqElem]) -> Vec<FqElem> {
        let ng: Vec<FqElem> = g.iter().map(|&c| self.neg(c)).collect();
        self.poly_add(f, &ng)
    }

    pub fn poly_scale(&self, f: &[FqElem], c: FqElem) -> Vec<FqElem> {
        self.poly_trim(f.iter().map(|&a| self.mul(a, c)).collect())
    }

    pub fn poly_mul(&self, f: &[FqElem], g: &[FqElem]) -> Vec<FqElem> {
        if f.is_empty() || g.is_empty() {
            return Vec::new();
        }
        let mut r = vec![0; f.len() + g.len() - 1];
        for (i, &a) in f.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in g.iter().enumerate() {
                r[i + j] = self.add(r[i + j], self.mul(a, b));
            }
        }
        self.poly_trim(r)
    }

    pub fn poly_pow(&self, f: &[FqElem], e: u32) -> Vec<FqElem> {
        let mut acc = vec![1];
        for _ in 0..e {
            acc = self.poly_mul(&acc, f);
        }
        acc
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn poly_divrem(&self, f: &[FqElem], g: &[FqElem]) -> (Vec<FqElem>, Vec<FqElem>) {
        let dg = self.poly_deg(g).expect("polynomial division by zero");
        let lead_inv = self.inv(g[dg]);
        let mut r = self.poly_trim(f.to_vec());
        let mut quo = vec![0; r.len().saturating_sub(dg).max(1)];
        while let Some(dr) = self.poly_deg(&r) {
            if dr < dg {
                break;
            }
            let c = self.mul(r[dr], lead_inv);
            quo[dr - dg] = c;
            for (j, &b) in g.iter().enumerate().take(dg + 1) {
                let k = dr - dg + j;
                r[k] = self.sub(r[k], self.mul(c, b));
            }
            r = self.poly_trim(r);
        }
        (self.poly_trim(quo), r)
    }

    pub fn poly_rem(&self, f: &[FqElem], g: &[FqElem]) -> Vec<FqElem> {
        self.poly_divrem(f, g).1
    }

    pub fn poly_monic(&self, f: &[FqElem]) -> Vec<FqElem> {
        match self.poly_deg(f) {
            None => Vec::new(),
            Some(d) => self.poly_scale(f, self.inv(f[d])),
        }
    }

    pub fn poly_gcd(&self, f: &[FqElem], g: &[FqElem]) -> Vec<FqElem> {
        let (mut a, mut b) = (self.poly_trim(f.to_vec()), self.poly_trim(g.to_vec()));
        while !b.is_empty() {
            let r = self.poly_rem(&a, &b);
            a = b;
            b = r;
        }
        self.poly_monic(&a)
    }

    pub fn poly_eval(&self, f: &[FqElem], x: FqElem) -> FqElem {
        f.iter().rev().fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }

    /// Monic polynomials of degree `d` in lexicographic order, comparing
    /// coefficients from the top degree down.
    pub fn monic_polys(&self, d: usize) -> impl Iterator<Item = Vec<FqElem>> + '_ {
        let b = self.size as usize;
        let count = b.pow(d as u32);
        (0..count).map(move |mut x| {
            let mut v = vec![0 as FqElem; d + 1];
            for k in 0..d {
                v[k] = (x % b) as FqElem;
                x /= b;
            }
            v[d] = 1;
            v
        })
    }

    pub fn is_irreducible(&self, f: &[FqElem]) -> bool {
        let d = match self.poly_deg(f) {
            None | Some(0) => return false,
            Some(d) => d,
        };
        for e in 1..=d / 2 {
            for g in self.monic_polys(e) {
                if self.poly_rem(f, &g).is_empty() {
                    return false;
                }
            }
        }
        true
    }

    /// Monic irreducibles of degree `d`, lexicographic order.
    pub fn irreducibles(&self, d: usize) -> Vec<Vec<FqElem>> {
        self.monic_polys(d).filter(|f| self.is_irreducible(f)).collect()
    }

    /// Factorization of a nonzero polynomial into monic irreducibles with
    /// multiplicities, by trial division. The leading constant is dropped.
    pub fn factor(&self, f: &[FqElem]) -> Vec<(Vec<FqElem>, u32)> {
        let mut rest = self.poly_monic(f);
        let mut out = Vec::new();
        let mut e = 1;
        while self.poly_deg(&rest).unwrap_or(0) > 0 {
            if 2 * e > self.poly_deg(&rest).unwrap() {
                out.push((rest.clone(), 1));
                break;
            }
            for g in self.irreducibles(e) {
                let mut m = 0;
                loop {
                    let (quo, r) = self.poly_divrem(&rest, &g);
                    if !r.is_empty() {
                        break;
                    }
                    rest = quo;
                    m += 1;
                }
                if m > 0 {
                    out.push((g, m));
                }
            }
            e += 1;
        }
        out.sort();
        out
    }
}

fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|p| q.is_multiple_of(*p))?;
    let (mut m, mut k) = (q, 0);
    while m % p == 0 {
        m /= p;
        k += 1;
    }
    (m == 1).then_some((p, k))
}

/// A closed point of the underlying projective line.
///
/// Exceptional points are numbered from 1 as in the weight data. Ordinary
/// points carry a monic irreducible in the affine coordinate `z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointId {
    Exc(usize),
    Ord(Vec<FqElem>),
}

impl PointId {
    pub fn degree(&self) -> u32 {
        match self {
            PointId::Exc(_) => 1,
            PointId::Ord(f) => (f.len() - 1) as u32,
        }
    }
}

/// Parameters of the marked points. `None` stands for the point at infinity.
pub type Lambda = Option<FqElem>;

/// Default normalized parameters: infinity, 0, 1, then the remaining
/// elements of `F_q` in index order.
pub fn default_lambdas(gf: &Gf, t: usize) -> Result<Vec<Lambda>> {
    if t > gf.size() as usize + 1 {
        return Err(Error::BadWeights(alloc::format!("{t} marked points need q >= {}", t - 1)));
    }
    let mut v = vec![None];
    v.extend((0..t.saturating_sub(1)).map(|k| Some(k as FqElem)));
    v.truncate(t);
    Ok(v)
}

/// Factors `sum_k c_k y1^{m-k} y2^k` into closed points.
///
/// The affine coordinate is `z = y2/y1`; `y1` vanishes at infinity and the
/// marked point with parameter `a` is the zero of `y2 - a y1`.
pub fn factor_binary_form(gf: &Gf, lambdas: &[Lambda], coeffs: &[FqElem]) -> Result<Vec<(PointId, u32)>> {
    let m = coeffs.len().checked_sub(1).ok_or(Error::ZeroForm)?;
    let affine = gf.poly_trim(coeffs.to_vec());
    let deg = gf.poly_deg(&affine).ok_or(Error::ZeroForm)?;
    let mut out: Vec<(PointId, u32)> = Vec::new();
    let mult_inf = (m - deg) as u32;
    if mult_inf > 0 {
        let i = lambdas.iter().position(|l| l.is_none());
        match i {
            Some(i) => out.push((PointId::Exc(i + 1), mult_inf)),
            None => return Err(Error::BadWeights("infinity must be a marked point".into())),
        }
    }
    for (f, e) in gf.factor(&affine) {
        let id = if f.len() == 2 {
            let root = gf.neg(f[0]);
            match lambdas.iter().position(|l| *l == Some(root)) {
                Some(i) => PointId::Exc(i + 1),
                None => PointId::Ord(f),
            }
        } else {
            PointId::Ord(f)
        };
        out.push((id, e));
    }
    out.sort();
    Ok(out)
}

/// Closed points of degree `d` that are not marked, in the order of their
/// polynomials.
pub fn ordinary_points(gf: &Gf, lambdas: &[Lambda], d: usize) -> Vec<PointId> {
    gf.irreducibles(d)
        .into_iter()
        .filter(|f| d != 1 || !lambdas.contains(&Some(gf.neg(f[0]))))
        .map(PointId::Ord)
        .collect()
}

/// Evaluation of a form at the point `[y1 : y2]`.
pub fn eval_binary_form(gf: &Gf, coeffs: &[FqElem], y1: FqElem, y2: FqElem) -> FqElem {
    let m = coeffs.len() - 1;
    let mut acc = 0;
    for (k, &c) in coeffs.iter().enumerate() {
        let mut t = c;
        for _ in 0..(m - k) {
            t = gf.mul(t, y1);
        }
        for _ in 0..k {
            t = gf.mul(t, y2);
        }
        acc = gf.add(acc, t);
    }
    acc
}

/// Brute-force count of coprime pairs of binary forms of degrees `(a, b)`
/// in `(X, Y)`. With `exclude_x`, pairs where `X` divides the first form are
/// dropped. Zero forms are never counted.
pub fn count_coprime_pairs(gf: &Gf, a: usize, b: usize, exclude_x: bool) -> Result<u64> {
    if a + b > 6 {
        return Err(Error::CapExceeded(alloc::format!("coprime count a+b = {}", a + b)));
    }
    let forms = |d: usize| -> Vec<Vec<FqElem>> {
        let q = gf.size() as usize;
        (1..q.pow(d as u32 + 1))
            .map(|mut x| {
                let mut v = vec![0 as FqElem; d + 1];
                for c in v.iter_mut() {
                    *c = (x % q) as FqElem;
                    x /= q;
                }
                v
            })
            .collect()
    };
    // coefficient k multiplies X^{d-k} Y^k; X divides the form iff the
    // coefficient of Y^d vanishes; the affine chart X = 1 sees the rest.
    let fj = forms(a);
    let fl = forms(b);
    let mut count = 0;
    for j in &fj {
        let xj = j[a] == 0;
        if exclude_x && xj {
            continue;
        }
        for l in &fl {
            if xj && l[b] == 0 {
                continue;
            }
            if gf.poly_deg(&gf.poly_gcd(j, l)).unwrap_or(0) == 0 {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small() {
        for q in [2u32, 3, 4, 5, 7, 8, 9] {
            let gf = Gf::new(q).unwrap();
            for a in gf.elements() {
                assert_eq!(gf.add(a, gf.neg(a)), 0);
                if a != 0 {
                    assert_eq!(gf.mul(a, gf.inv(a)), 1);
                }
                for b in gf.elements() {
                    for c in gf.elements() {
                        assert_eq!(gf.mul(a, gf.add(b, c)), gf.add(gf.mul(a, b), gf.mul(a, c)));
                        assert_eq!(gf.mul(a, gf.mul(b, c)), gf.mul(gf.mul(a, b), c));
                    }
                }
            }
        }
    }

    #[test]
    fn irreducible_counts() {
        // number of monic irreducibles of degree d: (1/d) sum mu(d/e) q^e
        let gf = Gf::new(2).unwrap();
        assert_eq!(gf.irreducibles(1).len(), 2);
        assert_eq!(gf.irreducibles(2).len(), 1);
        assert_eq!(gf.irreducibles(3).len(), 2);
        assert_eq!(gf.irreducibles(4).len(), 3);
        let gf3 = Gf::new(3).unwrap();
        assert_eq!(gf3.irreducibles(2).len(), 3);
    }

    #[test]
    fn degree_one_points() {
        for q in [2u32, 3, 5] {
            let gf = Gf::new(q).unwrap();
            let lam = default_lambdas(&gf, 2).unwrap();
            let n = 2 + ordinary_points(&gf, &lam, 1).len();
            assert_eq!(n as u32, q + 1);
        }
    }

    #[test]
    fn factor_examples() {
        let gf = Gf::new(2).unwrap();
        let lam = default_lambdas(&gf, 2).unwrap();
        // y1*y2
        let f = factor_binary_form(&gf, &lam, &[0, 1, 0]).unwrap();
        assert_eq!(f, vec![(PointId::Exc(1), 1), (PointId::Exc(2), 1)]);
        // y1^2 + y1 y2 + y2^2
        let f = factor_binary_form(&gf, &lam, &[1, 1, 1]).unwrap();
        assert_eq!(f, vec![(PointId::Ord(vec![1, 1, 1]), 1)]);
        let gf3 = Gf::new(3).unwrap();
        let lam3 = default_lambdas(&gf3, 2).unwrap();
        let f = factor_binary_form(&gf3, &lam3, &[0, 0, 0, 1]).unwrap();
        assert_eq!(f, vec![(PointId::Exc(2), 3)]);
        let f = factor_binary_form(&gf3, &lam3, &[1, 0, 0, 0]).unwrap();
        assert_eq!(f, vec![(PointId::Exc(1), 3)]);
        assert_eq!(factor_binary_form(&gf3, &lam3, &[0, 0]), Err(Error::ZeroForm));
    }

    #[test]
    fn factor_vanishing_locus() {
        // each factor vanishes exactly where the form does
        let gf = Gf::new(3).unwrap();
        let lam = default_lambdas(&gf, 3).unwrap();
        let form = [2, 1, 0, 1]; // 2 y1^3 + y1^2 y2 + y2^3
        let fac = factor_binary_form(&gf, &lam, &form).unwrap();
        let total: u32 = fac.iter().map(|(p, e)| p.degree() * e).sum();
        assert_eq!(total, 3);
        for z in gf.elements() {
            let zero = eval_binary_form(&gf, &form, 1, z) == 0;
            let listed = fac.iter().any(|(p, _)| match p {
                PointId::Exc(i) => lam[i - 1] == Some(z),
                PointId::Ord(f) => f.len() == 2 && gf.poly_eval(f, z) == 0,
            });
            assert_eq!(zero, listed);
        }
    }

    #[test]
    fn extension_field() {
        let gf = Gf::new(2).unwrap();
        let f4 = gf.extension(2).unwrap();
        assert_eq!(f4.size(), 4);
        assert_eq!(f4.modulus(), &[1, 1, 1]);
        for a in 1..4 {
            assert_eq!(f4.mul(a, f4.inv(a)), 1);
        }
    }
}
