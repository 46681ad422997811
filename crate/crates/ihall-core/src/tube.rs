//! Nilpotent representations of the cyclic quiver `C_n` over `F_Q`.
//!
//! Vertices are `Z/n` with arrows `j -> j-1`. `S_j^{(a)}` has top `S_j` and
//! composition factors `S_j, S_{j-1}, ...`. The Jordan quiver is `n = 1`;
//! a homogeneous tube of degree `d` is `n = 1` over `F_{q^d}`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::groundfield::{FqElem, Gf};
use crate::linalg::{for_each_combination, for_each_projective, subspaces, Mat};

/// Multiset of uniserials `(top, length)`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TorsionClass(pub Vec<(u32, u32)>);

impl TorsionClass {
    pub fn new(n: u32, parts: &[(i64, u32)]) -> Self {
        let mut v: Vec<(u32, u32)> = parts
            .iter()
            .filter(|p| p.1 > 0)
            .map(|&(j, a)| (j.rem_euclid(n as i64) as u32, a))
            .collect();
        v.sort();
        TorsionClass(v)
    }

    pub fn zero() -> Self {
        TorsionClass(Vec::new())
    }

    pub fn uniserial(n: u32, top: i64, len: u32) -> Self {
        Self::new(n, &[(top, len)])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn length(&self) -> u32 {
        self.0.iter().map(|p| p.1).sum()
    }

    /// Number of indecomposable summands.
    pub fn ell(&self) -> usize {
        self.0.len()
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        v.sort();
        TorsionClass(v)
    }

    pub fn max_len(&self) -> u32 {
        self.0.iter().map(|p| p.1).max().unwrap_or(0)
    }
}

/// Concrete realization: basis vectors labelled by vertex and the arrow
/// operator `x` sending vertex `v` to `v - 1`.
#[derive(Clone, Debug)]
pub struct Model {
    pub vertex: Vec<u32>,
    pub x: Mat,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.vertex.len()
    }

    pub fn at(&self, v: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.vertex[i] == v).collect()
    }
}

pub fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn go(n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            cur.push(k);
            go(n - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// `|GL_m(F_Q)|`.
pub fn gl_order(qq: u64, m: u32) -> BigInt {
    let qm = BigInt::from(qq).pow(m);
    (0..m).fold(BigInt::one(), |acc, k| acc * (&qm - BigInt::from(qq).pow(k)))
}

type ExtCache = RefCell<BTreeMap<(TorsionClass, TorsionClass), Rc<BTreeMap<TorsionClass, u64>>>>;

pub struct Tube {
    pub n: u32,
    pub gf: Gf,
    ext_cache: ExtCache,
}

impl Tube {
    pub fn new(n: u32, gf: Gf) -> Self {
        assert!(n >= 1);
        Tube { n, gf, ext_cache: RefCell::new(BTreeMap::new()) }
    }

    pub fn field_size(&self) -> u64 {
        self.gf.size() as u64
    }

    fn md(&self, x: i64) -> u32 {
        x.rem_euclid(self.n as i64) as u32
    }

    pub fn dimvec(&self, m: &TorsionClass) -> Vec<u32> {
        let mut d = vec![0; self.n as usize];
        for &(top, len) in &m.0 {
            for t in 0..len as i64 {
                d[self.md(top as i64 - t) as usize] += 1;
            }
        }
        d
    }

    /// Euler form of the tube over the residue field.
    pub fn euler(&self, m: &TorsionClass, k: &TorsionClass) -> i64 {
        let (a, b) = (self.dimvec(m), self.dimvec(k));
        let n = self.n as usize;
        (0..n)
            .map(|v| a[v] as i64 * b[v] as i64 - a[v] as i64 * b[(v + n - 1) % n] as i64)
            .sum()
    }

    fn hom_uniserial(&self, src: (u32, u32), tgt: (u32, u32)) -> Vec<u32> {
        let (jp, b) = src;
        let (j, a) = tgt;
        let want = self.md(jp as i64 - j as i64 + a as i64);
        (1..=a.min(b)).filter(|&c| self.md(c as i64) == want).collect()
    }

    /// Closed-form `dim Hom(m, k)` over the residue field.
    pub fn hom_dim(&self, m: &TorsionClass, k: &TorsionClass) -> u32 {
        let mut d = 0;
        for &s in &m.0 {
            for &t in &k.0 {
                d += self.hom_uniserial(s, t).len() as u32;
            }
        }
        d
    }

    pub fn ext_dim(&self, m: &TorsionClass, k: &TorsionClass) -> Result<u32> {
        let e = self.hom_dim(m, k) as i64 - self.euler(m, k);
        if e < 0 {
            return Err(Error::Inconsistent(format!("negative ext dimension for {m:?}, {k:?}")));
        }
        Ok(e as u32)
    }

    /// `|Aut m|` from `dim End` and the multiplicities of the summands.
    pub fn aut_order(&self, m: &TorsionClass) -> BigInt {
        let qq = self.field_size();
        let mut mult: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for &p in &m.0 {
            *mult.entry(p).or_default() += 1;
        }
        let semis: u32 = mult.values().map(|&x| x * x).sum();
        let end = self.hom_dim(m, m);
        let mut acc = BigInt::from(qq).pow(end - semis);
        for &k in mult.values() {
            acc *= gl_order(qq, k);
        }
        acc
    }

    pub fn indecomposables(&self, max_len: u32) -> Vec<(u32, u32)> {
        let mut v = Vec::new();
        for len in 1..=max_len {
            for top in 0..self.n {
                v.push((top, len));
            }
        }
        v
    }

    /// All modules with the given dimension vector.
    pub fn modules_with_dimvec(&self, dv: &[u32]) -> Vec<TorsionClass> {
        let total: u32 = dv.iter().sum();
        let inds = self.indecomposables(total);
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.fill(&inds, 0, dv.to_vec(), &mut cur, &mut out);
        out
    }

    fn fill(&self, inds: &[(u32, u32)], start: usize, rest: Vec<u32>, cur: &mut Vec<(u32, u32)>, out: &mut Vec<TorsionClass>) {
        if rest.iter().all(|&x| x == 0) {
            out.push(TorsionClass::new(self.n, &cur.iter().map(|&(a, b)| (a as i64, b)).collect::<Vec<_>>()));
            return;
        }
        for k in start..inds.len() {
            let d = self.dimvec(&TorsionClass(vec![inds[k]]));
            if d.iter().zip(&rest).all(|(a, b)| a <= b) {
                let r: Vec<u32> = rest.iter().zip(&d).map(|(a, b)| a - b).collect();
                cur.push(inds[k]);
                self.fill(inds, k, r, cur, out);
                cur.pop();
            }
        }
    }

    pub fn modules_of_length(&self, len: u32) -> Vec<TorsionClass> {
        let mut out = Vec::new();
        let inds = self.indecomposables(len);
        fn go(t: &Tube, inds: &[(u32, u32)], start: usize, rest: u32, cur: &mut Vec<(u32, u32)>, out: &mut Vec<TorsionClass>) {
            if rest == 0 {
                out.push(TorsionClass::new(t.n, &cur.iter().map(|&(a, b)| (a as i64, b)).collect::<Vec<_>>()));
                return;
            }
            for k in start..inds.len() {
                if inds[k].1 <= rest {
                    cur.push(inds[k]);
                    go(t, inds, k, rest - inds[k].1, cur, out);
                    cur.pop();
                }
            }
        }
        go(self, &inds, 0, len, &mut Vec::new(), &mut out);
        out
    }

    pub fn model(&self, m: &TorsionClass) -> Model {
        let dim = m.length() as usize;
        let mut vertex = Vec::with_capacity(dim);
        let mut x = Mat::zeros(dim, dim);
        let mut base = 0;
        for &(top, len) in &m.0 {
            for t in 0..len as usize {
                vertex.push(self.md(top as i64 - t as i64));
                if t + 1 < len as usize {
                    x.set(base + t + 1, base + t, 1);
                }
            }
            base += len as usize;
        }
        Model { vertex, x }
    }

    /// Explicit basis of `Hom(m, k)` as matrices between the standard models.
    pub fn hom_basis(&self, m: &TorsionClass, k: &TorsionClass) -> Vec<Mat> {
        let (dm, dk) = (m.length() as usize, k.length() as usize);
        let mut out = Vec::new();
        let mut sb = 0;
        for &s in &m.0 {
            let mut tb = 0;
            for &t in &k.0 {
                for c in self.hom_uniserial(s, t) {
                    let mut f = Mat::zeros(dk, dm);
                    for i in 0..c as usize {
                        f.set(tb + t.1 as usize - c as usize + i, sb + i, 1);
                    }
                    out.push(f);
                }
                tb += t.1 as usize;
            }
            sb += s.1 as usize;
        }
        out
    }

    /// Classification by ranks of paths: `r(v, m)` is the rank of `x^m` on
    /// the part of the module at vertex `v`.
    fn class_from_ranks(&self, r: impl Fn(u32, u32) -> usize, maxlen: u32) -> TorsionClass {
        // ranks only decrease in m, so the table stops at the first zero row
        let mut tab: Vec<Vec<usize>> = Vec::new();
        for m in 0..=maxlen + 1 {
            let row: Vec<usize> = (0..self.n).map(|v| r(v, m)).collect();
            let done = row.iter().all(|&x| x == 0);
            tab.push(row);
            if done {
                break;
            }
        }
        let rk = |v: u32, m: u32| tab.get(m as usize).map_or(0, |row| row[v as usize]);
        let c = |v: u32, m: u32| rk(v, m) - rk(v, m + 1);
        let mut parts = Vec::new();
        for m in 0..maxlen {
            for v in 0..self.n {
                let k = c(v, m) - c((v + 1) % self.n, m + 1);
                for _ in 0..k {
                    parts.push((v as i64, m + 1));
                }
            }
        }
        TorsionClass::new(self.n, &parts)
    }

    /// Isomorphism class of a graded subspace (given per vertex by basis
    /// columns in ambient coordinates) invariant under `x`.
    pub fn classify_sub(&self, x: &Mat, sub: &[Mat]) -> TorsionClass {
        let total: usize = sub.iter().map(|s| s.cols).sum();
        let pows = powers(&self.gf, x, total);
        self.class_from_ranks(
            |v, m| {
                let s = &sub[v as usize];
                match pows.get(m as usize) {
                    Some(p) if s.cols > 0 => p.mul(&self.gf, s).rank(&self.gf),
                    _ => 0,
                }
            },
            total as u32,
        )
    }

    /// Isomorphism class of the quotient of a model by a graded invariant
    /// subspace `img` (given per vertex).
    pub fn classify_quotient(&self, model: &Model, img: &[Mat]) -> TorsionClass {
        let dim = model.dim();
        let sub: usize = img.iter().map(|s| s.cols).sum();
        let total = dim - sub;
        let pows = powers(&self.gf, &model.x, total);
        let n = self.n as usize;
        let mut cols_at: Vec<Mat> = Vec::with_capacity(n);
        for v in 0..self.n {
            let idx = model.at(v);
            let mut m = Mat::zeros(dim, idx.len());
            for (c, &i) in idx.iter().enumerate() {
                m.set(i, c, 1);
            }
            cols_at.push(m);
        }
        self.class_from_ranks(
            |v, m| {
                let Some(p) = pows.get(m as usize) else { return 0 };
                let w = ((v as i64 - m as i64).rem_euclid(n as i64)) as usize;
                let i = &img[w];
                let moved = p.mul(&self.gf, &cols_at[v as usize]);
                moved.hstack(i).rank(&self.gf) - i.rank(&self.gf)
            },
            total as u32,
        )
    }

    /// Per-vertex kernel and image bases of an intertwiner `f: m -> k`.
    pub fn ker_img(&self, src: &Model, tgt: &Model, f: &Mat) -> (Vec<Mat>, Vec<Mat>) {
        let mut kers = Vec::new();
        let mut imgs = Vec::new();
        for v in 0..self.n {
            let si = src.at(v);
            let ti = tgt.at(v);
            let block = f.select_cols(&si).select_rows(&ti);
            let ns = block.nullspace(&self.gf);
            let mut k = Mat::zeros(src.dim(), ns.len());
            for (c, vec) in ns.iter().enumerate() {
                for (r, &i) in si.iter().enumerate() {
                    k.set(i, c, vec[r]);
                }
            }
            kers.push(k);
            let ib = f.select_cols(&si).col_basis(&self.gf);
            imgs.push(ib);
        }
        (kers, imgs)
    }

    /// Counts `f in Hom(a, b)` by `(ker f, coker f)`.
    pub fn map_classes(&self, a: &TorsionClass, b: &TorsionClass) -> BTreeMap<(TorsionClass, TorsionClass), u64> {
        let basis = self.hom_basis(a, b);
        let (ma, mb) = (self.model(a), self.model(b));
        let mut out = BTreeMap::new();
        let mut f = Mat::zeros(mb.dim(), ma.dim());
        // kernel and cokernel do not change under scaling
        for_each_projective(&self.gf, basis.len(), |c, mult| {
            f.data.iter_mut().for_each(|x| *x = 0);
            for (k, &ck) in c.iter().enumerate() {
                f.axpy(&self.gf, ck, &basis[k]);
            }
            let (kers, imgs) = self.ker_img(&ma, &mb, &f);
            let ker = self.classify_sub(&ma.x, &kers);
            let cok = self.classify_quotient(&mb, &imgs);
            *out.entry((ker, cok)).or_insert(0) += mult;
        });
        out
    }

    /// `|Ext^1(n, l)_m|` for every middle term `m`, by enumerating a
    /// complement of the coboundaries.
    pub fn ext_middles(&self, nn: &TorsionClass, l: &TorsionClass) -> BTreeMap<TorsionClass, u64> {
        let key = (nn.clone(), l.clone());
        if let Some(r) = self.ext_cache.borrow().get(&key) {
            return (**r).clone();
        }
        let r = self.compute_ext_middles(nn, l);
        self.ext_cache.borrow_mut().insert(key, Rc::new(r.clone()));
        r
    }

    fn compute_ext_middles(&self, nn: &TorsionClass, l: &TorsionClass) -> BTreeMap<TorsionClass, u64> {
        let (mn, ml) = (self.model(nn), self.model(l));
        let (dn, dl) = (mn.dim(), ml.dim());
        let nv = self.n;
        // positions of cochains: C0 = (i, j) same vertex, C1 = vertex(i) = vertex(j) - 1
        let mut p0 = Vec::new();
        let mut p1 = Vec::new();
        for i in 0..dl {
            for j in 0..dn {
                if ml.vertex[i] == mn.vertex[j] {
                    p0.push((i, j));
                }
                if ml.vertex[i] == (mn.vertex[j] + nv - 1) % nv {
                    p1.push((i, j));
                }
            }
        }
        let idx1: BTreeMap<(usize, usize), usize> = p1.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let gf = &self.gf;
        let mut delta = Mat::zeros(p1.len(), p0.len());
        for (c, &(i, j)) in p0.iter().enumerate() {
            // x_l E_ij - E_ij x_n
            for r in 0..dl {
                let a = ml.x.get(r, i);
                if a != 0 {
                    let k = idx1[&(r, j)];
                    delta.set(k, c, gf.add(delta.get(k, c), a));
                }
            }
            for s in 0..dn {
                let a = mn.x.get(j, s);
                if a != 0 {
                    let k = idx1[&(i, s)];
                    delta.set(k, c, gf.sub(delta.get(k, c), a));
                }
            }
        }
        let (_, piv) = delta.transpose().rref(gf);
        let comp: Vec<usize> = (0..p1.len()).filter(|k| !piv.contains(k)).collect();
        let dim = dl + dn;
        let mut vertex = ml.vertex.clone();
        vertex.extend_from_slice(&mn.vertex);
        let mut base = Mat::zeros(dim, dim);
        for r in 0..dl {
            for c in 0..dl {
                base.set(r, c, ml.x.get(r, c));
            }
        }
        for r in 0..dn {
            for c in 0..dn {
                base.set(dl + r, dl + c, mn.x.get(r, c));
            }
        }
        let mut out = BTreeMap::new();
        // scaling a class keeps its middle term
        for_each_projective(gf, comp.len(), |c, mult| {
            let mut x = base.clone();
            for (k, &ck) in c.iter().enumerate() {
                let (i, j) = p1[comp[k]];
                x.set(i, dl + j, ck);
            }
            let m = self.classify_model(&Model { vertex: vertex.clone(), x });
            *out.entry(m).or_insert(0) += mult;
        });
        out
    }

    /// Classification of an arbitrary nilpotent model by path ranks.
    pub fn classify_model(&self, m: &Model) -> TorsionClass {
        let dim = m.dim();
        let mut subs = Vec::new();
        for v in 0..self.n {
            let idx = m.at(v);
            let mut s = Mat::zeros(dim, idx.len());
            for (c, &i) in idx.iter().enumerate() {
                s.set(i, c, 1);
            }
            subs.push(s);
        }
        self.classify_sub(&m.x, &subs)
    }

    // ---------------------------------------------------------------
    // Oracle layer: nullspace Hom, fingerprints, submodule enumeration.
    // ---------------------------------------------------------------

    /// Intertwiners `a -> b` between arbitrary models, by nullspace of the
    /// commuting-square constraints.
    pub fn hom_nullspace(&self, a: &Model, b: &Model) -> Vec<Mat> {
        let gf = &self.gf;
        let mut unknowns = Vec::new();
        for i in 0..b.dim() {
            for j in 0..a.dim() {
                if b.vertex[i] == a.vertex[j] {
                    unknowns.push((i, j));
                }
            }
        }
        // constraint entries of x_b F - F x_a, at all (r, s)
        let (db, da) = (b.dim(), a.dim());
        let mut sys = Mat::zeros(db * da, unknowns.len());
        for (u, &(i, j)) in unknowns.iter().enumerate() {
            for r in 0..db {
                let c = b.x.get(r, i);
                if c != 0 {
                    let row = r * da + j;
                    sys.set(row, u, gf.add(sys.get(row, u), c));
                }
            }
            for s in 0..da {
                let c = a.x.get(j, s);
                if c != 0 {
                    let row = i * da + s;
                    sys.set(row, u, gf.sub(sys.get(row, u), c));
                }
            }
        }
        sys.nullspace(gf)
            .into_iter()
            .map(|v| {
                let mut f = Mat::zeros(db, da);
                for (u, &(i, j)) in unknowns.iter().enumerate() {
                    f.set(i, j, v[u]);
                }
                f
            })
            .collect()
    }

    /// Identification by `dim Hom(S_j^{(a)}, m)` for all uniserials.
    pub fn classify_fingerprint(&self, m: &Model) -> TorsionClass {
        let total = m.dim() as u32;
        let mut h: BTreeMap<(u32, u32), i64> = BTreeMap::new();
        for a in 0..=total + 1 {
            for j in 0..self.n {
                let v = if a == 0 {
                    0
                } else {
                    let s = self.model(&TorsionClass(vec![(j, a)]));
                    self.hom_nullspace(&s, m).len() as i64
                };
                h.insert((j, a), v);
            }
        }
        // g(s, a) = #summands with socle s and length >= a
        let g = |s: u32, a: u32| -> i64 {
            let j = self.md(s as i64 + a as i64 - 1);
            h[&(j, a)] - h[&(j, a - 1)]
        };
        let mut parts = Vec::new();
        for a in 1..=total {
            for s in 0..self.n {
                let k = g(s, a) - g(s, a + 1);
                for _ in 0..k {
                    parts.push((s as i64 + a as i64 - 1, a));
                }
            }
        }
        TorsionClass::new(self.n, &parts)
    }

    /// Searches for an invertible intertwiner between two models.
    pub fn certify_iso(&self, a: &Model, b: &Model) -> bool {
        if a.dim() != b.dim() || a.vertex.iter().filter(|&&v| v == 0).count() != b.vertex.iter().filter(|&&v| v == 0).count() {
            return false;
        }
        let basis = self.hom_nullspace(a, b);
        let mut found = false;
        let mut f = Mat::zeros(b.dim(), a.dim());
        for_each_combination(&self.gf, basis.len(), |c| {
            if found {
                return;
            }
            f.data.iter_mut().for_each(|x| *x = 0);
            for (k, &ck) in c.iter().enumerate() {
                f.axpy(&self.gf, ck, &basis[k]);
            }
            if f.rank(&self.gf) == a.dim() {
                found = true;
            }
        });
        found
    }

    /// Brute-force count of invertible endomorphisms.
    pub fn aut_brute(&self, m: &TorsionClass) -> u64 {
        let md = self.model(m);
        let basis = self.hom_nullspace(&md, &md);
        let mut count = 0;
        let mut f = Mat::zeros(md.dim(), md.dim());
        for_each_combination(&self.gf, basis.len(), |c| {
            f.data.iter_mut().for_each(|x| *x = 0);
            for (k, &ck) in c.iter().enumerate() {
                f.axpy(&self.gf, ck, &basis[k]);
            }
            if f.rank(&self.gf) == md.dim() {
                count += 1;
            }
        });
        count
    }

    /// All subrepresentations of `l`, tallied by `(sub, quotient)` class.
    pub fn submodule_table(&self, l: &TorsionClass, certify: bool) -> Result<BTreeMap<(TorsionClass, TorsionClass), u64>> {
        let cap = if self.field_size() == 2 { 8 } else { 6 };
        if l.length() > cap {
            return Err(Error::CapExceeded(format!("submodule enumeration of length {}", l.length())));
        }
        let md = self.model(l);
        let gf = &self.gf;
        let per_vertex: Vec<Vec<usize>> = (0..self.n).map(|v| md.at(v)).collect();
        let options: Vec<Vec<Mat>> = per_vertex
            .iter()
            .map(|idx| {
                let mut all = Vec::new();
                for k in 0..=idx.len() {
                    for s in subspaces(gf, idx.len(), k) {
                        let mut e = Mat::zeros(md.dim(), s.cols);
                        for c in 0..s.cols {
                            for (r, &i) in idx.iter().enumerate() {
                                e.set(i, c, s.get(r, c));
                            }
                        }
                        all.push(e);
                    }
                }
                all
            })
            .collect();
        let mut out = BTreeMap::new();
        let mut choice = vec![0usize; self.n as usize];
        loop {
            let sub: Vec<Mat> = choice.iter().enumerate().map(|(v, &c)| options[v][c].clone()).collect();
            if self.invariant(&md, &sub) {
                let (sm, qm) = self.sub_quot_models(&md, &sub);
                let s = self.classify_fingerprint(&sm);
                let q = self.classify_fingerprint(&qm);
                if certify {
                    let ok = self.certify_iso(&self.model(&s), &sm) && self.certify_iso(&self.model(&q), &qm);
                    if !ok {
                        return Err(Error::Inconsistent("fingerprint collision".into()));
                    }
                }
                *out.entry((s, q)).or_insert(0) += 1;
            }
            let mut k = 0;
            loop {
                if k == choice.len() {
                    return Ok(out);
                }
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }

    fn invariant(&self, md: &Model, sub: &[Mat]) -> bool {
        let n = self.n as usize;
        for v in 0..n {
            let s = &sub[v];
            if s.cols == 0 {
                continue;
            }
            let img = md.x.mul(&self.gf, s);
            let w = &sub[(v + n - 1) % n];
            if w.cols == 0 {
                if !img.is_zero() {
                    return false;
                }
            } else if w.hstack(&img).rank(&self.gf) != w.cols {
                return false;
            }
        }
        true
    }

    fn sub_quot_models(&self, md: &Model, sub: &[Mat]) -> (Model, Model) {
        let gf = &self.gf;
        let n = self.n as usize;
        let dim = md.dim();
        // complement per vertex: unit vectors at non-pivot rows
        let mut sub_cols: Vec<(u32, Vec<FqElem>)> = Vec::new();
        let mut comp_cols: Vec<(u32, Vec<FqElem>)> = Vec::new();
        for v in 0..n {
            let idx = md.at(v as u32);
            let s = &sub[v];
            for c in 0..s.cols {
                sub_cols.push((v as u32, s.col(c)));
            }
            let (_, piv) = s.transpose().rref(gf);
            for &i in &idx {
                if !piv.contains(&i) {
                    let mut e = vec![0; dim];
                    e[i] = 1;
                    comp_cols.push((v as u32, e));
                }
            }
        }
        let ns = sub_cols.len();
        let mut all: Vec<Vec<FqElem>> = sub_cols.iter().map(|c| c.1.clone()).collect();
        all.extend(comp_cols.iter().map(|c| c.1.clone()));
        let p = Mat::from_cols(dim, &all);
        let pinv = invert(gf, &p);
        let xc = pinv.mul(gf, &md.x).mul(gf, &p);
        let si: Vec<usize> = (0..ns).collect();
        let ci: Vec<usize> = (ns..dim).collect();
        let sm = Model { vertex: sub_cols.iter().map(|c| c.0).collect(), x: xc.select_rows(&si).select_cols(&si) };
        let qm = Model { vertex: comp_cols.iter().map(|c| c.0).collect(), x: xc.select_rows(&ci).select_cols(&ci) };
        (sm, qm)
    }

    /// `F^l_{m,k}`: submodules `X` of `l` with `X = k` and `l/X = m`.
    pub fn hall_number(&self, l: &TorsionClass, m: &TorsionClass, k: &TorsionClass) -> Result<u64> {
        if self.dimvec(l) != add_vec(&self.dimvec(m), &self.dimvec(k)) {
            return Ok(0);
        }
        let t = self.submodule_table(l, false)?;
        Ok(t.get(&(k.clone(), m.clone())).copied().unwrap_or(0))
    }

    /// `|Ext^1(m, k)_l|` through the Riedtmann-Peng formula.
    pub fn ext_count_with_middle(&self, m: &TorsionClass, k: &TorsionClass, l: &TorsionClass) -> Result<BigInt> {
        let f = BigInt::from(self.hall_number(l, m, k)?);
        let num = f * self.aut_order(m) * self.aut_order(k) * BigInt::from(self.field_size()).pow(self.hom_dim(m, k));
        let den = self.aut_order(l);
        if !(&num % &den).is_zero() {
            return Err(Error::Inconsistent("non-integral extension count".into()));
        }
        Ok(num / den)
    }
}

fn add_vec(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `x^0, ..., x^{k+1}`, cut after the first zero power.
fn powers(gf: &Gf, x: &Mat, k: usize) -> Vec<Mat> {
    let mut out = vec![Mat::identity(x.rows)];
    for i in 0..=k {
        let next = out[i].mul(gf, x);
        let zero = next.is_zero();
        out.push(next);
        if zero {
            break;
        }
    }
    out
}

pub(crate) fn invert(gf: &Gf, m: &Mat) -> Mat {
    let n = m.rows;
    let (r, _) = m.hstack(&Mat::identity(n)).rref(gf);
    let idx: Vec<usize> = (n..2 * n).collect();
    r.select_cols(&idx)
}

/// Which family of root sets to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MrdKind {
    RealPlus,
    RealMinus,
    Imaginary,
}

/// The sets `M_{r delta + alpha}`, `M_{r delta - alpha}` and `M_{r delta}`
/// in the tube `C_p`, with `S_0^{(nu)}` the sum of `S_0^{(nu_k p)}`.
pub fn mrd_sets(kind: MrdKind, p: u32, r: u32) -> Vec<TorsionClass> {
    let nu_parts = |k: u32| -> Vec<Vec<(i64, u32)>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        partitions(k).into_iter().map(|nu| nu.iter().map(|&x| (0, x * p)).collect()).collect()
    };
    let mut out = Vec::new();
    match kind {
        MrdKind::RealPlus => {
            for b in 0..=r {
                for nu in nu_parts(r - b) {
                    let mut v = nu.clone();
                    v.push((1, b * p + 1));
                    out.push(TorsionClass::new(p, &v));
                }
            }
        }
        MrdKind::RealMinus => {
            for a in 1..=r {
                for nu in nu_parts(r - a) {
                    let mut v = nu.clone();
                    v.push((0, a * p - 1));
                    out.push(TorsionClass::new(p, &v));
                }
            }
        }
        MrdKind::Imaginary => {
            for a in 1..=r {
                for nu in nu_parts(r - a) {
                    let mut v = nu.clone();
                    v.push((1, a * p));
                    out.push(TorsionClass::new(p, &v));
                }
            }
            for a in 1..=r {
                for b in 0..=r - a {
                    for nu in nu_parts(r - a - b) {
                        let mut v = nu.clone();
                        v.push((0, a * p - 1));
                        v.push((1, b * p + 1));
                        out.push(TorsionClass::new(p, &v));
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube(n: u32, q: u32) -> Tube {
        Tube::new(n, Gf::new(q).unwrap())
    }

    #[test]
    fn hom_dims() {
        let t = tube(2, 2);
        // Hom(S_1^{(3)}, S_0^{(2)}) = 1
        assert_eq!(t.hom_dim(&TorsionClass::uniserial(2, 1, 3), &TorsionClass::uniserial(2, 0, 2)), 1);
        let t3 = tube(3, 2);
        assert_eq!(t3.hom_dim(&TorsionClass::uniserial(3, 1, 1), &TorsionClass::uniserial(3, 2, 1)), 0);
        let j = tube(1, 2);
        let s2 = TorsionClass::uniserial(1, 0, 2);
        assert_eq!(j.hom_dim(&s2, &s2), 2);
        assert_eq!(j.ext_dim(&TorsionClass::uniserial(1, 0, 2), &TorsionClass::uniserial(1, 0, 3)).unwrap(), 2);
    }

    #[test]
    fn hom_closed_form_matches_nullspace() {
        for n in 1..=3 {
            let t = tube(n, 2);
            let mods: Vec<TorsionClass> = (1..=3).flat_map(|l| t.modules_of_length(l)).collect();
            for a in &mods {
                for b in &mods {
                    let ns = t.hom_nullspace(&t.model(a), &t.model(b)).len() as u32;
                    assert_eq!(ns, t.hom_dim(a, b), "{a:?} {b:?}");
                    assert_eq!(t.hom_basis(a, b).len() as u32, ns);
                }
            }
        }
    }

    #[test]
    fn ext_examples() {
        let t = tube(2, 2);
        let s1 = TorsionClass::uniserial(2, 1, 1);
        let s0 = TorsionClass::uniserial(2, 0, 1);
        assert_eq!(t.ext_dim(&s1, &s1).unwrap(), 0);
        assert_eq!(t.ext_dim(&s1, &s0).unwrap(), 1);
        let mid = t.ext_middles(&s1, &s0);
        assert_eq!(mid[&TorsionClass::new(2, &[(0, 1), (1, 1)])], 1);
        assert_eq!(mid[&TorsionClass::uniserial(2, 1, 2)], 1);
    }

    #[test]
    fn aut_examples() {
        let t = tube(2, 2);
        // S_{1,0}^{(up-1)} with u = 2, p = 2: q^{u-1}(q-1) = 2
        assert_eq!(t.aut_order(&TorsionClass::uniserial(2, 0, 3)), BigInt::from(2));
        let j = tube(1, 2);
        assert_eq!(j.aut_order(&TorsionClass::new(1, &[(0, 1), (0, 1)])), BigInt::from(6));
        assert_eq!(j.aut_order(&TorsionClass::zero()), BigInt::from(1));
    }

    #[test]
    fn hall_examples() {
        let j = tube(1, 2);
        let s = TorsionClass::uniserial(1, 0, 1);
        let s2 = TorsionClass::uniserial(1, 0, 2);
        let ss = s.direct_sum(&s);
        assert_eq!(j.hall_number(&s2, &s, &s).unwrap(), 1);
        assert_eq!(j.hall_number(&ss, &s, &s).unwrap(), 3);
        assert_eq!(j.hall_number(&s2, &s2, &s).unwrap(), 0);
        assert_eq!(j.ext_count_with_middle(&s, &s, &s2).unwrap(), BigInt::from(1));
    }

    #[test]
    fn classifiers_agree() {
        let t = tube(3, 2);
        for m in t.modules_of_length(4) {
            let md = t.model(&m);
            assert_eq!(t.classify_model(&md), m);
            assert_eq!(t.classify_fingerprint(&md), m);
        }
    }

    #[test]
    fn mrd_examples() {
        assert_eq!(
            mrd_sets(MrdKind::RealPlus, 2, 1),
            vec![TorsionClass::new(2, &[(0, 2), (1, 1)]), TorsionClass::uniserial(2, 1, 3)]
        );
        assert_eq!(mrd_sets(MrdKind::RealMinus, 2, 1), vec![TorsionClass::uniserial(2, 0, 1)]);
        assert_eq!(
            mrd_sets(MrdKind::Imaginary, 2, 1),
            vec![TorsionClass::new(2, &[(0, 1), (1, 1)]), TorsionClass::uniserial(2, 1, 2)]
        );
    }
}
