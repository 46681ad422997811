//! Sections between line bundles, local models of torsion, and kernel and
//! cokernel classification for maps between sheaves that split into line
//! bundles and torsion.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::groundfield::{factor_binary_form, FqElem, Gf, PointId};
use crate::ihallcore::CohClass;
use crate::lattice::{K0Class, LVec, WeightData};
use crate::linalg::Mat;
use crate::tube::{TorsionClass, Tube};

/// How far a degree scan may run before giving up.
const SCAN_LIMIT: i64 = 64;

/// A homogeneous element `x^sigma h(y1, y2)` with `0 <= sigma_i < p_i` and
/// `h` a binary form; `h[k]` is the coefficient of `y1^{l-k} y2^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub sigma: Vec<u32>,
    pub h: Vec<FqElem>,
}

impl Section {
    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&c| c == 0)
    }
}

/// Basis of `Hom(O(a), O(b))` as reduced monomials.
#[derive(Clone, Debug)]
pub struct SectionSpace {
    pub source: LVec,
    pub target: LVec,
    pub basis: Vec<Section>,
}

/// Local realization of the torsion part at one point.
#[derive(Clone, Debug)]
pub struct PointModel {
    pub class: TorsionClass,
    /// cycle length at the point (1 for ordinary points)
    pub n: u32,
    pub vertex: Vec<u32>,
    /// arrow operator (`z` for ordinary points)
    pub x: Mat,
    /// action of the local parameter
    pub w: Mat,
    /// `pi(Z)` for ordinary points
    pub pi_mat: Option<Mat>,
    pub degree: u32,
}

impl PointModel {
    pub fn dim(&self) -> usize {
        self.vertex.len()
    }

    pub fn at(&self, v: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.vertex[i] == v).collect()
    }
}

pub struct Geometry {
    pub gf: Gf,
    pub w: WeightData,
    pub q: u32,
    tubes: Vec<Tube>,
}

impl Geometry {
    pub fn new(gf: Gf, w: WeightData) -> Self {
        let q = gf.size();
        let tubes = w.p.iter().map(|&p| Tube::new(p, gf.clone())).collect();
        Geometry { gf, w, q, tubes }
    }

    /// Tube at the exceptional point `i` (1-based).
    pub fn exc_tube(&self, i: usize) -> &Tube {
        &self.tubes[i - 1]
    }

    pub fn lambda(&self, k: usize) -> FqElem {
        self.w.lambda[k - 1].unwrap_or(0)
    }

    pub fn sec_dim(&self, a: &LVec, b: &LVec) -> usize {
        let d = b.sub(&self.w, a);
        if d.l >= 0 {
            d.l as usize + 1
        } else {
            0
        }
    }

    pub fn section_basis(&self, a: &LVec, b: &LVec) -> SectionSpace {
        let n = self.sec_dim(a, b);
        let sigma = b.sub(&self.w, a).a;
        let basis = (0..n)
            .map(|m| {
                let mut h = vec![0; n];
                h[m] = 1;
                Section { sigma: sigma.clone(), h }
            })
            .collect();
        SectionSpace { source: a.clone(), target: b.clone(), basis }
    }

    pub fn monomial(&self, a: &LVec, b: &LVec, m: usize) -> Section {
        let n = self.sec_dim(a, b);
        let mut h = vec![0; n];
        h[m] = 1;
        Section { sigma: b.sub(&self.w, a).a, h }
    }

    pub fn section_from(&self, a: &LVec, b: &LVec, h: Vec<FqElem>) -> Section {
        Section { sigma: b.sub(&self.w, a).a, h }
    }

    /// `x_k^{p_k}` as a binary form of degree one.
    fn unit_form(&self, k: usize) -> [FqElem; 2] {
        if k == 1 {
            [1, 0]
        } else {
            [self.gf.neg(self.lambda(k)), 1]
        }
    }

    fn form_mul(&self, f: &[FqElem], g: &[FqElem]) -> Vec<FqElem> {
        let mut r = vec![0; f.len() + g.len() - 1];
        for (i, &a) in f.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in g.iter().enumerate() {
                r[i + j] = self.gf.add(r[i + j], self.gf.mul(a, b));
            }
        }
        r
    }

    /// Product in the graded coordinate ring.
    pub fn sec_mul(&self, s: &Section, t: &Section) -> Section {
        let mut h = self.form_mul(&s.h, &t.h);
        let mut sigma = Vec::with_capacity(s.sigma.len());
        for k in 0..s.sigma.len() {
            let mut e = s.sigma[k] + t.sigma[k];
            if e >= self.w.p[k] {
                e -= self.w.p[k];
                h = self.form_mul(&h, &self.unit_form(k + 1));
            }
            sigma.push(e);
        }
        Section { sigma, h }
    }

    /// The function `R` with `s^* = x^{sigma_i} R(w)` on torsion at `pt`,
    /// for a section `s` starting at `src`.
    pub fn germ_poly(&self, pt: &PointId, src: &LVec, s: &Section) -> Vec<FqElem> {
        let gf = &self.gf;
        let t = self.w.t();
        let carry = |k: usize| src.a[k - 1] + s.sigma[k - 1] >= self.w.p[k - 1];
        let l = s.h.len() - 1;
        let mut r: Vec<FqElem> = vec![1];
        match pt {
            PointId::Exc(i) if *i == 1 => {
                for k in 2..=t {
                    if carry(k) {
                        r = gf.poly_mul(&r, &[1, gf.neg(self.lambda(k))]);
                    }
                }
                let mut hh = vec![0; l + 1];
                for (m, &c) in s.h.iter().enumerate() {
                    hh[l - m] = c;
                }
                gf.poly_mul(&r, &hh)
            }
            PointId::Exc(i) => {
                let lam = self.lambda(*i);
                for k in 2..=t {
                    if k != *i && carry(k) {
                        r = gf.poly_mul(&r, &[gf.sub(lam, self.lambda(k)), 1]);
                    }
                }
                let shift = [lam, 1];
                let mut hh: Vec<FqElem> = Vec::new();
                let mut pw: Vec<FqElem> = vec![1];
                for &c in &s.h {
                    hh = gf.poly_add(&hh, &gf.poly_scale(&pw, c));
                    pw = gf.poly_mul(&pw, &shift);
                }
                gf.poly_mul(&r, &hh)
            }
            PointId::Ord(_) => {
                for k in 2..=t {
                    if carry(k) {
                        r = gf.poly_mul(&r, &[gf.neg(self.lambda(k)), 1]);
                    }
                }
                gf.poly_mul(&r, &gf.poly_trim(s.h.clone()))
            }
        }
    }

    /// Vertex that `Hom(O(y), -)` sees at `pt`.
    pub fn vertex_of(&self, pt: &PointId, y: &LVec) -> u32 {
        match pt {
            PointId::Exc(i) => y.a[i - 1],
            PointId::Ord(_) => 0,
        }
    }

    /// `s^*(u)` for `s: O(src) -> O(src + deg s)` and `u` in the fibre of
    /// the target at `pt`.
    pub fn pullback(&self, pt: &PointId, pm: &PointModel, src: &LVec, s: &Section, u: &[FqElem]) -> Vec<FqElem> {
        let r = self.germ_poly(pt, src, s);
        let gf = &self.gf;
        let mut acc = vec![0; u.len()];
        for &c in r.iter().rev() {
            acc = pm.w.apply(gf, &acc);
            if c != 0 {
                for (a, &b) in acc.iter_mut().zip(u) {
                    *a = gf.add(*a, gf.mul(c, b));
                }
            }
        }
        if let PointId::Exc(i) = pt {
            for _ in 0..s.sigma[i - 1] {
                acc = pm.x.apply(gf, &acc);
            }
        }
        acc
    }

    pub fn point_model(&self, pt: &PointId, class: &TorsionClass) -> PointModel {
        match pt {
            PointId::Exc(i) => {
                let t = self.exc_tube(*i);
                let m = t.model(class);
                let w = m.x.pow(&self.gf, t.n);
                PointModel { class: class.clone(), n: t.n, vertex: m.vertex, x: m.x, w, pi_mat: None, degree: 1 }
            }
            PointId::Ord(pi) => {
                let gf = &self.gf;
                let d = pi.len() - 1;
                let dim: usize = class.0.iter().map(|p| p.1 as usize * d).sum();
                let mut z = Mat::zeros(dim, dim);
                let mut base = 0;
                for &(_, r) in &class.0 {
                    let f = gf.poly_pow(pi, r);
                    let k = d * r as usize;
                    for c in 0..k {
                        if c + 1 < k {
                            z.set(base + c + 1, base + c, 1);
                        } else {
                            for row in 0..k {
                                z.set(base + row, base + c, gf.neg(f[row]));
                            }
                        }
                    }
                    base += k;
                }
                let pim = z.poly_eval(gf, pi);
                PointModel {
                    class: class.clone(),
                    n: 1,
                    vertex: vec![0; dim],
                    x: z.clone(),
                    w: z,
                    pi_mat: Some(pim),
                    degree: d as u32,
                }
            }
        }
    }

    /// Basis of intertwiners between two models at the same point.
    pub fn intertwiners(&self, pt: &PointId, src: &PointModel, tgt: &PointModel) -> Vec<Mat> {
        match pt {
            PointId::Exc(i) => self.exc_tube(*i).hom_basis(&src.class, &tgt.class),
            PointId::Ord(pi) => {
                let gf = &self.gf;
                let d = pi.len() - 1;
                let mut out = Vec::new();
                let mut sb = 0;
                for &(_, b) in &src.class.0 {
                    let mut tb = 0;
                    for &(_, a) in &tgt.class.0 {
                        let e = a.saturating_sub(b);
                        let pa = gf.poly_pow(pi, a);
                        let pe = gf.poly_pow(pi, e);
                        for m in 0..d * a.min(b) as usize {
                            let mut zm = vec![0; m + 1];
                            zm[m] = 1;
                            let g = gf.poly_mul(&pe, &zm);
                            let mut f = Mat::zeros(tgt.dim(), src.dim());
                            let mut cur = g.clone();
                            for k in 0..d * b as usize {
                                let r = gf.poly_rem(&cur, &pa);
                                for (row, &c) in r.iter().enumerate() {
                                    f.set(tb + row, sb + k, c);
                                }
                                cur = gf.poly_mul(&r, &[0, 1]);
                            }
                            out.push(f);
                        }
                        tb += d * a as usize;
                    }
                    sb += d * b as usize;
                }
                out
            }
        }
    }

    /// Kernel class of an intertwiner between models at one point, as a
    /// torsion class, together with `dim` of the kernel at each vertex.
    fn torsion_kernel(&self, pt: &PointId, src: &PointModel, tgt: Option<(&PointModel, &Mat)>) -> (TorsionClass, Vec<usize>) {
        let Some((tm, f)) = tgt else {
            let mut per = vec![0; src.n as usize];
            for &v in &src.vertex {
                per[v as usize] += 1;
            }
            return (src.class.clone(), per);
        };
        match pt {
            PointId::Exc(i) => {
                let tube = self.exc_tube(*i);
                let sm = crate::tube::Model { vertex: src.vertex.clone(), x: src.x.clone() };
                let tmm = crate::tube::Model { vertex: tm.vertex.clone(), x: tm.x.clone() };
                let (kers, _) = tube.ker_img(&sm, &tmm, f);
                let per = kers.iter().map(|k| k.cols).collect();
                (tube.classify_sub(&src.x, &kers), per)
            }
            PointId::Ord(_) => {
                let ns = f.nullspace(&self.gf);
                let k = Mat::from_cols(src.dim(), &ns);
                (self.classify_ord_sub(src, &k), vec![ns.len()])
            }
        }
    }

    fn classify_ord_sub(&self, pm: &PointModel, k: &Mat) -> TorsionClass {
        let gf = &self.gf;
        let d = pm.degree as usize;
        let pim = pm.pi_mat.as_ref().expect("ordinary model");
        let mut s = vec![k.rank(gf)];
        let mut cur = k.clone();
        while *s.last().unwrap() > 0 {
            cur = pim.mul(gf, &cur);
            s.push(if cur.cols == 0 { 0 } else { cur.rank(gf) });
        }
        let ge: Vec<usize> = (1..s.len()).map(|m| (s[m - 1] - s[m]) / d).collect();
        let mut parts = Vec::new();
        for m in 0..ge.len() {
            let next = ge.get(m + 1).copied().unwrap_or(0);
            for _ in 0..ge[m] - next {
                parts.push((0i64, m as u32 + 1));
            }
        }
        TorsionClass::new(1, &parts)
    }

    pub fn class_of(&self, m: &CohClass) -> K0Class {
        let w = &self.w;
        let mut x = K0Class::zero(w);
        for v in &m.lines {
            x = x.add(&K0Class::line(w, v));
        }
        for (pt, t) in &m.torsion {
            for &(top, len) in &t.0 {
                let c = match pt {
                    PointId::Exc(i) => K0Class::uniserial(w, *i, top as i64, len),
                    PointId::Ord(f) => K0Class::ordinary(w, (f.len() - 1) as u32, len),
                };
                x = x.add(&c);
            }
        }
        x
    }

    /// Finds `v` with class `O(v)` equal to `x`, if any.
    pub fn line_of_class(&self, x: &K0Class) -> Option<LVec> {
        if x.rank() != 1 {
            return None;
        }
        LVec::of_degree(&self.w, x.deg(&self.w)).into_iter().find(|v| &K0Class::line(&self.w, v) == x)
    }

    /// Cokernel of a nonzero section, by factoring its form.
    pub fn cokernel_of_section(&self, _a: &LVec, b: &LVec, s: &Section) -> Result<CohClass> {
        if s.is_zero() {
            return Err(Error::ZeroForm);
        }
        let fac = factor_binary_form(&self.gf, &self.w.lambda, &s.h)?;
        let mut out = CohClass::zero();
        let mut mult = vec![0u32; self.w.t()];
        for (pt, e) in fac {
            match pt {
                PointId::Exc(i) => mult[i - 1] += e,
                PointId::Ord(_) => out = out.direct_sum(&CohClass::torsion_at(pt, TorsionClass::uniserial(1, 0, e))),
            }
        }
        for i in 1..=self.w.t() {
            let len = s.sigma[i - 1] + self.w.weight(i) * mult[i - 1];
            if len > 0 {
                let t = TorsionClass::uniserial(self.w.weight(i), b.a[i - 1] as i64, len);
                out = out.direct_sum(&CohClass::torsion_at(PointId::Exc(i), t));
            }
        }
        Ok(out)
    }
}

/// A sheaf given concretely: line summands and torsion models.
#[derive(Clone, Debug)]
pub struct Obj {
    pub lines: Vec<LVec>,
    pub pts: Vec<(PointId, PointModel)>,
}

impl Obj {
    pub fn new(g: &Geometry, m: &CohClass) -> Obj {
        Obj {
            lines: m.lines.clone(),
            pts: m.torsion.iter().map(|(p, t)| (p.clone(), g.point_model(p, t))).collect(),
        }
    }

    fn point(&self, p: &PointId) -> Option<usize> {
        self.pts.iter().position(|(q, _)| q == p)
    }
}

#[derive(Clone, Debug)]
enum BasisElt {
    /// monomial `m` from source line `k` to target line `b`
    LL { b: usize, k: usize, m: usize },
    /// source line `k` onto basis vector `j` of target point `p`
    LT { k: usize, p: usize, j: usize },
    /// intertwiner from source point `sp` to target point `tp`
    TT { sp: usize, tp: usize, mat: Mat },
}

/// Everything needed to classify kernels and cokernels of maps between two
/// fixed sheaves, with probe matrices memoized across maps.
pub struct PairCtx<'g> {
    g: &'g Geometry,
    pub src: Obj,
    pub tgt: Obj,
    src_class: K0Class,
    tgt_class: K0Class,
    basis: Vec<BasisElt>,
    kprobe: BTreeMap<LVec, Probe>,
    cprobe: BTreeMap<LVec, Probe>,
    tprobe: BTreeMap<(PointId, u32, u32), Probe>,
    models: BTreeMap<(PointId, u32, u32), PointModel>,
}

/// One matrix per Hom basis element; a map's matrix is their combination.
#[derive(Clone, Debug)]
struct Probe {
    mats: Vec<Mat>,
    rows: usize,
    cols: usize,
}

/// Outcome of classifying one map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapClass {
    pub ker: CohClass,
    pub coker: CohClass,
}

impl<'g> PairCtx<'g> {
    pub fn new(g: &'g Geometry, a: &CohClass, b: &CohClass) -> Self {
        let src = Obj::new(g, a);
        let tgt = Obj::new(g, b);
        let mut basis = Vec::new();
        for (k, ak) in src.lines.iter().enumerate() {
            for (bi, bb) in tgt.lines.iter().enumerate() {
                for m in 0..g.sec_dim(ak, bb) {
                    basis.push(BasisElt::LL { b: bi, k, m });
                }
            }
            for (p, (pt, pm)) in tgt.pts.iter().enumerate() {
                for j in pm.at(g.vertex_of(pt, ak)) {
                    basis.push(BasisElt::LT { k, p, j });
                }
            }
        }
        for (sp, (pt, sm)) in src.pts.iter().enumerate() {
            if let Some(tp) = tgt.point(pt) {
                for mat in g.intertwiners(pt, sm, &tgt.pts[tp].1) {
                    basis.push(BasisElt::TT { sp, tp, mat });
                }
            }
        }
        PairCtx {
            g,
            src_class: g.class_of(a),
            tgt_class: g.class_of(b),
            src,
            tgt,
            basis,
            kprobe: BTreeMap::new(),
            cprobe: BTreeMap::new(),
            tprobe: BTreeMap::new(),
            models: BTreeMap::new(),
        }
    }

    pub fn hom_dim(&self) -> usize {
        self.basis.len()
    }

    fn combine(&self, probe: &Probe, c: &[FqElem]) -> Mat {
        let mut m = Mat::zeros(probe.rows, probe.cols);
        for (p, &ck) in probe.mats.iter().zip(c) {
            m.axpy(&self.g.gf, ck, p);
        }
        m
    }

    fn ll_sections(&self, c: &[FqElem]) -> Vec<Vec<Option<Section>>> {
        let g = self.g;
        let mut out: Vec<Vec<Option<Section>>> = self
            .tgt
            .lines
            .iter()
            .map(|bb| {
                self.src
                    .lines
                    .iter()
                    .map(|ak| {
                        let n = g.sec_dim(ak, bb);
                        (n > 0).then(|| g.section_from(ak, bb, vec![0; n]))
                    })
                    .collect()
            })
            .collect();
        for (e, &ck) in self.basis.iter().zip(c) {
            if let (BasisElt::LL { b, k, m }, true) = (e, ck != 0) {
                let s = out[*b][*k].as_mut().unwrap();
                s.h[*m] = g.gf.add(s.h[*m], ck);
            }
        }
        out
    }

    /// Rank of the line-to-line block over the function field, and a
    /// nonzero maximal minor when the rank is positive.
    fn generic_rank(&self, ll: &[Vec<Option<Section>>]) -> (usize, Option<Section>) {
        let (nr, nc) = (self.tgt.lines.len(), self.src.lines.len());
        for r in (1..=nr.min(nc)).rev() {
            for rows in subsets(nr, r) {
                for cols in subsets(nc, r) {
                    if let Some(d) = self.minor(ll, &rows, &cols) {
                        return (r, Some(d));
                    }
                }
            }
        }
        (0, None)
    }

    fn minor(&self, ll: &[Vec<Option<Section>>], rows: &[usize], cols: &[usize]) -> Option<Section> {
        let gf = &self.g.gf;
        let mut acc: Option<Section> = None;
        for (perm, sign) in permutations(rows.len()) {
            let mut term: Option<Section> = None;
            let mut zero = false;
            for (ci, &pi) in perm.iter().enumerate() {
                match &ll[rows[pi]][cols[ci]] {
                    None => {
                        zero = true;
                        break;
                    }
                    Some(s) => {
                        term = Some(match term {
                            None => s.clone(),
                            Some(t) => self.g.sec_mul(&t, s),
                        })
                    }
                }
            }
            if zero {
                continue;
            }
            let mut t = term.unwrap();
            if sign < 0 {
                t.h = t.h.iter().map(|&c| gf.neg(c)).collect();
            }
            acc = Some(match acc {
                None => t,
                Some(mut a) => {
                    for (x, y) in a.h.iter_mut().zip(&t.h) {
                        *x = gf.add(*x, *y);
                    }
                    a
                }
            });
        }
        acc.filter(|s| !s.is_zero())
    }

    fn kernel_probe(&mut self, y: &LVec) -> &Probe {
        if !self.kprobe.contains_key(y) {
            let p = self.build_kernel_probe(y);
            self.kprobe.insert(y.clone(), p);
        }
        &self.kprobe[y]
    }

    fn build_kernel_probe(&self, y: &LVec) -> Probe {
        let g = self.g;
        // domain layout
        let mut off = 0;
        let mut line_off = Vec::new();
        for ak in &self.src.lines {
            let n = g.sec_dim(y, ak);
            line_off.push((off, n));
            off += n;
        }
        let mut pt_idx = Vec::new();
        for (pt, pm) in &self.src.pts {
            let idx = pm.at(g.vertex_of(pt, y));
            pt_idx.push((off, idx.clone()));
            off += idx.len();
        }
        let cols = off;
        let mut roff = 0;
        let mut tline_off = Vec::new();
        for bb in &self.tgt.lines {
            let n = g.sec_dim(y, bb);
            tline_off.push(roff);
            roff += n;
        }
        let mut tpt_off = Vec::new();
        for (_, pm) in &self.tgt.pts {
            tpt_off.push(roff);
            roff += pm.dim();
        }
        let rows = roff;
        let mats = self
            .basis
            .iter()
            .map(|e| {
                let mut m = Mat::zeros(rows, cols);
                match e {
                    BasisElt::LL { b, k, m: mono } => {
                        let es = g.monomial(&self.src.lines[*k], &self.tgt.lines[*b], *mono);
                        let (o, n) = line_off[*k];
                        for mm in 0..n {
                            let phi = g.monomial(y, &self.src.lines[*k], mm);
                            let pr = g.sec_mul(&es, &phi);
                            for (r, &c) in pr.h.iter().enumerate() {
                                m.set(tline_off[*b] + r, o + mm, c);
                            }
                        }
                    }
                    BasisElt::LT { k, p, j } => {
                        let (pt, pm) = &self.tgt.pts[*p];
                        let mut u = vec![0; pm.dim()];
                        u[*j] = 1;
                        let (o, n) = line_off[*k];
                        for mm in 0..n {
                            let phi = g.monomial(y, &self.src.lines[*k], mm);
                            let v = g.pullback(pt, pm, y, &phi, &u);
                            for (r, &c) in v.iter().enumerate() {
                                m.set(tpt_off[*p] + r, o + mm, c);
                            }
                        }
                    }
                    BasisElt::TT { sp, tp, mat } => {
                        let (o, idx) = &pt_idx[*sp];
                        for (c, &i) in idx.iter().enumerate() {
                            for r in 0..mat.rows {
                                m.set(tpt_off[*tp] + r, o + c, mat.get(r, i));
                            }
                        }
                    }
                }
                m
            })
            .collect();
        Probe { mats, rows, cols }
    }

    fn coker_probe(&mut self, y: &LVec) -> &Probe {
        if !self.cprobe.contains_key(y) {
            let g = self.g;
            let mut doff = Vec::new();
            let mut cols = 0;
            for bb in &self.tgt.lines {
                doff.push(cols);
                cols += g.sec_dim(bb, y);
            }
            let mut roff = Vec::new();
            let mut rows = 0;
            for ak in &self.src.lines {
                roff.push(rows);
                rows += g.sec_dim(ak, y);
            }
            let mats = self
                .basis
                .iter()
                .map(|e| {
                    let mut m = Mat::zeros(rows, cols);
                    if let BasisElt::LL { b, k, m: mono } = e {
                        let bb = &self.tgt.lines[*b];
                        let es = g.monomial(&self.src.lines[*k], bb, *mono);
                        for mm in 0..g.sec_dim(bb, y) {
                            let psi = g.monomial(bb, y, mm);
                            let pr = g.sec_mul(&psi, &es);
                            for (r, &c) in pr.h.iter().enumerate() {
                                m.set(roff[*k] + r, doff[*b] + mm, c);
                            }
                        }
                    }
                    m
                })
                .collect();
            self.cprobe.insert(y.clone(), Probe { mats, rows, cols });
        }
        &self.cprobe[y]
    }

    fn probe_model(&mut self, pt: &PointId, top: u32, len: u32) -> PointModel {
        let key = (pt.clone(), top, len);
        if !self.models.contains_key(&key) {
            let n = match pt {
                PointId::Exc(i) => self.g.w.weight(*i),
                PointId::Ord(_) => 1,
            };
            let m = self.g.point_model(pt, &TorsionClass::uniserial(n, top as i64, len));
            self.models.insert(key.clone(), m);
        }
        self.models[&key].clone()
    }

    /// Probe for `Hom(-, S)` with `S` the uniserial `(top, len)` at `pt`.
    fn torsion_probe(&mut self, pt: &PointId, top: u32, len: u32) -> Probe {
        let key = (pt.clone(), top, len);
        if let Some(p) = self.tprobe.get(&key) {
            return p.clone();
        }
        let g = self.g;
        let s = self.probe_model(pt, top, len);
        let ds = s.dim();
        let tp = self.tgt.point(pt);
        let sp = self.src.point(pt);
        let mut cols = 0;
        let mut dline = Vec::new();
        for bb in &self.tgt.lines {
            let idx = s.at(g.vertex_of(pt, bb));
            dline.push((cols, idx.clone()));
            cols += idx.len();
        }
        let inter: Vec<Mat> = match tp {
            Some(tp) => g.intertwiners(pt, &self.tgt.pts[tp].1, &s),
            None => Vec::new(),
        };
        let ioff = cols;
        cols += inter.len();
        let mut rows = ds * self.src.lines.len();
        let toff = rows;
        if let Some(sp) = sp {
            rows += ds * self.src.pts[sp].1.dim();
        }
        let probes: Vec<Mat> = self
            .basis
            .iter()
            .map(|e| {
                let mut m = Mat::zeros(rows, cols);
                match e {
                    BasisElt::LL { b, k, m: mono } => {
                        let ak = &self.src.lines[*k];
                        let es = g.monomial(ak, &self.tgt.lines[*b], *mono);
                        let (o, idx) = &dline[*b];
                        for (c, &i) in idx.iter().enumerate() {
                            let mut u = vec![0; ds];
                            u[i] = 1;
                            let v = g.pullback(pt, &s, ak, &es, &u);
                            for (r, &x) in v.iter().enumerate() {
                                m.set(k * ds + r, o + c, x);
                            }
                        }
                    }
                    BasisElt::LT { k, p, j } => {
                        if Some(*p) == tp {
                            for (c, psi) in inter.iter().enumerate() {
                                for r in 0..ds {
                                    m.set(k * ds + r, ioff + c, psi.get(r, *j));
                                }
                            }
                        }
                    }
                    BasisElt::TT { sp: esp, tp: etp, mat } => {
                        if Some(*etp) == tp && Some(*esp) == sp {
                            let dt = mat.cols;
                            for (c, psi) in inter.iter().enumerate() {
                                let comp = psi.mul(&g.gf, mat);
                                for r in 0..ds {
                                    for cc in 0..dt {
                                        m.set(toff + r * dt + cc, ioff + c, comp.get(r, cc));
                                    }
                                }
                            }
                        }
                    }
                }
                m
            })
            .collect();
        let out = Probe { mats: probes, rows, cols };
        self.tprobe.insert(key, out.clone());
        out
    }

    fn null_dim(&self, probe: &Probe, c: &[FqElem]) -> usize {
        let m = self.combine(probe, c);
        m.cols - m.rank(&self.g.gf)
    }

    /// Classifies the map with coordinates `c` in the Hom basis. With
    /// `mono_only`, returns `None` for non-injective maps.
    pub fn classify(&mut self, c: &[FqElem], mono_only: bool) -> Result<Option<MapClass>> {
        let g = self.g;
        let w = &g.w;
        let ll = self.ll_sections(c);
        let (rf, minor) = self.generic_rank(&ll);
        let rank_src = self.src.lines.len();
        let rank_tgt = self.tgt.lines.len();
        if mono_only && rf < rank_src {
            return Ok(None);
        }
        // torsion of the kernel
        let mut ker = CohClass::zero();
        let mut ker_vert: Vec<(PointId, Vec<usize>)> = Vec::new();
        for (sp, (pt, sm)) in self.src.pts.iter().enumerate() {
            let tp = self.tgt.point(pt);
            let f = tp.map(|tp| {
                let mut f = Mat::zeros(self.tgt.pts[tp].1.dim(), sm.dim());
                for (e, &ck) in self.basis.iter().zip(c) {
                    if let BasisElt::TT { sp: a, tp: b, mat } = e {
                        if *a == sp && *b == tp {
                            f.axpy(&g.gf, ck, mat);
                        }
                    }
                }
                f
            });
            let (cls, per) = g.torsion_kernel(pt, sm, tp.map(|tp| (&self.tgt.pts[tp].1, f.as_ref().unwrap())));
            if !cls.is_zero() {
                if mono_only {
                    return Ok(None);
                }
                ker = ker.direct_sum(&CohClass::torsion_at(pt.clone(), cls));
            }
            ker_vert.push((pt.clone(), per));
        }
        // bundle part of the kernel
        let need = rank_src - rf;
        if need > 0 {
            let hi = self.src.lines.iter().map(|a| a.deg(w)).max().unwrap();
            let mut found: Vec<LVec> = Vec::new();
            let mut d = hi;
            while found.len() < need {
                if d < hi - SCAN_LIMIT {
                    return Err(Error::CapExceeded("kernel degree scan".into()));
                }
                for y in LVec::of_degree(w, d) {
                    let probes = self.kernel_probe(&y).clone();
                    let total = self.null_dim(&probes, c);
                    let tors: usize = ker_vert.iter().map(|(pt, per)| per[g.vertex_of(pt, &y) as usize]).sum();
                    let expect: usize = found.iter().map(|v| g.sec_dim(&y, v)).sum();
                    let extra = total - tors - expect;
                    for _ in 0..extra {
                        found.push(y.clone());
                    }
                }
                d -= 1;
            }
            if found.len() != need {
                return Err(Error::Inconsistent("kernel rank mismatch".into()));
            }
            for v in found {
                ker = ker.direct_sum(&CohClass::line(v));
            }
        }
        let cok_class = self.tgt_class.sub(&self.src_class).add(&g.class_of(&ker));
        // bundle part of the cokernel
        let mut coker = CohClass::zero();
        let need = rank_tgt - rf;
        if need > 0 {
            let lo = self.tgt.lines.iter().map(|a| a.deg(w)).min().unwrap();
            let mut found: Vec<LVec> = Vec::new();
            let mut d = lo;
            while found.len() < need {
                if d > lo + SCAN_LIMIT {
                    return Err(Error::CapExceeded("cokernel degree scan".into()));
                }
                for y in LVec::of_degree(w, d) {
                    let probes = self.coker_probe(&y).clone();
                    let total = self.null_dim(&probes, c);
                    let expect: usize = found.iter().map(|v| g.sec_dim(v, &y)).sum();
                    for _ in 0..total - expect {
                        found.push(y.clone());
                    }
                }
                d += 1;
            }
            if found.len() != need {
                return Err(Error::Inconsistent("cokernel rank mismatch".into()));
            }
            for v in found {
                coker = coker.direct_sum(&CohClass::line(v));
            }
        }
        // torsion part of the cokernel
        let tors_class = cok_class.sub(&g.class_of(&coker));
        let tdeg = tors_class.deg(w);
        if tdeg > 0 {
            let mut cands: Vec<PointId> = self.tgt.pts.iter().map(|(p, _)| p.clone()).collect();
            if let Some(mn) = &minor {
                for (i, &s) in mn.sigma.iter().enumerate() {
                    if s > 0 {
                        cands.push(PointId::Exc(i + 1));
                    }
                }
                for (p, _) in factor_binary_form(&g.gf, &w.lambda, &mn.h)? {
                    cands.push(p);
                }
            }
            cands.sort();
            cands.dedup();
            let vlines = coker.lines.clone();
            for pt in cands {
                let (n, simple_deg) = match &pt {
                    PointId::Exc(i) => (w.weight(*i), w.lcm() / w.weight(*i) as i64),
                    PointId::Ord(f) => (1, (f.len() as i64 - 1) * w.lcm()),
                };
                let amax = (tdeg / simple_deg) as u32;
                if amax == 0 {
                    continue;
                }
                let dd = pt.degree() as i64;
                let mut h: BTreeMap<(u32, u32), i64> = BTreeMap::new();
                for a in 1..=amax + 1 {
                    for j in 0..n {
                        let probes = self.torsion_probe(&pt, j, a);
                        let total = self.null_dim(&probes, c) as i64;
                        let s = self.probe_model(&pt, j, a);
                        let bundle: i64 = vlines.iter().map(|v| s.at(g.vertex_of(&pt, v)).len() as i64).sum();
                        h.insert((j, a), (total - bundle) / dd);
                    }
                }
                let hv = |j: i64, a: u32| -> i64 {
                    if a == 0 {
                        0
                    } else {
                        h[&(j.rem_euclid(n as i64) as u32, a)]
                    }
                };
                let gg = |j: u32, a: u32| hv(j as i64, a) - hv(j as i64 - 1, a - 1);
                let mut parts = Vec::new();
                for a in 1..=amax {
                    for j in 0..n {
                        let k = gg(j, a) - gg(j, a + 1);
                        if k < 0 {
                            return Err(Error::Inconsistent("negative multiplicity in cokernel".into()));
                        }
                        for _ in 0..k {
                            parts.push((j as i64, a));
                        }
                    }
                }
                if !parts.is_empty() {
                    coker = coker.direct_sum(&CohClass::torsion_at(pt.clone(), TorsionClass::new(n, &parts)));
                }
            }
        }
        if g.class_of(&coker) != cok_class {
            return Err(Error::Inconsistent(format!("cokernel class mismatch: {coker:?}")));
        }
        Ok(Some(MapClass { ker, coker }))
    }
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(n: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(n, r, i + 1, cur, out);
            cur.pop();
        }
    }
    go(n, r, 0, &mut Vec::new(), &mut out);
    out
}

fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    let mut out = Vec::new();
    fn go(rest: Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, i32)>) {
        if rest.is_empty() {
            let mut inv = 0;
            for i in 0..cur.len() {
                for j in i + 1..cur.len() {
                    if cur[i] > cur[j] {
                        inv += 1;
                    }
                }
            }
            out.push((cur.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for k in 0..rest.len() {
            let mut r = rest.clone();
            let x = r.remove(k);
            cur.push(x);
            go(r, cur, out);
            cur.pop();
        }
    }
    go((0..n).collect(), &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::for_each_combination;

    fn geo(q: u32, p: &[u32]) -> Geometry {
        let gf = Gf::ground(q).unwrap();
        let w = WeightData::new(&gf, p).unwrap();
        Geometry::new(gf, w)
    }

    #[test]
    fn section_dims() {
        let g = geo(3, &[2, 3]);
        let o = LVec::zero(&g.w);
        for m in 0..4 {
            assert_eq!(g.sec_dim(&o, &LVec::c(&g.w, m)), m as usize + 1);
        }
        for i in 1..=2 {
            let x = LVec::x(&g.w, i);
            assert_eq!(g.sec_dim(&o, &x), 1);
            assert_eq!(g.sec_dim(&x, &o), 0);
        }
    }

    #[test]
    fn unit_section_cokernels() {
        let g = geo(3, &[2, 3, 2]);
        let w = &g.w;
        for i in 1..=3 {
            for j in 1..=w.weight(i) as i64 {
                let a = LVec::zero(w).add_x(w, i, j - 1);
                let b = LVec::zero(w).add_x(w, i, j);
                let s = g.monomial(&a, &b, 0);
                let c = g.cokernel_of_section(&a, &b, &s).unwrap();
                let want = CohClass::torsion_at(PointId::Exc(i), TorsionClass::uniserial(w.weight(i), j, 1));
                assert_eq!(c, want);
            }
            let o = LVec::zero(w);
            let cc = LVec::c(w, 1);
            let h = if i == 1 { vec![1, 0] } else { vec![g.gf.neg(g.lambda(i)), 1] };
            let s = g.section_from(&o, &cc, h);
            let c = g.cokernel_of_section(&o, &cc, &s).unwrap();
            let want = CohClass::torsion_at(PointId::Exc(i), TorsionClass::uniserial(w.weight(i), 0, w.weight(i)));
            assert_eq!(c, want);
        }
    }

    /// The probe classifier agrees with factoring on every section.
    fn classify_sections(q: u32, p: &[u32], a: LVec, b: LVec) {
        let g = geo(q, p);
        let src = CohClass::line(a.clone());
        let tgt = CohClass::line(b.clone());
        let mut ctx = PairCtx::new(&g, &src, &tgt);
        let n = ctx.hom_dim();
        assert_eq!(n, g.sec_dim(&a, &b));
        for_each_combination(&g.gf, n, |c| {
            let mc = ctx.classify(c, false).unwrap().unwrap();
            if c.iter().all(|&x| x == 0) {
                assert_eq!(mc.ker, src);
                assert_eq!(mc.coker, tgt);
            } else {
                let s = g.section_from(&a, &b, c.to_vec());
                assert_eq!(mc.ker, CohClass::zero());
                assert_eq!(mc.coker, g.cokernel_of_section(&a, &b, &s).unwrap(), "{c:?}");
            }
        });
    }

    #[test]
    fn probes_match_factoring() {
        let g = geo(3, &[2, 3]);
        let w = &g.w;
        classify_sections(3, &[2, 3], LVec::zero(w), LVec::c(w, 2));
        classify_sections(3, &[2, 3], LVec::x(w, 2), LVec::c(w, 2).add_x(w, 1, 1));
        classify_sections(2, &[1, 1], LVec { l: 0, a: vec![0, 0] }, LVec { l: 3, a: vec![0, 0] });
        let g = geo(3, &[2, 2, 2]);
        let w = &g.w;
        classify_sections(3, &[2, 2, 2], LVec::zero(w), LVec::c(w, 2).add_x(w, 3, 1));
    }

    #[test]
    fn germs_are_multiplicative() {
        let g = geo(3, &[2, 3, 2]);
        let w = &g.w;
        let a = LVec::zero(w);
        let b = LVec::c(w, 1).add_x(w, 2, 1);
        let c = b.add(w, &LVec::c(w, 1).add_x(w, 1, 1));
        let pts = [PointId::Exc(1), PointId::Exc(2), PointId::Exc(3), PointId::Ord(vec![1, 0, 1])];
        for pt in pts {
            let len = 5;
            let n = match &pt {
                PointId::Exc(i) => w.weight(*i),
                _ => 1,
            };
            let cls = TorsionClass::uniserial(n, c.a.first().map_or(0, |_| g.vertex_of(&pt, &c) as i64), len);
            let pm = g.point_model(&pt, &cls);
            for m1 in 0..g.sec_dim(&a, &b) {
                for m2 in 0..g.sec_dim(&b, &c) {
                    let s = g.monomial(&a, &b, m1);
                    let t = g.monomial(&b, &c, m2);
                    let st = g.sec_mul(&t, &s);
                    for j in pm.at(g.vertex_of(&pt, &c)) {
                        let mut u = vec![0; pm.dim()];
                        u[j] = 1;
                        let two = g.pullback(&pt, &pm, &a, &s, &g.pullback(&pt, &pm, &b, &t, &u));
                        let one = g.pullback(&pt, &pm, &a, &st, &u);
                        assert_eq!(one, two, "{pt:?} {m1} {m2}");
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_targets() {
        let g = geo(3, &[2, 3]);
        let w = &g.w;
        let o = LVec::zero(w);
        let x2 = LVec::x(w, 2);
        // O -> O(x2) + S_{1,0}
        let s10 = CohClass::torsion_at(PointId::Exc(1), TorsionClass::uniserial(2, 0, 1));
        let tgt = CohClass::line(x2.clone()).direct_sum(&s10);
        let mut ctx = PairCtx::new(&g, &CohClass::line(o.clone()), &tgt);
        assert_eq!(ctx.hom_dim(), 2);
        // g = x2, h = 0
        let mc = ctx.classify(&[1, 0], false).unwrap().unwrap();
        assert_eq!(mc.ker, CohClass::zero());
        let s21 = CohClass::torsion_at(PointId::Exc(2), TorsionClass::uniserial(3, 1, 1));
        assert_eq!(mc.coker, s10.direct_sum(&s21));
        // g = 0, h onto S_{1,0}
        let mc = ctx.classify(&[0, 1], false).unwrap().unwrap();
        assert_eq!(mc.ker, CohClass::line(o.add_x(w, 1, -1)));
        assert_eq!(mc.coker, CohClass::line(x2.clone()));
        // both: injective, and the class forces the same cokernel
        let mc = ctx.classify(&[1, 1], false).unwrap().unwrap();
        assert_eq!(mc.ker, CohClass::zero());
        assert_eq!(mc.coker, s10.direct_sum(&s21));
    }
}
