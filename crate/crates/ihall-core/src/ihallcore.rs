//! The iHall algebra on the basis `[M]*[K_alpha]` and its product engine.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::groundfield::{Gf, PointId};
use crate::lattice::{K0Class, LVec, WeightData};
use crate::linalg::for_each_combination;
use crate::linebundles::{Geometry, PairCtx};
use crate::qfield::Scalar;
use crate::tube::{gl_order, TorsionClass, Tube};

/// Isoclass of a sheaf that splits into line bundles and torsion.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CohClass {
    pub lines: Vec<LVec>,
    pub torsion: BTreeMap<PointId, TorsionClass>,
}

impl CohClass {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn line(v: LVec) -> Self {
        CohClass { lines: vec![v], torsion: BTreeMap::new() }
    }

    pub fn torsion_at(pt: PointId, t: TorsionClass) -> Self {
        let mut torsion = BTreeMap::new();
        if !t.is_zero() {
            torsion.insert(pt, t);
        }
        CohClass { lines: Vec::new(), torsion }
    }

    pub fn from_parts(lines: Vec<LVec>, torsion: BTreeMap<PointId, TorsionClass>) -> Self {
        let mut c = CohClass { lines, torsion };
        c.lines.sort();
        c.torsion.retain(|_, t| !t.is_zero());
        c
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let mut lines = self.lines.clone();
        lines.extend(o.lines.iter().cloned());
        let mut torsion = self.torsion.clone();
        for (p, t) in &o.torsion {
            let e = torsion.entry(p.clone()).or_default();
            *e = e.direct_sum(t);
        }
        Self::from_parts(lines, torsion)
    }

    pub fn is_zero(&self) -> bool {
        self.lines.is_empty() && self.torsion.is_empty()
    }

    pub fn is_torsion(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.lines.len()
    }

    pub fn bundle_part(&self) -> Self {
        Self::from_parts(self.lines.clone(), BTreeMap::new())
    }

    pub fn torsion_part(&self) -> Self {
        Self::from_parts(Vec::new(), self.torsion.clone())
    }

    pub fn render(&self) -> String {
        let mut s = String::from("lines=[");
        for (k, v) in self.lines.iter().enumerate() {
            if k > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "{v}");
        }
        s.push_str("] ; torsion={");
        for (k, (p, t)) in self.torsion.iter().enumerate() {
            if k > 0 {
                s.push_str(", ");
            }
            s.push_str(&render_point(p));
            s.push_str(": ");
            for (m, (top, len)) in t.0.iter().enumerate() {
                if m > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "({top},{len})");
            }
        }
        s.push('}');
        s
    }
}

pub fn render_point(p: &PointId) -> String {
    match p {
        PointId::Exc(i) => format!("e{i}"),
        PointId::Ord(f) => {
            let mut s = String::from("z[");
            for (k, c) in f.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{c}");
            }
            s.push(']');
            s
        }
    }
}

fn render_k(k: &K0Class) -> String {
    let mut s = format!("[{},{}", k.o, k.oc);
    for x in &k.s {
        let _ = write!(s, ",{x}");
    }
    s.push(']');
    s
}

/// Sparse element `sum c [M]*[K_alpha]`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HallElt {
    pub terms: BTreeMap<(CohClass, K0Class), Scalar>,
}

impl HallElt {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(m: CohClass, k: K0Class, c: Scalar) -> Self {
        let mut e = Self::zero();
        e.add_term(m, k, c);
        e
    }

    pub fn basis(q: u32, w: &WeightData, m: CohClass) -> Self {
        Self::term(m, K0Class::zero(w), Scalar::one(q))
    }

    pub fn one(q: u32, w: &WeightData) -> Self {
        Self::basis(q, w, CohClass::zero())
    }

    pub fn torus(q: u32, k: K0Class) -> Self {
        Self::term(CohClass::zero(), k, Scalar::one(q))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: CohClass, k: K0Class, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let key = (m, k);
        match self.terms.get_mut(&key) {
            Some(x) => {
                *x += &c;
                if x.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for ((m, k), c) in &o.terms {
            r.add_term(m.clone(), k.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for ((m, k), c) in &o.terms {
            r.add_term(m.clone(), k.clone(), -c.clone());
        }
        r
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let mut r = Self::zero();
        for ((m, k), c) in &self.terms {
            r.add_term(m.clone(), k.clone(), c * s);
        }
        r
    }

    /// Multiplies every term by `[K_k]`.
    pub fn shift_k(&self, k: &K0Class) -> Self {
        let mut r = Self::zero();
        for ((m, kk), c) in &self.terms {
            r.add_term(m.clone(), kk.add(k), c.clone());
        }
        r
    }

    pub fn coeff(&self, m: &CohClass, k: &K0Class) -> Option<&Scalar> {
        self.terms.get(&(m.clone(), k.clone()))
    }

    /// One line per term, in the canonical order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for ((m, k), c) in &self.terms {
            let _ = writeln!(s, "{c} ; {} ; K={}", m.render(), render_k(k));
        }
        s
    }
}

/// Limits on what the engine is willing to enumerate.
#[derive(Clone, Debug)]
pub struct Caps {
    /// largest number of maps enumerated for one pair
    pub hom_budget: u64,
    /// most line summands in any object
    pub max_lines: usize,
    /// longest torsion part at one point
    pub max_torsion: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { hom_budget: 1 << 20, max_lines: 3, max_torsion: 8 }
    }
}

type TubeTerms = Rc<Vec<(TorsionClass, TorsionClass, Scalar)>>;
type Middles = Rc<Vec<(CohClass, BigRational)>>;

/// Product engine for one weighted projective line over `F_q`.
pub struct Engine {
    pub geo: Geometry,
    pub q: u32,
    pub caps: Caps,
    ord_tubes: RefCell<BTreeMap<u32, Rc<Tube>>>,
    products: RefCell<BTreeMap<(CohClass, CohClass), Rc<HallElt>>>,
    tube_products: RefCell<BTreeMap<(PointId, TorsionClass, TorsionClass), TubeTerms>>,
    middles: RefCell<BTreeMap<(CohClass, CohClass), Middles>>,
    p1: Option<Rc<Engine>>,
}

impl Engine {
    pub fn new(gf: Gf, w: WeightData) -> Result<Self> {
        Self::with_caps(gf, w, Caps::default())
    }

    pub fn with_caps(gf: Gf, w: WeightData, caps: Caps) -> Result<Self> {
        let q = gf.size();
        crate::qfield::check_ground(q)?;
        let p1 = if w.t() >= 3 {
            let pw = WeightData::with_lambda(&[1, 1], vec![None, Some(0)])?;
            Some(Rc::new(Self::with_caps(gf.clone(), pw, caps.clone())?))
        } else {
            None
        };
        Ok(Engine {
            geo: Geometry::new(gf, w),
            q,
            caps,
            ord_tubes: RefCell::new(BTreeMap::new()),
            products: RefCell::new(BTreeMap::new()),
            tube_products: RefCell::new(BTreeMap::new()),
            middles: RefCell::new(BTreeMap::new()),
            p1,
        })
    }

    pub fn w(&self) -> &WeightData {
        &self.geo.w
    }

    pub fn gf(&self) -> &Gf {
        &self.geo.gf
    }

    pub fn tube_at(&self, pt: &PointId) -> Rc<Tube> {
        match pt {
            PointId::Exc(i) => Rc::new(Tube::new(self.w().weight(*i), self.gf().clone())),
            PointId::Ord(f) => {
                let d = (f.len() - 1) as u32;
                self.ord_tubes
                    .borrow_mut()
                    .entry(d)
                    .or_insert_with(|| Rc::new(Tube::new(1, self.gf().extension(d).expect("extension field"))))
                    .clone()
            }
        }
    }

    pub fn class(&self, m: &CohClass) -> K0Class {
        self.geo.class_of(m)
    }

    pub fn euler(&self, a: &CohClass, b: &CohClass) -> i64 {
        self.class(a).euler(self.w(), &self.class(b))
    }

    fn torsion_k(&self, pt: &PointId, t: &TorsionClass) -> K0Class {
        self.class(&CohClass::torsion_at(pt.clone(), t.clone()))
    }

    /// `dim Hom(O(v), T)` over `F_q` for torsion `T` at one point.
    fn hom_line_torsion(&self, v: &LVec, pt: &PointId, t: &TorsionClass) -> u32 {
        match pt {
            PointId::Exc(i) => {
                let tube = self.geo.exc_tube(*i);
                tube.dimvec(t)[v.a[i - 1] as usize]
            }
            PointId::Ord(f) => (f.len() as u32 - 1) * t.length(),
        }
    }

    /// Closed-form `dim Hom(a, b)` over `F_q`.
    pub fn hom_dim(&self, a: &CohClass, b: &CohClass) -> u32 {
        let mut d = 0;
        for x in &a.lines {
            for y in &b.lines {
                d += self.geo.sec_dim(x, y) as u32;
            }
            for (p, t) in &b.torsion {
                d += self.hom_line_torsion(x, p, t);
            }
        }
        for (p, s) in &a.torsion {
            if let Some(t) = b.torsion.get(p) {
                d += p.degree() * self.tube_at(p).hom_dim(s, t);
            }
        }
        d
    }

    pub fn ext_dim(&self, a: &CohClass, b: &CohClass) -> Result<u32> {
        let e = self.hom_dim(a, b) as i64 - self.euler(a, b);
        if e < 0 {
            return Err(Error::Inconsistent(format!("negative ext between {a:?} and {b:?}")));
        }
        Ok(e as u32)
    }

    /// `|Aut M| = |Aut V| |Aut T| q^{hom(V, T)}`.
    pub fn aut_order(&self, m: &CohClass) -> BigInt {
        let q = self.q as u64;
        let mut mult: BTreeMap<&LVec, u32> = BTreeMap::new();
        for v in &m.lines {
            *mult.entry(v).or_default() += 1;
        }
        let end: u32 = m.lines.iter().map(|a| m.lines.iter().map(|b| self.geo.sec_dim(a, b) as u32).sum::<u32>()).sum();
        let semis: u32 = mult.values().map(|&k| k * k).sum();
        let mut acc = BigInt::from(q).pow(end - semis);
        for &k in mult.values() {
            acc *= gl_order(q, k);
        }
        for (p, t) in &m.torsion {
            acc *= self.tube_at(p).aut_order(t);
            for v in &m.lines {
                acc *= BigInt::from(q).pow(self.hom_line_torsion(v, p, t));
            }
        }
        acc
    }

    fn qpow(&self, k: i64) -> Scalar {
        Scalar::q_power(self.q, k)
    }

    fn rat(&self, r: BigRational) -> Scalar {
        Scalar::from_rational(self.q, r)
    }

    /// `[a]*[b]` for basis elements.
    pub fn basis_product(&self, a: &CohClass, b: &CohClass) -> Result<Rc<HallElt>> {
        let key = (a.clone(), b.clone());
        if let Some(r) = self.products.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r = Rc::new(self.compute_product(a, b)?);
        self.products.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn check_caps(&self, m: &CohClass) -> Result<()> {
        if m.rank() > self.caps.max_lines {
            return Err(Error::CapExceeded(format!("{} line summands", m.rank())));
        }
        for t in m.torsion.values() {
            if t.length() > self.caps.max_torsion {
                return Err(Error::CapExceeded(format!("torsion length {}", t.length())));
            }
        }
        Ok(())
    }

    fn compute_product(&self, a: &CohClass, b: &CohClass) -> Result<HallElt> {
        let q = self.q;
        let w = self.w();
        if a.is_zero() {
            return Ok(HallElt::basis(q, w, b.clone()));
        }
        if b.is_zero() {
            return Ok(HallElt::basis(q, w, a.clone()));
        }
        self.check_caps(a)?;
        self.check_caps(b)?;
        if a.is_torsion() && b.is_torsion() {
            return self.torsion_product(a, b);
        }
        if w.t() >= 3 && a.rank() + b.rank() >= 2 {
            let on_c = |m: &CohClass| m.rank() == 1 && m.torsion.is_empty() && m.lines[0].a.iter().all(|&x| x == 0);
            if on_c(a) && on_c(b) {
                return self.transported_product(a, b);
            }
            return Err(Error::UnsupportedSector(format!(
                "rank {} times rank {} with {} weights",
                a.rank(),
                b.rank(),
                w.t()
            )));
        }
        self.general_product(a, b)
    }

    /// Product inside one tube, as `(middle, kernel, coefficient)` triples.
    fn tube_terms(&self, pt: &PointId, a: &TorsionClass, b: &TorsionClass) -> TubeTerms {
        let key = (pt.clone(), a.clone(), b.clone());
        if let Some(r) = self.tube_products.borrow().get(&key) {
            return r.clone();
        }
        let q = self.q;
        let d = pt.degree() as i64;
        let tube = self.tube_at(pt);
        let mut out: BTreeMap<(TorsionClass, TorsionClass), Scalar> = BTreeMap::new();
        let pre = Scalar::v_power(q, -d * tube.euler(a, b));
        for ((nn, l), cnt) in tube.map_classes(a, b) {
            let e = tube.euler(&nn, &l);
            let hom = tube.hom_dim(&nn, &l) as i64;
            let base = &(&pre * &self.qpow(d * (e - hom))) * &Scalar::from_int(q, cnt as i64);
            for (m, ext) in tube.ext_middles(&nn, &l) {
                let c = &base * &Scalar::from_int(q, ext as i64);
                let slot = out.entry((m, nn.clone())).or_insert_with(|| Scalar::zero(q));
                *slot += &c;
            }
        }
        let r: TubeTerms = Rc::new(out.into_iter().filter(|(_, c)| !c.is_zero()).map(|((m, n), c)| (m, n, c)).collect());
        self.tube_products.borrow_mut().insert(key, r.clone());
        r
    }

    fn torsion_product(&self, a: &CohClass, b: &CohClass) -> Result<HallElt> {
        let q = self.q;
        let w = self.w();
        let mut pts: Vec<PointId> = a.torsion.keys().chain(b.torsion.keys()).cloned().collect();
        pts.sort();
        pts.dedup();
        let mut acc = HallElt::basis(q, w, CohClass::zero());
        for pt in pts {
            let ta = a.torsion.get(&pt).cloned().unwrap_or_default();
            let tb = b.torsion.get(&pt).cloned().unwrap_or_default();
            let local: Vec<(TorsionClass, TorsionClass, Scalar)> = if ta.is_zero() {
                vec![(tb, TorsionClass::zero(), Scalar::one(q))]
            } else if tb.is_zero() {
                vec![(ta.clone(), ta.clone(), Scalar::one(q))]
            } else {
                (*self.tube_terms(&pt, &ta, &tb)).clone()
            };
            let ka = self.torsion_k(&pt, &ta);
            let mut next = HallElt::zero();
            for ((m, k), c) in &acc.terms {
                for (mm, nn, cc) in &local {
                    let kk = k.add(&ka).sub(&self.torsion_k(&pt, nn));
                    next.add_term(m.direct_sum(&CohClass::torsion_at(pt.clone(), mm.clone())), kk, c * cc);
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Counts of `f: a -> b` by `(ker f, coker f)`.
    pub fn map_classes(&self, a: &CohClass, b: &CohClass) -> Result<BTreeMap<(CohClass, CohClass), u64>> {
        let mut ctx = PairCtx::new(&self.geo, a, b);
        self.budget(ctx.hom_dim())?;
        let mut out = BTreeMap::new();
        let mut err = None;
        for_each_combination(self.gf(), ctx.hom_dim(), |c| {
            if err.is_some() {
                return;
            }
            match ctx.classify(c, false) {
                Ok(Some(mc)) => *out.entry((mc.ker, mc.coker)).or_insert(0) += 1,
                Ok(None) => {}
                Err(e) => err = Some(e),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    fn budget(&self, dim: usize) -> Result<()> {
        match (self.q as u64).checked_pow(dim as u32) {
            Some(n) if n <= self.caps.hom_budget => Ok(()),
            _ => Err(Error::CapExceeded(format!("q^{dim} maps to enumerate"))),
        }
    }

    fn general_product(&self, a: &CohClass, b: &CohClass) -> Result<HallElt> {
        let q = self.q;
        let pre = Scalar::v_power(q, -self.euler(a, b));
        let ka = self.class(a);
        let mut out = HallElt::zero();
        for ((nn, l), cnt) in self.map_classes(a, b)? {
            let base = &(&pre * &self.qpow(self.euler(&nn, &l))) * &Scalar::from_int(q, cnt as i64);
            let k = ka.sub(&self.class(&nn));
            for (m, r) in self.middles(&nn, &l)?.iter() {
                out.add_term(m.clone(), k.clone(), &base * &self.rat(r.clone()));
            }
        }
        Ok(out)
    }

    /// `|Ext^1(n, l)_M| / |Hom(n, l)|` for every middle term `M`.
    pub fn middles(&self, nn: &CohClass, l: &CohClass) -> Result<Middles> {
        let key = (nn.clone(), l.clone());
        if let Some(r) = self.middles.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r = Rc::new(self.compute_middles(nn, l)?);
        self.middles.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn compute_middles(&self, nn: &CohClass, l: &CohClass) -> Result<Vec<(CohClass, BigRational)>> {
        let q = BigInt::from(self.q);
        let hom = self.hom_dim(nn, l);
        let ext = self.ext_dim(nn, l)?;
        let inv_hom = BigRational::new(BigInt::one(), q.pow(hom));
        if ext == 0 {
            return Ok(vec![(nn.direct_sum(l), inv_hom)]);
        }
        let out = if nn.is_torsion() && l.is_torsion() {
            self.torsion_middles(nn, l, &inv_hom)
        } else {
            if self.w().t() >= 3 && nn.rank() + l.rank() >= 2 {
                return Err(Error::UnsupportedSector("rank-two middle terms need two weights".into()));
            }
            self.general_middles(nn, l)?
        };
        let total: BigRational = out.iter().map(|x| x.1.clone()).sum::<BigRational>() * BigRational::from_integer(q.pow(hom));
        if total != BigRational::from_integer(q.pow(ext)) {
            return Err(Error::Inconsistent(format!(
                "extension count {total} != q^{ext} for {nn:?} by {l:?}"
            )));
        }
        Ok(out)
    }

    fn torsion_middles(&self, nn: &CohClass, l: &CohClass, inv_hom: &BigRational) -> Vec<(CohClass, BigRational)> {
        let mut pts: Vec<PointId> = nn.torsion.keys().chain(l.torsion.keys()).cloned().collect();
        pts.sort();
        pts.dedup();
        let mut acc: Vec<(CohClass, BigInt)> = vec![(CohClass::zero(), BigInt::one())];
        for pt in pts {
            let tn = nn.torsion.get(&pt).cloned().unwrap_or_default();
            let tl = l.torsion.get(&pt).cloned().unwrap_or_default();
            let local: Vec<(TorsionClass, u64)> = if tn.is_zero() || tl.is_zero() {
                vec![(tn.direct_sum(&tl), 1)]
            } else {
                self.tube_at(&pt).ext_middles(&tn, &tl).into_iter().collect()
            };
            let mut next = Vec::new();
            for (m, c) in &acc {
                for (mm, cc) in &local {
                    next.push((m.direct_sum(&CohClass::torsion_at(pt.clone(), mm.clone())), c * BigInt::from(*cc)));
                }
            }
            acc = next;
        }
        acc.into_iter().map(|(m, c)| (m, BigRational::from_integer(c) * inv_hom)).collect()
    }

    /// Monomorphisms `l -> m` with cokernel `nn`, counted.
    pub fn count_monos(&self, l: &CohClass, m: &CohClass, nn: &CohClass) -> Result<u64> {
        if l.is_zero() {
            return Ok(u64::from(m == nn));
        }
        let mut ctx = PairCtx::new(&self.geo, l, m);
        self.budget(ctx.hom_dim())?;
        let mut n = 0;
        let mut err = None;
        for_each_combination(self.gf(), ctx.hom_dim(), |c| {
            if err.is_some() {
                return;
            }
            match ctx.classify(c, true) {
                Ok(Some(mc)) if mc.coker == *nn => n += 1,
                Ok(_) => {}
                Err(e) => err = Some(e),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(n),
        }
    }

    /// Candidate middle terms of extensions of `nn` by `l`.
    pub fn middle_candidates(&self, nn: &CohClass, l: &CohClass) -> Vec<CohClass> {
        let w = self.w();
        let r = nn.rank() + l.rank();
        let mut pts: Vec<PointId> = nn.torsion.keys().chain(l.torsion.keys()).cloned().collect();
        pts.sort();
        pts.dedup();
        let mut tors: Vec<BTreeMap<PointId, TorsionClass>> = vec![BTreeMap::new()];
        for pt in &pts {
            let ln = nn.torsion.get(pt).map_or(0, |t| t.length());
            let ll = l.torsion.get(pt).map_or(0, |t| t.length());
            let tube = self.tube_at(pt);
            let mut opts = Vec::new();
            for len in ll..=ll + ln {
                if len == 0 {
                    opts.push(TorsionClass::zero());
                } else {
                    opts.extend(tube.modules_of_length(len));
                }
            }
            let mut next = Vec::new();
            for t in &tors {
                for o in &opts {
                    let mut t2 = t.clone();
                    if !o.is_zero() {
                        t2.insert(pt.clone(), o.clone());
                    }
                    next.push(t2);
                }
            }
            tors = next;
        }
        let total = self.class(nn).add(&self.class(l));
        let lo = nn.lines.iter().chain(&l.lines).map(|v| v.deg(w)).min().unwrap_or(0);
        let mut out = Vec::new();
        for t in tors {
            let tc = CohClass::from_parts(Vec::new(), t);
            let rest = total.sub(&self.class(&tc));
            if r == 0 {
                if rest.is_zero() {
                    out.push(tc);
                }
                continue;
            }
            for lines in self.line_sums(&rest, r, lo, None) {
                out.push(tc.direct_sum(&CohClass::from_parts(lines, BTreeMap::new())));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn line_sums(&self, x: &K0Class, r: usize, lo: i64, min: Option<&LVec>) -> Vec<Vec<LVec>> {
        let w = self.w();
        if x.rank() != r as i64 {
            return Vec::new();
        }
        let ok = |v: &LVec| v.deg(w) >= lo && min.is_none_or(|m| v >= m);
        if r == 1 {
            return self.geo.line_of_class(x).filter(|v| ok(v)).map(|v| vec![vec![v]]).unwrap_or_default();
        }
        let d = x.deg(w);
        let mut out = Vec::new();
        for deg in lo..=d - (r as i64 - 1) * lo {
            for v in LVec::of_degree(w, deg) {
                if !ok(&v) {
                    continue;
                }
                let rest = x.sub(&K0Class::line(w, &v));
                for mut tail in self.line_sums(&rest, r - 1, lo, Some(&v)) {
                    tail.insert(0, v.clone());
                    out.push(tail);
                }
            }
        }
        out
    }

    fn general_middles(&self, nn: &CohClass, l: &CohClass) -> Result<Vec<(CohClass, BigRational)>> {
        let aut_n = self.aut_order(nn);
        let mut out = Vec::new();
        for m in self.middle_candidates(nn, l) {
            let k = self.count_monos(l, &m, nn)?;
            if k > 0 {
                out.push((m.clone(), BigRational::new(BigInt::from(k) * &aut_n, self.aut_order(&m))));
            }
        }
        Ok(out)
    }

    /// Line-line products along the embedding of the projective line.
    fn transported_product(&self, a: &CohClass, b: &CohClass) -> Result<HallElt> {
        let p1 = self.p1.as_ref().expect("transport engine");
        let to = |m: &CohClass| CohClass::line(LVec::c(p1.w(), m.lines[0].l));
        let r = p1.basis_product(&to(a), &to(b))?;
        let mut out = HallElt::zero();
        for ((m, k), c) in &r.terms {
            out.add_term(self.from_p1(m)?, self.k_from_p1(k), c.clone());
        }
        Ok(out)
    }

    pub fn k_from_p1(&self, k: &K0Class) -> K0Class {
        let w = self.w();
        K0Class::o_hat(w).scale(k.o + k.oc).add(&K0Class::delta(w).scale(k.oc))
    }

    /// Image of a sheaf on the projective line.
    pub fn from_p1(&self, m: &CohClass) -> Result<CohClass> {
        let w = self.w();
        let mut out = CohClass::from_parts(m.lines.iter().map(|v| LVec::c(w, v.l)).collect(), BTreeMap::new());
        for (p, t) in &m.torsion {
            let exc = match p {
                PointId::Exc(i) => Some(*i),
                PointId::Ord(f) if f.len() == 2 => {
                    let root = self.gf().neg(f[0]);
                    w.lambda.iter().position(|x| *x == Some(root)).map(|i| i + 1)
                }
                PointId::Ord(_) => None,
            };
            let piece = match exc {
                Some(i) => {
                    let pi = w.weight(i);
                    let parts: Vec<(i64, u32)> = t.0.iter().map(|&(_, len)| (0, len * pi)).collect();
                    CohClass::torsion_at(PointId::Exc(i), TorsionClass::new(pi, &parts))
                }
                None => CohClass::torsion_at(p.clone(), t.clone()),
            };
            out = out.direct_sum(&piece);
        }
        Ok(out)
    }

    /// Bilinear extension, using that the torus is central.
    pub fn elt_product(&self, x: &HallElt, y: &HallElt) -> Result<HallElt> {
        let mut out = HallElt::zero();
        for ((m, a), c) in &x.terms {
            for ((n, b), d) in &y.terms {
                let cd = c * d;
                let ab = a.add(b);
                for ((p, g), e) in &self.basis_product(m, n)?.terms {
                    out.add_term(p.clone(), g.add(&ab), e * &cd);
                }
            }
        }
        Ok(out)
    }

    pub fn product3(&self, x: &HallElt, y: &HallElt, z: &HallElt) -> Result<HallElt> {
        self.elt_product(&self.elt_product(x, y)?, z)
    }

    /// `x y - twist y x`.
    pub fn bracket(&self, x: &HallElt, y: &HallElt, twist: &Scalar) -> Result<HallElt> {
        Ok(self.elt_product(x, y)?.sub(&self.elt_product(y, x)?.scale(twist)))
    }

    /// `[[M]] = [M] / |Aut M|`.
    pub fn normalize_dbl(&self, m: &CohClass) -> HallElt {
        let c = self.rat(BigRational::new(BigInt::one(), self.aut_order(m)));
        HallElt::term(m.clone(), K0Class::zero(self.w()), c)
    }

    pub fn basis(&self, m: CohClass) -> HallElt {
        HallElt::basis(self.q, self.w(), m)
    }

    pub fn one(&self) -> HallElt {
        HallElt::one(self.q, self.w())
    }

    pub fn torus(&self, k: K0Class) -> HallElt {
        HallElt::torus(self.q, k)
    }

    pub fn line(&self, v: LVec) -> CohClass {
        CohClass::line(v)
    }

    /// `S_{i,top}^{(len)}`.
    pub fn exc(&self, i: usize, top: i64, len: u32) -> CohClass {
        CohClass::torsion_at(PointId::Exc(i), TorsionClass::uniserial(self.w().weight(i), top, len))
    }

    pub fn exc_sum(&self, i: usize, parts: &[(i64, u32)]) -> CohClass {
        CohClass::torsion_at(PointId::Exc(i), TorsionClass::new(self.w().weight(i), parts))
    }

    /// Number of distinct basis products computed so far.
    pub fn cache_size(&self) -> usize {
        self.products.borrow().len()
    }

    pub fn sqrt_q(&self) -> Scalar {
        Scalar::v(self.q)
    }

    pub fn scalar(&self, n: i64) -> Scalar {
        Scalar::from_int(self.q, n)
    }

    pub fn zero_k(&self) -> K0Class {
        K0Class::zero(self.w())
    }

    pub fn rational(&self, r: BigRational) -> Scalar {
        self.rat(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(q: u32, p: &[u32]) -> Engine {
        let gf = Gf::ground(q).unwrap();
        let w = WeightData::new(&gf, p).unwrap();
        Engine::new(gf, w).unwrap()
    }

    #[test]
    fn simple_times_line() {
        for (q, p) in [(3, vec![2, 3]), (2, vec![2, 2])] {
            let e = engine(q, &p);
            let w = e.w().clone();
            let v = e.sqrt_q();
            let vi = v.inv().unwrap();
            for i in 1..=w.t() {
                for l in [-1, 0, 1] {
                    let o = e.line(LVec::c(&w, l));
                    let s = e.exc(i, 1, 1);
                    let so = s.direct_sum(&o);
                    let got = e.basis_product(&s, &o).unwrap();
                    let mut want = e.basis(so.clone()).scale(&vi);
                    want = want.add(&e.basis(e.line(LVec::c(&w, l).add_x(&w, i, 1))).scale(&(&v - &vi)));
                    assert_eq!(*got, want);
                    let got = e.basis_product(&o, &s).unwrap();
                    assert_eq!(*got, e.basis(so));
                    // O(lc) * S_{i,0}^{(p_i - 1)}
                    let pi = w.weight(i);
                    let t = e.exc(i, 0, pi - 1);
                    let got = e.basis_product(&o, &t).unwrap();
                    let k = K0Class::delta(&w).sub(&K0Class::simple(&w, i, 1));
                    let mut want = e.basis(t.direct_sum(&o)).scale(&vi);
                    let m = e.line(LVec::c(&w, l - 1).add_x(&w, i, 1));
                    want = want.add(&e.basis(m).shift_k(&k).scale(&(&v - &vi)));
                    assert_eq!(*got, want, "i={i} l={l}");
                }
            }
        }
    }

    #[test]
    fn exchange_bracket() {
        let e = engine(3, &[2, 2]);
        let w = e.w().clone();
        for l in [-1, 0, 1] {
            let o = e.basis(e.line(LVec::c(&w, l)));
            let s = e.basis(e.exc(1, 1, 1));
            let got = e.bracket(&o, &s, &e.sqrt_q()).unwrap();
            let want = e.basis(e.line(LVec::c(&w, l).add_x(&w, 1, 1))).scale(&e.scalar(-2));
            assert_eq!(got, want);
        }
    }

    #[test]
    fn torus_is_central_and_unit_is_neutral() {
        let e = engine(3, &[2, 2]);
        let w = e.w().clone();
        let x = e.basis(e.line(LVec::c(&w, 0))).add(&e.basis(e.exc(2, 0, 2)));
        let k = e.torus(K0Class::delta(&w).sub(&K0Class::simple(&w, 1, 1)));
        assert_eq!(e.elt_product(&k, &x).unwrap(), e.elt_product(&x, &k).unwrap());
        assert_eq!(e.elt_product(&e.one(), &x).unwrap(), x);
    }

    #[test]
    fn distinct_points_commute() {
        let e = engine(3, &[2, 2]);
        let a = e.exc(1, 0, 2);
        let b = CohClass::torsion_at(PointId::Ord(vec![2, 1]), TorsionClass::uniserial(1, 0, 1));
        let ab = e.basis_product(&a, &b).unwrap();
        assert_eq!(*ab, e.basis(a.direct_sum(&b)));
        assert_eq!(ab, e.basis_product(&b, &a).unwrap());
    }

    #[test]
    fn double_brackets() {
        let e = engine(2, &[1, 1]);
        let j = CohClass::torsion_at(PointId::Ord(vec![1, 1]), TorsionClass::new(1, &[(0, 1), (0, 1)]));
        assert_eq!(e.aut_order(&j), BigInt::from(6));
        assert_eq!(e.normalize_dbl(&CohClass::zero()), e.one());
        let e = engine(3, &[2, 2]);
        let s = e.exc(1, 1, 1);
        assert_eq!(e.normalize_dbl(&s), e.basis(s).scale(&Scalar::from_ratio(3, 1, 2)));
    }

    #[test]
    fn mixed_aut_by_brute_force() {
        let e = engine(2, &[2, 2]);
        let w = e.w().clone();
        let ms = [
            e.line(LVec::zero(&w)).direct_sum(&e.exc(1, 0, 1)),
            e.line(LVec::zero(&w)).direct_sum(&e.exc(1, 1, 2)),
            e.line(LVec::zero(&w)).direct_sum(&e.line(LVec::x(&w, 1))),
            e.line(LVec::zero(&w)).direct_sum(&e.line(LVec::zero(&w))),
        ];
        for m in ms {
            let n = e.map_classes(&m, &m).unwrap();
            let brute = n.get(&(CohClass::zero(), CohClass::zero())).copied().unwrap_or(0);
            assert_eq!(BigInt::from(brute), e.aut_order(&m), "{m:?}");
        }
    }

    #[test]
    fn line_line_products() {
        let e = engine(3, &[2, 2]);
        let w = e.w().clone();
        let a = e.line(LVec::c(&w, 0));
        let b = e.line(LVec::c(&w, 1));
        for (x, y) in [(&a, &b), (&b, &a)] {
            let r = e.basis_product(x, y).unwrap();
            let lhs = e.class(x).add(&e.class(y));
            for (m, k) in r.terms.keys() {
                assert_eq!(e.class(m).add(&k.scale(2)), lhs);
            }
        }
    }

    #[test]
    fn small_associativity() {
        let e = engine(3, &[2, 2]);
        let w = e.w().clone();
        let gens = [
            e.basis(e.line(LVec::c(&w, 0))),
            e.basis(e.exc(1, 1, 1)),
            e.basis(e.exc(2, 0, 1)),
            e.basis(e.line(LVec::c(&w, -1))),
        ];
        for x in &gens {
            for y in &gens {
                for z in &gens {
                    let lines: usize = [x, y, z].iter().map(|g| g.terms.keys().next().unwrap().0.rank()).sum();
                    if lines > 2 {
                        continue;
                    }
                    let l = e.elt_product(&e.elt_product(x, y).unwrap(), z).unwrap();
                    let r = e.elt_product(x, &e.elt_product(y, z).unwrap()).unwrap();
                    assert_eq!(l, r);
                }
            }
        }
    }
}
