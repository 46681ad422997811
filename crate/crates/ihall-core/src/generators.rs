//! Drinfeld-type generators inside the iHall algebra.
//!
//! Star generators come from line bundles and sections. Branch generators are
//! seeded by `B_{j,0}`, `B_{j,-1}` and `Theta_{j,1}` in the exceptional tube and
//! bootstrapped with the loop relations; every relation instance used that way
//! is recorded.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::groundfield::{ordinary_points, FqElem, PointId};
use crate::ihallcore::{CohClass, Engine, HallElt};
use crate::lattice::{K0Class, LVec};
use crate::linalg::for_each_combination;
use crate::qfield::Scalar;
use crate::tube::{mrd_sets, partitions, MrdKind, TorsionClass, Tube};

/// A vertex of the star-shaped graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Star,
    Branch(usize, usize),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Star => f.write_str("star"),
            Vertex::Branch(i, j) => write!(f, "[{i},{j}]"),
        }
    }
}

impl Vertex {
    /// Parses `star` or `[i,j]` (brackets optional).
    pub fn parse(s: &str) -> Result<Vertex> {
        let t = s.trim();
        if t == "star" || t == "*" {
            return Ok(Vertex::Star);
        }
        let inner = t.trim_start_matches('[').trim_end_matches(']');
        let mut it = inner.split(',').map(|x| x.trim().parse::<usize>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(i)), Some(Ok(j)), None) => Ok(Vertex::Branch(i, j)),
            _ => Err(Error::UnknownVertex(String::from(s))),
        }
    }
}

/// A relation instance, as recorded by the bootstrap.
///
/// `params` follow the verifier's order: `[m, l]` for iDR2, `[k, l]` for iDR3b.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelTag {
    pub id: &'static str,
    pub mu: Vertex,
    pub nu: Vertex,
    pub params: Vec<i64>,
}

type Table = RefCell<BTreeMap<(Vertex, i64), Rc<HallElt>>>;

/// Generator table over one engine. Entries are built on first use.
pub struct GeneratorSet {
    eng: Rc<Engine>,
    b: Table,
    theta: Table,
    h: Table,
    consumed: RefCell<BTreeSet<RelTag>>,
}

impl GeneratorSet {
    pub fn new(eng: Rc<Engine>) -> Self {
        GeneratorSet {
            eng,
            b: RefCell::new(BTreeMap::new()),
            theta: RefCell::new(BTreeMap::new()),
            h: RefCell::new(BTreeMap::new()),
            consumed: RefCell::new(BTreeSet::new()),
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.eng
    }

    pub fn engine_rc(&self) -> Rc<Engine> {
        self.eng.clone()
    }

    fn q(&self) -> u32 {
        self.eng.q
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let w = self.eng.w();
        let mut out = alloc::vec![Vertex::Star];
        for i in 1..=w.t() {
            for j in 1..w.weight(i) as usize {
                out.push(Vertex::Branch(i, j));
            }
        }
        out
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if let Vertex::Branch(i, j) = v {
            let w = self.eng.w();
            if i == 0 || i > w.t() || j == 0 || j >= w.weight(i) as usize {
                return Err(Error::UnknownVertex(format!("{v}")));
            }
        }
        Ok(())
    }

    /// Generalized Cartan matrix of the star-shaped graph.
    pub fn cartan(&self, a: Vertex, b: Vertex) -> i64 {
        match (a, b) {
            _ if a == b => 2,
            (Vertex::Star, Vertex::Branch(_, 1)) | (Vertex::Branch(_, 1), Vertex::Star) => -1,
            (Vertex::Branch(i, j), Vertex::Branch(k, l)) if i == k && j.abs_diff(l) == 1 => -1,
            _ => 0,
        }
    }

    /// `alpha_v`: the class of `O` at the star, of `S_{ij}` on a branch.
    pub fn alpha(&self, v: Vertex) -> K0Class {
        let w = self.eng.w();
        match v {
            Vertex::Star => K0Class::o_hat(w),
            Vertex::Branch(i, j) => K0Class::simple(w, i, j as i64),
        }
    }

    pub fn delta(&self) -> K0Class {
        K0Class::delta(self.eng.w())
    }

    /// `[K_{k delta + alpha_v}]`.
    pub fn k_shift(&self, v: Option<Vertex>, k: i64) -> K0Class {
        let d = self.delta().scale(k);
        match v {
            Some(v) => d.add(&self.alpha(v)),
            None => d,
        }
    }

    /// `Theta_{v,0} = 1/(sqrt q - 1/sqrt q)`.
    pub fn theta0(&self) -> HallElt {
        let q = self.q();
        let c = (&Scalar::v(q) - &Scalar::v_power(q, -1)).inv().expect("nonzero");
        self.eng.one().scale(&c)
    }

    fn tag(&self, id: &'static str, v: Vertex, params: &[i64]) {
        self.consumed.borrow_mut().insert(RelTag { id, mu: v, nu: v, params: params.to_vec() });
    }

    pub fn consumed(&self) -> Vec<RelTag> {
        self.consumed.borrow().iter().cloned().collect()
    }

    pub fn is_consumed(&self, t: &RelTag) -> bool {
        self.consumed.borrow().contains(t)
    }

    /// Every generator built so far, as `(kind, vertex, index, value)` with
    /// kind one of `B`, `Theta`, `H`.
    pub fn memoized(&self) -> Vec<(&'static str, Vertex, i64, Rc<HallElt>)> {
        let mut out = Vec::new();
        for (name, t) in [("B", &self.b), ("Theta", &self.theta), ("H", &self.h)] {
            for (&(v, k), x) in t.borrow().iter() {
                out.push((name, v, k, x.clone()));
            }
        }
        out
    }

    fn memo(
        &self,
        table: &Table,
        key: (Vertex, i64),
        f: impl FnOnce() -> Result<HallElt>,
    ) -> Result<Rc<HallElt>> {
        if let Some(x) = table.borrow().get(&key) {
            return Ok(x.clone());
        }
        let x = Rc::new(f()?);
        table.borrow_mut().insert(key, x.clone());
        Ok(x)
    }

    /// `B_{v,l}` in hat normalization.
    pub fn b(&self, v: Vertex, l: i64) -> Result<Rc<HallElt>> {
        self.check_vertex(v)?;
        self.memo(&self.b, (v, l), || match v {
            Vertex::Star => Ok(self.eng.basis(CohClass::line(LVec::c(self.eng.w(), l)))),
            Vertex::Branch(i, j) => self.branch_b(i, j, l),
        })
    }

    /// `Theta_{v,r}`; zero for `r < 0` and constant for `r = 0`.
    pub fn theta(&self, v: Vertex, r: i64) -> Result<Rc<HallElt>> {
        self.check_vertex(v)?;
        if r < 0 {
            return Ok(Rc::new(HallElt::zero()));
        }
        if r == 0 {
            return Ok(Rc::new(self.theta0()));
        }
        self.memo(&self.theta, (v, r), || match v {
            Vertex::Star => self.theta_star(r as u32, 0),
            Vertex::Branch(i, j) => self.branch_theta(i, j, r),
        })
    }

    /// `H_{v,m}` for `m >= 1`. The star uses the point formula, branches the
    /// logarithm of the theta series.
    pub fn h(&self, v: Vertex, m: i64) -> Result<Rc<HallElt>> {
        self.check_vertex(v)?;
        if m < 1 {
            return Err(Error::Inconsistent(format!("H index {m}")));
        }
        self.memo(&self.h, (v, m), || match v {
            Vertex::Star => self.h_star(m as u32),
            Vertex::Branch(..) => self.h_from_theta(v, m as u32),
        })
    }

    // ---- star side -------------------------------------------------------

    /// `1/((q-1)^2 sqrt(q)^{m-1}) sum_{0 != f: O(sc) -> O((m+s)c)} [coker f]`.
    pub fn theta_star(&self, m: u32, s: i64) -> Result<HallElt> {
        if m == 0 {
            return Ok(self.theta0());
        }
        let w = self.eng.w();
        self.section_sum(&LVec::c(w, s), &LVec::c(w, s + m as i64), m as i64)
    }

    /// `1/((q-1)^2 sqrt(q)^{m-1}) sum_{0 != f: O(a) -> O(b)} [coker f]`.
    pub fn section_sum(&self, a: &LVec, b: &LVec, m: i64) -> Result<HallElt> {
        let eng = &self.eng;
        let q = self.q();
        let n = eng.geo.sec_dim(a, b);
        let total = (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
        if total > eng.caps.hom_budget {
            return Err(Error::CapExceeded(format!("{total} sections")));
        }
        let mut counts: BTreeMap<CohClass, i64> = BTreeMap::new();
        let mut err = None;
        for_each_combination(eng.gf(), n, |c: &[FqElem]| {
            if err.is_some() || c.iter().all(|&x| x == 0) {
                return;
            }
            let sec = eng.geo.section_from(a, b, c.to_vec());
            match eng.geo.cokernel_of_section(a, b, &sec) {
                Ok(t) => *counts.entry(t).or_default() += 1,
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let qm1 = BigInt::from(q) - 1;
        let pre = &Scalar::from_rational(q, BigRational::new(BigInt::one(), &qm1 * &qm1)) * &Scalar::v_power(q, 1 - m);
        let mut out = HallElt::zero();
        for (t, k) in counts {
            out.add_term(t, eng.zero_k(), &pre * &Scalar::from_int(q, k));
        }
        Ok(out)
    }

    /// Closed points of the projective line whose degree divides `m`, with
    /// the index of the marked point they are, if any.
    pub fn p1_points(&self, m: u32) -> Vec<(PointId, Option<usize>)> {
        let eng = &self.eng;
        let w = eng.w();
        let mut out: Vec<(PointId, Option<usize>)> = (1..=w.t()).map(|i| (PointId::Exc(i), Some(i))).collect();
        for d in 1..=m {
            if m.is_multiple_of(d) {
                for p in ordinary_points(eng.gf(), &w.lambda, d as usize) {
                    out.push((p, None));
                }
            }
        }
        out
    }

    /// `S_x^{(lambda)}` pushed into the weighted line.
    fn embed_partition(&self, x: &PointId, marked: Option<usize>, lam: &[u32]) -> CohClass {
        let w = self.eng.w();
        match marked {
            Some(i) => {
                let p = w.weight(i);
                let parts: Vec<(i64, u32)> = lam.iter().map(|&r| (0, r * p)).collect();
                CohClass::torsion_at(PointId::Exc(i), TorsionClass::new(p, &parts))
            }
            None => {
                let parts: Vec<(i64, u32)> = lam.iter().map(|&r| (0, r)).collect();
                CohClass::torsion_at(x.clone(), TorsionClass::new(1, &parts))
            }
        }
    }

    /// The point contribution `H_{x,m}`, including its torus term.
    pub fn h_point(&self, x: &PointId, marked: Option<usize>, m: u32) -> Result<HallElt> {
        let eng = &self.eng;
        let q = self.q();
        let dx = x.degree();
        if m == 0 || !m.is_multiple_of(dx) {
            return Ok(HallElt::zero());
        }
        let jordan = match marked {
            Some(_) => Rc::new(Tube::new(1, eng.gf().clone())),
            None => eng.tube_at(x),
        };
        let qm = &Scalar::quantum_int(q, m as i64) / &Scalar::from_int(q, m as i64);
        let pre = &qm * &Scalar::from_int(q, dx as i64);
        let mut out = HallElt::zero();
        for lam in partitions(m / dx) {
            let parts: Vec<(i64, u32)> = lam.iter().map(|&r| (0, r)).collect();
            let aut = jordan.aut_order(&TorsionClass::new(1, &parts));
            let nx = Scalar::n_factor(q, lam.len() as u32 - 1, dx);
            let c = &(&pre * &nx) * &Scalar::from_rational(q, BigRational::new(BigInt::one(), aut));
            out.add_term(self.embed_partition(x, marked, &lam), eng.zero_k(), c);
        }
        if (m / dx).is_multiple_of(2) {
            let half = (m / 2) as i64;
            let c = &(&Scalar::from_int(q, dx as i64) * &Scalar::v_power(q, -half))
                * &(&Scalar::quantum_int(q, half) / &Scalar::from_int(q, m as i64));
            out.add_term(CohClass::zero(), self.delta().scale(half), -c);
        }
        Ok(out)
    }

    /// `H_{star,m}` by the global formula (not summed over points).
    pub fn h_star(&self, m: u32) -> Result<HallElt> {
        let eng = &self.eng;
        let q = self.q();
        let qm = &Scalar::quantum_int(q, m as i64) / &Scalar::from_int(q, m as i64);
        let mut out = HallElt::zero();
        for (x, marked) in self.p1_points(m) {
            let dx = x.degree();
            if !m.is_multiple_of(dx) {
                continue;
            }
            let jordan = match marked {
                Some(_) => Rc::new(Tube::new(1, eng.gf().clone())),
                None => eng.tube_at(&x),
            };
            for lam in partitions(m / dx) {
                let parts: Vec<(i64, u32)> = lam.iter().map(|&r| (0, r)).collect();
                let aut = jordan.aut_order(&TorsionClass::new(1, &parts));
                let c = &(&(&qm * &Scalar::from_int(q, dx as i64)) * &Scalar::n_factor(q, lam.len() as u32 - 1, dx))
                    * &Scalar::from_rational(q, BigRational::new(BigInt::one(), aut));
                out.add_term(self.embed_partition(&x, marked, &lam), eng.zero_k(), c);
            }
        }
        if m.is_multiple_of(2) {
            out.add_term(CohClass::zero(), self.delta().scale(m as i64 / 2), -qm);
        }
        Ok(out)
    }

    /// `sum_x H_{x,m}`.
    pub fn h_star_by_points(&self, m: u32) -> Result<HallElt> {
        let mut out = HallElt::zero();
        for (x, marked) in self.p1_points(m) {
            out = out.add(&self.h_point(&x, marked, m)?);
        }
        Ok(out)
    }

    // ---- series ----------------------------------------------------------

    /// `H_{v,m}` from `Theta_{v,1..m}` through the logarithm of the theta series.
    pub fn h_from_theta(&self, v: Vertex, m: u32) -> Result<HallElt> {
        let th: Vec<Rc<HallElt>> = (0..=m as i64).map(|r| self.theta(v, r)).collect::<Result<_>>()?;
        let e: Vec<HallElt> = th.iter().map(|x| x.as_ref().clone()).collect();
        let g = self.log_series(&e, m)?;
        Ok(g[m as usize].scale(&self.vdiff_inv()))
    }

    /// `Theta_{v,m}` from `H_{v,1..m}` through the exponential.
    pub fn theta_from_h(&self, v: Vertex, m: u32) -> Result<HallElt> {
        let mut h = alloc::vec![HallElt::zero()];
        for k in 1..=m as i64 {
            h.push(self.h(v, k)?.as_ref().clone());
        }
        let e = self.exp_series(&h, m)?;
        Ok(e[m as usize].clone())
    }

    fn vdiff(&self) -> Scalar {
        let q = self.q();
        &Scalar::v(q) - &Scalar::v_power(q, -1)
    }

    fn vdiff_inv(&self) -> Scalar {
        self.vdiff().inv().expect("nonzero")
    }

    /// Given theta coefficients `t_0..t_m`, returns `g_k` with
    /// `sum (v - 1/v) t_k u^k = exp(sum g_k u^k)`, `g_0 = 0`.
    pub fn log_series(&self, t: &[HallElt], m: u32) -> Result<Vec<HallElt>> {
        let q = self.q();
        let vd = self.vdiff();
        let e: Vec<HallElt> = t.iter().map(|x| x.scale(&vd)).collect();
        let mut g = alloc::vec![HallElt::zero()];
        for n in 1..=m as usize {
            let mut acc = e[n].scale(&Scalar::from_int(q, n as i64));
            for k in 1..n {
                let p = self.eng.elt_product(&g[k], &e[n - k])?;
                acc = acc.sub(&p.scale(&Scalar::from_int(q, k as i64)));
            }
            g.push(acc.scale(&Scalar::from_ratio(q, 1, n as i64)));
        }
        Ok(g)
    }

    /// Given `h_1..h_m` (index 0 ignored), returns `theta_0..theta_m`.
    pub fn exp_series(&self, h: &[HallElt], m: u32) -> Result<Vec<HallElt>> {
        let q = self.q();
        let vd = self.vdiff();
        let g: Vec<HallElt> = h.iter().map(|x| x.scale(&vd)).collect();
        let mut e = alloc::vec![self.eng.one()];
        for n in 1..=m as usize {
            let mut acc = HallElt::zero();
            for k in 1..=n {
                let p = self.eng.elt_product(&g[k], &e[n - k])?;
                acc = acc.add(&p.scale(&Scalar::from_int(q, k as i64)));
            }
            e.push(acc.scale(&Scalar::from_ratio(q, 1, n as i64)));
        }
        let vi = self.vdiff_inv();
        Ok(e.into_iter().map(|x| x.scale(&vi)).collect())
    }

    // ---- branch side -----------------------------------------------------

    fn tube(&self, i: usize) -> &Tube {
        self.eng.geo.exc_tube(i)
    }

    fn at(&self, i: usize, t: TorsionClass) -> CohClass {
        CohClass::torsion_at(PointId::Exc(i), t)
    }

    /// Classes of class `dv` with socle among `S_1, ..., S_j` (`S_n = S_0`).
    pub fn socle_bounded(&self, i: usize, j: u32, dv: &[u32]) -> Vec<TorsionClass> {
        let tube = self.tube(i);
        let n = tube.n as i64;
        tube.modules_with_dimvec(dv)
            .into_iter()
            .filter(|m| {
                m.0.iter().all(|&(top, len)| {
                    let s = (top as i64 - len as i64 + 1).rem_euclid(n);
                    let s = if s == 0 { n } else { s };
                    s <= j as i64
                })
            })
            .collect()
    }

    fn signed_sum(&self, i: usize, ms: &[TorsionClass]) -> HallElt {
        let q = self.q();
        let tube = self.tube(i);
        let mut out = HallElt::zero();
        for m in ms {
            let sign = if tube.hom_dim(m, m).is_multiple_of(2) { 1 } else { -1 };
            out.add_term(self.at(i, m.clone()), self.eng.zero_k(), Scalar::from_int(q, sign));
        }
        out
    }

    /// `pi_{j,1}` in the tube at branch `i`; `pi_{0,1} = 0`.
    pub fn pi1(&self, i: usize, j: u32) -> HallElt {
        if j == 0 {
            return HallElt::zero();
        }
        let q = self.q();
        let n = self.tube(i).n as usize;
        let ms = self.socle_bounded(i, j, &alloc::vec![1; n]);
        let c = -&(&Scalar::v_power(q, -(j as i64)) * &self.vdiff_inv());
        self.signed_sum(i, &ms).scale(&c)
    }

    /// Seed `B_{[i,j],-1}`.
    pub fn b_minus_one(&self, i: usize, j: usize) -> HallElt {
        let q = self.q();
        let n = self.tube(i).n as usize;
        let mut dv = alloc::vec![1; n];
        dv[j] = 0;
        let ms = self.socle_bounded(i, j as u32 + 1, &dv);
        let k = self.alpha(Vertex::Branch(i, j)).sub(&self.delta());
        self.signed_sum(i, &ms).scale(&Scalar::v_power(q, 1 - j as i64)).shift_k(&k)
    }

    /// Seed `Theta_{[i,j],1} = pi_{j+1} - (v + 1/v) pi_j + pi_{j-1}`.
    pub fn theta_one(&self, i: usize, j: usize) -> HallElt {
        let q = self.q();
        let j = j as u32;
        let mid = &Scalar::v(q) + &Scalar::v_power(q, -1);
        self.pi1(i, j + 1).sub(&self.pi1(i, j).scale(&mid)).add(&self.pi1(i, j - 1))
    }

    fn branch_b(&self, i: usize, j: usize, l: i64) -> Result<HallElt> {
        let v = Vertex::Branch(i, j);
        let eng = &self.eng;
        let q = self.q();
        let inv2 = Scalar::quantum_int(q, 2).inv()?;
        let one = Scalar::one(q);
        match l {
            0 => Ok(eng.basis(eng.exc(i, j as i64, 1))),
            -1 => Ok(self.b_minus_one(i, j)),
            l if l > 0 => {
                // [Theta_1, B_{l-1}] = [2] B_l - [2] B_{l-2} C
                let th = self.theta(v, 1)?;
                let prev = self.b(v, l - 1)?;
                let br = eng.bracket(&th, &prev, &one)?;
                self.tag("iDR2", v, &[1, l - 1]);
                Ok(br.scale(&inv2).add(&self.b(v, l - 2)?.shift_k(&self.delta())))
            }
            _ => {
                // [Theta_1, B_{l+1}] = [2] B_{l+2} - [2] B_l C
                let th = self.theta(v, 1)?;
                let next = self.b(v, l + 1)?;
                let br = eng.bracket(&th, &next, &one)?;
                self.tag("iDR2", v, &[1, l + 1]);
                let x = self.b(v, l + 2)?.sub(&br.scale(&inv2));
                Ok(x.shift_k(&self.delta().scale(-1)))
            }
        }
    }

    fn branch_theta(&self, i: usize, j: usize, r: i64) -> Result<HallElt> {
        if r == 1 {
            return Ok(self.theta_one(i, j));
        }
        // iDR3b with k = 0, l = r - 1, solved for Theta_r.
        let v = Vertex::Branch(i, j);
        let eng = &self.eng;
        let q = self.q();
        let (b0, b1) = (self.b(v, 0)?, self.b(v, 1)?);
        let (br, brm) = (self.b(v, r)?, self.b(v, r - 1)?);
        let lhs = eng
            .bracket(&b0, &br, &Scalar::v_power(q, -2))?
            .sub(&eng.bracket(&b1, &brm, &Scalar::v_power(q, 2))?.scale(&Scalar::v_power(q, -2)));
        let oq = Scalar::from_int(q, 1 - q as i64);
        let norm = lhs.scale(&(&oq * &oq).inv()?);
        let alpha = self.alpha(v);
        let mut x = norm.shift_k(&alpha.scale(-1)).scale(&Scalar::v_power(q, 2));
        x = x.add(&self.theta(v, r - 2)?.shift_k(&self.delta()).scale(&Scalar::v_power(q, -2)));
        x = x.sub(&self.theta(v, 2 - r)?.shift_k(&self.delta().scale(r - 1)));
        self.tag("iDR3b", v, &[0, r - 1]);
        Ok(x)
    }

    // ---- closed forms ----------------------------------------------------

    /// `(B_{[i,1],r}, B_{[i,1],-r}, Theta_{[i,1],r})` from the root sets.
    pub fn theorem_b_closed_forms(&self, i: usize, r: u32) -> Result<(HallElt, HallElt, HallElt)> {
        let eng = &self.eng;
        let q = self.q();
        let p = self.eng.w().weight(i);
        if p < 2 {
            return Err(Error::UnknownVertex(format!("[{i},1]")));
        }
        if r * p + 1 > eng.caps.max_torsion {
            return Err(Error::CapExceeded(format!("root sets at r = {r}")));
        }
        let nn = |l: usize| Scalar::n_factor(q, l as u32, 1);
        let weighted = |kind: MrdKind, shift: u32| -> HallElt {
            let mut out = HallElt::zero();
            for m in mrd_sets(kind, p, r) {
                let c = self.at(i, m);
                let ell = c.torsion.values().map(|t| t.ell()).sum::<usize>();
                let x = eng.normalize_dbl(&c).scale(&nn(ell - shift as usize));
                out = out.add(&x);
            }
            out
        };
        let qm1 = Scalar::from_int(q, q as i64 - 1);
        let plus = weighted(MrdKind::RealPlus, 1).scale(&qm1);
        let k = self.delta().scale(-(r as i64)).add(&self.alpha(Vertex::Branch(i, 1)));
        let minus = weighted(MrdKind::RealMinus, 1).scale(&-&qm1).shift_k(&k);
        let mut theta = HallElt::zero();
        for lam in partitions(r) {
            let parts: Vec<(i64, u32)> = lam.iter().map(|&x| (0, x * p)).collect();
            let c = self.at(i, TorsionClass::new(p, &parts));
            theta = theta.add(&eng.normalize_dbl(&c).scale(&nn(lam.len())));
        }
        theta = theta.scale(&(&Scalar::v(q) / &qm1));
        theta = theta.add(&weighted(MrdKind::Imaginary, 1).scale(&Scalar::v_power(q, -1)));
        Ok((plus, minus, theta))
    }

    // ---- Serre -----------------------------------------------------------

    fn s_hat(&self, k1: i64, k2: i64, l: i64, mu: Vertex, nu: Vertex) -> Result<HallElt> {
        let eng = &self.eng;
        let (a, b, c) = (self.b(mu, k1)?, self.b(mu, k2)?, self.b(nu, l)?);
        let t1 = eng.product3(&a, &b, &c)?;
        let t2 = eng.product3(&a, &c, &b)?;
        let t3 = eng.product3(&c, &a, &b)?;
        Ok(t1.sub(&t2.scale(&Scalar::quantum_int(self.q(), 2))).add(&t3))
    }

    fn r_hat(&self, k1: i64, k2: i64, l: i64, mu: Vertex, nu: Vertex) -> Result<HallElt> {
        let eng = &self.eng;
        let q = self.q();
        let two = Scalar::quantum_int(q, 2);
        let vm2 = Scalar::v_power(q, -2);
        let d = k2 - k1;
        let delta = self.delta();
        let mut inner = HallElt::zero();
        let mut p = 0;
        while d - 2 * p > 0 {
            let br = eng.bracket(&*self.theta(mu, d - 2 * p - 1)?, &*self.b(nu, l - 1)?, &vm2)?;
            let c = &Scalar::v_power(q, 2 * p) * &two;
            inner = inner.sub(&br.scale(&c).shift_k(&delta.scale(p + 1)));
            p += 1;
        }
        let mut p = 1;
        while d - 2 * p >= 0 {
            let br = eng.bracket(&*self.b(nu, l)?, &*self.theta(mu, d - 2 * p)?, &vm2)?;
            let c = &Scalar::v_power(q, 2 * p - 1) * &two;
            inner = inner.sub(&br.scale(&c).shift_k(&delta.scale(p)));
            p += 1;
        }
        if d >= 0 {
            inner = inner.sub(&eng.bracket(&*self.b(nu, l)?, &*self.theta(mu, d)?, &vm2)?);
        }
        Ok(inner.shift_k(&self.k_shift(Some(mu), k1)))
    }

    /// Both sides of the Serre relation: `(S(k1,k2|l), (1-q)^2 R(k1,k2|l))`.
    pub fn serre_terms(&self, k1: i64, k2: i64, l: i64, mu: Vertex, nu: Vertex) -> Result<(HallElt, HallElt)> {
        let q = self.q();
        let mut s = self.s_hat(k1, k2, l, mu, nu)?;
        let mut r = self.r_hat(k1, k2, l, mu, nu)?;
        if k1 != k2 {
            s = s.add(&self.s_hat(k2, k1, l, mu, nu)?);
            r = r.add(&self.r_hat(k2, k1, l, mu, nu)?);
        }
        let oq = Scalar::from_int(q, 1 - q as i64);
        Ok((s, r.scale(&(&oq * &oq))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundfield::Gf;
    use crate::ihallcore::Caps;
    use crate::lattice::WeightData;

    fn gens(q: u32, p: &[u32]) -> GeneratorSet {
        let gf = Gf::ground(q).unwrap();
        let w = WeightData::new(&gf, p).unwrap();
        let caps = Caps { max_torsion: 12, ..Caps::default() };
        GeneratorSet::new(Rc::new(Engine::with_caps(gf, w, caps).unwrap()))
    }

    fn sc(q: u32, a: i64, b: i64) -> Scalar {
        Scalar::from_ratio(q, a, b)
    }

    #[test]
    fn tube_closed_forms() {
        for &(q, n) in &[(2u32, 2u32), (2, 3), (3, 2), (3, 3)] {
            let g = gens(q, &[n, 1]);
            let e = g.engine();
            let v = Vertex::Branch(1, 1);
            let s = Scalar::v(q);
            let si = Scalar::v_power(q, -1);
            let inv = sc(q, 1, q as i64 - 1);
            let mut th = HallElt::zero();
            th.add_term(e.exc(1, 1, n), e.zero_k(), &inv * &si);
            th.add_term(e.exc_sum(1, &[(0, n - 1), (1, 1)]), e.zero_k(), -&(&inv * &si));
            th.add_term(e.exc(1, 0, n), e.zero_k(), -&(&inv * &s));
            assert_eq!(*g.theta(v, 1).unwrap(), th, "Theta11 q={q} n={n}");

            let k = g.alpha(v).sub(&g.delta());
            let bm1 = HallElt::term(e.exc(1, 0, n - 1), k.clone(), Scalar::from_int(q, -1));
            assert_eq!(*g.b(v, -1).unwrap(), bm1);

            let mut b1 = HallElt::zero();
            b1.add_term(e.exc(1, 1, n + 1), e.zero_k(), sc(q, 1, q as i64));
            b1.add_term(e.exc_sum(1, &[(1, 1), (0, n)]), e.zero_k(), sc(q, -1, q as i64));
            assert_eq!(*g.b(v, 1).unwrap(), b1);

            let k2 = g.alpha(v).sub(&g.delta().scale(2));
            let mut bm2 = HallElt::zero();
            bm2.add_term(e.exc(1, 0, 2 * n - 1), k2.clone(), sc(q, -1, q as i64));
            bm2.add_term(e.exc_sum(1, &[(0, n), (0, n - 1)]), k2, sc(q, 1, q as i64));
            assert_eq!(*g.b(v, -2).unwrap(), bm2);
        }
    }

    #[test]
    fn consumed_instances_are_tagged() {
        let g = gens(2, &[2, 1]);
        let v = Vertex::Branch(1, 1);
        g.b(v, 2).unwrap();
        g.theta(v, 2).unwrap();
        let c = g.consumed();
        assert!(c.contains(&RelTag { id: "iDR2", mu: v, nu: v, params: alloc::vec![1, 0] }));
        assert!(c.contains(&RelTag { id: "iDR2", mu: v, nu: v, params: alloc::vec![1, 1] }));
        assert!(c.contains(&RelTag { id: "iDR3b", mu: v, nu: v, params: alloc::vec![0, 1] }));
    }

    #[test]
    fn theta_star_small() {
        let g = gens(2, &[1, 1]);
        let e = g.engine();
        let th = g.theta(Vertex::Star, 1).unwrap();
        assert_eq!(th.len(), 3);
        for c in th.terms.values() {
            assert_eq!(*c, Scalar::one(2));
        }
        assert!(g.theta(Vertex::Star, -1).unwrap().is_zero());
        assert_eq!(*g.theta(Vertex::Star, 0).unwrap(), g.theta0());
        let _ = e;
    }

    #[test]
    fn theta_star_twist_free() {
        for &(q, ref p) in &[(2u32, alloc::vec![1u32, 1]), (3, alloc::vec![2, 2])] {
            let g = gens(q, p);
            for m in 1..=2 {
                assert_eq!(g.theta_star(m, 0).unwrap(), g.theta_star(m, 1).unwrap());
            }
        }
    }

    #[test]
    fn h_star_point_decomposition_and_series() {
        for &(q, ref p) in &[(2u32, alloc::vec![1u32, 1]), (3, alloc::vec![2, 2])] {
            let g = gens(q, p);
            for m in 1..=2 {
                assert_eq!(g.h_star(m).unwrap(), g.h_star_by_points(m).unwrap());
                assert_eq!(g.h_from_theta(Vertex::Star, m).unwrap(), *g.h(Vertex::Star, m as i64).unwrap());
            }
        }
    }

    #[test]
    fn theorem_b_first_level() {
        for &(q, n) in &[(2u32, 2u32), (3, 3)] {
            let g = gens(q, &[n, 1]);
            let v = Vertex::Branch(1, 1);
            let (p, m, t) = g.theorem_b_closed_forms(1, 1).unwrap();
            assert_eq!(p, *g.b(v, 1).unwrap());
            assert_eq!(m, *g.b(v, -1).unwrap());
            assert_eq!(t, *g.theta(v, 1).unwrap());
        }
    }

    #[test]
    fn serre_diagonal_special_form() {
        let g = gens(3, &[3, 1]);
        let (mu, nu) = (Vertex::Branch(1, 1), Vertex::Branch(1, 2));
        let (_, r) = g.serre_terms(0, 0, 0, mu, nu).unwrap();
        let q = 3;
        let oq = Scalar::from_int(q, -2);
        let want = g
            .b(nu, 0)
            .unwrap()
            .shift_k(&g.k_shift(Some(mu), 0))
            .scale(&-&(&Scalar::v_power(q, -1) * &(&oq * &oq)));
        assert_eq!(r, want);
    }
}
