//! Closed-form character families: unitary minimal models, free fermions,
//! the adjoint fermion products, scaled lattices and their Z2 orbifolds, and
//! W-algebra characters of diagonal cosets.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::affine::build_root_system;
use crate::error::{QError, QResult};
use crate::matrix::RMat;
use crate::qseries::{
    eta_quotient, lattice_points_below, EtaQuotientSpec, Monomial, MultiSeries, QSeries,
};
use crate::rat::{parse_rat, r, ri, scale_mat, to_f64, Rat};

/// A unitary Virasoro module L(c(m), h_{r,s}).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinimalModule {
    pub m: i64,
    pub r: i64,
    pub s: i64,
}

impl MinimalModule {
    pub fn new(m: i64, r: i64, s: i64) -> QResult<Self> {
        check_range(m, r, s)?;
        Ok(Self { m, r, s })
    }

    pub fn data(&self) -> QResult<(Rat, Rat)> {
        minimal_data(self.m, self.r, self.s)
    }

    /// Find (m, r, s) realising the pair (c, h).
    pub fn from_ch(c: &Rat, h: &Rat) -> QResult<Self> {
        // c = 1 - 6/((m+2)(m+3)) pins down m
        let one = ri(1);
        if c >= &one || c.is_negative() {
            return Err(QError::InvalidArgument(format!("no unitary minimal model with c = {c}")));
        }
        let prod = ri(6) / (&one - c);
        if !prod.is_integer() {
            return Err(QError::InvalidArgument(format!("no unitary minimal model with c = {c}")));
        }
        let p = crate::rat::num_i64(&prod).ok_or(QError::Overflow("minimal model lookup"))?;
        let m = ((((4 * p + 1) as f64).sqrt() - 5.0) / 2.0).round() as i64;
        if m < 1 || (m + 2) * (m + 3) != p {
            return Err(QError::InvalidArgument(format!("no unitary minimal model with c = {c}")));
        }
        for rr in 1..=m + 1 {
            for ss in 1..=m + 2 {
                if &minimal_data(m, rr, ss)?.1 == h {
                    return Ok(Self { m, r: rr, s: ss });
                }
            }
        }
        Err(QError::InvalidArgument(format!("h = {h} is not a weight of the c = {c} minimal model")))
    }
}

impl fmt::Display for MinimalModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.data() {
            Ok((c, h)) => write!(f, "L({c},{h})"),
            Err(_) => write!(f, "L(m={},r={},s={})", self.m, self.r, self.s),
        }
    }
}

impl FromStr for MinimalModule {
    type Err = QError;

    /// Accepts "L(7/10,3/80)".
    fn from_str(s: &str) -> QResult<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix("L(")
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(|| QError::Parse(format!("expected L(c,h), got '{s}'")))?;
        let (c, h) = inner
            .split_once(',')
            .ok_or_else(|| QError::Parse(format!("expected L(c,h), got '{s}'")))?;
        Self::from_ch(&parse_rat(c)?, &parse_rat(h)?)
    }
}

fn check_range(m: i64, r: i64, s: i64) -> QResult<()> {
    if m < 1 || r < 1 || r > m + 1 || s < 1 || s > m + 2 {
        return Err(QError::InvalidArgument(format!(
            "minimal model labels out of range: m={m}, r={r}, s={s}"
        )));
    }
    Ok(())
}

/// Central charge and conformal weight of L(c(m), h_{r,s}).
pub fn minimal_data(m: i64, r_: i64, s: i64) -> QResult<(Rat, Rat)> {
    check_range(m, r_, s)?;
    let p = m + 2;
    let pp = m + 3;
    let c = ri(1) - r(6, p * pp);
    let x = pp * r_ - p * s;
    Ok((c, r(x * x - 1, 4 * p * pp)))
}

/// Σ_k (q^{a₊} − q^{a₋}) / η, Rocha-Caridi form with p = m+2, p' = m+3.
pub fn minimal_character(m: i64, r_: i64, s: i64, t: &Rat) -> QResult<QSeries> {
    check_range(m, r_, s)?;
    let p = m + 2;
    let pp = m + 3;
    let n4 = 4 * p * pp;
    let work = t + r(1, 24);
    let kmax = (to_f64(&(&work * ri(n4))).max(0.0).sqrt() / (2 * p * pp) as f64).ceil() as i64 + 2;
    let mut pairs = Vec::new();
    for k in -kmax..=kmax {
        for (sign, off) in [(1, pp * r_ - p * s), (-1, pp * r_ + p * s)] {
            let x = 2 * p * pp * k + off;
            let e = r(x * x, n4);
            if e < work {
                pairs.push((e, ri(sign)));
            }
        }
    }
    let sum = QSeries::from_pairs(pairs, Some(work));
    divide_by_eta_power(&sum, 1, t)
}

/// `sum` must be exact below t + rank/24 with non-negative order.
fn divide_by_eta_power(sum: &QSeries, rank: i64, t: &Rat) -> QResult<QSeries> {
    let inv = eta_quotient(&EtaQuotientSpec::ints(&[(1, -rank)]), &(t + ri(1)))?;
    Ok(sum.mul(&inv).truncate(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FermionSector {
    #[serde(rename = "NS+")]
    NsPlus,
    #[serde(rename = "NS-")]
    NsMinus,
    R,
}

impl FromStr for FermionSector {
    type Err = QError;

    fn from_str(s: &str) -> QResult<Self> {
        match s.trim() {
            "NS+" | "ns+" | "NSp" => Ok(Self::NsPlus),
            "NS-" | "ns-" | "NSm" | "NS−" => Ok(Self::NsMinus),
            "R" | "r" => Ok(Self::R),
            other => Err(QError::Parse(format!("unknown fermion sector '{other}'"))),
        }
    }
}

/// Single free fermion traces, raised to `copies`.
pub fn free_fermion_characters(sector: FermionSector, copies: i64, t: &Rat) -> QResult<QSeries> {
    if copies < 1 {
        return Err(QError::InvalidArgument("copies must be at least 1".into()));
    }
    let c = copies;
    let (spec, scale) = match sector {
        // q^{-1/48}∏(1+q^{n-1/2}) = η(τ)²/(η(τ/2)η(2τ))
        FermionSector::NsPlus => (EtaQuotientSpec::new(&[(ri(1), 2 * c), (r(1, 2), -c), (ri(2), -c)]), 1),
        // q^{-1/48}∏(1-q^{n-1/2}) = η(τ/2)/η(τ)
        FermionSector::NsMinus => (EtaQuotientSpec::new(&[(r(1, 2), c), (ri(1), -c)]), 1),
        // 2q^{1/24}∏(1+q^n) = 2η(2τ)/η(τ)
        FermionSector::R => (EtaQuotientSpec::ints(&[(2, c), (1, -c)]), 1i64 << c),
    };
    Ok(eta_quotient(&spec, t)?.scale(&ri(scale)))
}

/// Adjoint fermion product for sl(n+1) with z_i = e^{α_i}.
///
/// R: e^ρ ∏_{α>0}(1+e^{-α}) ∏_k (1+q^k)^n (1+e^α q^k)(1+e^{-α} q^k).
/// NS±: q^{-(n²+2n)/48} ∏_k (1±q^{k-1/2})^n ∏_{α>0} (1±e^α q^{k-1/2})(1±e^{-α} q^{k-1/2}).
///
/// The R product carries no q-prefactor: with it, the e^ρ coefficient is the
/// string function c^ρ̂_ρ̂ on the nose (a factor q^{-(n²+2n)/48} would shift it).
pub fn fermion_adjoint_multichar(n: usize, sector: FermionSector, t: &Rat) -> QResult<MultiSeries> {
    if !(1..=3).contains(&n) {
        return Err(QError::Cap(format!("adjoint fermion product limited to 1 ≤ n ≤ 3, got {n}")));
    }
    let rs = build_root_system(n)?;
    let ni = n as i64;
    let lead = if sector == FermionSector::R { ri(0) } else { r(-(ni * ni + 2 * ni), 48) };
    let work = t - &lead;
    let zero_z = vec![ri(0); n];
    let roots: Vec<Vec<Rat>> = rs
        .positive_roots
        .iter()
        .map(|a| a.iter().map(|&x| ri(x)).collect())
        .collect();
    let negr = |a: &Vec<Rat>| -> Vec<Rat> { a.iter().map(|x| -x).collect() };
    let (start, coeff, step) = match sector {
        FermionSector::R => (ri(1), ri(1), ri(1)),
        FermionSector::NsPlus => (r(1, 2), ri(1), ri(1)),
        FermionSector::NsMinus => (r(1, 2), ri(-1), ri(1)),
    };
    let mut acc = MultiSeries::one(n).truncate(&work);
    if sector == FermionSector::R {
        // e^ρ with ρ = ½ Σ_{α>0} α in root coordinates
        let mut rho = zero_z.clone();
        for a in &roots {
            for (x, y) in rho.iter_mut().zip(a) {
                *x += y / ri(2);
            }
        }
        acc = acc.mul_monomial(&Monomial::new(ri(1), ri(0), rho));
        for a in &roots {
            acc = acc.mul_binomial(&Monomial::new(ri(1), ri(0), negr(a)));
        }
    }
    let mut zs: Vec<Vec<Rat>> = vec![zero_z.clone(); n];
    for a in &roots {
        zs.push(a.clone());
        zs.push(negr(a));
    }
    for z in zs {
        let mut e = start.clone();
        while e < work {
            acc = acc.mul_binomial(&Monomial::new(coeff.clone(), e.clone(), z.clone()));
            e += &step;
        }
    }
    Ok(acc.qshift(&lead).truncate(t))
}

/// The z-monomial e^ρ in root coordinates, used to read off R-sector coefficients.
pub fn rho_root_coordinates(n: usize) -> Vec<Rat> {
    let ni = n as i64;
    (1..=ni).map(|i| r(i * (ni + 1 - i), 2)).collect()
}

/// θ_{scale·G}(shift)/η^rank.
pub fn lattice_character(gram: &RMat, scale: &Rat, shift: &[Rat], t: &Rat) -> QResult<QSeries> {
    lattice_character_signed(gram, scale, shift, false, t)
}

fn lattice_character_signed(gram: &RMat, scale: &Rat, shift: &[Rat], signed: bool, t: &Rat) -> QResult<QSeries> {
    let g = scale_mat(gram, scale);
    let rank = g.len() as i64;
    let work = t + r(rank, 24);
    let pts = lattice_points_below(&g, shift, &work)?;
    let sum = QSeries::from_pairs(
        pts.into_iter().map(|(v, e)| {
            let odd = v.iter().sum::<i64>().rem_euclid(2) == 1;
            (e, if signed && odd { ri(-1) } else { ri(1) })
        }),
        Some(work),
    );
    divide_by_eta_power(&sum, rank, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Z2Sector {
    #[serde(rename = "++")]
    PlusPlus,
    #[serde(rename = "+-")]
    PlusMinus,
    #[serde(rename = "-+")]
    MinusPlus,
    #[serde(rename = "--")]
    MinusMinus,
}

impl FromStr for Z2Sector {
    type Err = QError;

    fn from_str(s: &str) -> QResult<Self> {
        match s.trim().replace('−', "-").as_str() {
            "++" => Ok(Self::PlusPlus),
            "+-" => Ok(Self::PlusMinus),
            "-+" => Ok(Self::MinusPlus),
            "--" => Ok(Self::MinusMinus),
            other => Err(QError::Parse(format!("unknown orbifold sector '{other}'"))),
        }
    }
}

/// A scaled lattice with an optional shift (in lattice coordinates).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub gram: RMat,
    pub scale: Rat,
    pub shift: Vec<Rat>,
}

/// What the Z2 acts on: a lattice theory, or `rank` oscillator-only bosons.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbifoldTarget {
    Lattice(LatticeSpec),
    Boson(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbifoldSector {
    pub target: OrbifoldTarget,
    pub sector: Z2Sector,
}

impl OrbifoldSector {
    pub fn rank(&self) -> usize {
        match &self.target {
            OrbifoldTarget::Lattice(l) => l.gram.len(),
            OrbifoldTarget::Boson(k) => *k,
        }
    }
}

/// Z2 orbifold traces. Twisted sectors are the rank-th power of the single
/// antiperiodic boson traces.
pub fn orbifold_characters(sec: &OrbifoldSector, t: &Rat) -> QResult<QSeries> {
    let k = sec.rank() as i64;
    if k == 0 {
        return Err(QError::InvalidArgument("orbifold of a rank-0 theory".into()));
    }
    let half = r(1, 2);
    let boson = |f: &[(Rat, i64)]| -> QResult<QSeries> {
        let scaled: Vec<(Rat, i64)> = f.iter().map(|(m, e)| (m.clone(), e * k)).collect();
        eta_quotient(&EtaQuotientSpec::new(&scaled), t)
    };
    match sec.sector {
        Z2Sector::MinusPlus => boson(&[(ri(1), 1), (half, -1)]),
        Z2Sector::MinusMinus => boson(&[(half, 1), (ri(2), 1), (ri(1), -2)]),
        s => match &sec.target {
            OrbifoldTarget::Lattice(l) => {
                if l.shift.len() != l.gram.len() {
                    return Err(QError::RankMismatch(l.shift.len(), l.gram.len()));
                }
                lattice_character_signed(&l.gram, &l.scale, &l.shift, s == Z2Sector::PlusMinus, t)
            }
            OrbifoldTarget::Boson(_) => match s {
                Z2Sector::PlusPlus => boson(&[(ri(1), -1)]),
                _ => boson(&[(ri(1), 1), (ri(2), -1)]),
            },
        },
    }
}

/// Character of the diagonal coset sl(n+1)_k × sl(n+1)_1 / sl(n+1)_{k+1}, m = k + n + 1,
/// as an alternating sum over the affine Weyl group at level m.
///
/// `lplus`, `lminus` are finite Dynkin labels.
pub fn w_character(n: usize, m: i64, lplus: &[i64], lminus: &[i64], t: &Rat) -> QResult<QSeries> {
    let rs = build_root_system(n)?;
    if lplus.len() != n {
        return Err(QError::RankMismatch(lplus.len(), n));
    }
    if lminus.len() != n {
        return Err(QError::RankMismatch(lminus.len(), n));
    }
    let k = m - rs.dual_coxeter;
    if k < 0 {
        return Err(QError::InvalidArgument(format!("m = {m} is below the dual Coxeter number")));
    }
    let dominant = |w: &[i64], lev: i64| w.iter().all(|&x| x >= 0) && w.iter().sum::<i64>() <= lev;
    if !dominant(lplus, k) {
        return Err(QError::NonDominant(format!("{lplus:?} at level {k}")));
    }
    if !dominant(lminus, k + 1) {
        return Err(QError::NonDominant(format!("{lminus:?} at level {}", k + 1)));
    }
    let rho = &rs.weyl_vector;
    let ap: Vec<i64> = lplus.iter().zip(rho).map(|(a, b)| a + b).collect();
    let am: Vec<i64> = lminus.iter().zip(rho).map(|(a, b)| a + b).collect();
    let mm = m * (m + 1);
    // |mm·β + v|²/(2mm) = (β+s)ᵀ(mm·A)(β+s)/2 with s = A⁻¹v/mm
    let gram: RMat = rs
        .cartan
        .iter()
        .map(|row| row.iter().map(|&x| ri(x * mm)).collect())
        .collect();
    let rank = n as i64;
    let work = t + r(rank, 24);
    let mut pairs = Vec::new();
    for (perm, sign) in rs.weyl_group() {
        let wa = rs.weyl_act(&perm, &ap);
        let v: Vec<Rat> = wa.iter().zip(&am).map(|(a, b)| ri((m + 1) * a - m * b)).collect();
        let shift: Vec<Rat> = rs
            .quadratic_form
            .iter()
            .map(|row| row.iter().zip(&v).map(|(x, y)| x * y).sum::<Rat>() / ri(mm))
            .collect();
        for (_, e) in lattice_points_below(&gram, &shift, &work)? {
            pairs.push((e, ri(sign)));
        }
    }
    let sum = QSeries::from_pairs(pairs, Some(work));
    divide_by_eta_power(&sum, rank, t)
}

/// sl(3) specialisation of [`w_character`].
pub fn w3_character(m: i64, lplus: &[i64], lminus: &[i64], t: &Rat) -> QResult<QSeries> {
    w_character(2, m, lplus, lminus, t)
}

/// Central charge and conformal weight of the coset module.
pub fn w_data(n: usize, m: i64, lplus: &[i64], lminus: &[i64]) -> QResult<(Rat, Rat)> {
    let rs = build_root_system(n)?;
    let rank = n as i64;
    let mm = m * (m + 1);
    let c = ri(rank) * (ri(1) - r(rs.dual_coxeter * (rs.dual_coxeter + 1), mm));
    let rho = &rs.weyl_vector;
    let v: Vec<i64> = (0..n)
        .map(|i| (m + 1) * (lplus[i] + rho[i]) - m * (lminus[i] + rho[i]))
        .collect();
    let h = (&c - ri(rank)) / ri(24) + rs.norm(&v) / ri(2 * mm);
    Ok((c, h))
}

/// All (Λ⁺, Λ⁻) label pairs of the coset at index m whose conformal weight is `h`.
pub fn w_pairs_with_weight(n: usize, m: i64, h: &Rat) -> QResult<Vec<(Vec<i64>, Vec<i64>)>> {
    let k = m - (n as i64 + 1);
    let doms = |lev: i64| -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|v: Vec<i64>| {
                    let used: i64 = v.iter().sum();
                    (0..=lev - used).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        out
    };
    let mut found = Vec::new();
    for lp in doms(k) {
        for lm in doms(k + 1) {
            if &w_data(n, m, &lp, &lm)?.1 == h {
                found.push((lp.clone(), lm));
            }
        }
    }
    Ok(found)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub pass: bool,
    pub checked_to: Rat,
    /// (exponent, lhs coefficient, rhs coefficient)
    pub first_mismatch: Option<(Rat, Rat, Rat)>,
}

/// Compare `lhs` with Σ_i ∏_j minimal_character(summands[i][j]) below `t`.
pub fn tensor_decomposition_check(lhs: &QSeries, summands: &[Vec<MinimalModule>], t: &Rat) -> QResult<DecompositionReport> {
    let mut rhs = QSeries::zero(Some(t.clone()));
    for term in summands {
        let mut prod = QSeries::one();
        for md in term {
            prod = prod.mul(&minimal_character(md.m, md.r, md.s, &(t + ri(1)))?);
        }
        rhs = rhs.add(&prod.truncate(t));
    }
    let first_mismatch = lhs.first_mismatch(&rhs, t);
    Ok(DecompositionReport { pass: first_mismatch.is_none(), checked_to: t.clone(), first_mismatch })
}

/// Lowest exponent of a non-zero term (None for the zero series).
pub fn leading_exponent(s: &QSeries) -> Option<Rat> {
    s.terms().find(|(_, c)| !c.is_zero()).map(|(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{coset_character, AffineWeight};
    use crate::qseries::eta;
    use crate::rat::rat_mat;

    fn eq(spec: &[(Rat, i64)], t: &Rat) -> QSeries {
        eta_quotient(&EtaQuotientSpec::new(spec), t).unwrap()
    }

    #[test]
    fn minimal_weights() {
        assert_eq!(minimal_data(1, 1, 1).unwrap(), (r(1, 2), ri(0)));
        assert_eq!(minimal_data(1, 1, 2).unwrap().1, r(1, 16));
        let mut hs: Vec<Rat> = (1..=3)
            .flat_map(|a| (1..=4).map(move |b| minimal_data(2, a, b).unwrap().1))
            .collect();
        hs.sort();
        hs.dedup();
        assert_eq!(hs, vec![ri(0), r(3, 80), r(1, 10), r(7, 16), r(3, 5), r(3, 2)]);
        assert_eq!(minimal_data(2, 1, 1).unwrap().0, r(7, 10));
        assert!(minimal_data(1, 3, 1).is_err());
        assert!(minimal_data(0, 1, 1).is_err());
    }

    #[test]
    fn parse_modules() {
        let m: MinimalModule = "L(7/10,3/80)".parse().unwrap();
        assert_eq!(m.data().unwrap(), (r(7, 10), r(3, 80)));
        assert_eq!(m.to_string(), "L(7/10,3/80)");
        assert!("L(7/10,1/3)".parse::<MinimalModule>().is_err());
        assert!("L(2/3,0)".parse::<MinimalModule>().is_err());
    }

    #[test]
    fn ising_characters_match_fermions() {
        let t = ri(20);
        let a = minimal_character(1, 1, 1, &t).unwrap();
        let b = minimal_character(1, 2, 1, &t).unwrap();
        assert_eq!(minimal_data(1, 2, 1).unwrap().1, r(1, 2));
        let ns = free_fermion_characters(FermionSector::NsPlus, 1, &t).unwrap();
        assert!(a.add(&b).agrees_to(&ns, &t));
        let sigma = minimal_character(1, 1, 2, &t).unwrap();
        let rr = free_fermion_characters(FermionSector::R, 1, &t).unwrap().scale(&r(1, 2));
        assert!(sigma.agrees_to(&rr, &t));
    }

    #[test]
    fn leading_exponents() {
        for m in 1..4 {
            for a in 1..=m + 1 {
                for b in 1..=m + 2 {
                    let (c, h) = minimal_data(m, a, b).unwrap();
                    let ch = minimal_character(m, a, b, &ri(3)).unwrap();
                    assert_eq!(leading_exponent(&ch), Some(&h - &c / ri(24)));
                    assert!(ch.is_integral());
                }
            }
        }
    }

    #[test]
    fn fermion_products() {
        let t = ri(15);
        let ns = free_fermion_characters(FermionSector::NsPlus, 1, &t).unwrap();
        assert_eq!(leading_exponent(&ns), Some(r(-1, 48)));
        assert_eq!(ns.coeff(&r(23, 48)), ri(1));
        let rr = free_fermion_characters(FermionSector::R, 2, &t).unwrap();
        assert_eq!(rr.leading(), Some((r(1, 12), ri(4))));
    }

    #[test]
    fn adjoint_fermions_sl2() {
        let t = ri(15);
        let ms = fermion_adjoint_multichar(1, FermionSector::R, &t).unwrap();
        let c = ms.coeff_extract(&rho_root_coordinates(1));
        let want = eq(&[(ri(2), 1), (ri(1), -2)], &t);
        assert!(c.agrees_to(&want, &t), "{:?}\n{}\n{}", c.first_mismatch(&want, &t), c.truncate(&ri(3)), want.truncate(&ri(3)));
        let ms = fermion_adjoint_multichar(1, FermionSector::NsMinus, &t).unwrap();
        let c = ms.coeff_extract(&[ri(0)]);
        let want = eq(&[(r(1, 2), 1), (ri(1), -2)], &t);
        assert!(c.agrees_to(&want, &t));
        assert!(fermion_adjoint_multichar(4, FermionSector::R, &t).is_err());
    }

    #[test]
    fn adjoint_fermions_sl3() {
        let t = ri(8);
        let ms = fermion_adjoint_multichar(2, FermionSector::R, &t).unwrap();
        let c = ms.coeff_extract(&rho_root_coordinates(2));
        let want = eq(&[(ri(2), 3), (ri(3), 2), (ri(1), -6), (ri(6), -1)], &t);
        assert!(c.agrees_to(&want, &t));
        let ms = fermion_adjoint_multichar(2, FermionSector::NsMinus, &t).unwrap();
        let c = ms.coeff_extract(&[ri(0), ri(0)]);
        let want = eq(&[(r(1, 2), 2), (r(3, 2), 2), (ri(1), -5), (ri(3), -1)], &t);
        assert!(c.agrees_to(&want, &t));
    }

    #[test]
    fn a1_half_lattice() {
        let t = ri(12);
        let a1 = rat_mat(&[&[2]]);
        let ch = lattice_character(&a1, &r(1, 2), &[ri(0)], &t).unwrap();
        let ns = free_fermion_characters(FermionSector::NsPlus, 2, &t).unwrap();
        assert!(ch.agrees_to(&ns, &t));
        // shifted by half the generator: two copies of the doubled Ramond trace over 4
        let sh = lattice_character(&a1, &r(1, 2), &[r(1, 2)], &t).unwrap();
        let rr = free_fermion_characters(FermionSector::R, 2, &t).unwrap().scale(&r(1, 2));
        assert!(sh.agrees_to(&rr, &t));
    }

    #[test]
    fn a2_twisted_lattice_sum() {
        let t = ri(10);
        let a2 = rat_mat(&[&[2, -1], &[-1, 2]]);
        let ch = lattice_character(&a2, &r(1, 2), &[r(2, 3), r(1, 3)], &t).unwrap();
        let mut pairs = Vec::new();
        for m in -12i64..=12 {
            for n in -12i64..=12 {
                let e = r(2, 3) + r(m * m + n * n - m * n + 2 * m, 2);
                if e < ri(11) {
                    pairs.push((e, ri(1)));
                }
            }
        }
        let sum = QSeries::from_pairs(pairs, Some(ri(11)));
        let want = sum.mul(&eta_quotient(&EtaQuotientSpec::ints(&[(1, -2)]), &ri(11)).unwrap());
        assert!(ch.agrees_to(&want, &t));
    }

    #[test]
    fn boson_orbifold() {
        let t = ri(10);
        let sec = |s| OrbifoldSector { target: OrbifoldTarget::Boson(1), sector: s };
        let pp = orbifold_characters(&sec(Z2Sector::PlusPlus), &t).unwrap();
        let inv = eta(&ri(1), &ri(12)).unwrap().invert().unwrap();
        assert!(pp.agrees_to(&inv, &t));
        let mp = orbifold_characters(&sec(Z2Sector::MinusPlus), &t).unwrap();
        assert_eq!(leading_exponent(&mp), Some(r(1, 48)));
        let mm = orbifold_characters(&sec(Z2Sector::MinusMinus), &t).unwrap();
        assert_eq!(mm.coeff(&r(25, 48)), ri(-1));
    }

    #[test]
    fn a2_orbifold_sectors() {
        let t = ri(12);
        let rs = build_root_system(3).unwrap();
        let b = |hw: &str, lam: &str| {
            coset_character(&rs, &AffineWeight::parse(hw).unwrap(), &AffineWeight::parse(lam).unwrap(), &t).unwrap()
        };
        let a2 = rat_mat(&[&[2, -1], &[-1, 2]]);
        let lat = |s: Z2Sector| OrbifoldSector {
            target: OrbifoldTarget::Lattice(LatticeSpec { gram: a2.clone(), scale: r(1, 2), shift: vec![ri(0), ri(0)] }),
            sector: s,
        };
        let pm = orbifold_characters(&lat(Z2Sector::PlusMinus), &t).unwrap();
        let want = b("[2000]", "[2000]").add(&b("[2000]", "[0020]")).sub(&b("[2000]", "[0101]").scale(&ri(2)));
        assert!(pm.agrees_to(&want, &t));
        let mp = orbifold_characters(&lat(Z2Sector::MinusPlus), &t).unwrap();
        assert!(mp.agrees_to(&b("[1100]", "[1100]").add(&b("[1100]", "[0011]")), &t));
        let mm = orbifold_characters(&lat(Z2Sector::MinusMinus), &t).unwrap();
        assert!(mm.agrees_to(&b("[1100]", "[1100]").sub(&b("[1100]", "[0011]")), &t));
    }

    #[test]
    fn w3_weights() {
        // vacuum of the c = 6/5 coset
        assert_eq!(w_data(2, 5, &[0, 0], &[0, 0]).unwrap(), (r(6, 5), ri(0)));
        let ch = w3_character(5, &[0, 0], &[0, 0], &ri(6)).unwrap();
        assert_eq!(leading_exponent(&ch), Some(r(-1, 20)));
        assert!(w3_character(5, &[3, 0], &[0, 0], &ri(2)).is_err());
    }

    #[test]
    fn w3_matches_parafermions() {
        let t = ri(10);
        let rs = build_root_system(2).unwrap();
        let b = |hw: &str, lam: &str| {
            coset_character(&rs, &AffineWeight::parse(hw).unwrap(), &AffineWeight::parse(lam).unwrap(), &t).unwrap()
        };
        let w = |h: Rat| {
            let (lp, lm) = w_pairs_with_weight(2, 5, &h).unwrap()[0].clone();
            w3_character(5, &lp, &lm, &t).unwrap()
        };
        assert!(b("[200]", "[200]").agrees_to(&w(ri(0)).add(&w(ri(2)).scale(&ri(2))), &t));
        assert!(b("[110]", "[110]").agrees_to(&w(r(1, 10)), &t));
        assert!(b("[200]", "[011]").agrees_to(&w(r(1, 2)), &t));
        assert!(b("[110]", "[002]").agrees_to(&w(r(3, 5)).scale(&ri(2)).add(&w(r(8, 5))), &t));
    }

    #[test]
    fn adjoint_fermions_sl4_ramond() {
        let t = ri(6);
        let ms = fermion_adjoint_multichar(3, FermionSector::R, &t).unwrap();
        let c = ms.coeff_extract(&rho_root_coordinates(3));
        let want = eq(&[(ri(2), 15), (ri(1), -14), (ri(4), -4)], &t);
        assert!(c.agrees_to(&want, &t));
    }

    #[test]
    fn decomposition_detects_mismatch() {
        let t = ri(12);
        let rs = build_root_system(2).unwrap();
        let lhs = coset_character(&rs, &AffineWeight::parse("[200]").unwrap(), &AffineWeight::parse("[200]").unwrap(), &t).unwrap();
        let good = vec![
            vec![MinimalModule::new(1, 1, 1).unwrap(), MinimalModule::new(2, 1, 1).unwrap()],
            vec!["L(1/2,1/2)".parse().unwrap(), "L(7/10,3/2)".parse().unwrap()],
        ];
        assert!(tensor_decomposition_check(&lhs, &good, &t).unwrap().pass);
        let bad = vec![good[0].clone(), vec!["L(1/2,1/2)".parse().unwrap(), "L(7/10,3/5)".parse().unwrap()]];
        let rep = tensor_decomposition_check(&lhs, &bad, &t).unwrap();
        assert!(!rep.pass);
        assert!(rep.first_mismatch.is_some());
    }
}
