//! Truncated power series in q with rational exponents, plus the
//! multivariate variant carrying auxiliary z-variables.
//!
//! A `QSeries` stores `coeff · q^(k/D)` and is exact strictly below `K/D`.
//! `trunc == None` marks an exact (finite) series.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{QError, QResult};
use crate::matrix::{bilinear, is_positive_definite, min_eigenvalue, RMat};
use crate::rat::{ceil_i64, den_i64, fmt_rat, lcm, on_grid, parse_rat, r, ri, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    denom: i64,
    terms: BTreeMap<i64, Rat>,
    trunc: Option<i64>,
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// Integer numerators over a common denominator, used by the fast product paths.
fn int_parts(terms: &BTreeMap<i64, Rat>) -> (BigInt, Vec<(i64, BigInt)>) {
    let mut den = BigInt::one();
    for c in terms.values() {
        den = den.lcm(c.denom());
    }
    let v = terms
        .iter()
        .map(|(k, c)| (*k, c.numer() * (&den / c.denom())))
        .collect();
    (den, v)
}

fn small_parts(v: &[(i64, BigInt)]) -> Option<Vec<(i64, i128)>> {
    v.iter().map(|(k, c)| c.to_i128().map(|x| (*k, x))).collect()
}

impl QSeries {
    fn build(denom: i64, terms: BTreeMap<i64, Rat>, trunc: Option<i64>) -> Self {
        let mut s = QSeries { denom, terms, trunc };
        s.canonicalize();
        s
    }

    fn canonicalize(&mut self) {
        if let Some(k) = self.trunc {
            self.terms.retain(|&e, c| e < k && !c.is_zero());
        } else {
            self.terms.retain(|_, c| !c.is_zero());
        }
        let mut g = self.denom;
        for &k in self.terms.keys() {
            g = g.gcd(&k);
        }
        if let Some(k) = self.trunc {
            g = g.gcd(&k);
        }
        if g > 1 {
            self.denom /= g;
            self.terms = std::mem::take(&mut self.terms)
                .into_iter()
                .map(|(k, c)| (k / g, c))
                .collect();
            self.trunc = self.trunc.map(|k| k / g);
        }
    }

    fn regrid(&self, d: i64) -> BTreeMap<i64, Rat> {
        let f = d / self.denom;
        self.terms.iter().map(|(k, c)| (k * f, c.clone())).collect()
    }

    fn trunc_on(&self, d: i64) -> Option<i64> {
        self.trunc.map(|k| k * (d / self.denom))
    }

    /// Build from (exponent, coefficient) pairs; repeated exponents add up.
    pub fn from_pairs<I: IntoIterator<Item = (Rat, Rat)>>(pairs: I, trunc: Option<Rat>) -> Self {
        let pairs: Vec<(Rat, Rat)> = pairs.into_iter().collect();
        let mut d = 1i64;
        for (e, _) in &pairs {
            d = lcm(d, den_i64(e));
        }
        if let Some(t) = &trunc {
            d = lcm(d, den_i64(t));
        }
        let mut terms: BTreeMap<i64, Rat> = BTreeMap::new();
        for (e, c) in pairs {
            let k = on_grid(&e, d).expect("exponent on grid");
            *terms.entry(k).or_insert_with(Rat::zero) += c;
        }
        let trunc = trunc.map(|t| on_grid(&t, d).expect("trunc on grid"));
        Self::build(d, terms, trunc)
    }

    pub fn zero(trunc: Option<Rat>) -> Self {
        Self::from_pairs(std::iter::empty(), trunc)
    }

    pub fn exact_zero() -> Self {
        Self::zero(None)
    }

    pub fn one() -> Self {
        Self::monomial(ri(1), ri(0), None)
    }

    pub fn monomial(coeff: Rat, exp: Rat, trunc: Option<Rat>) -> Self {
        Self::from_pairs([(exp, coeff)], trunc)
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn trunc(&self) -> Option<Rat> {
        self.trunc.map(|k| r(k, self.denom))
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
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

    pub fn terms(&self) -> impl Iterator<Item = (Rat, &Rat)> + '_ {
        let d = self.denom;
        self.terms.iter().map(move |(k, c)| (r(*k, d), c))
    }

    pub fn coeff(&self, exp: &Rat) -> Rat {
        match on_grid(exp, self.denom) {
            Some(k) => self.terms.get(&k).cloned().unwrap_or_else(Rat::zero),
            None => Rat::zero(),
        }
    }

    /// Lowest exponent carrying a nonzero coefficient.
    pub fn order(&self) -> Option<Rat> {
        self.terms.keys().next().map(|&k| r(k, self.denom))
    }

    pub fn leading(&self) -> Option<(Rat, Rat)> {
        self.terms
            .iter()
            .next()
            .map(|(&k, c)| (r(k, self.denom), c.clone()))
    }

    /// Lowest exponent of possibly unknown content, used by the product rule.
    fn ord_grid(&self) -> Option<i64> {
        self.terms.keys().next().copied().or(self.trunc)
    }

    pub fn truncate(&self, t: &Rat) -> Self {
        let d = lcm(self.denom, den_i64(t));
        let k = on_grid(t, d).unwrap();
        let nt = min_opt(self.trunc_on(d), Some(k));
        Self::build(d, self.regrid(d), nt)
    }

    pub fn add(&self, o: &Self) -> Self {
        let d = lcm(self.denom, o.denom);
        let mut t = self.regrid(d);
        for (k, c) in o.regrid(d) {
            *t.entry(k).or_insert_with(Rat::zero) += c;
        }
        Self::build(d, t, min_opt(self.trunc_on(d), o.trunc_on(d)))
    }

    pub fn neg(&self) -> Self {
        Self {
            denom: self.denom,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: &Rat) -> Self {
        Self::build(
            self.denom,
            self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
            self.trunc,
        )
    }

    pub fn qshift(&self, e: &Rat) -> Self {
        let d = lcm(self.denom, den_i64(e));
        let s = on_grid(e, d).unwrap();
        Self::build(
            d,
            self.regrid(d).into_iter().map(|(k, c)| (k + s, c)).collect(),
            self.trunc_on(d).map(|k| k + s),
        )
    }

    /// Substitute q -> q^c for rational c > 0.
    pub fn q_scale(&self, c: &Rat) -> Self {
        assert!(c.is_positive());
        let pairs: Vec<(Rat, Rat)> = self.terms().map(|(e, x)| (e * c, x.clone())).collect();
        Self::from_pairs(pairs, self.trunc().map(|t| t * c))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let d = lcm(self.denom, o.denom);
        if self.is_exact() && self.is_zero() || o.is_exact() && o.is_zero() {
            return Self::exact_zero();
        }
        let (oa, ob) = (
            self.ord_grid().unwrap() * (d / self.denom),
            o.ord_grid().unwrap() * (d / o.denom),
        );
        let k = min_opt(self.trunc_on(d).map(|k| k + ob), o.trunc_on(d).map(|k| k + oa));
        let a = self.regrid(d);
        let b = o.regrid(d);
        if a.is_empty() || b.is_empty() {
            return Self::build(d, BTreeMap::new(), k);
        }
        let lo = a.keys().next().unwrap() + b.keys().next().unwrap();
        let hi = match k {
            Some(k) => k,
            None => a.keys().last().unwrap() + b.keys().last().unwrap() + 1,
        };
        if hi <= lo {
            return Self::build(d, BTreeMap::new(), k);
        }
        let (da, va) = int_parts(&a);
        let (db, vb) = int_parts(&b);
        let den = Rat::from_integer(da * db);
        let width = (hi - lo) as usize;
        let mut out = BTreeMap::new();
        let small = match (small_parts(&va), small_parts(&vb)) {
            (Some(x), Some(y)) => {
                let mut acc = vec![0i128; width];
                let mut ok = true;
                'outer: for (ka, ca) in &x {
                    for (kb, cb) in &y {
                        let e = ka + kb;
                        if e >= hi {
                            break;
                        }
                        let slot = &mut acc[(e - lo) as usize];
                        match ca.checked_mul(*cb).and_then(|p| slot.checked_add(p)) {
                            Some(v) => *slot = v,
                            None => {
                                ok = false;
                                break 'outer;
                            }
                        }
                    }
                }
                if ok {
                    for (i, v) in acc.into_iter().enumerate() {
                        if v != 0 {
                            out.insert(lo + i as i64, Rat::from_integer(BigInt::from(v)) / &den);
                        }
                    }
                }
                ok
            }
            _ => false,
        };
        if !small {
            out.clear();
            let mut acc = vec![BigInt::zero(); width];
            for (ka, ca) in &va {
                for (kb, cb) in &vb {
                    let e = ka + kb;
                    if e >= hi {
                        break;
                    }
                    acc[(e - lo) as usize] += ca * cb;
                }
            }
            for (i, v) in acc.into_iter().enumerate() {
                if !v.is_zero() {
                    out.insert(lo + i as i64, Rat::from_integer(v) / &den);
                }
            }
        }
        Self::build(d, out, k)
    }

    /// Multiplicative inverse; errors on zero series and on exact non-monomials
    /// (whose inverse would need an explicit truncation).
    pub fn invert(&self) -> QResult<Self> {
        let Some((&o, a0)) = self.terms.iter().next() else {
            return Err(QError::NonInvertible("zero series".into()));
        };
        let a0 = a0.clone();
        if self.terms.len() == 1 && self.is_exact() {
            return Ok(Self::build(
                self.denom,
                [(-o, Rat::one() / a0)].into_iter().collect(),
                None,
            ));
        }
        let Some(kk) = self.trunc else {
            return Err(QError::NonInvertible(
                "exact polynomial with several terms; truncate first".into(),
            ));
        };
        let n = (kk - o) as usize; // relative precision in grid steps
        let f: Vec<(usize, Rat)> = self
            .terms
            .iter()
            .skip(1)
            .map(|(k, c)| ((k - o) as usize, c / &a0))
            .collect();
        let mut g: Vec<Rat> = Vec::with_capacity(n);
        let fast = f.iter().all(|(_, c)| c.is_integer() && c.numer().to_i128().is_some());
        let mut done = false;
        if fast {
            let fi: Vec<(usize, i128)> = f
                .iter()
                .map(|(j, c)| (*j, c.numer().to_i128().unwrap()))
                .collect();
            let mut gi: Vec<i128> = Vec::with_capacity(n);
            let mut ok = true;
            'o: for m in 0..n {
                if m == 0 {
                    gi.push(1);
                    continue;
                }
                let mut s: i128 = 0;
                for (j, c) in &fi {
                    if *j > m {
                        break;
                    }
                    match c.checked_mul(gi[m - j]).and_then(|p| s.checked_sub(p)) {
                        Some(v) => s = v,
                        None => {
                            ok = false;
                            break 'o;
                        }
                    }
                }
                gi.push(s);
            }
            if ok {
                g = gi.into_iter().map(|v| Rat::from_integer(BigInt::from(v))).collect();
                done = true;
            }
        }
        if !done {
            g.clear();
            for m in 0..n {
                if m == 0 {
                    g.push(Rat::one());
                    continue;
                }
                let mut s = Rat::zero();
                for (j, c) in &f {
                    if *j > m {
                        break;
                    }
                    s -= c * &g[m - j];
                }
                g.push(s);
            }
        }
        let inv0 = Rat::one() / a0;
        let terms = g
            .into_iter()
            .enumerate()
            .map(|(m, c)| (m as i64 - o, c * &inv0))
            .collect();
        Ok(Self::build(self.denom, terms, Some(kk - 2 * o)))
    }

    pub fn pow(&self, e: i64) -> QResult<Self> {
        let base = if e < 0 { self.invert()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = Self::one();
        let mut b = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&b);
            }
            n >>= 1;
            if n > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    /// Both series known at least up to `t`.
    pub fn known_to(&self, t: &Rat) -> bool {
        match self.trunc() {
            None => true,
            Some(k) => &k >= t,
        }
    }

    /// First exponent below `t` where the two series differ:
    /// (exponent, self coefficient, other coefficient).
    pub fn first_mismatch(&self, o: &Self, t: &Rat) -> Option<(Rat, Rat, Rat)> {
        let a = self.truncate(t);
        let b = o.truncate(t);
        let d = lcm(a.denom, b.denom);
        let ta = a.regrid(d);
        let tb = b.regrid(d);
        let mut keys: Vec<i64> = ta.keys().chain(tb.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            let x = ta.get(&k).cloned().unwrap_or_else(Rat::zero);
            let y = tb.get(&k).cloned().unwrap_or_else(Rat::zero);
            if x != y {
                return Some((r(k, d), x, y));
            }
        }
        None
    }

    /// Equality of all coefficients strictly below `t`.
    pub fn agrees_to(&self, o: &Self, t: &Rat) -> bool {
        self.first_mismatch(o, t).is_none()
    }

    /// Coefficients are all integers.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms()
            .map(|(e, c)| json!({"exponent": fmt_rat(&e), "coeff": fmt_rat(c)}))
            .collect();
        json!({
            "terms": terms,
            "trunc": self.trunc().map(|t| Value::String(fmt_rat(&t))).unwrap_or(Value::Null),
        })
    }

    pub fn from_json(v: &Value) -> QResult<Self> {
        let bad = |m: &str| QError::Parse(format!("series json: {m}"));
        let terms = v.get("terms").and_then(|t| t.as_array()).ok_or_else(|| bad("missing terms"))?;
        let mut pairs = Vec::new();
        for t in terms {
            let e = t.get("exponent").and_then(|x| x.as_str()).ok_or_else(|| bad("exponent"))?;
            let c = t.get("coeff").and_then(|x| x.as_str()).ok_or_else(|| bad("coeff"))?;
            pairs.push((parse_rat(e)?, parse_rat(c)?));
        }
        let trunc = match v.get("trunc") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(parse_rat(s)?),
            _ => return Err(bad("trunc")),
        };
        Ok(Self::from_pairs(pairs, trunc))
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            let sign = if c.is_negative() { "-" } else { "+" };
            let a = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let e_str = if e.is_integer() { format!("{e}") } else { format!("({e})") };
            if e.is_zero() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "q^{e_str}")?;
            } else {
                write!(f, "{a}*q^{e_str}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        if let Some(t) = self.trunc() {
            write!(f, " + O(q^{t})")?;
        }
        Ok(())
    }
}

/// Multiply a list of series.
pub fn product(items: &[QSeries]) -> QSeries {
    items.iter().fold(QSeries::one(), |acc, x| acc.mul(x))
}

// ---------------------------------------------------------------------------
// Building blocks

/// η(mτ) = q^(m/24) ∏(1 - q^(mn)), exact below `t`, via the pentagonal expansion.
pub fn eta(m: &Rat, t: &Rat) -> QResult<QSeries> {
    if !m.is_positive() {
        return Err(QError::InvalidArgument(format!("eta multiplier must be positive, got {m}")));
    }
    let base = m / ri(24);
    let mut pairs = Vec::new();
    for sgn in [1i64, -1] {
        let mut j: i64 = if sgn == 1 { 0 } else { 1 };
        loop {
            let kk = sgn * j;
            let e = &base + m * r(kk * (3 * kk - 1), 2);
            if &e >= t {
                break;
            }
            let c = if kk.rem_euclid(2) == 0 { ri(1) } else { ri(-1) };
            pairs.push((e, c));
            j += 1;
        }
    }
    Ok(QSeries::from_pairs(pairs, Some(t.clone())))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EtaQuotientSpec {
    /// (multiplier m, exponent e) for η(mτ)^e.
    pub factors: Vec<(Rat, i64)>,
    /// Optional explicit extra prefactor q^leading.
    pub leading: Option<Rat>,
}

impl EtaQuotientSpec {
    pub fn new(factors: &[(Rat, i64)]) -> Self {
        Self { factors: factors.to_vec(), leading: None }
    }

    /// Integer-multiplier shorthand.
    pub fn ints(factors: &[(i64, i64)]) -> Self {
        Self::new(&factors.iter().map(|&(m, e)| (ri(m), e)).collect::<Vec<_>>())
    }

    /// Σ e·m/24 (+ leading).
    pub fn leading_exponent(&self) -> Rat {
        let mut s = self.leading.clone().unwrap_or_else(Rat::zero);
        for (m, e) in &self.factors {
            s += m * ri(*e) / ri(24);
        }
        s
    }

    /// Weight of the quotient as a modular form: Σ e / 2.
    pub fn weight(&self) -> Rat {
        r(self.factors.iter().map(|f| f.1).sum(), 2)
    }
}

/// ∏ η(m_i τ)^(e_i), exact below `t`.
///
/// Each factor is expanded as q^(m e/24)·(q^m;q^m)^e so that the working precision
/// can be chosen relative to the final leading exponent.
pub fn eta_quotient(spec: &EtaQuotientSpec, t: &Rat) -> QResult<QSeries> {
    if spec.factors.is_empty() {
        return Err(QError::InvalidArgument("empty eta quotient".into()));
    }
    let lead = spec.leading_exponent();
    // product of (q^m;q^m)_∞^e has order 0; need it exact below t - lead
    let rel = t - &lead;
    if !rel.is_positive() {
        return Ok(QSeries::zero(Some(t.clone())));
    }
    let mut acc = QSeries::one();
    for (m, e) in &spec.factors {
        if *e == 0 {
            continue;
        }
        let p = eta(m, &(&rel + m / ri(24)))?.qshift(&(-(m / ri(24))));
        acc = acc.mul(&p.pow(*e)?);
    }
    Ok(acc.qshift(&lead).truncate(t))
}

/// Gaussian binomial [l choose m]_q (exact polynomial).
pub fn gaussian_binomial(l: i64, m: i64) -> QSeries {
    if m < 0 || l < 0 || m > l {
        return QSeries::exact_zero();
    }
    // Pascal recursion: [l,m] = [l-1,m-1] + q^m [l-1,m]
    let mut table: HashMap<(i64, i64), Vec<BigInt>> = HashMap::new();
    fn get(t: &mut HashMap<(i64, i64), Vec<BigInt>>, l: i64, m: i64) -> Vec<BigInt> {
        if m < 0 || m > l {
            return vec![];
        }
        if m == 0 || m == l {
            return vec![BigInt::one()];
        }
        if let Some(v) = t.get(&(l, m)) {
            return v.clone();
        }
        let a = get(t, l - 1, m - 1);
        let b = get(t, l - 1, m);
        let len = a.len().max(b.len() + m as usize);
        let mut out = vec![BigInt::zero(); len];
        for (i, c) in a.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in b.iter().enumerate() {
            out[i + m as usize] += c;
        }
        t.insert((l, m), out.clone());
        out
    }
    let coeffs = get(&mut table, l, m);
    QSeries::from_pairs(
        coeffs
            .into_iter()
            .enumerate()
            .map(|(i, c)| (ri(i as i64), Rat::from_integer(c))),
        None,
    )
}

/// Partition-style factor 1/(q^s;q^s)_n exact below `t` (n may be 0).
pub fn inv_qpoch_n(n: u64, s: &Rat, t: &Rat) -> QResult<QSeries> {
    let p = pochhammer(&Monomial::q_power(ri(1), s.clone()), s, Some(n), t)?;
    p.specialize_ones().invert()
}

/// Enumerate integer vectors `v` with (v+shift)ᵀG(v+shift)/2 < t.
/// Uses a floating ellipsoid box padded by one step, then filters exactly.
pub fn lattice_points_below(gram: &RMat, shift: &[Rat], t: &Rat) -> QResult<Vec<(Vec<i64>, Rat)>> {
    let n = gram.len();
    if !is_positive_definite(gram) {
        return Err(QError::DivergentTheta("gram matrix is not positive definite".into()));
    }
    if shift.len() != n {
        return Err(QError::RankMismatch(shift.len(), n));
    }
    let lmin = min_eigenvalue(gram).max(1e-12);
    let tf = crate::rat::to_f64(t).max(0.0);
    // |x|² ≤ 2t/λ_min
    let rad = (2.0 * tf / lmin).sqrt() + 1.0;
    let ranges: Vec<(i64, i64)> = shift
        .iter()
        .map(|s| {
            let sf = crate::rat::to_f64(s);
            ((-rad - sf).floor() as i64 - 1, (rad - sf).ceil() as i64 + 1)
        })
        .collect();
    let mut out = Vec::new();
    let mut v: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if n == 0 {
        out.push((vec![], Rat::zero()));
        return Ok(out);
    }
    loop {
        let x: Vec<Rat> = v.iter().zip(shift).map(|(a, s)| ri(*a) + s).collect();
        let q = bilinear(gram, &x, &x) / ri(2);
        if &q < t {
            out.push((v.clone(), q));
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(out);
            }
            v[i] += 1;
            if v[i] > ranges[i].1 {
                v[i] = ranges[i].0;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Σ_v q^((v+s)ᵀG(v+s)/2), exact below `t`.
pub fn theta_lattice(gram: &RMat, shift: &[Rat], t: &Rat) -> QResult<QSeries> {
    let pts = lattice_points_below(gram, shift, t)?;
    Ok(QSeries::from_pairs(pts.into_iter().map(|(_, e)| (e, ri(1))), Some(t.clone())))
}

// ---------------------------------------------------------------------------
// Multivariate series

/// A signed z-monomial times a q-power: `coeff · z^z · q^q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: Rat,
    pub q: Rat,
    pub z: Vec<Rat>,
}

impl Monomial {
    pub fn new(coeff: Rat, q: Rat, z: Vec<Rat>) -> Self {
        Self { coeff, q, z }
    }

    pub fn q_power(coeff: Rat, q: Rat) -> Self {
        Self { coeff, q, z: vec![] }
    }

    fn z_trivial(&self) -> bool {
        self.z.iter().all(|x| x.is_zero())
    }
}

type MKey = (i64, Vec<i64>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiSeries {
    nvars: usize,
    denom: i64,
    zdenom: i64,
    terms: BTreeMap<MKey, Rat>,
    trunc: Option<i64>,
}

impl MultiSeries {
    fn build(nvars: usize, denom: i64, zdenom: i64, terms: BTreeMap<MKey, Rat>, trunc: Option<i64>) -> Self {
        let mut s = Self { nvars, denom, zdenom, terms, trunc };
        s.canonicalize();
        s
    }

    fn canonicalize(&mut self) {
        if let Some(k) = self.trunc {
            self.terms.retain(|key, c| key.0 < k && !c.is_zero());
        } else {
            self.terms.retain(|_, c| !c.is_zero());
        }
        let mut g = self.denom;
        let mut h = self.zdenom;
        for (k, v) in self.terms.keys() {
            g = g.gcd(k);
            for x in v {
                h = h.gcd(x);
            }
        }
        if let Some(k) = self.trunc {
            g = g.gcd(&k);
        }
        if g > 1 || h > 1 {
            self.denom /= g;
            self.zdenom /= h;
            self.terms = std::mem::take(&mut self.terms)
                .into_iter()
                .map(|((k, v), c)| ((k / g, v.into_iter().map(|x| x / h).collect()), c))
                .collect();
            self.trunc = self.trunc.map(|k| k / g);
        }
    }

    fn regrid(&self, d: i64, e: i64) -> BTreeMap<MKey, Rat> {
        let f = d / self.denom;
        let g = e / self.zdenom;
        self.terms
            .iter()
            .map(|((k, v), c)| ((k * f, v.iter().map(|x| x * g).collect()), c.clone()))
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn trunc(&self) -> Option<Rat> {
        self.trunc.map(|k| r(k, self.denom))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate (q exponent, z exponents, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (Rat, Vec<Rat>, &Rat)> + '_ {
        let (d, e) = (self.denom, self.zdenom);
        self.terms
            .iter()
            .map(move |((k, v), c)| (r(*k, d), v.iter().map(|x| r(*x, e)).collect(), c))
    }

    pub fn from_terms<I: IntoIterator<Item = (Rat, Vec<Rat>, Rat)>>(nvars: usize, it: I, trunc: Option<Rat>) -> Self {
        let items: Vec<(Rat, Vec<Rat>, Rat)> = it.into_iter().collect();
        let mut d = 1;
        let mut e = 1;
        for (q, z, _) in &items {
            assert_eq!(z.len(), nvars, "z-vector length");
            d = lcm(d, den_i64(q));
            for x in z {
                e = lcm(e, den_i64(x));
            }
        }
        if let Some(t) = &trunc {
            d = lcm(d, den_i64(t));
        }
        let mut terms: BTreeMap<MKey, Rat> = BTreeMap::new();
        for (q, z, c) in items {
            let key = (on_grid(&q, d).unwrap(), z.iter().map(|x| on_grid(x, e).unwrap()).collect());
            *terms.entry(key).or_insert_with(Rat::zero) += c;
        }
        Self::build(nvars, d, e, terms, trunc.map(|t| on_grid(&t, d).unwrap()))
    }

    pub fn one(nvars: usize) -> Self {
        Self::monomial(nvars, &Monomial::new(ri(1), ri(0), vec![ri(0); nvars]), None)
    }

    pub fn zero(nvars: usize, trunc: Option<Rat>) -> Self {
        Self::from_terms(nvars, std::iter::empty(), trunc)
    }

    pub fn monomial(nvars: usize, m: &Monomial, trunc: Option<Rat>) -> Self {
        let z = if m.z.is_empty() { vec![ri(0); nvars] } else { m.z.clone() };
        Self::from_terms(nvars, [(m.q.clone(), z, m.coeff.clone())], trunc)
    }

    pub fn from_qseries(s: &QSeries, nvars: usize) -> Self {
        Self::from_terms(
            nvars,
            s.terms().map(|(e, c)| (e, vec![ri(0); nvars], c.clone())),
            s.trunc(),
        )
    }

    fn ord_grid(&self) -> Option<i64> {
        self.terms.keys().next().map(|k| k.0).or(self.trunc)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars);
        let d = lcm(self.denom, o.denom);
        let e = lcm(self.zdenom, o.zdenom);
        let mut t = self.regrid(d, e);
        for (k, c) in o.regrid(d, e) {
            *t.entry(k).or_insert_with(Rat::zero) += c;
        }
        let k = min_opt(self.trunc.map(|k| k * (d / self.denom)), o.trunc.map(|k| k * (d / o.denom)));
        Self::build(self.nvars, d, e, t, k)
    }

    pub fn neg(&self) -> Self {
        Self {
            nvars: self.nvars,
            denom: self.denom,
            zdenom: self.zdenom,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: &Rat) -> Self {
        Self::build(
            self.nvars,
            self.denom,
            self.zdenom,
            self.terms.iter().map(|(k, c)| (k.clone(), c * s)).collect(),
            self.trunc,
        )
    }

    pub fn truncate(&self, t: &Rat) -> Self {
        let d = lcm(self.denom, den_i64(t));
        let k = on_grid(t, d).unwrap();
        let nt = min_opt(self.trunc.map(|x| x * (d / self.denom)), Some(k));
        Self::build(self.nvars, d, self.zdenom, self.regrid(d, self.zdenom), nt)
    }

    /// Multiply by a single monomial.
    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        let other = Self::monomial(self.nvars, m, None);
        self.mul(&other)
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars);
        let d = lcm(self.denom, o.denom);
        let e = lcm(self.zdenom, o.zdenom);
        let exact_zero = |s: &Self| s.trunc.is_none() && s.terms.is_empty();
        if exact_zero(self) || exact_zero(o) {
            return Self::zero(self.nvars, None);
        }
        let oa = self.ord_grid().unwrap() * (d / self.denom);
        let ob = o.ord_grid().unwrap() * (d / o.denom);
        let k = min_opt(
            self.trunc.map(|k| k * (d / self.denom) + ob),
            o.trunc.map(|k| k * (d / o.denom) + oa),
        );
        let a = self.regrid(d, e);
        let b = o.regrid(d, e);
        // bucket b by q-key for the cutoff
        let bv: Vec<(&MKey, &Rat)> = b.iter().collect();
        let mut acc: HashMap<MKey, Rat> = HashMap::new();
        for ((ka, za), ca) in &a {
            for ((kb, zb), cb) in &bv {
                let q = ka + kb;
                if let Some(kk) = k {
                    if q >= kk {
                        break;
                    }
                }
                let z: Vec<i64> = za.iter().zip(zb.iter()).map(|(x, y)| x + y).collect();
                *acc.entry((q, z)).or_insert_with(Rat::zero) += ca * *cb;
            }
        }
        Self::build(self.nvars, d, e, acc.into_iter().collect(), k)
    }

    /// self · (1 + m), cheap path used for Pochhammer products.
    pub fn mul_binomial(&self, m: &Monomial) -> Self {
        let z = if m.z.is_empty() { vec![ri(0); self.nvars] } else { m.z.clone() };
        let mut d = lcm(self.denom, den_i64(&m.q));
        let mut e = self.zdenom;
        for x in &z {
            e = lcm(e, den_i64(x));
        }
        d = d.max(1);
        let sq = on_grid(&m.q, d).unwrap();
        let sz: Vec<i64> = z.iter().map(|x| on_grid(x, e).unwrap()).collect();
        let kk = self.trunc.map(|k| k * (d / self.denom) + sq.min(0));
        let base = self.regrid(d, e);
        let mut acc: HashMap<MKey, Rat> = base.iter().map(|(k, c)| (k.clone(), c.clone())).collect();
        for ((q, v), c) in &base {
            let nq = q + sq;
            if let Some(kx) = kk {
                if nq >= kx {
                    continue;
                }
            }
            let nv: Vec<i64> = v.iter().zip(&sz).map(|(a, b)| a + b).collect();
            *acc.entry((nq, nv)).or_insert_with(Rat::zero) += c * &m.coeff;
        }
        Self::build(self.nvars, d, e, acc.into_iter().collect(), kk)
    }

    pub fn qshift(&self, s: &Rat) -> Self {
        self.mul_monomial(&Monomial::new(ri(1), s.clone(), vec![ri(0); self.nvars]))
    }

    /// Inverse when the lowest q-order coefficient is a single z-monomial.
    pub fn invert(&self) -> QResult<Self> {
        let Some(((o, v0), c0)) = self.terms.iter().next() else {
            return Err(QError::NonInvertible("zero multiseries".into()));
        };
        let lowest: Vec<_> = self.terms.keys().filter(|k| k.0 == *o).collect();
        if lowest.len() != 1 {
            return Err(QError::NonInvertible("lowest q-order is not a single monomial".into()));
        }
        let Some(kk) = self.trunc else {
            if self.terms.len() == 1 {
                let z: Vec<Rat> = v0.iter().map(|x| r(-x, self.zdenom)).collect();
                return Ok(Self::monomial(
                    self.nvars,
                    &Monomial::new(Rat::one() / c0, r(-o, self.denom), z),
                    None,
                ));
            }
            return Err(QError::NonInvertible("exact multiseries; truncate first".into()));
        };
        let (o, v0, c0) = (*o, v0.clone(), c0.clone());
        let n = (kk - o) as usize;
        // f = self / (c0 z^v0 q^o), grouped by relative q-step
        let mut f: Vec<Vec<(Vec<i64>, Rat)>> = vec![Vec::new(); n];
        for ((q, v), c) in &self.terms {
            let j = (q - o) as usize;
            if j == 0 {
                continue;
            }
            let z: Vec<i64> = v.iter().zip(&v0).map(|(a, b)| a - b).collect();
            f[j].push((z, c / &c0));
        }
        let nz: Vec<usize> = (1..n).filter(|&j| !f[j].is_empty()).collect();
        let mut g: Vec<HashMap<Vec<i64>, Rat>> = Vec::with_capacity(n);
        for m in 0..n {
            let mut cur: HashMap<Vec<i64>, Rat> = HashMap::new();
            if m == 0 {
                cur.insert(vec![0; self.nvars], Rat::one());
            } else {
                for &j in &nz {
                    if j > m {
                        break;
                    }
                    for (zf, cf) in &f[j] {
                        for (zg, cg) in &g[m - j] {
                            let z: Vec<i64> = zf.iter().zip(zg).map(|(a, b)| a + b).collect();
                            *cur.entry(z).or_insert_with(Rat::zero) -= cf * cg;
                        }
                    }
                }
                cur.retain(|_, c| !c.is_zero());
            }
            g.push(cur);
        }
        let inv0 = Rat::one() / c0;
        let mut terms = BTreeMap::new();
        for (m, bucket) in g.into_iter().enumerate() {
            for (z, c) in bucket {
                let zz: Vec<i64> = z.iter().zip(&v0).map(|(a, b)| a - b).collect();
                terms.insert((m as i64 - o, zz), c * &inv0);
            }
        }
        Ok(Self::build(self.nvars, self.denom, self.zdenom, terms, Some(kk - 2 * o)))
    }

    /// Set every z_i := 1.
    pub fn specialize_ones(&self) -> QSeries {
        let mut t: BTreeMap<i64, Rat> = BTreeMap::new();
        for ((q, _), c) in &self.terms {
            *t.entry(*q).or_insert_with(Rat::zero) += c;
        }
        QSeries::build(self.denom, t, self.trunc)
    }

    /// q-series multiplying the exact monomial z^target.
    pub fn coeff_extract(&self, target: &[Rat]) -> QSeries {
        assert_eq!(target.len(), self.nvars, "target length");
        let Some(tv) = target.iter().map(|x| on_grid(x, self.zdenom)).collect::<Option<Vec<i64>>>() else {
            return QSeries::build(self.denom, BTreeMap::new(), self.trunc);
        };
        let t: BTreeMap<i64, Rat> = self
            .terms
            .iter()
            .filter(|((_, v), _)| *v == tv)
            .map(|((q, _), c)| (*q, c.clone()))
            .collect();
        QSeries::build(self.denom, t, self.trunc)
    }

    /// Keep only monomials with every |z_i| ≤ zmax.
    pub fn restrict_z(&self, zmax: &Rat) -> Self {
        let lim = on_grid(&(zmax * ri(self.zdenom)).floor(), 1).unwrap();
        let t = self
            .terms
            .iter()
            .filter(|((_, v), _)| v.iter().all(|x| x.abs() <= lim))
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect();
        Self::build(self.nvars, self.denom, self.zdenom, t, self.trunc)
    }

    /// Substitute q -> q^c (c > 0).
    pub fn q_scale(&self, c: &Rat) -> Self {
        assert!(c.is_positive());
        Self::from_terms(
            self.nvars,
            self.terms().map(|(q, z, x)| (q * c, z, x.clone())),
            self.trunc().map(|t| t * c),
        )
    }

    pub fn first_mismatch(&self, o: &Self, t: &Rat) -> Option<(Rat, Vec<Rat>, Rat, Rat)> {
        let a = self.truncate(t);
        let b = o.truncate(t);
        let d = lcm(a.denom, b.denom);
        let e = lcm(a.zdenom, b.zdenom);
        let ta = a.regrid(d, e);
        let tb = b.regrid(d, e);
        let mut keys: Vec<&MKey> = ta.keys().chain(tb.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let x = ta.get(k).cloned().unwrap_or_else(Rat::zero);
            let y = tb.get(k).cloned().unwrap_or_else(Rat::zero);
            if x != y {
                return Some((r(k.0, d), k.1.iter().map(|z| r(*z, e)).collect(), x, y));
            }
        }
        None
    }

    pub fn agrees_to(&self, o: &Self, t: &Rat) -> bool {
        self.first_mismatch(o, t).is_none()
    }
}

/// (a; q^s)_count = ∏_{j<count} (1 - a q^(s j)), exact below `t`.
pub fn pochhammer(a: &Monomial, s: &Rat, count: Option<u64>, t: &Rat) -> QResult<MultiSeries> {
    let nvars = a.z.len();
    if !s.is_positive() {
        return Err(QError::InvalidArgument("pochhammer step must be positive".into()));
    }
    if count.is_none() {
        if a.q.is_negative() {
            return Err(QError::NonTerminating(format!("(a;q)_∞ with q-power {} < 0", a.q)));
        }
        if a.q.is_zero() && a.z_trivial() {
            return Err(QError::NonTerminating("(a;q)_∞ with trivial a".into()));
        }
    }
    let neg = -a.coeff.clone();
    let mut acc = MultiSeries::one(nvars);
    if a.q.is_negative() {
        // finite product with negative powers: expand exactly then truncate
        for j in 0..count.unwrap() {
            let e = &a.q + s * ri(j as i64);
            acc = acc.mul_binomial(&Monomial::new(neg.clone(), e, a.z.clone()));
        }
        return Ok(acc.truncate(t));
    }
    acc = acc.truncate(t);
    let mut j: u64 = 0;
    loop {
        if let Some(c) = count {
            if j >= c {
                break;
            }
        }
        let e = &a.q + s * ri(j as i64);
        if &e >= t {
            break;
        }
        acc = acc.mul_binomial(&Monomial::new(neg.clone(), e, a.z.clone()));
        j += 1;
    }
    Ok(acc)
}

/// Jacobi triple product: (LHS product, RHS sum), both in one variable z.
pub fn jacobi_triple(t: &Rat) -> QResult<(MultiSeries, MultiSeries)> {
    let h = r(1, 2);
    let lhs = pochhammer(&Monomial::new(ri(1), ri(1), vec![ri(0)]), &ri(1), None, t)?
        .mul(&pochhammer(&Monomial::new(ri(1), h.clone(), vec![ri(-1)]), &ri(1), None, t)?)
        .mul(&pochhammer(&Monomial::new(ri(1), h.clone(), vec![ri(1)]), &ri(1), None, t)?);
    let mut items = Vec::new();
    let kmax = (2.0 * crate::rat::to_f64(t)).sqrt().ceil() as i64 + 1;
    for k in -kmax..=kmax {
        let e = r(k * k, 2);
        if &e < t {
            let c = if k.rem_euclid(2) == 0 { ri(1) } else { ri(-1) };
            items.push((e, vec![ri(k)], c));
        }
    }
    Ok((lhs, MultiSeries::from_terms(1, items, Some(t.clone()))))
}

/// Shifted form: ∏(1-q^k)(1+z⁻¹q^(k-1))(1+zq^k) = Σ z^k q^((k²+k)/2).
pub fn jacobi_triple_variant(t: &Rat) -> QResult<(MultiSeries, MultiSeries)> {
    let lhs = pochhammer(&Monomial::new(ri(1), ri(1), vec![ri(0)]), &ri(1), None, t)?
        .mul(&pochhammer(&Monomial::new(ri(-1), ri(0), vec![ri(-1)]), &ri(1), None, t)?)
        .mul(&pochhammer(&Monomial::new(ri(-1), ri(1), vec![ri(1)]), &ri(1), None, t)?);
    let mut items = Vec::new();
    let kmax = (2.0 * crate::rat::to_f64(t)).sqrt().ceil() as i64 + 2;
    for k in -kmax..=kmax {
        let e = r(k * k + k, 2);
        if &e < t {
            items.push((e, vec![ri(k)], ri(1)));
        }
    }
    Ok((lhs, MultiSeries::from_terms(1, items, Some(t.clone()))))
}

/// q-series multiplying z^target.
pub fn coeff_extract(s: &MultiSeries, target: &[Rat]) -> QSeries {
    s.coeff_extract(target)
}

/// Number of grid steps for a truncation, rounded up.
pub fn steps(t: &Rat) -> i64 {
    ceil_i64(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ser(pairs: &[(i64, i64, i64)], t: Option<i64>) -> QSeries {
        // (num, den, coeff)
        QSeries::from_pairs(pairs.iter().map(|&(n, d, c)| (r(n, d), ri(c))), t.map(ri))
    }

    #[test]
    fn geometric_inverse() {
        let a = ser(&[(0, 1, 1), (1, 1, -1)], Some(10));
        let inv = a.invert().unwrap();
        for k in 0..10 {
            assert_eq!(inv.coeff(&ri(k)), ri(1));
        }
        let p = a.mul(&inv);
        assert!(p.agrees_to(&QSeries::one(), &ri(10)));
        assert_eq!(p.trunc(), Some(ri(10)));
    }

    #[test]
    fn shift_and_grid() {
        let s = QSeries::one().qshift(&r(-1, 24));
        assert_eq!(s.order(), Some(r(-1, 24)));
        let a = ser(&[(1, 2, 1), (1, 1, 1)], None);
        let b = ser(&[(1, 2, 1)], None);
        let p = a.mul(&b);
        assert_eq!(p, ser(&[(1, 1, 1), (3, 2, 1)], None));
        assert_eq!(p.denom(), 2);
    }

    #[test]
    fn shifted_inverse() {
        let a = ser(&[(1, 2, 1), (3, 2, -1)], Some(11));
        let inv = a.invert().unwrap();
        assert_eq!(inv.order(), Some(r(-1, 2)));
        assert_eq!(inv.coeff(&r(1, 2)), ri(1));
    }

    #[test]
    fn partitions_from_inverse_eta() {
        // direct count of partitions for the oracle
        fn parts(n: usize) -> Vec<i64> {
            let mut p = vec![0i64; n + 1];
            p[0] = 1;
            for part in 1..=n {
                for m in part..=n {
                    p[m] += p[m - part];
                }
            }
            p
        }
        let poch = pochhammer(&Monomial::q_power(ri(1), ri(1)), &ri(1), None, &ri(15)).unwrap();
        let inv = poch.specialize_ones().invert().unwrap();
        let p = parts(14);
        for k in 0..15 {
            assert_eq!(inv.coeff(&ri(k as i64)), ri(p[k]));
        }
    }

    #[test]
    fn pochhammer_examples() {
        let p = pochhammer(&Monomial::q_power(ri(1), ri(1)), &ri(1), Some(2), &ri(20)).unwrap();
        assert_eq!(p.specialize_ones(), ser(&[(0, 1, 1), (1, 1, -1), (2, 1, -1), (3, 1, 1)], Some(20)));
        let p = pochhammer(&Monomial::q_power(ri(1), ri(1)), &ri(1), None, &ri(8)).unwrap();
        assert_eq!(
            p.specialize_ones(),
            ser(&[(0, 1, 1), (1, 1, -1), (2, 1, -1), (5, 1, 1), (7, 1, 1)], Some(8))
        );
        assert!(pochhammer(&Monomial::q_power(ri(1), ri(0)), &ri(1), None, &ri(8)).is_err());
    }

    #[test]
    fn eta_examples() {
        let e = eta(&ri(1), &ri(6)).unwrap();
        let expect = ser(&[(0, 1, 1), (1, 1, -1), (2, 1, -1), (5, 1, 1)], Some(6)).qshift(&r(1, 24));
        assert!(e.agrees_to(&expect, &ri(6)));
        assert_eq!(eta(&ri(2), &ri(5)).unwrap().order(), Some(r(1, 12)));
        assert_eq!(eta(&r(1, 2), &ri(5)).unwrap().order(), Some(r(1, 48)));
        assert!(eta(&ri(0), &ri(5)).is_err());
    }

    #[test]
    fn eta_quotient_leading() {
        let spec = EtaQuotientSpec::ints(&[(4, 5), (1, -3), (8, -2)]);
        assert_eq!(spec.leading_exponent(), r(1, 24));
        let s = eta_quotient(&spec, &ri(6)).unwrap();
        assert_eq!(s.leading(), Some((r(1, 24), ri(1))));
        // η(2τ)/η(τ)² counts overpartitions: 1, 2, 4, 8, 14, ...
        let s = eta_quotient(&EtaQuotientSpec::ints(&[(2, 1), (1, -2)]), &ri(5)).unwrap();
        let c: Vec<Rat> = (0..5).map(|k| s.coeff(&ri(k))).collect();
        assert_eq!(c, vec![ri(1), ri(2), ri(4), ri(8), ri(14)]);
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(gaussian_binomial(2, 1), ser(&[(0, 1, 1), (1, 1, 1)], None));
        assert_eq!(
            gaussian_binomial(4, 2),
            ser(&[(0, 1, 1), (1, 1, 1), (2, 1, 2), (3, 1, 1), (4, 1, 1)], None)
        );
        assert!(gaussian_binomial(3, 5).is_zero());
    }

    #[test]
    fn theta_examples() {
        let g = vec![vec![ri(1)]];
        let th = theta_lattice(&g, &[ri(0)], &ri(5)).unwrap();
        assert_eq!(th, ser(&[(0, 1, 1), (1, 2, 2), (2, 1, 2), (9, 2, 2)], Some(5)));
        let bad = vec![vec![ri(-1)]];
        assert!(matches!(theta_lattice(&bad, &[ri(0)], &ri(5)), Err(QError::DivergentTheta(_))));
    }

    #[test]
    fn jtp_small() {
        let (l, rr) = jacobi_triple(&ri(10)).unwrap();
        assert!(l.agrees_to(&rr, &ri(10)));
        let (l, rr) = jacobi_triple_variant(&ri(10)).unwrap();
        assert!(l.agrees_to(&rr, &ri(10)));
        // z := 1 gives the same one-variable sum on both sides
        let (l, rr) = jacobi_triple(&ri(20)).unwrap();
        assert_eq!(l.specialize_ones(), rr.specialize_ones());
    }

    #[test]
    fn extract_trivial() {
        let s = ser(&[(0, 1, 1), (1, 1, 3)], Some(4));
        let m = MultiSeries::from_qseries(&s, 2);
        assert_eq!(m.coeff_extract(&[ri(0), ri(0)]), s);
    }

    #[test]
    fn json_round_trip() {
        let s = ser(&[(-1, 24, 1), (23, 24, -2)], Some(3)).scale(&r(1, 3));
        let v = s.to_json();
        let back = QSeries::from_json(&v).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json().to_string(), v.to_string());
    }

    #[test]
    fn multiseries_invert() {
        let a = MultiSeries::from_terms(
            1,
            [(ri(0), vec![ri(0)], ri(1)), (ri(1), vec![ri(1)], ri(1)), (ri(2), vec![ri(-1)], ri(3))],
            Some(ri(8)),
        );
        let inv = a.invert().unwrap();
        assert!(a.mul(&inv).agrees_to(&MultiSeries::one(1), &ri(8)));
    }

    fn arb_series() -> impl Strategy<Value = QSeries> {
        (
            prop::collection::vec((0i64..12, -5i64..6), 1..6),
            prop::sample::select(vec![1i64, 2, 3]),
            6i64..10,
        )
            .prop_map(|(pairs, d, t)| {
                QSeries::from_pairs(pairs.into_iter().map(|(k, c)| (r(k, d), ri(c))), Some(ri(t)))
            })
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_series(), b in arb_series(), c in arb_series()) {
            prop_assert_eq!(a.add(&b), b.add(&a));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            let lhs = a.mul(&b.add(&c));
            let rhs = a.mul(&b).add(&a.mul(&c));
            let t = lhs.trunc().unwrap().min(rhs.trunc().unwrap());
            prop_assert!(lhs.agrees_to(&rhs, &t));
        }

        #[test]
        fn inverse_two_sided(a in arb_series()) {
            prop_assume!(!a.is_zero());
            let inv = a.invert().unwrap();
            let p1 = a.mul(&inv);
            let p2 = inv.mul(&a);
            let t = p1.trunc().unwrap();
            prop_assert!(p1.agrees_to(&QSeries::one(), &t));
            prop_assert!(p2.agrees_to(&QSeries::one(), &t));
        }

        #[test]
        fn truncation_monotone(t1 in 1i64..12, dt in 1i64..8, m in prop::sample::select(vec![(1i64, 1i64), (1, 2), (2, 1), (1, 3), (3, 2)])) {
            let mm = r(m.0, m.1);
            let lo = eta(&mm, &ri(t1)).unwrap();
            let hi = eta(&mm, &ri(t1 + dt)).unwrap();
            prop_assert!(lo.agrees_to(&hi, &ri(t1)));
            let poch_lo = pochhammer(&Monomial::q_power(ri(-1), r(1, 2)), &ri(1), None, &ri(t1)).unwrap();
            let poch_hi = pochhammer(&Monomial::q_power(ri(-1), r(1, 2)), &ri(1), None, &ri(t1 + dt)).unwrap();
            prop_assert!(poch_lo.agrees_to(&poch_hi, &ri(t1)));
        }

        #[test]
        fn jtp_exact(t in 1i64..31) {
            let (l, rr) = jacobi_triple(&ri(t)).unwrap();
            prop_assert!(l.agrees_to(&rr, &ri(t)));
        }

        #[test]
        fn theta_nonneg_integral(a in 1i64..4, b in -1i64..2, c in 1i64..4) {
            let g = vec![vec![ri(2 * a), ri(b)], vec![ri(b), ri(2 * c)]];
            let th = theta_lattice(&g, &[ri(0), ri(0)], &ri(8)).unwrap();
            prop_assert_eq!(th.coeff(&ri(0)), ri(1));
            for (_, c) in th.terms() {
                prop_assert!(c.is_integer() && !c.is_negative());
            }
        }

        #[test]
        fn canonical_regrid(pairs in prop::collection::vec((0i64..8, -3i64..4), 0..5), f in 1i64..5) {
            let a = QSeries::from_pairs(pairs.iter().map(|&(k, c)| (ri(k), ri(c))), Some(ri(9)));
            let b = QSeries::from_pairs(pairs.iter().map(|&(k, c)| (r(k * f, f), ri(c))), Some(r(9 * f, f)));
            prop_assert_eq!(a, b);
        }
    }
}
