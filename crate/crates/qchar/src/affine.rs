//! Untwisted affine ŝl(n+1): root data, weight multiplicities (Freudenthal),
//! a Weyl-Kac oracle, string functions and coset characters, Sturm bounds and
//! numeric S-transformation checks.
//!
//! Finite weights are integer Dynkin-label vectors (λ₁..λₙ). Affine weights
//! carry the full label vector (λ₀..λₙ) plus a δ-grade.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{QError, QResult};
use crate::matrix::RMat;
use crate::qseries::{eta, EtaQuotientSpec, MultiSeries, QSeries};
use crate::rat::{ceil_i64, r, ri, to_f64, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootSystem {
    pub n: usize,
    pub cartan: Vec<Vec<i64>>,
    /// Positive roots in the simple-root basis.
    pub positive_roots: Vec<Vec<i64>>,
    /// Inverse Cartan matrix, the form on the weight basis.
    pub quadratic_form: RMat,
    /// Weyl vector in the weight basis.
    pub weyl_vector: Vec<i64>,
    pub dual_coxeter: i64,
    /// Simple reflections as integer matrices acting on weight-basis columns.
    pub weyl_generators: Vec<Vec<Vec<i64>>>,
    scaled_form: Vec<Vec<i64>>,
    roots_weight: Vec<Vec<i64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Root,
    Weight,
}

pub fn build_root_system(n: usize) -> QResult<RootSystem> {
    if n < 1 {
        return Err(QError::InvalidArgument("rank must be at least 1".into()));
    }
    let cartan: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i as i64 - j as i64).abs() {
                    0 => 2,
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect();
    let mut positive_roots = Vec::new();
    for a in 0..n {
        for b in a..n {
            positive_roots.push((0..n).map(|i| i64::from(i >= a && i <= b)).collect());
        }
    }
    let big = (n + 1) as i64;
    let scaled_form: Vec<Vec<i64>> = (1..=n as i64)
        .map(|i| (1..=n as i64).map(|j| i.min(j) * (big - i.max(j))).collect())
        .collect();
    let quadratic_form = scaled_form
        .iter()
        .map(|row| row.iter().map(|&x| r(x, big)).collect())
        .collect();
    let weyl_generators = (0..n)
        .map(|i| {
            (0..n)
                .map(|row| {
                    (0..n)
                        .map(|col| {
                            let id = i64::from(row == col);
                            if col == i {
                                id - cartan[i][row]
                            } else {
                                id
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut rs = RootSystem {
        n,
        cartan,
        positive_roots,
        quadratic_form,
        weyl_vector: vec![1; n],
        dual_coxeter: big,
        weyl_generators,
        scaled_form,
        roots_weight: vec![],
    };
    rs.roots_weight = rs.positive_roots.iter().map(|c| rs.root_to_weight(c)).collect();
    Ok(rs)
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[i64], s: i64) -> Vec<i64> {
    a.iter().map(|x| x * s).collect()
}

/// All permutations of 0..m with their signs.
fn permutations(m: usize) -> Vec<(Vec<usize>, i64)> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out.into_iter()
        .map(|p| {
            let mut inv = 0;
            for i in 0..m {
                for j in i + 1..m {
                    if p[i] > p[j] {
                        inv += 1;
                    }
                }
            }
            (p, if inv % 2 == 0 { 1 } else { -1 })
        })
        .collect()
}

impl RootSystem {
    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> i64 {
        let n = self.n as i64;
        n * (n + 2)
    }

    pub fn num_positive_roots(&self) -> usize {
        self.positive_roots.len()
    }

    /// (n+1)·(a, b) for weight-basis vectors, an integer.
    pub fn ip_scaled(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut s = 0;
        for i in 0..self.n {
            if a[i] == 0 {
                continue;
            }
            for j in 0..self.n {
                s += a[i] * self.scaled_form[i][j] * b[j];
            }
        }
        s
    }

    pub fn ip(&self, a: &[i64], b: &[i64]) -> Rat {
        r(self.ip_scaled(a, b), self.dual_coxeter)
    }

    pub fn norm(&self, a: &[i64]) -> Rat {
        self.ip(a, a)
    }

    pub fn root_to_weight(&self, c: &[i64]) -> Vec<i64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| c[i] * self.cartan[i][j]).sum())
            .collect()
    }

    /// Root-basis coordinates when `w` lies in the root lattice.
    pub fn weight_to_root(&self, w: &[i64]) -> Option<Vec<i64>> {
        let big = self.dual_coxeter;
        (0..self.n)
            .map(|i| {
                let s: i64 = (0..self.n).map(|j| self.scaled_form[i][j] * w[j]).sum();
                if s % big == 0 {
                    Some(s / big)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Class of a weight in P/Q, as Σ i·λ_i mod (n+1).
    pub fn congruence_class(&self, w: &[i64]) -> i64 {
        let s: i64 = w.iter().enumerate().map(|(i, x)| (i as i64 + 1) * x).sum();
        s.rem_euclid(self.dual_coxeter)
    }

    pub fn theta(&self) -> Vec<i64> {
        self.root_to_weight(&vec![1; self.n])
    }

    fn to_x(&self, w: &[i64]) -> Vec<i64> {
        let mut x = vec![0; self.n + 1];
        for i in (0..self.n).rev() {
            x[i] = x[i + 1] + w[i];
        }
        x
    }

    fn from_x(&self, x: &[i64]) -> Vec<i64> {
        (0..self.n).map(|i| x[i] - x[i + 1]).collect()
    }

    /// Dominant representative of the finite Weyl orbit.
    pub fn dominant(&self, w: &[i64]) -> Vec<i64> {
        let mut x = self.to_x(w);
        x.sort_unstable_by(|a, b| b.cmp(a));
        self.from_x(&x)
    }

    pub fn weyl_group(&self) -> Vec<(Vec<usize>, i64)> {
        permutations(self.n + 1)
    }

    /// Image of `w` under the Weyl element given as a permutation of ε-coordinates.
    pub fn weyl_act(&self, perm: &[usize], w: &[i64]) -> Vec<i64> {
        let x = self.to_x(w);
        let y: Vec<i64> = perm.iter().map(|&p| x[p]).collect();
        self.from_x(&y)
    }

    /// Distinct elements of the Weyl orbit.
    pub fn weyl_orbit(&self, w: &[i64]) -> Vec<Vec<i64>> {
        let mut out: Vec<Vec<i64>> = self.weyl_group().iter().map(|(p, _)| self.weyl_act(p, w)).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Representative in the fundamental alcove at level k (all affine labels ≥ 0).
    pub fn alcove_rep(&self, w: &[i64], k: i64) -> Vec<i64> {
        let th = self.theta();
        let mut v = self.dominant(w);
        loop {
            let t: i64 = v.iter().sum(); // (λ, θ) for A_n
            if t <= k {
                return v;
            }
            v = self.dominant(&sub(&v, &scale(&th, t - k)));
        }
    }

    /// |ω_i|² for each fundamental weight.
    fn fundamental_norms(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.scaled_form[i][i] as f64 / self.dual_coxeter as f64)
            .collect()
    }
}

/// Finite-part inner product in the requested basis.
pub fn inner_product(rs: &RootSystem, w1: &[Rat], w2: &[Rat], basis: Basis) -> QResult<Rat> {
    if w1.len() != rs.n {
        return Err(QError::RankMismatch(w1.len(), rs.n));
    }
    if w2.len() != rs.n {
        return Err(QError::RankMismatch(w2.len(), rs.n));
    }
    let mut s = Rat::zero();
    for i in 0..rs.n {
        for j in 0..rs.n {
            let m = match basis {
                Basis::Root => ri(rs.cartan[i][j]),
                Basis::Weight => rs.quadratic_form[i][j].clone(),
            };
            s += &w1[i] * m * &w2[j];
        }
    }
    Ok(s)
}

/// An element λ̄ + a·Λ₀ + b·δ of the affine weight space (finite part in the weight basis).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineVector {
    pub finite: Vec<Rat>,
    pub lambda0: Rat,
    pub delta: Rat,
}

pub fn affine_inner_product(rs: &RootSystem, a: &AffineVector, b: &AffineVector) -> QResult<Rat> {
    let f = inner_product(rs, &a.finite, &b.finite, Basis::Weight)?;
    Ok(f + &a.lambda0 * &b.delta + &a.delta * &b.lambda0)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineWeight {
    /// Dynkin labels (λ₀, λ₁, …, λₙ).
    pub labels: Vec<i64>,
    /// Amount of δ subtracted.
    pub grade: i64,
}

impl AffineWeight {
    pub fn new(labels: &[i64]) -> Self {
        Self { labels: labels.to_vec(), grade: 0 }
    }

    pub fn level(&self) -> i64 {
        self.labels.iter().sum()
    }

    pub fn finite(&self) -> Vec<i64> {
        self.labels[1..].to_vec()
    }

    pub fn is_dominant(&self) -> bool {
        self.labels.iter().all(|&x| x >= 0)
    }

    pub fn rank(&self) -> usize {
        self.labels.len().saturating_sub(1)
    }

    /// Parse "[2,0,0,0]" (commas optional for single-digit labels: "[2000]").
    pub fn parse(s: &str) -> QResult<Self> {
        let t = s.trim().trim_start_matches('[').trim_end_matches(']');
        let labels: Result<Vec<i64>, _> = if t.contains(',') {
            t.split(',').map(|x| x.trim().parse::<i64>()).collect()
        } else {
            let mut out = Vec::new();
            let mut neg = false;
            for ch in t.chars() {
                match ch {
                    '-' => neg = true,
                    c if c.is_ascii_digit() => {
                        let d = c.to_digit(10).unwrap() as i64;
                        out.push(if neg { -d } else { d });
                        neg = false;
                    }
                    c if c.is_whitespace() => {}
                    _ => return Err(QError::Parse(format!("bad weight '{s}'"))),
                }
            }
            Ok(out)
        };
        let labels = labels.map_err(|_| QError::Parse(format!("bad weight '{s}'")))?;
        if labels.len() < 2 {
            return Err(QError::Parse(format!("weight '{s}' needs at least two labels")));
        }
        Ok(Self::new(&labels))
    }
}

impl fmt::Display for AffineWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.labels.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", v.join(","))
    }
}

/// Weight multiplicities of L(Λ) down to a given depth, keyed on dominant finite parts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultTable {
    pub highest: AffineWeight,
    pub depth: i64,
    entries: HashMap<String, i128>,
    #[serde(skip)]
    n: usize,
}

fn key(w: &[i64], d: i64) -> String {
    let v: Vec<String> = w.iter().map(|x| x.to_string()).collect();
    format!("{}|{}", v.join(","), d)
}

impl MultTable {
    /// mult_Λ(λ̄ − dδ); zero outside the computed range or off the support.
    pub fn mult(&self, rs: &RootSystem, w: &[i64], d: i64) -> i128 {
        if d < 0 || d > self.depth {
            return 0;
        }
        self.entries.get(&key(&rs.dominant(w), d)).copied().unwrap_or(0)
    }

    fn mult_dom(&self, w: &[i64], d: i64) -> i128 {
        self.entries.get(&key(w, d)).copied().unwrap_or(0)
    }

    /// Nonzero entries as (dominant finite weight, depth, multiplicity).
    pub fn entries(&self) -> Vec<(Vec<i64>, i64, i128)> {
        let mut v: Vec<(Vec<i64>, i64, i128)> = self
            .entries
            .iter()
            .map(|(k, m)| {
                let (a, d) = k.split_once('|').unwrap();
                let w = if a.is_empty() { vec![] } else { a.split(',').map(|x| x.parse().unwrap()).collect() };
                (w, d.parse().unwrap(), *m)
            })
            .collect();
        v.sort();
        v
    }
}

fn check_highest(rs: &RootSystem, hw: &AffineWeight) -> QResult<()> {
    if hw.labels.len() != rs.n + 1 {
        return Err(QError::RankMismatch(hw.labels.len(), rs.n + 1));
    }
    if !hw.is_dominant() {
        return Err(QError::NonDominant(hw.to_string()));
    }
    if hw.level() <= 0 {
        return Err(QError::InvalidArgument("level must be positive".into()));
    }
    Ok(())
}

/// Dominant weights in the class of `lam` with (n+1)|λ̄|² ≤ bound.
fn dominant_in_ball(rs: &RootSystem, class: i64, bound: i64) -> Vec<Vec<i64>> {
    let n = rs.n;
    let lim: Vec<i64> = (0..n)
        .map(|i| ((bound as f64 / rs.scaled_form[i][i] as f64).sqrt()).floor() as i64 + 1)
        .collect();
    let mut out = Vec::new();
    let mut v = vec![0i64; n];
    loop {
        if rs.congruence_class(&v) == class && rs.ip_scaled(&v, &v) <= bound {
            out.push(v.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            v[i] += 1;
            if v[i] > lim[i] {
                v[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Affine Freudenthal recursion, breadth-first in depth.
pub fn freudenthal_mults(rs: &RootSystem, hw: &AffineWeight, depth: i64) -> QResult<MultTable> {
    check_highest(rs, hw)?;
    if depth < 0 {
        return Err(QError::InvalidArgument("depth must be nonnegative".into()));
    }
    let big = rs.dual_coxeter;
    let k = hw.level();
    let kk = k + rs.dual_coxeter;
    let lam = hw.finite();
    let rho = &rs.weyl_vector;
    let nlam = rs.ip_scaled(&lam, &lam);
    let lr = add(&lam, rho);
    let nlr = rs.ip_scaled(&lr, &lr);
    let class = rs.congruence_class(&lam);
    // all finite roots with their pairing data: (weight vector, root coords)
    let mut all_roots: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
    for (w, c) in rs.roots_weight.iter().zip(&rs.positive_roots) {
        all_roots.push((w.clone(), c.clone()));
        all_roots.push((scale(w, -1), scale(c, -1)));
    }
    let pos_count = rs.positive_roots.len();
    let pair = |a: &[i64], c: &[i64]| -> i64 { a.iter().zip(c).map(|(x, y)| x * y).sum() };

    let mut table = MultTable { highest: hw.clone(), depth, entries: HashMap::new(), n: rs.n };
    let ovf = || QError::Overflow("freudenthal_mults");
    let nrank = rs.n as i128;
    for d in 0..=depth {
        let bound = nlam + 2 * k * d * big;
        let mut ws = dominant_in_ball(rs, class, bound);
        ws.sort_by_key(|w| {
            let wr = add(w, rho);
            -rs.ip_scaled(&wr, &wr)
        });
        for a in ws {
            if d == 0 && a == lam {
                table.entries.insert(key(&a, 0), 1);
                continue;
            }
            let ar = add(&a, rho);
            let den = nlr - rs.ip_scaled(&ar, &ar) + 2 * kk * d * big;
            if den <= 0 {
                continue;
            }
            let mut sum: i128 = 0;
            let look = |t: &MultTable, w: &[i64], dd: i64| -> i128 {
                let wd = rs.dominant(w);
                if rs.ip_scaled(&wd, &wd) > nlam + 2 * k * dd * big {
                    0
                } else {
                    t.mult_dom(&wd, dd)
                }
            };
            // real roots at n = 0 (positive only), then ᾱ + mδ for m ≥ 1
            for (idx, (aw, ac)) in all_roots.iter().enumerate() {
                let is_pos = idx % 2 == 0;
                let ap = pair(&a, ac);
                if is_pos {
                    let mut j = 1i64;
                    loop {
                        let w = add(&a, &scale(aw, j));
                        let nw = rs.ip_scaled(&w, &w);
                        if nw > bound && ap + 2 * j > 0 {
                            break;
                        }
                        let m = look(&table, &w, d);
                        if m != 0 {
                            let f = (ap + 2 * j) as i128;
                            sum = sum.checked_add(m.checked_mul(f).ok_or_else(ovf)?).ok_or_else(ovf)?;
                        }
                        j += 1;
                    }
                }
                for mm in 1..=d {
                    let mut j = 1i64;
                    while j * mm <= d {
                        let w = add(&a, &scale(aw, j));
                        let m = look(&table, &w, d - j * mm);
                        if m != 0 {
                            let f = (ap + 2 * j + k * mm) as i128;
                            sum = sum.checked_add(m.checked_mul(f).ok_or_else(ovf)?).ok_or_else(ovf)?;
                        }
                        j += 1;
                    }
                }
            }
            debug_assert_eq!(all_roots.len(), 2 * pos_count);
            // imaginary roots mδ with multiplicity n
            for mm in 1..=d {
                let mut j = 1i64;
                while j * mm <= d {
                    let m = look(&table, &a, d - j * mm);
                    if m != 0 {
                        let f = nrank * (k * mm) as i128;
                        sum = sum.checked_add(m.checked_mul(f).ok_or_else(ovf)?).ok_or_else(ovf)?;
                    }
                    j += 1;
                }
            }
            let num = 2 * sum * big as i128;
            let den = den as i128;
            if num % den != 0 {
                return Err(QError::InvalidArgument(format!(
                    "non-integral multiplicity at {a:?}, depth {d}"
                )));
            }
            let m = num / den;
            if m != 0 {
                table.entries.insert(key(&a, d), m);
            }
        }
    }
    Ok(table)
}

type TableKey = (usize, Vec<i64>);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<MultTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<MultTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn disk_path(n: usize, hw: &AffineWeight) -> Option<std::path::PathBuf> {
    let dir = std::env::var_os("QCHAR_CACHE_DIR")?;
    let labels: Vec<String> = hw.labels.iter().map(|x| x.to_string()).collect();
    Some(std::path::PathBuf::from(dir).join(format!("mult-v1-a{}-{}.json", n, labels.join("_"))))
}

/// Memoized Freudenthal table with at least the requested depth. When the
/// environment variable QCHAR_CACHE_DIR is set, tables are also persisted there.
pub fn cached_mults(rs: &RootSystem, hw: &AffineWeight, depth: i64) -> QResult<Arc<MultTable>> {
    let key = (rs.n, hw.labels.clone());
    if let Some(t) = table_cache().lock().unwrap().get(&key) {
        if t.depth >= depth {
            return Ok(t.clone());
        }
    }
    if let Some(p) = disk_path(rs.n, hw) {
        if let Ok(text) = std::fs::read_to_string(&p) {
            if let Ok(mut t) = serde_json::from_str::<MultTable>(&text) {
                t.n = rs.n;
                if t.depth >= depth && t.highest == *hw {
                    let t = Arc::new(t);
                    table_cache().lock().unwrap().insert(key, t.clone());
                    return Ok(t);
                }
            }
        }
    }
    let t = Arc::new(freudenthal_mults(rs, hw, depth)?);
    if let Some(p) = disk_path(rs.n, hw) {
        if let Ok(text) = serde_json::to_string(&*t) {
            let _ = std::fs::create_dir_all(p.parent().unwrap());
            let _ = std::fs::write(&p, text);
        }
    }
    let mut c = table_cache().lock().unwrap();
    let keep = match c.get(&key) {
        Some(old) if old.depth >= t.depth => old.clone(),
        _ => t.clone(),
    };
    c.insert(key, keep.clone());
    Ok(keep)
}

/// m_Λ = |Λ̄+ρ|²/(2(k+h∨)) − dim g/24.
pub fn modular_anomaly(rs: &RootSystem, hw: &AffineWeight) -> Rat {
    let lr = add(&hw.finite(), &rs.weyl_vector);
    rs.norm(&lr) / ri(2 * (hw.level() + rs.dual_coxeter)) - r(rs.dim(), 24)
}

/// s_Λ(λ) for a finite weight λ̄.
pub fn string_prefactor(rs: &RootSystem, hw: &AffineWeight, lam: &[i64]) -> Rat {
    modular_anomaly(rs, hw) - rs.norm(lam) / ri(2 * hw.level())
}

fn check_lambda(rs: &RootSystem, hw: &AffineWeight, lam: &AffineWeight) -> QResult<Vec<i64>> {
    check_highest(rs, hw)?;
    if lam.labels.len() != rs.n + 1 {
        return Err(QError::RankMismatch(lam.labels.len(), rs.n + 1));
    }
    if lam.level() != hw.level() {
        return Err(QError::InvalidArgument(format!("level of {lam} differs from level of {hw}")));
    }
    let f = lam.finite();
    if rs.congruence_class(&f) != rs.congruence_class(&hw.finite()) {
        return Err(QError::NotInCoset(format!("{lam} relative to {hw}")));
    }
    Ok(f)
}

/// Canonical representative of the class of λ under W, translations by kM and δ-shifts.
pub fn string_equivalence_class(rs: &RootSystem, hw: &AffineWeight, lam: &AffineWeight) -> AffineWeight {
    let k = hw.level();
    let rep = rs.alcove_rep(&lam.finite(), k);
    let mut labels = vec![k - rep.iter().sum::<i64>()];
    labels.extend(rep);
    AffineWeight { labels, grade: 0 }
}

/// c^Λ_λ, exact below `t`.
pub fn string_function(rs: &RootSystem, hw: &AffineWeight, lam: &AffineWeight, t: &Rat) -> QResult<QSeries> {
    check_lambda(rs, hw, lam)?;
    let rep = string_equivalence_class(rs, hw, lam).finite();
    let s = string_prefactor(rs, hw, &rep);
    let dmax = ceil_i64(&(t - &s)) - 1;
    if dmax < 0 {
        return Ok(QSeries::zero(Some(t.clone())));
    }
    let table = cached_mults(rs, hw, dmax)?;
    let pairs: Vec<(Rat, Rat)> = (0..=dmax)
        .map(|d| (ri(d) + &s, Rat::from_integer(table.mult(rs, &rep, d).into())))
        .collect();
    Ok(QSeries::from_pairs(pairs, Some(t.clone())))
}

/// b^Λ_λ = η(τ)^n · c^Λ_λ.
pub fn coset_character(rs: &RootSystem, hw: &AffineWeight, lam: &AffineWeight, t: &Rat) -> QResult<QSeries> {
    let n = rs.n as i64;
    let lead_eta = r(n, 24);
    let c = string_function(rs, hw, lam, &(t - &lead_eta))?;
    let ordc = c.order().unwrap_or_else(|| t.clone());
    let et = t - ordc.clone().min(ri(0)) + ri(1);
    let e = crate::qseries::eta_quotient(&EtaQuotientSpec::ints(&[(1, n)]), &et)?;
    Ok(c.mul(&e).truncate(t))
}

/// Weyl-Kac oracle: coefficients of e^{-Λ}·ch L(Λ) in x_i = e^{-α_i} (i = 0..n)
/// on a box large enough to contain every weight of depth ≤ dmax.
#[derive(Clone, Debug)]
pub struct WeylKacBox {
    pub bounds: Vec<i64>,
    data: Vec<i128>,
    strides: Vec<usize>,
    lam: Vec<i64>,
}

impl WeylKacBox {
    fn index(&self, c: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for (i, &x) in c.iter().enumerate() {
            if x < 0 || x > self.bounds[i] {
                return None;
            }
            idx += x as usize * self.strides[i];
        }
        Some(idx)
    }

    fn cell(&self, mut idx: usize) -> Vec<i64> {
        let mut c = vec![0; self.bounds.len()];
        for i in (0..self.bounds.len()).rev() {
            c[i] = (idx / self.strides[i]) as i64;
            idx %= self.strides[i];
        }
        c
    }

    /// Iterate (finite weight, depth, multiplicity) over nonzero cells.
    pub fn weights(&self, rs: &RootSystem) -> Vec<(Vec<i64>, i64, i128)> {
        let mut out = Vec::new();
        for (idx, &v) in self.data.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let c = self.cell(idx);
            let d = c[0];
            let rc: Vec<i64> = c[1..].iter().map(|x| x - d).collect();
            out.push((sub(&self.lam, &rs.root_to_weight(&rc)), d, v));
        }
        out
    }

    /// Coefficient of the weight (λ̄, depth); None if outside the box.
    pub fn coefficient(&self, rs: &RootSystem, lam: &[i64], d: i64) -> Option<i128> {
        let rc = rs.weight_to_root(&sub(&self.lam, lam))?;
        let mut c = vec![d];
        c.extend(rc.iter().map(|x| x + d));
        self.index(&c).map(|i| self.data[i])
    }

    pub fn cells(&self) -> usize {
        self.data.len()
    }
}

pub fn weyl_kac_box(rs: &RootSystem, hw: &AffineWeight, dmax: i64) -> QResult<WeylKacBox> {
    check_highest(rs, hw)?;
    let n = rs.n;
    let k = hw.level();
    let kk = k + rs.dual_coxeter;
    let lam = hw.finite();
    let fn_norms = rs.fundamental_norms();
    let lam_norm = to_f64(&rs.norm(&lam));
    // weights satisfy |λ̄|² ≤ |Λ̄|² + 2k·d; root coordinates of Λ̄ − λ̄ bounded by |Λ̄ − λ̄|·|ω_i|
    let rad = lam_norm.sqrt() + (lam_norm + 2.0 * (k * dmax) as f64).sqrt();
    let mut bounds = vec![dmax.max(0)];
    for w in &fn_norms {
        bounds.push(dmax.max(0) + (rad * w.sqrt()).floor() as i64 + 1);
    }
    let mut strides = vec![1usize; n + 1];
    for i in 1..=n {
        strides[i] = strides[i - 1] * (bounds[i - 1] as usize + 1);
    }
    let size = strides[n] * (bounds[n] as usize + 1);
    if size > 50_000_000 {
        return Err(QError::Cap(format!("Weyl-Kac box of {size} cells")));
    }
    let mut bx = WeylKacBox { bounds, data: vec![0; size], strides, lam: lam.clone() };

    // numerator Σ det(w) e^{w(Λ+ρ̂)−(Λ+ρ̂)}, w = t_γ·w̄
    let x = add(&lam, &rs.weyl_vector);
    let nx = rs.ip_scaled(&x, &x);
    let xf = to_f64(&rs.norm(&x)).sqrt();
    let gam_r = (xf + (xf * xf + 2.0 * (kk * dmax) as f64).sqrt()) / kk as f64;
    let glim: Vec<i64> = fn_norms.iter().map(|w| (gam_r * w.sqrt()).floor() as i64 + 1).collect();
    let big = rs.dual_coxeter;
    for (perm, sign) in rs.weyl_group() {
        let u0 = rs.weyl_act(&perm, &x);
        let mut g: Vec<i64> = glim.iter().map(|l| -l).collect();
        'gamma: loop {
            let u = add(&u0, &scale(&rs.root_to_weight(&g), kk));
            let nu = rs.ip_scaled(&u, &u);
            let num = nu - nx;
            if num % (2 * kk * big) != 0 {
                return Err(QError::InvalidArgument("non-integral Weyl-Kac depth".into()));
            }
            let depth = num / (2 * kk * big);
            if depth <= dmax {
                let rc = rs.weight_to_root(&sub(&x, &u)).expect("root lattice");
                let mut c = vec![depth];
                c.extend(rc.iter().map(|v| v + depth));
                if let Some(i) = bx.index(&c) {
                    bx.data[i] += sign as i128;
                }
            }
            let mut i = 0;
            loop {
                if i == n {
                    break 'gamma;
                }
                g[i] += 1;
                if g[i] > glim[i] {
                    g[i] = -glim[i];
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    // divide by ∏(1 − e^{-α̂})^{mult}: one prefix-sum pass per factor
    let mut factors: Vec<Vec<i64>> = Vec::new();
    for m in 0..=dmax.max(0) {
        for c in &rs.positive_roots {
            let mut v = vec![m];
            v.extend(c.iter().map(|x| x + m));
            factors.push(v);
            if m >= 1 {
                let mut v = vec![m];
                v.extend(c.iter().map(|x| m - x));
                factors.push(v);
            }
        }
        if m >= 1 {
            for _ in 0..n {
                factors.push(vec![m; n + 1]);
            }
        }
    }
    let ovf = || QError::Overflow("weyl_kac_box");
    for beta in factors {
        if beta.iter().zip(&bx.bounds).any(|(b, l)| b > l) {
            continue;
        }
        let shift: usize = beta.iter().zip(&bx.strides).map(|(b, s)| *b as usize * s).sum();
        for idx in 0..size {
            let c = bx.cell(idx);
            if c.iter().zip(&beta).all(|(a, b)| a >= b) {
                let prev = bx.data[idx - shift];
                if prev != 0 {
                    bx.data[idx] = bx.data[idx].checked_add(prev).ok_or_else(ovf)?;
                }
            }
        }
    }
    Ok(bx)
}

/// Character as a MultiSeries in q (δ-depth) and z (finite weight labels);
/// with `keep_z = false` the z-variables are set to 1 (homogeneous grading).
pub fn weyl_kac_character(rs: &RootSystem, hw: &AffineWeight, t: &Rat, keep_z: bool) -> QResult<MultiSeries> {
    let dmax = ceil_i64(t) - 1;
    let bx = weyl_kac_box(rs, hw, dmax)?;
    let items: Vec<(Rat, Vec<Rat>, Rat)> = bx
        .weights(rs)
        .into_iter()
        .map(|(w, d, m)| (ri(d), w.iter().map(|x| ri(*x)).collect(), Rat::from_integer(m.into())))
        .collect();
    let ms = MultiSeries::from_terms(rs.n, items, Some(t.clone()));
    if keep_z {
        Ok(ms)
    } else {
        Ok(MultiSeries::from_qseries(&ms.specialize_ones(), 0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub pass: bool,
    pub checked: usize,
    /// (weight, depth, Freudenthal value, Weyl-Kac value)
    pub first_mismatch: Option<(Vec<i64>, i64, i128, i128)>,
}

/// Compare Freudenthal multiplicities against the Weyl-Kac box for every weight of depth ≤ dmax.
pub fn freudenthal_vs_weyl_kac(rs: &RootSystem, hw: &AffineWeight, dmax: i64) -> QResult<OracleReport> {
    let table = freudenthal_mults(rs, hw, dmax)?;
    let bx = weyl_kac_box(rs, hw, dmax)?;
    let mut checked = 0;
    for idx in 0..bx.data.len() {
        let c = bx.cell(idx);
        let d = c[0];
        let rc: Vec<i64> = c[1..].iter().map(|x| x - d).collect();
        let w = sub(&bx.lam, &rs.root_to_weight(&rc));
        let a = table.mult(rs, &w, d);
        let b = bx.data[idx];
        checked += 1;
        if a != b {
            return Ok(OracleReport { pass: false, checked, first_mismatch: Some((w, d, a, b)) });
        }
    }
    // table entries must all lie in the box
    for (w, d, m) in table.entries() {
        for v in rs.weyl_orbit(&w) {
            if bx.coefficient(rs, &v, d).is_none() {
                return Ok(OracleReport { pass: false, checked, first_mismatch: Some((v, d, m, 0)) });
            }
        }
    }
    Ok(OracleReport { pass: true, checked, first_mismatch: None })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaReport {
    pub pass: bool,
    pub checked: usize,
    pub classes: usize,
    pub first_mismatch: Option<(Vec<i64>, i64, Rat, i128)>,
}

/// Checks ch L(Λ) = q^{-s_Λ} Σ c^Λ_λ Θ_{λ,k} weight by weight against the Weyl-Kac box.
pub fn theta_decomposition_check(rs: &RootSystem, hw: &AffineWeight, t: &Rat) -> QResult<ThetaReport> {
    check_highest(rs, hw)?;
    if rs.n > 2 || hw.level() > 3 {
        return Err(QError::Cap(format!(
            "theta decomposition limited to n ≤ 2, k ≤ 3 (got n = {}, k = {})",
            rs.n,
            hw.level()
        )));
    }
    let k = hw.level();
    let dmax = ceil_i64(t) - 1;
    let bx = weyl_kac_box(rs, hw, dmax)?;
    let m = modular_anomaly(rs, hw);
    let tc = &m + ri(dmax + 1);
    let mut strfuns: HashMap<Vec<i64>, QSeries> = HashMap::new();
    let mut checked = 0;
    for idx in 0..bx.data.len() {
        let c = bx.cell(idx);
        let d = c[0];
        let rc: Vec<i64> = c[1..].iter().map(|x| x - d).collect();
        let w = sub(&bx.lam, &rs.root_to_weight(&rc));
        let rep = rs.alcove_rep(&w, k);
        if !strfuns.contains_key(&rep) {
            let mut labels = vec![k - rep.iter().sum::<i64>()];
            labels.extend(rep.iter().copied());
            let sf = string_function(rs, hw, &AffineWeight::new(&labels), &tc)?;
            strfuns.insert(rep.clone(), sf);
        }
        // mult(w, d) is the coefficient of q^{d + m − |w|²/2k} in c_rep
        let e = ri(d) + &m - rs.norm(&w) / ri(2 * k);
        let pred = strfuns[&rep].coeff(&e);
        checked += 1;
        if pred != Rat::from_integer(bx.data[idx].into()) {
            return Ok(ThetaReport {
                pass: false,
                checked,
                classes: strfuns.len(),
                first_mismatch: Some((w, d, pred, bx.data[idx])),
            });
        }
    }
    Ok(ThetaReport { pass: true, checked, classes: strfuns.len(), first_mismatch: None })
}

/// Index of Γ₀(M) in SL(2,Z).
pub fn gamma0_index(m: i64) -> i64 {
    let mut idx = m;
    let mut x = m;
    let mut p = 2;
    while p * p <= x {
        if x % p == 0 {
            idx = idx / p * (p + 1);
            while x % p == 0 {
                x /= p;
            }
        }
        p += 1;
    }
    if x > 1 {
        idx = idx / x * (x + 1);
    }
    idx
}

/// floor(weight·[SL₂(Z):Γ₀(M)]/12) + 1.
pub fn sturm_bound_weight(weight: i64, m: i64) -> i64 {
    weight * gamma0_index(m) / 12 + 1
}

/// Coefficient bound for η^{dim g}·c^Λ_λ of ŝl(n+1) at level k, with N the
/// norm-evenness integer of the weight lattice; group level lcm(Nk, N(k+h∨)).
pub fn sturm_bound(k: i64, n: i64, big_n: i64) -> i64 {
    let weight = n * (n + 1) / 2;
    let m = (big_n * k).lcm(&(big_n * (k + n + 1)));
    sturm_bound_weight(weight, m)
}

/// Least N with N|μ|² ∈ 2Z for all weights μ of A_n.
pub fn weight_lattice_level(rs: &RootSystem) -> i64 {
    let mut nn = 1;
    loop {
        let ok = (0..rs.n).all(|i| {
            (0..rs.n).all(|j| {
                let v = r(nn * rs.scaled_form[i][j], rs.dual_coxeter);
                // N|μ|² even for all μ iff N·A⁻¹ has integer entries and even diagonal
                v.is_integer() && (i != j || v.to_integer().is_even())
            })
        });
        if ok {
            return nn;
        }
        nn += 1;
    }
}

/// A coefficient of the form rat·√rad.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub rat: Rat,
    pub rad: Rat,
}

impl Surd {
    pub fn rational(x: Rat) -> Self {
        Self { rat: x, rad: ri(1) }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.rat) * to_f64(&self.rad).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct ModularReport {
    pub max_rel_err: f64,
    /// (τ, row, relative error)
    pub rows: Vec<(Complex64, usize, f64)>,
}

/// Check f_i(−1/τ) = (−iτ)^w Σ_j R_ij g_j(τ) numerically.
pub fn modular_s_numeric(
    lhs: &[QSeries],
    rhs: &[QSeries],
    relation: &[Vec<Surd>],
    weight: &Rat,
    taus: &[Complex64],
    tol: f64,
) -> QResult<ModularReport> {
    if relation.len() != lhs.len() {
        return Err(QError::RankMismatch(relation.len(), lhs.len()));
    }
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &tau in taus {
        let st = -Complex64::new(1.0, 0.0) / tau;
        let g: Vec<Complex64> = rhs
            .iter()
            .map(|s| numeric_checked(s, tau, tol))
            .collect::<QResult<_>>()?;
        let fac = (Complex64::new(0.0, -1.0) * tau).powf(to_f64(weight));
        for (i, (f, rel)) in lhs.iter().zip(relation).enumerate() {
            if rel.len() != rhs.len() {
                return Err(QError::RankMismatch(rel.len(), rhs.len()));
            }
            let lv = numeric_checked(f, st, tol)?;
            let mut rv = Complex64::new(0.0, 0.0);
            for (c, gv) in rel.iter().zip(&g) {
                rv += gv * c.to_f64();
            }
            rv *= fac;
            let scale = lv.norm().max(rv.norm()).max(1e-300);
            let err = (lv - rv).norm() / scale;
            worst = worst.max(err);
            rows.push((tau, i, err));
        }
    }
    Ok(ModularReport { max_rel_err: worst, rows })
}

fn numeric_checked(s: &QSeries, tau: Complex64, tol: f64) -> QResult<Complex64> {
    let (v, tail) = numeric_value(s, tau)?;
    if tail > tol * v.norm().max(1e-300) * 1e-2 {
        return Err(QError::IncreaseT(format!("tail bound {tail:.3e} at τ = {tau}")));
    }
    Ok(v)
}

/// Σ c·e^{2πiτ·e} with a tail estimate from the last stored coefficients.
pub fn numeric_value(s: &QSeries, tau: Complex64) -> QResult<(Complex64, f64)> {
    if tau.im <= 0.0 {
        return Err(QError::InvalidArgument("Im τ must be positive".into()));
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let mut acc = Complex64::new(0.0, 0.0);
    let terms: Vec<(Rat, &Rat)> = s.terms().collect();
    for (e, c) in &terms {
        acc += (two_pi_i * tau * to_f64(e)).exp() * to_f64(c);
    }
    let tail = match s.trunc() {
        None => 0.0,
        Some(k) => {
            let window = (terms.len() / 4).max(1);
            let cmax = terms
                .iter()
                .rev()
                .take(window)
                .map(|(_, c)| to_f64(c).abs())
                .fold(1.0f64, f64::max);
            let step = 1.0 / s.denom() as f64;
            let ratio = (-2.0 * std::f64::consts::PI * tau.im * step).exp();
            // assume coefficients grow at most geometrically by 2 per unit step beyond the window
            cmax * (-2.0 * std::f64::consts::PI * tau.im * to_f64(&k)).exp() / (1.0 - ratio).max(1e-12)
        }
    };
    Ok((acc, tail))
}

/// Known η-quotient expressions used to cross-check Freudenthal output (ŝl(2)₂).
pub fn sl2_level2_c11(t: &Rat) -> QResult<QSeries> {
    let num = eta(&ri(2), &(t + ri(1)))?;
    let den = crate::qseries::eta_quotient(&EtaQuotientSpec::ints(&[(1, -2)]), &(t + ri(1)))?;
    Ok(num.mul(&den).truncate(t))
}

/// All coefficients are nonnegative integers.
pub fn nonneg_integral(s: &QSeries) -> bool {
    s.terms().all(|(_, c)| c.is_integer() && !c.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::eta_quotient;
    use proptest::prelude::*;

    fn aw(l: &[i64]) -> AffineWeight {
        AffineWeight::new(l)
    }

    #[test]
    fn root_data() {
        let a1 = build_root_system(1).unwrap();
        assert_eq!(a1.positive_roots, vec![vec![1]]);
        assert_eq!(a1.dual_coxeter, 2);
        let a2 = build_root_system(2).unwrap();
        assert_eq!(a2.positive_roots.len(), 3);
        assert!(a2.positive_roots.contains(&vec![1, 1]));
        let a3 = build_root_system(3).unwrap();
        assert_eq!(a3.positive_roots.len(), 6);
        assert!(a3.positive_roots.contains(&vec![1, 1, 1]));
        for rs in [&a1, &a2, &a3] {
            for c in &rs.positive_roots {
                let w = rs.root_to_weight(c);
                assert_eq!(rs.norm(&w), ri(2));
            }
        }
        assert!(build_root_system(0).is_err());
    }

    #[test]
    fn products_and_strange_formula() {
        let a2 = build_root_system(2).unwrap();
        let e1 = vec![ri(1), ri(0)];
        let e2 = vec![ri(0), ri(1)];
        assert_eq!(inner_product(&a2, &e1, &e1, Basis::Root).unwrap(), ri(2));
        assert_eq!(inner_product(&a2, &e1, &e2, Basis::Root).unwrap(), ri(-1));
        for n in 1..=4 {
            let rs = build_root_system(n).unwrap();
            let rho = rs.weyl_vector.clone();
            assert_eq!(rs.norm(&rho) / ri(2 * rs.dual_coxeter), r(rs.dim(), 24));
        }
        let v = AffineVector { finite: vec![ri(0), ri(0)], lambda0: ri(1), delta: ri(0) };
        let d = AffineVector { finite: vec![ri(0), ri(0)], lambda0: ri(0), delta: ri(1) };
        assert_eq!(affine_inner_product(&a2, &v, &d).unwrap(), ri(1));
        assert_eq!(affine_inner_product(&a2, &d, &d).unwrap(), ri(0));
        assert_eq!(affine_inner_product(&a2, &v, &v).unwrap(), ri(0));
        assert!(inner_product(&a2, &[ri(1)], &e1, Basis::Weight).is_err());
    }

    #[test]
    fn sl2_level2_string() {
        let rs = build_root_system(1).unwrap();
        let c = string_function(&rs, &aw(&[1, 1]), &aw(&[1, 1]), &ri(10)).unwrap();
        let expect = sl2_level2_c11(&ri(10)).unwrap();
        assert_eq!(c, expect);
        let coeffs: Vec<Rat> = (0..5).map(|k| c.coeff(&ri(k))).collect();
        assert_eq!(coeffs, vec![ri(1), ri(2), ri(4), ri(8), ri(14)]);
        let t = freudenthal_mults(&rs, &aw(&[1, 1]), 3).unwrap();
        assert_eq!(t.mult(&rs, &[1], 0), 1);
        assert!(freudenthal_mults(&rs, &aw(&[-1, 3]), 3).is_err());
    }

    #[test]
    fn oracle_small() {
        for n in 1..=2 {
            let rs = build_root_system(n).unwrap();
            let hw = {
                let mut l = vec![0; n + 1];
                l[0] = 1;
                l[1] = 1;
                aw(&l)
            };
            let rep = freudenthal_vs_weyl_kac(&rs, &hw, 5).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn weyl_kac_vacuum_sl2_level1() {
        // level-1 vacuum of ŝl(2): Σ q^{n²} z^{2n} / (q)_∞
        let rs = build_root_system(1).unwrap();
        let ch = weyl_kac_character(&rs, &aw(&[1, 0]), &ri(6), true).unwrap();
        let s0 = ch.coeff_extract(&[ri(0)]);
        let p = eta_quotient(&EtaQuotientSpec::ints(&[(1, -1)]), &ri(7)).unwrap().qshift(&r(1, 24));
        assert!(s0.agrees_to(&p, &ri(6)));
        let s2 = ch.coeff_extract(&[ri(2)]);
        assert!(s2.agrees_to(&p.qshift(&ri(1)), &ri(6)));
    }

    #[test]
    fn sl4_string_b0101() {
        let rs = build_root_system(3).unwrap();
        let b = coset_character(&rs, &aw(&[0, 1, 0, 1]), &aw(&[0, 1, 0, 1]), &ri(4)).unwrap();
        let e = eta_quotient(&EtaQuotientSpec::ints(&[(2, 3), (3, 2), (1, -4), (6, -1)]), &ri(4)).unwrap();
        assert_eq!(b, e);
    }

    #[test]
    fn coset_rejects() {
        let rs = build_root_system(2).unwrap();
        let e = string_function(&rs, &aw(&[2, 0, 0]), &aw(&[1, 1, 0]), &ri(3));
        assert!(matches!(e, Err(QError::NotInCoset(_))));
    }

    #[test]
    fn equivalence_examples() {
        let rs = build_root_system(2).unwrap();
        let hw = aw(&[2, 0, 0]);
        let a = string_equivalence_class(&rs, &hw, &aw(&[0, 1, 1]));
        let b = string_equivalence_class(&rs, &hw, &aw(&[1, 2, -1]));
        let c = string_equivalence_class(&rs, &hw, &aw(&[1, -1, 2]));
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn theta_decomposition_small() {
        let rs = build_root_system(1).unwrap();
        assert!(theta_decomposition_check(&rs, &aw(&[2, 0]), &ri(8)).unwrap().pass);
        assert!(theta_decomposition_check(&rs, &aw(&[1, 0]), &ri(10)).unwrap().pass);
        let rs3 = build_root_system(3).unwrap();
        assert!(matches!(theta_decomposition_check(&rs3, &aw(&[2, 0, 0, 0]), &ri(4)), Err(QError::Cap(_))));
    }

    #[test]
    fn sturm_examples() {
        let rs = build_root_system(3).unwrap();
        let nn = weight_lattice_level(&rs);
        assert_eq!(nn, 8);
        let b = sturm_bound(2, 3, nn);
        assert_eq!(b, 49);
        assert!(b <= 100);
        assert_eq!(sturm_bound_weight(0, 48), 1);
        assert!(sturm_bound(2, 3, 4) <= sturm_bound(2, 3, 8));
        assert_eq!(gamma0_index(48), 96);
    }

    #[test]
    fn eta_s_transform() {
        let e = eta(&ri(1), &ri(30)).unwrap();
        for tau in [Complex64::new(0.0, 0.9), Complex64::new(0.1, 1.2)] {
            let rep = modular_s_numeric(
                &[e.clone()],
                &[e.clone()],
                &[vec![Surd::rational(ri(1))]],
                &r(1, 2),
                &[tau],
                1e-8,
            )
            .unwrap();
            assert!(rep.max_rel_err < 1e-10, "{rep:?}");
        }
    }

    proptest! {
        #[test]
        fn alcove_rep_idempotent(a in -4i64..5, b in -4i64..5, k in 1i64..4) {
            let rs = build_root_system(2).unwrap();
            let rep = rs.alcove_rep(&[a, b], k);
            prop_assert_eq!(rs.alcove_rep(&rep, k), rep.clone());
            for w in rs.weyl_orbit(&[a, b]) {
                prop_assert_eq!(rs.alcove_rep(&w, k), rep.clone());
            }
            let th = rs.theta();
            let shifted = add(&[a, b], &scale(&th, k));
            prop_assert_eq!(rs.alcove_rep(&shifted, k), rep);
        }

        #[test]
        fn weyl_invariance(d in 0i64..4, i in 0usize..6) {
            let rs = build_root_system(2).unwrap();
            let t = freudenthal_mults(&rs, &aw(&[1, 1, 0]), 4).unwrap();
            for (w, dd, m) in t.entries() {
                if dd != d { continue; }
                let (p, _) = &rs.weyl_group()[i];
                let v = rs.weyl_act(p, &w);
                prop_assert_eq!(t.mult(&rs, &v, d), m);
            }
        }
    }
}
