//! Group-like fusion rings, pentagon/hexagon residuals, an exact solver for
//! F- and R-phases valued in 8th roots of unity, and the constraints on the
//! generalised commutation constants.
//!
//! All F- and R-symbols are phases ζ^k with ζ = e^{2πi/8}; they are stored as
//! exponents k mod 8, so every equation is linear over ℤ/8.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{QError, QResult};
use crate::matrix::inverse;
use crate::rat::{parse_rat, r, ri, to_f64, Rat};

const ORDER: u8 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FusionRing {
    pub channels: Vec<String>,
    pub dims: Vec<Rat>,
    table: HashMap<(usize, usize), usize>,
    pub unit: usize,
}

impl FusionRing {
    /// Build from channel labels, dimensions and rows `(a, [a×c for c in channels])`.
    /// Entries are mirrored (the product is commutative); rows may cover a subset
    /// of left factors. Label 0 is the unit.
    pub fn new(channels: Vec<String>, dims: Vec<Rat>, rows: &[(usize, Vec<usize>)]) -> QResult<Self> {
        let n = channels.len();
        if dims.len() != n {
            return Err(QError::RankMismatch(dims.len(), n));
        }
        let mut table = HashMap::new();
        for x in 0..n {
            table.insert((0, x), x);
            table.insert((x, 0), x);
        }
        for (a, row) in rows {
            if row.len() != n {
                return Err(QError::RankMismatch(row.len(), n));
            }
            for (b, &c) in row.iter().enumerate() {
                if c >= n {
                    return Err(QError::InvalidArgument(format!("channel index {c} out of range")));
                }
                for key in [(*a, b), (b, *a)] {
                    if let Some(old) = table.insert(key, c) {
                        if old != c {
                            return Err(QError::InvalidArgument(format!(
                                "inconsistent products for {}×{}",
                                channels[*a], channels[b]
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { channels, dims, table, unit: 0 })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn index(&self, label: &str) -> QResult<usize> {
        let l = label.trim();
        self.channels
            .iter()
            .position(|c| c == l || c.trim_matches(|x| x == '[' || x == ']') == l.trim_matches(|x| x == '[' || x == ']'))
            .ok_or_else(|| QError::InvalidArgument(format!("unknown channel '{label}'")))
    }

    pub fn product(&self, a: usize, b: usize) -> Option<usize> {
        self.table.get(&(a, b)).copied()
    }

    /// Channels whose product with every channel is tabulated.
    fn full_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&a| (0..self.len()).all(|b| self.table.contains_key(&(a, b)))).collect()
    }

    /// The closed sub-ring generated by the fully tabulated rows; missing
    /// products inside it are completed by associativity.
    pub fn untwisted(&self) -> FusionRing {
        let full = self.full_rows();
        let mut keep: Vec<usize> = full.clone();
        for &a in &full {
            for &b in &full {
                if let Some(c) = self.product(a, b) {
                    if !keep.contains(&c) {
                        keep.push(c);
                    }
                }
            }
        }
        keep.sort();
        let mut table = self.table.clone();
        loop {
            let mut added = false;
            for &x in &full {
                for &y in &keep {
                    let Some(a) = table.get(&(x, y)).copied() else { continue };
                    for &b in &keep {
                        if table.contains_key(&(a, b)) {
                            continue;
                        }
                        if let Some(c) = table.get(&(y, b)).and_then(|&yb| table.get(&(x, yb))).copied() {
                            table.insert((a, b), c);
                            table.insert((b, a), c);
                            added = true;
                        }
                    }
                }
            }
            if !added {
                break;
            }
        }
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut sub = HashMap::new();
        for &a in &keep {
            for &b in &keep {
                if let Some(c) = table.get(&(a, b)).and_then(|c| pos.get(c)) {
                    sub.insert((pos[&a], pos[&b]), *c);
                }
            }
        }
        FusionRing {
            channels: keep.iter().map(|&c| self.channels[c].clone()).collect(),
            dims: keep.iter().map(|&c| self.dims[c].clone()).collect(),
            table: sub,
            unit: 0,
        }
    }

    /// Unit, commutativity, associativity and the permutation property where defined.
    pub fn check_axioms(&self) -> Result<(), String> {
        let n = self.len();
        for a in 0..n {
            if self.product(0, a) != Some(a) {
                return Err(format!("unit fails on {}", self.channels[a]));
            }
            let row: Vec<Option<usize>> = (0..n).map(|b| self.product(a, b)).collect();
            if row.iter().all(|x| x.is_some()) {
                let set: HashSet<_> = row.iter().collect();
                if set.len() != n {
                    return Err(format!("row {} is not a permutation", self.channels[a]));
                }
            }
            for b in 0..n {
                if self.product(a, b) != self.product(b, a) {
                    return Err(format!("not commutative at {},{}", self.channels[a], self.channels[b]));
                }
                for c in 0..n {
                    let l = self.product(a, b).and_then(|x| self.product(x, c));
                    let rr = self.product(b, c).and_then(|x| self.product(a, x));
                    if let (Some(l), Some(rr)) = (l, rr) {
                        if l != rr {
                            return Err(format!(
                                "not associative at ({},{},{})",
                                self.channels[a], self.channels[b], self.channels[c]
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The x with a×x = c, if unique.
    fn divide(&self, a: usize, c: usize) -> Option<usize> {
        let mut it = (0..self.len()).filter(|&x| self.product(a, x) == Some(c));
        let x = it.next()?;
        it.next().is_none().then_some(x)
    }

    /// Parse the plain-text layout:
    /// `channels: [0] [1] ...`, `dims: 0 1/2 ...`, then `row [1]: [1] [0] ...`.
    pub fn parse(text: &str) -> QResult<Self> {
        let mut channels = Vec::new();
        let mut dims = Vec::new();
        let mut raw_rows: Vec<(String, Vec<String>)> = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, rest) = line.split_once(':').ok_or_else(|| QError::Parse(format!("bad line '{line}'")))?;
            let toks: Vec<String> = rest.split_whitespace().map(String::from).collect();
            match key.trim() {
                "channels" => channels = toks,
                "dims" => dims = toks.iter().map(|t| parse_rat(t)).collect::<QResult<_>>()?,
                k if k.starts_with("row") => raw_rows.push((k[3..].trim().to_string(), toks)),
                other => return Err(QError::Parse(format!("unknown key '{other}'"))),
            }
        }
        let idx = |s: &str| {
            channels.iter().position(|c| c == s).ok_or_else(|| QError::Parse(format!("unknown channel '{s}'")))
        };
        let rows = raw_rows
            .iter()
            .map(|(a, toks)| Ok((idx(a)?, toks.iter().map(|t| idx(t)).collect::<QResult<Vec<_>>>()?)))
            .collect::<QResult<Vec<_>>>()?;
        Self::new(channels, dims, &rows)
    }
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Built-in tables: `sl3` (8 channels) and `sl4` (24 channels), each with the
/// rows of the untwisted non-unit channels; `z2` is a single fermion.
pub fn builtin_ring(name: &str) -> QResult<FusionRing> {
    match name {
        "sl3" => {
            let ch = labels(&["[0]", "[1]", "[2]", "[3]", "[tau]", "[1']", "[2']", "[3']"]);
            let dims = vec![ri(0), r(1, 2), r(1, 2), r(1, 2), r(3, 5), r(1, 10), r(1, 10), r(1, 10)];
            let rows = vec![
                (1, vec![1, 0, 3, 2, 5, 4, 7, 6]),
                (2, vec![2, 3, 0, 1, 6, 7, 4, 5]),
                (3, vec![3, 2, 1, 0, 7, 6, 5, 4]),
            ];
            FusionRing::new(ch, dims, &rows)
        }
        "sl4" => {
            let base = ["0", "1", "2", "3", "4", "5", "6", "eta"];
            let mut ch = Vec::new();
            for b in base {
                ch.push(format!("[{b}]"));
            }
            for prime in ["'", "''"] {
                for b in base {
                    let b = if b == "0" { "tau" } else { b };
                    ch.push(format!("[{b}{prime}]"));
                }
            }
            let mut dims: Vec<Rat> = vec![ri(0), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), r(1, 2), ri(1)];
            dims.extend([r(2, 3), r(1, 6), r(1, 6), r(1, 6), r(1, 6), r(1, 6), r(1, 6), r(2, 3)]);
            dims.extend([r(1, 8), r(1, 8), r(5, 8), r(5, 8), r(1, 8), r(5, 8), r(1, 8), r(5, 8)]);
            // untwisted block of each row; twisted blocks repeat it with an offset
            let block: [[usize; 8]; 6] = [
                [1, 0, 4, 7, 2, 6, 5, 3],
                [2, 4, 0, 5, 1, 3, 7, 6],
                [3, 7, 5, 0, 6, 2, 4, 1],
                [4, 2, 1, 6, 0, 7, 3, 5],
                [5, 6, 3, 2, 7, 0, 1, 4],
                [6, 5, 7, 4, 3, 1, 0, 2],
            ];
            let rows: Vec<(usize, Vec<usize>)> = block
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let mut row: Vec<usize> = b.to_vec();
                    row.extend(b.iter().map(|x| x + 8));
                    row.extend(b.iter().map(|x| x + 16));
                    (i + 1, row)
                })
                .collect();
            FusionRing::new(ch, dims, &rows)
        }
        "z2" => FusionRing::new(labels(&["[0]", "[1]"]), vec![ri(0), r(1, 2)], &[(1, vec![1, 0])]),
        "trivial" => FusionRing::new(labels(&["[0]"]), vec![ri(0)], &[]),
        other => Err(QError::InvalidArgument(format!("unknown built-in ring '{other}'"))),
    }
}

pub fn fusion_product(ring: &FusionRing, a: &str, b: &str) -> QResult<String> {
    let (i, j) = (ring.index(a)?, ring.index(b)?);
    ring.product(i, j)
        .map(|k| ring.channels[k].clone())
        .ok_or_else(|| QError::InvalidArgument(format!("{a}×{b} is not tabulated")))
}

// ---------------------------------------------------------------------------
// F/R data

/// F-symbols keyed by their lower triple (j, k, i) as written in F^l_{jki}; the
/// remaining labels are p = i×j, q = j×k, l = i×q. R-symbols keyed by (i, j),
/// with upper label i×j. Values are exponents of ζ₈.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FRSolution {
    pub f: BTreeMap<(usize, usize, usize), u8>,
    pub r: BTreeMap<(usize, usize), u8>,
}

impl FRSolution {
    pub fn f(&self, ring: &FusionRing, j: usize, k: usize, i: usize) -> u8 {
        if f_is_gauged(ring, j, k, i) {
            0
        } else {
            self.f.get(&(j, k, i)).copied().unwrap_or(0)
        }
    }

    pub fn r(&self, i: usize, j: usize) -> u8 {
        self.r.get(&(i, j)).copied().unwrap_or(0)
    }

    /// Relabel channels by `perm[old] = new`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        Self {
            f: self.f.iter().map(|(&(a, b, c), &v)| ((perm[a], perm[b], perm[c]), v)).collect(),
            r: self.r.iter().map(|(&(a, b), &v)| ((perm[a], perm[b]), v)).collect(),
        }
    }

    pub fn to_json(&self, ring: &FusionRing) -> Value {
        let name = |i: usize| ring.channels[i].clone();
        let f: Vec<Value> = self
            .f
            .iter()
            .filter(|(_, v)| **v != 0)
            .map(|(&(j, k, i), &v)| {
                let (p, q, l) = f_labels(ring, j, k, i).unwrap_or((0, 0, 0));
                json!({"lower": [name(j), name(k), name(i)], "upper": name(l), "p": name(p), "q": name(q), "zeta8_exp": v})
            })
            .collect();
        let rr: Vec<Value> = self
            .r
            .iter()
            .map(|(&(i, j), &v)| {
                json!({"i": name(i), "j": name(j), "k": ring.product(i, j).map(name), "zeta8_exp": v})
            })
            .collect();
        json!({"F": f, "R": rr})
    }
}

fn f_labels(ring: &FusionRing, j: usize, k: usize, i: usize) -> Option<(usize, usize, usize)> {
    let p = ring.product(i, j)?;
    let q = ring.product(j, k)?;
    let l = ring.product(i, q)?;
    (ring.product(p, k) == Some(l)).then_some((p, q, l))
}

/// Gauge: F = 1 whenever one of its six labels is the unit.
fn f_is_gauged(ring: &FusionRing, j: usize, k: usize, i: usize) -> bool {
    match f_labels(ring, j, k, i) {
        Some((p, q, l)) => [p, q, j, k, i, l].contains(&ring.unit),
        None => true,
    }
}

/// A linear equation Σ c·x ≡ rhs over ℤ/8, with F and R unknowns.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Equation {
    f: Vec<((usize, usize, usize), i8)>,
    r: Vec<((usize, usize), i8)>,
    rhs: u8,
    label: String,
}

fn push_f(ring: &FusionRing, acc: &mut Vec<((usize, usize, usize), i8)>, key: (usize, usize, usize), c: i8) {
    if !f_is_gauged(ring, key.0, key.1, key.2) {
        acc.push((key, c));
    }
}

/// Pentagon tuples: (F^t_{qcp})_{ad}(F^t_{rsa})_{bc} = (F^d_{rsq})_{ec}(F^t_{esp})_{bd}(F^b_{qrp})_{ae}.
fn pentagon_equations(ring: &FusionRing) -> Vec<Equation> {
    let n = ring.len();
    let mut out = Vec::new();
    for q in 0..n {
        for c in 0..n {
            for p in 0..n {
                for rr in 0..n {
                    let Some(eq) = pentagon_tuple(ring, q, c, p, rr) else { continue };
                    out.push(eq);
                }
            }
        }
    }
    out
}

fn pentagon_tuple(ring: &FusionRing, q: usize, c: usize, p: usize, rr: usize) -> Option<Equation> {
    let (a, d, t) = f_labels(ring, q, c, p)?;
    let s = ring.divide(rr, c)?;
    let (b, c2, t2) = f_labels(ring, rr, s, a)?;
    let (e, c3, d2) = f_labels(ring, rr, s, q)?;
    let (b2, d3, t3) = f_labels(ring, e, s, p)?;
    let (a2, e2, b3) = f_labels(ring, q, rr, p)?;
    if c2 != c || t2 != t || c3 != c || d2 != d || b2 != b || d3 != d || t3 != t || a2 != a || e2 != e || b3 != b {
        return None;
    }
    let mut f = Vec::new();
    push_f(ring, &mut f, (q, c, p), 1);
    push_f(ring, &mut f, (rr, s, a), 1);
    push_f(ring, &mut f, (rr, s, q), -1);
    push_f(ring, &mut f, (e, s, p), -1);
    push_f(ring, &mut f, (q, rr, p), -1);
    let name = |i: usize| ring.channels[i].as_str();
    Some(Equation { f, r: vec![], rhs: 0, label: format!("pentagon q,c,p,r={},{},{},{}", name(q), name(c), name(p), name(rr)) })
}

/// Hexagon: R^c_{pr}(F^s_{prq})_{ac}R^a_{pq} = (F^s_{rpq})_{bc}R^s_{pb}(F^s_{qrp})_{ab}.
fn hexagon_equations(ring: &FusionRing) -> Vec<Equation> {
    let n = ring.len();
    let mut out = Vec::new();
    for p in 0..n {
        for rr in 0..n {
            for q in 0..n {
                if let Some(eq) = hexagon_tuple(ring, p, rr, q) {
                    out.push(eq);
                }
            }
        }
    }
    out
}

fn hexagon_tuple(ring: &FusionRing, p: usize, rr: usize, q: usize) -> Option<Equation> {
    let (a, c, s) = f_labels(ring, p, rr, q)?;
    let (b, c2, s2) = f_labels(ring, rr, p, q)?;
    let (a2, b2, s3) = f_labels(ring, q, rr, p)?;
    if c2 != c || s2 != s || a2 != a || b2 != b || s3 != s || ring.product(p, b) != Some(s) {
        return None;
    }
    let mut f = Vec::new();
    push_f(ring, &mut f, (p, rr, q), 1);
    push_f(ring, &mut f, (rr, p, q), -1);
    push_f(ring, &mut f, (q, rr, p), -1);
    let rterms = vec![((p, rr), 1), ((p, q), 1), ((p, b), -1)];
    let name = |i: usize| ring.channels[i].as_str();
    Some(Equation { f, r: rterms, rhs: 0, label: format!("hexagon p,r,q={},{},{}", name(p), name(rr), name(q)) })
}

/// (R^k_{ij})² = e^{2πi(h_k − h_i − h_j)}, and R = 1 when i or j is the unit.
fn rmat_equations(ring: &FusionRing) -> QResult<Vec<Equation>> {
    let n = ring.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let Some(k) = ring.product(i, j) else { continue };
            let x = (&ring.dims[k] - &ring.dims[i] - &ring.dims[j]) * ri(ORDER as i64);
            if !x.is_integer() {
                return Err(QError::InvalidArgument(format!(
                    "phase of R^{}_{}{} is not an 8th root of unity",
                    ring.channels[k], ring.channels[i], ring.channels[j]
                )));
            }
            let rhs = x.to_integer().to_string().parse::<i64>().unwrap_or(0).rem_euclid(ORDER as i64) as u8;
            if i == ring.unit || j == ring.unit {
                out.push(Equation {
                    f: vec![],
                    r: vec![((i, j), 1)],
                    rhs: 0,
                    label: format!("R^{}_{}{} = 1", ring.channels[k], ring.channels[i], ring.channels[j]),
                });
            }
            out.push(Equation {
                f: vec![],
                r: vec![((i, j), 2)],
                rhs,
                label: format!("R^{}_{}{} squared", ring.channels[k], ring.channels[i], ring.channels[j]),
            });
        }
    }
    Ok(out)
}

fn eval(eq: &Equation, ring: &FusionRing, sol: &FRSolution) -> u8 {
    let mut s: i64 = 0;
    for ((j, k, i), c) in &eq.f {
        s += *c as i64 * sol.f(ring, *j, *k, *i) as i64;
    }
    for ((i, j), c) in &eq.r {
        s += *c as i64 * sol.r(*i, *j) as i64;
    }
    (s - eq.rhs as i64).rem_euclid(ORDER as i64) as u8
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    /// max |ζ^{lhs} − ζ^{rhs}| over tuples.
    pub max_defect: f64,
    pub tuples: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

impl Residual {
    pub fn is_zero(&self) -> bool {
        self.violations == 0
    }
}

fn residual(eqs: &[Equation], ring: &FusionRing, sol: &FRSolution) -> Residual {
    let mut res = Residual { max_defect: 0.0, tuples: eqs.len(), violations: 0, first_violation: None };
    for eq in eqs {
        let k = eval(eq, ring, sol);
        if k != 0 {
            res.violations += 1;
            let d = 2.0 * (std::f64::consts::PI * k as f64 / ORDER as f64).sin().abs();
            res.max_defect = res.max_defect.max(d);
            if res.first_violation.is_none() {
                res.first_violation = Some(eq.label.clone());
            }
        }
    }
    res
}

pub fn pentagon_residual(ring: &FusionRing, sol: &FRSolution) -> Residual {
    residual(&pentagon_equations(ring), ring, sol)
}

pub fn hexagon_residual(ring: &FusionRing, sol: &FRSolution) -> Residual {
    residual(&hexagon_equations(ring), ring, sol)
}

pub fn rmat_residual(ring: &FusionRing, sol: &FRSolution) -> QResult<Residual> {
    Ok(residual(&rmat_equations(ring)?, ring, sol))
}

// ---------------------------------------------------------------------------
// Linear algebra over ℤ/8

fn val2(x: u8) -> u32 {
    if x == 0 {
        3
    } else {
        x.trailing_zeros()
    }
}

fn inv_odd(x: u8) -> u8 {
    (1..ORDER).step_by(2).find(|y| (x as u32 * *y as u32) % ORDER as u32 == 1).unwrap()
}

/// Affine description of all solutions: x₀ + span(generators) over ℤ/8.
#[derive(Clone, Debug)]
pub struct SolutionSpace {
    pub particular: Vec<u8>,
    pub generators: Vec<Vec<u8>>,
    /// log₂ of the number of solutions.
    pub log2_count: u32,
    f_vars: Vec<(usize, usize, usize)>,
    r_vars: Vec<(usize, usize)>,
}

impl SolutionSpace {
    fn to_solution(&self, x: &[u8]) -> FRSolution {
        let nf = self.f_vars.len();
        FRSolution {
            f: self.f_vars.iter().enumerate().map(|(i, k)| (*k, x[i])).collect(),
            r: self.r_vars.iter().enumerate().map(|(i, k)| (*k, x[nf + i])).collect(),
        }
    }

    /// Whether the linear form Σ c·F ≡ 0 holds on every solution.
    pub fn relation_holds(&self, f_terms: &[((usize, usize, usize), i8)]) -> bool {
        let idx: HashMap<_, _> = self.f_vars.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let apply = |x: &[u8]| -> i64 {
            f_terms.iter().map(|(k, c)| idx.get(k).map(|&i| *c as i64 * x[i] as i64).unwrap_or(0)).sum::<i64>()
        };
        apply(&self.particular).rem_euclid(8) == 0 && self.generators.iter().all(|g| apply(g).rem_euclid(8) == 0)
    }

    /// Particular solution as an F/R table.
    pub fn representative(&self) -> FRSolution {
        self.to_solution(&self.particular)
    }
}

/// Solve all gauge-fixed pentagon, hexagon and R-square equations.
pub fn fr_solution_space(ring: &FusionRing) -> QResult<SolutionSpace> {
    ring.check_axioms().map_err(QError::InvalidArgument)?;
    let n = ring.len();
    if n != ring.full_rows().len() {
        return Err(QError::InvalidArgument("solver needs a fully tabulated ring".into()));
    }
    let f_vars: Vec<_> = (0..n)
        .flat_map(|j| (0..n).flat_map(move |k| (0..n).map(move |i| (j, k, i))))
        .filter(|&(j, k, i)| !f_is_gauged(ring, j, k, i))
        .collect();
    let r_vars: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let fi: HashMap<_, _> = f_vars.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let nf = f_vars.len();
    let ri_: HashMap<_, _> = r_vars.iter().enumerate().map(|(i, k)| (*k, nf + i)).collect();
    let nv = nf + r_vars.len();
    let mut rows: HashSet<Vec<u8>> = HashSet::new();
    let mut eqs = pentagon_equations(ring);
    eqs.extend(hexagon_equations(ring));
    eqs.extend(rmat_equations(ring)?);
    for eq in &eqs {
        let mut row = vec![0u8; nv + 1];
        for (k, c) in &eq.f {
            let i = fi[k];
            row[i] = ((row[i] as i64 + *c as i64).rem_euclid(8)) as u8;
        }
        for (k, c) in &eq.r {
            let i = ri_[k];
            row[i] = ((row[i] as i64 + *c as i64).rem_euclid(8)) as u8;
        }
        row[nv] = eq.rhs;
        if row.iter().any(|&x| x != 0) {
            rows.insert(row);
        }
    }
    let mut a: Vec<Vec<u8>> = rows.into_iter().collect();
    a.sort();
    let m = a.len();
    // column transform V, tracked as columns of an nv × nv matrix
    let mut v: Vec<Vec<u8>> = (0..nv).map(|i| (0..nv).map(|j| u8::from(i == j)).collect()).collect();
    let mut pivots: Vec<u32> = Vec::new();
    let mut k = 0;
    while k < m.min(nv) {
        // minimal-valuation pivot in the remaining block
        let mut best: Option<(u32, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, &x) in row.iter().enumerate().take(nv).skip(k) {
                if x != 0 {
                    let vv = val2(x);
                    if best.map_or(true, |b| vv < b.0) {
                        best = Some((vv, i, j));
                    }
                }
            }
            if best.map_or(false, |b| b.0 == 0) {
                break;
            }
        }
        let Some((vk, pi, pj)) = best else { break };
        a.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        for row in v.iter_mut() {
            row.swap(k, pj);
        }
        let u = inv_odd(a[k][k] >> vk);
        for x in a[k].iter_mut() {
            *x = ((*x as u32 * u as u32) % 8) as u8;
        }
        let pivot_row = a[k].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != k && row[k] != 0 {
                let f = row[k] >> vk;
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x = ((*x as u32 + 8 * 8 - (f as u32 * *p as u32) % 8) % 8) as u8;
                }
            }
        }
        for j in k + 1..nv {
            if a[k][j] != 0 {
                let f = a[k][j] >> vk;
                a[k][j] = 0;
                for row in v.iter_mut() {
                    row[j] = ((row[j] as u32 + 64 - (f as u32 * row[k] as u32) % 8) % 8) as u8;
                }
            }
        }
        pivots.push(vk);
        k += 1;
    }
    let rank = pivots.len();
    for (i, row) in a.iter().enumerate().skip(rank) {
        if row[nv] != 0 {
            return Err(QError::InvalidArgument(format!("F/R equations are inconsistent (row {i})")));
        }
    }
    let mut y = vec![0u8; nv];
    let mut gens_y: Vec<Vec<u8>> = Vec::new();
    let mut log2_count = 0;
    for (i, &vk) in pivots.iter().enumerate() {
        let b = a[i][nv];
        if b % (1 << vk) != 0 {
            return Err(QError::InvalidArgument("F/R equations have no solution".into()));
        }
        y[i] = b >> vk;
        if vk > 0 {
            let mut g = vec![0u8; nv];
            g[i] = 8 >> vk;
            gens_y.push(g);
            log2_count += vk;
        }
    }
    for j in rank..nv {
        let mut g = vec![0u8; nv];
        g[j] = 1;
        gens_y.push(g);
        log2_count += 3;
    }
    let mulv = |y: &[u8]| -> Vec<u8> {
        (0..nv)
            .map(|i| ((0..nv).map(|j| v[i][j] as u32 * y[j] as u32).sum::<u32>() % 8) as u8)
            .collect()
    };
    Ok(SolutionSpace {
        particular: mulv(&y),
        generators: gens_y.iter().map(|g| mulv(g)).collect(),
        log2_count,
        f_vars,
        r_vars,
    })
}

/// Every solution with phases in ζ₈; errors when there are more than `cap`.
pub fn solve_fr(ring: &FusionRing, cap: usize) -> QResult<Vec<FRSolution>> {
    let space = fr_solution_space(ring)?;
    if space.log2_count as usize >= usize::BITS as usize - 1 || (1usize << space.log2_count) > cap {
        return Err(QError::Cap(format!("2^{} F/R solutions exceed cap {cap}", space.log2_count)));
    }
    // walk the generated subgroup by closure
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut frontier = vec![space.particular.clone()];
    seen.insert(space.particular.clone());
    while let Some(x) = frontier.pop() {
        for g in &space.generators {
            let y: Vec<u8> = x.iter().zip(g).map(|(a, b)| (a + b) % 8).collect();
            if seen.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    let mut out: Vec<FRSolution> = seen.into_iter().map(|x| space.to_solution(&x)).collect();
    out.sort_by(|a, b| (&a.f, &a.r).cmp(&(&b.f, &b.r)));
    Ok(out)
}

/// The printed solution on the sl3 untwisted ring: (F^i_{ijj})_{kk} = −1 for
/// i ≠ j, all other F trivial. R is one hexagon-compatible branch with
/// R^0_{ii} = −1 and (R^1_{23})² = −1. F is unique; the hexagons leave 64 R
/// branches, 8 of them with every R^0_{ii} = −1.
pub fn sl3_reference_solution() -> FRSolution {
    let mut sol = FRSolution::default();
    for i in 1..4 {
        for j in 1..4 {
            if i != j {
                sol.f.insert((i, j, j), 4);
            }
        }
    }
    for x in 0..4 {
        sol.r.insert((0, x), 0);
        sol.r.insert((x, 0), 0);
    }
    let branch = [((1, 1), 4), ((1, 2), 2), ((1, 3), 2), ((2, 1), 6), ((2, 2), 4), ((2, 3), 6), ((3, 1), 2), ((3, 2), 2), ((3, 3), 4)];
    sol.r.extend(branch);
    sol
}

/// Cross-triple chains on the sl4 untwisted ring as (F^l_{jki}) lower triples;
/// the second chain equals the inverse of the last entry of the first.
pub fn sl4_f_chains() -> (Vec<(usize, usize, usize)>, Vec<(usize, usize, usize)>) {
    let first = vec![
        (4, 6, 2),
        (5, 2, 6),
        (1, 5, 4),
        (3, 4, 5),
        (4, 2, 6),
        (5, 6, 2),
        (2, 3, 1),
        (6, 1, 3),
        (3, 5, 4),
        (1, 4, 5),
        (6, 3, 1),
        (2, 1, 3),
    ];
    let second = vec![
        (2, 5, 4),
        (6, 4, 5),
        (4, 3, 1),
        (5, 1, 3),
        (6, 5, 4),
        (2, 4, 5),
        (1, 6, 2),
        (3, 2, 6),
        (4, 1, 3),
        (5, 3, 1),
        (1, 2, 6),
        (3, 6, 2),
    ];
    (first, second)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub labels_consistent: bool,
    pub equal_on_all_solutions: bool,
    pub inverse_on_all_solutions: bool,
    pub equal_on_representative: bool,
    pub log2_solutions: u32,
}

/// Checks the sl4 chains against the full solution space.
pub fn sl4_chain_check() -> QResult<ChainReport> {
    let ring = builtin_ring("sl4")?.untwisted();
    let space = fr_solution_space(&ring)?;
    let (first, second) = sl4_f_chains();
    let labels_consistent = first.iter().chain(&second).all(|&(j, k, i)| f_labels(&ring, j, k, i).is_some());
    let pair_rel = |a, b, sign: i8| vec![(a, 1i8), (b, -sign)];
    let mut equal = true;
    for chain in [&first, &second] {
        for w in chain.windows(2) {
            equal &= space.relation_holds(&pair_rel(w[0], w[1], 1));
        }
    }
    let inverse = space.relation_holds(&[(first[11], 1), (second[0], 1)]);
    let rep = space.representative();
    let vals: Vec<u8> = first.iter().map(|&(j, k, i)| rep.f(&ring, j, k, i)).collect();
    let vals2: Vec<u8> = second.iter().map(|&(j, k, i)| rep.f(&ring, j, k, i)).collect();
    let equal_rep = vals.iter().all(|&x| x == vals[0])
        && vals2.iter().all(|&x| x == vals2[0])
        && (vals[0] + vals2[0]) % 8 == 0;
    Ok(ChainReport {
        labels_consistent,
        equal_on_all_solutions: equal,
        inverse_on_all_solutions: inverse,
        equal_on_representative: equal_rep,
        log2_solutions: space.log2_count,
    })
}

// ---------------------------------------------------------------------------
// Exact arithmetic in ℚ(ζ₈)

/// a₀ + a₁ζ + a₂ζ² + a₃ζ³ with ζ⁴ = −1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cyclo8(pub [Rat; 4]);

impl Cyclo8 {
    pub fn zero() -> Self {
        Self([ri(0), ri(0), ri(0), ri(0)])
    }

    pub fn one() -> Self {
        Self::rational(ri(1))
    }

    pub fn rational(x: Rat) -> Self {
        Self([x, ri(0), ri(0), ri(0)])
    }

    /// ζ^k.
    pub fn zeta(k: i64) -> Self {
        let k = k.rem_euclid(8) as usize;
        let mut c = Self::zero();
        if k < 4 {
            c.0[k] = ri(1);
        } else {
            c.0[k - 4] = ri(-1);
        }
        c
    }

    /// √2 = ζ − ζ³.
    pub fn sqrt2() -> Self {
        Self([ri(0), ri(1), ri(0), ri(-1)])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn scale(&self, s: &Rat) -> Self {
        Self(self.0.clone().map(|x| x * s))
    }

    pub fn inv(&self) -> QResult<Self> {
        // columns: self·ζ^j
        let cols: Vec<Cyclo8> = (0..4).map(|j| self.clone() * Self::zeta(j)).collect();
        let m: Vec<Vec<Rat>> = (0..4).map(|i| (0..4).map(|j| cols[j].0[i].clone()).collect()).collect();
        let inv = inverse(&m).ok_or_else(|| QError::NonInvertible("zero in Q(zeta8)".into()))?;
        Ok(Self([inv[0][0].clone(), inv[1][0].clone(), inv[2][0].clone(), inv[3][0].clone()]))
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, a) in self.0.iter().enumerate() {
            let th = std::f64::consts::PI * k as f64 / 4.0;
            re += to_f64(a) * th.cos();
            im += to_f64(a) * th.sin();
        }
        (re, im)
    }
}

impl Add for Cyclo8 {
    type Output = Cyclo8;
    fn add(self, o: Cyclo8) -> Cyclo8 {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = o.0;
        Cyclo8([a0 + b0, a1 + b1, a2 + b2, a3 + b3])
    }
}

impl Neg for Cyclo8 {
    type Output = Cyclo8;
    fn neg(self) -> Cyclo8 {
        Cyclo8(self.0.map(|x| -x))
    }
}

impl Sub for Cyclo8 {
    type Output = Cyclo8;
    fn sub(self, o: Cyclo8) -> Cyclo8 {
        self + (-o)
    }
}

impl Mul for Cyclo8 {
    type Output = Cyclo8;
    fn mul(self, o: Cyclo8) -> Cyclo8 {
        let mut out = Cyclo8::zero();
        for i in 0..4 {
            for j in 0..4 {
                let p = &self.0[i] * &o.0[j];
                if i + j < 4 {
                    out.0[i + j] += p;
                } else {
                    out.0[i + j - 4] -= p;
                }
            }
        }
        out
    }
}

impl fmt::Display for Cyclo8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_complex();
        write!(f, "{re:.6}{im:+.6}i")
    }
}

impl One for Cyclo8 {
    fn one() -> Self {
        Cyclo8::one()
    }
}

/// Commutation constants μ_{ij}, c_{ij} on root labels 1..n.
#[derive(Clone, Debug, Default)]
pub struct GcrConstants {
    pub mu: BTreeMap<(u8, u8), Cyclo8>,
    pub c: BTreeMap<(u8, u8), Cyclo8>,
}

impl GcrConstants {
    /// Fill in μ_{ji} = μ_{ij}⁻¹ and c_{ji} = c_{ij}/μ_{ij} where missing.
    pub fn completed(&self) -> QResult<Self> {
        let mut out = self.clone();
        for ((i, j), m) in &self.mu {
            if !out.mu.contains_key(&(*j, *i)) {
                out.mu.insert((*j, *i), m.inv()?);
            }
        }
        for ((i, j), c) in &self.c {
            if !out.c.contains_key(&(*j, *i)) {
                let m = out.mu.get(&(*i, *j)).ok_or_else(|| QError::InvalidArgument(format!("μ_{i}{j} missing")))?;
                out.c.insert((*j, *i), c.clone() * m.inv()?);
            }
        }
        Ok(out)
    }

    fn mu(&self, i: u8, j: u8) -> QResult<Cyclo8> {
        self.mu.get(&(i, j)).cloned().ok_or_else(|| QError::InvalidArgument(format!("μ_{i}{j} missing")))
    }

    fn c(&self, i: u8, j: u8) -> QResult<Cyclo8> {
        self.c.get(&(i, j)).cloned().ok_or_else(|| QError::InvalidArgument(format!("c_{i}{j} missing")))
    }
}

/// x = e^{−iπ/4}; μ = x², c = x/√2 on the cyclic pairs (1,2), (2,3), (3,1).
pub fn sl3_constants() -> GcrConstants {
    let x = Cyclo8::zeta(-1);
    let c = x.clone() * Cyclo8::sqrt2().scale(&r(1, 2));
    let mut k = GcrConstants::default();
    for p in [(1, 2), (2, 3), (3, 1)] {
        k.mu.insert(p, x.clone() * x.clone());
        k.c.insert(p, c.clone());
    }
    k
}

/// sl4 constants with x = e^{−iπ/4}.
pub fn sl4_constants() -> GcrConstants {
    let x = Cyclo8::zeta(-1);
    let c = x.clone() * Cyclo8::sqrt2().scale(&r(1, 2));
    let mut k = GcrConstants::default();
    k.mu.insert((1, 3), Cyclo8::one());
    k.mu.insert((2, 6), Cyclo8::one());
    k.mu.insert((5, 4), -Cyclo8::one());
    for p in [(1, 2), (2, 4), (4, 1), (1, 5), (5, 6), (6, 1), (2, 3), (3, 5), (5, 2), (4, 3), (6, 4), (3, 6)] {
        k.mu.insert(p, x.clone() * x.clone());
        k.c.insert(p, c.clone());
    }
    k
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GcrReport {
    pub pass: bool,
    pub checks: Vec<(String, bool)>,
}

/// Verify μ_{ij}μ_{ji} = 1 and c_{ij} = μ_{ij}c_{ji} on every given pair, and,
/// when `sl4` is set, the three associativity constraints on six roots.
pub fn gcr_constants_check(given: &GcrConstants, sl4: bool) -> QResult<GcrReport> {
    let k = given.completed()?;
    let mut checks = Vec::new();
    for (i, j) in k.mu.keys() {
        let ok = (k.mu(*i, *j)? * k.mu(*j, *i)?) == Cyclo8::one();
        checks.push((format!("mu_{i}{j} mu_{j}{i} = 1"), ok));
    }
    for (i, j) in k.c.keys() {
        let ok = k.c(*i, *j)? == k.mu(*i, *j)? * k.c(*j, *i)?;
        checks.push((format!("c_{i}{j} = mu_{i}{j} c_{j}{i}"), ok));
    }
    if sl4 {
        let c = |i, j| k.c(i, j);
        let m = |i, j| k.mu(i, j);
        let mu54 = m(5, 4)?;
        let a = c(1, 4)? * c(2, 1)? * (m(2, 6)? * c(6, 1)? * c(1, 5)?).inv()?;
        let b = c(1, 2)? * c(6, 4)? * (c(1, 6)? * c(2, 5)?).inv()?;
        checks.push(("mu_54 = c14 c21 / (mu26 c61 c15)".into(), mu54 == a));
        checks.push(("mu_54 = c12 c64 / (c16 c25)".into(), mu54 == b));
        checks.push(("c12 c14 = c51 c61".into(), c(1, 2)? * c(1, 4)? == c(5, 1)? * c(6, 1)?));
        checks.push(("c52 c61 = c12 c64".into(), c(5, 2)? * c(6, 1)? == c(1, 2)? * c(6, 4)?));
    }
    Ok(GcrReport { pass: checks.iter().all(|(_, ok)| *ok), checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables() {
        let s3 = builtin_ring("sl3").unwrap();
        assert_eq!(fusion_product(&s3, "[1]", "[2]").unwrap(), "[3]");
        assert_eq!(fusion_product(&s3, "[2]", "[tau]").unwrap(), "[2']");
        assert!(fusion_product(&s3, "[tau]", "[tau]").is_err());
        assert!(fusion_product(&s3, "[9]", "[1]").is_err());
        let s4 = builtin_ring("sl4").unwrap();
        assert_eq!(fusion_product(&s4, "[4]", "[5]").unwrap(), "[eta]");
        assert_eq!(fusion_product(&s4, "[3]", "[6'']").unwrap(), "[4'']");
        for (ring, n) in [(s3, 4), (s4, 8)] {
            ring.check_axioms().unwrap();
            assert_eq!(ring.untwisted().len(), n);
            ring.untwisted().check_axioms().unwrap();
        }
    }

    #[test]
    fn text_round_trip() {
        let txt = "channels: [0] [1]\ndims: 0 1/2\nrow [1]: [1] [0]\n";
        let ring = FusionRing::parse(txt).unwrap();
        assert_eq!(ring, builtin_ring("z2").unwrap());
    }

    #[test]
    fn sl3_reference_is_a_solution() {
        let ring = builtin_ring("sl3").unwrap().untwisted();
        let sol = sl3_reference_solution();
        assert!(pentagon_residual(&ring, &sol).is_zero());
        assert!(hexagon_residual(&ring, &sol).is_zero());
        assert!(rmat_residual(&ring, &sol).unwrap().is_zero());
        let all = solve_fr(&ring, 1 << 16).unwrap();
        assert!(all.contains(&sol));
        assert_eq!(all.len(), 64);
        assert!(all.iter().all(|s| s.f == all[0].f));
        let minus = all.iter().filter(|s| (1..4).all(|i| s.r(i, i) == 4)).count();
        assert_eq!(minus, 8);
    }

    #[test]
    fn z2_fermion_branches() {
        let ring = builtin_ring("z2").unwrap();
        let all = solve_fr(&ring, 64).unwrap();
        // h = 1/2 gives (R^0_{11})² = 1; the hexagon keeps both signs
        let r11: HashSet<u8> = all.iter().map(|s| s.r(1, 1)).collect();
        assert_eq!(r11, HashSet::from([0, 4]));
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn trivial_ring() {
        let ring = builtin_ring("trivial").unwrap();
        let sol = FRSolution::default();
        assert!(pentagon_residual(&ring, &sol).is_zero());
        assert!(hexagon_residual(&ring, &sol).is_zero());
    }

    #[test]
    fn perturbed_solutions_fail() {
        let ring = builtin_ring("sl3").unwrap().untwisted();
        let mut sol = sl3_reference_solution();
        sol.f.insert((1, 2, 2), 0);
        assert!(!pentagon_residual(&ring, &sol).is_zero());
        let mut sol = sl3_reference_solution();
        sol.r.insert((1, 2), 6);
        assert!(rmat_residual(&ring, &sol).unwrap().is_zero());
        assert!(!hexagon_residual(&ring, &sol).is_zero());
    }

    #[test]
    fn cyclotomic() {
        let s = Cyclo8::sqrt2();
        assert_eq!(s.clone() * s.clone(), Cyclo8::rational(ri(2)));
        assert_eq!(s.inv().unwrap() * s, Cyclo8::one());
        assert_eq!(Cyclo8::zeta(3) * Cyclo8::zeta(6), Cyclo8::zeta(1));
    }

    #[test]
    fn constants() {
        assert!(gcr_constants_check(&sl3_constants(), false).unwrap().pass);
        assert!(gcr_constants_check(&sl4_constants(), true).unwrap().pass);
        let mut bad = sl4_constants();
        bad.mu.insert((5, 4), Cyclo8::one());
        let rep = gcr_constants_check(&bad, true).unwrap();
        assert!(!rep.pass);
    }
}
