//! Fermionic (UCPF) sums, the Fock-basis counting oracle, the dilogarithm
//! central-charge check and the multi-sum theorems used to prove the
//! sl(3)/sl(4) parafermion identities.

use std::collections::HashMap;
use std::str::FromStr;

use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QError, QResult};
use crate::matrix::{is_symmetric, min_eigenvalue, RMat};
use crate::qseries::{inv_qpoch_n, pochhammer, Monomial, MultiSeries, QSeries};
use crate::rat::{den_i64, floor_i64, lcm, r, rat_mat, ri, scale_mat, to_f64, Rat};

/// q^δ Σ_N (−1)^{sign·N} z^{Σ N_i w_i} q^{½NᵀGN − a·N} / ∏(q)_{N_i}.
///
/// With `u` present the 1/(q)_{N_i} factors become Gaussian polynomials
/// [((1−G)N + u/2)_i, N_i]; terms whose upper arguments are not integers are
/// dropped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcpfSpec {
    #[serde(rename = "G")]
    pub g: RMat,
    pub a: Vec<Rat>,
    #[serde(default)]
    pub sign: Vec<u8>,
    #[serde(default = "Rat::zero")]
    pub prefactor: Rat,
    /// One z-exponent vector per summation variable.
    #[serde(default)]
    pub zweights: Option<Vec<Vec<Rat>>>,
    #[serde(default)]
    pub u: Option<Vec<Rat>>,
}

impl UcpfSpec {
    pub fn new(g: RMat) -> Self {
        let m = g.len();
        Self { g, a: vec![Rat::zero(); m], sign: vec![0; m], prefactor: Rat::zero(), zweights: None, u: None }
    }

    pub fn with_a(mut self, a: Vec<Rat>) -> Self {
        self.a = a;
        self
    }

    pub fn with_sign(mut self, sign: Vec<u8>) -> Self {
        self.sign = sign;
        self
    }

    pub fn with_prefactor(mut self, d: Rat) -> Self {
        self.prefactor = d;
        self
    }

    pub fn with_zweights(mut self, w: Vec<Vec<Rat>>) -> Self {
        self.zweights = Some(w);
        self
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn nvars(&self) -> usize {
        self.zweights.as_ref().and_then(|w| w.first().map(|v| v.len())).unwrap_or(0)
    }

    fn validate(&self) -> QResult<()> {
        let m = self.g.len();
        if m == 0 || !is_symmetric(&self.g) {
            return Err(QError::InvalidArgument("G must be a non-empty symmetric matrix".into()));
        }
        if self.a.len() != m {
            return Err(QError::RankMismatch(self.a.len(), m));
        }
        if !self.sign.is_empty() && self.sign.len() != m {
            return Err(QError::RankMismatch(self.sign.len(), m));
        }
        if let Some(w) = &self.zweights {
            if w.len() != m {
                return Err(QError::RankMismatch(w.len(), m));
            }
            let nv = self.nvars();
            if w.iter().any(|row| row.len() != nv) {
                return Err(QError::InvalidArgument("ragged z-weight rows".into()));
            }
        }
        if let Some(u) = &self.u {
            if u.len() != m {
                return Err(QError::RankMismatch(u.len(), m));
            }
        }
        Ok(())
    }
}

/// Named matrices.
pub fn g_matrix(name: &str) -> QResult<RMat> {
    let half = r(1, 2);
    let m = match name {
        "G3" => scale_mat(&rat_mat(&[&[2, 1, 1], &[1, 2, 1], &[1, 1, 2]]), &half),
        "G3-verbatim" => rat_mat(&[&[2, 1, 1], &[1, 2, 1], &[1, 1, 2]]),
        "G4" | "G4-coset" => scale_mat(
            &rat_mat(&[
                &[2, 1, 0, 1, 1, 1],
                &[1, 2, 1, 1, 1, 0],
                &[0, 1, 2, 1, 1, 1],
                &[1, 1, 1, 2, 2, 1],
                &[1, 1, 1, 2, 2, 1],
                &[1, 0, 1, 1, 1, 2],
            ]),
            &half,
        ),
        "G4-lattice" => scale_mat(
            &rat_mat(&[
                &[2, 1, 1, 0, 1, 1],
                &[1, 2, 1, 1, 0, 1],
                &[1, 1, 2, 1, 1, 2],
                &[0, 1, 1, 2, 1, 1],
                &[1, 0, 1, 1, 2, 1],
                &[1, 1, 2, 1, 1, 2],
            ]),
            &half,
        ),
        other => return Err(QError::InvalidArgument(format!("unknown G-matrix '{other}'"))),
    };
    Ok(m)
}

/// Lattice-basis index i (0-based) ↦ coset-basis index: χ¹,χ²,χ³,ξ¹,ξ²,ξ³ ↦ ψ1,ψ2,ψ4,ψ3,ψ6,ψ5.
pub const LATTICE_TO_COSET: [usize; 6] = [0, 1, 3, 2, 5, 4];

// ---------------------------------------------------------------------------
// Enumeration

/// Integer data of the exponent on a common grid D: D·(½NᵀGN − a·N).
struct Grid {
    d: i64,
    quad: Vec<Vec<i64>>,
    lin: Vec<i64>,
}

impl Grid {
    fn new(spec: &UcpfSpec, t: &Rat) -> QResult<Self> {
        let mut d = lcm(den_i64(t), den_i64(&spec.prefactor));
        for row in &spec.g {
            for x in row {
                d = lcm(d, den_i64(&(x / ri(2))));
            }
        }
        for x in &spec.a {
            d = lcm(d, den_i64(x));
        }
        let to_i = |x: Rat| -> QResult<i64> { x.to_integer().to_i64().ok_or(QError::Overflow("ucpf grid")) };
        let quad = spec
            .g
            .iter()
            .map(|row| row.iter().map(|x| to_i(x * ri(d) / ri(2))).collect::<QResult<Vec<_>>>())
            .collect::<QResult<Vec<_>>>()?;
        let lin = spec.a.iter().map(|x| to_i(x * ri(d))).collect::<QResult<Vec<_>>>()?;
        Ok(Self { d, quad, lin })
    }

    fn value(&self, n: &[i64]) -> i64 {
        let m = n.len();
        let mut s = 0;
        for i in 0..m {
            if n[i] == 0 {
                continue;
            }
            s -= self.lin[i] * n[i];
            for j in 0..m {
                s += self.quad[i][j] * n[i] * n[j];
            }
        }
        s
    }

    fn diag(&self, i: usize, x: i64) -> i64 {
        self.quad[i][i] * x * x - self.lin[i] * x
    }
}

/// Per-coordinate search boxes such that every N outside has exponent ≥ limit
/// (grid units). Returns also whether partial-sum pruning is valid.
fn search_box(spec: &UcpfSpec, grid: &Grid, limit: i64) -> QResult<(Vec<i64>, bool)> {
    let m = spec.dim();
    let nonneg = spec.g.iter().all(|row| row.iter().all(|x| !x.is_negative()));
    if nonneg {
        if let Some(i) = (0..m).find(|&i| grid.quad[i][i] <= 0) {
            return Err(QError::InvalidArgument(format!("G has a zero diagonal entry at {i}; sum diverges")));
        }
        // min over x ≥ 0 of the diagonal piece
        let mins: Vec<i64> = (0..m)
            .map(|i| {
                let c = grid.lin[i] as f64 / (2.0 * grid.quad[i][i] as f64);
                let x0 = c.max(0.0).floor() as i64;
                grid.diag(i, x0).min(grid.diag(i, x0 + 1)).min(0)
            })
            .collect();
        let total_min: i64 = mins.iter().sum();
        let bounds = (0..m)
            .map(|i| {
                let cap = limit - (total_min - mins[i]);
                let mut x = 0;
                while grid.diag(i, x + 1) < cap || (x as f64) < grid.lin[i] as f64 / (2.0 * grid.quad[i][i] as f64) {
                    x += 1;
                }
                x
            })
            .collect();
        return Ok((bounds, true));
    }
    let lam = min_eigenvalue(&spec.g);
    if lam <= 1e-12 {
        return Err(QError::DivergentTheta("G is not positive definite and has negative entries".into()));
    }
    let amax = spec.a.iter().map(|x| to_f64(x).powi(2)).sum::<f64>().sqrt();
    let tl = (limit as f64 / grid.d as f64).max(0.0);
    let rad = (amax + (amax * amax + 2.0 * lam * tl).sqrt()) / lam;
    Ok((vec![rad.ceil() as i64 + 2; m], false))
}

fn for_each_tuple<F: FnMut(&[i64], i64)>(grid: &Grid, bounds: &[i64], prune: bool, limit: i64, first: i64, f: &mut F) {
    let m = bounds.len();
    // remaining-minimum table for pruning
    let mins: Vec<i64> = (0..m)
        .map(|i| (0..=bounds[i]).map(|x| grid.diag(i, x)).min().unwrap_or(0).min(0))
        .collect();
    let mut suffix = vec![0i64; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] + mins[i];
    }
    let mut n = vec![0i64; m];
    n[0] = first;
    fn rec<F: FnMut(&[i64], i64)>(
        k: usize,
        n: &mut Vec<i64>,
        grid: &Grid,
        bounds: &[i64],
        suffix: &[i64],
        prune: bool,
        limit: i64,
        f: &mut F,
    ) {
        let m = bounds.len();
        if k == m {
            let v = grid.value(n);
            if v < limit {
                f(n, v);
            }
            return;
        }
        for x in 0..=bounds[k] {
            n[k] = x;
            if prune {
                let partial = grid.value(&n[..=k]);
                if partial + suffix[k + 1] >= limit {
                    // diagonal term grows once past its minimum; cross terms only add
                    let c = grid.lin[k] as f64 / (2.0 * grid.quad[k][k] as f64);
                    if x as f64 >= c {
                        break;
                    }
                    continue;
                }
            }
            rec(k + 1, n, grid, bounds, suffix, prune, limit, f);
        }
        n[k] = 0;
    }
    if m == 1 {
        let v = grid.value(&n);
        if v < limit {
            f(&n, v);
        }
        return;
    }
    if prune && grid.value(&n[..1]) + suffix[1] >= limit {
        return;
    }
    rec(1, &mut n, grid, bounds, &suffix, prune, limit, f);
}

/// Coefficients of 1/(q)_n below q^len.
fn inv_poch_coeffs(n: i64, len: usize) -> Vec<i128> {
    let mut c = vec![0i128; len];
    if len == 0 {
        return c;
    }
    c[0] = 1;
    for part in 1..=n as usize {
        for k in part..len {
            c[k] += c[k - part];
        }
    }
    c
}

/// Coefficients of the Gaussian polynomial [l, m].
fn gauss_coeffs(l: i64, m: i64) -> Vec<i128> {
    if m < 0 || l < 0 || m > l {
        return vec![];
    }
    // [l,m] = [l−1,m−1] + q^m [l−1,m]
    let mut table: HashMap<(i64, i64), Vec<i128>> = HashMap::new();
    fn g(l: i64, m: i64, t: &mut HashMap<(i64, i64), Vec<i128>>) -> Vec<i128> {
        if m < 0 || m > l {
            return vec![];
        }
        if m == 0 || m == l {
            return vec![1];
        }
        if let Some(v) = t.get(&(l, m)) {
            return v.clone();
        }
        let a = g(l - 1, m - 1, t);
        let b = g(l - 1, m, t);
        let mut out = vec![0i128; (m * (l - m) + 1) as usize];
        for (i, x) in a.iter().enumerate() {
            out[i] += x;
        }
        for (i, x) in b.iter().enumerate() {
            out[i + m as usize] += x;
        }
        t.insert((l, m), out.clone());
        out
    }
    g(l, m, &mut table)
}

fn convolve(a: &[i128], b: &[i128], len: usize) -> Vec<i128> {
    let mut out = vec![0i128; len.min(a.len() + b.len().saturating_sub(1)).max(0)];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 || i >= out.len() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j >= out.len() {
                break;
            }
            out[i + j] += x * y;
        }
    }
    out
}

type Acc = HashMap<(i64, Vec<Rat>), i128>;

/// Exact evaluation of a UCPF below q^t.
pub fn ucpf_sum(spec: &UcpfSpec, t: &Rat) -> QResult<MultiSeries> {
    ucpf_sum_padded(spec, t, 0)
}

/// As [`ucpf_sum`] with the search box widened by `pad` in every coordinate.
pub fn ucpf_sum_padded(spec: &UcpfSpec, t: &Rat, pad: i64) -> QResult<MultiSeries> {
    spec.validate()?;
    let m = spec.dim();
    let nv = spec.nvars();
    let rel = t - &spec.prefactor;
    let grid = Grid::new(spec, t)?;
    let limit = (&rel * ri(grid.d)).to_integer().to_i64().ok_or(QError::Overflow("ucpf limit"))?;
    let (mut bounds, prune) = search_box(spec, &grid, limit)?;
    for b in bounds.iter_mut() {
        *b += pad;
    }
    let d = grid.d;
    let sign = if spec.sign.is_empty() { vec![0u8; m] } else { spec.sign.clone() };
    let zero_z = vec![Rat::zero(); nv];
    let one_minus_g: Option<RMat> = spec.u.as_ref().map(|_| {
        (0..m)
            .map(|i| (0..m).map(|j| if i == j { ri(1) - &spec.g[i][j] } else { -spec.g[i][j].clone() }).collect())
            .collect()
    });
    let work = |first: i64| -> Acc {
        let mut acc: Acc = HashMap::new();
        for_each_tuple(&grid, &bounds, prune, limit, first, &mut |n, v| {
            // integer q-steps still available for the partition factors
            let room = limit - v; // > 0
            let len = ((room + d - 1) / d) as usize;
            let mut poly = vec![1i128];
            if let (Some(u), Some(omg)) = (&spec.u, &one_minus_g) {
                for i in 0..m {
                    let top: Rat = (0..m).map(|j| &omg[i][j] * ri(n[j])).sum::<Rat>() + &u[i] / ri(2);
                    if !top.is_integer() {
                        return;
                    }
                    let gc = gauss_coeffs(top.to_integer().to_i64().unwrap_or(-1), n[i]);
                    if gc.is_empty() {
                        return;
                    }
                    poly = convolve(&poly, &gc, len);
                }
            } else {
                for &ni in n {
                    if ni > 0 {
                        poly = convolve(&poly, &inv_poch_coeffs(ni, len), len);
                    }
                }
            }
            let odd = n.iter().zip(&sign).map(|(x, s)| x * (*s as i64)).sum::<i64>().rem_euclid(2) == 1;
            let z: Vec<Rat> = match &spec.zweights {
                Some(w) => {
                    let mut z = zero_z.clone();
                    for (i, row) in w.iter().enumerate() {
                        if n[i] != 0 {
                            for (zk, wk) in z.iter_mut().zip(row) {
                                *zk += wk * ri(n[i]);
                            }
                        }
                    }
                    z
                }
                None => zero_z.clone(),
            };
            for (k, c) in poly.iter().enumerate() {
                if *c == 0 {
                    continue;
                }
                let e = v + k as i64 * d;
                if e >= limit {
                    break;
                }
                *acc.entry((e, z.clone())).or_insert(0) += if odd { -c } else { *c };
            }
        });
        acc
    };
    let parts: Vec<Acc> = (0..=bounds[0]).into_par_iter().map(work).collect();
    let mut total: Acc = HashMap::new();
    for p in parts {
        for (k, c) in p {
            *total.entry(k).or_insert(0) += c;
        }
    }
    let items = total
        .into_iter()
        .filter(|(_, c)| *c != 0)
        .map(|((e, z), c)| (r(e, d) + &spec.prefactor, z, Rat::from_integer(c.into())));
    Ok(MultiSeries::from_terms(nv, items, Some(t.clone())))
}

/// Single-variable convenience: the UCPF as a q-series (all z set to 1).
pub fn ucpf_series(spec: &UcpfSpec, t: &Rat) -> QResult<QSeries> {
    Ok(ucpf_sum(spec, t)?.specialize_ones())
}

// ---------------------------------------------------------------------------
// Fock bases

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisFamily {
    #[serde(rename = "sl3-untwisted")]
    Sl3Untwisted,
    #[serde(rename = "sl3-twisted")]
    Sl3Twisted,
    #[serde(rename = "sl4-untwisted")]
    Sl4Untwisted,
    #[serde(rename = "sl4-sixth")]
    Sl4Sixth,
    #[serde(rename = "sl4-eighth")]
    Sl4Eighth,
}

impl FromStr for BasisFamily {
    type Err = QError;

    fn from_str(s: &str) -> QResult<Self> {
        Self::all()
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| QError::Parse(format!("unknown basis family '{s}'")))
    }
}

/// Mode offset of species i: the j-th mode (j ≥ 1) has energy
/// base_i + Σ_k coef_ik N_k + (j − 1) + s_j.
struct Species {
    base: Rat,
    coef: Vec<Rat>,
}

impl BasisFamily {
    pub fn all() -> [BasisFamily; 5] {
        [Self::Sl3Untwisted, Self::Sl3Twisted, Self::Sl4Untwisted, Self::Sl4Sixth, Self::Sl4Eighth]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sl3Untwisted => "sl3-untwisted",
            Self::Sl3Twisted => "sl3-twisted",
            Self::Sl4Untwisted => "sl4-untwisted",
            Self::Sl4Sixth => "sl4-sixth",
            Self::Sl4Eighth => "sl4-eighth",
        }
    }

    /// Conformal weight of the sector's lowest state.
    pub fn vacuum_energy(&self) -> Rat {
        match self {
            Self::Sl3Untwisted | Self::Sl4Untwisted => ri(0),
            Self::Sl3Twisted => r(1, 10),
            Self::Sl4Sixth => r(1, 6),
            Self::Sl4Eighth => r(1, 8),
        }
    }

    /// c/24 of the coset.
    pub fn central_shift(&self) -> Rat {
        match self {
            Self::Sl3Untwisted | Self::Sl3Twisted => r(1, 20),
            _ => r(1, 12),
        }
    }

    fn species(&self) -> Vec<Species> {
        let h = r(1, 2);
        let z = ri(0);
        let v = |xs: &[i64]| -> Vec<Rat> { xs.iter().map(|&x| r(x, 2)).collect() };
        let (bases, coefs): (Vec<Rat>, Vec<Vec<Rat>>) = match self {
            Self::Sl3Untwisted | Self::Sl3Twisted => {
                let b = if *self == Self::Sl3Untwisted { vec![h.clone(); 3] } else { vec![h.clone(), z.clone(), z.clone()] };
                (b, vec![v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[1, 1, 0])])
            }
            _ => {
                let b = match self {
                    Self::Sl4Untwisted => vec![h.clone(); 6],
                    Self::Sl4Sixth => vec![h.clone(), z.clone(), h.clone(), z.clone(), z.clone(), z.clone()],
                    _ => vec![z.clone(), z.clone(), h.clone(), h.clone(), z.clone(), h.clone()],
                };
                (
                    b,
                    vec![
                        v(&[0, 0, 0, 0, 0, 0]),
                        v(&[1, 0, 0, 0, 0, 0]),
                        v(&[0, 1, 0, 0, 0, 0]),
                        v(&[1, 1, 1, 0, 0, 0]),
                        v(&[1, 1, 1, 2, 0, 0]),
                        v(&[1, 0, 1, 1, 1, 0]),
                    ],
                )
            }
        };
        bases.into_iter().zip(coefs).map(|(base, coef)| Species { base, coef }).collect()
    }

    /// The UCPF data whose sum should reproduce this family's Fock count.
    pub fn ucpf_spec(&self) -> UcpfSpec {
        let (g, a): (RMat, Vec<i64>) = match self {
            Self::Sl3Untwisted => (g_matrix("G3").unwrap(), vec![0, 0, 0]),
            Self::Sl3Twisted => (g_matrix("G3").unwrap(), vec![0, 1, 1]),
            Self::Sl4Untwisted => (g_matrix("G4").unwrap(), vec![0; 6]),
            Self::Sl4Sixth => (g_matrix("G4").unwrap(), vec![0, 1, 0, 1, 1, 1]),
            Self::Sl4Eighth => (g_matrix("G4").unwrap(), vec![1, 1, 0, 0, 1, 0]),
        };
        UcpfSpec::new(g)
            .with_a(a.into_iter().map(|x| r(x, 2)).collect())
            .with_prefactor(self.vacuum_energy())
    }
}

/// Number of non-decreasing sequences 0 ≤ s_1 ≤ … ≤ s_n with Σ s = k, for k < len,
/// by explicit recursion on the largest part.
fn ordered_shift_counts(n: i64, len: usize) -> Vec<i128> {
    // f(parts, maxval, total)
    fn rec(parts: i64, maxv: usize, total: usize, memo: &mut HashMap<(i64, usize, usize), i128>) -> i128 {
        if parts == 0 {
            return i128::from(total == 0);
        }
        if let Some(v) = memo.get(&(parts, maxv, total)) {
            return *v;
        }
        let mut s = 0;
        // choose the largest element s_n = x ≤ maxv, rest bounded by x
        for x in 0..=maxv.min(total) {
            s += rec(parts - 1, x, total - x, memo);
        }
        memo.insert((parts, maxv, total), s);
        s
    }
    let mut memo = HashMap::new();
    (0..len).map(|k| rec(n, k, k, &mut memo)).collect()
}

/// Generating function of the Fock basis by direct enumeration of mode tuples.
pub fn fock_basis_count(family: BasisFamily, t: &Rat) -> QResult<QSeries> {
    let sp = family.species();
    let m = sp.len();
    let vac = family.vacuum_energy();
    let rel = t - &vac;
    // every species' lowest mode energy is at least N_i²/2 − N_i/2, so N_i ≤ 2√T + 2
    let cap = (2.0 * to_f64(&rel).max(0.0)).sqrt().ceil() as i64 + 2;
    let mut acc: HashMap<Rat, i128> = HashMap::new();
    let mut n = vec![0i64; m];
    loop {
        let mut e = Rat::zero();
        for (i, s) in sp.iter().enumerate() {
            if n[i] == 0 {
                continue;
            }
            let off: Rat = &s.base + s.coef.iter().zip(&n).map(|(c, x)| c * ri(*x)).sum::<Rat>();
            // Σ_{j=1}^{N} (off + j − 1)
            e += &off * ri(n[i]) + r(n[i] * (n[i] - 1), 2);
        }
        if e < rel {
            let room = &rel - &e;
            let len = floor_i64(&room) as usize + 1;
            let mut poly = vec![1i128];
            for &ni in &n {
                if ni > 0 {
                    poly = convolve(&poly, &ordered_shift_counts(ni, len), len);
                }
            }
            for (k, c) in poly.iter().enumerate() {
                let ex = &e + ri(k as i64);
                if ex < rel && *c != 0 {
                    *acc.entry(ex + &vac).or_insert(0) += c;
                }
            }
        }
        let mut i = 0;
        loop {
            if i == m {
                let pairs = acc.into_iter().map(|(e, c)| (e, Rat::from_integer(c.into())));
                return Ok(QSeries::from_pairs(pairs, Some(t.clone())));
            }
            n[i] += 1;
            if n[i] > cap {
                n[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Dilogarithm

fn li2(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x > 0.5 {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        return pi2_6 - x.ln() * (1.0 - x).ln() - li2(1.0 - x);
    }
    let mut s = 0.0;
    let mut p = x;
    let mut k = 1.0f64;
    while p / (k * k) > 1e-18 {
        s += p / (k * k);
        p *= x;
        k += 1.0;
    }
    s
}

/// Rogers' dilogarithm, unnormalised: Li₂(x) + ½ ln x ln(1−x).
pub fn rogers_dilog(x: f64) -> f64 {
    li2(x) + 0.5 * x.ln() * (1.0 - x).ln()
}

/// (6/π²) Σ_a L(ξ_a) at the solution of ξ_a = ∏_b (1−ξ_b)^{G_ab}.
pub fn dilog_central_charge(g: &RMat) -> QResult<f64> {
    let m = g.len();
    let gf: Vec<Vec<f64>> = g.iter().map(|row| row.iter().map(to_f64).collect()).collect();
    let mut lx = vec![0.5f64.ln(); m];
    let mut residual = f64::INFINITY;
    for _ in 0..100_000 {
        let xi: Vec<f64> = lx.iter().map(|l| l.exp()).collect();
        let target: Vec<f64> = (0..m)
            .map(|a| (0..m).map(|b| gf[a][b] * (1.0 - xi[b]).ln()).sum())
            .collect();
        residual = (0..m).map(|a| (target[a].exp() - xi[a]).abs()).fold(0.0, f64::max);
        if residual < 1e-14 {
            let c: f64 = xi.iter().map(|&x| rogers_dilog(x)).sum::<f64>() * 6.0 / std::f64::consts::PI.powi(2);
            return Ok(c);
        }
        for a in 0..m {
            lx[a] = 0.5 * lx[a] + 0.5 * target[a];
        }
    }
    Err(QError::NoConvergence(format!("fixed point residual {residual:e}")))
}

// ---------------------------------------------------------------------------
// Theorem and lemma checks

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub cases: usize,
    pub checked_to: Rat,
    pub first_failure: Option<String>,
}

impl CheckReport {
    fn new(name: &str, t: &Rat) -> Self {
        Self { name: name.into(), pass: true, cases: 0, checked_to: t.clone(), first_failure: None }
    }

    fn record_multi(&mut self, label: &str, lhs: &MultiSeries, rhs: &MultiSeries, t: &Rat) {
        self.cases += 1;
        if let Some((e, z, a, b)) = lhs.first_mismatch(rhs, t) {
            self.fail(format!("{label}: q^{e} z^{z:?}: {a} vs {b}"));
        }
    }

    fn record(&mut self, label: &str, lhs: &QSeries, rhs: &QSeries, t: &Rat) {
        self.cases += 1;
        if let Some((e, a, b)) = lhs.first_mismatch(rhs, t) {
            self.fail(format!("{label}: q^{e}: {a} vs {b}"));
        }
    }

    fn fail(&mut self, msg: String) {
        if self.pass {
            self.pass = false;
            self.first_failure = Some(msg);
        }
    }
}

/// (x q^e z^w; q^s)_count with x = coeff.
fn poch(coeff: i64, e: Rat, z: &[i64], s: i64, count: Option<u64>, t: &Rat) -> QResult<MultiSeries> {
    let zr: Vec<Rat> = z.iter().map(|&x| ri(x)).collect();
    pochhammer(&Monomial::new(ri(coeff), e, zr), &ri(s), count, t)
}

fn mono(nv: usize, c: i64, q: Rat, z: &[i64]) -> MultiSeries {
    let zr: Vec<Rat> = if z.is_empty() { vec![ri(0); nv] } else { z.iter().map(|&x| ri(x)).collect() };
    MultiSeries::monomial(nv, &Monomial::new(ri(c), q, zr), None)
}

fn lift(s: &QSeries, nv: usize) -> MultiSeries {
    MultiSeries::from_qseries(s, nv)
}

fn zrows(rows: &[&[i64]]) -> Vec<Vec<Rat>> {
    rows.iter().map(|r| r.iter().map(|&x| ri(x)).collect()).collect()
}

/// Trivariate sum over effective G₃ against its two-term M-sum form.
pub fn theorem_g3(zcap: i64, t: &Rat) -> QResult<CheckReport> {
    let mut rep = CheckReport::new("G3 trivariate", t);
    let spec = UcpfSpec::new(g_matrix("G3")?).with_zweights(zrows(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
    let lhs = ucpf_sum(&spec, &(t / ri(2)))?.q_scale(&ri(2));
    let rhs = g3_rhs(t)?;
    let cap = ri(zcap);
    rep.record_multi("full", &lhs.restrict_z(&cap), &rhs.restrict_z(&cap), t);
    // specialisations
    rep.record("z=1", &lhs.specialize_ones(), &rhs.specialize_ones(), t);
    Ok(rep)
}

fn g3_rhs(t: &Rat) -> QResult<MultiSeries> {
    let nv = 3;
    let mut rhs = MultiSeries::zero(nv, Some(t.clone()));
    let mut mm = 0i64;
    while ri(3 * mm * mm) < *t {
        let m = mm as u64;
        let a = mono(nv, 1, ri(3 * mm * mm), &[0, mm, mm])
            .mul(&poch(-1, ri(1), &[0, 1, -1], 2, Some(m), t)?)
            .mul(&poch(-1, ri(1), &[0, -1, 1], 2, Some(m), t)?)
            .mul(&lift(&inv_qpoch_n(2 * m, &ri(2), t)?, nv))
            .mul(&poch(-1, ri(2 * mm + 1), &[1, 0, 0], 2, None, t)?);
        let zsum = mono(nv, 1, ri(0), &[0, 1, 0]).add(&mono(nv, 1, ri(0), &[0, 0, 1]));
        let b = zsum
            .mul(&mono(nv, 1, ri(3 * mm * mm + 3 * mm + 1), &[0, mm, mm]))
            .mul(&poch(-1, ri(2), &[0, 1, -1], 2, Some(m), t)?)
            .mul(&poch(-1, ri(2), &[0, -1, 1], 2, Some(m), t)?)
            .mul(&lift(&inv_qpoch_n(2 * m + 1, &ri(2), t)?, nv))
            .mul(&poch(-1, ri(2 * mm + 2), &[1, 0, 0], 2, None, t)?);
        rhs = rhs.add(&a.truncate(t)).add(&b.truncate(t));
        mm += 1;
    }
    Ok(rhs)
}

/// z-weights of the lattice-basis G₄ sum: χ¹↦z₁, χ²↦z₂, χ³↦z₁z₂, ξ^i ↦ inverses.
fn voa_z_weights() -> Vec<Vec<Rat>> {
    zrows(&[&[1, 0], &[0, 1], &[1, 1], &[-1, 0], &[0, -1], &[-1, -1]])
}

/// Six-fold lattice-basis G₄ sum with δ-shifts against the theta-like double sum.
pub fn theorem_voa_z(d1: bool, d2: bool, zcap: i64, t: &Rat) -> QResult<CheckReport> {
    let mut rep = CheckReport::new(&format!("VOA-z delta=({},{})", d1 as u8, d2 as u8), t);
    let (lhs, rhs) = voa_z_sides(d1, d2, t)?;
    let cap = ri(zcap);
    rep.record_multi("full", &lhs.restrict_z(&cap), &rhs.restrict_z(&cap), t);
    Ok(rep)
}

/// Both sides of the δ-shifted identity, in q (not q^{1/2}).
pub fn voa_z_sides(d1: bool, d2: bool, t: &Rat) -> QResult<(MultiSeries, MultiSeries)> {
    let (e1, e2) = (d1 as i64, d2 as i64);
    let a = vec![ri(0), ri(0), ri(0), ri(e1), ri(e2), ri(e1 + e2)];
    let spec = UcpfSpec::new(g_matrix("G4-lattice")?).with_a(a).with_zweights(voa_z_weights());
    let lhs = ucpf_sum(&spec, &(t / ri(2)))?.q_scale(&ri(2));
    let nv = 2;
    let work = t + ri(2);
    let rad = (2.0 * to_f64(&work)).sqrt().ceil() as i64 + 4;
    let mut items = Vec::new();
    for m1 in -rad..=rad {
        for m2 in -rad..=rad {
            let base = m1 * m1 + m2 * m2 - m1 * m2;
            let mut push = |e: i64| {
                if ri(e) < work {
                    items.push((ri(e), vec![ri(m1), ri(m2)], ri(1)));
                }
            };
            push(base);
            if d1 {
                push(base + 2 * m1);
            }
            if d2 {
                push(base + 2 * m2);
            }
            if d1 && d2 {
                push(base + 2 * m1 + 2 * m2);
            }
        }
    }
    let sum = MultiSeries::from_terms(nv, items, Some(work.clone()));
    let inv = poch(1, ri(2), &[], 2, None, &(t + ri(4)))?.specialize_ones().pow(-2)?;
    let rhs = sum.mul(&lift(&inv, nv)).truncate(t);
    Ok((lhs, rhs))
}

/// Six-fold sum with shift −(N₁+N₂+N₆) against the two M-sums.
pub fn theorem_voa_1(zcap: i64, t: &Rat) -> QResult<CheckReport> {
    let mut rep = CheckReport::new("VOA-1", t);
    let (lhs, rhs) = voa_1_sides(t)?;
    let cap = ri(zcap);
    rep.record_multi("full", &lhs.restrict_z(&cap), &rhs.restrict_z(&cap), t);
    Ok(rep)
}

pub fn voa_1_sides(t: &Rat) -> QResult<(MultiSeries, MultiSeries)> {
    let a: Vec<Rat> = [1, 1, 0, 0, 0, 1].iter().map(|&x| r(x, 2)).collect();
    let w = zrows(&[&[1, 0], &[0, 1], &[1, 1], &[1, 0], &[0, 1], &[1, 1]]);
    let spec = UcpfSpec::new(g_matrix("G4-lattice")?).with_a(a).with_zweights(w);
    let lhs = ucpf_sum(&spec, &(t / ri(2)))?.q_scale(&ri(2));
    let nv = 2;
    let mut sum = MultiSeries::zero(nv, Some(t.clone()));
    let mut mm = 0i64;
    while ri(mm * mm) < *t {
        let m = mm as u64;
        let sign = if mm % 2 == 0 { 1 } else { -1 };
        let common = poch(1, ri(0), &[2, 0], 2, Some(m), t)?
            .mul(&poch(1, ri(0), &[0, 2], 2, Some(m), t)?)
            .mul(&lift(&inv_qpoch_n(m, &ri(2), t)?, nv));
        let a = mono(nv, sign, ri(mm * mm), &[0, 0])
            .mul(&common)
            .mul(&poch(-1, ri(2 * mm), &[1, 1], 1, None, t)?);
        let zsum = mono(nv, 1, ri(0), &[1, 0]).add(&mono(nv, 1, ri(0), &[0, 1]));
        let b = zsum
            .mul(&mono(nv, sign, ri(mm * mm + 2 * mm), &[0, 0]))
            .mul(&common)
            .mul(&poch(-1, ri(2 * mm + 1), &[1, 1], 1, None, t)?);
        sum = sum.add(&a.truncate(t)).add(&b.truncate(t));
        mm += 1;
    }
    let inv = poch(1, ri(1), &[], 2, None, &(t + ri(1)))?.specialize_ones().invert()?;
    Ok((lhs, sum.mul(&lift(&inv, nv)).truncate(t)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lemma {
    #[serde(rename = "q-CV")]
    QCv,
    #[serde(rename = "q-Gauss")]
    QGauss,
    #[serde(rename = "T-exp")]
    TExp,
    #[serde(rename = "double-sum")]
    DoubleSum,
}

impl FromStr for Lemma {
    type Err = QError;

    fn from_str(s: &str) -> QResult<Self> {
        match s.trim() {
            "q-CV" => Ok(Self::QCv),
            "q-Gauss" => Ok(Self::QGauss),
            "T-exp" => Ok(Self::TExp),
            "double-sum" => Ok(Self::DoubleSum),
            other => Err(QError::Parse(format!("unknown lemma '{other}'"))),
        }
    }
}

/// Run a lemma over all parameters up to `cap` (M, N ≤ cap; |N| ≤ cap for q-Gauss).
pub fn lemma_checks(which: Lemma, cap: i64, t: &Rat) -> QResult<CheckReport> {
    match which {
        Lemma::QCv => {
            let mut rep = CheckReport::new("q-CV", t);
            for m in 0..=cap {
                for n in 0..=cap {
                    let (l, r_) = q_cv_sides(m, n, t)?;
                    rep.record(&format!("(M,N)=({m},{n})"), &l, &r_, t);
                }
            }
            Ok(rep)
        }
        Lemma::QGauss => {
            let mut rep = CheckReport::new("q-Gauss", t);
            for d in [false, true] {
                for n in -cap..=cap {
                    let (l, r_) = q_gauss_sides(d, n, t)?;
                    rep.record(&format!("(delta,N)=({},{n})", d as u8), &l, &r_, t);
                }
            }
            Ok(rep)
        }
        Lemma::TExp => {
            let mut rep = CheckReport::new("T-exp", t);
            for m in 0..=cap {
                let (l, r_) = t_exp_sides(m, t)?;
                rep.record_multi(&format!("M={m}"), &l, &r_, t);
            }
            Ok(rep)
        }
        Lemma::DoubleSum => {
            let mut rep = CheckReport::new("double-sum", t);
            let (l, r_) = double_sum_sides(t)?;
            let c = ri(cap);
            rep.record_multi("restricted", &l.restrict_z(&c), &r_.restrict_z(&c), t);
            rep.record_multi("full", &l, &r_, t);
            Ok(rep)
        }
    }
}

fn inv_q(n: i64, t: &Rat) -> QResult<QSeries> {
    inv_qpoch_n(n as u64, &ri(1), t)
}

/// Σ_n q^{n²−(M+N)n}/((q)_n(q)_{M−n}(q)_{N−n}) and q^{−MN}/((q)_M(q)_N).
pub fn q_cv_sides(m: i64, n: i64, t: &Rat) -> QResult<(QSeries, QSeries)> {
    let work = t + ri(m * n + 1);
    let mut lhs = QSeries::zero(Some(t.clone()));
    for k in 0..=m.min(n) {
        let term = inv_q(k, &work)?
            .mul(&inv_q(m - k, &work)?)
            .mul(&inv_q(n - k, &work)?)
            .qshift(&ri(k * k - (m + n) * k));
        lhs = lhs.add(&term.truncate(t));
    }
    let rhs = inv_q(m, &work)?.mul(&inv_q(n, &work)?).qshift(&ri(-m * n)).truncate(t);
    Ok((lhs, rhs))
}

/// Σ_{n≥0} q^{n²+n(N−δ)}/((q)_n(q)_{n+N}) and (1+δq^N)/(q)_∞; 1/(q)_k = 0 for k < 0.
pub fn q_gauss_sides(delta: bool, n: i64, t: &Rat) -> QResult<(QSeries, QSeries)> {
    let d = delta as i64;
    let shift = n.abs() + 2;
    let work = t + ri(shift);
    let mut lhs = QSeries::zero(Some(t.clone()));
    let mut k = 0i64.max(-n);
    loop {
        let e = k * k + k * (n - d);
        if ri(e) >= *t && k > (n - d).abs() {
            break;
        }
        if ri(e) < *t {
            let term = inv_q(k, &work)?.mul(&inv_q(k + n, &work)?).qshift(&ri(e));
            lhs = lhs.add(&term.truncate(t));
        }
        k += 1;
    }
    let inf = poch(1, ri(1), &[], 1, None, &work)?.specialize_ones().invert()?;
    let num = QSeries::one().add(&QSeries::monomial(ri(d), ri(n), None));
    Ok((lhs, num.mul(&inf).truncate(t)))
}

/// Finite sum T_M against its closed form.
pub fn t_exp_sides(m: i64, t: &Rat) -> QResult<(MultiSeries, MultiSeries)> {
    let nv = 2;
    let mut lhs = MultiSeries::zero(nv, Some(t.clone()));
    let work = t + ri(m * m + 2);
    for n3 in 0..=m / 2 {
        for n1 in 0..=m - 2 * n3 {
            for n2 in 0..=m - 2 * n3 - n1 {
                for n4 in 0..=m - 2 * n3 - n1 - n2 {
                    let n5 = m - 2 * n3 - n1 - n2 - n4;
                    let n0 = n1 * n1 + n2 * n2 + n3 * n3 + n4 * n4 + n5 * n5 + n1 * n2 + n1 * n3 + n1 * n5 + n2 * n3
                        + n2 * n4
                        + n3 * n4
                        + n3 * n5
                        + n4 * n5
                        - n1
                        - n2;
                    let mut den = QSeries::one();
                    for x in [n1, n2, n3, n4, n5] {
                        den = den.mul(&inv_qpoch_n(x as u64, &ri(2), &work)?);
                    }
                    let term = mono(nv, 1, ri(n0), &[n1 + n3 + n4, n2 + n3 + n5]).mul(&lift(&den, nv));
                    lhs = lhs.add(&term.truncate(t));
                }
            }
        }
    }
    if m == 0 {
        return Ok((lhs, MultiSeries::one(nv).truncate(t)));
    }
    // (−z₁z₂⁻¹q^{2−M};q²)_M / (1 + z₁z₂⁻¹q^M): the divisor is the last factor
    let mut poly = mono(nv, 1, ri(m * (m - 1) / 2), &[0, m - 1]);
    poly = poly.mul(&mono(nv, 1, ri(0), &[1, -1]).add(&MultiSeries::one(nv)));
    poly = poly.mul(&mono(nv, 1, ri(0), &[0, 1]));
    for j in 0..m - 1 {
        poly = poly.mul_binomial(&Monomial::new(ri(1), ri(2 - m + 2 * j), vec![ri(1), ri(-1)]));
    }
    let rhs = poly.mul(&lift(&inv_q(m, &work)?, nv)).truncate(t);
    Ok((lhs, rhs))
}

/// Σ_{m,n} z₁^m z₂^n q^{(m²+n²−mn)/2} against the two triple products.
pub fn double_sum_sides(t: &Rat) -> QResult<(MultiSeries, MultiSeries)> {
    let nv = 2;
    let rad = (4.0 * to_f64(t)).sqrt().ceil() as i64 + 3;
    let mut items = Vec::new();
    for m in -rad..=rad {
        for n in -rad..=rad {
            let e = r(m * m + n * n - m * n, 2);
            if e < *t {
                items.push((e, vec![ri(m), ri(n)], ri(1)));
            }
        }
    }
    let lhs = MultiSeries::from_terms(nv, items, Some(t.clone()));
    let h = r(1, 2);
    let first = poch(-1, r(3, 2), &[2, 1], 3, None, t)?
        .mul(&poch(-1, r(3, 2), &[-2, -1], 3, None, t)?)
        .mul(&poch(1, ri(3), &[0, 0], 3, None, t)?)
        .mul(&poch(-1, h.clone(), &[0, 1], 1, None, t)?)
        .mul(&poch(-1, h.clone(), &[0, -1], 1, None, t)?)
        .mul(&poch(1, ri(1), &[0, 0], 1, None, t)?);
    let second = mono(nv, 1, h, &[1, 0])
        .mul(&poch(-1, ri(3), &[2, 1], 3, None, t)?)
        .mul(&poch(-1, ri(0), &[-2, -1], 3, None, t)?)
        .mul(&poch(1, ri(3), &[0, 0], 3, None, t)?)
        .mul(&poch(-1, ri(0), &[0, 1], 1, None, t)?)
        .mul(&poch(-1, ri(1), &[0, -1], 1, None, t)?)
        .mul(&poch(1, ri(1), &[0, 0], 1, None, t)?);
    Ok((lhs, first.add(&second).truncate(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rank;

    #[test]
    fn single_fermion_sum() {
        let s = ucpf_series(&UcpfSpec::new(rat_mat(&[&[1]])), &ri(5)).unwrap();
        // Σ q^{N²/2}/(q)_N = ∏(1+q^{n−1/2})
        let want = [(0, 2, 1), (1, 2, 1), (2, 2, 0), (3, 2, 1), (4, 2, 1), (5, 2, 1), (6, 2, 1), (7, 2, 1), (8, 2, 2)];
        for (n, d, c) in want {
            assert_eq!(s.coeff(&r(n, d)), ri(c), "at {n}/{d}");
        }
    }

    #[test]
    fn matrices() {
        let g3 = g_matrix("G3").unwrap();
        assert!(g3.iter().all(|row| row.iter().sum::<Rat>() == ri(2)));
        let g4 = g_matrix("G4").unwrap();
        assert_eq!(rank(&g4), 4);
        let gl = g_matrix("G4-lattice").unwrap();
        let perm = crate::matrix::permute(&g4, &LATTICE_TO_COSET);
        assert_eq!(perm, gl);
        assert!(g_matrix("G5").is_err());
    }

    #[test]
    fn gaussian_polys() {
        assert_eq!(gauss_coeffs(4, 2), vec![1, 1, 2, 1, 1]);
        assert!(gauss_coeffs(3, 5).is_empty());
        assert_eq!(ordered_shift_counts(2, 6), vec![1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn fock_counts_low_order() {
        let f = fock_basis_count(BasisFamily::Sl3Untwisted, &ri(3)).unwrap();
        assert_eq!(f.coeff(&r(1, 2)), ri(3));
        assert_eq!(f.coeff(&ri(0)), ri(1));
    }

    #[test]
    fn fock_equals_ucpf() {
        let t = ri(5);
        for fam in BasisFamily::all() {
            let f = fock_basis_count(fam, &t).unwrap();
            let u = ucpf_series(&fam.ucpf_spec(), &t).unwrap();
            assert!(f.agrees_to(&u, &t), "{}", fam.name());
        }
    }

    #[test]
    fn dilog_values() {
        assert!((dilog_central_charge(&rat_mat(&[&[1]])).unwrap() - 0.5).abs() < 1e-12);
        assert!((dilog_central_charge(&g_matrix("G3").unwrap()).unwrap() - 1.2).abs() < 1e-9);
        assert!((dilog_central_charge(&g_matrix("G4").unwrap()).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn padding_is_harmless() {
        let spec = BasisFamily::Sl4Eighth.ucpf_spec();
        let t = ri(4);
        assert_eq!(ucpf_sum(&spec, &t).unwrap(), ucpf_sum_padded(&spec, &t, 2).unwrap());
    }

    #[test]
    fn lemmas_small() {
        let t = ri(6);
        for l in [Lemma::QCv, Lemma::QGauss, Lemma::TExp, Lemma::DoubleSum] {
            let rep = lemma_checks(l, 3, &t).unwrap();
            assert!(rep.pass, "{:?}", rep);
        }
    }

    #[test]
    fn theorems_small() {
        let t = ri(6);
        assert!(theorem_g3(3, &t).unwrap().pass);
        for (a, b) in [(false, false), (true, false), (false, true), (true, true)] {
            let rep = theorem_voa_z(a, b, 2, &t).unwrap();
            assert!(rep.pass, "{:?}", rep);
        }
        let rep = theorem_voa_1(2, &t).unwrap();
        assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn indefinite_rejected() {
        let spec = UcpfSpec::new(rat_mat(&[&[1, -2], &[-2, 1]]));
        assert!(ucpf_sum(&spec, &ri(3)).is_err());
    }
}
