//! Expression trees over the character constructors, exact identity checks,
//! the built-in identity corpus and floating-point evaluation for modular checks.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{
    build_root_system, coset_character, modular_s_numeric, numeric_value, string_function, sturm_bound,
    weight_lattice_level, AffineWeight, ModularReport, Surd,
};
use crate::characters::{
    fermion_adjoint_multichar, free_fermion_characters, lattice_character, minimal_character, orbifold_characters,
    rho_root_coordinates, w3_character, w_pairs_with_weight, FermionSector, LatticeSpec, MinimalModule,
    OrbifoldSector, OrbifoldTarget, Z2Sector,
};
use crate::error::{QError, QResult};
use crate::qseries::{eta_quotient, EtaQuotientSpec, QSeries};
use crate::rat::{den_i64, floor_i64, lcm, r, ri, Rat, RatS};
use crate::ucpf::{fock_basis_count, g_matrix, ucpf_series, BasisFamily, UcpfSpec};

fn rat_zero() -> RatS {
    RatS(Rat::zero())
}

/// A character expression. Leaves call exactly one library constructor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExprNode {
    Zero,
    /// ∏ η(m τ)^e.
    EtaQuotient { factors: Vec<(RatS, i64)> },
    /// ∏ (q^m; q^m)_∞^e, i.e. an η-quotient without its q-prefactor.
    QProduct { factors: Vec<(RatS, i64)> },
    /// c^Λ_λ of ŝl(n+1); weights as affine Dynkin labels "[2000]".
    StringFn { n: usize, hw: String, lam: String },
    /// b^Λ_λ = η^n c^Λ_λ.
    CosetChar { n: usize, hw: String, lam: String },
    /// "L(c,h)".
    MinimalChar { module: String },
    /// Σ_i ∏_j ch L(c_ij, h_ij).
    MinimalTensorSum { terms: Vec<Vec<String>> },
    /// θ_{scale·G}(shift)/η^rank.
    LatticeChar { gram: Vec<Vec<i64>>, scale: RatS, shift: Vec<RatS> },
    OrbifoldChar { gram: Vec<Vec<i64>>, scale: RatS, shift: Vec<RatS>, sector: Z2Sector },
    W3Char { m: i64, lplus: Vec<i64>, lminus: Vec<i64> },
    /// Named G matrix (see `ucpf::g_matrix`); empty `a`/`sign` mean zeros.
    UcpfSum {
        matrix: String,
        #[serde(default)]
        a: Vec<RatS>,
        #[serde(default)]
        sign: Vec<u8>,
        #[serde(default = "rat_zero")]
        prefactor: RatS,
    },
    FockCount { family: BasisFamily },
    /// Free fermion traces raised to `copies`.
    FermionChar { sector: FermionSector, copies: i64 },
    /// z-coefficient of the adjoint fermion product of sl(n+1). The default
    /// target is e^ρ for R and z⁰ otherwise.
    MultiCoeffExtract {
        n: usize,
        sector: FermionSector,
        #[serde(default)]
        target: Option<Vec<RatS>>,
    },
    Sum { terms: Vec<ExprNode> },
    Product { factors: Vec<ExprNode> },
    Scale { by: RatS, expr: Box<ExprNode> },
    QShift { by: RatS, expr: Box<ExprNode> },
    Negate { expr: Box<ExprNode> },
    /// expr + by·q^at; used for negative controls.
    Perturb { at: RatS, by: RatS, expr: Box<ExprNode> },
}

impl ExprNode {
    pub fn eta(factors: &[(i64, i64)]) -> Self {
        Self::EtaQuotient { factors: factors.iter().map(|&(m, e)| (RatS(ri(m)), e)).collect() }
    }

    /// Multipliers given as (num, den).
    pub fn eta_frac(factors: &[((i64, i64), i64)]) -> Self {
        Self::EtaQuotient { factors: factors.iter().map(|&((a, b), e)| (RatS(r(a, b)), e)).collect() }
    }

    pub fn qprod(factors: &[(i64, i64)]) -> Self {
        Self::QProduct { factors: factors.iter().map(|&(m, e)| (RatS(ri(m)), e)).collect() }
    }

    pub fn coset(n: usize, hw: &str, lam: &str) -> Self {
        Self::CosetChar { n, hw: hw.into(), lam: lam.into() }
    }

    pub fn string_fn(n: usize, hw: &str, lam: &str) -> Self {
        Self::StringFn { n, hw: hw.into(), lam: lam.into() }
    }

    pub fn scaled(self, by: Rat) -> Self {
        Self::Scale { by: RatS(by), expr: Box::new(self) }
    }

    pub fn shifted(self, by: Rat) -> Self {
        Self::QShift { by: RatS(by), expr: Box::new(self) }
    }

    pub fn negated(self) -> Self {
        Self::Negate { expr: Box::new(self) }
    }

    pub fn perturbed(self, at: Rat, by: Rat) -> Self {
        Self::Perturb { at: RatS(at), by: RatS(by), expr: Box::new(self) }
    }

    pub fn sum(terms: Vec<ExprNode>) -> Self {
        Self::Sum { terms }
    }

    /// Σ c_i·x_i with integer coefficients.
    pub fn combo(parts: &[(i64, ExprNode)]) -> Self {
        Self::Sum {
            terms: parts
                .iter()
                .map(|(c, x)| if *c == 1 { x.clone() } else { x.clone().scaled(ri(*c)) })
                .collect(),
        }
    }

    pub fn ucpf(matrix: &str, a2: &[i64], sign: &[u8], prefactor: Rat) -> Self {
        Self::UcpfSum {
            matrix: matrix.into(),
            a: a2.iter().map(|&x| RatS(r(x, 2))).collect(),
            sign: sign.to_vec(),
            prefactor: RatS(prefactor),
        }
    }

    /// The fermionic sum of a built-in family, including its vacuum energy.
    pub fn family_ucpf(family: BasisFamily) -> Self {
        let s = family.ucpf_spec();
        let name = if family.central_shift() == r(1, 20) { "G3" } else { "G4" };
        Self::UcpfSum {
            matrix: name.into(),
            a: s.a.into_iter().map(RatS).collect(),
            sign: s.sign,
            prefactor: RatS(s.prefactor),
        }
    }

    fn key(&self) -> String {
        serde_json::to_string(self).expect("expression serialises")
    }
}

// ---------------------------------------------------------------------------
// Evaluation

type Cache = Mutex<HashMap<String, (Rat, QSeries)>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Drop all memoised values.
pub fn clear_cache() {
    cache().lock().unwrap().clear();
}

/// Exact series of `expr`, correct strictly below `t`.
pub fn evaluate(expr: &ExprNode, t: &Rat) -> QResult<QSeries> {
    let key = expr.key();
    if let Some((tt, s)) = cache().lock().unwrap().get(&key) {
        if tt >= t {
            return Ok(s.truncate(t));
        }
    }
    let s = evaluate_uncached(expr, t)?.truncate(t);
    let mut c = cache().lock().unwrap();
    let better = c.get(&key).map_or(true, |(tt, _)| tt < t);
    if better {
        c.insert(key, (t.clone(), s.clone()));
    }
    Ok(s)
}

fn rat_mat(m: &[Vec<i64>]) -> Vec<Vec<Rat>> {
    m.iter().map(|row| row.iter().map(|&x| ri(x)).collect()).collect()
}

fn unwrap_rats(v: &[RatS]) -> Vec<Rat> {
    v.iter().map(|x| x.0.clone()).collect()
}

fn evaluate_uncached(expr: &ExprNode, t: &Rat) -> QResult<QSeries> {
    use ExprNode::*;
    match expr {
        Zero => Ok(QSeries::zero(Some(t.clone()))),
        EtaQuotient { factors } => {
            let f: Vec<(Rat, i64)> = factors.iter().map(|(m, e)| (m.0.clone(), *e)).collect();
            eta_quotient(&EtaQuotientSpec::new(&f), t)
        }
        QProduct { factors } => {
            let f: Vec<(Rat, i64)> = factors.iter().map(|(m, e)| (m.0.clone(), *e)).collect();
            let mut spec = EtaQuotientSpec::new(&f);
            spec.leading = Some(-spec.leading_exponent());
            eta_quotient(&spec, t)
        }
        StringFn { n, hw, lam } => {
            let rs = build_root_system(*n)?;
            string_function(&rs, &AffineWeight::parse(hw)?, &AffineWeight::parse(lam)?, t)
        }
        CosetChar { n, hw, lam } => {
            let rs = build_root_system(*n)?;
            coset_character(&rs, &AffineWeight::parse(hw)?, &AffineWeight::parse(lam)?, t)
        }
        MinimalChar { module } => {
            let m: MinimalModule = module.parse()?;
            minimal_character(m.m, m.r, m.s, t)
        }
        MinimalTensorSum { terms } => {
            let mut acc = QSeries::zero(Some(t.clone()));
            for term in terms {
                let mut prod = QSeries::one();
                for name in term {
                    let m: MinimalModule = name.parse()?;
                    // each factor starts at or above −1/24
                    prod = prod.mul(&minimal_character(m.m, m.r, m.s, &(t + ri(1)))?);
                }
                acc = acc.add(&prod.truncate(t));
            }
            Ok(acc)
        }
        LatticeChar { gram, scale, shift } => lattice_character(&rat_mat(gram), &scale.0, &unwrap_rats(shift), t),
        OrbifoldChar { gram, scale, shift, sector } => {
            let sec = OrbifoldSector {
                target: OrbifoldTarget::Lattice(LatticeSpec {
                    gram: rat_mat(gram),
                    scale: scale.0.clone(),
                    shift: unwrap_rats(shift),
                }),
                sector: *sector,
            };
            orbifold_characters(&sec, t)
        }
        W3Char { m, lplus, lminus } => w3_character(*m, lplus, lminus, t),
        UcpfSum { matrix, a, sign, prefactor } => {
            let g = g_matrix(matrix)?;
            let dim = g.len();
            let a = if a.is_empty() { vec![Rat::zero(); dim] } else { unwrap_rats(a) };
            let spec = UcpfSpec::new(g).with_a(a).with_sign(sign.clone()).with_prefactor(prefactor.0.clone());
            ucpf_series(&spec, t)
        }
        FockCount { family } => fock_basis_count(*family, t),
        FermionChar { sector, copies } => free_fermion_characters(*sector, *copies, t),
        MultiCoeffExtract { n, sector, target } => {
            let target = match target {
                Some(v) => unwrap_rats(v),
                None if *sector == FermionSector::R => rho_root_coordinates(*n),
                None => vec![Rat::zero(); *n],
            };
            if target.len() != *n {
                return Err(QError::RankMismatch(target.len(), *n));
            }
            Ok(fermion_adjoint_multichar(*n, *sector, t)?.coeff_extract(&target))
        }
        Sum { terms } => {
            let mut acc = QSeries::zero(Some(t.clone()));
            for x in terms {
                acc = acc.add(&evaluate(x, t)?);
            }
            Ok(acc)
        }
        Product { factors } => evaluate_product(factors, t),
        Scale { by, expr } => Ok(evaluate(expr, t)?.scale(&by.0)),
        QShift { by, expr } => Ok(evaluate(expr, &(t - &by.0))?.qshift(&by.0)),
        Negate { expr } => Ok(evaluate(expr, t)?.neg()),
        Perturb { at, by, expr } => {
            if &at.0 >= t {
                return Err(QError::InvalidArgument(format!("perturbation at q^{} is not below the order {t}", at.0)));
            }
            Ok(evaluate(expr, t)?.add(&QSeries::monomial(by.0.clone(), at.0.clone(), None)))
        }
    }
}

/// Each factor is evaluated far enough that the product is exact below `t`.
fn evaluate_product(factors: &[ExprNode], t: &Rat) -> QResult<QSeries> {
    if factors.is_empty() {
        return Ok(QSeries::one());
    }
    let first: Vec<QSeries> = factors.iter().map(|f| evaluate(f, t)).collect::<QResult<_>>()?;
    // lowest exponent that may carry a nonzero coefficient
    let lows: Vec<Rat> = first
        .iter()
        .map(|s| s.order().or_else(|| s.trunc()).unwrap_or_else(Rat::zero))
        .collect();
    let total: Rat = lows.iter().sum();
    let mut acc = QSeries::one();
    for (i, f) in factors.iter().enumerate() {
        let need = t - (&total - &lows[i]);
        let s = if &need > t { evaluate(f, &need)? } else { first[i].clone() };
        acc = acc.mul(&s);
    }
    Ok(acc.truncate(t))
}

// ---------------------------------------------------------------------------
// Identity cases

/// Sturm-bound data for identities between ŝl(rank+1)_level coset characters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateSpec {
    pub rank: usize,
    pub level: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCase {
    pub id: String,
    pub lhs: ExprNode,
    pub rhs: ExprNode,
    pub order: RatS,
    pub source: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub certificate: Option<CertificateSpec>,
}

impl IdentityCase {
    pub fn new(id: &str, lhs: ExprNode, rhs: ExprNode, order: Rat, source: &str, tags: &[&str]) -> Self {
        Self {
            id: id.into(),
            lhs,
            rhs,
            order: RatS(order),
            source: source.into(),
            tags: tags.iter().map(|s| s.to_string()).collect(),
            certificate: None,
        }
    }

    pub fn with_certificate(mut self, rank: usize, level: i64) -> Self {
        self.certificate = Some(CertificateSpec { rank, level });
        self
    }

    /// Selected by a filter if it names a tag, or prefixes the id.
    pub fn matches(&self, filter: &str) -> bool {
        self.tags.iter().any(|t| t == filter) || self.id.starts_with(filter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub exponent: RatS,
    pub lhs: RatS,
    pub rhs: RatS,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub id: String,
    pub source: String,
    pub tags: Vec<String>,
    pub pass: bool,
    pub checked_to: RatS,
    pub first_mismatch: Option<Mismatch>,
    pub certificate: String,
    pub error: Option<String>,
    pub millis: u128,
}

/// Exact comparison of both sides below the case order.
pub fn check_identity(case: &IdentityCase) -> CaseReport {
    check_identity_at(case, None)
}

/// As [`check_identity`], optionally overriding the order.
pub fn check_identity_at(case: &IdentityCase, order: Option<&Rat>) -> CaseReport {
    let t = order.cloned().unwrap_or_else(|| case.order.0.clone());
    let start = Instant::now();
    let sides = evaluate(&case.lhs, &t).and_then(|l| evaluate(&case.rhs, &t).map(|r| (l, r)));
    let mut rep = CaseReport {
        id: case.id.clone(),
        source: case.source.clone(),
        tags: case.tags.clone(),
        pass: false,
        checked_to: RatS(t.clone()),
        first_mismatch: None,
        certificate: "finite check, not certificate".into(),
        error: None,
        millis: 0,
    };
    match sides {
        Err(e) => rep.error = Some(e.to_string()),
        Ok((l, rr)) => {
            rep.first_mismatch = l
                .first_mismatch(&rr, &t)
                .map(|(e, a, b)| Mismatch { exponent: RatS(e), lhs: RatS(a), rhs: RatS(b) });
            rep.pass = rep.first_mismatch.is_none();
            if let Some(c) = &case.certificate {
                let grid = lcm(lcm(l.denom(), rr.denom()), den_i64(&t));
                rep.certificate = certificate_note(c, &t, grid);
            }
        }
    }
    rep.millis = start.elapsed().as_millis();
    rep
}

/// The artifact's own Sturm bound next to the number of grid steps compared.
pub fn certificate_note(c: &CertificateSpec, t: &Rat, grid: i64) -> String {
    let bound = match build_root_system(c.rank) {
        Ok(rs) => sturm_bound(c.level, c.rank as i64, weight_lattice_level(&rs)),
        Err(e) => return format!("finite check, not certificate ({e})"),
    };
    let steps = floor_i64(&(t * ri(grid)));
    if steps >= bound {
        format!("certificate-grade: {steps} grid steps (1/{grid}) compared, Sturm bound {bound}")
    } else {
        format!("finite check, not certificate: {steps} grid steps (1/{grid}) compared, Sturm bound {bound}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub reports: Vec<CaseReport>,
    pub passed: usize,
    pub failed: usize,
}

impl CorpusSummary {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    /// Plain table, one line per case.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            let status = if r.pass { "PASS" } else { "FAIL" };
            let detail = match (&r.error, &r.first_mismatch) {
                (Some(e), _) => format!("error: {e}"),
                (None, Some(m)) => format!(
                    "first mismatch at q^{}: lhs {} vs rhs {}",
                    m.exponent.0, m.lhs.0, m.rhs.0
                ),
                (None, None) => r.certificate.clone(),
            };
            out.push_str(&format!("{status}  {:<40} T={:<6} {:>7} ms  {detail}\n", r.id, r.checked_to.0, r.millis));
        }
        out.push_str(&format!("{} passed, {} failed\n", self.passed, self.failed));
        out
    }
}

/// Cases matching any filter (all cases when `filters` is empty).
pub fn select<'a>(cases: &'a [IdentityCase], filters: &[String]) -> Vec<&'a IdentityCase> {
    cases
        .iter()
        .filter(|c| filters.is_empty() || filters.iter().any(|f| c.matches(f)))
        .collect()
}

/// Check the selected cases in parallel; report order follows the input.
pub fn run_corpus(cases: &[IdentityCase], filters: &[String], order: Option<&Rat>) -> CorpusSummary {
    let chosen = select(cases, filters);
    let reports: Vec<CaseReport> = chosen.par_iter().map(|c| check_identity_at(c, order)).collect();
    let passed = reports.iter().filter(|r| r.pass).count();
    CorpusSummary { failed: reports.len() - passed, passed, reports }
}

/// Built-in cases plus negative controls when a filter asks for them.
pub fn builtin_selection(filters: &[String]) -> Vec<IdentityCase> {
    let base = builtin_corpus();
    if filters.is_empty() {
        return base;
    }
    let negs = negative_controls(&base);
    base.into_iter().chain(negs).filter(|c| filters.iter().any(|f| c.matches(f))).collect()
}

/// One perturbed copy of every case: a unit added to one lhs coefficient.
pub fn negative_controls(cases: &[IdentityCase]) -> Vec<IdentityCase> {
    cases
        .iter()
        .map(|c| {
            // an integer exponent strictly inside the compared range
            let at = ri(floor_i64(&(&c.order.0 / ri(2))).max(0));
            IdentityCase {
                id: format!("neg/{}", c.id),
                lhs: c.lhs.clone().perturbed(at, ri(1)),
                rhs: c.rhs.clone(),
                order: c.order.clone(),
                source: format!("{} (perturbed)", c.source),
                tags: vec!["negative-controls".into()],
                certificate: None,
            }
        })
        .collect()
}

pub fn load_corpus(path: &Path) -> QResult<Vec<IdentityCase>> {
    let text = std::fs::read_to_string(path).map_err(|e| QError::Io(format!("{}: {e}", path.display())))?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> QResult<Vec<IdentityCase>> {
    serde_json::from_str(text).map_err(|e| QError::Parse(format!("corpus: {e}")))
}

pub fn corpus_to_string(cases: &[IdentityCase]) -> String {
    serde_json::to_string_pretty(cases).expect("corpus serialises")
}

pub fn save_corpus(cases: &[IdentityCase], path: &Path) -> QResult<()> {
    std::fs::write(path, corpus_to_string(cases)).map_err(|e| QError::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Numerics

/// Σ c·e^{2πiτe} together with its tail bound; fails when the bound exceeds `tol`.
pub fn numeric_eval(s: &QSeries, tau: Complex64, tol: f64) -> QResult<(Complex64, f64)> {
    let (v, tail) = numeric_value(s, tau)?;
    if tail > tol {
        return Err(QError::IncreaseT(format!("tail bound {tail:.3e} exceeds {tol:.1e} at τ = {tau}")));
    }
    Ok((v, tail))
}

/// η(−1/τ) = √(−iτ) η(τ) at the given points.
pub fn eta_s_check(taus: &[Complex64], t: &Rat, tol: f64) -> QResult<ModularReport> {
    let e = evaluate(&ExprNode::eta(&[(1, 1)]), t)?;
    modular_s_numeric(&[e.clone()], &[e], &[vec![Surd::rational(ri(1))]], &r(1, 2), taus, tol)
}

/// The first two S-transformation rows of the ŝl(4)₂ coset characters,
/// using their η-quotient forms.
pub fn sl4_s_rows_check(taus: &[Complex64], t: &Rat, tol: f64) -> QResult<ModularReport> {
    let ev = |name: &str| evaluate(&sl4_eta(name), t);
    let lhs = vec![ev("diff")?, ev("sum")?];
    let rhs = vec![ev("1100_1100")?, ev("1100_0011")?, ev("sum")?, ev("2000_0101")?, ev("0101_0101")?, ev("0101_2000")?];
    let z = || Surd::rational(Rat::zero());
    let k = |c: i64| Surd { rat: r(c, 2), rad: r(1, 3) };
    let relation = vec![
        vec![Surd::rational(ri(2)), Surd::rational(ri(2)), z(), z(), z(), z()],
        vec![z(), z(), k(1), k(6), k(6), k(2)],
    ];
    modular_s_numeric(&lhs, &rhs, &relation, &Rat::zero(), taus, tol)
}

// ---------------------------------------------------------------------------
// Built-in corpus

/// η-quotient forms of the ŝl(4)₂ coset characters b^Λ_λ.
///
/// Names: "sum" = b²⁰⁰⁰₂₀₀₀ + b²⁰⁰⁰₀₀₂₀, "diff" = b²⁰⁰⁰₂₀₀₀ − b²⁰⁰⁰₀₀₂₀,
/// "2000_2000", "2000_0020", "2000_0101", "0101_2000", "0101_0101",
/// "1100_1100", "1100_0011".
pub fn sl4_eta(name: &str) -> ExprNode {
    let sum = || {
        ExprNode::sum(vec![
            ExprNode::eta(&[(4, 4), (6, 8), (1, -1), (2, -4), (3, -3), (12, -4)]),
            ExprNode::eta(&[(2, 8), (3, 1), (12, 4), (1, -5), (4, -4), (6, -4)]),
        ])
    };
    let diff = || ExprNode::eta(&[(1, 2), (2, -2)]);
    match name {
        "sum" => sum(),
        "diff" => diff(),
        "2000_2000" => ExprNode::sum(vec![sum(), diff()]).scaled(r(1, 2)),
        "2000_0020" => ExprNode::sum(vec![sum(), diff().negated()]).scaled(r(1, 2)),
        "2000_0101" => ExprNode::eta(&[(2, 2), (6, 2), (1, -3), (3, -1)]),
        "0101_2000" => ExprNode::eta(&[(6, 3), (1, -2), (2, -1)]).scaled(ri(3)),
        "0101_0101" => ExprNode::eta(&[(2, 3), (3, 2), (1, -4), (6, -1)]),
        "1100_1100" => ExprNode::eta(&[(4, 5), (1, -3), (8, -2)]),
        "1100_0011" => ExprNode::eta(&[(2, 2), (8, 2), (1, -3), (4, -1)]).scaled(ri(2)),
        other => panic!("unknown sl4 coset character '{other}'"),
    }
}

fn a2() -> Vec<Vec<i64>> {
    vec![vec![2, -1], vec![-1, 2]]
}

fn lattice(gram: Vec<Vec<i64>>, scale: Rat, shift: &[Rat]) -> ExprNode {
    ExprNode::LatticeChar { gram, scale: RatS(scale), shift: shift.iter().cloned().map(RatS).collect() }
}

fn orbifold(shift: &[Rat], sector: Z2Sector) -> ExprNode {
    ExprNode::OrbifoldChar {
        gram: a2(),
        scale: RatS(r(1, 2)),
        shift: shift.iter().cloned().map(RatS).collect(),
        sector,
    }
}

fn tensor(terms: &[&[&str]]) -> ExprNode {
    ExprNode::MinimalTensorSum { terms: terms.iter().map(|t| t.iter().map(|s| s.to_string()).collect()).collect() }
}

fn w3(h: Rat) -> ExprNode {
    let (lplus, lminus) = w_pairs_with_weight(2, 5, &h).expect("weights of the c = 6/5 coset")[0].clone();
    ExprNode::W3Char { m: 5, lplus, lminus }
}

/// The complete built-in corpus (negative controls excluded).
pub fn builtin_corpus() -> Vec<IdentityCase> {
    let mut v = Vec::new();
    v.extend(sl4_strfun_cases());
    v.extend(ucpf_cases());
    v.extend(bridge_cases());
    v.extend(fock_cases());
    v.extend(fermion_cases());
    v.extend(w3_cases());
    v.extend(decomposition_cases());
    v.extend(dissection_cases());
    v
}

/// η-quotient forms against Freudenthal-computed ŝl(4)₂ coset characters.
pub fn sl4_strfun_cases() -> Vec<IdentityCase> {
    let b = |hw: &str, lam: &str| ExprNode::coset(3, hw, lam);
    let t = ri(8);
    let src = "sl4 level-2 string functions as eta quotients";
    let tags = ["sl4-strfun", "freudenthal"];
    let mk = |id: &str, lhs: ExprNode, name: &str| {
        IdentityCase::new(id, lhs, sl4_eta(name), t.clone(), src, &tags).with_certificate(3, 2)
    };
    vec![
        mk("sl4-strfun/sum", ExprNode::sum(vec![b("[2000]", "[2000]"), b("[2000]", "[0020]")]), "sum"),
        mk("sl4-strfun/diff", ExprNode::sum(vec![b("[2000]", "[2000]"), b("[2000]", "[0020]").negated()]), "diff"),
        mk("sl4-strfun/2000-0101", b("[2000]", "[0101]"), "2000_0101"),
        mk("sl4-strfun/0101-2000", b("[0101]", "[2000]"), "0101_2000"),
        mk("sl4-strfun/0101-0020", b("[0101]", "[0020]"), "0101_2000"),
        mk("sl4-strfun/0101-0101", b("[0101]", "[0101]"), "0101_0101"),
        mk("sl4-strfun/1100-1100", b("[1100]", "[1100]"), "1100_1100"),
        mk("sl4-strfun/1100-0011", b("[1100]", "[0011]"), "1100_0011"),
    ]
}

/// Fermionic sums of the coset bases against coset characters.
pub fn ucpf_cases() -> Vec<IdentityCase> {
    let b3 = |hw: &str, lam: &str| ExprNode::coset(2, hw, lam);
    let fam = |f: BasisFamily| ExprNode::family_ucpf(f).shifted(-f.central_shift());
    let e = |n: &str| sl4_eta(n);
    let src3 = "sl3 level-2 parafermion fermionic sums";
    let src4 = "sl4 level-2 parafermion fermionic sums";
    vec![
        IdentityCase::new(
            "ucpf/sl3-untwisted",
            fam(BasisFamily::Sl3Untwisted),
            ExprNode::combo(&[(1, b3("[200]", "[200]")), (3, b3("[200]", "[011]"))]),
            ri(15),
            src3,
            &["ucpf", "sl3"],
        ),
        IdentityCase::new(
            "ucpf/sl3-twisted",
            fam(BasisFamily::Sl3Twisted),
            ExprNode::combo(&[(1, b3("[110]", "[002]")), (3, b3("[110]", "[110]"))]),
            ri(15),
            src3,
            &["ucpf", "sl3"],
        ),
        IdentityCase::new(
            "ucpf/sl4-untwisted",
            fam(BasisFamily::Sl4Untwisted),
            ExprNode::combo(&[(1, e("sum")), (6, e("2000_0101"))]),
            ri(12),
            src4,
            &["ucpf", "sl4"],
        ),
        IdentityCase::new(
            "ucpf/sl4-sixth",
            fam(BasisFamily::Sl4Sixth),
            ExprNode::combo(&[(2, e("0101_2000")), (6, e("0101_0101"))]),
            ri(12),
            src4,
            &["ucpf", "sl4"],
        ),
        IdentityCase::new(
            "ucpf/sl4-eighth",
            fam(BasisFamily::Sl4Eighth),
            ExprNode::combo(&[(4, e("1100_1100")), (4, e("1100_0011"))]),
            ri(12),
            src4,
            &["ucpf", "sl4"],
        ),
    ]
}

/// Scaled A2 lattice, its Z2 orbifold, ŝl(4)₂ coset characters and fermionic sums.
pub fn bridge_cases() -> Vec<IdentityCase> {
    let t = ri(12);
    let e = |n: &str| sl4_eta(n);
    let z = ri(0);
    // representative whose integer part carries the (−1)^{m+n} sign of the printed sum
    let g1 = [r(4, 3), r(2, 3)];
    let untw = lattice(a2(), r(1, 2), &[z.clone(), z.clone()]);
    let shf = lattice(a2(), r(1, 2), &g1);
    let lat_sum = |a2: &[i64], sign: &[u8]| ExprNode::ucpf("G4-lattice", a2, sign, Rat::zero());
    let src_l = "half-scaled A2 lattice vs fermionic sums";
    let src_t = "A2 lattice, orbifold, coset and fermionic sum summary";
    let mut v = vec![
        IdentityCase::new(
            "bridge/lattice-untwisted-ucpf",
            untw.clone(),
            ExprNode::ucpf("G4", &[0; 6], &[], Rat::zero()).shifted(r(-1, 12)),
            t.clone(),
            src_l,
            &["lattice", "ucpf"],
        ),
        IdentityCase::new(
            "bridge/lattice-shifted-ucpf",
            shf.clone(),
            ExprNode::ucpf("G4", &[0, 1, 0, 1, 1, 1], &[], Rat::zero()).shifted(r(1, 12)).scaled(r(1, 2)),
            t.clone(),
            src_l,
            &["lattice", "ucpf"],
        ),
    ];
    // (id, lattice-side, coset-side, fermionic side)
    let rows: Vec<(&str, ExprNode, ExprNode, ExprNode, &[&str])> = vec![
        (
            "row1",
            untw,
            ExprNode::combo(&[(1, e("sum")), (6, e("2000_0101"))]),
            lat_sum(&[0; 6], &[]).shifted(r(-1, 12)),
            &["lattice"],
        ),
        (
            "row2",
            shf,
            ExprNode::combo(&[(1, e("0101_2000")), (3, e("0101_0101"))]),
            lat_sum(&[0, 1, 1, 0, 1, 1], &[]).shifted(r(1, 12)).scaled(r(1, 2)),
            &["lattice"],
        ),
        (
            "row3",
            orbifold(&[z.clone(), z.clone()], Z2Sector::MinusPlus),
            ExprNode::combo(&[(1, e("1100_1100")), (1, e("1100_0011"))]),
            lat_sum(&[1, 1, 0, 0, 0, 1], &[]).shifted(r(1, 24)).scaled(r(1, 4)),
            &["orbifold"],
        ),
        (
            "row4",
            orbifold(&[z.clone(), z.clone()], Z2Sector::PlusMinus),
            ExprNode::combo(&[(1, e("sum")), (-2, e("2000_0101"))]),
            lat_sum(&[0; 6], &[1, 1, 0, 1, 1, 0]).shifted(r(-1, 12)),
            &["orbifold"],
        ),
        (
            "row5",
            orbifold(&g1, Z2Sector::PlusMinus),
            ExprNode::combo(&[(1, e("0101_2000")), (-1, e("0101_0101"))]),
            lat_sum(&[0, 1, 1, 0, 1, 1], &[0, 1, 1, 0, 1, 1]).shifted(r(1, 12)).scaled(r(1, 2)),
            &["orbifold"],
        ),
        (
            "row6",
            orbifold(&[z.clone(), z], Z2Sector::MinusMinus),
            ExprNode::combo(&[(1, e("1100_1100")), (-1, e("1100_0011"))]),
            lat_sum(&[1, 1, 0, 0, 0, 1], &[1, 1, 0, 0, 0, 1]).shifted(r(1, 24)).scaled(r(-1, 2)),
            &["orbifold"],
        ),
    ];
    for (row, lat, coset, ferm, extra) in rows {
        let mut tags = vec!["table"];
        tags.extend_from_slice(extra);
        v.push(IdentityCase::new(&format!("table/{row}/lattice-coset"), lat, coset.clone(), t.clone(), src_t, &tags));
        tags.push("ucpf");
        v.push(IdentityCase::new(&format!("table/{row}/coset-ucpf"), coset, ferm, t.clone(), src_t, &tags));
    }
    v
}

/// Direct Fock-basis counting against the fermionic sums.
pub fn fock_cases() -> Vec<IdentityCase> {
    BasisFamily::all()
        .into_iter()
        .map(|f| {
            IdentityCase::new(
                &format!("fock/{}", f.name()),
                ExprNode::FockCount { family: f },
                ExprNode::family_ucpf(f),
                ri(8),
                "quasiparticle basis counting",
                &["fock"],
            )
        })
        .collect()
}

/// Adjoint free-fermion extractions and ŝl(3)₃ string-function relations.
pub fn fermion_cases() -> Vec<IdentityCase> {
    use FermionSector::{NsMinus, R};
    let t = ri(12);
    let ext = |n: usize, sector: FermionSector| ExprNode::MultiCoeffExtract { n, sector, target: None };
    let src_e = "adjoint free fermion coefficient extraction";
    let src_c = "sl3 level-3 string function relations";
    let tags = ["fermions"];
    let c = |hw: &str, lam: &str| ExprNode::string_fn(2, hw, lam);
    let ns3 = ExprNode::sum(vec![
        ExprNode::eta_frac(&[((1, 2), 3), ((1, 1), -9), ((4, 1), 15), ((2, 1), -6), ((8, 1), -6)]),
        ExprNode::eta_frac(&[((1, 2), 3), ((1, 1), -9), ((8, 1), 6), ((4, 1), -3)]).scaled(ri(-8)),
    ]);
    // 2η(2)²η(2/3)²/(η⁵η(1/3))
    let o111 = ExprNode::eta_frac(&[((2, 1), 2), ((2, 3), 2), ((1, 1), -5), ((1, 3), -1)]).scaled(ri(2));
    let r2 = ExprNode::eta(&[(2, 3), (3, 2), (1, -6), (6, -1)]);
    let k6 = ExprNode::eta_frac(&[((1, 2), 3), ((1, 3), 2), ((1, 1), -6), ((1, 6), -1)]);
    let ns2 = ExprNode::eta_frac(&[((1, 2), 2), ((3, 2), 2), ((1, 1), -5), ((3, 1), -1)]);
    vec![
        IdentityCase::new("fermions/n1-R", ext(1, R), ExprNode::eta(&[(2, 1), (1, -2)]), t.clone(), src_e, &tags),
        IdentityCase::new(
            "fermions/n1-NS",
            ext(1, NsMinus),
            ExprNode::eta_frac(&[((1, 2), 1), ((1, 1), -2)]),
            t.clone(),
            src_e,
            &tags,
        ),
        IdentityCase::new("fermions/n2-R", ext(2, R), r2.clone(), t.clone(), src_e, &tags),
        IdentityCase::new("fermions/n2-NS", ext(2, NsMinus), ns2.clone(), t.clone(), src_e, &tags),
        IdentityCase::new(
            "fermions/n3-R",
            ext(3, R),
            ExprNode::eta(&[(2, 15), (1, -14), (4, -4)]),
            t.clone(),
            src_e,
            &tags,
        ),
        IdentityCase::new("fermions/n3-NS", ext(3, NsMinus), ns3, t.clone(), src_e, &tags),
        IdentityCase::new(
            "fermions/n2-R-strfun",
            ext(2, R),
            c("[111]", "[111]"),
            ri(6),
            "Ramond extraction vs Weyl-vector string function",
            &["fermions", "freudenthal"],
        ),
        IdentityCase::new(
            "fermions/c111-combination",
            o111.clone(),
            ExprNode::combo(&[(2, c("[111]", "[111]")), (1, c("[111]", "[300]"))]),
            t.clone(),
            src_c,
            &["fermions", "strfun"],
        ),
        IdentityCase::new(
            "fermions/c111-300",
            c("[111]", "[300]"),
            ExprNode::combo(&[(1, o111), (-2, r2)]),
            t.clone(),
            src_c,
            &["fermions", "strfun"],
        ),
        IdentityCase::new(
            "fermions/c300-difference",
            ExprNode::combo(&[(1, c("[300]", "[300]")), (-1, c("[300]", "[030]"))]),
            ExprNode::eta(&[(1, -1), (3, -1)]),
            t.clone(),
            src_c,
            &["fermions", "strfun"],
        ),
        IdentityCase::new(
            "fermions/c300-sixth",
            ExprNode::combo(&[
                (1, c("[300]", "[300]")),
                (-3, c("[300]", "[111]")),
                (2, c("[300]", "[030]")),
                (1, c("[111]", "[111]")),
                (-1, c("[111]", "[300]")),
            ]),
            k6.clone(),
            t.clone(),
            src_c,
            &["fermions", "strfun"],
        ),
        IdentityCase::new(
            "fermions/c300-transformed",
            ExprNode::combo(&[
                (1, c("[300]", "[300]")),
                (6, c("[300]", "[111]")),
                (2, c("[300]", "[030]")),
                (-2, c("[111]", "[111]")),
                (-1, c("[111]", "[300]")),
            ]),
            ExprNode::combo(&[(3, ns2), (-2, k6)]),
            t,
            src_c,
            &["fermions", "strfun"],
        ),
    ]
}

/// ŝl(3)₂ parafermion characters as W₃ characters at c = 6/5.
pub fn w3_cases() -> Vec<IdentityCase> {
    let b = |hw: &str, lam: &str| ExprNode::coset(2, hw, lam);
    let t = ri(10);
    let src = "sl3 parafermions as W3 minimal characters";
    vec![
        IdentityCase::new(
            "w3/200-200",
            b("[200]", "[200]"),
            ExprNode::combo(&[(1, w3(ri(0))), (2, w3(ri(2)))]),
            t.clone(),
            src,
            &["w3"],
        ),
        IdentityCase::new("w3/110-110", b("[110]", "[110]"), w3(r(1, 10)), t.clone(), src, &["w3"]),
        IdentityCase::new("w3/200-011", b("[200]", "[011]"), w3(r(1, 2)), t.clone(), src, &["w3"]),
        IdentityCase::new(
            "w3/110-002",
            b("[110]", "[002]"),
            ExprNode::combo(&[(2, w3(r(3, 5))), (1, w3(r(8, 5)))]),
            t,
            src,
            &["w3"],
        ),
    ]
}

/// Minimal-model decompositions of coset and lattice characters.
pub fn decomposition_cases() -> Vec<IdentityCase> {
    let t = ri(16);
    let b3 = |hw: &str, lam: &str| ExprNode::coset(2, hw, lam);
    let e = |n: &str| sl4_eta(n);
    let s3 = "sl3 level-2 cosets into c=1/2 and c=7/10 modules";
    let s4 = "sl4 level-2 cosets into c=1/2, 7/10, 4/5 modules";
    let sa = "sqrt2-scaled A2 lattice modules into c=1/2, 7/10, 4/5 modules";
    let mk = |id: &str, lhs: ExprNode, rhs: ExprNode, src: &str, tag: &str| {
        IdentityCase::new(id, lhs, rhs, t.clone(), src, &["decomp", tag])
    };
    const A: &str = "L(1/2,0)";
    const B: &str = "L(1/2,1/2)";
    const S: &str = "L(1/2,1/16)";
    let mut v = vec![
        mk(
            "decomp/sl3/200-200",
            b3("[200]", "[200]"),
            tensor(&[&[A, "L(7/10,0)"], &[B, "L(7/10,3/2)"]]),
            s3,
            "sl3",
        ),
        mk(
            "decomp/sl3/200-011",
            b3("[200]", "[011]"),
            tensor(&[&[B, "L(7/10,0)"], &[A, "L(7/10,3/2)"]]),
            s3,
            "sl3",
        ),
        mk("decomp/sl3/200-011-alt", b3("[200]", "[011]"), tensor(&[&[S, "L(7/10,7/16)"]]), s3, "sl3"),
        mk(
            "decomp/sl3/110-002",
            b3("[110]", "[002]"),
            tensor(&[&[A, "L(7/10,3/5)"], &[B, "L(7/10,1/10)"]]),
            s3,
            "sl3",
        ),
        mk(
            "decomp/sl3/110-110",
            b3("[110]", "[110]"),
            tensor(&[&[A, "L(7/10,1/10)"], &[B, "L(7/10,3/5)"]]),
            s3,
            "sl3",
        ),
        mk("decomp/sl3/110-110-alt", b3("[110]", "[110]"), tensor(&[&[S, "L(7/10,3/80)"]]), s3, "sl3"),
    ];
    let sl4: Vec<(&str, &str, Vec<[&str; 3]>)> = vec![
        (
            "2000-2000",
            "2000_2000",
            vec![
                [A, "L(7/10,0)", "L(4/5,0)"],
                [A, "L(7/10,3/5)", "L(4/5,7/5)"],
                [B, "L(7/10,3/2)", "L(4/5,0)"],
                [B, "L(7/10,1/10)", "L(4/5,7/5)"],
            ],
        ),
        (
            "2000-0020",
            "2000_0020",
            vec![
                [A, "L(7/10,3/5)", "L(4/5,2/5)"],
                [B, "L(7/10,1/10)", "L(4/5,2/5)"],
                [A, "L(7/10,0)", "L(4/5,3)"],
                [B, "L(7/10,3/2)", "L(4/5,3)"],
            ],
        ),
        ("2000-0101", "2000_0101", vec![[S, "L(7/10,7/16)", "L(4/5,0)"], [S, "L(7/10,3/80)", "L(4/5,7/5)"]]),
        ("2000-0101-alt", "2000_0101", vec![[S, "L(7/10,3/80)", "L(4/5,2/5)"], [S, "L(7/10,7/16)", "L(4/5,3)"]]),
        (
            "0101-2000",
            "0101_2000",
            vec![
                [A, "L(7/10,0)", "L(4/5,2/3)"],
                [A, "L(7/10,3/5)", "L(4/5,1/15)"],
                [B, "L(7/10,1/10)", "L(4/5,1/15)"],
                [B, "L(7/10,3/2)", "L(4/5,2/3)"],
            ],
        ),
        ("0101-0101", "0101_0101", vec![[S, "L(7/10,3/80)", "L(4/5,1/15)"], [S, "L(7/10,7/16)", "L(4/5,2/3)"]]),
        (
            "1100-1100",
            "1100_1100",
            vec![
                [A, "L(7/10,0)", "L(4/5,1/8)"],
                [B, "L(7/10,3/5)", "L(4/5,1/40)"],
                [B, "L(7/10,1/10)", "L(4/5,21/40)"],
                [A, "L(7/10,3/2)", "L(4/5,13/8)"],
            ],
        ),
        ("1100-1100-alt", "1100_1100", vec![[S, "L(7/10,3/80)", "L(4/5,1/40)"], [S, "L(7/10,7/16)", "L(4/5,13/8)"]]),
        (
            "1100-0011",
            "1100_0011",
            vec![
                [A, "L(7/10,3/5)", "L(4/5,1/40)"],
                [B, "L(7/10,1/10)", "L(4/5,1/40)"],
                [A, "L(7/10,0)", "L(4/5,13/8)"],
                [B, "L(7/10,3/2)", "L(4/5,13/8)"],
            ],
        ),
        ("1100-0011-alt", "1100_0011", vec![[S, "L(7/10,3/80)", "L(4/5,21/40)"], [S, "L(7/10,7/16)", "L(4/5,1/8)"]]),
    ];
    for (id, name, terms) in sl4 {
        let refs: Vec<&[&str]> = terms.iter().map(|x| &x[..]).collect();
        v.push(mk(&format!("decomp/sl4/{id}"), e(name), tensor(&refs), s4, "sl4"));
    }
    let sqrt2a2 = vec![vec![4, -2], vec![-2, 4]];
    let modules: Vec<(&str, [Rat; 2], Vec<[&str; 3]>)> = vec![
        (
            "V0",
            [ri(0), ri(0)],
            vec![
                [A, "L(7/10,0)", "L(4/5,0)"],
                [A, "L(7/10,3/5)", "L(4/5,7/5)"],
                [B, "L(7/10,3/2)", "L(4/5,0)"],
                [B, "L(7/10,1/10)", "L(4/5,7/5)"],
                [A, "L(7/10,3/5)", "L(4/5,2/5)"],
                [B, "L(7/10,1/10)", "L(4/5,2/5)"],
                [A, "L(7/10,0)", "L(4/5,3)"],
                [B, "L(7/10,3/2)", "L(4/5,3)"],
            ],
        ),
        ("V1", [r(-1, 3), r(1, 3)], v1_terms()),
        ("V2", [r(1, 3), r(-1, 3)], v1_terms()),
        ("Va", [r(1, 2), ri(0)], va_terms()),
        ("Vb", [ri(0), r(1, 2)], va_terms()),
        (
            "Vc",
            [r(1, 2), r(1, 2)],
            vec![
                [B, "L(7/10,0)", "L(4/5,0)"],
                [B, "L(7/10,3/5)", "L(4/5,7/5)"],
                [A, "L(7/10,3/2)", "L(4/5,0)"],
                [A, "L(7/10,1/10)", "L(4/5,7/5)"],
                [B, "L(7/10,3/5)", "L(4/5,2/5)"],
                [A, "L(7/10,1/10)", "L(4/5,2/5)"],
                [B, "L(7/10,0)", "L(4/5,3)"],
                [A, "L(7/10,3/2)", "L(4/5,3)"],
            ],
        ),
    ];
    for (name, shift, terms) in modules {
        let refs: Vec<&[&str]> = terms.iter().map(|x| &x[..]).collect();
        v.push(mk(
            &format!("decomp/sqrt2-a2/{name}"),
            lattice(sqrt2a2.clone(), ri(1), &shift),
            tensor(&refs),
            sa,
            "sqrt2-a2",
        ));
    }
    v.push(mk(
        "decomp/sqrt2-a2/V0-coset",
        lattice(sqrt2a2.clone(), ri(1), &[ri(0), ri(0)]),
        e("sum"),
        sa,
        "sqrt2-a2",
    ));
    v.push(mk(
        "decomp/sqrt2-a2/V1-coset",
        lattice(sqrt2a2, ri(1), &[r(-1, 3), r(1, 3)]),
        e("0101_2000"),
        sa,
        "sqrt2-a2",
    ));
    v
}

fn v1_terms() -> Vec<[&'static str; 3]> {
    vec![
        ["L(1/2,0)", "L(7/10,0)", "L(4/5,2/3)"],
        ["L(1/2,0)", "L(7/10,3/5)", "L(4/5,1/15)"],
        ["L(1/2,1/2)", "L(7/10,1/10)", "L(4/5,1/15)"],
        ["L(1/2,1/2)", "L(7/10,3/2)", "L(4/5,2/3)"],
    ]
}

fn va_terms() -> Vec<[&'static str; 3]> {
    vec![
        ["L(1/2,1/16)", "L(7/10,7/16)", "L(4/5,0)"],
        ["L(1/2,1/16)", "L(7/10,3/80)", "L(4/5,7/5)"],
        ["L(1/2,1/16)", "L(7/10,3/80)", "L(4/5,2/5)"],
        ["L(1/2,1/16)", "L(7/10,7/16)", "L(4/5,3)"],
    ]
}

/// Two 2-dissections of Ramanujan's theta function used in the n = 3 proofs.
pub fn dissection_cases() -> Vec<IdentityCase> {
    let q = |x: ExprNode| x.shifted(ri(1));
    let src = "2-dissections of Ramanujan's theta function";
    vec![
        IdentityCase::new(
            "dissection/phi",
            ExprNode::sum(vec![
                ExprNode::qprod(&[(8, 5), (4, -2), (16, -2)]),
                q(ExprNode::qprod(&[(16, 2), (8, -1)]).scaled(ri(2))),
            ]),
            ExprNode::qprod(&[(2, 5), (1, -2), (4, -2)]),
            ri(20),
            src,
            &["dissection", "theta"],
        ),
        IdentityCase::new(
            "dissection/phi-squared",
            ExprNode::sum(vec![
                ExprNode::qprod(&[(4, 10), (2, -4), (8, -4)]),
                q(ExprNode::qprod(&[(8, 4), (4, -2)]).scaled(ri(4))),
            ]),
            ExprNode::qprod(&[(2, 10), (1, -4), (4, -4)]),
            ri(20),
            src,
            &["dissection", "theta"],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_quotient_node() {
        // η(2τ)/η(τ)² = ∏(1+qⁿ)/(1−qⁿ): overpartition numbers, leading exponent 0
        let s = evaluate(&ExprNode::eta(&[(2, 1), (1, -2)]), &ri(10)).unwrap();
        let want = [1, 2, 4, 8, 14, 24, 40, 64, 100, 154];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(s.coeff(&ri(k as i64)), ri(*w));
        }
        // η(τ)⁻² = q^{-1/12}(1 + 2q + 5q² + 10q³ + …)
        let s = evaluate(&ExprNode::eta(&[(1, -2)]), &ri(10)).unwrap();
        for (k, w) in [1, 2, 5, 10, 20, 36].iter().enumerate() {
            assert_eq!(s.coeff(&(r(-1, 12) + ri(k as i64))), ri(*w));
        }
    }

    #[test]
    fn trivial_nodes() {
        let x = ExprNode::eta(&[(1, -1)]);
        let t = ri(6);
        let z = evaluate(&ExprNode::sum(vec![x.clone(), x.clone().negated()]), &t).unwrap();
        assert!(z.is_zero());
        let one = ExprNode::QProduct { factors: vec![] };
        assert!(evaluate(&one, &t).is_err());
        let shifted = evaluate(&ExprNode::qprod(&[(1, 0)]).shifted(r(-1, 12)), &t);
        // an all-zero exponent list is an empty product
        assert_eq!(shifted.unwrap().leading(), Some((r(-1, 12), ri(1))));
    }

    #[test]
    fn product_precision() {
        // η⁻¹·η = 1 needs the η factor beyond T
        let t = ri(5);
        let p = ExprNode::Product { factors: vec![ExprNode::eta(&[(1, -1)]), ExprNode::eta(&[(1, 1)])] };
        let s = evaluate(&p, &t).unwrap();
        assert_eq!(s.truncate(&t), QSeries::one().truncate(&t));
    }

    #[test]
    fn memo_is_prefix_consistent() {
        let x = ExprNode::eta(&[(3, 2), (1, -1)]);
        let hi = evaluate(&x, &ri(12)).unwrap();
        let lo = evaluate(&x, &ri(5)).unwrap();
        assert!(hi.agrees_to(&lo, &ri(5)));
        assert_eq!(lo.trunc(), Some(ri(5)));
    }

    #[test]
    fn identity_report_and_perturbation() {
        let c = dissection_cases().remove(0);
        let rep = check_identity(&c);
        assert!(rep.pass, "{rep:?}");
        let neg = negative_controls(std::slice::from_ref(&c)).remove(0);
        let rep = check_identity(&neg);
        assert!(!rep.pass);
        let m = rep.first_mismatch.unwrap();
        assert_eq!(m.exponent.0, ri(10));
        assert_eq!(&m.lhs.0 - &m.rhs.0, ri(1));
    }

    #[test]
    fn certificate_note_reports_bound() {
        let c = CertificateSpec { rank: 3, level: 2 };
        let hi = certificate_note(&c, &ri(8), 24);
        assert!(hi.starts_with("certificate-grade"), "{hi}");
        let lo = certificate_note(&c, &ri(1), 1);
        assert!(lo.starts_with("finite check"), "{lo}");
    }

    #[test]
    fn corpus_round_trip() {
        let cases = builtin_corpus();
        let text = corpus_to_string(&cases);
        assert_eq!(parse_corpus(&text).unwrap(), cases);
        assert!(parse_corpus("[{\"id\": 3}]").is_err());
        let mut ids: Vec<&str> = cases.iter().map(|c| c.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), cases.len());
        assert!(cases.iter().all(|c| !c.source.is_empty()));
    }

    #[test]
    fn filters() {
        let fer = builtin_selection(&["fermions".into()]);
        assert!(!fer.is_empty());
        assert!(fer.iter().all(|c| c.tags.iter().any(|t| t == "fermions")));
        let neg = builtin_selection(&["negative-controls".into()]);
        assert_eq!(neg.len(), builtin_corpus().len());
    }

    #[test]
    fn numeric_values() {
        let tau = Complex64::new(0.0, 1.0);
        let z = numeric_eval(&QSeries::exact_zero(), tau, 1e-12).unwrap().0;
        assert_eq!(z, Complex64::new(0.0, 0.0));
        let m = QSeries::monomial(ri(1), r(-1, 24), None);
        let v = numeric_eval(&m, tau, 1e-12).unwrap().0;
        assert!((v.re - (std::f64::consts::PI / 12.0).exp()).abs() < 1e-12);
        // Γ(1/4)/(2π^{3/4})
        let e = evaluate(&ExprNode::eta(&[(1, 1)]), &ri(40)).unwrap();
        let v = numeric_eval(&e, tau, 1e-12).unwrap().0;
        let gamma_quarter = 3.625_609_908_221_908_f64;
        let want = gamma_quarter / (2.0 * std::f64::consts::PI.powf(0.75));
        assert!((v.re - want).abs() < 1e-8, "{v} vs {want}");
        let short = evaluate(&ExprNode::eta(&[(1, -1)]), &ri(1)).unwrap();
        assert!(numeric_eval(&short, Complex64::new(0.0, 0.05), 1e-6).is_err());
    }

    #[test]
    fn eta_transformation() {
        let taus = [Complex64::new(0.0, 0.9), Complex64::new(0.0, 1.3)];
        let rep = eta_s_check(&taus, &ri(60), 1e-6).unwrap();
        assert!(rep.max_rel_err < 1e-10);
    }
}
