//! The small expression grammar accepted by `qchar expand`.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := power (('*' | '/') power)*
//! power  := atom ['^' int]
//! atom   := rational | 'q' ['^' rational] | '(' expr ')' | call
//! call   := eta(m) | L(c,h) | sf(alg; Λ; λ) | b(alg; Λ; λ) | ucpf(name)
//!         | lattice(lat; shift) | orbifold(lat; sector; shift)
//!         | coeff(alg; sector) | fermion(sector; copies) | fock(family)
//! ```
//!
//! `alg` is `slN`, `lat` is `AN` optionally followed by `*scale`, shifts are
//! comma separated rationals in lattice coordinates. Division is only allowed
//! by η-products, q-powers and numbers.

use num_traits::{One, Signed, Zero};
use qchar::characters::{FermionSector, Z2Sector};
use qchar::rat::{parse_rat, ri, Rat};
use qchar::ucpf::BasisFamily;
use qchar::verify::ExprNode;
use qchar::RatS;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("parse error at column {col}: {msg}")]
pub struct ParseError {
    pub col: usize,
    pub msg: String,
}

/// One product term: coeff · q^qexp · ∏η(m)^e · ∏ others.
#[derive(Clone, Debug)]
struct Term {
    coeff: Rat,
    qexp: Rat,
    eta: Vec<(Rat, i64)>,
    others: Vec<ExprNode>,
}

impl Term {
    fn number(c: Rat) -> Self {
        Term { coeff: c, qexp: Rat::zero(), eta: vec![], others: vec![] }
    }

    fn node(n: ExprNode) -> Self {
        Term { others: vec![n], ..Term::number(Rat::one()) }
    }

    fn mul(mut self, o: Term) -> Self {
        self.coeff *= o.coeff;
        self.qexp += o.qexp;
        for (m, e) in o.eta {
            match self.eta.iter_mut().find(|(mm, _)| *mm == m) {
                Some(slot) => slot.1 += e,
                None => self.eta.push((m, e)),
            }
        }
        self.eta.retain(|(_, e)| *e != 0);
        self.others.extend(o.others);
        self
    }

    fn invert(self) -> Result<Self, String> {
        if !self.others.is_empty() {
            return Err("division is only supported by eta products, q-powers and numbers".into());
        }
        if self.coeff.is_zero() {
            return Err("division by zero".into());
        }
        Ok(Term {
            coeff: self.coeff.recip(),
            qexp: -self.qexp,
            eta: self.eta.into_iter().map(|(m, e)| (m, -e)).collect(),
            others: vec![],
        })
    }

    fn pow(self, e: i64) -> Result<Self, String> {
        if e < 0 {
            return self.invert()?.pow(-e);
        }
        if e > 0 && self.coeff.is_zero() {
            return Ok(Term::number(Rat::zero()));
        }
        let mut others = Vec::new();
        for _ in 0..e {
            others.extend(self.others.iter().cloned());
        }
        Ok(Term {
            coeff: num_traits::pow(self.coeff, e as usize),
            qexp: self.qexp * ri(e),
            eta: self.eta.into_iter().map(|(m, x)| (m, x * e)).filter(|(_, x)| *x != 0).collect(),
            others,
        })
    }

    fn into_node(self) -> ExprNode {
        if self.coeff.is_zero() {
            return ExprNode::Zero;
        }
        let mut factors = self.others;
        if factors.is_empty() && self.eta.is_empty() {
            // the empty product is the constant 1
            factors.push(ExprNode::Product { factors: vec![] });
        } else if !self.eta.is_empty() {
            factors.insert(0, ExprNode::EtaQuotient { factors: self.eta.into_iter().map(|(m, e)| (RatS(m), e)).collect() });
        }
        let mut node = if factors.len() == 1 { factors.pop().unwrap() } else { ExprNode::Product { factors } };
        if !self.qexp.is_zero() {
            node = node.shifted(self.qexp);
        }
        if !self.coeff.is_one() {
            node = node.scaled(self.coeff);
        }
        node
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

/// Parse an expression into a corpus node.
pub fn parse_expr(src: &str) -> Result<ExprNode, ParseError> {
    let mut p = Parser { src, pos: 0 };
    let node = p.expr()?;
    p.skip_ws();
    if p.pos < src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(node)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { col: self.src[..self.pos].chars().count() + 1, msg: msg.into() }
    }

    fn err_at(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        ParseError { col: self.src[..pos].chars().count() + 1, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut terms = Vec::new();
        let mut sign = if self.eat('-') { -1 } else { 1 };
        loop {
            let mut t = self.term()?;
            if sign < 0 {
                t.coeff = -t.coeff;
            }
            terms.push(t);
            if self.eat('+') {
                sign = 1;
            } else if self.eat('-') {
                sign = -1;
            } else {
                break;
            }
        }
        let mut nodes: Vec<ExprNode> = terms
            .into_iter()
            .map(Term::into_node)
            .filter(|n| *n != ExprNode::Zero)
            .collect();
        Ok(match nodes.len() {
            0 => ExprNode::Zero,
            1 => nodes.pop().unwrap(),
            _ => ExprNode::sum(nodes),
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(self.power()?);
            } else if self.eat('/') {
                let at = self.pos;
                let d = self.power()?.invert().map_err(|m| self.err_at(at, m))?;
                acc = acc.mul(d);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<Term, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let at = self.pos;
            let e = self.integer()?;
            return base.pow(e).map_err(|m| self.err_at(at, m));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let neg = self.eat('-');
        let digits = self.take_while(|c| c.is_ascii_digit());
        if digits.is_empty() {
            return Err(self.err_at(start, "expected an integer"));
        }
        let v: i64 = digits.parse().map_err(|_| self.err_at(start, "integer out of range"))?;
        Ok(if neg { -v } else { v })
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    /// Unsigned rational literal "a" or "a/b" when `b` directly follows the slash.
    fn number(&mut self) -> Result<Rat, ParseError> {
        let start = self.pos;
        let a = self.take_while(|c| c.is_ascii_digit());
        let save = self.pos;
        if self.peek() == Some('/') {
            self.pos += 1;
            let b = self.take_while(|c| c.is_ascii_digit());
            if b.is_empty() {
                self.pos = save;
            } else {
                return parse_rat(&format!("{a}/{b}")).map_err(|e| self.err_at(start, e.to_string()));
            }
        }
        parse_rat(a).map_err(|e| self.err_at(start, e.to_string()))
    }

    /// Exponent of q: an integer, a bracketed rational or "(a/b)".
    fn q_exponent(&mut self) -> Result<Rat, ParseError> {
        self.skip_ws();
        if self.eat('(') {
            self.skip_ws();
            let neg = self.eat('-');
            self.skip_ws();
            let v = self.number()?;
            if !self.eat(')') {
                return Err(self.err("expected ')'"));
            }
            return Ok(if neg { -v } else { v });
        }
        Ok(ri(self.integer()?))
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(match inner {
                    ExprNode::Zero => Term::number(Rat::zero()),
                    n => Term::node(n),
                })
            }
            Some(c) if c.is_ascii_digit() => Ok(Term::number(self.number()?)),
            Some(c) if c.is_alphabetic() => {
                let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if name == "q" {
                    let save = self.pos;
                    if self.eat('^') {
                        let e = self.q_exponent()?;
                        return Ok(Term { qexp: e, ..Term::number(Rat::one()) });
                    }
                    self.pos = save;
                    return Ok(Term { qexp: Rat::one(), ..Term::number(Rat::one()) });
                }
                self.skip_ws();
                if self.peek() != Some('(') {
                    return Err(self.err_at(start, format!("unknown symbol '{name}'")));
                }
                self.pos += 1;
                let args_start = self.pos;
                let args = self.raw_args()?;
                call(name, &args).map_err(|m| self.err_at(args_start, m))
            }
            Some(c) => Err(self.err(format!("unexpected character '{c}'"))),
        }
    }

    /// Raw text up to the matching ')', split on top-level ';'.
    fn raw_args(&mut self) -> Result<Vec<String>, ParseError> {
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(c) = self.peek() {
            match c {
                '(' | '[' => depth += 1,
                ']' => depth = depth.saturating_sub(1),
                ')' if depth == 0 => {
                    let body = &self.src[start..self.pos];
                    self.pos += 1;
                    return Ok(split_top(body));
                }
                ')' => depth -= 1,
                _ => {}
            }
            self.pos += c.len_utf8();
        }
        Err(self.err("unclosed '('"))
    }
}

fn split_top(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ';' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur.trim().to_string());
    out
}

fn want(args: &[String], n: usize, name: &str) -> Result<(), String> {
    if args.len() != n {
        return Err(format!("{name} takes {n} argument(s), got {}", args.len()));
    }
    Ok(())
}

fn rat(s: &str) -> Result<Rat, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

/// "sl3" ↦ 2.
fn algebra_rank(s: &str) -> Result<usize, String> {
    s.strip_prefix("sl")
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 2)
        .map(|n| n - 1)
        .ok_or_else(|| format!("unknown algebra '{s}' (expected slN)"))
}

/// "A2" or "A2*1/2" ↦ (Cartan matrix, scale).
fn lattice_name(s: &str) -> Result<(Vec<Vec<i64>>, Rat), String> {
    let (base, scale) = match s.split_once('*') {
        Some((b, sc)) => (b.trim(), rat(sc)?),
        None => (s.trim(), Rat::one()),
    };
    if !scale.is_positive() {
        return Err(format!("lattice scale must be positive, got {scale}"));
    }
    let n: usize = base
        .strip_prefix('A')
        .and_then(|n| n.parse().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("unknown lattice '{base}' (expected AN)"))?;
    let gram = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 2 } else if i.abs_diff(j) == 1 { -1 } else { 0 }).collect())
        .collect();
    Ok((gram, scale))
}

fn shift_vec(s: &str, rank: usize) -> Result<Vec<RatS>, String> {
    if s.is_empty() {
        return Ok(vec![RatS(Rat::zero()); rank]);
    }
    let v: Vec<RatS> = s.split(',').map(|x| rat(x).map(RatS)).collect::<Result<_, _>>()?;
    if v.len() != rank {
        return Err(format!("shift has {} entries, lattice rank is {rank}", v.len()));
    }
    Ok(v)
}

fn call(name: &str, args: &[String]) -> Result<Term, String> {
    let node = match name {
        "eta" => {
            want(args, 1, name)?;
            let m = rat(&args[0])?;
            if !m.is_positive() {
                return Err("eta multiplier must be positive".into());
            }
            return Ok(Term { eta: vec![(m, 1)], ..Term::number(Rat::one()) });
        }
        "L" => {
            // commas instead of semicolons
            let inner = args.join(";");
            let module = format!("L({inner})").replace(';', ",");
            module.parse::<qchar::characters::MinimalModule>().map_err(|e| e.to_string())?;
            ExprNode::MinimalChar { module }
        }
        "sf" | "b" => {
            want(args, 3, name)?;
            let n = algebra_rank(&args[0])?;
            let check = |w: &str| -> Result<(), String> {
                let a = qchar::affine::AffineWeight::parse(w).map_err(|e| e.to_string())?;
                if a.rank() != n {
                    return Err(format!("weight {w} does not have {} labels", n + 1));
                }
                Ok(())
            };
            check(&args[1])?;
            check(&args[2])?;
            if name == "sf" {
                ExprNode::string_fn(n, &args[1], &args[2])
            } else {
                ExprNode::coset(n, &args[1], &args[2])
            }
        }
        "ucpf" => {
            want(args, 1, name)?;
            let a = args[0].as_str();
            match a.parse::<BasisFamily>() {
                Ok(f) => ExprNode::family_ucpf(f),
                Err(_) => {
                    qchar::ucpf::g_matrix(a).map_err(|e| e.to_string())?;
                    ExprNode::ucpf(a, &[], &[], Rat::zero())
                }
            }
        }
        "fock" => {
            want(args, 1, name)?;
            ExprNode::FockCount { family: args[0].parse().map_err(|e: qchar::QError| e.to_string())? }
        }
        "lattice" => {
            if args.is_empty() || args.len() > 2 {
                return Err("lattice takes (lat) or (lat; shift)".into());
            }
            let (gram, scale) = lattice_name(&args[0])?;
            let shift = shift_vec(args.get(1).map_or("", |s| s.as_str()), gram.len())?;
            ExprNode::LatticeChar { gram, scale: RatS(scale), shift }
        }
        "orbifold" => {
            if args.len() < 2 || args.len() > 3 {
                return Err("orbifold takes (lat; sector) or (lat; sector; shift)".into());
            }
            let (gram, scale) = lattice_name(&args[0])?;
            let sector: Z2Sector = args[1].parse().map_err(|e: qchar::QError| e.to_string())?;
            let shift = shift_vec(args.get(2).map_or("", |s| s.as_str()), gram.len())?;
            ExprNode::OrbifoldChar { gram, scale: RatS(scale), shift, sector }
        }
        "coeff" => {
            want(args, 2, name)?;
            let n = algebra_rank(&args[0])?;
            let sector: FermionSector = args[1].parse().map_err(|e: qchar::QError| e.to_string())?;
            ExprNode::MultiCoeffExtract { n, sector, target: None }
        }
        "fermion" => {
            want(args, 2, name)?;
            let sector: FermionSector = args[0].parse().map_err(|e: qchar::QError| e.to_string())?;
            let copies: i64 = args[1].trim().parse().map_err(|_| format!("bad copy count '{}'", args[1]))?;
            ExprNode::FermionChar { sector, copies }
        }
        other => return Err(format!("unknown function '{other}'")),
    };
    Ok(Term::node(node))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qchar::rat::r;
    use qchar::verify::evaluate;

    fn eval(s: &str, t: i64) -> qchar::qseries::QSeries {
        evaluate(&parse_expr(s).unwrap(), &ri(t)).unwrap()
    }

    #[test]
    fn eta_quotients_fold() {
        assert_eq!(parse_expr("eta(2)/eta(1)^2").unwrap(), ExprNode::eta(&[(2, 1), (1, -2)]));
        assert_eq!(parse_expr("eta(1)*eta(1)^-1").unwrap(), ExprNode::Product { factors: vec![] });
    }

    #[test]
    fn zero_and_constants() {
        assert_eq!(parse_expr("0").unwrap(), ExprNode::Zero);
        assert_eq!(parse_expr("eta(1) - eta(1)").map(|n| eval_node(&n)).unwrap(), "0 + O(q^5)");
        assert_eq!(eval("3/2", 3).to_string(), "3/2 + O(q^3)");
    }

    fn eval_node(n: &ExprNode) -> String {
        evaluate(n, &ri(5)).unwrap().to_string()
    }

    #[test]
    fn q_powers_and_sums() {
        let s = eval("q^(-1/24)*eta(1) + 2*q", 3);
        // (q)_∞ = 1 − q − q² + …, plus 2q
        assert_eq!(s.coeff(&ri(0)), ri(1));
        assert_eq!(s.coeff(&ri(1)), ri(1));
        assert_eq!(s.coeff(&ri(2)), ri(-1));
        let t = eval("q^(-1/2) * q^(1/2)", 2);
        assert_eq!(t.coeff(&ri(0)), ri(1));
    }

    #[test]
    fn calls() {
        assert!(matches!(parse_expr("L(7/10,3/80)").unwrap(), ExprNode::MinimalChar { .. }));
        assert!(matches!(parse_expr("sf(sl2; [1,1]; [1,1])").unwrap(), ExprNode::StringFn { n: 1, .. }));
        assert!(matches!(parse_expr("ucpf(G3)").unwrap(), ExprNode::UcpfSum { .. }));
        assert!(matches!(parse_expr("ucpf(sl3-twisted)").unwrap(), ExprNode::UcpfSum { .. }));
        assert!(matches!(parse_expr("orbifold(A2*1/2; +-; 0,0)").unwrap(), ExprNode::OrbifoldChar { .. }));
        assert!(matches!(parse_expr("lattice(A1*2; 1/4)").unwrap(), ExprNode::LatticeChar { .. }));
        assert!(matches!(parse_expr("coeff(sl3; R)").unwrap(), ExprNode::MultiCoeffExtract { n: 2, .. }));
        let s = parse_expr("lattice(A1*2; 1/4)").unwrap();
        if let ExprNode::LatticeChar { scale, shift, .. } = s {
            assert_eq!(scale.0, ri(2));
            assert_eq!(shift[0].0, r(1, 4));
        }
    }

    #[test]
    fn string_function_matches_eta_quotient() {
        let a = eval("q^(-1/24) * sf(sl2; [1,1]; [1,1])", 10);
        let b = eval("q^(-1/24) * eta(2)/eta(1)^2", 10);
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn errors_carry_columns() {
        let e = parse_expr("eta(2) + foo").unwrap_err();
        assert_eq!(e.col, 10);
        let e = parse_expr("eta(1) / L(1/2,0)").unwrap_err();
        assert!(e.msg.contains("division"), "{e}");
        assert!(parse_expr("eta(1").is_err());
        assert!(parse_expr("sf(sl3; [1,1]; [1,1])").is_err());
        assert_eq!(parse_expr("1 )").unwrap_err().col, 3);
        assert!(parse_expr("").is_err());
    }
}
