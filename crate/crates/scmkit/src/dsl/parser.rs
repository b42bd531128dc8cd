use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::expr::{CmpOp, Expr};
use super::lexer::{lex, Tok, Token};
use crate::error::{Error, ParseError, Result};
use crate::scm::{FiniteScm, GaussianBlock, LinearScm, Model};
use crate::value::{fmt_ratio, parse_ratio, FiniteDomain, Prob, Value};

const RESERVED: [&str; 11] = ["model", "finite", "linear", "var", "noise", "eq", "ind", "table", "Normal", "mean", "cov"];

type Pos = (usize, usize);

fn perr<T>(pos: Pos, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse(ParseError { line: pos.0, col: pos.1, message: message.into() }))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> Pos {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(s) | Tok::Rational(s) | Tok::Decimal(s) => format!("number {s}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T> {
        perr(self.here(), format!("expected {wanted}, found {}", Self::describe(self.peek())))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.unexpected(&format!("'{p}'"))
        }
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn expect_keyword(&mut self, k: &str) -> Result<()> {
        if self.is_keyword(k) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("'{k}'"))
        }
    }

    /// A user-chosen name; reserved words are rejected.
    fn name(&mut self) -> Result<(String, Pos)> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Ident(s) if RESERVED.contains(&s.as_str()) => perr(pos, format!("reserved word {s} used as a name")),
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            _ => self.unexpected("a name"),
        }
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn end_statement(&mut self) -> Result<()> {
        match self.peek() {
            Tok::Newline | Tok::Eof => {
                self.skip_newlines();
                Ok(())
            }
            _ => self.unexpected("end of line"),
        }
    }

    // ---- finite ----

    fn atom_value(&mut self) -> Result<Value> {
        let pos = self.here();
        let neg = self.eat_punct("-");
        match self.bump().tok {
            Tok::Int(s) => {
                let v: i64 = s.parse().or_else(|_| perr(pos, "integer out of range"))?;
                Ok(Value::Int(if neg { -v } else { v }))
            }
            Tok::Str(s) if !neg => Ok(Value::Sym(s)),
            Tok::Decimal(_) => perr(pos, "decimals are not allowed in finite models"),
            Tok::Rational(_) => perr(pos, "domain values must be integers or strings"),
            _ => perr(pos, "expected a domain value"),
        }
    }

    fn domain(&mut self) -> Result<(Vec<Value>, Pos)> {
        let pos = self.here();
        self.expect_punct("{")?;
        let mut vals = Vec::new();
        loop {
            let vpos = self.here();
            let v = self.atom_value()?;
            if vals.contains(&v) {
                return perr(vpos, format!("duplicate domain value {v}"));
            }
            vals.push(v);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct("}")?;
        Ok((vals, pos))
    }

    fn probability(&mut self) -> Result<Prob> {
        let pos = self.here();
        if self.is_punct("-") {
            return perr(pos, "negative probability");
        }
        match self.bump().tok {
            Tok::Int(s) | Tok::Rational(s) => parse_ratio(&s).map_or_else(|| perr(pos, "invalid rational"), Ok),
            Tok::Decimal(_) => perr(pos, "decimals are not allowed in finite models; write p/q"),
            _ => perr(pos, "expected a probability"),
        }
    }

    fn expr(&mut self, refs: &mut Vec<(String, Pos)>) -> Result<Expr> {
        let mut e = self.term(refs)?;
        loop {
            if self.eat_punct("+") {
                e = Expr::Add(Box::new(e), Box::new(self.term(refs)?));
            } else if self.eat_punct("-") {
                e = Expr::Sub(Box::new(e), Box::new(self.term(refs)?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self, refs: &mut Vec<(String, Pos)>) -> Result<Expr> {
        let mut e = self.unary(refs)?;
        while self.eat_punct("*") {
            e = Expr::Mul(Box::new(e), Box::new(self.unary(refs)?));
        }
        Ok(e)
    }

    fn unary(&mut self, refs: &mut Vec<(String, Pos)>) -> Result<Expr> {
        if self.eat_punct("-") {
            return Ok(Expr::Neg(Box::new(self.unary(refs)?)));
        }
        let pos = self.here();
        match self.peek().clone() {
            Tok::Int(s) | Tok::Rational(s) => {
                self.bump();
                parse_ratio(&s).map(Expr::Num).map_or_else(|| perr(pos, "invalid number"), Ok)
            }
            Tok::Decimal(_) => perr(pos, "decimals are not allowed in finite models"),
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Sym(s))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr(refs)?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "ind" => {
                self.bump();
                self.expect_punct("(")?;
                let a = self.expr(refs)?;
                let op = match self.peek() {
                    Tok::Punct("==") => CmpOp::Eq,
                    Tok::Punct("!=") => CmpOp::Ne,
                    Tok::Punct("<") => CmpOp::Lt,
                    Tok::Punct(">") => CmpOp::Gt,
                    _ => return self.unexpected("a comparison (==, !=, <, >)"),
                };
                self.bump();
                let b = self.expr(refs)?;
                self.expect_punct(")")?;
                Ok(Expr::Ind(Box::new(a), op, Box::new(b)))
            }
            Tok::Ident(_) => {
                let (n, pos) = self.name()?;
                refs.push((n.clone(), pos));
                Ok(Expr::Var(n))
            }
            _ => self.unexpected("an expression"),
        }
    }

    fn table(&mut self) -> Result<(Vec<(String, Pos)>, Vec<(Vec<Value>, Value, Pos)>)> {
        self.expect_keyword("table")?;
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.name()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut rows = Vec::new();
        if !self.is_punct("}") {
            loop {
                let pos = self.here();
                self.expect_punct("(")?;
                let mut key = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        key.push(self.atom_value()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                self.expect_punct(":")?;
                let out = self.atom_value()?;
                rows.push((key, out, pos));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("}")?;
        Ok((args, rows))
    }

    fn finite(&mut self) -> Result<FiniteScm> {
        enum Body {
            Expr(Expr, Vec<(String, Pos)>),
            Table(Vec<(String, Pos)>, Vec<(Vec<Value>, Value, Pos)>),
        }
        let mut seen: HashMap<String, Pos> = HashMap::new();
        let mut vars: Vec<(String, Vec<Value>, Pos)> = Vec::new();
        let mut noises: Vec<(String, Vec<Value>, Vec<Prob>, Pos)> = Vec::new();
        let mut eqs: Vec<(String, Pos, Body)> = Vec::new();
        let declare = |seen: &mut HashMap<String, Pos>, n: &str, pos: Pos| -> Result<()> {
            if let Some(p) = seen.get(n) {
                return perr(pos, format!("duplicate name {n} (first declared at {}:{})", p.0, p.1));
            }
            seen.insert(n.to_string(), pos);
            Ok(())
        };
        loop {
            self.skip_newlines();
            let pos = self.here();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(k) if k == "var" => {
                    self.bump();
                    let (n, npos) = self.name()?;
                    declare(&mut seen, &n, npos)?;
                    self.expect_punct(":")?;
                    let (vals, _) = self.domain()?;
                    vars.push((n, vals, npos));
                }
                Tok::Ident(k) if k == "noise" => {
                    self.bump();
                    let (n, npos) = self.name()?;
                    declare(&mut seen, &n, npos)?;
                    self.expect_punct(":")?;
                    let (vals, _) = self.domain()?;
                    self.expect_punct("~")?;
                    self.expect_punct("{")?;
                    let mut probs: Vec<Option<Prob>> = vec![None; vals.len()];
                    loop {
                        let vpos = self.here();
                        let v = self.atom_value()?;
                        let Some(i) = vals.iter().position(|w| *w == v) else {
                            return perr(vpos, format!("{v} is not in the domain of {n}"));
                        };
                        if probs[i].is_some() {
                            return perr(vpos, format!("probability of {v} given twice"));
                        }
                        self.expect_punct(":")?;
                        probs[i] = Some(self.probability()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    self.expect_punct("}")?;
                    let probs: Vec<Prob> = probs.into_iter().map(|p| p.unwrap_or_else(Prob::zero)).collect();
                    let sum = probs.iter().fold(Prob::zero(), |a, p| a + p);
                    if !sum.is_one() {
                        return perr(npos, format!("measure not normalized: {n} sums to {}", fmt_ratio(&sum)));
                    }
                    noises.push((n, vals, probs, npos));
                }
                Tok::Ident(k) if k == "eq" => {
                    self.bump();
                    let (n, npos) = self.name()?;
                    self.expect_punct("=")?;
                    let body = if self.is_keyword("table") {
                        let (args, rows) = self.table()?;
                        Body::Table(args, rows)
                    } else {
                        let mut refs = Vec::new();
                        let e = self.expr(&mut refs)?;
                        Body::Expr(e, refs)
                    };
                    if eqs.iter().any(|(t, _, _)| *t == n) {
                        return perr(npos, format!("duplicate equation for {n}"));
                    }
                    eqs.push((n, npos, body));
                }
                Tok::Ident(k) if k == "model" => return perr(pos, "model header must come first and only once"),
                _ => return self.unexpected("var, noise or eq"),
            }
            self.end_statement()?;
        }

        let domain_of = |n: &str| -> Option<&Vec<Value>> {
            vars.iter().find(|v| v.0 == n).map(|v| &v.1).or_else(|| noises.iter().find(|v| v.0 == n).map(|v| &v.1))
        };
        for (t, tpos, body) in &eqs {
            if !vars.iter().any(|v| v.0 == *t) {
                let what = if noises.iter().any(|v| v.0 == *t) { "equation for noise variable" } else { "undeclared name" };
                return perr(*tpos, format!("{what} {t}"));
            }
            let refs = match body {
                Body::Expr(_, r) => r,
                Body::Table(a, _) => a,
            };
            for (r, rpos) in refs {
                if domain_of(r).is_none() {
                    return perr(*rpos, format!("undeclared name {r}"));
                }
            }
        }
        for (n, _, pos) in &vars {
            if !eqs.iter().any(|e| e.0 == *n) {
                return perr(*pos, format!("no equation for {n}"));
            }
        }

        let mut b = FiniteScm::builder();
        for (n, vals, _) in &vars {
            b = b.endogenous(n, vals.clone());
        }
        for (n, vals, probs, _) in &noises {
            b = b.exogenous(n, vals.iter().cloned().zip(probs.iter().cloned()));
        }
        for (t, tpos, body) in eqs.iter() {
            b = match body {
                Body::Expr(e, _) => b.mechanism_expr(t, e.clone()),
                Body::Table(args, rows) => {
                    let names: Vec<&str> = args.iter().map(|a| a.0.as_str()).collect();
                    for (i, (a, apos)) in args.iter().enumerate() {
                        if args[..i].iter().any(|p| p.0 == *a) {
                            return perr(*apos, format!("duplicate table argument {a}"));
                        }
                    }
                    let doms: Vec<&Vec<Value>> = names.iter().map(|n| domain_of(n).unwrap()).collect();
                    let size: usize = doms.iter().map(|d| d.len()).product();
                    let mut outs: Vec<Option<Value>> = vec![None; size];
                    let target_dom = domain_of(t).unwrap();
                    for (key, out, rpos) in rows {
                        if key.len() != names.len() {
                            return perr(*rpos, format!("table row has {} values, expected {}", key.len(), names.len()));
                        }
                        let mut row = 0;
                        for (v, d) in key.iter().zip(&doms) {
                            let Some(i) = d.iter().position(|w| w == v) else {
                                return perr(*rpos, format!("table key {v} is outside its domain"));
                            };
                            row = row * d.len() + i;
                        }
                        if outs[row].is_some() {
                            return perr(*rpos, "duplicate table row");
                        }
                        if !target_dom.contains(out) {
                            return perr(*rpos, format!("codomain violation: {t} = {out} is not in its domain"));
                        }
                        outs[row] = Some(out.clone());
                    }
                    let Some(outs) = outs.into_iter().collect::<Option<Vec<_>>>() else {
                        return perr(*tpos, format!("table for {t} is not total"));
                    };
                    b.mechanism_table(t, &names, outs)
                }
            };
        }
        b.build().or_else(|e| match e {
            Error::ValueOutOfDomain { var, value } => {
                let pos = eqs.iter().find(|q| q.0 == var).map(|q| q.1).unwrap_or((1, 1));
                let dom = domain_of(&var).map(|d| FiniteDomain::new(d.clone()).map(|d| d.to_string()).unwrap_or_default());
                perr(pos, format!("codomain violation: {var} = {value} is not in {}", dom.unwrap_or_default()))
            }
            other => Err(other),
        })
    }

    // ---- linear ----

    fn real(&mut self) -> Result<f64> {
        let pos = self.here();
        let neg = self.eat_punct("-");
        let v = match self.bump().tok {
            Tok::Int(s) | Tok::Decimal(s) => s.parse::<f64>().or_else(|_| perr(pos, "invalid number"))?,
            Tok::Rational(s) => {
                let r = parse_ratio(&s).map_or_else(|| perr(pos, "invalid rational"), Ok)?;
                rational_to_f64(&r)
            }
            _ => return perr(pos, "expected a number"),
        };
        Ok(if neg { -v } else { v })
    }

    fn reals(&mut self) -> Result<Vec<f64>> {
        self.expect_punct("[")?;
        let mut v = Vec::new();
        if !self.is_punct("]") {
            loop {
                v.push(self.real()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("]")?;
        Ok(v)
    }

    fn normal(&mut self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.expect_keyword("Normal")?;
        self.expect_punct("(")?;
        let out = if self.is_keyword("mean") {
            self.bump();
            self.expect_punct("=")?;
            let mean = self.reals()?;
            self.expect_punct(",")?;
            self.expect_keyword("cov")?;
            self.expect_punct("=")?;
            self.expect_punct("[")?;
            let mut cov = Vec::new();
            loop {
                cov.push(self.reals()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct("]")?;
            (mean, cov)
        } else {
            let m = self.real()?;
            self.expect_punct(",")?;
            let v = self.real()?;
            (vec![m], vec![vec![v]])
        };
        self.expect_punct(")")?;
        Ok(out)
    }

    fn linear(&mut self) -> Result<LinearScm> {
        let mut seen: HashMap<String, Pos> = HashMap::new();
        let mut endo: Vec<String> = Vec::new();
        let mut coords: Vec<String> = Vec::new();
        let mut b = LinearScm::builder();
        let mut eqs: Vec<(String, Pos, Vec<(Option<(String, Pos)>, f64)>)> = Vec::new();
        let declare = |seen: &mut HashMap<String, Pos>, n: &str, pos: Pos| -> Result<()> {
            if let Some(p) = seen.get(n) {
                return perr(pos, format!("duplicate name {n} (first declared at {}:{})", p.0, p.1));
            }
            seen.insert(n.to_string(), pos);
            Ok(())
        };
        loop {
            self.skip_newlines();
            let pos = self.here();
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(k) if k == "var" => {
                    self.bump();
                    loop {
                        let (n, npos) = self.name()?;
                        declare(&mut seen, &n, npos)?;
                        endo.push(n);
                        self.eat_punct(",");
                        if matches!(self.peek(), Tok::Newline | Tok::Eof) {
                            break;
                        }
                    }
                }
                Tok::Ident(k) if k == "noise" => {
                    self.bump();
                    let (n, npos) = self.name()?;
                    declare(&mut seen, &n, npos)?;
                    let mut cs = Vec::new();
                    if self.eat_punct("(") {
                        loop {
                            let (c, cpos) = self.name()?;
                            if c != n {
                                declare(&mut seen, &c, cpos)?;
                            }
                            cs.push(c);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                        self.expect_punct(")")?;
                    } else {
                        cs.push(n.clone());
                    }
                    self.expect_punct(":")?;
                    let (mean, cov) = self.normal()?;
                    let d = cs.len();
                    if mean.len() != d || cov.len() != d || cov.iter().any(|r| r.len() != d) {
                        return perr(npos, format!("Normal parameters of {n} do not match its {d} coordinate(s)"));
                    }
                    let rows: Vec<&[f64]> = cov.iter().map(|r| r.as_slice()).collect();
                    let names: Vec<&str> = cs.iter().map(String::as_str).collect();
                    let block = GaussianBlock::new(&n, &names, &mean, &rows);
                    if let Some(msg) = covariance_problem(&block) {
                        return perr(npos, msg);
                    }
                    coords.extend(cs.iter().cloned());
                    b = b.block(block);
                }
                Tok::Ident(k) if k == "eq" => {
                    self.bump();
                    let (n, npos) = self.name()?;
                    self.expect_punct("=")?;
                    let mut terms = Vec::new();
                    let mut sign = if self.eat_punct("-") { -1.0 } else { 1.0 };
                    loop {
                        let term = if matches!(self.peek(), Tok::Ident(_)) {
                            (Some(self.name()?), sign)
                        } else {
                            let c = self.real()?;
                            if self.eat_punct("*") {
                                (Some(self.name()?), sign * c)
                            } else {
                                (None, sign * c)
                            }
                        };
                        terms.push(term);
                        if self.eat_punct("+") {
                            sign = 1.0;
                        } else if self.eat_punct("-") {
                            sign = -1.0;
                        } else {
                            break;
                        }
                    }
                    if eqs.iter().any(|q| q.0 == n) {
                        return perr(npos, format!("duplicate equation for {n}"));
                    }
                    eqs.push((n, npos, terms));
                }
                Tok::Ident(k) if k == "model" => return perr(pos, "model header must come first and only once"),
                _ => return self.unexpected("var, noise or eq"),
            }
            self.end_statement()?;
        }
        for (t, tpos, terms) in &eqs {
            if !endo.contains(t) {
                return perr(*tpos, format!("undeclared name {t}"));
            }
            for (src, v) in terms {
                match src {
                    Some((s, spos)) => {
                        if !endo.contains(s) && !coords.contains(s) {
                            return perr(*spos, format!("undeclared name {s}"));
                        }
                        b = b.coef(t, s, *v);
                    }
                    None => b = b.intercept(t, *v),
                }
            }
        }
        for n in &endo {
            if !eqs.iter().any(|q| q.0 == *n) {
                return perr(seen[n], format!("no equation for {n}"));
            }
        }
        b.endogenous(&endo).build()
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

fn covariance_problem(b: &GaussianBlock) -> Option<String> {
    let scale = b.cov.amax().max(1.0);
    let tol = crate::scm::DEFAULT_TOLERANCE * scale;
    if (&b.cov - b.cov.transpose()).amax() > tol {
        return Some(format!("covariance of {} is not symmetric", b.name));
    }
    if b.cov.clone().symmetric_eigenvalues().min() < -tol {
        return Some(format!("covariance of {} is not positive semidefinite", b.name));
    }
    None
}

/// Parses a model in the text format.
pub fn parse(src: &str) -> Result<Model> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    p.skip_newlines();
    p.expect_keyword("model")?;
    let family = p.here();
    let m = match p.bump().tok {
        Tok::Ident(s) if s == "finite" => {
            p.end_statement()?;
            Model::Finite(p.finite()?)
        }
        Tok::Ident(s) if s == "linear" => {
            p.end_statement()?;
            Model::Linear(p.linear()?)
        }
        _ => return perr(family, "expected 'finite' or 'linear'"),
    };
    Ok(m)
}
