//! Expression parser for coefficients and differential polynomials.
//!
//! Grammar: rational constants, bound parameters, field variables `u1, u2, …`,
//! jets `u1_x`, `u1_xx`, `u1_3`, `log(u1_x)`, declared generators and function
//! symbols (`f`, `f'`, `f[u2]`), `exp(·)`, `sqrt(·)`, `root(·, q)`, the binary
//! operators `+ - * /`, integer powers `^n` and parentheses.

use crate::coefffield::{CoeffExpr, Field, FieldError};
use crate::jetspace::{JetMono, JetPoly, MAX_JET_ORDER};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { pos: usize, name: String },
    #[error("at {pos}: {source}")]
    Field { pos: usize, source: FieldError },
    #[error("expression depends on jets")]
    NotJetFree,
}

/// Names visible to the parser.
#[derive(Clone, Debug)]
pub struct Scope {
    pub nvars: usize,
    pub bindings: BTreeMap<String, CoeffExpr>,
    pub field: Option<Field>,
}

impl Default for Scope {
    fn default() -> Scope {
        Scope::new(2)
    }
}

impl Scope {
    pub fn new(nvars: usize) -> Scope {
        Scope { nvars, bindings: BTreeMap::new(), field: None }
    }

    /// Scope over a session: its variables, parameters, generators and functions.
    pub fn of_field(field: &Field) -> Scope {
        let mut s = Scope::new(field.nvars());
        for (name, &a) in field.params() {
            s.bindings.insert(name.clone(), CoeffExpr::atom(a));
        }
        for name in field.generator_names() {
            if let Some(g) = field.generator(name) {
                s.bindings.insert(name.clone(), g);
            }
        }
        s.field = Some(field.clone());
        s
    }

    pub fn bind(mut self, name: &str, value: CoeffExpr) -> Scope {
        self.bindings.insert(name.to_string(), value);
        self
    }

    fn invert(&self, c: &CoeffExpr, pos: usize) -> Result<CoeffExpr, ParseError> {
        let r = match &self.field {
            Some(f) => f.inv(c),
            None => c.try_inverse_structural(),
        };
        r.map_err(|source| ParseError::Field { pos, source })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(i64),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let ch = cs[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let t: String = cs[st..i].iter().collect();
            let v = t.parse::<i64>().map_err(|_| ParseError::Syntax { pos: st, msg: "integer literal too large".into() })?;
            out.push((st, Tok::Num(v)));
        } else if ch.is_alphabetic() || ch == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_' || cs[i] == '\'') {
                i += 1;
            }
            if i < cs.len() && cs[i] == '[' {
                while i < cs.len() && cs[i] != ']' {
                    i += 1;
                }
                if i == cs.len() {
                    return Err(ParseError::Syntax { pos: st, msg: "unclosed `[`".into() });
                }
                i += 1;
            }
            out.push((st, Tok::Ident(cs[st..i].iter().collect())));
        } else if "+-*/^(),".contains(ch) {
            out.push((i, Tok::Op(ch)));
            i += 1;
        } else if ch == '−' {
            out.push((i, Tok::Op('-')));
            i += 1;
        } else {
            return Err(ParseError::Syntax { pos: i, msg: format!("unexpected character `{}`", ch) });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    scope: &'a Scope,
}

fn jet_ident(name: &str, nvars: usize) -> Option<(usize, u32)> {
    let rest = name.strip_prefix('u')?;
    let (num, suffix) = match rest.find('_') {
        Some(p) => (&rest[..p], Some(&rest[p + 1..])),
        None => (rest, None),
    };
    let comp: usize = num.parse().ok()?;
    if comp == 0 || comp > nvars {
        return None;
    }
    let order = match suffix {
        None => 0,
        Some(s) if !s.is_empty() && s.chars().all(|c| c == 'x') => s.len() as u32,
        Some(s) => s.parse().ok()?,
    };
    Some((comp - 1, order))
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::Syntax { pos: self.pos(), msg: format!("expected `{}`", c) })
        }
    }

    fn expr(&mut self) -> Result<JetPoly, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<JetPoly, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.peek() == Some(&Tok::Op('/')) {
                let pos = self.pos();
                self.at += 1;
                let d = self.unary()?;
                acc = acc.mul(&self.inverse(&d, pos)?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<JetPoly, ParseError> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<JetPoly, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let paren = self.eat('(');
        let neg = self.eat('-');
        let e = match self.peek() {
            Some(Tok::Num(v)) => *v,
            _ => return Err(ParseError::Syntax { pos: self.pos(), msg: "expected integer exponent".into() }),
        };
        self.at += 1;
        if paren {
            self.expect(')')?;
        }
        let e = u32::try_from(e).map_err(|_| ParseError::Syntax { pos, msg: "exponent too large".into() })?;
        let p = base.pow(e);
        if neg {
            self.inverse(&p, pos)
        } else {
            Ok(p)
        }
    }

    fn inverse(&self, d: &JetPoly, pos: usize) -> Result<JetPoly, ParseError> {
        if d.is_zero() {
            return Err(ParseError::Field { pos, source: FieldError::DivisionByZero });
        }
        if let Some(c) = d.as_coeff() {
            return Ok(JetPoly::constant(self.scope.invert(&c, pos)?));
        }
        let terms: Vec<_> = d.terms().collect();
        if terms.len() == 1 {
            let (m, c) = terms[0];
            if m.iter().all(|&(v, _)| crate::jetspace::var_order(v) == Some(1)) {
                let inv: JetMono = m.iter().map(|&(v, e)| (v, -e)).collect();
                return Ok(JetPoly::monomial(inv, self.scope.invert(c, pos)?));
            }
        }
        Err(ParseError::Syntax { pos, msg: "division by a polynomial in jets".into() })
    }

    fn args(&mut self) -> Result<Vec<JetPoly>, ParseError> {
        self.expect('(')?;
        let mut v = vec![self.expr()?];
        while self.eat(',') {
            v.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(v)
    }

    fn coeff_arg(&self, p: &JetPoly, pos: usize) -> Result<CoeffExpr, ParseError> {
        p.as_coeff().ok_or(ParseError::Syntax { pos, msg: "argument depends on jets".into() })
    }

    fn atom(&mut self) -> Result<JetPoly, ParseError> {
        let pos = self.pos();
        let tok = self.peek().cloned().ok_or(ParseError::Syntax { pos, msg: "unexpected end of input".into() })?;
        self.at += 1;
        match tok {
            Tok::Num(v) => Ok(JetPoly::constant(CoeffExpr::int(v))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(ParseError::Syntax { pos, msg: format!("unexpected `{}`", c) }),
            Tok::Ident(name) => self.ident(&name, pos),
        }
    }

    fn ident(&mut self, name: &str, pos: usize) -> Result<JetPoly, ParseError> {
        let call = self.peek() == Some(&Tok::Op('('));
        match name {
            "exp" | "sqrt" | "root" | "log" if call => {
                let a = self.args()?;
                return self.builtin(name, &a, pos);
            }
            _ => {}
        }
        if let Some(v) = self.scope.bindings.get(name) {
            return Ok(JetPoly::constant(v.clone()));
        }
        if let Some((comp, order)) = jet_ident(name, self.scope.nvars) {
            if order > MAX_JET_ORDER {
                return Err(ParseError::Syntax { pos, msg: "jet order too large".into() });
            }
            return Ok(if order == 0 { JetPoly::constant(CoeffExpr::var(comp)) } else { JetPoly::jet(comp, order) });
        }
        if let Some(f) = self.function(name) {
            return Ok(JetPoly::constant(f));
        }
        Err(ParseError::UnknownSymbol { pos, name: name.to_string() })
    }

    fn function(&self, name: &str) -> Option<CoeffExpr> {
        let field = self.scope.field.as_ref()?;
        let (head, var) = match name.find('[') {
            Some(p) => {
                let inner = name[p + 1..].strip_suffix(']')?;
                let (c, o) = jet_ident(inner, self.scope.nvars)?;
                if o != 0 {
                    return None;
                }
                (&name[..p], Some(c))
            }
            None => (name, None),
        };
        let base = head.trim_end_matches('\'');
        let order = (head.len() - base.len()) as u32;
        let declared = field.function_var(base)?;
        Some(CoeffExpr::func(base, var.unwrap_or(declared), order))
    }

    fn builtin(&self, name: &str, a: &[JetPoly], pos: usize) -> Result<JetPoly, ParseError> {
        let arity = if name == "root" { 2 } else { 1 };
        if a.len() != arity {
            return Err(ParseError::Syntax { pos, msg: format!("`{}` takes {} argument(s)", name, arity) });
        }
        let fe = |source| ParseError::Field { pos, source };
        if name == "log" {
            let t: Vec<_> = a[0].terms().collect();
            if t.len() == 1 && t[0].1.is_one() && t[0].0.len() == 1 && t[0].0[0].1 == 1 && crate::jetspace::var_order(t[0].0[0].0) == Some(1) {
                return Ok(JetPoly::log_ux(crate::jetspace::var_comp(t[0].0[0].0)));
            }
            return Err(ParseError::Syntax { pos, msg: "`log` takes a first-order jet".into() });
        }
        let x = self.coeff_arg(&a[0], pos)?;
        let v = match name {
            "exp" => CoeffExpr::exp(&x),
            "sqrt" => {
                self.scope.invert(&x, pos)?;
                CoeffExpr::sqrt(&x).map_err(fe)?
            }
            _ => {
                let q = self.coeff_arg(&a[1], pos)?.as_constant().and_then(|q| q.as_i64()).filter(|&q| (2..=64).contains(&q));
                let q = q.ok_or(ParseError::Syntax { pos, msg: "root index must be an integer in 2..=64".into() })?;
                self.scope.invert(&x, pos)?;
                CoeffExpr::power_frac(&x, 1, q as u32).map_err(fe)?
            }
        };
        Ok(JetPoly::constant(v))
    }
}

/// Parses a differential polynomial.
pub fn parse_jet(text: &str, scope: &Scope) -> Result<JetPoly, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.chars().count(), scope };
    let e = p.expr()?;
    if p.at < p.toks.len() {
        return Err(ParseError::Syntax { pos: p.pos(), msg: "trailing input".into() });
    }
    Ok(e)
}

/// Parses a jet-free coefficient.
pub fn parse_expression(text: &str, scope: &Scope) -> Result<CoeffExpr, ParseError> {
    parse_jet(text, scope)?.as_coeff().ok_or(ParseError::NotJetFree)
}
