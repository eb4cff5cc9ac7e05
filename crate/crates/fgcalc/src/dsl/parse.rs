use super::DslError;
use crate::coeff::{PolyInN, RationalInN};
use crate::tensor::{Contraction, Factor, FactorKind, ScalarName, SlotRole};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(char),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, DslError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let bytes: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = bytes[i..j].iter().collect();
                let v = s.parse::<i64>().map_err(|_| DslError::ParseError {
                    line: li + 1,
                    col,
                    msg: format!("integer literal `{s}` out of range"),
                })?;
                out.push(Spanned { tok: Tok::Int(v), line: li + 1, col });
                i = j;
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_alphanumeric() || bytes[j] == '_') {
                    j += 1;
                }
                let s: String = bytes[i..j].iter().collect();
                out.push(Spanned { tok: Tok::Ident(s), line: li + 1, col });
                i = j;
                continue;
            }
            if "()[],*+-/^".contains(c) {
                out.push(Spanned { tok: Tok::Punct(c), line: li + 1, col });
                i += 1;
                continue;
            }
            return Err(DslError::ParseError {
                line: li + 1,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
        out.push(Spanned { tok: Tok::Punct('\n'), line: li + 1, col: bytes.len() + 1 });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: &str) -> Result<T, DslError> {
        let (line, col) = self
            .peek()
            .map(|s| (s.line, s.col))
            .unwrap_or((self.toks.last().map(|s| s.line).unwrap_or(1), 1));
        Err(DslError::ParseError { line, col, msg: msg.to_string() })
    }

    fn eat_punct(&mut self, c: char) -> Result<(), DslError> {
        match self.peek() {
            Some(Spanned { tok: Tok::Punct(p), .. }) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(&format!("expected `{c}`")),
        }
    }

    fn at_punct(&self, c: char) -> bool {
        matches!(self.peek(), Some(Spanned { tok: Tok::Punct(p), .. }) if *p == c)
    }

    fn skip_newlines(&mut self) {
        while self.at_punct('\n') {
            self.pos += 1;
        }
    }

    // ---- coefficient expressions -------------------------------------

    fn coeff_expr(&mut self) -> Result<RationalInN, DslError> {
        let mut acc = self.coeff_term()?;
        loop {
            if self.at_punct('+') {
                self.pos += 1;
                acc = acc + self.coeff_term()?;
            } else if self.at_punct('-') {
                self.pos += 1;
                acc = acc - self.coeff_term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn coeff_term(&mut self) -> Result<RationalInN, DslError> {
        let mut acc = self.coeff_factor()?;
        loop {
            if self.at_punct('*') {
                // a `*` only continues the coefficient if what follows can
                // start a coefficient factor
                if let Some(s) = self.toks.get(self.pos + 1) {
                    let starts = matches!(
                        &s.tok,
                        Tok::Int(_) | Tok::Punct('(') | Tok::Punct('-')
                    ) || matches!(&s.tok, Tok::Ident(id) if id == "n");
                    if !starts {
                        return Ok(acc);
                    }
                }
                self.pos += 1;
                acc = acc * self.coeff_factor()?;
            } else if self.at_punct('/') {
                self.pos += 1;
                let d = self.coeff_factor()?;
                acc = acc
                    .checked_div(&d)
                    .map_err(|e| DslError::ParseError {
                        line: 0,
                        col: 0,
                        msg: e.to_string(),
                    })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn coeff_factor(&mut self) -> Result<RationalInN, DslError> {
        let mut neg = false;
        while self.at_punct('-') {
            neg = !neg;
            self.pos += 1;
        }
        let base = match self.peek().cloned() {
            Some(Spanned { tok: Tok::Int(v), .. }) => {
                self.pos += 1;
                RationalInN::int(v)
            }
            Some(Spanned { tok: Tok::Ident(id), .. }) if id == "n" => {
                self.pos += 1;
                RationalInN::n()
            }
            Some(Spanned { tok: Tok::Punct('('), .. }) => {
                self.pos += 1;
                let inner = self.coeff_expr()?;
                self.eat_punct(')')?;
                inner
            }
            _ => return self.err("expected a coefficient"),
        };
        let base = if self.at_punct('^') {
            self.pos += 1;
            match self.next() {
                Some(Spanned { tok: Tok::Int(e), .. }) if e >= 0 => {
                    let mut acc = RationalInN::one();
                    for _ in 0..e {
                        acc = acc * base.clone();
                    }
                    acc
                }
                _ => return self.err("expected a nonnegative integer exponent"),
            }
        } else {
            base
        };
        Ok(if neg { -base } else { base })
    }

    // ---- factors ------------------------------------------------------

    fn label_list(&mut self, close: char) -> Result<Vec<String>, DslError> {
        let mut labels = Vec::new();
        if self.at_punct(close) {
            self.pos += 1;
            return Ok(labels);
        }
        loop {
            match self.next() {
                Some(Spanned { tok: Tok::Ident(s), .. }) => labels.push(s),
                Some(Spanned { tok: Tok::Int(v), .. }) => labels.push(v.to_string()),
                _ => return self.err("expected an index label"),
            }
            if self.at_punct(',') {
                self.pos += 1;
                continue;
            }
            self.eat_punct(close)?;
            return Ok(labels);
        }
    }

    fn factor(&mut self) -> Result<ParsedFactor, DslError> {
        let mut derivs = Vec::new();
        if let Some(Spanned { tok: Tok::Ident(id), .. }) = self.peek() {
            if id == "d" {
                self.pos += 1;
                self.eat_punct('(')?;
                derivs = self.label_list(')')?;
            }
        }
        let (name, line, col) = match self.next() {
            Some(Spanned { tok: Tok::Ident(s), line, col }) => (s, line, col),
            _ => return self.err("expected a factor kind"),
        };
        let kind = match name.as_str() {
            "R" => FactorKind::Riemann,
            "W" => FactorKind::Weyl,
            "Ric" => FactorKind::Ricci,
            "Scal" => FactorKind::ScalarCurv,
            "P" => FactorKind::Schouten,
            "g" => FactorKind::Metric,
            "ginv" => FactorKind::InverseMetric,
            "phi" => FactorKind::ScalarField(ScalarName::Phi),
            "ups" => FactorKind::ScalarField(ScalarName::Upsilon),
            "AmbR" => FactorKind::AmbientRiemann,
            s if s.starts_with("Om") => {
                let k = s[2..].parse::<u8>().map_err(|_| DslError::ParseError {
                    line,
                    col,
                    msg: format!("unknown factor kind `{s}`"),
                })?;
                FactorKind::ScalarField(ScalarName::Omega(k))
            }
            s => {
                return Err(DslError::ParseError {
                    line,
                    col,
                    msg: format!("unknown factor kind `{s}`"),
                })
            }
        };
        self.eat_punct('[')?;
        let intr = self.label_list(']')?;
        if intr.len() != kind.intrinsic_rank() {
            return Err(DslError::ArityError {
                kind: name,
                expected: kind.intrinsic_rank(),
                got: intr.len(),
                line,
                col,
            });
        }
        Ok(ParsedFactor { kind, derivs, intrinsics: intr })
    }

    /// Parses one term (through end-of-line). Returns None at end of input.
    fn term(&mut self) -> Result<Option<(RationalInN, Contraction)>, DslError> {
        self.skip_newlines();
        if self.peek().is_none() {
            return Ok(None);
        }
        // optional coefficient
        let mut coeff = RationalInN::one();
        if let Some(s) = self.peek() {
            let starts_coeff = matches!(&s.tok, Tok::Int(_) | Tok::Punct('(') | Tok::Punct('-'))
                || matches!(&s.tok, Tok::Ident(id) if id == "n");
            if starts_coeff {
                coeff = self.coeff_expr()?;
                if self.at_punct('*') {
                    self.pos += 1;
                }
            }
        }
        let mut factors = Vec::new();
        let mut declared_free: Vec<String> = Vec::new();
        loop {
            if let Some(Spanned { tok: Tok::Ident(id), .. }) = self.peek() {
                if id == "free" {
                    self.pos += 1;
                    self.eat_punct('(')?;
                    declared_free = self.label_list(')')?;
                    break;
                }
            }
            factors.push(self.factor()?);
            if self.at_punct('*') {
                self.pos += 1;
                continue;
            }
            if let Some(Spanned { tok: Tok::Ident(id), .. }) = self.peek() {
                if id == "free" {
                    continue;
                }
            }
            break;
        }
        if self.peek().is_some() && !self.at_punct('\n') {
            return self.err("expected `*`, `free(...)` or end of line");
        }
        let contraction = assemble(factors, declared_free)?;
        Ok(Some((coeff, contraction)))
    }
}

struct ParsedFactor {
    kind: FactorKind,
    derivs: Vec<String>,
    intrinsics: Vec<String>,
}

fn assemble(factors: Vec<ParsedFactor>, declared_free: Vec<String>) -> Result<Contraction, DslError> {
    // count label occurrences
    let mut occurrences: BTreeMap<String, usize> = BTreeMap::new();
    for f in &factors {
        for l in f.derivs.iter().chain(f.intrinsics.iter()) {
            if l == "_0" || l == "_inf" {
                continue;
            }
            *occurrences.entry(l.clone()).or_insert(0) += 1;
        }
    }
    for (l, c) in &occurrences {
        let declared = declared_free.contains(l);
        if declared && *c != 1 {
            return Err(DslError::FreeLabelMisuse(l.clone(), *c));
        }
        if !declared && *c != 2 {
            return Err(DslError::TripleLabel(l.clone(), *c));
        }
    }
    for l in &declared_free {
        if !occurrences.contains_key(l) {
            return Err(DslError::FreeLabelMisuse(l.clone(), 0));
        }
    }
    let mut pair_ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut next_pair = 0u32;
    let mut role = |label: &str| -> SlotRole {
        if label == "_0" {
            return SlotRole::FixedZero;
        }
        if label == "_inf" {
            return SlotRole::FixedInfinity;
        }
        if let Some(i) = declared_free.iter().position(|f| f == label) {
            return SlotRole::Free(i as u32);
        }
        let id = *pair_ids.entry(label.to_string()).or_insert_with(|| {
            let id = next_pair;
            next_pair += 1;
            id
        });
        SlotRole::Paired(id)
    };
    let mut out = Vec::with_capacity(factors.len());
    for f in factors {
        let deriv_order = f.derivs.len();
        let mut slots: Vec<SlotRole> = f.derivs.iter().map(|l| role(l)).collect();
        slots.extend(f.intrinsics.iter().map(|l| role(l)));
        out.push(Factor::new(f.kind, deriv_order, slots));
    }
    Ok(Contraction::new(out, declared_free))
}

/// Parses a single contraction (exactly one term, coefficient must be 1).
pub fn parse_contraction(text: &str) -> Result<Contraction, DslError> {
    let (coeff, c) = parse_term(text)?;
    if !coeff.is_one() {
        return Err(DslError::ParseError {
            line: 1,
            col: 1,
            msg: "expected a bare contraction without a coefficient".into(),
        });
    }
    Ok(c)
}

/// Parses a single term `coeff * contraction`.
pub fn parse_term(text: &str) -> Result<(RationalInN, Contraction), DslError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let t = p.term()?;
    p.skip_newlines();
    if p.peek().is_some() {
        return p.err("expected a single term");
    }
    t.ok_or_else(|| DslError::ParseError { line: 1, col: 1, msg: "empty input".into() })
}

/// Parses a multi-line expression: a list of terms.
pub fn parse_lincomb(text: &str) -> Result<Vec<(RationalInN, Contraction)>, DslError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut out = Vec::new();
    while let Some(t) = p.term()? {
        out.push(t);
    }
    Ok(out)
}

/// Parses a standalone rational function of n.
pub fn parse_coeff(text: &str) -> Result<RationalInN, DslError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let c = p.coeff_expr()?;
    p.skip_newlines();
    if p.peek().is_some() {
        return p.err("trailing input after coefficient");
    }
    Ok(c)
}

#[allow(dead_code)]
fn poly_unused(_p: PolyInN) {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_weyl_square() {
        let c = parse_contraction("W[i,j,k,l] * W[i,j,k,l]").unwrap();
        assert_eq!(c.factors.len(), 2);
        assert!(c.is_complete());
        c.validate().unwrap();
    }

    #[test]
    fn parses_derivative_prefix() {
        let c = parse_contraction("d(l) W[i,j,k,l] * d(m) W[i,j,k,m]").unwrap();
        c.validate().unwrap();
        assert_eq!(c.delta_count().0, 2);
    }

    #[test]
    fn parses_ambient_fixed_values() {
        let c = parse_contraction("AmbR[_inf,j,k,l] * AmbR[_0,j,k,l]").unwrap();
        assert_eq!(c.factors[0].slots[0], SlotRole::FixedInfinity);
        assert_eq!(c.factors[1].slots[0], SlotRole::FixedZero);
    }

    #[test]
    fn free_labels_must_be_declared() {
        let e = parse_contraction("d(l) W[i,j,k,l]").unwrap_err();
        assert!(matches!(e, DslError::TripleLabel(_, 1)));
        let c = parse_contraction("d(l) W[i,j,k,l] free(i,j,k)").unwrap();
        assert_eq!(c.free_labels, vec!["i", "j", "k"]);
        c.validate().unwrap();
    }

    #[test]
    fn triple_label_rejected() {
        let e = parse_contraction("W[i,i,i,l] * W[l,j,j,m] free(m)").unwrap_err();
        assert!(matches!(e, DslError::TripleLabel(_, 3)));
    }

    #[test]
    fn arity_checked() {
        let e = parse_contraction("W[i,j,k] * W[i,j,k,l] free(l)").unwrap_err();
        assert!(matches!(e, DslError::ArityError { expected: 4, got: 3, .. }));
    }

    #[test]
    fn coefficient_expressions() {
        let c = parse_coeff("((n-4)/(n-3))").unwrap();
        assert_eq!(c.to_string(), "(n - 4) / (n - 3)");
        let c = parse_coeff("(n^2 - 7*n + 12) / ((n-3))").unwrap();
        assert_eq!(c.to_string(), "(n - 4)");
        let (coeff, _) = parse_term("-2 * W[i,j,k,l] * W[i,j,k,l]").unwrap();
        assert_eq!(coeff, RationalInN::int(-2));
    }

    #[test]
    fn multiline_with_comments() {
        let terms = parse_lincomb(
            "# a two-term expression\nW[i,j,k,l] * W[i,j,k,l]\n-1 * Ric[a,b] * Ric[a,b]\n",
        )
        .unwrap();
        assert_eq!(terms.len(), 2);
    }
}
