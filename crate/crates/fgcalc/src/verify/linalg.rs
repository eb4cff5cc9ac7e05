//! Exact linear algebra over the field Q(n), with contractions as the basis.
//!
//! Used to reduce lemma residuals against the span of Bianchi generators and
//! to solve for the leading coefficients of an identity when the engine's
//! raw output distributes them across Bianchi-equivalent monomials.

use crate::coeff::RationalInN;
use crate::tensor::{Contraction, LinComb};
use std::collections::BTreeMap;

pub type Row = BTreeMap<Contraction, RationalInN>;

pub fn lincomb_row(lc: &LinComb) -> Row {
    lc.terms().map(|(c, k)| (c.clone(), k.clone())).collect()
}

fn row_sub_scaled(v: &mut Row, k: &RationalInN, w: &Row) {
    for (m, c) in w {
        let entry = v.entry(m.clone()).or_insert_with(RationalInN::zero);
        *entry = entry.clone() - k.clone() * c.clone();
    }
    v.retain(|_, c| !c.is_zero());
}

fn pivot(v: &Row) -> Option<&Contraction> {
    v.keys().next_back()
}

/// Row-echelon span over Q(n), keyed by pivot monomial.
#[derive(Default)]
pub struct Span {
    rows: BTreeMap<Contraction, Row>,
}

impl Span {
    pub fn new() -> Self {
        Span::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fully reduces `v` against the span.
    pub fn reduce(&self, mut v: Row) -> Row {
        loop {
            let Some(p) = pivot(&v).cloned() else { return v };
            let Some(row) = self.rows.get(&p) else {
                // reduce lower monomials too: walk down through all keys
                return self.reduce_tail(v, p);
            };
            let k = v[&p].clone() / row[&p].clone();
            row_sub_scaled(&mut v, &k, row);
        }
    }

    fn reduce_tail(&self, mut v: Row, below: Contraction) -> Row {
        let mut cursor = below;
        loop {
            let next = v
                .range(..cursor.clone())
                .next_back()
                .map(|(m, _)| m.clone());
            let Some(m) = next else { return v };
            if let Some(row) = self.rows.get(&m) {
                let k = v[&m].clone() / row[&m].clone();
                row_sub_scaled(&mut v, &k, row);
                if !v.contains_key(&m) {
                    cursor = m;
                    continue;
                }
            }
            cursor = m;
        }
    }

    /// Inserts a vector, keeping the span in echelon form. Returns true if
    /// the span grew.
    pub fn insert(&mut self, v: Row) -> bool {
        let v = self.reduce(v);
        let Some(p) = pivot(&v).cloned() else { return false };
        // back-substitute into existing rows so each pivot appears once
        let mut touched = Vec::new();
        for (pk, row) in &self.rows {
            if row.contains_key(&p) {
                touched.push(pk.clone());
            }
        }
        for pk in touched {
            let mut row = self.rows.remove(&pk).unwrap();
            let k = row[&p].clone() / v[&p].clone();
            row_sub_scaled(&mut row, &k, &v);
            if pivot(&row).is_some() {
                self.rows.insert(pivot(&row).unwrap().clone(), row);
            }
        }
        self.rows.insert(p, v);
        true
    }

    pub fn insert_lincomb(&mut self, lc: &LinComb) -> bool {
        self.insert(lincomb_row(lc))
    }

    /// Every monomial mentioned by some row.
    pub fn monomials(&self) -> std::collections::BTreeSet<Contraction> {
        let mut out = std::collections::BTreeSet::new();
        for row in self.rows.values() {
            out.extend(row.keys().cloned());
        }
        out
    }

    pub fn contains(&self, lc: &LinComb) -> bool {
        self.reduce(lincomb_row(lc)).is_empty()
    }
}

#[derive(Debug)]
pub enum ExtractError {
    /// the leading monomial combinations are not independent modulo the span
    Ambiguous,
    /// leftover after subtracting the best coefficient fit
    Residual(Row),
}

/// Solves `out ≡ Σ λ_i · leads_i (mod span)` for the λ. The remainder after
/// subtracting the fit is returned alongside, reduced against the span.
pub fn extract_coefficients(
    out: &LinComb,
    leads: &[&LinComb],
    span: &Span,
) -> Result<(Vec<RationalInN>, Row), ExtractError> {
    let mut target = span.reduce(lincomb_row(out));
    // lead vectors with coefficient tracking, kept mutually reduced so that
    // no row contains another row's pivot
    let mut rows: Vec<(Row, Vec<RationalInN>)> = Vec::new();
    for (i, l) in leads.iter().enumerate() {
        let mut v = span.reduce(lincomb_row(l));
        let mut combo = vec![RationalInN::zero(); leads.len()];
        combo[i] = RationalInN::one();
        for (w, wc) in &rows {
            let p = pivot(w).unwrap();
            if let Some(c) = v.get(p) {
                let k = c.clone() / w[p].clone();
                row_sub_scaled(&mut v, &k, w);
                for (a, b) in combo.iter_mut().zip(wc) {
                    *a = a.clone() - k.clone() * b.clone();
                }
            }
        }
        if pivot(&v).is_none() {
            return Err(ExtractError::Ambiguous);
        }
        // back-substitute the new pivot out of the existing rows
        let p = pivot(&v).unwrap().clone();
        for (w, wc) in rows.iter_mut() {
            if let Some(c) = w.get(&p) {
                let k = c.clone() / v[&p].clone();
                row_sub_scaled(w, &k, &v);
                for (a, b) in wc.iter_mut().zip(&combo) {
                    *a = a.clone() - k.clone() * b.clone();
                }
            }
        }
        rows.push((v, combo));
    }
    // pivots are now exclusive; one pass solves
    let mut lambda = vec![RationalInN::zero(); leads.len()];
    for (w, wc) in &rows {
        let p = pivot(w).unwrap();
        if let Some(c) = target.get(p) {
            let k = c.clone() / w[p].clone();
            row_sub_scaled(&mut target, &k, w);
            for (a, b) in lambda.iter_mut().zip(wc) {
                *a = a.clone() + k.clone() * b.clone();
            }
        }
    }
    Ok((lambda, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_contraction;
    use crate::tensor::TruncationPolicy;

    fn lc(pairs: &[(i64, &str)]) -> LinComb {
        let mut out = LinComb::new(TruncationPolicy::unbounded());
        for (k, s) in pairs {
            out.add_term(RationalInN::int(*k), parse_contraction(s).unwrap());
        }
        out
    }

    #[test]
    fn span_membership() {
        let g1 = lc(&[(1, "W[i,j,k,l] * W[i,j,k,l]"), (2, "Ric[a,b] * Ric[a,b]")]);
        let g2 = lc(&[(1, "Ric[a,b] * Ric[a,b]"), (1, "Scal[] * Scal[]")]);
        let mut span = Span::new();
        span.insert_lincomb(&g1);
        span.insert_lincomb(&g2);
        // g1 - 2 g2 is in the span
        let v = lc(&[
            (1, "W[i,j,k,l] * W[i,j,k,l]"),
            (-2, "Scal[] * Scal[]"),
        ]);
        assert!(span.contains(&v));
        let w = lc(&[(1, "W[i,j,k,l] * W[i,j,k,l]")]);
        assert!(!span.contains(&w));
    }

    #[test]
    fn coefficient_extraction() {
        let lead1 = lc(&[(1, "W[i,j,k,l] * W[i,j,k,l]")]);
        let lead2 = lc(&[(1, "Ric[a,b] * Ric[a,b]")]);
        let gen = lc(&[(1, "Scal[] * Scal[]"), (1, "Ric[a,b] * Ric[a,b]")]);
        let mut span = Span::new();
        span.insert_lincomb(&gen);
        // out = 3·lead1 − 5·lead2 + 7·gen
        let out = lc(&[
            (3, "W[i,j,k,l] * W[i,j,k,l]"),
            (2, "Ric[a,b] * Ric[a,b]"),
            (7, "Scal[] * Scal[]"),
        ]);
        let (lambda, rest) = extract_coefficients(&out, &[&lead1, &lead2], &span).unwrap();
        assert!(rest.is_empty(), "rest: {rest:?}");
        assert_eq!(lambda[0], RationalInN::int(3));
        assert_eq!(lambda[1], RationalInN::int(-5));
    }
}
