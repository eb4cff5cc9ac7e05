//! Linear combinations of canonical contractions over `Q(n)`, carried in the
//! quotient ring "modulo complete contractions of length ≥ max_length + 1".
//! Terms that exceed the cutoff are never stored silently: the truncation
//! log counts them and keeps a few sample shapes.

use super::{canonicalize, Contraction};
use crate::coeff::RationalInN;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinCombError {
    #[error("operands carry different truncation policies ({0:?} vs {1:?})")]
    PolicyMismatch(Option<usize>, Option<usize>),
}

/// Length cutoff for the quotient ring. `None` keeps everything.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TruncationPolicy {
    pub max_length: Option<usize>,
}

impl TruncationPolicy {
    pub fn unbounded() -> Self {
        TruncationPolicy { max_length: None }
    }

    pub fn mod_length(max_length: usize) -> Self {
        TruncationPolicy { max_length: Some(max_length) }
    }

    fn keeps(&self, len: usize) -> bool {
        self.max_length.map_or(true, |m| len <= m)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TruncationLog {
    /// terms dropped because their length exceeded the cutoff
    pub dropped: u64,
    /// quadratic-curvature corrections the ambient rules only state up to
    pub qr_corrections: u64,
    /// a few shapes of dropped terms, for diagnostics
    pub samples: Vec<String>,
}

impl TruncationLog {
    const MAX_SAMPLES: usize = 8;

    pub fn is_empty(&self) -> bool {
        self.dropped == 0 && self.qr_corrections == 0
    }

    fn record(&mut self, c: &Contraction) {
        self.dropped += 1;
        if self.samples.len() < Self::MAX_SAMPLES {
            self.samples.push(c.to_string());
        }
    }

    pub fn merge(&mut self, other: &TruncationLog) {
        self.dropped += other.dropped;
        self.qr_corrections += other.qr_corrections;
        for s in &other.samples {
            if self.samples.len() >= Self::MAX_SAMPLES {
                break;
            }
            self.samples.push(s.clone());
        }
    }
}

/// One scaled contraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: RationalInN,
    pub contraction: Contraction,
}

/// Finite map from canonical contraction to coefficient. No zero
/// coefficients are stored and all keys are canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinComb {
    terms: BTreeMap<Contraction, RationalInN>,
    policy: TruncationPolicy,
    log: TruncationLog,
}

impl LinComb {
    pub fn new(policy: TruncationPolicy) -> Self {
        LinComb { terms: BTreeMap::new(), policy, log: TruncationLog::default() }
    }

    pub fn single(policy: TruncationPolicy, coeff: RationalInN, c: Contraction) -> Self {
        let mut lc = LinComb::new(policy);
        lc.add_term(coeff, c);
        lc
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy
    }

    pub fn log(&self) -> &TruncationLog {
        &self.log
    }

    pub fn note_qr_correction(&mut self) {
        self.log.qr_corrections += 1;
    }

    pub fn merge_log(&mut self, other: &TruncationLog) {
        self.log.merge(other);
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Contraction, &RationalInN)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Contraction, RationalInN)> {
        self.terms.into_iter()
    }

    pub fn coeff_of(&self, canonical: &Contraction) -> RationalInN {
        self.terms.get(canonical).cloned().unwrap_or_else(RationalInN::zero)
    }

    /// Canonicalizes and inserts one term, respecting the cutoff.
    pub fn add_term(&mut self, coeff: RationalInN, c: Contraction) {
        if coeff.is_zero() {
            return;
        }
        let (key, k) = canonicalize(&c);
        if k.is_zero() {
            return;
        }
        if !self.policy.keeps(key.length()) {
            self.log.record(&key);
            return;
        }
        let total = coeff * k;
        let entry = self.terms.entry(key).or_insert_with(RationalInN::zero);
        *entry = entry.clone() + total;
        if entry.is_zero() {
            // avoid storing zeros; need the key back
            let dead: Vec<Contraction> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in dead {
                self.terms.remove(&k);
            }
        }
    }

    /// Inserts a term already known to be canonical (skips re-canonicalizing).
    pub fn add_canonical(&mut self, coeff: RationalInN, key: Contraction) {
        if coeff.is_zero() {
            return;
        }
        if !self.policy.keeps(key.length()) {
            self.log.record(&key);
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(RationalInN::zero);
        *entry = entry.clone() + coeff;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn checked_add(&self, other: &LinComb) -> Result<LinComb, LinCombError> {
        if self.policy != other.policy {
            return Err(LinCombError::PolicyMismatch(
                self.policy.max_length,
                other.policy.max_length,
            ));
        }
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_canonical(v.clone(), k.clone());
        }
        out.log.merge(&other.log);
        Ok(out)
    }

    pub fn add(&self, other: &LinComb) -> LinComb {
        self.checked_add(other).expect("policy mismatch")
    }

    pub fn scale(&self, k: &RationalInN) -> LinComb {
        if k.is_zero() {
            let mut out = LinComb::new(self.policy);
            out.log = self.log.clone();
            return out;
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.clone() * k.clone();
        }
        out
    }

    pub fn neg(&self) -> LinComb {
        self.scale(&-RationalInN::one())
    }

    pub fn sub(&self, other: &LinComb) -> LinComb {
        self.add(&other.neg())
    }

    /// Splits into (matching, rest); the two parts partition the terms.
    pub fn partition<F: Fn(&Contraction) -> bool>(&self, pred: F) -> (LinComb, LinComb) {
        let mut yes = LinComb::new(self.policy);
        let mut no = LinComb::new(self.policy);
        yes.log = self.log.clone();
        for (k, v) in &self.terms {
            if pred(k) {
                yes.terms.insert(k.clone(), v.clone());
            } else {
                no.terms.insert(k.clone(), v.clone());
            }
        }
        (yes, no)
    }

    /// Applies `f` to every term and collects the results under this policy.
    pub fn flat_map<F: Fn(&Contraction, &RationalInN) -> Vec<(RationalInN, Contraction)>>(
        &self,
        f: F,
    ) -> LinComb {
        let mut out = LinComb::new(self.policy);
        out.log = self.log.clone();
        for (k, v) in &self.terms {
            for (coeff, c) in f(k, v) {
                out.add_term(coeff, c);
            }
        }
        out
    }

    /// Counts terms by an arbitrary classification key.
    pub fn census<K: Ord, F: Fn(&Contraction) -> K>(&self, class: F) -> BTreeMap<K, usize> {
        let mut out = BTreeMap::new();
        for k in self.terms.keys() {
            *out.entry(class(k)).or_insert(0) += 1;
        }
        out
    }

    /// Re-interprets the terms under a different cutoff, logging casualties.
    pub fn with_policy(&self, policy: TruncationPolicy) -> LinComb {
        let mut out = LinComb::new(policy);
        out.log = self.log.clone();
        for (k, v) in &self.terms {
            out.add_canonical(v.clone(), k.clone());
        }
        out
    }
}

impl fmt::Display for LinComb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (k, v)) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} * {}", v, k)?;
        }
        if !self.log.is_empty() {
            writeln!(f)?;
            write!(
                f,
                "(+ {} truncated, {} quadratic-correction markers)",
                self.log.dropped, self.log.qr_corrections
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Factor, FactorKind, SlotRole};
    use super::*;

    fn weyl_sq() -> Contraction {
        let f = Factor::new(
            FactorKind::Weyl,
            0,
            vec![
                SlotRole::Paired(0),
                SlotRole::Paired(1),
                SlotRole::Paired(2),
                SlotRole::Paired(3),
            ],
        );
        Contraction::new(vec![f.clone(), f], vec![])
    }

    #[test]
    fn scale_by_zero_empties() {
        let lc = LinComb::single(TruncationPolicy::unbounded(), RationalInN::int(3), weyl_sq());
        assert_eq!(lc.len(), 1);
        assert!(lc.scale(&RationalInN::zero()).is_empty());
    }

    #[test]
    fn relabelled_terms_merge() {
        let mut lc = LinComb::new(TruncationPolicy::unbounded());
        lc.add_term(RationalInN::one(), weyl_sq());
        let mut relabeled = weyl_sq();
        for f in &mut relabeled.factors {
            for s in &mut f.slots {
                if let SlotRole::Paired(p) = s {
                    *s = SlotRole::Paired(3 - *p);
                }
            }
        }
        lc.add_term(RationalInN::one(), relabeled);
        assert_eq!(lc.len(), 1);
        let (_, v) = lc.terms().next().unwrap();
        assert_eq!(*v, RationalInN::int(2));
    }

    #[test]
    fn truncation_logged_not_silent() {
        let mut lc = LinComb::new(TruncationPolicy::mod_length(1));
        lc.add_term(RationalInN::one(), weyl_sq());
        assert!(lc.is_empty());
        assert_eq!(lc.log().dropped, 1);
        assert!(!lc.log().samples.is_empty());
    }

    #[test]
    fn policy_mismatch_detected() {
        let a = LinComb::new(TruncationPolicy::mod_length(2));
        let b = LinComb::new(TruncationPolicy::mod_length(3));
        assert!(matches!(
            a.checked_add(&b),
            Err(LinCombError::PolicyMismatch(Some(2), Some(3)))
        ));
    }

    #[test]
    fn partition_is_a_partition() {
        let mut lc = LinComb::new(TruncationPolicy::unbounded());
        lc.add_term(RationalInN::one(), weyl_sq());
        let (yes, no) = lc.partition(|c| c.length() == 2);
        assert_eq!(yes.len() + no.len(), lc.len());
        assert_eq!(yes.add(&no), lc);
    }
}
