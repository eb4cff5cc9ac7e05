//! Machine checks of the exact coefficient identities and cancellation
//! lemmas the engine's pipelines are built to reproduce.

mod catalog;
mod lemmas;
pub mod linalg;

pub use catalog::Catalog;
pub use lemmas::{lemma_suite, run_lemma, LemmaId};

use crate::calculus::{first_bianchi_generators, second_bianchi_generators};
use crate::coeff::RationalInN;
use crate::tensor::{Contraction, LinComb, TruncationLog, TruncationPolicy};
use linalg::Span;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Unsupported,
}

/// Structured outcome of one lemma check.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub lemma: String,
    pub status: Status,
    /// named coefficients: (description, expected, computed)
    pub coefficients: Vec<(String, String, String)>,
    /// residual terms that were not absorbed, printed canonically
    pub residual: Vec<String>,
    /// census of residual classes
    pub residual_census: BTreeMap<String, usize>,
    pub bianchi_closure_used: bool,
    pub truncation: TruncationLog,
    pub notes: Vec<String>,
    pub wall_ms: u128,
}

impl VerifyReport {
    fn new(lemma: &str) -> Self {
        VerifyReport {
            lemma: lemma.to_string(),
            status: Status::Pass,
            coefficients: Vec::new(),
            residual: Vec::new(),
            residual_census: BTreeMap::new(),
            bianchi_closure_used: false,
            truncation: TruncationLog::default(),
            notes: Vec::new(),
            wall_ms: 0,
        }
    }

    fn coefficient(&mut self, name: &str, expected: &RationalInN, computed: &RationalInN) {
        self.coefficients
            .push((name.to_string(), expected.to_string(), computed.to_string()));
        if expected != computed {
            self.status = Status::Fail;
            self.notes
                .push(format!("coefficient `{name}`: expected {expected}, got {computed}"));
        } else if let Err(e) = cross_check_at_primes(expected, computed) {
            self.status = Status::Fail;
            self.notes.push(e);
        }
    }

    fn fail(&mut self, note: String) {
        self.status = Status::Fail;
        self.notes.push(note);
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {}\n",
            self.lemma,
            match self.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Unsupported => "UNSUPPORTED",
            }
        ));
        for (name, exp, got) in &self.coefficients {
            let mark = if exp == got { "=" } else { "≠" };
            out.push_str(&format!("    {name}: {exp} {mark} {got}\n"));
        }
        if self.bianchi_closure_used {
            out.push_str("    (residual absorbed by Bianchi closure)\n");
        }
        if !self.residual_census.is_empty() {
            let cls: Vec<String> = self
                .residual_census
                .iter()
                .map(|(k, v)| format!("{k}: {v}"))
                .collect();
            out.push_str(&format!("    residual classes: {}\n", cls.join(", ")));
        }
        for r in &self.residual {
            out.push_str(&format!("    residual: {r}\n"));
        }
        if !self.truncation.is_empty() {
            out.push_str(&format!(
                "    truncated: {} terms, {} quadratic-correction markers\n",
                self.truncation.dropped, self.truncation.qr_corrections
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("    note: {n}\n"));
        }
        out.push_str(&format!("    wall: {} ms\n", self.wall_ms));
        out
    }
}

/// Every coefficient equality is re-verified by exact evaluation at prime
/// dimensions away from the small poles.
fn cross_check_at_primes(expected: &RationalInN, computed: &RationalInN) -> Result<(), String> {
    for n0 in [7i64, 11, 13] {
        let a = expected.eval(n0).map_err(|e| e.to_string())?;
        let b = computed.eval(n0).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("evaluation mismatch at n = {n0}: {a:?} vs {b:?}"));
        }
    }
    Ok(())
}

/// Builds the span of Bianchi identities anchored at the monomials of `lc`,
/// expanding the anchor set through the generators a few times.
pub fn bianchi_span(lc: &LinComb, policy: TruncationPolicy, rounds: usize) -> Span {
    let mut span = Span::new();
    let mut anchors: Vec<Contraction> = lc.terms().map(|(c, _)| c.clone()).collect();
    let mut seen: std::collections::BTreeSet<Contraction> = anchors.iter().cloned().collect();
    for _ in 0..rounds {
        let mut new_anchors = Vec::new();
        for c in &anchors {
            let mut gens = first_bianchi_generators(c, policy);
            if let Ok(mut g2) = second_bianchi_generators(c, policy) {
                gens.append(&mut g2);
            }
            for g in gens {
                for (m, _) in g.terms() {
                    if seen.insert(m.clone()) {
                        new_anchors.push(m.clone());
                    }
                }
                span.insert_lincomb(&g);
            }
        }
        if new_anchors.is_empty() {
            break;
        }
        anchors = new_anchors;
    }
    span
}

/// Checks `lhs = rhs` in the quotient ring of the given cutoff. With
/// `bianchi` set, a nonzero difference is also reduced against the Bianchi
/// span before judging.
pub fn check_equal_mod_length(
    lhs: &LinComb,
    rhs: &LinComb,
    max_length: usize,
    bianchi: bool,
) -> Result<VerifyReport, crate::tensor::LinCombError> {
    let start = Instant::now();
    let policy = TruncationPolicy::mod_length(max_length);
    let mut report = VerifyReport::new("check_equal_mod_length");
    let diff = lhs.with_policy(policy).checked_add(&rhs.with_policy(policy).neg())?;
    report.truncation = diff.log().clone();
    let mut residual = diff;
    if !residual.is_empty() && bianchi {
        let span = bianchi_span(&residual, policy, 2);
        let reduced = span.reduce(linalg::lincomb_row(&residual));
        if reduced.is_empty() {
            report.bianchi_closure_used = true;
            residual = LinComb::new(policy);
        } else {
            let mut r = LinComb::new(policy);
            for (c, k) in reduced {
                r.add_canonical(k, c);
            }
            residual = r;
        }
    }
    if !residual.is_empty() {
        report.status = Status::Fail;
        for (c, k) in residual.terms() {
            report.residual.push(format!("({k}) * {c}"));
        }
    }
    report.wall_ms = start.elapsed().as_millis();
    Ok(report)
}
