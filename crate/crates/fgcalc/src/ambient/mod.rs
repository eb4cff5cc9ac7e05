//! The ambient-metric expansion pipeline: ambient analogues, assignment
//! enumeration, break-up recursion, and the closed catalog of component
//! rewrite rules.
//!
//! The ambient coordinate is fixed at t = 1, where the Christoffel symbols
//! read
//!
//! ```text
//!   Γ̃^0_{ij} = -P_{ij}      Γ̃^k_{0j} = δ^k_j     Γ̃^k_{ij} = Γ^k_{ij}
//!   Γ̃^k_{∞j} = g^{kl}P_{jl} Γ̃^∞_{0∞} = 1         Γ̃^∞_{ij} = -g_{ij}
//! ```
//!
//! with all other entries zero. Peeling a base-valued derivative slot uses
//! Γ̃^∞_{ij} (creating a fixed-∞ slot times a metric) and Γ̃^k_{0j}
//! (consuming a fixed-0 slot); the Schouten entries produce quadratic
//! curvature corrections which the quotient ring truncates with a log entry.
//! Components whose conversion the catalog states only up to a linear
//! combination with at least two internal contractions are emitted as
//! opaque markers.

mod rules;

pub use rules::ChristoffelTable;

use crate::coeff::RationalInN;
use crate::tensor::{
    Contraction, Factor, FactorKind, LinComb, SlotRole, TruncationPolicy,
};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AmbientError {
    #[error("no catalogued rewrite covers this ambient component: {0}")]
    UnsupportedAmbientOrder(String),
    #[error("the contraction is not of pure ∇^(m)W form")]
    NotWeylForm,
    #[error("no important factor designated")]
    NoImportantFactor,
}

/// Per-pair choice in an assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PairValue {
    /// base-range summation against g^{ij}
    Base,
    /// first slot (in scan order) gets ∞, second gets 0
    InfZero,
    /// first slot gets 0, second gets ∞
    ZeroInf,
}

/// An assignment: one choice per contracted pair, keyed by pair id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub choices: BTreeMap<u32, PairValue>,
}

/// Replaces every `∇^(m)W` factor by its ambient analogue, preserving the
/// pairing pattern slot for slot.
pub fn amb_analogue(c: &Contraction) -> Result<Contraction, AmbientError> {
    let mut nc = c.clone();
    for f in &mut nc.factors {
        match f.kind {
            FactorKind::Weyl => f.kind = FactorKind::AmbientRiemann,
            FactorKind::Metric | FactorKind::InverseMetric => {}
            _ => return Err(AmbientError::NotWeylForm),
        }
    }
    Ok(nc)
}

/// All 3^p assignments of an ambient term with p contracted pairs, together
/// with the stamped term: a Base pair stays contracted, the other choices
/// replace the two slots by fixed values.
pub fn assign_enumerate(a: &Contraction) -> Vec<(Assignment, Contraction)> {
    let mut pairs: Vec<u32> = Vec::new();
    for f in &a.factors {
        for s in &f.slots {
            if let SlotRole::Paired(p) = s {
                if !pairs.contains(p) {
                    pairs.push(*p);
                }
            }
        }
    }
    pairs.sort_unstable();
    let mut out = Vec::with_capacity(3usize.pow(pairs.len() as u32));
    let mut choices = vec![PairValue::Base; pairs.len()];
    loop {
        let assignment = Assignment {
            choices: pairs.iter().cloned().zip(choices.iter().cloned()).collect(),
        };
        out.push((assignment.clone(), stamp(a, &assignment)));
        // odometer over {Base, InfZero, ZeroInf}
        let mut i = 0;
        loop {
            if i == choices.len() {
                return out;
            }
            choices[i] = match choices[i] {
                PairValue::Base => PairValue::InfZero,
                PairValue::InfZero => PairValue::ZeroInf,
                PairValue::ZeroInf => {
                    choices[i] = PairValue::Base;
                    i += 1;
                    continue;
                }
            };
            break;
        }
    }
}

/// Applies an assignment: non-Base pairs get their fixed values stamped in
/// scan order (first occurrence ∞ for InfZero, 0 for ZeroInf).
pub fn stamp(a: &Contraction, ass: &Assignment) -> Contraction {
    let mut nc = a.clone();
    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    for f in &mut nc.factors {
        for s in &mut f.slots {
            if let SlotRole::Paired(p) = *s {
                let Some(v) = ass.choices.get(&p) else { continue };
                let occurrence = seen.entry(p).or_insert(0);
                let first = *occurrence == 0;
                *occurrence += 1;
                match (v, first) {
                    (PairValue::Base, _) => {}
                    (PairValue::InfZero, true) => *s = SlotRole::FixedInfinity,
                    (PairValue::InfZero, false) => *s = SlotRole::FixedZero,
                    (PairValue::ZeroInf, true) => *s = SlotRole::FixedZero,
                    (PairValue::ZeroInf, false) => *s = SlotRole::FixedInfinity,
                }
            }
        }
    }
    nc
}

/// Converts one assigned ambient term into base-metric factors, following
/// the break-up recursion and the component catalog. Output terms longer
/// than the policy cutoff (the quadratic curvature corrections in
/// particular) are truncated into the log.
pub fn break_up(assigned: &Contraction, policy: TruncationPolicy) -> Result<LinComb, AmbientError> {
    // expand each ambient factor independently, then take the product
    let mut per_factor: Vec<Vec<rules::ExpandedPiece>> = Vec::new();
    let mut base_factors: Vec<Factor> = Vec::new();
    let mut next_fresh = assigned.next_pair_id();
    let mut qr_notes = 0u64;
    for f in &assigned.factors {
        if f.kind == FactorKind::AmbientRiemann {
            let (pieces, fresh, qr) = rules::expand_factor(f, next_fresh)?;
            next_fresh = fresh;
            qr_notes += qr;
            if pieces.is_empty() {
                // the factor vanished; the whole assigned term is zero
                let mut out = LinComb::new(policy);
                for _ in 0..qr_notes {
                    out.note_qr_correction();
                }
                return Ok(out);
            }
            per_factor.push(pieces);
        } else {
            base_factors.push(f.clone());
        }
    }
    let mut out = LinComb::new(policy);
    for _ in 0..qr_notes {
        out.note_qr_correction();
    }
    // cartesian product over the per-factor expansions
    let mut idx = vec![0usize; per_factor.len()];
    loop {
        let mut coeff = RationalInN::one();
        let mut factors = base_factors.clone();
        for (fi, pieces) in per_factor.iter().enumerate() {
            let p = &pieces[idx[fi]];
            coeff = coeff * p.coeff.clone();
            factors.extend(p.factors.iter().cloned());
        }
        out.add_term(coeff, Contraction::new(factors, assigned.free_labels.clone()));
        // advance
        let mut i = 0;
        loop {
            if i == idx.len() {
                return Ok(out);
            }
            idx[i] += 1;
            if idx[i] < per_factor[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// The full pipeline: ambient analogue, assignment enumeration, break-up,
/// canonical merge, in the quotient ring "modulo length ≥ max_length + 1".
pub fn expand_amb(c: &Contraction, policy: TruncationPolicy) -> Result<LinComb, AmbientError> {
    let amb = amb_analogue(c)?;
    let mut out = LinComb::new(policy);
    for (_, stamped) in assign_enumerate(&amb) {
        let piece = break_up(&stamped, policy)?;
        out = out.checked_add(&piece).expect("same policy");
    }
    Ok(out)
}

/// Linear extension of `expand_amb`.
pub fn expand_amb_lincomb(lc: &LinComb) -> Result<LinComb, AmbientError> {
    let mut out = LinComb::new(lc.policy());
    out.merge_log(lc.log());
    for (c, k) in lc.terms() {
        let e = expand_amb(c, lc.policy())?;
        out = out.checked_add(&e.scale(k)).expect("same policy");
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Assignment partitions
// ---------------------------------------------------------------------------

/// The five assignment classes of the cancellation bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum AssignClass {
    Minus,
    One,
    Sharp,
    Star,
    Plus,
}

/// Position of a slot: which factor it belongs to and whether the slot is
/// one of the designated free slots of the important factor.
fn infinity_positions(a: &Contraction, ass: &Assignment) -> Vec<(usize, usize)> {
    let stamped = stamp(a, ass);
    let mut out = Vec::new();
    for (fi, f) in stamped.factors.iter().enumerate() {
        for (si, s) in f.slots.iter().enumerate() {
            if *s == SlotRole::FixedInfinity {
                out.push((fi, si));
            }
        }
    }
    out
}

fn zero_positions(a: &Contraction, ass: &Assignment) -> Vec<(usize, usize)> {
    let stamped = stamp(a, ass);
    let mut out = Vec::new();
    for (fi, f) in stamped.factors.iter().enumerate() {
        for (si, s) in f.slots.iter().enumerate() {
            if *s == SlotRole::FixedZero {
                out.push((fi, si));
            }
        }
    }
    out
}

/// Classification used for the double-divergence cancellation: the important
/// factor carries the (formerly free) designated slots.
pub fn partition_double_div(
    a: &Contraction,
    important: usize,
    designated: &[(usize, usize)],
) -> Result<Vec<(Assignment, AssignClass)>, AmbientError> {
    if important >= a.factors.len() {
        return Err(AmbientError::NoImportantFactor);
    }
    let mut out = Vec::new();
    for (ass, _) in assign_enumerate(a) {
        let infs = infinity_positions(a, &ass);
        let zeros = zero_positions(a, &ass);
        let inf_factors: std::collections::BTreeSet<usize> =
            infs.iter().map(|(fi, _)| *fi).collect();
        let class = if inf_factors.len() >= 2 {
            AssignClass::Minus
        } else if zeros.iter().any(|(fi, _)| *fi == important) {
            AssignClass::One
        } else if infs.is_empty() || !inf_factors.contains(&important) {
            AssignClass::Sharp
        } else if infs
            .iter()
            .any(|pos| designated.contains(pos))
        {
            AssignClass::Plus
        } else {
            AssignClass::Star
        };
        out.push((ass, class));
    }
    Ok(out)
}

/// Classification used for the gradient cancellation: at most one ∞ outside
/// the Minus class, and the free slot is the designated derivative slot of
/// the important factor.
pub fn partition_gradient(
    a: &Contraction,
    important: usize,
    free_slot: (usize, usize),
) -> Result<Vec<(Assignment, AssignClass)>, AmbientError> {
    if important >= a.factors.len() {
        return Err(AmbientError::NoImportantFactor);
    }
    let mut out = Vec::new();
    for (ass, _) in assign_enumerate(a) {
        let infs = infinity_positions(a, &ass);
        let zeros = zero_positions(a, &ass);
        let class = if infs.len() >= 2 {
            AssignClass::Minus
        } else if infs.is_empty() {
            AssignClass::Sharp
        } else {
            let (fi, si) = infs[0];
            if (fi, si) == free_slot {
                AssignClass::Plus
            } else if fi == important {
                AssignClass::Star
            } else if zeros.iter().any(|z| z.0 == important) {
                AssignClass::One
            } else {
                AssignClass::Sharp
            }
        };
        out.push((ass, class));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_contraction;

    #[test]
    fn assignment_count_is_three_to_p() {
        let c = parse_contraction("W[i,j,k,l] * W[i,j,k,l]").unwrap();
        let a = amb_analogue(&c).unwrap();
        assert_eq!(assign_enumerate(&a).len(), 3usize.pow(4));
        // p = 0: exactly the identity assignment
        let free = parse_contraction("AmbR[_inf,j,k,l] free(j,k,l)").unwrap();
        assert_eq!(assign_enumerate(&free).len(), 1);
    }

    #[test]
    fn analogue_preserves_pattern() {
        let c = parse_contraction("d(a) W[i,j,k,l] * d(a) W[i,j,k,l]").unwrap();
        let a = amb_analogue(&c).unwrap();
        assert_eq!(a.factors.len(), c.factors.len());
        for (f, g) in a.factors.iter().zip(&c.factors) {
            assert_eq!(f.kind, FactorKind::AmbientRiemann);
            assert_eq!(f.slots, g.slots);
        }
        // free labels preserved for vector fields
        let v = parse_contraction("d(a) W[i,j,k,l] * d(a) W[i,j,k,m] free(l,m)").unwrap();
        let av = amb_analogue(&v).unwrap();
        assert_eq!(av.free_labels, v.free_labels);
    }

    #[test]
    fn partitions_are_disjoint_and_exhaustive() {
        let c = parse_contraction("W[i1,j,i2,l] * W[j,x,y,z] * W[l,x,y,z] free(i1,i2)").unwrap();
        let a = amb_analogue(&c).unwrap();
        // treat factor 0 as important with its two free intrinsic slots
        let designated = vec![(0usize, 0usize), (0usize, 2usize)];
        let classes = partition_double_div(&a, 0, &designated).unwrap();
        let p = classes.len();
        assert_eq!(p, 3usize.pow(8));
        let mut census: BTreeMap<AssignClass, usize> = BTreeMap::new();
        for (_, cl) in &classes {
            *census.entry(*cl).or_insert(0) += 1;
        }
        let total: usize = census.values().sum();
        assert_eq!(total, p);
        // the all-Base assignment is in the sharp class
        let all_base = classes
            .iter()
            .find(|(a, _)| a.choices.values().all(|v| *v == PairValue::Base))
            .unwrap();
        assert_eq!(all_base.1, AssignClass::Sharp);
    }
}
