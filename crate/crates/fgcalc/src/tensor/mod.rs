//! The contraction intermediate representation: factors, index slots,
//! pairings, canonical form, and the quotient ring "modulo complete
//! contractions of length ≥ L+1".

mod canon;
mod lincomb;

pub use canon::canonicalize;
pub use lincomb::{LinComb, LinCombError, Term, TruncationLog, TruncationPolicy};


use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    #[error("pair id {0} does not occur exactly twice")]
    MalformedPairing(u32),
    #[error("free label `{0}` occurs {1} times in slots")]
    BadFreeLabel(String, usize),
    #[error("fixed ambient slot value on a non-ambient factor")]
    FixedValueOnBaseFactor,
    #[error("label `{0}` is not a free label of this contraction")]
    NotAFreeLabel(String),
}

/// Scalar-function names that may appear as `∇^(m)f` factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ScalarName {
    Phi,
    Upsilon,
    Omega(u8),
}

/// What a factor is. Intrinsic rank is fixed by the tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FactorKind {
    Riemann,
    Weyl,
    Ricci,
    ScalarCurv,
    Schouten,
    Metric,
    InverseMetric,
    ScalarField(ScalarName),
    AmbientRiemann,
    /// Stand-in for a component the expansion rules state only up to an
    /// unspecified linear combination of `∇^(m)W ⊗ g…` with at least
    /// `min_delta` internal contractions. Carries the external slots.
    Opaque {
        min_delta: u8,
    },
}

impl FactorKind {
    pub fn intrinsic_rank(&self) -> usize {
        match self {
            FactorKind::Riemann | FactorKind::Weyl | FactorKind::AmbientRiemann => 4,
            FactorKind::Ricci
            | FactorKind::Schouten
            | FactorKind::Metric
            | FactorKind::InverseMetric => 2,
            FactorKind::ScalarCurv | FactorKind::ScalarField(_) => 0,
            FactorKind::Opaque { .. } => 0,
        }
    }

    pub fn is_curvature(&self) -> bool {
        matches!(
            self,
            FactorKind::Riemann
                | FactorKind::Weyl
                | FactorKind::Ricci
                | FactorKind::ScalarCurv
                | FactorKind::Schouten
                | FactorKind::AmbientRiemann
        )
    }

    /// Scaling weight of the fully covariant tensor under g -> λ²g.
    fn covariant_weight(&self) -> i64 {
        match self {
            FactorKind::Riemann | FactorKind::Weyl | FactorKind::AmbientRiemann => 2,
            FactorKind::Metric => 2,
            FactorKind::Ricci | FactorKind::Schouten | FactorKind::ScalarField(_) => 0,
            FactorKind::ScalarCurv | FactorKind::InverseMetric => -2,
            FactorKind::Opaque { .. } => 0,
        }
    }

    /// Fixed code used by the canonical total order.
    pub(crate) fn order_code(&self) -> (u16, u16) {
        match self {
            FactorKind::Riemann => (1, 0),
            FactorKind::Weyl => (2, 0),
            FactorKind::Ricci => (3, 0),
            FactorKind::ScalarCurv => (4, 0),
            FactorKind::Schouten => (5, 0),
            FactorKind::Metric => (6, 0),
            FactorKind::InverseMetric => (7, 0),
            FactorKind::ScalarField(ScalarName::Phi) => (8, 0),
            FactorKind::ScalarField(ScalarName::Upsilon) => (9, 0),
            FactorKind::ScalarField(ScalarName::Omega(k)) => (10, *k as u16),
            FactorKind::AmbientRiemann => (20, 0),
            FactorKind::Opaque { min_delta } => (30, *min_delta as u16),
        }
    }
}

/// Role of one index slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SlotRole {
    /// Index into the contraction's `free_labels`.
    Free(u32),
    /// Contracted pair; each id occurs exactly twice across the contraction.
    Paired(u32),
    /// Ambient value 0 (only on AmbientRiemann factors).
    FixedZero,
    /// Ambient value ∞ (only on AmbientRiemann factors).
    FixedInfinity,
}

/// One tensor factor `∇^(m)K`: `deriv_order` derivative slots (outermost
/// first) followed by the intrinsic slots of the kind.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Factor {
    pub kind: FactorKind,
    pub deriv_order: usize,
    pub slots: Vec<SlotRole>,
}

impl Factor {
    pub fn new(kind: FactorKind, deriv_order: usize, slots: Vec<SlotRole>) -> Self {
        if !matches!(kind, FactorKind::Opaque { .. }) {
            debug_assert_eq!(slots.len(), deriv_order + kind.intrinsic_rank());
        }
        Factor { kind, deriv_order, slots }
    }

    pub fn intrinsic_slots(&self) -> &[SlotRole] {
        &self.slots[self.deriv_order..]
    }

    pub fn derivative_slots(&self) -> &[SlotRole] {
        &self.slots[..self.deriv_order]
    }

    /// Number of contracted pairs with both ends in this factor.
    pub fn internal_pairs(&self) -> usize {
        let mut seen: HashMap<u32, usize> = HashMap::new();
        for s in &self.slots {
            if let SlotRole::Paired(p) = s {
                *seen.entry(*p).or_insert(0) += 1;
            }
        }
        seen.values().filter(|&&c| c == 2).count()
    }

    /// Is this the distinguished `∇φ`-style factor (scalar with one derivative)?
    pub fn is_gradient_scalar(&self) -> bool {
        matches!(self.kind, FactorKind::ScalarField(_)) && self.deriv_order == 1
    }

    /// `Δf`: scalar field with two derivative slots contracted together.
    pub fn is_laplacian_scalar(&self) -> bool {
        matches!(self.kind, FactorKind::ScalarField(_))
            && self.deriv_order == 2
            && matches!(
                (&self.slots[0], &self.slots[1]),
                (SlotRole::Paired(a), SlotRole::Paired(b)) if a == b
            )
    }
}

/// A complete or partial contraction: ordered factors plus the ordered list
/// of free-index labels. Contracted slots form a perfect matching.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Contraction {
    pub factors: Vec<Factor>,
    pub free_labels: Vec<String>,
}

impl Contraction {
    pub fn new(factors: Vec<Factor>, free_labels: Vec<String>) -> Self {
        Contraction { factors, free_labels }
    }

    /// Number of factors, not counting pure metric connectors.
    pub fn length(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| !matches!(f.kind, FactorKind::Metric | FactorKind::InverseMetric))
            .count()
    }

    pub fn is_complete(&self) -> bool {
        self.free_labels.is_empty()
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        let mut pair_count: HashMap<u32, usize> = HashMap::new();
        let mut free_count: HashMap<u32, usize> = HashMap::new();
        for f in &self.factors {
            if !matches!(f.kind, FactorKind::Opaque { .. }) {
                debug_assert_eq!(f.slots.len(), f.deriv_order + f.kind.intrinsic_rank());
            }
            for s in &f.slots {
                match s {
                    SlotRole::Paired(p) => *pair_count.entry(*p).or_insert(0) += 1,
                    SlotRole::Free(i) => *free_count.entry(*i).or_insert(0) += 1,
                    SlotRole::FixedZero | SlotRole::FixedInfinity => {
                        if f.kind != FactorKind::AmbientRiemann {
                            return Err(TensorError::FixedValueOnBaseFactor);
                        }
                    }
                }
            }
        }
        for (p, c) in &pair_count {
            if *c != 2 {
                return Err(TensorError::MalformedPairing(*p));
            }
        }
        for (i, label) in self.free_labels.iter().enumerate() {
            let c = free_count.get(&(i as u32)).copied().unwrap_or(0);
            if c != 1 {
                return Err(TensorError::BadFreeLabel(label.clone(), c));
            }
        }
        // no dangling free indices beyond the declared list
        for idx in free_count.keys() {
            if *idx as usize >= self.free_labels.len() {
                return Err(TensorError::BadFreeLabel(format!("#{idx}"), 0));
            }
        }
        Ok(())
    }

    /// Homogeneity degree under g -> λ²g: Σ covariant weights − 2·(#pairs).
    /// For a complete contraction of `∇^(m_i)`-differentiated curvatures this
    /// is −Σ(m_i + 2).
    pub fn weight(&self) -> i64 {
        let mut w = 0i64;
        let mut slots_in_pairs = 0i64;
        for f in &self.factors {
            w += f.kind.covariant_weight();
            for s in &f.slots {
                if matches!(s, SlotRole::Paired(_)) {
                    slots_in_pairs += 1;
                }
            }
        }
        w - slots_in_pairs
    }

    /// (δ_W, δ_R, q): internal contractions among Weyl-family factors,
    /// internal contractions among Riemann-family factors (counting the one
    /// implicit in Ricci/Schouten and the two in scalar curvature), and the
    /// number of Ricci/scalar-curvature factors.
    pub fn delta_count(&self) -> (usize, usize, usize) {
        let mut dw = 0usize;
        let mut dr = 0usize;
        let mut q = 0usize;
        for f in &self.factors {
            match f.kind {
                FactorKind::Weyl | FactorKind::AmbientRiemann => dw += f.internal_pairs(),
                FactorKind::Opaque { min_delta } => dw += min_delta as usize,
                FactorKind::Riemann => dr += f.internal_pairs(),
                FactorKind::Ricci => {
                    dr += 1 + f.internal_pairs();
                    q += 1;
                }
                FactorKind::Schouten => {
                    dr += 1 + f.internal_pairs();
                    q += 1;
                }
                FactorKind::ScalarCurv => {
                    dr += 2 + f.internal_pairs();
                    q += 1;
                }
                _ => {}
            }
        }
        (dw, dr, q)
    }

    /// Index of the slot carrying free label `label`, as (factor, slot).
    pub fn find_free(&self, label: &str) -> Result<(usize, usize), TensorError> {
        let idx = self
            .free_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| TensorError::NotAFreeLabel(label.to_string()))? as u32;
        for (fi, f) in self.factors.iter().enumerate() {
            for (si, s) in f.slots.iter().enumerate() {
                if *s == SlotRole::Free(idx) {
                    return Ok((fi, si));
                }
            }
        }
        Err(TensorError::NotAFreeLabel(label.to_string()))
    }

    pub fn next_pair_id(&self) -> u32 {
        self.factors
            .iter()
            .flat_map(|f| f.slots.iter())
            .filter_map(|s| match s {
                SlotRole::Paired(p) => Some(p + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Remove free label at list position `idx`, shifting higher indices down.
    /// The caller must already have replaced the slot that carried it.
    pub(crate) fn drop_free_label(&mut self, idx: u32) {
        self.free_labels.remove(idx as usize);
        for f in &mut self.factors {
            for s in &mut f.slots {
                if let SlotRole::Free(j) = s {
                    if *j > idx {
                        *s = SlotRole::Free(*j - 1);
                    }
                }
            }
        }
    }
}

impl fmt::Display for Contraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::dsl::print_text_contraction(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn weyl_square() -> Contraction {
        // contr(W_{ijkl} W^{ijkl})
        let f1 = Factor::new(
            FactorKind::Weyl,
            0,
            vec![
                SlotRole::Paired(0),
                SlotRole::Paired(1),
                SlotRole::Paired(2),
                SlotRole::Paired(3),
            ],
        );
        let f2 = f1.clone();
        Contraction::new(vec![f1, f2], vec![])
    }

    #[test]
    fn weight_of_weyl_cube() {
        // three undifferentiated Weyl factors, completely contracted
        let f = |a, b, c, d| {
            Factor::new(
                FactorKind::Weyl,
                0,
                vec![
                    SlotRole::Paired(a),
                    SlotRole::Paired(b),
                    SlotRole::Paired(c),
                    SlotRole::Paired(d),
                ],
            )
        };
        let c = Contraction::new(vec![f(0, 1, 2, 3), f(0, 1, 4, 5), f(2, 3, 4, 5)], vec![]);
        c.validate().unwrap();
        assert_eq!(c.weight(), -6);
    }

    #[test]
    fn weight_of_differentiated_pair() {
        // contr(∇^(2)W ⊗ ∇^(2)W) complete -> weight -8
        let mk = |p: &[u32]| {
            Factor::new(
                FactorKind::Weyl,
                2,
                p.iter().map(|&i| SlotRole::Paired(i)).collect(),
            )
        };
        let c = Contraction::new(vec![mk(&[0, 1, 2, 3, 4, 5]), mk(&[0, 1, 2, 3, 4, 5])], vec![]);
        c.validate().unwrap();
        assert_eq!(c.weight(), -8);
    }

    #[test]
    fn delta_counts() {
        // ∇^l W_{ijkl} inside a contraction contributes 1 to δ_W
        let f1 = Factor::new(
            FactorKind::Weyl,
            1,
            vec![
                SlotRole::Paired(0),
                SlotRole::Paired(1),
                SlotRole::Paired(2),
                SlotRole::Paired(3),
                SlotRole::Paired(0),
            ],
        );
        let f2 = Factor::new(
            FactorKind::Weyl,
            1,
            vec![
                SlotRole::Paired(4),
                SlotRole::Paired(1),
                SlotRole::Paired(2),
                SlotRole::Paired(3),
                SlotRole::Paired(4),
            ],
        );
        let c = Contraction::new(vec![f1, f2], vec![]);
        c.validate().unwrap();
        assert_eq!(c.delta_count(), (2, 0, 0));

        // a lone Ricci factor: δ_R 1, q 1; scalar curvature: δ_R 2, q 1
        let ric = Factor::new(
            FactorKind::Ricci,
            0,
            vec![SlotRole::Paired(0), SlotRole::Paired(1)],
        );
        let ric2 = ric.clone();
        let c = Contraction::new(vec![ric, ric2], vec![]);
        assert_eq!(c.delta_count(), (0, 2, 2));

        let scal = Factor::new(FactorKind::ScalarCurv, 0, vec![]);
        let c = Contraction::new(vec![scal], vec![]);
        assert_eq!(c.delta_count(), (0, 2, 1));
    }

    #[test]
    fn malformed_pairing_detected() {
        let f1 = Factor::new(
            FactorKind::Weyl,
            0,
            vec![
                SlotRole::Paired(0),
                SlotRole::Paired(0),
                SlotRole::Paired(0),
                SlotRole::Paired(1),
            ],
        );
        let f2 = Factor::new(
            FactorKind::Weyl,
            0,
            vec![
                SlotRole::Paired(1),
                SlotRole::Paired(2),
                SlotRole::Paired(2),
                SlotRole::Paired(3),
            ],
        );
        let c = Contraction::new(vec![f1, f2], vec![]);
        assert!(matches!(c.validate(), Err(TensorError::MalformedPairing(_))));
    }

    #[test]
    fn weyl_square_is_weight_minus_four() {
        assert_eq!(weyl_square().weight(), -4);
    }
}
