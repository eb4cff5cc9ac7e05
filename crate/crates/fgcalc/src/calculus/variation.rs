//! First conformal variation.
//!
//! For a weight-w contraction C the engine computes the first-order part of
//! `e^{-w t φ} C(e^{2tφ} g)` in t, keeping only terms where φ carries at
//! least one derivative (the underived-φ terms cancel against the weight
//! factor). The variation of each factor's derivative tower is computed
//! recursively from the transformation law of the Levi-Civita connection,
//!
//!   Γ'^c_{ab} = δ^c_a ∇_b φ + δ^c_b ∇_a φ − g_{ab} ∇^c φ,
//!
//! together with the core laws: W' = 2φW, R'_{ijkl} = 2φR − (g ∧ ∇²φ),
//! Ric' = −(n−2)∇²φ − gΔφ, Scal' = −2φR − 2(n−1)Δφ, P' = −∇²φ.

use super::{classify, weyl_decompose_lincomb, CalculusError, TermClass};
use crate::coeff::{PolyInN, RationalInN};
use crate::tensor::{
    Contraction, Factor, FactorKind, LinComb, ScalarName, SlotRole, TruncationPolicy,
};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PRole {
    Keep(SlotRole),
    Fresh(u32),
}

#[derive(Clone, Debug)]
struct PFactor {
    kind: FactorKind,
    deriv_order: usize,
    slots: Vec<PRole>,
}

#[derive(Clone, Debug)]
struct Piece {
    coeff: RationalInN,
    factors: Vec<PFactor>,
    fresh: u32,
}

impl Piece {
    fn new(coeff: RationalInN, factors: Vec<PFactor>, fresh: u32) -> Self {
        Piece { coeff, factors, fresh }
    }
}

fn keep_all(roles: &[SlotRole]) -> Vec<PRole> {
    roles.iter().map(|r| PRole::Keep(*r)).collect()
}

fn phi(deriv: usize, slots: Vec<PRole>) -> PFactor {
    PFactor { kind: FactorKind::ScalarField(ScalarName::Phi), deriv_order: deriv, slots }
}

fn metric(a: PRole, b: PRole) -> PFactor {
    PFactor { kind: FactorKind::Metric, deriv_order: 0, slots: vec![a, b] }
}

/// Variation of the undifferentiated core, as replacement pieces carrying a
/// single φ factor each.
fn core_variation(f: &Factor) -> Result<Vec<Piece>, CalculusError> {
    let intr = f.intrinsic_slots();
    let core = |kind: FactorKind| PFactor {
        kind,
        deriv_order: 0,
        slots: keep_all(intr),
    };
    let two = RationalInN::int(2);
    Ok(match f.kind {
        FactorKind::Weyl => vec![Piece::new(two, vec![phi(0, vec![]), core(FactorKind::Weyl)], 0)],
        FactorKind::Riemann => {
            let (i, j, k, l) = (
                PRole::Keep(intr[0]),
                PRole::Keep(intr[1]),
                PRole::Keep(intr[2]),
                PRole::Keep(intr[3]),
            );
            let mut out =
                vec![Piece::new(two, vec![phi(0, vec![]), core(FactorKind::Riemann)], 0)];
            // −(g ∧ ∇²φ)_{ijkl}
            for (ga, gb, pa, pb, s) in [
                (i, k, j, l, -1i64),
                (i, l, j, k, 1),
                (j, k, i, l, 1),
                (j, l, i, k, -1),
            ] {
                out.push(Piece::new(
                    RationalInN::int(s),
                    vec![metric(ga, gb), phi(2, vec![pa, pb])],
                    0,
                ));
            }
            out
        }
        FactorKind::Ricci => {
            let (a, b) = (PRole::Keep(intr[0]), PRole::Keep(intr[1]));
            vec![
                Piece::new(
                    -RationalInN::from_poly(PolyInN::n_plus(-2)),
                    vec![phi(2, vec![a, b])],
                    0,
                ),
                Piece::new(
                    -RationalInN::one(),
                    vec![metric(a, b), phi(2, vec![PRole::Fresh(0), PRole::Fresh(0)])],
                    1,
                ),
            ]
        }
        FactorKind::ScalarCurv => vec![
            Piece::new(-two, vec![phi(0, vec![]), core(FactorKind::ScalarCurv)], 0),
            Piece::new(
                -RationalInN::int(2) * RationalInN::from_poly(PolyInN::n_plus(-1)),
                vec![phi(2, vec![PRole::Fresh(0), PRole::Fresh(0)])],
                1,
            ),
        ],
        FactorKind::Schouten => {
            let (a, b) = (PRole::Keep(intr[0]), PRole::Keep(intr[1]));
            vec![Piece::new(-RationalInN::one(), vec![phi(2, vec![a, b])], 0)]
        }
        FactorKind::Metric => {
            vec![Piece::new(two, vec![phi(0, vec![]), core(FactorKind::Metric)], 0)]
        }
        FactorKind::InverseMetric => vec![Piece::new(
            -two,
            vec![phi(0, vec![]), core(FactorKind::InverseMetric)],
            0,
        )],
        FactorKind::ScalarField(_) => vec![],
        FactorKind::AmbientRiemann | FactorKind::Opaque { .. } => {
            return Err(CalculusError::UnsupportedFactor(format!("{:?}", f.kind)))
        }
    })
}

/// The zeroth-order inner object `∇_{d_{start}..} core` as a piece factor.
fn inner_object(f: &Factor, start: usize) -> PFactor {
    PFactor {
        kind: f.kind,
        deriv_order: f.deriv_order - start,
        slots: keep_all(&f.slots[start..]),
    }
}

/// Variation of one factor including its derivative tower.
fn var_factor(f: &Factor) -> Result<Vec<Piece>, CalculusError> {
    let mut pieces = core_variation(f)?;
    for j in (0..f.deriv_order).rev() {
        let role_d = f.slots[j];
        let mut next: Vec<Piece> = Vec::new();
        // ∇_{d_j} of the first-order pieces (Leibniz; the metric is parallel)
        for p in &pieces {
            for t in 0..p.factors.len() {
                if matches!(
                    p.factors[t].kind,
                    FactorKind::Metric | FactorKind::InverseMetric
                ) {
                    continue;
                }
                let mut np = p.clone();
                np.factors[t].slots.insert(0, PRole::Keep(role_d));
                np.factors[t].deriv_order += 1;
                next.push(np);
            }
        }
        // connection corrections on the zeroth-order inner object
        for s_pos in (j + 1)..f.slots.len() {
            let role_s = f.slots[s_pos];
            let rel = s_pos - (j + 1);
            // −δ^c_{d} ∇_s φ: the s-slot takes the d-role
            let mut obj = inner_object(f, j + 1);
            obj.slots[rel] = PRole::Keep(role_d);
            next.push(Piece::new(
                -RationalInN::one(),
                vec![obj, phi(1, vec![PRole::Keep(role_s)])],
                0,
            ));
            // −δ^c_{s} ∇_d φ: object unchanged
            next.push(Piece::new(
                -RationalInN::one(),
                vec![inner_object(f, j + 1), phi(1, vec![PRole::Keep(role_d)])],
                0,
            ));
            // +g_{ds} ∇^c φ: the s-slot contracts φ, a metric carries (d, s)
            let mut obj = inner_object(f, j + 1);
            obj.slots[rel] = PRole::Fresh(0);
            next.push(Piece::new(
                RationalInN::one(),
                vec![
                    obj,
                    phi(1, vec![PRole::Fresh(0)]),
                    metric(PRole::Keep(role_d), PRole::Keep(role_s)),
                ],
                1,
            ));
        }
        pieces = next;
    }
    Ok(pieces)
}

fn assemble(c: &Contraction, h: usize, piece: &Piece) -> (RationalInN, Contraction) {
    let base = c.next_pair_id();
    let mut factors: Vec<Factor> = Vec::with_capacity(c.factors.len() + piece.factors.len());
    for (gi, g) in c.factors.iter().enumerate() {
        if gi != h {
            factors.push(g.clone());
        }
    }
    for pf in &piece.factors {
        let slots: Vec<SlotRole> = pf
            .slots
            .iter()
            .map(|r| match r {
                PRole::Keep(s) => *s,
                PRole::Fresh(k) => SlotRole::Paired(base + k),
            })
            .collect();
        factors.push(Factor::new(pf.kind, pf.deriv_order, slots));
    }
    (piece.coeff.clone(), Contraction::new(factors, c.free_labels.clone()))
}

/// First conformal variation, keeping the factor kinds of the input
/// (Weyl stays Weyl). Terms where φ carries no derivative are excluded.
/// The result lives modulo contractions of length ≥ length(c) + 2.
pub fn image1(c: &Contraction) -> Result<LinComb, CalculusError> {
    let policy = TruncationPolicy::mod_length(c.length() + 1);
    let mut out = LinComb::new(policy);
    for (h, f) in c.factors.iter().enumerate() {
        for piece in var_factor(f)? {
            let bare = piece
                .factors
                .iter()
                .any(|pf| matches!(pf.kind, FactorKind::ScalarField(ScalarName::Phi)) && pf.deriv_order == 0);
            if bare {
                continue; // cancels against the conformal weight factor
            }
            let (k, nc) = assemble(c, h, &piece);
            out.add_term(k, nc);
        }
    }
    Ok(out)
}

/// Linear extension of `image1`, carried under the operand's policy.
pub fn image1_lincomb(lc: &LinComb) -> Result<LinComb, CalculusError> {
    let mut out = LinComb::new(lc.policy());
    out.merge_log(lc.log());
    for (c, k) in lc.terms() {
        let v = image1(c)?.with_policy(lc.policy()).scale(k);
        out = out.add(&v);
    }
    Ok(out)
}

/// The first variation expressed over Riemann-family factors, with the term
/// census of the variation classes.
#[derive(Clone, Debug)]
pub struct VariationResult {
    pub terms: LinComb,
    pub classes: BTreeMap<TermClass, usize>,
}

pub fn conformal_variation(c: &Contraction) -> Result<VariationResult, CalculusError> {
    let w_form = image1(c)?;
    let terms = weyl_decompose_lincomb(&w_form);
    let sigma = c.length();
    let mut classes: BTreeMap<TermClass, usize> = BTreeMap::new();
    for (t, _) in terms.terms() {
        let cls = classify(t, sigma)?;
        *classes.entry(cls).or_insert(0) += 1;
    }
    Ok(VariationResult { terms, classes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_contraction;

    #[test]
    fn weyl_square_variation_vanishes() {
        // |W|^2 scales exactly; its first variation has no derivative-φ terms
        let c = parse_contraction("W[i,j,k,l] * W[i,j,k,l]").unwrap();
        let v = image1(&c).unwrap();
        assert!(v.is_empty(), "got:\n{v}");
    }

    #[test]
    fn scalar_tower_variation_matches_hand_computation() {
        // Image¹[Δφ-free tower]: var(∇_a∇_bΩ) = −∇_aφ∇_bΩ − ∇_bφ∇_aΩ
        //                                       + g_{ab}∇^cφ∇_cΩ
        // contracted here as ΔΩ against nothing else: var(ΔΩ) = (n−2)∇^cφ∇_cΩ
        let c = parse_contraction("d(a,a) Om1[]").unwrap();
        let v = image1(&c).unwrap();
        assert_eq!(v.len(), 1);
        let (term, coeff) = v.terms().next().unwrap();
        assert_eq!(coeff, &RationalInN::from_poly(PolyInN::n_plus(-2)));
        assert_eq!(term.length(), 2);
    }

    #[test]
    fn ricci_variation_trace() {
        // Image¹[R] for the scalar curvature factor alone:
        // −2(n−1)Δφ (the bare −2φR term is excluded)
        let c = parse_contraction("Scal[]").unwrap();
        let v = image1(&c).unwrap();
        assert_eq!(v.len(), 1);
        let (term, coeff) = v.terms().next().unwrap();
        assert_eq!(
            coeff,
            &(-RationalInN::int(2) * RationalInN::from_poly(PolyInN::n_plus(-1)))
        );
        assert!(term.factors.iter().any(|f| f.is_laplacian_scalar()));
    }
}
