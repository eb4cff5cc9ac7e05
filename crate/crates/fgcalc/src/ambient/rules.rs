//! Per-factor conversion of assigned ambient components into base-metric
//! factors: the break-up recursion over derivative slots plus the closed
//! catalog of core component facts. Anything the catalog does not state
//! exactly is emitted as an opaque marker with a lower bound on its internal
//! contractions, or logged as a quadratic curvature correction.

use super::AmbientError;
use crate::coeff::{PolyInN, RationalInN};
use crate::tensor::{Factor, FactorKind, SlotRole};

/// Index classes of the ambient coordinate frame at t = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmbIndex {
    Zero,
    Base,
    Infinity,
}

/// Entry of the ambient Christoffel table at t = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChristoffelEntry {
    ZeroEntry,
    /// Γ̃^k_{0j} = δ^k_j and Γ̃^∞_{0∞} = 1: a pure index substitution
    Delta,
    /// Γ̃^k_{ij}: the base Levi-Civita connection (absorbed into base ∇)
    BaseConnection,
    /// Γ̃^∞_{ij} = −g_{ij}
    MinusMetric,
    /// Γ̃^0_{ij} = −P_{ij}: quadratic in curvature once multiplied in
    SchoutenDown,
    /// Γ̃^k_{∞j} = g^{kl}P_{jl}: quadratic in curvature
    SchoutenUp,
}

/// The t = 1 Christoffel symbols of the ambient metric form
/// `2 dx^0 dx^{n+1} + g_{ij} dx^i dx^j`, symmetric in the lower pair.
pub struct ChristoffelTable;

impl ChristoffelTable {
    pub fn entry(upper: AmbIndex, lo1: AmbIndex, lo2: AmbIndex) -> ChristoffelEntry {
        use AmbIndex::*;
        use ChristoffelEntry::*;
        let (a, b) = sort2(lo1, lo2);
        match (upper, a, b) {
            (Zero, Base, Base) => SchoutenDown,
            (Base, Zero, Base) => Delta,
            (Base, Base, Base) => BaseConnection,
            (Base, Base, Infinity) => SchoutenUp,
            (Infinity, Zero, Infinity) => Delta,
            (Infinity, Base, Base) => MinusMetric,
            _ => ZeroEntry,
        }
    }
}

fn sort2(a: AmbIndex, b: AmbIndex) -> (AmbIndex, AmbIndex) {
    fn rank(x: AmbIndex) -> u8 {
        match x {
            AmbIndex::Zero => 0,
            AmbIndex::Base => 1,
            AmbIndex::Infinity => 2,
        }
    }
    if rank(a) <= rank(b) {
        (a, b)
    } else {
        (b, a)
    }
}

fn index_class(s: &SlotRole) -> AmbIndex {
    match s {
        SlotRole::FixedZero => AmbIndex::Zero,
        SlotRole::FixedInfinity => AmbIndex::Infinity,
        _ => AmbIndex::Base,
    }
}

/// One expansion alternative of a single ambient factor.
#[derive(Clone, Debug)]
pub struct ExpandedPiece {
    pub coeff: RationalInN,
    pub factors: Vec<Factor>,
}

/// Internal work representation: remaining derivative slots and the four
/// intrinsic slots of an ambient factor.
#[derive(Clone)]
struct Work {
    derivs: Vec<SlotRole>,
    intr: [SlotRole; 4],
    /// base derivative prefix already peeled (innermost last)
    prefix: Vec<SlotRole>,
}

struct Ctx {
    fresh: u32,
    qr: u64,
}

impl Ctx {
    fn fresh_pair(&mut self) -> u32 {
        let p = self.fresh;
        self.fresh += 1;
        p
    }
}

/// Expands one assigned ambient factor. Returns the pieces, the next unused
/// pair id, and the number of quadratic-correction log entries.
pub fn expand_factor(
    f: &Factor,
    fresh_base: u32,
) -> Result<(Vec<ExpandedPiece>, u32, u64), AmbientError> {
    debug_assert_eq!(f.kind, FactorKind::AmbientRiemann);
    let work = Work {
        derivs: f.derivative_slots().to_vec(),
        intr: [
            f.intrinsic_slots()[0],
            f.intrinsic_slots()[1],
            f.intrinsic_slots()[2],
            f.intrinsic_slots()[3],
        ],
        prefix: Vec::new(),
    };
    let mut ctx = Ctx { fresh: fresh_base, qr: 0 };
    let pieces = expand(&work, &mut ctx)?;
    Ok((pieces, ctx.fresh, ctx.qr))
}

fn is_base(s: &SlotRole) -> bool {
    matches!(s, SlotRole::Free(_) | SlotRole::Paired(_))
}

fn expand(w: &Work, ctx: &mut Ctx) -> Result<Vec<ExpandedPiece>, AmbientError> {
    // consume fixed-0 derivative slots: contraction with the dilation
    // direction scales by (−d* + 2)
    if let Some(di) = w.derivs.iter().position(|s| *s == SlotRole::FixedZero) {
        let mut w2 = w.clone();
        w2.derivs.remove(di);
        let d_star = w2
            .derivs
            .iter()
            .chain(w2.intr.iter())
            .filter(|s| **s != SlotRole::FixedZero)
            .count() as i64;
        let scale = RationalInN::int(-d_star + 2);
        if scale.is_zero() {
            return Ok(vec![]);
        }
        let inner = expand(&w2, ctx)?;
        return Ok(scaled(inner, &scale));
    }

    // peel the outermost base-valued derivative slot
    if let Some(di) = w.derivs.iter().position(is_base) {
        let role_d = w.derivs[di];
        let mut w_rest = w.clone();
        w_rest.derivs.remove(di);

        let mut out: Vec<ExpandedPiece> = Vec::new();

        // main branch: a true base covariant derivative
        {
            let mut w2 = w_rest.clone();
            w2.prefix.push(role_d);
            out.extend(expand(&w2, ctx)?);
        }

        // connection corrections on every remaining slot of the inner
        // object: each correction is −Γ̃^c_{d s} T_{(s→c)}, dispatched on
        // the table
        let total = w_rest.derivs.len() + 4;
        for s_pos in 0..total {
            let role_s = slot_at(&w_rest, s_pos);
            let cls = index_class(&role_s);
            for upper in [AmbIndex::Zero, AmbIndex::Base, AmbIndex::Infinity] {
                match ChristoffelTable::entry(upper, AmbIndex::Base, cls) {
                    ChristoffelEntry::ZeroEntry => {}
                    ChristoffelEntry::BaseConnection => {
                        // absorbed into the base covariant derivative
                    }
                    ChristoffelEntry::Delta => {
                        // Γ̃^k_{d0} = δ^k_d: the 0-slot is consumed, the
                        // peeled index moves into it
                        let mut w2 = w_rest.clone();
                        set_slot(&mut w2, s_pos, role_d);
                        let inner = expand(&w2, ctx)?;
                        out.extend(scaled(inner, &-RationalInN::one()));
                    }
                    ChristoffelEntry::MinusMetric => {
                        // Γ̃^∞_{ds} = −g_{ds}: slot s becomes ∞ and a metric
                        // is emitted; the correction enters with −Γ̃
                        let mut w2 = w_rest.clone();
                        set_slot(&mut w2, s_pos, SlotRole::FixedInfinity);
                        let inner = expand(&w2, ctx)?;
                        let metric =
                            Factor::new(FactorKind::Metric, 0, vec![role_d, role_s]);
                        for mut p in inner {
                            p.factors.push(metric.clone());
                            out.push(p);
                        }
                    }
                    ChristoffelEntry::SchoutenDown | ChristoffelEntry::SchoutenUp => {
                        // Schouten entries multiply a second curvature in:
                        // quadratic, truncated with a log entry
                        ctx.qr += 1;
                    }
                }
            }
        }
        return Ok(out);
    }

    // leaf: remaining derivative slots are all fixed ∞
    leaf_component(w, ctx)
}

fn slot_at(w: &Work, pos: usize) -> SlotRole {
    if pos < w.derivs.len() {
        w.derivs[pos]
    } else {
        w.intr[pos - w.derivs.len()]
    }
}

fn set_slot(w: &mut Work, pos: usize, role: SlotRole) {
    if pos < w.derivs.len() {
        w.derivs[pos] = role;
    } else {
        w.intr[pos - w.derivs.len()] = role;
    }
}

fn scaled(pieces: Vec<ExpandedPiece>, k: &RationalInN) -> Vec<ExpandedPiece> {
    pieces
        .into_iter()
        .map(|mut p| {
            p.coeff = p.coeff * k.clone();
            p
        })
        .collect()
}

fn one_over(p: RationalInN) -> RationalInN {
    RationalInN::one().checked_div(&p).unwrap()
}

/// Converts the leaf component using the stated facts about the ambient
/// curvature at t = 1.
fn leaf_component(w: &Work, ctx: &mut Ctx) -> Result<Vec<ExpandedPiece>, AmbientError> {
    let q_inf = w.derivs.len(); // all remaining derivative slots carry ∞
    let zeros: Vec<usize> = (0..4).filter(|&i| w.intr[i] == SlotRole::FixedZero).collect();
    let infs: Vec<usize> = (0..4)
        .filter(|&i| w.intr[i] == SlotRole::FixedInfinity)
        .collect();

    // antisymmetric pair fully assigned ∞ kills the component
    if (w.intr[0] == SlotRole::FixedInfinity && w.intr[1] == SlotRole::FixedInfinity)
        || (w.intr[2] == SlotRole::FixedInfinity && w.intr[3] == SlotRole::FixedInfinity)
    {
        return Ok(vec![]);
    }

    if q_inf == 0 {
        if !zeros.is_empty() {
            // a 0 on an intrinsic slot of the curvature core vanishes
            return Ok(vec![]);
        }
        return Ok(match infs.len() {
            0 => {
                // all-base core: the ambient curvature restricts to the Weyl
                // tensor
                vec![piece(
                    RationalInN::one(),
                    weyl_factor(w, 0, &[], w.intr.to_vec()),
                )]
            }
            1 => {
                let (sign, rest) = normalize_single_infinity(infs[0], &w.intr);
                let p = ctx.fresh_pair();
                let coeff = RationalInN::int(-sign)
                    * one_over(RationalInN::from_poly(PolyInN::n_plus(-3)));
                let mut intr = vec![SlotRole::Paired(p)];
                intr.extend(rest);
                vec![piece(coeff, weyl_factor(w, 1, &[SlotRole::Paired(p)], intr))]
            }
            2 => {
                // one ∞ in each antisymmetric pair
                let (sign, j, l) = normalize_double_infinity(&infs, &w.intr);
                let pa = ctx.fresh_pair();
                let pb = ctx.fresh_pair();
                let denom = RationalInN::from_poly(PolyInN::n_plus(-3))
                    * RationalInN::from_poly(PolyInN::n_plus(-4));
                let coeff = RationalInN::int(sign) * one_over(denom);
                ctx.qr += 1; // the stated Q(R) correction
                vec![piece(
                    coeff,
                    weyl_factor(
                        w,
                        2,
                        &[SlotRole::Paired(pa), SlotRole::Paired(pb)],
                        vec![
                            SlotRole::Paired(pa),
                            j,
                            SlotRole::Paired(pb),
                            l,
                        ],
                    ),
                )]
            }
            _ => unreachable!("three ∞ slots always cover an antisymmetric pair"),
        });
    }

    // ∞ on derivative slots
    if q_inf == 1 && infs.is_empty() && zeros.is_empty() {
        // ∇̃_∞ R̃ on base intrinsics: exact leading −1/(n−2)·Δ(…W) plus an
        // unspecified combination with at least two internal contractions,
        // plus Q(R)
        let p = ctx.fresh_pair();
        let coeff = -one_over(RationalInN::from_poly(PolyInN::n_plus(-2)));
        let lead = piece(
            coeff,
            weyl_factor(
                w,
                2,
                &[SlotRole::Paired(p), SlotRole::Paired(p)],
                w.intr.to_vec(),
            ),
        );
        ctx.qr += 1;
        let opaque = opaque_piece(w, 2);
        return Ok(vec![lead, opaque]);
    }

    // two or more ∞ in total: stated only as a combination with at least two
    // internal contractions plus Q(R)
    if q_inf + infs.len() >= 2 {
        ctx.qr += 1;
        return Ok(vec![opaque_piece(w, 2)]);
    }

    // ∞ on a derivative slot together with a surviving 0 on an intrinsic
    // slot: not stated exactly; such components carry at least one internal
    // contraction and only arise alongside a second ∞ elsewhere in the term
    if q_inf == 1 && !zeros.is_empty() {
        ctx.qr += 1;
        return Ok(vec![opaque_piece(w, 1)]);
    }

    Err(AmbientError::UnsupportedAmbientOrder(format!(
        "q_inf={q_inf}, intrinsic ∞ at {infs:?}, 0 at {zeros:?}"
    )))
}

fn piece(coeff: RationalInN, f: Factor) -> ExpandedPiece {
    ExpandedPiece { coeff, factors: vec![f] }
}

/// A Weyl factor carrying the peeled base prefix, extra leading derivative
/// slots, and the given intrinsic slots.
fn weyl_factor(w: &Work, extra: usize, extra_slots: &[SlotRole], intr: Vec<SlotRole>) -> Factor {
    let mut slots: Vec<SlotRole> = Vec::with_capacity(w.prefix.len() + extra + 4);
    slots.extend(extra_slots.iter().cloned());
    slots.extend(w.prefix.iter().cloned());
    slots.extend(intr);
    Factor::new(FactorKind::Weyl, w.prefix.len() + extra, slots)
}

/// An opaque marker preserving the factor's external connectivity.
fn opaque_piece(w: &Work, min_delta: u8) -> ExpandedPiece {
    let mut slots: Vec<SlotRole> = Vec::new();
    slots.extend(w.prefix.iter().cloned());
    for s in w.derivs.iter().chain(w.intr.iter()) {
        if is_base(s) {
            slots.push(*s);
        }
    }
    let n = slots.len();
    ExpandedPiece {
        coeff: RationalInN::one(),
        factors: vec![Factor {
            kind: FactorKind::Opaque { min_delta },
            deriv_order: n,
            slots,
        }],
    }
}

/// Moves a single intrinsic ∞ to the first slot using the algebraic
/// symmetries; returns the sign and the remaining three roles in order.
fn normalize_single_infinity(pos: usize, intr: &[SlotRole; 4]) -> (i64, Vec<SlotRole>) {
    match pos {
        0 => (1, vec![intr[1], intr[2], intr[3]]),
        1 => (-1, vec![intr[0], intr[2], intr[3]]),
        2 => (1, vec![intr[3], intr[0], intr[1]]),
        3 => (-1, vec![intr[2], intr[0], intr[1]]),
        _ => unreachable!(),
    }
}

/// Moves a double ∞ (one per antisymmetric pair) to slots 0 and 2; returns
/// the sign and the two remaining roles (j, l).
fn normalize_double_infinity(infs: &[usize], intr: &[SlotRole; 4]) -> (i64, SlotRole, SlotRole) {
    match (infs[0], infs[1]) {
        (0, 2) => (1, intr[1], intr[3]),
        (0, 3) => (-1, intr[1], intr[2]),
        (1, 2) => (-1, intr[0], intr[3]),
        (1, 3) => (1, intr[0], intr[2]),
        _ => unreachable!("same-pair double ∞ is handled earlier"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn christoffel_table_entries() {
        use AmbIndex::*;
        use ChristoffelEntry::*;
        assert_eq!(ChristoffelTable::entry(Zero, Base, Base), SchoutenDown);
        assert_eq!(ChristoffelTable::entry(Base, Zero, Base), Delta);
        assert_eq!(ChristoffelTable::entry(Base, Base, Zero), Delta); // symmetric
        assert_eq!(ChristoffelTable::entry(Base, Base, Base), BaseConnection);
        assert_eq!(ChristoffelTable::entry(Base, Infinity, Base), SchoutenUp);
        assert_eq!(ChristoffelTable::entry(Infinity, Zero, Infinity), Delta);
        assert_eq!(ChristoffelTable::entry(Infinity, Base, Base), MinusMetric);
        assert_eq!(ChristoffelTable::entry(Zero, Zero, Zero), ZeroEntry);
        assert_eq!(ChristoffelTable::entry(Infinity, Infinity, Infinity), ZeroEntry);
        assert_eq!(ChristoffelTable::entry(Zero, Zero, Infinity), ZeroEntry);
    }

    fn amb(deriv: Vec<SlotRole>, intr: [SlotRole; 4]) -> Factor {
        let mut slots = deriv.clone();
        slots.extend(intr);
        Factor::new(FactorKind::AmbientRiemann, deriv.len(), slots)
    }

    #[test]
    fn core_zero_rule() {
        // R̃ with an intrinsic slot valued 0 vanishes
        let f = amb(
            vec![],
            [
                SlotRole::FixedZero,
                SlotRole::Free(0),
                SlotRole::Free(1),
                SlotRole::Free(2),
            ],
        );
        let (pieces, _, _) = expand_factor(&f, 0).unwrap();
        assert!(pieces.is_empty());
    }

    #[test]
    fn single_infinity_core() {
        // R̃_{∞jkl} = −1/(n−3) ∇^i W_{ijkl}
        let f = amb(
            vec![],
            [
                SlotRole::FixedInfinity,
                SlotRole::Free(0),
                SlotRole::Free(1),
                SlotRole::Free(2),
            ],
        );
        let (pieces, _, qr) = expand_factor(&f, 10).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(qr, 0);
        let p = &pieces[0];
        assert_eq!(
            p.coeff,
            -RationalInN::one()
                .checked_div(&RationalInN::from_poly(PolyInN::n_plus(-3)))
                .unwrap()
        );
        let w = &p.factors[0];
        assert_eq!(w.kind, FactorKind::Weyl);
        assert_eq!(w.deriv_order, 1);
        assert_eq!(w.internal_pairs(), 1);
    }

    #[test]
    fn double_infinity_core() {
        // R̃_{∞j∞l} = 1/((n−3)(n−4)) ∇^{ik}W_{ijkl} + Q(R)
        let f = amb(
            vec![],
            [
                SlotRole::FixedInfinity,
                SlotRole::Free(0),
                SlotRole::FixedInfinity,
                SlotRole::Free(1),
            ],
        );
        let (pieces, _, qr) = expand_factor(&f, 10).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(qr, 1);
        let p = &pieces[0];
        let denom = RationalInN::from_poly(PolyInN::n_plus(-3))
            * RationalInN::from_poly(PolyInN::n_plus(-4));
        assert_eq!(p.coeff, RationalInN::one().checked_div(&denom).unwrap());
        assert_eq!(p.factors[0].internal_pairs(), 2);
    }

    #[test]
    fn both_infinity_in_pair_vanishes() {
        let f = amb(
            vec![],
            [
                SlotRole::FixedInfinity,
                SlotRole::FixedInfinity,
                SlotRole::Free(0),
                SlotRole::Free(1),
            ],
        );
        let (pieces, _, _) = expand_factor(&f, 0).unwrap();
        assert!(pieces.is_empty());
    }

    #[test]
    fn zero_derivative_scaling() {
        // ∇̃_0 on an otherwise base factor scales by (−d* + 2) with d* = 4
        let f = amb(
            vec![SlotRole::FixedZero],
            [
                SlotRole::Free(0),
                SlotRole::Free(1),
                SlotRole::Free(2),
                SlotRole::Free(3),
            ],
        );
        let (pieces, _, _) = expand_factor(&f, 0).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].coeff, RationalInN::int(-2));
        assert_eq!(pieces[0].factors[0].kind, FactorKind::Weyl);
        assert_eq!(pieces[0].factors[0].deriv_order, 0);
    }

    #[test]
    fn infinity_derivative_leading_term() {
        // ∇̃_∞ R̃ on base intrinsics: leading −1/(n−2) Δ W + opaque tail
        let f = amb(
            vec![SlotRole::FixedInfinity],
            [
                SlotRole::Free(0),
                SlotRole::Free(1),
                SlotRole::Free(2),
                SlotRole::Free(3),
            ],
        );
        let (pieces, _, qr) = expand_factor(&f, 0).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(qr, 1);
        let lead = &pieces[0];
        assert_eq!(
            lead.coeff,
            -RationalInN::one()
                .checked_div(&RationalInN::from_poly(PolyInN::n_plus(-2)))
                .unwrap()
        );
        assert_eq!(lead.factors[0].internal_pairs(), 1);
        assert!(matches!(pieces[1].factors[0].kind, FactorKind::Opaque { min_delta: 2 }));
    }
}
