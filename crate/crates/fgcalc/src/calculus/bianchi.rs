//! Bianchi identities as explicit rewrite generators.
//!
//! The first identity is the cyclic symmetry on the last three intrinsic
//! slots. The differential one cycles a derivative slot with the first
//! antisymmetric pair; for the Riemann tensor the cycle vanishes exactly,
//! for the Weyl tensor it equals minus the cycle of ∇(P∧g), which the
//! generator carries expanded in Ricci and scalar curvature. Every
//! generator is an exactly vanishing linear combination, so lemma checks
//! may reduce residuals against their span without changing anything.

use super::{weyl_decompose_lincomb, CalculusError};
use crate::coeff::RationalInN;
use crate::tensor::{Contraction, Factor, FactorKind, LinComb, SlotRole, TruncationPolicy};

/// First-Bianchi generators of a term: for each Riemann/Weyl factor, the
/// 3-cycle over its last three intrinsic slots.
pub fn first_bianchi_generators(c: &Contraction, policy: TruncationPolicy) -> Vec<LinComb> {
    let mut out = Vec::new();
    for (fi, f) in c.factors.iter().enumerate() {
        if !matches!(f.kind, FactorKind::Riemann | FactorKind::Weyl) {
            continue;
        }
        let mut gen = LinComb::new(policy);
        for rot in 0..3 {
            let mut nc = c.clone();
            let d = f.deriv_order;
            let intr: Vec<SlotRole> = f.intrinsic_slots().to_vec();
            // cycle slots (1,2,3) by `rot`
            let rotated = [
                intr[0],
                intr[1 + rot % 3],
                intr[1 + (1 + rot) % 3],
                intr[1 + (2 + rot) % 3],
            ];
            for (k, r) in rotated.iter().enumerate() {
                nc.factors[fi].slots[d + k] = *r;
            }
            gen.add_term(RationalInN::one(), nc);
        }
        if !gen.is_empty() {
            out.push(gen);
        }
    }
    out
}

/// Differential-Bianchi generators: for each derivative slot of each
/// Riemann/Weyl factor, the 3-cycle of that slot with the first intrinsic
/// pair (plus, for Weyl, the ∇(P∧g) tail expanded in Ricci/scalar terms).
pub fn second_bianchi_generators(
    c: &Contraction,
    policy: TruncationPolicy,
) -> Result<Vec<LinComb>, CalculusError> {
    let mut out = Vec::new();
    for (fi, f) in c.factors.iter().enumerate() {
        if !matches!(f.kind, FactorKind::Riemann | FactorKind::Weyl) {
            continue;
        }
        for di in 0..f.deriv_order {
            let mut gen = LinComb::new(policy);
            let role_d = f.slots[di];
            let intr: Vec<SlotRole> = f.intrinsic_slots().to_vec();
            let cycles = [
                (role_d, intr[0], intr[1]),
                (intr[0], intr[1], role_d),
                (intr[1], role_d, intr[0]),
            ];
            for (rd, ri, rj) in cycles {
                let mut nc = c.clone();
                let g = &mut nc.factors[fi];
                g.slots[di] = rd;
                g.slots[f.deriv_order] = ri;
                g.slots[f.deriv_order + 1] = rj;
                gen.add_term(RationalInN::one(), nc);
                if f.kind == FactorKind::Weyl {
                    // + ∇_{rd}(P∧g)_{ri rj kl}, with the remaining derivative
                    // prefix of the factor intact; expands to Ricci/scalar.
                    let mut tail = LinComb::new(policy);
                    for (s, t) in pwedge_pieces(c, fi, di, rd, ri, rj) {
                        tail.add_term(RationalInN::int(s), t);
                    }
                    gen = gen.add(&weyl_decompose_lincomb(&tail));
                }
            }
            if !gen.is_empty() {
                out.push(gen);
            }
        }
    }
    Ok(out)
}

/// The factor `∇^{(m)}(P∧g)` with the cycled slot values, written as four
/// signed Schouten ⊗ metric products sharing the factor's other derivative
/// slots.
fn pwedge_pieces(
    c: &Contraction,
    fi: usize,
    di: usize,
    rd: SlotRole,
    ri: SlotRole,
    rj: SlotRole,
) -> Vec<(i64, Contraction)> {
    let f = &c.factors[fi];
    let intr = f.intrinsic_slots();
    let (rk, rl) = (intr[2], intr[3]);
    // derivative prefix: the original slots with slot di set to the cycled
    // role rd
    let mut derivs: Vec<SlotRole> = f.derivative_slots().to_vec();
    derivs[di] = rd;
    let mut out = Vec::new();
    // (P∧g)_{ijkl} = P_ik g_jl − P_il g_jk − P_jk g_il + P_jl g_ik
    for (pa, pb, ga, gb, s) in [
        (ri, rk, rj, rl, 1i64),
        (ri, rl, rj, rk, -1),
        (rj, rk, ri, rl, -1),
        (rj, rl, ri, rk, 1),
    ] {
        let mut factors: Vec<Factor> = Vec::with_capacity(c.factors.len() + 1);
        for (gi, g) in c.factors.iter().enumerate() {
            if gi == fi {
                let mut slots = derivs.clone();
                slots.push(pa);
                slots.push(pb);
                factors.push(Factor::new(FactorKind::Schouten, f.deriv_order, slots));
                factors.push(Factor::new(FactorKind::Metric, 0, vec![ga, gb]));
            } else {
                factors.push(g.clone());
            }
        }
        out.push((s, Contraction::new(factors, c.free_labels.clone())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_contraction;

    #[test]
    fn riemann_second_bianchi_cycle_vanishes_under_contraction() {
        // fully symmetric probe: ∇_r R_{ijkl} cycled and contracted against a
        // symmetric background vanishes only via the identity, so the
        // generator must be a nonzero 3-term combination in general position
        let c = parse_contraction("d(r) R[i,j,k,l] * d(r) R[i,j,k,l]").unwrap();
        let gens = second_bianchi_generators(&c, TruncationPolicy::unbounded()).unwrap();
        assert!(!gens.is_empty());
    }

    #[test]
    fn first_bianchi_generator_shape() {
        let c = parse_contraction("R[i,j,k,l] * R[i,j,k,l]").unwrap();
        let gens = first_bianchi_generators(&c, TruncationPolicy::unbounded());
        assert!(!gens.is_empty());
    }
}
