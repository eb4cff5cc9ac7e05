//! Riemannian operations on contractions: Weyl/Schouten decomposition,
//! conformal variation, divergences, the term taxonomy, and the formal
//! factor-substitution rewrites.

mod bianchi;
mod variation;

pub use bianchi::{first_bianchi_generators, second_bianchi_generators};
pub use variation::{conformal_variation, image1, image1_lincomb, VariationResult};

use crate::coeff::{PolyInN, RationalInN};
use crate::tensor::{
    Contraction, Factor, FactorKind, LinComb, ScalarName, SlotRole, TruncationPolicy,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CalculusError {
    #[error("conformal variation is not defined for factor kind {0}")]
    UnsupportedFactor(String),
    #[error("term has no scalar-field factor of the varied function")]
    NoPhiFactor,
    #[error("no factor of the form ∇_l W_{{ijk}}^l is present")]
    MissingInternalFactor,
    #[error("`{0}` is not a free label")]
    NotAFreeLabel(String),
    #[error("wrong form: {0}")]
    WrongForm(String),
    #[error("the gradient factor contracts a non-derivative slot")]
    EraseAgainstInternalIndex,
    #[error("invalid term: {0}")]
    InvalidTerm(String),
}

// ---------------------------------------------------------------------------
// Weyl and Schouten decomposition
// ---------------------------------------------------------------------------

fn one_over(p: PolyInN) -> RationalInN {
    RationalInN::new(PolyInN::one(), p).unwrap()
}

fn n_minus(k: i64) -> PolyInN {
    PolyInN::n_plus(-k)
}

/// Expands every Weyl factor via W = R - P∧g with the Schouten tensor
/// written out in Ricci and scalar curvature. Derivatives distribute onto
/// the curvature factor since the metric is parallel.
pub fn weyl_decompose(c: &Contraction, policy: TruncationPolicy) -> LinComb {
    let mut out = LinComb::new(policy);
    decompose_into(&mut out, RationalInN::one(), c.clone());
    out
}

/// Linearly extends `weyl_decompose`.
pub fn weyl_decompose_lincomb(lc: &LinComb) -> LinComb {
    let mut out = LinComb::new(lc.policy());
    out.merge_log(lc.log());
    for (c, k) in lc.terms() {
        decompose_into(&mut out, k.clone(), c.clone());
    }
    out
}

fn decompose_into(out: &mut LinComb, coeff: RationalInN, c: Contraction) {
    let Some(fi) = c
        .factors
        .iter()
        .position(|f| matches!(f.kind, FactorKind::Weyl | FactorKind::Schouten))
    else {
        out.add_term(coeff, c);
        return;
    };
    let f = c.factors[fi].clone();
    match f.kind {
        FactorKind::Weyl => {
            let d = f.deriv_order;
            let derivs: Vec<SlotRole> = f.derivative_slots().to_vec();
            let intr: Vec<SlotRole> = f.intrinsic_slots().to_vec();
            let (i, j, k, l) = (intr[0], intr[1], intr[2], intr[3]);
            // W = R - (1/(n-2)) Ric∧g + (1/((n-1)(n-2))) R (g_ik g_jl - g_il g_jk)
            let mut riemann = f.clone();
            riemann.kind = FactorKind::Riemann;
            decompose_into(out, coeff.clone(), replace(&c, fi, vec![riemann]));

            let inv_nm2 = one_over(n_minus(2));
            let ric_pieces = [
                (i, k, j, l, -1i64),
                (i, l, j, k, 1),
                (j, k, i, l, 1),
                (j, l, i, k, -1),
            ];
            for (a, b, x, y, s) in ric_pieces {
                let ric = Factor::new(
                    FactorKind::Ricci,
                    d,
                    derivs.iter().cloned().chain([a, b]).collect(),
                );
                let metric = Factor::new(FactorKind::Metric, 0, vec![x, y]);
                let k2 = coeff.clone() * RationalInN::int(s) * inv_nm2.clone();
                decompose_into(out, k2, replace(&c, fi, vec![ric, metric]));
            }

            let n1n2 = RationalInN::from_poly(n_minus(1)) * RationalInN::from_poly(n_minus(2));
            let inv = RationalInN::one().checked_div(&n1n2).unwrap();
            let scal_pieces = [(i, k, j, l, 1i64), (i, l, j, k, -1)];
            for (a, b, x, y, s) in scal_pieces {
                let scal = Factor::new(FactorKind::ScalarCurv, d, derivs.clone());
                let g1 = Factor::new(FactorKind::Metric, 0, vec![a, b]);
                let g2 = Factor::new(FactorKind::Metric, 0, vec![x, y]);
                let k2 = coeff.clone() * RationalInN::int(s) * inv.clone();
                decompose_into(out, k2, replace(&c, fi, vec![scal, g1, g2]));
            }
        }
        FactorKind::Schouten => {
            // P = (Ric - R g / (2(n-1))) / (n-2)
            let d = f.deriv_order;
            let derivs: Vec<SlotRole> = f.derivative_slots().to_vec();
            let intr: Vec<SlotRole> = f.intrinsic_slots().to_vec();
            let inv_nm2 = one_over(n_minus(2));
            let mut ric = f.clone();
            ric.kind = FactorKind::Ricci;
            decompose_into(out, coeff.clone() * inv_nm2.clone(), replace(&c, fi, vec![ric]));
            let scal = Factor::new(FactorKind::ScalarCurv, d, derivs);
            let g1 = Factor::new(FactorKind::Metric, 0, intr);
            let two_n1_n2 = RationalInN::int(2)
                * RationalInN::from_poly(n_minus(1))
                * RationalInN::from_poly(n_minus(2));
            let k2 = -coeff.clone() * RationalInN::one().checked_div(&two_n1_n2).unwrap();
            decompose_into(out, k2, replace(&c, fi, vec![scal, g1]));
        }
        _ => unreachable!(),
    }
}

/// Replaces factor `fi` by the given factors (pair ids must already be
/// consistent with the rest of the contraction).
fn replace(c: &Contraction, fi: usize, with: Vec<Factor>) -> Contraction {
    let mut factors = Vec::with_capacity(c.factors.len() + with.len());
    for (gi, g) in c.factors.iter().enumerate() {
        if gi == fi {
            factors.extend(with.iter().cloned());
        } else {
            factors.push(g.clone());
        }
    }
    Contraction::new(factors, c.free_labels.clone())
}

// ---------------------------------------------------------------------------
// Divergences
// ---------------------------------------------------------------------------

/// Full divergence over the free label `label`: one term per factor, the new
/// derivative contracting the slot that carried the label.
pub fn div(c: &Contraction, label: &str, policy: TruncationPolicy) -> Result<LinComb, CalculusError> {
    divergence(c, label, policy, |_, _| true)
}

/// Restricted divergence: the derivative may hit neither the factor carrying
/// the free index nor any gradient factor of φ or υ.
pub fn xdiv(c: &Contraction, label: &str, policy: TruncationPolicy) -> Result<LinComb, CalculusError> {
    let (host, _) = c
        .find_free(label)
        .map_err(|_| CalculusError::NotAFreeLabel(label.to_string()))?;
    divergence(c, label, policy, move |ti, f| {
        if ti == host {
            return false;
        }
        !(f.is_gradient_scalar()
            && matches!(
                f.kind,
                FactorKind::ScalarField(ScalarName::Phi) | FactorKind::ScalarField(ScalarName::Upsilon)
            ))
    })
}

fn divergence<P: Fn(usize, &Factor) -> bool>(
    c: &Contraction,
    label: &str,
    policy: TruncationPolicy,
    allow: P,
) -> Result<LinComb, CalculusError> {
    let (_, _) = c
        .find_free(label)
        .map_err(|_| CalculusError::NotAFreeLabel(label.to_string()))?;
    let idx = c.free_labels.iter().position(|l| l == label).unwrap() as u32;
    let pair = c.next_pair_id();
    let mut out = LinComb::new(policy);
    for (ti, f) in c.factors.iter().enumerate() {
        if matches!(f.kind, FactorKind::Metric | FactorKind::InverseMetric) {
            continue; // metric is parallel
        }
        if !allow(ti, f) {
            continue;
        }
        let mut nc = c.clone();
        // the slot that carried the free label becomes one end of the pair
        'outer: for g in &mut nc.factors {
            for s in &mut g.slots {
                if *s == SlotRole::Free(idx) {
                    *s = SlotRole::Paired(pair);
                    break 'outer;
                }
            }
        }
        nc.factors[ti].slots.insert(0, SlotRole::Paired(pair));
        nc.factors[ti].deriv_order += 1;
        nc.drop_free_label(idx);
        out.add_term(RationalInN::one(), nc);
    }
    Ok(out)
}

/// Iterated Xdiv over several free labels (in the given order).
pub fn xdiv_many(
    c: &Contraction,
    labels: &[&str],
    policy: TruncationPolicy,
) -> Result<LinComb, CalculusError> {
    let mut lc = LinComb::single(policy, RationalInN::one(), c.clone());
    for label in labels {
        let mut next = LinComb::new(policy);
        next.merge_log(lc.log());
        for (term, k) in lc.terms() {
            let d = xdiv(term, label, policy)?;
            next = next.add(&d.scale(k));
        }
        lc = next;
    }
    Ok(lc)
}

/// `Δ_r`: the sum over factors of replacing the factor by its Laplacian.
pub fn delta_r(c: &Contraction, policy: TruncationPolicy) -> LinComb {
    let mut out = LinComb::new(policy);
    for k in 0..c.factors.len() {
        if matches!(
            c.factors[k].kind,
            FactorKind::Metric | FactorKind::InverseMetric
        ) {
            continue;
        }
        out.add_term(RationalInN::one(), delta_r_at(c, k));
    }
    out
}

/// `Δ_r^k`: replace the k-th factor by its Laplacian.
pub fn delta_r_at(c: &Contraction, k: usize) -> Contraction {
    let mut nc = c.clone();
    let pair = nc.next_pair_id();
    let f = &mut nc.factors[k];
    f.slots.insert(0, SlotRole::Paired(pair));
    f.slots.insert(0, SlotRole::Paired(pair));
    f.deriv_order += 2;
    nc
}

/// `∇_i^τ`: prepend one free derivative to factor τ.
pub fn grad_at(c: &Contraction, tau: usize, label: &str) -> Contraction {
    let mut nc = c.clone();
    let idx = nc.free_labels.len() as u32;
    nc.free_labels.push(label.to_string());
    let f = &mut nc.factors[tau];
    f.slots.insert(0, SlotRole::Free(idx));
    f.deriv_order += 1;
    nc
}

// ---------------------------------------------------------------------------
// Skeletons, characters, classification
// ---------------------------------------------------------------------------

/// Kind-only skeleton: every ∇^(m)W becomes ∇^(m)R, pattern unchanged.
pub fn skeleton_kinds(c: &Contraction) -> Contraction {
    let mut nc = c.clone();
    for f in &mut nc.factors {
        if f.kind == FactorKind::Weyl {
            f.kind = FactorKind::Riemann;
        }
    }
    nc
}

/// Skeleton of a contraction whose internal contraction sits in a factor
/// `∇_l W_{ijk}^l`: that factor becomes `∇_l φ · R_{ijk}^l`, every other
/// Weyl factor becomes Riemann.
pub fn skeleton_with_phi(c: &Contraction) -> Result<Contraction, CalculusError> {
    let pos = c.factors.iter().position(|f| {
        f.kind == FactorKind::Weyl && f.deriv_order == 1 && {
            let d = f.slots[0];
            f.intrinsic_slots().iter().any(|s| match (d, s) {
                (SlotRole::Paired(a), SlotRole::Paired(b)) => a == *b,
                _ => false,
            })
        }
    });
    let Some(fi) = pos else {
        return Err(CalculusError::MissingInternalFactor);
    };
    let mut nc = skeleton_kinds(c);
    let f = &mut nc.factors[fi];
    // drop the derivative slot; its internal partner now contracts ∇φ
    f.slots.remove(0);
    f.deriv_order -= 1;
    let phi = Factor::new(
        FactorKind::ScalarField(ScalarName::Phi),
        1,
        vec![f.slots
            .iter()
            .cloned()
            .find(|s| matches!(s, SlotRole::Paired(_)))
            .expect("internal partner slot")],
    );
    // the partner keeps its pair id; φ carries the other end (the removed
    // derivative slot's id is the same one)
    nc.factors.push(phi);
    Ok(nc)
}

/// Frees every internal contraction: for each internal pair, the derivative
/// end is deleted and the partner becomes a fresh free index. Internal pairs
/// between two derivative slots lose their first slot.
pub fn free_internal_contractions(c: &Contraction) -> Contraction {
    let mut nc = c.clone();
    loop {
        let mut found: Option<(usize, usize, usize)> = None;
        'scan: for (fi, f) in nc.factors.iter().enumerate() {
            for (si, s) in f.slots.iter().enumerate() {
                if let SlotRole::Paired(p) = s {
                    for (sj, t) in f.slots.iter().enumerate().skip(si + 1) {
                        if *t == SlotRole::Paired(*p) {
                            found = Some((fi, si, sj));
                            break 'scan;
                        }
                    }
                }
            }
        }
        let Some((fi, si, sj)) = found else { return nc };
        let f = &mut nc.factors[fi];
        let deriv = f.deriv_order;
        // prefer to delete a derivative slot
        let (del, keep) = if si < deriv {
            (si, sj)
        } else if sj < deriv {
            (sj, si)
        } else {
            (si, sj) // intrinsic-intrinsic: delete neither is possible; drop first
        };
        let label_idx = nc.free_labels.len() as u32;
        let keep = if del < keep { keep - 1 } else { keep };
        if del < f.deriv_order {
            f.deriv_order -= 1;
        }
        f.slots.remove(del);
        f.slots[keep] = SlotRole::Free(label_idx);
        let mut name = format!("i{}", label_idx + 1);
        while nc.free_labels.contains(&name) {
            name.push('_');
        }
        nc.free_labels.push(name);
    }
}

/// The character: decreasing rearrangement of per-factor free-index counts.
/// For a complete contraction, the character of the field obtained by
/// freeing all internal contractions.
pub fn character(c: &Contraction) -> Vec<usize> {
    let field = if c.is_complete() { free_internal_contractions(c) } else { c.clone() };
    let mut counts: Vec<usize> = field
        .factors
        .iter()
        .filter(|f| !matches!(f.kind, FactorKind::Metric | FactorKind::InverseMetric))
        .map(|f| {
            f.slots
                .iter()
                .filter(|s| matches!(s, SlotRole::Free(_)))
                .count()
        })
        .collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    counts
}

/// Term classes of the first conformal variation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TermClass {
    Target,
    Contributor,
    Dangerous,
    Irrelevant,
}

/// Classifies one variation term against the base length σ.
pub fn classify(c: &Contraction, sigma: usize) -> Result<TermClass, CalculusError> {
    let phi: Vec<&Factor> = c
        .factors
        .iter()
        .filter(|f| f.kind == FactorKind::ScalarField(ScalarName::Phi))
        .collect();
    if phi.len() != 1 {
        return Err(CalculusError::NoPhiFactor);
    }
    let phi = phi[0];
    let nu = phi.deriv_order;
    if nu == 0 {
        return Err(CalculusError::InvalidTerm(
            "bare φ factor is excluded from the first variation".into(),
        ));
    }
    if c.length() >= sigma + 2 {
        return Ok(TermClass::Irrelevant);
    }
    let (dw, dr, q) = c.delta_count();
    let delta = dw + dr;
    if nu == 1 {
        return Ok(if q + delta == 0 { TermClass::Target } else { TermClass::Contributor });
    }
    if phi.is_laplacian_scalar() {
        return Ok(if q + delta == 0 { TermClass::Dangerous } else { TermClass::Contributor });
    }
    Ok(TermClass::Irrelevant)
}

// ---------------------------------------------------------------------------
// Acceptability and type
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ContractionType {
    A1,
    A2,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Acceptability {
    pub acceptable: bool,
    pub contraction_type: Option<ContractionType>,
    pub removable: bool,
}

/// Acceptability and type of a contraction built from `∇^(m)R`, `∇^(b)Ω_h`
/// and one `∇φ` factor.
pub fn acceptable_and_type(c: &Contraction) -> Result<Acceptability, CalculusError> {
    if c.factors
        .iter()
        .any(|f| matches!(f.kind, FactorKind::Weyl | FactorKind::Schouten))
    {
        return Err(CalculusError::WrongForm(
            "expected Riemann-family and Ω factors only".into(),
        ));
    }
    let phi_idx = c
        .factors
        .iter()
        .position(|f| f.kind == FactorKind::ScalarField(ScalarName::Phi))
        .ok_or(CalculusError::NoPhiFactor)?;
    let phi = &c.factors[phi_idx];
    if phi.deriv_order != 1 {
        return Err(CalculusError::WrongForm("the φ factor must be ∇φ".into()));
    }

    let mut acceptable = true;
    for f in &c.factors {
        if let FactorKind::ScalarField(ScalarName::Omega(_)) = f.kind {
            if f.deriv_order < 2 {
                acceptable = false;
            }
        }
        if !matches!(f.kind, FactorKind::ScalarField(_)) && f.internal_pairs() > 0 {
            acceptable = false;
        }
        if matches!(f.kind, FactorKind::Ricci | FactorKind::ScalarCurv) {
            acceptable = false; // carries an implicit internal contraction
        }
    }

    // the ∇φ slot must contract some other factor
    let ty = match phi.slots[0] {
        SlotRole::Free(_) => {
            acceptable = false;
            None
        }
        SlotRole::Paired(p) => {
            let mut ty = None;
            for (fi, f) in c.factors.iter().enumerate() {
                if fi == phi_idx {
                    continue;
                }
                for (si, s) in f.slots.iter().enumerate() {
                    if *s == SlotRole::Paired(p) {
                        ty = Some(match f.kind {
                            FactorKind::ScalarField(ScalarName::Omega(_)) => ContractionType::B,
                            _ if si < f.deriv_order => ContractionType::A2,
                            _ => ContractionType::A1,
                        });
                    }
                }
            }
            ty
        }
        _ => None,
    };

    let mut deriv_total = 0usize;
    let mut omega_count = 0usize;
    for f in &c.factors {
        match f.kind {
            FactorKind::ScalarField(ScalarName::Omega(_)) => {
                omega_count += 1;
                deriv_total += f.deriv_order;
            }
            FactorKind::ScalarField(_) => {}
            _ => deriv_total += f.deriv_order,
        }
    }
    let removable = ty == Some(ContractionType::A1) && deriv_total > 2 * omega_count;
    Ok(Acceptability { acceptable, contraction_type: ty, removable })
}

// ---------------------------------------------------------------------------
// Weylify / Riccify / Erase
// ---------------------------------------------------------------------------

/// Replaces every `∇^(m)R_{ijkl}` by `∇^(m)W` and discards terms carrying
/// Ricci or scalar-curvature factors.
pub fn weylify(lc: &LinComb) -> LinComb {
    let mut out = LinComb::new(lc.policy());
    out.merge_log(lc.log());
    for (c, k) in lc.terms() {
        if c.factors
            .iter()
            .any(|f| matches!(f.kind, FactorKind::Ricci | FactorKind::ScalarCurv | FactorKind::Schouten))
        {
            continue;
        }
        let mut nc = c.clone();
        for f in &mut nc.factors {
            if f.kind == FactorKind::Riemann {
                f.kind = FactorKind::Weyl;
            }
        }
        out.add_term(k.clone(), nc);
    }
    out
}

/// Replaces each `∇^(p+2)Ω` factor by `∇^(p)Ric`, turns each `∇υ` into an
/// internal contraction on the factor it touched, and multiplies by `Δφ`.
pub fn riccify(lc: &LinComb) -> Result<LinComb, CalculusError> {
    let mut out = LinComb::new(lc.policy());
    out.merge_log(lc.log());
    for (c, k) in lc.terms() {
        let mut nc = c.clone();
        for f in &mut nc.factors {
            if let FactorKind::ScalarField(ScalarName::Omega(_)) = f.kind {
                if f.deriv_order < 2 {
                    return Err(CalculusError::WrongForm(
                        "Ω factor with fewer than two derivatives".into(),
                    ));
                }
                f.kind = FactorKind::Ricci;
                f.deriv_order -= 2; // last two derivative slots become Ric_{ab}
            }
        }
        let nc = internalize_gradients(&nc, ScalarName::Upsilon)?;
        let mut nc = nc;
        let pair = nc.next_pair_id();
        nc.factors.push(Factor::new(
            FactorKind::ScalarField(ScalarName::Phi),
            2,
            vec![SlotRole::Paired(pair), SlotRole::Paired(pair)],
        ));
        out.add_term(k.clone(), nc);
    }
    Ok(out)
}

/// Converts every gradient factor of the named scalar back into an internal
/// contraction: the slot it contracted gains a contracted derivative on its
/// own factor.
pub fn internalize_gradients(
    c: &Contraction,
    name: ScalarName,
) -> Result<Contraction, CalculusError> {
    let mut nc = c.clone();
    loop {
        let Some(gi) = nc
            .factors
            .iter()
            .position(|f| f.kind == FactorKind::ScalarField(name) && f.deriv_order == 1)
        else {
            return Ok(nc);
        };
        let slot = nc.factors[gi].slots[0];
        let SlotRole::Paired(p) = slot else {
            return Err(CalculusError::WrongForm("free gradient factor".into()));
        };
        nc.factors.remove(gi);
        let mut target: Option<usize> = None;
        for (fi, f) in nc.factors.iter().enumerate() {
            if f.slots.contains(&SlotRole::Paired(p)) {
                target = Some(fi);
                break;
            }
        }
        let fi = target.ok_or_else(|| {
            CalculusError::WrongForm("gradient contracted only against gradients".into())
        })?;
        // new derivative on the same factor, contracted against that slot:
        // reuse the pair id for the new internal contraction
        nc.factors[fi].slots.insert(0, SlotRole::Paired(p));
        nc.factors[fi].deriv_order += 1;
    }
}

/// Removes the unique `∇φ` factor and deletes the derivative slot it
/// contracted.
pub fn erase_nabla_phi(c: &Contraction) -> Result<Contraction, CalculusError> {
    let phis: Vec<usize> = c
        .factors
        .iter()
        .enumerate()
        .filter(|(_, f)| f.kind == FactorKind::ScalarField(ScalarName::Phi) && f.deriv_order == 1)
        .map(|(i, _)| i)
        .collect();
    if phis.len() != 1 {
        return Err(CalculusError::NoPhiFactor);
    }
    let gi = phis[0];
    let SlotRole::Paired(p) = c.factors[gi].slots[0] else {
        return Err(CalculusError::EraseAgainstInternalIndex);
    };
    let mut nc = c.clone();
    nc.factors.remove(gi);
    for f in &mut nc.factors {
        for (si, s) in f.slots.clone().iter().enumerate() {
            if *s == SlotRole::Paired(p) {
                if si >= f.deriv_order {
                    return Err(CalculusError::EraseAgainstInternalIndex);
                }
                f.slots.remove(si);
                f.deriv_order -= 1;
                return Ok(nc);
            }
        }
    }
    Err(CalculusError::EraseAgainstInternalIndex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_contraction;

    fn unbounded() -> TruncationPolicy {
        TruncationPolicy::unbounded()
    }

    #[test]
    fn decomposed_weyl_is_trace_free() {
        // g^{ik} applied to a single decomposed Weyl factor vanishes.
        let c = parse_contraction("W[a,j,a,l] free(j,l)").unwrap();
        let lc = weyl_decompose(&c, unbounded());
        assert!(lc.is_empty(), "trace of decomposed W should vanish, got:\n{lc}");
    }

    #[test]
    fn weyl_square_decomposition_matches_classical_identity() {
        // |W|^2 = |R|^2 - 4/(n-2) |Ric|^2 + 2/((n-1)(n-2)) R^2
        let c = parse_contraction("W[i,j,k,l] * W[i,j,k,l]").unwrap();
        let lhs = weyl_decompose(&c, unbounded());

        let mut rhs = LinComb::new(unbounded());
        rhs.add_term(
            RationalInN::one(),
            parse_contraction("R[i,j,k,l] * R[i,j,k,l]").unwrap(),
        );
        let m2 = RationalInN::from_poly(PolyInN::n_plus(-2));
        let m1 = RationalInN::from_poly(PolyInN::n_plus(-1));
        rhs.add_term(
            -RationalInN::int(4).checked_div(&m2).unwrap(),
            parse_contraction("Ric[a,b] * Ric[a,b]").unwrap(),
        );
        rhs.add_term(
            RationalInN::int(2).checked_div(&(m1 * m2)).unwrap(),
            parse_contraction("Scal[] * Scal[]").unwrap(),
        );
        let diff = lhs.sub(&rhs);
        assert!(diff.is_empty(), "difference:\n{diff}");
        // independent spot check at integer dimensions
        for n0 in [5i64, 6, 7] {
            for (_, k) in lhs.terms() {
                k.eval(n0).unwrap();
            }
        }
    }

    #[test]
    fn div_minus_xdiv_is_laplacian() {
        // xdiv_i[∇_i C] - div_i[∇_i C] = -Δ_r C for C = |W|^2-type σ=2
        let c = parse_contraction("d(a) W[i,j,k,l] * d(a) W[i,j,k,l]").unwrap();
        let policy = unbounded();
        let mut dv = LinComb::new(policy);
        let mut xv = LinComb::new(policy);
        for tau in 0..c.factors.len() {
            let g = grad_at(&c, tau, "zz");
            dv = dv.add(&div(&g, "zz", policy).unwrap());
            xv = xv.add(&xdiv(&g, "zz", policy).unwrap());
        }
        let diff = xv.sub(&dv);
        let minus_delta = delta_r(&c, policy).neg();
        assert_eq!(diff, minus_delta);
    }

    #[test]
    fn xdiv_term_count() {
        // xdiv of a rank-1 field with σ factors and no ∇φ hits σ-1 factors
        let c = parse_contraction("d(u) W[i,j,k,l] * W[i,j,k,m] * W[u,l,m,v] free(v)").unwrap();
        let before_merge = c.factors.len() - 1;
        let x = xdiv(&c, "v", unbounded()).unwrap();
        assert!(x.len() <= before_merge);
        assert!(!x.is_empty());
    }

    #[test]
    fn classify_basic_cases() {
        let t = parse_contraction("d(a) R[i,j,k,l] * R[i,j,k,l] * d(a) phi[]").unwrap();
        assert_eq!(classify(&t, 2).unwrap(), TermClass::Target);
        let t = parse_contraction("d(b,b) phi[] * Ric[a,c] * R[a,x,c,y] * R[q,x,q,y]").unwrap();
        assert_eq!(classify(&t, 3).unwrap(), TermClass::Contributor); // Δφ with q>0
        let t = parse_contraction("d(b,b) phi[] * R[a,x,c,y] * R[a,x,c,y]").unwrap();
        assert_eq!(classify(&t, 2).unwrap(), TermClass::Dangerous);
        let t =
            parse_contraction("d(a,b) phi[] * R[a,x,c,y] * R[b,x,c,y]").unwrap();
        assert_eq!(classify(&t, 2).unwrap(), TermClass::Irrelevant); // ν=2, not Δφ
    }

    #[test]
    fn skeleton_substitution() {
        let c = parse_contraction("d(l) W[i,j,k,l] * d(m) W[i,j,k,m]").unwrap();
        let s = skeleton_with_phi(&c).unwrap();
        // one R factor keeps the ∇φ contraction; the other W became R
        assert_eq!(
            s.factors
                .iter()
                .filter(|f| f.kind == FactorKind::Riemann)
                .count(),
            2
        );
        assert!(s.factors.iter().any(|f| f.is_gradient_scalar()));
        // idempotence of the kind-only variant
        let k = skeleton_kinds(&c);
        assert_eq!(skeleton_kinds(&k), k);
        // missing internal factor is an error
        let c2 = parse_contraction("W[i,j,k,l] * W[i,j,k,l]").unwrap();
        assert!(matches!(
            skeleton_with_phi(&c2),
            Err(CalculusError::MissingInternalFactor)
        ));
    }

    #[test]
    fn character_examples() {
        let c = parse_contraction(
            "d(a) W[i,j,k,l] * W[m,j,p,l] * W[q,r,s,v] free(a,i,k,m,p,q,r,s,v)",
        )
        .unwrap();
        // per-factor free counts: (3, 2, 4) -> sorted (4, 3, 2)
        assert_eq!(character(&c), vec![4, 3, 2]);
        // complete contraction: entries sum to number of internal contractions
        let c = parse_contraction("d(i,k) W[i,j,k,l] * W[x,j,y,l] * W[x,u,y,u]").unwrap();
        let kappa = character(&c);
        assert_eq!(kappa.iter().sum::<usize>(), 3);
    }

    #[test]
    fn acceptability_and_types() {
        // ∇φ against a derivative index of ∇^(m)R -> A2
        let c = parse_contraction("d(a,b) R[i,j,k,l] * d(a) phi[] * d(b,i,j,k,l) Om1[]").unwrap();
        let t = acceptable_and_type(&c).unwrap();
        assert_eq!(t.contraction_type, Some(ContractionType::A2));
        assert!(t.acceptable);
        // ∇φ against an internal index -> A1
        let c = parse_contraction("d(b) R[i,j,k,l] * d(i) phi[] * d(b,j,k,l) Om1[]").unwrap();
        let t = acceptable_and_type(&c).unwrap();
        assert_eq!(t.contraction_type, Some(ContractionType::A1));
        // a once-differentiated Ω is not acceptable
        let c = parse_contraction("d(a) R[i,j,k,l] * d(a) phi[] * d(i) Om1[] * d(j,k,l) Om2[]")
            .unwrap();
        let t = acceptable_and_type(&c).unwrap();
        assert!(!t.acceptable);
    }

    #[test]
    fn riccify_and_erase_roundtrip() {
        // riccify: ∇^(4)Ω and two ∇υ -> ∇^(2)Ric carrying two internal
        // contractions (realized as contracted derivative pairs), times Δφ
        let c = parse_contraction(
            "d(a,b,c,e) Om1[] * d(a) ups[] * d(b) ups[] * d(u,v) R[c,x,e,y] * R[u,x,v,y]",
        )
        .unwrap();
        let lc = LinComb::single(TruncationPolicy::unbounded(), RationalInN::one(), c);
        let r = riccify(&lc).unwrap();
        assert_eq!(r.len(), 1);
        let (term, _) = r.terms().next().unwrap();
        let ric = term
            .factors
            .iter()
            .find(|f| f.kind == FactorKind::Ricci)
            .expect("a Ricci factor");
        assert_eq!(ric.internal_pairs(), 2);
        assert_eq!(term.delta_count().2, 1); // exactly one Ricci factor
        assert!(term.factors.iter().any(|f| f.is_laplacian_scalar()));

        // erase ∘ (multiply back) preserves length
        let c = parse_contraction("d(a,b) R[i,j,k,l] * d(a) phi[] * d(b,i,j,k,l) Om1[]").unwrap();
        let e = erase_nabla_phi(&c).unwrap();
        assert_eq!(e.length(), c.length() - 1);
        // erasing against an intrinsic slot is rejected
        let c = parse_contraction("d(b) R[i,j,k,l] * d(i) phi[] * d(b,j,k,l) Om1[]").unwrap();
        assert!(matches!(
            erase_nabla_phi(&c),
            Err(CalculusError::EraseAgainstInternalIndex)
        ));
    }
}
