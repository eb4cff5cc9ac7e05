use crate::coeff::RationalInN;
use crate::tensor::{Contraction, FactorKind, LinComb, ScalarName, SlotRole};
use serde_json::json;
use std::collections::HashMap;

fn kind_name(kind: &FactorKind) -> String {
    match kind {
        FactorKind::Riemann => "R".into(),
        FactorKind::Weyl => "W".into(),
        FactorKind::Ricci => "Ric".into(),
        FactorKind::ScalarCurv => "Scal".into(),
        FactorKind::Schouten => "P".into(),
        FactorKind::Metric => "g".into(),
        FactorKind::InverseMetric => "ginv".into(),
        FactorKind::ScalarField(ScalarName::Phi) => "phi".into(),
        FactorKind::ScalarField(ScalarName::Upsilon) => "ups".into(),
        FactorKind::ScalarField(ScalarName::Omega(k)) => format!("Om{k}"),
        FactorKind::AmbientRiemann => "AmbR".into(),
        FactorKind::Opaque { min_delta } => format!("Opaque{min_delta}"),
    }
}

/// Deterministic names for contracted pairs: x1, x2, ... in first-occurrence
/// order, skipping anything that collides with a free label.
fn pair_names(c: &Contraction) -> HashMap<u32, String> {
    let mut names = HashMap::new();
    let mut counter = 0usize;
    for f in &c.factors {
        for s in &f.slots {
            if let SlotRole::Paired(p) = s {
                if !names.contains_key(p) {
                    loop {
                        counter += 1;
                        let cand = format!("x{counter}");
                        if !c.free_labels.contains(&cand) {
                            names.insert(*p, cand);
                            break;
                        }
                    }
                }
            }
        }
    }
    names
}

fn role_name(c: &Contraction, names: &HashMap<u32, String>, s: &SlotRole) -> String {
    match s {
        SlotRole::Free(i) => c.free_labels[*i as usize].clone(),
        SlotRole::Paired(p) => names[p].clone(),
        SlotRole::FixedZero => "_0".into(),
        SlotRole::FixedInfinity => "_inf".into(),
    }
}

/// Text form; parses back to the same contraction.
pub fn print_text_contraction(c: &Contraction) -> String {
    if c.factors.is_empty() {
        return "1".into();
    }
    let names = pair_names(c);
    let mut parts = Vec::with_capacity(c.factors.len());
    for f in &c.factors {
        let mut s = String::new();
        if f.deriv_order > 0 {
            let derivs: Vec<String> =
                f.derivative_slots().iter().map(|r| role_name(c, &names, r)).collect();
            s.push_str(&format!("d({}) ", derivs.join(",")));
        }
        let intr: Vec<String> =
            f.intrinsic_slots().iter().map(|r| role_name(c, &names, r)).collect();
        s.push_str(&format!("{}[{}]", kind_name(&f.kind), intr.join(",")));
        parts.push(s);
    }
    let mut out = parts.join(" * ");
    if !c.free_labels.is_empty() {
        out.push_str(&format!(" free({})", c.free_labels.join(",")));
    }
    out
}

/// Text form of a whole linear combination, one term per line.
pub fn print_text(lc: &LinComb) -> String {
    let mut lines = Vec::new();
    for (c, coeff) in lc.terms() {
        if coeff.is_one() {
            lines.push(print_text_contraction(c));
        } else {
            lines.push(format!("({}) * {}", coeff, print_text_contraction(c)));
        }
    }
    if lines.is_empty() {
        lines.push("0".into());
    }
    lines.join("\n")
}

pub fn print_latex_contraction(c: &Contraction) -> String {
    if c.factors.is_empty() {
        return "1".into();
    }
    let names = pair_names(c);
    let mut parts = Vec::new();
    for f in &c.factors {
        let kind = match f.kind {
            FactorKind::Riemann => "R".to_string(),
            FactorKind::Weyl => "W".to_string(),
            FactorKind::Ricci => r"\mathrm{Ric}".to_string(),
            FactorKind::ScalarCurv => "R".to_string(),
            FactorKind::Schouten => "P".to_string(),
            FactorKind::Metric => "g".to_string(),
            FactorKind::InverseMetric => "g^{-1}".to_string(),
            FactorKind::ScalarField(ScalarName::Phi) => r"\phi".to_string(),
            FactorKind::ScalarField(ScalarName::Upsilon) => r"\upsilon".to_string(),
            FactorKind::ScalarField(ScalarName::Omega(k)) => format!(r"\Omega_{{{k}}}"),
            FactorKind::AmbientRiemann => r"\tilde R".to_string(),
            FactorKind::Opaque { min_delta } => format!(r"T^{{(\delta\ge {min_delta})}}"),
        };
        let sub = |roles: &[SlotRole]| -> String {
            roles
                .iter()
                .map(|r| match r {
                    SlotRole::FixedZero => "0".to_string(),
                    SlotRole::FixedInfinity => r"\infty".to_string(),
                    _ => role_name(c, &names, r),
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        if f.deriv_order > 0 {
            s.push_str(&format!(
                r"\nabla^{{({})}}_{{{}}}",
                f.deriv_order,
                sub(f.derivative_slots())
            ));
        }
        s.push_str(&kind);
        if f.kind.intrinsic_rank() > 0 || matches!(f.kind, FactorKind::Opaque { .. }) {
            s.push_str(&format!("_{{{}}}", sub(f.intrinsic_slots())));
        }
        parts.push(s);
    }
    let body = parts.join(r" \otimes ");
    if c.is_complete() {
        format!(r"\mathrm{{contr}}\left({body}\right)")
    } else {
        format!(r"\mathrm{{pcontr}}\left({body}\right)")
    }
}

pub fn print_latex(lc: &LinComb) -> String {
    let mut parts = Vec::new();
    for (c, coeff) in lc.terms() {
        parts.push(format!("{} \\cdot {}", coeff, print_latex_contraction(c)));
    }
    if parts.is_empty() {
        parts.push("0".into());
    }
    parts.join("\n + ")
}

fn contraction_json(c: &Contraction, coeff: Option<&RationalInN>) -> serde_json::Value {
    let names = pair_names(c);
    let (dw, dr, q) = c.delta_count();
    let factors: Vec<serde_json::Value> = c
        .factors
        .iter()
        .map(|f| {
            json!({
                "kind": kind_name(&f.kind),
                "deriv_order": f.deriv_order,
                "slots": f.slots.iter().map(|s| role_name(c, &names, s)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut v = json!({
        "sigma": c.length(),
        "weight": c.weight(),
        "delta_w": dw,
        "delta_r": dr,
        "q": q,
        "free": c.free_labels,
        "factors": factors,
        "text": print_text_contraction(c),
    });
    if let Some(k) = coeff {
        v["coeff"] = json!(k.to_string());
    }
    v
}

/// Stable machine-readable tree for tooling.
pub fn print_structured(lc: &LinComb) -> serde_json::Value {
    let terms: Vec<serde_json::Value> =
        lc.terms().map(|(c, k)| contraction_json(c, Some(k))).collect();
    json!({
        "terms": terms,
        "policy": { "max_length": lc.policy().max_length },
        "truncation": {
            "dropped": lc.log().dropped,
            "qr_corrections": lc.log().qr_corrections,
            "samples": lc.log().samples,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_contraction;
    use crate::tensor::{canonicalize, TruncationPolicy};

    #[test]
    fn text_roundtrip_on_canonical_terms() {
        for src in [
            "W[i,j,k,l] * W[i,j,k,l]",
            "d(l) W[i,j,k,l] * d(m) W[i,j,k,m]",
            "d(a,b) W[i,j,k,l] * W[i,j,k,l] free(a,b)",
            "Ric[a,b] * Ric[a,b]",
            "AmbR[_inf,j,k,l] * AmbR[_0,j,k,l]",
        ] {
            let c = parse_contraction(src).unwrap();
            let (canon, _) = canonicalize(&c);
            let printed = print_text_contraction(&canon);
            let reparsed = parse_contraction(&printed).unwrap();
            let (canon2, k2) = canonicalize(&reparsed);
            assert_eq!(canon, canon2, "roundtrip changed canonical key for {src}");
            assert!(k2.is_one());
        }
    }

    #[test]
    fn structured_carries_weight_and_deltas() {
        let c = parse_contraction("d(l) W[i,j,k,l] * d(m) W[i,j,k,m]").unwrap();
        let lc = LinComb::single(TruncationPolicy::unbounded(), RationalInN::one(), c);
        let v = print_structured(&lc);
        assert_eq!(v["terms"][0]["sigma"], 2);
        assert_eq!(v["terms"][0]["weight"], -6);
        assert_eq!(v["terms"][0]["delta_w"], 2);
    }
}
