//! Built-in desk-scale instances for the lemma suite: σ ∈ {2, 3} Weyl
//! contractions chosen to exercise each expansion rule. The CLI accepts user
//! instances too.

use crate::dsl::parse_contraction;
use crate::tensor::{Contraction, Factor, FactorKind, SlotRole};

pub struct Catalog;

impl Catalog {
    /// σ = 2 contraction with no internal contractions.
    pub fn sigma2_plain() -> Contraction {
        parse_contraction("W[i,j,k,l] * W[i,j,k,l]").unwrap()
    }

    /// σ = 2 with one derivative on each factor, no internal contractions.
    pub fn sigma2_differentiated() -> Contraction {
        parse_contraction("d(a) W[i,j,k,l] * d(a) W[i,j,k,l]").unwrap()
    }

    /// σ = 2 with the internal contraction in a ∇_l W factor on each side.
    pub fn sigma2_div_pair() -> Contraction {
        parse_contraction("d(l) W[i,j,k,l] * d(m) W[i,j,k,m]").unwrap()
    }

    /// σ = 3 complete contraction of undifferentiated Weyl factors.
    pub fn sigma3_plain() -> Contraction {
        parse_contraction("W[i,j,k,l] * W[i,j,m,p] * W[k,l,m,p]").unwrap()
    }

    /// σ = 3, m = (1,1,0), no internal contractions.
    pub fn sigma3_differentiated() -> Contraction {
        parse_contraction("d(a) W[i,j,k,l] * d(a) W[i,j,m,p] * W[k,l,m,p]").unwrap()
    }

    /// σ = 3, m = (2,2,0), no internal contractions.
    pub fn sigma3_coupled() -> Contraction {
        parse_contraction("d(a,b) W[i,j,k,l] * d(a,b) W[i,j,m,p] * W[k,l,m,p]").unwrap()
    }

    /// Instances for the ambient cancellation check: σ = 3, no internal
    /// contractions, per-factor derivative order ≤ 2.
    pub fn cancelweyl_instances() -> Vec<Contraction> {
        vec![Self::sigma3_plain(), Self::sigma3_differentiated(), Self::sigma3_coupled()]
    }

    /// Instances for the weight identity.
    pub fn weight_instances() -> Vec<Contraction> {
        vec![
            Self::sigma2_plain(),
            Self::sigma2_differentiated(),
            Self::sigma3_plain(),
            Self::sigma3_differentiated(),
            Self::sigma3_coupled(),
            Self::sigma3_stacked(),
        ]
    }

    /// The double-internal-contraction instance: an important factor
    /// ∇^{ik}W_{ijkl} inside a σ = 3 contraction.
    pub fn sigma3_stacked() -> Contraction {
        parse_contraction("d(i,k) W[i,j,k,l] * W[j,x,y,z] * W[l,x,y,z]").unwrap()
    }

    /// Its two-free-index parent: W_{i1 j i2 l} with the same companions.
    pub fn sigma3_stacked_freed() -> Contraction {
        parse_contraction("W[i1,j,i2,l] * W[j,x,y,z] * W[l,x,y,z] free(i1,i2)").unwrap()
    }

    /// The single-free-index stack fields C^{l,i1} / C^{l,i2}: the important
    /// factor becomes ∇^k W_{i1 j k l} / ∇^i W_{i j i2 l}.
    pub fn sigma3_stacked_single(first: bool) -> Contraction {
        if first {
            parse_contraction("d(k) W[i1,j,k,l] * W[j,x,y,z] * W[l,x,y,z] free(i1)").unwrap()
        } else {
            parse_contraction("d(i) W[i,j,i2,l] * W[j,x,y,z] * W[l,x,y,z] free(i2)").unwrap()
        }
    }

    /// Weight −n+2 style instance for the gradient identities, with σ = 3.
    pub fn sigma3_gradient_instance() -> Contraction {
        Self::sigma3_differentiated()
    }

    /// Instances with exactly one internal contraction, in ∇_lW normal form.
    pub fn l1_instances() -> Vec<Contraction> {
        vec![
            parse_contraction("d(l) W[i,j,k,l] * d(a) W[i,j,u,v] * W[a,k,u,v]").unwrap(),
            parse_contraction("d(l) W[i,j,k,l] * d(a,b) W[i,j,u,v] * d(b) W[a,k,u,v]").unwrap(),
            parse_contraction("d(l) W[i,j,k,l] * d(a) W[i,u,k,v] * W[a,j,u,v]").unwrap(),
            parse_contraction("d(l) W[i,j,k,l] * d(a,b,c) W[i,j,u,v] * d(b,c) W[a,k,u,v]")
                .unwrap(),
        ]
    }

    /// Instances with δ_W ≥ 2 (no targets expected in their variation).
    pub fn deep_instances() -> Vec<Contraction> {
        vec![
            Self::sigma2_div_pair(),
            parse_contraction("d(a,l) W[i,j,k,l] * d(a,m) W[i,j,k,m]").unwrap(),
            Self::sigma3_stacked(),
            parse_contraction("d(l) W[i,j,k,l] * d(m) W[p,q,k,m] * W[i,j,p,q]").unwrap(),
            parse_contraction("d(a,i,k) W[i,j,k,l] * d(a) W[j,x,y,z] * W[l,x,y,z]").unwrap(),
            parse_contraction("d(i,k) W[i,j,k,l] * d(x) W[j,u,v,x] * d(y) W[l,u,v,y]").unwrap(),
        ]
    }

    /// The ten classification instances of the partition check.
    pub fn classification_instances() -> Vec<(Contraction, bool)> {
        let mut out: Vec<(Contraction, bool)> = Vec::new();
        for c in Self::l1_instances() {
            out.push((c, true));
        }
        for c in Self::deep_instances() {
            out.push((c, false));
        }
        out
    }
}

/// Builds a single Weyl factor with `t_dd` derivative–derivative internal
/// pairs, `t_int` derivative–intrinsic internal pairs (on intrinsic slots 0
/// then 2), and `extra` additional free derivative slots. The remaining
/// intrinsic slots are free. Used by the transformation-law lemmas.
pub fn normalized_weyl_factor(t_dd: usize, t_int: usize, extra: usize) -> Contraction {
    assert!(t_int <= 2);
    let mut free_labels: Vec<String> = Vec::new();
    let mut slots: Vec<SlotRole> = Vec::new();
    let mut pair = 0u32;
    // derivative-intrinsic contractions occupy the first derivative slots
    let int_pairs: Vec<u32> = (0..t_int)
        .map(|_| {
            let p = pair;
            pair += 1;
            slots.push(SlotRole::Paired(p));
            p
        })
        .collect();
    for _ in 0..t_dd {
        slots.push(SlotRole::Paired(pair));
        slots.push(SlotRole::Paired(pair));
        pair += 1;
    }
    for u in 0..extra {
        slots.push(SlotRole::Free(free_labels.len() as u32));
        free_labels.push(format!("u{}", u + 1));
    }
    let deriv_order = slots.len();
    // intrinsic slots i, j, k, l
    for (pos, name) in ["i", "j", "k", "l"].iter().enumerate() {
        let attached = match pos {
            0 if t_int >= 1 => Some(int_pairs[0]),
            2 if t_int >= 2 => Some(int_pairs[1]),
            _ => None,
        };
        match attached {
            Some(p) => slots.push(SlotRole::Paired(p)),
            None => {
                slots.push(SlotRole::Free(free_labels.len() as u32));
                free_labels.push(name.to_string());
            }
        }
    }
    let f = Factor::new(FactorKind::Weyl, deriv_order, slots);
    let c = Contraction::new(vec![f], free_labels);
    c.validate().expect("normalized factor is well-formed");
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_instances_are_valid() {
        for c in Catalog::cancelweyl_instances() {
            c.validate().unwrap();
            assert_eq!(c.delta_count().0, 0);
            assert_eq!(c.length(), 3);
        }
        for c in Catalog::l1_instances() {
            c.validate().unwrap();
            assert_eq!(c.delta_count().0, 1, "expected δ_W = 1 in {c}");
            // the internal contraction sits in a ∇_l W factor
            let (canon, k) = crate::tensor::canonicalize(&c);
            assert!(!k.is_zero(), "instance collapses to zero: {c}");
            assert!(!canon.factors.is_empty());
        }
        for c in Catalog::deep_instances() {
            c.validate().unwrap();
            assert!(c.delta_count().0 >= 2, "expected δ_W ≥ 2 in {c}");
            let (_, k) = crate::tensor::canonicalize(&c);
            assert!(!k.is_zero(), "instance collapses to zero: {c}");
        }
    }

    #[test]
    fn normalized_factor_shapes() {
        let c = normalized_weyl_factor(1, 0, 0);
        assert_eq!(c.factors[0].deriv_order, 2);
        assert_eq!(c.free_labels.len(), 4);
        let c = normalized_weyl_factor(0, 1, 0);
        assert_eq!(c.factors[0].deriv_order, 1);
        assert_eq!(c.free_labels.len(), 3);
        let c = normalized_weyl_factor(1, 2, 2);
        assert_eq!(c.factors[0].deriv_order, 6);
        assert_eq!(c.free_labels.len(), 4); // u1, u2, j, l
    }
}
