//! Canonical forms for contractions.
//!
//! Canonicalization has two phases. A rewrite phase splices metric factors
//! into the pairing, applies the zero rules (antisymmetric pairs, Weyl
//! traces) and rewrites intrinsic traces of Riemann/Ricci/Schouten factors
//! to their named contractions. A minimization phase then picks the unique
//! minimum serialization over the orbit under factor reordering,
//! contracted-pair relabeling, derivative-slot permutation (exact in the
//! quotient ring) and the algebraic symmetry group of each factor, tracking
//! the accumulated sign. A term whose minimum is reached with both signs is
//! identically zero.

use super::{Contraction, Factor, FactorKind, SlotRole};
use crate::coeff::{PolyInN, RationalInN};
use itertools::Itertools;
use std::cell::RefCell;
use std::collections::HashMap;

thread_local! {
    static CACHE: RefCell<HashMap<Contraction, (Contraction, RationalInN)>> =
        RefCell::new(HashMap::new());
}

/// Returns the canonical representative and the coefficient (sign and any
/// metric-trace factors of `n`) relating the input to it. A zero coefficient
/// means the input is identically zero by its symmetries.
pub fn canonicalize(c: &Contraction) -> (Contraction, RationalInN) {
    if let Some(hit) = CACHE.with(|m| m.borrow().get(c).cloned()) {
        return hit;
    }
    let out = canonicalize_uncached(c);
    CACHE.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() > 1_000_000 {
            m.clear();
        }
        m.insert(c.clone(), out.clone());
    });
    out
}

fn canonicalize_uncached(c: &Contraction) -> (Contraction, RationalInN) {
    let mut work = c.clone();
    let mut coeff = RationalInN::one();
    if !rewrite_fixpoint(&mut work, &mut coeff) {
        return (empty_like(c), RationalInN::zero());
    }
    let (min, sign_zero) = minimize(&work);
    if sign_zero {
        return (empty_like(c), RationalInN::zero());
    }
    let (canon, sign) = min;
    let coeff = if sign < 0 { -coeff } else { coeff };
    (canon, coeff)
}

fn empty_like(c: &Contraction) -> Contraction {
    Contraction::new(vec![], c.free_labels.clone())
}

/// Applies splice/trace/zero rewrites until stable. Returns false if the
/// term is identically zero.
fn rewrite_fixpoint(c: &mut Contraction, coeff: &mut RationalInN) -> bool {
    loop {
        // zero rules
        for f in &c.factors {
            match f.kind {
                FactorKind::Riemann | FactorKind::AmbientRiemann => {
                    let intr = f.intrinsic_slots();
                    if same_pair(&intr[0], &intr[1]) || same_pair(&intr[2], &intr[3]) {
                        return false;
                    }
                }
                FactorKind::Weyl => {
                    let intr = f.intrinsic_slots();
                    for a in 0..4 {
                        for b in a + 1..4 {
                            if same_pair(&intr[a], &intr[b]) {
                                return false; // antisymmetry or trace-freeness
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        if splice_one_metric(c, coeff) {
            continue;
        }
        if rewrite_one_trace(c, coeff) {
            continue;
        }
        return true;
    }
}

fn same_pair(a: &SlotRole, b: &SlotRole) -> bool {
    matches!((a, b), (SlotRole::Paired(x), SlotRole::Paired(y)) if x == y)
}

/// Splices away one metric factor that has at least one contracted slot.
fn splice_one_metric(c: &mut Contraction, coeff: &mut RationalInN) -> bool {
    let pos = c.factors.iter().position(|f| {
        matches!(f.kind, FactorKind::Metric | FactorKind::InverseMetric)
            && f.deriv_order == 0
            && f.slots.iter().any(|s| matches!(s, SlotRole::Paired(_)))
    });
    let Some(fi) = pos else { return false };
    let f = c.factors[fi].clone();
    let (a, b) = (f.slots[0], f.slots[1]);
    if same_pair(&a, &b) {
        // g^{ab} g_{ab} = n
        c.factors.remove(fi);
        *coeff = coeff.clone() * RationalInN::n();
        return true;
    }
    // a is contracted with some other slot; transfer b's role there.
    let (pair, other_role) = match (a, b) {
        (SlotRole::Paired(p), r) => (p, r),
        (r, SlotRole::Paired(p)) => (p, r),
        _ => unreachable!(),
    };
    c.factors.remove(fi);
    for f in &mut c.factors {
        for s in &mut f.slots {
            if *s == SlotRole::Paired(pair) {
                *s = other_role;
            }
        }
    }
    true
}

/// Rewrites one intrinsic trace: Riemann -> ±Ricci, Ricci -> scalar
/// curvature, Schouten trace -> R/(2(n-1)).
fn rewrite_one_trace(c: &mut Contraction, coeff: &mut RationalInN) -> bool {
    for fi in 0..c.factors.len() {
        let f = &c.factors[fi];
        match f.kind {
            FactorKind::Riemann => {
                let d = f.deriv_order;
                let intr: Vec<SlotRole> = f.intrinsic_slots().to_vec();
                // cross traces between the two antisymmetric pairs
                let combos = [(0usize, 2usize, 1i64, 1usize, 3usize),
                              (0, 3, -1, 1, 2),
                              (1, 2, -1, 0, 3),
                              (1, 3, 1, 0, 2)];
                for (x, y, sign, r1, r2) in combos {
                    if same_pair(&intr[x], &intr[y]) {
                        let mut slots: Vec<SlotRole> = f.slots[..d].to_vec();
                        slots.push(intr[r1]);
                        slots.push(intr[r2]);
                        c.factors[fi] = Factor::new(FactorKind::Ricci, d, slots);
                        if sign < 0 {
                            *coeff = -coeff.clone();
                        }
                        return true;
                    }
                }
            }
            FactorKind::Ricci | FactorKind::Schouten => {
                let d = f.deriv_order;
                let intr = f.intrinsic_slots();
                if same_pair(&intr[0], &intr[1]) {
                    let schouten = f.kind == FactorKind::Schouten;
                    let slots: Vec<SlotRole> = f.slots[..d].to_vec();
                    c.factors[fi] = Factor::new(FactorKind::ScalarCurv, d, slots);
                    if schouten {
                        // tr P = R / (2(n-1))
                        let half = RationalInN::new(
                            PolyInN::one(),
                            PolyInN::from_coeffs(vec![(-2).into(), 2.into()]),
                        )
                        .unwrap();
                        *coeff = coeff.clone() * half;
                    }
                    return true;
                }
            }
            _ => {}
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Orbit minimization
// ---------------------------------------------------------------------------

const TOK_FREE_BASE: u32 = 100;
const TOK_PAIR_BASE: u32 = 100_000;

/// Intrinsic-symmetry variants of a factor: permutations of its intrinsic
/// slots together with the sign they carry.
fn symmetry_variants(kind: FactorKind) -> Vec<(Vec<usize>, i8)> {
    match kind {
        FactorKind::Riemann | FactorKind::Weyl | FactorKind::AmbientRiemann => {
            let mut out = Vec::with_capacity(8);
            for swap_ij in [false, true] {
                for swap_kl in [false, true] {
                    for swap_pairs in [false, true] {
                        let mut p = vec![0usize, 1, 2, 3];
                        let mut sign = 1i8;
                        if swap_ij {
                            p.swap(0, 1);
                            sign = -sign;
                        }
                        if swap_kl {
                            p.swap(2, 3);
                            sign = -sign;
                        }
                        if swap_pairs {
                            p = vec![p[2], p[3], p[0], p[1]];
                        }
                        out.push((p, sign));
                    }
                }
            }
            out
        }
        FactorKind::Ricci
        | FactorKind::Schouten
        | FactorKind::Metric
        | FactorKind::InverseMetric => vec![(vec![0, 1], 1), (vec![1, 0], 1)],
        _ => vec![(vec![], 1)],
    }
}

struct Search<'a> {
    factors: &'a [Factor],
    best: Option<Vec<u32>>,
    best_sign: i8,
    /// minimum reached by elements of both signs -> the term vanishes
    sign_ambiguous: bool,
}

#[derive(Clone)]
struct State {
    tokens: Vec<u32>,
    pair_map: HashMap<u32, u32>,
    next_pair: u32,
    sign: i8,
    /// true while equal to the best prefix; false once strictly smaller
    tied: bool,
}

impl<'a> Search<'a> {
    fn token_for(&self, st: &mut State, role: SlotRole) -> u32 {
        match role {
            SlotRole::FixedZero => 1,
            SlotRole::FixedInfinity => 2,
            SlotRole::Free(i) => TOK_FREE_BASE + i,
            SlotRole::Paired(p) => {
                if let Some(m) = st.pair_map.get(&p) {
                    TOK_PAIR_BASE + m
                } else {
                    let id = st.next_pair;
                    st.pair_map.insert(p, id);
                    st.next_pair += 1;
                    TOK_PAIR_BASE + id
                }
            }
        }
    }

    /// Emit one token, comparing against the incumbent. Returns false if the
    /// stream is now strictly greater (prune).
    fn push(&self, st: &mut State, tok: u32) -> bool {
        let pos = st.tokens.len();
        if st.tied {
            if let Some(best) = &self.best {
                match tok.cmp(&best[pos]) {
                    std::cmp::Ordering::Greater => return false,
                    std::cmp::Ordering::Less => st.tied = false,
                    std::cmp::Ordering::Equal => {}
                }
            }
        }
        st.tokens.push(tok);
        true
    }

    fn finish(&mut self, st: State) {
        match &self.best {
            Some(best) if st.tied => {
                debug_assert_eq!(&st.tokens, best);
                if st.sign != self.best_sign {
                    self.sign_ambiguous = true;
                }
            }
            Some(_) => {
                self.best = Some(st.tokens);
                self.best_sign = st.sign;
                self.sign_ambiguous = false;
            }
            None => {
                self.best = Some(st.tokens);
                self.best_sign = st.sign;
                self.sign_ambiguous = false;
            }
        }
    }

    fn dfs_factor(&mut self, order: &[usize], k: usize, st: State) {
        if k == order.len() {
            self.finish(st);
            return;
        }
        let f = &self.factors[order[k]];
        let (c0, c1) = f.kind.order_code();
        for (perm, psign) in symmetry_variants(f.kind) {
            let mut st2 = st.clone();
            st2.sign *= psign;
            if !self.push(&mut st2, c0 as u32) || !self.push(&mut st2, c1 as u32) {
                continue;
            }
            if !self.push(&mut st2, f.deriv_order as u32) {
                continue;
            }
            if !self.push(&mut st2, f.slots.len() as u32) {
                continue;
            }
            let intr: Vec<SlotRole> = if f.kind.intrinsic_rank() > 0 {
                perm.iter().map(|&i| f.intrinsic_slots()[i]).collect()
            } else {
                f.intrinsic_slots().to_vec()
            };
            let derivs: Vec<SlotRole> = f.derivative_slots().to_vec();
            self.dfs_deriv(order, k, st2, derivs, intr);
        }
    }

    /// Choose derivative-slot order greedily with branching on tied choices,
    /// then emit intrinsic slots and recurse into the next factor.
    fn dfs_deriv(
        &mut self,
        order: &[usize],
        k: usize,
        st: State,
        remaining: Vec<SlotRole>,
        intr: Vec<SlotRole>,
    ) {
        if remaining.is_empty() {
            let mut st2 = st;
            for role in &intr {
                let tok = self.token_for(&mut st2, *role);
                if !self.push(&mut st2, tok) {
                    return;
                }
            }
            self.dfs_factor(order, k + 1, st2);
            return;
        }
        // Evaluate the immediate token of each remaining slot without
        // committing new pair ids.
        let mut keyed: Vec<(u32, usize)> = remaining
            .iter()
            .enumerate()
            .map(|(i, role)| {
                let tok = match role {
                    SlotRole::FixedZero => 1,
                    SlotRole::FixedInfinity => 2,
                    SlotRole::Free(idx) => TOK_FREE_BASE + idx,
                    SlotRole::Paired(p) => match st.pair_map.get(p) {
                        Some(m) => TOK_PAIR_BASE + m,
                        None => TOK_PAIR_BASE + st.next_pair,
                    },
                };
                (tok, i)
            })
            .collect();
        let min_tok = keyed.iter().map(|(t, _)| *t).min().unwrap();
        keyed.retain(|(t, _)| *t == min_tok);
        // Distinct choices: for already-known tokens the slots are
        // interchangeable; for fresh pairs branch over distinct pair ids.
        let mut seen_pairs: Vec<u32> = Vec::new();
        let mut choices: Vec<usize> = Vec::new();
        for (_, i) in &keyed {
            match remaining[*i] {
                SlotRole::Paired(p) if !st.pair_map.contains_key(&p) => {
                    if !seen_pairs.contains(&p) {
                        seen_pairs.push(p);
                        choices.push(*i);
                    }
                }
                _ => {
                    if choices.is_empty() || !matches!(remaining[choices[0]], r if r == remaining[*i])
                    {
                        choices.push(*i);
                    }
                    break; // identical concrete slots are interchangeable
                }
            }
        }
        for i in choices {
            let mut st2 = st.clone();
            let tok = self.token_for(&mut st2, remaining[i]);
            if !self.push(&mut st2, tok) {
                continue;
            }
            let mut rest = remaining.clone();
            rest.remove(i);
            self.dfs_deriv(order, k, st2, rest, intr.clone());
        }
    }
}

/// Static key + connectivity color used to limit factor-order candidates.
fn factor_color(c: &Contraction, fi: usize) -> Vec<u32> {
    let f = &c.factors[fi];
    // map pair id -> (factor, is_deriv_slot)
    let mut partner: HashMap<u32, Vec<(usize, bool)>> = HashMap::new();
    for (gi, g) in c.factors.iter().enumerate() {
        for (si, s) in g.slots.iter().enumerate() {
            if let SlotRole::Paired(p) = s {
                partner.entry(*p).or_default().push((gi, si < g.deriv_order));
            }
        }
    }
    let mut color: Vec<u32> = Vec::new();
    for (si, s) in f.slots.iter().enumerate() {
        let is_deriv = si < f.deriv_order;
        let v = match s {
            SlotRole::FixedZero => 1,
            SlotRole::FixedInfinity => 2,
            SlotRole::Free(i) => 10 + i,
            SlotRole::Paired(p) => {
                let ends = &partner[p];
                let other = ends.iter().find(|(gi, _)| *gi != fi);
                match other {
                    None => 1000, // internal
                    Some((gi, od)) => {
                        let (a, b) = c.factors[*gi].kind.order_code();
                        10_000
                            + (a as u32) * 64
                            + (b as u32) * 8
                            + (c.factors[*gi].deriv_order as u32) * 2
                            + (*od as u32)
                    }
                }
            }
        };
        color.push(v + if is_deriv { 0 } else { 500_000 });
    }
    let intr = color.split_off(f.deriv_order);
    color.sort_unstable();
    color.extend(intr);
    color
}

fn minimize(c: &Contraction) -> ((Contraction, i8), bool) {
    // group factors by (static key, color); candidate orders permute within
    // groups only
    let n = c.factors.len();
    let mut keys: Vec<(u16, u16, usize, usize, Vec<u32>)> = Vec::with_capacity(n);
    for (fi, f) in c.factors.iter().enumerate() {
        let (a, b) = f.kind.order_code();
        keys.push((a, b, f.deriv_order, f.slots.len(), factor_color(c, fi)));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| keys[x].cmp(&keys[y]));
    // group boundaries
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &idx {
        if let Some(last) = groups.last_mut() {
            if keys[last[0]] == keys[i] {
                last.push(i);
                continue;
            }
        }
        groups.push(vec![i]);
    }
    let mut search = Search { factors: &c.factors, best: None, best_sign: 1, sign_ambiguous: false };
    // cartesian product of in-group permutations
    let group_perms: Vec<Vec<Vec<usize>>> = groups
        .iter()
        .map(|g| g.iter().cloned().permutations(g.len()).collect())
        .collect();
    let mut chosen: Vec<usize> = vec![0; groups.len()];
    loop {
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for (gi, g) in group_perms.iter().enumerate() {
            order.extend(&g[chosen[gi]]);
        }
        let st = State {
            tokens: Vec::new(),
            pair_map: HashMap::new(),
            next_pair: 0,
            sign: 1,
            tied: true,
        };
        search.dfs_factor(&order, 0, st);
        // advance the odometer
        let mut g = 0;
        loop {
            if g == groups.len() {
                let tokens = search.best.clone().expect("minimization produced no candidate");
                let canon = rebuild(c, &tokens);
                return ((canon, search.best_sign), search.sign_ambiguous);
            }
            chosen[g] += 1;
            if chosen[g] < group_perms[g].len() {
                break;
            }
            chosen[g] = 0;
            g += 1;
        }
    }
}

/// Reconstructs the contraction described by a minimal token stream.
fn rebuild(c: &Contraction, tokens: &[u32]) -> Contraction {
    let mut t = tokens.iter().copied();
    let mut factors = Vec::with_capacity(c.factors.len());
    for _ in 0..c.factors.len() {
        let c0 = t.next().unwrap() as u16;
        let c1 = t.next().unwrap() as u16;
        let deriv = t.next().unwrap() as usize;
        let nslots = t.next().unwrap() as usize;
        let kind = kind_from_code(c0, c1);
        let mut slots = Vec::with_capacity(nslots);
        for _ in 0..nslots {
            let tok = t.next().unwrap();
            slots.push(if tok == 1 {
                SlotRole::FixedZero
            } else if tok == 2 {
                SlotRole::FixedInfinity
            } else if tok < TOK_PAIR_BASE {
                SlotRole::Free(tok - TOK_FREE_BASE)
            } else {
                SlotRole::Paired(tok - TOK_PAIR_BASE)
            });
        }
        factors.push(Factor { kind, deriv_order: deriv, slots });
    }
    Contraction::new(factors, c.free_labels.clone())
}

fn kind_from_code(c0: u16, c1: u16) -> FactorKind {
    use super::ScalarName::*;
    match (c0, c1) {
        (1, _) => FactorKind::Riemann,
        (2, _) => FactorKind::Weyl,
        (3, _) => FactorKind::Ricci,
        (4, _) => FactorKind::ScalarCurv,
        (5, _) => FactorKind::Schouten,
        (6, _) => FactorKind::Metric,
        (7, _) => FactorKind::InverseMetric,
        (8, _) => FactorKind::ScalarField(Phi),
        (9, _) => FactorKind::ScalarField(Upsilon),
        (10, k) => FactorKind::ScalarField(Omega(k as u8)),
        (20, _) => FactorKind::AmbientRiemann,
        (30, d) => FactorKind::Opaque { min_delta: d as u8 },
        _ => unreachable!("bad kind code"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SlotRole::*;

    fn weyl(d: usize, slots: Vec<SlotRole>) -> Factor {
        Factor::new(FactorKind::Weyl, d, slots)
    }

    #[test]
    fn antisymmetry_gives_minus_one() {
        // W_{jikl} X^{jikl} vs W_{ijkl} X^{ijkl}: swapping the first two slots
        // of one factor flips the sign.
        let a = Contraction::new(
            vec![
                weyl(0, vec![Paired(0), Paired(1), Paired(2), Paired(3)]),
                weyl(0, vec![Paired(0), Paired(1), Paired(2), Paired(3)]),
            ],
            vec![],
        );
        let b = Contraction::new(
            vec![
                weyl(0, vec![Paired(1), Paired(0), Paired(2), Paired(3)]),
                weyl(0, vec![Paired(0), Paired(1), Paired(2), Paired(3)]),
            ],
            vec![],
        );
        let (ka, ca) = canonicalize(&a);
        let (kb, cb) = canonicalize(&b);
        assert_eq!(ka, kb);
        assert_eq!(ca, -cb);
    }

    #[test]
    fn idempotent() {
        let a = Contraction::new(
            vec![
                weyl(1, vec![Paired(4), Paired(0), Paired(1), Paired(2), Paired(3)]),
                weyl(1, vec![Paired(4), Paired(0), Paired(1), Paired(2), Paired(3)]),
            ],
            vec![],
        );
        let (k1, c1) = canonicalize(&a);
        let (k2, c2) = canonicalize(&k1);
        assert_eq!(k1, k2);
        assert_eq!(c2, RationalInN::one());
        assert!(!c1.is_zero());
    }

    #[test]
    fn metric_trace_is_n() {
        let g = Factor::new(FactorKind::Metric, 0, vec![Paired(0), Paired(0)]);
        let c = Contraction::new(vec![g], vec![]);
        let (k, coeff) = canonicalize(&c);
        assert!(k.factors.is_empty());
        assert_eq!(coeff, RationalInN::n());
    }

    #[test]
    fn double_metric_trace_is_n() {
        // g_{ab} g_{cd} g^{ac} g^{bd} = n
        let m = |a, b| Factor::new(FactorKind::Metric, 0, vec![Paired(a), Paired(b)]);
        let mi = |a, b| Factor::new(FactorKind::InverseMetric, 0, vec![Paired(a), Paired(b)]);
        let c = Contraction::new(vec![m(0, 1), m(2, 3), mi(0, 2), mi(1, 3)], vec![]);
        let (k, coeff) = canonicalize(&c);
        assert!(k.factors.is_empty());
        assert_eq!(coeff, RationalInN::n());
    }

    #[test]
    fn riemann_trace_rewrites_to_ricci() {
        // g^{ik} R_{ijkl} (slots 0,2 paired) -> Ric_{jl}
        let r = Factor::new(
            FactorKind::Riemann,
            0,
            vec![Paired(0), Free(0), Paired(0), Free(1)],
        );
        let c = Contraction::new(vec![r], vec!["j".into(), "l".into()]);
        let (k, coeff) = canonicalize(&c);
        assert_eq!(k.factors.len(), 1);
        assert_eq!(k.factors[0].kind, FactorKind::Ricci);
        assert_eq!(coeff, RationalInN::one());
    }

    #[test]
    fn weyl_trace_vanishes() {
        let w = weyl(0, vec![Paired(0), Free(0), Paired(0), Free(1)]);
        let c = Contraction::new(vec![w], vec!["j".into(), "l".into()]);
        let (_, coeff) = canonicalize(&c);
        assert!(coeff.is_zero());
    }

    #[test]
    fn antisymmetric_vector_square_vanishes() {
        // W_{ijkl} X^i X^j = 0: here both first slots contract the two
        // derivative slots of one scalar function's Hessian-free gradient
        // pattern: use two gradient factors of the same scalar.
        let w = weyl(0, vec![Paired(0), Paired(1), Free(0), Free(1)]);
        let p1 = Factor::new(FactorKind::ScalarField(super::super::ScalarName::Phi), 1, vec![Paired(0)]);
        let p2 = Factor::new(FactorKind::ScalarField(super::super::ScalarName::Phi), 1, vec![Paired(1)]);
        let c = Contraction::new(vec![w, p1, p2], vec!["k".into(), "l".into()]);
        let (_, coeff) = canonicalize(&c);
        assert!(coeff.is_zero());
    }

    #[test]
    fn orbit_oracle_small() {
        use std::collections::BTreeSet;
        // A σ=2 contraction with derivative slots; brute-force a sample of the
        // orbit and require a single canonical key with consistent signs.
        let base = Contraction::new(
            vec![
                weyl(1, vec![Paired(0), Paired(1), Paired(2), Paired(3), Paired(4)]),
                weyl(1, vec![Paired(0), Paired(1), Paired(2), Paired(3), Paired(4)]),
            ],
            vec![],
        );
        let (key, coeff) = canonicalize(&base);
        assert!(!coeff.is_zero());
        let mut keys = BTreeSet::new();
        // factor swap × pair relabeling × intrinsic symmetry on each factor
        for swap in [false, true] {
            for (perm, psign) in symmetry_variants(FactorKind::Weyl) {
                let mut v = base.clone();
                if swap {
                    v.factors.swap(0, 1);
                }
                let intr: Vec<SlotRole> =
                    perm.iter().map(|&i| v.factors[0].intrinsic_slots()[i]).collect();
                for (j, r) in intr.into_iter().enumerate() {
                    let d = v.factors[0].deriv_order;
                    v.factors[0].slots[d + j] = r;
                }
                // relabel pairs
                for f in &mut v.factors {
                    for s in &mut f.slots {
                        if let Paired(p) = s {
                            *s = Paired((*p + 3) % 5);
                        }
                    }
                }
                let (k, c) = canonicalize(&v);
                assert!(!c.is_zero());
                let expected_sign = if psign < 0 { -coeff.clone() } else { coeff.clone() };
                assert_eq!(c, expected_sign, "sign mismatch for orbit element");
                keys.insert(k);
            }
        }
        assert_eq!(keys.len(), 1);
        assert!(keys.contains(&key));
    }
}
