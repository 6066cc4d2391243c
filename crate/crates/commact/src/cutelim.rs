//! Cut elimination for finite proofs without induction rules.
//!
//! The transformation follows the usual triple induction: primary measure is
//! the cut formula complexity, secondary the heights of the two premise
//! subtrees. Cuts are removed bottom-up; each single cut over cut-free
//! premises is reduced by permuting it upward until the cut formula is
//! principal on both sides, then replaced by cuts on strict subformulas.

use crate::calculus::{
    check, contains, infer, remove_one, CalculusId, CheckReport, Derivation, Rule,
};
use crate::formula::{Formula, Sequent};

/// Remove all cuts from a valid finite proof. The input is checked first and
/// rejected when invalid.
pub fn eliminate_cuts(d: &Derivation) -> Result<Derivation, CheckReport> {
    let report = check(d, CalculusId::OmegaFin);
    if !report.valid {
        return Err(report);
    }
    Ok(elim(d))
}

fn elim(d: &Derivation) -> Derivation {
    let (rule, conclusion, premises) = parts(d);
    let new_premises: Vec<Derivation> = premises.iter().map(elim).collect();
    if rule == Rule::Cut {
        let a = new_premises[0].conclusion_or_panic().succedent().clone();
        let mut it = new_premises.into_iter();
        let p1 = it.next().unwrap();
        let p2 = it.next().unwrap();
        reduce_cut(&a, &p1, &p2)
    } else {
        infer(rule, conclusion.clone(), new_premises)
    }
}

fn parts(d: &Derivation) -> (Rule, &Sequent, &[Derivation]) {
    match d {
        Derivation::Inference {
            rule,
            conclusion,
            premises,
            ..
        } => (*rule, conclusion, premises),
        Derivation::Backlink { .. } => unreachable!("no backlinks in finite proofs"),
    }
}

fn is_left_rule(r: Rule) -> bool {
    matches!(
        r,
        Rule::ZeroL | Rule::OneL | Rule::DotL | Rule::VeeL | Rule::WedgeL1 | Rule::WedgeL2 | Rule::ImpL
    )
}

/// Conclusion of the cut: union of the left antecedent with the right
/// antecedent minus one occurrence of the cut formula.
fn cut_conclusion(a: &Formula, p1: &Sequent, p2: &Sequent) -> Sequent {
    let mut ant = remove_one(p2.antecedent(), a).expect("cut formula in right antecedent");
    ant.extend_from_slice(p1.antecedent());
    Sequent::new(ant, p2.succedent().clone())
}

/// Eliminate a single cut between two cut-free proofs; `p1` derives `Π |- a`
/// and `p2` derives `Γ, a |- C`. Returns a cut-free proof of `Π, Γ |- C`.
fn reduce_cut(a: &Formula, p1: &Derivation, p2: &Derivation) -> Derivation {
    let (r1, c1, prems1) = parts(p1);
    let (r2, c2, _) = parts(p2);
    let conclusion = cut_conclusion(a, c1, c2);

    if r1 == Rule::Id {
        return p2.clone();
    }
    if r2 == Rule::Id {
        return p1.clone();
    }

    if is_left_rule(r1) {
        // The cut formula is not principal in p1; push the cut above it.
        if r1 == Rule::ZeroL {
            return infer(Rule::ZeroL, conclusion, vec![]);
        }
        let new_prems: Vec<Derivation> = match r1 {
            Rule::ImpL => vec![prems1[0].clone(), reduce_cut(a, &prems1[1], p2)],
            Rule::VeeL => prems1.iter().map(|p| reduce_cut(a, p, p2)).collect(),
            _ => vec![reduce_cut(a, &prems1[0], p2)],
        };
        return infer(r1, conclusion, new_prems);
    }

    // p1 ends with a right rule introducing the cut formula.
    if let Some(reduced) = try_principal(a, p1, p2) {
        return reduced;
    }
    permute_right(a, p1, p2, conclusion)
}

/// When the last rule of `p2` decomposes an occurrence of the cut formula,
/// replace the cut by cuts on immediate subformulas.
fn try_principal(a: &Formula, p1: &Derivation, p2: &Derivation) -> Option<Derivation> {
    let (r1, _, prems1) = parts(p1);
    let (r2, c2, prems2) = parts(p2);
    let gamma = remove_one(c2.antecedent(), a)?;
    match (a, r1, r2) {
        (Formula::One, Rule::OneR, Rule::OneL) => {
            // p1 is |- 1, so the cut conclusion is exactly p2's premise
            Some(prems2[0].clone())
        }
        (Formula::Dot(x, y), Rule::DotR, Rule::DotL) => {
            let rho = &prems2[0];
            let mut want = gamma;
            want.push(x.as_ref().clone());
            want.push(y.as_ref().clone());
            let want = Sequent::new(want, c2.succedent().clone());
            if rho.conclusion_or_panic() != &want {
                return None;
            }
            let step = reduce_cut(x, &prems1[0], rho);
            Some(reduce_cut(y, &prems1[1], &step))
        }
        (Formula::Imp(x, y), Rule::ImpR, Rule::ImpL) => {
            let rho1 = prems2[0].conclusion_or_panic();
            let rho2 = prems2[1].conclusion_or_panic();
            if rho1.succedent() != x.as_ref() || rho2.succedent() != c2.succedent() {
                return None;
            }
            let rho2_rest = remove_one(rho2.antecedent(), y)?;
            let mut combined = rho2_rest;
            combined.extend_from_slice(rho1.antecedent());
            if Sequent::new(combined, c2.succedent().clone())
                != Sequent::new(gamma, c2.succedent().clone())
            {
                return None;
            }
            let step = reduce_cut(x, &prems2[0], &prems1[0]);
            Some(reduce_cut(y, &step, &prems2[1]))
        }
        (Formula::Vee(x, y), Rule::VeeR1 | Rule::VeeR2, Rule::VeeL) => {
            let (side, rho) = if r1 == Rule::VeeR1 {
                (x.as_ref(), &prems2[0])
            } else {
                (y.as_ref(), &prems2[1])
            };
            let mut want = gamma;
            want.push(side.clone());
            let want = Sequent::new(want, c2.succedent().clone());
            if rho.conclusion_or_panic() != &want {
                return None;
            }
            Some(reduce_cut(side, &prems1[0], rho))
        }
        (Formula::Wedge(x, y), Rule::WedgeR, Rule::WedgeL1 | Rule::WedgeL2) => {
            let (side, pi) = if r2 == Rule::WedgeL1 {
                (x.as_ref(), &prems1[0])
            } else {
                (y.as_ref(), &prems1[1])
            };
            let mut want = gamma;
            want.push(side.clone());
            let want = Sequent::new(want, c2.succedent().clone());
            if prems2[0].conclusion_or_panic() != &want {
                return None;
            }
            Some(reduce_cut(side, pi, &prems2[0]))
        }
        _ => None,
    }
}

/// The cut formula occurrence is side context of p2's last rule; push the
/// cut into the premise(s) carrying that occurrence.
fn permute_right(a: &Formula, p1: &Derivation, p2: &Derivation, conclusion: Sequent) -> Derivation {
    let (r2, _, prems2) = parts(p2);
    match r2 {
        Rule::ZeroL => infer(Rule::ZeroL, conclusion, vec![]),
        Rule::DotR | Rule::ImpL | Rule::StarRN => {
            // context-splitting rules: exactly one part absorbs the cut
            let idx = prems2
                .iter()
                .position(|p| contains(p.conclusion_or_panic().antecedent(), a))
                .expect("cut formula must land in some part");
            let mut new_prems = Vec::with_capacity(prems2.len());
            for (i, p) in prems2.iter().enumerate() {
                if i == idx {
                    let reduced = reduce_cut(a, p1, p);
                    // a star part whose antecedent vanishes is dropped
                    if r2 == Rule::StarRN
                        && reduced.conclusion_or_panic().antecedent().is_empty()
                    {
                        continue;
                    }
                    new_prems.push(reduced);
                } else {
                    new_prems.push(p.clone());
                }
            }
            infer(r2, conclusion, new_prems)
        }
        _ => {
            // context-sharing rules: the occurrence persists in every premise
            let new_prems: Vec<Derivation> = prems2
                .iter()
                .map(|p| {
                    if contains(p.conclusion_or_panic().antecedent(), a) {
                        reduce_cut(a, p1, p)
                    } else {
                        p.clone()
                    }
                })
                .collect();
            infer(r2, conclusion, new_prems)
        }
    }
}
