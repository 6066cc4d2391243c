//! Reusable derivation schemas for star, built on the induction rule.

use crate::calculus::{id_axiom, infer, Derivation, Rule};
use crate::formula::{big_vee, dot, power, star, vee, Formula, Sequent};

fn seq(ant: Vec<Formula>, succ: Formula) -> Sequent {
    Sequent::new(ant, succ)
}

fn with(ant: &[Formula], extra: Formula) -> Vec<Formula> {
    let mut v = ant.to_vec();
    v.push(extra);
    v
}

/// Wrap a derivation of `ant |- disjuncts[j]` into one of
/// `ant |- d_0 \/ (d_1 \/ ...)` by navigating the right-associated
/// disjunction.
pub fn vee_select(ant: &[Formula], disjuncts: &[Formula], j: usize, inner: Derivation) -> Derivation {
    if disjuncts.len() == 1 {
        return inner;
    }
    let c = seq(ant.to_vec(), big_vee(disjuncts.to_vec()));
    if j == 0 {
        infer(Rule::VeeR1, c, vec![inner])
    } else {
        let sub = vee_select(ant, &disjuncts[1..], j - 1, inner);
        infer(Rule::VeeR2, c, vec![sub])
    }
}

/// Case split over a right-associated disjunction in the antecedent.
/// `case(i, d_i)` must return a derivation of `rest, d_i |- succ`; the
/// result derives `rest, d_0 \/ (d_1 \/ ...) |- succ`.
pub fn vee_cases(
    rest: &[Formula],
    disjuncts: &[Formula],
    succ: &Formula,
    case: &mut dyn FnMut(usize, &Formula) -> Derivation,
) -> Derivation {
    fn go(
        rest: &[Formula],
        disjuncts: &[Formula],
        offset: usize,
        succ: &Formula,
        case: &mut dyn FnMut(usize, &Formula) -> Derivation,
    ) -> Derivation {
        if disjuncts.len() == 1 {
            return case(offset, &disjuncts[0]);
        }
        let c = Sequent::new(with(rest, big_vee(disjuncts.to_vec())), succ.clone());
        let p1 = case(offset, &disjuncts[0]);
        let p2 = go(rest, &disjuncts[1..], offset + 1, succ, case);
        infer(Rule::VeeL, c, vec![p1, p2])
    }
    go(rest, disjuncts, 0, succ, case)
}

/// Derivation of `e, e^i |- e^{i+1}`.
fn step_power(e: &Formula, i: usize) -> Derivation {
    if i == 0 {
        // e, 1 |- e
        infer(
            Rule::OneL,
            seq(vec![e.clone(), Formula::One], e.clone()),
            vec![id_axiom(e.clone())],
        )
    } else {
        let ei = power(e, i);
        infer(
            Rule::DotR,
            seq(vec![e.clone(), ei.clone()], power(e, i + 1)),
            vec![id_axiom(e.clone()), id_axiom(ei)],
        )
    }
}

/// `a^* |- 1 \/ (a . a^*)` by star induction with the succedent itself as
/// invariant.
pub fn star_unfold_schema(a: &Formula) -> Derivation {
    let sa = star(a.clone());
    let body = dot(a.clone(), sa.clone());
    let b = vee(Formula::One, body.clone());
    let base = infer(
        Rule::VeeR1,
        seq(vec![], b.clone()),
        vec![infer(Rule::OneR, seq(vec![], Formula::One), vec![])],
    );
    // a, 1 |- B
    let case_one = {
        let inner = infer(
            Rule::VeeR2,
            seq(vec![a.clone()], b.clone()),
            vec![infer(
                Rule::DotR,
                seq(vec![a.clone()], body.clone()),
                vec![
                    id_axiom(a.clone()),
                    infer(Rule::StarR0, seq(vec![], sa.clone()), vec![]),
                ],
            )],
        );
        infer(
            Rule::OneL,
            seq(vec![a.clone(), Formula::One], b.clone()),
            vec![inner],
        )
    };
    // a, a . a^* |- B
    let case_dot = {
        let ind = infer(
            Rule::StarRInd,
            seq(vec![a.clone(), sa.clone()], sa.clone()),
            vec![],
        );
        let dr = infer(
            Rule::DotR,
            seq(vec![a.clone(), a.clone(), sa.clone()], body.clone()),
            vec![id_axiom(a.clone()), ind],
        );
        let vr = infer(
            Rule::VeeR2,
            seq(vec![a.clone(), a.clone(), sa.clone()], b.clone()),
            vec![dr],
        );
        infer(
            Rule::DotL,
            seq(vec![a.clone(), body.clone()], b.clone()),
            vec![vr],
        )
    };
    let step = infer(
        Rule::VeeL,
        seq(vec![a.clone(), b.clone()], b.clone()),
        vec![case_one, case_dot],
    );
    infer(Rule::StarLInd, seq(vec![sa], b), vec![base, step])
}

/// `e^* |- (1 \/ e \/ ... \/ e^{k-1}) . (e^k)^*` by star induction.
pub fn kleene_split_schema(e: &Formula, k: usize) -> Result<Derivation, String> {
    if k == 0 {
        return Err("split width k must be positive".to_string());
    }
    let disjuncts: Vec<Formula> = (0..k).map(|i| power(e, i)).collect();
    let v = big_vee(disjuncts.clone());
    let ek = power(e, k);
    let s = star(ek.clone());
    let b = dot(v.clone(), s.clone());
    let base = infer(
        Rule::DotR,
        seq(vec![], b.clone()),
        vec![
            vee_select(
                &[],
                &disjuncts,
                0,
                infer(Rule::OneR, seq(vec![], Formula::One), vec![]),
            ),
            infer(Rule::StarR0, seq(vec![], s.clone()), vec![]),
        ],
    );
    // e, V . S |- V . S
    let rest = vec![e.clone(), s.clone()];
    let cases = vee_cases(&rest, &disjuncts, &b, &mut |i, di| {
        if i < k - 1 {
            // shift into the next disjunct, keeping the star factor
            let left_ant = vec![e.clone(), di.clone()];
            let left = vee_select(&left_ant, &disjuncts, i + 1, step_power(e, i));
            infer(
                Rule::DotR,
                seq(vec![e.clone(), di.clone(), s.clone()], b.clone()),
                vec![left, id_axiom(s.clone())],
            )
        } else {
            // top disjunct: roll e . e^{k-1} into e^k and absorb it into the star
            let p1 = step_power(e, k - 1);
            let absorb = infer(
                Rule::DotR,
                seq(vec![ek.clone(), s.clone()], b.clone()),
                vec![
                    vee_select(
                        &[],
                        &disjuncts,
                        0,
                        infer(Rule::OneR, seq(vec![], Formula::One), vec![]),
                    ),
                    infer(
                        Rule::StarRInd,
                        seq(vec![ek.clone(), s.clone()], s.clone()),
                        vec![],
                    ),
                ],
            );
            crate::calculus::cut(
                seq(vec![e.clone(), di.clone(), s.clone()], b.clone()),
                ek.clone(),
                p1,
                absorb,
            )
        }
    });
    let step = infer(
        Rule::DotL,
        seq(vec![e.clone(), b.clone()], b.clone()),
        vec![cases],
    );
    Ok(infer(
        Rule::StarLInd,
        seq(vec![star(e.clone())], b),
        vec![base, step],
    ))
}

/// Left star rule with context, derived via a cut against the unfolding
/// `a^* |- 1 \/ (a . a^*)`.
///
/// `p1` must derive `gamma |- c` and `p2` must derive `gamma, a^*, a |- c`;
/// the result derives `gamma, a^* |- c`.
pub fn derived_star_left(
    gamma: &[Formula],
    a: &Formula,
    c: &Formula,
    p1: Derivation,
    p2: Derivation,
) -> Result<Derivation, String> {
    let sa = star(a.clone());
    let want1 = seq(gamma.to_vec(), c.clone());
    let want2 = seq(
        with(&with(gamma, sa.clone()), a.clone()),
        c.clone(),
    );
    match p1.conclusion() {
        Some(s) if *s == want1 => {}
        _ => return Err(format!("first premise must conclude {want1}")),
    }
    match p2.conclusion() {
        Some(s) if *s == want2 => {}
        _ => return Err(format!("second premise must conclude {want2}")),
    }
    let body = dot(a.clone(), sa.clone());
    let unfolding = vee(Formula::One, body.clone());
    let case_one = infer(
        Rule::OneL,
        seq(with(gamma, Formula::One), c.clone()),
        vec![p1],
    );
    let case_dot = infer(
        Rule::DotL,
        seq(with(gamma, body.clone()), c.clone()),
        vec![p2],
    );
    let right = infer(
        Rule::VeeL,
        seq(with(gamma, unfolding.clone()), c.clone()),
        vec![case_one, case_dot],
    );
    Ok(crate::calculus::cut(
        seq(with(gamma, sa.clone()), c.clone()),
        unfolding,
        star_unfold_schema(a),
        right,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{check, CalculusId};
    use crate::formula::parse_sequent;

    fn assert_commact(d: &Derivation, conclusion: &str) {
        let r = check(d, CalculusId::CommAct);
        assert!(r.valid, "invalid: {:?}", r.violation);
        assert_eq!(
            d.conclusion_or_panic(),
            &parse_sequent(conclusion).unwrap()
        );
    }

    #[test]
    fn unfold_for_variable() {
        let d = star_unfold_schema(&var("p"));
        assert_commact(&d, "p^* |- 1 \\/ (p . p^*)");
    }

    #[test]
    fn unfold_for_one_and_dot() {
        assert_commact(
            &star_unfold_schema(&Formula::One),
            "1^* |- 1 \\/ (1 . 1^*)",
        );
        assert_commact(
            &star_unfold_schema(&dot(var("p"), var("q"))),
            "(p.q)^* |- 1 \\/ ((p.q) . (p.q)^*)",
        );
    }

    use crate::formula::var;

    #[test]
    fn split_degenerate() {
        let d = kleene_split_schema(&var("e"), 1).unwrap();
        assert_commact(&d, "e^* |- 1 . e^*");
    }

    #[test]
    fn split_two_and_three() {
        let d = kleene_split_schema(&var("a"), 2).unwrap();
        assert_commact(&d, "a^* |- (1 \\/ a) . (a.a)^*");
        let d = kleene_split_schema(&var("a"), 3).unwrap();
        assert_commact(&d, "a^* |- (1 \\/ (a \\/ a.a)) . (a.(a.a))^*");
    }

    #[test]
    fn split_rejects_zero() {
        assert!(kleene_split_schema(&var("a"), 0).is_err());
    }

    #[test]
    fn star_left_with_empty_context() {
        // Γ = {}, C = 1 \/ (a . a^*): premises as in the unfolding itself
        let a = var("a");
        let sa = star(a.clone());
        let c = vee(Formula::One, dot(a.clone(), sa.clone()));
        let p1 = infer(
            Rule::VeeR1,
            Sequent::new(vec![], c.clone()),
            vec![infer(
                Rule::OneR,
                Sequent::new(vec![], Formula::One),
                vec![],
            )],
        );
        let p2 = infer(
            Rule::VeeR2,
            Sequent::new(vec![sa.clone(), a.clone()], c.clone()),
            vec![infer(
                Rule::DotR,
                Sequent::new(vec![sa.clone(), a.clone()], dot(a.clone(), sa.clone())),
                vec![id_axiom(a.clone()), id_axiom(sa.clone())],
            )],
        );
        let d = derived_star_left(&[], &a, &c, p1, p2).unwrap();
        assert_commact(&d, "a^* |- 1 \\/ (a . a^*)");
    }

    #[test]
    fn star_left_with_context() {
        // Γ = {q}, C = q . a^*
        let a = var("a");
        let q = var("q");
        let sa = star(a.clone());
        let c = dot(q.clone(), sa.clone());
        let p1 = infer(
            Rule::DotR,
            Sequent::new(vec![q.clone()], c.clone()),
            vec![
                id_axiom(q.clone()),
                infer(Rule::StarR0, Sequent::new(vec![], sa.clone()), vec![]),
            ],
        );
        let p2 = infer(
            Rule::DotR,
            Sequent::new(vec![q.clone(), sa.clone(), a.clone()], c.clone()),
            vec![
                id_axiom(q.clone()),
                infer(
                    Rule::StarRInd,
                    Sequent::new(vec![a.clone(), sa.clone()], sa.clone()),
                    vec![],
                ),
            ],
        );
        let d = derived_star_left(&[q.clone()], &a, &c, p1, p2).unwrap();
        assert_commact(&d, "q, a^* |- q . a^*");
    }

    #[test]
    fn star_left_rejects_mismatch() {
        let a = var("a");
        let bad = id_axiom(var("q"));
        let r = derived_star_left(&[], &a, &var("q"), bad.clone(), bad);
        assert!(r.is_err());
    }
}
