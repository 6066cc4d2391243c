//! Randomized invariants: syntax round-trips, canonical forms, search
//! coherence, approximation monotonicity, and checker robustness.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use commact::approx::approximate_sequent;
use commact::calculus::{check, CalculusId, Derivation, Rule};
use commact::encoding::{encode, synth_circular_witness};
use commact::formula::{
    big_dot, dot, has_negative_star, imp, parse_formula, parse_sequent, rank, star, var, vee,
    wedge, Formula, Sequent,
};
use commact::minsky::parse_machine;
use commact::proofio::{parse_proof, render_proof};
use commact::search::{decide, decide_bool, SearchOutcome};

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        4 => "[a-e]".prop_map(|s| var(&s)),
        1 => Just(Formula::Zero),
        1 => Just(Formula::One),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| imp(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| dot(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| vee(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| wedge(a, b)),
            inner.prop_map(star),
        ]
    })
}

/// Formulas without star or implication: sequents built from these have no
/// negative star occurrence and stay cheap to decide.
fn arb_plain_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        4 => "[a-c]".prop_map(|s| var(&s)),
        1 => Just(Formula::One),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| dot(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| vee(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| wedge(a, b)),
        ]
    })
}

fn arb_sequent() -> impl Strategy<Value = Sequent> {
    (prop::collection::vec(arb_formula(), 0..3), arb_formula())
        .prop_map(|(ant, succ)| Sequent::new(ant, succ))
}

proptest! {
    #[test]
    fn formula_print_parse_roundtrip(f in arb_formula()) {
        let reparsed = parse_formula(&f.to_string()).unwrap();
        prop_assert_eq!(reparsed, f);
    }

    #[test]
    fn sequent_print_parse_roundtrip(s in arb_sequent()) {
        let reparsed = parse_sequent(&s.to_string()).unwrap();
        prop_assert_eq!(reparsed, s);
    }

    #[test]
    fn antecedent_order_is_canonical(
        ant in prop::collection::vec(arb_formula(), 0..4).prop_shuffle(),
        succ in arb_formula(),
    ) {
        let mut sorted = ant.clone();
        sorted.sort_by_key(|f| f.to_string());
        let a = Sequent::new(ant, succ.clone());
        let b = Sequent::new(sorted, succ);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(rank(&a), rank(&b));
    }

    #[test]
    fn approximation_fixes_exactly_negative_star_free(s in arb_sequent(), n in 0usize..3) {
        let approx = approximate_sequent(&s, n);
        prop_assert_eq!(approx == s, !has_negative_star(&s));
    }

    #[test]
    fn approximation_of_approximation_is_stable(s in arb_sequent(), n in 0usize..3) {
        let once = approximate_sequent(&s, n);
        prop_assert!(!has_negative_star(&once));
        prop_assert_eq!(approximate_sequent(&once, n), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decide_agrees_with_decide_bool_and_emits_valid_proofs(
        ant in prop::collection::vec(arb_plain_formula(), 0..3),
        succ in arb_plain_formula(),
    ) {
        let s = Sequent::new(ant, succ);
        let quick = decide_bool(&s).expect("plain sequents are in the decidable fragment");
        match decide(&s, true) {
            SearchOutcome::Derivable { proof, .. } => {
                prop_assert!(quick);
                let p = proof.expect("emission was requested");
                prop_assert_eq!(p.conclusion_or_panic(), &s);
                prop_assert!(!p.contains_rule(Rule::Cut));
                prop_assert!(check(&p, CalculusId::OmegaFin).valid);
            }
            SearchOutcome::NotDerivable { .. } => prop_assert!(!quick),
            SearchOutcome::Refused { reason } => prop_assert!(false, "refused: {}", reason),
        }
    }

    #[test]
    fn approximation_derivability_is_downward_closed(
        ant in prop::collection::vec(arb_plain_formula(), 0..2),
        inner in arb_plain_formula(),
        succ in arb_plain_formula(),
    ) {
        // a negative star under an implication on the right exercises the
        // polarity swap in the approximation maps
        let s = Sequent::new(ant, imp(star(inner), succ));
        let verdicts: Vec<bool> = (0..=2)
            .map(|n| decide_bool(&approximate_sequent(&s, n)).unwrap())
            .collect();
        for n in 1..verdicts.len() {
            prop_assert!(!verdicts[n] || verdicts[n - 1]);
        }
    }

    #[test]
    fn proof_files_roundtrip(
        ant in prop::collection::vec(arb_plain_formula(), 1..3),
    ) {
        let s = Sequent::new(ant.clone(), big_dot(ant));
        let SearchOutcome::Derivable { proof: Some(p), .. } = decide(&s, true) else {
            panic!("product of the antecedent is always derivable");
        };
        let text = render_proof(CalculusId::OmegaFin, &p);
        let (calc, reparsed) = parse_proof(&text).unwrap();
        prop_assert_eq!(calc, CalculusId::OmegaFin);
        prop_assert_eq!(reparsed, p);
    }
}

// --- checker mutation fuzzing ---------------------------------------------

/// Rename the `target`-th variable occurrence (counting across the whole
/// sequent) to a name that appears nowhere else.
fn rename_occurrence(s: &Sequent, target: usize) -> Sequent {
    fn go(f: &Formula, seen: &mut usize, target: usize) -> Formula {
        match f {
            Formula::Var(_) => {
                let hit = *seen == target;
                *seen += 1;
                if hit {
                    var("mutant")
                } else {
                    f.clone()
                }
            }
            Formula::Zero | Formula::One => f.clone(),
            Formula::Imp(a, b) => imp(go(a, seen, target), go(b, seen, target)),
            Formula::Dot(a, b) => dot(go(a, seen, target), go(b, seen, target)),
            Formula::Vee(a, b) => vee(go(a, seen, target), go(b, seen, target)),
            Formula::Wedge(a, b) => wedge(go(a, seen, target), go(b, seen, target)),
            Formula::Star(a) => star(go(a, seen, target)),
        }
    }
    let mut seen = 0;
    let ant = s
        .antecedent()
        .iter()
        .map(|f| go(f, &mut seen, target))
        .collect();
    let succ = go(s.succedent(), &mut seen, target);
    Sequent::new(ant, succ)
}

fn count_vars(s: &Sequent) -> usize {
    fn go(f: &Formula) -> usize {
        match f {
            Formula::Var(_) => 1,
            Formula::Zero | Formula::One => 0,
            Formula::Imp(a, b) | Formula::Dot(a, b) | Formula::Vee(a, b) | Formula::Wedge(a, b) => {
                go(a) + go(b)
            }
            Formula::Star(a) => go(a),
        }
    }
    s.antecedent().iter().map(go).sum::<usize>() + go(s.succedent())
}

/// Replace the conclusion of the `target`-th non-root node (preorder) with a
/// variable-renamed copy. Returns how many non-root nodes exist.
fn mutate_node(d: &mut Derivation, target: usize, occurrence: usize) -> usize {
    fn go(d: &mut Derivation, idx: &mut usize, target: usize, occurrence: usize, root: bool) {
        if let Derivation::Inference {
            conclusion,
            premises,
            ..
        } = d
        {
            if !root {
                if *idx == target {
                    *conclusion = rename_occurrence(conclusion, occurrence);
                }
                *idx += 1;
            }
            for p in premises {
                go(p, idx, target, occurrence, false);
            }
        }
    }
    let mut idx = 0;
    go(d, &mut idx, target, occurrence, true);
    idx
}

#[test]
fn corrupting_any_internal_node_is_caught() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let atoms = ["a", "b", "c"];
    let mut trials = 0;
    while trials < 500 {
        // a derivable instance whose proof has at least two nodes: the
        // succedent is the full product of a 2-4 element antecedent
        let len = rng.gen_range(2..=4);
        let mut ctx: Vec<Formula> = (0..len)
            .map(|_| var(atoms[rng.gen_range(0..atoms.len())]))
            .collect();
        if rng.gen_bool(0.5) {
            let a = var(atoms[rng.gen_range(0..atoms.len())]);
            let b = var(atoms[rng.gen_range(0..atoms.len())]);
            let k = rng.gen_range(0..ctx.len());
            ctx[k] = if rng.gen_bool(0.5) { dot(a, b) } else { vee(a, b) };
        }
        let s = Sequent::new(ctx.clone(), big_dot(ctx));
        let SearchOutcome::Derivable { proof: Some(p), .. } = decide(&s, true) else {
            panic!("{s} should be derivable");
        };
        assert!(check(&p, CalculusId::OmegaFin).valid);
        let non_root = p.node_count() - 1;
        assert!(non_root >= 1, "{s}: proof too small to mutate");

        let mut mutated = p.clone();
        let target = rng.gen_range(0..non_root);
        // find the chosen node's variable count by mutating a fresh copy
        // with occurrence indexes until the sequent changes
        let vars_total = count_vars(&s);
        let occurrence = rng.gen_range(0..vars_total.max(1));
        mutate_node(&mut mutated, target, occurrence);
        if mutated == p {
            // the chosen occurrence index exceeded the node's own variable
            // count; retry with a different draw rather than skip silently
            continue;
        }
        let report = check(&mutated, CalculusId::OmegaFin);
        assert!(
            !report.valid,
            "mutation of node {target} in proof of {s} went undetected"
        );
        trials += 1;
    }
}

// --- bounded unravelling of backlinked proofs ------------------------------

fn collect_labels(d: &Derivation, map: &mut std::collections::HashMap<String, Derivation>) {
    if let Derivation::Inference {
        premises, label, ..
    } = d
    {
        if let Some(l) = label {
            map.insert(l.clone(), d.clone());
        }
        for p in premises {
            collect_labels(p, map);
        }
    }
}

fn unroll(
    d: &Derivation,
    map: &std::collections::HashMap<String, Derivation>,
    budget: usize,
) -> Derivation {
    match d {
        Derivation::Backlink { label } if budget > 0 => {
            unroll(&map[label.as_str()], map, budget - 1)
        }
        Derivation::Backlink { .. } => d.clone(),
        Derivation::Inference {
            rule,
            conclusion,
            premises,
            cut_formula,
            label,
        } => Derivation::Inference {
            rule: *rule,
            conclusion: conclusion.clone(),
            premises: premises.iter().map(|p| unroll(p, map, budget)).collect(),
            cut_formula: cut_formula.clone(),
            label: label.clone(),
        },
    }
}

fn has_backlink(d: &Derivation) -> bool {
    match d {
        Derivation::Backlink { .. } => true,
        Derivation::Inference { premises, .. } => premises.iter().any(has_backlink),
    }
}

/// Maximal backlink-free subtrees of `d`.
fn closed_subtrees<'a>(d: &'a Derivation, out: &mut Vec<&'a Derivation>) {
    if !has_backlink(d) {
        out.push(d);
        return;
    }
    if let Derivation::Inference { premises, .. } = d {
        for p in premises {
            closed_subtrees(p, out);
        }
    }
}

#[test]
fn unravelled_witnesses_stay_locally_valid() {
    let machines = [
        "start qs\nfinal qf\njzdec qs a qs qs\n",
        "start p\nfinal qf\ninc p a q\njzdec q a p p\n",
    ];
    for text in machines {
        let m = parse_machine(text).unwrap();
        let em = encode(&m).unwrap();
        let w = synth_circular_witness(&em, 0).unwrap();
        assert!(check(&w, CalculusId::Circ).valid);

        let mut map = std::collections::HashMap::new();
        collect_labels(&w, &mut map);
        assert!(!map.is_empty(), "witness should contain labeled nodes");
        let unrolled = unroll(&w, &map, 2);
        assert!(unrolled.node_count() > w.node_count());

        // every part of the unrolling that no longer loops must be a
        // complete proof on its own
        let mut closed = Vec::new();
        closed_subtrees(&unrolled, &mut closed);
        assert!(!closed.is_empty());
        for sub in closed {
            assert!(
                check(sub, CalculusId::Circ).valid,
                "closed subtree rejected after unrolling for\n{text}"
            );
        }
    }
}
