//! Formula encodings of counter machines and synthesis of explicit
//! derivations from machine runs.
//!
//! A machine is packed into a single formula E (copied with Kleene star) and
//! a goal disjunction D describing admissible terminal shapes. A k-step run
//! becomes a finite cut-free derivation; a circular run becomes a derivation
//! using the star induction rule, assembled from loop invariants of the form
//! W ⊸ D, plus a directly circular witness with backlinks.

use crate::calculus::{cut, id_axiom, infer, Derivation, Rule};
use crate::formula::{big_dot, big_vee, big_wedge, dot, imp, power, star, var, vee, Formula, Sequent};
use crate::minsky::{
    can_perform_k_steps, classify, step, Configuration, Instruction, Machine, Register,
    RunResult, StepResult,
};
use crate::schemas::{kleene_split_schema, derived_star_left, vee_cases, vee_select};

/// Step bound used when classifying a run before circular synthesis.
pub const CLASSIFY_BOUND: usize = 10_000;

const RESERVED: [&str; 6] = ["a", "b", "c", "z_a", "z_b", "z_c"];

fn reg_var(r: Register) -> Formula {
    var(r.name())
}

fn z_var(r: Register) -> Formula {
    var(&format!("z_{}", r.name()))
}

fn reg_index(r: Register) -> usize {
    match r {
        Register::A => 0,
        Register::B => 1,
        Register::C => 2,
    }
}

/// The other two registers, in the order used by the zero disjuncts of D.
fn others_of(r: Register) -> [Register; 2] {
    match r {
        Register::A => [Register::B, Register::C],
        Register::B => [Register::A, Register::C],
        Register::C => [Register::A, Register::B],
    }
}

pub fn instruction_formula(state: &str, instr: &Instruction) -> Formula {
    let p = var(state);
    match instr {
        Instruction::Inc { register, next } => imp(p, dot(var(next), reg_var(*register))),
        Instruction::Jzdec {
            register,
            on_zero,
            on_nonzero,
        } => {
            let first = imp(dot(p.clone(), reg_var(*register)), var(on_nonzero));
            let second = imp(p, vee(var(on_zero), z_var(*register)));
            Formula::Wedge(first.into(), second.into())
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncodedMachine {
    pub machine: Machine,
    /// Conjuncts of E: the three dummies z_r ⊸ z_r, then one formula per
    /// instruction in file order.
    pub conjuncts: Vec<Formula>,
    pub e: Formula,
    /// Disjuncts of D: the run-state disjunct, then one zero disjunct per
    /// register.
    pub d_disjuncts: Vec<Formula>,
    pub d: Formula,
    pub state_vars: Vec<Formula>,
}

pub fn encode(m: &Machine) -> Result<EncodedMachine, String> {
    for s in &m.states {
        if RESERVED.contains(&s.as_str()) {
            return Err(format!("state name `{s}` collides with a reserved variable"));
        }
    }
    let mut conjuncts: Vec<Formula> = REGISTERS_IN_ORDER
        .iter()
        .map(|r| imp(z_var(*r), z_var(*r)))
        .collect();
    for (p, i) in &m.program {
        conjuncts.push(instruction_formula(p, i));
    }
    let e = big_wedge(conjuncts.clone());
    let state_vars: Vec<Formula> = m.states.iter().map(|s| var(s)).collect();
    let run_disjunct = big_dot(vec![
        star(reg_var(Register::A)),
        star(reg_var(Register::B)),
        star(reg_var(Register::C)),
        big_vee(state_vars.clone()),
    ]);
    let mut d_disjuncts = vec![run_disjunct];
    for r in REGISTERS_IN_ORDER {
        d_disjuncts.push(zero_disjunct(r));
    }
    let d = big_vee(d_disjuncts.clone());
    Ok(EncodedMachine {
        machine: m.clone(),
        conjuncts,
        e,
        d_disjuncts,
        d,
        state_vars,
    })
}

const REGISTERS_IN_ORDER: [Register; 3] = [Register::A, Register::B, Register::C];

fn zero_disjunct(r: Register) -> Formula {
    let [o1, o2] = others_of(r);
    big_dot(vec![star(reg_var(o1)), star(reg_var(o2)), z_var(r)])
}

/// Antecedent atoms of a configuration: state variable plus one register
/// variable per unit of each counter.
fn gamma(em: &EncodedMachine, c: &Configuration) -> Vec<Formula> {
    let mut out = vec![em.state_vars[c.state].clone()];
    for r in REGISTERS_IN_ORDER {
        for _ in 0..c.get(r) {
            out.push(reg_var(r));
        }
    }
    out
}

pub fn target_sequent(em: &EncodedMachine, x: u64) -> Sequent {
    let mut ant = vec![star(em.e.clone()), var(&em.machine.start)];
    for _ in 0..x {
        ant.push(reg_var(Register::A));
    }
    Sequent::new(ant, em.d.clone())
}

pub fn k_step_sequent(em: &EncodedMachine, c: &Configuration, k: usize) -> Sequent {
    let mut ant = vec![em.e.clone(); k];
    ant.extend(gamma(em, c));
    Sequent::new(ant, em.d.clone())
}

// --- generic derivation building blocks -----------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum StarFlavor {
    Omega,
    CommAct,
    Circ,
}

fn seq(ant: Vec<Formula>, succ: &Formula) -> Sequent {
    Sequent::new(ant, succ.clone())
}

fn join(a: &[Formula], b: &[Formula]) -> Vec<Formula> {
    let mut out = a.to_vec();
    out.extend_from_slice(b);
    out
}

/// `v^n copies |- v^*` in the requested calculus.
fn star_powers(v: &Formula, n: usize, flavor: StarFlavor) -> Derivation {
    let sv = star(v.clone());
    let copies = |m: usize| vec![v.clone(); m];
    match flavor {
        StarFlavor::Omega => infer(
            Rule::StarRN,
            seq(copies(n), &sv),
            (0..n).map(|_| id_axiom(v.clone())).collect(),
        ),
        StarFlavor::CommAct => {
            if n == 0 {
                infer(Rule::StarR0, seq(vec![], &sv), vec![])
            } else {
                let ind = infer(Rule::StarRInd, seq(vec![v.clone(), sv.clone()], &sv), vec![]);
                cut(
                    seq(copies(n), &sv),
                    sv.clone(),
                    star_powers(v, n - 1, flavor),
                    ind,
                )
            }
        }
        StarFlavor::Circ => {
            if n == 0 {
                infer(Rule::StarR0, seq(vec![], &sv), vec![])
            } else {
                infer(
                    Rule::StarRStep,
                    seq(copies(n), &sv),
                    vec![id_axiom(v.clone()), star_powers(v, n - 1, flavor)],
                )
            }
        }
    }
}

/// `items |- items[0] . (items[1] . ...)` over identity leaves.
fn dot_intro(items: &[Formula]) -> Derivation {
    if items.len() == 1 {
        return id_axiom(items[0].clone());
    }
    infer(
        Rule::DotR,
        seq(items.to_vec(), &big_dot(items.to_vec())),
        vec![id_axiom(items[0].clone()), dot_intro(&items[1..])],
    )
}

/// Decompose a right-associated product in the antecedent; `inner` proves
/// `rest, items |- succ`, the result proves `rest, big_dot(items) |- succ`.
fn dot_elim(rest: &[Formula], items: &[Formula], succ: &Formula, inner: Derivation) -> Derivation {
    if items.len() == 1 {
        return inner;
    }
    let mut ant = rest.to_vec();
    ant.push(big_dot(items.to_vec()));
    let premise = dot_elim(&join(rest, &items[..1]), &items[1..], succ, inner);
    infer(Rule::DotL, seq(ant, succ), vec![premise])
}

/// Turn `rest, e^n (as n copies) |- succ` into `rest, e^n (as a formula) |- succ`.
fn expand_power(
    rest: &[Formula],
    e: &Formula,
    n: usize,
    succ: &Formula,
    inner: Derivation,
) -> Derivation {
    if n == 0 {
        let mut ant = rest.to_vec();
        ant.push(Formula::One);
        return infer(Rule::OneL, seq(ant, succ), vec![inner]);
    }
    dot_elim(rest, &vec![e.clone(); n], succ, inner)
}

/// Navigate a right-associated conjunction in the antecedent down to its
/// i-th conjunct; `inner` proves `rest, conjuncts[i] |- succ`.
fn wedge_nav(
    rest: &[Formula],
    conjuncts: &[Formula],
    i: usize,
    succ: &Formula,
    inner: Derivation,
) -> Derivation {
    if conjuncts.len() == 1 {
        return inner;
    }
    let mut ant = rest.to_vec();
    ant.push(big_wedge(conjuncts.to_vec()));
    let c = seq(ant, succ);
    if i == 0 {
        infer(Rule::WedgeL1, c, vec![inner])
    } else {
        let sub = wedge_nav(rest, &conjuncts[1..], i - 1, succ, inner);
        infer(Rule::WedgeL2, c, vec![sub])
    }
}

/// `z_r, o1^m1, o2^m2 |- o1^* . (o2^* . z_r)` — the body of the matching
/// zero disjunct of D.
fn zero_disjunct_intro(r: Register, m1: usize, m2: usize, flavor: StarFlavor) -> Derivation {
    let [o1, o2] = others_of(r);
    let inner = infer(
        Rule::DotR,
        seq(
            {
                let mut v = vec![z_var(r)];
                v.extend(vec![reg_var(o2); m2]);
                v
            },
            &big_dot(vec![star(reg_var(o2)), z_var(r)]),
        ),
        vec![star_powers(&reg_var(o2), m2, flavor), id_axiom(z_var(r))],
    );
    let mut ant = vec![z_var(r)];
    ant.extend(vec![reg_var(o1); m1]);
    ant.extend(vec![reg_var(o2); m2]);
    infer(
        Rule::DotR,
        seq(ant, &zero_disjunct(r)),
        vec![star_powers(&reg_var(o1), m1, flavor), inner],
    )
}

/// `z_r, o1^m1, o2^m2 |- D` via the matching zero disjunct.
fn zero_base(em: &EncodedMachine, r: Register, m1: usize, m2: usize, flavor: StarFlavor) -> Derivation {
    let [o1, o2] = others_of(r);
    let mut ant = vec![z_var(r)];
    ant.extend(vec![reg_var(o1); m1]);
    ant.extend(vec![reg_var(o2); m2]);
    vee_select(
        &ant,
        &em.d_disjuncts,
        reg_index(r) + 1,
        zero_disjunct_intro(r, m1, m2, flavor),
    )
}

/// `p, a^a, b^b, c^c |- D` via the run-state disjunct.
fn base_case(em: &EncodedMachine, c: &Configuration, flavor: StarFlavor) -> Derivation {
    let g = gamma(em, c);
    let state = em.state_vars[c.state].clone();
    let q_proof = vee_select(
        std::slice::from_ref(&state),
        &em.state_vars,
        c.state,
        id_axiom(state.clone()),
    );
    let q_formula = big_vee(em.state_vars.clone());
    // build the product a^* . (b^* . (c^* . ⋁q)) from the inside out
    let mut proof = q_proof;
    let mut succ = q_formula;
    let mut ant = vec![state];
    for r in [Register::C, Register::B, Register::A] {
        let count = c.get(r) as usize;
        succ = dot(star(reg_var(r)), succ);
        let mut new_ant = vec![reg_var(r); count];
        new_ant.extend(ant.clone());
        proof = infer(
            Rule::DotR,
            seq(new_ant.clone(), &succ),
            vec![star_powers(&reg_var(r), count, flavor), proof],
        );
        ant = new_ant;
    }
    vee_select(&g, &em.d_disjuncts, 0, proof)
}

/// Consume `n` copies of E as dummies z_r ⊸ z_r against the z_r in `rest`;
/// `closer` proves `rest |- D`.
fn burn_es(
    em: &EncodedMachine,
    n: usize,
    r: Register,
    rest: &[Formula],
    closer: Derivation,
) -> Derivation {
    if n == 0 {
        return closer;
    }
    let sub = burn_es(em, n - 1, r, rest, closer);
    let mut inner_rest = vec![em.e.clone(); n - 1];
    inner_rest.extend_from_slice(rest);
    let mut impl_ant = inner_rest.clone();
    impl_ant.push(imp(z_var(r), z_var(r)));
    let impl_node = infer(
        Rule::ImpL,
        seq(impl_ant, &em.d),
        vec![id_axiom(z_var(r)), sub],
    );
    wedge_nav(&inner_rest, &em.conjuncts, reg_index(r), &em.d, impl_node)
}

/// One machine step as a derivation block: from `next`, a derivation of
/// `ctx, Γ(step(cfg)) |- D`, build `ctx, E, Γ(cfg) |- D`. On a zero test the
/// side branch is produced by `zero_closer(r, cfg)`, which must derive
/// `ctx, z_r, o1^m1, o2^m2 |- D` for the current counter values.
fn one_step(
    em: &EncodedMachine,
    ctx: &[Formula],
    cfg: &Configuration,
    next: Derivation,
    zero_closer: &mut dyn FnMut(Register, &Configuration) -> Derivation,
) -> Derivation {
    let state = em.machine.states[cfg.state].clone();
    let instr = em
        .machine
        .instruction(&state)
        .expect("stepping a non-final state")
        .clone();
    let conj_index = 3 + em
        .machine
        .program
        .iter()
        .position(|(p, _)| *p == state)
        .unwrap();
    let p_var = var(&state);
    let g = gamma(em, cfg);
    let g_minus_p: Vec<Formula> = g[1..].to_vec();
    let nav_rest = join(ctx, &g);
    let d = &em.d;
    let inner = match &instr {
        Instruction::Inc { register, next: q } => {
            let q_dot_r = dot(var(q), reg_var(*register));
            let mut dotl_ant = join(ctx, &g_minus_p);
            dotl_ant.push(q_dot_r);
            let dotl = infer(Rule::DotL, seq(dotl_ant, d), vec![next]);
            let mut impl_ant = join(ctx, &g);
            impl_ant.push(em.conjuncts[conj_index].clone());
            infer(Rule::ImpL, seq(impl_ant, d), vec![id_axiom(p_var), dotl])
        }
        Instruction::Jzdec {
            register,
            on_zero,
            on_nonzero,
        } => {
            if cfg.get(*register) > 0 {
                let part1 = imp(dot(p_var.clone(), reg_var(*register)), var(on_nonzero));
                let pr = dot(p_var.clone(), reg_var(*register));
                let prem1 = infer(
                    Rule::DotR,
                    seq(vec![p_var.clone(), reg_var(*register)], &pr),
                    vec![id_axiom(p_var.clone()), id_axiom(reg_var(*register))],
                );
                let mut impl_ant = join(ctx, &g);
                impl_ant.push(part1.clone());
                let impl_node = infer(Rule::ImpL, seq(impl_ant, d), vec![prem1, next]);
                let mut wl_ant = join(ctx, &g);
                wl_ant.push(em.conjuncts[conj_index].clone());
                infer(Rule::WedgeL1, seq(wl_ant, d), vec![impl_node])
            } else {
                let part2 = imp(p_var.clone(), vee(var(on_zero), z_var(*register)));
                let [o1, o2] = others_of(*register);
                let mut zero_ant = join(ctx, &[z_var(*register)]);
                zero_ant.extend(vec![reg_var(o1); cfg.get(o1) as usize]);
                zero_ant.extend(vec![reg_var(o2); cfg.get(o2) as usize]);
                let zero_branch = zero_closer(*register, cfg);
                debug_assert_eq!(
                    zero_branch.conclusion_or_panic(),
                    &seq(zero_ant, d),
                    "zero branch conclusion mismatch"
                );
                let mut veel_ant = join(ctx, &g_minus_p);
                veel_ant.push(vee(var(on_zero), z_var(*register)));
                let veel = infer(Rule::VeeL, seq(veel_ant, d), vec![next, zero_branch]);
                let mut impl_ant = join(ctx, &g);
                impl_ant.push(part2.clone());
                let impl_node = infer(Rule::ImpL, seq(impl_ant, d), vec![id_axiom(p_var), veel]);
                let mut wl_ant = join(ctx, &g);
                wl_ant.push(em.conjuncts[conj_index].clone());
                infer(Rule::WedgeL2, seq(wl_ant, d), vec![impl_node])
            }
        }
    };
    wedge_nav(&nav_rest, &em.conjuncts, conj_index, d, inner)
}

// --- finite k-step synthesis -----------------------------------------------

pub fn synth_k_step(
    em: &EncodedMachine,
    c: &Configuration,
    k: usize,
) -> Result<Derivation, String> {
    if !can_perform_k_steps(&em.machine, *c, k) {
        return Err(format!("machine halts before performing {k} steps"));
    }
    Ok(k_step(em, c, k))
}

fn k_step(em: &EncodedMachine, c: &Configuration, k: usize) -> Derivation {
    if k == 0 {
        return base_case(em, c, StarFlavor::Omega);
    }
    let next_cfg = match step(&em.machine, *c) {
        StepResult::Next(n) => n,
        StepResult::AtFinal => unreachable!("guarded by can_perform_k_steps"),
    };
    let ctx = vec![em.e.clone(); k - 1];
    let next = k_step(em, &next_cfg, k - 1);
    one_step(em, &ctx, c, next, &mut |r, cfg| {
        let [o1, o2] = others_of(r);
        let mut rest = vec![z_var(r)];
        rest.extend(vec![reg_var(o1); cfg.get(o1) as usize]);
        rest.extend(vec![reg_var(o2); cfg.get(o2) as usize]);
        burn_es(
            em,
            k - 1,
            r,
            &rest,
            zero_base(em, r, cfg.get(o1) as usize, cfg.get(o2) as usize, StarFlavor::Omega),
        )
    })
}

// --- circular synthesis ------------------------------------------------------

/// `(E^h)^*, E^j (as copies), z_r, o1^m1, o2^m2 |- D` by star induction with
/// the guarded invariant (z_r . o1^m1 . o2^m2 . E^j) ⊸ D.
fn zero_star_check(
    em: &EncodedMachine,
    h: usize,
    j: usize,
    r: Register,
    m1: usize,
    m2: usize,
) -> Derivation {
    let d = &em.d;
    let [o1, o2] = others_of(r);
    let mut g_items = vec![z_var(r)];
    g_items.extend(vec![reg_var(o1); m1]);
    g_items.extend(vec![reg_var(o2); m2]);
    g_items.extend(vec![em.e.clone(); j]);
    let regs: Vec<Formula> = g_items[..1 + m1 + m2].to_vec();
    let g = big_dot(g_items.clone());
    let guard = imp(g.clone(), d.clone());
    let body = power(&em.e, h);
    let star_f = star(body.clone());

    // (i) |- G ⊸ D
    let base_inner = burn_es(
        em,
        j,
        r,
        &regs,
        zero_base(em, r, m1, m2, StarFlavor::CommAct),
    );
    let base = infer(
        Rule::ImpR,
        seq(vec![], &guard),
        vec![dot_elim(&[], &g_items, d, base_inner)],
    );

    // (ii) E^h, G ⊸ D |- G ⊸ D
    let exit = {
        let mut ant = g_items.clone();
        ant.push(guard.clone());
        infer(
            Rule::ImpL,
            seq(ant, d),
            vec![dot_intro(&g_items), id_axiom(d.clone())],
        )
    };
    let mut burn_rest = vec![guard.clone()];
    burn_rest.extend(g_items.clone());
    let burned = burn_es(em, h, r, &burn_rest, exit);
    let expanded = expand_power(&burn_rest, &em.e, h, d, burned);
    let step_inner = dot_elim(&[body.clone(), guard.clone()], &g_items, d, expanded);
    let step_prem = infer(
        Rule::ImpR,
        seq(vec![body.clone(), guard.clone()], &guard),
        vec![step_inner],
    );

    let p1 = infer(
        Rule::StarLInd,
        seq(vec![star_f.clone()], &guard),
        vec![base, step_prem],
    );
    let p2 = {
        let mut ant = g_items.clone();
        ant.push(guard.clone());
        infer(
            Rule::ImpL,
            seq(ant, d),
            vec![dot_intro(&g_items), id_axiom(d.clone())],
        )
    };
    let mut conclusion_ant = vec![star_f];
    conclusion_ant.extend(g_items);
    cut(seq(conclusion_ant, d), guard, p1, p2)
}

/// Disjuncts of the loop formula W for a configuration: the configuration
/// product itself, then the three zero disjuncts of D.
fn w_disjuncts(em: &EncodedMachine, cfg: &Configuration) -> Vec<Formula> {
    let mut out = vec![big_dot(gamma(em, cfg))];
    for r in REGISTERS_IN_ORDER {
        out.push(zero_disjunct(r));
    }
    out
}

fn w_formula(em: &EncodedMachine, cfg: &Configuration) -> Formula {
    big_vee(w_disjuncts(em, cfg))
}

fn guard_formula(em: &EncodedMachine, cfg: &Configuration) -> Formula {
    imp(w_formula(em, cfg), em.d.clone())
}

/// `guard, Γ(cfg) |- D`: enter the guard through the configuration disjunct.
fn exit_via_guard(em: &EncodedMachine, cfg: &Configuration) -> Derivation {
    let g = gamma(em, cfg);
    let w_dis = w_disjuncts(em, cfg);
    let prem1 = vee_select(&g, &w_dis, 0, dot_intro(&g));
    let mut ant = g;
    ant.push(guard_formula(em, cfg));
    infer(
        Rule::ImpL,
        seq(ant, &em.d),
        vec![prem1, id_axiom(em.d.clone())],
    )
}

/// `(E^k)^* |- W(anchor) ⊸ D` by star induction: one pass around the cycle
/// re-establishes the guard, zero tests escape through the zero disjuncts
/// of W.
fn loop_invariant(
    em: &EncodedMachine,
    cycle: &[Configuration],
    anchor: usize,
) -> Derivation {
    let k = cycle.len();
    let d = &em.d;
    let cfg = &cycle[anchor];
    let w_dis = w_disjuncts(em, cfg);
    let guard = guard_formula(em, cfg);
    let body = power(&em.e, k);
    let g_items = gamma(em, cfg);

    // (i) |- W ⊸ D
    let base_cases = vee_cases(&[], &w_dis, d, &mut |m, dm| {
        if m == 0 {
            dot_elim(&[], &g_items, d, base_case(em, cfg, StarFlavor::CommAct))
        } else {
            vee_select(
                std::slice::from_ref(dm),
                &em.d_disjuncts,
                m,
                id_axiom(dm.clone()),
            )
        }
    });
    let base = infer(Rule::ImpR, seq(vec![], &guard), vec![base_cases]);

    // (ii) E^k, W ⊸ D |- W ⊸ D
    let step_rest = vec![body.clone(), guard.clone()];
    let step_cases = vee_cases(&step_rest, &w_dis, d, &mut |m, _| {
        if m == 0 {
            // one pass around the cycle, then back through the guard
            let mut run = exit_via_guard(em, cfg);
            for t in (0..k).rev() {
                let at = &cycle[(anchor + t) % k];
                let mut ctx = vec![guard.clone()];
                ctx.extend(vec![em.e.clone(); k - t - 1]);
                run = one_step(em, &ctx, at, run, &mut |r, zcfg| {
                    cycle_zero_escape(em, cfg, &ctx, r, zcfg)
                });
            }
            let expanded = expand_power(
                &join(&[guard.clone()], &g_items),
                &em.e,
                k,
                d,
                run,
            );
            dot_elim(&step_rest, &g_items, d, expanded)
        } else {
            // a zero disjunct of W: burn the E's and re-enter the guard
            let r = REGISTERS_IN_ORDER[m - 1];
            let [o1, o2] = others_of(r);
            let items = vec![star(reg_var(o1)), star(reg_var(o2)), z_var(r)];
            let exit = {
                let prem1 = vee_select(&items, &w_dis, m, dot_intro(&items));
                let mut ant = items.clone();
                ant.push(guard.clone());
                infer(Rule::ImpL, seq(ant, d), vec![prem1, id_axiom(d.clone())])
            };
            let mut burn_rest = vec![guard.clone()];
            burn_rest.extend(items.clone());
            let burned = burn_es(em, k, r, &burn_rest, exit);
            let expanded = expand_power(&burn_rest, &em.e, k, d, burned);
            dot_elim(&step_rest, &items, d, expanded)
        }
    });
    let step_prem = infer(
        Rule::ImpR,
        seq(vec![body.clone(), guard.clone()], &guard),
        vec![step_cases],
    );

    infer(
        Rule::StarLInd,
        seq(vec![star(body)], &guard),
        vec![base, step_prem],
    )
}

/// Zero escape during a cycle pass: burn leftover loose E's, then hit the
/// anchor guard through the matching zero disjunct of W.
fn cycle_zero_escape(
    em: &EncodedMachine,
    anchor_cfg: &Configuration,
    ctx: &[Formula],
    r: Register,
    zcfg: &Configuration,
) -> Derivation {
    let d = &em.d;
    let [o1, o2] = others_of(r);
    let m1 = zcfg.get(o1) as usize;
    let m2 = zcfg.get(o2) as usize;
    let guard = guard_formula(em, anchor_cfg);
    let w_dis = w_disjuncts(em, anchor_cfg);
    let loose = ctx.len() - 1; // ctx = guard plus that many loose E's
    let mut regs = vec![z_var(r)];
    regs.extend(vec![reg_var(o1); m1]);
    regs.extend(vec![reg_var(o2); m2]);
    let exit = {
        let prem1 = vee_select(
            &regs,
            &w_dis,
            reg_index(r) + 1,
            zero_disjunct_intro(r, m1, m2, StarFlavor::CommAct),
        );
        let mut ant = regs.clone();
        ant.push(guard.clone());
        infer(Rule::ImpL, seq(ant, d), vec![prem1, id_axiom(d.clone())])
    };
    let mut rest = vec![guard];
    rest.extend(regs);
    burn_es(em, loose, r, &rest, exit)
}

/// `(E^k)^*, E^i (copies), Γ(v_0) |- D`: run i cycle steps, then cut against
/// the loop invariant anchored at v_i.
fn cycle_tail(em: &EncodedMachine, cycle: &[Configuration], i: usize) -> Derivation {
    let k = cycle.len();
    let d = &em.d;
    let s = star(power(&em.e, k));
    let anchor = i % k;
    let anchor_cfg = &cycle[anchor];
    // S, Γ(v_i) |- D by cutting in the invariant
    let mut run = {
        let p2 = exit_via_guard(em, anchor_cfg);
        let mut ant = vec![s.clone()];
        ant.extend(gamma(em, anchor_cfg));
        cut(
            seq(ant, d),
            guard_formula(em, anchor_cfg),
            loop_invariant(em, cycle, anchor),
            p2,
        )
    };
    for t in (0..i).rev() {
        let at = &cycle[t % k];
        let mut ctx = vec![s.clone()];
        ctx.extend(vec![em.e.clone(); i - t - 1]);
        let loose = i - t - 1;
        run = one_step(em, &ctx, at, run, &mut |r, zcfg| {
            let [o1, o2] = others_of(r);
            zero_star_check(
                em,
                k,
                loose,
                r,
                zcfg.get(o1) as usize,
                zcfg.get(o2) as usize,
            )
        });
    }
    run
}

/// `E^*, Γ(v_0) |- D` for the cycle entry: split E^* into prefix powers and
/// (E^k)^*, then branch on the power.
fn cycle_entry(em: &EncodedMachine, cycle: &[Configuration]) -> Derivation {
    let k = cycle.len();
    let d = &em.d;
    let e_powers: Vec<Formula> = (0..k).map(|i| power(&em.e, i)).collect();
    let v_formula = big_vee(e_powers.clone());
    let s = star(power(&em.e, k));
    let split = kleene_split_schema(&em.e, k).expect("cycle period is positive");
    let g0 = gamma(em, &cycle[0]);

    let rest = join(std::slice::from_ref(&s), &g0);
    let cases = vee_cases(&rest, &e_powers, d, &mut |i, _| {
        expand_power(&rest, &em.e, i, d, cycle_tail(em, cycle, i))
    });
    let mut dotl_ant = vec![dot(v_formula.clone(), s.clone())];
    dotl_ant.extend(g0.clone());
    let glue = infer(Rule::DotL, seq(dotl_ant, d), vec![cases]);

    let mut ant = vec![star(em.e.clone())];
    ant.extend(g0);
    cut(seq(ant, d), dot(v_formula, s), split, glue)
}

/// Prefix and cycle of the run on input x, or an error when the run is not
/// circular within the classification bound.
fn circular_trace(
    em: &EncodedMachine,
    x: u64,
) -> Result<(Vec<Configuration>, Vec<Configuration>), String> {
    match classify(&em.machine, x, CLASSIFY_BOUND) {
        RunResult::Circular { prefix, period, .. } => {
            let mut configs = vec![em.machine.initial(x)];
            for _ in 0..prefix + period {
                match step(&em.machine, *configs.last().unwrap()) {
                    StepResult::Next(c) => configs.push(c),
                    StepResult::AtFinal => unreachable!("circular runs never halt"),
                }
            }
            let cycle = configs[prefix..prefix + period].to_vec();
            let head = configs[..prefix].to_vec();
            Ok((head, cycle))
        }
        other => Err(format!(
            "run is not circular within {CLASSIFY_BOUND} steps: {other:?}"
        )),
    }
}

/// Derivation of `E^*, q_S, a^x |- D` when the machine runs circularly on x.
pub fn synth_circular(em: &EncodedMachine, x: u64) -> Result<Derivation, String> {
    let (head, cycle) = circular_trace(em, x)?;
    let mut proof = cycle_entry(em, &cycle);
    let e_star = star(em.e.clone());
    for cfg in head.iter().rev() {
        let inner = one_step(
            em,
            std::slice::from_ref(&e_star),
            cfg,
            proof,
            &mut |r, zcfg| {
                let [o1, o2] = others_of(r);
                zero_star_check(em, 1, 0, r, zcfg.get(o1) as usize, zcfg.get(o2) as usize)
            },
        );
        proof = derived_star_left(
            &gamma(em, cfg),
            &em.e,
            &em.d,
            base_case(em, cfg, StarFlavor::CommAct),
            inner,
        )
        .expect("prefix block premises are constructed to match");
    }
    Ok(proof)
}

/// Directly circular witness with backlinks, checkable in the circular
/// calculus.
pub fn synth_circular_witness(em: &EncodedMachine, x: u64) -> Result<Derivation, String> {
    let (head, cycle) = circular_trace(em, x)?;
    let e_star = star(em.e.clone());
    let d = &em.d;
    let mut label_counter = 0usize;
    let mut fresh = move || {
        label_counter += 1;
        format!("l{label_counter}")
    };

    let mut zero_block = |em: &EncodedMachine, r: Register, zcfg: &Configuration| -> Derivation {
        // self-looping zero check: E^*, z_r, o1^m1, o2^m2 |- D
        let label = fresh();
        let [o1, o2] = others_of(r);
        let mut regs = vec![z_var(r)];
        regs.extend(vec![reg_var(o1); zcfg.get(o1) as usize]);
        regs.extend(vec![reg_var(o2); zcfg.get(o2) as usize]);
        let p1 = zero_base(
            em,
            r,
            zcfg.get(o1) as usize,
            zcfg.get(o2) as usize,
            StarFlavor::Circ,
        );
        let inner_rest = join(std::slice::from_ref(&e_star), &regs);
        let mut impl_ant = inner_rest.clone();
        impl_ant.push(imp(z_var(r), z_var(r)));
        let impl_node = infer(
            Rule::ImpL,
            seq(impl_ant, d),
            vec![
                id_axiom(z_var(r)),
                Derivation::Backlink {
                    label: label.clone(),
                },
            ],
        );
        let p2 = wedge_nav(&inner_rest, &em.conjuncts, reg_index(r), d, impl_node);
        let mut ant = vec![e_star.clone()];
        ant.extend(regs);
        infer(Rule::StarL2, seq(ant, d), vec![p1, p2]).with_label(&label)
    };

    let configs: Vec<Configuration> = head.iter().chain(cycle.iter()).copied().collect();
    let prefix = head.len();
    let total = configs.len();
    let loop_label = "loop";

    let mut proof = Derivation::Backlink {
        label: loop_label.to_string(),
    };
    for pos in (0..total).rev() {
        let cfg = &configs[pos];
        let inner = one_step(
            em,
            std::slice::from_ref(&e_star),
            cfg,
            proof,
            &mut |r, zcfg| zero_block(em, r, zcfg),
        );
        let mut ant = vec![e_star.clone()];
        ant.extend(gamma(em, cfg));
        let node = infer(
            Rule::StarL2,
            seq(ant, d),
            vec![base_case(em, cfg, StarFlavor::Circ), inner],
        );
        proof = if pos == prefix {
            node.with_label(loop_label)
        } else {
            node
        };
    }
    Ok(proof)
}
