//! Exhaustive, memoized, cut-free backward proof search.
//!
//! Complete for sequents without negative star occurrences: on that fragment
//! the left star rules are never applicable, every remaining rule strictly
//! decreases the rank, and backward search terminates.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::calculus::{contains, infer, remove_one, Derivation, Rule};
use crate::formula::{has_negative_star, rank, Formula, Rank, Sequent};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub memo_hits: usize,
    pub max_depth: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Derivable {
        /// Present when proof emission was requested.
        proof: Option<Derivation>,
        stats: SearchStats,
    },
    NotDerivable {
        stats: SearchStats,
    },
    Refused {
        reason: String,
    },
}

impl SearchOutcome {
    pub fn is_derivable(&self) -> bool {
        matches!(self, SearchOutcome::Derivable { .. })
    }
}

enum MemoEntry {
    Proved(Option<Derivation>),
    Refuted,
    InProgress,
}

#[derive(Default)]
struct Engine {
    emit: bool,
    memo: HashMap<Sequent, MemoEntry>,
    /// Partition found (or refuted) for star-succedent sequents.
    star_memo: HashMap<Sequent, Option<Vec<Vec<Formula>>>>,
    stats: SearchStats,
}

/// Decide derivability; `emit_proof` controls whether a proof object is
/// built for the positive answer.
pub fn decide(s: &Sequent, emit_proof: bool) -> SearchOutcome {
    if has_negative_star(s) {
        return SearchOutcome::Refused {
            reason: "sequent has a negative star occurrence; search is incomplete there"
                .to_string(),
        };
    }
    let start = Instant::now();
    let mut engine = Engine {
        emit: emit_proof,
        memo: HashMap::new(),
        star_memo: HashMap::new(),
        stats: SearchStats::default(),
    };
    let result = engine.prove(s, None, 0);
    engine.stats.elapsed = start.elapsed();
    match result {
        Some(proof) => SearchOutcome::Derivable {
            proof,
            stats: engine.stats,
        },
        None => SearchOutcome::NotDerivable {
            stats: engine.stats,
        },
    }
}

/// Proof-free fast path; `None` when the sequent is out of fragment.
pub fn decide_bool(s: &Sequent) -> Option<bool> {
    match decide(s, false) {
        SearchOutcome::Derivable { .. } => Some(true),
        SearchOutcome::NotDerivable { .. } => Some(false),
        SearchOutcome::Refused { .. } => None,
    }
}

/// Proof-free search context whose memo tables persist across queries, for
/// sweeps over many related sequents.
#[derive(Default)]
pub struct Prover {
    engine: Engine,
}

impl Prover {
    pub fn new() -> Self {
        Self::default()
    }

    /// Like [`decide_bool`], but reuses everything learned by earlier calls.
    pub fn decide_bool(&mut self, s: &Sequent) -> Option<bool> {
        if has_negative_star(s) {
            return None;
        }
        Some(self.engine.prove(s, None, 0).is_some())
    }
}

impl Engine {
    /// `Some(proof_opt)` when derivable, `None` otherwise.
    fn prove(
        &mut self,
        s: &Sequent,
        parent_rank: Option<&Rank>,
        depth: usize,
    ) -> Option<Option<Derivation>> {
        if cfg!(debug_assertions) {
            if let Some(pr) = parent_rank {
                debug_assert!(rank(s) < *pr, "premise rank must strictly decrease: {s}");
            }
        }
        self.stats.max_depth = self.stats.max_depth.max(depth);
        match self.memo.get(s) {
            Some(MemoEntry::Proved(p)) => {
                self.stats.memo_hits += 1;
                return Some(p.clone());
            }
            Some(MemoEntry::Refuted) => {
                self.stats.memo_hits += 1;
                return None;
            }
            Some(MemoEntry::InProgress) => {
                unreachable!("cycle in search despite decreasing rank: {s}")
            }
            None => {}
        }
        // soundness prune: anything falsifiable in the Boolean model is
        // underivable, and the check is a cheap bitwise sweep
        if b2_falsifiable(s) {
            self.memo.insert(s.clone(), MemoEntry::Refuted);
            return None;
        }
        self.memo.insert(s.clone(), MemoEntry::InProgress);
        let r = rank(s);
        let result = self.expand(s, &r, depth);
        self.memo.insert(
            s.clone(),
            match &result {
                Some(p) => MemoEntry::Proved(p.clone()),
                None => MemoEntry::Refuted,
            },
        );
        result
    }

    fn wrap(&self, rule: Rule, c: &Sequent, ps: Vec<Option<Derivation>>) -> Option<Derivation> {
        if !self.emit {
            return None;
        }
        Some(infer(
            rule,
            c.clone(),
            ps.into_iter().map(|p| p.unwrap()).collect(),
        ))
    }

    fn expand(&mut self, s: &Sequent, r: &Rank, depth: usize) -> Option<Option<Derivation>> {
        self.stats.nodes_expanded += 1;
        let ant = s.antecedent();
        let succ = s.succedent();

        // axioms
        if contains(ant, &Formula::Zero) {
            return Some(self.wrap(Rule::ZeroL, s, vec![]));
        }
        if ant.len() == 1 && &ant[0] == succ {
            return Some(self.wrap(Rule::Id, s, vec![]));
        }
        if ant.is_empty() && succ == &Formula::One {
            return Some(self.wrap(Rule::OneR, s, vec![]));
        }

        // invertible rules, saturated eagerly
        if let Some(rest) = remove_one(ant, &Formula::One) {
            let premise = Sequent::new(rest, succ.clone());
            let p = self.prove(&premise, Some(r), depth + 1)?;
            return Some(self.wrap(Rule::OneL, s, vec![p]));
        }
        if let Some(f) = ant.iter().find(|f| matches!(f, Formula::Dot(_, _))) {
            let (a, b) = match f {
                Formula::Dot(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
                _ => unreachable!(),
            };
            let mut rest = remove_one(ant, f).unwrap();
            rest.push(a);
            rest.push(b);
            let premise = Sequent::new(rest, succ.clone());
            let p = self.prove(&premise, Some(r), depth + 1)?;
            return Some(self.wrap(Rule::DotL, s, vec![p]));
        }
        if let Some(f) = ant.iter().find(|f| matches!(f, Formula::Vee(_, _))) {
            let (a, b) = match f {
                Formula::Vee(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
                _ => unreachable!(),
            };
            let rest = remove_one(ant, f).unwrap();
            let mut left = rest.clone();
            left.push(a);
            let mut right = rest;
            right.push(b);
            let p1 = self.prove(&Sequent::new(left, succ.clone()), Some(r), depth + 1)?;
            let p2 = self.prove(&Sequent::new(right, succ.clone()), Some(r), depth + 1)?;
            return Some(self.wrap(Rule::VeeL, s, vec![p1, p2]));
        }
        if let Formula::Imp(a, b) = succ {
            let mut ext = ant.to_vec();
            ext.push(a.as_ref().clone());
            let premise = Sequent::new(ext, b.as_ref().clone());
            let p = self.prove(&premise, Some(r), depth + 1)?;
            return Some(self.wrap(Rule::ImpR, s, vec![p]));
        }
        if let Formula::Wedge(a, b) = succ {
            let p1 = self.prove(
                &Sequent::new(ant.to_vec(), a.as_ref().clone()),
                Some(r),
                depth + 1,
            )?;
            let p2 = self.prove(
                &Sequent::new(ant.to_vec(), b.as_ref().clone()),
                Some(r),
                depth + 1,
            )?;
            return Some(self.wrap(Rule::WedgeR, s, vec![p1, p2]));
        }

        // branching choices; first success wins
        if let Formula::Vee(a, b) = succ {
            let left = Sequent::new(ant.to_vec(), a.as_ref().clone());
            if let Some(p) = self.prove(&left, Some(r), depth + 1) {
                return Some(self.wrap(Rule::VeeR1, s, vec![p]));
            }
            let right = Sequent::new(ant.to_vec(), b.as_ref().clone());
            if let Some(p) = self.prove(&right, Some(r), depth + 1) {
                return Some(self.wrap(Rule::VeeR2, s, vec![p]));
            }
        }
        for f in distinct(ant) {
            if let Formula::Wedge(a, b) = &f {
                let rest = remove_one(ant, &f).unwrap();
                for (rule, side) in [(Rule::WedgeL1, a.as_ref()), (Rule::WedgeL2, b.as_ref())] {
                    let mut ext = rest.clone();
                    ext.push(side.clone());
                    let premise = Sequent::new(ext, succ.clone());
                    if let Some(p) = self.prove(&premise, Some(r), depth + 1) {
                        return Some(self.wrap(rule, s, vec![p]));
                    }
                }
            }
        }
        if let Formula::Dot(a, b) = succ {
            for (pi, gamma) in splits(ant) {
                let s1 = Sequent::new(pi, a.as_ref().clone());
                let Some(p1) = self.prove(&s1, Some(r), depth + 1) else {
                    continue;
                };
                let s2 = Sequent::new(gamma, b.as_ref().clone());
                if let Some(p2) = self.prove(&s2, Some(r), depth + 1) {
                    return Some(self.wrap(Rule::DotR, s, vec![p1, p2]));
                }
            }
        }
        for f in distinct(ant) {
            if let Formula::Imp(a, b) = &f {
                let rest = remove_one(ant, &f).unwrap();
                for (pi, mut gamma) in splits(&rest) {
                    let s1 = Sequent::new(pi, a.as_ref().clone());
                    let Some(p1) = self.prove(&s1, Some(r), depth + 1) else {
                        continue;
                    };
                    gamma.push(b.as_ref().clone());
                    let s2 = Sequent::new(gamma, succ.clone());
                    if let Some(p2) = self.prove(&s2, Some(r), depth + 1) {
                        return Some(self.wrap(Rule::ImpL, s, vec![p1, p2]));
                    }
                }
            }
        }
        if let Formula::Star(a) = succ {
            if let Some(parts) = self.star_split(ant, a, r, depth) {
                let proofs = parts
                    .iter()
                    .map(|part| {
                        self.prove(&Sequent::new(part.clone(), a.as_ref().clone()), Some(r), depth + 1)
                            .expect("parts were proved when the partition was found")
                    })
                    .collect();
                return Some(self.wrap(Rule::StarRN, s, proofs));
            }
        }
        None
    }

    /// Partition the antecedent into nonempty parts each deriving `a`, if
    /// possible. Enumerates only splits whose first part contains a fixed
    /// pivot element, which covers every partition exactly once; the tail is
    /// memoized.
    fn star_split(
        &mut self,
        ant: &[Formula],
        a: &Formula,
        r: &Rank,
        depth: usize,
    ) -> Option<Vec<Vec<Formula>>> {
        if ant.is_empty() {
            return Some(vec![]);
        }
        let key = Sequent::new(ant.to_vec(), Formula::Star(a.clone().into()));
        if let Some(cached) = self.star_memo.get(&key) {
            self.stats.memo_hits += 1;
            return cached.clone();
        }
        let mut result = None;
        for (part, rest) in pivot_splits(ant) {
            let sub = Sequent::new(part.clone(), a.clone());
            if self.prove(&sub, Some(r), depth + 1).is_none() {
                continue;
            }
            if let Some(mut parts) = self.star_split(&rest, a, r, depth) {
                parts.push(part);
                result = Some(parts);
                break;
            }
        }
        self.star_memo.insert(key, result.clone());
        result
    }
}

fn distinct(v: &[Formula]) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::new();
    for f in v {
        if !out.contains(f) {
            out.push(f.clone());
        }
    }
    out
}

/// All splits of a multiset into an ordered pair of sub-multisets,
/// enumerated by per-formula counts rather than by element positions.
fn splits(ms: &[Formula]) -> Vec<(Vec<Formula>, Vec<Formula>)> {
    let mut groups: Vec<(Formula, usize)> = Vec::new();
    for f in ms {
        match groups.iter_mut().find(|(g, _)| g == f) {
            Some((_, c)) => *c += 1,
            None => groups.push((f.clone(), 1)),
        }
    }
    let mut out = vec![(Vec::new(), Vec::new())];
    for (f, c) in groups {
        let mut next = Vec::with_capacity(out.len() * (c + 1));
        for (left, right) in out {
            for take in 0..=c {
                let mut l = left.clone();
                let mut r = right.clone();
                for _ in 0..take {
                    l.push(f.clone());
                }
                for _ in take..c {
                    r.push(f.clone());
                }
                next.push((l, r));
            }
        }
        out = next;
    }
    out
}

/// Splits of a nonempty multiset into (part containing the first element,
/// remainder). Every partition into nonempty parts has exactly one part
/// containing that pivot, so recursing on the remainder enumerates each
/// partition once.
fn pivot_splits(ms: &[Formula]) -> Vec<(Vec<Formula>, Vec<Formula>)> {
    splits(&ms[1..])
        .into_iter()
        .map(|(mut part, rest)| {
            part.push(ms[0].clone());
            (part, rest)
        })
        .collect()
}

/// True when some 0/1 valuation makes every antecedent member true and the
/// succedent false in the two-element Boolean model (star constantly true,
/// product = meet). Such sequents are underivable by soundness. Valuations
/// are swept in bulk: each formula is evaluated to a truth table over all
/// assignments, packed into 64-bit words.
fn b2_falsifiable(s: &Sequent) -> bool {
    let mut vars: Vec<&str> = Vec::new();
    for f in s.antecedent().iter().chain([s.succedent()]) {
        collect_vars(f, &mut vars);
    }
    if vars.len() > 12 {
        return false; // too wide to sweep; stay inconclusive
    }
    let bits = 1usize << vars.len();
    let words = bits.div_ceil(64);
    let table = |f: &Formula| tt(f, &vars, words);

    let mut product = vec![!0u64; words];
    for f in s.antecedent() {
        for (p, w) in product.iter_mut().zip(table(f)) {
            *p &= w;
        }
    }
    let succ = table(s.succedent());
    let mut falsified = product
        .iter()
        .zip(&succ)
        .map(|(p, q)| p & !q)
        .collect::<Vec<u64>>();
    // ignore assignments beyond 2^v in a partial last word
    if bits % 64 != 0 {
        let last = falsified.len() - 1;
        falsified[last] &= (1u64 << (bits % 64)) - 1;
    }
    falsified.iter().any(|w| *w != 0)
}

fn collect_vars<'a>(f: &'a Formula, out: &mut Vec<&'a str>) {
    match f {
        Formula::Var(name) => {
            if !out.contains(&name.as_str()) {
                out.push(name);
            }
        }
        Formula::Zero | Formula::One => {}
        Formula::Dot(a, b) | Formula::Vee(a, b) | Formula::Wedge(a, b) | Formula::Imp(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Formula::Star(a) => collect_vars(a, out),
    }
}

/// Truth table of `f` over all assignments to `vars`, bit j of the table
/// giving the value under assignment j.
fn tt(f: &Formula, vars: &[&str], words: usize) -> Vec<u64> {
    match f {
        Formula::Var(name) => {
            let i = vars.iter().position(|v| *v == name).unwrap();
            if i < 6 {
                // alternating blocks of 2^i bits within each word
                let block = 1u64 << i;
                let mut pattern = 0u64;
                let mut j = 0;
                while j < 64 {
                    if (j / block as usize) % 2 == 1 {
                        pattern |= 1 << j;
                    }
                    j += 1;
                }
                vec![pattern; words]
            } else {
                (0..words)
                    .map(|w| if (w >> (i - 6)) & 1 == 1 { !0 } else { 0 })
                    .collect()
            }
        }
        Formula::Zero => vec![0; words],
        Formula::One | Formula::Star(_) => vec![!0; words],
        Formula::Dot(a, b) | Formula::Wedge(a, b) => binop(a, b, vars, words, |x, y| x & y),
        Formula::Vee(a, b) => binop(a, b, vars, words, |x, y| x | y),
        Formula::Imp(a, b) => binop(a, b, vars, words, |x, y| !x | y),
    }
}

fn binop(
    a: &Formula,
    b: &Formula,
    vars: &[&str],
    words: usize,
    op: fn(u64, u64) -> u64,
) -> Vec<u64> {
    tt(a, vars, words)
        .into_iter()
        .zip(tt(b, vars, words))
        .map(|(x, y)| op(x, y))
        .collect()
}
