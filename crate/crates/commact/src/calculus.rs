//! Proof objects and proof checking for the three calculi.
//!
//! `OmegaFin` is the infinitary calculus restricted to finite proofs (no
//! omega-rule, so star on the left is never introduced). `CommAct` has the
//! finitary star axioms and induction rule. `Circ` replaces the star rules
//! with the two-premise left rule and step right rule and admits backlinks.

use std::fmt;

use crate::formula::{Formula, Sequent};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CalculusId {
    OmegaFin,
    CommAct,
    Circ,
}

impl fmt::Display for CalculusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalculusId::OmegaFin => write!(f, "omega-fin"),
            CalculusId::CommAct => write!(f, "commact"),
            CalculusId::Circ => write!(f, "circ"),
        }
    }
}

impl std::str::FromStr for CalculusId {
    type Err = String;
    fn from_str(s: &str) -> Result<CalculusId, String> {
        match s {
            "omega-fin" => Ok(CalculusId::OmegaFin),
            "commact" => Ok(CalculusId::CommAct),
            "circ" => Ok(CalculusId::Circ),
            other => Err(format!("unknown calculus `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Id,
    ZeroL,
    OneL,
    OneR,
    ImpL,
    ImpR,
    DotL,
    DotR,
    VeeL,
    VeeR1,
    VeeR2,
    WedgeL1,
    WedgeL2,
    WedgeR,
    StarRN,
    StarR0,
    StarRStep,
    StarL2,
    StarLInd,
    StarRInd,
    Cut,
}

pub const RULE_NAMES: &[(Rule, &str)] = &[
    (Rule::Id, "Id"),
    (Rule::ZeroL, "ZeroL"),
    (Rule::OneL, "OneL"),
    (Rule::OneR, "OneR"),
    (Rule::ImpL, "ImpL"),
    (Rule::ImpR, "ImpR"),
    (Rule::DotL, "DotL"),
    (Rule::DotR, "DotR"),
    (Rule::VeeL, "VeeL"),
    (Rule::VeeR1, "VeeR1"),
    (Rule::VeeR2, "VeeR2"),
    (Rule::WedgeL1, "WedgeL1"),
    (Rule::WedgeL2, "WedgeL2"),
    (Rule::WedgeR, "WedgeR"),
    (Rule::StarRN, "StarRN"),
    (Rule::StarR0, "StarR0"),
    (Rule::StarRStep, "StarRStep"),
    (Rule::StarL2, "StarL2"),
    (Rule::StarLInd, "StarLInd"),
    (Rule::StarRInd, "StarRInd"),
    (Rule::Cut, "Cut"),
];

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = RULE_NAMES.iter().find(|(r, _)| r == self).unwrap().1;
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Rule {
    type Err = String;
    fn from_str(s: &str) -> Result<Rule, String> {
        RULE_NAMES
            .iter()
            .find(|(_, n)| *n == s)
            .map(|(r, _)| *r)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

impl Rule {
    pub fn allowed_in(self, calc: CalculusId) -> bool {
        use Rule::*;
        match self {
            Id | ZeroL | OneL | OneR | ImpL | ImpR | DotL | DotR | VeeL | VeeR1 | VeeR2
            | WedgeL1 | WedgeL2 | WedgeR | Cut => true,
            StarRN => calc == CalculusId::OmegaFin,
            StarR0 => calc != CalculusId::OmegaFin,
            StarRInd | StarLInd => calc == CalculusId::CommAct,
            StarRStep | StarL2 => calc == CalculusId::Circ,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    Inference {
        rule: Rule,
        conclusion: Sequent,
        premises: Vec<Derivation>,
        /// Cut formula, stored for `Cut` nodes.
        cut_formula: Option<Formula>,
        label: Option<String>,
    },
    Backlink {
        label: String,
    },
}

pub fn infer(rule: Rule, conclusion: Sequent, premises: Vec<Derivation>) -> Derivation {
    Derivation::Inference {
        rule,
        conclusion,
        premises,
        cut_formula: None,
        label: None,
    }
}

/// `Id` axiom node `f |- f`.
pub fn id_axiom(f: Formula) -> Derivation {
    let s = Sequent::new(vec![f.clone()], f);
    infer(Rule::Id, s, vec![])
}

pub fn cut(conclusion: Sequent, cut_formula: Formula, p1: Derivation, p2: Derivation) -> Derivation {
    Derivation::Inference {
        rule: Rule::Cut,
        conclusion,
        premises: vec![p1, p2],
        cut_formula: Some(cut_formula),
        label: None,
    }
}

impl Derivation {
    pub fn conclusion(&self) -> Option<&Sequent> {
        match self {
            Derivation::Inference { conclusion, .. } => Some(conclusion),
            Derivation::Backlink { .. } => None,
        }
    }

    /// Conclusion of a node known not to be a backlink.
    pub fn conclusion_or_panic(&self) -> &Sequent {
        self.conclusion().expect("backlink node has no conclusion")
    }

    pub fn with_label(mut self, l: &str) -> Derivation {
        if let Derivation::Inference { label, .. } = &mut self {
            *label = Some(l.to_string());
        }
        self
    }

    pub fn node_count(&self) -> usize {
        match self {
            Derivation::Inference { premises, .. } => {
                1 + premises.iter().map(|p| p.node_count()).sum::<usize>()
            }
            Derivation::Backlink { .. } => 1,
        }
    }

    pub fn contains_rule(&self, rule: Rule) -> bool {
        match self {
            Derivation::Inference {
                rule: r, premises, ..
            } => *r == rule || premises.iter().any(|p| p.contains_rule(rule)),
            Derivation::Backlink { .. } => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Premise indices from the root to the offending node.
    pub path: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at ")?;
        if self.path.is_empty() {
            write!(f, "root")?;
        } else {
            let parts: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
            write!(f, "node {}", parts.join("."))?;
        }
        write!(f, ": {}", self.reason)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub valid: bool,
    pub violation: Option<Violation>,
}

impl CheckReport {
    fn ok() -> CheckReport {
        CheckReport {
            valid: true,
            violation: None,
        }
    }
}

// --- multiset helpers on antecedent slices -------------------------------

pub fn remove_one(v: &[Formula], f: &Formula) -> Option<Vec<Formula>> {
    let idx = v.iter().position(|g| g == f)?;
    let mut out = v.to_vec();
    out.remove(idx);
    Some(out)
}

pub fn contains(v: &[Formula], f: &Formula) -> bool {
    v.iter().any(|g| g == f)
}

fn with_extra(v: &[Formula], extra: &[Formula]) -> Vec<Formula> {
    let mut out = v.to_vec();
    out.extend_from_slice(extra);
    out
}

/// Distinct formulas of `v` (first occurrence of each).
fn distinct(v: &[Formula]) -> Vec<&Formula> {
    let mut out: Vec<&Formula> = Vec::new();
    for f in v {
        if !out.iter().any(|g| *g == f) {
            out.push(f);
        }
    }
    out
}

fn seq(ant: Vec<Formula>, succ: &Formula) -> Sequent {
    Sequent::new(ant, succ.clone())
}

// --- rule instance checking ----------------------------------------------

fn check_rule_instance(
    rule: Rule,
    c: &Sequent,
    ps: &[&Sequent],
    cut_formula: Option<&Formula>,
) -> Result<(), String> {
    let arity_err = |n: usize| {
        Err(format!(
            "rule {rule} expects {n} premise(s), found {}",
            ps.len()
        ))
    };
    let no_instance = || Err(format!("no valid instance of rule {rule} matches the premises"));
    let ant = c.antecedent();
    let succ = c.succedent();
    match rule {
        Rule::Id => {
            if !ps.is_empty() {
                return arity_err(0);
            }
            if ant.len() == 1 && &ant[0] == succ {
                Ok(())
            } else {
                Err("Id conclusion must be of the form A |- A".to_string())
            }
        }
        Rule::ZeroL => {
            if !ps.is_empty() {
                return arity_err(0);
            }
            if contains(ant, &Formula::Zero) {
                Ok(())
            } else {
                Err("ZeroL conclusion must contain 0 in the antecedent".to_string())
            }
        }
        Rule::OneR => {
            if !ps.is_empty() {
                return arity_err(0);
            }
            if ant.is_empty() && succ == &Formula::One {
                Ok(())
            } else {
                Err("OneR conclusion must be |- 1".to_string())
            }
        }
        Rule::OneL => {
            if ps.len() != 1 {
                return arity_err(1);
            }
            match remove_one(ant, &Formula::One) {
                Some(rest) => {
                    if *ps[0] == seq(rest, succ) {
                        Ok(())
                    } else {
                        no_instance()
                    }
                }
                None => Err("OneL conclusion must contain 1 in the antecedent".to_string()),
            }
        }
        Rule::ImpL => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            if ps[1].succedent() != succ {
                return no_instance();
            }
            for f in distinct(ant) {
                if let Formula::Imp(a, b) = f {
                    if ps[0].succedent() != a.as_ref() {
                        continue;
                    }
                    let Some(gamma) = remove_one(ps[1].antecedent(), b) else {
                        continue;
                    };
                    let rest = remove_one(ant, f).unwrap();
                    let mut combined = gamma;
                    combined.extend_from_slice(ps[0].antecedent());
                    if seq(combined, succ) == seq(rest, succ) {
                        return Ok(());
                    }
                }
            }
            no_instance()
        }
        Rule::ImpR => {
            if ps.len() != 1 {
                return arity_err(1);
            }
            if let Formula::Imp(a, b) = succ {
                let want = seq(with_extra(ant, &[a.as_ref().clone()]), b);
                if *ps[0] == want {
                    return Ok(());
                }
            }
            no_instance()
        }
        Rule::DotL => {
            if ps.len() != 1 {
                return arity_err(1);
            }
            for f in distinct(ant) {
                if let Formula::Dot(a, b) = f {
                    let rest = remove_one(ant, f).unwrap();
                    let want = seq(
                        with_extra(&rest, &[a.as_ref().clone(), b.as_ref().clone()]),
                        succ,
                    );
                    if *ps[0] == want {
                        return Ok(());
                    }
                }
            }
            no_instance()
        }
        Rule::DotR => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            if let Formula::Dot(a, b) = succ {
                if ps[0].succedent() == a.as_ref() && ps[1].succedent() == b.as_ref() {
                    let union = with_extra(ps[0].antecedent(), ps[1].antecedent());
                    if seq(union, succ) == *c {
                        return Ok(());
                    }
                }
            }
            no_instance()
        }
        Rule::VeeL => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            for f in distinct(ant) {
                if let Formula::Vee(a, b) = f {
                    let rest = remove_one(ant, f).unwrap();
                    let w1 = seq(with_extra(&rest, &[a.as_ref().clone()]), succ);
                    let w2 = seq(with_extra(&rest, &[b.as_ref().clone()]), succ);
                    if *ps[0] == w1 && *ps[1] == w2 {
                        return Ok(());
                    }
                }
            }
            no_instance()
        }
        Rule::VeeR1 | Rule::VeeR2 => {
            if ps.len() != 1 {
                return arity_err(1);
            }
            if let Formula::Vee(a, b) = succ {
                let side = if rule == Rule::VeeR1 { a } else { b };
                if *ps[0] == seq(ant.to_vec(), side) {
                    return Ok(());
                }
            }
            no_instance()
        }
        Rule::WedgeL1 | Rule::WedgeL2 => {
            if ps.len() != 1 {
                return arity_err(1);
            }
            for f in distinct(ant) {
                if let Formula::Wedge(a, b) = f {
                    let side = if rule == Rule::WedgeL1 { a } else { b };
                    let rest = remove_one(ant, f).unwrap();
                    if *ps[0] == seq(with_extra(&rest, &[side.as_ref().clone()]), succ) {
                        return Ok(());
                    }
                }
            }
            no_instance()
        }
        Rule::WedgeR => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            if let Formula::Wedge(a, b) = succ {
                if *ps[0] == seq(ant.to_vec(), a) && *ps[1] == seq(ant.to_vec(), b) {
                    return Ok(());
                }
            }
            no_instance()
        }
        Rule::StarRN => {
            let Formula::Star(a) = succ else {
                return Err("StarRN succedent must be a star formula".to_string());
            };
            if ps.is_empty() {
                return if ant.is_empty() {
                    Ok(())
                } else {
                    Err("StarRN with no premises requires an empty antecedent".to_string())
                };
            }
            let mut union = Vec::new();
            for p in ps {
                if p.succedent() != a.as_ref() {
                    return Err("StarRN premise succedent must be the star body".to_string());
                }
                if p.antecedent().is_empty() {
                    return Err("StarRN premise parts must be nonempty".to_string());
                }
                union.extend_from_slice(p.antecedent());
            }
            if seq(union, succ) == *c {
                Ok(())
            } else {
                no_instance()
            }
        }
        Rule::StarR0 => {
            if !ps.is_empty() {
                return arity_err(0);
            }
            if ant.is_empty() && matches!(succ, Formula::Star(_)) {
                Ok(())
            } else {
                Err("StarR0 conclusion must be |- A^*".to_string())
            }
        }
        Rule::StarRInd => {
            if !ps.is_empty() {
                return arity_err(0);
            }
            if let Formula::Star(a) = succ {
                let want = seq(vec![a.as_ref().clone(), succ.clone()], succ);
                if *c == want {
                    return Ok(());
                }
            }
            Err("StarRInd conclusion must be A, A^* |- A^*".to_string())
        }
        Rule::StarLInd => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            if ant.len() == 1 {
                if let Formula::Star(a) = &ant[0] {
                    let w1 = seq(vec![], succ);
                    let w2 = seq(vec![a.as_ref().clone(), succ.clone()], succ);
                    if *ps[0] == w1 && *ps[1] == w2 {
                        return Ok(());
                    }
                    return no_instance();
                }
            }
            Err("StarLInd conclusion must be A^* |- B".to_string())
        }
        Rule::StarL2 => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            if starl2_principals(c, ps[0], ps[1]).is_empty() {
                no_instance()
            } else {
                Ok(())
            }
        }
        Rule::StarRStep => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            if let Formula::Star(a) = succ {
                if ps[0].succedent() == a.as_ref() && ps[1].succedent() == succ {
                    let union = with_extra(ps[0].antecedent(), ps[1].antecedent());
                    if seq(union, succ) == *c {
                        return Ok(());
                    }
                }
            }
            no_instance()
        }
        Rule::Cut => {
            if ps.len() != 2 {
                return arity_err(2);
            }
            let a = ps[0].succedent();
            if let Some(cf) = cut_formula {
                if cf != a {
                    return Err("declared cut formula does not match left premise succedent".to_string());
                }
            }
            if ps[1].succedent() != succ {
                return no_instance();
            }
            let Some(gamma) = remove_one(ps[1].antecedent(), a) else {
                return Err("cut formula missing from right premise antecedent".to_string());
            };
            let union = with_extra(&gamma, ps[0].antecedent());
            if seq(union, succ) == *c {
                Ok(())
            } else {
                no_instance()
            }
        }
    }
}

/// Star formulas of the conclusion that are valid principals of a `StarL2`
/// instance with the given premises.
fn starl2_principals(c: &Sequent, p1: &Sequent, p2: &Sequent) -> Vec<Formula> {
    let mut out = Vec::new();
    if p1.succedent() != c.succedent() || p2.succedent() != c.succedent() {
        return out;
    }
    for f in distinct(c.antecedent()) {
        if let Formula::Star(a) = f {
            let rest = remove_one(c.antecedent(), f).unwrap();
            let w1 = seq(rest, c.succedent());
            let w2 = seq(
                with_extra(c.antecedent(), &[a.as_ref().clone()]),
                c.succedent(),
            );
            if *p1 == w1 && *p2 == w2 {
                out.push(f.clone());
            }
        }
    }
    out
}

// --- tree checking ---------------------------------------------------------

struct Frame<'a> {
    label: Option<&'a str>,
    conclusion: &'a Sequent,
    starl2_principals: Vec<Formula>,
}

fn find_target<'a>(stack: &[Frame<'a>], label: &str) -> Option<usize> {
    stack.iter().rposition(|f| f.label == Some(label))
}

fn check_node<'a>(
    d: &'a Derivation,
    calc: CalculusId,
    path: &mut Vec<usize>,
    stack: &mut Vec<Frame<'a>>,
) -> Result<(), Violation> {
    let fail = |path: &[usize], reason: String| {
        Err(Violation {
            path: path.to_vec(),
            reason,
        })
    };
    match d {
        Derivation::Backlink { .. } => fail(path, "backlink at proof root".to_string()),
        Derivation::Inference {
            rule,
            conclusion,
            premises,
            cut_formula,
            label,
        } => {
            if !rule.allowed_in(calc) {
                return fail(path, format!("rule {rule} is not part of calculus {calc}"));
            }
            stack.push(Frame {
                label: label.as_deref(),
                conclusion,
                starl2_principals: Vec::new(),
            });
            let result = (|| {
                // Resolve premise conclusions, chasing backlinks through the
                // ancestor stack.
                let mut resolved: Vec<&Sequent> = Vec::with_capacity(premises.len());
                let mut backlink_targets: Vec<Option<usize>> = Vec::with_capacity(premises.len());
                for (i, p) in premises.iter().enumerate() {
                    match p {
                        Derivation::Inference { conclusion, .. } => {
                            resolved.push(conclusion);
                            backlink_targets.push(None);
                        }
                        Derivation::Backlink { label: l } => {
                            if calc != CalculusId::Circ {
                                path.push(i);
                                let r = fail(path, format!("backlinks are only allowed in {}", CalculusId::Circ));
                                path.pop();
                                return r;
                            }
                            let Some(idx) = find_target(stack, l) else {
                                path.push(i);
                                let r = fail(path, format!("backlink to unknown label `{l}`"));
                                path.pop();
                                return r;
                            };
                            resolved.push(stack[idx].conclusion);
                            backlink_targets.push(Some(idx));
                        }
                    }
                }
                if let Err(reason) = check_rule_instance(*rule, conclusion, &resolved, cut_formula.as_ref()) {
                    return fail(path, reason);
                }
                if *rule == Rule::StarL2 {
                    let principals = starl2_principals(conclusion, resolved[0], resolved[1]);
                    stack.last_mut().unwrap().starl2_principals = principals;
                }
                for (i, p) in premises.iter().enumerate() {
                    path.push(i);
                    let r = match p {
                        Derivation::Inference { .. } => check_node(p, calc, path, stack),
                        Derivation::Backlink { .. } => {
                            check_trace(stack, backlink_targets[i].unwrap(), path)
                        }
                    };
                    path.pop();
                    r?;
                }
                Ok(())
            })();
            stack.pop();
            result
        }
    }
}

/// Conservative trace condition: on the cycle from the backlink target down
/// to the backlink, some `StarL2` application must have a principal star
/// formula that occurs in the antecedent of every sequent on the cycle.
fn check_trace(stack: &[Frame<'_>], target: usize, path: &[usize]) -> Result<(), Violation> {
    let cycle = &stack[target..];
    let mut candidates: Vec<&Formula> = Vec::new();
    for frame in cycle {
        for p in &frame.starl2_principals {
            if !candidates.iter().any(|c| *c == p) {
                candidates.push(p);
            }
        }
    }
    let ok = candidates.iter().any(|cand| {
        cycle
            .iter()
            .all(|frame| contains(frame.conclusion.antecedent(), cand))
    });
    if ok {
        Ok(())
    } else {
        Err(Violation {
            path: path.to_vec(),
            reason: "trace condition fails: no StarL2 principal star persists along the cycle"
                .to_string(),
        })
    }
}

/// Check a derivation against a calculus.
pub fn check(d: &Derivation, calc: CalculusId) -> CheckReport {
    let mut path = Vec::new();
    let mut stack = Vec::new();
    match check_node(d, calc, &mut path, &mut stack) {
        Ok(()) => CheckReport::ok(),
        Err(v) => CheckReport {
            valid: false,
            violation: Some(v),
        },
    }
}
