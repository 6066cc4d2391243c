//! Finite commutative action lattices given by explicit operation tables,
//! used as a soundness oracle for derivations.

use std::collections::BTreeSet;
use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::Derivation;
use crate::formula::{Formula, Sequent};

#[derive(Clone, Debug)]
pub struct FiniteActionLattice {
    pub size: usize,
    pub leq: Vec<Vec<bool>>,
    pub dot: Vec<Vec<usize>>,
    pub vee: Vec<Vec<usize>>,
    pub wedge: Vec<Vec<usize>>,
    pub imp: Vec<Vec<usize>>,
    pub star: Vec<usize>,
    pub zero: usize,
    pub one: usize,
}

pub type Valuation = HashMap<String, usize>;

impl FiniteActionLattice {
    /// The two-element Boolean model: product is meet, star is constantly 1.
    pub fn b2() -> Self {
        FiniteActionLattice {
            size: 2,
            leq: vec![vec![true, true], vec![false, true]],
            dot: vec![vec![0, 0], vec![0, 1]],
            vee: vec![vec![0, 1], vec![1, 1]],
            wedge: vec![vec![0, 0], vec![0, 1]],
            imp: vec![vec![1, 1], vec![0, 1]],
            star: vec![1, 1],
            zero: 0,
            one: 1,
        }
    }

    fn le(&self, x: usize, y: usize) -> bool {
        self.leq[x][y]
    }

    /// All axiom violations, empty when the tables form a *-continuous
    /// commutative action lattice.
    pub fn validate(&self) -> Vec<String> {
        let n = self.size;
        let mut bad = Vec::new();
        let mut report = |msg: String| {
            if bad.len() < 20 {
                bad.push(msg);
            }
        };

        // partial order with bottom 0
        for x in 0..n {
            if !self.le(x, x) {
                report(format!("leq not reflexive at {x}"));
            }
            if !self.le(self.zero, x) {
                report(format!("0 is not below {x}"));
            }
            for y in 0..n {
                if x != y && self.le(x, y) && self.le(y, x) {
                    report(format!("leq not antisymmetric at {x},{y}"));
                }
                for z in 0..n {
                    if self.le(x, y) && self.le(y, z) && !self.le(x, z) {
                        report(format!("leq not transitive at {x},{y},{z}"));
                    }
                }
            }
        }

        // commutative monoid with unit 1
        for x in 0..n {
            if self.dot[x][self.one] != x || self.dot[self.one][x] != x {
                report(format!("1 is not a unit at {x}"));
            }
            for y in 0..n {
                if self.dot[x][y] != self.dot[y][x] {
                    report(format!("product not commutative at {x},{y}"));
                }
                for z in 0..n {
                    if self.dot[self.dot[x][y]][z] != self.dot[x][self.dot[y][z]] {
                        report(format!("product not associative at {x},{y},{z}"));
                    }
                }
            }
        }

        // residuation
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if self.le(self.dot[x][y], z) != self.le(y, self.imp[x][z]) {
                        report(format!("residuation fails at {x},{y},{z}"));
                    }
                }
            }
        }

        // join and meet
        for x in 0..n {
            for y in 0..n {
                let j = self.vee[x][y];
                let m = self.wedge[x][y];
                for z in 0..n {
                    if (self.le(x, z) && self.le(y, z)) != self.le(j, z) {
                        report(format!("vee is not the join at {x},{y}"));
                    }
                    if (self.le(z, x) && self.le(z, y)) != self.le(z, m) {
                        report(format!("wedge is not the meet at {x},{y}"));
                    }
                }
            }
        }

        // star: least prefixpoint above 1
        for x in 0..n {
            let s = self.star[x];
            if !self.le(self.one, s) || !self.le(self.dot[x][s], s) {
                report(format!("star({x}) is not a prefixpoint above 1"));
            }
            for y in 0..n {
                if self.le(self.one, y) && self.le(self.dot[x][y], y) && !self.le(s, y) {
                    report(format!("star({x}) is not least (beaten by {y})"));
                }
            }
        }

        // *-continuity: star(x) equals the join of the powers x^0..x^{2n}
        for x in 0..n {
            let mut p = self.one;
            let mut join = self.one;
            for _ in 0..2 * n {
                p = self.dot[p][x];
                join = self.vee[join][p];
            }
            if join != self.star[x] {
                report(format!("star({x}) differs from the join of powers"));
            }
        }

        bad
    }
}

pub fn eval(f: &Formula, l: &FiniteActionLattice, v: &Valuation) -> Result<usize, String> {
    Ok(match f {
        Formula::Var(name) => *v
            .get(name)
            .ok_or_else(|| format!("unbound variable `{name}`"))?,
        Formula::Zero => l.zero,
        Formula::One => l.one,
        Formula::Dot(a, b) => l.dot[eval(a, l, v)?][eval(b, l, v)?],
        Formula::Vee(a, b) => l.vee[eval(a, l, v)?][eval(b, l, v)?],
        Formula::Wedge(a, b) => l.wedge[eval(a, l, v)?][eval(b, l, v)?],
        Formula::Imp(a, b) => l.imp[eval(a, l, v)?][eval(b, l, v)?],
        Formula::Star(a) => l.star[eval(a, l, v)?],
    })
}

pub fn sequent_holds(
    s: &Sequent,
    l: &FiniteActionLattice,
    v: &Valuation,
) -> Result<bool, String> {
    let mut prod = l.one;
    for f in s.antecedent() {
        prod = l.dot[prod][eval(f, l, v)?];
    }
    Ok(l.leq[prod][eval(s.succedent(), l, v)?])
}

fn formula_vars(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::Var(name) => {
            out.insert(name.clone());
        }
        Formula::Zero | Formula::One => {}
        Formula::Dot(a, b) | Formula::Vee(a, b) | Formula::Wedge(a, b) | Formula::Imp(a, b) => {
            formula_vars(a, out);
            formula_vars(b, out);
        }
        Formula::Star(a) => formula_vars(a, out),
    }
}

pub fn sequent_vars(s: &Sequent) -> Vec<String> {
    let mut set = BTreeSet::new();
    for f in s.antecedent() {
        formula_vars(f, &mut set);
    }
    formula_vars(s.succedent(), &mut set);
    set.into_iter().collect()
}

/// Exhaustive sweeps are capped at this many valuations; larger variable
/// counts fall back to seeded random trials.
pub const EXHAUSTIVE_CAP: usize = 1024;
pub const RANDOM_TRIALS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SoundnessResult {
    Ok { exhaustive: bool },
    Counterexample(Valuation),
}

/// Evaluate the conclusion of a derivation under all valuations (or seeded
/// random trials beyond the cap). A counterexample means the derivation, or
/// the checker that admitted it, is broken.
pub fn soundness_check(
    d: &Derivation,
    l: &FiniteActionLattice,
    seed: u64,
) -> Result<SoundnessResult, String> {
    let s = d
        .conclusion()
        .ok_or("a bare backlink has no conclusion to evaluate")?;
    sequent_soundness(s, l, seed)
}

pub fn sequent_soundness(
    s: &Sequent,
    l: &FiniteActionLattice,
    seed: u64,
) -> Result<SoundnessResult, String> {
    let vars = sequent_vars(s);
    let total = l.size.checked_pow(vars.len() as u32);
    match total {
        Some(t) if t <= EXHAUSTIVE_CAP => {
            for idx in 0..t {
                let mut v = Valuation::new();
                let mut rem = idx;
                for name in &vars {
                    v.insert(name.clone(), rem % l.size);
                    rem /= l.size;
                }
                if !sequent_holds(s, l, &v)? {
                    return Ok(SoundnessResult::Counterexample(v));
                }
            }
            Ok(SoundnessResult::Ok { exhaustive: true })
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..RANDOM_TRIALS {
                let v: Valuation = vars
                    .iter()
                    .map(|name| (name.clone(), rng.gen_range(0..l.size)))
                    .collect();
                if !sequent_holds(s, l, &v)? {
                    return Ok(SoundnessResult::Counterexample(v));
                }
            }
            Ok(SoundnessResult::Ok { exhaustive: false })
        }
    }
}

// --- lattice files ----------------------------------------------------------
//
// Format:
//   size n
//   leq / dot / vee / wedge / imp: keyword then n rows of n entries
//   star: keyword then one row of n entries
//   zero i
//   one j

pub fn parse_lattice(text: &str) -> Result<FiniteActionLattice, String> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines.next().ok_or("empty lattice file")?;
    let n: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["size", v] => v.parse().map_err(|_| "bad size".to_string())?,
        _ => return Err("expected `size n` header".to_string()),
    };
    if n == 0 {
        return Err("carrier must be nonempty".to_string());
    }

    let mut leq = None;
    let mut dot = None;
    let mut vee = None;
    let mut wedge = None;
    let mut imp = None;
    let mut star = None;
    let mut zero = None;
    let mut one = None;

    let parse_row = |line: &str, n: usize| -> Result<Vec<usize>, String> {
        let row: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| format!("bad entry `{t}`")))
            .collect::<Result<_, _>>()?;
        if row.len() != n {
            return Err(format!("expected {n} entries, got {}", row.len()));
        }
        if let Some(bad) = row.iter().find(|e| **e >= n) {
            return Err(format!("entry {bad} out of carrier range"));
        }
        Ok(row)
    };

    while let Some(line) = lines.next() {
        let mut parts = line.split_whitespace();
        let kw = parts.next().unwrap();
        match kw {
            "leq" | "dot" | "vee" | "wedge" | "imp" => {
                let mut table = Vec::with_capacity(n);
                for _ in 0..n {
                    let row = lines.next().ok_or_else(|| format!("{kw}: missing rows"))?;
                    table.push(parse_row(row, n)?);
                }
                let slot = match kw {
                    "leq" => &mut leq,
                    "dot" => &mut dot,
                    "vee" => &mut vee,
                    "wedge" => &mut wedge,
                    _ => &mut imp,
                };
                if slot.replace(table).is_some() {
                    return Err(format!("duplicate `{kw}` table"));
                }
            }
            "star" => {
                let row = lines.next().ok_or("star: missing row")?;
                if star.replace(parse_row(row, n)?).is_some() {
                    return Err("duplicate `star` table".to_string());
                }
            }
            "zero" | "one" => {
                let v: usize = parts
                    .next()
                    .ok_or_else(|| format!("{kw}: missing element"))?
                    .parse()
                    .map_err(|_| format!("{kw}: bad element"))?;
                if v >= n {
                    return Err(format!("{kw}: element out of range"));
                }
                let slot = if kw == "zero" { &mut zero } else { &mut one };
                if slot.replace(v).is_some() {
                    return Err(format!("duplicate `{kw}`"));
                }
            }
            other => return Err(format!("unknown keyword `{other}`")),
        }
    }

    let leq_table = leq.ok_or("missing `leq` table")?;
    Ok(FiniteActionLattice {
        size: n,
        leq: leq_table
            .into_iter()
            .map(|row| row.into_iter().map(|e| e != 0).collect())
            .collect(),
        dot: dot.ok_or("missing `dot` table")?,
        vee: vee.ok_or("missing `vee` table")?,
        wedge: wedge.ok_or("missing `wedge` table")?,
        imp: imp.ok_or("missing `imp` table")?,
        star: star.ok_or("missing `star` table")?,
        zero: zero.ok_or("missing `zero`")?,
        one: one.ok_or("missing `one`")?,
    })
}

pub fn render_lattice(l: &FiniteActionLattice) -> String {
    let mut out = format!("size {}\n", l.size);
    let table = |name: &str, t: &[Vec<usize>], out: &mut String| {
        out.push_str(name);
        out.push('\n');
        for row in t {
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    };
    let leq: Vec<Vec<usize>> = l
        .leq
        .iter()
        .map(|row| row.iter().map(|b| usize::from(*b)).collect())
        .collect();
    table("leq", &leq, &mut out);
    table("dot", &l.dot, &mut out);
    table("vee", &l.vee, &mut out);
    table("wedge", &l.wedge, &mut out);
    table("imp", &l.imp, &mut out);
    out.push_str("star\n");
    let cells: Vec<String> = l.star.iter().map(|e| e.to_string()).collect();
    out.push_str(&cells.join(" "));
    out.push('\n');
    out.push_str(&format!("zero {}\none {}\n", l.zero, l.one));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::id_axiom;
    use crate::formula::{parse_formula, parse_sequent, var};

    #[test]
    fn b2_is_valid() {
        assert!(FiniteActionLattice::b2().validate().is_empty());
    }

    #[test]
    fn broken_star_detected() {
        let mut l = FiniteActionLattice::b2();
        l.star[1] = 0;
        let bad = l.validate();
        assert!(bad.iter().any(|m| m.contains("star")), "{bad:?}");
    }

    #[test]
    fn asymmetric_dot_detected() {
        let mut l = FiniteActionLattice::b2();
        l.dot[0][1] = 1; // but dot[1][0] stays 0
        let bad = l.validate();
        assert!(bad.iter().any(|m| m.contains("commutative")), "{bad:?}");
    }

    #[test]
    fn eval_examples() {
        let l = FiniteActionLattice::b2();
        let empty = Valuation::new();
        assert_eq!(eval(&parse_formula("1").unwrap(), &l, &empty), Ok(1));
        let v: Valuation = [("a".to_string(), 0)].into();
        assert_eq!(eval(&parse_formula("a^*").unwrap(), &l, &v), Ok(1));
        let v: Valuation = [("p".to_string(), 1), ("q".to_string(), 0)].into();
        assert_eq!(eval(&parse_formula("p -o q").unwrap(), &l, &v), Ok(0));
        assert!(eval(&parse_formula("r").unwrap(), &l, &v).is_err());
    }

    #[test]
    fn sequent_evaluation() {
        let l = FiniteActionLattice::b2();
        for p in 0..2 {
            let v: Valuation = [("p".to_string(), p)].into();
            assert_eq!(
                sequent_holds(&parse_sequent("p |- p").unwrap(), &l, &v),
                Ok(true)
            );
        }
        assert_eq!(
            sequent_holds(&parse_sequent("|- 0").unwrap(), &l, &Valuation::new()),
            Ok(false)
        );
        let v: Valuation = [("p".to_string(), 1), ("q".to_string(), 0)].into();
        assert_eq!(
            sequent_holds(&parse_sequent("p |- q").unwrap(), &l, &v),
            Ok(false)
        );
    }

    #[test]
    fn soundness_finds_counterexample() {
        let l = FiniteActionLattice::b2();
        let bogus = id_axiom(var("p")); // pretend it concluded p |- q
        let _ = bogus;
        match sequent_soundness(&parse_sequent("p |- q").unwrap(), &l, 7).unwrap() {
            SoundnessResult::Counterexample(v) => {
                assert_eq!(v.get("p"), Some(&1));
                assert_eq!(v.get("q"), Some(&0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn soundness_of_axiom() {
        let l = FiniteActionLattice::b2();
        assert_eq!(
            soundness_check(&id_axiom(var("p")), &l, 7).unwrap(),
            SoundnessResult::Ok { exhaustive: true }
        );
    }

    #[test]
    fn random_fallback_beyond_cap() {
        // 11 variables over B2 exceed the 1024-valuation cap
        let l = FiniteActionLattice::b2();
        let names: Vec<String> = (0..11).map(|i| format!("v{i}")).collect();
        let s = parse_sequent(&format!("{} |- v0", names.join(", "))).unwrap();
        assert_eq!(
            sequent_soundness(&s, &l, 7).unwrap(),
            SoundnessResult::Ok { exhaustive: false }
        );
    }

    #[test]
    fn file_round_trip() {
        let l = FiniteActionLattice::b2();
        let text = render_lattice(&l);
        let back = parse_lattice(&text).unwrap();
        assert!(back.validate().is_empty());
        assert_eq!(back.star, l.star);
        assert_eq!(back.leq, l.leq);
    }

    #[test]
    fn file_errors() {
        assert!(parse_lattice("").is_err());
        assert!(parse_lattice("size 2\nleq\n1 1\n").is_err()); // missing row
        assert!(parse_lattice("size 2\nzero 5\n").is_err());
        assert!(parse_lattice("size 2\nfrobnicate\n").is_err());
    }

    #[test]
    fn star_clause_holds_in_b2() {
        let l = FiniteActionLattice::b2();
        for x in 0..l.size {
            let s = l.star[x];
            assert!(l.leq[l.one][s]);
            assert!(l.leq[l.dot[x][s]][s]);
        }
    }
}
