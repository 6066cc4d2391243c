//! Formulas and sequents of commutative action logic.
//!
//! Formulas are built from variables and the constants `0`, `1` with the
//! connectives `-o` (linear implication), `.` (product), `\/` (join),
//! `/\` (meet) and postfix `^*` (Kleene star). A sequent has a multiset
//! antecedent and a single succedent formula; antecedents are kept in a
//! canonical sorted order so that equal multisets compare and hash equal.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Var(String),
    Zero,
    One,
    Imp(Arc<Formula>, Arc<Formula>),
    Dot(Arc<Formula>, Arc<Formula>),
    Vee(Arc<Formula>, Arc<Formula>),
    Wedge(Arc<Formula>, Arc<Formula>),
    Star(Arc<Formula>),
}

pub fn var(name: &str) -> Formula {
    Formula::Var(name.to_string())
}

pub fn imp(a: Formula, b: Formula) -> Formula {
    Formula::Imp(Arc::new(a), Arc::new(b))
}

pub fn dot(a: Formula, b: Formula) -> Formula {
    Formula::Dot(Arc::new(a), Arc::new(b))
}

pub fn vee(a: Formula, b: Formula) -> Formula {
    Formula::Vee(Arc::new(a), Arc::new(b))
}

pub fn wedge(a: Formula, b: Formula) -> Formula {
    Formula::Wedge(Arc::new(a), Arc::new(b))
}

pub fn star(a: Formula) -> Formula {
    Formula::Star(Arc::new(a))
}

/// `f^k` as a formula: the right-associated k-fold product, with `f^0 = 1`.
pub fn power(f: &Formula, k: usize) -> Formula {
    match k {
        0 => Formula::One,
        1 => f.clone(),
        _ => dot(f.clone(), power(f, k - 1)),
    }
}

/// Right-associated disjunction of a nonempty list.
pub fn big_vee(mut items: Vec<Formula>) -> Formula {
    assert!(!items.is_empty(), "big_vee of empty list");
    let last = items.pop().unwrap();
    items.into_iter().rev().fold(last, |acc, f| vee(f, acc))
}

/// Right-associated conjunction of a nonempty list.
pub fn big_wedge(mut items: Vec<Formula>) -> Formula {
    assert!(!items.is_empty(), "big_wedge of empty list");
    let last = items.pop().unwrap();
    items.into_iter().rev().fold(last, |acc, f| wedge(f, acc))
}

/// Right-associated product of a nonempty list.
pub fn big_dot(mut items: Vec<Formula>) -> Formula {
    assert!(!items.is_empty(), "big_dot of empty list");
    let last = items.pop().unwrap();
    items.into_iter().rev().fold(last, |acc, f| dot(f, acc))
}

impl Formula {
    /// Total number of subformula occurrences, the formula itself included.
    pub fn complexity(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::Zero | Formula::One => 1,
            Formula::Imp(a, b)
            | Formula::Dot(a, b)
            | Formula::Vee(a, b)
            | Formula::Wedge(a, b) => 1 + a.complexity() + b.complexity(),
            Formula::Star(a) => 1 + a.complexity(),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Formula::Imp(..) => 1,
            Formula::Vee(..) => 2,
            Formula::Wedge(..) => 3,
            Formula::Dot(..) => 4,
            Formula::Star(..) => 5,
            Formula::Var(_) | Formula::Zero | Formula::One => 6,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.prec();
        if p < min {
            write!(f, "(")?;
        }
        match self {
            Formula::Var(name) => write!(f, "{name}")?,
            Formula::Zero => write!(f, "0")?,
            Formula::One => write!(f, "1")?,
            Formula::Imp(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " -o ")?;
                b.fmt_prec(f, 1)?;
            }
            Formula::Vee(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " \\/ ")?;
                b.fmt_prec(f, 3)?;
            }
            Formula::Wedge(a, b) => {
                a.fmt_prec(f, 3)?;
                write!(f, " /\\ ")?;
                b.fmt_prec(f, 4)?;
            }
            Formula::Dot(a, b) => {
                a.fmt_prec(f, 4)?;
                write!(f, " . ")?;
                b.fmt_prec(f, 5)?;
            }
            Formula::Star(a) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^*")?;
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A sequent `A_1, ..., A_n |- B`. The antecedent is a multiset; it is
/// stored in a canonical sorted order so that equal multisets are
/// structurally equal and hash identically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequent {
    antecedent: Vec<Formula>,
    succedent: Formula,
}

impl Sequent {
    pub fn new(mut antecedent: Vec<Formula>, succedent: Formula) -> Sequent {
        antecedent.sort_unstable();
        Sequent {
            antecedent,
            succedent,
        }
    }

    pub fn antecedent(&self) -> &[Formula] {
        &self.antecedent
    }

    pub fn succedent(&self) -> &Formula {
        &self.succedent
    }

    /// A copy of the antecedent with the occurrence at `idx` removed.
    pub fn antecedent_without(&self, idx: usize) -> Vec<Formula> {
        let mut v = self.antecedent.clone();
        v.remove(idx);
        v
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.antecedent.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        if self.antecedent.is_empty() {
            write!(f, "|- {}", self.succedent)
        } else {
            write!(f, " |- {}", self.succedent)
        }
    }
}

/// Sparse rank vector: counts of subformula occurrences by complexity level.
/// Ordered anti-lexicographically, highest level first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Rank(BTreeMap<usize, usize>);

impl Rank {
    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.0
    }
}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Rank) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rank {
    fn cmp(&self, other: &Rank) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let mut levels: Vec<usize> = self.0.keys().chain(other.0.keys()).copied().collect();
        levels.sort_unstable();
        levels.dedup();
        for lvl in levels.into_iter().rev() {
            let a = self.0.get(&lvl).copied().unwrap_or(0);
            let b = other.0.get(&lvl).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

fn tally(f: &Formula, acc: &mut BTreeMap<usize, usize>) -> usize {
    let c = match f {
        Formula::Var(_) | Formula::Zero | Formula::One => 1,
        Formula::Imp(a, b) | Formula::Dot(a, b) | Formula::Vee(a, b) | Formula::Wedge(a, b) => {
            1 + tally(a, acc) + tally(b, acc)
        }
        Formula::Star(a) => 1 + tally(a, acc),
    };
    *acc.entry(c).or_insert(0) += 1;
    c
}

/// Rank of a sequent: for each complexity level, the number of subformula
/// occurrences of that complexity across the antecedent and the succedent.
pub fn rank(s: &Sequent) -> Rank {
    let mut acc = BTreeMap::new();
    for a in s.antecedent() {
        tally(a, &mut acc);
    }
    tally(s.succedent(), &mut acc);
    Rank(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Place {
    Antecedent(usize),
    Succedent,
}

/// One Kleene star occurrence in a sequent: where it lives and its polarity.
/// The path records child indices from the root of the containing formula
/// (0 = left/body, 1 = right).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarOccurrence {
    pub place: Place,
    pub path: Vec<usize>,
    pub polarity: Polarity,
}

fn collect_stars(
    f: &Formula,
    place: Place,
    path: &mut Vec<usize>,
    pol: Polarity,
    out: &mut Vec<StarOccurrence>,
) {
    match f {
        Formula::Var(_) | Formula::Zero | Formula::One => {}
        Formula::Imp(a, b) => {
            path.push(0);
            collect_stars(a, place, path, pol.flip(), out);
            path.pop();
            path.push(1);
            collect_stars(b, place, path, pol, out);
            path.pop();
        }
        Formula::Dot(a, b) | Formula::Vee(a, b) | Formula::Wedge(a, b) => {
            path.push(0);
            collect_stars(a, place, path, pol, out);
            path.pop();
            path.push(1);
            collect_stars(b, place, path, pol, out);
            path.pop();
        }
        Formula::Star(a) => {
            out.push(StarOccurrence {
                place,
                path: path.clone(),
                polarity: pol,
            });
            path.push(0);
            collect_stars(a, place, path, pol, out);
            path.pop();
        }
    }
}

/// All star occurrences of a sequent with their polarities. Polarity starts
/// negative in antecedent formulas and positive in the succedent, and flips
/// through the left argument of `-o`.
pub fn star_polarities(s: &Sequent) -> Vec<StarOccurrence> {
    let mut out = Vec::new();
    for (i, a) in s.antecedent().iter().enumerate() {
        let mut path = Vec::new();
        collect_stars(a, Place::Antecedent(i), &mut path, Polarity::Negative, &mut out);
    }
    let mut path = Vec::new();
    collect_stars(
        s.succedent(),
        Place::Succedent,
        &mut path,
        Polarity::Positive,
        &mut out,
    );
    out
}

pub fn has_negative_star(s: &Sequent) -> bool {
    star_polarities(s)
        .iter()
        .any(|o| o.polarity == Polarity::Negative)
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at position {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(usize),
    Zero,
    One,
    LParen,
    RParen,
    ImpOp,
    VeeOp,
    WedgeOp,
    DotOp,
    Caret,
    StarSym,
    Comma,
    Turnstile,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "number `{n}`"),
            Tok::Zero => write!(f, "`0`"),
            Tok::One => write!(f, "`1`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::ImpOp => write!(f, "`-o`"),
            Tok::VeeOp => write!(f, "`\\/`"),
            Tok::WedgeOp => write!(f, "`/\\`"),
            Tok::DotOp => write!(f, "`.`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::StarSym => write!(f, "`*`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Turnstile => write!(f, "`|-`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '.' => {
                toks.push((Tok::DotOp, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::StarSym, i));
                i += 1;
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'o') {
                    toks.push((Tok::ImpOp, i));
                    i += 2;
                } else if bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) {
                    return Err(ParseError {
                        pos: i,
                        msg: "negative exponent".to_string(),
                    });
                } else {
                    return Err(ParseError {
                        pos: i,
                        msg: "unknown token `-` (expected `-o`)".to_string(),
                    });
                }
            }
            '\\' => {
                if bytes.get(i + 1) == Some(&b'/') {
                    toks.push((Tok::VeeOp, i));
                    i += 2;
                } else {
                    return Err(ParseError {
                        pos: i,
                        msg: "unknown token `\\` (expected `\\/`)".to_string(),
                    });
                }
            }
            '/' => {
                if bytes.get(i + 1) == Some(&b'\\') {
                    toks.push((Tok::WedgeOp, i));
                    i += 2;
                } else {
                    return Err(ParseError {
                        pos: i,
                        msg: "unknown token `/` (expected `/\\`)".to_string(),
                    });
                }
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'-') {
                    toks.push((Tok::Turnstile, i));
                    i += 2;
                } else {
                    return Err(ParseError {
                        pos: i,
                        msg: "unknown token `|` (expected `|-`)".to_string(),
                    });
                }
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let s = &text[start..i];
                if s == "0" {
                    toks.push((Tok::Zero, start));
                } else if s == "1" {
                    toks.push((Tok::One, start));
                } else {
                    let n: usize = s.parse().map_err(|_| ParseError {
                        pos: start,
                        msg: format!("number `{s}` out of range"),
                    })?;
                    toks.push((Tok::Int(n), start));
                }
            }
            'a'..='z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError {
                    pos: i,
                    msg: format!("unknown token `{c}`"),
                })
            }
        }
    }
    toks.push((Tok::Eof, text.len()));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    /// Set when the whole antecedent item turned out to be `F ^ k`.
    captured_power: Option<(Formula, usize)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<(), ParseError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError {
                pos: self.here(),
                msg: format!("expected {}, found {}", want, self.peek()),
            })
        }
    }

    fn err<T>(&self, msg: String) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.here(),
            msg,
        })
    }

    fn parse_atom(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            Tok::Ident(name) => Ok(Formula::Var(name)),
            Tok::Zero => Ok(Formula::Zero),
            Tok::One => Ok(Formula::One),
            Tok::LParen => {
                let f = self.parse_imp(false)?;
                self.expect(&Tok::RParen)?;
                Ok(f)
            }
            t => Err(ParseError {
                pos: self.toks[self.pos.saturating_sub(1)].1,
                msg: format!("expected a formula, found {t}"),
            }),
        }
    }

    /// Postfix chain: `^*` builds a star, `^k` the k-fold product. When
    /// `item_top` is set and a `^k` ends the antecedent item, the power is
    /// captured for multiset expansion instead.
    fn parse_postfix(&mut self, item_top: bool) -> Result<Formula, ParseError> {
        let mut f = self.parse_atom()?;
        while self.peek() == &Tok::Caret {
            self.bump();
            match self.bump() {
                Tok::StarSym => f = star(f),
                Tok::Int(k) => {
                    if item_top
                        && matches!(self.peek(), Tok::Comma | Tok::Turnstile | Tok::Eof)
                    {
                        self.captured_power = Some((f.clone(), k));
                        return Ok(f);
                    }
                    f = power(&f, k);
                }
                Tok::Zero => {
                    // exponent 0 lexes as the constant token
                    if item_top
                        && matches!(self.peek(), Tok::Comma | Tok::Turnstile | Tok::Eof)
                    {
                        self.captured_power = Some((f.clone(), 0));
                        return Ok(f);
                    }
                    f = Formula::One;
                }
                Tok::One => {
                    if item_top
                        && matches!(self.peek(), Tok::Comma | Tok::Turnstile | Tok::Eof)
                    {
                        self.captured_power = Some((f.clone(), 1));
                        return Ok(f);
                    }
                    // f^1 = f
                }
                t => return self.err(format!("expected `*` or an exponent after `^`, found {t}")),
            }
        }
        Ok(f)
    }

    fn parse_dot(&mut self, item_top: bool) -> Result<Formula, ParseError> {
        let mut f = self.parse_postfix(item_top)?;
        if self.captured_power.is_some() {
            return Ok(f);
        }
        while self.peek() == &Tok::DotOp {
            self.bump();
            let rhs = self.parse_postfix(false)?;
            f = dot(f, rhs);
        }
        Ok(f)
    }

    fn parse_wedge(&mut self, item_top: bool) -> Result<Formula, ParseError> {
        let mut f = self.parse_dot(item_top)?;
        if self.captured_power.is_some() {
            return Ok(f);
        }
        while self.peek() == &Tok::WedgeOp {
            self.bump();
            let rhs = self.parse_dot(false)?;
            f = wedge(f, rhs);
        }
        Ok(f)
    }

    fn parse_vee(&mut self, item_top: bool) -> Result<Formula, ParseError> {
        let mut f = self.parse_wedge(item_top)?;
        if self.captured_power.is_some() {
            return Ok(f);
        }
        while self.peek() == &Tok::VeeOp {
            self.bump();
            let rhs = self.parse_wedge(false)?;
            f = vee(f, rhs);
        }
        Ok(f)
    }

    fn parse_imp(&mut self, item_top: bool) -> Result<Formula, ParseError> {
        let f = self.parse_vee(item_top)?;
        if self.captured_power.is_some() {
            return Ok(f);
        }
        if self.peek() == &Tok::ImpOp {
            self.bump();
            let rhs = self.parse_imp(false)?;
            Ok(imp(f, rhs))
        } else {
            Ok(f)
        }
    }

    fn parse_antecedent_item(&mut self, out: &mut Vec<Formula>) -> Result<(), ParseError> {
        self.captured_power = None;
        let f = self.parse_imp(true)?;
        if let Some((base, k)) = self.captured_power.take() {
            for _ in 0..k {
                out.push(base.clone());
            }
        } else {
            out.push(f);
        }
        Ok(())
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        captured_power: None,
    };
    let f = p.parse_imp(false)?;
    if p.peek() != &Tok::Eof {
        return p.err(format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        captured_power: None,
    };
    let mut antecedent = Vec::new();
    if p.peek() != &Tok::Turnstile {
        loop {
            p.parse_antecedent_item(&mut antecedent)?;
            match p.peek() {
                Tok::Comma => {
                    p.bump();
                }
                Tok::Turnstile => break,
                _ => {
                    let (want, found) = (Tok::Turnstile, p.peek().clone());
                    return p.err(format!("expected `,` or {want}, found {found}"));
                }
            }
        }
    }
    p.expect(&Tok::Turnstile)?;
    let succ = p.parse_imp(false)?;
    if p.peek() != &Tok::Eof {
        return p.err(format!("unexpected {} after sequent", p.peek()));
    }
    Ok(Sequent::new(antecedent, succ))
}
