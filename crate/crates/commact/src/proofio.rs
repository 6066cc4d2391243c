//! Proof files: a small s-expression format for derivations.
//!
//! `(proof <calculus> <node>)` where a node is one of
//!   `(node <RULE> "<sequent>" (cutf "<formula>")? <node>*)`
//!   `(label <id> <node>)`
//!   `(back <id>)`

use std::fmt::Write as _;
use std::str::FromStr;

use crate::calculus::{CalculusId, Derivation, Rule};
use crate::formula::{parse_formula, parse_sequent};

pub fn render_proof(calculus: CalculusId, d: &Derivation) -> String {
    let mut out = format!("(proof {calculus}\n");
    render_node(d, 1, &mut out);
    out.push_str(")\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn render_node(d: &Derivation, depth: usize, out: &mut String) {
    indent(out, depth);
    match d {
        Derivation::Backlink { label } => {
            let _ = write!(out, "(back {label})");
        }
        Derivation::Inference {
            rule,
            conclusion,
            premises,
            cut_formula,
            label,
        } => {
            if let Some(l) = label {
                let _ = write!(out, "(label {l}\n");
                indent(out, depth + 1);
            }
            let _ = write!(out, "(node {rule} \"{conclusion}\"");
            if let Some(f) = cut_formula {
                let _ = write!(out, " (cutf \"{f}\")");
            }
            for p in premises {
                out.push('\n');
                render_node(p, depth + 1, out);
            }
            out.push(')');
            if label.is_some() {
                out.push(')');
            }
        }
    }
    if depth == 1 {
        out.push('\n');
    }
}

// --- parsing ----------------------------------------------------------------

#[derive(Debug, PartialEq)]
enum Sexp {
    Symbol(String),
    Text(String),
    List(Vec<Sexp>),
}

struct Tokens<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens {
            chars: text.chars().peekable(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else if *c == ';' {
                while let Some(c) = self.chars.next() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn parse(&mut self) -> Result<Sexp, String> {
        self.skip_ws();
        match self.chars.peek() {
            None => Err("unexpected end of input".to_string()),
            Some('(') => {
                self.chars.next();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        Some(')') => {
                            self.chars.next();
                            return Ok(Sexp::List(items));
                        }
                        None => return Err("unclosed `(`".to_string()),
                        _ => items.push(self.parse()?),
                    }
                }
            }
            Some(')') => Err("unexpected `)`".to_string()),
            Some('"') => {
                self.chars.next();
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        Some('"') => return Ok(Sexp::Text(s)),
                        Some(c) => s.push(c),
                        None => return Err("unclosed string".to_string()),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.chars.peek() {
                    if c.is_whitespace() || *c == '(' || *c == ')' || *c == '"' {
                        break;
                    }
                    s.push(*c);
                    self.chars.next();
                }
                Ok(Sexp::Symbol(s))
            }
        }
    }
}

pub fn parse_proof(text: &str) -> Result<(CalculusId, Derivation), String> {
    let mut toks = Tokens::new(text);
    let top = toks.parse()?;
    toks.skip_ws();
    if toks.chars.peek().is_some() {
        return Err("trailing input after proof".to_string());
    }
    let items = match top {
        Sexp::List(items) => items,
        _ => return Err("expected `(proof ...)`".to_string()),
    };
    match &items[..] {
        [Sexp::Symbol(kw), Sexp::Symbol(cal), node] if kw == "proof" => {
            let calculus = CalculusId::from_str(cal)?;
            Ok((calculus, node_from_sexp(node)?))
        }
        _ => Err("expected `(proof <calculus> <node>)`".to_string()),
    }
}

fn node_from_sexp(s: &Sexp) -> Result<Derivation, String> {
    let items = match s {
        Sexp::List(items) => items,
        _ => return Err("expected a node list".to_string()),
    };
    match items.first() {
        Some(Sexp::Symbol(kw)) if kw == "back" => match &items[..] {
            [_, Sexp::Symbol(label)] => Ok(Derivation::Backlink {
                label: label.clone(),
            }),
            _ => Err("expected `(back <id>)`".to_string()),
        },
        Some(Sexp::Symbol(kw)) if kw == "label" => match &items[..] {
            [_, Sexp::Symbol(label), node] => Ok(node_from_sexp(node)?.with_label(label)),
            _ => Err("expected `(label <id> <node>)`".to_string()),
        },
        Some(Sexp::Symbol(kw)) if kw == "node" => {
            if items.len() < 3 {
                return Err("expected `(node <RULE> \"<sequent>\" ...)`".to_string());
            }
            let rule = match &items[1] {
                Sexp::Symbol(name) => Rule::from_str(name)?,
                _ => return Err("expected a rule name".to_string()),
            };
            let conclusion = match &items[2] {
                Sexp::Text(text) => parse_sequent(text).map_err(|e| e.to_string())?,
                _ => return Err("expected a quoted sequent".to_string()),
            };
            let mut rest = &items[3..];
            let mut cut_formula = None;
            if let Some(Sexp::List(param)) = rest.first() {
                if matches!(param.first(), Some(Sexp::Symbol(kw)) if kw == "cutf") {
                    match &param[..] {
                        [_, Sexp::Text(text)] => {
                            cut_formula =
                                Some(parse_formula(text).map_err(|e| e.to_string())?);
                        }
                        _ => return Err("expected `(cutf \"<formula>\")`".to_string()),
                    }
                    rest = &rest[1..];
                }
            }
            if rule == Rule::Cut && cut_formula.is_none() {
                return Err("Cut node is missing its cut formula".to_string());
            }
            let premises: Vec<Derivation> =
                rest.iter().map(node_from_sexp).collect::<Result<_, _>>()?;
            Ok(Derivation::Inference {
                rule,
                conclusion,
                premises,
                cut_formula,
                label: None,
            })
        }
        _ => Err("expected `node`, `label`, or `back`".to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{check, cut, id_axiom, infer};
    use crate::encoding::{encode, synth_circular_witness, synth_k_step};
    use crate::formula::{parse_sequent, var};
    use crate::minsky::parse_machine;

    #[test]
    fn axiom_round_trip() {
        let d = id_axiom(var("p"));
        let text = render_proof(CalculusId::OmegaFin, &d);
        let (cal, back) = parse_proof(&text).unwrap();
        assert_eq!(cal, CalculusId::OmegaFin);
        assert_eq!(back, d);
    }

    #[test]
    fn cut_formula_round_trip() {
        let d = cut(
            parse_sequent("p |- p").unwrap(),
            var("p"),
            id_axiom(var("p")),
            id_axiom(var("p")),
        );
        let text = render_proof(CalculusId::CommAct, &d);
        assert!(text.contains("cutf"));
        let (cal, back) = parse_proof(&text).unwrap();
        assert_eq!(cal, CalculusId::CommAct);
        assert_eq!(back, d);
    }

    #[test]
    fn labels_and_backlinks_round_trip() {
        let d = infer(
            crate::calculus::Rule::StarL2,
            parse_sequent("a^*, p |- p").unwrap(),
            vec![
                id_axiom(var("p")),
                Derivation::Backlink {
                    label: "x".to_string(),
                },
            ],
        )
        .with_label("x");
        let text = render_proof(CalculusId::Circ, &d);
        let (cal, back) = parse_proof(&text).unwrap();
        assert_eq!(cal, CalculusId::Circ);
        assert_eq!(back, d);
    }

    #[test]
    fn synthesized_proofs_round_trip_and_recheck() {
        let m = parse_machine("start p\nfinal qf\ninc p a q\njzdec q a p p\n").unwrap();
        let em = encode(&m).unwrap();
        let d = synth_k_step(&em, &em.machine.initial(0), 2).unwrap();
        let text = render_proof(CalculusId::OmegaFin, &d);
        let (cal, back) = parse_proof(&text).unwrap();
        assert_eq!(back, d);
        assert!(check(&back, cal).valid);

        let d = synth_circular_witness(&em, 0).unwrap();
        let text = render_proof(CalculusId::Circ, &d);
        let (cal, back) = parse_proof(&text).unwrap();
        assert_eq!(back, d);
        assert!(check(&back, cal).valid);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_proof("").is_err());
        assert!(parse_proof("(proof omega-fin)").is_err());
        assert!(parse_proof("(proof nope (node Id \"p |- p\"))").is_err());
        assert!(parse_proof("(proof omega-fin (node Id \"p |- p\")) junk").is_err());
        // Cut without its formula
        assert!(parse_proof(
            "(proof omega-fin (node Cut \"p |- p\" (node Id \"p |- p\") (node Id \"p |- p\")))"
        )
        .is_err());
    }

    #[test]
    fn comments_ignored()  {
        let text = "; emitted proof\n(proof omega-fin\n  (node Id \"p |- p\"))\n";
        let (_, d) = parse_proof(text).unwrap();
        assert_eq!(d, id_axiom(var("p")));
    }
}
