//! Deterministic counter machines with three registers a, b, c.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Register {
    A,
    B,
    C,
}

pub const REGISTERS: [Register; 3] = [Register::A, Register::B, Register::C];

impl Register {
    pub fn name(self) -> &'static str {
        match self {
            Register::A => "a",
            Register::B => "b",
            Register::C => "c",
        }
    }

    fn parse(s: &str) -> Option<Register> {
        match s {
            "a" => Some(Register::A),
            "b" => Some(Register::B),
            "c" => Some(Register::C),
            _ => None,
        }
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruction {
    Inc {
        register: Register,
        next: String,
    },
    Jzdec {
        register: Register,
        on_zero: String,
        on_nonzero: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Machine {
    pub start: String,
    pub final_state: String,
    /// States in file order: every state with an instruction, then the final
    /// state.
    pub states: Vec<String>,
    pub program: Vec<(String, Instruction)>,
}

impl Machine {
    pub fn instruction(&self, state: &str) -> Option<&Instruction> {
        self.program
            .iter()
            .find(|(p, _)| p == state)
            .map(|(_, i)| i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    /// Index into `Machine::states`.
    pub state: usize,
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

impl Configuration {
    pub fn get(&self, r: Register) -> u64 {
        match r {
            Register::A => self.a,
            Register::B => self.b,
            Register::C => self.c,
        }
    }

    fn set(mut self, r: Register, v: u64) -> Configuration {
        match r {
            Register::A => self.a = v,
            Register::B => self.b = v,
            Register::C => self.c = v,
        }
        self
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct MachineError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_machine(text: &str) -> Result<Machine, MachineError> {
    let mut start: Option<String> = None;
    let mut final_state: Option<String> = None;
    let mut program: Vec<(String, Instruction)> = Vec::new();
    let err = |line: usize, msg: String| MachineError { line, msg };
    let check_state = |line: usize, s: &str| -> Result<String, MachineError> {
        let ok = !s.is_empty()
            && s.chars().next().unwrap().is_ascii_lowercase()
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if ok {
            Ok(s.to_string())
        } else {
            Err(err(line, format!("invalid state name `{s}`")))
        }
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        match words[0] {
            "start" => {
                if words.len() != 2 {
                    return Err(err(line, "expected `start <state>`".to_string()));
                }
                if start.is_some() {
                    return Err(err(line, "duplicate start line".to_string()));
                }
                start = Some(check_state(line, words[1])?);
            }
            "final" => {
                if words.len() != 2 {
                    return Err(err(line, "expected `final <state>`".to_string()));
                }
                if final_state.is_some() {
                    return Err(err(line, "duplicate final line".to_string()));
                }
                final_state = Some(check_state(line, words[1])?);
            }
            "inc" => {
                if words.len() != 4 {
                    return Err(err(line, "expected `inc <p> <r> <q>`".to_string()));
                }
                let p = check_state(line, words[1])?;
                let r = Register::parse(words[2])
                    .ok_or_else(|| err(line, format!("unknown register `{}`", words[2])))?;
                let q = check_state(line, words[3])?;
                program.push((p, Instruction::Inc { register: r, next: q }));
            }
            "jzdec" => {
                if words.len() != 5 {
                    return Err(err(line, "expected `jzdec <p> <r> <q0> <q1>`".to_string()));
                }
                let p = check_state(line, words[1])?;
                let r = Register::parse(words[2])
                    .ok_or_else(|| err(line, format!("unknown register `{}`", words[2])))?;
                let q0 = check_state(line, words[3])?;
                let q1 = check_state(line, words[4])?;
                program.push((
                    p,
                    Instruction::Jzdec {
                        register: r,
                        on_zero: q0,
                        on_nonzero: q1,
                    },
                ));
            }
            other => return Err(err(line, format!("unknown directive `{other}`"))),
        }
    }
    let start = start.ok_or_else(|| err(0, "missing start line".to_string()))?;
    let final_state = final_state.ok_or_else(|| err(0, "missing final line".to_string()))?;

    let mut states: Vec<String> = Vec::new();
    let mut add = |s: &str| {
        if !states.iter().any(|t| t == s) {
            states.push(s.to_string());
        }
    };
    for (p, i) in &program {
        add(p);
        match i {
            Instruction::Inc { next, .. } => add(next),
            Instruction::Jzdec {
                on_zero, on_nonzero, ..
            } => {
                add(on_zero);
                add(on_nonzero);
            }
        }
    }
    add(&start);
    add(&final_state);

    for (i, (p, _)) in program.iter().enumerate() {
        if program[..i].iter().any(|(q, _)| q == p) {
            return Err(err(0, format!("duplicate instruction for state `{p}`")));
        }
    }
    let instructionless: Vec<&String> = states
        .iter()
        .filter(|s| !program.iter().any(|(p, _)| p == *s))
        .collect();
    match instructionless.as_slice() {
        [only] if **only == final_state => {}
        [] => {
            return Err(err(
                0,
                format!("final state `{final_state}` has an instruction"),
            ))
        }
        _ => {
            let names: Vec<String> = instructionless
                .iter()
                .filter(|s| ***s != final_state)
                .map(|s| s.to_string())
                .collect();
            return Err(err(
                0,
                format!(
                    "states without instructions besides the final state: {}",
                    names.join(", ")
                ),
            ));
        }
    }
    Ok(Machine {
        start,
        final_state,
        states,
        program,
    })
}

impl Machine {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn initial(&self, x: u64) -> Configuration {
        Configuration {
            state: self.state_index(&self.start).unwrap(),
            a: x,
            b: 0,
            c: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Next(Configuration),
    AtFinal,
}

pub fn step(m: &Machine, c: Configuration) -> StepResult {
    let state = &m.states[c.state];
    if *state == m.final_state {
        return StepResult::AtFinal;
    }
    let instr = m
        .instruction(state)
        .expect("non-final states carry an instruction");
    match instr {
        Instruction::Inc { register, next } => {
            let next_idx = m.state_index(next).unwrap();
            let v = c.get(*register);
            StepResult::Next(Configuration {
                state: next_idx,
                ..c.set(*register, v + 1)
            })
        }
        Instruction::Jzdec {
            register,
            on_zero,
            on_nonzero,
        } => {
            let v = c.get(*register);
            if v == 0 {
                StepResult::Next(Configuration {
                    state: m.state_index(on_zero).unwrap(),
                    ..c
                })
            } else {
                StepResult::Next(Configuration {
                    state: m.state_index(on_nonzero).unwrap(),
                    ..c.set(*register, v - 1)
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Halted,
    Exceeded,
}

/// Run from the standard initial configuration for at most `max_steps`
/// steps; the trace includes the initial configuration.
pub fn run(m: &Machine, x: u64, max_steps: usize) -> (Vec<Configuration>, RunStatus) {
    let mut trace = vec![m.initial(x)];
    for _ in 0..max_steps {
        match step(m, *trace.last().unwrap()) {
            StepResult::Next(c) => trace.push(c),
            StepResult::AtFinal => return (trace, RunStatus::Halted),
        }
    }
    match step(m, *trace.last().unwrap()) {
        StepResult::AtFinal => (trace, RunStatus::Halted),
        StepResult::Next(_) => (trace, RunStatus::Exceeded),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunResult {
    Halted {
        steps: usize,
        configuration: Configuration,
    },
    Circular {
        prefix: usize,
        period: usize,
        configuration: Configuration,
    },
    Exceeded(usize),
}

/// Classify the run on input x: halting, eventually periodic, or unresolved
/// within the step bound.
pub fn classify(m: &Machine, x: u64, max_steps: usize) -> RunResult {
    let mut seen: HashMap<Configuration, usize> = HashMap::new();
    let mut current = m.initial(x);
    for i in 0..=max_steps {
        if let Some(&first) = seen.get(&current) {
            return RunResult::Circular {
                prefix: first,
                period: i - first,
                configuration: current,
            };
        }
        seen.insert(current, i);
        match step(m, current) {
            StepResult::AtFinal => {
                return RunResult::Halted {
                    steps: i,
                    configuration: current,
                }
            }
            StepResult::Next(c) => current = c,
        }
    }
    RunResult::Exceeded(max_steps)
}

/// True iff k successive steps are possible from `c`, i.e. the final state
/// is not reached before the k-th step.
pub fn can_perform_k_steps(m: &Machine, c: Configuration, k: usize) -> bool {
    let mut current = c;
    for _ in 0..k {
        match step(m, current) {
            StepResult::Next(next) => current = next,
            StepResult::AtFinal => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(text: &str) -> Machine {
        parse_machine(text).unwrap()
    }

    const LOOP_INC: &str = "start qs\nfinal qf\ninc qs a qs\n";
    const HALT_INC: &str = "start qs\nfinal qf\ninc qs a qf\n";
    const SELF_JZ: &str = "start qs\nfinal qf\njzdec qs a qs qs\n";
    const INC_LOOP: &str = "start p\nfinal qf\ninc p a q\njzdec q a p p\n";

    #[test]
    fn missing_final_rejected() {
        assert!(parse_machine("start qs\ninc qs a qs\n").is_err());
        assert!(parse_machine(LOOP_INC).is_ok());
    }

    #[test]
    fn duplicate_instruction_rejected() {
        let e = parse_machine("start qs\nfinal qf\ninc qs a qs\ninc qs b qf\n").unwrap_err();
        assert!(e.msg.contains("duplicate instruction"));
    }

    #[test]
    fn extra_instructionless_state_rejected() {
        let e = parse_machine("start qs\nfinal qf\ninc qs a q2\n").unwrap_err();
        assert!(e.msg.contains("without instructions"));
    }

    #[test]
    fn final_with_instruction_rejected() {
        let e = parse_machine("start qs\nfinal qs\ninc qs a qs\n").unwrap_err();
        assert!(e.msg.contains("has an instruction"));
    }

    #[test]
    fn unknown_register_rejected() {
        let e = parse_machine("start qs\nfinal qf\ninc qs d qf\n").unwrap_err();
        assert!(e.msg.contains("unknown register"));
    }

    #[test]
    fn jzdec_semantics() {
        let m = machine("start p\nfinal qf\njzdec p a q0 q1\ninc q0 a qf\ninc q1 a qf\n");
        let zero = Configuration {
            state: m.state_index("p").unwrap(),
            a: 0,
            b: 4,
            c: 1,
        };
        match step(&m, zero) {
            StepResult::Next(c) => {
                assert_eq!(m.states[c.state], "q0");
                assert_eq!((c.a, c.b, c.c), (0, 4, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
        let nonzero = Configuration {
            state: m.state_index("p").unwrap(),
            a: 3,
            b: 0,
            c: 0,
        };
        match step(&m, nonzero) {
            StepResult::Next(c) => {
                assert_eq!(m.states[c.state], "q1");
                assert_eq!((c.a, c.b, c.c), (2, 0, 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn run_traces() {
        let m = machine(LOOP_INC);
        let (trace, status) = run(&m, 0, 3);
        assert_eq!(status, RunStatus::Exceeded);
        let counters: Vec<u64> = trace.iter().map(|c| c.a).collect();
        assert_eq!(counters, vec![0, 1, 2, 3]);

        let m = machine(HALT_INC);
        let (trace, status) = run(&m, 5, 10);
        assert_eq!(status, RunStatus::Halted);
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[1].a, 6);
        assert_eq!(m.states[trace[1].state], "qf");
    }

    #[test]
    fn trivial_machine_halts_immediately() {
        let m = machine("start qf\nfinal qf\n");
        assert_eq!(
            classify(&m, 0, 10),
            RunResult::Halted {
                steps: 0,
                configuration: m.initial(0)
            }
        );
    }

    #[test]
    fn classification() {
        let m = machine(SELF_JZ);
        assert_eq!(
            classify(&m, 0, 10),
            RunResult::Circular {
                prefix: 0,
                period: 1,
                configuration: m.initial(0)
            }
        );
        let m = machine(LOOP_INC);
        assert_eq!(classify(&m, 0, 100), RunResult::Exceeded(100));
        let m = machine(HALT_INC);
        assert!(matches!(
            classify(&m, 0, 100),
            RunResult::Halted { steps: 1, .. }
        ));
    }

    #[test]
    fn circular_with_prefix() {
        // burn the input down to zero, then self-loop on the zero test
        let m = machine(INC_LOOP);
        match classify(&m, 0, 100) {
            RunResult::Circular { prefix, period, .. } => {
                assert_eq!(prefix, 0);
                assert_eq!(period, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        // with a nonzero input the decrement path gives a pre-period
        let m = machine("start qs\nfinal qf\njzdec qs a qs qs\n");
        match classify(&m, 2, 100) {
            RunResult::Circular { prefix, period, .. } => {
                assert_eq!(prefix, 2);
                assert_eq!(period, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn k_step_capability() {
        let m = machine(INC_LOOP);
        assert!(can_perform_k_steps(&m, m.initial(0), 4));
        assert!(can_perform_k_steps(&m, m.initial(0), 0));
        let m = machine(HALT_INC);
        assert!(can_perform_k_steps(&m, m.initial(0), 1));
        assert!(!can_perform_k_steps(&m, m.initial(0), 2));
    }

    #[test]
    fn k_step_monotone() {
        let m = machine(HALT_INC);
        for k in 0..5 {
            if can_perform_k_steps(&m, m.initial(0), k + 1) {
                assert!(can_perform_k_steps(&m, m.initial(0), k));
            }
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let m = machine("# a looping machine\nstart qs\n\nfinal qf # the sink\ninc qs a qs\n");
        assert_eq!(m.start, "qs");
        assert_eq!(m.final_state, "qf");
    }
}
