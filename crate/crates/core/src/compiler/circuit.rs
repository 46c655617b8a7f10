//! Gate-level circuit IR and its line-oriented text format.
//!
//! ```text
//! PREPARE
//! R 1.5707963 0.0 all
//! RZ 0.5 0
//! MS 0.7853982 0,1 axial
//! WAIT 1000 ground
//! MEASURE m0
//! BRANCH m0 q0=bright {
//!     R 3.14159265 0 0
//! }
//! ```
//! `#` starts a comment; `;` separates instructions on one line.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::CompileError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Targets {
    All,
    List(Vec<usize>),
}

impl Targets {
    pub fn resolve(&self, n_qubits: usize) -> Vec<usize> {
        match self {
            Targets::All => (0..n_qubits).collect(),
            Targets::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for Targets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Targets::All => write!(f, "all"),
            Targets::List(v) => {
                let parts: Vec<String> = v.iter().map(|q| q.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bus {
    Axial,
    Radial,
}

impl fmt::Display for Bus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bus::Axial => "axial",
            Bus::Radial => "radial",
        })
    }
}

/// Which two-level system stores the coherence during an idle period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitKind {
    Optical,
    Ground,
}

impl fmt::Display for QubitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QubitKind::Optical => "optical",
            QubitKind::Ground => "ground",
        })
    }
}

/// Thresholded detection result of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    Bright,
    Dark,
}

impl Detection {
    pub fn from_bright(bright: bool) -> Self {
        if bright {
            Detection::Bright
        } else {
            Detection::Dark
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateTerm {
    Qubit(usize, Detection),
    All(Detection),
}

/// Conjunction of per-qubit bright/dark tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub terms: Vec<PredicateTerm>,
}

impl Predicate {
    pub fn qubit(q: usize, d: Detection) -> Self {
        Self { terms: vec![PredicateTerm::Qubit(q, d)] }
    }

    pub fn all(d: Detection) -> Self {
        Self { terms: vec![PredicateTerm::All(d)] }
    }

    /// `outcome[q]` is true for a bright qubit.
    pub fn matches(&self, outcome: &[bool]) -> bool {
        self.terms.iter().all(|t| match *t {
            PredicateTerm::Qubit(q, d) => outcome.get(q).map(|&b| Detection::from_bright(b) == d).unwrap_or(false),
            PredicateTerm::All(d) => outcome.iter().all(|&b| Detection::from_bright(b) == d),
        })
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.terms
            .iter()
            .filter_map(|t| match t {
                PredicateTerm::Qubit(q, _) => Some(*q),
                PredicateTerm::All(_) => None,
            })
            .max()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let (who, d) = match t {
                    PredicateTerm::Qubit(q, d) => (format!("q{q}"), d),
                    PredicateTerm::All(d) => ("all".to_string(), d),
                };
                let d = match d {
                    Detection::Bright => "bright",
                    Detection::Dark => "dark",
                };
                format!("{who}={d}")
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    PrepareAll,
    R { theta: f64, phi: f64, targets: Targets },
    Rz { theta: f64, targets: Targets },
    Ms { chi: f64, targets: Targets, bus: Bus },
    Wait { duration_us: f64, kind: QubitKind },
    MeasureAll { label: String },
    Branch { label: String, predicate: Predicate, body: Vec<Instruction> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitIR {
    pub instructions: Vec<Instruction>,
}

impl CircuitIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, instruction: Instruction) -> &mut Self {
        self.instructions.push(instruction);
        self
    }

    pub fn has_branches(&self) -> bool {
        self.instructions.iter().any(|i| matches!(i, Instruction::Branch { .. }))
    }

    /// Checks targets, label references and branch nesting depth.
    pub fn validate(&self, n_qubits: usize, max_branch_depth: usize) -> Result<(), CompileError> {
        let mut labels = Vec::new();
        validate_block(&self.instructions, n_qubits, max_branch_depth, 0, &mut labels)
    }

    pub fn parse(text: &str) -> Result<Self, CompileError> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let instructions = parse_block(&tokens, &mut pos, false)?;
        Ok(Self { instructions })
    }
}

fn validate_block(
    block: &[Instruction],
    n: usize,
    cap: usize,
    depth: usize,
    labels: &mut Vec<String>,
) -> Result<(), CompileError> {
    let check_targets = |t: &Targets| -> Result<(), CompileError> {
        if let Targets::List(v) = t {
            if v.is_empty() {
                return Err(CompileError::InvalidCircuit("empty target list".into()));
            }
            for &q in v {
                if q >= n {
                    return Err(CompileError::InvalidCircuit(format!(
                        "target {q} out of range for {n} qubits"
                    )));
                }
            }
            let mut sorted = v.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != v.len() {
                return Err(CompileError::InvalidCircuit("duplicate targets".into()));
            }
        }
        Ok(())
    };
    let scope_len = labels.len();
    for ins in block {
        match ins {
            Instruction::PrepareAll => {}
            Instruction::R { theta, phi, targets } => {
                if !theta.is_finite() || !phi.is_finite() {
                    return Err(CompileError::InvalidCircuit("non-finite rotation".into()));
                }
                check_targets(targets)?;
            }
            Instruction::Rz { theta, targets } => {
                if !theta.is_finite() {
                    return Err(CompileError::InvalidCircuit("non-finite rotation".into()));
                }
                check_targets(targets)?;
            }
            Instruction::Ms { chi, targets, .. } => {
                if !chi.is_finite() {
                    return Err(CompileError::InvalidCircuit("non-finite MS angle".into()));
                }
                check_targets(targets)?;
                if targets.resolve(n).len() < 2 {
                    return Err(CompileError::InvalidCircuit("MS needs at least two targets".into()));
                }
            }
            Instruction::Wait { duration_us, .. } => {
                if !(duration_us.is_finite() && *duration_us >= 0.0) {
                    return Err(CompileError::InvalidCircuit("negative wait".into()));
                }
            }
            Instruction::MeasureAll { label } => labels.push(label.clone()),
            Instruction::Branch { label, predicate, body } => {
                if !labels.contains(label) {
                    return Err(CompileError::UnknownLabel(label.clone()));
                }
                if depth + 1 > cap {
                    return Err(CompileError::InvalidCircuit(format!(
                        "branch nesting deeper than {cap}"
                    )));
                }
                if predicate.terms.is_empty() {
                    return Err(CompileError::InvalidCircuit("empty branch predicate".into()));
                }
                if let Some(q) = predicate.max_qubit() {
                    if q >= n {
                        return Err(CompileError::InvalidCircuit(format!(
                            "predicate qubit {q} out of range"
                        )));
                    }
                }
                validate_block(body, n, cap, depth + 1, labels)?;
            }
        }
    }
    labels.truncate(scope_len);
    Ok(())
}

impl fmt::Display for CircuitIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_block(f, &self.instructions, 0)
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, block: &[Instruction], indent: usize) -> fmt::Result {
    let pad = "    ".repeat(indent);
    for ins in block {
        match ins {
            Instruction::PrepareAll => writeln!(f, "{pad}PREPARE")?,
            Instruction::R { theta, phi, targets } => writeln!(f, "{pad}R {theta} {phi} {targets}")?,
            Instruction::Rz { theta, targets } => writeln!(f, "{pad}RZ {theta} {targets}")?,
            Instruction::Ms { chi, targets, bus } => writeln!(f, "{pad}MS {chi} {targets} {bus}")?,
            Instruction::Wait { duration_us, kind } => writeln!(f, "{pad}WAIT {duration_us} {kind}")?,
            Instruction::MeasureAll { label } => writeln!(f, "{pad}MEASURE {label}")?,
            Instruction::Branch { label, predicate, body } => {
                writeln!(f, "{pad}BRANCH {label} {predicate} {{")?;
                write_block(f, body, indent + 1)?;
                writeln!(f, "{pad}}}")?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String, usize),
    Open(usize),
    Close(usize),
    End,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let padded = line.replace('{', " { ").replace('}', " } ").replace(';', " ; ");
        for w in padded.split_whitespace() {
            match w {
                "{" => out.push(Token::Open(lineno + 1)),
                "}" => out.push(Token::Close(lineno + 1)),
                ";" => out.push(Token::End),
                _ => out.push(Token::Word(w.to_string(), lineno + 1)),
            }
        }
        out.push(Token::End);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> CompileError {
    CompileError::Parse { line, message: msg.into() }
}

fn parse_block(tokens: &[Token], pos: &mut usize, nested: bool) -> Result<Vec<Instruction>, CompileError> {
    let mut out = Vec::new();
    loop {
        match tokens.get(*pos) {
            None => {
                if nested {
                    return Err(parse_err(0, "unterminated branch block"));
                }
                return Ok(out);
            }
            Some(Token::End) => *pos += 1,
            Some(Token::Close(line)) => {
                if !nested {
                    return Err(parse_err(*line, "unexpected '}'"));
                }
                *pos += 1;
                return Ok(out);
            }
            Some(Token::Open(line)) => return Err(parse_err(*line, "unexpected '{'")),
            Some(Token::Word(_, line)) => {
                let line = *line;
                let mut words = Vec::new();
                while let Some(Token::Word(w, _)) = tokens.get(*pos) {
                    words.push(w.clone());
                    *pos += 1;
                }
                let head = words[0].to_ascii_uppercase();
                if head == "BRANCH" {
                    if words.len() != 3 {
                        return Err(parse_err(line, "expected BRANCH <label> <predicate> {"));
                    }
                    while let Some(Token::End) = tokens.get(*pos) {
                        *pos += 1;
                    }
                    match tokens.get(*pos) {
                        Some(Token::Open(_)) => *pos += 1,
                        _ => return Err(parse_err(line, "expected '{' after BRANCH")),
                    }
                    let body = parse_block(tokens, pos, true)?;
                    out.push(Instruction::Branch {
                        label: words[1].clone(),
                        predicate: parse_predicate(&words[2], line)?,
                        body,
                    });
                } else {
                    out.push(parse_instruction(&head, &words[1..], line)?);
                }
            }
        }
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64, CompileError> {
    s.parse::<f64>().map_err(|_| parse_err(line, format!("bad number '{s}'")))
}

fn parse_targets(s: &str, line: usize) -> Result<Targets, CompileError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Targets::All);
    }
    s.split(',')
        .map(|p| {
            let p = p.trim().trim_start_matches(['q', 'Q']);
            p.parse::<usize>().map_err(|_| parse_err(line, format!("bad target '{s}'")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Targets::List)
}

fn parse_detection(s: &str, line: usize) -> Result<Detection, CompileError> {
    match s.to_ascii_lowercase().as_str() {
        "bright" | "s" => Ok(Detection::Bright),
        "dark" | "d" => Ok(Detection::Dark),
        _ => Err(parse_err(line, format!("bad detection outcome '{s}'"))),
    }
}

fn parse_predicate(s: &str, line: usize) -> Result<Predicate, CompileError> {
    let mut terms = Vec::new();
    for part in s.split(',') {
        let (who, what) = part
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("bad predicate term '{part}'")))?;
        let d = parse_detection(what, line)?;
        if who.eq_ignore_ascii_case("all") {
            terms.push(PredicateTerm::All(d));
        } else {
            let q = who
                .trim_start_matches(['q', 'Q'])
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("bad predicate qubit '{who}'")))?;
            terms.push(PredicateTerm::Qubit(q, d));
        }
    }
    Ok(Predicate { terms })
}

fn parse_instruction(head: &str, args: &[String], line: usize) -> Result<Instruction, CompileError> {
    let want = |k: usize| -> Result<(), CompileError> {
        if args.len() != k {
            Err(parse_err(line, format!("{head} expects {k} arguments, got {}", args.len())))
        } else {
            Ok(())
        }
    };
    match head {
        "PREPARE" => {
            want(0)?;
            Ok(Instruction::PrepareAll)
        }
        "R" => {
            want(3)?;
            Ok(Instruction::R {
                theta: parse_f64(&args[0], line)?,
                phi: parse_f64(&args[1], line)?,
                targets: parse_targets(&args[2], line)?,
            })
        }
        "RZ" => {
            want(2)?;
            Ok(Instruction::Rz { theta: parse_f64(&args[0], line)?, targets: parse_targets(&args[1], line)? })
        }
        "MS" => {
            if args.len() != 2 && args.len() != 3 {
                return Err(parse_err(line, "MS expects <chi> <targets> [axial|radial]"));
            }
            let bus = match args.get(2).map(|s| s.to_ascii_lowercase()) {
                None => Bus::Axial,
                Some(s) if s == "axial" => Bus::Axial,
                Some(s) if s == "radial" => Bus::Radial,
                Some(s) => return Err(parse_err(line, format!("bad bus '{s}'"))),
            };
            Ok(Instruction::Ms { chi: parse_f64(&args[0], line)?, targets: parse_targets(&args[1], line)?, bus })
        }
        "WAIT" => {
            if args.is_empty() || args.len() > 2 {
                return Err(parse_err(line, "WAIT expects <microseconds> [optical|ground]"));
            }
            let kind = match args.get(1).map(|s| s.to_ascii_lowercase()) {
                None => QubitKind::Optical,
                Some(s) if s == "optical" => QubitKind::Optical,
                Some(s) if s == "ground" => QubitKind::Ground,
                Some(s) => return Err(parse_err(line, format!("bad qubit kind '{s}'"))),
            };
            Ok(Instruction::Wait { duration_us: parse_f64(&args[0], line)?, kind })
        }
        "MEASURE" => {
            want(1)?;
            Ok(Instruction::MeasureAll { label: args[0].clone() })
        }
        _ => Err(parse_err(line, format!("unknown instruction '{head}'"))),
    }
}
