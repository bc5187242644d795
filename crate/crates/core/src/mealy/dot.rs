//! A small DOT dialect for Mealy machines.
//!
//! ```text
//! digraph g {
//!   __start [shape=none label=""];
//!   __start -> S0;
//!   S0 -> S1 [label="INIT-CHLO/REJ"];
//! }
//! ```
//!
//! The initial state is the target of the edge leaving the synthetic node
//! `__start`. Every other edge carries an `input/output` label. Node and graph
//! attributes are accepted and ignored.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{MealyError, MealyMachine};
use crate::symbol::{Output, Symbol};

const START: &str = "__start";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DotError {
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("missing initial-state marker (an edge from `__start`)")]
    MissingInitial,
    #[error("more than one initial-state marker")]
    MultipleInitial,
    #[error("{line}:{col}: {msg}")]
    Label {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("state `{state}` has two transitions on `{input}`")]
    Nondeterministic { state: String, input: String },
    #[error(transparent)]
    Machine(#[from] MealyError),
}

fn quote_if_needed(id: &str) -> String {
    let plain = id
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        id.to_string()
    } else {
        format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// Renders `m` in the DOT dialect above, states in index order and each
/// state's edges in alphabet order.
pub fn to_dot(m: &MealyMachine) -> String {
    let mut out = String::from("digraph g {\n");
    let _ = writeln!(out, "  {START} [shape=none label=\"\"];");
    for name in m.state_names() {
        let _ = writeln!(out, "  {} [shape=circle];", quote_if_needed(name));
    }
    let _ = writeln!(
        out,
        "  {START} -> {};",
        quote_if_needed(m.state_name(m.initial()))
    );
    for (s, a, t, o) in m.transitions() {
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{}/{}\"];",
            quote_if_needed(m.state_name(s)),
            quote_if_needed(m.state_name(t)),
            a,
            o
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Semi,
    Comma,
    Arrow,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> DotError {
    DotError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, DotError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (l, k) = (line, col);
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            bump!();
            toks.push(Spanned {
                tok,
                line: l,
                col: k,
            });
            continue;
        }
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while !matches!(chars.peek(), None | Some('\n')) {
                bump!();
            }
            continue;
        }
        if c == '/' {
            bump!();
            match chars.peek() {
                Some('/') => {
                    while !matches!(chars.peek(), None | Some('\n')) {
                        bump!();
                    }
                }
                Some('*') => {
                    bump!();
                    let mut prev = '\0';
                    loop {
                        match bump!() {
                            Some('/') if prev == '*' => break,
                            Some(ch) => prev = ch,
                            None => return Err(syntax(l, k, "unterminated comment")),
                        }
                    }
                }
                _ => return Err(syntax(l, k, "unexpected `/`")),
            }
            continue;
        }
        if c == '-' {
            bump!();
            if chars.peek() == Some(&'>') {
                bump!();
                toks.push(Spanned {
                    tok: Tok::Arrow,
                    line: l,
                    col: k,
                });
                continue;
            }
            // A negative numeral such as `-1`.
            let mut s = String::from("-");
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() || d == '.' {
                    s.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            if s.len() == 1 {
                return Err(syntax(l, k, "unexpected `-`"));
            }
            toks.push(Spanned {
                tok: Tok::Id(s),
                line: l,
                col: k,
            });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match bump!() {
                    Some('"') => break,
                    Some('\\') => match bump!() {
                        Some('"') => s.push('"'),
                        Some('\\') => s.push('\\'),
                        Some('\n') => {}
                        Some(other) => {
                            s.push('\\');
                            s.push(other);
                        }
                        None => return Err(syntax(l, k, "unterminated string")),
                    },
                    Some(ch) => s.push(ch),
                    None => return Err(syntax(l, k, "unterminated string")),
                }
            }
            toks.push(Spanned {
                tok: Tok::Id(s),
                line: l,
                col: k,
            });
            continue;
        }
        if c.is_alphanumeric() || c == '_' || c == '.' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_alphanumeric() || d == '_' || d == '.' {
                    s.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            toks.push(Spanned {
                tok: Tok::Id(s),
                line: l,
                col: k,
            });
            continue;
        }
        return Err(syntax(l, k, format!("unexpected character `{c}`")));
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
}

struct Edge {
    from: String,
    to: String,
    label: Option<String>,
    line: usize,
    col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.eof, |s| (s.line, s.col))
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), DotError> {
        let (l, c) = self.here();
        match self.next() {
            Some(s) if s.tok == want => Ok(()),
            _ => Err(syntax(l, c, format!("expected {what}"))),
        }
    }

    fn id(&mut self, what: &str) -> Result<String, DotError> {
        let (l, c) = self.here();
        match self.next() {
            Some(Spanned {
                tok: Tok::Id(s), ..
            }) => Ok(s),
            _ => Err(syntax(l, c, format!("expected {what}"))),
        }
    }

    fn attrs(&mut self) -> Result<Vec<(String, String)>, DotError> {
        let mut out = Vec::new();
        while self.peek() == Some(&Tok::LBracket) {
            self.next();
            loop {
                match self.peek() {
                    Some(Tok::RBracket) => {
                        self.next();
                        break;
                    }
                    Some(Tok::Comma | Tok::Semi) => {
                        self.next();
                    }
                    _ => {
                        let key = self.id("attribute name")?;
                        self.expect(Tok::Eq, "`=`")?;
                        let value = self.id("attribute value")?;
                        out.push((key, value));
                    }
                }
            }
        }
        Ok(out)
    }

    fn graph(&mut self) -> Result<(Vec<String>, Vec<Edge>), DotError> {
        if let Some(Tok::Id(kw)) = self.peek() {
            if kw.eq_ignore_ascii_case("strict") {
                self.next();
            }
        }
        let (l, c) = self.here();
        match self.next() {
            Some(Spanned {
                tok: Tok::Id(kw), ..
            }) if kw.eq_ignore_ascii_case("digraph") => {}
            _ => return Err(syntax(l, c, "expected `digraph`")),
        }
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.next();
        }
        self.expect(Tok::LBrace, "`{`")?;

        let mut nodes: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        let note = |nodes: &mut Vec<String>, n: &str| {
            if n != START && !nodes.iter().any(|x| x == n) {
                nodes.push(n.to_string());
            }
        };
        loop {
            let (l, c) = self.here();
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.next();
                    break;
                }
                Some(Tok::Semi) => {
                    self.next();
                }
                Some(Tok::Id(_)) => {
                    let first = self.id("identifier")?;
                    match self.peek() {
                        Some(Tok::Arrow) => {
                            let mut chain = vec![first];
                            while self.peek() == Some(&Tok::Arrow) {
                                self.next();
                                chain.push(self.id("edge target")?);
                            }
                            let attrs = self.attrs()?;
                            let label = attrs
                                .into_iter()
                                .find(|(k, _)| k == "label")
                                .map(|(_, v)| v);
                            for n in &chain {
                                note(&mut nodes, n);
                            }
                            for pair in chain.windows(2) {
                                edges.push(Edge {
                                    from: pair[0].clone(),
                                    to: pair[1].clone(),
                                    label: label.clone(),
                                    line: l,
                                    col: c,
                                });
                            }
                        }
                        Some(Tok::Eq) => {
                            self.next();
                            self.id("attribute value")?;
                        }
                        _ => {
                            let is_default = matches!(
                                first.to_ascii_lowercase().as_str(),
                                "graph" | "node" | "edge"
                            );
                            self.attrs()?;
                            if !is_default {
                                note(&mut nodes, &first);
                            }
                        }
                    }
                }
                None => return Err(syntax(l, c, "unexpected end of input, expected `}`")),
                Some(_) => return Err(syntax(l, c, "expected a statement")),
            }
        }
        if self.pos < self.toks.len() {
            let (l, c) = self.here();
            return Err(syntax(l, c, "trailing input after graph"));
        }
        Ok((nodes, edges))
    }
}

/// Parses the DOT dialect written by [`to_dot`].
///
/// States keep their order of first appearance; the input alphabet is ordered
/// by first appearance among the labels.
pub fn from_dot(text: &str) -> Result<MealyMachine, DotError> {
    let toks = lex(text)?;
    let eof = text
        .lines()
        .enumerate()
        .last()
        .map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut parser = Parser { toks, pos: 0, eof };
    let (nodes, edges) = parser.graph()?;

    let mut initial = None;
    let mut inputs: Vec<Symbol> = Vec::new();
    let mut cells: HashMap<(usize, usize), (usize, Output)> = HashMap::new();
    let index = |n: &str| nodes.iter().position(|x| x == n).expect("node was noted");

    for e in &edges {
        if e.from == START {
            if initial.replace(index(&e.to)).is_some() {
                return Err(DotError::MultipleInitial);
            }
            continue;
        }
        if e.to == START {
            return Err(DotError::Label {
                line: e.line,
                col: e.col,
                msg: "edge into `__start`".into(),
            });
        }
        let label = e.label.as_deref().ok_or_else(|| DotError::Label {
            line: e.line,
            col: e.col,
            msg: "transition without a label".into(),
        })?;
        let (input, output) = label.split_once('/').ok_or_else(|| DotError::Label {
            line: e.line,
            col: e.col,
            msg: format!("label `{label}` is not `input/output`"),
        })?;
        let (input, output) = (input.trim(), output.trim());
        if input.is_empty() || output.is_empty() || output.contains('/') {
            return Err(DotError::Label {
                line: e.line,
                col: e.col,
                msg: format!("label `{label}` is not `input/output`"),
            });
        }
        let a = match inputs.iter().position(|x| x == input) {
            Some(i) => i,
            None => {
                inputs.push(Symbol::new(input));
                inputs.len() - 1
            }
        };
        let from = index(&e.from);
        if cells
            .insert((from, a), (index(&e.to), Output::new(output)))
            .is_some()
        {
            return Err(DotError::Nondeterministic {
                state: e.from.clone(),
                input: input.to_string(),
            });
        }
    }

    let initial = initial.ok_or(DotError::MissingInitial)?;
    let mut table = Vec::with_capacity(nodes.len());
    for (s, name) in nodes.iter().enumerate() {
        let mut row = Vec::with_capacity(inputs.len());
        for (a, input) in inputs.iter().enumerate() {
            let cell = cells
                .remove(&(s, a))
                .ok_or_else(|| MealyError::MissingTransition {
                    state: name.clone(),
                    input: input.clone(),
                })?;
            row.push(cell);
        }
        table.push(row);
    }
    Ok(MealyMachine::new(nodes, initial, inputs, table)?)
}
