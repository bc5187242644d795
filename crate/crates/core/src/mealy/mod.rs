//! Deterministic Mealy machines: execution, equivalence, minimization and DOT I/O.

mod dot;
mod minimize;

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::Rng;
use thiserror::Error;

use crate::symbol::{Output, Symbol, Word};

pub use dot::{from_dot, to_dot, DotError};

/// Index of a state inside a [`MealyMachine`].
pub type StateId = usize;

/// `(input, target, output)` for one transition of a named row.
pub type RowEdge<'a> = (&'a str, &'a str, &'a str);

type Pair = (StateId, StateId);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MealyError {
    #[error("unknown state {0}")]
    UnknownState(StateId),
    #[error("symbol `{0}` is not in the input alphabet")]
    UnknownSymbol(Symbol),
    #[error("input alphabets differ")]
    AlphabetMismatch,
    #[error("machine has no states")]
    Empty,
    #[error("duplicate input symbol `{0}`")]
    DuplicateSymbol(Symbol),
    #[error("no state named `{0}`")]
    UnknownStateName(String),
    #[error("duplicate state name `{0}`")]
    DuplicateState(String),
    #[error("state {state} has {found} transitions, expected {expected}")]
    RaggedTable {
        state: usize,
        found: usize,
        expected: usize,
    },
    #[error("missing transition from `{state}` on `{input}`")]
    MissingTransition { state: String, input: Symbol },
}

/// A complete deterministic Mealy machine.
///
/// States are dense indices `0..n`; each carries a display name. The transition
/// table is indexed `[state][input]`, following the declared input order.
/// Values are immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    names: Vec<String>,
    initial: StateId,
    inputs: Vec<Symbol>,
    input_index: HashMap<Symbol, usize>,
    table: Vec<Vec<(StateId, Output)>>,
}

impl MealyMachine {
    /// Builds a machine from a dense `[state][input] -> (target, output)` table.
    pub fn new(
        names: Vec<String>,
        initial: StateId,
        inputs: Vec<Symbol>,
        table: Vec<Vec<(StateId, Output)>>,
    ) -> Result<Self, MealyError> {
        if names.is_empty() {
            return Err(MealyError::Empty);
        }
        let n = names.len();
        if initial >= n {
            return Err(MealyError::UnknownState(initial));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(MealyError::DuplicateState(name.clone()));
            }
        }
        let mut input_index = HashMap::with_capacity(inputs.len());
        for (i, a) in inputs.iter().enumerate() {
            if input_index.insert(a.clone(), i).is_some() {
                return Err(MealyError::DuplicateSymbol(a.clone()));
            }
        }
        if table.len() != n {
            return Err(MealyError::RaggedTable {
                state: table.len(),
                found: 0,
                expected: inputs.len(),
            });
        }
        for (s, row) in table.iter().enumerate() {
            if row.len() != inputs.len() {
                return Err(MealyError::RaggedTable {
                    state: s,
                    found: row.len(),
                    expected: inputs.len(),
                });
            }
            if let Some(&(t, _)) = row.iter().find(|(t, _)| *t >= n) {
                return Err(MealyError::UnknownState(t));
            }
        }
        Ok(Self {
            names,
            initial,
            inputs,
            input_index,
            table,
        })
    }

    /// Builds a machine from named rows, `rows[i] = (state, [(input, target, output)])`.
    /// Every state must define every input; the first row is the initial state.
    pub fn from_rows(inputs: &[&str], rows: &[(&str, &[RowEdge<'_>])]) -> Result<Self, MealyError> {
        let names: Vec<String> = rows.iter().map(|(s, _)| s.to_string()).collect();
        let state_of = |name: &str| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| MealyError::UnknownStateName(name.to_string()))
        };
        let inputs: Vec<Symbol> = inputs.iter().map(Symbol::new).collect();
        let mut table = Vec::with_capacity(rows.len());
        for (state, edges) in rows {
            let mut row = Vec::with_capacity(inputs.len());
            for a in &inputs {
                let (_, target, out) = edges.iter().find(|(i, _, _)| a == i).ok_or_else(|| {
                    MealyError::MissingTransition {
                        state: state.to_string(),
                        input: a.clone(),
                    }
                })?;
                row.push((state_of(target)?, Output::new(out)));
            }
            table.push(row);
        }
        Self::new(names, 0, inputs, table)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn inputs(&self) -> &[Symbol] {
        &self.inputs
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.names[s]
    }

    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.names.iter().position(|n| n == name)
    }

    /// The set of outputs that actually label some transition.
    pub fn outputs(&self) -> BTreeSet<Output> {
        self.table
            .iter()
            .flat_map(|row| row.iter().map(|(_, o)| o.clone()))
            .collect()
    }

    pub fn input_position(&self, a: &Symbol) -> Option<usize> {
        self.input_index.get(a).copied()
    }

    /// Iterates `(source, input, target, output)` in state then alphabet order.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, &Symbol, StateId, &Output)> {
        self.table.iter().enumerate().flat_map(move |(s, row)| {
            row.iter()
                .zip(&self.inputs)
                .map(move |((t, o), a)| (s, a, *t, o))
        })
    }

    pub fn step(&self, s: StateId, a: &Symbol) -> Result<(StateId, &Output), MealyError> {
        let row = self.table.get(s).ok_or(MealyError::UnknownState(s))?;
        let i = self
            .input_position(a)
            .ok_or_else(|| MealyError::UnknownSymbol(a.clone()))?;
        let (t, o) = &row[i];
        Ok((*t, o))
    }

    pub(crate) fn step_index(&self, s: StateId, i: usize) -> (StateId, &Output) {
        let (t, o) = &self.table[s][i];
        (*t, o)
    }

    /// Runs `w` from the initial state.
    pub fn run(&self, w: &[Symbol]) -> Result<Vec<Output>, MealyError> {
        self.run_from(self.initial, w).map(|(_, out)| out)
    }

    /// Runs `w` from `s`, returning the reached state and the outputs.
    pub fn run_from(
        &self,
        mut s: StateId,
        w: &[Symbol],
    ) -> Result<(StateId, Vec<Output>), MealyError> {
        let mut out = Vec::with_capacity(w.len());
        for a in w {
            let (t, o) = self.step(s, a)?;
            out.push(o.clone());
            s = t;
        }
        Ok((s, out))
    }

    /// The state reached after reading `w` from the initial state.
    pub fn reach(&self, w: &[Symbol]) -> Result<StateId, MealyError> {
        self.run_from(self.initial, w).map(|(s, _)| s)
    }

    /// Returns a shortest word on which `self` and `other` disagree, or `None`
    /// when they are equivalent. Ties are broken by `self`'s input order.
    pub fn equivalent(&self, other: &MealyMachine) -> Result<Option<Word>, MealyError> {
        let to_other = self.alphabet_map(other)?;
        let start = (self.initial, other.initial);
        let mut parent: HashMap<Pair, Option<(Pair, usize)>> = HashMap::new();
        parent.insert(start, None);
        let mut queue = VecDeque::from([start]);
        while let Some(pair @ (p, q)) = queue.pop_front() {
            for (i, &j) in to_other.iter().enumerate() {
                let (p2, o1) = self.step_index(p, i);
                let (q2, o2) = other.step_index(q, j);
                if o1 != o2 {
                    let mut w = vec![self.inputs[i].clone()];
                    let mut cur = pair;
                    while let Some(Some((prev, k))) = parent.get(&cur) {
                        w.push(self.inputs[*k].clone());
                        cur = *prev;
                    }
                    w.reverse();
                    return Ok(Some(w));
                }
                let next = (p2, q2);
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                    e.insert(Some((pair, i)));
                    queue.push_back(next);
                }
            }
        }
        Ok(None)
    }

    /// For each of `self`'s inputs, its position in `other`'s alphabet.
    fn alphabet_map(&self, other: &MealyMachine) -> Result<Vec<usize>, MealyError> {
        if self.inputs.len() != other.inputs.len() {
            return Err(MealyError::AlphabetMismatch);
        }
        self.inputs
            .iter()
            .map(|a| other.input_position(a).ok_or(MealyError::AlphabetMismatch))
            .collect()
    }

    /// States reachable from the initial state, in breadth-first alphabet order.
    pub fn reachable(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for &(t, _) in &self.table[s] {
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
        }
        order
    }

    /// Returns the equivalent machine with the fewest states.
    pub fn minimize(&self) -> MealyMachine {
        minimize::minimize(self)
    }

    /// Keeps only the given inputs (in the given order) and the states still
    /// reachable with them.
    pub fn restrict_inputs(&self, keep: &[Symbol]) -> Result<MealyMachine, MealyError> {
        let cols: Vec<usize> = keep
            .iter()
            .map(|a| {
                self.input_position(a)
                    .ok_or_else(|| MealyError::UnknownSymbol(a.clone()))
            })
            .collect::<Result<_, _>>()?;
        let table = self
            .table
            .iter()
            .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
            .collect();
        let wide = MealyMachine::new(self.names.clone(), self.initial, keep.to_vec(), table)?;
        Ok(wide.trim_unreachable())
    }

    /// Drops states that cannot be reached from the initial state.
    pub fn trim_unreachable(&self) -> MealyMachine {
        let order = self.reachable();
        let mut new_id = vec![usize::MAX; self.num_states()];
        for (k, &s) in order.iter().enumerate() {
            new_id[s] = k;
        }
        let names = order.iter().map(|&s| self.names[s].clone()).collect();
        let table = order
            .iter()
            .map(|&s| {
                self.table[s]
                    .iter()
                    .map(|(t, o)| (new_id[*t], o.clone()))
                    .collect()
            })
            .collect();
        MealyMachine::new(names, 0, self.inputs.clone(), table)
            .expect("trimming preserves well-formedness")
    }

    /// Returns a copy with `lambda(s, a)` replaced.
    pub fn with_output(
        &self,
        s: StateId,
        a: &Symbol,
        out: impl Into<Output>,
    ) -> Result<MealyMachine, MealyError> {
        let i = self
            .input_position(a)
            .ok_or_else(|| MealyError::UnknownSymbol(a.clone()))?;
        let mut m = self.clone();
        m.table.get_mut(s).ok_or(MealyError::UnknownState(s))?[i].1 = out.into();
        Ok(m)
    }

    /// Returns a copy with `delta(s, a)` replaced.
    pub fn with_target(
        &self,
        s: StateId,
        a: &Symbol,
        t: StateId,
    ) -> Result<MealyMachine, MealyError> {
        if t >= self.num_states() {
            return Err(MealyError::UnknownState(t));
        }
        let i = self
            .input_position(a)
            .ok_or_else(|| MealyError::UnknownSymbol(a.clone()))?;
        let mut m = self.clone();
        m.table.get_mut(s).ok_or(MealyError::UnknownState(s))?[i].0 = t;
        Ok(m)
    }

    /// Returns a copy with every state renamed to `S<index>`.
    pub fn renumbered(&self) -> MealyMachine {
        let mut m = self.clone();
        m.names = (0..m.num_states()).map(|i| format!("S{i}")).collect();
        m
    }

    /// A uniformly random complete machine with `states` states named `S0..`,
    /// inputs `a0..` and outputs `o0..`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        states: usize,
        inputs: usize,
        outputs: usize,
    ) -> MealyMachine {
        assert!(states > 0 && inputs > 0 && outputs > 0);
        let names = (0..states).map(|i| format!("S{i}")).collect();
        let alphabet = (0..inputs).map(|i| Symbol::new(format!("a{i}"))).collect();
        let table = (0..states)
            .map(|_| {
                (0..inputs)
                    .map(|_| {
                        (
                            rng.gen_range(0..states),
                            Output::new(format!("o{}", rng.gen_range(0..outputs))),
                        )
                    })
                    .collect()
            })
            .collect();
        MealyMachine::new(names, 0, alphabet, table).expect("generated machine is complete")
    }
}
