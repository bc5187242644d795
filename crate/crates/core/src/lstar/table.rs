use std::collections::{HashMap, HashSet};

use super::{LearnError, MembershipOracle};
use crate::mealy::MealyMachine;
use crate::symbol::{Output, Symbol, Word};

/// A table row: for each suffix in `E`, the outputs aligned to that suffix.
pub type Row = Vec<Vec<Output>>;

/// L*'s observation table for Mealy machines.
///
/// Prefixes `S` are kept prefix-closed and in insertion order; suffixes `E`
/// start as the single-symbol words of the alphabet and only grow. The cell
/// for prefix `p` and suffix `e` holds the last `|e|` outputs of `p·e`.
#[derive(Debug, Clone)]
pub struct ObservationTable {
    alphabet: Vec<Symbol>,
    prefixes: Vec<Word>,
    prefix_set: HashSet<Word>,
    suffixes: Vec<Word>,
    rows: HashMap<Word, Row>,
}

/// What keeps a table from yielding a hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Defect {
    /// A boundary row equal to no prefix row.
    Unclosed { row: Word },
    /// Two equal prefix rows whose extensions by `symbol` differ on `suffix`.
    Inconsistent {
        first: Word,
        second: Word,
        symbol: Symbol,
        suffix: Word,
    },
}

impl ObservationTable {
    pub fn new(alphabet: Vec<Symbol>) -> Self {
        let suffixes = alphabet.iter().map(|a| vec![a.clone()]).collect();
        let mut prefix_set = HashSet::new();
        prefix_set.insert(Word::new());
        Self {
            alphabet,
            prefixes: vec![Word::new()],
            prefix_set,
            suffixes,
            rows: HashMap::new(),
        }
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn prefixes(&self) -> &[Word] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[Word] {
        &self.suffixes
    }

    pub fn is_prefix(&self, w: &[Symbol]) -> bool {
        self.prefix_set.contains(w)
    }

    /// `S·Σ \ S`, ordered by prefix then alphabet.
    pub fn boundary(&self) -> Vec<Word> {
        let mut out = Vec::new();
        for p in &self.prefixes {
            for a in &self.alphabet {
                let mut w = p.clone();
                w.push(a.clone());
                if !self.prefix_set.contains(&w) {
                    out.push(w);
                }
            }
        }
        out
    }

    /// The row of `p`, if every cell of it is filled.
    pub fn row(&self, p: &[Symbol]) -> Option<&Row> {
        self.rows.get(p).filter(|r| r.len() == self.suffixes.len())
    }

    pub fn cell(&self, p: &[Symbol], e: usize) -> Option<&[Output]> {
        self.rows.get(p).and_then(|r| r.get(e)).map(Vec::as_slice)
    }

    /// Number of `(row, suffix)` cells the table currently spans.
    pub fn size(&self) -> usize {
        (self.prefixes.len() + self.boundary().len()) * self.suffixes.len()
    }

    /// Adds `p` and all its prefixes to `S`. Returns whether anything changed.
    pub fn add_prefix(&mut self, p: &[Symbol]) -> bool {
        let mut changed = false;
        for k in 1..=p.len() {
            if self.prefix_set.insert(p[..k].to_vec()) {
                self.prefixes.push(p[..k].to_vec());
                changed = true;
            }
        }
        changed
    }

    /// Adds a suffix to `E` unless present. Returns whether it was new.
    pub fn add_suffix(&mut self, e: Word) -> bool {
        if e.is_empty() || self.suffixes.contains(&e) {
            return false;
        }
        self.suffixes.push(e);
        true
    }

    /// Populates every missing cell over `(S ∪ S·Σ) × E`. Filled cells are
    /// never asked again.
    pub fn fill(&mut self, oracle: &mut dyn MembershipOracle) -> Result<(), LearnError> {
        let mut rows = self.prefixes.clone();
        rows.extend(self.boundary());
        let mut missing: Vec<(Word, Word)> = Vec::new();
        for p in rows {
            let have = self.rows.get(&p).map_or(0, Vec::len);
            for e in &self.suffixes[have..] {
                let mut w = p.clone();
                w.extend(e.iter().cloned());
                missing.push((p.clone(), w));
            }
        }
        // Longest words first, so shorter ones are often answered from the
        // prefix cache.
        let mut order: Vec<usize> = (0..missing.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(missing[i].1.len()));
        let mut answers: Vec<Option<Vec<Output>>> = vec![None; missing.len()];
        for i in order {
            let w = &missing[i].1;
            let out = oracle.query(w)?;
            if out.len() != w.len() {
                return Err(LearnError::Oracle(crate::sul::SulError::Protocol(format!(
                    "{} outputs for a word of length {}",
                    out.len(),
                    w.len()
                ))));
            }
            answers[i] = Some(out);
        }
        for ((p, _), out) in missing.into_iter().zip(answers) {
            let out = out.expect("every missing cell was queried");
            let cell = out[p.len()..].to_vec();
            self.rows.entry(p).or_default().push(cell);
        }
        Ok(())
    }

    /// The first closedness or consistency violation, closedness first.
    pub fn defect(&self) -> Option<Defect> {
        self.unclosed_row()
            .map(|row| Defect::Unclosed { row })
            .or_else(|| self.inconsistency())
    }

    /// The first boundary row that equals no row of `S`.
    pub fn unclosed_row(&self) -> Option<Word> {
        let seen: HashSet<&Row> = self
            .prefixes
            .iter()
            .map(|p| self.row(p).expect("table is filled"))
            .collect();
        self.boundary()
            .into_iter()
            .find(|b| !seen.contains(self.row(b).expect("table is filled")))
    }

    /// The first pair of equal rows in `S` whose one-symbol extensions differ.
    pub fn inconsistency(&self) -> Option<Defect> {
        let mut by_row: HashMap<&Row, &Word> = HashMap::new();
        for p in &self.prefixes {
            let r = self.row(p).expect("table is filled");
            let Some(&first) = by_row.get(r) else {
                by_row.insert(r, p);
                continue;
            };
            for a in &self.alphabet {
                let mut fa = first.clone();
                fa.push(a.clone());
                let mut pa = p.clone();
                pa.push(a.clone());
                let (r1, r2) = (
                    self.row(&fa).expect("table is filled"),
                    self.row(&pa).expect("table is filled"),
                );
                if let Some(e) = (0..self.suffixes.len()).find(|&e| r1[e] != r2[e]) {
                    return Some(Defect::Inconsistent {
                        first: first.clone(),
                        second: p.clone(),
                        symbol: a.clone(),
                        suffix: self.suffixes[e].clone(),
                    });
                }
            }
        }
        None
    }

    pub fn is_closed(&self) -> bool {
        self.unclosed_row().is_none()
    }

    pub fn is_consistent(&self) -> bool {
        self.inconsistency().is_none()
    }

    /// Fixes defects until the table is closed and consistent: unclosed
    /// boundary rows move into `S`, inconsistencies add `a·e` to `E`.
    /// At most `max_fixes` fixes are applied.
    pub fn close_and_make_consistent(
        &mut self,
        oracle: &mut dyn MembershipOracle,
        max_fixes: usize,
    ) -> Result<usize, LearnError> {
        self.fill(oracle)?;
        let mut fixes = 0;
        while let Some(defect) = self.defect() {
            if fixes >= max_fixes {
                return Err(LearnError::TableNotConverging { defect, fixes });
            }
            match defect {
                Defect::Unclosed { row } => {
                    self.add_prefix(&row);
                }
                Defect::Inconsistent { symbol, suffix, .. } => {
                    let mut e = vec![symbol];
                    e.extend(suffix);
                    self.add_suffix(e);
                }
            }
            fixes += 1;
            self.fill(oracle)?;
        }
        Ok(fixes)
    }

    /// Reads the hypothesis off a closed, consistent table.
    ///
    /// States are the distinct rows of `S` in first-seen order; the initial
    /// state is the row of the empty word.
    pub fn hypothesis(&self) -> Result<MealyMachine, LearnError> {
        if let Some(defect) = self.defect() {
            return Err(LearnError::NotReady(defect));
        }
        let mut state_of: HashMap<&Row, usize> = HashMap::new();
        let mut reps: Vec<&Word> = Vec::new();
        for p in &self.prefixes {
            let r = self.row(p).expect("table is filled");
            if !state_of.contains_key(r) {
                state_of.insert(r, reps.len());
                reps.push(p);
            }
        }
        let table = reps
            .iter()
            .map(|p| {
                self.alphabet
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let mut pa = (*p).clone();
                        pa.push(a.clone());
                        let target = state_of[self.row(&pa).expect("table is filled")];
                        // Suffix i is the singleton word [a].
                        let out = self.cell(p, i).expect("table is filled")[0].clone();
                        (target, out)
                    })
                    .collect()
            })
            .collect();
        let names = (0..reps.len()).map(|i| format!("S{i}")).collect();
        Ok(MealyMachine::new(names, 0, self.alphabet.clone(), table)?)
    }
}
