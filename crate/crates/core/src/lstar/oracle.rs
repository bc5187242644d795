use std::collections::HashMap;

use log::warn;

use crate::sul::{AbstractSul, SulError};
use crate::symbol::{display_word, Output, Symbol, Word};

/// Answers output queries: each query starts from the SUL's initial state.
///
/// Implementations must be deterministic; two identical queries return
/// identical outputs. De-noising belongs below this interface.
pub trait MembershipOracle: Send {
    fn query(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError>;
}

impl<T: MembershipOracle + ?Sized> MembershipOracle for &mut T {
    fn query(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError> {
        (**self).query(word)
    }
}

impl<T: MembershipOracle + ?Sized> MembershipOracle for Box<T> {
    fn query(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError> {
        (**self).query(word)
    }
}

/// Resets an abstract SUL and feeds it the word, one symbol at a time.
#[derive(Debug)]
pub struct SulOracle<A> {
    sul: A,
}

impl<A: AbstractSul> SulOracle<A> {
    pub fn new(sul: A) -> Self {
        Self { sul }
    }

    pub fn into_inner(self) -> A {
        self.sul
    }

    pub fn sul_mut(&mut self) -> &mut A {
        &mut self.sul
    }
}

impl<A: AbstractSul> MembershipOracle for SulOracle<A> {
    fn query(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError> {
        self.sul.reset()?;
        word.iter().map(|a| self.sul.step(a)).collect()
    }
}

/// Counters kept by [`QueryCache`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheCounters {
    /// Queries forwarded to the wrapped oracle.
    pub forwarded: u64,
    /// Input symbols in forwarded queries.
    pub symbols: u64,
    /// Queries answered from the cache.
    pub hits: u64,
    /// Forwarded answers that contradicted a cached prefix.
    pub conflicts: u64,
}

/// Membership cache. Every answer also answers all of its prefixes, so a
/// word is sent to the SUL at most once, and never when a longer word that
/// extends it has already been asked.
#[derive(Debug)]
pub struct QueryCache<O> {
    inner: O,
    answers: HashMap<Word, Vec<Output>>,
    counters: CacheCounters,
}

impl<O: MembershipOracle> QueryCache<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            answers: HashMap::new(),
            counters: CacheCounters::default(),
        }
    }

    pub fn counters(&self) -> CacheCounters {
        self.counters
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut O {
        &mut self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }

    pub fn cached(&self, word: &[Symbol]) -> Option<&[Output]> {
        self.answers.get(word).map(Vec::as_slice)
    }

    /// Every cached `(word, outputs)` pair, prefixes included.
    pub fn entries(&self) -> impl Iterator<Item = (&Word, &Vec<Output>)> {
        self.answers.iter()
    }

    fn insert(&mut self, word: &[Symbol], out: &[Output]) {
        for k in (0..=word.len()).rev() {
            match self.answers.get(&word[..k]) {
                Some(prev) if prev.as_slice() == &out[..k] => break,
                Some(prev) => {
                    self.counters.conflicts += 1;
                    warn!(
                        "answer for `{}` contradicts an earlier answer ({:?} vs {:?}); keeping the earlier one",
                        display_word(&word[..k]),
                        prev,
                        &out[..k]
                    );
                    break;
                }
                None => {
                    self.answers.insert(word[..k].to_vec(), out[..k].to_vec());
                }
            }
        }
    }
}

impl<O: MembershipOracle> MembershipOracle for QueryCache<O> {
    fn query(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError> {
        if let Some(out) = self.answers.get(word) {
            self.counters.hits += 1;
            return Ok(out.clone());
        }
        let out = self.inner.query(word)?;
        if out.len() != word.len() {
            return Err(SulError::Protocol(format!(
                "{} outputs for a word of length {}",
                out.len(),
                word.len()
            )));
        }
        self.counters.forwarded += 1;
        self.counters.symbols += word.len() as u64;
        self.insert(word, &out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::reference;
    use crate::sul::MachineSul;
    use crate::symbol::word;

    struct Counting<O> {
        inner: O,
        calls: Vec<Word>,
    }

    impl<O: MembershipOracle> MembershipOracle for Counting<O> {
        fn query(&mut self, w: &[Symbol]) -> Result<Vec<Output>, SulError> {
            self.calls.push(w.to_vec());
            self.inner.query(w)
        }
    }

    #[test]
    fn same_word_reaches_sul_once() {
        let inner = Counting {
            inner: SulOracle::new(MachineSul::new(reference::minimal())),
            calls: vec![],
        };
        let mut cache = QueryCache::new(inner);
        let w = word(["INIT-CHLO", "FULL-CHLO", "GET"]);
        let first = cache.query(&w).unwrap();
        let second = cache.query(&w).unwrap();
        assert_eq!(first, second);
        // Prefixes come for free.
        cache.query(&w[..2]).unwrap();
        cache.query(&[]).unwrap();
        assert_eq!(cache.inner().calls.len(), 1);
        assert_eq!(
            cache.counters(),
            CacheCounters {
                forwarded: 1,
                symbols: 3,
                hits: 3,
                conflicts: 0
            }
        );
    }

    #[test]
    fn conflicting_answers_are_counted() {
        let mut cache = QueryCache::new(SulOracle::new(MachineSul::new(reference::minimal())));
        cache.query(&word(["GET"])).unwrap();
        cache
            .answers
            .insert(word(["GET"]), crate::symbol::outputs(["HTTP"]));
        cache.query(&word(["GET", "GET"])).unwrap();
        assert_eq!(cache.counters().conflicts, 1);
    }
}
