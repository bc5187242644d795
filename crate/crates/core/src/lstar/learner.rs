use log::debug;
use serde::Serialize;

use super::{LearnError, MembershipOracle, ObservationTable, QueryCache};
use crate::eq::EquivalenceOracle;
use crate::mealy::MealyMachine;
use crate::symbol::{display_word, Symbol, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LearnConfig {
    /// Counterexamples processed before giving up.
    pub max_refinements: usize,
    /// Closedness/consistency fixes allowed per table update.
    pub max_table_fixes: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            max_refinements: 1000,
            max_table_fixes: 10_000,
        }
    }
}

/// Counters reported at the end of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LearnStats {
    /// Distinct words sent to the SUL while filling the table.
    pub membership_queries: u64,
    /// Hypotheses submitted to the equivalence oracle.
    pub equivalence_queries: u64,
    /// Distinct words sent to the SUL by the equivalence oracle.
    pub equivalence_test_queries: u64,
    /// Counterexamples processed.
    pub refinement_rounds: u64,
    /// Input symbols in every word sent to the SUL.
    pub total_input_symbols_sent: u64,
    /// Queries answered by the membership cache.
    pub cache_hits: u64,
    /// State count of each hypothesis, in order.
    pub hypothesis_states: Vec<usize>,
}

/// The L* learner with its table and membership cache.
pub struct Learner<O> {
    oracle: QueryCache<O>,
    table: ObservationTable,
    config: LearnConfig,
    stats: LearnStats,
    hypothesis: Option<MealyMachine>,
}

impl<O: MembershipOracle> Learner<O> {
    pub fn new(oracle: O, alphabet: Vec<Symbol>, config: LearnConfig) -> Result<Self, LearnError> {
        if alphabet.is_empty() {
            return Err(LearnError::EmptyAlphabet);
        }
        Ok(Self {
            oracle: QueryCache::new(oracle),
            table: ObservationTable::new(alphabet),
            config,
            stats: LearnStats::default(),
            hypothesis: None,
        })
    }

    pub fn table(&self) -> &ObservationTable {
        &self.table
    }

    pub fn cache(&self) -> &QueryCache<O> {
        &self.oracle
    }

    pub fn stats(&self) -> &LearnStats {
        &self.stats
    }

    pub fn into_oracle(self) -> O {
        self.oracle.into_inner()
    }

    fn sync_counters(&mut self) {
        let c = self.oracle.counters();
        self.stats.membership_queries = c.forwarded - self.stats.equivalence_test_queries;
        self.stats.total_input_symbols_sent = c.symbols;
        self.stats.cache_hits = c.hits;
    }

    /// Brings the table to a closed, consistent state and reads off the
    /// current hypothesis.
    pub fn hypothesis(&mut self) -> Result<&MealyMachine, LearnError> {
        if self.hypothesis.is_none() {
            let result = self
                .table
                .close_and_make_consistent(&mut self.oracle, self.config.max_table_fixes);
            self.sync_counters();
            result?;
            let h = self.table.hypothesis()?;
            debug!(
                "hypothesis with {} states (|S|={}, |E|={})",
                h.num_states(),
                self.table.prefixes().len(),
                self.table.suffixes().len()
            );
            self.stats.hypothesis_states.push(h.num_states());
            self.hypothesis = Some(h);
        }
        Ok(self.hypothesis.as_ref().expect("just computed"))
    }

    /// Processes a counterexample: checks that it separates SUL and
    /// hypothesis, adds all its prefixes to `S`, and re-closes the table.
    pub fn refine(&mut self, counterexample: &[Symbol]) -> Result<&MealyMachine, LearnError> {
        let hyp = self.hypothesis()?.clone();
        let observed = self.oracle.query(counterexample);
        self.sync_counters();
        let observed = observed?;
        if hyp.run(counterexample)? == observed {
            return Err(LearnError::NotACounterexample(counterexample.to_vec()));
        }
        debug!("refining with `{}`", display_word(counterexample));
        self.table.add_prefix(counterexample);
        self.stats.refinement_rounds += 1;
        self.hypothesis = None;
        self.hypothesis()
    }

    /// Runs the hypothesis/equivalence loop to completion.
    pub fn run(&mut self, eq: &mut dyn EquivalenceOracle) -> Result<MealyMachine, LearnError> {
        loop {
            let hyp = self.hypothesis()?.clone();
            self.stats.equivalence_queries += 1;
            let before = self.oracle.counters().forwarded;
            let answer = eq.find_counterexample(&mut self.oracle, &hyp);
            self.stats.equivalence_test_queries += self.oracle.counters().forwarded - before;
            self.sync_counters();
            let Some(ce) = answer? else {
                return Ok(hyp);
            };
            if self.stats.refinement_rounds as usize >= self.config.max_refinements {
                return Err(LearnError::RoundCap {
                    rounds: self.stats.refinement_rounds as usize,
                    hypothesis: Box::new(hyp),
                });
            }
            self.refine(&ce)?;
        }
    }
}

/// Learns a Mealy machine over `alphabet`, returning the first hypothesis the
/// equivalence oracle accepts together with run statistics.
pub fn learn<O: MembershipOracle>(
    oracle: O,
    alphabet: Vec<Symbol>,
    eq: &mut dyn EquivalenceOracle,
    config: LearnConfig,
) -> Result<(MealyMachine, LearnStats), LearnError> {
    let mut learner = Learner::new(oracle, alphabet, config)?;
    let model = learner.run(eq)?;
    Ok((model, learner.stats))
}

/// Returns `words` that the model answers differently than recorded.
pub fn replay_mismatches<'a>(
    model: &MealyMachine,
    answers: impl IntoIterator<Item = (&'a Word, &'a Vec<crate::symbol::Output>)>,
) -> Vec<Word> {
    answers
        .into_iter()
        .filter(|(w, out)| model.run(w).ok().as_ref() != Some(*out))
        .map(|(w, _)| w.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eq::{EquivalenceOracle, ExhaustiveOracle};
    use crate::lstar::SulOracle;
    use crate::sim::reference;
    use crate::sul::{MachineSul, SulError};
    use crate::symbol::word;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sul_oracle(m: &MealyMachine) -> SulOracle<MachineSul> {
        SulOracle::new(MachineSul::new(m.clone()))
    }

    #[test]
    fn learns_minimal_reference() {
        let m = reference::minimal();
        let mut eq = ExhaustiveOracle::new(m.clone());
        let (h, stats) = learn(
            sul_oracle(&m),
            m.inputs().to_vec(),
            &mut eq,
            LearnConfig::default(),
        )
        .unwrap();
        assert_eq!(h.equivalent(&m).unwrap(), None);
        assert_eq!(h.num_states(), 5);
        assert!(stats.equivalence_queries >= 1);
    }

    #[test]
    fn learns_extended_reference() {
        let m = reference::extended();
        let mut eq = ExhaustiveOracle::new(m.clone());
        let (h, _) = learn(
            sul_oracle(&m),
            m.inputs().to_vec(),
            &mut eq,
            LearnConfig::default(),
        )
        .unwrap();
        assert_eq!(h.equivalent(&m).unwrap(), None);
        assert_eq!(h.num_states(), 5);
    }

    #[test]
    fn constant_sul_gives_one_state() {
        let m = MealyMachine::from_rows(&["a", "b"], &[("q", &[("a", "q", "x"), ("b", "q", "x")])])
            .unwrap();
        let mut learner =
            Learner::new(sul_oracle(&m), m.inputs().to_vec(), LearnConfig::default()).unwrap();
        assert_eq!(learner.hypothesis().unwrap().num_states(), 1);
        // Six cells; the length-1 words are prefixes of the length-2 ones.
        assert_eq!(learner.stats().membership_queries, 4);
        assert_eq!(learner.stats().cache_hits, 2);
    }

    #[test]
    fn empty_alphabet_rejected() {
        let m = reference::minimal();
        assert!(matches!(
            Learner::new(sul_oracle(&m), vec![], LearnConfig::default()),
            Err(LearnError::EmptyAlphabet)
        ));
    }

    #[test]
    fn counterexample_splits_established_and_served() {
        let m = reference::minimal();
        let mut learner =
            Learner::new(sul_oracle(&m), m.inputs().to_vec(), LearnConfig::default()).unwrap();
        let first = learner.hypothesis().unwrap().clone();
        let ce = word(["INIT-CHLO", "FULL-CHLO", "GET", "GET"]);
        let predicted = first.run(&ce).unwrap();
        let actual = m.run(&ce).unwrap();
        assert_eq!(
            actual,
            crate::symbol::outputs(["REJ", "SHLO", "HTTP", "EXP"])
        );
        if predicted == actual {
            // The initial table already separates S2 and S3; nothing to refine.
            assert!(matches!(
                learner.refine(&ce),
                Err(LearnError::NotACounterexample(_))
            ));
            return;
        }
        let next = learner.refine(&ce).unwrap().clone();
        assert!(next.num_states() > first.num_states());
        assert_eq!(next.run(&ce).unwrap(), actual);
    }

    #[test]
    fn non_separating_word_is_rejected() {
        let m = reference::minimal();
        let mut learner =
            Learner::new(sul_oracle(&m), m.inputs().to_vec(), LearnConfig::default()).unwrap();
        learner.hypothesis().unwrap();
        let err = learner.refine(&word(["INIT-CHLO"])).unwrap_err();
        assert!(matches!(err, LearnError::NotACounterexample(_)));
    }

    struct AlwaysWrong;

    impl EquivalenceOracle for AlwaysWrong {
        fn find_counterexample(
            &mut self,
            _sul: &mut dyn MembershipOracle,
            _hyp: &MealyMachine,
        ) -> Result<Option<Word>, SulError> {
            Ok(Some(word(["GET"])))
        }
    }

    #[test]
    fn refinement_cap_returns_last_hypothesis() {
        let m = reference::minimal();
        let config = LearnConfig {
            max_refinements: 0,
            ..LearnConfig::default()
        };
        match learn(
            sul_oracle(&m),
            m.inputs().to_vec(),
            &mut AlwaysWrong,
            config,
        ) {
            Err(LearnError::RoundCap {
                rounds: 0,
                hypothesis,
            }) => {
                assert!(hypothesis.num_states() >= 1)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Checks each hypothesis against every table answer before delegating.
    struct ReplayCheck {
        inner: ExhaustiveOracle,
        sizes: Vec<usize>,
    }

    impl EquivalenceOracle for ReplayCheck {
        fn find_counterexample(
            &mut self,
            sul: &mut dyn MembershipOracle,
            hyp: &MealyMachine,
        ) -> Result<Option<Word>, SulError> {
            self.sizes.push(hyp.num_states());
            self.inner.find_counterexample(sul, hyp)
        }
    }

    fn check_learner_on(m: &MealyMachine) -> Result<(), TestCaseError> {
        let mut eq = ReplayCheck {
            inner: ExhaustiveOracle::new(m.clone()),
            sizes: vec![],
        };
        let mut learner =
            Learner::new(sul_oracle(m), m.inputs().to_vec(), LearnConfig::default()).unwrap();
        loop {
            let hyp = learner.hypothesis().unwrap().clone();
            // Consistent with every answer the table has seen.
            let table = learner.table();
            for p in table.prefixes().iter().cloned().chain(table.boundary()) {
                for (i, e) in table.suffixes().iter().enumerate() {
                    let mut w = p.clone();
                    w.extend(e.iter().cloned());
                    let out = hyp.run(&w).unwrap();
                    prop_assert_eq!(&out[p.len()..], table.cell(&p, i).unwrap());
                }
            }
            prop_assert!(replay_mismatches(&hyp, learner.cache().entries()).is_empty());
            match eq.find_counterexample(&mut sul_oracle(m), &hyp).unwrap() {
                None => break,
                Some(ce) => {
                    learner.refine(&ce).unwrap();
                }
            }
        }
        let h = learner.hypothesis().unwrap();
        prop_assert_eq!(h.equivalent(m).unwrap(), None);
        prop_assert!(eq.sizes.windows(2).all(|w| w[0] <= w[1]));
        let stats = learner.stats();
        prop_assert!(stats.membership_queries as usize <= learner.table().size());
        Ok(())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn recovers_random_machines(n in 1usize..=8, k in 1usize..=5, o in 1usize..=3, seed in any::<u64>()) {
            let m = MealyMachine::random(&mut ChaCha8Rng::seed_from_u64(seed), n, k, o);
            check_learner_on(&m)?;
        }
    }
}
