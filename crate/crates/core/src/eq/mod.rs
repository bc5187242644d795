//! Equivalence oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lstar::MembershipOracle;
use crate::mealy::MealyMachine;
use crate::sul::SulError;
use crate::symbol::Word;

/// Searches for a word on which the SUL and a hypothesis disagree.
pub trait EquivalenceOracle {
    fn find_counterexample(
        &mut self,
        sul: &mut dyn MembershipOracle,
        hyp: &MealyMachine,
    ) -> Result<Option<Word>, SulError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EqConfigError {
    #[error("number of test words must be at least 1")]
    NoQueries,
    #[error("minimum length must be at least 1")]
    ZeroMinLength,
    #[error("minimum length {min} exceeds maximum length {max}")]
    LengthRange { min: usize, max: usize },
}

/// Parameters of the random-word oracle. Defaults: 100 words of length 5 to 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RandomEqConfig {
    num_queries: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
}

impl RandomEqConfig {
    pub fn new(
        num_queries: usize,
        min_len: usize,
        max_len: usize,
        seed: u64,
    ) -> Result<Self, EqConfigError> {
        if num_queries == 0 {
            return Err(EqConfigError::NoQueries);
        }
        if min_len == 0 {
            return Err(EqConfigError::ZeroMinLength);
        }
        if min_len > max_len {
            return Err(EqConfigError::LengthRange {
                min: min_len,
                max: max_len,
            });
        }
        Ok(Self {
            num_queries,
            min_len,
            max_len,
            seed,
        })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn num_queries(&self) -> usize {
        self.num_queries
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Default for RandomEqConfig {
    fn default() -> Self {
        Self {
            num_queries: 100,
            min_len: 5,
            max_len: 10,
            seed: 0,
        }
    }
}

/// Tests `num_queries` random words per equivalence query. Lengths are
/// uniform over `[min_len, max_len]`, symbols i.i.d. uniform over the
/// hypothesis alphabet. The generator is seeded once, so successive
/// equivalence queries draw fresh words.
#[derive(Debug, Clone)]
pub struct RandomWordOracle {
    config: RandomEqConfig,
    rng: ChaCha8Rng,
}

impl RandomWordOracle {
    pub fn new(config: RandomEqConfig) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
        }
    }

    pub fn config(&self) -> &RandomEqConfig {
        &self.config
    }
}

impl EquivalenceOracle for RandomWordOracle {
    fn find_counterexample(
        &mut self,
        sul: &mut dyn MembershipOracle,
        hyp: &MealyMachine,
    ) -> Result<Option<Word>, SulError> {
        let inputs = hyp.inputs();
        if inputs.is_empty() {
            return Ok(None);
        }
        for _ in 0..self.config.num_queries {
            let len = self
                .rng
                .gen_range(self.config.min_len..=self.config.max_len);
            let w: Word = (0..len)
                .map(|_| inputs[self.rng.gen_range(0..inputs.len())].clone())
                .collect();
            if sul.query(&w)? != hyp.run(&w)? {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }
}

/// One pass of the random-word oracle with a freshly seeded generator.
pub fn random_word_oracle(
    sul: &mut dyn MembershipOracle,
    hyp: &MealyMachine,
    config: RandomEqConfig,
) -> Result<Option<Word>, SulError> {
    RandomWordOracle::new(config).find_counterexample(sul, hyp)
}

/// White-box oracle: compares the hypothesis with a known reference model.
#[derive(Debug, Clone)]
pub struct ExhaustiveOracle {
    reference: MealyMachine,
}

impl ExhaustiveOracle {
    pub fn new(reference: MealyMachine) -> Self {
        Self { reference }
    }
}

impl EquivalenceOracle for ExhaustiveOracle {
    fn find_counterexample(
        &mut self,
        _sul: &mut dyn MembershipOracle,
        hyp: &MealyMachine,
    ) -> Result<Option<Word>, SulError> {
        Ok(exhaustive_oracle(&self.reference, hyp)?)
    }
}

/// The shortest word separating `reference` and `hyp`, if any.
pub fn exhaustive_oracle(
    reference: &MealyMachine,
    hyp: &MealyMachine,
) -> Result<Option<Word>, crate::mealy::MealyError> {
    reference.equivalent(hyp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstar::SulOracle;
    use crate::mealy::MealyError;
    use crate::sim::reference;
    use crate::sul::MachineSul;
    use crate::symbol::{word, Symbol};

    fn oracle(m: &MealyMachine) -> SulOracle<MachineSul> {
        SulOracle::new(MachineSul::new(m.clone()))
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            RandomEqConfig::new(0, 5, 10, 0),
            Err(EqConfigError::NoQueries)
        );
        assert_eq!(
            RandomEqConfig::new(1, 0, 10, 0),
            Err(EqConfigError::ZeroMinLength)
        );
        assert_eq!(
            RandomEqConfig::new(1, 6, 5, 0),
            Err(EqConfigError::LengthRange { min: 6, max: 5 })
        );
        let d = RandomEqConfig::default();
        assert_eq!((d.num_queries(), d.min_len(), d.max_len()), (100, 5, 10));
    }

    #[test]
    fn true_model_has_no_counterexample() {
        let m = reference::minimal();
        for seed in 0..10 {
            let cfg = RandomEqConfig::with_seed(seed);
            assert_eq!(random_word_oracle(&mut oracle(&m), &m, cfg).unwrap(), None);
        }
    }

    #[test]
    fn finds_flipped_get_output() {
        let m = reference::minimal();
        let s2 = m.state_by_name("S2").unwrap();
        let hyp = m.with_output(s2, &Symbol::new("GET"), "EXP").unwrap();
        let cfg = RandomEqConfig::new(100, 5, 10, 7).unwrap();
        let w = random_word_oracle(&mut oracle(&m), &hyp, cfg)
            .unwrap()
            .expect("a counterexample at seed 7");
        assert_ne!(m.run(&w).unwrap(), hyp.run(&w).unwrap());
        // The word drives the reference into S2 and then reads GET.
        let hits_s2_get = (0..w.len()).any(|i| m.reach(&w[..i]).unwrap() == s2 && w[i] == "GET");
        assert!(hits_s2_get, "{w:?}");
    }

    #[test]
    fn seeded_runs_repeat() {
        let m = reference::minimal();
        let s1 = m.state_by_name("S1").unwrap();
        let hyp = m.with_output(s1, &Symbol::new("CLOSE"), "PRST").unwrap();
        let cfg = RandomEqConfig::with_seed(42);
        let a = random_word_oracle(&mut oracle(&m), &hyp, cfg).unwrap();
        let b = random_word_oracle(&mut oracle(&m), &hyp, cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_some());
    }

    #[test]
    fn exhaustive_examples() {
        let m = reference::minimal();
        assert_eq!(exhaustive_oracle(&m, &m).unwrap(), None);

        let ext = reference::extended();
        let s1 = ext.state_by_name("S1").unwrap();
        let miswired = ext.with_target(s1, &Symbol::new("0RTT-CHLO"), s1).unwrap();
        let w = exhaustive_oracle(&ext, &miswired).unwrap().unwrap();
        assert_eq!(w, word(["INIT-CHLO", "0RTT-CHLO", "FULL-CHLO"]));
        assert_ne!(ext.run(&w).unwrap(), miswired.run(&w).unwrap());

        let constant = MealyMachine::from_rows(
            &reference::MINIMAL_INPUTS,
            &[(
                "q",
                &[
                    ("INIT-CHLO", "q", "REJ"),
                    ("FULL-CHLO", "q", "PRST"),
                    ("GET", "q", "EXP"),
                    ("CLOSE", "q", "PRST"),
                ],
            )],
        )
        .unwrap();
        let w = exhaustive_oracle(&m, &constant).unwrap().unwrap();
        assert!(w.len() <= 2, "{w:?}");
        assert_eq!(
            exhaustive_oracle(&m, &ext),
            Err(MealyError::AlphabetMismatch)
        );
    }
}
