//! De-noising membership oracle: repeated sends, majority votes and response
//! filters on top of an abstract SUL.

use std::collections::BTreeSet;

use log::debug;
use serde::Serialize;

use super::filter::{FilterSet, Filtered};
use super::session::OUT_EXP;
use crate::lstar::MembershipOracle;
use crate::sim::reference::{CLOSE, FULL_CHLO, ZERO_RTT_CHLO};
use crate::sul::{AbstractSul, SulError};
use crate::symbol::{Output, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VoteMode {
    /// Each symbol is sent `repeats` times inside the running session.
    InSession,
    /// The whole word is re-run from a reset, `repeats` runs per round.
    Revote,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VotePolicy {
    pub mode: VoteMode,
    /// Sends per symbol (in-session) or runs per round (revote). Odd.
    pub repeats: usize,
    /// Revote: a position is decided once its leading output holds a strict
    /// majority and leads the runner-up by at least this many runs.
    pub min_lead: usize,
    /// Revote: rounds before an undecided position is reported.
    pub max_rounds: usize,
    /// In-session: symbols sent once because repeating them changes state.
    pub skip_repeat: BTreeSet<Symbol>,
    pub filters: FilterSet,
    /// Retries granted per position when a filter discards an observation.
    pub retry_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VotePolicyError {
    #[error("repeats must be odd and at least 1, got {0}")]
    Repeats(usize),
    #[error("min_lead must be at least 1")]
    MinLead,
    #[error("max_rounds must be at least 1")]
    MaxRounds,
}

impl VotePolicy {
    /// Whole-word revoting: three runs per round until every position has a
    /// lead of 9, for at most 30 rounds.
    pub fn revote() -> Self {
        Self {
            mode: VoteMode::Revote,
            repeats: 3,
            min_lead: 9,
            max_rounds: 30,
            skip_repeat: BTreeSet::new(),
            filters: FilterSet::standard(),
            retry_budget: 3,
        }
    }

    /// A single majority-of-`repeats` vote with one extra round for ties.
    pub fn single_vote(repeats: usize) -> Self {
        Self {
            repeats,
            min_lead: 1,
            max_rounds: 2,
            ..Self::revote()
        }
    }

    /// In-session triple sends, skipping the symbols that cannot be repeated.
    pub fn in_session() -> Self {
        Self {
            mode: VoteMode::InSession,
            skip_repeat: [CLOSE, ZERO_RTT_CHLO, FULL_CHLO]
                .into_iter()
                .map(Symbol::new)
                .collect(),
            ..Self::revote()
        }
    }

    pub fn for_mode(mode: VoteMode) -> Self {
        match mode {
            VoteMode::InSession => Self::in_session(),
            VoteMode::Revote => Self::revote(),
        }
    }

    pub fn validate(&self) -> Result<(), VotePolicyError> {
        if self.repeats == 0 || self.repeats.is_multiple_of(2) {
            return Err(VotePolicyError::Repeats(self.repeats));
        }
        if self.min_lead == 0 {
            return Err(VotePolicyError::MinLead);
        }
        if self.max_rounds == 0 {
            return Err(VotePolicyError::MaxRounds);
        }
        Ok(())
    }
}

impl Default for VotePolicy {
    fn default() -> Self {
        Self::revote()
    }
}

/// Counts of each distinct output, in order of first observation.
pub fn tally(observations: &[Output]) -> Vec<(Output, usize)> {
    let mut counts: Vec<(Output, usize)> = Vec::new();
    for o in observations {
        match counts.iter_mut().find(|(x, _)| x == o) {
            Some((_, n)) => *n += 1,
            None => counts.push((o.clone(), 1)),
        }
    }
    counts
}

/// The output seen in strictly more than half of the observations.
pub fn majority(observations: &[Output]) -> Option<Output> {
    tally(observations)
        .into_iter()
        .find(|(_, n)| 2 * n > observations.len())
        .map(|(o, _)| o)
}

/// In-session vote: the most frequent actual response, ties going to the
/// earliest. Silence only wins when nothing was received, since a repeated
/// request that is merely acknowledged produces silence.
pub fn in_session_vote(observations: &[Output]) -> Output {
    let mut best: Option<(Output, usize)> = None;
    for (o, n) in tally(observations) {
        if o == OUT_EXP {
            continue;
        }
        if best.as_ref().is_none_or(|(_, m)| n > *m) {
            best = Some((o, n));
        }
    }
    best.map_or_else(|| Output::new(OUT_EXP), |(o, _)| o)
}

fn decided(counts: &[(Output, usize)], min_lead: usize) -> Option<Output> {
    let total: usize = counts.iter().map(|(_, n)| n).sum();
    let mut sorted: Vec<&(Output, usize)> = counts.iter().collect();
    sorted.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
    let (leader, l) = sorted.first().map(|(o, n)| (o, *n))?;
    let runner_up = sorted.get(1).map_or(0, |(_, n)| *n);
    (2 * l > total && l - runner_up >= min_lead).then(|| leader.clone())
}

/// What the oracle saw at one position of the last query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PositionTrace {
    pub input: Symbol,
    /// Every raw observation, in order, before voting and filtering.
    pub raw: Vec<Output>,
    pub voted: Output,
    /// Outputs observed during filter retries.
    pub retried: Vec<Output>,
    pub answer: Output,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VoteStats {
    pub words: u64,
    /// SUL resets.
    pub runs: u64,
    /// Input symbols actually sent to the SUL.
    pub symbols_sent: u64,
    pub filter_retries: u64,
}

/// A [`MembershipOracle`] over an abstract SUL that de-noises answers.
#[derive(Debug)]
pub struct VotingOracle<A> {
    sul: A,
    policy: VotePolicy,
    stats: VoteStats,
    trace: Vec<PositionTrace>,
}

impl<A: AbstractSul> VotingOracle<A> {
    pub fn new(sul: A, policy: VotePolicy) -> Result<Self, VotePolicyError> {
        policy.validate()?;
        Ok(Self {
            sul,
            policy,
            stats: VoteStats::default(),
            trace: Vec::new(),
        })
    }

    pub fn policy(&self) -> &VotePolicy {
        &self.policy
    }

    pub fn stats(&self) -> VoteStats {
        self.stats
    }

    /// Per-position details of the most recent query.
    pub fn last_trace(&self) -> &[PositionTrace] {
        &self.trace
    }

    pub fn sul(&self) -> &A {
        &self.sul
    }

    pub fn sul_mut(&mut self) -> &mut A {
        &mut self.sul
    }

    pub fn into_inner(self) -> A {
        self.sul
    }

    fn reset(&mut self) -> Result<(), SulError> {
        self.stats.runs += 1;
        self.sul.reset()
    }

    fn send(&mut self, a: &Symbol) -> Result<Output, SulError> {
        self.stats.symbols_sent += 1;
        self.sul.step(a)
    }

    fn sends_for(&self, a: &Symbol) -> usize {
        if self.policy.skip_repeat.contains(a) {
            1
        } else {
            self.policy.repeats
        }
    }

    /// Sends `a` as the in-session policy prescribes, returning raw outputs.
    fn send_in_session(&mut self, a: &Symbol) -> Result<Vec<Output>, SulError> {
        (0..self.sends_for(a)).map(|_| self.send(a)).collect()
    }

    /// Re-isolates position `i` of `word`: reset, replay the prefix, send the
    /// symbol once. Repeats while the filters ask for it, up to the budget.
    fn retry_position(
        &mut self,
        word: &[Symbol],
        i: usize,
        retried: &mut Vec<Output>,
    ) -> Result<Output, SulError> {
        let a = &word[i];
        for _ in 0..self.policy.retry_budget {
            self.stats.filter_retries += 1;
            self.reset()?;
            for b in &word[..i] {
                match self.policy.mode {
                    VoteMode::InSession => {
                        self.send_in_session(b)?;
                    }
                    VoteMode::Revote => {
                        self.send(b)?;
                    }
                }
            }
            let o = self.send(a)?;
            retried.push(o.clone());
            if let Filtered::Keep(o) = self.policy.filters.apply(a, &o) {
                return Ok(o);
            }
        }
        Err(SulError::NonDeterministic {
            word: word.to_vec(),
            position: i,
            observed: tally(retried),
        })
    }

    fn query_in_session(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError> {
        self.reset()?;
        let mut answers = Vec::with_capacity(word.len());
        for (i, a) in word.iter().enumerate() {
            let raw = self.send_in_session(a)?;
            let voted = in_session_vote(&raw);
            let mut retried = Vec::new();
            let answer = match self.policy.filters.apply(a, &voted) {
                Filtered::Keep(o) => o,
                Filtered::Retry => self.retry_position(word, i, &mut retried)?,
            };
            self.trace.push(PositionTrace {
                input: a.clone(),
                raw,
                voted,
                retried,
                answer: answer.clone(),
            });
            answers.push(answer);
        }
        Ok(answers)
    }

    fn query_revote(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError> {
        let n = word.len();
        let mut raw: Vec<Vec<Output>> = vec![Vec::new(); n];
        let mut voted: Vec<Output> = Vec::new();
        for round in 1..=self.policy.max_rounds {
            for _ in 0..self.policy.repeats {
                self.reset()?;
                for (i, a) in word.iter().enumerate() {
                    let o = self.send(a)?;
                    raw[i].push(o);
                }
            }
            let decisions: Vec<Option<Output>> = raw
                .iter()
                .map(|obs| decided(&tally(obs), self.policy.min_lead))
                .collect();
            if let Some(i) = decisions.iter().position(Option::is_none) {
                if round == self.policy.max_rounds {
                    return Err(SulError::NonDeterministic {
                        word: word.to_vec(),
                        position: i,
                        observed: tally(&raw[i]),
                    });
                }
                continue;
            }
            if round > 1 {
                debug!("word of length {n} decided after {round} rounds");
            }
            voted = decisions
                .into_iter()
                .map(|d| d.expect("all decided"))
                .collect();
            break;
        }

        let mut answers = Vec::with_capacity(n);
        for (i, (a, v)) in word.iter().zip(voted).enumerate() {
            let mut retried = Vec::new();
            let answer = match self.policy.filters.apply(a, &v) {
                Filtered::Keep(o) => o,
                Filtered::Retry => self.retry_position(word, i, &mut retried)?,
            };
            self.trace.push(PositionTrace {
                input: a.clone(),
                raw: std::mem::take(&mut raw[i]),
                voted: v,
                retried,
                answer: answer.clone(),
            });
            answers.push(answer);
        }
        Ok(answers)
    }
}

impl<A: AbstractSul> MembershipOracle for VotingOracle<A> {
    fn query(&mut self, word: &[Symbol]) -> Result<Vec<Output>, SulError> {
        self.trace.clear();
        self.stats.words += 1;
        if word.is_empty() {
            return Ok(Vec::new());
        }
        match self.policy.mode {
            VoteMode::InSession => self.query_in_session(word),
            VoteMode::Revote => self.query_revote(word),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::outputs;
    use proptest::prelude::*;

    #[test]
    fn majority_basics() {
        assert_eq!(majority(&outputs(["A", "B", "A"])), Some(Output::new("A")));
        assert_eq!(majority(&outputs(["A", "B", "C"])), None);
        assert_eq!(majority(&outputs(["A", "B"])), None);
    }

    #[test]
    fn in_session_vote_prefers_responses_over_silence() {
        assert_eq!(in_session_vote(&outputs(["HTTP", "EXP", "EXP"])), "HTTP");
        assert_eq!(in_session_vote(&outputs(["REJ", "SHLO", "SHLO"])), "SHLO");
        assert_eq!(in_session_vote(&outputs(["EXP", "EXP", "EXP"])), "EXP");
        assert_eq!(
            in_session_vote(&outputs(["CLOSED", "PRST", "PRST"])),
            "PRST"
        );
        assert_eq!(in_session_vote(&outputs(["CLOSED", "PRST"])), "CLOSED");
    }

    #[test]
    fn lead_rule() {
        let t = |v: &[&str]| tally(&outputs(v.iter().copied()));
        assert_eq!(decided(&t(&["A", "A", "B"]), 1), Some(Output::new("A")));
        assert_eq!(decided(&t(&["A", "A", "B"]), 2), None);
        assert_eq!(decided(&t(&["A", "A", "A"]), 3), Some(Output::new("A")));
        assert_eq!(decided(&t(&["A", "B", "C"]), 1), None);
    }

    #[test]
    fn policy_validation() {
        assert!(VotePolicy::revote().validate().is_ok());
        let even = VotePolicy {
            repeats: 2,
            ..VotePolicy::revote()
        };
        assert_eq!(even.validate(), Err(VotePolicyError::Repeats(2)));
        let zero = VotePolicy {
            repeats: 0,
            ..VotePolicy::revote()
        };
        assert_eq!(zero.validate(), Err(VotePolicyError::Repeats(0)));
    }

    fn all_words(alphabet: &[Symbol], max_len: usize) -> Vec<Vec<Symbol>> {
        let mut level = vec![Vec::new()];
        let mut all = Vec::new();
        for _ in 0..max_len {
            level = level
                .iter()
                .flat_map(|w: &Vec<Symbol>| {
                    alphabet.iter().map(move |a| {
                        let mut w = w.clone();
                        w.push(a.clone());
                        w
                    })
                })
                .collect();
            all.extend(level.iter().cloned());
        }
        all
    }

    #[test]
    fn noiseless_votes_agree_with_reference() {
        use crate::mapper::simulated_oracle;
        use crate::sim::reference;
        for (m, max_len) in [(reference::minimal(), 6), (reference::extended(), 4)] {
            for policy in [VotePolicy::revote(), VotePolicy::in_session()] {
                let mut o = simulated_oracle(0, 0.0, policy.clone()).unwrap();
                for w in all_words(m.inputs(), max_len) {
                    assert_eq!(
                        o.query(&w).unwrap(),
                        m.run(&w).unwrap(),
                        "{:?} {w:?}",
                        policy.mode
                    );
                }
            }
        }
    }

    #[test]
    fn revote_handshake_example() {
        let mut o = crate::mapper::simulated_oracle(0, 0.0, VotePolicy::revote()).unwrap();
        let w = crate::symbol::word(["INIT-CHLO", "FULL-CHLO", "GET"]);
        assert_eq!(o.query(&w).unwrap(), outputs(["REJ", "SHLO", "HTTP"]));
        assert_eq!(o.stats().runs, 9);
    }

    proptest! {
        #[test]
        fn majority_is_permutation_invariant(
            obs in proptest::collection::vec(prop_oneof![Just("A"), Just("B"), Just("C")], 1..9),
            seed in any::<u64>()
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let obs = outputs(obs);
            let mut shuffled = obs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(majority(&obs), majority(&shuffled));
            prop_assert_eq!(decided(&tally(&obs), 2), decided(&tally(&shuffled), 2));
        }
    }
}
