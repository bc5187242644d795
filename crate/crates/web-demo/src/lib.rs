//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain values and returns a JSON string, so the page
//! needs no generated TypeScript types.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use quiclearn::eq::{ExhaustiveOracle, RandomEqConfig, RandomWordOracle};
use quiclearn::harness::AlphabetChoice;
use quiclearn::lstar::{LearnConfig, LearnStats, Learner, MembershipOracle, ObservationTable};
use quiclearn::mapper::{simulated_oracle, FilterSet, VoteMode, VotePolicy};
use quiclearn::mealy::{to_dot, MealyMachine};
use quiclearn::sim::reference::{FULL_CHLO, INIT_CHLO};
use quiclearn::symbol::{display_word, word, Symbol};

#[derive(Debug, Serialize)]
pub struct Transition {
    pub from: String,
    pub input: String,
    pub output: String,
    pub to: String,
}

#[derive(Debug, Serialize)]
pub struct ModelView {
    pub initial: String,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub transitions: Vec<Transition>,
    pub dot: String,
}

impl ModelView {
    pub fn of(m: &MealyMachine) -> Self {
        Self {
            initial: m.state_name(m.initial()).to_string(),
            states: m.state_names().to_vec(),
            inputs: m.inputs().iter().map(ToString::to_string).collect(),
            transitions: m
                .transitions()
                .map(|(s, a, t, o)| Transition {
                    from: m.state_name(s).to_string(),
                    input: a.to_string(),
                    output: o.to_string(),
                    to: m.state_name(t).to_string(),
                })
                .collect(),
            dot: to_dot(m),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TableRow {
    pub prefix: String,
    /// In `S` rather than the boundary `S·Σ`.
    pub upper: bool,
    pub cells: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct TableView {
    pub suffixes: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl TableView {
    pub fn of(t: &ObservationTable) -> Self {
        let row = |p: &[Symbol], upper: bool| TableRow {
            prefix: display_word(p),
            upper,
            cells: (0..t.suffixes().len())
                .map(|e| {
                    t.cell(p, e)
                        .map_or_else(|| "?".into(), display_word_outputs)
                })
                .collect(),
        };
        let mut rows: Vec<TableRow> = t.prefixes().iter().map(|p| row(p, true)).collect();
        rows.extend(t.boundary().iter().map(|p| row(p, false)));
        Self {
            suffixes: t.suffixes().iter().map(|e| display_word(e)).collect(),
            rows,
        }
    }
}

fn display_word_outputs(outs: &[quiclearn::Output]) -> String {
    outs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Serialize)]
pub struct LearnView {
    pub model: ModelView,
    pub table: TableView,
    pub stats: LearnStats,
    pub sul_runs: u64,
    pub sul_symbols: u64,
    /// Shortest word on which the learned model and the reference differ.
    pub separating_word: Option<String>,
}

fn parse<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| e.to_string())
}

/// Learns the simulated server with the random-word oracle, or with the
/// reference model when `exhaustive` is set.
pub fn learn(
    alphabet: &str,
    vote: &str,
    noise_retx: f64,
    seed: u64,
    exhaustive: bool,
) -> Result<LearnView, String> {
    let alphabet: AlphabetChoice = parse(alphabet)?;
    let mode: VoteMode = parse(vote)?;
    if !(0.0..=1.0).contains(&noise_retx) {
        return Err(format!("noise {noise_retx} is outside [0, 1]"));
    }
    let oracle = simulated_oracle(seed, noise_retx, VotePolicy::for_mode(mode))
        .map_err(|e| e.to_string())?;
    let mut learner = Learner::new(oracle, alphabet.symbols(), LearnConfig::default())
        .map_err(|e| e.to_string())?;
    let reference = alphabet.reference();
    let model = if exhaustive {
        learner.run(&mut ExhaustiveOracle::new(reference.clone()))
    } else {
        learner.run(&mut RandomWordOracle::new(RandomEqConfig::with_seed(seed)))
    }
    .map_err(|e| e.to_string())?;
    let separating_word = model
        .equivalent(&reference)
        .map_err(|e| e.to_string())?
        .map(|w| display_word(&w));
    let table = TableView::of(learner.table());
    let stats = learner.stats().clone();
    let vote = learner.into_oracle().stats();
    Ok(LearnView {
        model: ModelView::of(&model),
        table,
        stats,
        sul_runs: vote.runs,
        sul_symbols: vote.symbols_sent,
        separating_word,
    })
}

#[derive(Debug, Serialize)]
pub struct Step {
    pub state: String,
    pub input: String,
    pub output: String,
    pub next: String,
}

#[derive(Debug, Serialize)]
pub struct RunView {
    pub model: ModelView,
    pub steps: Vec<Step>,
}

/// Runs a space-separated word on the reference model.
pub fn run_word(alphabet: &str, text: &str) -> Result<RunView, String> {
    let m = parse::<AlphabetChoice>(alphabet)?.reference();
    let mut s = m.initial();
    let steps = text
        .split_whitespace()
        .map(|a| {
            let (t, o) = m.step(s, &Symbol::new(a)).map_err(|e| e.to_string())?;
            let step = Step {
                state: m.state_name(s).to_string(),
                input: a.to_string(),
                output: o.to_string(),
                next: m.state_name(t).to_string(),
            };
            s = t;
            Ok(step)
        })
        .collect::<Result<_, String>>()?;
    Ok(RunView {
        model: ModelView::of(&m),
        steps,
    })
}

#[derive(Debug, Serialize)]
pub struct VoteExperiment {
    pub trials: u32,
    pub wrong: u32,
    pub observed: f64,
    /// Two or more of three independent draws are noisy: `3p² - 2p³`.
    pub predicted: f64,
}

/// How often a single best-of-three vote picks the retransmitted response.
pub fn vote_experiment(noise_retx: f64, trials: u32, seed: u64) -> Result<VoteExperiment, String> {
    if !(0.0..=1.0).contains(&noise_retx) || trials == 0 {
        return Err("need 0 <= p <= 1 and at least one trial".into());
    }
    let policy = VotePolicy {
        filters: FilterSet::empty(),
        ..VotePolicy::single_vote(3)
    };
    let mut oracle = simulated_oracle(seed, noise_retx, policy).map_err(|e| e.to_string())?;
    let w = word([INIT_CHLO, FULL_CHLO]);
    let mut wrong = 0;
    for _ in 0..trials {
        if oracle.query(&w).map_err(|e| e.to_string())?[1] != "SHLO" {
            wrong += 1;
        }
    }
    let p = noise_retx;
    Ok(VoteExperiment {
        trials,
        wrong,
        observed: f64::from(wrong) / f64::from(trials),
        predicted: 3.0 * p * p - 2.0 * p * p * p,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = learnModel)]
pub fn learn_model(
    alphabet: &str,
    vote: &str,
    noise_retx: f64,
    seed: u32,
    exhaustive: bool,
) -> Result<String, JsValue> {
    to_js(learn(
        alphabet,
        vote,
        noise_retx,
        u64::from(seed),
        exhaustive,
    ))
}

#[wasm_bindgen(js_name = runWord)]
pub fn run_word_js(alphabet: &str, text: &str) -> Result<String, JsValue> {
    to_js(run_word(alphabet, text))
}

#[wasm_bindgen(js_name = voteExperiment)]
pub fn vote_experiment_js(noise_retx: f64, trials: u32, seed: u32) -> Result<String, JsValue> {
    to_js(vote_experiment(noise_retx, trials, u64::from(seed)))
}
