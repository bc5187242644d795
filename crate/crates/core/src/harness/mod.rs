//! Run configuration and the command implementations behind the CLI.

mod socket;

pub use socket::{
    handle_line, serve, SocketSul, DEFAULT_READ_TIMEOUT, OK_LINE, RESET_LINE, UNKNOWN_SYMBOL_LINE,
};

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::eq::{EquivalenceOracle, ExhaustiveOracle, RandomEqConfig, RandomWordOracle};
use crate::lstar::{learn, LearnConfig, LearnError, LearnStats, MembershipOracle};
use crate::mapper::{Mapper, VoteMode, VotePolicy, VoteStats, VotingOracle};
use crate::mealy::{from_dot, to_dot, DotError, MealyMachine};
use crate::sim::{reference, ServerState};
use crate::sul::{AbstractSul, SulError};
use crate::symbol::{display_word, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphabetChoice {
    /// Every input except `0RTT-CHLO`.
    Minimal,
    Extended,
}

impl AlphabetChoice {
    pub fn symbols(self) -> Vec<Symbol> {
        match self {
            AlphabetChoice::Minimal => reference::minimal_alphabet(),
            AlphabetChoice::Extended => reference::extended_alphabet(),
        }
    }

    /// The expected model for the simulated server.
    pub fn reference(self) -> MealyMachine {
        match self {
            AlphabetChoice::Minimal => reference::minimal(),
            AlphabetChoice::Extended => reference::extended(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SulTarget {
    Sim,
    /// `host:port` of a line-protocol server.
    Socket(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EqChoice {
    Random,
    /// Compare against the reference machine; for testing the learner.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {what} `{value}`: expected {expected}")]
pub struct ParseChoiceError {
    what: &'static str,
    value: String,
    expected: &'static str,
}

fn choice_error(what: &'static str, value: &str, expected: &'static str) -> ParseChoiceError {
    ParseChoiceError {
        what,
        value: value.to_string(),
        expected,
    }
}

impl FromStr for AlphabetChoice {
    type Err = ParseChoiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minimal" => Ok(Self::Minimal),
            "extended" => Ok(Self::Extended),
            _ => Err(choice_error("alphabet", s, "minimal|extended")),
        }
    }
}

impl FromStr for SulTarget {
    type Err = ParseChoiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "sim" => Ok(Self::Sim),
            Some(("socket", addr)) if addr.contains(':') => Ok(Self::Socket(addr.to_string())),
            _ => Err(choice_error("SUL", s, "sim|socket:<host:port>")),
        }
    }
}

impl FromStr for EqChoice {
    type Err = ParseChoiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "exhaustive" => Ok(Self::Exhaustive),
            _ => Err(choice_error("equivalence oracle", s, "random|exhaustive")),
        }
    }
}

impl FromStr for VoteMode {
    type Err = ParseChoiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in-session" => Ok(Self::InSession),
            "revote" => Ok(Self::Revote),
            _ => Err(choice_error("vote mode", s, "in-session|revote")),
        }
    }
}

impl fmt::Display for SulTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SulTarget::Sim => f.write_str("sim"),
            SulTarget::Socket(addr) => write!(f, "socket:{addr}"),
        }
    }
}

/// Everything `learn` needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alphabet: AlphabetChoice,
    pub sul: SulTarget,
    pub eq: EqChoice,
    pub random_eq: RandomEqConfig,
    pub vote: VotePolicy,
    pub noise_retx: f64,
    /// Seeds the simulator; the random-word oracle has its own seed.
    pub seed: u64,
    pub learn: LearnConfig,
    pub out: Option<PathBuf>,
    pub stats: Option<PathBuf>,
}

impl RunConfig {
    /// Simulated SUL, random oracle at its defaults seeded with `seed`,
    /// revote policy, no noise.
    pub fn new(alphabet: AlphabetChoice, seed: u64) -> Self {
        Self {
            alphabet,
            sul: SulTarget::Sim,
            eq: EqChoice::Random,
            random_eq: RandomEqConfig::with_seed(seed),
            vote: VotePolicy::revote(),
            noise_retx: 0.0,
            seed,
            learn: LearnConfig::default(),
            out: None,
            stats: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot reach SUL at {addr}: {source}")]
    Connect { addr: String, source: io::Error },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NONDETERMINISM: i32 = 2;
pub const EXIT_SOCKET: i32 = 3;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Connect { .. } => EXIT_SOCKET,
            HarnessError::Learn(LearnError::Oracle(SulError::Io(_))) => EXIT_SOCKET,
            HarnessError::Learn(LearnError::Oracle(SulError::NonDeterministic { .. }))
            | HarnessError::Learn(LearnError::RoundCap { .. })
            | HarnessError::Learn(LearnError::TableNotConverging { .. }) => EXIT_NONDETERMINISM,
            HarnessError::Config(_) => EXIT_NONDETERMINISM,
            _ => EXIT_FAILURE,
        }
    }
}

/// Result of a learning run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub model: MealyMachine,
    pub stats: LearnStats,
    pub vote: VoteStats,
    pub wall_time_ms: u64,
}

/// The stats file contents.
#[derive(Debug, Serialize)]
pub struct StatsReport<'a> {
    #[serde(flatten)]
    pub stats: &'a LearnStats,
    pub wall_time_ms: u64,
    pub model_states: usize,
    pub sul_runs: u64,
    pub sul_symbols: u64,
    pub filter_retries: u64,
    pub config: ConfigSummary,
}

#[derive(Debug, Serialize)]
pub struct ConfigSummary {
    pub alphabet: AlphabetChoice,
    pub sul: String,
    pub eq: EqChoice,
    pub random_eq: RandomEqConfig,
    pub vote: VoteMode,
    pub repeats: usize,
    pub min_lead: usize,
    pub max_rounds: usize,
    pub noise_retx: f64,
    pub seed: u64,
}

impl ConfigSummary {
    pub fn of(cfg: &RunConfig) -> Self {
        Self {
            alphabet: cfg.alphabet,
            sul: cfg.sul.to_string(),
            eq: cfg.eq,
            random_eq: cfg.random_eq,
            vote: cfg.vote.mode,
            repeats: cfg.vote.repeats,
            min_lead: cfg.vote.min_lead,
            max_rounds: cfg.vote.max_rounds,
            noise_retx: cfg.noise_retx,
            seed: cfg.seed,
        }
    }
}

fn equivalence_oracle(cfg: &RunConfig) -> Box<dyn EquivalenceOracle> {
    match cfg.eq {
        EqChoice::Random => Box::new(RandomWordOracle::new(cfg.random_eq)),
        EqChoice::Exhaustive => Box::new(ExhaustiveOracle::new(cfg.alphabet.reference())),
    }
}

/// Opens the configured SUL as an abstract SUL.
pub fn open_sul(cfg: &RunConfig) -> Result<Box<dyn AbstractSul>, HarnessError> {
    if !(0.0..=1.0).contains(&cfg.noise_retx) {
        return Err(HarnessError::Config(format!(
            "noise probability {} is outside [0, 1]",
            cfg.noise_retx
        )));
    }
    Ok(match &cfg.sul {
        SulTarget::Sim => Box::new(Mapper::new(ServerState::with_noise(
            cfg.seed,
            cfg.noise_retx,
        ))),
        SulTarget::Socket(addr) => Box::new(
            SocketSul::connect(addr.as_str(), DEFAULT_READ_TIMEOUT).map_err(|source| {
                HarnessError::Connect {
                    addr: addr.clone(),
                    source,
                }
            })?,
        ),
    })
}

/// Learns with a caller-supplied membership oracle; the configured SUL is
/// not opened.
pub fn learn_with<O: MembershipOracle>(
    oracle: O,
    cfg: &RunConfig,
) -> Result<(MealyMachine, LearnStats), LearnError> {
    let mut eq = equivalence_oracle(cfg);
    learn(oracle, cfg.alphabet.symbols(), eq.as_mut(), cfg.learn)
}

/// Runs the configured learning setup.
pub fn run(cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    let started = Instant::now();
    let sul = open_sul(cfg)?;
    let oracle = VotingOracle::new(sul, cfg.vote.clone())
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut eq = equivalence_oracle(cfg);
    let mut learner = crate::lstar::Learner::new(oracle, cfg.alphabet.symbols(), cfg.learn)?;
    let model = learner.run(eq.as_mut())?;
    let stats = learner.stats().clone();
    let vote = learner.into_oracle().stats();
    Ok(RunReport {
        model,
        stats,
        vote,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// `learn`: runs, writes the model and stats, returns the exit code.
pub fn cmd_learn(cfg: &RunConfig) -> i32 {
    let report = match run(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    info!(
        "learned {} states with {} membership queries, {} equivalence queries in {} ms",
        report.model.num_states(),
        report.stats.membership_queries,
        report.stats.equivalence_queries,
        report.wall_time_ms
    );
    let dot = to_dot(&report.model);
    let stats = StatsReport {
        stats: &report.stats,
        wall_time_ms: report.wall_time_ms,
        model_states: report.model.num_states(),
        sul_runs: report.vote.runs,
        sul_symbols: report.vote.symbols_sent,
        filter_retries: report.vote.filter_retries,
        config: ConfigSummary::of(cfg),
    };
    let json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    let written = match &cfg.out {
        Some(p) => write_file(p, &dot),
        None => {
            print!("{dot}");
            Ok(())
        }
    }
    .and_then(|()| match &cfg.stats {
        Some(p) => write_file(p, &json),
        None => {
            eprintln!("{json}");
            Ok(())
        }
    });
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: DotError },
    #[error("models cannot be compared: {0}")]
    Incomparable(#[from] crate::mealy::MealyError),
}

pub fn load_model(path: &Path) -> Result<MealyMachine, DiffError> {
    let text = fs::read_to_string(path).map_err(|source| DiffError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    from_dot(&text).map_err(|source| DiffError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// The shortest separating word of two model files, or `None` if they are
/// equivalent.
pub fn diff(a: &Path, b: &Path) -> Result<Option<Vec<Symbol>>, DiffError> {
    let a = load_model(a)?;
    let b = load_model(b)?;
    Ok(a.equivalent(&b)?)
}

/// `diff`: 0 when equivalent, 1 with the separating word printed, 2 when a
/// model cannot be loaded or compared.
pub fn cmd_diff(a: &Path, b: &Path) -> i32 {
    match diff(a, b) {
        Ok(None) => {
            println!("equivalent");
            EXIT_OK
        }
        Ok(Some(w)) => {
            println!("{}", display_word(&w));
            EXIT_FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// `serve-sul`: binds and serves until terminated.
pub fn cmd_serve_sul(listen: &str, noise_retx: f64, seed: u64) -> i32 {
    let listener = match std::net::TcpListener::bind(listen) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {listen}: {e}");
            return EXIT_SOCKET;
        }
    };
    match listener.local_addr() {
        Ok(addr) => println!("listening on {addr}"),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOCKET;
        }
    }
    use std::io::Write as _;
    let _ = io::stdout().flush();
    match serve(listener, noise_retx, seed) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_SOCKET
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_choices() {
        assert_eq!("sim".parse::<SulTarget>().unwrap(), SulTarget::Sim);
        assert_eq!(
            "socket:127.0.0.1:9".parse::<SulTarget>().unwrap(),
            SulTarget::Socket("127.0.0.1:9".into())
        );
        assert!("socket:nowhere".parse::<SulTarget>().is_err());
        assert!("tcp".parse::<SulTarget>().is_err());
        assert_eq!(
            "in-session".parse::<VoteMode>().unwrap(),
            VoteMode::InSession
        );
        assert!("extended".parse::<AlphabetChoice>().is_ok());
        assert!("full".parse::<AlphabetChoice>().is_err());
    }

    #[test]
    fn learns_both_alphabets_with_defaults() {
        for alphabet in [AlphabetChoice::Minimal, AlphabetChoice::Extended] {
            let report = run(&RunConfig::new(alphabet, 1)).unwrap();
            assert_eq!(
                report.model.equivalent(&alphabet.reference()).unwrap(),
                None
            );
        }
    }

    #[test]
    fn unreachable_socket_is_exit_3() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let cfg = RunConfig {
            sul: SulTarget::Socket(addr.to_string()),
            ..RunConfig::new(AlphabetChoice::Minimal, 1)
        };
        assert_eq!(run(&cfg).unwrap_err().exit_code(), EXIT_SOCKET);
    }
}
