use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quiclearn::eq::RandomEqConfig;
use quiclearn::harness::{
    cmd_diff, cmd_learn, cmd_serve_sul, AlphabetChoice, EqChoice, RunConfig, SulTarget,
};
use quiclearn::lstar::LearnConfig;
use quiclearn::mapper::{FilterSet, VoteMode, VotePolicy};

/// Learn Mealy-machine models of a QUIC handshake server.
#[derive(Debug, Parser)]
#[command(name = "quiclearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a model and write it as DOT.
    Learn(LearnArgs),
    /// Expose the simulated server over the line protocol.
    ServeSul(ServeArgs),
    /// Compare two DOT models.
    Diff { model_a: PathBuf, model_b: PathBuf },
}

#[derive(Debug, Args)]
struct LearnArgs {
    /// minimal or extended
    #[arg(long, env = "QUICLEARN_ALPHABET", default_value = "minimal")]
    alphabet: AlphabetChoice,
    /// sim or socket:<host:port>
    #[arg(long, env = "QUICLEARN_SUL", default_value = "sim")]
    sul: SulTarget,
    /// random, or exhaustive against the reference model
    #[arg(long, env = "QUICLEARN_EQ", default_value = "random")]
    eq: EqChoice,
    #[arg(long, env = "QUICLEARN_EQ_QUERIES", default_value_t = 100)]
    eq_queries: usize,
    #[arg(long, env = "QUICLEARN_MIN_LEN", default_value_t = 5)]
    min_len: usize,
    #[arg(long, env = "QUICLEARN_MAX_LEN", default_value_t = 10)]
    max_len: usize,
    /// Sends per symbol (in-session) or runs per round (revote); odd
    #[arg(long, env = "QUICLEARN_REPEATS", default_value_t = 3)]
    repeats: usize,
    /// in-session or revote
    #[arg(long, env = "QUICLEARN_VOTE", default_value = "revote")]
    vote: VoteMode,
    /// Revote: required lead of the winning output over the runner-up
    #[arg(long, env = "QUICLEARN_VOTE_LEAD")]
    vote_lead: Option<usize>,
    /// Revote: maximum rounds per word
    #[arg(long, env = "QUICLEARN_VOTE_ROUNDS")]
    vote_rounds: Option<usize>,
    /// Probability that the simulator retransmits its previous response
    #[arg(long, env = "QUICLEARN_NOISE_RETX", default_value_t = 0.0)]
    noise_retx: f64,
    #[arg(long, env = "QUICLEARN_SEED", default_value_t = 0)]
    seed: u64,
    /// Model output path; stdout if absent
    #[arg(long, env = "QUICLEARN_OUT")]
    out: Option<PathBuf>,
    /// Stats JSON path; stderr if absent
    #[arg(long, env = "QUICLEARN_STATS")]
    stats: Option<PathBuf>,
    /// Response filter rules; the built-in INIT-CHLO/HTTP rule if absent
    #[arg(long, env = "QUICLEARN_FILTERS")]
    filters: Option<PathBuf>,
    /// Counterexamples processed before giving up
    #[arg(long, env = "QUICLEARN_MAX_REFINEMENTS", default_value_t = LearnConfig::default().max_refinements)]
    max_refinements: usize,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "QUICLEARN_LISTEN", default_value = "127.0.0.1:4433")]
    listen: String,
    #[arg(long, env = "QUICLEARN_NOISE_RETX", default_value_t = 0.0)]
    noise_retx: f64,
    #[arg(long, env = "QUICLEARN_SEED", default_value_t = 0)]
    seed: u64,
}

fn run_config(args: LearnArgs) -> Result<RunConfig, String> {
    let random_eq = RandomEqConfig::new(args.eq_queries, args.min_len, args.max_len, args.seed)
        .map_err(|e| e.to_string())?;
    let mut vote = VotePolicy {
        repeats: args.repeats,
        ..VotePolicy::for_mode(args.vote)
    };
    if let Some(lead) = args.vote_lead {
        vote.min_lead = lead;
    }
    if let Some(rounds) = args.vote_rounds {
        vote.max_rounds = rounds;
    }
    if let Some(path) = &args.filters {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        vote.filters = text
            .parse::<FilterSet>()
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    vote.validate().map_err(|e| e.to_string())?;
    Ok(RunConfig {
        alphabet: args.alphabet,
        sul: args.sul,
        eq: args.eq,
        random_eq,
        vote,
        noise_retx: args.noise_retx,
        seed: args.seed,
        learn: LearnConfig {
            max_refinements: args.max_refinements,
            ..LearnConfig::default()
        },
        out: args.out,
        stats: args.stats,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Cli::parse().command {
        Command::Learn(args) => match run_config(args) {
            Ok(cfg) => cmd_learn(&cfg),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::ServeSul(args) => cmd_serve_sul(&args.listen, args.noise_retx, args.seed),
        Command::Diff { model_a, model_b } => cmd_diff(&model_a, &model_b),
    };
    ExitCode::from(code as u8)
}
