//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p quiclearn --test acceptance -- --nocapture` to see
//! the report.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quiclearn::eq::{EquivalenceOracle, ExhaustiveOracle, RandomEqConfig, RandomWordOracle};
use quiclearn::harness::{run, AlphabetChoice, RunConfig};
use quiclearn::lstar::{learn, LearnConfig, MembershipOracle, SulOracle};
use quiclearn::mapper::{simulated_oracle, FilterSet, Mapper, VoteMode, VotePolicy, VotingOracle};
use quiclearn::mealy::{from_dot, to_dot, MealyMachine};
use quiclearn::sim::reference::{self, CLOSE, FULL_CHLO, GET, INIT_CHLO, ZERO_RTT_CHLO};
use quiclearn::sim::{ConcretePacket, Frame, FrameKind, ServerState, TAG_SCFG};
use quiclearn::sul::{ConcreteSul, MachineSul, SulError};
use quiclearn::symbol::{outputs, word, Output, Symbol, Word};

const BIN: &str = env!("CARGO_BIN_EXE_quiclearn");

// Pinned thresholds.
const RECOVERY_TIME_LIMIT: Duration = Duration::from_secs(1);
const RANDOM_ORACLE_MIN_OK: usize = 95;
const RANDOM_ORACLE_EXT_OK: usize = 90;
const RANDOM_ORACLE_TIME_LIMIT: Duration = Duration::from_secs(30);
const NOISE_P: f64 = 0.2;
const NOISE_MIN_OK: usize = 90;
const VOTE_TRIALS: usize = 10_000;
const VOTE_TOLERANCE: f64 = 0.015;
const SEEDS: u64 = 100;
const RANDOM_MACHINES: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    outcome(false, detail)
}

/// Runs `f(seed)` for every seed on its own thread.
fn par_seeds<T: Send + 'static>(
    seeds: u64,
    f: impl Fn(u64) -> T + Send + Sync + Copy + 'static,
) -> Vec<T> {
    let handles: Vec<_> = (0..seeds).map(|s| thread::spawn(move || f(s))).collect();
    handles.into_iter().map(|h| h.join().unwrap()).collect()
}

/// Runs the CLI, returning (exit code, stdout, elapsed).
fn cli(args: &[&str]) -> (i32, String, Duration) {
    let started = Instant::now();
    let out = Command::new(BIN)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("run quiclearn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        started.elapsed(),
    )
}

fn learn_via_cli(alphabet: &str, dir: &Path) -> Result<(MealyMachine, Duration), String> {
    let out = dir.join(format!("{alphabet}.dot"));
    let stats = dir.join(format!("{alphabet}.json"));
    let (code, _, elapsed) = cli(&[
        "learn",
        "--alphabet",
        alphabet,
        "--sul",
        "sim",
        "--noise-retx",
        "0",
        "--eq",
        "exhaustive",
        "--out",
        out.to_str().unwrap(),
        "--stats",
        stats.to_str().unwrap(),
    ]);
    if code != 0 {
        return Err(format!("learn exited with {code}"));
    }
    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    Ok((from_dot(&text).map_err(|e| e.to_string())?, elapsed))
}

fn recovery(alphabet: &str, reference: &MealyMachine) -> Result<(MealyMachine, String), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (model, elapsed) = learn_via_cli(alphabet, dir.path())?;
    if let Some(w) = model.equivalent(reference).map_err(|e| e.to_string())? {
        return Err(format!("differs from reference on `{w:?}`"));
    }
    let states = model.minimize().num_states();
    if states != 5 {
        return Err(format!("{states} states after minimization"));
    }
    if elapsed >= RECOVERY_TIME_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok((
        model,
        format!("equivalent, 5 states, {} ms", elapsed.as_millis()),
    ))
}

fn criterion_1() -> Outcome {
    match recovery("minimal", &reference::minimal()) {
        Ok((_, d)) => outcome(true, d),
        Err(e) => fail(e),
    }
}

fn criterion_2() -> Outcome {
    let (model, detail) = match recovery("extended", &reference::extended()) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let fresh = model.run(&word([ZERO_RTT_CHLO])).unwrap();
    let stored = model.run(&word([INIT_CHLO, ZERO_RTT_CHLO])).unwrap();
    let ok = fresh == outputs(["REJ"]) && stored == outputs(["REJ", "SHLO"]);
    outcome(
        ok,
        format!(
            "{detail}; 0RTT-CHLO fresh -> {fresh:?}, after REJ -> {:?}",
            stored[1]
        ),
    )
}

fn sweep_ok(alphabet: AlphabetChoice, noise: f64) -> usize {
    par_seeds(SEEDS, move |seed| {
        let cfg = RunConfig {
            noise_retx: noise,
            ..RunConfig::new(alphabet, seed)
        };
        run(&cfg).is_ok_and(|r| r.model.equivalent(&alphabet.reference()).unwrap().is_none())
    })
    .into_iter()
    .filter(|ok| *ok)
    .count()
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let min_ok = sweep_ok(AlphabetChoice::Minimal, 0.0);
    let ext_ok = sweep_ok(AlphabetChoice::Extended, 0.0);
    let elapsed = started.elapsed();
    outcome(
        min_ok >= RANDOM_ORACLE_MIN_OK
            && ext_ok >= RANDOM_ORACLE_EXT_OK
            && elapsed < RANDOM_ORACLE_TIME_LIMIT,
        format!(
            "minimal {min_ok}/100 (need {RANDOM_ORACLE_MIN_OK}), extended {ext_ok}/100 \
             (need {RANDOM_ORACLE_EXT_OK}), {} ms",
            elapsed.as_millis()
        ),
    )
}

/// Probability that at least two of three independent observations are the
/// noisy one.
fn binomial_two_of_three(p: f64) -> f64 {
    3.0 * p * p * (1.0 - p) + p * p * p
}

fn single_vote_error_rate() -> f64 {
    let policy = VotePolicy {
        filters: FilterSet::empty(),
        ..VotePolicy::single_vote(3)
    };
    let mut oracle = simulated_oracle(42, NOISE_P, policy).unwrap();
    // The true answer to FULL-CHLO is SHLO; a retransmission repeats the REJ.
    let w = word([INIT_CHLO, FULL_CHLO]);
    let wrong = (0..VOTE_TRIALS)
        .filter(|_| oracle.query(&w).unwrap()[1] != "SHLO")
        .count();
    wrong as f64 / VOTE_TRIALS as f64
}

fn criterion_4() -> Outcome {
    let expected = binomial_two_of_three(NOISE_P);
    let closed_form = 3.0 * NOISE_P.powi(2) - 2.0 * NOISE_P.powi(3);
    let rate = single_vote_error_rate();
    let vote_ok =
        (rate - expected).abs() <= VOTE_TOLERANCE && (expected - closed_form).abs() < 1e-12;
    let min_ok = sweep_ok(AlphabetChoice::Minimal, NOISE_P);
    let ext_ok = sweep_ok(AlphabetChoice::Extended, NOISE_P);
    outcome(
        vote_ok && min_ok >= NOISE_MIN_OK && ext_ok >= NOISE_MIN_OK,
        format!(
            "revote at p={NOISE_P}: minimal {min_ok}/100, extended {ext_ok}/100 (need \
             {NOISE_MIN_OK}); single-vote error {rate:.4} vs {expected:.4} ± {VOTE_TOLERANCE}"
        ),
    )
}

fn raw_trace(policy: VotePolicy, w: &Word, position: usize) -> Vec<Output> {
    let mut oracle = simulated_oracle(0, 0.0, policy).unwrap();
    oracle.query(w).unwrap();
    oracle.last_trace()[position].raw.clone()
}

fn criterion_5() -> Outcome {
    let mut zero_rtt_repeated = VotePolicy::in_session();
    zero_rtt_repeated.skip_repeat.remove(ZERO_RTT_CHLO);
    let triple = raw_trace(zero_rtt_repeated, &word([ZERO_RTT_CHLO]), 0);
    let triple_ok = triple == outputs(["REJ", "SHLO", "SHLO"]);

    let cfg = RunConfig {
        vote: VotePolicy::in_session(),
        ..RunConfig::new(AlphabetChoice::Extended, 1)
    };
    let converged = run(&cfg)
        .map(|r| {
            r.model
                .equivalent(&reference::extended())
                .unwrap()
                .is_none()
        })
        .unwrap_or(false);

    let mut close_repeated = VotePolicy::in_session();
    close_repeated.skip_repeat.remove(CLOSE);
    let closes = raw_trace(close_repeated, &word([INIT_CHLO, FULL_CHLO, CLOSE]), 2);
    let closes_ok =
        closes.len() == 3 && closes[0] == "CLOSED" && closes[1..].iter().all(|o| *o != "CLOSED");

    outcome(
        triple_ok && converged && closes_ok,
        format!(
            "0RTT-CHLO x3 raw {triple:?}; default skip set learns extended model: {converged}; \
             CLOSE x3 raw {closes:?}"
        ),
    )
}

/// The simulator, except that the first `remaining` initial CHLOs are
/// answered with a stray HTTP response.
struct StrayHttp {
    server: ServerState,
    remaining: usize,
}

impl ConcreteSul for StrayHttp {
    fn reset(&mut self) -> Result<(), SulError> {
        self.server.reset();
        Ok(())
    }

    fn send(&mut self, p: &ConcretePacket) -> Result<Option<ConcretePacket>, SulError> {
        let initial = self.server.phase(p.conn_id).is_none()
            && p.primary()
                .is_some_and(|f| f.kind == FrameKind::Chlo && f.tag(TAG_SCFG).is_none());
        let response = self.server.handle(p);
        if initial && self.remaining > 0 {
            self.remaining -= 1;
            return Ok(Some(ConcretePacket::single(
                p.conn_id,
                Frame::new(FrameKind::HttpResp),
            )));
        }
        Ok(response)
    }
}

fn filtered_answer(mode: VoteMode, stray: usize) -> Result<(Output, Output, usize), SulError> {
    let sul = Mapper::new(StrayHttp {
        server: ServerState::new(0),
        remaining: stray,
    });
    let mut oracle = VotingOracle::new(sul, VotePolicy::for_mode(mode)).unwrap();
    let answer = oracle.query(&word([INIT_CHLO, FULL_CHLO]))?;
    let t = &oracle.last_trace()[0];
    Ok((t.voted.clone(), answer[0].clone(), t.retried.len()))
}

fn criterion_6() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for mode in [VoteMode::InSession, VoteMode::Revote] {
        let policy = VotePolicy::for_mode(mode);
        let budget = policy.retry_budget;
        // Just enough strays to win the vote; the retry then sees the true REJ.
        let strays = match mode {
            VoteMode::InSession => policy.repeats,
            VoteMode::Revote => policy.min_lead.div_ceil(policy.repeats) * policy.repeats,
        };
        let corrected = matches!(
            filtered_answer(mode, strays),
            Ok((ref v, ref a, n)) if *v == "HTTP" && *a == "REJ" && n <= budget
        );
        // Strays outlasting the budget are reported, not absorbed.
        let exhausted = matches!(
            filtered_answer(mode, strays + budget),
            Err(SulError::NonDeterministic { .. })
        );
        ok &= corrected && exhausted;
        details.push(format!(
            "{mode:?}: {strays} strays corrected {corrected}, budget enforced {exhausted}"
        ));
    }
    outcome(ok, details.join("; "))
}

/// Records every counterexample together with the hypothesis it refuted.
struct Recording<E> {
    inner: E,
    seen: Vec<(MealyMachine, Word)>,
}

impl<E: EquivalenceOracle> EquivalenceOracle for Recording<E> {
    fn find_counterexample(
        &mut self,
        sul: &mut dyn MembershipOracle,
        hyp: &MealyMachine,
    ) -> Result<Option<Word>, SulError> {
        let ce = self.inner.find_counterexample(sul, hyp)?;
        if let Some(w) = &ce {
            self.seen.push((hyp.clone(), w.clone()));
        }
        Ok(ce)
    }
}

fn separates(truth: &MealyMachine, seen: &[(MealyMachine, Word)]) -> bool {
    seen.iter()
        .all(|(h, w)| truth.run(w).unwrap() != h.run(w).unwrap())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut recovered = 0;
    let mut counterexamples = 0;
    let mut all_separate = true;
    for i in 0..RANDOM_MACHINES {
        let states = rng.gen_range(1..=8);
        let inputs = rng.gen_range(1..=5);
        let outs = rng.gen_range(1..=3);
        let truth = MealyMachine::random(&mut rng, states, inputs, outs);
        let alphabet = truth.inputs().to_vec();

        let mut exhaustive = Recording {
            inner: ExhaustiveOracle::new(truth.clone()),
            seen: Vec::new(),
        };
        let oracle = SulOracle::new(MachineSul::new(truth.clone()));
        if let Ok((h, _)) = learn(
            oracle,
            alphabet.clone(),
            &mut exhaustive,
            LearnConfig::default(),
        ) {
            recovered += usize::from(h.equivalent(&truth).unwrap().is_none());
        }

        let mut random = Recording {
            inner: RandomWordOracle::new(RandomEqConfig::with_seed(i as u64)),
            seen: Vec::new(),
        };
        let oracle = SulOracle::new(MachineSul::new(truth.clone()));
        let _ = learn(oracle, alphabet, &mut random, LearnConfig::default());

        counterexamples += exhaustive.seen.len() + random.seen.len();
        all_separate &= separates(&truth, &exhaustive.seen) && separates(&truth, &random.seen);
    }
    outcome(
        recovered == RANDOM_MACHINES && all_separate,
        format!(
            "{recovered}/{RANDOM_MACHINES} random machines recovered; {counterexamples} \
             counterexamples, all separating: {all_separate}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut machines = vec![reference::minimal(), reference::extended()];
    for _ in 0..RANDOM_MACHINES {
        let (s, i, o) = (
            rng.gen_range(1..=10),
            rng.gen_range(1..=5),
            rng.gen_range(1..=4),
        );
        machines.push(MealyMachine::random(&mut rng, s, i, o));
    }
    let round_trips = machines
        .iter()
        .filter(|m| from_dot(&to_dot(m)).is_ok_and(|back| back.equivalent(m).ok() == Some(None)))
        .count();

    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    let m = reference::minimal();
    let s2 = m.state_by_name("S2").unwrap();
    let mutated = m
        .with_output(s2, &Symbol::new(GET), Output::new("PRST"))
        .unwrap();
    std::fs::write(path("a.dot"), to_dot(&m)).unwrap();
    std::fs::write(path("b.dot"), to_dot(&m)).unwrap();
    std::fs::write(path("mutated.dot"), to_dot(&mutated)).unwrap();
    std::fs::write(path("garbage.txt"), "this is not a graph").unwrap();
    let arg = |name: &str| path(name).to_str().unwrap().to_string();

    let (same, same_out, _) = cli(&["diff", &arg("a.dot"), &arg("b.dot")]);
    let (differ, differ_out, _) = cli(&["diff", &arg("a.dot"), &arg("mutated.dot")]);
    let (garbage, _, _) = cli(&["diff", &arg("a.dot"), &arg("garbage.txt")]);
    let separating = differ_out.trim() == format!("{INIT_CHLO} {FULL_CHLO} {GET}");
    let ok = round_trips == machines.len()
        && (same, same_out.trim()) == (0, "equivalent")
        && differ == 1
        && separating
        && garbage == 2;
    outcome(
        ok,
        format!(
            "{round_trips}/{} round trips; diff exits {same}/{differ}/{garbage}, separating word `{}`",
            machines.len(),
            differ_out.trim()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut child = Command::new(BIN)
        .args(["serve-sul", "--listen", "127.0.0.1:0", "--noise-retx", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .expect("spawn serve-sul");
    let result = (|| -> Result<Vec<String>, String> {
        let mut banner = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut banner)
            .map_err(|e| e.to_string())?;
        let addr = banner
            .trim()
            .strip_prefix("listening on ")
            .ok_or_else(|| format!("unexpected banner `{}`", banner.trim()))?;
        let stream = TcpStream::connect(addr).map_err(|e| e.to_string())?;
        stream
            .set_read_timeout(Some(Duration::from_secs(5)))
            .map_err(|e| e.to_string())?;
        let mut writer = stream.try_clone().map_err(|e| e.to_string())?;
        let mut reader = BufReader::new(stream);
        let mut replies = Vec::new();
        for line in ["RESET", INIT_CHLO, FULL_CHLO, GET, GET] {
            writeln!(writer, "{line}").map_err(|e| e.to_string())?;
            let mut reply = String::new();
            reader.read_line(&mut reply).map_err(|e| e.to_string())?;
            replies.push(reply.trim_end().to_string());
        }
        Ok(replies)
    })();
    let _ = child.kill();
    let _ = child.wait();
    match result {
        Ok(replies) => outcome(
            replies == ["OK", "REJ", "SHLO", "HTTP", "EXP"],
            format!("{replies:?}"),
        ),
        Err(e) => fail(e),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("model recovery, minimal alphabet", criterion_1),
        ("model recovery, extended alphabet", criterion_2),
        ("random-oracle adequacy", criterion_3),
        ("noise robustness", criterion_4),
        ("anomaly reproduction", criterion_5),
        ("filter mechanics", criterion_6),
        ("oracle soundness and L* generality", criterion_7),
        ("DOT round trip and diff", criterion_8),
        ("socket transcript", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "criterion {}: {} - {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
