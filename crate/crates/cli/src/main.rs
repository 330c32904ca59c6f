use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qdc_core::analysis::{
    capacity_bound, communication_comparison, gram_report, receiver_leakage_with_cap,
};
use qdc_core::hilbert::{superpose, MixedRadixState, DEFAULT_AMPLITUDE_CAP};
use qdc_core::linalg::ONE;
use qdc_core::protocol::{
    canonical_labels, canonical_state, canonical_word, channel_state_with_cap, encode,
    message_count, MessageWord, Sign,
};
use qdc_core::simulation::{
    replay, run_batch, run_with_cap, BatchLimits, Decoded, PartyRoster, ReplayVerdict, RunOptions,
    Transcript,
};
use qdc_core::QdcError;

const CAP_ENV: &str = "QDC_AMPLITUDE_CAP";
const EXACT_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "qdc",
    version,
    about = "Multi-receiver qutrit-qubit dense coding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol once and print its transcript.
    Run {
        #[arg(long)]
        n: usize,
        /// Components `a1,b,a2,...` or a single message index.
        #[arg(long)]
        message: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Party grouping such as `1,2;3`. Default: one party per slot.
        #[arg(long)]
        group: Option<String>,
        /// Slots that withhold their round-2 sign, e.g. `2,3`.
        #[arg(long)]
        abstain: Option<String>,
        /// Abstaining slots also withhold their round-1 shift.
        #[arg(long)]
        withhold_round1: bool,
        /// Round-1 measurement order, e.g. `3,1,2`.
        #[arg(long)]
        round1_order: Option<String>,
        /// Also write the transcript JSON to this file.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check encoder output against the state table and orthonormality.
    VerifyStates {
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Messages to spot-check when N > 2.
        #[arg(long, default_value_t = 50)]
        sample: usize,
        #[arg(long, hide = true)]
        inject_sign_flip: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run every message on seeds `0..seeds`.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Capacity bound and message count.
    Capacity {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// What one receiver's pair reveals before any broadcast.
    Leak {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        slot: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Communication ledger of multi- and single-receiver groupings.
    Compare {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Re-run a saved transcript and compare every event.
    Replay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

enum Failure {
    Lib(QdcError),
    Usage(String),
    Internal(String),
}

impl From<QdcError> for Failure {
    fn from(e: QdcError) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 1,
            Failure::Lib(e) => match e {
                QdcError::Argument(_)
                | QdcError::Dimension(_)
                | QdcError::MeasurementSet(_)
                | QdcError::Format(_) => 2,
                QdcError::ProtocolViolation(_) => 3,
                QdcError::CapacityLimit(_) => 4,
                QdcError::DegenerateState(_) => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::Internal(m) => m.clone(),
        }
    }
}

type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("qdc: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(command: Command) -> CmdResult {
    let cap = amplitude_cap()?;
    match command {
        Command::Run {
            n,
            message,
            seed,
            group,
            abstain,
            withhold_round1,
            round1_order,
            output,
            format,
        } => {
            let message = parse_message(n, &message)?;
            let mut options = match group {
                Some(g) => {
                    RunOptions::with_roster(n, PartyRoster::from_groups(n, parse_groups(&g)?)?)
                }
                None => RunOptions::standard(n),
            };
            if let Some(a) = abstain {
                options.abstaining = parse_list(&a)?;
            }
            if let Some(o) = round1_order {
                options.round1_order = parse_list(&o)?;
            }
            options.withhold_round1 = withhold_round1;
            cmd_run(n, &message, seed, &options, cap, output, format)
        }
        Command::VerifyStates {
            n,
            sample,
            inject_sign_flip,
            format,
        } => cmd_verify_states(n, sample, inject_sign_flip, cap, format),
        Command::Enumerate { n, seeds, format } => cmd_enumerate(n, seeds, cap, format),
        Command::Capacity { n, format } => {
            let r = capacity_bound(n)?;
            emit(format, "qdc-capacity/1", &r, || r.to_text())?;
            Ok(true)
        }
        Command::Leak { n, slot, format } => {
            let r = receiver_leakage_with_cap(n, slot, cap)?;
            emit(format, "qdc-leakage/1", &r, || r.to_text())?;
            Ok(true)
        }
        Command::Compare { n, format } => {
            channel_state_with_cap(n, cap)?;
            let r = communication_comparison(n)?;
            emit(format, "qdc-comparison/1", &r, || r.to_text())?;
            Ok(true)
        }
        Command::Replay { input, format } => cmd_replay(&input, format),
    }
}

fn amplitude_cap() -> Result<usize, Failure> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{CAP_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(DEFAULT_AMPLITUDE_CAP),
    }
}

fn parse_list(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{s:?} in {text:?} is not a number")))
        })
        .collect()
}

fn parse_groups(text: &str) -> Result<Vec<Vec<usize>>, Failure> {
    text.split(';').map(parse_list).collect()
}

fn parse_message(n: usize, text: &str) -> Result<MessageWord, Failure> {
    let word = if text.contains(',') {
        let components = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("{s:?} is not a digit")))
            })
            .collect::<Result<Vec<u8>, _>>()?;
        MessageWord::from_components(&components)?
    } else {
        let index = text
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{text:?} is neither components nor an index")))?;
        MessageWord::from_index(n, index)?
    };
    if word.n_receivers() != n {
        return Err(Failure::Usage(format!(
            "message {word} has {} receivers, --n is {n}",
            word.n_receivers()
        )));
    }
    Ok(word)
}

fn with_schema<T: serde::Serialize>(schema: &str, value: &T) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(value).map_err(|e| Failure::Internal(e.to_string()))?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("schema_version".into(), json!(schema));
            Ok(v)
        }
        None => Ok(json!({ "schema_version": schema, "data": v })),
    }
}

fn emit<T: serde::Serialize>(
    format: Format,
    schema: &str,
    value: &T,
    text: impl FnOnce() -> String,
) -> Result<(), Failure> {
    match format {
        Format::Json => println!("{}", pretty(&with_schema(schema, value)?)?),
        Format::Text => print!("{}", text()),
    }
    Ok(())
}

fn pretty(v: &Value) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::Internal(e.to_string()))
}

fn cmd_run(
    n: usize,
    message: &MessageWord,
    seed: u64,
    options: &RunOptions,
    cap: usize,
    output: Option<PathBuf>,
    format: Format,
) -> CmdResult {
    let t = run_with_cap(n, message, seed, options, cap)?.transcript;
    eprintln!("message {message} = index {}", message.index());
    if let Some(path) = output {
        fs::write(&path, t.to_json_pretty() + "\n")
            .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))?;
    }
    match format {
        Format::Json => println!("{}", t.to_json_pretty()),
        Format::Text => print!("{}", run_text(&t)),
    }
    Ok(match &t.decoded {
        Decoded::Message { message: m } => m == message,
        Decoded::Undecodable { .. } => !options.abstaining.is_empty(),
    })
}

fn run_text(t: &Transcript) -> String {
    let mut out = format!("receivers {}  seed {}\n", t.n, t.seed);
    out += &format!("message   {} (index {})\n", t.message, t.message.index());
    let r1: Vec<String> = t
        .round1_outcomes()
        .iter()
        .map(|(s, p)| format!("{s}:P{p}"))
        .collect();
    out += &format!("round 1   {}\n", r1.join(" "));
    let signs: String = t
        .sigmas()
        .iter()
        .map(|&s| if s == 1 { '+' } else { '-' })
        .collect();
    out += &format!("round 2   {signs}\n");
    out += &match &t.decoded {
        Decoded::Message { message } => {
            format!("decoded   {} (index {})\n", message, message.index())
        }
        Decoded::Undecodable { .. } => "decoded   undecodable\n".to_string(),
    };
    let l = &t.ledger;
    out += &format!(
        "ledger    decoded {:.6} bits, broadcast {:.6} bits in {} events\n",
        l.decoded_bits,
        l.broadcast_bits(),
        l.broadcast_events
    );
    out
}

/// Closed form `(|a⟩|0…0⟩ + (−1)^b |a⊕1⟩|1…1⟩)/√2`.
fn closed_form(m: &MessageWord, reference: &MixedRadixState) -> Result<MixedRadixState, QdcError> {
    let n = m.n_receivers();
    let shifts = m.shifts();
    let mut low: Vec<usize> = shifts.iter().map(|&a| a as usize).collect();
    low.extend(std::iter::repeat_n(0, n));
    let mut high: Vec<usize> = shifts.iter().map(|&a| (a as usize + 1) % 3).collect();
    high.extend(std::iter::repeat_n(1, n));
    let sign = if m.sign() == 0 { ONE } else { -ONE };
    superpose(reference.layout(), &[(ONE, low), (sign, high)])
}

fn cmd_verify_states(
    n: usize,
    sample: usize,
    flip: Option<usize>,
    cap: usize,
    format: Format,
) -> CmdResult {
    let channel = channel_state_with_cap(n, cap)?;
    let mut names = vec![];
    let mut reference = vec![];
    let mut encoded = vec![];
    if n == 2 {
        for (k, sign) in canonical_labels() {
            let shown = if flip == Some(k) && sign == Sign::Plus {
                Sign::Minus
            } else {
                sign
            };
            names.push(format!("mu{k}{}", sign.symbol()));
            reference.push(canonical_state(k, shown)?);
            encoded.push(encode(&channel, &canonical_word(k, sign)?)?);
        }
    } else {
        if flip.is_some() {
            return Err(Failure::Usage("--inject-sign-flip needs --n 2".into()));
        }
        let count = message_count(n)?;
        let take = (sample as u64).clamp(1, count);
        for i in 0..take {
            let m = MessageWord::from_index(n, i * count / take)?;
            let e = encode(&channel, &m)?;
            reference.push(closed_form(&m, &e)?);
            names.push(m.to_string());
            encoded.push(e);
        }
    }
    let mut encode_dev: f64 = 0.0;
    let mut worst_state = 0;
    for (i, (e, r)) in encoded.iter().zip(&reference).enumerate() {
        let d = e.max_deviation(r)?;
        if d > encode_dev {
            encode_dev = d;
            worst_state = i;
        }
    }
    let gram = gram_report(&reference)?;
    let ok = encode_dev < EXACT_TOL && gram.max_deviation() < EXACT_TOL;
    let offending = gram
        .worst_pair
        .filter(|_| gram.max_off_diagonal >= EXACT_TOL);
    match format {
        Format::Json => {
            let v = json!({
                "schema_version": "qdc-verify-states/1",
                "n": n,
                "states": names.len(),
                "ok": ok,
                "max_encode_deviation": encode_dev,
                "max_gram_deviation": gram.max_deviation(),
                "offending_pair": offending.map(|(i, j)| [&names[i], &names[j]]),
            });
            println!("{}", pretty(&v)?);
        }
        Format::Text => {
            if ok {
                println!("{} states OK, max deviation < 1e-12", names.len());
            } else {
                println!("FAIL");
            }
            println!("encode vs reference  {encode_dev:.6e}");
            println!("gram vs identity     {:.6e}", gram.max_deviation());
            if encode_dev >= EXACT_TOL {
                println!("encoder disagrees on {}", names[worst_state]);
            }
            if let Some((i, j)) = offending {
                println!(
                    "offending pair {} {} overlap {:.6}",
                    names[i], names[j], gram.max_off_diagonal
                );
            }
        }
    }
    Ok(ok)
}

fn cmd_enumerate(n: usize, seeds: u64, cap: usize, format: Format) -> CmdResult {
    channel_state_with_cap(n, cap)?;
    let messages: Vec<MessageWord> = MessageWord::all(n)?.collect();
    let limits = BatchLimits {
        amplitude_cap: cap,
        ..BatchLimits::default()
    };
    let r = run_batch(n, &messages, seeds, &PartyRoster::one_per_slot(n), limits)?;
    emit(format, "qdc-enumerate/1", &r, || {
        let mut out = format!("receivers {n}  seeds {seeds}\n");
        out += &format!("decoded      {}/{}\n", r.decoded_correctly, r.runs);
        out += &format!("parity law   {}/{}\n", r.parity_law_held, r.runs);
        out += &format!("round 1 kept {}/{}\n", r.round1_non_disturbing, r.runs);
        out += &format!(
            "max |p-1| {:.6e}  max |F-1| {:.6e}\n",
            r.max_round1_probability_deviation, r.max_round1_fidelity_deviation
        );
        for v in &r.violations {
            out += &format!("violation: {v}\n");
        }
        out
    })?;
    Ok(r.all_ok())
}

fn cmd_replay(input: &PathBuf, format: Format) -> CmdResult {
    let text = fs::read_to_string(input)
        .map_err(|e| Failure::Usage(format!("reading {}: {e}", input.display())))?;
    let transcript = Transcript::from_json(&text)?;
    let verdict = replay(&transcript)?;
    let matched = verdict == ReplayVerdict::Match;
    match format {
        Format::Json => println!("{}", pretty(&with_schema("qdc-replay/1", &verdict)?)?),
        Format::Text => match &verdict {
            ReplayVerdict::Match => println!("replay matches: {} events", transcript.events.len()),
            ReplayVerdict::Mismatch {
                location,
                recorded,
                recomputed,
            } => {
                println!("replay diverges at {location:?}");
                println!("recorded   {recorded}");
                println!("recomputed {recomputed}");
            }
        },
    }
    Ok(matched)
}
