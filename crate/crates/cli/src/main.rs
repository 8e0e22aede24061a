//! `fgcert`: certificates, extensions, falsification, GNS data and Bell bounds
//! from the command line. Exit status 0 means success, 2 a negative answer
//! (not certified, falsified, failed verification) and 1 an error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fgcert::acceptance;
use fgcert::bell::{inner_bound, outer_bound, outer_instance, BellFunctional, Level, SeeSawOptions};
use fgcert::certify::{
    certify_sos, certify_trace, default_support, falsify, sos_instance, trace_instance, verify_sos, verify_trace,
    Certification, FalsifyMode, DEFAULT_TOL,
};
use fgcert::denselin::{complete_block, psd_floor};
use fgcert::extendpt::extend_to;
use fgcert::formats::{
    self, BlocksJson, CertificateJson, CompletionJson, ElementJson, FalsifyJson, GnsJson, InnerJson, OuterJson,
    ScenarioJson,
};
use fgcert::gnsrep::gns;
use fgcert::grounded::GroundedSet;
use fgcert::parallel::Execution;
use fgcert::sdp::{SdpInstance, DEFAULT_OPTIMIZATION_TOL};
use fgcert::words::{GroupSpec, Word};
use fgcert::Error;

#[derive(Parser, Debug)]
#[command(name = "fgcert", version, about = "Positivity certificates for free group algebras and Bell bounds")]
struct Cli {
    /// Include wall-clock time in the report (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    /// Evaluate sampling and restarts on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a sum-of-squares certificate of f + ε·1.
    Certify(CertifyArgs),
    /// Check a certificate symbolically against an element.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Search for a certificate modulo commutators (tracial positivity).
    CertifyTrace(CertifyArgs),
    /// Extend a positive-type function given on E⁻¹E to a larger grounded set.
    Extend {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated words of the target grounded set.
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complete a 3×3 block pattern with unknown corner.
    Complete {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Look for finite representations on which f fails to be positive.
    Falsify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Operator)]
        mode: Mode,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated GNS data of a positive-type function.
    Gns {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upper bound from the moment relaxation (CHSH when no input is given).
    BellOuter {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "1ab")]
        level: String,
        #[arg(long)]
        dump_sdp: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// See-saw lower bound over finite-dimensional strategies.
    BellInner {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = fgcert::bell::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = fgcert::bell::DEFAULT_ITERATIONS)]
        iterations: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Selftest,
}

#[derive(clap::Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated words of E; defaults to a ball covering the support.
    #[arg(long)]
    support: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the Gram-matrix SDP instance as JSON.
    #[arg(long)]
    dump_sdp: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Operator,
    Trace,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    inputs_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    status: &'static str,
    results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

/// Successful run or negative answer; errors travel separately.
enum Answer {
    Yes,
    No,
}

struct Outcome {
    answer: Answer,
    seed: Option<u64>,
    results: Value,
}

impl Outcome {
    fn yes(results: Value) -> Self {
        Outcome { answer: Answer::Yes, seed: None, results }
    }

    fn no(results: Value) -> Self {
        Outcome { answer: Answer::No, seed: None, results }
    }

    fn seeded(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    fn new(command: &str, args: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update([0]);
        hasher.update(args.as_bytes());
        Inputs { hasher }
    }

    fn read(&mut self, path: &Path) -> Result<String, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        self.hasher.update([0]);
        self.hasher.update(text.as_bytes());
        Ok(text)
    }

    fn parse<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T, Error> {
        let text = self.read(path)?;
        formats::parse(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    fn digest(self) -> String {
        self.hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = formats::to_string(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn maybe_write<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<(), Error> {
    match path {
        Some(p) => write_json(p, value),
        None => Ok(()),
    }
}

fn parse_set(spec: GroupSpec, list: &str) -> Result<GroundedSet, Error> {
    let words = list.split(',').map(|w| Word::parse(spec, w)).collect::<Result<Vec<_>, _>>()?;
    GroundedSet::new(spec, words)
}

fn synthesize_seed() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0)
}

fn functional(inputs: &mut Inputs, input: &Option<PathBuf>) -> Result<BellFunctional, Error> {
    match input {
        Some(p) => inputs.parse::<ScenarioJson>(p)?.to_functional(),
        None => Ok(BellFunctional::chsh()),
    }
}

fn run_certify(args: &CertifyArgs, trace: bool, inputs: &mut Inputs) -> Result<Outcome, Error> {
    let f = inputs.parse::<ElementJson>(&args.input)?.to_element()?;
    let set = match &args.support {
        Some(list) => parse_set(f.spec(), list)?,
        None => default_support(&f)?,
    };
    if let Some(path) = &args.dump_sdp {
        let inst: SdpInstance =
            if trace { trace_instance(&f, &set, args.epsilon)? } else { sos_instance(&f, &set, args.epsilon)? };
        write_json(path, &inst)?;
    }
    let cert = if trace {
        match certify_trace(&f, &set, args.epsilon, args.tol)? {
            Certification::Certified(c) => Ok(CertificateJson::from_trace(&c)),
            Certification::NotCertified(nc) => Err(nc),
        }
    } else {
        match certify_sos(&f, &set, args.epsilon, args.tol)? {
            Certification::Certified(c) => Ok(CertificateJson::from_sos(&c)),
            Certification::NotCertified(nc) => Err(nc),
        }
    };
    match cert {
        Ok(c) => {
            maybe_write(&args.out, &c)?;
            Ok(Outcome::yes(json!({
                "certified": true,
                "residual": c.residual,
                "factors": c.factors.len(),
                "support": c.support,
                "epsilon": c.epsilon,
            })))
        }
        Err(nc) => Ok(Outcome::no(json!({
            "certified": false,
            "support": formats::words_to_strings(set.elements()),
            "solver_iterations": nc.solver.iterations,
            "solver_residual": nc.solver.residual,
            "solver_psd_floor": nc.solver.psd_floor,
            "factor_residual": nc.residual,
        }))),
    }
}

fn run(cli: &Cli, inputs: &mut Inputs) -> Result<Outcome, Error> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match &cli.command {
        Command::Certify(args) => run_certify(args, false, inputs),
        Command::CertifyTrace(args) => run_certify(args, true, inputs),
        Command::Verify { cert, input, tol } => {
            let cert = inputs.parse::<CertificateJson>(cert)?;
            let f = inputs.parse::<ElementJson>(input)?.to_element()?;
            let residual = if cert.is_trace() { verify_trace(&cert.to_trace()?, &f)? } else { verify_sos(&cert.to_sos()?, &f)? };
            let report = json!({ "residual": residual, "tol": tol, "valid": residual <= *tol, "trace": cert.is_trace() });
            Ok(if residual <= *tol { Outcome::yes(report) } else { Outcome::no(report) })
        }
        Command::Extend { input, target, out } => {
            let g = inputs.parse::<ElementJson>(input)?.to_positive_type()?;
            let target = parse_set(g.set().spec(), target)?;
            let extended = extend_to(&g, &target)?;
            let doc = ElementJson::from_positive_type(&extended);
            maybe_write(out, &doc)?;
            Ok(Outcome::yes(json!({
                "domain": doc.domain,
                "values": extended.values().len(),
                "psd_floor": psd_floor(&extended.toeplitz())?,
            })))
        }
        Command::Complete { input, out } => {
            let blocks = inputs.parse::<BlocksJson>(input)?.to_blocks()?;
            let c = complete_block(&blocks)?;
            let doc = CompletionJson::new(&c, psd_floor(&c.full)?);
            maybe_write(out, &doc)?;
            Ok(Outcome::yes(serde_json::to_value(&doc)?))
        }
        Command::Falsify { input, mode, dims, samples, seed, tol, out } => {
            let f = inputs.parse::<ElementJson>(input)?.to_element()?;
            let seed = seed.unwrap_or_else(synthesize_seed);
            let mode = match mode {
                Mode::Operator => FalsifyMode::Operator,
                Mode::Trace => FalsifyMode::Trace,
            };
            let report = falsify(&f, mode, dims, *samples, seed, exec)?;
            let doc = FalsifyJson::new(&report);
            maybe_write(out, &doc)?;
            let results = json!({
                "falsified": report.falsifies(*tol),
                "mode": doc.mode,
                "worst": report.worst,
                "witness_sample": report.witness_sample,
                "samples": report.samples,
                "dims": dims,
            });
            let outcome = if report.falsifies(*tol) { Outcome::no(results) } else { Outcome::yes(results) };
            Ok(outcome.seeded(seed))
        }
        Command::Gns { input, out } => {
            let g = inputs.parse::<ElementJson>(input)?.to_positive_type()?;
            let data = gns(&g)?;
            let doc = GnsJson::new(&data);
            maybe_write(out, &doc)?;
            Ok(Outcome::yes(json!({
                "rank": data.rank,
                "eigenvalues": data.eigenvalues,
                "state_recovery_defect": data.state_recovery_defect(&g),
                "orthonormality_defect": data.orthonormality_defect(),
                "gns": doc,
            })))
        }
        Command::BellOuter { input, level, dump_sdp, out } => {
            let f = functional(inputs, input)?;
            let level: Level = level.parse()?;
            if let Some(path) = dump_sdp {
                write_json(path, &outer_instance(&f, level)?)?;
            }
            let bound = outer_bound(&f, level)?;
            let doc = OuterJson::new(&bound);
            maybe_write(out, &doc)?;
            let mut results = serde_json::to_value(&doc)?;
            results["tol"] = json!(DEFAULT_OPTIMIZATION_TOL);
            Ok(Outcome::yes(results))
        }
        Command::BellInner { input, dim, restarts, iterations, seed, out } => {
            let f = functional(inputs, input)?;
            let seed = seed.unwrap_or_else(synthesize_seed);
            let opts = SeeSawOptions { dim: *dim, restarts: *restarts, iterations: *iterations, seed };
            let bound = inner_bound(&f, &opts, exec)?;
            let doc = InnerJson::new(&bound);
            maybe_write(out, &doc)?;
            Ok(Outcome::yes(serde_json::to_value(&doc)?).seeded(seed))
        }
        Command::Selftest => {
            let outcomes = acceptance::run_all(exec);
            for o in &outcomes {
                eprintln!("{o}");
            }
            let passed = outcomes.iter().filter(|o| o.passed).count();
            let list: Vec<Value> = outcomes
                .iter()
                .map(|o| json!({ "id": o.id, "name": o.name, "passed": o.passed, "detail": o.detail }))
                .collect();
            let results = json!({ "passed": passed, "total": outcomes.len(), "criteria": list });
            if passed == outcomes.len() {
                Ok(Outcome::yes(results))
            } else {
                Err(Error::InvalidInput(format!("{} of {} acceptance criteria failed", outcomes.len() - passed, outcomes.len())))
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Certify(_) => "certify",
        Command::Verify { .. } => "verify",
        Command::CertifyTrace(_) => "certify-trace",
        Command::Extend { .. } => "extend",
        Command::Complete { .. } => "complete",
        Command::Falsify { .. } => "falsify",
        Command::Gns { .. } => "gns",
        Command::BellOuter { .. } => "bell-outer",
        Command::BellInner { .. } => "bell-inner",
        Command::Selftest => "selftest",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let name = command_name(&cli.command);
    let mut inputs = Inputs::new(name, &format!("{:?}", cli.command));
    match run(&cli, &mut inputs) {
        Ok(outcome) => {
            let (status, code) = match outcome.answer {
                Answer::Yes => ("ok", ExitCode::SUCCESS),
                Answer::No => ("negative", ExitCode::from(2)),
            };
            let report = RunReport {
                command: name,
                inputs_digest: inputs.digest(),
                seed: outcome.seed,
                status,
                results: outcome.results,
                wall_time_seconds: cli.timing.then(|| start.elapsed().as_secs_f64()),
            };
            let text = match serde_json::to_string_pretty(&report) {
                Ok(text) => text,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            // A closed pipe on stdout is not worth a panic.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
