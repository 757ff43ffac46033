use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use bellsim::bellcore::{self, BellCoefficients};
use bellsim::protocols::{analytic_distribution, run_trials, trace_to_jsonl, TrialSummary};
use bellsim::qstate::StateVector;
use bellsim::stats::{chi_square, ChiSquare};
use bellsim::{verify, BellLabel, RngStream, Scheme};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

const EXIT_INVALID: u8 = 2;
const EXIT_BREACH: u8 = 3;
const MAX_TRIALS: u64 = 10_000_000;
const FIDELITY_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "bellsim",
    version,
    about = "Complete Bell state measurement simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a measurement scheme many times and report the label statistics.
    Run(RunArgs),
    /// Check every invariant group and report pass/fail.
    Verify {
        #[arg(long, env = "BELLSIM_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct RunArgs {
    /// fig1, scheme_a, scheme_b or photonic.
    #[arg(long, value_parser = Scheme::from_str)]
    scheme: Scheme,
    /// Bell label (PhiPlus, PhiMinus, PsiPlus, PsiMinus), four comma-separated
    /// complex Bell coefficients c1..c4 such as `0.6,0,0,0.8i`, or `random`.
    #[arg(long, allow_hyphen_values = true)]
    state: String,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, env = "BELLSIM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    output: Output,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the event trace of trial 0 as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Report `duration_ms` as 0 so that repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Serialize)]
struct Config {
    scheme: Scheme,
    state: String,
    bell_coefficients: [[f64; 2]; 4],
    trials: u64,
    seed: u64,
}

#[derive(Serialize)]
struct Analytic {
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
}

#[derive(Serialize)]
struct Empirical {
    counts: [u64; 4],
    labels: [&'static str; 4],
    frequencies: [f64; 4],
}

#[derive(Serialize)]
struct Ledger {
    ebits_per_trial: u32,
    ebits_total: u64,
    audits_passed: u64,
}

#[derive(Serialize)]
struct Report {
    config: Config,
    analytic: Analytic,
    empirical: Empirical,
    chi_square: ChiSquare,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    ledger: Ledger,
    duration_ms: u64,
}

fn parse_coefficients(text: &str) -> Result<[Complex64; 4], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 Bell coefficients, got {}", parts.len()));
    }
    let mut out = [Complex64::default(); 4];
    for (slot, p) in out.iter_mut().zip(&parts) {
        let z = Complex64::from_str(p)
            .map_err(|_| format!("cannot parse `{p}` as a complex number"))?;
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(format!("coefficient `{p}` is not finite"));
        }
        *slot = z;
    }
    Ok(out)
}

fn parse_state(text: &str, seed: u64) -> Result<StateVector<f64>, String> {
    if text.eq_ignore_ascii_case("random") {
        let mut rng = RngStream::new(seed);
        return Ok(StateVector::random(2, &mut rng));
    }
    if let Ok(label) = BellLabel::from_str(text) {
        return Ok(bellcore::bell_state(label));
    }
    let mut c = parse_coefficients(text)?;
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err("all Bell coefficients are zero".into());
    }
    if (norm - 1.0).abs() > 1e-12 {
        eprintln!("warning: Bell coefficients had norm {norm}; renormalized");
        for z in &mut c {
            *z /= norm;
        }
    }
    let coeffs = BellCoefficients::new(c).map_err(|e| e.to_string())?;
    Ok(bellcore::from_bell(&coeffs))
}

fn breaches(scheme: Scheme, summary: &TrialSummary, chi: &ChiSquare) -> Vec<String> {
    let mut out = Vec::new();
    if summary.ebits_min != scheme.ebit_cost() || summary.ebits_max != scheme.ebit_cost() {
        out.push(format!(
            "ebit consumption {}..{} differs from the scheme cost {}",
            summary.ebits_min,
            summary.ebits_max,
            scheme.ebit_cost()
        ));
    }
    let expected_audits = if scheme.is_locc() {
        summary.trials()
    } else {
        0
    };
    if summary.audits_passed != expected_audits {
        out.push(format!(
            "{} of {} traces passed the LOCC audit",
            summary.audits_passed,
            summary.trials()
        ));
    }
    if let Some(f) = summary.min_fidelity {
        if f < 1.0 - FIDELITY_TOL {
            out.push(format!("filter output fidelity {f} below 1"));
        }
    }
    if chi.p_value == 0.0 {
        out.push("a label with zero analytic probability was observed".into());
    }
    out
}

fn render_csv(r: &Report) -> String {
    let mut s = String::from("label,analytic,count,frequency\n");
    let p = [r.analytic.p1, r.analytic.p2, r.analytic.p3, r.analytic.p4];
    for (i, label) in r.empirical.labels.iter().enumerate() {
        s.push_str(&format!(
            "{label},{},{},{}\n",
            p[i], r.empirical.counts[i], r.empirical.frequencies[i]
        ));
    }
    s
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let start = Instant::now();
    if args.trials == 0 || args.trials > MAX_TRIALS {
        eprintln!("error: --trials must be between 1 and {MAX_TRIALS}");
        return ExitCode::from(EXIT_INVALID);
    }
    let state = match parse_state(&args.state, args.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: invalid state `{}`: {e}", args.state);
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let outcome = (|| -> bellsim::Result<_> {
        let coeffs = bellcore::to_bell(&state)?;
        let analytic = analytic_distribution(&state, args.scheme)?;
        let summary = run_trials(&state, args.scheme, args.trials, args.seed)?;
        Ok((coeffs, analytic, summary))
    })();
    let (coeffs, p, summary) = match outcome {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_BREACH);
        }
    };
    let chi = chi_square(&summary.histogram.counts, &p, 1e-12);
    let problems = breaches(args.scheme, &summary, &chi);

    let report = Report {
        config: Config {
            scheme: args.scheme,
            state: args.state.clone(),
            bell_coefficients: coeffs.coeffs().map(|z| [z.re, z.im]),
            trials: args.trials,
            seed: args.seed,
        },
        analytic: Analytic {
            p1: p[0],
            p2: p[1],
            p3: p[2],
            p4: p[3],
        },
        empirical: Empirical {
            counts: summary.histogram.counts,
            labels: BellLabel::ALL.map(BellLabel::name),
            frequencies: summary.histogram.frequencies(),
        },
        chi_square: chi,
        fidelity: summary.min_fidelity,
        ledger: Ledger {
            ebits_per_trial: summary.ebits_max,
            ebits_total: summary.ebits_max as u64 * summary.trials(),
            audits_passed: summary.audits_passed,
        },
        duration_ms: if args.no_timing {
            0
        } else {
            start.elapsed().as_millis() as u64
        },
    };

    let text = match args.output {
        Output::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Output::Csv => render_csv(&report),
    };
    let written = match &args.report {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    let traced = match &args.trace {
        Some(path) => fs::write(path, trace_to_jsonl(&summary.first_trace))
            .map_err(|e| format!("{}: {e}", path.display())),
        None => Ok(()),
    };
    if let Err(e) = written.and(traced) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }

    if problems.is_empty() {
        ExitCode::SUCCESS
    } else {
        for p in problems {
            eprintln!("invariant breach: {p}");
        }
        ExitCode::from(EXIT_BREACH)
    }
}

fn cmd_verify(seed: u64) -> ExitCode {
    let groups = verify::run_all(seed);
    let mut ok = true;
    for g in &groups {
        let verdict = if g.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:<26} {:>5} checks  {}",
            g.name, g.checks, g.detail
        );
        ok &= g.passed;
        if let Some(ce) = &g.counterexample {
            println!(
                "  counterexample: {}",
                serde_json::json!({ "group": g.name, "counterexample": ce })
            );
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify { seed } => cmd_verify(seed),
    }
}
