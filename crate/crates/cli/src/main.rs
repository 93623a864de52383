//! `qrspace`: quadratic residue spacings and correlations from the command line.

mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CAP: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qrspace", version, about = "Spacings and r-level correlations of squares modulo Q")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "QRSPACE_THREADS")]
    pub threads: Option<usize>,
    /// Reserved; every computation is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on enumerated residues.
    #[arg(long, global = true, default_value_t = qrspace::residues::DEFAULT_RESIDUE_CAP)]
    pub max_residues: u64,
    /// Cap on integer points swept in the scaled box.
    #[arg(long, global = true, default_value_t = qrspace::correlations::DEFAULT_MAX_H_POINTS)]
    pub max_h_points: u128,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Factor an integer or normalize a factored form.
    Factor {
        /// Integer (`360`) or factored form (`2^3*3^2*5`).
        modulus: String,
    },
    /// Count (and optionally list) the squares modulo Q.
    Squares {
        #[arg(long)]
        modulus: String,
        #[arg(long)]
        list: bool,
    },
    /// Histogram and KS distance of normalized gaps between squares.
    Spacings {
        #[arg(long)]
        modulus: String,
        /// Drop the wrap-around gap and normalize by the span.
        #[arg(long)]
        linear: bool,
        #[arg(long, default_value_t = qrspace::spacings::DEFAULT_BINS)]
        bins: usize,
        #[arg(long = "max", default_value_t = qrspace::spacings::DEFAULT_MAX_Y)]
        max_y: f64,
    },
    /// Gap frequencies between consecutive squares mod a prime.
    Davenport {
        #[arg(long)]
        prime: u64,
        #[arg(long, default_value_t = 10)]
        max_gap: u64,
    },
    /// r-level correlation R_r(C, Q).
    Correlate {
        #[arg(long)]
        modulus: String,
        #[arg(short = 'r', default_value_t = 2)]
        r: usize,
        /// Box as `a1:b1,a2:b2,...` with rational endpoints.
        #[arg(long = "box")]
        region: String,
        #[arg(long, default_value = "sum")]
        method: String,
        /// Emit N(h, Q) for every h in the scaled box.
        #[arg(long)]
        per_h: bool,
    },
    /// Degeneracy factor and residual at a prime.
    Delta {
        #[arg(long)]
        prime: u64,
        #[arg(short = 'r', default_value_t = 2)]
        r: usize,
        /// Offsets `h1,h2,...`; omit for the full table mod p.
        #[arg(long, allow_hyphen_values = true)]
        h: Option<String>,
    },
    /// Möbius coefficients over set partitions.
    Lambda {
        #[arg(short = 'r')]
        r: usize,
    },
    /// Lifting defect between p^a and p^b.
    Hensel {
        #[arg(long)]
        prime: u64,
        #[arg(short = 'a')]
        a: u32,
        #[arg(short = 'b')]
        b: u32,
        #[arg(short = 'r', default_value_t = 2)]
        r: usize,
    },
    /// Exponent truncation Q -> Q~.
    Truncate {
        #[arg(long)]
        modulus: String,
        #[arg(long, default_value = "default")]
        policy: String,
        /// Also evaluate the truncation gap (needs -r and --box).
        #[arg(long)]
        gap: bool,
        #[arg(short = 'r', default_value_t = 2)]
        r: usize,
        #[arg(long = "box")]
        region: Option<String>,
    },
    /// Divisor-sum diagnostics for squarefree q.
    Appendix {
        #[arg(long)]
        modulus: String,
        #[arg(long = "K", default_value_t = 2.0)]
        k_const: f64,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
    },
    /// Run the self-check suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

/// A failed run: message plus exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
    /// Output to print before the message, e.g. a failing verify report.
    pub output: Option<String>,
}

impl From<qrspace::Error> for Failure {
    fn from(e: qrspace::Error) -> Self {
        use qrspace::Error as E;
        let code = match e {
            E::CapExceeded { .. } => EXIT_CAP,
            E::MethodDisagreement { .. } => EXIT_VERIFY,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
            output: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let format = cli.global.format;
    match commands::run(&cli.command, &cli.global) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.render(format).as_bytes());
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Some(o) = f.output {
                print!("{o}");
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
