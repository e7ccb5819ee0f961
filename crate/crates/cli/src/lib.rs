//! Front end for the `zml` binary: argument parsing and the three subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use zml_core::harness::{self, RunConfig};
use zml_core::suites::{self, Suite};
use zml_core::zeta_core::find_zeros;
use zml_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "zml", version, about = "Mollifier experiments for the Riemann zeta function")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "ZML_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an invariant suite and print one line per check.
    Check {
        /// functional-equation, translation, tanh, selberg, runge, harness or all
        #[arg(value_name = "SUITE", conflicts_with = "suite")]
        positional: Option<Suite>,
        #[arg(long, env = "ZML_SUITE")]
        suite: Option<Suite>,
    },
    /// Run an experiment from a JSON config and write report.json with CSV sidecars.
    Run {
        #[arg(long, env = "ZML_CONFIG")]
        config: PathBuf,
        /// Output directory.
        #[arg(long, env = "ZML_OUT", default_value = "zml-out")]
        out: PathBuf,
    },
    /// List critical-line zeros in [t_lo, t_hi] as CSV.
    Zeros {
        #[arg(long = "t-lo", env = "ZML_T_LO", allow_negative_numbers = true)]
        t_lo: f64,
        #[arg(long = "t-hi", env = "ZML_T_HI", allow_negative_numbers = true)]
        t_hi: f64,
        /// CSV file; stdout when absent.
        #[arg(long, env = "ZML_OUT")]
        out: Option<PathBuf>,
    },
}

/// Exit code for a library error: bad input is 2, anything numerical is 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Parameter(_) => EXIT_CONFIG,
        _ => EXIT_FAIL,
    }
}

pub fn execute(cli: Cli) -> i32 {
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        log::warn!("thread pool already configured: {e}");
    }
    let result = match cli.command {
        Command::Check { positional, suite } => Ok(check(positional.or(suite).unwrap_or(Suite::All))),
        Command::Run { config, out } => run(&config, &out),
        Command::Zeros { t_lo, t_hi, out } => zeros(t_lo, t_hi, out.as_deref()),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

fn check(suite: Suite) -> i32 {
    let checks = suites::run_suite(suite);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{suite}: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn run(config: &Path, out: &Path) -> zml_core::Result<i32> {
    let text = fs::read_to_string(config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    let report = harness::run(&cfg)?;
    fs::create_dir_all(out)?;

    // timing changes between runs, so it goes to its own file
    fs::write(out.join("report.json"), report.to_json_without_timing()? + "\n")?;
    fs::write(out.join("timing.json"), serde_json::to_string_pretty(&report.timing)? + "\n")?;
    if let Some(p) = &report.principal {
        report.write_profile_csv(BufWriter::new(File::create(out.join("profile.csv"))?))?;
        if let Some(h) = &p.histogram {
            h.write_csv(BufWriter::new(File::create(out.join("histogram.csv"))?))?;
        }
        println!(
            "kappa_bound {:.6} (unclamped {:.6}), I = {:.6}, eps_E = {:.4}",
            p.kappa_bound, p.kappa_unclamped, p.integrals.i, p.integrals.eps_e
        );
    }
    if let Some(m) = &report.mean_square {
        println!("mean-square ratio {:.6}, c(1, R) = {:.6}", m.ratio, m.c1r);
    }
    println!("wrote {}", out.display());
    Ok(EXIT_OK)
}

fn zeros(t_lo: f64, t_hi: f64, out: Option<&Path>) -> zml_core::Result<i32> {
    if !(t_lo < t_hi) {
        return Err(Error::Config(format!("inverted or empty range [{t_lo}, {t_hi}]")));
    }
    let list = find_zeros(t_lo, t_hi)?;
    match out {
        Some(path) => {
            list.write_csv(BufWriter::new(File::create(path)?))?;
            println!("{} zeros in [{t_lo}, {t_hi}]", list.len());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            list.write_csv(&mut lock)?;
            lock.flush()?;
            eprintln!("{} zeros in [{t_lo}, {t_hi}]", list.len());
        }
    }
    Ok(EXIT_OK)
}
