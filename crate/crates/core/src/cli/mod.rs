//! Command-line front end.
//!
//! Every subcommand reads an optional flat config file (`--config path`) whose keys
//! can be overridden by flags of the same name, prints a JSON report echoing the
//! resolved configuration, and exits with 0 (success), 1 (bound violated),
//! 2 (invalid input) or 3 (numerical singularity).

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{RunConfig, KEYS};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;

macro_rules! flag_args {
    ($($field:ident => $key:literal),* $(,)?) => {
        /// Options shared by all subcommands; each value flag mirrors a config key.
        #[derive(clap::Args, Debug, Default, Clone)]
        pub struct Args {
            /// Flat `key = value` config file
            #[arg(long)]
            pub config: Option<PathBuf>,
            /// Write a gnuplot script next to the CSV output
            #[arg(long = "emit-plot-script")]
            pub emit_plot_script: bool,
            /// Corrupt the hyperbolic square formula (mutation check for `identities`)
            #[arg(long = "flip_beta_sign")]
            pub flip_beta_sign: bool,
            $(
                #[arg(long = $key, allow_hyphen_values = true, value_name = "VALUE")]
                pub $field: Option<String>,
            )*
        }

        impl Args {
            fn overrides(&self) -> Vec<(&'static str, Option<&str>)> {
                vec![$(($key, self.$field.as_deref())),*]
            }
        }
    };
}

flag_args! {
    geometry => "geometry",
    bc => "bc",
    kind => "kind",
    n => "n",
    n_list => "n_list",
    lo => "lo",
    hi => "hi",
    res => "res",
    s0 => "s0",
    s1 => "s1",
    s0_min => "s0_min",
    s0_max => "s0_max",
    s1_min => "s1_min",
    s1_max => "s1_max",
    s0_res => "s0_res",
    s1_res => "s1_res",
    m => "m",
    big_m => "M",
    b_norm => "b_norm",
    b => "b",
    trace_norm => "trace_norm",
    c_p => "c_p",
    robin_coeff_mode => "robin_coeff_mode",
    seed => "seed",
    trials => "trials",
    side => "side",
    f => "f",
    degree => "degree",
    check_res => "check_res",
    out => "out",
}

#[derive(Parser, Debug)]
#[command(
    name = "sspec",
    version,
    about = "S-spectrum estimates for hyperbolic and spherical Dirac operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the operator identities on random polynomial fields
    Identities(Args),
    /// Sample an admissibility region over the (s0, |s|) half-plane
    Region(Args),
    /// Solve the weak spectral problem and compare with the a priori bounds
    Solve(Args),
    /// Test coercivity of the discrete form on random grid functions
    Coercivity(Args),
    /// Apply a discrete S-resolvent and compare with its bound
    Resolvent(Args),
    /// Estimate the norm of the Dirichlet trace operator
    #[command(name = "trace-norm")]
    TraceNorm(Args),
}

impl Command {
    fn args(&self) -> &Args {
        match self {
            Command::Identities(a)
            | Command::Region(a)
            | Command::Solve(a)
            | Command::Coercivity(a)
            | Command::Resolvent(a)
            | Command::TraceNorm(a) => a,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Identities(_) => "identities",
            Command::Region(_) => "region",
            Command::Solve(_) => "solve",
            Command::Coercivity(_) => "coercivity",
            Command::Resolvent(_) => "resolvent",
            Command::TraceNorm(_) => "trace-norm",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Singular { .. } | Error::NoConvergence { .. } => EXIT_SINGULAR,
        _ => EXIT_INVALID,
    }
}

/// Resolves the config for a parsed command line: file values first, then flags.
pub fn resolve_config(args: &Args) -> crate::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for (key, value) in args.overrides() {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let args = cli.command.args().clone();
    let mut cfg = match resolve_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let outcome = commands::dispatch(&cli.command, &args, &mut cfg);
    let report = serde_json::json!({
        "command": cli.command.name(),
        "config": cfg.resolved(),
        "status": outcome.status,
        "report": outcome.report,
    });
    let text = serde_json::to_string_pretty(&report).unwrap_or_default();
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{text}");
    if let Some(msg) = &outcome.message {
        eprintln!("{msg}");
    }
    outcome.code
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("sspec-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.conf");
        std::fs::write(&path, "s0 = 1\ns1 = 2\n").unwrap();
        let cli = Cli::try_parse_from([
            "sspec",
            "solve",
            "--config",
            path.to_str().unwrap(),
            "--s0",
            "-3",
        ])
        .unwrap();
        let mut cfg = resolve_config(cli.command.args()).unwrap();
        assert_eq!(cfg.require::<f64>("s0").unwrap(), -3.0);
        assert_eq!(cfg.require::<f64>("s1").unwrap(), 2.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn every_key_has_a_flag() {
        let args = Args::default();
        let flags: Vec<&str> = args.overrides().into_iter().map(|(k, _)| k).collect();
        assert_eq!(flags, KEYS);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("sspec-atomic-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("x.csv");
        write_atomic(&p, b"a").unwrap();
        write_atomic(&p, b"b").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"b");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
