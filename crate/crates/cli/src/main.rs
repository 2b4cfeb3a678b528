//! `wfgem`: evaluate kernels and constants, simulate paths, run couplings and the
//! verification suite. All artifacts land in one output directory with a manifest.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use wfgem::sim::Scheme;
use wfgem::verify::Status;
use wfgem::SequenceRule;

use config::{ConfigError, RunConfig};
use output::Output;

#[derive(Parser, Debug)]
#[command(name = "wfgem", version, about = "Wright–Fisher and GEM diffusions: kernels, simulation, verification")]
struct Cli {
    /// TOML run configuration; every key is optional and unknown keys are an error.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ParamFlags {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SequenceFlags {
    /// Two-parameter sequence `a_i = (1−α)/2`, `b_i = (θ + αi)/2` (needs `--theta` too).
    #[arg(long, requires = "theta")]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    theta: Option<f64>,
    /// Number of coordinates.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct NumericFlags {
    #[arg(long)]
    n_basis: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    y0: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long)]
    count: Option<usize>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "projected_euler" | "projected-euler" | "euler" => Ok(Scheme::ProjectedEuler),
        "lamperti" => Ok(Scheme::Lamperti),
        _ => Err(format!("unknown scheme `{s}` (projected_euler, lamperti)")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Curvature constant, distances, Harnack exponents, γ(t) and β(r) tables.
    Constants {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        seq: SequenceFlags,
        #[command(flatten)]
        num: NumericFlags,
    },
    /// Heat-kernel grid (t, x, y, value, trunc_err); `--product` for the sequence product.
    Kernel {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        seq: SequenceFlags,
        #[command(flatten)]
        num: NumericFlags,
        #[arg(long)]
        product: bool,
    },
    /// Simulate Wright–Fisher paths, or a GEM path with `--gem`.
    Simulate {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        seq: SequenceFlags,
        #[command(flatten)]
        num: NumericFlags,
        #[arg(long)]
        gem: bool,
    },
    /// Coupling by change of measure: one stored pair and a many-path summary.
    Couple {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        num: NumericFlags,
    },
    /// Stick-breaking draws.
    GemSample {
        #[command(flatten)]
        seq: SequenceFlags,
        #[command(flatten)]
        num: NumericFlags,
    },
    /// Run a named check (`harnack1d`, `coupling`, …) or `all` for the acceptance suite.
    Verify {
        #[arg(default_value = "all")]
        check: String,
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        num: NumericFlags,
    },
}

impl ParamFlags {
    fn apply(&self, cfg: &mut RunConfig) -> bool {
        if let Some(a) = self.a {
            cfg.params.a = a;
        }
        if let Some(b) = self.b {
            cfg.params.b = b;
        }
        self.a.is_some() || self.b.is_some()
    }
}

impl SequenceFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if let (Some(alpha), Some(theta)) = (self.alpha, self.theta) {
            cfg.sequence.rule = SequenceRule::TwoParameter { alpha, theta };
            cfg.sequence.entries = None;
        }
        if let Some(n) = self.n {
            cfg.sequence.n = n;
        }
    }
}

impl NumericFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        let n = &mut cfg.numerics;
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { n.$f = v; } )*};
        }
        set!(n_basis, grid, horizon, dt, n_paths, x0, y0, p, scheme, count);
        if let Some(t) = &self.t {
            n.times = t.clone();
        }
    }
}

fn defaults_help() -> String {
    let mut cfg = RunConfig::default();
    // the suite block is long; point to it rather than print it
    let suite = std::mem::take(&mut cfg.suite);
    drop(suite);
    let text = toml::to_string_pretty(&cfg).unwrap_or_default();
    let text: String = text
        .lines()
        .take_while(|l| !l.starts_with("[suite"))
        .map(|l| format!("  {l}\n"))
        .collect();
    format!(
        "Configuration defaults (TOML; flags override the file):\n\n{text}\n  \
         [suite.*] holds the verification settings; its defaults are the acceptance parameters.\n\n\
         Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 configuration error."
    )
}

fn run(cli: Cli, argv: &[String]) -> anyhow::Result<Status> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    let mut harnack_params = false;
    let mut verify_flags = None;
    match &cli.command {
        Command::Constants { params, seq, num } | Command::Kernel { params, seq, num, .. } | Command::Simulate { params, seq, num, .. } => {
            params.apply(&mut cfg);
            seq.apply(&mut cfg);
            num.apply(&mut cfg);
        }
        Command::Couple { params, num } => {
            params.apply(&mut cfg);
            num.apply(&mut cfg);
        }
        Command::GemSample { seq, num } => {
            seq.apply(&mut cfg);
            num.apply(&mut cfg);
        }
        Command::Verify { params, num, .. } => {
            harnack_params = params.apply(&mut cfg);
            verify_flags = Some((num.p, num.t.clone()));
            num.apply(&mut cfg);
        }
    }
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }

    let mut out = Output::new(cfg.out_dir.clone());
    let start = Instant::now();
    let status = match &cli.command {
        Command::Constants { .. } => commands::constants(&cfg, &mut out)?,
        Command::Kernel { product, .. } => commands::kernel(&cfg, *product, &mut out)?,
        Command::Simulate { gem, .. } => commands::simulate(&cfg, *gem, &mut out)?,
        Command::Couple { .. } => commands::couple(&cfg, &mut out)?,
        Command::GemSample { .. } => commands::gem_sample(&cfg, &mut out)?,
        Command::Verify { check, .. } => {
            let (p, t) = verify_flags.unwrap_or_default();
            let ov = commands::VerifyOverrides { harnack_params, p, t };
            commands::verify(&cfg, check, &ov, &mut out)?
        }
    };
    out.runtime("total", start.elapsed().as_secs_f64());
    let manifest = out.finish(argv, &cfg, cfg.seed, &status.to_string())?;
    eprintln!("manifest: {}", manifest.display());
    Ok(status)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let command = Cli::command().after_long_help(defaults_help());
    let matches = match command.try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(cli, &argv) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
