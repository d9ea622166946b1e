//! `scitower`: run tower stages from the command line.

mod opspec;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scitower::decision::{decide_exact, decide_stage, horizon, FinDesc, Problem};
use scitower::linsys::{inverse_norm_dispersion, inverse_norm_stage, solve_dispersion, solve_stage};
use scitower::polyroots::{quartic_tower, roots_stage_with, Polynomial, StartingMode};
use scitower::schrodinger::bounded::{
    pseudospectrum_stage_h2, spectrum_cr_stage as bounded_cr_stage, spectrum_stage_h2, BoundedProblem, BvBudget,
    ScheduleMode,
};
use scitower::schrodinger::unbounded::pseudospectrum_stage as lattice_stage;
use scitower::schrodinger::PotentialSpec;
use scitower::spectral::{
    essential_dispersion_stage, essential_stabilized_k, pseudospectrum_dispersion_stage, pseudospectrum_stage,
    spectrum_compact_stage, spectrum_cr_dispersion_stage, spectrum_cr_stage, spectrum_general_stage,
    ESSENTIAL_LEVEL_CAP,
};
use scitower::{LazyOperator, ResolventControl};

use output::{Format, Report, Sink};

#[derive(Parser)]
#[command(name = "scitower", version, about = "Run towers of algorithms for spectral problems at finite stages")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
    /// Exit with status 2 when any stage carries a flag.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Args)]
struct OpArgs {
    /// Operator: JSON file, inline JSON, @path, or a short form such as diag:1+1/j.
    #[arg(long)]
    op: String,
    /// Resolvent control g: "identity" or an expression in x.
    #[arg(long)]
    g: Option<String>,
    /// Dispersion bound f: expression in k.
    #[arg(long)]
    f: Option<String>,
    /// Upper bound on the operator norm.
    #[arg(long)]
    norm_bound: Option<f64>,
}

impl OpArgs {
    fn build(&self) -> Result<LazyOperator> {
        let mut spec = opspec::parse_operator(&self.op)?;
        if let Some(g) = &self.g {
            spec = spec.with_resolvent_control(g);
        }
        if let Some(f) = &self.f {
            spec = spec.with_dispersion(f);
        }
        if let Some(m) = self.norm_bound {
            spec = spec.with_norm_bound(m);
        }
        Ok(spec.build()?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumTower {
    /// Controlled-resolvent grid tower.
    Cr,
    /// Sublevel set of the resolvent surrogate at eps = 1/k.
    General,
    /// Square sections for compact operators.
    Compact,
}

#[derive(Clone, Copy, ValueEnum)]
enum EssentialTower {
    Mu,
    Voting,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundedTower {
    Cr,
    SpectrumH2,
    PseudospectrumH2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Capped,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    Dense,
    HssStrict,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectrum of a bounded operator.
    Spectrum {
        #[command(flatten)]
        op: OpArgs,
        /// Stage list "10,100" or geometric "geo:M0,COUNT".
        #[arg(long)]
        stages: String,
        /// Row count n of the sections; defaults to f(m).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "cr")]
        tower: SpectrumTower,
        /// Outer index k of the general tower.
        #[arg(long, default_value_t = 8)]
        k: usize,
        /// Power exponent N of the general tower.
        #[arg(long, default_value_t = 0)]
        power: u32,
    },
    /// (N, eps)-pseudospectrum.
    Pseudospectrum {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        power: u32,
        #[arg(long)]
        stages: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Essential spectrum; the stage list runs over n.
    Essential {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long, value_enum, default_value = "mu")]
        tower: EssentialTower,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        stages: String,
        /// Extra dyadic levels of the fine voting grids.
        #[arg(long, default_value_t = 2)]
        level_slack: u32,
    },
    /// Least-squares solution of Ax = b; the stage list runs over n.
    Solve {
        #[command(flatten)]
        op: OpArgs,
        /// Right-hand side: e<k> or an expression in j.
        #[arg(long)]
        b: String,
        #[arg(long)]
        m: usize,
        /// Values of n; omit to use n = f(m).
        #[arg(long)]
        stages: Option<String>,
    },
    /// Inverse norm ||A^-1||; the stage list runs over n.
    Invnorm {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        stages: Option<String>,
    },
    /// Newton filter on a universal starting set.
    Polyroots {
        /// Coefficients, constant term first: "24,-50,35,-10,1".
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        stages: Option<String>,
        #[arg(long, value_enum, default_value = "dense")]
        start: StartArg,
    },
    /// Explicit height-three tower for one root of a quartic.
    Quartic {
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        /// Each stage n runs the tower at (n, n, n).
        #[arg(long)]
        stages: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        retries: usize,
    },
    /// -Δ + V on a lattice for confining V.
    SchrodingerUnbounded {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, conflicts_with = "stages")]
        stage: Option<usize>,
        #[arg(long)]
        stages: Option<String>,
        /// Pseudospectrum level; defaults to 1/n (spectrum).
        #[arg(long)]
        eps: Option<f64>,
        /// Sector angles "t1,t2" in radians for a sectorial V.
        #[arg(long)]
        sector: Option<String>,
    },
    /// -Δ + V for bounded V of locally bounded variation.
    SchrodingerBounded {
        #[arg(long)]
        potential: String,
        /// Total-variation bound phi(a) on [-a, a]^d.
        #[arg(long)]
        phi: String,
        /// Halton bases; their count is the dimension.
        #[arg(long, default_value = "2")]
        bases: String,
        #[arg(long, value_enum, default_value = "capped")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "cr")]
        tower: BoundedTower,
        /// Values of m.
        #[arg(long)]
        m: String,
        /// Outer index n of the height-two towers.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value = "identity")]
        g: String,
    },
    /// Decision towers on finitely described 0/1 inputs.
    Decide {
        /// xi1 .. xi7.
        #[arg(long)]
        problem: String,
        /// Description as JSON, or @path.
        #[arg(long)]
        input: String,
        /// One stage tuple, outermost first; omit to run to the horizon.
        #[arg(long)]
        stages: Option<String>,
    },
}

fn stage_list(src: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = if let Some(g) = src.strip_prefix("geo:") {
        let p: Vec<usize> = opspec::parse_list(g)?;
        if p.len() != 2 {
            bail!("geometric schedule takes M0,COUNT");
        }
        (0..p[1]).map(|i| p[0] << i).collect()
    } else {
        opspec::parse_list(src)?
    };
    if v.is_empty() || v.contains(&0) {
        bail!("stages must be positive");
    }
    Ok(v)
}

fn read_arg(src: &str) -> Result<String> {
    match src.strip_prefix('@') {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {p}")),
        None => Ok(src.to_string()),
    }
}

fn run(cmd: Cmd, sink: &mut Sink) -> Result<()> {
    match cmd {
        Cmd::Spectrum { op, stages, n, tower, k, power } => {
            let a = op.build()?;
            for m in stage_list(&stages)? {
                let pc = match (tower, n) {
                    (SpectrumTower::Cr, Some(n)) => spectrum_cr_stage(&a, m, n.max(m))?,
                    (SpectrumTower::Cr, None) => spectrum_cr_dispersion_stage(&a, m)?,
                    (SpectrumTower::General, n) => {
                        let n = match n {
                            Some(n) => n.max(m),
                            None => a.require_dispersion()?.iterate(m, 1 << power)?,
                        };
                        spectrum_general_stage(&a, power, k, m, n)?
                    }
                    (SpectrumTower::Compact, _) => spectrum_compact_stage(&a, m)?,
                };
                sink.emit(Report::cloud("spectrum", pc))?;
            }
        }
        Cmd::Pseudospectrum { op, eps, power, stages, n } => {
            let a = op.build()?;
            for m in stage_list(&stages)? {
                let pc = match n {
                    Some(n) => pseudospectrum_stage(&a, power, eps, m, n.max(m))?,
                    None => pseudospectrum_dispersion_stage(&a, power, eps, m)?,
                };
                sink.emit(Report::cloud("pseudospectrum", pc))?;
            }
        }
        Cmd::Essential { op, tower, m, stages, level_slack } => {
            let a = op.build()?;
            for n in stage_list(&stages)? {
                let pc = match tower {
                    EssentialTower::Mu => essential_stabilized_k(&a, m, n, ESSENTIAL_LEVEL_CAP)?,
                    EssentialTower::Voting => essential_dispersion_stage(&a, m, n, level_slack)?,
                };
                sink.emit(Report::cloud("essential", pc))?;
            }
        }
        Cmd::Solve { op, b, m, stages } => {
            let a = op.build()?;
            let rhs = opspec::parse_rhs(&b)?;
            let results = match stages {
                Some(s) => stage_list(&s)?.into_iter().map(|n| solve_stage(&a, &rhs, m, n)).collect::<Result<Vec<_>, _>>()?,
                None => vec![solve_dispersion(&a, &rhs, m)?],
            };
            for r in results {
                sink.emit(Report::vector("solve", r.stage.clone(), r.x.clone(), r.residual, r.below_threshold))?;
            }
        }
        Cmd::Invnorm { op, m, stages } => {
            let a = op.build()?;
            let results = match stages {
                Some(s) => stage_list(&s)?.into_iter().map(|n| inverse_norm_stage(&a, m, n)).collect::<Result<Vec<_>, _>>()?,
                None => vec![inverse_norm_dispersion(&a, m)?],
            };
            for r in results {
                sink.emit(Report::value("invnorm", r.stage.clone(), r.inverse_norm))?;
            }
        }
        Cmd::Polyroots { coeffs, n, stages, start } => {
            let p = Polynomial::new(opspec::parse_coeffs(&coeffs)?)?;
            let ns = match (n, stages) {
                (Some(n), None) => vec![n],
                (None, Some(s)) => stage_list(&s)?,
                _ => bail!("give exactly one of --n and --stages"),
            };
            let mode = match start {
                StartArg::Dense => StartingMode::Dense,
                StartArg::HssStrict => StartingMode::HssStrict,
            };
            for n in ns {
                sink.emit(Report::cloud("polyroots", roots_stage_with(&p, n, mode)?))?;
            }
        }
        Cmd::Quartic { coeffs, stages, seed, retries } => {
            let p = Polynomial::new(opspec::parse_coeffs(&coeffs)?)?;
            for n in stage_list(&stages)? {
                let q = quartic_tower(&p, n, n, n, seed, retries)?;
                let mut stage = scitower::TowerStage::new("quartic", &[n as u64, n as u64, n as u64]);
                if q.retries > 0 {
                    stage.flag(format!("restarted {} times from seeded triples", q.retries));
                }
                sink.emit(Report::vector("quartic", stage, vec![q.root], f64::NAN, false))?;
            }
        }
        Cmd::SchrodingerUnbounded { potential, dim, stage, stages, eps, sector } => {
            let mut v = PotentialSpec::parse(&potential, dim)?;
            if let Some(s) = sector {
                let t: Vec<f64> = opspec::parse_list(&s)?;
                if t.len() != 2 {
                    bail!("sector takes t1,t2");
                }
                v = v.with_sector(t[0], t[1])?;
            }
            let ns = match (stage, stages) {
                (Some(n), None) => vec![n],
                (None, Some(s)) => stage_list(&s)?,
                _ => bail!("give exactly one of --stage and --stages"),
            };
            for n in ns {
                let e = eps.unwrap_or(1.0 / n as f64);
                sink.emit(Report::cloud("schrodinger-unbounded", lattice_stage(&v, e, n)?))?;
            }
        }
        Cmd::SchrodingerBounded { potential, phi, bases, mode, tower, m, n, eps, g } => {
            let bases: Vec<u64> = opspec::parse_list(&bases)?;
            let v = PotentialSpec::parse(&potential, bases.len())?;
            let mode = match mode {
                ModeArg::Strict => ScheduleMode::Strict,
                ModeArg::Capped => ScheduleMode::Capped,
            };
            let problem = BoundedProblem::new(v, BvBudget::new(&phi, bases)?, mode)?;
            for m in stage_list(&m)? {
                let pc = match tower {
                    BoundedTower::Cr => bounded_cr_stage(&problem, &ResolventControl::parse(&g)?, m)?,
                    BoundedTower::SpectrumH2 => {
                        spectrum_stage_h2(&problem, m, n.context("the height-two towers need --n")?)?
                    }
                    BoundedTower::PseudospectrumH2 => pseudospectrum_stage_h2(
                        &problem,
                        eps.context("the pseudospectrum tower needs --eps")?,
                        m,
                        n.context("the height-two towers need --n")?,
                    )?,
                };
                sink.emit(Report::cloud("schrodinger-bounded", pc))?;
            }
        }
        Cmd::Decide { problem, input, stages } => {
            let problem: Problem = problem.parse()?;
            let x = FinDesc::from_json(&read_arg(&input)?)?;
            let idx: Vec<u64> = match stages {
                Some(s) => opspec::parse_list(&s)?,
                None => horizon(problem, &x)?,
            };
            let answer = decide_stage(problem, &x, &idx)?;
            let exact = decide_exact(problem, &x)?;
            sink.emit(Report::decision(problem, idx, answer, Some(exact)))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.common.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.common.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let mut sink = Sink::new(cli.common.format, cli.common.output.clone());
    if let Err(e) = run(cli.command, &mut sink).and_then(|()| sink.finish()) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    if cli.common.strict && sink.flagged() {
        eprintln!("error: flagged stage in strict mode");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
