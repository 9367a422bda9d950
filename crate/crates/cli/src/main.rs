use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use irl_lab::bounds::{kl_trajectory_bound, BoundReport};
use irl_lab::ensemble::{build_ensemble, verify_ensemble, EnsembleConfig, HardInstance, VerificationReport, DEFAULT_GAMMA};
use irl_lab::geometry::CodeKind;
use irl_lab::harness::{emit_csv, emit_plot, parse_csv, run_experiment, write_csv, ExperimentConfig, PlotOptions};
use irl_lab::mdp::{IrlInstance, RewardVector};
use irl_lab::trajectory::{brute_force_trajectory_kl, exact_trajectory_kl, extended_chain};

#[derive(Parser)]
#[command(name = "irl-lab", version, about = "Hard inverse reinforcement learning instances and sample-complexity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Code {
    Simplex,
    Icosahedron,
}

#[derive(Subcommand)]
enum Command {
    /// Build and certify the hard ensemble, one JSON instance per facet.
    Ensemble {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, value_enum, default_value = "simplex")]
        code: Code,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check an ensemble directory written by `ensemble`.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Evaluate every closed-form bound.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        eps: Option<f64>,
        /// Trajectory length in states.
        #[arg(long, default_value_t = 1000)]
        m: u64,
        /// Ensemble size used in the Fano term instead of the facet bound.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Trajectory KL between every ordered pair of ensemble members.
    Kl {
        #[arg(long = "in")]
        input: PathBuf,
        /// Trajectory length in states.
        #[arg(long)]
        m: usize,
        /// Also sum over all trajectories.
        #[arg(long)]
        brute: bool,
    },
    /// Run a Monte Carlo reward-recovery experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_plot: Option<PathBuf>,
        /// Comma-separated solver names, overriding the config.
        #[arg(long, value_delimiter = ',')]
        solvers: Option<Vec<String>>,
        #[arg(long)]
        fresh_instance: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render a results CSV as an SVG success-rate plot.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        upper_line: Option<f64>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: EnsembleConfig,
    members: Vec<Member>,
    report: VerificationReport,
}

#[derive(Serialize, Deserialize)]
struct Member {
    file: String,
    facet_index: usize,
    reward: Vec<f64>,
}

const MANIFEST: &str = "manifest.json";

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ensemble { n, beta, eps, gamma, code, out } => {
            let kind = match code {
                Code::Simplex => CodeKind::Simplex,
                Code::Icosahedron => CodeKind::Icosahedron,
            };
            let cfg = EnsembleConfig::new(n, gamma, beta, eps, kind)?;
            let ensemble = build_ensemble(&cfg)?;
            let report = verify_ensemble(&ensemble);
            write_ensemble(&out, &cfg, &ensemble, &report)?;
            print_report(&report);
            if !report.passed() {
                eprintln!("warning: the ensemble does not meet its certificate");
            }
            println!("wrote {} instances to {}", ensemble.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { input } => {
            let (_, ensemble) = read_ensemble(&input)?;
            let report = verify_ensemble(&ensemble);
            print_report(&report);
            Ok(if report.passed() {
                println!("PASS");
                ExitCode::SUCCESS
            } else {
                println!("FAIL");
                ExitCode::FAILURE
            })
        }
        Command::Bounds { n, beta, eps, m, eta, json } => {
            let eps = match eps {
                Some(e) => e,
                None => EnsembleConfig::new(n, DEFAULT_GAMMA, beta, None, CodeKind::Simplex)?.eps,
            };
            let report = BoundReport::compute(n, beta, eps, m, eta)?;
            print!("{}", report.to_text());
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Kl { input, m, brute } => {
            if m == 0 {
                bail!("--m must be at least 1");
            }
            let (cfg, ensemble) = read_ensemble(&input)?;
            kl_table(&cfg, &ensemble, m, brute)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, out_csv, out_plot, solvers, fresh_instance, threads } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if out_csv.is_some() {
                cfg.out_csv = out_csv;
            }
            if out_plot.is_some() {
                cfg.out_plot = out_plot;
            }
            if let Some(s) = solvers {
                cfg.solvers = s;
            }
            cfg.fresh_instance |= fresh_instance;
            if threads.is_some() {
                cfg.threads = threads;
            }
            cfg.validate()?;
            let rows = run_experiment(&cfg)?;
            match &cfg.out_csv {
                Some(p) => {
                    emit_csv(&rows, p)?;
                    eprintln!("wrote {}", p.display());
                }
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            if let Some(p) = &cfg.out_plot {
                emit_plot(&rows, &PlotOptions::from_config(&cfg), p)?;
                eprintln!("wrote {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { input, out, upper_line, title } => {
            let rows = parse_csv(&input)?;
            let mut opts = PlotOptions::from_rows(&rows);
            opts.upper_line = upper_line;
            if let Some(t) = title {
                opts.title = t;
            }
            emit_plot(&rows, &opts, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_ensemble(dir: &Path, cfg: &EnsembleConfig, ensemble: &[HardInstance], report: &VerificationReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut members = Vec::with_capacity(ensemble.len());
    for h in ensemble {
        let file = format!("instance_{:03}.json", h.facet_index);
        fs::write(dir.join(&file), h.instance.to_json()?)?;
        members.push(Member { file, facet_index: h.facet_index, reward: h.reward.to_vec() });
    }
    let manifest = Manifest { config: cfg.clone(), members, report: report.clone() };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn read_ensemble(dir: &Path) -> Result<(EnsembleConfig, Vec<HardInstance>)> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut ensemble = Vec::with_capacity(manifest.members.len());
    for m in manifest.members {
        let p = dir.join(&m.file);
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let instance = IrlInstance::from_json(&text).with_context(|| format!("parsing {}", p.display()))?;
        if m.reward.len() != instance.n() || m.reward.iter().any(|v| !v.is_finite()) {
            bail!("{}: reward does not match the instance", m.file);
        }
        ensemble.push(HardInstance {
            instance,
            reward: RewardVector::new(m.reward),
            facet_index: m.facet_index,
            config: manifest.config.clone(),
        });
    }
    Ok((manifest.config, ensemble))
}

fn print_report(r: &VerificationReport) {
    println!("instances            {}", r.instances);
    println!("beta                 {:.6e}", r.beta);
    println!("min own margin       {:.6e}", r.min_own_margin);
    println!("max cross margin     {:.6e}", r.max_cross_margin);
    println!("own margin failures  {}", r.own_margin_failures.len());
    println!("cross failures       {}", r.cross_failures.len());
    println!("norm failures        {}", r.norm_failures.len());
    for e in &r.errors {
        println!("error                {e}");
    }
}

fn kl_table(cfg: &EnsembleConfig, ensemble: &[HardInstance], m: usize, brute: bool) -> Result<()> {
    let bound = kl_trajectory_bound(cfg.n, cfg.eps, m as u64)?;
    let chains: Vec<_> = ensemble.iter().map(|h| extended_chain(&h.instance)).collect();
    let size = chains.first().map_or(0, |c| c.n());
    let init = vec![1.0 / size as f64; size];
    if brute {
        println!("{:>4} {:>4} {:>14} {:>14} {:>14} ok", "i", "j", "exact", "brute", "bound");
    } else {
        println!("{:>4} {:>4} {:>14} {:>14} ok", "i", "j", "exact", "bound");
    }
    let mut worst = 0.0f64;
    for (i, p) in chains.iter().enumerate() {
        for (j, q) in chains.iter().enumerate() {
            if i == j {
                continue;
            }
            let exact = exact_trajectory_kl(p, q, &init, &init, m)?;
            worst = worst.max(exact);
            let ok = if exact <= bound + 1e-9 { "yes" } else { "NO" };
            if brute {
                let b = match brute_force_trajectory_kl(p, q, &init, &init, m) {
                    Ok(v) => format!("{v:>14.6e}"),
                    Err(_) => format!("{:>14}", "too large"),
                };
                println!("{i:>4} {j:>4} {exact:>14.6e} {b} {bound:>14.6e} {ok}");
            } else {
                println!("{i:>4} {j:>4} {exact:>14.6e} {bound:>14.6e} {ok}");
            }
        }
    }
    println!("max exact KL {worst:.6e}, bound {bound:.6e}");
    Ok(())
}
