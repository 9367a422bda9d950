use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, THREADS_ENV};
use super::generator::random_separable_instance;
use crate::error::{Error, Result};
use crate::mdp::{measure_beta, IrlInstance};
use crate::solvers::{solver_by_name, success_check, IrlSolver};
use crate::trajectory::{Sampler, TransitionCounts, TransitionStream};

/// One point of a success-rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub solver: String,
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    /// Measured separability of the instance (mean over trials when every
    /// trial draws its own instance).
    pub beta: f64,
    pub m: u64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub seed: u64,
}

/// Worker count from the environment, then the config, else rayon's default.
pub fn worker_count(cfg_threads: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let t: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV}={v:?} is not a count")))?;
            if t == 0 {
                return Err(Error::InvalidConfig(format!("{THREADS_ENV} must be at least 1")));
            }
            Ok(Some(t))
        }
        Err(_) => Ok(cfg_threads),
    }
}

pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct TrialOutcome {
    beta: f64,
    /// `[grid point][solver]`.
    success: Vec<Vec<bool>>,
}

/// Success counts for every `(solver, m)` pair.
///
/// Trial `t` observes the transition stream seeded with `base_seed + t`, so
/// the samples behind a larger `m` extend those behind a smaller one. Rows
/// come out grouped by solver in config order, then by ascending `m`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let params = cfg.solver_params();
    let solvers: Vec<Box<dyn IrlSolver>> = cfg
        .solvers
        .iter()
        .map(|s| solver_by_name(s, &params))
        .collect::<Result<_>>()?;
    let shared = if cfg.fresh_instance {
        None
    } else {
        let inst = draw_instance(cfg, cfg.instance_seed())?;
        let beta = measure_beta(&inst)?.0;
        Some((inst, beta))
    };
    let threads = worker_count(cfg.threads)?;
    let outcomes: Vec<Result<TrialOutcome>> = with_workers(threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &solvers, shared.as_ref(), t as u64))
            .collect()
    })?;
    let outcomes: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let beta = outcomes.iter().map(|o| o.beta).sum::<f64>() / outcomes.len() as f64;
    let mut rows = Vec::with_capacity(solvers.len() * cfg.m_grid.len());
    for (s, name) in cfg.solvers.iter().enumerate() {
        for (g, &m) in cfg.m_grid.iter().enumerate() {
            let successes = outcomes.iter().filter(|o| o.success[g][s]).count();
            rows.push(ResultRow {
                solver: name.clone(),
                n: cfg.n,
                k: cfg.k,
                gamma: cfg.gamma,
                beta,
                m,
                trials: cfg.trials,
                successes,
                success_rate: successes as f64 / cfg.trials as f64,
                seed: cfg.base_seed,
            });
        }
    }
    Ok(rows)
}

fn draw_instance(cfg: &ExperimentConfig, seed: u64) -> Result<IrlInstance> {
    random_separable_instance(cfg.n, cfg.k, cfg.gamma, cfg.target_beta, cfg.beta_window, seed)
}

fn run_trial(
    cfg: &ExperimentConfig,
    solvers: &[Box<dyn IrlSolver>],
    shared: Option<&(IrlInstance, f64)>,
    t: u64,
) -> Result<TrialOutcome> {
    let fresh;
    let (truth, beta) = match shared {
        Some((inst, beta)) => (inst, *beta),
        None => {
            let inst = draw_instance(cfg, cfg.instance_seed().wrapping_add(t))?;
            let beta = measure_beta(&inst)?.0;
            fresh = inst;
            (&fresh, beta)
        }
    };
    let sampler = Sampler::new(truth);
    let length = if cfg.single_trajectory {
        usize::MAX
    } else {
        cfg.trajectory_length
    };
    let mut stream = TransitionStream::new(cfg.base_seed.wrapping_add(t), length);
    let mut counts = TransitionCounts::new(cfg.n, cfg.k);
    let mut observed = 0u64;
    let mut success = Vec::with_capacity(cfg.m_grid.len());
    for &m in &cfg.m_grid {
        stream.advance(&sampler, &mut counts, m - observed);
        observed = m;
        let est = if cfg.true_transitions {
            truth.clone()
        } else {
            IrlInstance::new(cfg.gamma, counts.estimate(cfg.smoothing)?)?
        };
        success.push(
            solvers
                .iter()
                .map(|s| match s.solve(&est) {
                    Ok(sol) => sol.reward.is_some_and(|r| success_check(truth, &r)),
                    Err(_) => false,
                })
                .collect(),
        );
    }
    Ok(TrialOutcome { beta, success })
}

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let rows: Vec<ResultRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(rows)
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no rows to write".into()));
    }
    write_csv(rows, std::fs::File::create(path)?)
}

pub fn parse_csv(path: &Path) -> Result<Vec<ResultRow>> {
    read_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: u64) -> ResultRow {
        ResultRow {
            solver: "l1_svm".into(),
            n: 7,
            k: 7,
            gamma: 0.1,
            beta: 0.0031234567891,
            m,
            trials: 3,
            successes: 1,
            success_rate: 1.0 / 3.0,
            seed: 42,
        }
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let rows = vec![row(10), row(1000)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "solver,n,k,gamma,beta,m,trials,successes,success_rate,seed"
        );
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn small_experiment_shape() {
        let mut cfg = ExperimentConfig::new(4, 3, 0.01);
        cfg.m_grid = vec![10, 100];
        cfg.trials = 4;
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].solver, "ng_russell");
        assert_eq!(rows[2].solver, "l1_svm");
        assert!(rows.iter().all(|r| r.successes <= r.trials));
    }

    #[test]
    fn true_transitions_make_the_svm_succeed() {
        let mut cfg = ExperimentConfig::new(5, 3, 0.005);
        cfg.m_grid = vec![10];
        cfg.trials = 3;
        cfg.true_transitions = true;
        cfg.solvers = vec!["l1_svm".into()];
        for r in run_experiment(&cfg).unwrap() {
            assert_eq!(r.success_rate, 1.0, "{}", r.solver);
        }
    }
}
