use rayon::prelude::*;

use super::config::{CbAlgorithm, EnvConfig, ExperimentConfig, MabAlgorithm, NaiveModeKind, PolicyConfig, PolicyKind};
use crate::concentration::naive_size_proxy;
use crate::env::{CbEnv, CbEnvSpec, MabEnv, MabEnvSpec};
use crate::error::{config_err, Result};
use crate::glm::{
    ContextOracle, ContextualPolicy, IntegratedTs, IntegratedUcb, MisspecifiedLinTs, MisspecifiedLinUcb, ZiGlmTs,
    ZiGlmUcb,
};
use crate::mab::{
    DirectTs, FixedArm, NaiveMode, NaiveUcb, NaiveUcbParams, Policy, ZiTs, ZiUcbHeavy, ZiUcbLight,
};
use crate::rng::{fnv1a64, stream, STREAM_ENV_PARAMS, STREAM_POLICY, STREAM_REWARDS};

/// Cumulative expected regret of one policy in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub policy: String,
    pub replication: usize,
    /// `(round, cumulative_regret)` at each stored round.
    pub points: Vec<(u64, f64)>,
    /// Pull count per arm (multi-armed experiments only).
    pub pulls: Vec<u64>,
    /// Gap of each arm (multi-armed experiments only).
    pub gaps: Vec<f64>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub policy: String,
    pub round: u64,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub n_reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Ordered by policy (configuration order), then replication.
    pub traces: Vec<RegretTrace>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn traces_of<'a>(&'a self, policy: &'a str) -> impl Iterator<Item = &'a RegretTrace> + 'a {
        self.traces.iter().filter(move |t| t.policy == policy)
    }

    /// Mean over replications of the final cumulative regret.
    pub fn final_mean(&self, policy: &str) -> Option<f64> {
        self.aggregate.iter().rfind(|r| r.policy == policy).map(|r| r.mean_regret)
    }
}

/// At most `max_points` log-spaced rounds in `1..=horizon`, always ending at `horizon`.
pub fn checkpoint_rounds(horizon: u64, max_points: usize) -> Vec<u64> {
    if horizon == 0 || max_points == 0 {
        return Vec::new();
    }
    if max_points == 1 || horizon == 1 {
        return vec![horizon];
    }
    if horizon <= max_points as u64 {
        return (1..=horizon).collect();
    }
    let log_t = (horizon as f64).ln();
    let mut rounds: Vec<u64> = (0..max_points)
        .map(|i| {
            let r = (log_t * i as f64 / (max_points - 1) as f64).exp().round() as u64;
            r.clamp(1, horizon)
        })
        .collect();
    rounds.dedup();
    if rounds.last() != Some(&horizon) {
        rounds.push(horizon);
    }
    rounds
}

fn build_mab_policy(alg: &MabAlgorithm, env: &MabEnv) -> Result<Box<dyn Policy>> {
    let k = env.num_arms();
    Ok(match alg {
        MabAlgorithm::Oracle => Box::new(FixedArm::new(k, env.best_arm())),
        MabAlgorithm::ZiUcb { tail, delta } => Box::new(ZiUcbLight::new(k, *tail, *delta)?),
        MabAlgorithm::ZiUcbHeavy { tail } => Box::new(ZiUcbHeavy::new(k, *tail)?),
        MabAlgorithm::ZiTs(p) => Box::new(ZiTs::new(k, *p)?),
        MabAlgorithm::DirectTs(p) => Box::new(DirectTs::new(k, *p)?),
        MabAlgorithm::NaiveUcb { mode, family, size, delta } => {
            let mode = match mode {
                NaiveModeKind::NonzeroParam => NaiveMode::NonzeroParam,
                NaiveModeKind::EmpiricalVariance => NaiveMode::EmpiricalVariance,
                NaiveModeKind::SolvedProxy => NaiveMode::SolvedProxy,
                NaiveModeKind::TrueProxy => NaiveMode::TrueProxy(
                    env.arms()
                        .iter()
                        .map(|a| naive_size_proxy(a.mu, a.p, *size, *family).map(|s| s.value))
                        .collect::<Result<Vec<_>>>()?,
                ),
            };
            Box::new(NaiveUcb::new(k, NaiveUcbParams { mode, family: *family, size: *size, delta: *delta })?)
        }
    })
}

fn build_cb_policy(
    algorithm: CbAlgorithm,
    params: &crate::glm::GlmParams,
    env: &CbEnv,
) -> Result<Box<dyn ContextualPolicy>> {
    let (k, d) = (env.num_arms(), env.dim());
    let p = params.clone();
    Ok(match algorithm {
        CbAlgorithm::Oracle => Box::new(ContextOracle::new(env.beta.clone(), env.theta.clone(), env.links)),
        CbAlgorithm::ZiGlmUcb => Box::new(ZiGlmUcb::new(k, d, d, p)?),
        CbAlgorithm::ZiGlmTs => Box::new(ZiGlmTs::new(k, d, d, p)?),
        CbAlgorithm::LinUcb => Box::new(MisspecifiedLinUcb::new(k, d, d, p)?),
        CbAlgorithm::LinTs => Box::new(MisspecifiedLinTs::new(k, d, d, p)?),
        CbAlgorithm::IntegratedUcb => Box::new(IntegratedUcb::new(k, d, d, p)?),
        CbAlgorithm::IntegratedTs => Box::new(IntegratedTs::new(k, d, d, p)?),
    })
}

struct Job<'a> {
    policy: &'a PolicyConfig,
    replication: usize,
}

fn run_mab(cfg: &ExperimentConfig, spec: &MabEnvSpec, job: &Job, rounds: &[u64]) -> Result<RegretTrace> {
    let (seed, rep) = (cfg.master_seed, job.replication as u64);
    let env = MabEnv::new(spec, &mut stream(seed, &[STREAM_ENV_PARAMS, rep]))?;
    let PolicyKind::Mab(alg) = &job.policy.kind else {
        return Err(config_err(format!("policy.{}", job.policy.label), "not a multi-armed policy"));
    };
    let mut policy = build_mab_policy(alg, &env)?;
    let key = fnv1a64(&job.policy.label);
    let mut policy_rng = stream(seed, &[STREAM_POLICY, rep, key]);
    let k = env.num_arms();
    let mut pulls = vec![0u64; k];
    let mut regret = 0.0;
    let mut points = Vec::with_capacity(rounds.len());
    let mut next = rounds.iter().peekable();
    for t in 1..=cfg.horizon {
        let arm = policy.select(t, &mut policy_rng);
        assert!(arm < k, "policy `{}` chose arm {arm} of {k}", job.policy.label);
        let mut reward_rng = stream(seed, &[STREAM_REWARDS, rep, key, t]);
        let (r, y) = env.pull(arm, &mut reward_rng);
        policy.update(arm, r, y, t);
        pulls[arm] += 1;
        regret += env.gap(arm);
        if next.peek() == Some(&&t) {
            points.push((t, regret));
            next.next();
        }
    }
    let gaps = (0..k).map(|a| env.gap(a)).collect();
    Ok(RegretTrace { policy: job.policy.label.clone(), replication: job.replication, points, pulls, gaps })
}

fn run_contextual(cfg: &ExperimentConfig, spec: &CbEnvSpec, job: &Job, rounds: &[u64]) -> Result<RegretTrace> {
    let (seed, rep) = (cfg.master_seed, job.replication as u64);
    let env = CbEnv::new(spec, &mut stream(seed, &[STREAM_ENV_PARAMS, rep]))?;
    let PolicyKind::Contextual { algorithm, params } = &job.policy.kind else {
        return Err(config_err(format!("policy.{}", job.policy.label), "not a contextual policy"));
    };
    let mut policy = build_cb_policy(*algorithm, params, &env)?;
    let key = fnv1a64(&job.policy.label);
    let mut policy_rng = stream(seed, &[STREAM_POLICY, rep, key]);
    let mut regret = 0.0;
    let mut points = Vec::with_capacity(rounds.len());
    let mut next = rounds.iter().peekable();
    for t in 1..=cfg.horizon {
        let mut round_rng = stream(seed, &[STREAM_REWARDS, rep, key, t]);
        let round = env.step(&mut round_rng);
        let arm = policy.select(t, &round.features, &mut policy_rng);
        assert!(arm < env.num_arms(), "policy `{}` chose arm {arm}", job.policy.label);
        let (r, y) = env.realize(&round, arm, &mut round_rng);
        policy.update(t, &round.features.psi_x[arm], &round.features.psi_y[arm], r, y);
        regret += round.regret(arm);
        if next.peek() == Some(&&t) {
            points.push((t, regret));
            next.next();
        }
    }
    Ok(RegretTrace {
        policy: job.policy.label.clone(),
        replication: job.replication,
        points,
        pulls: Vec::new(),
        gaps: Vec::new(),
    })
}

/// Run every (policy, replication) pair on a pool of `threads` workers
/// (`None` lets the pool decide). Output bytes do not depend on `threads`.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let rounds = if cfg.full_trace {
        (1..=cfg.horizon).collect()
    } else {
        checkpoint_rounds(cfg.horizon, cfg.checkpoints)
    };
    let jobs: Vec<Job> = cfg
        .policies
        .iter()
        .flat_map(|policy| (0..cfg.replications).map(move |replication| Job { policy, replication }))
        .collect();
    let run = |job: &Job| match &cfg.env {
        EnvConfig::Mab(spec) => run_mab(cfg, spec, job, &rounds),
        EnvConfig::Contextual(spec) => run_contextual(cfg, spec, job, &rounds),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| config_err("threads", e.to_string()))?;
    let traces = pool.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    let aggregate = aggregate(&traces);
    Ok(ExperimentResult { traces, aggregate })
}

/// Mean and sample standard deviation across replications at each stored round.
pub fn aggregate(traces: &[RegretTrace]) -> Vec<AggregateRow> {
    let mut labels: Vec<&str> = Vec::new();
    for t in traces {
        if !labels.contains(&t.policy.as_str()) {
            labels.push(&t.policy);
        }
    }
    let mut rows = Vec::new();
    for label in labels {
        let group: Vec<&RegretTrace> = traces.iter().filter(|t| t.policy == label).collect();
        let n = group.len();
        for (i, &(round, _)) in group[0].points.iter().enumerate() {
            let values: Vec<f64> = group.iter().map(|t| t.points[i].1).collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(AggregateRow { policy: label.to_string(), round, mean_regret: mean, std_regret: std, n_reps: n });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            "[experiment]\nkind = mab\nhorizon = 300\nreplications = 3\nmaster_seed = 5\n[env]\nk = 4\n\
             [policy]\nname = oracle\n[policy]\nname = zi_ucb\n{extra}"
        );
        ExperimentConfig::parse(&text).unwrap()
    }

    #[test]
    fn checkpoints_log_spaced_and_bounded() {
        let r = checkpoint_rounds(20_000, 200);
        assert!(r.len() <= 200);
        assert_eq!(r[0], 1);
        assert_eq!(*r.last().unwrap(), 20_000);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(checkpoint_rounds(100, 200), (1..=100).collect::<Vec<_>>());
        assert_eq!(checkpoint_rounds(7, 1), vec![7]);
    }

    #[test]
    fn oracle_has_zero_regret() {
        let res = run_experiment(&cfg(""), Some(1)).unwrap();
        for t in res.traces_of("oracle") {
            assert!(t.points.iter().all(|p| p.1 == 0.0));
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let a = run_experiment(&cfg(""), Some(1)).unwrap();
        let b = run_experiment(&cfg(""), Some(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adding_a_policy_leaves_others_unchanged() {
        let a = run_experiment(&cfg(""), Some(2)).unwrap();
        let b = run_experiment(&cfg("[policy]\nname = naive_ucb\n"), Some(2)).unwrap();
        let pick = |r: &ExperimentResult| r.traces_of("zi_ucb").cloned().collect::<Vec<_>>();
        assert_eq!(pick(&a), pick(&b));
    }

    #[test]
    fn regret_decomposes_over_arms() {
        let res = run_experiment(&cfg(""), Some(2)).unwrap();
        for t in &res.traces {
            let total: f64 = t.pulls.iter().zip(&t.gaps).map(|(c, g)| *c as f64 * g).sum();
            assert!((total - t.final_regret()).abs() <= 1e-9 * (1.0 + total));
            assert_eq!(t.pulls.iter().sum::<u64>(), 300);
            assert!(t.points.windows(2).all(|w| w[1].1 >= w[0].1));
        }
    }

    #[test]
    fn single_replication_aggregate_is_the_trace() {
        let mut c = cfg("");
        c.replications = 1;
        let res = run_experiment(&c, Some(1)).unwrap();
        let trace = res.traces_of("zi_ucb").next().unwrap();
        let rows: Vec<_> = res.aggregate.iter().filter(|r| r.policy == "zi_ucb").collect();
        assert_eq!(rows.len(), trace.points.len());
        for (row, p) in rows.iter().zip(&trace.points) {
            assert_eq!((row.round, row.mean_regret, row.std_regret, row.n_reps), (p.0, p.1, 0.0, 1));
        }
    }
}
