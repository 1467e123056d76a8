//! Training and evaluation runs.
//!
//! Each seed trains a fresh pair of agents in its own directory
//! `seed_<n>/` below the output directory:
//!
//! - `metrics.csv`, one row per training episode
//! - `eval.csv`, one row per greedy evaluation episode
//! - `agent_a.*`, `agent_b.*`, final parameters plus a `.meta.json` sidecar
//! - `final.json`, the last greedy evaluation episode
//!
//! Seeds run in parallel on a pool capped by `HAWKDOVE_THREADS`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hawkdove_core::agents::{DqnAgent, TabularAgent};
use hawkdove_core::analysis::{asymmetry_report, classify, AsymmetryReport, Label, SeedLabels};
use hawkdove_core::rng::{stream, Stream};
use hawkdove_core::rollout::{run_episode, Learner, Mode, Trajectory};
use hawkdove_core::{Event, ScenarioConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{self, AgentMeta};
use crate::config::{AgentKind, RunConfig};
use crate::error::{io_at, Error};
use crate::formats::{read_qtable, write_json, write_qtable, CsvSink, EpisodeRecord, EvalRecord, TrajectoryFile};

pub const AGENT_NAMES: [&str; 2] = ["agent_a", "agent_b"];

/// Worker count: `HAWKDOVE_THREADS` if set, else the available cores.
pub fn thread_count() -> usize {
    std::env::var("HAWKDOVE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

/// An agent the harness knows how to build and persist.
pub trait Persist: Learner + Sized + Send {
    fn create(agent: usize, run: &RunConfig, config: &ScenarioConfig, seed: u64) -> Result<Self, Error>;
    fn save(&self, dir: &Path, seed: u64) -> Result<(), Error>;
    fn load(dir: &Path, agent: usize, run: &RunConfig, config: &ScenarioConfig) -> Result<Self, Error>;
}

fn meta_path(dir: &Path, agent: usize) -> PathBuf {
    dir.join(format!("{}.meta.json", AGENT_NAMES[agent]))
}

impl Persist for TabularAgent {
    fn create(agent: usize, run: &RunConfig, config: &ScenarioConfig, _seed: u64) -> Result<Self, Error> {
        TabularAgent::new(agent, config, run.tabular[agent]).map_err(Error::training)
    }

    fn save(&self, dir: &Path, seed: u64) -> Result<(), Error> {
        let path = dir.join(format!("{}.qtable", AGENT_NAMES[self.agent]));
        std::fs::write(&path, write_qtable(&self.table)).map_err(io_at(&path))?;
        let e = &self.params.epsilon;
        checkpoint::save_meta(
            &meta_path(dir, self.agent),
            &AgentMeta {
                agent: self.agent,
                kind: "tabular".into(),
                seed,
                env_steps: self.env_steps,
                train_steps: self.env_steps,
                epsilon: e.value(self.env_steps),
                eps_start: e.eps_start,
                eps_end: e.eps_end,
                eps_decay_steps: e.decay_steps,
            },
        )
    }

    fn load(dir: &Path, agent: usize, run: &RunConfig, config: &ScenarioConfig) -> Result<Self, Error> {
        let path = dir.join(format!("{}.qtable", AGENT_NAMES[agent]));
        let text = std::fs::read_to_string(&path).map_err(io_at(&path))?;
        let table = read_qtable(&text).map_err(|e| Error::checkpoint(format!("{}: {e}", path.display())))?;
        if (table.width(), table.height()) != (config.width, config.height) {
            return Err(Error::checkpoint(format!(
                "{}: table is {}x{}, scenario is {}x{}",
                path.display(),
                table.width(),
                table.height(),
                config.width,
                config.height
            )));
        }
        let mut a = TabularAgent::new(agent, config, run.tabular[agent]).map_err(Error::training)?;
        a.table = table;
        if let Ok(meta) = checkpoint::load_meta(&meta_path(dir, agent)) {
            a.env_steps = meta.env_steps;
        }
        Ok(a)
    }
}

impl Persist for DqnAgent {
    fn create(agent: usize, run: &RunConfig, config: &ScenarioConfig, seed: u64) -> Result<Self, Error> {
        let mut init = stream(seed, Stream::init(agent));
        DqnAgent::new(agent, config, run.dqn[agent], &mut init).map_err(Error::training)
    }

    fn save(&self, dir: &Path, seed: u64) -> Result<(), Error> {
        checkpoint::save(&dir.join(format!("{}.ckpt", AGENT_NAMES[self.agent])), &self.online)?;
        let e = &self.params.epsilon;
        checkpoint::save_meta(
            &meta_path(dir, self.agent),
            &AgentMeta {
                agent: self.agent,
                kind: "dqn".into(),
                seed,
                env_steps: self.env_steps,
                train_steps: self.train_steps,
                epsilon: e.value(self.env_steps),
                eps_start: e.eps_start,
                eps_end: e.eps_end,
                eps_decay_steps: e.decay_steps,
            },
        )
    }

    fn load(dir: &Path, agent: usize, run: &RunConfig, config: &ScenarioConfig) -> Result<Self, Error> {
        let path = dir.join(format!("{}.ckpt", AGENT_NAMES[agent]));
        let net = checkpoint::load(&path)?;
        let mut a = Self::create(agent, run, config, 0)?;
        if net.input_shape() != a.online.input_shape() || net.specs() != a.online.specs() {
            return Err(Error::checkpoint(format!(
                "{}: network {:?} does not fit the scenario input {:?}",
                path.display(),
                net.input_shape(),
                a.online.input_shape()
            )));
        }
        a.online = net.clone();
        a.target = net;
        if let Ok(meta) = checkpoint::load_meta(&meta_path(dir, agent)) {
            a.env_steps = meta.env_steps;
            a.train_steps = meta.train_steps;
        }
        Ok(a)
    }
}

/// Outcome of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    /// Labels of the final greedy evaluation episode.
    pub labels: [Label; 2],
    pub returns: [f64; 2],
    pub collision: bool,
    pub both_goal: bool,
    pub asymmetric: bool,
    pub wall_time_secs: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: std::collections::BTreeMap<String, String>,
    pub seeds: Vec<SeedSummary>,
    pub report: Option<AsymmetryReport>,
    pub wall_time_secs: f64,
}

/// Greedy episodes of both learners. With deterministic policies these are
/// all the same episode; the count is kept for stochastic extensions.
pub fn evaluate_pair<L: Learner>(
    config: &ScenarioConfig,
    agents: &mut [L; 2],
    episodes: u32,
) -> Result<Vec<Trajectory>, Error> {
    let mut rngs = [stream(config.seed, Stream::Eval), stream(config.seed, Stream::Eval)];
    (0..episodes)
        .map(|_| run_episode(config, agents, Mode::Eval, &mut rngs).map_err(Error::training))
        .collect()
}

/// Trains one seed to completion, writing its files under `dir`.
pub fn train_seed<L: Persist>(run: &RunConfig, seed: u64, dir: &Path) -> Result<SeedSummary, Error> {
    let start = Instant::now();
    std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mut config = run.scenario.clone();
    config.seed = seed;
    let mut agents = [L::create(0, run, &config, seed)?, L::create(1, run, &config, seed)?];
    let mut rngs = [stream(seed, Stream::AgentA), stream(seed, Stream::AgentB)];
    let mut metrics = CsvSink::create(&dir.join("metrics.csv"))?;
    let mut evals = CsvSink::create(&dir.join("eval.csv"))?;
    let mut last: Option<Trajectory> = None;
    for episode in 1..=run.episodes {
        let t = run_episode(&config, &mut agents, Mode::Train, &mut rngs).map_err(Error::training)?;
        if t.recompute_returns() != t.returns {
            return Err(Error::training(format!("episode {episode}: returns disagree with the step records")));
        }
        metrics.write(&EpisodeRecord::of(episode, &t))?;
        if episode % run.eval_every == 0 || episode == run.episodes {
            for (i, e) in evaluate_pair(&config, &mut agents, run.eval_episodes)?.into_iter().enumerate() {
                evals.write(&EvalRecord::of(episode, i as u32, &e, &config))?;
                last = Some(e);
            }
        }
    }
    metrics.finish()?;
    evals.finish()?;
    for a in &agents {
        a.save(dir, seed)?;
    }
    let last = last.expect("the final episode always evaluates");
    let labels = [0, 1].map(|i| classify(&last, i, &config).expect("two agents").label);
    write_json(
        &dir.join("final.json"),
        &TrajectoryFile {
            scenario: config.clone(),
            trajectory: last.clone(),
        },
    )?;
    Ok(SeedSummary {
        seed,
        labels,
        returns: last.returns,
        collision: last.collided(),
        both_goal: last.both_reached_goal(),
        asymmetric: SeedLabels { seed, labels }.is_asymmetric(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        error: None,
    })
}

fn failed(seed: u64, e: &Error) -> SeedSummary {
    SeedSummary {
        seed,
        labels: [Label::Fail; 2],
        returns: [0.0; 2],
        collision: false,
        both_goal: false,
        asymmetric: false,
        wall_time_secs: 0.0,
        error: Some(e.message.clone()),
    }
}

/// Trains every seed of `run` and writes `summary.json`.
pub fn train(run: &RunConfig) -> Result<RunSummary, Error> {
    let start = Instant::now();
    let out = &run.output_dir;
    std::fs::create_dir_all(out).map_err(io_at(out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::training(e.to_string()))?;
    let seeds: Vec<SeedSummary> = pool.install(|| {
        run.seeds
            .par_iter()
            .map(|&seed| {
                let dir = seed_dir(out, seed);
                let r = match run.agent {
                    AgentKind::Tabular => train_seed::<TabularAgent>(run, seed, &dir),
                    AgentKind::Dqn => train_seed::<DqnAgent>(run, seed, &dir),
                };
                r.unwrap_or_else(|e| failed(seed, &e))
            })
            .collect()
    });
    let labels: Vec<SeedLabels> = seeds
        .iter()
        .filter(|s| s.error.is_none())
        .map(|s| SeedLabels {
            seed: s.seed,
            labels: s.labels,
        })
        .collect();
    let summary = RunSummary {
        config: run.echo(),
        report: asymmetry_report(&labels).ok(),
        seeds,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: u32,
    pub mean_return: [f64; 2],
    pub mean_path_len: [f64; 2],
    /// Terminal event counts per agent, keyed by event name.
    pub events: [std::collections::BTreeMap<String, u32>; 2],
    pub labels: [Label; 2],
    pub collisions: u32,
}

/// Loads the agents saved in `dir` and plays `episodes` greedy episodes.
pub fn evaluate(dir: &Path, run: &RunConfig, episodes: u32) -> Result<EvalSummary, Error> {
    if dir.as_os_str().is_empty() {
        return Err(Error::checkpoint("empty checkpoint path"));
    }
    if !dir.is_dir() {
        return Err(Error::checkpoint(format!("{} is not a checkpoint directory", dir.display())));
    }
    if episodes == 0 {
        return Err(Error::usage("need at least one evaluation episode"));
    }
    let config = &run.scenario;
    let trajectories = match run.agent {
        AgentKind::Tabular => {
            let a0 = TabularAgent::load(dir, 0, run, config)?;
            let a1 = TabularAgent::load(dir, 1, run, config)?;
            evaluate_pair(config, &mut [a0, a1], episodes)?
        }
        AgentKind::Dqn => {
            let a0 = DqnAgent::load(dir, 0, run, config)?;
            let a1 = DqnAgent::load(dir, 1, run, config)?;
            evaluate_pair(config, &mut [a0, a1], episodes)?
        }
    };
    Ok(summarise(&trajectories, config))
}

pub fn summarise(trajectories: &[Trajectory], config: &ScenarioConfig) -> EvalSummary {
    let n = trajectories.len().max(1) as f64;
    let mut events: [std::collections::BTreeMap<String, u32>; 2] = Default::default();
    let mut mean_return = [0.0; 2];
    let mut mean_path_len = [0.0; 2];
    for t in trajectories {
        for i in 0..2 {
            mean_return[i] += t.returns[i] / n;
            mean_path_len[i] += t.path_len(i) as f64 / n;
            let e = t.terminal_event(i);
            if e != Event::None {
                *events[i].entry(e.name().to_string()).or_default() += 1;
            }
        }
    }
    let labels = trajectories
        .last()
        .map(|t| [0, 1].map(|i| classify(t, i, config).expect("two agents").label))
        .unwrap_or([Label::Fail; 2]);
    EvalSummary {
        episodes: trajectories.len() as u32,
        mean_return,
        mean_path_len,
        events,
        labels,
        collisions: trajectories.iter().filter(|t| t.collided()).count() as u32,
    }
}
