//! Flat `key = value` run configuration.
//!
//! Every key has a default; `auto` defers to a value derived from the rest of
//! the configuration. [`Settings::resolve`] turns the strings into a
//! [`RunConfig`] and [`RunConfig::echo`] lists every effective value.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hawkdove_core::agents::{DqnParams, EpsilonSchedule, ReplayKind, TabularParams, TieBreak};
use hawkdove_core::analysis::ReturnKind;
use hawkdove_core::{Cell, Edge, Scenario, ScenarioConfig};

use crate::error::Error;

/// `(key, default, help)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("scenario", "parallel", "parallel | perpendicular"),
    ("width", "9", "grid width in cells"),
    ("height", "auto", "grid height in cells (auto: same as width)"),
    ("max_steps", "auto", "episode frame limit (auto: 2*(width+height)+16)"),
    ("frame_stack", "4", "frames stacked into a DQN observation"),
    ("spawn_a", "auto", "x,y of agent A's spawn (auto: edge midpoint)"),
    ("spawn_b", "auto", "x,y of agent B's spawn"),
    ("target_a", "auto", "north | south | east | west"),
    ("target_b", "auto", "north | south | east | west"),
    ("r_goal", "1.0", "reward for crossing the target edge"),
    ("r_collide", "-1.0", "reward to both agents on a collision"),
    ("r_wrong", "-1.0", "reward for crossing any other edge"),
    ("r_step", "auto", "per-frame penalty (auto: -0.01, or -0.001 where that would dominate the goal)"),
    ("gamma", "0.99", "discount factor"),
    ("agent", "tabular", "tabular | dqn"),
    ("episodes", "auto", "training episodes per seed (auto: 50000 tabular, 3000 dqn)"),
    ("eval_every", "500", "episodes between greedy evaluations"),
    ("eval_episodes", "5", "greedy episodes per evaluation"),
    ("seeds", "1", "a..b (inclusive) or comma list"),
    ("eps_start", "1.0", "initial exploration rate"),
    ("eps_end", "0.05", "final exploration rate"),
    ("eps_decay_steps", "30000", "environment steps of linear decay"),
    ("tie_break", "lowest", "lowest | random"),
    ("learning_rate", "auto", "both agents (auto: 0.1 tabular, 0.001 dqn)"),
    ("learning_rate_a", "auto", "agent A (auto: learning_rate)"),
    ("learning_rate_b", "auto", "agent B (auto: learning_rate)"),
    ("initial_q", "auto", "start Q-value: tabular table entries, dqn output bias (auto: straight-run return for tabular, none for dqn)"),
    ("momentum", "0", "SGD momentum, 0 for plain SGD"),
    ("capacity", "50000", "replay buffer capacity"),
    ("batch_size", "32", "replay batch size"),
    ("sync_period", "500", "train steps between target-network syncs"),
    ("train_ratio", "1", "train steps per training round"),
    ("train_every", "1", "environment steps between training rounds"),
    ("learning_starts", "auto", "replay size before training (auto: batch_size)"),
    ("replay", "uniform", "uniform | prioritized"),
    ("priority_alpha", "0.6", "priority exponent for prioritized replay"),
    ("payoff_episodes", "1", "episodes per strategy pair in payoff reports"),
    ("payoff_returns", "undiscounted", "undiscounted | discounted"),
    ("out", "runs", "output directory"),
];

pub const DQN_EPISODES: u64 = 3000;
pub const TABULAR_EPISODES: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Tabular,
    Dqn,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Tabular => "tabular",
            AgentKind::Dqn => "dqn",
        }
    }
}

/// Raw settings, one string per known key.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            values: KEYS.iter().map(|(k, d, _)| (*k, d.to_string())).collect(),
        }
    }
}

fn known(key: &str) -> Option<&'static str> {
    KEYS.iter().map(|(k, _, _)| *k).find(|k| *k == key)
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let k = known(key).ok_or_else(|| Error::config(format!("unknown key '{key}'")))?;
        self.values.insert(k, value.trim().to_string());
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), Error> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override '{pair}' is not key=value")))?;
        self.set(k.trim(), v)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no key {key}"))
    }

    pub fn parse_str(&mut self, text: &str, origin: &str) -> Result<(), Error> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("{origin}:{}: expected key = value", n + 1))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| Error::config(format!("{origin}:{}: {}", n + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("cannot read config {}: {e}", path.display())))?;
        let mut s = Settings::default();
        s.parse_str(&text, &path.display().to_string())?;
        Ok(s)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T, Error> {
        let v = self.get(key);
        v.parse()
            .map_err(|_| Error::config(format!("{key} = '{v}' is not a valid number")))
    }

    fn auto_or<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        if self.get(key) == "auto" {
            Ok(None)
        } else {
            self.num(key).map(Some)
        }
    }

    fn cell(&self, key: &str) -> Result<Option<Cell>, Error> {
        let v = self.get(key);
        if v == "auto" {
            return Ok(None);
        }
        let bad = || Error::config(format!("{key} = '{v}' is not x,y"));
        let (x, y) = v.split_once(',').ok_or_else(bad)?;
        Ok(Some(Cell::new(
            x.trim().parse().map_err(|_| bad())?,
            y.trim().parse().map_err(|_| bad())?,
        )))
    }

    fn edge(&self, key: &str) -> Result<Option<Edge>, Error> {
        let v = self.get(key);
        if v == "auto" {
            return Ok(None);
        }
        Edge::parse(v)
            .map(Some)
            .ok_or_else(|| Error::config(format!("{key} = '{v}' is not an edge")))
    }

    /// `auto`, one value for both agents, or `a,b`.
    fn initial_q(&self) -> Result<[Option<f64>; 2], Error> {
        let v = self.get("initial_q");
        if v == "auto" {
            return Ok([None, None]);
        }
        let bad = || Error::config(format!("initial_q = '{v}' is not auto, q or qa,qb"));
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        Ok(match v.split_once(',') {
            Some((a, b)) => [Some(parse(a)?), Some(parse(b)?)],
            None => [Some(parse(v)?); 2],
        })
    }

    pub fn scenario(&self) -> Result<ScenarioConfig, Error> {
        let kind = Scenario::parse(self.get("scenario"))
            .ok_or_else(|| Error::config(format!("unknown scenario '{}'", self.get("scenario"))))?;
        let width: u32 = self.num("width")?;
        let height: u32 = self.auto_or("height")?.unwrap_or(width);
        let mut c = ScenarioConfig::new(kind, width.max(5), height.max(5)).map_err(Error::scenario)?;
        c.width = width;
        c.height = height;
        if let Some(m) = self.auto_or("max_steps")? {
            c.max_steps = m;
        }
        c.frame_stack = self.num("frame_stack")?;
        for (i, (s, t)) in [("spawn_a", "target_a"), ("spawn_b", "target_b")].into_iter().enumerate() {
            if let Some(cell) = self.cell(s)? {
                c.spawn[i] = cell;
            }
            if let Some(edge) = self.edge(t)? {
                c.target_edge[i] = edge;
            }
        }
        c.reward.r_goal = self.num("r_goal")?;
        c.reward.r_collide = self.num("r_collide")?;
        c.reward.r_wrong = self.num("r_wrong")?;
        if let Some(r) = self.auto_or("r_step")? {
            c.reward.r_step = r;
        }
        c.reward.gamma = self.num("gamma")?;
        c.validate().map_err(Error::scenario)?;
        Ok(c)
    }

    pub fn resolve(&self) -> Result<RunConfig, Error> {
        let scenario = self.scenario()?;
        let agent = match self.get("agent") {
            "tabular" => AgentKind::Tabular,
            "dqn" => AgentKind::Dqn,
            other => return Err(Error::config(format!("unknown agent kind '{other}'"))),
        };
        let episodes = self.auto_or("episodes")?.unwrap_or(match agent {
            AgentKind::Tabular => TABULAR_EPISODES,
            AgentKind::Dqn => DQN_EPISODES,
        });
        let epsilon = EpsilonSchedule {
            eps_start: self.num("eps_start")?,
            eps_end: self.num("eps_end")?,
            decay_steps: self.num("eps_decay_steps")?,
        };
        let tie_break = match self.get("tie_break") {
            "lowest" => TieBreak::Lowest,
            "random" => TieBreak::Random,
            other => return Err(Error::config(format!("unknown tie_break '{other}'"))),
        };
        let lr = self.auto_or::<f64>("learning_rate")?.unwrap_or(match agent {
            AgentKind::Tabular => TabularParams::default().learning_rate,
            AgentKind::Dqn => DqnParams::default().learning_rate,
        });
        let lrs = [
            self.auto_or("learning_rate_a")?.unwrap_or(lr),
            self.auto_or("learning_rate_b")?.unwrap_or(lr),
        ];
        let gamma = scenario.reward.gamma;
        let initial_q = self.initial_q()?;
        let tabular = [0, 1].map(|i| TabularParams {
            learning_rate: lrs[i],
            gamma,
            epsilon,
            tie_break,
            initial_q: initial_q[i],
        });
        let batch_size: usize = self.num("batch_size")?;
        let dqn_base = DqnParams {
            capacity: self.num("capacity")?,
            batch_size,
            sync_period: self.num("sync_period")?,
            learning_rate: lr,
            momentum: self.num("momentum")?,
            gamma,
            epsilon,
            train_ratio: self.num("train_ratio")?,
            train_every: self.num("train_every")?,
            learning_starts: self.auto_or("learning_starts")?.unwrap_or(batch_size),
            tie_break,
            replay: match self.get("replay") {
                "uniform" => ReplayKind::Uniform,
                "prioritized" => ReplayKind::Prioritized {
                    alpha: self.num("priority_alpha")?,
                },
                other => return Err(Error::config(format!("unknown replay '{other}'"))),
            },
            initial_q: None,
        };
        let dqn = [0, 1].map(|i| DqnParams {
            learning_rate: lrs[i],
            initial_q: initial_q[i],
            ..dqn_base
        });
        for p in &tabular {
            p.validate().map_err(|e| Error::config(e.to_string()))?;
        }
        for p in &dqn {
            p.validate().map_err(|e| Error::config(e.to_string()))?;
        }
        let seeds = parse_seeds(self.get("seeds"))?;
        let run = RunConfig {
            scenario,
            agent,
            tabular,
            dqn,
            episodes,
            eval_every: self.num("eval_every")?,
            eval_episodes: self.num("eval_episodes")?,
            seeds,
            output_dir: PathBuf::from(self.get("out")),
            payoff_episodes: self.num("payoff_episodes")?,
            payoff_returns: match self.get("payoff_returns") {
                "undiscounted" => ReturnKind::Undiscounted,
                "discounted" => ReturnKind::Discounted,
                other => return Err(Error::config(format!("unknown payoff_returns '{other}'"))),
            },
            priority_alpha: self.num("priority_alpha")?,
        };
        run.validate()?;
        Ok(run)
    }
}

/// `a..b` inclusive, or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::config(format!("seeds '{s}' is neither a..b nor a list"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(Error::config(format!("seed range '{s}' is empty")));
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    Ok(seeds)
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub agent: AgentKind,
    pub tabular: [TabularParams; 2],
    pub dqn: [DqnParams; 2],
    pub episodes: u64,
    pub eval_every: u64,
    pub eval_episodes: u32,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub payoff_episodes: u32,
    pub payoff_returns: ReturnKind,
    /// Kept for the echo even under uniform replay.
    pub priority_alpha: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.episodes == 0 {
            return Err(Error::config("episodes must be at least 1"));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return Err(Error::config("eval_every and eval_episodes must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("no seeds"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if self.payoff_episodes == 0 {
            return Err(Error::config("payoff_episodes must be at least 1"));
        }
        Ok(())
    }

    /// Every effective value under its key, `auto`s resolved.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let c = &self.scenario;
        let r = &c.reward;
        let t = &self.tabular[0];
        let d = &self.dqn[0];
        let cell = |c: Cell| format!("{},{}", c.x, c.y);
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let lr = |i: usize| match self.agent {
            AgentKind::Tabular => self.tabular[i].learning_rate,
            AgentKind::Dqn => self.dqn[i].learning_rate,
        };
        let pairs: Vec<(&str, String)> = vec![
            ("scenario", c.scenario.name().to_string()),
            ("width", c.width.to_string()),
            ("height", c.height.to_string()),
            ("max_steps", c.max_steps.to_string()),
            ("frame_stack", c.frame_stack.to_string()),
            ("spawn_a", cell(c.spawn[0])),
            ("spawn_b", cell(c.spawn[1])),
            ("target_a", c.target_edge[0].name().to_string()),
            ("target_b", c.target_edge[1].name().to_string()),
            ("r_goal", r.r_goal.to_string()),
            ("r_collide", r.r_collide.to_string()),
            ("r_wrong", r.r_wrong.to_string()),
            ("r_step", r.r_step.to_string()),
            ("gamma", r.gamma.to_string()),
            ("agent", self.agent.name().to_string()),
            ("episodes", self.episodes.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("seeds", seeds),
            ("eps_start", t.epsilon.eps_start.to_string()),
            ("eps_end", t.epsilon.eps_end.to_string()),
            ("eps_decay_steps", t.epsilon.decay_steps.to_string()),
            (
                "tie_break",
                match t.tie_break {
                    TieBreak::Lowest => "lowest",
                    TieBreak::Random => "random",
                }
                .to_string(),
            ),
            ("learning_rate", lr(0).to_string()),
            ("learning_rate_a", lr(0).to_string()),
            ("learning_rate_b", lr(1).to_string()),
            ("initial_q", {
                let q = |i: usize| {
                    let p = &self.tabular[i];
                    p.initial_q
                        .unwrap_or_else(|| hawkdove_core::agents::straight_line_value(i, c, p.gamma))
                };
                format!("{},{}", q(0), q(1))
            }),
            ("momentum", d.momentum.to_string()),
            ("capacity", d.capacity.to_string()),
            ("batch_size", d.batch_size.to_string()),
            ("sync_period", d.sync_period.to_string()),
            ("train_ratio", d.train_ratio.to_string()),
            ("train_every", d.train_every.to_string()),
            ("learning_starts", d.learning_starts.to_string()),
            (
                "replay",
                match d.replay {
                    ReplayKind::Uniform => "uniform",
                    ReplayKind::Prioritized { .. } => "prioritized",
                }
                .to_string(),
            ),
            (
                "priority_alpha",
                match d.replay {
                    ReplayKind::Prioritized { alpha } => alpha.to_string(),
                    ReplayKind::Uniform => self.priority_alpha.to_string(),
                },
            ),
            ("payoff_episodes", self.payoff_episodes.to_string()),
            (
                "payoff_returns",
                match self.payoff_returns {
                    ReturnKind::Undiscounted => "undiscounted",
                    ReturnKind::Discounted => "discounted",
                }
                .to_string(),
            ),
            ("out", self.output_dir.display().to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_the_nine_by_nine_parallel_game() {
        let run = Settings::default().resolve().unwrap();
        assert_eq!(run.scenario, ScenarioConfig::square(Scenario::Parallel, 9).unwrap());
        assert_eq!(run.episodes, TABULAR_EPISODES);
        assert_eq!(run.tabular[0].learning_rate, 0.1);
        assert_eq!(run.seeds, vec![1]);
    }

    #[test]
    fn file_and_overrides() {
        let mut s = Settings::default();
        s.parse_str("# comment\nscenario = perpendicular\nwidth = 13 # trailing\nagent=dqn\n", "t.cfg")
            .unwrap();
        s.apply_override("seeds=3..5").unwrap();
        s.apply_override("learning_rate_b=0.01").unwrap();
        let run = s.resolve().unwrap();
        assert_eq!(run.scenario.scenario, Scenario::Perpendicular);
        assert_eq!((run.scenario.width, run.scenario.height), (13, 13));
        assert_eq!(run.seeds, vec![3, 4, 5]);
        assert_eq!(run.dqn[0].learning_rate, 1e-3);
        assert_eq!(run.dqn[1].learning_rate, 0.01);
        assert_eq!(run.episodes, DQN_EPISODES);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let mut s = Settings::default();
        let e = s.parse_str("widht = 9\n", "x.cfg").unwrap_err();
        assert!(e.message.contains("x.cfg:1") && e.message.contains("widht"), "{e}");
        assert!(s.apply_override("nope=1").is_err());
        assert!(s.apply_override("width").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut s = Settings::default();
        s.apply_override("scenario=perpendicular").unwrap();
        s.apply_override("initial_q=0.5").unwrap();
        let run = s.resolve().unwrap();
        let mut again = Settings::default();
        for (k, v) in run.echo() {
            again.set(&k, &v).unwrap();
        }
        assert_eq!(again.resolve().unwrap(), run);
        // Automatic values come back as explicit ones with the same effect.
        let auto = Settings::default().resolve().unwrap();
        let echo = auto.echo();
        let q: Vec<f64> = echo["initial_q"].split(',').map(|v| v.parse().unwrap()).collect();
        assert!((q[0] - 0.8454).abs() < 1e-4 && q[0] == q[1], "{q:?}");
    }

    #[test]
    fn invalid_values_name_the_problem() {
        let mut s = Settings::default();
        s.set("width", "3").unwrap();
        assert!(s.resolve().unwrap_err().message.contains("too small"));
        assert!(parse_seeds("5..2").is_err());
        assert_eq!(parse_seeds("4, 2").unwrap(), vec![4, 2]);
    }
}
