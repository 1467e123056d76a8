//! Command-line entry points.
//!
//! Settings are layered: defaults, then `--config`, then the dedicated
//! flags, then each `--set` in order. Failures print one JSON line on
//! stderr and exit nonzero.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use hawkdove_core::analysis::{
    asymmetry_report, empirical_payoff_with, pure_nash, scripted_strategy, AsymmetryReport, NashResult,
    PayoffMatrix, RewardOrdering, SeedLabels, Strategy,
};
use hawkdove_core::rollout::rollout;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Settings, KEYS};
use crate::error::{io_at, Error, ErrorKind};
use crate::formats::{read_csv, read_json, write_json, EpisodeRecord, TrajectoryFile};
use crate::harness::{self, RunSummary};
use crate::plot;

#[derive(Debug, Parser)]
#[command(name = "hawkdove", version, about = "Two agents, one crossing: train, evaluate and analyse")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every seed; writes per-seed metrics, checkpoints and summary.json.
    Train(Common),
    /// Play greedy episodes with saved agents; writes eval.json.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Seed directory written by `train` (holds agent_a.* and agent_b.*).
        #[arg(long, value_name = "DIR")]
        checkpoint: PathBuf,
        /// Greedy episodes to play (default: eval_episodes).
        #[arg(long, value_name = "N")]
        episodes: Option<u32>,
    },
    /// Scripted strategy payoffs and pure Nash equilibria; writes payoff.json,
    /// payoff.txt, payoff.png and one trajectory per strategy pair.
    Payoff(Common),
    /// Asymmetry report over a training run; writes report.json and report.txt.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Run summary to read (default: OUT/summary.json).
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Render a trajectory (.json) or a metrics file (.csv) to OUT/<name>.png.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable, applied last and in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Seeds, `a..b` inclusive or a comma list.
    #[arg(long, value_name = "A..B")]
    pub seeds: Option<String>,
    /// Output directory; every file a command writes goes here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// parallel | perpendicular
    #[arg(long, value_name = "NAME")]
    pub scenario: Option<String>,
    /// Square grid side length.
    #[arg(long, value_name = "N")]
    pub size: Option<u32>,
}

impl Common {
    pub fn settings(&self) -> Result<Settings, Error> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        if let Some(v) = &self.scenario {
            s.set("scenario", v)?;
        }
        if let Some(n) = self.size {
            s.set("width", &n.to_string())?;
            s.set("height", &n.to_string())?;
        }
        if let Some(v) = &self.seeds {
            s.set("seeds", v)?;
        }
        if let Some(v) = &self.out {
            s.set("out", &v.to_string_lossy())?;
        }
        for pair in &self.set {
            s.apply_override(pair)?;
        }
        Ok(s)
    }

    pub fn resolve(&self) -> Result<RunConfig, Error> {
        self.settings()?.resolve()
    }
}

fn key_table() -> String {
    let mut t = String::from("Configuration keys (file lines or --set KEY=VALUE):\n");
    for (k, d, h) in KEYS {
        let _ = writeln!(t, "  {k:<18} {d:<13} {h}");
    }
    t
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let keys = key_table();
    let cmd = Cli::command()
        .after_help(keys.clone())
        .mut_subcommands(|c| c.after_help(keys.clone()));
    let parsed = cmd
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let msg = e.render().to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("bad usage");
            eprintln!("{}", Error::usage(first.trim_start_matches("error: ")).to_json_line());
            return 2;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            if e.kind == ErrorKind::Usage {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Train(common) => train(&common.resolve()?),
        Command::Eval {
            common,
            checkpoint,
            episodes,
        } => {
            let run = common.resolve()?;
            let summary = harness::evaluate(&checkpoint, &run, episodes.unwrap_or(run.eval_episodes))?;
            create_out(&run.output_dir)?;
            write_json(&run.output_dir.join("eval.json"), &summary)?;
            println!("{}", serde_json::to_string(&summary).expect("plain struct"));
            Ok(())
        }
        Command::Payoff(common) => payoff(&common.resolve()?).map(|_| ()),
        Command::Analyze { common, input } => {
            let run = common.resolve()?;
            let input = input.unwrap_or_else(|| run.output_dir.join("summary.json"));
            analyze(&input, &run.output_dir).map(|_| ())
        }
        Command::Plot { common, input } => {
            let run = common.resolve()?;
            plot_file(&input, &run.output_dir).map(|_| ())
        }
    }
}

fn create_out(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(io_at(dir))
}

fn train(run: &RunConfig) -> Result<(), Error> {
    let summary = harness::train(run)?;
    for s in &summary.seeds {
        match &s.error {
            Some(e) => println!("seed {:>4}  error: {e}", s.seed),
            None => println!(
                "seed {:>4}  {:>8} {:>8}  returns {:.3} {:.3}  {:.1}s",
                s.seed,
                s.labels[0].name(),
                s.labels[1].name(),
                s.returns[0],
                s.returns[1],
                s.wall_time_secs
            ),
        }
    }
    if let Some(r) = &summary.report {
        println!("asymmetric {}/{}", r.asymmetric, r.seeds.len());
    }
    let failures: Vec<_> = summary.seeds.iter().filter(|s| s.error.is_some()).collect();
    if !failures.is_empty() {
        return Err(Error::training(format!(
            "{} of {} seeds failed, first: seed {}: {}",
            failures.len(),
            summary.seeds.len(),
            failures[0].seed,
            failures[0].error.as_deref().unwrap_or("")
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffReport {
    pub scenario: String,
    pub width: u32,
    pub height: u32,
    pub matrix: PayoffMatrix,
    pub ordering: RewardOrdering,
    pub nash: NashResult,
}

pub fn payoff_text(r: &PayoffReport) -> String {
    let mut t = format!("{} {}x{}, {:?} returns\n", r.scenario, r.width, r.height, r.matrix.returns);
    let _ = writeln!(t, "{:<12}{:>22}{:>22}", "A \\ B", "straight", "avoid");
    for s0 in Strategy::ALL {
        let _ = write!(t, "{:<12}", s0.name());
        for s1 in Strategy::ALL {
            let p = r.matrix.get(s0, s1);
            let _ = write!(t, "{:>22}", format!("{:.4}, {:.4}", p[0], p[1]));
        }
        t.push('\n');
    }
    let o = &r.ordering;
    let _ = writeln!(
        t,
        "r_s {:.4} > r_a {:.4} > r_d {:.4}: {}",
        o.r_s,
        o.r_a,
        o.r_d,
        if o.holds { "holds" } else { "violated" }
    );
    let eq: Vec<String> = r
        .nash
        .equilibria
        .iter()
        .map(|e| format!("({}, {}){}", e.profile[0].name(), e.profile[1].name(), if e.weak { " weak" } else { "" }))
        .collect();
    let _ = writeln!(t, "pure equilibria: {}", if eq.is_empty() { "none".into() } else { eq.join(" ") });
    t
}

pub fn payoff(run: &RunConfig) -> Result<PayoffReport, Error> {
    let c = &run.scenario;
    let matrix = empirical_payoff_with(c, run.payoff_episodes, run.payoff_returns).map_err(Error::scenario)?;
    let report = PayoffReport {
        scenario: c.scenario.name().to_string(),
        width: c.width,
        height: c.height,
        ordering: matrix.ordering(),
        nash: pure_nash(&matrix),
        matrix,
    };
    let out = &run.output_dir;
    create_out(out)?;
    write_json(&out.join("payoff.json"), &report)?;
    let text = payoff_text(&report);
    std::fs::write(out.join("payoff.txt"), &text).map_err(io_at(&out.join("payoff.txt")))?;
    plot::render_payoff(&report.matrix).save(&out.join("payoff.png"))?;
    for s0 in Strategy::ALL {
        for s1 in Strategy::ALL {
            let mut a = scripted_strategy(s0, 0, c);
            let mut b = scripted_strategy(s1, 1, c);
            let trajectory = rollout(c, [&mut a, &mut b]).map_err(Error::training)?;
            let name = format!("traj_{}_{}.json", s0.name(), s1.name());
            write_json(
                &out.join(name),
                &TrajectoryFile {
                    scenario: c.clone(),
                    trajectory,
                },
            )?;
        }
    }
    print!("{text}");
    Ok(report)
}

pub fn report_text(r: &AsymmetryReport) -> String {
    let mut t = String::from("seed      agent_a   agent_b\n");
    for s in &r.seeds {
        let mark = if s.is_asymmetric() { "" } else { "  *" };
        let _ = writeln!(t, "{:<8}  {:<8}  {:<8}{mark}", s.seed, s.labels[0].name(), s.labels[1].name());
    }
    let _ = writeln!(
        t,
        "asymmetric {}/{} ({:.1}%), straight taken by a:{} b:{}{}",
        r.asymmetric,
        r.seeds.len(),
        100.0 * r.asymmetric_fraction,
        r.straight_split[0],
        r.straight_split[1],
        if r.collide { ", collisions present" } else { "" }
    );
    t
}

pub fn analyze(summary: &Path, out: &Path) -> Result<AsymmetryReport, Error> {
    let run: RunSummary = read_json(summary)?;
    let seeds: Vec<SeedLabels> = run
        .seeds
        .iter()
        .filter(|s| s.error.is_none())
        .map(|s| SeedLabels {
            seed: s.seed,
            labels: s.labels,
        })
        .collect();
    let report = asymmetry_report(&seeds)
        .map_err(|e| Error::parse(format!("{}: {e}", summary.display())))?;
    create_out(out)?;
    write_json(&out.join("report.json"), &report)?;
    let text = report_text(&report);
    std::fs::write(out.join("report.txt"), &text).map_err(io_at(&out.join("report.txt")))?;
    print!("{text}");
    Ok(report)
}

/// Renders `input` to `out/<stem>.png` and returns the image path. Nothing
/// is written when the input does not parse.
pub fn plot_file(input: &Path, out: &Path) -> Result<PathBuf, Error> {
    let stem = input
        .file_stem()
        .ok_or_else(|| Error::usage(format!("{} has no file name", input.display())))?;
    let canvas = match input.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let text = std::fs::read_to_string(input).map_err(io_at(input))?;
            let rows: Vec<EpisodeRecord> =
                read_csv(&text).map_err(|e| Error::parse(format!("{}: {}", input.display(), e.message)))?;
            plot::render_learning_curve(&rows)
                .map_err(|e| Error::parse(format!("{}: {}", input.display(), e.message)))?
        }
        Some("json") => {
            let f: TrajectoryFile = read_json(input)?;
            plot::render_trajectory(&f.scenario, &f.trajectory)
        }
        _ => {
            return Err(Error::usage(format!(
                "{}: expected a .csv metrics file or a .json trajectory",
                input.display()
            )))
        }
    };
    create_out(out)?;
    let path = out.join(stem).with_extension("png");
    canvas.save(&path)?;
    Ok(path)
}
