//! Text formats: Q-tables, per-episode metrics, evaluation rows and saved
//! trajectories.

use std::io::Write;
use std::path::Path;

use hawkdove_core::agents::{QTable, StateKey};
use hawkdove_core::analysis::{classify, Label};
use hawkdove_core::rollout::Trajectory;
use hawkdove_core::{Action, Cell, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_at, Error};

// ---- Q-table ----------------------------------------------------------

/// Sorted `x1 y1 x2 y2 action q` lines below a `# qtable W H` header.
/// `x2 y2` is `- -` once the other agent has left the grid. States in which
/// the owning agent has itself left are never queried and are not written.
pub fn write_qtable(table: &QTable) -> String {
    let mut rows: Vec<((i32, i32), (bool, i32, i32), usize, f64)> = table
        .entries()
        .filter_map(|(k, a, q)| {
            let own = k.own?;
            let other = k.other.map_or((true, 0, 0), |c| (false, c.x, c.y));
            Some(((own.x, own.y), other, a.index(), q))
        })
        .collect();
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut out = format!("# qtable {} {}\n", table.width(), table.height());
    for ((x1, y1), (gone, x2, y2), a, q) in rows {
        let other = if gone { "- -".to_string() } else { format!("{x2} {y2}") };
        out.push_str(&format!("{x1} {y1} {other} {} {q:?}\n", Action::ALL[a].name()));
    }
    out
}

pub fn read_qtable(text: &str) -> Result<QTable, Error> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    let dims: Vec<u32> = header
        .strip_prefix("# qtable ")
        .map(|r| r.split_whitespace().filter_map(|v| v.parse().ok()).collect())
        .unwrap_or_default();
    let [w, h] = dims[..] else {
        return Err(Error::parse("line 1: expected '# qtable WIDTH HEIGHT'"));
    };
    let mut table = QTable::new(w, h).map_err(|e| Error::parse(e.to_string()))?;
    for (n, line) in lines {
        let bad = |what: &str| Error::parse(format!("line {}: {what}", n + 1));
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let coord = |s: &str, limit: u32| -> Result<i32, Error> {
            s.parse::<i32>()
                .ok()
                .filter(|&v| v >= 0 && (v as u32) < limit)
                .ok_or_else(|| bad("coordinate out of range"))
        };
        let own = Cell::new(coord(f[0], w)?, coord(f[1], h)?);
        let other = match (f[2], f[3]) {
            ("-", "-") => None,
            (x, y) => Some(Cell::new(coord(x, w)?, coord(y, h)?)),
        };
        let action = Action::parse(f[4]).ok_or_else(|| bad("unknown action"))?;
        let q: f64 = f[5].parse().map_err(|_| bad("bad value"))?;
        if !q.is_finite() {
            return Err(bad("non-finite value"));
        }
        table.set(StateKey { own: Some(own), other }, action, q);
    }
    Ok(table)
}

// ---- metrics ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub return_a: f64,
    pub return_b: f64,
    pub length: usize,
    pub event_a: String,
    pub event_b: String,
}

impl EpisodeRecord {
    pub fn of(episode: u64, t: &Trajectory) -> Self {
        EpisodeRecord {
            episode,
            return_a: t.returns[0],
            return_b: t.returns[1],
            length: t.len(),
            event_a: t.terminal_event(0).name().to_string(),
            event_b: t.terminal_event(1).name().to_string(),
        }
    }
}

/// One greedy evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// Training episodes completed before this evaluation.
    pub episode: u64,
    pub index: u32,
    pub return_a: f64,
    pub return_b: f64,
    pub length: usize,
    pub collision: bool,
    pub path_a: usize,
    pub path_b: usize,
    pub label_a: String,
    pub label_b: String,
    pub extra_a: u32,
    pub extra_b: u32,
}

impl EvalRecord {
    pub fn of(episode: u64, index: u32, t: &Trajectory, config: &ScenarioConfig) -> Self {
        let a = classify(t, 0, config).expect("agent 0 exists");
        let b = classify(t, 1, config).expect("agent 1 exists");
        EvalRecord {
            episode,
            index,
            return_a: t.returns[0],
            return_b: t.returns[1],
            length: t.len(),
            collision: t.collided(),
            path_a: t.path_len(0),
            path_b: t.path_len(1),
            label_a: a.label.name().to_string(),
            label_b: b.label.name().to_string(),
            extra_a: a.extra_steps,
            extra_b: b.extra_steps,
        }
    }

    pub fn labels(&self) -> [Label; 2] {
        [&self.label_a, &self.label_b].map(|l| Label::parse(l).unwrap_or(Label::Fail))
    }
}

/// Incremental CSV writer with a header row.
pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
}

impl CsvSink<std::io::BufWriter<std::fs::File>> {
    pub fn create(path: &Path) -> Result<Self, Error> {
        let f = std::fs::File::create(path).map_err(io_at(path))?;
        Ok(CsvSink {
            inner: csv::Writer::from_writer(std::io::BufWriter::new(f)),
        })
    }
}

impl<W: Write> CsvSink<W> {
    pub fn from_writer(w: W) -> Self {
        CsvSink {
            inner: csv::Writer::from_writer(w),
        }
    }

    pub fn write<T: Serialize>(&mut self, row: &T) -> Result<(), Error> {
        self.inner.serialize(row).map_err(|e| Error::io(e.to_string()))
    }

    pub fn finish(mut self) -> Result<W, Error> {
        self.inner.flush().map_err(|e| Error::io(e.to_string()))?;
        self.inner.into_inner().map_err(|e| Error::io(e.to_string()))
    }
}

/// Parses a whole CSV; errors name the 1-based record.
pub fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, Error> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        out.push(rec.map_err(|e| Error::parse(format!("record {}: {e}", i + 1)))?);
    }
    Ok(out)
}

// ---- trajectories -----------------------------------------------------

/// A greedy episode together with the game it was played in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub scenario: ScenarioConfig,
    pub trajectory: Trajectory,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(io_at(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hawkdove_core::analysis::{scripted_strategy, Strategy};
    use hawkdove_core::rollout::rollout;
    use hawkdove_core::Scenario;

    #[test]
    fn qtable_text_round_trips_and_is_sorted() {
        let mut t = QTable::filled(5, 5, 0.25).unwrap();
        let k = StateKey {
            own: Some(Cell::new(4, 1)),
            other: None,
        };
        t.set(k, Action::Left, -0.1 / 3.0);
        let text = write_qtable(&t);
        let back = read_qtable(&text).unwrap();
        assert_eq!(back.get(k, Action::Left), -0.1 / 3.0);
        assert_eq!(back.get(k, Action::Up), 0.25);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# qtable 5 5");
        assert_eq!(lines[1], "0 0 0 0 up 0.25");
        assert_eq!(lines.len(), 1 + 25 * 26 * 5);
        assert!(text.contains("4 1 - - left -0.03333333333333333\n"));
        assert_eq!(write_qtable(&back), text);
    }

    #[test]
    fn bad_qtable_lines_are_located() {
        let e = read_qtable("# qtable 5 5\n0 0 - - up 1\n9 0 - - up 1\n").unwrap_err();
        assert!(e.message.starts_with("line 3"), "{e}");
        assert!(read_qtable("").is_err());
    }

    #[test]
    fn metrics_rows_round_trip() {
        let c = ScenarioConfig::square(Scenario::Parallel, 9).unwrap();
        let mut a = scripted_strategy(Strategy::Straight, 0, &c);
        let mut b = scripted_strategy(Strategy::Avoid, 1, &c);
        let t = rollout(&c, [&mut a, &mut b]).unwrap();
        let mut sink = CsvSink::from_writer(Vec::new());
        sink.write(&EpisodeRecord::of(1, &t)).unwrap();
        let text = String::from_utf8(sink.finish().unwrap()).unwrap();
        assert_eq!(
            text,
            "episode,return_a,return_b,length,event_a,event_b\n1,0.92,0.9,11,goal,goal\n"
        );
        let rows: Vec<EpisodeRecord> = read_csv(&text).unwrap();
        assert_eq!(rows[0], EpisodeRecord::of(1, &t));
        let e = EvalRecord::of(500, 0, &t, &c);
        assert_eq!(e.labels(), [Label::Straight, Label::Avoid]);
        assert!(read_csv::<EpisodeRecord>("episode,return_a\nx,1\n").unwrap_err().message.contains("record 1"));
    }
}
