//! Deterministic raster plots written as PNG.
//!
//! Everything is drawn with integer arithmetic on an RGB buffer, so the
//! same input always yields the same bytes.

use std::path::Path;

use hawkdove_core::analysis::{pure_nash, PayoffMatrix, Strategy};
use hawkdove_core::rollout::Trajectory;
use hawkdove_core::{Action, Cell, Edge, ScenarioConfig};

use crate::error::{io_at, Error};
use crate::formats::EpisodeRecord;

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];
pub const BLACK: Rgb = [0, 0, 0];
pub const GRID: Rgb = [210, 210, 210];
pub const AXIS: Rgb = [120, 120, 120];
/// Agent A and agent B.
pub const AGENT: [Rgb; 2] = [[214, 39, 40], [31, 119, 180]];
const PALE: [Rgb; 2] = [[250, 200, 200], [190, 215, 240]];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        let pixels = fill.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Canvas { width, height, pixels }
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, x: i64, y: i64, c: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    pub fn rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgb) {
        for y in y0.min(y1)..=y0.max(y1) {
            for x in x0.min(x1)..=x0.max(x1) {
                self.put(x, y, c);
            }
        }
    }

    pub fn outline(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, thick: i64, c: Rgb) {
        for k in 0..thick {
            self.line(x0 + k, y0 + k, x1 - k, y0 + k, c);
            self.line(x0 + k, y1 - k, x1 - k, y1 - k, c);
            self.line(x0 + k, y0 + k, x0 + k, y1 - k, c);
            self.line(x1 - k, y0 + k, x1 - k, y1 - k, c);
        }
    }

    /// Bresenham line.
    pub fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgb) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn thick_line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, half: i64, c: Rgb) {
        for o in -half..=half {
            if (x1 - x0).abs() >= (y1 - y0).abs() {
                self.line(x0, y0 + o, x1, y1 + o, c);
            } else {
                self.line(x0 + o, y0, x1 + o, y1, c);
            }
        }
    }

    /// Axis-aligned arrow from `(x0, y0)` to `(x1, y1)`.
    pub fn arrow(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, head: i64, c: Rgb) {
        self.thick_line(x0, y0, x1, y1, (head / 4).max(0), c);
        let (ux, uy) = ((x1 - x0).signum(), (y1 - y0).signum());
        // Filled triangle: rows perpendicular to the direction, shrinking to the tip.
        for k in 0..=head {
            let (bx, by) = (x1 - ux * (head - k), y1 - uy * (head - k));
            let w = (head - k) / 2;
            for o in -w..=w {
                self.put(bx - uy * o, by + ux * o, c);
            }
        }
    }

    pub fn disc(&mut self, cx: i64, cy: i64, r: i64, c: Rgb) {
        for y in -r..=r {
            for x in -r..=r {
                if x * x + y * y <= r * r {
                    self.put(cx + x, cy + y, c);
                }
            }
        }
    }

    pub fn cross(&mut self, cx: i64, cy: i64, r: i64, c: Rgb) {
        for o in -1..=1 {
            self.line(cx - r + o, cy - r, cx + r + o, cy + r, c);
            self.line(cx - r + o, cy + r, cx + r + o, cy - r, c);
        }
    }

    pub fn to_png(&self) -> Result<Vec<u8>, Error> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_compression(png::Compression::Balanced);
            let mut w = enc.write_header().map_err(|e| Error::io(e.to_string()))?;
            w.write_image_data(&self.pixels).map_err(|e| Error::io(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let bytes = self.to_png()?;
        std::fs::write(path, bytes).map_err(io_at(path))
    }
}

/// Pixel geometry of a grid drawing.
struct Layout {
    cell: i64,
    margin: i64,
}

impl Layout {
    fn center(&self, c: Cell) -> (i64, i64) {
        (
            self.margin + c.x as i64 * self.cell + self.cell / 2,
            self.margin + c.y as i64 * self.cell + self.cell / 2,
        )
    }
}

fn edge_strip(cv: &mut Canvas, l: &Layout, config: &ScenarioConfig, edge: Edge, c: Rgb) {
    let (w, h) = (config.width as i64 * l.cell, config.height as i64 * l.cell);
    let (m, t) = (l.margin, l.margin / 2);
    match edge {
        Edge::North => cv.rect(m, m - t, m + w - 1, m - 2, c),
        Edge::South => cv.rect(m, m + h + 1, m + w - 1, m + h + t - 1, c),
        Edge::West => cv.rect(m - t, m, m - 2, m + h - 1, c),
        Edge::East => cv.rect(m + w + 1, m, m + w + t - 1, m + h - 1, c),
    }
}

/// Grid, target edges (coloured strips), spawns (squares) and both agents'
/// moves as arrows. Waits are dots, a collision is a black cross.
pub fn render_trajectory(config: &ScenarioConfig, t: &Trajectory) -> Canvas {
    let longest = config.width.max(config.height) as i64;
    let cell = (640 / longest).clamp(6, 48);
    let l = Layout { cell, margin: cell };
    let (w, h) = (config.width as i64 * cell, config.height as i64 * cell);
    let mut cv = Canvas::new((w + 2 * cell) as u32, (h + 2 * cell) as u32, WHITE);
    for i in 0..=config.width as i64 {
        cv.line(l.margin + i * cell, l.margin, l.margin + i * cell, l.margin + h, GRID);
    }
    for j in 0..=config.height as i64 {
        cv.line(l.margin, l.margin + j * cell, l.margin + w, l.margin + j * cell, GRID);
    }
    for i in 0..2 {
        edge_strip(&mut cv, &l, config, config.target_edge[i], AGENT[i]);
        let (x, y) = l.center(config.spawn[i]);
        let s = cell / 3;
        cv.rect(x - s, y - s, x + s, y + s, PALE[i]);
    }
    let head = (cell / 4).max(2);
    for rec in &t.steps {
        for i in 0..2 {
            if !rec.state.is_active(i) {
                continue;
            }
            let Some(from) = rec.state.pos[i] else { continue };
            // Each agent keeps to its own side of the cell centre so paths
            // that share a row stay readable.
            let side = if i == 0 { -(cell / 8) } else { cell / 8 };
            let (x0, y0) = l.center(from);
            let a = rec.actions[i];
            let d = a.delta();
            let (ox, oy) = if d.0 != 0 { (0, side) } else { (side, 0) };
            if a == Action::Stay {
                cv.disc(x0, y0, (cell / 8).max(1), AGENT[i]);
                continue;
            }
            let (x1, y1) = l.center(from.shifted(d));
            let (x0, y0, x1, y1) = (x0 + ox, y0 + oy, x1 + ox, y1 + oy);
            // Stop short of the next centre so consecutive arrows stay apart.
            let (dx, dy) = ((x1 - x0).signum(), (y1 - y0).signum());
            let inset = cell / 5;
            cv.arrow(x0 + dx * inset, y0 + dy * inset, x1 - dx * inset, y1 - dy * inset, head, AGENT[i]);
        }
    }
    if t.collided() {
        if let Some(c) = t.final_state.pos[0] {
            let (x, y) = l.center(c);
            cv.cross(x, y, cell / 3, BLACK);
        }
    }
    cv
}

/// Per-episode returns of both agents, binned to the plot width and drawn
/// as mean lines, with the zero line and the ±1 band for scale.
pub fn render_learning_curve(rows: &[EpisodeRecord]) -> Result<Canvas, Error> {
    if rows.is_empty() {
        return Err(Error::parse("metrics file has no episodes"));
    }
    let (pw, ph, m) = (800i64, 400i64, 30i64);
    let mut cv = Canvas::new((pw + 2 * m) as u32, (ph + 2 * m) as u32, WHITE);
    let lo = rows.iter().map(|r| r.return_a.min(r.return_b)).fold(-1.0f64, f64::min);
    let hi = rows.iter().map(|r| r.return_a.max(r.return_b)).fold(1.0f64, f64::max);
    let ypix = |v: f64| m + ((hi - v) / (hi - lo) * (ph - 1) as f64).round() as i64;
    cv.outline(m - 1, m - 1, m + pw, m + ph, 1, AXIS);
    for v in [-1.0, 0.0, 1.0] {
        let y = ypix(v);
        let mut x = m;
        while x < m + pw {
            cv.line(x, y, (x + 4).min(m + pw - 1), y, GRID);
            x += 8;
        }
    }
    let n = rows.len();
    let bins = (pw as usize).min(n);
    for (i, pick) in [|r: &EpisodeRecord| r.return_a, |r: &EpisodeRecord| r.return_b].into_iter().enumerate() {
        let mut prev: Option<(i64, i64)> = None;
        for b in 0..bins {
            let (s, e) = (b * n / bins, ((b + 1) * n / bins).max(b * n / bins + 1));
            let mean = rows[s..e].iter().map(pick).sum::<f64>() / (e - s) as f64;
            let x = m + (b as i64 * (pw - 1)) / (bins as i64 - 1).max(1);
            let y = ypix(mean);
            if let Some((px, py)) = prev {
                cv.line(px, py, x, y, AGENT[i]);
            } else {
                cv.put(x, y, AGENT[i]);
            }
            prev = Some((x, y));
        }
    }
    Ok(cv)
}

fn blend(t: f64) -> Rgb {
    // Red for low payoffs through white to green for high ones.
    let t = t.clamp(0.0, 1.0);
    if t < 0.5 {
        let k = t * 2.0;
        [230, (90.0 + 165.0 * k) as u8, (90.0 + 165.0 * k) as u8]
    } else {
        let k = (t - 0.5) * 2.0;
        [(255.0 - 155.0 * k) as u8, (255.0 - 40.0 * k) as u8, (255.0 - 155.0 * k) as u8]
    }
}

/// The 2×2 game: each cell split into agent A (left) and agent B (right)
/// payoff shades, best-response arrows between cells and a black frame
/// around pure equilibria. Rows are agent A's strategy, columns agent B's,
/// Straight first.
pub fn render_payoff(m: &PayoffMatrix) -> Canvas {
    let (cell, margin) = (160i64, 40i64);
    let mut cv = Canvas::new((2 * cell + 2 * margin) as u32, (2 * cell + 2 * margin) as u32, WHITE);
    let all: Vec<f64> = m.payoff.iter().flatten().flatten().copied().collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shade = |v: f64| if hi > lo { blend((v - lo) / (hi - lo)) } else { blend(0.5) };
    let origin = |s0: Strategy, s1: Strategy| (margin + s1.index() as i64 * cell, margin + s0.index() as i64 * cell);
    for s0 in Strategy::ALL {
        for s1 in Strategy::ALL {
            let (x, y) = origin(s0, s1);
            let p = m.get(s0, s1);
            cv.rect(x + 4, y + 4, x + cell / 2 - 1, y + cell - 5, shade(p[0]));
            cv.rect(x + cell / 2, y + 4, x + cell - 5, y + cell - 5, shade(p[1]));
            cv.rect(x + 4, y + 4, x + 10, y + 10, AGENT[0]);
            cv.rect(x + cell - 11, y + 4, x + cell - 5, y + 10, AGENT[1]);
        }
    }
    let nash = pure_nash(m);
    for e in &nash.equilibria {
        let (x, y) = origin(e.profile[0], e.profile[1]);
        cv.outline(x, y, x + cell - 1, y + cell - 1, 4, BLACK);
    }
    for c in &nash.arrows {
        let (x0, y0) = origin(c.profile[0], c.profile[1]);
        for to in c.arrows() {
            let (x1, y1) = origin(to[0], to[1]);
            let (cx0, cy0) = (x0 + cell / 2, y0 + cell / 2);
            let (cx1, cy1) = (x1 + cell / 2, y1 + cell / 2);
            let (dx, dy) = ((cx1 - cx0).signum(), (cy1 - cy0).signum());
            // Offset sideways so opposite arrows between the same pair do not overlap.
            let (ox, oy) = (-dy * 12, dx * 12);
            cv.arrow(cx0 + dx * 40 + ox, cy0 + dy * 40 + oy, cx1 - dx * 40 + ox, cy1 - dy * 40 + oy, 12, BLACK);
        }
    }
    cv
}
