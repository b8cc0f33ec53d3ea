//! Step log to SVG frames.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{Context, Result};

use socnav_core::episode::StepLog;
use socnav_core::world::WorldMap;

const PX_PER_M: f64 = 40.0;
const PAD: f64 = 0.5;
const AGENT_RADIUS: f64 = 0.3;

struct Frame {
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn of(map: &WorldMap) -> Self {
        let points = map
            .segments
            .iter()
            .flat_map(|s| [s.a, s.b])
            .chain(map.nav_nodes.iter().map(|n| n.position));
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (0.0f64, 0.0f64, 1.0f64, 1.0f64);
        for p in points {
            lo_x = lo_x.min(p.x);
            lo_y = lo_y.min(p.y);
            hi_x = hi_x.max(p.x);
            hi_y = hi_y.max(p.y);
        }
        Self {
            min_x: lo_x - PAD,
            max_y: hi_y + PAD,
            width: (hi_x - lo_x + 2.0 * PAD) * PX_PER_M,
            height: (hi_y - lo_y + 2.0 * PAD) * PX_PER_M,
        }
    }

    /// World meters to SVG pixels, y up.
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.min_x) * PX_PER_M, (self.max_y - y) * PX_PER_M)
    }
}

fn draw(map: &WorldMap, frame: &Frame, step: &StepLog, trail: &[(f64, f64)]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}">"#,
        frame.width, frame.height
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for s in &map.segments {
        let (x1, y1) = frame.px(s.a.x, s.a.y);
        let (x2, y2) = frame.px(s.b.x, s.b.y);
        let _ = writeln!(
            svg,
            r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="black" stroke-width="3"/>"#
        );
    }
    if trail.len() > 1 {
        let points: Vec<String> = trail
            .iter()
            .map(|(x, y)| format!("{x:.1},{y:.1}"))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-dasharray="4 3"/>"#,
            points.join(" ")
        );
    }
    let r = AGENT_RADIUS * PX_PER_M;
    for h in &step.humans {
        let (cx, cy) = frame.px(h[0], h[1]);
        let _ = writeln!(
            svg,
            r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{r:.1}" fill="orange" stroke="black"/>"#
        );
    }
    let [x, y, theta] = step.robot;
    let (cx, cy) = frame.px(x, y);
    let (hx, hy) = frame.px(
        x + AGENT_RADIUS * theta.cos(),
        y + AGENT_RADIUS * theta.sin(),
    );
    let _ = writeln!(
        svg,
        r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{r:.1}" fill="steelblue" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{cx:.1}" y1="{cy:.1}" x2="{hx:.1}" y2="{hy:.1}" stroke="white" stroke-width="2"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="8" y="18" font-family="monospace" font-size="14">t={:.1}s action={} reward={:.3} {}</text>"#,
        step.t, step.action, step.reward, step.outcome
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes `frame_NNNNN.svg` for every `every`-th line of `log`. Returns the
/// number of frames.
pub fn render(map: &WorldMap, log: &Path, out_dir: &Path, every: usize) -> Result<usize> {
    let file = fs::File::open(log).with_context(|| format!("cannot open {}", log.display()))?;
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let frame = Frame::of(map);
    let mut trail = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    let mut written = 0;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let step: StepLog = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: not a step log line", log.display(), i + 1))?;
        // A new episode restarts the clock.
        if step.t <= prev_t {
            trail.clear();
        }
        prev_t = step.t;
        trail.push(frame.px(step.robot[0], step.robot[1]));
        if i % every == 0 {
            let path = out_dir.join(format!("frame_{written:05}.svg"));
            fs::write(&path, draw(map, &frame, &step, &trail))
                .with_context(|| format!("cannot write {}", path.display()))?;
            written += 1;
        }
    }
    Ok(written)
}
