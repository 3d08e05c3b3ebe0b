//! CSV, plain-text and SVG renderings of evaluation results.

use std::fmt::Write as _;

use crate::evaluator::{ComparisonReport, EnsembleStats, RankedConfiguration};
use crate::simulation::SimResult;
use crate::terrain::{Cell, TerrainMap};

impl ComparisonReport {
    /// Per-step series of every planner:
    /// `planner,t,row,col,consumption,remaining`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("planner,t,row,col,consumption,remaining\n");
        for (p, r) in &self.results {
            r.write_csv_rows(&mut out, &format!("{p},"));
        }
        out
    }

    /// One line per planner with totals.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("planner,steps,revisits,total_consumed,final_remaining,terminated,winner\n");
        for (p, r) in &self.results {
            let _ = writeln!(
                out,
                "{p},{},{},{},{},{},{}",
                r.steps_completed,
                r.path.revisits(),
                r.total_consumed,
                final_remaining(r, self.params.capacity),
                r.terminated.label(),
                self.winner == *p
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "start {}  capacity {}  consumption factor {}\n",
            self.start, self.params.capacity, self.params.consumption_factor
        );
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>9} {:>10} {:>10}  status",
            "planner", "steps", "revisits", "energy", "remaining"
        );
        for (p, r) in &self.results {
            let _ = writeln!(
                out,
                "{:<14} {:>6} {:>9} {:>10.2} {:>10.2}  {}{}",
                p.token(),
                r.steps_completed,
                r.path.revisits(),
                r.total_consumed,
                final_remaining(r, self.params.capacity),
                r.terminated.label(),
                if self.winner == *p { "  <- winner" } else { "" }
            );
        }
        out
    }
}

fn final_remaining(r: &SimResult, capacity: f64) -> f64 {
    r.remaining.last().copied().unwrap_or(capacity)
}

impl SimResult {
    pub fn to_text(&self, capacity: f64) -> String {
        format!(
            "{}: {} steps, {} revisits, {} cells, energy {:.2}, remaining {:.2}, {}\n",
            self.planner,
            self.steps_completed,
            self.path.revisits(),
            self.cells_covered(),
            self.total_consumed,
            final_remaining(self, capacity),
            self.terminated.label()
        )
    }
}

impl EnsembleStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("planner,n_maps,seed_first,seed_last,mean_total,min_total,max_total,wins,depleted\n");
        for s in &self.planners {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.planner,
                self.n_maps,
                self.seed_first,
                self.seed_last,
                s.mean_total,
                s.min_total,
                s.max_total,
                s.wins,
                s.depleted
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} maps, seeds {}..={}\n", self.n_maps, self.seed_first, self.seed_last);
        let _ = writeln!(
            out,
            "{:<14} {:>10} {:>10} {:>10} {:>6} {:>9}",
            "planner", "mean", "min", "max", "wins", "depleted"
        );
        for s in &self.planners {
            let _ = writeln!(
                out,
                "{:<14} {:>10.2} {:>10.2} {:>10.2} {:>6} {:>9}",
                s.planner.token(),
                s.mean_total,
                s.min_total,
                s.max_total,
                s.wins,
                s.depleted
            );
        }
        out
    }
}

pub fn ranking_csv(ranked: &[RankedConfiguration]) -> String {
    let mut out = String::from("rank,block,planner,score,disqualified\n");
    for (i, r) in ranked.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", i + 1, r.block_id, r.planner, r.score, r.disqualified);
    }
    out
}

pub fn ranking_text(ranked: &[RankedConfiguration]) -> String {
    let mut out = String::new();
    for (i, r) in ranked.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>2}. {:<22} {:<14} {:>10.2}{}",
            i + 1,
            r.block_id,
            r.planner.token(),
            r.score,
            if r.disqualified { "  (battery depleted)" } else { "" }
        );
    }
    out
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Remaining charge over the step index, one polyline per run.
pub fn charge_chart_svg(results: &[&SimResult], capacity: f64) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let max_t = results.iter().map(|r| r.steps_completed).max().unwrap_or(0).max(1) as f64;
    let x = |t: f64| pad + t / max_t * (w - 2.0 * pad);
    let y = |v: f64| h - pad - (v / capacity).clamp(0.0, 1.0) * (h - 2.0 * pad);

    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    let _ = writeln!(
        out,
        "  <rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(out, "  <text x=\"{pad}\" y=\"{}\" font-size=\"12\">remaining charge vs. step</text>", pad - 8.0);
    for (i, r) in results.iter().enumerate() {
        let mut points = format!("{:.2},{:.2}", x(0.0), y(capacity));
        for (t, v) in r.remaining.iter().enumerate() {
            let _ = write!(points, " {:.2},{:.2}", x((t + 1) as f64), y(*v));
        }
        let colour = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, "  <polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{points}\"/>");
        let _ = writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{colour}\">{}</text>",
            w - pad - 120.0,
            pad + 16.0 * (i + 1) as f64,
            r.planner
        );
    }
    out.push_str("</svg>\n");
    out
}

/// The terrain grid (darker = higher, black = obstacle) with each run's path
/// drawn in its own panel.
pub fn paths_svg(map: &TerrainMap, results: &[&SimResult]) -> String {
    let cell = 24.0;
    let gap = 16.0;
    let panel_w = map.width() as f64 * cell;
    let panel_h = map.height() as f64 * cell;
    let panels = results.len().max(1);
    let w = panels as f64 * (panel_w + gap) + gap;
    let h = panel_h + 2.0 * gap + 12.0;
    let shades = ["#eef6e6", "#c8e0b4", "#9cc684", "#6e9f58"];

    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    for i in 0..panels {
        let ox = gap + i as f64 * (panel_w + gap);
        let oy = gap + 12.0;
        for p in map.positions() {
            let fill = match map.cell(p).unwrap() {
                Cell::Obstacle => "#222",
                Cell::Free(l) => shades[l.get() as usize],
            };
            let _ = writeln!(
                out,
                "  <rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\" stroke=\"#fff\"/>",
                ox + p.col as f64 * cell,
                oy + p.row as f64 * cell
            );
        }
        if let Some(r) = results.get(i) {
            let centre = |p: crate::terrain::Position| {
                (ox + (p.col as f64 + 0.5) * cell, oy + (p.row as f64 + 0.5) * cell)
            };
            let executed = std::iter::once(r.path.start).chain(r.path.steps[..r.steps_completed].iter().copied());
            let points: Vec<String> = executed
                .map(|p| {
                    let (cx, cy) = centre(p);
                    format!("{cx:.1},{cy:.1}")
                })
                .collect();
            let colour = PALETTE[i % PALETTE.len()];
            let _ = writeln!(
                out,
                "  <polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"/>",
                points.join(" ")
            );
            let _ = writeln!(out, "  <text x=\"{ox}\" y=\"{}\" font-size=\"12\">{}</text>", gap + 4.0, r.planner);
        }
    }
    out.push_str("</svg>\n");
    out
}
