//! Static SVG plots of trajectories.
//!
//! Output is a pure function of the input: coordinates are printed with a
//! fixed number of decimals and elements are emitted in input order.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};
use svg::node::element::{Circle, Group, Line, Polyline, Rectangle as Rect, Text};
use svg::Document;

use crate::error::{Error, Result};
use crate::sim::trajectory::Trajectory;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const PANEL: f64 = 360.0;
const MARGIN: f64 = 40.0;
const TITLE_BAND: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    /// Draw only this robot (0-based); all robots otherwise.
    pub robot: Option<usize>,
    /// Extra panel with the platform path, shrunk by a power of ten to the
    /// extent of the robot paths.
    pub platform_panel: bool,
    /// Extra panel with heading and reference, both mod 2π, against time.
    pub heading_overlay: bool,
}

impl PlotSpec {
    pub fn paths(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            robot: None,
            platform_panel: false,
            heading_overlay: false,
        }
    }

    /// Layout for a built-in scenario.
    pub fn for_scenario(name: &str) -> Self {
        let mut spec = Self::paths(name);
        match name {
            "fig4_variants" => spec.robot = Some(0),
            "fig3_school" | "fig5_spring" => spec.platform_panel = name == "fig3_school",
            _ => {
                spec.platform_panel = true;
                spec.heading_overlay = true;
            }
        }
        spec
    }
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    min: [f64; 2],
    max: [f64; 2],
}

impl Bounds {
    fn of<'a>(points: impl IntoIterator<Item = &'a [f64; 2]>) -> Option<Self> {
        let mut b: Option<Bounds> = None;
        for p in points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                continue;
            }
            let e = b.get_or_insert(Bounds { min: *p, max: *p });
            for (k, &v) in p.iter().enumerate() {
                e.min[k] = e.min[k].min(v);
                e.max[k] = e.max[k].max(v);
            }
        }
        b
    }

    fn extent(&self) -> f64 {
        (self.max[0] - self.min[0]).max(self.max[1] - self.min[1])
    }
}

/// Maps data coordinates into a square panel with equal axis scales, or
/// independent scales when `equal` is false.
struct Frame {
    origin: [f64; 2],
    bounds: Bounds,
    scale: [f64; 2],
}

impl Frame {
    fn new(origin: [f64; 2], bounds: Bounds, equal: bool) -> Self {
        let inner = PANEL - 2.0 * MARGIN;
        let span = |k: usize| (bounds.max[k] - bounds.min[k]).max(1e-12);
        let scale = if equal {
            let s = inner / span(0).max(span(1));
            [s, s]
        } else {
            [inner / span(0), inner / span(1)]
        };
        Self {
            origin,
            bounds,
            scale,
        }
    }

    fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + MARGIN + (p[0] - self.bounds.min[0]) * self.scale[0],
            self.origin[1] + PANEL - MARGIN - (p[1] - self.bounds.min[1]) * self.scale[1],
        ]
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn polyline(points: &[[f64; 2]], color: &str) -> Polyline {
    let pts: Vec<String> = points
        .iter()
        .map(|p| format!("{},{}", fmt(p[0]), fmt(p[1])))
        .collect();
    Polyline::new()
        .set("points", pts.join(" "))
        .set("fill", "none")
        .set("stroke", color)
        .set("stroke-width", 1.5)
}

fn marker(p: [f64; 2], color: &str) -> Circle {
    Circle::new()
        .set("cx", fmt(p[0]))
        .set("cy", fmt(p[1]))
        .set("r", 3)
        .set("fill", color)
}

fn label(x: f64, y: f64, text: impl Into<String>, size: u32) -> Text {
    Text::new(text.into())
        .set("x", fmt(x))
        .set("y", fmt(y))
        .set("font-family", "sans-serif")
        .set("font-size", size)
}

fn panel_box(x: f64, title: &str) -> Group {
    Group::new()
        .add(
            Rect::new()
                .set("x", fmt(x))
                .set("y", TITLE_BAND)
                .set("width", PANEL)
                .set("height", PANEL)
                .set("fill", "none")
                .set("stroke", "#999999"),
        )
        .add(label(x + 8.0, TITLE_BAND + 16.0, title, 12))
}

/// Draws a series as a polyline, or a marker when it has a single point.
fn series(frame: &Frame, data: &[[f64; 2]], color: &str) -> Group {
    let mapped: Vec<[f64; 2]> = data
        .iter()
        .filter(|p| p[0].is_finite() && p[1].is_finite())
        .map(|p| frame.map(*p))
        .collect();
    let g = Group::new();
    match mapped.len() {
        0 => g,
        1 => g.add(marker(mapped[0], color)),
        _ => g.add(polyline(&mapped, color)).add(marker(mapped[0], color)),
    }
}

/// Largest power of ten not exceeding `ratio`, capped at 1.
fn shrink_factor(ratio: f64) -> f64 {
    if !(ratio.is_finite() && ratio > 0.0) || ratio >= 1.0 {
        return 1.0;
    }
    10f64.powf(ratio.log10().floor())
}

/// Splits a wrapped angle series wherever it jumps across the cut.
fn wrapped_segments(t: &[f64], angle: &[f64]) -> Vec<Vec<[f64; 2]>> {
    let mut out: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut prev: Option<f64> = None;
    for (ti, a) in t.iter().zip(angle) {
        let w = a.rem_euclid(TAU);
        if prev.is_none_or(|p| (w - p).abs() > PI) {
            out.push(Vec::new());
        }
        out.last_mut().expect("pushed above").push([*ti, w]);
        prev = Some(w);
    }
    out
}

/// Renders one or more trajectories (e.g. the variants of one scenario).
pub fn render_document(trajectories: &[Trajectory], spec: &PlotSpec) -> Document {
    let panels = 1 + usize::from(spec.platform_panel) + usize::from(spec.heading_overlay);
    let width = panels as f64 * PANEL;
    let height = PANEL + TITLE_BAND + 10.0;
    let mut doc = Document::new()
        .set("viewBox", (0, 0, width, height))
        .set("width", width)
        .set("height", height)
        .add(
            Rect::new()
                .set("width", width)
                .set("height", height)
                .set("fill", "white"),
        )
        .add(label(8.0, 20.0, spec.title.clone(), 16));

    // (legend text, path) for every drawn robot
    let mut curves: Vec<(String, Vec<[f64; 2]>)> = Vec::new();
    for traj in trajectories {
        let robots: Vec<usize> = match spec.robot {
            Some(r) if r < traj.robots => vec![r],
            Some(_) => Vec::new(),
            None => (0..traj.robots).collect(),
        };
        for r in robots {
            let name = if spec.robot.is_some() || traj.robots == 1 {
                traj.label.clone()
            } else {
                format!("{} robot {}", traj.label, r + 1)
            };
            curves.push((name, traj.robot_path(r)));
        }
    }

    let robot_bounds = Bounds::of(curves.iter().flat_map(|(_, p)| p.iter()));
    let mut panel_x = 0.0;
    doc = doc.add(panel_box(panel_x, "robot paths (platform frame)"));
    if let Some(b) = robot_bounds {
        let frame = Frame::new([panel_x, TITLE_BAND], b, true);
        for (i, (_, path)) in curves.iter().enumerate() {
            doc = doc.add(series(&frame, path, PALETTE[i % PALETTE.len()]));
        }
    }
    for (i, (name, _)) in curves.iter().enumerate() {
        let y = TITLE_BAND + 34.0 + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        doc = doc
            .add(
                Line::new()
                    .set("x1", fmt(panel_x + 10.0))
                    .set("y1", fmt(y - 4.0))
                    .set("x2", fmt(panel_x + 28.0))
                    .set("y2", fmt(y - 4.0))
                    .set("stroke", color)
                    .set("stroke-width", 2),
            )
            .add(label(panel_x + 34.0, y, name.clone(), 11));
    }

    if spec.platform_panel {
        panel_x += PANEL;
        doc = doc.add(panel_box(panel_x, "platform path (inertial)"));
        let platforms: Vec<Vec<[f64; 2]>> = trajectories.iter().map(|t| t.platform_path()).collect();
        if let Some(pb) = Bounds::of(platforms.iter().flatten()) {
            let reference = robot_bounds.map_or(pb.extent(), |b| b.extent());
            let factor = shrink_factor(reference / pb.extent().max(1e-300));
            let scaled: Vec<Vec<[f64; 2]>> = platforms
                .iter()
                .map(|p| p.iter().map(|q| [q[0] * factor, q[1] * factor]).collect())
                .collect();
            let sb = Bounds::of(scaled.iter().flatten()).expect("same points as pb");
            let frame = Frame::new([panel_x, TITLE_BAND], sb, true);
            for (i, path) in scaled.iter().enumerate() {
                doc = doc.add(series(&frame, path, PALETTE[i % PALETTE.len()]));
            }
            doc = doc.add(label(
                panel_x + 8.0,
                TITLE_BAND + PANEL - 10.0,
                format!("platform path scaled by {factor:e}"),
                11,
            ));
        }
    }

    if spec.heading_overlay {
        panel_x += PANEL;
        doc = doc.add(panel_box(panel_x, "heading vs reference (mod 2π)"));
        let headed: Vec<&Trajectory> = trajectories.iter().filter(|t| !t.is_empty()).collect();
        if let Some(tmax) = headed.iter().filter_map(|t| t.last()).map(|s| s.t).reduce(f64::max) {
            let tmin = headed.iter().filter_map(|t| t.first()).map(|s| s.t).fold(tmax, f64::min);
            let bounds = Bounds {
                min: [tmin, 0.0],
                max: [tmax.max(tmin + 1e-9), TAU],
            };
            let frame = Frame::new([panel_x, TITLE_BAND], bounds, false);
            for traj in headed {
                let t = traj.times();
                let robot = spec.robot.unwrap_or(0).min(traj.robots.saturating_sub(1));
                for seg in wrapped_segments(&t, &traj.theta(robot)) {
                    doc = doc.add(series(&frame, &seg, PALETTE[0]));
                }
                if traj.has_control() {
                    let reference: Vec<f64> = traj
                        .samples
                        .iter()
                        .map(|s| s.control.map_or(f64::NAN, |c| c.theta_d))
                        .collect();
                    for seg in wrapped_segments(&t, &reference) {
                        doc = doc.add(series(&frame, &seg, PALETTE[1]).set("stroke-dasharray", "4 3"));
                    }
                }
            }
            doc = doc
                .add(label(panel_x + 8.0, TITLE_BAND + 32.0, "θ", 11).set("fill", PALETTE[0]))
                .add(label(panel_x + 24.0, TITLE_BAND + 32.0, "θ_d", 11).set("fill", PALETTE[1]));
        }
    }
    doc
}

pub fn render_svg(trajectories: &[Trajectory], spec: &PlotSpec, path: &Path) -> Result<()> {
    let doc = render_document(trajectories, spec);
    std::fs::write(path, doc.to_string()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
