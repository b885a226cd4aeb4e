//! Hand-rolled SVG: profile plots with a shaded band, and the RR/CR scatter.

use std::fmt::Write as _;

use crate::pdp::RashomonPdpResult;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

const BAND_FILL: &str = "#9ecae1";
const MEAN_STROKE: &str = "#08519c";
const BEST_STROKE: &str = "#d94801";
const MEMBER_STROKE: &str = "#969696";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotLabels {
    pub dataset: String,
    pub target: String,
    pub epsilon: f64,
    pub show_members: bool,
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Linear map from data range to pixel range; degenerate ranges are padded.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo - pad, hi + pad)
        };
        Scale {
            lo,
            hi,
            px_lo,
            px_hi,
        }
    }

    fn padded(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let s = Scale::new(lo, hi, px_lo, px_hi);
        let pad = (s.hi - s.lo) * 0.05;
        Scale::new(s.lo - pad, s.hi + pad, px_lo, px_hi)
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

fn points(xs: &[f64], ys: &[f64], sx: Scale, sy: Scale) -> String {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| format!("{:.2},{:.2}", sx.map(*x), sy.map(*y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn axes(svg: &mut String, sx: Scale, sy: Scale, x_label: &str, y_label: &str) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r##"<g class="axes" stroke="#333333" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"##
    );
    let _ = writeln!(svg, r##"<g class="ticks" font-size="11" fill="#333333">"##);
    for t in sx.ticks(6) {
        let px = sx.map(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y0 + 5.0,
            y0 + 18.0,
            escape(&tick_label(t))
        );
    }
    for t in sy.ticks(6) {
        let py = sy.map(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="#333333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            escape(&tick_label(t))
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r##"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"##,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r##"<text class="y-label" transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle" font-size="13">{}</text>"##,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(svg, r##"<?xml version="1.0" encoding="UTF-8"?>"##);
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">"##
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(title));
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let _ = writeln!(
        svg,
        r##"<text class="title" x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"##,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

/// Renders a profile plot: band polygon, mean and best-model polylines,
/// optional faint member curves, axes and legend.
pub fn render_profile(result: &RashomonPdpResult, labels: &PlotLabels) -> String {
    let grid = &result.grid;
    let mut all = result
        .ci_lo
        .iter()
        .chain(&result.ci_hi)
        .chain(&result.mean)
        .chain(&result.best_curve.values)
        .copied()
        .collect::<Vec<_>>();
    if labels.show_members {
        all.extend(
            result
                .per_model
                .iter()
                .flat_map(|c| c.values.iter().copied()),
        );
    }
    let (ymin, ymax) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let sx = Scale::new(grid[0], grid[grid.len() - 1], LEFT, WIDTH - RIGHT);
    let sy = Scale::padded(ymin, ymax, HEIGHT - BOTTOM, TOP);

    let title = format!(
        "{}: Rashomon PDP for {} (eps = {}, B = {}, alpha = {})",
        labels.dataset, result.feature_name, labels.epsilon, result.b, result.alpha
    );
    let mut svg = String::new();
    open(&mut svg, &title);
    axes(
        &mut svg,
        sx,
        sy,
        &result.feature_name,
        &format!("predicted {}", labels.target),
    );

    let mut xs_band: Vec<f64> = grid.clone();
    xs_band.extend(grid.iter().rev());
    let mut ys_band: Vec<f64> = result.ci_hi.clone();
    ys_band.extend(result.ci_lo.iter().rev());
    let _ = writeln!(
        svg,
        r##"<polygon class="band" points="{}" fill="{BAND_FILL}" fill-opacity="0.55" stroke="none"/>"##,
        points(&xs_band, &ys_band, sx, sy)
    );
    if labels.show_members {
        let _ = writeln!(svg, r##"<g class="members">"##);
        for c in &result.per_model {
            let _ = writeln!(
                svg,
                r##"<polyline class="member" data-model="{}" points="{}" fill="none" stroke="{MEMBER_STROKE}" stroke-width="0.8" stroke-opacity="0.5"/>"##,
                c.model_id.map_or(String::from("-"), |id| id.to_string()),
                points(grid, &c.values, sx, sy)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(
        svg,
        r##"<polyline class="mean" points="{}" fill="none" stroke="{MEAN_STROKE}" stroke-width="2.2"/>"##,
        points(grid, &result.mean, sx, sy)
    );
    let _ = writeln!(
        svg,
        r##"<polyline class="best" points="{}" fill="none" stroke="{BEST_STROKE}" stroke-width="2" stroke-dasharray="6 4"/>"##,
        points(grid, &result.best_curve.values, sx, sy)
    );

    let lx = WIDTH - RIGHT + 15.0;
    let band_label = format!("{:.0}% interval", (1.0 - result.alpha) * 100.0);
    let _ = writeln!(svg, r##"<g class="legend" font-size="12">"##);
    let _ = writeln!(
        svg,
        r##"<rect x="{lx}" y="{}" width="24" height="12" fill="{BAND_FILL}" fill-opacity="0.55"/><text x="{}" y="{}">{}</text>"##,
        TOP + 4.0,
        lx + 30.0,
        TOP + 14.0,
        escape(&band_label)
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{MEAN_STROKE}" stroke-width="2.2"/><text x="{}" y="{}">Rashomon PDP</text>"##,
        lx + 24.0,
        lx + 30.0,
        TOP + 34.0,
        y = TOP + 30.0
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{BEST_STROKE}" stroke-width="2" stroke-dasharray="6 4"/><text x="{}" y="{}">best model PDP</text>"##,
        lx + 24.0,
        lx + 30.0,
        TOP + 54.0,
        y = TOP + 50.0
    );
    if labels.show_members {
        let _ = writeln!(
            svg,
            r##"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{MEMBER_STROKE}" stroke-width="0.8"/><text x="{}" y="{}">set members</text>"##,
            lx + 24.0,
            lx + 30.0,
            TOP + 74.0,
            y = TOP + 70.0
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    svg
}

/// One labelled point per dataset on the unit square, RR against CR.
pub fn render_scatter(points_: &[(String, f64, f64)], caption: &str) -> String {
    let sx = Scale::new(0.0, 1.0, LEFT, WIDTH - RIGHT);
    let sy = Scale::new(0.0, 1.0, HEIGHT - BOTTOM, TOP);
    let mut svg = String::new();
    open(&mut svg, caption);
    axes(&mut svg, sx, sy, "Rashomon ratio", "coverage rate");
    let _ = writeln!(
        svg,
        r##"<g class="points" fill="{MEAN_STROKE}" fill-opacity="0.75">"##
    );
    for (name, rr, cr) in points_ {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4"><title>{}</title></circle>"##,
            sx.map(*rr),
            sy.map(*cr),
            escape(name)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    svg
}
