//! Static SVG figures, each paired with a JSON sidecar of the plotted data.

use std::fmt::Write as _;

use podium_core::analysis::{DifferenceSummary, PerformanceSummary};
use podium_core::inference::{p_value, PairedDelta};
use serde::Serialize;

pub const RED: &str = "#d62728";
pub const GREEN: &str = "#2ca02c";
const INK: &str = "#333333";

const WIDTH: f64 = 640.0;
const LEFT: f64 = 170.0;
const RIGHT: f64 = 620.0;
const TOP: f64 = 40.0;
const ROW: f64 = 24.0;

pub struct Plot<T> {
    pub svg: String,
    pub data: T,
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
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

/// Linear map from a data range onto the plotting band.
struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn new(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.into_iter().filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = if hi > lo { (hi - lo) * 0.05 } else { lo.abs().max(1.0) * 0.05 };
        Scale { lo: lo - pad, hi: hi + pad }
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.lo) / (self.hi - self.lo) * (RIGHT - LEFT)
    }
}

fn open(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<text class="title" x="{}" y="20" text-anchor="middle">{}</text>"#, WIDTH / 2.0, esc(title));
}

fn axis(out: &mut String, scale: &Scale, y: f64) {
    let _ = writeln!(out, r#"<g class="axis"><line x1="{LEFT}" y1="{y:.2}" x2="{RIGHT}" y2="{y:.2}" stroke="{INK}"/>"#);
    for i in 0..=4 {
        let v = scale.lo + (scale.hi - scale.lo) * i as f64 / 4.0;
        let x = scale.x(v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="{INK}"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.3}</text>"#,
            y + 4.0,
            y + 16.0
        );
    }
    out.push_str("</g>\n");
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalRow {
    pub label: String,
    pub lci: f64,
    pub mean: f64,
    pub uci: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contains_zero: Option<bool>,
}

fn interval_rows(out: &mut String, rows: &[IntervalRow], scale: &Scale) {
    for (i, r) in rows.iter().enumerate() {
        let y = TOP + ROW * (i as f64 + 0.5);
        let color = match r.contains_zero {
            Some(true) => RED,
            Some(false) => GREEN,
            None => INK,
        };
        let zero_attr = r.contains_zero.map_or(String::new(), |z| format!(r#" data-contains-zero="{z}""#));
        let _ = writeln!(
            out,
            r#"<g class="row" data-label="{}" data-lci="{}" data-mean="{}" data-uci="{}"{zero_attr}>"#,
            esc(&r.label),
            r.lci,
            r.mean,
            r.uci
        );
        let _ = writeln!(out, r#"<text class="label" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, esc(&r.label));
        let _ = writeln!(
            out,
            r#"<line class="interval" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            scale.x(r.lci),
            scale.x(r.uci)
        );
        let _ = writeln!(out, r#"<circle class="mean" cx="{:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#, scale.x(r.mean));
        out.push_str("</g>\n");
    }
}

/// One interval per system, best first, with the bootstrap mean marked.
pub fn forest_plot(performance: &[PerformanceSummary]) -> Plot<Vec<IntervalRow>> {
    let rows: Vec<IntervalRow> = performance
        .iter()
        .map(|p| IntervalRow { label: p.system.clone(), lci: p.lci, mean: p.boot_mean, uci: p.uci, contains_zero: None })
        .collect();
    let scale = Scale::new(rows.iter().flat_map(|r| [r.lci, r.uci, r.mean]));
    let height = TOP + ROW * rows.len() as f64 + 40.0;
    let mut svg = String::new();
    open(&mut svg, height, "Bootstrap confidence intervals");
    svg.push_str("<g class=\"forest\">\n");
    interval_rows(&mut svg, &rows, &scale);
    svg.push_str("</g>\n");
    axis(&mut svg, &scale, TOP + ROW * rows.len() as f64 + 8.0);
    svg.push_str("</svg>\n");
    Plot { svg, data: rows }
}

/// Difference intervals; red when the interval contains zero, green
/// otherwise.
pub fn difference_plot<'a>(diffs: impl IntoIterator<Item = &'a DifferenceSummary>) -> Plot<Vec<IntervalRow>> {
    let rows: Vec<IntervalRow> = diffs
        .into_iter()
        .map(|d| IntervalRow {
            label: d.competitor.clone(),
            lci: d.lci,
            mean: d.mean,
            uci: d.uci,
            contains_zero: Some(d.contains_zero),
        })
        .collect();
    let scale = Scale::new(rows.iter().flat_map(|r| [r.lci, r.uci, r.mean]).chain([0.0]));
    let bottom = TOP + ROW * rows.len() as f64;
    let mut svg = String::new();
    open(&mut svg, bottom + 40.0, "Differences from the best");
    let x0 = scale.x(0.0);
    let _ = writeln!(svg, r#"<line class="zero" x1="{x0:.2}" y1="{TOP}" x2="{x0:.2}" y2="{bottom:.2}" stroke="{INK}" stroke-dasharray="4 3"/>"#);
    svg.push_str("<g class=\"differences\">\n");
    interval_rows(&mut svg, &rows, &scale);
    svg.push_str("</g>\n");
    axis(&mut svg, &scale, bottom + 8.0);
    svg.push_str("</svg>\n");
    Plot { svg, data: rows }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub reference: String,
    pub competitor: String,
    pub replicates: usize,
    pub zero: f64,
    pub delta: f64,
    pub two_delta: f64,
    pub p_value: f64,
    /// Half-open `(lo, hi]`; one edge falls exactly on `two_delta`, so the
    /// bins with `lo >= two_delta` hold exactly the p-value's exceedances.
    pub bins: Vec<Bin>,
}

/// Bin replicate differences. The grid has roughly `bins` cells over the
/// data range (square-root rule when unset) and is shifted so `2δ` is an
/// edge. Constant data gives a single bin of zero width.
pub fn histogram(pd: &PairedDelta, bins: Option<usize>) -> Histogram {
    let two = 2.0 * pd.observed;
    let b = pd.values.len();
    let target = bins.unwrap_or_else(|| ((b as f64).sqrt().ceil() as usize).max(1)).max(1);
    let lo = pd.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pd.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / target as f64;
    let bins = if b == 0 {
        Vec::new()
    } else if width.is_nan() || width <= 0.0 {
        // (next below v, v] holds exactly v
        vec![Bin { lo: lo.next_down(), hi, count: b }]
    } else {
        let cell = |v: f64| ((v - two) / width).ceil() as i64;
        let (first, last) = (cell(lo), cell(hi));
        let mut counts = vec![0usize; (last - first + 1) as usize];
        for &v in &pd.values {
            counts[(cell(v).clamp(first, last) - first) as usize] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| {
                let k = first + i as i64;
                Bin { lo: two + (k - 1) as f64 * width, hi: two + k as f64 * width, count }
            })
            .collect()
    };
    Histogram {
        reference: pd.reference.clone(),
        competitor: pd.competitor.clone(),
        replicates: b,
        zero: 0.0,
        delta: pd.observed,
        two_delta: two,
        p_value: p_value(pd),
        bins,
    }
}

/// Histogram of replicate differences with reference lines at 0, δ and 2δ.
pub fn delta_histogram(pd: &PairedDelta, bins: Option<usize>) -> Plot<Histogram> {
    let h = histogram(pd, bins);
    let scale = Scale::new(h.bins.iter().flat_map(|b| [b.lo, b.hi]).chain([0.0, h.delta, h.two_delta]));
    let tallest = h.bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
    let base = 300.0;
    let mut svg = String::new();
    open(&mut svg, base + 40.0, &format!("{} - {}", h.reference, h.competitor));
    svg.push_str("<g class=\"bars\">\n");
    for bin in &h.bins {
        let (x1, x2) = (scale.x(bin.lo), scale.x(bin.hi));
        let height = bin.count as f64 / tallest * (base - TOP - 10.0);
        let _ = writeln!(
            svg,
            r##"<rect class="bar" data-lo="{}" data-hi="{}" data-count="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{height:.2}" fill="#9ecae1" stroke="#3182bd"/>"##,
            bin.lo,
            bin.hi,
            bin.count,
            x1,
            base - height,
            (x2 - x1).max(1.0)
        );
    }
    svg.push_str("</g>\n");
    for (name, label, v) in [("zero", "0", h.zero), ("delta", "δ", h.delta), ("two-delta", "2δ", h.two_delta)] {
        let x = scale.x(v);
        let _ = writeln!(
            svg,
            r#"<g class="ref" data-ref="{name}" data-value="{v}"><line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{base}" stroke="{RED}" stroke-dasharray="5 3"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text></g>"#,
            TOP - 4.0
        );
    }
    axis(&mut svg, &scale, base);
    svg.push_str("</svg>\n");
    Plot { svg, data: h }
}
