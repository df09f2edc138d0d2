use std::fmt::Write;

use super::{ExpError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    /// Half-length of the whisker drawn through the top of the bar.
    pub whisker: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub bars: Vec<Bar>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Plot {
    Lines(LinePlot),
    Bars(BarChart),
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 360.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

struct Frame {
    y0: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn inner_w() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn inner_h() -> f64 {
        PANEL_HEIGHT - TOP - BOTTOM
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * Self::inner_w()
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + TOP + (1.0 - (y - self.y.0) / (self.y.1 - self.y.0)) * Self::inner_h()
    }

    fn axes(&self, out: &mut String, title: &str, x_label: Option<&str>, y_label: &str, x_ticks: bool) {
        let (left, bottom) = (LEFT, self.y0 + TOP + Self::inner_h());
        let right = LEFT + Self::inner_w();
        let mut d = format!("M{left:.1},{:.1} V{bottom:.1} H{right:.1}", self.y0 + TOP);
        for i in 0..=4 {
            let v = self.y.0 + (self.y.1 - self.y.0) * i as f64 / 4.0;
            let y = self.py(v);
            write!(d, " M{left:.1},{y:.1} h-5").unwrap();
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#, left - 8.0, y + 4.0, fmt_tick(v)).unwrap();
            if x_ticks {
                let xv = self.x.0 + (self.x.1 - self.x.0) * i as f64 / 4.0;
                let x = self.px(xv);
                write!(d, " M{x:.1},{bottom:.1} v5").unwrap();
                writeln!(out, r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#, bottom + 18.0, fmt_tick(xv)).unwrap();
            }
        }
        writeln!(out, r#"<path d="{d}" fill="none" stroke="black"/>"#).unwrap();
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#, LEFT + Self::inner_w() / 2.0, self.y0 + 22.0, escape(title)).unwrap();
        if let Some(xl) = x_label {
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#, LEFT + Self::inner_w() / 2.0, bottom + 40.0, escape(xl)).unwrap();
        }
        let cy = self.y0 + TOP + Self::inner_h() / 2.0;
        writeln!(out, r#"<text x="18" y="{cy:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {cy:.1})">{}</text>"#, escape(y_label)).unwrap();
    }
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ExpError::Runtime(format!("{what} contains a non-finite value")))
    }
}

fn draw_lines(out: &mut String, p: &LinePlot, y0: f64) -> Result<()> {
    if p.series.is_empty() || p.series.iter().any(|s| s.points.is_empty()) {
        return Err(ExpError::Runtime(format!("plot {:?} has an empty series", p.title)));
    }
    for s in &p.series {
        for &(x, y) in &s.points {
            check_finite(x, &s.name)?;
            check_finite(y, &s.name)?;
        }
    }
    let all = || p.series.iter().flat_map(|s| s.points.iter());
    let frame = Frame {
        y0,
        x: range(all().map(|p| p.0)),
        y: range(all().map(|p| p.1)),
    };
    frame.axes(out, &p.title, Some(&p.x_label), &p.y_label, true);
    for (i, s) in p.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
        let ly = y0 + TOP + 6.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        writeln!(out, r#"<path d="M{lx:.1},{ly:.1} h18" stroke="{color}" stroke-width="3"/>"#).unwrap();
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#, lx + 24.0, ly + 4.0, escape(&s.name)).unwrap();
    }
    Ok(())
}

fn draw_bars(out: &mut String, c: &BarChart, y0: f64) -> Result<()> {
    if c.bars.is_empty() {
        return Err(ExpError::Runtime(format!("bar chart {:?} has no bars", c.title)));
    }
    for b in &c.bars {
        check_finite(b.value, &b.label)?;
        check_finite(b.whisker, &b.label)?;
    }
    let top = c.bars.iter().map(|b| b.value + b.whisker.abs()).fold(0.0, f64::max);
    let bottom = c.bars.iter().map(|b| b.value.min(0.0)).fold(0.0, f64::min);
    let frame = Frame {
        y0,
        x: (0.0, c.bars.len() as f64),
        y: if top > bottom { (bottom, top * 1.05) } else { (0.0, 1.0) },
    };
    frame.axes(out, &c.title, None, &c.y_label, false);
    let slot = Frame::inner_w() / c.bars.len() as f64;
    for (i, b) in c.bars.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = frame.px(i as f64) + slot * 0.15;
        let (ya, yb) = (frame.py(b.value), frame.py(0.0));
        writeln!(out, r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#, ya.min(yb), slot * 0.7, (yb - ya).abs()).unwrap();
        let cx = x + slot * 0.35;
        let lo = (b.value - b.whisker.abs()).max(frame.y.0);
        writeln!(out, r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#, frame.py(lo), frame.py(b.value + b.whisker.abs())).unwrap();
        writeln!(out, r#"<text x="{cx:.2}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#, yb + 18.0, escape(&b.label)).unwrap();
    }
    Ok(())
}

/// Stacks the plots vertically in one standalone SVG document.
pub fn emit_svg_panels(plots: &[Plot]) -> Result<String> {
    if plots.is_empty() {
        return Err(ExpError::Runtime("nothing to plot".into()));
    }
    let height = PANEL_HEIGHT * plots.len() as f64;
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\">\n"
    );
    for (i, p) in plots.iter().enumerate() {
        let y0 = PANEL_HEIGHT * i as f64;
        match p {
            Plot::Lines(l) => draw_lines(&mut out, l, y0)?,
            Plot::Bars(b) => draw_bars(&mut out, b, y0)?,
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(plot: &Plot) -> Result<String> {
    emit_svg_panels(std::slice::from_ref(plot))
}
