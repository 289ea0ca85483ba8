//! Minimal self-contained SVG plots on a 1000 x 700 canvas.

use std::fmt::Write;

pub const WIDTH: f64 = 1000.0;
pub const HEIGHT: f64 = 700.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Fixed-precision coordinate so output is byte-stable.
fn c(v: f64) -> String {
    format!("{v:.2}")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0 && span.is_finite()) {
        return vec![lo];
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 8.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * span { 0.0 } else { t });
        t += step;
    }
    out
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if a < b { (a, b) } else { (a - 0.5, b + 0.5) };
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x: widen(x),
            y: widen(y),
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        let pts: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| {
                format!(
                    "{},{}",
                    c(self.px(x)),
                    c(self.py(y.clamp(self.y.0, self.y.1)))
                )
            })
            .collect();
        if pts.len() < 2 {
            return;
        }
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            pts.join(" ")
        );
    }

    pub fn marker(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{r}" fill="{color}"/>"#,
            c(self.px(x)),
            c(self.py(y))
        );
    }

    /// Tick from `(x, y)` along the unit direction `d`, `len` pixels long.
    pub fn tick(&mut self, x: f64, y: f64, d: (f64, f64), len: f64, color: &str) {
        let (x0, y0) = (self.px(x), self.py(y));
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="1.5"/>"#,
            c(x0),
            c(y0),
            c(x0 + len * d.0),
            c(y0 - len * d.1)
        );
    }

    /// Cell-centred heatmap, `values[j][i]` at `(xs[i], ys[j])`, grey scale
    /// from 0 to `vmax`.
    pub fn heatmap(&mut self, xs: &[f64], ys: &[f64], values: &[Vec<f64>], vmax: f64) {
        if xs.len() < 2 || ys.len() < 2 || vmax.is_nan() || vmax <= 0.0 {
            return;
        }
        let dx = (self.px(xs[1]) - self.px(xs[0])).abs();
        let dy = (self.py(ys[1]) - self.py(ys[0])).abs();
        for (j, row) in values.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                let level = (v / vmax).clamp(0.0, 1.0);
                if level < 0.02 {
                    continue;
                }
                let shade = (255.0 * (1.0 - level)).round() as u8;
                let _ = writeln!(
                    self.body,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="rgb({shade},{shade},255)"/>"#,
                    c(self.px(xs[i]) - dx / 2.0),
                    c(self.py(ys[j]) - dy / 2.0),
                    c(dx + 0.3),
                    c(dy + 0.3)
                );
            }
        }
    }

    pub fn label(&mut self, x: f64, y: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="13">{}</text>"#,
            c(self.px(x)),
            c(self.py(y)),
            esc(text)
        );
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="30" font-size="18" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            esc(&self.title)
        );
        s.push_str(&self.body);
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for t in nice_ticks(self.x.0, self.x.1) {
            let p = c(self.px(t));
            let _ = writeln!(
                s,
                r#"<line x1="{p}" y1="{y1}" x2="{p}" y2="{}" stroke="black"/>"#,
                y1 + 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{p}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
                y1 + 20.0,
                fmt_tick(t)
            );
        }
        for t in nice_ticks(self.y.0, self.y.1) {
            let p = c(self.py(t));
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{p}" x2="{x0}" y2="{p}" stroke="black"/>"#,
                x0 - 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{p}" font-size="12" text-anchor="end" dominant-baseline="middle">{}</text>"#,
                x0 - 9.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            esc(&self.y_label)
        );
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Colour for curve `k` of `n`, blue to red.
pub fn ramp(k: usize, n: usize) -> String {
    let f = if n > 1 {
        k as f64 / (n - 1) as f64
    } else {
        0.0
    };
    let r = (40.0 + 200.0 * f).round() as u8;
    let b = (240.0 - 200.0 * f).round() as u8;
    format!("rgb({r},60,{b})")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_canvas() {
        let mut p = Plot::new("t <&>", "x", "y", (0.0, 1.0), (-1.0, 1.0));
        p.polyline(&[(0.0, 0.0), (1.0, 1.0)], "red", 1.0);
        p.marker(0.5, 0.5, 3.0, "black");
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains(r#"width="1000" height="700""#));
        assert!(s.contains("t &lt;&amp;&gt;"));
    }

    #[test]
    fn ticks() {
        assert_eq!(
            nice_ticks(0.0, 1.0),
            vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]
        );
        assert_eq!(fmt_tick(0.6000000000000001), "0.6");
    }
}
