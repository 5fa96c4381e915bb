use std::io::Write;
use std::path::Path;

use crate::curves::CurveSeries;
use crate::error::{AnalysisError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFormat {
    Csv,
    Svg,
}

impl std::str::FromStr for CurveFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(CurveFormat::Csv),
            "svg" => Ok(CurveFormat::Svg),
            other => Err(format!("unknown curve format {other:?} (csv|svg)")),
        }
    }
}

/// Write aggregated curves to `out` in the requested format.
///
/// The CSV dialect is `series,step,mean,se` with shortest round-trip float
/// formatting, so parsing it back reproduces the values exactly. The SVG is
/// a standalone 1.1 document with axes, a legend, and one shaded standard
/// error band per series.
pub fn emit_curves(series: &[CurveSeries], format: CurveFormat, out: impl AsRef<Path>) -> Result<()> {
    let out = out.as_ref();
    if series.is_empty() || series.iter().all(|s| s.is_empty()) {
        return Err(AnalysisError::Empty("curve series"));
    }
    for s in series {
        if s.steps.len() != s.mean.len() || s.steps.len() != s.se.len() {
            return Err(AnalysisError::SizeMismatch {
                what: "curve columns",
                expect: s.steps.len(),
                got: s.mean.len().min(s.se.len()),
            });
        }
    }
    let body = match format {
        CurveFormat::Csv => render_csv(series),
        CurveFormat::Svg => render_svg(series),
    };
    let mut file = std::fs::File::create(out).map_err(|e| AnalysisError::io(out, e))?;
    file.write_all(body.as_bytes())
        .map_err(|e| AnalysisError::io(out, e))
}

fn render_csv(series: &[CurveSeries]) -> String {
    let mut out = String::from("series,step,mean,se\n");
    for s in series {
        for i in 0..s.len() {
            // Commas in names would break the simple dialect; escape them.
            let name = s.name.replace(',', ";");
            out.push_str(&format!("{},{},{},{}\n", name, s.steps[i], s.mean[i], s.se[i]));
        }
    }
    out
}

/// Parse a file produced by [`emit_curves`] with the CSV format.
pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<Vec<CurveSeries>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| AnalysisError::csv(path, e))?;
    let headers = reader.headers().map_err(|e| AnalysisError::csv(path, e))?;
    if headers != vec!["series", "step", "mean", "se"] {
        return Err(AnalysisError::schema(
            path,
            format!("unexpected header {headers:?}"),
        ));
    }
    let mut out: Vec<CurveSeries> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| AnalysisError::csv(path, e))?;
        if rec.len() != 4 {
            return Err(AnalysisError::schema(path, "row needs 4 fields"));
        }
        let bad = |what: &str| AnalysisError::schema(path, format!("bad {what} field"));
        let name = rec[0].to_string();
        let step: u64 = rec[1].parse().map_err(|_| bad("step"))?;
        let mean: f64 = rec[2].parse().map_err(|_| bad("mean"))?;
        let se: f64 = rec[3].parse().map_err(|_| bad("se"))?;
        if out.last().map(|s: &CurveSeries| s.name.as_str()) != Some(name.as_str()) {
            out.push(CurveSeries {
                name,
                steps: Vec::new(),
                mean: Vec::new(),
                se: Vec::new(),
            });
        }
        let cur = out.last_mut().unwrap();
        cur.steps.push(step);
        cur.mean.push(mean);
        cur.se.push(se);
    }
    if out.is_empty() {
        return Err(AnalysisError::Empty("curve file"));
    }
    Ok(out)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 56.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_svg(series: &[CurveSeries]) -> String {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for i in 0..s.len() {
            let x = s.steps[i] as f64;
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(s.mean[i] - s.se[i]);
            y_max = y_max.max(s.mean[i] + s.se[i]);
        }
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let pad = (y_max - y_min) * 0.05;
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // axes
    svg.push_str(&format!(
        "  <line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_L,
        r = WIDTH - MARGIN_R,
        b = HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "  <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_L,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B
    ));
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        svg.push_str(&format!(
            "  <line x1=\"{x}\" y1=\"{b}\" x2=\"{x}\" y2=\"{b2}\" stroke=\"black\"/>\n",
            x = sx(fx),
            b = HEIGHT - MARGIN_B,
            b2 = HEIGHT - MARGIN_B + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"middle\">{v:.0}</text>\n",
            x = sx(fx),
            y = HEIGHT - MARGIN_B + 20.0,
            v = fx
        ));
        svg.push_str(&format!(
            "  <line x1=\"{l}\" y1=\"{y}\" x2=\"{l2}\" y2=\"{y}\" stroke=\"black\"/>\n",
            l = MARGIN_L - 5.0,
            l2 = MARGIN_L,
            y = sy(fy)
        ));
        svg.push_str(&format!(
            "  <text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"end\">{v:.4}</text>\n",
            x = MARGIN_L - 8.0,
            y = sy(fy) + 4.0,
            v = fy
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{x}\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\">step</text>\n",
        x = MARGIN_L + plot_w / 2.0,
        y = HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {y})\">loss</text>\n",
        y = MARGIN_T + plot_h / 2.0
    ));

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if s.is_empty() {
            continue;
        }
        // standard error band: upper edge forward, lower edge back
        let mut band = String::new();
        for i in 0..s.len() {
            band.push_str(&format!(
                "{:.2},{:.2} ",
                sx(s.steps[i] as f64),
                sy(s.mean[i] + s.se[i])
            ));
        }
        for i in (0..s.len()).rev() {
            band.push_str(&format!(
                "{:.2},{:.2} ",
                sx(s.steps[i] as f64),
                sy(s.mean[i] - s.se[i])
            ));
        }
        svg.push_str(&format!(
            "  <polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" \
             stroke=\"none\"/>\n",
            band.trim_end()
        ));
        let line: Vec<String> = (0..s.len())
            .map(|i| format!("{:.2},{:.2}", sx(s.steps[i] as f64), sy(s.mean[i])))
            .collect();
        svg.push_str(&format!(
            "  <polyline class=\"mean\" points=\"{}\" fill=\"none\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>\n",
            line.join(" ")
        ));
        // legend entry
        let ly = MARGIN_T + 8.0 + si as f64 * 18.0;
        svg.push_str(&format!(
            "  <rect x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            x = WIDTH - MARGIN_R - 190.0,
            y = ly
        ));
        svg.push_str(&format!(
            "  <text class=\"legend\" x=\"{x}\" y=\"{y}\" font-size=\"12\">{name}</text>\n",
            x = WIDTH - MARGIN_R - 172.0,
            y = ly + 10.0,
            name = xml_escape(&s.name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
