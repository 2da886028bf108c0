//! Minimal self-contained SVG line plots. CSV is the canonical output; the
//! SVG emitter exists so sweeps can be eyeballed without an external
//! renderer.

use super::table::ResultTable;
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 60.0;
/// Floor applied to nonpositive values on a log-scaled axis.
pub const LOG_FLOOR: f64 = 1e-12;

const SERIES_COLORS: [&str; 6] = [
    "#c0392b", "#27ae60", "#8e44ad", "#2980b9", "#d35400", "#16a085",
];

/// Draws one polyline per y-column against the x-column. With `log_y`,
/// nonpositive y-values are clamped to `LOG_FLOOR` and the clamping is
/// flagged in the table metadata.
pub fn write_svg_lines(
    table: &mut ResultTable,
    x_col: &str,
    y_cols: &[&str],
    path: &Path,
    log_y: bool,
) -> Result<()> {
    let xs = table
        .numeric_column(x_col)
        .ok_or_else(|| Error::Config(format!("unknown x column {x_col}")))?;
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    let mut clamped = false;
    for name in y_cols {
        let mut ys = table
            .numeric_column(name)
            .ok_or_else(|| Error::Config(format!("unknown y column {name}")))?;
        if log_y {
            for y in &mut ys {
                if *y <= LOG_FLOOR && y.is_finite() {
                    *y = LOG_FLOOR;
                    clamped = true;
                }
            }
        }
        series.push((name.to_string(), ys));
    }
    if clamped {
        table.add_metadata("log_clamped", format!("floor={LOG_FLOOR:e}"));
    }

    let finite = |v: &f64| v.is_finite();
    let x_min = xs.iter().filter(|v| finite(v)).cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs
        .iter()
        .filter(|v| finite(v))
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, ys) in &series {
        for y in ys.iter().filter(|v| finite(v)) {
            let y = if log_y { y.log10() } else { *y };
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        return Err(Error::Config("no finite data to plot".into()));
    }
    let (x_span, y_span) = ((x_max - x_min).max(1e-300), (y_max - y_min).max(1e-12));
    let sx = |x: f64| MARGIN_L + (x - x_min) / x_span * (WIDTH - MARGIN_L - MARGIN_R);
    let sy = |y: f64| {
        let y = if log_y { y.log10() } else { y };
        HEIGHT - MARGIN_B - (y - y_min) / y_span * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    // axes
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // tick labels at the extremes
    let y_label = |v: f64| {
        if log_y {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3}")
        }
    };
    out.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"{}\" text-anchor=\"middle\">{x_min:.3}</text>\n",
        HEIGHT - MARGIN_B + 20.0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_max:.3}</text>\n",
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B + 20.0
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
        MARGIN_L - 8.0,
        HEIGHT - MARGIN_B,
        y_label(y_min)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
        MARGIN_L - 8.0,
        MARGIN_T + 10.0,
        y_label(y_max)
    ));
    // axis names
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_col}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 14.0
    ));
    // polylines and legend
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut pts = String::new();
        let mut pairs: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| (*x, *y))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, y) in pairs {
            pts.push_str(&format!("{:.2},{:.2} ", sx(x), sy(y)));
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.trim_end()
        ));
        let ly = MARGIN_T + 16.0 * i as f64 + 10.0;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{name}</text>\n",
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0
        ));
    }
    out.push_str("</svg>\n");

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path.display(), e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path.display(), e))?;
    Ok(())
}
