//! Minimal static SVG line and scatter charts for the CSV artifacts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{MuskatError, Result};

/// A CSV file as header plus string cells; `#` lines are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// 1-based line number of each row in the source.
    pub lines: Vec<usize>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cells: Vec<String> = trimmed.split(',').map(|c| c.trim().to_string()).collect();
            match &header {
                None => header = Some(cells),
                Some(h) => {
                    if cells.len() != h.len() {
                        return Err(MuskatError::Parse {
                            row: lineno,
                            message: format!("expected {} columns, found {}", h.len(), cells.len()),
                        });
                    }
                    rows.push(cells);
                    lines.push(lineno);
                }
            }
        }
        let header = header.ok_or(MuskatError::Parse {
            row: 0,
            message: "no header line".into(),
        })?;
        Ok(Self {
            header,
            rows,
            lines,
        })
    }

    pub fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or(MuskatError::Parse {
            row: 0,
            message: format!("missing column `{name}`"),
        })
    }

    pub fn text_column(&self, name: &str) -> Result<Vec<String>> {
        let i = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index(name)?;
        self.rows
            .iter()
            .zip(&self.lines)
            .map(|(r, &line)| {
                r[i].parse::<f64>().map_err(|_| MuskatError::Parse {
                    row: line,
                    message: format!("column `{name}`: `{}` is not a number", r[i]),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300_f64.max(1e-12 * hi.abs()) {
        let pad = if hi == 0.0 { 1.0 } else { 0.5 * hi.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders series into an SVG document. With `log_y`, non-positive values
/// are dropped and the axis shows `log10`.
pub fn chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let (w, h) = (720.0, 440.0);
    let (ml, mr, mt, mb) = (80.0, 160.0, 40.0, 50.0);
    let tf = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, tf(y)))
                .collect()
        })
        .collect();
    let (x0, x1) = nice_range(pts.iter().flatten().map(|p| p.0));
    let (y0, y1) = nice_range(pts.iter().flatten().map(|p| p.1));
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#, (ml + w - mr) / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - ml - mr,
        h - mt - mb
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let ylab = if log_y { format!("1e{fy:.1}") } else { format!("{fy:.3e}") };
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3e}</text>"#, sx(fx), h - mb + 16.0, fx);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, ml - 6.0, sy(fy) + 4.0, ylab);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ml + w - mr) / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0,
        escape(y_label)
    );
    for (k, (ser, p)) in series.iter().zip(&pts).enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        if ser.markers {
            for &(x, y) in p {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{colour}"/>"#, sx(x), sy(y));
            }
        } else if !p.is_empty() {
            let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        let ly = mt + 16.0 + 18.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="12" height="12" fill="{colour}"/>"#, w - mr + 12.0, ly - 10.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - mr + 30.0, ly, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn line(name: &str, x: &[f64], y: &[f64]) -> Series {
    Series {
        name: name.into(),
        points: x.iter().copied().zip(y.iter().copied()).collect(),
        markers: false,
    }
}

/// Charts for a norms table: norms against time and the width against time.
pub fn norms_charts(table: &Table) -> Result<Vec<(String, String)>> {
    let t = table.column("t")?;
    let names = ["energy", "hk_h", "hk_theta", "diss"];
    let mut series = Vec::new();
    for n in names {
        series.push(line(n, &t, &table.column(n)?));
    }
    let any_positive = series.iter().any(|s| s.points.iter().any(|p| p.1 > 0.0));
    let norms = chart("Weighted norms", "t", "value", &series, any_positive);
    let gamma = chart("Strip width", "t", "gamma", &[line("gamma", &t, &table.column("gamma")?)], false);
    Ok(vec![("norms.svg".into(), norms), ("gamma.svg".into(), gamma)])
}

/// Scatter of gap-ratio growth against sigma, split by termination reason.
pub fn sweep_chart(table: &Table) -> Result<String> {
    let sigma = table.column("sigma")?;
    let growth = table.column("gap_ratio_growth")?;
    let term = table.text_column("termination")?;
    let mut reasons: Vec<String> = term.clone();
    reasons.sort();
    reasons.dedup();
    let series: Vec<Series> = reasons
        .iter()
        .map(|r| Series {
            name: format!("termination: {r}"),
            points: sigma
                .iter()
                .zip(&growth)
                .zip(&term)
                .filter(|(_, t)| *t == r)
                .map(|((s, g), _)| (*s, *g))
                .collect(),
            markers: true,
        })
        .collect();
    Ok(chart(
        "Gap ratio growth across sigma",
        "sigma",
        "sup_t |theta|/sigma over initial",
        &series,
        false,
    ))
}

/// Writes the charts that fit `csv_path` next to it (or into `out_dir`).
pub fn plot_file(csv_path: &Path, out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let text = std::fs::read_to_string(csv_path)
        .map_err(|e| MuskatError::Io(format!("{}: {e}", csv_path.display())))?;
    let table = Table::parse(&text)?;
    let charts = if table.has("sigma") && table.has("gap_ratio_growth") {
        vec![("sweep.svg".to_string(), sweep_chart(&table)?)]
    } else if table.has("t") {
        norms_charts(&table)?
    } else {
        return Err(MuskatError::Parse {
            row: 0,
            message: "neither a norms table (column `t`) nor a sweep table (columns `sigma`, `gap_ratio_growth`)".into(),
        });
    };
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let mut written = Vec::new();
    for (name, svg) in charts {
        let path = out_dir.join(format!("{stem}_{name}"));
        std::fs::write(&path, svg).map_err(|e| MuskatError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_reports_row_numbers() {
        let err = Table::parse("# c\na,b\n1,2\n3\n").unwrap_err();
        assert_eq!(
            err,
            MuskatError::Parse {
                row: 4,
                message: "expected 2 columns, found 1".into()
            }
        );
        let t = Table::parse("a,b\n1,2\nx,3\n").unwrap();
        assert!(matches!(t.column("a"), Err(MuskatError::Parse { row: 3, .. })));
        assert!(t.column("zz").is_err());
    }

    #[test]
    fn flat_series_renders() {
        let s = chart("z", "t", "v", &[line("zero", &[0.0, 1.0], &[0.0, 0.0])], false);
        assert!(s.starts_with("<svg") && s.contains("polyline"));
        assert!(!s.contains("NaN"));
    }
}
