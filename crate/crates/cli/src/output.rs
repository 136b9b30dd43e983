//! Output files. Every file is written to a temporary sibling and renamed into
//! place, so a crashed run never leaves a truncated result behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use conflict_game::solvers::TrajectorySample;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::Failure;

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t", "x1", "x2", "lambda1", "lambda2", "c1", "c2", "a1", "a2", "margin1", "margin2", "deadweight",
];

/// Fixed-width scientific notation; round-trips every finite `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// [`num`], or an empty field when the value is unavailable.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Output directory, created on demand.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<OutDir, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        let target = self.path(name);
        let io = |e: std::io::Error| Failure::Io(format!("cannot write {}: {e}", target.display()));
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv<R, I>(&self, name: &str, header: &[&str], rows: R) -> Result<PathBuf, Failure>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Failure::Io(e.to_string());
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row.into_iter()).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
        self.write(name, &bytes)
    }
}

pub fn trajectory_row(s: &TrajectorySample) -> Vec<String> {
    let st = &s.state;
    let c = &s.controls;
    [
        st.t,
        st.x[0],
        st.x[1],
        st.lam[0],
        st.lam[1],
        c[0].c,
        c[1].c,
        c[0].a,
        c[1].a,
        s.margins[0],
        s.margins[1],
        s.accounting.deadweight_loss,
    ]
    .into_iter()
    .map(num)
    .collect()
}

/// A named series for plotting.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Long-format table `series,t,value` of every series.
pub fn plot_rows(panels: &[(&str, Vec<Series>)]) -> Vec<Vec<String>> {
    panels
        .iter()
        .flat_map(|(_, series)| series)
        .flat_map(|s| s.points.iter().map(|&(t, v)| vec![s.name.to_string(), num(t), num(v)]))
        .collect()
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Stacked line-chart panels sharing the time axis.
pub fn svg(panels: &[(&str, Vec<Series>)]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    out.push_str(&format!("<rect width=\"{WIDTH}\" height=\"{height}\" fill=\"white\"/>\n"));
    for (k, (title, series)) in panels.iter().enumerate() {
        let top = k as f64 * PANEL_HEIGHT + 25.0;
        let (x0, x1) = (MARGIN, WIDTH - 20.0);
        let (y0, y1) = (top, top + PANEL_HEIGHT - MARGIN);
        let pts = series.iter().flat_map(|s| &s.points);
        let (mut tmin, mut tmax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(t, v) in pts {
            tmin = tmin.min(t);
            tmax = tmax.max(t);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        if !(tmax > tmin) {
            tmax = tmin + 1.0;
        }
        if !(vmax > vmin) {
            vmax = vmin + 1.0;
        }
        let sx = |t: f64| x0 + (t - tmin) / (tmax - tmin) * (x1 - x0);
        let sy = |v: f64| y1 - (v - vmin) / (vmax - vmin) * (y1 - y0);
        out.push_str(&format!(
            "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
            x1 - x0,
            y1 - y0
        ));
        out.push_str(&format!("<text x=\"{x0}\" y=\"{}\">{title}</text>\n", y0 - 8.0));
        out.push_str(&format!("<text x=\"{x0}\" y=\"{}\">{tmin:.3}</text>\n", y1 + 15.0));
        out.push_str(&format!("<text x=\"{x1}\" y=\"{}\" text-anchor=\"end\">{tmax:.3}</text>\n", y1 + 15.0));
        out.push_str(&format!("<text x=\"{}\" y=\"{y1}\" text-anchor=\"end\">{vmin:.3e}</text>\n", x0 - 4.0));
        out.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{vmax:.3e}</text>\n", x0 - 4.0, y0 + 10.0));
        for (n, s) in series.iter().enumerate() {
            let color = COLORS[n % COLORS.len()];
            let path: Vec<String> = s.points.iter().map(|&(t, v)| format!("{:.2},{:.2}", sx(t), sy(v))).collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\" text-anchor=\"end\">{}</text>\n",
                x1 - 6.0,
                y0 + 16.0 + 14.0 * n as f64,
                s.name
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
