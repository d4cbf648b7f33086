//! SVG figures from the CSV files of an experiment run.
//!
//! Every plotted mark carries the CSV cell it came from, verbatim, in a
//! `data-value` attribute and a `<title>`, so values can be checked against
//! the tables without rounding.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eprnet_core::pair_count;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("unknown plot kind {0:?}; expected minrate, median, jain or importance")]
    UnknownKind(String),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{0} has no plottable rows")]
    Empty(PathBuf),
    #[error("{path} lacks column {column}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    MinRate,
    Median,
    Jain,
    Importance,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::MinRate, PlotKind::Median, PlotKind::Jain, PlotKind::Importance];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::MinRate => "minrate",
            PlotKind::Median => "median",
            PlotKind::Jain => "jain",
            PlotKind::Importance => "importance",
        }
    }

    fn log_scale(self) -> bool {
        matches!(self, PlotKind::MinRate | PlotKind::Median)
    }

    fn y_label(self) -> &'static str {
        match self {
            PlotKind::MinRate => "minimum rate (pairs/s)",
            PlotKind::Median => "median rate (pairs/s)",
            PlotKind::Jain => "Jain index",
            PlotKind::Importance => "source importance",
        }
    }
}

impl FromStr for PlotKind {
    type Err = PlotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| PlotError::UnknownKind(s.into()))
    }
}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, PlotError> {
        let err = |e: &dyn std::fmt::Display| PlotError::Read { path: path.into(), message: e.to_string() };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(&e))?;
        let header = reader.headers().map_err(|e| err(&e))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            rows.push(rec.map_err(|e| err(&e))?.iter().map(String::from).collect());
        }
        Ok(Self { path: path.into(), header, rows })
    }

    fn col(&self, name: &str) -> Result<usize, PlotError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PlotError::MissingColumn { path: self.path.clone(), column: name.into() })
    }
}

/// One plotted value: the raw CSV text and its parsed number.
#[derive(Debug, Clone)]
struct Point {
    raw: String,
    value: f64,
}

fn point(raw: &str) -> Option<Point> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite()).map(|value| Point { raw: raw.into(), value })
}

/// Writes the figures of `kind` for the run in `dir` into `out_dir` and
/// returns their paths.
pub fn plot(dir: &Path, kind: PlotKind, out_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    std::fs::create_dir_all(out_dir)?;
    let summary = dir.join("summary.csv");
    let charts = if summary.exists() {
        grid_charts(&Table::read(&summary)?, kind)?
    } else if kind == PlotKind::Importance {
        importance_bars(&Table::read(&dir.join("sources.csv"))?)?
    } else {
        metric_bars(&Table::read(&dir.join("metrics.csv"))?, kind)?
    };
    let mut written = Vec::new();
    for (name, svg) in charts {
        let path = out_dir.join(format!("{name}.svg"));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

struct Bars {
    title: String,
    groups: Vec<String>,
    series: Vec<String>,
    /// `(group, series) -> value`
    values: BTreeMap<(usize, usize), Point>,
}

fn position(list: &mut Vec<String>, item: &str) -> usize {
    list.iter().position(|x| x == item).unwrap_or_else(|| {
        list.push(item.into());
        list.len() - 1
    })
}

fn metric_bars(t: &Table, kind: PlotKind) -> Result<Vec<(String, String)>, PlotError> {
    let column = match kind {
        PlotKind::MinRate => "min_rate",
        PlotKind::Median => "median_rate",
        _ => "jain",
    };
    let (c_val, c_l, c_src, c_strat, c_topo) =
        (t.col(column)?, t.col("l_wss_db")?, t.col("source")?, t.col("strategy")?, t.col("topology")?);
    let mut charts: Vec<(String, Bars)> = Vec::new();
    for row in &t.rows {
        let Some(p) = point(&row[c_val]) else { continue };
        let name = format!("{}_{}_l{}", kind.name(), row[c_topo], row[c_l]);
        let k = match charts.iter().position(|(n, _)| *n == name) {
            Some(k) => k,
            None => {
                let title = format!("{}, {}, WSS loss {} dB", kind.y_label(), row[c_topo], row[c_l]);
                charts.push((name, Bars { title, groups: Vec::new(), series: Vec::new(), values: BTreeMap::new() }));
                charts.len() - 1
            }
        };
        let bars = &mut charts[k].1;
        let g = position(&mut bars.groups, &row[c_src]);
        let s = position(&mut bars.series, &row[c_strat]);
        bars.values.insert((g, s), p);
    }
    if charts.is_empty() {
        return Err(PlotError::Empty(t.path.clone()));
    }
    Ok(charts.into_iter().map(|(n, b)| (n, bar_svg(&b, kind, "source"))).collect())
}

fn importance_bars(t: &Table) -> Result<Vec<(String, String)>, PlotError> {
    let (c_val, c_l, c_strat, c_topo) = (t.col("importance")?, t.col("l_wss_db")?, t.col("strategy")?, t.col("topology")?);
    let mut bars = Bars { title: String::new(), groups: Vec::new(), series: Vec::new(), values: BTreeMap::new() };
    let mut topo = String::new();
    for row in &t.rows {
        let Some(p) = point(&row[c_val]) else { continue };
        topo.clone_from(&row[c_topo]);
        let g = position(&mut bars.groups, &format!("{} dB", row[c_l]));
        let s = position(&mut bars.series, &row[c_strat]);
        bars.values.insert((g, s), p);
    }
    if bars.values.is_empty() {
        return Err(PlotError::Empty(t.path.clone()));
    }
    bars.title = format!("source importance, {topo}");
    Ok(vec![(format!("importance_{topo}"), bar_svg(&bars, PlotKind::Importance, "WSS loss"))])
}

struct Lines {
    title: String,
    /// x values, raw and parsed
    xs: Vec<Point>,
    /// series name, node count, `x index -> y`
    series: Vec<(String, usize, BTreeMap<usize, Point>)>,
}

fn grid_charts(t: &Table, kind: PlotKind) -> Result<Vec<(String, String)>, PlotError> {
    let column = match kind {
        PlotKind::MinRate => "maxmin_mean",
        PlotKind::Median => "median_mean",
        PlotKind::Jain => "jain_mean",
        PlotKind::Importance => "importance_mean",
    };
    let (c_val, c_n, c_x, c_b, c_l, c_s) =
        (t.col(column)?, t.col("n")?, t.col("k_over_n")?, t.col("beta")?, t.col("l_wss_db")?, t.col("strategy")?);
    let mut charts: Vec<(String, Lines)> = Vec::new();
    for row in &t.rows {
        let Some(y) = point(&row[c_val]) else { continue };
        let Some(x) = point(&row[c_x]) else { continue };
        let name = format!("{}_l{}_b{}_{}", kind.name(), row[c_l], row[c_b], row[c_s]);
        let k = match charts.iter().position(|(n, _)| *n == name) {
            Some(k) => k,
            None => {
                let title = format!("{}, {}, beta {}, WSS loss {} dB", kind.y_label(), row[c_s], row[c_b], row[c_l]);
                charts.push((name, Lines { title, xs: Vec::new(), series: Vec::new() }));
                charts.len() - 1
            }
        };
        let lines = &mut charts[k].1;
        let xi = match lines.xs.iter().position(|p| p.raw == x.raw) {
            Some(i) => i,
            None => {
                lines.xs.push(x);
                lines.xs.len() - 1
            }
        };
        let label = format!("n = {}", row[c_n]);
        let n: usize = row[c_n].parse().unwrap_or(0);
        let si = match lines.series.iter().position(|(l, ..)| *l == label) {
            Some(i) => i,
            None => {
                lines.series.push((label, n, BTreeMap::new()));
                lines.series.len() - 1
            }
        };
        lines.series[si].2.insert(xi, y);
    }
    if charts.is_empty() {
        return Err(PlotError::Empty(t.path.clone()));
    }
    Ok(charts.into_iter().map(|(n, l)| (n, line_svg(&l, kind))).collect())
}

const W: f64 = 760.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Maps data values to the plot's vertical pixel range.
struct YAxis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl YAxis {
    fn new<'a>(values: impl Iterator<Item = &'a Point>, log: bool) -> Self {
        let vals: Vec<f64> = values.map(|p| p.value).filter(|v| !log || *v > 0.0).collect();
        if log {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(0.0, f64::max);
            if vals.is_empty() {
                return Self { log, lo: 0.0, hi: 1.0 };
            }
            let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
            Self { log, lo, hi: if hi > lo { hi } else { lo + 1.0 } }
        } else {
            let hi = vals.iter().copied().fold(0.0, f64::max);
            Self { log, lo: 0.0, hi: if hi <= 1.0 { 1.0 } else { hi * 1.05 } }
        }
    }

    fn pixel(&self, v: f64) -> f64 {
        let t = if self.log {
            if v <= 0.0 {
                0.0
            } else {
                (v.log10() - self.lo) / (self.hi - self.lo)
            }
        } else {
            (v - self.lo) / (self.hi - self.lo)
        };
        H - BOTTOM - t.clamp(0.0, 1.0) * (H - TOP - BOTTOM)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            (a..=b).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
        } else {
            (0..=5).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0).map(|v| (v, format!("{v:.2}"))).collect()
        }
    }
}

fn frame(s: &mut String, title: &str, y: &YAxis, y_label: &str, x_label: &str) {
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#)
        .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, (W - RIGHT + LEFT) / 2.0, escape(title))
        .unwrap();
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    writeln!(s, r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).unwrap();
    for (v, label) in y.ticks() {
        let py = y.pixel(v);
        writeln!(s, r##"<line x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#ddd"/>"##).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 6.0, py + 4.0).unwrap();
    }
    writeln!(
        s,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    )
    .unwrap();
    writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(x_label)).unwrap();
}

fn legend(s: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 16.0;
        writeln!(s, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/>"#, y - 10.0, COLORS[i % COLORS.len()]).unwrap();
        writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, escape(name)).unwrap();
    }
}

fn bar_svg(b: &Bars, kind: PlotKind, x_label: &str) -> String {
    let y = YAxis::new(b.values.values(), kind.log_scale());
    let mut s = String::new();
    frame(&mut s, &b.title, &y, kind.y_label(), x_label);
    let group_w = (W - RIGHT - LEFT) / b.groups.len() as f64;
    let bar_w = group_w * 0.8 / b.series.len() as f64;
    for (gi, g) in b.groups.iter().enumerate() {
        let gx = LEFT + group_w * gi as f64 + group_w * 0.1;
        writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, gx + group_w * 0.4, H - BOTTOM + 16.0, escape(g))
            .unwrap();
        for si in 0..b.series.len() {
            let Some(p) = b.values.get(&(gi, si)) else { continue };
            let top = y.pixel(p.value);
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}" data-value="{}"><title>{}</title></rect>"#,
                gx + bar_w * si as f64,
                (H - BOTTOM - top).max(0.0),
                COLORS[si % COLORS.len()],
                escape(&p.raw),
                escape(&p.raw)
            )
            .unwrap();
        }
    }
    legend(&mut s, &b.series);
    s.push_str("</svg>\n");
    s
}

fn line_svg(l: &Lines, kind: PlotKind) -> String {
    let y = YAxis::new(l.series.iter().flat_map(|(_, _, m)| m.values()), kind.log_scale());
    let mut s = String::new();
    frame(&mut s, &l.title, &y, kind.y_label(), "k/n");
    let (xmin, xmax) = l.xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.value), b.max(p.value)));
    let span = if xmax > xmin { xmax - xmin } else { 1.0 };
    let px = |v: f64| LEFT + 20.0 + (v - xmin) / span * (W - RIGHT - LEFT - 40.0);
    for p in &l.xs {
        writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, px(p.value), H - BOTTOM + 16.0, escape(&p.raw))
            .unwrap();
    }
    let names: Vec<String> = l.series.iter().map(|(n, ..)| n.clone()).collect();
    for (si, (_, n, points)) in l.series.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let mut ordered: Vec<(f64, &Point)> = points.iter().map(|(&xi, p)| (l.xs[xi].value, p)).collect();
        ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = ordered.iter().map(|(x, p)| format!("{:.2},{:.2}", px(*x), y.pixel(p.value))).collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" ")).unwrap();
        for (x, p) in &ordered {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}" data-value="{}"><title>{}</title></circle>"#,
                px(*x),
                y.pixel(p.value),
                escape(&p.raw),
                escape(&p.raw)
            )
            .unwrap();
        }
        if kind == PlotKind::Jain && *n >= 2 {
            // all rate on one pair gives 1/kappa
            let floor = 1.0 / pair_count(*n) as f64;
            let py = y.pixel(floor);
            writeln!(
                s,
                r#"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="{color}" stroke-dasharray="4 3"/>"#,
                W - RIGHT
            )
            .unwrap();
            writeln!(s, r#"<text x="{}" y="{:.2}" fill="{color}">floor n={n}: {floor:.4}</text>"#, W - RIGHT + 4.0, py + 4.0)
                .unwrap();
        }
    }
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse() {
        assert_eq!("jain".parse::<PlotKind>().unwrap(), PlotKind::Jain);
        assert!(matches!("pie".parse::<PlotKind>(), Err(PlotError::UnknownKind(_))));
    }

    #[test]
    fn grid_chart_embeds_raw_values_and_floor() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("summary.csv"),
            "n,k,k_over_n,beta,l_wss_db,strategy,replications,maxmin_mean,maxmin_ci95,median_mean,median_ci95,\
jain_mean,jain_ci95,importance_mean,importance_ci95\n\
10,2,0.2,0.5,4,modified_lpt,40,0.123456789012345,0.1,1,0,0.4321098765432101,0.01,1,0\n\
10,4,0.4,0.5,4,modified_lpt,40,0.2,0.1,1,0,0.5,0.01,1,0\n",
        )
        .unwrap();
        let out = plot(dir.path(), PlotKind::Jain, &dir.path().join("plots")).unwrap();
        assert_eq!(out.len(), 1);
        let svg = std::fs::read_to_string(&out[0]).unwrap();
        assert!(svg.contains(r#"data-value="0.4321098765432101""#));
        assert!(svg.contains("floor n=10: 0.0222"));
    }

    #[test]
    fn empty_input_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("metrics.csv"), format!("{}\n", crate::output::METRICS_HEADER)).unwrap();
        assert!(matches!(plot(dir.path(), PlotKind::MinRate, dir.path()), Err(PlotError::Empty(_))));
        assert!(plot(&dir.path().join("missing"), PlotKind::Median, dir.path()).is_err());
    }
}
