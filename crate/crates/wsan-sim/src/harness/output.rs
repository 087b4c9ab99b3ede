//! Sweep output files: the aggregate CSV, plot-ready scatter data, and a
//! small self-contained SVG scatter chart.
//!
//! All writers are deterministic byte-for-byte: identical rows always
//! produce identical files. Values are printed with a decimal point, no
//! thousands separators, and six significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::{AggregateRow, SweepError};

/// Writes the canonical sweep CSV: a header plus one line per (row,
/// metric) in the fixed order ttc, hops, transfers.
pub fn write_csv<W: Write>(w: &mut W, rows: &[AggregateRow]) -> io::Result<()> {
    writeln!(w, "algorithm,param,metric,min,mean,max,n")?;
    for row in rows {
        let metrics = [
            ("ttc", &row.time_to_capture),
            ("hops", &row.hops),
            ("transfers", &row.transfers),
        ];
        for (name, stats) in metrics {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.algorithm,
                param_label(row.param),
                name,
                format_sig6(stats.min),
                format_sig6(stats.mean),
                format_sig6(stats.max),
                row.seed_count
            )?;
        }
    }
    Ok(())
}

/// Writes [`write_csv`] output to a file.
pub fn emit_csv(rows: &[AggregateRow], path: &Path) -> Result<(), SweepError> {
    if rows.is_empty() {
        return Err(SweepError::NoRows);
    }
    with_file(path, |w| write_csv(w, rows))
}

/// Writes the plot-ready scatter data: one (mean hops, mean time to
/// capture, parameter label) triple per row.
pub fn write_scatter_csv<W: Write>(w: &mut W, rows: &[AggregateRow]) -> io::Result<()> {
    writeln!(w, "algorithm,hops_mean,ttc_mean,label")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.algorithm,
            format_sig6(row.hops.mean),
            format_sig6(row.time_to_capture.mean),
            param_label(row.param)
        )?;
    }
    Ok(())
}

/// Writes the scatter data and, when `svg_path` is given, an SVG chart
/// with one series per algorithm and data points labelled with their
/// parameter values.
pub fn emit_scatter(
    rows: &[AggregateRow],
    csv_path: &Path,
    svg_path: Option<&Path>,
) -> Result<(), SweepError> {
    if rows.is_empty() {
        return Err(SweepError::NoRows);
    }
    with_file(csv_path, |w| write_scatter_csv(w, rows))?;
    if let Some(svg) = svg_path {
        with_file(svg, |w| write_scatter_svg(w, rows))?;
    }
    Ok(())
}

fn with_file<F>(path: &Path, body: F) -> Result<(), SweepError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let io_err = |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn param_label(param: Option<f64>) -> String {
    match param {
        Some(p) => format!("{p}"),
        None => String::new(),
    }
}

/// Formats with six significant digits, plain decimal notation, trailing
/// zeros trimmed.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if exp >= 6 {
        let scale = 10f64.powi(exp - 5);
        format!("{:.0}", (v / scale).round() * scale)
    } else {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;
const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct AxisScale {
    min: f64,
    max: f64,
}

impl AxisScale {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        // Pad so points never sit on the frame; handle single-value axes.
        let span = (max - min).max(max.abs() * 0.01).max(1.0);
        Self {
            min: min - 0.05 * span,
            max: max + 0.05 * span,
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }
}

/// Renders a minimal static scatter chart of mean time to capture against
/// mean hop count.
pub fn write_scatter_svg<W: Write>(w: &mut W, rows: &[AggregateRow]) -> io::Result<()> {
    let xs = AxisScale::of(rows.iter().map(|r| r.hops.mean));
    let ys = AxisScale::of(rows.iter().map(|r| r.time_to_capture.mean));
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |v: f64| MARGIN_LEFT + xs.frac(v) * plot_w;
    let py = |v: f64| MARGIN_TOP + (1.0 - ys.frac(v)) * plot_h;

    // Series in first-appearance order.
    let mut series: Vec<(super::Algorithm, Vec<&AggregateRow>)> = Vec::new();
    for row in rows {
        match series.iter_mut().find(|(a, _)| *a == row.algorithm) {
            Some((_, list)) => list.push(row),
            None => series.push((row.algorithm, vec![row])),
        }
    }

    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">"
    )?;
    writeln!(
        w,
        "  <rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>"
    )?;

    // Frame and tick labels.
    writeln!(
        w,
        "  <rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#444\"/>"
    )?;
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        let xv = xs.min + t * (xs.max - xs.min);
        let yv = ys.min + t * (ys.max - ys.min);
        let x = MARGIN_LEFT + t * plot_w;
        let y = MARGIN_TOP + (1.0 - t) * plot_h;
        writeln!(
            w,
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#444\">{}</text>",
            SVG_HEIGHT - MARGIN_BOTTOM + 16.0,
            format_sig6(xv)
        )?;
        writeln!(
            w,
            "  <text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\" fill=\"#444\">{}</text>",
            MARGIN_LEFT - 6.0,
            format_sig6(yv)
        )?;
    }
    writeln!(
        w,
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#111\">mean total hop count</text>",
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 12.0
    )?;
    writeln!(
        w,
        "  <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#111\" \
         transform=\"rotate(-90 16 {:.1})\">mean time to capture</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )?;

    for (si, (algorithm, list)) in series.iter().enumerate() {
        let color = SERIES_COLORS[si % SERIES_COLORS.len()];
        if list.len() > 1 {
            let points: Vec<String> = list
                .iter()
                .map(|r| format!("{:.1},{:.1}", px(r.hops.mean), py(r.time_to_capture.mean)))
                .collect();
            writeln!(
                w,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" \
                 stroke-opacity=\"0.6\"/>",
                points.join(" ")
            )?;
        }
        for r in list {
            let x = px(r.hops.mean);
            let y = py(r.time_to_capture.mean);
            writeln!(
                w,
                "  <circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3.5\" fill=\"{color}\"/>"
            )?;
            let label = param_label(r.param);
            if !label.is_empty() {
                writeln!(
                    w,
                    "  <text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{label}</text>",
                    x + 5.0,
                    y - 5.0
                )?;
            }
        }
        writeln!(
            w,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" fill=\"{color}\">{algorithm}</text>",
            SVG_WIDTH - MARGIN_RIGHT - 8.0,
            MARGIN_TOP + 16.0 + 14.0 * si as f64
        )?;
    }
    writeln!(w, "</svg>")
}

#[cfg(test)]
mod tests {
    use super::super::{Algorithm, MetricStats};
    use super::*;

    fn stats(min: f64, mean: f64, max: f64) -> MetricStats {
        MetricStats { min, mean, max }
    }

    fn row(algorithm: Algorithm, param: Option<f64>) -> AggregateRow {
        AggregateRow {
            algorithm,
            param,
            time_to_capture: stats(10.25, 11.5, 13.0),
            hops: stats(900.0, 1000.5, 1100.0),
            transfers: stats(90.0, 100.0, 110.0),
            seed_count: 5,
        }
    }

    #[test]
    fn csv_layout_single_row() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row(Algorithm::Ts1, None)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "algorithm,param,metric,min,mean,max,n");
        assert_eq!(lines[1], "TS-1,,ttc,10.25,11.5,13,5");
        assert_eq!(lines[2], "TS-1,,hops,900,1000.5,1100,5");
        assert_eq!(lines[3], "TS-1,,transfers,90,100,110,5");
    }

    #[test]
    fn csv_three_lines_per_row() {
        let rows: Vec<AggregateRow> = (0..15)
            .map(|i| row(Algorithm::Sts1, Some(f64::from(i) / 10.0)))
            .collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 45);
        assert!(text.contains("STS-1,0.9,ttc,"));
        assert!(text.contains("STS-1,1.4,transfers,"));
    }

    #[test]
    fn csv_bytes_are_reproducible() {
        let rows = vec![row(Algorithm::Das2, Some(15.0)), row(Algorithm::Ts2, None)];
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&mut a, &rows).unwrap();
        write_csv(&mut b, &rows).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn emit_csv_rejects_empty_rows() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_csv(&[], &dir.path().join("out.csv")).unwrap_err();
        assert!(matches!(err, SweepError::NoRows));
    }

    #[test]
    fn emit_csv_reports_path_on_io_failure() {
        let err = emit_csv(
            &[row(Algorithm::Ts1, None)],
            Path::new("/nonexistent-dir/out.csv"),
        )
        .unwrap_err();
        match err {
            SweepError::Io { path, .. } => {
                assert_eq!(path, Path::new("/nonexistent-dir/out.csv"))
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn scatter_csv_one_triple_per_row() {
        let rows = vec![
            row(Algorithm::Sts1, Some(0.5)),
            row(Algorithm::Sts1, Some(1.0)),
        ];
        let mut buf = Vec::new();
        write_scatter_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "algorithm,hops_mean,ttc_mean,label");
        assert_eq!(lines[1], "STS-1,1000.5,11.5,0.5");
        assert_eq!(lines[2], "STS-1,1000.5,11.5,1");
    }

    #[test]
    fn svg_has_one_series_per_algorithm() {
        let rows = vec![
            row(Algorithm::Ts1, None),
            row(Algorithm::Sts1, Some(0.3)),
            row(Algorithm::Sts1, Some(0.6)),
        ];
        let mut buf = Vec::new();
        write_scatter_svg(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg "));
        assert!(text.trim_end().ends_with("</svg>"));
        assert_eq!(text.matches("<circle").count(), 3);
        // Two labelled points (TS has no parameter label) plus two legend
        // entries and the two axis titles.
        assert!(text.contains(">0.3</text>"));
        assert!(text.contains(">0.6</text>"));
        assert!(text.contains(">TS-1</text>"));
        assert!(text.contains(">STS-1</text>"));
        // One polyline for the two-point STS series only.
        assert_eq!(text.matches("<polyline").count(), 1);
    }

    #[test]
    fn emit_scatter_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("scatter.csv");
        let svg = dir.path().join("scatter.svg");
        emit_scatter(&[row(Algorithm::Das1, Some(15.0))], &csv, Some(&svg)).unwrap();
        assert!(std::fs::read_to_string(&csv).unwrap().contains("DAS-1"));
        assert!(std::fs::read_to_string(&svg).unwrap().contains("DAS-1"));
        assert!(matches!(
            emit_scatter(&[], &csv, None).unwrap_err(),
            SweepError::NoRows
        ));
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(18.0), "18");
        assert_eq!(format_sig6(-18.0), "-18");
        assert_eq!(format_sig6(20.0 / 3.0 * 3.05), "20.3333");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(604541.0), "604541");
        assert_eq!(format_sig6(1234567.0), "1234570");
        assert_eq!(format_sig6(12.3456789), "12.3457");
        assert_eq!(format_sig6(1.4), "1.4");
    }
}
