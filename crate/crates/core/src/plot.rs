//! SVG charts of success reports: rate in percent against the blocking
//! lookahead, one series per variant.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::eval::SuccessReport;
use crate::sim::EpisodeStatus;

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

/// One line in a chart.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn draw_err<E: std::error::Error + Send + Sync>(e: DrawingAreaErrorKind<E>) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Line chart of percentages over `s_d`.
pub fn line_chart(path: impl AsRef<Path>, title: &str, series: &[Series]) -> Result<()> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let pad = ((hi - lo) * 0.05).max(1.0);

    let root = SVGBackend::new(path.as_ref(), (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d((lo - pad)..(hi + pad), -2.0..102.0)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("blocking lookahead s_d [m]")
        .y_desc("rate [%]")
        .draw()
        .map_err(draw_err)?;

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(draw_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
        chart
            .draw_series(s.points.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(draw_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Rate of `status` for each variant in the report.
pub fn status_series(report: &SuccessReport, status: EpisodeStatus) -> Vec<Series> {
    report
        .variants()
        .into_iter()
        .map(|v| Series {
            points: report.variant(&v).iter().map(|r| (r.s_d, r.rate(status))).collect(),
            label: v,
        })
        .collect()
}

/// All four rates of a single variant.
pub fn variant_series(report: &SuccessReport, variant: &str) -> Vec<Series> {
    let rows = report.variant(variant);
    EpisodeStatus::ALL
        .iter()
        .map(|&status| Series {
            label: status.as_str().to_string(),
            points: rows.iter().map(|r| (r.s_d, r.rate(status))).collect(),
        })
        .collect()
}

/// Success and infeasibility of every variant on one chart.
pub fn success_and_infeasibility(report: &SuccessReport) -> Vec<Series> {
    let mut out = Vec::new();
    for v in report.variants() {
        let rows = report.variant(&v);
        for status in [EpisodeStatus::Success, EpisodeStatus::Infeasible] {
            out.push(Series {
                label: format!("{} {v}", status.as_str()),
                points: rows.iter().map(|r| (r.s_d, r.rate(status))).collect(),
            });
        }
    }
    out
}

/// Writes `success.svg`, `infeasibility.svg` and one `<variant>.svg` per
/// variant into `dir`; returns the files written.
pub fn render_report(report: &SuccessReport, dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: String, title: &str, series: Vec<Series>| -> Result<()> {
        let path = dir.join(name);
        line_chart(&path, title, &series)?;
        written.push(path);
        Ok(())
    };
    emit(
        "success.svg".into(),
        "Success rate",
        status_series(report, EpisodeStatus::Success),
    )?;
    emit(
        "infeasibility.svg".into(),
        "Success and infeasibility",
        success_and_infeasibility(report),
    )?;
    for v in report.variants() {
        emit(format!("{v}.svg"), &v, variant_series(report, &v))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::SuccessRow;

    #[test]
    fn renders_non_empty_files() {
        let row = |variant: &str, s_d, success| SuccessRow {
            variant: variant.into(),
            s_d,
            success,
            collision: 100.0 - success,
            infeasible: 0.0,
            track_end: 0.0,
            episodes: 10,
        };
        let report = SuccessReport {
            rows: vec![
                row("a", 40.0, 10.0),
                row("a", 60.0, 90.0),
                row("b", 40.0, 50.0),
                row("b", 60.0, 70.0),
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let files = render_report(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in files {
            let text = std::fs::read_to_string(&f).unwrap();
            assert!(text.starts_with("<svg"), "{}", f.display());
            assert!(text.contains("<polyline") || text.contains("<path"));
        }
    }
}
