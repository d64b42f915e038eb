//! CSV and SVG output for study results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::StudyResult;
use crate::error::{MorError, Result};
use crate::rom::NormTag;

pub const CSV_HEADER: &str = "r,k,norm,E_true,E_hat,E_tilde,abs_est,abs_true,skipped_reason";

/// One line per evaluated or skipped `(r, k, norm)`, ordered by `r`, then `k`,
/// then norm as configured.
pub fn format_csv(result: &StudyResult) -> Result<String> {
    if result.rows.is_empty() && result.skipped.is_empty() {
        return Err(MorError::EmptyResult);
    }
    let mut lines: Vec<(usize, f64, usize, String)> = Vec::new();
    let norm_rank = |n: NormTag| {
        result
            .summaries
            .iter()
            .position(|s| s.norm == n)
            .unwrap_or(usize::MAX)
    };
    for row in &result.rows {
        let e = &row.sample;
        lines.push((
            row.r,
            e.k,
            norm_rank(e.norm),
            format!(
                "{},{:?},{},{:?},{:?},{:?},{:?},{:?},",
                row.r,
                e.k,
                e.norm.as_str(),
                e.e_true,
                e.e_hat,
                e.e_tilde,
                e.abs_est,
                e.abs_true
            ),
        ));
    }
    for s in &result.skipped {
        lines.push((
            s.r,
            s.k,
            norm_rank(s.norm),
            format!("{},{:?},{},,,,,,{}", s.r, s.k, s.norm.as_str(), s.reason),
        ));
    }
    lines.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = String::with_capacity(lines.len() * 96);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (_, _, _, line) in lines {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_csv(result: &StudyResult, path: &Path) -> Result<()> {
    let text = format_csv(result)?;
    fs::write(path, text).map_err(|e| MorError::io(path, e))
}

pub fn format_stopping_csv(result: &StudyResult) -> String {
    let mut out = String::from("r,sup_E_hat,smoothed,decision\n");
    for (info, entry) in result.checkpoints.iter().zip(&result.stopping.entries) {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{}",
            info.r,
            entry.value,
            entry.smoothed,
            entry.decision.as_str()
        );
    }
    out
}

pub fn emit_stopping_csv(result: &StudyResult, path: &Path) -> Result<()> {
    fs::write(path, format_stopping_csv(result)).map_err(|e| MorError::io(path, e))
}

pub fn emit_summary_csv(result: &StudyResult, path: &Path) -> Result<()> {
    let mut out = String::from(
        "r,norm,sup_E_true,sup_E_hat,sup_E_tilde,sup_abs_est,sup_abs_true,underestimated,orthogonality_error,deflated\n",
    );
    for s in &result.summaries {
        let info = result.checkpoints.iter().find(|c| c.r == s.r);
        let _ = writeln!(
            out,
            "{},{},{:?},{:?},{:?},{:?},{:?},{},{:?},{}",
            s.r,
            s.norm.as_str(),
            s.sup_e_true,
            s.sup_e_hat,
            s.sup_e_tilde,
            s.sup_abs_est,
            s.sup_abs_true,
            s.underestimated,
            info.map_or(f64::NAN, |c| c.orthogonality_error),
            info.map_or(0, |c| c.deflated)
        );
    }
    fs::write(path, out).map_err(|e| MorError::io(path, e))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const SERIES: [(&str, &str); 4] = [
    ("E_true", "#1f77b4"),
    ("E_hat", "#d62728"),
    ("E_tilde", "#2ca02c"),
    ("abs_est", "#9467bd"),
];

/// Log10 of the sup errors against `r` for one norm.
pub fn format_svg(result: &StudyResult, norm: NormTag) -> Result<String> {
    let sums = result.summaries_for(norm);
    if sums.is_empty() {
        return Err(MorError::EmptyResult);
    }
    let series: Vec<Vec<(f64, f64)>> = (0..SERIES.len())
        .map(|i| {
            sums.iter()
                .map(|s| {
                    let v = [s.sup_e_true, s.sup_e_hat, s.sup_e_tilde, s.sup_abs_est][i];
                    (s.r as f64, v.max(1e-300).log10())
                })
                .collect()
        })
        .collect();
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in series.iter().flatten() {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    let (ymin, ymax) = (ymin.floor(), ymax.ceil().max(ymin.floor() + 1.0));
    let px = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">sup error over k ({} norm)</text>"#,
        WIDTH / 2.0,
        norm.as_str()
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{m},{t} L{m},{b} L{r},{b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let mut e = ymin as i64;
    while e as f64 <= ymax {
        let y = py(e as f64);
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{:.1}" text-anchor="end" font-size="11">1e{}</text><line x1="{}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="#ddd"/>"##,
            MARGIN - 6.0,
            y + 4.0,
            e,
            MARGIN,
            y,
            WIDTH - MARGIN,
            y
        );
        e += 1;
    }
    for s in &sums {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            px(s.r as f64),
            HEIGHT - MARGIN + 16.0,
            s.r
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">r</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    for (i, ((label, color), pts)) in SERIES.iter().zip(&series).enumerate() {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            coords.join(" "),
            color
        );
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" font-size="11" fill="{}">{}</text>"#,
            WIDTH - MARGIN - 70.0,
            ly,
            color,
            label
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `<stem>_<norm>.svg` in `dir` for every reported norm.
pub fn emit_svg(result: &StudyResult, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut norms: Vec<NormTag> = result.summaries.iter().map(|s| s.norm).collect();
    norms.dedup();
    norms.sort();
    norms.dedup();
    let mut written = Vec::new();
    for norm in norms {
        let path = dir.join(format!("{stem}_{}.svg", norm.as_str()));
        let text = format_svg(result, norm)?;
        fs::write(&path, text).map_err(|e| MorError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
