//! Static SVG plots rendered from the CSV artifacts of the verification
//! suites: trace histograms, estimate-vs-epsilon sweep curves, and the
//! singular value spectra of symplectic pairing matrices.
//!
//! Missing inputs skip the corresponding plot with a note instead of
//! failing the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn svg_header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\
         <text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\" \
         text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0
    );
    s
}

fn axes(s: &mut String) {
    let _ = writeln!(
        s,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    );
}

/// Histogram of one real series.
pub fn histogram_svg(values: &[f64], bins: usize, title: &str) -> String {
    let mut s = svg_header(title);
    axes(&mut s);
    if values.is_empty() || bins == 0 {
        let _ = writeln!(s, "<text x=\"60\" y=\"60\" font-size=\"12\">no data</text></svg>");
        return s;
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let bin = (((v - lo) / span) * bins as f64).floor() as usize;
        counts[bin.min(bins - 1)] += 1;
    }
    let peak = *counts.iter().max().unwrap() as f64;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    for (i, &c) in counts.iter().enumerate() {
        let h = if peak > 0.0 { c as f64 / peak * plot_h } else { 0.0 };
        let x = MARGIN + i as f64 / bins as f64 * plot_w;
        let w = plot_w / bins as f64;
        let y = HEIGHT - MARGIN - h;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
             fill=\"steelblue\" stroke=\"white\" stroke-width=\"0.5\"/>"
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{m}\" y=\"{y}\" font-size=\"11\" font-family=\"monospace\">{lo:.3}</text>\
         <text x=\"{r}\" y=\"{y}\" font-size=\"11\" font-family=\"monospace\" \
         text-anchor=\"end\">{hi:.3}</text></svg>",
        m = MARGIN,
        r = WIDTH - MARGIN,
        y = HEIGHT - MARGIN + 18.0
    );
    s
}

/// Polyline with error bars, x ascending.
pub fn sweep_svg(series: &[(f64, f64, f64)], title: &str) -> String {
    let mut s = svg_header(title);
    axes(&mut s);
    if series.is_empty() {
        let _ = writeln!(s, "<text x=\"60\" y=\"60\" font-size=\"12\">no data</text></svg>");
        return s;
    }
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let lo_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span_x = if hi_x > lo_x { hi_x - lo_x } else { 1.0 };
    let lo_y = series
        .iter()
        .map(|p| p.1 - p.2)
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let hi_y = series
        .iter()
        .map(|p| p.1 + p.2)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let span_y = if hi_y > lo_y { hi_y - lo_y } else { 1.0 };
    let to_x = |x: f64| MARGIN + (x - lo_x) / span_x * (WIDTH - 2.0 * MARGIN);
    let to_y = |y: f64| HEIGHT - MARGIN - (y - lo_y) / span_y * (HEIGHT - 2.0 * MARGIN);
    let zero_y = to_y(0.0);
    let _ = writeln!(
        s,
        "<line x1=\"{m}\" y1=\"{zero_y:.2}\" x2=\"{r}\" y2=\"{zero_y:.2}\" \
         stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
        m = MARGIN,
        r = WIDTH - MARGIN
    );
    let mut path = String::new();
    for (i, &(x, y, se)) in series.iter().enumerate() {
        let px = to_x(x);
        let py = to_y(y);
        let _ = write!(path, "{}{px:.2},{py:.2} ", if i == 0 { "M" } else { "L" });
        let _ = writeln!(
            s,
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"firebrick\"/>\
             <circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"firebrick\"/>",
            to_y(y - se),
            to_y(y + se)
        );
    }
    let _ = writeln!(s, "<path d=\"{path}\" fill=\"none\" stroke=\"firebrick\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{m}\" y=\"{b}\" font-size=\"11\" font-family=\"monospace\">eps={lo_x:.3}</text>\
         <text x=\"{r}\" y=\"{b}\" font-size=\"11\" font-family=\"monospace\" \
         text-anchor=\"end\">eps={hi_x:.3}</text></svg>",
        m = MARGIN,
        r = WIDTH - MARGIN,
        b = HEIGHT - MARGIN + 18.0
    );
    s
}

/// Per-sample singular value range on a log scale.
pub fn spectrum_svg(points: &[(f64, f64)], title: &str) -> String {
    let mut s = svg_header(title);
    axes(&mut s);
    if points.is_empty() {
        let _ = writeln!(s, "<text x=\"60\" y=\"60\" font-size=\"12\">no data</text></svg>");
        return s;
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(lo, hi)| (lo.max(1e-300).log10(), hi.max(1e-300).log10()))
        .collect();
    let lo_y = logs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - 0.5;
    let hi_y = logs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + 0.5;
    let span_y = if hi_y > lo_y { hi_y - lo_y } else { 1.0 };
    let to_x = |i: usize| {
        MARGIN + (i as f64 + 0.5) / points.len() as f64 * (WIDTH - 2.0 * MARGIN)
    };
    let to_y = |v: f64| HEIGHT - MARGIN - (v - lo_y) / span_y * (HEIGHT - 2.0 * MARGIN);
    for (i, &(lo, hi)) in logs.iter().enumerate() {
        let x = to_x(i);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"seagreen\"/>\
             <circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"seagreen\"/>\
             <circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"darkgreen\"/>",
            to_y(lo),
            to_y(hi),
            to_y(lo),
            to_y(hi)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"12\" y=\"{t}\" font-size=\"11\" font-family=\"monospace\">1e{hi_y:.0}</text>\
         <text x=\"12\" y=\"{b}\" font-size=\"11\" font-family=\"monospace\">1e{lo_y:.0}</text></svg>",
        t = MARGIN + 4.0,
        b = HEIGHT - MARGIN
    );
    s
}

fn parse_csv_line(line: &str) -> Vec<String> {
    // Fields are simple except for quoted observables.
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut quoted = false;
    for c in line.chars() {
        match c {
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut current)),
            _ => current.push(c),
        }
    }
    fields.push(current);
    fields
}

/// Renders every plot its input data exists for; returns notes about
/// what was produced or skipped.
pub fn emit_plots(out_dir: &Path) -> std::io::Result<Vec<String>> {
    let mut notes = Vec::new();

    // Histograms from values-*.csv.
    let mut any = false;
    if let Ok(entries) = std::fs::read_dir(out_dir) {
        let mut paths: Vec<PathBuf> = entries
            .flatten()
            .map(|e| e.path())
            .filter(|p| {
                p.file_name()
                    .and_then(|s| s.to_str())
                    .map(|s| s.starts_with("values-") && s.ends_with(".csv"))
                    .unwrap_or(false)
            })
            .collect();
        paths.sort();
        for path in paths {
            let stem = path.file_stem().unwrap().to_string_lossy().to_string();
            let text = std::fs::read_to_string(&path)?;
            let mut re_values = Vec::new();
            let mut im_values = Vec::new();
            for line in text.lines().skip(1) {
                let fields = parse_csv_line(line);
                if fields.len() >= 3 {
                    if let (Ok(re), Ok(im)) = (fields[1].parse(), fields[2].parse()) {
                        re_values.push(re);
                        im_values.push(im);
                    }
                }
            }
            if re_values.is_empty() {
                notes.push(format!("{stem}: empty series, histogram skipped"));
                continue;
            }
            let name = stem.trim_start_matches("values-");
            std::fs::write(
                out_dir.join(format!("hist-re-{name}.svg")),
                histogram_svg(&re_values, 40, &format!("Re t_{name}")),
            )?;
            std::fs::write(
                out_dir.join(format!("hist-im-{name}.svg")),
                histogram_svg(&im_values, 40, &format!("Im t_{name}")),
            )?;
            notes.push(format!("histograms for {name}"));
            any = true;
        }
    }
    if !any {
        notes.push("no values-*.csv found, histograms skipped".into());
    }

    // Sweep curves.
    let sweep_path = out_dir.join("sweep-lemma.csv");
    if sweep_path.exists() {
        let text = std::fs::read_to_string(&sweep_path)?;
        let mut by_observable: Vec<(String, Vec<(f64, f64, f64)>)> = Vec::new();
        for line in text.lines().skip(1) {
            let fields = parse_csv_line(line);
            if fields.len() < 6 {
                continue;
            }
            let (eps, obs) = (fields[0].parse::<f64>(), fields[1].clone());
            let re = fields[2].parse::<f64>();
            let se = fields[4].parse::<f64>();
            if let (Ok(eps), Ok(re), Ok(se)) = (eps, re, se) {
                match by_observable.iter_mut().find(|(name, _)| *name == obs) {
                    Some((_, series)) => series.push((eps, re, se)),
                    None => by_observable.push((obs, vec![(eps, re, se)])),
                }
            }
        }
        for (i, (obs, mut series)) in by_observable.into_iter().enumerate() {
            series.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            std::fs::write(
                out_dir.join(format!("sweep-{i}.svg")),
                sweep_svg(&series, &format!("Re mean t vs eps: {obs}")),
            )?;
        }
        notes.push("sweep curves rendered".into());
    } else {
        notes.push("no sweep-lemma.csv, sweep plot skipped".into());
    }

    // Singular value spectra.
    let spectrum_path = out_dir.join("svspectrum.csv");
    if spectrum_path.exists() {
        let text = std::fs::read_to_string(&spectrum_path)?;
        let mut points = Vec::new();
        for line in text.lines().skip(1) {
            let fields = parse_csv_line(line);
            if fields.len() >= 3 {
                if let (Ok(lo), Ok(hi)) = (fields[1].parse(), fields[2].parse()) {
                    points.push((lo, hi));
                }
            }
        }
        std::fs::write(
            out_dir.join("svspectrum.svg"),
            spectrum_svg(&points, "singular value range of the H1 pairing"),
        )?;
        notes.push("singular value spectrum rendered".into());
    } else {
        notes.push("no svspectrum.csv, spectrum plot skipped".into());
    }

    Ok(notes)
}
