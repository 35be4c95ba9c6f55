//! CSV persistence and SVG BER plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::sweep::BerRecord;
use crate::error::{Error, Result};

/// Published BER curves of the four reference detectors, `(snr_db, ber)`.
pub const REFERENCE_CURVES: [(&str, &[(f64, f64)]); 4] = [
    (
        "coherent",
        &[(0.0, 0.1269034), (4.0, 0.0221382), (8.0, 0.001557), (12.0, 0.0000579), (14.0, 0.0000111)],
    ),
    (
        "p1",
        &[(0.0, 0.359), (4.0, 0.1865), (8.0, 0.03572), (12.0, 0.00246), (17.0, 0.0000418)],
    ),
    (
        "p2",
        &[(0.0, 0.33518), (4.0, 0.12656), (8.0, 0.0162), (12.0, 0.0009408), (17.0, 0.000027)],
    ),
    (
        "p3",
        &[(0.0, 0.311), (4.0, 0.0966), (8.0, 0.0102121), (12.0, 0.0005193), (17.0, 0.0000084)],
    ),
];

/// Reference BER for `detector` at `snr_db`, if published.
pub fn reference_ber(detector: &str, snr_db: f64) -> Option<f64> {
    REFERENCE_CURVES
        .iter()
        .find(|(name, _)| *name == detector)
        .and_then(|(_, pts)| pts.iter().find(|(s, _)| *s == snr_db))
        .map(|&(_, ber)| ber)
}

pub fn write_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    let bytes = csv_bytes(records)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Header `detector,snr_db,bits,errors,ber,seconds`, LF line endings.
pub fn csv_bytes(records: &[BerRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Clone, Debug, Default)]
pub struct PlotOptions {
    /// Legend label per detector name; unknown names are shown as-is.
    pub labels: BTreeMap<String, String>,
    pub overlay_reference: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#000000", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub fn render_svg(records: &[BerRecord], path: &Path, opts: &PlotOptions) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to plot".into()));
    }
    std::fs::write(path, svg_string(records, opts))?;
    Ok(())
}

/// Log-scale BER against SNR, one polyline per detector.
pub fn svg_string(records: &[BerRecord], opts: &PlotOptions) -> String {
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        match series.iter_mut().find(|(n, _)| *n == r.detector) {
            Some((_, pts)) => pts.push((r.snr_db, r.ber)),
            None => series.push((r.detector.clone(), vec![(r.snr_db, r.ber)])),
        }
    }
    for (_, pts) in &mut series {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let overlay: Vec<(String, Vec<(f64, f64)>)> = if opts.overlay_reference {
        REFERENCE_CURVES
            .iter()
            .filter(|(name, _)| series.iter().any(|(n, _)| n == name))
            .map(|(name, pts)| (name.to_string(), pts.to_vec()))
            .collect()
    } else {
        Vec::new()
    };

    let all = series.iter().chain(&overlay).flat_map(|(_, p)| p.iter());
    let (mut x_min, mut x_max, mut y_min) = (f64::INFINITY, f64::NEG_INFINITY, 1.0f64);
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        if y > 0.0 {
            y_min = y_min.min(y);
        }
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let dec_lo = y_min.log10().floor().min(-1.0);
    let dec_hi = 0.0;
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| TOP + (dec_hi - y.log10()) / (dec_hi - dec_lo) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    let mut dec = dec_lo;
    while dec <= dec_hi {
        let y = py(10f64.powf(dec));
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{}</text>"#, x0 - 6.0, y + 4.0, dec as i32);
        dec += 1.0;
    }
    let tick_step = if x_max - x_min > 10.0 { 2.0 } else { 1.0 };
    let mut x = x_min.ceil();
    while x <= x_max + 1e-9 {
        let xp = px(x);
        let _ = writeln!(s, r##"<line x1="{xp:.2}" y1="{y0}" x2="{xp:.2}" y2="{y1}" stroke="#eeeeee"/>"##);
        let _ = writeln!(s, r#"<text x="{xp:.2}" y="{}" text-anchor="middle">{x}</text>"#, y1 + 16.0);
        x += tick_step;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">SNR per bit (dB)</text>"#, (x0 + x1) / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {}) rotate(-90)" text-anchor="middle">BER</text>"#,
        (y0 + y1) / 2.0
    );

    let label = |name: &str| opts.labels.get(name).cloned().unwrap_or_else(|| name.to_string());
    let mut legend = Vec::new();
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
        for c in &coords {
            let (cx, cy) = c.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        legend.push((label(name), color, false));
        if let Some((_, ref_pts)) = overlay.iter().find(|(n, _)| n == name) {
            let coords: Vec<String> = ref_pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1" stroke-dasharray="4 3"/>"#,
                coords.join(" ")
            );
            legend.push((format!("{} (reference)", label(name)), color, true));
        }
    }
    let (lx, mut ly) = (x1 - 190.0, y0 + 16.0);
    for (text, color, dashed) in legend {
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, text);
        ly += 16.0;
    }
    s.push_str("</svg>\n");
    s
}
