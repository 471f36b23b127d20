//! Static SVG line plots of a profile against `log10 xi`.

use std::fmt::Write;

use crate::output::ProfileRow;

const W: f64 = 640.0;
const H: f64 = 220.0;
const PAD: f64 = 48.0;

fn panel(out: &mut String, y0: f64, label: &str, xs: &[f64], ys: &[f64], sonic: Option<f64>) {
    let (xmin, xmax) = bounds(xs);
    let (mut ymin, mut ymax) = bounds(ys);
    if ymax - ymin < 1e-300 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let sx = |x: f64| PAD + (x - xmin) / (xmax - xmin) * (W - 2.0 * PAD);
    let sy = |y: f64| y0 + H - PAD / 2.0 - (y - ymin) / (ymax - ymin) * (H - PAD);
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#888"/>"##,
        PAD,
        y0 + PAD / 2.0,
        W - 2.0 * PAD,
        H - PAD
    );
    let _ = writeln!(out, r#"<text x="8" y="{:.2}" font-size="14">{label}</text>"#, y0 + H / 2.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10">{ymax:.4e}</text>"#, PAD + 4.0, y0 + PAD / 2.0 + 12.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10">{ymin:.4e}</text>"#, PAD + 4.0, y0 + H - PAD / 2.0 - 4.0);
    if let Some(z) = sonic {
        let x = sx(z.log10());
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#c33" stroke-dasharray="4 3"/>"##,
            y0 + PAD / 2.0,
            y0 + H - PAD / 2.0
        );
    }
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite())
        .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(out, r##"<polyline fill="none" stroke="#124" stroke-width="1.2" points="{}"/>"##, pts.join(" "));
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter().filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Three stacked panels of `R`, `V` and `Pi`.
pub fn profile_svg(rows: &[ProfileRow], sonic_xi: Option<f64>) -> String {
    let xs: Vec<f64> = rows.iter().map(|r| r.xi.log10()).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{}" font-family="sans-serif">"#,
        3.0 * H + 30.0
    );
    let cols: [(&str, Vec<f64>); 3] = [
        ("R", rows.iter().map(|r| r.R).collect()),
        ("V", rows.iter().map(|r| r.V).collect()),
        ("Pi", rows.iter().map(|r| r.Pi).collect()),
    ];
    for (i, (label, ys)) in cols.iter().enumerate() {
        if !xs.is_empty() {
            panel(&mut out, i as f64 * H, label, &xs, ys, sonic_xi);
        }
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12">log10 xi</text>"#, W / 2.0 - 20.0, 3.0 * H + 20.0);
    out.push_str("</svg>\n");
    out
}
