//! Minimal self-contained SVG log-log plot of the ratio sweep with the
//! fitted reference decay anchored at the largest N.

// `!(x > 0.0)` keeps NaN ratios out as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use kac_core::functionals::SweepPoint;

pub fn ratio_plot(points: &[SweepPoint], beta: f64) -> Option<String> {
    if points.len() < 2 || points.iter().any(|p| !(p.ratio > 0.0)) {
        return None;
    }
    let (w, h) = (640.0, 440.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 20.0, 50.0);
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.ratio.log10()).collect();
    let last = points.last()?;
    let c_ref = last.ratio * (last.n as f64).powf(1.0 - 2.0 * beta) / (last.n as f64).ln();
    let reference: Vec<f64> = points
        .iter()
        .map(|p| {
            let nf = p.n as f64;
            (c_ref * nf.ln() / nf.powf(1.0 - 2.0 * beta)).log10()
        })
        .collect();
    let x_lo = xs.first()? - 0.05;
    let x_hi = xs.last()? + 0.05;
    let y_lo = ys
        .iter()
        .chain(&reference)
        .cloned()
        .fold(f64::MAX, f64::min)
        - 0.1;
    let y_hi = ys
        .iter()
        .chain(&reference)
        .cloned()
        .fold(f64::MIN, f64::max)
        + 0.1;
    let px = |x: f64| ml + (x - x_lo) / (x_hi - x_lo) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y_lo) / (y_hi - y_lo) * (h - mt - mb);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    for p in points {
        let x = px((p.n as f64).log10());
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            h - mb + 18.0,
            p.n
        ));
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#cccccc\"/>\n",
            mt,
            h - mb
        ));
    }
    let mut ticks = Vec::new();
    let mut t = y_lo.ceil();
    while t <= y_hi {
        ticks.push(t);
        t += 1.0;
    }
    if ticks.len() < 2 {
        ticks = vec![y_lo, y_hi];
    }
    for t in ticks {
        let y = py(t);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">1e{t:.0}</text>\n",
            ml - 6.0,
            y + 4.0
        ));
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#eeeeee\"/>\n",
            w - mr
        ));
    }
    let path: Vec<String> = xs
        .iter()
        .zip(&reference)
        .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#d62728\" stroke-dasharray=\"6,4\" points=\"{}\"/>\n",
        path.join(" ")
    ));
    for (&x, &y) in xs.iter().zip(&ys) {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#1f77b4\"/>\n",
            px(x),
            py(y)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\">ratio vs N (log-log); dashed: C log N / N^(1-2 beta)</text>\n",
        ml + 8.0,
        mt + 14.0
    ));
    svg.push_str("</svg>\n");
    Some(svg)
}
