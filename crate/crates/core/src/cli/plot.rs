use crate::scheduler::BenchRow;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;

/// Throughput against worker count, with the ideal linear-scaling line dashed.
pub fn throughput_svg(rows: &[BenchRow], parser_id: &str) -> String {
    let max_w = rows.iter().map(|r| r.workers).max().unwrap_or(1) as f64;
    let base = rows.first().map_or(0.0, |r| r.throughput / r.workers as f64);
    let max_t = rows
        .iter()
        .map(|r| r.throughput.max(base * r.workers as f64))
        .fold(1e-9, f64::max);
    let x = |w: f64| PAD + (W - 2.0 * PAD) * w / max_w;
    let y = |t: f64| H - PAD - (H - 2.0 * PAD) * t / max_t;
    let line = |pts: Vec<(f64, f64)>| pts.iter().map(|(a, b)| format!("{a:.1},{b:.1}")).collect::<Vec<_>>().join(" ");
    let measured = line(rows.iter().map(|r| (x(r.workers as f64), y(r.throughput))).collect());
    let ideal = line(rows.iter().map(|r| (x(r.workers as f64), y(base * r.workers as f64))).collect());
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    s.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = H - PAD,
        r = W - PAD
    ));
    for r in rows {
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            x(r.workers as f64),
            H - PAD + 16.0,
            r.workers
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">workers</text>\n",
        W / 2.0,
        H - 8.0
    ));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" transform=\"rotate(-90 14 {:.1})\" text-anchor=\"middle\">docs/s (max {max_t:.1})</text>\n",
        H / 2.0,
        H / 2.0
    ));
    s.push_str(&format!("<text x=\"{PAD}\" y=\"20\">{parser_id} throughput</text>\n"));
    s.push_str(&format!("<polyline points=\"{ideal}\" fill=\"none\" stroke=\"grey\" stroke-dasharray=\"4 3\"/>\n"));
    s.push_str(&format!("<polyline points=\"{measured}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n"));
    for r in rows {
        s.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"steelblue\"/>\n",
            x(r.workers as f64),
            y(r.throughput)
        ));
    }
    s.push_str("</svg>\n");
    s
}
