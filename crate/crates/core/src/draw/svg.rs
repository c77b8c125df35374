use std::fmt::Write;

use super::Phenotype;

/// SVG 1.1 document with one `<polyline>` per path, in path order.
/// Coordinates are written with three decimals.
pub fn to_svg(p: &Phenotype) -> Vec<u8> {
    let (w, h) = (p.canvas.width, p.canvas.height);
    let mut s = String::with_capacity(256 + p.paths.iter().map(|p| p.points.len() * 16 + 64).sum::<usize>());
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">");
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    s.push_str("<g fill=\"none\" stroke=\"black\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n");
    for path in &p.paths {
        let _ = write!(s, "<polyline data-pen=\"{}\" stroke-width=\"{:.3}\" points=\"", path.pen, p.stroke_width(path.pen));
        for (i, q) in path.points.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.3},{:.3}", q[0], q[1]);
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</g>\n</svg>\n");
    s.into_bytes()
}
