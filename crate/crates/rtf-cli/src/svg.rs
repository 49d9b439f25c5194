//! Hand-rolled SVG output for 2-d tessellation draws. No templating crate:
//! the format is a dozen lines and byte-stability matters for determinism
//! checks.

use std::fmt::Write;

use rand::Rng;

use rtf_core::rng::{substream, tag};
use rtf_core::tessellation::Draw2D;

/// Seeded fill color for leaf `index`, independent of leaf order changes
/// upstream of the final draw.
fn leaf_color(seed: u64, index: u64) -> String {
    let mut rng = substream(seed, &[tag(b"leaf-color"), index]);
    // Bias toward mid-range channels so black boundaries stay visible.
    let c = |rng: &mut rand_chacha::ChaCha20Rng| 48 + (rng.gen::<u8>() % 160);
    format!("#{:02x}{:02x}{:02x}", c(&mut rng), c(&mut rng), c(&mut rng))
}

pub fn render_svg(draw: &Draw2D, domain: (f64, f64, f64, f64), seed: u64) -> String {
    let (x0, y0, x1, y1) = domain;
    let (w, h) = (x1 - x0, y1 - y0);
    let stroke = 0.004 * w.max(h);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{x0:.6} {y0:.6} {w:.6} {h:.6}\" \
         width=\"640\" height=\"{:.0}\">",
        640.0 * h / w
    );
    for (i, poly) in draw.leaves.iter().enumerate() {
        let mut points = String::new();
        for v in poly.vertices() {
            // SVG y runs downward; mirror within the domain strip.
            let _ = write!(points, "{:.6},{:.6} ", v[0], y0 + y1 - v[1]);
        }
        let _ = writeln!(
            out,
            "  <polygon points=\"{}\" fill=\"{}\" stroke=\"black\" stroke-width=\"{stroke:.6}\"/>",
            points.trim_end(),
            leaf_color(seed, i as u64),
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn vertices_csv(draw: &Draw2D) -> String {
    let mut out = String::from("polygon,vertex,x,y\n");
    for (i, poly) in draw.leaves.iter().enumerate() {
        for (j, v) in poly.vertices().iter().enumerate() {
            let _ = writeln!(out, "{i},{j},{},{}", v[0], v[1]);
        }
    }
    out
}
