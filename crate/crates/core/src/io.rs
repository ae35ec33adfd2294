//! Byte encoders for rasters (binary PGM) and point clouds (CSV). File
//! writing and JSON serialization of the sidecars are left to the caller.

use crate::geometry::SpherePoint;
use crate::grid::{BasinLabelGrid, GridFunction, Label};
use crate::spatial::PointCloud;
use serde::Serialize;
use std::fmt::Write;

/// Affine value→gray map of a 16-bit raster: `gray = round((v - lo) * scale)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrayMap {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub max_gray: u32,
    pub value_min: f64,
    pub value_max: f64,
    pub scale: f64,
    pub value_at_infinity: f64,
    /// Row 0 of the image is the top edge (largest imaginary part).
    pub orientation: &'static str,
    pub center: [f64; 2],
    pub half_width: f64,
}

/// Gray level per label in an 8-bit label raster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelLegend {
    pub width: usize,
    pub height: usize,
    pub entries: Vec<LegendEntry>,
    pub orientation: &'static str,
    pub center: [f64; 2],
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendEntry {
    pub gray: u8,
    pub label: String,
}

const ORIENTATION: &str = "row 0 = top edge (max imaginary part), column 0 = left edge";

fn header(n: usize, max: u32) -> Vec<u8> {
    format!("P5\n{n} {n}\n{max}\n").into_bytes()
}

/// Rows top to bottom, as image viewers expect.
fn rows_top_down(n: usize) -> impl Iterator<Item = usize> {
    (0..n).rev()
}

/// 16-bit big-endian PGM of a grid function.
pub fn encode_function_pgm(f: &GridFunction) -> (Vec<u8>, GrayMap) {
    let n = f.geometry.n();
    let (lo, hi) = f.min_max();
    let span = hi - lo;
    let scale = if span > 0.0 { 65535.0 / span } else { 0.0 };
    let mut out = header(n, 65535);
    out.reserve(2 * n * n);
    for j in rows_top_down(n) {
        for i in 0..n {
            let v = f.values[j * n + i];
            let g = ((v - lo) * scale).round().clamp(0.0, 65535.0) as u16;
            out.extend_from_slice(&g.to_be_bytes());
        }
    }
    let map = GrayMap {
        name: f.name.clone(),
        width: n,
        height: n,
        max_gray: 65535,
        value_min: lo,
        value_max: hi,
        scale,
        value_at_infinity: f.value_at_infinity,
        orientation: ORIENTATION,
        center: f.geometry.center,
        half_width: f.geometry.half_width,
    };
    (out, map)
}

fn label_gray(l: Label, n_basins: usize) -> u8 {
    match l {
        Label::Undecided => 0,
        Label::Escaping => 255,
        Label::Basin(k) => {
            let step = 200 / (n_basins.max(1) as u32 + 1);
            (40 + step * u32::from(k)).min(254) as u8
        }
    }
}

/// 8-bit PGM of basin labels.
pub fn encode_labels_pgm(b: &BasinLabelGrid) -> (Vec<u8>, LabelLegend) {
    let n = b.geometry.n();
    let k = b.representatives.len();
    let mut out = header(n, 255);
    out.reserve(n * n);
    for j in rows_top_down(n) {
        for i in 0..n {
            out.push(label_gray(b.labels[j * n + i], k));
        }
    }
    let mut entries = vec![
        LegendEntry {
            gray: 0,
            label: "undecided".into(),
        },
        LegendEntry {
            gray: 255,
            label: "escaping".into(),
        },
    ];
    for (idx, rep) in b.representatives.iter().enumerate() {
        entries.push(LegendEntry {
            gray: label_gray(Label::Basin(idx as u16), k),
            label: format!("basin {idx} (representative {})", point_text(*rep)),
        });
    }
    let legend = LabelLegend {
        width: n,
        height: n,
        entries,
        orientation: ORIENTATION,
        center: b.geometry.center,
        half_width: b.geometry.half_width,
    };
    (out, legend)
}

/// 8-bit PGM of a node mask (255 = set).
pub fn encode_mask_pgm(mask: &[bool], n: usize) -> Vec<u8> {
    let mut out = header(n, 255);
    for j in rows_top_down(n) {
        for i in 0..n {
            out.push(if mask[j * n + i] { 255 } else { 0 });
        }
    }
    out
}

fn point_text(p: SpherePoint) -> String {
    match p {
        SpherePoint::Infinity => "inf".into(),
        SpherePoint::Finite(z) => format!("{}{:+}i", z.re, z.im),
    }
}

/// `re,im,weight` per point; `∞` is written as `inf,inf,weight`.
pub fn encode_cloud_csv(cloud: &PointCloud) -> String {
    let mut s = String::from("re,im,weight\n");
    for (k, p) in cloud.points.iter().enumerate() {
        let w = cloud.weights.as_ref().map_or(1.0, |w| w[k]);
        match p {
            SpherePoint::Infinity => writeln!(s, "inf,inf,{w}"),
            SpherePoint::Finite(z) => writeln!(s, "{},{},{w}", z.re, z.im),
        }
        .expect("writing to a String");
    }
    s
}

/// Two-column CSV with a header.
pub fn encode_xy_csv(header: (&str, &str), rows: &[(f64, f64)]) -> String {
    let mut s = format!("{},{}\n", header.0, header.1);
    for (x, y) in rows {
        writeln!(s, "{x},{y}").expect("writing to a String");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use crate::spatial::Provenance;
    use crate::Complex64;

    #[test]
    fn pgm_header_and_size() {
        let g = GridGeometry::new(Complex64::new(0.0, 0.0), 1.0, 4).unwrap();
        let f = GridFunction::from_fn(g, 0.0, |z| z.re);
        let (bytes, map) = encode_function_pgm(&f);
        assert!(bytes.starts_with(b"P5\n4 4\n65535\n"));
        assert_eq!(bytes.len(), b"P5\n4 4\n65535\n".len() + 32);
        assert_eq!(map.value_min, -1.0);
    }

    #[test]
    fn cloud_infinity_row() {
        let c = PointCloud::new(
            vec![SpherePoint::Infinity, SpherePoint::real(0.5)],
            Provenance::MinimalSet,
        )
        .unwrap();
        let s = encode_cloud_csv(&c);
        assert_eq!(s, "re,im,weight\ninf,inf,1\n0.5,0,1\n");
    }
}
