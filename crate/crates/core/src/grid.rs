//! Square plane grids, functions sampled on them, and basin label grids.
//!
//! Nodes include the edges: node `(i, j)` sits at
//! `center + (-w + i h) + i (-w + j h)` with `h = 2w / (n - 1)`, and is
//! stored at index `j * n + i`.

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridGeometry {
    pub center: [f64; 2],
    pub half_width: f64,
    pub resolution: usize,
}

impl GridGeometry {
    pub fn new(center: Complex64, half_width: f64, resolution: usize) -> Result<Self> {
        let g = Self {
            center: [center.re, center.im],
            half_width,
            resolution,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::arg("resolution", "grid needs at least 2 nodes per side"));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::arg("half_width", "must be positive and finite"));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::arg("center", "must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.resolution == 0
    }

    #[inline]
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.resolution as f64 - 1.0)
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.step() * std::f64::consts::SQRT_2
    }

    /// Default capture tolerance: two cell diagonals.
    pub fn capture_tolerance(&self) -> f64 {
        2.0 * self.cell_diagonal()
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        let h = self.step();
        Complex64::new(
            self.center[0] - self.half_width + i as f64 * h,
            self.center[1] - self.half_width + j as f64 * h,
        )
    }

    #[inline]
    pub fn node_at(&self, idx: usize) -> Complex64 {
        self.node(idx % self.resolution, idx / self.resolution)
    }

    /// Continuous node coordinates of `z` (node units, origin at node (0,0)).
    #[inline]
    pub fn coords(&self, z: Complex64) -> (f64, f64) {
        let h = self.step();
        (
            (z.re - self.center[0] + self.half_width) / h,
            (z.im - self.center[1] + self.half_width) / h,
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let (x, y) = self.coords(z);
        let top = (self.resolution - 1) as f64;
        (0.0..=top).contains(&x) && (0.0..=top).contains(&y)
    }

    /// Nearest node index, clamping to the grid.
    pub fn nearest_node(&self, z: Complex64) -> usize {
        let (x, y) = self.coords(z);
        let top = (self.resolution - 1) as f64;
        let i = x.round().clamp(0.0, top) as usize;
        let j = y.round().clamp(0.0, top) as usize;
        j * self.resolution + i
    }

    pub fn check_same(&self, other: &GridGeometry) -> Result<()> {
        if self != other {
            return Err(Error::GeometryMismatch(format!("{:?} vs {:?}", self, other)));
        }
        Ok(())
    }
}

/// Real function sampled at the grid nodes, plus its value at ∞.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
    pub value_at_infinity: f64,
    pub name: String,
    pub iterations: usize,
}

impl GridFunction {
    pub fn new(geometry: GridGeometry, values: Vec<f64>, value_at_infinity: f64) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                geometry.n(),
                geometry.n()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || !value_at_infinity.is_finite() {
            return Err(Error::arg("values", "grid values must be finite"));
        }
        Ok(Self {
            geometry,
            values,
            value_at_infinity,
            name: String::new(),
            iterations: 0,
        })
    }

    pub fn constant(geometry: GridGeometry, c: f64) -> Self {
        Self {
            geometry,
            values: vec![c; geometry.len()],
            value_at_infinity: c,
            name: String::new(),
            iterations: 0,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(geometry: GridGeometry, value_at_infinity: f64, f: F) -> Self
    where
        F: Fn(Complex64) -> f64 + Sync,
    {
        let values = (0..geometry.len())
            .into_par_iter()
            .map(|k| f(geometry.node_at(k)))
            .collect();
        Self {
            geometry,
            values,
            value_at_infinity,
            name: String::new(),
            iterations: 0,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Bilinear value at `z`, `None` outside the grid; ∞ reads the infinity value.
    pub fn interpolate(&self, z: SpherePoint) -> Option<f64> {
        let z = match z {
            SpherePoint::Infinity => return Some(self.value_at_infinity),
            SpherePoint::Finite(z) => z,
        };
        if !self.geometry.contains(z) {
            return None;
        }
        let (x, y) = self.geometry.coords(z);
        let n = self.geometry.n();
        let i = (x.floor() as usize).min(n - 2);
        let j = (y.floor() as usize).min(n - 2);
        Some(bilinear(&self.values, j * n + i, n, x - i as f64, y - j as f64))
    }

    /// Sup norm over nodes and the infinity value.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .fold(self.value_at_infinity.abs(), |m, v| m.max(v.abs()))
    }

    /// `sup |self - other|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.geometry.check_same(&other.geometry)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold((self.value_at_infinity - other.value_at_infinity).abs(), |m, (a, b)| {
                m.max((a - b).abs())
            }))
    }

    /// `a self + b other`.
    pub fn lin_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.geometry.check_same(&other.geometry)?;
        Ok(GridFunction {
            geometry: self.geometry,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            value_at_infinity: a * self.value_at_infinity + b * other.value_at_infinity,
            name: String::new(),
            iterations: 0,
        })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((self.value_at_infinity, self.value_at_infinity), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // clamped so that equal endpoints give that value exactly
    (a + t * (b - a)).clamp(a.min(b), a.max(b))
}

/// Bilinear read of the cell whose lower-left node is `base`.
#[inline]
pub(crate) fn bilinear(v: &[f64], base: usize, n: usize, ax: f64, ay: f64) -> f64 {
    let lo = lerp(v[base], v[base + 1], ax);
    let hi = lerp(v[base + n], v[base + n + 1], ax);
    lerp(lo, hi, ay)
}

/// Label of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Escaping,
    /// Basin of the minimal set with this index.
    Basin(u16),
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinLabelGrid {
    pub geometry: GridGeometry,
    pub labels: Vec<Label>,
    pub depth: usize,
    /// One representative point per basin index, used by out-of-grid reads.
    pub representatives: Vec<SpherePoint>,
}

impl BasinLabelGrid {
    pub fn label_near(&self, z: Complex64) -> Label {
        self.labels[self.geometry.nearest_node(z)]
    }

    pub fn undecided_fraction(&self) -> f64 {
        self.count(Label::Undecided) as f64 / self.labels.len() as f64
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Relabels basin `k` as basin `perm[k]`.
    pub fn relabeled(&self, perm: &[usize]) -> BasinLabelGrid {
        let mut reps = self.representatives.clone();
        for (k, &to) in perm.iter().enumerate() {
            reps[to] = self.representatives[k];
        }
        BasinLabelGrid {
            geometry: self.geometry,
            labels: self
                .labels
                .iter()
                .map(|l| match l {
                    Label::Basin(k) => Label::Basin(perm[*k as usize] as u16),
                    other => *other,
                })
                .collect(),
            depth: self.depth,
            representatives: reps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_nodes_include_edges() {
        let g = GridGeometry::new(Complex64::new(1.0, -1.0), 2.0, 5).unwrap();
        assert_eq!(g.node(0, 0), Complex64::new(-1.0, -3.0));
        assert_eq!(g.node(4, 4), Complex64::new(3.0, 1.0));
        assert_eq!(g.step(), 1.0);
        assert!(g.contains(Complex64::new(3.0, 1.0)));
        assert!(!g.contains(Complex64::new(3.01, 1.0)));
        assert!(GridGeometry::new(Complex64::new(0.0, 0.0), 1.0, 1).is_err());
    }

    #[test]
    fn interpolation_reproduces_affine_functions() {
        let g = GridGeometry::new(Complex64::new(0.0, 0.0), 1.0, 9).unwrap();
        let f = GridFunction::from_fn(g, 0.0, |z| 2.0 * z.re - z.im + 0.5);
        for z in [
            Complex64::new(0.13, -0.77),
            Complex64::new(1.0, 1.0),
            Complex64::new(-1.0, 0.3),
        ] {
            let v = f.interpolate(SpherePoint::new(z)).unwrap();
            assert!((v - (2.0 * z.re - z.im + 0.5)).abs() < 1e-13);
        }
        assert_eq!(f.interpolate(SpherePoint::real(1.5)), None);
        assert_eq!(f.interpolate(SpherePoint::Infinity), Some(0.0));
    }

    #[test]
    fn lerp_exact_on_constants() {
        let v = vec![0.3; 4];
        assert_eq!(bilinear(&v, 0, 2, 0.123456789, 0.987654321), 0.3);
    }
}
