//! Weighted point clouds on the sphere and a hashed neighbor index over
//! their stereographic embeddings (Euclidean distance there is chordal
//! distance on the sphere).

use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use num_complex::Complex64;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Julia,
    Lambda,
    Postcritical,
    MinimalSet,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Julia => "julia",
            Provenance::Lambda => "lambda",
            Provenance::Postcritical => "postcritical",
            Provenance::MinimalSet => "minimal_set",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<SpherePoint>,
    pub weights: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl PointCloud {
    pub fn new(points: Vec<SpherePoint>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self {
            points,
            weights: None,
            provenance,
        })
    }

    /// Attaches weights, normalizing them to sum to one.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.points.len() {
            return Err(Error::arg("weights", "length differs from point count"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::arg("weights", "weights must be finite and nonnegative"));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::arg("weights", "weights sum to zero"));
        }
        self.weights = Some(weights.iter().map(|w| w / s).collect());
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index(&self, cell: f64) -> SphereIndex {
        SphereIndex::build(&self.points, cell)
    }

    /// Median nearest-neighbor chordal distance over up to `max_probe` points.
    pub fn resolution(&self, max_probe: usize) -> f64 {
        if self.points.len() < 2 {
            return 0.0;
        }
        let n = self.points.len();
        // cell sized so that a typical neighbor sits in an adjacent cell
        let cell = (4.0 / (n as f64).sqrt()).clamp(1e-6, 0.5);
        let idx = self.index(cell);
        let step = (n / max_probe.max(1)).max(1);
        let mut d: Vec<f64> = (0..n)
            .step_by(step)
            .map(|i| idx.nearest_excluding(self.points[i], i).1)
            .filter(|d| d.is_finite())
            .collect();
        if d.is_empty() {
            return 0.0;
        }
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    }
}

type Key = (i32, i32, i32);

/// Uniform hash grid over embedded sphere points.
#[derive(Debug, Clone)]
pub struct SphereIndex {
    cell: f64,
    coords: Vec<[f64; 3]>,
    buckets: HashMap<Key, Vec<u32>>,
    lo: [f64; 3],
    hi: [f64; 3],
}

impl SphereIndex {
    pub fn build(points: &[SpherePoint], cell: f64) -> Self {
        let cell = cell.max(1e-9);
        let coords: Vec<[f64; 3]> = points.iter().map(|p| p.embed()).collect();
        let mut buckets: HashMap<Key, Vec<u32>> = HashMap::new();
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for (i, c) in coords.iter().enumerate() {
            buckets.entry(key(c, cell)).or_default().push(i as u32);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        Self {
            cell,
            coords,
            buckets,
            lo,
            hi,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Appends a point, returning its index.
    pub fn insert(&mut self, p: SpherePoint) -> usize {
        let c = p.embed();
        let i = self.coords.len();
        self.buckets.entry(key(&c, self.cell)).or_default().push(i as u32);
        for (a, &x) in c.iter().enumerate() {
            self.lo[a] = self.lo[a].min(x);
            self.hi[a] = self.hi[a].max(x);
        }
        self.coords.push(c);
        i
    }

    /// True if some indexed point lies within chordal distance `r` of `q`.
    pub fn any_within(&self, q: SpherePoint, r: f64) -> bool {
        let c = q.embed();
        if (0..3).any(|a| c[a] < self.lo[a] - r || c[a] > self.hi[a] + r) {
            return false;
        }
        let reach = (r / self.cell).ceil() as i32;
        if reach > 6 {
            return self.coords.iter().any(|p| dist(p, &c) <= r);
        }
        let k = key(&c, self.cell);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(b) = self.buckets.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                        if b.iter().any(|&i| dist(&self.coords[i as usize], &c) <= r) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Nearest indexed point and its chordal distance (`usize::MAX`, ∞ when empty).
    pub fn nearest(&self, q: SpherePoint) -> (usize, f64) {
        self.nearest_excluding(q, usize::MAX)
    }

    pub fn nearest_excluding(&self, q: SpherePoint, skip: usize) -> (usize, f64) {
        let c = q.embed();
        let k = key(&c, self.cell);
        let mut best = (usize::MAX, f64::INFINITY);
        for ring in 0..=6i32 {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(b) = self.buckets.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                            for &i in b {
                                let i = i as usize;
                                if i == skip {
                                    continue;
                                }
                                let d = dist(&self.coords[i], &c);
                                if d < best.1 {
                                    best = (i, d);
                                }
                            }
                        }
                    }
                }
            }
            // everything within `ring * cell` has been examined
            if best.1 <= ring as f64 * self.cell {
                return best;
            }
        }
        for (i, p) in self.coords.iter().enumerate() {
            if i == skip {
                continue;
            }
            let d = dist(p, &c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

fn key(c: &[f64; 3], cell: f64) -> Key {
    (
        (c[0] / cell).floor() as i32,
        (c[1] / cell).floor() as i32,
        (c[2] / cell).floor() as i32,
    )
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Planar bucket index over the finite points of a set.
#[derive(Debug, Clone)]
pub struct PlaneIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<Complex64>>,
}

impl PlaneIndex {
    /// `cell` should be at least the largest query radius.
    pub fn build(points: &[SpherePoint], cell: f64) -> Self {
        let cell = cell.max(1e-12);
        let mut buckets: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
        for z in points.iter().filter_map(|p| p.finite()) {
            buckets.entry(plane_key(z, cell)).or_default().push(z);
        }
        Self { cell, buckets }
    }

    /// Distance to the nearest point if it is within `r` (`r <= cell`).
    pub fn distance_within(&self, z: Complex64, r: f64) -> Option<f64> {
        let (kx, ky) = plane_key(z, self.cell);
        let mut best = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(b) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for p in b {
                        best = best.min((p - z).norm());
                    }
                }
            }
        }
        (best <= r).then_some(best)
    }
}

fn plane_key(z: Complex64, cell: f64) -> (i64, i64) {
    ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64)
}

/// Minimum chordal distance between two point sets.
pub fn set_distance(a: &[SpherePoint], b: &SphereIndex) -> f64 {
    a.iter().map(|&p| b.nearest(p).1).fold(f64::INFINITY, f64::min)
}
