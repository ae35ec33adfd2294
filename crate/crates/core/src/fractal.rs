//! Julia-set clouds by backward iteration, basin label grids, and the
//! kernel-Julia and hyperbolicity probes.

use crate::error::{Error, Result};
use crate::geometry::{RationalMap, SpherePoint};
use crate::grid::{BasinLabelGrid, GridGeometry, Label};
use crate::minimal::MinimalSetEstimate;
use crate::poly;
use crate::rng::RngStreams;
use crate::semigroup::DiscreteMeasure;
use crate::spatial::{PointCloud, Provenance, SphereIndex};
use crate::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

/// Independent backward chains; fixed so output does not depend on threads.
const CHAINS: usize = 8;

/// Repelling fixed point of `h` with the largest multiplier, if any.
pub fn repelling_fixed_point(h: &RationalMap) -> Option<Complex64> {
    let eq = poly::sub(
        h.numerator(),
        &poly::mul(h.denominator(), &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
    );
    if poly::degree(&eq) == 0 {
        return None;
    }
    poly::roots(&eq)
        .into_iter()
        .map(|r| (r.value, h.derivative_at(r.value).norm()))
        .filter(|(z, m)| z.is_finite() && m.is_finite() && *m > 1.0 + 1e-9)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(z, _)| z)
}

/// Backward chaos game: generator `j` with probability `p_j`, then a preimage
/// branch uniform among the `deg h_j` branches.
fn backward_chain(
    measure: &DiscreteMeasure,
    n_points: usize,
    burn_in: usize,
    provenance: Provenance,
    streams: RngStreams,
) -> Result<PointCloud> {
    let sys = measure.system();
    let seed = sys
        .generators()
        .iter()
        .find_map(repelling_fixed_point)
        .ok_or(Error::NoRepellingFixedPoint)?;
    if n_points == 0 {
        return Err(Error::arg("n_points", "must be positive"));
    }
    let per_chain = n_points.div_ceil(CHAINS);
    let chains: Vec<Vec<SpherePoint>> = (0..CHAINS)
        .into_par_iter()
        .map(|c| {
            let mut rng = streams.stream(c as u64);
            let mut z = SpherePoint::Finite(seed);
            let mut out = Vec::with_capacity(per_chain);
            for step in 0..burn_in + per_chain {
                let j = measure.sample_letter(&mut rng);
                let pre = sys.generators()[j].preimages(z);
                z = pre[rng.random_range(0..pre.len())];
                if step >= burn_in {
                    out.push(z);
                }
            }
            out
        })
        .collect();
    let mut points: Vec<SpherePoint> = chains.into_iter().flatten().collect();
    points.truncate(n_points);
    PointCloud::new(points, provenance)
}

/// Approximate `J(G)` seeded at a repelling fixed point of a generator.
pub fn julia_backward_cloud(
    measure: &DiscreteMeasure,
    n_points: usize,
    burn_in: usize,
    streams: RngStreams,
) -> Result<PointCloud> {
    backward_chain(measure, n_points, burn_in, Provenance::Julia, streams)
}

/// Samples of the projection `λ` of the maximal relative entropy measure.
pub fn sample_lambda(
    measure: &DiscreteMeasure,
    n_points: usize,
    burn_in: usize,
    streams: RngStreams,
) -> Result<PointCloud> {
    backward_chain(measure, n_points, burn_in, Provenance::Lambda, streams)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    pub depth: usize,
    pub n_words: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { depth: 64, n_words: 8 }
    }
}

/// Labels each node by where `n_words` sampled orbits from it are captured:
/// all by set `k` gives `Basin(k)`, all escaping gives `Escaping`, anything
/// else `Undecided`. The set `{∞}` is represented by `Escaping`.
pub fn classify_plane_grid(
    measure: &DiscreteMeasure,
    minimal_sets: &[MinimalSetEstimate],
    geometry: &GridGeometry,
    cfg: &ClassifyConfig,
    streams: RngStreams,
) -> Result<BasinLabelGrid> {
    geometry.validate()?;
    let sys = measure.system();
    if minimal_sets.is_empty() && !sys.all_polynomial() {
        return Err(Error::arg(
            "minimal_sets",
            "need at least one minimal set for a non-polynomial system",
        ));
    }
    if cfg.n_words == 0 {
        return Err(Error::arg("n_words", "must be positive"));
    }
    let regions: Vec<(usize, SphereIndex, f64)> = minimal_sets
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_infinity())
        .map(|(k, s)| (k, SphereIndex::build(&s.points(), s.tolerance), s.tolerance))
        .collect();
    let outcome = |z: SpherePoint| -> Option<Label> {
        if sys.escaped(z) || (sys.all_polynomial() && z.is_infinity()) {
            return Some(Label::Escaping);
        }
        regions
            .iter()
            .find(|(_, idx, tol)| idx.any_within(z, *tol))
            .map(|(k, _, _)| Label::Basin(*k as u16))
    };
    let n_words = cfg.n_words as u64;
    let labels: Vec<Label> = (0..geometry.len())
        .into_par_iter()
        .map(|node| {
            let start = SpherePoint::Finite(geometry.node_at(node));
            let mut agreed: Option<Label> = None;
            for w in 0..n_words {
                let mut rng = streams.stream(node as u64 * n_words + w);
                let mut z = start;
                let mut hit = outcome(z);
                let mut step = 0;
                while hit.is_none() && step < cfg.depth {
                    z = sys.apply(measure.sample_letter(&mut rng), z);
                    hit = outcome(z);
                    step += 1;
                }
                match (hit, agreed) {
                    (None, _) => return Label::Undecided,
                    (Some(h), None) => agreed = Some(h),
                    (Some(h), Some(a)) if h != a => return Label::Undecided,
                    _ => {}
                }
            }
            agreed.unwrap_or(Label::Undecided)
        })
        .collect();
    Ok(BasinLabelGrid {
        geometry: *geometry,
        labels,
        depth: cfg.depth,
        representatives: minimal_sets.iter().map(|s| s.representative()).collect(),
    })
}

/// Fatou-set surrogate: beyond the escape radius, or the 3x3 block of nodes
/// around `z` carries one common basin or escaping label.
pub fn in_fatou_surrogate(measure: &DiscreteMeasure, basins: &BasinLabelGrid, z: SpherePoint) -> bool {
    let sys = measure.system();
    let z = match z {
        SpherePoint::Infinity => return sys.all_polynomial(),
        SpherePoint::Finite(z) => z,
    };
    if sys.escape_radius().is_some_and(|r| z.norm() >= r) {
        return true;
    }
    let g = &basins.geometry;
    if !g.contains(z) {
        return false;
    }
    let (x, y) = g.coords(z);
    let n = g.n() as i64;
    let (ci, cj) = (x.round() as i64, y.round() as i64);
    let mut first = None;
    for dj in -1..=1 {
        for di in -1..=1 {
            let (i, j) = (ci + di, cj + dj);
            if i < 0 || j < 0 || i >= n || j >= n {
                return false;
            }
            let l = basins.labels[(j * n + i) as usize];
            if l == Label::Undecided {
                return false;
            }
            match first {
                None => first = Some(l),
                Some(f) if f != l => return false,
                _ => {}
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub probed: usize,
    /// Probed points some word carried into the Fatou surrogate.
    pub escorted: usize,
    pub fraction: f64,
    /// Largest word length needed among escorted points.
    pub max_depth: usize,
    /// True iff every probed point was escorted.
    pub consistent_with_empty_kernel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelProbeConfig {
    pub word_depth: usize,
    /// Images kept per search level.
    pub branch_cap: usize,
    pub max_probes: usize,
}

impl Default for KernelProbeConfig {
    fn default() -> Self {
        Self {
            word_depth: 20,
            branch_cap: 64,
            max_probes: 1000,
        }
    }
}

/// Searches, for each sampled cloud point, a word carrying it into the
/// Fatou surrogate.
pub fn kernel_julia_probe(
    measure: &DiscreteMeasure,
    cloud: &[SpherePoint],
    basins: &BasinLabelGrid,
    cfg: &KernelProbeConfig,
    streams: RngStreams,
) -> Result<KernelReport> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let sys = measure.system();
    let step = cloud.len().div_ceil(cfg.max_probes.max(1)).max(1);
    let probes: Vec<SpherePoint> = cloud.iter().step_by(step).copied().collect();
    let depths: Vec<Option<usize>> = probes
        .par_iter()
        .enumerate()
        .map(|(k, &z)| {
            let mut rng = streams.stream(k as u64);
            if in_fatou_surrogate(measure, basins, z) {
                return Some(0);
            }
            let mut frontier = vec![z];
            for d in 1..=cfg.word_depth {
                let mut next = Vec::with_capacity(frontier.len() * sys.len());
                for &p in &frontier {
                    for j in 0..sys.len() {
                        let q = sys.apply(j, p);
                        if in_fatou_surrogate(measure, basins, q) {
                            return Some(d);
                        }
                        next.push(q);
                    }
                }
                if next.len() > cfg.branch_cap {
                    next.shuffle(&mut rng);
                    next.truncate(cfg.branch_cap);
                }
                frontier = next;
            }
            None
        })
        .collect();
    let escorted = depths.iter().filter(|d| d.is_some()).count();
    let probed = probes.len();
    Ok(KernelReport {
        probed,
        escorted,
        fraction: escorted as f64 / probed as f64,
        max_depth: depths.iter().flatten().copied().max().unwrap_or(0),
        consistent_with_empty_kernel: escorted == probed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityReport {
    /// Minimum chordal distance from postcritical samples to the Julia cloud.
    pub min_distance: f64,
    pub cloud_resolution: f64,
    pub postcritical_samples: usize,
    /// `min_distance > 2 * cloud_resolution`.
    pub hyperbolic_consistent: bool,
}

/// Pushes every critical value forward along `n_words` random words of
/// length `orbit_depth` and measures the distance to the Julia cloud.
pub fn hyperbolicity_probe(
    measure: &DiscreteMeasure,
    julia: &PointCloud,
    orbit_depth: usize,
    n_words: usize,
    streams: RngStreams,
) -> Result<HyperbolicityReport> {
    if julia.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let sys = measure.system();
    let mut values: Vec<SpherePoint> = Vec::new();
    for g in sys.generators() {
        for c in g.critical_points() {
            values.push(g.eval(c));
        }
    }
    if sys.all_polynomial() {
        values.push(SpherePoint::Infinity);
    }
    let samples: Vec<Vec<SpherePoint>> = (0..n_words)
        .into_par_iter()
        .map(|w| {
            let mut rng = streams.stream(w as u64);
            let word = measure.sample_word(orbit_depth, &mut rng);
            let mut out = Vec::new();
            for &v in &values {
                let mut z = v;
                out.push(z);
                for &j in &word.letters {
                    if sys.escaped(z) {
                        z = SpherePoint::Infinity;
                        out.push(z);
                        break;
                    }
                    z = sys.apply(j, z);
                    out.push(z);
                }
            }
            out
        })
        .collect();
    let samples: Vec<SpherePoint> = samples.into_iter().flatten().collect();
    let resolution = julia.resolution(2000);
    let idx = julia.index(resolution.max(1e-4));
    let min_distance = samples
        .par_iter()
        .map(|&z| idx.nearest(z).1)
        .reduce(|| f64::INFINITY, f64::min);
    Ok(HyperbolicityReport {
        min_distance,
        cloud_resolution: resolution,
        postcritical_samples: samples.len(),
        hyperbolic_consistent: min_distance > 2.0 * resolution,
    })
}
