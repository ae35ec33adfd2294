//! Minimal sets: discovery from fixed points of words, closure under the
//! generators, classification (attracting / J-touching / sub-rotative),
//! cycle structure, numerical mean-stability verdicts and family scans.

use crate::error::{Error, Result};
use crate::fractal::{classify_plane_grid, julia_backward_cloud, ClassifyConfig};
use crate::geometry::{chordal_distance, RationalMap, SpherePoint};
use crate::grid::GridGeometry;
use crate::poly;
use crate::rng::RngStreams;
use crate::semigroup::{DiscreteMeasure, GeneratorSystem};
use crate::spatial::{PlaneIndex, PointCloud, Provenance, SphereIndex};
use crate::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Attracting,
    JTouching,
    SubRotative,
    Unresolved,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Attracting => "attracting",
            Classification::JTouching => "j_touching",
            Classification::SubRotative => "sub_rotative",
            Classification::Unresolved => "unresolved",
        }
    }
}

/// Point-cloud approximation of a minimal set (`cloud == None` is `{∞}`).
#[derive(Debug, Clone)]
pub struct MinimalSetEstimate {
    pub name: String,
    pub cloud: Option<PointCloud>,
    pub classification: Classification,
    pub period: usize,
    pub cycle_components: Vec<Vec<SpherePoint>>,
    /// Chordal capture tolerance the estimate was built with.
    pub tolerance: f64,
    /// False when the closure hit its point cap before stabilizing.
    pub closed: bool,
}

impl MinimalSetEstimate {
    pub fn infinity(tolerance: f64) -> Self {
        Self {
            name: "infinity".into(),
            cloud: None,
            classification: Classification::Attracting,
            period: 1,
            cycle_components: vec![vec![SpherePoint::Infinity]],
            tolerance,
            closed: true,
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.cloud.is_none()
    }

    pub fn label(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        match &self.cloud {
            None => vec![SpherePoint::Infinity],
            Some(c) => c.points.clone(),
        }
    }

    pub fn representative(&self) -> SpherePoint {
        self.points()[0]
    }

    /// Largest chordal distance from an image `h(z)` of a cloud point to the cloud.
    pub fn closure_defect(&self, system: &GeneratorSystem) -> f64 {
        let pts = self.points();
        let idx = SphereIndex::build(&pts, self.tolerance.max(1e-9));
        let mut worst: f64 = 0.0;
        for &z in &pts {
            for j in 0..system.len() {
                let w = system.apply(j, z);
                if self.is_infinity() && w.is_infinity() {
                    continue;
                }
                worst = worst.max(idx.nearest(w).1);
            }
        }
        worst
    }

    /// Re-check of forward invariance within the capture tolerance.
    pub fn is_closed_under(&self, system: &GeneratorSystem) -> bool {
        self.closure_defect(system) <= self.tolerance
    }

    /// Chordal distance between two estimates.
    pub fn distance_to(&self, other: &MinimalSetEstimate) -> f64 {
        let idx = SphereIndex::build(&other.points(), self.tolerance.max(1e-9));
        crate::spatial::set_distance(&self.points(), &idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalSearchConfig {
    /// Longest word whose fixed points are examined.
    pub search_depth: usize,
    /// Words examined per length (all of them when fewer exist).
    pub words_per_length: usize,
    /// Chordal capture tolerance.
    pub tolerance: f64,
    /// Point cap for closures.
    pub closure_cap: usize,
    /// Longest word examined for non-attracting fixed points.
    pub extended_depth: usize,
    pub r_max: usize,
}

impl MinimalSearchConfig {
    pub fn for_grid(geometry: &GridGeometry) -> Self {
        Self {
            search_depth: 3,
            words_per_length: 64,
            tolerance: geometry.capture_tolerance(),
            closure_cap: 4096,
            extended_depth: 2,
            r_max: 16,
        }
    }
}

/// Degree cap for solving `w(z) = z` through the composed map.
const ALGEBRAIC_DEGREE_CAP: usize = 16;
const PUSH_FORWARD_STEPS: usize = 200;
const CLOSURE_LEVELS: usize = 400;

fn words_of_length(m: usize, len: usize, cap: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let total = (m as f64).powi(len as i32);
    if total <= cap as f64 {
        let total = total as usize;
        (0..total)
            .map(|mut k| {
                (0..len)
                    .map(|_| {
                        let l = k % m;
                        k /= m;
                        l
                    })
                    .collect()
            })
            .collect()
    } else {
        (0..cap)
            .map(|_| (0..len).map(|_| rng.random_range(0..m)).collect())
            .collect()
    }
}

/// Composition of a word (letters applied left to right), if its degree is small.
fn compose_word(system: &GeneratorSystem, word: &[usize]) -> Option<RationalMap> {
    let degree: usize = word.iter().map(|&j| system.generators()[j].degree()).product();
    if degree > ALGEBRAIC_DEGREE_CAP {
        return None;
    }
    let mut acc = system.generators()[word[0]].clone();
    for &j in &word[1..] {
        acc = system.generators()[j].compose(&acc).ok()?;
    }
    Some(acc)
}

/// Fixed points of the word with their multipliers.
fn word_fixed_points(system: &GeneratorSystem, word: &[usize]) -> Vec<(Complex64, f64)> {
    let mut out = Vec::new();
    let mut push = |z: Complex64| {
        if let Some(m) = system.word_multiplier(word, SpherePoint::Finite(z)) {
            out.push((z, m.norm()));
        }
    };
    if let Some(f) = compose_word(system, word) {
        let eq = poly::sub(
            f.numerator(),
            &poly::mul(f.denominator(), &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
        );
        if poly::degree(&eq) > 0 {
            for r in poly::roots(&eq) {
                push(r.value);
            }
        }
    } else {
        // orbit-based: iterate the word from the critical points of the generators
        let starts: Vec<SpherePoint> = system
            .generators()
            .iter()
            .flat_map(|g| g.critical_points())
            .chain(std::iter::once(SpherePoint::ZERO))
            .collect();
        for s in starts {
            let mut z = s;
            for _ in 0..64 {
                let next = system.apply_word(word, z);
                if system.escaped(next) || next.is_infinity() {
                    z = SpherePoint::Infinity;
                    break;
                }
                let done = chordal_distance(next, z) < 1e-12;
                z = next;
                if done {
                    break;
                }
            }
            if let SpherePoint::Finite(zf) = z {
                if chordal_distance(system.apply_word(word, z), z) < 1e-9 {
                    push(zf);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClosureStatus {
    Closed,
    CapHit,
    Escaped,
    HitKnown,
}

struct Closure {
    points: Vec<SpherePoint>,
    status: ClosureStatus,
}

/// Breadth-first forward closure of `seed`, deduplicated at `tol / 4`.
fn forward_closure(
    system: &GeneratorSystem,
    seed: SpherePoint,
    tol: f64,
    cap: usize,
    known: &[SphereIndex],
) -> Closure {
    let dedup = tol / 4.0;
    let mut idx = SphereIndex::build(&[seed], dedup);
    let mut points = vec![seed];
    let mut frontier = vec![seed];
    for _ in 0..CLOSURE_LEVELS {
        let mut next = Vec::new();
        for &p in &frontier {
            for j in 0..system.len() {
                let q = system.apply(j, p);
                if system.escaped(q) || (system.all_polynomial() && q.is_infinity()) {
                    return Closure {
                        points,
                        status: ClosureStatus::Escaped,
                    };
                }
                if known.iter().any(|k| k.any_within(q, tol)) {
                    return Closure {
                        points,
                        status: ClosureStatus::HitKnown,
                    };
                }
                if !idx.any_within(q, dedup) {
                    idx.insert(q);
                    points.push(q);
                    next.push(q);
                }
            }
        }
        if next.is_empty() {
            return Closure {
                points,
                status: ClosureStatus::Closed,
            };
        }
        if points.len() > cap {
            return Closure {
                points,
                status: ClosureStatus::CapHit,
            };
        }
        frontier = next;
    }
    Closure {
        points,
        status: ClosureStatus::CapHit,
    }
}

fn estimate_from_points(name: String, points: Vec<SpherePoint>, tol: f64, closed: bool) -> Result<MinimalSetEstimate> {
    Ok(MinimalSetEstimate {
        name,
        cloud: Some(PointCloud::new(points, Provenance::MinimalSet)?),
        classification: Classification::Unresolved,
        period: 1,
        cycle_components: Vec::new(),
        tolerance: tol,
        closed,
    })
}

/// Attracting minimal sets (plus `{∞}` for polynomial systems).
pub fn find_attracting_minimal_sets(
    measure: &DiscreteMeasure,
    cfg: &MinimalSearchConfig,
    streams: RngStreams,
) -> Result<Vec<MinimalSetEstimate>> {
    let sys = measure.system();
    let tol = cfg.tolerance;
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance", "must be positive"));
    }
    let mut word_rng = streams.fork(1).stream(0);
    let mut candidates: Vec<SpherePoint> = Vec::new();
    for len in 1..=cfg.search_depth.max(1) {
        for w in words_of_length(sys.len(), len, cfg.words_per_length, &mut word_rng) {
            for (z, mult) in word_fixed_points(sys, &w) {
                if mult < 1.0 && !sys.escaped(SpherePoint::Finite(z)) {
                    candidates.push(SpherePoint::Finite(z));
                }
            }
        }
    }
    // push forward by random words so that every candidate is absorbed
    let push = streams.fork(2);
    let absorbed: Vec<SpherePoint> = candidates
        .par_iter()
        .enumerate()
        .filter_map(|(k, &z)| {
            let mut rng = push.stream(k as u64);
            let mut cur = z;
            for _ in 0..PUSH_FORWARD_STEPS {
                cur = sys.apply(measure.sample_letter(&mut rng), cur);
                if sys.escaped(cur) || (sys.all_polynomial() && cur.is_infinity()) {
                    return None;
                }
            }
            Some(cur)
        })
        .collect();

    let mut clouds: Vec<(Vec<SpherePoint>, bool)> = Vec::new();
    let mut known: Vec<SphereIndex> = Vec::new();
    for z in absorbed {
        if known.iter().any(|k| k.any_within(z, 2.0 * tol)) {
            continue;
        }
        let c = forward_closure(sys, z, tol, cfg.closure_cap, &[]);
        match c.status {
            ClosureStatus::Escaped => continue,
            ClosureStatus::HitKnown => unreachable!("no known regions supplied"),
            ClosureStatus::Closed | ClosureStatus::CapHit => {
                known.push(SphereIndex::build(&c.points, tol));
                clouds.push((c.points, c.status == ClosureStatus::Closed));
            }
        }
    }
    let merged = merge_clouds(clouds, 2.0 * tol);
    let mut out = Vec::new();
    for (k, (pts, closed)) in merged.into_iter().enumerate() {
        let mut est = estimate_from_points(format!("set{k}"), pts, tol, closed)?;
        let (period, comps) = match period_structure(measure, &est, cfg.r_max) {
            Ok(v) => v,
            Err(_) => (1, vec![est.points()]),
        };
        est.period = period;
        est.cycle_components = comps;
        est.classification = if closed && attracting_witness(sys, &est, None).is_some() {
            Classification::Attracting
        } else {
            Classification::Unresolved
        };
        out.push(est);
    }
    if sys.all_polynomial() {
        out.push(MinimalSetEstimate::infinity(tol));
    }
    Ok(out)
}

fn merge_clouds(clouds: Vec<(Vec<SpherePoint>, bool)>, gap: f64) -> Vec<(Vec<SpherePoint>, bool)> {
    let mut out: Vec<(Vec<SpherePoint>, bool)> = Vec::new();
    for (pts, closed) in clouds {
        let idx = SphereIndex::build(&pts, gap);
        let mut merged = (pts, closed);
        let mut keep = Vec::new();
        for other in out.drain(..) {
            if other.0.iter().any(|&p| idx.any_within(p, gap)) {
                merged.0.extend(other.0);
                merged.1 &= other.1;
            } else {
                keep.push(other);
            }
        }
        keep.push(merged);
        out = keep;
    }
    out
}

/// Minimal sets not detected as attracting: closures of non-attracting fixed
/// points of short words that are finite, avoid ∞ and the known sets, and
/// are recurrent (every sampled point returns near the seed).
pub fn find_other_minimal_sets(
    measure: &DiscreteMeasure,
    known: &[MinimalSetEstimate],
    cfg: &MinimalSearchConfig,
    streams: RngStreams,
) -> Result<Vec<MinimalSetEstimate>> {
    let sys = measure.system();
    let tol = cfg.tolerance;
    let mut rng = streams.fork(3).stream(0);
    let mut seeds = Vec::new();
    for len in 1..=cfg.extended_depth {
        for w in words_of_length(sys.len(), len, cfg.words_per_length, &mut rng) {
            for (z, mult) in word_fixed_points(sys, &w) {
                if mult >= 1.0 && !sys.escaped(SpherePoint::Finite(z)) {
                    seeds.push(SpherePoint::Finite(z));
                }
            }
        }
    }
    let mut known_idx: Vec<SphereIndex> = known
        .iter()
        .filter(|k| !k.is_infinity())
        .map(|k| SphereIndex::build(&k.points(), tol))
        .collect();
    let mut found = Vec::new();
    let cap = cfg.closure_cap.min(2048);
    for z in seeds {
        if known_idx.iter().any(|k| k.any_within(z, 2.0 * tol)) {
            continue;
        }
        let c = forward_closure(sys, z, tol, cap, &known_idx);
        if c.status != ClosureStatus::Closed {
            continue;
        }
        let step = (c.points.len() / 16).max(1);
        let recurrent = c.points.iter().step_by(step).all(|&p| {
            let back = forward_closure(sys, p, tol, cap, &[]);
            back.status == ClosureStatus::Closed && back.points.iter().any(|&q| chordal_distance(q, z) <= tol)
        });
        if !recurrent {
            continue;
        }
        known_idx.push(SphereIndex::build(&c.points, tol));
        let mut est = estimate_from_points(format!("other{}", found.len()), c.points, tol, true)?;
        if let Ok((period, comps)) = period_structure(measure, &est, cfg.r_max) {
            est.period = period;
            est.cycle_components = comps;
        } else {
            est.cycle_components = vec![est.points()];
        }
        found.push(est);
    }
    Ok(found)
}

/// Two-ring contraction certificate: radii `(r_U, r_V)` and word length `n`.
/// For `{∞}` the radii are the moduli bounding `U = {|z| > r_U}` and
/// `V = {|z| > r_V}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingWitness {
    pub r_outer: f64,
    pub r_inner: f64,
    pub n: usize,
}

const RING_SAMPLES: usize = 16;
const RING_MAX_N: usize = 8;
const RING_WORD_CAP: usize = 256;

/// Searches planar radii `r_U ∈ {1/2, 1/4, ...}` with `r_V = r_U / 2` and
/// `n ≤ 8` such that all (sampled) `n`-words map `Ū` into `V`, where `U` and
/// `V` are neighborhoods of the cloud. With a Julia cloud, `Ū` must also stay
/// a capture tolerance away from it.
pub fn attracting_witness(
    system: &GeneratorSystem,
    set: &MinimalSetEstimate,
    julia: Option<&PointCloud>,
) -> Option<RingWitness> {
    if set.is_infinity() {
        // |h(z)| >= 2|z| beyond the escape radius: U = {|z| > R}, V = {|z| > 2R}
        let r = system.escape_radius()?;
        return Some(RingWitness {
            r_outer: r,
            r_inner: 2.0 * r,
            n: 1,
        });
    }
    let pts = set.points();
    let finite: Vec<Complex64> = pts.iter().filter_map(|p| p.finite()).collect();
    if finite.len() != pts.len() {
        return None;
    }
    let step = (finite.len() / 64).max(1);
    let reps: Vec<Complex64> = finite.iter().step_by(step).copied().collect();
    let m = system.len();
    let mut rng = RngStreams::new(0x5eed).stream(0);
    let mut r_u = 0.5;
    while r_u >= set.tolerance {
        let r_v = r_u / 2.0;
        let clear_of_julia = julia.is_none_or(|j| {
            let jpts: Vec<SpherePoint> = j.points.clone();
            let jidx = PlaneIndex::build(&jpts, r_u + set.tolerance);
            finite
                .iter()
                .all(|&z| jidx.distance_within(z, r_u + set.tolerance).is_none())
        });
        if clear_of_julia {
            let inner = PlaneIndex::build(&pts, r_v);
            let mut probes: Vec<Complex64> = Vec::new();
            for &c in &reps {
                probes.push(c);
                for k in 0..RING_SAMPLES {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / RING_SAMPLES as f64;
                    probes.push(c + Complex64::from_polar(r_u, t));
                    probes.push(c + Complex64::from_polar(0.5 * r_u, t + 0.2));
                }
            }
            for n in 1..=RING_MAX_N {
                let words = words_of_length(m, n, RING_WORD_CAP, &mut rng);
                let ok = words.par_iter().all(|w| {
                    probes
                        .iter()
                        .all(|&z| match system.apply_word(w, SpherePoint::Finite(z)) {
                            SpherePoint::Finite(img) => inner.distance_within(img, r_v).is_some(),
                            SpherePoint::Infinity => false,
                        })
                });
                if ok {
                    return Some(RingWitness {
                        r_outer: r_u,
                        r_inner: r_v,
                        n,
                    });
                }
            }
        }
        r_u /= 2.0;
    }
    None
}

/// Multiplier tolerance for rotation detection.
const ROTATION_TOL: f64 = 1e-3;

/// Orbit of a nearby point under a neutral word: does it wind around `z`
/// on a loop (16 angular bins all visited, bounded radius ratio)?
fn rotation_loop(system: &GeneratorSystem, word: &[usize], z: Complex64, eps: f64) -> bool {
    let mut cur = SpherePoint::Finite(z + Complex64::new(eps, 0.0));
    let mut bins = [0usize; 16];
    let (mut rmin, mut rmax) = (f64::INFINITY, 0.0f64);
    let n = 4096;
    for _ in 0..n {
        cur = system.apply_word(word, cur);
        let Some(w) = cur.finite() else { return false };
        let d = w - z;
        let r = d.norm();
        rmin = rmin.min(r);
        rmax = rmax.max(r);
        let a = (d.arg() + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        bins[((a * 16.0) as usize).min(15)] += 1;
    }
    let expected = n as f64 / 16.0;
    rmin > 0.25 * eps && rmax / rmin < 1.5 && bins.iter().all(|&b| b as f64 >= 0.5 * expected)
}

/// Whether some short word fixing a point of the set is neutral with
/// rotation-like behavior nearby.
fn sub_rotative_evidence(system: &GeneratorSystem, set: &MinimalSetEstimate) -> bool {
    let pts = set.points();
    let step = (pts.len() / 8).max(1);
    let mut rng = RngStreams::new(0x0707).stream(0);
    for len in 1..=3 {
        for w in words_of_length(system.len(), len, 64, &mut rng) {
            for &p in pts.iter().step_by(step) {
                let Some(z) = p.finite() else { continue };
                if chordal_distance(system.apply_word(&w, p), p) > set.tolerance {
                    continue;
                }
                let Some(m) = system.word_multiplier(&w, p) else {
                    continue;
                };
                if (m.norm() - 1.0).abs() <= ROTATION_TOL {
                    let eps = (4.0 * set.tolerance).min(0.05);
                    if rotation_loop(system, &w, z, eps) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Trichotomy classification against a Julia cloud.
pub fn classify_minimal_set(measure: &DiscreteMeasure, set: &MinimalSetEstimate, julia: &PointCloud) -> Classification {
    let sys = measure.system();
    if set.is_infinity() {
        return if attracting_witness(sys, set, Some(julia)).is_some() {
            Classification::Attracting
        } else {
            Classification::Unresolved
        };
    }
    let touch = set.tolerance.max(2.0 * julia.resolution(2000));
    let jidx = julia.index(touch);
    if set.points().iter().any(|&p| jidx.any_within(p, touch)) {
        return Classification::JTouching;
    }
    if !set.closed {
        return Classification::Unresolved;
    }
    if attracting_witness(sys, set, Some(julia)).is_some() {
        return Classification::Attracting;
    }
    if sub_rotative_evidence(sys, set) {
        return Classification::SubRotative;
    }
    Classification::Unresolved
}

/// Cycle length `r_L` and ordered components `L_1, ..., L_r` with
/// `h(L_j) ⊂ L_{j+1}` for every generator.
pub fn period_structure(
    measure: &DiscreteMeasure,
    set: &MinimalSetEstimate,
    r_max: usize,
) -> Result<(usize, Vec<Vec<SpherePoint>>)> {
    if set.is_infinity() {
        return Ok((1, vec![vec![SpherePoint::Infinity]]));
    }
    let pts = set.points();
    let link = set.tolerance;
    // single-linkage clusters at the capture scale
    let mut comp = vec![usize::MAX; pts.len()];
    let mut ncomp = 0;
    for s in 0..pts.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = ncomp;
        while let Some(a) = stack.pop() {
            for (b, &q) in pts.iter().enumerate() {
                if comp[b] == usize::MAX && chordal_distance(pts[a], q) <= link {
                    comp[b] = ncomp;
                    stack.push(b);
                }
            }
        }
        ncomp += 1;
    }
    // union-find over components so that the image relation is a function
    let mut parent: Vec<usize> = (0..ncomp).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let sys = measure.system();
    let full = SphereIndex::build(&pts, link);
    let mut target = vec![usize::MAX; ncomp];
    loop {
        let mut changed = false;
        target.iter_mut().for_each(|t| *t = usize::MAX);
        for (a, &p) in pts.iter().enumerate() {
            let ca = find(&mut parent, comp[a]);
            for j in 0..sys.len() {
                let (b, _) = full.nearest(sys.apply(j, p));
                if b == usize::MAX {
                    continue;
                }
                let cb = find(&mut parent, comp[b]);
                if target[ca] == usize::MAX {
                    target[ca] = cb;
                } else if target[ca] != cb {
                    let (x, y) = (find(&mut parent, target[ca]), cb);
                    if x != y {
                        parent[x.max(y)] = x.min(y);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let roots: Vec<usize> = {
        let mut r: Vec<usize> = (0..ncomp).map(|c| find(&mut parent, c)).collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    if roots.len() > r_max {
        return Err(Error::Unsupported(format!(
            "{} cycle components exceed r_max = {r_max}",
            roots.len()
        )));
    }
    let start = find(&mut parent, comp[0]);
    let mut order = vec![start];
    let mut cur = start;
    loop {
        let next = find(&mut parent, target[cur]);
        if next == start || order.len() > roots.len() {
            break;
        }
        order.push(next);
        cur = next;
    }
    if order.len() != roots.len() {
        return Err(Error::Unsupported("components do not form a single cycle".into()));
    }
    let mut groups = vec![Vec::new(); order.len()];
    for (a, &p) in pts.iter().enumerate() {
        let r = find(&mut parent, comp[a]);
        let pos = order.iter().position(|&o| o == r).expect("root in cycle");
        groups[pos].push(p);
    }
    Ok((order.len(), groups))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    MeanStable,
    NotMeanStable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::MeanStable => "mean_stable",
            Verdict::NotMeanStable => "not_mean_stable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Grid masks `U ⊃ V̄` around the attracting sets, the contraction word
/// length and the word depth used for the steering search.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanStabilityWitness {
    pub u_mask: Vec<bool>,
    pub v_mask: Vec<bool>,
    pub n: usize,
    pub coverage_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    pub search: MinimalSearchConfig,
    /// Word depth for steering every grid node into `U`.
    pub coverage_depth: usize,
    /// Per-level sample cap of the steering search.
    pub level_cap: usize,
    pub julia_points: usize,
    pub julia_burn_in: usize,
}

impl StabilityConfig {
    pub fn for_grid(geometry: &GridGeometry) -> Self {
        Self {
            search: MinimalSearchConfig::for_grid(geometry),
            coverage_depth: 12,
            level_cap: 256,
            julia_points: 4096,
            julia_burn_in: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub minimal_sets: Vec<MinimalSetEstimate>,
    pub witness: Option<MeanStabilityWitness>,
    pub counterexample: Option<MinimalSetEstimate>,
    /// Grid nodes not steered into `U` within the coverage depth.
    pub uncovered_nodes: usize,
    pub reason: String,
}

/// Numerical mean-stability test: every discovered minimal set attracting
/// and every grid node steered into the attracting neighborhoods.
pub fn test_mean_stability(
    measure: &DiscreteMeasure,
    geometry: &GridGeometry,
    cfg: &StabilityConfig,
    streams: RngStreams,
) -> Result<StabilityReport> {
    geometry.validate()?;
    let sys = measure.system();
    let julia = julia_backward_cloud(measure, cfg.julia_points, cfg.julia_burn_in, streams.fork(10))?;
    let mut sets = find_attracting_minimal_sets(measure, &cfg.search, streams.fork(11))?;
    let others = find_other_minimal_sets(measure, &sets, &cfg.search, streams.fork(12))?;
    sets.extend(others);
    for s in sets.iter_mut() {
        s.classification = classify_minimal_set(measure, s, &julia);
    }
    if let Some(bad) = sets.iter().find(|s| {
        matches!(
            s.classification,
            Classification::JTouching | Classification::SubRotative
        )
    }) {
        let reason = format!("{} is {}", bad.name, bad.classification.as_str());
        return Ok(StabilityReport {
            verdict: Verdict::NotMeanStable,
            counterexample: Some(bad.clone()),
            minimal_sets: sets,
            witness: None,
            uncovered_nodes: 0,
            reason,
        });
    }
    if let Some(bad) = sets.iter().find(|s| s.classification == Classification::Unresolved) {
        let reason = format!("{} could not be classified", bad.name);
        return Ok(StabilityReport {
            verdict: Verdict::Inconclusive,
            minimal_sets: sets.clone(),
            witness: None,
            counterexample: None,
            uncovered_nodes: 0,
            reason,
        });
    }

    // attracting neighborhoods
    let mut rings = Vec::new();
    let mut n_max = 1;
    for s in &sets {
        let w = attracting_witness(sys, s, Some(&julia)).expect("classified attracting");
        n_max = n_max.max(w.n);
        rings.push(w);
    }
    let finite: Vec<(PlaneIndex, f64, f64)> = sets
        .iter()
        .zip(&rings)
        .filter(|(s, _)| !s.is_infinity())
        .map(|(s, w)| (PlaneIndex::build(&s.points(), w.r_outer), w.r_outer, w.r_inner))
        .collect();
    let radius = sys.escape_radius();
    let in_u = |z: SpherePoint| -> bool {
        match z {
            SpherePoint::Infinity => radius.is_some(),
            SpherePoint::Finite(w) => {
                radius.is_some_and(|r| w.norm() > r)
                    || finite.iter().any(|(idx, ru, _)| idx.distance_within(w, *ru).is_some())
            }
        }
    };
    let in_v = |w: Complex64| -> bool {
        radius.is_some_and(|r| w.norm() > 2.0 * r)
            || finite.iter().any(|(idx, _, rv)| idx.distance_within(w, *rv).is_some())
    };
    let nodes = geometry.len();
    let u_mask: Vec<bool> = (0..nodes)
        .into_par_iter()
        .map(|k| in_u(SpherePoint::Finite(geometry.node_at(k))))
        .collect();
    let v_mask: Vec<bool> = (0..nodes).into_par_iter().map(|k| in_v(geometry.node_at(k))).collect();

    let steer = streams.fork(13);
    let covered: Vec<bool> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let z = SpherePoint::Finite(geometry.node_at(k));
            if u_mask[k] {
                return true;
            }
            let mut rng = steer.stream(k as u64);
            let mut frontier = vec![z];
            for level in 1..=cfg.coverage_depth {
                let mut next = Vec::with_capacity(frontier.len() * sys.len());
                for &p in &frontier {
                    for j in 0..sys.len() {
                        let q = sys.apply(j, p);
                        if in_u(q) {
                            return true;
                        }
                        next.push(q);
                    }
                }
                let cap = 4usize.saturating_pow(level as u32).min(cfg.level_cap);
                if next.len() > cap {
                    next.shuffle(&mut rng);
                    next.truncate(cap);
                }
                frontier = next;
            }
            false
        })
        .collect();
    let uncovered = covered.iter().filter(|&&c| !c).count();
    let witness = MeanStabilityWitness {
        u_mask,
        v_mask,
        n: n_max,
        coverage_depth: cfg.coverage_depth,
    };
    if uncovered > 0 {
        return Ok(StabilityReport {
            verdict: Verdict::Inconclusive,
            minimal_sets: sets,
            witness: Some(witness),
            counterexample: None,
            uncovered_nodes: uncovered,
            reason: format!("{uncovered} grid nodes not steered into U"),
        });
    }
    Ok(StabilityReport {
        verdict: Verdict::MeanStable,
        minimal_sets: sets,
        witness: Some(witness),
        counterexample: None,
        uncovered_nodes: 0,
        reason: "all minimal sets attracting; every node steered into U".into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub t: f64,
    pub count: usize,
    pub verdict: Verdict,
    pub undecided_fraction: f64,
    /// Set when a nested family shows a count increase at this row.
    pub warning: Option<String>,
}

/// Minimal-set counts and verdicts along a family, with identical seeds per
/// member. For nested supports, count increases are flagged.
pub fn scan_family_bifurcation(
    family: &[(f64, DiscreteMeasure)],
    geometry: &GridGeometry,
    cfg: &StabilityConfig,
    classify: &ClassifyConfig,
    nested: bool,
    streams: RngStreams,
) -> Result<Vec<ScanRow>> {
    if family.is_empty() {
        return Err(Error::arg("family", "must be nonempty"));
    }
    let rows: Vec<Result<ScanRow>> = family
        .par_iter()
        .map(|(t, mu)| {
            let attracting = find_attracting_minimal_sets(mu, &cfg.search, streams.fork(11))?;
            let report = test_mean_stability(mu, geometry, cfg, streams)?;
            let labels = classify_plane_grid(mu, &attracting, geometry, classify, streams.fork(14))?;
            Ok(ScanRow {
                t: *t,
                count: report.minimal_sets.len(),
                verdict: report.verdict,
                undecided_fraction: labels.undecided_fraction(),
                warning: None,
            })
        })
        .collect();
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    if nested {
        for k in 1..rows.len() {
            if rows[k].count > rows[k - 1].count {
                rows[k].warning = Some(format!(
                    "count rose from {} to {} on a nested family (numerical resolution)",
                    rows[k - 1].count,
                    rows[k].count
                ));
            }
        }
    }
    Ok(rows)
}
