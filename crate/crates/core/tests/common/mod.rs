#![allow(dead_code)]

use coopdyn_core::fractal::{classify_plane_grid, ClassifyConfig};
use coopdyn_core::minimal::{find_attracting_minimal_sets, MinimalSearchConfig, MinimalSetEstimate};
use coopdyn_core::operator::{MarkovOperator, TransitionOperator};
use coopdyn_core::{systems, BasinLabelGrid, Complex64, DiscreteMeasure, GridGeometry, RngStreams};

/// Axioms every transition operator must satisfy on the given inputs:
/// `M1 = 1` and positivity exactly, sup-norm contraction exactly, and
/// linearity to `1e-12`.
pub fn check_markov_axioms<O: MarkovOperator>(op: &O, f: &O::Function, g: &O::Function, a: f64, b: f64) {
    let one = op.sample(&op.apply(&op.constant(1.0)));
    assert!(one.iter().all(|&v| v == 1.0), "M1 != 1");

    let fs = op.sample(f);
    let mf = op.sample(&op.apply(f));
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(sup(&mf) <= sup(&fs), "contraction: {} > {}", sup(&mf), sup(&fs));

    let lo = fs.iter().copied().fold(f64::INFINITY, f64::min);
    if lo >= 0.0 {
        assert!(mf.iter().all(|&v| v >= 0.0), "positivity");
    }
    // positive part is always nonnegative
    let shifted = op.combine(1.0, f, -lo.min(0.0), &op.constant(1.0));
    assert!(
        op.sample(&op.apply(&shifted)).iter().all(|&v| v >= 0.0),
        "positivity of shifted input"
    );

    let lhs = op.sample(&op.apply(&op.combine(a, f, b, g)));
    let mg = op.sample(&op.apply(g));
    let scale = 1.0 + a.abs() * sup(&fs) + b.abs() * sup(&op.sample(g));
    for ((l, x), y) in lhs.iter().zip(&mf).zip(&mg) {
        assert!((l - (a * x + b * y)).abs() <= 1e-12 * scale, "linearity");
    }
}

/// quartic_pair with weights `(1/2, 1/2)` on `[-4, 4]^2`.
pub struct QuarticPair {
    pub measure: DiscreteMeasure,
    pub geometry: GridGeometry,
    pub sets: Vec<MinimalSetEstimate>,
    pub basins: BasinLabelGrid,
    pub op: TransitionOperator,
}

impl QuarticPair {
    pub fn new(resolution: usize) -> Self {
        let measure = systems::quartic_pair(0.5).unwrap();
        let geometry = GridGeometry::new(Complex64::new(0.0, 0.0), 4.0, resolution).unwrap();
        let streams = RngStreams::new(7);
        let sets = find_attracting_minimal_sets(&measure, &MinimalSearchConfig::for_grid(&geometry), streams.fork(11))
            .unwrap();
        let basins =
            classify_plane_grid(&measure, &sets, &geometry, &ClassifyConfig::default(), streams.fork(14)).unwrap();
        let op = TransitionOperator::new(&measure, &basins).unwrap();
        Self {
            measure,
            geometry,
            sets,
            basins,
            op,
        }
    }

    pub fn infinity(&self) -> &MinimalSetEstimate {
        self.sets.iter().find(|s| s.is_infinity()).unwrap()
    }

    pub fn zero(&self) -> &MinimalSetEstimate {
        self.sets.iter().find(|s| !s.is_infinity()).unwrap()
    }
}
