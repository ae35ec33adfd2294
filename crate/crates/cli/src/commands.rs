//! Command dispatch. Each command returns its artifacts and whether its
//! verdict was conclusive; writing them out is left to [`crate::emit`].

use crate::emit::Artifact;
use crate::scenario::Scenario;
use anyhow::{bail, Context, Result};
use coopdyn_core::fractal::{
    classify_plane_grid, hyperbolicity_probe, julia_backward_cloud, kernel_julia_probe, sample_lambda, ClassifyConfig,
    KernelProbeConfig,
};
use coopdyn_core::io::{encode_cloud_csv, encode_function_pgm, encode_labels_pgm, encode_mask_pgm, encode_xy_csv};
use coopdyn_core::minimal::{
    classify_minimal_set, find_attracting_minimal_sets, find_other_minimal_sets, scan_family_bifurcation,
    test_mean_stability, StabilityConfig, Verdict,
};
use coopdyn_core::operator::{
    estimate_convergence_rate, initial_bump, solve_t_fixed_point, RateStatus, TransitionOperator,
};
use coopdyn_core::oracle1d::{
    devils_staircase, lebesgue_singular, real_parameter_derivative, takagi_classic, unit_grid, DerivativeMode,
    RealAffineSystem,
};
use coopdyn_core::takagi::{
    analytic_exponents, dyadic_scales, finite_difference_check, holder_exponent_estimate, omega_integral_mc,
    takagi_series, zeta_field,
};
use coopdyn_core::{
    BasinLabelGrid, Complex64, DiscreteMeasure, GridFunction, GridGeometry, Label, MinimalSetEstimate, PointCloud,
    Provenance, RngStreams, SpherePoint,
};
use rand::seq::index::sample;
use serde_json::{json, Value};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RenderJulia,
    ClassifyBasins,
    FindMinimalSets,
    TestMeanStability,
    SolveT,
    Takagi,
    Rate,
    Exponents,
    ScanBifurcation,
    Oracle1d,
    ProbeKernel,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::RenderJulia,
        Command::ClassifyBasins,
        Command::FindMinimalSets,
        Command::TestMeanStability,
        Command::SolveT,
        Command::Takagi,
        Command::Rate,
        Command::Exponents,
        Command::ScanBifurcation,
        Command::Oracle1d,
        Command::ProbeKernel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::RenderJulia => "render-julia",
            Command::ClassifyBasins => "classify-basins",
            Command::FindMinimalSets => "find-minimal-sets",
            Command::TestMeanStability => "test-mean-stability",
            Command::SolveT => "solve-T",
            Command::Takagi => "takagi",
            Command::Rate => "rate",
            Command::Exponents => "exponents",
            Command::ScanBifurcation => "scan-bifurcation",
            Command::Oracle1d => "oracle-1d",
            Command::ProbeKernel => "probe-kernel",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self != Command::Oracle1d
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).with_context(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command `{s}` (expected one of: {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Conclusive,
    Inconclusive,
}

#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub status: Status,
}

impl Outcome {
    fn new(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            status: Status::Conclusive,
        }
    }

    fn inconclusive_if(mut self, cond: bool) -> Self {
        if cond {
            self.status = Status::Inconclusive;
        }
        self
    }
}

// Stream forks, one per pipeline stage.
const FORK_JULIA: u64 = 10;
const FORK_SETS: u64 = 11;
const FORK_OTHER_SETS: u64 = 12;
const FORK_BASINS: u64 = 14;
const FORK_HYPERBOLIC: u64 = 15;
const FORK_PROBES: u64 = 16;
const FORK_KERNEL: u64 = 20;
const FORK_OMEGA: u64 = 30;
const FORK_LAMBDA: u64 = 31;

/// A numeric verdict with the tolerance it was judged by and its seed.
fn checked(value: f64, tolerance: f64, pass: bool, seed: Option<u64>) -> Value {
    json!({ "value": value, "tolerance": tolerance, "pass": pass, "seed": seed })
}

struct Ctx<'a> {
    sc: &'a Scenario,
    seed: u64,
    measure: DiscreteMeasure,
    geometry: GridGeometry,
    streams: RngStreams,
}

impl<'a> Ctx<'a> {
    fn new(sc: &'a Scenario, command: Command) -> Result<Self> {
        let seed = sc.seed(command.name())?;
        Ok(Self {
            sc,
            seed,
            measure: sc.measure()?,
            geometry: sc.grid,
            streams: RngStreams::new(seed),
        })
    }

    fn stability_config(&self) -> StabilityConfig {
        let mut cfg = StabilityConfig::for_grid(&self.geometry);
        cfg.coverage_depth = self.sc.stability.coverage_depth;
        cfg.level_cap = self.sc.stability.level_cap;
        cfg.search.search_depth = self.sc.stability.search_depth;
        cfg.julia_points = self.sc.julia.points;
        cfg.julia_burn_in = self.sc.julia.burn_in;
        cfg
    }

    fn classify_config(&self) -> ClassifyConfig {
        ClassifyConfig {
            depth: self.sc.classify.depth,
            n_words: self.sc.classify.words,
        }
    }

    fn julia(&self) -> Result<PointCloud> {
        Ok(julia_backward_cloud(
            &self.measure,
            self.sc.julia.points,
            self.sc.julia.burn_in,
            self.streams.fork(FORK_JULIA),
        )?)
    }

    fn attracting_sets(&self) -> Result<Vec<MinimalSetEstimate>> {
        Ok(find_attracting_minimal_sets(
            &self.measure,
            &self.stability_config().search,
            self.streams.fork(FORK_SETS),
        )?)
    }

    fn basins(&self, sets: &[MinimalSetEstimate]) -> Result<BasinLabelGrid> {
        Ok(classify_plane_grid(
            &self.measure,
            sets,
            &self.geometry,
            &self.classify_config(),
            self.streams.fork(FORK_BASINS),
        )?)
    }

    fn operator(&self) -> Result<(Vec<MinimalSetEstimate>, BasinLabelGrid, TransitionOperator)> {
        let sets = self.attracting_sets()?;
        let basins = self.basins(&sets)?;
        let op = TransitionOperator::new(&self.measure, &basins)?;
        Ok((sets, basins, op))
    }
}

fn set_summary(s: &MinimalSetEstimate) -> Value {
    json!({
        "name": s.name,
        "classification": s.classification.as_str(),
        "period": s.period,
        "points": s.points().len(),
        "closed": s.closed,
        "tolerance": s.tolerance,
        "representative": point_json(s.representative()),
    })
}

fn point_json(p: SpherePoint) -> Value {
    match p {
        SpherePoint::Infinity => json!("inf"),
        SpherePoint::Finite(z) => json!([z.re, z.im]),
    }
}

fn set_cloud(s: &MinimalSetEstimate) -> Result<PointCloud> {
    Ok(match &s.cloud {
        Some(c) => c.clone(),
        None => PointCloud::new(vec![SpherePoint::Infinity], Provenance::MinimalSet)?,
    })
}

fn function_artifacts(f: &GridFunction, stem: &str) -> Result<Vec<Artifact>> {
    let (bytes, map) = encode_function_pgm(f);
    Ok(vec![
        Artifact::new(format!("{stem}.pgm"), bytes),
        Artifact::json(format!("{stem}.json"), &map)?,
    ])
}

fn report(command: Command, sc: &Scenario, seed: Option<u64>, body: Value) -> Result<Artifact> {
    Artifact::json(
        "report.json",
        &json!({
            "command": command.name(),
            "scenario": sc.name,
            "seed": seed,
            "results": body,
        }),
    )
}

/// Runs `command` on the scenario.
pub fn run_command(command: Command, sc: &Scenario) -> Result<Outcome> {
    match command {
        Command::RenderJulia => render_julia(sc),
        Command::ClassifyBasins => classify_basins(sc),
        Command::FindMinimalSets => find_minimal_sets(sc),
        Command::TestMeanStability => mean_stability(sc),
        Command::SolveT => solve_t(sc),
        Command::Takagi => takagi(sc),
        Command::Rate => rate(sc),
        Command::Exponents => exponents(sc),
        Command::ScanBifurcation => scan(sc),
        Command::Oracle1d => oracle(sc),
        Command::ProbeKernel => probe_kernel(sc),
    }
}

fn render_julia(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::RenderJulia)?;
    let julia = ctx.julia()?;
    let g = &ctx.geometry;
    let mut mask = vec![false; g.len()];
    for p in &julia.points {
        if let Some(z) = p.finite() {
            if g.contains(z) {
                mask[g.nearest_node(z)] = true;
            }
        }
    }
    let hyp = hyperbolicity_probe(
        &ctx.measure,
        &julia,
        sc.julia.orbit_depth,
        sc.julia.orbit_words,
        ctx.streams.fork(FORK_HYPERBOLIC),
    )?;
    let body = json!({
        "points": julia.len(),
        "cloud_resolution": hyp.cloud_resolution,
        "postcritical_samples": hyp.postcritical_samples,
        "postcritical_distance": checked(
            hyp.min_distance,
            2.0 * hyp.cloud_resolution,
            hyp.hyperbolic_consistent,
            Some(ctx.seed),
        ),
        "hyperbolic_consistent": hyp.hyperbolic_consistent,
    });
    Ok(Outcome::new(vec![
        Artifact::new("julia.csv", encode_cloud_csv(&julia)),
        Artifact::new("julia.pgm", encode_mask_pgm(&mask, g.n())),
        report(Command::RenderJulia, sc, Some(ctx.seed), body)?,
    ]))
}

fn classify_basins(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::ClassifyBasins)?;
    let sets = ctx.attracting_sets()?;
    let basins = ctx.basins(&sets)?;
    let (bytes, legend) = encode_labels_pgm(&basins);
    let mut counts = serde_json::Map::new();
    counts.insert("escaping".into(), json!(basins.count(Label::Escaping)));
    counts.insert("undecided".into(), json!(basins.count(Label::Undecided)));
    for k in 0..basins.representatives.len() {
        counts.insert(format!("basin_{k}"), json!(basins.count(Label::Basin(k as u16))));
    }
    let body = json!({
        "depth": basins.depth,
        "words_per_node": sc.classify.words,
        "undecided_fraction": basins.undecided_fraction(),
        "counts": counts,
        "minimal_sets": sets.iter().map(set_summary).collect::<Vec<_>>(),
    });
    Ok(Outcome::new(vec![
        Artifact::new("basins.pgm", bytes),
        Artifact::json("basins.json", &legend)?,
        report(Command::ClassifyBasins, sc, Some(ctx.seed), body)?,
    ]))
}

fn find_minimal_sets(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::FindMinimalSets)?;
    let cfg = ctx.stability_config();
    let mut sets = ctx.attracting_sets()?;
    let others = find_other_minimal_sets(&ctx.measure, &sets, &cfg.search, ctx.streams.fork(FORK_OTHER_SETS))?;
    sets.extend(others);
    let julia = ctx.julia()?;
    for s in sets.iter_mut() {
        s.classification = classify_minimal_set(&ctx.measure, s, &julia);
    }
    let mut arts = Vec::new();
    for s in &sets {
        arts.push(Artifact::new(
            format!("set_{}.csv", s.name),
            encode_cloud_csv(&set_cloud(s)?),
        ));
    }
    let body = json!({
        "count": sets.len(),
        "tolerance": cfg.search.tolerance,
        "sets": sets.iter().map(set_summary).collect::<Vec<_>>(),
    });
    arts.push(report(Command::FindMinimalSets, sc, Some(ctx.seed), body)?);
    Ok(Outcome::new(arts))
}

fn mean_stability(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::TestMeanStability)?;
    let cfg = ctx.stability_config();
    let rep = test_mean_stability(&ctx.measure, &ctx.geometry, &cfg, ctx.streams)?;
    let mut arts = Vec::new();
    if let Some(w) = &rep.witness {
        arts.push(Artifact::new(
            "witness_u.pgm",
            encode_mask_pgm(&w.u_mask, ctx.geometry.n()),
        ));
        arts.push(Artifact::new(
            "witness_v.pgm",
            encode_mask_pgm(&w.v_mask, ctx.geometry.n()),
        ));
    }
    let body = json!({
        "verdict": rep.verdict.as_str(),
        "certification": "numerical",
        "mean_stable": rep.verdict == Verdict::MeanStable,
        "reason": rep.reason,
        "tolerance": cfg.search.tolerance,
        "coverage_depth": cfg.coverage_depth,
        "uncovered_nodes": rep.uncovered_nodes,
        "contraction_word_length": rep.witness.as_ref().map(|w| w.n),
        "counterexample": rep.counterexample.as_ref().map(|s| s.name.clone()),
        "minimal_sets": rep.minimal_sets.iter().map(set_summary).collect::<Vec<_>>(),
    });
    arts.push(report(Command::TestMeanStability, sc, Some(ctx.seed), body)?);
    Ok(Outcome::new(arts).inconclusive_if(rep.verdict == Verdict::Inconclusive))
}

fn others_of(sets: &[MinimalSetEstimate], k: usize) -> Vec<&MinimalSetEstimate> {
    sets.iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, s)| s)
        .collect()
}

fn solve_t(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::SolveT)?;
    let (sets, _, op) = ctx.operator()?;
    let mut arts = Vec::new();
    let mut rows = Vec::new();
    let mut sum: Option<GridFunction> = None;
    for (k, s) in sets.iter().enumerate() {
        let rep = solve_t_fixed_point(
            &op,
            &ctx.measure,
            s,
            &others_of(&sets, k),
            sc.solve.tol,
            sc.solve.max_iter,
        )?;
        arts.extend(function_artifacts(&rep.function, &format!("T_{}", s.name))?);
        let (lo, hi) = rep.function.min_max();
        rows.push(json!({
            "set": s.name,
            "iterations": rep.function.iterations,
            "residual": checked(rep.residual, sc.solve.tol, rep.residual <= sc.solve.tol, Some(ctx.seed)),
            "min": lo,
            "max": hi,
        }));
        sum = Some(match sum {
            None => rep.function,
            Some(acc) => acc.lin_comb(1.0, &rep.function, 1.0)?,
        });
    }
    let extrapolated = op.plan().extrapolated();
    let partition = sum.map(|f| {
        f.values
            .iter()
            .zip(extrapolated)
            .filter(|(_, &e)| !e)
            .map(|(v, _)| (v - 1.0).abs())
            .fold(0.0, f64::max)
    });
    let part_tol = 0.01 + 2.0 * sc.solve.tol;
    let body = json!({
        "functions": rows,
        "extrapolated_nodes": op.plan().extrapolated_count(),
        "partition_deviation": partition.map(|d| checked(d, part_tol, d <= part_tol, Some(ctx.seed))),
    });
    arts.push(report(Command::SolveT, sc, Some(ctx.seed), body)?);
    Ok(Outcome::new(arts))
}

fn pick_target(sets: &[MinimalSetEstimate], name: Option<&str>) -> Result<usize> {
    match name {
        Some(n) => sets
            .iter()
            .position(|s| s.name == n)
            .with_context(|| format!("no minimal set named `{n}`")),
        None => sets
            .iter()
            .position(MinimalSetEstimate::is_infinity)
            .or(if sets.is_empty() { None } else { Some(0) })
            .context("no minimal sets found"),
    }
}

/// Interior grid nodes drawn without replacement.
fn sample_probes(g: &GridGeometry, count: usize, margin: usize, streams: RngStreams) -> Vec<Complex64> {
    let n = g.n();
    let inner = n.saturating_sub(2 * margin);
    if inner == 0 {
        return Vec::new();
    }
    let mut rng = streams.stream(0);
    sample(&mut rng, inner * inner, count.min(inner * inner))
        .into_iter()
        .map(|k| g.node(margin + k % inner, margin + k / inner))
        .collect()
}

fn takagi(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::Takagi)?;
    let (sets, _, op) = ctx.operator()?;
    let k = pick_target(&sets, sc.takagi.target.as_deref())?;
    let target = &sets[k];
    let others = others_of(&sets, k);
    let t = solve_t_fixed_point(&op, &ctx.measure, target, &others, sc.solve.tol, sc.solve.max_iter)?;
    let bump = initial_bump(&ctx.geometry, target, &others, ctx.measure.system().escape_radius());
    let rate = estimate_convergence_rate(&op, &bump, sc.rate.iterations)?;
    if rate.status != RateStatus::Fitted || !(rate.rate < 1.0) {
        bail!(
            "no usable contraction rate for the series tail bound (rate {})",
            rate.rate
        );
    }
    let zeta = zeta_field(&op, &t.function, sc.takagi.generator)?;
    let series = takagi_series(&op, &zeta, rate.rate, sc.takagi.tol, sc.takagi.max_terms)?;
    let psi = &series.psi;
    let probes = sample_probes(&ctx.geometry, sc.takagi.fd_probes, 8, ctx.streams.fork(FORK_PROBES));
    let fd = finite_difference_check(
        &op,
        &ctx.measure,
        target,
        &others,
        sc.takagi.generator,
        sc.takagi.fd_delta,
        &probes,
        psi,
        sc.solve.tol,
        sc.solve.max_iter,
    )?;
    let psi_zero = psi.interpolate(SpherePoint::ZERO);
    let mut arts = function_artifacts(&zeta, "zeta")?;
    arts.extend(function_artifacts(psi, "psi")?);
    let body = json!({
        "target": target.name,
        "generator": sc.takagi.generator,
        "rate": rate.rate,
        "terms": series.series.terms,
        "tail_bound": series.series.tail_bound,
        "residual": checked(series.residual, 1e-3, series.residual <= 1e-3, Some(ctx.seed)),
        "psi_at_zero": psi_zero.map(|v| checked(v, 1e-6, v.abs() <= 1e-6, Some(ctx.seed))),
        "psi_at_infinity": checked(psi.value_at_infinity, 1e-6, psi.value_at_infinity.abs() <= 1e-6, Some(ctx.seed)),
        "finite_difference": {
            "delta": sc.takagi.fd_delta,
            "probes": fd.probes.len(),
            "max_deviation": checked(fd.max_deviation, 0.01, fd.max_deviation <= 0.01, Some(ctx.seed)),
        },
    });
    arts.push(report(Command::Takagi, sc, Some(ctx.seed), body)?);
    Ok(Outcome::new(arts))
}

fn rate(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::Rate)?;
    let (sets, _, op) = ctx.operator()?;
    let k = pick_target(&sets, sc.takagi.target.as_deref())?;
    let others = others_of(&sets, k);
    let bump = initial_bump(&ctx.geometry, &sets[k], &others, ctx.measure.system().escape_radius());
    let est = estimate_convergence_rate(&op, &bump, sc.rate.iterations)?;
    let rows: Vec<(f64, f64)> = est.increments.iter().enumerate().map(|(n, &e)| (n as f64, e)).collect();
    let body = json!({
        "target": sets[k].name,
        "iterations": sc.rate.iterations,
        "rate": est.rate,
        "r_squared": est.r_squared,
        "status": match est.status {
            RateStatus::Fitted => "fitted",
            RateStatus::BelowNoiseFloor => "below_noise_floor",
        },
        "window": [est.window.0, est.window.1],
        "flagged": est.flagged,
        "flag_threshold": coopdyn_core::operator::RATE_FLAG_THRESHOLD,
        "seed": ctx.seed,
    });
    let inconclusive = est.flagged || est.status != RateStatus::Fitted;
    Ok(Outcome::new(vec![
        Artifact::new("rate.csv", encode_xy_csv(("n", "increment"), &rows)),
        report(Command::Rate, sc, Some(ctx.seed), body)?,
    ])
    .inconclusive_if(inconclusive))
}

fn exponents(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::Exponents)?;
    let opts = &sc.exponents;
    let omega = omega_integral_mc(
        &ctx.measure,
        opts.omega_words,
        opts.word_len,
        ctx.streams.fork(FORK_OMEGA),
    )?;
    let analysis = analytic_exponents(&ctx.measure, omega)?;
    let (sets, _, op) = ctx.operator()?;
    let k = pick_target(&sets, None)?;
    let t = solve_t_fixed_point(
        &op,
        &ctx.measure,
        &sets[k],
        &others_of(&sets, k),
        sc.solve.tol,
        sc.solve.max_iter,
    )?;
    let scales = dyadic_scales(ctx.geometry.step(), opts.scale_range[0], opts.scale_range[1]);
    // Oversample λ: points too close to the grid edge are skipped.
    let lambda = sample_lambda(
        &ctx.measure,
        8 * opts.holder_points,
        sc.julia.burn_in,
        ctx.streams.fork(FORK_LAMBDA),
    )?;
    let mut rows = Vec::new();
    for p in &lambda.points {
        if rows.len() == opts.holder_points {
            break;
        }
        let Some(z) = p.finite() else { continue };
        if let Ok(h) = holder_exponent_estimate(&t.function, z, &scales) {
            rows.push((z, h.exponent));
        }
    }
    let mut hs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    hs.sort_by(f64::total_cmp);
    let median = if hs.is_empty() {
        None
    } else if hs.len() % 2 == 1 {
        Some(hs[hs.len() / 2])
    } else {
        Some(0.5 * (hs[hs.len() / 2 - 1] + hs[hs.len() / 2]))
    };
    let mut csv = String::from("re,im,exponent\n");
    for (z, h) in &rows {
        csv.push_str(&format!("{},{},{h}\n", z.re, z.im));
    }
    let body = json!({
        "analysis": analysis,
        "u_below_one": analysis.u_value < 1.0,
        "dim_in_open_0_2": analysis.dim_h_lambda > 0.0 && analysis.dim_h_lambda < 2.0,
        "omega_words": opts.omega_words,
        "word_len": opts.word_len,
        "holder": {
            "target": sets[k].name,
            "points": rows.len(),
            "scales": scales,
            "median": median,
            "gap_to_u": median.map(|m| {
                let gap = (m - analysis.u_value).abs();
                checked(gap, 0.15, gap <= 0.15, Some(ctx.seed))
            }),
        },
    });
    Ok(Outcome::new(vec![
        Artifact::json("analysis.json", &analysis)?,
        Artifact::new("holder.csv", csv),
        report(Command::Exponents, sc, Some(ctx.seed), body)?,
    ]))
}

fn scan(sc: &Scenario) -> Result<Outcome> {
    let seed = sc.seed(Command::ScanBifurcation.name())?;
    let fam_opts = sc
        .family
        .as_ref()
        .context("`scan-bifurcation` needs a `family` block")?;
    let family = fam_opts.family()?.scan(fam_opts.steps)?;
    let mut cfg = StabilityConfig::for_grid(&sc.grid);
    cfg.coverage_depth = sc.stability.coverage_depth;
    cfg.level_cap = sc.stability.level_cap;
    cfg.search.search_depth = sc.stability.search_depth;
    cfg.julia_points = sc.julia.points;
    cfg.julia_burn_in = sc.julia.burn_in;
    let classify = ClassifyConfig {
        depth: sc.classify.depth,
        n_words: sc.classify.words,
    };
    let rows = scan_family_bifurcation(&family, &sc.grid, &cfg, &classify, true, RngStreams::new(seed))?;
    let mut csv = String::from("t,count,verdict,undecided_fraction\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.t,
            r.count,
            r.verdict.as_str(),
            r.undecided_fraction
        ));
    }
    let monotone = rows.windows(2).all(|w| w[1].count <= w[0].count);
    let body = json!({
        "rows": rows.iter().map(|r| json!({
            "t": r.t,
            "generators": family.iter().find(|(t, _)| *t == r.t).map(|(_, m)| m.len()),
            "count": r.count,
            "verdict": r.verdict.as_str(),
            "undecided_fraction": r.undecided_fraction,
            "warning": r.warning,
        })).collect::<Vec<_>>(),
        "counts_non_increasing": monotone,
        "certification": "numerical",
        "tolerance": cfg.search.tolerance,
        "seed": seed,
    });
    Ok(Outcome::new(vec![
        Artifact::new("scan.csv", csv),
        report(Command::ScanBifurcation, sc, Some(seed), body)?,
    ]))
}

fn oracle(sc: &Scenario) -> Result<Outcome> {
    let o = &sc.oracle;
    let xs = unit_grid(o.points);
    let cantor: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| Ok((x, devils_staircase(x, o.depth)?)))
        .collect::<Result<_>>()?;
    let lebesgue: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| Ok((x, lebesgue_singular(o.a, x, o.depth)?)))
        .collect::<Result<_>>()?;
    let takagi: Vec<(f64, f64)> = xs.iter().map(|&x| (x, takagi_classic(x, o.series_depth))).collect();
    let doubling = RealAffineSystem::doubling(0.5)?;
    let series = real_parameter_derivative(&doubling, &xs, DerivativeMode::Series { depth: o.series_depth })?;
    let fd = real_parameter_derivative(&doubling, &xs, DerivativeMode::FiniteDifference { delta: 1e-4 })?;
    let takagi_gap = series
        .values
        .iter()
        .zip(&takagi)
        .map(|(s, t)| (0.5 * s - t.1).abs())
        .fold(0.0, f64::max);
    let fd_gap = series
        .values
        .iter()
        .zip(&fd.values)
        .map(|(s, f)| (s - f).abs())
        .fold(0.0, f64::max);
    let identity_gap = xs
        .iter()
        .map(|&x| Ok((lebesgue_singular(0.5, x, o.depth)? - x).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let body = json!({
        "points": o.points,
        "depth": o.depth,
        "series_depth": o.series_depth,
        "lebesgue_parameter": o.a,
        "half_derivative_vs_takagi": checked(takagi_gap, 1e-6, takagi_gap <= 1e-6, None),
        "series_vs_finite_difference": checked(fd_gap, 1e-4, fd_gap <= 1e-4, None),
        "symmetric_lebesgue_vs_identity": checked(identity_gap, 1e-12, identity_gap <= 1e-12, None),
    });
    Ok(Outcome::new(vec![
        Artifact::new("devils_staircase.csv", encode_xy_csv(("x", "value"), &cantor)),
        Artifact::new("lebesgue.csv", encode_xy_csv(("x", "value"), &lebesgue)),
        Artifact::new("takagi.csv", encode_xy_csv(("x", "value"), &takagi)),
        report(Command::Oracle1d, sc, None, body)?,
    ]))
}

fn probe_kernel(sc: &Scenario) -> Result<Outcome> {
    let ctx = Ctx::new(sc, Command::ProbeKernel)?;
    let sets = ctx.attracting_sets()?;
    let basins = ctx.basins(&sets)?;
    let julia = ctx.julia()?;
    let cfg = KernelProbeConfig {
        word_depth: sc.kernel.word_depth,
        branch_cap: sc.kernel.branch_cap,
        max_probes: sc.kernel.max_probes,
    };
    let rep = kernel_julia_probe(
        &ctx.measure,
        &julia.points,
        &basins,
        &cfg,
        ctx.streams.fork(FORK_KERNEL),
    )?;
    let body = json!({
        "probed": rep.probed,
        "escorted": rep.escorted,
        "fraction": checked(rep.fraction, 0.0, rep.consistent_with_empty_kernel, Some(ctx.seed)),
        "max_depth": rep.max_depth,
        "word_depth": cfg.word_depth,
        "consistent_with_empty_kernel": rep.consistent_with_empty_kernel,
    });
    Ok(
        Outcome::new(vec![report(Command::ProbeKernel, sc, Some(ctx.seed), body)?])
            .inconclusive_if(!rep.consistent_with_empty_kernel),
    )
}
