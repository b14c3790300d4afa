//! Simulated annealing over connected regions of fixed size, minimizing the
//! slack of one inequality, plus deterministic family sweeps.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eigen::{full_spectrum, EigenError, Spectrum};
use crate::inequalities::{
    check_first_eig_bound, check_first_gap, check_hp, check_hp_alt, check_ppw, check_ppw_alt,
    check_ratio_bound, check_recursion, check_variance, check_yang1, check_yang2, check_yang2_alt,
    format_extended, full_report, InequalityError, InequalityId, InequalityRecord, Sense,
    TOL_INEQ_ABS,
};
use crate::operator::{DirichletOperator, OperatorError};
use crate::region::{ball_region, box_region, path_region, Metric, Point, Region, RegionError};
use crate::rng::SplitMix64;

/// Objective assigned to infinite or vacuous slacks; orders after every
/// finite value while keeping Metropolis differences finite.
pub const SLACK_SENTINEL: f64 = 1e300;

const MOVE_RETRIES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("k = {k} is not admissible for this inequality on {size} points")]
    InadmissibleK { k: usize, size: usize },
    #[error("inequality `{0}` has no per-k slack objective")]
    Unsupported(InequalityId),
    #[error("no connectivity-preserving move found after {0} attempts")]
    Stuck(usize),
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
}

/// The record a search minimizes for `(id, k)`.
pub fn objective_record(
    spec: &Spectrum,
    id: InequalityId,
    k: usize,
) -> Result<InequalityRecord, SearchError> {
    use InequalityId::*;
    let ev = spec.values();
    let size = ev.len();
    let inadmissible = || SearchError::InadmissibleK { k, size };
    let map = |e: InequalityError| match e {
        InequalityError::KOutOfRange { .. } | InequalityError::TooFewEigenvalues { .. } => {
            inadmissible()
        }
        other => SearchError::Inequality(other),
    };
    let record = match id {
        Ppw => check_ppw(ev, k).map_err(map)?,
        HileProtter => check_hp(ev, k).map_err(map)?,
        Yang1 => check_yang1(ev, k).map_err(map)?,
        Yang2 => check_yang2(ev, k).map_err(map)?,
        RatioBound => check_ratio_bound(ev, k).map_err(map)?,
        Variance => check_variance(ev, k).map_err(map)?,
        Yang2Quadratic => check_yang2_alt(ev, k).map_err(map)?.0,
        Yang2Weighted => check_yang2_alt(ev, k).map_err(map)?.1,
        HpWeighted => check_hp_alt(ev, k).map_err(map)?,
        PpwWeighted => check_ppw_alt(ev, k).map_err(map)?,
        Recursion => match check_recursion(ev, k, None) {
            Ok(o) => o.record,
            Err(InequalityError::RecursionDefaultB { .. }) => {
                InequalityRecord::new(Recursion, k, f64::NAN, f64::INFINITY, Sense::AtMost, false)
            }
            Err(e) => return Err(map(e)),
        },
        FirstGap | FirstRatio if k == 1 => {
            let (gap, ratio) = check_first_gap(ev, spec.region().is_connected()).map_err(map)?;
            if id == FirstGap {
                gap
            } else {
                ratio
            }
        }
        FirstEigenBound if k == 1 && size >= 2 => {
            check_first_eig_bound(ev, spec.region().is_connected())
        }
        FirstGap | FirstRatio | FirstEigenBound => return Err(inadmissible()),
        other => return Err(SearchError::Unsupported(other)),
    };
    Ok(record)
}

fn objective_value(record: &InequalityRecord) -> f64 {
    if !record.precondition_met || !record.slack.is_finite() {
        SLACK_SENTINEL
    } else {
        record.slack
    }
}

/// Slack of `(id, k)` on `region`; infinite or vacuous slacks map to
/// [`SLACK_SENTINEL`].
pub fn slack_objective(region: &Region, id: InequalityId, k: usize) -> Result<f64, SearchError> {
    let spec = full_spectrum(&DirichletOperator::assemble(region.clone())?)?;
    Ok(objective_value(&objective_record(&spec, id, k)?))
}

/// Adds one boundary point and removes one region point, keeping the size and
/// connectivity. Disconnecting candidates are resampled.
pub fn propose_move(region: &Region, rng: &mut SplitMix64) -> Result<Region, SearchError> {
    let boundary = region.boundary()?;
    let points = region.points();
    for _ in 0..MOVE_RETRIES {
        let add = &boundary.points()[rng.below(boundary.len())];
        let drop = rng.below(points.len());
        let mut next: Vec<Point> = points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, p)| p.clone())
            .collect();
        next.push(add.clone());
        let candidate = Region::new(region.dim(), next)?;
        if candidate.is_connected() {
            return Ok(candidate);
        }
    }
    Err(SearchError::Stuck(MOVE_RETRIES))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub n: usize,
    pub region_size: usize,
    pub inequality: InequalityId,
    pub k: usize,
    pub steps: usize,
    /// `None` uses the magnitude of the initial slack.
    pub initial_temperature: Option<f64>,
    pub decay: f64,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(
        n: usize,
        region_size: usize,
        inequality: InequalityId,
        k: usize,
        steps: usize,
        seed: u64,
    ) -> Self {
        SearchConfig {
            n,
            region_size,
            inequality,
            k,
            steps,
            initial_temperature: None,
            decay: 0.995,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return bad("decay must lie in (0, 1)");
        }
        if self.region_size < 2 {
            return bad("region size must be at least 2");
        }
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return bad("initial temperature must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    /// Objective of the state proposed at this step (the initial state at step 0).
    pub objective: f64,
    pub accepted: bool,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
    pub best_region: Region,
    pub best_slack: f64,
    /// `(step, slack)` for slacks below `−TOL_INEQ_ABS`. Any entry here is a bug.
    pub violations: Vec<(usize, f64)>,
}

impl SearchTrace {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "objective", "accepted", "best_so_far"])
            .expect("in-memory write");
        for s in &self.steps {
            w.write_record([
                s.step.to_string(),
                format_extended(s.objective),
                s.accepted.to_string(),
                format_extended(s.best_so_far),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Metropolis annealing from the straight path of the configured size.
///
/// Step 0 evaluates the initial path; each later step proposes one move,
/// evaluates it and accepts with probability `min(1, exp(−Δ/T))`, then cools
/// `T ← decay · T`. Stuck proposals count as rejections.
pub fn anneal(config: &SearchConfig) -> Result<SearchTrace, SearchError> {
    config.validate()?;
    let mut rng = SplitMix64::new(config.seed);
    let mut current = path_region(config.n, config.region_size)?;
    let mut current_obj = slack_objective(&current, config.inequality, config.k)?;
    let mut best_region = current.clone();
    let mut best = current_obj;
    let mut violations = Vec::new();
    let note = |step: usize, v: f64, violations: &mut Vec<(usize, f64)>| {
        if v < -TOL_INEQ_ABS {
            violations.push((step, v));
        }
    };
    note(0, current_obj, &mut violations);

    let mut temperature = config.initial_temperature.unwrap_or_else(|| {
        if current_obj.is_finite() && current_obj != 0.0 && current_obj.abs() < SLACK_SENTINEL {
            current_obj.abs()
        } else {
            1.0
        }
    });
    let mut steps = vec![TraceStep {
        step: 0,
        objective: current_obj,
        accepted: true,
        best_so_far: best,
    }];

    for step in 1..config.steps {
        let (objective, accepted) = match propose_move(&current, &mut rng) {
            Ok(candidate) => {
                let obj = slack_objective(&candidate, config.inequality, config.k)?;
                note(step, obj, &mut violations);
                let delta = obj - current_obj;
                let accept = delta <= 0.0 || rng.unit_f64() < (-delta / temperature).exp();
                if accept {
                    current = candidate;
                    current_obj = obj;
                    if obj < best {
                        best = obj;
                        best_region = current.clone();
                    }
                }
                (obj, accept)
            }
            Err(SearchError::Stuck(_)) => (current_obj, false),
            Err(e) => return Err(e),
        };
        temperature *= config.decay;
        steps.push(TraceStep {
            step,
            objective,
            accepted,
            best_so_far: best,
        });
    }
    Ok(SearchTrace {
        steps,
        best_region,
        best_slack: best,
        violations,
    })
}

/// Independent chains, one per seed, run in parallel. Results follow `seeds`.
pub fn anneal_chains(
    config: &SearchConfig,
    seeds: &[u64],
) -> Vec<Result<SearchTrace, SearchError>> {
    seeds
        .par_iter()
        .map(|&seed| {
            anneal(&SearchConfig {
                seed,
                ..config.clone()
            })
        })
        .collect()
}

/// Every connected region of `size` cells in ℤ², up to translation.
///
/// Intended as a brute-force reference for small sizes only.
pub fn connected_shapes_2d(size: usize) -> Result<Vec<Region>, SearchError> {
    if !(1..=8).contains(&size) {
        return Err(SearchError::Config(
            "exhaustive enumeration supports sizes 1..=8".into(),
        ));
    }
    let normalize = |pts: Vec<Point>| -> Vec<Point> {
        let mx = pts.iter().map(|p| p.coords()[0]).min().unwrap_or(0);
        let my = pts.iter().map(|p| p.coords()[1]).min().unwrap_or(0);
        let mut out: Vec<Point> = pts
            .iter()
            .map(|p| Point::new(vec![p.coords()[0] - mx, p.coords()[1] - my]))
            .collect();
        out.sort();
        out
    };
    let mut layer: HashSet<Vec<Point>> = HashSet::from([vec![Point::origin(2)]]);
    for _ in 1..size {
        let mut next = HashSet::new();
        for shape in &layer {
            let region = Region::new(2, shape.clone())?;
            for b in region.boundary()?.points() {
                let mut grown = shape.clone();
                grown.push(b.clone());
                next.insert(normalize(grown));
            }
        }
        layer = next;
    }
    let mut shapes: Vec<Vec<Point>> = layer.into_iter().collect();
    shapes.sort();
    shapes
        .into_iter()
        .map(|s| Region::new(2, s).map_err(SearchError::from))
        .collect()
}

/// Minimum slack over every connected `size`-cell region in ℤ².
pub fn exhaustive_minimum(
    size: usize,
    id: InequalityId,
    k: usize,
) -> Result<(Region, f64), SearchError> {
    let shapes = connected_shapes_2d(size)?;
    let values = shapes
        .par_iter()
        .map(|r| slack_objective(r, id, k))
        .collect::<Result<Vec<_>, _>>()?;
    let (idx, best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one shape");
    Ok((shapes[idx].clone(), *best))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Cubes `[1..m]ⁿ`, indexed by side length.
    Boxes,
    /// ℓ¹ balls about the origin, indexed by radius.
    L1Balls,
    /// Straight paths along the first axis, indexed by point count.
    Paths,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Boxes => "boxes",
            Family::L1Balls => "l1balls",
            Family::Paths => "paths",
        }
    }

    pub fn member(self, n: usize, size: usize) -> Result<Region, RegionError> {
        match self {
            Family::Boxes => box_region(&vec![size; n]),
            Family::L1Balls => {
                let r =
                    u32::try_from(size).map_err(|_| RegionError::CoordinateRange(size as i64))?;
                ball_region(n, r, &Point::origin(n), Metric::L1)
            }
            Family::Paths => path_region(n, size),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boxes" | "box" => Ok(Family::Boxes),
            "l1balls" | "balls" | "ball" => Ok(Family::L1Balls),
            "paths" | "path" => Ok(Family::Paths),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepBlock {
    pub region_id: String,
    pub region: Region,
    pub records: Vec<InequalityRecord>,
}

/// [`full_report`] for each family member, in size order. `filter` keeps only
/// the listed inequalities.
pub fn sweep_family(
    family: Family,
    n: usize,
    sizes: std::ops::RangeInclusive<usize>,
    filter: Option<&[InequalityId]>,
) -> Result<Vec<SweepBlock>, SearchError> {
    let sizes: Vec<usize> = sizes.collect();
    sizes
        .par_iter()
        .map(|&size| {
            let region = family.member(n, size)?;
            let spec = full_spectrum(&DirichletOperator::assemble(region.clone())?)?;
            let records = full_report(spec.values(), region.is_connected())
                .into_iter()
                .filter(|r| filter.is_none_or(|ids| ids.contains(&r.inequality_id)))
                .collect();
            Ok(SweepBlock {
                region_id: format!("{family}-n{n}-s{size}"),
                region,
                records,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vertex_line() -> Region {
        path_region(1, 2).unwrap()
    }

    #[test]
    fn objective_examples() {
        assert!(
            (slack_objective(&two_vertex_line(), InequalityId::Ppw, 1).unwrap() - 3.0).abs()
                < 1e-12
        );
        let b = box_region(&[2, 2]).unwrap();
        assert!((slack_objective(&b, InequalityId::Yang1, 3).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(
            slack_objective(&b, InequalityId::HileProtter, 2).unwrap(),
            SLACK_SENTINEL
        );
        assert!(matches!(
            slack_objective(&b, InequalityId::Ppw, 4),
            Err(SearchError::InadmissibleK { .. })
        ));
        assert!(matches!(
            slack_objective(&b, InequalityId::Grad1, 1),
            Err(SearchError::Unsupported(_))
        ));
    }

    #[test]
    fn moves_preserve_size_and_connectivity() {
        let mut rng = SplitMix64::new(5);
        let mut r = two_vertex_line();
        for _ in 0..50 {
            r = propose_move(&r, &mut rng).unwrap();
            assert_eq!(r.len(), 2);
            assert!(r.is_connected());
        }
        let mut r = path_region(2, 9).unwrap();
        for _ in 0..200 {
            r = propose_move(&r, &mut rng).unwrap();
            assert_eq!(r.len(), 9);
            assert!(r.is_connected());
        }
    }

    #[test]
    fn moves_are_deterministic() {
        let start = path_region(2, 6).unwrap();
        let run = |seed| {
            let mut rng = SplitMix64::new(seed);
            let mut r = start.clone();
            (0..20)
                .map(|_| {
                    r = propose_move(&r, &mut rng).unwrap();
                    r.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn single_step_keeps_initial() {
        let cfg = SearchConfig::new(2, 5, InequalityId::Ppw, 1, 1, 0);
        let t = anneal(&cfg).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.best_region, path_region(2, 5).unwrap());
    }

    #[test]
    fn anneal_never_worse_than_path_and_deterministic() {
        let cfg = SearchConfig::new(1, 6, InequalityId::Ppw, 2, 60, 9);
        let path_slack =
            slack_objective(&path_region(1, 6).unwrap(), InequalityId::Ppw, 2).unwrap();
        let a = anneal(&cfg).unwrap();
        let b = anneal(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps.len(), 60);
        assert!(a.best_slack <= path_slack);
        assert!(a.violations.is_empty());
        assert!(a
            .steps
            .windows(2)
            .all(|w| w[1].best_so_far <= w[0].best_so_far));
    }

    #[test]
    fn chains_match_single_runs() {
        let cfg = SearchConfig::new(2, 6, InequalityId::Yang1, 2, 30, 0);
        let chains = anneal_chains(&cfg, &[4, 5]);
        for (seed, got) in [4, 5].into_iter().zip(chains) {
            let single = anneal(&SearchConfig {
                seed,
                ..cfg.clone()
            })
            .unwrap();
            assert_eq!(got.unwrap(), single);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SearchConfig::new(2, 5, InequalityId::Ppw, 1, 10, 0);
        cfg.decay = 1.0;
        assert!(anneal(&cfg).is_err());
        let cfg = SearchConfig::new(2, 1, InequalityId::Ppw, 1, 10, 0);
        assert!(matches!(anneal(&cfg), Err(SearchError::Config(_))));
        let cfg = SearchConfig::new(2, 5, InequalityId::Ppw, 1, 0, 0);
        assert!(anneal(&cfg).is_err());
    }

    #[test]
    fn polyomino_counts() {
        // fixed polyominoes: 1, 2, 6, 19, 63, 216, 760, 2725
        let counts: Vec<usize> = (1..=6)
            .map(|s| connected_shapes_2d(s).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 2, 6, 19, 63, 216]);
    }

    #[test]
    fn annealer_cannot_beat_exhaustive_minimum() {
        let (_, exact) = exhaustive_minimum(5, InequalityId::Ppw, 1).unwrap();
        let mut cfg = SearchConfig::new(2, 5, InequalityId::Ppw, 1, 300, 1);
        cfg.initial_temperature = Some(0.5);
        let t = anneal(&cfg).unwrap();
        assert!(t.best_slack >= exact - 1e-12);
    }

    #[test]
    fn sweeps() {
        let blocks = sweep_family(Family::Paths, 1, 2..=10, None).unwrap();
        assert_eq!(blocks.len(), 9);
        assert_eq!(blocks[0].region_id, "paths-n1-s2");
        let blocks = sweep_family(Family::Boxes, 2, 2..=5, None).unwrap();
        assert!(blocks.iter().flat_map(|b| &b.records).all(|r| r.pass));
        #[allow(clippy::reversed_empty_ranges)]
        let blocks = sweep_family(Family::Paths, 1, 3..=2, None).unwrap();
        assert!(blocks.is_empty());
        let only = [InequalityId::Ppw];
        let blocks = sweep_family(Family::L1Balls, 2, 1..=2, Some(&only)).unwrap();
        assert!(blocks
            .iter()
            .flat_map(|b| &b.records)
            .all(|r| r.inequality_id == InequalityId::Ppw));
    }
}
