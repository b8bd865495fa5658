//! Monte Carlo harness over the testers, generators, and witness machinery:
//! rejection-rate estimation, sample-complexity threshold search along a size
//! grid, log-log scaling fits with bootstrap bands, experiment plans with CSV
//! reports, and a registry of named sampling lemmas checked against their
//! stated success bounds.
//!
//! Statistical conventions, applied uniformly and never adapted to the data:
//!
//! * every empirical rate carries the binomial standard error
//!   `sqrt(rate·(1−rate)/trials)`;
//! * threshold search declares a sample count `m` as crossing only when the
//!   observed rejection rate clears `target + 2·std_error` — a conservative
//!   one-sided rule, so reported thresholds err high rather than low;
//! * a lemma check passes iff the observed success frequency is at least
//!   `bound − 3σ`, where `σ = sqrt(bound·(1−bound)/trials)` is computed at
//!   the *stated* bound, not at the observed frequency, so the pass line is
//!   fixed before any trial runs.
//!
//! Every routine takes an explicit [`RngSeed`] and derives per-trial streams
//! from it: the trial indexed `t` always uses `seed.substream(t)` no matter
//! which thread runs it, reductions are exact integer sums, and bootstrap
//! resampling is serial.  Replays are therefore exact, and the thread count
//! never changes a reported number.

use crate::core::{
    and_indicator, process_s, process_s_indicator, uniform_unit, CoreError, Edge,
    EdgeDistribution, MassFunction, RngSeed, Sampler,
};
use crate::generators::{
    generate_instance, pattern_from_json, pattern_to_json, Family, GeneratorError, Side,
    TestInstance,
};
use crate::oracles::{exact_distance, OracleError};
use crate::testers::{run_property_tester, Decision, Property, TesterError};
use crate::witness::{
    concentrated_budget, dilute_budget, hop_tables, square_witness, Hypergraph, WitnessError,
};
use crate::{mass_to_f64, parse_mass, rat, rat_int, render_mass, Rat};
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::time::Instant;
use thiserror::Error;

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum HarnessError {
    /// An argument fails a structural precondition (zero trials, an empty
    /// grid, a degenerate fit input, an out-of-range budget).
    #[error("shape error: {0}")]
    ShapeError(String),
    /// A plan or parameter document is malformed: missing fields, wrong
    /// types, duplicate cells, values outside the supported range.
    #[error("invalid plan or parameters: {0}")]
    PlanError(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Tester(#[from] TesterError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

// ---------------------------------------------------------------------------
// thread pool
// ---------------------------------------------------------------------------

/// Shared rayon pool for every harness routine.  `SUBTEST_THREADS` pins the
/// worker count (an unparsable or zero value is silently ignored); otherwise
/// rayon picks one thread per core.  Results never depend on the pool size:
/// all randomness is keyed by trial index and reductions are exact.
fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(k) = std::env::var("SUBTEST_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&k| k >= 1)
        {
            builder = builder.num_threads(k);
        }
        builder.build().expect("worker pool construction failed")
    })
}

// ---------------------------------------------------------------------------
// rejection-rate estimation
// ---------------------------------------------------------------------------

/// Empirical rejection rate of a tester over repeated independent runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionEstimate {
    pub m: u64,
    pub trials: u64,
    pub rejections: u64,
    /// `rejections / trials`; exactly `0.0` when no trial rejected.
    pub rate: f64,
    /// Binomial standard error `sqrt(rate·(1−rate)/trials)`.
    pub std_error: f64,
}

/// Runs the canonical tester for `property` on `trials` fresh samples of
/// size `m` drawn from `instance`, and tallies rejections.
///
/// Trial `t` draws with `seed.substream(t)`, so the estimate is a pure
/// function of `(instance, property, m, trials, seed)` and replays exactly.
pub fn estimate_rejection(
    instance: &TestInstance,
    property: &Property,
    m: u64,
    trials: u64,
    seed: RngSeed,
) -> Result<RejectionEstimate, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::ShapeError(
            "rejection estimation needs at least one trial".into(),
        ));
    }
    let rejections: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| -> Result<u64, HarnessError> {
                let samples = instance.draw_labeled(m, seed.substream(t));
                let verdict = run_property_tester(property, &samples)?;
                Ok(u64::from(verdict.decision == Decision::Reject))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })?;
    let rate = rejections as f64 / trials as f64;
    let std_error = (rate * (1.0 - rate) / trials as f64).sqrt();
    Ok(RejectionEstimate {
        m,
        trials,
        rejections,
        rate,
        std_error,
    })
}

// ---------------------------------------------------------------------------
// threshold search
// ---------------------------------------------------------------------------

/// Result of a sample-complexity search: either the smallest crossing `m`
/// found, or the probe budget that was exhausted without a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdOutcome {
    Resolved(u64),
    Unresolved(u64),
}

/// Generates the far-side instance of `family` at size `n` and searches for
/// the smallest sample count whose rejection rate crosses `target`.
///
/// Generation uses `seed.substream(0)` and the search `seed.substream(1)`,
/// so the two stages never share a stream.
pub fn threshold_search(
    family: &Family,
    n: u32,
    target: f64,
    trials: u64,
    seed: RngSeed,
    m_cap: u64,
) -> Result<ThresholdOutcome, HarnessError> {
    let instance = generate_instance(family, n, Side::No, seed.substream(0))?;
    threshold_search_instance(
        &instance,
        &instance.property,
        target,
        trials,
        seed.substream(1),
        m_cap,
    )
}

/// Smallest `m ≤ m_cap` whose estimated rejection rate clears
/// `target + 2·std_error`, found by doubling and then bisecting.
///
/// The probe at sample count `m` always uses `seed.substream(m)`, so a
/// revisited `m` reproduces its earlier estimate bit for bit and the search
/// is deterministic given the seed.  The cap itself is probed before
/// [`ThresholdOutcome::Unresolved`] is returned.
pub fn threshold_search_instance(
    instance: &TestInstance,
    property: &Property,
    target: f64,
    trials: u64,
    seed: RngSeed,
    m_cap: u64,
) -> Result<ThresholdOutcome, HarnessError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(HarnessError::ShapeError(format!(
            "target rate {target} must lie strictly inside (0, 1)"
        )));
    }
    if trials == 0 {
        return Err(HarnessError::ShapeError(
            "threshold search needs at least one trial per probe".into(),
        ));
    }
    if m_cap == 0 {
        return Err(HarnessError::ShapeError(
            "the probe budget m_cap must be at least 1".into(),
        ));
    }
    let crosses = |m: u64| -> Result<bool, HarnessError> {
        let est = estimate_rejection(instance, property, m, trials, seed.substream(m))?;
        Ok(est.rate >= target + 2.0 * est.std_error)
    };
    // doubling phase: grow until a crossing sample count is found
    let mut lo = 0u64; // m = 0 never crosses: the rate is exactly zero
    let mut hi = 1u64;
    loop {
        if crosses(hi)? {
            break;
        }
        if hi == m_cap {
            return Ok(ThresholdOutcome::Unresolved(m_cap));
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(m_cap);
    }
    // bisection phase: `hi` crosses, `lo` does not
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if crosses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdOutcome::Resolved(hi))
}

// ---------------------------------------------------------------------------
// scaling fit
// ---------------------------------------------------------------------------

/// Least-squares exponent of a power law `m ≈ exp(intercept)·n^slope`,
/// with a 95% bootstrap band around the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

fn ols(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None; // all resampled points share one abscissa
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Ordinary least squares on `(ln n, ln m)` over resolved grid points, plus
/// a 95% confidence band from 1000 case-bootstrap resamples.
///
/// Needs at least three points spanning at least two distinct sizes.
/// Degenerate resamples (all copies of a single size) are redrawn; the
/// bootstrap itself is serial and driven by `seed`, so the band replays
/// exactly.
pub fn scaling_fit(points: &[(u32, u64)], seed: RngSeed) -> Result<ScalingFit, HarnessError> {
    if points.len() < 3 {
        return Err(HarnessError::ShapeError(format!(
            "a scaling fit needs at least 3 grid points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(n, m)| n == 0 || m == 0) {
        return Err(HarnessError::ShapeError(
            "grid points must have n ≥ 1 and m ≥ 1 for a log-log fit".into(),
        ));
    }
    let distinct: BTreeSet<u32> = points.iter().map(|&(n, _)| n).collect();
    if distinct.len() < 2 {
        return Err(HarnessError::ShapeError(
            "all grid points share a single n; the slope is undetermined".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| f64::from(n).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, m)| (m as f64).ln()).collect();
    let (slope, intercept) = ols(&xs, &ys).expect("two distinct sizes give positive x-variance");

    const RESAMPLES: usize = 1000;
    let k = points.len();
    let mut rng = seed.rng();
    let mut slopes = Vec::with_capacity(RESAMPLES);
    let mut attempts = 0usize;
    while slopes.len() < RESAMPLES {
        attempts += 1;
        if attempts > 100_000 {
            return Err(HarnessError::ShapeError(
                "bootstrap could not draw enough non-degenerate resamples".into(),
            ));
        }
        let (bx, by): (Vec<f64>, Vec<f64>) = (0..k)
            .map(|_| {
                let u = uniform_unit(&mut rng);
                let i = ((u * k as f64) as usize).min(k - 1);
                (xs[i], ys[i])
            })
            .unzip();
        if let Some((s, _)) = ols(&bx, &by) {
            slopes.push(s);
        }
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).expect("slopes are finite"));
    Ok(ScalingFit {
        slope,
        intercept,
        ci_low: slopes[24],
        ci_high: slopes[974],
        points: k,
    })
}

// ---------------------------------------------------------------------------
// experiment plans
// ---------------------------------------------------------------------------

/// Default probe budget for threshold schedules.
pub const DEFAULT_M_CAP: u64 = 1 << 17;

/// Sample-count schedule for an experiment: either a fixed list of sample
/// counts per cell, or a per-cell threshold search.
#[derive(Debug, Clone, PartialEq)]
pub enum MSchedule {
    Explicit(Vec<u64>),
    Threshold { target: f64, m_cap: u64 },
}

/// A full experiment: one instance family swept over a size grid, with one
/// cell per `(n, side)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub family: Family,
    pub n_grid: Vec<u32>,
    pub sides: Vec<Side>,
    pub schedule: MSchedule,
    /// Trials per cell (and per probe when the schedule is a search).
    pub trials: u64,
    pub seed: RngSeed,
    /// Fit a power law to the resolved thresholds across the grid.
    pub fit: bool,
}

/// Family selector in plan and parameter documents: a bare string for the
/// parameter-free families, an object for the parameterized ones.
pub fn family_from_json(v: &Value) -> Result<Family, HarnessError> {
    if let Some(s) = v.as_str() {
        return match s {
            "triangle" => Ok(Family::Triangle),
            "square" => Ok(Family::Square),
            "clique" => Ok(Family::Clique),
            "bipartite" => Err(HarnessError::PlanError(
                "family \"bipartite\" needs a k field; write {\"name\": \"bipartite\", \"k\": 3}"
                    .into(),
            )),
            "tree" => Err(HarnessError::PlanError(
                "family \"tree\" needs a pattern field; write {\"name\": \"tree\", \"pattern\": …}"
                    .into(),
            )),
            other => Err(HarnessError::PlanError(format!(
                "unknown family {other:?}"
            ))),
        };
    }
    let obj = v.as_object().ok_or_else(|| {
        HarnessError::PlanError("family must be a string or an object with a name".into())
    })?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| HarnessError::PlanError("family object lacks a string \"name\"".into()))?;
    match name {
        "triangle" => Ok(Family::Triangle),
        "square" => Ok(Family::Square),
        "clique" => Ok(Family::Clique),
        "bipartite" => {
            let k = obj
                .get("k")
                .and_then(Value::as_u64)
                .and_then(|k| u32::try_from(k).ok())
                .ok_or_else(|| {
                    HarnessError::PlanError("bipartite family needs a small integer k".into())
                })?;
            Ok(Family::Bipartite { k })
        }
        "tree" => {
            let pv = obj.get("pattern").ok_or_else(|| {
                HarnessError::PlanError("tree family needs a pattern object".into())
            })?;
            Ok(Family::Tree {
                pattern: pattern_from_json(pv)?,
            })
        }
        other => Err(HarnessError::PlanError(format!(
            "unknown family {other:?}"
        ))),
    }
}

pub fn family_to_json(family: &Family) -> Value {
    match family {
        Family::Triangle => json!("triangle"),
        Family::Square => json!("square"),
        Family::Clique => json!("clique"),
        Family::Bipartite { k } => json!({"name": "bipartite", "k": k}),
        Family::Tree { pattern } => json!({"name": "tree", "pattern": pattern_to_json(pattern)}),
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let plan_err = |msg: String| Err(HarnessError::PlanError(msg));
        if self.n_grid.is_empty() {
            return plan_err("the size grid is empty".into());
        }
        if self.n_grid.contains(&0) {
            return plan_err("grid sizes must be at least 1".into());
        }
        if self.sides.is_empty() {
            return plan_err("no sides selected".into());
        }
        let side_names: BTreeSet<&str> = self.sides.iter().map(Side::as_str).collect();
        if side_names.len() != self.sides.len() {
            return plan_err("duplicate sides in the plan".into());
        }
        if self.trials < 30 {
            return plan_err(format!(
                "at least 30 trials per cell are required, got {}",
                self.trials
            ));
        }
        match &self.schedule {
            MSchedule::Explicit(ms) => {
                if ms.is_empty() {
                    return plan_err("the explicit sample schedule is empty".into());
                }
            }
            MSchedule::Threshold { target, m_cap } => {
                if !(*target > 0.0 && *target < 1.0) {
                    return plan_err(format!(
                        "threshold target {target} must lie strictly inside (0, 1)"
                    ));
                }
                if *m_cap == 0 {
                    return plan_err("the probe budget m_cap must be at least 1".into());
                }
                if self.sides != [Side::No] {
                    return plan_err(
                        "threshold search runs on the far side only; set sides to [\"no\"]".into(),
                    );
                }
            }
        }
        if self.fit {
            if !matches!(self.schedule, MSchedule::Threshold { .. }) {
                return plan_err("a scaling fit needs a threshold schedule".into());
            }
            let distinct: BTreeSet<u32> = self.n_grid.iter().copied().collect();
            if distinct.len() < 3 {
                return plan_err(format!(
                    "a scaling fit needs at least 3 distinct grid sizes, got {}",
                    distinct.len()
                ));
            }
        }
        Ok(())
    }

    /// Parses and validates a plan document.
    pub fn from_json(v: &Value) -> Result<Self, HarnessError> {
        let obj = v
            .as_object()
            .ok_or_else(|| HarnessError::PlanError("a plan must be a JSON object".into()))?;
        let family = family_from_json(field(obj, "family")?)?;
        let n_grid = field(obj, "n_grid")?
            .as_array()
            .ok_or_else(|| HarnessError::PlanError("n_grid must be an array".into()))?
            .iter()
            .map(|x| {
                x.as_u64().and_then(|n| u32::try_from(n).ok()).ok_or_else(|| {
                    HarnessError::PlanError("n_grid entries must be small positive integers".into())
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sides = field(obj, "sides")?
            .as_array()
            .ok_or_else(|| HarnessError::PlanError("sides must be an array".into()))?
            .iter()
            .map(|x| {
                let s = x.as_str().ok_or_else(|| {
                    HarnessError::PlanError("sides entries must be strings".into())
                })?;
                Side::parse(s).map_err(|e| HarnessError::PlanError(format!("bad side: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sched_obj = field(obj, "schedule")?.as_object().ok_or_else(|| {
            HarnessError::PlanError("schedule must be an object".into())
        })?;
        let schedule = if let Some(ex) = sched_obj.get("explicit") {
            let ms = ex
                .as_array()
                .ok_or_else(|| {
                    HarnessError::PlanError("schedule.explicit must be an array".into())
                })?
                .iter()
                .map(|x| {
                    x.as_u64().ok_or_else(|| {
                        HarnessError::PlanError(
                            "explicit sample counts must be non-negative integers".into(),
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            MSchedule::Explicit(ms)
        } else if let Some(th) = sched_obj.get("threshold") {
            let tobj = th.as_object().ok_or_else(|| {
                HarnessError::PlanError("schedule.threshold must be an object".into())
            })?;
            let target = match tobj.get("target") {
                None => 2.0 / 3.0,
                Some(tv) => mass_to_f64(&parse_mass(tv).map_err(|e| {
                    HarnessError::PlanError(format!("schedule.threshold.target: {e}"))
                })?),
            };
            let m_cap = match tobj.get("m_cap") {
                None => DEFAULT_M_CAP,
                Some(mv) => mv.as_u64().ok_or_else(|| {
                    HarnessError::PlanError(
                        "schedule.threshold.m_cap must be a non-negative integer".into(),
                    )
                })?,
            };
            MSchedule::Threshold { target, m_cap }
        } else {
            return Err(HarnessError::PlanError(
                "schedule must contain either \"explicit\" or \"threshold\"".into(),
            ));
        };
        let trials = field(obj, "trials")?.as_u64().ok_or_else(|| {
            HarnessError::PlanError("trials must be a non-negative integer".into())
        })?;
        let seed = seed_field(obj, "seed")?;
        let fit = match obj.get("fit") {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                return Err(HarnessError::PlanError("fit must be a boolean".into()));
            }
        };
        let plan = ExperimentPlan {
            family,
            n_grid,
            sides,
            schedule,
            trials,
            seed,
            fit,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> Value {
        let schedule = match &self.schedule {
            MSchedule::Explicit(ms) => json!({ "explicit": ms }),
            MSchedule::Threshold { target, m_cap } => {
                json!({ "threshold": { "target": target, "m_cap": m_cap } })
            }
        };
        json!({
            "family": family_to_json(&self.family),
            "n_grid": self.n_grid,
            "sides": self.sides.iter().map(Side::as_str).collect::<Vec<_>>(),
            "schedule": schedule,
            "trials": self.trials,
            "seed": { "master": self.seed.master, "stream": self.seed.stream },
            "fit": self.fit,
        })
    }
}

// ---------------------------------------------------------------------------
// experiment execution
// ---------------------------------------------------------------------------

/// One measured cell of an experiment grid.  `runtime_ms` and `resolved`
/// are carried for diagnostics but never serialized into the CSV, which
/// must replay byte-identically across machines and thread counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub family: String,
    pub n: u32,
    pub side: Side,
    pub m: u64,
    pub trials: u64,
    pub rejections: u64,
    pub rate: f64,
    pub std_error: f64,
    pub runtime_ms: u64,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<CellRow>,
    pub fit: Option<ScalingFit>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    /// Renders the report as CSV: a `schema=1` line, a fixed header, one
    /// data row per cell, then warnings and the fit as `#`-comment lines.
    pub fn to_csv(&self) -> String {
        let mut lines = vec![
            "schema=1".to_string(),
            "family,n,side,m,trials,rejections,rejection_rate,std_error".to_string(),
        ];
        for r in &self.rows {
            lines.push(format!(
                "{},{},{},{},{},{},{:.6},{:.6}",
                r.family,
                r.n,
                r.side.as_str(),
                r.m,
                r.trials,
                r.rejections,
                r.rate,
                r.std_error
            ));
        }
        for w in &self.warnings {
            lines.push(format!("# warning: {w}"));
        }
        if let Some(f) = &self.fit {
            lines.push(format!(
                "# fit: slope={:.6} ci_low={:.6} ci_high={:.6} intercept={:.6} points={}",
                f.slope, f.ci_low, f.ci_high, f.intercept, f.points
            ));
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

struct CellOutput {
    rows: Vec<CellRow>,
    warnings: Vec<String>,
    fit_point: Option<(u32, u64)>,
}

// seed streams at indices below 2^32 belong to grid cells; the fit draws
// from a stream no cell can collide with
const FIT_STREAM: u64 = 1 << 32;

fn run_cell(
    plan: &ExperimentPlan,
    idx: u64,
    n: u32,
    side: Side,
) -> Result<CellOutput, HarnessError> {
    let cell_seed = plan.seed.substream(idx);
    let instance = generate_instance(&plan.family, n, side, cell_seed.substream(0))?;
    let est_seed = cell_seed.substream(1);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut fit_point = None;
    match &plan.schedule {
        MSchedule::Explicit(ms) => {
            for &m in ms {
                let started = Instant::now();
                let est = estimate_rejection(
                    &instance,
                    &instance.property,
                    m,
                    plan.trials,
                    est_seed.substream(m),
                )?;
                rows.push(CellRow {
                    family: plan.family.name().to_string(),
                    n,
                    side,
                    m,
                    trials: plan.trials,
                    rejections: est.rejections,
                    rate: est.rate,
                    std_error: est.std_error,
                    runtime_ms: started.elapsed().as_millis() as u64,
                    resolved: true,
                });
            }
        }
        MSchedule::Threshold { target, m_cap } => {
            let started = Instant::now();
            let outcome = threshold_search_instance(
                &instance,
                &instance.property,
                *target,
                plan.trials,
                est_seed,
                *m_cap,
            )?;
            let (m_final, resolved) = match outcome {
                ThresholdOutcome::Resolved(m) => (m, true),
                ThresholdOutcome::Unresolved(m) => (m, false),
            };
            // keyed like the search probes, so this replays the probe at
            // m_final rather than drawing fresh randomness
            let est = estimate_rejection(
                &instance,
                &instance.property,
                m_final,
                plan.trials,
                est_seed.substream(m_final),
            )?;
            if resolved {
                fit_point = Some((n, m_final));
            } else {
                warnings.push(format!(
                    "threshold search unresolved at m_cap={m_cap} for family={} n={n} side={}",
                    plan.family.name(),
                    side.as_str()
                ));
            }
            rows.push(CellRow {
                family: plan.family.name().to_string(),
                n,
                side,
                m: m_final,
                trials: plan.trials,
                rejections: est.rejections,
                rate: est.rate,
                std_error: est.std_error,
                runtime_ms: started.elapsed().as_millis() as u64,
                resolved,
            });
        }
    }
    Ok(CellOutput {
        rows,
        warnings,
        fit_point,
    })
}

/// Runs every `(n, side)` cell of the plan (sizes outer, sides inner) and
/// assembles the report.  Cells run in parallel; cell `i` derives all of its
/// randomness from `plan.seed.substream(i)`, so the report is identical no
/// matter how the cells are scheduled.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport, HarnessError> {
    plan.validate()?;
    let cells: Vec<(u64, u32, Side)> = plan
        .n_grid
        .iter()
        .flat_map(|&n| plan.sides.iter().map(move |&side| (n, side)))
        .enumerate()
        .map(|(i, (n, side))| (i as u64, n, side))
        .collect();
    let outputs: Vec<CellOutput> = pool().install(|| {
        cells
            .par_iter()
            .map(|&(idx, n, side)| run_cell(plan, idx, n, side))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut fit_points: Vec<(u32, u64)> = Vec::new();
    for out in outputs {
        rows.extend(out.rows);
        warnings.extend(out.warnings);
        if let Some(p) = out.fit_point {
            fit_points.push(p);
        }
    }
    let fit = if plan.fit {
        let distinct: BTreeSet<u32> = fit_points.iter().map(|&(n, _)| n).collect();
        if fit_points.len() < 3 || distinct.len() < 2 {
            warnings.push(format!(
                "fit skipped: only {} resolved grid points",
                fit_points.len()
            ));
            None
        } else {
            Some(scaling_fit(&fit_points, plan.seed.substream(FIT_STREAM))?)
        }
    } else {
        None
    };
    Ok(ExperimentReport {
        rows,
        fit,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// lemma checks: framework
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LemmaOutcome {
    Passed,
    Failed,
    /// The supplied parameters violate a hypothesis of the statement, so
    /// the bound asserts nothing; the reason says which hypothesis and how.
    SkippedWithReason(String),
}

/// Outcome of one lemma check.
///
/// For success-counting checks `frequency = successes/trials` and the check
/// passes iff `frequency ≥ threshold = bound − 3σ`.  The tree comparison
/// check is not a success count: there `frequency` carries the worst
/// per-threshold difference of tail frequencies, `successes` stays 0, and
/// `std_error` is the conservative `sqrt(0.5/trials)` bound for a
/// difference of two proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub id: String,
    pub outcome: LemmaOutcome,
    pub trials: u64,
    pub successes: u64,
    pub frequency: f64,
    pub bound: f64,
    pub threshold: f64,
    pub std_error: f64,
    pub m: u64,
    pub notes: Vec<String>,
}

impl LemmaReport {
    fn skipped(id: &str, trials: u64, reason: String) -> Self {
        LemmaReport {
            id: id.to_string(),
            outcome: LemmaOutcome::SkippedWithReason(reason),
            trials,
            successes: 0,
            frequency: 0.0,
            bound: 0.0,
            threshold: 0.0,
            std_error: 0.0,
            m: 0,
            notes: Vec::new(),
        }
    }

    fn from_frequency(
        id: &str,
        trials: u64,
        successes: u64,
        bound: f64,
        m: u64,
        notes: Vec<String>,
    ) -> Self {
        debug_assert!(bound > 0.0 && bound < 1.0);
        let frequency = successes as f64 / trials as f64;
        let std_error = (bound * (1.0 - bound) / trials as f64).sqrt();
        let threshold = bound - 3.0 * std_error;
        let outcome = if frequency >= threshold {
            LemmaOutcome::Passed
        } else {
            LemmaOutcome::Failed
        };
        LemmaReport {
            id: id.to_string(),
            outcome,
            trials,
            successes,
            frequency,
            bound,
            threshold,
            std_error,
            m,
            notes,
        }
    }

    fn from_statistic(
        id: &str,
        trials: u64,
        statistic: f64,
        bound: f64,
        std_error: f64,
        m: u64,
        notes: Vec<String>,
    ) -> Self {
        let threshold = bound - 3.0 * std_error;
        let outcome = if statistic >= threshold {
            LemmaOutcome::Passed
        } else {
            LemmaOutcome::Failed
        };
        LemmaReport {
            id: id.to_string(),
            outcome,
            trials,
            successes: 0,
            frequency: statistic,
            bound,
            threshold,
            std_error,
            m,
            notes,
        }
    }

    pub fn summary_line(&self) -> String {
        match &self.outcome {
            LemmaOutcome::SkippedWithReason(r) => {
                format!("lemma {}: SKIPPED — {}", self.id, r)
            }
            o => format!(
                "lemma {}: {} (frequency {:.4} vs threshold {:.4}; bound {:.4}, m {}, trials {})",
                self.id,
                if *o == LemmaOutcome::Passed {
                    "PASSED"
                } else {
                    "FAILED"
                },
                self.frequency,
                self.threshold,
                self.bound,
                self.m,
                self.trials
            ),
        }
    }

    pub fn to_json(&self) -> Value {
        let outcome = match &self.outcome {
            LemmaOutcome::Passed => json!("passed"),
            LemmaOutcome::Failed => json!("failed"),
            LemmaOutcome::SkippedWithReason(r) => json!({ "skipped": r }),
        };
        json!({
            "id": self.id,
            "outcome": outcome,
            "trials": self.trials,
            "successes": self.successes,
            "frequency": self.frequency,
            "bound": self.bound,
            "threshold": self.threshold,
            "std_error": self.std_error,
            "m": self.m,
            "notes": self.notes,
        })
    }
}

/// Every checkable lemma, in suite order.
pub const LEMMA_IDS: [&str; 8] = [
    "birthday_minus_max",
    "classical_birthday",
    "hypergraph_birthday",
    "dilute_case",
    "concentrated_case_prelim",
    "tree_bipartite_birthday_paradox",
    "sample_number_control",
    "hom_sample_bound",
];

/// Trials per lemma when the caller does not override.
pub const DEFAULT_LEMMA_TRIALS: u64 = 1200;

/// Shipped parameters for a lemma check; every id in [`LEMMA_IDS`] has a
/// built-in set that satisfies the hypotheses, so the default suite never
/// skips.
pub fn default_lemma_params(id: &str) -> Result<Value, HarnessError> {
    let text = match id {
        "birthday_minus_max" => include_str!("../params/birthday_minus_max.json"),
        "classical_birthday" => include_str!("../params/classical_birthday.json"),
        "hypergraph_birthday" => include_str!("../params/hypergraph_birthday.json"),
        "dilute_case" => include_str!("../params/dilute_case.json"),
        "concentrated_case_prelim" => include_str!("../params/concentrated_case_prelim.json"),
        "tree_bipartite_birthday_paradox" => {
            include_str!("../params/tree_bipartite_birthday_paradox.json")
        }
        "sample_number_control" => include_str!("../params/sample_number_control.json"),
        "hom_sample_bound" => include_str!("../params/hom_sample_bound.json"),
        other => {
            return Err(HarnessError::PlanError(format!(
                "unknown lemma id {other:?}; known ids: {}",
                LEMMA_IDS.join(", ")
            )));
        }
    };
    serde_json::from_str(text).map_err(|e| {
        HarnessError::PlanError(format!("built-in parameter set for {id} is unreadable: {e}"))
    })
}

/// Runs one named lemma check.  Parameter documents are validated first;
/// parameters that are well-formed but violate a hypothesis of the statement
/// produce [`LemmaOutcome::SkippedWithReason`], never a silent pass.
pub fn lemma_check(
    id: &str,
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::ShapeError(
            "a lemma check needs at least one trial".into(),
        ));
    }
    match id {
        "birthday_minus_max" => check_birthday_minus_max(params, trials, seed),
        "classical_birthday" => check_classical_birthday(params, trials, seed),
        "hypergraph_birthday" => check_hypergraph_birthday(params, trials, seed),
        "dilute_case" => check_dilute_case(params, trials, seed),
        "concentrated_case_prelim" => check_concentrated_case_prelim(params, trials, seed),
        "tree_bipartite_birthday_paradox" => {
            check_tree_bipartite_birthday_paradox(params, trials, seed)
        }
        "sample_number_control" => check_sample_number_control(params, trials, seed),
        "hom_sample_bound" => check_hom_sample_bound(params, trials, seed),
        other => Err(HarnessError::PlanError(format!(
            "unknown lemma id {other:?}; known ids: {}",
            LEMMA_IDS.join(", ")
        ))),
    }
}

/// Runs every registered lemma at its shipped parameters; lemma `i` uses
/// `seed.substream(i)`.
pub fn run_lemma_suite(trials: u64, seed: RngSeed) -> Result<Vec<LemmaReport>, HarnessError> {
    LEMMA_IDS
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let params = default_lemma_params(id)?;
            lemma_check(id, &params, trials, seed.substream(i as u64))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// parameter parsing helpers
// ---------------------------------------------------------------------------

fn params_object(params: &Value) -> Result<&Map<String, Value>, HarnessError> {
    params
        .as_object()
        .ok_or_else(|| HarnessError::PlanError("parameters must be a JSON object".into()))
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value, HarnessError> {
    obj.get(name)
        .ok_or_else(|| HarnessError::PlanError(format!("missing parameter field {name:?}")))
}

fn u32_field(obj: &Map<String, Value>, name: &str) -> Result<u32, HarnessError> {
    field(obj, name)?
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| {
            HarnessError::PlanError(format!(
                "field {name:?} must be a small non-negative integer"
            ))
        })
}

fn mass_field(obj: &Map<String, Value>, name: &str) -> Result<Rat, HarnessError> {
    parse_mass(field(obj, name)?)
        .map_err(|e| HarnessError::PlanError(format!("field {name:?}: {e}")))
}

fn seed_field(obj: &Map<String, Value>, name: &str) -> Result<RngSeed, HarnessError> {
    let v = field(obj, name)?.as_object().ok_or_else(|| {
        HarnessError::PlanError(format!(
            "field {name:?} must be an object with master and stream"
        ))
    })?;
    let master = v.get("master").and_then(Value::as_u64).ok_or_else(|| {
        HarnessError::PlanError(format!("field {name:?} needs an integer \"master\""))
    })?;
    let stream = v.get("stream").and_then(Value::as_u64).ok_or_else(|| {
        HarnessError::PlanError(format!("field {name:?} needs an integer \"stream\""))
    })?;
    Ok(RngSeed::new(master, stream))
}

fn in_open_unit(x: &Rat) -> bool {
    *x > Rat::zero() && *x < rat_int(1)
}

/// Rounds a floating budget up to an integer, rejecting budgets too large
/// to run or to index a seed stream.
fn ceil_to_u64(x: f64) -> Result<u64, HarnessError> {
    if !x.is_finite() || !(0.0..=1e15).contains(&x) {
        return Err(HarnessError::ShapeError(format!(
            "sample budget {x} is out of range"
        )));
    }
    Ok(x.ceil() as u64)
}

/// Mass on an `rows × cols` grid: `"uniform"` or explicit
/// `[row, col, mass]` triples with 1-based coordinates.
fn grid_mass(v: &Value, rows: u32, cols: u32) -> Result<MassFunction<(u32, u32)>, HarnessError> {
    if u64::from(rows) * u64::from(cols) > 1 << 20 {
        return Err(HarnessError::PlanError(format!(
            "grid {rows} × {cols} is too large"
        )));
    }
    if v.as_str() == Some("uniform") {
        let atoms = (1..=rows).flat_map(|a| (1..=cols).map(move |b| (a, b)));
        return Ok(MassFunction::uniform(atoms)?);
    }
    let entries = v.as_array().ok_or_else(|| {
        HarnessError::PlanError(
            "grid mass must be \"uniform\" or an array of [row, col, mass] triples".into(),
        )
    })?;
    let mut weights = BTreeMap::new();
    for e in entries {
        let t = e
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| {
                HarnessError::PlanError("each grid entry must be a [row, col, mass] triple".into())
            })?;
        let a = t[0]
            .as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .filter(|&a| a >= 1 && a <= rows)
            .ok_or_else(|| {
                HarnessError::PlanError(format!("grid row {} is not in 1..={rows}", t[0]))
            })?;
        let b = t[1]
            .as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .filter(|&b| b >= 1 && b <= cols)
            .ok_or_else(|| {
                HarnessError::PlanError(format!("grid column {} is not in 1..={cols}", t[1]))
            })?;
        let w = parse_mass(&t[2])
            .map_err(|e| HarnessError::PlanError(format!("grid mass at ({a}, {b}): {e}")))?;
        if weights.insert((a, b), w).is_some() {
            return Err(HarnessError::PlanError(format!(
                "duplicate grid cell ({a}, {b})"
            )));
        }
    }
    Ok(MassFunction::from_map(weights)?)
}

/// Mass on a vertex set: `"uniform"` over `allowed` or explicit
/// `[vertex, mass]` pairs, each vertex drawn from `allowed`.
fn vertex_mass(v: &Value, allowed: &BTreeSet<u32>) -> Result<MassFunction<u32>, HarnessError> {
    if v.as_str() == Some("uniform") {
        return Ok(MassFunction::uniform(allowed.iter().copied())?);
    }
    let entries = v.as_array().ok_or_else(|| {
        HarnessError::PlanError(
            "vertex mass must be \"uniform\" or an array of [vertex, mass] pairs".into(),
        )
    })?;
    let mut weights = BTreeMap::new();
    for e in entries {
        let t = e
            .as_array()
            .filter(|t| t.len() == 2)
            .ok_or_else(|| {
                HarnessError::PlanError("each vertex entry must be a [vertex, mass] pair".into())
            })?;
        let a = t[0]
            .as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .filter(|a| allowed.contains(a))
            .ok_or_else(|| {
                HarnessError::PlanError(format!("vertex {} is outside the domain", t[0]))
            })?;
        let w = parse_mass(&t[1])
            .map_err(|e| HarnessError::PlanError(format!("mass at vertex {a}: {e}")))?;
        if weights.insert(a, w).is_some() {
            return Err(HarnessError::PlanError(format!("duplicate vertex {a}")));
        }
    }
    Ok(MassFunction::from_map(weights)?)
}

/// Edge distribution on `[n]`: `"uniform_complete"` or explicit
/// `[a, b, mass]` triples.
fn edge_dist(v: &Value, n: u32) -> Result<EdgeDistribution, HarnessError> {
    if v.as_str() == Some("uniform_complete") {
        if n < 2 {
            return Err(HarnessError::PlanError(
                "a complete graph needs n ≥ 2".into(),
            ));
        }
        if u64::from(n) * u64::from(n - 1) / 2 > 1 << 20 {
            return Err(HarnessError::PlanError(format!(
                "the complete graph on {n} vertices has too many edges"
            )));
        }
        let edges = (1..=n)
            .flat_map(|a| (a + 1..=n).map(move |b| Edge::new(a, b)))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(EdgeDistribution::uniform(n, edges)?);
    }
    let entries = v.as_array().ok_or_else(|| {
        HarnessError::PlanError(
            "edge mass must be \"uniform_complete\" or an array of [a, b, mass] triples".into(),
        )
    })?;
    let mut weights = BTreeMap::new();
    for e in entries {
        let t = e
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| {
                HarnessError::PlanError("each edge entry must be an [a, b, mass] triple".into())
            })?;
        let a = t[0].as_u64().and_then(|x| u32::try_from(x).ok());
        let b = t[1].as_u64().and_then(|x| u32::try_from(x).ok());
        let (Some(a), Some(b)) = (a, b) else {
            return Err(HarnessError::PlanError(format!(
                "edge endpoints [{}, {}] must be small positive integers",
                t[0], t[1]
            )));
        };
        let edge = Edge::new(a, b)?;
        let w = parse_mass(&t[2])
            .map_err(|e| HarnessError::PlanError(format!("mass at edge ({a}, {b}): {e}")))?;
        if weights.insert(edge, w).is_some() {
            return Err(HarnessError::PlanError(format!(
                "duplicate edge ({a}, {b})"
            )));
        }
    }
    Ok(EdgeDistribution::new(n, MassFunction::from_map(weights)?)?)
}

/// Smallest `m ≥ 1` with `m^k ≥ bound`, exactly: a floating guess is
/// adjusted in both directions by exact rational comparison.
fn smallest_root_at_least(bound: &Rat, k: u32) -> Result<u64, HarnessError> {
    let guess = mass_to_f64(bound).powf(1.0 / f64::from(k)).ceil().max(1.0);
    if !guess.is_finite() || guess > 1e15 {
        return Err(HarnessError::ShapeError(
            "sample budget overflows the supported range".into(),
        ));
    }
    let mut m = guess as u64;
    while m > 1 && rat_int((m - 1) as i64).pow(k as i32) >= *bound {
        m -= 1;
    }
    while rat_int(m as i64).pow(k as i32) < *bound {
        m += 1;
    }
    Ok(m)
}

/// Exact minimum `p`-mass of a vertex set meeting every hyperedge, by
/// branch and bound over which vertex covers the first untouched edge.
fn min_cover_mass(edges: &[BTreeSet<u32>], p: &MassFunction<u32>) -> Rat {
    fn recurse(
        edges: &[BTreeSet<u32>],
        p: &MassFunction<u32>,
        chosen: &mut BTreeSet<u32>,
        acc: &Rat,
        best: &mut Rat,
    ) {
        if *acc >= *best {
            return;
        }
        let Some(open) = edges.iter().find(|e| e.is_disjoint(chosen)) else {
            *best = acc.clone();
            return;
        };
        for &v in open {
            let fresh = chosen.insert(v);
            let with = acc + p.get(&v);
            recurse(edges, p, chosen, &with, best);
            if fresh {
                chosen.remove(&v);
            }
        }
    }
    // the union of all hyperedges is itself a cover, so start strictly above
    // its mass and let the recursion find every genuine optimum
    let union: BTreeSet<u32> = edges.iter().flatten().copied().collect();
    let mut best: Rat = union.iter().map(|v| p.get(v)).sum::<Rat>() + rat_int(1);
    let mut chosen = BTreeSet::new();
    recurse(edges, p, &mut chosen, &Rat::zero(), &mut best);
    best
}

/// Incremental four-cycle detector over an accumulating edge set.
struct SquareDetector {
    adj: BTreeMap<u32, BTreeSet<u32>>,
}

impl SquareDetector {
    fn new() -> Self {
        SquareDetector {
            adj: BTreeMap::new(),
        }
    }

    /// Inserts an edge and reports whether it closes a four-cycle on four
    /// distinct vertices.  Re-inserting a known edge is a cheap no-op.
    fn insert_and_check(&mut self, e: Edge) -> bool {
        let (a, b) = (e.a(), e.b());
        if self.adj.get(&a).is_some_and(|s| s.contains(&b)) {
            return false;
        }
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
        let na = &self.adj[&a];
        let nb = &self.adj[&b];
        for &c in na.iter().filter(|&&c| c != b) {
            for &d in nb.iter().filter(|&&d| d != a && d != c) {
                // cycle a–b, b–d, d–c, c–a
                if self.adj.get(&c).is_some_and(|s| s.contains(&d)) {
                    return true;
                }
            }
        }
        false
    }
}

// ---------------------------------------------------------------------------
// lemma checks: one routine per statement
// ---------------------------------------------------------------------------

/// Grid collision check: when the mass left after deleting each row's
/// heaviest cell is at least `eps`, a budget of `64·⌈ln(2/δ)·√rows/eps⌉`
/// draws yields two samples in one row with different columns, with
/// probability at least `1 − delta`.
fn check_birthday_minus_max(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "birthday_minus_max";
    let obj = params_object(params)?;
    let rows = u32_field(obj, "rows")?;
    let cols = u32_field(obj, "cols")?;
    if rows == 0 || cols == 0 {
        return Err(HarnessError::PlanError(
            "the grid needs at least one row and one column".into(),
        ));
    }
    let eps = mass_field(obj, "eps")?;
    let delta = mass_field(obj, "delta")?;
    if !in_open_unit(&eps) || !in_open_unit(&delta) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs eps and delta strictly inside (0, 1)".into(),
        ));
    }
    let p = grid_mass(field(obj, "mass")?, rows, cols)?;
    // exact defect: sum over rows of (row mass − heaviest cell in the row)
    let mut row_sum: BTreeMap<u32, Rat> = BTreeMap::new();
    let mut row_max: BTreeMap<u32, Rat> = BTreeMap::new();
    for (&(a, _), w) in p.support() {
        *row_sum.entry(a).or_insert_with(Rat::zero) += w;
        let mx = row_max.entry(a).or_insert_with(Rat::zero);
        if *w > *mx {
            *mx = w.clone();
        }
    }
    let defect: Rat = row_sum.iter().map(|(a, s)| s - &row_max[a]).sum();
    if defect < eps {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "hypothesis fails: the row defect {} is below eps = {}",
                render_mass(&defect),
                render_mass(&eps)
            ),
        ));
    }
    let inner = mass_to_f64(&(rat_int(1) / &eps))
        * (2.0 / mass_to_f64(&delta)).ln()
        * f64::from(rows).sqrt();
    let m = 64 * ceil_to_u64(inner)?;
    let sampler = Sampler::new(&p);
    let successes: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.substream(t).rng();
                let mut first_col: BTreeMap<u32, u32> = BTreeMap::new();
                for _ in 0..m {
                    let Some((a, b)) = sampler.draw(&mut rng) else {
                        continue;
                    };
                    match first_col.get(&a) {
                        None => {
                            first_col.insert(a, b);
                        }
                        Some(&c) if c != b => return 1u64,
                        Some(_) => {}
                    }
                }
                0u64
            })
            .sum()
    });
    let bound = 1.0 - mass_to_f64(&delta);
    let notes = vec![format!("row defect = {}", render_mass(&defect))];
    Ok(LemmaReport::from_frequency(
        ID, trials, successes, bound, m, notes,
    ))
}

/// Grid coupon check: when the `n + 1` masses in `q` sum to exactly `1/k`,
/// spreading each `q_i` over `k` columns and drawing
/// `m ≥ 18k·(Σ_{i≤n} q_i^k)^{−1/k}` samples fills all `k` cells of one of
/// the first `n` rows, with probability at least `4/5`.
fn check_classical_birthday(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "classical_birthday";
    let obj = params_object(params)?;
    let k = u32_field(obj, "k")?;
    if k == 0 || k > 64 {
        return Err(HarnessError::PlanError(
            "k must lie between 1 and 64".into(),
        ));
    }
    let q_vals = field(obj, "q")?.as_array().ok_or_else(|| {
        HarnessError::PlanError("field \"q\" must be an array of masses".into())
    })?;
    if q_vals.len() < 2 {
        return Err(HarnessError::PlanError(
            "q needs at least two entries".into(),
        ));
    }
    let q: Vec<Rat> = q_vals
        .iter()
        .map(|v| parse_mass(v).map_err(|e| HarnessError::PlanError(format!("field \"q\": {e}"))))
        .collect::<Result<_, _>>()?;
    let nn = q.len() - 1; // rows 1..=nn are the ones that may complete
    let total: Rat = q.iter().sum();
    if total != rat(1, i64::from(k)) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "hypothesis needs the q entries to sum to exactly 1/{k}; they sum to {}",
                render_mass(&total)
            ),
        ));
    }
    let s: Rat = q[..nn].iter().map(|qi| qi.pow(k as i32)).sum();
    if s.is_zero() {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis fails: the first n entries of q are all zero".into(),
        ));
    }
    let m = smallest_root_at_least(&(rat_int(18 * i64::from(k)).pow(k as i32) / &s), k)?;
    let mut weights = BTreeMap::new();
    for (i, qi) in q.iter().enumerate() {
        if qi.is_zero() {
            continue;
        }
        for j in 1..=k {
            weights.insert((i as u32 + 1, j), qi.clone());
        }
    }
    let grid = MassFunction::from_map(weights)?;
    let sampler = Sampler::new(&grid);
    let successes: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.substream(t).rng();
                let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();
                let mut remaining: BTreeMap<u32, u32> = BTreeMap::new();
                for _ in 0..m {
                    let Some((i, j)) = sampler.draw(&mut rng) else {
                        continue;
                    };
                    if i as usize > nn {
                        continue; // the overflow row never counts
                    }
                    if !seen.insert((i, j)) {
                        continue;
                    }
                    let slot = remaining.entry(i).or_insert(k);
                    *slot -= 1;
                    if *slot == 0 {
                        return 1u64;
                    }
                }
                0u64
            })
            .sum()
    });
    let notes = vec![format!("k-th power sum = {}", render_mass(&s))];
    Ok(LemmaReport::from_frequency(
        ID, trials, successes, 0.8, m, notes,
    ))
}

/// Hypergraph coupon check: when every vertex cover of a `k`-uniform
/// hypergraph carries mass at least `eps`, drawing
/// `m ≥ 18k²·|V|^{(k−1)/k}/eps` vertices covers some hyperedge entirely,
/// with probability at least `4/5`.
fn check_hypergraph_birthday(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "hypergraph_birthday";
    let obj = params_object(params)?;
    let k = u32_field(obj, "k")?;
    if k == 0 || k > 64 {
        return Err(HarnessError::PlanError(
            "k must lie between 1 and 64".into(),
        ));
    }
    let edges_v = field(obj, "edges")?.as_array().ok_or_else(|| {
        HarnessError::PlanError("field \"edges\" must be an array of vertex lists".into())
    })?;
    if edges_v.is_empty() || edges_v.len() > 32 {
        return Err(HarnessError::PlanError(
            "between 1 and 32 hyperedges are supported".into(),
        ));
    }
    let edges: Vec<BTreeSet<u32>> = edges_v
        .iter()
        .map(|e| {
            e.as_array()
                .ok_or_else(|| {
                    HarnessError::PlanError("each hyperedge must be an array of vertices".into())
                })?
                .iter()
                .map(|x| {
                    x.as_u64().and_then(|v| u32::try_from(v).ok()).ok_or_else(|| {
                        HarnessError::PlanError(
                            "hyperedge vertices must be small positive integers".into(),
                        )
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let g = Hypergraph::new(k, edges)?;
    let p = vertex_mass(field(obj, "p")?, g.vertices())?;
    let eps = mass_field(obj, "eps")?;
    if !in_open_unit(&eps) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs eps strictly inside (0, 1)".into(),
        ));
    }
    let cover = min_cover_mass(g.edges(), &p);
    if cover < eps {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "hypothesis fails: a vertex cover has mass {} below eps = {}",
                render_mass(&cover),
                render_mass(&eps)
            ),
        ));
    }
    let nv = g.vertices().len() as i64;
    let bound_rat =
        (rat_int(18 * i64::from(k) * i64::from(k)) / &eps).pow(k as i32) * rat_int(nv).pow(k as i32 - 1);
    let m = smallest_root_at_least(&bound_rat, k)?;
    let mut vertex_edges: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (ei, e) in g.edges().iter().enumerate() {
        for &v in e {
            vertex_edges.entry(v).or_default().push(ei);
        }
    }
    let sizes: Vec<u32> = g.edges().iter().map(|e| e.len() as u32).collect();
    let sampler = Sampler::new(&p);
    let successes: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.substream(t).rng();
                let mut seen: BTreeSet<u32> = BTreeSet::new();
                let mut remaining = sizes.clone();
                for _ in 0..m {
                    let Some(v) = sampler.draw(&mut rng) else {
                        continue;
                    };
                    if !seen.insert(v) {
                        continue;
                    }
                    if let Some(list) = vertex_edges.get(&v) {
                        for &ei in list {
                            remaining[ei] -= 1;
                            if remaining[ei] == 0 {
                                return 1u64;
                            }
                        }
                    }
                }
                0u64
            })
            .sum()
    });
    let notes = vec![format!(
        "minimum vertex-cover mass = {}; success bound taken at 4/5",
        render_mass(&cover)
    )];
    Ok(LemmaReport::from_frequency(
        ID, trials, successes, 0.8, m, notes,
    ))
}

/// Dilute square check: when the two-hop descent mass of an edge
/// distribution is at least `eps`, the dilute budget of
/// `1000·⌈n·ln(12n)/eps⌉` edge samples contains a four-cycle, with
/// probability at least `2/3`.
fn check_dilute_case(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "dilute_case";
    let obj = params_object(params)?;
    let n = u32_field(obj, "n")?;
    if n == 0 {
        return Err(HarnessError::PlanError("n must be at least 1".into()));
    }
    let p = edge_dist(field(obj, "p")?, n)?;
    let eps = mass_field(obj, "eps")?;
    if eps <= Rat::zero() || eps > rat_int(1) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs eps inside (0, 1]".into(),
        ));
    }
    let tables = hop_tables(&p, None)?;
    let hopd = tables.hopd_total();
    if hopd < eps {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "hypothesis fails: the two-hop descent mass {} is below eps = {}",
                render_mass(&hopd),
                render_mass(&eps)
            ),
        ));
    }
    let m = dilute_budget(n, mass_to_f64(&eps))?;
    let sampler = Sampler::new(p.mass());
    let successes: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.substream(t).rng();
                let mut detector = SquareDetector::new();
                for _ in 0..m {
                    let Some(e) = sampler.draw(&mut rng) else {
                        continue;
                    };
                    if detector.insert_and_check(e) {
                        return 1u64;
                    }
                }
                0u64
            })
            .sum()
    });
    let notes = vec![format!("two-hop descent mass = {}", render_mass(&hopd))];
    Ok(LemmaReport::from_frequency(
        ID,
        trials,
        successes,
        2.0 / 3.0,
        m,
        notes,
    ))
}

/// Concentrated square check: when `p` admits a square witness at level
/// `eps`, drawing `m ≥ 72·(Σ q⁴)^{−1/4}` edges from `p` collects all four
/// edges of some witnessed square, with probability at least `4/5`.
fn check_concentrated_case_prelim(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "concentrated_case_prelim";
    let obj = params_object(params)?;
    let n = u32_field(obj, "n")?;
    if n == 0 {
        return Err(HarnessError::PlanError("n must be at least 1".into()));
    }
    let p = edge_dist(field(obj, "p")?, n)?;
    let eps = mass_field(obj, "eps")?;
    if !in_open_unit(&eps) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs eps strictly inside (0, 1)".into(),
        ));
    }
    let w = match square_witness(&p, &eps) {
        Ok(w) => w,
        Err(WitnessError::NotFarEnough(r)) => {
            return Ok(LemmaReport::skipped(
                ID,
                trials,
                format!(
                    "hypothesis fails: no square witness at eps = {} (best fractional matching {}, required {})",
                    render_mass(&eps),
                    render_mass(&r.achieved),
                    render_mass(&r.required)
                ),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    let m = concentrated_budget(&w)?;
    let squares: Vec<&BTreeSet<Edge>> = w.weights().keys().collect();
    let mut edge_squares: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (si, sq) in squares.iter().enumerate() {
        for &e in sq.iter() {
            edge_squares.entry(e).or_default().push(si);
        }
    }
    let sampler = Sampler::new(p.mass());
    let successes: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.substream(t).rng();
                let mut seen: BTreeSet<Edge> = BTreeSet::new();
                let mut remaining: Vec<u32> = vec![4; squares.len()];
                for _ in 0..m {
                    let Some(e) = sampler.draw(&mut rng) else {
                        continue;
                    };
                    if !seen.insert(e) {
                        continue;
                    }
                    if let Some(list) = edge_squares.get(&e) {
                        for &si in list {
                            remaining[si] -= 1;
                            if remaining[si] == 0 {
                                return 1u64;
                            }
                        }
                    }
                }
                0u64
            })
            .sum()
    });
    let notes = vec![format!(
        "witness squares = {}; fourth-power sum = {}",
        w.support_len(),
        render_mass(&w.fourth_power_sum())
    )];
    Ok(LemmaReport::from_frequency(
        ID, trials, successes, 0.8, m, notes,
    ))
}

/// Two-round comparison check: after pruning atoms below `eps/n`, the
/// support intersection of two independent rounds of `⌈C·n^{1−β}⌉` and
/// `⌈C·n^{1−γ}⌉` draws stochastically dominates one round of
/// `⌈C·n^{1−β−γ}⌉` draws up to an additive `delta`, provided
/// `β + γ ≤ 1` and `γ·δ·eps·C ≥ 16`.  Checked on upward-closed events
/// `{|support| ≥ s}` at quartile thresholds: each paired-round tail
/// frequency must stay within `delta` of the single-round one.
fn check_tree_bipartite_birthday_paradox(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "tree_bipartite_birthday_paradox";
    let obj = params_object(params)?;
    let n = u32_field(obj, "n")?;
    if n == 0 {
        return Err(HarnessError::PlanError("n must be at least 1".into()));
    }
    let beta = mass_field(obj, "beta")?;
    let gamma = mass_field(obj, "gamma")?;
    let delta = mass_field(obj, "delta")?;
    let eps = mass_field(obj, "eps")?;
    let c = mass_field(obj, "C")?;
    if !in_open_unit(&beta) || !in_open_unit(&gamma) || !in_open_unit(&delta) || !in_open_unit(&eps)
    {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs beta, gamma, delta, eps strictly inside (0, 1)".into(),
        ));
    }
    if &beta + &gamma > rat_int(1) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs beta + gamma ≤ 1".into(),
        ));
    }
    if c <= Rat::zero() {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs C > 0".into(),
        ));
    }
    let product = &gamma * &delta * &eps * &c;
    if product < rat_int(16) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "hypothesis fails: gamma·delta·eps·C = {} is below 16",
                render_mass(&product)
            ),
        ));
    }
    let f = vertex_mass(field(obj, "f")?, &(1..=n).collect())?;
    // prune to the atoms of mass at least eps/n; the comparison is stated
    // for the pruned mass
    let floor = &eps / rat_int(i64::from(n));
    let g_map: BTreeMap<u32, Rat> = f
        .support()
        .filter(|(_, w)| **w >= floor)
        .map(|(a, w)| (*a, w.clone()))
        .collect();
    if g_map.is_empty() {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "pruning leaves an empty support: every atom is below eps/n".into(),
        ));
    }
    let g = MassFunction::from_map(g_map)?;
    let cf = mass_to_f64(&c);
    let nf = f64::from(n);
    let m1 = ceil_to_u64(cf * nf.powf(1.0 - mass_to_f64(&beta)))?;
    let m2 = ceil_to_u64(cf * nf.powf(1.0 - mass_to_f64(&gamma)))?;
    let m3 = ceil_to_u64(cf * nf.powf(1.0 - mass_to_f64(&beta) - mass_to_f64(&gamma)))?;
    let results: Vec<(u64, u64)> = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let ts = seed.substream(t);
                let w1 = process_s_indicator(&g, m1, ts.substream(0));
                let w2 = process_s_indicator(&g, m2, ts.substream(1));
                let wp = and_indicator(&w1, &w2);
                let w3 = process_s_indicator(&g, m3, ts.substream(2));
                (wp.len() as u64, w3.len() as u64)
            })
            .collect()
    });
    let cap = (g.len() as u64).min(m3);
    let mut thresholds: Vec<u64> = [(1u64, 4u64), (1, 2), (3, 4), (9, 10)]
        .iter()
        .map(|&(num, den)| (cap * num).div_ceil(den))
        .collect();
    thresholds.dedup(); // quantiles of one cap are already sorted
    let trials_f = trials as f64;
    let mut statistic = f64::INFINITY;
    let mut notes = vec![format!(
        "m1 = {m1}, m2 = {m2}, m3 = {m3}, pruned support = {}",
        g.len()
    )];
    for &s in &thresholds {
        let fp = results.iter().filter(|r| r.0 >= s).count() as f64 / trials_f;
        let f3 = results.iter().filter(|r| r.1 >= s).count() as f64 / trials_f;
        statistic = statistic.min(fp - f3);
        notes.push(format!("s = {s}: paired {fp:.4}, single {f3:.4}"));
    }
    let bound = -mass_to_f64(&delta);
    let std_error = (0.5 / trials_f).sqrt();
    Ok(LemmaReport::from_statistic(
        ID, trials, statistic, bound, std_error, m3, notes,
    ))
}

/// Occupancy control check: when every atom of `f` carries mass at least
/// `eps/n` and `C ≥ 1`, a round of `⌈C·n^{1−γ}⌉` draws sends no atom `a`
/// above `(2n/(γ·eps))·f(a)` samples, with probability at least `1 − delta`.
fn check_sample_number_control(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "sample_number_control";
    let obj = params_object(params)?;
    let n = u32_field(obj, "n")?;
    if n == 0 {
        return Err(HarnessError::PlanError("n must be at least 1".into()));
    }
    let gamma = mass_field(obj, "gamma")?;
    let eps = mass_field(obj, "eps")?;
    let delta = mass_field(obj, "delta")?;
    let c = mass_field(obj, "C")?;
    if !in_open_unit(&gamma) || !in_open_unit(&eps) || !in_open_unit(&delta) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs gamma, eps, delta strictly inside (0, 1)".into(),
        ));
    }
    if c < rat_int(1) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs C ≥ 1".into(),
        ));
    }
    let f = vertex_mass(field(obj, "f")?, &(1..=n).collect())?;
    let floor = &eps / rat_int(i64::from(n));
    if let Some((a, w)) = f.support().find(|(_, w)| **w < floor) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "hypothesis fails: atom {a} has mass {} below eps/n = {}",
                render_mass(w),
                render_mass(&floor)
            ),
        ));
    }
    let m = ceil_to_u64(mass_to_f64(&c) * f64::from(n).powf(1.0 - mass_to_f64(&gamma)))?;
    let factor = rat_int(2 * i64::from(n)) / (&gamma * &eps);
    let caps: BTreeMap<u32, Rat> = f.support().map(|(a, w)| (*a, &factor * w)).collect();
    let successes: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let w = process_s(&f, m, seed.substream(t));
                let ok = w.entries().all(|(a, cnt)| rat_int(cnt as i64) <= caps[a]);
                u64::from(ok)
            })
            .sum()
    });
    let bound = 1.0 - mass_to_f64(&delta);
    let notes = vec![format!("occupancy factor = {}", render_mass(&factor))];
    Ok(LemmaReport::from_frequency(
        ID, trials, successes, bound, m, notes,
    ))
}

/// Coloring-witness check: when the generated far-side instance of a
/// homomorphism property is at exact distance at least `eps`, a canonical
/// run on `⌈(2 + N·ln k)/eps⌉` samples rejects, with probability at least
/// `2/3`.
fn check_hom_sample_bound(
    params: &Value,
    trials: u64,
    seed: RngSeed,
) -> Result<LemmaReport, HarnessError> {
    const ID: &str = "hom_sample_bound";
    let obj = params_object(params)?;
    let family = family_from_json(field(obj, "family")?)?;
    let n = u32_field(obj, "n")?;
    if n == 0 {
        return Err(HarnessError::PlanError("n must be at least 1".into()));
    }
    let eps = mass_field(obj, "eps")?;
    if !in_open_unit(&eps) {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            "hypothesis needs eps strictly inside (0, 1)".into(),
        ));
    }
    let gen_seed = seed_field(obj, "gen_seed")?;
    let instance = generate_instance(&family, n, Side::No, gen_seed)?;
    let Property::HomToH(target) = &instance.property else {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "family {} does not test a homomorphism property",
                family.name()
            ),
        ));
    };
    let distance = exact_distance(
        &instance.positives,
        instance.mu.mass(),
        &instance.property,
        instance.n,
    )?;
    if distance < eps {
        return Ok(LemmaReport::skipped(
            ID,
            trials,
            format!(
                "hypothesis fails: the exact distance {} is below eps = {}",
                render_mass(&distance),
                render_mass(&eps)
            ),
        ));
    }
    let colors = target.k();
    let m = ceil_to_u64(
        (2.0 + f64::from(instance.n) * f64::from(colors).ln()) / mass_to_f64(&eps),
    )?;
    let successes: u64 = pool().install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| -> Result<u64, HarnessError> {
                let samples = instance.draw_labeled(m, seed.substream(t));
                let verdict = run_property_tester(&instance.property, &samples)?;
                Ok(u64::from(verdict.decision == Decision::Reject))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })?;
    let notes = vec![format!(
        "family = {}, vertices = {}, colors = {colors}, exact distance = {}",
        family.name(),
        instance.n,
        render_mass(&distance)
    )];
    Ok(LemmaReport::from_frequency(
        ID,
        trials,
        successes,
        2.0 / 3.0,
        m,
        notes,
    ))
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::Verification;
    use crate::testers::PatternGraph;

    fn seed(master: u64, stream: u64) -> RngSeed {
        RngSeed::new(master, stream)
    }

    /// A single positive edge carrying all the mass: one draw already
    /// exposes a violating copy of the single-edge pattern.
    fn point_instance() -> TestInstance {
        let e = Edge::new(1, 2).unwrap();
        TestInstance {
            n: 2,
            positives: [e].into_iter().collect(),
            mu: EdgeDistribution::uniform(2, [e]).unwrap(),
            side: Side::No,
            certified_distance: rat_int(1),
            property: Property::HFree(PatternGraph::single_edge()),
            family: "point".into(),
            generator_params: BTreeMap::new(),
            seed: seed(7, 7),
            permutations: Vec::new(),
            verified: Verification::Structural,
        }
    }

    /// Same support, but nothing is labeled positive: the tester can never
    /// assemble a violation.
    fn silent_instance() -> TestInstance {
        let mut inst = point_instance();
        inst.positives = BTreeSet::new();
        inst.side = Side::Yes;
        inst.certified_distance = rat_int(0);
        inst
    }

    #[test]
    fn estimate_is_exactly_zero_on_the_near_side() {
        let family = Family::Bipartite { k: 3 };
        let inst = generate_instance(&family, 1, Side::Yes, seed(3, 5)).unwrap();
        let est = estimate_rejection(&inst, &inst.property, 32, 40, seed(1, 1)).unwrap();
        assert_eq!(est.rejections, 0);
        assert_eq!(est.rate, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn estimate_accepts_on_empty_samples() {
        let inst = point_instance();
        let est = estimate_rejection(&inst, &inst.property, 0, 35, seed(2, 2)).unwrap();
        assert_eq!(est.rejections, 0);
        assert_eq!(est.rate, 0.0);
    }

    #[test]
    fn estimate_needs_trials() {
        let inst = point_instance();
        let err = estimate_rejection(&inst, &inst.property, 4, 0, seed(2, 2)).unwrap_err();
        assert!(matches!(err, HarnessError::ShapeError(_)));
    }

    #[test]
    fn estimate_matches_a_serial_replay() {
        let inst = generate_instance(&Family::Triangle, 2, Side::No, seed(3, 1)).unwrap();
        let trials = 25u64;
        let m = 6u64;
        let root = seed(9, 4);
        let est = estimate_rejection(&inst, &inst.property, m, trials, root).unwrap();
        let mut serial = 0u64;
        for t in 0..trials {
            let samples = inst.draw_labeled(m, root.substream(t));
            let verdict = run_property_tester(&inst.property, &samples).unwrap();
            serial += u64::from(verdict.decision == Decision::Reject);
        }
        assert_eq!(est.rejections, serial);
    }

    #[test]
    fn threshold_resolves_a_unit_threshold() {
        let inst = point_instance();
        let out =
            threshold_search_instance(&inst, &inst.property, 0.9, 50, seed(5, 5), 64).unwrap();
        assert_eq!(out, ThresholdOutcome::Resolved(1));
    }

    #[test]
    fn threshold_reports_an_exhausted_cap() {
        let inst = silent_instance();
        let out =
            threshold_search_instance(&inst, &inst.property, 0.5, 30, seed(5, 6), 8).unwrap();
        assert_eq!(out, ThresholdOutcome::Unresolved(8));
    }

    #[test]
    fn threshold_replays_deterministically() {
        let family = Family::Bipartite { k: 3 };
        let a = threshold_search(&family, 1, 2.0 / 3.0, 40, seed(8, 8), 1024).unwrap();
        let b = threshold_search(&family, 1, 2.0 / 3.0, 40, seed(8, 8), 1024).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a, ThresholdOutcome::Resolved(m) if m >= 1));
    }

    #[test]
    fn threshold_rejects_degenerate_targets() {
        let inst = point_instance();
        for target in [0.0, 1.0, -0.5, 1.5] {
            let err = threshold_search_instance(&inst, &inst.property, target, 30, seed(1, 1), 8)
                .unwrap_err();
            assert!(matches!(err, HarnessError::ShapeError(_)));
        }
    }

    #[test]
    fn fit_recovers_a_linear_law() {
        let points = [(4, 8), (6, 12), (8, 16), (10, 20), (12, 24)];
        let fit = scaling_fit(&points, seed(11, 2)).unwrap();
        assert!((fit.slope - 1.0).abs() <= 0.01, "slope {}", fit.slope);
        assert!(fit.ci_low <= fit.slope && fit.slope <= fit.ci_high);
        assert_eq!(fit.points, 5);
    }

    #[test]
    fn fit_recovers_a_four_thirds_law() {
        let points = [(8, 16), (27, 81), (64, 256), (125, 625)];
        let fit = scaling_fit(&points, seed(11, 3)).unwrap();
        assert!(
            (fit.slope - 4.0 / 3.0).abs() <= 0.01,
            "slope {}",
            fit.slope
        );
        assert!(fit.ci_low <= fit.slope && fit.slope <= fit.ci_high);
    }

    #[test]
    fn fit_rejects_degenerate_inputs() {
        assert!(scaling_fit(&[(4, 8), (6, 12)], seed(1, 1)).is_err());
        assert!(scaling_fit(&[(4, 8), (4, 12), (4, 16)], seed(1, 1)).is_err());
        assert!(scaling_fit(&[(4, 0), (6, 12), (8, 16)], seed(1, 1)).is_err());
    }

    #[test]
    fn plans_round_trip_through_json() {
        let threshold_plan = ExperimentPlan {
            family: Family::Bipartite { k: 3 },
            n_grid: vec![4, 6, 8],
            sides: vec![Side::No],
            schedule: MSchedule::Threshold {
                target: 2.0 / 3.0,
                m_cap: 4096,
            },
            trials: 100,
            seed: seed(21, 9),
            fit: true,
        };
        let explicit_plan = ExperimentPlan {
            family: Family::Triangle,
            n_grid: vec![4, 5],
            sides: vec![Side::Yes, Side::No],
            schedule: MSchedule::Explicit(vec![4, 8]),
            trials: 30,
            seed: seed(2, 2),
            fit: false,
        };
        for plan in [threshold_plan, explicit_plan] {
            let back = ExperimentPlan::from_json(&plan.to_json()).unwrap();
            assert_eq!(back, plan);
        }
    }

    #[test]
    fn plan_validation_rejects_bad_plans() {
        let base = ExperimentPlan {
            family: Family::Triangle,
            n_grid: vec![4],
            sides: vec![Side::No],
            schedule: MSchedule::Explicit(vec![4]),
            trials: 30,
            seed: seed(1, 1),
            fit: false,
        };
        let mut too_few_trials = base.clone();
        too_few_trials.trials = 10;
        let mut empty_grid = base.clone();
        empty_grid.n_grid = Vec::new();
        let mut duplicate_sides = base.clone();
        duplicate_sides.sides = vec![Side::No, Side::No];
        let mut wrong_side_for_search = base.clone();
        wrong_side_for_search.sides = vec![Side::Yes];
        wrong_side_for_search.schedule = MSchedule::Threshold {
            target: 0.5,
            m_cap: 64,
        };
        let mut fit_without_search = base.clone();
        fit_without_search.fit = true;
        for plan in [
            too_few_trials,
            empty_grid,
            duplicate_sides,
            wrong_side_for_search,
            fit_without_search,
        ] {
            assert!(matches!(
                plan.validate().unwrap_err(),
                HarnessError::PlanError(_)
            ));
        }
    }

    #[test]
    fn experiment_rows_follow_the_plan() {
        let plan = ExperimentPlan {
            family: Family::Triangle,
            n_grid: vec![4, 5],
            sides: vec![Side::No],
            schedule: MSchedule::Explicit(vec![4, 8]),
            trials: 30,
            seed: seed(9, 3),
            fit: false,
        };
        let report = run_experiment(&plan).unwrap();
        assert_eq!(report.rows.len(), 4);
        let cells: Vec<(u32, u64)> = report.rows.iter().map(|r| (r.n, r.m)).collect();
        assert_eq!(cells, vec![(4, 4), (4, 8), (5, 4), (5, 8)]);
        assert!(report.rows.iter().all(|r| r.rejections <= r.trials));
        assert!(report.rows.iter().all(|r| r.family == "triangle"));
        let csv = report.to_csv();
        assert!(csv.starts_with(
            "schema=1\nfamily,n,side,m,trials,rejections,rejection_rate,std_error\n"
        ));
        assert_eq!(csv.lines().count(), 2 + 4);
    }

    #[test]
    fn experiment_replays_byte_identically() {
        let plan = ExperimentPlan {
            family: Family::Triangle,
            n_grid: vec![4, 5],
            sides: vec![Side::Yes, Side::No],
            schedule: MSchedule::Explicit(vec![4, 8]),
            trials: 30,
            seed: seed(12, 34),
            fit: false,
        };
        let first = run_experiment(&plan).unwrap().to_csv();
        let second = run_experiment(&plan).unwrap().to_csv();
        assert_eq!(first, second);
    }

    #[test]
    fn experiment_threshold_schedule_fits_a_slope() {
        let plan = ExperimentPlan {
            family: Family::Bipartite { k: 3 },
            n_grid: vec![4, 6, 8],
            sides: vec![Side::No],
            schedule: MSchedule::Threshold {
                target: 2.0 / 3.0,
                m_cap: 1 << 14,
            },
            trials: 30,
            seed: seed(31, 7),
            fit: true,
        };
        let report = run_experiment(&plan).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows.iter().all(|r| r.resolved));
        assert!(report.rows.iter().all(|r| r.rate >= 2.0 / 3.0));
        let fit = report.fit.expect("all cells resolved");
        assert_eq!(fit.points, 3);
        assert!(fit.ci_low <= fit.slope && fit.slope <= fit.ci_high);
        let csv = report.to_csv();
        assert!(csv.contains("# fit: slope="));
        let replay = run_experiment(&plan).unwrap().to_csv();
        assert_eq!(csv, replay);
    }

    #[test]
    fn lemma_suite_passes_at_reduced_trials() {
        let reports = run_lemma_suite(40, seed(41, 7)).unwrap();
        assert_eq!(reports.len(), LEMMA_IDS.len());
        for r in &reports {
            assert_eq!(
                r.outcome,
                LemmaOutcome::Passed,
                "unexpected outcome: {}",
                r.summary_line()
            );
        }
    }

    #[test]
    fn default_parameters_pin_the_stated_budgets() {
        let expected: BTreeMap<&str, u64> = [
            ("birthday_minus_max", 768),
            ("classical_birthday", 368),
            ("hypergraph_birthday", 1605),
            ("dilute_case", 120_000),
            ("concentrated_case_prelim", 288),
            ("tree_bipartite_birthday_paradox", 128),
            ("sample_number_control", 10),
            ("hom_sample_bound", 19),
        ]
        .into_iter()
        .collect();
        for (i, id) in LEMMA_IDS.iter().enumerate() {
            let params = default_lemma_params(id).unwrap();
            let report = lemma_check(id, &params, 1, seed(77, i as u64)).unwrap();
            assert_eq!(report.m, expected[id], "budget for {id}");
            assert_eq!(
                report.outcome,
                LemmaOutcome::Passed,
                "one-trial check cannot fail its loose threshold: {}",
                report.summary_line()
            );
        }
        let tree = lemma_check(
            "tree_bipartite_birthday_paradox",
            &default_lemma_params("tree_bipartite_birthday_paradox").unwrap(),
            1,
            seed(77, 5),
        )
        .unwrap();
        assert!(tree.notes[0].contains("m1 = 1024, m2 = 1024, m3 = 128"));
    }

    #[test]
    fn lemma_checks_skip_when_hypotheses_fail() {
        let cases: Vec<(&str, Value)> = vec![
            (
                // a single column has zero defect
                "birthday_minus_max",
                json!({"rows": 6, "cols": 1, "mass": "uniform", "eps": "1/2", "delta": "1/2"}),
            ),
            (
                // masses sum to 2/3, not 1/2
                "classical_birthday",
                json!({"k": 2, "q": ["1/3", "1/3"]}),
            ),
            (
                // the cheapest cover has mass 1/3 < 99/100
                "hypergraph_birthday",
                json!({"k": 3, "edges": [[1, 2, 3], [4, 5, 6]], "p": "uniform", "eps": "99/100"}),
            ),
            (
                // a path has no second middle vertex for any pair
                "dilute_case",
                json!({"n": 3, "p": [[1, 2, "1/2"], [2, 3, "1/2"]], "eps": "1/2"}),
            ),
            (
                // a triangle contains no square at all
                "concentrated_case_prelim",
                json!({"n": 3, "p": [[1, 2, "1/3"], [2, 3, "1/3"], [1, 3, "1/3"]], "eps": "1/4"}),
            ),
            (
                // gamma·delta·eps·C = 1 < 16
                "tree_bipartite_birthday_paradox",
                json!({"n": 64, "f": "uniform", "beta": "1/2", "gamma": "1/2",
                       "delta": "1/2", "eps": "1/2", "C": 8}),
            ),
            (
                // atom 1 sits below eps/n = 1/8
                "sample_number_control",
                json!({"n": 4, "f": [[1, "1/100"], [2, "99/400"], [3, "99/400"], [4, "99/200"]],
                       "gamma": "1/2", "eps": "1/2", "delta": "1/2", "C": 1}),
            ),
            (
                // triangle instances test freeness, not colorability
                "hom_sample_bound",
                json!({"family": "triangle", "n": 1, "eps": "1/3",
                       "gen_seed": {"master": 11, "stream": 0}}),
            ),
        ];
        for (id, params) in cases {
            let report = lemma_check(id, &params, 5, seed(13, 1)).unwrap();
            assert!(
                matches!(report.outcome, LemmaOutcome::SkippedWithReason(_)),
                "{id} should skip: {}",
                report.summary_line()
            );
        }
    }

    #[test]
    fn lemma_checks_reject_malformed_parameters() {
        let err = lemma_check("no_such_lemma", &json!({}), 5, seed(1, 1)).unwrap_err();
        assert!(matches!(err, HarnessError::PlanError(_)));
        let err = lemma_check(
            "birthday_minus_max",
            &json!({"cols": 4, "mass": "uniform", "eps": "1/2", "delta": "1/2"}),
            5,
            seed(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::PlanError(_)));
        let err = lemma_check("classical_birthday", &json!({"k": 2, "q": "1/2"}), 5, seed(1, 1))
            .unwrap_err();
        assert!(matches!(err, HarnessError::PlanError(_)));
        let err = lemma_check(
            "birthday_minus_max",
            &default_lemma_params("birthday_minus_max").unwrap(),
            0,
            seed(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::ShapeError(_)));
    }

    #[test]
    fn every_registered_lemma_has_default_parameters() {
        for id in LEMMA_IDS {
            assert!(default_lemma_params(id).is_ok(), "missing defaults for {id}");
        }
    }

    #[test]
    fn cover_mass_is_exact() {
        let edges = vec![
            [1u32, 2, 3].into_iter().collect::<BTreeSet<_>>(),
            [4, 5, 6].into_iter().collect(),
        ];
        let uniform = MassFunction::uniform(1..=6).unwrap();
        assert_eq!(min_cover_mass(&edges, &uniform), rat(1, 3));
        // mass only on the first triangle: the second edge is covered free
        let lopsided = MassFunction::uniform(1..=3).unwrap();
        assert_eq!(min_cover_mass(&edges, &lopsided), rat(1, 3));
        let single = vec![[1u32, 2, 3].into_iter().collect::<BTreeSet<_>>()];
        assert_eq!(min_cover_mass(&single, &uniform), rat(1, 6));
        assert_eq!(min_cover_mass(&[], &uniform), rat_int(0));
    }

    #[test]
    fn square_detector_fires_only_on_four_cycles() {
        let e = |a, b| Edge::new(a, b).unwrap();
        let mut d = SquareDetector::new();
        assert!(!d.insert_and_check(e(1, 2)));
        assert!(!d.insert_and_check(e(2, 3)));
        assert!(!d.insert_and_check(e(3, 4)));
        assert!(!d.insert_and_check(e(3, 4))); // duplicate is a no-op
        assert!(d.insert_and_check(e(1, 4)));
        let mut t = SquareDetector::new();
        assert!(!t.insert_and_check(e(1, 2)));
        assert!(!t.insert_and_check(e(2, 3)));
        assert!(!t.insert_and_check(e(1, 3))); // a triangle is not a square
    }

    #[test]
    fn integer_roots_are_exact() {
        assert_eq!(smallest_root_at_least(&rat_int(135_000), 2).unwrap(), 368);
        assert_eq!(smallest_root_at_least(&rat_int(8), 3).unwrap(), 2);
        assert_eq!(smallest_root_at_least(&rat(1, 2), 5).unwrap(), 1);
        // the floating guess may land just above the exact root
        assert_eq!(
            smallest_root_at_least(&rat_int(1_000_000), 3).unwrap(),
            100
        );
    }
}
