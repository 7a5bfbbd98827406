//! Level-set percolation crossings, Monte Carlo exponent estimation over a
//! size ladder, and the algebra relating the fitted annulus exponent to the
//! (γ, d_γ) pair.

use crate::gff::{sample_dgff, FieldSample};
use crate::lattice::{annulus, AnnulusSpec, DomainMask, Vertex};
use crate::metric::{dlfpp_weights, median_of, vertex_weighted_shortest_path, DistanceResult};
use crate::rng::derive_seed;
use crate::{Error, Result, SQRT_HALF_PI};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;

/// A level-set crossing query: the sub-threshold graph {v : η(v) ≤ t} is
/// searched for a path from the inner square to the outer square boundary.
#[derive(Debug, Clone)]
pub struct LevelSetQuery {
    pub threshold: f64,
    /// Recorded when the threshold was derived as (ln n)^χ.
    pub chi: Option<f64>,
    pub annulus: AnnulusSpec,
}

impl LevelSetQuery {
    pub fn with_threshold(annulus: AnnulusSpec, threshold: f64) -> Self {
        Self {
            threshold,
            chi: None,
            annulus,
        }
    }

    /// Threshold (ln n)^χ with χ in (1/2, 1).
    pub fn from_chi(n: u32, chi: f64) -> Result<Self> {
        if !(chi > 0.5 && chi < 1.0) {
            return Err(Error::InvalidParam(format!(
                "χ = {chi} outside the open interval (1/2, 1)"
            )));
        }
        Ok(Self {
            threshold: (n as f64).ln().powf(chi),
            chi: Some(chi),
            annulus: annulus(n)?,
        })
    }
}

/// Result of a level-set crossing search. `hop_count` is the number of
/// vertices on the path (minimal over level-set paths by the breadth-first
/// guarantee); 0 when no crossing exists.
#[derive(Debug, Clone)]
pub struct CrossingResult {
    pub found: bool,
    pub path: Option<Vec<Vertex>>,
    pub hop_count: usize,
}

/// Breadth-first search on {v : η(v) ≤ t} from every sub-threshold vertex of
/// the inner square, stopping at the first sub-threshold vertex of the outer
/// square boundary. Absence of a crossing is a result, not an error.
pub fn levelset_crossing(field: &FieldSample, q: &LevelSetQuery) -> CrossingResult {
    let n = field.scale();
    debug_assert_eq!(n, q.annulus.n);
    let side = n as usize + 1;
    let t = q.threshold;
    let admissible = |v: Vertex| field.value(v) <= t;

    let mut parent = vec![u32::MAX; side * side];
    let mut seen = vec![false; side * side];
    let mut queue = VecDeque::new();
    for v in q.annulus.s1.iter() {
        if admissible(v) {
            let i = v.index(n);
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let x = (i % side) as u32;
        let y = (i / side) as u32;
        let v = Vertex::new(x, y);
        if q.annulus.s2_boundary.contains(v) {
            let mut path = Vec::new();
            let mut cur = i;
            loop {
                path.push(Vertex::new((cur % side) as u32, (cur / side) as u32));
                let p = parent[cur];
                if p == u32::MAX {
                    break;
                }
                cur = p as usize;
            }
            path.reverse();
            return CrossingResult {
                found: true,
                hop_count: path.len(),
                path: Some(path),
            };
        }
        for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx > n as i64 || ny > n as i64 {
                continue;
            }
            let w = Vertex::new(nx as u32, ny as u32);
            let j = w.index(n);
            if !seen[j] && admissible(w) {
                seen[j] = true;
                parent[j] = i as u32;
                queue.push_back(j);
            }
        }
    }
    CrossingResult {
        found: false,
        path: None,
        hop_count: 0,
    }
}

/// Upper bound hop_count·exp(ξ·√(π/2)·t) on the DLFPP annulus distance
/// implied by a found crossing.
pub fn levelset_cost_bound(result: &CrossingResult, xi: f64, t: f64) -> Result<f64> {
    if !result.found {
        return Err(Error::InvalidParam(
            "cost bound needs a found crossing".into(),
        ));
    }
    Ok(result.hop_count as f64 * (xi * SQRT_HALF_PI * t).exp())
}

/// DLFPP distance from the inner square to the outer square boundary on the
/// unrestricted grid.
pub fn dlfpp_annulus_distance(field: &FieldSample, spec: &AnnulusSpec, xi: f64) -> DistanceResult {
    let weights = dlfpp_weights(field, xi);
    let mask = DomainMask::full(field.scale());
    let sources: Vec<Vertex> = spec.s1.iter().collect();
    let targets: Vec<Vertex> = spec.s2_boundary.iter().collect();
    vertex_weighted_shortest_path(&weights, &mask, &sources, &targets)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub threshold: f64,
    pub hop_count: usize,
    pub bound: f64,
    pub dlfpp_distance: f64,
    pub holds: bool,
}

/// Instantiates the crossing cost bound on a field and checks it against the
/// measured DLFPP annulus distance. `None` when no crossing exists.
pub fn verify_cost_bound(
    field: &FieldSample,
    q: &LevelSetQuery,
    xi: f64,
) -> Result<Option<BoundCheck>> {
    let crossing = levelset_crossing(field, q);
    if !crossing.found {
        return Ok(None);
    }
    let bound = levelset_cost_bound(&crossing, xi, q.threshold)?;
    let dist = dlfpp_annulus_distance(field, &q.annulus, xi).distance;
    Ok(Some(BoundCheck {
        threshold: q.threshold,
        hop_count: crossing.hop_count,
        bound,
        dlfpp_distance: dist,
        holds: dist <= bound * (1.0 + 1e-12),
    }))
}

/// Implied LQG parameters from (ξ, slope): the smaller root of
/// ξγ²/2 − Qγ + 2ξ = 0 and d_γ = γ/ξ.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImpliedDimension {
    pub gamma: f64,
    pub dgamma: f64,
    /// d_γ − (2 + γ²/2)
    pub lower_bound_margin: f64,
    pub satisfies_lower_bound: bool,
}

/// Solves the distance-exponent relation for (γ, d_γ). Returns `None` when
/// the discriminant Q² − 4ξ² is negative (no real solution) or the inputs
/// are not positive.
pub fn implied_dgamma(xi: f64, q: f64) -> Option<ImpliedDimension> {
    if !(xi > 0.0) || !(q > 0.0) {
        return None;
    }
    let disc = q * q - 4.0 * xi * xi;
    if disc < 0.0 {
        return None;
    }
    let gamma = (q - disc.sqrt()) / xi;
    let dgamma = gamma / xi;
    let margin = dgamma - (2.0 + gamma * gamma / 2.0);
    Some(ImpliedDimension {
        gamma,
        dgamma,
        lower_bound_margin: margin,
        satisfies_lower_bound: margin >= 0.0,
    })
}

/// Least-squares line fit returning (slope, intercept, slope standard error).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if xs.len() > 2 {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (ss_res / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// Regression result over the size ladder, with the implied (γ, d_γ) when
/// the discriminant allows it.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentEstimate {
    pub xi: f64,
    pub ladder: Vec<u32>,
    pub median_log_distance: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// λ estimate: 1 − slope.
    pub lambda_hat: f64,
    pub implied: Option<ImpliedDimension>,
}

/// Fits the exponent from per-size distance samples (n, distances). The
/// injected-distance form of the estimator; Monte Carlo callers provide the
/// samples, synthetic callers can hand in exact power laws.
pub fn estimate_from_distances(xi: f64, rows: &[(u32, Vec<f64>)]) -> Result<ExponentEstimate> {
    if rows.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "ladder needs at least 3 sizes, got {}",
            rows.len()
        )));
    }
    if !rows.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(Error::InvalidParam(
            "ladder sizes must be strictly increasing".into(),
        ));
    }
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for (n, dists) in rows {
        if dists.is_empty() {
            return Err(Error::InvalidParam(format!("no distances for n = {n}")));
        }
        if dists.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidParam(format!(
                "distances for n = {n} must be finite and positive"
            )));
        }
        xs.push((*n as f64).ln());
        ys.push(median_of(dists.iter().map(|d| d.ln()).collect()));
    }
    let (slope, intercept, stderr) = fit_line(&xs, &ys);
    Ok(ExponentEstimate {
        xi,
        ladder: rows.iter().map(|r| r.0).collect(),
        median_log_distance: ys,
        slope,
        intercept,
        slope_stderr: stderr,
        lambda_hat: 1.0 - slope,
        implied: implied_dgamma(xi, slope),
    })
}

/// One Monte Carlo replicate of the annulus-distance experiment.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceSample {
    pub n: u32,
    pub rep: u32,
    pub seed: u64,
    pub distance: f64,
    pub geodesic_vertices: usize,
}

#[derive(Debug, Clone)]
pub struct ExponentRun {
    pub estimate: ExponentEstimate,
    pub samples: Vec<DistanceSample>,
}

/// Monte Carlo exponent estimation: for each ladder size, `reps` independent
/// DGFFs are sampled and the DLFPP annulus distance recorded; the slope of
/// median log-distance against log n is fitted by least squares.
pub fn estimate_exponent(xi: f64, ladder: &[u32], reps: u32, seed: u64) -> Result<ExponentRun> {
    if reps < 5 {
        return Err(Error::InvalidParam(format!(
            "need at least 5 replicates, got {reps}"
        )));
    }
    if !(xi > 0.0) {
        return Err(Error::InvalidParam(format!("ξ must be positive, got {xi}")));
    }
    let jobs: Vec<(u32, u32)> = ladder
        .iter()
        .flat_map(|&n| (0..reps).map(move |r| (n, r)))
        .collect();
    let samples: Vec<DistanceSample> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let spec = annulus(n)?;
            let rep_seed = derive_seed(seed, ((n as u64) << 32) | rep as u64);
            let field = sample_dgff(n, rep_seed)?;
            let result = dlfpp_annulus_distance(&field, &spec, xi);
            Ok(DistanceSample {
                n,
                rep,
                seed: rep_seed,
                distance: result.distance,
                geodesic_vertices: result.geodesic_vertices(),
            })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<(u32, Vec<f64>)> = ladder
        .iter()
        .map(|&n| {
            (
                n,
                samples
                    .iter()
                    .filter(|s| s.n == n)
                    .map(|s| s.distance)
                    .collect(),
            )
        })
        .collect();
    Ok(ExponentRun {
        estimate: estimate_from_distances(xi, &rows)?,
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaReport {
    pub estimate: ExponentEstimate,
    pub tolerance: f64,
    pub threshold: f64,
    pub passes: bool,
}

pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.1;

/// Upper-bound check on the fitted slope: D = n^{1+o(1)} requires
/// slope ≤ 1 + tolerance.
pub fn lambda_nonneg_check(
    xi: f64,
    ladder: &[u32],
    reps: u32,
    seed: u64,
    tolerance: f64,
) -> Result<LambdaReport> {
    let run = estimate_exponent(xi, ladder, reps, seed)?;
    let threshold = 1.0 + tolerance;
    Ok(LambdaReport {
        passes: run.estimate.slope <= threshold,
        threshold,
        tolerance,
        estimate: run.estimate,
    })
}

/// One replicate of the level-set crossing experiment.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetRun {
    pub n: u32,
    pub rep: u32,
    pub seed: u64,
    pub threshold: f64,
    pub crossing_found: bool,
    pub hop_count: usize,
    pub bound: Option<f64>,
    pub dlfpp_distance: Option<f64>,
    pub bound_holds: Option<bool>,
}

/// Runs `samples` independent level-set crossing searches at threshold
/// (ln n)^χ, with the DLFPP cost-bound comparison on every found crossing.
pub fn levelset_experiment(
    n: u32,
    chi: f64,
    xi: f64,
    samples: u32,
    seed: u64,
) -> Result<Vec<LevelSetRun>> {
    let q = LevelSetQuery::from_chi(n, chi)?;
    (0..samples)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, ((n as u64) << 40) | rep as u64);
            let field = sample_dgff(n, rep_seed)?;
            let check = verify_cost_bound(&field, &q, xi)?;
            Ok(match check {
                Some(c) => LevelSetRun {
                    n,
                    rep,
                    seed: rep_seed,
                    threshold: q.threshold,
                    crossing_found: true,
                    hop_count: c.hop_count,
                    bound: Some(c.bound),
                    dlfpp_distance: Some(c.dlfpp_distance),
                    bound_holds: Some(c.holds),
                },
                None => LevelSetRun {
                    n,
                    rep,
                    seed: rep_seed,
                    threshold: q.threshold,
                    crossing_found: false,
                    hop_count: 0,
                    bound: None,
                    dlfpp_distance: None,
                    bound_holds: None,
                },
            })
        })
        .collect()
}

/// JSON summary of an exponent experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub xi: f64,
    pub slope: f64,
    pub stderr: f64,
    pub lambda_hat: f64,
    pub gamma_hat: Option<f64>,
    pub dgamma_hat: Option<f64>,
    /// d_γ ≥ 2 + γ²/2 − slack for the estimate, when (γ, d_γ) solvable.
    pub bound_check: Option<bool>,
    pub bound_slack: f64,
}

impl ReportSummary {
    pub fn from_estimate(est: &ExponentEstimate, slack: f64) -> Self {
        Self {
            xi: est.xi,
            slope: est.slope,
            stderr: est.slope_stderr,
            lambda_hat: est.lambda_hat,
            gamma_hat: est.implied.map(|i| i.gamma),
            dgamma_hat: est.implied.map(|i| i.dgamma),
            bound_check: est.implied.map(|i| i.lower_bound_margin >= -slack),
            bound_slack: slack,
        }
    }
}
