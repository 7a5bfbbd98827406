//! Subcommand handlers.

use crate::config::{prefer, require, FileConfig};
use crate::{
    CompareArgs, CoupleArgs, DistArgs, ExponentArgs, LevelsetArgs, ReportArgs, SampleArgs,
};
use anyhow::{bail, Context, Result};
use lfpp_core::analysis::{
    estimate_exponent, levelset_experiment, DistanceSample, LevelSetRun, ReportSummary,
};
use lfpp_core::coupling::{
    build_coupling_with, discrepancy_stat, project_to_coarse, BuildOptions, CouplingMode,
    CouplingSample, ProjectionSolver, DEFAULT_BUDGET_NM, DEFAULT_SOLVER_TOLERANCE,
};
use lfpp_core::gff::{sample_dgff, FieldSample};
use lfpp_core::lattice::{rasterize, RectRegion, Vertex};
use lfpp_core::metric::{
    compare_metrics, dlfpp_distance, fine_lfpp_distance, lattice_lfpp_distance, DistanceQuery,
    DistanceResult, MetricKind, QuerySpec,
};
use lfpp_core::snapshot::{load_field, save_field};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub enum Outcome {
    Ok,
    AssertionFailed(String),
}

pub const SIDECAR_SCHEMA_VERSION: u32 = 1;

/// Environment override for the n·m coupling budget.
pub fn budget_nm() -> Result<u32> {
    match std::env::var("LFPP_BUDGET_NM") {
        Ok(s) => s
            .parse::<u32>()
            .with_context(|| format!("LFPP_BUDGET_NM={s:?} is not a positive integer")),
        Err(_) => Ok(DEFAULT_BUDGET_NM),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn parse_u32_pair(s: &str, what: &str) -> Result<(u32, u32)> {
    let (a, b) = s
        .split_once(',')
        .with_context(|| format!("{what} must be \"x,y\", got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_f64_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .with_context(|| format!("{what} must be \"x,y\", got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_vertex_list(s: &str) -> Result<Vec<Vertex>> {
    s.split(';')
        .map(|p| {
            let (x, y) = parse_u32_pair(p, "vertex")?;
            Ok(Vertex::new(x, y))
        })
        .collect()
}

fn parse_ladder(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().context("bad ladder entry"))
        .collect()
}

fn load_region_or(path: Option<&Path>, default: RectRegion) -> Result<RectRegion> {
    match path {
        Some(p) => RectRegion::from_file(p).with_context(|| format!("region {}", p.display())),
        None => Ok(default),
    }
}

fn write_text(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    schema_version: u32,
    n: u32,
    m: u32,
    seed: u64,
    mode: CouplingMode,
    solver_tolerance: f64,
}

fn bundle_paths(prefix: &Path) -> (PathBuf, PathBuf, PathBuf, PathBuf) {
    let with_ext = |ext: &str| -> PathBuf {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (
        with_ext(".coarse.fld"),
        with_ext(".fine.fld"),
        with_ext(".circ.fld"),
        with_ext(".json"),
    )
}

fn save_bundle(prefix: &Path, coupling: &CouplingSample) -> Result<Vec<(PathBuf, String)>> {
    let (pc, pf, pr, pj) = bundle_paths(prefix);
    let mut written = Vec::new();
    for (path, field) in [
        (&pc, &coupling.coarse),
        (&pf, &coupling.fine),
        (&pr, &coupling.circ),
    ] {
        save_field(path, field)?;
        written.push((path.clone(), sha256_hex(&std::fs::read(path)?)));
    }
    let sidecar = Sidecar {
        schema_version: SIDECAR_SCHEMA_VERSION,
        n: coupling.n,
        m: coupling.m,
        seed: coupling.seed,
        mode: coupling.mode,
        solver_tolerance: coupling.solver_tolerance,
    };
    std::fs::write(&pj, serde_json::to_string_pretty(&sidecar)?)?;
    written.push((pj.clone(), sha256_hex(&std::fs::read(&pj)?)));
    Ok(written)
}

pub fn load_bundle(prefix: &Path) -> Result<CouplingSample> {
    let (pc, pf, pr, pj) = bundle_paths(prefix);
    let sidecar: Sidecar = serde_json::from_str(
        &std::fs::read_to_string(&pj).with_context(|| format!("sidecar {}", pj.display()))?,
    )?;
    if sidecar.schema_version != SIDECAR_SCHEMA_VERSION {
        bail!(
            "sidecar schema version {} not supported (expected {SIDECAR_SCHEMA_VERSION})",
            sidecar.schema_version
        );
    }
    let coarse = load_field(&pc)?;
    let fine = load_field(&pf)?;
    let circ = load_field(&pr)?;
    Ok(CouplingSample::from_parts(
        coarse,
        fine,
        circ,
        sidecar.mode,
        sidecar.seed,
        sidecar.solver_tolerance,
    )?)
}

pub fn sample(args: SampleArgs, cfg: &FileConfig) -> Result<Outcome> {
    let n = require(args.n, cfg.sample.n, "n")?;
    let seed = require(args.seed, cfg.sample.seed, "seed")?;
    let out = require(args.out, cfg.sample.out.as_ref().map(PathBuf::from), "out")?;
    let field = sample_dgff(n, seed)?;
    save_field(&out, &field)?;
    let digest = sha256_hex(&std::fs::read(&out)?);
    println!(
        "n={n} seed={seed} min={} max={} sha256={digest}",
        field.min_value(),
        field.max_value()
    );
    println!("wrote {}", out.display());
    Ok(Outcome::Ok)
}

pub fn couple(args: CoupleArgs, cfg: &FileConfig) -> Result<Outcome> {
    let n = require(args.n, cfg.couple.n, "n")?;
    let m = require(args.m, cfg.couple.m, "m")?;
    let seed = require(args.seed, cfg.couple.seed, "seed")?;
    let mode: CouplingMode = prefer(
        args.mode,
        cfg.couple.mode.clone(),
        "exact-coarse".to_string(),
    )
    .parse()?;
    let tolerance = prefer(
        args.tolerance,
        cfg.couple.tolerance,
        DEFAULT_SOLVER_TOLERANCE,
    );
    let prefix = require(
        args.out_prefix,
        cfg.couple.out_prefix.as_ref().map(PathBuf::from),
        "out-prefix",
    )?;
    let opts = BuildOptions {
        mode,
        tolerance,
        budget_nm: budget_nm()?,
    };
    let coupling = build_coupling_with(n, m, seed, &opts)?;
    let written = save_bundle(&prefix, &coupling)?;
    for (path, digest) in &written {
        println!("wrote {} sha256={digest}", path.display());
    }
    println!("mode={mode} n={n} m={m} seed={seed} solver_tolerance={tolerance:e}");
    // reprojection residual: how far project(fine) sits from the stored coarse
    let solver = ProjectionSolver::new(n, m)?.with_tolerance(tolerance);
    let proj = project_to_coarse(&coupling.fine, &solver)?;
    let residual = proj
        .values
        .iter()
        .zip(&coupling.coarse.values)
        .map(|(p, c)| (p - c).abs())
        .fold(0.0f64, f64::max);
    println!("projection residual max|P(fine) - coarse| = {residual:e}");
    let region = load_region_or(
        args.region
            .as_deref()
            .or(cfg.couple.region.as_ref().map(Path::new)),
        RectRegion::centered_half_square(),
    )?;
    let stat = discrepancy_stat(&coupling, &region)?;
    println!("discrepancy_stat={stat}");
    Ok(Outcome::Ok)
}

fn result_csv_row(r: &DistanceResult, wall_ns: u128) -> String {
    format!(
        "{},{},{},{}\n",
        r.distance,
        r.geodesic_vertices(),
        r.relaxations,
        wall_ns
    )
}

pub fn dist(args: DistArgs, cfg: &FileConfig) -> Result<Outcome> {
    let kind_str = require(args.kind, cfg.dist.kind.clone(), "kind")?;
    let kind = match kind_str.as_str() {
        "dlfpp" => MetricKind::Dlfpp,
        "lattice-lfpp" => MetricKind::LatticeLfpp,
        "fine-lfpp" => MetricKind::FineLfpp,
        other => bail!("unknown metric kind {other:?}"),
    };
    let xi = prefer(args.xi, cfg.dist.xi, 1.0);
    let out = args.out.or(cfg.dist.out.as_ref().map(PathBuf::from));
    let mut csv = String::from("distance,geodesic_length,relaxations,wall_ns\n");

    if let Some(batch) = &args.queries {
        let field = match kind {
            MetricKind::FineLfpp => None,
            _ => Some(load_field(&require(
                args.field,
                cfg.dist.field.as_ref().map(PathBuf::from),
                "field",
            )?)?),
        };
        let coupling = match kind {
            MetricKind::FineLfpp => Some(load_bundle(&require(
                args.coupling,
                cfg.dist.coupling.as_ref().map(PathBuf::from),
                "coupling",
            )?)?),
            _ => None,
        };
        let text = std::fs::read_to_string(batch)?;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let spec: QuerySpec =
                serde_json::from_str(line).with_context(|| format!("query line {}", lineno + 1))?;
            let t0 = Instant::now();
            let result = run_query_spec(&spec, field.as_ref(), coupling.as_ref())?;
            csv.push_str(&result_csv_row(&result, t0.elapsed().as_nanos()));
        }
        write_text(out.as_deref(), &csv)?;
        return Ok(Outcome::Ok);
    }

    let t0 = Instant::now();
    let result = match kind {
        MetricKind::FineLfpp => {
            let coupling = load_bundle(&require(
                args.coupling,
                cfg.dist.coupling.as_ref().map(PathBuf::from),
                "coupling",
            )?)?;
            let z = parse_f64_pair(&require(args.z, None, "z")?, "--z")?;
            let w = parse_f64_pair(&require(args.w, None, "w")?, "--w")?;
            let region = load_region_or(
                args.region
                    .as_deref()
                    .or(cfg.dist.region.as_ref().map(Path::new)),
                RectRegion::centered_half_square(),
            )?;
            fine_lfpp_distance(&coupling, z, w, &region, xi)?
        }
        _ => {
            let field = load_field(&require(
                args.field,
                cfg.dist.field.as_ref().map(PathBuf::from),
                "field",
            )?)?;
            let sources = match (&args.source, &args.u) {
                (Some(s), _) => parse_vertex_list(s)?,
                (None, Some(u)) => {
                    let (x, y) = parse_u32_pair(u, "--u")?;
                    vec![Vertex::new(x, y)]
                }
                _ => bail!("need --u or --source"),
            };
            let targets = match (&args.target, &args.v) {
                (Some(s), _) => parse_vertex_list(s)?,
                (None, Some(v)) => {
                    let (x, y) = parse_u32_pair(v, "--v")?;
                    vec![Vertex::new(x, y)]
                }
                _ => bail!("need --v or --target"),
            };
            let region = load_region_or(
                args.region
                    .as_deref()
                    .or(cfg.dist.region.as_ref().map(Path::new)),
                RectRegion::unit_square(),
            )?;
            let mask = rasterize(&region, field.scale())?;
            let q = DistanceQuery::new(sources, targets, mask, kind, xi)?;
            match kind {
                MetricKind::Dlfpp => dlfpp_distance(&field, &q)?,
                MetricKind::LatticeLfpp => lattice_lfpp_distance(&field, &q)?,
                MetricKind::FineLfpp => unreachable!(),
            }
        }
    };
    let wall = t0.elapsed().as_nanos();
    println!("distance={}", result.distance);
    csv.push_str(&result_csv_row(&result, wall));
    if out.is_some() {
        write_text(out.as_deref(), &csv)?;
    }
    Ok(Outcome::Ok)
}

fn run_query_spec(
    spec: &QuerySpec,
    field: Option<&FieldSample>,
    coupling: Option<&CouplingSample>,
) -> Result<DistanceResult> {
    match spec.kind {
        MetricKind::Dlfpp | MetricKind::LatticeLfpp => {
            let field = field.context("batch queries over vertex metrics need --field")?;
            let q = spec.to_query(field.scale())?;
            Ok(match spec.kind {
                MetricKind::Dlfpp => dlfpp_distance(field, &q)?,
                _ => lattice_lfpp_distance(field, &q)?,
            })
        }
        MetricKind::FineLfpp => {
            let coupling = coupling.context("fine-lfpp batch queries need --coupling")?;
            let (s, t) = (&spec.source, &spec.target);
            if s.len() != 1 || t.len() != 1 {
                bail!("fine-lfpp batch queries take single-point source/target");
            }
            let region = spec.region()?;
            Ok(fine_lfpp_distance(
                coupling,
                (s[0][0] as f64, s[0][1] as f64),
                (t[0][0] as f64, t[0][1] as f64),
                &region,
                spec.xi,
            )?)
        }
    }
}

pub fn compare(args: CompareArgs, cfg: &FileConfig) -> Result<Outcome> {
    let coupling = match args
        .coupling
        .or(cfg.compare.coupling.as_ref().map(PathBuf::from))
    {
        Some(prefix) => load_bundle(&prefix)?,
        None => {
            let n = require(args.n, cfg.compare.n, "n")?;
            let m = require(args.m, cfg.compare.m, "m")?;
            let seed = require(args.seed, cfg.compare.seed, "seed")?;
            let opts = BuildOptions {
                budget_nm: budget_nm()?,
                ..BuildOptions::default()
            };
            build_coupling_with(n, m, seed, &opts)?
        }
    };
    let pairs = prefer(args.pairs, cfg.compare.pairs, 30);
    let xi = prefer(args.xi, cfg.compare.xi, 0.4);
    let pair_seed = prefer(args.seed, cfg.compare.seed, coupling.seed);
    let region = load_region_or(
        args.region
            .as_deref()
            .or(cfg.compare.region.as_ref().map(Path::new)),
        RectRegion::centered_half_square(),
    )?;
    let report = compare_metrics(&coupling, &region, pairs, xi, pair_seed)?;
    let mut csv = String::from("zx,zy,wx,wy,dlfpp,fine_lfpp,stat\n");
    for row in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.z.0, row.z.1, row.w.0, row.w.1, row.dlfpp, row.fine_lfpp, row.stat
        );
    }
    println!(
        "n={} xi={xi} pairs={} pair_seed={pair_seed} median_stat={} max_stat={}",
        report.n,
        report.rows.len(),
        report.median_stat,
        report.max_stat
    );
    if let Some(out) = args.out.or(cfg.compare.out.as_ref().map(PathBuf::from)) {
        write_text(Some(&out), &csv)?;
    }
    Ok(Outcome::Ok)
}

fn exponent_csv(xi: f64, samples: &[DistanceSample]) -> String {
    let mut csv = String::from("xi,n,rep,seed,distance,hop_count,crossing_found\n");
    for s in samples {
        let _ = writeln!(
            csv,
            "{xi},{},{},{},{},{},true",
            s.n, s.rep, s.seed, s.distance, s.geodesic_vertices
        );
    }
    csv
}

fn levelset_csv_rows(xi: f64, rows: &[LevelSetRun], csv: &mut String) {
    for r in rows {
        let dist = r.dlfpp_distance.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{xi},{},{},{},{dist},{},{}",
            r.n, r.rep, r.seed, r.hop_count, r.crossing_found
        );
    }
}

pub fn exponent(args: ExponentArgs, cfg: &FileConfig) -> Result<Outcome> {
    let xi = require(args.xi, cfg.exponent.xi, "xi")?;
    let ladder = match args.ladder {
        Some(s) => parse_ladder(&s)?,
        None => require(None, cfg.exponent.ladder.clone(), "ladder")?,
    };
    let reps = require(args.reps, cfg.exponent.reps, "reps")?;
    let seed = require(args.seed, cfg.exponent.seed, "seed")?;
    let run = estimate_exponent(xi, &ladder, reps, seed)?;
    let summary = ReportSummary::from_estimate(&run.estimate, args.bound_slack);
    let json = serde_json::to_string_pretty(&summary)?;
    println!("{json}");
    if let Some(p) = args
        .out_json
        .or(cfg.exponent.out_json.as_ref().map(PathBuf::from))
    {
        write_text(Some(&p), &json)?;
    }
    if let Some(p) = args
        .out_csv
        .or(cfg.exponent.out_csv.as_ref().map(PathBuf::from))
    {
        write_text(Some(&p), &exponent_csv(xi, &run.samples))?;
    }
    if let Some(max) = args.assert_slope_max {
        if run.estimate.slope > max {
            return Ok(Outcome::AssertionFailed(format!(
                "fitted slope {} exceeds --assert-slope-max {max}",
                run.estimate.slope
            )));
        }
    }
    Ok(Outcome::Ok)
}

pub fn levelset(args: LevelsetArgs, cfg: &FileConfig) -> Result<Outcome> {
    let n = require(args.n, cfg.levelset.n, "n")?;
    let chi = prefer(args.chi, cfg.levelset.chi, 0.75);
    let xi = prefer(args.xi, cfg.levelset.xi, 0.4);
    let seed = require(args.seed, cfg.levelset.seed, "seed")?;
    let samples = prefer(args.samples, cfg.levelset.samples, 1);
    let rows = levelset_experiment(n, chi, xi, samples, seed)?;
    let found = rows.iter().filter(|r| r.crossing_found).count();
    for r in &rows {
        println!(
            "rep={} crossing_found={} hop_count={} threshold={}{}",
            r.rep,
            r.crossing_found,
            r.hop_count,
            r.threshold,
            match (r.bound, r.dlfpp_distance) {
                (Some(b), Some(d)) => format!(
                    " bound={b} dlfpp_distance={d} bound_holds={}",
                    r.bound_holds.unwrap()
                ),
                _ => String::new(),
            }
        );
    }
    println!("found {found}/{} crossings", rows.len());
    if let Some(p) = args
        .out_csv
        .or(cfg.levelset.out_csv.as_ref().map(PathBuf::from))
    {
        let mut csv = String::from("xi,n,rep,seed,distance,hop_count,crossing_found\n");
        levelset_csv_rows(xi, &rows, &mut csv);
        write_text(Some(&p), &csv)?;
    }
    if args.assert_crossing && found < rows.len() {
        return Ok(Outcome::AssertionFailed(format!(
            "only {found}/{} replicates found a crossing",
            rows.len()
        )));
    }
    Ok(Outcome::Ok)
}

pub fn report(args: ReportArgs, cfg: &FileConfig) -> Result<Outcome> {
    let xi = require(args.xi, cfg.report.xi, "xi")?;
    let ladder = match args.ladder {
        Some(s) => parse_ladder(&s)?,
        None => require(None, cfg.report.ladder.clone(), "ladder")?,
    };
    let reps = require(args.reps, cfg.report.reps, "reps")?;
    let seed = require(args.seed, cfg.report.seed, "seed")?;
    let chi = prefer(args.chi, cfg.report.chi, 0.75);
    let ls_samples = prefer(args.levelset_samples, cfg.report.levelset_samples, reps);

    let run = estimate_exponent(xi, &ladder, reps, seed)?;
    let mut csv = exponent_csv(xi, &run.samples);
    for &n in &ladder {
        let rows = levelset_experiment(n, chi, xi, ls_samples, seed)?;
        levelset_csv_rows(xi, &rows, &mut csv);
    }
    let summary = ReportSummary::from_estimate(&run.estimate, args.bound_slack);
    let json = serde_json::to_string_pretty(&summary)?;
    println!("{json}");
    if let Some(p) = args
        .out_json
        .or(cfg.report.out_json.as_ref().map(PathBuf::from))
    {
        write_text(Some(&p), &json)?;
    }
    if let Some(p) = args
        .out_csv
        .or(cfg.report.out_csv.as_ref().map(PathBuf::from))
    {
        write_text(Some(&p), &csv)?;
    }
    if let Some(max) = args.assert_slope_max {
        if run.estimate.slope > max {
            return Ok(Outcome::AssertionFailed(format!(
                "fitted slope {} exceeds --assert-slope-max {max}",
                run.estimate.slope
            )));
        }
    }
    Ok(Outcome::Ok)
}
