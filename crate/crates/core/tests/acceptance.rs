//! Acceptance criteria. Runs as a plain binary: one PASS/FAIL line per
//! criterion, nonzero exit if any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cmaes_ds::baselines::run_cma_single;
use cmaes_ds::cascade::{run_ds, DsConfig};
use cmaes_ds::cma::{CmaParams, StopTolerances};
use cmaes_ds::harness::{
    run_experiment, run_grid, select, write_report, Algorithm, CellOutput, ExperimentConfig,
    RunRecord,
};
use cmaes_ds::objectives::{make_function, Kind};
use cmaes_ds::par::{self, Execution};
use cmaes_ds::selection::{
    clearing_select, exact_select, greedy_select, verify_batch, ExactCaps, Method,
};
use common::{brute_force, random_instance, replay_violations};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// D=10, T=1000, k=5, d_min=10, every function, algorithm and seed 0..5.
fn main_grid() -> &'static (Vec<CellOutput>, Duration) {
    static GRID: OnceLock<(Vec<CellOutput>, Duration)> = OnceLock::new();
    GRID.get_or_init(|| {
        let start = Instant::now();
        let grid = run_grid(&ExperimentConfig::new(10, 1000, 5, 10.0)).expect("main grid");
        (grid, start.elapsed())
    })
}

fn records_of(grid: &[CellOutput], function: Kind, algorithm: Algorithm) -> Vec<&RunRecord> {
    grid.iter()
        .map(|o| &o.record)
        .filter(|r| r.function == function.id() && r.algorithm == algorithm.id())
        .collect()
}

fn seed_mean(records: &[&RunRecord]) -> f64 {
    records
        .iter()
        .map(|r| r.mean_loss().unwrap_or(f64::INFINITY))
        .sum::<f64>()
        / records.len() as f64
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn feasibility() -> Outcome {
    let start = Instant::now();
    let (grid, _) = main_grid();
    let caps = ExactCaps {
        node_cap: 2_000_000,
        time_cap: Duration::from_secs(2),
    };
    let jobs: Vec<(usize, Method)> = (0..grid.len())
        .flat_map(|i| [Method::Clearing, Method::Greedy, Method::Exact].map(|m| (i, m)))
        .collect();
    let results = par::map(Execution::Parallel, None, &jobs, |&(i, method)| {
        let cell = &grid[i];
        let portfolio = &cell.trajectory.as_ref().expect("trajectory").points;
        let batch = select(
            method,
            portfolio,
            cell.record.k,
            cell.record.d_min,
            10,
            caps,
        )
        .expect("selection");
        (
            batch.complete,
            verify_batch(&batch, portfolio, cell.record.d_min),
        )
    });
    let complete = results.iter().filter(|r| r.0).count();
    let verified = results.iter().filter(|r| r.1).count();
    let elapsed = start.elapsed() + main_grid().1;
    check(
        jobs.len() >= 200 && verified == jobs.len() && elapsed < Duration::from_secs(600),
        format!(
            "{verified}/{} cells verify ({complete} complete), {:.1}s",
            jobs.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn exact_optimality() -> Outcome {
    let start = Instant::now();
    let mut matched = 0;
    let mut dominated = 0;
    for seed in 0..100 {
        let (points, k, d_min) = random_instance(1000 + seed, 30);
        let (oracle, oracle_sum) = brute_force(&points, k, d_min);
        let exact = exact_select(&points, k, d_min, ExactCaps::default()).expect("exact");
        let tol = 1e-9 * (1.0 + oracle_sum.abs());
        if exact.points.len() == oracle.len()
            && exact.complete == (oracle.len() == k)
            && (exact.objective() - oracle_sum).abs() <= tol
            && verify_batch(&exact, &points, d_min)
        {
            matched += 1;
        }
        let others = [
            clearing_select(&points, k, d_min).unwrap(),
            greedy_select(&points, k, d_min, 10).unwrap(),
        ];
        if others.iter().all(|b| {
            b.points.len() < exact.points.len()
                || (b.points.len() == exact.points.len()
                    && b.objective() >= exact.objective() - tol)
        }) {
            dominated += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        matched == 100 && dominated == 100 && elapsed < Duration::from_secs(60),
        format!(
            "{matched}/100 match enumeration, {dominated}/100 dominance, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let best_losses = |id: &str, budget: usize| -> Vec<f64> {
        (0..5)
            .map(|seed| {
                let mut f = make_function(id, 5, 0).unwrap();
                let t = run_cma_single(&mut f, budget, seed).unwrap();
                f.loss(t.best().unwrap().f)
            })
            .collect()
    };
    let sphere = best_losses("sphere", 2000);
    let ellipsoid = best_losses("ellipsoid", 5000);
    let sphere_hits = sphere.iter().filter(|&&l| l < 1e-8).count();
    let ellipsoid_hits = ellipsoid.iter().filter(|&&l| l < 1e-6).count();
    let elapsed = start.elapsed();
    check(
        sphere_hits >= 4 && ellipsoid_hits >= 3 && elapsed < Duration::from_secs(120),
        format!(
            "sphere {sphere_hits}/5 below 1e-8, ellipsoid {ellipsoid_hits}/5 below 1e-6, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn reliability() -> Outcome {
    let (grid, elapsed) = main_grid();
    let ds_incomplete: usize = Kind::ALL
        .iter()
        .map(|&k| {
            records_of(grid, k, Algorithm::Ds)
                .iter()
                .filter(|r| !r.complete)
                .count()
        })
        .sum();
    let cma_failing = Kind::ALL
        .iter()
        .filter(|&&k| {
            records_of(grid, k, Algorithm::Cma)
                .iter()
                .any(|r| !r.complete)
        })
        .count();
    check(
        ds_incomplete == 0 && 2 * cma_failing >= Kind::ALL.len() && *elapsed < Duration::from_secs(900),
        format!(
            "ds incomplete batches {ds_incomplete}, single-run cma fails on {cma_failing}/10 functions, grid {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn wins(grid: &[CellOutput], strict: bool) -> (Vec<&'static str>, Vec<String>) {
    let mut won = Vec::new();
    let mut detail = Vec::new();
    for &kind in &Kind::ALL {
        let ds = seed_mean(&records_of(grid, kind, Algorithm::Ds));
        let random = seed_mean(&records_of(grid, kind, Algorithm::Random));
        if (strict && ds < random) || (!strict && ds <= random) {
            won.push(kind.id());
        } else {
            detail.push(format!("{} {:.3e}>{:.3e}", kind.id(), ds, random));
        }
    }
    (won, detail)
}

fn dominance() -> Outcome {
    let (won, lost) = wins(&main_grid().0, false);
    check(
        10 * won.len() >= 6 * Kind::ALL.len(),
        format!(
            "ds <= random on {}/10 functions; lost: {}",
            won.len(),
            lost.join(", ")
        ),
    )
}

fn sphere_exception() -> Outcome {
    let grid = &main_grid().0;
    let ds = records_of(grid, Kind::Sphere, Algorithm::Ds);
    let random = records_of(grid, Kind::Sphere, Algorithm::Random);
    let mut hits = 0;
    for (d, r) in ds.iter().zip(&random) {
        assert_eq!(d.seed, r.seed);
        if r.leader_loss > d.leader_loss && r.mean_loss() < d.mean_loss() {
            hits += 1;
        }
    }
    check(hits >= 3, format!("pattern holds in {hits}/5 seeds"))
}

fn small_d_min() -> Outcome {
    let mut config = ExperimentConfig::new(10, 1000, 5, 1.0);
    config.algorithms = vec![Algorithm::Ds, Algorithm::Random];
    let grid = run_grid(&config).expect("d_min=1 grid");
    let (won, lost) = wins(&grid, true);
    check(
        10 * won.len() >= 9 * Kind::ALL.len(),
        format!(
            "ds < random on {}/10 functions; lost: {}",
            won.len(),
            lost.join(", ")
        ),
    )
}

fn pinning() -> Outcome {
    let p10 = CmaParams::defaults(10);
    let p2 = CmaParams::defaults(2);
    let t = StopTolerances::defaults(10);
    let ok = p10.lambda == 10
        && p2.lambda == 6
        && p10.mu == 5
        && p2.mu == 3
        && (1..=40).all(|d| {
            let p = CmaParams::defaults(d);
            p.mu == p.lambda / 2
        })
        && t.tol_x == 1e-11
        && t.tol_fun == 1e-11
        && t.tol_fun_hist == 1e-12
        && t.tol_fun_rel == 0.0
        && t.tol_stagnation == 146
        && t.max_iter == 100_000
        && StopTolerances::defaults(2).max_iter == 4000;
    check(
        ok,
        format!(
            "lambda(10)={} lambda(2)={} mu(10)={} mu(2)={}",
            p10.lambda, p2.lambda, p10.mu, p2.mu
        ),
    )
}

fn files_under(dir: &Path, sub: &str) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir.join(sub))
        .expect("output dir")
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect()
}

fn without_cpu_columns(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            // cpu_seconds and selection_seconds sit right before the error column
            let n = fields.len();
            fields.drain(n - 3..n - 1);
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, execution) in dirs
        .iter()
        .zip([Execution::Parallel, Execution::Sequential])
    {
        let mut config = ExperimentConfig::new(10, 1000, 5, 10.0);
        config.seeds = vec![0, 1];
        config.record_regions = true;
        config.execution = execution;
        config.out_dir = Some(dir.path().to_path_buf());
        run_experiment(&config).expect("grid");
        write_report(dir.path(), &dir.path().join("report.csv")).expect("report");
    }
    let (a, b) = (dirs[0].path(), dirs[1].path());
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for sub in ["trajectories", "batches", "regions"] {
        let (fa, fb) = (files_under(a, sub), files_under(b, sub));
        compared += fa.len();
        if fa != fb {
            mismatches.push(sub.to_string());
        }
    }
    for table in ["report_normalized.csv", "report_curves.csv"] {
        compared += 1;
        if fs::read(a.join(table)).unwrap() != fs::read(b.join(table)).unwrap() {
            mismatches.push(table.to_string());
        }
    }
    let ra = without_cpu_columns(&fs::read_to_string(a.join("report.csv")).unwrap());
    let rb = without_cpu_columns(&fs::read_to_string(b.join("report.csv")).unwrap());
    compared += 1;
    if ra != rb {
        mismatches.push("report.csv".into());
    }
    check(
        mismatches.is_empty(),
        format!("{compared} files compared, mismatches: {mismatches:?}"),
    )
}

fn replay() -> Outcome {
    let mut violations = 0;
    let mut points = 0;
    let mut restarts = 0;
    for run in 0..10u64 {
        // half in the main setting, half in a small setting that restarts
        let (id, dim, budget, k, d_min) = if run < 5 {
            (Kind::ALL[run as usize * 2].id(), 10, 1000, 5, 10.0)
        } else {
            ("sphere", 2, 3000, 3, 2.0)
        };
        let mut f = make_function(id, dim, 0).unwrap();
        let mut config = DsConfig::new(k, d_min, budget, run);
        config.record_regions = true;
        let ds = run_ds(&config, &mut f).expect("ds run");
        restarts += ds.restarts;
        points += ds.trajectory.len();
        let v = replay_violations(&ds.trajectory, ds.region_log.as_ref().unwrap());
        for line in v.iter().take(3) {
            eprintln!("  run {run}: {line}");
        }
        violations += v.len();
    }
    check(
        violations == 0,
        format!("{points} points replayed over {restarts} restarts, {violations} violations"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("feasibility suite", feasibility),
        ("exact selector optimality", exact_optimality),
        ("cma-es convergence", convergence),
        ("reliability", reliability),
        ("dominance over random sampling", dominance),
        ("sphere exception", sphere_exception),
        ("small d_min flip", small_d_min),
        ("parameter pinning", pinning),
        ("determinism", determinism),
        ("cascade replay", replay),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let (status, detail) = match criterion() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status}: {name}: {detail}", i + 1);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
