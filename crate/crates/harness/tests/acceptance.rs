//! Acceptance criteria, one line each. Runs (or resumes) the full protocol
//! sweep into `target/acceptance/protocol` unless `SAFEFCM_RESULTS_DIR` points elsewhere.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safefcm::algorithm::Algorithm;
use safefcm::catalog::{default_data_dir, DatasetName};
use safefcm::config::ExperimentConfig;
use safefcm::oracle::{data_checks, formula_checks};
use safefcm::reference::{reference_row, DEFAULT_TOLERANCE, REFERENCE_RATIOS, TOLERANCE_CHECKED};
use safefcm::report::{aggregate_records, compare_table, descent_summary, find_best, select_best_lambda, write_report, BestCell};
use safefcm::sweep::{load_all_records, run_sweep_from};
use safefcm_core::baseline::{fcm_fit, ssfcm_fit, FcmParams, SsfcmParams};
use safefcm_core::dataset::{inject_mislabels, split_labeled, Dataset, SemiSupervisedView};
use safefcm_core::geometry::{dynamic_pun, graph_weights, DistanceIndex};
use safefcm_core::matrix::{Matrix, STOCHASTIC_TOLERANCE};
use safefcm_core::safe::{
    as3_fit, as3_update_labeled, as3_update_unlabeled, initial_partition, local_inconsistency, step_gate, As3Config,
    Coupling, GateMode, KgbsSolver, SafeConfig, AS3_NEIGHBORS,
};

const TREND_MIN_BUPA_DROP: f64 = 5.0;
const ORDERING_SLACK: f64 = 0.5;
const GAUSS50_FLOOR: f64 = 92.0;
const ORACLE_BUDGET_SECONDS: f64 = 60.0;
const FUZZ_INSTANCES: u64 = 100;
const DESCENT_TOL: f64 = 1e-10;
const SCALING_RANGE: (f64, f64) = (1.6, 3.0);
const SCALING_N: usize = 2000;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn results_dir() -> PathBuf {
    std::env::var_os("SAFEFCM_RESULTS_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance/protocol"))
}

fn best_mean(best: &[BestCell], d: DatasetName, a: Algorithm, ratio: f64) -> Option<f64> {
    find_best(best, d, a, ratio).map(|b| b.score.mean * 100.0)
}

fn protocol_best() -> Result<Vec<BestCell>> {
    let out = results_dir();
    let summary = run_sweep_from(&ExperimentConfig::default(), &default_data_dir(), &out)?;
    if summary.executed > 0 {
        eprintln!("sweep: {} new runs in {}", summary.executed, out.display());
    }
    write_report(&out, DEFAULT_TOLERANCE)?;
    let records = load_all_records(&out)?;
    Ok(select_best_lambda(&aggregate_records(&records)?))
}

fn table_reproduction(best: &[BestCell]) -> Verdict {
    let cmp = compare_table(best, DEFAULT_TOLERANCE);
    let mut notes = Vec::new();
    for row in cmp.rows.iter().filter(|r| TOLERANCE_CHECKED.contains(&r.dataset)) {
        if row.cells.iter().any(|c| c.ours.is_none()) {
            notes.push(format!("{} missing data", row.dataset));
            continue;
        }
        let worst = row.cells.iter().filter_map(|c| c.delta).fold(0.0f64, |m, d| if d.abs() > m.abs() { d } else { m });
        let off = row.cells.iter().filter(|c| c.flagged).count();
        notes.push(format!("{} worst {worst:+.1} ({off} off)", row.dataset));
    }
    let missing = cmp.missing();
    verdict(cmp.flags() == 0 && missing.is_empty(), format!("±{DEFAULT_TOLERANCE}: {}", notes.join(", ")))
}

fn monotone_trend(best: &[BestCell]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in DatasetName::ALL {
        let (Some(a), Some(b)) = (best_mean(best, d, Algorithm::Kgbs3fcm, 0.0), best_mean(best, d, Algorithm::Kgbs3fcm, 0.30))
        else {
            notes.push(format!("{d} missing data"));
            ok = false;
            continue;
        };
        let drop = a - b;
        let good = b <= a && (d != DatasetName::Bupa || drop >= TREND_MIN_BUPA_DROP);
        ok &= good;
        notes.push(format!("{d} {a:.1}->{b:.1}{}", if good { "" } else { " !" }));
    }
    verdict(ok, format!("bupa drop >= {TREND_MIN_BUPA_DROP}; {}", notes.join(", ")))
}

fn ordering(best: &[BestCell]) -> Verdict {
    let mut violations = Vec::new();
    let mut compared = 0;
    for d in DatasetName::ALL {
        let mut rivals = vec![Algorithm::Kmeans, Algorithm::Fcm];
        if matches!(d, DatasetName::Waveform | DatasetName::Heart) {
            rivals.push(Algorithm::As3fcm);
        }
        for &r in &REFERENCE_RATIOS {
            let Some(k) = best_mean(best, d, Algorithm::Kgbs3fcm, r) else { continue };
            for &alg in &rivals {
                let Some(o) = best_mean(best, d, alg, r) else { continue };
                compared += 1;
                if k - o < -ORDERING_SLACK {
                    violations.push(format!("{d} {:.0}% vs {alg}: {k:.1} < {o:.1}", r * 100.0));
                }
            }
        }
    }
    let required = [DatasetName::Gauss50x, DatasetName::Waveform, DatasetName::Heart];
    let covered = required.iter().all(|&d| best_mean(best, d, Algorithm::Kgbs3fcm, 0.0).is_some());
    let detail = if violations.is_empty() {
        format!("{compared} comparisons within -{ORDERING_SLACK}")
    } else {
        format!("{} of {compared} below -{ORDERING_SLACK}: {}", violations.len(), violations.join("; "))
    };
    verdict(covered && violations.is_empty(), detail)
}

fn gauss50_floor(best: &[BestCell]) -> Verdict {
    match best_mean(best, DatasetName::Gauss50, Algorithm::Kgbs3fcm, 0.0) {
        Some(v) => verdict(v >= GAUSS50_FLOOR, format!("{v:.2}% (floor {GAUSS50_FLOOR}, reference {})", reference_row(DatasetName::Gauss50)[0])),
        None => verdict(false, "missing data"),
    }
}

fn oracle_suite() -> Verdict {
    let start = Instant::now();
    let checks = formula_checks().and_then(|mut c| {
        c.extend(data_checks(&Default::default())?);
        Ok(c)
    });
    let secs = start.elapsed().as_secs_f64();
    match checks {
        Ok(checks) => {
            let failed: Vec<String> =
                checks.iter().filter(|c| !c.passed).map(|c| format!("{} [{}]", c.name, c.detail)).collect();
            let detail = format!("{} of {} checks in {secs:.1}s; failing: {}", checks.len() - failed.len(), checks.len(), if failed.is_empty() { "none".into() } else { failed.join("; ") });
            verdict(failed.is_empty() && secs <= ORACLE_BUDGET_SECONDS, detail)
        }
        Err(e) => verdict(false, format!("{e:#}")),
    }
}

fn fuzz_view(rng: &mut ChaCha8Rng) -> SemiSupervisedView {
    loop {
        let c = rng.random_range(2..=3);
        let n = rng.random_range(16..=40);
        let d = rng.random_range(1..=4);
        let truth: Vec<usize> = (0..n).map(|k| k % c + 1).collect();
        let rows: Vec<f64> = (0..n * d).map(|j| 1.5 * truth[j / d] as f64 + rng.random_range(-1.0..1.0)).collect();
        let ds = Dataset::new("fuzz", Matrix::from_vec(n, d, rows).unwrap(), truth, c).unwrap();
        let view = split_labeled(&ds, 0.25, rng.random()).unwrap();
        let view = inject_mislabels(&view, rng.random_range(0.0..=0.3), rng.random()).unwrap();
        if view.labeled_class_means().is_ok() {
            return view;
        }
    }
}

fn relative_rise(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| (w[1] - w[0]) / w[0].abs().max(1.0)).fold(0.0, f64::max)
}

fn invariants(best_records: &Path) -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |what: &str, seed: u64| {
        if failures.len() < 5 {
            failures.push(format!("{what} (instance {seed})"));
        }
    };
    let lambdas = [1e-3, 1e-1, 1.0, 10.0, 100.0];
    let mut kgbs_rises = 0;
    for seed in 0..FUZZ_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let view = fuzz_view(&mut rng);
        let n = view.data().len();
        let c = view.data().num_classes();
        let (l1, l2) = (lambdas[rng.random_range(0..5)], lambdas[rng.random_range(0..5)]);
        let labels = view.provided_clusters();

        let mut solver = KgbsSolver::new(&view, SafeConfig::for_size(n, l1, l2)).unwrap();
        for _ in 0..15 {
            solver.step().unwrap();
            if !solver.partition().is_column_stochastic(STOCHASTIC_TOLERANCE) {
                fail("K-GBS column sums", seed);
            }
            let li = local_inconsistency(solver.partition(), &labels, solver.graph()).unwrap();
            if solver.safety().values.iter().zip(&li).any(|(&s, &li)| !(s > 0.0 && s <= 1.0) || (s == 1.0) != (li == 0.0)) {
                fail("safety range", seed);
            }
        }
        if relative_rise(&solver.finish().trace.objective) > DESCENT_TOL {
            kgbs_rises += 1;
        }

        let x = view.data().features();
        let l = labels.len();
        let graph = graph_weights(&DistanceIndex::new(x, l).unwrap(), &vec![AS3_NEIGHBORS; l]).unwrap();
        let problem = Coupling { x, labels: &labels, graph: &graph };
        let v = view.labeled_class_means().unwrap();
        let u = initial_partition(x, &labels, &v);
        let s = vec![1.0 / l as f64; l];
        let a = as3_update_labeled(&u, &v, &problem, &s, l1, l2).unwrap();
        let b = as3_update_unlabeled(&a, &v, &problem, &s, l2).unwrap();
        let fit = as3_fit(&view, &As3Config { max_iter: 15, ..As3Config::new(l1, l2) }).unwrap();
        if ![&a, &b, &fit.partition].iter().all(|p| p.is_column_stochastic(STOCHASTIC_TOLERANCE)) {
            fail("AS3 column sums", seed);
        }

        let fcm = fcm_fit(view.data(), &FcmParams::new(c, seed)).unwrap();
        let ss = ssfcm_fit(&view, &SsfcmParams { alpha: l1, ..SsfcmParams::default() }).unwrap();
        if !fcm.partition.is_column_stochastic(STOCHASTIC_TOLERANCE) || !ss.partition.is_column_stochastic(STOCHASTIC_TOLERANCE) {
            fail("baseline column sums", seed);
        }
        if relative_rise(&fcm.trace.objective) > DESCENT_TOL || relative_rise(&ss.trace.objective) > DESCENT_TOL {
            fail("FCM/SSFCM descent", seed);
        }

        let base = SafeConfig { max_iter: 20, ..SafeConfig::for_size(n, 1.0, l2) };
        let adaptive = KgbsSolver::new(&view, base.clone()).unwrap().run().unwrap();
        let closed = KgbsSolver::new(&view, SafeConfig { gate: GateMode::AlwaysClosed, ..base }).unwrap().run().unwrap();
        if adaptive.trace.objective != closed.trace.objective || adaptive.partition != closed.partition {
            fail("gate equivalence at λ1 = 1", seed);
        }

        let dbar: Vec<f64> = (0..rng.random_range(1..30)).map(|_| rng.random_range(0.0..5.0)).collect();
        let (lo, hi) = (rng.random_range(1..8), rng.random_range(8..30));
        let p = dynamic_pun(&dbar, lo, hi).unwrap();
        let monotone = (0..dbar.len()).all(|i| (0..dbar.len()).all(|j| dbar[i] >= dbar[j] || p[i] <= p[j]));
        if !monotone || p.iter().any(|k| !(lo..=hi).contains(k)) {
            fail("neighbor count bounds", seed);
        }
    }
    let theta = 0.6;
    if step_gate(theta - 1e-12, theta) || !step_gate(theta, theta) {
        failures.push("gate boundary".into());
    }
    let recorded = load_all_records(best_records)
        .map(|r| {
            descent_summary(&r)
                .iter()
                .filter(|d| d.algorithm == Algorithm::Kgbs3fcm)
                .map(|d| format!("{} {}/{}", d.dataset, d.non_monotone, d.runs))
                .collect::<Vec<_>>()
                .join(", ")
        })
        .unwrap_or_default();
    let detail = format!(
        "{FUZZ_INSTANCES} fuzz instances; {}; K-GBS3FCM non-monotone traces: fuzz {kgbs_rises}/{FUZZ_INSTANCES}, sweep {recorded}",
        if failures.is_empty() { "no violations".to_string() } else { failures.join("; ") }
    );
    verdict(failures.is_empty(), detail)
}

fn determinism() -> Result<Verdict> {
    let cfg = ExperimentConfig {
        datasets: vec![DatasetName::Heart, DatasetName::Gauss50],
        algorithms: vec![Algorithm::Fcm, Algorithm::Ssfcm, Algorithm::As3fcm, Algorithm::Kgbs3fcm],
        mislabel_ratios: vec![0.0, 0.3],
        lambda_grid: vec![0.1, 10.0],
        repeats: 3,
        ..ExperimentConfig::default()
    };
    let tmp = tempfile::tempdir()?;
    let mut summaries = Vec::new();
    for (name, workers) in [("a", 1), ("b", 0)] {
        let out = tmp.path().join(name);
        run_sweep_from(&ExperimentConfig { workers, ..cfg.clone() }, &default_data_dir(), &out)?;
        write_report(&out, DEFAULT_TOLERANCE)?;
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for entry in fs::read_dir(out.join("summary"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "csv") {
                files.push((path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path)?));
            }
        }
        files.sort();
        summaries.push(files);
    }
    let same = summaries[0] == summaries[1] && !summaries[0].is_empty();
    Ok(verdict(same, format!("{} summary CSVs compared (1 vs all workers)", summaries[0].len())))
}

/// Median seconds per K-GBS3FCM iteration on `n` points in three clusters.
fn seconds_per_step(n: usize) -> f64 {
    let (c, d) = (3, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let truth: Vec<usize> = (0..n).map(|k| k % c + 1).collect();
    let rows: Vec<f64> = (0..n * d).map(|j| 2.0 * truth[j / d] as f64 + rng.random_range(-1.5..1.5)).collect();
    let ds = Dataset::new("scale", Matrix::from_vec(n, d, rows).unwrap(), truth, c).unwrap();
    let view = split_labeled(&ds, 0.2, 7).unwrap();
    let mut solver = KgbsSolver::new(&view, SafeConfig::for_size(n, 1.0, 1.0)).unwrap();
    solver.step().unwrap();
    let mut samples: Vec<f64> = (0..15)
        .map(|_| {
            let t = Instant::now();
            solver.step().unwrap();
            t.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn scaling() -> Verdict {
    let small = seconds_per_step(SCALING_N);
    let large = seconds_per_step(2 * SCALING_N);
    let factor = large / small;
    verdict(
        (SCALING_RANGE.0..=SCALING_RANGE.1).contains(&factor),
        format!("n={SCALING_N}: {:.2} ms, n={}: {:.2} ms, factor {factor:.2} (range {:?})", small * 1e3, 2 * SCALING_N, large * 1e3, SCALING_RANGE),
    )
}

fn main() -> ExitCode {
    let mut verdicts: Vec<(u32, &str, Verdict)> = Vec::new();
    match protocol_best() {
        Ok(best) => {
            verdicts.push((1, "table reproduction", table_reproduction(&best)));
            verdicts.push((2, "monotone trend", monotone_trend(&best)));
            verdicts.push((3, "ordering", ordering(&best)));
            verdicts.push((4, "gauss50 floor", gauss50_floor(&best)));
        }
        Err(e) => {
            for (i, name) in [(1, "table reproduction"), (2, "monotone trend"), (3, "ordering"), (4, "gauss50 floor")] {
                verdicts.push((i, name, verdict(false, format!("sweep failed: {e:#}"))));
            }
        }
    }
    verdicts.push((5, "oracle suite", oracle_suite()));
    verdicts.push((6, "invariants", invariants(&results_dir())));
    verdicts.push((7, "determinism", determinism().unwrap_or_else(|e| verdict(false, format!("{e:#}")))));
    verdicts.push((8, "scaling", scaling()));

    for (i, name, v) in &verdicts {
        println!("criterion {i} {name}: {} | {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed = verdicts.iter().filter(|(_, _, v)| !v.passed).count();
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
