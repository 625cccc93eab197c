//! Aggregation of sweep records into tables.
//!
//! Every file written here is a pure function of the records (timings are
//! never included), so identical sweeps give byte-identical summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use safefcm_core::eval::{aggregate, AggregateScore};

use crate::algorithm::Algorithm;
use crate::catalog::DatasetName;
use crate::csv_io::write_table;
use crate::reference::{reference_value, REFERENCE_RATIOS, TOLERANCE_CHECKED};
use crate::sweep::{load_all_records, RunRecord};

pub const SUMMARY_DIR: &str = "summary";

/// Objective rises above this count as a non-monotone trace.
pub const DESCENT_SLACK: f64 = 1e-8;

/// Scores of all repeats of one (dataset, algorithm, ratio, λ1, λ2).
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaAggregate {
    pub dataset: DatasetName,
    pub algorithm: Algorithm,
    pub ratio: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Accuracies by repeat index.
    pub accuracies: Vec<f64>,
    pub score: Option<AggregateScore>,
    pub failures: usize,
    pub non_monotone: usize,
}

type GroupKey = (DatasetName, Algorithm, u64, u64, u64);

fn ordered_bits(v: f64) -> u64 {
    // Non-negative floats order like their bit patterns.
    debug_assert!(v >= 0.0);
    v.to_bits()
}

pub fn aggregate_records(records: &[RunRecord]) -> Result<Vec<LambdaAggregate>> {
    let mut groups: BTreeMap<GroupKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.dataset, r.algorithm, ordered_bits(r.mislabel_ratio), ordered_bits(r.lambda1), ordered_bits(r.lambda2));
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_values()
        .map(|mut runs| {
            runs.sort_by_key(|r| r.repeat);
            let first = runs[0];
            let accuracies: Vec<f64> = runs.iter().filter_map(|r| r.outcome.as_ref().map(|o| o.accuracy)).collect();
            let non_monotone = runs
                .iter()
                .filter(|r| r.outcome.as_ref().is_some_and(|o| o.max_objective_increase > DESCENT_SLACK))
                .count();
            Ok(LambdaAggregate {
                dataset: first.dataset,
                algorithm: first.algorithm,
                ratio: first.mislabel_ratio,
                lambda1: first.lambda1,
                lambda2: first.lambda2,
                score: if accuracies.is_empty() { None } else { Some(aggregate(&accuracies)?) },
                failures: runs.len() - accuracies.len(),
                accuracies,
                non_monotone,
            })
        })
        .collect()
}

/// The λ pair with the highest mean accuracy for one (dataset, algorithm, ratio).
#[derive(Debug, Clone, PartialEq)]
pub struct BestCell {
    pub dataset: DatasetName,
    pub algorithm: Algorithm,
    pub ratio: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub score: AggregateScore,
    pub accuracies: Vec<f64>,
}

/// Best mean per (dataset, algorithm, ratio); ties keep the smaller (λ1, λ2).
pub fn select_best_lambda(aggs: &[LambdaAggregate]) -> Vec<BestCell> {
    let mut best: BTreeMap<(DatasetName, Algorithm, u64), BestCell> = BTreeMap::new();
    for a in aggs {
        let Some(score) = a.score else { continue };
        let key = (a.dataset, a.algorithm, ordered_bits(a.ratio));
        let better = best.get(&key).is_none_or(|b| score.mean > b.score.mean);
        if better {
            best.insert(
                key,
                BestCell {
                    dataset: a.dataset,
                    algorithm: a.algorithm,
                    ratio: a.ratio,
                    lambda1: a.lambda1,
                    lambda2: a.lambda2,
                    score,
                    accuracies: a.accuracies.clone(),
                },
            );
        }
    }
    best.into_values().collect()
}

pub fn find_best(best: &[BestCell], dataset: DatasetName, algorithm: Algorithm, ratio: f64) -> Option<&BestCell> {
    best.iter().find(|b| b.dataset == dataset && b.algorithm == algorithm && (b.ratio - ratio).abs() < 1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub ratio: f64,
    pub reference: f64,
    /// Reproduced accuracy in percent.
    pub ours: Option<f64>,
    pub delta: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub dataset: DatasetName,
    /// False for rows that are shown but not held to the tolerance.
    pub checked: bool,
    pub cells: Vec<ComparisonCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub tolerance: f64,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn flags(&self) -> usize {
        self.rows.iter().flat_map(|r| &r.cells).filter(|c| c.flagged).count()
    }

    pub fn missing(&self) -> Vec<DatasetName> {
        self.rows.iter().filter(|r| r.checked && r.cells.iter().any(|c| c.ours.is_none())).map(|r| r.dataset).collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "K-GBS3FCM accuracy (%) at the best λ pair per cell, reference in parentheses.");
        let _ = writeln!(s, "`!` marks cells more than {} points from the reference; `*` rows are not tolerance-checked.\n", self.tolerance);
        let _ = write!(s, "| dataset |");
        for r in REFERENCE_RATIOS {
            let _ = write!(s, " {:.0}% |", r * 100.0);
        }
        let _ = write!(s, "\n|---|");
        for _ in REFERENCE_RATIOS {
            let _ = write!(s, "---|");
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "| {}{} |", row.dataset, if row.checked { "" } else { "*" });
            for c in &row.cells {
                match c.ours {
                    Some(v) => {
                        let _ = write!(s, " {v:.1} ({}){} |", c.reference, if c.flagged { " !" } else { "" });
                    }
                    None => {
                        let _ = write!(s, " n/a ({}) |", c.reference);
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Side-by-side K-GBS3FCM table against the published numbers.
pub fn compare_table(best: &[BestCell], tolerance: f64) -> Comparison {
    let rows = crate::reference::TABLE
        .iter()
        .map(|(dataset, _)| {
            let checked = TOLERANCE_CHECKED.contains(dataset);
            let cells = REFERENCE_RATIOS
                .iter()
                .map(|&ratio| {
                    let reference = reference_value(*dataset, ratio).expect("grid ratio");
                    let ours = find_best(best, *dataset, Algorithm::Kgbs3fcm, ratio).map(|b| b.score.mean * 100.0);
                    let delta = ours.map(|v| v - reference);
                    let flagged = checked && delta.is_some_and(|d| d.abs() > tolerance);
                    ComparisonCell { ratio, reference, ours, delta, flagged }
                })
                .collect();
            ComparisonRow { dataset: *dataset, checked, cells }
        })
        .collect();
    Comparison { tolerance, rows }
}

fn fmt_header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn write_text_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_aggregates_csv(path: &Path, aggs: &[LambdaAggregate]) -> Result<()> {
    let header = fmt_header(&[
        "dataset", "algorithm", "ratio", "lambda1", "lambda2", "runs", "failures", "mean", "std", "non_monotone",
    ]);
    let rows: Vec<Vec<String>> = aggs
        .iter()
        .map(|a| {
            let (mean, std, runs) = a.score.map_or((f64::NAN, f64::NAN, 0), |s| (s.mean, s.std, s.runs));
            vec![
                a.dataset.to_string(),
                a.algorithm.to_string(),
                format!("{:?}", a.ratio),
                format!("{:?}", a.lambda1),
                format!("{:?}", a.lambda2),
                runs.to_string(),
                a.failures.to_string(),
                format!("{mean:?}"),
                format!("{std:?}"),
                a.non_monotone.to_string(),
            ]
        })
        .collect();
    write_text_rows(path, &header, &rows)
}

pub fn write_best_csv(path: &Path, best: &[BestCell]) -> Result<()> {
    let header = fmt_header(&["dataset", "algorithm", "ratio", "lambda1", "lambda2", "runs", "mean", "std"]);
    let rows: Vec<Vec<String>> = best
        .iter()
        .map(|b| {
            vec![
                b.dataset.to_string(),
                b.algorithm.to_string(),
                format!("{:?}", b.ratio),
                format!("{:?}", b.lambda1),
                format!("{:?}", b.lambda2),
                b.score.runs.to_string(),
                format!("{:?}", b.score.mean),
                format!("{:?}", b.score.std),
            ]
        })
        .collect();
    write_text_rows(path, &header, &rows)
}

/// One CSV per dataset: ratio, then mean and std (%) for each algorithm with results.
pub fn export_plot_data(best: &[BestCell], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for dataset in DatasetName::ALL {
        let cells: Vec<&BestCell> = best.iter().filter(|b| b.dataset == dataset).collect();
        if cells.is_empty() {
            continue;
        }
        let mut ratios: Vec<f64> = cells.iter().map(|b| b.ratio).collect();
        ratios.sort_by(f64::total_cmp);
        ratios.dedup();
        let mut header = vec!["ratio".to_string()];
        let mut present = Vec::new();
        for alg in Algorithm::ALL {
            if cells.iter().any(|b| b.algorithm == alg) {
                header.push(format!("{alg}_mean"));
                header.push(format!("{alg}_std"));
                present.push(alg);
            } else {
                log::warn!("{dataset}: no {alg} results, column omitted");
            }
        }
        let rows: Vec<Vec<f64>> = ratios
            .iter()
            .map(|&ratio| {
                let mut row = vec![ratio];
                for &alg in &present {
                    match find_best(best, dataset, alg, ratio) {
                        Some(b) => row.extend([b.score.mean * 100.0, b.score.std * 100.0]),
                        None => row.extend([f64::NAN, f64::NAN]),
                    }
                }
                row
            })
            .collect();
        let path = dir.join(format!("plot_{dataset}.csv"));
        write_table(&path, &header, &rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Header and numeric rows of a plot CSV.
pub fn read_plot_data(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(|c| c.parse::<f64>()).collect::<Result<Vec<_>, _>>()?);
    }
    Ok((header, rows))
}

/// K-GBS3FCM against every other algorithm, cell by cell at each side's best λ pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Versus {
    pub dataset: DatasetName,
    pub ratio: f64,
    pub other: Algorithm,
    /// Mean accuracy difference in points (K-GBS3FCM minus other).
    pub delta: f64,
    /// Welch t statistic of the difference.
    pub t: f64,
}

fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let (Ok(x), Ok(y)) = (aggregate(a), aggregate(b)) else { return f64::NAN };
    let se = (x.std * x.std / x.runs as f64 + y.std * y.std / y.runs as f64).sqrt();
    if se > 0.0 {
        (x.mean - y.mean) / se
    } else if x.mean == y.mean {
        0.0
    } else {
        (x.mean - y.mean).signum() * f64::INFINITY
    }
}

pub fn versus_table(best: &[BestCell]) -> Vec<Versus> {
    let mut out = Vec::new();
    for k in best.iter().filter(|b| b.algorithm == Algorithm::Kgbs3fcm) {
        for other in Algorithm::ALL.into_iter().filter(|&a| a != Algorithm::Kgbs3fcm) {
            if let Some(o) = find_best(best, k.dataset, other, k.ratio) {
                out.push(Versus {
                    dataset: k.dataset,
                    ratio: k.ratio,
                    other,
                    delta: (k.score.mean - o.score.mean) * 100.0,
                    t: welch_t(&k.accuracies, &o.accuracies),
                });
            }
        }
    }
    out
}

/// Non-monotone objective traces per (dataset, algorithm).
#[derive(Debug, Clone, PartialEq)]
pub struct DescentSummary {
    pub dataset: DatasetName,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub non_monotone: usize,
    pub max_increase: f64,
}

pub fn descent_summary(records: &[RunRecord]) -> Vec<DescentSummary> {
    let mut map: BTreeMap<(DatasetName, Algorithm), DescentSummary> = BTreeMap::new();
    for r in records {
        let Some(o) = &r.outcome else { continue };
        let e = map.entry((r.dataset, r.algorithm)).or_insert(DescentSummary {
            dataset: r.dataset,
            algorithm: r.algorithm,
            runs: 0,
            non_monotone: 0,
            max_increase: 0.0,
        });
        e.runs += 1;
        if o.max_objective_increase > DESCENT_SLACK {
            e.non_monotone += 1;
        }
        e.max_increase = e.max_increase.max(o.max_objective_increase);
    }
    map.into_values().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub comparison: Comparison,
    pub files: Vec<PathBuf>,
    pub records: usize,
}

/// Reads `out/runs` and writes every summary table under `out/summary`.
pub fn write_report(out: &Path, tolerance: f64) -> Result<ReportSummary> {
    let records = load_all_records(out)?;
    let aggs = aggregate_records(&records)?;
    let best = select_best_lambda(&aggs);
    let dir = out.join(SUMMARY_DIR);
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();

    let path = dir.join("aggregates.csv");
    write_aggregates_csv(&path, &aggs)?;
    files.push(path);

    let path = dir.join("best.csv");
    write_best_csv(&path, &best)?;
    files.push(path);

    files.extend(export_plot_data(&best, &dir)?);

    let path = dir.join("versus.csv");
    let rows: Vec<Vec<String>> = versus_table(&best)
        .iter()
        .map(|v| {
            vec![v.dataset.to_string(), format!("{:?}", v.ratio), v.other.to_string(), format!("{:?}", v.delta), format!("{:?}", v.t)]
        })
        .collect();
    write_text_rows(&path, &fmt_header(&["dataset", "ratio", "other", "delta_points", "welch_t"]), &rows)?;
    files.push(path);

    let path = dir.join("descent.csv");
    let rows: Vec<Vec<String>> = descent_summary(&records)
        .iter()
        .map(|d| {
            vec![
                d.dataset.to_string(),
                d.algorithm.to_string(),
                d.runs.to_string(),
                d.non_monotone.to_string(),
                format!("{:?}", d.max_increase),
            ]
        })
        .collect();
    write_text_rows(&path, &fmt_header(&["dataset", "algorithm", "runs", "non_monotone", "max_increase"]), &rows)?;
    files.push(path);

    let comparison = compare_table(&best, tolerance);
    let path = dir.join("comparison.md");
    fs::write(&path, comparison.to_markdown())?;
    files.push(path);

    Ok(ReportSummary { comparison, files, records: records.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::RunOutcome;

    fn record(dataset: DatasetName, ratio: f64, l1: f64, l2: f64, repeat: usize, acc: f64) -> RunRecord {
        RunRecord {
            dataset,
            algorithm: Algorithm::Kgbs3fcm,
            mislabel_ratio: ratio,
            lambda1: l1,
            lambda2: l2,
            repeat,
            seed: repeat as u64,
            outcome: Some(RunOutcome {
                accuracy: acc,
                iterations: 3,
                converged: true,
                initial_objective: 2.0,
                final_objective: 1.0,
                max_objective_increase: 0.0,
                labeled: 10,
                mislabeled: 0,
                final_mean_safety: Some(0.7),
                gate_open_iterations: Some(3),
                seconds: 0.0,
            }),
            error: None,
        }
    }

    #[test]
    fn single_pair_is_selected() {
        let recs = [record(DatasetName::Heart, 0.0, 1.0, 1.0, 0, 0.8), record(DatasetName::Heart, 0.0, 1.0, 1.0, 1, 0.8)];
        let best = select_best_lambda(&aggregate_records(&recs).unwrap());
        assert_eq!(best.len(), 1);
        assert_eq!((best[0].lambda1, best[0].lambda2), (1.0, 1.0));
        assert_eq!(best[0].score.mean, 0.8);
    }

    #[test]
    fn higher_mean_wins() {
        let recs = [record(DatasetName::Heart, 0.0, 1.0, 1.0, 0, 0.70), record(DatasetName::Heart, 0.0, 10.0, 1.0, 0, 0.72)];
        let best = select_best_lambda(&aggregate_records(&recs).unwrap());
        assert_eq!(best[0].lambda1, 10.0);
    }

    #[test]
    fn comparison_flags() {
        let recs = [record(DatasetName::Wdbc, 0.0, 1.0, 1.0, 0, 0.952), record(DatasetName::Bupa, 0.0, 1.0, 1.0, 0, 0.60)];
        let best = select_best_lambda(&aggregate_records(&recs).unwrap());
        let cmp = compare_table(&best, 2.0);
        let wdbc = cmp.rows.iter().find(|r| r.dataset == DatasetName::Wdbc).unwrap();
        let cell = &wdbc.cells[0];
        assert!((cell.delta.unwrap() + 0.8).abs() < 1e-9 && !cell.flagged);
        let bupa = cmp.rows.iter().find(|r| r.dataset == DatasetName::Bupa).unwrap();
        assert!(bupa.cells[0].flagged);
        assert_eq!(cmp.flags(), 1);
        assert!(cmp.to_markdown().contains("95.2 (96)"));
    }

    #[test]
    fn equal_values_have_zero_delta() {
        let recs = [record(DatasetName::Heart, 0.30, 1.0, 1.0, 0, 0.825)];
        let best = select_best_lambda(&aggregate_records(&recs).unwrap());
        let cmp = compare_table(&best, 3.0);
        let heart = cmp.rows.iter().find(|r| r.dataset == DatasetName::Heart).unwrap();
        assert!(heart.cells[6].delta.unwrap().abs() < 1e-12);
    }

    #[test]
    fn plot_csv_round_trips() {
        let mut recs = Vec::new();
        for (i, &r) in REFERENCE_RATIOS.iter().enumerate() {
            for rep in 0..3 {
                recs.push(record(DatasetName::Heart, r, 1.0, 1.0, rep, 0.8 - 0.01 * i as f64 + 0.003 * rep as f64));
            }
        }
        let best = select_best_lambda(&aggregate_records(&recs).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let files = export_plot_data(&best, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let (header, rows) = read_plot_data(&files[0]).unwrap();
        assert_eq!(header, vec!["ratio", "kgbs3fcm_mean", "kgbs3fcm_std"]);
        assert_eq!(rows.len(), 7);
        for (row, b) in rows.iter().zip(&best) {
            assert_eq!(row[0], b.ratio);
            assert_eq!(row[1], b.score.mean * 100.0);
            assert_eq!(row[2], b.score.std * 100.0);
        }
    }
}
