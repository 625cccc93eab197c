//! CSV datasets: header row, feature columns, one label column.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use safefcm_core::dataset::{bupa_target, Dataset};
use safefcm_core::Matrix;

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Last,
    Index(usize),
    Name(String),
}

/// Class labels as read from a file: integers sort numerically, anything else as text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum RawLabel {
    Int(i64),
    Text(String),
}

fn parse_label(s: &str) -> RawLabel {
    match s.parse::<i64>() {
        Ok(v) => RawLabel::Int(v),
        Err(_) => match s.parse::<f64>() {
            Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => RawLabel::Int(v as i64),
            _ => RawLabel::Text(s.to_owned()),
        },
    }
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.len() < 2 || header.iter().all(String::is_empty) {
        bail!("{}: need a header with at least one feature and a label column", path.display());
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        rows.push(record.iter().map(str::to_owned).collect());
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(RawTable { header, rows })
}

fn label_index(header: &[String], label: &LabelColumn) -> Result<usize> {
    match label {
        LabelColumn::Last => Ok(header.len() - 1),
        LabelColumn::Index(i) if *i < header.len() => Ok(*i),
        LabelColumn::Index(i) => bail!("label column {i} out of range for {} columns", header.len()),
        LabelColumn::Name(name) => {
            header.iter().position(|h| h == name).with_context(|| format!("no column named {name:?}"))
        }
    }
}

fn parse_features(table: &RawTable, skip: Option<usize>, path: &Path) -> Result<Matrix> {
    let cols = table.header.len() - usize::from(skip.is_some());
    let mut data = Vec::with_capacity(table.rows.len() * cols);
    for (i, row) in table.rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            let v: f64 = cell
                .parse()
                .with_context(|| format!("{}: row {}, column {}: {cell:?} is not a number", path.display(), i + 2, j + 1))?;
            data.push(v);
        }
    }
    Ok(Matrix::from_vec(table.rows.len(), cols, data)?)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

/// Reads a labeled dataset; classes are re-indexed to `1..=c` in sorted label order.
pub fn load_csv(path: &Path, label: &LabelColumn) -> Result<Dataset> {
    let table = read_table(path)?;
    let li = label_index(&table.header, label)?;
    let features = parse_features(&table, Some(li), path)?;
    let raw: Vec<RawLabel> = table.rows.iter().map(|r| parse_label(&r[li])).collect();
    Dataset::from_raw_labels(file_stem(path), features, &raw)
        .with_context(|| format!("building dataset from {}", path.display()))
}

/// Reads the liver-disorders table: the sixth column (drinks) is turned into
/// the class by thresholding and removed from the features.
pub fn load_bupa(path: &Path) -> Result<Dataset> {
    let table = read_table(path)?;
    if table.header.len() < 6 {
        bail!("{}: expected at least 6 columns", path.display());
    }
    let all = parse_features(&table, None, path)?;
    let mut labels = Vec::with_capacity(all.rows());
    for row in all.iter_rows() {
        labels.push(bupa_target(row)?);
    }
    let keep: Vec<usize> = (0..all.cols()).filter(|&j| j != 5).collect();
    let mut data = Vec::with_capacity(all.rows() * keep.len());
    for row in all.iter_rows() {
        data.extend(keep.iter().map(|&j| row[j]));
    }
    let features = Matrix::from_vec(all.rows(), keep.len(), data)?;
    Ok(Dataset::new(file_stem(path), features, labels, 2)?)
}

/// Writes features and the one-based class as the last column.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = (1..=ds.dim()).map(|j| format!("x{j}")).collect();
    header.push("class".into());
    out.write_record(&header)?;
    for (row, y) in ds.features().iter_rows().zip(ds.ground_truth()) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(y.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a table of `f64` columns; values use the shortest round-trip formatting.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(file, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn category_labels() {
        let f = temp_csv("x,y,label\n1,2,a\n3,4,b\n5,6,a\n");
        let ds = load_csv(f.path(), &LabelColumn::Last).unwrap();
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.ground_truth(), &[1, 2, 1]);
        assert_eq!(ds.features().row(1), &[3.0, 4.0]);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let f = temp_csv("y,x\n10,0.5\n9,1.5\n");
        let ds = load_csv(f.path(), &LabelColumn::Index(0)).unwrap();
        assert_eq!(ds.ground_truth(), &[2, 1]);
        assert_eq!(ds.features().row(0), &[0.5]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(load_csv(temp_csv("").path(), &LabelColumn::Last).is_err());
        assert!(load_csv(temp_csv("x,label\n").path(), &LabelColumn::Last).is_err());
        assert!(load_csv(temp_csv("x,label\n1,a\n2,a\n").path(), &LabelColumn::Last).is_err());
        assert!(load_csv(temp_csv("x,label\nfoo,a\n2,b\n").path(), &LabelColumn::Last).is_err());
        assert!(load_csv(temp_csv("x,label\n1,a\n").path(), &LabelColumn::Name("nope".into())).is_err());
    }

    #[test]
    fn round_trip() {
        let f = temp_csv("a,b,class\n0.1,2,x\n-3.5,1e-3,y\n");
        let ds = load_csv(f.path(), &LabelColumn::Name("class".into())).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("copy.csv");
        write_dataset_csv(&ds, &out).unwrap();
        let back = load_csv(&out, &LabelColumn::Last).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.ground_truth(), ds.ground_truth());
    }

    #[test]
    fn bupa_threshold() {
        let f = temp_csv("a,b,c,d,e,drinks\n1,1,1,1,1,2.9\n2,2,2,2,2,3\n3,3,3,3,3,10\n");
        let ds = load_bupa(f.path()).unwrap();
        assert_eq!(ds.dim(), 5);
        assert_eq!(ds.ground_truth(), &[1, 2, 2]);
    }
}
