//! Annotation, feature and split data model plus its file formats.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The set of admissible labels for an annotation task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelSpace {
    /// Nominal classes; labels are 0-based class indices.
    Categorical { class_names: Vec<String> },
    /// Likert-style scale; labels are scores in `1..=num_levels`.
    Ordinal { num_levels: u32 },
}

impl LabelSpace {
    pub fn categorical<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let space = LabelSpace::Categorical {
            class_names: names.into_iter().map(Into::into).collect(),
        };
        space.validate()?;
        Ok(space)
    }

    /// Categorical space with `k` classes named `c0..c{k-1}`.
    pub fn with_classes(k: usize) -> Result<Self> {
        Self::categorical((0..k).map(|c| format!("c{c}")))
    }

    pub fn ordinal(num_levels: u32) -> Result<Self> {
        let space = LabelSpace::Ordinal { num_levels };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LabelSpace::Categorical { class_names } => {
                if class_names.is_empty() {
                    return Err(Error::LabelSpace("no class names".into()));
                }
                let mut seen = HashSet::new();
                for name in class_names {
                    if !seen.insert(name) {
                        return Err(Error::LabelSpace(format!("duplicate class name `{name}`")));
                    }
                }
            }
            LabelSpace::Ordinal { num_levels } => {
                if *num_levels < 2 {
                    return Err(Error::LabelSpace(format!(
                        "ordinal scale needs at least 2 levels, got {num_levels}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of discrete categories: class count, or scale levels.
    pub fn num_classes(&self) -> usize {
        match self {
            LabelSpace::Categorical { class_names } => class_names.len(),
            LabelSpace::Ordinal { num_levels } => *num_levels as usize,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, LabelSpace::Ordinal { .. })
    }

    /// Checks a raw label value; the error string explains the violation.
    pub fn check(&self, label: f64) -> std::result::Result<(), String> {
        if !label.is_finite() {
            return Err("label is not finite".into());
        }
        match self {
            LabelSpace::Categorical { class_names } => {
                if label.fract() != 0.0 {
                    return Err("categorical labels must be integer class indices".into());
                }
                if label < 0.0 || label >= class_names.len() as f64 {
                    return Err(format!(
                        "class index outside 0..{}",
                        class_names.len().saturating_sub(1)
                    ));
                }
            }
            LabelSpace::Ordinal { num_levels } => {
                if label < 1.0 || label > *num_levels as f64 {
                    return Err(format!("score outside 1..={num_levels}"));
                }
            }
        }
        Ok(())
    }

    /// Maps a valid label to a class index. Ordinal scores are rounded to the
    /// nearest level, so level `l` becomes class `l - 1`.
    pub fn class_of(&self, label: f64) -> usize {
        match self {
            LabelSpace::Categorical { .. } => label as usize,
            LabelSpace::Ordinal { num_levels } => (label.round().clamp(1.0, *num_levels as f64) as usize) - 1,
        }
    }
}

/// One crowd label: dense item index, dense worker index, raw label value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub item: usize,
    pub worker: usize,
    pub label: f64,
}

/// Sparse item × worker label matrix.
///
/// Item and worker ids get dense indices in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    label_space: LabelSpace,
    item_ids: Vec<String>,
    worker_ids: Vec<String>,
    item_index: HashMap<String, usize>,
    records: Vec<Annotation>,
    by_item: Vec<Vec<usize>>,
}

/// Discrete view of an annotation set: per item, `(worker, class)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassView {
    pub num_classes: usize,
    pub num_workers: usize,
    pub per_item: Vec<Vec<(usize, usize)>>,
}

impl ClassView {
    pub fn num_items(&self) -> usize {
        self.per_item.len()
    }

    /// Vote counts per class for one item.
    pub fn votes(&self, item: usize) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &(_, c) in &self.per_item[item] {
            counts[c] += 1;
        }
        counts
    }
}

impl AnnotationSet {
    pub fn new<I, S, W>(label_space: LabelSpace, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, W, f64)>,
        S: Into<String>,
        W: Into<String>,
    {
        label_space.validate()?;
        let mut set = AnnotationSet {
            label_space,
            item_ids: Vec::new(),
            worker_ids: Vec::new(),
            item_index: HashMap::new(),
            records: Vec::new(),
            by_item: Vec::new(),
        };
        let mut worker_index: HashMap<String, usize> = HashMap::new();
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        for (item, worker, label) in rows {
            let (item, worker) = (item.into(), worker.into());
            set.label_space.check(label).map_err(|msg| Error::InvalidLabel {
                item: item.clone(),
                label: label.to_string(),
                msg,
            })?;
            let i = match set.item_index.get(&item) {
                Some(&i) => i,
                None => {
                    let i = set.item_ids.len();
                    set.item_index.insert(item.clone(), i);
                    set.item_ids.push(item.clone());
                    set.by_item.push(Vec::new());
                    i
                }
            };
            let j = match worker_index.get(&worker) {
                Some(&j) => j,
                None => {
                    let j = set.worker_ids.len();
                    worker_index.insert(worker.clone(), j);
                    set.worker_ids.push(worker.clone());
                    j
                }
            };
            if !seen.insert((i, j)) {
                return Err(Error::Duplicate { item, worker });
            }
            set.by_item[i].push(set.records.len());
            set.records.push(Annotation {
                item: i,
                worker: j,
                label,
            });
        }
        Ok(set)
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn worker_ids(&self) -> &[String] {
        &self.worker_ids
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn num_workers(&self) -> usize {
        self.worker_ids.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Annotation] {
        &self.records
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    /// N_i, the number of labels for item `i`.
    pub fn count(&self, item: usize) -> usize {
        self.by_item[item].len()
    }

    pub fn annotations_of(&self, item: usize) -> impl Iterator<Item = &Annotation> + '_ {
        self.by_item[item].iter().map(move |&r| &self.records[r])
    }

    pub fn labels_of(&self, item: usize) -> Vec<f64> {
        self.annotations_of(item).map(|a| a.label).collect()
    }

    /// Discretized per-item labels; ordinal scores become `num_levels` classes.
    pub fn class_view(&self) -> ClassView {
        ClassView {
            num_classes: self.label_space.num_classes(),
            num_workers: self.num_workers(),
            per_item: (0..self.num_items())
                .map(|i| {
                    self.annotations_of(i)
                        .map(|a| (a.worker, self.label_space.class_of(a.label)))
                        .collect()
                })
                .collect(),
        }
    }

    /// Rows as `(item_id, worker_id, label)` in insertion order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        self.records.iter().map(move |a| {
            (
                self.item_ids[a.item].as_str(),
                self.worker_ids[a.worker].as_str(),
                a.label,
            )
        })
    }

    /// Restricts the set to the given items (unknown ids are ignored).
    pub fn restrict_to<'a>(&self, items: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let keep: HashSet<&str> = items.into_iter().collect();
        AnnotationSet::new(
            self.label_space.clone(),
            self.rows()
                .filter(|(i, _, _)| keep.contains(i))
                .map(|(i, w, l)| (i.to_string(), w.to_string(), l)),
        )
    }
}

fn format_label(space: &LabelSpace, label: f64) -> String {
    match space {
        LabelSpace::Categorical { .. } => format!("{}", label as i64),
        LabelSpace::Ordinal { .. } => format!("{label}"),
    }
}

/// Reads an annotations CSV with header `item_id,worker_id,label`.
pub fn load_annotations(path: impl AsRef<Path>, label_space: &LabelSpace) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    let expected = ["item_id", "worker_id", "label"];
    if header.len() != 3 || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            msg: format!(
                "expected header `item_id,worker_id,label`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                path: path.into(),
                line,
                msg: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |msg: String| Error::Parse {
            path: path.into(),
            line,
            msg,
        };
        if record.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", record.len())));
        }
        if record[0].is_empty() || record[1].is_empty() {
            return Err(parse_err("empty item or worker id".into()));
        }
        let label: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(format!("label `{}` is not a number", &record[2])))?;
        rows.push((record[0].to_string(), record[1].to_string(), label));
    }
    AnnotationSet::new(label_space.clone(), rows)
}

pub fn write_annotations(path: impl AsRef<Path>, set: &AnnotationSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["item_id", "worker_id", "label"])?;
    for (item, worker, label) in set.rows() {
        w.write_record([item, worker, &format_label(set.label_space(), label)])?;
    }
    w.flush()?;
    Ok(())
}

/// Dense per-item feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    item_ids: Vec<String>,
    index: HashMap<String, usize>,
    rows: Array2<f64>,
}

const FEATURE_MAGIC: &[u8; 4] = b"CFM1";

impl FeatureMatrix {
    pub fn new(item_ids: Vec<String>, rows: Array2<f64>) -> Result<Self> {
        if rows.ncols() == 0 {
            return Err(Error::shape("feature dimension must be positive"));
        }
        if rows.nrows() != item_ids.len() {
            return Err(Error::shape(format!(
                "{} feature rows for {} item ids",
                rows.nrows(),
                item_ids.len()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite feature value".into()));
        }
        let mut index = HashMap::with_capacity(item_ids.len());
        for (i, id) in item_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Keys(format!("duplicate feature row for `{id}`")));
            }
        }
        Ok(FeatureMatrix { item_ids, index, rows })
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Gathers the rows of `ids` into a new matrix, in the given order.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((ids.len(), self.dim()));
        for (r, id) in ids.iter().enumerate() {
            let id = id.as_ref();
            let src = self
                .row_index(id)
                .ok_or_else(|| Error::Keys(format!("no features for item `{id}`")))?;
            out.row_mut(r).assign(&self.rows.row(src));
        }
        Ok(out)
    }
}

/// Loads features from either the binary `CFM1` format or CSV.
///
/// Binary files carry no item ids; rows are named `0..N` unless a CSV is used.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let is_binary = {
        let mut f = File::open(path)?;
        f.read(&mut head)? == 4 && &head == FEATURE_MAGIC
    };
    if is_binary {
        load_features_binary(path)
    } else {
        load_features_csv(path)
    }
}

/// Like [`load_features`], but names binary rows after `item_ids`, which
/// must list the items in file order (for annotation files written by the
/// simulator, the order in which items first appear).
pub fn load_features_for(path: impl AsRef<Path>, item_ids: &[String]) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut fm = load_features(path)?;
    let unnamed = fm.item_ids.iter().enumerate().all(|(i, id)| *id == i.to_string());
    if unnamed && !item_ids.iter().enumerate().all(|(i, id)| *id == i.to_string()) {
        if fm.len() != item_ids.len() {
            return Err(Error::shape(format!(
                "{} feature rows in {} for {} items",
                fm.len(),
                path.display(),
                item_ids.len()
            )));
        }
        fm = FeatureMatrix::new(item_ids.to_vec(), fm.rows)?;
    }
    Ok(fm)
}

fn load_features_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    let dim = header.len().saturating_sub(1);
    let header_ok = header.get(0) == Some("item_id")
        && dim > 0
        && header.iter().skip(1).enumerate().all(|(d, h)| h == format!("f{d}"));
    if !header_ok {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            msg: "expected header `item_id,f0,...,f{D-1}`".into(),
        });
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != dim + 1 {
            return Err(Error::Parse {
                path: path.into(),
                line,
                msg: format!("expected {} fields, found {}", dim + 1, record.len()),
            });
        }
        ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            values.push(field.parse::<f64>().map_err(|_| Error::Parse {
                path: path.into(),
                line,
                msg: format!("`{field}` is not a number"),
            })?);
        }
    }
    let rows = Array2::from_shape_vec((ids.len(), dim), values).map_err(|e| Error::shape(e.to_string()))?;
    FeatureMatrix::new(ids, rows)
}

fn load_features_binary(path: &Path) -> Result<FeatureMatrix> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let err = |msg: &str| Error::Parse {
        path: path.into(),
        line: 0,
        msg: msg.into(),
    };
    if bytes.len() < 12 {
        return Err(err("truncated CFM1 header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != n * d * 8 {
        return Err(err("CFM1 payload length does not match N x D"));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let rows = Array2::from_shape_vec((n, d), values).map_err(|e| Error::shape(e.to_string()))?;
    FeatureMatrix::new((0..n).map(|i| i.to_string()).collect(), rows)
}

pub fn write_features_csv(path: impl AsRef<Path>, features: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["item_id".to_string()];
    header.extend((0..features.dim()).map(|d| format!("f{d}")));
    w.write_record(&header)?;
    for (id, row) in features.item_ids.iter().zip(features.rows.rows()) {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(id.clone());
        rec.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features_binary(path: impl AsRef<Path>, features: &FeatureMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(features.len() as u32).to_le_bytes())?;
    w.write_all(&(features.dim() as u32).to_le_bytes())?;
    for v in features.rows.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Disjoint train/dev/test item id lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    /// Checks disjointness, non-emptiness, and membership in `available`.
    pub fn validate<'a>(&self, available: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let available: HashSet<&str> = available.into_iter().collect();
        let mut seen = HashSet::new();
        for (name, part) in [("train", &self.train), ("dev", &self.dev), ("test", &self.test)] {
            if part.is_empty() {
                return Err(Error::Empty(format!("{name} split")));
            }
            for id in part {
                if !seen.insert(id.as_str()) {
                    return Err(Error::Keys(format!("item `{id}` appears in more than one split")));
                }
                if !available.contains(id.as_str()) {
                    return Err(Error::Keys(format!("{name} item `{id}` is not in the dataset")));
                }
            }
        }
        Ok(())
    }

    /// Keeps only ids accepted by `keep`, preserving order.
    pub fn filtered(&self, keep: impl Fn(&str) -> bool) -> DatasetSplit {
        let f = |v: &Vec<String>| v.iter().filter(|id| keep(id)).cloned().collect();
        DatasetSplit {
            train: f(&self.train),
            dev: f(&self.dev),
            test: f(&self.test),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

/// Seeded random partition. Dev and test sizes are `floor(n * fraction)`;
/// the remainder goes to train.
pub fn random_split<S: AsRef<str>>(item_ids: &[S], fractions: (f64, f64, f64), seed: u64) -> Result<DatasetSplit> {
    let (ft, fd, fs) = fractions;
    if [ft, fd, fs].iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::config(format!(
            "split fractions must be positive, got ({ft}, {fd}, {fs})"
        )));
    }
    if (ft + fd + fs - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "split fractions must sum to 1, got {}",
            ft + fd + fs
        )));
    }
    let n = item_ids.len();
    let floor = |f: f64| (n as f64 * f + 1e-9).floor() as usize;
    let (n_dev, n_test) = (floor(fd), floor(fs));
    let n_train = n - n_dev - n_test;
    if n_train == 0 || n_dev == 0 || n_test == 0 {
        return Err(Error::Empty(format!(
            "split of {n} items gives sizes ({n_train}, {n_dev}, {n_test})"
        )));
    }
    let mut ids: Vec<String> = item_ids.iter().map(|s| s.as_ref().to_string()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = ids.split_off(n_train + n_dev);
    let dev = ids.split_off(n_train);
    Ok(DatasetSplit { train: ids, dev, test })
}
