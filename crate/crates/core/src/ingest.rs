//! CSV loading and preprocessing: mean imputation, one-hot encoding and
//! min-max scaling, applied in that order.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
    Ignore,
}

/// Declarative description of a CSV file.
///
/// ```toml
/// delimiter = ","
/// header = true
/// missing = ["", "?", "NA"]
/// default = "numeric"
///
/// [columns]
/// class = "label"
/// MouseID = "ignore"
/// Genotype = "categorical"
/// ```
///
/// Column keys are header names, or zero-based positions when the file has
/// no header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSchema {
    pub delimiter: char,
    pub header: bool,
    pub missing: Vec<String>,
    pub default: ColumnKind,
    pub columns: HashMap<String, ColumnKind>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            delimiter: ',',
            header: true,
            missing: vec![String::new(), "?".into(), "NA".into(), "NaN".into()],
            default: ColumnKind::Numeric,
            columns: HashMap::new(),
        }
    }
}

impl ColumnSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn with_column(mut self, key: impl Into<String>, kind: ColumnKind) -> Self {
        self.columns.insert(key.into(), kind);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self.columns.values().filter(|&&k| k == ColumnKind::Label).count()
            + usize::from(self.default == ColumnKind::Label);
        if labels > 1 {
            return Err(Error::Schema("at most one label column".into()));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Schema("delimiter must be a single ASCII character".into()));
        }
        Ok(())
    }

    fn kind_of(&self, name: &str, position: usize) -> ColumnKind {
        self.columns
            .get(name)
            .or_else(|| self.columns.get(&position.to_string()))
            .copied()
            .unwrap_or(self.default)
    }

    fn is_missing(&self, cell: &str) -> bool {
        self.missing.iter().any(|m| m == cell)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.iter().filter(|c| c.is_none()).count(),
            ColumnData::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Typed table; `None` cells are missing.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub labels: Option<Vec<String>>,
    pub rows: usize,
}

impl Table {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Table> {
    read_csv(std::fs::File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &ColumnSchema) -> Result<Table> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(schema.header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let width = if schema.header {
        rdr.headers()?.len()
    } else {
        records.first().map_or(0, |r| r.len())
    };
    let names: Vec<String> = if schema.header {
        rdr.headers()?.iter().map(str::to_string).collect()
    } else {
        (0..width).map(|i| i.to_string()).collect()
    };
    let kinds: Vec<ColumnKind> = names.iter().enumerate().map(|(i, n)| schema.kind_of(n, i)).collect();
    if kinds.iter().filter(|&&k| k == ColumnKind::Label).count() > 1 {
        return Err(Error::Schema("at most one label column".into()));
    }

    let mut columns = Vec::new();
    let mut labels = None;
    for (pos, (name, kind)) in names.iter().zip(&kinds).enumerate() {
        let cells = records.iter().map(|r| r.get(pos).unwrap_or(""));
        match kind {
            ColumnKind::Ignore => {}
            ColumnKind::Label => labels = Some(cells.map(str::to_string).collect()),
            ColumnKind::Categorical => columns.push(Column {
                name: name.clone(),
                data: ColumnData::Categorical(cells.map(|c| (!schema.is_missing(c)).then(|| c.to_string())).collect()),
            }),
            ColumnKind::Numeric => {
                let values = cells
                    .enumerate()
                    .map(|(row, c)| {
                        if schema.is_missing(c) {
                            return Ok(None);
                        }
                        match c.parse::<f64>() {
                            Ok(v) if v.is_finite() => Ok(Some(v)),
                            _ => Err(Error::ParseNumber {
                                row,
                                column: name.clone(),
                                value: c.to_string(),
                            }),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                columns.push(Column {
                    name: name.clone(),
                    data: ColumnData::Numeric(values),
                });
            }
        }
    }
    Ok(Table {
        columns,
        labels,
        rows: records.len(),
    })
}

/// Replaces missing numeric cells with the mean of the present ones.
pub fn impute_mean(mut table: Table) -> Result<Table> {
    for col in &mut table.columns {
        if let ColumnData::Numeric(values) = &mut col.data {
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            if present.len() == values.len() {
                continue;
            }
            if present.is_empty() {
                return Err(Error::Column {
                    column: col.name.clone(),
                    message: "every value is missing".into(),
                });
            }
            let mean = present.iter().sum::<f64>() / present.len() as f64;
            values.iter_mut().filter(|v| v.is_none()).for_each(|v| *v = Some(mean));
        }
    }
    Ok(table)
}

/// Expands each categorical column into one indicator column per distinct
/// value, in lexicographic order, at the column's position. A missing
/// category yields all-zero indicators.
pub fn one_hot(table: Table) -> Table {
    let mut columns = Vec::with_capacity(table.columns.len());
    for col in table.columns {
        match col.data {
            ColumnData::Numeric(_) => columns.push(col),
            ColumnData::Categorical(values) => {
                let categories: BTreeSet<&String> = values.iter().flatten().collect();
                for cat in categories {
                    columns.push(Column {
                        name: format!("{}={}", col.name, cat),
                        data: ColumnData::Numeric(
                            values
                                .iter()
                                .map(|v| Some(if v.as_ref() == Some(cat) { 1.0 } else { 0.0 }))
                                .collect(),
                        ),
                    });
                }
            }
        }
    }
    Table {
        columns,
        labels: table.labels,
        rows: table.rows,
    }
}

/// Maps every column affinely onto `[0, 1]`; constant columns become 0.
/// Label strings become integer class ids by first occurrence.
pub fn minmax_normalize(table: &Table) -> Result<Dataset> {
    if table.columns.is_empty() {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }
    let n = table.rows;
    let dim = table.columns.len();
    let mut points = vec![0.0; n * dim];
    for (j, col) in table.columns.iter().enumerate() {
        let ColumnData::Numeric(values) = &col.data else {
            return Err(Error::Column {
                column: col.name.clone(),
                message: "categorical column left; one-hot encode first".into(),
            });
        };
        let values: Vec<f64> = values
            .iter()
            .map(|v| {
                v.ok_or_else(|| Error::Column {
                    column: col.name.clone(),
                    message: "missing values left; impute first".into(),
                })
            })
            .collect::<Result<_>>()?;
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let range = hi - lo;
        for (i, &v) in values.iter().enumerate() {
            points[i * dim + j] = if range > 0.0 { (v - lo) / range } else { 0.0 };
        }
    }
    let names = table.columns.iter().map(|c| c.name.clone()).collect();
    let mut data = Dataset::new(points, n, dim)?.with_column_names(names)?;
    if let Some(labels) = &table.labels {
        let mut ids: HashMap<&str, i64> = HashMap::new();
        let truth = labels
            .iter()
            .map(|l| {
                let next = ids.len() as i64;
                *ids.entry(l.as_str()).or_insert(next)
            })
            .collect();
        data = data.with_truth(truth)?;
    }
    Ok(data)
}

/// impute -> one-hot -> min-max.
pub fn preprocess(table: Table) -> Result<Dataset> {
    minmax_normalize(&one_hot(impute_mean(table)?))
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Dataset> {
    preprocess(load_csv(path, schema)?)
}

/// Writes `# `-prefixed header lines, a column header, then one row per point
/// with the truth label (if any) in a final `label` column.
pub fn write_dataset_csv<W: Write>(mut out: W, data: &Dataset, comments: &[String]) -> Result<()> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = match data.column_names() {
        Some(names) => names.to_vec(),
        None => (0..data.dim()).map(|j| format!("x{j}")).collect(),
    };
    if data.truth().is_some() {
        header.push("label".into());
    }
    wtr.write_record(&header)?;
    for (i, row) in data.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(t) = data.truth() {
            rec.push(t[i].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a file written by [`write_dataset_csv`]: header row, numeric
/// features, optional trailing `label` column. No rescaling.
pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let has_label = headers.last().is_some_and(|h| h == "label");
    let dim = headers.len() - usize::from(has_label);
    let mut points = Vec::new();
    let mut truth = Vec::new();
    let mut n = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (j, cell) in rec.iter().take(dim).enumerate() {
            points.push(cell.parse::<f64>().map_err(|_| Error::ParseNumber {
                row,
                column: headers[j].clone(),
                value: cell.to_string(),
            })?);
        }
        if has_label {
            let cell = &rec[dim];
            truth.push(cell.parse::<i64>().map_err(|_| Error::ParseNumber {
                row,
                column: "label".into(),
                value: cell.to_string(),
            })?);
        }
        n += 1;
    }
    let mut data = Dataset::new(points, n, dim)?.with_column_names(headers[..dim].to_vec())?;
    if has_label {
        data = data.with_truth(truth)?;
    }
    Ok(data)
}
