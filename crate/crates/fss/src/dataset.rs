//! Tabular datasets with a nominal class column.
//!
//! Input files use a plain CSV profile: UTF-8, a header line with attribute
//! names, comma separators, no quoting, no missing values, class in the last
//! column. A non-class column is numeric when every value parses as a finite
//! decimal number; otherwise it is nominal with values in order of first
//! appearance. The class column is always nominal.

use std::fmt;
use std::path::Path;

use islandga_core::Genome;

use crate::error::{FssError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    Numeric,
    /// Declared values; instance values index into this list.
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Nominal(values.into_iter().map(Into::into).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Numeric(f64),
    Nominal(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub values: Vec<Value>,
    /// Index into the dataset's class values.
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    attributes: Vec<Attribute>,
    class_name: String,
    classes: Vec<String>,
    instances: Vec<Instance>,
}

impl Dataset {
    /// Builds a dataset, checking every instance against the schema.
    pub fn new(
        attributes: Vec<Attribute>,
        class_name: impl Into<String>,
        classes: Vec<String>,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(FssError::Schema("the class attribute needs at least one value".into()));
        }
        for (n, inst) in instances.iter().enumerate() {
            if inst.values.len() != attributes.len() {
                return Err(FssError::Schema(format!(
                    "instance {n} has {} values for {} attributes",
                    inst.values.len(),
                    attributes.len()
                )));
            }
            if inst.class >= classes.len() {
                return Err(FssError::Schema(format!("instance {n} has an undeclared class")));
            }
            for (a, v) in attributes.iter().zip(&inst.values) {
                let ok = match (&a.kind, v) {
                    (AttributeKind::Numeric, Value::Numeric(x)) => x.is_finite(),
                    (AttributeKind::Nominal(vals), Value::Nominal(i)) => *i < vals.len(),
                    _ => false,
                };
                if !ok {
                    return Err(FssError::Schema(format!(
                        "instance {n} has an invalid value for `{}`",
                        a.name
                    )));
                }
            }
        }
        Ok(Dataset {
            attributes,
            class_name: class_name.into(),
            classes,
            instances,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Number of non-class attributes.
    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Same schema, different instances.
    pub fn with_instances(&self, instances: Vec<Instance>) -> Self {
        Dataset {
            attributes: self.attributes.clone(),
            class_name: self.class_name.clone(),
            classes: self.classes.clone(),
            instances,
        }
    }

    pub fn same_schema(&self, other: &Dataset) -> bool {
        self.attributes == other.attributes && self.classes == other.classes
    }
}

/// Bit `i` keeps attribute `i`. Unlike a [`Genome`] it may be empty, for
/// datasets that have only the class column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeMask(pub Vec<bool>);

impl AttributeMask {
    pub fn all(m: usize) -> Self {
        AttributeMask(vec![true; m])
    }

    pub fn none(m: usize) -> Self {
        AttributeMask(vec![false; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Indices of kept attributes.
    pub fn kept(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

impl From<&Genome> for AttributeMask {
    fn from(g: &Genome) -> Self {
        AttributeMask(g.bits().to_vec())
    }
}

impl fmt::Display for AttributeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| FssError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text)
}

fn parse_decimal(s: &str) -> Option<f64> {
    let looks_decimal = s
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'-' | b'+' | b'.' | b'e' | b'E'));
    s.parse::<f64>().ok().filter(|x| looks_decimal && x.is_finite())
}

/// Parses the CSV profile described in the module docs.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty());
    let (header_line, header) = lines.next().ok_or(FssError::Parse {
        line: 1,
        reason: "missing header".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if let Some(i) = names.iter().position(String::is_empty) {
        return Err(FssError::Parse {
            line: header_line,
            reason: format!("column {} has an empty name", i + 1),
        });
    }
    let width = names.len();

    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(FssError::Parse {
                line,
                reason: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        if let Some(i) = fields.iter().position(|f| f.is_empty()) {
            return Err(FssError::Parse {
                line,
                reason: format!("missing value in column `{}`", names[i]),
            });
        }
        rows.push((line, fields));
    }
    if rows.is_empty() {
        return Err(FssError::Parse {
            line: header_line,
            reason: "no instances".into(),
        });
    }

    let mut attributes = Vec::with_capacity(width - 1);
    for (c, name) in names.iter().take(width - 1).enumerate() {
        let numeric = rows.iter().all(|(_, f)| parse_decimal(f[c]).is_some());
        let kind = if numeric {
            AttributeKind::Numeric
        } else {
            AttributeKind::Nominal(distinct(rows.iter().map(|(_, f)| f[c])))
        };
        attributes.push(Attribute {
            name: name.clone(),
            kind,
        });
    }
    let classes = distinct(rows.iter().map(|(_, f)| f[width - 1]));

    let instances = rows
        .iter()
        .map(|(_, fields)| {
            let values = attributes
                .iter()
                .zip(fields)
                .map(|(a, f)| match &a.kind {
                    AttributeKind::Numeric => Value::Numeric(parse_decimal(f).expect("checked")),
                    AttributeKind::Nominal(vals) => Value::Nominal(index_of(vals, f)),
                })
                .collect();
            Instance {
                values,
                class: index_of(&classes, fields[width - 1]),
            }
        })
        .collect();
    Dataset::new(attributes, names[width - 1].clone(), classes, instances)
}

fn distinct<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in values {
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    }
    out
}

fn index_of(values: &[String], v: &str) -> usize {
    values.iter().position(|x| x == v).expect("value collected")
}

/// First `ceil(n * ratio)` instances train, the rest test. No shuffling.
pub fn split_train_test(data: &Dataset, ratio: f64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(FssError::Split(format!("ratio {ratio} is outside (0, 1)")));
    }
    let n = data.len();
    let cut = ((n as f64) * ratio - 1e-9).ceil().max(0.0) as usize;
    let cut = cut.min(n);
    if cut == 0 || cut == n {
        return Err(FssError::Split(format!(
            "ratio {ratio} on {n} instances leaves an empty side ({cut}/{})",
            n - cut
        )));
    }
    let (train, test) = data.instances.split_at(cut);
    Ok((data.with_instances(train.to_vec()), data.with_instances(test.to_vec())))
}

/// Keeps the attributes selected by `mask` plus the class.
pub fn project(data: &Dataset, mask: &AttributeMask) -> Result<Dataset> {
    if mask.len() != data.num_attributes() {
        return Err(FssError::Schema(format!(
            "mask of length {} for {} attributes",
            mask.len(),
            data.num_attributes()
        )));
    }
    let keep: Vec<usize> = mask.kept().collect();
    let attributes = keep.iter().map(|&i| data.attributes[i].clone()).collect();
    let instances = data
        .instances
        .iter()
        .map(|inst| Instance {
            values: keep.iter().map(|&i| inst.values[i]).collect(),
            class: inst.class,
        })
        .collect();
    Ok(Dataset {
        attributes,
        class_name: data.class_name.clone(),
        classes: data.classes.clone(),
        instances,
    })
}
