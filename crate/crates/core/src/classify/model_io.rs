//! Line-oriented text format for trained models.
//!
//! ```text
//! nblgc-model 1
//! kind knn
//! neighbors_k 1
//! distance log
//! dimension 441
//! classes 2 s1 s2
//! samples 14
//! sample s1 <v0> <v1> ...
//! ```
//!
//! SVM files carry `degree`, `offset`, `c`, `tol` and `max_passes` instead of
//! the KNN fields, followed by `machines <n>` and, per machine, a
//! `machine <positive> <negative> <bias> <n_sv>` line and `n_sv` lines of
//! `sv <coefficient> <v0> ...`. Reals use 17 significant digits so a reloaded
//! model predicts identically. Labels are percent-escaped for whitespace.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::{Distance, KnnModel, LabeledSample, SvmModel, SvmParams};
use super::svm::BinaryMachine;
use crate::numfmt::fmt_exact;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "nblgc-model";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("model file line {line}: {message}")]
pub struct ModelFormatError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnModel),
    Svm(SvmModel),
}

fn escape_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for ch in label.chars() {
        match ch {
            '%' => out.push_str("%25"),
            c if c.is_whitespace() => {
                let mut buf = [0u8; 4];
                for b in c.encode_utf8(&mut buf).bytes() {
                    let _ = write!(out, "%{b:02X}");
                }
            }
            c => out.push(c),
        }
    }
    if out.is_empty() {
        out.push_str("%00");
    }
    out
}

fn unescape_label(s: &str) -> Option<String> {
    if s == "%00" {
        return Some(String::new());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

fn push_reals(out: &mut String, values: &[f64]) {
    for v in values {
        out.push(' ');
        out.push_str(&fmt_exact(*v));
    }
}

pub fn write_model(model: &Model) -> String {
    let mut out = format!("{MAGIC} {FORMAT_VERSION}\n");
    match model {
        Model::Knn(m) => {
            let _ = writeln!(out, "kind knn");
            let _ = writeln!(out, "neighbors_k {}", m.neighbors_k());
            let _ = writeln!(out, "distance {}", m.distance());
            let _ = writeln!(out, "dimension {}", m.dim());
            let mut classes: Vec<&str> = m.training().iter().map(|s| s.label.as_str()).collect();
            classes.sort();
            classes.dedup();
            write_classes(&mut out, classes.iter().copied());
            let _ = writeln!(out, "samples {}", m.training().len());
            for s in m.training() {
                out.push_str("sample ");
                out.push_str(&escape_label(&s.label));
                push_reals(&mut out, &s.vector);
                out.push('\n');
            }
        }
        Model::Svm(m) => {
            let p = &m.params;
            let _ = writeln!(out, "kind svm");
            let _ = writeln!(out, "degree {}", p.degree);
            let _ = writeln!(out, "offset {}", fmt_exact(p.offset));
            let _ = writeln!(out, "c {}", fmt_exact(p.c));
            let _ = writeln!(out, "tol {}", fmt_exact(p.tol));
            let _ = writeln!(out, "max_passes {}", p.max_passes);
            let _ = writeln!(out, "dimension {}", m.dim);
            write_classes(&mut out, m.classes.iter().map(String::as_str));
            let _ = writeln!(out, "machines {}", m.machines.len());
            for mach in &m.machines {
                let _ = writeln!(
                    out,
                    "machine {} {} {} {}",
                    mach.positive,
                    mach.negative,
                    fmt_exact(mach.bias),
                    mach.support_vectors.len()
                );
                for (sv, coef) in mach.support_vectors.iter().zip(&mach.coefficients) {
                    out.push_str("sv ");
                    out.push_str(&fmt_exact(*coef));
                    push_reals(&mut out, sv);
                    out.push('\n');
                }
            }
        }
    }
    out
}

fn write_classes<'a>(out: &mut String, classes: impl ExactSizeIterator<Item = &'a str>) {
    let _ = write!(out, "classes {}", classes.len());
    for c in classes {
        out.push(' ');
        out.push_str(&escape_label(c));
    }
    out.push('\n');
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> ModelFormatError {
        ModelFormatError {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_fields(&mut self, key: &str) -> Result<Vec<&'a str>, ModelFormatError> {
        let (i, text) = self
            .inner
            .next()
            .ok_or_else(|| self.err(format!("unexpected end of file, expected '{key}'")))?;
        self.line = i + 1;
        let mut fields = text.split_ascii_whitespace();
        match fields.next() {
            Some(k) if k == key => Ok(fields.collect()),
            other => Err(self.err(format!("expected '{key}', found '{}'", other.unwrap_or("")))),
        }
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<T, ModelFormatError> {
        let fields = self.next_fields(key)?;
        match fields.as_slice() {
            [v] => v.parse().map_err(|_| self.err(format!("invalid value for '{key}'"))),
            _ => Err(self.err(format!("'{key}' takes exactly one value"))),
        }
    }

    fn parse<T: FromStr>(&self, s: &str, what: &str) -> Result<T, ModelFormatError> {
        s.parse().map_err(|_| self.err(format!("invalid {what} '{s}'")))
    }

    fn reals(&self, fields: &[&str], dim: usize) -> Result<Vec<f64>, ModelFormatError> {
        if fields.len() != dim {
            return Err(self.err(format!("expected {dim} values, found {}", fields.len())));
        }
        fields.iter().map(|f| self.parse::<f64>(f, "real")).collect()
    }

    fn label(&self, s: &str) -> Result<String, ModelFormatError> {
        unescape_label(s).ok_or_else(|| self.err(format!("invalid label '{s}'")))
    }
}

pub fn read_model(text: &str) -> Result<Model, ModelFormatError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let version: u32 = lines.value(MAGIC)?;
    if version != FORMAT_VERSION {
        return Err(lines.err(format!("unsupported format version {version}")));
    }
    let kind: String = lines.value("kind")?;
    match kind.as_str() {
        "knn" => {
            let neighbors_k: usize = lines.value("neighbors_k")?;
            let distance: String = lines.value("distance")?;
            let distance: Distance = distance.parse().map_err(|e: String| lines.err(e))?;
            let dim: usize = lines.value("dimension")?;
            let _classes = read_classes(&mut lines)?;
            let n: usize = lines.value("samples")?;
            let mut training = Vec::with_capacity(n);
            for _ in 0..n {
                let fields = lines.next_fields("sample")?;
                let (label, values) = fields
                    .split_first()
                    .ok_or_else(|| lines.err("sample without label"))?;
                training.push(LabeledSample::new(lines.reals(values, dim)?, lines.label(label)?));
            }
            KnnModel::new(training, neighbors_k, distance)
                .map(Model::Knn)
                .map_err(|e| lines.err(e.to_string()))
        }
        "svm" => {
            let params = SvmParams {
                degree: lines.value("degree")?,
                offset: lines.value("offset")?,
                c: lines.value("c")?,
                tol: lines.value("tol")?,
                max_passes: lines.value("max_passes")?,
            };
            params.validate().map_err(|e| lines.err(e.to_string()))?;
            let dim: usize = lines.value("dimension")?;
            let classes = read_classes(&mut lines)?;
            let n: usize = lines.value("machines")?;
            let mut machines = Vec::with_capacity(n);
            for _ in 0..n {
                let fields = lines.next_fields("machine")?;
                let [pos, neg, bias, count] = fields.as_slice() else {
                    return Err(lines.err("machine line needs 4 fields"));
                };
                let positive: usize = lines.parse(pos, "class index")?;
                let negative: usize = lines.parse(neg, "class index")?;
                if positive >= classes.len() || negative >= classes.len() {
                    return Err(lines.err("class index out of range"));
                }
                let bias: f64 = lines.parse(bias, "bias")?;
                let count: usize = lines.parse(count, "support vector count")?;
                let mut support_vectors = Vec::with_capacity(count);
                let mut coefficients = Vec::with_capacity(count);
                for _ in 0..count {
                    let fields = lines.next_fields("sv")?;
                    let (coef, values) = fields
                        .split_first()
                        .ok_or_else(|| lines.err("sv without coefficient"))?;
                    coefficients.push(lines.parse(coef, "coefficient")?);
                    support_vectors.push(lines.reals(values, dim)?);
                }
                machines.push(BinaryMachine {
                    positive,
                    negative,
                    support_vectors,
                    coefficients,
                    bias,
                });
            }
            Ok(Model::Svm(SvmModel {
                classes,
                params,
                dim,
                machines,
            }))
        }
        other => Err(lines.err(format!("unknown model kind '{other}'"))),
    }
}

fn read_classes(lines: &mut Lines<'_>) -> Result<Vec<String>, ModelFormatError> {
    let fields = lines.next_fields("classes")?;
    let (count, names) = fields
        .split_first()
        .ok_or_else(|| lines.err("classes line needs a count"))?;
    let count: usize = lines.parse(count, "class count")?;
    if names.len() != count {
        return Err(lines.err(format!("expected {count} class names, found {}", names.len())));
    }
    names.iter().map(|n| lines.label(n)).collect()
}
