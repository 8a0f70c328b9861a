use std::io::{self, Write};

use super::roc::RocPoint;
use crate::features::csv_field;
use crate::numfmt::fmt_sig;

const DIGITS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCount {
    pub label: String,
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldResult {
    pub correct: usize,
    pub total: usize,
}

impl FoldResult {
    pub fn accuracy(&self) -> f64 {
        percent(self.correct, self.total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `(key, value)` pairs describing the run, written verbatim.
    pub config: Vec<(String, String)>,
    pub per_class: Vec<ClassCount>,
    pub folds: Option<Vec<FoldResult>>,
    pub roc: Option<Vec<RocPoint>>,
}

pub(crate) fn percent(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

impl EvalReport {
    pub fn correct(&self) -> usize {
        self.per_class.iter().map(|c| c.correct).sum()
    }

    pub fn total(&self) -> usize {
        self.per_class.iter().map(|c| c.total).sum()
    }

    /// `100 * sum(correct) / sum(total)`.
    pub fn accuracy(&self) -> f64 {
        percent(self.correct(), self.total())
    }

    pub fn fold_accuracies(&self) -> Option<Vec<f64>> {
        self.folds
            .as_ref()
            .map(|f| f.iter().map(FoldResult::accuracy).collect())
    }

    pub fn mean_fold_accuracy(&self) -> Option<f64> {
        let acc = self.fold_accuracies()?;
        (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
    }

    /// Accuracy table: config echo (`key,value`), a blank line, then
    /// `class,correct,total,accuracy` rows closed by an `overall` row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "key,value")?;
        for (k, v) in &self.config {
            writeln!(out, "{},{}", csv_field(k), csv_field(v))?;
        }
        writeln!(out)?;
        writeln!(out, "class,correct,total,accuracy")?;
        for c in &self.per_class {
            writeln!(
                out,
                "{},{},{},{}",
                csv_field(&c.label),
                c.correct,
                c.total,
                fmt_sig(percent(c.correct, c.total), DIGITS)
            )?;
        }
        writeln!(
            out,
            "overall,{},{},{}",
            self.correct(),
            self.total(),
            fmt_sig(self.accuracy(), DIGITS)
        )?;
        if let Some(mean) = self.mean_fold_accuracy() {
            writeln!(out, "mean_fold_accuracy,,,{}", fmt_sig(mean, DIGITS))?;
        }
        Ok(())
    }

    pub fn write_fold_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "fold,correct,total,accuracy")?;
        for (i, f) in self.folds.iter().flatten().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                i + 1,
                f.correct,
                f.total,
                fmt_sig(f.accuracy(), DIGITS)
            )?;
        }
        Ok(())
    }
}

/// `threshold,far,gar` rows followed by a comment line stating how GAR is
/// computed.
pub fn write_roc_csv<W: Write>(mut out: W, points: &[RocPoint]) -> io::Result<()> {
    writeln!(out, "threshold,far,gar")?;
    for p in points {
        writeln!(
            out,
            "{},{},{}",
            fmt_sig(p.threshold, DIGITS),
            fmt_sig(p.far, DIGITS),
            fmt_sig(p.gar, DIGITS)
        )?;
    }
    writeln!(
        out,
        "# gar = accepted genuine trials / genuine trials * 100, measured directly rather than taken as 100 - far"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> EvalReport {
        EvalReport {
            config: vec![("variant".into(), "G1".into()), ("data".into(), "a,b".into())],
            per_class: vec![
                ClassCount { label: "s1".into(), correct: 2, total: 3 },
                ClassCount { label: "s2".into(), correct: 3, total: 3 },
            ],
            folds: Some(vec![FoldResult { correct: 1, total: 3 }, FoldResult { correct: 3, total: 3 }]),
            roc: None,
        }
    }

    #[test]
    fn accuracy_is_pooled() {
        let r = report();
        assert_eq!(r.correct(), 5);
        assert_eq!(r.total(), 6);
        assert!((r.accuracy() - 500.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.fold_accuracies().unwrap()[1], 100.0);
    }

    #[test]
    fn report_csv_layout() {
        let mut buf = Vec::new();
        report().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "key,value\nvariant,G1\ndata,\"a,b\"\n\nclass,correct,total,accuracy\n\
             s1,2,3,66.6667\ns2,3,3,100\noverall,5,6,83.3333\nmean_fold_accuracy,,,66.6667\n"
        );
    }

    #[test]
    fn fold_csv_layout() {
        let mut buf = Vec::new();
        report().write_fold_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "fold,correct,total,accuracy\n1,1,3,33.3333\n2,3,3,100\n"
        );
    }

    #[test]
    fn roc_csv_layout() {
        let mut buf = Vec::new();
        let pts = [RocPoint { threshold: 0.0, far: 0.0, gar: 0.0 }, RocPoint { threshold: 1.5, far: 12.5, gar: 100.0 }];
        write_roc_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("threshold,far,gar\n0,0,0\n1.5,12.5,100\n# gar"));
    }
}
