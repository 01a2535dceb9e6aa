//! Result-grid assembly and rendering (markdown table, flat CSV).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::features::FeatureKind;
use crate::ml::ClassifierKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

/// One (classifier × feature) cell: accuracy in percent, or a recorded
/// failure so the grid never silently loses a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellValue {
    Value { mean_pct: f64, std_pct: f64 },
    Failed { message: String },
}

/// Mean ± std accuracy grid with recomputed row/column averages.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    classifiers: Vec<ClassifierKind>,
    features: Vec<FeatureKind>,
    cells: BTreeMap<(ClassifierKind, FeatureKind), CellValue>,
}

/// Half-up rounding to one decimal, the convention for every rendered
/// number.
pub fn round_half_up_1(x: f64) -> f64 {
    (x * 10.0 + 0.5).floor() / 10.0
}

fn fmt1(x: f64) -> String {
    format!("{:.1}", round_half_up_1(x))
}

impl ExperimentReport {
    /// Canonical ordering is fixed: requested classifiers/features are
    /// arranged in table order regardless of the request order.
    pub fn new(classifiers: &[ClassifierKind], features: &[FeatureKind]) -> Self {
        let classifiers = ClassifierKind::ALL
            .into_iter()
            .filter(|k| classifiers.contains(k))
            .collect();
        let features = FeatureKind::ALL
            .into_iter()
            .filter(|k| features.contains(k))
            .collect();
        Self {
            classifiers,
            features,
            cells: BTreeMap::new(),
        }
    }

    pub fn classifiers(&self) -> &[ClassifierKind] {
        &self.classifiers
    }

    pub fn features(&self) -> &[FeatureKind] {
        &self.features
    }

    pub fn set_cell(&mut self, classifier: ClassifierKind, feature: FeatureKind, value: CellValue) {
        self.cells.insert((classifier, feature), value);
    }

    pub fn cell(&self, classifier: ClassifierKind, feature: FeatureKind) -> Option<&CellValue> {
        self.cells.get(&(classifier, feature))
    }

    pub fn is_complete(&self) -> bool {
        self.classifiers.iter().all(|&c| {
            self.features.iter().all(|&f| self.cells.contains_key(&(c, f)))
        })
    }

    pub fn any_failed(&self) -> bool {
        self.cells.values().any(|c| matches!(c, CellValue::Failed { .. }))
    }

    fn cell_mean(&self, c: ClassifierKind, f: FeatureKind) -> Option<f64> {
        match self.cells.get(&(c, f)) {
            Some(CellValue::Value { mean_pct, .. }) => Some(*mean_pct),
            _ => None,
        }
    }

    /// Mean over the row's cells; `None` when any cell failed.
    pub fn row_average(&self, c: ClassifierKind) -> Option<f64> {
        let means: Option<Vec<f64>> = self.features.iter().map(|&f| self.cell_mean(c, f)).collect();
        means.map(|m| m.iter().sum::<f64>() / m.len() as f64)
    }

    /// Mean over the column's cells; `None` when any cell failed.
    pub fn column_average(&self, f: FeatureKind) -> Option<f64> {
        let means: Option<Vec<f64>> = self
            .classifiers
            .iter()
            .map(|&c| self.cell_mean(c, f))
            .collect();
        means.map(|m| m.iter().sum::<f64>() / m.len() as f64)
    }

    /// Highest-mean cell; ties resolve to table order.
    pub fn best_cell(&self) -> Option<(ClassifierKind, FeatureKind, f64)> {
        let mut best: Option<(ClassifierKind, FeatureKind, f64)> = None;
        for &c in &self.classifiers {
            for &f in &self.features {
                if let Some(mean) = self.cell_mean(c, f) {
                    if best.as_ref().is_none_or(|b| mean > b.2) {
                        best = Some((c, f, mean));
                    }
                }
            }
        }
        best
    }

    fn ensure_complete(&self) -> Result<(), EvalError> {
        if !self.is_complete() {
            let missing: Vec<String> = self
                .classifiers
                .iter()
                .flat_map(|&c| {
                    self.features
                        .iter()
                        .filter(move |&&f| !self.cells.contains_key(&(c, f)))
                        .map(move |&f| format!("{c}×{f}"))
                })
                .collect();
            return Err(EvalError::Report(format!(
                "incomplete grid, missing {}",
                missing.join(", ")
            )));
        }
        Ok(())
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, EvalError> {
        match format {
            ReportFormat::Markdown => self.render_markdown(),
            ReportFormat::Csv => self.render_csv(),
        }
    }

    /// Table-shaped markdown: one row per classifier, one column per
    /// feature, a rightmost per-classifier average column and a bottom
    /// per-feature average row. The best cell is bold.
    pub fn render_markdown(&self) -> Result<String, EvalError> {
        self.ensure_complete()?;
        let best = self.best_cell();
        let mut out = String::new();
        out.push_str("| Classifier |");
        for f in &self.features {
            out.push_str(&format!(" {} |", feature_heading(*f)));
        }
        out.push_str(" Average over features |\n");
        out.push_str("|---|");
        for _ in &self.features {
            out.push_str("---|");
        }
        out.push_str("---|\n");

        for &c in &self.classifiers {
            out.push_str(&format!("| {} |", c.display_name()));
            for &f in &self.features {
                let text = match self.cells.get(&(c, f)).expect("complete grid") {
                    CellValue::Value { mean_pct, std_pct } => {
                        format!("{}±{}", fmt1(*mean_pct), fmt1(*std_pct))
                    }
                    CellValue::Failed { message } => format!("failed: {message}"),
                };
                let is_best = best.is_some_and(|(bc, bf, _)| bc == c && bf == f);
                if is_best {
                    out.push_str(&format!(" **{text}** |"));
                } else {
                    out.push_str(&format!(" {text} |"));
                }
            }
            match self.row_average(c) {
                Some(avg) => out.push_str(&format!(" {} |\n", fmt1(avg))),
                None => out.push_str(" -- |\n"),
            }
        }

        out.push_str("| Average over classifiers |");
        for &f in &self.features {
            match self.column_average(f) {
                Some(avg) => out.push_str(&format!(" {} |", fmt1(avg))),
                None => out.push_str(" -- |"),
            }
        }
        out.push_str(" -- |\n");
        Ok(out)
    }

    /// Flat cells, `classifier,feature,mean,std`; failed cells keep their
    /// row with empty numbers.
    pub fn render_csv(&self) -> Result<String, EvalError> {
        self.ensure_complete()?;
        let mut out = String::from("classifier,feature,mean,std\n");
        for &c in &self.classifiers {
            for &f in &self.features {
                match self.cells.get(&(c, f)).expect("complete grid") {
                    CellValue::Value { mean_pct, std_pct } => {
                        out.push_str(&format!("{c},{f},{},{}\n", fmt1(*mean_pct), fmt1(*std_pct)));
                    }
                    CellValue::Failed { .. } => {
                        out.push_str(&format!("{c},{f},,\n"));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn feature_heading(f: FeatureKind) -> &'static str {
    match f {
        FeatureKind::Spectrogram => "Spectrogram",
        FeatureKind::MelSpectrogram => "Mel-spectrogram",
        FeatureKind::Mfcc => "MFCCs",
    }
}
