//! Classification reports: per-class precision/recall/F1/support,
//! accuracy and rank-based ROC-AUC.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::TargetKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_lengths(labels: &[u8], scores: &[f64]) -> Result<()> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch { left: labels.len(), right: scores.len() });
    }
    Ok(())
}

/// Counts with "predicted positive" meaning `p >= threshold`.
pub fn confusion(labels: &[u8], probs: &[f64], threshold: f64) -> Result<Confusion> {
    check_lengths(labels, probs)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} outside [0, 1]")));
    }
    let mut c = Confusion::default();
    for (&y, &p) in labels.iter().zip(probs) {
        match (y == 1, p >= threshold) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Mann-Whitney AUC with midranks for tied scores.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    check_lengths(labels, scores)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum_pos += midrank * pos_in_group as f64;
        i = j;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Index 0 treats class 0 as positive, index 1 class 1.
    pub per_class: [ClassMetrics; 2],
    pub accuracy: f64,
    pub roc_auc: f64,
    pub threshold: f64,
    pub target: TargetKind,
    pub model_tag: String,
    pub confusion: Confusion,
    /// Metrics that hit a zero denominator and were reported as 0.
    #[serde(default)]
    pub zero_division: Vec<String>,
}

fn ratio(num: usize, den: usize, name: String, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(name);
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Full report at `threshold`.
pub fn report(
    labels: &[u8],
    probs: &[f64],
    threshold: f64,
    target: TargetKind,
    model_tag: impl Into<String>,
) -> Result<EvalReport> {
    let c = confusion(labels, probs, threshold)?;
    let auc = roc_auc(labels, probs)?;
    let mut flags = Vec::new();
    // class 1 as positive: (tp, fp, fn); class 0 as positive: (tn, fn, fp)
    let sides = [(c.tn, c.fn_, c.fp), (c.tp, c.fp, c.fn_)];
    let mut per_class = [ClassMetrics::default(); 2];
    for (k, &(hit, false_alarm, miss)) in sides.iter().enumerate() {
        let precision = ratio(hit, hit + false_alarm, format!("class{k}.precision"), &mut flags);
        let recall = ratio(hit, hit + miss, format!("class{k}.recall"), &mut flags);
        if precision + recall == 0.0 {
            flags.push(format!("class{k}.f1"));
        }
        per_class[k] = ClassMetrics { precision, recall, f1: harmonic(precision, recall), support: hit + miss };
    }
    Ok(EvalReport {
        per_class,
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        roc_auc: auc,
        threshold,
        target,
        model_tag: model_tag.into(),
        confusion: c,
        zero_division: flags,
    })
}

impl EvalReport {
    /// F1 of whichever class has fewer supporting rows (class 1 on ties).
    pub fn f1_minority(&self) -> f64 {
        if self.per_class[0].support < self.per_class[1].support {
            self.per_class[0].f1
        } else {
            self.per_class[1].f1
        }
    }
}

/// Renders reports side by side: a `Class(0)` block, a `Class(1)` block,
/// then accuracy and ROC_AUC, one column per report.
pub fn render_table(columns: &[(&str, &EvalReport)]) -> String {
    let labels =
        ["Metric", "Class(0)", "Class(1)", "Precision", "Recall", "F1-Score", "Support", "Accuracy", "ROC_AUC"];
    let lw = labels.iter().map(|l| l.len()).max().unwrap_or(0) + 2;
    let widths: Vec<usize> = columns.iter().map(|(h, _)| h.len().max(8)).collect();
    let total = lw + widths.iter().map(|w| w + 2).sum::<usize>();
    let rule = "-".repeat(total);

    let mut out = String::new();
    let mut line = |label: &str, cells: Vec<String>| {
        let mut s = format!("{label:<lw$}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(s, "  {cell:>w$}");
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line("Metric", columns.iter().map(|(h, _)| h.to_string()).collect());
    let blank = || vec![String::new(); columns.len()];
    let mut rows: Vec<(&str, Vec<String>)> = Vec::new();
    rows.push(("-", blank()));
    for k in 0..2 {
        let m = |f: fn(&ClassMetrics) -> String| columns.iter().map(|(_, r)| f(&r.per_class[k])).collect();
        rows.push((if k == 0 { "Class(0)" } else { "Class(1)" }, blank()));
        rows.push(("Precision", m(|c| format!("{:.2}", c.precision))));
        rows.push(("Recall", m(|c| format!("{:.2}", c.recall))));
        rows.push(("F1-Score", m(|c| format!("{:.2}", c.f1))));
        rows.push(("Support", m(|c| c.support.to_string())));
        rows.push(("-", blank()));
    }
    rows.push(("Accuracy", columns.iter().map(|(_, r)| format!("{:.2}%", r.accuracy * 100.0)).collect()));
    rows.push(("ROC_AUC", columns.iter().map(|(_, r)| format!("{:.3}", r.roc_auc)).collect()));
    for (label, cells) in rows {
        if label == "-" {
            line(&rule, vec![]);
        } else {
            line(label, cells);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_basics_and_boundaries() {
        let c = confusion(&[1, 0], &[0.9, 0.1], 0.5).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (1, 0, 1, 0));
        let all_pos = confusion(&[1, 0, 0], &[0.0, 0.2, 0.99], 0.0).unwrap();
        assert_eq!(all_pos.tp + all_pos.fp, 3);
        let all_neg = confusion(&[1, 0, 0], &[0.0, 0.2, 0.99], 1.0).unwrap();
        assert_eq!(all_neg.tn + all_neg.fn_, 3);
        assert!(matches!(confusion(&[1], &[0.1, 0.2], 0.5), Err(Error::LengthMismatch { .. })));
        // closed boundary
        assert_eq!(confusion(&[1], &[0.5], 0.5).unwrap().tp, 1);
    }

    #[test]
    fn precision_recall_f1_formulas() {
        // tp=3 fp=1 fn=2 tn=4
        let labels = [1, 1, 1, 0, 1, 1, 0, 0, 0, 0];
        let probs = [0.9, 0.8, 0.7, 0.6, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1];
        let r = report(&labels, &probs, 0.5, TargetKind::Pedestrian, "t").unwrap();
        let c1 = r.per_class[1];
        assert!((c1.precision - 0.75).abs() < 1e-15);
        assert!((c1.recall - 0.6).abs() < 1e-15);
        assert!((c1.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_class[0].support + c1.support, 10);
        assert!((r.accuracy - 0.7).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let r = report(&[0, 1, 1, 0], &[0.1, 0.9, 0.8, 0.3], 0.5, TargetKind::OverSerious, "p").unwrap();
        for c in r.per_class {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.roc_auc, 1.0);
        assert!(r.zero_division.is_empty());
    }

    #[test]
    fn zero_division_flagged_not_nan() {
        let r = report(&[0, 1], &[0.1, 0.2], 0.5, TargetKind::Pedestrian, "z").unwrap();
        assert_eq!(r.per_class[1].precision, 0.0);
        assert!(r.zero_division.contains(&"class1.precision".to_string()));
        assert!(r.per_class.iter().all(|c| c.f1.is_finite()));
    }

    #[test]
    fn auc_fixtures() {
        assert_eq!(roc_auc(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).unwrap(), 0.75);
        assert_eq!(roc_auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0, 1, 0, 1], &[0.5; 4]).unwrap(), 0.5);
        assert!(matches!(roc_auc(&[1, 1], &[0.1, 0.2]), Err(Error::SingleClassLabels)));
    }
}
