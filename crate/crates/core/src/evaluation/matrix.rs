//! Pairwise comparison matrices over {IP, IP_M, M}.
//!
//! Cell `(row, col)` holds `+` when the row setup beats the column setup and
//! `-` when it loses. A sign appears only when the difference of fold means
//! exceeds 2% of the metric's full scale or the paired t-test over folds is
//! significant; a `*` marks significance.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::stats::{paired_t_test, threshold_compare_with, Metric, Verdict, DEFAULT_ALPHA, DEFAULT_THRESHOLD};
use super::{DatasetInfo, FoldResult, NcfId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Cell {
    pub sign: Option<Sign>,
    pub starred: bool,
    /// The mean difference exceeded the threshold.
    pub exceeds_threshold: bool,
}

impl Cell {
    pub fn symbol(&self) -> &'static str {
        match (self.sign, self.starred) {
            (None, _) => "",
            (Some(Sign::Plus), false) => "+",
            (Some(Sign::Plus), true) => "+*",
            (Some(Sign::Minus), false) => "-",
            (Some(Sign::Minus), true) => "-*",
        }
    }

    fn mirrored(self) -> Self {
        Self {
            sign: self.sign.map(Sign::flip),
            ..self
        }
    }
}

/// 3x3 verdicts, rows and columns ordered as [`NcfId::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix {
    pub metric: Metric,
    pub cells: [[Cell; 3]; 3],
}

impl ComparisonMatrix {
    pub fn cell(&self, row: NcfId, col: NcfId) -> Cell {
        self.cells[row.index()][col.index()]
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().flatten().all(|c| c.sign.is_none())
    }

    pub fn has_threshold_difference(&self) -> bool {
        self.cells.iter().flatten().any(|c| c.exceeds_threshold)
    }

    pub fn has_significant_difference(&self) -> bool {
        self.cells.iter().flatten().any(|c| c.starred)
    }
}

/// Builds the matrix for fold results of a single `(dataset, classifier, ε)`
/// using the default 2% threshold and α = 0.05.
pub fn build_matrix(results: &[FoldResult], metric: Metric, n_classes: usize) -> Result<ComparisonMatrix> {
    build_matrix_with(results, metric, n_classes, DEFAULT_ALPHA, DEFAULT_THRESHOLD)
}

pub fn build_matrix_with(
    results: &[FoldResult],
    metric: Metric,
    n_classes: usize,
    alpha: f64,
    threshold: f64,
) -> Result<ComparisonMatrix> {
    // Values per setup, keyed by fold so pairs line up.
    let mut by_ncf: [BTreeMap<(usize, usize), f64>; 3] = Default::default();
    for r in results {
        let value = match metric {
            Metric::OneC => r.metrics.one_c,
            Metric::AvgC => r.metrics.avg_c,
        };
        by_ncf[r.ncf.index()].insert((r.repeat, r.fold), value);
    }
    for ncf in NcfId::ALL {
        if by_ncf[ncf.index()].is_empty() {
            return Err(Error::MissingNcf(ncf.to_string()));
        }
    }
    let keys: Vec<_> = by_ncf[0].keys().copied().collect();
    for (ncf, values) in NcfId::ALL.iter().zip(&by_ncf) {
        if values.keys().copied().ne(keys.iter().copied()) {
            return Err(Error::MissingNcf(format!("{ncf} (fold sets differ)")));
        }
    }
    let vectors: Vec<Vec<f64>> = by_ncf.iter().map(|m| m.values().copied().collect()).collect();
    let means: Vec<f64> = vectors.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();

    let mut cells = [[Cell::default(); 3]; 3];
    for r in 0..3 {
        for c in (r + 1)..3 {
            let verdict = threshold_compare_with(means[r], means[c], metric, n_classes, threshold);
            let significant = if vectors[r].len() >= 2 {
                paired_t_test(&vectors[r], &vectors[c], alpha)?.significant
            } else {
                false
            };
            let sign = match verdict {
                Verdict::Better => Some(Sign::Plus),
                Verdict::Worse => Some(Sign::Minus),
                Verdict::Neither if significant => {
                    let gain = metric.improvement(means[r], means[c]);
                    Some(if gain > 0.0 { Sign::Plus } else { Sign::Minus })
                }
                Verdict::Neither => None,
            };
            let cell = Cell {
                sign,
                starred: significant && sign.is_some(),
                exceeds_threshold: verdict != Verdict::Neither,
            };
            cells[r][c] = cell;
            cells[c][r] = cell.mirrored();
        }
    }
    Ok(ComparisonMatrix { metric, cells })
}

/// Markdown report with one table per `(dataset, classifier, metric)`.
///
/// Each table lists the 3x3 matrix for every ε; rows are the setups being
/// judged and columns the setups they are compared against.
pub fn render_matrices_markdown(results: &[FoldResult], datasets: &[DatasetInfo]) -> Result<String> {
    let mut groups: BTreeMap<(usize, usize), Vec<&FoldResult>> = BTreeMap::new();
    let mut classifier_order: Vec<&str> = Vec::new();
    let dataset_pos = |id: &str| datasets.iter().position(|d| d.dataset == id);
    for r in results {
        let Some(d) = dataset_pos(&r.dataset) else {
            return Err(Error::invalid("datasets", format!("no class count recorded for '{}'", r.dataset)));
        };
        let c = match classifier_order.iter().position(|&c| c == r.classifier) {
            Some(c) => c,
            None => {
                classifier_order.push(&r.classifier);
                classifier_order.len() - 1
            }
        };
        groups.entry((d, c)).or_default().push(r);
    }

    let mut out = String::from("# Comparison matrices\n\n");
    out.push_str("`+` row setup better than column setup, `-` worse, `*` statistically significant ");
    out.push_str("(paired t-test, alpha = 0.05); a sign needs a 2% difference or significance.\n");
    let mut current_dataset = None;
    let mut counts: BTreeMap<usize, [usize; 5]> = BTreeMap::new();
    for (&(d, c), rows) in &groups {
        let info = &datasets[d];
        if current_dataset != Some(d) {
            let _ = write!(out, "\n## {}\n", info.dataset);
            current_dataset = Some(d);
        }
        let _ = write!(out, "\n### {}\n", classifier_order[c]);
        let mut epsilons: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        epsilons.sort_by(f64::total_cmp);
        epsilons.dedup();
        for metric in [Metric::OneC, Metric::AvgC] {
            let _ = write!(out, "\n{}\n\n| ε | | ip | ip_m | m |\n|---|---|---|---|---|\n", metric.as_str());
            for &eps in &epsilons {
                let slice: Vec<FoldResult> = rows.iter().filter(|r| r.epsilon == eps).map(|r| (*r).clone()).collect();
                let m = build_matrix(&slice, metric, info.n_classes)?;
                let tally = counts.entry(d).or_default();
                let offset = if metric == Metric::OneC { 0 } else { 2 };
                tally[offset] += usize::from(m.has_threshold_difference());
                tally[offset + 1] += usize::from(m.has_significant_difference());
                if metric == Metric::OneC {
                    tally[4] += 1;
                }
                for (i, row) in NcfId::ALL.iter().enumerate() {
                    let label = if i == 0 { format!("{eps}") } else { String::new() };
                    let _ = write!(out, "| {label} | {} |", row.as_str().to_lowercase());
                    for col in NcfId::ALL {
                        let _ = write!(out, " {} |", m.cell(*row, col).symbol());
                    }
                    out.push('\n');
                }
            }
        }
    }
    if !counts.is_empty() {
        out.push_str("\n## Fraction of setups with a difference\n\n");
        out.push_str("| dataset | thres. oneC | thres. avgC | stat. oneC | stat. avgC |\n|---|---|---|---|---|\n");
        for (d, t) in &counts {
            let pct = |k: usize| 100.0 * t[k] as f64 / t[4].max(1) as f64;
            let _ = writeln!(
                out,
                "| {} | {:.1}% | {:.1}% | {:.1}% | {:.1}% |",
                datasets[*d].dataset,
                pct(0),
                pct(2),
                pct(1),
                pct(3)
            );
        }
    }
    Ok(out)
}
