//! Summary files derived from fold results.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use confpred::evaluation::{
    render_matrices_markdown, summarize_effective_one_c, summarize_validity, write_validity, BaselineRecord,
    DatasetInfo, EffectiveOneCSummary, FoldResult,
};

use crate::error::CliError;

pub const VALIDITY_CSV: &str = "validity.csv";
pub const VALIDITY_MD: &str = "validity.md";
pub const MATRICES_MD: &str = "matrices.md";
pub const EFFECTIVE_ONE_C_MD: &str = "e_onec.md";

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|v| format!("{v:.digits$}")).unwrap_or_else(|| "n/a".to_string())
}

/// Markdown tables of E_oneC against baseline accuracy.
pub fn effective_one_c_markdown(summaries: &[EffectiveOneCSummary]) -> String {
    let mut out = String::from("# Effective singleton accuracy\n\n");
    out.push_str("| dataset | E_oneC mean | std over ncf | corr. b_acc |\n|---|---|---|---|\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "| {} | {:.3} | {:.3} | {} |",
            s.dataset,
            s.mean,
            s.mean_std,
            fmt_opt(s.corr_b_acc, 3)
        );
    }
    for s in summaries {
        let _ = write!(out, "\n## {}\n\n| classifier | E_oneC | b_acc |\n|---|---|---|\n", s.dataset);
        for c in &s.classifiers {
            let _ = writeln!(out, "| {} | {:.3} | {} |", c.classifier, c.mean_e_one_c, fmt_opt(c.baseline_accuracy, 3));
        }
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Writes the validity table, comparison matrices and, when baselines are
/// given, the E_oneC summary into `out_dir`.
pub fn write_reports(
    out_dir: &Path,
    results: &[FoldResult],
    datasets: &[DatasetInfo],
    baselines: &[BaselineRecord],
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Runtime(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::new();

    let validity = summarize_validity(results)?;
    let path = out_dir.join(VALIDITY_CSV);
    write_validity(create(&path)?, &validity)?;
    written.push(path);
    let path = out_dir.join(VALIDITY_MD);
    write_text(&path, &validity.to_markdown())?;
    written.push(path);

    let path = out_dir.join(MATRICES_MD);
    write_text(&path, &render_matrices_markdown(results, datasets)?)?;
    written.push(path);

    if !baselines.is_empty() {
        let path = out_dir.join(EFFECTIVE_ONE_C_MD);
        write_text(&path, &effective_one_c_markdown(&summarize_effective_one_c(results, baselines)))?;
        written.push(path);
    }
    Ok(written)
}
