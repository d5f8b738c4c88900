//! Renders run artifacts into delimited tables and plot-ready data files.
//! Output is byte-deterministic for a given artifact set.

use crate::error::{FdaError, Result};
use crate::io::write_atomic;
use crate::metrics::MetricsReport;
use crate::pipeline::{RunArtifacts, FASHION_CLASS_NAMES};
use std::fmt::Write as _;
use std::path::Path;

/// Formats the confusion matrix in the published layout: predictions on the
/// rows, targets on the columns, percentages normalized per target column.
pub fn render_confusion_percent(report: &MetricsReport, class_names: &[&str]) -> String {
    let pct = report.confusion_percent();
    let k = report.classes;
    let mut out = String::new();
    out.push_str("PREDICT.\\TARGET");
    for t in 0..k {
        let name = class_names.get(t).copied().unwrap_or("?");
        write!(out, "\t{name}").expect("string write");
    }
    out.push('\n');
    for p in 0..k {
        let name = class_names.get(p).copied().unwrap_or("?");
        out.push_str(name);
        for t in 0..k {
            write!(out, "\t{:.1}%", pct[(p, t)]).expect("string write");
        }
        out.push('\n');
    }
    out
}

/// Per-class and macro metrics as a tab-separated table.
pub fn render_metrics(report: &MetricsReport, class_names: &[&str]) -> String {
    let mut out = String::new();
    out.push_str("class\taccuracy\tprecision\trecall\tf1\tsuccess_rate\n");
    for (c, m) in report.per_class.iter().enumerate() {
        let name = class_names.get(c).copied().unwrap_or("?");
        let s = report
            .success_rates
            .as_ref()
            .map(|s| format!("{}", s[c]))
            .unwrap_or_else(|| "-".to_string());
        writeln!(
            out,
            "{name}\t{}\t{}\t{}\t{}\t{s}",
            m.accuracy, m.precision, m.recall, m.f1
        )
        .expect("string write");
    }
    writeln!(
        out,
        "OVERALL\t{}\t{}\t{}\t{}\t-",
        report.overall_accuracy, report.macro_precision, report.macro_recall, report.macro_f1
    )
    .expect("string write");
    out
}

fn class_names_for(count: usize) -> Vec<&'static str> {
    if count == FASHION_CLASS_NAMES.len() {
        FASHION_CLASS_NAMES.to_vec()
    } else {
        // generic names beyond the Fashion-MNIST setup
        static GENERIC: [&str; 16] = [
            "class0", "class1", "class2", "class3", "class4", "class5", "class6", "class7",
            "class8", "class9", "class10", "class11", "class12", "class13", "class14", "class15",
        ];
        GENERIC[..count.min(16)].to_vec()
    }
}

/// Writes every report file for a finished run into `out_dir`.
pub fn report(artifacts: &RunArtifacts, out_dir: &Path) -> Result<()> {
    if artifacts.classes.is_empty() {
        return Err(FdaError::MissingArtifact("class models".to_string()));
    }
    if artifacts.test_report.confusion.sum() == 0 {
        return Err(FdaError::MissingArtifact("test evaluation".to_string()));
    }
    let names = class_names_for(artifacts.test_report.classes);

    write_atomic(
        &out_dir.join("confusion_test.txt"),
        render_confusion_percent(&artifacts.test_report, &names).as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("confusion_validation.txt"),
        render_confusion_percent(&artifacts.validation_report, &names).as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("metrics_test.tsv"),
        render_metrics(&artifacts.test_report, &names).as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("metrics_validation.tsv"),
        render_metrics(&artifacts.validation_report, &names).as_bytes(),
    )?;

    // knot histories for stopping-rule plots
    for class in &artifacts.classes {
        let mut out = String::from("step\tknot\tamse\teps\n");
        for (i, s) in class.centered_selection.history.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", i + 1, s.knot, s.amse, s.eps).expect("string write");
        }
        write_atomic(
            &out_dir.join(format!("knots_class_{}.tsv", class.label)),
            out.as_bytes(),
        )?;
    }

    // eigenvalue scree data
    for class in &artifacts.classes {
        let mut out = String::from("component\teigenvalue\n");
        for (i, l) in class.model.eigvals.iter().enumerate() {
            writeln!(out, "{}\t{}", i + 1, l).expect("string write");
        }
        write_atomic(
            &out_dir.join(format!("scree_class_{}.tsv", class.label)),
            out.as_bytes(),
        )?;
    }

    // search trajectory
    {
        let mut out = String::from("step\taverage_accuracy\tcounts\n");
        for (i, s) in artifacts.search.trajectory.iter().enumerate() {
            let counts: Vec<String> = s.counts.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}\t{}\t{}", i, s.average_accuracy, counts.join(","))
                .expect("string write");
        }
        write_atomic(&out_dir.join("search_trajectory.tsv"), out.as_bytes())?;
    }

    // optimal counts and per-class rates
    {
        let mut out =
            String::from("class\tn_opt\taccuracy_rate\tsuccess_rate\trelative_distance\n");
        for (c, &n) in artifacts.search.n_opt.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                names.get(c).copied().unwrap_or("?"),
                n,
                artifacts
                    .search
                    .accuracy_rates
                    .get(c)
                    .copied()
                    .unwrap_or(0.0),
                artifacts
                    .search
                    .success_rates
                    .get(c)
                    .copied()
                    .unwrap_or(0.0),
                artifacts.relative_distances.get(c).copied().unwrap_or(0.0),
            )
            .expect("string write");
        }
        write_atomic(&out_dir.join("eigen_counts.tsv"), out.as_bytes())?;
    }

    let provenance =
        serde_json::to_vec_pretty(&artifacts.provenance).expect("provenance serializes");
    write_atomic(&out_dir.join("provenance.json"), &provenance)?;
    Ok(())
}

/// Per-member basis table for dyadic-net plots: location, level, support.
pub fn render_basis_table(basis: &splinet::BasisSet) -> String {
    let mut out =
        String::from("member\tlocation\tlevel\tpos_in_level\ttuple\tsupport_lo\tsupport_hi\n");
    let xs = basis.knots().values();
    for (i, p) in basis.placements().iter().enumerate() {
        let support = &basis.family().members()[i].support;
        let (lo, hi) = support
            .components()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(a, b)| {
                (lo.min(xs[a]), hi.max(xs[b]))
            });
        writeln!(
            out,
            "{i}\t{}\t{}\t{}\t{}\t{lo}\t{hi}",
            p.location, p.level, p.pos_in_level, p.tuple
        )
        .expect("string write");
    }
    out
}
