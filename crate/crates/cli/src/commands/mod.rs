pub mod audit;
pub mod eval;
pub mod split;
pub mod synth;
pub mod verify;
pub mod weights;

use pedattr_core::metrics::MetricsReport;
use pedattr_core::split::CriteriaReport;

/// Percentage with two decimals, the convention of every results table in
/// this domain.
pub(crate) fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub(crate) fn print_metrics_header() {
    println!(
        "{:<26} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "subset", "n", "mA", "Accu", "Prec", "Recall", "F1"
    );
}

pub(crate) fn print_metrics_row(report: &MetricsReport) {
    println!(
        "{:<26} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8}",
        report.subset,
        report.n_samples,
        pct(report.ma),
        pct(report.accuracy),
        pct(report.precision),
        pct(report.recall),
        pct(report.f1),
    );
}

pub(crate) fn print_criteria_table(report: &CriteriaReport) {
    let verdict = |pass: bool| if pass { "pass" } else { "FAIL" };
    println!(
        "counts: identities {}/{}/{} of {}, images {}/{}/{}",
        report.counts.k_train,
        report.counts.k_valid,
        report.counts.k_test,
        report.counts.k_all,
        report.counts.n_train,
        report.counts.n_valid,
        report.counts.n_test,
    );
    println!(
        "  1 identity ratio        train slack {} of center {} ({} uncovered)  {}",
        report.ratio.train_slack,
        report.ratio.train_center,
        report.ratio.uncovered_identities,
        verdict(report.ratio.pass)
    );
    println!(
        "  2 identity disjointness {} shared identities  {}",
        report.disjointness.shared_count,
        verdict(report.disjointness.pass)
    );
    println!(
        "  3 identity balance      slack {}  {}",
        report.identity_balance.slack,
        verdict(report.identity_balance.pass)
    );
    println!(
        "  4 image balance         |valid - test| = {}  {}",
        report.image_balance.difference,
        verdict(report.image_balance.pass)
    );
    let gap = |g: Option<f64>, arg: &Option<String>| match (g, arg) {
        (Some(g), Some(arg)) => format!("{g:.5} ({arg})"),
        _ => "n/a (empty part)".to_owned(),
    };
    println!(
        "  5 attribute balance     train-valid {}  train-test {}  {}",
        gap(
            report.attribute_balance.max_train_valid_gap,
            &report.attribute_balance.argmax_train_valid
        ),
        gap(
            report.attribute_balance.max_train_test_gap,
            &report.attribute_balance.argmax_train_test
        ),
        verdict(report.attribute_balance.pass)
    );
    println!(
        "  overall                 {}",
        if report.pass { "PASS" } else { "FAIL" }
    );
}
