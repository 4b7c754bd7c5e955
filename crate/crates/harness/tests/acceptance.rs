//! One line per acceptance criterion. Exits non-zero only when a gating
//! criterion fails.

use dynmsf_harness::bench::CSV_HEADER;
use dynmsf_harness::checks::{
    counterexamples, determinism, golden_fixture, k_lightest_contract, msf_oracle_and_audit, msf_workloads,
    quantile_suite, reduction_matrix, scaling, single_linkage, CheckResult,
};

fn report(results: &mut Vec<CheckResult>, r: CheckResult) {
    println!("{}", r.line());
    results.push(r);
}

fn main() {
    let mut results = Vec::new();
    report(&mut results, golden_fixture());

    let workloads = msf_workloads();
    let msf = msf_oracle_and_audit(&workloads);
    report(&mut results, msf.oracle);
    report(&mut results, msf.audit);

    report(&mut results, quantile_suite());
    report(&mut results, k_lightest_contract());
    report(&mut results, single_linkage());
    report(&mut results, reduction_matrix());
    report(&mut results, counterexamples());
    report(&mut results, determinism(&workloads, &msf.checksums));

    let (scale, rows) = scaling();
    println!("{CSV_HEADER}");
    for row in &rows {
        println!("{}", row.csv());
    }
    report(&mut results, scale);

    let failed: Vec<u32> = results.iter().filter(|r| r.gating && !r.pass).map(|r| r.id).collect();
    let soft: Vec<u32> = results.iter().filter(|r| !r.gating && !r.pass).map(|r| r.id).collect();
    println!(
        "acceptance: {} of {} criteria passed; gating failures {:?}; non-gating failures {:?}",
        results.iter().filter(|r| r.pass).count(),
        results.len(),
        failed,
        soft
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
