use modal_homotopy::verify::{run_criterion, CRITERIA};

const SEED: u64 = 2024;

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let start = std::time::Instant::now();
        let report = run_criterion(id, SEED).expect("known criterion");
        println!("{} ({:.1?})", report.line(), start.elapsed());
        if !report.passed {
            println!(
                "    details: {}",
                serde_json::to_string(&report.details).unwrap()
            );
            for f in &report.failures {
                println!("    {f}");
            }
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
