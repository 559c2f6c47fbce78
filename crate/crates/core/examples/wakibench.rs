fn main() {
    let start = std::time::Instant::now();
    let report = opera_core::wakimoto::verify_relations(3, 4).unwrap();
    for c in &report.checks {
        println!("{}: {}", c.id, if c.passed { "pass" } else { "FAIL" });
    }
    println!("elapsed: {:?}", start.elapsed());
}
