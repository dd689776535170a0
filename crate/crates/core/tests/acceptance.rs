use dnsym::acceptance::{all_pass, run, CRITERIA};

#[test]
fn acceptance() {
    let mut outcomes = Vec::new();
    for id in 1..=CRITERIA.len() as u32 {
        let o = run(id).unwrap();
        println!("{o}");
        outcomes.push(o);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(all_pass(&outcomes), "failed criteria: {failed:?}");
}
