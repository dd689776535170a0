use dnsym::forward::{asymptotic_compare, solve_mode, RadialProblem};

fn modes() -> Vec<u32> {
    vec![8, 11, 16, 23, 32, 45, 64]
}

#[test]
fn harmonic_modes_at_floor() {
    let p = RadialProblem::new(vec![0.0], modes());
    let c = asymptotic_compare(&p, 2).unwrap();
    assert!(c.slope.is_none() && c.pass);
    for row in &c.rows {
        assert!((row.numeric + row.k as f64).abs() <= 1e-8 * row.k as f64);
    }
}

#[test]
fn quadratic_weight_decay() {
    let p = RadialProblem::quadratic(1.0, modes());
    for order in [2, 3] {
        let c = asymptotic_compare(&p, order).unwrap();
        eprintln!("order {order}: slope {:?}", c.slope);
        for r in &c.rows {
            eprintln!("  k={} numeric={:.12} sum={:.12} err={:.3e}", r.k, r.numeric, r.partial_sum, r.error);
        }
        assert!(c.pass, "order {order}: slope {:?}", c.slope);
    }
}

#[test]
fn leading_behavior_is_minus_k() {
    let p = RadialProblem::quadratic(1.0, vec![]);
    let k = 256;
    let ratio = solve_mode(&p, k).unwrap();
    assert!((ratio / k as f64 + 1.0).abs() < 1e-2);
}

#[test]
fn too_few_modes() {
    let p = RadialProblem::quadratic(1.0, vec![8, 9, 10]);
    assert!(asymptotic_compare(&p, 2).is_err());
}
