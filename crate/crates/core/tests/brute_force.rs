//! Request distribution and collapse over every measurement-outcome tuple.

mod common;

use common::criteria::request_brute_force;

#[test]
fn three_levels_three_devices() {
    let s = request_brute_force(3, 3, 1).unwrap();
    assert_eq!(s.runs, 2 * 81);
    assert!(s.within(1e-9), "{s:?}");
}

#[test]
fn two_levels_four_devices() {
    let s = request_brute_force(2, 4, 2).unwrap();
    assert_eq!(s.runs, 2 * 32);
    assert!(s.within(1e-9), "{s:?}");
}

#[test]
fn other_sizes() {
    for (m, n) in [(2, 2), (4, 2), (2, 3), (3, 2)] {
        let s = request_brute_force(m, n, (m * 10 + n) as u64).unwrap();
        assert_eq!(s.runs, 2 * m * m * m.pow(n as u32 - 1), "m={m} n={n}");
        assert!(s.within(1e-9), "m={m} n={n}: {s:?}");
    }
}
