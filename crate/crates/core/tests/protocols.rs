//! Controlled tasks and protocol pipelines against independently written reference states.

mod common;

use common::criteria::*;
use qnetsup::Error;

const TOL: f64 = 1e-9;

fn check(name: &str, s: Sweep) {
    assert!(s.within(TOL), "{name}: {s:?}");
}

#[test]
fn controlled_send_every_outcome() {
    check("send", send_sweep(30, 1).unwrap());
}

#[test]
fn controlled_send_outcomes_are_uniform() {
    let v = criterion_6(20, 2);
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn controlled_cut_every_outcome() {
    check("cut", cut_sweep(30, 3).unwrap());
}

#[test]
fn controlled_merge_every_outcome() {
    check("merge", merge_sweep(30, 4).unwrap());
}

#[test]
fn controlled_measure_keeps_the_weights() {
    check("measure", measure_sweep(30, 5).unwrap());
}

#[test]
fn misprepared_auxiliary_is_a_weight_drift() {
    assert!(matches!(misprepared_aux(), Err(Error::WeightDrift { .. })));
}

#[test]
fn ghz_superposition_with_sampled_outcomes() {
    check("ghz", ghz_pipeline_sweep(10, 6).unwrap());
}

#[test]
fn destinations_with_sampled_outcomes() {
    for n in [2, 3] {
        check(&format!("destinations n={n}"), destinations_sweep(n, 10, 7).unwrap());
    }
}

#[test]
fn four_destinations_exceed_the_dense_limit() {
    assert!(matches!(destinations_sweep(4, 1, 7), Err(Error::TooLarge(_))));
}

#[test]
fn paths_with_sampled_outcomes() {
    check("paths", paths_sweep(20, 8).unwrap());
}

#[test]
fn encoding_every_outcome() {
    check("encoding", encoding_sweep(5, 9).unwrap());
}

#[test]
fn oracles_agree_with_hand_values() {
    use common::cx;
    // Branch 1 of the send oracle with α = (0, 1) and ψ = |1⟩: |1⟩|0⟩|+⟩|1⟩.
    let v = send_oracle(&[cx(0.0, 0.0), cx(1.0, 0.0)], &[cx(0.0, 0.0), cx(1.0, 0.0)]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((v[0b1_0_0_1].re - s).abs() < 1e-15 && (v[0b1_0_1_1].re - s).abs() < 1e-15);
    assert!((v.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-15);
    // Destinations oracle, n = 2, α = (1, 0), φ = |1⟩: |1⟩|2⟩.
    let d = destinations_oracle(&[cx(1.0, 0.0), cx(0.0, 0.0)], &[cx(0.0, 0.0), cx(1.0, 0.0)]);
    assert_eq!(d.iter().position(|x| x.norm() > 0.5), Some(4 + 2));
}
