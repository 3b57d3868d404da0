mod common;

use common::{criteria, Check};

fn assert_all(checks: Vec<Check>) {
    let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}

#[test]
fn closed_forms_match_fock_space() {
    assert_all(criteria::oracle_equivalence());
}

#[test]
fn liouvillian_spectrum_from_rapidities() {
    assert_all(criteria::spectrum_identity());
}

#[test]
fn analytic_square_root_matches_gaussian_traces() {
    assert_all(criteria::branch_soundness());
}
