mod common;
mod props;

#[test]
fn barrier_derived_closure_certificates_are_valid() {
    props::certificates::barrier_derived_closure_certificates_are_valid();
}

#[test]
fn safety_certificates_exist_exactly_for_safe_systems() {
    props::certificates::safety_certificates_exist_exactly_for_safe_systems();
}

#[test]
fn persistence_certificates_imply_persistence() {
    props::certificates::persistence_certificates_imply_persistence();
}

#[test]
fn subsumption_certificates_check_exhaustively() {
    props::certificates::subsumption_certificates_check_exhaustively();
}
