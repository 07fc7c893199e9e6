mod common;
mod props;

#[test]
fn verified_claims_have_no_sampled_violation() {
    props::falsifier::verified_claims_have_no_sampled_violation();
}

#[test]
fn unsatisfiable_conjunctions_have_no_sampled_witness() {
    props::falsifier::unsatisfiable_conjunctions_have_no_sampled_witness();
}
