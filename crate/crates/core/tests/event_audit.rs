//! A run where every observer-side property of the coverage event holds yet
//! majority fusion trusts a malicious robot: the observer-side bounds do not
//! limit how many legitimate robots misclassify one particular subject.

use crowdvet::verification::{audit_event_e, synthetic_dcv_run, SyntheticSpace};

const SEED: u64 = 10_752_047_275_798_365_763;

#[test]
fn observer_bounds_do_not_imply_correct_fusion() {
    let (record, params) = synthetic_dcv_run(&SyntheticSpace::default(), SEED).unwrap();
    let audit = audit_event_e(&record, &params).unwrap();
    assert!(audit.holds);
    assert!(!record.succeeded());
    assert!(!audit.subject_bound_holds);

    let n_legit = record.legit_ids.len() as f64;
    let worst = *audit.misclassified_by.iter().max().unwrap();
    assert!(worst as f64 > params.rho.r2 * n_legit, "{:?}", audit.misclassified_by);
}
