#![allow(dead_code)]

use crowdvet::protocols::{fuse_majority, TrustedNeighborhood};

/// Neighborhood of `votes.len()` members (owner 0) voting on one outside
/// subject, the last index.
pub fn single_subject(votes: &[bool]) -> (Vec<bool>, TrustedNeighborhood) {
    let n = votes.len() + 1;
    let subject = n - 1;
    let vector = |v: bool| {
        let mut x = vec![true; n];
        x[subject] = v;
        x
    };
    let own = vector(votes[0]);
    let mut hood = TrustedNeighborhood::new(0, own.clone());
    for (m, &v) in votes.iter().enumerate().skip(1) {
        hood.insert(m, vector(v));
    }
    (own, hood)
}

pub fn fused_subject(votes: &[bool]) -> bool {
    let (own, hood) = single_subject(votes);
    let out = fuse_majority(&own, &hood, false).unwrap();
    out[votes.len()]
}

/// Every vote pattern for 1..=max_voters: matches the counting rule,
/// is invariant under reordering the voters, never drops when a vote is
/// raised, and trusts on ties. Returns the number of patterns checked.
pub fn fuse_invariants_exhaustive(max_voters: usize) -> Result<usize, String> {
    let mut checked = 0;
    for v in 1..=max_voters {
        for mask in 0u32..(1 << v) {
            let votes: Vec<bool> = (0..v).map(|b| mask >> b & 1 == 1).collect();
            let yes = votes.iter().filter(|&&b| b).count();
            let got = fused_subject(&votes);
            if got != (2 * yes >= v) {
                return Err(format!("count rule broken for {votes:?}"));
            }
            if 2 * yes == v && !got {
                return Err(format!("tie distrusted for {votes:?}"));
            }
            let mut rotated = votes.clone();
            rotated.rotate_left(1);
            let mut reversed = votes.clone();
            reversed.reverse();
            if fused_subject(&rotated) != got || fused_subject(&reversed) != got {
                return Err(format!("order dependence for {votes:?}"));
            }
            for b in 0..v {
                if !votes[b] {
                    let mut raised = votes.clone();
                    raised[b] = true;
                    if got && !fused_subject(&raised) {
                        return Err(format!("raising vote {b} of {votes:?} flipped to distrust"));
                    }
                }
            }
            checked += 1;
        }
    }
    Ok(checked)
}
