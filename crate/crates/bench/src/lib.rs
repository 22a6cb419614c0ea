//! Fixtures shared by the benchmarks.

use shift_audit::synthetic::{make_example1, make_overlap_pair, OverlapParams};
use shift_audit::{DomainTag, SampleSet};

/// Source and target samples from the second overlap problem (1-D).
pub fn overlap_samples(n: usize, seed: u64) -> (SampleSet, SampleSet) {
    let (_, b) = make_overlap_pair(&OverlapParams::default()).expect("default parameters are valid");
    (b.sample(DomainTag::Source, n, seed), b.sample(DomainTag::Target, n, seed))
}

/// Labeled source and unlabeled target samples from the quadrant problem (2-D).
pub fn quadrant_samples(n: usize, seed: u64) -> (SampleSet, SampleSet) {
    let p = make_example1();
    (p.sample_labeled(DomainTag::Source, n, seed), p.sample(DomainTag::Target, n, seed))
}
