//! Fixture builders shared by the criterion benchmarks.

use impbench_core::amputation::{amputate, AmputationPlan};
use impbench_core::synth;
use impbench_core::Dataset;

/// Complete numeric dataset of `n` rows with the bundled factor structure.
pub fn complete(n: usize) -> Dataset {
    synth::gaussian_factors(n, 99)
}

/// The same dataset with 20% of its cells knocked out MCAR.
pub fn incomplete(n: usize) -> Dataset {
    let data = complete(n);
    let plan = AmputationPlan::mcar(0.2, 99);
    let rep = amputate(&data, &plan, 0).expect("mcar amputation on a complete dataset");
    rep.apply(&data).expect("mask matches the dataset shape")
}
