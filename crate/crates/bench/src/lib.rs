//! Fixtures shared by the benchmarks.

use furstenberg::certificate::{build_example, Family};
use furstenberg::circle::{convolve_measures, CircleMeasure};
use furstenberg::{GroupElement, MeasureSpec};

pub fn two_gen(n: u64) -> MeasureSpec {
    build_example(&Family::TwoGen { n }).expect("two_gen builds for n ≥ 2")
}

/// Three atoms smoothed by a wrapped Gaussian on a `2^14` grid.
pub fn smooth_measure() -> CircleMeasure {
    let atoms = CircleMeasure::from_atoms_normalized(vec![(0.3, 1.0), (1.2, 2.0), (2.5, 0.5)]).expect("valid atoms");
    let g = CircleMeasure::wrapped_gaussian(0.05, 1 << 14).expect("valid bandwidth");
    convolve_measures(&atoms, &g).expect("grid convolution")
}

/// Deterministic spread of elements with norms from 1.5 to about 10⁴.
pub fn elements(n: usize) -> Vec<GroupElement> {
    (0..n)
        .map(|i| {
            let s = i as f64 / n as f64;
            GroupElement::from_cartan(3.0 * s, 1.5 * (1e4f64 / 1.5).powf(s), 1.0 - s)
        })
        .collect()
}
