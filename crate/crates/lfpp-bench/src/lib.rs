//! Shared inputs for the benchmark targets.

use lfpp_core::coupling::{build_coupling, CouplingMode, CouplingSample};
use lfpp_core::gff::{sample_dgff, FieldSample};

pub fn bench_field(n: u32) -> FieldSample {
    sample_dgff(n, 0xBE6C).expect("valid scale")
}

pub fn bench_coupling(n: u32, m: u32) -> CouplingSample {
    build_coupling(n, m, 0xBE6C, CouplingMode::ExactCoarse).expect("within budget")
}
