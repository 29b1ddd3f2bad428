//! Fixed-seed fixtures shared by the benchmarks.

use freechan::kernel::RngStream;
use freechan::sim::{build_channel, ChannelInstance};
use freechan::{ComplexMatrix, C64};

pub const SEED: u64 = 7;

pub fn rng() -> RngStream {
    RngStream::new(SEED, 0)
}

/// Random Hermitian `dim x dim` matrix.
pub fn hermitian(dim: usize) -> ComplexMatrix {
    let mut rng = rng();
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_normal());
    g.hermitian_part()
}

pub fn channel(n: usize, k: usize) -> ChannelInstance {
    build_channel(n, k, 0.5, SEED).expect("valid benchmark channel")
}

pub fn unit_input(c: &ChannelInstance) -> Vec<C64> {
    rng().unit_vector(c.p_n)
}
