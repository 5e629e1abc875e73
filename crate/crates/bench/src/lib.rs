//! Fixed inputs shared by the kernel benchmarks.

use superent::channels::random_channel_with;
use superent::random::{random_density, stream_rng};
use superent::superchannels::random_isometry_super_seeded;
use superent::{CMat, Channel, Superchannel};

pub const SEED: u64 = 17;

pub fn state(d: usize) -> CMat {
    random_density(d, &mut stream_rng(SEED, d as u64))
}

pub fn channel(din: usize, dout: usize) -> Channel {
    random_channel_with(din, dout, 2, &mut stream_rng(SEED, (din * 10 + dout) as u64)).expect("valid dims")
}

pub fn superchannel() -> Superchannel {
    random_isometry_super_seeded(2, [2, 2, 2, 2], &mut stream_rng(SEED, 99)).expect("valid dims")
}
