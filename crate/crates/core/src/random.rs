//! Seeded samplers for matrices, states and isometries.
//!
//! Every stream is a ChaCha8 generator keyed by `(seed, stream)`, so a trial
//! or restart draws the same numbers no matter how work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, CMat};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| c(s * gaussian(rng), s * gaussian(rng)))
}

/// Haar-distributed isometry from C^{dim_in} into C^{dim_out}.
pub fn haar_isometry<R: Rng + ?Sized>(dim_in: usize, dim_out: usize, rng: &mut R) -> CMat {
    assert!(dim_out >= dim_in, "isometry needs dim_out >= dim_in");
    let g = ginibre(dim_out, dim_in, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let rm = qr.r();
    // Phase fix on the diagonal of R makes the distribution exactly Haar.
    for k in 0..dim_in {
        let d = rm[(k, k)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for z in q.column_mut(k).iter_mut() {
            *z *= ph;
        }
    }
    q.columns(0, dim_in).into_owned()
}

pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    haar_isometry(d, d, rng)
}

/// Full-rank density operator G G† / tr(G G†) with square Ginibre G.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m / c(t, 0.0)
}

/// Density operator of rank at most `rank`.
pub fn random_density_rank<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m / c(t, 0.0)
}

/// Uniform point on the probability simplex.
pub fn random_probs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
