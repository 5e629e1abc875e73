//! Relative entropy and entropy of states and channels.
//!
//! Channel quantities are suprema over pure inputs `|Ψ⟩_{RA}` with `|R| = |A|`.
//! The value at `Ψ` depends only on the A-marginal, so feasible points can be
//! described either by `A_Ψ` or by a marginal density operator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{depolarizing_r, thermal_map, Channel, ThermalMap, COVARIANCE_TOL};
use crate::config::OptimizerOpts;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{
    self, c, eig_unchecked, herm_eig, identity, max_abs, r, tensor, CMat, MatFn, Spectral,
    SUPPORT_CUTOFF,
};
use crate::optimize::{maximize, NmOpts};
use crate::random::{ginibre, stream_rng};

/// Weight of ρ outside supp σ above which D(ρ‖σ) is reported as +∞.
pub const LEAK_TOL: f64 = 1e-8;

/// Pure state |Ψ⟩ = (A_Ψ ⊗ 1) Σ_i |ii⟩ on R ⊗ A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureBipartiteState {
    #[serde(with = "linalg::cmat_serde")]
    pub a_psi: CMat,
    pub min_singular: f64,
    pub full_rank: bool,
}

impl PureBipartiteState {
    /// Normalizes `a` so that tr(A A†) = 1.
    pub fn new(a: CMat) -> Result<Self> {
        Self::with_cutoff(a, 1e-6)
    }

    pub fn with_cutoff(a: CMat, rank_cutoff: f64) -> Result<Self> {
        let norm = a.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("A_Psi must be nonzero and finite".into()));
        }
        let a = a / r(norm);
        let min_singular = min_singular_value(&a);
        Ok(PureBipartiteState { a_psi: a, min_singular, full_rank: min_singular > rank_cutoff })
    }

    pub fn maximally_entangled(d: usize) -> Self {
        Self::new(identity(d)).expect("identity is nonzero")
    }

    /// Pure state whose A-marginal is `rho_a`, using A = conj(ρ_A)^{1/2}.
    pub fn from_marginal(rho_a: &CMat) -> Result<Self> {
        let root = linalg::mat_fn_psd(&rho_a.map(|z| z.conj()), MatFn::Sqrt, SUPPORT_CUTOFF)?;
        Self::new(root)
    }

    pub fn dim_a(&self) -> usize {
        self.a_psi.ncols()
    }

    pub fn dim_r(&self) -> usize {
        self.a_psi.nrows()
    }

    /// Ψ_A = (A†A)ᵀ.
    pub fn marginal_a(&self) -> CMat {
        (self.a_psi.adjoint() * &self.a_psi).transpose()
    }

    /// Ψ_R = A A†.
    pub fn marginal_r(&self) -> CMat {
        &self.a_psi * self.a_psi.adjoint()
    }

    /// The state vector on R ⊗ A.
    pub fn vector(&self) -> CMat {
        let (dr, da) = self.a_psi.shape();
        CMat::from_fn(dr * da, 1, |idx, _| self.a_psi[(idx / da, idx % da)])
    }

    /// (id_R ⊗ N)(Ψ) = (A ⊗ 1) Ĉ_N (A† ⊗ 1).
    pub fn output(&self, n: &Channel) -> Result<CMat> {
        if n.dim_in != self.dim_a() {
            return Err(dim_mismatch(format!("witness on |A|={} for map with dim_in {}", self.dim_a(), n.dim_in)));
        }
        let k = tensor(&self.a_psi, &identity(n.dim_out));
        Ok(&k * &n.choi * k.adjoint())
    }

    pub fn tensor(&self, other: &PureBipartiteState) -> PureBipartiteState {
        PureBipartiteState::new(tensor(&self.a_psi, &other.a_psi)).expect("product of unit vectors")
    }

    /// Blends toward the maximally entangled state until min singular value exceeds `cutoff`.
    pub fn nudged_full_rank(&self, cutoff: f64) -> PureBipartiteState {
        if self.min_singular > cutoff && self.dim_r() == self.dim_a() {
            return self.clone();
        }
        let d = self.dim_a();
        let target = identity(d) / r((d as f64).sqrt());
        let mut t = 10.0 * cutoff * (d as f64).sqrt();
        loop {
            let a = &self.a_psi * r(1.0 - t) + &target * r(t);
            if let Ok(s) = PureBipartiteState::with_cutoff(a, cutoff) {
                if s.full_rank || t >= 1.0 {
                    return s;
                }
            }
            t = (t * 4.0).min(1.0);
        }
    }

    fn from_params(x: &[f64], d: usize) -> Option<CMat> {
        let a = CMat::from_fn(d, d, |i, j| c(x[2 * (i * d + j)], x[2 * (i * d + j) + 1]));
        let n = a.norm();
        (n > 1e-300 && n.is_finite()).then(|| a / r(n))
    }

    fn to_params(&self) -> Vec<f64> {
        let d = self.dim_a();
        let mut x = Vec::with_capacity(2 * d * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.a_psi[(i, j)];
                x.push(z.re);
                x.push(z.im);
            }
        }
        x
    }
}

fn min_singular_value(a: &CMat) -> f64 {
    if a.nrows() < a.ncols() {
        return 0.0;
    }
    let g = a.adjoint() * a;
    eig_unchecked(&g).min().max(0.0).sqrt()
}

/// D(ρ‖σ) = tr ρ(log₂ρ − log₂σ) in bits, +∞ when ρ leaks out of supp σ.
pub fn rel_entropy(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let (sr, ss) = spectra_for_divergence(rho, sigma)?;
    Ok(rel_entropy_spectral(rho, &sr, &ss, true))
}

fn spectra_for_divergence(rho: &CMat, sigma: &CMat) -> Result<(Spectral, Spectral)> {
    if rho.shape() != sigma.shape() {
        return Err(dim_mismatch(format!("{:?} vs {:?}", rho.shape(), sigma.shape())));
    }
    let sr = herm_eig(rho)?;
    let ss = herm_eig(sigma)?;
    for sp in [&sr, &ss] {
        let scale = sp.max().abs().max(1.0);
        if sp.min() < -linalg::PSD_TOL * scale {
            return Err(Error::NotPsd(sp.min()));
        }
    }
    Ok((sr, ss))
}

/// Support-restricted value; `check_leak` turns support leakage into +∞.
fn rel_entropy_spectral(rho: &CMat, sr: &Spectral, ss: &Spectral, check_leak: bool) -> f64 {
    let neg_s: f64 = sr
        .eigenvalues
        .iter()
        .filter(|&&l| l > SUPPORT_CUTOFF)
        .map(|&l| l * l.log2())
        .sum();
    let v = &ss.eigenvectors;
    let rho_in = v.adjoint() * rho * v;
    let mut cross = 0.0;
    let mut leak = 0.0;
    for (k, &l) in ss.eigenvalues.iter().enumerate() {
        let w = rho_in[(k, k)].re;
        if l > SUPPORT_CUTOFF {
            cross += w * l.log2();
        } else {
            leak += w;
        }
    }
    if check_leak && leak > LEAK_TOL {
        return f64::INFINITY;
    }
    neg_s - cross
}

/// S(ρ) = −tr ρ log₂ρ for any PSD operator (not necessarily normalized).
pub fn vn_entropy(rho: &CMat) -> Result<f64> {
    let sp = herm_eig(rho)?;
    let scale = sp.max().abs().max(1.0);
    if sp.min() < -linalg::PSD_TOL * scale {
        return Err(Error::NotPsd(sp.min()));
    }
    Ok(entropy_of_spectrum(&sp.eigenvalues))
}

fn entropy_of_spectrum(eigs: &[f64]) -> f64 {
    -eigs.iter().filter(|&&l| l > SUPPORT_CUTOFF).map(|&l| l * l.log2()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Both maps covariant under one group: maximally entangled input is optimal.
    ClosedFormCovariant,
    /// Both maps replace their input by a fixed operator.
    ClosedFormReplacer,
    Optimized,
    /// Support of N escapes support of M at a full-rank input.
    Infinite,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceResult {
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub optimizer_state: PureBipartiteState,
    pub restarts_used: usize,
    #[serde(with = "ext_f64_vec")]
    pub per_restart_values: Vec<f64>,
    pub converged: bool,
    /// The value is attained at the witness and so bounds the supremum from below.
    pub is_lower_bound: bool,
    /// Set for entropies, which are infima.
    pub is_upper_bound: bool,
    pub method: Method,
    pub evals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_max: Option<f64>,
}

impl DivergenceResult {
    fn negated(mut self) -> DivergenceResult {
        self.value = -self.value;
        for v in &mut self.per_restart_values {
            *v = -*v;
        }
        self.grid_max = self.grid_max.map(|g| -g);
        std::mem::swap(&mut self.is_lower_bound, &mut self.is_upper_bound);
        self
    }
}

/// Serializes non-finite values as the strings "inf", "-inf", "nan".
pub mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub(crate) fn to_repr(v: f64) -> impl Serialize {
        if v.is_finite() {
            Repr::Num(v)
        } else if v.is_nan() {
            Repr::Text("nan".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    pub(crate) fn parse(s: &str) -> Option<f64> {
        match s {
            "inf" | "+inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => parse(&t).ok_or_else(|| serde::de::Error::custom(format!("bad number '{t}'"))),
        }
    }
}

pub mod ext_f64_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| super::ext_f64::to_repr(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super::ext_f64")] f64);
        Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

pub mod opt_ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&super::ext_f64::to_repr(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super::ext_f64")] f64);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

/// D((id⊗N)Ψ ‖ (id⊗M)Ψ) at a fixed input.
pub fn divergence_at(n: &Channel, m: &Channel, psi: &PureBipartiteState) -> Result<f64> {
    rel_entropy(&psi.output(n)?, &psi.output(m)?)
}

/// S((id⊗N)Ψ) − S(Ψ_R), the entropy objective at a fixed input.
pub fn entropy_at(n: &Channel, psi: &PureBipartiteState) -> Result<f64> {
    let out = psi.output(n)?;
    Ok(entropy_of_spectrum(&eig_unchecked(&out).eigenvalues)
        - entropy_of_spectrum(&eig_unchecked(&psi.marginal_r()).eigenvalues))
}

fn check_pair(n: &Channel, m: &Channel) -> Result<()> {
    if n.dim_in != m.dim_in || n.dim_out != m.dim_out {
        return Err(dim_mismatch(format!(
            "channels {}->{} and {}->{}",
            n.dim_in, n.dim_out, m.dim_in, m.dim_out
        )));
    }
    n.require_cptp()?;
    m.require_cp()
}

/// Group under which both maps are covariant, if one is attached to either.
fn shared_covariance(n: &Channel, m: &Channel) -> bool {
    let tol = |x: &Channel| COVARIANCE_TOL * max_abs(&x.choi).max(1.0);
    [&n.symmetry, &m.symmetry].into_iter().flatten().any(|spec| {
        n.covariance_residual(spec) <= tol(n) && m.covariance_residual(spec) <= tol(m)
    })
}

fn closed_form_result(value: f64, d: usize, method: Method) -> DivergenceResult {
    DivergenceResult {
        value,
        optimizer_state: PureBipartiteState::maximally_entangled(d),
        restarts_used: 0,
        per_restart_values: vec![value],
        converged: true,
        is_lower_bound: false,
        is_upper_bound: false,
        method,
        evals: 1,
        grid_max: None,
    }
}

/// D[N‖M] = sup_Ψ D((id⊗N)Ψ ‖ (id⊗M)Ψ).
pub fn channel_divergence(n: &Channel, m: &Channel, opts: &OptimizerOpts) -> Result<DivergenceResult> {
    channel_divergence_with(n, m, opts, &[])
}

/// As [`channel_divergence`], also evaluating the given inputs as feasible points.
pub fn channel_divergence_with(
    n: &Channel,
    m: &Channel,
    opts: &OptimizerOpts,
    inject: &[PureBipartiteState],
) -> Result<DivergenceResult> {
    check_pair(n, m)?;
    let d = n.dim_in;
    let maxent = PureBipartiteState::maximally_entangled(d);
    let at_maxent = divergence_at(n, m, &maxent)?;
    if at_maxent.is_infinite() {
        let mut res = closed_form_result(f64::INFINITY, d, Method::Infinite);
        res.is_lower_bound = true;
        return Ok(res);
    }
    if opts.closed_form {
        if shared_covariance(n, m) {
            return Ok(closed_form_result(at_maxent, d, Method::ClosedFormCovariant));
        }
        if let (Some(s0), Some(t0)) = (n.as_replacer(1e-12), m.as_replacer(1e-12)) {
            return Ok(closed_form_result(rel_entropy(&s0, &t0)?, d, Method::ClosedFormReplacer));
        }
    }
    let (nc, mc) = (n.clone(), m.clone());
    let objective = move |psi: &PureBipartiteState| -> f64 {
        let (Ok(a), Ok(b)) = (psi.output(&nc), psi.output(&mc)) else {
            return f64::NEG_INFINITY;
        };
        let (sa, sb) = (eig_unchecked(&a), eig_unchecked(&b));
        rel_entropy_spectral(&a, &sa, &sb, false)
    };
    let mut res = optimize_pure(d, &objective, opts, inject)?;
    if opts.grid_check && d == 2 {
        res.grid_max = Some(grid_maximum(&objective, 20).0);
    }
    // The witness value is re-evaluated with the strict support test.
    let exact = divergence_at(n, m, &res.optimizer_state)?;
    if exact.is_infinite() {
        res.value = f64::INFINITY;
        res.method = Method::Infinite;
    }
    Ok(res)
}

/// S[N] = −D[N‖R] = inf_Ψ S((id⊗N)Ψ) − S(Ψ_R).
pub fn channel_entropy(n: &Channel, opts: &OptimizerOpts) -> Result<DivergenceResult> {
    channel_entropy_with(n, opts, &[])
}

pub fn channel_entropy_with(
    n: &Channel,
    opts: &OptimizerOpts,
    inject: &[PureBipartiteState],
) -> Result<DivergenceResult> {
    n.require_cptp()?;
    let d = n.dim_in;
    if opts.closed_form {
        if n.symmetry.is_some() {
            return Ok(closed_form_result(channel_entropy_telecov(n)?, d, Method::ClosedFormCovariant));
        }
        if let Some(s0) = n.as_replacer(1e-12) {
            return Ok(closed_form_result(vn_entropy(&s0)?, d, Method::ClosedFormReplacer));
        }
    }
    let nc = n.clone();
    let objective = move |psi: &PureBipartiteState| -> f64 {
        entropy_at(&nc, psi).map_or(f64::NEG_INFINITY, |v| -v)
    };
    let mut res = optimize_pure(d, &objective, opts, inject)?;
    if opts.grid_check && d == 2 {
        res.grid_max = Some(grid_maximum(&objective, 20).0);
    }
    Ok(res.negated())
}

/// S[N] = S(C_N) − log₂|A| for a channel carrying a covariance group.
pub fn channel_entropy_telecov(n: &Channel) -> Result<f64> {
    let spec = n
        .symmetry
        .as_ref()
        .ok_or_else(|| Error::Precondition("channel has no covariance group attached".into()))?;
    let res = n.covariance_residual(spec);
    if res > COVARIANCE_TOL * max_abs(&n.choi).max(1.0) {
        return Err(Error::Precondition(format!("covariance residual {res:e} too large")));
    }
    Ok(vn_entropy(&n.choi_state())? - (n.dim_in as f64).log2())
}

/// S_β[N] = −D[N‖R^β] with R^β(X) = tr(X)·exp(−βH).
pub fn channel_entropy_beta(n: &Channel, thermal: &ThermalMap, opts: &OptimizerOpts) -> Result<DivergenceResult> {
    let rb = thermal_map(thermal, n.dim_in)?;
    if rb.dim_out != n.dim_out {
        return Err(dim_mismatch("Hamiltonian dimension differs from channel output"));
    }
    Ok(channel_divergence(n, &rb, opts)?.negated())
}

/// Multi-restart Nelder–Mead over A_Ψ, restarts in parallel on independent streams.
fn optimize_pure(
    d: usize,
    objective: &(dyn Fn(&PureBipartiteState) -> f64 + Sync),
    opts: &OptimizerOpts,
    inject: &[PureBipartiteState],
) -> Result<DivergenceResult> {
    for p in inject {
        if p.dim_a() != d || p.dim_r() != d {
            return Err(dim_mismatch("injected witness has the wrong shape"));
        }
    }
    let nm = NmOpts { max_evals: opts.max_evals, step: opts.step_init, ..NmOpts::default() };
    let f = |x: &[f64]| match PureBipartiteState::from_params(x, d) {
        Some(a) => objective(&PureBipartiteState { a_psi: a, min_singular: 0.0, full_rank: false }),
        None => f64::NEG_INFINITY,
    };
    let runs: Vec<_> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(opts.seed, k as u64);
            let a0 = ginibre(d, d, &mut rng);
            let x0 = PureBipartiteState::new(a0).expect("gaussian draw is nonzero").to_params();
            maximize(f, &x0, nm)
        })
        .collect();

    let evals = runs.iter().map(|r| r.evals).sum::<usize>() + inject.len();
    let converged = runs.iter().all(|r| r.converged);
    let per_restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let mut best: Option<(f64, PureBipartiteState)> = None;
    let mut consider = |v: f64, psi: PureBipartiteState| {
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, psi));
        }
    };
    for run in &runs {
        if let Some(a) = PureBipartiteState::from_params(&run.x, d) {
            consider(run.value, PureBipartiteState::with_cutoff(a, opts.rank_cutoff)?);
        }
    }
    for p in inject {
        consider(objective(p), p.clone());
    }
    let (mut value, mut witness) =
        best.ok_or_else(|| Error::Numerical("optimizer produced no finite candidate".into()))?;
    if opts.require_full_rank && !witness.full_rank {
        witness = witness.nudged_full_rank(opts.rank_cutoff);
        value = objective(&witness);
    }
    Ok(DivergenceResult {
        value,
        optimizer_state: witness,
        restarts_used: opts.restarts,
        per_restart_values,
        converged,
        is_lower_bound: true,
        is_upper_bound: false,
        method: Method::Optimized,
        evals,
        grid_max: None,
    })
}

/// Bloch-ball grid of qubit marginals (radial × polar × azimuthal), each as a pure input.
pub fn qubit_marginal_grid(per_axis: usize) -> Vec<PureBipartiteState> {
    let [_, x, y, z] = crate::channels::pauli_matrices();
    let nr = per_axis.max(2);
    let nt = per_axis + per_axis / 4;
    let np = per_axis.max(1);
    let mut out = Vec::with_capacity(nr * nt * np);
    for ir in 0..nr {
        let rad = ir as f64 / (nr - 1) as f64;
        for it in 0..nt {
            let th = std::f64::consts::PI * it as f64 / (nt - 1).max(1) as f64;
            for ip in 0..np {
                let ph = std::f64::consts::TAU * ip as f64 / np as f64;
                let v = [rad * th.sin() * ph.cos(), rad * th.sin() * ph.sin(), rad * th.cos()];
                let rho = (identity(2) + &x * r(v[0]) + &y * r(v[1]) + &z * r(v[2])) * r(0.5);
                if let Ok(p) = PureBipartiteState::from_marginal(&rho) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Best grid value of `objective` over [`qubit_marginal_grid`].
pub fn grid_maximum(
    objective: &(dyn Fn(&PureBipartiteState) -> f64 + Sync),
    per_axis: usize,
) -> (f64, PureBipartiteState) {
    qubit_marginal_grid(per_axis)
        .into_par_iter()
        .map(|p| (objective(&p), p))
        .reduce_with(|a, b| if b.0 > a.0 { b } else { a })
        .expect("grid is non-empty")
}

/// Grid maximum of the state divergence for a qubit-input pair.
pub fn divergence_grid_max(n: &Channel, m: &Channel, per_axis: usize) -> Result<(f64, PureBipartiteState)> {
    check_pair(n, m)?;
    if n.dim_in != 2 {
        return Err(Error::InvalidArgument("grid scan needs a qubit input".into()));
    }
    Ok(grid_maximum(&|p| divergence_at(n, m, p).unwrap_or(f64::NEG_INFINITY), per_axis))
}

/// Completely depolarizing map R used by the entropy functional.
pub fn reference_r(n: &Channel) -> Channel {
    depolarizing_r(n.dim_in, n.dim_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        dephasing, depolarizing, depolarizing_tilde, identity_channel, pauli_channel, random_channel, replacer,
    };
    use crate::linalg::{diag, ket};
    use approx::assert_abs_diff_eq;

    fn quick() -> OptimizerOpts {
        OptimizerOpts::default().with_restarts(8)
    }

    #[test]
    fn rel_entropy_examples() {
        let rho = diag(&[0.3, 0.7]);
        assert_abs_diff_eq!(rel_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-14);
        let p0 = diag(&[1.0, 0.0]);
        assert_abs_diff_eq!(rel_entropy(&p0, &(identity(2) / r(2.0))).unwrap(), 1.0, epsilon = 1e-14);
        assert!(rel_entropy(&p0, &diag(&[0.0, 1.0])).unwrap().is_infinite());
        assert!(rel_entropy(&diag(&[-0.1, 1.1]), &rho).is_err());
    }

    #[test]
    fn vn_entropy_examples() {
        assert_abs_diff_eq!(vn_entropy(&diag(&[1.0, 0.0])).unwrap(), 0.0);
        assert_abs_diff_eq!(vn_entropy(&(identity(2) / r(2.0))).unwrap(), 1.0, epsilon = 1e-14);
        let expect = 2.0 - 0.75 * 3f64.log2();
        assert_abs_diff_eq!(vn_entropy(&diag(&[0.75, 0.25])).unwrap(), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(expect, 0.811278, epsilon = 1e-6);
    }

    #[test]
    fn witness_marginals() {
        let rho = crate::random::random_density(3, &mut stream_rng(2, 0));
        let p = PureBipartiteState::from_marginal(&rho).unwrap();
        assert_abs_diff_eq!(max_abs(&(p.marginal_a() - &rho)), 0.0, epsilon = 1e-12);
        let v = p.vector();
        let full = &v * v.adjoint();
        let ra = linalg::partial_trace(&full, (3, 3), linalg::Keep::Second).unwrap();
        assert_abs_diff_eq!(max_abs(&(ra - &rho)), 0.0, epsilon = 1e-12);
        let low = PureBipartiteState::new(ket(2, 0) * ket(2, 0).adjoint()).unwrap();
        assert!(!low.full_rank);
        let fixed = low.nudged_full_rank(1e-6);
        assert!(fixed.full_rank && fixed.min_singular > 1e-6);
    }

    #[test]
    fn channel_divergence_examples() {
        let n = random_channel(2, 2, 2, 3).unwrap();
        let same = channel_divergence(&n, &n, &quick()).unwrap();
        assert_abs_diff_eq!(same.value, 0.0, epsilon = 1e-9);

        let pure = diag(&[1.0, 0.0]);
        let rep = replacer(2, &pure).unwrap();
        let v = channel_divergence(&rep, &depolarizing_r(2, 2), &quick()).unwrap();
        assert_abs_diff_eq!(v.value, 0.0, epsilon = 1e-12);

        let a = dephasing(0.1).unwrap();
        let b = dephasing(0.3).unwrap();
        let closed = channel_divergence(&a, &b, &quick()).unwrap();
        assert_eq!(closed.method, Method::ClosedFormCovariant);
        let bell = |p: f64| diag(&[1.0 - p, p]);
        assert_abs_diff_eq!(closed.value, rel_entropy(&bell(0.1), &bell(0.3)).unwrap(), epsilon = 1e-12);
        let opt = channel_divergence(&a, &b, &quick().optimized_only()).unwrap();
        assert!((opt.value - closed.value).abs() <= 1e-4, "{} vs {}", opt.value, closed.value);
    }

    #[test]
    fn infinite_divergence() {
        let a = replacer(2, &diag(&[1.0, 0.0])).unwrap();
        let b = replacer(2, &diag(&[0.0, 1.0])).unwrap();
        let res = channel_divergence(&a, &b, &quick()).unwrap();
        assert!(res.value.is_infinite());
        let js = serde_json::to_string(&res).unwrap();
        let back: DivergenceResult = serde_json::from_str(&js).unwrap();
        assert!(back.value.is_infinite());
    }

    #[test]
    fn entropy_examples() {
        let o = quick();
        assert_abs_diff_eq!(channel_entropy(&depolarizing_tilde(2, 2), &o).unwrap().value, 1.0, epsilon = 1e-12);
        let rep = replacer(2, &diag(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(channel_entropy(&rep, &o).unwrap().value, 0.0, epsilon = 1e-12);
        let id = identity_channel(2);
        let s = channel_entropy(&id, &o).unwrap();
        assert!((s.value + 1.0).abs() < 1e-6, "{}", s.value);
        assert!(s.is_upper_bound);

        let idc = pauli_channel([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(channel_entropy_telecov(&idc).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(channel_entropy_telecov(&depolarizing(1.0).unwrap()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(channel_entropy_telecov(&dephasing(0.5).unwrap()).unwrap(), 0.0, epsilon = 1e-12);
        assert!(channel_entropy_telecov(&id).is_err());
    }

    #[test]
    fn beta_entropy() {
        let o = quick();
        let n = random_channel(2, 2, 2, 8).unwrap();
        let h = diag(&[0.0, 1.0]);
        let b0 = channel_entropy_beta(&n, &ThermalMap { hamiltonian: h.clone(), beta: 0.0 }, &o).unwrap();
        let s = channel_entropy(&n, &o).unwrap();
        assert!((b0.value - s.value).abs() < 1e-6);

        let sigma = diag(&[0.6, 0.4]);
        let rep = replacer(2, &sigma).unwrap();
        let th = ThermalMap { hamiltonian: h.clone(), beta: 0.7 };
        let v = channel_entropy_beta(&rep, &th, &o).unwrap().value;
        let expect = -rel_entropy(&sigma, &th.thermal_operator().unwrap()).unwrap();
        assert_abs_diff_eq!(v, expect, epsilon = 1e-12);

        let half = replacer(2, &(identity(2) / r(2.0))).unwrap();
        let mut last = f64::INFINITY;
        for beta in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let v = channel_entropy_beta(&half, &ThermalMap { hamiltonian: h.clone(), beta }, &o).unwrap().value;
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn injected_points_dominate() {
        let n = random_channel(2, 2, 2, 21).unwrap();
        let m = random_channel(2, 2, 2, 22).unwrap();
        let p = PureBipartiteState::new(ginibre(2, 2, &mut stream_rng(5, 0))).unwrap();
        let res = channel_divergence_with(&n, &m, &quick(), std::slice::from_ref(&p)).unwrap();
        assert!(res.value >= divergence_at(&n, &m, &p).unwrap());
    }
}
