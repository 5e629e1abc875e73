//! Superchannels `Θ: L(A,B) → L(C,D)`, stored by a physical dilation and/or by
//! the representing map `T: L(A⊗B) → L(C⊗D)` with `T(Ĉ_N) = Ĉ_{Θ(N)}`.

use serde::{Deserialize, Serialize};

use crate::channels::{
    compose, depolarizing_tilde, identity_channel, tensor_channels, Certificate, Channel, ChannelJson, Verdict,
    COVARIANCE_TOL,
};
use crate::divergences::PureBipartiteState;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{
    self, eig_unchecked, identity, ket, max_abs, op_norm, partial_trace, r, tensor, unit, CMat, Keep, MatFn,
    MatrixJson, PSD_TOL,
};

/// Residual allowed when comparing the two application paths.
pub const AGREEMENT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Dilation {
    /// C → A ⊗ R.
    pub pre: Channel,
    /// B ⊗ R → D.
    pub post: Channel,
    pub ref_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperFlags {
    pub completely_cp_preserving: Certificate,
    pub tp_preserving: Certificate,
}

#[derive(Clone, Debug)]
pub struct Superchannel {
    /// (|A|, |B|, |C|, |D|).
    pub dims: [usize; 4],
    pub dilation: Option<Dilation>,
    /// Representing map T as a map L(A⊗B) → L(C⊗D).
    pub rep: Channel,
    pub flags: SuperFlags,
}

impl Superchannel {
    /// Wraps a representing map given by its Choi operator on (A⊗B) ⊗ (C⊗D).
    pub fn from_rep(dims: [usize; 4], rep: Channel) -> Result<Superchannel> {
        let [a, b, c, d] = dims;
        if dims.contains(&0) || rep.dim_in != a * b || rep.dim_out != c * d {
            return Err(dim_mismatch(format!(
                "representing map {}->{} for dims {dims:?}",
                rep.dim_in, rep.dim_out
            )));
        }
        let mut s = Superchannel {
            dims,
            dilation: None,
            rep,
            flags: SuperFlags {
                completely_cp_preserving: Certificate::UNVERIFIED,
                tp_preserving: Certificate::UNVERIFIED,
            },
        };
        s.certify();
        Ok(s)
    }

    fn certify(&mut self) {
        let lo = eig_unchecked(&self.rep.choi).min();
        let scale = max_abs(&self.rep.choi).max(1.0);
        let herm = linalg::herm_deviation(&self.rep.choi) <= linalg::HERM_TOL * scale;
        self.flags.completely_cp_preserving = Certificate {
            verdict: if herm && lo >= -PSD_TOL * scale { Verdict::Yes } else { Verdict::No },
            value: Some(lo),
        };
        let res = self.tp_preservation_residual();
        self.flags.tp_preserving = Certificate {
            verdict: if res <= AGREEMENT_TOL { Verdict::Yes } else { Verdict::No },
            value: Some(res),
        };
    }

    /// Max deviation of tr_D T(X) from 1_C over Choi operators X of TP maps.
    ///
    /// TP Choi operators form 1_A⊗1_B/|B| plus the kernel of tr_B, so it is
    /// enough to test that point and a basis of the kernel.
    pub fn tp_preservation_residual(&self) -> f64 {
        let [a, b, c, d] = self.dims;
        let tr_d = |x: &CMat| partial_trace(&self.rep.act(x), (c, d), Keep::First).expect("dims");
        let x0 = identity(a * b) / r(b as f64);
        let mut worst = max_abs(&(tr_d(&x0) - identity(c)));
        for i in 0..a {
            for j in 0..a {
                let ea = unit(a, i, j);
                for k in 0..b {
                    for l in 0..b {
                        if k == 0 && l == 0 {
                            continue;
                        }
                        let eb = if k == l { unit(b, k, k) - unit(b, 0, 0) } else { unit(b, k, l) };
                        worst = worst.max(max_abs(&tr_d(&tensor(&ea, &eb))));
                    }
                }
            }
        }
        worst
    }

    pub fn is_superchannel(&self) -> bool {
        self.flags.completely_cp_preserving.is_yes() && self.flags.tp_preserving.is_yes()
    }

    fn check_input(&self, n: &Channel) -> Result<()> {
        if n.dim_in != self.dims[0] || n.dim_out != self.dims[1] {
            return Err(dim_mismatch(format!(
                "superchannel expects {}->{} maps, got {}->{}",
                self.dims[0], self.dims[1], n.dim_in, n.dim_out
            )));
        }
        Ok(())
    }

    /// Θ(N) through the Choi path, Ĉ_{Θ(N)} = T(Ĉ_N).
    pub fn apply(&self, n: &Channel) -> Result<Channel> {
        self.check_input(n)?;
        let out = Channel::from_choi(self.dims[2], self.dims[3], self.rep.act(&n.choi))?;
        Ok(propagate_symmetry(n, out))
    }

    /// Θ(N) = post ∘ (N ⊗ id_R) ∘ pre.
    pub fn apply_dilation(&self, n: &Channel) -> Result<Channel> {
        self.check_input(n)?;
        let dil = self
            .dilation
            .as_ref()
            .ok_or_else(|| Error::Precondition("superchannel has no dilation".into()))?;
        let mid = tensor_channels(n, &identity_channel(dil.ref_dim));
        let out = compose(&dil.post, &compose(&mid, &dil.pre)?)?;
        Ok(propagate_symmetry(n, out.certified()))
    }

    /// T*: L(C⊗D) → L(A⊗B), with T*(Ĉ_M) = Ĉ_{Θ*(M)}.
    pub fn representing_adjoint(&self) -> Channel {
        self.rep.adjoint()
    }

    /// Composition `self ∘ first` as supermaps.
    pub fn after(&self, first: &Superchannel) -> Result<Superchannel> {
        if first.dims[2] != self.dims[0] || first.dims[3] != self.dims[1] {
            return Err(dim_mismatch("superchannel composition dims"));
        }
        Superchannel::from_rep([first.dims[0], first.dims[1], self.dims[2], self.dims[3]], compose(&self.rep, &first.rep)?)
    }

    /// Θ ⊗ Γ acting on maps A₁A₂ → B₁B₂.
    pub fn tensor(&self, other: &Superchannel) -> Superchannel {
        let [a1, b1, c1, d1] = self.dims;
        let [a2, b2, c2, d2] = other.dims;
        let t = tensor_channels(&self.rep, &other.rep);
        // Input arrives as A₁A₂B₁B₂ and the product map wants A₁B₁A₂B₂.
        let p_in = permutation_unitary(&[a1, a2, b1, b2], &[0, 2, 1, 3]);
        let p_out = permutation_unitary(&[c1, d1, c2, d2], &[0, 2, 1, 3]);
        let rep = conjugated_map(&t, &p_in, &p_out);
        let mut out = Superchannel::from_rep([a1 * a2, b1 * b2, c1 * c2, d1 * d2], rep).expect("consistent dims");
        if let (Some(x), Some(y)) = (&self.dilation, &other.dilation) {
            out.dilation = tensor_dilations(x, y, [a1, b1, c1, d1], [a2, b2, c2, d2]);
        }
        out
    }
}

fn tensor_dilations(x: &Dilation, y: &Dilation, d1: [usize; 4], d2: [usize; 4]) -> Option<Dilation> {
    let [a1, b1, _, _] = d1;
    let [a2, b2, _, _] = d2;
    let (r1, r2) = (x.ref_dim, y.ref_dim);
    // pre₁⊗pre₂ lands in A₁R₁A₂R₂; reorder to A₁A₂R₁R₂.
    let pre = tensor_channels(&x.pre, &y.pre);
    let q = permutation_unitary(&[a1, r1, a2, r2], &[0, 2, 1, 3]);
    let pre = conjugated_map(&pre, &identity(pre.dim_in), &q);
    // post₁⊗post₂ expects B₁R₁B₂R₂; incoming order is B₁B₂R₁R₂.
    let post = tensor_channels(&x.post, &y.post);
    let p = permutation_unitary(&[b1, b2, r1, r2], &[0, 2, 1, 3]);
    let post = conjugated_map(&post, &p, &identity(post.dim_out));
    Some(Dilation { pre: pre.certified(), post: post.certified(), ref_dim: r1 * r2 })
}

fn propagate_symmetry(input: &Channel, out: Channel) -> Channel {
    match &input.symmetry {
        Some(spec) => out.try_symmetry(spec),
        None => out,
    }
}

/// Unitary P with P X P† = permute_subsystems(X, dims, perm).
pub fn permutation_unitary(dims: &[usize], perm: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    let out_dims: Vec<usize> = perm.iter().map(|&k| dims[k]).collect();
    let mut p = CMat::zeros(total, total);
    let mut idx = vec![0usize; dims.len()];
    for col in 0..total {
        let mut rem = col;
        for k in (0..dims.len()).rev() {
            idx[k] = rem % dims[k];
            rem /= dims[k];
        }
        let mut row = 0;
        for (k, &src) in perm.iter().enumerate() {
            row = row * out_dims[k] + idx[src];
        }
        p[(row, col)] = r(1.0);
    }
    p
}

/// The map X ↦ M F(L X L†) M†, whose Choi operator is (Lᵀ⊗M) Ĉ_F (Lᵀ⊗M)†.
pub fn conjugated_map(f: &Channel, l: &CMat, m: &CMat) -> Channel {
    let k = tensor(&l.transpose(), m);
    let choi = &k * &f.choi * k.adjoint();
    Channel::from_choi_unchecked(l.ncols(), m.nrows(), choi).expect("consistent dims")
}

/// Builds T by evaluating Θ = post ∘ (· ⊗ id_R) ∘ pre on the matrix-unit map basis.
pub fn super_from_dilation(pre: &Channel, post: &Channel, ref_dim: usize, dims_ab: (usize, usize)) -> Result<Superchannel> {
    let (a, b) = dims_ab;
    if ref_dim == 0 || pre.dim_out != a * ref_dim || post.dim_in != b * ref_dim {
        return Err(dim_mismatch(format!(
            "pre {}->{} / post {}->{} incompatible with |A|={a}, |B|={b}, |R|={ref_dim}",
            pre.dim_in, pre.dim_out, post.dim_in, post.dim_out
        )));
    }
    pre.require_cptp()?;
    post.require_cptp()?;
    let (c, d) = (pre.dim_in, post.dim_out);
    let id_r = identity_channel(ref_dim);
    let (n_in, n_out) = (a * b, c * d);
    let mut choi = CMat::zeros(n_in * n_out, n_in * n_out);
    for p in 0..n_in {
        for q in 0..n_in {
            let e = Channel::from_choi_unchecked(a, b, unit(n_in, p, q))?;
            let mid = tensor_channels(&e, &id_r);
            let out = compose(post, &compose(&mid, pre)?)?;
            choi.view_mut((p * n_out, q * n_out), (n_out, n_out)).copy_from(&out.choi);
        }
    }
    let rep = Channel::from_choi(n_in, n_out, choi)?;
    let mut s = Superchannel::from_rep([a, b, c, d], rep)?;
    s.dilation = Some(Dilation { pre: pre.clone(), post: post.clone(), ref_dim });
    Ok(s)
}

/// Θ(N) = Σ_i p_i V_i ∘ N ∘ U_i with isometries U_i: C → A and V_i: B → D.
///
/// The dilation stores the term index in a classical flag register.
pub fn random_isometry_super(probs: &[f64], us: &[CMat], vs: &[CMat]) -> Result<Superchannel> {
    if probs.is_empty() || probs.len() != us.len() || probs.len() != vs.len() {
        return Err(Error::InvalidArgument("need one weight per isometry pair".into()));
    }
    if probs.iter().any(|&p| p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("weights must form a distribution".into()));
    }
    let (a, c) = us[0].shape();
    let (d, b) = vs[0].shape();
    for (u, v) in us.iter().zip(vs) {
        if u.shape() != (a, c) || v.shape() != (d, b) {
            return Err(dim_mismatch("isometries differ in shape"));
        }
        if !linalg::is_isometry(u, 1e-10) || !linalg::is_isometry(v, 1e-10) {
            return Err(Error::InvalidArgument("pre/post operators must be isometries".into()));
        }
    }
    let k = probs.len();
    let kraus_t: Vec<CMat> = probs
        .iter()
        .zip(us.iter().zip(vs))
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, (u, v))| tensor(&u.transpose(), v) * r(p.sqrt()))
        .collect();
    let rep = Channel::from_kraus(&kraus_t)?;
    let mut s = Superchannel::from_rep([a, b, c, d], rep)?;
    let pre_k: Vec<CMat> = probs
        .iter()
        .zip(us)
        .enumerate()
        .map(|(i, (p, u))| tensor(u, &ket(k, i)) * r(p.sqrt()))
        .collect();
    let post_k: Vec<CMat> = vs.iter().enumerate().map(|(i, v)| tensor(v, &ket(k, i).adjoint())).collect();
    s.dilation = Some(Dilation { pre: Channel::from_kraus(&pre_k)?, post: Channel::from_kraus(&post_k)?, ref_dim: k });
    Ok(s)
}

/// Θ(N) = V ∘ N ∘ U.
pub fn unitary_super(u: &CMat, v: &CMat) -> Result<Superchannel> {
    random_isometry_super(&[1.0], std::slice::from_ref(u), std::slice::from_ref(v))
}

pub fn identity_super(a: usize, b: usize) -> Superchannel {
    unitary_super(&identity(a), &identity(b)).expect("identities")
}

/// Θ₀(N) = N₀ for every channel N: L(A) → L(B).
///
/// pre prepares 1/|A| next to the input, post discards B and runs N₀.
pub fn replacer_super(a: usize, b: usize, n0: &Channel) -> Result<Superchannel> {
    n0.require_cptp()?;
    let c = n0.dim_in;
    let pre = Channel::from_choi(c, a * c, {
        // ρ ↦ 1/|A| ⊗ ρ
        let mut ch = CMat::zeros(c * a * c, c * a * c);
        for i in 0..c {
            for j in 0..c {
                let blk = tensor(&(identity(a) / r(a as f64)), &unit(c, i, j));
                ch.view_mut((i * a * c, j * a * c), (a * c, a * c)).copy_from(&blk);
            }
        }
        ch
    })?;
    // X ↦ N₀(tr_B X) on B ⊗ C
    let trace_b = Channel::from_kraus(
        &(0..b)
            .map(|k| tensor(&ket(b, k).adjoint(), &identity(c)))
            .collect::<Vec<_>>(),
    )?;
    let post = compose(n0, &trace_b)?.certified();
    super_from_dilation(&pre, &post, c, (a, b))
}

/// Completely depolarizing supermap R⁽²⁾ with T(Y) = tr(Y)·1_{CD}; no dilation.
pub fn completely_depolarizing_super(dims: [usize; 4]) -> Superchannel {
    let [a, b, c, d] = dims;
    let rep = Channel::from_choi_unchecked(a * b, c * d, identity(a * b * c * d)).expect("dims");
    Superchannel::from_rep(dims, rep.certified()).expect("dims")
}

/// Θ(N) = R̃_{B→D} ∘ N.
pub fn replace_with_tilde_super(a: usize, b: usize, d: usize) -> Result<Superchannel> {
    super_from_dilation(&identity_channel(a), &depolarizing_tilde(b, d), 1, (a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SctStatus {
    /// A unit-trace σ₀ making T′ completely positive was found.
    Member,
    /// The bounded search found no such σ₀; membership is not refuted.
    Undecided,
}

/// T′(X) = T(X) + [tr X − tr T(X)] σ₀.
#[derive(Clone, Debug)]
pub struct TpFixedMap {
    pub base: Channel,
    pub sigma0: CMat,
    pub map: Channel,
    pub choi_min_eig: f64,
    pub tp_residual: f64,
    pub is_cptp: bool,
    pub status: SctStatus,
    pub candidates_tried: usize,
}

#[derive(Serialize, Deserialize)]
pub struct TpFixedMapJson {
    pub sigma0: MatrixJson,
    pub choi_min_eig: f64,
    pub tp_residual: f64,
    pub is_cptp: bool,
    pub status: SctStatus,
}

impl From<&TpFixedMap> for TpFixedMapJson {
    fn from(t: &TpFixedMap) -> Self {
        TpFixedMapJson {
            sigma0: MatrixJson::from(&t.sigma0),
            choi_min_eig: t.choi_min_eig,
            tp_residual: t.tp_residual,
            is_cptp: t.is_cptp,
            status: t.status,
        }
    }
}

/// Cap on candidate evaluations in the σ₀ search.
pub const SIGMA0_CANDIDATES: usize = 500;

/// Choi of the correction term, (1 − T*(1))ᵀ ⊗ σ₀ = (1 − tr_out Ĉ_T) ⊗ σ₀.
fn correction_weight(t: &Channel) -> CMat {
    identity(t.dim_in) - t.trace_out()
}

fn fixed_with(t: &Channel, w: &CMat, sigma0: &CMat) -> Channel {
    Channel::from_choi_unchecked(t.dim_in, t.dim_out, &t.choi + tensor(w, sigma0)).expect("dims")
}

/// Repairs the trace of a CP map, searching for σ₀ when none is given.
pub fn tp_fix(t: &Channel, sigma0: Option<&CMat>) -> Result<TpFixedMap> {
    t.require_cp()?;
    let w = correction_weight(t);
    let d = t.dim_out;
    let (sigma0, tried) = match sigma0 {
        Some(s) => {
            if s.shape() != (d, d) {
                return Err(dim_mismatch("sigma0 must act on the output space"));
            }
            let tr = s.trace();
            if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("sigma0 has trace {tr}")));
            }
            (s.clone(), 1)
        }
        None => {
            let wmin = eig_unchecked(&w).min();
            if wmin >= -PSD_TOL {
                (identity(d) / r(d as f64), 1)
            } else {
                search_sigma0(t, &w)
            }
        }
    };
    let map = fixed_with(t, &w, &sigma0);
    let choi_min_eig = eig_unchecked(&map.choi).min();
    let tp_residual = max_abs(&(map.trace_out() - identity(t.dim_in)));
    let scale = max_abs(&map.choi).max(1.0);
    let is_cptp = choi_min_eig >= -PSD_TOL * scale && tp_residual <= 1e-10;
    Ok(TpFixedMap {
        base: t.clone(),
        sigma0,
        map: map.certified(),
        choi_min_eig,
        tp_residual,
        is_cptp,
        status: if is_cptp { SctStatus::Member } else { SctStatus::Undecided },
        candidates_tried: tried,
    })
}

/// Projected supergradient ascent of λ_min(Ĉ_T + W ⊗ Σ_c s_c |b_c⟩⟨b_c|) over Σ_c s_c = 1.
///
/// The basis |b_c⟩ diagonalizes the output marginal of the conjugated bound
/// (G⊗1) Ĉ_T (G⊗1) with G = |W|^{-1/2} + Π₀. The objective is concave in s.
fn search_sigma0(t: &Channel, w: &CMat) -> (CMat, usize) {
    let d = t.dim_out;
    let wsp = eig_unchecked(w);
    let g = wsp.apply(|x| if x.abs() > linalg::SUPPORT_CUTOFF { 1.0 / x.abs().sqrt() } else { 1.0 });
    let gk = tensor(&g, &identity(d));
    let bound = &gk * &t.choi * gk.adjoint();
    let marginal = partial_trace(&bound, (t.dim_in, d), Keep::Second).expect("dims");
    let basis = eig_unchecked(&marginal).eigenvectors;
    let projectors: Vec<CMat> = (0..d)
        .map(|c| {
            let b = basis.column(c).into_owned();
            &b * b.adjoint()
        })
        .collect();
    let lifted: Vec<CMat> = projectors.iter().map(|p| tensor(w, p)).collect();
    let sigma_of = |s: &[f64]| -> CMat {
        projectors.iter().zip(s).fold(CMat::zeros(d, d), |acc, (p, &x)| acc + p * r(x))
    };

    let mut s = vec![1.0 / d as f64; d];
    let mut best = (f64::NEG_INFINITY, s.clone());
    let scale = op_norm(w).max(1e-12);
    for k in 0..SIGMA0_CANDIDATES {
        let choi = lifted.iter().zip(&s).fold(t.choi.clone(), |acc, (l, &x)| acc + l * r(x));
        let sp = eig_unchecked(&choi);
        let lam = sp.min();
        if lam > best.0 {
            best = (lam, s.clone());
        }
        let v = sp.eigenvectors.column(0).into_owned();
        let grad: Vec<f64> = lifted.iter().map(|l| (v.adjoint() * l * &v)[(0, 0)].re).collect();
        let mean = grad.iter().sum::<f64>() / d as f64;
        let dir: Vec<f64> = grad.iter().map(|g| g - mean).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-14 {
            break;
        }
        let step = 1.0 / (scale * ((k + 1) as f64).sqrt());
        for (x, g) in s.iter_mut().zip(&dir) {
            *x += step * g / norm;
        }
    }
    (sigma_of(&best.1), SIGMA0_CANDIDATES)
}

/// T′*(Y) = T*(Y) + tr(Y† σ₀)(1 − T*(1)).
pub fn tp_fix_adjoint(t: &TpFixedMap) -> Channel {
    let base_adj = t.base.adjoint();
    let w = identity(t.base.dim_in) - base_adj.image_of_identity();
    // Y ↦ tr(σ₀† Y)·W has Choi conj(σ₀) ⊗ W.
    let corr = tensor(&t.sigma0.map(|z| z.conj()), &w);
    Channel::from_choi_unchecked(t.base.dim_out, t.base.dim_in, &base_adj.choi + corr).expect("dims")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RSubpreservation {
    pub subpreserving: bool,
    pub preserving: bool,
    /// Min eigenvalue of the Choi operator of R_{C→D} − Θ(R_{A→B}).
    pub min_eig: f64,
    pub residual: f64,
}

/// Whether R_{C→D} − Θ(R_{A→B}) is CP, and whether it vanishes.
pub fn is_r_subpreserving(theta: &Superchannel) -> RSubpreservation {
    let [a, b, c, d] = theta.dims;
    let diff = identity(c * d) - theta.rep.act(&identity(a * b));
    let min_eig = eig_unchecked(&diff).min();
    let residual = max_abs(&diff);
    RSubpreservation {
        subpreserving: min_eig >= -1e-10,
        preserving: residual <= COVARIANCE_TOL,
        min_eig,
        residual,
    }
}

/// 𝔗 = T_Φ ∘ T ∘ T_Ψ⁻¹ on normalized Choi states, 𝔗(C^Ψ_N) = C^Φ_{Θ(N)}.
#[derive(Clone, Debug)]
pub struct GeneralizedRepMap {
    pub psi: PureBipartiteState,
    pub phi: PureBipartiteState,
    pub t_frak: Channel,
    pub t_frak_adjoint: Channel,
    /// ‖𝔗*(1)‖∞.
    pub alpha_norm: f64,
}

impl GeneralizedRepMap {
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        self.t_frak.apply(x)
    }

    /// 𝔗′ with σ₀ chosen by [`tp_fix`].
    pub fn tp_fixed(&self) -> Result<TpFixedMap> {
        tp_fix(&self.t_frak, None)
    }
}

pub fn generalized_rep(
    theta: &Superchannel,
    psi: &PureBipartiteState,
    phi: &PureBipartiteState,
    rank_cutoff: f64,
) -> Result<GeneralizedRepMap> {
    let [a, b, c, d] = theta.dims;
    if psi.dim_a() != a || psi.dim_r() != a || phi.dim_a() != c || phi.dim_r() != c {
        return Err(dim_mismatch("witness dims must match |A| and |C| with |R| equal"));
    }
    for w in [psi, phi] {
        if w.min_singular <= rank_cutoff {
            return Err(Error::RankDeficient(w.min_singular));
        }
    }
    let a_inv = psi
        .a_psi
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficient(psi.min_singular))?;
    let l = tensor(&a_inv, &identity(b));
    let m = tensor(&phi.a_psi, &identity(d));
    let t_frak = conjugated_map(&theta.rep, &l, &m).certified();
    let t_frak_adjoint = t_frak.adjoint();
    let alpha_norm = op_norm(&t_frak_adjoint.image_of_identity());
    Ok(GeneralizedRepMap { psi: psi.clone(), phi: phi.clone(), t_frak, t_frak_adjoint, alpha_norm })
}

/// C^Ψ_N = T_Ψ(C_N) = (A_Ψ ⊗ 1) Ĉ_N (A_Ψ† ⊗ 1).
pub fn t_psi(psi: &PureBipartiteState, dim_b: usize, x: &CMat) -> CMat {
    let k = tensor(&psi.a_psi, &identity(dim_b));
    &k * x * k.adjoint()
}

/// T_Ψ⁻¹, defined when A_Ψ is invertible.
pub fn t_psi_inverse(psi: &PureBipartiteState, dim_b: usize, x: &CMat) -> Result<CMat> {
    let inv = psi
        .a_psi
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficient(psi.min_singular))?;
    let k = tensor(&inv, &identity(dim_b));
    Ok(&k * x * k.adjoint())
}

/// Inverse square root on the support, used by callers building conjugated bounds.
pub fn inv_sqrt_psd(x: &CMat) -> Result<CMat> {
    linalg::mat_fn_psd(x, MatFn::InvSqrt, linalg::SUPPORT_CUTOFF)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuperchannelJson {
    pub dims: [usize; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<ChannelJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post: Option<ChannelJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep_choi: Option<MatrixJson>,
}

impl From<&Superchannel> for SuperchannelJson {
    fn from(s: &Superchannel) -> Self {
        match &s.dilation {
            Some(d) => SuperchannelJson {
                dims: s.dims,
                pre: Some(ChannelJson::from(&d.pre)),
                post: Some(ChannelJson::from(&d.post)),
                ref_dim: Some(d.ref_dim),
                rep_choi: None,
            },
            None => SuperchannelJson {
                dims: s.dims,
                pre: None,
                post: None,
                ref_dim: None,
                rep_choi: Some(MatrixJson::from(&s.rep.choi)),
            },
        }
    }
}

impl TryFrom<SuperchannelJson> for Superchannel {
    type Error = Error;

    fn try_from(j: SuperchannelJson) -> Result<Superchannel> {
        let [a, b, c, d] = j.dims;
        match (j.pre, j.post, j.rep_choi) {
            (Some(pre), Some(post), None) => {
                let pre = Channel::try_from(pre)?;
                let post = Channel::try_from(post)?;
                let ref_dim = j.ref_dim.unwrap_or(if a > 0 { pre.dim_out / a } else { 0 });
                let s = super_from_dilation(&pre, &post, ref_dim, (a, b))?;
                if s.dims != j.dims {
                    return Err(dim_mismatch(format!("dilation gives dims {:?}", s.dims)));
                }
                Ok(s)
            }
            (None, None, Some(m)) => {
                let rep = Channel::from_choi(a * b, c * d, CMat::try_from(m)?)?;
                Superchannel::from_rep(j.dims, rep)
            }
            _ => Err(Error::InvalidArgument(
                "superchannel needs either pre/post/ref_dim or rep_choi".into(),
            )),
        }
    }
}

impl Serialize for Superchannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SuperchannelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Superchannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Superchannel, D::Error> {
        Superchannel::try_from(SuperchannelJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Random isometry superchannel with Haar isometries and uniform-simplex weights.
pub fn random_isometry_super_seeded<R: rand::Rng + ?Sized>(
    terms: usize,
    dims: [usize; 4],
    rng: &mut R,
) -> Result<Superchannel> {
    let [a, b, c, d] = dims;
    if a < c || d < b {
        return Err(Error::InvalidArgument("need |A| >= |C| and |D| >= |B| for isometries".into()));
    }
    let probs = crate::random::random_probs(terms.max(1), rng);
    let us: Vec<CMat> = (0..probs.len()).map(|_| crate::random::haar_isometry(c, a, rng)).collect();
    let vs: Vec<CMat> = (0..probs.len()).map(|_| crate::random::haar_isometry(b, d, rng)).collect();
    random_isometry_super(&probs, &us, &vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        dephasing, depolarizing_r, pauli_matrices, random_channel, random_channel_with, unitary_channel,
    };
    use crate::linalg::diag;
    use crate::random::{haar_unitary, stream_rng};
    use approx::assert_abs_diff_eq;

    #[test]
    fn permutation_unitary_matches_permute() {
        let mut rng = stream_rng(1, 0);
        let x = crate::random::ginibre(12, 12, &mut rng);
        let dims = [2, 3, 2];
        let perm = [2, 0, 1];
        let p = permutation_unitary(&dims, &perm);
        let lhs = &p * &x * p.adjoint();
        let rhs = linalg::permute_subsystems(&x, &dims, &perm).unwrap();
        assert_abs_diff_eq!(max_abs(&(lhs - rhs)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_super_examples() {
        let id = identity_super(2, 2);
        assert!(id.is_superchannel());
        assert_abs_diff_eq!(max_abs(&(&id.rep.choi - identity_channel(4).choi)), 0.0, epsilon = 1e-14);
        let n = random_channel(2, 2, 2, 4).unwrap();
        assert_abs_diff_eq!(max_abs(&(id.apply(&n).unwrap().choi - &n.choi)), 0.0, epsilon = 1e-14);
        let adj = id.representing_adjoint();
        assert_abs_diff_eq!(max_abs(&(adj.choi - identity_channel(4).choi)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn unitary_sandwich() {
        let mut rng = stream_rng(2, 0);
        let (u, v) = (haar_unitary(2, &mut rng), haar_unitary(2, &mut rng));
        let s = unitary_super(&u, &v).unwrap();
        let out = s.apply(&identity_channel(2)).unwrap();
        let vu = unitary_channel(&(&v * &u)).unwrap();
        assert_abs_diff_eq!(max_abs(&(out.choi - vu.choi)), 0.0, epsilon = 1e-13);

        let deph = dephasing(0.2).unwrap();
        let direct = compose(&unitary_channel(&v).unwrap(), &compose(&deph, &unitary_channel(&u).unwrap()).unwrap()).unwrap();
        assert_abs_diff_eq!(max_abs(&(s.apply(&deph).unwrap().choi - &direct.choi)), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(max_abs(&(s.apply_dilation(&deph).unwrap().choi - direct.choi)), 0.0, epsilon = 1e-13);

        let ts = s.representing_adjoint().apply(&identity(4)).unwrap();
        assert_abs_diff_eq!(max_abs(&(ts - identity(4))), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn dilation_and_choi_paths_agree() {
        let mut rng = stream_rng(3, 0);
        let s = random_isometry_super_seeded(3, [3, 2, 2, 3], &mut rng).unwrap();
        assert!(s.is_superchannel());
        for k in 0..20 {
            let n = random_channel_with(3, 2, 2, &mut stream_rng(100 + k, 0)).unwrap();
            let a = s.apply(&n).unwrap();
            let b = s.apply_dilation(&n).unwrap();
            assert!(max_abs(&(&a.choi - &b.choi)) <= AGREEMENT_TOL);
            assert!(a.is_cptp());
        }
        let generic = super_from_dilation(
            &random_channel(2, 4, 2, 9).unwrap(),
            &random_channel(4, 2, 3, 10).unwrap(),
            2,
            (2, 2),
        )
        .unwrap();
        assert!(generic.is_superchannel());
        let n = random_channel(2, 2, 2, 11).unwrap();
        let diff = generic.apply(&n).unwrap().choi - generic.apply_dilation(&n).unwrap().choi;
        assert!(max_abs(&diff) <= AGREEMENT_TOL);
    }

    #[test]
    fn replace_with_tilde() {
        let s = replace_with_tilde_super(2, 2, 3).unwrap();
        let out = s.apply(&random_channel(2, 2, 2, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(max_abs(&(out.choi - depolarizing_tilde(2, 3).choi)), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn replacer_super_outputs_n0() {
        let n0 = random_channel(2, 2, 2, 40).unwrap();
        let s = replacer_super(2, 2, &n0).unwrap();
        assert!(s.is_superchannel());
        let out = s.apply(&random_channel(2, 2, 2, 41).unwrap()).unwrap();
        assert_abs_diff_eq!(max_abs(&(out.choi - &n0.choi)), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn adjoint_duality() {
        let mut rng = stream_rng(5, 0);
        let s = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut rng).unwrap();
        let adj = s.representing_adjoint();
        let mut worst: f64 = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let x = unit(4, p, q);
                        let y = unit(4, i, j);
                        let lhs = linalg::hs_inner(&adj.apply(&y).unwrap(), &x);
                        let rhs = linalg::hs_inner(&y, &s.rep.apply(&x).unwrap());
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        assert!(worst <= 1e-9);
    }

    #[test]
    fn r_subpreservation() {
        let mut rng = stream_rng(6, 0);
        let s = random_isometry_super_seeded(3, [2, 2, 2, 2], &mut rng).unwrap();
        let rs = is_r_subpreserving(&s);
        assert!(rs.subpreserving && rs.preserving);

        let us = [identity(2), identity(2)];
        let vs = [pauli_matrices()[1].clone(), pauli_matrices()[3].clone()];
        assert!(is_r_subpreserving(&random_isometry_super(&[0.5, 0.5], &us, &vs).unwrap()).preserving);

        let strict = random_isometry_super_seeded(2, [2, 2, 2, 3], &mut rng).unwrap();
        let rs = is_r_subpreserving(&strict);
        assert!(rs.subpreserving && !rs.preserving);
    }

    #[test]
    fn tp_fix_on_cptp_map_is_identity_on_states() {
        let t = random_channel(2, 3, 2, 7).unwrap();
        let fixed = tp_fix(&t, None).unwrap();
        assert!(fixed.is_cptp);
        assert_abs_diff_eq!(max_abs(&(&fixed.map.choi - &t.choi)), 0.0, epsilon = 1e-13);
        let adj = tp_fix_adjoint(&fixed);
        assert_abs_diff_eq!(max_abs(&(adj.choi - t.adjoint().choi)), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn example_one_scaled_trace() {
        let n = 4usize;
        let l = 100.0;
        let alpha = 1.0 / n as f64 + 1.0 / (n as f64 * n as f64 * l);
        let t = Channel::from_choi(4, 4, identity(16) * r(alpha)).unwrap();
        let sigma = diag(&[0.7, 0.5, -0.3, 0.1]);
        let fixed = tp_fix(&t, Some(&sigma)).unwrap();
        assert!(fixed.is_cptp, "{}", fixed.choi_min_eig);
        let searched = tp_fix(&t, None).unwrap();
        assert_eq!(searched.status, SctStatus::Member);
    }

    #[test]
    fn example_two() {
        let k1 = diag(&[2f64.sqrt(), 0.0]);
        let k2 = diag(&[0.0, 1.0 / 2f64.sqrt()]);
        let t = Channel::from_kraus(&[k1, k2]).unwrap();
        let sigma = diag(&[1.99, -0.2]) / r(1.79);
        let fixed = tp_fix(&t, Some(&sigma)).unwrap();
        assert!(fixed.choi_min_eig >= -1e-10);
        assert!(fixed.tp_residual <= 1e-12);
        let adj = tp_fix_adjoint(&fixed);
        assert_abs_diff_eq!(max_abs(&(adj.image_of_identity() - identity(2))), 0.0, epsilon = 1e-10);

        let searched = tp_fix(&t, None).unwrap();
        assert_eq!(searched.status, SctStatus::Member);
        assert!((searched.choi_min_eig - 1.0 / 3.0).abs() < 1e-2, "{}", searched.choi_min_eig);
    }

    #[test]
    fn tp_preserving_images_unchanged() {
        let mut rng = stream_rng(8, 0);
        let s = random_isometry_super_seeded(2, [2, 2, 2, 3], &mut rng).unwrap();
        let fixed = tp_fix(&s.rep, None).unwrap();
        for k in 0..5 {
            let n = random_channel(2, 2, 2, 50 + k).unwrap();
            let a = fixed.map.apply(&n.choi).unwrap();
            let b = s.rep.apply(&n.choi).unwrap();
            assert!(max_abs(&(a - b)) <= 1e-10);
        }
    }

    #[test]
    fn generalized_rep_examples() {
        let id = identity_super(2, 2);
        let me = PureBipartiteState::maximally_entangled(2);
        let g = generalized_rep(&id, &me, &me, 1e-6).unwrap();
        assert_abs_diff_eq!(g.alpha_norm, 1.0, epsilon = 1e-12);

        let mut rng = stream_rng(9, 0);
        let s = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut rng).unwrap();
        let psi = PureBipartiteState::new(crate::random::ginibre(2, 2, &mut rng)).unwrap();
        let phi = PureBipartiteState::new(crate::random::ginibre(2, 2, &mut rng)).unwrap();
        let g = generalized_rep(&s, &psi, &phi, 1e-6).unwrap();
        for k in 0..5 {
            let n = random_channel(2, 2, 2, 60 + k).unwrap();
            let lhs = g.apply(&psi.output(&n).unwrap()).unwrap();
            let rhs = phi.output(&s.apply(&n).unwrap()).unwrap();
            assert!(max_abs(&(lhs - rhs)) <= 1e-8);
        }
        let fixed = g.tp_fixed().unwrap();
        let n = random_channel(2, 2, 2, 70).unwrap();
        let cn = psi.output(&n).unwrap();
        let diff = fixed.map.apply(&cn).unwrap() - g.apply(&cn).unwrap();
        assert!(max_abs(&diff) <= 1e-10);

        let low = PureBipartiteState::new(diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(generalized_rep(&s, &low, &phi, 1e-6), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn r2_and_lemma_checks() {
        let r2 = completely_depolarizing_super([2, 2, 2, 2]);
        assert!(r2.flags.completely_cp_preserving.is_yes());
        let out = r2.apply(&random_channel(2, 2, 2, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(max_abs(&(out.choi - depolarizing_r(2, 2).choi * r(2.0))), 0.0, epsilon = 1e-13);

        let mut rng = stream_rng(10, 0);
        let s = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut rng).unwrap();
        // T trace preserving iff Θ* maps R to R.
        let tstar_r = s.representing_adjoint().apply(&identity(4)).unwrap();
        assert!(max_abs(&(tstar_r - identity(4))) <= 1e-8);
        assert!(s.rep.flags.tp.is_yes());
    }

    #[test]
    fn tensor_of_superchannels() {
        let mut rng = stream_rng(11, 0);
        let s1 = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut rng).unwrap();
        let s2 = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut rng).unwrap();
        let s = s1.tensor(&s2);
        let n1 = random_channel(2, 2, 2, 1).unwrap();
        let n2 = random_channel(2, 2, 2, 2).unwrap();
        let lhs = s.apply(&tensor_channels(&n1, &n2).certified()).unwrap();
        let rhs = tensor_channels(&s1.apply(&n1).unwrap(), &s2.apply(&n2).unwrap());
        assert!(max_abs(&(&lhs.choi - &rhs.choi)) <= 1e-12);
        let via = s.apply_dilation(&tensor_channels(&n1, &n2).certified()).unwrap();
        assert!(max_abs(&(via.choi - rhs.choi)) <= 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = stream_rng(12, 0);
        let s = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut rng).unwrap();
        let back: Superchannel = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert!(max_abs(&(back.rep.choi - &s.rep.choi)) <= 1e-12);
        let r2 = completely_depolarizing_super([1, 2, 1, 2]);
        let back: Superchannel = serde_json::from_str(&serde_json::to_string(&r2).unwrap()).unwrap();
        assert_eq!(back.rep.choi, r2.rep.choi);
    }
}
