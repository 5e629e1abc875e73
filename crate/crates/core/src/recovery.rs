//! Recovery maps: Petz, rotated Petz, the universal recovery channel obtained by
//! averaging rotated Petz maps, and the channel-level recovery supermap.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{trace_functional_choi, Channel};
use crate::config::Quadrature;
use crate::divergences::PureBipartiteState;
use crate::error::{dim_mismatch, Result};
use crate::linalg::{c, eig_unchecked, identity, max_abs, r, CMat, MatrixJson, Spectral, C64, SUPPORT_CUTOFF};
use crate::superchannels::{conjugated_map, generalized_rep, t_psi_inverse, tp_fix, Superchannel, TpFixedMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecoveryKind {
    Petz,
    Rotated { t: f64 },
    Universal,
    Tilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureInfo {
    pub half_width: f64,
    pub nodes: usize,
    pub weight_sum: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryMap {
    pub kind: RecoveryKind,
    /// Reference state σ on the input of the forward map (absent for tilde).
    pub sigma: Option<CMat>,
    /// The forward map being reversed.
    pub channel: Channel,
    /// Π_{N(σ)}.
    pub support_projector: CMat,
    pub xi: CMat,
    pub quadrature: Option<QuadratureInfo>,
    /// The recovery map itself, out → in of the forward map.
    pub map: Channel,
}

impl RecoveryMap {
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        self.map.apply(x)
    }

    /// max |tr P(X) − tr X| over matrix units, i.e. ‖P*(1) − 1‖_max.
    pub fn tp_residual(&self) -> f64 {
        max_abs(&(self.map.trace_out() - identity(self.map.dim_in)))
    }

    pub fn choi_min_eig(&self) -> f64 {
        eig_unchecked(&self.map.choi).min()
    }
}

#[derive(Serialize)]
struct RecoveryMapJson {
    #[serde(flatten)]
    kind: RecoveryKind,
    dim_in: usize,
    dim_out: usize,
    choi: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<MatrixJson>,
    xi: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<QuadratureInfo>,
}

impl Serialize for RecoveryMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RecoveryMapJson {
            kind: self.kind,
            dim_in: self.map.dim_in,
            dim_out: self.map.dim_out,
            choi: MatrixJson::from(&self.map.choi),
            sigma: self.sigma.as_ref().map(MatrixJson::from),
            xi: MatrixJson::from(&self.xi),
            quadrature: self.quadrature,
        }
        .serialize(s)
    }
}

/// x^z on the support, zero on the kernel.
fn cpow(sp: &Spectral, z: C64) -> CMat {
    sp.apply_complex(|x| if x >= SUPPORT_CUTOFF { (z * x.ln()).exp() } else { c(0.0, 0.0) })
}

struct PetzData {
    sigma_sp: Spectral,
    omega_sp: Spectral,
    adjoint: Channel,
    projector: CMat,
}

fn prepare(sigma: &CMat, n: &Channel) -> Result<PetzData> {
    n.require_cptp()?;
    if sigma.shape() != (n.dim_in, n.dim_in) {
        return Err(dim_mismatch("sigma must act on the channel input"));
    }
    crate::channels::require_state(sigma, 1e-8)?;
    let omega = n.apply(sigma)?;
    let omega_sp = eig_unchecked(&omega);
    let projector = omega_sp.support_projector(SUPPORT_CUTOFF);
    Ok(PetzData { sigma_sp: eig_unchecked(sigma), omega_sp, adjoint: n.adjoint(), projector })
}

/// Choi of P^t(X) = σ^{1/2−it} N*(ω^{−1/2+it} X ω^{−1/2−it}) σ^{1/2+it}, ω = N(σ).
fn rotated_choi(d: &PetzData, t: f64) -> CMat {
    let l = cpow(&d.omega_sp, c(-0.5, t));
    let m = cpow(&d.sigma_sp, c(0.5, -t));
    conjugated_map(&d.adjoint, &l, &m).choi
}

fn maximally_mixed(d: usize) -> CMat {
    identity(d) / r(d as f64)
}

fn build(kind: RecoveryKind, sigma: &CMat, n: &Channel, d: PetzData, choi: CMat, quad: Option<QuadratureInfo>) -> RecoveryMap {
    RecoveryMap {
        kind,
        sigma: Some(sigma.clone()),
        channel: n.clone(),
        support_projector: d.projector,
        xi: maximally_mixed(n.dim_in),
        quadrature: quad,
        map: Channel::from_choi_unchecked(n.dim_out, n.dim_in, choi).expect("dims").certified(),
    }
}

/// P_{σ,N}(X) = σ^{1/2} N*(N(σ)^{−1/2} X N(σ)^{−1/2}) σ^{1/2}, with support pseudo-inverses.
pub fn petz(sigma: &CMat, n: &Channel) -> Result<RecoveryMap> {
    let d = prepare(sigma, n)?;
    let choi = rotated_choi(&d, 0.0);
    Ok(build(RecoveryKind::Petz, sigma, n, d, choi, None))
}

/// P^t = U_{σ,−t} ∘ P_{σ,N} ∘ U_{N(σ),t} with U_{σ,t}(X) = σ^{it} X σ^{−it}.
pub fn rotated_petz(sigma: &CMat, n: &Channel, t: f64) -> Result<RecoveryMap> {
    let d = prepare(sigma, n)?;
    let choi = rotated_choi(&d, t);
    Ok(build(RecoveryKind::Rotated { t }, sigma, n, d, choi, None))
}

/// Probability density α_t = (π/2)/(cosh(πt) + 1).
pub fn alpha_density(t: f64) -> f64 {
    let ch = (std::f64::consts::PI * t).cosh();
    if ch.is_infinite() {
        0.0
    } else {
        std::f64::consts::FRAC_PI_2 / (ch + 1.0)
    }
}

/// Composite Simpson nodes and weights for ∫ α_t dt on [−T, T].
pub fn simpson_nodes(q: &Quadrature) -> Result<Vec<(f64, f64)>> {
    q.validate()?;
    let n = q.nodes;
    let h = 2.0 * q.half_width / (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            let t = -q.half_width + k as f64 * h;
            let coef = if k == 0 || k == n - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (t, coef * h / 3.0 * alpha_density(t))
        })
        .collect())
}

/// P^R(X) = ∫ α_t P^{t/2}(X) dt + tr((1 − Π_{N(σ)}) X) ξ, with ξ maximally mixed.
pub fn universal_recovery(sigma: &CMat, n: &Channel, quad: &Quadrature) -> Result<RecoveryMap> {
    universal_recovery_with_xi(sigma, n, quad, None)
}

pub fn universal_recovery_with_xi(sigma: &CMat, n: &Channel, quad: &Quadrature, xi: Option<&CMat>) -> Result<RecoveryMap> {
    let nodes = simpson_nodes(quad)?;
    let d = prepare(sigma, n)?;
    let xi = match xi {
        Some(x) => {
            crate::channels::require_state(x, 1e-8)?;
            if x.shape() != (n.dim_in, n.dim_in) {
                return Err(dim_mismatch("xi must act on the channel input"));
            }
            x.clone()
        }
        None => maximally_mixed(n.dim_in),
    };
    // Renormalized so the discretized density has unit mass and P^R stays trace preserving.
    let weight_sum: f64 = nodes.iter().map(|p| p.1).sum();
    let terms: Vec<CMat> = nodes
        .par_iter()
        .map(|&(t, w)| if w == 0.0 { CMat::zeros(0, 0) } else { rotated_choi(&d, t / 2.0) * r(w / weight_sum) })
        .collect();
    let size = n.dim_in * n.dim_out;
    let mut choi = CMat::zeros(size, size);
    for term in terms.iter().filter(|m| m.nrows() > 0) {
        choi += term;
    }
    let kernel = identity(n.dim_out) - &d.projector;
    choi += trace_functional_choi(&kernel, &xi);
    let info = QuadratureInfo { half_width: quad.half_width, nodes: quad.nodes, weight_sum };
    let mut out = build(RecoveryKind::Universal, sigma, n, d, choi, Some(info));
    out.xi = xi;
    Ok(out)
}

/// P̃^R(X) = 𝔗*(X) + tr((id − 𝔗*)X) ξ, a map out → in of 𝔗.
pub fn tilde_recovery(t_frak: &Channel, xi: Option<&CMat>) -> Result<RecoveryMap> {
    let xi = match xi {
        Some(x) => x.clone(),
        None => maximally_mixed(t_frak.dim_in),
    };
    if xi.shape() != (t_frak.dim_in, t_frak.dim_in) {
        return Err(dim_mismatch("xi must act on the input of the forward map"));
    }
    let adj = t_frak.adjoint();
    // tr X − tr 𝔗*(X) = tr((1 − 𝔗(1)) X)
    let w = identity(t_frak.dim_out) - t_frak.image_of_identity();
    let choi = &adj.choi + trace_functional_choi(&w, &xi);
    Ok(RecoveryMap {
        kind: RecoveryKind::Tilde,
        sigma: None,
        channel: t_frak.clone(),
        support_projector: identity(t_frak.dim_out),
        xi,
        quadrature: None,
        map: Channel::from_choi_unchecked(t_frak.dim_out, t_frak.dim_in, choi)?.certified(),
    })
}

/// Θ^R(Ñ) with Choi operator T_Ψ⁻¹ P^R(C^Φ_Ñ), where P^R reverses 𝔗′ on σ = C^Ψ_M.
#[derive(Clone, Debug)]
pub struct RecoverySupermap {
    pub theta: Superchannel,
    pub m_anchor: Channel,
    pub psi: PureBipartiteState,
    pub phi: PureBipartiteState,
    pub tp_fixed: TpFixedMap,
    pub inner_recovery: RecoveryMap,
}

impl RecoverySupermap {
    /// Θ^R(Ñ) for Ñ: L(C) → L(D). CP/TP of the result is certified, not assumed.
    pub fn apply(&self, n_tilde: &Channel) -> Result<Channel> {
        let [a, b, c, d] = self.theta.dims;
        if n_tilde.dim_in != c || n_tilde.dim_out != d {
            return Err(dim_mismatch("recovery supermap input dims"));
        }
        let state = self.phi.output(n_tilde)?;
        let rec = self.inner_recovery.apply(&state)?;
        let choi = t_psi_inverse(&self.psi, b, &rec)?;
        Ok(Channel::from_choi_unchecked(a, b, crate::linalg::hermitize(&choi))?.certified())
    }

    /// (P^R ∘ 𝔗′)(C^Ψ_N).
    pub fn choi_level_round_trip(&self, n: &Channel) -> Result<CMat> {
        let x = self.psi.output(n)?;
        self.inner_recovery.apply(&self.tp_fixed.map.apply(&x)?)
    }

    /// ‖Ĉ_{Θ^R∘Θ(M)} − Ĉ_M‖_max.
    pub fn anchor_residual(&self) -> Result<f64> {
        let back = self.apply(&self.theta.apply(&self.m_anchor)?)?;
        Ok(max_abs(&(back.choi - &self.m_anchor.choi)))
    }
}

pub fn recovery_supermap(
    theta: &Superchannel,
    m: &Channel,
    psi: &PureBipartiteState,
    phi: &PureBipartiteState,
    quad: &Quadrature,
    rank_cutoff: f64,
) -> Result<RecoverySupermap> {
    m.require_cptp()?;
    let g = generalized_rep(theta, psi, phi, rank_cutoff)?;
    let fixed = tp_fix(&g.t_frak, None)?;
    if !fixed.is_cptp {
        return Err(crate::error::Error::Precondition(format!(
            "no sigma0 found making the repaired map CPTP (min eig {:.3e})",
            fixed.choi_min_eig
        )));
    }
    let sigma = crate::linalg::hermitize(&psi.output(m)?);
    let inner = universal_recovery(&sigma, &fixed.map, quad)?;
    Ok(RecoverySupermap {
        theta: theta.clone(),
        m_anchor: m.clone(),
        psi: psi.clone(),
        phi: phi.clone(),
        tp_fixed: fixed,
        inner_recovery: inner,
    })
}
