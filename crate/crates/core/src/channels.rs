//! Linear maps between operator spaces, stored by their Choi operators.
//!
//! A [`Channel`] is any linear map `L(A) → L(B)`. Whether it is completely
//! positive, trace preserving, unital or subunital is recorded in tri-state
//! flags carrying the numeric evidence, so intermediate maps that are not
//! channels at all (representing maps, differences, adjoints) share the type.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{
    self, c, herm_deviation, identity, max_abs, op_norm, partial_trace,
    permute_subsystems, r, tensor, unit, CMat, Keep, MatrixJson, C64,
};
use crate::random::{haar_isometry, stream_rng};

/// Residual allowed for the TP / unital certificates.
pub const CERT_TOL: f64 = 1e-10;
/// Residual allowed for covariance and twirl checks.
pub const COVARIANCE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Unverified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    /// Min eigenvalue for positivity checks, residual norm for equalities.
    pub value: Option<f64>,
}

impl Certificate {
    pub const UNVERIFIED: Certificate = Certificate { verdict: Verdict::Unverified, value: None };

    fn from_test(pass: bool, value: f64) -> Self {
        Certificate {
            verdict: if pass { Verdict::Yes } else { Verdict::No },
            value: Some(value),
        }
    }

    pub fn is_yes(&self) -> bool {
        self.verdict == Verdict::Yes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub cp: Certificate,
    pub tp: Certificate,
    pub unital: Certificate,
    pub subunital: Certificate,
}

impl Flags {
    pub const UNVERIFIED: Flags = Flags {
        cp: Certificate::UNVERIFIED,
        tp: Certificate::UNVERIFIED,
        unital: Certificate::UNVERIFIED,
        subunital: Certificate::UNVERIFIED,
    };
}

#[derive(Clone, Debug)]
pub struct Channel {
    pub dim_in: usize,
    pub dim_out: usize,
    /// Unnormalized Choi operator on input ⊗ output.
    pub choi: CMat,
    pub kraus: Option<Vec<CMat>>,
    pub flags: Flags,
    pub symmetry: Option<Arc<TeleCovariantSpec>>,
}

impl Channel {
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Channel> {
        Ok(Channel::from_choi_unchecked(dim_in, dim_out, choi)?.certified())
    }

    /// Builds the map without computing certificates.
    pub fn from_choi_unchecked(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Channel> {
        let n = dim_in * dim_out;
        if dim_in == 0 || dim_out == 0 || choi.nrows() != n || choi.ncols() != n {
            return Err(dim_mismatch(format!(
                "Choi operator {}x{} does not match dims {dim_in}->{dim_out}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        Ok(Channel { dim_in, dim_out, choi, kraus: None, flags: Flags::UNVERIFIED, symmetry: None })
    }

    pub fn from_kraus(kraus: &[CMat]) -> Result<Channel> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let (dout, din) = first.shape();
        if kraus.iter().any(|k| k.shape() != (dout, din)) {
            return Err(dim_mismatch("Kraus operators differ in shape"));
        }
        let mut choi = CMat::zeros(din * dout, din * dout);
        for k in kraus {
            let v = kraus_vec(k);
            choi += &v * v.adjoint();
        }
        let mut ch = Channel::from_choi_unchecked(din, dout, choi)?;
        ch.kraus = Some(kraus.to_vec());
        Ok(ch.certified())
    }

    /// Recomputes all certificates from the Choi operator.
    pub fn certified(mut self) -> Channel {
        let dev = herm_deviation(&self.choi);
        let scale = max_abs(&self.choi).max(1.0);
        self.flags.cp = if self.kraus.is_some() {
            Certificate::from_test(true, linalg::min_eig(&self.choi))
        } else if dev > linalg::HERM_TOL * scale {
            Certificate::from_test(false, f64::NEG_INFINITY)
        } else {
            let lo = linalg::min_eig(&self.choi);
            Certificate::from_test(lo >= -linalg::PSD_TOL * scale, lo)
        };
        let tr_out = self.trace_out();
        let tp_res = max_abs(&(&tr_out - identity(self.dim_in)));
        self.flags.tp = Certificate::from_test(tp_res <= CERT_TOL, tp_res);
        let n1 = self.image_of_identity();
        let un_res = max_abs(&(&n1 - identity(self.dim_out)));
        self.flags.unital = Certificate::from_test(un_res <= CERT_TOL, un_res);
        let sub = if herm_deviation(&n1) > CERT_TOL {
            f64::NEG_INFINITY
        } else {
            linalg::min_eig(&(identity(self.dim_out) - &n1))
        };
        self.flags.subunital = Certificate::from_test(sub >= -linalg::PSD_TOL, sub);
        self
    }

    pub fn is_cptp(&self) -> bool {
        self.flags.cp.is_yes() && self.flags.tp.is_yes()
    }

    pub fn require_cptp(&self) -> Result<()> {
        let ch = if self.flags.cp.verdict == Verdict::Unverified
            || self.flags.tp.verdict == Verdict::Unverified
        {
            self.clone().certified()
        } else {
            self.clone()
        };
        if !ch.flags.cp.is_yes() {
            return Err(Error::NotCp(ch.flags.cp.value.unwrap_or(f64::NAN)));
        }
        if !ch.flags.tp.is_yes() {
            return Err(Error::NotTp(ch.flags.tp.value.unwrap_or(f64::NAN)));
        }
        Ok(())
    }

    pub fn require_cp(&self) -> Result<()> {
        let cert = if self.flags.cp.verdict == Verdict::Unverified {
            self.clone().certified().flags.cp
        } else {
            self.flags.cp
        };
        if cert.is_yes() {
            Ok(())
        } else {
            Err(Error::NotCp(cert.value.unwrap_or(f64::NAN)))
        }
    }

    /// Normalized Choi state Ĉ/|A|.
    pub fn choi_state(&self) -> CMat {
        &self.choi / r(self.dim_in as f64)
    }

    /// tr_B Ĉ, whose (i, j) entry is tr N(|i⟩⟨j|).
    pub fn trace_out(&self) -> CMat {
        partial_trace(&self.choi, (self.dim_in, self.dim_out), Keep::First).expect("shape checked")
    }

    /// N(1) = tr_A Ĉ.
    pub fn image_of_identity(&self) -> CMat {
        partial_trace(&self.choi, (self.dim_in, self.dim_out), Keep::Second).expect("shape checked")
    }

    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.dim_in || x.ncols() != self.dim_in {
            return Err(dim_mismatch(format!(
                "input {}x{} for map with dim_in {}",
                x.nrows(),
                x.ncols(),
                self.dim_in
            )));
        }
        Ok(self.act(x))
    }

    /// N(X) = Σ_ij X_ij N(|i⟩⟨j|); caller guarantees the shape.
    pub(crate) fn act(&self, x: &CMat) -> CMat {
        let (da, db) = (self.dim_in, self.dim_out);
        let mut out = CMat::zeros(db, db);
        for i in 0..da {
            for j in 0..da {
                let xij = x[(i, j)];
                if xij == C64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..db {
                    for a in 0..db {
                        out[(a, b)] += xij * self.choi[(i * db + a, j * db + b)];
                    }
                }
            }
        }
        out
    }

    /// N(|i⟩⟨j|) read directly from the Choi operator.
    pub fn block(&self, i: usize, j: usize) -> CMat {
        let db = self.dim_out;
        self.choi.view((i * db, j * db), (db, db)).into_owned()
    }

    pub fn adjoint(&self) -> Channel {
        let (da, db) = (self.dim_in, self.dim_out);
        let choi = CMat::from_fn(db * da, db * da, |row, col| {
            let (a, i) = (row / da, row % da);
            let (b, j) = (col / da, col % da);
            self.choi[(i * db + a, j * db + b)].conj()
        });
        let flags = Flags {
            cp: self.flags.cp,
            tp: self.flags.unital,
            unital: self.flags.tp,
            subunital: Certificate::UNVERIFIED,
        };
        Channel {
            dim_in: db,
            dim_out: da,
            choi,
            kraus: self.kraus.as_ref().map(|ks| ks.iter().map(|k| k.adjoint()).collect()),
            flags,
            symmetry: None,
        }
    }

    /// Kraus operators, taken from storage or from the Choi spectrum.
    pub fn kraus_ops(&self) -> Result<Vec<CMat>> {
        if let Some(k) = &self.kraus {
            return Ok(k.clone());
        }
        let sp = linalg::herm_eig(&self.choi)?;
        let scale = sp.max().abs().max(1.0);
        if sp.min() < -linalg::PSD_TOL * scale {
            return Err(Error::NotCp(sp.min()));
        }
        let (da, db) = (self.dim_in, self.dim_out);
        let mut ops = Vec::new();
        for (k, &lam) in sp.eigenvalues.iter().enumerate().rev() {
            if lam <= linalg::SUPPORT_CUTOFF * scale {
                continue;
            }
            let v = sp.eigenvectors.column(k) * r(lam.sqrt());
            ops.push(CMat::from_fn(db, da, |a, i| v[i * db + a]));
        }
        if ops.is_empty() {
            ops.push(CMat::zeros(db, da));
        }
        Ok(ops)
    }

    pub fn scaled(&self, s: f64) -> Channel {
        let mut ch = Channel::from_choi_unchecked(self.dim_in, self.dim_out, &self.choi * r(s))
            .expect("same shape");
        if s >= 0.0 {
            ch.kraus = self
                .kraus
                .as_ref()
                .map(|ks| ks.iter().map(|k| k * r(s.sqrt())).collect());
        }
        ch
    }

    pub fn plus(&self, other: &Channel) -> Result<Channel> {
        self.same_dims(other)?;
        Channel::from_choi_unchecked(self.dim_in, self.dim_out, &self.choi + &other.choi)
    }

    pub fn minus(&self, other: &Channel) -> Result<Channel> {
        self.same_dims(other)?;
        Channel::from_choi_unchecked(self.dim_in, self.dim_out, &self.choi - &other.choi)
    }

    fn same_dims(&self, other: &Channel) -> Result<()> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(dim_mismatch(format!(
                "maps {}->{} and {}->{}",
                self.dim_in, self.dim_out, other.dim_in, other.dim_out
            )));
        }
        Ok(())
    }

    /// If N(X) = tr(X)·τ for a fixed τ, returns τ.
    pub fn as_replacer(&self, tol: f64) -> Option<CMat> {
        let tau = self.block(0, 0);
        let expect = tensor(&identity(self.dim_in), &tau);
        (max_abs(&(&expect - &self.choi)) <= tol).then_some(tau)
    }

    /// Max over group elements of the Choi-level residual of N∘U_g − V_g∘N.
    pub fn covariance_residual(&self, spec: &TeleCovariantSpec) -> f64 {
        if spec.dim_in() != self.dim_in || spec.dim_out() != self.dim_out {
            return f64::INFINITY;
        }
        let ia = identity(self.dim_in);
        let ib = identity(self.dim_out);
        spec.reps_in
            .iter()
            .zip(&spec.reps_out)
            .map(|(u, v)| {
                let left = tensor(&u.transpose(), &ib);
                let lhs = &left * &self.choi * left.adjoint();
                let right = tensor(&ia, v);
                let rhs = &right * &self.choi * right.adjoint();
                max_abs(&(lhs - rhs))
            })
            .fold(0.0, f64::max)
    }

    /// Attaches a covariance group after checking the covariance residual.
    pub fn with_symmetry(mut self, spec: Arc<TeleCovariantSpec>) -> Result<Channel> {
        let res = self.covariance_residual(&spec);
        if res > COVARIANCE_TOL * max_abs(&self.choi).max(1.0) {
            return Err(Error::Precondition(format!(
                "channel is not covariant under '{}' (residual {res:e})",
                spec.label
            )));
        }
        self.symmetry = Some(spec);
        Ok(self)
    }

    /// Attaches the group when the channel happens to be covariant under it.
    pub fn try_symmetry(self, spec: &Arc<TeleCovariantSpec>) -> Channel {
        let attempt = self.clone().with_symmetry(spec.clone());
        attempt.unwrap_or(self)
    }
}

/// vec with entry (i·d_out + a) = K[a, i], so |v⟩⟨v| is the Choi operator of K·K†.
pub(crate) fn kraus_vec(k: &CMat) -> CMat {
    let (db, da) = k.shape();
    CMat::from_fn(da * db, 1, |idx, _| k[(idx % db, idx / db)])
}

pub fn identity_channel(d: usize) -> Channel {
    Channel::from_kraus(&[identity(d)]).expect("identity Kraus")
}

pub fn unitary_channel(u: &CMat) -> Result<Channel> {
    Channel::from_kraus(std::slice::from_ref(u))
}

/// R(X) = tr(X)·1_B; not trace preserving unless |B| = 1.
pub fn depolarizing_r(dim_in: usize, dim_out: usize) -> Channel {
    Channel::from_choi(dim_in, dim_out, identity(dim_in * dim_out)).expect("identity Choi")
}

/// R̃(X) = tr(X)·1_B/|B|.
pub fn depolarizing_tilde(dim_in: usize, dim_out: usize) -> Channel {
    Channel::from_choi(dim_in, dim_out, identity(dim_in * dim_out) / r(dim_out as f64))
        .expect("identity Choi")
}

/// N(X) = tr(X)·σ.
pub fn replacer(dim_in: usize, sigma: &CMat) -> Result<Channel> {
    if !sigma.is_square() {
        return Err(Error::NotSquare { rows: sigma.nrows(), cols: sigma.ncols() });
    }
    Channel::from_choi(dim_in, sigma.nrows(), tensor(&identity(dim_in), sigma))
}

pub fn compose(n2: &Channel, n1: &Channel) -> Result<Channel> {
    if n1.dim_out != n2.dim_in {
        return Err(dim_mismatch(format!(
            "cannot compose {}->{} after {}->{}",
            n2.dim_in, n2.dim_out, n1.dim_in, n1.dim_out
        )));
    }
    let (da, dc) = (n1.dim_in, n2.dim_out);
    let mut choi = CMat::zeros(da * dc, da * dc);
    for i in 0..da {
        for j in 0..da {
            let blk = n2.act(&n1.block(i, j));
            choi.view_mut((i * dc, j * dc), (dc, dc)).copy_from(&blk);
        }
    }
    let mut out = Channel::from_choi_unchecked(da, dc, choi)?;
    if let (Some(k2), Some(k1)) = (&n2.kraus, &n1.kraus) {
        if k1.len() * k2.len() <= 256 {
            out.kraus = Some(k2.iter().flat_map(|b| k1.iter().map(move |a| b * a)).collect());
        }
    }
    Ok(out)
}

pub fn tensor_channels(n: &Channel, m: &Channel) -> Channel {
    let (a1, b1, a2, b2) = (n.dim_in, n.dim_out, m.dim_in, m.dim_out);
    let choi = permute_subsystems(&tensor(&n.choi, &m.choi), &[a1, b1, a2, b2], &[0, 2, 1, 3])
        .expect("consistent dims");
    let mut out = Channel::from_choi_unchecked(a1 * a2, b1 * b2, choi).expect("consistent dims");
    if let (Some(kn), Some(km)) = (&n.kraus, &m.kraus) {
        out.kraus = Some(kn.iter().flat_map(|x| km.iter().map(move |y| tensor(x, y))).collect());
    }
    out.flags = Flags {
        cp: both(n.flags.cp, m.flags.cp),
        tp: both(n.flags.tp, m.flags.tp),
        unital: both(n.flags.unital, m.flags.unital),
        subunital: Certificate::UNVERIFIED,
    };
    if let (Some(sn), Some(sm)) = (&n.symmetry, &m.symmetry) {
        out.symmetry = Some(Arc::new(TeleCovariantSpec::product(sn, sm)));
    }
    out
}

fn both(a: Certificate, b: Certificate) -> Certificate {
    if a.is_yes() && b.is_yes() {
        Certificate { verdict: Verdict::Yes, value: None }
    } else {
        Certificate::UNVERIFIED
    }
}

/// ⟨N, M⟩ = tr(Ĉ_N† Ĉ_M).
pub fn channel_inner_product(n: &Channel, m: &Channel) -> Result<C64> {
    n.same_dims(m)?;
    Ok(linalg::hs_inner(&n.choi, &m.choi))
}

pub fn pauli_matrices() -> [CMat; 4] {
    let i = identity(2);
    let x = CMat::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)]);
    let y = CMat::from_row_slice(2, 2, &[r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)]);
    let z = CMat::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(-1.0)]);
    [i, x, y, z]
}

/// ρ ↦ Σ_k p_k σ_k ρ σ_k with σ = (1, X, Y, Z). Carries the Pauli group.
pub fn pauli_channel(probs: [f64; 4]) -> Result<Channel> {
    if probs.iter().any(|&p| p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("Pauli weights must be a distribution".into()));
    }
    let ks: Vec<CMat> = pauli_matrices()
        .iter()
        .zip(probs)
        .filter(|(_, p)| *p > 0.0)
        .map(|(s, p)| s * r(p.sqrt()))
        .collect();
    Channel::from_kraus(&ks)?.with_symmetry(Arc::new(TeleCovariantSpec::pauli()))
}

/// The 24 single-qubit Clifford unitaries modulo phase, generated by H and S.
pub fn qubit_cliffords() -> Vec<CMat> {
    let h = CMat::from_row_slice(2, 2, &[r(1.0), r(1.0), r(1.0), r(-1.0)]) / r(2f64.sqrt());
    let s = CMat::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), c(0.0, 1.0)]);
    let canonical = |u: &CMat| -> CMat {
        let pivot = u.iter().find(|z| z.norm() > 1e-9).copied().unwrap_or(r(1.0));
        u * (pivot.conj() / pivot.norm())
    };
    let mut group = vec![identity(2)];
    let mut frontier = vec![identity(2)];
    while let Some(u) = frontier.pop() {
        for g in [&h, &s] {
            let v = canonical(&(g * &u));
            if !group.iter().any(|w| max_abs(&(w - &v)) < 1e-9) {
                group.push(v.clone());
                frontier.push(v);
            }
        }
    }
    group
}

/// Qubit depolarizing ρ ↦ (1 − p)ρ + p·tr(ρ)·1/2.
pub fn depolarizing(p: f64) -> Result<Channel> {
    pauli_channel([1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p])
}

/// Qubit dephasing ρ ↦ (1 − p)ρ + p·ZρZ.
pub fn dephasing(p: f64) -> Result<Channel> {
    pauli_channel([1.0 - p, 0.0, 0.0, p])
}

/// Stinespring channel from a Haar-random isometry into output ⊗ environment.
pub fn random_channel(dim_in: usize, dim_out: usize, env_dim: usize, seed: u64) -> Result<Channel> {
    random_channel_with(dim_in, dim_out, env_dim, &mut stream_rng(seed, 0))
}

pub fn random_channel_with<R: Rng + ?Sized>(
    dim_in: usize,
    dim_out: usize,
    env_dim: usize,
    rng: &mut R,
) -> Result<Channel> {
    if env_dim == 0 || dim_in == 0 || dim_out == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    if dim_out * env_dim < dim_in {
        return Err(Error::InvalidArgument(format!(
            "no isometry from {dim_in} into {dim_out}x{env_dim}"
        )));
    }
    let v = haar_isometry(dim_in, dim_out * env_dim, rng);
    let ks: Vec<CMat> = (0..env_dim)
        .map(|e| CMat::from_fn(dim_out, dim_in, |b, i| v[(b * env_dim + e, i)]))
        .collect();
    Channel::from_kraus(&ks)
}

/// Random CP map with Gaussian Kraus operators (no trace condition).
pub fn random_cp_map<R: Rng + ?Sized>(dim_in: usize, dim_out: usize, n_kraus: usize, rng: &mut R) -> Channel {
    let s = r(1.0 / (dim_in as f64).sqrt());
    let ks: Vec<CMat> = (0..n_kraus.max(1))
        .map(|_| crate::random::ginibre(dim_out, dim_in, rng) * s)
        .collect();
    Channel::from_kraus(&ks).expect("consistent shapes")
}

/// Finite-dimensional thermalizing map X ↦ tr(X)·exp(−βH).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThermalMap {
    #[serde(with = "linalg::cmat_serde")]
    pub hamiltonian: CMat,
    pub beta: f64,
}

impl ThermalMap {
    /// τ̂_β = exp(−βH) with natural exponential.
    pub fn thermal_operator(&self) -> Result<CMat> {
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument("inverse temperature must be >= 0".into()));
        }
        let sp = linalg::herm_eig(&self.hamiltonian)?;
        if sp.min() < -linalg::PSD_TOL {
            return Err(Error::InvalidArgument("Hamiltonian must have spectrum >= 0".into()));
        }
        Ok(sp.apply(|e| (-self.beta * e).exp()))
    }
}

pub fn thermal_map(spec: &ThermalMap, dim_in: usize) -> Result<Channel> {
    let tau = spec.thermal_operator()?;
    Channel::from_choi(dim_in, tau.nrows(), tensor(&identity(dim_in), &tau))
}

/// Unitary representations U_g on the input and V_g on the output.
#[derive(Clone, Debug)]
pub struct TeleCovariantSpec {
    pub label: String,
    pub reps_in: Vec<CMat>,
    pub reps_out: Vec<CMat>,
}

impl TeleCovariantSpec {
    pub fn new(label: impl Into<String>, reps_in: Vec<CMat>, reps_out: Vec<CMat>) -> Result<Self> {
        let spec = TeleCovariantSpec { label: label.into(), reps_in, reps_out };
        spec.validate()?;
        Ok(spec)
    }

    pub fn group_size(&self) -> usize {
        self.reps_in.len()
    }

    pub fn dim_in(&self) -> usize {
        self.reps_in.first().map_or(0, |u| u.nrows())
    }

    pub fn dim_out(&self) -> usize {
        self.reps_out.first().map_or(0, |v| v.nrows())
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps_in.is_empty() || self.reps_in.len() != self.reps_out.len() {
            return Err(Error::InvalidArgument("representations must be non-empty and paired".into()));
        }
        for u in self.reps_in.iter().chain(&self.reps_out) {
            if !linalg::is_unitary(u, 1e-10) {
                return Err(Error::InvalidArgument("representation element is not unitary".into()));
            }
        }
        if self.reps_in.iter().any(|u| u.nrows() != self.dim_in())
            || self.reps_out.iter().any(|v| v.nrows() != self.dim_out())
        {
            return Err(dim_mismatch("representation elements differ in dimension"));
        }
        let res = self.twirl_residual();
        if res > COVARIANCE_TOL {
            return Err(Error::Precondition(format!("input twirl is not depolarizing (residual {res:e})")));
        }
        Ok(())
    }

    /// Max deviation of |G|⁻¹ Σ_g U_g X U_g† from tr(X)·1/|A| over matrix units X.
    pub fn twirl_residual(&self) -> f64 {
        let d = self.dim_in();
        let g = self.group_size() as f64;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let x = unit(d, i, j);
                let mut acc = CMat::zeros(d, d);
                for u in &self.reps_in {
                    acc += u * &x * u.adjoint();
                }
                acc /= r(g);
                if i == j {
                    acc -= identity(d) / r(d as f64);
                }
                worst = worst.max(max_abs(&acc));
            }
        }
        worst
    }

    /// The qubit Pauli group {1, X, Y, Z} acting identically on input and output.
    pub fn pauli() -> Self {
        let ps = pauli_matrices().to_vec();
        TeleCovariantSpec { label: "pauli".into(), reps_in: ps.clone(), reps_out: ps }
    }

    /// Discrete Weyl-Heisenberg group X^a Z^b in dimension d.
    pub fn weyl_heisenberg(d: usize) -> Self {
        let shift = CMat::from_fn(d, d, |i, j| if i == (j + 1) % d { r(1.0) } else { r(0.0) });
        let w = std::f64::consts::TAU / d as f64;
        let clock = CMat::from_fn(d, d, |i, j| if i == j { C64::from_polar(1.0, w * i as f64) } else { r(0.0) });
        let mut ops = Vec::with_capacity(d * d);
        let mut xa = identity(d);
        for _ in 0..d {
            let mut zb = identity(d);
            for _ in 0..d {
                ops.push(&xa * &zb);
                zb = &zb * &clock;
            }
            xa = &xa * &shift;
        }
        TeleCovariantSpec { label: format!("weyl-heisenberg-{d}"), reps_in: ops.clone(), reps_out: ops }
    }

    pub fn product(a: &TeleCovariantSpec, b: &TeleCovariantSpec) -> Self {
        let mut reps_in = Vec::new();
        let mut reps_out = Vec::new();
        for (ua, va) in a.reps_in.iter().zip(&a.reps_out) {
            for (ub, vb) in b.reps_in.iter().zip(&b.reps_out) {
                reps_in.push(tensor(ua, ub));
                reps_out.push(tensor(va, vb));
            }
        }
        TeleCovariantSpec { label: format!("{}x{}", a.label, b.label), reps_in, reps_out }
    }

    /// Same group elements, in the same order, within 1e-12.
    pub fn same_group(&self, other: &TeleCovariantSpec) -> bool {
        self.group_size() == other.group_size()
            && self.dim_in() == other.dim_in()
            && self.dim_out() == other.dim_out()
            && self
                .reps_in
                .iter()
                .chain(&self.reps_out)
                .zip(other.reps_in.iter().chain(&other.reps_out))
                .all(|(a, b)| max_abs(&(a - b)) <= 1e-12)
    }
}

/// Group twirl |G|⁻¹ Σ_g V_g† ∘ N ∘ U_g, which is covariant by construction.
pub fn telecov_channel(spec: &Arc<TeleCovariantSpec>, base: &Channel) -> Result<Channel> {
    spec.validate()?;
    if spec.dim_in() != base.dim_in || spec.dim_out() != base.dim_out {
        return Err(dim_mismatch("group and channel dimensions differ"));
    }
    let g = spec.group_size() as f64;
    let mut choi = CMat::zeros(base.choi.nrows(), base.choi.ncols());
    for (u, v) in spec.reps_in.iter().zip(&spec.reps_out) {
        let w = tensor(&u.transpose(), &v.adjoint());
        choi += &w * &base.choi * w.adjoint();
    }
    choi /= r(g);
    let mut out = Channel::from_choi_unchecked(base.dim_in, base.dim_out, choi)?;
    if let Some(ks) = &base.kraus {
        let s = r(1.0 / g.sqrt());
        out.kraus = Some(
            spec.reps_in
                .iter()
                .zip(&spec.reps_out)
                .flat_map(|(u, v)| ks.iter().map(move |k| v.adjoint() * k * u * s))
                .collect(),
        );
    }
    out.certified().with_symmetry(spec.clone())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TeleCovariantSpecJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub unitaries_in: Vec<MatrixJson>,
    pub unitaries_out: Vec<MatrixJson>,
}

impl From<&TeleCovariantSpec> for TeleCovariantSpecJson {
    fn from(s: &TeleCovariantSpec) -> Self {
        TeleCovariantSpecJson {
            label: Some(s.label.clone()),
            unitaries_in: s.reps_in.iter().map(MatrixJson::from).collect(),
            unitaries_out: s.reps_out.iter().map(MatrixJson::from).collect(),
        }
    }
}

impl TryFrom<TeleCovariantSpecJson> for TeleCovariantSpec {
    type Error = Error;

    fn try_from(j: TeleCovariantSpecJson) -> Result<Self> {
        let conv = |v: Vec<MatrixJson>| v.into_iter().map(CMat::try_from).collect::<Result<Vec<_>>>();
        TeleCovariantSpec::new(
            j.label.unwrap_or_else(|| "custom".into()),
            conv(j.unitaries_in)?,
            conv(j.unitaries_out)?,
        )
    }
}

/// External channel encoding: either Kraus operators or a Choi operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_out: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixJson>,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<TeleCovariantSpecJson>,
}

impl From<&Channel> for ChannelJson {
    fn from(ch: &Channel) -> Self {
        ChannelJson {
            dim_in: Some(ch.dim_in),
            dim_out: Some(ch.dim_out),
            kraus: ch.kraus.as_ref().map(|ks| ks.iter().map(MatrixJson::from).collect()),
            choi: if ch.kraus.is_some() { None } else { Some(MatrixJson::from(&ch.choi)) },
            normalized: false,
            symmetry: ch.symmetry.as_deref().map(TeleCovariantSpecJson::from),
        }
    }
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Channel> {
        let mut ch = match (j.kraus, j.choi) {
            (Some(ks), None) => {
                let ks = ks.into_iter().map(CMat::try_from).collect::<Result<Vec<_>>>()?;
                let ch = Channel::from_kraus(&ks)?;
                if j.dim_in.is_some_and(|d| d != ch.dim_in) || j.dim_out.is_some_and(|d| d != ch.dim_out) {
                    return Err(dim_mismatch("declared dims disagree with Kraus shapes"));
                }
                ch
            }
            (None, Some(m)) => {
                let m = CMat::try_from(m)?;
                let n = m.nrows();
                let (da, db) = match (j.dim_in, j.dim_out) {
                    (Some(a), Some(b)) => (a, b),
                    (Some(a), None) if a > 0 && n % a == 0 => (a, n / a),
                    (None, Some(b)) if b > 0 && n % b == 0 => (n / b, b),
                    (None, None) => {
                        let d = (n as f64).sqrt().round() as usize;
                        if d * d != n {
                            return Err(dim_mismatch("Choi size is not a square; give dim_in/dim_out"));
                        }
                        (d, d)
                    }
                    _ => return Err(dim_mismatch("declared dims do not divide the Choi size")),
                };
                let m = if j.normalized { m * r(da as f64) } else { m };
                Channel::from_choi(da, db, m)?
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "channel needs exactly one of 'kraus' or 'choi'".into(),
                ))
            }
        };
        if let Some(s) = j.symmetry {
            ch = ch.with_symmetry(Arc::new(TeleCovariantSpec::try_from(s)?))?;
        }
        Ok(ch)
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Channel, D::Error> {
        Channel::try_from(ChannelJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Spectral check that `x` is a valid density operator.
pub fn require_state(x: &CMat, trace_tol: f64) -> Result<()> {
    let sp = linalg::herm_eig(x)?;
    if sp.min() < -linalg::PSD_TOL {
        return Err(Error::NotPsd(sp.min()));
    }
    let t = x.trace().re;
    if (t - 1.0).abs() > trace_tol {
        return Err(Error::InvalidArgument(format!("state has trace {t}")));
    }
    Ok(())
}

/// Max singular value of the operator X ↦ N(X), used for op-norm bounds.
pub fn op_norm_of_identity_image(n: &Channel) -> f64 {
    op_norm(&n.image_of_identity())
}

/// Ĉ of X ↦ tr(W X)·σ, which is Wᵀ ⊗ σ.
pub(crate) fn trace_functional_choi(w: &CMat, sigma: &CMat) -> CMat {
    tensor(&w.transpose(), sigma)
}
