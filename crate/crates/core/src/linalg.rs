//! Dense complex linear algebra on small operators.
//!
//! Everything here works on `DMatrix<Complex64>`. Spectral functions treat
//! eigenvalues below a support cutoff as exact zeros, which is how
//! support-restricted logarithms and pseudo-inverses are realized.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const SUPPORT_CUTOFF: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const HERM_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Matrix unit |i⟩⟨j| in dimension `d`.
pub fn unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = r(1.0);
    m
}

pub fn ket(d: usize, i: usize) -> CMat {
    let mut v = CMat::zeros(d, 1);
    v[(i, 0)] = r(1.0);
    v
}

pub fn diag(entries: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        entries.len(),
        entries.iter().map(|&x| r(x)),
    ))
}

pub fn trace(x: &CMat) -> C64 {
    x.trace()
}

/// Hilbert-Schmidt inner product tr(a† b).
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn herm_deviation(x: &CMat) -> f64 {
    if !x.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(x - x.adjoint()))
}

pub fn hermitize(x: &CMat) -> CMat {
    (x + x.adjoint()).scale(0.5)
}

fn require_square(x: &CMat) -> Result<usize> {
    if x.is_square() {
        Ok(x.nrows())
    } else {
        Err(Error::NotSquare { rows: x.nrows(), cols: x.ncols() })
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectral {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl Spectral {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// U f(Λ) U† with a complex-valued spectral function.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> CMat {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let fk = f(lam);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= fk;
            }
        }
        scaled * u.adjoint()
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        self.apply_complex(|x| r(f(x)))
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply(|x| x)
    }

    /// Projector onto eigenvalues at or above `cutoff`.
    pub fn support_projector(&self, cutoff: f64) -> CMat {
        self.apply(|x| if x >= cutoff { 1.0 } else { 0.0 })
    }
}

pub fn herm_eig(m: &CMat) -> Result<Spectral> {
    herm_eig_tol(m, HERM_TOL)
}

pub fn herm_eig_tol(m: &CMat, herm_tol: f64) -> Result<Spectral> {
    require_square(m)?;
    let dev = herm_deviation(m);
    // Relative slack keeps large-norm operators from tripping the check.
    let scale = max_abs(m).max(1.0);
    if dev > herm_tol * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(eig_unchecked(m))
}

/// Eigendecomposition of the Hermitian part without any validation.
pub fn eig_unchecked(m: &CMat) -> Spectral {
    let n = m.nrows();
    if n == 0 {
        return Spectral { eigenvalues: vec![], eigenvectors: CMat::zeros(0, 0) };
    }
    let se = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Spectral { eigenvalues, eigenvectors }
}

pub fn min_eig(m: &CMat) -> f64 {
    eig_unchecked(m).min()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatFn {
    Log2,
    Pow(f64),
    Sqrt,
    InvSqrt,
}

impl MatFn {
    fn eval(self, x: f64) -> f64 {
        match self {
            MatFn::Log2 => x.log2(),
            MatFn::Pow(a) => x.powf(a),
            MatFn::Sqrt => x.sqrt(),
            MatFn::InvSqrt => 1.0 / x.sqrt(),
        }
    }
}

/// Applies `f` on the support of a PSD operator; the kernel maps to zero.
pub fn mat_fn_psd(p: &CMat, f: MatFn, cutoff: f64) -> Result<CMat> {
    let sp = herm_eig(p)?;
    psd_guard(&sp, PSD_TOL)?;
    Ok(spectral_fn(&sp, f, cutoff))
}

pub fn spectral_fn(sp: &Spectral, f: MatFn, cutoff: f64) -> CMat {
    sp.apply(|x| if x >= cutoff { f.eval(x) } else { 0.0 })
}

fn psd_guard(sp: &Spectral, tol: f64) -> Result<()> {
    let lo = sp.min();
    let scale = sp.max().abs().max(1.0);
    if lo < -tol * scale {
        Err(Error::NotPsd(lo))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on C^{d1} ⊗ C^{d2}.
pub fn partial_trace(x: &CMat, dims: (usize, usize), keep: Keep) -> Result<CMat> {
    let (d1, d2) = dims;
    if x.nrows() != d1 * d2 || x.ncols() != d1 * d2 {
        return Err(dim_mismatch(format!(
            "partial trace over {d1}x{d2} applied to {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(match keep {
        Keep::First => CMat::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| x[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Keep::Second => CMat::from_fn(d2, d2, |a, b| {
            (0..d1).map(|k| x[(k * d2 + a, k * d2 + b)]).sum()
        }),
    })
}

/// Reorders tensor factors. Output factor `k` is input factor `perm[k]`.
pub fn permute_subsystems(x: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if x.nrows() != total || x.ncols() != total || perm.len() != dims.len() {
        return Err(dim_mismatch("subsystem permutation does not fit operator"));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map = permutation_index(dims, perm, &new_dims);
    let mut out = CMat::zeros(total, total);
    for (r_new, &r_old) in map.iter().enumerate() {
        for (c_new, &c_old) in map.iter().enumerate() {
            out[(r_new, c_new)] = x[(r_old, c_old)];
        }
    }
    Ok(out)
}

/// For each index in the permuted basis, the index in the original basis.
fn permutation_index(dims: &[usize], perm: &[usize], new_dims: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let n = dims.len();
    let mut old_strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        old_strides[k] = old_strides[k + 1] * dims[k + 1];
    }
    let mut digits = vec![0usize; n];
    (0..total)
        .map(|mut idx| {
            for k in (0..n).rev() {
                digits[k] = idx % new_dims[k];
                idx /= new_dims[k];
            }
            (0..n).map(|k| digits[k] * old_strides[perm[k]]).sum()
        })
        .collect()
}

pub fn tensor(x: &CMat, y: &CMat) -> CMat {
    x.kronecker(y)
}

pub fn tensor_all(xs: &[&CMat]) -> CMat {
    xs.iter()
        .fold(CMat::from_element(1, 1, r(1.0)), |acc, x| acc.kronecker(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub trace_norm: f64,
    pub frobenius: f64,
    pub op_norm: f64,
}

pub fn norms(x: &CMat) -> Norms {
    if x.is_empty() {
        return Norms { trace_norm: 0.0, frobenius: 0.0, op_norm: 0.0 };
    }
    let sv = x.clone().svd(false, false).singular_values;
    Norms {
        trace_norm: sv.iter().sum(),
        frobenius: x.norm(),
        op_norm: sv.iter().copied().fold(0.0, f64::max),
    }
}

pub fn trace_norm(x: &CMat) -> f64 {
    if x.is_square() && herm_deviation(x) <= 1e-12 * max_abs(x).max(1.0) {
        eig_unchecked(x).eigenvalues.iter().map(|v| v.abs()).sum()
    } else {
        norms(x).trace_norm
    }
}

pub fn op_norm(x: &CMat) -> f64 {
    if x.is_square() && herm_deviation(x) <= 1e-12 * max_abs(x).max(1.0) {
        let sp = eig_unchecked(x);
        sp.min().abs().max(sp.max().abs())
    } else {
        norms(x).op_norm
    }
}

/// F(ρ, σ) = ‖√ρ √σ‖₁².
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(dim_mismatch("fidelity arguments differ in shape"));
    }
    let sp = herm_eig(rho)?;
    psd_guard(&sp, PSD_TOL)?;
    let ss = herm_eig(sigma)?;
    psd_guard(&ss, PSD_TOL)?;
    let sqrt_rho = sp.apply(|x| x.max(0.0).sqrt());
    let inner = &sqrt_rho * sigma * &sqrt_rho;
    let root: f64 = eig_unchecked(&inner)
        .eigenvalues
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .sum();
    Ok((root * root).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eig: f64,
}

pub fn psd_check(x: &CMat, tol: f64) -> PsdCheck {
    let min_eig = if x.is_empty() { 0.0 } else { min_eig(x) };
    PsdCheck { is_psd: min_eig >= -tol, min_eig }
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    u.is_square() && max_abs(&(u.adjoint() * u - identity(u.nrows()))) <= tol
}

pub fn is_isometry(v: &CMat, tol: f64) -> bool {
    max_abs(&(v.adjoint() * v - identity(v.ncols()))) <= tol
}

/// Row-major JSON form `{"rows", "cols", "data": [[re, im], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<MatrixJson> for CMat {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<CMat> {
        if j.rows * j.cols != j.data.len() {
            return Err(Error::InvalidArgument(format!(
                "matrix declares {}x{} but carries {} entries",
                j.rows,
                j.cols,
                j.data.len()
            )));
        }
        if j.data.iter().any(|[a, b]| !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(CMat::from_fn(j.rows, j.cols, |i, k| {
            let [a, b] = j.data[i * j.cols + k];
            c(a, b)
        }))
    }
}

/// serde adapter for `CMat` fields.
pub mod cmat_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        CMat::try_from(j).map_err(serde::de::Error::custom)
    }
}

pub mod opt_cmat_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &Option<CMat>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(MatrixJson::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<CMat>, D::Error> {
        Option::<MatrixJson>::deserialize(d)?
            .map(CMat::try_from)
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}

pub mod vec_cmat_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        m.iter().map(MatrixJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        Vec::<MatrixJson>::deserialize(d)?
            .into_iter()
            .map(CMat::try_from)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)])
    }

    #[test]
    fn eig_of_small_examples() {
        let sp = herm_eig(&identity(2)).unwrap();
        assert_eq!(sp.eigenvalues, vec![1.0, 1.0]);
        let sp = herm_eig(&diag(&[0.75, 0.25])).unwrap();
        assert_abs_diff_eq!(sp.eigenvalues[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.eigenvalues[1], 0.75, epsilon = 1e-15);
        let sp = herm_eig(&pauli_x()).unwrap();
        assert_abs_diff_eq!(sp.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sp.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_bad_input() {
        assert!(matches!(herm_eig(&zeros(2, 3)), Err(Error::NotSquare { .. })));
        let mut m = identity(2);
        m[(0, 1)] = r(1.0);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn spectral_functions() {
        assert_abs_diff_eq!(
            max_abs(&mat_fn_psd(&identity(3), MatFn::Log2, SUPPORT_CUTOFF).unwrap()),
            0.0
        );
        let s = mat_fn_psd(&diag(&[4.0, 9.0]), MatFn::Pow(0.5), SUPPORT_CUTOFF).unwrap();
        assert_abs_diff_eq!(max_abs(&(s - diag(&[2.0, 3.0]))), 0.0, epsilon = 1e-14);
        let s = mat_fn_psd(&diag(&[4.0, 0.0]), MatFn::InvSqrt, SUPPORT_CUTOFF).unwrap();
        assert_abs_diff_eq!(max_abs(&(s - diag(&[0.5, 0.0]))), 0.0, epsilon = 1e-14);
        assert!(matches!(
            mat_fn_psd(&diag(&[1.0, -0.1]), MatFn::Sqrt, SUPPORT_CUTOFF),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = diag(&[0.7, 0.3]);
        let sigma = CMat::from_row_slice(2, 2, &[r(0.5), c(0.1, 0.2), c(0.1, -0.2), r(0.5)]);
        let out = partial_trace(&tensor(&rho, &sigma), (2, 2), Keep::First).unwrap();
        assert_abs_diff_eq!(max_abs(&(out - &rho)), 0.0, epsilon = 1e-15);

        let mut phi = CMat::zeros(4, 4);
        for &i in &[0usize, 3] {
            for &j in &[0usize, 3] {
                phi[(i, j)] = r(0.5);
            }
        }
        let out = partial_trace(&phi, (2, 2), Keep::Second).unwrap();
        assert_abs_diff_eq!(max_abs(&(out - diag(&[0.5, 0.5]))), 0.0, epsilon = 1e-15);
        assert!(partial_trace(&phi, (3, 2), Keep::First).is_err());
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        assert_eq!(tensor(&diag(&[1.0, 2.0]), &diag(&[3.0, 4.0])), diag(&[3.0, 4.0, 6.0, 8.0]));
        let x = pauli_x();
        let k = CMat::from_element(1, 1, c(2.0, -1.0));
        assert_eq!(tensor(&x, &k), &x * c(2.0, -1.0));
    }

    #[test]
    fn norm_examples() {
        let n = norms(&identity(3));
        assert_abs_diff_eq!(n.trace_norm, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(n.op_norm, 1.0, epsilon = 1e-14);
        let n = norms(&zeros(2, 2));
        assert_eq!((n.trace_norm, n.frobenius, n.op_norm), (0.0, 0.0, 0.0));
        let n = norms(&diag(&[3.0, -4.0]));
        assert_abs_diff_eq!(n.trace_norm, 7.0, epsilon = 1e-14);
        assert_abs_diff_eq!(n.op_norm, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(n.frobenius, 5.0, epsilon = 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let p0 = diag(&[1.0, 0.0]);
        let p1 = diag(&[0.0, 1.0]);
        assert_abs_diff_eq!(fidelity(&p0, &p0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&p0, &p1).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&p0, &diag(&[0.5, 0.5])).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn psd_check_tolerance() {
        let ch = psd_check(&identity(2), PSD_TOL);
        assert!(ch.is_psd);
        assert_abs_diff_eq!(ch.min_eig, 1.0);
        assert!(!psd_check(&diag(&[1.0, -1e-3]), 1e-9).is_psd);
        assert!(psd_check(&diag(&[1.0, -1e-12]), 1e-9).is_psd);
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = diag(&[1.0, 2.0]);
        let b = diag(&[3.0, 5.0, 7.0]);
        let ab = tensor(&a, &b);
        let ba = permute_subsystems(&ab, &[2, 3], &[1, 0]).unwrap();
        assert_eq!(ba, tensor(&b, &a));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = CMat::from_row_slice(2, 1, &[c(0.1, 1.0 / 3.0), c(-2.5e-17, std::f64::consts::PI)]);
        let s = serde_json::to_string(&MatrixJson::from(&m)).unwrap();
        let back: MatrixJson = serde_json::from_str(&s).unwrap();
        assert_eq!(CMat::try_from(back).unwrap(), m);
    }
}
