//! Finite tensors `E ⊗ F`, the projective norm, Kronecker lifting of
//! operators, the tensor supercyclicity criterion, the three-limit check for
//! `T₁ ⊗ T₂`, and the factor map `E ⊗ F → E ⊕ E`.
//!
//! A tensor keeps both a decomposition `Σ xⱼ ⊗ yⱼ` and its coefficient
//! matrix `Σ xⱼ yⱼᵀ`. Vectorization is row-major, matching `kron`:
//! `vec(x ⊗ y)[i·d₂ + j] = xᵢ yⱼ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, check_tol, decays, CriterionData, CriterionReport, CriterionSystem, KRecord, Verdict};
use crate::error::{Error, Result};
use crate::operators::{apply, matrix_from_rows, matrix_to_rows, power, MatOp};
use crate::sampling::{gaussian_matrix, stream_rng};
use crate::spaces::{conjugate, dual_basis, lp_norm, Functional, SpaceDesc, SpaceVec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Element of `E ⊗ F` with a stored decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct TensorElem {
    left: SpaceDesc,
    right: SpaceDesc,
    decomposition: Vec<(SpaceVec, SpaceVec)>,
    coeff: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawTensor {
    left_space: SpaceDesc,
    right_space: SpaceDesc,
    coeff_matrix: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<RawTensor> for TensorElem {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        let m = matrix_from_rows(&raw.coeff_matrix)?;
        TensorElem::from_coeff(raw.left_space, raw.right_space, m)
    }
}

impl From<TensorElem> for RawTensor {
    fn from(t: TensorElem) -> Self {
        RawTensor {
            left_space: t.left,
            right_space: t.right,
            coeff_matrix: matrix_to_rows(&t.coeff),
        }
    }
}

fn outer(x: &SpaceVec, y: &SpaceVec) -> DMatrix<Complex64> {
    x.coords() * y.coords().transpose()
}

impl TensorElem {
    pub fn from_decomposition(
        left: SpaceDesc,
        right: SpaceDesc,
        decomposition: Vec<(SpaceVec, SpaceVec)>,
    ) -> Result<Self> {
        let mut coeff = DMatrix::zeros(left.dim(), right.dim());
        for (x, y) in &decomposition {
            left.ensure_same(&x.space())?;
            right.ensure_same(&y.space())?;
            coeff += outer(x, y);
        }
        Ok(Self {
            left,
            right,
            decomposition,
            coeff,
        })
    }

    pub fn elementary(x: &SpaceVec, y: &SpaceVec) -> Self {
        Self {
            left: x.space(),
            right: y.space(),
            decomposition: vec![(x.clone(), y.clone())],
            coeff: outer(x, y),
        }
    }

    pub fn zero(left: SpaceDesc, right: SpaceDesc) -> Self {
        Self {
            left,
            right,
            decomposition: Vec::new(),
            coeff: DMatrix::zeros(left.dim(), right.dim()),
        }
    }

    /// Tensor with coefficient matrix `m`, decomposed by rows: `Σ eᵢ ⊗ rowᵢ`.
    pub fn from_coeff(left: SpaceDesc, right: SpaceDesc, m: DMatrix<Complex64>) -> Result<Self> {
        if m.shape() != (left.dim(), right.dim()) {
            return Err(Error::DimensionMismatch {
                expected: left.dim() * right.dim(),
                found: m.nrows() * m.ncols(),
            });
        }
        let decomposition = row_decomposition(left, right, &m);
        Ok(Self {
            left,
            right,
            decomposition,
            coeff: m,
        })
    }

    /// Inverse of [`Self::vectorize`].
    pub fn from_vector(left: SpaceDesc, right: SpaceDesc, v: &DVector<Complex64>) -> Result<Self> {
        let (d1, d2) = (left.dim(), right.dim());
        if v.len() != d1 * d2 {
            return Err(Error::DimensionMismatch {
                expected: d1 * d2,
                found: v.len(),
            });
        }
        Self::from_coeff(left, right, DMatrix::from_fn(d1, d2, |i, j| v[i * d2 + j]))
    }

    pub fn left_space(&self) -> SpaceDesc {
        self.left
    }

    pub fn right_space(&self) -> SpaceDesc {
        self.right
    }

    pub fn decomposition(&self) -> &[(SpaceVec, SpaceVec)] {
        &self.decomposition
    }

    pub fn coeff(&self) -> &DMatrix<Complex64> {
        &self.coeff
    }

    pub fn vectorize(&self) -> DVector<Complex64> {
        let (d1, d2) = self.coeff.shape();
        DVector::from_fn(d1 * d2, |k, _| self.coeff[(k / d2, k % d2)])
    }

    /// `z + w`, concatenating decompositions.
    pub fn add(&self, other: &TensorElem) -> Result<TensorElem> {
        self.left.ensure_same(&other.left)?;
        self.right.ensure_same(&other.right)?;
        let mut decomposition = self.decomposition.clone();
        decomposition.extend(other.decomposition.iter().cloned());
        Ok(Self {
            left: self.left,
            right: self.right,
            decomposition,
            coeff: &self.coeff + &other.coeff,
        })
    }

    pub fn scale(&self, alpha: Complex64) -> TensorElem {
        Self {
            left: self.left,
            right: self.right,
            decomposition: self
                .decomposition
                .iter()
                .map(|(x, y)| (x.scale(alpha), y.clone()))
                .collect(),
            coeff: &self.coeff * alpha,
        }
    }

    pub fn sub(&self, other: &TensorElem) -> Result<TensorElem> {
        self.add(&other.scale(-ONE))
    }

    /// `(T₁ ⊗ T₂) z`, mapping each term of the decomposition.
    pub fn apply_kron(&self, t1: &MatOp, t2: &MatOp) -> Result<TensorElem> {
        let decomposition = self
            .decomposition
            .iter()
            .map(|(x, y)| Ok((apply(t1, x)?, apply(t2, y)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            left: self.left,
            right: self.right,
            decomposition,
            coeff: t1.entries() * &self.coeff * t2.entries().transpose(),
        })
    }

    /// Cost `Σ ‖xⱼ‖‖yⱼ‖` of the stored decomposition.
    pub fn decomposition_cost(&self) -> f64 {
        decomposition_cost(&self.decomposition)
    }

    /// Rescales each term so that `‖xⱼ‖ = ‖yⱼ‖`; the cost is unchanged.
    pub fn balanced(&self) -> TensorElem {
        Self {
            left: self.left,
            right: self.right,
            decomposition: balance(&self.decomposition),
            coeff: self.coeff.clone(),
        }
    }
}

fn row_decomposition(left: SpaceDesc, right: SpaceDesc, m: &DMatrix<Complex64>) -> Vec<(SpaceVec, SpaceVec)> {
    (0..m.nrows())
        .filter(|&i| m.row(i).iter().any(|z| *z != ZERO))
        .map(|i| {
            let mut e = DVector::zeros(left.dim());
            e[i] = ONE;
            (
                SpaceVec::from_dvector(left, e),
                SpaceVec::from_dvector(right, m.row(i).transpose()),
            )
        })
        .collect()
}

fn column_decomposition(left: SpaceDesc, right: SpaceDesc, m: &DMatrix<Complex64>) -> Vec<(SpaceVec, SpaceVec)> {
    (0..m.ncols())
        .filter(|&j| m.column(j).iter().any(|z| *z != ZERO))
        .map(|j| {
            let mut e = DVector::zeros(right.dim());
            e[j] = ONE;
            (
                SpaceVec::from_dvector(left, m.column(j).into_owned()),
                SpaceVec::from_dvector(right, e),
            )
        })
        .collect()
}

fn entry_decomposition(left: SpaceDesc, right: SpaceDesc, m: &DMatrix<Complex64>) -> Vec<(SpaceVec, SpaceVec)> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != ZERO {
                let mut x = DVector::zeros(left.dim());
                x[i] = m[(i, j)];
                let mut y = DVector::zeros(right.dim());
                y[j] = ONE;
                out.push((SpaceVec::from_dvector(left, x), SpaceVec::from_dvector(right, y)));
            }
        }
    }
    out
}

/// `m = A Bᵀ` split into the column pairs of `A`, `B`.
fn factor_decomposition(
    left: SpaceDesc,
    right: SpaceDesc,
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Vec<(SpaceVec, SpaceVec)> {
    (0..a.ncols())
        .map(|k| {
            (
                SpaceVec::from_dvector(left, a.column(k).into_owned()),
                SpaceVec::from_dvector(right, b.column(k).into_owned()),
            )
        })
        .collect()
}

fn decomposition_cost(terms: &[(SpaceVec, SpaceVec)]) -> f64 {
    terms.iter().map(|(x, y)| x.norm() * y.norm()).sum()
}

fn balance(terms: &[(SpaceVec, SpaceVec)]) -> Vec<(SpaceVec, SpaceVec)> {
    terms
        .iter()
        .map(|(x, y)| {
            let (nx, ny) = (x.norm(), y.norm());
            if nx == 0.0 || ny == 0.0 {
                (x.clone(), y.clone())
            } else {
                let t = Complex64::new((ny / nx).sqrt(), 0.0);
                (x.scale(t), y.scale(t.inv()))
            }
        })
        .collect()
}

/// Nuclear norm of the coefficient matrix: `Π(z)` on `ℓ² ⊗ ℓ²`.
pub fn projective_norm_hilbert_oracle(z: &TensorElem) -> Result<f64> {
    for s in [z.left, z.right] {
        if !s.is_hilbert() {
            return Err(Error::RequiresHilbert(s.p()));
        }
    }
    if z.coeff.iter().all(|c| *c == ZERO) {
        return Ok(0.0);
    }
    Ok(z.coeff.singular_values().iter().sum())
}

fn svd_candidates(z: &TensorElem) -> Vec<Vec<(SpaceVec, SpaceVec)>> {
    let svd = z.coeff.clone().svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let root = svd.singular_values.map(|s| Complex64::new(s.sqrt(), 0.0));
    // m = (U √Σ)(√Σ Vᴴ) and the right factors are the rows of √Σ Vᴴ
    let a = &u * DMatrix::from_diagonal(&root);
    let b = (DMatrix::from_diagonal(&root) * &v_t).transpose();
    vec![factor_decomposition(z.left, z.right, &a, &b)]
}

fn rotated_candidate(z: &TensorElem, seed: u64, stream: u64) -> Vec<(SpaceVec, SpaceVec)> {
    let svd = z.coeff.clone().svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let r = svd.singular_values.len();
    let root = DMatrix::from_diagonal(&svd.singular_values.map(|s| Complex64::new(s.sqrt(), 0.0)));
    let mut rng = stream_rng(seed, stream);
    let q = gaussian_matrix(&mut rng, r, r).qr().q();
    // m = (U √Σ W)(Wᴴ √Σ Vᴴ) for any unitary W
    let a = &u * &root * &q;
    let b = (q.adjoint() * &root * &v_t).transpose();
    factor_decomposition(z.left, z.right, &a, &b)
}

/// Upper bound for `Π(z)`: the cheapest of the balanced stored decomposition,
/// the singular-value decomposition, the row/column/entry decompositions, and
/// `iters` random unitary rotations of the singular factors.
///
/// For a single stored term this is `‖x‖‖y‖` exactly.
pub fn projective_norm_upper(z: &TensorElem, iters: usize, seed: u64) -> Result<f64> {
    Ok(projective_norm_search(z, iters, seed)?.0)
}

/// Best decomposition found by [`projective_norm_upper`], with its cost.
pub fn projective_norm_search(z: &TensorElem, iters: usize, seed: u64) -> Result<(f64, TensorElem)> {
    if iters == 0 {
        return Err(Error::InvalidParameter("iters must be >= 1".into()));
    }
    if z.coeff.iter().all(|c| *c == ZERO) {
        return Ok((0.0, TensorElem::zero(z.left, z.right)));
    }
    let stored = balance(&z.decomposition);
    if stored.len() == 1 {
        return Ok((z.decomposition_cost(), z.balanced()));
    }
    let mut candidates = vec![stored];
    candidates.extend(svd_candidates(z));
    candidates.push(row_decomposition(z.left, z.right, &z.coeff));
    candidates.push(column_decomposition(z.left, z.right, &z.coeff));
    candidates.push(entry_decomposition(z.left, z.right, &z.coeff));
    let rotated: Vec<_> = (0..iters as u64)
        .into_par_iter()
        .map(|i| rotated_candidate(z, seed, i))
        .collect();
    candidates.extend(rotated);

    let (best, cost) = candidates
        .into_iter()
        .map(|c| {
            let cost = decomposition_cost(&c);
            (c, cost)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate");
    let elem = TensorElem {
        left: z.left,
        right: z.right,
        decomposition: balance(&best),
        coeff: z.coeff.clone(),
    };
    Ok((cost, elem))
}

/// Norm of the bilinear form `(x, y) ↦ Σ Bᵢⱼ xᵢ yⱼ` on `ℓ^{p₁} × ℓ^{p₂}`.
///
/// Returns `(value, exact)`. The value is exact when either exponent is 1 or
/// both are 2; otherwise it comes from alternating maximization and may
/// undershoot the true norm.
fn bilinear_norm(b: &DMatrix<Complex64>, p1: f64, p2: f64) -> (f64, bool) {
    let (q1, q2) = (conjugate(p1), conjugate(p2));
    if p1 == 1.0 {
        // extreme points of the ℓ¹ ball are the unimodular multiples of eᵢ
        let v = b.row_iter().map(|r| lp_norm(r.iter(), q2)).fold(0.0, f64::max);
        return (v, true);
    }
    if p2 == 1.0 {
        let v = b.column_iter().map(|c| lp_norm(c.iter(), q1)).fold(0.0, f64::max);
        return (v, true);
    }
    if p1 == 2.0 && p2 == 2.0 {
        return (crate::operators::spectral_norm(b), true);
    }
    // sup_x ‖Bᵀx‖_{q₂} over the unit ball of ℓ^{p₁}, by alternating Hölder steps
    let d1 = b.nrows();
    let mut best: f64 = 0.0;
    for start in 0..=d1 {
        let mut x = if start < d1 {
            let mut e = DVector::zeros(d1);
            e[start] = ONE;
            e
        } else {
            DVector::from_element(d1, ONE) / Complex64::new(lp_norm([ONE].iter(), p1) * (d1 as f64).powf(1.0 / p1), 0.0)
        };
        for _ in 0..200 {
            let y_dir = b.transpose() * &x;
            let val = lp_norm(y_dir.iter(), q2);
            best = best.max(val);
            if val == 0.0 {
                break;
            }
            let y = holder_unit(&y_dir, q2);
            let x_dir = b * &y;
            let nx = lp_norm(x_dir.iter(), q1);
            best = best.max(nx);
            let next = holder_unit(&x_dir, q1);
            if (&next - &x).norm() < 1e-14 {
                break;
            }
            x = next;
        }
    }
    (best, false)
}

/// Unit vector `u` of the dual exponent with `Σ uᵢ vᵢ = ‖v‖_q`.
fn holder_unit(v: &DVector<Complex64>, q: f64) -> DVector<Complex64> {
    let n = lp_norm(v.iter(), q);
    if n == 0.0 {
        return v.clone();
    }
    if q.is_infinite() {
        // put all mass on one maximal coordinate
        let (i, _) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let mut u = DVector::zeros(v.len());
        u[i] = v[i].conj() / v[i].norm();
        return u;
    }
    if q == 1.0 {
        return v.map(|z| if z.norm() == 0.0 { ONE } else { z.conj() / z.norm() });
    }
    v.map(|z| {
        let a = z.norm();
        if a == 0.0 {
            ZERO
        } else {
            (z.conj() / a) * (a / n).powf(q - 1.0)
        }
    })
}

/// Lower bound `|⟨B, z⟩| / ‖B‖` maximized over trial forms `B`.
///
/// Returns `(value, rigorous)`; see [`bilinear_norm`] for when the bound is
/// rigorous.
pub fn projective_norm_dual_lower(z: &TensorElem, iters: usize, seed: u64) -> (f64, bool) {
    let m = &z.coeff;
    if m.iter().all(|c| *c == ZERO) {
        return (0.0, true);
    }
    let (p1, p2) = (z.left.p(), z.right.p());
    let mut forms = vec![
        m.map(|c| if c == ZERO { ZERO } else { c.conj() / c.norm() }),
        m.map(|c| c.conj()),
    ];
    let svd = m.clone().svd(true, true);
    forms.push((svd.u.unwrap() * svd.v_t.unwrap()).map(|c| c.conj()));
    let mut rng = stream_rng(seed, u64::MAX);
    for _ in 0..iters {
        let g = gaussian_matrix(&mut rng, m.nrows(), m.ncols());
        forms.push(m.map(|c| c.conj()) + g * Complex64::new(0.1 * m.norm() / (m.len() as f64).sqrt(), 0.0));
    }
    let mut best: f64 = 0.0;
    let mut rigorous = true;
    for b in forms {
        let (nb, exact) = bilinear_norm(&b, p1, p2);
        if nb == 0.0 {
            continue;
        }
        let pairing: Complex64 = b.iter().zip(m.iter()).map(|(x, y)| x * y).sum();
        let v = pairing.norm() / nb;
        if v > best {
            best = v;
            rigorous = exact;
        }
    }
    (best, rigorous)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveNormReport {
    pub upper: f64,
    /// Nuclear norm on `ℓ² ⊗ ℓ²`, otherwise the dual lower bound.
    pub oracle_or_dual_lower: f64,
    pub gap: f64,
    pub decomposition_rank: usize,
    /// `false` when the lower value came from a heuristic norm estimate.
    pub lower_is_rigorous: bool,
}

pub fn projective_norm_report(z: &TensorElem, iters: usize, seed: u64) -> Result<ProjectiveNormReport> {
    let (upper, best) = projective_norm_search(z, iters, seed)?;
    let (lower, rigorous) = if z.left.is_hilbert() && z.right.is_hilbert() {
        (projective_norm_hilbert_oracle(z)?, true)
    } else {
        projective_norm_dual_lower(z, iters, seed)
    };
    Ok(ProjectiveNormReport {
        upper,
        oracle_or_dual_lower: lower,
        gap: upper - lower,
        decomposition_rank: best.decomposition.len(),
        lower_is_rigorous: rigorous,
    })
}

/// `T₁ ⊗ T₂` on the row-major vectorization. The descriptor's exponent is the
/// left factor's and is nominal: tensor norms are computed on [`TensorElem`].
pub fn kronecker(t1: &MatOp, t2: &MatOp) -> MatOp {
    let m = t1.entries().kronecker(t2.entries());
    let space = SpaceDesc::new(t1.space().p(), t1.dim() * t2.dim()).expect("product of valid dimensions");
    MatOp::from_matrix_unchecked(space, m)
}

// ---------------------------------------------------------------------------
// tensor supercyclicity criterion

/// Criterion data with scalars `λ_{n_k}` attached, as used by the tensor criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct TscData(CriterionData);

impl TscData {
    pub fn new(data: CriterionData) -> Result<Self> {
        if data.scalars().is_none() {
            return Err(Error::InvalidParameter("tensor criterion data needs scalars".into()));
        }
        Ok(Self(data))
    }

    pub fn data(&self) -> &CriterionData {
        &self.0
    }

    pub fn scalars(&self) -> &[Complex64] {
        self.0.scalars().expect("validated on construction")
    }

    /// `T = I`, `S_k = I`, `λ_k = 1` with the given generators.
    pub fn identity(space: SpaceDesc, kmax: usize, generators: Vec<SpaceVec>) -> Result<Self> {
        let id = MatOp::identity(space);
        let n = kmax + 1;
        let data = CriterionData::new(id.clone(), (0..n).collect(), generators.clone(), generators, vec![id; n])?
            .with_scalars(vec![ONE; n])?;
        Self::new(data)
    }

    /// Diagonal unimodular `T` with `S_k = T^{-k}` and `λ_k = 1`.
    pub fn diagonal_isometry(space: SpaceDesc, diag: &[Complex64], kmax: usize, generators: Vec<SpaceVec>) -> Result<Self> {
        if let Some(index) = diag.iter().position(|z| *z == ZERO) {
            return Err(Error::ZeroWeight { index });
        }
        let t = MatOp::diagonal(space, diag)?;
        let inv = MatOp::diagonal(space, &diag.iter().map(|z| z.inv()).collect::<Vec<_>>())?;
        let n = kmax + 1;
        let maps = (0..n).map(|k| power(&inv, k)).collect();
        let data = CriterionData::new(t, (0..n).collect(), generators.clone(), generators, maps)?
            .with_scalars(vec![ONE; n])?;
        Self::new(data)
    }

    /// `T = c·B`, `S_k = (c⁻¹F)^k`, `λ_k = c^{-k}`.
    pub fn shift(space: SpaceDesc, c: Complex64, kmax: usize) -> Result<Self> {
        let base = CriterionData::shift_instance(space, c, kmax)?;
        let scalars = base.indices().iter().map(|&n| c.powi(-(n as i32))).collect();
        Self::new(base.with_scalars(scalars)?)
    }
}

/// Largest generator norm, the natural bound for isometric instances.
pub fn max_generator_norm(data: &CriterionData) -> f64 {
    data.first_generators()
        .iter()
        .chain(data.second_generators())
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

/// Tensor criterion report without enforcing the window.
pub fn tsc_report(data: &TscData, bound: f64, tol: f64) -> Result<CriterionReport> {
    check_tol(tol)?;
    if !(bound > 0.0) {
        return Err(Error::InvalidParameter(format!("bound must be positive, got {bound}")));
    }
    let records = criteria::evaluate(&data.0)?;
    let within = |v: f64| v <= bound * (1.0 + 1e-12);
    let failed = if !records.iter().all(|r| within(r.max_orbit_norm)) {
        Some("bounded_orbit")
    } else if !records.iter().all(|r| within(r.max_right_norm)) {
        Some("bounded_right_inverse")
    } else if !decays(&records.iter().map(|r| r.max_reconstruction_error).collect::<Vec<_>>(), tol) {
        Some("reconstruction")
    } else {
        None
    };
    let verdict = if !records.iter().all(|r| r.window_ok) {
        Verdict::WindowViolation
    } else if failed.is_some() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(CriterionReport {
        criterion: "tensor_supercyclicity".into(),
        tol,
        records,
        verdict,
        failed_clause: failed.map(str::to_string),
    })
}

/// Certifies `(λT^{n_k}x)` and `(λ⁻¹S_{n_k}y)` bounded by `bound` and
/// `T^{n_k}S_{n_k}y → y`.
pub fn check_tsc(data: &TscData, bound: f64, tol: f64) -> Result<CriterionReport> {
    if let Some(e) = (0..data.0.indices().len()).find_map(|k| data.0.window_violation(k)) {
        return Err(e);
    }
    tsc_report(data, bound, tol)
}

// ---------------------------------------------------------------------------
// three-limit check for T₁ ⊗ T₂

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Record {
    pub k: usize,
    pub n_k: usize,
    /// `max Π(λ T^{n_k}(x₁ ⊗ x₂))`.
    pub scaled_orbit: f64,
    /// `max Π(λ⁻¹ S_{n_k}(y₁ ⊗ y₂))`.
    pub scaled_right_inverse: f64,
    /// `max` of the triangle bound
    /// `‖T₁S¹y₁ − y₁‖‖T₂S²y₂‖ + ‖y₁‖‖T₂S²y₂ − y₂‖` on `Π(TS(y₁⊗y₂) − y₁⊗y₂)`.
    pub reconstruction: f64,
    /// `max` of the searched upper bound on the same difference.
    pub reconstruction_direct: f64,
    pub window_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub tol: f64,
    pub records: Vec<Theorem3Record>,
    pub verdict: Verdict,
    pub failed_clause: Option<String>,
    pub left_factor: CriterionReport,
    pub right_factor: CriterionReport,
}

impl Theorem3Report {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Data for `T₁ ⊗ T₂` on the vectorized product: generators `x₁ ⊗ x₂`,
/// maps `S¹ ⊗ S²`, scalars `λ¹λ²`.
pub fn theorem3_combined_data(sc: &CriterionData, tsc: &TscData) -> Result<CriterionData> {
    let (a, b) = (sc, tsc.data());
    if a.indices() != b.indices() {
        return Err(Error::InvalidParameter("factor index sequences differ".into()));
    }
    let l1 = a
        .scalars()
        .ok_or_else(|| Error::InvalidParameter("supercyclic factor needs scalars".into()))?;
    let l2 = tsc.scalars();
    let op = kronecker(a.op(), b.op());
    let space = op.space();
    let gens = |xs: &[SpaceVec], ys: &[SpaceVec]| {
        xs.iter()
            .flat_map(|x| ys.iter().map(move |y| (x, y)))
            .map(|(x, y)| SpaceVec::new(space, TensorElem::elementary(x, y).vectorize().iter().cloned().collect()))
            .collect::<Result<Vec<_>>>()
    };
    let d1 = gens(a.first_generators(), b.first_generators())?;
    let d2 = gens(a.second_generators(), b.second_generators())?;
    let maps = a
        .maps()
        .iter()
        .zip(b.maps())
        .map(|(s1, s2)| kronecker(s1, s2))
        .collect();
    let scalars = l1.iter().zip(l2).map(|(x, y)| x * y).collect();
    CriterionData::new(op, a.indices().to_vec(), d1, d2, maps)?.with_scalars(scalars)
}

fn sc_clause_name(clause: &str) -> &'static str {
    match clause {
        "scaled_orbit" => "left factor (i): scaled orbit does not decay",
        "scaled_right_inverse" => "left factor (ii): scaled right inverse does not decay",
        "reconstruction" => "left factor (iii): reconstruction does not converge",
        _ => "left factor",
    }
}

fn tsc_clause_name(clause: &str) -> &'static str {
    match clause {
        "bounded_orbit" => "right factor (i): scaled orbit exceeds bound",
        "bounded_right_inverse" => "right factor (ii): scaled right inverse exceeds bound",
        "reconstruction" => "right factor (iii): reconstruction does not converge",
        _ => "right factor",
    }
}

/// Checks the three `Π`-limits for `T₁ ⊗ T₂` on elementary tensors, given
/// scaled criterion data for `T₁` and tensor-criterion data for `T₂`
/// (bounded by `bound`).
///
/// Failing factor preconditions and window violations are reported in the
/// verdict rather than as errors; the sequences are evaluated either way.
pub fn check_theorem3(sc: &CriterionData, tsc: &TscData, bound: f64, tol: f64) -> Result<Theorem3Report> {
    check_tol(tol)?;
    if sc.scalars().is_none() {
        return Err(Error::InvalidParameter("supercyclic factor needs scalars".into()));
    }
    if sc.indices() != tsc.data().indices() {
        return Err(Error::InvalidParameter("factor index sequences differ".into()));
    }
    let left_factor = criteria::supercyclicity_report(sc, tol)?;
    let right_factor = tsc_report(tsc, bound, tol)?;
    let l1 = sc.scalars().unwrap();
    let l2 = tsc.scalars();
    let (t1, t2) = (sc.op(), tsc.data().op());

    let mut records = Vec::with_capacity(sc.indices().len());
    for (k, &n) in sc.indices().iter().enumerate() {
        let lambda = l1[k] * l2[k];
        let (p1, p2) = (power(t1, n), power(t2, n));
        let (s1, s2) = (&sc.maps()[k], &tsc.data().maps()[k]);

        let mut scaled_orbit: f64 = 0.0;
        for x1 in sc.first_generators() {
            let a = apply(&p1, x1)?.norm();
            for x2 in tsc.data().first_generators() {
                scaled_orbit = scaled_orbit.max(lambda.norm() * a * apply(&p2, x2)?.norm());
            }
        }

        let mut scaled_right: f64 = 0.0;
        let mut reconstruction: f64 = 0.0;
        let mut reconstruction_direct: f64 = 0.0;
        for y1 in sc.second_generators() {
            let s1y = apply(s1, y1)?;
            let r1 = apply(&p1, &s1y)?;
            let e1 = r1.sub(y1)?.norm();
            for y2 in tsc.data().second_generators() {
                let s2y = apply(s2, y2)?;
                let r2 = apply(&p2, &s2y)?;
                scaled_right = scaled_right.max(s1y.norm() * s2y.norm() / lambda.norm());
                let tri = e1 * r2.norm() + y1.norm() * r2.sub(y2)?.norm();
                reconstruction = reconstruction.max(tri);
                let diff = TensorElem::elementary(&r1, &r2).sub(&TensorElem::elementary(y1, y2))?;
                reconstruction_direct = reconstruction_direct.max(projective_norm_upper(&diff, 1, 0)?);
            }
        }
        records.push(Theorem3Record {
            k,
            n_k: n,
            scaled_orbit,
            scaled_right_inverse: scaled_right,
            reconstruction,
            reconstruction_direct,
            window_ok: sc.window_violation(k).is_none() && tsc.data().window_violation(k).is_none(),
        });
    }

    let column = |f: fn(&Theorem3Record) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let failed = if let Some(c) = left_factor.failed_clause.as_deref() {
        Some(sc_clause_name(c).to_string())
    } else if let Some(c) = right_factor.failed_clause.as_deref() {
        Some(tsc_clause_name(c).to_string())
    } else if !decays(&column(|r| r.scaled_orbit), tol) {
        Some("product (i): scaled orbit".to_string())
    } else if !decays(&column(|r| r.scaled_right_inverse), tol) {
        Some("product (ii): scaled right inverse".to_string())
    } else if !decays(&column(|r| r.reconstruction.min(r.reconstruction_direct)), tol) {
        Some("product (iii): reconstruction".to_string())
    } else {
        None
    };
    let verdict = if !records.iter().all(|r| r.window_ok) {
        Verdict::WindowViolation
    } else if failed.is_some() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(Theorem3Report {
        tol,
        records,
        verdict,
        failed_clause: failed,
        left_factor,
        right_factor,
    })
}

// ---------------------------------------------------------------------------
// factor map E ⊗ F → E ⊕ E

/// `Σ eᵢ ⊗ xᵢ ↦ (Σ ⟨xᵢ, f₁⟩ eᵢ, Σ ⟨xᵢ, f₂⟩ eᵢ)`, evaluated on the stored decomposition.
pub fn proposition_phi(u: &TensorElem, f1: &Functional, f2: &Functional) -> Result<(SpaceVec, SpaceVec)> {
    u.right.ensure_same(&f1.space())?;
    u.right.ensure_same(&f2.space())?;
    let mut a = DVector::zeros(u.left.dim());
    let mut b = DVector::zeros(u.left.dim());
    for (e, x) in &u.decomposition {
        a += e.coords() * crate::spaces::pair(f1, x)?;
        b += e.coords() * crate::spaces::pair(f2, x)?;
    }
    Ok((SpaceVec::from_dvector(u.left, a), SpaceVec::from_dvector(u.left, b)))
}

/// `e₁ ⊗ x₁ + e₂ ⊗ x₂` with `fᵢ(xⱼ) = δᵢⱼ`, mapped by [`proposition_phi`] to `(e₁, e₂)`.
pub fn proposition_witness(e1: &SpaceVec, e2: &SpaceVec, f1: &Functional, f2: &Functional) -> Result<TensorElem> {
    let right = f1.space();
    right.ensure_same(&f2.space())?;
    let duals = dual_basis(&[f1.as_dual_vec(), f2.as_dual_vec()])?;
    let xs: Vec<SpaceVec> = duals
        .into_iter()
        .map(|g| SpaceVec::new(right, g.coords().iter().cloned().collect()))
        .collect::<Result<_>>()?;
    TensorElem::from_decomposition(
        e1.space(),
        right,
        vec![(e1.clone(), xs[0].clone()), (e2.clone(), xs[1].clone())],
    )
}

/// `KRecord` view of a theorem-3 run, for tools that expect criterion reports.
pub fn theorem3_as_records(report: &Theorem3Report) -> Vec<KRecord> {
    report
        .records
        .iter()
        .map(|r| KRecord {
            k: r.k,
            n_k: r.n_k,
            max_product: r.scaled_orbit * r.scaled_right_inverse,
            max_reconstruction_error: r.reconstruction.min(r.reconstruction_direct),
            window_ok: r.window_ok,
            max_orbit_norm: r.scaled_orbit,
            max_right_norm: r.scaled_right_inverse,
        })
        .collect()
}
