//! Certifiers for the supercyclicity and hypercyclicity criteria, the lifts
//! of criterion data to the left and right multiplication operators on an
//! ideal, and the factor maps intertwining `L_T`, `R_T` with `T ⊕ T`,
//! `T* ⊕ T*`.
//!
//! The criteria are limit statements. A run certifies that each quantity is
//! below `tol` at the last index and did not increase over the last three
//! indices; the whole sequence is always kept in the report.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideals::{FiniteRankCombo, IdealDesc};
use crate::operators::{apply, apply_adjoint, power, scaled_backward_shift, scaled_forward_shift, MatOp};
use crate::spaces::{dual_basis, Functional, SpaceDesc, SpaceVec};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Range of generators and powers on which a truncation reproduces the
/// infinite-dimensional identities exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// No truncation effects to track.
    Unrestricted,
    /// The right inverses are forward-type shifts on `dim` coordinates:
    /// `S_n y` is exact while `support(y) + n ≤ dim`.
    Shift { dim: usize },
}

impl Window {
    fn violation(&self, generator: usize, support: usize, power: usize) -> Option<Error> {
        match *self {
            Window::Unrestricted => None,
            Window::Shift { dim } => (support + power > dim).then_some(Error::WindowViolation {
                generator,
                support,
                power,
                dim,
            }),
        }
    }
}

/// Witness package for a criterion run on `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionData {
    op: MatOp,
    indices: Vec<usize>,
    d1: Vec<SpaceVec>,
    d2: Vec<SpaceVec>,
    maps: Vec<MatOp>,
    scalars: Option<Vec<Complex64>>,
    window: Window,
}

fn validate_indices(indices: &[usize]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::EmptyIndices);
    }
    if let Some(i) = indices.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonIncreasingIndices(i + 1));
    }
    Ok(())
}

fn validate_scalars(scalars: &[Complex64], count: usize) -> Result<()> {
    if scalars.len() != count {
        return Err(Error::InvalidParameter(format!(
            "{} scalars for {count} indices",
            scalars.len()
        )));
    }
    if let Some(index) = scalars.iter().position(|z| z.norm() == 0.0) {
        return Err(Error::ZeroScalar { index });
    }
    Ok(())
}

impl CriterionData {
    pub fn new(
        op: MatOp,
        indices: Vec<usize>,
        d1: Vec<SpaceVec>,
        d2: Vec<SpaceVec>,
        maps: Vec<MatOp>,
    ) -> Result<Self> {
        validate_indices(&indices)?;
        if maps.len() != indices.len() {
            return Err(Error::InvalidParameter(format!(
                "{} maps for {} indices",
                maps.len(),
                indices.len()
            )));
        }
        if d1.is_empty() || d2.is_empty() {
            return Err(Error::InvalidParameter("generator lists must be nonempty".into()));
        }
        let space = op.space();
        for v in d1.iter().chain(&d2) {
            space.ensure_same(&v.space())?;
        }
        for m in &maps {
            space.ensure_same(&m.space())?;
        }
        Ok(Self {
            op,
            indices,
            d1,
            d2,
            maps,
            scalars: None,
            window: Window::Unrestricted,
        })
    }

    /// Attaches `λ_{n_k}`, switching the certifiers to the scaled form
    /// `λT^{n_k}x → 0`, `λ⁻¹S_{n_k}y → 0`.
    pub fn with_scalars(mut self, scalars: Vec<Complex64>) -> Result<Self> {
        validate_scalars(&scalars, self.indices.len())?;
        self.scalars = Some(scalars);
        Ok(self)
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    /// `T = c·B` on `space`, `S_{n_k} = (c⁻¹F)^{n_k}`, `n_k = k` for `k = 0..=kmax`,
    /// and `D₁ = D₂ = {e_j : j < dim − kmax}`, the basis vectors inside the window.
    pub fn shift_instance(space: SpaceDesc, c: Complex64, kmax: usize) -> Result<Self> {
        if c.norm() == 0.0 {
            return Err(Error::ZeroWeight { index: 0 });
        }
        let t = scaled_backward_shift(space, c)?;
        let s = scaled_forward_shift(space, c.inv())?;
        let indices: Vec<usize> = (0..=kmax).collect();
        let maps = indices.iter().map(|&n| power(&s, n)).collect();
        let count = space.dim().saturating_sub(kmax).max(1);
        let gens = (0..count.min(space.dim()))
            .map(|j| SpaceVec::basis(space, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(t, indices, gens.clone(), gens, maps)?.with_window(Window::Shift { dim: space.dim() }))
    }

    /// Any operator with `S_{n_k}` the pseudoinverse of `T^{n_k}`, `n_k = k`
    /// for `k = 0..=kmax`, and all basis vectors as generators.
    pub fn pseudo_inverse_instance(op: MatOp, kmax: usize) -> Result<Self> {
        let space = op.space();
        let indices: Vec<usize> = (0..=kmax).collect();
        let maps = indices
            .iter()
            .map(|&n| {
                let p = power(&op, n);
                let inv = p
                    .entries()
                    .clone()
                    .pseudo_inverse(1e-12 * p.entries().norm().max(f64::MIN_POSITIVE))
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                MatOp::new(space, inv)
            })
            .collect::<Result<Vec<_>>>()?;
        let gens = (0..space.dim())
            .map(|j| SpaceVec::basis(space, j))
            .collect::<Result<Vec<_>>>()?;
        Self::new(op, indices, gens.clone(), gens, maps)
    }

    pub fn op(&self) -> &MatOp {
        &self.op
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn first_generators(&self) -> &[SpaceVec] {
        &self.d1
    }

    pub fn second_generators(&self) -> &[SpaceVec] {
        &self.d2
    }

    pub fn maps(&self) -> &[MatOp] {
        &self.maps
    }

    pub fn scalars(&self) -> Option<&[Complex64]> {
        self.scalars.as_deref()
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn space(&self) -> SpaceDesc {
        self.op.space()
    }
}

/// Something the certifiers can evaluate: an operator with powers, two
/// generator lists, right maps per index, and a norm.
pub trait CriterionSystem {
    type Elem;

    fn indices(&self) -> &[usize];
    fn first_generators(&self) -> &[Self::Elem];
    fn second_generators(&self) -> &[Self::Elem];
    /// `Tⁿ` applied to every element of `xs`.
    fn iterate(&self, n: usize, xs: &[Self::Elem]) -> Result<Vec<Self::Elem>>;
    /// `S_{n_k}` for position `k`.
    fn right_map(&self, k: usize, y: &Self::Elem) -> Result<Self::Elem>;
    fn norm(&self, x: &Self::Elem) -> f64;
    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> Result<f64>;
    fn scalars(&self) -> Option<&[Complex64]> {
        None
    }
    /// First window violation at position `k`, if any.
    fn window_violation(&self, k: usize) -> Option<Error>;
}

impl CriterionSystem for CriterionData {
    type Elem = SpaceVec;

    fn indices(&self) -> &[usize] {
        &self.indices
    }

    fn first_generators(&self) -> &[SpaceVec] {
        &self.d1
    }

    fn second_generators(&self) -> &[SpaceVec] {
        &self.d2
    }

    fn iterate(&self, n: usize, xs: &[SpaceVec]) -> Result<Vec<SpaceVec>> {
        let p = power(&self.op, n);
        xs.iter().map(|x| apply(&p, x)).collect()
    }

    fn right_map(&self, k: usize, y: &SpaceVec) -> Result<SpaceVec> {
        apply(&self.maps[k], y)
    }

    fn norm(&self, x: &SpaceVec) -> f64 {
        x.norm()
    }

    fn distance(&self, a: &SpaceVec, b: &SpaceVec) -> Result<f64> {
        Ok(a.sub(b)?.norm())
    }

    fn scalars(&self) -> Option<&[Complex64]> {
        self.scalars.as_deref()
    }

    fn window_violation(&self, k: usize) -> Option<Error> {
        let n = self.indices[k];
        self.d2
            .iter()
            .enumerate()
            .find_map(|(i, y)| self.window.violation(i, y.support_len(), n))
    }
}

/// Per-index record of a certifier run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub k: usize,
    pub n_k: usize,
    /// `max ‖T^{n_k}x‖·‖S_{n_k}y‖` over generator pairs (scaled forms are
    /// multiplied in when scalars are present, leaving the product unchanged).
    pub max_product: f64,
    /// `max ‖T^{n_k}S_{n_k}y − y‖`.
    pub max_reconstruction_error: f64,
    pub window_ok: bool,
    /// `max ‖λT^{n_k}x‖` (λ = 1 without scalars).
    pub max_orbit_norm: f64,
    /// `max ‖λ⁻¹S_{n_k}y‖`.
    pub max_right_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    WindowViolation,
}

impl Verdict {
    /// Process exit code: 0 pass, 2 fail, 3 window violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::WindowViolation => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: String,
    pub tol: f64,
    pub records: Vec<KRecord>,
    pub verdict: Verdict,
    /// Clause responsible for a failing verdict.
    pub failed_clause: Option<String>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn window_ok(&self) -> bool {
        self.records.iter().all(|r| r.window_ok)
    }

    pub fn column(&self, f: impl Fn(&KRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Increases below this size are treated as roundoff by [`decays`].
pub(crate) const ROUNDOFF_FLOOR: f64 = 1e-12;

/// `v` ends below `tol` and did not increase over its last three entries.
/// Changes smaller than `max(1e-9·tol, ROUNDOFF_FLOOR)` count as flat.
pub(crate) fn decays(v: &[f64], tol: f64) -> bool {
    let Some(&last) = v.last() else {
        return false;
    };
    if !(last < tol) {
        return false;
    }
    let tail = &v[v.len().saturating_sub(3)..];
    // an absolute floor absorbs roundoff in sequences that are already at zero
    tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + (1e-9 * tol).max(ROUNDOFF_FLOOR))
}

/// Evaluates every criterion quantity at every index without enforcing the window.
pub fn evaluate<S: CriterionSystem + ?Sized>(sys: &S) -> Result<Vec<KRecord>> {
    let indices = sys.indices();
    validate_indices(indices)?;
    let mut records = Vec::with_capacity(indices.len());
    for (k, &n) in indices.iter().enumerate() {
        let lambda = sys.scalars().map_or(ONE, |s| s[k]);
        let orbit = sys.iterate(n, sys.first_generators())?;
        let max_orbit = orbit.iter().map(|x| sys.norm(x)).fold(0.0, f64::max);

        let images = sys
            .second_generators()
            .iter()
            .map(|y| sys.right_map(k, y))
            .collect::<Result<Vec<_>>>()?;
        let max_right = images.iter().map(|y| sys.norm(y)).fold(0.0, f64::max);
        let recon = sys.iterate(n, &images)?;
        let mut max_err: f64 = 0.0;
        for (r, y) in recon.iter().zip(sys.second_generators()) {
            max_err = max_err.max(sys.distance(r, y)?);
        }
        records.push(KRecord {
            k,
            n_k: n,
            max_product: max_orbit * max_right,
            max_reconstruction_error: max_err,
            window_ok: sys.window_violation(k).is_none(),
            max_orbit_norm: lambda.norm() * max_orbit,
            max_right_norm: max_right / lambda.norm(),
        });
    }
    Ok(records)
}

fn first_window_error<S: CriterionSystem + ?Sized>(sys: &S) -> Option<Error> {
    (0..sys.indices().len()).find_map(|k| sys.window_violation(k))
}

fn finish(criterion: &str, tol: f64, records: Vec<KRecord>, clauses: &[(&str, Vec<f64>)]) -> CriterionReport {
    let window = records.iter().all(|r| r.window_ok);
    let failed = clauses
        .iter()
        .find(|(_, seq)| !decays(seq, tol))
        .map(|(name, _)| name.to_string());
    let verdict = if !window {
        Verdict::WindowViolation
    } else if failed.is_some() {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    CriterionReport {
        criterion: criterion.to_string(),
        tol,
        records,
        verdict,
        failed_clause: failed,
    }
}

/// Supercyclicity criterion report, recording window violations in the
/// verdict instead of returning an error.
pub fn supercyclicity_report<S: CriterionSystem + ?Sized>(sys: &S, tol: f64) -> Result<CriterionReport> {
    check_tol(tol)?;
    let records = evaluate(sys)?;
    let clauses = if sys.scalars().is_some() {
        vec![
            ("scaled_orbit", records.iter().map(|r| r.max_orbit_norm).collect()),
            ("scaled_right_inverse", records.iter().map(|r| r.max_right_norm).collect()),
            ("reconstruction", records.iter().map(|r| r.max_reconstruction_error).collect()),
        ]
    } else {
        vec![
            ("product", records.iter().map(|r| r.max_product).collect()),
            ("reconstruction", records.iter().map(|r| r.max_reconstruction_error).collect()),
        ]
    };
    Ok(finish("supercyclicity", tol, records, &clauses))
}

/// Hypercyclicity criterion report; see [`supercyclicity_report`].
pub fn hypercyclicity_report<S: CriterionSystem + ?Sized>(sys: &S, tol: f64) -> Result<CriterionReport> {
    check_tol(tol)?;
    let records = evaluate(sys)?;
    let clauses = vec![
        ("orbit", records.iter().map(|r| r.max_orbit_norm).collect::<Vec<_>>()),
        ("right_inverse", records.iter().map(|r| r.max_right_norm).collect()),
        ("reconstruction", records.iter().map(|r| r.max_reconstruction_error).collect()),
    ];
    Ok(finish("hypercyclicity", tol, records, &clauses))
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Certifies `‖T^{n_k}x‖‖S_{n_k}y‖ → 0` and `T^{n_k}S_{n_k}y → y`.
///
/// With scalars attached the scaled form is certified instead, which implies
/// the product condition.
pub fn check_supercyclicity_criterion<S: CriterionSystem + ?Sized>(
    sys: &S,
    tol: f64,
) -> Result<CriterionReport> {
    validate_indices(sys.indices())?;
    if let Some(e) = first_window_error(sys) {
        return Err(e);
    }
    supercyclicity_report(sys, tol)
}

/// Certifies `T^{n_k}x → 0`, `S_{n_k}y → 0` and `T^{n_k}S_{n_k}y → y`.
pub fn check_hypercyclicity_criterion<S: CriterionSystem + ?Sized>(
    sys: &S,
    tol: f64,
) -> Result<CriterionReport> {
    validate_indices(sys.indices())?;
    if let Some(e) = first_window_error(sys) {
        return Err(e);
    }
    hypercyclicity_report(sys, tol)
}

// ---------------------------------------------------------------------------
// lifts to the ideal

/// Criterion data for `L_T` on an ideal: generators `x ⊗ φ` and `y ⊗ φ`,
/// with `Q_{n_k}` applying `S_{n_k}` to left factors.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftLift {
    base: CriterionData,
    functionals: Vec<Functional>,
    ideal: IdealDesc,
    first: Vec<FiniteRankCombo>,
    second: Vec<FiniteRankCombo>,
}

fn rank_ones(vs: &[SpaceVec], fs: &[Functional]) -> Result<Vec<FiniteRankCombo>> {
    vs.iter()
        .flat_map(|v| fs.iter().map(move |f| (v, f)))
        .map(|(v, f)| FiniteRankCombo::new(vec![(ONE, v.clone(), f.clone())]))
        .collect()
}

fn check_ideal_base(ideal: &IdealDesc, space: SpaceDesc) -> Result<()> {
    if ideal.base().dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: ideal.base().dim(),
        });
    }
    Ok(())
}

pub fn lift_left(data: &CriterionData, functionals: &[Functional], ideal: &IdealDesc) -> Result<LeftLift> {
    if functionals.is_empty() {
        return Err(Error::InvalidParameter("functional generators must be nonempty".into()));
    }
    let space = data.space();
    for f in functionals {
        space.ensure_same(&f.space())?;
    }
    check_ideal_base(ideal, space)?;
    Ok(LeftLift {
        first: rank_ones(&data.d1, functionals)?,
        second: rank_ones(&data.d2, functionals)?,
        base: data.clone(),
        functionals: functionals.to_vec(),
        ideal: *ideal,
    })
}

impl LeftLift {
    pub fn base(&self) -> &CriterionData {
        &self.base
    }

    pub fn functionals(&self) -> &[Functional] {
        &self.functionals
    }

    pub fn ideal(&self) -> &IdealDesc {
        &self.ideal
    }

    /// `L_Tⁿ A = TⁿA`, acting on left factors.
    pub fn operator_power(&self, n: usize, a: &FiniteRankCombo) -> Result<FiniteRankCombo> {
        let p = power(&self.base.op, n);
        a.map_left(|x| apply(&p, x))
    }

    /// `Q_{n_k}(Σ βⱼ yⱼ ⊗ φⱼ) = Σ βⱼ S_{n_k}yⱼ ⊗ φⱼ`.
    pub fn q_map(&self, k: usize, b: &FiniteRankCombo) -> Result<FiniteRankCombo> {
        let s = &self.base.maps[k];
        b.map_left(|y| apply(s, y))
    }

    /// Largest `‖φ‖` over the functional generators (ideal-norm factor of the rank-ones).
    pub fn max_functional_norm(&self) -> f64 {
        self.functionals.iter().map(|f| f.norm2()).fold(0.0, f64::max)
    }
}

impl CriterionSystem for LeftLift {
    type Elem = FiniteRankCombo;

    fn indices(&self) -> &[usize] {
        &self.base.indices
    }

    fn first_generators(&self) -> &[FiniteRankCombo] {
        &self.first
    }

    fn second_generators(&self) -> &[FiniteRankCombo] {
        &self.second
    }

    fn iterate(&self, n: usize, xs: &[FiniteRankCombo]) -> Result<Vec<FiniteRankCombo>> {
        let p = power(&self.base.op, n);
        xs.iter().map(|a| a.map_left(|x| apply(&p, x))).collect()
    }

    fn right_map(&self, k: usize, y: &FiniteRankCombo) -> Result<FiniteRankCombo> {
        self.q_map(k, y)
    }

    fn norm(&self, x: &FiniteRankCombo) -> f64 {
        self.ideal.norm_of(&x.to_matrix())
    }

    fn distance(&self, a: &FiniteRankCombo, b: &FiniteRankCombo) -> Result<f64> {
        Ok(self.ideal.norm_of(&(a.to_matrix() - b.to_matrix())))
    }

    fn scalars(&self) -> Option<&[Complex64]> {
        self.base.scalars()
    }

    fn window_violation(&self, k: usize) -> Option<Error> {
        self.base.window_violation(k)
    }
}

/// Criterion data for `R_T` on an ideal, built from data for `T*` on the dual:
/// generators `x ⊗ φ`, with `N_{n_k}` applying `M_{n_k}` to right factors.
#[derive(Debug, Clone, PartialEq)]
pub struct RightLift {
    adjoint_data: CriterionData,
    vectors: Vec<SpaceVec>,
    ideal: IdealDesc,
    /// `T` on `X` (the transpose of the dual operator).
    op: MatOp,
    first: Vec<FiniteRankCombo>,
    second: Vec<FiniteRankCombo>,
}

/// `adj_data` lives on `X* = ℓ^q_d`: its operator is `T*` and its generators
/// are coordinate vectors of functionals. `vectors` are the left factors in `X`.
pub fn lift_right(adj_data: &CriterionData, vectors: &[SpaceVec], ideal: &IdealDesc) -> Result<RightLift> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter("vector generators must be nonempty".into()));
    }
    let x_space = vectors[0].space();
    for v in vectors {
        x_space.ensure_same(&v.space())?;
    }
    let dual = adj_data.space();
    if x_space.dual() != dual {
        return Err(Error::SpaceMismatch(format!(
            "vectors in l^{} do not pair with dual data on l^{}",
            x_space.p(),
            dual.p()
        )));
    }
    check_ideal_base(ideal, x_space)?;
    let to_fun = |vs: &[SpaceVec]| {
        vs.iter()
            .map(|v| v.clone().into_functional(x_space))
            .collect::<Result<Vec<_>>>()
    };
    let phi1 = to_fun(&adj_data.d1)?;
    let phi2 = to_fun(&adj_data.d2)?;
    let op = MatOp::new(x_space, adj_data.op.entries().transpose())?;
    Ok(RightLift {
        first: rank_ones(vectors, &phi1)?,
        second: rank_ones(vectors, &phi2)?,
        adjoint_data: adj_data.clone(),
        vectors: vectors.to_vec(),
        ideal: *ideal,
        op,
    })
}

impl RightLift {
    pub fn adjoint_data(&self) -> &CriterionData {
        &self.adjoint_data
    }

    /// The operator `T` on `X` whose right multiplication is certified.
    pub fn op(&self) -> &MatOp {
        &self.op
    }

    pub fn vectors(&self) -> &[SpaceVec] {
        &self.vectors
    }

    pub fn ideal(&self) -> &IdealDesc {
        &self.ideal
    }

    /// `R_Tⁿ A = ATⁿ`, acting on right factors by `(T*)ⁿ`.
    pub fn operator_power(&self, n: usize, a: &FiniteRankCombo) -> Result<FiniteRankCombo> {
        let p = power(&self.op, n);
        a.map_right(|f| apply_adjoint(&p, f))
    }

    /// `N_{n_k}(Σ βⱼ yⱼ ⊗ φⱼ) = Σ βⱼ yⱼ ⊗ M_{n_k}φⱼ`.
    pub fn n_map(&self, k: usize, b: &FiniteRankCombo) -> Result<FiniteRankCombo> {
        let m = self.adjoint_data.maps[k].entries();
        b.map_right(|f| Ok(Functional::from_dvector(f.space(), m * f.coords())))
    }

    pub fn max_vector_norm(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm2()).fold(0.0, f64::max)
    }
}

impl CriterionSystem for RightLift {
    type Elem = FiniteRankCombo;

    fn indices(&self) -> &[usize] {
        &self.adjoint_data.indices
    }

    fn first_generators(&self) -> &[FiniteRankCombo] {
        &self.first
    }

    fn second_generators(&self) -> &[FiniteRankCombo] {
        &self.second
    }

    fn iterate(&self, n: usize, xs: &[FiniteRankCombo]) -> Result<Vec<FiniteRankCombo>> {
        let p = power(&self.op, n);
        xs.iter().map(|a| a.map_right(|f| apply_adjoint(&p, f))).collect()
    }

    fn right_map(&self, k: usize, y: &FiniteRankCombo) -> Result<FiniteRankCombo> {
        self.n_map(k, y)
    }

    fn norm(&self, x: &FiniteRankCombo) -> f64 {
        self.ideal.norm_of(&x.to_matrix())
    }

    fn distance(&self, a: &FiniteRankCombo, b: &FiniteRankCombo) -> Result<f64> {
        Ok(self.ideal.norm_of(&(a.to_matrix() - b.to_matrix())))
    }

    fn scalars(&self) -> Option<&[Complex64]> {
        self.adjoint_data.scalars()
    }

    fn window_violation(&self, k: usize) -> Option<Error> {
        self.adjoint_data.window_violation(k)
    }
}

// ---------------------------------------------------------------------------
// factor maps

/// `X ⊕ X` realized as `ℓᵖ_{2d}` with the same exponent.
pub fn direct_sum_space(space: SpaceDesc) -> Result<SpaceDesc> {
    space.with_dim(2 * space.dim())
}

/// Block-diagonal `T ⊕ T`.
pub fn direct_sum(t: &MatOp) -> MatOp {
    let d = t.dim();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(t.entries());
    m.view_mut((d, d), (d, d)).copy_from(t.entries());
    let space = direct_sum_space(t.space()).expect("doubling a valid dimension");
    MatOp::from_matrix_unchecked(space, m)
}

pub fn concat(x: &SpaceVec, y: &SpaceVec) -> Result<SpaceVec> {
    x.space().ensure_same(&y.space())?;
    let coords = x.coords().iter().chain(y.coords().iter()).cloned().collect();
    SpaceVec::new(direct_sum_space(x.space())?, coords)
}

pub fn split(v: &SpaceVec) -> Result<(SpaceVec, SpaceVec)> {
    let d2 = v.dim();
    if d2 % 2 != 0 {
        return Err(Error::InvalidParameter(format!("odd dimension {d2} is not a direct sum")));
    }
    let half = v.space().with_dim(d2 / 2)?;
    let c = v.coords().as_slice();
    Ok((
        SpaceVec::new(half, c[..d2 / 2].to_vec())?,
        SpaceVec::new(half, c[d2 / 2..].to_vec())?,
    ))
}

/// `A ↦ (Ax₁, Ax₂)`, intertwining `L_T` with `T ⊕ T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftFactorMap {
    x1: SpaceVec,
    x2: SpaceVec,
    duals: [Functional; 2],
}

pub fn intertwiner_left(x1: &SpaceVec, x2: &SpaceVec) -> Result<LeftFactorMap> {
    let duals = dual_basis(&[x1.clone(), x2.clone()])?;
    let [f1, f2]: [Functional; 2] = duals.try_into().expect("two duals for two vectors");
    Ok(LeftFactorMap {
        x1: x1.clone(),
        x2: x2.clone(),
        duals: [f1, f2],
    })
}

impl LeftFactorMap {
    pub fn eval(&self, a: &MatOp) -> Result<(SpaceVec, SpaceVec)> {
        Ok((apply(a, &self.x1)?, apply(a, &self.x2)?))
    }

    /// Same as [`Self::eval`], packed into `X ⊕ X`.
    pub fn eval_sum(&self, a: &MatOp) -> Result<SpaceVec> {
        let (u, v) = self.eval(a)?;
        concat(&u, &v)
    }

    /// `R = y₁ ⊗ x₁* + y₂ ⊗ x₂*` with `xᵢ*(xⱼ) = δᵢⱼ`, so that `eval(R) = (y₁, y₂)`.
    pub fn witness(&self, y1: &SpaceVec, y2: &SpaceVec) -> Result<MatOp> {
        let space = self.x1.space();
        space.ensure_same(&y1.space())?;
        space.ensure_same(&y2.space())?;
        let m = y1.coords() * self.duals[0].coords().transpose() + y2.coords() * self.duals[1].coords().transpose();
        MatOp::new(space, m)
    }

    pub fn dual_functionals(&self) -> &[Functional; 2] {
        &self.duals
    }
}

/// `A ↦ (A*f₁, A*f₂)`, intertwining `R_T` with `T* ⊕ T*`.
#[derive(Debug, Clone, PartialEq)]
pub struct RightFactorMap {
    f1: Functional,
    f2: Functional,
    /// `zⱼ ∈ X` with `fᵢ(zⱼ) = δᵢⱼ`.
    preduals: [SpaceVec; 2],
}

pub fn intertwiner_right(f1: &Functional, f2: &Functional) -> Result<RightFactorMap> {
    f1.space().ensure_same(&f2.space())?;
    let space = f1.space();
    // the pairing is symmetric in coordinates, so a dual basis of the
    // coefficient vectors gives the vectors zⱼ
    let duals = dual_basis(&[f1.as_dual_vec(), f2.as_dual_vec()])?;
    let z: Vec<SpaceVec> = duals
        .into_iter()
        .map(|g| SpaceVec::new(space, g.coords().iter().cloned().collect()))
        .collect::<Result<_>>()?;
    let [z1, z2]: [SpaceVec; 2] = z.try_into().expect("two vectors");
    Ok(RightFactorMap {
        f1: f1.clone(),
        f2: f2.clone(),
        preduals: [z1, z2],
    })
}

impl RightFactorMap {
    pub fn eval(&self, a: &MatOp) -> Result<(Functional, Functional)> {
        Ok((apply_adjoint(a, &self.f1)?, apply_adjoint(a, &self.f2)?))
    }

    /// The pair as a vector of `X* ⊕ X*`.
    pub fn eval_sum(&self, a: &MatOp) -> Result<SpaceVec> {
        let (u, v) = self.eval(a)?;
        concat(&u.as_dual_vec(), &v.as_dual_vec())
    }

    /// `A = z₁ ⊗ g₁ + z₂ ⊗ g₂`, so that `eval(A) = (g₁, g₂)`.
    pub fn witness(&self, g1: &Functional, g2: &Functional) -> Result<MatOp> {
        let space = self.f1.space();
        space.ensure_same(&g1.space())?;
        space.ensure_same(&g2.space())?;
        let m = self.preduals[0].coords() * g1.coords().transpose()
            + self.preduals[1].coords() * g2.coords().transpose();
        MatOp::new(space, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{adjoint, left_mult, operator_norm, right_mult};
    use crate::sampling::{gaussian_matrix, gaussian_vector, stream_rng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn hs(d: usize) -> SpaceDesc {
        SpaceDesc::hilbert(d).unwrap()
    }

    fn two_b(d: usize, kmax: usize) -> CriterionData {
        CriterionData::shift_instance(hs(d), c(2.0), kmax).unwrap()
    }

    #[test]
    fn shift_instance_product_sequence() {
        let data = two_b(16, 12);
        assert_eq!(data.first_generators().len(), 4);
        // the e3, e0 pair alone
        let single = CriterionData::new(
            data.op().clone(),
            data.indices().to_vec(),
            vec![SpaceVec::basis(hs(16), 3).unwrap()],
            vec![SpaceVec::basis(hs(16), 0).unwrap()],
            data.maps().to_vec(),
        )
        .unwrap()
        .with_window(data.window());
        let report = check_supercyclicity_criterion(&single, 1e-9).unwrap();
        let products = report.column(|r| r.max_product);
        let mut want = vec![1.0; 4];
        want.extend(vec![0.0; 9]);
        assert_eq!(products, want);
        assert!(report.records.iter().all(|r| r.max_reconstruction_error == 0.0));
        assert!(report.passed());

        let full = check_supercyclicity_criterion(&data, 1e-9).unwrap();
        assert!(full.passed());
        assert!(full.records[4..].iter().all(|r| r.max_product == 0.0));
    }

    #[test]
    fn identity_has_no_decay() {
        let s = hs(3);
        let id = MatOp::identity(s);
        let gens = vec![SpaceVec::from_real(s, &[1.0, 1.0, 0.0]).unwrap()];
        let data = CriterionData::new(
            id.clone(),
            (0..5).collect(),
            gens.clone(),
            gens,
            vec![id; 5],
        )
        .unwrap();
        let report = check_supercyclicity_criterion(&data, 1.0).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.failed_clause.as_deref(), Some("product"));
        assert!(check_supercyclicity_criterion(&data, 2.5).unwrap().passed());
    }

    #[test]
    fn empty_and_unsorted_indices_rejected() {
        let s = hs(2);
        let id = MatOp::identity(s);
        let g = vec![SpaceVec::basis(s, 0).unwrap()];
        assert_eq!(
            CriterionData::new(id.clone(), vec![], g.clone(), g.clone(), vec![]).unwrap_err(),
            Error::EmptyIndices
        );
        assert_eq!(
            CriterionData::new(id.clone(), vec![1, 1], g.clone(), g.clone(), vec![id.clone(); 2]).unwrap_err(),
            Error::NonIncreasingIndices(1)
        );
        let data = CriterionData::new(id.clone(), vec![1], g.clone(), g, vec![id]).unwrap();
        assert_eq!(
            data.with_scalars(vec![c(0.0)]).unwrap_err(),
            Error::ZeroScalar { index: 0 }
        );
    }

    #[test]
    fn window_violation_detected() {
        let data = two_b(8, 6);
        // default generators respect the window
        assert!(check_supercyclicity_criterion(&data, 1e-9).is_ok());
        let wide = CriterionData::new(
            data.op().clone(),
            data.indices().to_vec(),
            data.first_generators().to_vec(),
            vec![SpaceVec::basis(hs(8), 5).unwrap()],
            data.maps().to_vec(),
        )
        .unwrap()
        .with_window(data.window());
        let err = check_supercyclicity_criterion(&wide, 1e-9).unwrap_err();
        assert_eq!(
            err,
            Error::WindowViolation {
                generator: 0,
                support: 6,
                power: 3,
                dim: 8
            }
        );
        let report = supercyclicity_report(&wide, 1e-9).unwrap();
        assert_eq!(report.verdict, Verdict::WindowViolation);
        assert_eq!(report.verdict.exit_code(), 3);
        assert_eq!(report.records.len(), 7);
    }

    #[test]
    fn hypercyclicity_examples() {
        let data = two_b(16, 12);
        let report = check_hypercyclicity_criterion(&data, 1e-3).unwrap();
        assert!(report.passed(), "{report:?}");
        for r in &report.records {
            assert!((r.max_right_norm - 0.5f64.powi(r.n_k as i32)).abs() < 1e-15);
        }

        let unweighted = CriterionData::shift_instance(hs(16), c(1.0), 12).unwrap();
        let report = check_hypercyclicity_criterion(&unweighted, 1e-3).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.failed_clause.as_deref(), Some("right_inverse"));

        let s = hs(4);
        let zero = MatOp::zero(s);
        let g: Vec<SpaceVec> = (0..4).map(|j| SpaceVec::basis(s, j).unwrap()).collect();
        let data = CriterionData::new(zero.clone(), (1..6).collect(), g.clone(), g, vec![zero; 5]).unwrap();
        let report = check_hypercyclicity_criterion(&data, 1e-3).unwrap();
        assert_eq!(report.failed_clause.as_deref(), Some("reconstruction"));
    }

    #[test]
    fn verdict_monotone_in_tolerance() {
        let data = CriterionData::shift_instance(hs(10), c(1.5), 6).unwrap();
        let mut passed = false;
        for tol in [1e-12, 1e-6, 1e-3, 0.1, 1.0, 10.0] {
            let ok = check_hypercyclicity_criterion(&data, tol).unwrap().passed();
            assert!(ok || !passed, "pass at smaller tolerance but fail at {tol}");
            passed |= ok;
        }
        assert!(passed);
    }

    #[test]
    fn left_lift_q_map_and_reconstruction() {
        let data = two_b(16, 12);
        let s = hs(16);
        let e0f = Functional::basis(s, 0).unwrap();
        let ideal = IdealDesc::schatten(2.0, s).unwrap();
        let lift = lift_left(&data, std::slice::from_ref(&e0f), &ideal).unwrap();

        let b = FiniteRankCombo::new(vec![(ONE, SpaceVec::basis(s, 0).unwrap(), e0f.clone())]).unwrap();
        let q1 = lift.q_map(1, &b).unwrap();
        let want = SpaceVec::basis(s, 1).unwrap().scale(c(0.5)).coords() * e0f.coords().transpose();
        assert_eq!(q1.to_matrix(), want);

        for k in 0..lift.indices().len() {
            let n = lift.indices()[k];
            for y in lift.second_generators() {
                let back = lift.operator_power(n, &lift.q_map(k, y).unwrap()).unwrap();
                assert!(lift.distance(&back, y).unwrap() <= 1e-12);
            }
        }

        let a = FiniteRankCombo::new(vec![(ONE, SpaceVec::basis(s, 3).unwrap(), e0f.clone())]).unwrap();
        let products: Vec<f64> = (0..lift.indices().len())
            .map(|k| {
                let n = lift.indices()[k];
                lift.norm(&lift.operator_power(n, &a).unwrap()) * lift.norm(&lift.q_map(k, &b).unwrap())
            })
            .collect();
        assert_eq!(&products[..6], &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);

        let report = check_supercyclicity_criterion(&lift, 1e-9).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn left_lift_rejects_space_mismatch() {
        let data = two_b(8, 4);
        let f = Functional::basis(hs(7), 0).unwrap();
        let ideal = IdealDesc::schatten(2.0, hs(8)).unwrap();
        assert!(lift_left(&data, &[f], &ideal).is_err());
        assert!(lift_left(&data, &[], &ideal).is_err());
    }

    #[test]
    fn right_lift_mirrors_left() {
        // data for T* = 2B on the dual, so T = 2F on X
        let x = hs(16);
        let adj = CriterionData::shift_instance(x.dual(), c(2.0), 12).unwrap();
        let ideal = IdealDesc::schatten(2.0, x).unwrap();
        let d = vec![SpaceVec::basis(x, 0).unwrap(), SpaceVec::basis(x, 1).unwrap()];
        let lift = lift_right(&adj, &d, &ideal).unwrap();
        assert_eq!(lift.op(), &adjoint(adj.op()));

        let b = lift.second_generators()[0].clone();
        let n1 = lift.n_map(1, &b).unwrap();
        let (_, y, f) = &n1.terms()[0];
        assert_eq!(y, &SpaceVec::basis(x, 0).unwrap());
        assert_eq!(f.coords(), &(adj.maps()[1].entries() * Functional::basis(x, 0).unwrap().coords()));

        for k in 0..lift.indices().len() {
            let n = lift.indices()[k];
            for y in lift.second_generators() {
                let back = lift.operator_power(n, &lift.n_map(k, y).unwrap()).unwrap();
                assert!(lift.distance(&back, y).unwrap() <= 1e-12);
            }
        }
        // R_T^n A equals A Tⁿ as matrices
        let a = &lift.first_generators()[3];
        let lhs = lift.operator_power(2, a).unwrap().to_matrix();
        let rhs = a.to_matrix() * power(lift.op(), 2).entries();
        assert!((lhs - rhs).norm() < 1e-14);

        assert!(check_supercyclicity_criterion(&lift, 1e-9).unwrap().passed());

        let wrong = vec![SpaceVec::basis(SpaceDesc::new(1.0, 16).unwrap(), 0).unwrap()];
        assert!(lift_right(&adj, &wrong, &ideal).is_err());
    }

    #[test]
    fn intertwiners_random() {
        let s = hs(5);
        let mut rng = stream_rng(21, 0);
        for _ in 0..10 {
            let t = MatOp::new(s, gaussian_matrix(&mut rng, 5, 5)).unwrap();
            let a = MatOp::new(s, gaussian_matrix(&mut rng, 5, 5)).unwrap();
            let x1 = SpaceVec::from_dvector(s, gaussian_vector(&mut rng, 5));
            let x2 = SpaceVec::from_dvector(s, gaussian_vector(&mut rng, 5));
            let phi = intertwiner_left(&x1, &x2).unwrap();
            let lhs = phi.eval_sum(&left_mult(&t, &a).unwrap()).unwrap();
            let rhs = apply(&direct_sum(&t), &phi.eval_sum(&a).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-12 * (1.0 + lhs.norm()));

            let y1 = SpaceVec::from_dvector(s, gaussian_vector(&mut rng, 5));
            let y2 = SpaceVec::from_dvector(s, gaussian_vector(&mut rng, 5));
            let r = phi.witness(&y1, &y2).unwrap();
            let (u, v) = phi.eval(&r).unwrap();
            assert!(u.sub(&y1).unwrap().norm() < 1e-10);
            assert!(v.sub(&y2).unwrap().norm() < 1e-10);

            let f1 = Functional::from_dvector(s, gaussian_vector(&mut rng, 5));
            let f2 = Functional::from_dvector(s, gaussian_vector(&mut rng, 5));
            let psi = intertwiner_right(&f1, &f2).unwrap();
            let lhs = psi.eval_sum(&right_mult(&t, &a).unwrap()).unwrap();
            let tstar = direct_sum(&adjoint(&t)).on_dual();
            let rhs = apply(&tstar, &psi.eval_sum(&a).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-12 * (1.0 + lhs.norm()));

            let g1 = Functional::from_dvector(s, gaussian_vector(&mut rng, 5));
            let g2 = Functional::from_dvector(s, gaussian_vector(&mut rng, 5));
            let w = psi.witness(&g1, &g2).unwrap();
            let (u, v) = psi.eval(&w).unwrap();
            assert!(u.sub(&g1).unwrap().norm() < 1e-10);
            assert!(v.sub(&g2).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn intertwiner_examples() {
        let s = hs(3);
        let e0 = SpaceVec::basis(s, 0).unwrap();
        let e1 = SpaceVec::basis(s, 1).unwrap();
        let t = MatOp::new(s, DMatrix::from_fn(3, 3, |i, j| c((3 * i + j) as f64))).unwrap();
        let (u, v) = intertwiner_left(&e0, &e1).unwrap().eval(&t).unwrap();
        assert_eq!(u.coords(), &t.entries().column(0).into_owned());
        assert_eq!(v.coords(), &t.entries().column(1).into_owned());
        assert!(matches!(
            intertwiner_left(&e0, &e0.scale(c(2.0))),
            Err(Error::LinearDependence { .. })
        ));
    }

    #[test]
    fn direct_sum_examples() {
        let s = hs(3);
        assert_eq!(direct_sum(&MatOp::identity(s)), MatOp::identity(hs(6)));
        let mut rng = stream_rng(2, 0);
        let t = MatOp::new(s, gaussian_matrix(&mut rng, 3, 3)).unwrap();
        let x = SpaceVec::from_dvector(s, gaussian_vector(&mut rng, 3));
        let y = SpaceVec::from_dvector(s, gaussian_vector(&mut rng, 3));
        let got = apply(&direct_sum(&t), &concat(&x, &y).unwrap()).unwrap();
        let (gx, gy) = split(&got).unwrap();
        assert!(gx.sub(&apply(&t, &x).unwrap()).unwrap().norm() < 1e-14);
        assert!(gy.sub(&apply(&t, &y).unwrap()).unwrap().norm() < 1e-14);
        assert!((operator_norm(&direct_sum(&t)) - operator_norm(&t)).abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_instance_for_invertible() {
        let s = hs(3);
        let t = MatOp::diagonal(s, &[c(2.0), c(3.0), c(4.0)]).unwrap();
        let data = CriterionData::pseudo_inverse_instance(t, 5).unwrap();
        let report = check_hypercyclicity_criterion(&data, 1e-6).unwrap();
        // T^k grows so orbit does not decay
        assert_eq!(report.failed_clause.as_deref(), Some("orbit"));
        assert!(report.records.iter().all(|r| r.max_reconstruction_error < 1e-12));
    }

    #[test]
    fn decay_rule() {
        assert!(decays(&[5.0, 1.0, 0.0, 0.0], 1e-9));
        assert!(!decays(&[5.0, 0.0, 1e-10, 0.0], 1e-9));
        assert!(decays(&[5.0, 0.0, 1e-19, 1e-19], 1e-9));
        assert!(!decays(&[1.0, 1.0], 0.5));
        assert!(!decays(&[], 1.0));
    }
}
