//! Operator ideals at finite truncation.
//!
//! Two concrete models: Schatten-p classes (`ℓᵖ` norm of the singular values)
//! and the operator-norm ideal, which stands in for the compact operators.
//! Axioms (i)–(iv) are exposed as randomized audits, and
//! [`lemma1_approximate`] builds an approximation of an ideal element by
//! combinations `Σ αᵢ xᵢ ⊗ φᵢ` with factors drawn from dyadic grids.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{operator_norm, MatOp};
use crate::sampling::{complex_gaussian, gaussian_matrix, gaussian_vector, stream_rng};
use crate::spaces::{lp_norm, Functional, RankOne, SpaceDesc, SpaceVec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IdealKind {
    Schatten { p: f64 },
    OperatorNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealDesc {
    kind: IdealKind,
    base: SpaceDesc,
}

impl IdealDesc {
    /// Schatten-p ideal; `p = ∞` yields the operator-norm ideal.
    pub fn schatten(p: f64, base: SpaceDesc) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Schatten exponent must be >= 1, got {p}"
            )));
        }
        if p.is_infinite() {
            return Ok(Self::operator_norm(base));
        }
        Ok(Self {
            kind: IdealKind::Schatten { p },
            base,
        })
    }

    pub fn operator_norm(base: SpaceDesc) -> Self {
        Self {
            kind: IdealKind::OperatorNorm,
            base,
        }
    }

    pub fn kind(&self) -> IdealKind {
        self.kind
    }

    pub fn base(&self) -> SpaceDesc {
        self.base
    }

    /// Ideal norm of a raw matrix on the base space.
    pub fn norm_of(&self, m: &DMatrix<Complex64>) -> f64 {
        if m.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            return 0.0;
        }
        let sv = m.singular_values();
        match self.kind {
            IdealKind::Schatten { p } => lp_norm_real(sv.as_slice(), p),
            IdealKind::OperatorNorm => sv.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn element(&self, op: MatOp) -> Result<IdealElement> {
        IdealElement::new(op, *self)
    }
}

fn lp_norm_real(v: &[f64], p: f64) -> f64 {
    let c: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    lp_norm(c.iter(), p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealElement {
    op: MatOp,
    ideal: IdealDesc,
}

impl IdealElement {
    pub fn new(op: MatOp, ideal: IdealDesc) -> Result<Self> {
        if op.dim() != ideal.base.dim() {
            return Err(Error::DimensionMismatch {
                expected: ideal.base.dim(),
                found: op.dim(),
            });
        }
        Ok(Self { op, ideal })
    }

    pub fn op(&self) -> &MatOp {
        &self.op
    }

    pub fn ideal(&self) -> &IdealDesc {
        &self.ideal
    }

    pub fn norm(&self) -> f64 {
        ideal_norm(self)
    }
}

pub fn ideal_norm(e: &IdealElement) -> f64 {
    e.ideal.norm_of(e.op.entries())
}

/// `Σ αᵢ xᵢ ⊗ φᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankCombo {
    terms: Vec<(Complex64, SpaceVec, Functional)>,
}

impl FiniteRankCombo {
    pub fn new(terms: Vec<(Complex64, SpaceVec, Functional)>) -> Result<Self> {
        let Some((_, x0, _)) = terms.first() else {
            return Err(Error::InvalidParameter(
                "finite-rank combination needs at least one term".into(),
            ));
        };
        let space = x0.space();
        for (_, x, f) in &terms {
            space.ensure_same(&x.space())?;
            space.ensure_same(&f.space())?;
        }
        Ok(Self { terms })
    }

    pub fn from_rank_ones(terms: &[RankOne]) -> Result<Self> {
        Self::new(
            terms
                .iter()
                .map(|r| (Complex64::new(1.0, 0.0), r.left().clone(), r.right().clone()))
                .collect(),
        )
    }

    pub fn terms(&self) -> &[(Complex64, SpaceVec, Functional)] {
        &self.terms
    }

    pub fn space(&self) -> SpaceDesc {
        self.terms[0].1.space()
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let d = self.space().dim();
        let mut m = DMatrix::zeros(d, d);
        for (alpha, x, f) in &self.terms {
            m += (x.coords() * f.coords().transpose()) * *alpha;
        }
        m
    }

    pub fn to_op(&self) -> MatOp {
        MatOp::from_matrix_unchecked(self.space(), self.to_matrix())
    }

    /// Applies `g` to every left factor, keeping coefficients and functionals.
    pub fn map_left<F>(&self, g: F) -> Result<FiniteRankCombo>
    where
        F: Fn(&SpaceVec) -> Result<SpaceVec>,
    {
        let terms = self
            .terms
            .iter()
            .map(|(a, x, f)| Ok((*a, g(x)?, f.clone())))
            .collect::<Result<Vec<_>>>()?;
        FiniteRankCombo::new(terms)
    }

    /// Applies `g` to every right factor.
    pub fn map_right<F>(&self, g: F) -> Result<FiniteRankCombo>
    where
        F: Fn(&Functional) -> Result<Functional>,
    {
        let terms = self
            .terms
            .iter()
            .map(|(a, x, f)| Ok((*a, x.clone(), g(f)?)))
            .collect::<Result<Vec<_>>>()?;
        FiniteRankCombo::new(terms)
    }
}

// ---------------------------------------------------------------------------
// axiom audits

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub sample: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Worst relative slack of one axiom over the audited samples.
///
/// Slack is `(rhs - lhs) / rhs` for the inequalities and `-|lhs - rhs| / rhs`
/// for the rank-one identity, so a holding axiom never goes below `-tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomAudit {
    pub axiom: String,
    pub samples: usize,
    pub worst_slack: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub ideal: IdealDesc,
    pub seed: u64,
    pub axioms: Vec<AxiomAudit>,
}

impl AuditReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.axioms.iter().all(|a| a.worst_slack >= -tol)
    }
}

fn rel_slack(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (rhs - lhs) / rhs
    }
}

fn rel_equality_slack(lhs: f64, rhs: f64) -> f64 {
    let scale = rhs.abs().max(lhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        -(lhs - rhs).abs() / scale
    }
}

fn fold_worst(axiom: &str, entries: Vec<(f64, Witness)>) -> AxiomAudit {
    let samples = entries.len();
    let worst = entries
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0));
    AxiomAudit {
        axiom: axiom.to_string(),
        samples,
        worst_slack: worst.map_or(0.0, |w| w.0),
        witness: worst.map(|w| w.1),
    }
}

/// Per-sample record: (linearity, domination, two-sided bound, rank-one) slacks.
struct SampleSlacks {
    linear: (f64, Witness),
    dominated: (f64, Witness),
    two_sided: (f64, Witness),
    rank_one: Option<(f64, Witness)>,
}

fn audit_sample(ideal: &IdealDesc, seed: u64, i: usize) -> SampleSlacks {
    let base = ideal.base;
    let d = base.dim();
    let mut rng = stream_rng(seed, i as u64);
    let a = MatOp::from_matrix_unchecked(base, gaussian_matrix(&mut rng, d, d));
    let s = gaussian_matrix(&mut rng, d, d);
    let b = MatOp::from_matrix_unchecked(base, gaussian_matrix(&mut rng, d, d));
    let s2 = gaussian_matrix(&mut rng, d, d);
    let alpha = complex_gaussian(&mut rng);
    let beta = complex_gaussian(&mut rng);

    let s_j = ideal.norm_of(&s);
    let s_op = operator_norm(&MatOp::from_matrix_unchecked(base, s.clone()));

    // (i): J is a linear subspace with a norm; check homogeneity and the triangle inequality
    let combo = &s * alpha + &s2 * beta;
    let lin_lhs = ideal.norm_of(&combo);
    let lin_rhs = alpha.norm() * s_j + beta.norm() * ideal.norm_of(&s2);
    let homog = rel_equality_slack(ideal.norm_of(&(&s * alpha)), alpha.norm() * s_j);
    let linear = rel_slack(lin_lhs, lin_rhs).min(homog);

    // (iii)
    let asb = a.entries() * &s * b.entries();
    let two_lhs = ideal.norm_of(&asb);
    let two_rhs = operator_norm(&a) * s_j * operator_norm(&b);

    let rank_one = if base.is_hilbert() {
        let x = SpaceVec::from_dvector(base, gaussian_vector(&mut rng, d));
        let f = Functional::from_dvector(base, gaussian_vector(&mut rng, d));
        let lhs = ideal.norm_of(&(x.coords() * f.coords().transpose()));
        let rhs = x.norm() * f.norm();
        Some((
            rel_equality_slack(lhs, rhs),
            Witness { sample: i, lhs, rhs },
        ))
    } else {
        None
    };

    SampleSlacks {
        linear: (
            linear,
            Witness {
                sample: i,
                lhs: lin_lhs,
                rhs: lin_rhs,
            },
        ),
        dominated: (
            rel_slack(s_op, s_j),
            Witness {
                sample: i,
                lhs: s_op,
                rhs: s_j,
            },
        ),
        two_sided: (
            rel_slack(two_lhs, two_rhs),
            Witness {
                sample: i,
                lhs: two_lhs,
                rhs: two_rhs,
            },
        ),
        rank_one,
    }
}

/// Audits axioms (i)–(iv) on `samples` seeded random draws.
///
/// The rank-one identity `‖x⊗x*‖_J = ‖x‖‖x*‖` is audited only on `ℓ²`
/// base spaces; on other bases its entry reports zero samples.
pub fn audit_ideal_axioms(ideal: &IdealDesc, samples: usize, seed: u64) -> Result<AuditReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let per: Vec<SampleSlacks> = (0..samples)
        .into_par_iter()
        .map(|i| audit_sample(ideal, seed, i))
        .collect();

    let mut linear = Vec::with_capacity(samples);
    let mut dominated = Vec::with_capacity(samples);
    let mut two_sided = Vec::with_capacity(samples);
    let mut rank_one = Vec::new();
    for s in per {
        linear.push(s.linear);
        dominated.push(s.dominated);
        two_sided.push(s.two_sided);
        rank_one.extend(s.rank_one);
    }
    Ok(AuditReport {
        ideal: *ideal,
        seed,
        axioms: vec![
            fold_worst("linear_subspace", linear),
            fold_worst("dominates_operator_norm", dominated),
            fold_worst("two_sided_ideal", two_sided),
            fold_worst("rank_one_norm", rank_one),
        ],
    })
}

/// Both sides of `‖TA‖_J ≤ ‖T‖‖A‖_J` and `‖AT‖_J ≤ ‖T‖‖A‖_J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultBound {
    pub left: (f64, f64),
    pub right: (f64, f64),
}

impl MultBound {
    pub fn holds(&self, tol: f64) -> bool {
        let ok = |(l, r): (f64, f64)| l <= r * (1.0 + tol) + tol;
        ok(self.left) && ok(self.right)
    }
}

pub fn mult_norm_bound_check(t: &MatOp, a: &IdealElement) -> Result<MultBound> {
    t.space().ensure_same(&a.op.space())?;
    let rhs = operator_norm(t) * ideal_norm(a);
    let ta = a.ideal.norm_of(&(t.entries() * a.op.entries()));
    let at = a.ideal.norm_of(&(a.op.entries() * t.entries()));
    Ok(MultBound {
        left: (ta, rhs),
        right: (at, rhs),
    })
}

// ---------------------------------------------------------------------------
// approximation by grid-valued finite-rank combinations

/// A countable set of coordinate vectors, dense in `ℂ^d`, that can be searched
/// for a point within a given Euclidean distance of a target.
pub trait DenseGenerator {
    /// Finest resolution level this generator will try.
    fn max_level(&self) -> u32;

    /// The generator point nearest to `target` at resolution `level`.
    fn nearest(&self, target: &DVector<Complex64>, level: u32) -> DVector<Complex64>;

    /// Level at which `target` itself belongs to the generator, if any.
    fn member_level(&self, target: &DVector<Complex64>) -> Option<u32>;

    /// First point found within `budget` (strictly), with its level and distance.
    fn approximate(
        &self,
        target: &DVector<Complex64>,
        budget: f64,
    ) -> std::result::Result<(DVector<Complex64>, u32, f64), (u32, f64)> {
        if let Some(level) = self.member_level(target) {
            return Ok((target.clone(), level, 0.0));
        }
        let mut best = (0, f64::INFINITY);
        for level in 0..=self.max_level() {
            let cand = self.nearest(target, level);
            let err = (target - &cand).norm();
            if err < budget {
                return Ok((cand, level, err));
            }
            if err < best.1 {
                best = (level, err);
            }
        }
        Err(best)
    }
}

/// Complex vectors whose real and imaginary parts are dyadic rationals
/// `m / 2^level`, for `level ≤ max_level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicGrid {
    max_level: u32,
}

impl DyadicGrid {
    pub fn new(max_level: u32) -> Self {
        Self {
            max_level: max_level.min(60),
        }
    }

    /// Points of `level` whose coordinates have real and imaginary parts in
    /// `[-radius, radius]`, in a fixed order. Counts grow as `(2·radius·2^level + 1)^{2d}`,
    /// so this is only meant for tiny `d`.
    pub fn points(&self, d: usize, level: u32, radius: u32) -> Vec<DVector<Complex64>> {
        let step = (0.5f64).powi(level as i32);
        let n = (radius as i64) << level;
        let axis: Vec<f64> = (-n..=n).map(|m| m as f64 * step).collect();
        let scalars: Vec<Complex64> = axis
            .iter()
            .flat_map(|&re| axis.iter().map(move |&im| Complex64::new(re, im)))
            .collect();
        let mut out: Vec<Vec<Complex64>> = vec![Vec::new()];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    scalars.iter().map(move |&z| {
                        let mut v = prefix.clone();
                        v.push(z);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(DVector::from_vec).collect()
    }
}

impl Default for DyadicGrid {
    fn default() -> Self {
        Self::new(52)
    }
}

fn dyadic_level(x: f64, max_level: u32) -> Option<u32> {
    (0..=max_level).find(|&l| {
        let scaled = x * (2.0f64).powi(l as i32);
        scaled.is_finite() && scaled.fract() == 0.0
    })
}

impl DenseGenerator for DyadicGrid {
    fn max_level(&self) -> u32 {
        self.max_level
    }

    fn nearest(&self, target: &DVector<Complex64>, level: u32) -> DVector<Complex64> {
        let scale = (2.0f64).powi(level as i32);
        target.map(|z| Complex64::new((z.re * scale).round() / scale, (z.im * scale).round() / scale))
    }

    fn member_level(&self, target: &DVector<Complex64>) -> Option<u32> {
        let mut level = 0;
        for z in target.iter() {
            level = level.max(dyadic_level(z.re, self.max_level)?);
            level = level.max(dyadic_level(z.im, self.max_level)?);
        }
        Some(level)
    }
}

/// One substitution `aᵢ ⊗ φᵢ ↦ xᵢ ⊗ φᵢ'` together with its budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaStep {
    pub term: usize,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub a_norm: f64,
    pub functional_budget: f64,
    pub functional_error: f64,
    pub functional_level: u32,
    pub vector_budget: f64,
    pub vector_error: f64,
    pub vector_level: u32,
    /// `|αᵢ| (‖aᵢ‖‖φᵢ − φᵢ'‖ + ‖aᵢ − xᵢ‖‖φᵢ'‖)`.
    pub contribution: f64,
}

impl LemmaStep {
    pub fn within_budget(&self) -> bool {
        self.functional_error < self.functional_budget && self.vector_error < self.vector_budget
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRun {
    pub eps: f64,
    pub combo: FiniteRankCombo,
    /// Number of terms in the finite-rank stage.
    pub terms: usize,
    /// Rank kept by the singular-value truncation.
    pub rank: usize,
    /// `‖T − F‖_J` for the finite-rank stage.
    pub finite_rank_error: f64,
    pub steps: Vec<LemmaStep>,
    /// `‖T − Σ αᵢ xᵢ ⊗ φᵢ'‖_J`, recomputed from matrices.
    pub residual: f64,
}

impl LemmaRun {
    /// `‖T − F‖_J + Σ contributions`, the bound the residual must respect.
    pub fn accounted_bound(&self) -> f64 {
        self.finite_rank_error + self.steps.iter().map(|s| s.contribution).sum::<f64>()
    }

    /// CSV step log.
    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.steps {
            w.serialize(s).map_err(|e| Error::Serde(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))?;
        Ok(())
    }
}

/// Finite-rank stage: singular-value truncation to the smallest rank whose
/// residual is below `budget`. When nothing but zero singular values would be
/// dropped, the target itself is returned.
fn finite_rank_stage(target: &IdealElement, budget: f64) -> (DMatrix<Complex64>, usize, f64) {
    let m = target.op.entries();
    let ideal = target.ideal;
    let d = m.nrows();
    if ideal.norm_of(m) < budget {
        return (DMatrix::zeros(d, d), 0, ideal.norm_of(m));
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let full_rank = sv.iter().filter(|&&s| s > 0.0).count();
    for r in 1..full_rank {
        let mut f = DMatrix::zeros(d, d);
        for &k in &order[..r] {
            f += (u.column(k) * v_t.row(k)) * Complex64::new(sv[k], 0.0);
        }
        let err = ideal.norm_of(&(m - &f));
        if err < budget {
            return (f, r, err);
        }
    }
    (m.clone(), full_rank, 0.0)
}

/// Approximates `target` to within `eps` in the ideal norm by
/// `Σ αᵢ xᵢ ⊗ φᵢ'` with `xᵢ` from `vectors` and `φᵢ'` from `functionals`.
///
/// Stage one finds a finite-rank `F` with `‖T − F‖_J < ε/2` and writes it by
/// columns, `F = Σ (F eⱼ) ⊗ eⱼ*`, dropping zero columns. Stage two replaces
/// each functional within `ε / (4N|αᵢ|‖aᵢ‖)` and then each vector within
/// `ε / (4N|αᵢ|‖φᵢ'‖)`. Factor norms are Euclidean, the norms for which
/// `‖x ⊗ φ‖_J = ‖x‖‖φ‖` holds in both ideal models.
pub fn lemma1_approximate<D, P>(
    target: &IdealElement,
    vectors: &D,
    functionals: &P,
    eps: f64,
) -> Result<LemmaRun>
where
    D: DenseGenerator + ?Sized,
    P: DenseGenerator + ?Sized,
{
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let space = target.op.space();
    let d = space.dim();
    let (f, rank, finite_rank_error) = finite_rank_stage(target, eps / 2.0);

    let columns: Vec<(usize, DVector<Complex64>)> = (0..d)
        .map(|j| (j, f.column(j).into_owned()))
        .filter(|(_, c)| c.iter().any(|z| z.re != 0.0 || z.im != 0.0))
        .collect();
    let n = columns.len();
    let one = Complex64::new(1.0, 0.0);

    let mut steps = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(n.max(1));
    for (term, (j, a)) in columns.into_iter().enumerate() {
        let alpha = one;
        let mut phi = DVector::zeros(d);
        phi[j] = one;
        let a_norm = a.norm();

        let functional_budget = eps / (4.0 * n as f64 * alpha.norm() * a_norm);
        let (phi_sub, functional_level, functional_error) = functionals
            .approximate(&phi, functional_budget)
            .map_err(|(level, achieved)| Error::BudgetUnmet {
                term,
                budget: functional_budget,
                achieved,
                level,
            })?;

        let phi_sub_norm = phi_sub.norm();
        let vector_budget = if phi_sub_norm == 0.0 {
            f64::INFINITY
        } else {
            eps / (4.0 * n as f64 * alpha.norm() * phi_sub_norm)
        };
        let (x, vector_level, vector_error) =
            vectors
                .approximate(&a, vector_budget)
                .map_err(|(level, achieved)| Error::BudgetUnmet {
                    term,
                    budget: vector_budget,
                    achieved,
                    level,
                })?;

        let contribution = alpha.norm() * (a_norm * functional_error + vector_error * phi_sub_norm);
        steps.push(LemmaStep {
            term,
            alpha_re: alpha.re,
            alpha_im: alpha.im,
            a_norm,
            functional_budget,
            functional_error,
            functional_level,
            vector_budget,
            vector_error,
            vector_level,
            contribution,
        });
        terms.push((
            alpha,
            SpaceVec::from_dvector(space, x),
            Functional::from_dvector(space, phi_sub),
        ));
    }
    if terms.is_empty() {
        terms.push((
            Complex64::new(0.0, 0.0),
            SpaceVec::zeros(space),
            Functional::zeros(space),
        ));
    }
    let combo = FiniteRankCombo::new(terms)?;
    let residual = target.ideal.norm_of(&(target.op.entries() - combo.to_matrix()));
    Ok(LemmaRun {
        eps,
        combo,
        terms: n,
        rank,
        finite_rank_error,
        steps,
        residual,
    })
}
