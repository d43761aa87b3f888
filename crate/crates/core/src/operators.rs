//! Dense operators on truncated spaces: weighted shifts, adjoints, powers,
//! orbits, and the multiplication maps `L_T(A) = TA`, `R_T(A) = AT`.
//!
//! Shift truncations act on the first `d` coordinates. A backward shift maps
//! that span into itself exactly; a forward shift drops whatever reaches
//! coordinate `d`, so `Fⁿy` is exact only while `support(y) + n ≤ d`.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{lp_norm, Functional, SpaceDesc, SpaceVec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Bounded operator on `ℓᵖ_d` given by its matrix in the canonical basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOp", into = "RawOp")]
pub struct MatOp {
    space: SpaceDesc,
    entries: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawOp {
    space: SpaceDesc,
    entries: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<RawOp> for MatOp {
    type Error = Error;

    fn try_from(raw: RawOp) -> Result<Self> {
        let m = matrix_from_rows(&raw.entries)?;
        MatOp::new(raw.space, m)
    }
}

impl From<MatOp> for RawOp {
    fn from(op: MatOp) -> Self {
        RawOp {
            space: op.space,
            entries: matrix_to_rows(&op.entries),
        }
    }
}

pub(crate) fn matrix_to_rows(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<Complex64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(Error::InvalidParameter(format!(
            "row {i} has {} entries, expected {m}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| {
        let [re, im] = rows[i][j];
        Complex64::new(re, im)
    }))
}

/// Parses a bare JSON matrix (nested arrays of `[re, im]`) and checks it is square.
pub fn matrix_from_json(text: &str) -> Result<DMatrix<Complex64>> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)?;
    let m = matrix_from_rows(&rows)?;
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::InvalidParameter(format!(
            "matrix must be square and nonempty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

impl MatOp {
    pub fn new(space: SpaceDesc, entries: DMatrix<Complex64>) -> Result<Self> {
        let d = space.dim();
        if entries.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: entries.nrows(),
            });
        }
        if entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: entries.ncols(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("operator entries must be finite".into()));
        }
        Ok(Self { space, entries })
    }

    pub(crate) fn from_matrix_unchecked(space: SpaceDesc, entries: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(entries.shape(), (space.dim(), space.dim()));
        Self { space, entries }
    }

    pub fn identity(space: SpaceDesc) -> Self {
        Self::from_matrix_unchecked(space, DMatrix::identity(space.dim(), space.dim()))
    }

    pub fn zero(space: SpaceDesc) -> Self {
        Self::from_matrix_unchecked(space, DMatrix::zeros(space.dim(), space.dim()))
    }

    pub fn diagonal(space: SpaceDesc, diag: &[Complex64]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: diag.len(),
            });
        }
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        Self::new(space, m)
    }

    /// Domain and codomain descriptor (they coincide at truncation).
    pub fn space(&self) -> SpaceDesc {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn scale(&self, alpha: Complex64) -> MatOp {
        Self::from_matrix_unchecked(self.space, &self.entries * alpha)
    }

    pub fn add(&self, other: &MatOp) -> Result<MatOp> {
        self.space.ensure_same(&other.space)?;
        Ok(Self::from_matrix_unchecked(self.space, &self.entries + &other.entries))
    }

    pub fn sub(&self, other: &MatOp) -> Result<MatOp> {
        self.space.ensure_same(&other.space)?;
        Ok(Self::from_matrix_unchecked(self.space, &self.entries - &other.entries))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MatOp) -> Result<MatOp> {
        self.space.ensure_same(&other.space)?;
        Ok(Self::from_matrix_unchecked(self.space, &self.entries * &other.entries))
    }

    pub fn pow(&self, n: usize) -> MatOp {
        power(self, n)
    }

    pub fn norm(&self) -> f64 {
        operator_norm(self)
    }

    /// Same matrix, viewed as an operator on the dual space `ℓ^q_d`.
    pub fn on_dual(&self) -> MatOp {
        Self::from_matrix_unchecked(self.space.dual(), self.entries.clone())
    }

    /// Same matrix with a different descriptor of equal dimension.
    pub fn with_space(&self, space: SpaceDesc) -> Result<MatOp> {
        MatOp::new(space, self.entries.clone())
    }
}

pub fn apply(t: &MatOp, x: &SpaceVec) -> Result<SpaceVec> {
    t.space.ensure_same(&x.space())?;
    Ok(SpaceVec::from_dvector(t.space, &t.entries * x.coords()))
}

/// `T*f` for a functional on the domain of `T`: `(T*f)(x) = f(Tx)`.
pub fn apply_adjoint(t: &MatOp, f: &Functional) -> Result<Functional> {
    t.space.ensure_same(&f.space())?;
    Ok(Functional::from_dvector(t.space, t.entries.transpose() * f.coords()))
}

fn check_weights(weights: &[Complex64], d: usize) -> Result<()> {
    let needed = d.saturating_sub(1);
    if weights.len() < needed {
        return Err(Error::InvalidParameter(format!(
            "need at least {needed} weights for dimension {d}, got {}",
            weights.len()
        )));
    }
    if let Some(index) = weights[..needed].iter().position(|w| *w == ZERO) {
        return Err(Error::ZeroWeight { index });
    }
    Ok(())
}

/// `(Bx)ᵢ = wᵢ xᵢ₊₁` for `i < d-1`, last coordinate zero.
pub fn weighted_backward_shift(space: SpaceDesc, weights: &[Complex64]) -> Result<MatOp> {
    let d = space.dim();
    check_weights(weights, d)?;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d.saturating_sub(1) {
        m[(i, i + 1)] = weights[i];
    }
    MatOp::new(space, m)
}

/// `(Fx)ᵢ = wᵢ₋₁ xᵢ₋₁` for `i ≥ 1`, first coordinate zero.
pub fn forward_shift(space: SpaceDesc, weights: &[Complex64]) -> Result<MatOp> {
    let d = space.dim();
    check_weights(weights, d)?;
    let mut m = DMatrix::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = weights[i - 1];
    }
    MatOp::new(space, m)
}

/// `c·B` with all weights equal to one.
pub fn scaled_backward_shift(space: SpaceDesc, c: Complex64) -> Result<MatOp> {
    weighted_backward_shift(space, &vec![c; space.dim()])
}

pub fn scaled_forward_shift(space: SpaceDesc, c: Complex64) -> Result<MatOp> {
    forward_shift(space, &vec![c; space.dim()])
}

/// Transpose, matching the bilinear pairing: `⟨T*f, x⟩ = ⟨f, Tx⟩`.
///
/// The matrix acts on functional coordinates. The descriptor is left as is;
/// use [`MatOp::on_dual`] to get the operator on `ℓ^q_d` instead.
pub fn adjoint(t: &MatOp) -> MatOp {
    MatOp::from_matrix_unchecked(t.space, t.entries.transpose())
}

/// `Tⁿ` by repeated squaring of the matrix product (no eigendecomposition),
/// which keeps nilpotent shift truncations exactly nilpotent.
pub fn power(t: &MatOp, n: usize) -> MatOp {
    let d = t.dim();
    let mut result = DMatrix::identity(d, d);
    let mut base = t.entries.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    MatOp::from_matrix_unchecked(t.space, result)
}

pub fn left_mult(t: &MatOp, a: &MatOp) -> Result<MatOp> {
    t.compose(a)
}

pub fn right_mult(t: &MatOp, a: &MatOp) -> Result<MatOp> {
    a.compose(t)
}

/// Operator norm `‖T‖_{p→p}`.
///
/// Exact for `p ∈ {1, 2, ∞}`. For other exponents this is the value found by a
/// Hölder power iteration from several starting points, which is a lower
/// estimate of the true norm.
pub fn operator_norm(t: &MatOp) -> f64 {
    let p = t.space.p();
    let m = &t.entries;
    if p == 2.0 {
        spectral_norm(m)
    } else if p == 1.0 {
        m.column_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    } else if p.is_infinite() {
        m.row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    } else {
        holder_power_norm(m, p)
    }
}

pub(crate) fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

fn holder_dual(v: &nalgebra::DVector<Complex64>, p: f64) -> nalgebra::DVector<Complex64> {
    // the unit vector of ℓ^q attaining ⟨·, v⟩ = ‖v‖_p
    let n = lp_norm(v.iter(), p);
    if n == 0.0 {
        return v.clone();
    }
    v.map(|z| {
        let a = z.norm();
        if a == 0.0 {
            ZERO
        } else {
            (z.conj() / a) * (a / n).powf(p - 1.0)
        }
    })
}

fn holder_power_norm(m: &DMatrix<Complex64>, p: f64) -> f64 {
    let d = m.ncols();
    let q = crate::spaces::conjugate(p);
    let mut starts: Vec<nalgebra::DVector<Complex64>> = (0..d)
        .map(|i| {
            let mut v = nalgebra::DVector::zeros(d);
            v[i] = ONE;
            v
        })
        .collect();
    starts.push(nalgebra::DVector::from_element(d, ONE));
    let mut best: f64 = 0.0;
    for mut x in starts {
        let nx = lp_norm(x.iter(), p);
        x /= Complex64::new(nx, 0.0);
        for _ in 0..100 {
            let y = m * &x;
            let ny = lp_norm(y.iter(), p);
            best = best.max(ny);
            if ny == 0.0 {
                break;
            }
            let z = m.transpose() * holder_dual(&y, p);
            let zq = lp_norm(z.iter(), q);
            // stationarity: ⟨z, x⟩ already attains ‖z‖_q
            let zx: f64 = z.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<Complex64>().norm();
            if zq <= zx * (1.0 + 1e-13) {
                break;
            }
            x = holder_dual(&z, q);
        }
    }
    best
}

/// Samples `Tⁿx` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledOrbit {
    base: SpaceVec,
    op: MatOp,
    horizon: usize,
    samples: Vec<SpaceVec>,
}

impl ScaledOrbit {
    pub fn base(&self) -> &SpaceVec {
        &self.base
    }

    pub fn op(&self) -> &MatOp {
        &self.op
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn samples(&self) -> &[SpaceVec] {
        &self.samples
    }

    /// `Tⁿx`, or `None` past the horizon.
    pub fn get(&self, n: usize) -> Option<&SpaceVec> {
        self.samples.get(n)
    }

    /// CSV columns: `n, coord, re, im, norm` where `norm` is `‖Tⁿx‖`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["n", "coord", "re", "im", "norm"]).map_err(io)?;
        for (n, v) in self.samples.iter().enumerate() {
            let nv = v.norm();
            for (i, z) in v.coords().iter().enumerate() {
                w.write_record(&[
                    n.to_string(),
                    i.to_string(),
                    format!("{:e}", z.re),
                    format!("{:e}", z.im),
                    format!("{:e}", nv),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Serde(e.to_string()))?;
        Ok(())
    }
}

/// Orbit by iterated application.
pub fn orbit(t: &MatOp, x: &SpaceVec, horizon: usize) -> Result<ScaledOrbit> {
    t.space.ensure_same(&x.space())?;
    let mut samples = Vec::with_capacity(horizon + 1);
    samples.push(x.clone());
    for n in 0..horizon {
        let next = apply(t, &samples[n])?;
        samples.push(next);
    }
    Ok(ScaledOrbit {
        base: x.clone(),
        op: t.clone(),
        horizon,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn s(d: usize) -> SpaceDesc {
        SpaceDesc::hilbert(d).unwrap()
    }

    fn real(space: SpaceDesc, v: &[f64]) -> SpaceVec {
        SpaceVec::from_real(space, v).unwrap()
    }

    #[test]
    fn apply_examples() {
        let x = real(s(3), &[1.0, -2.0, 0.5]);
        assert_eq!(apply(&MatOp::identity(s(3)), &x).unwrap(), x);
        assert_eq!(apply(&MatOp::zero(s(3)), &x).unwrap(), SpaceVec::zeros(s(3)));
        let b2 = scaled_backward_shift(s(3), c(2.0)).unwrap();
        let e1 = SpaceVec::basis(s(3), 1).unwrap();
        assert_eq!(apply(&b2, &e1).unwrap(), real(s(3), &[2.0, 0.0, 0.0]));
        let wrong = SpaceVec::zeros(s(2));
        assert!(apply(&b2, &wrong).is_err());
    }

    #[test]
    fn backward_shift_examples() {
        let b = scaled_backward_shift(s(3), c(1.0)).unwrap();
        assert_eq!(
            apply(&b, &real(s(3), &[1.0, 2.0, 3.0])).unwrap(),
            real(s(3), &[2.0, 3.0, 0.0])
        );
        let b2 = scaled_backward_shift(s(3), c(2.0)).unwrap();
        assert_eq!(
            apply(&b2, &SpaceVec::basis(s(3), 2).unwrap()).unwrap(),
            real(s(3), &[0.0, 2.0, 0.0])
        );
        let w = weighted_backward_shift(s(3), &[c(1.0), c(2.0)]).unwrap();
        assert_eq!(
            apply(&w, &real(s(3), &[0.0, 0.0, 1.0])).unwrap(),
            real(s(3), &[0.0, 2.0, 0.0])
        );
        assert_eq!(
            weighted_backward_shift(s(3), &[c(1.0), c(0.0)]),
            Err(Error::ZeroWeight { index: 1 })
        );
        assert!(weighted_backward_shift(s(3), &[c(1.0)]).is_err());
    }

    #[test]
    fn forward_shift_examples() {
        let f = scaled_forward_shift(s(3), c(1.0)).unwrap();
        let e0 = SpaceVec::basis(s(3), 0).unwrap();
        assert_eq!(apply(&f, &e0).unwrap(), SpaceVec::basis(s(3), 1).unwrap());
        let half = scaled_forward_shift(s(3), c(0.5)).unwrap();
        assert_eq!(apply(&half, &e0).unwrap(), real(s(3), &[0.0, 0.5, 0.0]));
        assert_eq!(
            forward_shift(s(3), &[c(0.0), c(1.0)]),
            Err(Error::ZeroWeight { index: 0 })
        );

        // B F = I on span(e0..e_{d-2}) with reciprocal weights
        let w = [c(2.0), Complex64::new(0.0, 3.0), c(-0.25)];
        let inv: Vec<Complex64> = w.iter().map(|z| z.inv()).collect();
        let d = s(4);
        let bf = weighted_backward_shift(d, &w)
            .unwrap()
            .compose(&forward_shift(d, &inv).unwrap())
            .unwrap();
        for i in 0..3 {
            let e = SpaceVec::basis(d, i).unwrap();
            let got = apply(&bf, &e).unwrap();
            assert!(got.sub(&e).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn adjoint_examples() {
        let b2 = scaled_backward_shift(s(4), c(2.0)).unwrap();
        assert_eq!(adjoint(&b2), scaled_forward_shift(s(4), c(2.0)).unwrap());
        assert_eq!(adjoint(&MatOp::identity(s(4))), MatOp::identity(s(4)));
        assert_eq!(adjoint(&adjoint(&b2)), b2);
    }

    #[test]
    fn orbit_examples() {
        let b2 = scaled_backward_shift(s(3), c(2.0)).unwrap();
        let e2 = SpaceVec::basis(s(3), 2).unwrap();
        let orb = orbit(&b2, &e2, 4).unwrap();
        let want = [
            real(s(3), &[0.0, 0.0, 1.0]),
            real(s(3), &[0.0, 2.0, 0.0]),
            real(s(3), &[4.0, 0.0, 0.0]),
            SpaceVec::zeros(s(3)),
            SpaceVec::zeros(s(3)),
        ];
        assert_eq!(orb.samples(), &want);

        let x = real(s(3), &[1.0, 2.0, 3.0]);
        let id = orbit(&MatOp::identity(s(3)), &x, 3).unwrap();
        assert!(id.samples().iter().all(|v| *v == x));

        let zero = orbit(&MatOp::zero(s(3)), &x, 2).unwrap();
        assert_eq!(zero.get(0), Some(&x));
        assert_eq!(zero.get(1), Some(&SpaceVec::zeros(s(3))));
        assert_eq!(zero.get(3), None);
    }

    #[test]
    fn power_matches_iteration() {
        let b2 = scaled_backward_shift(s(5), c(2.0)).unwrap();
        let mut it = MatOp::identity(s(5));
        for n in 0..7 {
            assert_eq!(power(&b2, n), it);
            it = b2.compose(&it).unwrap();
        }
        // nilpotency is exact
        assert!(power(&b2, 5).entries().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn multiplication_examples() {
        let t = scaled_backward_shift(s(3), c(2.0)).unwrap();
        let i = MatOp::identity(s(3));
        assert_eq!(left_mult(&t, &i).unwrap(), t);
        assert_eq!(right_mult(&t, &i).unwrap(), t);
        let mut e00 = DMatrix::zeros(3, 3);
        e00[(0, 0)] = ONE;
        let a = MatOp::new(s(3), e00).unwrap();
        assert_eq!(left_mult(&t, &a).unwrap(), MatOp::zero(s(3)));
    }

    #[test]
    fn operator_norms() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(-2.0), c(3.0), c(4.0)]);
        let t1 = MatOp::new(SpaceDesc::new(1.0, 2).unwrap(), m.clone()).unwrap();
        assert_eq!(operator_norm(&t1), 6.0);
        let ti = MatOp::new(SpaceDesc::new(f64::INFINITY, 2).unwrap(), m.clone()).unwrap();
        assert_eq!(operator_norm(&ti), 7.0);
        let diag = MatOp::diagonal(s(2), &[c(3.0), c(-4.0)]).unwrap();
        assert!((operator_norm(&diag) - 4.0).abs() < 1e-12);
        // diagonal operators have norm max|d_i| on every ℓᵖ
        let d3 = MatOp::diagonal(SpaceDesc::new(3.0, 2).unwrap(), &[c(3.0), c(-4.0)]).unwrap();
        assert!((operator_norm(&d3) - 4.0).abs() < 1e-12);
        // ‖2B‖ = 2 on any ℓᵖ
        let b = scaled_backward_shift(SpaceDesc::new(3.0, 5).unwrap(), c(2.0)).unwrap();
        assert!((operator_norm(&b) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_json() {
        let m = matrix_from_json("[[[1,0],[0,1]],[[2,0],[0,0]]]").unwrap();
        assert_eq!(m[(0, 1)], Complex64::i());
        assert_eq!(m[(1, 0)], c(2.0));
        assert!(matrix_from_json("[[[1,0],[0,1]]]").is_err());
        assert!(matrix_from_json("[[[1,0]],[[2,0],[0,0]]]").is_err());
        assert!(matrix_from_json("[]").is_err());

        let op = scaled_backward_shift(s(2), c(2.0)).unwrap();
        let js = serde_json::to_string(&op).unwrap();
        assert_eq!(
            js,
            r#"{"space":{"p":2.0,"dim":2},"entries":[[[0.0,0.0],[2.0,0.0]],[[0.0,0.0],[0.0,0.0]]]}"#
        );
        assert_eq!(serde_json::from_str::<MatOp>(&js).unwrap(), op);
    }

    #[test]
    fn orbit_csv_columns() {
        let b2 = scaled_backward_shift(s(2), c(2.0)).unwrap();
        let orb = orbit(&b2, &SpaceVec::basis(s(2), 1).unwrap(), 1).unwrap();
        let mut buf = Vec::new();
        orb.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,coord,re,im,norm");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[3], "1,0,2e0,0e0,2e0");
    }
}
