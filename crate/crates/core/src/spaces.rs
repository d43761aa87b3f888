//! Truncated sequence spaces `ℓᵖ_d` over the complex field, their duals,
//! the bilinear dual pairing, rank-one operators and dual bases.
//!
//! A [`Functional`] carries the descriptor of the space it acts on; its
//! coordinates are measured in the conjugate exponent `q`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent and dimension of a truncated `ℓᵖ` space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceDesc {
    p: f64,
    dim: usize,
}

impl SpaceDesc {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { p, dim })
    }

    /// `ℓ²_d`.
    pub fn hilbert(dim: usize) -> Result<Self> {
        Self::new(2.0, dim)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0
    }

    /// Exponent `q` with `1/p + 1/q = 1`.
    pub fn conjugate_exponent(&self) -> f64 {
        conjugate(self.p)
    }

    /// Descriptor of the dual space `ℓ^q_d`.
    pub fn dual(&self) -> SpaceDesc {
        SpaceDesc {
            p: self.conjugate_exponent(),
            dim: self.dim,
        }
    }

    pub fn with_dim(&self, dim: usize) -> Result<SpaceDesc> {
        SpaceDesc::new(self.p, dim)
    }

    pub(crate) fn ensure_same(&self, other: &SpaceDesc) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.p != other.p {
            return Err(Error::SpaceMismatch(format!(
                "p = {} vs p = {}",
                self.p, other.p
            )));
        }
        Ok(())
    }
}

pub(crate) fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `ℓᵖ` norm of a coordinate slice.
pub fn lp_norm<'a, I>(coords: I, p: f64) -> f64
where
    I: IntoIterator<Item = &'a Complex64>,
{
    let it = coords.into_iter().map(|z| z.norm());
    if p.is_infinite() {
        it.fold(0.0, f64::max)
    } else if p == 1.0 {
        it.sum()
    } else if p == 2.0 {
        // hypot-style scaling keeps tiny and huge entries finite
        let v: Vec<f64> = it.collect();
        let scale = v.iter().cloned().fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        scale * v.iter().map(|a| (a / scale).powi(2)).sum::<f64>().sqrt()
    } else {
        let v: Vec<f64> = it.collect();
        let scale = v.iter().cloned().fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        scale * v.iter().map(|a| (a / scale).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl Serialize for SpaceDesc {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Header {
            p: PValue,
            dim: usize,
        }
        Header {
            p: PValue(self.p),
            dim: self.dim,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpaceDesc {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Header {
            p: PValue,
            dim: usize,
        }
        let h = Header::deserialize(deserializer)?;
        SpaceDesc::new(h.p.0, h.dim).map_err(de::Error::custom)
    }
}

/// JSON has no infinity; `p = ∞` is written as the string `"inf"`.
struct PValue(f64);

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(p) => Ok(PValue(p)),
            Raw::Str(s) => parse_exponent(&s).map(PValue).map_err(de::Error::custom),
        }
    }
}

/// Parses `1`, `2.5`, `3/2`, `inf`, `infinity` or `∞`.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let t = s.trim();
    let p = match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        other => {
            if let Some((num, den)) = other.split_once('/') {
                let n: f64 = num
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}")))?;
                let d: f64 = den
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}")))?;
                if d == 0.0 {
                    return Err(Error::InvalidParameter(format!("bad exponent {s:?}")));
                }
                n / d
            } else {
                other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad exponent {s:?}")))?
            }
        }
    };
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("exponent must be >= 1, got {s:?}")));
    }
    Ok(p)
}

/// Element of a truncated `ℓᵖ_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVec", into = "RawVec")]
pub struct SpaceVec {
    space: SpaceDesc,
    coords: DVector<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawVec {
    space: SpaceDesc,
    coords: Vec<[f64; 2]>,
}

impl TryFrom<RawVec> for SpaceVec {
    type Error = Error;

    fn try_from(raw: RawVec) -> Result<Self> {
        let coords = raw
            .coords
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect::<Vec<_>>();
        SpaceVec::new(raw.space, coords)
    }
}

impl From<SpaceVec> for RawVec {
    fn from(v: SpaceVec) -> Self {
        RawVec {
            space: v.space,
            coords: v.coords.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl SpaceVec {
    pub fn new(space: SpaceDesc, coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() != space.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim,
                found: coords.len(),
            });
        }
        Ok(Self {
            space,
            coords: DVector::from_vec(coords),
        })
    }

    pub fn from_real(space: SpaceDesc, coords: &[f64]) -> Result<Self> {
        Self::new(space, coords.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub(crate) fn from_dvector(space: SpaceDesc, coords: DVector<Complex64>) -> Self {
        debug_assert_eq!(coords.len(), space.dim);
        Self { space, coords }
    }

    pub fn zeros(space: SpaceDesc) -> Self {
        Self {
            space,
            coords: DVector::zeros(space.dim),
        }
    }

    /// Canonical basis vector `e_i`.
    pub fn basis(space: SpaceDesc, i: usize) -> Result<Self> {
        if i >= space.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim,
                found: i + 1,
            });
        }
        let mut v = Self::zeros(space);
        v.coords[i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn space(&self) -> SpaceDesc {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn coords(&self) -> &DVector<Complex64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<Complex64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    /// Euclidean norm irrespective of the space exponent.
    pub fn norm2(&self) -> f64 {
        lp_norm(self.coords.iter(), 2.0)
    }

    pub fn scale(&self, alpha: Complex64) -> SpaceVec {
        SpaceVec {
            space: self.space,
            coords: &self.coords * alpha,
        }
    }

    pub fn add(&self, other: &SpaceVec) -> Result<SpaceVec> {
        self.space.ensure_same(&other.space)?;
        Ok(SpaceVec {
            space: self.space,
            coords: &self.coords + &other.coords,
        })
    }

    pub fn sub(&self, other: &SpaceVec) -> Result<SpaceVec> {
        self.space.ensure_same(&other.space)?;
        Ok(SpaceVec {
            space: self.space,
            coords: &self.coords - &other.coords,
        })
    }

    /// One past the index of the last nonzero coordinate (0 for the zero vector).
    pub fn support_len(&self) -> usize {
        self.coords
            .iter()
            .rposition(|z| *z != Complex64::new(0.0, 0.0))
            .map_or(0, |i| i + 1)
    }

    /// Reads the same coordinates as a functional on the predual `space`.
    ///
    /// Used when criterion data lives on `X*` and is expressed as vectors of `ℓ^q`.
    pub fn into_functional(self, predual: SpaceDesc) -> Result<Functional> {
        if predual.dual().p != self.space.p || predual.dim != self.space.dim {
            return Err(Error::SpaceMismatch(format!(
                "vector in l^{} cannot act on l^{}",
                self.space.p, predual.p
            )));
        }
        Ok(Functional {
            space: predual,
            coords: self.coords,
        })
    }
}

/// Element of the dual of `ℓᵖ_d`, stored with the descriptor of the space it acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVec", into = "RawVec")]
pub struct Functional {
    space: SpaceDesc,
    coords: DVector<Complex64>,
}

impl TryFrom<RawVec> for Functional {
    type Error = Error;

    fn try_from(raw: RawVec) -> Result<Self> {
        let coords = raw
            .coords
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect::<Vec<_>>();
        Functional::new(raw.space, coords)
    }
}

impl From<Functional> for RawVec {
    fn from(v: Functional) -> Self {
        RawVec {
            space: v.space,
            coords: v.coords.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl Functional {
    pub fn new(space: SpaceDesc, coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() != space.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim,
                found: coords.len(),
            });
        }
        Ok(Self {
            space,
            coords: DVector::from_vec(coords),
        })
    }

    pub fn from_real(space: SpaceDesc, coords: &[f64]) -> Result<Self> {
        Self::new(space, coords.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub(crate) fn from_dvector(space: SpaceDesc, coords: DVector<Complex64>) -> Self {
        debug_assert_eq!(coords.len(), space.dim);
        Self { space, coords }
    }

    pub fn zeros(space: SpaceDesc) -> Self {
        Self {
            space,
            coords: DVector::zeros(space.dim),
        }
    }

    /// Coordinate functional `e_i*`.
    pub fn basis(space: SpaceDesc, i: usize) -> Result<Self> {
        let v = SpaceVec::basis(space, i)?;
        Ok(Self {
            space,
            coords: v.coords,
        })
    }

    /// Descriptor of the space this functional acts on.
    pub fn space(&self) -> SpaceDesc {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn coords(&self) -> &DVector<Complex64> {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        dual_norm(self)
    }

    pub fn norm2(&self) -> f64 {
        lp_norm(self.coords.iter(), 2.0)
    }

    pub fn scale(&self, alpha: Complex64) -> Functional {
        Functional {
            space: self.space,
            coords: &self.coords * alpha,
        }
    }

    pub fn sub(&self, other: &Functional) -> Result<Functional> {
        self.space.ensure_same(&other.space)?;
        Ok(Functional {
            space: self.space,
            coords: &self.coords - &other.coords,
        })
    }

    /// The same coordinates as a vector of `ℓ^q_d`.
    pub fn as_dual_vec(&self) -> SpaceVec {
        SpaceVec {
            space: self.space.dual(),
            coords: self.coords.clone(),
        }
    }
}

/// `x ⊗ x*`, acting by `z ↦ ⟨x*, z⟩ x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOne {
    left: SpaceVec,
    right: Functional,
}

impl RankOne {
    pub fn new(left: SpaceVec, right: Functional) -> Result<Self> {
        left.space.ensure_same(&right.space)?;
        Ok(Self { left, right })
    }

    pub fn left(&self) -> &SpaceVec {
        &self.left
    }

    pub fn right(&self) -> &Functional {
        &self.right
    }

    /// Dense matrix `x x*ᵀ`.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        &self.left.coords * self.right.coords.transpose()
    }
}

pub fn norm(v: &SpaceVec) -> f64 {
    lp_norm(v.coords.iter(), v.space.p)
}

pub fn dual_norm(f: &Functional) -> f64 {
    lp_norm(f.coords.iter(), f.space.conjugate_exponent())
}

/// Bilinear pairing `Σ fᵢ zᵢ`; no conjugation is applied.
pub fn pair(f: &Functional, z: &SpaceVec) -> Result<Complex64> {
    f.space.ensure_same(&z.space)?;
    Ok(f.coords.iter().zip(z.coords.iter()).map(|(a, b)| a * b).sum())
}

pub fn rank_one_apply(r: &RankOne, z: &SpaceVec) -> Result<SpaceVec> {
    let c = pair(&r.right, z)?;
    Ok(r.left.scale(c))
}

/// Functionals `φ₁..φ_m` with `⟨φᵢ, xⱼ⟩ = δᵢⱼ`, taking the minimum Euclidean
/// norm solution (rows of the pseudoinverse of `[x₁ … x_m]`).
pub fn dual_basis(xs: &[SpaceVec]) -> Result<Vec<Functional>> {
    let Some(first) = xs.first() else {
        return Ok(Vec::new());
    };
    let space = first.space;
    for x in xs {
        space.ensure_same(&x.space)?;
    }
    let d = space.dim;
    let m = xs.len();
    if m > d {
        return Err(Error::LinearDependence { rank: d, count: m });
    }
    let cols = DMatrix::from_fn(d, m, |i, j| xs[j].coords[i]);
    let pinv = pseudo_inverse_full_rank(&cols)?;
    Ok((0..m)
        .map(|i| Functional::from_dvector(space, pinv.row(i).transpose()))
        .collect())
}

/// Pseudoinverse of a `d × m` matrix (m ≤ d) that must have full column rank.
pub(crate) fn pseudo_inverse_full_rank(cols: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let (d, m) = cols.shape();
    let svd = cols.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = (d.max(m) as f64) * f64::EPSILON * smax.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank < m {
        return Err(Error::LinearDependence { rank, count: m });
    }
    svd.pseudo_inverse(cutoff)
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}
