//! Scaled-orbit density diagnostics.
//!
//! Nothing here certifies density: a truncation has finitely many orbit
//! lines. The reports are for looking at, and the tests only rely on their
//! monotonicity and scaling invariance.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{apply, MatOp};
use crate::sampling::{stream_rng, unit_sphere};
use crate::spaces::{lp_norm, SpaceVec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn distance(alpha: Complex64, u: &DVector<Complex64>, v: &DVector<Complex64>, p: f64) -> f64 {
    lp_norm(u.iter().zip(v.iter()).map(|(a, b)| alpha * a - b).collect::<Vec<_>>().iter(), p)
}

/// `α` minimizing `‖αu − v‖` and the minimal distance.
///
/// On `ℓ²` this is the orthogonal projection `α = ⟨v, u⟩ / ‖u‖²` with the
/// inner product conjugate-linear in `u`. For other `p` the convex problem in
/// `α` is solved by nested golden-section searches.
/// `u = 0` gives `(0, ‖v‖)`.
pub fn best_scale(target: &SpaceVec, u: &SpaceVec) -> Result<(Complex64, f64)> {
    target.space().ensure_same(&u.space())?;
    let p = target.space().p();
    let (v, u) = (target.coords(), u.coords());
    let uu = u.norm_squared();
    if uu == 0.0 {
        return Ok((ZERO, target.norm()));
    }
    let alpha0 = u.iter().zip(v.iter()).map(|(a, b)| b * a.conj()).sum::<Complex64>() / uu;
    if p == 2.0 {
        return Ok((alpha0, distance(alpha0, u, v, p)));
    }

    // |α*|·‖u‖ ≤ ‖α*u − v‖ + ‖v‖ ≤ 2‖v‖ brackets the minimizer; a partial
    // minimum of a convex function is convex, so nested golden sections work
    // even where the norm is not smooth
    let r = 2.0 * target.norm() / lp_norm(u.iter(), p);
    let tol = 1e-14 * r;
    let along_im = |re: f64| golden_min(-r, r, tol, |im| distance(Complex64::new(re, im), u, v, p));
    let (re, _) = golden_min(-r, r, tol, |re| along_im(re).1);
    let (im, best) = along_im(re);
    Ok((Complex64::new(re, im), best))
}

/// Minimizer and minimum of a convex `f` on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Best approximation of `target` from `ℂ·{Tⁿx : n ≤ N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitHit {
    pub n: usize,
    pub alpha: Complex64,
    pub distance: f64,
}

/// Minimizes [`best_scale`] over `n = 0..=N`; ties go to the smallest `n`.
pub fn scaled_orbit_distance(t: &MatOp, x: &SpaceVec, target: &SpaceVec, horizon: usize) -> Result<OrbitHit> {
    t.space().ensure_same(&x.space())?;
    t.space().ensure_same(&target.space())?;
    let mut u = x.clone();
    let (alpha, distance) = best_scale(target, &u)?;
    let mut best = OrbitHit { n: 0, alpha, distance };
    for n in 1..=horizon {
        u = apply(t, &u)?;
        let (alpha, distance) = best_scale(target, &u)?;
        if distance < best.distance {
            best = OrbitHit { n, alpha, distance };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub targets: Vec<SpaceVec>,
    pub hits: Vec<OrbitHit>,
    pub coverage: f64,
    pub eps: f64,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct Summary {
    coverage: f64,
    eps: f64,
    #[serde(rename = "N")]
    horizon: usize,
    seed: u64,
}

impl DensityReport {
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&Summary {
            coverage: self.coverage,
            eps: self.eps,
            horizon: self.horizon,
            seed: self.seed,
        })
        .expect("plain struct serializes")
    }

    /// Columns `target_index, best_n, alpha_re, alpha_im, distance`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Serde(e.to_string());
        out.write_record(["target_index", "best_n", "alpha_re", "alpha_im", "distance"])
            .map_err(io)?;
        for (i, h) in self.hits.iter().enumerate() {
            out.write_record([
                i.to_string(),
                h.n.to_string(),
                format!("{:e}", h.alpha.re),
                format!("{:e}", h.alpha.im),
                format!("{:e}", h.distance),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Samples `net_size` seeded targets on the unit sphere of the space and
/// reports the fraction within `eps` of `ℂ·{Tⁿx : n ≤ N}`.
pub fn density_report(t: &MatOp, x: &SpaceVec, net_size: usize, eps: f64, horizon: usize, seed: u64) -> Result<DensityReport> {
    if net_size == 0 {
        return Err(Error::InvalidParameter("net size must be >= 1".into()));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let space = t.space();
    space.ensure_same(&x.space())?;
    // one stream per target keeps the net independent of thread scheduling
    let targets: Vec<SpaceVec> = (0..net_size as u64)
        .map(|i| {
            let g = SpaceVec::from_dvector(space, unit_sphere(&mut stream_rng(seed, i), space.dim()));
            let n = g.norm();
            g.scale(Complex64::new(1.0 / n, 0.0))
        })
        .collect();
    let hits = targets
        .par_iter()
        .map(|v| scaled_orbit_distance(t, x, v, horizon))
        .collect::<Result<Vec<_>>>()?;
    let covered = hits.iter().filter(|h| h.distance < eps).count();
    Ok(DensityReport {
        coverage: covered as f64 / net_size as f64,
        targets,
        hits,
        eps,
        horizon,
        seed,
    })
}
