//! The measure family on the lp-ball mixing the cone measure with an
//! absolutely continuous part through a mixing law W, its exact sampler, the
//! closed-form radial law, and the mixture density h(r).
//!
//! Sampling uses X = Z / (||Z||_p^p + W)^(1/p). The canonical pairing draws Z
//! under the unit-density convention with W unscaled; only this pairing makes
//! ||X||_p^p a Beta(n/p, alpha) variable under Gamma(alpha, 1) mixing (and
//! uniform on the ball for alpha = 1). Drawing Z under the paper-density
//! convention with the same unscaled W is algebraically the same as replacing
//! W by W/p; it is selectable for comparison and the radial law test tells
//! the two apart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::rng::{Provenance, RngStream};
use crate::sampling::{PExponent, PGaussSampler, ScaleConvention, WSampler, WSpec};
use crate::special::{lgamma, reg_inc_beta};

/// Full description of a ball measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMeasureSpec {
    pub n: u32,
    pub p: PExponent,
    pub w: WSpec,
    pub conv: ScaleConvention,
}

impl BallMeasureSpec {
    pub fn new(n: u32, p: PExponent, w: WSpec, conv: ScaleConvention) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid_argument("ambient dimension n must be >= 1"));
        }
        if p.is_infinite() && w != WSpec::Exponential1 {
            return Err(Error::invalid_argument(
                "p = infinity only supports the uniform cube (exponential1 mixing semantics)",
            ));
        }
        Ok(BallMeasureSpec { n, p, w, conv })
    }

    /// The canonical convention for this family.
    pub fn canonical(n: u32, p: PExponent, w: WSpec) -> Result<Self> {
        BallMeasureSpec::new(n, p, w, ScaleConvention::UnitDensity)
    }
}

/// A batch of points in the ball, stored row-major (count x n).
#[derive(Debug, Clone)]
pub struct BallPointBatch {
    pub spec: BallMeasureSpec,
    pub count: usize,
    points: Vec<f64>,
    pub provenance: Provenance,
}

impl BallPointBatch {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.spec.n as usize;
        &self.points[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        let n = self.spec.n as usize;
        self.points.chunks_exact(n)
    }

    /// lp-norm of row i.
    pub fn pnorm(&self, i: usize) -> f64 {
        pnorm(self.row(i), self.spec.p)
    }
}

pub(crate) fn pnorm(x: &[f64], p: PExponent) -> f64 {
    match p {
        PExponent::Infinity => x.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        PExponent::Finite(p) => {
            let mut acc = KahanSum::new();
            for &v in x {
                acc.add(v.abs().powf(p));
            }
            acc.value().powf(1.0 / p)
        }
    }
}

/// `count` i.i.d. points from the measure described by `spec`.
pub fn sample_ball_point(
    spec: &BallMeasureSpec,
    count: usize,
    rng: &mut RngStream,
) -> Result<BallPointBatch> {
    if count == 0 {
        return Err(Error::invalid_argument("count must be >= 1"));
    }
    let n = spec.n as usize;
    let provenance = rng.provenance();
    let mut points = vec![0.0f64; count * n];

    match spec.p {
        PExponent::Infinity => {
            let sampler = PGaussSampler::new(PExponent::Infinity, spec.conv);
            for v in points.iter_mut() {
                *v = sampler.draw(rng);
            }
        }
        PExponent::Finite(pv) => {
            let zs = PGaussSampler::new(spec.p, spec.conv);
            let ws = WSampler::new(spec.w);
            for row in points.chunks_exact_mut(n) {
                let mut sum_p = KahanSum::new();
                for z in row.iter_mut() {
                    *z = zs.draw(rng);
                    sum_p.add(z.abs().powf(pv));
                }
                let w = ws.draw(rng);
                let denom = (sum_p.value() + w).powf(1.0 / pv);
                for z in row.iter_mut() {
                    *z /= denom;
                }
            }
        }
    }
    Ok(BallPointBatch { spec: *spec, count, points, provenance })
}

/// P(||X||_p <= r) for the beta-type measure with Gamma(alpha, 1) mixing:
/// the regularized incomplete beta I_{r^p}(n/p, alpha). alpha = 1 recovers
/// the uniform radial law r^n.
pub fn radial_pnorm_cdf(n: u32, p: f64, alpha: f64, r: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid_argument("dimension n must be >= 1"));
    }
    if !p.is_finite() || p < 1.0 {
        return Err(Error::invalid_argument(format!("radial law needs finite p >= 1, got {p}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid_argument(format!("alpha must be positive, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid_argument(format!("radius r must lie in [0, 1], got {r}")));
    }
    Ok(reg_inc_beta(n as f64 / p, alpha, r.powf(p)))
}

/// The density weight h(r) of the absolutely continuous part:
/// h(r) = (1 - r^p)^(-1-n/p) / Gamma(1+n/p) * int s^(n/p) e^(-r^p s/(1-r^p)) W(ds).
///
/// Exponential and gamma mixing have closed forms by the gamma integral;
/// Dirac mixing degenerates to 0.
pub fn mixture_density_h(r: f64, n: u32, p: f64, w: &WSpec) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid_argument("dimension n must be >= 1"));
    }
    if !p.is_finite() || p < 1.0 {
        return Err(Error::invalid_argument(format!("h(r) needs finite p >= 1, got {p}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::invalid_argument(format!(
            "h(r) is defined on [0, 1), got r = {r} (the r -> 1 pole is analytic territory)"
        )));
    }
    let a = n as f64 / p;
    let rp = r.powf(p);
    match w {
        WSpec::Dirac0 => Ok(0.0),
        // int s^a e^{-cs} e^{-s} ds = Gamma(a+1) / (c+1)^(a+1) with
        // c = r^p/(1-r^p), and (1-r^p)(c+1) = 1, so h == 1.
        WSpec::Exponential1 => Ok(1.0),
        WSpec::Gamma(alpha) => {
            // Gamma(a+alpha) / (Gamma(a+1) Gamma(alpha)) * (1-r^p)^(alpha-1)
            let ln = lgamma(a + alpha) - lgamma(a + 1.0) - lgamma(*alpha)
                + (alpha - 1.0) * (1.0 - rp).ln();
            Ok(ln.exp())
        }
    }
}
