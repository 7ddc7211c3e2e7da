//! Large-deviation machinery: the two-variable cumulant of (Z^2, |Z|^p), its
//! Legendre-Fenchel transform, the constrained rate on the norm scale, the
//! explicit speed-n^(p/2) rate, the mixing-law rates, and empirical tail-rate
//! estimation at desk scale.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuation::KRule;
use crate::moments::{ldp_m_constant, MExponentVariant};
use crate::numeric::{golden_section_min, integrate};
use crate::parallel::parallel_fold;
use crate::projection::{ProjectionSampler, ProjectionSpec};
use crate::sampling::{PExponent, WSpec};
use crate::special::lgamma;

/// A nonnegative extended real; +infinity is a first-class value so that
/// downstream min/comparison logic never relies on large sentinels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite(), "ExtReal::finite needs a finite value, got {v}");
        ExtReal::Finite(v)
    }

    /// Map f64 infinity to PosInf; NaN is a caller bug.
    pub fn from_f64(v: f64) -> Self {
        assert!(!v.is_nan(), "ExtReal cannot hold NaN");
        if v.is_infinite() {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(v) => *v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn min(self, other: Self) -> Self {
        if self.le(&other) {
            self
        } else {
            other
        }
    }

    pub fn le(&self, other: &Self) -> bool {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a <= b,
            (ExtReal::Finite(_), ExtReal::PosInf) => true,
            (ExtReal::PosInf, ExtReal::Finite(_)) => false,
            (ExtReal::PosInf, ExtReal::PosInf) => true,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal::from_f64(v)),
            Raw::Str(s) if s == "inf" => Ok(ExtReal::PosInf),
            Raw::Str(s) => Err(DeError::custom(format!("cannot parse extended real from {s:?}"))),
        }
    }
}

/// Integrability region of the cumulant: t2 < 1/p always; for p = 2 the
/// quadratic terms combine so t1 + t2 < 1/2 is needed; for p < 2 any t1 > 0
/// blows up the integral.
fn cumulant_domain_ok(p: f64, t1: f64, t2: f64) -> bool {
    if t2 >= 1.0 / p {
        return false;
    }
    if p == 2.0 {
        return t1 + t2 < 0.5;
    }
    if p < 2.0 {
        return t1 <= 0.0;
    }
    true
}

/// The two-variable cumulant log E exp(t1 Z^2 + t2 |Z|^p) for a paper-density
/// p-generalized Gaussian Z, by adaptive quadrature of
/// exp(t1 x^2 - (1/p - t2) x^p) against the normalizer. Returns PosInf
/// outside the integrability region.
pub fn cumulant_ip(p: f64, t1: f64, t2: f64) -> Result<ExtReal> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::invalid_argument(format!("cumulant needs finite p >= 1, got {p}")));
    }
    if t1.is_nan() || t2.is_nan() {
        return Err(Error::invalid_argument("cumulant arguments must not be NaN"));
    }
    if !cumulant_domain_ok(p, t1, t2) {
        return Ok(ExtReal::PosInf);
    }
    let beta = 1.0 / p - t2;
    let phi = |x: f64| t1 * x * x - beta * x.powf(p);

    // phi' = x (2 t1 - p beta x^(p-2)): an interior peak exists only for
    // t1 > 0 with p > 2 (t1 > 0 is outside the domain for p < 2, and for
    // p = 2 the joint coefficient t1 + t2 - 1/2 is negative).
    let x_peak = if t1 > 0.0 && p > 2.0 {
        (2.0 * t1 / (p * beta)).powf(1.0 / (p - 2.0))
    } else {
        0.0
    };
    let phi_max = phi(x_peak).max(0.0);

    // expand the cutoff until the integrand is dwarfed by its peak
    let mut cutoff = (2.0 * x_peak).max(1.0);
    for _ in 0..200 {
        if phi(cutoff) - phi_max <= -45.0 {
            break;
        }
        cutoff *= 2.0;
    }

    // Integrate band-by-band at fixed drops of phi below its peak so that a
    // peak far narrower than the cutoff can never slip between quadrature
    // nodes.
    let drops = [2.0, 9.0, 25.0, 45.0];
    let mut points = vec![0.0f64];
    let crossing = |lo: f64, hi: f64, level: f64, rising: bool| -> f64 {
        // bisect phi(x) - phi_max = -level on a monotone stretch
        let (mut a, mut b) = (lo, hi);
        for _ in 0..48 {
            let m = 0.5 * (a + b);
            let below = phi(m) - phi_max < -level;
            if below == rising {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    if x_peak > 0.0 && phi(0.0) - phi_max < -2.0 {
        for &d in drops.iter().rev() {
            if phi(0.0) - phi_max < -d {
                points.push(crossing(0.0, x_peak, d, true));
            }
        }
        points.push(x_peak);
    }
    for &d in drops.iter() {
        if phi(cutoff) - phi_max < -d {
            points.push(crossing(x_peak, cutoff, d, false));
        }
    }
    points.push(cutoff);
    points.dedup_by(|a, b| a == b);

    let mut integral = 0.0;
    for pair in points.windows(2) {
        integral += integrate(|x| (phi(x) - phi_max).exp(), pair[0], pair[1], 1e-11, 1e-300);
    }
    // log(2 c_p) with c_p the density normalizer 1/(2 p^(1/p) Gamma(1+1/p))
    let log_norm = -(1.0 / p) * p.ln() - lgamma(1.0 + 1.0 / p);
    Ok(ExtReal::finite(log_norm + phi_max + integral.ln()))
}

/// Options for the conjugate ascent.
#[derive(Debug, Clone, Copy)]
pub struct FenchelOptions {
    /// Starting point; must have a finite objective.
    pub start: (f64, f64),
    /// Iterates escaping this radius with a still-increasing objective are
    /// declared divergent (the sup is +infinity).
    pub escape_radius: f64,
    /// Stop once accepted improvements stay below this.
    pub obj_tol: f64,
    /// Relative finite-difference step for gradients; raise it when f itself
    /// is evaluated with noise (for example a nested conjugate).
    pub fd_step: f64,
    pub max_iter: usize,
}

impl Default for FenchelOptions {
    fn default() -> Self {
        FenchelOptions {
            start: (0.0, 0.0),
            escape_radius: 1e3,
            obj_tol: 1e-9,
            fd_step: 1e-6,
            max_iter: 40,
        }
    }
}

/// Legendre-Fenchel transform f*(x) = sup_t <t, x> - f(t) of a convex f on
/// R^2, by damped gradient ascent (finite-difference gradients, golden-section
/// line maximization along each ascent direction). `f` signals +infinity by
/// returning f64::INFINITY; the objective treats such points as -infinity, so
/// line searches stop at the domain wall and boundary suprema are approached
/// rather than overshot.
///
/// The ascent only ever accepts improving steps, so an iterate crossing the
/// escape radius has ridden a direction of unbounded increase: the transform
/// is +infinity there.
pub fn fenchel_conjugate<F>(f: F, x: (f64, f64), opts: &FenchelOptions) -> Result<ExtReal>
where
    F: Fn(f64, f64) -> f64,
{
    if x.0.is_nan() || x.1.is_nan() {
        return Err(Error::invalid_argument("conjugate point must not be NaN"));
    }
    let obj = |t: (f64, f64)| -> f64 {
        let fv = f(t.0, t.1);
        if fv.is_infinite() || fv.is_nan() {
            f64::NEG_INFINITY
        } else {
            t.0 * x.0 + t.1 * x.1 - fv
        }
    };
    let mut t = opts.start;
    let mut best = obj(t);
    if best.is_infinite() {
        return Err(Error::Precondition(format!(
            "fenchel ascent must start where f is finite; f({}, {}) is not",
            opts.start.0, opts.start.1
        )));
    }
    let mut stall = 0u32;
    let mut round_gain = 0.0f64;
    for _ in 0..opts.max_iter {
        let h0 = opts.fd_step * (1.0 + t.0.abs());
        let h1 = opts.fd_step * (1.0 + t.1.abs());
        let g0 = fd_partial(&obj, t, 0, h0, best);
        let g1 = fd_partial(&obj, t, 1, h1, best);
        let gnorm = (g0 * g0 + g1 * g1).sqrt();
        if gnorm < 1e-12 {
            return Ok(ExtReal::finite(best));
        }
        // gradient-direction search, then coordinate searches; the latter
        // keep the ascent moving when a domain wall blocks the gradient ray
        let directions = [
            (g0 / gnorm, g1 / gnorm),
            (g0.signum(), 0.0),
            (0.0, g1.signum()),
        ];
        round_gain = 0.0;
        for dir in directions {
            match line_max(&obj, t, dir, best, opts.escape_radius) {
                LineSearch::Escaped => return Ok(ExtReal::PosInf),
                LineSearch::Improved(t_new, v) => {
                    round_gain += v - best;
                    t = t_new;
                    best = v;
                }
                LineSearch::NoGain => {}
            }
        }
        stall = if round_gain < opts.obj_tol { stall + 1 } else { 0 };
        if stall >= 2 {
            return Ok(ExtReal::finite(best));
        }
    }
    // Out of rounds with the objective still climbing steadily: a gently
    // tilted unbounded direction (the zigzag drifts toward the radius far
    // slower than a straight ray would). Converging suprema end in vanishing
    // gains instead and never land here.
    if round_gain > 1e-6 {
        return Ok(ExtReal::PosInf);
    }
    Ok(ExtReal::finite(best))
}

enum LineSearch {
    Improved((f64, f64), f64),
    NoGain,
    Escaped,
}

/// Maximize `obj` along `t + s dir`, s >= 0, by bracket expansion plus
/// golden-section refinement. -infinity regions bound the bracket.
fn line_max<F: Fn((f64, f64)) -> f64>(
    obj: &F,
    t: (f64, f64),
    dir: (f64, f64),
    current: f64,
    escape_radius: f64,
) -> LineSearch {
    let along = |s: f64| obj((t.0 + s * dir.0, t.1 + s * dir.1));
    let mut s = 1e-3;
    while !along(s).is_finite() && s > 1e-16 {
        s *= 0.25;
    }
    if !along(s).is_finite() {
        return LineSearch::NoGain;
    }
    let mut s_hi = s;
    for _ in 0..700 {
        if along(2.0 * s_hi) <= along(s_hi) {
            break;
        }
        s_hi *= 2.0;
        let far = (t.0 + s_hi * dir.0, t.1 + s_hi * dir.1);
        if (far.0 * far.0 + far.1 * far.1).sqrt() > escape_radius {
            return LineSearch::Escaped;
        }
    }
    // value precision is quadratic in the s tolerance near the maximum
    let (s_star, neg) =
        golden_section_min(|s| -along(s), 0.0, 2.0 * s_hi, 2e-5 * (1.0 + 2.0 * s_hi));
    let cand = -neg;
    if cand > current {
        LineSearch::Improved((t.0 + s_star * dir.0, t.1 + s_star * dir.1), cand)
    } else {
        LineSearch::NoGain
    }
}

fn fd_partial<F: Fn((f64, f64)) -> f64>(
    obj: &F,
    t: (f64, f64),
    axis: usize,
    h: f64,
    at_t: f64,
) -> f64 {
    let shift = |d: f64| -> (f64, f64) {
        if axis == 0 {
            (t.0 + d, t.1)
        } else {
            (t.0, t.1 + d)
        }
    };
    let plus = obj(shift(h));
    let minus = obj(shift(-h));
    match (plus.is_finite(), minus.is_finite()) {
        (true, true) => (plus - minus) / (2.0 * h),
        (true, false) => (plus - at_t) / h,
        (false, true) => (at_t - minus) / h,
        (false, false) => 0.0,
    }
}

/// Status of the constrained minimization behind `rate_jp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketStatus {
    Ok,
    Exhausted,
}

/// The constrained rate J_p(y) = inf { I_p*(x1, x2) : x1, x2 > 0,
/// x1^(1/2) x2^(-1/p) = y }, solved on the explicit curve x2 = (sqrt(x1)/y)^p
/// by a coarse log-scale scan plus golden-section refinement.
pub fn rate_jp(p: f64, y: f64) -> Result<ExtReal> {
    Ok(rate_jp_detailed(p, y)?.0)
}

pub fn rate_jp_detailed(p: f64, y: f64) -> Result<(ExtReal, BracketStatus)> {
    if !p.is_finite() || p < 2.0 {
        return Err(Error::invalid_argument(format!("J_p is defined for finite p >= 2, got {p}")));
    }
    if y.is_nan() {
        return Err(Error::invalid_argument("y must not be NaN"));
    }
    if y <= 0.0 {
        return Ok((ExtReal::PosInf, BracketStatus::Ok));
    }
    let f = |t1: f64, t2: f64| cumulant_ip(p, t1, t2).map(|v| v.as_f64()).unwrap_or(f64::NAN);
    let opts = FenchelOptions::default();
    let objective = |u: f64| -> f64 {
        let x1 = u.exp();
        let x2 = (x1.sqrt() / y).powf(p);
        fenchel_conjugate(&f, (x1, x2), &opts).map(|v| v.as_f64()).unwrap_or(f64::INFINITY)
    };

    let (mut lo, mut hi) = ((1e-6f64).ln(), (1e6f64).ln());
    for _expand in 0..3 {
        const COARSE: usize = 17;
        let mut best_i = usize::MAX;
        let mut best_v = f64::INFINITY;
        let mut vals = [0.0f64; COARSE];
        for (i, v) in vals.iter_mut().enumerate() {
            let u = lo + (hi - lo) * i as f64 / (COARSE - 1) as f64;
            *v = objective(u);
            if *v < best_v {
                best_v = *v;
                best_i = i;
            }
        }
        if best_v.is_infinite() {
            // the conjugate is infinite along the whole curve
            return Ok((ExtReal::PosInf, BracketStatus::Ok));
        }
        let du = (hi - lo) / (COARSE - 1) as f64;
        let u_best = lo + du * best_i as f64;
        if best_i > 0 && best_i < COARSE - 1 {
            // value accuracy is quadratic in the u tolerance near the minimum
            let (_, v) = golden_section_min(objective, u_best - du, u_best + du, 1e-3);
            // a rate is nonnegative; shave quadrature dust
            return Ok((ExtReal::finite(v.max(0.0)), BracketStatus::Ok));
        }
        // minimum sits on the bracket edge: widen it
        lo -= 14.0;
        hi += 14.0;
    }
    Ok((ExtReal::PosInf, BracketStatus::Exhausted))
}

/// The explicit rate of the speed-n^(p/2) principle for p in [1, 2):
/// (1/p) (y^2/lambda - m)^(p/2) above the boundary sqrt(lambda m), +infinity
/// below it.
pub fn rate_i2(p: f64, lambda: f64, y: f64, m_variant: MExponentVariant) -> Result<ExtReal> {
    if !p.is_finite() || !(1.0..2.0).contains(&p) {
        return Err(Error::invalid_argument(format!("rate_i2 needs p in [1, 2), got {p}")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid_argument(format!("rate_i2 needs lambda in (0, 1], got {lambda}")));
    }
    if y.is_nan() {
        return Err(Error::invalid_argument("y must not be NaN"));
    }
    let m = ldp_m_constant(p, m_variant)?;
    if y < (lambda * m).sqrt() {
        return Ok(ExtReal::PosInf);
    }
    let arg = y * y / lambda - m;
    // y = sqrt(lambda m) carries a few ulps of rounding; the rate there is 0
    if arg <= 8.0 * f64::EPSILON * (m + y * y / lambda) {
        return Ok(ExtReal::finite(0.0));
    }
    Ok(ExtReal::finite(arg.powf(p / 2.0) / p))
}

/// Rate function of W/n: linear (y for y >= 0) under exponential or gamma
/// mixing, and the point-mass rate under Dirac mixing. A good rate function
/// must vanish somewhere, so the Dirac rate is 0 at the origin and +infinity
/// elsewhere.
pub fn rate_w(w: &WSpec, y: f64) -> ExtReal {
    match w {
        WSpec::Exponential1 | WSpec::Gamma(_) => {
            if y >= 0.0 {
                ExtReal::finite(y)
            } else {
                ExtReal::PosInf
            }
        }
        WSpec::Dirac0 => {
            if y == 0.0 {
                ExtReal::finite(0.0)
            } else {
                ExtReal::PosInf
            }
        }
    }
}

/// Per-cell annotation of a rate grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellFlag {
    Ok,
    /// zero tail hits: the probability is below the Monte Carlo floor
    BelowFloor,
    /// constrained minimization ran out of bracket
    BracketExhausted,
}

impl fmt::Display for CellFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellFlag::Ok => write!(f, "ok"),
            CellFlag::BelowFloor => write!(f, "below-floor"),
            CellFlag::BracketExhausted => write!(f, "bracket-exhausted"),
        }
    }
}

/// Tabulated rate-function values over a 1-D or 2-D grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateGrid {
    /// Primary axis (sorted).
    pub axis: Vec<f64>,
    /// Second axis for 2-D grids; values are then row-major in (axis, axis2).
    pub axis2: Option<Vec<f64>>,
    pub values: Vec<ExtReal>,
    pub flags: Vec<CellFlag>,
    /// One certificate per axis: finite values form a contiguous convex run.
    pub convexity_certificate: Vec<bool>,
}

/// Certifies discrete convexity of a line of extended reals: the finite
/// values must be contiguous and their second differences >= -1e-9.
pub fn convex_along_line(values: &[ExtReal]) -> bool {
    let finite_idx: Vec<usize> =
        values.iter().enumerate().filter(|(_, v)| v.is_finite()).map(|(i, _)| i).collect();
    if finite_idx.is_empty() {
        return true;
    }
    let contiguous = finite_idx.windows(2).all(|w| w[1] == w[0] + 1);
    if !contiguous {
        return false;
    }
    let run: Vec<f64> = finite_idx.iter().map(|&i| values[i].as_f64()).collect();
    run.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -1e-9)
}

/// Tabulate the cumulant over a 2-D grid with per-axis convexity
/// certificates.
pub fn cumulant_grid(p: f64, t1_axis: &[f64], t2_axis: &[f64]) -> Result<RateGrid> {
    let mut values = Vec::with_capacity(t1_axis.len() * t2_axis.len());
    for &t1 in t1_axis {
        for &t2 in t2_axis {
            values.push(cumulant_ip(p, t1, t2)?);
        }
    }
    let cols = t2_axis.len();
    let rows = t1_axis.len();
    let axis1_ok = (0..cols).all(|j| {
        let line: Vec<ExtReal> = (0..rows).map(|i| values[i * cols + j]).collect();
        convex_along_line(&line)
    });
    let axis2_ok = (0..rows).all(|i| convex_along_line(&values[i * cols..(i + 1) * cols]));
    let flags = vec![CellFlag::Ok; values.len()];
    Ok(RateGrid {
        axis: t1_axis.to_vec(),
        axis2: Some(t2_axis.to_vec()),
        values,
        flags,
        convexity_certificate: vec![axis1_ok, axis2_ok],
    })
}

/// One cell of an empirical tail-rate estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRateCell {
    pub n: u64,
    pub k: u64,
    pub samples: u64,
    pub hits: u64,
    pub p_hat: f64,
    /// -log(p_hat) / n^(p/2); PosInf only through the BelowFloor flag.
    pub rate: ExtReal,
    pub rate_ci_lower: ExtReal,
    pub rate_ci_upper: ExtReal,
    pub flag: CellFlag,
}

/// Empirical tail-rate report over an n-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRateReport {
    pub p: f64,
    pub lambda: f64,
    pub w: WSpec,
    pub y: f64,
    pub cells: Vec<TailRateCell>,
}

impl TailRateReport {
    /// Rates as a 1-D grid over n.
    pub fn rate_grid(&self) -> RateGrid {
        let values: Vec<ExtReal> = self.cells.iter().map(|c| c.rate).collect();
        RateGrid {
            axis: self.cells.iter().map(|c| c.n as f64).collect(),
            axis2: None,
            flags: self.cells.iter().map(|c| c.flag).collect(),
            convexity_certificate: vec![convex_along_line(&values)],
            values,
        }
    }
}

/// Wilson score interval at 99% for a binomial proportion.
fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    const Z: f64 = 2.5758293035489004; // 99.5th percentile of the standard normal
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Estimate -log P(n^(1/p - 1/2) ||P_E X||_2 >= y) / n^(p/2) per grid cell by
/// tail counting with Wilson confidence bounds. Zero-hit cells are flagged
/// below-floor rather than reported as infinite rates.
#[allow(clippy::too_many_arguments)]
pub fn empirical_tail_rate(
    p: f64,
    lambda: f64,
    w: WSpec,
    y: f64,
    n_grid: &[u64],
    sample_counts: &[u64],
    seed: u64,
    substreams: u32,
) -> Result<TailRateReport> {
    if n_grid.len() != sample_counts.len() {
        return Err(Error::invalid_argument(
            "n_grid and sample_counts must have matching lengths",
        ));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid_argument("lambda must lie in (0, 1]"));
    }
    let pe = PExponent::finite(p)?;
    let mut cells = Vec::with_capacity(n_grid.len());
    for (cell_idx, (&n, &count)) in n_grid.iter().zip(sample_counts).enumerate() {
        let k = KRule::Lambda.eval(n, lambda).min(n);
        let spec = ProjectionSpec::canonical(n as u32, k as u32, pe, w)?;
        let scale = (n as f64).powf(1.0 / p - 0.5);
        let sampler = ProjectionSampler::new(spec);
        let base_stream = cell_idx as u64 * substreams as u64;
        let hit_counts = parallel_fold(
            count as usize,
            substreams,
            seed,
            base_stream,
            |rng, share| {
                let mut hits = 0u64;
                for _ in 0..share {
                    if scale * sampler.draw_raw(rng) >= y {
                        hits += 1;
                    }
                }
                hits
            },
        );
        let hits: u64 = hit_counts.iter().sum();
        let p_hat = hits as f64 / count as f64;
        let speed = (n as f64).powf(p / 2.0);
        let (ci_lo, ci_hi) = wilson_interval(hits, count);
        let (rate, rate_lo, rate_hi, flag) = if hits == 0 {
            (ExtReal::PosInf, ExtReal::finite((-ci_hi.ln() / speed).max(0.0)), ExtReal::PosInf,
             CellFlag::BelowFloor)
        } else {
            (
                ExtReal::finite((-p_hat.ln() / speed).max(0.0)),
                ExtReal::finite((-ci_hi.ln() / speed).max(0.0)),
                if ci_lo > 0.0 {
                    ExtReal::finite(-ci_lo.ln() / speed)
                } else {
                    ExtReal::PosInf
                },
                CellFlag::Ok,
            )
        };
        cells.push(TailRateCell {
            n,
            k,
            samples: count,
            hits,
            p_hat,
            rate,
            rate_ci_lower: rate_lo,
            rate_ci_upper: rate_hi,
            flag,
        });
    }
    Ok(TailRateReport { p, lambda, w, y, cells })
}
