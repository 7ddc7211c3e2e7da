//! Sampling primitives: p-generalized Gaussians under two scale conventions,
//! mixing variables W, and Haar-distributed orthogonal matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// The exponent p of the ball; either a finite real >= 1 or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PExponent {
    Finite(f64),
    Infinity,
}

impl PExponent {
    pub fn finite(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::invalid_argument(format!(
                "p must be a finite real >= 1 or infinity, got {p}"
            )));
        }
        Ok(PExponent::Finite(p))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, PExponent::Infinity)
    }

    /// The finite value, if any.
    pub fn as_finite(&self) -> Option<f64> {
        match self {
            PExponent::Finite(p) => Some(*p),
            PExponent::Infinity => None,
        }
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PExponent::Finite(p) => write!(f, "{p}"),
            PExponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for PExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "oo" => Ok(PExponent::Infinity),
            v => {
                let p: f64 = v
                    .parse()
                    .map_err(|_| Error::Parse(format!("cannot parse p exponent from {v:?}")))?;
                PExponent::finite(p)
            }
        }
    }
}

impl Serialize for PExponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PExponent::Finite(p) => s.serialize_f64(*p),
            PExponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PExponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => PExponent::finite(p).map_err(DeError::custom),
            Raw::Str(s) => s.parse().map_err(DeError::custom),
        }
    }
}

/// Scale convention for the p-generalized Gaussian.
///
/// `PaperDensity` has density proportional to exp(-|x|^p / p); |Z|^p / p is
/// then Gamma(1/p) distributed. `UnitDensity` has density proportional to
/// exp(-|x|^p); |Z|^p itself is Gamma(1/p). The two are related by the exact
/// scalar p^(1/p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleConvention {
    PaperDensity,
    UnitDensity,
}

impl fmt::Display for ScaleConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleConvention::PaperDensity => write!(f, "paper-density"),
            ScaleConvention::UnitDensity => write!(f, "unit-density"),
        }
    }
}

/// The mixing distribution W on [0, infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "shape")]
pub enum WSpec {
    Dirac0,
    Exponential1,
    Gamma(f64),
}

impl WSpec {
    pub fn gamma(shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::invalid_argument(format!(
                "gamma shape must be a positive finite real, got {shape}"
            )));
        }
        Ok(WSpec::Gamma(shape))
    }

    pub fn mean(&self) -> f64 {
        match self {
            WSpec::Dirac0 => 0.0,
            WSpec::Exponential1 => 1.0,
            WSpec::Gamma(a) => *a,
        }
    }
}

impl fmt::Display for WSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WSpec::Dirac0 => write!(f, "dirac0"),
            WSpec::Exponential1 => write!(f, "exponential1"),
            WSpec::Gamma(a) => write!(f, "gamma({a})"),
        }
    }
}

impl FromStr for WSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "dirac0" | "dirac" | "cone" => Ok(WSpec::Dirac0),
            "exponential1" | "exp" | "exponential" | "uniform" => Ok(WSpec::Exponential1),
            other => {
                if let Some(inner) = other.strip_prefix("gamma(").and_then(|r| r.strip_suffix(')'))
                {
                    let shape: f64 = inner.parse().map_err(|_| {
                        Error::Parse(format!("cannot parse gamma shape from {inner:?}"))
                    })?;
                    WSpec::gamma(shape)
                } else {
                    Err(Error::Parse(format!(
                        "unknown W spec {other:?} (expected dirac0, exponential1 or gamma(shape))"
                    )))
                }
            }
        }
    }
}

/// Streaming sampler for one-dimensional p-generalized Gaussians.
///
/// Finite p uses the exact rejection-free transform Z = sign * (p G)^(1/p)
/// (paper density) or Z = sign * G^(1/p) (unit density) with G ~ Gamma(1/p);
/// p in {1, 2} short-circuits to Laplace / Gaussian draws, which realize the
/// same laws. p = infinity draws Uniform[-1, 1] and ignores the convention.
#[derive(Debug, Clone)]
pub struct PGaussSampler {
    kind: PGaussKind,
}

#[derive(Debug, Clone)]
enum PGaussKind {
    UniformCube,
    StandardNormal { scale: f64 },
    Laplace,
    GammaTransform { gamma: Gamma<f64>, p: f64, inv_p: f64, mag_scale_pow: f64 },
}

impl PGaussSampler {
    pub fn new(p: PExponent, conv: ScaleConvention) -> Self {
        let kind = match p {
            PExponent::Infinity => PGaussKind::UniformCube,
            PExponent::Finite(p) if p == 2.0 => {
                let scale = match conv {
                    ScaleConvention::PaperDensity => 1.0,
                    ScaleConvention::UnitDensity => std::f64::consts::FRAC_1_SQRT_2,
                };
                PGaussKind::StandardNormal { scale }
            }
            PExponent::Finite(p) if p == 1.0 => PGaussKind::Laplace,
            PExponent::Finite(p) => {
                let gamma = Gamma::new(1.0 / p, 1.0).expect("shape 1/p is positive");
                let mag_scale_pow = match conv {
                    ScaleConvention::PaperDensity => p,
                    ScaleConvention::UnitDensity => 1.0,
                };
                PGaussKind::GammaTransform { gamma, p, inv_p: 1.0 / p, mag_scale_pow }
            }
        };
        PGaussSampler { kind }
    }

    #[inline]
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match &self.kind {
            PGaussKind::UniformCube => 2.0 * rng.random::<f64>() - 1.0,
            PGaussKind::StandardNormal { scale } => {
                let g: f64 = StandardNormal.sample(rng);
                scale * g
            }
            PGaussKind::Laplace => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            }
            PGaussKind::GammaTransform { gamma, p, inv_p, mag_scale_pow } => {
                let g = gamma.sample(rng) * mag_scale_pow;
                let mag = if *p == 4.0 { g.sqrt().sqrt() } else { g.powf(*inv_p) };
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
        }
    }
}

/// `count` i.i.d. p-generalized Gaussian draws.
pub fn sample_pgauss(
    p: PExponent,
    conv: ScaleConvention,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid_argument("count must be >= 1"));
    }
    let sampler = PGaussSampler::new(p, conv);
    Ok((0..count).map(|_| sampler.draw(rng)).collect())
}

/// Streaming sampler for the mixing variable W.
#[derive(Debug, Clone)]
pub struct WSampler {
    kind: WKind,
}

#[derive(Debug, Clone)]
enum WKind {
    Dirac0,
    Exponential1,
    Gamma(Gamma<f64>),
}

impl WSampler {
    pub fn new(w: WSpec) -> Self {
        let kind = match w {
            WSpec::Dirac0 => WKind::Dirac0,
            WSpec::Exponential1 => WKind::Exponential1,
            WSpec::Gamma(shape) => {
                WKind::Gamma(Gamma::new(shape, 1.0).expect("validated positive shape"))
            }
        };
        WSampler { kind }
    }

    #[inline]
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match &self.kind {
            WKind::Dirac0 => 0.0,
            WKind::Exponential1 => Exp1.sample(rng),
            WKind::Gamma(g) => g.sample(rng),
        }
    }
}

/// `count` i.i.d. draws from W.
pub fn sample_w(w: WSpec, count: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid_argument("count must be >= 1"));
    }
    let sampler = WSampler::new(w);
    Ok((0..count).map(|_| sampler.draw(rng)).collect())
}

/// An n x n orthogonal matrix; columns of a Haar draw span a Haar-random
/// subspace of the matching dimension.
#[derive(Debug, Clone)]
pub struct OrthogonalMatrix {
    q: DMatrix<f64>,
}

impl OrthogonalMatrix {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Entry (i, j).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// Euclidean norm of the first k coordinates of Q^T x, i.e. the norm of
    /// the projection of x onto the span of the first k columns.
    pub fn projection_norm(&self, x: &[f64], k: usize) -> f64 {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length must match matrix dimension");
        assert!(k >= 1 && k <= n, "k must lie in 1..=n");
        let data = self.q.as_slice(); // column-major
        let mut sumsq = 0.0;
        for j in 0..k {
            let col = &data[j * n..(j + 1) * n];
            let mut dot = 0.0;
            for i in 0..n {
                dot += col[i] * x[i];
            }
            sumsq += dot * dot;
        }
        sumsq.sqrt()
    }

    /// max |(Q^T Q - I)_{ij}|.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let qtq = self.q.transpose() * &self.q;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((qtq[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        self.q.clone().lu().determinant()
    }
}

/// Haar-distributed orthogonal matrix via QR of an i.i.d. Gaussian matrix.
///
/// The R factor's diagonal is forced positive by flipping the corresponding
/// columns of Q; without that correction the distribution is not Haar.
pub fn sample_haar_orthogonal(n: usize, rng: &mut RngStream) -> Result<OrthogonalMatrix> {
    if n == 0 {
        return Err(Error::invalid_argument("matrix dimension must be >= 1"));
    }
    let normal = StandardNormal;
    let m = DMatrix::from_fn(n, n, |_, _| -> f64 { normal.sample(rng) });
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(OrthogonalMatrix { q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::chi_squared_critical;

    fn mean(v: &[f64]) -> f64 {
        crate::numeric::kahan_sum(v.iter().copied()) / v.len() as f64
    }

    #[test]
    fn pgauss_second_moment_p2_paper_density() {
        // E|Z|^2 = M_2(2) = 1, Var|Z|^2 = 2, so 4 SE = 4*sqrt(2/N).
        let n = 1_000_000;
        let mut rng = RngStream::new(1, 0);
        let z = sample_pgauss(PExponent::Finite(2.0), ScaleConvention::PaperDensity, n, &mut rng)
            .unwrap();
        let m2 = mean(&z.iter().map(|x| x * x).collect::<Vec<_>>());
        let se = (2.0 / n as f64).sqrt();
        assert!((m2 - 1.0).abs() < 4.0 * se, "m2 = {m2}");
    }

    #[test]
    fn pgauss_second_moment_p1_paper_density() {
        // M_1(2) = Gamma(4)/(3 Gamma(2)) = 2 and Var|Z|^2 = M_1(4) - 4 = 20.
        let n = 1_000_000;
        let mut rng = RngStream::new(2, 0);
        let z = sample_pgauss(PExponent::Finite(1.0), ScaleConvention::PaperDensity, n, &mut rng)
            .unwrap();
        let m2 = mean(&z.iter().map(|x| x * x).collect::<Vec<_>>());
        let se = (20.0f64 / n as f64).sqrt();
        assert!((m2 - 2.0).abs() < 4.0 * se, "m2 = {m2}");
    }

    #[test]
    fn pgauss_generic_path_matches_gamma_law() {
        // p = 3 paper density: |Z|^3 / 3 ~ Gamma(1/3), so E|Z|^3 = 1.
        let n = 400_000;
        let mut rng = RngStream::new(3, 0);
        let z = sample_pgauss(PExponent::Finite(3.0), ScaleConvention::PaperDensity, n, &mut rng)
            .unwrap();
        let m3 = mean(&z.iter().map(|x| x.abs().powi(3)).collect::<Vec<_>>());
        // Var|Z|^3 = p = 3
        let se = (3.0f64 / n as f64).sqrt();
        assert!((m3 - 1.0).abs() < 4.0 * se, "m3 = {m3}");
    }

    #[test]
    fn pgauss_deterministic_for_equal_stream() {
        let args = (PExponent::Finite(1.7), ScaleConvention::UnitDensity, 1000);
        let mut r1 = RngStream::new(9, 4);
        let mut r2 = RngStream::new(9, 4);
        let a = sample_pgauss(args.0, args.1, args.2, &mut r1).unwrap();
        let b = sample_pgauss(args.0, args.1, args.2, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pgauss_infinity_supported_on_cube_and_ignores_convention() {
        let mut r1 = RngStream::new(11, 0);
        let mut r2 = RngStream::new(11, 0);
        let a = sample_pgauss(PExponent::Infinity, ScaleConvention::PaperDensity, 100_000, &mut r1)
            .unwrap();
        let b = sample_pgauss(PExponent::Infinity, ScaleConvention::UnitDensity, 100_000, &mut r2)
            .unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn pgauss_zero_count_rejected() {
        let mut rng = RngStream::new(0, 0);
        assert!(sample_pgauss(
            PExponent::Finite(2.0),
            ScaleConvention::PaperDensity,
            0,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn w_dirac_is_zero_and_means_match() {
        let mut rng = RngStream::new(21, 0);
        let zeros = sample_w(WSpec::Dirac0, 1000, &mut rng).unwrap();
        assert!(zeros.iter().all(|&x| x == 0.0));

        let n = 1_000_000;
        let e = sample_w(WSpec::Exponential1, n, &mut rng).unwrap();
        let se_exp = (1.0 / n as f64).sqrt();
        assert!((mean(&e) - 1.0).abs() < 4.0 * se_exp);

        let g = sample_w(WSpec::gamma(3.0).unwrap(), n, &mut rng).unwrap();
        let se_gamma = (3.0f64 / n as f64).sqrt();
        assert!((mean(&g) - 3.0).abs() < 4.0 * se_gamma);
        assert!(g.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn wspec_gamma_requires_positive_shape() {
        assert!(WSpec::gamma(0.0).is_err());
        assert!(WSpec::gamma(-1.0).is_err());
    }

    #[test]
    fn haar_orthogonality_and_determinant() {
        let mut rng = RngStream::new(31, 0);
        for n in [1usize, 2, 3, 8, 25] {
            let q = sample_haar_orthogonal(n, &mut rng).unwrap();
            assert!(q.orthogonality_defect() <= 1e-12, "n = {n}");
            assert!((q.determinant().abs() - 1.0).abs() <= 1e-10, "n = {n}");
        }
    }

    #[test]
    fn haar_first_column_angle_uniform_on_circle() {
        // chi^2 goodness of fit, 16 bins, alpha = 0.01, df = 15.
        let draws = 100_000usize;
        let bins = 16usize;
        let mut counts = vec![0u64; bins];
        let mut rng = RngStream::new(37, 0);
        for _ in 0..draws {
            let q = sample_haar_orthogonal(2, &mut rng).unwrap();
            let angle = q.entry(1, 0).atan2(q.entry(0, 0));
            let unit = (angle + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
            let bin = ((unit * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
        }
        let expected = draws as f64 / bins as f64;
        let stat: f64 =
            counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let crit = chi_squared_critical((bins - 1) as u64, 0.01);
        assert!(stat < crit, "chi2 = {stat}, critical = {crit}");
    }

    #[test]
    fn pexponent_validation_and_parse() {
        assert!(PExponent::finite(0.5).is_err());
        assert!(PExponent::finite(f64::NAN).is_err());
        assert_eq!("inf".parse::<PExponent>().unwrap(), PExponent::Infinity);
        assert_eq!("2.5".parse::<PExponent>().unwrap(), PExponent::Finite(2.5));
        assert!("0.2".parse::<PExponent>().is_err());
    }

    #[test]
    fn wspec_parse_round_trip() {
        assert_eq!("dirac0".parse::<WSpec>().unwrap(), WSpec::Dirac0);
        assert_eq!("exponential1".parse::<WSpec>().unwrap(), WSpec::Exponential1);
        assert_eq!("gamma(2.5)".parse::<WSpec>().unwrap(), WSpec::Gamma(2.5));
        assert!("gamma(-1)".parse::<WSpec>().is_err());
    }
}
