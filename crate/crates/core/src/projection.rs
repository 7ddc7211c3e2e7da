//! Realizations of the Euclidean norm of a random projection of a random
//! ball point, and of the centered statistic built from it.
//!
//! Two independent sampling routes are exposed. `Representation` evaluates
//! the distributional identity
//!
//!   ||P_E X||_2  =d  (sum Z_i^2)^(1/2) / (sum |Z_i|^p + W)^(1/p)
//!                    * (sum_{i<=k} g_i^2)^(1/2) / (sum_{i<=n} g_i^2)^(1/2)
//!
//! (the W term and the p-norm denominator drop for p = infinity), while
//! `DirectHaar` draws an actual ball point, an actual Haar orthogonal matrix,
//! and measures the projection onto the span of its first k columns. The two
//! must agree in law; the test suite holds them against each other.

use serde::{Deserialize, Serialize};

use crate::ball::{sample_ball_point, BallMeasureSpec};
use crate::error::{Error, Result};
use crate::moments::abs_moment;
use crate::numeric::KahanSum;
use crate::parallel::parallel_values;
use crate::rng::{Provenance, RngStream};
use crate::sampling::{
    sample_haar_orthogonal, PExponent, PGaussSampler, ScaleConvention, WSampler, WSpec,
};

/// How to generate projection norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMethod {
    Representation,
    DirectHaar,
}

impl std::fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectionMethod::Representation => write!(f, "representation"),
            ProjectionMethod::DirectHaar => write!(f, "direct-haar"),
        }
    }
}

/// What a batch of values holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    RawNorm,
    CenteredX,
}

/// Full description of a projection experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub n: u32,
    pub k: u32,
    pub p: PExponent,
    pub w: WSpec,
    pub method: ProjectionMethod,
    pub conv: ScaleConvention,
}

impl ProjectionSpec {
    pub fn new(
        n: u32,
        k: u32,
        p: PExponent,
        w: WSpec,
        method: ProjectionMethod,
        conv: ScaleConvention,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid_argument("ambient dimension n must be >= 1"));
        }
        if k == 0 || k > n {
            return Err(Error::invalid_argument(format!(
                "subspace dimension k must lie in 1..=n, got k = {k}, n = {n}"
            )));
        }
        if p.is_infinite() && w != WSpec::Exponential1 {
            return Err(Error::invalid_argument(
                "p = infinity only supports the uniform cube (exponential1 mixing semantics)",
            ));
        }
        Ok(ProjectionSpec { n, k, p, w, method, conv })
    }

    /// Canonical-convention representation sampler spec.
    pub fn canonical(n: u32, k: u32, p: PExponent, w: WSpec) -> Result<Self> {
        ProjectionSpec::new(
            n,
            k,
            p,
            w,
            ProjectionMethod::Representation,
            ScaleConvention::UnitDensity,
        )
    }
}

/// A batch of i.i.d. statistic realizations plus generation metadata.
#[derive(Debug, Clone)]
pub struct StatSampleBatch {
    pub spec: ProjectionSpec,
    pub statistic_kind: StatisticKind,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    /// Number of substreams the batch was split over (1 for a plain draw).
    pub substreams: u32,
}

/// Streaming per-sample generator for the raw projection norm.
pub struct ProjectionSampler {
    spec: ProjectionSpec,
    z: PGaussSampler,
    w: WSampler,
}

impl ProjectionSampler {
    pub fn new(spec: ProjectionSpec) -> Self {
        ProjectionSampler {
            spec,
            z: PGaussSampler::new(spec.p, spec.conv),
            w: WSampler::new(spec.w),
        }
    }

    pub fn spec(&self) -> &ProjectionSpec {
        &self.spec
    }

    /// One draw of ||P_E X||_2.
    pub fn draw_raw(&self, rng: &mut RngStream) -> f64 {
        match self.spec.method {
            ProjectionMethod::Representation => self.draw_representation(rng),
            ProjectionMethod::DirectHaar => self.draw_direct_haar(rng),
        }
    }

    /// One draw of the centered statistic.
    pub fn draw_statistic(&self, rng: &mut RngStream) -> f64 {
        statistic_x(self.spec.n, self.spec.k, self.spec.p, self.draw_raw(rng))
    }

    fn draw_representation(&self, rng: &mut RngStream) -> f64 {
        let n = self.spec.n as usize;
        let k = self.spec.k as usize;
        let z_part = match self.spec.p {
            PExponent::Finite(p) => {
                let mut sum_sq = KahanSum::new();
                let mut sum_p = KahanSum::new();
                for _ in 0..n {
                    let z = self.z.draw(rng);
                    sum_sq.add(z * z);
                    sum_p.add(z.abs().powf(p));
                }
                let w = self.w.draw(rng);
                sum_sq.value().sqrt() / (sum_p.value() + w).powf(1.0 / p)
            }
            PExponent::Infinity => {
                let mut sum_sq = KahanSum::new();
                for _ in 0..n {
                    let z = self.z.draw(rng);
                    sum_sq.add(z * z);
                }
                sum_sq.value().sqrt()
            }
        };
        // With k = n the chi-square ratio is identically one; skip the draws.
        if k == n {
            return z_part;
        }
        let mut g_sum = KahanSum::new();
        let mut g_sum_k = 0.0;
        for i in 0..n {
            let g: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            g_sum.add(g * g);
            if i + 1 == k {
                g_sum_k = g_sum.value();
            }
        }
        z_part * (g_sum_k / g_sum.value()).sqrt()
    }

    fn draw_direct_haar(&self, rng: &mut RngStream) -> f64 {
        let n = self.spec.n;
        let k = self.spec.k as usize;
        let ball_spec = BallMeasureSpec::new(n, self.spec.p, self.spec.w, self.spec.conv)
            .expect("projection spec validates the same fields");
        let batch = sample_ball_point(&ball_spec, 1, rng).expect("count 1 is valid");
        let q = sample_haar_orthogonal(n as usize, rng).expect("n >= 1");
        q.projection_norm(batch.row(0), k)
    }
}

/// The centering map: n^(1/p) raw / sqrt(M_p(2)) - sqrt(k) for finite p and
/// sqrt(3) raw - sqrt(k) for p = infinity (sqrt(3) = 1/sqrt(M_inf(2))).
pub fn statistic_x(n: u32, k: u32, p: PExponent, raw_norm: f64) -> f64 {
    assert!(raw_norm >= 0.0, "raw norm must be nonnegative");
    let k_term = (k as f64).sqrt();
    match p {
        PExponent::Finite(pv) => {
            let m2 = abs_moment(p, 2.0).expect("q = 2 is valid");
            (n as f64).powf(1.0 / pv) * raw_norm / m2.sqrt() - k_term
        }
        PExponent::Infinity => 3.0f64.sqrt() * raw_norm - k_term,
    }
}

/// `count` i.i.d. raw projection norms from a single stream.
pub fn sample_projection_norm(
    spec: &ProjectionSpec,
    count: usize,
    rng: &mut RngStream,
) -> Result<StatSampleBatch> {
    if count == 0 {
        return Err(Error::invalid_argument("count must be >= 1"));
    }
    let provenance = rng.provenance();
    let sampler = ProjectionSampler::new(*spec);
    let values = (0..count).map(|_| sampler.draw_raw(rng)).collect();
    Ok(StatSampleBatch {
        spec: *spec,
        statistic_kind: StatisticKind::RawNorm,
        values,
        provenance,
        substreams: 1,
    })
}

/// `count` i.i.d. centered statistics from a single stream.
pub fn sample_statistic(
    spec: &ProjectionSpec,
    count: usize,
    rng: &mut RngStream,
) -> Result<StatSampleBatch> {
    let mut batch = sample_projection_norm(spec, count, rng)?;
    for v in batch.values.iter_mut() {
        *v = statistic_x(spec.n, spec.k, spec.p, *v);
    }
    batch.statistic_kind = StatisticKind::CenteredX;
    Ok(batch)
}

/// Deterministic multi-stream batch of centered statistics; the result is a
/// pure function of (spec, count, seed, base_stream, substreams).
pub fn sample_statistic_parallel(
    spec: &ProjectionSpec,
    count: usize,
    seed: u64,
    base_stream: u64,
    substreams: u32,
) -> Result<StatSampleBatch> {
    if count == 0 {
        return Err(Error::invalid_argument("count must be >= 1"));
    }
    if substreams == 0 {
        return Err(Error::invalid_argument("substreams must be >= 1"));
    }
    let sampler = ProjectionSampler::new(*spec);
    let values =
        parallel_values(count, substreams, seed, base_stream, |rng| sampler.draw_statistic(rng));
    Ok(StatSampleBatch {
        spec: *spec,
        statistic_kind: StatisticKind::CenteredX,
        values,
        provenance: Provenance { seed, stream_id: base_stream },
        substreams,
    })
}

/// Realizations of the first-order (linearized) term of the centered
/// statistic, built from the four normalized sums on shared (Z, g) draws:
///
///   Y1 = sqrt(l) xi1 / (2 M_p(2)) - sqrt(l) xi2 / p + xi3 / 2 - sqrt(l) xi4 / 2,
///
/// with l = k/n, xi1 = sum(|Z|^2 - M_p(2))/sqrt(n), xi2 = sum(|Z|^p - 1)/sqrt(n),
/// xi3 = sum_{i<=k}(g^2 - 1)/sqrt(k), xi4 = sum_{i<=n}(g^2 - 1)/sqrt(n).
/// Its variance is exactly l Var(Z_1) + (1 - l)/2 at every finite n, which is
/// what the limit-variance check exploits.
pub fn sample_linearized_y1(
    n: u32,
    k: u32,
    p: f64,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::invalid_argument("need 1 <= k <= n"));
    }
    if count == 0 {
        return Err(Error::invalid_argument("count must be >= 1"));
    }
    let pe = PExponent::finite(p)?;
    let m2 = abs_moment(pe, 2.0)?;
    let z_sampler = PGaussSampler::new(pe, ScaleConvention::PaperDensity);
    let normal = rand_distr::StandardNormal;
    let (nf, kf) = (n as f64, k as f64);
    let lambda_n = kf / nf;
    let sqrt_l = lambda_n.sqrt();

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut acc1 = KahanSum::new();
        let mut acc2 = KahanSum::new();
        for _ in 0..n {
            let z = z_sampler.draw(rng);
            acc1.add(z * z - m2);
            acc2.add(z.abs().powf(p) - 1.0);
        }
        let mut acc4 = KahanSum::new();
        let mut acc3 = 0.0;
        for i in 0..n as usize {
            let g: f64 = rand_distr::Distribution::sample(&normal, rng);
            acc4.add(g * g - 1.0);
            if i + 1 == k as usize {
                acc3 = acc4.value();
            }
        }
        let xi1 = acc1.value() / nf.sqrt();
        let xi2 = acc2.value() / nf.sqrt();
        let xi3 = acc3 / kf.sqrt();
        let xi4 = acc4.value() / nf.sqrt();
        out.push(sqrt_l * xi1 / (2.0 * m2) - sqrt_l * xi2 / p + xi3 / 2.0 - sqrt_l * xi4 / 2.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{clt_variance, VarianceVariant};
    use crate::numeric::kahan_sum;

    fn canonical(n: u32, k: u32, p: PExponent, w: WSpec, method: ProjectionMethod) -> ProjectionSpec {
        ProjectionSpec::new(n, k, p, w, method, ScaleConvention::UnitDensity).unwrap()
    }

    #[test]
    fn spec_validates_k_range() {
        assert!(ProjectionSpec::canonical(8, 0, PExponent::Finite(2.0), WSpec::Dirac0).is_err());
        assert!(ProjectionSpec::canonical(8, 9, PExponent::Finite(2.0), WSpec::Dirac0).is_err());
        assert!(ProjectionSpec::canonical(8, 8, PExponent::Finite(2.0), WSpec::Dirac0).is_ok());
    }

    #[test]
    fn euclidean_cone_full_projection_is_one() {
        for method in [ProjectionMethod::Representation, ProjectionMethod::DirectHaar] {
            let spec = canonical(16, 16, PExponent::Finite(2.0), WSpec::Dirac0, method);
            let mut rng = RngStream::new(3, 0);
            let batch = sample_projection_norm(&spec, 500, &mut rng).unwrap();
            for &v in &batch.values {
                assert!((v - 1.0).abs() <= 1e-12, "{method}: {v}");
            }
        }
    }

    #[test]
    fn statistic_prefactor_examples() {
        // at p = 2 the prefactor is exactly 1
        let s = statistic_x(16, 4, PExponent::Finite(2.0), 2.0);
        assert!((s - 6.0).abs() <= 1e-12, "{s}");
        let s = statistic_x(4096, 9, PExponent::Infinity, 1.0);
        assert!((s - (3.0f64.sqrt() - 3.0)).abs() <= 1e-15);
    }

    #[test]
    fn degenerate_statistic_is_zero() {
        let spec = canonical(
            64,
            64,
            PExponent::Finite(2.0),
            WSpec::Dirac0,
            ProjectionMethod::Representation,
        );
        let mut rng = RngStream::new(8, 0);
        let batch = sample_statistic(&spec, 1000, &mut rng).unwrap();
        for &v in &batch.values {
            assert!(v.abs() <= 1e-12, "{v}");
        }
    }

    #[test]
    fn raw_values_are_contractions() {
        let spec = canonical(
            12,
            5,
            PExponent::Finite(1.0),
            WSpec::Exponential1,
            ProjectionMethod::Representation,
        );
        let mut rng = RngStream::new(13, 0);
        let batch = sample_projection_norm(&spec, 20_000, &mut rng).unwrap();
        assert_eq!(batch.values.len(), 20_000);
        assert!(batch.values.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn direct_haar_values_respect_norm_comparison_bound() {
        // for p > 2 the Euclidean norm of a ball point is at most n^(1/2-1/p)
        let (n, p) = (8u32, 3.5f64);
        let bound = (n as f64).powf(0.5 - 1.0 / p) + 1e-12;
        let spec =
            canonical(n, 3, PExponent::Finite(p), WSpec::Gamma(2.0), ProjectionMethod::DirectHaar);
        let mut rng = RngStream::new(14, 0);
        let batch = sample_projection_norm(&spec, 2000, &mut rng).unwrap();
        assert!(batch.values.iter().all(|&v| (0.0..=bound).contains(&v)));
    }

    #[test]
    fn raw_norm_nondecreasing_in_k_for_shared_randomness() {
        // shared (Z, W, g) draw; the k-partial chi-square sum grows with k
        let n = 40usize;
        let p = 1.5f64;
        let mut rng = RngStream::new(15, 0);
        let zs = PGaussSampler::new(PExponent::Finite(p), ScaleConvention::UnitDensity);
        let ws = WSampler::new(WSpec::Exponential1);
        for _ in 0..200 {
            let z: Vec<f64> = (0..n).map(|_| zs.draw(&mut rng)).collect();
            let w = ws.draw(&mut rng);
            let g: Vec<f64> = (0..n)
                .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
                .collect();
            let sum_sq = kahan_sum(z.iter().map(|v| v * v));
            let sum_p = kahan_sum(z.iter().map(|v| v.abs().powf(p)));
            let g_total = kahan_sum(g.iter().map(|v| v * v));
            let z_part = sum_sq.sqrt() / (sum_p + w).powf(1.0 / p);
            let mut prev = 0.0;
            let mut g_partial = 0.0;
            for gk in &g {
                g_partial += gk * gk;
                let raw = z_part * (g_partial / g_total).sqrt();
                assert!(raw >= prev - 1e-15);
                prev = raw;
            }
        }
    }

    #[test]
    fn representation_scale_invariance_for_cone_p2() {
        // with W = 0 and p = 2 the ratio is exactly invariant under Z -> cZ
        let n = 10usize;
        let mut rng = RngStream::new(16, 0);
        let zs = PGaussSampler::new(PExponent::Finite(2.0), ScaleConvention::UnitDensity);
        for &c in &[0.5f64, 3.0, 1e6] {
            let z: Vec<f64> = (0..n).map(|_| zs.draw(&mut rng)).collect();
            let raw = |z: &[f64]| {
                let s2 = kahan_sum(z.iter().map(|v| v * v));
                let sp = kahan_sum(z.iter().map(|v| v * v));
                s2.sqrt() / sp.sqrt()
            };
            let scaled: Vec<f64> = z.iter().map(|v| c * v).collect();
            assert_eq!(raw(&z), raw(&scaled));
        }
    }

    #[test]
    fn parallel_batch_is_deterministic_and_stream_ordered() {
        let spec = ProjectionSpec::canonical(32, 8, PExponent::Finite(1.0), WSpec::Exponential1)
            .unwrap();
        let a = sample_statistic_parallel(&spec, 501, 7, 100, 4).unwrap();
        let b = sample_statistic_parallel(&spec, 501, 7, 100, 4).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.substreams, 4);
        // first element equals a fresh single-stream draw on stream 100
        let mut rng = RngStream::new(7, 100);
        let single = sample_statistic(&spec, 1, &mut rng).unwrap();
        assert_eq!(a.values[0], single.values[0]);
    }

    #[test]
    fn y1_is_centered() {
        let count = 20_000;
        let mut rng = RngStream::new(17, 0);
        let y = sample_linearized_y1(256, 128, 1.0, count, &mut rng).unwrap();
        let mean = kahan_sum(y.iter().copied()) / count as f64;
        let sigma2 = clt_variance(PExponent::Finite(1.0), 0.5, VarianceVariant::MomentBased)
            .unwrap();
        let se = (sigma2 / count as f64).sqrt();
        assert!(mean.abs() <= 4.0 * se, "mean = {mean}");
    }

    #[test]
    fn y1_degenerates_at_p2_full_rank() {
        let mut rng = RngStream::new(18, 0);
        let y = sample_linearized_y1(512, 512, 2.0, 2000, &mut rng).unwrap();
        let var = kahan_sum(y.iter().map(|v| v * v)) / y.len() as f64;
        assert!(var <= 1e-25, "variance = {var}");
    }

    #[test]
    fn y1_variance_matches_limit_variance() {
        // At k = n/2 the finite-n variance of Y1 equals sigma^2(p, 1/2) exactly.
        let (n, k) = (100_000u32, 50_000u32);
        let count = 2000;
        let mut rng = RngStream::new(19, 0);
        let y = sample_linearized_y1(n, k, 1.0, count, &mut rng).unwrap();
        let mean = kahan_sum(y.iter().copied()) / count as f64;
        let var = kahan_sum(y.iter().map(|v| (v - mean) * (v - mean))) / (count as f64 - 1.0);
        let sigma2 = clt_variance(PExponent::Finite(1.0), 0.5, VarianceVariant::MomentBased)
            .unwrap();
        // sampling SE of a variance estimate: sigma^2 sqrt(2/(count-1))
        let se = sigma2 * (2.0 / (count as f64 - 1.0)).sqrt();
        assert!((var - sigma2).abs() <= 3.0 * se, "var = {var}, sigma2 = {sigma2}");
    }
}
