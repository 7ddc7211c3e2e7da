//! Numerical workhorses: compensated summation, adaptive Gauss-Kronrod
//! quadrature and golden-section minimization.

/// Kahan compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

// 15-point Kronrod nodes/weights on [-1, 1] (positive half; node 7 is the center)
// and the embedded 7-point Gauss weights, as tabulated in QUADPACK.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

fn gauss_kronrod_segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let fv = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * fv;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fv;
        }
    }
    kronrod *= half;
    gauss *= half;
    let err = (kronrod - gauss).abs();
    (kronrod, err)
}

/// Globally adaptive Gauss-Kronrod integration of `f` over the finite
/// interval [a, b]. Splits the segment with the largest error estimate until
/// the total estimated error drops below `rel_tol * |integral| + abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    struct Seg {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = gauss_kronrod_segment(&f, a, b);
    let mut segs = vec![Seg { a, b, val, err }];
    for _ in 0..2000 {
        let total: f64 = segs.iter().map(|s| s.val).sum();
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        if total_err <= rel_tol * total.abs() + abs_tol {
            break;
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("nonempty segment list");
        let Seg { a, b, .. } = segs.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m == a || m == b {
            // interval exhausted at f64 resolution
            let (val, err) = gauss_kronrod_segment(&f, a, b);
            segs.push(Seg { a, b, val, err: err.min(f64::MIN_POSITIVE) });
            continue;
        }
        let (v1, e1) = gauss_kronrod_segment(&f, a, m);
        let (v2, e2) = gauss_kronrod_segment(&f, m, b);
        segs.push(Seg { a, b: m, val: v1, err: e1 });
        segs.push(Seg { a: m, b, val: v2, err: e2 });
    }
    kahan_sum(segs.iter().map(|s| s.val))
}

/// Golden-section search for the minimum of a unimodal `f` on [a, b].
/// Returns (argmin, min). Non-finite values are treated as +infinity.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let val = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = val(c);
    let mut fd = val(d);
    for _ in 0..500 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = val(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = val(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_small_increments() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..10_000_000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn integrate_polynomial_exactly() {
        // Kronrod-15 is exact for degree <= 22; adaptivity not even needed.
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-12, 1e-15);
        // antiderivative x^4/4 - x^2 + x: F(3)-F(-1) = (81/4-9+3) - (1/4-1-1) = 16
        assert!((v - 16.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_gaussian_density() {
        let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(|x| c * (-0.5 * x * x).exp(), -40.0, 40.0, 1e-12, 0.0);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_handles_spiky_integrand() {
        // narrow bump requiring adaptive refinement
        let v = integrate(|x| (-(x * x) * 1e4).exp(), -1.0, 1.0, 1e-10, 0.0);
        let exact = (std::f64::consts::PI).sqrt() / 100.0;
        assert!((v - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn golden_section_finds_quadratic_min() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3) + 1.0, -5.0, 7.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-12);
    }
}
