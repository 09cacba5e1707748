//! Reference quadratures used as independent oracles.
//!
//! Nothing here shares code with the close-evaluation library: integrals are
//! computed by globally adaptive Gauss-Kronrod (7/15) on the parameter line,
//! which handles nearly singular and weakly (logarithmically) singular
//! integrands given enough subdivisions and breakpoints at the singularities.

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Requested accuracy for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-15, rel: 1e-14, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    // On pieces a few ulps wide a node can round onto an endpoint singularity;
    // such samples carry negligible weight and are dropped.
    let f = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Piece { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// Globally adaptive integral of `f` over `[a, b]`, bisecting the piece with
/// the largest error estimate until the total estimate meets `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Estimate {
    integrate_with_breaks(f, &[a, b], tol)
}

/// As [`integrate`], with the interval pre-split at the sorted `points`
/// (first and last entries are the integration limits).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Estimate {
    assert!(points.len() >= 2, "need at least two points");
    let mut pieces: Vec<Piece> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&f, w[0], w[1]))
        .collect();
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= tol.abs.max(tol.rel * value.abs()) || pieces.len() >= tol.max_intervals {
            return Estimate { value, error, intervals: pieces.len() };
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let p = pieces[worst];
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval exhausted at double precision
            pieces[worst].error = 0.0;
            continue;
        }
        pieces[worst] = kronrod(&f, p.a, m);
        pieces.push(kronrod(&f, m, p.b));
    }
}

/// Integral over one period `[t - π, t + π]` of a 2π-periodic integrand that
/// may be singular (e.g. logarithmically) at `t`.
pub fn periodic_with_singularity<F: Fn(f64) -> f64>(f: F, t: f64, tol: Tolerance) -> Estimate {
    integrate_with_breaks(f, &[t - PI, t, t + PI], tol)
}

/// Plain periodic trapezoid rule with `n` points on `[0, 2π)`.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|j| f(h * j as f64)).sum::<f64>() * h
}
