//! Globally adaptive Gauss–Kronrod quadrature.
//!
//! Finite intervals are bisected in order of largest error estimate using the
//! 10/21-point Gauss–Kronrod pair. Semi-infinite pieces are folded onto `[0, 1)`
//! with `x = a + s·t/(1 − t)²` and handled by the same driver, so a real-line
//! integral is one adaptive problem over a finite core window plus two mapped
//! tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_983_161_888,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Endpoint test used when growing a real-line window: stop once the integrand
/// at both ends is below this fraction of its observed peak.
pub const WINDOW_DECAY: f64 = 1e-15;

/// Requested accuracy. Convergence is declared when the summed error estimate
/// is below `max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel, max_segments: 4000 }
    }

    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0, max_segments: 4000 }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-10, max_segments: 4000 }
    }
}

/// How a segment's parameter maps to the variate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mapping {
    Identity,
    /// `x = origin + scale·t/(1 − t)²`, t in [0, 1). Integrands decaying
    /// like `x^-p` stay bounded in `t` for `p ≥ 3/2`.
    Upper { origin: f64, scale: f64 },
    /// `x = origin − scale·t/(1 − t)²`, t in [0, 1).
    Lower { origin: f64, scale: f64 },
}

impl Mapping {
    #[inline]
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            Mapping::Identity => (t, 1.0),
            Mapping::Upper { origin, scale } => {
                let q = 1.0 - t;
                (origin + scale * t / (q * q), scale * (1.0 + t) / (q * q * q))
            }
            Mapping::Lower { origin, scale } => {
                let q = 1.0 - t;
                (origin - scale * t / (q * q), scale * (1.0 + t) / (q * q * q))
            }
        }
    }

    /// Variate coordinate of a parameter value, `±inf` at t = 1.
    pub fn to_variate(&self, t: f64) -> f64 {
        match *self {
            Mapping::Identity => t,
            _ if t >= 1.0 => match self {
                Mapping::Upper { .. } => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            },
            _ => self.apply(t).0,
        }
    }
}

/// One leaf of the final adaptive partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
    pub mapping: Mapping,
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub segments: Vec<Segment>,
}

/// Applies the 21-point Kronrod rule to `f` over `[a, b]`, returning the
/// estimate and a QUADPACK-style error bound.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    gk_mapped(f, a, b, Mapping::Identity)
}

fn gk_mapped<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, mapping: Mapping) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |t: f64| {
        let (x, jac) = mapping.apply(t);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };

    let fc = eval(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let h = half.abs();
    let result = res_k * half;
    res_abs *= h;
    res_asc *= h;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

fn leaf<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, mapping: Mapping) -> Segment {
    let (value, error) = gk_mapped(f, a, b, mapping);
    Segment { a, b, value, error, mapping }
}

/// Adaptive driver over an initial list of (possibly mapped) pieces.
fn adapt<F: Fn(f64) -> f64>(f: &F, initial: Vec<Segment>, tol: Tolerance) -> Result<Integral> {
    let mut heap: BinaryHeap<Segment> = initial.into_iter().collect();
    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();

    loop {
        if error <= tol.abs.max(tol.rel * value.abs()) {
            break;
        }
        if heap.len() >= tol.max_segments {
            return Err(Error::Quadrature { estimate: value, error });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            if error <= 10.0 * tol.abs.max(tol.rel * value.abs()) {
                break;
            }
            return Err(Error::Quadrature { estimate: value, error });
        }
        let left = leaf(f, worst.a, mid, worst.mapping);
        let right = leaf(f, mid, worst.b, worst.mapping);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed accumulated cancellation from the running updates.
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| {
        x.mapping_order()
            .cmp(&y.mapping_order())
            .then(x.a.total_cmp(&y.a))
    });
    let value = segments.iter().map(|s| s.value).sum();
    let error = segments.iter().map(|s| s.error).sum();
    Ok(Integral { value, error, segments })
}

impl Segment {
    fn mapping_order(&self) -> u8 {
        match self.mapping {
            Mapping::Lower { .. } => 0,
            Mapping::Identity => 1,
            Mapping::Upper { .. } => 2,
        }
    }

    /// Variate-space bounds of the segment.
    pub fn variate_bounds(&self) -> (f64, f64) {
        let (x0, x1) = (self.mapping.to_variate(self.a), self.mapping.to_variate(self.b));
        if x0 <= x1 {
            (x0, x1)
        } else {
            (x1, x0)
        }
    }
}

/// Integrates `f` over `[a, b]`; either bound may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::InvalidParameter("NaN integration bound".into()));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, segments: Vec::new() });
    }
    if a > b {
        let mut r = integrate(f, b, a, tol)?;
        r.value = -r.value;
        return Ok(r);
    }
    let pieces = match (a.is_finite(), b.is_finite()) {
        (true, true) => vec![leaf(&f, a, b, Mapping::Identity)],
        (true, false) => vec![leaf(&f, 0.0, 1.0, Mapping::Upper { origin: a, scale: 1.0 })],
        (false, true) => vec![leaf(&f, 0.0, 1.0, Mapping::Lower { origin: b, scale: 1.0 })],
        (false, false) => vec![
            leaf(&f, 0.0, 1.0, Mapping::Lower { origin: 0.0, scale: 1.0 }),
            leaf(&f, 0.0, 1.0, Mapping::Upper { origin: 0.0, scale: 1.0 }),
        ],
    };
    adapt(&f, pieces, tol)
}

/// Integrates over a finite interval split at the given sorted breakpoints.
pub fn integrate_partitioned<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let pieces = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| leaf(&f, w[0], w[1], Mapping::Identity))
        .collect();
    adapt(&f, pieces, tol)
}

/// A finite core window with interior breakpoints, outside which the
/// integrand has decayed below [`WINDOW_DECAY`] of its peak.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub breaks: Vec<f64>,
    pub tail_scale: f64,
}

impl Window {
    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    /// Grows a window outward from `center` in doubling steps of `scale`
    /// until `|f|` at each end falls below [`WINDOW_DECAY`] of its peak.
    /// Every doubling point becomes a breakpoint, giving a geometric grid
    /// that resolves both a narrow center and a wide body.
    pub fn grow<F: Fn(f64) -> f64>(f: &F, center: f64, scale: f64, extra: &[f64]) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "window scale must be positive");
        let mut breaks = vec![center];
        breaks.extend(extra.iter().copied().filter(|x| x.is_finite()));

        let mut peak = f(center).abs();
        for &x in extra {
            peak = peak.max(f(x).abs());
        }
        let mut d = 0.5 * scale;
        while d < 4.0 * scale {
            peak = peak.max(f(center - d).abs()).max(f(center + d).abs());
            d *= 2.0;
        }

        let threshold = WINDOW_DECAY * peak;
        let (mut lo_done, mut hi_done) = (false, false);
        let mut d = scale;
        let mut extent = scale;
        for _ in 0..200 {
            if !lo_done {
                breaks.push(center - d);
            }
            if !hi_done {
                breaks.push(center + d);
            }
            extent = d;
            lo_done = lo_done || f(center - d).abs() <= threshold;
            hi_done = hi_done || f(center + d).abs() <= threshold;
            if lo_done && hi_done {
                break;
            }
            d *= 2.0;
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Window { breaks, tail_scale: extent }
    }

    /// Window of a fixed span with the same breakpoint structure.
    pub fn doubled(&self) -> Self {
        let lo = self.lo();
        let hi = self.hi();
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut breaks = self.breaks.clone();
        breaks.push(mid - 2.0 * half);
        breaks.push(mid + 2.0 * half);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Window { breaks, tail_scale: 2.0 * self.tail_scale }
    }

    fn pieces<F: Fn(f64) -> f64>(&self, f: &F, with_tails: bool) -> Vec<Segment> {
        let mut pieces: Vec<Segment> = self
            .breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| leaf(f, w[0], w[1], Mapping::Identity))
            .collect();
        if with_tails {
            let s = self.tail_scale.max(f64::MIN_POSITIVE);
            pieces.push(leaf(f, 0.0, 1.0, Mapping::Lower { origin: self.lo(), scale: s }));
            pieces.push(leaf(f, 0.0, 1.0, Mapping::Upper { origin: self.hi(), scale: s }));
        }
        pieces
    }

    /// Integral over the whole real line: core window plus mapped tails.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, tol: Tolerance) -> Result<Integral> {
        let pieces = self.pieces(&f, true);
        adapt(&f, pieces, tol)
    }

    /// Integral over the core window only.
    pub fn integrate_core<F: Fn(f64) -> f64>(&self, f: F, tol: Tolerance) -> Result<Integral> {
        let pieces = self.pieces(&f, false);
        adapt(&f, pieces, tol)
    }
}

/// Integrates `f` over the real line with an automatically grown window.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    extra_breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let window = Window::grow(&f, center, scale, extra_breaks);
    window.integrate(f, tol)
}
