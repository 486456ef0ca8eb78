//! Globally adaptive 15-point Gauss–Kronrod integration of complex-valued
//! integrands on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Result, TempoError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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

// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-14, max_intervals: 50_000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    /// Integral of `|f|`, the scale of rounding error in `value`.
    magnitude: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut magnitude = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (lo, hi) = (f(centre - dx), f(centre + dx));
        let pair = lo + hi;
        kronrod += pair * WGK[j];
        magnitude += (lo.norm() + hi.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Panel { a, b, value, error, magnitude: magnitude * half.abs() }
}

/// Integrates `f` over `[a, b]`, starting from `initial_panels` equal pieces.
///
/// Start with at least one panel per oscillation period of the integrand;
/// adaptivity alone can mistake an unresolved oscillation for convergence.
pub fn integrate<F>(f: F, a: f64, b: f64, initial_panels: usize, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Complex64,
{
    let n = initial_panels.max(1);
    let width = (b - a) / n as f64;
    let mut heap = BinaryHeap::with_capacity(n * 2);
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut magnitude = 0.0;
    for i in 0..n {
        let lo = a + width * i as f64;
        let hi = if i + 1 == n { b } else { a + width * (i + 1) as f64 };
        let panel = kronrod15(&f, lo, hi);
        value += panel.value;
        error += panel.error;
        magnitude += panel.magnitude;
        heap.push(panel);
    }

    loop {
        // Heavy cancellation can leave the result far below the integrand's
        // scale; no refinement gets under the rounding floor of `∫|f|`.
        let floor = ROUNDOFF * magnitude;
        let tolerance = opts.abs_tol.max(opts.rel_tol * value.norm()).max(floor);
        if error <= tolerance {
            // Re-sum to shed the drift of the running totals.
            let (value, error) = heap
                .iter()
                .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.value, e + p.error));
            return Ok(QuadResult { value, error });
        }
        if heap.len() >= opts.max_intervals.max(n) {
            return Err(TempoError::Quadrature { error, tolerance });
        }
        let worst = heap.pop().expect("non-empty heap");
        value -= worst.value;
        error -= worst.error;
        magnitude -= worst.magnitude;
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; accept what we have.
            value += worst.value;
            magnitude += worst.magnitude;
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        for panel in [kronrod15(&f, worst.a, mid), kronrod15(&f, mid, worst.b)] {
            value += panel.value;
            error += panel.error;
            magnitude += panel.magnitude;
            heap.push(panel);
        }
    }
}

const ROUNDOFF: f64 = 50.0 * f64::EPSILON;
