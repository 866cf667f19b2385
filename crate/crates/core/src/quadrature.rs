//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Used as the numerical cross-check for the closed-form Thomas-Fermi integrals.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae and weights (QUADPACK qk15). Odd indices are the Gauss 7-point nodes.
// Digits are kept as tabulated.
#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over [a, b], bisecting the worst panel until the summed error estimate
/// meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = kronrod15(&mut f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_error = error;

    while total_error > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error: total_error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error: total_error,
            });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        evaluations += 30;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // resum to avoid drift from repeated subtraction
        total = heap.iter().map(|p| p.value).sum();
        total_error = heap.iter().map(|p| p.error).sum();
    }
    Ok(QuadResult {
        value: total,
        error: total_error,
        evaluations,
    })
}

/// Nested quadrature of `f(outer, inner)` over outer ∈ [a, b], inner ∈ [lo(outer), hi(outer)].
pub fn integrate_nested<F, L, H>(
    f: F,
    a: f64,
    b: f64,
    lo: L,
    hi: H,
    opts: QuadOptions,
) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        ..opts
    };
    let mut failure = None;
    let mut evaluations = 0;
    let outer = integrate(
        |y| match integrate(|x| f(y, x), lo(y), hi(y), inner_opts) {
            Ok(r) => {
                evaluations += r.evaluations;
                r.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let mut r = outer?;
    r.evaluations += evaluations;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        // ∫_{-1}^{1} x^k dx = 2/(k+1) for even k
        for k in (0..=22).step_by(2) {
            let (v, _) = kronrod15(&mut |x: f64| x.powi(k), -1.0, 1.0);
            let exact = 2.0 / (k as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn gauss_rule_is_exact_for_degree_13() {
        // the error estimate is |K - G|; it vanishes when both rules are exact
        for k in (0..=12).step_by(2) {
            let (_, e) = kronrod15(&mut |x: f64| x.powi(k), -1.0, 1.0);
            assert!(e < 1e-14, "k={k}: {e}");
        }
        let (_, e) = kronrod15(&mut |x: f64| x.powi(14), -1.0, 1.0);
        assert!(e > 1e-6);
    }

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn square_root_endpoint_singularity() {
        // ∫_0^1 sqrt(1 - x²) dx = π/4
        let r = integrate(
            |x| (1.0 - x * x).max(0.0).sqrt(),
            0.0,
            1.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn nested_unit_disk_area() {
        let r = integrate_nested(
            |_, _| 1.0,
            -1.0,
            1.0,
            |y| -(1.0 - y * y).max(0.0).sqrt(),
            |y| (1.0 - y * y).max(0.0).sqrt(),
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn reports_nonconvergence() {
        let opts = QuadOptions {
            max_intervals: 3,
            abs_tol: 1e-15,
            rel_tol: 0.0,
        };
        let err =
            integrate(|x: f64| (1.0 / x.abs().max(1e-300)).sqrt(), -1.0, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }
}
