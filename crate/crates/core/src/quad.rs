//! Gaussian expectation of the soft-Coulomb kernel.
//!
//! The pair interaction enters every matrix element through
//! E[f(ξ)] with f(r) = 1/√(r²+1) and ξ ~ Normal(μ, σ²), equal to the
//! one-dimensional integral
//!
//! (1/√π) ∫₀^∞ u^{-1/2} e^{-u} (1+2σ²u)^{-1/2} exp(-uμ²/(1+2σ²u)) du.
//!
//! The substitution u = sinh²θ/(2σ²) removes the endpoint singularity and
//! compactifies the decay:
//!
//! E[f] = √(2/(πσ²)) ∫₀^Θ exp(-(sinh²θ + μ²tanh²θ)/(2σ²)) dθ + tail,
//!
//! with an analytic integrand that falls off doubly exponentially; the
//! cutoff Θ is placed where the exponent reaches 45, making the dropped
//! tail ≤ e⁻⁴⁵ in relative terms. The finite integral is then evaluated by
//! adaptive Gauss-Kronrod (G10/K21) panels with bisection until the summed
//! error estimate meets the requested absolute tolerance. Non-convergence
//! is a hard error carrying diagnostics, never a degraded value.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponent cutoff: the integrand is dropped once it is e⁻⁴⁵ of its peak.
const EXPONENT_CUTOFF: f64 = 45.0;

/// Variance below which the kernel is evaluated at the mean: the error of
/// the delta limit is ½σ²·max|f''| = σ², below any tolerance in use.
const DELTA_LIMIT_VARIANCE: f64 = 1e-13;

const MAX_PANELS: usize = 256;

/// E[1/√(ξ²+1)] for ξ ~ Normal(mu, sigma2), to absolute tolerance `tol`.
///
/// `sigma2` may be zero (point-particle limit); negative variance is a usage
/// error from an invalid merged form.
pub fn soft_coulomb_expectation<S: Scalar>(mu: S, sigma2: S, tol: S) -> Result<S> {
    let one = S::one();
    if sigma2 < S::zero() {
        return Err(Error::Usage(format!(
            "negative variance {} in soft-Coulomb expectation",
            sigma2.to_f64()
        )));
    }
    if sigma2 <= S::lit(DELTA_LIMIT_VARIANCE) {
        return Ok(one / (mu * mu + one).sqrt());
    }

    let two_sigma2 = S::lit(2.0) * sigma2;
    let mu2 = mu * mu;
    // exponent g(θ) = sinh²θ + μ²tanh²θ, increasing; find g(Θ) = 2σ²·cutoff
    let target = two_sigma2 * S::lit(EXPONENT_CUTOFF);
    let theta_max = {
        let mut lo = S::zero();
        let mut hi = (target.sqrt() + (target + one).sqrt()).ln(); // asinh(√target)
        for _ in 0..80 {
            let mid = (lo + hi) * S::lit(0.5);
            let sh = mid.sinh();
            let th = mid.tanh();
            if sh * sh + mu2 * th * th < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };

    let integrand = |theta: S| {
        let sh = theta.sinh();
        let th = theta.tanh();
        (-(sh * sh + mu2 * th * th) / two_sigma2).exp()
    };

    let prefactor = (S::lit(2.0) / (S::pi() * sigma2)).sqrt();
    let integral = adaptive_gk21(&integrand, S::zero(), theta_max, tol / prefactor).map_err(
        |achieved| {
            Error::QuadratureFailure(format!(
                "soft-Coulomb kernel at mu={}, sigma2={}: error estimate {:.3e} > tolerance {:.3e} \
                 after {MAX_PANELS} panels",
                mu.to_f64(),
                sigma2.to_f64(),
                achieved,
                (tol / prefactor).to_f64(),
            ))
        },
    )?;
    Ok(prefactor * integral)
}

/// Gauss-Kronrod 21-point nodes (positive half) and weights; the embedded
/// 10-point Gauss weights pair with the odd-index nodes.
const XGK21: [f64; 11] = [
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
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One G10/K21 evaluation on [a, b]: returns (Kronrod value, error estimate).
fn gk21_panel<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S) -> (S, S) {
    let half = S::lit(0.5);
    let center = (a + b) * half;
    let h = (b - a) * half;

    let fc = f(center);
    let mut result_kronrod = S::lit(WGK21[10]) * fc;
    let mut result_gauss = S::zero();
    for j in 0..5 {
        let x = h * S::lit(XGK21[2 * j + 1]);
        let fsum = f(center - x) + f(center + x);
        result_gauss += S::lit(WG10[j]) * fsum;
        result_kronrod += S::lit(WGK21[2 * j + 1]) * fsum;
    }
    for j in 0..5 {
        let x = h * S::lit(XGK21[2 * j]);
        let fsum = f(center - x) + f(center + x);
        result_kronrod += S::lit(WGK21[2 * j]) * fsum;
    }
    let value = result_kronrod * h;
    let err = ((result_kronrod - result_gauss) * h).abs();
    (value, err)
}

/// Adaptive panel bisection until the summed error estimate is ≤ tol.
/// Err carries the achieved error estimate for diagnostics.
fn adaptive_gk21<S: Scalar, F: Fn(S) -> S>(
    f: &F,
    a: S,
    b: S,
    tol: S,
) -> std::result::Result<S, f64> {
    struct Panel<S> {
        a: S,
        b: S,
        value: S,
        err: S,
    }
    let (value, err) = gk21_panel(f, a, b);
    let mut panels = vec![Panel { a, b, value, err }];
    loop {
        let total_err: S = panels.iter().map(|p| p.err).fold(S::zero(), |acc, e| acc + e);
        if total_err <= tol {
            return Ok(panels.iter().map(|p| p.value).fold(S::zero(), |acc, v| acc + v));
        }
        if panels.len() >= MAX_PANELS {
            return Err(total_err.to_f64());
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.err.partial_cmp(&q.err).expect("finite error estimates"))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = (a + b) * S::lit(0.5);
        let (v1, e1) = gk21_panel(f, a, mid);
        let (v2, e2) = gk21_panel(f, mid, b);
        panels.push(Panel { a, b: mid, value: v1, err: e1 });
        panels.push(Panel { a: mid, b, value: v2, err: e2 });
    }
}
