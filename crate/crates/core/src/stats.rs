//! Normal distribution and binomial primitives used by the certifier.
//!
//! Binomial probabilities are evaluated with the saddle-point form of the
//! point mass (Loader's `stirlerr`/`bd0` decomposition), so tail sums keep
//! full relative precision for `n` in the hundreds of thousands. Clopper–Pearson
//! bounds are found by bisection on those exact tails.

use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Bisection stops once the bracket is narrower than this.
pub const BOUND_TOLERANCE: f64 = 1e-12;
/// Hard cap on bisection steps.
pub const BOUND_MAX_ITER: usize = 200;

/// Significance level `α` of a statistical test, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SignificanceLevel(f64);

impl SignificanceLevel {
    pub const DEFAULT: SignificanceLevel = SignificanceLevel(0.001);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(SignificanceLevel(alpha))
        } else {
            Err(Error::Domain { op: "significance level", value: alpha })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Bonferroni split into two simultaneous tests.
    pub fn halved(self) -> Self {
        SignificanceLevel(self.0 / 2.0)
    }
}

impl Default for SignificanceLevel {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Standard normal CDF `Φ(z)`.
///
/// Evaluated through `erfc`, which keeps relative precision in the lower tail.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * core::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse standard normal CDF `Φ⁻¹(p)` for `p ∈ (0, 1)`.
///
/// Wichura's AS241 rational approximation on the smaller tail followed by one
/// Newton step. Working on `min(p, 1 - p)` makes `Φ⁻¹(1 - p) = -Φ⁻¹(p)` exact.
pub fn inv_std_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { op: "inverse normal CDF", value: p });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (tail, upper) = if p < 0.5 { (p, false) } else { (1.0 - p, true) };
    let mut z = as241_lower(tail);
    let density = std_normal_pdf(z);
    if density > 0.0 {
        z -= (std_normal_cdf(z) - tail) / density;
    }
    Ok(if upper { -z } else { z })
}

// AS241 (PPND16) restricted to p < 0.5; the result is negative.
fn as241_lower(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r + 3.930_789_580_009_271e4) * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let mut r = libm::sqrt(-libm::log(p));
    let value = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den =
            ((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r + 1.519_866_656_361_645_7e-2) * r
                + 1.481_039_764_274_800_8e-1)
                * r
                + 6.897_673_349_851e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den =
            ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r + 1.846_318_317_510_054_8e-5) * r
                + 7.868_691_311_456_133e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358e-1)
                * r
                + 5.998_322_065_558_88e-1)
                * r
                + 1.0;
        num / den
    };
    -value
}

// ln(n!) - ln(sqrt(2πn) (n/e)^n), the Stirling remainder.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return libm::lgamma(n + 1.0) - (n + 0.5) * libm::log(n) + n - 0.5 * LN_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

// Deviance term x ln(x / np) + np - x without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        let mut j = 1.0;
        loop {
            ej *= v;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s {
                return next;
            }
            s = next;
            j += 1.0;
        }
    }
    x * libm::log(x / np) + np - x
}

/// `ln P(Bin(n, p) = k)` for `0 < p < 1` and `k ≤ n`.
fn ln_binom_pmf(k: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    let (kf, nf) = (k as f64, n as f64);
    if k == 0 {
        return if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * libm::log(q) };
    }
    if k == n {
        return if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * libm::log(p) };
    }
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nf - kf) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = LN_2PI + libm::log(kf) + libm::log1p(-kf / nf);
    lc - 0.5 * lf
}

/// `P(Bin(n, p) ≥ k)`.
pub fn binom_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let odds = p / (1.0 - p);
    if (k as f64) > (n as f64) * p {
        // Terms decrease from k upward.
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut i = k;
        while i < n {
            term *= (n - i) as f64 / (i + 1) as f64 * odds;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            i += 1;
        }
        libm::exp(ln_binom_pmf(k, n, p) + libm::log(sum))
    } else {
        // Complement of P(X ≤ k - 1); terms decrease from k - 1 downward.
        let top = k - 1;
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut i = top;
        while i > 0 {
            term *= i as f64 / (n - i + 1) as f64 / odds;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            i -= 1;
        }
        1.0 - libm::exp(ln_binom_pmf(top, n, p) + libm::log(sum))
    }
}

/// One-sided p-value for "success probability exceeds one half":
/// `P(Bin(n, 1/2) ≥ k)`.
pub fn binom_p_value(k: u64, n: u64) -> Result<f64> {
    if n == 0 || k > n {
        return Err(Error::InvalidCounts { k, n });
    }
    Ok(binom_upper_tail(k, n, 0.5))
}

/// One-sided Clopper–Pearson lower bound at confidence `1 - α`: the largest
/// `L` with `P(Bin(n, L) ≥ k) ≤ α`.
pub fn clopper_pearson_lower(k: u64, n: u64, alpha: SignificanceLevel) -> Result<f64> {
    if n == 0 || k > n {
        return Err(Error::InvalidCounts { k, n });
    }
    let alpha = alpha.get();
    if k == 0 {
        return Ok(0.0);
    }
    if k == n {
        return Ok(libm::exp(libm::log(alpha) / n as f64));
    }
    let (mut lo, mut hi) = (0.0_f64, k as f64 / n as f64);
    for _ in 0..BOUND_MAX_ITER {
        if hi - lo <= BOUND_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if binom_upper_tail(k, n, mid) <= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// One-sided Clopper–Pearson upper bound, `1 - lower(n - k)`.
pub fn clopper_pearson_upper(k: u64, n: u64, alpha: SignificanceLevel) -> Result<f64> {
    if n == 0 || k > n {
        return Err(Error::InvalidCounts { k, n });
    }
    Ok(1.0 - clopper_pearson_lower(n - k, n, alpha)?)
}
