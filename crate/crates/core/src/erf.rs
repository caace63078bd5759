//! Error function.
//!
//! Rational approximations from FreeBSD's `s_erf.c` (Sun Microsystems, 1993;
//! freely redistributable with this notice). Each evaluation produces both
//! `erf(|x|)` and `erfc(|x|)` from a single polynomial pass so that differences
//! `erf(b) - erf(a)` can be formed without cancellation in the tails.
//!
//! Special cases: `erf(±inf) = ±1`, `erf(NaN) = NaN`, `erf(0) = 0`.

#![allow(clippy::excessive_precision)]

const ERX: f64 = 8.45062911510467529297e-01;
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

const VERY_TINY: f64 = 2.848094538889218e-306;
const SMALL: f64 = 3.725_290_298_461_914e-9; // 2^-28

/// `erf(|x|)` and `erfc(|x|)` together with the sign of `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ErfPoint {
    pub negative: bool,
    pub erf_abs: f64,
    pub erfc_abs: f64,
}

impl ErfPoint {
    pub const POS_INF: ErfPoint = ErfPoint { negative: false, erf_abs: 1.0, erfc_abs: 0.0 };
    pub const NEG_INF: ErfPoint = ErfPoint { negative: true, erf_abs: 1.0, erfc_abs: 0.0 };

    #[inline]
    pub fn erf(&self) -> f64 {
        if self.negative {
            -self.erf_abs
        } else {
            self.erf_abs
        }
    }
}

/// Evaluates `erf` and `erfc` at `|x|` in one pass.
#[inline]
pub(crate) fn erf_point(x: f64) -> ErfPoint {
    if x.is_nan() {
        return ErfPoint { negative: false, erf_abs: f64::NAN, erfc_abs: f64::NAN };
    }
    let negative = x < 0.0;
    let ax = x.abs();
    let (erf_abs, erfc_abs) = erf_erfc_abs(ax);
    ErfPoint { negative, erf_abs, erfc_abs }
}

#[inline]
fn erf_erfc_abs(x: f64) -> (f64, f64) {
    if x < 0.84375 {
        if x < SMALL {
            let e = if x < VERY_TINY { 0.125 * (8.0 * x + EFX8 * x) } else { x + EFX * x };
            return (e, 1.0 - e);
        }
        let z = x * x;
        let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
        let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
        let y = r / s;
        let e = x + x * y;
        let ec = if x < 0.25 { 1.0 - e } else { 0.5 - (x * y + (x - 0.5)) };
        return (e, ec);
    }
    if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return (ERX + p / q, 1.0 - ERX - p / q);
    }
    if x >= 28.0 {
        return (1.0, 0.0);
    }
    let s = 1.0 / (x * x);
    let (r, ss) = if x < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1 + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // high word of x only, so z*z is exact
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let ec = (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / ss).exp() / x;
    let e = if x >= 6.0 { 1.0 } else { 1.0 - ec };
    (e, ec)
}

/// `erf(hi) - erf(lo)` for `lo <= hi`, choosing the representation that avoids
/// cancellation when both endpoints sit in the same tail.
#[inline]
pub(crate) fn erf_interval(lo: ErfPoint, hi: ErfPoint) -> f64 {
    let v = match (lo.negative, hi.negative) {
        (false, false) => {
            if lo.erf_abs >= 0.5 {
                lo.erfc_abs - hi.erfc_abs
            } else {
                hi.erf_abs - lo.erf_abs
            }
        }
        (true, true) => {
            if hi.erf_abs >= 0.5 {
                hi.erfc_abs - lo.erfc_abs
            } else {
                lo.erf_abs - hi.erf_abs
            }
        }
        (true, false) => lo.erf_abs + hi.erf_abs,
        (false, true) => -(lo.erf_abs + hi.erf_abs),
    };
    v.max(0.0)
}

/// The error function `erf(x) = 2/sqrt(pi) * int_0^x exp(-t^2) dt`.
pub fn erf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return -1.0;
    }
    if x == 0.0 {
        return x;
    }
    erf_point(x).erf()
}

/// The complementary error function `1 - erf(x)`.
pub fn erfc(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 2.0;
    }
    let p = erf_point(x);
    if p.negative {
        1.0 + p.erf_abs
    } else {
        p.erfc_abs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series, summed until the terms vanish; accurate for |x| <= 3.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / n;
            let contrib = term / (2.0 * n + 1.0);
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn reference_values() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(1.0) - 0.8427007929497149).abs() <= 1e-15);
        assert!((erf(10.0) - 1.0).abs() <= 1e-15);
        assert!((erf(-1.0) + 0.8427007929497149).abs() <= 1e-15);
        assert_eq!(erf(f64::INFINITY), 1.0);
        assert_eq!(erf(f64::NEG_INFINITY), -1.0);
        assert!(erf(f64::NAN).is_nan());
    }

    #[test]
    fn matches_series_oracle() {
        // the series loses digits to cancellation beyond |x| ~ 2, so compare there only
        let mut x = -2.0;
        while x <= 2.0 {
            let diff = (erf(x) - erf_series(x)).abs();
            assert!(diff <= 1e-14, "x={x} diff={diff}");
            x += 0.0173;
        }
    }

    #[test]
    fn odd_and_monotone() {
        let mut prev = -1.0;
        for i in -600..=600 {
            let x = i as f64 * 0.01;
            let v = erf(x);
            assert_eq!(v, -erf(-x));
            assert!(v >= prev);
            assert!(v.abs() <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn erfc_complements_erf() {
        for i in -50..=50 {
            let x = i as f64 * 0.1;
            assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-15, "x={x}");
        }
        // tail accuracy: erfc(5) = 1.5374597944280348e-12
        assert!((erfc(5.0) / 1.5374597944280348e-12 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn interval_avoids_tail_cancellation() {
        let lo = erf_point(6.0);
        let hi = erf_point(6.5);
        let d = erf_interval(lo, hi);
        let expected = erfc(6.0) - erfc(6.5);
        assert!(d > 0.0);
        assert!((d / expected - 1.0).abs() < 1e-14);
        let d_neg = erf_interval(erf_point(-6.5), erf_point(-6.0));
        assert_eq!(d, d_neg);
        let straddle = erf_interval(erf_point(-0.3), erf_point(0.7));
        assert!((straddle - (erf(0.7) - erf(-0.3))).abs() < 1e-16);
        assert_eq!(erf_interval(ErfPoint::NEG_INF, ErfPoint::POS_INF), 2.0);
    }
}
