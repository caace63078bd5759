//! Exact binomial draws by inversion.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Draws from `Binomial(n, p)` by inverting the CDF, enumerating outcomes from the
/// mode outwards in order of decreasing probability. Exact up to floating-point
/// evaluation of the pmf; expected cost `O(sqrt(n p (1 - p)) + 1)`.
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 || p.is_nan() {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let q = 1.0 - p;
    let nf = n as f64;
    let mode = (((nf + 1.0) * p).floor() as u64).min(n);
    let kf = mode as f64;
    let ln_pmf = ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + kf * p.ln() + (nf - kf) * q.ln();
    let pmf_mode = ln_pmf.exp();
    let ratio = p / q;

    let mut u: f64 = rng.random();
    u -= pmf_mode;
    if u < 0.0 {
        return mode;
    }
    // (next outcome, its pmf) on each side of the mode
    let mut lo = mode.checked_sub(1).map(|k| (k, pmf_mode * (k + 1) as f64 / (n - k) as f64 / ratio));
    let mut hi = (mode < n).then(|| (mode + 1, pmf_mode * (n - mode) as f64 / (mode + 1) as f64 * ratio));
    loop {
        let take_lo = match (lo, hi) {
            (Some((_, pl)), Some((_, ph))) => pl >= ph,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => return mode,
        };
        if take_lo {
            let (k, pk) = lo.expect("checked above");
            u -= pk;
            if u < 0.0 {
                return k;
            }
            lo = (k > 0 && pk > 0.0).then(|| (k - 1, pk * k as f64 / (n - k + 1) as f64 / ratio));
        } else {
            let (k, pk) = hi.expect("checked above");
            u -= pk;
            if u < 0.0 {
                return k;
            }
            hi = (k < n && pk > 0.0).then(|| (k + 1, pk * (n - k) as f64 / (k + 1) as f64 * ratio));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

    #[test]
    fn degenerate_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(binomial(&mut rng, 0, 0.3), 0);
        assert_eq!(binomial(&mut rng, 10, 0.0), 0);
        assert_eq!(binomial(&mut rng, 10, 1.0), 10);
        for _ in 0..100 {
            assert!(binomial(&mut rng, 7, 0.4) <= 7);
        }
    }

    fn chi_square_against_pmf(n: u64, p: f64, draws: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0usize; n as usize + 1];
        for _ in 0..draws {
            counts[binomial(&mut rng, n, p) as usize] += 1;
        }
        let dist = Binomial::new(p, n).unwrap();
        // pool cells with small expectation into their neighbours
        let (mut stat, mut cells, mut obs, mut exp) = (0.0, 0usize, 0.0, 0.0);
        for k in 0..=n {
            obs += counts[k as usize] as f64;
            exp += dist.pmf(k) * draws as f64;
            if exp >= 5.0 {
                stat += (obs - exp).powi(2) / exp;
                cells += 1;
                obs = 0.0;
                exp = 0.0;
            }
        }
        if exp > 0.0 {
            stat += (obs - exp).powi(2) / exp.max(1e-12);
            cells += 1;
        }
        let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "n={n} p={p}: chi2 {stat} >= {critical}");
    }

    #[test]
    fn matches_binomial_pmf() {
        chi_square_against_pmf(10, 0.3, 50_000, 1);
        chi_square_against_pmf(1000, 0.5, 50_000, 2);
        chi_square_against_pmf(200, 0.01, 50_000, 3);
        chi_square_against_pmf(200, 0.97, 50_000, 4);
    }

    #[test]
    fn large_n_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, p) = (1_000_000u64, 0.3);
        let draws: Vec<f64> = (0..2000).map(|_| binomial(&mut rng, n, p) as f64).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((mean - n as f64 * p).abs() < 4.0 * sd / (draws.len() as f64).sqrt());
    }
}
