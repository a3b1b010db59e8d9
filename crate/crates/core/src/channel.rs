//! Network and channel model.
//!
//! Node `i` is a neighbour of the query with probability `k / N`
//! independently of all others. A neighbour's coefficient has modulus `u`
//! with density
//!
//! ```text
//! f(u) = (4 / alpha) * eta^(2/alpha) / u^(4/alpha + 1),   u >= sqrt(eta)
//! ```
//!
//! and the query hears `y_bar = sqrt(gamma) A^q x + w` on its off slots, with
//! `w` i.i.d. circular complex Gaussian of unit variance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::CollapsedCodebook;
use crate::{Complex64, Error, Result};

pub fn snr_db_to_gamma(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

pub fn gamma_to_snr_db(gamma: f64) -> f64 {
    10.0 * gamma.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of nodes `N`.
    pub nodes: usize,
    /// Mean neighbour count `k`.
    pub mean_neighbours: f64,
    /// Neighbour threshold `eta`.
    pub eta: f64,
    /// Path-loss exponent `alpha`.
    pub alpha: f64,
    /// `10 log10(gamma)`.
    pub snr_db: f64,
}

impl NetworkConfig {
    pub fn gamma(&self) -> f64 {
        snr_db_to_gamma(self.snr_db)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.nodes == 0 {
            return bad("network needs at least one node");
        }
        if !(self.mean_neighbours > 0.0 && self.mean_neighbours <= self.nodes as f64) {
            return bad("mean neighbour count must lie in (0, N]");
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !self.snr_db.is_finite() {
            return bad("SNR must be finite");
        }
        Ok(())
    }
}

/// How neighbour coefficients are phased.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// `x_i = u_i`.
    #[default]
    Real,
    /// `x_i = u_i e^{j theta}`, `theta` uniform on `[0, 2 pi)`.
    Complex,
}

impl std::fmt::Display for PhaseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhaseMode::Real => "real",
            PhaseMode::Complex => "complex",
        })
    }
}

/// Neighbour set of a query node and the link coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    /// Neighbour columns, ascending.
    pub support: Vec<usize>,
    /// `coefficients[k]` belongs to `support[k]`.
    pub coefficients: Vec<Complex64>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn entries(&self) -> Vec<(usize, Complex64)> {
        self.support.iter().copied().zip(self.coefficients.iter().copied()).collect()
    }

    pub fn to_dense(&self, len: usize) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); len];
        for (j, v) in self.entries() {
            x[j] = v;
        }
        x
    }
}

/// Includes each index of `0..nodes` except `exclude` independently with
/// probability `k / nodes`. One uniform draw is consumed per index,
/// including the excluded one.
pub fn sample_support<R: Rng + ?Sized>(
    nodes: usize,
    k: f64,
    exclude: Option<usize>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(k > 0.0 && k <= nodes as f64) {
        return Err(Error::InvalidParameter(format!("k = {k} outside (0, {nodes}]")));
    }
    let p = k / nodes as f64;
    Ok((0..nodes)
        .filter(|&i| {
            let hit = rng.random::<f64>() < p;
            hit && Some(i) != exclude
        })
        .collect())
}

/// Inverse-CDF gain draw: `sqrt(eta) (1 - U)^(-alpha/4)` for `U` in `[0, 1)`.
pub fn sample_gain(eta: f64, alpha: f64, uniform: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&uniform));
    eta.sqrt() * (1.0 - uniform).powf(-alpha / 4.0)
}

/// `P(u' <= u) = 1 - eta^(2/alpha) u^(-4/alpha)` for `u >= sqrt(eta)`.
pub fn gain_cdf(eta: f64, alpha: f64, u: f64) -> f64 {
    if u < eta.sqrt() {
        0.0
    } else {
        1.0 - eta.powf(2.0 / alpha) * u.powf(-4.0 / alpha)
    }
}

pub fn gain_pdf(eta: f64, alpha: f64, u: f64) -> f64 {
    if u < eta.sqrt() {
        0.0
    } else {
        4.0 / alpha * eta.powf(2.0 / alpha) / u.powf(4.0 / alpha + 1.0)
    }
}

/// Draws the neighbour set of `query` and its coefficients. Each neighbour
/// consumes a gain uniform and a phase uniform in both phase modes, so real
/// and complex draws from the same stream have identical moduli.
pub fn sample_ground_truth<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    query: usize,
    rng: &mut R,
    phase: PhaseMode,
) -> Result<GroundTruth> {
    cfg.validate()?;
    let support = sample_support(cfg.nodes, cfg.mean_neighbours, Some(query), rng)?;
    let coefficients = support
        .iter()
        .map(|_| {
            let u = sample_gain(cfg.eta, cfg.alpha, rng.random::<f64>());
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            match phase {
                PhaseMode::Real => Complex64::new(u, 0.0),
                PhaseMode::Complex => Complex64::from_polar(u, theta),
            }
        })
        .collect();
    Ok(GroundTruth { support, coefficients })
}

/// `len` i.i.d. CN(0, 1) samples.
pub fn complex_gaussian_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let sd = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })
        .collect()
}

/// Received samples on the query's off slots.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub y_bar: Vec<Complex64>,
    pub noise_seed: u64,
}

/// `y_bar = sqrt(gamma) A^q x + w`, with `w` drawn from `noise_seed`.
pub fn synthesize_measurement(
    collapsed: &CollapsedCodebook<'_>,
    truth: &GroundTruth,
    gamma: f64,
    noise_seed: u64,
) -> Result<Measurement> {
    if let Some(&bad) = truth.support.iter().find(|&&j| j >= collapsed.n_cols()) {
        return Err(Error::DimensionMismatch { expected: collapsed.n_cols(), actual: bad + 1 });
    }
    if truth.support.len() != truth.coefficients.len() {
        return Err(Error::DimensionMismatch { expected: truth.support.len(), actual: truth.coefficients.len() });
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma}")));
    }
    let signal = collapsed.forward_sparse(&truth.entries());
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let noise = complex_gaussian_noise(signal.len(), &mut rng);
    let amp = gamma.sqrt();
    let y_bar = signal.iter().zip(noise).map(|(s, w)| s * amp + w).collect();
    Ok(Measurement { y_bar, noise_seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_sparse_kerdock, collapse_for_query, Codebook};

    fn cfg(nodes: usize, k: f64) -> NetworkConfig {
        NetworkConfig { nodes, mean_neighbours: k, eta: 0.05, alpha: 3.0, snr_db: 20.0 }
    }

    #[test]
    fn snr_conversion() {
        assert!((snr_db_to_gamma(20.0) - 100.0).abs() < 1e-12);
        assert!((gamma_to_snr_db(1000.0) - 30.0).abs() < 1e-12);
        assert!((cfg(4, 1.0).gamma() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(10, 5.0).validate().is_ok());
        assert!(cfg(10, 11.0).validate().is_err());
        assert!(cfg(0, 1.0).validate().is_err());
        assert!(NetworkConfig { eta: 0.0, ..cfg(10, 1.0) }.validate().is_err());
        assert!(NetworkConfig { alpha: -1.0, ..cfg(10, 1.0) }.validate().is_err());
    }

    #[test]
    fn full_probability_support_excludes_query() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_support(50, 50.0, Some(7), &mut rng).unwrap();
        assert_eq!(s.len(), 49);
        assert!(!s.contains(&7));
        assert!(sample_support(50, 0.0, None, &mut rng).is_err());
    }

    #[test]
    fn tiny_k_gives_empty_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let empty = (0..100).filter(|_| sample_support(1000, 1e-6, None, &mut rng).unwrap().is_empty()).count();
        assert!(empty >= 99);
    }

    #[test]
    fn support_size_mean_matches_k() {
        // N = 2^15, k = 5: 1000 draws, mean within 4 sigma = 4 sqrt(5)/sqrt(1000).
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 1000;
        let total: usize = (0..draws).map(|_| sample_support(1 << 15, 5.0, None, &mut rng).unwrap().len()).sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 5.0).abs() < 4.0 * 5f64.sqrt() / (draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn gain_inverse_cdf_values() {
        assert_eq!(sample_gain(0.05, 3.0, 0.0), 0.05f64.sqrt());
        assert!((sample_gain(0.05, 3.0, 0.0) - 0.22360).abs() < 1e-5);
        let half = sample_gain(0.05, 3.0, 0.5);
        assert!((half - 0.37606).abs() < 1e-5, "{half}");
        assert!((gain_cdf(0.05, 3.0, half) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pdf_integrates_to_half_at_median() {
        // Composite Simpson on [sqrt(eta), 0.37606] in log space.
        let (eta, alpha) = (0.05f64, 3.0);
        let (lo, hi) = (eta.sqrt(), sample_gain(eta, alpha, 0.5));
        let n = 2000;
        let h = (hi.ln() - lo.ln()) / n as f64;
        let f = |t: f64| {
            let u = t.exp();
            gain_pdf(eta, alpha, u) * u
        };
        let mut acc = f(lo.ln()) + f(hi.ln());
        for i in 1..n {
            let t = lo.ln() + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        let mass = acc * h / 3.0;
        assert!((mass - 0.5).abs() < 1e-9, "{mass}");
    }

    #[test]
    fn gain_empirical_cdf_matches_analytic() {
        let (eta, alpha): (f64, f64) = (0.05, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_gain(eta, alpha, rng.random())).collect();
        assert!(draws.iter().all(|&u| u >= eta.sqrt()));
        for u in [0.23, 0.3, 0.5, 1.0, 3.0] {
            let emp = draws.iter().filter(|&&d| d <= u).count() as f64 / n as f64;
            let p = gain_cdf(eta, alpha, u);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((emp - p).abs() < 5.0 * sigma + 1e-12, "u={u}: {emp} vs {p}");
        }
    }

    #[test]
    fn ground_truth_modes() {
        let c = cfg(4096, 20.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(4);
        let mut r2 = ChaCha8Rng::seed_from_u64(4);
        let real = sample_ground_truth(&c, 10, &mut r1, PhaseMode::Real).unwrap();
        let cplx = sample_ground_truth(&c, 10, &mut r2, PhaseMode::Complex).unwrap();
        assert_eq!(real.support, cplx.support);
        assert!(!real.is_empty());
        for (a, b) in real.coefficients.iter().zip(&cplx.coefficients) {
            assert_eq!(a.im, 0.0);
            assert!(a.re >= 0.05f64.sqrt());
            assert!((a.re - b.norm()).abs() < 1e-12);
        }
        assert!(cplx.coefficients.iter().any(|v| v.im.abs() > 1e-6));
    }

    #[test]
    fn noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = complex_gaussian_noise(100_000, &mut rng);
        let var_re = w.iter().map(|v| v.re * v.re).sum::<f64>() / w.len() as f64;
        let var_im = w.iter().map(|v| v.im * v.im).sum::<f64>() / w.len() as f64;
        assert!((var_re - 0.5).abs() < 0.025 && (var_im - 0.5).abs() < 0.025);
    }

    #[test]
    fn zero_truth_gives_unit_variance_noise() {
        let s = build_sparse_kerdock(4).unwrap();
        let c = collapse_for_query(&s, 99, false).unwrap();
        let meas = synthesize_measurement(&c, &GroundTruth::default(), 100.0, 8).unwrap();
        assert_eq!(meas.y_bar.len(), 240);
        let var = meas.y_bar.iter().map(|v| v.norm_sqr()).sum::<f64>() / 240.0;
        assert!((var - 1.0).abs() < 0.1 * 1.0 + 0.1, "{var}");
        let again = synthesize_measurement(&c, &GroundTruth::default(), 100.0, 8).unwrap();
        assert_eq!(meas, again);
    }

    #[test]
    fn measurement_is_signal_plus_noise() {
        let s = build_sparse_kerdock(3).unwrap();
        let c = collapse_for_query(&s, 0, false).unwrap();
        let truth = GroundTruth {
            support: vec![5, 300],
            coefficients: vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 1.0)],
        };
        let noisy = synthesize_measurement(&c, &truth, 4.0, 1).unwrap();
        let noise = synthesize_measurement(&c, &GroundTruth::default(), 4.0, 1).unwrap();
        let signal = c.forward(&truth.to_dense(s.cols())).unwrap();
        for ((y, w), a) in noisy.y_bar.iter().zip(&noise.y_bar).zip(&signal) {
            assert!((y - w - a * 2.0).norm() < 1e-12);
        }
        let bad = GroundTruth { support: vec![512], coefficients: vec![Complex64::new(1.0, 0.0)] };
        assert!(synthesize_measurement(&c, &bad, 1.0, 0).is_err());
    }
}
