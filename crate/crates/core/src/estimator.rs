//! Inferring the average edge entanglement from the walker's return statistics.
//!
//! The time-averaged probability `pi_0` of finding the walker at its start
//! site grows with the edge parameter. Sampling position measurements at
//! times `1..=T` and inverting a precomputed curve `alpha -> pi_0(alpha)`
//! yields an estimate of the mean edge parameter.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Beta, Binomial, Distribution as _};
use serde::{Deserialize, Serialize};

use crate::conditional::ConditionalEnsemble;
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, MAX_ALPHA};
use crate::spectral::PerWalkStationary;
use crate::walk::CoinState;

/// Above this spread the curve, built for homogeneous networks, becomes unreliable.
pub const HETEROGENEITY_WARN_FRACTION: f64 = 0.2;
/// Default tomography cost per edge for the direct method.
pub const DEFAULT_M_E: u64 = 100_000;
const MEAN_REDRAW_TOL: f64 = 0.05;
const MAX_REDRAWS: usize = 10_000;
const Z95: f64 = 1.959963984540054;

/// Draws inhomogeneous networks with a prescribed mean and spread of edge parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousSampler {
    pub mean_alpha: f64,
    /// Fraction of the largest standard deviation possible for this mean on `[0, 0.5]`.
    pub sigma_fraction: f64,
    pub seed: u64,
}

/// Largest standard deviation of a variable on `[0, 0.5]` with mean `mean`.
pub fn sigma_max(mean: f64) -> f64 {
    (mean * (MAX_ALPHA - mean)).max(0.0).sqrt()
}

impl InhomogeneousSampler {
    pub fn new(mean_alpha: f64, sigma_fraction: f64, seed: u64) -> Result<Self> {
        if !(mean_alpha > 0.0 && mean_alpha < MAX_ALPHA) {
            return Err(Error::InvalidSampler(format!("mean {mean_alpha} must lie in (0, 0.5)")));
        }
        if !(0.0..=1.0).contains(&sigma_fraction) {
            return Err(Error::InvalidSampler(format!("sigma fraction {sigma_fraction} must lie in [0, 1]")));
        }
        Ok(InhomogeneousSampler { mean_alpha, sigma_fraction, seed })
    }

    pub fn target_sigma(&self) -> f64 {
        self.sigma_fraction * sigma_max(self.mean_alpha)
    }

    /// Draws `n` edge parameters from a Beta law on `[0, 0.5]` with the target
    /// mean and variance (redrawing while the sample mean is far off), then
    /// rescales them toward one endpoint so the realized mean is exact while
    /// every value stays in range.
    pub fn sample(&self, n: usize) -> Result<NetworkSpec> {
        let mean = self.mean_alpha;
        if self.sigma_fraction == 0.0 {
            return NetworkSpec::homogeneous(n, mean);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let m = mean / MAX_ALPHA;
        let draw = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            Ok(if self.sigma_fraction >= 1.0 {
                // the variance bound is attained only by mass on the two endpoints
                let coin = Bernoulli::new(m).map_err(|e| Error::InvalidSampler(e.to_string()))?;
                (0..n).map(|_| if coin.sample(rng) { MAX_ALPHA } else { 0.0 }).collect()
            } else {
                let v = (self.target_sigma() / MAX_ALPHA).powi(2);
                let k = m * (1.0 - m) / v - 1.0;
                let beta = Beta::new(m * k, (1.0 - m) * k).map_err(|e| Error::InvalidSampler(e.to_string()))?;
                (0..n).map(|_| (MAX_ALPHA * beta.sample(rng)).clamp(0.0, MAX_ALPHA)).collect()
            })
        };
        let mean_of = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
        // Redraw until the sample mean is already close to the target, so the
        // correction below barely shrinks the spread.
        let tol = MEAN_REDRAW_TOL * self.target_sigma();
        let mut clamped = draw(&mut rng)?;
        for _ in 0..MAX_REDRAWS {
            if (mean_of(&clamped) - mean).abs() <= tol {
                break;
            }
            let next = draw(&mut rng)?;
            if (mean_of(&next) - mean).abs() < (mean_of(&clamped) - mean).abs() {
                clamped = next;
            }
        }
        let xbar = clamped.iter().sum::<f64>() / n as f64;
        // scale toward the endpoint on the far side of the target mean
        let alphas: Vec<f64> = if xbar == 0.0 || xbar == MAX_ALPHA {
            vec![mean; n]
        } else if xbar > mean {
            clamped.iter().map(|&x| x * mean / xbar).collect()
        } else {
            let r = (MAX_ALPHA - mean) / (MAX_ALPHA - xbar);
            clamped.iter().map(|&x| (MAX_ALPHA - (MAX_ALPHA - x) * r).clamp(0.0, MAX_ALPHA)).collect()
        };
        if realized_sigma(&alphas) == 0.0 {
            return Err(Error::InfeasibleSigma(format!(
                "all {n} draws coincide; target sigma {:.4} cannot be realized (seed {})",
                self.target_sigma(),
                self.seed
            )));
        }
        NetworkSpec::new(n, alphas)
    }
}

/// Sample standard deviation (denominator `n - 1`).
pub fn realized_sigma(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Counts of walker detections at the start site, `shots_per_time` shots at each time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub times: Vec<usize>,
    pub shots_per_time: u64,
    pub counts_at_origin: Vec<u64>,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn total_measurements(&self) -> u64 {
        self.shots_per_time * self.times.len() as u64
    }

    /// `sum counts / (T m_w)`.
    pub fn pi0_hat(&self) -> f64 {
        self.counts_at_origin.iter().sum::<u64>() as f64 / self.total_measurements() as f64
    }

    /// Binomial standard error of [`Self::pi0_hat`].
    pub fn standard_error(&self) -> f64 {
        let p = self.pi0_hat();
        (p * (1.0 - p) / self.total_measurements() as f64).sqrt()
    }
}

/// Draws `Binomial(m_w, p0(t))` detections for every entry of `p0_series` (times `1..=T`).
pub fn simulate_shots(p0_series: &[f64], m_w: u64, seed: u64) -> Result<MeasurementRecord> {
    if p0_series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if m_w == 0 {
        return Err(Error::InvalidSampler("need at least one shot per time".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = p0_series
        .iter()
        .map(|&p| {
            if !(-1e-12..=1.0 + 1e-12).contains(&p) {
                return Err(Error::InvalidDistribution(format!("probability {p} outside [0, 1]")));
            }
            let b = Binomial::new(m_w, p.clamp(0.0, 1.0)).map_err(|e| Error::InvalidSampler(e.to_string()))?;
            Ok(b.sample(&mut rng))
        })
        .collect::<Result<_>>()?;
    Ok(MeasurementRecord {
        times: (1..=p0_series.len()).collect(),
        shots_per_time: m_w,
        counts_at_origin: counts,
        seed,
    })
}

/// Start-site probability `p_0(t)` for `t = 1..=horizon`.
pub fn p0_series(spec: &NetworkSpec, coin0: CoinState, n0: usize, horizon: usize) -> Result<Vec<f64>> {
    let mut ens = ConditionalEnsemble::new(spec, coin0, n0)?;
    let probs = ens.probabilities();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        ens.step();
        out.push(ens.site_probabilities_with(&probs)?[n0]);
    }
    Ok(out)
}

/// Tabulated `pi_0(alpha)` for homogeneous networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub n_vertices: usize,
    pub coin0: CoinState,
    pub start: usize,
    /// `None`: the infinite-time stationary value. `Some(T)`: the average of
    /// `p_0(t)` over `t = 1..=T`, matching a finite measurement window.
    pub horizon: Option<usize>,
    pub alphas: Vec<f64>,
    pub pi0: Vec<f64>,
    /// Whether `pi0` strictly increases along the grid.
    pub monotone: bool,
}

pub fn build_reference_curve(
    n: usize,
    alpha_grid: &[f64],
    coin0: CoinState,
    n0: usize,
    horizon: Option<usize>,
) -> Result<ReferenceCurve> {
    if alpha_grid.len() < 2 {
        return Err(Error::Curve("grid needs at least two points".into()));
    }
    if alpha_grid.iter().any(|a| !(0.0..=MAX_ALPHA).contains(a)) {
        return Err(Error::Curve("grid points must lie in [0, 0.5]".into()));
    }
    if alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Curve("grid must be strictly increasing".into()));
    }
    let pi0: Vec<f64> = match horizon {
        None => {
            let table = PerWalkStationary::compute(n, coin0, n0)?;
            alpha_grid
                .iter()
                .map(|&a| {
                    let d = table.combine(&NetworkSpec::homogeneous(n, a)?.weights().probabilities())?;
                    Ok(d.prob_at(0).expect("label 0 is always present"))
                })
                .collect::<Result<_>>()?
        }
        Some(t) => {
            if t == 0 {
                return Err(Error::Curve("horizon must be positive".into()));
            }
            // per-walk time-averaged start-site occupation; the walks do not depend on alpha
            let mut ens = ConditionalEnsemble::new(&NetworkSpec::homogeneous(n, 0.5)?, coin0, n0)?;
            let mut occ = vec![0.0; ens.n_walks()];
            for _ in 0..t {
                ens.step();
                for (k, o) in occ.iter_mut().enumerate() {
                    let w = ens.walk_amplitudes(k);
                    *o += w[n0].norm_sqr() + w[n + n0].norm_sqr();
                }
            }
            alpha_grid
                .iter()
                .map(|&a| {
                    let p = NetworkSpec::homogeneous(n, a)?.weights().probabilities();
                    Ok(p.iter().zip(&occ).map(|(f, o)| f * o).sum::<f64>() / t as f64)
                })
                .collect::<Result<_>>()?
        }
    };
    let monotone = pi0.windows(2).all(|w| w[1] > w[0]);
    if !monotone {
        warn!("reference curve for N = {n} is not strictly increasing; it cannot be inverted");
    }
    Ok(ReferenceCurve { n_vertices: n, coin0, start: n0, horizon, alphas: alpha_grid.to_vec(), pi0, monotone })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha_hat: f64,
    /// 95% interval from the binomial standard error, mapped through the local slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub pi0_hat: f64,
    pub standard_error: f64,
    /// `d pi_0 / d alpha` on the interpolation segment.
    pub slope: f64,
    /// The measured value fell outside the curve and the estimate was clamped.
    pub out_of_range: bool,
}

pub fn estimate_alpha(record: &MeasurementRecord, curve: &ReferenceCurve) -> Result<AlphaEstimate> {
    if !curve.monotone {
        return Err(Error::Curve("curve is not monotone".into()));
    }
    let p = record.pi0_hat();
    let se = record.standard_error();
    let (xs, ys) = (&curve.alphas, &curve.pi0);
    let last = xs.len() - 1;
    let k = match ys.iter().position(|&y| y >= p) {
        Some(0) => 0,
        Some(k) => k - 1,
        None => last - 1,
    };
    let slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    let out_of_range = p < ys[0] || p > ys[last];
    let alpha_hat = if p <= ys[0] {
        xs[0]
    } else if p >= ys[last] {
        xs[last]
    } else {
        xs[k] + (p - ys[k]) / slope
    };
    let half = Z95 * se / slope;
    Ok(AlphaEstimate {
        alpha_hat,
        ci_low: (alpha_hat - half).max(xs[0]),
        ci_high: (alpha_hat + half).min(xs[last]),
        pi0_hat: p,
        standard_error: se,
        slope,
        out_of_range,
    })
}

/// Measurement cost of the walk protocol against per-edge tomography.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// `m_w T`.
    pub walk_measurements: u64,
    /// `m_e N`.
    pub direct_measurements: u64,
    pub m_e: u64,
}

pub fn budget(record: &MeasurementRecord, n: usize, m_e: u64) -> Budget {
    Budget { walk_measurements: record.total_measurements(), direct_measurements: m_e * n as u64, m_e }
}

/// Warning text when the network is too heterogeneous for the homogeneous curve.
pub fn heterogeneity_warning(sigma_fraction: f64) -> Option<String> {
    (sigma_fraction > HETEROGENEITY_WARN_FRACTION).then(|| {
        format!(
            "edge spread is {:.0}% of the maximum; the homogeneous reference curve is reliable only up to {:.0}%",
            100.0 * sigma_fraction,
            100.0 * HETEROGENEITY_WARN_FRACTION
        )
    })
}
