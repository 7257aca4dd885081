//! Experiment configuration: one JSON document, overridden field by field by
//! command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qwalknet::estimator::InhomogeneousSampler;
use qwalknet::{Bipartition, CoinState, NetworkSpec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Conditional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Line,
    Ring,
}

/// Arc of whole edges on side A of an L1 cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutConfig {
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ring size.
    pub n: usize,
    /// Homogeneous edge parameter.
    pub alpha: f64,
    /// Per-edge parameters; overrides `alpha`.
    pub edges: Option<Vec<f64>>,
    /// Random inhomogeneous network; overrides `alpha` and `edges`.
    pub sampler: Option<InhomogeneousSampler>,
    /// `[[re, im], [re, im]]` amplitudes of coin states 0 and 1.
    pub coin0: [[f64; 2]; 2],
    pub n0: usize,
    pub t_max: usize,
    pub seed: u64,
    pub engine: Engine,
    pub threads: Option<usize>,
    pub out: PathBuf,
    /// Side A of the negativity cut; default is the first `floor(N/2)` edges.
    pub bipartition: Option<CutConfig>,

    /// simulate: write the entanglement entropy series.
    pub entropy: bool,
    /// simulate: write the negativity series (needs a `2^N` eigensolve per sample).
    pub negativity: bool,
    /// simulate: sample negativity every this many steps.
    pub negativity_stride: usize,
    /// simulate: write the distance to the stationary distribution.
    pub distance: bool,
    /// simulate: dump the walk overlap matrix at the final time.
    pub gram: bool,

    /// stationary: ring sizes to sweep; defaults to `[n]`.
    pub n_values: Option<Vec<usize>>,
    /// stationary / estimate: homogeneous parameters to sweep; defaults to `[alpha]`.
    pub alphas: Option<Vec<f64>>,

    /// estimate: averaging window `T`; defaults to `20 N`.
    pub horizon: Option<usize>,
    /// estimate: shots per time step.
    pub m_w: u64,
    /// estimate: tomography cost per edge of the direct method.
    pub m_e: u64,
    /// estimate: reference curve grid; defaults to `0, 0.01, ..., 0.5`.
    pub grid: Option<Vec<f64>>,
    /// estimate: `alpha,pi0` CSV to use instead of building a curve.
    pub curve: Option<PathBuf>,
    /// estimate: measurement record JSON to use instead of simulating shots.
    pub record: Option<PathBuf>,

    /// verify: ring sizes for the engine comparison.
    pub verify_n_values: Vec<usize>,
    /// verify: steps per engine comparison.
    pub verify_t_max: usize,
    /// verify: ring sizes for the stationary-method comparison.
    pub verify_stationary_n_values: Vec<usize>,
    /// verify: flip a coin sign in the conditional engine.
    pub inject_fault: bool,

    /// dcqw: line or ring.
    pub graph: GraphKind,

    /// fourier: edge configuration of the conditional walk to analyse.
    pub config_index: Option<usize>,
    /// fourier: revival scan length.
    pub revival_t_max: usize,
    /// fourier: revival threshold on `||U^t - I||`.
    pub revival_epsilon: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        ExperimentConfig {
            n: 10,
            alpha: 0.5,
            edges: None,
            sampler: None,
            coin0: [[r, 0.0], [0.0, r]],
            n0: 0,
            t_max: 100,
            seed: 0,
            engine: Engine::Conditional,
            threads: None,
            out: PathBuf::from("out"),
            bipartition: None,
            entropy: true,
            negativity: false,
            negativity_stride: 1,
            distance: true,
            gram: false,
            n_values: None,
            alphas: None,
            horizon: None,
            m_w: 10_000,
            m_e: qwalknet::estimator::DEFAULT_M_E,
            grid: None,
            curve: None,
            record: None,
            verify_n_values: vec![3, 4, 5],
            verify_t_max: 30,
            verify_stationary_n_values: vec![3, 4, 5],
            inject_fault: false,
            graph: GraphKind::Line,
            config_index: None,
            revival_t_max: 1000,
            revival_epsilon: 0.1,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            anyhow::anyhow!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())
        })
    }

    pub fn coin(&self) -> Result<CoinState> {
        let [[a, b], [c, d]] = self.coin0;
        Ok(CoinState::normalized(C64::new(a, b), C64::new(c, d))?)
    }

    /// The network described by `sampler`, `edges` or `alpha`, in that order of priority.
    pub fn network(&self) -> Result<NetworkSpec> {
        self.network_for(self.n)
    }

    pub fn network_for(&self, n: usize) -> Result<NetworkSpec> {
        if let Some(s) = &self.sampler {
            if let Some(w) = qwalknet::estimator::heterogeneity_warning(s.sigma_fraction) {
                log::warn!("{w}");
            }
            return Ok(InhomogeneousSampler::new(s.mean_alpha, s.sigma_fraction, s.seed)?.sample(n)?);
        }
        if let Some(e) = &self.edges {
            if e.len() != n {
                bail!("edges lists {} values for N = {n}", e.len());
            }
            return Ok(NetworkSpec::new(n, e.clone())?);
        }
        Ok(NetworkSpec::homogeneous(n, self.alpha)?)
    }

    pub fn cut(&self, n: usize) -> Result<Bipartition> {
        Ok(match self.bipartition {
            Some(c) => Bipartition::l1_arc(n, c.start, c.len)?,
            None => Bipartition::equipartition(n)?,
        })
    }

    pub fn n_sweep(&self) -> Vec<usize> {
        self.n_values.clone().unwrap_or_else(|| vec![self.n])
    }

    pub fn alpha_sweep(&self) -> Vec<f64> {
        self.alphas.clone().unwrap_or_else(|| vec![self.alpha])
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(20 * self.n)
    }

    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| (0..=50).map(|k| k as f64 / 100.0).collect())
    }
}
