//! Self-check suite: engine equivalence and conservation laws, reported as JSON.

use serde::{Deserialize, Serialize};

use crate::conditional::{CoinFault, ConditionalEnsemble};
use crate::error::Result;
use crate::exact::{FullState, Subsystem};
use crate::network::NetworkSpec;
use crate::observables::entropy_of_spectrum;
use crate::spectral::{stationary_conditional, stationary_full};
use crate::walk::CoinState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub n_values: Vec<usize>,
    pub alphas: Vec<f64>,
    pub t_max: usize,
    /// Ring sizes for the stationary-method comparison (each at most 6).
    pub stationary_n_values: Vec<usize>,
    /// Replace the Hadamard in the conditional engine with a sign-flipped coin.
    #[serde(default)]
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_values: vec![3, 4, 5],
            alphas: vec![0.0, 0.1, 0.3, 0.5],
            t_max: 30,
            stationary_n_values: vec![3, 4, 5],
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst deviation seen.
    pub observed: f64,
    /// Largest deviation allowed.
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Tracks the worst deviation of one check and where it happened.
struct Worst {
    name: &'static str,
    tolerance: f64,
    value: f64,
    at: String,
}

impl Worst {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Worst { name, tolerance, value: 0.0, at: String::new() }
    }

    fn see(&mut self, value: f64, at: impl FnOnce() -> String) {
        if !(value <= self.value) {
            self.value = value;
            self.at = at();
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.value <= self.tolerance,
            observed: self.value,
            tolerance: self.tolerance,
            detail: if self.at.is_empty() { "no deviation".into() } else { format!("worst at {}", self.at) },
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let coin = CoinState::symmetric();
    let mut dist = Worst::new("engine_equivalence_distribution", 1e-10);
    let mut walker = Worst::new("engine_equivalence_walker_spectrum", 1e-9);
    let mut network = Worst::new("engine_equivalence_network_spectrum", 1e-9);
    let mut norm = Worst::new("norm_conservation", 1e-10);
    let mut parity = Worst::new("network_population_conservation", 1e-12);
    let mut weights = Worst::new("weight_normalization", 1e-12);
    let mut diag = Worst::new("network_diagonal_invariance", 1e-12);
    let mut purity = Worst::new("entropy_symmetry", 1e-8);

    for &n in &cfg.n_values {
        for &alpha in &cfg.alphas {
            let spec = NetworkSpec::homogeneous(n, alpha)?;
            let mut full = FullState::new(&spec, coin, 0)?;
            let mut ens = ConditionalEnsemble::new(&spec, coin, 0)?;
            if cfg.inject_fault {
                ens.inject_fault(Some(CoinFault::FlipCoinSign));
            }
            weights.see((spec.weights().norm_sqr() - 1.0).abs(), || format!("N={n} alpha={alpha}"));
            let pops0 = full.network_populations();
            let diag0 = ens.network_density()?.diagonal();
            for t in 0..=cfg.t_max {
                let at = || format!("N={n} alpha={alpha} t={t}");
                dist.see(
                    max_abs_diff(full.position_distribution().probs(), ens.distribution().probs()),
                    at,
                );
                norm.see((full.norm_sqr().sqrt() - 1.0).abs(), at);
                for k in 0..ens.n_walks() {
                    norm.see((ens.walk(k).norm_sqr().sqrt() - 1.0).abs(), at);
                }
                parity.see(max_abs_diff(&pops0, &full.network_populations()), at);
                if t % 10 == 0 || t == cfg.t_max {
                    let rw_exact = full.reduce(&Subsystem::Walker)?.eigenvalues()?;
                    let rw = ens.walker_density()?;
                    let rw_cond = rw.eigenvalues()?;
                    walker.see(max_abs_diff(&rw_exact, &rw_cond), at);
                    let rg = ens.network_density()?;
                    diag.see(max_abs_diff(&diag0, &rg.diagonal()), at);
                    let rg_exact = full.reduce(&Subsystem::Network)?.eigenvalues()?;
                    let rg_cond = rg.eigenvalues()?;
                    network.see(max_abs_diff(&top(&rg_exact, 2 * n), &top(&rg_cond, 2 * n)), at);
                    purity.see((entropy_of_spectrum(&rw_cond) - entropy_of_spectrum(&rg_cond)).abs(), at);
                }
                if t < cfg.t_max {
                    full.step();
                    ens.step();
                }
            }
        }
    }

    let mut stationary = Worst::new("stationary_method_agreement", 1e-8);
    for &n in &cfg.stationary_n_values {
        for &alpha in &cfg.alphas {
            let spec = NetworkSpec::homogeneous(n, alpha)?;
            let a = stationary_conditional(&spec, coin, 0)?;
            let b = stationary_full(&spec, coin, 0)?;
            stationary.see(max_abs_diff(a.pi.probs(), b.pi.probs()), || format!("N={n} alpha={alpha}"));
        }
    }

    let checks: Vec<CheckResult> = [dist, walker, network, norm, parity, weights, diag, purity, stationary]
        .into_iter()
        .map(Worst::finish)
        .collect();
    Ok(VerifyReport { passed: checks.iter().all(|c| c.passed), config: cfg.clone(), checks })
}

/// Largest `k` eigenvalues in descending order, padded with zeros.
fn top(ev: &[f64], k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = ev.iter().rev().take(k).copied().collect();
    v.resize(k, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_suite_passes_and_fault_is_caught() {
        let cfg = VerifyConfig {
            n_values: vec![3, 4],
            alphas: vec![0.0, 0.3],
            t_max: 12,
            stationary_n_values: vec![4],
            inject_fault: false,
        };
        let ok = run_suite(&cfg).unwrap();
        assert!(ok.passed, "{:#?}", ok.checks);
        let bad = run_suite(&VerifyConfig { inject_fault: true, ..cfg }).unwrap();
        assert!(!bad.passed);
        assert!(bad.failed().any(|c| c.name == "engine_equivalence_distribution"));
    }
}
