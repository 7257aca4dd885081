use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use qwalknet::estimator::{
    budget, build_reference_curve, estimate_alpha, heterogeneity_warning, p0_series, simulate_shots, MeasurementRecord,
    ReferenceCurve,
};
use qwalknet::exact::{FullState, Subsystem};
use qwalknet::io;
use qwalknet::observables::{
    entropy_of_spectrum, moments, negativity, saturation_mean, tv_distance, variance_scaling_fit, Distribution,
    MomentSummary, RunningAverage, ScalingFit,
};
use qwalknet::spectral::{
    momentum_coupling, momentum_coupling_conditional, momentum_coupling_dcqw, quasi_period_scan, stationary_conditional,
    stationary_full, PerWalkStationary,
};
use qwalknet::verify::{run_suite, VerifyConfig};
use qwalknet::walk::{dcqw_ring_step, dcqw_run, step_matrix, Graph};
use qwalknet::{network::odd_vertex_mask, ConditionalEnsemble, DensityMatrix, EdgeBasisIndex};

use crate::config::{Engine, ExperimentConfig, GraphKind};
use crate::output::OutDir;

enum Runner {
    Exact(Box<FullState>),
    Conditional(ConditionalEnsemble),
}

impl Runner {
    fn distribution(&self) -> Distribution {
        match self {
            Runner::Exact(s) => s.position_distribution(),
            Runner::Conditional(e) => e.distribution(),
        }
    }

    fn walker_density(&self) -> qwalknet::Result<DensityMatrix> {
        match self {
            Runner::Exact(s) => s.reduce(&Subsystem::Walker),
            Runner::Conditional(e) => e.walker_density(),
        }
    }

    fn network_density(&self) -> qwalknet::Result<DensityMatrix> {
        match self {
            Runner::Exact(s) => s.reduce(&Subsystem::Network),
            Runner::Conditional(e) => e.network_density(),
        }
    }

    fn step(&mut self) {
        match self {
            Runner::Exact(s) => s.step(),
            Runner::Conditional(e) => e.step(),
        }
    }
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let spec = cfg.network()?;
    let coin = cfg.coin()?;
    let n = spec.n_vertices();
    let mut runner = match cfg.engine {
        Engine::Exact => Runner::Exact(Box::new(FullState::new(&spec, coin, cfg.n0)?)),
        Engine::Conditional => Runner::Conditional(ConditionalEnsemble::new(&spec, coin, cfg.n0)?),
    };
    let cut = cfg.cut(n)?;
    let pi = if cfg.distance { Some(stationary_conditional(&spec, coin, cfg.n0)?.pi) } else { None };

    let mut dists = Vec::with_capacity(cfg.t_max + 1);
    let mut entropy = Vec::new();
    let mut neg = Vec::new();
    let mut distance = Vec::new();
    let mut avg = RunningAverage::default();
    let stride = cfg.negativity_stride.max(1);
    for t in 0..=cfg.t_max {
        let d = runner.distribution();
        if cfg.entropy {
            entropy.push((t, entropy_of_spectrum(&runner.walker_density()?.eigenvalues()?)));
        }
        if cfg.negativity && t % stride == 0 {
            neg.push((t, negativity(&runner.network_density()?, &cut)?));
        }
        if let Some(pi) = &pi {
            if t > 0 {
                avg.push(&d)?;
                distance.push((t, tv_distance(&avg.mean()?, pi)?));
            }
        }
        dists.push(d);
        if t < cfg.t_max {
            runner.step();
        }
    }

    let mut out = OutDir::create(&cfg.out, cfg)?;
    let params = json!({ "n_vertices": n, "edge_alphas": spec.edge_alphas(), "engine": cfg.engine });
    out.write_data("distribution.csv", "distribution_series", &io::DISTRIBUTION_COLUMNS, params.clone(), |w| {
        Ok(io::write_distribution_series(w, dists.iter().enumerate())?)
    })?;
    if cfg.entropy {
        out.write_data("entropy.csv", "entanglement_entropy", &io::SCALAR_COLUMNS, params.clone(), |w| {
            Ok(io::write_scalar_series(w, &entropy)?)
        })?;
    }
    if cfg.negativity {
        let extra = json!({ "n_vertices": n, "edge_alphas": spec.edge_alphas(), "cut_edges": cut.part_a_edges() });
        out.write_data("negativity.csv", "negativity", &io::SCALAR_COLUMNS, extra, |w| {
            Ok(io::write_scalar_series(w, &neg)?)
        })?;
    }
    if cfg.distance {
        out.write_data("distance.csv", "stationary_distance", &io::SCALAR_COLUMNS, params.clone(), |w| {
            Ok(io::write_scalar_series(w, &distance)?)
        })?;
    }
    if cfg.gram {
        let Runner::Conditional(e) = &runner else {
            bail!("the overlap matrix dump needs the conditional engine");
        };
        let g = e.gram();
        let extra = json!({ "configs": e.indices() });
        out.write_data("gram.csv", "gram", &io::GRAM_COLUMNS, extra, |w| Ok(io::write_gram(w, cfg.t_max, &g)?))?;
    }

    let last = dists.last().expect("t = 0 is always recorded");
    println!("N = {n}, t = {}, engine = {:?}", cfg.t_max, cfg.engine);
    println!("final distribution peaks at n = {} (p = {:.6})", last.argmax(), last.prob_at(last.argmax()).unwrap_or(0.0));
    if cfg.entropy {
        let s: Vec<f64> = entropy.iter().map(|x| x.1).collect();
        println!("entanglement entropy: final {:.6}, saturation mean {:.6}", s[s.len() - 1], saturation_mean(&s)?);
    }
    if cfg.negativity {
        let max = neg.iter().map(|x| x.1).fold(0.0, f64::max);
        println!("negativity: max {max:.6}");
    }
    if let Some((t, d)) = distance.last() {
        println!("distance to stationary at t = {t}: {d:.6}");
    }
    report_written(&out);
    Ok(())
}

#[derive(Serialize)]
struct MomentRow {
    n_vertices: usize,
    alpha: Option<f64>,
    pi0: f64,
    #[serde(flatten)]
    moments: MomentSummary,
}

#[derive(Serialize)]
struct FitRow {
    alpha: f64,
    #[serde(flatten)]
    fit: ScalingFit,
}

pub fn stationary(cfg: &ExperimentConfig) -> Result<()> {
    let coin = cfg.coin()?;
    let homogeneous = cfg.sampler.is_none() && cfg.edges.is_none();
    let alphas = if homogeneous { cfg.alpha_sweep() } else { vec![f64::NAN] };
    let mut out = OutDir::create(&cfg.out, cfg)?;
    let mut rows = Vec::new();
    for n in cfg.n_sweep() {
        let table = match cfg.engine {
            Engine::Conditional => Some(PerWalkStationary::compute(n, coin, cfg.n0)?),
            Engine::Exact => None,
        };
        for &a in &alphas {
            let spec = if homogeneous { qwalknet::NetworkSpec::homogeneous(n, a)? } else { cfg.network_for(n)? };
            let result = match &table {
                Some(t) => t.stationary(&spec)?,
                None => stationary_full(&spec, coin, cfg.n0)?,
            };
            let name = if homogeneous { format!("stationary_N{n}_alpha{a}.csv") } else { format!("stationary_N{n}.csv") };
            let extra = json!({
                "n_vertices": n,
                "edge_alphas": spec.edge_alphas(),
                "method": result.method,
                "degeneracy": result.degeneracy,
            });
            out.write_data(&name, "stationary", &io::STATIONARY_COLUMNS, extra, |w| {
                Ok(io::write_stationary(w, &result.pi)?)
            })?;
            let m = moments(&result.pi);
            let pi0 = result.pi.prob_at(0).unwrap_or(0.0);
            println!(
                "N = {n:>2}  {}  pi_0 = {pi0:.6}  <n> = {:.2e}  <n^2> = {:.6}",
                if homogeneous { format!("alpha = {a}") } else { "inhomogeneous".into() },
                m.mean,
                m.second_moment
            );
            rows.push(MomentRow { n_vertices: n, alpha: homogeneous.then_some(a), pi0, moments: m });
        }
    }
    out.write_result("moments.json", "stationary_moments", &rows)?;

    let mut ns = cfg.n_sweep();
    ns.sort_unstable();
    ns.dedup();
    if homogeneous && ns.len() >= 3 {
        let mut fits = Vec::new();
        for &a in &alphas {
            let pts: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.alpha == Some(a))
                .map(|r| (r.n_vertices, r.moments.second_moment))
                .collect();
            let fit = variance_scaling_fit(&pts)?;
            println!("alpha = {a}: <n^2> ~ {:.5} N^2 + {:.4}", fit.a, fit.b);
            fits.push(FitRow { alpha: a, fit });
        }
        out.write_result("fit.json", "variance_fit", &fits)?;
    }
    report_written(&out);
    Ok(())
}

fn load_curve(cfg: &ExperimentConfig, path: &std::path::Path, coin: qwalknet::CoinState) -> Result<ReferenceCurve> {
    let file = std::fs::File::open(path).with_context(|| format!("opening curve {}", path.display()))?;
    let (alphas, pi0) = io::read_reference_curve_rows(file)?;
    let mut meta_path = path.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let extra = std::fs::read_to_string(&meta_path)
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .map(|v| v["extra"].clone());
    let horizon = match &extra {
        Some(e) => e["horizon"].as_u64().map(|h| h as usize),
        None => Some(cfg.horizon()),
    };
    if let Some(n) = extra.as_ref().and_then(|e| e["n_vertices"].as_u64()) {
        if n as usize != cfg.n {
            bail!("curve {} was built for N = {n}, not N = {}", path.display(), cfg.n);
        }
    }
    if alphas.len() < 2 {
        bail!("curve {} has fewer than two rows", path.display());
    }
    let monotone = pi0.windows(2).all(|w| w[1] > w[0]);
    Ok(ReferenceCurve { n_vertices: cfg.n, coin0: coin, start: cfg.n0, horizon, alphas, pi0, monotone })
}

pub fn estimate(cfg: &ExperimentConfig) -> Result<()> {
    let coin = cfg.coin()?;
    let n = cfg.n;
    let horizon = cfg.horizon();
    let mut out = OutDir::create(&cfg.out, cfg)?;
    let curve = match &cfg.curve {
        Some(p) => load_curve(cfg, p, coin)?,
        None => {
            let c = build_reference_curve(n, &cfg.grid(), coin, cfg.n0, Some(horizon))?;
            let extra = json!({ "n_vertices": n, "coin0": cfg.coin0, "start": cfg.n0, "horizon": horizon });
            out.write_data("reference_curve.csv", "reference_curve", &io::CURVE_COLUMNS, extra, |w| {
                Ok(io::write_reference_curve(w, &c)?)
            })?;
            c
        }
    };
    let (record, truth) = match &cfg.record {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading record {}", p.display()))?;
            (serde_json::from_str::<MeasurementRecord>(&text)?, None)
        }
        None => {
            let spec = cfg.network()?;
            let p0 = p0_series(&spec, coin, cfg.n0, horizon)?;
            let rec = simulate_shots(&p0, cfg.m_w, cfg.seed)?;
            out.write_result("measurement_record.json", "measurement_record", &rec)?;
            let mean = spec.edge_alphas().iter().sum::<f64>() / n as f64;
            (rec, Some(mean))
        }
    };
    if let Some(h) = curve.horizon {
        if h != record.times.len() {
            bail!("curve horizon {h} differs from the measurement horizon {}", record.times.len());
        }
    }
    let est = estimate_alpha(&record, &curve)?;
    let cost = budget(&record, n, cfg.m_e);
    let warning = cfg.sampler.as_ref().and_then(|s| heterogeneity_warning(s.sigma_fraction));
    let result = json!({
        "estimate": est,
        "budget": cost,
        "true_mean_alpha": truth,
        "warning": warning,
    });
    out.write_result("estimate.json", "alpha_estimate", &result)?;
    println!(
        "alpha_hat = {:.4}  95% CI [{:.4}, {:.4}]  pi0_hat = {:.6} +- {:.2e}{}",
        est.alpha_hat,
        est.ci_low,
        est.ci_high,
        est.pi0_hat,
        est.standard_error,
        if est.out_of_range { "  (outside the curve, clamped)" } else { "" }
    );
    if let Some(t) = truth {
        println!("true mean alpha = {t:.4}");
    }
    println!(
        "measurements: walk {} (m_w T) vs direct {} (m_e N)",
        cost.walk_measurements, cost.direct_measurements
    );
    if let Some(w) = warning {
        println!("warning: {w}");
    }
    report_written(&out);
    Ok(())
}

/// Returns whether every check passed.
pub fn verify(cfg: &ExperimentConfig) -> Result<bool> {
    let vc = VerifyConfig {
        n_values: cfg.verify_n_values.clone(),
        alphas: cfg.alphas.clone().unwrap_or_else(|| VerifyConfig::default().alphas),
        t_max: cfg.verify_t_max,
        stationary_n_values: cfg.verify_stationary_n_values.clone(),
        inject_fault: cfg.inject_fault,
    };
    let report = run_suite(&vc)?;
    let mut out = OutDir::create(&cfg.out, cfg)?;
    out.write_result("verify_report.json", "verify_report", &report)?;
    for c in &report.checks {
        println!(
            "{} {:<38} observed {:.3e}  tolerance {:.0e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.tolerance,
            c.detail
        );
    }
    println!("{}", if report.passed { "all checks passed" } else { "some checks failed" });
    report_written(&out);
    Ok(report.passed)
}

pub fn dcqw(cfg: &ExperimentConfig) -> Result<()> {
    let coin = cfg.coin()?;
    let graph = match cfg.graph {
        GraphKind::Line => Graph::Line { half_width: None },
        GraphKind::Ring => Graph::Ring { n_vertices: cfg.n },
    };
    let run = dcqw_run(graph, coin, cfg.n0, cfg.t_max)?;
    let mut out = OutDir::create(&cfg.out, cfg)?;
    let extra = json!({ "graph": graph, "t": cfg.t_max });
    out.write_data("dcqw.csv", "distribution_series", &io::DISTRIBUTION_COLUMNS, extra, |w| {
        Ok(io::write_distribution_series(w, run.series.iter().enumerate())?)
    })?;
    let state: Vec<[f64; 5]> =
        run.amplitudes.iter().map(|(l, a, b)| [*l as f64, a.re, a.im, b.re, b.im]).collect();
    out.write_result("dcqw_state.json", "dcqw_state", &json!({ "t": cfg.t_max, "rows": state, "row_layout": ["n", "re0", "im0", "re1", "im1"] }))?;
    let last = run.series.last().expect("t = 0 is always recorded");
    let m = moments(last);
    println!("t = {}: <n> = {:.3e}, sigma = {:.4}, sigma/t = {:.4}", cfg.t_max, m.mean, m.variance.sqrt(), m.variance.sqrt() / cfg.t_max.max(1) as f64);
    report_written(&out);
    Ok(())
}

pub fn fourier(cfg: &ExperimentConfig) -> Result<()> {
    let n = cfg.n;
    // default: a mixed-parity configuration with two adjacent set edges
    let i = EdgeBasisIndex::new(cfg.config_index.unwrap_or(0b11), n)?;
    let standard = momentum_coupling_dcqw(n)?;
    let conditional = momentum_coupling_conditional(i, n)?;
    let u = step_matrix(odd_vertex_mask(i.value(), n), n);
    let check = momentum_coupling(&u, n)?;
    debug_assert_eq!(check, conditional);
    let revivals_standard = quasi_period_scan(&dcqw_ring_step(n), cfg.revival_t_max, cfg.revival_epsilon)?;
    let revivals_conditional = quasi_period_scan(&u, cfg.revival_t_max, cfg.revival_epsilon)?;
    let result = json!({
        "n_vertices": n,
        "config_index": i.value(),
        "standard_walk": standard,
        "conditional_walk": conditional,
        "revival_epsilon": cfg.revival_epsilon,
        "revival_t_max": cfg.revival_t_max,
        "revivals_standard": revivals_standard,
        "revivals_conditional": revivals_conditional,
    });
    let mut out = OutDir::create(&cfg.out, cfg)?;
    out.write_result("fourier.json", "momentum_coupling", &result)?;
    println!("standard walk: off-block norm {:.3e} (normalized {:.3e})", standard.off_block_norm, standard.normalized);
    println!(
        "conditional walk i = {}: off-block norm {:.4} (normalized {:.4})",
        i.value(),
        conditional.off_block_norm,
        conditional.normalized
    );
    println!(
        "revivals within t <= {} at epsilon {}: standard {}, conditional {}",
        cfg.revival_t_max,
        cfg.revival_epsilon,
        revivals_standard.len(),
        revivals_conditional.len()
    );
    report_written(&out);
    Ok(())
}

fn report_written(out: &OutDir) {
    for p in out.written() {
        log::info!("wrote {}", p.display());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_full_rejects_large_rings() {
        let cfg = ExperimentConfig { n: 7, engine: Engine::Exact, ..Default::default() };
        let spec = cfg.network().unwrap();
        assert!(stationary_full(&spec, cfg.coin().unwrap(), 0).is_err());
    }
}
