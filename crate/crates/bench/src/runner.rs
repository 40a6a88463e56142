//! Receding-horizon comparison of DR-MHE variants against EKF and quadratic
//! MHE on the Van der Pol plant.

use std::time::Instant;

use drmhe::baselines::{
    ekf_predict, ekf_step, ekf_update, qmhe_solve, BaselineTuning, Dynamics, EkfConfig,
    QmheConfig, QmheWindow, VdpDynamics,
};
use drmhe::ltv_model::{block, build_stacked, LtvSystem, StackedOperators, Window};
use drmhe::noise_lab::{
    build_sample_set, NoiseProfile, RealizationCorpus, SamplingOptions,
};
use drmhe::plant_sim::{
    linearize, ltv_along, nominal_rollout, simulate_with_draws, to_dvector, SimTrace, VdpState,
    DIVERGENCE_BOUND,
};
use drmhe::sls_synthesis::{
    estimate_window, synthesize, RiskParams, SlsMaps, SynthesisOptions,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{BenchConfig, LinearizeAlong, ProfileSource};
use crate::error::{BenchError, Result};
use crate::results::{BenchResult, Failure, RealizationErrors};

/// Covariance floor added to the empirical baseline tuning.
pub const TUNING_FLOOR: f64 = 1e-9;

/// State dimension and output dimension of the plant.
const N: usize = 2;
const P: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Dro { eps: f64 },
    Ekf,
    Mhe,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Dro { eps } => format!("DRO(eps={eps})"),
            Method::Ekf => "EKF".into(),
            Method::Mhe => "MHE".into(),
        }
    }
}

/// Methods compared by `config`: one DR-MHE per radius, then EKF and MHE.
pub fn methods(config: &BenchConfig) -> Vec<Method> {
    config
        .eps
        .iter()
        .map(|&eps| Method::Dro { eps })
        .chain([Method::Ekf, Method::Mhe])
        .collect()
}

/// Builds (or loads) the noise corpus for `seed`. Every realization holds
/// one draw per plant time, `steps + 1` in total.
pub fn prepare_corpus(config: &BenchConfig, seed: u64) -> Result<RealizationCorpus> {
    let times = config.steps()? + 1;
    let corpus = match &config.profile {
        ProfileSource::SineUniform => {
            RealizationCorpus::generate(&NoiseProfile::sine(), config.n_total, times, config.dt, seed)?
        }
        ProfileSource::BimodalGaussian => RealizationCorpus::generate(
            &NoiseProfile::bimodal(),
            config.n_total,
            times,
            config.dt,
            seed,
        )?,
        ProfileSource::Corpus(path) => {
            let corpus = RealizationCorpus::read_csv(path)?;
            if corpus.n() != N || corpus.p() != P {
                return Err(BenchError::Invalid(format!(
                    "corpus {} has n={}, p={}; the plant needs n={N}, p={P}",
                    path.display(),
                    corpus.n(),
                    corpus.p()
                )));
            }
            if corpus.steps() < times {
                return Err(BenchError::Invalid(format!(
                    "corpus {} holds {} draws per realization, need {times}",
                    path.display(),
                    corpus.steps()
                )));
            }
            if (corpus.dt() - config.dt).abs() > 1e-9 * config.dt {
                return Err(BenchError::Invalid(format!(
                    "corpus {} was sampled at dt={}, config has dt={}",
                    path.display(),
                    corpus.dt(),
                    config.dt
                )));
            }
            if corpus.len() < config.n_train + config.n_test {
                return Err(BenchError::Invalid(format!(
                    "corpus {} holds {} realizations, need {}",
                    path.display(),
                    corpus.len(),
                    config.n_train + config.n_test
                )));
            }
            corpus
        }
    };
    Ok(corpus.with_split(config.n_train, config.n_test)?)
}

/// Runs every method on every test realization of the corpus generated
/// for each configured seed; one result per seed.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchResult>> {
    config.validate()?;
    config
        .seeds
        .iter()
        .map(|&seed| {
            let corpus = prepare_corpus(config, seed)?;
            run_on_corpus(config, &corpus, seed)
        })
        .collect()
}

/// Runs every method on the test split of `corpus`.
pub fn run_on_corpus(config: &BenchConfig, corpus: &RealizationCorpus, seed: u64) -> Result<BenchResult> {
    config.validate()?;
    let methods = methods(config);
    let tuning = BaselineTuning::from_corpus(corpus, config.dt)?.regularized(TUNING_FLOOR);
    let start = Instant::now();
    let outcomes: Vec<(usize, Result<RealizationRun>)> = corpus
        .test()
        .par_iter()
        .map(|&real| (real, run_realization(config, corpus, &tuning, &methods, real)))
        .collect();

    let mut result = BenchResult::new(
        seed,
        methods.iter().map(Method::name).collect(),
        (config.smoothing..config.steps()?).collect(),
    );
    for (real, outcome) in outcomes {
        match outcome {
            Ok(run) => {
                result.max_achievability = result.max_achievability.max(run.max_achievability);
                result.synthesis_seconds.extend(run.synthesis_seconds);
                result.realizations.push(RealizationErrors {
                    realization: real,
                    errors: run.errors,
                });
            }
            Err(err) => {
                log::warn!("seed {seed}, realization {real} aborted: {err}");
                result.failures.push(Failure {
                    realization: real,
                    message: err.to_string(),
                });
            }
        }
    }
    result.wall_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Mean DR-MHE total for every radius, sorted by radius. The corpora (one
/// per seed) are shared by all radii; only DR-MHE variants are run.
pub fn sweep_epsilon(config: &BenchConfig, eps: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut radii = eps.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let corpora = config
        .seeds
        .iter()
        .map(|&seed| prepare_corpus(config, seed).map(|c| (seed, c)))
        .collect::<Result<Vec<_>>>()?;
    radii
        .iter()
        .map(|&e| {
            let mut totals = Vec::new();
            for (seed, corpus) in &corpora {
                let single = BenchConfig {
                    eps: vec![e],
                    ..config.clone()
                };
                let result = run_dro_only(&single, corpus, *seed)?;
                totals.extend(result.totals(0));
            }
            if totals.is_empty() {
                return Err(BenchError::Invalid(format!(
                    "every realization failed for eps = {e}"
                )));
            }
            Ok((e, totals.iter().sum::<f64>() / totals.len() as f64))
        })
        .collect()
}

fn run_dro_only(config: &BenchConfig, corpus: &RealizationCorpus, seed: u64) -> Result<BenchResult> {
    let methods: Vec<Method> = config.eps.iter().map(|&eps| Method::Dro { eps }).collect();
    let tuning = BaselineTuning::from_corpus(corpus, config.dt)?.regularized(TUNING_FLOOR);
    let mut result = BenchResult::new(
        seed,
        methods.iter().map(Method::name).collect(),
        (config.smoothing..config.steps()?).collect(),
    );
    let outcomes: Vec<_> = corpus
        .test()
        .par_iter()
        .map(|&real| (real, run_realization(config, corpus, &tuning, &methods, real)))
        .collect();
    for (real, outcome) in outcomes {
        match outcome {
            Ok(run) => result.realizations.push(RealizationErrors {
                realization: real,
                errors: run.errors,
            }),
            Err(err) => result.failures.push(Failure {
                realization: real,
                message: err.to_string(),
            }),
        }
    }
    Ok(result)
}

/// Per-method per-step errors of one realization.
pub struct RealizationRun {
    /// `errors[m][k]`: ‖x̂(t+1) − x(t+1)‖₁ of method `m` at `t = T_s + k`.
    pub errors: Vec<Vec<f64>>,
    pub max_achievability: f64,
    pub synthesis_seconds: Vec<f64>,
}

/// Initial estimate of a test realization: the true initial state offset by
/// the realization's final (otherwise unused) disturbance draw.
pub fn initial_estimate(config: &BenchConfig, draws: &DMatrix<f64>) -> VdpState {
    let last = draws.nrows() - 1;
    VdpState::new(
        config.x0[0] + draws[(last, 0)],
        config.x0[1] + draws[(last, 1)],
    )
}

pub fn run_realization(
    config: &BenchConfig,
    corpus: &RealizationCorpus,
    tuning: &BaselineTuning,
    methods: &[Method],
    real: usize,
) -> Result<RealizationRun> {
    let times = config.steps()? + 1;
    let draws = corpus.realization(real).rows(0, times).into_owned();
    let trace = simulate_with_draws(&VdpState::new(config.x0[0], config.x0[1]), &draws, config.dt)?;
    let x_init = initial_estimate(config, &draws);
    let mut run = RealizationRun {
        errors: Vec::with_capacity(methods.len()),
        max_achievability: 0.0,
        synthesis_seconds: Vec::new(),
    };
    for method in methods {
        let predictions = match *method {
            Method::Dro { eps } => run_dro(config, corpus, &trace, x_init, eps, &mut run)?,
            Method::Ekf => run_ekf(config, tuning, &trace, x_init)?,
            Method::Mhe => run_mhe(config, tuning, &trace, x_init)?,
        };
        let errors = predictions
            .iter()
            .enumerate()
            .map(|(k, x_hat)| {
                let t = config.smoothing + k;
                (x_hat - trace.states[t + 1]).abs().sum()
            })
            .collect();
        run.errors.push(errors);
    }
    Ok(run)
}

/// Window model in deviation coordinates around `reference`, the
/// noise-free rollout of the arrival estimate (`T_s + T_f + 1` states).
fn window_model(
    config: &BenchConfig,
    trace: &SimTrace,
    start: usize,
    reference: &[VdpState],
) -> Result<LtvSystem> {
    let steps = config.smoothing + config.forecast;
    Ok(match config.linearize_along {
        LinearizeAlong::Estimate => ltv_along(&reference[..steps], config.dt)?,
        LinearizeAlong::Truth => ltv_along(&trace.states[start..start + steps], config.dt)?,
    })
}

/// Rejects estimates whose noise-free rollout leaves the plausible state
/// range; linearizing there would only produce meaningless models.
fn check_divergence(method: Method, t: usize, states: &[VdpState]) -> Result<()> {
    // `f64::max` ignores NaN, so non-finite components are checked separately.
    let finite = states.iter().all(|x| x.iter().all(|v| v.is_finite()));
    let magnitude = if finite {
        states.iter().map(|x| x.amax()).fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    if finite && magnitude <= DIVERGENCE_BOUND {
        Ok(())
    } else {
        Err(BenchError::Diverged {
            method: method.name(),
            t,
            magnitude,
        })
    }
}

fn deviation_outputs(trace: &SimTrace, start: usize, reference: &[VdpState], count: usize) -> Vec<DVector<f64>> {
    (0..count)
        .map(|tau| DVector::from_element(1, trace.outputs[start + tau] - reference[tau][0]))
        .collect()
}

fn state_block(stacked: &DVector<f64>, idx: usize) -> VdpState {
    let b = block(stacked, idx, N);
    VdpState::new(b[0], b[1])
}

fn max_abs_diff(a: &LtvSystem, b: &LtvSystem) -> f64 {
    (0..a.len())
        .map(|k| (a.a(k) - b.a(k)).amax().max((a.c(k) - b.c(k)).amax()))
        .fold(0.0, f64::max)
}

/// DR-MHE predictions `x̂(t+1)` for `t = T_s … K−1`.
fn run_dro(
    config: &BenchConfig,
    corpus: &RealizationCorpus,
    trace: &SimTrace,
    x_init: VdpState,
    eps: f64,
    run: &mut RealizationRun,
) -> Result<Vec<VdpState>> {
    let window = Window::new(N, P, config.smoothing, config.forecast)?;
    let last = trace.len() - 2;
    let params = RiskParams::uniform(eps, &window)?.with_normalized_empirical(config.normalize_empirical);
    let options = SynthesisOptions {
        parallel: false,
        ..SynthesisOptions::default()
    };
    let sampling = SamplingOptions {
        initial_error: config.initial_error_policy,
        disturbance_scale: config.dt,
    };
    let mut arrival = x_init;
    let mut cache: Option<(LtvSystem, StackedOperators, SlsMaps)> = None;
    let mut predictions = Vec::with_capacity(last + 1 - config.smoothing);
    for t in config.smoothing..=last {
        let start = t - config.smoothing;
        let reference = nominal_rollout(&arrival, config.smoothing + config.forecast, config.dt);
        check_divergence(Method::Dro { eps }, t, &reference)?;
        let system = window_model(config, trace, start, &reference)?;
        let reuse = config.cache_gains
            && cache
                .as_ref()
                .is_some_and(|(cached, _, _)| max_abs_diff(cached, &system) <= config.cache_threshold);
        if !reuse {
            let ops = build_stacked(&system, &window)?;
            let samples = build_sample_set(corpus, &window, start, &sampling)?;
            let began = Instant::now();
            let synthesis = synthesize(&ops, &samples, &params, &options)?;
            run.synthesis_seconds.push(began.elapsed().as_secs_f64());
            run.max_achievability = run.max_achievability.max(synthesis.maps.achievability_residual);
            cache = Some((system, ops, synthesis.maps));
        }
        let (_, ops, maps) = cache.as_ref().expect("maps synthesized above");
        let outputs = deviation_outputs(trace, start, &reference, window.measured());
        let estimates = estimate_window(maps, ops, &outputs, &DVector::zeros(N))?;
        predictions.push(state_block(&estimates, config.smoothing + 1) + reference[config.smoothing + 1]);
        arrival = state_block(&estimates, 1) + reference[1];
    }
    Ok(predictions)
}

fn ekf_config(tuning: &BaselineTuning) -> Result<EkfConfig> {
    Ok(EkfConfig::new(
        tuning.q_cov.clone(),
        tuning.r_cov.clone(),
        DMatrix::identity(N, N),
    )?)
}

/// EKF one-step-ahead predictions `x̂(t+1|t)` for `t = T_s … K−1`.
fn run_ekf(
    config: &BenchConfig,
    tuning: &BaselineTuning,
    trace: &SimTrace,
    x_init: VdpState,
) -> Result<Vec<VdpState>> {
    let ekf = ekf_config(tuning)?;
    let model = VdpDynamics { dt: config.dt };
    let last = trace.len() - 2;
    let mut x = to_dvector(&x_init);
    let mut cov = DMatrix::identity(N, N);
    let mut predictions = Vec::with_capacity(last + 1 - config.smoothing);
    for t in 0..=last {
        let y = DVector::from_element(1, trace.outputs[t]);
        let (next, next_cov) = ekf_step(&x, &cov, &y, &model, &ekf)?;
        x = next;
        cov = next_cov;
        check_divergence(Method::Ekf, t, &[VdpState::new(x[0], x[1])])?;
        if t >= config.smoothing {
            predictions.push(VdpState::new(x[0], x[1]));
        }
    }
    Ok(predictions)
}

fn linear_pair(x: &VdpState, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (a, c) = linearize(x, dt);
    (
        DMatrix::from_column_slice(N, N, a.as_slice()),
        DMatrix::from_row_slice(P, N, c.transpose().as_slice()),
    )
}

/// Quadratic MHE predictions for `t = T_s … K−1`, on the same deviation
/// model as DR-MHE. The arrival covariance follows an EKF covariance
/// recursion along the arrival estimates.
fn run_mhe(
    config: &BenchConfig,
    tuning: &BaselineTuning,
    trace: &SimTrace,
    x_init: VdpState,
) -> Result<Vec<VdpState>> {
    let ts = config.smoothing;
    let qmhe = QmheConfig::new(
        ts,
        tuning.q_cov.clone(),
        tuning.r_cov.clone(),
        DMatrix::identity(N, N),
    )?;
    let model = VdpDynamics { dt: config.dt };
    let last = trace.len() - 2;
    let mut arrival = x_init;
    let mut arrival_cov = DMatrix::identity(N, N);
    let mut predictions = Vec::with_capacity(last + 1 - ts);
    for t in ts..=last {
        let start = t - ts;
        let reference = nominal_rollout(&arrival, ts + 1, config.dt);
        check_divergence(Method::Mhe, t, &reference)?;
        let linear_at: &[VdpState] = match config.linearize_along {
            LinearizeAlong::Estimate => &reference[..=ts],
            LinearizeAlong::Truth => &trace.states[start..=start + ts],
        };
        let (a_seq, c_seq) = linear_at.iter().map(|x| linear_pair(x, config.dt)).unzip();
        let window = QmheWindow {
            a_seq,
            c_seq,
            outputs: deviation_outputs(trace, start, &reference, ts + 1),
            prior: DVector::zeros(N),
            prior_cov: Some(arrival_cov.clone()),
        };
        let solution = qmhe_solve(&window, &qmhe)?;
        let p = &solution.prediction;
        predictions.push(VdpState::new(p[0], p[1]) + reference[ts + 1]);

        // shift: arrival moves to the smoothed estimate of the next window start
        let x_start = to_dvector(&arrival);
        let y = DVector::from_element(1, trace.outputs[start]);
        let c = model.output_matrix(&x_start);
        let (_, cov_post) = ekf_update(&x_start, &arrival_cov, &y, &model.output(&x_start), &c, &qmhe.rv)?;
        arrival_cov = ekf_predict(&model, &x_start, &cov_post, &qmhe.qw).1;
        let s1 = &solution.states[1];
        arrival = VdpState::new(s1[0], s1[1]) + reference[1];
    }
    Ok(predictions)
}
