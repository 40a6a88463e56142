//! Observer synthesis in closed-loop map coordinates.
//!
//! An observer gain `L` induces the maps `Φ_w = (I − Z·A + L·C·Z)⁻¹` and
//! `Φ_v = Φ_w·L` with `e = Φ_v·v + Φ_w·w`. Every pair satisfying
//! `Φ_v·C·Z + Φ_w·(I − Z·A) = I` comes from exactly one gain, which turns the
//! worst case over Wasserstein-1 balls (ℓ∞ ground metric) around the sample
//! distributions into a regularized ℓ1 fit that separates row by row when
//! the cost weight `Q` is diagonal.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::l1_lp::{self, L1Problem, L1Solution, SolveStatus};
use crate::ltv_model::{stack_outputs, GainBlocks, StackedNoise, StackedOperators, Window};

/// Largest accepted condition number of `I − Φ_v·C·Z` during gain recovery.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct SlsMaps {
    pub phi_v: DMatrix<f64>,
    pub phi_w: DMatrix<f64>,
    /// Max-abs entry of `[Φ_v, Φ_w]·[C·Z; I − Z·A] − I`.
    pub achievability_residual: f64,
}

/// Wasserstein radii and the diagonal of the cost weight `Q`.
#[derive(Clone, Debug)]
pub struct RiskParams {
    eps_v: f64,
    eps_w: f64,
    q_diag: DVector<f64>,
    normalize_empirical: bool,
}

impl RiskParams {
    pub fn new(eps_v: f64, eps_w: f64, q_diag: DVector<f64>) -> Result<Self> {
        if !(eps_v >= 0.0 && eps_v.is_finite() && eps_w >= 0.0 && eps_w.is_finite()) {
            return Err(Error::Contract(format!(
                "radii must be finite and non-negative (eps_v={eps_v}, eps_w={eps_w})"
            )));
        }
        if q_diag.is_empty() || q_diag.iter().any(|q| !(*q > 0.0 && q.is_finite())) {
            return Err(Error::Contract(
                "cost weights must be finite and strictly positive".into(),
            ));
        }
        Ok(RiskParams {
            eps_v,
            eps_w,
            q_diag,
            normalize_empirical: false,
        })
    }

    /// Equal radii `ε_v = ε_w = eps` and `Q = I`.
    pub fn uniform(eps: f64, window: &Window) -> Result<Self> {
        RiskParams::new(eps, eps, DVector::from_element(window.state_dim(), 1.0))
    }

    /// Divide the empirical term by the sample count.
    pub fn with_normalized_empirical(mut self, normalize: bool) -> Self {
        self.normalize_empirical = normalize;
        self
    }

    pub fn eps_v(&self) -> f64 {
        self.eps_v
    }

    pub fn eps_w(&self) -> f64 {
        self.eps_w
    }

    pub fn q_diag(&self) -> &DVector<f64> {
        &self.q_diag
    }

    pub fn normalize_empirical(&self) -> bool {
        self.normalize_empirical
    }

    /// Factor applied to the empirical term: `1/N` when normalized, else 1.
    pub fn empirical_scale(&self, samples: &SampleSet) -> f64 {
        if self.normalize_empirical {
            1.0 / samples.len() as f64
        } else {
            1.0
        }
    }
}

/// Stacked noise realizations, one column per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    v_tilde: DMatrix<f64>,
    w_tilde: DMatrix<f64>,
}

impl SampleSet {
    pub fn new(v_tilde: DMatrix<f64>, w_tilde: DMatrix<f64>, window: &Window) -> Result<Self> {
        if v_tilde.ncols() == 0 || v_tilde.ncols() != w_tilde.ncols() {
            return Err(Error::Contract(format!(
                "sample matrices need the same positive column count ({} vs {})",
                v_tilde.ncols(),
                w_tilde.ncols()
            )));
        }
        if v_tilde.nrows() != window.output_dim() || w_tilde.nrows() != window.state_dim() {
            return Err(Error::Contract(format!(
                "sample matrices are {:?} and {:?}, expected {} and {} rows",
                v_tilde.shape(),
                w_tilde.shape(),
                window.output_dim(),
                window.state_dim()
            )));
        }
        if v_tilde.rows(0, window.p()).iter().any(|x| *x != 0.0) {
            return Err(Error::Contract(
                "leading measurement-noise block must be zero".into(),
            ));
        }
        if v_tilde.iter().chain(w_tilde.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Contract("non-finite noise sample".into()));
        }
        Ok(SampleSet { v_tilde, w_tilde })
    }

    pub fn from_noise(samples: &[StackedNoise], window: &Window) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Contract("at least one sample is required".into()));
        }
        let v = DMatrix::from_fn(window.output_dim(), samples.len(), |r, c| {
            samples[c].v_bar.get(r).copied().unwrap_or(f64::NAN)
        });
        let w = DMatrix::from_fn(window.state_dim(), samples.len(), |r, c| {
            samples[c].w_bar.get(r).copied().unwrap_or(f64::NAN)
        });
        SampleSet::new(v, w, window)
    }

    pub fn v_tilde(&self) -> &DMatrix<f64> {
        &self.v_tilde
    }

    pub fn w_tilde(&self) -> &DMatrix<f64> {
        &self.w_tilde
    }

    pub fn len(&self) -> usize {
        self.v_tilde.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SynthesisTimings {
    pub lp: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub maps: SlsMaps,
    /// Observer gain realizing the maps; `None` when `I − Φ_v·C·Z` is too
    /// ill-conditioned (the optimum is then only a limit of realizable
    /// observers). Estimates remain available through [`estimate_window`].
    pub gain: Option<RecoveredGain>,
    pub risk: f64,
    /// Per-row share of the risk; rows of the first block are fixed at
    /// `Φ_v = 0` and carry `‖μᵢ‖₁`.
    pub row_objectives: DVector<f64>,
    pub timings: SynthesisTimings,
}

#[derive(Clone, Debug)]
pub struct RecoveredGain {
    pub blocks: GainBlocks,
    pub stacked: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct SynthesisOptions {
    pub tol: f64,
    /// Solve the row programs on the rayon pool.
    pub parallel: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            tol: l1_lp::DEFAULT_TOL,
            parallel: true,
        }
    }
}

pub fn check_achievability(maps: &SlsMaps, ops: &StackedOperators) -> f64 {
    achievability_residual(&maps.phi_v, &maps.phi_w, ops)
}

fn achievability_residual(phi_v: &DMatrix<f64>, phi_w: &DMatrix<f64>, ops: &StackedOperators) -> f64 {
    let dim = ops.window().state_dim();
    let open_loop = DMatrix::identity(dim, dim) - ops.z() * ops.acal();
    (phi_v * ops.ccal_z() + phi_w * open_loop - DMatrix::<f64>::identity(dim, dim)).amax()
}

pub fn phi_from_gain(ops: &StackedOperators, gain: &DMatrix<f64>) -> Result<SlsMaps> {
    let closed = ops.closed_loop(gain)?;
    let mut phi_w = closed
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("closed-loop error map is singular".into()))?;
    // structural zeros are exact; LU leaves rounding noise in them
    ops.mask_phi_w().apply(&mut phi_w);
    let mut phi_v = &phi_w * gain;
    ops.mask_phi_v().apply(&mut phi_v);
    let achievability_residual = achievability_residual(&phi_v, &phi_w, ops);
    Ok(SlsMaps {
        phi_v,
        phi_w,
        achievability_residual,
    })
}

/// Recovers `L = (I − Z·A)(I − Φ_v·C·Z)⁻¹Φ_v`.
pub fn gain_from_phi(ops: &StackedOperators, phi_v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let window = ops.window();
    let dim = window.state_dim();
    if phi_v.shape() != (dim, window.output_dim()) {
        return Err(Error::Model(format!(
            "noise map is {:?}, expected ({dim}, {})",
            phi_v.shape(),
            window.output_dim()
        )));
    }
    let max_violation = ops.mask_phi_v().violation(phi_v);
    if max_violation > 0.0 {
        return Err(Error::Causality { max_violation });
    }
    let inner = DMatrix::identity(dim, dim) - phi_v * ops.ccal_z();
    let sv = inner.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Conditioning { condition });
    }
    let solved = inner
        .lu()
        .solve(phi_v)
        .ok_or(Error::Conditioning { condition: f64::INFINITY })?;
    let open_loop = DMatrix::identity(dim, dim) - ops.z() * ops.acal();
    let mut gain = open_loop * solved;
    ops.mask_l().apply(&mut gain);
    Ok(gain)
}

/// Sum of the ℓ1 norms of the rows.
pub fn f1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

/// Worst-case expected cost over the Wasserstein balls:
/// `‖Q[Φ_v, Φ_w][ṽ; w̃]‖_F1 + ‖Q[ε_v·Φ_v, ε_w·Φ_w]‖_F1`.
pub fn evaluate_risk(maps: &SlsMaps, samples: &SampleSet, params: &RiskParams) -> f64 {
    let q = DMatrix::from_diagonal(params.q_diag());
    let errors = &maps.phi_v * samples.v_tilde() + &maps.phi_w * samples.w_tilde();
    let empirical = f1_norm(&(&q * errors)) * params.empirical_scale(samples);
    let mut regularizer = DMatrix::zeros(maps.phi_v.nrows(), maps.phi_v.ncols() + maps.phi_w.ncols());
    regularizer
        .columns_mut(0, maps.phi_v.ncols())
        .copy_from(&(&maps.phi_v * params.eps_v()));
    regularizer
        .columns_mut(maps.phi_v.ncols(), maps.phi_w.ncols())
        .copy_from(&(&maps.phi_w * params.eps_w()));
    empirical + f1_norm(&(q * regularizer))
}

fn check_dims(ops: &StackedOperators, samples: &SampleSet, params: &RiskParams) -> Result<()> {
    let window = ops.window();
    if samples.v_tilde().nrows() != window.output_dim()
        || samples.w_tilde().nrows() != window.state_dim()
    {
        return Err(Error::Contract("samples do not match the window".into()));
    }
    if params.q_diag().len() != window.state_dim() {
        return Err(Error::Contract(format!(
            "cost weight has {} entries, expected {}",
            params.q_diag().len(),
            window.state_dim()
        )));
    }
    Ok(())
}

/// `Ψ`: the first `p̄ − p̄₀` columns of
/// `[−ε_v·I; ε_w·(C·Z·(I−Z·A)⁻¹)ᵀ; (C·Z·(I−Z·A)⁻¹·w̃ − ṽ)ᵀ]`.
pub fn assemble_psi(
    ops: &StackedOperators,
    samples: &SampleSet,
    params: &RiskParams,
) -> Result<DMatrix<f64>> {
    check_dims(ops, samples, params)?;
    let window = ops.window();
    let (pbar, nbar, count) = (window.output_dim(), window.state_dim(), samples.len());
    let cols = window.causal_output_dim();
    let scale = params.empirical_scale(samples);
    let propagated = ops.ccal_z() * ops.open_loop_inverse();
    let fit = (&propagated * samples.w_tilde() - samples.v_tilde()) * scale;

    let mut psi = DMatrix::zeros(pbar + nbar + count, cols);
    for j in 0..cols {
        psi[(j, j)] = -params.eps_v();
    }
    psi.view_mut((pbar, 0), (nbar, cols))
        .copy_from(&(propagated.columns(0, nbar).transpose().columns(0, cols) * params.eps_w()));
    psi.view_mut((pbar + nbar, 0), (count, cols))
        .copy_from(&fit.transpose().columns(0, cols));
    Ok(psi)
}

/// `μᵢ = ([Q(I−Z·A)⁻¹]ᵢ·[0, ε_w·I, w̃])ᵀ` for a zero-based row `i ≥ 1`.
pub fn assemble_mu(
    row: usize,
    ops: &StackedOperators,
    samples: &SampleSet,
    params: &RiskParams,
) -> Result<DVector<f64>> {
    check_dims(ops, samples, params)?;
    if row == 0 || row >= ops.window().state_dim() {
        return Err(Error::Contract(format!(
            "row {row} has no target vector (valid rows are 1..{})",
            ops.window().state_dim()
        )));
    }
    Ok(mu_unchecked(row, ops, samples, params))
}

fn mu_unchecked(
    row: usize,
    ops: &StackedOperators,
    samples: &SampleSet,
    params: &RiskParams,
) -> DVector<f64> {
    let window = ops.window();
    let (pbar, nbar, count) = (window.output_dim(), window.state_dim(), samples.len());
    let q = params.q_diag()[row];
    let propagation = ops.open_loop_inverse().row(row);
    let mut mu = DVector::zeros(pbar + nbar + count);
    for j in 0..nbar {
        mu[pbar + j] = q * params.eps_w() * propagation[j];
    }
    let fit = propagation * samples.w_tilde() * (q * params.empirical_scale(samples));
    for c in 0..count {
        mu[pbar + nbar + c] = fit[c];
    }
    mu
}

/// Minimizes the worst-case risk over causal maps by one ℓ1 fit per row.
pub fn synthesize(
    ops: &StackedOperators,
    samples: &SampleSet,
    params: &RiskParams,
    options: &SynthesisOptions,
) -> Result<SynthesisResult> {
    let start = Instant::now();
    let window = ops.window();
    let (n, p) = (window.n(), window.p());
    let nbar = window.state_dim();
    let cols = window.causal_output_dim();

    let psi = assemble_psi(ops, samples, params)?;
    let targets: Vec<DVector<f64>> = (0..nbar)
        .map(|i| mu_unchecked(i, ops, samples, params))
        .collect();

    // First-block rows stay zero: the arrival error is not corrected.
    let lp_start = Instant::now();
    let free_rows = &targets[n..];
    let solutions: Vec<Result<L1Solution>> = if options.parallel {
        l1_lp::l1_fit_batch(&psi, free_rows, options.tol)
    } else {
        free_rows
            .iter()
            .map(|mu| L1Problem::new(psi.clone(), mu.clone()).and_then(|pr| l1_lp::l1_fit(&pr, options.tol)))
            .collect()
    };
    let lp_time = lp_start.elapsed();

    let mut phi_v = DMatrix::zeros(nbar, window.output_dim());
    let mut row_objectives = DVector::zeros(nbar);
    for i in 0..n {
        row_objectives[i] = targets[i].lp_norm(1);
    }
    for (offset, solution) in solutions.into_iter().enumerate() {
        let row = n + offset;
        let solution = solution.map_err(|e| Error::Solver {
            row,
            source: Box::new(e),
        })?;
        if solution.status == SolveStatus::ToleranceLimited {
            log::debug!("row {row}: l1 fit is tolerance limited");
        }
        let leading = solution.phi.rows(0, p).amax();
        if leading > options.tol {
            log::warn!("row {row}: leading output block of the optimizer is {leading:e}, forced to zero");
        }
        let q = params.q_diag()[row];
        for j in 0..cols {
            phi_v[(row, j)] = solution.phi[j] / q;
        }
        row_objectives[row] = solution.objective;
    }
    ops.mask_phi_v().apply(&mut phi_v);

    let propagated = ops.ccal_z() * ops.open_loop_inverse();
    let phi_w = ops.open_loop_inverse() - &phi_v * propagated;
    let achievability_residual = achievability_residual(&phi_v, &phi_w, ops);
    let maps = SlsMaps {
        phi_v,
        phi_w,
        achievability_residual,
    };
    let gain = match gain_from_phi(ops, &maps.phi_v) {
        Ok(stacked) => Some(RecoveredGain {
            blocks: GainBlocks::from_stacked(window, &stacked)?,
            stacked,
        }),
        Err(Error::Conditioning { condition }) => {
            log::debug!("gain recovery skipped: condition estimate {condition:e}");
            None
        }
        Err(e) => return Err(e),
    };
    let risk = evaluate_risk(&maps, samples, params);

    Ok(SynthesisResult {
        maps,
        gain,
        risk,
        row_objectives,
        timings: SynthesisTimings {
            lp: lp_time,
            total: start.elapsed(),
        },
    })
}

/// Window estimates `x̂ = Φ_v·ȳ + Φ_w·[x̂(t−Ts); 0]` from the measured
/// outputs `y(t−Ts) … y(t)` and the arrival estimate. Equals the observer
/// recursion run with any gain realizing the maps.
pub fn estimate_window(
    maps: &SlsMaps,
    ops: &StackedOperators,
    outputs: &[DVector<f64>],
    arrival: &DVector<f64>,
) -> Result<DVector<f64>> {
    let window = ops.window();
    if arrival.len() != window.n() {
        return Err(Error::Model(format!(
            "arrival estimate has length {}, expected {}",
            arrival.len(),
            window.n()
        )));
    }
    let y_bar = stack_outputs(outputs, window)?;
    Ok(&maps.phi_v * y_bar + maps.phi_w.columns(0, window.n()) * arrival)
}
