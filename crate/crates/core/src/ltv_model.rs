//! Finite-horizon stacked representation of an LTV system and its
//! moving-horizon observer.
//!
//! Over a window `t-Ts ..= t+Tf` the estimation error obeys
//!
//! ```text
//! e = Z·A·e − L·C·Z·e + L·v + w
//! ```
//!
//! where `Z` is the block down-shift, `A` and `C` are block diagonal and
//! `L` collects the observer gains `L[τ,k]`. Stacked vectors carry one extra
//! leading block: `v = [0; v(t-Ts); …]` and `w = [e(t-Ts); -w(t-Ts); …]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Upper bound on stacked dimensions; the dense algorithms are cubic.
pub const MAX_STACKED_DIM: usize = 4096;

/// Relative singular value threshold for the observability rank test.
pub const OBSERVABILITY_RTOL: f64 = 1e-8;

/// Smoothing/forecast horizons together with the stacked dimensions they imply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    n: usize,
    p: usize,
    smoothing: usize,
    forecast: usize,
}

impl Window {
    pub fn new(n: usize, p: usize, smoothing: usize, forecast: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Model(format!(
                "state and output dimensions must be positive (n={n}, p={p})"
            )));
        }
        if smoothing == 0 || forecast == 0 {
            return Err(Error::Model(format!(
                "horizons must be at least one step (Ts={smoothing}, Tf={forecast})"
            )));
        }
        let window = Window {
            n,
            p,
            smoothing,
            forecast,
        };
        let dim = window.state_dim().max(window.output_dim());
        if dim > MAX_STACKED_DIM {
            return Err(Error::Sizing {
                dim,
                max: MAX_STACKED_DIM,
            });
        }
        Ok(window)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `Ts`
    pub fn smoothing(&self) -> usize {
        self.smoothing
    }

    /// `Tf`
    pub fn forecast(&self) -> usize {
        self.forecast
    }

    /// Number of transitions in the window, `Ts + Tf`.
    pub fn steps(&self) -> usize {
        self.smoothing + self.forecast
    }

    /// Number of blocks in a stacked vector, `Ts + Tf + 1`.
    pub fn horizon_len(&self) -> usize {
        self.steps() + 1
    }

    /// Number of outputs the observer may use, `Ts + 1`.
    pub fn measured(&self) -> usize {
        self.smoothing + 1
    }

    /// `n̄ = n(Ts+Tf+1)`
    pub fn state_dim(&self) -> usize {
        self.n * self.horizon_len()
    }

    /// `p̄ = p(Ts+Tf+1)`
    pub fn output_dim(&self) -> usize {
        self.p * self.horizon_len()
    }

    /// `p̄₀ = p(Tf-1)`, the trailing future-output columns that must stay unused.
    pub fn future_output_dim(&self) -> usize {
        self.p * (self.forecast - 1)
    }

    /// Columns of `L`/`Φ_v` that can carry weight: `p̄ − p̄₀`, including the
    /// structurally zero leading block.
    pub fn causal_output_dim(&self) -> usize {
        self.output_dim() - self.future_output_dim()
    }
}

/// A linear time-varying system restricted to one estimation window.
#[derive(Clone, Debug)]
pub struct LtvSystem {
    n: usize,
    p: usize,
    a_seq: Vec<DMatrix<f64>>,
    c_seq: Vec<DMatrix<f64>>,
}

impl LtvSystem {
    /// `a_seq[τ]` and `c_seq[τ]` are indexed in window order `t-Ts … t+Tf-1`.
    pub fn new(a_seq: Vec<DMatrix<f64>>, c_seq: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = a_seq
            .first()
            .ok_or_else(|| Error::Model("empty state matrix sequence".into()))?;
        let n = first.nrows();
        let p = c_seq
            .first()
            .ok_or_else(|| Error::Model("empty output matrix sequence".into()))?
            .nrows();
        if a_seq.len() != c_seq.len() {
            return Err(Error::Model(format!(
                "{} state matrices but {} output matrices",
                a_seq.len(),
                c_seq.len()
            )));
        }
        for (tau, (a, c)) in a_seq.iter().zip(&c_seq).enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::Model(format!(
                    "A[{tau}] is {:?}, expected ({n}, {n})",
                    a.shape()
                )));
            }
            if c.shape() != (p, n) {
                return Err(Error::Model(format!(
                    "C[{tau}] is {:?}, expected ({p}, {n})",
                    c.shape()
                )));
            }
            if a.iter().chain(c.iter()).any(|x| !x.is_finite()) {
                return Err(Error::Model(format!("non-finite entry at step {tau}")));
            }
        }
        Ok(LtvSystem { n, p, a_seq, c_seq })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.a_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_seq.is_empty()
    }

    pub fn a(&self, tau: usize) -> &DMatrix<f64> {
        &self.a_seq[tau]
    }

    pub fn c(&self, tau: usize) -> &DMatrix<f64> {
        &self.c_seq[tau]
    }

    /// Rank of the map from the window-initial state to the measured outputs
    /// `y(t-Ts) … y(t)`.
    pub fn observability_rank(&self, window: &Window) -> usize {
        let rows = self.p * window.measured().min(self.len());
        let mut obs = DMatrix::zeros(rows, self.n);
        let mut transition = DMatrix::<f64>::identity(self.n, self.n);
        for k in 0..window.measured().min(self.len()) {
            obs.view_mut((k * self.p, 0), (self.p, self.n))
                .copy_from(&(&self.c_seq[k] * &transition));
            transition = &self.a_seq[k] * transition;
        }
        let sv = obs.singular_values();
        let max = sv.max();
        if max == 0.0 {
            return 0;
        }
        sv.iter().filter(|s| **s > OBSERVABILITY_RTOL * max).count()
    }

    pub fn check_observability(&self, window: &Window) -> Result<()> {
        let rank = self.observability_rank(window);
        if rank < self.n {
            return Err(Error::Unobservable {
                rank,
                required: self.n,
            });
        }
        Ok(())
    }
}

/// Boolean sparsity pattern; `true` marks an entry that may be nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    free: DMatrix<bool>,
}

impl SparsityPattern {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        SparsityPattern {
            free: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.free.shape()
    }

    pub fn allows(&self, row: usize, col: usize) -> bool {
        self.free[(row, col)]
    }

    /// Zeroes every structurally forbidden entry.
    pub fn apply(&self, m: &mut DMatrix<f64>) {
        for (x, free) in m.iter_mut().zip(self.free.iter()) {
            if !free {
                *x = 0.0;
            }
        }
    }

    pub fn masked(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        self.apply(&mut out);
        out
    }

    /// Largest absolute value found in a forbidden position.
    pub fn violation(&self, m: &DMatrix<f64>) -> f64 {
        m.iter()
            .zip(self.free.iter())
            .filter(|(_, free)| !**free)
            .fold(0.0, |acc, (x, _)| acc.max(x.abs()))
    }

    /// Columns that are forbidden in every row.
    pub fn zero_columns(&self) -> Vec<bool> {
        self.free
            .column_iter()
            .map(|col| col.iter().all(|f| !f))
            .collect()
    }
}

/// Block down-shift with identity blocks on the first block subdiagonal.
pub fn build_downshift(n: usize, horizon_len: usize) -> Result<DMatrix<f64>> {
    if n == 0 || horizon_len < 2 {
        return Err(Error::Model(format!(
            "down-shift needs n >= 1 and at least two blocks (n={n}, blocks={horizon_len})"
        )));
    }
    let dim = n
        .checked_mul(horizon_len)
        .filter(|d| *d <= MAX_STACKED_DIM)
        .ok_or(Error::Sizing {
            dim: n.saturating_mul(horizon_len),
            max: MAX_STACKED_DIM,
        })?;
    let mut z = DMatrix::zeros(dim, dim);
    for i in n..dim {
        z[(i, i - n)] = 1.0;
    }
    Ok(z)
}

/// Block operators of the stacked error dynamics for one window.
#[derive(Clone, Debug)]
pub struct StackedOperators {
    window: Window,
    system: LtvSystem,
    z: DMatrix<f64>,
    acal: DMatrix<f64>,
    ccal: DMatrix<f64>,
    ccal_z: DMatrix<f64>,
    open_loop_inv: DMatrix<f64>,
    mask_l: SparsityPattern,
    mask_phi_v: SparsityPattern,
    mask_phi_w: SparsityPattern,
}

impl StackedOperators {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn system(&self) -> &LtvSystem {
        &self.system
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn acal(&self) -> &DMatrix<f64> {
        &self.acal
    }

    pub fn ccal(&self) -> &DMatrix<f64> {
        &self.ccal
    }

    /// `Ccal·Z`, the map from stacked states to stacked measured outputs.
    pub fn ccal_z(&self) -> &DMatrix<f64> {
        &self.ccal_z
    }

    /// `(I − Z·Acal)⁻¹`, the open-loop propagation of stacked disturbances.
    pub fn open_loop_inverse(&self) -> &DMatrix<f64> {
        &self.open_loop_inv
    }

    pub fn mask_l(&self) -> &SparsityPattern {
        &self.mask_l
    }

    pub fn mask_phi_v(&self) -> &SparsityPattern {
        &self.mask_phi_v
    }

    pub fn mask_phi_w(&self) -> &SparsityPattern {
        &self.mask_phi_w
    }

    /// `I − Z·Acal + L·Ccal·Z`, whose inverse maps stacked disturbances to
    /// errors under gain `L`.
    pub fn closed_loop(&self, gain: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_gain(gain)?;
        let dim = self.window.state_dim();
        Ok(DMatrix::identity(dim, dim) - &self.z * &self.acal + gain * &self.ccal_z)
    }

    pub fn check_gain(&self, gain: &DMatrix<f64>) -> Result<()> {
        let expected = (self.window.state_dim(), self.window.output_dim());
        if gain.shape() != expected {
            return Err(Error::Model(format!(
                "gain is {:?}, expected {expected:?}",
                gain.shape()
            )));
        }
        let max_violation = self.mask_l.violation(gain);
        if max_violation > 0.0 {
            return Err(Error::Causality { max_violation });
        }
        Ok(())
    }
}

pub fn build_stacked(system: &LtvSystem, window: &Window) -> Result<StackedOperators> {
    let (n, p) = (window.n(), window.p());
    if system.n() != n || system.p() != p || system.len() != window.steps() {
        return Err(Error::Model(format!(
            "system (n={}, p={}, {} steps) does not fit window (n={n}, p={p}, {} steps)",
            system.n(),
            system.p(),
            system.len(),
            window.steps()
        )));
    }
    let blocks = window.horizon_len();
    let nbar = window.state_dim();
    let pbar = window.output_dim();

    let z = build_downshift(n, blocks)?;
    let mut acal = DMatrix::zeros(nbar, nbar);
    let mut ccal = DMatrix::zeros(pbar, nbar);
    for tau in 0..window.steps() {
        acal.view_mut((tau * n, tau * n), (n, n))
            .copy_from(system.a(tau));
        ccal.view_mut(((tau + 1) * p, (tau + 1) * n), (p, n))
            .copy_from(system.c(tau));
    }
    let ccal_z = &ccal * &z;

    // (I − Z·Acal) is unit block lower triangular with A[i-1] on the
    // subdiagonal, so block row i of its inverse is E_i + A[i-1]·row(i-1).
    let mut open_loop_inv = DMatrix::zeros(nbar, nbar);
    for i in 0..n {
        open_loop_inv[(i, i)] = 1.0;
    }
    for blk in 1..blocks {
        let prev = open_loop_inv.rows(n * (blk - 1), n).clone_owned();
        let mut row = system.a(blk - 1) * prev;
        for i in 0..n {
            row[(i, n * blk + i)] += 1.0;
        }
        open_loop_inv.rows_mut(n * blk, n).copy_from(&row);
    }

    let causal_cols = window.causal_output_dim();
    let mask_l = SparsityPattern::from_fn(nbar, pbar, |r, c| r >= n && c >= p && c < causal_cols);
    let mask_phi_v = mask_l.clone();
    let ts = window.smoothing();
    let mask_phi_w = SparsityPattern::from_fn(nbar, nbar, |r, c| {
        let (rb, cb) = (r / n, c / n);
        if rb == 0 {
            cb == 0
        } else if cb > ts {
            rb >= cb
        } else {
            true
        }
    });

    Ok(StackedOperators {
        window: *window,
        system: system.clone(),
        z,
        acal,
        ccal,
        ccal_z,
        open_loop_inv,
        mask_l,
        mask_phi_v,
        mask_phi_w,
    })
}

/// Stacked measurement noise and disturbance vectors of one window.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedNoise {
    pub v_bar: DVector<f64>,
    pub w_bar: DVector<f64>,
}

/// Stacks `v̄ = [0; v…]` and `w̄ = [e0; −w…]`.
pub fn stack_noise(
    e0: &DVector<f64>,
    w_seq: &[DVector<f64>],
    v_seq: &[DVector<f64>],
    window: &Window,
) -> Result<StackedNoise> {
    let (n, p) = (window.n(), window.p());
    if w_seq.len() != window.steps() || v_seq.len() != window.steps() {
        return Err(Error::Model(format!(
            "expected {} noise samples, got {} disturbances and {} measurement noises",
            window.steps(),
            w_seq.len(),
            v_seq.len()
        )));
    }
    if e0.len() != n {
        return Err(Error::Model(format!(
            "initial error has length {}, expected {n}",
            e0.len()
        )));
    }
    let mut v_bar = DVector::zeros(window.output_dim());
    let mut w_bar = DVector::zeros(window.state_dim());
    w_bar.rows_mut(0, n).copy_from(e0);
    for (tau, (w, v)) in w_seq.iter().zip(v_seq).enumerate() {
        if w.len() != n || v.len() != p {
            return Err(Error::Model(format!("noise sample {tau} has wrong length")));
        }
        w_bar.rows_mut((tau + 1) * n, n).copy_from(&(-w));
        v_bar.rows_mut((tau + 1) * p, p).copy_from(v);
    }
    Ok(StackedNoise { v_bar, w_bar })
}

/// Stacked estimation error `ē = (I − Z·Acal + L·Ccal·Z)⁻¹ (L·v̄ + w̄)`.
pub fn propagate_error(
    ops: &StackedOperators,
    gain: &DMatrix<f64>,
    noise: &StackedNoise,
) -> Result<DVector<f64>> {
    let closed = ops.closed_loop(gain)?;
    let rhs = gain * &noise.v_bar + &noise.w_bar;
    closed
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("closed-loop error map is singular".into()))
}

/// Observer gain blocks `L[τ,k]` with `τ` over the `Ts+Tf` transitions and
/// `k` over the `Ts+1` measured outputs, both window-relative.
#[derive(Clone, Debug, PartialEq)]
pub struct GainBlocks {
    window: Window,
    blocks: Vec<DMatrix<f64>>,
}

impl GainBlocks {
    pub fn zeros(window: &Window) -> Self {
        let count = window.steps() * window.measured();
        GainBlocks {
            window: *window,
            blocks: vec![DMatrix::zeros(window.n(), window.p()); count],
        }
    }

    pub fn from_fn(window: &Window, mut f: impl FnMut(usize, usize) -> DMatrix<f64>) -> Result<Self> {
        let mut gains = GainBlocks::zeros(window);
        for tau in 0..window.steps() {
            for k in 0..window.measured() {
                let block = f(tau, k);
                gains.set(tau, k, block)?;
            }
        }
        Ok(gains)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn get(&self, tau: usize, k: usize) -> &DMatrix<f64> {
        &self.blocks[tau * self.window.measured() + k]
    }

    pub fn set(&mut self, tau: usize, k: usize, block: DMatrix<f64>) -> Result<()> {
        if block.shape() != (self.window.n(), self.window.p()) {
            return Err(Error::Model(format!(
                "gain block is {:?}, expected ({}, {})",
                block.shape(),
                self.window.n(),
                self.window.p()
            )));
        }
        let idx = tau * self.window.measured() + k;
        self.blocks[idx] = block;
        Ok(())
    }

    /// Gain `L[τ,k]` sits at block row `τ+1`, block column `k+1` of the
    /// stacked gain.
    pub fn to_stacked(&self) -> DMatrix<f64> {
        let w = &self.window;
        let (n, p) = (w.n(), w.p());
        let mut l = DMatrix::zeros(w.state_dim(), w.output_dim());
        for tau in 0..w.steps() {
            for k in 0..w.measured() {
                l.view_mut(((tau + 1) * n, (k + 1) * p), (n, p))
                    .copy_from(self.get(tau, k));
            }
        }
        l
    }

    pub fn from_stacked(window: &Window, stacked: &DMatrix<f64>) -> Result<Self> {
        if stacked.shape() != (window.state_dim(), window.output_dim()) {
            return Err(Error::Model(format!(
                "stacked gain is {:?}, expected ({}, {})",
                stacked.shape(),
                window.state_dim(),
                window.output_dim()
            )));
        }
        let (n, p) = (window.n(), window.p());
        GainBlocks::from_fn(window, |tau, k| {
            stacked
                .view(((tau + 1) * n, (k + 1) * p), (n, p))
                .clone_owned()
        })
    }
}

/// Stacks measured outputs `y(t-Ts) … y(t)` as `[0; y…; 0]` of length `p̄`.
pub fn stack_outputs(outputs: &[DVector<f64>], window: &Window) -> Result<DVector<f64>> {
    if outputs.len() != window.measured() {
        return Err(Error::Model(format!(
            "expected {} outputs, got {}",
            window.measured(),
            outputs.len()
        )));
    }
    let p = window.p();
    let mut y_bar = DVector::zeros(window.output_dim());
    for (k, y) in outputs.iter().enumerate() {
        if y.len() != p {
            return Err(Error::Model(format!("output {k} has length {}", y.len())));
        }
        y_bar.rows_mut((k + 1) * p, p).copy_from(y);
    }
    Ok(y_bar)
}

/// Runs the observer over one window: solves the implicit recursion
/// `x̂(τ+1) = A(τ)x̂(τ) − Σₖ L[τ,k](C(k)x̂(k) − y(k))` from the arrival
/// estimate `x̂(t-Ts)` and returns the stacked estimates `x̂(t-Ts) … x̂(t+Tf)`.
pub fn apply_observer(
    ops: &StackedOperators,
    gain: &DMatrix<f64>,
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
    let closed = ops.closed_loop(gain)?;
    let mut rhs = gain * y_bar;
    rhs.rows_mut(0, window.n()).copy_from(arrival);
    closed
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("observer recursion is singular".into()))
}

/// Block `idx` of size `size` of a stacked vector.
pub fn block(v: &DVector<f64>, idx: usize, size: usize) -> DVector<f64> {
    v.rows(idx * size, size).clone_owned()
}
