//! Reference estimators: extended Kalman filter and unconstrained
//! quadratic-cost moving horizon estimation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::noise_lab::RealizationCorpus;
use crate::plant_sim::{self, VdpState};

/// Largest condition estimate accepted for the least-squares normal equations.
pub const MAX_NORMAL_CONDITION: f64 = 1e14;

/// Discrete-time model `x⁺ = F(x) + w`, `y = h(x) + v` with its Jacobians.
pub trait Dynamics {
    fn propagate(&self, x: &DVector<f64>) -> DVector<f64>;
    fn transition(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn output(&self, x: &DVector<f64>) -> DVector<f64>;
    fn output_matrix(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Time-invariant linear model.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl Dynamics for LinearDynamics {
    fn propagate(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn transition(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }

    fn output_matrix(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.c.clone()
    }
}

/// Euler-discretized Van der Pol oscillator measuring the first state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VdpDynamics {
    pub dt: f64,
}

impl VdpDynamics {
    fn state(x: &DVector<f64>) -> VdpState {
        VdpState::new(x[0], x[1])
    }
}

impl Dynamics for VdpDynamics {
    fn propagate(&self, x: &DVector<f64>) -> DVector<f64> {
        let next = plant_sim::euler_step(&Self::state(x), &VdpState::zeros(), self.dt);
        plant_sim::to_dvector(&next)
    }

    fn transition(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (a, _) = plant_sim::linearize(&Self::state(x), self.dt);
        DMatrix::from_column_slice(2, 2, a.as_slice())
    }

    fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, x[0])
    }

    fn output_matrix(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0])
    }
}

fn require_spd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let symmetric = m.is_square() && (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0);
    if !symmetric || m.iter().any(|x| !x.is_finite()) || m.clone().cholesky().is_none() {
        return Err(Error::Contract(format!(
            "{name} must be symmetric positive definite"
        )));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Clone, Debug, PartialEq)]
pub struct EkfConfig {
    pub q_cov: DMatrix<f64>,
    pub r_cov: DMatrix<f64>,
    pub p0: DMatrix<f64>,
}

impl EkfConfig {
    pub fn new(q_cov: DMatrix<f64>, r_cov: DMatrix<f64>, p0: DMatrix<f64>) -> Result<Self> {
        require_spd("Q_cov", &q_cov)?;
        require_spd("R_cov", &r_cov)?;
        require_spd("P0", &p0)?;
        if q_cov.nrows() != p0.nrows() {
            return Err(Error::Contract("Q_cov and P0 dimensions differ".into()));
        }
        Ok(EkfConfig { q_cov, r_cov, p0 })
    }
}

/// Measurement update in Joseph form; `y_hat` is the predicted output.
pub fn ekf_update(
    x: &DVector<f64>,
    cov: &DMatrix<f64>,
    y: &DVector<f64>,
    y_hat: &DVector<f64>,
    c: &DMatrix<f64>,
    r_cov: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s = symmetrize(&(c * cov * c.transpose() + r_cov));
    let s_chol = s
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is not positive definite".into()))?;
    // K = P Cᵀ S⁻¹, computed as (S⁻¹ C P)ᵀ
    let gain = s_chol.solve(&(c * cov)).transpose();
    let x_post = x + &gain * (y - y_hat);
    let i_kc = DMatrix::identity(x.len(), x.len()) - &gain * c;
    let p_post = &i_kc * cov * i_kc.transpose() + &gain * r_cov * gain.transpose();
    Ok((x_post, symmetrize(&p_post)))
}

/// Time update `x⁺ = F(x)`, `P⁺ = A P Aᵀ + Q` with `A` the Jacobian at `x`.
pub fn ekf_predict<D: Dynamics + ?Sized>(
    model: &D,
    x: &DVector<f64>,
    cov: &DMatrix<f64>,
    q_cov: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let a = model.transition(x);
    let p = &a * cov * a.transpose() + q_cov;
    (model.propagate(x), symmetrize(&p))
}

/// One filter cycle: update the prior `(x, P)` for time `t` with `yₜ`, then
/// predict time `t+1`. Returns the one-step-ahead prediction and covariance.
pub fn ekf_step<D: Dynamics + ?Sized>(
    x: &DVector<f64>,
    cov: &DMatrix<f64>,
    y: &DVector<f64>,
    model: &D,
    config: &EkfConfig,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let c = model.output_matrix(x);
    let (x_post, p_post) = ekf_update(x, cov, y, &model.output(x), &c, &config.r_cov)?;
    Ok(ekf_predict(model, &x_post, &p_post, &config.q_cov))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QmheConfig {
    pub horizon: usize,
    /// Process noise covariance; the cost weight is its inverse.
    pub qw: DMatrix<f64>,
    /// Measurement noise covariance.
    pub rv: DMatrix<f64>,
    /// Covariance of the prior on the window-initial state.
    pub p_arrival: DMatrix<f64>,
}

impl QmheConfig {
    pub fn new(
        horizon: usize,
        qw: DMatrix<f64>,
        rv: DMatrix<f64>,
        p_arrival: DMatrix<f64>,
    ) -> Result<Self> {
        require_spd("Qw", &qw)?;
        require_spd("Rv", &rv)?;
        require_spd("P_arrival", &p_arrival)?;
        if qw.nrows() != p_arrival.nrows() {
            return Err(Error::Contract("Qw and P_arrival dimensions differ".into()));
        }
        Ok(QmheConfig {
            horizon,
            qw,
            rv,
            p_arrival,
        })
    }
}

/// Data of one estimation window of `T_s` transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct QmheWindow {
    /// `T_s + 1` transition matrices; the last one maps the final window
    /// state to the prediction.
    pub a_seq: Vec<DMatrix<f64>>,
    /// `T_s + 1` output matrices.
    pub c_seq: Vec<DMatrix<f64>>,
    /// `T_s + 1` outputs.
    pub outputs: Vec<DVector<f64>>,
    pub prior: DVector<f64>,
    /// Overrides the configured arrival covariance when present.
    pub prior_cov: Option<DMatrix<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QmheSolution {
    pub states: Vec<DVector<f64>>,
    pub disturbances: Vec<DVector<f64>>,
    pub prediction: DVector<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
}

/// Inverse of the lower Cholesky factor, so that `‖W r‖² = rᵀ Σ⁻¹ r`.
fn whitening(name: &str, cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Contract(format!("{name} must be positive definite")))?
        .l();
    l.solve_lower_triangular(&DMatrix::identity(cov.nrows(), cov.nrows()))
        .ok_or_else(|| Error::Numerical(format!("{name} factor is singular")))
}

pub fn qmhe_solve(window: &QmheWindow, config: &QmheConfig) -> Result<QmheSolution> {
    let ts = config.horizon;
    let n = config.qw.nrows();
    let p = config.rv.nrows();
    if window.a_seq.len() != ts + 1
        || window.c_seq.len() != ts + 1
        || window.outputs.len() != ts + 1
        || window.prior.len() != n
    {
        return Err(Error::Contract(format!(
            "window must hold {} transitions, output maps and outputs",
            ts + 1
        )));
    }
    if window.a_seq.iter().any(|a| a.shape() != (n, n))
        || window.c_seq.iter().any(|c| c.shape() != (p, n))
        || window.outputs.iter().any(|y| y.len() != p)
    {
        return Err(Error::Contract("window matrices have inconsistent shapes".into()));
    }
    let p_arrival = window.prior_cov.as_ref().unwrap_or(&config.p_arrival);
    let w_arrival = whitening("P_arrival", p_arrival)?;
    let w_process = whitening("Qw", &config.qw)?;
    let w_meas = whitening("Rv", &config.rv)?;

    // decision vector z = [x₀; w₀; …; w_{T_s−1}]; state k is Φ_k z
    let nz = n * (ts + 1);
    let rows = n + n * ts + p * (ts + 1);
    let mut jac = DMatrix::zeros(rows, nz);
    let mut rhs = DVector::zeros(rows);
    jac.view_mut((0, 0), (n, n)).copy_from(&w_arrival);
    rhs.rows_mut(0, n).copy_from(&(&w_arrival * &window.prior));
    for k in 0..ts {
        jac.view_mut((n + k * n, n * (k + 1)), (n, n))
            .copy_from(&w_process);
    }
    let meas_row = n + n * ts;
    let mut phi = DMatrix::zeros(n, nz);
    phi.view_mut((0, 0), (n, n)).fill_with_identity();
    for k in 0..=ts {
        let weighted_c = &w_meas * &window.c_seq[k];
        jac.view_mut((meas_row + k * p, 0), (p, nz))
            .copy_from(&(&weighted_c * &phi));
        rhs.rows_mut(meas_row + k * p, p)
            .copy_from(&(&w_meas * &window.outputs[k]));
        if k < ts {
            phi = &window.a_seq[k] * &phi;
            for i in 0..n {
                phi[(i, n * (k + 1) + i)] += 1.0;
            }
        }
    }

    let normal = jac.transpose() * &jac;
    let jtb = jac.transpose() * &rhs;
    let chol = normal.clone().cholesky().ok_or(Error::Conditioning {
        condition: f64::INFINITY,
    })?;
    let diag = chol.l_dirty().diagonal();
    let condition = (diag.max() / diag.min()).powi(2);
    if !(condition <= MAX_NORMAL_CONDITION) {
        return Err(Error::Conditioning { condition });
    }
    let mut z = chol.solve(&jtb);
    // one step of iterative refinement
    let correction = chol.solve(&(&jtb - &normal * &z));
    z += correction;

    let residual = &jac * &z - &rhs;
    let gradient_norm = (jac.transpose() * &residual * 2.0).norm();
    let mut states = Vec::with_capacity(ts + 1);
    states.push(z.rows(0, n).into_owned());
    let disturbances: Vec<DVector<f64>> = (0..ts)
        .map(|k| z.rows(n * (k + 1), n).into_owned())
        .collect();
    for k in 0..ts {
        let next = &window.a_seq[k] * &states[k] + &disturbances[k];
        states.push(next);
    }
    let prediction = &window.a_seq[ts] * &states[ts];
    Ok(QmheSolution {
        states,
        disturbances,
        prediction,
        objective: residual.norm_squared(),
        gradient_norm,
    })
}

/// Sample covariance (denominator `N − 1`) of the columns of `samples`.
pub fn empirical_covariance(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let count = samples.ncols();
    if count < 2 {
        return Err(Error::Contract("need at least two samples for a covariance".into()));
    }
    let mean = samples.column_mean();
    let centered = DMatrix::from_fn(samples.nrows(), count, |i, j| samples[(i, j)] - mean[i]);
    Ok(symmetrize(&(&centered * centered.transpose() / (count as f64 - 1.0))))
}

/// Covariances of the training noise used by both baselines.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineTuning {
    /// Covariance of the discrete-time disturbance `scale·w`.
    pub q_cov: DMatrix<f64>,
    pub r_cov: DMatrix<f64>,
}

impl BaselineTuning {
    /// Empirical covariances over every training draw at every time step;
    /// disturbances are scaled by `disturbance_scale` before pooling.
    pub fn from_corpus(corpus: &RealizationCorpus, disturbance_scale: f64) -> Result<Self> {
        let (n, p) = (corpus.n(), corpus.p());
        let train = corpus.train();
        let steps = corpus.steps();
        let mut w = DMatrix::zeros(n, train.len() * steps);
        let mut v = DMatrix::zeros(p, train.len() * steps);
        for (i, &real) in train.iter().enumerate() {
            for k in 0..steps {
                let col = i * steps + k;
                w.set_column(col, &(corpus.disturbance(real, k) * disturbance_scale));
                v.set_column(col, &corpus.measurement_noise(real, k));
            }
        }
        Ok(BaselineTuning {
            q_cov: empirical_covariance(&w)?,
            r_cov: empirical_covariance(&v)?,
        })
    }

    /// Adds `floor·I` so that degenerate (e.g. noise-free) corpora still give
    /// positive definite weights.
    pub fn regularized(mut self, floor: f64) -> Self {
        for i in 0..self.q_cov.nrows() {
            self.q_cov[(i, i)] += floor;
        }
        for i in 0..self.r_cov.nrows() {
            self.r_cov[(i, i)] += floor;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn dm(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn lti() -> LinearDynamics {
        LinearDynamics {
            a: dm(2, 2, &[0.9, 0.2, -0.1, 0.8]),
            c: dm(1, 2, &[1.0, 0.0]),
        }
    }

    fn gaussian(rng: &mut ChaCha8Rng, cov: &DMatrix<f64>) -> DVector<f64> {
        let l = cov.clone().cholesky().unwrap().l();
        let z = DVector::from_fn(cov.nrows(), |_, _| StandardNormal.sample(rng));
        l * z
    }

    #[test]
    fn no_measurement_limit() {
        let model = lti();
        let config = EkfConfig::new(
            DMatrix::identity(2, 2) * 0.01,
            dm(1, 1, &[1e12]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0, -1.0]);
        let y = DVector::from_vec(vec![100.0]);
        let (pred, _) = ekf_step(&x, &config.p0, &y, &model, &config).unwrap();
        assert_abs_diff_eq!(pred, &model.a * &x, epsilon = 1e-9);
    }

    #[test]
    fn exact_measurement_limit() {
        let config = EkfConfig::new(
            DMatrix::identity(2, 2) * 0.01,
            dm(1, 1, &[1e-12]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0, -1.0]);
        let y = DVector::from_vec(vec![3.0]);
        let c = dm(1, 2, &[1.0, 0.0]);
        let (post, _) = ekf_update(&x, &config.p0, &y, &(&c * &x), &c, &config.r_cov).unwrap();
        assert_abs_diff_eq!(post[0], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn singular_innovation_is_reported() {
        let x = DVector::zeros(2);
        let c = dm(1, 2, &[1.0, 0.0]);
        let res = ekf_update(
            &x,
            &DMatrix::zeros(2, 2),
            &DVector::zeros(1),
            &DVector::zeros(1),
            &c,
            &DMatrix::zeros(1, 1),
        );
        assert!(matches!(res, Err(Error::Numerical(_))));
    }

    #[test]
    fn riccati_steady_state() {
        let model = lti();
        let q = dm(2, 2, &[0.02, 0.005, 0.005, 0.01]);
        let r = dm(1, 1, &[0.05]);
        // iterate the prediction Riccati recursion to its fixed point
        let mut p = DMatrix::identity(2, 2);
        for _ in 0..2000 {
            let s = &model.c * &p * model.c.transpose() + &r;
            let k = &model.a * &p * model.c.transpose() / s[(0, 0)];
            p = &model.a * &p * model.a.transpose() + &q - &k * &model.c * &p * model.a.transpose();
        }
        let expected = p.trace();

        let config = EkfConfig::new(q.clone(), r.clone(), p.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut x = gaussian(&mut rng, &p);
        let mut x_hat = DVector::zeros(2);
        let mut cov = p.clone();
        let steps = 10_000;
        let mut sq = 0.0;
        for _ in 0..steps {
            let y = &model.c * &x + gaussian(&mut rng, &r);
            let (pred, next_cov) = ekf_step(&x_hat, &cov, &y, &model, &config).unwrap();
            x = &model.a * &x + gaussian(&mut rng, &q);
            sq += (&x - &pred).norm_squared();
            x_hat = pred;
            cov = next_cov;
        }
        let mse = sq / steps as f64;
        assert!((mse / expected - 1.0).abs() < 0.05, "mse {mse} vs {expected}");
    }

    #[test]
    fn covariance_stays_symmetric_on_oscillator() {
        let model = VdpDynamics { dt: 0.1 };
        let config = EkfConfig::new(
            DMatrix::identity(2, 2) * 1e-4,
            dm(1, 1, &[0.01]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = VdpState::new(1.0, 0.0);
        let mut x_hat = DVector::from_vec(vec![0.8, 0.2]);
        let mut cov = config.p0.clone();
        for _ in 0..1000 {
            let y = DVector::from_element(1, x[0] + 0.1 * rng.random_range(-1.0..1.0));
            let (pred, next_cov) = ekf_step(&x_hat, &cov, &y, &model, &config).unwrap();
            assert!((&next_cov - next_cov.transpose()).amax() <= 1e-12);
            assert!(next_cov.clone().cholesky().is_some());
            x = plant_sim::euler_step(&x, &VdpState::zeros(), 0.1);
            x_hat = pred;
            cov = next_cov;
        }
    }

    fn qmhe_config(ts: usize) -> QmheConfig {
        QmheConfig::new(
            ts,
            dm(2, 2, &[0.02, 0.005, 0.005, 0.01]),
            dm(1, 1, &[0.05]),
            DMatrix::identity(2, 2) * 0.5,
        )
        .unwrap()
    }

    #[test]
    fn noise_free_window_is_recovered() {
        let model = lti();
        let ts = 5;
        let mut x = DVector::from_vec(vec![0.3, -0.7]);
        let prior = x.clone();
        let mut truth = Vec::new();
        let mut outputs = Vec::new();
        for _ in 0..=ts {
            outputs.push(&model.c * &x);
            truth.push(x.clone());
            x = &model.a * &x;
        }
        let window = QmheWindow {
            a_seq: vec![model.a.clone(); ts + 1],
            c_seq: vec![model.c.clone(); ts + 1],
            outputs,
            prior,
            prior_cov: None,
        };
        let sol = qmhe_solve(&window, &qmhe_config(ts)).unwrap();
        assert!(sol.objective < 1e-20);
        for k in 0..=ts {
            assert_abs_diff_eq!(sol.states[k], truth[k], epsilon = 1e-10);
        }
        assert_abs_diff_eq!(sol.prediction, x, epsilon = 1e-10);
    }

    #[test]
    fn scalar_single_measurement_closed_form() {
        let (prior, p, c, r, y) = (0.4, 2.0, 1.5, 0.3, 1.1);
        let config = QmheConfig::new(0, dm(1, 1, &[1.0]), dm(1, 1, &[r]), dm(1, 1, &[p])).unwrap();
        let window = QmheWindow {
            a_seq: vec![dm(1, 1, &[0.7])],
            c_seq: vec![dm(1, 1, &[c])],
            outputs: vec![DVector::from_element(1, y)],
            prior: DVector::from_element(1, prior),
            prior_cov: None,
        };
        let sol = qmhe_solve(&window, &config).unwrap();
        let expected = (prior / p + c * y / r) / (1.0 / p + c * c / r);
        assert_abs_diff_eq!(sol.states[0][0], expected, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.prediction[0], 0.7 * expected, epsilon = 1e-14);
    }

    #[test]
    fn matches_rts_smoother() {
        let model = lti();
        let ts = 8;
        let config = qmhe_config(ts);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let prior = DVector::from_vec(vec![0.2, 0.1]);
            let mut x = &prior + gaussian(&mut rng, &config.p_arrival);
            let mut outputs = Vec::new();
            for _ in 0..=ts {
                outputs.push(&model.c * &x + gaussian(&mut rng, &config.rv));
                x = &model.a * &x + gaussian(&mut rng, &config.qw);
            }
            // forward filter
            let mut filt = Vec::new();
            let mut filt_cov = Vec::new();
            let mut pred = vec![prior.clone()];
            let mut pred_cov = vec![config.p_arrival.clone()];
            for k in 0..=ts {
                let (xf, pf) = ekf_update(
                    &pred[k],
                    &pred_cov[k],
                    &outputs[k],
                    &(&model.c * &pred[k]),
                    &model.c,
                    &config.rv,
                )
                .unwrap();
                let (xp, pp) = ekf_predict(&model, &xf, &pf, &config.qw);
                filt.push(xf);
                filt_cov.push(pf);
                pred.push(xp);
                pred_cov.push(pp);
            }
            // backward pass
            let mut smooth = filt.clone();
            for k in (0..ts).rev() {
                let g = &filt_cov[k] * model.a.transpose() * pred_cov[k + 1].clone().try_inverse().unwrap();
                smooth[k] = &filt[k] + g * (&smooth[k + 1] - &pred[k + 1]);
            }
            let window = QmheWindow {
                a_seq: vec![model.a.clone(); ts + 1],
                c_seq: vec![model.c.clone(); ts + 1],
                outputs,
                prior,
                prior_cov: None,
            };
            let sol = qmhe_solve(&window, &config).unwrap();
            for k in 0..=ts {
                assert_abs_diff_eq!(sol.states[k], smooth[k], epsilon = 1e-8);
            }
            assert!(sol.gradient_norm <= 1e-8, "gradient {}", sol.gradient_norm);
        }
    }

    #[test]
    fn rejects_bad_config_and_window() {
        assert!(QmheConfig::new(2, dm(1, 1, &[-1.0]), dm(1, 1, &[1.0]), dm(1, 1, &[1.0])).is_err());
        let config = QmheConfig::new(2, dm(1, 1, &[1.0]), dm(1, 1, &[1.0]), dm(1, 1, &[1.0])).unwrap();
        let window = QmheWindow {
            a_seq: vec![dm(1, 1, &[1.0])],
            c_seq: vec![dm(1, 1, &[1.0])],
            outputs: vec![DVector::zeros(1)],
            prior: DVector::zeros(1),
            prior_cov: None,
        };
        assert!(matches!(qmhe_solve(&window, &config), Err(Error::Contract(_))));
    }

    #[test]
    fn empirical_covariance_known_values() {
        let samples = dm(2, 4, &[1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 6.0, 8.0]);
        let cov = empirical_covariance(&samples).unwrap();
        let var = 5.0 / 3.0;
        assert_abs_diff_eq!(cov, dm(2, 2, &[var, 2.0 * var, 2.0 * var, 4.0 * var]), epsilon = 1e-14);
    }
}
