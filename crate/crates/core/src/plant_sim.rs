//! Van der Pol oscillator: Euler discretization, linearization along
//! trajectories and noisy simulation.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix1x2, Matrix2, Vector2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::ltv_model::LtvSystem;
use crate::noise_lab::NoiseProfile;

pub type VdpState = Vector2<f64>;

pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_DURATION: f64 = 8.0;
pub const DEFAULT_X0: [f64; 2] = [1.0, 0.0];
/// State magnitude treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e6;

pub fn vdp_rhs(x: &VdpState) -> VdpState {
    Vector2::new(x[1], (1.0 - x[0] * x[0]) * x[1] - x[0])
}

pub fn jacobian(x: &VdpState) -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -2.0 * x[0] * x[1] - 1.0, 1.0 - x[0] * x[0])
}

pub fn output_matrix() -> Matrix1x2<f64> {
    Matrix1x2::new(1.0, 0.0)
}

pub fn euler_step(x: &VdpState, w: &VdpState, dt: f64) -> VdpState {
    x + (vdp_rhs(x) + w) * dt
}

/// Discrete-time linearization `(A, C)` of the Euler model at `x`.
pub fn linearize(x: &VdpState, dt: f64) -> (Matrix2<f64>, Matrix1x2<f64>) {
    (Matrix2::identity() + jacobian(x) * dt, output_matrix())
}

/// Noise-free Euler rollout of `steps` transitions (returns `steps + 1` states).
pub fn nominal_rollout(x0: &VdpState, steps: usize, dt: f64) -> Vec<VdpState> {
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(*x0);
    for k in 0..steps {
        traj.push(euler_step(&traj[k], &VdpState::zeros(), dt));
    }
    traj
}

/// LTV model in deviation coordinates around `reference`: transition `τ`
/// is the linearization at `reference[τ]`.
pub fn ltv_along(reference: &[VdpState], dt: f64) -> Result<LtvSystem> {
    let (a_seq, c_seq) = reference
        .iter()
        .map(|x| {
            let (a, c) = linearize(x, dt);
            (
                DMatrix::from_column_slice(2, 2, a.as_slice()),
                DMatrix::from_row_slice(1, 2, c.transpose().as_slice()),
            )
        })
        .unzip();
    LtvSystem::new(a_seq, c_seq)
}

/// Part of the Euler step not captured by the affine model at `x_ref`:
/// `F(x) − F(x_ref) − A(x_ref)(x − x_ref)` with `F` the noise-free step.
pub fn linearization_remainder(x_ref: &VdpState, x: &VdpState, dt: f64) -> VdpState {
    let zero = VdpState::zeros();
    let (a, _) = linearize(x_ref, dt);
    euler_step(x, &zero, dt) - euler_step(x_ref, &zero, dt) - a * (x - x_ref)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub states: Vec<VdpState>,
    pub outputs: Vec<f64>,
    /// Disturbance applied at each time (the last one drives no transition).
    pub disturbances: Vec<VdpState>,
    pub measurement_noise: Vec<f64>,
    pub a_seq: Vec<Matrix2<f64>>,
    pub c_seq: Vec<Matrix1x2<f64>>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// LTV model along the true trajectory.
    pub fn ltv(&self) -> Result<LtvSystem> {
        ltv_along(&self.states, self.times.get(1).copied().unwrap_or(DEFAULT_DT))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
        writer
            .write_record(["t", "x1", "x2", "y", "w1", "w2", "v"])
            .map_err(csv_err)?;
        for k in 0..self.len() {
            writer
                .write_record(
                    [
                        self.times[k],
                        self.states[k][0],
                        self.states[k][1],
                        self.outputs[k],
                        self.disturbances[k][0],
                        self.disturbances[k][1],
                        self.measurement_noise[k],
                    ]
                    .map(|x| x.to_string()),
                )
                .map_err(csv_err)?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Number of Euler steps covering `duration`; it must be a multiple of `dt`.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite() && duration >= 0.0 && duration.is_finite()) {
        return Err(Error::Contract(format!("invalid duration {duration} / dt {dt}")));
    }
    let steps = (duration / dt).round();
    if (steps * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(Error::Contract(format!(
            "duration {duration} is not a multiple of dt {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Simulates from given joint draws: row `k` of `draws` is `[w₁, w₂, v]`
/// at time `k·dt`; `draws.nrows()` times are produced.
pub fn simulate_with_draws(x0: &VdpState, draws: &DMatrix<f64>, dt: f64) -> Result<SimTrace> {
    if draws.ncols() != 3 || draws.nrows() == 0 {
        return Err(Error::Contract(format!(
            "expected K×3 noise draws, got {}×{}",
            draws.nrows(),
            draws.ncols()
        )));
    }
    if !x0.iter().all(|x| x.is_finite()) {
        return Err(Error::Contract("non-finite initial state".into()));
    }
    let len = draws.nrows();
    let mut trace = SimTrace {
        times: Vec::with_capacity(len),
        states: Vec::with_capacity(len),
        outputs: Vec::with_capacity(len),
        disturbances: Vec::with_capacity(len),
        measurement_noise: Vec::with_capacity(len),
        a_seq: Vec::with_capacity(len),
        c_seq: Vec::with_capacity(len),
    };
    let mut x = *x0;
    for k in 0..len {
        let w = Vector2::new(draws[(k, 0)], draws[(k, 1)]);
        let v = draws[(k, 2)];
        let (a, c) = linearize(&x, dt);
        trace.times.push(k as f64 * dt);
        trace.states.push(x);
        trace.outputs.push(x[0] + v);
        trace.disturbances.push(w);
        trace.measurement_noise.push(v);
        trace.a_seq.push(a);
        trace.c_seq.push(c);
        if k + 1 < len {
            x = euler_step(&x, &w, dt);
            let magnitude = x.amax();
            if !(magnitude <= DIVERGENCE_BOUND) {
                return Err(Error::Instability {
                    step: k + 1,
                    magnitude,
                });
            }
        }
    }
    Ok(trace)
}

/// Simulates `duration` seconds (`duration/dt + 1` samples) with noise drawn
/// from `profile`.
pub fn simulate<R: Rng + ?Sized>(
    x0: &VdpState,
    profile: &NoiseProfile,
    duration: f64,
    dt: f64,
    rng: &mut R,
) -> Result<SimTrace> {
    profile.validate()?;
    let steps = step_count(duration, dt)?;
    let mut draws = DMatrix::zeros(steps + 1, 3);
    for k in 0..=steps {
        let d = profile.sample(k as f64 * dt, rng);
        draws.row_mut(k).copy_from_slice(&d);
    }
    simulate_with_draws(x0, &draws, dt)
}

/// Column-stacked copy of a state for the dynamic-size estimator APIs.
pub fn to_dvector(x: &VdpState) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}
