//! Least-absolute-deviations fits `min_φ ‖Ψφ − μ‖₁` by a dense primal simplex.
//!
//! The LP is written with free variables `φ` and split residuals
//! `Ψφ + r⁺ − r⁻ = μ`, `r± ≥ 0`, minimizing `Σ(r⁺ + r⁻)`. Starting from the
//! all-residual basis is always feasible, so no phase one is needed.
//! Pivoting uses Dantzig's rule with lowest-index tie breaking and falls back
//! to Bland's rule after a run of degenerate pivots, which keeps the solver
//! deterministic and cycle free.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Dual feasibility slack accepted when certifying a solution as optimal.
pub const DUAL_TOL: f64 = 1e-6;

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Clone, Debug)]
pub struct L1Problem {
    psi: DMatrix<f64>,
    mu: DVector<f64>,
}

impl L1Problem {
    pub fn new(psi: DMatrix<f64>, mu: DVector<f64>) -> Result<Self> {
        validate(&psi, &mu)?;
        Ok(L1Problem { psi, mu })
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Terminated with every reduced cost within tolerance, but the
    /// recovered dual certificate misses `DUAL_TOL`.
    ToleranceLimited,
}

#[derive(Clone, Debug)]
pub struct L1Solution {
    pub phi: DVector<f64>,
    /// `‖Ψφ − μ‖₁`, recomputed from `phi`.
    pub objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Dual certificate `s ∈ [−1,1]ᵐ` with `Ψᵀs ≈ 0` and
    /// `sₖ = sign(Ψφ − μ)ₖ` wherever the residual is nonzero.
    pub dual: DVector<f64>,
}

pub fn l1_fit(problem: &L1Problem, tol: f64) -> Result<L1Solution> {
    check_tol(tol)?;
    Simplex::new(&problem.psi, &problem.mu, tol).solve()
}

/// Solves several fits sharing one design matrix; results keep input order.
pub fn l1_fit_batch(
    psi: &DMatrix<f64>,
    targets: &[DVector<f64>],
    tol: f64,
) -> Vec<Result<L1Solution>> {
    if let Err(e) = check_tol(tol) {
        let msg = e.to_string();
        return targets.iter().map(|_| Err(Error::Contract(msg.clone()))).collect();
    }
    targets
        .par_iter()
        .map(|mu| {
            validate(psi, mu)?;
            Simplex::new(psi, mu, tol).solve()
        })
        .collect()
}

pub fn l1_objective(psi: &DMatrix<f64>, phi: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    (psi * phi - mu).lp_norm(1)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Contract(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn validate(psi: &DMatrix<f64>, mu: &DVector<f64>) -> Result<()> {
    if psi.nrows() == 0 || psi.ncols() == 0 {
        return Err(Error::Contract(format!(
            "design matrix must be non-empty, got {:?}",
            psi.shape()
        )));
    }
    if psi.nrows() != mu.len() {
        return Err(Error::Contract(format!(
            "design matrix has {} rows but target has {} entries",
            psi.nrows(),
            mu.len()
        )));
    }
    if psi.iter().chain(mu.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Contract("non-finite entry in l1 problem".into()));
    }
    Ok(())
}

/// Dense tableau over variables `[φ (free) | r⁺ | r⁻]`.
struct Simplex<'a> {
    psi: &'a DMatrix<f64>,
    mu: &'a DVector<f64>,
    m: usize,
    d: usize,
    width: usize,
    tableau: Vec<f64>,
    rhs: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// `φⱼ` is stored negated when `negated[j]`.
    negated: Vec<bool>,
    opt_tol: f64,
    pivot_tol: f64,
    /// Primal feasibility slack used by the ratio test.
    feas_tol: f64,
    max_iter: usize,
}

impl<'a> Simplex<'a> {
    fn new(psi: &'a DMatrix<f64>, mu: &'a DVector<f64>, tol: f64) -> Self {
        let (m, d) = psi.shape();
        let width = d + 2 * m;
        let mut tableau = vec![0.0; m * width];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut is_basic = vec![false; width];
        for k in 0..m {
            let sign = if mu[k] >= 0.0 { 1.0 } else { -1.0 };
            let row = &mut tableau[k * width..(k + 1) * width];
            for j in 0..d {
                row[j] = sign * psi[(k, j)];
            }
            row[d + k] = sign;
            row[d + m + k] = -sign;
            rhs[k] = sign * mu[k];
            basis[k] = if sign > 0.0 { d + k } else { d + m + k };
            is_basic[basis[k]] = true;
        }
        // every basic variable has unit cost
        let mut reduced = vec![0.0; width];
        for j in d..width {
            reduced[j] = 1.0;
        }
        for k in 0..m {
            let row = &tableau[k * width..(k + 1) * width];
            for j in 0..width {
                reduced[j] -= row[j];
            }
        }
        let scale = psi.amax().max(mu.amax()).max(1.0);
        Simplex {
            psi,
            mu,
            m,
            d,
            width,
            tableau,
            rhs,
            reduced,
            basis,
            is_basic,
            negated: vec![false; d],
            opt_tol: tol,
            pivot_tol: 1e-9 * scale,
            feas_tol: 1e-9 * scale,
            max_iter: 50 * (m + d) + 1000,
        }
    }

    fn solve(mut self) -> Result<L1Solution> {
        let mut iterations = 0;
        let mut degenerate_run = 0;
        let mut bland = false;
        loop {
            let Some(entering) = self.choose_entering(bland) else {
                break;
            };
            if iterations >= self.max_iter {
                let phi = self.primal();
                return Err(Error::NonConvergence {
                    iterations,
                    best_objective: l1_objective(self.psi, &phi, self.mu),
                });
            }
            let Some(row) = self.choose_leaving(entering, bland) else {
                return Err(Error::Numerical(
                    "l1 program reported unbounded; design matrix is degenerate".into(),
                ));
            };
            if self.rhs[row] <= self.pivot_tol {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, entering);
            iterations += 1;
        }
        let phi = self.primal();
        let objective = l1_objective(self.psi, &phi, self.mu);
        let dual = self.dual();
        let status = if self.certificate_gap(&dual) <= DUAL_TOL * self.psi.amax().max(1.0) {
            SolveStatus::Optimal
        } else {
            SolveStatus::ToleranceLimited
        };
        Ok(L1Solution {
            phi,
            objective,
            iterations,
            status,
            dual,
        })
    }

    fn choose_entering(&mut self, bland: bool) -> Option<usize> {
        // Free variables first: once basic they never leave.
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.d {
            if self.is_basic[j] {
                continue;
            }
            let dj = self.reduced[j];
            if dj.abs() > self.opt_tol && best.is_none_or(|(_, s)| dj.abs() > s) {
                best = Some((j, dj.abs()));
                if bland {
                    break;
                }
            }
        }
        if let Some((j, _)) = best {
            if self.reduced[j] > 0.0 {
                self.negate_free(j);
            }
            return Some(j);
        }
        for j in self.d..self.width {
            if self.is_basic[j] {
                continue;
            }
            let dj = self.reduced[j];
            if dj < -self.opt_tol && best.is_none_or(|(_, s)| -dj > s) {
                best = Some((j, -dj));
                if bland {
                    break;
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn negate_free(&mut self, j: usize) {
        for k in 0..self.m {
            self.tableau[k * self.width + j] *= -1.0;
        }
        self.reduced[j] *= -1.0;
        self.negated[j] = !self.negated[j];
    }

    /// Ratio test over the rows of bounded basic variables. Outside Bland
    /// mode this is Harris' two-pass test: among the rows whose ratio is
    /// within the feasibility tolerance of the minimum, the largest pivot
    /// element wins, which keeps tiny pivots out of degenerate vertices.
    fn choose_leaving(&self, entering: usize, bland: bool) -> Option<usize> {
        let column = |k: usize| self.tableau[k * self.width + entering];
        let candidates = || {
            (0..self.m).filter(move |&k| self.basis[k] >= self.d && column(k) > self.pivot_tol)
        };
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for k in candidates() {
                let ratio = self.rhs[k] / column(k);
                best = match best {
                    Some((kb, rb)) if !(ratio < rb || (ratio == rb && self.basis[k] < self.basis[kb])) => {
                        Some((kb, rb))
                    }
                    _ => Some((k, ratio)),
                };
            }
            return best.map(|(k, _)| k);
        }
        let bound = candidates()
            .map(|k| (self.rhs[k] + self.feas_tol) / column(k))
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<usize> = None;
        for k in candidates() {
            if self.rhs[k] / column(k) <= bound && best.is_none_or(|b| column(k) > column(b)) {
                best = Some(k);
            }
        }
        best
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let piv = self.tableau[row * w + col];
        {
            let prow = &mut self.tableau[row * w..(row + 1) * w];
            for x in prow.iter_mut() {
                *x /= piv;
            }
            prow[col] = 1.0;
        }
        self.rhs[row] /= piv;
        let pivot_row: Vec<f64> = self.tableau[row * w..(row + 1) * w].to_vec();
        let pivot_rhs = self.rhs[row];
        for k in 0..self.m {
            if k == row {
                continue;
            }
            let factor = self.tableau[k * w + col];
            if factor == 0.0 {
                continue;
            }
            let r = &mut self.tableau[k * w..(k + 1) * w];
            for (x, p) in r.iter_mut().zip(&pivot_row) {
                *x -= factor * p;
            }
            r[col] = 0.0;
            self.rhs[k] -= factor * pivot_rhs;
            if self.rhs[k] < 0.0 && self.rhs[k] > -self.pivot_tol {
                self.rhs[k] = 0.0;
            }
        }
        let factor = self.reduced[col];
        for (x, p) in self.reduced.iter_mut().zip(&pivot_row) {
            *x -= factor * p;
        }
        self.reduced[col] = 0.0;
        self.is_basic[self.basis[row]] = false;
        self.is_basic[col] = true;
        self.basis[row] = col;
    }

    fn primal(&self) -> DVector<f64> {
        let mut phi = DVector::zeros(self.d);
        for (k, &var) in self.basis.iter().enumerate() {
            if var < self.d {
                phi[var] = if self.negated[var] {
                    -self.rhs[k]
                } else {
                    self.rhs[k]
                };
            }
        }
        phi
    }

    /// Multipliers `y` of `Ψφ + r⁺ − r⁻ = μ` satisfy `reduced(r⁺ₖ) = 1 − yₖ`;
    /// the certificate is `s = −y`.
    fn dual(&self) -> DVector<f64> {
        DVector::from_fn(self.m, |k, _| self.reduced[self.d + k] - 1.0)
    }

    fn certificate_gap(&self, s: &DVector<f64>) -> f64 {
        let stationarity = (self.psi.transpose() * s).amax();
        let bound = s.iter().fold(0.0f64, |acc, x| acc.max(x.abs() - 1.0));
        stationarity.max(bound)
    }
}
