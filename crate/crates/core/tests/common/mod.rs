//! Independent reference computations shared by the integration tests.
//! Nothing here reuses the stacked operators of the library: every oracle is
//! assembled from the raw per-step matrices.
#![allow(dead_code)]

use drmhe::ltv_model::{GainBlocks, LtvSystem, Window};
use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn random_vector<R: Rng>(rng: &mut R, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-scale..scale))
}

pub fn random_system<R: Rng>(rng: &mut R, window: &Window) -> LtvSystem {
    let (n, p) = (window.n(), window.p());
    let a_seq = (0..window.steps())
        .map(|_| random_matrix(rng, n, n, 1.0))
        .collect();
    let c_seq = (0..window.steps())
        .map(|_| random_matrix(rng, p, n, 1.0))
        .collect();
    LtvSystem::new(a_seq, c_seq).unwrap()
}

pub fn random_gains<R: Rng>(rng: &mut R, window: &Window, scale: f64) -> GainBlocks {
    GainBlocks::from_fn(window, |_, _| random_matrix(rng, window.n(), window.p(), scale)).unwrap()
}

/// Observer error `x̂(τ) − x(τ)` over the window, obtained by writing the
/// observer recursion
/// `x̂(τ+1) = A(τ)x̂(τ) + Σ_k L[τ,k](y(k) − C(k)x̂(k))`, `y(k) = C(k)x(k) + v(k)`
/// as one linear system in the unknown estimates and solving it with QR.
/// The plant obeys `x(τ+1) = A(τ)x(τ) + w(τ)`.
pub fn time_domain_error(
    system: &LtvSystem,
    window: &Window,
    gains: &GainBlocks,
    x0: &DVector<f64>,
    arrival: &DVector<f64>,
    w: &[DVector<f64>],
    v: &[DVector<f64>],
) -> DVector<f64> {
    let (n, steps, measured) = (window.n(), window.steps(), window.measured());
    let mut x = vec![x0.clone()];
    for tau in 0..steps {
        x.push(system.a(tau) * &x[tau] + &w[tau]);
    }
    let y: Vec<DVector<f64>> = (0..measured)
        .map(|k| system.c(k) * &x[k] + &v[k])
        .collect();

    let dim = n * (steps + 1);
    let mut lhs = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for i in 0..n {
        lhs[(i, i)] = 1.0;
        rhs[i] = arrival[i];
    }
    for tau in 0..steps {
        let row = n * (tau + 1);
        for i in 0..n {
            lhs[(row + i, row + i)] += 1.0;
        }
        let a = system.a(tau);
        for i in 0..n {
            for j in 0..n {
                lhs[(row + i, n * tau + j)] -= a[(i, j)];
            }
        }
        for k in 0..measured {
            let lc = gains.get(tau, k) * system.c(k);
            for i in 0..n {
                for j in 0..n {
                    lhs[(row + i, n * k + j)] += lc[(i, j)];
                }
            }
            let ly = gains.get(tau, k) * &y[k];
            for i in 0..n {
                rhs[row + i] += ly[i];
            }
        }
    }
    let estimates = lhs.qr().solve(&rhs).expect("observer system is regular");
    let mut error = estimates;
    for (tau, state) in x.iter().enumerate() {
        for i in 0..n {
            error[n * tau + i] -= state[i];
        }
    }
    error
}

fn free_var(problem: &mut Problem) -> Variable {
    problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))
}

/// `min Σᵢ |μᵢ − (Ψφ)ᵢ|` solved by minilp.
pub fn reference_l1(psi: &DMatrix<f64>, mu: &DVector<f64>) -> f64 {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let phi: Vec<Variable> = (0..psi.ncols()).map(|_| free_var(&mut problem)).collect();
    for i in 0..psi.nrows() {
        let t = problem.add_var(1.0, (0.0, f64::INFINITY));
        for sign in [1.0, -1.0] {
            // t ≥ ±(μᵢ − Ψᵢφ)  ⇔  t ± Ψᵢφ ≥ ±μᵢ
            let mut expr = LinearExpr::empty();
            expr.add(t, 1.0);
            for (j, var) in phi.iter().enumerate() {
                expr.add(*var, sign * psi[(i, j)]);
            }
            problem.add_constraint(expr, ComparisonOp::Ge, sign * mu[i]);
        }
    }
    problem.solve().expect("l1 problem is feasible and bounded").objective()
}

/// Affine expression `Σ cᵥ·var + constant`.
#[derive(Clone, Debug, Default)]
struct Affine {
    terms: Vec<(Variable, f64)>,
    constant: f64,
}

/// Minimum over causal observer maps of
/// `Σ_j ‖Q(Φ_v ṽⱼ + Φ_w w̃ⱼ)‖₁ + ‖Q[ε_v Φ_v, ε_w Φ_w]‖_F1`
/// subject to `Φ_v·(CZ) + Φ_w·(I − ZA) = I`, with `Φ_v` depending only on
/// the measured outputs and the arrival block not corrected. Solved as one
/// linear program over all entries of both maps.
#[allow(clippy::too_many_arguments)]
pub fn monolithic_risk(
    system: &LtvSystem,
    window: &Window,
    v_tilde: &DMatrix<f64>,
    w_tilde: &DMatrix<f64>,
    eps_v: f64,
    eps_w: f64,
    q: &DVector<f64>,
    empirical_scale: f64,
) -> f64 {
    let (n, p) = (window.n(), window.p());
    let blocks = window.steps() + 1;
    let (nbar, pbar) = (n * blocks, p * blocks);
    let measured = window.measured();

    // CZ: output block k+1 reads C(k)·x(k); I − ZA: A(k) below the diagonal
    let mut cz = DMatrix::zeros(pbar, nbar);
    for k in 0..window.steps() {
        cz.view_mut(((k + 1) * p, k * n), (p, n)).copy_from(system.c(k));
    }
    let mut i_za = DMatrix::identity(nbar, nbar);
    for k in 0..window.steps() {
        let a = system.a(k);
        for i in 0..n {
            for j in 0..n {
                i_za[((k + 1) * n + i, k * n + j)] -= a[(i, j)];
            }
        }
    }

    let mut problem = Problem::new(OptimizationDirection::Minimize);
    // Φ_v entry (i, c) is free for state rows after the first block and
    // output blocks 1..=Ts (measured outputs); zero otherwise.
    let allowed_v = |i: usize, c: usize| i >= n && c >= p && c < p * (measured + 1);
    let mut phi_v: Vec<Vec<Option<Variable>>> = vec![vec![None; pbar]; nbar];
    for (i, row) in phi_v.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            if allowed_v(i, c) {
                *slot = Some(free_var(&mut problem));
            }
        }
    }
    let phi_w: Vec<Vec<Variable>> = (0..nbar)
        .map(|_| (0..nbar).map(|_| free_var(&mut problem)).collect())
        .collect();

    // achievability, entry (i, c)
    for i in 0..nbar {
        for c in 0..nbar {
            let mut expr = LinearExpr::empty();
            for k in 0..pbar {
                if let Some(var) = phi_v[i][k] {
                    if cz[(k, c)] != 0.0 {
                        expr.add(var, cz[(k, c)]);
                    }
                }
            }
            for k in 0..nbar {
                if i_za[(k, c)] != 0.0 {
                    expr.add(phi_w[i][k], i_za[(k, c)]);
                }
            }
            problem.add_constraint(expr, ComparisonOp::Eq, if i == c { 1.0 } else { 0.0 });
        }
    }

    let add_abs = |problem: &mut Problem, expr: Affine, weight: f64| {
        if weight == 0.0 {
            return;
        }
        let t = problem.add_var(weight, (0.0, f64::INFINITY));
        for sign in [1.0, -1.0] {
            // t ≥ ±(Σ c·var + constant)
            let mut lin = LinearExpr::empty();
            lin.add(t, 1.0);
            for (var, coeff) in &expr.terms {
                lin.add(*var, -sign * coeff);
            }
            problem.add_constraint(lin, ComparisonOp::Ge, sign * expr.constant);
        }
    };

    for i in 0..nbar {
        for j in 0..v_tilde.ncols() {
            let mut expr = Affine::default();
            for c in 0..pbar {
                if let Some(var) = phi_v[i][c] {
                    if v_tilde[(c, j)] != 0.0 {
                        expr.terms.push((var, v_tilde[(c, j)]));
                    }
                }
            }
            for c in 0..nbar {
                if w_tilde[(c, j)] != 0.0 {
                    expr.terms.push((phi_w[i][c], w_tilde[(c, j)]));
                }
            }
            add_abs(&mut problem, expr, q[i] * empirical_scale);
        }
        for c in 0..pbar {
            if let Some(var) = phi_v[i][c] {
                let expr = Affine {
                    terms: vec![(var, 1.0)],
                    constant: 0.0,
                };
                add_abs(&mut problem, expr, q[i] * eps_v);
            }
        }
        for c in 0..nbar {
            let expr = Affine {
                terms: vec![(phi_w[i][c], 1.0)],
                constant: 0.0,
            };
            add_abs(&mut problem, expr, q[i] * eps_w);
        }
    }
    problem
        .solve()
        .expect("risk program is feasible and bounded")
        .objective()
}
