//! Maximum likelihood for the diagonal k-DPP.
//!
//! The log-likelihood of observations `A_1, .., A_N` is
//! `Σ_r ⟨T(A_r), θ⟩ - N ψ_k(θ)`, concave in `θ` and flat along `1`. Fitting
//! runs gradient ascent on the minimal coordinates `θ̃` (last coordinate
//! pinned to zero), where the gradient is `N (T̄_i - η_i)`, `i < n`.

use serde::{Deserialize, Serialize};

use crate::combinatorics::SubsetIndex;
use crate::error::{DppError, Result};
use crate::kdpp::{from_minimal, log_partition, mean_parameter, to_minimal, MinimalParam};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Constant step applied to the per-observation gradient.
    Fixed(f64),
    /// Armijo backtracking; the first trial step doubles the last accepted one.
    Backtracking { beta: f64, c1: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            beta: 0.5,
            c1: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Init {
    #[default]
    Zeros,
    /// `θ_i = logit(T̄_i)`, clamped away from 0 and 1.
    MomentMatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_rule: StepRule,
    pub init: Init,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            step_rule: StepRule::default(),
            init: Init::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(DppError::domain("max_iters must be at least 1"));
        }
        if !(self.grad_tol > 0.0) || !self.grad_tol.is_finite() {
            return Err(DppError::domain("grad_tol must be positive"));
        }
        match self.step_rule {
            StepRule::Fixed(step) if !(step > 0.0) || !step.is_finite() => {
                Err(DppError::domain("fixed step must be positive"))
            }
            StepRule::Backtracking { beta, c1 }
                if !(beta > 0.0 && beta < 1.0) || !(c1 > 0.0 && c1 < 1.0) =>
            {
                Err(DppError::domain(
                    "backtracking needs 0 < beta < 1 and 0 < c1 < 1",
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_tilde_hat: MinimalParam,
    pub log_likelihood: f64,
    /// Euclidean norm of the full-data gradient at `theta_tilde_hat`.
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    /// `η(θ̂)`, all `n` coordinates.
    pub fitted_eta: Vec<f64>,
    pub empirical_frequencies: Vec<f64>,
    /// Objective after each iteration, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

/// Inclusion counts of a data set of equal-size subsets.
#[derive(Clone, Debug, PartialEq)]
struct Stats {
    n: usize,
    k: usize,
    count: usize,
    totals: Vec<f64>,
}

impl Stats {
    fn new(data: &[SubsetIndex], n: usize, k: usize) -> Result<Self> {
        let mut totals = vec![0.0; n];
        for (row, a) in data.iter().enumerate() {
            if a.n() != n {
                return Err(DppError::domain(format!(
                    "observation {} lives on a ground set of size {}, expected {n}",
                    row + 1,
                    a.n()
                )));
            }
            if a.len() != k {
                return Err(DppError::domain(format!(
                    "observation {} = {a} has size {}, expected {k}",
                    row + 1,
                    a.len()
                )));
            }
            for &e in a.elements() {
                totals[e] += 1.0;
            }
        }
        Ok(Self {
            n,
            k,
            count: data.len(),
            totals,
        })
    }

    fn frequencies(&self) -> Vec<f64> {
        self.totals.iter().map(|t| t / self.count as f64).collect()
    }

    fn log_likelihood(&self, theta: &[f64]) -> Result<f64> {
        if self.count == 0 {
            return Ok(0.0);
        }
        let linear: f64 = self.totals.iter().zip(theta).map(|(t, x)| t * x).sum();
        Ok(linear - self.count as f64 * log_partition(theta, self.k)?)
    }

    /// Gradient in `θ̃` and `η(θ)`.
    fn gradient(&self, theta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let eta = mean_parameter(theta, self.k)?;
        let g = (0..self.n - 1)
            .map(|i| self.totals[i] - self.count as f64 * eta[i])
            .collect();
        Ok((g, eta))
    }
}

fn ground_size(theta_tilde: &MinimalParam) -> usize {
    theta_tilde.theta_tilde.len() + 1
}

/// `Σ_r [Σ_{i∈A_r} θ_i - ψ_k(θ)]` with `θ = (θ̃, 0)`.
pub fn log_likelihood(data: &[SubsetIndex], theta_tilde: &MinimalParam, k: usize) -> Result<f64> {
    let stats = Stats::new(data, ground_size(theta_tilde), k)?;
    stats.log_likelihood(&from_minimal(theta_tilde, 0.0))
}

/// `N (T̄_i - η_i)` for `i < n`.
pub fn gradient(data: &[SubsetIndex], theta_tilde: &MinimalParam, k: usize) -> Result<Vec<f64>> {
    let stats = Stats::new(data, ground_size(theta_tilde), k)?;
    Ok(stats.gradient(&from_minimal(theta_tilde, 0.0))?.0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn initial_theta(stats: &Stats, init: Init) -> Vec<f64> {
    match init {
        Init::Zeros => vec![0.0; stats.n],
        Init::MomentMatch => {
            let eps = 0.5 / stats.count as f64;
            let theta: Vec<f64> = stats
                .frequencies()
                .iter()
                .map(|f| {
                    let f = f.clamp(eps, 1.0 - eps);
                    (f / (1.0 - f)).ln()
                })
                .collect();
            from_minimal(&to_minimal(&theta), 0.0)
        }
    }
}

fn step_to(theta: &[f64], direction: &[f64], alpha: f64) -> Vec<f64> {
    let mut next = theta.to_vec();
    for (x, d) in next.iter_mut().zip(direction) {
        *x += alpha * d;
    }
    next
}

/// Gradient ascent on the log-likelihood in minimal coordinates.
///
/// Data must be non-empty, of uniform size `k` with `1 <= k <= n-1`, and every
/// element must be both present in and absent from some observation.
pub fn fit(data: &[SubsetIndex], k: usize, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let first = data
        .first()
        .ok_or_else(|| DppError::domain("no observations"))?;
    let n = first.n();
    let stats = Stats::new(data, n, k)?;
    for (i, &t) in stats.totals.iter().enumerate() {
        if t == 0.0 || t == stats.count as f64 {
            return Err(DppError::BoundaryMle {
                element: i + 1,
                always_present: t != 0.0,
            });
        }
    }

    let scale = 1.0 / stats.count as f64;
    let mut theta = initial_theta(&stats, config.init);
    let mut f = stats.log_likelihood(&theta)?;
    let (mut g, mut eta) = stats.gradient(&theta)?;
    let mut trace = vec![f];
    let mut alpha = 1.0;
    let mut iters = 0;

    while iters < config.max_iters && norm(&g) > config.grad_tol {
        // ascent direction: per-observation gradient, zero on the pinned coordinate
        let mut dir: Vec<f64> = g.iter().map(|x| x * scale).collect();
        dir.push(0.0);
        let g_sq_scaled: f64 = g.iter().map(|x| x * x).sum::<f64>() * scale;
        let (next, f_next, g_next, eta_next) = match config.step_rule {
            StepRule::Fixed(step) => {
                let next = step_to(&theta, &dir, step);
                let f_next = stats.log_likelihood(&next)?;
                let (g_next, eta_next) = stats.gradient(&next)?;
                (next, f_next, g_next, eta_next)
            }
            StepRule::Backtracking { beta, c1 } => {
                let mut trial = 2.0 * alpha;
                loop {
                    let next = step_to(&theta, &dir, trial);
                    let f_next = stats.log_likelihood(&next)?;
                    let (g_next, eta_next) = stats.gradient(&next)?;
                    let predicted = c1 * trial * g_sq_scaled;
                    let accept = if predicted <= 64.0 * f64::EPSILON * f.abs().max(1.0) {
                        // gain is below the resolution of the objective
                        norm(&g_next) < norm(&g)
                    } else {
                        f_next >= f + predicted
                    };
                    if accept {
                        alpha = trial;
                        break (next, f_next, g_next, eta_next);
                    }
                    trial *= beta;
                    if trial < 1e-20 {
                        return Err(DppError::domain(
                            "line search failed to find an ascent step",
                        ));
                    }
                }
            }
        };
        theta = next;
        f = f_next;
        g = g_next;
        eta = eta_next;
        trace.push(f);
        iters += 1;
    }

    let grad_norm = norm(&g);
    Ok(FitResult {
        theta_tilde_hat: to_minimal(&theta),
        log_likelihood: f,
        grad_norm,
        iters,
        converged: grad_norm <= config.grad_tol,
        fitted_eta: eta,
        empirical_frequencies: stats.frequencies(),
        objective_trace: trace,
    })
}
