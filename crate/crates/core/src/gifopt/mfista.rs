//! Monotone FISTA for `min f(x) + h(x)` with the matting-Laplacian fidelity `f`
//! and the region-ball indicator `h`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{smooth_value, GradientWorkspace, GuideStats};
use super::prox::ConstraintSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfistaOptions {
    /// Step is `1 / lipschitz`.
    pub lipschitz: f64,
    pub max_iters: usize,
    /// Relative objective change on an accepted step that ends the run; 0 disables.
    pub tol: f64,
}

impl Default for MfistaOptions {
    fn default() -> Self {
        Self {
            lipschitz: 500.0,
            max_iters: 500,
            tol: 1e-8,
        }
    }
}

impl MfistaOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0) || !self.lipschitz.is_finite() {
            return Err(Error::invalid(format!("lipschitz must be positive, got {}", self.lipschitz)));
        }
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::invalid(format!("tol must be non-negative, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `F(x^k) = f(x^k) + h(x^k)`.
    pub objective: f64,
    pub dist_skin: f64,
    pub dist_background: f64,
    /// Whether the projected point `z^k` replaced the previous iterate.
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub x: Vec<[T; 3]>,
    pub x_prev: Vec<[T; 3]>,
    pub v: Vec<[T; 3]>,
    pub t: f64,
    pub objective: f64,
    pub iteration: usize,
    workspace: GradientWorkspace,
    grad: Vec<[T; 3]>,
}

impl<T: Scalar> SolverState<T> {
    pub fn new(stats: &GuideStats<T>, constraints: &ConstraintSpec<T>, x0: Vec<[T; 3]>) -> Result<Self> {
        let mut workspace = GradientWorkspace::new();
        let mut grad = vec![[T::zero(); 3]; x0.len()];
        let objective = objective_with(stats, constraints, &x0, 0, &mut workspace, &mut grad)?;
        Ok(Self {
            x_prev: x0.clone(),
            v: x0.clone(),
            x: x0,
            t: 1.0,
            objective,
            iteration: 0,
            workspace,
            grad,
        })
    }

    pub fn record(&self, constraints: &ConstraintSpec<T>, accepted: bool) -> IterationRecord {
        let (ds, db) = constraints.distances(&self.x);
        IterationRecord {
            iteration: self.iteration,
            objective: self.objective,
            dist_skin: ds.to_f64_lossy(),
            dist_background: db.to_f64_lossy(),
            accepted,
        }
    }

    /// One MFISTA iteration. Returns whether `z^k` was accepted and the relative
    /// objective change it produced.
    pub fn step(
        &mut self,
        stats: &GuideStats<T>,
        constraints: &ConstraintSpec<T>,
        lipschitz: f64,
    ) -> Result<(bool, f64)> {
        let k = self.iteration + 1;
        stats
            .gradient_into(&self.v, &mut self.workspace, &mut self.grad)
            .map_err(|e| solver_error(k, e))?;
        let step = T::lit(1.0 / lipschitz);
        let z_hat: Vec<[T; 3]> = self
            .v
            .iter()
            .zip(&self.grad)
            .map(|(v, g)| [v[0] - step * g[0], v[1] - step * g[1], v[2] - step * g[2]])
            .collect();
        let z = constraints.project(&z_hat);
        let fz = objective_with(stats, constraints, &z, k, &mut self.workspace, &mut self.grad)?;
        let accepted = fz <= self.objective;
        let rel = if accepted {
            (self.objective - fz).abs() / self.objective.abs().max(1e-12)
        } else {
            f64::INFINITY
        };

        let x_new = if accepted { z.clone() } else { self.x.clone() };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
        let c1 = T::lit(self.t / t_next);
        let c2 = T::lit((self.t - 1.0) / t_next);
        self.v = (0..z.len())
            .map(|i| {
                let mut out = [T::zero(); 3];
                for c in 0..3 {
                    out[c] = x_new[i][c] + c1 * (z[i][c] - x_new[i][c]) + c2 * (x_new[i][c] - self.x[i][c]);
                }
                out
            })
            .collect();
        if accepted {
            self.objective = fz;
        }
        self.x_prev = std::mem::replace(&mut self.x, x_new);
        self.t = t_next;
        self.iteration = k;
        Ok((accepted, rel))
    }
}

fn solver_error(iteration: usize, e: Error) -> Error {
    match e {
        Error::InvalidInput(message) => Error::Solver { iteration, message },
        other => other,
    }
}

/// `F(x)`; non-finite smooth values surface as solver failures.
pub fn full_objective<T: Scalar>(
    stats: &GuideStats<T>,
    constraints: &ConstraintSpec<T>,
    x: &[[T; 3]],
    iteration: usize,
) -> Result<f64> {
    let mut grad = vec![[T::zero(); 3]; x.len()];
    objective_with(stats, constraints, x, iteration, &mut GradientWorkspace::new(), &mut grad)
}

fn objective_with<T: Scalar>(
    stats: &GuideStats<T>,
    constraints: &ConstraintSpec<T>,
    x: &[[T; 3]],
    iteration: usize,
    workspace: &mut GradientWorkspace,
    grad: &mut [[T; 3]],
) -> Result<f64> {
    if grad.len() != x.len() {
        return Err(Error::invalid("iterate length differs from guide"));
    }
    stats
        .gradient_into(x, workspace, grad)
        .map_err(|e| solver_error(iteration, e))?;
    let f = smooth_value(x, grad).to_f64_lossy();
    if !f.is_finite() {
        return Err(Error::Solver {
            iteration,
            message: "objective became non-finite".into(),
        });
    }
    Ok(f + constraints.indicator(x).to_f64_lossy())
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub x: Vec<[T; 3]>,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T> SolveResult<T> {
    pub fn final_objective(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.objective)
    }
}

/// Runs MFISTA from `x0`.
pub fn mfista_solve<T: Scalar>(
    stats: &GuideStats<T>,
    constraints: &ConstraintSpec<T>,
    x0: Vec<[T; 3]>,
    options: &MfistaOptions,
) -> Result<SolveResult<T>> {
    options.validate()?;
    if x0.len() != stats.len() {
        return Err(Error::invalid(format!(
            "initial point has {} pixels, guide has {}",
            x0.len(),
            stats.len()
        )));
    }
    let mut state = SolverState::new(stats, constraints, x0)?;
    let mut history = vec![state.record(constraints, true)];
    let mut converged = false;
    while state.iteration < options.max_iters {
        let (accepted, rel) = state.step(stats, constraints, options.lipschitz)?;
        history.push(state.record(constraints, accepted));
        if accepted && rel < options.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        iterations: state.iteration,
        x: state.x,
        history,
        converged,
    })
}

pub fn write_history_csv<W: Write>(out: W, history: &[IterationRecord]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for r in history {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_history_csv(path: &Path, history: &[IterationRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_history_csv(std::io::BufWriter::new(file), history).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{ImageRgb, RegionMask};

    #[test]
    fn momentum_sequence() {
        let mut t = 1.0f64;
        t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        assert!((t - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_options() {
        let y = ImageRgb::filled(4, 4, [0.5f64; 3]);
        let stats = GuideStats::new(&y, 3, 1e-7).unwrap();
        let c = ConstraintSpec::new(RegionMask::empty(4, 4), RegionMask::empty(4, 4), &y, &y, 0.0, 0.0).unwrap();
        let bad = MfistaOptions {
            lipschitz: 0.0,
            ..Default::default()
        };
        assert!(mfista_solve(&stats, &c, c.initial_point(), &bad).is_err());
        assert!(mfista_solve(&stats, &c, vec![[0.5; 3]; 3], &MfistaOptions::default()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let h = vec![IterationRecord {
            iteration: 0,
            objective: 1.5,
            dist_skin: 0.0,
            dist_background: 0.25,
            accepted: true,
        }];
        let mut buf = Vec::new();
        write_history_csv(&mut buf, &h).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "iteration,objective,dist_skin,dist_background,accepted");
        assert_eq!(lines[1], "0,1.5,0.0,0.25,true");
    }
}
