//! Limited-memory quasi-Newton (L-BFGS) local minimization with a
//! backtracking line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::potential::{self, D_STAR};

/// Trial steps that bring any pair closer than this are rejected.
const MIN_PAIR_DISTANCE: f64 = 1e-4 * D_STAR;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeSettings {
    /// Convergence threshold on the infinity norm of the gradient.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Number of correction pairs kept by L-BFGS.
    pub memory: usize,
    /// Backtracking factor applied to a rejected step length.
    pub shrink: f64,
    /// Largest coordinate displacement allowed for the first trial step.
    pub max_step: f64,
    /// Armijo constant.
    pub sufficient_decrease: f64,
    /// Optional secondary stop on `‖∇V‖∞ / |V|`.
    pub relative_grad_tol: Option<f64>,
}

impl Default for MinimizeSettings {
    fn default() -> Self {
        MinimizeSettings {
            grad_tol: 1e-8,
            max_iters: 5000,
            memory: 10,
            shrink: 0.5,
            max_step: 0.25,
            sufficient_decrease: 1e-4,
            relative_grad_tol: None,
        }
    }
}

impl MinimizeSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::domain("grad_tol must be positive"));
        }
        if self.max_iters == 0 || self.memory == 0 {
            return Err(Error::domain("max_iters and memory must be at least 1"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::domain("shrink factor must lie in (0, 1)"));
        }
        if !(self.max_step > 0.0) || !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(Error::domain("invalid step control parameters"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub config: Configuration,
    pub energy: f64,
    /// Infinity norm of the gradient at `config`.
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn min_pair_distance_squared(x: &[f64]) -> f64 {
    let n = x.len() / 3;
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[3 * i] - x[3 * j];
            let dy = x[3 * i + 1] - x[3 * j + 1];
            let dz = x[3 * i + 2] - x[3 * j + 2];
            m = m.min(dx * dx + dy * dy + dz * dz);
        }
    }
    m
}

struct Correction {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: `d = -H g`.
fn search_direction(g: &[f64], history: &VecDeque<Correction>, d: &mut [f64]) {
    d.copy_from_slice(g);
    let mut alphas = Vec::with_capacity(history.len());
    for c in history.iter().rev() {
        let a = c.rho * dot(&c.s, d);
        for (di, yi) in d.iter_mut().zip(&c.y) {
            *di -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        d.iter_mut().for_each(|v| *v *= gamma);
    }
    for (c, a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = c.rho * dot(&c.y, d);
        for (di, si) in d.iter_mut().zip(&c.s) {
            *di += (a - b) * si;
        }
    }
    d.iter_mut().for_each(|v| *v = -*v);
}

fn numerical(reason: &str, iters: usize, x: &[f64], e: f64) -> Error {
    Error::Numerical {
        reason: reason.to_string(),
        iters,
        last: Box::new(Configuration::from_flat(x).unwrap_or_default()),
        last_energy: e,
    }
}

/// Relaxes `c` to a nearby local minimum.
///
/// Accepted iterations never raise the energy beyond floating-point
/// resolution, and the returned energy never exceeds the input energy.
pub fn minimize(c: &Configuration, s: &MinimizeSettings) -> Result<MinimizeResult> {
    s.validate()?;
    if c.len() < 2 {
        return Err(Error::domain("minimization needs at least two particles"));
    }
    let (e0, g0) = potential::energy_and_gradient(c)?;
    let x0 = c.to_flat();
    if !e0.is_finite() || g0.iter().any(|v| !v.is_finite()) {
        return Err(numerical("non-finite energy at the starting point", 0, &x0, e0));
    }

    let dim = x0.len();
    let mut x = x0.clone();
    let mut g = g0.clone();
    let mut e = e0;
    let mut gnorm = inf_norm(&g);
    let mut history: VecDeque<Correction> = VecDeque::with_capacity(s.memory);
    let mut d = vec![0.0; dim];
    let mut xn = vec![0.0; dim];
    let mut gn = vec![0.0; dim];
    let mut iters = 0;

    let relative_ok = |e: f64, gnorm: f64| {
        s.relative_grad_tol.is_some_and(|tol| e != 0.0 && gnorm / e.abs() < tol)
    };

    while gnorm > s.grad_tol && iters < s.max_iters && !relative_ok(e, gnorm) {
        search_direction(&g, &history, &mut d);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -dot(&g, &g);
        }
        let dmax = inf_norm(&d);
        let mut alpha = if dmax > s.max_step { s.max_step / dmax } else { 1.0 };
        // Energy differences below this are rounding noise.
        let noise = 64.0 * f64::EPSILON * e.abs().max(1.0);

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for k in 0..dim {
                xn[k] = x[k] + alpha * d[k];
            }
            if min_pair_distance_squared(&xn) < MIN_PAIR_DISTANCE * MIN_PAIR_DISTANCE {
                alpha *= s.shrink;
                continue;
            }
            let en = potential::flat_energy_gradient(&xn, &mut gn);
            if !en.is_finite() || gn.iter().any(|v| !v.is_finite()) {
                return Err(numerical("non-finite energy or gradient during line search", iters, &x, e));
            }
            let armijo = en <= e + s.sufficient_decrease * alpha * slope;
            // Near a minimum the decrease drops below energy resolution; fall
            // back to the gradient norm as the progress measure.
            let flat = (en - e).abs() <= noise && inf_norm(&gn) < gnorm;
            if armijo || flat {
                accepted = Some(en);
                break;
            }
            alpha *= s.shrink;
        }

        let Some(en) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            iters += 1;
            continue;
        };

        let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &dy);
        if sy > 1e-16 * dot(&dy, &dy).sqrt() * dot(&step, &step).sqrt() && sy > 0.0 {
            if history.len() == s.memory {
                history.pop_front();
            }
            history.push_back(Correction { s: step, y: dy, rho: 1.0 / sy });
        }
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        e = en;
        gnorm = inf_norm(&g);
        iters += 1;
    }

    if e > e0 {
        // Only reachable through rounding noise on an already converged input.
        x = x0;
        g = g0;
        e = e0;
        gnorm = inf_norm(&g);
    }
    let converged = gnorm <= s.grad_tol || relative_ok(e, gnorm);
    Ok(MinimizeResult {
        config: Configuration::from_flat(&x)?,
        energy: e,
        grad_norm: gnorm,
        iters,
        converged,
    })
}
