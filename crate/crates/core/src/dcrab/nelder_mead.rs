//! Derivative-free simplex search that maximises a measured figure of merit.
//!
//! Internally 1 − F is minimised with the textbook coefficients (reflection
//! 1, expansion 2, contraction ½, shrink ½). A NaN objective value is scored
//! as F = 0.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Offset of the initial simplex vertices along each axis.
    pub scale: f64,
    pub max_evals: usize,
    /// Stop once every vertex lies within this distance of the best one.
    pub tol: f64,
    /// Stop as soon as a measured value reaches this.
    pub target: Option<f64>,
}

impl NelderMeadOptions {
    pub fn new(scale: f64, max_evals: usize, tol: f64) -> Self {
        Self { scale, max_evals, tol, target: None }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Diameter,
    Budget,
    Target,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub fom: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadOutcome {
    pub best_x: Vec<f64>,
    pub best_fom: f64,
    pub trace: Vec<Evaluation>,
    pub stop: StopReason,
}

struct Search<'a, F> {
    objective: F,
    opts: &'a NelderMeadOptions,
    trace: Vec<Evaluation>,
    best: usize,
}

impl<F: FnMut(&[f64]) -> f64> Search<'_, F> {
    /// Returns 1 − F, or the reason to stop.
    fn eval(&mut self, x: &[f64]) -> std::result::Result<f64, StopReason> {
        if self.trace.len() >= self.opts.max_evals {
            return Err(StopReason::Budget);
        }
        let mut fom = (self.objective)(x);
        if fom.is_nan() {
            log::warn!("objective returned NaN at evaluation {}; scored as 0", self.trace.len());
            fom = 0.0;
        }
        if self.trace.is_empty() || fom > self.trace[self.best].fom {
            self.best = self.trace.len();
        }
        self.trace.push(Evaluation { x: x.to_vec(), fom });
        match self.opts.target {
            Some(t) if fom >= t => Err(StopReason::Target),
            _ => Ok(1.0 - fom),
        }
    }

    fn run(&mut self, x0: &[f64]) -> StopReason {
        match self.iterate(x0) {
            Ok(never) => match never {},
            Err(reason) => reason,
        }
    }

    fn iterate(&mut self, x0: &[f64]) -> std::result::Result<std::convert::Infallible, StopReason> {
        let n = x0.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), self.eval(x0)?));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.opts.scale;
            let f = self.eval(&x)?;
            simplex.push((x, f));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..].iter().map(|(x, _)| distance(x, &simplex[0].0)).fold(0.0, f64::max);
            if diameter < self.opts.tol {
                return Err(StopReason::Diameter);
            }
            let centroid: Vec<f64> =
                (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64).collect();
            let worst = simplex[n].clone();
            let toward = |coef: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + coef * (worst.0[k] - centroid[k])).collect() };

            let xr = toward(-REFLECT);
            let fr = self.eval(&xr)?;
            if fr < simplex[0].1 {
                let xe = toward(-REFLECT * EXPAND);
                let fe = self.eval(&xe)?;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc, accept) = if fr < worst.1 {
                let xc = toward(-REFLECT * CONTRACT);
                let fc = self.eval(&xc)?;
                (xc, fc, fc <= fr)
            } else {
                let xc = toward(CONTRACT);
                let fc = self.eval(&xc)?;
                (xc, fc, fc < worst.1)
            };
            if accept {
                simplex[n] = (xc, fc);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = (0..n).map(|k| anchor[k] + SHRINK * (vertex.0[k] - anchor[k])).collect();
                let f = self.eval(&x)?;
                *vertex = (x, f);
            }
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Maximises `objective` starting from `x0`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(objective: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadOutcome> {
    let dim = x0.len();
    if dim == 0 {
        return Err(invalid("simplex search needs at least one dimension"));
    }
    if opts.max_evals < dim + 1 {
        return Err(invalid(format!("budget {} is below dim + 1 = {}", opts.max_evals, dim + 1)));
    }
    if !(opts.scale.is_finite() && opts.scale != 0.0) {
        return Err(invalid("simplex scale must be finite and non-zero"));
    }
    if !(opts.tol.is_finite() && opts.tol >= 0.0) {
        return Err(invalid("simplex tolerance must be finite and non-negative"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("starting point must be finite"));
    }
    let mut search = Search { objective, opts, trace: Vec::new(), best: 0 };
    let stop = search.run(x0);
    let best = &search.trace[search.best];
    Ok(NelderMeadOutcome { best_x: best.x.clone(), best_fom: best.fom, stop, trace: search.trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges() {
        let f = |x: &[f64]| -((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2));
        let out = nelder_mead(f, &[0.0, 0.0], &NelderMeadOptions::new(1.0, 200, 1e-6)).unwrap();
        assert!((out.best_x[0] - 1.0).abs() < 1e-4 && (out.best_x[1] - 2.0).abs() < 1e-4, "{:?}", out.best_x);
        assert!(out.trace.len() < 200, "{} evaluations", out.trace.len());
        assert_eq!(out.stop, StopReason::Diameter);
    }

    #[test]
    fn constant_objective_stops_on_diameter() {
        let out = nelder_mead(|_: &[f64]| 0.3, &[0.0, 0.0], &NelderMeadOptions::new(1.0, 10_000, 1e-4)).unwrap();
        assert_eq!(out.stop, StopReason::Diameter);
        assert!(out.trace.len() >= 3 && out.trace.len() < 200);
        assert_eq!(out.best_x, vec![0.0, 0.0]);
    }

    #[test]
    fn rosenbrock_running_best_is_monotone() {
        let rosen = |x: &[f64]| -> f64 {
            -(0..3).map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2)).sum::<f64>()
        };
        let out = nelder_mead(rosen, &[-1.2, 1.0, -0.5, 0.8], &NelderMeadOptions::new(1.0, 500, 1e-10)).unwrap();
        assert_eq!(out.trace.len(), 500);
        assert_eq!(out.stop, StopReason::Budget);
        let mut best = f64::NEG_INFINITY;
        let mut improvements = 0;
        for e in &out.trace {
            if e.fom > best {
                best = e.fom;
                improvements += 1;
            }
        }
        assert_eq!(best, out.best_fom);
        assert!(improvements > 10);
        assert!(out.best_fom > rosen(&[-1.2, 1.0, -0.5, 0.8]) * 1e-3);
    }

    #[test]
    fn target_stops_early() {
        let f = |x: &[f64]| 1.0 - (x[0] - 0.5).powi(2);
        let out = nelder_mead(f, &[0.0], &NelderMeadOptions::new(1.0, 100, 1e-12).with_target(0.99)).unwrap();
        assert_eq!(out.stop, StopReason::Target);
        assert!(out.best_fom >= 0.99);
        assert_eq!(out.trace.last().unwrap().fom, out.best_fom);
    }

    #[test]
    fn nan_is_scored_zero() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { 0.2 + x[0] };
        let out = nelder_mead(f, &[0.0], &NelderMeadOptions::new(1.0, 30, 1e-9)).unwrap();
        assert_eq!(out.trace[1].fom, 0.0);
        assert!(out.trace.iter().all(|e| !e.fom.is_nan()));
        assert!(out.best_x[0] <= 0.5);
    }

    #[test]
    fn budget_below_simplex_size_is_rejected() {
        assert!(nelder_mead(|_: &[f64]| 0.0, &[0.0; 4], &NelderMeadOptions::new(1.0, 4, 1e-4)).is_err());
        assert!(nelder_mead(|_: &[f64]| 0.0, &[], &NelderMeadOptions::new(1.0, 4, 1e-4)).is_err());
    }

    #[test]
    fn budget_is_exact() {
        let out = nelder_mead(|x: &[f64]| -x[0].abs(), &[3.0, 1.0], &NelderMeadOptions::new(1.0, 7, 0.0)).unwrap();
        assert_eq!(out.trace.len(), 7);
        assert_eq!(out.stop, StopReason::Budget);
    }
}
