//! Limited-memory BFGS with a Wolfe line search.
//!
//! Every accepted step satisfies the sufficient-decrease condition, so the
//! objective trajectory is strictly decreasing.

use std::collections::VecDeque;

use crate::error::{Result, SrwError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub history: usize,
    pub max_iter: usize,
    /// Stop when the max-norm of an accepted step falls below this.
    pub step_tol: f64,
    /// Stop when the relative decrease over `rel_window` iterations falls below this.
    pub rel_tol: f64,
    pub rel_window: usize,
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            history: 10,
            max_iter: 100,
            step_tol: 1e-6,
            rel_tol: 1e-9,
            rel_window: 3,
            grad_tol: 1e-12,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StepTolerance,
    RelativeDecrease,
    GradientTolerance,
    MaxIterations,
    /// No acceptable step could be found after at least one accepted step.
    Stalled,
    /// No acceptable step from the starting point.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective at the start and after every accepted step.
    pub trajectory: Vec<f64>,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

struct Point {
    alpha: f64,
    f: f64,
    grad: Vec<f64>,
    slope: f64,
}

struct LineSearch<'a, F> {
    func: &'a mut F,
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    slope0: f64,
    cfg: &'a LbfgsConfig,
    evaluations: usize,
}

impl<F> LineSearch<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, alpha: f64) -> Option<Point> {
        self.evaluations += 1;
        let trial: Vec<f64> = self
            .x
            .iter()
            .zip(self.dir)
            .map(|(x, d)| x + alpha * d)
            .collect();
        match (self.func)(&trial) {
            Ok((f, grad)) if f.is_finite() && grad.iter().all(|g| g.is_finite()) => {
                let slope = dot(&grad, self.dir);
                Some(Point {
                    alpha,
                    f,
                    grad,
                    slope,
                })
            }
            // treat failed evaluations as infinitely bad
            _ => None,
        }
    }

    fn armijo(&self, p: &Point) -> bool {
        p.f <= self.f0 + self.cfg.c1 * p.alpha * self.slope0 && p.f < self.f0
    }

    fn curvature(&self, p: &Point) -> bool {
        p.slope.abs() <= -self.cfg.c2 * self.slope0
    }

    /// Returns the accepted point, or the best sufficient-decrease point seen.
    fn run(&mut self, initial: f64) -> Option<Point> {
        let mut prev = Point {
            alpha: 0.0,
            f: self.f0,
            grad: Vec::new(),
            slope: self.slope0,
        };
        let mut alpha = initial;
        for i in 0..self.cfg.max_line_search {
            let Some(cur) = self.eval(alpha) else {
                return self.zoom(prev, alpha, None);
            };
            if !self.armijo(&cur) || (i > 0 && cur.f >= prev.f) {
                let hi = cur.alpha;
                return self.zoom(prev, hi, Some(cur));
            }
            if self.curvature(&cur) {
                return Some(cur);
            }
            if cur.slope >= 0.0 {
                let hi = prev.alpha;
                return self.zoom(cur, hi, None);
            }
            alpha = cur.alpha * 2.0;
            prev = cur;
        }
        (prev.alpha > 0.0).then_some(prev)
    }

    fn zoom(&mut self, mut lo: Point, mut hi: f64, mut hi_pt: Option<Point>) -> Option<Point> {
        for _ in 0..self.cfg.max_line_search {
            let width = hi - lo.alpha;
            let mut alpha = lo.alpha + 0.5 * width;
            // quadratic through (lo.f, lo.slope) and hi.f, kept inside the bracket
            if let Some(h) = hi_pt.as_ref() {
                let denom = 2.0 * (h.f - lo.f - lo.slope * width);
                if denom > 0.0 {
                    let step = -lo.slope * width * width / denom;
                    let cand = lo.alpha + step;
                    let (a, b) = if lo.alpha < hi {
                        (lo.alpha, hi)
                    } else {
                        (hi, lo.alpha)
                    };
                    let margin = 0.1 * (b - a);
                    if cand > a + margin && cand < b - margin {
                        alpha = cand;
                    }
                }
            }
            if (alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1.0) {
                break;
            }
            match self.eval(alpha) {
                None => {
                    hi = alpha;
                    hi_pt = None;
                }
                Some(cur) => {
                    if !self.armijo(&cur) || cur.f >= lo.f {
                        hi = cur.alpha;
                        hi_pt = Some(cur);
                    } else {
                        if self.curvature(&cur) {
                            return Some(cur);
                        }
                        if cur.slope * (hi - lo.alpha) >= 0.0 {
                            hi = lo.alpha;
                            hi_pt = None;
                        }
                        lo = cur;
                    }
                }
            }
        }
        (lo.alpha > 0.0 && lo.f < self.f0).then_some(lo)
    }
}

/// Minimizes `func` from `x0`. `on_step` sees every accepted iterate.
pub fn minimize<F, C>(
    mut func: F,
    x0: &[f64],
    cfg: &LbfgsConfig,
    mut on_step: C,
) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(usize, &[f64], f64),
{
    let mut x = x0.to_vec();
    let (mut f, mut g) = func(&x)?;
    if !f.is_finite() {
        return Err(SrwError::Optimization {
            reason: "objective is not finite at the starting point".into(),
            best: x,
        });
    }
    let mut evaluations = 1;
    let mut trajectory = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.history);
    let mut iterations = 0;
    let termination = loop {
        if max_norm(&g) <= cfg.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= cfg.max_iter {
            break Termination::MaxIterations;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut coef = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            coef.push(a);
        }
        let gamma = memory
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or(1.0);
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in memory.iter().zip(coef.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // unit-length first step when no curvature information exists yet
        let initial = if memory.is_empty() {
            1.0 / dot(&dir, &dir).sqrt()
        } else {
            1.0
        };
        let mut ls = LineSearch {
            func: &mut func,
            x: &x,
            dir: &dir,
            f0: f,
            slope0: slope,
            cfg,
            evaluations: 0,
        };
        let accepted = ls.run(initial);
        evaluations += ls.evaluations;
        let Some(pt) = accepted else {
            if !memory.is_empty() {
                memory.clear();
                continue;
            }
            break if iterations == 0 {
                Termination::LineSearchFailed
            } else {
                Termination::Stalled
            };
        };
        let step: Vec<f64> = dir.iter().map(|d| pt.alpha * d).collect();
        let y: Vec<f64> = pt.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&step, &step).sqrt() {
            if memory.len() == cfg.history {
                memory.pop_front();
            }
            memory.push_back((step.clone(), y, 1.0 / sy));
        }
        x.iter_mut().zip(&step).for_each(|(xi, si)| *xi += si);
        f = pt.f;
        g = pt.grad;
        iterations += 1;
        trajectory.push(f);
        on_step(iterations, &x, f);

        if max_norm(&step) < cfg.step_tol {
            break Termination::StepTolerance;
        }
        if trajectory.len() > cfg.rel_window {
            let old = trajectory[trajectory.len() - 1 - cfg.rel_window];
            if (old - f) <= cfg.rel_tol * old.abs().max(f64::MIN_POSITIVE) {
                break Termination::RelativeDecrease;
            }
        }
    };
    Ok(LbfgsOutcome {
        x,
        f,
        grad: g,
        iterations,
        evaluations,
        trajectory,
        termination,
    })
}
