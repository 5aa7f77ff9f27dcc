//! Sphere-manifold gradient ascent over `(phases, B_bar)` and its baselines.

mod objectives;
mod solvers;

use std::fmt::Write as _;

use nalgebra::Complex;

use crate::capacity::HybridPrecoder;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, frobenius_sq_real, re_inner, CMat, RMat};

pub use objectives::{BoundObjective, InstantaneousObjective};
pub use solvers::{
    algorithm2, block_coordinate_ascent, default_digital_init, digital_only_solve, instantaneous_hybrid,
    no_precoding_baseline, unconstrained_benchmark, DigitalOptions,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    /// Stop once `||grad_phi||^2 + ||grad_B||^2` drops below this.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Initial step size.
    pub rho0: f64,
    /// Sufficient-increase factor of the line search.
    pub beta: f64,
    pub max_doublings: u32,
    pub max_halvings: u32,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { epsilon: 1e-4, max_iter: 500, rho0: 2.0, beta: 0.4, max_doublings: 30, max_halvings: 60 }
    }
}

impl AscentOptions {
    /// Longer budget for the block-coordinate baseline.
    pub fn baseline() -> Self {
        AscentOptions { max_iter: 5000, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIter,
    LineSearchStalled,
}

/// Which variables an ascent step moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockMode {
    Joint,
    PhasesOnly,
    DigitalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_phi_sq: f64,
    pub grad_b_sq: f64,
    /// Step that produced this iterate (0 for the starting point).
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct AscentReport {
    pub records: Vec<IterationRecord>,
    pub precoder: HybridPrecoder,
    pub terminated_by: Termination,
}

impl AscentReport {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn objective_trace(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }

    /// Number of steps at which the objective decreased.
    pub fn monotonicity_violations(&self) -> usize {
        self.records.windows(2).filter(|w| w[1].objective < w[0].objective).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,grad_phi_sq,grad_b_sq,rho\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{},{}", r.iteration, r.objective, r.grad_phi_sq, r.grad_b_sq, r.rho);
        }
        out
    }
}

/// Objective maximized by [`ascend`].
pub trait AscentObjective {
    /// Called before the objective and gradient of iteration `k` are evaluated.
    /// Stochastic objectives resample here and stay fixed for the whole line search.
    fn begin_iteration(&mut self, _k: usize) {}

    fn value(&self, precoder: &HybridPrecoder) -> Result<f64>;

    /// Gradient with respect to the phases and the (Euclidean) gradient with
    /// respect to `B_bar`, scaled so that `dR = 2 Re tr(grad_b^H dB_bar)`.
    fn gradient(&self, precoder: &HybridPrecoder) -> Result<(RMat, CMat)>;
}

/// Rescales `b` onto the sphere `||b||_F^2 = power`.
pub fn project_sphere(b: &CMat, power: f64) -> Result<CMat> {
    let norm = b.norm();
    if norm < 1e-15 {
        return Err(Error::ZeroMatrix);
    }
    Ok(b * Complex::new(power.sqrt() / norm, 0.0))
}

/// Tangent component of `grad` at `b` on the sphere `||b||_F^2 = power`.
pub fn riemannian_gradient(grad: &CMat, b: &CMat, power: f64) -> CMat {
    grad - b * Complex::new(re_inner(grad, b) / power, 0.0)
}

/// Modified backtracking search on the sufficient-increase gap `gap(rho)`.
///
/// When `gap(rho_prev) >= 0` the step is doubled until the gap turns negative and
/// the last nonnegative step is returned; otherwise it is halved until the gap is
/// nonnegative.
pub fn line_search(mut gap: impl FnMut(f64) -> Result<f64>, rho_prev: f64, opts: &AscentOptions) -> Result<f64> {
    if gap(rho_prev)? >= 0.0 {
        let mut rho = rho_prev;
        for _ in 0..opts.max_doublings {
            if gap(2.0 * rho)? < 0.0 {
                return Ok(rho);
            }
            rho *= 2.0;
        }
        return Ok(rho);
    }
    let mut rho = rho_prev;
    for _ in 0..opts.max_halvings {
        rho *= 0.5;
        if gap(rho)? >= 0.0 {
            return Ok(rho);
        }
    }
    Err(Error::SearchStalled { halvings: opts.max_halvings })
}

struct Direction {
    phi: RMat,
    b: CMat,
    phi_sq: f64,
    b_sq: f64,
}

fn direction<O: AscentObjective + ?Sized>(obj: &O, cur: &HybridPrecoder, mode: BlockMode) -> Result<Direction> {
    let (mut phi, grad_b) = obj.gradient(cur)?;
    let mut b = riemannian_gradient(&grad_b, cur.digital(), cur.power());
    match mode {
        BlockMode::Joint => {}
        BlockMode::PhasesOnly => b.fill(Complex::new(0.0, 0.0)),
        BlockMode::DigitalOnly => phi.fill(0.0),
    }
    let phi_sq = frobenius_sq_real(&phi);
    let b_sq = frobenius_sq(&b);
    Ok(Direction { phi, b, phi_sq, b_sq })
}

fn step(cur: &HybridPrecoder, dir: &Direction, rho: f64) -> Result<HybridPrecoder> {
    let phases = cur.phases() + &dir.phi * rho;
    let b = project_sphere(&(cur.digital() + &dir.b * Complex::new(rho, 0.0)), cur.power())?;
    Ok(cur.with_phases(phases).with_digital(b))
}

enum StepOutcome {
    Moved(HybridPrecoder, f64),
    Stalled,
}

fn search_and_step<O: AscentObjective + ?Sized>(
    obj: &O,
    cur: &HybridPrecoder,
    value: f64,
    dir: &Direction,
    rho_prev: f64,
    opts: &AscentOptions,
) -> Result<StepOutcome> {
    let slope = opts.beta * (dir.phi_sq + dir.b_sq);
    let gap = |rho: f64| -> Result<f64> { Ok(obj.value(&step(cur, dir, rho)?)? - value - rho * slope) };
    match line_search(gap, rho_prev, opts) {
        Ok(rho) => Ok(StepOutcome::Moved(step(cur, dir, rho)?, rho)),
        Err(Error::SearchStalled { .. }) => Ok(StepOutcome::Stalled),
        Err(e) => Err(e),
    }
}

fn normalized_start(start: HybridPrecoder) -> Result<HybridPrecoder> {
    let b = project_sphere(start.digital(), start.power())?;
    Ok(start.with_digital(b))
}

/// Line-searched gradient ascent. The digital precoder is kept on the power
/// sphere; phases move freely on the partition support.
pub fn ascend<O: AscentObjective + ?Sized>(
    obj: &mut O,
    start: HybridPrecoder,
    mode: BlockMode,
    opts: &AscentOptions,
) -> Result<AscentReport> {
    let mut cur = normalized_start(start)?;
    let mut records = Vec::new();
    let mut rho = opts.rho0;
    let mut last_rho = 0.0;
    let mut k = 0;
    let terminated_by = loop {
        obj.begin_iteration(k);
        let value = obj.value(&cur)?;
        let dir = direction(obj, &cur, mode)?;
        records.push(IterationRecord {
            iteration: k,
            objective: value,
            grad_phi_sq: dir.phi_sq,
            grad_b_sq: dir.b_sq,
            rho: last_rho,
        });
        if dir.phi_sq + dir.b_sq < opts.epsilon {
            break Termination::GradientTolerance;
        }
        if k >= opts.max_iter {
            break Termination::MaxIter;
        }
        match search_and_step(obj, &cur, value, &dir, rho, opts)? {
            StepOutcome::Moved(next, r) => {
                cur = next;
                rho = r;
                last_rho = r;
            }
            StepOutcome::Stalled => break Termination::LineSearchStalled,
        }
        k += 1;
    };
    Ok(AscentReport { records, precoder: cur, terminated_by })
}

/// Alternating ascent: line-searched phase steps until the phase gradient is
/// small, then digital steps until that gradient is small, and repeat. Every step
/// counts as one iteration.
pub fn ascend_blockwise<O: AscentObjective + ?Sized>(
    obj: &mut O,
    start: HybridPrecoder,
    opts: &AscentOptions,
) -> Result<AscentReport> {
    let mut cur = normalized_start(start)?;
    let mut records = Vec::new();
    let mut rho = [opts.rho0, opts.rho0];
    let mut last_rho = 0.0;
    let mut k = 0;
    let block_tol = opts.epsilon / 2.0;
    let terminated_by = 'outer: loop {
        let mut round_steps = 0;
        for (slot, mode) in [BlockMode::PhasesOnly, BlockMode::DigitalOnly].into_iter().enumerate() {
            loop {
                obj.begin_iteration(k);
                let value = obj.value(&cur)?;
                let full = direction(obj, &cur, BlockMode::Joint)?;
                records.push(IterationRecord {
                    iteration: k,
                    objective: value,
                    grad_phi_sq: full.phi_sq,
                    grad_b_sq: full.b_sq,
                    rho: last_rho,
                });
                if full.phi_sq + full.b_sq < opts.epsilon {
                    break 'outer Termination::GradientTolerance;
                }
                if k >= opts.max_iter {
                    break 'outer Termination::MaxIter;
                }
                let dir = match mode {
                    BlockMode::PhasesOnly => Direction { b: full.b.map(|_| Complex::new(0.0, 0.0)), b_sq: 0.0, ..full },
                    _ => Direction { phi: full.phi.map(|_| 0.0), phi_sq: 0.0, ..full },
                };
                if dir.phi_sq + dir.b_sq < block_tol {
                    records.pop();
                    break;
                }
                match search_and_step(obj, &cur, value, &dir, rho[slot], opts)? {
                    StepOutcome::Moved(next, r) => {
                        cur = next;
                        rho[slot] = r;
                        last_rho = r;
                        round_steps += 1;
                        k += 1;
                    }
                    StepOutcome::Stalled => {
                        records.pop();
                        break;
                    }
                }
            }
        }
        if round_steps == 0 {
            // re-record the final point before leaving
            obj.begin_iteration(k);
            let value = obj.value(&cur)?;
            let full = direction(obj, &cur, BlockMode::Joint)?;
            records.push(IterationRecord {
                iteration: k,
                objective: value,
                grad_phi_sq: full.phi_sq,
                grad_b_sq: full.b_sq,
                rho: last_rho,
            });
            break Termination::LineSearchStalled;
        }
    };
    Ok(AscentReport { records, precoder: cur, terminated_by })
}
