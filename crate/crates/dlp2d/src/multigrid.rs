//! Two-grid and V-cycle hierarchies over the boundary operator, usable as
//! linear GMRES preconditioners.
//!
//! Coarse operators come either from re-discretizing the spectrally
//! coarsened curve (geometric mode) or from sandwiching the fine operator
//! between restriction and prolongation (projection mode). Smoothing uses
//! the split step `η⁺ = P(f − D_far·η)` with a per-level preconditioner and
//! zero initial guesses, so the cycle is a fixed linear map.
//!
//! Scaled-matvec accounting: a geometric cycle charges 1.5 matvecs per
//! smoothing sweep (coarse solves free); a projection cycle charges 2 per
//! sweep plus `m_coarse` fine matvecs for the coarse solve, with the
//! outer GMRES matvec folded into the same parenthetic totals the tables
//! use.

use crate::geometry::coarsen_geometry;
use crate::nystrom::{assemble, DenseOperator};
use crate::precond::{split_smoother_step, Preconditioner, PrecondSpec};
use crate::solver::{gmres, FnOp, Precondition};
use crate::transfer::{project_matrix, prolong_to, restrict_to};
use crate::linalg::{DenseLu, LinearSolve};
use crate::{Error, Real, Result};
use ndarray::Array1;

/// How coarse-level operators are constructed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoarseMode {
    Geometric,
    Projection,
}

/// Level layout: one jump to the coarsest grid, or a full halving chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HierarchyKind {
    TwoGrid,
    VCycle,
}

/// Coarsest-level solver.
pub enum CoarseSolverSpec {
    ExactLu,
    /// GMRES on the coarse system, optionally preconditioned, run to `tol`
    /// or for at most `max_iter` iterations (fixed-iteration runs use a
    /// tiny tolerance).
    Gmres {
        preconditioner: Option<PrecondSpec>,
        tol: f64,
        max_iter: usize,
    },
}

enum CoarseSolver<T: Real> {
    Lu(DenseLu<T>),
    Gmres {
        pre: Option<Preconditioner<T>>,
        tol: T,
        max_iter: usize,
    },
}

struct Level<T: Real> {
    op: DenseOperator<T>,
    smoother: Option<Preconditioner<T>>,
}

/// A built hierarchy from the fine grid down to `n_min`.
pub struct Hierarchy<T: Real> {
    levels: Vec<Level<T>>,
    nu_pre: usize,
    nu_post: usize,
    mode: CoarseMode,
    m_coarse: usize,
    coarse: CoarseSolver<T>,
}

/// Builds a hierarchy below `fine`. Levels halve down to `n_min` in
/// `VCycle` mode or jump straight there in `TwoGrid` mode; `n_min == N`
/// yields a single level whose application is the exact coarse solve.
pub fn build_hierarchy<T: Real>(
    fine: &DenseOperator<T>,
    n_min: usize,
    kind: HierarchyKind,
    mode: CoarseMode,
    smoother: &PrecondSpec,
    cycle: (usize, usize),
    coarse: CoarseSolverSpec,
) -> Result<Hierarchy<T>> {
    let n = fine.len();
    if n_min > n {
        return Err(Error::InvalidParameter(format!(
            "coarse size {n_min} exceeds fine size {n}"
        )));
    }
    if n_min < 16 {
        return Err(Error::InvalidParameter(format!(
            "coarse size {n_min} below the minimum of 16"
        )));
    }
    if n % n_min != 0 || !(n / n_min).is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "fine/coarse ratio {n}/{n_min} must be a power of 2"
        )));
    }
    let mut sizes = vec![n];
    match kind {
        HierarchyKind::TwoGrid => {
            if n_min < n {
                sizes.push(n_min);
            }
        }
        HierarchyKind::VCycle => {
            let mut m = n;
            while m > n_min {
                m /= 2;
                sizes.push(m);
            }
        }
    }
    let n_levels = sizes.len();
    let mut levels = Vec::with_capacity(n_levels);
    for (li, &m) in sizes.iter().enumerate() {
        let op = if m == n {
            fine.clone()
        } else {
            match mode {
                CoarseMode::Geometric => assemble(&coarsen_geometry(&fine.grid, m)?),
                CoarseMode::Projection => DenseOperator {
                    matrix: project_matrix(&fine.matrix, m),
                    grid: coarsen_geometry(&fine.grid, m)?,
                },
            }
        };
        let smoother = if li + 1 < n_levels {
            Some(smoother.build(&op)?)
        } else {
            None
        };
        levels.push(Level { op, smoother });
    }
    let coarse_op = &levels[n_levels - 1].op;
    let (coarse, m_coarse) = match coarse {
        CoarseSolverSpec::ExactLu => {
            let mut a = coarse_op.matrix.clone();
            for i in 0..coarse_op.len() {
                a[[i, i]] += T::one();
            }
            (CoarseSolver::Lu(DenseLu::new(a)?), 0)
        }
        CoarseSolverSpec::Gmres {
            preconditioner,
            tol,
            max_iter,
        } => {
            let pre = match preconditioner {
                Some(spec) => Some(spec.build(coarse_op)?),
                None => None,
            };
            (
                CoarseSolver::Gmres {
                    pre,
                    tol: T::of(tol),
                    max_iter,
                },
                max_iter,
            )
        }
    };
    Ok(Hierarchy {
        levels,
        nu_pre: cycle.0,
        nu_post: cycle.1,
        mode,
        m_coarse,
        coarse,
    })
}

impl<T: Real> Hierarchy<T> {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_size(&self, i: usize) -> usize {
        self.levels[i].op.len()
    }

    pub fn mode(&self) -> CoarseMode {
        self.mode
    }

    /// Operator of one level (finest is level 0).
    pub fn level_operator(&self, i: usize) -> &DenseOperator<T> {
        &self.levels[i].op
    }

    fn coarse_solve(&self, f: &Array1<T>) -> Array1<T> {
        match &self.coarse {
            CoarseSolver::Lu(lu) => lu.solve_vec(f),
            CoarseSolver::Gmres { pre, tol, max_iter } => {
                let op = &self.levels[self.levels.len() - 1].op;
                let apply = FnOp::new(op.len(), |v: &Array1<T>| op.apply_full(v));
                let rep = gmres(
                    &apply,
                    f,
                    *tol,
                    *max_iter,
                    pre.as_ref().map(|p| p as &dyn Precondition<T>),
                );
                rep.solution
            }
        }
    }

    fn cycle(&self, level: usize, f: &Array1<T>) -> Array1<T> {
        if level + 1 == self.levels.len() {
            return self.coarse_solve(f);
        }
        let lv = &self.levels[level];
        let smoother = lv.smoother.as_ref().expect("non-coarsest level smoother");
        let mut eta = Array1::zeros(f.len());
        for _ in 0..self.nu_pre {
            eta = split_smoother_step(smoother, &lv.op, f, &eta);
        }
        let residual = f - &lv.op.apply_full(&eta);
        let coarse_r = restrict_to(
            residual.as_slice().expect("contiguous"),
            self.levels[level + 1].op.len(),
        );
        let coarse_e = self.cycle(level + 1, &coarse_r);
        eta += &prolong_to(coarse_e.as_slice().expect("contiguous"), f.len());
        for _ in 0..self.nu_post {
            eta = split_smoother_step(smoother, &lv.op, f, &eta);
        }
        eta
    }

    /// One multigrid cycle applied to `f` from a zero initial guess.
    pub fn vcycle_apply(&self, f: &Array1<T>) -> Array1<T> {
        assert_eq!(f.len(), self.levels[0].op.len());
        self.cycle(0, f)
    }

    /// Scaled-matvec charge of one cycle: `1.5·(ν_pre + ν_post)` in
    /// geometric mode (coarse solve free), `2·(ν_pre + ν_post) + m_coarse`
    /// in projection mode (coarse iterations cost fine matvecs).
    pub fn cycle_cost(&self) -> f64 {
        let sweeps = (self.nu_pre + self.nu_post) as f64;
        match self.mode {
            CoarseMode::Geometric => 1.5 * sweeps,
            CoarseMode::Projection => 2.0 * sweeps + self.m_coarse as f64,
        }
    }
}

impl<T: Real> Precondition<T> for Hierarchy<T> {
    fn dim(&self) -> usize {
        self.levels[0].op.len()
    }

    fn apply(&self, v: &Array1<T>) -> Array1<T> {
        self.vcycle_apply(v)
    }

    /// Per-application charge as the tables account it: the full cycle cost
    /// in geometric mode; in projection mode the outer GMRES matvec is
    /// already folded into the cycle's own total, hence the −1.
    fn cost(&self) -> f64 {
        match self.mode {
            CoarseMode::Geometric => self.cycle_cost(),
            CoarseMode::Projection => self.cycle_cost() - 1.0,
        }
    }
}
