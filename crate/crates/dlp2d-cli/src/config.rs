//! Run configuration: geometry, right-hand side, preconditioner choice,
//! and the single-solve driver.

use dlp2d::geometry::{build_grid, BoundaryGrid, CurveSpec};
use dlp2d::linalg::FactorKind;
use dlp2d::multigrid::{
    build_hierarchy, CoarseMode, CoarseSolverSpec, Hierarchy, HierarchyKind,
};
use dlp2d::nystrom::{
    assemble, boundary_data_charges, boundary_data_harmonic, boundary_data_log_trace,
    boundary_data_random, BoundaryData, DenseOperator,
};
use dlp2d::precond::{Preconditioner, PrecondSpec};
use dlp2d::solver::{gmres, Precondition, SolveReport};
use ndarray::Array1;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<dlp2d::Error> for ConfigError {
    fn from(e: dlp2d::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryChoice {
    Ellipse { aspect: f64 },
    Simple,
    Moderate,
    Flower { lobes: u32 },
}

impl GeometryChoice {
    pub fn curve_spec(&self) -> CurveSpec<f64> {
        match *self {
            GeometryChoice::Ellipse { aspect } => CurveSpec::Ellipse { aspect },
            GeometryChoice::Simple => CurveSpec::Simple,
            GeometryChoice::Moderate => CurveSpec::Moderate,
            GeometryChoice::Flower { lobes } => CurveSpec::Flower { lobes },
        }
    }

    pub fn name(&self) -> String {
        match *self {
            GeometryChoice::Ellipse { aspect } => format!("ellipse(aspect={aspect})"),
            GeometryChoice::Simple => "simple".into(),
            GeometryChoice::Moderate => "moderate".into(),
            GeometryChoice::Flower { lobes } => format!("flower{lobes}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsChoice {
    /// `g = x² − y² + 0.5x`.
    Harmonic,
    /// Seeded standard normal.
    Random,
    /// Trace of a unit charge at the origin.
    LogTrace,
    /// 16 seeded charges on a radius-4 circle.
    Charges,
}

impl RhsChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(RhsChoice::Harmonic),
            "random" => Ok(RhsChoice::Random),
            "log-trace" => Ok(RhsChoice::LogTrace),
            "charges" => Ok(RhsChoice::Charges),
            other => Err(ConfigError(format!(
                "unknown rhs kind {other:?} (harmonic|random|log-trace|charges)"
            ))),
        }
    }

    pub fn build(&self, grid: &BoundaryGrid<f64>, seed: u64) -> BoundaryData<f64> {
        match self {
            RhsChoice::Harmonic => boundary_data_harmonic(grid),
            RhsChoice::Random => boundary_data_random(grid, seed),
            RhsChoice::LogTrace => boundary_data_log_trace(grid, (0.0, 0.0)),
            RhsChoice::Charges => boundary_data_charges(grid, 16, 4.0, seed),
        }
    }
}

/// Smoother component of a multigrid preconditioner choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmootherChoice {
    Picard,
    Banded,
    BlockDiag,
    Ulist { ilu: bool },
    Vlist1,
}

impl SmootherChoice {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(SmootherChoice::Picard),
            "banded" => Ok(SmootherChoice::Banded),
            "blockdiag" => Ok(SmootherChoice::BlockDiag),
            "ulist" => Ok(SmootherChoice::Ulist { ilu: false }),
            "ulist-ilu" => Ok(SmootherChoice::Ulist { ilu: true }),
            "vlist1" => Ok(SmootherChoice::Vlist1),
            other => Err(ConfigError(format!("unknown smoother {other:?}"))),
        }
    }

    pub fn spec(&self, leaf: usize, moments: usize) -> PrecondSpec {
        match *self {
            SmootherChoice::Picard => PrecondSpec::Picard,
            SmootherChoice::Banded => PrecondSpec::Banded { half_width: leaf },
            SmootherChoice::BlockDiag => PrecondSpec::BlockDiag { leaf },
            SmootherChoice::Ulist { ilu } => PrecondSpec::Ulist {
                leaf,
                factor: if ilu {
                    FactorKind::Ilu { drop_tol: 1e-3 }
                } else {
                    FactorKind::ExactLu
                },
            },
            SmootherChoice::Vlist1 => PrecondSpec::Vlist {
                leaf,
                level: 1,
                moments,
                exact: false,
            },
        }
    }
}

/// What preconditions the outer GMRES run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecondChoice {
    /// Unpreconditioned (the single-grid Picard preconditioner).
    None,
    Banded,
    BlockDiag,
    Ulist { ilu: bool },
    Vlist { level: u8, exact: bool },
    FmmSchur { ilu: bool },
    TwoGrid { smoother: SmootherChoice },
    Multigrid { smoother: SmootherChoice },
    /// Two-grid Picard with the coarse solve done by GMRES preconditioned
    /// by the Schur preconditioner.
    Combined,
}

impl PrecondChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" | "picard" => Ok(PrecondChoice::None),
            "banded" => Ok(PrecondChoice::Banded),
            "blockdiag" => Ok(PrecondChoice::BlockDiag),
            "ulist" => Ok(PrecondChoice::Ulist { ilu: false }),
            "ulist-ilu" => Ok(PrecondChoice::Ulist { ilu: true }),
            "vlist1" => Ok(PrecondChoice::Vlist {
                level: 1,
                exact: false,
            }),
            "vlist1-exact" => Ok(PrecondChoice::Vlist {
                level: 1,
                exact: true,
            }),
            "vlist2" => Ok(PrecondChoice::Vlist {
                level: 2,
                exact: false,
            }),
            "fmmschur" => Ok(PrecondChoice::FmmSchur { ilu: false }),
            "fmmschur-ilu" => Ok(PrecondChoice::FmmSchur { ilu: true }),
            "combined" => Ok(PrecondChoice::Combined),
            other => {
                if let Some(sm) = other.strip_prefix("two-grid-") {
                    Ok(PrecondChoice::TwoGrid {
                        smoother: SmootherChoice::parse(sm)?,
                    })
                } else if let Some(sm) = other.strip_prefix("mg-") {
                    Ok(PrecondChoice::Multigrid {
                        smoother: SmootherChoice::parse(sm)?,
                    })
                } else {
                    Err(ConfigError(format!("unknown preconditioner {other:?}")))
                }
            }
        }
    }
}

/// Everything one solve needs. Validated before any heavy work.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub geometry: GeometryChoice,
    pub n: usize,
    pub leaf: usize,
    pub moments: usize,
    pub precond: PrecondChoice,
    pub n_min: usize,
    pub coarsening: CoarseMode,
    pub cycle: (usize, usize),
    pub m_coarse: usize,
    pub rhs: RhsChoice,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryChoice::Flower { lobes: 4 },
            n: 256,
            leaf: 10,
            moments: 4,
            precond: PrecondChoice::None,
            n_min: 128,
            coarsening: CoarseMode::Geometric,
            cycle: (1, 0),
            m_coarse: 20,
            rhs: RhsChoice::Harmonic,
            seed: 42,
            tol: 1e-12,
            max_iter: 2000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(ConfigError(format!(
                "n must be a power of 2 and at least 8, got {}",
                self.n
            )));
        }
        if self.leaf == 0 {
            return Err(ConfigError("leaf capacity must be at least 1".into()));
        }
        if self.moments == 0 {
            return Err(ConfigError("moment count must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError("tolerance must be positive".into()));
        }
        match self.precond {
            PrecondChoice::TwoGrid { .. } | PrecondChoice::Multigrid { .. } | PrecondChoice::Combined => {
                if self.n_min > self.n
                    || self.n % self.n_min != 0
                    || !(self.n / self.n_min).is_power_of_two()
                {
                    return Err(ConfigError(format!(
                        "n_min {} must divide n {} with a power-of-2 ratio",
                        self.n_min, self.n
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A built preconditioner of either family, kept alive for the solve.
pub enum BuiltPrecond {
    None,
    Single(Preconditioner<f64>),
    Cycle(Hierarchy<f64>),
}

impl BuiltPrecond {
    pub fn as_dyn(&self) -> Option<&dyn Precondition<f64>> {
        match self {
            BuiltPrecond::None => None,
            BuiltPrecond::Single(p) => Some(p),
            BuiltPrecond::Cycle(h) => Some(h),
        }
    }
}

/// Builds the configured preconditioner for `op`.
pub fn build_precond(cfg: &SolveConfig, op: &DenseOperator<f64>) -> Result<BuiltPrecond> {
    let factor = |ilu: bool| {
        if ilu {
            FactorKind::Ilu { drop_tol: 1e-3 }
        } else {
            FactorKind::ExactLu
        }
    };
    let single = |spec: PrecondSpec| -> Result<BuiltPrecond> {
        Ok(BuiltPrecond::Single(spec.build(op)?))
    };
    match cfg.precond {
        PrecondChoice::None => Ok(BuiltPrecond::None),
        PrecondChoice::Banded => single(PrecondSpec::Banded {
            half_width: cfg.leaf,
        }),
        PrecondChoice::BlockDiag => single(PrecondSpec::BlockDiag { leaf: cfg.leaf }),
        PrecondChoice::Ulist { ilu } => single(PrecondSpec::Ulist {
            leaf: cfg.leaf,
            factor: factor(ilu),
        }),
        PrecondChoice::Vlist { level, exact } => single(PrecondSpec::Vlist {
            leaf: cfg.leaf,
            level,
            moments: cfg.moments,
            exact,
        }),
        PrecondChoice::FmmSchur { ilu } => single(PrecondSpec::FmmSchur {
            leaf: cfg.leaf,
            factor: factor(ilu),
            rank_d1: 5,
            rank_schur: 5,
            moments_d1: None,
        }),
        PrecondChoice::TwoGrid { smoother } => {
            let h = build_hierarchy(
                op,
                cfg.n_min,
                HierarchyKind::TwoGrid,
                cfg.coarsening,
                &smoother.spec(cfg.leaf, cfg.moments),
                cfg.cycle,
                coarse_spec(cfg),
            )?;
            Ok(BuiltPrecond::Cycle(h))
        }
        PrecondChoice::Multigrid { smoother } => {
            let h = build_hierarchy(
                op,
                cfg.n_min,
                HierarchyKind::VCycle,
                cfg.coarsening,
                &smoother.spec(cfg.leaf, cfg.moments),
                cfg.cycle,
                coarse_spec(cfg),
            )?;
            Ok(BuiltPrecond::Cycle(h))
        }
        PrecondChoice::Combined => {
            let h = build_hierarchy(
                op,
                cfg.n_min,
                HierarchyKind::TwoGrid,
                CoarseMode::Geometric,
                &PrecondSpec::Picard,
                (1, 0),
                CoarseSolverSpec::Gmres {
                    preconditioner: Some(PrecondSpec::FmmSchur {
                        leaf: cfg.leaf,
                        factor: FactorKind::Ilu { drop_tol: 1e-3 },
                        rank_d1: 5,
                        rank_schur: 5,
                        moments_d1: None,
                    }),
                    tol: 1e-10,
                    max_iter: 500,
                },
            )?;
            Ok(BuiltPrecond::Cycle(h))
        }
    }
}

fn coarse_spec(cfg: &SolveConfig) -> CoarseSolverSpec {
    match cfg.coarsening {
        CoarseMode::Geometric => CoarseSolverSpec::ExactLu,
        CoarseMode::Projection => CoarseSolverSpec::Gmres {
            preconditioner: None,
            tol: 1e-300,
            max_iter: cfg.m_coarse,
        },
    }
}

/// Outcome of `run_solve`, with the objects a caller may want afterwards.
pub struct SolveOutcome {
    pub report: SolveReport<f64>,
    pub grid: BoundaryGrid<f64>,
    pub rhs: BoundaryData<f64>,
    pub solution: Array1<f64>,
}

/// Runs one configured solve end to end.
pub fn run_solve(cfg: &SolveConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let grid = build_grid(cfg.geometry.curve_spec(), cfg.n)?;
    let op = assemble(&grid);
    let rhs = cfg.rhs.build(&grid, cfg.seed);
    let pre = build_precond(cfg, &op)?;
    let report = gmres(&op, &rhs.values, cfg.tol, cfg.max_iter, pre.as_dyn());
    let solution = report.solution.clone();
    Ok(SolveOutcome {
        report,
        grid,
        rhs,
        solution,
    })
}

/// Next power of two at or above `v`.
pub fn next_pow2(v: usize) -> usize {
    v.next_power_of_two()
}
