//! Reproductions of the iteration-count tables and the smoother-spectrum
//! figure data, each emitted as one CSV file.

use crate::config::{next_pow2, GeometryChoice, RhsChoice};
use dlp2d::fmmtree::{build_lists, build_tree, QuadTree};
use dlp2d::geometry::build_grid;
use dlp2d::linalg::FactorKind;
use dlp2d::multigrid::{
    build_hierarchy, CoarseMode, CoarseSolverSpec, HierarchyKind,
};
use dlp2d::nystrom::{assemble, resolution_metric, DenseOperator};
use dlp2d::precond::{
    build_blockdiag, build_fmmschur_from_parts, build_identity, build_ulist, build_vlist,
    fmmschur_parts, split_smoother_step, Preconditioner, PrecondSpec,
};
use dlp2d::solver::{gmres, Precondition};
use dlp2d::transfer::mode_amplitudes;
use ndarray::Array1;
use std::io::Write;

type Result<T> = std::result::Result<T, crate::config::ConfigError>;

const TOL: f64 = 1e-12;
const MAX_ITER: usize = 2000;
/// Seed for the exterior-charge data of the multigrid tables.
const CHARGE_SEED: u64 = 7;

fn progress(msg: &str) {
    eprintln!("[dlp2d] {msg}");
}

fn op_for(geometry: GeometryChoice, n: usize) -> Result<DenseOperator<f64>> {
    Ok(assemble(&build_grid(geometry.curve_spec(), n)?))
}

fn tree_for(op: &DenseOperator<f64>, leaf: usize) -> Result<QuadTree<f64>> {
    let pts: Vec<(f64, f64)> = (0..op.len()).map(|j| op.grid.point(j)).collect();
    Ok(build_lists(build_tree(&pts, leaf)?))
}

fn solve_with(op: &DenseOperator<f64>, f: &Array1<f64>, pre: Option<&dyn Precondition<f64>>) -> (usize, f64, bool) {
    let rep = gmres(op, f, TOL, MAX_ITER, pre);
    (rep.iterations, rep.scaled_matvecs, rep.converged)
}

// ---------------------------------------------------------------------------
// aspect-ratio

pub struct AspectRow {
    pub aspect: usize,
    pub n: usize,
    pub iterations: usize,
}

/// Unpreconditioned iteration counts for ellipses of growing aspect ratio,
/// with centered log-charge boundary data.
pub fn aspect_ratio_table() -> Result<Vec<AspectRow>> {
    let mut rows = Vec::new();
    for aspect in [2usize, 4, 8, 16, 32, 64, 128] {
        let n = next_pow2((32 * aspect).max(256));
        let geometry = GeometryChoice::Ellipse {
            aspect: aspect as f64,
        };
        progress(&format!("aspect-ratio: aspect {aspect}, n {n}"));
        let op = op_for(geometry, n)?;
        let f = RhsChoice::LogTrace.build(&op.grid, 0);
        let (iterations, _, _) = solve_with(&op, &f.values, None);
        rows.push(AspectRow {
            aspect,
            n,
            iterations,
        });
    }
    Ok(rows)
}

pub fn write_aspect_csv<W: Write>(rows: &[AspectRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "aspect,m")?;
    for r in rows {
        writeln!(w, "{},{}", r.aspect, r.iterations)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// lobes

pub struct LobesRow {
    pub lobes: u32,
    pub n: usize,
    pub iterations: usize,
}

/// Unpreconditioned iteration counts for flowers with 2..=8 lobes and
/// random boundary data.
pub fn lobes_table(seed: u64) -> Result<Vec<LobesRow>> {
    let mut rows = Vec::new();
    for lobes in 2u32..=8 {
        let n = next_pow2(512 * lobes as usize);
        progress(&format!("lobes: k {lobes}, n {n}"));
        let op = op_for(GeometryChoice::Flower { lobes }, n)?;
        let f = RhsChoice::Random.build(&op.grid, seed);
        let (iterations, _, _) = solve_with(&op, &f.values, None);
        rows.push(LobesRow {
            lobes,
            n,
            iterations,
        });
    }
    Ok(rows)
}

pub fn write_lobes_csv<W: Write>(rows: &[LobesRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "lobes,m")?;
    for r in rows {
        writeln!(w, "{},{}", r.lobes, r.iterations)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// two-level

pub struct TwoLevelRow {
    pub geometry: String,
    pub n: usize,
    pub precond: &'static str,
    pub single: usize,
    pub two_grid_128: Option<usize>,
    pub two_grid_16: Option<usize>,
}

const TWO_LEVEL_LEAF: usize = 10;

fn two_level_single(
    op: &DenseOperator<f64>,
    tree: &QuadTree<f64>,
    name: &str,
) -> Result<Option<Preconditioner<f64>>> {
    let p = match name {
        "picard" => None,
        "blockdiag" => Some(build_blockdiag(op, tree)?),
        "ulist" => Some(build_ulist(op, tree, FactorKind::ExactLu)?),
        "vlist1-exact" => Some(build_vlist(op, tree, 1, 4, true)?),
        "vlist1" => Some(build_vlist(op, tree, 1, 4, false)?),
        "vlist2" => Some(build_vlist(op, tree, 2, 4, false)?),
        "fmmschur" => {
            let parts = fmmschur_parts(op, tree, 5, None, None)?;
            Some(build_fmmschur_from_parts(op, tree, &parts, FactorKind::ExactLu, 5)?)
        }
        other => panic!("unknown two-level row {other}"),
    };
    Ok(p)
}

fn smoother_spec_by_name(name: &str, leaf: usize) -> PrecondSpec {
    match name {
        "picard" => PrecondSpec::Picard,
        "blockdiag" => PrecondSpec::BlockDiag { leaf },
        "ulist" => PrecondSpec::Ulist {
            leaf,
            factor: FactorKind::ExactLu,
        },
        "vlist1-exact" => PrecondSpec::Vlist {
            leaf,
            level: 1,
            moments: 4,
            exact: true,
        },
        "vlist1" => PrecondSpec::Vlist {
            leaf,
            level: 1,
            moments: 4,
            exact: false,
        },
        "vlist2" => PrecondSpec::Vlist {
            leaf,
            level: 2,
            moments: 4,
            exact: false,
        },
        other => panic!("unknown smoother row {other}"),
    }
}

/// Single-grid and two-grid iteration counts for the four reference
/// geometries and the preconditioner family.
pub fn two_level_table() -> Result<Vec<TwoLevelRow>> {
    let cases = [
        (GeometryChoice::Simple, 2048usize),
        (GeometryChoice::Moderate, 2048),
        (GeometryChoice::Flower { lobes: 4 }, 2048),
        (GeometryChoice::Flower { lobes: 8 }, 4096),
    ];
    let preconds = [
        "picard",
        "blockdiag",
        "ulist",
        "vlist1-exact",
        "vlist1",
        "vlist2",
        "fmmschur",
    ];
    let mut rows = Vec::new();
    for (geometry, n) in cases {
        let op = op_for(geometry, n)?;
        let tree = tree_for(&op, TWO_LEVEL_LEAF)?;
        let f = RhsChoice::Charges.build(&op.grid, CHARGE_SEED);
        for name in preconds {
            progress(&format!("two-level: {} {name}", geometry.name()));
            let single_pre = two_level_single(&op, &tree, name)?;
            let (single, _, _) = solve_with(
                &op,
                &f.values,
                single_pre.as_ref().map(|p| p as &dyn Precondition<f64>),
            );
            let mut tg = [None, None];
            if name != "fmmschur" {
                for (slot, n_min) in [(0usize, 128usize), (1, 16)] {
                    let h = build_hierarchy(
                        &op,
                        n_min,
                        HierarchyKind::TwoGrid,
                        CoarseMode::Geometric,
                        &smoother_spec_by_name(name, TWO_LEVEL_LEAF),
                        (1, 0),
                        CoarseSolverSpec::ExactLu,
                    )?;
                    let (m, _, _) = solve_with(&op, &f.values, Some(&h));
                    tg[slot] = Some(m);
                }
            }
            rows.push(TwoLevelRow {
                geometry: geometry.name(),
                n,
                precond: name,
                single,
                two_grid_128: tg[0],
                two_grid_16: tg[1],
            });
        }
    }
    Ok(rows)
}

pub fn write_two_level_csv<W: Write>(rows: &[TwoLevelRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "geometry,n,preconditioner,single,two_grid_nmin128,two_grid_nmin16")?;
    for r in rows {
        let fmt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.geometry,
            r.n,
            r.precond,
            r.single,
            fmt(r.two_grid_128),
            fmt(r.two_grid_16)
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// coarsening (geometric vs projection V-cycles)

pub struct CoarseningRow {
    pub geometry: String,
    pub n: usize,
    pub precond: &'static str,
    pub geometric: Option<(usize, usize)>,
    pub projection: Option<(usize, usize)>,
}

/// Geometric versus projection coarse operators in a three-level V(1,1)
/// cycle, reporting iterations and scaled matvecs.
pub fn coarsening_tables() -> Result<Vec<CoarseningRow>> {
    let cases = [
        (GeometryChoice::Simple, 128usize, 32usize, 19usize, 4usize),
        (GeometryChoice::Moderate, 256, 64, 17, 4),
        (GeometryChoice::Flower { lobes: 4 }, 2048, 512, 20, 10),
        (GeometryChoice::Flower { lobes: 8 }, 4096, 1024, 22, 10),
    ];
    let smoothers: [&'static str; 6] = [
        "picard",
        "banded2",
        "banded10",
        "blockdiag",
        "ulist",
        "vlist1",
    ];
    let mut rows = Vec::new();
    for (geometry, n, n_min, m_coarse, leaf) in cases {
        let op = op_for(geometry, n)?;
        let f = RhsChoice::Charges.build(&op.grid, CHARGE_SEED);
        // unpreconditioned baseline
        let (m, cost, _) = solve_with(&op, &f.values, None);
        rows.push(CoarseningRow {
            geometry: geometry.name(),
            n,
            precond: "none",
            geometric: Some((m, cost.round() as usize)),
            projection: None,
        });
        for name in smoothers {
            progress(&format!("coarsening: {} {name}", geometry.name()));
            let spec = match name {
                "banded2" => PrecondSpec::Banded { half_width: 2 },
                "banded10" => PrecondSpec::Banded { half_width: 10 },
                other => smoother_spec_by_name(other, leaf),
            };
            let mut cells = [None, None];
            for (slot, mode) in [(0usize, CoarseMode::Geometric), (1, CoarseMode::Projection)] {
                let coarse = match mode {
                    CoarseMode::Geometric => CoarseSolverSpec::ExactLu,
                    CoarseMode::Projection => CoarseSolverSpec::Gmres {
                        preconditioner: None,
                        tol: 1e-300,
                        max_iter: m_coarse,
                    },
                };
                let h = build_hierarchy(
                    &op,
                    n_min,
                    HierarchyKind::VCycle,
                    mode,
                    &spec,
                    (1, 1),
                    coarse,
                )?;
                let (m, cost, _) = solve_with(&op, &f.values, Some(&h));
                cells[slot] = Some((m, cost.round() as usize));
            }
            rows.push(CoarseningRow {
                geometry: geometry.name(),
                n,
                precond: name,
                geometric: cells[0],
                projection: cells[1],
            });
        }
    }
    Ok(rows)
}

pub fn write_coarsening_csv<W: Write>(rows: &[CoarseningRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "geometry,n,preconditioner,geometric_m,geometric_matvecs,projection_m,projection_matvecs"
    )?;
    for r in rows {
        let fmt = |v: Option<(usize, usize)>| match v {
            Some((m, c)) => (m.to_string(), c.to_string()),
            None => (String::new(), String::new()),
        };
        let (gm, gc) = fmt(r.geometric);
        let (pm, pc) = fmt(r.projection);
        writeln!(w, "{},{},{},{gm},{gc},{pm},{pc}", r.geometry, r.n, r.precond)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// coarse512 (four-lobed flower, Picard vs U-list across schemes)

pub struct Coarse512Row {
    pub n: usize,
    pub metric: f64,
    pub unpre: usize,
    pub p0_single: Option<usize>,
    /// (two-grid Picard, two-grid P0, multigrid Picard, multigrid P0)
    pub nmin512: Option<[usize; 4]>,
    pub nmin1024: Option<[usize; 4]>,
}

/// The coarse-grid-resolution study on the four-lobed flower at leaf
/// capacity 50: single-grid, two-grid and V-cycle with Picard or U-list
/// smoothing, at coarse sizes 512 and 1024.
pub fn coarse512_table() -> Result<Vec<Coarse512Row>> {
    let leaf = 50;
    let mut rows = Vec::new();
    for n in [512usize, 1024, 2048, 4096, 8192] {
        progress(&format!("coarse512: n {n}"));
        let op = op_for(GeometryChoice::Flower { lobes: 4 }, n)?;
        let metric = resolution_metric(&op);
        let f = RhsChoice::Charges.build(&op.grid, CHARGE_SEED);
        let (unpre, _, _) = solve_with(&op, &f.values, None);
        let p0_single = if n > 512 {
            let tree = tree_for(&op, leaf)?;
            let p = build_ulist(&op, &tree, FactorKind::ExactLu)?;
            Some(solve_with(&op, &f.values, Some(&p)).0)
        } else {
            None
        };
        let mut grids = [None, None];
        for (slot, n_min) in [(0usize, 512usize), (1, 1024)] {
            if n <= n_min {
                continue;
            }
            let mut cells = [0usize; 4];
            for (ci, (kind, sm)) in [
                (HierarchyKind::TwoGrid, "picard"),
                (HierarchyKind::TwoGrid, "ulist"),
                (HierarchyKind::VCycle, "picard"),
                (HierarchyKind::VCycle, "ulist"),
            ]
            .into_iter()
            .enumerate()
            {
                let h = build_hierarchy(
                    &op,
                    n_min,
                    kind,
                    CoarseMode::Geometric,
                    &smoother_spec_by_name(sm, leaf),
                    (1, 0),
                    CoarseSolverSpec::ExactLu,
                )?;
                cells[ci] = solve_with(&op, &f.values, Some(&h)).0;
            }
            grids[slot] = Some(cells);
        }
        rows.push(Coarse512Row {
            n,
            metric,
            unpre,
            p0_single,
            nmin512: grids[0],
            nmin1024: grids[1],
        });
    }
    Ok(rows)
}

pub fn write_coarse512_csv<W: Write>(rows: &[Coarse512Row], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "n,metric,unpre,p0_single,tg_picard_512,tg_p0_512,mg_picard_512,mg_p0_512,tg_picard_1024,tg_p0_1024,mg_picard_1024,mg_p0_1024"
    )?;
    for r in rows {
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        let grid = |g: Option<[usize; 4]>| match g {
            Some(c) => c.map(|x| x.to_string()).join(","),
            None => ",,,".into(),
        };
        writeln!(
            w,
            "{},{:.1e},{},{},{},{}",
            r.n,
            r.metric,
            r.unpre,
            opt(r.p0_single),
            grid(r.nmin512),
            grid(r.nmin1024)
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// single-grid (8- and 24-lobed flowers)

pub struct SingleGridRow {
    pub lobes: u32,
    pub n: usize,
    pub metric: f64,
    pub unpre: usize,
    pub blockdiag: usize,
    pub ulist: usize,
    pub ulist_ilu: usize,
    pub vlist1: usize,
    pub fmmschur: usize,
    pub fmmschur_ilu: usize,
}

/// Single-grid preconditioners on the 8- and 24-lobed flowers with random
/// data and leaf capacity 50; the 24-lobed N = 16384 case only with
/// `large`.
pub fn single_grid_table(large: bool, seed: u64) -> Result<Vec<SingleGridRow>> {
    let leaf = 50;
    let mut rows = Vec::new();
    for lobes in [8u32, 24] {
        let mut sizes = vec![512usize, 1024, 2048, 4096, 8192];
        if lobes == 24 && large {
            sizes.push(16384);
        }
        for n in sizes {
            progress(&format!("single-grid: {lobes}-lobed, n {n}"));
            let op = op_for(GeometryChoice::Flower { lobes }, n)?;
            let metric = resolution_metric(&op);
            let tree = tree_for(&op, leaf)?;
            let f = RhsChoice::Random.build(&op.grid, seed);
            let (unpre, _, _) = solve_with(&op, &f.values, None);
            let run_one = |p: &Preconditioner<f64>| solve_with(&op, &f.values, Some(p)).0;
            let blockdiag = {
                let p = build_blockdiag(&op, &tree)?;
                run_one(&p)
            };
            let ulist = {
                let p = build_ulist(&op, &tree, FactorKind::ExactLu)?;
                run_one(&p)
            };
            let ulist_ilu = {
                let p = build_ulist(&op, &tree, FactorKind::Ilu { drop_tol: 1e-3 })?;
                run_one(&p)
            };
            let vlist1 = {
                let p = build_vlist(&op, &tree, 1, 4, false)?;
                run_one(&p)
            };
            let parts = fmmschur_parts(&op, &tree, 5, None, None)?;
            let fmmschur = {
                let p = build_fmmschur_from_parts(&op, &tree, &parts, FactorKind::ExactLu, 5)?;
                run_one(&p)
            };
            let fmmschur_ilu = {
                let p = build_fmmschur_from_parts(
                    &op,
                    &tree,
                    &parts,
                    FactorKind::Ilu { drop_tol: 1e-3 },
                    5,
                )?;
                run_one(&p)
            };
            rows.push(SingleGridRow {
                lobes,
                n,
                metric,
                unpre,
                blockdiag,
                ulist,
                ulist_ilu,
                vlist1,
                fmmschur,
                fmmschur_ilu,
            });
        }
    }
    Ok(rows)
}

pub fn write_single_grid_csv<W: Write>(rows: &[SingleGridRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "lobes,n,metric,unpre,pd,p0,p0_ilu,p1,ps1,ps1_ilu"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.1e},{},{},{},{},{},{},{}",
            r.lobes,
            r.n,
            r.metric,
            r.unpre,
            r.blockdiag,
            r.ulist,
            r.ulist_ilu,
            r.vlist1,
            r.fmmschur,
            r.fmmschur_ilu
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// smoother spectrum

pub struct SpectrumRow {
    pub n: usize,
    /// Signed mode index, ascending from −n/2.
    pub mode: i64,
    pub picard: f64,
    pub blockdiag: f64,
    pub ulist: f64,
    pub vlist1: f64,
}

/// Per-mode error amplitude after one smoothing step with zero data and an
/// all-frequencies initial guess, on the four-lobed flower.
pub fn smoother_spectrum() -> Result<Vec<SpectrumRow>> {
    let leaf = 10;
    let mut rows = Vec::new();
    for n in [128usize, 512, 2048] {
        progress(&format!("smoother-spectrum: n {n}"));
        let op = op_for(GeometryChoice::Flower { lobes: 4 }, n)?;
        let tree = tree_for(&op, leaf)?;
        let smoothers: Vec<(&str, Preconditioner<f64>)> = vec![
            ("picard", build_identity(n)),
            ("blockdiag", build_blockdiag(&op, &tree)?),
            ("ulist", build_ulist(&op, &tree, FactorKind::ExactLu)?),
            ("vlist1", build_vlist(&op, &tree, 1, 4, false)?),
        ];
        // initial guess with unit amplitude in every Fourier mode
        let mut eta0 = Array1::zeros(n);
        eta0[0] = n as f64;
        let zero = Array1::zeros(n);
        let mut spectra = Vec::new();
        for (_, p) in &smoothers {
            let eta1 = split_smoother_step(p, &op, &zero, &eta0);
            spectra.push(mode_amplitudes(eta1.as_slice().unwrap()));
        }
        for idx in 0..n {
            // reorder FFT layout to signed modes −n/2 … n/2−1
            let signed = ((idx + n / 2) % n) as i64 - (n / 2) as i64;
            let fft_idx = if signed < 0 {
                (signed + n as i64) as usize
            } else {
                signed as usize
            };
            rows.push(SpectrumRow {
                n,
                mode: signed,
                picard: spectra[0][fft_idx],
                blockdiag: spectra[1][fft_idx],
                ulist: spectra[2][fft_idx],
                vlist1: spectra[3][fft_idx],
            });
        }
    }
    Ok(rows)
}

pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,mode,picard,pd,p0,p1")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.n, r.mode, r.picard, r.blockdiag, r.ulist, r.vlist1
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// Runs the named table and writes `<name>.csv` under `out`.
pub fn run_table(name: &str, out: &std::path::Path, seed: u64, large: bool) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| crate::config::ConfigError(format!("cannot create {out:?}: {e}")))?;
    let path = out.join(format!("{name}.csv"));
    let write = |bytes: Vec<u8>| -> Result<()> {
        std::fs::write(&path, bytes)
            .map_err(|e| crate::config::ConfigError(format!("cannot write {path:?}: {e}")))?;
        progress(&format!("wrote {}", path.display()));
        Ok(())
    };
    let mut buf = Vec::new();
    match name {
        "aspect-ratio" => {
            let rows = aspect_ratio_table()?;
            write_aspect_csv(&rows, &mut buf).unwrap();
        }
        "lobes" => {
            let rows = lobes_table(seed)?;
            write_lobes_csv(&rows, &mut buf).unwrap();
        }
        "two-level" => {
            let rows = two_level_table()?;
            write_two_level_csv(&rows, &mut buf).unwrap();
        }
        "coarsening" => {
            let rows = coarsening_tables()?;
            write_coarsening_csv(&rows, &mut buf).unwrap();
        }
        "coarse512" => {
            let rows = coarse512_table()?;
            write_coarse512_csv(&rows, &mut buf).unwrap();
        }
        "single-grid" => {
            let rows = single_grid_table(large, seed)?;
            write_single_grid_csv(&rows, &mut buf).unwrap();
        }
        "smoother-spectrum" => {
            let rows = smoother_spectrum()?;
            write_spectrum_csv(&rows, &mut buf).unwrap();
        }
        other => {
            return Err(crate::config::ConfigError(format!(
                "unknown table {other:?} (aspect-ratio|lobes|two-level|coarsening|coarse512|single-grid|smoother-spectrum)"
            )))
        }
    }
    write(buf)
}
