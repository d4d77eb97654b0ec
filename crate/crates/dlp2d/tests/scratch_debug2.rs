// temporary: Z-rank law calibration on the 8-lobed sweep

use dlp2d::fmmtree::{build_lists, build_tree};
use dlp2d::geometry::{build_grid, CurveSpec};
use dlp2d::linalg::FactorKind;
use dlp2d::nystrom::{assemble, boundary_data_random};
use dlp2d::precond::build_fmmschur;
use dlp2d::solver::{gmres, Precondition};

#[test]
#[ignore]
fn z_rank_law() {
    // paper values for ps1: 512->6, 1024->6, 2048->8, 4096->10, 8192->8
    for n in [512usize, 1024, 2048, 4096, 8192] {
        let g = build_grid(CurveSpec::<f64>::Flower { lobes: 8 }, n).unwrap();
        let op = assemble(&g);
        let pts: Vec<_> = (0..n).map(|j| g.point(j)).collect();
        let tree = build_lists(build_tree(&pts, 50).unwrap());
        let f = boundary_data_random(&g, 42);
        let mut line = format!("n {n}:");
        for div in [32usize, 24, 16] {
            let rz = (n / div).max(((5.0 * ((n as f64) / 50.0).log2()).ceil()) as usize);
            let ps1 =
                build_fmmschur(&op, &tree, FactorKind::ExactLu, 5, 5, Some(rz), None).unwrap();
            let m = gmres(&op, &f.values, 1e-12, 2000, Some(&ps1 as &dyn Precondition<f64>))
                .iterations;
            line.push_str(&format!("  N/{div}(rz={rz})->{m}"));
        }
        println!("{line}");
    }
}
