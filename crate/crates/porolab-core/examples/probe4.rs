use porolab_core::domain::{CoefficientField, DomainSpec, GammaProfile};
use porolab_core::expr::Expr;
use porolab_core::free_boundary::check_structure;
use porolab_core::solver::{solve_vi, BoundaryData, SolverParams};

fn main() {
    let n = 128;
    let spec = DomainSpec::new(2, 0.5, 1.0, GammaProfile::Zero, &[n, n], 100.0).unwrap();
    let cf = CoefficientField::from_exprs(
        &spec,
        vec![Expr::parse("1").unwrap(), Expr::parse("0").unwrap(), Expr::parse("0").unwrap(), Expr::parse("1").unwrap()],
        Expr::parse("1").unwrap(), 1.0, 2.0, 1.0, 1.0, 12.0, 0.5,
    ).unwrap();
    let grid = spec.grid().clone();
    let bc = BoundaryData::from_fn(&grid, |p| (0.55 - 0.5 * p[0] - p[1]).max(0.0)).unwrap();
    let params = SolverParams::for_grid(&grid);
    let sol = solve_vi(&cf, &bc, &params).unwrap();
    println!("converged={} tol={:.3e}", sol.converged, params.u_threshold);
    let rep = check_structure(&sol, params.u_threshold).unwrap();
    println!("{rep:?}");
    // Dump transition profiles of a few columns.
    let nz = n;
    for col in [10usize, 64, 100] {
        println!("column {col}:");
        let base = col * nz;
        for j in 0..nz {
            let u = sol.u.values[base + j];
            let c = sol.chi.values[base + j];
            let band = c > 1e-12 && c < 1.0 - 1e-12;
            let edge = j > 0 && (sol.chi.values[base + j - 1] >= 1.0 - 1e-12) && c < 1.0 - 1e-12;
            if band || edge {
                println!("  j {j:3}: u={u:.6e} chi={c:.8e}");
            }
        }
    }
}
