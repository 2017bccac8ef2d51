use porolab_core::domain::{CoefficientField, DomainSpec, GammaProfile};
use porolab_core::expr::Expr;
use porolab_core::solver::{solve_vi, BoundaryData, SolverParams};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let omega: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.15);
    let iters: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(400);
    let spec = DomainSpec::new(2, 0.5, 1.0, GammaProfile::Zero, &[n, n], 100.0).unwrap();
    let cf = CoefficientField::from_exprs(
        &spec,
        vec![Expr::parse("1").unwrap(), Expr::parse("0").unwrap(), Expr::parse("0").unwrap(), Expr::parse("1").unwrap()],
        Expr::parse("1").unwrap(), 1.0, 2.0, 1.0, 1.0, 12.0, 0.5,
    ).unwrap();
    let grid = spec.grid().clone();
    let bc = BoundaryData::from_fn(&grid, |p| (0.55 - 0.5 * p[0] - p[1]).max(0.0)).unwrap();
    let mut params = SolverParams::for_grid(&grid);
    params.omega = omega;
    params.max_iterations = iters;
    let t = std::time::Instant::now();
    let sol = solve_vi(&cf, &bc, &params).unwrap();
    println!("n={n} omega={omega} iters={} conv={} elapsed={:.1}s tol_u={:.2e}",
        sol.iterations, sol.converged, t.elapsed().as_secs_f64(), params.tol_u);
    for (i, rec) in sol.history.iter().enumerate() {
        if i % 20 == 0 || i + 3 >= sol.history.len() {
            println!("  it {:4}: du={:.3e} dchi={:.3e}", i + 1, rec.u_change, rec.chi_change);
        }
    }
}
