use porolab_core::domain::{CoefficientField, DomainSpec, GammaProfile};
use porolab_core::expr::Expr;
use porolab_core::solver::{solve_vi, BoundaryData, SolverParams};

fn main() {
    for &n in &[65usize, 129] {
        for &omega in &[0.4f64, 0.3, 0.25, 0.15, 0.1] {
            let spec = DomainSpec::new(2, 0.5, 1.0, GammaProfile::Zero, &[n, n], 100.0).unwrap();
            let cf = CoefficientField::from_exprs(
                &spec,
                vec![Expr::parse("1").unwrap(), Expr::parse("0").unwrap(), Expr::parse("0").unwrap(), Expr::parse("1").unwrap()],
                Expr::parse("1").unwrap(), 1.0, 2.0, 1.0, 1.0, 12.0, 0.5,
            ).unwrap();
            let grid = spec.grid();
            let bc = BoundaryData::from_fn(grid, |p| (0.55 - 0.5 * p[0] - p[1]).max(0.0)).unwrap();
            let mut params = SolverParams::for_grid(grid);
            params.omega = omega;
            params.max_iterations = 600;
            let t = std::time::Instant::now();
            let sol = solve_vi(&cf, &bc, &params).unwrap();
            println!("n={n:4} omega={omega:.2}: iters={:4} converged={} comp={:.2e} du_last={:.2e} {:.1}s",
                sol.iterations, sol.converged, sol.complementarity,
                sol.history.last().map(|r| r.u_change).unwrap_or(0.0),
                t.elapsed().as_secs_f64());
        }
    }
}
