use porolab_core::domain::{CoefficientField, DomainSpec, GammaProfile};
use porolab_core::expr::Expr;
use porolab_core::solver::{solve_vi, BoundaryData, SolverParams};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(65);
    let spec = DomainSpec::new(2, 0.5, 1.0, GammaProfile::Zero, &[n, n], 100.0).unwrap();
    let cf = CoefficientField::from_exprs(
        &spec,
        vec![
            Expr::parse("1").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("0").unwrap(),
            Expr::parse("1").unwrap(),
        ],
        Expr::parse("1").unwrap(),
        1.0, 2.0, 1.0, 1.0, 12.0, 0.5,
    ).unwrap();
    let grid = spec.grid();
    let bc = BoundaryData::from_fn(grid, |p| (0.55 - 0.5 * p[0] - p[1]).max(0.0)).unwrap();
    let params = SolverParams::for_grid(grid);
    eprintln!("params: tol_u={:.3e} thr={:.3e} w={:.3e} omega={}", params.tol_u, params.u_threshold, params.heaviside_width, params.omega);
    let t = std::time::Instant::now();
    let sol = solve_vi(&cf, &bc, &params).unwrap();
    eprintln!("n={n} iters={} converged={} comp={:.3e} elapsed={:.2}s",
        sol.iterations, sol.converged, sol.complementarity, t.elapsed().as_secs_f64());
    let hist = &sol.history;
    for (i, rec) in hist.iter().enumerate() {
        if i < 10 || i % 25 == 0 || i + 5 >= hist.len() {
            eprintln!("  it {:4}: du={:.3e} dchi={:.3e} comp={:.3e}", i + 1, rec.u_change, rec.chi_change, rec.complementarity);
        }
    }
}
