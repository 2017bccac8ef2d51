use porolab_core::domain::{CoefficientField, DomainSpec, GammaProfile};
use porolab_core::expr::Expr;
use porolab_core::free_boundary::check_structure;
use porolab_core::solver::{solve_vi, BoundaryData, SolverParams};

fn main() {
    for &n in &[128usize, 256] {
        let t = std::time::Instant::now();
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
        let rep = check_structure(&sol, params.u_threshold).unwrap();
        println!("n={n}: iters={} conv={} (a)={} (b)={} (c)={} (d)={:.5e} budget={:.5e} elapsed={:.1}s",
            sol.iterations, sol.converged,
            rep.down_closed_violations, rep.chi_monotone_violations, rep.zero_ball_violations,
            rep.indicator_mismatch_fraction, 4.0 * grid.min_spacing(),
            t.elapsed().as_secs_f64());
    }
}
