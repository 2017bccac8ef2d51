use porolab_core::domain::{CoefficientField, DomainSpec, GammaProfile};
use porolab_core::expr::Expr;
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
    let tol = params.u_threshold;
    // Reproduce the ball scan and print violating (center, above) pairs.
    let nz = n;
    let r_steps = 2usize;
    for col in 0..n {
        for j in 0..nz {
            let fits = col >= r_steps && col + r_steps < n && j >= r_steps && j + r_steps < nz;
            if !fits { continue; }
            let lin = col * nz + j;
            if sol.u.values[lin] > tol { continue; }
            let mut all_dry = true;
            'outer: for dc in -(r_steps as i64)..=(r_steps as i64) {
                for dj in -(r_steps as i64)..=(r_steps as i64) {
                    if dc*dc + dj*dj > (r_steps*r_steps) as i64 { continue; }
                    let node = ((col as i64 + dc) * nz as i64 + j as i64 + dj) as usize;
                    if sol.u.values[node] > tol { all_dry = false; break 'outer; }
                }
            }
            if !all_dry { continue; }
            for dc in -(r_steps as i64)..=(r_steps as i64) {
                let c2 = (col as i64 + dc) as usize;
                if dc * dc > (r_steps * r_steps) as i64 { continue; }
                for jj in j + r_steps + 1..nz {
                    let node = c2 * nz + jj;
                    if sol.chi.values[node] > tol {
                        println!("ball ({col},{j}) sees chi={:.4e} u={:.4e} at ({c2},{jj})",
                            sol.chi.values[node], sol.u.values[node]);
                    }
                }
            }
        }
    }
}
