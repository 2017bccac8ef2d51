use porolab_core::domain::{CoefficientField, DomainSpec, GammaProfile};
use porolab_core::expr::Expr;
use porolab_core::solver::{solve_vi, BoundaryData, SolverParams};

fn run(n: usize, iters: usize) -> porolab_core::solver::Solution {
    let spec = DomainSpec::new(2, 0.5, 1.0, GammaProfile::Zero, &[n, n], 100.0).unwrap();
    let cf = CoefficientField::from_exprs(
        &spec,
        vec![Expr::parse("1").unwrap(), Expr::parse("0").unwrap(), Expr::parse("0").unwrap(), Expr::parse("1").unwrap()],
        Expr::parse("1").unwrap(), 1.0, 2.0, 1.0, 1.0, 12.0, 0.5,
    ).unwrap();
    let grid = spec.grid();
    let bc = BoundaryData::from_fn(grid, |p| (0.55 - 0.5 * p[0] - p[1]).max(0.0)).unwrap();
    let mut params = SolverParams::for_grid(grid);
    params.max_iterations = iters;
    solve_vi(&cf, &bc, &params).unwrap()
}

fn main() {
    let n = 65;
    let a = run(n, 300);
    let b = run(n, 301);
    let nz = n;
    // Find the columns/nodes with the largest chi and u changes.
    let mut worst: Vec<(f64, usize)> = a.chi.values.iter().zip(&b.chi.values).enumerate()
        .map(|(i, (x, y))| ((x - y).abs(), i)).collect();
    worst.sort_by(|p, q| q.0.partial_cmp(&p.0).unwrap());
    println!("largest chi changes:");
    for (d, i) in worst.iter().take(8) {
        let col = i / nz; let j = i % nz;
        println!("  col {col:3} j {j:3}: dchi={d:.3e} chi={:.4} u={:.4e} u'={:.4e}", a.chi.values[*i], a.u.values[*i], b.u.values[*i]);
    }
    let mut worst_u: Vec<(f64, usize)> = a.u.values.iter().zip(&b.u.values).enumerate()
        .map(|(i, (x, y))| ((x - y).abs(), i)).collect();
    worst_u.sort_by(|p, q| q.0.partial_cmp(&p.0).unwrap());
    println!("largest u changes:");
    for (d, i) in worst_u.iter().take(5) {
        let col = i / nz; let j = i % nz;
        println!("  col {col:3} j {j:3}: du={d:.3e} u={:.4e}", a.u.values[*i]);
    }
    // Dump one hot column profile near the free boundary.
    let hot = worst[0].1 / nz;
    println!("column {hot} profile (z index, u, chi) around the transition:");
    let grid = a.u.grid.clone();
    for j in 0..nz {
        let i = hot * nz + j;
        let chi = a.chi.values[i];
        if chi > 1e-9 && chi < 1.0 - 1e-9 || (j > 0 && (a.chi.values[i - 1] - chi).abs() > 0.5) {
            let z = grid.coord(1, j);
            println!("  j {j:3} z {z:.4}: u={:.6e} chi={:.6} | next u={:.6e} chi={:.6}", a.u.values[i], chi, b.u.values[i], b.chi.values[i]);
        }
    }
}
