//! Porosity measurement of the free-boundary cell cover and the constant
//! pipeline predicting the porosity parameter, plus a box-counting dimension
//! estimate.
//!
//! Empirical porosity of a point on the cover at radius `r`: the largest
//! `delta` such that some ball of radius `delta * r`, centered on a search
//! lattice inside the query ball, avoids every (inflated) cover cell while
//! staying inside the query ball. The constructive route mirrors the
//! comparison argument: take the grid maximizer of the pressure over the
//! box hanging below the query point, move it to the query height, and
//! check that the predicted ball around it clears the cover.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_boundary::FreeBoundarySet;
use crate::grid::Grid;
use crate::solver::Solution;

/// Predicted constants: data floor `c0`, Lipschitz-ball radius factor
/// `delta`, and the porosity parameter `delta0`.
pub fn predicted_constants(c1: f64, epsilon0: f64) -> Result<(f64, f64, f64)> {
    if !(c1 > 0.0) {
        return Err(Error::Parameter(format!("c1 must be positive, got {c1}")));
    }
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(Error::Parameter(format!("epsilon0 must lie in (0,1), got {epsilon0}")));
    }
    let c0 = epsilon0 / 3.0;
    let delta = (c0 / (2.0 * c1)).min(1.0);
    Ok((c0, delta, delta / 2.0))
}

/// A porosity query at a cover point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PorosityQuery {
    pub x0: Vec<f64>,
    pub r: f64,
    /// Search-lattice refinement: 1 uses grid nodes, k subdivides each cell
    /// k-fold.
    pub resolution: u32,
}

/// Measured porosity at one (point, radius) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PorosityMeasurement {
    pub x0: Vec<f64>,
    pub r: f64,
    pub delta_hat: f64,
    pub witness: Vec<f64>,
    /// Set when the cover was empty inside the query ball and the capped
    /// value was reported.
    pub degenerate: bool,
}

/// Largest empty-ball fraction at the query point: brute force over the
/// search lattice, with cover cells inflated by one grid spacing so the
/// result never overstates porosity.
pub fn empirical_porosity(
    fb: &FreeBoundarySet,
    query: &PorosityQuery,
    grid: &Grid,
) -> Result<PorosityMeasurement> {
    let dim = grid.dim();
    if query.x0.len() != dim {
        return Err(Error::Parameter("query point has wrong dimension".into()));
    }
    if !(query.r > 0.0) {
        return Err(Error::Parameter("query radius must be positive".into()));
    }
    let res = query.resolution.max(1) as f64;
    let h = grid.min_spacing();

    // Degenerate input: no cover cell inside the query ball.
    let nearest = fb.center_distance(&query.x0);
    if !nearest.is_finite() || nearest > query.r {
        let delta_hat = (1.0 - h / query.r).max(0.0);
        return Ok(PorosityMeasurement {
            x0: query.x0.clone(),
            r: query.r,
            delta_hat,
            witness: query.x0.clone(),
            degenerate: true,
        });
    }

    // Search lattice: grid-aligned sublattice of spacing h_d / resolution
    // covering the query ball.
    let mut best = 0.0f64;
    let mut witness = query.x0.clone();
    let mut lo = vec![0i64; dim];
    let mut hi = vec![0i64; dim];
    for d in 0..dim {
        let step = grid.spacing()[d] / res;
        lo[d] = ((query.x0[d] - query.r - grid.origin()[d]) / step).ceil() as i64;
        hi[d] = ((query.x0[d] + query.r - grid.origin()[d]) / step).floor() as i64;
    }
    let mut counter = lo.clone();
    let mut p = vec![0.0; dim];
    loop {
        for d in 0..dim {
            p[d] = grid.origin()[d] + counter[d] as f64 * grid.spacing()[d] / res;
        }
        let off: f64 = p
            .iter()
            .zip(&query.x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if off < query.r {
            let room = (query.r - off).min(fb.inflated_distance(&p));
            if room > best {
                best = room;
                witness.copy_from_slice(&p);
            }
        }
        // Advance the counter.
        let mut d = 0;
        while d < dim {
            counter[d] += 1;
            if counter[d] <= hi[d] {
                break;
            }
            counter[d] = lo[d];
            d += 1;
        }
        if d == dim {
            break;
        }
    }
    let measurement = PorosityMeasurement {
        x0: query.x0.clone(),
        r: query.r,
        delta_hat: best / query.r,
        witness,
        degenerate: false,
    };
    verify_witness(fb, &measurement, grid)?;
    Ok(measurement)
}

/// Set-theoretic re-verification of a reported witness: no cover cell center
/// within the witness ball (inflated metric) and the ball inside the query
/// ball up to one grid spacing.
fn verify_witness(fb: &FreeBoundarySet, m: &PorosityMeasurement, grid: &Grid) -> Result<()> {
    let h = grid.min_spacing();
    let ball = m.delta_hat * m.r;
    if fb.inflated_distance(&m.witness) + 1e-12 < ball {
        return Err(Error::Solver(format!(
            "porosity witness at {:?} overlaps the cover: clearance {:.3e} < ball {:.3e}",
            m.witness,
            fb.inflated_distance(&m.witness),
            ball
        )));
    }
    let off: f64 = m
        .witness
        .iter()
        .zip(&m.x0)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if off + ball > m.r + h + 1e-12 {
        return Err(Error::Solver(format!(
            "porosity witness ball leaves the query ball: |y - x0| + delta r = {:.3e} > r + h",
            off + ball
        )));
    }
    Ok(())
}

/// Constructive witness around a cover point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructiveWitness {
    pub x0: Vec<f64>,
    pub r: f64,
    /// Grid maximizer of the pressure over the box below the point.
    pub x1: Vec<f64>,
    /// The maximizer moved to the query height.
    pub x2: Vec<f64>,
    pub u_max: f64,
    /// Whether the maximum exceeded the predicted data floor `c0 * r`.
    pub exceeds_floor: bool,
    /// Distance from `x2` to the nearest cover cell center.
    pub fb_center_distance: f64,
    /// Ball of radius `delta * r` around `x2` avoids cover centers.
    pub delta_ball_clear: bool,
    /// Ball of radius `delta0 * r` around `x2` avoids cover centers.
    pub delta0_ball_clear: bool,
    /// Pressure vanished over the whole search box; the query point was not
    /// a genuine cover point at this resolution.
    pub contradiction: bool,
}

/// Runs the constructive argument at a cover point: maximize the pressure
/// over `{|x' - x'_0| <= r} x [x0_n - 2r, x0_n]`, move the maximizer to the
/// query height, and check the predicted balls around it against the cover.
pub fn constructive_center(
    sol: &Solution,
    fb: &FreeBoundarySet,
    x0: &[f64],
    r: f64,
    c0: f64,
    delta: f64,
    delta0: f64,
    u_threshold: f64,
) -> Result<ConstructiveWitness> {
    let grid = sol.grid();
    let dim = grid.dim();
    if x0.len() != dim {
        return Err(Error::Parameter("query point has wrong dimension".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Parameter("radius must be positive".into()));
    }
    let vert = grid.vertical_axis();
    let z_hi = x0[vert];
    let z_lo = x0[vert] - 2.0 * r;
    let mut best_u = f64::NEG_INFINITY;
    let mut best_node = None;
    for lin in 0..grid.len() {
        let p = grid.point(lin);
        if p[vert] < z_lo - 1e-12 || p[vert] > z_hi + 1e-12 {
            continue;
        }
        let lat2: f64 = (0..dim - 1).map(|d| (p[d] - x0[d]) * (p[d] - x0[d])).sum();
        if lat2 > r * r * (1.0 + 1e-12) {
            continue;
        }
        if sol.u.values[lin] > best_u {
            best_u = sol.u.values[lin];
            best_node = Some(lin);
        }
    }
    let (x1, u_max, contradiction) = match best_node {
        Some(lin) if best_u > u_threshold => {
            (grid.point(lin)[..dim].to_vec(), best_u, false)
        }
        Some(lin) => (grid.point(lin)[..dim].to_vec(), best_u.max(0.0), true),
        None => (x0.to_vec(), 0.0, true),
    };
    let mut x2 = x1.clone();
    x2[vert] = x0[vert];
    let fb_center_distance = fb.center_distance(&x2);
    Ok(ConstructiveWitness {
        x0: x0.to_vec(),
        r,
        x1,
        x2,
        u_max,
        exceeds_floor: u_max > c0 * r,
        fb_center_distance,
        delta_ball_clear: fb_center_distance > delta * r,
        delta0_ball_clear: fb_center_distance > delta0 * r,
        contradiction,
    })
}

/// Aggregated porosity report over the cover.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PorositySweep {
    pub c0: f64,
    pub delta: f64,
    pub delta0: f64,
    pub radii: Vec<f64>,
    pub measurements: Vec<PorosityMeasurement>,
    pub constructive: Vec<ConstructiveWitness>,
    pub min_delta_hat: Option<f64>,
    /// Resolution allowance `2 h / min(radii)`.
    pub slack: Option<f64>,
    /// `min_delta_hat >= delta0 - slack`; absent when the sweep was empty.
    pub pass: Option<bool>,
}

/// Sweep options: which cover points get the constructive treatment and how
/// fine the search lattice is.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Run the constructive check on every k-th cover cell.
    pub constructive_stride: usize,
    pub search_resolution: u32,
    /// Positivity cutoff used by the constructive route.
    pub u_threshold: f64,
}

/// Measures empirical porosity at every cover cell center and radius, plus
/// the constructive witnesses on a sampled subset.
pub fn porosity_sweep(
    fb: &FreeBoundarySet,
    sol: &Solution,
    radii: &[f64],
    c0: f64,
    delta: f64,
    delta0: f64,
    opts: &SweepOptions,
) -> Result<PorositySweep> {
    if radii.is_empty() {
        return Ok(PorositySweep {
            c0,
            delta,
            delta0,
            radii: vec![],
            measurements: vec![],
            constructive: vec![],
            min_delta_hat: None,
            slack: None,
            pass: None,
        });
    }
    let grid = sol.grid();
    let mut tasks: Vec<(usize, f64)> = Vec::new();
    for (ci, _) in fb.centers.iter().enumerate() {
        for &r in radii {
            tasks.push((ci, r));
        }
    }
    let measurements: Vec<PorosityMeasurement> = tasks
        .par_iter()
        .map(|&(ci, r)| {
            let query = PorosityQuery {
                x0: fb.centers[ci].clone(),
                r,
                resolution: opts.search_resolution,
            };
            empirical_porosity(fb, &query, grid)
        })
        .collect::<Result<Vec<_>>>()?;

    let stride = opts.constructive_stride.max(1);
    let mut ctasks: Vec<(usize, f64)> = Vec::new();
    for ci in (0..fb.centers.len()).step_by(stride) {
        for &r in radii {
            ctasks.push((ci, r));
        }
    }
    let constructive: Vec<ConstructiveWitness> = ctasks
        .par_iter()
        .map(|&(ci, r)| {
            constructive_center(sol, fb, &fb.centers[ci], r, c0, delta, delta0, opts.u_threshold)
        })
        .collect::<Result<Vec<_>>>()?;

    let min_delta_hat = measurements
        .iter()
        .filter(|m| !m.degenerate)
        .map(|m| m.delta_hat)
        .fold(f64::INFINITY, f64::min);
    let min_delta_hat = if min_delta_hat.is_finite() { Some(min_delta_hat) } else { None };
    let min_radius = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let slack = 2.0 * grid.min_spacing() / min_radius;
    let pass = min_delta_hat.map(|m| m >= delta0 - slack);
    Ok(PorositySweep {
        c0,
        delta,
        delta0,
        radii: radii.to_vec(),
        measurements,
        constructive,
        min_delta_hat,
        slack: Some(slack),
        pass,
    })
}

/// Box-counting fit of the cover.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the least-squares fit in log space.
    pub residual: f64,
    pub counts: Vec<(f64, usize)>,
}

/// Counts axis-aligned boxes of each scale meeting the (box-shaped) cover
/// cells and fits `log N` against `log (1/s)`.
pub fn box_dimension(fb: &FreeBoundarySet, scales: &[f64], bbox_min: &[f64]) -> Result<DimensionFit> {
    if scales.len() < 3 {
        return Err(Error::Parameter("box counting needs at least 3 scales".into()));
    }
    if fb.is_empty() {
        return Err(Error::Parameter("box counting needs a nonempty cover".into()));
    }
    let dim = bbox_min.len();
    let mut counts = Vec::with_capacity(scales.len());
    for &s in scales {
        if !(s > 0.0) {
            return Err(Error::Parameter("box scales must be positive".into()));
        }
        let mut boxes = std::collections::HashSet::new();
        for c in &fb.centers {
            // Index range of boxes overlapping the cell.
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            for d in 0..dim {
                let half = 0.5 * fb.cell_size[d];
                lo[d] = ((c[d] - half - bbox_min[d]) / s).floor() as i64;
                hi[d] = (((c[d] + half - bbox_min[d]) / s) - 1e-12).floor() as i64;
            }
            let mut it = lo;
            loop {
                boxes.insert(it);
                let mut d = 0;
                while d < dim {
                    it[d] += 1;
                    if it[d] <= hi[d] {
                        break;
                    }
                    it[d] = lo[d];
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
        }
        counts.push((s, boxes.len()));
    }
    // Least squares of log N versus log(1/s).
    let n = counts.len() as f64;
    let xs: Vec<f64> = counts.iter().map(|(s, _)| (1.0 / s).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|(_, c)| (*c as f64).ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::Parameter("degenerate scale list for box counting".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DimensionFit { slope, intercept, residual, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyperplane_cover(grid: &Grid, height: f64) -> FreeBoundarySet {
        let hz = grid.spacing()[1];
        let hx = grid.spacing()[0];
        let j = ((height - grid.origin()[1]) / hz).floor();
        let zc = grid.origin()[1] + (j + 0.5) * hz;
        let centers: Vec<Vec<f64>> = (0..grid.shape()[0] - 1)
            .map(|i| vec![grid.origin()[0] + (i as f64 + 0.5) * hx, zc])
            .collect();
        FreeBoundarySet {
            bbox_min: vec![centers[0][0], zc],
            bbox_max: vec![centers.last().unwrap()[0], zc],
            centers,
            cell_size: grid.spacing().to_vec(),
            h_grid: grid.min_spacing(),
        }
    }

    fn single_cell_cover(grid: &Grid, center: Vec<f64>) -> FreeBoundarySet {
        FreeBoundarySet {
            bbox_min: center.clone(),
            bbox_max: center.clone(),
            centers: vec![center],
            cell_size: grid.spacing().to_vec(),
            h_grid: grid.min_spacing(),
        }
    }

    #[test]
    fn predicted_constants_hand_values() {
        let (c0, d, d0) = predicted_constants(1.0, 0.3).unwrap();
        assert!((c0 - 0.1).abs() < 1e-15);
        assert!((d - 0.05).abs() < 1e-15);
        assert!((d0 - 0.025).abs() < 1e-15);

        let (c0, d, d0) = predicted_constants(0.1, 0.9).unwrap();
        assert!((c0 - 0.3).abs() < 1e-15);
        assert_eq!(d, 1.0); // clamped
        assert_eq!(d0, 0.5);

        let (c0, d, d0) = predicted_constants(5.0, 0.06).unwrap();
        assert!((c0 - 0.02).abs() < 1e-15);
        assert!((d - 0.002).abs() < 1e-15);
        assert!((d0 - 0.001).abs() < 1e-15);

        assert!(predicted_constants(0.0, 0.5).is_err());
        assert!(predicted_constants(1.0, 1.5).is_err());
    }

    #[test]
    fn predicted_constants_monotone() {
        let (_, _, d0_base) = predicted_constants(1.0, 0.3).unwrap();
        let (_, _, d0_bigger_c1) = predicted_constants(2.0, 0.3).unwrap();
        let (_, _, d0_bigger_eps) = predicted_constants(1.0, 0.6).unwrap();
        assert!(d0_bigger_c1 <= d0_base);
        assert!(d0_bigger_eps >= d0_base);
    }

    #[test]
    fn hyperplane_porosity_approaches_half() {
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[129, 129]).unwrap();
        let fb = hyperplane_cover(&grid, 0.5);
        let h = grid.min_spacing();
        let r = 0.25;
        let x0 = fb.centers[64].clone();
        let q = PorosityQuery { x0, r, resolution: 1 };
        let m = empirical_porosity(&fb, &q, &grid).unwrap();
        assert!(!m.degenerate);
        assert!(m.delta_hat <= 0.5 + 1e-9);
        assert!(m.delta_hat >= 0.5 - 4.0 * h / r, "delta_hat = {}", m.delta_hat);
    }

    #[test]
    fn single_cell_porosity_approaches_half() {
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[129, 129]).unwrap();
        let center = vec![0.0, 0.5];
        let fb = single_cell_cover(&grid, center.clone());
        let h = grid.min_spacing();
        let r = 0.3;
        let q = PorosityQuery { x0: center, r, resolution: 1 };
        let m = empirical_porosity(&fb, &q, &grid).unwrap();
        assert!(m.delta_hat >= 0.5 - 4.0 * h / r, "delta_hat = {}", m.delta_hat);
    }

    #[test]
    fn empty_cover_is_capped_and_flagged() {
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[65, 65]).unwrap();
        let fb = single_cell_cover(&grid, vec![0.4, 0.9]);
        let h = grid.min_spacing();
        let r = 0.1;
        let q = PorosityQuery { x0: vec![-0.4, 0.1], r, resolution: 1 };
        let m = empirical_porosity(&fb, &q, &grid).unwrap();
        assert!(m.degenerate);
        assert!((m.delta_hat - (1.0 - h / r)).abs() < 1e-12);
    }

    #[test]
    fn porosity_is_scale_consistent() {
        // Scaling geometry and radius together leaves delta_hat within
        // lattice resolution.
        let grid1 = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[129, 129]).unwrap();
        let grid2 = Grid::over_box(&[-1.0, 0.0], &[1.0, 2.0], &[129, 129]).unwrap();
        let fb1 = hyperplane_cover(&grid1, 0.5);
        let fb2 = hyperplane_cover(&grid2, 1.0);
        let m1 = empirical_porosity(
            &fb1,
            &PorosityQuery { x0: fb1.centers[64].clone(), r: 0.25, resolution: 1 },
            &grid1,
        )
        .unwrap();
        let m2 = empirical_porosity(
            &fb2,
            &PorosityQuery { x0: fb2.centers[64].clone(), r: 0.5, resolution: 1 },
            &grid2,
        )
        .unwrap();
        let lattice = 4.0 * grid1.min_spacing() / 0.25;
        assert!((m1.delta_hat - m2.delta_hat).abs() <= lattice);
    }

    #[test]
    fn constructive_center_on_analytic_column() {
        use crate::grid::GridField;
        let grid = Grid::over_box(&[0.0], &[1.0], &[129]).unwrap();
        let u = GridField::from_fn(&grid, |p| (0.6 - p[0]).max(0.0));
        let chi = GridField::from_fn(&grid, |p| if p[0] < 0.6 { 1.0 } else { 0.0 });
        let sol = Solution {
            u,
            chi,
            iterations: 0,
            converged: true,
            history: vec![],
            complementarity: 0.0,
            last_linear: None,
        };
        let fb = single_cell_cover(&grid, vec![0.6]);
        let r = 0.1;
        let w = constructive_center(&sol, &fb, &[0.6], r, 0.05, 0.02, 0.01, 1e-9).unwrap();
        assert!(!w.contradiction);
        // The maximizer sits at the bottom of the search box; the pressure
        // there is the distance from the box bottom to the support end.
        assert!((w.u_max - 0.2).abs() <= 2.0 * grid.min_spacing());
        assert!(w.u_max > 0.0);
        assert!(w.exceeds_floor);
    }

    #[test]
    fn constructive_center_flags_dry_box() {
        use crate::grid::GridField;
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[33, 33]).unwrap();
        let sol = Solution {
            u: GridField::zeros(&grid),
            chi: GridField::zeros(&grid),
            iterations: 0,
            converged: true,
            history: vec![],
            complementarity: 0.0,
            last_linear: None,
        };
        let fb = single_cell_cover(&grid, vec![0.0, 0.5]);
        let w = constructive_center(&sol, &fb, &[0.0, 0.5], 0.1, 0.05, 0.02, 0.01, 1e-9).unwrap();
        assert!(w.contradiction);
    }

    #[test]
    fn constructive_center_on_synthetic_graph() {
        use crate::grid::GridField;
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[129, 129]).unwrap();
        let psi = |x: f64| 0.5 + 0.2 * x;
        let u = GridField::from_fn(&grid, move |p| (psi(p[0]) - p[1]).max(0.0));
        let chi = GridField::from_fn(&grid, move |p| if p[1] < psi(p[0]) { 1.0 } else { 0.0 });
        let sol = Solution {
            u,
            chi,
            iterations: 0,
            converged: true,
            history: vec![],
            complementarity: 0.0,
            last_linear: None,
        };
        // Cover of the graph, one cell per lateral cell column.
        let hz = grid.spacing()[1];
        let hx = grid.spacing()[0];
        let centers: Vec<Vec<f64>> = (0..grid.shape()[0] - 1)
            .map(|i| {
                let xc = grid.origin()[0] + (i as f64 + 0.5) * hx;
                let j = ((psi(xc) - grid.origin()[1]) / hz).floor();
                vec![xc, grid.origin()[1] + (j + 0.5) * hz]
            })
            .collect();
        let fb = FreeBoundarySet {
            bbox_min: vec![-0.5, 0.0],
            bbox_max: vec![0.5, 1.0],
            centers,
            cell_size: grid.spacing().to_vec(),
            h_grid: grid.min_spacing(),
        };
        // Measured Lipschitz constant of this synthetic field is 1.
        let (c0, delta, delta0) = predicted_constants(1.0, 0.3).unwrap();
        let x0 = fb.centers[64].clone();
        let r = 0.12;
        let w = constructive_center(&sol, &fb, &x0, r, c0, delta, delta0, 1e-9).unwrap();
        assert!(!w.contradiction);
        assert!(w.exceeds_floor);
        // The witness lies strictly inside the wet region and its predicted
        // ball avoids the cover.
        assert!(w.delta0_ball_clear, "distance {}", w.fb_center_distance);
    }

    #[test]
    fn sweep_on_hyperplane_is_far_above_prediction() {
        use crate::grid::GridField;
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[129, 129]).unwrap();
        let fb = hyperplane_cover(&grid, 0.5);
        let sol = Solution {
            u: GridField::from_fn(&grid, |p| (0.5 - p[1]).max(0.0)),
            chi: GridField::from_fn(&grid, |p| if p[1] < 0.5 { 1.0 } else { 0.0 }),
            iterations: 0,
            converged: true,
            history: vec![],
            complementarity: 0.0,
            last_linear: None,
        };
        let opts = SweepOptions { constructive_stride: 16, search_resolution: 1, u_threshold: 1e-9 };
        let sweep =
            porosity_sweep(&fb, &sol, &[0.2, 0.1], 0.05, 0.02, 0.01, &opts).unwrap();
        let min = sweep.min_delta_hat.unwrap();
        assert!(min > 0.3, "min delta_hat = {min}");
        assert_eq!(sweep.pass, Some(true));
    }

    #[test]
    fn sweep_with_no_radii_is_empty() {
        use crate::grid::GridField;
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[33, 33]).unwrap();
        let fb = hyperplane_cover(&grid, 0.5);
        let sol = Solution {
            u: GridField::zeros(&grid),
            chi: GridField::zeros(&grid),
            iterations: 0,
            converged: true,
            history: vec![],
            complementarity: 0.0,
            last_linear: None,
        };
        let opts = SweepOptions { constructive_stride: 1, search_resolution: 1, u_threshold: 1e-9 };
        let sweep = porosity_sweep(&fb, &sol, &[], 0.05, 0.02, 0.01, &opts).unwrap();
        assert!(sweep.measurements.is_empty());
        assert!(sweep.pass.is_none());
    }

    #[test]
    fn box_dimension_of_point_line_and_square() {
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[129, 129]).unwrap();
        let scales = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let bbox = [-0.5, 0.0];

        // Lattice-aligned cell center, as the extraction produces.
        let hx = grid.spacing()[0];
        let hz = grid.spacing()[1];
        let point =
            single_cell_cover(&grid, vec![-0.5 + 65.5 * hx, 62.5 * hz]);
        let fit = box_dimension(&point, &scales, &bbox).unwrap();
        assert!(fit.slope.abs() <= 0.1, "point slope {}", fit.slope);

        let line = hyperplane_cover(&grid, 0.5);
        let fit = box_dimension(&line, &scales, &bbox).unwrap();
        assert!((fit.slope - 1.0).abs() <= 0.1, "line slope {}", fit.slope);

        // Full square of cells.
        let mut centers = Vec::new();
        let hx = grid.spacing()[0];
        let hz = grid.spacing()[1];
        for i in 0..grid.shape()[0] - 1 {
            for j in 0..grid.shape()[1] - 1 {
                centers.push(vec![
                    grid.origin()[0] + (i as f64 + 0.5) * hx,
                    grid.origin()[1] + (j as f64 + 0.5) * hz,
                ]);
            }
        }
        let square = FreeBoundarySet {
            bbox_min: vec![-0.5, 0.0],
            bbox_max: vec![0.5, 1.0],
            centers,
            cell_size: grid.spacing().to_vec(),
            h_grid: grid.min_spacing(),
        };
        let fit = box_dimension(&square, &scales, &bbox).unwrap();
        assert!((fit.slope - 2.0).abs() <= 0.1, "square slope {}", fit.slope);
    }

    #[test]
    fn box_dimension_needs_three_scales() {
        let grid = Grid::over_box(&[-0.5, 0.0], &[0.5, 1.0], &[33, 33]).unwrap();
        let fb = hyperplane_cover(&grid, 0.5);
        assert!(box_dimension(&fb, &[0.1, 0.05], &[-0.5, 0.0]).is_err());
    }
}
