//! Domain geometry, the flattening change of variables, coefficient fields,
//! and validation of the structural assumptions on them.
//!
//! The physical domain is the set between a bottom profile `gamma` and its
//! vertical translate by `l`, over the lateral ball of radius `rho`. The
//! flattening map sends it to the straight cylinder `B'_rho x (0, l)`; all
//! solves happen on the flat side. The flattening is volume preserving and
//! its Jacobian is unit lower triangular, so transformed coefficients stay
//! uniformly elliptic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{Grid, GridField, MatrixField, MAX_DIM};

/// Fixed seed for the random ellipticity test directions; keeps validation
/// reports byte-reproducible.
const DIRECTION_SEED: u64 = 0x706f_726f_6c61_6221;

/// Number of random unit directions added to the axis directions in the
/// ellipticity check.
const RANDOM_DIRECTIONS: usize = 32;

/// Bottom profile of the physical domain.
#[derive(Debug, Clone)]
pub enum GammaProfile {
    /// Flat bottom; the flattening map is the identity.
    Zero,
    /// Closed-form profile over the lateral coordinates.
    Expr(Expr),
    /// Profile sampled on a lateral grid, evaluated by multilinear interpolation.
    Samples(GridField),
}

impl GammaProfile {
    pub fn eval(&self, x_prime: &[f64]) -> f64 {
        match self {
            GammaProfile::Zero => 0.0,
            GammaProfile::Expr(e) => e.eval(x_prime),
            GammaProfile::Samples(f) => f.interp(x_prime),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, GammaProfile::Zero)
    }
}

/// The computational domain: lateral ball radius, height, bottom profile,
/// and the flat-side grid.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub rho: f64,
    pub l: f64,
    dim: usize,
    pub gamma: GammaProfile,
    grid: Grid,
    /// Bound accepted for the discrete second differences of `gamma`.
    pub c11_bound: f64,
    /// Active lateral columns for dim 3 (inscribed-disc mask); full box otherwise.
    lateral_mask: Option<Vec<bool>>,
}

impl DomainSpec {
    /// Builds the flat-cylinder domain. `grid_shape` lists nodes per axis,
    /// lateral axes first, vertical last. `dim == 1` is the degenerate
    /// single-column harness (no lateral axes).
    pub fn new(
        dim: usize,
        rho: f64,
        l: f64,
        gamma: GammaProfile,
        grid_shape: &[usize],
        c11_bound: f64,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!("dimension must be 1..=3, got {dim}")));
        }
        if !(rho > 0.0) || !(l > 0.0) {
            return Err(Error::Parameter("rho and l must be positive".into()));
        }
        if grid_shape.len() != dim {
            return Err(Error::Parameter(format!(
                "grid shape has {} axes for dimension {dim}",
                grid_shape.len()
            )));
        }
        let mut min = vec![-rho; dim];
        let mut max = vec![rho; dim];
        min[dim - 1] = 0.0;
        max[dim - 1] = l;
        let grid = Grid::over_box(&min, &max, grid_shape)?;

        let lateral_mask = if dim == 3 {
            // Square bounding box with the inscribed disc active.
            let nx = grid_shape[0];
            let ny = grid_shape[1];
            let mut mask = vec![false; nx * ny];
            for i in 0..nx {
                for j in 0..ny {
                    let x = grid.coord(0, i);
                    let y = grid.coord(1, j);
                    mask[i * ny + j] = x * x + y * y < rho * rho;
                }
            }
            Some(mask)
        } else {
            None
        };

        let spec = Self { rho, l, dim, gamma, grid, c11_bound, lateral_mask };
        spec.validate_gamma()?;
        Ok(spec)
    }

    fn validate_gamma(&self) -> Result<()> {
        if self.dim == 1 || self.gamma.is_zero() {
            return Ok(());
        }
        // C^{1,1} proxy: bounded second differences on the lateral lattice.
        let mut worst = 0.0f64;
        for lat in self.lateral_indices() {
            let p = self.lateral_point(&lat);
            let g0 = self.gamma.eval(&p);
            if !g0.is_finite() {
                return Err(Error::Domain("gamma is not finite on the grid".into()));
            }
            for d in 0..self.dim - 1 {
                let h = self.grid.spacing()[d];
                let mut pp = p;
                let mut pm = p;
                pp[d] += h;
                pm[d] -= h;
                let second = (self.gamma.eval(&pp) - 2.0 * g0 + self.gamma.eval(&pm)) / (h * h);
                if !second.is_finite() {
                    return Err(Error::Domain("gamma second difference is not finite".into()));
                }
                worst = worst.max(second.abs());
            }
        }
        if worst > self.c11_bound {
            return Err(Error::Domain(format!(
                "gamma second differences reach {worst:.3e}, above the declared bound {:.3e}",
                self.c11_bound
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lateral_mask(&self) -> Option<&[bool]> {
        self.lateral_mask.as_deref()
    }

    /// Resolution scale `h` of the flat grid.
    pub fn h_grid(&self) -> f64 {
        self.grid.min_spacing()
    }

    fn lateral_indices(&self) -> Vec<[f64; MAX_DIM]> {
        // Used only for gamma validation: iterate lateral node coordinates.
        let mut out = Vec::new();
        match self.dim {
            1 => out.push([0.0; MAX_DIM]),
            2 => {
                for i in 0..self.grid.shape()[0] {
                    let mut p = [0.0; MAX_DIM];
                    p[0] = self.grid.coord(0, i);
                    out.push(p);
                }
            }
            _ => {
                for i in 0..self.grid.shape()[0] {
                    for j in 0..self.grid.shape()[1] {
                        let mut p = [0.0; MAX_DIM];
                        p[0] = self.grid.coord(0, i);
                        p[1] = self.grid.coord(1, j);
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    fn lateral_point(&self, p: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        *p
    }

    /// Discrete lateral gradient of `gamma` by central differences with the
    /// grid spacing. Exact for affine profiles.
    pub fn gamma_grad(&self, x_prime: &[f64]) -> [f64; MAX_DIM] {
        let mut g = [0.0; MAX_DIM];
        if self.dim == 1 || self.gamma.is_zero() {
            return g;
        }
        for d in 0..self.dim - 1 {
            let h = self.grid.spacing()[d];
            let mut pp = [0.0; MAX_DIM];
            let mut pm = [0.0; MAX_DIM];
            pp[..x_prime.len()].copy_from_slice(x_prime);
            pm[..x_prime.len()].copy_from_slice(x_prime);
            pp[d] += h;
            pm[d] -= h;
            g[d] = (self.gamma.eval(&pp[..self.dim - 1]) - self.gamma.eval(&pm[..self.dim - 1]))
                / (2.0 * h);
        }
        g
    }

    fn lateral_inside(&self, x: &[f64]) -> bool {
        if self.dim == 1 {
            return true;
        }
        let r2: f64 = x[..self.dim - 1].iter().map(|v| v * v).sum();
        r2 < self.rho * self.rho
    }

    /// Membership test for the physical domain (between the bottom profile
    /// and its translate by `l`).
    pub fn contains_physical(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || !self.lateral_inside(x) {
            return false;
        }
        let g = self.gamma.eval(&x[..self.dim - 1]);
        let z = x[self.dim - 1];
        g < z && z < g + self.l
    }

    /// Membership test for the flat cylinder.
    pub fn contains_flat(&self, y: &[f64]) -> bool {
        if y.len() != self.dim || !self.lateral_inside(y) {
            return false;
        }
        let z = y[self.dim - 1];
        0.0 < z && z < self.l
    }
}

/// Flattening map: keeps the lateral coordinates and subtracts the bottom
/// profile from the vertical one. Errors outside the physical domain.
pub fn flatten_point(spec: &DomainSpec, x: &[f64]) -> Result<Vec<f64>> {
    if !spec.contains_physical(x) {
        return Err(Error::Domain(format!("point {x:?} is outside the physical domain")));
    }
    let mut y = x.to_vec();
    let d = spec.dim() - 1;
    y[d] = x[d] - spec.gamma.eval(&x[..d]);
    Ok(y)
}

/// Inverse of [`flatten_point`]. Errors outside the flat cylinder.
pub fn unflatten_point(spec: &DomainSpec, y: &[f64]) -> Result<Vec<f64>> {
    if !spec.contains_flat(y) {
        return Err(Error::Domain(format!("point {y:?} is outside the flat cylinder")));
    }
    let mut x = y.to_vec();
    let d = spec.dim() - 1;
    x[d] = y[d] + spec.gamma.eval(&y[..d]);
    Ok(x)
}

/// Conjugates physical coefficients by the flattening Jacobian.
///
/// Inputs are the physical matrix field `a` and scalar field `h` sampled at
/// the preimages of the flat grid nodes (the image of the flat grid under
/// the unflattening map is a structured grid over the physical domain).
/// Returns the transformed pair on the flat grid. The Jacobian row uses the
/// discrete gradient of `gamma`.
pub fn transform_coefficients(
    spec: &DomainSpec,
    a_physical: &MatrixField,
    h_physical: &GridField,
) -> Result<(MatrixField, GridField)> {
    let grid = spec.grid();
    if a_physical.grid != *grid || h_physical.grid != *grid {
        return Err(Error::Usage("coefficient samples must live on the flat grid lattice".into()));
    }
    a_physical.validate_finite("a")?;
    h_physical.validate_finite("h")?;
    let dim = spec.dim();
    let n2 = dim * dim;
    let mut values = vec![0.0; grid.len() * n2];
    let mut jac = [0.0f64; MAX_DIM * MAX_DIM];
    let mut tmp = [0.0f64; MAX_DIM * MAX_DIM];
    for lin in 0..grid.len() {
        let p = grid.point(lin);
        let grad = spec.gamma_grad(&p[..dim.saturating_sub(1)]);
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("gamma gradient is not finite".into()));
        }
        // Jacobian of the flattening: identity except the last row, which is
        // (-grad(gamma), 1). Unit lower triangular, hence never singular.
        jac[..n2].fill(0.0);
        for i in 0..dim {
            jac[i * dim + i] = 1.0;
        }
        for d in 0..dim - 1 {
            jac[(dim - 1) * dim + d] = -grad[d];
        }
        let a = a_physical.at(lin);
        // tmp = J * a
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += jac[i * dim + k] * a[k * dim + j];
                }
                tmp[i * dim + j] = s;
            }
        }
        // b = tmp * J^T
        let out = &mut values[lin * n2..(lin + 1) * n2];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += tmp[i * dim + k] * jac[j * dim + k];
                }
                out[i * dim + j] = s;
            }
        }
    }
    Ok((
        MatrixField { grid: grid.clone(), values },
        GridField { grid: grid.clone(), values: h_physical.values.clone() },
    ))
}

/// How a coefficient field evaluates off the grid lattice.
#[derive(Debug, Clone)]
enum CoeffEval {
    /// Multilinear interpolation of the stored grids.
    Interp,
    /// Closed-form expressions in flat coordinates (composed with the
    /// unflattening map and Jacobian when the bottom is not flat).
    Closed { a_exprs: Vec<Expr>, h_expr: Expr },
}

/// Elliptic matrix coefficient and scalar coefficient on the flat cylinder,
/// with their declared structural constants.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub a: MatrixField,
    pub h: GridField,
    /// Declared ellipticity lower bound.
    pub lambda: f64,
    /// Declared bound on the entrywise absolute sum of `a`.
    pub sigma_bound: f64,
    pub h_lower: f64,
    pub h_upper: f64,
    /// Integrability exponent, must exceed the dimension.
    pub p: f64,
    /// Hoelder exponent of `a`.
    pub alpha: f64,
    eval: CoeffEval,
    spec: DomainSpec,
}

impl CoefficientField {
    /// Builds the field from closed-form physical expressions; samples the
    /// (transformed) coefficients on the flat grid and keeps the expressions
    /// for exact point evaluation.
    #[allow(clippy::too_many_arguments)]
    pub fn from_exprs(
        spec: &DomainSpec,
        a_exprs: Vec<Expr>,
        h_expr: Expr,
        lambda: f64,
        sigma_bound: f64,
        h_lower: f64,
        h_upper: f64,
        p: f64,
        alpha: f64,
    ) -> Result<Self> {
        let dim = spec.dim();
        if a_exprs.len() != dim * dim {
            return Err(Error::Parameter(format!(
                "need {} entries for a, got {}",
                dim * dim,
                a_exprs.len()
            )));
        }
        check_constants(lambda, sigma_bound, h_lower, h_upper, p, alpha, dim)?;
        let grid = spec.grid();
        let a_phys = MatrixField::from_fn(grid, |y, m| {
            let x = physical_preimage(spec, y);
            for (k, e) in a_exprs.iter().enumerate() {
                m[k] = e.eval(&x[..dim]);
            }
        });
        let h_phys = GridField::from_fn(grid, |y| {
            let x = physical_preimage(spec, y);
            h_expr.eval(&x[..dim])
        });
        let (a, h) = transform_coefficients(spec, &a_phys, &h_phys)?;
        Ok(Self {
            a,
            h,
            lambda,
            sigma_bound,
            h_lower,
            h_upper,
            p,
            alpha,
            eval: CoeffEval::Closed { a_exprs, h_expr },
            spec: spec.clone(),
        })
    }

    /// Builds the field from grids already sampled on the flat lattice.
    #[allow(clippy::too_many_arguments)]
    pub fn from_grids(
        spec: &DomainSpec,
        a: MatrixField,
        h: GridField,
        lambda: f64,
        sigma_bound: f64,
        h_lower: f64,
        h_upper: f64,
        p: f64,
        alpha: f64,
    ) -> Result<Self> {
        if a.grid != *spec.grid() || h.grid != *spec.grid() {
            return Err(Error::Usage("coefficient grids must match the domain grid".into()));
        }
        check_constants(lambda, sigma_bound, h_lower, h_upper, p, alpha, spec.dim())?;
        a.validate_finite("a")?;
        h.validate_finite("h")?;
        Ok(Self {
            a,
            h,
            lambda,
            sigma_bound,
            h_lower,
            h_upper,
            p,
            alpha,
            eval: CoeffEval::Interp,
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.a.grid
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Coefficients at an arbitrary flat-side point.
    pub fn eval_flat(&self, y: &[f64], a_out: &mut [f64]) -> f64 {
        match &self.eval {
            CoeffEval::Interp => {
                self.a.interp(y, a_out);
                self.h.interp(y)
            }
            CoeffEval::Closed { a_exprs, h_expr } => {
                let dim = self.dim();
                let x = physical_preimage(&self.spec, y);
                if self.spec.gamma.is_zero() {
                    for (k, e) in a_exprs.iter().enumerate() {
                        a_out[k] = e.eval(&x[..dim]);
                    }
                } else {
                    let grad = self.spec.gamma_grad(&y[..dim - 1]);
                    let mut a_raw = [0.0f64; MAX_DIM * MAX_DIM];
                    for (k, e) in a_exprs.iter().enumerate() {
                        a_raw[k] = e.eval(&x[..dim]);
                    }
                    conjugate_by_flatten_jacobian(dim, &grad, &a_raw, a_out);
                }
                h_expr.eval(&x[..dim])
            }
        }
    }

    /// Coefficients at a point of the doubled cylinder: points above the top
    /// plane read the even reflection across it.
    pub fn eval_mirrored(&self, y: &[f64], a_out: &mut [f64]) -> f64 {
        let dim = self.dim();
        let l = self.spec.l;
        let mut q = [0.0f64; MAX_DIM];
        q[..dim].copy_from_slice(&y[..dim]);
        if q[dim - 1] > l {
            q[dim - 1] = 2.0 * l - q[dim - 1];
        }
        self.eval_flat(&q[..dim], a_out)
    }
}

fn check_constants(
    lambda: f64,
    sigma_bound: f64,
    h_lower: f64,
    h_upper: f64,
    p: f64,
    alpha: f64,
    dim: usize,
) -> Result<()> {
    if !(lambda > 0.0 && sigma_bound > 0.0 && h_lower > 0.0 && h_upper >= h_lower) {
        return Err(Error::Parameter(
            "lambda, Lambda, h_lower must be positive and h_upper >= h_lower".into(),
        ));
    }
    if !(p > dim as f64) {
        return Err(Error::Parameter(format!("p must exceed the dimension {dim}, got {p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter("alpha must lie in (0,1)".into()));
    }
    Ok(())
}

fn physical_preimage(spec: &DomainSpec, y: &[f64]) -> [f64; MAX_DIM] {
    let dim = spec.dim();
    let mut x = [0.0f64; MAX_DIM];
    x[..dim].copy_from_slice(&y[..dim]);
    if !spec.gamma.is_zero() {
        x[dim - 1] += spec.gamma.eval(&y[..dim - 1]);
    }
    x
}

fn conjugate_by_flatten_jacobian(dim: usize, grad: &[f64], a: &[f64], out: &mut [f64]) {
    let mut jac = [0.0f64; MAX_DIM * MAX_DIM];
    let mut tmp = [0.0f64; MAX_DIM * MAX_DIM];
    for i in 0..dim {
        jac[i * dim + i] = 1.0;
    }
    for d in 0..dim - 1 {
        jac[(dim - 1) * dim + d] = -grad[d];
    }
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += jac[i * dim + k] * a[k * dim + j];
            }
            tmp[i * dim + j] = s;
        }
    }
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += tmp[i * dim + k] * jac[j * dim + k];
            }
            out[i * dim + j] = s;
        }
    }
}

/// One checked assumption in a validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// Linear node index witnessing a failure.
    pub witness_node: Option<usize>,
    pub witness_point: Option<Vec<f64>>,
    pub detail: String,
}

/// Constants actually achieved on the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatedConstants {
    /// Smallest sampled Rayleigh quotient of `a` over unit directions.
    pub lambda: f64,
    /// Largest entrywise absolute sum of `a`.
    pub sigma: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Largest sampled Hoelder quotient of `a`.
    pub holder_quotient: f64,
    /// Smallest discrete vertical derivative of `h`.
    pub h_vertical_min: f64,
    /// Discrete p-norm of the vertical derivative of `h`.
    pub h_vertical_p_norm: f64,
}

/// Structural-assumption validation outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    pub estimated: EstimatedConstants,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Checks the declared bounds nodewise and estimates the constants actually
/// achieved. Failures are report entries, never errors; the function is pure.
pub fn validate_assumptions(cf: &CoefficientField, tol_mono: f64) -> ValidationReport {
    let grid = cf.grid();
    let dim = grid.dim();
    let n = grid.len();
    let mut checks = Vec::new();

    // Entrywise absolute sum against the declared upper bound.
    let mut sigma_max = f64::NEG_INFINITY;
    let mut sigma_witness = None;
    for lin in 0..n {
        let s: f64 = cf.a.at(lin).iter().map(|v| v.abs()).sum();
        if s > sigma_max {
            sigma_max = s;
            if s > cf.sigma_bound * (1.0 + 1e-12) {
                sigma_witness = Some(lin);
            }
        }
    }
    push_check(
        &mut checks,
        grid,
        "a-sum-bound",
        sigma_max <= cf.sigma_bound * (1.0 + 1e-12),
        sigma_witness,
        format!("max sum |a_ij| = {sigma_max:.6e}, declared bound {:.6e}", cf.sigma_bound),
    );

    // Ellipticity over a fixed mesh of unit directions: both signs of the
    // axis vectors plus seeded random directions.
    let dirs = direction_mesh(dim);
    let mut lambda_min = f64::INFINITY;
    let mut lambda_witness = None;
    for lin in 0..n {
        let a = cf.a.at(lin);
        for d in &dirs {
            let mut q = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    q += a[i * dim + j] * d[i] * d[j];
                }
            }
            if q < lambda_min {
                lambda_min = q;
                if q < cf.lambda * (1.0 - 1e-12) {
                    lambda_witness = Some(lin);
                }
            }
        }
    }
    push_check(
        &mut checks,
        grid,
        "a-ellipticity",
        lambda_min >= cf.lambda * (1.0 - 1e-12),
        lambda_witness,
        format!("min sampled quadratic form = {lambda_min:.6e}, declared lambda {:.6e}", cf.lambda),
    );

    // Scalar coefficient bounds.
    let mut h_min = f64::INFINITY;
    let mut h_max = f64::NEG_INFINITY;
    let mut h_witness = None;
    for (lin, &v) in cf.h.values.iter().enumerate() {
        if v < h_min {
            h_min = v;
        }
        if v > h_max {
            h_max = v;
        }
        let slop = 1e-12 * cf.h_upper.abs().max(1.0);
        if (v < cf.h_lower - slop || v > cf.h_upper + slop) && h_witness.is_none() {
            h_witness = Some(lin);
        }
    }
    push_check(
        &mut checks,
        grid,
        "h-bounds",
        h_witness.is_none(),
        h_witness,
        format!(
            "h in [{h_min:.6e}, {h_max:.6e}], declared [{:.6e}, {:.6e}]",
            cf.h_lower, cf.h_upper
        ),
    );

    // Vertical monotonicity of h: discrete derivative at interior nodes.
    let vert = grid.vertical_axis();
    let strides = grid.strides();
    let hz = grid.spacing()[vert];
    let mut mono_min = f64::INFINITY;
    let mut mono_witness = None;
    let mut p_norm_acc = 0.0f64;
    let cell_volume: f64 = grid.spacing().iter().product();
    for lin in 0..n {
        let idx = grid.multi(lin);
        if idx[vert] == 0 || idx[vert] + 1 == grid.shape()[vert] {
            continue;
        }
        let dz = (cf.h.values[lin + strides[vert]] - cf.h.values[lin - strides[vert]]) / (2.0 * hz);
        if dz < mono_min {
            mono_min = dz;
            if dz < -tol_mono {
                mono_witness = Some(lin);
            }
        }
        p_norm_acc += dz.abs().powf(cf.p) * cell_volume;
    }
    push_check(
        &mut checks,
        grid,
        "h-vertical-monotonicity",
        mono_witness.is_none(),
        mono_witness,
        format!("min discrete dh/dx_n = {mono_min:.6e}, tolerance -{tol_mono:.1e}"),
    );

    let p_norm = p_norm_acc.powf(1.0 / cf.p);
    push_check(
        &mut checks,
        grid,
        "h-vertical-integrability",
        p_norm.is_finite(),
        None,
        format!("discrete p-norm of dh/dx_n = {p_norm:.6e} (p = {})", cf.p),
    );

    // Hoelder quotient of a over adjacent node pairs: an estimate, failing
    // only on non-finite values.
    let mut holder = 0.0f64;
    for lin in 0..n {
        let idx = grid.multi(lin);
        for d in 0..dim {
            if idx[d] + 1 >= grid.shape()[d] {
                continue;
            }
            let other = lin + strides[d];
            let dist = grid.spacing()[d];
            let mut diff = 0.0f64;
            for (u, v) in cf.a.at(lin).iter().zip(cf.a.at(other)) {
                diff = diff.max((u - v).abs());
            }
            holder = holder.max(diff / dist.powf(cf.alpha));
        }
    }
    push_check(
        &mut checks,
        grid,
        "a-holder-continuity",
        holder.is_finite(),
        None,
        format!("max adjacent Hoelder quotient = {holder:.6e} (alpha = {})", cf.alpha),
    );

    ValidationReport {
        checks,
        estimated: EstimatedConstants {
            lambda: lambda_min,
            sigma: sigma_max,
            h_min,
            h_max,
            holder_quotient: holder,
            h_vertical_min: if mono_min.is_finite() { mono_min } else { 0.0 },
            h_vertical_p_norm: p_norm,
        },
    }
}

fn push_check(
    checks: &mut Vec<AssumptionCheck>,
    grid: &Grid,
    name: &str,
    passed: bool,
    witness: Option<usize>,
    detail: String,
) {
    let witness_node = if passed { None } else { witness };
    let witness_point = witness_node.map(|lin| grid.point(lin)[..grid.dim()].to_vec());
    checks.push(AssumptionCheck {
        name: name.to_string(),
        passed,
        witness_node,
        witness_point,
        detail,
    });
}

fn direction_mesh(dim: usize) -> Vec<[f64; MAX_DIM]> {
    let mut dirs = Vec::new();
    for d in 0..dim {
        let mut e = [0.0; MAX_DIM];
        e[d] = 1.0;
        dirs.push(e);
        e[d] = -1.0;
        dirs.push(e);
    }
    if dim >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
        let mut added = 0;
        while added < RANDOM_DIRECTIONS {
            let mut v = [0.0f64; MAX_DIM];
            let mut norm2 = 0.0;
            for item in v.iter_mut().take(dim) {
                *item = rng.gen_range(-1.0..1.0);
                norm2 += *item * *item;
            }
            if norm2 < 1e-4 || norm2 > 1.0 {
                continue;
            }
            let norm = norm2.sqrt();
            for item in v.iter_mut().take(dim) {
                *item /= norm;
            }
            dirs.push(v);
            added += 1;
        }
    }
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_2d(gamma: GammaProfile) -> DomainSpec {
        DomainSpec::new(2, 1.0, 1.0, gamma, &[17, 17], 100.0).unwrap()
    }

    #[test]
    fn flatten_is_identity_for_flat_bottom() {
        let spec = spec_2d(GammaProfile::Zero);
        let y = flatten_point(&spec, &[0.3, 0.7]).unwrap();
        assert_eq!(y, vec![0.3, 0.7]);
    }

    #[test]
    fn flatten_subtracts_the_profile() {
        let spec = DomainSpec::new(
            2,
            1.0,
            1.0,
            GammaProfile::Expr(Expr::parse("x1").unwrap()),
            &[17, 17],
            100.0,
        )
        .unwrap();
        let y = flatten_point(&spec, &[0.5, 1.0]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15);
        assert!((y[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn flatten_rejects_outside_points() {
        let spec = spec_2d(GammaProfile::Zero);
        assert!(flatten_point(&spec, &[0.0, 1.5]).is_err());
        assert!(flatten_point(&spec, &[2.0, 0.5]).is_err());
    }

    #[test]
    fn flatten_unflatten_roundtrip() {
        use rand::Rng;
        let spec = DomainSpec::new(
            2,
            1.0,
            1.0,
            GammaProfile::Expr(Expr::parse("0.2*sin(3*x1)").unwrap()),
            &[33, 33],
            100.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let xp = rng.gen_range(-0.9..0.9);
            let g = spec.gamma.eval(&[xp]);
            let z = g + rng.gen_range(0.05..0.95);
            let x = vec![xp, z];
            let y = flatten_point(&spec, &x).unwrap();
            let back = unflatten_point(&spec, &y).unwrap();
            assert!((back[0] - x[0]).abs() < 1e-12);
            assert!((back[1] - x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_identity_when_bottom_is_flat() {
        let spec = spec_2d(GammaProfile::Zero);
        let a = MatrixField::from_fn(spec.grid(), |p, m| {
            m[0] = 2.0 + p[0];
            m[1] = 0.1;
            m[2] = 0.1;
            m[3] = 3.0;
        });
        let h = GridField::constant(spec.grid(), 1.0);
        let (b, k) = transform_coefficients(&spec, &a, &h).unwrap();
        assert_eq!(b.values, a.values);
        assert_eq!(k.values, h.values);
    }

    #[test]
    fn transform_matches_hand_computation_for_tilted_bottom() {
        let c = 0.7;
        let spec = DomainSpec::new(
            2,
            1.0,
            1.0,
            GammaProfile::Expr(Expr::parse("0.7*x1").unwrap()),
            &[17, 17],
            100.0,
        )
        .unwrap();
        let a = MatrixField::identity(spec.grid());
        let h = GridField::constant(spec.grid(), 1.0);
        let (b, _) = transform_coefficients(&spec, &a, &h).unwrap();
        for lin in 0..spec.grid().len() {
            let m = b.at(lin);
            assert!((m[0] - 1.0).abs() < 1e-12);
            assert!((m[1] + c).abs() < 1e-12);
            assert!((m[2] + c).abs() < 1e-12);
            assert!((m[3] - (1.0 + c * c)).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_preserves_ellipticity() {
        // For the unit-slope tilt the exact smallest eigenvalue is (3 - sqrt 5)/2.
        let spec = DomainSpec::new(
            2,
            1.0,
            1.0,
            GammaProfile::Expr(Expr::parse("x1").unwrap()),
            &[17, 17],
            100.0,
        )
        .unwrap();
        let a = MatrixField::identity(spec.grid());
        let h = GridField::constant(spec.grid(), 1.0);
        let (b, _) = transform_coefficients(&spec, &a, &h).unwrap();
        let m = b.at(0);
        let tr = m[0] + m[3];
        let det = m[0] * m[3] - m[1] * m[2];
        let min_eig = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
        let expected = (3.0 - 5.0f64.sqrt()) / 2.0;
        assert!((min_eig - expected).abs() < 1e-12);
        // Sampled quadratic forms stay positive.
        for d in direction_mesh(2) {
            let q = m[0] * d[0] * d[0] + (m[1] + m[2]) * d[0] * d[1] + m[3] * d[1] * d[1];
            assert!(q > 0.0);
        }
    }

    #[test]
    fn validation_passes_for_identity_field() {
        let spec = spec_2d(GammaProfile::Zero);
        let cf = CoefficientField::from_exprs(
            &spec,
            vec![
                Expr::parse("1").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("1").unwrap(),
            ],
            Expr::parse("1").unwrap(),
            1.0,
            2.0,
            1.0,
            1.0,
            4.0,
            0.5,
        )
        .unwrap();
        let report = validate_assumptions(&cf, 1e-12);
        assert!(report.passed(), "{report:?}");
        assert!((report.estimated.lambda - 1.0).abs() < 1e-12);
        assert!((report.estimated.sigma - 2.0).abs() < 1e-12);
        assert!((report.estimated.h_min - 1.0).abs() < 1e-15);
        assert!((report.estimated.h_max - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation_flags_decreasing_h() {
        let spec = spec_2d(GammaProfile::Zero);
        let cf = CoefficientField::from_exprs(
            &spec,
            vec![
                Expr::parse("1").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("1").unwrap(),
            ],
            Expr::parse("1 - x2").unwrap(),
            1.0,
            2.0,
            1e-6,
            1.0,
            4.0,
            0.5,
        )
        .unwrap();
        let report = validate_assumptions(&cf, 1e-12);
        let mono = report
            .checks
            .iter()
            .find(|c| c.name == "h-vertical-monotonicity")
            .unwrap();
        assert!(!mono.passed);
        assert!(mono.witness_node.is_some());
    }

    #[test]
    fn validation_estimates_diagonal_constants() {
        let spec = spec_2d(GammaProfile::Zero);
        let cf = CoefficientField::from_exprs(
            &spec,
            vec![
                Expr::parse("2").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("3").unwrap(),
            ],
            Expr::parse("1").unwrap(),
            2.0,
            5.0,
            1.0,
            1.0,
            4.0,
            0.5,
        )
        .unwrap();
        let report = validate_assumptions(&cf, 1e-12);
        assert!(report.passed());
        assert!((report.estimated.lambda - 2.0).abs() < 1e-12);
        assert!((report.estimated.sigma - 5.0).abs() < 1e-12);
    }

    #[test]
    fn validation_is_idempotent() {
        let spec = spec_2d(GammaProfile::Zero);
        let cf = CoefficientField::from_exprs(
            &spec,
            vec![
                Expr::parse("1").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("0").unwrap(),
                Expr::parse("1").unwrap(),
            ],
            Expr::parse("1").unwrap(),
            1.0,
            2.0,
            1.0,
            1.0,
            4.0,
            0.5,
        )
        .unwrap();
        let r1 = validate_assumptions(&cf, 1e-12);
        let r2 = validate_assumptions(&cf, 1e-12);
        assert_eq!(format!("{r1:?}"), format!("{r2:?}"));
    }
}
