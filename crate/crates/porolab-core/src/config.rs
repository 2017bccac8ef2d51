//! Run configuration: a flat key-value text format with `[section]` headers,
//! expression-string fields, and optional CSV-backed grids.
//!
//! Unknown sections or keys are errors. Coefficient entries, the bottom
//! profile and the boundary data are either expression strings over
//! `x1..xn` (physical coordinates) or `csv:<path>` references to row-major
//! grids with a leading shape line. Paths resolve relative to the config
//! file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::domain::{CoefficientField, DomainSpec, GammaProfile};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{Grid, GridField, MatrixField};
use crate::solver::{BoundaryData, SolverParams};

/// Parsed, validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    base_dir: PathBuf,

    pub dim: usize,
    pub rho: f64,
    pub l: f64,
    pub gamma_src: String,
    pub grid_shape: Vec<usize>,
    pub c11_bound: f64,

    pub a_src: Vec<String>,
    pub h_src: String,
    pub lambda: f64,
    pub sigma_bound: f64,
    pub h_lower: f64,
    pub h_upper: f64,
    pub p: f64,
    pub alpha: f64,
    pub tol_mono: f64,

    pub g_src: String,

    pub solver: SolverOverrides,

    pub barrier_x0: Option<Vec<f64>>,
    pub barrier_epsilons: Vec<f64>,
    pub flux_radius_fractions: Vec<f64>,
    pub nodes_per_r: usize,

    pub porosity_radius_fractions: Vec<f64>,
    pub fb_sample_stride: usize,
    pub search_resolution: u32,

    pub dimension_scales: Vec<f64>,

    pub output_dir: String,
}

/// Optional overrides of the grid-derived solver defaults.
#[derive(Debug, Clone, Default)]
pub struct SolverOverrides {
    pub tol_u: Option<f64>,
    pub tol_chi: Option<f64>,
    pub tol_comp: Option<f64>,
    pub omega: Option<f64>,
    pub u_threshold: Option<f64>,
    pub heaviside_width: Option<f64>,
    pub max_iterations: Option<usize>,
    pub tol_lin: Option<f64>,
    pub sor_omega: Option<f64>,
}

struct Sections {
    map: BTreeMap<String, BTreeMap<String, String>>,
}

impl Sections {
    fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Config(format!("line {}: malformed section header", lineno + 1)));
                }
                current = line[1..line.len() - 1].trim().to_string();
                map.entry(current.clone()).or_default();
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", lineno + 1)));
            };
            if current.is_empty() {
                return Err(Error::Config(format!("line {}: key outside any section", lineno + 1)));
            }
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            let section = map.entry(current.clone()).or_default();
            if section.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { map })
    }

    fn section(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.map.get(name)
    }
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("[{section}] {key}: expected a number, got `{v}`")))
}

fn parse_usize(section: &str, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Config(format!("[{section}] {key}: expected an integer, got `{v}`")))
}

fn parse_f64_list(section: &str, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|t| parse_f64(section, key, t.trim()))
        .collect()
}

fn parse_usize_list(section: &str, key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|t| parse_usize(section, key, t.trim()))
        .collect()
}

struct SectionReader<'a> {
    name: &'a str,
    entries: BTreeMap<String, String>,
}

impl<'a> SectionReader<'a> {
    fn new(sections: &Sections, name: &'a str) -> Self {
        Self {
            name,
            entries: sections.section(name).cloned().unwrap_or_default(),
        }
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.entries
            .remove(key)
            .ok_or_else(|| Error::Config(format!("[{}] missing required key `{key}`", self.name)))
    }

    fn optional(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().next() {
            return Err(Error::Config(format!("[{}] unknown key `{key}`", self.name)));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".into());
        Self::from_str_named(&text, name, base_dir)
    }

    pub fn from_str_named(text: &str, name: String, base_dir: PathBuf) -> Result<Self> {
        let sections = Sections::parse(text)?;
        for key in sections.map.keys() {
            match key.as_str() {
                "domain" | "coefficients" | "boundary" | "solver" | "barrier" | "porosity"
                | "dimension" | "output" => {}
                other => return Err(Error::Config(format!("unknown section `[{other}]`"))),
            }
        }

        let mut dom = SectionReader::new(&sections, "domain");
        let dim = parse_usize("domain", "n", &dom.required("n")?)?;
        let rho = parse_f64("domain", "rho", &dom.required("rho")?)?;
        let l = parse_f64("domain", "l", &dom.required("l")?)?;
        let gamma_src = dom.optional("gamma").unwrap_or_else(|| "0".into());
        let grid_shape = parse_usize_list("domain", "grid", &dom.required("grid")?)?;
        let c11_bound = match dom.optional("gamma_c11_bound") {
            Some(v) => parse_f64("domain", "gamma_c11_bound", &v)?,
            None => 1e6,
        };
        dom.finish()?;

        let mut coeff = SectionReader::new(&sections, "coefficients");
        let mut a_src = Vec::with_capacity(dim * dim);
        for i in 1..=dim {
            for j in 1..=dim {
                let key = format!("a{i}{j}");
                match coeff.optional(&key) {
                    Some(v) => a_src.push(v),
                    None if i == j => {
                        return Err(Error::Config(format!(
                            "[coefficients] missing diagonal entry `{key}`"
                        )))
                    }
                    None => a_src.push("0".into()),
                }
            }
        }
        let h_src = coeff.required("h")?;
        let lambda = parse_f64("coefficients", "lambda", &coeff.required("lambda")?)?;
        let sigma_bound = parse_f64("coefficients", "Lambda", &coeff.required("Lambda")?)?;
        let h_lower = parse_f64("coefficients", "h_lower", &coeff.required("h_lower")?)?;
        let h_upper = parse_f64("coefficients", "h_upper", &coeff.required("h_upper")?)?;
        let p = parse_f64("coefficients", "p", &coeff.required("p")?)?;
        let alpha = parse_f64("coefficients", "alpha", &coeff.required("alpha")?)?;
        let tol_mono = match coeff.optional("tol_mono") {
            Some(v) => parse_f64("coefficients", "tol_mono", &v)?,
            None => 1e-12,
        };
        coeff.finish()?;
        if !(p > dim as f64) {
            return Err(Error::Config(format!(
                "[coefficients] p must exceed the dimension n = {dim}, got {p}"
            )));
        }

        let mut boundary = SectionReader::new(&sections, "boundary");
        let g_src = boundary.required("g")?;
        boundary.finish()?;

        let mut solver = SectionReader::new(&sections, "solver");
        let overrides = SolverOverrides {
            tol_u: solver.optional("tol_u").map(|v| parse_f64("solver", "tol_u", &v)).transpose()?,
            tol_chi: solver
                .optional("tol_chi")
                .map(|v| parse_f64("solver", "tol_chi", &v))
                .transpose()?,
            tol_comp: solver
                .optional("tol_comp")
                .map(|v| parse_f64("solver", "tol_comp", &v))
                .transpose()?,
            omega: solver.optional("omega").map(|v| parse_f64("solver", "omega", &v)).transpose()?,
            u_threshold: solver
                .optional("u_threshold")
                .map(|v| parse_f64("solver", "u_threshold", &v))
                .transpose()?,
            heaviside_width: solver
                .optional("heaviside_width")
                .map(|v| parse_f64("solver", "heaviside_width", &v))
                .transpose()?,
            max_iterations: solver
                .optional("max_iterations")
                .map(|v| parse_usize("solver", "max_iterations", &v))
                .transpose()?,
            tol_lin: solver
                .optional("tol_lin")
                .map(|v| parse_f64("solver", "tol_lin", &v))
                .transpose()?,
            sor_omega: solver
                .optional("sor_omega")
                .map(|v| parse_f64("solver", "sor_omega", &v))
                .transpose()?,
        };
        solver.finish()?;

        let mut barrier = SectionReader::new(&sections, "barrier");
        let barrier_x0 = barrier
            .optional("x0")
            .map(|v| parse_f64_list("barrier", "x0", &v))
            .transpose()?;
        let barrier_epsilons = match barrier.optional("epsilons") {
            Some(v) => parse_f64_list("barrier", "epsilons", &v)?,
            None => vec![0.25, 0.125, 0.0625, 0.03125, 0.015625],
        };
        let flux_radius_fractions = match barrier.optional("flux_radius_fractions") {
            Some(v) => parse_f64_list("barrier", "flux_radius_fractions", &v)?,
            None => vec![0.5, 0.25, 0.125],
        };
        let nodes_per_r = match barrier.optional("nodes_per_r") {
            Some(v) => parse_usize("barrier", "nodes_per_r", &v)?,
            None => 20,
        };
        barrier.finish()?;

        let mut porosity = SectionReader::new(&sections, "porosity");
        let porosity_radius_fractions = match porosity.optional("radius_fractions") {
            Some(v) => parse_f64_list("porosity", "radius_fractions", &v)?,
            None => vec![0.5, 0.25, 0.125],
        };
        let fb_sample_stride = match porosity.optional("fb_sample_stride") {
            Some(v) => parse_usize("porosity", "fb_sample_stride", &v)?,
            None => 8,
        };
        let search_resolution = match porosity.optional("search_resolution") {
            Some(v) => parse_usize("porosity", "search_resolution", &v)? as u32,
            None => 1,
        };
        porosity.finish()?;

        let mut dims = SectionReader::new(&sections, "dimension");
        let dimension_scales = match dims.optional("scales") {
            Some(v) => parse_f64_list("dimension", "scales", &v)?,
            None => vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
        };
        dims.finish()?;

        let mut output = SectionReader::new(&sections, "output");
        let output_dir = output.optional("dir").unwrap_or_else(|| "out".into());
        output.finish()?;

        let cfg = Self {
            name,
            base_dir,
            dim,
            rho,
            l,
            gamma_src,
            grid_shape,
            c11_bound,
            a_src,
            h_src,
            lambda,
            sigma_bound,
            h_lower,
            h_upper,
            p,
            alpha,
            tol_mono,
            g_src,
            solver: overrides,
            barrier_x0,
            barrier_epsilons,
            flux_radius_fractions,
            nodes_per_r,
            porosity_radius_fractions,
            fb_sample_stride,
            search_resolution,
            dimension_scales,
            output_dir,
        };
        // Fail fast on anything that cannot build.
        cfg.build_domain()?;
        Ok(cfg)
    }

    fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Builds the domain (flat grid plus bottom profile).
    pub fn build_domain(&self) -> Result<DomainSpec> {
        let gamma = if self.dim == 1 || is_literal_zero(&self.gamma_src) {
            GammaProfile::Zero
        } else if let Some(path) = self.gamma_src.strip_prefix("csv:") {
            let (shape, values) = load_csv_grid(&self.resolve(path.trim()))?;
            if shape != self.grid_shape[..self.dim - 1] {
                return Err(Error::Config(format!(
                    "gamma csv shape {shape:?} does not match the lateral grid {:?}",
                    &self.grid_shape[..self.dim - 1]
                )));
            }
            let mut min = vec![-self.rho; self.dim - 1];
            let mut max = vec![self.rho; self.dim - 1];
            if self.dim == 1 {
                min.clear();
                max.clear();
            }
            let lateral = Grid::over_box(&min, &max, &shape)?;
            GammaProfile::Samples(GridField { grid: lateral, values })
        } else {
            GammaProfile::Expr(Expr::parse(&self.gamma_src)?)
        };
        DomainSpec::new(self.dim, self.rho, self.l, gamma, &self.grid_shape, self.c11_bound)
    }

    /// Builds the (transformed) coefficient field on the flat grid.
    pub fn build_coefficients(&self, spec: &DomainSpec) -> Result<CoefficientField> {
        let any_csv = self.a_src.iter().any(|s| s.starts_with("csv:")) || self.h_src.starts_with("csv:");
        if any_csv {
            // Grid-backed route: all entries must be CSV or constants.
            let grid = spec.grid();
            let dim = self.dim;
            let mut a_fields: Vec<GridField> = Vec::with_capacity(dim * dim);
            for src in &self.a_src {
                a_fields.push(self.load_scalar_source(src, grid)?);
            }
            let h_field = self.load_scalar_source(&self.h_src, grid)?;
            let a_phys = MatrixField::from_fn(grid, |_, _| {});
            let mut a_values = a_phys.values;
            for lin in 0..grid.len() {
                for k in 0..dim * dim {
                    a_values[lin * dim * dim + k] = a_fields[k].values[lin];
                }
            }
            let a_phys = MatrixField { grid: grid.clone(), values: a_values };
            let (a, h) = crate::domain::transform_coefficients(spec, &a_phys, &h_field)?;
            CoefficientField::from_grids(
                spec,
                a,
                h,
                self.lambda,
                self.sigma_bound,
                self.h_lower,
                self.h_upper,
                self.p,
                self.alpha,
            )
        } else {
            let a_exprs = self
                .a_src
                .iter()
                .map(|s| Expr::parse(s))
                .collect::<Result<Vec<_>>>()?;
            let h_expr = Expr::parse(&self.h_src)?;
            CoefficientField::from_exprs(
                spec,
                a_exprs,
                h_expr,
                self.lambda,
                self.sigma_bound,
                self.h_lower,
                self.h_upper,
                self.p,
                self.alpha,
            )
        }
    }

    fn load_scalar_source(&self, src: &str, grid: &Grid) -> Result<GridField> {
        if let Some(path) = src.strip_prefix("csv:") {
            let (shape, values) = load_csv_grid(&self.resolve(path.trim()))?;
            if shape != grid.shape() {
                return Err(Error::Config(format!(
                    "csv grid shape {shape:?} does not match the domain grid {:?}",
                    grid.shape()
                )));
            }
            Ok(GridField { grid: grid.clone(), values })
        } else {
            let expr = Expr::parse(src)?;
            // Sampled at physical preimages of the flat nodes.
            let spec_dim = grid.dim();
            Ok(GridField::from_fn(grid, |y| {
                let mut x = [0.0; crate::grid::MAX_DIM];
                x[..spec_dim].copy_from_slice(y);
                expr.eval(&x[..spec_dim])
            }))
        }
    }

    /// Builds the boundary data: the data expression is evaluated at the
    /// physical preimage of each flat boundary node.
    pub fn build_boundary(&self, spec: &DomainSpec) -> Result<BoundaryData> {
        if let Some(path) = self.g_src.strip_prefix("csv:") {
            let (shape, values) = load_csv_grid(&self.resolve(path.trim()))?;
            if shape != spec.grid().shape() {
                return Err(Error::Config("boundary csv shape mismatch".into()));
            }
            let field = GridField { grid: spec.grid().clone(), values };
            return BoundaryData::from_fn(spec.grid(), |p| field.interp(p));
        }
        let g = Expr::parse(&self.g_src)?;
        let dim = self.dim;
        let gamma = spec.gamma.clone();
        BoundaryData::from_fn(spec.grid(), move |y| {
            let mut x = [0.0; crate::grid::MAX_DIM];
            x[..dim].copy_from_slice(y);
            if !gamma.is_zero() {
                x[dim - 1] += gamma.eval(&y[..dim - 1]);
            }
            g.eval(&x[..dim])
        })
    }

    /// Solver parameters: grid-derived defaults with config overrides.
    pub fn solver_params(&self, grid: &Grid) -> SolverParams {
        let mut p = SolverParams::for_grid(grid);
        let o = &self.solver;
        if let Some(v) = o.tol_u {
            p.tol_u = v;
        }
        if let Some(v) = o.tol_chi {
            p.tol_chi = v;
        }
        if let Some(v) = o.tol_comp {
            p.tol_comp = v;
        }
        if let Some(v) = o.omega {
            p.omega = v;
        }
        if let Some(v) = o.u_threshold {
            p.u_threshold = v;
        }
        if let Some(v) = o.heaviside_width {
            p.heaviside_width = v;
        }
        if let Some(v) = o.max_iterations {
            p.max_iterations = v;
        }
        if let Some(v) = o.tol_lin {
            p.tol_lin = v;
        }
        if let Some(v) = o.sor_omega {
            p.sor_omega = v;
        }
        p
    }
}

fn is_literal_zero(src: &str) -> bool {
    matches!(src.trim(), "0" | "0.0" | "0.")
}

/// Loads a row-major CSV grid: a leading shape line (comma-separated node
/// counts) followed by the values, any number per line.
pub fn load_csv_grid(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty csv", path.display())))?;
    let shape: Vec<usize> = header
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{}: bad shape entry `{t}`", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let expected: usize = shape.iter().product();
    let mut values = Vec::with_capacity(expected);
    for line in lines {
        for tok in line.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            values.push(tok.parse::<f64>().map_err(|_| {
                Error::Config(format!("{}: bad value `{tok}`", path.display()))
            })?);
        }
    }
    if values.len() != expected {
        return Err(Error::Config(format!(
            "{}: expected {expected} values for shape {shape:?}, got {}",
            path.display(),
            values.len()
        )));
    }
    Ok((shape, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAM: &str = r#"
# standard two-reservoir configuration
[domain]
n = 2
rho = 0.5
l = 1.0
gamma = 0
grid = 65, 65

[coefficients]
a11 = 1
a22 = 1
h = 1
lambda = 1.0
Lambda = 2.0
h_lower = 1.0
h_upper = 1.0
p = 12.0
alpha = 0.5

[boundary]
g = max(0, 0.55 - 0.5*x1 - x2)

[output]
dir = out
"#;

    #[test]
    fn parses_and_builds_the_dam_config() {
        let cfg =
            RunConfig::from_str_named(DAM, "dam".into(), PathBuf::from(".")).unwrap();
        let spec = cfg.build_domain().unwrap();
        assert_eq!(spec.dim(), 2);
        let cf = cfg.build_coefficients(&spec).unwrap();
        assert_eq!(cf.p, 12.0);
        let bc = cfg.build_boundary(&spec).unwrap();
        // Left wall at height 0: level 0.8.
        let grid = spec.grid();
        let lin = grid.linear(&[0, 0]);
        assert!((bc.values.values[lin] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let bad = DAM.replace("[output]", "[outputs]");
        assert!(RunConfig::from_str_named(&bad, "x".into(), PathBuf::from(".")).is_err());
        let bad = DAM.replace("dir = out", "dirr = out");
        assert!(RunConfig::from_str_named(&bad, "x".into(), PathBuf::from(".")).is_err());
    }

    #[test]
    fn rejects_p_not_above_dimension() {
        let bad = DAM.replace("p = 12.0", "p = 2.0");
        assert!(RunConfig::from_str_named(&bad, "x".into(), PathBuf::from(".")).is_err());
    }

    #[test]
    fn csv_grid_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        std::fs::write(&path, "2, 3\n1, 2, 3\n4, 5, 6\n").unwrap();
        let (shape, values) = load_csv_grid(&path).unwrap();
        assert_eq!(shape, vec![2, 3]);
        assert_eq!(values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn csv_backed_coefficients() {
        let dir = tempfile::tempdir().unwrap();
        // 5x5 constant fields.
        let mut body = String::from("5, 5\n");
        for _ in 0..25 {
            body.push_str("2\n");
        }
        std::fs::write(dir.path().join("a11.csv"), &body).unwrap();
        let cfg_text = DAM
            .replace("grid = 65, 65", "grid = 5, 5")
            .replace("a11 = 1", "a11 = csv:a11.csv")
            .replace("lambda = 1.0", "lambda = 1.0");
        let cfg = RunConfig::from_str_named(&cfg_text, "csv".into(), dir.path().to_path_buf())
            .unwrap();
        let spec = cfg.build_domain().unwrap();
        let cf = cfg.build_coefficients(&spec).unwrap();
        assert!((cf.a.entry(0, 0, 0) - 2.0).abs() < 1e-15);
        assert!((cf.a.entry(0, 1, 1) - 1.0).abs() < 1e-15);
    }
}
