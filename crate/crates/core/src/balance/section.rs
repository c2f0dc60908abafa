use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::{BalanceError, BalanceSystem};
use crate::symex::{Coord, Expr};

/// Ghost handling at the ends of an axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// Upper end excluded, indices wrap.
    #[default]
    Periodic,
    /// Both ends included, stencils shift inwards near the edges.
    OneSided,
}

/// Tensor grid over the base, one axis per base coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points: Vec<usize>,
    boundary: Boundary,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points: Vec<usize>, boundary: Boundary) -> Result<Grid, BalanceError> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != points.len() || points.iter().any(|&n| n < 8) {
            return Err(BalanceError::GridTooSmall);
        }
        Ok(Grid { lower, upper, points, boundary })
    }

    pub fn dims(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self, a: usize) -> f64 {
        let span = self.upper[a] - self.lower[a];
        match self.boundary {
            Boundary::Periodic => span / self.points[a] as f64,
            Boundary::OneSided => span / (self.points[a] - 1) as f64,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.step(a)).product()
    }

    fn stride(&self, a: usize) -> usize {
        self.points[a + 1..].iter().product()
    }

    fn index_along(&self, flat: usize, a: usize) -> usize {
        (flat / self.stride(a)) % self.points[a]
    }

    /// Coordinates of a grid point, last axis fastest.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        (0..self.dims()).map(|a| self.lower[a] + self.index_along(flat, a) as f64 * self.step(a)).collect()
    }

    /// Every other point along each axis, when that still leaves 8 per axis.
    fn coarsened(&self) -> Option<Grid> {
        let mut upper = self.upper.clone();
        let mut points = Vec::new();
        for a in 0..self.dims() {
            let n = self.points[a];
            let coarse = match self.boundary {
                Boundary::Periodic if n % 2 == 0 => n / 2,
                Boundary::Periodic => return None,
                Boundary::OneSided => {
                    let last = (n - 1) / 2 * 2;
                    upper[a] = self.lower[a] + last as f64 * self.step(a);
                    last / 2 + 1
                }
            };
            points.push(coarse);
        }
        Grid::new(self.lower.clone(), upper, points, self.boundary).ok()
    }

    fn coarse_to_fine(&self, coarse: &Grid, flat: usize) -> usize {
        (0..self.dims()).map(|a| 2 * coarse.index_along(flat, a) * self.stride(a)).sum()
    }
}

/// Field values on a grid, `values[i][flat]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSection {
    grid: Grid,
    values: Vec<Vec<f64>>,
}

fn point_map(grid: &Grid, flat: usize) -> BTreeMap<Coord, f64> {
    grid.point(flat).into_iter().enumerate().map(|(a, v)| (Coord::base(a), v)).collect()
}

impl GridSection {
    pub fn new(grid: Grid, values: Vec<Vec<f64>>) -> Result<GridSection, BalanceError> {
        if let Some(v) = values.iter().find(|v| v.len() != grid.len()) {
            return Err(BalanceError::SampleShape { got: v.len(), expected: grid.len() });
        }
        Ok(GridSection { grid, values })
    }

    /// Sample closed-form field expressions at the grid points.
    pub fn sample(grid: Grid, section: &[Expr], params: &BTreeMap<String, f64>) -> Result<GridSection, BalanceError> {
        let mut values = alloc::vec![Vec::with_capacity(grid.len()); section.len()];
        for flat in 0..grid.len() {
            let p = point_map(&grid, flat);
            for (vals, s) in values.iter_mut().zip(section) {
                vals.push(s.eval(&p, params)?);
            }
        }
        GridSection::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn coarsened(&self) -> Option<GridSection> {
        let coarse = self.grid.coarsened()?;
        let values = self
            .values
            .iter()
            .map(|v| (0..coarse.len()).map(|f| v[self.grid.coarse_to_fine(&coarse, f)]).collect())
            .collect();
        Some(GridSection { grid: coarse, values })
    }

    /// Base coordinates, field values and finite-difference first and second
    /// jets at every grid point.
    pub fn jet_arrays(&self, order: usize) -> Result<BTreeMap<Coord, Vec<f64>>, BalanceError> {
        if order != 2 && order != 4 {
            return Err(BalanceError::StencilOrder);
        }
        let g = &self.grid;
        let mut out = BTreeMap::new();
        for a in 0..g.dims() {
            out.insert(Coord::base(a), (0..g.len()).map(|f| g.point(f)[a]).collect());
        }
        for (i, v) in self.values.iter().enumerate() {
            out.insert(Coord::fiber(i), v.clone());
            let firsts: Vec<Vec<f64>> = (0..g.dims()).map(|a| derivative(g, v, a, 1, order)).collect();
            for a in 0..g.dims() {
                out.insert(Coord::jet2(i, a, a), derivative(g, v, a, 2, order));
                for b in a + 1..g.dims() {
                    out.insert(Coord::jet2(i, a, b), derivative(g, &firsts[a], b, 1, order));
                }
            }
            for (a, d) in firsts.into_iter().enumerate() {
                out.insert(Coord::jet(i, a), d);
            }
        }
        Ok(out)
    }
}

/// Finite-difference weights for derivatives up to `m` at `x0` (Fornberg).
fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = alloc::vec![alloc::vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil (offsets, weights) for each index along an axis of length `n`.
fn stencils(n: usize, der: usize, order: usize, boundary: Boundary) -> Vec<(Vec<isize>, Vec<f64>)> {
    let r = (order / 2) as isize;
    let make = |offsets: Vec<isize>| {
        let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let w = fornberg(0.0, &xs, der).into_iter().map(|row| row[der]).collect();
        (offsets, w)
    };
    let central = make((-r..=r).collect());
    (0..n as isize)
        .map(|k| {
            if boundary == Boundary::Periodic || (k >= r && k + r < n as isize) {
                return central.clone();
            }
            let w = (order + der) as isize;
            let start = (k - w / 2).clamp(0, n as isize - w);
            make((start..start + w).map(|j| j - k).collect())
        })
        .collect()
}

fn derivative(g: &Grid, f: &[f64], a: usize, der: usize, order: usize) -> Vec<f64> {
    let n = g.points[a];
    let stride = g.stride(a);
    let scale = libm::pow(g.step(a), der as f64);
    let st = stencils(n, der, order, g.boundary);
    (0..g.len())
        .map(|flat| {
            let k = g.index_along(flat, a);
            let base = flat - k * stride;
            let (offsets, w) = &st[k];
            let sum: f64 = offsets
                .iter()
                .zip(w)
                .map(|(&o, &wt)| {
                    let j = (k as isize + o).rem_euclid(n as isize) as usize;
                    wt * f[base + j * stride]
                })
                .sum();
            sum / scale
        })
        .collect()
}

/// Evaluate expressions over base, fiber and jet coordinates at every grid point
/// of a sampled section; result indexed `[expr][flat]`.
pub fn evaluate_on_grid(
    exprs: &[Expr],
    section: &GridSection,
    order: usize,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<Vec<f64>>, BalanceError> {
    let arrays = section.jet_arrays(order)?;
    let needed: BTreeSet<Coord> = exprs.iter().flat_map(|e| e.coords()).collect();
    if let Some(c) = needed.iter().find(|c| !arrays.contains_key(c)) {
        return Err(BalanceError::Unbound(*c));
    }
    let mut out = alloc::vec![Vec::with_capacity(section.grid.len()); exprs.len()];
    let mut point = BTreeMap::new();
    for flat in 0..section.grid.len() {
        for c in &needed {
            point.insert(*c, arrays[c][flat]);
        }
        for (col, e) in out.iter_mut().zip(exprs) {
            col.push(e.eval(&point, params)?);
        }
    }
    Ok(out)
}

/// Residuals pulled back by the exact jets of a closed-form section.
pub fn pullback_residuals(sys: &BalanceSystem, section: &[Expr]) -> Result<Vec<Expr>, BalanceError> {
    let ctx = sys.context();
    let n1 = ctx.base_dim();
    if section.len() != ctx.field_count() || section.iter().any(|s| s.depends_on(&|c| !matches!(c, Coord::Base(_)))) {
        return Err(BalanceError::BadSection);
    }
    let mut b = BTreeMap::new();
    for (i, s) in section.iter().enumerate() {
        b.insert(Coord::fiber(i), s.clone());
        for a in 0..n1 {
            let da = s.diff(Coord::base(a));
            for c in a..n1 {
                b.insert(Coord::jet2(i, a, c), da.diff(Coord::base(c)));
            }
            b.insert(Coord::jet(i, a), da);
        }
    }
    Ok(sys.residuals().iter().map(|r| r.substitute(&b)).collect())
}

#[derive(Clone, Debug)]
pub enum NumericSection {
    /// Exact jets, evaluated at the points of `grid`.
    Closed { section: Vec<Expr>, grid: Grid },
    /// Finite-difference jets.
    Sampled(GridSection),
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Stencil order, 2 or 4.
    pub order: usize,
    pub params: BTreeMap<String, f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { order: 2, params: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionReport {
    pub max_abs: f64,
    /// Discrete L2 norm per equation.
    pub l2: Vec<f64>,
    /// Richardson estimate of the stencil error in the residual (sampled sections only).
    pub error_estimate: Option<f64>,
    pub points: usize,
}

fn summarize(values: &[Vec<f64>], grid: &Grid) -> (f64, Vec<f64>) {
    let cell = grid.cell_volume();
    let max = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let l2 = values.iter().map(|col| libm::sqrt(col.iter().map(|v| v * v).sum::<f64>() * cell)).collect();
    (max, l2)
}

pub fn verify_section(
    sys: &BalanceSystem,
    section: &NumericSection,
    opts: &VerifyOptions,
) -> Result<SectionReport, BalanceError> {
    if opts.order != 2 && opts.order != 4 {
        return Err(BalanceError::StencilOrder);
    }
    let n1 = sys.context().base_dim();
    match section {
        NumericSection::Closed { section, grid } => {
            if grid.dims() != n1 {
                return Err(BalanceError::GridTooSmall);
            }
            let pulled = pullback_residuals(sys, section)?;
            let mut values = alloc::vec![Vec::with_capacity(grid.len()); pulled.len()];
            for flat in 0..grid.len() {
                let p = point_map(grid, flat);
                for (col, r) in values.iter_mut().zip(&pulled) {
                    col.push(r.eval(&p, &opts.params)?);
                }
            }
            let (max_abs, l2) = summarize(&values, grid);
            Ok(SectionReport { max_abs, l2, error_estimate: None, points: grid.len() })
        }
        NumericSection::Sampled(gs) => {
            if gs.grid.dims() != n1 || gs.values.len() != sys.context().field_count() {
                return Err(BalanceError::BadSection);
            }
            let fine = evaluate_on_grid(sys.residuals(), gs, opts.order, &opts.params)?;
            let (max_abs, l2) = summarize(&fine, &gs.grid);
            let error_estimate = match gs.coarsened() {
                Some(c) => {
                    let coarse = evaluate_on_grid(sys.residuals(), &c, opts.order, &opts.params)?;
                    let factor = libm::pow(2.0, opts.order as f64) - 1.0;
                    let mut worst = 0.0f64;
                    for (cf, ff) in coarse.iter().zip(&fine) {
                        for (flat, v) in cf.iter().enumerate() {
                            worst = worst.max((ff[gs.grid.coarse_to_fine(&c.grid, flat)] - v).abs() / factor);
                        }
                    }
                    Some(worst)
                }
                None => None,
            };
            Ok(SectionReport { max_abs, l2, error_estimate, points: gs.grid.len() })
        }
    }
}
