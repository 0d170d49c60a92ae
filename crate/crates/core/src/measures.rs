//! Measures on the circle, Radon–Nikodym cocycles and Hellinger geometry.
//!
//! Measures are densities with respect to Lebesgue measure sampled on the
//! midpoint grid; integrals use the midpoint rule. For a measure `ν` with
//! density `p` and an action `g ↦ Φ_g`,
//! `ρ_g(x) = p(Φ_{g⁻¹}x) · DΦ_{g⁻¹}(x) / p(x)`, so that
//! `∫ f(Φ_{g⁻¹}x) ρ_g(x) dν(x) = ∫ f dν` and
//! `ρ_{gh}(x) = ρ_g(x) · ρ_h(Φ_{g⁻¹}x)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::circle::{interpolate_periodic, ActionSpec, CircleDiffeo, Grid, Orbit};
use crate::error::{Error, Result};
use crate::group::Word;

/// Real values on the grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::input(format!(
                "grid function has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("grid function value {i} is not finite")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid,
            values: grid.points().map(f).collect(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Periodic piecewise-linear interpolation.
    pub fn at(&self, x: f64) -> f64 {
        interpolate_periodic(&self.values, x)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        check_grids(self.grid, other.grid)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `max_i |f_i − g_i|`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| (a - b).abs())?.max())
    }

    /// `f ∘ φ` at the grid points, interpolating `f`.
    pub fn compose_with(&self, phi: &CircleDiffeo) -> Result<GridFunction> {
        check_grids(self.grid, phi.grid())?;
        Ok(GridFunction {
            grid: self.grid,
            values: phi.lift().iter().map(|&y| self.at(y)).collect(),
        })
    }
}

fn check_grids(a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(Error::input(format!(
            "grid mismatch: {} vs {} points",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// A probability measure given by a nonnegative density.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeasure {
    density: GridFunction,
    raw_mass: f64,
}

impl GridMeasure {
    pub fn lebesgue(grid: Grid) -> Self {
        GridMeasure {
            density: GridFunction::constant(grid, 1.0),
            raw_mass: 1.0,
        }
    }

    /// Normalizes `density` to unit mass; the mass before normalization is
    /// kept in [`GridMeasure::raw_mass`].
    pub fn from_density(density: GridFunction) -> Result<Self> {
        if let Some(i) = density.values.iter().position(|&v| v < 0.0) {
            return Err(Error::input(format!("density is negative at grid point {i}")));
        }
        let mass = density.values.iter().sum::<f64>() * density.grid.spacing();
        if !(mass > 0.0) {
            return Err(Error::input("density has zero mass"));
        }
        Ok(GridMeasure {
            density: density.map(|v| v / mass),
            raw_mass: mass,
        })
    }

    pub fn grid(&self) -> Grid {
        self.density.grid
    }

    pub fn density(&self) -> &GridFunction {
        &self.density
    }

    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn mass(&self) -> f64 {
        self.density.values.iter().sum::<f64>() * self.grid().spacing()
    }

    /// Same measure on another grid, by interpolation of the density.
    pub fn resample(&self, grid: Grid) -> Result<GridMeasure> {
        if grid == self.grid() {
            return Ok(self.clone());
        }
        let values = grid.points().map(|x| self.density.at(x)).collect();
        GridMeasure::from_density(GridFunction::new(grid, values)?)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.density.values.iter().all(|&v| v > 0.0)
    }

    /// Rejects densities with zeros.
    pub fn require_positive(&self) -> Result<()> {
        match self.density.values.iter().position(|&v| !(v > 0.0)) {
            None => Ok(()),
            Some(i) => Err(Error::UnsupportedMeasure(format!(
                "density vanishes at grid point {i} (x = {:.6}); a strictly positive density is required",
                self.grid().point(i)
            ))),
        }
    }
}

/// Configuration form of a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Lebesgue,
    /// Density samples on a midpoint grid of any size; resampled to the
    /// working grid and normalized.
    Density { values: Vec<f64> },
}

impl MeasureSpec {
    pub fn build(&self, grid: Grid) -> Result<GridMeasure> {
        match self {
            MeasureSpec::Lebesgue => Ok(GridMeasure::lebesgue(grid)),
            MeasureSpec::Density { values } => {
                if values.is_empty() {
                    return Err(Error::input("density needs at least one value"));
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::input(format!(
                        "density value {i} must be finite and nonnegative"
                    )));
                }
                let samples = if values.len() == grid.len() {
                    values.clone()
                } else {
                    grid.points().map(|x| interpolate_periodic(values, x)).collect()
                };
                GridMeasure::from_density(GridFunction::new(grid, samples)?)
            }
        }
    }
}

/// `∫ f dν` by the midpoint rule.
pub fn integrate(f: &GridFunction, nu: &GridMeasure) -> Result<f64> {
    check_grids(f.grid, nu.grid())?;
    let h = f.grid.spacing();
    Ok(f.values
        .iter()
        .zip(&nu.density.values)
        .map(|(a, p)| a * p)
        .sum::<f64>()
        * h)
}

/// Image measure `φ_*ν` with density `p(φ⁻¹y) · Dφ⁻¹(y)`; the transported
/// mass is not renormalized.
pub fn pushforward(nu: &GridMeasure, phi: &CircleDiffeo) -> Result<GridMeasure> {
    check_grids(nu.grid(), phi.grid())?;
    let inv = phi.invert()?;
    let values: Vec<f64> = inv
        .lift()
        .iter()
        .zip(inv.deriv())
        .map(|(&y, &d)| nu.density.at(y) * d)
        .collect();
    let density = GridFunction::new(nu.grid(), values)?;
    let mass = density.values.iter().sum::<f64>() * nu.grid().spacing();
    Ok(GridMeasure {
        density,
        raw_mass: mass,
    })
}

/// Radon–Nikodym derivatives `ρ_g = d(g_*ν)/dν` of an action, memoised.
pub struct MeasuredAction<'a> {
    orbit: Orbit<'a>,
    measure: &'a GridMeasure,
    rho: Mutex<HashMap<Word, Arc<GridFunction>>>,
}

impl<'a> MeasuredAction<'a> {
    pub fn new(action: &'a ActionSpec, measure: &'a GridMeasure) -> Result<Self> {
        check_grids(action.grid(), measure.grid())?;
        measure.require_positive()?;
        Ok(MeasuredAction {
            orbit: Orbit::new(action),
            measure,
            rho: Mutex::new(HashMap::new()),
        })
    }

    pub fn action(&self) -> &'a ActionSpec {
        self.orbit.action()
    }

    pub fn orbit(&self) -> &Orbit<'a> {
        &self.orbit
    }

    pub fn measure(&self) -> &'a GridMeasure {
        self.measure
    }

    pub fn grid(&self) -> Grid {
        self.measure.grid()
    }

    /// `Φ_g`.
    pub fn phi(&self, g: &Word) -> Result<Arc<CircleDiffeo>> {
        self.orbit.phi(g)
    }

    /// `Φ_{g⁻¹}`.
    pub fn phi_inv(&self, g: &Word) -> Result<Arc<CircleDiffeo>> {
        self.orbit.phi(&g.spec().inv(g)?)
    }

    pub fn rho(&self, g: &Word) -> Result<Arc<GridFunction>> {
        if let Some(hit) = self.rho.lock().unwrap().get(g) {
            return Ok(hit.clone());
        }
        let grid = self.grid();
        let rho = if g.is_identity() {
            GridFunction::constant(grid, 1.0)
        } else {
            let inv = self.phi_inv(g)?;
            let p = &self.measure.density;
            let values = inv
                .lift()
                .iter()
                .zip(inv.deriv())
                .zip(&p.values)
                .map(|((&y, &d), &px)| p.at(y) * d / px)
                .collect();
            GridFunction::new(grid, values)
                .map_err(|_| Error::numeric(format!("ρ_{g} is not finite on the grid")))?
        };
        let rho = Arc::new(rho);
        self.rho.lock().unwrap().insert(g.clone(), rho.clone());
        Ok(rho)
    }

    /// `g_*f = f ∘ Φ_{g⁻¹}`, interpolating `f`.
    pub fn translate(&self, g: &Word, f: &GridFunction) -> Result<GridFunction> {
        if g.is_identity() {
            return Ok(f.clone());
        }
        f.compose_with(&*self.phi_inv(g)?)
    }

    /// `|∫ f(Φ_{g⁻¹}x) ρ_g(x) dν − ∫ f dν|` for an analytic `f`.
    pub fn defining_identity_defect(&self, g: &Word, f: impl Fn(f64) -> f64) -> Result<f64> {
        let grid = self.grid();
        let inv = self.phi_inv(g)?;
        let rho = self.rho(g)?;
        let moved = GridFunction::new(
            grid,
            inv.lift()
                .iter()
                .zip(rho.values())
                .map(|(&y, &r)| f(y) * r)
                .collect(),
        )?;
        let lhs = integrate(&moved, self.measure)?;
        let rhs = integrate(&GridFunction::from_fn(grid, f), self.measure)?;
        Ok((lhs - rhs).abs())
    }

    /// `max_x |ρ_{gh}(x) − ρ_g(x) ρ_h(Φ_{g⁻¹}x)|`.
    pub fn cocycle_defect(&self, g: &Word, h: &Word) -> Result<f64> {
        let gh = g.spec().mul(g, h)?;
        let lhs = self.rho(&gh)?;
        let rhs = self.rho(g)?.zip_with(&self.translate(g, &*self.rho(h)?)?, |a, b| a * b)?;
        lhs.sup_distance(&rhs)
    }

    /// `1 − (1/#S) Σ_s ∫ √ρ_s dν`.
    pub fn avg_hellinger_sq(&self) -> Result<f64> {
        let gens = self.action().group().generators();
        let mut beta = 0.0;
        for &s in &gens {
            let w = self.action().group().generator(s)?;
            beta += integrate(&self.rho(&w)?.map(f64::sqrt), self.measure)?;
        }
        Ok(1.0 - beta / gens.len() as f64)
    }
}

/// `ρ_g` for a single word.
pub fn radon_nikodym(action: &ActionSpec, nu: &GridMeasure, g: &Word) -> Result<GridFunction> {
    let m = MeasuredAction::new(action, nu)?;
    Ok((*m.rho(g)?).clone())
}

/// The cocycle law as a maximal grid defect.
pub fn cocycle_check(action: &ActionSpec, nu: &GridMeasure, g: &Word, h: &Word) -> Result<f64> {
    MeasuredAction::new(action, nu)?.cocycle_defect(g, h)
}

/// Eight smooth periodic test functions: a constant, six trigonometric modes
/// and a bump.
pub fn test_battery() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("one", |_| 1.0),
        ("cos1", |x| (2.0 * PI * x).cos()),
        ("sin1", |x| (2.0 * PI * x).sin()),
        ("cos2", |x| (4.0 * PI * x).cos()),
        ("sin2", |x| (4.0 * PI * x).sin()),
        ("cos3", |x| (6.0 * PI * x).cos()),
        ("sin3", |x| (6.0 * PI * x).sin()),
        ("bump", |x| (-8.0 * (PI * (x - 0.3)).sin().powi(2)).exp()),
    ]
}

fn densities_wrt<'m>(
    mu1: &'m GridMeasure,
    mu2: &'m GridMeasure,
    nu: &'m GridMeasure,
) -> Result<impl Iterator<Item = (f64, f64, f64)> + 'm> {
    check_grids(mu1.grid(), nu.grid())?;
    check_grids(mu2.grid(), nu.grid())?;
    nu.require_positive()?;
    Ok(mu1
        .density
        .values
        .iter()
        .zip(&mu2.density.values)
        .zip(&nu.density.values)
        .map(|((&a, &b), &p)| (a / p, b / p, p)))
}

/// `½ ∫ (√(dμ₁/dν) − √(dμ₂/dν))² dν`.
pub fn hellinger_sq(mu1: &GridMeasure, mu2: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    let h = nu.grid().spacing();
    let s: f64 = densities_wrt(mu1, mu2, nu)?
        .map(|(r1, r2, p)| (r1.sqrt() - r2.sqrt()).powi(2) * p)
        .sum();
    Ok(0.5 * s * h)
}

/// Hellinger distance `H(μ₁, μ₂)`.
pub fn hellinger(mu1: &GridMeasure, mu2: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    Ok(hellinger_sq(mu1, mu2, nu)?.sqrt())
}

/// Hellinger affinity `∫ √((dμ₁/dν)(dμ₂/dν)) dν`.
pub fn affinity(mu1: &GridMeasure, mu2: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    let h = nu.grid().spacing();
    let s: f64 = densities_wrt(mu1, mu2, nu)?
        .map(|(r1, r2, p)| (r1 * r2).sqrt() * p)
        .sum();
    Ok(s * h)
}

/// `∫ |dμ₁/dν − dμ₂/dν| dν`.
pub fn l1_distance(mu1: &GridMeasure, mu2: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    let h = nu.grid().spacing();
    let s: f64 = densities_wrt(mu1, mu2, nu)?
        .map(|(r1, r2, p)| (r1 - r2).abs() * p)
        .sum();
    Ok(s * h)
}

/// `1 − (1/#S) Σ_s ∫ √ρ_s dν`.
pub fn avg_hellinger_sq(action: &ActionSpec, nu: &GridMeasure) -> Result<f64> {
    MeasuredAction::new(action, nu)?.avg_hellinger_sq()
}

/// `(1/#S) Σ_s H(ν, s_*ν)²` through explicit pushforwards.
pub fn avg_hellinger_sq_pushforward(action: &ActionSpec, nu: &GridMeasure) -> Result<f64> {
    check_grids(action.grid(), nu.grid())?;
    let gens = action.group().generators();
    let mut total = 0.0;
    for &s in &gens {
        let moved = pushforward(nu, action.generator(s))?;
        total += hellinger_sq(nu, &moved, nu)?;
    }
    Ok(total / gens.len() as f64)
}
