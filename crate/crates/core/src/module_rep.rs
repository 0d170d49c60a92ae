//! Finitely supported fields `ξ: G → C(X)` and the operators acting on them.
//!
//! `(L_gξ)_h(x) = ξ_{g⁻¹h}(Φ_{g⁻¹}x)` and `π_g = ρ_g^{1/2} L_g`. Grid
//! functions are precomposed with `Φ_{g⁻¹}` by periodic linear interpolation.
//! A field is an amenability witness at level `ε` when it is nonnegative, has
//! `⟨ξ, ξ⟩ = 1` pointwise and `sup_x (1 − (1/#S) Σ_s ⟨ξ, L_sξ⟩(x)) ≤ ε`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::circle::{Grid, Orbit};
use crate::error::{Error, Result};
use crate::group::{Family, GroupSpec, Word};
use crate::measures::{integrate, GridFunction, GridMeasure, MeasuredAction};

/// Pointwise tolerance for `⟨ξ, ξ⟩ = 1`.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// A finitely supported map from group elements to grid functions.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleVector {
    spec: GroupSpec,
    grid: Grid,
    entries: BTreeMap<Word, GridFunction>,
}

impl Serialize for ModuleVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (k, f) in &self.entries {
            map.serialize_entry(&k.to_string(), f.values())?;
        }
        map.end()
    }
}

impl ModuleVector {
    pub fn zero(spec: GroupSpec, grid: Grid) -> Self {
        ModuleVector {
            spec,
            grid,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(
        spec: GroupSpec,
        grid: Grid,
        entries: impl IntoIterator<Item = (Word, GridFunction)>,
    ) -> Result<Self> {
        let mut v = ModuleVector::zero(spec, grid);
        for (k, f) in entries {
            v.add_entry(k, f)?;
        }
        Ok(v)
    }

    /// Parses `{word: [values…]}` as read from a configuration file.
    pub fn from_map(spec: GroupSpec, grid: Grid, map: &BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let mut v = ModuleVector::zero(spec, grid);
        for (k, values) in map {
            let word = spec.parse_word(k)?;
            let f = GridFunction::new(grid, values.clone())
                .map_err(|e| Error::input(format!("entry {k}: {e}")))?;
            v.add_entry(word, f)?;
        }
        Ok(v)
    }

    /// Adds `f` to the entry at `k`.
    pub fn add_entry(&mut self, k: Word, f: GridFunction) -> Result<()> {
        if k.spec() != self.spec {
            return Err(Error::input(format!("{k} is not in the group of this field")));
        }
        if f.grid() != self.grid {
            return Err(Error::input(format!("entry {k} lives on another grid")));
        }
        match self.entries.get_mut(&k) {
            Some(old) => *old = old.zip_with(&f, |a, b| a + b)?,
            None => {
                self.entries.insert(k, f);
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn get(&self, k: &Word) -> Option<&GridFunction> {
        self.entries.get(k)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, &GridFunction)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Word> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `|k'k⁻¹|` over pairs of support elements.
    pub fn support_spread(&self) -> Result<usize> {
        let mut spread = 0;
        for k in self.entries.keys() {
            let kinv = self.spec.inv(k)?;
            for k2 in self.entries.keys() {
                spread = spread.max(self.spec.mul(k2, &kinv)?.len());
            }
        }
        Ok(spread)
    }

    pub fn map_entries(&self, f: impl Fn(&GridFunction) -> GridFunction) -> ModuleVector {
        ModuleVector {
            spec: self.spec,
            grid: self.grid,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    /// Multiplies every entry by the grid function `w`.
    pub fn scale_by(&self, w: &GridFunction) -> Result<ModuleVector> {
        let mut out = ModuleVector::zero(self.spec, self.grid);
        for (k, f) in &self.entries {
            out.entries.insert(k.clone(), f.zip_with(w, |a, b| a * b)?);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &ModuleVector) -> Result<ModuleVector> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, f) in &other.entries {
            out.add_entry(k.clone(), f.map(|v| -v))?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &ModuleVector) -> Result<ModuleVector> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, f) in &other.entries {
            out.add_entry(k.clone(), f.clone())?;
        }
        Ok(out)
    }

    /// `max_{k, x} |ξ_k(x) − η_k(x)|`.
    pub fn sup_distance(&self, other: &ModuleVector) -> Result<f64> {
        self.check_compatible(other)?;
        let keys: BTreeSet<&Word> = self.entries.keys().chain(other.entries.keys()).collect();
        let mut worst = 0.0f64;
        for k in keys {
            let d = match (self.entries.get(k), other.entries.get(k)) {
                (Some(a), Some(b)) => a.sup_distance(b)?,
                (Some(a), None) | (None, Some(a)) => a.map(f64::abs).max(),
                (None, None) => 0.0,
            };
            worst = worst.max(d);
        }
        Ok(worst)
    }

    fn check_compatible(&self, other: &ModuleVector) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::input("fields over different groups"));
        }
        if self.grid != other.grid {
            return Err(Error::input(format!(
                "grid mismatch: {} vs {} points",
                self.grid.len(),
                other.grid.len()
            )));
        }
        Ok(())
    }
}

/// `⟨ξ, η⟩_{C(X)}(x) = Σ_g ξ_g(x) η_g(x)`.
pub fn module_inner(xi: &ModuleVector, eta: &ModuleVector) -> Result<GridFunction> {
    xi.check_compatible(eta)?;
    let n = xi.grid.len();
    let mut acc = vec![0.0; n];
    for (k, f) in &xi.entries {
        if let Some(g) = eta.entries.get(k) {
            for ((a, u), v) in acc.iter_mut().zip(f.values()).zip(g.values()) {
                *a += u * v;
            }
        }
    }
    GridFunction::new(xi.grid, acc)
}

/// `∫ ⟨ξ, η⟩_{C(X)} dν`.
pub fn scalar_inner(xi: &ModuleVector, eta: &ModuleVector, nu: &GridMeasure) -> Result<f64> {
    integrate(&module_inner(xi, eta)?, nu)
}

/// `L_g ξ`.
pub fn apply_l(orbit: &Orbit, g: &Word, xi: &ModuleVector) -> Result<ModuleVector> {
    if g.spec() != xi.spec || orbit.action().group() != xi.spec {
        return Err(Error::input("word, field and action must share one group"));
    }
    if orbit.action().grid() != xi.grid {
        return Err(Error::input("field and action live on different grids"));
    }
    if g.is_identity() {
        return Ok(xi.clone());
    }
    let phi_inv = orbit.phi(&xi.spec.inv(g)?)?;
    let mut out = ModuleVector::zero(xi.spec, xi.grid);
    for (k, f) in &xi.entries {
        out.entries
            .insert(xi.spec.mul(g, k)?, f.compose_with(&phi_inv)?);
    }
    Ok(out)
}

/// `π_g ξ = ρ_g^{1/2} L_g ξ`.
pub fn apply_pi(m: &MeasuredAction, g: &Word, xi: &ModuleVector) -> Result<ModuleVector> {
    let moved = apply_l(m.orbit(), g, xi)?;
    if g.is_identity() {
        return Ok(moved);
    }
    moved.scale_by(&m.rho(g)?.map(f64::sqrt))
}

/// Outcome of checking the three witness conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub nonnegative: bool,
    pub unit_norm: bool,
    /// `max_x |⟨ξ, ξ⟩(x) − 1|`.
    pub norm_defect: f64,
    pub unit_norm_tol: f64,
    /// `sup_x (1 − (1/#S) Σ_s ⟨ξ, L_sξ⟩(x))`.
    pub defect: f64,
    pub epsilon: f64,
    pub almost_invariant: bool,
}

impl WitnessReport {
    /// Conditions (a) and (b).
    pub fn is_valid_field(&self) -> bool {
        self.nonnegative && self.unit_norm
    }

    pub fn is_witness(&self) -> bool {
        self.is_valid_field() && self.almost_invariant
    }
}

/// `sup_x (1 − (1/#S) Σ_s ⟨ξ, L_sξ⟩(x))`.
pub fn witness_defect(orbit: &Orbit, xi: &ModuleVector) -> Result<f64> {
    let gens = xi.spec.generators();
    let n = xi.grid.len();
    let mut mean = vec![0.0; n];
    for &s in &gens {
        let moved = apply_l(orbit, &xi.spec.generator(s)?, xi)?;
        let overlap = module_inner(xi, &moved)?;
        for (m, o) in mean.iter_mut().zip(overlap.values()) {
            *m += o;
        }
    }
    let scale = 1.0 / gens.len() as f64;
    Ok(mean
        .iter()
        .map(|m| 1.0 - m * scale)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Checks conditions (a), (b), (c) for `ξ` at level `epsilon`.
pub fn verify_witness(xi: &ModuleVector, orbit: &Orbit, epsilon: f64) -> Result<WitnessReport> {
    verify_witness_with(xi, orbit, epsilon, UNIT_NORM_TOL)
}

pub fn verify_witness_with(
    xi: &ModuleVector,
    orbit: &Orbit,
    epsilon: f64,
    unit_norm_tol: f64,
) -> Result<WitnessReport> {
    let nonnegative = xi
        .entries
        .values()
        .all(|f| f.values().iter().all(|&v| v >= 0.0));
    let norm = module_inner(xi, xi)?;
    let norm_defect = norm.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let defect = witness_defect(orbit, xi)?;
    Ok(WitnessReport {
        nonnegative,
        unit_norm: norm_defect <= unit_norm_tol,
        norm_defect,
        unit_norm_tol,
        defect,
        epsilon,
        almost_invariant: defect <= epsilon,
    })
}

/// `|F|^{−1/2} 1_F ⊗ 1_X` for the box `F = {0, …, n−1}^d`.
pub fn build_folner_witness(spec: GroupSpec, n: usize, grid: Grid) -> Result<ModuleVector> {
    let points = crate::spectral::box_points(spec, n)?;
    let value = (points.len() as f64).sqrt().recip();
    ModuleVector::from_entries(
        spec,
        grid,
        points
            .into_iter()
            .map(|k| (k, GridFunction::constant(grid, value))),
    )
}

/// Witness defect of the Følner box of side `n` in `Z^d` as a reduced
/// fraction, from integer overlap counts.
pub fn folner_defect_exact(spec: GroupSpec, n: usize) -> Result<(u128, u128)> {
    if spec.family() != Family::FreeAbelian {
        return Err(Error::input("Følner boxes are defined for free abelian groups"));
    }
    let points = crate::spectral::box_points(spec, n)?;
    let members: BTreeSet<&Word> = points.iter().collect();
    let gens = spec.generators();
    let mut overlap: u128 = 0;
    for &s in &gens {
        overlap += points
            .iter()
            .filter(|k| members.contains(&spec.left_mul_gen(s.inverse(), k)))
            .count() as u128;
    }
    let den = (gens.len() * points.len()) as u128;
    let num = den - overlap;
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// A random trigonometric polynomial `1 + Σ_{m≤3} (α_m cos 2πmx + β_m sin 2πmx)`
/// with `|α_m|, |β_m| ≤ amplitude`.
pub fn random_trig(rng: &mut impl Rng, grid: Grid, amplitude: f64) -> GridFunction {
    let coeffs: Vec<(f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-amplitude..=amplitude),
                rng.gen_range(-amplitude..=amplitude),
            )
        })
        .collect();
    GridFunction::from_fn(grid, |x| {
        1.0 + coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let t = 2.0 * PI * (m + 1) as f64 * x;
                a * t.cos() + b * t.sin()
            })
            .sum::<f64>()
    })
}

/// A smooth field with arbitrary-sign entries on `support`.
pub fn random_smooth_field(
    rng: &mut impl Rng,
    spec: GroupSpec,
    grid: Grid,
    support: &[Word],
) -> Result<ModuleVector> {
    ModuleVector::from_entries(
        spec,
        grid,
        support.iter().map(|k| {
            let scale = rng.gen_range(-1.0..=1.0);
            (k.clone(), random_trig(rng, grid, 0.3).map(|v| scale * v))
        }),
    )
}

/// A field satisfying (a) and (b): `ξ_k = (c_k / Σ_j c_j)^{1/2}` with
/// `c_k = w_k · (random smooth positive function)`.
pub fn random_witness(
    rng: &mut impl Rng,
    spec: GroupSpec,
    grid: Grid,
    weighted_support: &[(Word, f64)],
) -> Result<ModuleVector> {
    if weighted_support.is_empty() {
        return Err(Error::input("witness support is empty"));
    }
    if weighted_support.iter().any(|(_, w)| !(*w > 0.0)) {
        return Err(Error::input("witness weights must be positive"));
    }
    let raw: Vec<(Word, GridFunction)> = weighted_support
        .iter()
        .map(|(k, w)| (k.clone(), random_trig(rng, grid, 0.15).map(|v| w * v)))
        .collect();
    let mut total = GridFunction::constant(grid, 0.0);
    for (_, c) in &raw {
        total = total.zip_with(c, |a, b| a + b)?;
    }
    ModuleVector::from_entries(
        spec,
        grid,
        raw.into_iter()
            .map(|(k, c)| Ok((k, c.zip_with(&total, |a, b| (a / b).sqrt())?)))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// `max_{g∈B_R} ρ_g` and `min_{g∈B_R} ρ_g` pointwise.
pub fn truncated_rho_bounds(m: &MeasuredAction, radius: usize) -> Result<(GridFunction, GridFunction)> {
    let ball = m.action().group().ball(radius)?;
    extremes(m, ball.elements())
}

/// Pointwise maximum and minimum of `ρ_k` over `words`.
pub fn extremes(m: &MeasuredAction, words: &[Word]) -> Result<(GridFunction, GridFunction)> {
    let grid = m.grid();
    let mut hi = GridFunction::constant(grid, f64::NEG_INFINITY);
    let mut lo = GridFunction::constant(grid, f64::INFINITY);
    if words.is_empty() {
        return Err(Error::input("extremes over an empty set of words"));
    }
    for k in words {
        let rho = m.rho(k)?;
        hi = hi.zip_with(&rho, f64::max)?;
        lo = lo.zip_with(&rho, f64::min)?;
    }
    Ok((hi, lo))
}

/// `(ρ̄_R, ρ̲_R)` for `R = 0..=r_max`, one sphere at a time.
pub fn rho_bounds_series(m: &MeasuredAction, r_max: usize) -> Result<Vec<(GridFunction, GridFunction)>> {
    let ball = m.action().group().ball(r_max)?;
    let grid = m.grid();
    let mut hi = GridFunction::constant(grid, 1.0);
    let mut lo = GridFunction::constant(grid, 1.0);
    let mut out = vec![(hi.clone(), lo.clone())];
    for r in 1..=r_max {
        for k in ball.sphere(r) {
            let rho = m.rho(k)?;
            hi = hi.zip_with(&rho, f64::max)?;
            lo = lo.zip_with(&rho, f64::min)?;
        }
        out.push((hi.clone(), lo.clone()));
    }
    Ok(out)
}

/// Defects of the truncated identities
/// `ρ_g · (max_{B_R} ρ)∘Φ_{g⁻¹} = max_{gB_R} ρ` and the same for `min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaDefects {
    pub sup: f64,
    pub inf: f64,
}

pub fn lemma_rho_identity_check(m: &MeasuredAction, g: &Word, radius: usize) -> Result<LemmaDefects> {
    let spec = m.action().group();
    let ball = spec.ball(radius)?;
    let (hi, lo) = extremes(m, ball.elements())?;
    let shifted: Vec<Word> = ball
        .elements()
        .iter()
        .map(|k| spec.mul(g, k))
        .collect::<Result<_>>()?;
    let (hi_g, lo_g) = extremes(m, &shifted)?;
    let rho_g = m.rho(g)?;
    let lhs_hi = rho_g.zip_with(&m.translate(g, &hi)?, |a, b| a * b)?;
    let lhs_lo = rho_g.zip_with(&m.translate(g, &lo)?, |a, b| a * b)?;
    Ok(LemmaDefects {
        sup: lhs_hi.sup_distance(&hi_g)?,
        inf: lhs_lo.sup_distance(&lo_g)?,
    })
}

/// One level of a cocycle family: a field satisfying (a), (b) and a radius
/// `R_n` with `⟨ξ_n, L_gξ_n⟩ = 0` whenever `|g| ≥ R_n`.
#[derive(Clone, Debug)]
pub struct CocycleLevel {
    pub witness: ModuleVector,
    pub radius: usize,
}

/// The family `n ↦ (ξ_n, R_n)` defining `b_g = ⊕_n (L_gξ_n − ξ_n)`.
#[derive(Clone, Debug)]
pub struct CocycleFamily {
    spec: GroupSpec,
    grid: Grid,
    levels: Vec<CocycleLevel>,
}

impl CocycleFamily {
    /// Checks (a), (b) and the overlap radius of every level.
    pub fn new(levels: Vec<CocycleLevel>) -> Result<Self> {
        let first = levels
            .first()
            .ok_or_else(|| Error::input("cocycle family needs at least one level"))?;
        let (spec, grid) = (first.witness.spec(), first.witness.grid());
        for (n, level) in levels.iter().enumerate() {
            let w = &level.witness;
            if w.spec() != spec || w.grid() != grid {
                return Err(Error::input(format!("level {n} lives on another group or grid")));
            }
            if w.is_empty() {
                return Err(Error::input(format!("level {n} has empty support")));
            }
            if w.entries().any(|(_, f)| f.values().iter().any(|&v| v < 0.0)) {
                return Err(Error::input(format!("level {n} has negative entries")));
            }
            let norm = module_inner(w, w)?;
            let defect = norm.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            if defect > UNIT_NORM_TOL {
                return Err(Error::input(format!(
                    "level {n} is not of unit norm (defect {defect:.3e})"
                )));
            }
            let needed = w.support_spread()? + 1;
            if level.radius < needed {
                return Err(Error::input(format!(
                    "level {n}: radius {} is below the overlap radius {needed}",
                    level.radius
                )));
            }
        }
        Ok(CocycleFamily { spec, grid, levels })
    }

    /// Levels supported on balls `B_{r_n}` with random smooth entries and
    /// `R_n = 2 r_n + 1`.
    pub fn ball_levels(
        rng: &mut impl Rng,
        spec: GroupSpec,
        grid: Grid,
        schedule: &[usize],
    ) -> Result<Self> {
        let mut levels = Vec::with_capacity(schedule.len());
        for &r in schedule {
            let ball = spec.ball(r)?;
            let support: Vec<(Word, f64)> =
                ball.elements().iter().map(|k| (k.clone(), 1.0)).collect();
            let witness = random_witness(rng, spec, grid, &support)?;
            let radius = witness.support_spread()? + 1;
            levels.push(CocycleLevel { witness, radius });
        }
        Self::new(levels)
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn levels(&self) -> &[CocycleLevel] {
        &self.levels
    }

    /// `φ(ℓ) = #{n : ℓ ≥ R_n}`.
    pub fn growth(&self, length: usize) -> usize {
        self.levels.iter().filter(|l| length >= l.radius).count()
    }

    fn check_orbit(&self, orbit: &Orbit) -> Result<()> {
        let a = orbit.action();
        if a.group() != self.spec || a.grid() != self.grid {
            return Err(Error::input("cocycle family and action do not match"));
        }
        Ok(())
    }
}

/// Per-level components `L_gξ_n − ξ_n` of `b_g`.
pub fn build_coboundary_cocycle(orbit: &Orbit, family: &CocycleFamily, g: &Word) -> Result<Vec<ModuleVector>> {
    family.check_orbit(orbit)?;
    family
        .levels
        .iter()
        .map(|l| apply_l(orbit, g, &l.witness)?.sub(&l.witness))
        .collect()
}

/// `⟨b_g, b_g⟩_{C(X)}` summed over levels.
pub fn cocycle_norm(orbit: &Orbit, family: &CocycleFamily, g: &Word) -> Result<GridFunction> {
    let mut total = GridFunction::constant(family.grid, 0.0);
    for b in build_coboundary_cocycle(orbit, family, g)? {
        total = total.zip_with(&module_inner(&b, &b)?, |a, c| a + c)?;
    }
    Ok(total)
}

/// `max |b_{gh} − (L_g b_h + b_g)|` over levels, entries and grid points.
pub fn check_cocycle(orbit: &Orbit, family: &CocycleFamily, g: &Word, h: &Word) -> Result<f64> {
    let gh = family.spec.mul(g, h)?;
    let b_gh = build_coboundary_cocycle(orbit, family, &gh)?;
    let b_h = build_coboundary_cocycle(orbit, family, h)?;
    let b_g = build_coboundary_cocycle(orbit, family, g)?;
    let mut worst = 0.0f64;
    for ((lhs, bh), bg) in b_gh.iter().zip(&b_h).zip(&b_g) {
        let rhs = apply_l(orbit, g, bh)?.add(bg)?;
        worst = worst.max(lhs.sup_distance(&rhs)?);
    }
    Ok(worst)
}

/// `K = max_s sup_x ⟨b_s, b_s⟩(x)`.
pub fn cocycle_constant(orbit: &Orbit, family: &CocycleFamily) -> Result<f64> {
    let mut k = 0.0f64;
    for s in family.spec.generators() {
        k = k.max(cocycle_norm(orbit, family, &family.spec.generator(s)?)?.max());
    }
    Ok(k)
}

/// `⟨b_g, b_g⟩` with the bounds `2φ(|g|) ≤ ⟨b_g, b_g⟩ ≤ K|g|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct CocycleBounds {
    pub norm: GridFunction,
    pub lower: f64,
    pub upper: f64,
    pub k: f64,
}

impl CocycleBounds {
    /// Largest violation of either bound on the grid (≤ 0 when both hold).
    pub fn violation(&self) -> f64 {
        (self.lower - self.norm.min()).max(self.norm.max() - self.upper)
    }
}

pub fn cocycle_bounds(orbit: &Orbit, family: &CocycleFamily, g: &Word) -> Result<CocycleBounds> {
    cocycle_bounds_with(orbit, family, g, cocycle_constant(orbit, family)?)
}

pub fn cocycle_bounds_with(orbit: &Orbit, family: &CocycleFamily, g: &Word, k: f64) -> Result<CocycleBounds> {
    let len = g.len() as f64;
    Ok(CocycleBounds {
        norm: cocycle_norm(orbit, family, g)?,
        lower: 2.0 * family.growth(g.len()) as f64,
        upper: k * len * len,
        k,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Inf,
    Sup,
}

/// `∫ w_R ⟨b_g, b_g⟩ dν` with `w_R = ρ̲_R` or `ρ̄_R`, together with
/// `I = ∫ w_R dν` and the bounds `2φ(|g|)·I` and `K|g|²·I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedNorm {
    pub value: f64,
    pub weight_integral: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn weight_cocycle(
    m: &MeasuredAction,
    family: &CocycleFamily,
    radius: usize,
    mode: WeightMode,
    g: &Word,
) -> Result<WeightedNorm> {
    let (hi, lo) = truncated_rho_bounds(m, radius)?;
    let weight = match mode {
        WeightMode::Inf => lo,
        WeightMode::Sup => hi,
    };
    let k = cocycle_constant(m.orbit(), family)?;
    weighted_norm_with(m, family, &weight, k, g)
}

/// [`weight_cocycle`] with a precomputed weight and constant `K`.
pub fn weighted_norm_with(
    m: &MeasuredAction,
    family: &CocycleFamily,
    weight: &GridFunction,
    k: f64,
    g: &Word,
) -> Result<WeightedNorm> {
    let b = cocycle_bounds_with(m.orbit(), family, g, k)?;
    let nu = m.measure();
    let value = integrate(&b.norm.zip_with(weight, |a, w| a * w)?, nu)?;
    let weight_integral = integrate(weight, nu)?;
    Ok(WeightedNorm {
        value,
        weight_integral,
        lower: b.lower * weight_integral,
        upper: b.upper * weight_integral,
    })
}

/// Defect of `π_g b̲_h + b̲'_g = b̲'_{gh}`, where `b̲` is weighted by
/// `(min_{B_R} ρ)^{1/2}` and `b̲'` by `(min_{gB_R} ρ)^{1/2}`.
pub fn weighted_cocycle_law_defect(
    m: &MeasuredAction,
    family: &CocycleFamily,
    radius: usize,
    g: &Word,
    h: &Word,
) -> Result<f64> {
    let spec = family.spec;
    let ball = spec.ball(radius)?;
    let (_, lo) = extremes(m, ball.elements())?;
    let shifted: Vec<Word> = ball
        .elements()
        .iter()
        .map(|k| spec.mul(g, k))
        .collect::<Result<_>>()?;
    let (_, lo_g) = extremes(m, &shifted)?;
    let w = lo.map(f64::sqrt);
    let w_g = lo_g.map(f64::sqrt);
    let gh = spec.mul(g, h)?;
    let b_h = build_coboundary_cocycle(m.orbit(), family, h)?;
    let b_g = build_coboundary_cocycle(m.orbit(), family, g)?;
    let b_gh = build_coboundary_cocycle(m.orbit(), family, &gh)?;
    let mut worst = 0.0f64;
    for ((bh, bg), bgh) in b_h.iter().zip(&b_g).zip(&b_gh) {
        let lhs = apply_pi(m, g, &bh.scale_by(&w)?)?.add(&bg.scale_by(&w_g)?)?;
        worst = worst.max(lhs.sup_distance(&bgh.scale_by(&w_g)?)?);
    }
    Ok(worst)
}
