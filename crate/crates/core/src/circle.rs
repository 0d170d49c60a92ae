//! Orientation-preserving circle diffeomorphisms and group actions by them.
//!
//! The circle is `R/Z`. A diffeomorphism is stored through its lift sampled on
//! the midpoint grid `x_i = (i + ½)/N` together with its derivative. Rotations,
//! sine-perturbed rotations `x ↦ x + θ + (a/2π) sin 2πx` and their inverses are
//! also evaluated in closed form (Newton for the inverse) at arbitrary points;
//! sampled maps use periodic piecewise-linear interpolation of `lift(x) − x`,
//! which is monotone whenever the samples are.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Family, Gen, GroupSpec, Word};

/// Uniform midpoint grid on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::input(format!("grid needs at least 4 points, got {n}")));
        }
        Ok(Grid { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Default identity/commutation tolerance `10/N`.
    pub fn tau_diffeo(&self) -> f64 {
        10.0 / self.n as f64
    }
}

/// Periodic piecewise-linear interpolation of samples on the midpoint grid.
pub(crate) fn interpolate_periodic(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let u = x * n as f64 - 0.5;
    let k = u.floor();
    let t = u - k;
    let i0 = (k as i64).rem_euclid(n as i64) as usize;
    let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
    let (a, b) = (values[i0], values[i1]);
    a + t * (b - a)
}

/// Arc-length distance on `R/Z`, at most `½`.
pub fn circle_distance(u: f64, v: f64) -> f64 {
    let d = (u - v).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn sine_lift(x: f64, theta: f64, a: f64) -> f64 {
    x + theta + a / (2.0 * PI) * (2.0 * PI * x).sin()
}

fn sine_deriv(x: f64, a: f64) -> f64 {
    1.0 + a * (2.0 * PI * x).cos()
}

/// Solves `sine_lift(y) = x` by safeguarded Newton.
fn sine_inverse(x: f64, theta: f64, a: f64) -> f64 {
    let spread = a.abs() / (2.0 * PI);
    let (mut lo, mut hi) = (x - theta - spread, x - theta + spread);
    let mut y = x - theta;
    for _ in 0..100 {
        let f = sine_lift(y, theta, a) - x;
        if f == 0.0 {
            return y;
        }
        if f > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let mut next = y - f / sine_deriv(y, a);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-16 * (1.0 + y.abs()) {
            return next;
        }
        y = next;
    }
    y
}

/// How a diffeomorphism was obtained; analytic kinds are evaluated exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Rotation { theta: f64 },
    SinePerturbed { theta: f64, a: f64 },
    InverseSinePerturbed { theta: f64, a: f64 },
    Composite,
    UserSampled,
}

impl Provenance {
    fn is_analytic(&self) -> bool {
        !matches!(self, Provenance::Composite | Provenance::UserSampled)
    }
}

/// An orientation-preserving degree-one circle diffeomorphism.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleDiffeo {
    lift: Vec<f64>,
    deriv: Vec<f64>,
    provenance: Provenance,
}

impl CircleDiffeo {
    fn analytic(grid: Grid, provenance: Provenance) -> Self {
        let mut d = CircleDiffeo {
            lift: Vec::new(),
            deriv: Vec::new(),
            provenance,
        };
        d.lift = grid.points().map(|x| d.lift_at(x)).collect();
        d.deriv = grid.points().map(|x| d.deriv_at(x)).collect();
        d
    }

    pub fn identity(grid: Grid) -> Self {
        Self::rotation(grid, 0.0)
    }

    pub fn rotation(grid: Grid, theta: f64) -> Self {
        Self::analytic(grid, Provenance::Rotation { theta })
    }

    /// `x ↦ x + θ + (a/2π) sin 2πx`, a diffeomorphism for `|a| < 1`.
    pub fn sine_perturbed(grid: Grid, theta: f64, a: f64) -> Result<Self> {
        if !(a.abs() < 1.0) || !theta.is_finite() {
            return Err(Error::input(format!(
                "sine perturbation needs |a| < 1 (got a = {a}); otherwise the derivative vanishes"
            )));
        }
        if a == 0.0 {
            return Ok(Self::rotation(grid, theta));
        }
        Ok(Self::analytic(grid, Provenance::SinePerturbed { theta, a }))
    }

    /// Builds a diffeomorphism from lift and derivative samples on the grid.
    pub fn from_samples(lift: Vec<f64>, deriv: Vec<f64>) -> Result<Self> {
        let n = lift.len();
        Grid::new(n)?;
        if deriv.len() != n {
            return Err(Error::input(format!(
                "lift has {n} samples but derivative has {}",
                deriv.len()
            )));
        }
        if lift.iter().chain(&deriv).any(|v| !v.is_finite()) {
            return Err(Error::input("diffeomorphism samples must be finite"));
        }
        if let Some(i) = deriv.iter().position(|&d| d <= 0.0) {
            return Err(Error::input(format!(
                "derivative must be positive, sample {i} is {}",
                deriv[i]
            )));
        }
        if let Some(i) = lift.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::input(format!(
                "lift must be strictly increasing (samples {i} and {})",
                i + 1
            )));
        }
        if lift[0] + 1.0 <= lift[n - 1] {
            return Err(Error::input(
                "lift must have degree one: lift(x + 1) = lift(x) + 1 with increasing samples",
            ));
        }
        Ok(CircleDiffeo {
            lift,
            deriv,
            provenance: Provenance::UserSampled,
        })
    }

    pub fn grid(&self) -> Grid {
        Grid { n: self.lift.len() }
    }

    pub fn lift(&self) -> &[f64] {
        &self.lift
    }

    pub fn deriv(&self) -> &[f64] {
        &self.deriv
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self.provenance, Provenance::Rotation { .. })
    }

    pub fn is_user_sampled(&self) -> bool {
        matches!(self.provenance, Provenance::UserSampled)
    }

    /// Lift evaluated at an arbitrary real `x`.
    pub fn lift_at(&self, x: f64) -> f64 {
        match self.provenance {
            Provenance::Rotation { theta } => x + theta,
            Provenance::SinePerturbed { theta, a } => sine_lift(x, theta, a),
            Provenance::InverseSinePerturbed { theta, a } => sine_inverse(x, theta, a),
            Provenance::Composite | Provenance::UserSampled => {
                let grid = self.grid();
                let offsets: Vec<f64> = self
                    .lift
                    .iter()
                    .enumerate()
                    .map(|(i, l)| l - grid.point(i))
                    .collect();
                x + interpolate_periodic(&offsets, x)
            }
        }
    }

    /// Derivative evaluated at an arbitrary real `x`.
    pub fn deriv_at(&self, x: f64) -> f64 {
        match self.provenance {
            Provenance::Rotation { .. } => 1.0,
            Provenance::SinePerturbed { a, .. } => sine_deriv(x, a),
            Provenance::InverseSinePerturbed { theta, a } => {
                1.0 / sine_deriv(sine_inverse(x, theta, a), a)
            }
            Provenance::Composite | Provenance::UserSampled => {
                interpolate_periodic(&self.deriv, x)
            }
        }
    }

    /// Lift values at many points; sampled maps reuse one offset table.
    fn lift_many(&self, xs: &[f64]) -> Vec<f64> {
        if self.provenance.is_analytic() {
            return xs.iter().map(|&x| self.lift_at(x)).collect();
        }
        let grid = self.grid();
        let offsets: Vec<f64> = self
            .lift
            .iter()
            .enumerate()
            .map(|(i, l)| l - grid.point(i))
            .collect();
        xs.iter()
            .map(|&x| x + interpolate_periodic(&offsets, x))
            .collect()
    }

    /// `self ∘ inner`, with the chain rule for the derivative.
    pub fn compose(&self, inner: &CircleDiffeo) -> Result<CircleDiffeo> {
        if self.lift.len() != inner.lift.len() {
            return Err(Error::input(format!(
                "cannot compose diffeomorphisms on grids of {} and {} points",
                self.lift.len(),
                inner.lift.len()
            )));
        }
        if let (Provenance::Rotation { theta: t1 }, Provenance::Rotation { theta: t2 }) =
            (&self.provenance, &inner.provenance)
        {
            return Ok(Self::rotation(self.grid(), t1 + t2));
        }
        let lift = self.lift_many(&inner.lift);
        let deriv = inner
            .lift
            .iter()
            .zip(&inner.deriv)
            .map(|(&y, &dy)| self.deriv_at(y) * dy)
            .collect();
        Ok(CircleDiffeo {
            lift,
            deriv,
            provenance: Provenance::Composite,
        })
    }

    /// Inverse diffeomorphism; sampled maps are inverted exactly through their
    /// piecewise-linear lift.
    pub fn invert(&self) -> Result<CircleDiffeo> {
        let grid = self.grid();
        match self.provenance {
            Provenance::Rotation { theta } => return Ok(Self::rotation(grid, -theta)),
            Provenance::SinePerturbed { theta, a } => {
                return Ok(Self::analytic(
                    grid,
                    Provenance::InverseSinePerturbed { theta, a },
                ))
            }
            Provenance::InverseSinePerturbed { theta, a } => {
                return Ok(Self::analytic(grid, Provenance::SinePerturbed { theta, a }))
            }
            Provenance::Composite | Provenance::UserSampled => {}
        }
        let n = grid.len();
        let l0 = self.lift[0];
        let mut lift = Vec::with_capacity(n);
        let mut deriv = Vec::with_capacity(n);
        for y in grid.points() {
            let shift = (y - l0).floor();
            let target = y - shift;
            // first index with lift > target over the extended sequence
            let j = self.lift.partition_point(|&l| l <= target);
            let (xa, la, xb, lb) = if j == 0 {
                return Err(Error::numeric("inverse root bracket not found"));
            } else if j < n {
                (grid.point(j - 1), self.lift[j - 1], grid.point(j), self.lift[j])
            } else {
                (grid.point(n - 1), self.lift[n - 1], grid.point(0) + 1.0, l0 + 1.0)
            };
            if !(lb > la) || target < la || target > lb {
                return Err(Error::numeric(
                    "inverse root-finding failed: lift samples are not monotone",
                ));
            }
            let t = (target - la) / (lb - la);
            let x = xa + t * (xb - xa) + shift;
            lift.push(x);
            let d = self.deriv_at(x);
            if !(d > 0.0) {
                return Err(Error::numeric("non-positive derivative while inverting"));
            }
            deriv.push(1.0 / d);
        }
        Ok(CircleDiffeo {
            lift,
            deriv,
            provenance: self.provenance.clone(),
        })
    }

    /// Same map on another grid (exact for analytic kinds).
    pub fn resample(&self, grid: Grid) -> CircleDiffeo {
        if self.provenance.is_analytic() {
            return Self::analytic(grid, self.provenance.clone());
        }
        let xs: Vec<f64> = grid.points().collect();
        CircleDiffeo {
            lift: self.lift_many(&xs),
            deriv: grid.points().map(|x| self.deriv_at(x)).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Largest gap between the stored derivative and central differences of
    /// the lift.
    pub fn derivative_consistency(&self) -> f64 {
        let n = self.lift.len();
        let h = 1.0 / n as f64;
        (0..n)
            .map(|i| {
                let next = if i + 1 == n { self.lift[0] + 1.0 } else { self.lift[i + 1] };
                let prev = if i == 0 { self.lift[n - 1] - 1.0 } else { self.lift[i - 1] };
                ((next - prev) / (2.0 * h) - self.deriv[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn check_same_grid(f: &CircleDiffeo, g: &CircleDiffeo) -> Result<()> {
    if f.lift.len() != g.lift.len() {
        return Err(Error::input("C¹ distance between maps on different grids"));
    }
    Ok(())
}

/// `sup_x d_{S¹}(f(x), g(x)) + sup_x |Df(x) − Dg(x)|` over the grid.
pub fn c1_distance(f: &CircleDiffeo, g: &CircleDiffeo) -> Result<f64> {
    check_same_grid(f, g)?;
    let c0 = f
        .lift
        .iter()
        .zip(&g.lift)
        .map(|(&u, &v)| circle_distance(u, v))
        .fold(0.0, f64::max);
    let c1 = f
        .deriv
        .iter()
        .zip(&g.deriv)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    Ok(c0 + c1)
}

/// `d_x(f, g) = d_{S¹}(f(x), g(x)) + |Df(x) − Dg(x)|` at grid point `i`.
pub fn c1_distance_at(i: usize, f: &CircleDiffeo, g: &CircleDiffeo) -> Result<f64> {
    check_same_grid(f, g)?;
    if i >= f.lift.len() {
        return Err(Error::input(format!("grid index {i} out of range")));
    }
    Ok(circle_distance(f.lift[i], g.lift[i]) + (f.deriv[i] - g.deriv[i]).abs())
}

/// A homomorphism `G → Diff¹₊(S¹)` given on generators.
#[derive(Clone, Debug)]
pub struct ActionSpec {
    group: GroupSpec,
    grid: Grid,
    /// Indexed by [`Gen::position`].
    assignment: Vec<CircleDiffeo>,
    warnings: Vec<String>,
}

impl ActionSpec {
    /// Action from one diffeomorphism per generator `a, b, …`; inverses are
    /// computed.
    pub fn new(group: GroupSpec, generators: Vec<CircleDiffeo>) -> Result<Self> {
        if generators.len() != group.rank() {
            return Err(Error::input(format!(
                "expected {} generator maps, got {}",
                group.rank(),
                generators.len()
            )));
        }
        let mut assignment = Vec::with_capacity(group.num_generators());
        for f in generators {
            let inv = f.invert()?;
            assignment.push(f);
            assignment.push(inv);
        }
        Self::with_assignment(group, assignment)
    }

    /// Action from maps for every element of `S`, in the order `a, A, b, B, …`.
    pub fn with_assignment(group: GroupSpec, assignment: Vec<CircleDiffeo>) -> Result<Self> {
        if assignment.len() != group.num_generators() {
            return Err(Error::input(format!(
                "expected {} maps (one per element of S), got {}",
                group.num_generators(),
                assignment.len()
            )));
        }
        let grid = assignment[0].grid();
        if assignment.iter().any(|f| f.grid() != grid) {
            return Err(Error::input("all generator maps must share one grid"));
        }
        let tau = grid.tau_diffeo();
        let identity = CircleDiffeo::identity(grid);
        let mut warnings = Vec::new();
        fn complain(warnings: &mut Vec<String>, user: bool, msg: String) -> Result<()> {
            if user {
                warnings.push(msg);
                Ok(())
            } else {
                Err(Error::input(msg))
            }
        }
        for s in group.generators().into_iter().filter(|s| !s.is_inverse()) {
            let f = &assignment[s.position()];
            let g = &assignment[s.inverse().position()];
            let user = f.is_user_sampled() || g.is_user_sampled();
            let defect = c1_distance(&f.compose(g)?, &identity)?;
            if defect > tau {
                complain(
                    &mut warnings,
                    user,
                    format!("maps for {s} and {} are not inverse (C¹ defect {defect:.3e} > {tau:.3e})", s.inverse()),
                )?;
            }
            for d in [f, g] {
                if d.is_user_sampled() {
                    let c = d.derivative_consistency();
                    if c > tau {
                        warnings.push(format!(
                            "derivative samples for {s} deviate from lift differences by {c:.3e}"
                        ));
                    }
                }
            }
        }
        if group.family() == Family::FreeAbelian {
            let gens = group.generators();
            for (i, &s) in gens.iter().enumerate() {
                for &t in &gens[i + 1..] {
                    if s.index() == t.index() {
                        continue;
                    }
                    let f = &assignment[s.position()];
                    let g = &assignment[t.position()];
                    let defect = c1_distance(&f.compose(g)?, &g.compose(f)?)?;
                    if defect > tau {
                        complain(
                            &mut warnings,
                            f.is_user_sampled() || g.is_user_sampled(),
                            format!("maps for {s} and {t} do not commute (C¹ defect {defect:.3e} > {tau:.3e})"),
                        )?;
                    }
                }
            }
        }
        Ok(ActionSpec {
            group,
            grid,
            assignment,
            warnings,
        })
    }

    /// Every generator acts by a rotation.
    pub fn rotations(group: GroupSpec, grid: Grid, thetas: &[f64]) -> Result<Self> {
        Self::new(
            group,
            thetas.iter().map(|&t| CircleDiffeo::rotation(grid, t)).collect(),
        )
    }

    /// Generator `i` acts by `x ↦ x + θ_i + (a/2π) sin 2πx`.
    pub fn sine_perturbed(group: GroupSpec, grid: Grid, thetas: &[f64], a: f64) -> Result<Self> {
        Self::new(
            group,
            thetas
                .iter()
                .map(|&t| CircleDiffeo::sine_perturbed(grid, t, a))
                .collect::<Result<_>>()?,
        )
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn generator(&self, s: Gen) -> &CircleDiffeo {
        &self.assignment[s.position()]
    }

    pub fn assignment(&self) -> &[CircleDiffeo] {
        &self.assignment
    }

    /// `Φ_g = Φ_{s₁} ∘ … ∘ Φ_{s_m}` for `g = s₁…s_m`.
    pub fn act(&self, g: &Word) -> Result<CircleDiffeo> {
        if g.spec() != self.group {
            return Err(Error::input(format!("word {g} is not in the acting group")));
        }
        let mut letters = g.letters().iter().rev();
        let mut acc = match letters.next() {
            None => return Ok(CircleDiffeo::identity(self.grid)),
            Some(&s) => self.generator(s).clone(),
        };
        for &s in letters {
            acc = self.generator(s).compose(&acc)?;
        }
        Ok(acc)
    }

    /// Same action on another grid.
    pub fn resample(&self, grid: Grid) -> Result<Self> {
        Self::with_assignment(
            self.group,
            self.assignment.iter().map(|f| f.resample(grid)).collect(),
        )
    }
}

/// Memoised evaluation of `g ↦ Φ_g`, built through suffixes so that every
/// outer factor is a generator map.
pub struct Orbit<'a> {
    action: &'a ActionSpec,
    cache: Mutex<HashMap<Word, Arc<CircleDiffeo>>>,
}

impl<'a> Orbit<'a> {
    pub fn new(action: &'a ActionSpec) -> Self {
        Orbit {
            action,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn action(&self) -> &'a ActionSpec {
        self.action
    }

    pub fn phi(&self, g: &Word) -> Result<Arc<CircleDiffeo>> {
        if g.spec() != self.action.group {
            return Err(Error::input(format!("word {g} is not in the acting group")));
        }
        if let Some(hit) = self.cache.lock().unwrap().get(g) {
            return Ok(hit.clone());
        }
        // longest cached suffix, then extend leftwards
        let letters = g.letters();
        let mut start = letters.len();
        let mut acc: Option<Arc<CircleDiffeo>> = None;
        {
            let cache = self.cache.lock().unwrap();
            for cut in 1..=letters.len() {
                let suffix = g.spec().reduce(&letters[cut..])?;
                if let Some(hit) = cache.get(&suffix) {
                    start = cut;
                    acc = Some(hit.clone());
                    break;
                }
            }
        }
        let mut acc = match acc {
            Some(a) => a,
            None => Arc::new(CircleDiffeo::identity(self.action.grid)),
        };
        for cut in (0..start).rev() {
            let s = letters[cut];
            let next = Arc::new(self.action.generator(s).compose(&acc)?);
            let suffix = g.spec().reduce(&letters[cut..])?;
            self.cache.lock().unwrap().insert(suffix, next.clone());
            acc = next;
        }
        Ok(acc)
    }
}

/// Configuration form of a diffeomorphism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffeoSpec {
    Rotation { theta: f64 },
    Sine { theta: f64, a: f64 },
    Samples { lift: Vec<f64>, deriv: Vec<f64> },
    /// `of[0] ∘ of[1] ∘ …`
    Compose { of: Vec<DiffeoSpec> },
}

impl DiffeoSpec {
    pub fn build(&self, grid: Grid) -> Result<CircleDiffeo> {
        match self {
            DiffeoSpec::Rotation { theta } => Ok(CircleDiffeo::rotation(grid, *theta)),
            DiffeoSpec::Sine { theta, a } => CircleDiffeo::sine_perturbed(grid, *theta, *a),
            DiffeoSpec::Samples { lift, deriv } => {
                if lift.len() != grid.len() {
                    return Err(Error::input(format!(
                        "sampled map has {} points but the grid has {}",
                        lift.len(),
                        grid.len()
                    )));
                }
                CircleDiffeo::from_samples(lift.clone(), deriv.clone())
            }
            DiffeoSpec::Compose { of } => {
                let mut parts = of.iter().rev();
                let mut acc = parts
                    .next()
                    .ok_or_else(|| Error::input("compose needs at least one map"))?
                    .build(grid)?;
                for p in parts {
                    acc = p.build(grid)?.compose(&acc)?;
                }
                Ok(acc)
            }
        }
    }

    /// Rotation angle of the isometry this map perturbs.
    pub fn base_rotation(&self) -> Option<f64> {
        match self {
            DiffeoSpec::Rotation { theta } | DiffeoSpec::Sine { theta, .. } => Some(*theta),
            DiffeoSpec::Compose { of } => of.iter().map(|d| d.base_rotation()).sum(),
            DiffeoSpec::Samples { .. } => None,
        }
    }
}
