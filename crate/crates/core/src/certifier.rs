//! Verdicts and reports built on the lower modules.
//!
//! A certificate compares `avg_h_sq = (1/#S) Σ_s H(ν, s_*ν)²` with `λ₁/2`.
//! Only exact or externally certified `λ₁` values are accepted, and the
//! margin must exceed a slack `δ = 1e−6 + |avg_N − avg_{N/2}|`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::circle::{c1_distance_at, ActionSpec, Grid};
use crate::error::{Error, Result};
use crate::group::{GroupSpec, Kernel, Word};
use crate::measures::{avg_hellinger_sq, integrate, GridFunction, GridMeasure, MeasuredAction};
use crate::module_rep::{
    apply_pi, rho_bounds_series, scalar_inner, verify_witness_with, witness_defect, ModuleVector,
    UNIT_NORM_TOL,
};
use crate::spectral::{rayleigh_quotient, Lambda1Value};

/// Tolerances used by the verdicts and the replay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Fixed part of the certification slack.
    pub delta_base: f64,
    /// The `ψ` matrix must have no eigenvalue below `−psd`.
    pub psd: f64,
    /// Allowed deviation of `‖η‖` from 1.
    pub eta_norm: f64,
    /// Numerical slack in the replayed inequalities.
    pub chain: f64,
    /// Pointwise tolerance for `⟨ξ, ξ⟩ = 1`.
    pub unit_norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            delta_base: 1e-6,
            psd: 1e-8,
            eta_norm: 1e-6,
            chain: 1e-6,
            unit_norm: UNIT_NORM_TOL,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("delta_base", self.delta_base),
            ("psd", self.psd),
            ("eta_norm", self.eta_norm),
            ("chain", self.chain),
            ("unit_norm", self.unit_norm),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A `λ₁` value allowed to enter a verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CertifiableLambda1(Lambda1Value);

impl CertifiableLambda1 {
    pub fn new(value: Lambda1Value) -> Result<Self> {
        if !value.is_sound() {
            return Err(Error::Policy(
                "estimates cannot certify: λ₁ must be exact or a certified lower bound".into(),
            ));
        }
        Ok(CertifiableLambda1(value))
    }

    pub fn value(&self) -> f64 {
        self.0.value
    }

    pub fn inner(&self) -> &Lambda1Value {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedNotAmenable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub verdict: Verdict,
    pub route: &'static str,
    pub avg_h_sq: f64,
    /// Same quantity on the grid of half the size.
    pub avg_h_sq_coarse: f64,
    pub lambda1: CertifiableLambda1,
    pub threshold: f64,
    pub margin: f64,
    pub delta_cert: f64,
    pub grid_n: usize,
    pub group: GroupSpec,
}

fn verdict_for(lambda1: &CertifiableLambda1, margin: f64, delta: f64) -> Verdict {
    if lambda1.value() > 0.0 && margin > delta {
        Verdict::CertifiedNotAmenable
    } else {
        Verdict::Inconclusive
    }
}

fn half_grid(grid: Grid) -> Result<Grid> {
    Grid::new(grid.len() / 2)
        .map_err(|_| Error::input("grid too small to estimate the quadrature error"))
}

fn report(
    route: &'static str,
    action: &ActionSpec,
    fine: f64,
    coarse: f64,
    lambda1: &Lambda1Value,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    let lambda1 = CertifiableLambda1::new(lambda1.clone())?;
    let delta_cert = tol.delta_base + (fine - coarse).abs();
    let threshold = lambda1.value() / 2.0;
    let margin = threshold - fine;
    Ok(CertificateReport {
        verdict: verdict_for(&lambda1, margin, delta_cert),
        route,
        avg_h_sq: fine,
        avg_h_sq_coarse: coarse,
        lambda1,
        threshold,
        margin,
        delta_cert,
        grid_n: action.grid().len(),
        group: action.group(),
    })
}

/// Certificate from `(1/#S) Σ_s H(ν, s_*ν)² < λ₁/2`.
pub fn certify_hellinger(
    action: &ActionSpec,
    nu: &GridMeasure,
    lambda1: &Lambda1Value,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    CertifiableLambda1::new(lambda1.clone())?;
    let fine = avg_hellinger_sq(action, nu)?;
    let coarse_grid = half_grid(action.grid())?;
    let coarse = avg_hellinger_sq(&action.resample(coarse_grid)?, &nu.resample(coarse_grid)?)?;
    report("hellinger", action, fine, coarse, lambda1, tol)
}

/// `1 − (1/#S) Σ_s ∫ √(Dφ_s) dx`.
pub fn generator_derivative_defect(action: &ActionSpec) -> Result<f64> {
    let leb = GridMeasure::lebesgue(action.grid());
    let gens = action.group().generators();
    let mut beta = 0.0;
    for &s in &gens {
        let d = GridFunction::new(action.grid(), action.generator(s).deriv().to_vec())?;
        beta += integrate(&d.map(f64::sqrt), &leb)?;
    }
    Ok(1.0 - beta / gens.len() as f64)
}

/// Certificate from `1 − (1/#S) Σ_s ∫ √(Dφ_s) dx < λ₁/2` (Lebesgue measure).
pub fn certify_generator_derivative(
    action: &ActionSpec,
    lambda1: &Lambda1Value,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    CertifiableLambda1::new(lambda1.clone())?;
    let fine = generator_derivative_defect(action)?;
    let coarse = generator_derivative_defect(&action.resample(half_grid(action.grid())?)?)?;
    report("generator_derivative", action, fine, coarse, lambda1, tol)
}

/// Integrals of the truncated `ρ̄_R`, `ρ̲_R` for `R = 0..=R_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvidenceReport {
    pub radii: Vec<usize>,
    pub sup_integrals: Vec<f64>,
    pub inf_integrals: Vec<f64>,
    pub sup_bounded_hint: bool,
    pub inf_positive_hint: bool,
    pub grid_n: usize,
}

/// Values considered by the hints: the last three of the series.
fn tail(values: &[f64]) -> &[f64] {
    &values[values.len().saturating_sub(3)..]
}

pub fn evidence_theorem2(m: &MeasuredAction, r_max: usize) -> Result<EvidenceReport> {
    let nu = m.measure();
    let mut sup_integrals = Vec::with_capacity(r_max + 1);
    let mut inf_integrals = Vec::with_capacity(r_max + 1);
    for (hi, lo) in rho_bounds_series(m, r_max)? {
        sup_integrals.push(integrate(&hi, nu)?);
        inf_integrals.push(integrate(&lo, nu)?);
    }
    let last_inf = tail(&inf_integrals);
    let spread = last_inf.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - last_inf.iter().copied().fold(f64::INFINITY, f64::min);
    let inf_positive_hint = *inf_integrals.last().unwrap() >= 0.1 && spread < 1e-3;
    let sup_bounded_hint = tail(&sup_integrals)
        .windows(2)
        .all(|w| w[1] / w[0] - 1.0 < 1e-3);
    Ok(EvidenceReport {
        radii: (0..=r_max).collect(),
        sup_integrals,
        inf_integrals,
        sup_bounded_hint,
        inf_positive_hint,
        grid_n: m.grid().len(),
    })
}

/// An arc `[start, start + length)` of the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub start: f64,
    pub length: f64,
}

impl Arc {
    pub fn indices(&self, grid: Grid) -> Result<Vec<usize>> {
        if !(self.length > 0.0) || !self.start.is_finite() || !self.length.is_finite() {
            return Err(Error::input("arc must have positive length"));
        }
        let idx: Vec<usize> = (0..grid.len())
            .filter(|&i| (grid.point(i) - self.start).rem_euclid(1.0) < self.length)
            .collect();
        if idx.is_empty() {
            return Err(Error::input("arc contains no grid points"));
        }
        Ok(idx)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NearIsometryReport {
    pub radius: usize,
    pub arc: Arc,
    pub arc_points: usize,
    /// `max_{g∈B_R, x∈U} d_x(φ_g, î_g)`.
    pub c_r: f64,
    pub worst_word: Word,
    pub criterion_met: bool,
    /// `1 − C_R` when the criterion is met.
    pub implied_derivative_lower_bound: Option<f64>,
    /// `min_{g∈B_R, x∈U} Dφ_g(x)`.
    pub measured_inf_derivative: f64,
    /// `∫_U ρ̲_R dν`.
    pub inf_rho_integral_on_arc: f64,
    /// `(1 − C_R)·ν(U)` when the criterion is met.
    pub implied_integral_lower_bound: Option<f64>,
    pub grid_n: usize,
}

/// Compares `φ_g` with the rotation action `î_g` on the arc `U`.
pub fn near_isometry_check(
    m: &MeasuredAction,
    comparison: &ActionSpec,
    arc: Arc,
    radius: usize,
) -> Result<NearIsometryReport> {
    let action = m.action();
    if comparison.group() != action.group() || comparison.grid() != action.grid() {
        return Err(Error::input("comparison action must share group and grid"));
    }
    if comparison.assignment().iter().any(|f| !f.is_rotation()) {
        return Err(Error::input("comparison action must act by rotations"));
    }
    let grid = action.grid();
    let idx = arc.indices(grid)?;
    let ball = action.group().ball(radius)?;
    let reference = crate::circle::Orbit::new(comparison);
    let mut c_r = 0.0f64;
    let mut worst_word = action.group().identity();
    let mut inf_deriv = f64::INFINITY;
    let mut lo = GridFunction::constant(grid, f64::INFINITY);
    for g in ball.elements() {
        let phi = m.phi(g)?;
        let iso = reference.phi(g)?;
        for &i in &idx {
            let d = c1_distance_at(i, &phi, &iso)?;
            if d > c_r {
                c_r = d;
                worst_word = g.clone();
            }
            inf_deriv = inf_deriv.min(phi.deriv()[i]);
        }
        lo = lo.zip_with(&*m.rho(g)?, f64::min)?;
    }
    let mask = GridFunction::new(
        grid,
        (0..grid.len())
            .map(|i| if idx.binary_search(&i).is_ok() { 1.0 } else { 0.0 })
            .collect(),
    )?;
    let nu = m.measure();
    let inf_rho_integral_on_arc = integrate(&lo.zip_with(&mask, |a, b| a * b)?, nu)?;
    let arc_mass = integrate(&mask, nu)?;
    let criterion_met = c_r < 1.0;
    Ok(NearIsometryReport {
        radius,
        arc,
        arc_points: idx.len(),
        c_r,
        worst_word,
        criterion_met,
        implied_derivative_lower_bound: criterion_met.then(|| 1.0 - c_r),
        measured_inf_derivative: inf_deriv,
        inf_rho_integral_on_arc,
        implied_integral_lower_bound: criterion_met.then(|| (1.0 - c_r) * arc_mass),
        grid_n: grid.len(),
    })
}

/// The inequality chain behind the certificate, evaluated on one field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplayReport {
    pub radius: usize,
    pub ball_size: usize,
    /// `ψ_g = ⟨π_gξ, ξ⟩` on its support.
    pub psi: BTreeMap<Word, f64>,
    pub psi_support_radius: usize,
    pub psi_asymmetry: f64,
    pub min_eigenvalue: f64,
    pub psd_tol: f64,
    pub eta_norm: f64,
    pub eta_norm_ok: bool,
    /// `⟨η, s·η⟩` per generator.
    pub eta_overlaps: BTreeMap<Word, f64>,
    /// `max_s |⟨η, s·η⟩ − ψ_s|`.
    pub tau_trunc: f64,
    pub rayleigh: f64,
    pub lambda1: Lambda1Value,
    pub rayleigh_at_least_lambda1: bool,
    /// Defect of condition (c), recomputed.
    pub epsilon_measured: f64,
    pub avg_h_sq: f64,
    pub beta: f64,
    /// `max_s sup_x ρ_s^{1/2}`.
    pub sqrt_rho_max: f64,
    pub mean_psi: f64,
    /// `β(1 − ε)`.
    pub chain_product: f64,
    /// `β − ε·max_s sup ρ_s^{1/2}`, a lower bound for `mean_psi`.
    pub chain_lower_bound: f64,
    pub chain_holds: bool,
    /// `1 − mean_psi` against `(λ₁ − 2·avg_h_sq)/2 − τ_trunc`.
    pub contrapositive_lhs: f64,
    pub contrapositive_rhs: f64,
    pub contrapositive_holds: bool,
    pub grid_n: usize,
}

/// Builds `ψ`, its convolution matrix on `B_R`, the square root and `η`,
/// and evaluates every inequality on the way.
pub fn replay_theorem3(
    m: &MeasuredAction,
    xi: &ModuleVector,
    radius: usize,
    lambda1: &Lambda1Value,
    tol: &Tolerances,
) -> Result<ReplayReport> {
    let spec = m.action().group();
    if xi.spec() != spec || xi.grid() != m.grid() {
        return Err(Error::input("field does not match the action"));
    }
    if xi.is_empty() {
        return Err(Error::input("field has empty support"));
    }
    let check = verify_witness_with(xi, m.orbit(), 1.0, tol.unit_norm)?;
    if !check.is_valid_field() {
        return Err(Error::input(format!(
            "field is not admissible: nonnegative = {}, unit norm = {} (defect {:.3e})",
            check.nonnegative, check.unit_norm, check.norm_defect
        )));
    }
    let spread = xi.support_spread()?;
    if radius < spread {
        return Err(Error::input(format!(
            "radius {radius} is below the support radius {spread} of ψ"
        )));
    }
    let nu = m.measure();

    let support: Vec<&Word> = xi.support().collect();
    let mut candidates = std::collections::BTreeSet::new();
    for k in &support {
        for k2 in &support {
            candidates.insert(spec.mul(k2, &spec.inv(k)?)?);
        }
    }
    let mut psi = BTreeMap::new();
    for g in candidates {
        let value = scalar_inner(&apply_pi(m, &g, xi)?, xi, nu)?;
        psi.insert(g, value);
    }
    let psi_at = |g: &Word| psi.get(g).copied().unwrap_or(0.0);

    let ball = spec.ball(radius)?;
    let n = ball.len();
    let elements = ball.elements();
    let inverses: Vec<Word> = elements.iter().map(|g| spec.inv(g)).collect::<Result<_>>()?;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] = psi_at(&spec.mul(&inverses[i], &elements[j])?);
        }
    }
    let psi_asymmetry = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (t[(i, j)] - t[(j, i)]).abs())
        .fold(0.0, f64::max);
    let sym = (&t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -tol.psd {
        return Err(Error::numeric(format!(
            "ψ matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e} < {:e}; refine the grid",
            -tol.psd
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    // column of V·diag(√Λ)·Vᵀ at the identity (index 0)
    let weights: Vec<f64> = (0..n).map(|k| roots[k] * v[(0, k)]).collect();
    let eta_values: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| v[(i, k)] * weights[k]).sum())
        .collect();
    let eta = Kernel::from_pairs(spec, elements.iter().cloned().zip(eta_values))?;
    let eta_norm = eta.norm_sq().sqrt();

    let gens = spec.generators();
    let mut eta_overlaps = BTreeMap::new();
    let mut tau_trunc = 0.0f64;
    let mut mean_psi = 0.0;
    let mut sqrt_rho_max = 0.0f64;
    for &s in &gens {
        let w = spec.generator(s)?;
        let overlap = eta.inner(&eta.translate_gen(s));
        tau_trunc = tau_trunc.max((overlap - psi_at(&w)).abs());
        mean_psi += psi_at(&w);
        sqrt_rho_max = sqrt_rho_max.max(m.rho(&w)?.max().sqrt());
        eta_overlaps.insert(w, overlap);
    }
    mean_psi /= gens.len() as f64;
    let rayleigh = rayleigh_quotient(&eta)?;

    let epsilon_measured = witness_defect(m.orbit(), xi)?;
    let avg = m.avg_hellinger_sq()?;
    let beta = 1.0 - avg;
    let chain_lower_bound = beta - epsilon_measured * sqrt_rho_max;
    let contrapositive_lhs = 1.0 - mean_psi;
    let contrapositive_rhs = (lambda1.value - 2.0 * avg) / 2.0 - tau_trunc;
    Ok(ReplayReport {
        radius,
        ball_size: n,
        psi_support_radius: spread,
        psi,
        psi_asymmetry,
        min_eigenvalue,
        psd_tol: -tol.psd,
        eta_norm,
        eta_norm_ok: (eta_norm - 1.0).abs() <= tol.eta_norm,
        eta_overlaps,
        tau_trunc,
        rayleigh,
        lambda1: lambda1.clone(),
        rayleigh_at_least_lambda1: rayleigh >= lambda1.value - 1e-9,
        epsilon_measured,
        avg_h_sq: avg,
        beta,
        sqrt_rho_max,
        mean_psi,
        chain_product: beta * (1.0 - epsilon_measured),
        chain_lower_bound,
        chain_holds: mean_psi >= chain_lower_bound - tol.chain,
        contrapositive_lhs,
        contrapositive_rhs,
        contrapositive_holds: contrapositive_lhs >= contrapositive_rhs - tol.chain,
        grid_n: m.grid().len(),
    })
}

/// One row of a margin sweep over the perturbation amplitude.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub avg_h_sq: f64,
    pub margin: f64,
    pub delta_cert: f64,
    pub verdict: Verdict,
}

/// Certificates for `x ↦ x + θ_i + (a/2π) sin 2πx` over several `a`.
pub fn margin_sweep(
    group: GroupSpec,
    grid: Grid,
    thetas: &[f64],
    amplitudes: &[f64],
    lambda1: &Lambda1Value,
    tol: &Tolerances,
) -> Result<Vec<SweepRow>> {
    let nu = GridMeasure::lebesgue(grid);
    amplitudes
        .iter()
        .map(|&a| {
            let action = ActionSpec::sine_perturbed(group, grid, thetas, a)?;
            let r = certify_hellinger(&action, &nu, lambda1, tol)?;
            Ok(SweepRow {
                a,
                avg_h_sq: r.avg_h_sq,
                margin: r.margin,
                delta_cert: r.delta_cert,
                verdict: r.verdict,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{lambda1_exact, Lambda1Kind};

    #[test]
    fn estimates_are_rejected() {
        let est = Lambda1Value {
            value: 0.2,
            kind: Lambda1Kind::EstimateFromAbove { radius: 5 },
        };
        assert!(matches!(CertifiableLambda1::new(est.clone()), Err(Error::Policy(_))));
        let g = Grid::new(64).unwrap();
        let action = ActionSpec::rotations(GroupSpec::free(2), g, &[0.1, 0.2]).unwrap();
        let nu = GridMeasure::lebesgue(g);
        assert!(matches!(certify_hellinger(&action, &nu, &est, &Tolerances::default()), Err(Error::Policy(_))));
        assert!(matches!(certify_generator_derivative(&action, &est, &Tolerances::default()), Err(Error::Policy(_))));
    }

    #[test]
    fn rotations_certify_on_free_group() {
        let g = Grid::new(256).unwrap();
        let f2 = GroupSpec::free(2);
        let action = ActionSpec::rotations(f2, g, &[0.1, 0.2]).unwrap();
        let nu = GridMeasure::lebesgue(g);
        let r = certify_hellinger(&action, &nu, &lambda1_exact(f2).unwrap(), &Tolerances::default()).unwrap();
        assert_eq!(r.avg_h_sq, 0.0);
        assert_eq!(r.verdict, Verdict::CertifiedNotAmenable);
        assert!((r.margin - (1.0 - 3f64.sqrt() / 2.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn abelian_is_inconclusive() {
        let g = Grid::new(256).unwrap();
        let z2 = GroupSpec::free_abelian(2);
        let action = ActionSpec::rotations(z2, g, &[0.1, 0.2]).unwrap();
        let nu = GridMeasure::lebesgue(g);
        let r = certify_hellinger(&action, &nu, &lambda1_exact(z2).unwrap(), &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn evidence_for_invariant_measure() {
        let g = Grid::new(64).unwrap();
        let f2 = GroupSpec::free(2);
        let action = ActionSpec::rotations(f2, g, &[0.1, 0.2]).unwrap();
        let nu = GridMeasure::lebesgue(g);
        let m = MeasuredAction::new(&action, &nu).unwrap();
        let r = evidence_theorem2(&m, 3).unwrap();
        assert!(r.sup_integrals.iter().all(|&v| v == 1.0));
        assert!(r.inf_integrals.iter().all(|&v| v == 1.0));
        assert!(r.sup_bounded_hint && r.inf_positive_hint);
        let r0 = evidence_theorem2(&m, 0).unwrap();
        assert_eq!((r0.sup_integrals, r0.inf_integrals), (vec![1.0], vec![1.0]));
    }

    #[test]
    fn arcs() {
        let g = Grid::new(8).unwrap();
        let arc = Arc { start: 0.9, length: 0.25 };
        assert_eq!(arc.indices(g).unwrap(), vec![0, 7]);
        assert!(Arc { start: 0.0, length: 0.0 }.indices(g).is_err());
        assert!(Arc { start: 0.01, length: 0.05 }.indices(g).is_err());
    }

    #[test]
    fn replay_point_mass() {
        let g = Grid::new(64).unwrap();
        let f2 = GroupSpec::free(2);
        let action = ActionSpec::rotations(f2, g, &[0.1, 0.2]).unwrap();
        let nu = GridMeasure::lebesgue(g);
        let m = MeasuredAction::new(&action, &nu).unwrap();
        let xi = ModuleVector::from_entries(f2, g, [(f2.identity(), GridFunction::constant(g, 1.0))]).unwrap();
        let r = replay_theorem3(&m, &xi, 2, &lambda1_exact(f2).unwrap(), &Tolerances::default()).unwrap();
        assert_eq!(r.psi.len(), 1);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);
        assert!(r.eta_norm_ok);
        assert!((r.rayleigh - 2.0).abs() < 1e-12);
        assert!(r.rayleigh_at_least_lambda1 && r.contrapositive_holds && r.chain_holds);
        assert_eq!(r.epsilon_measured, 1.0);
    }
}
