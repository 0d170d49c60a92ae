//! Bottom of the spectrum of the averaged Cayley-graph Laplacian.
//!
//! With `M = (1/#S) Σ_s L_s` the averaged left-translation operator on
//! `ℓ₂(G)`, `λ₁` is the bottom of the spectrum of `I − M`. For the free group
//! `F_k` this is `1 − √(2k−1)/k`; for `Z^d` it is `0`.
//!
//! [`rayleigh_quotient`] sums over ordered pairs `(s, g)`:
//! `(1/#S) Σ_{s,g} |f_g − f_{s⁻¹g}|² / Σ_g |f_g|²`, which equals
//! `2⟨f, (I − M)f⟩ / ⟨f, f⟩` and for unit `f` is `(2/#S) Σ_s (1 − ⟨f, s·f⟩)`.
//! Every Rayleigh quotient therefore dominates `λ₁`.
//!
//! Values are tagged with a [`Lambda1Kind`]. Only closed forms and certified
//! lower bounds may feed a certificate; Dirichlet truncations approach `λ₁`
//! from above and are estimates.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::eigen::{largest_eigenpair, EigenOptions};
use crate::error::{Error, Result};
use crate::group::{Family, GroupSpec, Kernel, Word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lambda1Kind {
    ExactClosedForm,
    CertifiedLowerBound { source: String },
    EstimateFromAbove { radius: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Value {
    pub value: f64,
    #[serde(flatten)]
    pub kind: Lambda1Kind,
}

impl Lambda1Value {
    /// A lower bound obtained elsewhere, carried with its provenance.
    pub fn certified_lower_bound(value: f64, source: impl Into<String>) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::input("certified lower bound must be a finite value ≥ 0"));
        }
        Ok(Lambda1Value {
            value,
            kind: Lambda1Kind::CertifiedLowerBound {
                source: source.into(),
            },
        })
    }

    pub fn is_sound(&self) -> bool {
        !matches!(self.kind, Lambda1Kind::EstimateFromAbove { .. })
    }
}

/// Closed-form `λ₁` of the built-in families.
pub fn lambda1_exact(spec: GroupSpec) -> Result<Lambda1Value> {
    let value = match spec.family() {
        Family::FreeAbelian => 0.0,
        Family::Free => {
            let k = spec.rank() as f64;
            1.0 - (2.0 * k - 1.0).sqrt() / k
        }
    };
    Ok(Lambda1Value {
        value,
        kind: Lambda1Kind::ExactClosedForm,
    })
}

/// `(1/#S) Σ_{s∈S, g∈G} |f_g − f_{s⁻¹g}|² / Σ_g |f_g|²`.
pub fn rayleigh_quotient(f: &Kernel) -> Result<f64> {
    let norm_sq = f.norm_sq();
    if !(norm_sq > 0.0) {
        return Err(Error::input("Rayleigh quotient of the zero kernel"));
    }
    let spec = f.spec();
    let gens = spec.generators();
    let mut total = 0.0;
    for &s in &gens {
        let shifted = f.translate_gen(s);
        let support: BTreeSet<&Word> = f.support().chain(shifted.support()).collect();
        total += support
            .into_iter()
            .map(|g| (f.get(g) - shifted.get(g)).powi(2))
            .sum::<f64>();
    }
    Ok(total / gens.len() as f64 / norm_sq)
}

/// `(2/#S) Σ_s (1 − ⟨f, s·f⟩)`; equals [`rayleigh_quotient`] for unit `f`.
pub fn translation_defect(f: &Kernel) -> f64 {
    let gens = f.spec().generators();
    let sum: f64 = gens
        .iter()
        .map(|&s| 1.0 - f.inner(&f.translate_gen(s)))
        .sum();
    2.0 * sum / gens.len() as f64
}

/// Smallest eigenvalue of `I − M` restricted to kernels supported in `B_R`
/// (zero boundary condition). Nonincreasing in `R` and never below `λ₁`.
pub fn lambda1_dirichlet(spec: GroupSpec, radius: usize) -> Result<Lambda1Value> {
    lambda1_dirichlet_with(spec, radius, EigenOptions::default())
}

pub(crate) fn lambda1_dirichlet_with(
    spec: GroupSpec,
    radius: usize,
    opts: EigenOptions,
) -> Result<Lambda1Value> {
    if radius == 0 {
        return Err(Error::input("Dirichlet truncation needs radius ≥ 1"));
    }
    let ball = spec.ball(radius)?;
    let table = ball.left_neighbors();
    let width = spec.num_generators();
    let scale = 1.0 / width as f64;
    let n = ball.len();
    let op = |x: &[f64], y: &mut [f64]| {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &table[i * width..(i + 1) * width];
            *yi = scale * row.iter().flatten().map(|&j| x[j]).sum::<f64>();
        }
    };
    let pair = largest_eigenpair(n, op, &vec![1.0; n], opts)?;
    Ok(Lambda1Value {
        value: (1.0 - pair.value).max(0.0),
        kind: Lambda1Kind::EstimateFromAbove { radius },
    })
}

/// `(R, λ₁ estimate)` for `R = 1..=r_max`.
pub fn lambda1_dirichlet_series(spec: GroupSpec, r_max: usize) -> Result<Vec<(usize, f64)>> {
    (1..=r_max)
        .map(|r| lambda1_dirichlet(spec, r).map(|v| (r, v.value)))
        .collect()
}

/// A finite set with its boundary-to-volume ratio.
#[derive(Clone, Debug, Serialize)]
pub struct CheegerCandidate {
    pub set: Vec<Word>,
    pub ratio: f64,
}

/// `#{(g, s) : g ∈ F, s·g ∉ F} / #F`; an upper bound for the Cheeger constant.
pub fn cheeger_ratio(set: &[Word], spec: GroupSpec) -> Result<CheegerCandidate> {
    let members: BTreeSet<Word> = set.iter().cloned().collect();
    if members.is_empty() {
        return Err(Error::input("Cheeger ratio of the empty set"));
    }
    if let Some(g) = members.iter().find(|g| g.spec() != spec) {
        return Err(Error::input(format!("{g} is not an element of {spec:?}")));
    }
    let gens = spec.generators();
    let exits = members
        .iter()
        .flat_map(|g| gens.iter().map(move |&s| (g, s)))
        .filter(|(g, s)| !members.contains(&spec.left_mul_gen(*s, g)))
        .count();
    Ok(CheegerCandidate {
        ratio: exits as f64 / members.len() as f64,
        set: members.into_iter().collect(),
    })
}

/// Indicator of the box `{0, …, n−1}^d` in `Z^d`.
pub fn box_indicator(spec: GroupSpec, n: usize) -> Result<Kernel> {
    let points = box_points(spec, n)?;
    Kernel::from_pairs(spec, points.into_iter().map(|g| (g, 1.0)))
}

/// Elements of the box `{0, …, n−1}^d` in `Z^d`.
pub fn box_points(spec: GroupSpec, n: usize) -> Result<Vec<Word>> {
    if spec.family() != Family::FreeAbelian {
        return Err(Error::input("boxes are defined for free abelian groups"));
    }
    if n == 0 {
        return Err(Error::input("box side must be ≥ 1"));
    }
    let d = spec.rank();
    let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > crate::group::max_ball_elements() as u128 {
        return Err(Error::Resource(format!("box with {total} points exceeds the cap")));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut exps = vec![0i64; d];
    for idx in 0..total as usize {
        let mut rem = idx;
        for e in exps.iter_mut() {
            *e = (rem % n) as i64;
            rem /= n;
        }
        out.push(spec.from_exponents(&exps)?);
    }
    Ok(out)
}
