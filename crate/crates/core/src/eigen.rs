//! Extreme eigenpairs of symmetric operators given as matrix-free products.
//!
//! Explicitly restarted Lanczos with full reorthogonalisation; the Ritz vector
//! of each cycle seeds the next one.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub(crate) struct EigenOptions {
    /// Required relative residual `‖Av − θv‖ ≤ tol·‖v‖`.
    pub tol: f64,
    /// Budget of operator applications.
    pub max_matvecs: usize,
    /// Krylov dimension per restart cycle.
    pub krylov_dim: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            max_matvecs: 10_000,
            krylov_dim: 40,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct EigenPair {
    pub value: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Algebraically largest eigenpair of the symmetric operator `op`.
pub(crate) fn largest_eigenpair<F>(
    n: usize,
    mut op: F,
    start: &[f64],
    opts: EigenOptions,
) -> Result<EigenPair>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if n == 0 {
        return Err(Error::input("eigenproblem of dimension 0"));
    }
    let mut v = start.to_vec();
    let nv = norm(&v);
    if !(nv > 0.0) {
        return Err(Error::input("zero start vector"));
    }
    v.iter_mut().for_each(|x| *x /= nv);

    let m = opts.krylov_dim.max(2).min(n);
    let mut matvecs = 0usize;
    let mut w = vec![0.0; n];
    let mut last_residual = f64::INFINITY;

    loop {
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        for j in 0..m {
            op(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let b = norm(&w);
            if j + 1 == m || b <= 1e-13 * a.abs().max(1.0) {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }

        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (top, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &x)| {
                if x > acc.1 {
                    (i, x)
                } else {
                    acc
                }
            });
        let y = eig.eigenvectors.column(top);
        let mut x = vec![0.0; n];
        for (q, &c) in basis.iter().zip(y.iter()) {
            x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += c * qi);
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|xi| *xi /= nx);

        op(&x, &mut w);
        matvecs += 1;
        let theta = dot(&x, &w);
        let residual = w
            .iter()
            .zip(&x)
            .map(|(wi, xi)| (wi - theta * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        last_residual = last_residual.min(residual);
        if residual <= opts.tol {
            return Ok(EigenPair {
                value: theta,
                residual,
            });
        }
        if matvecs >= opts.max_matvecs {
            return Err(Error::numeric(format!(
                "eigensolver did not converge within {} operator applications (best residual {:.3e}, required {:.1e})",
                opts.max_matvecs, last_residual, opts.tol
            )));
        }
        v = x;
    }
}
