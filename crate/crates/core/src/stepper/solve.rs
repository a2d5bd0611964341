//! Truncated-SVD least squares and the Gram-matrix (natural-gradient) route.

use faer::{Mat, MatRef};

/// Minimum-norm least-squares step.
#[derive(Debug, Clone, PartialEq)]
pub struct LsSolution {
    pub delta: Vec<f64>,
    /// Number of singular values kept.
    pub rank: usize,
    pub sigma_max: f64,
    /// Every singular value was truncated; `delta` is zero.
    pub degenerate: bool,
}

impl LsSolution {
    fn zero(n: usize, sigma_max: f64) -> Self {
        Self {
            delta: vec![0.0; n],
            rank: 0,
            sigma_max,
            degenerate: true,
        }
    }
}

/// `x = V Σ⁺ Uᵀ b` for `A = U Σ Vᵀ`, dropping singular values below
/// `rtol · σ_max`.
///
/// Tall systems go through a Householder QR of `[A | b]`, which yields `R`
/// and `Qᵀb` together; the SVD then runs on the square `R`. Wide systems use
/// a thin SVD of `A` directly.
pub fn truncated_lstsq(a: MatRef<'_, f64>, b: &[f64], rtol: f64) -> LsSolution {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(b.len(), m, "right-hand side length must match rows");
    if n == 0 {
        return LsSolution::zero(0, 0.0);
    }
    if m >= n {
        let aug = Mat::<f64>::from_fn(m, n + 1, |i, j| if j < n { a[(i, j)] } else { b[i] });
        let qr = aug.qr();
        let r_full = qr.thin_R();
        let r = r_full.get(..n, ..n).to_owned();
        let qtb: Vec<f64> = (0..n).map(|i| r_full[(i, n)]).collect();
        match r.svd() {
            Ok(svd) => apply_pinv(svd.U(), svd.S().column_vector().iter().copied().collect(), svd.V(), &qtb, rtol),
            Err(_) => LsSolution::zero(n, f64::NAN),
        }
    } else {
        match a.thin_svd() {
            Ok(svd) => apply_pinv(svd.U(), svd.S().column_vector().iter().copied().collect(), svd.V(), b, rtol),
            Err(_) => LsSolution::zero(n, f64::NAN),
        }
    }
}

/// SVD of a least-squares system `A x ≈ b`, kept so several damping levels
/// can be tried against one factorization.
#[derive(Debug, Clone)]
pub struct LsFactors {
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// `Uᵀb` per singular value.
    coef: Vec<f64>,
    v: Mat<f64>,
}

impl LsFactors {
    /// Same QR-then-SVD route as [`truncated_lstsq`]; `None` if the SVD
    /// fails.
    pub fn new(a: MatRef<'_, f64>, b: &[f64]) -> Option<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        assert_eq!(b.len(), m, "right-hand side length must match rows");
        let project = |u: MatRef<'_, f64>, rhs: &[f64]| -> Vec<f64> {
            (0..u.ncols()).map(|k| (0..u.nrows()).map(|i| u[(i, k)] * rhs[i]).sum()).collect()
        };
        if m >= n {
            let aug = Mat::<f64>::from_fn(m, n + 1, |i, j| if j < n { a[(i, j)] } else { b[i] });
            let r_full = aug.qr().thin_R().to_owned();
            let r = r_full.get(..n, ..n).to_owned();
            let qtb: Vec<f64> = (0..n).map(|i| r_full[(i, n)]).collect();
            let svd = r.svd().ok()?;
            Some(Self {
                sigma: svd.S().column_vector().iter().copied().collect(),
                coef: project(svd.U(), &qtb),
                v: svd.V().to_owned(),
            })
        } else {
            let svd = a.thin_svd().ok()?;
            Some(Self {
                sigma: svd.S().column_vector().iter().copied().collect(),
                coef: project(svd.U(), b),
                v: svd.V().to_owned(),
            })
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }

    /// Levenberg-Marquardt step `Σ σ/(σ² + μσ_max²) (uᵀb) v` over singular
    /// values at or above `rtol · σ_max`.
    pub fn damped(&self, mu: f64, rtol: f64) -> Vec<f64> {
        let smax = self.sigma_max();
        let lambda = mu * smax * smax;
        let mut delta = vec![0.0; self.v.nrows()];
        for (k, &sk) in self.sigma.iter().enumerate() {
            if !(sk >= rtol * smax) || sk == 0.0 {
                continue;
            }
            let c = sk / (sk * sk + lambda) * self.coef[k];
            for (j, d) in delta.iter_mut().enumerate() {
                *d += self.v[(j, k)] * c;
            }
        }
        delta
    }
}

fn apply_pinv(u: MatRef<'_, f64>, s: Vec<f64>, v: MatRef<'_, f64>, b: &[f64], rtol: f64) -> LsSolution {
    let n = v.nrows();
    let sigma_max = s.iter().copied().fold(0.0_f64, f64::max);
    if !(sigma_max > 0.0) || !sigma_max.is_finite() {
        return LsSolution::zero(n, sigma_max);
    }
    let cutoff = rtol * sigma_max;
    let mut delta = vec![0.0; n];
    let mut rank = 0;
    for (k, &sk) in s.iter().enumerate() {
        if sk < cutoff {
            continue;
        }
        rank += 1;
        let mut coef = 0.0;
        for i in 0..u.nrows() {
            coef += u[(i, k)] * b[i];
        }
        coef /= sk;
        for (j, d) in delta.iter_mut().enumerate() {
            *d += v[(j, k)] * coef;
        }
    }
    LsSolution {
        delta,
        rank,
        sigma_max,
        degenerate: rank == 0,
    }
}

/// `Δθ = −G⁺ ∇L` with `G = AᵀA` and `∇L = −Aᵀb`, the natural-gradient form of
/// the same least-squares step.
///
/// Singular values of `G` are the squares of those of `A`, so they are cut at
/// `rtol² · σ_max(G)` to truncate the same directions as
/// [`truncated_lstsq`]. Squaring the condition number makes this route
/// unsuitable for production; it exists as a cross-check.
pub fn natural_gradient_lstsq(a: MatRef<'_, f64>, b: &[f64], rtol: f64) -> LsSolution {
    let n = a.ncols();
    let gram = a.transpose() * a;
    let mut grad = vec![0.0; n];
    for (j, g) in grad.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[i];
        }
        *g = -acc;
    }
    let svd = match gram.svd() {
        Ok(svd) => svd,
        Err(_) => return LsSolution::zero(n, f64::NAN),
    };
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut sol = apply_pinv(svd.U(), s, svd.V(), &neg_grad, rtol * rtol);
    sol.sigma_max = sol.sigma_max.sqrt();
    sol
}
