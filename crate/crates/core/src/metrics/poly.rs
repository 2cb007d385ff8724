//! Degree-4 polynomial model: Horner evaluation and least-squares fitting.

// Dense matrix kernels read most clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const POLY_DEGREE: usize = 4;

/// Coefficients highest degree first: `[c4, c3, c2, c1, c0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyModel<F> {
    pub coeffs: [F; POLY_DEGREE + 1],
}

impl<F: Real> PolyModel<F> {
    pub fn new(coeffs: [F; POLY_DEGREE + 1]) -> Self {
        PolyModel { coeffs }
    }

    pub fn zero() -> Self {
        PolyModel { coeffs: [F::zero(); POLY_DEGREE + 1] }
    }

    /// Reference curve of mean super-scheduler misses against task count.
    pub fn reference_miss_curve() -> Self {
        PolyModel::new([-0.0001, 0.0044, -0.0558, 0.4663, -0.2284].map(F::lit))
    }

    pub fn eval(&self, x: F) -> F {
        poly_eval(self, x)
    }
}

pub fn poly_eval<F: Real>(m: &PolyModel<F>, x: F) -> F {
    m.coeffs.iter().fold(F::zero(), |acc, &c| acc * x + c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit<F> {
    pub model: PolyModel<F>,
    /// Sum of squared residuals.
    pub sse: F,
    pub max_abs_residual: F,
}

/// Least-squares fit of a degree-4 polynomial.
///
/// The abscissae are mapped onto `[-1, 1]`, the scaled Vandermonde system is
/// solved by Householder QR, and the solution is expanded back to the
/// monomial basis in `x`. One refinement pass refits the residuals of the
/// expanded polynomial to recover precision lost in the expansion.
pub fn poly_fit<F: Real>(points: &[(F, F)]) -> Result<PolyFit<F>> {
    const N: usize = POLY_DEGREE + 1;
    let mut xs: Vec<F> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite abscissae"));
    xs.dedup();
    if xs.len() < N {
        return Err(Error::Singular(format!("degree {POLY_DEGREE} fit needs {N} distinct x values, got {}", xs.len())));
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let two = F::lit(2.0);
    let center = (lo + hi) / two;
    let half = (hi - lo) / two;

    let rows: Vec<[F; N]> = points
        .iter()
        .map(|&(x, _)| {
            let s = (x - center) / half;
            let mut pw = [F::one(); N];
            for k in 1..N {
                pw[k] = pw[k - 1] * s;
            }
            pw
        })
        .collect();
    let qr = Qr::new(rows)?;

    let ys: Vec<F> = points.iter().map(|p| p.1).collect();
    let mut coeffs = expand(&qr.solve(&ys), center, half);
    let residuals: Vec<F> = points.iter().map(|&(x, y)| y - poly_eval(&PolyModel::new(coeffs), x)).collect();
    let correction = expand(&qr.solve(&residuals), center, half);
    for (c, d) in coeffs.iter_mut().zip(correction) {
        *c = *c + d;
    }
    let model = PolyModel::new(coeffs);

    let (mut sse, mut max_abs) = (F::zero(), F::zero());
    for &(x, y) in points {
        let r = poly_eval(&model, x) - y;
        sse = sse + r * r;
        max_abs = max_abs.max(r.abs());
    }
    Ok(PolyFit { model, sse, max_abs_residual: max_abs })
}

/// Expand `Σ a_k ((x - center)/half)^k` into monomial coefficients,
/// highest degree first.
fn expand<F: Real>(scaled: &[F; POLY_DEGREE + 1], center: F, half: F) -> [F; POLY_DEGREE + 1] {
    let mut ascending = [F::zero(); POLY_DEGREE + 1];
    for (k, &a) in scaled.iter().enumerate() {
        let factor = a / half.powi(k as i32);
        // (x - center)^k = Σ_j C(k, j) x^j (-center)^(k - j)
        let mut binom = F::one();
        for j in 0..=k {
            if j > 0 {
                binom = binom * F::lit((k - j + 1) as f64) / F::lit(j as f64);
            }
            ascending[j] = ascending[j] + factor * binom * (-center).powi((k - j) as i32);
        }
    }
    ascending.reverse();
    ascending
}

/// Householder QR of a tall `m x N` matrix, kept in factored form.
struct Qr<F, const N: usize> {
    /// Householder vectors below the diagonal, R on and above it.
    a: Vec<[F; N]>,
    /// Diagonal of R.
    diag: [F; N],
}

impl<F: Real, const N: usize> Qr<F, N> {
    fn new(mut a: Vec<[F; N]>) -> Result<Self> {
        let m = a.len();
        let mut diag = [F::zero(); N];
        let scale = a.iter().flat_map(|r| r.iter()).fold(F::zero(), |acc, v| acc.max(v.abs()));
        for k in 0..N {
            let norm = (k..m).fold(F::zero(), |acc, i| acc + a[i][k] * a[i][k]).sqrt();
            if norm <= F::epsilon() * F::lit(m as f64) * scale {
                return Err(Error::Singular("design matrix is rank deficient".into()));
            }
            let alpha = if a[k][k] > F::zero() { -norm } else { norm };
            a[k][k] = a[k][k] - alpha;
            let vnorm2 = (k..m).fold(F::zero(), |acc, i| acc + a[i][k] * a[i][k]);
            for j in k + 1..N {
                let dot = (k..m).fold(F::zero(), |acc, i| acc + a[i][k] * a[i][j]);
                let f = F::lit(2.0) * dot / vnorm2;
                for i in k..m {
                    a[i][j] = a[i][j] - f * a[i][k];
                }
            }
            diag[k] = alpha;
        }
        Ok(Qr { a, diag })
    }

    fn solve(&self, b: &[F]) -> [F; N] {
        let m = self.a.len();
        let mut b = b.to_vec();
        for k in 0..N {
            let vnorm2 = (k..m).fold(F::zero(), |acc, i| acc + self.a[i][k] * self.a[i][k]);
            let dot = (k..m).fold(F::zero(), |acc, i| acc + self.a[i][k] * b[i]);
            let f = F::lit(2.0) * dot / vnorm2;
            for i in k..m {
                b[i] = b[i] - f * self.a[i][k];
            }
        }
        let mut x = [F::zero(); N];
        for row in (0..N).rev() {
            let tail = (row + 1..N).fold(F::zero(), |acc, k| acc + self.a[row][k] * x[k]);
            x[row] = (b[row] - tail) / self.diag[row];
        }
        x
    }
}
