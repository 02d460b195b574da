//! Eigenvalues and squared first eigenvector components of a symmetric
//! tridiagonal matrix, via implicit QL with Wilkinson-type shifts.
//!
//! Only the first row of the accumulated rotation product is tracked, which is
//! all a Gaussian quadrature rule needs, so the total cost is `O(k^2)`.

use crate::error::{Error, Result};
use crate::lanczos::Tridiagonal;

/// Eigenvalues `θ` ascending, and `d_j` = (first component of the j-th unit eigenvector)².
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFirstRow {
    eigenvalues: Vec<f64>,
    first_component_squared: Vec<f64>,
}

impl EigenFirstRow {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn first_component_squared(&self) -> &[f64] {
        &self.first_component_squared
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.eigenvalues, self.first_component_squared)
    }
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 30;

pub fn eig_first_row(t: &Tridiagonal) -> Result<EigenFirstRow> {
    let k = t.steps();
    let mut d = t.alphas().to_vec();
    // e[i] couples rows i and i+1; e[k-1] is scratch.
    let mut e = t.betas().to_vec();
    e.push(0.0);
    let mut z = vec![0.0; k];
    z[0] = 1.0;

    let limit = MAX_SWEEPS_PER_EIGENVALUE * k;
    let mut iterations = 0usize;
    for l in 0..k {
        loop {
            let mut m = l;
            while m + 1 < k {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > limit {
                return Err(Error::NoConvergence { iterations: limit });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|x| x * x)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if !(total.is_finite() && (total - 1.0).abs() < 1e-8) {
        return Err(Error::NoConvergence { iterations });
    }
    let (eigenvalues, first_component_squared) = pairs
        .into_iter()
        .map(|(theta, w)| (theta, w / total))
        .unzip();
    Ok(EigenFirstRow {
        eigenvalues,
        first_component_squared,
    })
}
