//! Eigen-solver for real symmetric tridiagonal matrices.
//!
//! Eigenvalues come from Sturm-sequence bisection, so any subset (the k
//! lowest, or everything below an energy ceiling) costs O(n) per value.
//! Eigenvectors come from inverse iteration with a pivoted tridiagonal LU;
//! vectors whose eigenvalues are closer than `1e-3·‖T‖₁` are
//! re-orthogonalized against each other, following LAPACK `dstein`.

use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix stored by its two bands.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// Sub/super diagonal, `diag.len() - 1` entries.
    pub off: Vec<f64>,
}

/// Eigenpairs sorted by ascending eigenvalue; vectors have unit 2-norm
/// and their first significant component is positive.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

const MAX_INVERSE_ITERATIONS: usize = 10;
const CLUSTER_TOL: f64 = 1e-3;

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("empty tridiagonal matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidInput(format!(
                "off-diagonal length {} does not match dimension {}",
                off.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Max absolute column sum.
    pub fn norm1(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            let denom = if q == 0.0 { tiny } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.dim() {
            return Err(Error::InvalidInput(format!(
                "eigenvalue index {index} out of range for dimension {}",
                self.dim()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        lo -= 1e-12 * scale;
        hi += 1e-12 * scale;
        let tol = 4.0 * f64::EPSILON * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= tol || mid == lo || mid == hi {
                return Ok(mid);
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `y = T x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// The `k` lowest eigenpairs.
pub fn lowest(t: &SymTridiagonal, k: usize) -> Result<Eigenpairs> {
    if k == 0 || k > t.dim() {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs from a matrix of dimension {}",
            t.dim()
        )));
    }
    let values = (0..k).map(|i| t.eigenvalue(i)).collect::<Result<Vec<_>>>()?;
    let vectors = eigenvectors(t, &values)?;
    Ok(Eigenpairs { values, vectors })
}

/// All eigenpairs with eigenvalue strictly below `ceiling`.
pub fn below(t: &SymTridiagonal, ceiling: f64) -> Result<Eigenpairs> {
    let k = t.count_below(ceiling);
    if k == 0 {
        return Ok(Eigenpairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    lowest(t, k)
}

fn eigenvectors(t: &SymTridiagonal, values: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = t.dim();
    let norm = t.norm1().max(f64::MIN_POSITIVE);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    let residual_tol = 1e3 * (n as f64).sqrt() * f64::EPSILON * norm;

    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && (lambda - values[j - 1]).abs() > CLUSTER_TOL * norm {
            cluster_start = j;
        }
        if n == 1 {
            vectors.push(vec![1.0]);
            continue;
        }
        // Nudge exact repeats apart so the shifted solves differ.
        let shift = if j > cluster_start && lambda <= values[j - 1] {
            values[j - 1] + 10.0 * f64::EPSILON * norm
        } else {
            lambda
        };
        let lu = TridiagLu::factor(t, shift, norm);
        let mut x = start_vector(n, j);
        let mut residual = f64::INFINITY;
        let mut converged = false;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            let mut y = lu.solve(&x);
            for prev in &vectors[cluster_start..j] {
                let d = dot(prev, &y);
                for (yi, pi) in y.iter_mut().zip(prev) {
                    *yi -= d * pi;
                }
            }
            let nrm = dot(&y, &y).sqrt();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(Error::Numerical(format!(
                    "inverse iteration broke down for eigenvalue #{j} ({lambda:.6e})"
                )));
            }
            for yi in &mut y {
                *yi /= nrm;
            }
            let ty = t.matvec(&y);
            residual = ty
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            let done = converged;
            x = y;
            if done {
                break;
            }
            converged = residual <= residual_tol;
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "inverse iteration did not converge for eigenvalue #{j} ({lambda:.6e}) after \
                 {MAX_INVERSE_ITERATIONS} iterations, residual {residual:.3e} > {residual_tol:.3e}"
            )));
        }
        fix_sign(&mut x);
        vectors.push(x);
    }
    Ok(vectors)
}

fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    // Deterministic, well-spread start (LCG) so results are reproducible.
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (seed as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

/// First component above `1e-8·max|x|` made positive.
pub(crate) fn fix_sign(x: &mut [f64]) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-8 * max) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LU with partial pivoting of `T − σI` (LAPACK `dgttrf` layout).
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, shift: f64, norm: f64) -> Self {
        let n = t.dim();
        let mut dl = t.off.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let pivot_floor = f64::EPSILON * norm;

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = pivot_floor;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = pivot_floor;
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.dl[i] * x[i];
        }
        x[n - 1] /= self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let n = t.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = t.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = t.off[i];
                m[(i + 1, i)] = t.off[i];
            }
        }
        m
    }

    #[test]
    fn laplacian_matches_closed_form() {
        // tridiag(-1, 2, -1): λ_k = 2 − 2cos(kπ/(n+1)).
        let n = 50;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let pairs = lowest(&t, 5).unwrap();
        for (k, v) in pairs.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
            assert_abs_diff_eq!(*v, exact, epsilon = 1e-13);
        }
        for (k, vec) in pairs.vectors.iter().enumerate() {
            let r: f64 = t
                .matvec(vec)
                .iter()
                .zip(vec)
                .map(|(a, b)| (a - pairs.values[k] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-12, "residual {r}");
            assert!(vec.iter().find(|v| v.abs() > 1e-8).unwrap() > &0.0);
        }
    }

    #[test]
    fn agrees_with_dense_solver_on_random_matrix() {
        let n = 40;
        let diag: Vec<f64> = start_vector(n, 1).iter().map(|v| 10.0 * v).collect();
        let off: Vec<f64> = start_vector(n - 1, 2);
        let t = SymTridiagonal::new(diag, off).unwrap();
        let mut reference: Vec<f64> = dense(&t).symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ours = lowest(&t, n).unwrap();
        for (a, b) in ours.values.iter().zip(&reference) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-11);
        }
        for i in 0..n {
            for j in 0..n {
                let d = dot(&ours.vectors[i], &ours.vectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(d, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_blocks_give_orthogonal_vectors() {
        // Two decoupled identical blocks -> every eigenvalue doubly degenerate.
        let m = 20;
        let mut off = vec![-1.0; 2 * m - 1];
        off[m - 1] = 0.0;
        let t = SymTridiagonal::new(vec![2.0; 2 * m], off).unwrap();
        let pairs = lowest(&t, 6).unwrap();
        for i in 0..6 {
            for j in 0..i {
                assert!(dot(&pairs.vectors[i], &pairs.vectors[j]).abs() < 1e-9);
            }
        }
        assert_abs_diff_eq!(pairs.values[0], pairs.values[1], epsilon = 1e-12);
    }

    #[test]
    fn below_counts_with_sturm() {
        let n = 30;
        let t = SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let pairs = below(&t, 0.5).unwrap();
        let expected = (1..=n)
            .filter(|k| 2.0 - 2.0 * (*k as f64 * PI / (n + 1) as f64).cos() < 0.5)
            .count();
        assert_eq!(pairs.values.len(), expected);
        assert!(below(&t, -10.0).unwrap().values.is_empty());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymTridiagonal::new(vec![], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, f64::NAN], vec![0.0]).is_err());
        let t = SymTridiagonal::new(vec![1.0, 2.0], vec![0.5]).unwrap();
        assert!(lowest(&t, 0).is_err());
        assert!(lowest(&t, 3).is_err());
    }

    #[test]
    fn one_by_one() {
        let t = SymTridiagonal::new(vec![3.5], vec![]).unwrap();
        let p = lowest(&t, 1).unwrap();
        assert_abs_diff_eq!(p.values[0], 3.5, epsilon = 1e-14);
        assert_eq!(p.vectors[0], vec![1.0]);
    }
}
