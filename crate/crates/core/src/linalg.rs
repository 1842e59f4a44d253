//! Dense complex matrices at fixed small dimension, a cyclic-Jacobi
//! Hermitian eigensolver, and a derivative-free multistart maximizer.
//!
//! Everything in the physics layers is 2-, 3-, or 4-dimensional, so the
//! matrix type is a plain row-major `Vec` with no sparsity or blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::sampling::substream;

/// Off-diagonal norm at which a Jacobi sweep is considered converged.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    NotHermitian,
    NotUnitary,
    DimensionMismatch,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotHermitian => write!(f, "matrix is not Hermitian within tolerance"),
            LinalgError::NotUnitary => write!(f, "matrix is not unitary within tolerance"),
            LinalgError::DimensionMismatch => write!(f, "matrix dimensions do not match"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from a row-major slice of entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        CMatrix {
            rows,
            cols,
            data: entries.to_vec(),
        }
    }

    /// Builds from a row-major slice of real entries.
    pub fn from_reals(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        CMatrix {
            rows,
            cols,
            data: entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Rank-1 outer product `v v†`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let p = &self.adjoint() * self;
        p.max_abs_diff(&CMatrix::identity(self.rows)) <= tol
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Quadratic form `v† M v`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        assert_eq!(v.len(), self.rows);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += v[i].conj() * self[(i, j)] * v[j];
            }
        }
        acc
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Kronecker product, `(m·p)×(n·q)`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Pauli matrices in the order (x, y, z).
pub fn pauli(axis: usize) -> CMatrix {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match axis {
        0 => CMatrix::from_rows(2, 2, &[z, one, one, z]),
        1 => CMatrix::from_rows(2, 2, &[z, -i, i, z]),
        2 => CMatrix::from_rows(2, 2, &[one, z, z, -one]),
        _ => panic!("pauli axis must be 0, 1 or 2"),
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order together with the matrix whose
/// columns are the matching orthonormal eigenvectors.
pub fn eig_hermitian(m: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    if !m.is_hermitian(1e-10) {
        return Err(LinalgError::NotHermitian);
    }
    let n = m.rows;
    let mut a = m.clone();
    // Symmetrize exactly so the sweeps cannot drift on the 1e-10 slack.
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= JACOBI_TOL * 1e-3 {
                    continue;
                }
                let u = apq / r; // unit phase of the pivot
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sc = u * s; // complex sine carrying the pivot phase

                // A <- J† A J with J the identity outside the (p,q) block,
                // J[p,p]=c, J[p,q]=sc, J[q,p]=-conj(sc), J[q,q]=c.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * sc.conj();
                    a[(i, q)] = aip * sc + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * sc;
                    a[(q, j)] = apj * sc.conj() + aqj * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * sc.conj();
                    v[(i, q)] = vip * sc + viq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_j)] = v[(i, old_j)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Optimizer knobs for [`local_search_max`].
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub restarts: usize,
    pub step_tolerance: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(max_iters: usize, restarts: usize, step_tolerance: f64, seed: u64) -> Self {
        assert!(max_iters >= 1 && restarts >= 1 && step_tolerance > 0.0);
        OptimizerConfig {
            max_iters,
            restarts,
            step_tolerance,
            seed,
        }
    }
}

/// Maximizes `f` with a Nelder-Mead simplex started from `x0` and from
/// `cfg.restarts - 1` uniform random points in `[-pi, pi]^n`; all objective
/// parametrizations in this crate are periodic or scale-free on that box.
///
/// Deterministic for a fixed seed. The best point over all restarts wins,
/// earliest restart breaking ties, so the result never falls below `f(x0)`.
pub fn local_search_max<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        let v = f(x0);
        return (Vec::new(), v);
    }
    let mut rng = substream(cfg.seed, &[0x6f70_7469_6d69_7a65]);
    let mut best_x = x0.to_vec();
    let mut best_f = f64::NEG_INFINITY;

    for restart in 0..cfg.restarts {
        let start: Vec<f64> = if restart == 0 {
            x0.to_vec()
        } else {
            (0..n)
                .map(|_| rng.gen_range(-core::f64::consts::PI..core::f64::consts::PI))
                .collect()
        };
        let (x, fx) = nelder_mead(&f, &start, cfg.max_iters, cfg.step_tolerance);
        if fx > best_f {
            best_f = fx;
            best_x = x;
        }
    }
    (best_x, best_f)
}

fn nelder_mead<F>(f: &F, x0: &[f64], max_iters: usize, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let neg = |x: &[f64]| -f(x);

    // Initial simplex: x0 plus one displaced vertex per coordinate.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1.0 { 0.1 * v[i].abs() } else { 0.1 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| neg(v)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        // Converged when both the simplex and the value spread collapse.
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(simplex[0].iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diameter < tol && (values[n] - values[0]).abs() < tol.max(1e-15) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = values[n];
        let second_worst = values[n - 1];
        let best = values[0];

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(simplex[n].iter())
            .map(|(c, w)| c + (c - w))
            .collect();
        let f_reflect = neg(&reflect);

        if f_reflect < best {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(simplex[n].iter())
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let f_expand = neg(&expand);
            if f_expand < f_reflect {
                simplex[n] = expand;
                values[n] = f_expand;
            } else {
                simplex[n] = reflect;
                values[n] = f_reflect;
            }
        } else if f_reflect < second_worst {
            simplex[n] = reflect;
            values[n] = f_reflect;
        } else {
            let (contract, f_contract) = if f_reflect < worst {
                let outside: Vec<f64> = centroid
                    .iter()
                    .zip(reflect.iter())
                    .map(|(c, r)| c + 0.5 * (r - c))
                    .collect();
                let v = neg(&outside);
                (outside, v)
            } else {
                let inside: Vec<f64> = centroid
                    .iter()
                    .zip(simplex[n].iter())
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect();
                let v = neg(&inside);
                (inside, v)
            };
            if f_contract < worst.min(f_reflect) {
                simplex[n] = contract;
                values[n] = f_contract;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=n {
                    let snew: Vec<f64> = simplex[i]
                        .iter()
                        .zip(simplex[0].iter())
                        .map(|(v, b)| b + 0.5 * (v - b))
                        .collect();
                    simplex[i] = snew;
                    values[i] = neg(&simplex[i]);
                }
            }
        }
    }

    let mut best_i = 0;
    for i in 1..=n {
        if values[i] < values[best_i] {
            best_i = i;
        }
    }
    (simplex[best_i].clone(), -values[best_i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identities() {
        let i2 = CMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), CMatrix::identity(4));

        let z = CMatrix::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let zz = kron(&z, &z);
        let expect = CMatrix::diag(&[c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(zz.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn kron_phase_flip_on_phi_minus() {
        // (sigma_z (x) I) |Phi-> = |Phi+> up to global phase.
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let phi_minus = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)];
        let op = kron(&pauli(2), &CMatrix::identity(2));
        let out = op.apply(&phi_minus);
        let phi_plus = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let overlap: Complex64 = phi_plus
            .iter()
            .zip(out.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_diagonal_sorted_descending() {
        let m = CMatrix::diag(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let (vals, _) = eig_hermitian(&m).unwrap();
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_pauli_x_spectrum() {
        let (vals, vecs) = eig_hermitian(&pauli(0)).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], -1.0, epsilon = 1e-12);
        assert!(vecs.is_unitary(1e-10));
    }

    #[test]
    fn eig_rank_one_projector() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let psi_plus = [c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)];
        let rho = CMatrix::outer(&psi_plus);
        let (vals, _) = eig_hermitian(&rho).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-10);
        for &v in &vals[1..] {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_rows(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(eig_hermitian(&m), Err(LinalgError::NotHermitian));
    }

    #[test]
    fn eig_reconstruction_random_hermitian() {
        let mut rng = substream(7, &[1]);
        for _ in 0..20 {
            let mut m = CMatrix::zeros(4, 4);
            for i in 0..4 {
                m[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
                for j in (i + 1)..4 {
                    let e = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[(i, j)] = e;
                    m[(j, i)] = e.conj();
                }
            }
            let (vals, vecs) = eig_hermitian(&m).unwrap();
            let d = CMatrix::diag(&vals.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>());
            let rebuilt = &(&vecs * &d) * &vecs.adjoint();
            assert!((&rebuilt - &m).frobenius_norm() < 1e-9);
            // Residual per eigenpair.
            for k in 0..4 {
                let v = vecs.column(k);
                let mv = m.apply(&v);
                let res: f64 = mv
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a - b * vals[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res < 1e-9);
            }
        }
    }

    #[test]
    fn optimizer_quadratic_1d() {
        let cfg = OptimizerConfig::new(500, 3, 1e-12, 42);
        let (x, fx) = local_search_max(|x| -(x[0] - 2.0) * (x[0] - 2.0), &[0.0], &cfg);
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fx, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn optimizer_quadratic_2d() {
        let cfg = OptimizerConfig::new(1000, 3, 1e-12, 42);
        let (_, fx) = local_search_max(|x| -x[0] * x[0] - x[1] * x[1], &[1.0, 1.0], &cfg);
        assert_abs_diff_eq!(fx, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn optimizer_deterministic_per_seed() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - (x[1] + 0.5).powi(2) + (3.0 * x[0]).sin() * 0.1;
        let cfg = OptimizerConfig::new(800, 10, 1e-10, 123);
        let a = local_search_max(f, &[0.0, 0.0], &cfg);
        let b = local_search_max(f, &[0.0, 0.0], &cfg);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn optimizer_never_below_start() {
        let f = |x: &[f64]| -(x[0].powi(2));
        let cfg = OptimizerConfig::new(5, 1, 1e-10, 0);
        let (_, fx) = local_search_max(f, &[0.3], &cfg);
        assert!(fx >= f(&[0.3]));
    }
}
