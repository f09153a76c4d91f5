//! Dense linear algebra on small matrices, root finding and fixed-step
//! integration.
//!
//! Matrices here are tiny (at most a few dozen rows), so everything favours
//! determinism over speed: the symmetric eigensolver is a cyclic Jacobi
//! sweep, finite-difference Jacobians use central differences and Newton
//! steps go through an SVD so rank loss is detected instead of silently
//! amplified.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Absolute eigenvalue tolerance used by PSD classification unless a caller
/// passes its own.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Largest accepted relative asymmetry `‖A − Aᵀ‖_F / ‖A‖_F`.
pub const SYMMETRY_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NonSymmetric { asymmetry: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Build a matrix from row vectors, rejecting ragged input and non-finite
/// entries.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(NumericsError::DimensionMismatch(
            "ragged rows in matrix literal".into(),
        ));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    checked(Matrix::from_row_slice(nrows, ncols, &flat))
}

/// Row-major nested vectors, the JSON representation of a matrix.
pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn checked(m: Matrix) -> Result<Matrix> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(m)
    } else {
        Err(NumericsError::NonFinite)
    }
}

pub fn checked_vec(v: Vector) -> Result<Vector> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(NumericsError::NonFinite)
    }
}

pub fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(values))
}

/// Relative asymmetry `‖A − Aᵀ‖_F / ‖A‖_F` (zero for the zero matrix).
pub fn asymmetry(a: &Matrix) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).norm() / norm
}

pub fn ensure_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let asym = asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(NumericsError::NonSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Spectral decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

impl EigenResult {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let lambda = diag(&self.eigenvalues);
        &self.eigenvectors * lambda * self.eigenvectors.transpose()
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn sym_eigen(a: &Matrix) -> Result<EigenResult> {
    ensure_symmetric(a)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let n = a.nrows();
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = Matrix::identity(n, n);
    let total = m.norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).clone_owned();
        // sign convention: largest-magnitude component positive
        let lead = col.iamax();
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
    NegativeDefinite,
    NegativeSemidefinite,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PsdReport {
    pub verdict: Definiteness,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub tol: f64,
}

impl PsdReport {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -self.tol
    }

    pub fn is_pd(&self) -> bool {
        self.min_eigenvalue > self.tol
    }

    pub fn is_nsd(&self) -> bool {
        self.max_eigenvalue <= self.tol
    }

    pub fn is_nd(&self) -> bool {
        self.max_eigenvalue < -self.tol
    }
}

/// Classify a symmetric matrix by its extreme eigenvalues against `±tol`.
///
/// A matrix that is both PSD and NSD within tolerance (the zero matrix) is
/// reported as `PositiveSemidefinite`; `PsdReport::is_nsd` still answers
/// true for it.
pub fn psd_check(a: &Matrix, tol: f64) -> Result<PsdReport> {
    let eig = sym_eigen(a)?;
    let (lo, hi) = (eig.min(), eig.max());
    let verdict = if lo > tol {
        Definiteness::PositiveDefinite
    } else if lo >= -tol {
        Definiteness::PositiveSemidefinite
    } else if hi < -tol {
        Definiteness::NegativeDefinite
    } else if hi <= tol {
        Definiteness::NegativeSemidefinite
    } else {
        Definiteness::Indefinite
    };
    Ok(PsdReport {
        verdict,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        tol,
    })
}

/// Symmetric PSD square root. Eigenvalues in `[-tol, 0)` are clamped to zero.
pub fn sym_sqrt_psd(a: &Matrix, tol: f64) -> Result<Matrix> {
    let eig = sym_eigen(a)?;
    if eig.min() < -tol {
        return Err(NumericsError::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(&eig.eigenvectors * diag(&roots) * eig.eigenvectors.transpose())
}

pub fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Number of singular values strictly above `tol`.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > tol).count()
}

/// Moore-Penrose pseudo-inverse with relative rank cutoff.
pub fn pseudo_inverse(a: &Matrix, rel_tol: f64) -> Matrix {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Matrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = rel_tol * smax.max(f64::MIN_POSITIVE);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let mut out = Matrix::zeros(a.ncols(), a.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

fn fd_step(xi: f64) -> f64 {
    (1e-6 * xi.abs()).max(1e-6)
}

/// Central-difference Jacobian with `h_i = max(1e-6, 1e-6·|x_i|)`.
pub fn fd_jacobian(f: &dyn Fn(&Vector) -> Vector, x: &Vector) -> Matrix {
    let f0 = f(x);
    let mut jac = Matrix::zeros(f0.len(), x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        jac.set_column(i, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient(f: &dyn Fn(&Vector) -> f64, x: &Vector) -> Vector {
    let mut g = Vector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Damped Newton iteration for a square system `F(x) = 0`.
///
/// Uses the analytic Jacobian when given, central differences otherwise.
/// Returns `x` with `‖F(x)‖₂ ≤ tol`.
pub fn newton_root(
    f: &dyn Fn(&Vector) -> Vector,
    jac: Option<&dyn Fn(&Vector) -> Matrix>,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<Vector> {
    let mut x = x0.clone();
    let mut r = checked_vec(f(&x))?;
    if r.len() != x.len() {
        return Err(NumericsError::DimensionMismatch(format!(
            "newton_root needs a square system, got {} equations in {} unknowns",
            r.len(),
            x.len()
        )));
    }
    for _ in 0..max_iter {
        let norm = r.norm();
        if norm <= tol {
            return Ok(x);
        }
        let j = match jac {
            Some(jf) => jf(&x),
            None => fd_jacobian(f, &x),
        };
        let sv = singular_values(&j);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        if !(smin > 1e-13 * smax) {
            return Err(NumericsError::SingularJacobian);
        }
        let dx = j
            .lu()
            .solve(&(-&r))
            .ok_or(NumericsError::SingularJacobian)?;
        (x, r) = backtrack(f, &x, &dx, norm)?;
    }
    let residual = r.norm();
    if residual <= tol {
        Ok(x)
    } else {
        Err(NumericsError::NoConvergence {
            iterations: max_iter,
            residual,
        })
    }
}

/// Minimum-norm Gauss-Newton projection onto `{x : F(x) = 0}` for an
/// underdetermined `F : ℝⁿ → ℝᵏ`, `k ≤ n`. Starting from `x0`, each step is
/// the least-norm correction `−J⁺F(x)`, so the result stays close to `x0`.
pub fn project_to_zero_set(
    f: &dyn Fn(&Vector) -> Vector,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<Vector> {
    let mut x = x0.clone();
    let mut r = checked_vec(f(&x))?;
    if r.is_empty() {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let norm = r.norm();
        if norm <= tol {
            return Ok(x);
        }
        let j = fd_jacobian(f, &x);
        if rank(&j, 1e-12 * j.norm().max(f64::MIN_POSITIVE)) < r.len() {
            return Err(NumericsError::SingularJacobian);
        }
        let dx = -(pseudo_inverse(&j, 1e-12) * &r);
        (x, r) = backtrack(f, &x, &dx, norm)?;
    }
    let residual = r.norm();
    if residual <= tol {
        Ok(x)
    } else {
        Err(NumericsError::NoConvergence {
            iterations: max_iter,
            residual,
        })
    }
}

fn backtrack(
    f: &dyn Fn(&Vector) -> Vector,
    x: &Vector,
    dx: &Vector,
    norm: f64,
) -> Result<(Vector, Vector)> {
    let mut step = 1.0;
    loop {
        let xn = x + dx * step;
        let rn = f(&xn);
        let finite = rn.iter().all(|v| v.is_finite());
        if finite && (rn.norm() < (1.0 - 1e-4 * step) * norm || step < 1e-10) {
            return Ok((xn, rn));
        }
        if step < 1e-10 {
            return Err(NumericsError::NonFinite);
        }
        step *= 0.5;
    }
}

/// One classical RK4 step of `ẋ = F(x, u)` with `u` held over the step.
pub fn rk4_step(
    f: &dyn Fn(&Vector, &Vector) -> Vector,
    x: &Vector,
    u: &Vector,
    dt: f64,
) -> Result<Vector> {
    if !(dt > 0.0) {
        return Err(NumericsError::InvalidArgument(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let k1 = f(x, u);
    let k2 = f(&(x + &k1 * (0.5 * dt)), u);
    let k3 = f(&(x + &k2 * (0.5 * dt)), u);
    let k4 = f(&(x + &k3 * dt), u);
    checked_vec(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section(
    f: &dyn Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            break;
        }
        // ties go left so the smaller argument wins
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        assert!(f(a) * f(b) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let e = sym_eigen(&Matrix::identity(2, 2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
        let e = sym_eigen(&diag(&[3.0, -1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 3.0]);
    }

    #[test]
    fn eigen_two_by_two() {
        // λ² − 4λ + 3 = 0
        let a = matrix_from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eigen(&a).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 3.0, epsilon = 1e-14);
        assert!((e.reconstruct() - a).norm() < 1e-14);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let a = matrix_from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            sym_eigen(&a),
            Err(NumericsError::NonSymmetric { .. })
        ));
    }

    #[test]
    fn matrix_literal_rejects_nan_and_ragged() {
        assert_eq!(
            matrix_from_rows(&[vec![1.0, f64::NAN]]),
            Err(NumericsError::NonFinite)
        );
        assert!(matrix_from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn psd_classes() {
        let z = psd_check(&Matrix::zeros(2, 2), 1e-9).unwrap();
        assert_eq!(z.verdict, Definiteness::PositiveSemidefinite);
        assert!(z.is_nsd());
        let ind = psd_check(&diag(&[1.0, -1.0]), 1e-9).unwrap();
        assert_eq!(ind.verdict, Definiteness::Indefinite);
        let nd = psd_check(&(-Matrix::identity(3, 3)), 1e-9).unwrap();
        assert_eq!(nd.verdict, Definiteness::NegativeDefinite);
        let nsd = psd_check(&diag(&[0.0, -2.0]), 1e-9).unwrap();
        assert_eq!(nsd.verdict, Definiteness::NegativeSemidefinite);
    }

    #[test]
    fn sqrt_of_psd() {
        let a = matrix_from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let s = sym_sqrt_psd(&a, 1e-12).unwrap();
        assert!((&s * &s - &a).norm() < 1e-13);
        assert!(sym_sqrt_psd(&diag(&[1.0, -1.0]), 1e-12).is_err());
    }

    #[test]
    fn newton_examples() {
        let x = newton_root(
            &|x: &Vector| x.clone(),
            None,
            &Vector::from_element(1, 0.5),
            1e-12,
            50,
        )
        .unwrap();
        assert!(x[0].abs() <= 1e-12);

        let sqrt2 = bisect(|x| x * x - 2.0, 0.0, 2.0);
        let x = newton_root(
            &|x: &Vector| Vector::from_element(1, x[0] * x[0] - 2.0),
            None,
            &Vector::from_element(1, 1.0),
            1e-12,
            50,
        )
        .unwrap();
        assert_abs_diff_eq!(x[0], sqrt2, epsilon = 1e-11);

        let asin_half = bisect(|x| x.sin() - 0.5, 0.0, 1.0);
        let x = newton_root(
            &|x: &Vector| Vector::from_element(1, x[0].sin() - 0.5),
            None,
            &Vector::from_element(1, 0.4),
            1e-13,
            50,
        )
        .unwrap();
        assert_abs_diff_eq!(x[0], asin_half, epsilon = 1e-11);
        assert_abs_diff_eq!(x[0], std::f64::consts::FRAC_PI_6, epsilon = 1e-11);
    }

    #[test]
    fn newton_errors() {
        let r = newton_root(
            &|x: &Vector| Vector::from_element(1, x[0] * x[0] + 1.0),
            None,
            &Vector::from_element(1, 0.0),
            1e-12,
            20,
        );
        assert_eq!(r, Err(NumericsError::SingularJacobian));
        let r = newton_root(
            &|x: &Vector| Vector::from_element(1, x[0] * x[0] + 1.0),
            None,
            &Vector::from_element(1, 1.0),
            1e-12,
            5,
        );
        assert!(matches!(r, Err(NumericsError::NoConvergence { .. })));
    }

    #[test]
    fn projection_onto_circle() {
        let f = |x: &Vector| Vector::from_element(1, x[0] * x[0] + x[1] * x[1] - 1.0);
        let x0 = Vector::from_vec(vec![2.0, 0.0]);
        let x = project_to_zero_set(&f, &x0, 1e-12, 50).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rk4_examples() {
        let zero = |_: &Vector, _: &Vector| Vector::zeros(1);
        let x = Vector::from_element(1, 3.0);
        assert_eq!(rk4_step(&zero, &x, &Vector::zeros(1), 0.1).unwrap(), x);

        let decay = |x: &Vector, _: &Vector| -x;
        let x1 = rk4_step(
            &decay,
            &Vector::from_element(1, 1.0),
            &Vector::zeros(0),
            0.1,
        )
        .unwrap();
        // local error of RK4 on ẋ = −x is dt⁵/120 + O(dt⁶)
        assert!((x1[0] - (-0.1f64).exp()).abs() < 1e-7);

        let integrator = |_: &Vector, u: &Vector| u.clone();
        let x1 = rk4_step(
            &integrator,
            &Vector::zeros(1),
            &Vector::from_element(1, 2.0),
            0.5,
        )
        .unwrap();
        assert_eq!(x1[0], 1.0);

        assert!(rk4_step(&decay, &x, &Vector::zeros(0), 0.0).is_err());
        let blowup = |x: &Vector, _: &Vector| x.map(|v| v * 1e300);
        assert_eq!(
            rk4_step(
                &blowup,
                &Vector::from_element(1, 1e10),
                &Vector::zeros(0),
                1.0
            ),
            Err(NumericsError::NonFinite)
        );
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section(&|x| (x - 1.3) * (x - 1.3) + 2.0, -5.0, 5.0, 1e-10, 500);
        assert_abs_diff_eq!(x, 1.3, epsilon = 1e-7);
        assert_abs_diff_eq!(fx, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn pseudo_inverse_rank_deficient() {
        let a = matrix_from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let p = pseudo_inverse(&a, 1e-12);
        assert_eq!(p, a);
        assert_eq!(rank(&a, 1e-10), 1);
    }
}
