//! Dense matrix kernels backing the analytics: closed-form and reference
//! matrix exponentials, Perron root extraction, and the M-matrix inverse.
//!
//! Everything here is desk scale (dims <= ~10), so all routines are plain
//! dense algorithms with explicit tolerances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Minimum admissible gap between diagonal entries. The closed-form
/// exponential and the martingale coefficients have `(alpha_i - alpha_j)`
/// denominators; spectra closer than this are rejected.
pub const EPS_DISTINCT: f64 = 1e-8;

/// Power-iteration tolerance on the eigenvalue change between sweeps.
pub const PERRON_TOL: f64 = 1e-12;

/// Power-iteration sweep cap.
pub const PERRON_MAX_ITER: usize = 100_000;

/// An upper-triangular generator, held as diagonal plus strict upper entries.
#[derive(Debug, Clone)]
pub struct TriangularSpectrum {
    diag: Vec<f64>,
    /// Strict upper entries, row-major: `upper[i][j - i - 1]` is entry (i, j).
    upper: Vec<Vec<f64>>,
}

impl TriangularSpectrum {
    /// Builds from a square matrix; the strictly lower part must be zero and
    /// the diagonal pairwise distinct beyond [`EPS_DISTINCT`].
    pub fn from_matrix(mat: &DMatrix<f64>) -> Result<Self> {
        let n = mat.nrows();
        if mat.ncols() != n {
            return Err(Error::Argument("matrix must be square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if mat[(i, j)] != 0.0 {
                    return Err(Error::Argument(format!(
                        "entry ({i},{j}) below the diagonal is nonzero"
                    )));
                }
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| mat[(i, i)]).collect();
        check_distinct(&diag)?;
        let upper = (0..n)
            .map(|i| ((i + 1)..n).map(|j| mat[(i, j)]).collect())
            .collect();
        Ok(Self { diag, upper })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// Strict upper entry (i, j), i < j.
    pub fn alpha_od(&self, i: usize, j: usize) -> f64 {
        self.upper[i][j - i - 1]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i < j {
                self.alpha_od(i, j)
            } else {
                0.0
            }
        })
    }
}

fn check_distinct(diag: &[f64]) -> Result<()> {
    for i in 0..diag.len() {
        for j in (i + 1)..diag.len() {
            let gap = (diag[i] - diag[j]).abs();
            if gap <= EPS_DISTINCT {
                return Err(Error::NearDegenerateSpectrum {
                    gap,
                    eps: EPS_DISTINCT,
                });
            }
        }
    }
    Ok(())
}

/// First-order divided difference of `exp(. * delta)` over distinct nodes:
/// sum over p in S of e^{a_p delta} / prod_{l != p} (a_p - a_l).
fn exp_divided_difference(nodes: &[f64], delta: f64) -> f64 {
    let mut acc = 0.0;
    for (p, &ap) in nodes.iter().enumerate() {
        let mut denom = 1.0;
        for (l, &al) in nodes.iter().enumerate() {
            if l != p {
                denom *= ap - al;
            }
        }
        acc += (ap * delta).exp() / denom;
    }
    acc
}

/// Closed-form exponential of an upper-triangular generator.
///
/// Diagonal entries are `e^{alpha_k delta}`; entry (j, i) for j < i is the
/// sum over all increasing index paths j = p_0 < p_1 < ... < p_r = i of the
/// product of off-diagonal entries along the path times the exponential
/// divided difference over the path's node set.
pub fn triangular_matexp_closed(spec: &TriangularSpectrum, delta: f64) -> DMatrix<f64> {
    let n = spec.dim();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        out[(k, k)] = (spec.alpha(k) * delta).exp();
    }
    for j in 0..n {
        for i in (j + 1)..n {
            out[(j, i)] = closed_entry(spec, j, i, delta);
        }
    }
    out
}

fn closed_entry(spec: &TriangularSpectrum, j: usize, i: usize, delta: f64) -> f64 {
    // Enumerate subsets of the intermediate indices (j+1 .. i-1); each subset,
    // taken in increasing order, is one path j -> ... -> i.
    let inter: Vec<usize> = ((j + 1)..i).collect();
    let mut total = 0.0;
    let subsets = 1u32 << inter.len();
    for mask in 0..subsets {
        let mut path = vec![j];
        for (bit, &idx) in inter.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                path.push(idx);
            }
        }
        path.push(i);
        let mut prod = 1.0;
        for w in path.windows(2) {
            prod *= spec.alpha_od(w[0], w[1]);
        }
        if prod == 0.0 {
            continue;
        }
        let nodes: Vec<f64> = path.iter().map(|&p| spec.alpha(p)).collect();
        total += prod * exp_divided_difference(&nodes, delta);
    }
    total
}

/// Reference matrix exponential by scaling and squaring with a truncated
/// Taylor series. Independent of the closed form above.
pub fn matexp_reference(a: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matexp_reference needs a square matrix");
    let scaled_full = a * delta;
    let norm = scaled_full
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    // Squaring depth so the scaled norm is <= 0.5.
    let mut s = 0i32;
    while norm / 2f64.powi(s) > 0.5 && s < 64 {
        s += 1;
    }
    let scaled = &scaled_full / 2f64.powi(s);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    let mut k = 1.0f64;
    loop {
        term = &term * &scaled / k;
        result += &term;
        let tnorm = term.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
        if tnorm < 1e-18 {
            break;
        }
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Dominant eigenvalue with positive left/right eigenvectors of an
/// irreducible matrix with nonnegative off-diagonal entries.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub root: f64,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

/// Perron data of `a` via shifted power iteration. `a` must have
/// nonnegative off-diagonal entries and be irreducible.
pub fn perron(a: &DMatrix<f64>) -> Result<PerronData> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::Argument("perron needs a nonempty square matrix".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] < 0.0 {
                return Err(Error::Argument(format!(
                    "off-diagonal entry ({i},{j}) is negative"
                )));
            }
        }
    }
    if !is_irreducible(a) {
        return Err(Error::NotPositiveRegular);
    }
    if n == 1 {
        return Ok(PerronData {
            root: a[(0, 0)],
            left: DVector::from_element(1, 1.0),
            right: DVector::from_element(1, 1.0),
        });
    }
    // Shift to make the operator entrywise nonnegative; generators can have
    // negative diagonals.
    let shift = (0..n).map(|i| a[(i, i)].abs()).fold(0.0f64, f64::max) + 1.0;
    let shifted = a + DMatrix::identity(n, n) * shift;
    let (mu_r, right) = power_iterate(&shifted)?;
    let (_, left) = power_iterate(&shifted.transpose())?;
    let root = mu_r - shift;
    for v in right.iter().chain(left.iter()) {
        if *v <= 0.0 {
            return Err(Error::NotPositiveRegular);
        }
    }
    // Normalize so that right . left = 1 (keep right at unit 1-norm).
    let dot = right.dot(&left);
    if dot.abs() < 1e-300 {
        return Err(Error::Singular("degenerate eigenvector pairing".into()));
    }
    let left = left / dot;
    Ok(PerronData { root, left, right })
}

/// Dominant (largest real part) eigenvalue of a matrix with nonnegative
/// off-diagonal entries; no irreducibility requirement.
pub fn dominant_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n == 1 {
        return Ok(a[(0, 0)]);
    }
    let shift = (0..n).map(|i| a[(i, i)].abs()).fold(0.0f64, f64::max) + 1.0;
    let shifted = a + DMatrix::identity(n, n) * shift;
    let (mu, _) = power_iterate(&shifted)?;
    Ok(mu - shift)
}

fn power_iterate(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut mu = 0.0f64;
    for iter in 0..PERRON_MAX_ITER {
        let w = m * &v;
        let norm = w.iter().map(|x| x.abs()).sum::<f64>();
        if norm == 0.0 {
            return Err(Error::Singular("power iteration hit the zero vector".into()));
        }
        let next = w / norm;
        let change = (norm - mu).abs();
        v = next;
        mu = norm;
        if iter > 0 && change < PERRON_TOL * mu.abs().max(1.0) {
            return Ok((mu, v));
        }
    }
    Err(Error::Convergence {
        iters: PERRON_MAX_ITER,
        residual: f64::NAN,
    })
}

/// Strong connectivity on the graph of strictly positive off-diagonal means.
pub fn is_irreducible(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if v == u || seen[v] {
                    continue;
                }
                let edge = if forward { a[(u, v)] } else { a[(v, u)] };
                if edge > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    reach(true).iter().all(|&s| s) && reach(false).iter().all(|&s| s)
}

/// `(alpha2 I - A11)^{-1}`, valid when `alpha2` exceeds the dominant
/// eigenvalue of `A11` (Z-matrix with positive spectrum: an M-matrix).
pub fn m_matrix_inverse(alpha2: f64, a11: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dominant = dominant_eigenvalue(a11)?;
    if (alpha2 - dominant).abs() <= 1e-12 * alpha2.abs().max(1.0) {
        return Err(Error::Singular(format!(
            "alpha2 = {alpha2} equals the dominant eigenvalue of A11"
        )));
    }
    if alpha2 < dominant {
        return Err(Error::NotMMatrix {
            shift: alpha2,
            dominant,
        });
    }
    let n = a11.nrows();
    let m = DMatrix::identity(n, n) * alpha2 - a11;
    let inv = m
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("alpha2 I - A11 is singular".into()))?;
    for x in inv.iter() {
        if *x < -1e-9 {
            return Err(Error::NotMMatrix {
                shift: alpha2,
                dominant,
            });
        }
    }
    Ok(inv)
}

/// Solve `(alpha2 I - A11) x = b` without the M-matrix sign requirement.
pub fn shifted_solve(alpha2: f64, a11: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a11.nrows();
    let m = DMatrix::identity(n, n) * alpha2 - a11;
    m.lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("alpha2 I - A11 is singular".into()))
}

/// Residual of the partial-fraction identity: |sum_j 1/prod_{l!=j}(a_j - a_l)|.
/// Zero (to roundoff) for any set of >= 2 distinct reals.
pub fn partial_fraction_residual(alphas: &[f64]) -> Result<f64> {
    if alphas.len() < 2 {
        return Err(Error::Argument("need at least two entries".into()));
    }
    check_distinct(alphas)?;
    let mut acc = 0.0;
    for (j, &aj) in alphas.iter().enumerate() {
        let mut denom = 1.0;
        for (l, &al) in alphas.iter().enumerate() {
            if l != j {
                denom *= aj - al;
            }
        }
        acc += 1.0 / denom;
    }
    Ok(acc.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().map(|x| x.abs()).fold(0.0f64, f64::max)
    }

    #[test]
    fn matexp_reference_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(3, 3);
        let e = matexp_reference(&z, 1.0);
        assert!(max_abs_diff(&e, &DMatrix::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn matexp_reference_diagonal() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -1.2]));
        let e = matexp_reference(&d, 2.0);
        assert!((e[(0, 0)] - (0.6f64).exp()).abs() < 1e-13);
        assert!((e[(1, 1)] - (-2.4f64).exp()).abs() < 1e-13);
        assert!(e[(0, 1)].abs() < 1e-15 && e[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn matexp_reference_nilpotent() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = matexp_reference(&a, 1.0);
        assert!(max_abs_diff(&e, &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn closed_form_diagonal_only() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![0.7, -0.4]));
        let spec = TriangularSpectrum::from_matrix(&b).unwrap();
        let e = triangular_matexp_closed(&spec, 1.0);
        assert!((e[(0, 0)] - 0.7f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-0.4f64).exp()).abs() < 1e-14);
        assert_eq!(e[(1, 0)], 0.0);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn closed_form_matches_reference_model_a() {
        // Generator [[0.2, 0.5], [0, 0.5]], delta = 1.
        let b = DMatrix::from_row_slice(2, 2, &[0.2, 0.5, 0.0, 0.5]);
        let spec = TriangularSpectrum::from_matrix(&b).unwrap();
        let e = triangular_matexp_closed(&spec, 1.0);
        assert!((e[(0, 0)] - 1.221403).abs() < 1e-6);
        assert!((e[(0, 1)] - 0.712197).abs() < 1e-6);
        assert!((e[(1, 1)] - 1.648721).abs() < 1e-6);
        let r = matexp_reference(&b, 1.0);
        assert!(max_abs_diff(&e, &r) < 1e-12);
    }

    #[test]
    fn closed_form_semigroup() {
        let b = DMatrix::from_row_slice(
            3,
            3,
            &[0.1, 0.4, 0.2, 0.0, 0.35, 0.5, 0.0, 0.0, 0.6],
        );
        let spec = TriangularSpectrum::from_matrix(&b).unwrap();
        let s = triangular_matexp_closed(&spec, 0.7);
        let t = triangular_matexp_closed(&spec, 1.3);
        let st = triangular_matexp_closed(&spec, 2.0);
        assert!(max_abs_diff(&(&s * &t), &st) < 1e-9);
    }

    #[test]
    fn degenerate_diagonal_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        assert!(matches!(
            TriangularSpectrum::from_matrix(&b),
            Err(Error::NearDegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn perron_symmetric_2x2() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let p = perron(&a).unwrap();
        assert!((p.root - 3.0).abs() < 1e-9);
        assert!((p.right[0] - p.right[1]).abs() < 1e-9);
        assert!((p.right.dot(&p.left) - 1.0).abs() < 1e-10);
        let resid = (&a * &p.right - &p.right * p.root)
            .iter()
            .map(|x| x.abs())
            .fold(0.0f64, f64::max);
        assert!(resid < 1e-9);
    }

    #[test]
    fn perron_scalar() {
        let a = DMatrix::from_row_slice(1, 1, &[-0.7]);
        let p = perron(&a).unwrap();
        assert_eq!(p.root, -0.7);
        assert_eq!(p.left[0], 1.0);
        assert_eq!(p.right[0], 1.0);
    }

    #[test]
    fn perron_reducible_rejected() {
        let a = DMatrix::identity(2, 2);
        assert!(matches!(perron(&a), Err(Error::NotPositiveRegular)));
    }

    #[test]
    fn perron_scaling_property() {
        let a = DMatrix::from_row_slice(3, 3, &[-0.5, 0.8, 0.1, 0.3, 0.2, 0.9, 0.4, 0.1, -0.2]);
        let p1 = perron(&a).unwrap();
        let p2 = perron(&(&a * 3.0)).unwrap();
        assert!((p2.root - 3.0 * p1.root).abs() < 1e-8);
        // Cosine distance between right eigenvector directions.
        let cos = p1.right.dot(&p2.right) / (p1.right.norm() * p2.right.norm());
        assert!((1.0 - cos).abs() < 1e-9);
    }

    #[test]
    fn m_matrix_inverse_scalar() {
        let a = DMatrix::from_row_slice(1, 1, &[0.2]);
        let inv = m_matrix_inverse(0.5, &a).unwrap();
        assert!((inv[(0, 0)] - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn m_matrix_inverse_singular_at_dominant() {
        let a = DMatrix::from_row_slice(1, 1, &[0.2]);
        assert!(matches!(m_matrix_inverse(0.2, &a), Err(Error::Singular(_))));
    }

    #[test]
    fn m_matrix_inverse_identity_product() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.6, 0.4, 0.2]);
        let dom = dominant_eigenvalue(&a).unwrap();
        let alpha2 = dom + 1.0;
        let inv = m_matrix_inverse(alpha2, &a).unwrap();
        let m = DMatrix::identity(2, 2) * alpha2 - &a;
        let prod = &inv * &m;
        assert!(max_abs_diff(&prod, &DMatrix::identity(2, 2)) < 1e-9);
        assert!(inv.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn partial_fraction_small_sets() {
        assert!(partial_fraction_residual(&[0.0, 1.0]).unwrap() < 1e-15);
        // 1/((-1)(-2)) + 1/((1)(-1)) + 1/((2)(1)) = 0.5 - 1 + 0.5
        assert!(partial_fraction_residual(&[0.0, 1.0, 2.0]).unwrap() < 1e-12);
    }

    #[test]
    fn partial_fraction_duplicate_rejected() {
        assert!(partial_fraction_residual(&[0.3, 0.3]).is_err());
    }
}
