//! Closed-form predictions: martingale and expectation coefficients,
//! expected-population curves, extinction probabilities, and share curves.
//!
//! All functions are pure; models are read-only.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    self, matexp_reference, TriangularSpectrum, EPS_DISTINCT,
};
use crate::model::{SdcbpModel, TcvdbpModel, VdcbpModel};

/// Default fixed-point tolerance.
pub const FP_TOL: f64 = 1e-12;
/// Default fixed-point iteration cap.
pub const FP_MAX_ITER: usize = 1_000_000;

/// A sum of exponentials sum_i coeff_i * e^{rate_i t}.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpCurve {
    /// (rate, coeff) pairs; rates pairwise distinct.
    pub terms: Vec<(f64, f64)>,
}

impl ExpCurve {
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(r, c)| c * (r * t).exp()).sum()
    }

    /// Sampled form on a caller-supplied grid.
    pub fn sample(&self, grid: &[f64]) -> Vec<(f64, f64)> {
        grid.iter().map(|&t| (t, self.eval(t))).collect()
    }
}

/// Coefficients a_1..a_m of the compensated combination
/// sum_i a_i X_i(t) e^{-alpha_m t} whose ensemble mean stays constant.
#[derive(Debug, Clone)]
pub struct MartingaleCoeffs {
    /// Target type (0-based).
    pub m: usize,
    /// a[i] for i = 0..=m, with a[m] = 1.
    pub a: Vec<f64>,
}

/// q[k][i]: probability that the populations of all types <= i eventually
/// die out, starting from one type-k particle. Equals 1 for k > i.
#[derive(Debug, Clone)]
pub struct ExtinctionTable {
    pub q: Vec<Vec<f64>>,
}

/// Coefficients of the mixed-class share curve
/// y_l(t) = g_l + h_l e^{alpha_e t} + o_l e^{alpha_bar t}.
#[derive(Debug, Clone)]
pub struct ShareCoeffs {
    pub gl: Vec<f64>,
    pub hl: Vec<f64>,
    pub ol: Vec<f64>,
    pub alpha_bar: f64,
    pub alpha_e: f64,
    /// Set when the mixed block has several growth exponents above zero and
    /// the largest was chosen.
    pub warning: Option<String>,
}

fn triangular_spectrum(model: &SdcbpModel) -> Result<TriangularSpectrum> {
    TriangularSpectrum::from_matrix(&model.generator_matrix())
}

/// Coefficients of the type-m compensated combination, by back-substitution:
/// a_m = 1 and a_i = sum_{j>i} B_ij a_j / (alpha_m - alpha_i).
pub fn martingale_coeffs(model: &SdcbpModel, m: usize) -> Result<MartingaleCoeffs> {
    let spec = triangular_spectrum(model)?;
    if m >= spec.dim() {
        return Err(Error::Argument(format!("type index {m} out of range")));
    }
    Ok(MartingaleCoeffs {
        m,
        a: coeffs_on_spectrum(&spec, m),
    })
}

fn coeffs_on_spectrum(spec: &TriangularSpectrum, m: usize) -> Vec<f64> {
    let mut a = vec![0.0; m + 1];
    a[m] = 1.0;
    for i in (0..m).rev() {
        let num: f64 = ((i + 1)..=m).map(|j| spec.alpha_od(i, j) * a[j]).sum();
        a[i] = num / (spec.alpha(m) - spec.alpha(i));
    }
    a
}

/// The curve E[X_m(t)] for a process started from one type-0 particle:
/// a_1^m e^{alpha_m t} plus lower-rate correction terms that make the curve
/// vanish at t = 0 for m >= 1.
pub fn expectation_coeffs(model: &SdcbpModel, m: usize) -> Result<ExpCurve> {
    let spec = triangular_spectrum(model)?;
    if m >= spec.dim() {
        return Err(Error::Argument(format!("type index {m} out of range")));
    }
    Ok(expectation_curve_on_spectrum(&spec, m))
}

fn expectation_curve_on_spectrum(spec: &TriangularSpectrum, m: usize) -> ExpCurve {
    // a[mm][i]: combination coefficients targeting type mm.
    let a: Vec<Vec<f64>> = (0..=m).map(|mm| coeffs_on_spectrum(spec, mm)).collect();
    // p[j][mm]: coefficient of e^{alpha_j t} in E[X_mm(t)], j < mm, built by
    // eliminating lower targets: p_j^j = a_1^j, p_j^mm = -sum_{i=j}^{mm-1}
    // a_i^mm p_j^i.
    let mut p = vec![vec![0.0; m + 1]; m + 1];
    for j in 0..=m {
        p[j][j] = a[j][0];
        for mm in (j + 1)..=m {
            let mut s = 0.0;
            for i in j..mm {
                s += a[mm][i] * p[j][i];
            }
            p[j][mm] = -s;
        }
    }
    let mut terms = vec![(spec.alpha(m), a[m][0])];
    for j in 0..m {
        terms.push((spec.alpha(j), p[j][m]));
    }
    ExpCurve { terms }
}

/// E[number of type-m particles at time t | one type-k particle at time 0].
/// Zero for k > m by decomposability; otherwise evaluated on the k..=m
/// sub-generator, and equal to entry (k, m) of e^{Bt}.
pub fn expected_population(model: &SdcbpModel, start: usize, target: usize, t: f64) -> Result<f64> {
    let n = model.n_types();
    if start >= n || target >= n {
        return Err(Error::Argument("type index out of range".into()));
    }
    if start > target {
        return Ok(0.0);
    }
    let b = model.generator_matrix();
    let dim = target - start + 1;
    let sub = b.view((start, start), (dim, dim)).into_owned();
    let spec = TriangularSpectrum::from_matrix(&sub)?;
    Ok(expectation_curve_on_spectrum(&spec, dim - 1).eval(t))
}

/// Convergence record of one fixed-point solve.
#[derive(Debug, Clone, Copy)]
pub struct FpDetail {
    pub iters: usize,
    pub residual: f64,
}

/// Iterates x <- f(x) from zero; monotone nondecreasing for PGF maps, so the
/// limit is the minimal nonnegative fixed point.
fn fixed_point_from_zero<F>(
    dim: usize,
    f: F,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, FpDetail)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = vec![0.0; dim];
    for iter in 1..=max_iter {
        let next = f(&x);
        let mut delta = 0.0f64;
        for (old, new) in x.iter().zip(&next) {
            debug_assert!(*new >= *old - 1e-14, "PGF iteration must be monotone");
            delta = delta.max((new - old).abs());
        }
        x = next;
        if delta < tol {
            return Ok((
                x,
                FpDetail {
                    iters: iter,
                    residual: delta,
                },
            ));
        }
    }
    let res = {
        let next = f(&x);
        x.iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    };
    Err(Error::Convergence {
        iters: max_iter,
        residual: res,
    })
}

/// Minimal nonnegative solutions of the extinction fixed points, for every
/// (start type k, highest tracked type i) pair.
pub fn extinction_probabilities(
    model: &SdcbpModel,
    tol: f64,
    max_iter: usize,
) -> Result<ExtinctionTable> {
    extinction_probabilities_detailed(model, tol, max_iter).map(|(t, _)| t)
}

/// As [`extinction_probabilities`], also reporting the iteration count and
/// final residual of each per-class solve.
pub fn extinction_probabilities_detailed(
    model: &SdcbpModel,
    tol: f64,
    max_iter: usize,
) -> Result<(ExtinctionTable, Vec<FpDetail>)> {
    let n = model.n_types();
    let mut q = vec![vec![1.0; n]; n];
    let mut details = Vec::with_capacity(n);
    for i in 0..n {
        // Track types 0..=i; higher types are ignored (their PGF argument
        // is pinned at 1).
        let (sol, detail) = fixed_point_from_zero(
            i + 1,
            |x| {
                let mut s = vec![1.0; n];
                s[..=i].copy_from_slice(x);
                (0..=i).map(|k| model.pgf(k, &s).unwrap()).collect()
            },
            tol,
            max_iter,
        )?;
        for k in 0..=i {
            q[k][i] = sol[k];
        }
        details.push(detail);
    }
    Ok((ExtinctionTable { q }, details))
}

/// Dominant growth data of both diagonal blocks of a two-class model.
#[derive(Debug, Clone)]
pub struct VdcbpGrowth {
    pub class1: linalg::PerronData,
    pub class2: linalg::PerronData,
}

pub fn vdcbp_growth(model: &VdcbpModel) -> Result<VdcbpGrowth> {
    Ok(VdcbpGrowth {
        class1: linalg::perron(&model.a11())?,
        class2: linalg::perron(&model.a22())?,
    })
}

/// The compensated statistic e^{-alpha2 t} (Y xi2R + X (alpha2 I - A11)^{-1}
/// A12 xi2R), whose ensemble mean is constant in t.
pub fn vdcbp_martingale_value(
    model: &VdcbpModel,
    x: &[f64],
    y: &[f64],
    t: f64,
) -> Result<f64> {
    if x.len() != model.n || y.len() != model.m {
        return Err(Error::DimensionMismatch {
            expected: model.n + model.m,
            got: x.len() + y.len(),
        });
    }
    let growth = vdcbp_growth(model)?;
    let (a1, a2) = (growth.class1.root, growth.class2.root);
    if (a1 - a2).abs() <= EPS_DISTINCT {
        return Err(Error::NearDegenerateSpectrum {
            gap: (a1 - a2).abs(),
            eps: EPS_DISTINCT,
        });
    }
    let rhs = model.a12() * &growth.class2.right;
    let v = linalg::shifted_solve(a2, &model.a11(), &rhs)?;
    let xv = DVector::from_column_slice(x);
    let yv = DVector::from_column_slice(y);
    Ok((-a2 * t).exp() * (yv.dot(&growth.class2.right) + xv.dot(&v)))
}

/// Two-term asymptotic curves for the class-2 populations when starting from
/// one class-1 particle of type `start`: E[Y_l(t)] ~ h_l e^{alpha2 t} -
/// d_l e^{alpha1 t}, with h from the start row of (alpha2 I - A11)^{-1} A12
/// and d from the dominant left direction of A11 scaled to the start state.
/// Exact when both classes are scalar; see [`vdcbp_expected_y_exact`] for
/// the authoritative curve.
pub fn vdcbp_expected_y(model: &VdcbpModel, start: usize) -> Result<Vec<ExpCurve>> {
    if start >= model.n {
        return Err(Error::Argument("start type must be in class 1".into()));
    }
    let growth = vdcbp_growth(model)?;
    let (a1, a2) = (growth.class1.root, growth.class2.root);
    if (a1 - a2).abs() <= EPS_DISTINCT {
        return Err(Error::NearDegenerateSpectrum {
            gap: (a1 - a2).abs(),
            eps: EPS_DISTINCT,
        });
    }
    let a11 = model.a11();
    let a12 = model.a12();
    // Row vectors r (alpha2 I - A11)^{-1} A12 for r = e_start and for the
    // scaled dominant left direction.
    let solve_row = |r: &DVector<f64>| -> Result<DVector<f64>> {
        // r^T (a2 I - A11)^{-1} = solve of the transposed system.
        let w = linalg::shifted_solve(a2, &a11.transpose(), r)?;
        Ok(a12.transpose() * w)
    };
    let mut e_start = DVector::zeros(model.n);
    e_start[start] = 1.0;
    let h = solve_row(&e_start)?;
    // e_start e^{A11 t} ~ e^{alpha1 t} xi1R_start xi1L^T.
    let scaled_left = &growth.class1.left * growth.class1.right[start];
    let d = solve_row(&scaled_left)?;
    Ok((0..model.m)
        .map(|l| ExpCurve {
            terms: vec![(a2, h[l]), (a1, -d[l])],
        })
        .collect())
}

/// Exact E[Y(t)] for a class-1 start, via the block identity
/// M12(t) = X e^{A22 t} - e^{A11 t} X with A11 X - X A22 = -A12
/// (a Sylvester solve), so that M12(t) is the class-1 x class-2 block of
/// e^{At}. Requires A11 and A22 to have disjoint spectra.
pub fn vdcbp_expected_y_exact(model: &VdcbpModel, start: usize, t: f64) -> Result<Vec<f64>> {
    if start >= model.n {
        return Err(Error::Argument("start type must be in class 1".into()));
    }
    let (n, m) = (model.n, model.m);
    let a11 = model.a11();
    let a22 = model.a22();
    let a12 = model.a12();
    // Kronecker form of A11 X - X A22 = -A12 (column-major vec).
    let lhs = DMatrix::identity(m, m).kronecker(&a11) - a22.transpose().kronecker(&DMatrix::identity(n, n));
    let rhs = DVector::from_column_slice((-&a12).as_slice());
    let xvec = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("class blocks share an eigenvalue".into()))?;
    let x = DMatrix::from_column_slice(n, m, xvec.as_slice());
    let block = &x * matexp_reference(&a22, t) - matexp_reference(&a11, t) * &x;
    Ok(block.row(start).iter().copied().collect())
}

/// Extinction probabilities of a two-class model:
/// * `q1[j]`: class-1 population dies out, start type j in class 1;
/// * `q2[l]`: class-2 population dies out, start type l in class 2;
/// * `q12[j]`: everything dies out, start type j in class 1.
pub fn vdcbp_extinction(
    model: &VdcbpModel,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    vdcbp_extinction_detailed(model, tol, max_iter).map(|(a, b, c, _)| (a, b, c))
}

/// As [`vdcbp_extinction`], also reporting the convergence details of the
/// three solves (class-1-only, class-2, full).
pub fn vdcbp_extinction_detailed(
    model: &VdcbpModel,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<FpDetail>)> {
    let (n, m) = (model.n, model.m);
    let (q1, d1) = fixed_point_from_zero(
        n,
        |x| {
            let mut s = vec![1.0; n + m];
            s[..n].copy_from_slice(x);
            (0..n).map(|k| model.pgf(k, &s).unwrap()).collect()
        },
        tol,
        max_iter,
    )?;
    let (q2, d2) = fixed_point_from_zero(
        m,
        |x| {
            let mut s = vec![1.0; n + m];
            s[n..].copy_from_slice(x);
            (0..m).map(|l| model.pgf(n + l, &s).unwrap()).collect()
        },
        tol,
        max_iter,
    )?;
    let (full, d12) = fixed_point_from_zero(
        n + m,
        |x| (0..n + m).map(|k| model.pgf(k, x).unwrap()).collect(),
        tol,
        max_iter,
    )?;
    Ok((q1, q2, full[..n].to_vec(), vec![d1, d2, d12]))
}

/// Per-event mean total new shares from each type of a block: (1-theta)
/// times the share-law row sums.
fn share_row_sums(model: &TcvdbpModel, rows: std::ops::Range<usize>) -> DVector<f64> {
    let means = model.share_mean_matrix();
    DVector::from_iterator(rows.len(), rows.map(|i| means.row(i).sum()))
}

/// Growth exponent of the exclusive class: largest eigenvalue of
/// lambda_v (A_ex - I).
pub fn exclusive_growth_rate(model: &TcvdbpModel) -> Result<f64> {
    Ok(model.lambda_v * (linalg::dominant_eigenvalue(&model.a_ex())? - 1.0))
}

/// Growth exponent of the mixed class: largest eigenvalue of
/// lambda_v (A_mx - I).
pub fn mixed_growth_rate(model: &TcvdbpModel) -> Result<f64> {
    Ok(model.lambda_v * (linalg::dominant_eigenvalue(&model.a_mx())? - 1.0))
}

/// Constant coefficients g^e of the exclusive-class share curves, from the
/// stationary balance (I - A_ex) g = (1-theta) * rowSums.
fn exclusive_g(model: &TcvdbpModel) -> Result<DVector<f64>> {
    let e = model.exclusive;
    let a_ex = model.a_ex();
    let rhs = share_row_sums(model, model.mixed..model.mixed + e) * (1.0 - model.theta);
    let lhs = DMatrix::identity(e, e) - a_ex;
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("I - A_ex is singular (critical exclusive class)".into()))
}

/// Expected cumulative shares spawned by one exclusive-class particle of
/// type `l` (0-based within the exclusive class): g_l + h_l e^{alpha_e t}
/// with h = -g, so the curve is 0 at t = 0.
pub fn exclusive_shares_curve(model: &TcvdbpModel, l: usize) -> Result<ExpCurve> {
    if l >= model.exclusive {
        return Err(Error::Argument("exclusive type index out of range".into()));
    }
    let alpha_e = exclusive_growth_rate(model)?;
    if alpha_e.abs() <= EPS_DISTINCT {
        return Err(Error::Argument("exclusive class is critical (alpha_e = 0)".into()));
    }
    let g = exclusive_g(model)?;
    Ok(ExpCurve {
        terms: vec![(0.0, g[l]), (alpha_e, -g[l])],
    })
}

/// Share-curve coefficients of the mixed class.
///
/// Supercritical mixed block: g and h solve the constant and e^{alpha_e t}
/// balances of the share fixed point exactly, and o = -(g + h) enforces the
/// zero-shares initial condition; alpha_bar is the mixed growth exponent.
/// The remaining balance (o proportional to the dominant mixed direction)
/// is the conjectured part; measure it with [`mixed_shares_residuals`].
/// Subcritical mixed block: o = 0 and h_l = lambda_v (1-theta) rowSum_l /
/// alpha_e with g = -h.
pub fn mixed_shares_coeffs(model: &TcvdbpModel) -> Result<ShareCoeffs> {
    let mm = model.mixed;
    let alpha_e = exclusive_growth_rate(model)?;
    if alpha_e <= 0.0 {
        return Err(Error::Argument(
            "exclusive class must be supercritical (alpha_e > 0)".into(),
        ));
    }
    let alpha_bar = mixed_growth_rate(model)?;
    if alpha_bar.abs() <= EPS_DISTINCT {
        return Err(Error::NearDegenerateSpectrum {
            gap: alpha_bar.abs(),
            eps: EPS_DISTINCT,
        });
    }
    if (alpha_bar - alpha_e).abs() <= EPS_DISTINCT {
        return Err(Error::NearDegenerateSpectrum {
            gap: (alpha_bar - alpha_e).abs(),
            eps: EPS_DISTINCT,
        });
    }
    let lam = model.lambda_v;
    let theta = model.theta;
    let row_sums = share_row_sums(model, 0..mm);

    if alpha_bar < 0.0 {
        let hl: Vec<f64> = row_sums
            .iter()
            .map(|&s| lam * (1.0 - theta) * s / alpha_e)
            .collect();
        let gl: Vec<f64> = hl.iter().map(|&h| -h).collect();
        return Ok(ShareCoeffs {
            gl,
            hl,
            ol: vec![0.0; mm],
            alpha_bar,
            alpha_e,
            warning: None,
        });
    }

    let a_mx = model.a_mx();
    let m_cross = model.m_cross();
    let g_e = exclusive_g(model)?;
    let h_e = -&g_e;

    // Constant balance: (I - A_mx) g = (1-theta)(rowSums + M_cross g^e).
    let rhs_g = (&row_sums + &m_cross * &g_e) * (1.0 - theta);
    let g = (DMatrix::identity(mm, mm) - &a_mx)
        .lu()
        .solve(&rhs_g)
        .ok_or_else(|| Error::Singular("I - A_mx is singular (critical mixed class)".into()))?;

    // e^{alpha_e t} balance: (I - c A_mx) h = c (1-theta) M_cross h^e with
    // c = lambda_v / (lambda_v + alpha_e).
    let c = lam / (lam + alpha_e);
    let rhs_h = (&m_cross * &h_e) * (c * (1.0 - theta));
    let h = (DMatrix::identity(mm, mm) - &a_mx * c)
        .lu()
        .solve(&rhs_h)
        .ok_or_else(|| Error::Singular("e^{alpha_e t} share balance is singular".into()))?;

    let o: Vec<f64> = g.iter().zip(h.iter()).map(|(&gi, &hi)| -(gi + hi)).collect();

    // Count growth exponents above zero; only the largest is used.
    let positive = model
        .a_mx()
        .complex_eigenvalues()
        .iter()
        .filter(|ev| lam * (ev.re - 1.0) > EPS_DISTINCT)
        .count();
    let warning = (positive > 1).then(|| {
        format!("mixed block has {positive} growth exponents above zero; using the largest")
    });

    Ok(ShareCoeffs {
        gl: g.iter().copied().collect(),
        hl: h.iter().copied().collect(),
        ol: o,
        alpha_bar,
        alpha_e,
        warning,
    })
}

/// Max-abs residuals of the three balance equations of the share fixed
/// point (constant, e^{alpha_e t}, e^{alpha_bar t} coefficients). The first
/// two vanish by construction; the third measures how well the conjectured
/// three-exponential form fits the model.
pub fn mixed_shares_residuals(model: &TcvdbpModel, coeffs: &ShareCoeffs) -> (f64, f64, f64) {
    let mm = model.mixed;
    let lam = model.lambda_v;
    let theta = model.theta;
    let a_mx = model.a_mx();
    let m_cross = model.m_cross();
    let row_sums = share_row_sums(model, 0..mm);
    let g = DVector::from_column_slice(&coeffs.gl);
    let h = DVector::from_column_slice(&coeffs.hl);
    let o = DVector::from_column_slice(&coeffs.ol);
    let g_e = exclusive_g(model).expect("coeffs were computed from this model");
    let h_e = -&g_e;

    let r_g = &g - (&a_mx * &g + (&row_sums + &m_cross * &g_e) * (1.0 - theta));
    let ce = lam / (lam + coeffs.alpha_e);
    let r_h = &h - (&a_mx * &h + (&m_cross * &h_e) * (1.0 - theta)) * ce;
    let cb = lam / (lam + coeffs.alpha_bar);
    let r_o = &o - (&a_mx * &o) * cb;
    let sup = |v: &DVector<f64>| v.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    (sup(&r_g), sup(&r_h), sup(&r_o))
}

/// Expected cumulative shares spawned by one mixed-class particle of type
/// `l` (0-based within the mixed class).
pub fn mixed_shares_curve(model: &TcvdbpModel, l: usize) -> Result<ExpCurve> {
    if l >= model.mixed {
        return Err(Error::Argument("mixed type index out of range".into()));
    }
    let c = mixed_shares_coeffs(model)?;
    Ok(ExpCurve {
        terms: vec![(0.0, c.gl[l]), (c.alpha_e, c.hl[l]), (c.alpha_bar, c.ol[l])],
    })
}
