//! Monte Carlo verification harness: runs replication ensembles in parallel,
//! compares estimator means against the closed-form predictions, and renders
//! pass/fail reports at the 3-standard-error criterion.

use rayon::prelude::*;

use crate::analytics::{
    exclusive_shares_curve, expected_population, martingale_coeffs, mixed_growth_rate,
    mixed_shares_curve, vdcbp_expected_y_exact, vdcbp_martingale_value, FP_MAX_ITER, FP_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::matexp_reference;
use crate::model::TcvdbpModel;
use crate::simulator::{
    martingale_series, replication_seed, simulate, EventLog, ProcessRef, SimConfig, Termination,
};

/// Ensemble statistics for one verified quantity.
#[derive(Debug, Clone)]
pub struct McReport {
    pub quantity: String,
    pub grid: Vec<f64>,
    pub mc_mean: Vec<f64>,
    pub mc_std_err: Vec<f64>,
    pub predicted: Vec<f64>,
    pub reps: usize,
    /// Replications dropped from the mean (event-cap hits).
    pub excluded: usize,
    /// Per-point verdict: |mean - predicted| <= 3 stdErr.
    pub verdict: Vec<bool>,
    /// Set when more than 1% of replications were excluded.
    pub biased: bool,
    /// Extra context, e.g. "conjecture check".
    pub note: Option<String>,
}

impl McReport {
    pub fn pass(&self) -> bool {
        self.verdict.iter().all(|&v| v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mcMean,mcStdErr,predicted,verdict\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.grid[i],
                self.mc_mean[i],
                self.mc_std_err[i],
                self.predicted[i],
                if self.verdict[i] { "pass" } else { "fail" }
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let status = if self.pass() { "pass" } else { "FAIL" };
        let bias = if self.biased { " [biased]" } else { "" };
        let note = self
            .note
            .as_deref()
            .map(|n| format!(" ({n})"))
            .unwrap_or_default();
        format!(
            "{}: {} ({} reps, {} excluded){}{}",
            self.quantity, status, self.reps, self.excluded, bias, note
        )
    }
}

fn build_report(
    quantity: String,
    grid: &[f64],
    kept: &[Vec<f64>],
    predicted: Vec<f64>,
    reps: usize,
    excluded: usize,
    note: Option<String>,
) -> Result<McReport> {
    if kept.is_empty() {
        return Err(Error::DegenerateEnsemble);
    }
    let n = kept.len() as f64;
    let mut mean = vec![0.0; grid.len()];
    for row in kept {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; grid.len()];
    for row in kept {
        for ((v, &x), &mu) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - mu) * (x - mu);
        }
    }
    let std_err: Vec<f64> = var
        .iter()
        .map(|&v| {
            if kept.len() > 1 {
                (v / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let verdict: Vec<bool> = mean
        .iter()
        .zip(&std_err)
        .zip(&predicted)
        .map(|((&m, &se), &p)| {
            // Effectively deterministic estimators (identical replications up
            // to rounding) are held to a fixed tolerance instead of 3 sigma.
            if se <= 1e-14 * (1.0 + m.abs()) {
                (m - p).abs() < 1e-12
            } else {
                (m - p).abs() <= 3.0 * se
            }
        })
        .collect();
    let biased = excluded as f64 > 0.01 * reps as f64;
    Ok(McReport {
        quantity,
        grid: grid.to_vec(),
        mc_mean: mean,
        mc_std_err: std_err,
        predicted,
        reps,
        excluded,
        verdict,
        biased,
        note,
    })
}

/// Runs `reps` independent replications (parallel, merged by index) and maps
/// each log through `stat`.
pub fn ensemble_stats<F>(
    process: ProcessRef<'_>,
    initial: &[u64],
    base: &SimConfig,
    reps: usize,
    seed: u64,
    stat: F,
) -> Result<Vec<(Vec<f64>, Termination)>>
where
    F: Fn(&EventLog) -> Vec<f64> + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut cfg = base.clone();
            cfg.seed = replication_seed(seed, r as u64);
            cfg.record_events = false;
            let log = simulate(process, initial, &cfg)?;
            Ok((stat(&log), log.terminated))
        })
        .collect()
}

fn split_capped(rows: Vec<(Vec<f64>, Termination)>) -> (Vec<Vec<f64>>, usize) {
    let mut kept = Vec::with_capacity(rows.len());
    let mut capped = 0;
    for (row, term) in rows {
        if term == Termination::EventCap {
            capped += 1;
        } else {
            kept.push(row);
        }
    }
    (kept, capped)
}

/// Per-type snapshot means against the closed-form expectation curves.
pub fn mc_expectation(
    process: ProcessRef<'_>,
    initial: &[u64],
    grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<McReport>> {
    if reps < 100 {
        return Err(Error::Argument("need at least 100 replications".into()));
    }
    let n = process.n_types();
    let horizon = grid.last().copied().unwrap_or(1.0).max(1e-9);
    let base = SimConfig::new(horizon, seed, grid.to_vec())?;
    let rows = ensemble_stats(process, initial, &base, reps, seed, |log| {
        let mut out = Vec::with_capacity(grid.len() * n);
        for snap in &log.snapshots {
            out.extend(snap.iter().map(|&c| c as f64));
        }
        out
    })?;
    let (kept, excluded) = split_capped(rows);

    let predicted = predicted_means(process, initial, grid)?;
    (0..n)
        .map(|ty| {
            let per_type: Vec<Vec<f64>> = kept
                .iter()
                .map(|row| (0..grid.len()).map(|g| row[g * n + ty]).collect())
                .collect();
            build_report(
                format!("E[X_{ty}(t)]"),
                grid,
                &per_type,
                predicted.iter().map(|p| p[ty]).collect(),
                reps,
                excluded,
                None,
            )
        })
        .collect()
}

/// Predicted per-type means on the grid, routed through the analytics module
/// where a closed form exists (chain models and the class-2 block of
/// two-class models) and through the reference exponential otherwise.
pub fn predicted_means(
    process: ProcessRef<'_>,
    initial: &[u64],
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let n = process.n_types();
    match process {
        ProcessRef::Sdcbp(m) => grid
            .iter()
            .map(|&t| {
                (0..n)
                    .map(|ty| {
                        let mut acc = 0.0;
                        for (k, &c) in initial.iter().enumerate() {
                            if c > 0 {
                                acc += c as f64 * expected_population(m, k, ty, t)?;
                            }
                        }
                        Ok(acc)
                    })
                    .collect()
            })
            .collect(),
        ProcessRef::Vdcbp(m) => {
            let a11 = m.a11();
            let a22 = m.a22();
            grid.iter()
                .map(|&t| {
                    let e11 = matexp_reference(&a11, t);
                    let e22 = matexp_reference(&a22, t);
                    let mut out = vec![0.0; n];
                    for (k, &c) in initial.iter().enumerate() {
                        if c == 0 {
                            continue;
                        }
                        let w = c as f64;
                        if k < m.n {
                            for j in 0..m.n {
                                out[j] += w * e11[(k, j)];
                            }
                            let y = vdcbp_expected_y_exact(m, k, t)?;
                            for l in 0..m.m {
                                out[m.n + l] += w * y[l];
                            }
                        } else {
                            for l in 0..m.m {
                                out[m.n + l] += w * e22[(k - m.n, l)];
                            }
                        }
                    }
                    Ok(out)
                })
                .collect()
        }
        ProcessRef::Tcvdbp(m) => {
            let g = m.generator_matrix();
            Ok(grid
                .iter()
                .map(|&t| {
                    let e = matexp_reference(&g, t);
                    (0..n)
                        .map(|ty| {
                            initial
                                .iter()
                                .enumerate()
                                .map(|(k, &c)| c as f64 * e[(k, ty)])
                                .sum()
                        })
                        .collect()
                })
                .collect())
        }
    }
}

/// Extinction probability of the masked type set (types with `mask[i]`),
/// as the minimal nonnegative fixed point over the masked coordinates.
/// Requires that unmasked types never produce masked offspring.
pub fn masked_extinction_probability(
    process: ProcessRef<'_>,
    initial: &[u64],
    mask: &[bool],
) -> Result<f64> {
    let n = process.n_types();
    let pgf = |i: usize, s: &[f64]| -> Result<f64> {
        match process {
            ProcessRef::Sdcbp(m) => m.pgf(i, s),
            ProcessRef::Vdcbp(m) => m.pgf(i, s),
            ProcessRef::Tcvdbp(_) => Err(Error::Argument(
                "extinction analysis is not defined for type-change models".into(),
            )),
        }
    };
    // Unmasked types must not feed masked ones, or the restriction is wrong.
    let means: Vec<Vec<f64>> = match process {
        ProcessRef::Sdcbp(m) => m.laws.iter().map(|l| l.means()).collect(),
        ProcessRef::Vdcbp(m) => m.laws.iter().map(|l| l.means()).collect(),
        ProcessRef::Tcvdbp(m) => m.share_laws.iter().map(|l| l.means()).collect(),
    };
    for i in 0..n {
        if !mask[i] {
            for j in 0..n {
                if mask[j] && means[i][j] > 0.0 {
                    return Err(Error::Argument(format!(
                        "unmasked type {i} produces masked type {j}"
                    )));
                }
            }
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    let mut x = vec![0.0; idx.len()];
    for _ in 0..FP_MAX_ITER {
        let mut s = vec![1.0; n];
        for (pos, &i) in idx.iter().enumerate() {
            s[i] = x[pos];
        }
        let next: Vec<f64> = idx.iter().map(|&i| pgf(i, &s)).collect::<Result<_>>()?;
        let delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        x = next;
        if delta < FP_TOL {
            let mut q = 1.0;
            for (pos, &i) in idx.iter().enumerate() {
                q *= x[pos].powi(initial[i] as i32);
            }
            return Ok(q);
        }
    }
    Err(Error::Convergence {
        iters: FP_MAX_ITER,
        residual: f64::NAN,
    })
}

/// Frequency of {masked population = 0 by `horizon`} against the fixed-point
/// probability. Event-capped runs are counted by their state at the cap
/// (an exploding run is not going extinct), not excluded, so the estimate
/// stays unbiased under early termination.
pub fn mc_extinction(
    process: ProcessRef<'_>,
    initial: &[u64],
    horizon: f64,
    reps: usize,
    seed: u64,
    mask: &[bool],
    max_events: u64,
) -> Result<McReport> {
    if reps < 100 {
        return Err(Error::Argument("need at least 100 replications".into()));
    }
    let predicted = masked_extinction_probability(process, initial, mask)?;
    let base = {
        let mut c = SimConfig::new(horizon, seed, vec![])?;
        c.max_events = max_events;
        c
    };
    let rows = ensemble_stats(process, initial, &base, reps, seed, |log| {
        let extinct = log
            .final_population
            .iter()
            .zip(mask)
            .all(|(&c, &m)| !m || c == 0);
        vec![if extinct { 1.0 } else { 0.0 }]
    })?;
    let kept: Vec<Vec<f64>> = rows.into_iter().map(|(row, _)| row).collect();
    build_report(
        "extinction frequency".into(),
        &[horizon],
        &kept,
        vec![predicted],
        reps,
        0,
        None,
    )
}

/// Ensemble mean of the compensated statistic at each grid point against its
/// constant t = 0 value.
pub fn mc_martingale_drift(
    process: ProcessRef<'_>,
    target: usize,
    initial: &[u64],
    grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<McReport> {
    if reps < 100 {
        return Err(Error::Argument("need at least 100 replications".into()));
    }
    let horizon = grid.last().copied().unwrap_or(1.0).max(1e-9);
    let base = SimConfig::new(horizon, seed, grid.to_vec())?;
    match process {
        ProcessRef::Sdcbp(m) => {
            let coeffs = martingale_coeffs(m, target)?;
            let alpha = m.generator_matrix()[(target, target)];
            let constant: f64 = coeffs
                .a
                .iter()
                .enumerate()
                .map(|(i, &a)| a * initial[i] as f64)
                .sum();
            let rows = ensemble_stats(process, initial, &base, reps, seed, |log| {
                martingale_series(log, &coeffs, alpha)
                    .map(|s| s.into_iter().map(|(_, v)| v).collect())
                    .unwrap_or_else(|_| vec![f64::NAN; grid.len()])
            })?;
            let (kept, excluded) = split_capped(rows);
            build_report(
                format!("martingale mean, target type {target}"),
                grid,
                &kept,
                vec![constant; grid.len()],
                reps,
                excluded,
                None,
            )
        }
        ProcessRef::Vdcbp(m) => {
            let x0: Vec<f64> = initial[..m.n].iter().map(|&c| c as f64).collect();
            let y0: Vec<f64> = initial[m.n..].iter().map(|&c| c as f64).collect();
            let constant = vdcbp_martingale_value(m, &x0, &y0, 0.0)?;
            let rows = ensemble_stats(process, initial, &base, reps, seed, |log| {
                log.grid
                    .iter()
                    .zip(&log.snapshots)
                    .map(|(&t, snap)| {
                        let x: Vec<f64> = snap[..m.n].iter().map(|&c| c as f64).collect();
                        let y: Vec<f64> = snap[m.n..].iter().map(|&c| c as f64).collect();
                        vdcbp_martingale_value(m, &x, &y, t).unwrap_or(f64::NAN)
                    })
                    .collect()
            })?;
            let (kept, excluded) = split_capped(rows);
            build_report(
                "martingale mean, class-2 statistic".into(),
                grid,
                &kept,
                vec![constant; grid.len()],
                reps,
                excluded,
                None,
            )
        }
        ProcessRef::Tcvdbp(_) => Err(Error::Argument(
            "martingale verification covers the chain and two-class variants".into(),
        )),
    }
}

/// Ensemble mean of cumulative share-offspring (all classes) from a single
/// type-`start` particle against the closed-form share curve. The mixed-start
/// supercritical case is labeled a conjecture check.
pub fn mc_shares(
    model: &TcvdbpModel,
    start: usize,
    grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<McReport> {
    if reps < 100 {
        return Err(Error::Argument("need at least 100 replications".into()));
    }
    let (curve, note) = if model.is_mixed(start) {
        let note = if mixed_growth_rate(model)? > 0.0 {
            Some("conjecture check".to_string())
        } else {
            None
        };
        (mixed_shares_curve(model, start)?, note)
    } else {
        (exclusive_shares_curve(model, start - model.mixed)?, None)
    };
    let predicted: Vec<f64> = grid.iter().map(|&t| curve.eval(t)).collect();
    let horizon = grid.last().copied().unwrap_or(1.0).max(1e-9);
    let base = SimConfig::new(horizon, seed, grid.to_vec())?;
    let mut initial = vec![0u64; model.n_types()];
    initial[start] = 1;
    let process = ProcessRef::Tcvdbp(model);
    let rows = ensemble_stats(process, &initial, &base, reps, seed, |log| {
        log.shares_by_class
            .iter()
            .map(|per_class| per_class.iter().sum::<u64>() as f64)
            .collect()
    })?;
    let (kept, excluded) = split_capped(rows);
    build_report(
        format!("expected shares from type {start}"),
        grid,
        &kept,
        predicted,
        reps,
        excluded,
        note,
    )
}

/// Runs a statistical check, retrying once with a derived secondary seed if
/// the first attempt fails any point (documented flake policy for 3-sigma
/// tests).
pub fn retry_on_fail<F>(mut run: F, seed: u64) -> Result<McReport>
where
    F: FnMut(u64) -> Result<McReport>,
{
    let first = run(seed)?;
    if first.pass() {
        return Ok(first);
    }
    let mut second = run(replication_seed(seed, u64::MAX))?;
    second.note = Some(match second.note.take() {
        Some(n) => format!("{n}; retried after a 3-sigma flake"),
        None => "retried after a 3-sigma flake".into(),
    });
    Ok(second)
}

/// Two-sided Kolmogorov-Smirnov p-value of `samples` against Exp(rate).
pub fn ks_exp_p_value(samples: &mut [f64], rate: f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = 1.0 - (-rate * x).exp();
        let lo = i as f64 / n;
        let hi = (i as f64 + 1.0) / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    // Asymptotic Kolmogorov distribution with the standard finite-n tweak.
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * p).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonical_two_type, OffspringLaw, SdcbpModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn deterministic_model_has_zero_stderr() {
        // Every particle always replaces itself: population constant.
        let law = OffspringLaw::from_means(&[1.0]).unwrap();
        let m = SdcbpModel::new(vec![1.0], vec![law]).unwrap();
        let reports =
            mc_expectation(ProcessRef::Sdcbp(&m), &[1], &[0.5, 1.0], 200, 9).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert!(r.mc_std_err.iter().all(|&s| s == 0.0));
        assert!(r.mc_mean.iter().all(|&x| x == 1.0));
        assert!(r.pass());
    }

    #[test]
    fn expectation_report_reproducible() {
        let m = canonical_two_type();
        let a = mc_expectation(ProcessRef::Sdcbp(&m), &[1, 0], &[0.5, 1.0], 500, 77).unwrap();
        let b = mc_expectation(ProcessRef::Sdcbp(&m), &[1, 0], &[0.5, 1.0], 500, 77).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mc_mean, y.mc_mean);
            assert_eq!(x.mc_std_err, y.mc_std_err);
        }
    }

    #[test]
    fn stderr_shrinks_with_sqrt_reps() {
        let m = canonical_two_type();
        let small = mc_expectation(ProcessRef::Sdcbp(&m), &[1, 0], &[1.0], 2_000, 5).unwrap();
        let large = mc_expectation(ProcessRef::Sdcbp(&m), &[1, 0], &[1.0], 4_000, 5).unwrap();
        let ratio = large[0].mc_std_err[0] / small[0].mc_std_err[0];
        let target = 1.0 / 2f64.sqrt();
        assert!((ratio - target).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn masked_extinction_matches_table() {
        let m = canonical_two_type();
        let p = ProcessRef::Sdcbp(&m);
        let q11 = masked_extinction_probability(p, &[1, 0], &[true, false]).unwrap();
        assert!((q11 - 2.0 / 3.0).abs() < 1e-9);
        let q12 = masked_extinction_probability(p, &[1, 0], &[true, true]).unwrap();
        assert!((q12 - 0.303515).abs() < 1e-6);
    }

    #[test]
    fn masked_extinction_rejects_bad_mask() {
        let m = canonical_two_type();
        // Type 1 (unmasked) produces type 2 (masked)? No: mask type 2 only,
        // type 1 is unmasked and produces type 2.
        let err = masked_extinction_probability(ProcessRef::Sdcbp(&m), &[1, 0], &[false, true]);
        assert!(err.is_err());
    }

    #[test]
    fn guaranteed_growth_never_extinct() {
        let law = OffspringLaw::from_means(&[2.0]).unwrap();
        let m = SdcbpModel::new(vec![1.0], vec![law]).unwrap();
        let r = mc_extinction(ProcessRef::Sdcbp(&m), &[1], 10.0, 300, 3, &[true], 2_000).unwrap();
        assert_eq!(r.mc_mean[0], 0.0);
        assert!((r.predicted[0]).abs() < 1e-9);
    }

    #[test]
    fn martingale_t0_point_exact() {
        let m = canonical_two_type();
        let r = mc_martingale_drift(ProcessRef::Sdcbp(&m), 1, &[1, 0], &[0.0, 0.5], 300, 21)
            .unwrap();
        assert!(r.mc_std_err[0] < 1e-12);
        assert!((r.mc_mean[0] - 5.0 / 3.0).abs() < 1e-12);
        assert!(r.verdict[0]);
    }

    #[test]
    fn ks_accepts_true_exponential_and_rejects_wrong_rate() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut samples: Vec<f64> = (0..20_000)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln() / 2.0)
            .collect();
        let p_good = ks_exp_p_value(&mut samples.clone(), 2.0);
        assert!(p_good > 0.001, "p={p_good}");
        let p_bad = ks_exp_p_value(&mut samples, 1.0);
        assert!(p_bad < 1e-6, "p={p_bad}");
    }

    #[test]
    fn retry_policy_runs_secondary_seed() {
        let mut calls = 0;
        let report = retry_on_fail(
            |seed| {
                calls += 1;
                let pass = calls > 1;
                Ok(McReport {
                    quantity: format!("seed {seed}"),
                    grid: vec![1.0],
                    mc_mean: vec![0.0],
                    mc_std_err: vec![1.0],
                    predicted: vec![if pass { 0.0 } else { 100.0 }],
                    reps: 100,
                    excluded: 0,
                    verdict: vec![pass],
                    biased: false,
                    note: None,
                })
            },
            7,
        )
        .unwrap();
        assert_eq!(calls, 2);
        assert!(report.pass());
        assert!(report.note.unwrap().contains("flake"));
    }
}
