//! Process definitions: finite-support offspring laws, the three model
//! variants, generator-matrix construction, and validation.
//!
//! Models are immutable after construction and safe to share across threads.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance for "probabilities sum to one" checks.
const PROB_TOL: f64 = 1e-12;

/// One atom of a joint offspring distribution: a count per type and its
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub counts: Vec<u32>,
    pub prob: f64,
}

/// Finite joint probability mass function over offspring-count vectors for
/// one parent type.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    atoms: Vec<Atom>,
}

impl OffspringLaw {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Argument("offspring law needs at least one atom".into()));
        }
        let dim = atoms[0].counts.len();
        let mut total = 0.0;
        for a in &atoms {
            if a.counts.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.counts.len(),
                });
            }
            if !(0.0..=1.0).contains(&a.prob) {
                return Err(Error::Argument(format!("atom probability {} out of range", a.prob)));
            }
            total += a.prob;
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Argument(format!(
                "atom probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Builds the joint law of independent per-type counts: `marginals[j]`
    /// lists `(count, prob)` for type j, and the joint law is the product.
    pub fn from_independent_marginals(marginals: &[Vec<(u32, f64)>]) -> Result<Self> {
        let dim = marginals.len();
        let mut atoms = vec![Atom {
            counts: vec![0; dim],
            prob: 1.0,
        }];
        for (j, marginal) in marginals.iter().enumerate() {
            if marginal.is_empty() {
                return Err(Error::Argument(format!("marginal {j} is empty")));
            }
            let mut next = Vec::with_capacity(atoms.len() * marginal.len());
            for atom in &atoms {
                for &(count, prob) in marginal {
                    if prob == 0.0 {
                        continue;
                    }
                    let mut counts = atom.counts.clone();
                    counts[j] = count;
                    next.push(Atom {
                        counts,
                        prob: atom.prob * prob,
                    });
                }
            }
            atoms = next;
        }
        Self::new(atoms)
    }

    /// Two-atom-per-marginal law with the prescribed mean vector: each
    /// marginal takes `ceil(mean)` with the fractional part as probability,
    /// `floor(mean)` otherwise.
    pub fn from_means(means: &[f64]) -> Result<Self> {
        let marginals: Vec<Vec<(u32, f64)>> = means
            .iter()
            .map(|&mu| {
                if mu < 0.0 {
                    return Err(Error::Argument(format!("negative mean {mu}")));
                }
                let floor = mu.floor();
                let frac = mu - floor;
                let lo = floor as u32;
                if frac < PROB_TOL {
                    Ok(vec![(lo, 1.0)])
                } else {
                    Ok(vec![(lo, 1.0 - frac), (lo + 1, frac)])
                }
            })
            .collect::<Result<_>>()?;
        Self::from_independent_marginals(&marginals)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Number of types the counts range over.
    pub fn dim(&self) -> usize {
        self.atoms[0].counts.len()
    }

    /// Probability generating function at `s`.
    pub fn pgf(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        Ok(self
            .atoms
            .iter()
            .map(|a| {
                let monomial: f64 = a
                    .counts
                    .iter()
                    .zip(s)
                    .map(|(&c, &sj)| sj.powi(c as i32))
                    .product();
                a.prob * monomial
            })
            .sum())
    }

    /// Mean offspring count per type.
    pub fn means(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for a in &self.atoms {
            for (j, &c) in a.counts.iter().enumerate() {
                out[j] += a.prob * f64::from(c);
            }
        }
        out
    }

    fn check(&self, label: &str, violations: &mut Vec<String>) {
        let total: f64 = self.atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > PROB_TOL {
            violations.push(format!("{label}: atom probabilities sum to {total}"));
        }
    }
}

/// A sequential (chain-structured) model: type i only produces types j >= i,
/// so the mean generator is upper triangular.
#[derive(Debug, Clone)]
pub struct SdcbpModel {
    pub rates: Vec<f64>,
    pub laws: Vec<OffspringLaw>,
}

impl SdcbpModel {
    pub fn new(rates: Vec<f64>, laws: Vec<OffspringLaw>) -> Result<Self> {
        if rates.len() != laws.len() {
            return Err(Error::DimensionMismatch {
                expected: rates.len(),
                got: laws.len(),
            });
        }
        let model = Self { rates, laws };
        let violations = model.validate();
        if let Some(v) = violations.first() {
            return Err(Error::Argument(v.clone()));
        }
        Ok(model)
    }

    pub fn n_types(&self) -> usize {
        self.rates.len()
    }

    pub fn pgf(&self, i: usize, s: &[f64]) -> Result<f64> {
        self.laws[i].pgf(s)
    }

    /// Generator entry (i, j) = rate_i (E[offspring_j from i] - delta_ij).
    /// Upper triangular by the support invariant; lower entries are exact
    /// zeros because they sum zero counts.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let n = self.n_types();
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            let means = self.laws[i].means();
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                b[(i, j)] = self.rates[i] * (means[j] - delta);
            }
        }
        b
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.n_types();
        for (i, &rate) in self.rates.iter().enumerate() {
            if !(rate > 0.0) {
                v.push(format!("rate of type {i} is {rate}, must be positive"));
            }
        }
        for (i, law) in self.laws.iter().enumerate() {
            law.check(&format!("type {i} law"), &mut v);
            if law.dim() != n {
                v.push(format!(
                    "type {i} law ranges over {} types, model has {n}",
                    law.dim()
                ));
                continue;
            }
            for atom in law.atoms() {
                for j in 0..i {
                    if atom.counts[j] > 0 {
                        v.push(format!(
                            "triangular support: type {i} law has an atom producing type {j}"
                        ));
                    }
                }
            }
        }
        v
    }
}

/// A two-class model: an irreducible block of `n` types that can also feed
/// an irreducible block of `m` types, which never feeds back.
#[derive(Debug, Clone)]
pub struct VdcbpModel {
    pub n: usize,
    pub m: usize,
    pub rates: Vec<f64>,
    pub laws: Vec<OffspringLaw>,
}

impl VdcbpModel {
    pub fn new(n: usize, m: usize, rates: Vec<f64>, laws: Vec<OffspringLaw>) -> Result<Self> {
        if rates.len() != n + m || laws.len() != n + m {
            return Err(Error::DimensionMismatch {
                expected: n + m,
                got: rates.len().max(laws.len()),
            });
        }
        let model = Self { n, m, rates, laws };
        if let Some(v) = model.validate().first() {
            return Err(Error::Argument(v.clone()));
        }
        Ok(model)
    }

    pub fn n_types(&self) -> usize {
        self.n + self.m
    }

    pub fn pgf(&self, i: usize, s: &[f64]) -> Result<f64> {
        self.laws[i].pgf(s)
    }

    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let total = self.n_types();
        let mut a = DMatrix::zeros(total, total);
        for i in 0..total {
            let means = self.laws[i].means();
            for j in 0..total {
                let delta = if i == j { 1.0 } else { 0.0 };
                a[(i, j)] = self.rates[i] * (means[j] - delta);
            }
        }
        a
    }

    /// The class-1 block of the generator.
    pub fn a11(&self) -> DMatrix<f64> {
        self.generator_matrix().view((0, 0), (self.n, self.n)).into()
    }

    /// The class-1 -> class-2 block.
    pub fn a12(&self) -> DMatrix<f64> {
        self.generator_matrix().view((0, self.n), (self.n, self.m)).into()
    }

    /// The class-2 block.
    pub fn a22(&self) -> DMatrix<f64> {
        self.generator_matrix()
            .view((self.n, self.n), (self.m, self.m))
            .into()
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let total = self.n_types();
        for (i, &rate) in self.rates.iter().enumerate() {
            if !(rate > 0.0) {
                v.push(format!("rate of type {i} is {rate}, must be positive"));
            }
        }
        for (i, law) in self.laws.iter().enumerate() {
            law.check(&format!("type {i} law"), &mut v);
            if law.dim() != total {
                v.push(format!(
                    "type {i} law ranges over {} types, model has {total}",
                    law.dim()
                ));
                continue;
            }
            if i >= self.n {
                for atom in law.atoms() {
                    if atom.counts[..self.n].iter().any(|&c| c > 0) {
                        v.push(format!(
                            "class separation: class-2 type {i} law produces class-1 offspring"
                        ));
                        break;
                    }
                }
            }
        }
        if v.is_empty() {
            if !crate::linalg::is_irreducible(&self.a11()) {
                v.push("class-1 mean block is reducible".into());
            }
            if !crate::linalg::is_irreducible(&self.a22()) {
                v.push("class-2 mean block is reducible".into());
            }
        }
        v
    }
}

/// A type-change/share model: every event is a type change with probability
/// `theta` (in-place switch within the particle's class) or a share
/// (branching) event with probability `1 - theta`. Types 0..mixed are the
/// mixed class; the `exclusive` types follow and never produce mixed
/// offspring.
#[derive(Debug, Clone)]
pub struct TcvdbpModel {
    pub mixed: usize,
    pub exclusive: usize,
    pub theta: f64,
    pub lambda_v: f64,
    /// Row-stochastic type-change matrix within the mixed class.
    pub type_change_mixed: DMatrix<f64>,
    /// Row-stochastic type-change matrix within the exclusive class.
    pub type_change_exclusive: DMatrix<f64>,
    /// Per-type offspring laws conditioned on a share event, over all
    /// mixed + exclusive types.
    pub share_laws: Vec<OffspringLaw>,
}

impl TcvdbpModel {
    pub fn new(
        mixed: usize,
        exclusive: usize,
        theta: f64,
        lambda_v: f64,
        type_change_mixed: DMatrix<f64>,
        type_change_exclusive: DMatrix<f64>,
        share_laws: Vec<OffspringLaw>,
    ) -> Result<Self> {
        let model = Self {
            mixed,
            exclusive,
            theta,
            lambda_v,
            type_change_mixed,
            type_change_exclusive,
            share_laws,
        };
        if let Some(v) = model.validate().first() {
            return Err(Error::Argument(v.clone()));
        }
        Ok(model)
    }

    pub fn n_types(&self) -> usize {
        self.mixed + self.exclusive
    }

    pub fn is_mixed(&self, i: usize) -> bool {
        i < self.mixed
    }

    /// Mean share offspring counts, (i, j) = E[type-j offspring of a type-i
    /// share event].
    pub fn share_mean_matrix(&self) -> DMatrix<f64> {
        let total = self.n_types();
        let mut m = DMatrix::zeros(total, total);
        for (i, law) in self.share_laws.iter().enumerate() {
            for (j, mu) in law.means().into_iter().enumerate() {
                m[(i, j)] = mu;
            }
        }
        m
    }

    /// Combined per-event mean matrix for the mixed block:
    /// theta * typeChange + (1 - theta) * shareMeans.
    pub fn a_mx(&self) -> DMatrix<f64> {
        let m = self
            .share_mean_matrix()
            .view((0, 0), (self.mixed, self.mixed))
            .into_owned();
        &self.type_change_mixed * self.theta + m * (1.0 - self.theta)
    }

    /// Same combination for the exclusive block.
    pub fn a_ex(&self) -> DMatrix<f64> {
        let e = self.exclusive;
        let m = self
            .share_mean_matrix()
            .view((self.mixed, self.mixed), (e, e))
            .into_owned();
        &self.type_change_exclusive * self.theta + m * (1.0 - self.theta)
    }

    /// Mixed -> exclusive share means.
    pub fn m_cross(&self) -> DMatrix<f64> {
        self.share_mean_matrix()
            .view((0, self.mixed), (self.mixed, self.exclusive))
            .into_owned()
    }

    /// Full generator: within-class entry lambda_v (theta a_ij +
    /// (1-theta) m_ij - delta_ij); cross-class entry lambda_v (1-theta) m_ij.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let total = self.n_types();
        let means = self.share_mean_matrix();
        let mut g = DMatrix::zeros(total, total);
        for i in 0..total {
            for j in 0..total {
                let delta = if i == j { 1.0 } else { 0.0 };
                let same_class = self.is_mixed(i) == self.is_mixed(j);
                let tc = if same_class {
                    if self.is_mixed(i) {
                        self.type_change_mixed[(i, j)]
                    } else {
                        self.type_change_exclusive[(i - self.mixed, j - self.mixed)]
                    }
                } else {
                    0.0
                };
                g[(i, j)] = self.lambda_v
                    * (self.theta * tc + (1.0 - self.theta) * means[(i, j)] - delta);
            }
        }
        g
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let total = self.n_types();
        if self.mixed == 0 || self.exclusive == 0 {
            v.push("need at least one mixed and one exclusive type".into());
        }
        if !(0.0..=1.0).contains(&self.theta) {
            v.push(format!("theta = {} out of [0,1]", self.theta));
        }
        if !(self.lambda_v > 0.0) {
            v.push(format!("lambda_v = {} must be positive", self.lambda_v));
        }
        for (name, mat, dim) in [
            ("mixed", &self.type_change_mixed, self.mixed),
            ("exclusive", &self.type_change_exclusive, self.exclusive),
        ] {
            if mat.nrows() != dim || mat.ncols() != dim {
                v.push(format!("{name} type-change matrix is not {dim}x{dim}"));
                continue;
            }
            for i in 0..dim {
                let sum: f64 = mat.row(i).iter().sum();
                if (sum - 1.0).abs() > PROB_TOL {
                    v.push(format!(
                        "row-stochastic: {name} type-change row {i} sums to {sum}"
                    ));
                }
                if mat.row(i).iter().any(|&x| x < 0.0) {
                    v.push(format!("{name} type-change row {i} has a negative entry"));
                }
            }
        }
        if self.share_laws.len() != total {
            v.push(format!(
                "expected {total} share laws, got {}",
                self.share_laws.len()
            ));
            return v;
        }
        for (i, law) in self.share_laws.iter().enumerate() {
            law.check(&format!("type {i} share law"), &mut v);
            if law.dim() != total {
                v.push(format!(
                    "type {i} share law ranges over {} types, model has {total}",
                    law.dim()
                ));
                continue;
            }
            if !self.is_mixed(i) {
                for atom in law.atoms() {
                    if atom.counts[..self.mixed].iter().any(|&c| c > 0) {
                        v.push(format!(
                            "class separation: exclusive type {i} share law produces mixed offspring"
                        ));
                        break;
                    }
                }
            }
        }
        v
    }
}

/// Parameters of the two-post propagation model on a social feed with N
/// screen levels.
#[derive(Debug, Clone)]
pub struct SocialNetworkParams {
    /// Post qualities (share propensities).
    pub eta1: f64,
    pub eta2: f64,
    /// Attention discount when both posts compete on one feed.
    pub delta_att: f64,
    /// Type-change (level-shift) probability per event.
    pub theta: f64,
    /// Total event rate per particle.
    pub lambda_v: f64,
    /// Mean number of friends a share reaches.
    pub mean_friends: f64,
    /// Read probability by feed level, length N-1.
    pub read_probs: Vec<f64>,
    /// Landing-level distribution of a freshly shared post, length N-1,
    /// summing to <= 1.
    pub level_probs: Vec<f64>,
    /// Probability that on a both-post feed, post 1 sits above post 2.
    pub p: f64,
    /// Number of feed levels (last one absorbing and never read again).
    pub n_levels: usize,
}

impl SocialNetworkParams {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let levels = self.n_levels.saturating_sub(1);
        for (name, x) in [
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("delta_att", self.delta_att),
            ("theta", self.theta),
            ("p", self.p),
        ] {
            if !(0.0..=1.0).contains(&x) {
                v.push(format!("{name} = {x} out of [0,1]"));
            }
        }
        if !(self.lambda_v > 0.0) {
            v.push(format!("lambda_v = {} must be positive", self.lambda_v));
        }
        if !(self.mean_friends > 0.0) {
            v.push(format!("mean_friends = {} must be positive", self.mean_friends));
        }
        if self.read_probs.len() != levels {
            v.push(format!(
                "read_probs has length {}, expected {levels}",
                self.read_probs.len()
            ));
        }
        if self.level_probs.len() != levels {
            v.push(format!(
                "level_probs has length {}, expected {levels}",
                self.level_probs.len()
            ));
        }
        if self.read_probs.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            v.push("read_probs entries out of [0,1]".into());
        }
        let lsum: f64 = self.level_probs.iter().sum();
        if lsum > 1.0 + PROB_TOL {
            v.push(format!("level_probs sum to {lsum} > 1"));
        }
        v
    }
}

/// Builds the type-change/share model tracking users who hold both posts
/// (mixed class) together with users who hold only `target_post` (exclusive
/// class).
///
/// Type layout: mixed types are (orientation, level) pairs with index
/// `orientation * (N-1) + level`, orientation 0 meaning post 1 on top;
/// exclusive types are the N-1 levels. A type change pushes the post one
/// level down (absorbing at the last level) and keeps the orientation.
/// Share means from a level-l parent to a level-j offspring carry the
/// parent's read probability r_l and the landing distribution rho_j:
///
/// * mixed -> mixed, orientation o: w_o * delta_att * eta1 * eta2 * m * r_l * rho_j
///   with w_0 = p, w_1 = 1 - p (both posts re-shared together);
/// * mixed -> exclusive i: m * eta_i * (1 - delta_att * eta_other) * r_l * rho_j
///   (only post i is re-shared);
/// * exclusive i -> exclusive i: m * eta_i * r_l * rho_j.
///
/// Offspring laws are products of floor/ceil two-atom marginals matching
/// those means.
pub fn build_social_network_model(
    params: &SocialNetworkParams,
    target_post: usize,
) -> Result<TcvdbpModel> {
    if params.n_levels < 2 {
        return Err(Error::Argument("need at least two feed levels".into()));
    }
    if target_post != 1 && target_post != 2 {
        return Err(Error::Argument("target_post must be 1 or 2".into()));
    }
    if let Some(v) = params.validate().first() {
        return Err(Error::Argument(v.clone()));
    }
    let levels = params.n_levels - 1;
    let mixed = 2 * levels;
    let exclusive = levels;
    let total = mixed + exclusive;

    let (eta_t, eta_o) = if target_post == 1 {
        (params.eta1, params.eta2)
    } else {
        (params.eta2, params.eta1)
    };
    let c_mx = params.delta_att * params.eta1 * params.eta2 * params.mean_friends;
    let c_cross = params.mean_friends * eta_t * (1.0 - params.delta_att * eta_o);
    let c_ex = params.mean_friends * eta_t;

    // Level shift: l -> l+1, last level absorbing.
    let shift = DMatrix::from_fn(levels, levels, |i, j| {
        let next = (i + 1).min(levels - 1);
        if j == next {
            1.0
        } else {
            0.0
        }
    });
    let mut tc_mixed = DMatrix::zeros(mixed, mixed);
    for o in 0..2 {
        let base = o * levels;
        for i in 0..levels {
            for j in 0..levels {
                tc_mixed[(base + i, base + j)] = shift[(i, j)];
            }
        }
    }

    let orient_w = [params.p, 1.0 - params.p];
    let mut share_laws = Vec::with_capacity(total);
    for o in 0..2 {
        for l in 0..levels {
            let r = params.read_probs[l];
            let mut means = vec![0.0; total];
            for (oo, &w) in orient_w.iter().enumerate() {
                for j in 0..levels {
                    means[oo * levels + j] = w * c_mx * r * params.level_probs[j];
                }
            }
            for j in 0..levels {
                means[mixed + j] = c_cross * r * params.level_probs[j];
            }
            let _ = o; // orientation does not change the share means
            share_laws.push(OffspringLaw::from_means(&means)?);
        }
    }
    for l in 0..levels {
        let r = params.read_probs[l];
        let mut means = vec![0.0; total];
        for j in 0..levels {
            means[mixed + j] = c_ex * r * params.level_probs[j];
        }
        share_laws.push(OffspringLaw::from_means(&means)?);
    }

    TcvdbpModel::new(
        mixed,
        exclusive,
        params.theta,
        params.lambda_v,
        tc_mixed,
        shift,
        share_laws,
    )
}

/// The canonical two-type chain used across the test-suite and docs:
/// rate 1 everywhere; a type-1 particle splits into two type-1 particles
/// with probability 0.6 (else none) and independently emits one type-2
/// particle with probability 0.5; a type-2 particle splits into two with
/// probability 0.75 (else none). Generator [[0.2, 0.5], [0, 0.5]].
pub fn canonical_two_type() -> SdcbpModel {
    let law1 = OffspringLaw::from_independent_marginals(&[
        vec![(2, 0.6), (0, 0.4)],
        vec![(1, 0.5), (0, 0.5)],
    ])
    .unwrap();
    let law2 = OffspringLaw::new(vec![
        Atom {
            counts: vec![0, 2],
            prob: 0.75,
        },
        Atom {
            counts: vec![0, 0],
            prob: 0.25,
        },
    ])
    .unwrap();
    SdcbpModel::new(vec![1.0, 1.0], vec![law1, law2]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgf_normalization_and_hand_values() {
        let m = canonical_two_type();
        assert!((m.pgf(0, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.pgf(1, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        // Atoms of type 1: (2,1) 0.3, (2,0) 0.3, (0,1) 0.2, (0,0) 0.2.
        assert!((m.pgf(0, &[0.0, 1.0]).unwrap() - 0.4).abs() < 1e-12);
        assert!((m.pgf(0, &[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pgf_identity_law() {
        let law = OffspringLaw::new(vec![Atom {
            counts: vec![1],
            prob: 1.0,
        }])
        .unwrap();
        let m = SdcbpModel::new(vec![1.0], vec![law]).unwrap();
        assert!((m.pgf(0, &[0.37]).unwrap() - 0.37).abs() < 1e-15);
    }

    #[test]
    fn pgf_monotone_in_each_component() {
        let m = canonical_two_type();
        let mut prev = 0.0;
        for k in 0..=10 {
            let s1 = k as f64 / 10.0;
            let val = m.pgf(0, &[s1, 0.5]).unwrap();
            assert!(val >= prev - 1e-15);
            prev = val;
        }
    }

    #[test]
    fn generator_canonical_two_type() {
        let b = canonical_two_type().generator_matrix();
        assert!((b[(0, 0)] - 0.2).abs() < 1e-12);
        assert!((b[(0, 1)] - 0.5).abs() < 1e-12);
        assert_eq!(b[(1, 0)], 0.0);
        assert!((b[(1, 1)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn generator_zero_offspring() {
        let law = OffspringLaw::new(vec![Atom {
            counts: vec![0],
            prob: 1.0,
        }])
        .unwrap();
        let m = SdcbpModel::new(vec![1.0], vec![law]).unwrap();
        assert_eq!(m.generator_matrix()[(0, 0)], -1.0);
    }

    #[test]
    fn generator_matches_atom_summation() {
        let m = canonical_two_type();
        let b = m.generator_matrix();
        for i in 0..2 {
            for j in 0..2 {
                let mean: f64 = m.laws[i]
                    .atoms()
                    .iter()
                    .map(|a| a.prob * f64::from(a.counts[j]))
                    .sum();
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((b[(i, j)] - m.rates[i] * (mean - delta)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn triangular_violation_reported() {
        let law1 = OffspringLaw::new(vec![Atom {
            counts: vec![0, 0],
            prob: 1.0,
        }])
        .unwrap();
        let law2 = OffspringLaw::new(vec![Atom {
            counts: vec![1, 0],
            prob: 1.0,
        }])
        .unwrap();
        let m = SdcbpModel {
            rates: vec![1.0, 1.0],
            laws: vec![law1, law2],
        };
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("triangular support"));
    }

    #[test]
    fn from_means_matches_requested_means() {
        let law = OffspringLaw::from_means(&[0.3, 2.0, 1.7]).unwrap();
        let mu = law.means();
        assert!((mu[0] - 0.3).abs() < 1e-12);
        assert!((mu[1] - 2.0).abs() < 1e-12);
        assert!((mu[2] - 1.7).abs() < 1e-12);
        let total: f64 = law.atoms().iter().map(|a| a.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    fn tiny_tcvdbp(theta: f64) -> TcvdbpModel {
        // One mixed type, one exclusive type.
        let mixed_law = OffspringLaw::from_means(&[1.4, 0.8]).unwrap();
        let ex_law = OffspringLaw::from_means(&[0.0, 1.2]).unwrap();
        TcvdbpModel::new(
            1,
            1,
            theta,
            2.0,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            vec![mixed_law, ex_law],
        )
        .unwrap()
    }

    #[test]
    fn tcvdbp_theta_one_identity_typechange_is_zero_generator() {
        let mut m = tiny_tcvdbp(1.0);
        m.theta = 1.0;
        let g = m.generator_matrix();
        assert!(g.iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn tcvdbp_theta_zero_matches_vdcbp_generator() {
        let m = tiny_tcvdbp(0.0);
        let g = m.generator_matrix();
        // Same share laws as a two-class model with rate lambda_v.
        let v = VdcbpModel::new(
            1,
            1,
            vec![2.0, 2.0],
            vec![
                OffspringLaw::from_means(&[1.4, 0.8]).unwrap(),
                OffspringLaw::from_means(&[0.0, 1.2]).unwrap(),
            ],
        )
        .unwrap();
        let a = v.generator_matrix();
        assert!((&g - &a).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn tcvdbp_row_sum_violation_reported() {
        let mut m = tiny_tcvdbp(0.5);
        m.type_change_mixed[(0, 0)] = 0.9;
        let v = m.validate();
        assert!(v.iter().any(|s| s.contains("row-stochastic")));
    }

    #[test]
    fn exclusive_feeding_mixed_reported() {
        let mut m = tiny_tcvdbp(0.5);
        m.share_laws[1] = OffspringLaw::from_means(&[0.5, 1.0]).unwrap();
        let v = m.validate();
        assert!(v.iter().any(|s| s.contains("class separation")));
    }

    fn sample_params() -> SocialNetworkParams {
        SocialNetworkParams {
            eta1: 0.6,
            eta2: 0.4,
            delta_att: 0.8,
            theta: 0.3,
            lambda_v: 1.5,
            mean_friends: 5.0,
            read_probs: vec![0.9],
            level_probs: vec![1.0],
            p: 0.7,
            n_levels: 2,
        }
    }

    #[test]
    fn social_network_two_levels_hand_check() {
        let p = sample_params();
        let m = build_social_network_model(&p, 1).unwrap();
        assert_eq!(m.mixed, 2);
        assert_eq!(m.exclusive, 1);
        let means = m.share_mean_matrix();
        // c_mx = delta * eta1 * eta2 * m = 0.8 * 0.6 * 0.4 * 5 = 0.96.
        let c_mx = 0.96;
        let r = 0.9;
        assert!((means[(0, 0)] - 0.7 * c_mx * r).abs() < 1e-12);
        assert!((means[(0, 1)] - 0.3 * c_mx * r).abs() < 1e-12);
        // c_cross = m * eta1 * (1 - delta * eta2) = 5 * 0.6 * 0.68 = 2.04.
        assert!((means[(0, 2)] - 2.04 * r).abs() < 1e-12);
        // Exclusive row: m * eta1 * r = 2.7; no mixed offspring.
        assert_eq!(means[(2, 0)], 0.0);
        assert_eq!(means[(2, 1)], 0.0);
        assert!((means[(2, 2)] - 2.7).abs() < 1e-12);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn social_network_zero_quality_means_no_sharing() {
        let mut p = sample_params();
        p.eta1 = 0.0;
        p.eta2 = 0.0;
        let m = build_social_network_model(&p, 1).unwrap();
        assert!(m.share_mean_matrix().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn social_network_theta_zero_has_no_typechange_term() {
        let mut p = sample_params();
        p.theta = 0.0;
        let m = build_social_network_model(&p, 1).unwrap();
        let g = m.generator_matrix();
        let means = m.share_mean_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - p.lambda_v * (means[(i, j)] - delta)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_model_validates() {
        assert!(canonical_two_type().validate().is_empty());
    }
}
