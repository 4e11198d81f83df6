//! Exact event-driven simulation of all three process variants.
//!
//! Every particle lives an exponential lifetime; the next event is sampled
//! from the competing-exponentials formulation (one exponential at the total
//! rate, then a categorical pick proportional to pop_i * rate_i), which is
//! exact by memorylessness and O(types) per event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::analytics::MartingaleCoeffs;
use crate::error::{Error, Result};
use crate::model::{Atom, OffspringLaw, SdcbpModel, TcvdbpModel, VdcbpModel};

/// A model reference the simulator can drive.
#[derive(Debug, Clone, Copy)]
pub enum ProcessRef<'a> {
    Sdcbp(&'a SdcbpModel),
    Vdcbp(&'a VdcbpModel),
    Tcvdbp(&'a TcvdbpModel),
}

impl<'a> ProcessRef<'a> {
    pub fn n_types(&self) -> usize {
        match self {
            Self::Sdcbp(m) => m.n_types(),
            Self::Vdcbp(m) => m.n_types(),
            Self::Tcvdbp(m) => m.n_types(),
        }
    }

    pub fn rate(&self, i: usize) -> f64 {
        match self {
            Self::Sdcbp(m) => m.rates[i],
            Self::Vdcbp(m) => m.rates[i],
            Self::Tcvdbp(m) => m.lambda_v,
        }
    }

    /// Number of reporting classes for the share counters: one per type for
    /// chain models, two (the classes) for the two-class variants.
    pub fn n_classes(&self) -> usize {
        match self {
            Self::Sdcbp(m) => m.n_types(),
            Self::Vdcbp(_) | Self::Tcvdbp(_) => 2,
        }
    }

    pub fn class_of(&self, i: usize) -> usize {
        match self {
            Self::Sdcbp(_) => i,
            Self::Vdcbp(m) => usize::from(i >= m.n),
            Self::Tcvdbp(m) => usize::from(!m.is_mixed(i)),
        }
    }

    fn theta(&self) -> f64 {
        match self {
            Self::Tcvdbp(m) => m.theta,
            _ => 0.0,
        }
    }

    fn law(&self, i: usize) -> &OffspringLaw {
        match self {
            Self::Sdcbp(m) => &m.laws[i],
            Self::Vdcbp(m) => &m.laws[i],
            Self::Tcvdbp(m) => &m.share_laws[i],
        }
    }

    /// New type after a type-change event of a type-i particle.
    fn sample_type_change(&self, i: usize, rng: &mut ChaCha12Rng) -> usize {
        let m = match self {
            Self::Tcvdbp(m) => m,
            _ => unreachable!("type changes only occur in type-change models"),
        };
        let (row, base) = if m.is_mixed(i) {
            (m.type_change_mixed.row(i), 0)
        } else {
            (m.type_change_exclusive.row(i - m.mixed), m.mixed)
        };
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return base + k;
            }
        }
        base + row.len() - 1
    }

    fn sample_offspring(&self, i: usize, rng: &mut ChaCha12Rng) -> &Atom {
        let atoms = self.law(i).atoms();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for a in atoms {
            acc += a.prob;
            if u < acc {
                return a;
            }
        }
        atoms.last().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub horizon: f64,
    pub max_events: u64,
    pub seed: u64,
    /// Sorted snapshot times within [0, horizon].
    pub record_grid: Vec<f64>,
    /// Keep the full event list (needed for replay checks and event CSVs);
    /// ensembles switch this off to bound memory.
    pub record_events: bool,
}

impl SimConfig {
    pub fn new(horizon: f64, seed: u64, record_grid: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Argument("horizon must be positive".into()));
        }
        if record_grid.windows(2).any(|w| w[0] > w[1])
            || record_grid.iter().any(|&t| t < 0.0 || t > horizon)
        {
            return Err(Error::Argument(
                "record grid must be sorted and within [0, horizon]".into(),
            ));
        }
        Ok(Self {
            horizon,
            max_events: 10_000_000,
            seed,
            record_grid,
            record_events: true,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Share,
    TypeChange,
    Death,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub parent_type: usize,
    pub kind: EventKind,
    pub offspring: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Extinct,
    Horizon,
    EventCap,
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    /// Empty unless `record_events` was set.
    pub events: Vec<Event>,
    pub grid: Vec<f64>,
    /// Population per type at each grid point.
    pub snapshots: Vec<Vec<u64>>,
    /// Cumulative share-offspring count per class at each grid point.
    pub shares_by_class: Vec<Vec<u64>>,
    /// Cumulative progeny (share offspring plus type changes) per grid point.
    pub total_progeny: Vec<u64>,
    pub terminated: Termination,
    pub initial: Vec<u64>,
    pub final_population: Vec<u64>,
    pub final_shares_by_class: Vec<u64>,
    pub final_total_progeny: u64,
    pub n_events: u64,
    pub horizon: f64,
}

impl EventLog {
    /// Checks that the snapshots reconstruct exactly from the event list.
    /// Only meaningful when events were recorded.
    pub fn replay_check(&self) -> Result<()> {
        if self.events.is_empty() && self.n_events > 0 {
            return Err(Error::Argument("events were not recorded".into()));
        }
        let mut pop = self.initial.clone();
        let mut prev = f64::NEG_INFINITY;
        let mut gi = 0;
        let check = |gi: usize, pop: &[u64], snaps: &[Vec<u64>]| -> Result<()> {
            if snaps[gi] != pop {
                return Err(Error::Argument(format!(
                    "replay mismatch at grid point {gi}"
                )));
            }
            Ok(())
        };
        for ev in &self.events {
            if ev.time <= prev {
                return Err(Error::Argument("event times not strictly increasing".into()));
            }
            prev = ev.time;
            while gi < self.grid.len() && self.grid[gi] < ev.time {
                check(gi, &pop, &self.snapshots)?;
                gi += 1;
            }
            pop[ev.parent_type] -= 1;
            for (j, &c) in ev.offspring.iter().enumerate() {
                pop[j] += u64::from(c);
            }
        }
        while gi < self.grid.len() {
            check(gi, &pop, &self.snapshots)?;
            gi += 1;
        }
        if pop != self.final_population {
            return Err(Error::Argument("replayed final population mismatch".into()));
        }
        Ok(())
    }
}

/// Stable per-replication stream seed (splitmix64 over seed and index).
pub fn replication_seed(seed: u64, rep: u64) -> u64 {
    let mut z = seed ^ rep.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_exp(rng: &mut ChaCha12Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

pub fn simulate(process: ProcessRef<'_>, initial: &[u64], config: &SimConfig) -> Result<EventLog> {
    let n = process.n_types();
    if initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: initial.len(),
        });
    }
    if config.max_events == 0 {
        return Err(Error::Argument("maxEvents must be at least 1".into()));
    }
    let n_classes = process.n_classes();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut pop = initial.to_vec();
    let mut t = 0.0f64;
    let mut events = Vec::new();
    let mut n_events = 0u64;
    let mut shares = vec![0u64; n_classes];
    let mut progeny = 0u64;
    let mut snapshots = Vec::with_capacity(config.record_grid.len());
    let mut shares_snaps = Vec::with_capacity(config.record_grid.len());
    let mut progeny_snaps = Vec::with_capacity(config.record_grid.len());
    let mut gi = 0usize;
    let theta = process.theta();

    let record_until = |bound: f64,
                        gi: &mut usize,
                        pop: &[u64],
                        shares: &[u64],
                        progeny: u64,
                        snapshots: &mut Vec<Vec<u64>>,
                        shares_snaps: &mut Vec<Vec<u64>>,
                        progeny_snaps: &mut Vec<u64>,
                        grid: &[f64]| {
        while *gi < grid.len() && grid[*gi] < bound {
            snapshots.push(pop.to_vec());
            shares_snaps.push(shares.to_vec());
            progeny_snaps.push(progeny);
            *gi += 1;
        }
    };

    let terminated = loop {
        let total_rate: f64 = pop
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 * process.rate(i))
            .sum();
        if total_rate == 0.0 {
            break Termination::Extinct;
        }
        let t_next = t + sample_exp(&mut rng, total_rate);
        let bound = t_next.min(config.horizon);
        record_until(
            bound,
            &mut gi,
            &pop,
            &shares,
            progeny,
            &mut snapshots,
            &mut shares_snaps,
            &mut progeny_snaps,
            &config.record_grid,
        );
        if t_next > config.horizon {
            break Termination::Horizon;
        }
        t = t_next;
        // Acting particle, proportional to pop_i * rate_i.
        let mut pick: f64 = rng.gen::<f64>() * total_rate;
        let mut parent = n - 1;
        for i in 0..n {
            let w = pop[i] as f64 * process.rate(i);
            if pick < w && pop[i] > 0 {
                parent = i;
                break;
            }
            pick -= w;
        }

        let (kind, offspring) = if theta > 0.0 && rng.gen::<f64>() < theta {
            let k = process.sample_type_change(parent, &mut rng);
            let mut counts = vec![0u32; n];
            counts[k] = 1;
            progeny += 1;
            (EventKind::TypeChange, counts)
        } else {
            let atom = process.sample_offspring(parent, &mut rng).clone();
            let sum: u64 = atom.counts.iter().map(|&c| u64::from(c)).sum();
            for (j, &c) in atom.counts.iter().enumerate() {
                shares[process.class_of(j)] += u64::from(c);
            }
            progeny += sum;
            let kind = if sum == 0 { EventKind::Death } else { EventKind::Share };
            (kind, atom.counts)
        };
        pop[parent] -= 1;
        for (j, &c) in offspring.iter().enumerate() {
            pop[j] += u64::from(c);
        }
        if config.record_events {
            events.push(Event {
                time: t,
                parent_type: parent,
                kind,
                offspring,
            });
        }
        n_events += 1;
        if n_events >= config.max_events {
            break Termination::EventCap;
        }
    };

    // Remaining grid points see the final state.
    record_until(
        f64::INFINITY,
        &mut gi,
        &pop,
        &shares,
        progeny,
        &mut snapshots,
        &mut shares_snaps,
        &mut progeny_snaps,
        &config.record_grid,
    );

    Ok(EventLog {
        events,
        grid: config.record_grid.clone(),
        snapshots,
        shares_by_class: shares_snaps,
        total_progeny: progeny_snaps,
        terminated,
        initial: initial.to_vec(),
        final_population: pop,
        final_shares_by_class: shares,
        final_total_progeny: progeny,
        n_events,
        horizon: config.horizon,
    })
}

/// Evaluates the compensated combination sum_i a_i X_i(t) e^{-alpha_m t} on
/// the record grid.
pub fn martingale_series(
    log: &EventLog,
    coeffs: &MartingaleCoeffs,
    alpha_m: f64,
) -> Result<Vec<(f64, f64)>> {
    if let Some(first) = log.snapshots.first() {
        if first.len() <= coeffs.m {
            return Err(Error::DimensionMismatch {
                expected: coeffs.m + 1,
                got: first.len(),
            });
        }
    }
    Ok(log
        .grid
        .iter()
        .zip(&log.snapshots)
        .map(|(&t, pop)| {
            let s: f64 = coeffs
                .a
                .iter()
                .enumerate()
                .map(|(i, &a)| a * pop[i] as f64)
                .sum();
            (t, s * (-alpha_m * t).exp())
        })
        .collect())
}

/// Finite-horizon proxy for the growth limit: X_m(horizon) e^{-alpha_m horizon}.
pub fn estimate_w(log: &EventLog, target: usize, alpha_m: f64) -> f64 {
    log.final_population[target] as f64 * (-alpha_m * log.horizon).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonical_two_type, OffspringLaw};
    use nalgebra::DMatrix;

    fn cfg(horizon: f64, seed: u64, grid: Vec<f64>) -> SimConfig {
        SimConfig::new(horizon, seed, grid).unwrap()
    }

    #[test]
    fn zero_offspring_single_event() {
        let law = OffspringLaw::from_means(&[0.0]).unwrap();
        let m = SdcbpModel::new(vec![1.0], vec![law]).unwrap();
        let log = simulate(ProcessRef::Sdcbp(&m), &[1], &cfg(100.0, 7, vec![50.0])).unwrap();
        assert_eq!(log.n_events, 1);
        assert_eq!(log.final_population, vec![0]);
        assert_eq!(log.final_shares_by_class, vec![0]);
        assert_eq!(log.terminated, Termination::Extinct);
        assert_eq!(log.events[0].kind, EventKind::Death);
        log.replay_check().unwrap();
    }

    fn pure_shift_model() -> TcvdbpModel {
        TcvdbpModel::new(
            1,
            1,
            1.0,
            1.0,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            vec![
                OffspringLaw::from_means(&[0.0, 0.0]).unwrap(),
                OffspringLaw::from_means(&[0.0, 0.0]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn theta_one_population_constant() {
        let m = pure_shift_model();
        let mut c = cfg(50.0, 3, vec![10.0, 25.0, 49.0]);
        c.max_events = 500;
        let log = simulate(ProcessRef::Tcvdbp(&m), &[1, 0], &c).unwrap();
        for snap in &log.snapshots {
            assert_eq!(snap.iter().sum::<u64>(), 1);
        }
        assert_eq!(log.final_shares_by_class, vec![0, 0]);
        assert_eq!(log.final_total_progeny, log.n_events);
        assert!(log.events.iter().all(|e| e.kind == EventKind::TypeChange));
        log.replay_check().unwrap();
    }

    #[test]
    fn fixed_seed_determinism() {
        let m = canonical_two_type();
        let c = cfg(3.0, 42, vec![1.0, 2.0, 3.0]);
        let a = simulate(ProcessRef::Sdcbp(&m), &[1, 0], &c).unwrap();
        let b = simulate(ProcessRef::Sdcbp(&m), &[1, 0], &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replay_check_holds_on_random_runs() {
        let m = canonical_two_type();
        for seed in 0..20 {
            let mut c = cfg(5.0, seed, vec![1.0, 2.5, 4.0]);
            c.max_events = 5_000;
            let log = simulate(ProcessRef::Sdcbp(&m), &[1, 0], &c).unwrap();
            log.replay_check().unwrap();
        }
    }

    #[test]
    fn counter_duality() {
        // totalProgeny = sum of share counters + type-change count, exactly.
        let m = TcvdbpModel::new(
            1,
            1,
            0.4,
            1.0,
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            vec![
                OffspringLaw::from_means(&[0.9, 0.5]).unwrap(),
                OffspringLaw::from_means(&[0.0, 0.8]).unwrap(),
            ],
        )
        .unwrap();
        for seed in 0..10 {
            let mut c = cfg(8.0, seed, vec![]);
            c.max_events = 10_000;
            let log = simulate(ProcessRef::Tcvdbp(&m), &[2, 1], &c).unwrap();
            let tc = log
                .events
                .iter()
                .filter(|e| e.kind == EventKind::TypeChange)
                .count() as u64;
            let share_sum: u64 = log.final_shares_by_class.iter().sum();
            assert_eq!(log.final_total_progeny, share_sum + tc);
        }
    }

    #[test]
    fn event_cap_flagged() {
        let m = canonical_two_type();
        let mut c = cfg(50.0, 11, vec![]);
        c.max_events = 10;
        // Start large enough that 10 events cannot end the process.
        let log = simulate(ProcessRef::Sdcbp(&m), &[50, 0], &c).unwrap();
        assert_eq!(log.terminated, Termination::EventCap);
        assert_eq!(log.n_events, 10);
    }

    #[test]
    fn martingale_series_initial_value() {
        let m = canonical_two_type();
        let coeffs = crate::analytics::martingale_coeffs(&m, 1).unwrap();
        let c = cfg(1.0, 5, vec![0.0, 0.5, 1.0]);
        let log = simulate(ProcessRef::Sdcbp(&m), &[1, 0], &c).unwrap();
        let series = martingale_series(&log, &coeffs, 0.5).unwrap();
        assert!((series[0].1 - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_w_extinct_is_zero() {
        let law = OffspringLaw::from_means(&[0.0]).unwrap();
        let m = SdcbpModel::new(vec![1.0], vec![law]).unwrap();
        let log = simulate(ProcessRef::Sdcbp(&m), &[1], &cfg(10.0, 1, vec![])).unwrap();
        assert_eq!(estimate_w(&log, 0, 0.3), 0.0);
    }

    #[test]
    fn replication_seed_spreads() {
        let s0 = replication_seed(1234, 0);
        let s1 = replication_seed(1234, 1);
        let s2 = replication_seed(4321, 0);
        assert_ne!(s0, s1);
        assert_ne!(s0, s2);
    }
}
