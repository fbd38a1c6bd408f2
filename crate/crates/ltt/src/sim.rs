//! Forward Monte-Carlo simulation of complete birth-death trees, with
//! reconstruction (pruning of extinct lineages) and conditioning by
//! rejection. This is the independent oracle for every analytic result.
//!
//! Simulation is Gillespie-exact: with `k` extant lineages the next event
//! is after an `Exp(k (lambda + mu))` waiting time and is a birth with
//! probability `lambda / (lambda + mu)`. Replicates draw from per-index
//! ChaCha streams derived from `(seed, replicate)`, so serial and parallel
//! evaluation orders produce identical results.

use crate::analytic::{age_density, Condition, CurvePoint, CurveSource, LttCurve};
use crate::bdmath::BirthDeathParams;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::io::Write;

/// Sentinel parent id of root lineages.
pub const ROOT_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Birth,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub lineage: u32,
    pub parent: u32,
}

/// Complete-tree event record. Lineage ids are dense integers in birth
/// order; root lineages carry [`ROOT_PARENT`].
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub extant_at_end: Vec<u32>,
    pub t_end: f64,
}

impl EventLog {
    pub fn lineage_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Birth)
            .count()
    }

    /// (birth time, death time or +inf, parent) per lineage id.
    fn lineage_table(&self) -> Vec<(f64, f64, u32)> {
        let n = self.lineage_count();
        let mut table = vec![(0.0, f64::INFINITY, ROOT_PARENT); n];
        for e in &self.events {
            match e.kind {
                EventKind::Birth => {
                    table[e.lineage as usize] = (e.time, f64::INFINITY, e.parent);
                }
                EventKind::Death => {
                    table[e.lineage as usize].1 = e.time;
                }
            }
        }
        table
    }

    /// Lineage ids that have at least one extant descendant (including
    /// themselves), i.e. the lineages of the reconstructed tree.
    fn reconstructed_lineages(&self) -> Vec<bool> {
        let table = self.lineage_table();
        let mut good = vec![false; table.len()];
        for &id in &self.extant_at_end {
            let mut cur = id;
            while cur != ROOT_PARENT && !good[cur as usize] {
                good[cur as usize] = true;
                cur = table[cur as usize].2;
            }
        }
        good
    }
}

/// Precomputed reconstructed-tree view of a log: per extant lineage, the
/// ancestor chain as `(birth time, id)` from root to tip. Build once,
/// count many times.
///
/// A branch of the reconstructed tree crossing time `at` corresponds to a
/// distinct value of "most recent ancestor born at or before `at`" over
/// the extant lineages. Counting raw alive-intervals of ancestors instead
/// would be wrong: a parent that dies after branching would keep its own
/// (pruned) tail segment alive in the count until its death.
pub struct ReconstructedView {
    chains: Vec<Vec<(f64, u32)>>,
    t_end: f64,
}

impl ReconstructedView {
    pub fn new(log: &EventLog) -> Self {
        let table = log.lineage_table();
        let chains = log
            .extant_at_end
            .iter()
            .map(|&id| {
                let mut chain = Vec::new();
                let mut cur = id;
                while cur != ROOT_PARENT {
                    chain.push((table[cur as usize].0, cur));
                    cur = table[cur as usize].2;
                }
                chain.reverse();
                chain
            })
            .collect();
        Self {
            chains,
            t_end: log.t_end,
        }
    }

    /// Number of reconstructed-tree lineages alive at time `at`.
    pub fn count_at(&self, at: f64) -> Result<u32> {
        if !(0.0..=self.t_end).contains(&at) {
            return Err(Error::Domain(format!(
                "at = {at} outside [0, {}]",
                self.t_end
            )));
        }
        let mut reps: Vec<u32> = self
            .chains
            .iter()
            .map(|chain| {
                // root entries have birth time 0 <= at, so idx >= 1
                let idx = chain.partition_point(|&(b, _)| b <= at);
                chain[idx - 1].1
            })
            .collect();
        reps.sort_unstable();
        reps.dedup();
        Ok(reps.len() as u32)
    }
}

/// Number of lineages at time `at` having at least one descendant among
/// the extant lineages at `t_end`.
pub fn reconstructed_count(log: &EventLog, at: f64) -> Result<u32> {
    ReconstructedView::new(log).count_at(at)
}

/// Gillespie-exact simulation of the complete tree from `start_lineages`
/// roots until `t_end` or extinction.
pub fn simulate_complete<R: Rng>(
    params: &BirthDeathParams,
    t_end: f64,
    start_lineages: u32,
    rng: &mut R,
) -> Result<EventLog> {
    simulate_capped(params, t_end, start_lineages, u32::MAX, rng)
}

/// [`simulate_complete`] that abandons the tree once the population
/// exceeds `cap`, returning the oversized state early. Only meaningful
/// inside rejection loops conditioning on an exact extant count `n`: the
/// probability that a tree of more than `cap >> n` lineages falls back to
/// exactly `n` is below (death fraction)^(cap - n) -- far under 1e-40 at
/// the caps used -- so early rejection bounds the per-attempt cost at no
/// measurable bias. Trees that explode exponentially otherwise dominate
/// the runtime when the conditioning age is drawn from a posterior tail.
fn simulate_capped<R: Rng>(
    params: &BirthDeathParams,
    t_end: f64,
    start_lineages: u32,
    cap: u32,
    rng: &mut R,
) -> Result<EventLog> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Domain(format!("t_end must be > 0, got {t_end}")));
    }
    if start_lineages < 1 {
        return Err(Error::Domain("start_lineages must be >= 1".into()));
    }
    let total_rate = params.lambda + params.mu;
    let birth_prob = params.lambda / total_rate;

    let mut events = Vec::new();
    let mut alive: Vec<u32> = (0..start_lineages).collect();
    for &id in &alive {
        events.push(Event {
            time: 0.0,
            kind: EventKind::Birth,
            lineage: id,
            parent: ROOT_PARENT,
        });
    }
    let mut next_id = start_lineages;
    let mut now = 0.0;

    while !alive.is_empty() && alive.len() as u32 <= cap {
        let k = alive.len() as f64;
        let wait = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / (k * total_rate);
        if now + wait > t_end {
            break;
        }
        now += wait;
        let idx = rng.gen_range(0..alive.len());
        if rng.gen::<f64>() < birth_prob {
            let parent = alive[idx];
            events.push(Event {
                time: now,
                kind: EventKind::Birth,
                lineage: next_id,
                parent,
            });
            alive.push(next_id);
            next_id += 1;
        } else {
            let dying = alive.swap_remove(idx);
            events.push(Event {
                time: now,
                kind: EventKind::Death,
                lineage: dying,
                parent: ROOT_PARENT,
            });
        }
    }
    alive.sort_unstable();
    Ok(EventLog {
        events,
        extant_at_end: alive,
        t_end,
    })
}

/// Inverse-CDF sampler for the posterior origin-age density
/// `q_or(t | n)` under the uniform age prior.
///
/// The CDF is tabulated on a log-spaced grid (10^4 points) extended until
/// the accumulated mass is within `1e-6` of 1, then inverted by monotone
/// linear interpolation.
pub struct AgeSampler {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

const AGE_GRID_POINTS: usize = 10_000;

impl AgeSampler {
    pub fn new(n: u32, params: &BirthDeathParams) -> Result<Self> {
        if params.rho > 1.0 {
            return Err(Error::Unsupported(
                "uniform age prior requires mu <= lambda".into(),
            ));
        }
        // Log-spaced grid from well below to well above the bulk of q_or.
        // The time scale of the density is 1/delta (or 1/lambda when
        // critical); extend the upper end until the mass converges.
        let scale = if params.delta > crate::bdmath::CRITICAL_SWITCH {
            1.0 / params.delta
        } else {
            1.0 / params.lambda
        };
        let t_min = scale * 1e-7;
        let mut t_max = scale * (50.0 + 10.0 * n as f64);
        let mut grid;
        let mut cdf;
        loop {
            grid = log_spaced(t_min, t_max, AGE_GRID_POINTS);
            cdf = cumulative_trapezoid(&grid, |t| age_density(t, n, params).unwrap_or(0.0));
            let total = *cdf.last().unwrap();
            if (total - 1.0).abs() < 1e-6 {
                break;
            }
            if total > 1.0 + 1e-6 {
                return Err(Error::Domain(format!(
                    "age-density CDF grid miscalibrated: total mass {total}"
                )));
            }
            t_max *= 4.0;
            if t_max > scale * 1e9 {
                return Err(Error::Domain(format!(
                    "age-density CDF did not accumulate to 1 (got {total}); rho too close to 1?"
                )));
            }
        }
        // normalize the residual grid error so inversion covers (0, 1)
        let total = *cdf.last().unwrap();
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Ok(Self { grid, cdf })
    }

    /// Age below which the fraction `q` of the posterior mass lies.
    pub fn quantile(&self, q: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c < q);
        self.grid[idx.min(self.grid.len() - 1)]
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let idx = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => i,
            Err(i) => i,
        };
        if idx == 0 {
            return self.grid[0];
        }
        if idx >= self.grid.len() {
            return *self.grid.last().unwrap();
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (t0, t1) = (self.grid[idx - 1], self.grid[idx]);
        if c1 > c0 {
            t0 + (u - c0) / (c1 - c0) * (t1 - t0)
        } else {
            t0
        }
    }
}

fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn cumulative_trapezoid(grid: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let mut cdf = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..grid.len() {
        acc += 0.5 * (vals[i] + vals[i - 1]) * (grid[i] - grid[i - 1]);
        cdf.push(acc);
    }
    cdf
}

/// One accepted tree together with the age it was simulated to.
struct AcceptedTree {
    view: ReconstructedView,
    t: f64,
}

fn satisfies(condition: &Condition, n: u32, log: &EventLog) -> bool {
    match condition {
        Condition::OriginAge(_) | Condition::UniformAgePrior => log.extant_at_end.len() as u32 == n,
        Condition::Survival(_) => !log.extant_at_end.is_empty(),
        Condition::MrcaAge(_) => {
            if log.extant_at_end.len() as u32 != n {
                return false;
            }
            // both daughter lineages of the MRCA must survive pruning
            let good = log.reconstructed_lineages();
            good.first().copied().unwrap_or(false) && good.get(1).copied().unwrap_or(false)
        }
    }
}

/// Age and root count for one conditioned replicate. Under the uniform
/// age prior the age is drawn from the posterior `q_or(t | n)` here, once
/// per replicate -- it must then stay fixed across rejection attempts.
/// Redrawing the age on every attempt would weight accepted ages by the
/// acceptance probability `P[N(t) = n]` a second time (the posterior
/// already contains that factor) and bias the sample toward young trees.
/// Early-rejection population cap for a conditioning predicate. Survival
/// accepts any non-extinct tree, so its simulations must run to the end.
fn rejection_cap(condition: &Condition, n: u32) -> u32 {
    match condition {
        Condition::Survival(_) => u32::MAX,
        _ => (50 * n).max(1000),
    }
}

fn replicate_age<R: Rng>(
    condition: &Condition,
    age_sampler: Option<&AgeSampler>,
    rng: &mut R,
) -> (f64, u32) {
    match condition {
        Condition::OriginAge(t) | Condition::Survival(t) => (*t, 1),
        Condition::MrcaAge(t) => (*t, 2),
        Condition::UniformAgePrior => {
            let sampler = age_sampler.expect("age sampler provided for uniform prior");
            (sampler.sample(rng), 1)
        }
    }
}

/// Rejection-samples a single complete tree satisfying the conditioning
/// predicate. Origin-age: exactly `n` extant. MRCA-age: two root lineages,
/// both with extant descendants, `n` extant in total. Survival: at least
/// one extant. Uniform prior: origin age drawn from `q_or(t | n)` first.
pub fn sample_conditioned<R: Rng>(
    condition: &Condition,
    n: u32,
    params: &BirthDeathParams,
    rng: &mut R,
    max_attempts: u64,
) -> Result<EventLog> {
    condition.validate(n, params)?;
    let sampler = match condition {
        Condition::UniformAgePrior => Some(AgeSampler::new(n, params)?),
        _ => None,
    };
    let cap = rejection_cap(condition, n);
    let (t, start) = replicate_age(condition, sampler.as_ref(), rng);
    for _ in 0..max_attempts {
        let log = simulate_capped(params, t, start, cap, rng)?;
        if satisfies(condition, n, &log) {
            return Ok(log);
        }
    }
    Err(Error::McBudget {
        accepted: 0,
        attempted: max_attempts,
        rate: 0.0,
    })
}

/// Aggregated Monte-Carlo estimate of a scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub accepted: u64,
    pub attempted: u64,
    pub seed: u64,
}

/// Attempt budget per accepted replicate used by [`mc_ltt`].
pub const DEFAULT_MAX_ATTEMPTS: u64 = 200_000;

/// Monte-Carlo LTT curve: per-sigma mean and standard error of the
/// reconstructed lineage count over `reps` accepted trees.
///
/// Deterministic for a fixed seed: replicate `i` draws from ChaCha stream
/// `i` of `seed`, and aggregation runs in replicate order.
pub fn mc_ltt(
    condition: &Condition,
    n: u32,
    params: &BirthDeathParams,
    sigma_grid: &[f64],
    reps: u64,
    seed: u64,
) -> Result<LttCurve> {
    mc_ltt_with_dump(condition, n, params, sigma_grid, reps, seed, None)
}

/// [`mc_ltt`] with an optional newline-delimited dump of per-tree lineage
/// counts. Column order: `replicate,sigma,count`.
pub fn mc_ltt_with_dump(
    condition: &Condition,
    n: u32,
    params: &BirthDeathParams,
    sigma_grid: &[f64],
    reps: u64,
    seed: u64,
    mut dump: Option<&mut dyn Write>,
) -> Result<LttCurve> {
    if reps < 100 {
        return Err(Error::Domain("reps must be >= 100".into()));
    }
    crate::analytic::validate_grid(sigma_grid)?;
    condition.validate(n, params)?;
    let sampler = match condition {
        Condition::UniformAgePrior => Some(AgeSampler::new(n, params)?),
        _ => None,
    };

    let cap = rejection_cap(condition, n);
    let mut sums = vec![0.0f64; sigma_grid.len()];
    let mut sq_sums = vec![0.0f64; sigma_grid.len()];
    let mut attempted_total = 0u64;

    for rep in 0..reps {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(rep);
        let (t, start) = replicate_age(condition, sampler.as_ref(), &mut rng);
        let mut accepted: Option<AcceptedTree> = None;
        let mut attempts = 0u64;
        while attempts < DEFAULT_MAX_ATTEMPTS {
            attempts += 1;
            let log = simulate_capped(params, t, start, cap, &mut rng)?;
            if satisfies(condition, n, &log) {
                accepted = Some(AcceptedTree {
                    view: ReconstructedView::new(&log),
                    t,
                });
                break;
            }
        }
        attempted_total += attempts;
        let Some(tree) = accepted else {
            return Err(Error::McBudget {
                accepted: rep,
                attempted: attempted_total,
                rate: rep as f64 / attempted_total as f64,
            });
        };
        for (i, &sigma) in sigma_grid.iter().enumerate() {
            let count = tree.view.count_at(sigma * tree.t)? as f64;
            sums[i] += count;
            sq_sums[i] += count * count;
            if let Some(w) = dump.as_deref_mut() {
                writeln!(w, "{rep},{sigma},{count}")?;
            }
        }
    }

    let points = sigma_grid
        .iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let mean = sums[i] / reps as f64;
            let var = (sq_sums[i] / reps as f64 - mean * mean).max(0.0);
            let stderr = (var / reps as f64).sqrt();
            CurvePoint {
                sigma,
                expected_lineages: mean,
                stderr: Some(stderr),
            }
        })
        .collect();

    Ok(LttCurve {
        condition: *condition,
        n,
        params: *params,
        source: CurveSource::MonteCarlo,
        points,
    })
}
