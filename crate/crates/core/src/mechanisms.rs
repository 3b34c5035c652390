//! Deferred-acceptance mechanisms and their benchmark counterparts.
//!
//! A mechanism is an immutable description; [`run_da`](DAMechanism::run_da)
//! executes it against realized values under the truthful agent model (an
//! agent stays active iff its value is at least its current price, so ties
//! favor staying). Execution is event-driven: prices move on the realized
//! values themselves, which makes winner payments exact rather than
//! grid-quantized, and every price movement or forced rejection flows
//! through a [`Responder`] so the pen-testing simulator can execute the
//! same mechanism against hidden ink levels and reproduce the run bit for
//! bit.
//!
//! Drop events carry a kind: `PricedOut` means the agent could no longer
//! afford its price (strictly `value < price`; a pen test at that level
//! fails), while `Released` is a mechanism-forced rejection at an
//! affordable price (`price <= value`; the pen is set aside after a
//! successful test). Clock mechanisms only ever release: the marginal agent
//! leaves at a price exactly equal to its value. Posted-price mechanisms
//! are where priced-out drops occur.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::curves::{virtual_price, CurveBundle, ValueDistribution, DEFAULT_GRID_RESOLUTION};
use crate::error::{Error, Result};
use crate::feasibility::FeasibilityConstraint;

/// Interaction discipline of a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// All agents face a price trajectory simultaneously; the auction stops
    /// the moment the active set becomes feasible.
    OfflineClock,
    /// Agents are processed in arrival order against prices fixed before
    /// any value is observed.
    OnlineOblivious,
    /// Agents are processed in a distribution-dependent order with
    /// per-agent precomputed prices.
    OnlineSequential,
}

/// Why an agent left the auction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropKind {
    /// The price rose above the agent's value.
    PricedOut,
    /// The mechanism rejected the agent at a price it could still afford.
    Released,
}

/// One departure from the active set.
#[derive(Debug, Clone, Serialize)]
pub struct DropEvent {
    pub agent: usize,
    /// The agent's (cumulative) price at the moment it left.
    pub price: f64,
    pub kind: DropKind,
}

/// One stage of a run: the post-stage price vector and the departures that
/// happened during the stage.
#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub stage: usize,
    pub prices: Vec<f64>,
    pub drops: Vec<DropEvent>,
}

/// Result of executing a mechanism on one value profile.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Winning agents, ascending.
    pub winners: Vec<usize>,
    /// Final price of each winner, parallel to `winners`.
    pub payments: Vec<f64>,
    /// Total value of the winners.
    pub surplus: f64,
    /// `Σ (value − payment)` over winners, accumulated in ascending index
    /// order — the exact stream the pen simulator reproduces.
    pub consumer_surplus: f64,
    pub trace: Vec<Stage>,
}

/// Answers "does agent `i` stay when its cumulative price rises to `p`?".
///
/// The truthful-values responder compares `value >= p`; the pen-testing
/// responder writes the price increment and reports whether the pen
/// survived. Every price increase an active agent experiences goes through
/// exactly one `stays` call.
pub(crate) trait Responder {
    fn stays(&mut self, agent: usize, price: f64) -> bool;
}

pub(crate) struct ValueResponder<'a> {
    pub values: &'a [f64],
}

impl Responder for ValueResponder<'_> {
    fn stays(&mut self, agent: usize, price: f64) -> bool {
        self.values[agent] >= price
    }
}

/// Per-agent interim allocation probabilities on a quantile grid.
#[derive(Debug, Clone)]
pub struct AllocationRule {
    /// Right endpoints of the quantile cells, ascending, ending at 1.
    pub breakpoints: Vec<f64>,
    /// `y[i][c]` = probability agent `i` wins given its quantile falls in
    /// cell `c`; non-increasing in `c`, values in `[0, 1]`.
    pub y: Vec<Vec<f64>>,
}

impl AllocationRule {
    fn validate(&self) -> Result<()> {
        for (i, yi) in self.y.iter().enumerate() {
            if yi.len() != self.breakpoints.len() {
                return Err(Error::invariant(format!(
                    "allocation rule for agent {i} has {} cells, expected {}",
                    yi.len(),
                    self.breakpoints.len()
                )));
            }
            for w in yi.windows(2) {
                if w[1] > w[0] + 1e-9 {
                    return Err(Error::invariant(format!(
                        "allocation rule for agent {i} increases in quantile"
                    )));
                }
            }
            if yi.iter().any(|p| !(-1e-12..=1.0 + 1e-12).contains(p)) {
                return Err(Error::invariant(format!(
                    "allocation probability out of [0,1] for agent {i}"
                )));
            }
        }
        Ok(())
    }

    /// Computes the exact interim allocation of a mechanism over
    /// finite-support (point-mass) priors by enumerating all value
    /// profiles. Cells are the atoms' quantile intervals.
    pub fn exact_discrete(mech: &DAMechanism) -> Result<Self> {
        let profiles = enumerate_profiles(mech.dists())?;
        let n = mech.dists().len();
        let cells: Vec<Vec<f64>> = mech
            .dists()
            .iter()
            .map(|d| match d {
                ValueDistribution::PointMasses { cum, .. } => cum.clone(),
                _ => unreachable!("enumerate_profiles admits only point masses"),
            })
            .collect();
        let mut win_mass = vec![vec![0.0; cells[0].len()]; n];
        for ce in &cells {
            if ce.len() != cells[0].len() {
                return Err(Error::Unsupported(
                    "exact allocation rule expects identical support sizes".into(),
                ));
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for profile in &profiles {
            let outcome = mech.run_da(&profile.values, &mut rng)?;
            for &w in &outcome.winners {
                win_mass[w][profile.atom_index[w]] += profile.probability;
            }
        }
        // Conditional win probability per atom cell.
        let mut y = vec![vec![0.0; cells[0].len()]; n];
        for i in 0..n {
            let mut lo = 0.0;
            for (c, &hi) in cells[i].iter().enumerate() {
                y[i][c] = win_mass[i][c] / (hi - lo);
                lo = hi;
            }
        }
        let rule = AllocationRule { breakpoints: cells[0].clone(), y };
        rule.validate()?;
        Ok(rule)
    }
}

use rand::SeedableRng;

/// One cell of the product of finite supports.
pub(crate) struct Profile {
    pub values: Vec<f64>,
    pub probability: f64,
    /// Per agent, which atom (by index into the distribution's `values`).
    pub atom_index: Vec<usize>,
}

/// Enumerates all value profiles of finite-support priors with their
/// probabilities. Errors on non-point-mass distributions.
pub(crate) fn enumerate_profiles(dists: &[ValueDistribution]) -> Result<Vec<Profile>> {
    let mut supports: Vec<(&[f64], &[f64])> = Vec::with_capacity(dists.len());
    for d in dists {
        match d {
            ValueDistribution::PointMasses { values, probabilities, .. } => {
                supports.push((values, probabilities));
            }
            _ => {
                return Err(Error::Unsupported(
                    "profile enumeration requires point-mass distributions".into(),
                ))
            }
        }
    }
    let total: usize = supports.iter().map(|(v, _)| v.len()).product();
    let mut profiles = Vec::with_capacity(total);
    let mut idx = vec![0usize; dists.len()];
    loop {
        let mut values = Vec::with_capacity(dists.len());
        let mut probability = 1.0;
        for (i, &(v, p)) in supports.iter().enumerate() {
            values.push(v[idx[i]]);
            probability *= p[idx[i]];
        }
        profiles.push(Profile { values, probability, atom_index: idx.clone() });
        // Odometer increment.
        let mut pos = dists.len();
        loop {
            if pos == 0 {
                return Ok(profiles);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < supports[pos].0.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

/// Shared execution state: price vector, active set, trace under
/// construction. All mutation goes through `raise` and `release` so the
/// monotone-price and nested-active-set invariants are enforced centrally.
struct Engine<'a> {
    responder: &'a mut dyn Responder,
    prices: Vec<f64>,
    active: Vec<bool>,
    trace: Vec<Stage>,
    drops: Vec<DropEvent>,
}

impl<'a> Engine<'a> {
    fn new(n: usize, responder: &'a mut dyn Responder) -> Self {
        Engine {
            responder,
            prices: vec![0.0; n],
            active: vec![true; n],
            trace: Vec::new(),
            drops: Vec::new(),
        }
    }

    /// Raises agent `i`'s price to `p` and consults the responder. Returns
    /// whether the agent is still active afterwards; a refusal records a
    /// priced-out drop.
    fn raise(&mut self, i: usize, p: f64) -> Result<bool> {
        debug_assert!(self.active[i]);
        if p < self.prices[i] {
            return Err(Error::invariant(format!(
                "price decrease for agent {i}: {} -> {p}",
                self.prices[i]
            )));
        }
        if p > self.prices[i] {
            let stays = self.responder.stays(i, p);
            self.prices[i] = p;
            if !stays {
                self.active[i] = false;
                self.drops.push(DropEvent { agent: i, price: p, kind: DropKind::PricedOut });
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Rejects agent `i` outright at its current (already affordable)
    /// price. No test is issued: any price movement already went through
    /// `raise`.
    fn release(&mut self, i: usize) {
        debug_assert!(self.active[i]);
        self.active[i] = false;
        self.drops.push(DropEvent { agent: i, price: self.prices[i], kind: DropKind::Released });
    }

    /// Closes the current stage, snapshotting prices. Stages with no price
    /// movement and no drops are elided.
    fn end_stage(&mut self) {
        let moved = !self.drops.is_empty()
            || self.trace.last().map_or_else(
                || self.prices.iter().any(|&p| p != 0.0),
                |last| last.prices != self.prices,
            );
        if moved {
            self.trace.push(Stage {
                stage: self.trace.len(),
                prices: self.prices.clone(),
                drops: std::mem::take(&mut self.drops),
            });
        }
    }

    fn active_indices(&self) -> Vec<usize> {
        self.active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect()
    }

    fn finish(self, values: &[f64]) -> EngineRun {
        EngineRun {
            winners: self.active_indices(),
            prices: self.prices,
            trace: self.trace,
            _values_len: values.len(),
        }
    }
}

struct EngineRun {
    winners: Vec<usize>,
    prices: Vec<f64>,
    trace: Vec<Stage>,
    _values_len: usize,
}

// ---------------------------------------------------------------------------
// Mechanism descriptions
// ---------------------------------------------------------------------------

/// Which of the two knapsack sub-mechanisms a `knapsack_da` committed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnapsackBranch {
    /// Ratio clock: reject ascending `v_i/s_i` until the remainder fits.
    BangPerBuck,
    /// Single-winner value clock over the agents that fit at all.
    MaxValue,
}

#[derive(Clone)]
enum MechKind {
    KClock {
        k: usize,
    },
    MatroidDa,
    KnapsackDa {
        sizes: Vec<f64>,
        capacity: f64,
        branch: KnapsackBranch,
        branch_trials: u64,
        branch_seed: u64,
    },
    Prophet {
        threshold: f64,
    },
    Gsp {
        k: usize,
        quantities: Vec<f64>,
        offers: Vec<f64>,
        order: Vec<usize>,
    },
    IidPosted {
        price: f64,
        q_star: f64,
    },
    Transformed {
        base: Box<DAMechanism>,
        bundles: Arc<Vec<CurveBundle>>,
    },
}

/// An immutable deferred-acceptance mechanism description.
#[derive(Clone)]
pub struct DAMechanism {
    constraint: FeasibilityConstraint,
    dists: Vec<ValueDistribution>,
    mode: Mode,
    kind: MechKind,
}

impl std::fmt::Debug for DAMechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DAMechanism {{ kind: {}, n: {}, mode: {:?} }}", self.label(), self.n(), self.mode)
    }
}

fn check_agents(dists: &[ValueDistribution]) -> Result<()> {
    if dists.is_empty() {
        return Err(Error::domain("mechanism needs at least one agent"));
    }
    Ok(())
}

impl DAMechanism {
    /// Uniform ascending clock that stops when at most `k` agents remain.
    pub fn k_clock_da(k: usize, dists: Vec<ValueDistribution>) -> Result<Self> {
        check_agents(&dists)?;
        let constraint = FeasibilityConstraint::k_of_n(dists.len(), k)?;
        Ok(DAMechanism { constraint, dists, mode: Mode::OfflineClock, kind: MechKind::KClock { k } })
    }

    /// Ascending clock for a matroid constraint: while the active set is
    /// dependent, the cheapest agent lying in some circuit is rejected at
    /// its value; agents that become essential (in no circuit) have their
    /// clocks frozen and pay the level at which they froze.
    pub fn matroid_da(matroid: FeasibilityConstraint, dists: Vec<ValueDistribution>) -> Result<Self> {
        check_agents(&dists)?;
        let FeasibilityConstraint::Matroid(_) = &matroid else {
            return Err(Error::Unsupported("matroid_da requires a matroid constraint".into()));
        };
        if matroid.n() != dists.len() {
            return Err(Error::domain("matroid ground set must match the number of agents"));
        }
        Ok(DAMechanism { constraint: matroid, dists, mode: Mode::OfflineClock, kind: MechKind::MatroidDa })
    }

    /// Two-branch knapsack mechanism: commits, before seeing values, to
    /// either the bang-per-buck ratio clock or the max-value clock —
    /// whichever has the larger Monte Carlo estimate of expected surplus
    /// over the priors. The estimation seed is part of the mechanism's
    /// identity.
    pub fn knapsack_da(
        sizes: Vec<f64>,
        capacity: f64,
        dists: Vec<ValueDistribution>,
        branch_trials: u64,
        branch_seed: u64,
    ) -> Result<Self> {
        check_agents(&dists)?;
        if sizes.len() != dists.len() {
            return Err(Error::domain("sizes must match the number of agents"));
        }
        let constraint = FeasibilityConstraint::knapsack(sizes.clone(), capacity)?;
        if branch_trials == 0 {
            return Err(Error::domain("branch estimation needs at least one trial"));
        }
        let mut bpb_total = 0.0;
        let mut max_total = 0.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(branch_seed);
        let mut values = vec![0.0; dists.len()];
        for _ in 0..branch_trials {
            for (v, d) in values.iter_mut().zip(&dists) {
                *v = d.sample(&mut rng);
            }
            bpb_total += bang_per_buck_surplus(&values, &sizes, capacity);
            max_total += max_value_surplus(&values, &sizes, capacity);
        }
        let branch = if bpb_total >= max_total {
            KnapsackBranch::BangPerBuck
        } else {
            KnapsackBranch::MaxValue
        };
        Ok(DAMechanism {
            constraint,
            dists,
            mode: Mode::OfflineClock,
            kind: MechKind::KnapsackDa { sizes, capacity, branch, branch_trials, branch_seed },
        })
    }

    /// Single-item anonymous posted price at the median of the maximum:
    /// the smallest `τ` with `Π_i F_i(τ) ≥ 1/2`, offered in arrival order.
    pub fn prophet_posted_price(dists: Vec<ValueDistribution>) -> Result<Self> {
        check_agents(&dists)?;
        let threshold = median_of_max(&dists);
        let constraint = FeasibilityConstraint::k_of_n(dists.len(), 1)?;
        Ok(DAMechanism {
            constraint,
            dists,
            mode: Mode::OnlineOblivious,
            kind: MechKind::Prophet { threshold },
        })
    }

    /// Sequential posted pricing for `k` identical goods: water-fills the
    /// ex-ante quantities `q_i` to a common marginal value, then offers
    /// `v_i(q_i)` in decreasing order of per-sale surplus `V_i(q_i)/q_i`
    /// until the goods run out.
    pub fn gsp_sequential(k: usize, dists: Vec<ValueDistribution>) -> Result<Self> {
        check_agents(&dists)?;
        let constraint = FeasibilityConstraint::k_of_n(dists.len(), k)?;
        let quantities = water_fill(&dists, k as f64)?;
        let mut offers = Vec::with_capacity(dists.len());
        let mut per_sale = Vec::with_capacity(dists.len());
        for (d, &q) in dists.iter().zip(&quantities) {
            if q > 0.0 {
                offers.push(d.inverse_demand(q)?);
                per_sale.push(d.surplus_curve(q)? / q);
            } else {
                offers.push(f64::INFINITY);
                per_sale.push(0.0);
            }
        }
        let mut order: Vec<usize> = (0..dists.len()).collect();
        order.sort_by(|&a, &b| per_sale[b].total_cmp(&per_sale[a]).then(a.cmp(&b)));
        Ok(DAMechanism {
            constraint,
            dists,
            mode: Mode::OnlineSequential,
            kind: MechKind::Gsp { k, quantities, offers, order },
        })
    }

    /// Single-item anonymous posted price for IID agents, at the quantile
    /// maximizing `(1 − (1−q)^n)/q · Ū(q)` on the curve grid (largest
    /// maximizer on ties).
    pub fn iid_posted_price(dist: ValueDistribution, n: usize, resolution: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("mechanism needs at least one agent"));
        }
        let bundle = CurveBundle::build(&dist, resolution)?;
        let mut best = (f64::NEG_INFINITY, 1.0);
        for (i, &q) in bundle.grid.iter().enumerate().skip(1) {
            // (1 − (1−q)^n)/q = Σ_{j<n} (1−q)^j, stable near q = 0.
            let mut sale = 0.0;
            let mut pw = 1.0;
            for _ in 0..n {
                sale += pw;
                pw *= 1.0 - q;
            }
            let g = sale * bundle.big_u_ironed[i];
            if g >= best.0 {
                best = (g, q);
            }
        }
        let q_star = best.1;
        let price = dist.inverse_demand(q_star)?;
        let dists = vec![dist; n];
        let constraint = FeasibilityConstraint::k_of_n(n, 1)?;
        Ok(DAMechanism {
            constraint,
            dists,
            mode: Mode::OnlineOblivious,
            kind: MechKind::IidPosted { price, q_star },
        })
    }

    /// Wraps a surplus mechanism so that every price it would post in
    /// ironed-virtual-value space is translated into real-value space:
    /// a virtual price `v̂` for agent `i` becomes `v_i(θ)` with
    /// `θ = sup{q : ū_i(q) ≥ v̂}`. Transforming an already-transformed
    /// mechanism returns it unchanged.
    pub fn virtual_transform(base: DAMechanism, resolution: usize) -> Result<DAMechanism> {
        if matches!(base.kind, MechKind::Transformed { .. }) {
            return Ok(base);
        }
        let bundles: Vec<CurveBundle> =
            base.dists.iter().map(|d| CurveBundle::build(d, resolution)).collect::<Result<_>>()?;
        Ok(DAMechanism {
            constraint: base.constraint.clone(),
            dists: base.dists.clone(),
            mode: base.mode,
            kind: MechKind::Transformed { base: Box::new(base), bundles: Arc::new(bundles) },
        })
    }

    pub fn constraint(&self) -> &FeasibilityConstraint {
        &self.constraint
    }

    pub fn dists(&self) -> &[ValueDistribution] {
        &self.dists
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.dists.len()
    }

    pub fn label(&self) -> &'static str {
        match &self.kind {
            MechKind::KClock { .. } => "k_clock",
            MechKind::MatroidDa => "matroid_da",
            MechKind::KnapsackDa { .. } => "knapsack_da",
            MechKind::Prophet { .. } => "prophet_posted_price",
            MechKind::Gsp { .. } => "gsp_sequential",
            MechKind::IidPosted { .. } => "iid_posted_price",
            MechKind::Transformed { .. } => "virtual_transform",
        }
    }

    /// The committed branch of a knapsack mechanism.
    pub fn knapsack_branch(&self) -> Option<KnapsackBranch> {
        match &self.kind {
            MechKind::KnapsackDa { branch, .. } => Some(*branch),
            _ => None,
        }
    }

    /// The posted threshold of the prophet rule or the IID posted price.
    pub fn posted_price(&self) -> Option<f64> {
        match &self.kind {
            MechKind::Prophet { threshold } => Some(*threshold),
            MechKind::IidPosted { price, .. } => Some(*price),
            _ => None,
        }
    }

    /// The water-filled ex-ante quantities of a sequential mechanism.
    pub fn gsp_quantities(&self) -> Option<&[f64]> {
        match &self.kind {
            MechKind::Gsp { quantities, .. } => Some(quantities),
            _ => None,
        }
    }

    /// Samples one value per agent from the priors.
    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.dists.iter().map(|d| d.sample(rng)).collect()
    }

    /// Executes the mechanism against realized values under truthful play.
    ///
    /// The RNG parameter exists for mechanisms with randomized components;
    /// all shipped mechanisms confine randomness to construction time, so
    /// it is currently unused.
    pub fn run_da<R: Rng + ?Sized>(&self, values: &[f64], rng: &mut R) -> Result<Outcome> {
        let _ = rng;
        let mut responder = ValueResponder { values };
        let run = self.run_with(values, &mut responder)?;
        Ok(self.settle(values, run))
    }

    /// Core dispatch shared by [`run_da`](Self::run_da) and the pen-testing
    /// adapter. `hints` carry the realized values for event scheduling (the
    /// clock moves on realized values so payments are exact); all stay/drop
    /// decisions go through the responder.
    pub(crate) fn run_with(
        &self,
        hints: &[f64],
        responder: &mut dyn Responder,
    ) -> Result<EngineOutcome> {
        if hints.len() != self.n() {
            return Err(Error::domain("value profile length must match the number of agents"));
        }
        if hints.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain("values must be finite and nonnegative"));
        }
        let run = match &self.kind {
            MechKind::KClock { k } => {
                let k = *k;
                run_value_clock(hints, responder, &[], |active| count(active) <= k)?
            }
            MechKind::MatroidDa => run_matroid_clock(&self.constraint, hints, responder)?,
            MechKind::KnapsackDa { sizes, capacity, branch, .. } => {
                let oversized: Vec<usize> =
                    (0..hints.len()).filter(|&i| sizes[i] > *capacity).collect();
                match branch {
                    KnapsackBranch::BangPerBuck => {
                        run_ratio_clock(hints, sizes, *capacity, &oversized, responder)?
                    }
                    KnapsackBranch::MaxValue => {
                        run_value_clock(hints, responder, &oversized, |active| count(active) <= 1)?
                    }
                }
            }
            MechKind::Prophet { threshold } => {
                run_posted(hints.len(), |_| *threshold, 1, None, responder)?
            }
            MechKind::IidPosted { price, .. } => {
                run_posted(hints.len(), |_| *price, 1, None, responder)?
            }
            MechKind::Gsp { k, offers, order, .. } => {
                run_posted(hints.len(), |i| offers[i], *k, Some(order), responder)?
            }
            MechKind::Transformed { base, bundles } => {
                run_transformed(base, bundles, hints, responder)?
            }
        };
        Ok(EngineOutcome { winners: run.winners, prices: run.prices, trace: run.trace })
    }

    fn settle(&self, values: &[f64], run: EngineOutcome) -> Outcome {
        let mut surplus = 0.0;
        let mut consumer_surplus = 0.0;
        let mut payments = Vec::with_capacity(run.winners.len());
        for &w in &run.winners {
            surplus += values[w];
            consumer_surplus += values[w] - run.prices[w];
            payments.push(run.prices[w]);
        }
        Outcome {
            winners: run.winners,
            payments,
            surplus,
            consumer_surplus,
            trace: run.trace,
        }
    }

    /// Checks the deferred-acceptance invariants of a finished run:
    /// per-agent non-decreasing prices, nested active sets, winners pay at
    /// most their values, winners feasible, and (for offline clocks)
    /// termination exactly when the active set first became feasible.
    pub fn validate_outcome(&self, values: &[f64], outcome: &Outcome) -> Result<()> {
        let n = self.n();
        let mut prev = vec![0.0; n];
        let mut active = vec![true; n];
        for stage in &outcome.trace {
            if stage.prices.len() != n {
                return Err(Error::invariant("stage price vector has wrong length".into()));
            }
            for i in 0..n {
                if stage.prices[i] < prev[i] {
                    return Err(Error::invariant(format!("price of agent {i} decreased")));
                }
            }
            for d in &stage.drops {
                if !active[d.agent] {
                    return Err(Error::invariant(format!(
                        "agent {} dropped twice — active sets are not nested",
                        d.agent
                    )));
                }
                active[d.agent] = false;
                match d.kind {
                    DropKind::PricedOut => {
                        if values[d.agent] >= d.price {
                            return Err(Error::invariant(format!(
                                "agent {} marked priced-out at an affordable price",
                                d.agent
                            )));
                        }
                    }
                    DropKind::Released => {
                        if values[d.agent] < d.price {
                            return Err(Error::invariant(format!(
                                "agent {} released at an unaffordable price",
                                d.agent
                            )));
                        }
                    }
                }
            }
            prev = stage.prices.clone();
        }
        let survivors: Vec<usize> =
            active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect();
        if survivors != outcome.winners {
            return Err(Error::invariant("winners differ from the surviving active set".into()));
        }
        for (&w, &p) in outcome.winners.iter().zip(&outcome.payments) {
            if values[w] < p {
                return Err(Error::invariant(format!("winner {w} pays more than its value")));
            }
        }
        if !self.terminal_feasible(&active)? {
            return Err(Error::invariant("terminal active set is infeasible".into()));
        }
        if self.mode == Mode::OfflineClock {
            // Replay the drops to confirm the run stopped at the *first*
            // feasible active set.
            let mut replay = vec![true; n];
            let all_drops: Vec<&DropEvent> =
                outcome.trace.iter().flat_map(|s| s.drops.iter()).collect();
            for (idx, d) in all_drops.iter().enumerate() {
                if idx < all_drops.len() && self.terminal_feasible(&replay)? {
                    return Err(Error::invariant(
                        "clock kept running past a feasible active set".into(),
                    ));
                }
                replay[d.agent] = false;
            }
        }
        let paid: f64 = outcome.payments.iter().sum();
        let scale = outcome.surplus.abs().max(1.0);
        if (outcome.consumer_surplus - (outcome.surplus - paid)).abs() > 1e-9 * scale {
            return Err(Error::invariant(
                "consumer surplus does not equal surplus minus payments".into(),
            ));
        }
        Ok(())
    }

    /// Feasibility notion the run terminates on: the declared constraint,
    /// except for the max-value knapsack branch, which is a single-winner
    /// clock (its winner is feasible for the knapsack by construction).
    fn terminal_feasible(&self, active: &[bool]) -> Result<bool> {
        match &self.kind {
            MechKind::KnapsackDa { branch: KnapsackBranch::MaxValue, sizes, capacity, .. } => {
                Ok(count(active) <= 1
                    && active
                        .iter()
                        .enumerate()
                        .all(|(i, &a)| !a || sizes[i] <= *capacity))
            }
            MechKind::Transformed { base, .. } => base.terminal_feasible(active),
            _ => Ok(self.constraint.is_feasible_mask(active)),
        }
    }
}

pub(crate) struct EngineOutcome {
    pub winners: Vec<usize>,
    pub prices: Vec<f64>,
    pub trace: Vec<Stage>,
}

fn count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&a| a).count()
}

// ---------------------------------------------------------------------------
// Concrete runners
// ---------------------------------------------------------------------------

/// Ascending uniform clock: the price rises through the realized values;
/// at each level the agents whose value equals the level are released one
/// by one (ascending index) until `feasible` holds. `pre_released` agents
/// are rejected at price zero before the clock starts.
fn run_value_clock(
    values: &[f64],
    responder: &mut dyn Responder,
    pre_released: &[usize],
    feasible: impl Fn(&[bool]) -> bool,
) -> Result<EngineRun> {
    let mut eng = Engine::new(values.len(), responder);
    for &i in pre_released {
        eng.release(i);
    }
    eng.end_stage();
    if !feasible(&eng.active) {
        let mut levels: Vec<f64> = eng
            .active_indices()
            .iter()
            .map(|&i| values[i])
            .collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        'clock: for &level in &levels {
            for i in 0..values.len() {
                if eng.active[i] && !eng.raise(i, level)? {
                    return Err(Error::invariant(
                        "agent refused a clock level at or below its value".into(),
                    ));
                }
            }
            for i in 0..values.len() {
                if eng.active[i] && values[i] == level {
                    eng.release(i);
                    if feasible(&eng.active) {
                        eng.end_stage();
                        break 'clock;
                    }
                }
            }
            eng.end_stage();
        }
    }
    Ok(eng.finish(values))
}

/// Matroid clock with frozen essentials: while the active set is
/// dependent, all agents still lying in some circuit see the clock rise to
/// the cheapest such agent's value, and that agent is released. Agents in
/// no circuit are essential — they can no longer be rejected, so their
/// prices freeze and become their payments.
fn run_matroid_clock(
    constraint: &FeasibilityConstraint,
    values: &[f64],
    responder: &mut dyn Responder,
) -> Result<EngineRun> {
    let FeasibilityConstraint::Matroid(oracle) = constraint else {
        return Err(Error::Unsupported("matroid clock requires a matroid constraint".into()));
    };
    let mut eng = Engine::new(values.len(), responder);
    loop {
        let mut mask = eng.active.clone();
        let size = count(&mask);
        let rank = oracle.rank(&mask);
        if rank == size {
            break;
        }
        // Agents lying in some circuit: removing them does not lower the rank.
        let mut in_circuit = Vec::new();
        for i in 0..values.len() {
            if !mask[i] {
                continue;
            }
            mask[i] = false;
            if oracle.rank(&mask) == rank {
                in_circuit.push(i);
            }
            mask[i] = true;
        }
        let &victim = in_circuit
            .iter()
            .min_by(|&&a, &&b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
            .expect("a dependent set has a circuit");
        let level = values[victim];
        for &i in &in_circuit {
            if !eng.raise(i, level)? {
                return Err(Error::invariant(
                    "agent refused a clock level at or below its value".into(),
                ));
            }
        }
        eng.release(victim);
        eng.end_stage();
    }
    Ok(eng.finish(values))
}

/// Bang-per-buck ratio clock: every active agent's price is `ρ·s_i` as the
/// ratio level `ρ` ascends; agents at the current ratio are released
/// (ascending index) until the remaining sizes fit the capacity.
fn run_ratio_clock(
    values: &[f64],
    sizes: &[f64],
    capacity: f64,
    pre_released: &[usize],
    responder: &mut dyn Responder,
) -> Result<EngineRun> {
    let n = values.len();
    let ratios: Vec<f64> = (0..n).map(|i| values[i] / sizes[i]).collect();
    let fits = |active: &[bool]| -> bool {
        let total: f64 = active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| sizes[i]).sum();
        total <= capacity
    };
    let mut eng = Engine::new(n, responder);
    for &i in pre_released {
        eng.release(i);
    }
    eng.end_stage();
    if !fits(&eng.active) {
        let mut levels: Vec<f64> =
            eng.active_indices().iter().map(|&i| ratios[i]).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        'clock: for &rho in &levels {
            for i in 0..n {
                if eng.active[i] && !eng.raise(i, rho * sizes[i])? {
                    return Err(Error::invariant(
                        "agent refused a clock level at or below its value".into(),
                    ));
                }
            }
            for i in 0..n {
                if eng.active[i] && ratios[i] == rho {
                    eng.release(i);
                    if fits(&eng.active) {
                        eng.end_stage();
                        break 'clock;
                    }
                }
            }
            eng.end_stage();
        }
    }
    Ok(eng.finish(values))
}

/// Sequential posted prices: offer `price(i)` to agents in `order` (or
/// index order) until `goods` are sold; everyone else is released at their
/// standing price. An infinite offer skips the agent (released unoffered).
fn run_posted(
    n: usize,
    price: impl Fn(usize) -> f64,
    goods: usize,
    order: Option<&[usize]>,
    responder: &mut dyn Responder,
) -> Result<EngineRun> {
    let default_order: Vec<usize>;
    let order = match order {
        Some(o) => o,
        None => {
            default_order = (0..n).collect();
            &default_order
        }
    };
    let mut eng = Engine::new(n, responder);
    let mut sold = 0usize;
    for &i in order {
        if sold == goods {
            break;
        }
        let p = price(i);
        if !p.is_finite() {
            continue;
        }
        if eng.raise(i, p)? {
            sold += 1;
        }
        eng.end_stage();
    }
    // Everyone not sold to is rejected at their standing price.
    let winners: Vec<usize> = Vec::new();
    let _ = winners;
    let sold_set: Vec<usize> = eng.active_indices();
    let mut taken = 0usize;
    let mut is_winner = vec![false; n];
    for &i in order {
        if taken == goods {
            break;
        }
        if sold_set.contains(&i) && price(i).is_finite() && eng.prices[i] == price(i) && eng.prices[i] > 0.0
        {
            is_winner[i] = true;
            taken += 1;
        }
    }
    // Zero-price offers also count as sales; reconstruct winners from the
    // offer sequence instead of price comparison.
    let run = finish_posted(eng, order, goods, &price);
    run
}

fn finish_posted(
    mut eng: Engine<'_>,
    order: &[usize],
    goods: usize,
    price: &impl Fn(usize) -> f64,
) -> Result<EngineRun> {
    // Winners are the first `goods` agents in offer order that were offered
    // a finite price and stayed.
    let mut sold = 0usize;
    let mut winner_mask = vec![false; eng.active.len()];
    for &i in order {
        if sold == goods {
            break;
        }
        if eng.active[i] && price(i).is_finite() {
            winner_mask[i] = true;
            sold += 1;
        }
    }
    for i in 0..eng.active.len() {
        if eng.active[i] && !winner_mask[i] {
            eng.release(i);
        }
    }
    eng.end_stage();
    Ok(eng.finish(&vec![0.0; winner_mask.len()]))
}

/// Runs the base mechanism in ironed-virtual-value space and replays its
/// trace with every virtual price mapped through the agent's virtual-price
/// curve. Drops dictated by the base become priced-out or released
/// depending on whether the real agent could afford the mapped price.
fn run_transformed(
    base: &DAMechanism,
    bundles: &[CurveBundle],
    values: &[f64],
    responder: &mut dyn Responder,
) -> Result<EngineRun> {
    let n = values.len();
    let mut virtual_values = Vec::with_capacity(n);
    for (i, &v) in values.iter().enumerate() {
        let q = base.dists[i].quantile_of(v);
        let w = if q == 0.0 {
            // A value above the entire support: strongest type.
            bundles[i].u_ironed_at(f64::MIN_POSITIVE)?
        } else {
            bundles[i].u_ironed_at(q)?
        };
        virtual_values.push(w);
    }
    let mut base_responder = ValueResponder { values: &virtual_values };
    let base_run = base.run_with(&virtual_values, &mut base_responder)?;

    let mut eng = Engine::new(n, responder);
    let mut prev_virtual = vec![0.0; n];
    for stage in &base_run.trace {
        // Map the price movements of agents still active in the real run.
        for i in 0..n {
            if !eng.active[i] || stage.prices[i] <= prev_virtual[i] {
                continue;
            }
            let vhat = stage.prices[i];
            let (_, mapped) = virtual_price(&bundles[i], &base.dists[i], vhat)?;
            if mapped.is_finite() {
                // A refusal here is a genuine priced-out drop; the base
                // necessarily drops the agent in this same stage.
                let _ = eng.raise(i, mapped)?;
            } else {
                // Rejection level on an unbounded support: the agent is
                // turned away at its standing price.
                eng.release(i);
            }
            prev_virtual[i] = vhat;
        }
        for d in &stage.drops {
            if eng.active[d.agent] {
                eng.release(d.agent);
            }
        }
        eng.end_stage();
    }
    let run = eng.finish(values);
    if run.winners != base_run.winners {
        return Err(Error::invariant(
            "transformed run diverged from the base mechanism's winners".into(),
        ));
    }
    Ok(run)
}

// ---------------------------------------------------------------------------
// Construction helpers
// ---------------------------------------------------------------------------

/// Surplus of the bang-per-buck prefix: agents in decreasing `v_i/s_i`
/// (ties to higher index, matching the clock's ascending-index releases),
/// cut at the longest prefix that fits entirely.
pub(crate) fn bang_per_buck_surplus(values: &[f64], sizes: &[f64], capacity: f64) -> f64 {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| sizes[i] <= capacity).collect();
    order.sort_by(|&a, &b| {
        (values[b] / sizes[b])
            .total_cmp(&(values[a] / sizes[a]))
            .then(b.cmp(&a))
    });
    let mut room = capacity;
    let mut used = 0.0;
    let mut surplus = 0.0;
    for &i in &order {
        if used + sizes[i] <= capacity {
            used += sizes[i];
            surplus += values[i];
        } else {
            break;
        }
    }
    let _ = room;
    surplus
}

/// Surplus of the max-value branch: the single highest-value agent that
/// fits (ties to higher index, matching the clock).
pub(crate) fn max_value_surplus(values: &[f64], sizes: &[f64], capacity: f64) -> f64 {
    (0..values.len())
        .filter(|&i| sizes[i] <= capacity)
        .map(|i| values[i])
        .fold(0.0, f64::max)
}

/// Smallest `τ` with `Π_i F_i(τ) ≥ 1/2` — the median of the maximum value.
fn median_of_max(dists: &[ValueDistribution]) -> f64 {
    let prod = |t: f64| -> f64 { dists.iter().map(|d| d.cdf(t)).product() };
    if prod(0.0) >= 0.5 {
        return 0.0;
    }
    let mut hi = 1.0;
    let bounded: Option<f64> = dists
        .iter()
        .map(|d| d.support_top())
        .fold(Some(0.0_f64), |acc, t| match (acc, t.is_finite()) {
            (Some(m), true) => Some(m.max(t)),
            _ => None,
        });
    match bounded {
        Some(top) => hi = top,
        None => {
            while prod(hi) < 0.5 {
                hi *= 2.0;
            }
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prod(mid) >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    hi
}

/// Water-filling: the largest common marginal value `λ` with
/// `Σ_i sup{q : v_i(q) ≥ λ} ≤ goods`, and the corresponding quantities.
/// The bisection tightens `Σ q_i` to within 1e-10 where the sum is
/// continuous in `λ`.
fn water_fill(dists: &[ValueDistribution], goods: f64) -> Result<Vec<f64>> {
    let total_at = |lambda: f64| -> f64 { dists.iter().map(|d| d.quantile_of(lambda)).sum() };
    if total_at(0.0) <= goods {
        return Ok(dists.iter().map(|d| d.quantile_of(0.0)).collect());
    }
    let mut hi = 1.0;
    while total_at(hi) > goods {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Degenerate("water-filling level diverged".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_at(mid) > goods {
            lo = mid;
        } else {
            hi = mid;
        }
        if (total_at(hi) - goods).abs() <= 1e-10 {
            break;
        }
    }
    Ok(dists.iter().map(|d| d.quantile_of(hi)).collect())
}

// ---------------------------------------------------------------------------
// Benchmarks and auxiliary allocation procedures
// ---------------------------------------------------------------------------

/// Total surplus of the ex-ante relaxation at quantities `qvec`:
/// `Σ_i V_i(q_i)`.
pub fn ear_value(qvec: &[f64], dists: &[ValueDistribution]) -> Result<f64> {
    if qvec.len() != dists.len() {
        return Err(Error::domain("quantity vector must match the number of agents"));
    }
    let mut total = 0.0;
    for (d, &q) in dists.iter().zip(qvec) {
        total += d.surplus_curve(q)?;
    }
    Ok(total)
}

/// The ε-buffering quantile remap: the top `ε` of quantile mass collapses
/// to 0 and the bottom `ε` to 1, with the middle stretched linearly.
pub fn buffered_quantile(q: f64, eps: f64) -> Result<f64> {
    if !(q.is_finite() && (0.0..=1.0).contains(&q)) {
        return Err(Error::domain("quantile must lie in [0,1]"));
    }
    if !(eps.is_finite() && (0.0..0.5).contains(&eps)) {
        return Err(Error::domain("buffering epsilon must lie in [0, 1/2)"));
    }
    Ok(if q <= eps {
        0.0
    } else if q >= 1.0 - eps {
        1.0
    } else {
        (q - eps) / (1.0 - 2.0 * eps)
    })
}

/// One realization of the ε-buffered surplus-optimal allocation: quantiles
/// are buffered, agents are selected by maximum weight under the buffered
/// values, and the selection's *true* surplus is returned.
pub fn buffered_opt_surplus(
    constraint: &FeasibilityConstraint,
    dists: &[ValueDistribution],
    eps: f64,
    quantiles: &[f64],
) -> Result<f64> {
    if quantiles.len() != dists.len() {
        return Err(Error::domain("quantile vector must match the number of agents"));
    }
    let true_values: Vec<f64> = dists
        .iter()
        .zip(quantiles)
        .map(|(d, &q)| d.inverse_demand_raw_pub(q))
        .collect();
    let mut weights = Vec::with_capacity(dists.len());
    let mut finite_cap = 0.0_f64;
    for (d, &q) in dists.iter().zip(quantiles) {
        let bq = buffered_quantile(q, eps)?;
        let w = d.inverse_demand(bq)?;
        if w.is_finite() {
            finite_cap = finite_cap.max(w);
        }
        weights.push(w);
    }
    // Weight for "treated as the strongest type" on an unbounded support:
    // anything that dominates every finite weight.
    let cap = 2.0 * finite_cap.max(1.0);
    for w in weights.iter_mut() {
        if !w.is_finite() {
            *w = cap;
        }
    }
    let (selected, _) = constraint.max_weight_feasible(&weights)?;
    Ok(selected.iter().map(|&i| true_values[i]).sum())
}

/// One realization of the consumer-surplus benchmark: selects the
/// max-weight feasible set under the ironed virtual values `ū_i(q_i)` and
/// returns the realized ironed virtual surplus. Ties are broken by a
/// uniform-random priority, independent of where within an ironed interval
/// the quantile fell. Its expectation is the optimal consumer surplus.
pub fn opt_cs_benchmark<R: Rng + ?Sized>(
    constraint: &FeasibilityConstraint,
    bundles: &[CurveBundle],
    quantiles: &[f64],
    rng: &mut R,
) -> Result<f64> {
    if matches!(constraint, FeasibilityConstraint::Knapsack { .. }) {
        return Err(Error::Unsupported(
            "the consumer-surplus benchmark does not cover knapsack constraints".into(),
        ));
    }
    if quantiles.len() != bundles.len() || quantiles.len() != constraint.n() {
        return Err(Error::domain("quantile vector must match the number of agents"));
    }
    let n = quantiles.len();
    let mut weights = Vec::with_capacity(n);
    for (b, &q) in bundles.iter().zip(quantiles) {
        weights.push(b.u_ironed_at(q.max(f64::MIN_POSITIVE))?);
    }
    // Random priorities decide ties; selection happens on a permuted index
    // space so equal weights are ordered by priority, then mapped back.
    let mut priority: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        priority.swap(i, j);
    }
    let mut slot_of = vec![0usize; n];
    for (slot, &agent) in priority.iter().enumerate() {
        slot_of[agent] = slot;
    }
    let permuted: Vec<f64> = priority.iter().map(|&agent| weights[agent]).collect();
    let permuted_constraint = permute_constraint(constraint, &priority, &slot_of)?;
    let (selected_slots, total) = permuted_constraint.max_weight_feasible(&permuted)?;
    let _ = selected_slots;
    Ok(total)
}

/// Rebuilds a constraint over permuted agent indices (`slot -> agent` given
/// by `priority`).
fn permute_constraint(
    constraint: &FeasibilityConstraint,
    priority: &[usize],
    slot_of: &[usize],
) -> Result<FeasibilityConstraint> {
    use std::collections::BTreeSet;
    Ok(match constraint {
        FeasibilityConstraint::KofN { n, k } => FeasibilityConstraint::KofN { n: *n, k: *k },
        FeasibilityConstraint::Matroid(oracle) => {
            FeasibilityConstraint::Matroid(Arc::new(PermutedOracle {
                inner: Arc::clone(oracle),
                slot_to_agent: priority.to_vec(),
            }))
        }
        FeasibilityConstraint::Knapsack { .. } => unreachable!("rejected above"),
        FeasibilityConstraint::ExplicitFamily { n, sets, downward_closed } => {
            let remapped: Vec<BTreeSet<usize>> = sets
                .iter()
                .map(|s| s.iter().map(|&agent| slot_of[agent]).collect())
                .collect();
            FeasibilityConstraint::ExplicitFamily {
                n: *n,
                sets: remapped,
                downward_closed: *downward_closed,
            }
        }
    })
}

struct PermutedOracle {
    inner: Arc<dyn crate::feasibility::RankOracle>,
    slot_to_agent: Vec<usize>,
}

impl crate::feasibility::RankOracle for PermutedOracle {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn rank(&self, members: &[bool]) -> usize {
        let mut original = vec![false; members.len()];
        for (slot, &m) in members.iter().enumerate() {
            if m {
                original[self.slot_to_agent[slot]] = true;
            }
        }
        self.inner.rank(&original)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn exp_dists(n: usize) -> Vec<ValueDistribution> {
        (0..n).map(|_| ValueDistribution::exponential(1.0).unwrap()).collect()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn k_clock_second_price() {
        let mech = DAMechanism::k_clock_da(1, exp_dists(3)).unwrap();
        let out = mech.run_da(&[5.0, 2.0, 9.0], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![2]);
        assert_eq!(out.payments, vec![5.0]);
        assert_eq!(out.surplus, 9.0);
        assert_eq!(out.consumer_surplus, 4.0);
        mech.validate_outcome(&[5.0, 2.0, 9.0], &out).unwrap();
    }

    #[test]
    fn k_clock_two_goods() {
        let mech = DAMechanism::k_clock_da(2, exp_dists(3)).unwrap();
        let out = mech.run_da(&[5.0, 2.0, 9.0], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0, 2]);
        assert_eq!(out.payments, vec![2.0, 2.0]);
        assert_eq!(out.consumer_surplus, 10.0);
        mech.validate_outcome(&[5.0, 2.0, 9.0], &out).unwrap();
    }

    #[test]
    fn k_clock_all_feasible_is_free() {
        let mech = DAMechanism::k_clock_da(3, exp_dists(3)).unwrap();
        let out = mech.run_da(&[5.0, 2.0, 9.0], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0, 1, 2]);
        assert_eq!(out.payments, vec![0.0, 0.0, 0.0]);
        assert!(out.trace.is_empty());
        assert_eq!(out.consumer_surplus, 16.0);
    }

    #[test]
    fn k_clock_tie_drops_lowest_index() {
        let mech = DAMechanism::k_clock_da(1, exp_dists(3)).unwrap();
        let out = mech.run_da(&[4.0, 4.0, 4.0], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![2]);
        assert_eq!(out.payments, vec![4.0]);
        assert_eq!(out.consumer_surplus, 0.0);
        mech.validate_outcome(&[4.0, 4.0, 4.0], &out).unwrap();
    }

    #[test]
    fn matroid_da_triangle() {
        use crate::feasibility::GraphicMatroid;
        let matroid = FeasibilityConstraint::matroid(Arc::new(GraphicMatroid {
            n_vertices: 3,
            edges: vec![(0, 1), (1, 2), (2, 0)],
        }))
        .unwrap();
        let mech = DAMechanism::matroid_da(matroid, exp_dists(3)).unwrap();
        let values = [3.0, 2.0, 1.0];
        let out = mech.run_da(&values, &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0, 1]);
        // Both survivors were in the triangle's circuit when the clock
        // stopped at level 1, so both pay 1.
        assert_eq!(out.payments, vec![1.0, 1.0]);
        mech.validate_outcome(&values, &out).unwrap();
    }

    #[test]
    fn matroid_da_freezes_essential_agents() {
        use crate::feasibility::GraphicMatroid;
        // Two disjoint triangles: edges 0-2 cheap, edges 3-5 expensive.
        let matroid = FeasibilityConstraint::matroid(Arc::new(GraphicMatroid {
            n_vertices: 6,
            edges: vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)],
        }))
        .unwrap();
        let mech = DAMechanism::matroid_da(matroid, exp_dists(6)).unwrap();
        let values = [1.0, 2.0, 3.0, 10.0, 20.0, 30.0];
        let out = mech.run_da(&values, &mut rng()).unwrap();
        assert_eq!(out.winners, vec![1, 2, 4, 5]);
        // Edges 1 and 2 became essential when edge 0 left at level 1 and
        // froze there; edges 4 and 5 rode the clock to level 10.
        assert_eq!(out.payments, vec![1.0, 1.0, 10.0, 10.0]);
        mech.validate_outcome(&values, &out).unwrap();
    }

    #[test]
    fn matroid_da_uniform_rank_matches_k_clock() {
        use crate::feasibility::UniformMatroid;
        let mut r = rng();
        for _ in 0..50 {
            let values: Vec<f64> = (0..6).map(|_| r.random::<f64>() * 10.0).collect();
            let matroid =
                FeasibilityConstraint::matroid(Arc::new(UniformMatroid { n: 6, r: 2 })).unwrap();
            let m1 = DAMechanism::matroid_da(matroid, exp_dists(6)).unwrap();
            let m2 = DAMechanism::k_clock_da(2, exp_dists(6)).unwrap();
            let o1 = m1.run_da(&values, &mut rng()).unwrap();
            let o2 = m2.run_da(&values, &mut rng()).unwrap();
            assert_eq!(o1.winners, o2.winners);
            assert_eq!(o1.payments, o2.payments);
        }
    }

    #[test]
    fn knapsack_unit_sizes_is_top_k() {
        let dists = exp_dists(4);
        let mech = DAMechanism::knapsack_da(vec![1.0; 4], 2.0, dists, 100, 0).unwrap();
        assert_eq!(mech.knapsack_branch(), Some(KnapsackBranch::BangPerBuck));
        let out = mech.run_da(&[5.0, 1.0, 3.0, 2.0], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0, 2]);
        mech.validate_outcome(&[5.0, 1.0, 3.0, 2.0], &out).unwrap();
    }

    #[test]
    fn knapsack_giant_item_prefers_max_branch() {
        // One item as large as the knapsack with a huge value, several
        // small cheap items: the max branch dominates in expectation.
        let mut dists = vec![ValueDistribution::uniform(50.0, 60.0).unwrap()];
        for _ in 0..3 {
            dists.push(ValueDistribution::uniform(0.0, 1.0).unwrap());
        }
        let sizes = vec![10.0, 1.0, 1.0, 1.0];
        let mech = DAMechanism::knapsack_da(sizes, 10.0, dists, 500, 1).unwrap();
        assert_eq!(mech.knapsack_branch(), Some(KnapsackBranch::MaxValue));
        let out = mech.run_da(&[55.0, 0.5, 0.9, 0.2], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0]);
        mech.validate_outcome(&[55.0, 0.5, 0.9, 0.2], &out).unwrap();
    }

    #[test]
    fn knapsack_oversized_items_never_win() {
        let dists = exp_dists(3);
        let mech = DAMechanism::knapsack_da(vec![5.0, 1.0, 1.0], 2.0, dists, 100, 0).unwrap();
        let out = mech.run_da(&[100.0, 1.0, 2.0], &mut rng()).unwrap();
        assert!(!out.winners.contains(&0));
        mech.validate_outcome(&[100.0, 1.0, 2.0], &out).unwrap();
    }

    #[test]
    fn prophet_thresholds() {
        let one = DAMechanism::prophet_posted_price(vec![ValueDistribution::uniform(0.0, 1.0).unwrap()])
            .unwrap();
        assert!((one.posted_price().unwrap() - 0.5).abs() < 1e-9);
        let two = DAMechanism::prophet_posted_price(vec![
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert!((two.posted_price().unwrap() - 0.5_f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn prophet_first_taker_wins() {
        let dists = vec![
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
        ];
        let mech = DAMechanism::prophet_posted_price(dists).unwrap();
        let tau = mech.posted_price().unwrap();
        let values = [tau - 0.1, tau + 0.1, tau + 0.2];
        let out = mech.run_da(&values, &mut rng()).unwrap();
        assert_eq!(out.winners, vec![1]);
        assert_eq!(out.payments, vec![tau]);
        mech.validate_outcome(&values, &out).unwrap();

        // Nobody clears the bar: no winner.
        let values = [0.1, 0.2, 0.05];
        let out = mech.run_da(&values, &mut rng()).unwrap();
        assert!(out.winners.is_empty());
        assert_eq!(out.surplus, 0.0);
        mech.validate_outcome(&values, &out).unwrap();
    }

    #[test]
    fn gsp_slack_constraint_gives_goods_away() {
        let dists = vec![
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            ValueDistribution::uniform(0.0, 2.0).unwrap(),
        ];
        let mech = DAMechanism::gsp_sequential(2, dists).unwrap();
        assert_eq!(mech.gsp_quantities().unwrap(), &[1.0, 1.0]);
        let out = mech.run_da(&[0.3, 1.7], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0, 1]);
        assert_eq!(out.payments, vec![0.0, 0.0]);
        mech.validate_outcome(&[0.3, 1.7], &out).unwrap();
    }

    #[test]
    fn gsp_symmetric_waterfill() {
        let dists = vec![
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
        ];
        let mech = DAMechanism::gsp_sequential(1, dists).unwrap();
        let q = mech.gsp_quantities().unwrap();
        assert!((q[0] - 0.5).abs() < 1e-9);
        assert!((q[1] - 0.5).abs() < 1e-9);
        // Both are offered price 0.5; the first taker (agent 0 here) wins.
        let out = mech.run_da(&[0.7, 0.9], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0]);
        assert!((out.payments[0] - 0.5).abs() < 1e-9);
        mech.validate_outcome(&[0.7, 0.9], &out).unwrap();
    }

    #[test]
    fn ear_value_closed_forms() {
        let dists = exp_dists(3);
        assert_eq!(ear_value(&[0.0, 0.0, 0.0], &dists).unwrap(), 0.0);
        let q = 0.25;
        let expected = 3.0 * q * (1.0 - q.ln());
        assert!((ear_value(&[q, q, q], &dists).unwrap() - expected).abs() < 1e-12);
        let single = vec![ValueDistribution::uniform(0.0, 1.0).unwrap()];
        assert!((ear_value(&[1.0], &single).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn buffered_quantile_branches() {
        assert_eq!(buffered_quantile(0.05, 0.1).unwrap(), 0.0);
        assert!((buffered_quantile(0.55, 0.1).unwrap() - 0.5625).abs() < 1e-12);
        assert_eq!(buffered_quantile(0.97, 0.1).unwrap(), 1.0);
        assert!(buffered_quantile(0.5, 0.5).is_err());
        // eps = 0 is the identity.
        assert_eq!(buffered_quantile(0.37, 0.0).unwrap(), 0.37);
    }

    #[test]
    fn iid_posted_exponential_gives_away() {
        let dist = ValueDistribution::exponential(1.0).unwrap();
        let mech = DAMechanism::iid_posted_price(dist, 5, 1000).unwrap();
        assert_eq!(mech.posted_price().unwrap(), 0.0);
        let out = mech.run_da(&[0.5, 3.0, 1.0, 0.1, 2.0], &mut rng()).unwrap();
        assert_eq!(out.winners, vec![0]);
        assert_eq!(out.consumer_surplus, 0.5);
    }

    #[test]
    fn transform_of_exponential_clock_gives_away() {
        // Exponential agents have ū ≡ 1, so a clock price below 1 maps to
        // price 0 and the winner pays nothing.
        let mech = DAMechanism::k_clock_da(1, exp_dists(3)).unwrap();
        let t = DAMechanism::virtual_transform(mech, 1000).unwrap();
        let values = [5.0, 2.0, 9.0];
        let out = t.run_da(&values, &mut rng()).unwrap();
        assert_eq!(out.winners, vec![2]);
        assert_eq!(out.payments, vec![0.0]);
        assert_eq!(out.consumer_surplus, 9.0);
        t.validate_outcome(&values, &out).unwrap();
    }

    #[test]
    fn transform_is_structurally_idempotent() {
        let mech = DAMechanism::k_clock_da(1, exp_dists(2)).unwrap();
        let once = DAMechanism::virtual_transform(mech, 500).unwrap();
        let twice = DAMechanism::virtual_transform(once.clone(), 500).unwrap();
        let values = [1.5, 0.4];
        let a = once.run_da(&values, &mut rng()).unwrap();
        let b = twice.run_da(&values, &mut rng()).unwrap();
        assert_eq!(a.winners, b.winners);
        assert_eq!(a.payments, b.payments);
    }

    #[test]
    fn opt_cs_exponential_is_constant_one() {
        // ū ≡ 1 for exponential(1): any single selection scores exactly 1.
        let dists = exp_dists(4);
        let bundles: Vec<CurveBundle> =
            dists.iter().map(|d| CurveBundle::build(d, 500).unwrap()).collect();
        let c = FeasibilityConstraint::k_of_n(4, 1).unwrap();
        let mut r = rng();
        for _ in 0..20 {
            let qs: Vec<f64> = (0..4).map(|_| ValueDistribution::sample_quantile(&mut r)).collect();
            let got = opt_cs_benchmark(&c, &bundles, &qs, &mut r).unwrap();
            assert!((got - 1.0).abs() < 1e-9, "got {got}");
        }
    }

    #[test]
    fn permuted_tie_break_is_uniformish() {
        // Three identical exponential agents, k = 1: the winner should be
        // roughly uniform across agents thanks to the random priority.
        let dists = exp_dists(3);
        let bundles: Vec<CurveBundle> =
            dists.iter().map(|d| CurveBundle::build(d, 200).unwrap()).collect();
        let c = FeasibilityConstraint::k_of_n(3, 1).unwrap();
        let mut r = rng();
        let mut total = 0.0;
        for _ in 0..100 {
            let qs = vec![0.5, 0.5, 0.5];
            total += opt_cs_benchmark(&c, &bundles, &qs, &mut r).unwrap();
        }
        assert!((total / 100.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn run_rejects_bad_values() {
        let mech = DAMechanism::k_clock_da(1, exp_dists(2)).unwrap();
        assert!(mech.run_da(&[1.0], &mut rng()).is_err());
        assert!(mech.run_da(&[1.0, f64::NAN], &mut rng()).is_err());
        assert!(mech.run_da(&[1.0, -2.0], &mut rng()).is_err());
    }
}
