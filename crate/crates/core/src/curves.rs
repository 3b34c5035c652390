//! Value distributions in quantile space and their surplus curves.
//!
//! A value distribution is described by its inverse demand `v(q)`: the price
//! at which exactly a `q` fraction of draws would buy, i.e.
//! `Pr(value > v(q)) = q`. Everything downstream works with three curves on
//! the quantile interval `[0,1]`:
//!
//! - `V(q) = ∫₀^q v(t) dt` — expected surplus from serving the top `q`
//!   quantiles ("surplus curve"),
//! - `U(q) = V(q) − q·v(q)` — expected consumer surplus from posting the
//!   price `v(q)` ("consumer-surplus curve"),
//! - `u(q) = U′(q) = −q·v′(q)` — its marginal ("consumer-surplus virtual
//!   value").
//!
//! `U` need not be concave; [`iron`] computes its least concave majorant
//! `Ū` and the (non-increasing) derivative `ū`, which is what price-based
//! mechanisms can actually extract. [`virtual_price`] maps a target virtual
//! value to the highest quantile still worth that much, and to the price
//! that screens for it.
//!
//! Conventions used throughout:
//!
//! - `v(1) = 0`. Distributions whose support is bounded away from zero are
//!   normalized by truncating the lowest type to zero; the truncation lives
//!   on a measure-zero quantile, so `V` is unchanged and `U(1) = V(1)`.
//! - An unbounded top of support is reported as `f64::INFINITY`. Any
//!   mechanism that posts it treats the agent as rejected; no arithmetic is
//!   ever performed on the sentinel.
//! - `u` carries the same sentinel at discontinuities of `v` (value atoms).

use rand::Rng;

use crate::error::{Error, Result};

/// Default quantile-grid resolution: fine enough that ironing and the
/// grid-search mechanisms stay below the test tolerances, coarse enough to
/// keep curve construction O(10^4).
pub const DEFAULT_GRID_RESOLUTION: usize = 10_000;

/// A nonnegative value distribution with closed-form curve evaluations.
///
/// All four kinds evaluate `v`, `V`, `U`, and `u` analytically; grid
/// quadrature never enters the production path (tests cross-check it).
#[derive(Debug, Clone, serde::Serialize)]
pub enum ValueDistribution {
    /// Exponential with the given mean: `v(q) = −mean·ln q`.
    Exponential { mean: f64 },
    /// Uniform on `[lo, hi]`: `v(q) = hi − (hi−lo)·q`.
    Uniform { lo: f64, hi: f64 },
    /// Finitely many atoms; `values` strictly decreasing, probabilities
    /// positive and summing to one. `cum[j]` is the quantile mass on values
    /// `>= values[j]`, so `v(q) = values[j]` on `(cum[j-1], cum[j]]`.
    PointMasses {
        values: Vec<f64>,
        probabilities: Vec<f64>,
        #[serde(skip)]
        cum: Vec<f64>,
    },
    /// Piecewise-linear inverse demand through `(quantile, value)` knots.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
        #[serde(skip)]
        cum_v: Vec<f64>,
    },
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::domain(msg))
    }
}

fn check_quantile(q: f64) -> Result<()> {
    require(q.is_finite() && (0.0..=1.0).contains(&q), "quantile must lie in [0,1]")
}

impl ValueDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        require(mean.is_finite() && mean > 0.0, "exponential mean must be positive")?;
        Ok(ValueDistribution::Exponential { mean })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        require(lo.is_finite() && hi.is_finite(), "uniform bounds must be finite")?;
        require(lo >= 0.0 && lo < hi, "uniform bounds must satisfy 0 <= lo < hi")?;
        Ok(ValueDistribution::Uniform { lo, hi })
    }

    /// Builds a point-mass mixture from `(value, probability)` pairs.
    /// Pairs may come in any order; equal values are merged.
    pub fn point_masses(pairs: &[(f64, f64)]) -> Result<Self> {
        require(!pairs.is_empty(), "point-mass mixture needs at least one atom")?;
        for &(v, p) in pairs {
            require(v.is_finite() && v >= 0.0, "atom values must be finite and nonnegative")?;
            require(p.is_finite() && p > 0.0, "atom probabilities must be positive")?;
        }
        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut values = Vec::new();
        let mut probabilities: Vec<f64> = Vec::new();
        for (v, p) in sorted {
            if values.last().is_some_and(|&last: &f64| last == v) {
                *probabilities.last_mut().unwrap() += p;
            } else {
                values.push(v);
                probabilities.push(p);
            }
        }
        let total: f64 = probabilities.iter().sum();
        require((total - 1.0).abs() <= 1e-12, "atom probabilities must sum to 1")?;
        let mut cum = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for &p in &probabilities {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(ValueDistribution::PointMasses { values, probabilities, cum })
    }

    /// Builds a piecewise-linear inverse demand. Knots must start at
    /// quantile 0, end at quantile 1, be strictly increasing in quantile,
    /// and carry finite, nonnegative, non-increasing values.
    pub fn piecewise_linear(knots: &[(f64, f64)]) -> Result<Self> {
        require(knots.len() >= 2, "piecewise-linear inverse demand needs at least two knots")?;
        require(knots[0].0 == 0.0, "first knot must be at quantile 0")?;
        require(knots[knots.len() - 1].0 == 1.0, "last knot must be at quantile 1")?;
        for w in knots.windows(2) {
            require(w[0].0 < w[1].0, "knot quantiles must be strictly increasing")?;
            require(w[1].1 <= w[0].1, "knot values must be non-increasing")?;
        }
        for &(q, v) in knots {
            require(q.is_finite() && v.is_finite() && v >= 0.0, "knots must be finite with nonnegative values")?;
        }
        // Exact cumulative integral of the linear segments at each knot.
        let mut cum_v = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        cum_v.push(0.0);
        for w in knots.windows(2) {
            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
            cum_v.push(acc);
        }
        Ok(ValueDistribution::PiecewiseLinear { knots: knots.to_vec(), cum_v })
    }

    /// Inverse demand before the `v(1) = 0` truncation; used for sampling
    /// and for integrals, where the truncation point has measure zero.
    fn inverse_demand_raw(&self, q: f64) -> f64 {
        match self {
            ValueDistribution::Exponential { mean } => {
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    -mean * q.ln()
                }
            }
            ValueDistribution::Uniform { lo, hi } => hi - (hi - lo) * q,
            ValueDistribution::PointMasses { values, cum, .. } => {
                if q == 0.0 {
                    return values[0];
                }
                // First atom whose cumulative quantile reaches q.
                let j = cum.partition_point(|&c| c < q);
                values[j.min(values.len() - 1)]
            }
            ValueDistribution::PiecewiseLinear { knots, .. } => {
                let j = segment_index(knots, q);
                let (qa, va) = knots[j];
                let (qb, vb) = knots[j + 1];
                va + (vb - va) * (q - qa) / (qb - qa)
            }
        }
    }

    /// Inverse demand `v(q)` with `Pr(value > v(q)) = q` and `v(1) = 0`.
    ///
    /// Returns `f64::INFINITY` at `q = 0` when the support is unbounded.
    pub fn inverse_demand(&self, q: f64) -> Result<f64> {
        check_quantile(q)?;
        if q == 1.0 {
            return Ok(0.0);
        }
        Ok(self.inverse_demand_raw(q))
    }

    /// Surplus curve `V(q) = ∫₀^q v(t) dt`, evaluated in closed form.
    pub fn surplus_curve(&self, q: f64) -> Result<f64> {
        check_quantile(q)?;
        Ok(match self {
            ValueDistribution::Exponential { mean } => {
                if q == 0.0 {
                    0.0
                } else {
                    mean * q * (1.0 - q.ln())
                }
            }
            ValueDistribution::Uniform { lo, hi } => hi * q - 0.5 * (hi - lo) * q * q,
            ValueDistribution::PointMasses { values, cum, .. } => {
                let mut acc = 0.0;
                let mut lo_q = 0.0;
                for (j, &atom) in values.iter().enumerate() {
                    let hi_q = cum[j];
                    if q <= hi_q {
                        acc += atom * (q - lo_q);
                        return Ok(acc);
                    }
                    acc += atom * (hi_q - lo_q);
                    lo_q = hi_q;
                }
                acc
            }
            ValueDistribution::PiecewiseLinear { knots, cum_v } => {
                let j = segment_index(knots, q);
                let (qa, va) = knots[j];
                let vq = self.inverse_demand_raw(q);
                cum_v[j] + 0.5 * (va + vq) * (q - qa)
            }
        })
    }

    /// Consumer-surplus curve `U(q) = V(q) − q·v(q)` (with `v(1) = 0`, so
    /// `U(1) = V(1)` equals the mean).
    pub fn cs_curve(&self, q: f64) -> Result<f64> {
        check_quantile(q)?;
        if q == 0.0 {
            return Ok(0.0);
        }
        if q == 1.0 {
            return self.surplus_curve(1.0);
        }
        Ok(self.surplus_curve(q)? - q * self.inverse_demand_raw(q))
    }

    /// Marginal consumer surplus `u(q) = −q·v′(q)`.
    ///
    /// At a discontinuity of `v` (a value atom, or the truncation at `q = 1`
    /// for supports bounded away from zero) the derivative does not exist;
    /// the sentinel `f64::INFINITY` is stored instead. Where `v` merely has
    /// a kink the left derivative is used.
    pub fn marginal_cs(&self, q: f64) -> Result<f64> {
        check_quantile(q)?;
        Ok(match self {
            ValueDistribution::Exponential { mean } => *mean,
            ValueDistribution::Uniform { lo, hi } => {
                if q == 1.0 && *lo > 0.0 {
                    f64::INFINITY
                } else {
                    (hi - lo) * q
                }
            }
            ValueDistribution::PointMasses { values, cum, .. } => {
                let at_interior_jump = cum[..cum.len() - 1].iter().any(|&c| c == q);
                let truncation_jump = q == 1.0 && *values.last().unwrap() > 0.0;
                if at_interior_jump || truncation_jump {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            ValueDistribution::PiecewiseLinear { knots, .. } => {
                if q == 1.0 && knots[knots.len() - 1].1 > 0.0 {
                    return Ok(f64::INFINITY);
                }
                if q == 0.0 {
                    return Ok(0.0);
                }
                // Left derivative: the segment having q as interior or right end.
                let j = left_segment_index(knots, q);
                let (qa, va) = knots[j];
                let (qb, vb) = knots[j + 1];
                -q * (vb - va) / (qb - qa)
            }
        })
    }

    /// `Pr(value <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ValueDistribution::Exponential { mean } => {
                if x < 0.0 {
                    0.0
                } else {
                    1.0 - (-x / mean).exp()
                }
            }
            ValueDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ValueDistribution::PointMasses { values, probabilities, .. } => values
                .iter()
                .zip(probabilities)
                .filter(|(&v, _)| v <= x)
                .map(|(_, &p)| p)
                .sum(),
            ValueDistribution::PiecewiseLinear { .. } => 1.0 - self.sup_quantile(x, false),
        }
    }

    /// `Pr(value >= x)`: the right end of the quantile interval occupied by
    /// the value `x`. For continuous distributions this agrees with
    /// `Pr(value > x)`; for an atom it includes the atom's full mass, which
    /// is the convention the virtual-pricing map expects.
    pub fn quantile_of(&self, x: f64) -> f64 {
        match self {
            ValueDistribution::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            ValueDistribution::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            ValueDistribution::PointMasses { values, probabilities, .. } => values
                .iter()
                .zip(probabilities)
                .filter(|(&v, _)| v >= x)
                .map(|(_, &p)| p)
                .sum(),
            ValueDistribution::PiecewiseLinear { .. } => self.sup_quantile(x, true),
        }
    }

    /// For piecewise-linear demand: `sup{q : v(q) > x}` (or with `>=` when
    /// `inclusive`), by scanning the (non-increasing) segments.
    fn sup_quantile(&self, x: f64, inclusive: bool) -> f64 {
        let ValueDistribution::PiecewiseLinear { knots, .. } = self else {
            unreachable!("sup_quantile is only used for piecewise-linear demand")
        };
        let keeps = |v: f64| if inclusive { v >= x } else { v > x };
        if !keeps(knots[0].1) {
            return 0.0;
        }
        let mut sup = 0.0;
        for w in knots.windows(2) {
            let (qa, va) = w[0];
            let (qb, vb) = w[1];
            if keeps(vb) {
                sup = qb;
            } else if keeps(va) && va > vb {
                // Crossing inside the segment.
                sup = qa + (va - x) / (va - vb) * (qb - qa);
            }
        }
        sup
    }

    /// Top of the value support; `f64::INFINITY` for unbounded supports.
    pub fn support_top(&self) -> f64 {
        match self {
            ValueDistribution::Exponential { .. } => f64::INFINITY,
            ValueDistribution::Uniform { hi, .. } => *hi,
            ValueDistribution::PointMasses { values, .. } => values[0],
            ValueDistribution::PiecewiseLinear { knots, .. } => knots[0].1,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.support_top() == f64::INFINITY
    }

    /// Expected value; equals `V(1)`.
    pub fn mean(&self) -> f64 {
        self.surplus_curve(1.0).expect("1.0 is a valid quantile")
    }

    /// Draws a quantile uniformly from `(0, 1]`, avoiding the `q = 0`
    /// endpoint where unbounded supports have no value.
    pub fn sample_quantile<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        1.0 - rng.random::<f64>()
    }

    /// Samples a value by inverting the demand curve at a uniform quantile.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse_demand_raw(Self::sample_quantile(rng))
    }
}

/// Index of the knot segment containing `q`, biased right so that each
/// segment covers `[qa, qb)` and the last covers `[qa, 1]`.
fn segment_index(knots: &[(f64, f64)], q: f64) -> usize {
    let j = knots.partition_point(|&(kq, _)| kq <= q);
    j.saturating_sub(1).min(knots.len() - 2)
}

/// Index of the segment having `q` as interior point or right endpoint
/// (left-derivative convention).
fn left_segment_index(knots: &[(f64, f64)], q: f64) -> usize {
    let j = knots.partition_point(|&(kq, _)| kq < q);
    j.saturating_sub(1).min(knots.len() - 2)
}

/// Result of ironing a consumer-surplus curve on a grid.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IronedCurves {
    /// Least concave majorant `Ū` evaluated at the grid points.
    pub big_u: Vec<f64>,
    /// Left derivative `ū` of the majorant at each grid point
    /// (`u[0]` carries the first segment's slope). Non-increasing.
    pub u: Vec<f64>,
    /// Indices of the hull vertices (always includes both endpoints).
    pub hull: Vec<usize>,
    /// Maximal quantile intervals on which `Ū > U` strictly.
    pub intervals: Vec<(f64, f64)>,
}

/// Least concave majorant of `big_u` over `grid` via an upper convex hull
/// (monotone chain, O(n)).
pub fn iron(grid: &[f64], big_u: &[f64]) -> Result<IronedCurves> {
    require(grid.len() == big_u.len(), "grid and curve must have equal length")?;
    require(grid.len() >= 2, "ironing needs at least two grid points")?;
    for w in grid.windows(2) {
        require(w[0] < w[1], "grid must be strictly increasing")?;
    }
    for &u in big_u {
        require(u.is_finite(), "consumer-surplus curve must be finite")?;
    }

    // Upper hull: keep only clockwise turns while sweeping left to right.
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        (grid[a] - grid[o]) * (big_u[b] - big_u[o]) - (big_u[a] - big_u[o]) * (grid[b] - grid[o])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) >= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }

    let mut ironed = vec![0.0; grid.len()];
    let mut u = vec![0.0; grid.len()];
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let slope = (big_u[b] - big_u[a]) / (grid[b] - grid[a]);
        for i in a..=b {
            ironed[i] = big_u[a] + slope * (grid[i] - grid[a]);
            u[i] = slope;
        }
        ironed[a] = big_u[a];
        ironed[b] = big_u[b];
    }
    u[0] = u[1.min(grid.len() - 1)];

    let scale = big_u.iter().fold(1.0_f64, |m, &x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let mut intervals = Vec::new();
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b > a + 1 && (a + 1..b).any(|i| ironed[i] - big_u[i] > tol) {
            intervals.push((grid[a], grid[b]));
        }
    }

    Ok(IronedCurves { big_u: ironed, u, hull, intervals })
}

/// All curves of one distribution sampled on a uniform quantile grid.
///
/// The grid has `resolution + 1` points `0, 1/resolution, …, 1`. Values come
/// from the distribution's closed forms; only the ironing step is inherently
/// a grid computation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CurveBundle {
    pub grid: Vec<f64>,
    /// Inverse demand; may hold the `INFINITY` sentinel at `q = 0`.
    pub v: Vec<f64>,
    pub big_v: Vec<f64>,
    pub big_u: Vec<f64>,
    /// Marginal consumer surplus; `INFINITY` sentinel at discontinuities of `v`.
    pub u: Vec<f64>,
    pub big_u_ironed: Vec<f64>,
    /// Non-increasing ironed marginal (left-derivative convention).
    pub u_ironed: Vec<f64>,
    pub ironed_intervals: Vec<(f64, f64)>,
    hull: Vec<usize>,
}

impl CurveBundle {
    /// Samples every curve at `resolution + 1` uniform quantiles and irons
    /// the consumer-surplus curve.
    pub fn build(dist: &ValueDistribution, resolution: usize) -> Result<Self> {
        require(resolution >= 2, "grid resolution must be at least 2")?;
        let n = resolution + 1;
        let mut grid = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let mut big_v = Vec::with_capacity(n);
        let mut big_u = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        for i in 0..n {
            let q = if i == resolution { 1.0 } else { i as f64 / resolution as f64 };
            grid.push(q);
            v.push(dist.inverse_demand(q)?);
            big_v.push(dist.surplus_curve(q)?);
            big_u.push(dist.cs_curve(q)?);
            u.push(dist.marginal_cs(q)?);
        }
        let ironed = iron(&grid, &big_u)?;
        Ok(CurveBundle {
            grid,
            v,
            big_v,
            big_u,
            u,
            big_u_ironed: ironed.big_u,
            u_ironed: ironed.u,
            ironed_intervals: ironed.intervals,
            hull: ironed.hull,
        })
    }

    pub fn resolution(&self) -> usize {
        self.grid.len() - 1
    }

    /// Ironed marginal `ū(q)` at an arbitrary quantile (left-derivative
    /// convention: the slope of the hull segment having `q` as interior
    /// point or right endpoint).
    pub fn u_ironed_at(&self, q: f64) -> Result<f64> {
        check_quantile(q)?;
        if q == 0.0 {
            return Ok(self.u_ironed[0]);
        }
        let seg = self.hull_segment_left_of(q);
        let (a, b) = (self.hull[seg], self.hull[seg + 1]);
        Ok((self.big_u_ironed[b] - self.big_u_ironed[a]) / (self.grid[b] - self.grid[a]))
    }

    /// Ironed consumer-surplus curve `Ū(q)` at an arbitrary quantile.
    pub fn big_u_ironed_at(&self, q: f64) -> Result<f64> {
        check_quantile(q)?;
        let seg = self.hull_segment_left_of(q);
        let (a, b) = (self.hull[seg], self.hull[seg + 1]);
        let slope = (self.big_u_ironed[b] - self.big_u_ironed[a]) / (self.grid[b] - self.grid[a]);
        Ok(self.big_u_ironed[a] + slope * (q - self.grid[a]))
    }

    /// Quantiles of the hull vertices.
    pub fn hull_quantiles(&self) -> Vec<f64> {
        self.hull.iter().map(|&i| self.grid[i]).collect()
    }

    /// Index of the hull segment whose quantile interval `(x_{j}, x_{j+1}]`
    /// contains `q` (`q > 0`).
    fn hull_segment_left_of(&self, q: f64) -> usize {
        let j = self.hull.partition_point(|&i| self.grid[i] < q);
        j.saturating_sub(1).min(self.hull.len() - 2)
    }
}

/// Builds the standard curve bundle for a distribution (free-function form
/// of [`CurveBundle::build`]).
pub fn build_curves(dist: &ValueDistribution, resolution: usize) -> Result<CurveBundle> {
    CurveBundle::build(dist, resolution)
}

/// The virtual-pricing map: the largest quantile still worth the target
/// virtual value, and the price that screens for it.
///
/// Returns `(θ, v(θ))` with `θ = sup{ q : ū(q) ≥ vhat }` (and `θ = 0` when
/// the set is empty). Because `ū` is constant on hull segments, `θ` always
/// lands on a hull vertex — mechanisms never post prices from the middle of
/// an ironed interval. The price uses the normalized inverse demand, so
/// `θ = 0` on an unbounded support yields the rejection sentinel.
pub fn virtual_price(
    bundle: &CurveBundle,
    dist: &ValueDistribution,
    vhat: f64,
) -> Result<(f64, f64)> {
    require(!vhat.is_nan() && vhat >= 0.0, "target virtual value must be nonnegative")?;
    let hull = &bundle.hull;
    let mut theta = 0.0;
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let slope =
            (bundle.big_u_ironed[b] - bundle.big_u_ironed[a]) / (bundle.grid[b] - bundle.grid[a]);
        if slope >= vhat {
            theta = bundle.grid[b];
        } else {
            break;
        }
    }
    let price = dist.inverse_demand(theta)?;
    Ok((theta, price))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ≈ {b} (tol {tol})");
    }

    #[test]
    fn exponential_closed_forms() {
        let d = ValueDistribution::exponential(1.0).unwrap();
        assert_close(d.inverse_demand(0.5).unwrap(), std::f64::consts::LN_2, 1e-15);
        assert_eq!(d.inverse_demand(0.0).unwrap(), f64::INFINITY);
        assert_eq!(d.inverse_demand(1.0).unwrap(), 0.0);
        assert_close(d.surplus_curve(0.25).unwrap(), 0.25 * (1.0 - 0.25_f64.ln()), 1e-15);
        assert_close(d.cs_curve(0.25).unwrap(), 0.25, 1e-15);
        assert_close(d.marginal_cs(0.7).unwrap(), 1.0, 0.0);
        assert_close(d.mean(), 1.0, 1e-15);
    }

    #[test]
    fn uniform_closed_forms_and_truncation() {
        let d = ValueDistribution::uniform(0.0, 1.0).unwrap();
        assert_close(d.inverse_demand(0.25).unwrap(), 0.75, 1e-15);
        assert_close(d.cs_curve(0.5).unwrap(), 0.125, 1e-15);
        assert_close(d.marginal_cs(0.5).unwrap(), 0.5, 1e-15);

        // Support bounded away from zero: v(1) truncates to 0, U jumps to V(1).
        let d = ValueDistribution::uniform(1.0, 2.0).unwrap();
        assert_eq!(d.inverse_demand(1.0).unwrap(), 0.0);
        assert_close(d.cs_curve(1.0).unwrap(), 1.5, 1e-15);
        assert_eq!(d.marginal_cs(1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn point_mass_curves_are_steps() {
        let d = ValueDistribution::point_masses(&[(2.0, 0.5), (0.0, 0.5)]).unwrap();
        assert_eq!(d.inverse_demand(0.3).unwrap(), 2.0);
        assert_eq!(d.inverse_demand(0.5).unwrap(), 2.0);
        assert_eq!(d.inverse_demand(0.75).unwrap(), 0.0);
        assert_close(d.surplus_curve(0.5).unwrap(), 1.0, 1e-15);
        assert_close(d.surplus_curve(1.0).unwrap(), 1.0, 1e-15);
        assert_close(d.cs_curve(0.25).unwrap(), 0.0, 1e-15);
        assert_close(d.cs_curve(0.75).unwrap(), 1.0, 1e-15);
        assert_eq!(d.marginal_cs(0.5).unwrap(), f64::INFINITY);
        assert_close(d.quantile_of(2.0), 0.5, 1e-15);
        assert_close(d.quantile_of(1.0), 0.5, 1e-15);
        assert_close(d.quantile_of(0.0), 1.0, 1e-15);
        assert_close(d.cdf(0.0), 0.5, 1e-15);
        assert_close(d.cdf(2.0), 1.0, 1e-15);
    }

    #[test]
    fn piecewise_linear_matches_uniform() {
        let pwl = ValueDistribution::piecewise_linear(&[(0.0, 1.0), (1.0, 0.0)]).unwrap();
        let uni = ValueDistribution::uniform(0.0, 1.0).unwrap();
        for i in 0..=20 {
            let q = i as f64 / 20.0;
            assert_close(pwl.inverse_demand(q).unwrap(), uni.inverse_demand(q).unwrap(), 1e-15);
            assert_close(pwl.surplus_curve(q).unwrap(), uni.surplus_curve(q).unwrap(), 1e-15);
            assert_close(pwl.cs_curve(q).unwrap(), uni.cs_curve(q).unwrap(), 1e-15);
        }
        assert_close(pwl.quantile_of(0.25), 0.75, 1e-15);
        assert_close(pwl.cdf(0.25), 0.25, 1e-15);
    }

    #[test]
    fn ironing_linear_curve_is_identity() {
        let d = ValueDistribution::exponential(1.0).unwrap();
        let b = CurveBundle::build(&d, 100).unwrap();
        for i in 0..=100 {
            assert_close(b.big_u_ironed[i], b.big_u[i], 1e-15);
        }
        assert!(b.ironed_intervals.is_empty());
        assert_close(b.u_ironed_at(0.37).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn ironing_convex_curve_is_chord() {
        let d = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let b = CurveBundle::build(&d, 1000).unwrap();
        for i in 0..=1000 {
            assert_close(b.big_u_ironed[i], b.grid[i] / 2.0, 1e-12);
            assert_close(b.u_ironed[i], 0.5, 1e-12);
        }
        assert_eq!(b.ironed_intervals.len(), 1);
        assert_close(b.ironed_intervals[0].0, 0.0, 0.0);
        assert_close(b.ironed_intervals[0].1, 1.0, 0.0);
    }

    #[test]
    fn virtual_price_boundary_cases() {
        let d = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let b = CurveBundle::build(&d, 1000).unwrap();
        // ū ≡ 1/2: targets at or below map to the free price, above to v(0).
        let (theta, price) = virtual_price(&b, &d, 0.3).unwrap();
        assert_close(theta, 1.0, 0.0);
        assert_close(price, 0.0, 0.0);
        let (theta, price) = virtual_price(&b, &d, 0.6).unwrap();
        assert_close(theta, 0.0, 0.0);
        assert_close(price, 1.0, 0.0);

        let d = ValueDistribution::exponential(1.0).unwrap();
        let b = CurveBundle::build(&d, 1000).unwrap();
        let (theta, price) = virtual_price(&b, &d, 0.999).unwrap();
        assert_close(theta, 1.0, 0.0);
        assert_close(price, 0.0, 0.0);
        let (theta, price) = virtual_price(&b, &d, 1.5).unwrap();
        assert_close(theta, 0.0, 0.0);
        assert_eq!(price, f64::INFINITY);
    }

    #[test]
    fn constructor_validation() {
        assert!(ValueDistribution::exponential(0.0).is_err());
        assert!(ValueDistribution::uniform(2.0, 1.0).is_err());
        assert!(ValueDistribution::point_masses(&[(1.0, 0.4)]).is_err());
        assert!(ValueDistribution::piecewise_linear(&[(0.0, 1.0), (0.5, 0.5)]).is_err());
        assert!(ValueDistribution::piecewise_linear(&[(0.0, 0.5), (1.0, 1.0)]).is_err());
        let d = ValueDistribution::exponential(1.0).unwrap();
        assert!(d.inverse_demand(1.5).is_err());
        assert!(d.inverse_demand(-0.1).is_err());
    }
}
