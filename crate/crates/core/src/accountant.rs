//! Rényi-DP accounting for hypergeometrically subsampled Gaussian steps.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::Sign;

/// `α ∈ {1.25, 1.5, 2, 3, …, 64, 128, 256}`.
pub fn default_orders() -> Vec<f64> {
    let mut orders = vec![1.25, 1.5];
    orders.extend((2..=64).map(f64::from));
    orders.extend([128.0, 256.0]);
    orders
}

/// `ln C(n, k)`; `-∞` when `k > n`.
pub fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn check_hypergeom(population: u64, successes: u64, draws: u64) -> Result<()> {
    if successes > population || draws > population {
        return Err(Error::domain(format!(
            "hypergeometric parameters out of range: population {population}, successes {successes}, draws {draws}"
        )));
    }
    Ok(())
}

/// `ln P[X = i]` for `X ~ Hypergeometric(population, successes, draws)`.
pub fn ln_hypergeom_pmf(population: u64, successes: u64, draws: u64, i: u64) -> Result<f64> {
    check_hypergeom(population, successes, draws)?;
    if i > successes || i > draws || draws - i > population - successes {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(ln_binom(successes, i) + ln_binom(population - successes, draws - i) - ln_binom(population, draws))
}

pub fn hypergeom_pmf(population: u64, successes: u64, draws: u64, i: u64) -> Result<f64> {
    ln_hypergeom_pmf(population, successes, draws, i).map(f64::exp)
}

/// One discriminator step: a batch of `b_d` out of `n_tr` training subgraphs,
/// at most `r_nl` of which involve any given node, with noise multiplier
/// `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampledGaussian {
    pub sigma: f64,
    pub n_tr: u64,
    pub r_nl: u64,
    pub b_d: u64,
}

impl SubsampledGaussian {
    pub fn new(sigma: f64, n_tr: u64, r_nl: u64, b_d: u64) -> Result<Self> {
        if !(sigma > 0.0) || r_nl == 0 {
            return Err(Error::domain("sigma must be positive and R at least 1"));
        }
        Ok(SubsampledGaussian { sigma, n_tr, r_nl, b_d })
    }

    /// Per-step RDP `γ(α)`. Draws and successes are clamped to the
    /// population; `+∞` when the sum overflows.
    pub fn gamma(&self, alpha: f64) -> Result<f64> {
        rdp_per_iteration(alpha, self.sigma, self.n_tr, self.r_nl, self.b_d)
    }

    pub fn gammas(&self, orders: &[f64]) -> Result<Vec<f64>> {
        orders.iter().map(|&a| self.gamma(a)).collect()
    }
}

/// `γ = 1/(α−1) · ln Σ_i β_i · exp(α(α−1) i² / (2σ²R²))`.
pub fn rdp_per_iteration(alpha: f64, sigma: f64, n_tr: u64, r_nl: u64, b_d: u64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("order {alpha} must exceed 1")));
    }
    if !(sigma > 0.0) || r_nl == 0 {
        return Err(Error::domain("sigma must be positive and R at least 1"));
    }
    if n_tr == 0 {
        return Ok(0.0);
    }
    let draws = b_d.min(n_tr);
    let successes = r_nl.min(n_tr);
    let lo = draws.saturating_sub(n_tr - successes);
    let hi = successes.min(draws);
    let r = r_nl as f64;
    let scale = alpha * (alpha - 1.0) / (2.0 * sigma * sigma * r * r);
    let terms: Vec<f64> = (lo..=hi)
        .map(|i| Ok(ln_hypergeom_pmf(n_tr, successes, draws, i)? + scale * (i as f64).powi(2)))
        .collect::<Result<_>>()?;
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Ok(if max > 0.0 { f64::INFINITY } else { 0.0 });
    }
    let lse = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    let gamma = lse / (alpha - 1.0);
    // rounding can push an exact zero slightly negative
    Ok(if gamma.is_finite() { gamma.max(0.0) } else { f64::INFINITY })
}

/// `min_α rdp(α) + ln(1/δ)/(α−1)` and the minimizing order.
pub fn rdp_to_dp(orders: &[f64], rdp: &[f64], delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta must lie in (0, 1)"));
    }
    if orders.is_empty() || orders.len() != rdp.len() {
        return Err(Error::domain("empty or mismatched order grid"));
    }
    let mut best = (f64::INFINITY, orders[orders.len() - 1]);
    for (&a, &r) in orders.iter().zip(rdp) {
        let eps = r + (1.0 / delta).ln() / (a - 1.0);
        if eps < best.0 {
            best = (eps, a);
        }
    }
    Ok(best)
}

/// `min_α exp((α−1)(rdp(α) − ε))`, capped at 1.
pub fn rdp_spent_delta(orders: &[f64], rdp: &[f64], epsilon: f64) -> f64 {
    orders.iter().zip(rdp).map(|(&a, &r)| ((a - 1.0) * (r - epsilon)).exp()).fold(1.0, f64::min)
}

/// Largest `T` with `T · cost(α) + ln(1/δ)/(α−1) ≤ ε` for some order, where
/// `cost` is the RDP of one step. `None` when some usable order has zero cost.
pub fn max_steps(orders: &[f64], cost: &[f64], epsilon: f64, delta: f64) -> Result<Option<u64>> {
    rdp_to_dp(orders, cost, delta)?;
    let mut best: u64 = 0;
    for (&a, &c) in orders.iter().zip(cost) {
        let slack = epsilon - (1.0 / delta).ln() / (a - 1.0);
        if slack < 0.0 || !c.is_finite() {
            continue;
        }
        if c <= 0.0 {
            return Ok(None);
        }
        let mut t = (slack / c).floor() as u64;
        // guard against floor landing one past the boundary through rounding
        while t > 0 && t as f64 * c > slack {
            t -= 1;
        }
        best = best.max(t);
    }
    Ok(Some(best))
}

/// Accumulated RDP of the two discriminators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLedger {
    orders: Vec<f64>,
    rdp: Vec<f64>,
    steps: [u64; 2],
    mechanisms: [SubsampledGaussian; 2],
    #[serde(skip)]
    gammas: [Vec<f64>; 2],
}

fn slot(sign: Sign) -> usize {
    match sign {
        Sign::Positive => 0,
        Sign::Negative => 1,
    }
}

impl PrivacyLedger {
    pub fn new(positive: SubsampledGaussian, negative: SubsampledGaussian, orders: Vec<f64>) -> Result<Self> {
        if orders.is_empty() || orders.iter().any(|&a| !(a > 1.0)) {
            return Err(Error::domain("orders must be nonempty and exceed 1"));
        }
        let gammas = [positive.gammas(&orders)?, negative.gammas(&orders)?];
        Ok(PrivacyLedger {
            rdp: vec![0.0; orders.len()],
            orders,
            steps: [0, 0],
            mechanisms: [positive, negative],
            gammas,
        })
    }

    /// Both discriminators share one mechanism.
    pub fn symmetric(mechanism: SubsampledGaussian, orders: Vec<f64>) -> Result<Self> {
        Self::new(mechanism, mechanism, orders)
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn rdp(&self) -> &[f64] {
        &self.rdp
    }

    pub fn steps(&self, sign: Sign) -> u64 {
        self.steps[slot(sign)]
    }

    pub fn mechanism(&self, sign: Sign) -> &SubsampledGaussian {
        &self.mechanisms[slot(sign)]
    }

    /// Per-order RDP of one step of `sign`'s discriminator.
    pub fn step_cost(&self, sign: Sign) -> &[f64] {
        &self.gammas[slot(sign)]
    }

    /// Per-order RDP of one paired D⁺/D⁻ iteration.
    pub fn pair_cost(&self) -> Vec<f64> {
        self.gammas[0].iter().zip(&self.gammas[1]).map(|(a, b)| a + b).collect()
    }

    /// Charges one step of `sign`'s discriminator.
    pub fn record(&mut self, sign: Sign) {
        let s = slot(sign);
        for (r, g) in self.rdp.iter_mut().zip(&self.gammas[s]) {
            *r += g;
        }
        self.steps[s] += 1;
    }

    /// Charges `t` paired iterations of both discriminators.
    pub fn accumulate(&mut self, t: u64) {
        let cost = self.pair_cost();
        for (r, c) in self.rdp.iter_mut().zip(cost) {
            *r += t as f64 * c;
        }
        self.steps[0] += t;
        self.steps[1] += t;
    }

    pub fn to_dp(&self, delta: f64) -> Result<(f64, f64)> {
        rdp_to_dp(&self.orders, &self.rdp, delta)
    }

    /// ε after one more step of `sign`, without charging it.
    pub fn epsilon_after(&self, sign: Sign, delta: f64) -> Result<f64> {
        let next: Vec<f64> = self.rdp.iter().zip(&self.gammas[slot(sign)]).map(|(r, g)| r + g).collect();
        Ok(rdp_to_dp(&self.orders, &next, delta)?.0)
    }

    pub fn spent_delta(&self, epsilon_target: f64) -> f64 {
        rdp_spent_delta(&self.orders, &self.rdp, epsilon_target)
    }

    /// Largest number of paired iterations from a fresh ledger that keeps
    /// ε within `epsilon`.
    pub fn max_pair_steps(&self, epsilon: f64, delta: f64) -> Result<Option<u64>> {
        max_steps(&self.orders, &self.pair_cost(), epsilon, delta)
    }

    /// Restores the cached step costs after deserialization.
    pub fn rehydrate(&mut self) -> Result<()> {
        self.gammas = [self.mechanisms[0].gammas(&self.orders)?, self.mechanisms[1].gammas(&self.orders)?];
        Ok(())
    }
}
