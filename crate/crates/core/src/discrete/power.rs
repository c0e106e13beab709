use std::f64::consts::LN_2;

use crate::linalg::{RMatrix, RVector};
use crate::solvers::{solve_qcqp, QcqpOptions, QcqpProblem, QcqpStatus, QuadraticSurrogate};

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub max_iters: usize,
    /// Relative sum-rate change that ends the iteration.
    pub tol: f64,
    pub qcqp: QcqpOptions,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            max_iters: 200,
            tol: 1e-10,
            qcqp: QcqpOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerOutcome {
    pub p: Vec<f64>,
    pub rates: Vec<f64>,
    /// The minimum rates could not all be met; `p` then maximizes the
    /// smallest fraction of its target any user reaches.
    pub infeasible: bool,
}

/// Rates in bits/s/Hz for gains `a[(k, i)] = |ĥ_kᴴ B w̃_i|²`.
pub fn power_rates(a: &RMatrix, noise: &[f64], p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|k| {
            let interf: f64 = (0..p.len()).filter(|&i| i != k).map(|i| p[i] * a[(k, i)]).sum();
            (1.0 + p[k] * a[(k, k)] / (interf + noise[k])).log2()
        })
        .collect()
}

fn meets(rates: &[f64], targets: &[f64]) -> bool {
    rates.iter().zip(targets).all(|(r, g)| *r >= g - 1e-9)
}

/// Smallest powers reaching SINR `gamma_k`, if any nonnegative solution exists.
fn min_power(a: &RMatrix, noise: &[f64], gamma: &[f64]) -> Option<Vec<f64>> {
    let k = gamma.len();
    let mut m = RMatrix::zeros(k, k);
    let mut rhs = RVector::zeros(k);
    for u in 0..k {
        m[(u, u)] = a[(u, u)];
        for i in 0..k {
            if i != u {
                m[(u, i)] = -gamma[u] * a[(u, i)];
            }
        }
        rhs[u] = gamma[u] * noise[u];
    }
    let p = m.lu().solve(&rhs)?;
    (p.iter().all(|x| x.is_finite() && *x >= -1e-15)).then(|| p.iter().map(|x| x.max(0.0)).collect())
}

fn fits(a: &RMatrix, noise: &[f64], targets: &[f64], scale: f64, p_max: f64) -> Option<Vec<f64>> {
    let gamma: Vec<f64> = targets.iter().map(|g| (g * scale).exp2() - 1.0).collect();
    let p = min_power(a, noise, &gamma)?;
    let total: f64 = p.iter().sum();
    (total <= p_max && meets(&power_rates(a, noise, &p), &targets.iter().map(|g| g * scale).collect::<Vec<_>>()))
        .then_some(p)
}

fn fill(p: Vec<f64>, p_max: f64) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.into_iter().map(|x| x * p_max / total).collect()
    } else {
        vec![p_max / p.len() as f64; p.len()]
    }
}

/// One bound-maximization step in amplitudes `q = √p`: every rate is
/// replaced by its concave minorizer at `q0`, the minorizers' sum is
/// maximized subject to minorizer `≥ Γ_k` and `Σq² ≤ Pmax`.
fn mm_step(a: &RMatrix, noise: &[f64], targets: &[f64], q0: &RVector, p_max: f64, opts: &QcqpOptions) -> Option<RVector> {
    let k = q0.len();
    let mut obj = QuadraticSurrogate::zeros(k);
    let mut cons = Vec::with_capacity(k + 1);
    for u in 0..k {
        let root = a[(u, u)].sqrt();
        let c = root * q0[u];
        let s: f64 = (0..k).map(|i| a[(u, i)] * q0[i] * q0[i]).sum::<f64>() + noise[u];
        let rest = s - c * c;
        let f11 = s / rest;
        let f12 = -c / rest;
        let f22 = c * c / (s * rest);
        let budget = f11.ln() + 2.0 * f12 * c + f22 * s - targets[u] * LN_2;
        let mut g = QuadraticSurrogate::zeros(k);
        for i in 0..k {
            g.q[(i, i)] = f22 * a[(u, i)];
        }
        g.b[u] = -2.0 * f12 * root;
        g.c = f22 * noise[u];
        obj.add_assign(&g);
        if targets[u] > 0.0 {
            g.c -= budget;
            cons.push(g);
        }
    }
    obj.c = 0.0;
    let mut power = QuadraticSurrogate::zeros(k);
    power.q = RMatrix::identity(k, k);
    power.c = -p_max;
    cons.push(power);
    let mut problem = QcqpProblem::new(obj);
    problem.quadratic = cons;
    problem.lower = Some(RVector::zeros(k));
    let sol = solve_qcqp(&problem, q0, opts).ok()?;
    match sol.status {
        QcqpStatus::Infeasible { .. } => None,
        _ => Some(sol.x),
    }
}

fn ascend(a: &RMatrix, noise: &[f64], targets: &[f64], p0: Vec<f64>, p_max: f64, opts: &PowerOptions) -> (Vec<f64>, f64) {
    let mut p = p0;
    let mut rate: f64 = power_rates(a, noise, &p).iter().sum();
    for _ in 0..opts.max_iters {
        let q0 = RVector::from_iterator(p.len(), p.iter().map(|x| x.sqrt()));
        let Some(q) = mm_step(a, noise, targets, &q0, p_max, &opts.qcqp) else {
            break;
        };
        let cand = fill(q.iter().map(|x| x * x).collect(), p_max);
        let rates = power_rates(a, noise, &cand);
        let r: f64 = rates.iter().sum();
        if !(r > rate) || !meets(&rates, targets) {
            break;
        }
        let done = r - rate <= opts.tol * rate.abs().max(1.0);
        p = cand;
        rate = r;
        if done {
            break;
        }
    }
    (p, rate)
}

fn sum_if_feasible(a: &RMatrix, noise: &[f64], targets: &[f64], p: &[f64]) -> f64 {
    let rates = power_rates(a, noise, p);
    if meets(&rates, targets) {
        rates.iter().sum()
    } else {
        f64::NEG_INFINITY
    }
}

/// Pairwise power exchanges: for each pair the split of their joint power is
/// scanned and refined by golden-section search, until no exchange helps.
fn polish(a: &RMatrix, noise: &[f64], targets: &[f64], mut p: Vec<f64>, mut rate: f64) -> (Vec<f64>, f64) {
    const SCAN: usize = 64;
    let k = p.len();
    for _ in 0..100 {
        let start = rate;
        for i in 0..k {
            for j in (i + 1)..k {
                let total = p[i] + p[j];
                if total <= 0.0 {
                    continue;
                }
                let at = |t: f64| {
                    let mut q = p.clone();
                    q[i] = t;
                    q[j] = total - t;
                    sum_if_feasible(a, noise, targets, &q)
                };
                let step = total / SCAN as f64;
                let mut best = (p[i], rate);
                for n in 0..=SCAN {
                    let t = n as f64 * step;
                    let f = at(t);
                    if f > best.1 {
                        best = (t, f);
                    }
                }
                let (mut lo, mut hi) = ((best.0 - step).max(0.0), (best.0 + step).min(total));
                let g = 0.5 * (5f64.sqrt() - 1.0);
                let mut x1 = hi - g * (hi - lo);
                let mut x2 = lo + g * (hi - lo);
                let (mut f1, mut f2) = (at(x1), at(x2));
                for _ in 0..80 {
                    if f1 >= f2 {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - g * (hi - lo);
                        f1 = at(x1);
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + g * (hi - lo);
                        f2 = at(x2);
                    }
                }
                for (t, f) in [(x1, f1), (x2, f2)] {
                    if f > best.1 {
                        best = (t, f);
                    }
                }
                if best.1 > rate {
                    p[i] = best.0;
                    p[j] = total - best.0;
                    rate = best.1;
                }
            }
        }
        if rate - start <= 1e-13 * rate.abs().max(1.0) {
            break;
        }
    }
    (p, rate)
}

/// Sum-rate power split over fixed beam directions subject to per-user
/// minimum rates (bits/s/Hz) and `Σp ≤ Pmax`.
///
/// Several feasible starting points (equal split, the scaled minimum-power
/// point, one point per dominant user) are each refined by bound
/// maximization and pairwise exchanges; the best result is kept. Without any feasible start the
/// max-min fallback is returned.
pub fn power_allocation(a: &RMatrix, noise: &[f64], targets: &[f64], p_max: f64, opts: &PowerOptions) -> PowerOutcome {
    power_allocation_from(a, noise, targets, p_max, None, opts)
}

/// As [`power_allocation`] with `start` as an additional starting point.
pub fn power_allocation_from(
    a: &RMatrix,
    noise: &[f64],
    targets: &[f64],
    p_max: f64,
    start: Option<&[f64]>,
    opts: &PowerOptions,
) -> PowerOutcome {
    let k = noise.len();
    let mut starts: Vec<Vec<f64>> = vec![vec![p_max / k as f64; k]];
    if let Some(s) = start {
        starts.push(fill(s.to_vec(), p_max));
    }
    if let Some(p) = fits(a, noise, targets, 1.0, p_max) {
        starts.push(fill(p, p_max));
    }
    if k > 1 {
        let eps = 1e-3;
        for u in 0..k {
            let mut p = vec![p_max * eps; k];
            p[u] = p_max * (1.0 - eps * (k - 1) as f64);
            starts.push(p);
        }
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        if !meets(&power_rates(a, noise, &s), targets) {
            continue;
        }
        let (p, r) = ascend(a, noise, targets, s, p_max, opts);
        let (p, r) = polish(a, noise, targets, p, r);
        if best.as_ref().is_none_or(|b| r > b.1) {
            best = Some((p, r));
        }
    }
    if let Some((p, _)) = best {
        return PowerOutcome {
            rates: power_rates(a, noise, &p),
            p,
            infeasible: false,
        };
    }

    let (mut lo, mut hi) = (0.0, 1.0);
    let mut p = vec![p_max / k as f64; k];
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match fits(a, noise, targets, mid, p_max) {
            Some(q) => {
                lo = mid;
                p = q;
            }
            None => hi = mid,
        }
    }
    let p = fill(p, p_max);
    PowerOutcome {
        rates: power_rates(a, noise, &p),
        p,
        infeasible: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_user_takes_all_power() {
        let a = RMatrix::from_element(1, 1, 2.0);
        let out = power_allocation(&a, &[0.5], &[1.0], 3.0, &PowerOptions::default());
        assert!(!out.infeasible);
        assert!((out.p[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_users_saturate_the_budget() {
        let a = RMatrix::from_diagonal(&RVector::from_vec(vec![1.0, 4.0, 0.5]));
        let noise = [0.1, 0.2, 0.3];
        let out = power_allocation(&a, &noise, &[0.0; 3], 2.0, &PowerOptions::default());
        assert!((out.p.iter().sum::<f64>() - 2.0).abs() < 1e-9);
        // Water level: p_k = (μ − n_k/a_k)⁺ with Σp = Pmax.
        let floors: Vec<f64> = (0..3).map(|k| noise[k] / a[(k, k)]).collect();
        let mu = (2.0 + floors.iter().sum::<f64>()) / 3.0;
        let wf: Vec<f64> = floors.iter().map(|f| mu - f).collect();
        let best: f64 = power_rates(&a, &noise, &wf).iter().sum();
        assert!(out.rates.iter().sum::<f64>() >= best - 1e-7, "{} {}", out.rates.iter().sum::<f64>(), best);
        for k in 0..3 {
            assert!((out.p[k] - wf[k]).abs() < 1e-3, "{:?}", out.p);
        }
    }

    #[test]
    fn targets_are_met_and_equal_power_is_beaten() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let a = RMatrix::from_fn(3, 3, |i, j| {
                if i == j {
                    rng.random_range(1.0..5.0)
                } else {
                    rng.random_range(0.0..0.5)
                }
            });
            let noise = [0.1, 0.1, 0.1];
            let targets = [0.5, 0.5, 0.5];
            let out = power_allocation(&a, &noise, &targets, 1.0, &PowerOptions::default());
            assert!(out.p.iter().sum::<f64>() <= 1.0 + 1e-9);
            if !out.infeasible {
                assert!(out.rates.iter().all(|r| *r >= 0.5 - 1e-6));
            }
            let eq = power_rates(&a, &noise, &[1.0 / 3.0; 3]);
            if meets(&eq, &targets) {
                assert!(out.rates.iter().sum::<f64>() >= eq.iter().sum::<f64>() - 1e-12);
            }
        }
    }

    #[test]
    fn unreachable_targets_fall_back_to_max_min() {
        let a = RMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let out = power_allocation(&a, &[1.0, 1.0], &[5.0, 5.0], 1.0, &PowerOptions::default());
        assert!(out.infeasible);
        assert!((out.rates[0] - out.rates[1]).abs() < 1e-6);
        assert!((out.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
