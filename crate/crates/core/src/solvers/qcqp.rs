//! Small dense log-barrier interior-point method for convex QCQPs.

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue_symmetric, RMatrix, RVector};

/// Real quadratic `f(x) = xᵀQx − bᵀx + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSurrogate {
    pub q: RMatrix,
    pub b: RVector,
    pub c: f64,
}

impl QuadraticSurrogate {
    pub fn new(q: RMatrix, b: RVector, c: f64) -> Self {
        QuadraticSurrogate { q, b, c }
    }

    pub fn zeros(n: usize) -> Self {
        QuadraticSurrogate::new(RMatrix::zeros(n, n), RVector::zeros(n), 0.0)
    }

    /// `aᵀx − β` written as a quadratic with zero curvature.
    pub fn affine(a: RVector, beta: f64) -> Self {
        let n = a.len();
        QuadraticSurrogate::new(RMatrix::zeros(n, n), -a, -beta)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, x: &RVector) -> f64 {
        x.dot(&(&self.q * x)) - self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &RVector) -> RVector {
        (&self.q + self.q.transpose()) * x - &self.b
    }

    pub fn hessian(&self) -> RMatrix {
        &self.q + self.q.transpose()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue_symmetric(&self.q)
    }

    /// Smallest eigenvalue of `Q` at least `−1e−8·‖Q‖`.
    pub fn is_convex(&self) -> bool {
        self.min_eigenvalue() >= -1e-8 * self.q.norm().max(f64::MIN_POSITIVE)
    }

    fn has_curvature(&self) -> bool {
        self.q.iter().any(|v| *v != 0.0)
    }

    fn scaled(&self, s: f64) -> Self {
        QuadraticSurrogate::new(self.q.scale(s), self.b.scale(s), self.c * s)
    }

    fn magnitude(&self) -> f64 {
        self.q.norm().max(self.b.norm()).max(self.c.abs())
    }

    pub fn add_assign(&mut self, other: &QuadraticSurrogate) {
        self.q += &other.q;
        self.b += &other.b;
        self.c += other.c;
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scaled(s)
    }
}

/// Minimize a convex quadratic subject to convex quadratic constraints
/// `g_i(x) ≤ 0`, affine constraints `aᵀx ≤ β` and optional box bounds.
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    pub objective: QuadraticSurrogate,
    pub quadratic: Vec<QuadraticSurrogate>,
    pub affine: Vec<(RVector, f64)>,
    pub lower: Option<RVector>,
    pub upper: Option<RVector>,
}

impl QcqpProblem {
    pub fn new(objective: QuadraticSurrogate) -> Self {
        QcqpProblem {
            objective,
            quadratic: Vec::new(),
            affine: Vec::new(),
            lower: None,
            upper: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// All constraints in the order quadratic, affine, lower box, upper box.
    fn constraints(&self) -> Vec<QuadraticSurrogate> {
        let n = self.dim();
        let mut out = self.quadratic.clone();
        for (a, beta) in &self.affine {
            out.push(QuadraticSurrogate::affine(a.clone(), *beta));
        }
        if let Some(lo) = &self.lower {
            for i in 0..n {
                let mut a = RVector::zeros(n);
                a[i] = -1.0;
                out.push(QuadraticSurrogate::affine(a, -lo[i]));
            }
        }
        if let Some(hi) = &self.upper {
            for i in 0..n {
                let mut a = RVector::zeros(n);
                a[i] = 1.0;
                out.push(QuadraticSurrogate::affine(a, hi[i]));
            }
        }
        out
    }

    /// Largest constraint value at `x` (≤ 0 means feasible).
    pub fn max_violation(&self, x: &RVector) -> f64 {
        self.constraints()
            .iter()
            .map(|g| g.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn num_constraints(&self) -> usize {
        let n = self.dim();
        self.quadratic.len()
            + self.affine.len()
            + self.lower.as_ref().map_or(0, |_| n)
            + self.upper.as_ref().map_or(0, |_| n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QcqpStatus {
    Optimal,
    /// No strictly feasible point found; `constraint` is the most violated
    /// one at the best phase-I point, with its value.
    Infeasible { constraint: usize, violation: f64 },
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub x: RVector,
    pub status: QcqpStatus,
    pub objective: f64,
    /// Lagrange multipliers in constraint order (quadratic, affine, lower, upper).
    pub duals: Vec<f64>,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QcqpOptions {
    pub tol: f64,
    pub mu: f64,
    pub max_newton: usize,
    /// Target duality gap of the scaled problem.
    pub gap: f64,
}

impl Default for QcqpOptions {
    fn default() -> Self {
        QcqpOptions {
            tol: 1e-6,
            mu: 20.0,
            max_newton: 400,
            gap: 1e-8,
        }
    }
}

/// Quadratic stored as `½xᵀHx − bᵀx + c` with `H` dropped when zero.
struct Compact {
    h: Option<RMatrix>,
    b: RVector,
    c: f64,
}

impl Compact {
    fn new(q: &QuadraticSurrogate) -> Self {
        Compact {
            h: q.has_curvature().then(|| q.hessian()),
            b: q.b.clone(),
            c: q.c,
        }
    }

    fn eval(&self, x: &RVector) -> f64 {
        let lin = self.c - self.b.dot(x);
        match &self.h {
            Some(h) => lin + 0.5 * x.dot(&(h * x)),
            None => lin,
        }
    }

    fn gradient(&self, x: &RVector) -> RVector {
        match &self.h {
            Some(h) => h * x - &self.b,
            None => -&self.b,
        }
    }
}

struct Barrier {
    f0: Compact,
    gs: Vec<Compact>,
}

impl Barrier {
    fn new(f0: &QuadraticSurrogate, gs: &[QuadraticSurrogate]) -> Self {
        Barrier {
            f0: Compact::new(f0),
            gs: gs.iter().map(Compact::new).collect(),
        }
    }

    fn value(&self, t: f64, x: &RVector) -> Option<f64> {
        let mut v = t * self.f0.eval(x);
        for g in &self.gs {
            let gi = g.eval(x);
            if gi >= 0.0 || !gi.is_finite() {
                return None;
            }
            v -= (-gi).ln();
        }
        Some(v)
    }

    fn derivatives(&self, t: f64, x: &RVector) -> (RVector, RMatrix) {
        let n = x.len();
        let mut grad = self.f0.gradient(x).scale(t);
        let mut hess = match &self.f0.h {
            Some(h) => h.scale(t),
            None => RMatrix::zeros(n, n),
        };
        for g in &self.gs {
            let inv = -1.0 / g.eval(x);
            let dg = g.gradient(x);
            grad.axpy(inv, &dg, 1.0);
            if let Some(h) = &g.h {
                hess += h * inv;
            }
            hess.ger(inv * inv, &dg, &dg, 1.0);
        }
        (grad, hess)
    }

    /// Newton steps accepted on a decrease of the gradient norm, for when
    /// the barrier value is too large to resolve further progress.
    fn polish(&self, t: f64, x: &mut RVector, budget: &mut usize) {
        for _ in 0..20 {
            if *budget == 0 {
                return;
            }
            *budget -= 1;
            let (grad, hess) = self.derivatives(t, x);
            let gnorm = grad.norm();
            let dx = newton_direction(&hess, &grad);
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let cand = &*x + dx.scale(s);
                if self.value(t, &cand).is_some() && self.derivatives(t, &cand).0.norm() < gnorm {
                    *x = cand;
                    moved = true;
                    break;
                }
                s *= 0.5;
            }
            if !moved {
                return;
            }
        }
    }

    /// Damped Newton minimization of `t f0 − Σ log(−g_i)` from a strictly
    /// feasible `x`. `stop` allows an early exit (phase I).
    fn center(
        &self,
        t: f64,
        x: &mut RVector,
        budget: &mut usize,
        tol: f64,
        stop: &dyn Fn(&RVector) -> bool,
    ) -> bool {
        let n = x.len();
        loop {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let (grad, hess) = self.derivatives(t, x);
            let dx = newton_direction(&hess, &grad);
            let decrement = -grad.dot(&dx);
            if !(decrement.is_finite()) || decrement / 2.0 <= tol {
                return true;
            }
            let f_cur = match self.value(t, x) {
                Some(v) => v,
                None => return true,
            };
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = &*x + dx.scale(s);
                if let Some(fv) = self.value(t, &cand) {
                    if fv <= f_cur - 0.01 * s * decrement {
                        *x = cand;
                        moved = f_cur - fv > 1e-15 * f_cur.abs();
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                return true;
            }
            if stop(x) {
                return true;
            }
            if n == 0 {
                return true;
            }
        }
    }
}

fn newton_direction(hess: &RMatrix, grad: &RVector) -> RVector {
    let n = grad.len();
    let scale = hess.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..30 {
        let mut h = hess.clone();
        for i in 0..n {
            h[(i, i)] += reg;
        }
        if let Some(ch) = h.cholesky() {
            return -ch.solve(grad);
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 10.0 };
    }
    -grad.clone()
}

fn barrier_solve(
    f0: &QuadraticSurrogate,
    gs: &[QuadraticSurrogate],
    x: &mut RVector,
    opts: &QcqpOptions,
    budget: &mut usize,
    stop: &dyn Fn(&RVector) -> bool,
) -> (bool, f64) {
    let b = Barrier::new(f0, gs);
    let m = gs.len() as f64;
    if gs.is_empty() {
        let ok = b.center(1.0, x, budget, 1e-15, stop);
        return (ok, 1.0);
    }
    let mut t = 1.0;
    loop {
        let ok = b.center(t, x, budget, 1e-9, stop);
        if stop(x) {
            return (true, t);
        }
        if !ok {
            return (false, t);
        }
        if m / t < opts.gap {
            // Polish the last centering so the multipliers are accurate.
            b.polish(t, x, budget);
            return (true, t);
        }
        t *= opts.mu;
    }
}

/// Solves a convex QCQP from the starting point `x0`.
///
/// A strictly feasible start skips phase I. If `x0` is feasible and the
/// interior point is no better, `x0` itself is returned.
pub fn solve_qcqp(p: &QcqpProblem, x0: &RVector, opts: &QcqpOptions) -> Result<QcqpSolution> {
    let n = p.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "start has {} entries for {} variables",
            x0.len(),
            n
        )));
    }
    let lam = p.objective.min_eigenvalue();
    if lam < -1e-8 * p.objective.q.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NonConvex(lam));
    }
    for g in &p.quadratic {
        if g.dim() != n {
            return Err(Error::Dimension("constraint dimension differs".into()));
        }
        if !g.is_convex() {
            return Err(Error::NonConvex(g.min_eigenvalue()));
        }
    }

    let raw = p.constraints();
    let s0 = 1.0 / p.objective.magnitude().max(1e-300);
    let f0 = p.objective.scaled(s0);
    let scales: Vec<f64> = raw.iter().map(|g| 1.0 / g.magnitude().max(1e-300)).collect();
    let gs: Vec<QuadraticSurrogate> = raw.iter().zip(&scales).map(|(g, s)| g.scaled(*s)).collect();
    let mut budget = opts.max_newton;
    let max_g = |x: &RVector| gs.iter().map(|g| g.eval(x)).fold(f64::NEG_INFINITY, f64::max);

    let mut x = x0.clone();
    if !gs.is_empty() && max_g(&x) >= -1e-12 {
        // Phase I over (x, s): minimize s subject to g_i(x) ≤ s and s ≥ −1.
        let mut ext: Vec<QuadraticSurrogate> = gs
            .iter()
            .map(|g| {
                let mut q = RMatrix::zeros(n + 1, n + 1);
                q.view_mut((0, 0), (n, n)).copy_from(&g.q);
                let mut b = RVector::zeros(n + 1);
                b.rows_mut(0, n).copy_from(&g.b);
                b[n] = 1.0;
                QuadraticSurrogate::new(q, b, g.c)
            })
            .collect();
        let mut a = RVector::zeros(n + 1);
        a[n] = -1.0;
        ext.push(QuadraticSurrogate::affine(a, 1.0));
        let mut obj_b = RVector::zeros(n + 1);
        obj_b[n] = -1.0;
        let obj = QuadraticSurrogate::new(RMatrix::zeros(n + 1, n + 1), obj_b, 0.0);
        let mut z = RVector::zeros(n + 1);
        z.rows_mut(0, n).copy_from(&x);
        z[n] = max_g(&x).max(0.0) + 1.0;
        let stop = |z: &RVector| {
            let xs = z.rows(0, n).into_owned();
            max_g(&xs) < -1e-7
        };
        barrier_solve(&obj, &ext, &mut z, opts, &mut budget, &stop);
        x = z.rows(0, n).into_owned();
        let worst = max_g(&x);
        if worst >= -1e-12 {
            let (idx, viol) = raw
                .iter()
                .enumerate()
                .map(|(i, g)| (i, g.eval(&x)))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            return Ok(QcqpSolution {
                objective: p.objective.eval(&x),
                x,
                status: QcqpStatus::Infeasible {
                    constraint: idx,
                    violation: viol,
                },
                duals: vec![0.0; raw.len()],
                newton_steps: opts.max_newton - budget,
            });
        }
    }

    let (ok, t) = barrier_solve(&f0, &gs, &mut x, opts, &mut budget, &|_| false);
    let duals: Vec<f64> = gs
        .iter()
        .zip(&scales)
        .map(|(g, s)| 1.0 / (t * -g.eval(&x)) * s / s0)
        .collect();
    let mut status = if ok {
        QcqpStatus::Optimal
    } else {
        QcqpStatus::MaxIters
    };
    let x0_feasible = raw.iter().all(|g| g.eval(x0) <= 0.0);
    if x0_feasible && p.objective.eval(&x) > p.objective.eval(x0) {
        x = x0.clone();
        if status == QcqpStatus::MaxIters {
            status = QcqpStatus::Optimal;
        }
    }
    Ok(QcqpSolution {
        objective: p.objective.eval(&x),
        x,
        status,
        duals,
        newton_steps: opts.max_newton - budget,
    })
}
