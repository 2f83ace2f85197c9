//! Accelerated generalized coordinate descent over the cells of a [`CellPenalty`].
//!
//! One outer pass visits every cell in index order. A visit runs a few proximal gradient
//! steps on that coordinate with backtracking and Nesterov extrapolation, then the pass
//! ends with a block sweep that zeroes blocks failing the group threshold and tries to
//! reopen zero blocks that pass it.

use crate::error::{Error, Result};
use crate::penalty::CellPenalty;
use crate::scalar::Scalar;
use crate::data::SolverConfig;

/// Smallest step the backtracking search will shrink to.
pub(crate) const STEP_FLOOR: f64 = 1e-12;

/// Coordinate-wise access to a smooth loss.
pub(crate) trait Datafit<F: Scalar> {
    /// Fixes the coordinate for subsequent `coord_*` calls; `current` is its present value.
    fn focus(&mut self, cell: usize, current: F);
    /// Loss as a function of the focused coordinate, up to a constant fixed by `focus`.
    fn coord_loss(&mut self, b: F) -> F;
    fn coord_grad(&mut self, b: F) -> F;
    /// Records that `cell` moved from `old` to `new`.
    fn update(&mut self, cell: usize, old: F, new: F);
    fn loss(&mut self) -> F;
    fn cell_grad(&mut self, cell: usize) -> F;
    /// Rebuilds cached state from scratch.
    fn refresh(&mut self, coef: &[F]);
}

/// Per-coordinate iterate of the inner loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateState<F> {
    pub beta_center: F,
    pub theta: F,
    pub step: F,
    pub inner_count: usize,
}

impl<F: Scalar> CoordinateState<F> {
    pub fn new(start: F, step: F) -> Self {
        Self { beta_center: start, theta: start, step, inner_count: 1 }
    }
}

/// Outcome of a backtracking search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSearch<F> {
    pub step: F,
    /// Proximal point at the accepted step.
    pub point: F,
    /// True when the search hit the step floor.
    pub floored: bool,
}

pub fn soft_threshold_scalar<F: Scalar>(z: F, thr: F) -> F {
    let m = z.abs() - thr;
    if m > F::zero() {
        m.copysign(z)
    } else {
        F::zero()
    }
}

/// Exact minimizer over `b` of
/// `(b - z)^2 / (2t) + a|b| + sum_g c_g sqrt(b^2 + rho_g^2)`.
///
/// `groups` holds `(c_g, rho_g)`, `rho_g` being the norm of the rest of block `g`. When
/// every `rho_g` is zero this is `(1 - t sum c_g / |s|)_+ s` with `s = S(z, t a)`.
pub fn coordinate_prox<F: Scalar>(z: F, t: F, a: F, groups: &[(F, F)]) -> F {
    let s = soft_threshold_scalar(z, t * a);
    if s == F::zero() {
        return s;
    }
    let abs = s.abs();
    let mut c0 = F::zero();
    let mut any_rest = false;
    for &(c, rho) in groups {
        if rho == F::zero() {
            c0 += c;
        } else if c != F::zero() {
            any_rest = true;
        }
    }
    let c0 = t * c0;
    if abs <= c0 {
        return F::zero();
    }
    if !any_rest {
        return (F::one() - c0 / abs) * s;
    }
    // u + t sum c u / sqrt(u^2 + rho^2) = abs - c0 has a unique root in (0, abs - c0]; the
    // left side is concave and increasing, so Newton from zero climbs monotonically.
    let target = abs - c0;
    let mut u = F::zero();
    for _ in 0..100 {
        let (mut h, mut dh) = (u - target, F::one());
        for &(c, rho) in groups {
            if rho != F::zero() && c != F::zero() {
                let r = (u * u + rho * rho).sqrt();
                h += t * c * u / r;
                dh += t * c * rho * rho / (r * r * r);
            }
        }
        let next = (u - h / dh).min(target).max(F::zero());
        if (next - u).abs() <= F::epsilon() * (F::one() + target) {
            u = next;
            break;
        }
        u = next;
    }
    u.copysign(s)
}

/// `theta_new + l / (l + 3) * (theta_new - theta_old)`.
pub fn nesterov_center<F: Scalar>(theta_new: F, theta_old: F, l: usize) -> F {
    let lf = F::from_usize(l).unwrap();
    theta_new + lf / (lf + F::lit(3.0)) * (theta_new - theta_old)
}

/// Shrinks the step from `state.step` by `cfg.step_shrink` until the quadratic majorizer
/// at the center bounds the loss at the proximal point.
pub fn backtrack_step<F: Scalar>(
    state: &CoordinateState<F>,
    grad: F,
    mut loss: impl FnMut(F) -> F,
    mut prox: impl FnMut(F) -> F,
    cfg: &SolverConfig<F>,
) -> StepSearch<F> {
    let center = state.beta_center;
    let base = loss(center);
    let floor = F::lit(STEP_FLOOR);
    let mut t = state.step;
    loop {
        let u = prox(t);
        let d = u - center;
        let bound = base + grad * d + d * d / (t + t);
        let slack = F::epsilon() * F::lit(64.0) * (F::one() + base.abs());
        if loss(u) <= bound + slack {
            return StepSearch { step: t, point: u, floored: false };
        }
        let next = t * cfg.step_shrink;
        if next < floor {
            return StepSearch { step: floor, point: prox(floor), floored: true };
        }
        t = next;
    }
}

pub(crate) struct Run<F> {
    pub coef: Vec<F>,
    pub converged: bool,
    pub outer: usize,
    pub max_inner: usize,
    pub objective: F,
    pub trace: Vec<F>,
    pub warnings: Vec<String>,
}

/// Mutable iterate with per-block bookkeeping.
pub(crate) struct Iterate<'a, F> {
    pub pen: &'a CellPenalty<F>,
    pub coef: Vec<F>,
    block_sq: Vec<F>,
    block_nnz: Vec<usize>,
}

impl<'a, F: Scalar> Iterate<'a, F> {
    pub fn new(pen: &'a CellPenalty<F>, coef: Vec<F>) -> Self {
        let mut it = Self { pen, coef, block_sq: vec![F::zero(); pen.blocks.len()], block_nnz: vec![0; pen.blocks.len()] };
        it.recount();
        it
    }

    pub fn recount(&mut self) {
        for (g, cells) in self.pen.blocks.iter().enumerate() {
            self.block_sq[g] = cells.iter().map(|&c| self.coef[c] * self.coef[c]).sum();
            self.block_nnz[g] = cells.iter().filter(|&&c| self.coef[c] != F::zero()).count();
        }
    }

    pub fn set<D: Datafit<F>>(&mut self, data: &mut D, cell: usize, new: F) {
        let old = self.coef[cell];
        if old == new {
            return;
        }
        for &g in &self.pen.cell_blocks[cell] {
            self.block_sq[g] += new * new - old * old;
            if old == F::zero() {
                self.block_nnz[g] += 1;
            } else if new == F::zero() {
                self.block_nnz[g] -= 1;
            }
            if self.block_nnz[g] == 0 {
                self.block_sq[g] = F::zero();
            }
        }
        self.coef[cell] = new;
        data.update(cell, old, new);
    }

    /// `(c_g, rho_g)` for every block containing `cell`.
    fn rest_of_blocks(&self, cell: usize, out: &mut Vec<(F, F)>) {
        out.clear();
        let cur = self.coef[cell];
        let own = usize::from(cur != F::zero());
        for &g in &self.pen.cell_blocks[cell] {
            let rho = if self.block_nnz[g] == own {
                F::zero()
            } else {
                (self.block_sq[g] - cur * cur).max(F::zero()).sqrt()
            };
            out.push((self.pen.l2[g], rho));
        }
    }

    pub fn objective<D: Datafit<F>>(&self, data: &mut D) -> F {
        data.loss() + self.pen.value(&self.coef)
    }
}

struct Visit<F> {
    inner: usize,
    step: F,
    floored: bool,
}

fn visit<F: Scalar, D: Datafit<F>>(
    data: &mut D,
    it: &mut Iterate<'_, F>,
    cell: usize,
    cfg: &SolverConfig<F>,
    groups: &mut Vec<(F, F)>,
) -> Visit<F> {
    let start = it.coef[cell];
    let a = it.pen.l1[cell];
    it.rest_of_blocks(cell, groups);
    data.focus(cell, start);
    let penalty = |b: F, groups: &[(F, F)]| -> F {
        a * b.abs() + groups.iter().map(|&(c, rho)| c * (b * b + rho * rho).sqrt()).sum::<F>()
    };
    let mut best = start;
    let mut best_val = data.coord_loss(start) + penalty(start, groups);
    let mut state = CoordinateState::new(start, cfg.step_init);
    let mut out = Visit { inner: 0, step: cfg.step_init, floored: false };
    while state.inner_count <= cfg.max_inner_iter {
        let center = state.beta_center;
        let grad = data.coord_grad(center);
        let search = {
            let groups = &*groups;
            let data = &mut *data;
            // The closures both need the loss; evaluate the prox without it.
            let prox = |t: F| coordinate_prox(center - t * grad, t, a, groups);
            backtrack_step(&state, grad, |b| data.coord_loss(b), prox, cfg)
        };
        out.inner = state.inner_count;
        out.step = search.step;
        out.floored |= search.floored;
        state.step = search.step;
        let theta_new = search.point;
        let val = data.coord_loss(theta_new) + penalty(theta_new, groups);
        if val < best_val {
            best = theta_new;
            best_val = val;
        }
        let done = (theta_new - state.theta).abs() < cfg.inner_tol;
        state.beta_center = nesterov_center(theta_new, state.theta, state.inner_count);
        state.theta = theta_new;
        state.inner_count += 1;
        if done {
            break;
        }
    }
    it.set(data, cell, best);
    out
}

/// Block sweep with step `t`. With `guarded`, a kill is kept only if the objective does
/// not rise, and zero blocks passing the threshold get a block proximal step that is kept
/// only on strict decrease. Returns the number of blocks changed.
pub(crate) fn sweep<F: Scalar, D: Datafit<F>>(data: &mut D, it: &mut Iterate<'_, F>, t: F, guarded: bool) -> usize {
    let pen = it.pen;
    let mut changed = 0;
    let mut s = Vec::new();
    for g in 0..pen.blocks.len() {
        let cells = &pen.blocks[g];
        if cells.is_empty() {
            continue;
        }
        s.clear();
        for &c in cells {
            let grad = data.cell_grad(c);
            s.push(soft_threshold_scalar(it.coef[c] - t * grad, t * pen.l1[c]));
        }
        let norm = s.iter().map(|&v| v * v).sum::<F>().sqrt();
        let thr = t * pen.l2[g];
        if it.block_nnz[g] > 0 {
            if norm > thr {
                continue;
            }
            let before = if guarded { it.objective(data) } else { F::zero() };
            let old: Vec<F> = cells.iter().map(|&c| it.coef[c]).collect();
            for &c in cells {
                it.set(data, c, F::zero());
            }
            if guarded && !(it.objective(data) <= before) {
                for (&c, &v) in cells.iter().zip(&old) {
                    it.set(data, c, v);
                }
            } else {
                changed += 1;
            }
        } else if guarded && pen.l2[g] > F::zero() && norm > thr {
            let before = it.objective(data);
            let scale = F::one() - thr / norm;
            let mut tau = F::one();
            let mut accepted = false;
            for _ in 0..40 {
                for (&c, &v) in cells.iter().zip(&s) {
                    it.set(data, c, tau * scale * v);
                }
                if it.objective(data) < before {
                    accepted = true;
                    break;
                }
                tau = tau * F::lit(0.8);
            }
            if accepted {
                changed += 1;
            } else {
                for &c in cells {
                    it.set(data, c, F::zero());
                }
            }
        }
    }
    changed
}

fn max_change<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(u, v)| (*u - *v).abs()).fold(F::zero(), F::max)
}

pub(crate) fn run<F: Scalar, D: Datafit<F>>(
    data: &mut D,
    pen: &CellPenalty<F>,
    cfg: &SolverConfig<F>,
    init: Vec<F>,
) -> Result<Run<F>> {
    let mut it = Iterate::new(pen, init);
    data.refresh(&it.coef);
    let mut warnings = Vec::new();
    let start = it.objective(data);
    if !start.is_finite() {
        return Err(Error::Numerical("objective is not finite at the starting point".into()));
    }
    let mut trace = vec![start];
    let mut converged = false;
    let mut max_inner = 0;
    let mut outer = 0;
    let mut floor_cells = 0usize;
    let mut groups = Vec::new();
    while outer < cfg.max_outer_iter {
        outer += 1;
        let prev = it.coef.clone();
        let mut min_step = cfg.step_init;
        for cell in 0..pen.n_cells() {
            let v = visit(data, &mut it, cell, cfg, &mut groups);
            max_inner = max_inner.max(v.inner);
            min_step = min_step.min(v.step);
            if v.floored {
                floor_cells += 1;
            }
            if !it.coef[cell].is_finite() {
                return Err(Error::Numerical(format!("coefficient {cell} diverged in pass {outer}")));
            }
        }
        sweep(data, &mut it, min_step, true);
        data.refresh(&it.coef);
        it.recount();
        let obj = it.objective(data);
        if !obj.is_finite() {
            return Err(Error::Numerical(format!("objective is not finite after pass {outer}")));
        }
        trace.push(obj);
        let change = max_change(&prev, &it.coef);
        if change < cfg.outer_tol {
            converged = true;
            break;
        }
        // On sparse iterates, cycle over the nonzero cells until they settle; the next
        // full pass decides convergence.
        let active: Vec<usize> = (0..pen.n_cells()).filter(|&c| it.coef[c] != F::zero()).collect();
        if 3 * active.len() > pen.n_cells() {
            continue;
        }
        for _ in 0..cfg.max_outer_iter {
            let before: Vec<F> = active.iter().map(|&c| it.coef[c]).collect();
            for &cell in &active {
                let v = visit(data, &mut it, cell, cfg, &mut groups);
                max_inner = max_inner.max(v.inner);
                if v.floored {
                    floor_cells += 1;
                }
                if !it.coef[cell].is_finite() {
                    return Err(Error::Numerical(format!("coefficient {cell} diverged in pass {outer}")));
                }
            }
            let after: Vec<F> = active.iter().map(|&c| it.coef[c]).collect();
            if max_change(&before, &after) < cfg.outer_tol {
                break;
            }
        }
        data.refresh(&it.coef);
        it.recount();
    }
    if floor_cells > 0 {
        let msg = format!("step size reached the floor {STEP_FLOOR:e} on {floor_cells} coordinate visits");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if !converged {
        let msg = format!("no convergence within {} outer passes", cfg.max_outer_iter);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let objective = *trace.last().expect("trace starts non-empty");
    Ok(Run { coef: it.coef, converged, outer, max_inner, objective, trace, warnings })
}
