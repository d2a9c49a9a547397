//! Hamiltonian Monte Carlo and the No-U-Turn sampler with an identity metric
//! and dual-averaging step-size adaptation.

use alloc::vec;
use alloc::vec::Vec;

use super::posterior::LogDensity;
use crate::error::{invalid, Result};
use crate::math::{dot, exp, ln, sqrt};
use crate::rng::RngStream;

/// Energy error beyond which a trajectory is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// Step-size adaptation by dual averaging.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    mu: f64,
    target: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    h_bar: f64,
    log_eps: f64,
    log_eps_bar: f64,
    m: f64,
}

impl DualAveraging {
    pub fn new(initial_step: f64, target: f64) -> Self {
        Self {
            mu: ln(10.0 * initial_step),
            target,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            h_bar: 0.0,
            log_eps: ln(initial_step),
            log_eps_bar: 0.0,
            m: 0.0,
        }
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        self.m += 1.0;
        let eta = 1.0 / (self.m + self.t0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_stat);
        self.log_eps = self.mu - sqrt(self.m) / self.gamma * self.h_bar;
        let w = crate::math::pow(self.m, -self.kappa);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
        exp(self.log_eps)
    }

    pub fn current(&self) -> f64 {
        exp(self.log_eps)
    }

    /// Averaged step size used after warmup.
    pub fn final_step(&self) -> f64 {
        if self.m == 0.0 {
            self.current()
        } else {
            exp(self.log_eps_bar)
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl PhasePoint {
    pub fn new<D: LogDensity + ?Sized>(target: &D, theta: Vec<f64>, p: Vec<f64>) -> Self {
        let mut grad = vec![0.0; theta.len()];
        let logp = target.logp_grad(&theta, &mut grad);
        Self { theta, p, grad, logp }
    }

    /// `H = −log p(θ) + ½|p|²`.
    pub fn hamiltonian(&self) -> f64 {
        -self.logp + 0.5 * dot(&self.p, &self.p)
    }
}

/// One velocity-Verlet step of size `eps` (negative to integrate backwards).
pub fn leapfrog<D: LogDensity + ?Sized>(target: &D, z: &mut PhasePoint, eps: f64) {
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
    for (t, p) in z.theta.iter_mut().zip(&z.p) {
        *t += eps * p;
    }
    z.logp = target.logp_grad(&z.theta, &mut z.grad);
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
}

fn sample_momentum(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..dim).map(|_| rng.normal()).collect()
}

fn finite_or(x: f64, fallback: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        fallback
    }
}

/// Doubles or halves `eps` until a single leapfrog step's acceptance
/// probability crosses one half.
pub fn find_reasonable_step<D: LogDensity + ?Sized>(target: &D, theta: &[f64], eps0: f64, rng: &mut RngStream) -> f64 {
    let mut eps = eps0;
    let p = sample_momentum(theta.len(), rng);
    let z0 = PhasePoint::new(target, theta.to_vec(), p);
    let h0 = z0.hamiltonian();
    let log_ratio = |eps: f64| {
        let mut z = z0.clone();
        leapfrog(target, &mut z, eps);
        finite_or(h0 - z.hamiltonian(), f64::NEG_INFINITY)
    };
    let up = log_ratio(eps) > ln(0.5);
    for _ in 0..50 {
        let r = log_ratio(eps);
        if up != (r > ln(0.5)) {
            break;
        }
        eps = if up { eps * 2.0 } else { eps * 0.5 };
    }
    eps
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmcOptions {
    pub step_size: f64,
    pub n_leapfrog: usize,
    pub n_warmup: usize,
    pub n_samples: usize,
    pub target_accept: f64,
}

impl Default for HmcOptions {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            n_leapfrog: 32,
            n_warmup: 500,
            n_samples: 256,
            target_accept: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NutsOptions {
    pub step_size: f64,
    pub n_warmup: usize,
    pub n_samples: usize,
    pub max_depth: usize,
    pub target_accept: f64,
}

impl Default for NutsOptions {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            n_warmup: 500,
            n_samples: 256,
            max_depth: 8,
            target_accept: 0.8,
        }
    }
}

/// Kept draws and diagnostics of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub draws: Vec<Vec<f64>>,
    pub log_densities: Vec<f64>,
    /// Mean acceptance statistic over kept iterations.
    pub accept_rate: f64,
    pub divergences: usize,
    /// Iterations whose tree reached the depth limit (NUTS only).
    pub max_depth_hits: usize,
    pub step_size: f64,
    pub n_grad_evals: usize,
}

fn check_init<D: LogDensity + ?Sized>(target: &D, init: &[f64], n_samples: usize, step: f64) -> Result<()> {
    if init.len() != target.dim() {
        return Err(crate::error::dim_mismatch("sampler initial point", target.dim(), init.len()));
    }
    if n_samples == 0 {
        return Err(invalid("n_samples must be >= 1"));
    }
    if !(step > 0.0) {
        return Err(invalid("step size must be positive"));
    }
    Ok(())
}

/// Metropolis-corrected HMC with `n_leapfrog` steps per proposal. The step
/// size is tuned during warmup and jittered by ±10% afterwards to avoid
/// periodic trajectories.
pub fn hmc_sample<D: LogDensity + ?Sized>(
    target: &D,
    init: &[f64],
    opts: &HmcOptions,
    rng: &mut RngStream,
) -> Result<ChainResult> {
    check_init(target, init, opts.n_samples, opts.step_size)?;
    if opts.n_leapfrog == 0 {
        return Err(invalid("n_leapfrog must be >= 1"));
    }
    let dim = init.len();
    let mut current = PhasePoint::new(target, init.to_vec(), vec![0.0; dim]);
    let mut eps = if opts.n_warmup > 0 {
        find_reasonable_step(target, init, opts.step_size, rng)
    } else {
        opts.step_size
    };
    let mut da = DualAveraging::new(eps, opts.target_accept);
    let mut out = ChainResult {
        draws: Vec::with_capacity(opts.n_samples),
        log_densities: Vec::with_capacity(opts.n_samples),
        accept_rate: 0.0,
        divergences: 0,
        max_depth_hits: 0,
        step_size: eps,
        n_grad_evals: 1,
    };
    for it in 0..opts.n_warmup + opts.n_samples {
        let warm = it < opts.n_warmup;
        if it == opts.n_warmup && opts.n_warmup > 0 {
            eps = da.final_step();
        }
        let step = if warm { eps } else { eps * (0.9 + 0.2 * rng.uniform()) };
        current.p = sample_momentum(dim, rng);
        let h0 = current.hamiltonian();
        let mut z = current.clone();
        for _ in 0..opts.n_leapfrog {
            leapfrog(target, &mut z, step);
            if !z.logp.is_finite() {
                break;
            }
        }
        out.n_grad_evals += opts.n_leapfrog;
        let dh = finite_or(z.hamiltonian() - h0, f64::INFINITY);
        let divergent = dh > DIVERGENCE_THRESHOLD;
        let accept = if divergent { 0.0 } else { exp(-dh).min(1.0) };
        if divergent {
            out.divergences += 1;
        } else if rng.uniform() < accept {
            current = z;
        }
        if warm {
            eps = da.update(accept);
        } else {
            out.accept_rate += accept;
            out.draws.push(current.theta.clone());
            out.log_densities.push(current.logp);
        }
    }
    out.accept_rate /= opts.n_samples as f64;
    out.step_size = eps;
    Ok(out)
}

struct Tree {
    left: PhasePoint,
    right: PhasePoint,
    proposal: PhasePoint,
    log_w: f64,
    rho: Vec<f64>,
    n_leap: usize,
    sum_accept: f64,
    stop: bool,
    divergent: bool,
}

/// Generalized no-U-turn check on a momentum sum and the edge momenta.
fn no_u_turn(rho: &[f64], p_left: &[f64], p_right: &[f64]) -> bool {
    dot(rho, p_left) > 0.0 && dot(rho, p_right) > 0.0
}

fn log_add(a: f64, b: f64) -> f64 {
    crate::math::log_sum_exp(a, b)
}

struct NutsBuilder<'a, D: LogDensity + ?Sized> {
    target: &'a D,
    h0: f64,
}

impl<D: LogDensity + ?Sized> NutsBuilder<'_, D> {
    fn build(&self, edge: &PhasePoint, depth: usize, eps: f64, rng: &mut RngStream) -> Tree {
        if depth == 0 {
            let mut z = edge.clone();
            leapfrog(self.target, &mut z, eps);
            let h = finite_or(z.hamiltonian(), f64::INFINITY);
            let divergent = h - self.h0 > DIVERGENCE_THRESHOLD;
            let log_w = self.h0 - h;
            let accept = if log_w.is_finite() { exp(log_w).min(1.0) } else { 0.0 };
            return Tree {
                left: z.clone(),
                right: z.clone(),
                rho: z.p.clone(),
                proposal: z,
                log_w: if divergent { f64::NEG_INFINITY } else { log_w },
                n_leap: 1,
                sum_accept: accept,
                stop: divergent,
                divergent,
            };
        }
        let first = self.build(edge, depth - 1, eps, rng);
        if first.stop {
            return first;
        }
        // Trees are stored in integration order: `left` is the first state.
        let second = self.build(&first.right, depth - 1, eps, rng);
        let log_w = log_add(first.log_w, second.log_w);
        let n_leap = first.n_leap + second.n_leap;
        let sum_accept = first.sum_accept + second.sum_accept;
        if second.stop {
            return Tree {
                n_leap,
                sum_accept,
                stop: true,
                divergent: second.divergent,
                log_w,
                ..first
            };
        }
        let rho: Vec<f64> = first.rho.iter().zip(&second.rho).map(|(a, b)| a + b).collect();
        let mut stop = !no_u_turn(&rho, &first.left.p, &second.right.p);
        // Extra checks spanning the two halves.
        if !stop {
            let r1: Vec<f64> = first.rho.iter().zip(&second.left.p).map(|(a, b)| a + b).collect();
            let r2: Vec<f64> = second.rho.iter().zip(&first.right.p).map(|(a, b)| a + b).collect();
            stop = !no_u_turn(&r1, &first.left.p, &second.left.p) || !no_u_turn(&r2, &first.right.p, &second.right.p);
        }
        let take_second = ln(rng.uniform()) < second.log_w - log_w;
        let proposal = if take_second { second.proposal } else { first.proposal };
        Tree {
            left: first.left,
            right: second.right,
            proposal,
            log_w,
            rho,
            n_leap,
            sum_accept,
            stop,
            divergent: false,
        }
    }
}

struct Transition {
    next: PhasePoint,
    accept_stat: f64,
    divergent: bool,
    hit_max_depth: bool,
    n_leap: usize,
}

fn nuts_transition<D: LogDensity + ?Sized>(
    target: &D,
    current: &PhasePoint,
    eps: f64,
    max_depth: usize,
    rng: &mut RngStream,
) -> Transition {
    let mut z0 = current.clone();
    z0.p = sample_momentum(z0.theta.len(), rng);
    let builder = NutsBuilder {
        target,
        h0: z0.hamiltonian(),
    };
    let mut back = z0.clone();
    let mut fwd = z0.clone();
    let mut rho = z0.p.clone();
    let mut log_w = 0.0;
    let mut sample = z0.clone();
    let mut n_leap = 0;
    let mut sum_accept = 0.0;
    let mut divergent = false;
    let mut depth = 0;
    while depth < max_depth {
        let forward = rng.uniform() < 0.5;
        let sub = if forward {
            builder.build(&fwd, depth, eps, rng)
        } else {
            // Integrating with −eps keeps momenta in forward orientation; the
            // subtree just comes out in reverse time order.
            let mut t = builder.build(&back, depth, -eps, rng);
            core::mem::swap(&mut t.left, &mut t.right);
            t
        };
        n_leap += sub.n_leap;
        sum_accept += sub.sum_accept;
        depth += 1;
        if sub.stop {
            divergent = sub.divergent;
            break;
        }
        if ln(rng.uniform()) < sub.log_w - log_w {
            sample = sub.proposal.clone();
        }
        log_w = log_add(log_w, sub.log_w);
        let (old_back, old_fwd) = (back.p.clone(), fwd.p.clone());
        let old_rho = rho.clone();
        rho.iter_mut().zip(&sub.rho).for_each(|(a, b)| *a += b);
        // Momenta at the subtree end adjacent to the old tree.
        let inner = if forward { sub.left.p.clone() } else { sub.right.p.clone() };
        if forward {
            fwd = sub.right;
        } else {
            back = sub.left;
        }
        let mut turned = !no_u_turn(&rho, &back.p, &fwd.p);
        if !turned {
            // Checks across the old tree and the new subtree.
            let old_inner = if forward { &old_fwd } else { &old_back };
            let r1: Vec<f64> = old_rho.iter().zip(&inner).map(|(a, b)| a + b).collect();
            let r2: Vec<f64> = sub.rho.iter().zip(old_inner).map(|(a, b)| a + b).collect();
            turned = if forward {
                !no_u_turn(&r1, &old_back, &inner) || !no_u_turn(&r2, old_inner, &fwd.p)
            } else {
                !no_u_turn(&r1, &inner, &old_fwd) || !no_u_turn(&r2, &back.p, old_inner)
            };
        }
        if turned {
            break;
        }
    }
    let hit_max_depth = depth == max_depth && !divergent;
    sample.p = z0.p.clone();
    Transition {
        next: sample,
        accept_stat: if n_leap > 0 { sum_accept / n_leap as f64 } else { 0.0 },
        divergent,
        hit_max_depth,
        n_leap,
    }
}

/// Multinomial NUTS with biased progressive sampling between subtrees.
pub fn nuts_sample<D: LogDensity + ?Sized>(
    target: &D,
    init: &[f64],
    opts: &NutsOptions,
    rng: &mut RngStream,
) -> Result<ChainResult> {
    check_init(target, init, opts.n_samples, opts.step_size)?;
    if opts.max_depth == 0 {
        return Err(invalid("max_depth must be >= 1"));
    }
    let dim = init.len();
    let mut current = PhasePoint::new(target, init.to_vec(), vec![0.0; dim]);
    let mut eps = if opts.n_warmup > 0 {
        find_reasonable_step(target, init, opts.step_size, rng)
    } else {
        opts.step_size
    };
    let mut da = DualAveraging::new(eps, opts.target_accept);
    let mut out = ChainResult {
        draws: Vec::with_capacity(opts.n_samples),
        log_densities: Vec::with_capacity(opts.n_samples),
        accept_rate: 0.0,
        divergences: 0,
        max_depth_hits: 0,
        step_size: eps,
        n_grad_evals: 1,
    };
    for it in 0..opts.n_warmup + opts.n_samples {
        let warm = it < opts.n_warmup;
        if it == opts.n_warmup && opts.n_warmup > 0 {
            eps = da.final_step();
        }
        let tr = nuts_transition(target, &current, eps, opts.max_depth, rng);
        out.n_grad_evals += tr.n_leap;
        if tr.divergent {
            out.divergences += 1;
        }
        if tr.hit_max_depth {
            out.max_depth_hits += 1;
        }
        if tr.next.logp.is_finite() {
            current = tr.next;
        }
        if warm {
            eps = da.update(tr.accept_stat);
        } else {
            out.accept_rate += tr.accept_stat;
            out.draws.push(current.theta.clone());
            out.log_densities.push(current.logp);
        }
    }
    out.accept_rate /= opts.n_samples as f64;
    out.step_size = eps;
    Ok(out)
}
