//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use ccsbo::experiment::{run_one, run_trials};
use ccsbo::{ExperimentConfig, RunSpec};
use ccsbo_core::bnn::mlp::{backward, forward_tape, mlp_forward, Activation, MlpSpec, ParamVector, Tape};
use ccsbo_core::bnn::posterior::LogDensity;
use ccsbo_core::bnn::sampler::{hmc_sample, nuts_sample, ChainResult, HmcOptions, NutsOptions};
use ccsbo_core::bnn::svi::{svi_fit, SviOptions, VariationalModel};
use ccsbo_core::bo::{run_trial, BoConfig, Strategy};
use ccsbo_core::ccs::{
    group_schedule, objective_f2, objective_f3, objective_f4_npv, simulate, AquiferSpec, Benchmark, CaseId,
    CaseSpec, EconSpec, SimOutcome, SimStep, WellSchedule,
};
use ccsbo_core::gp::kernel::nngp_kernel;
use ccsbo_core::gp::{GpModel, KernelSpec};
use ccsbo_core::linalg::{chol_solve, cholesky_factor, Matrix};
use ccsbo_core::math::expected_improvement;
use ccsbo_core::moo::acq::mc_ei;
use ccsbo_core::moo::hypervolume;
use ccsbo_core::rng::RngStream;
use ccsbo_core::surrogate::{FittedSurrogate, SurrogateKind};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_spd(n: usize, rng: &mut RngStream) -> Matrix {
    let m = Matrix::new(n, n, (0..n * n).map(|_| rng.normal()).collect()).unwrap();
    let mut a = m.transpose().matmul(&m).unwrap();
    a.add_diag(0.1);
    a
}

fn numerics() -> Check {
    let mut rng = RngStream::new(101, 0);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let n = 1 + k % 20;
        let a = random_spd(n, &mut rng);
        let f = cholesky_factor(&a, 0.0).map_err(|e| format!("system {k}: {e}"))?;
        let back = f.l().matmul(&f.l().transpose()).unwrap();
        let rt = back.sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        let b = Matrix::new(n, 3, (0..3 * n).map(|_| rng.normal()).collect()).unwrap();
        let x = chol_solve(&f, &b).unwrap();
        let res = a.matmul(&x).unwrap().sub(&b).unwrap().frobenius_norm() / b.frobenius_norm();
        worst = worst.max(rt).max(res);
        ensure(rt < 1e-8 && res < 1e-8, format!("system {k} (n={n}): round trip {rt:e}, residual {res:e}"))?;
    }

    let mut worst_grad: f64 = 0.0;
    for k in 0..50 {
        let input = 1 + rng.below(5);
        let hidden: Vec<usize> = (0..1 + rng.below(3)).map(|_| 2 + rng.below(6)).collect();
        let spec = MlpSpec::regression(input, &hidden, Activation::Tanh, 0.0).unwrap();
        let p = ParamVector::sample_prior(&spec, 1.0, 1.0, &mut rng);
        let x: Vec<f64> = (0..input).map(|_| rng.normal()).collect();
        let mut tape = Tape::default();
        forward_tape(&spec, p.as_slice(), &x, None, &mut tape).unwrap();
        let mut grad = vec![0.0; spec.n_params()];
        backward(&spec, p.as_slice(), &x, None, &tape, &[1.0], &mut grad);
        let h = 1e-5;
        for i in 0..spec.n_params() {
            let mut pp = p.clone();
            pp.as_mut_slice()[i] += h;
            let up = mlp_forward(&spec, &pp, &x, None).unwrap()[0];
            pp.as_mut_slice()[i] -= 2.0 * h;
            let dn = mlp_forward(&spec, &pp, &x, None).unwrap()[0];
            let fd = (up - dn) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / grad[i].abs().max(fd.abs()).max(1e-3);
            worst_grad = worst_grad.max(rel);
            ensure(rel < 1e-4, format!("net {k} param {i}: backprop {} vs fd {fd}", grad[i]))?;
        }
    }
    Ok(format!("worst cholesky error {worst:.1e}, worst gradient rel. error {worst_grad:.1e}"))
}

struct Gaussian {
    mean: Vec<f64>,
    prec: Matrix,
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let c: Vec<f64> = theta.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let pc = self.prec.matvec(&c);
        for (g, v) in grad.iter_mut().zip(&pc) {
            *g = -v;
        }
        -0.5 * c.iter().zip(&pc).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Returns the target and its covariance.
fn gaussian_target(d: usize) -> (Gaussian, Matrix) {
    let mut rng = RngStream::new(202, d as u64);
    let a = Matrix::new(d, d, (0..d * d).map(|_| 0.3 * rng.normal()).collect()).unwrap();
    let mut cov = a.transpose().matmul(&a).unwrap();
    cov.add_diag(0.5);
    let inv = cholesky_factor(&cov, 0.0).unwrap().inverse();
    let mut prec = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            prec[(i, j)] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
        }
    }
    let mean = (0..d).map(|i| 1.0 - 0.2 * i as f64).collect();
    (Gaussian { mean, prec }, cov)
}

fn check_moments(name: &str, r: &ChainResult, g: &Gaussian, cov: &Matrix, var_tol: f64) -> Result<f64, String> {
    let n = r.draws.len() as f64;
    let mut worst: f64 = 0.0;
    for k in 0..g.mean.len() {
        let m = r.draws.iter().map(|d| d[k]).sum::<f64>() / n;
        let v = r.draws.iter().map(|d| (d[k] - m) * (d[k] - m)).sum::<f64>() / (n - 1.0);
        let rel = (v / cov[(k, k)] - 1.0).abs();
        worst = worst.max(rel);
        ensure(
            (m - g.mean[k]).abs() < 0.1 && rel < var_tol,
            format!("{name} dim {k}: mean {m:.3} vs {:.3}, var {v:.3} vs {:.3}", g.mean[k], cov[(k, k)]),
        )?;
    }
    Ok(worst)
}

fn samplers() -> Check {
    let mut notes = Vec::new();
    for d in [1, 10] {
        let (g, cov) = gaussian_target(d);
        let init = vec![0.0; d];
        let hmc = HmcOptions {
            n_warmup: 500,
            n_samples: 2000,
            ..HmcOptions::default()
        };
        let a = hmc_sample(&g, &init, &hmc, &mut RngStream::new(7, d as u64)).map_err(|e| e.to_string())?;
        let b = hmc_sample(&g, &init, &hmc, &mut RngStream::new(7, d as u64)).map_err(|e| e.to_string())?;
        ensure(a == b, format!("HMC {d}-D not reproducible"))?;
        let w = check_moments(&format!("HMC {d}-D"), &a, &g, &cov, 0.2)?;
        notes.push(format!("HMC {d}-D var err {:.1}%", 100.0 * w));

        let nuts = NutsOptions {
            n_warmup: 500,
            n_samples: 4000,
            ..NutsOptions::default()
        };
        let a = nuts_sample(&g, &init, &nuts, &mut RngStream::new(8, d as u64)).map_err(|e| e.to_string())?;
        let b = nuts_sample(&g, &init, &nuts, &mut RngStream::new(8, d as u64)).map_err(|e| e.to_string())?;
        ensure(a == b, format!("NUTS {d}-D not reproducible"))?;
        let w = check_moments(&format!("NUTS {d}-D"), &a, &g, &cov, 0.1)?;
        notes.push(format!("NUTS {d}-D var err {:.1}%", 100.0 * w));
    }
    Ok(notes.join(", "))
}

/// `y_i = θ + ε_i`, `ε ~ N(0, σ²)`, `θ ~ N(m0, s0²)`.
struct ScalarMean {
    y: Vec<f64>,
    noise: f64,
    m0: f64,
    s0: f64,
}

impl VariationalModel for ScalarMean {
    fn dim(&self) -> usize {
        1
    }

    fn prior_moments(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![self.m0], vec![self.s0])
    }

    fn log_lik_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let v = self.noise * self.noise;
        let mut ll = 0.0;
        for y in &self.y {
            let r = y - theta[0];
            ll -= 0.5 * r * r / v;
            grad[0] += r / v;
        }
        ll
    }
}

fn variational() -> Check {
    let mut rng = RngStream::new(303, 0);
    let model = ScalarMean {
        y: (0..20).map(|_| 1.3 + 0.8 * rng.normal()).collect(),
        noise: 0.8,
        m0: 0.5,
        s0: 2.0,
    };
    let prec = 1.0 / model.s0.powi(2) + model.y.len() as f64 / model.noise.powi(2);
    let mean = (model.m0 / model.s0.powi(2) + model.y.iter().sum::<f64>() / model.noise.powi(2)) / prec;
    let std = prec.recip().sqrt();
    let fit = svi_fit(&model, &[0.0], &SviOptions::default(), &mut RngStream::new(303, 1)).map_err(|e| e.to_string())?;
    let m = fit.params.mu[0];
    let s = fit.params.log_sigma[0].exp();
    ensure((m - mean).abs() <= 0.05 * mean.abs(), format!("mean {m:.4} vs {mean:.4}"))?;
    ensure((s - std).abs() <= 0.05 * std, format!("std {s:.4} vs {std:.4}"))?;
    // Moving average over 200 steps, with slack for the stochastic estimate.
    let w = 200;
    let ma: Vec<f64> = fit.elbo_trace.windows(w).map(|x| x.iter().sum::<f64>() / w as f64).collect();
    let tol = 0.01 * fit.elbo_trace.last().unwrap().abs();
    ensure(ma.windows(2).all(|p| p[1] >= p[0] - tol), "ELBO moving average decreased")?;
    Ok(format!("mean {m:.4} (exact {mean:.4}), std {s:.4} (exact {std:.4})"))
}

/// Inclusion-exclusion over the boxes `[ref, p]`.
fn hv_inclusion_exclusion(front: &[Vec<f64>], r: &[f64]) -> f64 {
    let n = front.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut corner = vec![f64::INFINITY; r.len()];
        for (i, p) in front.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for (c, v) in corner.iter_mut().zip(p) {
                    *c = c.min(*v);
                }
            }
        }
        let vol: f64 = corner.iter().zip(r).map(|(c, r)| (c - r).max(0.0)).product();
        total += if mask.count_ones() % 2 == 1 { vol } else { -vol };
    }
    total
}

fn acquisition() -> Check {
    let mut worst_ei: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = RngStream::new(404, seed);
        let n = 3 + rng.below(6);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform()]).collect();
        let y: Vec<f64> = x.iter().map(|p| (7.0 * p[0]).sin() + 0.3 * rng.normal()).collect();
        let ls = 0.1 + 0.3 * rng.uniform();
        let model = GpModel::new(x, &y, KernelSpec::matern52(vec![ls], 1.0, 1e-4)).unwrap();
        let f_best = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let closed = |q: f64| {
            let post = model.posterior_predict(&[vec![q]]).unwrap();
            expected_improvement(post.mean[0], post.covariance[(0, 0)].sqrt(), f_best)
        };
        let xq = (0..=200)
            .map(|i| i as f64 / 200.0)
            .max_by(|a, b| closed(*a).total_cmp(&closed(*b)))
            .unwrap();
        let exact = closed(xq);
        let s = FittedSurrogate::Gp(model);
        let samples = s
            .predictive_samples(&[vec![xq]], 4096, &RngStream::new(405, seed))
            .map_err(|e| e.to_string())?;
        let rel = (mc_ei(&samples, f_best) - exact).abs() / exact;
        worst_ei = worst_ei.max(rel);
        ensure(rel < 0.02, format!("GP state {seed}: MC-EI rel. error {rel:.4}"))?;
    }

    let hv = |f: &[Vec<f64>]| hypervolume(f, &[0.0, 0.0]).unwrap();
    ensure(hv(&[vec![2.0, 1.0], vec![1.0, 2.0]]) == 3.0, "two-point example")?;
    ensure(hv(&[vec![3.0, 1.0], vec![2.0, 2.0], vec![1.0, 3.0]]) == 6.0, "three-point example")?;

    let mut worst_mc: f64 = 0.0;
    for m in [3, 4] {
        for rep in 0..3u64 {
            let mut rng = RngStream::new(406, 10 * m as u64 + rep);
            let n = 5 + rng.below(16);
            // Points on the positive unit sphere: mutually non-dominated.
            let front: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let v: Vec<f64> = (0..m).map(|_| rng.normal().abs()).collect();
                    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    v.iter().map(|a| a / norm).collect()
                })
                .collect();
            let r = vec![0.0; m];
            let exact = hypervolume(&front, &r).unwrap();
            if n <= 12 {
                let ie = hv_inclusion_exclusion(&front, &r);
                ensure((exact - ie).abs() <= 1e-12 * ie, format!("m={m}: {exact} vs inclusion-exclusion {ie}"))?;
            }
            let draws = 1_000_000;
            let mut hits = 0usize;
            let mut u = vec![0.0; m];
            for _ in 0..draws {
                u.iter_mut().for_each(|v| *v = rng.uniform());
                if front.iter().any(|p| p.iter().zip(&u).all(|(a, b)| a >= b)) {
                    hits += 1;
                }
            }
            let mc = hits as f64 / draws as f64;
            let rel = (mc - exact).abs() / exact;
            worst_mc = worst_mc.max(rel);
            ensure(rel < 0.01, format!("m={m}, n={n}: exact {exact:.5} vs MC {mc:.5}"))?;
        }
    }
    Ok(format!("worst MC-EI error {:.2}%, worst MC-HV error {:.2}%", 100.0 * worst_ei, 100.0 * worst_mc))
}

/// Average over networks of the empirical last-layer covariance, which is the
/// output covariance of a random ReLU network with these hidden layers.
fn empirical_relu_cov(xs: &[Vec<f64>], depth: usize, width: usize, wv: f64, bv: f64, n_nets: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut acc = vec![vec![0.0; n]; n];
    for net in 0..n_nets {
        let mut rng = RngStream::new(505, net as u64);
        let mut h: Vec<Vec<f64>> = xs.to_vec();
        for _ in 0..depth {
            let fan_in = h[0].len();
            let w_std = (wv / fan_in as f64).sqrt();
            let b_std = bv.sqrt();
            let mut next = vec![vec![0.0; width]; n];
            for j in 0..width {
                let w: Vec<f64> = (0..fan_in).map(|_| w_std * rng.normal()).collect();
                let b = b_std * rng.normal();
                for (row, inp) in next.iter_mut().zip(&h) {
                    let z: f64 = w.iter().zip(inp).map(|(a, c)| a * c).sum::<f64>() + b;
                    row[j] = z.max(0.0);
                }
            }
            h = next;
        }
        for a in 0..n {
            for c in 0..n {
                let s: f64 = h[a].iter().zip(&h[c]).map(|(u, v)| u * v).sum();
                acc[a][c] += bv + wv * s / width as f64;
            }
        }
    }
    acc.iter().map(|r| r.iter().map(|v| v / n_nets as f64).collect()).collect()
}

fn nngp() -> Check {
    let (wv, bv, depth) = (2.0, 0.1, 3);
    let mut rng = RngStream::new(506, 0);
    let xs: Vec<Vec<f64>> = (0..20).map(|_| (0..5).map(|_| rng.normal()).collect()).collect();
    let emp = empirical_relu_cov(&xs, depth, 4096, wv, bv, 4);
    let spec = KernelSpec::nngp(depth, wv, bv, 1.0, 0.0);
    let mut worst: f64 = 0.0;
    for p in 0..10 {
        let (a, b) = (2 * p, 2 * p + 1);
        let k = nngp_kernel(&xs[a], &xs[b], &spec).map_err(|e| e.to_string())?;
        let rel = (emp[a][b] - k).abs() / k.abs();
        worst = worst.max(rel);
        ensure(rel < 0.05, format!("pair {p}: kernel {k:.4} vs empirical {:.4}", emp[a][b]))?;
    }
    Ok(format!("worst rel. error {:.2}%", 100.0 * worst))
}

fn proxy_physics() -> Check {
    let a = AquiferSpec::default();
    let case = CaseSpec::new(CaseId::C2);
    let mut rng = RngStream::new(606, 0);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = case.n_control_steps;
        let mut row = |hi: f64| (0..n).map(|_| hi * rng.uniform()).collect::<Vec<_>>();
        let s = WellSchedule {
            inj_target: row(250.0),
            prod_targets: (0..case.n_producers).map(|_| row(100.0)).collect(),
            gas_caps: (0..case.n_producers).map(|_| row(8.0)).collect(),
        };
        let out = simulate(&s, &a, &case).map_err(|e| e.to_string())?;
        let mut net = 0.0;
        for st in &out.steps {
            net += (st.q_inj - st.q_co2_prod) * 1e6 * out.dt_days;
            let total = st.m_mobile + st.m_residual + st.m_dissolved;
            let rel = (total - net).abs() / net.abs().max(1.0);
            worst = worst.max(rel);
            ensure(rel <= 1e-6, format!("schedule {k}, day {}: stored {total} vs net {net}", st.day))?;
        }
    }

    let mut c1 = CaseSpec::new(CaseId::C1v1);
    let full = c1.clone();
    c1.horizon_days = 90.0;
    let s = WellSchedule::constant(1, 170.0, &[0.0; 8], &[0.0; 8]);
    let out = simulate(&s, &a, &c1).map_err(|e| e.to_string())?;
    let dp = out.steps.last().unwrap().pressure - a.initial_pressure;
    ensure((dp - 148.75).abs() < 1e-6, format!("one control step raises pressure by {dp}, not 148.75"))?;

    let out = simulate(&group_schedule(&full, &a, 170.0), &a, &full).map_err(|e| e.to_string())?;
    let years = out
        .steps
        .iter()
        .find(|st| st.q_inj < 0.95 * 170.0)
        .map_or(f64::INFINITY, |st| (st.day - out.dt_days) / 365.0);
    ensure((15.0..40.0).contains(&years), format!("plateau lasts {years:.1} y"))?;
    Ok(format!("worst mass-balance error {worst:.1e}, dp {dp:.6} psi, plateau {years:.1} y"))
}

fn outcome(dt: f64, per_report: usize, rates: &[(f64, f64, f64)]) -> SimOutcome {
    let mut m = 0.0;
    let steps = rates
        .iter()
        .enumerate()
        .map(|(n, &(qi, qp, qb))| {
            m += (qi - qp) * 1e6 * dt;
            SimStep {
                day: (n + 1) as f64 * dt,
                q_inj: qi,
                q_co2_prod: qp,
                q_brine: qb,
                pressure: 5000.0,
                m_mobile: m,
                m_residual: 0.0,
                m_dissolved: 0.0,
            }
        })
        .collect();
    SimOutcome {
        steps,
        dt_days: dt,
        substeps_per_report: per_report,
        first_inj_target: rates.first().map_or(0.0, |r| r.0),
        mobile_floor: 1.0,
    }
}

fn objectives() -> Check {
    let constant = outcome(10.0, 9, &vec![(170.0, 0.0, 50.0); 1440]);
    let f3 = objective_f3(&constant);
    ensure(f3 == 1.0, format!("f3 = {f3} for constant injection"))?;

    let econ = EconSpec::default();
    let q = 100.0 / (1e6 * econ.co2_tonne_per_scf);
    let npv = objective_f4_npv(&outcome(365.0, 1, &[(q, 0.0, 0.0)]), &econ);
    ensure((npv - 856_537.0).abs() < 1.0, format!("NPV {npv}"))?;

    let f2 = objective_f2(&outcome(10.0, 9, &vec![(170.0, 0.0, 0.0); 1440]));
    ensure((f2 - 2.448).abs() <= 1e-9 * 2.448, format!("f2 {f2}"))?;
    Ok(format!("f3 {f3}, NPV {npv:.2}, f2 {f2:.12}"))
}

fn desk_config(case: &str, n_trials: usize, extra: &str) -> RunSpec {
    let text = format!(
        "[experiment]\ncase = \"{case}\"\nn_trials = {n_trials}\nseed = 0\n{extra}\
         n_mc_samples = 32\nraw_candidates = 128\nn_restarts = 2\nlocal_steps = 2\n\
         [surrogate]\nhidden = [8]\ngp_restarts = 2\n\
         hmc_warmup = 50\nhmc_samples = 32\nhmc_leapfrog = 8\n\
         nuts_warmup = 50\nnuts_samples = 32\nnuts_max_depth = 4\n\
         svi_steps = 200\nsvi_members = 32\nfit_steps = 100\n\
         dropout_steps = 200\nensemble_steps = 200\nensemble_members = 4\n\
         dkl_steps = 50\ndkl_hidden = [8]\n"
    );
    ExperimentConfig::from_toml(&text).unwrap().resolve().unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn final_hv(outputs: &[ccsbo::TrialOutput]) -> Vec<f64> {
    outputs
        .iter()
        .map(|o| o.log.records.last().and_then(|r| r.hypervolume_so_far).unwrap_or(f64::NAN))
        .collect()
}

fn bo_quality() -> Check {
    let branin = Benchmark::from_name("branin").unwrap();
    let opt = branin.optimum().unwrap();
    let config = BoConfig {
        n_init: 10,
        n_iterations: 50,
        q: 1,
        ..BoConfig::default()
    };
    let mut hits = 0;
    let mut gaps = Vec::new();
    for seed in 0..10 {
        let r = run_trial(&branin, &config, Strategy::Surrogate, seed, 0, &mut |_| {}).map_err(|e| e.to_string())?;
        let within = r.records.iter().any(|rec| rec.evaluations_used <= 60 && rec.best_so_far.unwrap() >= opt - 0.5);
        hits += usize::from(within);
        gaps.push(opt - r.records.last().unwrap().best_so_far.unwrap());
    }
    ensure(hits >= 8, format!("branin reached the optimum in {hits}/10 seeds"))?;
    let mut notes = vec![format!("branin {hits}/10 seeds within 0.5")];

    let extra = "n_init = 10\nn_iterations = 6\nq = 5\n";
    let mut spec = desk_config("c2", 8, extra);
    let random = median(final_hv(&run_trials(&spec, Strategy::Random).map_err(|e| e.to_string())?));
    notes.push(format!("c2 random median HV {random:.5e}"));
    let mut failures = Vec::new();
    for kind in SurrogateKind::ALL {
        let start = Instant::now();
        spec.bo.surrogate = kind;
        let bo = median(final_hv(&run_trials(&spec, Strategy::Surrogate).map_err(|e| e.to_string())?));
        println!(
            "  c2 {:<9} median HV {bo:.5e} vs random {random:.5e} ({:.0} s)",
            kind.name(),
            start.elapsed().as_secs_f64()
        );
        notes.push(format!("{} {bo:.5e}", kind.name()));
        if !(bo > random) {
            failures.push(kind.name());
        }
    }
    if failures.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(format!("median HV not above random for {}; {}", failures.join(", "), notes.join(", ")))
    }
}

fn roster() -> Check {
    let extra = "n_init = 10\nn_iterations = 4\nq = 4\n";
    let mut spec = desk_config("c1v1", 1, extra);
    let mut budgets = Vec::new();
    for kind in SurrogateKind::ALL {
        spec.bo.surrogate = kind;
        let a = run_one(&spec, Strategy::Surrogate, 0, None).map_err(|e| format!("{}: {e}", kind.name()))?;
        let b = run_one(&spec, Strategy::Surrogate, 0, None).map_err(|e| format!("{}: {e}", kind.name()))?;
        let name = kind.name();
        ensure(a.log.to_jsonl() == b.log.to_jsonl(), format!("{name}: replay log differs"))?;
        let trace = a.log.trace();
        ensure(trace.windows(2).all(|w| w[1] >= w[0]), format!("{name}: trace not monotone"))?;
        let fallbacks = a.log.records.iter().filter(|r| r.fallback.is_some()).count();
        ensure(fallbacks == 0, format!("{name}: {fallbacks} iterations fell back to random points"))?;
        budgets.push(a.log.records.last().unwrap().evaluations_used);
    }
    ensure(budgets.iter().all(|&b| b == 26), format!("budgets differ: {budgets:?}"))?;
    Ok("8 surrogates, 26 evaluations each, replay byte-identical".into())
}

/// Optional arguments select criteria by number, e.g. `-- 4 6`.
fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, fn() -> Check); 9] = [
        ("numerics", numerics),
        ("samplers", samplers),
        ("variational inference", variational),
        ("acquisition and hypervolume", acquisition),
        ("NNGP kernel", nngp),
        ("proxy physics", proxy_physics),
        ("objective formulas", objectives),
        ("end-to-end BO quality", bo_quality),
        ("surrogate roster", roster),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
