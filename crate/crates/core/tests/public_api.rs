use ccsbo_core::ccs::{evaluate_case, objective_f1, AquiferSpec, CaseId, CaseSpec, EconSpec, ObjectiveId};
use ccsbo_core::ccs::{decode_schedule, simulate};
use ccsbo_core::gp::{GpModel, KernelSpec};
use ccsbo_core::rng::RngStream;
use ccsbo_core::surrogate::{fit_surrogate, SurrogateKind, SurrogateOptions};
use proptest::prelude::*;

fn small_options() -> SurrogateOptions {
    let mut o = SurrogateOptions::default();
    o.hidden = vec![6];
    o.gp.n_starts = 2;
    o.gp.dkl_steps = 20;
    o.gp.dkl_hidden = vec![6];
    o.hmc.n_warmup = 30;
    o.hmc.n_samples = 16;
    o.hmc.n_leapfrog = 6;
    o.nuts.n_warmup = 30;
    o.nuts.n_samples = 16;
    o.nuts.max_depth = 4;
    o.svi.n_steps = 100;
    o.svi_members = 16;
    o.init_fit.n_steps = 50;
    o.dropout_fit.n_steps = 100;
    o.ensemble_fit.n_steps = 100;
    o.ensemble_members = 3;
    o
}

#[test]
fn every_surrogate_fits_and_replays() {
    let mut rng = RngStream::new(31, 0);
    let x: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
    let y: Vec<f64> = x.iter().map(|p| (4.0 * p[0]).sin() + p[1]).collect();
    let xq = vec![vec![0.2, 0.7], vec![0.9, 0.1], vec![0.5, 0.5]];
    let opts = small_options();
    for kind in SurrogateKind::ALL {
        let stream = RngStream::new(5, 5);
        let a = fit_surrogate(kind, &x, &y, &opts, &stream).unwrap();
        let b = fit_surrogate(kind, &x, &y, &opts, &stream).unwrap();
        let sa = a.predictive_samples(&xq, 20, &RngStream::new(6, 6)).unwrap();
        let sb = b.predictive_samples(&xq, 20, &RngStream::new(6, 6)).unwrap();
        assert_eq!((sa.rows(), sa.cols()), (20, 3), "{}", kind.name());
        assert_eq!(sa, sb, "{} does not replay", kind.name());
        assert!(sa.as_slice().iter().all(|v| v.is_finite()), "{}", kind.name());
        assert!(a.mean(&xq[0]).unwrap().is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn c1_proxy_invariants(x in prop::collection::vec(0.0f64..=1.0, 17), v2 in any::<bool>()) {
        let case = CaseSpec::new(if v2 { CaseId::C1v2 } else { CaseId::C1v1 });
        let a = AquiferSpec::default();
        let x = &x[..case.dim()];
        let out = simulate(&decode_schedule(x, &case).unwrap(), &a, &case).unwrap();
        let mut net = 0.0;
        for st in &out.steps {
            net += st.q_stored() * 1e6 * out.dt_days;
            let total = st.m_mobile + st.m_residual + st.m_dissolved;
            prop_assert!((total - net).abs() <= 1e-9 * net.abs().max(1.0));
            prop_assert!(st.pressure >= 0.0 && st.pressure <= a.max_pressure);
        }
        let f1 = objective_f1(&out);
        prop_assert!((0.0..=1.0).contains(&f1));
        let v = evaluate_case(x, &case, &a, &EconSpec::default()).unwrap();
        if let Some(f3) = v.get(ObjectiveId::F3) {
            prop_assert!(f3 > 0.0 && f3 <= 1.0);
        }
    }

    #[test]
    fn gp_posterior_is_symmetric_psd(seed in any::<u64>(), n in 1usize..12, ls in 0.05f64..2.0) {
        let mut rng = RngStream::new(seed, 1);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform(), rng.uniform(), rng.uniform()]).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let m = GpModel::new(x, &y, KernelSpec::matern52(vec![ls; 3], 1.0, 1e-6)).unwrap();
        let xq: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.uniform(), rng.uniform(), rng.uniform()]).collect();
        let post = m.posterior_predict(&xq).unwrap();
        let c = &post.covariance;
        prop_assert!(c.is_symmetric(1e-10));
        prop_assert!(c.diag().iter().all(|&v| v >= 0.0));
        for i in 0..6 {
            for j in 0..6 {
                prop_assert!(c[(i, j)] * c[(i, j)] <= c[(i, i)] * c[(j, j)] * (1.0 + 1e-8) + 1e-12);
            }
        }
    }
}
