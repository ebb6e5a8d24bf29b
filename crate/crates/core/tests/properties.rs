use bss_core::bss::{planted_beta, tau_star};
use bss_core::designs::DesignSpec;
use bss_core::experiments::{recovery_curve, ExperimentConfig, Summary};
use bss_core::glm::{glm_margins, GlmConfig, GlmFamily, GlmInstance};
use bss_core::model::{LinearInstance, DEFAULT_BUDGET};
use nalgebra::DVector;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_glm_margin_equals_linear_margin(seed in 0u64..10_000, p in 4usize..7, s in 1usize..3, b in 0.2f64..2.0) {
        let design = DesignSpec::block(p, 0.2, 0.3, seed).unwrap().sample(30).unwrap();
        let beta = planted_beta(p, s, b);
        let lin = LinearInstance::with_noise(design.clone(), beta.clone(), 1.0, seed).unwrap();
        let glm = GlmInstance::new(design, beta, GlmFamily::Linear { sigma: 1.0 }, lin.y.clone()).unwrap();
        let g = glm_margins(&glm, &GlmConfig::default()).unwrap().tau_tilde_star;
        let l = tau_star(&lin, s, DEFAULT_BUDGET).unwrap().value;
        prop_assert!((g - l).abs() <= 1e-8 * l.max(1e-12));
    }

    #[test]
    fn logistic_sandwich_and_stationarity(seed in 0u64..10_000, b0 in 0.3f64..1.5, b1 in -1.5f64..-0.3) {
        let design = DesignSpec::block(5, 0.3, 0.2, seed).unwrap().sample(150).unwrap();
        let mut beta = DVector::zeros(5);
        beta[0] = b0;
        beta[1] = b1;
        let inst = GlmInstance::simulate(design, beta, GlmFamily::Logistic, seed + 1).unwrap();
        let report = glm_margins(&inst, &GlmConfig::default()).unwrap();
        prop_assert!(report.sandwich_ok);
        for c in &report.candidates {
            let fit = inst.beta_bar_fit(&c.subset).unwrap();
            prop_assert!(fit.grad_inf <= 1e-10);
            prop_assert!(c.delta_kl >= 0.0 && c.delta_par >= 0.0);
        }
    }

    #[test]
    fn noiseless_recovery_rate_is_one(seed in 0u64..1000, r in 0.0f64..0.8) {
        let cfg = ExperimentConfig {
            r_values: vec![r],
            n: 60,
            p: 15,
            sigma: 0.0,
            beta_value: 0.5,
            reps: 2,
            ..ExperimentConfig::recovery_default(seed)
        };
        let out = recovery_curve(&cfg).unwrap();
        let Summary::Recovery { points } = out.summary else { unreachable!() };
        prop_assert!(out.rows.iter().all(|row| row.tau_star.unwrap() > 0.0));
        prop_assert_eq!(points[0].rate, 1.0);
    }
}
