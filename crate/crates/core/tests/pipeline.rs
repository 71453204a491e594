use ambilearn_core::estimator::EstimatorConfig;
use ambilearn_core::learner::{LearnerConfig, PLearner};
use ambilearn_core::noise::{NoiseModel, NoiseSpec};
use ambilearn_core::predictors::{affine, AlphaSchedule, Environment, MixtureCoefficients, PredictorSet, Probe, Truth};
use ambilearn_core::robot_sim::{run_scenario, ScenarioConfig, ZoneMap};
use ambilearn_core::seeded_rng;
use ambilearn_core::verification::{seed_range, MixtureExperiment};
use nalgebra::{DMatrix, DVector};

fn scalar_pair() -> PredictorSet {
    let m = |a: f64| DMatrix::from_element(1, 1, a);
    let f1 = affine(m(0.5), None, DVector::zeros(1)).unwrap();
    let f2 = affine(m(-0.5), None, DVector::from_element(1, 1.0)).unwrap();
    let probes = [0.0, 1.0, -2.0]
        .map(|x| Probe {
            t: 0,
            x: vec![x],
            d: vec![],
        })
        .to_vec();
    PredictorSet::new(vec![f1, f2], &probes).unwrap()
}

fn scalar_learner(t0: usize) -> LearnerConfig {
    LearnerConfig {
        beta: 0.05,
        t0: Some(t0),
        estimator: EstimatorConfig {
            sv_threshold: 1e-10,
            ..EstimatorConfig::with_sigma(0.5, 0.01)
        },
        radius: Default::default(),
    }
}

#[test]
fn zone_switch_spikes_then_reconverges_without_noise() {
    let cfg = ScenarioConfig {
        noise: NoiseSpec::dirac_zero(3, 0.5),
        ..ScenarioConfig::default()
    };
    let log = run_scenario(&cfg, &ZoneMap::default()).unwrap();
    let switches = &log.summary.zone_switches;
    assert_eq!(switches.len(), 3);
    assert_eq!(log.summary.zone_sequence, ["smooth", "slippery", "sandy", "smooth"]);

    let err_at = |t: usize| log.records[t - 1].inf_error;
    for t in cfg.t0..switches[0] {
        assert!(err_at(t) < 1e-6, "t = {t}: {}", err_at(t));
    }
    let mut ends: Vec<usize> = switches[1..].to_vec();
    ends.push(cfg.steps + 1);
    for (&s, &end) in switches.iter().zip(&ends) {
        let spike = (s..s + cfg.t0).map(err_at).fold(0.0, f64::max);
        assert!(spike > 0.1, "no spike after switch at {s}");
        for t in s + cfg.t0 + 1..end {
            assert!(err_at(t) < 1e-3, "t = {t}: {}", err_at(t));
        }
    }
}

#[test]
fn computable_radius_dominates_the_oracle_one() {
    let log = run_scenario(
        &ScenarioConfig {
            steps: 2000,
            ..ScenarioConfig::default()
        },
        &ZoneMap::default(),
    )
    .unwrap();
    assert_eq!(log.summary.oracle_dominance, 1.0);
    for r in &log.records {
        assert!(r.eps_hat >= r.eps);
        assert!(r.gamma >= r.c * 3.0);
    }
}

#[test]
fn scalar_mixture_learner_recovers_coefficients() {
    let set = scalar_pair();
    let star = MixtureCoefficients::from_slice(&[0.3, 0.7]).unwrap();
    let noise = NoiseModel::gaussian(DMatrix::from_element(1, 1, 0.01), 0.1).unwrap();
    let env = Environment::new(
        Truth::Mixture {
            set: set.clone(),
            schedule: AlphaSchedule::Constant(star.clone()),
        },
        noise,
    )
    .unwrap();
    let mut rng = seeded_rng(11);
    let mut learner = PLearner::new(set, DVector::from_element(1, 2.0), scalar_learner(200)).unwrap();
    let mut x = DVector::from_element(1, 2.0);
    let d = DVector::zeros(0);
    let mut last = None;
    for t in 0..400 {
        x = env.step(t, &x, &d, &mut rng).unwrap().next;
        learner.observe(d.clone(), x.clone()).unwrap();
        last = Some(learner.update(&d).unwrap());
    }
    let step = last.unwrap();
    assert!(step.alpha.inf_distance(&star) < 0.2, "{:?}", step.alpha);
    assert!(step.eps_hat >= step.eps);
    assert_eq!(learner.ambiguity_set().unwrap().center.len(), 200);
}

#[test]
fn mixture_coverage_meets_its_floor() {
    let set = scalar_pair();
    let schedule = AlphaSchedule::piecewise(vec![
        (0, MixtureCoefficients::from_slice(&[0.3, 0.7]).unwrap()),
        (150, MixtureCoefficients::from_slice(&[0.8, 0.2]).unwrap()),
    ])
    .unwrap();
    let noise = NoiseModel::gaussian(DMatrix::from_element(1, 1, 0.04), 0.2).unwrap();
    let exp = MixtureExperiment {
        env: Environment::new(Truth::Mixture { set, schedule }, noise).unwrap(),
        x0: DVector::from_element(1, 1.0),
        input: DVector::zeros(0),
        steps: 300,
        learner: scalar_learner(100),
        reference_atoms: 2000,
    };
    let a = exp.run(&seed_range(0, 20)).unwrap();
    assert!(a.passed(), "{a:?}");
    assert_eq!(a, exp.run(&seed_range(0, 20)).unwrap());
}
