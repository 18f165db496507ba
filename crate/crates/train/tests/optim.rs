use std::collections::BTreeMap;

use lesr_model::{build_model, ModelConfig, ModelGraph, Variant};
use lesr_tensor::Scalar;
use lesr_train::{
    adam_step, load_adam_state, lr_at, save_adam_state, sidecar_path, AdamState, TrainConfig,
    TrainError,
};

fn tiny_config() -> ModelConfig {
    let mut cfg = ModelConfig::single(Variant::Sn, 2).with_channels(2);
    cfg.ieeb_depth = 3;
    cfg.irb_depth = 1;
    cfg
}

fn tiny_model<T: Scalar>() -> ModelGraph<T> {
    build_model(&tiny_config(), 7).unwrap()
}

fn inject_grads<T: Scalar>(model: &mut ModelGraph<T>, g: f64) {
    let store = model.store_mut();
    store.visit_grads_mut(|_, grads| {
        for v in grads {
            *v = T::from_f64(g);
        }
    });
    store.set_grads_ready(true);
}

fn params_of<T: Scalar>(model: &ModelGraph<T>) -> Vec<f64> {
    let mut out = Vec::new();
    model.visit_params(|p| out.extend(p.values.iter().map(|&v| Scalar::to_f64(v))));
    out
}

#[test]
fn learning_rate_halves_on_schedule() {
    let cfg = TrainConfig {
        lr0: 1e-4,
        halve_every: 400_000,
        ..TrainConfig::default()
    };
    assert_eq!(lr_at(0, &cfg), 1e-4);
    assert_eq!(lr_at(399_999, &cfg), 1e-4);
    assert_eq!(lr_at(400_000, &cfg), 5e-5);
    assert_eq!(lr_at(800_000, &cfg), 2.5e-5);

    let desk = TrainConfig::default();
    let mut last = f64::INFINITY;
    for step in 0..10_000 {
        let lr = lr_at(step, &desk);
        assert!(lr <= last, "schedule increased at step {step}");
        last = lr;
    }
}

#[test]
fn first_step_update_is_minus_lr_after_bias_correction() {
    // With epsilon this small the t = 1 update m̂/(√v̂ + ε) collapses to
    // g/|g| · (1 + O(ε)), so every parameter moves by almost exactly −lr.
    let cfg = TrainConfig {
        epsilon: 1e-12,
        ..TrainConfig::default()
    };
    let mut model = tiny_model::<f64>();
    let before = params_of(&model);
    let mut state = AdamState::new(model.store());
    inject_grads(&mut model, 1.0);
    adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    let after = params_of(&model);
    for (b, a) in before.iter().zip(&after) {
        let delta = a - b;
        assert!((delta + cfg.lr0).abs() < 1e-9 * cfg.lr0, "delta {delta}");
    }
    assert_eq!(state.step(), 1);
}

#[test]
fn two_steps_with_constant_gradient_match_the_scripted_recurrence() {
    let cfg = TrainConfig::default();
    let mut model = tiny_model::<f64>();
    let theta0 = params_of(&model);
    let mut state = AdamState::new(model.store());

    let g = 0.37;
    for _ in 0..2 {
        inject_grads(&mut model, g);
        adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    }

    // The recurrence, scripted independently for a constant gradient.
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let (mut m, mut v, mut theta) = (0.0, 0.0, 0.0);
    for t in 1..=2 {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mhat = m / (1.0 - b1.powi(t));
        let vhat = v / (1.0 - b2.powi(t));
        theta -= cfg.lr0 * mhat / (vhat.sqrt() + cfg.epsilon);
    }

    for (t0, t2) in theta0.iter().zip(params_of(&model)) {
        assert!(((t2 - t0) - theta).abs() < 1e-12, "{} vs {theta}", t2 - t0);
    }
    assert_eq!(state.step(), 2);
}

#[test]
fn zero_gradients_leave_parameters_unchanged_but_advance_the_clock() {
    let cfg = TrainConfig::default();
    let mut model = tiny_model::<f32>();
    let before = params_of(&model);
    let mut state = AdamState::new(model.store());
    inject_grads(&mut model, 0.0);
    adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    assert_eq!(params_of(&model), before);
    assert_eq!(state.step(), 1);
}

#[test]
fn stale_gradients_are_rejected() {
    let cfg = TrainConfig::default();
    let mut model = tiny_model::<f32>();
    let mut state = AdamState::new(model.store());
    assert!(matches!(
        adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg),
        Err(TrainError::StaleGradients)
    ));
    assert_eq!(state.step(), 0);

    inject_grads(&mut model, 1.0);
    adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    // The step consumed the gradients; a second step must re-derive them.
    assert!(matches!(
        adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg),
        Err(TrainError::StaleGradients)
    ));
}

#[test]
fn extreme_gradients_stay_within_the_step_size_bound() {
    let cfg = TrainConfig::default();
    let mut model = tiny_model::<f64>();
    let before = params_of(&model);
    let mut state = AdamState::new(model.store());
    inject_grads(&mut model, 1e9);
    adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    for (b, a) in before.iter().zip(params_of(&model)) {
        assert!((a - b).abs() <= cfg.lr0 / (1.0 - cfg.beta1) * (1.0 + 1e-9));
        assert!(a.is_finite());
    }
}

#[test]
fn optimizer_state_for_a_different_model_is_rejected() {
    let cfg = TrainConfig::default();
    let mut wide = build_model::<f32>(&tiny_config().with_channels(4), 7).unwrap();
    let mut state = AdamState::new(tiny_model::<f32>().store());
    inject_grads(&mut wide, 1.0);
    assert!(matches!(
        adam_step(wide.store_mut(), &mut state, cfg.lr0, &cfg),
        Err(TrainError::StateMismatch(_))
    ));
}

#[test]
fn sidecar_round_trip_resumes_the_exact_trajectory() {
    let cfg = TrainConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let path = sidecar_path(&dir.path().join("step_000003.ckpt"));
    assert!(path.to_string_lossy().ends_with(".ckpt.adam"));

    let mut model = tiny_model::<f32>();
    let mut state = AdamState::new(model.store());
    for g in [0.5, -0.25, 0.125] {
        inject_grads(&mut model, g);
        adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    }
    save_adam_state(&state, model.store(), &path).unwrap();
    let mut restored = load_adam_state(model.store(), &path).unwrap();
    assert_eq!(restored.step(), 3);

    // One more identical step through both states produces identical params.
    let mut clone = tiny_model::<f32>();
    clone
        .store_mut()
        .visit_params_mut(|_, v| v.iter_mut().for_each(|x| *x = 0.0));
    model
        .store_mut()
        .visit_params_mut(|_, v| v.iter_mut().for_each(|x| *x = 0.0));
    inject_grads(&mut model, 0.75);
    inject_grads(&mut clone, 0.75);
    adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    adam_step(clone.store_mut(), &mut restored, cfg.lr0, &cfg).unwrap();
    assert_eq!(params_of(&model), params_of(&clone));
}

#[test]
fn sidecar_for_a_different_architecture_is_rejected() {
    let cfg = TrainConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.ckpt.adam");

    let mut model = tiny_model::<f32>();
    let mut state = AdamState::new(model.store());
    inject_grads(&mut model, 1.0);
    adam_step(model.store_mut(), &mut state, cfg.lr0, &cfg).unwrap();
    save_adam_state(&state, model.store(), &path).unwrap();

    let wide = build_model::<f32>(&tiny_config().with_channels(4), 7).unwrap();
    assert!(matches!(
        load_adam_state(wide.store(), &path),
        Err(TrainError::StateMismatch(_))
    ));
}

#[test]
fn moment_buffers_shadow_every_parameter() {
    let model = tiny_model::<f32>();
    let mut dims = BTreeMap::new();
    model.visit_params(|p| {
        dims.insert(p.name.clone(), p.values.len());
    });
    // Serialized state carries one m and one v record per parameter.
    let state = AdamState::new(model.store());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.adam");
    save_adam_state(&state, model.store(), &path).unwrap();
    let records = lesr_model::load_values(&path).unwrap();
    assert_eq!(records.len(), 1 + 2 * dims.len());
    assert_eq!(records[0].name, "adam.step");
    for rec in &records[1..] {
        let param = rec
            .name
            .strip_prefix("adam.m.")
            .or_else(|| rec.name.strip_prefix("adam.v."))
            .unwrap();
        assert_eq!(rec.values.len(), dims[param], "{}", rec.name);
        assert!(rec.values.iter().all(|&v| v == 0.0));
    }
}
