use lesr_model::{build_model, Activation, ModelConfig, Variant};
use lesr_tensor::{Shape4, Tensor4};
use lesr_train::{
    collect_analytic_grads, compare_to_finite_differences, gradcheck, gradcheck_with,
    jitter_biases,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_config() -> ModelConfig {
    let mut cfg = ModelConfig::single(Variant::Lesrcnn, 2).with_channels(4);
    cfg.ieeb_depth = 5;
    cfg.irb_depth = 2;
    cfg
}

fn random_input(seed: u64, h: usize, w: usize) -> Tensor4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..3 * h * w).map(|_| rng.random_range(0.05..1.0)).collect();
    Tensor4::from_vec(Shape4::new(1, 3, h, w), data).unwrap()
}

#[test]
fn full_model_passes_at_the_production_tolerance() {
    let mut model = build_model::<f64>(&tiny_config(), 11).unwrap();
    jitter_biases(&mut model, 0x11);
    let input = random_input(1, 6, 6);
    let report = gradcheck(&mut model, 2, &input, 1e-4).unwrap();
    assert!(report.passed(), "{report}");
    assert!(report.entries_checked() > 100);
    assert!(report.rows.iter().all(|r| r.entries_checked > 0));
}

#[test]
fn linear_data_path_is_near_machine_precision() {
    let mut model = build_model::<f64>(&tiny_config(), 12).unwrap();
    jitter_biases(&mut model, 0x12);
    // Without rectifiers the signal grows layer over layer; damping the
    // weights keeps the loss at unit scale so finite-difference rounding
    // noise stays far below the tight tolerance.
    model.store_mut().visit_params_mut(|name, values| {
        if name.ends_with(".weight") {
            values.iter_mut().for_each(|v| *v *= 0.5);
        }
    });
    let input = random_input(2, 6, 6);
    let report =
        gradcheck_with(&mut model, 2, &input, 1e-7, 1e-5, Activation::Identity).unwrap();
    assert!(report.passed(), "{report}");
    assert!(report.max_rel() < 1e-7, "max rel {}", report.max_rel());
}

#[test]
fn corrupted_analytic_gradients_fail_loudly() {
    let mut model = build_model::<f64>(&tiny_config(), 13).unwrap();
    jitter_biases(&mut model, 0x13);
    let input = random_input(3, 6, 6);

    let s = input.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let data = (0..3 * s.h * 2 * s.w * 2).map(|_| rng.random_range(0.0..1.0)).collect();
    let target = Tensor4::from_vec(Shape4::new(1, 3, s.h * 2, s.w * 2), data).unwrap();

    let mut grads =
        collect_analytic_grads(&mut model, 2, &input, &target, Activation::Relu).unwrap();
    let clean = compare_to_finite_differences(
        &mut model,
        2,
        &input,
        &target,
        Activation::Relu,
        1e-6,
        1e-4,
        &grads,
    )
    .unwrap();
    assert!(clean.passed(), "{clean}");

    // Sign-flip the tensor with the largest gradient magnitude.
    let victim = (0..grads.len())
        .max_by(|&a, &b| {
            let mag = |i: usize| {
                grads[i].1.iter().map(|g: &f64| g.abs()).fold(0.0, f64::max)
            };
            mag(a).total_cmp(&mag(b))
        })
        .unwrap();
    for g in &mut grads[victim].1 {
        *g = -*g;
    }
    let corrupted = compare_to_finite_differences(
        &mut model,
        2,
        &input,
        &target,
        Activation::Relu,
        1e-6,
        1e-4,
        &grads,
    )
    .unwrap();
    assert!(!corrupted.passed());
    assert!(
        corrupted.rows[victim].max_rel > 1e-1,
        "corruption went unnoticed: {}",
        corrupted.rows[victim].max_rel
    );
}

#[test]
fn report_renders_a_readable_table() {
    let mut model = build_model::<f64>(&tiny_config(), 14).unwrap();
    jitter_biases(&mut model, 0x14);
    let input = random_input(4, 4, 4);
    let report = gradcheck(&mut model, 2, &input, 1e-4).unwrap();
    let text = format!("{report}");
    assert!(text.contains("ieeb.conv1.weight"));
    assert!(text.contains("max relative error"));
    assert!(text.contains("pass"));
}
