use std::collections::BTreeSet;

use lesr_model::{build_model, Convention, ModelConfig, ModelError, Variant, SUPPORTED_SCALES};

fn full_multi() -> ModelConfig {
    ModelConfig::new(Variant::LesrcnnS, BTreeSet::from(SUPPORTED_SCALES))
}

#[test]
fn full_single_scale_model_has_23_conv_layers() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Lesrcnn, 2), 0).unwrap();
    assert_eq!(g.store().layer_count(), 23);
    let mut weights = 0;
    let mut biases = 0;
    g.visit_params(|p| {
        if p.name.ends_with(".weight") {
            assert_eq!(p.dims.len(), 4);
            weights += 1;
        } else {
            assert!(p.name.ends_with(".bias"));
            assert_eq!(p.dims.len(), 1);
            biases += 1;
        }
    });
    assert_eq!(weights, 23);
    assert_eq!(biases, 23);
}

#[test]
fn layer_names_follow_registration_order() {
    let g = build_model::<f32>(&full_multi(), 0).unwrap();
    let names: Vec<_> = g.store().layers().map(|l| l.name().to_string()).collect();
    let mut expect: Vec<String> = (1..=17).map(|i| format!("ieeb.conv{i}")).collect();
    expect.push("rb.x2.conv1".into());
    expect.push("rb.x3.conv1".into());
    expect.push("rb.x4.conv1".into());
    expect.push("rb.x4.conv2".into());
    expect.extend((1..=5).map(|i| format!("irb.conv{i}")));
    assert_eq!(names, expect);
}

#[test]
fn heterogeneous_trunk_mixes_kernel_sizes() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Hn, 2), 0).unwrap();
    let mut one = 0;
    let mut three = 0;
    for i in 1..=17 {
        let k = g
            .store()
            .layer_by_name(&format!("ieeb.conv{i}"))
            .unwrap()
            .params()
            .kernel();
        match k {
            1 => one += 1,
            3 => three += 1,
            other => panic!("unexpected kernel {other}"),
        }
        assert_eq!(k, if i % 2 == 1 { 3 } else { 1 }, "layer {i}");
    }
    assert_eq!(one, 8);
    assert_eq!(three, 9);
}

#[test]
fn plain_trunk_uses_3x3_throughout() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Sn, 2), 0).unwrap();
    for i in 1..=17 {
        let layer = g.store().layer_by_name(&format!("ieeb.conv{i}")).unwrap();
        assert_eq!(layer.params().kernel(), 3, "layer {i}");
    }
}

#[test]
fn first_trunk_layer_reads_rgb_and_the_rest_read_channels() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Lesrcnn, 3), 0).unwrap();
    for i in 1..=17 {
        let p = g.store().layer_by_name(&format!("ieeb.conv{i}")).unwrap().params();
        assert_eq!(p.c_in(), if i == 1 { 3 } else { 64 });
        assert_eq!(p.c_out(), 64);
    }
}

#[test]
fn standard_heads_expand_channels_by_stage_factor_squared() {
    let g = build_model::<f32>(&full_multi(), 0).unwrap();
    let check = |name: &str, c_in: usize, c_out: usize| {
        let p = g.store().layer_by_name(name).unwrap().params();
        assert_eq!((p.c_in(), p.c_out(), p.kernel()), (c_in, c_out, 3), "{name}");
    };
    check("rb.x2.conv1", 64, 256);
    check("rb.x3.conv1", 64, 576);
    check("rb.x4.conv1", 64, 256);
    check("rb.x4.conv2", 64, 256);
}

#[test]
fn compact_heads_keep_width_and_divide_after_shuffle() {
    let cfg = ModelConfig::single(Variant::Hn, 4)
        .with_channels(64)
        .with_convention(Convention::Compact);
    let g = build_model::<f32>(&cfg, 0).unwrap();
    let p1 = g.store().layer_by_name("rb.x4.conv1").unwrap().params();
    assert_eq!((p1.c_in(), p1.c_out()), (64, 64));
    let p2 = g.store().layer_by_name("rb.x4.conv2").unwrap().params();
    assert_eq!((p2.c_in(), p2.c_out()), (16, 16));
    let tail = g.store().layer_by_name("irb.conv1").unwrap().params();
    assert_eq!((tail.c_in(), tail.c_out()), (4, 3));
}

#[test]
fn single_branch_variants_have_one_tail_conv() {
    for v in [Variant::Hn, Variant::Sn] {
        let g = build_model::<f32>(&ModelConfig::single(v, 2), 0).unwrap();
        assert!(g.store().layer_by_name("irb.conv1").is_some());
        assert!(g.store().layer_by_name("irb.conv2").is_none());
        assert_eq!(g.store().layer_count(), 19);
    }
}

#[test]
fn tail_of_full_variants_ends_in_3_channels() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Lesrcnn, 2), 0).unwrap();
    for i in 1..=5 {
        let p = g.store().layer_by_name(&format!("irb.conv{i}")).unwrap().params();
        assert_eq!(p.c_in(), 64);
        assert_eq!(p.c_out(), if i == 5 { 3 } else { 64 });
        assert_eq!(p.kernel(), 3);
    }
}

#[test]
fn same_seed_reproduces_parameters_bitwise() {
    let cfg = full_multi();
    let a = build_model::<f32>(&cfg, 7).unwrap();
    let b = build_model::<f32>(&cfg, 7).unwrap();
    let mut va = Vec::new();
    a.visit_params(|p| va.extend(p.values.iter().map(|v| v.to_bits())));
    let mut vb = Vec::new();
    b.visit_params(|p| vb.extend(p.values.iter().map(|v| v.to_bits())));
    assert_eq!(va, vb);
}

#[test]
fn different_seeds_differ() {
    let cfg = ModelConfig::single(Variant::Lesrcnn, 2);
    let a = build_model::<f32>(&cfg, 1).unwrap();
    let b = build_model::<f32>(&cfg, 2).unwrap();
    let mut va = Vec::new();
    a.visit_params(|p| va.extend_from_slice(p.values));
    let mut vb = Vec::new();
    b.visit_params(|p| vb.extend_from_slice(p.values));
    assert_ne!(va, vb);
}

#[test]
fn initial_weights_respect_fan_in_bound_and_biases_are_zero() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Lesrcnn, 2), 3).unwrap();
    for layer in g.store().layers() {
        let p = layer.params();
        let bound = (6.0 / (p.c_in() * p.kernel() * p.kernel()) as f64).sqrt() as f32;
        for &w in p.weight().data() {
            assert!(w.abs() < bound, "{}: |{w}| >= {bound}", layer.name());
        }
        assert!(p.bias().iter().all(|&b| b == 0.0), "{}", layer.name());
    }
}

#[test]
fn even_trunk_depth_is_rejected() {
    let mut cfg = ModelConfig::single(Variant::Lesrcnn, 2);
    cfg.ieeb_depth = 16;
    assert!(matches!(
        build_model::<f32>(&cfg, 0),
        Err(ModelError::EvenDepth { depth: 16 })
    ));
}

#[test]
fn out_of_range_scale_is_rejected() {
    let cfg = ModelConfig::single(Variant::Lesrcnn, 5);
    assert!(matches!(
        build_model::<f32>(&cfg, 0),
        Err(ModelError::UnsupportedScale { scale: 5 })
    ));
}

#[test]
fn empty_scale_set_is_rejected() {
    let cfg = ModelConfig::new(Variant::Lesrcnn, BTreeSet::new());
    assert!(matches!(build_model::<f32>(&cfg, 0), Err(ModelError::Config(_))));
}

#[test]
fn compact_needs_channels_divisible_by_scale_squared() {
    let cfg = ModelConfig::single(Variant::Hn, 2)
        .with_channels(6)
        .with_convention(Convention::Compact);
    match build_model::<f32>(&cfg, 0) {
        Err(ModelError::CompactDivisibility {
            scale: 2,
            channels: 6,
            divisor: 4,
        }) => {}
        other => panic!("expected divisibility error, got {other:?}"),
    }

    let cfg = ModelConfig::single(Variant::Sn, 4)
        .with_channels(24)
        .with_convention(Convention::Compact);
    assert!(matches!(
        build_model::<f32>(&cfg, 0),
        Err(ModelError::CompactDivisibility { scale: 4, channels: 24, divisor: 16 })
    ));
}

#[test]
fn multi_scale_variant_rejects_compact_heads() {
    let cfg = full_multi().with_convention(Convention::Compact);
    assert!(matches!(build_model::<f32>(&cfg, 0), Err(ModelError::CompactMultiScale)));
}

#[test]
fn multi_scale_variant_requires_all_three_scales() {
    let cfg = ModelConfig::new(Variant::LesrcnnS, BTreeSet::from([2, 3]));
    assert!(matches!(build_model::<f32>(&cfg, 0), Err(ModelError::Config(_))));
}

#[test]
fn single_scale_variants_reject_multiple_scales() {
    for v in [Variant::Lesrcnn, Variant::Hn, Variant::Sn] {
        let cfg = ModelConfig::new(v, BTreeSet::from([2, 4]));
        assert!(matches!(build_model::<f32>(&cfg, 0), Err(ModelError::Config(_))), "{v:?}");
    }
}

#[test]
fn variant_and_convention_parse_from_cli_names() {
    assert_eq!("lesrcnn".parse::<Variant>().unwrap(), Variant::Lesrcnn);
    assert_eq!("lesrcnn-s".parse::<Variant>().unwrap(), Variant::LesrcnnS);
    assert_eq!("hn".parse::<Variant>().unwrap(), Variant::Hn);
    assert_eq!("sn".parse::<Variant>().unwrap(), Variant::Sn);
    assert!("resnet".parse::<Variant>().is_err());
    assert_eq!("standard".parse::<Convention>().unwrap(), Convention::Standard);
    assert_eq!("compact".parse::<Convention>().unwrap(), Convention::Compact);
    assert!("tiny".parse::<Convention>().is_err());
}

#[test]
fn execution_plan_lists_each_conv_with_resolution_and_applications() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Lesrcnn, 4), 0).unwrap();
    let plan = g.execution_plan(4).unwrap();
    assert_eq!(plan.len(), 24);
    for row in &plan[..17] {
        assert_eq!((row.spatial_mul, row.applications), (1, 1), "{}", row.name);
    }
    let s1 = &plan[17];
    assert_eq!((s1.name.as_str(), s1.spatial_mul, s1.applications), ("rb.x4.conv1", 1, 2));
    let s2 = &plan[18];
    assert_eq!((s2.name.as_str(), s2.spatial_mul, s2.applications), ("rb.x4.conv2", 2, 2));
    for (i, row) in plan[19..].iter().enumerate() {
        assert_eq!(row.name, format!("irb.conv{}", i + 1));
        assert_eq!((row.spatial_mul, row.applications), (4, 1));
    }
}

#[test]
fn execution_plan_of_single_branch_variant_applies_each_conv_once() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Sn, 3), 0).unwrap();
    let plan = g.execution_plan(3).unwrap();
    assert_eq!(plan.len(), 19);
    assert!(plan.iter().all(|r| r.applications == 1));
    assert_eq!(plan[17].name, "rb.x3.conv1");
    assert_eq!(plan[18].spatial_mul, 3);
}

#[test]
fn execution_plan_rejects_a_scale_without_a_head() {
    let g = build_model::<f32>(&ModelConfig::single(Variant::Lesrcnn, 2), 0).unwrap();
    assert!(matches!(g.execution_plan(3), Err(ModelError::MissingHead { scale: 3 })));
}
