use std::collections::BTreeMap;

use lesr_tensor::{
    add, conv2d_backward, conv2d_forward, pixel_shuffle, pixel_shuffle_backward, relu_backward,
    relu_forward, ConvParams, Scalar, Shape4, Tensor4,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Convention, ModelConfig};
use crate::store::{ParamStore, ParamView};
use crate::ModelError;

/// How much intermediate state a forward pass records.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceLevel {
    /// Only the activations the output depends on; cheapest.
    Output,
    /// Everything backward needs.
    Backward,
    /// Backward state plus per-layer conv outputs and pre-activations.
    Instrument,
}

/// Activation applied inside the trunk, the reconstruction fuse, and the
/// tail. `Identity` exists for gradient-checking the linear part in
/// isolation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    fn forward<T: Scalar>(self, x: &Tensor4<T>) -> Tensor4<T> {
        match self {
            Activation::Relu => relu_forward(x),
            Activation::Identity => x.clone(),
        }
    }

    fn backward<T: Scalar>(self, a: &Tensor4<T>, g: &Tensor4<T>) -> Result<Tensor4<T>, ModelError> {
        match self {
            Activation::Relu => Ok(relu_backward(a, g)?),
            Activation::Identity => Ok(g.clone()),
        }
    }
}

/// Trunk output: the first and last activations, plus optional recorded
/// state for backward and instrumentation.
pub struct IeebTrace<T> {
    o1: Tensor4<T>,
    o_final: Tensor4<T>,
    act: Activation,
    train: Option<IeebTrain<T>>,
    instr: Option<IeebInstr<T>>,
}

struct IeebTrain<T> {
    input: Tensor4<T>,
    acts: Vec<Tensor4<T>>,
}

struct IeebInstr<T> {
    conv_outs: Vec<Tensor4<T>>,
    preacts: Vec<Tensor4<T>>,
}

impl<T: Scalar> IeebTrace<T> {
    pub fn o1(&self) -> &Tensor4<T> {
        &self.o1
    }

    pub fn o_final(&self) -> &Tensor4<T> {
        &self.o_final
    }

    /// Raw conv output of every trunk layer, before accumulation and
    /// activation. Present at `TraceLevel::Instrument`.
    pub fn conv_outputs(&self) -> Option<&[Tensor4<T>]> {
        self.instr.as_ref().map(|i| i.conv_outs.as_slice())
    }

    /// Pre-activation of every trunk layer (conv output plus any
    /// accumulated sum). Present at `TraceLevel::Instrument`.
    pub fn preactivations(&self) -> Option<&[Tensor4<T>]> {
        self.instr.as_ref().map(|i| i.preacts.as_slice())
    }
}

pub(crate) struct BranchTrace<T> {
    /// Input to each head stage's conv, in stage order.
    stage_inputs: Vec<Tensor4<T>>,
}

pub(crate) struct RbTrace<T> {
    global: Option<BranchTrace<T>>,
    local: BranchTrace<T>,
    /// Post-fuse output; doubles as the activation mask.
    out: Tensor4<T>,
}

pub(crate) struct TailTrace<T> {
    /// Input to each tail conv: inputs[0] is the reconstruction output,
    /// inputs[i] the activation after conv i.
    inputs: Vec<Tensor4<T>>,
}

/// Recorded forward state consumed by [`ModelGraph::backward`].
pub struct ModelTrace<T> {
    pub(crate) scale: u32,
    pub(crate) ieeb: IeebTrace<T>,
    pub(crate) rb: RbTrace<T>,
    pub(crate) tail: TailTrace<T>,
}

impl<T: Scalar> ModelTrace<T> {
    pub fn ieeb(&self) -> &IeebTrace<T> {
        &self.ieeb
    }
}

struct HeadStage {
    layer: usize,
    shuffle: usize,
}

/// A built model: configuration, parameters, and the layer wiring for each
/// block.
pub struct ModelGraph<T> {
    config: ModelConfig,
    store: ParamStore<T>,
    trunk: Vec<usize>,
    heads: BTreeMap<u32, Vec<HeadStage>>,
    tail: Vec<usize>,
}

/// One conv execution in a single forward pass at a given scale, with the
/// resolution multiplier (relative to the LR input) at which it runs and how
/// many times it is applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerExec {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub spatial_mul: u32,
    pub applications: u32,
}

pub fn build_model<T: Scalar>(config: &ModelConfig, seed: u64) -> Result<ModelGraph<T>, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let c = config.channels;

    let mut trunk = Vec::with_capacity(config.ieeb_depth);
    for i in 1..=config.ieeb_depth {
        let k = if i % 2 == 1 || !config.variant.heterogeneous_trunk() {
            3
        } else {
            1
        };
        let c_in = if i == 1 { 3 } else { c };
        let params = init_conv(&mut rng, c, c_in, k);
        trunk.push(store.push(format!("ieeb.conv{i}"), params));
    }

    let mut heads = BTreeMap::new();
    for &scale in &config.scales {
        let stage_factors: &[usize] = match scale {
            2 => &[2],
            3 => &[3],
            4 => &[2, 2],
            _ => unreachable!("validated"),
        };
        let mut stages = Vec::new();
        let mut width = c;
        for (s, &r) in stage_factors.iter().enumerate() {
            let c_out = match config.convention {
                Convention::Standard => width * r * r,
                Convention::Compact => width,
            };
            let params = init_conv(&mut rng, c_out, width, 3);
            stages.push(HeadStage {
                layer: store.push(format!("rb.x{scale}.conv{}", s + 1), params),
                shuffle: r,
            });
            width = c_out / (r * r);
        }
        debug_assert_eq!(width, config.head_output_channels(scale));
        heads.insert(scale, stages);
    }

    let tail_in = config.head_output_channels(*config.scales.iter().next().unwrap());
    let mut tail = Vec::new();
    if config.variant.dual_branch() {
        for i in 1..=config.irb_depth {
            let c_in = if i == 1 { tail_in } else { c };
            let c_out = if i == config.irb_depth { 3 } else { c };
            let params = init_conv(&mut rng, c_out, c_in, 3);
            tail.push(store.push(format!("irb.conv{i}"), params));
        }
    } else {
        let params = init_conv(&mut rng, 3, tail_in, 3);
        tail.push(store.push("irb.conv1".into(), params));
    }

    Ok(ModelGraph {
        config: config.clone(),
        store,
        trunk,
        heads,
        tail,
    })
}

/// Uniform init on +-sqrt(6 / fan_in) with fan_in = c_in * k^2; zero biases.
fn init_conv<T: Scalar>(rng: &mut ChaCha8Rng, c_out: usize, c_in: usize, k: usize) -> ConvParams<T> {
    let bound = (6.0 / (c_in * k * k) as f64).sqrt();
    let data: Vec<T> = (0..c_out * c_in * k * k)
        .map(|_| T::from_f64(rng.random_range(-bound..bound)))
        .collect();
    let weight = Tensor4::from_vec(Shape4::new(c_out, c_in, k, k), data).expect("init shape");
    ConvParams::new(weight, vec![T::zero(); c_out]).expect("init params")
}

impl<T> std::fmt::Debug for ModelGraph<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelGraph")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ModelGraph<T> {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn visit_params(&self, f: impl FnMut(ParamView<'_, T>)) {
        self.store.visit_params(f)
    }

    fn conv(&self, idx: usize) -> &ConvParams<T> {
        self.store.layer(idx).params()
    }

    /// Runs the trunk. Odd layers of the accumulating variants add the conv
    /// outputs of all preceding odd layers before the activation.
    pub fn ieeb_forward(&self, x: &Tensor4<T>, level: TraceLevel) -> Result<IeebTrace<T>, ModelError> {
        self.ieeb_forward_with(x, level, Activation::Relu)
    }

    pub fn ieeb_forward_with(
        &self,
        x: &Tensor4<T>,
        level: TraceLevel,
        act: Activation,
    ) -> Result<IeebTrace<T>, ModelError> {
        if x.shape().c != 3 {
            return Err(ModelError::InputChannels { got: x.shape().c });
        }
        let accumulate = self.config.variant.accumulates();
        let keep_all = level != TraceLevel::Output;
        let instrument = level == TraceLevel::Instrument;

        let mut acts: Vec<Tensor4<T>> = Vec::new();
        let mut conv_outs: Vec<Tensor4<T>> = Vec::new();
        let mut preacts: Vec<Tensor4<T>> = Vec::new();
        let mut odd_sum: Option<Tensor4<T>> = None;
        let mut o1: Option<Tensor4<T>> = None;
        let mut prev: Option<Tensor4<T>> = None;

        for (pos, &layer) in self.trunk.iter().enumerate() {
            let i = pos + 1;
            let input = if i == 1 { x } else { prev.as_ref().unwrap() };
            let oc = conv2d_forward(input, self.conv(layer))?;
            let odd = i % 2 == 1;
            let z = if accumulate && odd {
                match &odd_sum {
                    None => oc.clone(),
                    Some(s) => add(&oc, s)?,
                }
            } else {
                oc.clone()
            };
            if accumulate && odd {
                odd_sum = Some(match odd_sum.take() {
                    None => oc.clone(),
                    Some(s) => add(&s, &oc)?,
                });
            }
            if instrument {
                conv_outs.push(oc.clone());
                preacts.push(z.clone());
            }
            drop(oc);
            let a = act.forward(&z);
            if i == 1 {
                o1 = Some(a.clone());
            }
            if keep_all {
                acts.push(a.clone());
            }
            prev = Some(a);
        }

        let o_final = prev.unwrap();
        Ok(IeebTrace {
            o1: o1.unwrap(),
            o_final,
            act,
            train: keep_all.then(|| IeebTrain {
                input: x.clone(),
                acts,
            }),
            instr: instrument.then(|| IeebInstr { conv_outs, preacts }),
        })
    }

    fn head_stages(&self, scale: u32) -> Result<&[HeadStage], ModelError> {
        self.heads
            .get(&scale)
            .map(|s| s.as_slice())
            .ok_or(ModelError::MissingHead { scale })
    }

    fn run_branch(&self, stages: &[HeadStage], input: &Tensor4<T>) -> Result<(Tensor4<T>, BranchTrace<T>), ModelError> {
        let mut cur = input.clone();
        let mut stage_inputs = Vec::with_capacity(stages.len());
        for stage in stages {
            let conv_out = conv2d_forward(&cur, self.conv(stage.layer))?;
            let shuffled = pixel_shuffle(&conv_out, stage.shuffle)?;
            stage_inputs.push(cur);
            cur = shuffled;
        }
        Ok((cur, BranchTrace { stage_inputs }))
    }

    /// Sub-pixel reconstruction at `scale`. The full variants apply one
    /// shared head to both the first and last trunk activations and fuse by
    /// addition and activation; hn/sn upsample the last activation only.
    pub fn rb_forward(&self, trace: &IeebTrace<T>, scale: u32) -> Result<Tensor4<T>, ModelError> {
        Ok(self.rb_forward_traced(trace, scale)?.0)
    }

    fn rb_forward_traced(&self, trace: &IeebTrace<T>, scale: u32) -> Result<(Tensor4<T>, RbTrace<T>), ModelError> {
        let stages = self.head_stages(scale)?;
        let (s_local, t_local) = self.run_branch(stages, &trace.o_final)?;
        if self.config.variant.dual_branch() {
            let (s_global, t_global) = self.run_branch(stages, &trace.o1)?;
            let fused = add(&s_global, &s_local)?;
            let out = trace.act.forward(&fused);
            Ok((
                out.clone(),
                RbTrace {
                    global: Some(t_global),
                    local: t_local,
                    out,
                },
            ))
        } else {
            Ok((
                s_local.clone(),
                RbTrace {
                    global: None,
                    local: t_local,
                    out: s_local,
                },
            ))
        }
    }

    /// Refinement tail: conv+activation stages and a final conv to 3
    /// channels with no activation.
    pub fn irb_forward(&self, o_rb: &Tensor4<T>) -> Result<Tensor4<T>, ModelError> {
        Ok(self.irb_forward_traced(o_rb, Activation::Relu)?.0)
    }

    fn irb_forward_traced(
        &self,
        o_rb: &Tensor4<T>,
        act: Activation,
    ) -> Result<(Tensor4<T>, TailTrace<T>), ModelError> {
        let mut inputs = Vec::with_capacity(self.tail.len());
        let mut cur = o_rb.clone();
        let last = self.tail.len() - 1;
        for (i, &layer) in self.tail.iter().enumerate() {
            let conv_out = conv2d_forward(&cur, self.conv(layer))?;
            inputs.push(cur);
            cur = if i == last { conv_out } else { act.forward(&conv_out) };
        }
        Ok((cur, TailTrace { inputs }))
    }

    /// End-to-end forward; output shape is (n, 3, scale*h, scale*w).
    pub fn forward(&self, x: &Tensor4<T>, scale: u32) -> Result<Tensor4<T>, ModelError> {
        let trace = self.ieeb_forward(x, TraceLevel::Output)?;
        let o_rb = self.rb_forward(&trace, scale)?;
        self.irb_forward(&o_rb)
    }

    /// Forward recording everything [`Self::backward`] needs.
    pub fn forward_traced(
        &self,
        x: &Tensor4<T>,
        scale: u32,
        level: TraceLevel,
    ) -> Result<(Tensor4<T>, ModelTrace<T>), ModelError> {
        self.forward_traced_with(x, scale, level, Activation::Relu)
    }

    pub fn forward_traced_with(
        &self,
        x: &Tensor4<T>,
        scale: u32,
        level: TraceLevel,
        act: Activation,
    ) -> Result<(Tensor4<T>, ModelTrace<T>), ModelError> {
        let level = if level == TraceLevel::Output {
            TraceLevel::Backward
        } else {
            level
        };
        let ieeb = self.ieeb_forward_with(x, level, act)?;
        let (o_rb, rb) = self.rb_forward_traced(&ieeb, scale)?;
        let (out, tail) = self.irb_forward_traced(&o_rb, act)?;
        Ok((
            out,
            ModelTrace {
                scale,
                ieeb,
                rb,
                tail,
            },
        ))
    }

    /// Accumulates gradients for every parameter from `grad_out`, the
    /// cotangent of the traced forward output. Gradient buffers are zeroed
    /// first; afterwards the store reports gradients ready.
    pub fn backward(&mut self, trace: &ModelTrace<T>, grad_out: &Tensor4<T>) -> Result<(), ModelError> {
        let act = trace.ieeb.act;
        self.store.zero_grads();

        // Tail, last conv first; activations sit between the convs.
        let mut g = grad_out.clone();
        let last = self.tail.len() - 1;
        let tail_layers = self.tail.clone();
        for (i, &layer) in tail_layers.iter().enumerate().rev() {
            let g_conv = if i == last {
                g
            } else {
                act.backward(&trace.tail.inputs[i + 1], &g)?
            };
            let grads = conv2d_backward(&trace.tail.inputs[i], self.conv(layer), &g_conv)?;
            self.store.layer_mut(layer).accumulate_grads(&grads.weight, &grads.bias);
            g = grads.x;
        }

        // Reconstruction block.
        let stages: Vec<(usize, usize)> = self
            .head_stages(trace.scale)?
            .iter()
            .map(|s| (s.layer, s.shuffle))
            .collect();
        let (d_global, d_local) = if self.config.variant.dual_branch() {
            let dz = act.backward(&trace.rb.out, &g)?;
            let global = trace.rb.global.as_ref().expect("dual-branch trace");
            let dg = self.head_branch_backward(&stages, global, &dz)?;
            let dl = self.head_branch_backward(&stages, &trace.rb.local, &dz)?;
            (Some(dg), dl)
        } else {
            (None, self.head_branch_backward(&stages, &trace.rb.local, &g)?)
        };

        // Trunk, last layer first. For accumulating variants each odd
        // layer's conv output also feeds every later odd pre-activation, so
        // its cotangent picks up the running sum of later odd cotangents.
        let train = trace.ieeb.train.as_ref().expect("backward needs a traced forward");
        let accumulate = self.config.variant.accumulates();
        let mut g = d_local;
        let mut odd_dz_sum: Option<Tensor4<T>> = None;
        let trunk_layers = self.trunk.clone();
        for (pos, &layer) in trunk_layers.iter().enumerate().rev() {
            let i = pos + 1;
            if i == 1 {
                if let Some(dg) = &d_global {
                    g = add(&g, dg)?;
                }
            }
            let dz = act.backward(&train.acts[pos], &g)?;
            let d_conv = if accumulate && i % 2 == 1 {
                let d = match &odd_dz_sum {
                    None => dz.clone(),
                    Some(s) => add(&dz, s)?,
                };
                odd_dz_sum = Some(match odd_dz_sum.take() {
                    None => dz,
                    Some(s) => add(&s, &dz)?,
                });
                d
            } else {
                dz
            };
            let input = if i == 1 { &train.input } else { &train.acts[pos - 1] };
            let grads = conv2d_backward(input, self.conv(layer), &d_conv)?;
            self.store.layer_mut(layer).accumulate_grads(&grads.weight, &grads.bias);
            if i > 1 {
                g = grads.x;
            }
        }

        self.store.set_grads_ready(true);
        Ok(())
    }

    fn head_branch_backward(
        &mut self,
        stages: &[(usize, usize)],
        branch: &BranchTrace<T>,
        grad_out: &Tensor4<T>,
    ) -> Result<Tensor4<T>, ModelError> {
        let mut g = grad_out.clone();
        for (s, &(layer, r)) in stages.iter().enumerate().rev() {
            let d_conv = pixel_shuffle_backward(&g, r)?;
            let grads = conv2d_backward(&branch.stage_inputs[s], self.conv(layer), &d_conv)?;
            self.store.layer_mut(layer).accumulate_grads(&grads.weight, &grads.bias);
            g = grads.x;
        }
        Ok(g)
    }

    /// The conv executions of one forward pass at `scale`, in execution
    /// order. Used for operation counting.
    pub fn execution_plan(&self, scale: u32) -> Result<Vec<LayerExec>, ModelError> {
        let mut plan = Vec::new();
        let push = |plan: &mut Vec<LayerExec>, store: &ParamStore<T>, idx: usize, mul: u32, apps: u32| {
            let layer = store.layer(idx);
            let p = layer.params();
            plan.push(LayerExec {
                name: layer.name().to_string(),
                c_in: p.c_in(),
                c_out: p.c_out(),
                k: p.kernel(),
                spatial_mul: mul,
                applications: apps,
            });
        };
        for &idx in &self.trunk {
            push(&mut plan, &self.store, idx, 1, 1);
        }
        let apps = if self.config.variant.dual_branch() { 2 } else { 1 };
        let mut mul = 1;
        let stages: Vec<(usize, usize)> = self
            .head_stages(scale)?
            .iter()
            .map(|s| (s.layer, s.shuffle))
            .collect();
        for (layer, r) in stages {
            push(&mut plan, &self.store, layer, mul, apps);
            mul *= r as u32;
        }
        for &idx in &self.tail {
            push(&mut plan, &self.store, idx, scale, 1);
        }
        Ok(plan)
    }
}

/// Free-function aliases for the block contracts.
pub fn model_forward<T: Scalar>(g: &ModelGraph<T>, x: &Tensor4<T>, scale: u32) -> Result<Tensor4<T>, ModelError> {
    g.forward(x, scale)
}

pub fn ieeb_forward<T: Scalar>(g: &ModelGraph<T>, x: &Tensor4<T>) -> Result<IeebTrace<T>, ModelError> {
    g.ieeb_forward(x, TraceLevel::Output)
}

pub fn rb_forward<T: Scalar>(g: &ModelGraph<T>, t: &IeebTrace<T>, scale: u32) -> Result<Tensor4<T>, ModelError> {
    g.rb_forward(t, scale)
}

pub fn irb_forward<T: Scalar>(g: &ModelGraph<T>, o_rb: &Tensor4<T>) -> Result<Tensor4<T>, ModelError> {
    g.irb_forward(o_rb)
}
