use lesr_tensor::{ConvParams, Scalar, Tensor4};

/// One convolution layer plus its gradient buffers. Every parameter in the
/// model belongs to exactly one of these.
pub struct ConvLayer<T> {
    name: String,
    params: ConvParams<T>,
    grad_weight: Tensor4<T>,
    grad_bias: Vec<T>,
}

impl<T: Scalar> ConvLayer<T> {
    fn new(name: String, params: ConvParams<T>) -> Self {
        let ws = params.weight().shape();
        let grad_weight = Tensor4::zeros(ws.n, ws.c, ws.h, ws.w);
        let grad_bias = vec![T::zero(); params.bias().len()];
        ConvLayer {
            name,
            params,
            grad_weight,
            grad_bias,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &ConvParams<T> {
        &self.params
    }

    pub fn grad_weight(&self) -> &Tensor4<T> {
        &self.grad_weight
    }

    pub fn grad_bias(&self) -> &[T] {
        &self.grad_bias
    }

    pub(crate) fn accumulate_grads(&mut self, gw: &Tensor4<T>, gb: &[T]) {
        debug_assert_eq!(gw.shape(), self.grad_weight.shape());
        debug_assert_eq!(gb.len(), self.grad_bias.len());
        for (d, &s) in self.grad_weight.data_mut().iter_mut().zip(gw.data()) {
            *d += s;
        }
        for (d, &s) in self.grad_bias.iter_mut().zip(gb) {
            *d += s;
        }
    }

    pub(crate) fn zero_grads(&mut self) {
        for v in self.grad_weight.data_mut() {
            *v = T::zero();
        }
        for v in self.grad_bias.iter_mut() {
            *v = T::zero();
        }
    }

    /// Disjoint mutable/shared views for optimizer updates:
    /// (weight values, weight grad, bias values, bias grad).
    pub fn update_views(&mut self) -> (&mut [T], &[T], &mut [T], &[T]) {
        let ConvLayer {
            params,
            grad_weight,
            grad_bias,
            ..
        } = self;
        let (w, b) = params.values_mut();
        (w, grad_weight.data(), b, grad_bias)
    }
}

/// Identity, shape, and value of one named parameter tensor.
pub struct ParamView<'a, T> {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: &'a [T],
}

/// All model parameters in a deterministic registration order: trunk layers,
/// then heads by ascending scale, then the refinement tail; within a layer
/// the weight precedes the bias.
pub struct ParamStore<T> {
    layers: Vec<ConvLayer<T>>,
    grads_ready: bool,
}

impl<T: Scalar> ParamStore<T> {
    pub(crate) fn new() -> Self {
        ParamStore {
            layers: Vec::new(),
            grads_ready: false,
        }
    }

    pub(crate) fn push(&mut self, name: String, params: ConvParams<T>) -> usize {
        debug_assert!(self.layers.iter().all(|l| l.name != name));
        self.layers.push(ConvLayer::new(name, params));
        self.layers.len() - 1
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, idx: usize) -> &ConvLayer<T> {
        &self.layers[idx]
    }

    pub fn layer_mut(&mut self, idx: usize) -> &mut ConvLayer<T> {
        &mut self.layers[idx]
    }

    pub fn layer_by_name(&self, name: &str) -> Option<&ConvLayer<T>> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn layers(&self) -> impl Iterator<Item = &ConvLayer<T>> {
        self.layers.iter()
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut ConvLayer<T>> {
        self.layers.iter_mut()
    }

    /// Parameter tensors in registration order.
    pub fn visit_params(&self, mut f: impl FnMut(ParamView<'_, T>)) {
        for layer in &self.layers {
            let ws = layer.params.weight().shape();
            f(ParamView {
                name: format!("{}.weight", layer.name),
                dims: vec![ws.n, ws.c, ws.h, ws.w],
                values: layer.params.weight().data(),
            });
            f(ParamView {
                name: format!("{}.bias", layer.name),
                dims: vec![layer.params.bias().len()],
                values: layer.params.bias(),
            });
        }
    }

    /// Mutable parameter values in registration order.
    pub fn visit_params_mut(&mut self, mut f: impl FnMut(&str, &mut [T])) {
        for layer in &mut self.layers {
            let name = layer.name.clone();
            let (w, b) = layer.params.values_mut();
            f(&format!("{name}.weight"), w);
            f(&format!("{name}.bias"), b);
        }
    }

    /// Mutable gradient values in registration order. Callers that populate
    /// gradients directly must also flag readiness via
    /// [`ParamStore::set_grads_ready`].
    pub fn visit_grads_mut(&mut self, mut f: impl FnMut(&str, &mut [T])) {
        for layer in &mut self.layers {
            let name = layer.name.clone();
            f(&format!("{name}.weight"), layer.grad_weight.data_mut());
            f(&format!("{name}.bias"), &mut layer.grad_bias);
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.layers.len() * 2);
        self.visit_params(|p| names.push(p.name));
        names
    }

    /// Total number of scalar parameters.
    pub fn total_len(&self) -> usize {
        let mut n = 0;
        self.visit_params(|p| n += p.values.len());
        n
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
        self.grads_ready = false;
    }

    /// True once a backward pass has populated every gradient buffer since
    /// the last update or reset.
    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub fn set_grads_ready(&mut self, ready: bool) {
        self.grads_ready = ready;
    }
}
