//! Reverse-mode tape. Operations append nodes in execution order, so every
//! node's parents sit at smaller indices and one reverse sweep propagates
//! gradients visiting each node exactly once. A tape lives for a single
//! forward/backward pass and is dropped (or cleared) before the next
//! optimization step.

use super::conv::{self, ConvGeom, DeconvGeom};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv2d {
        input: NodeId,
        kernels: NodeId,
        bias: Option<NodeId>,
        geom: ConvGeom,
    },
    Deconv2d {
        input: NodeId,
        kernels: NodeId,
        bias: Option<NodeId>,
        geom: DeconvGeom,
    },
    Dense {
        input: NodeId,
        weights: NodeId,
        bias: Option<NodeId>,
    },
    Relu {
        input: NodeId,
    },
    Softmax {
        input: NodeId,
    },
    Hadamard {
        a: NodeId,
        b: NodeId,
    },
    ConcatChannels {
        inputs: Vec<NodeId>,
    },
    Reshape {
        input: NodeId,
    },
    StopGradient {
        input: NodeId,
    },
    Clip {
        input: NodeId,
        lo: f64,
        hi: f64,
    },
    SumAll {
        input: NodeId,
    },
    SumSquaredDiff {
        pred: NodeId,
        target: NodeId,
    },
    CrossEntropyStable {
        probs: NodeId,
        target: NodeId,
        threshold: f64,
    },
    AddScalars {
        inputs: Vec<NodeId>,
    },
    Scale {
        input: NodeId,
        factor: f64,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Ordered record of operations for one forward/backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drop all recorded nodes, keeping the allocation.
    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    /// Record an input that does not need gradients.
    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf, false)
    }

    /// Record a differentiable input (parameter).
    pub fn var(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf, true)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last `backward` call w.r.t. this node, if any flowed.
    pub fn grad(&self, id: NodeId) -> Option<&[f64]> {
        self.nodes[id.0].value.grad()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn any_requires(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    // ── ops ──────────────────────────────────────────────────────────

    /// Valid cross-correlation of `input [C_in,H,W]` with
    /// `kernels [C_out,C_in,kH,kW]` at the given stride.
    pub fn conv2d(
        &mut self,
        input: NodeId,
        kernels: NodeId,
        bias: Option<NodeId>,
        stride: usize,
    ) -> Result<NodeId> {
        let ish = self.value(input).shape().to_vec();
        let ksh = self.value(kernels).shape().to_vec();
        if ish.len() != 3 {
            return Err(Error::shape("conv2d", format!("input must be [C,H,W], got {ish:?}")));
        }
        if ksh.len() != 4 {
            return Err(Error::shape(
                "conv2d",
                format!("kernels must be [C_out,C_in,kH,kW], got {ksh:?}"),
            ));
        }
        if ish[0] != ksh[1] {
            return Err(Error::shape(
                "conv2d",
                format!("channel axis: input has {} channels, kernels expect {}", ish[0], ksh[1]),
            ));
        }
        if stride == 0 {
            return Err(Error::InvalidConfig("conv2d stride must be >= 1".into()));
        }
        if ish[1] < ksh[2] || ish[2] < ksh[3] {
            return Err(Error::shape(
                "conv2d",
                format!("spatial axes: input {}x{} smaller than kernel {}x{}", ish[1], ish[2], ksh[2], ksh[3]),
            ));
        }
        let geom = ConvGeom {
            channels_in: ish[0],
            channels_out: ksh[0],
            h_in: ish[1],
            w_in: ish[2],
            kh: ksh[2],
            kw: ksh[3],
            stride,
        };
        if let Some(b) = bias {
            let bl = self.value(b).len();
            if bl != geom.channels_out {
                return Err(Error::shape(
                    "conv2d",
                    format!("bias axis: {} entries for {} output channels", bl, geom.channels_out),
                ));
            }
        }
        let out = conv::conv2d_forward(
            self.value(input).values(),
            self.value(kernels).values(),
            bias.map(|b| self.value(b).values()),
            &geom,
        );
        let shape = [geom.channels_out, geom.out_h(), geom.out_w()];
        let value = Tensor::from_values(&shape, out)?;
        let mut parents = vec![input, kernels];
        parents.extend(bias);
        let rg = self.any_requires(&parents);
        Ok(self.push(value, Op::Conv2d { input, kernels, bias, geom }, rg))
    }

    /// Transposed convolution of `input [C_in,H,W]` with
    /// `kernels [C_in,C_out,kH,kW]`; the adjoint of [`Tape::conv2d`]
    /// for the same kernel tensor and stride.
    pub fn deconv2d(
        &mut self,
        input: NodeId,
        kernels: NodeId,
        bias: Option<NodeId>,
        stride: usize,
    ) -> Result<NodeId> {
        let ish = self.value(input).shape().to_vec();
        let ksh = self.value(kernels).shape().to_vec();
        if ish.len() != 3 {
            return Err(Error::shape("deconv2d", format!("input must be [C,H,W], got {ish:?}")));
        }
        if ksh.len() != 4 {
            return Err(Error::shape(
                "deconv2d",
                format!("kernels must be [C_in,C_out,kH,kW], got {ksh:?}"),
            ));
        }
        if ish[0] != ksh[0] {
            return Err(Error::shape(
                "deconv2d",
                format!("channel axis: input has {} channels, kernels expect {}", ish[0], ksh[0]),
            ));
        }
        if stride == 0 {
            return Err(Error::InvalidConfig("deconv2d stride must be >= 1".into()));
        }
        let geom = DeconvGeom {
            channels_in: ish[0],
            channels_out: ksh[1],
            h_in: ish[1],
            w_in: ish[2],
            kh: ksh[2],
            kw: ksh[3],
            stride,
        };
        if let Some(b) = bias {
            let bl = self.value(b).len();
            if bl != geom.channels_out {
                return Err(Error::shape(
                    "deconv2d",
                    format!("bias axis: {} entries for {} output channels", bl, geom.channels_out),
                ));
            }
        }
        let out = conv::deconv2d_forward(
            self.value(input).values(),
            self.value(kernels).values(),
            bias.map(|b| self.value(b).values()),
            &geom,
        );
        let shape = [geom.channels_out, geom.out_h(), geom.out_w()];
        let value = Tensor::from_values(&shape, out)?;
        let mut parents = vec![input, kernels];
        parents.extend(bias);
        let rg = self.any_requires(&parents);
        Ok(self.push(value, Op::Deconv2d { input, kernels, bias, geom }, rg))
    }

    /// Affine map `weights [m,n] * input [n] (+ bias [m])`. Bias is omitted
    /// only for the two multiplicative-interaction projections.
    pub fn dense(&mut self, input: NodeId, weights: NodeId, bias: Option<NodeId>) -> Result<NodeId> {
        let n_in = self.value(input).len();
        let wsh = self.value(weights).shape().to_vec();
        if wsh.len() != 2 {
            return Err(Error::shape("dense", format!("weights must be [m,n], got {wsh:?}")));
        }
        let (m, n) = (wsh[0], wsh[1]);
        if n != n_in {
            return Err(Error::shape(
                "dense",
                format!("input axis: weights expect {n} inputs, got {n_in}"),
            ));
        }
        if let Some(b) = bias {
            if self.value(b).len() != m {
                return Err(Error::shape(
                    "dense",
                    format!("bias axis: {} entries for {} outputs", self.value(b).len(), m),
                ));
            }
        }
        let mut out = conv::matmul(self.value(weights).values(), self.value(input).values(), m, n, 1);
        if let Some(b) = bias {
            for (o, bv) in out.iter_mut().zip(self.value(b).values()) {
                *o += bv;
            }
        }
        let value = Tensor::from_values(&[m], out)?;
        let mut parents = vec![input, weights];
        parents.extend(bias);
        let rg = self.any_requires(&parents);
        Ok(self.push(value, Op::Dense { input, weights, bias }, rg))
    }

    /// Elementwise `max(0, x)`; subgradient at 0 is 0.
    pub fn relu(&mut self, input: NodeId) -> NodeId {
        let src = self.value(input);
        let values = src.values().iter().map(|&v| v.max(0.0)).collect();
        let value = Tensor::from_values(&src.shape().to_vec(), values).unwrap();
        let rg = self.nodes[input.0].requires_grad;
        self.push(value, Op::Relu { input }, rg)
    }

    /// Numerically stable softmax over a vector of length >= 2.
    pub fn softmax(&mut self, input: NodeId) -> Result<NodeId> {
        let src = self.value(input);
        if src.len() < 2 {
            return Err(Error::shape("softmax", "input must have at least 2 entries"));
        }
        let max = src.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = src.values().iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let values = exps.iter().map(|e| e / sum).collect();
        let value = Tensor::from_values(&src.shape().to_vec(), values)?;
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push(value, Op::Softmax { input }, rg))
    }

    /// Elementwise product of two equal-shaped tensors.
    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::shape(
                "hadamard",
                format!("operand shapes {:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            ));
        }
        let values = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor::from_values(&self.value(a).shape().to_vec(), values)?;
        let rg = self.any_requires(&[a, b]);
        Ok(self.push(value, Op::Hadamard { a, b }, rg))
    }

    /// Stack tensors along the channel axis. Inputs are `[H,W]` or `[C,H,W]`
    /// with matching spatial dims; used to assemble the frame history.
    pub fn concat_channels(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        if inputs.is_empty() {
            return Err(Error::shape("concat_channels", "no inputs"));
        }
        let spatial = |sh: &[usize]| -> Result<(usize, usize, usize)> {
            match sh.len() {
                2 => Ok((1, sh[0], sh[1])),
                3 => Ok((sh[0], sh[1], sh[2])),
                _ => Err(Error::shape(
                    "concat_channels",
                    format!("inputs must be [H,W] or [C,H,W], got {sh:?}"),
                )),
            }
        };
        let (_, h0, w0) = spatial(self.value(inputs[0]).shape())?;
        let mut channels = 0;
        let mut values = Vec::new();
        for &id in inputs {
            let (c, h, w) = spatial(self.value(id).shape())?;
            if (h, w) != (h0, w0) {
                return Err(Error::shape(
                    "concat_channels",
                    format!("spatial axes differ: {h}x{w} vs {h0}x{w0}"),
                ));
            }
            channels += c;
            values.extend_from_slice(self.value(id).values());
        }
        let value = Tensor::from_values(&[channels, h0, w0], values)?;
        let rg = self.any_requires(inputs);
        Ok(self.push(value, Op::ConcatChannels { inputs: inputs.to_vec() }, rg))
    }

    /// View the input under a new shape with the same element count.
    pub fn reshape(&mut self, input: NodeId, shape: &[usize]) -> Result<NodeId> {
        let value = self.value(input).clone().reshaped(shape)?;
        let rg = self.nodes[input.0].requires_grad;
        Ok(self.push(value, Op::Reshape { input }, rg))
    }

    /// Identity in the forward pass; blocks gradient flow in the backward pass.
    pub fn stop_gradient(&mut self, input: NodeId) -> NodeId {
        let value = self.value(input).clone();
        self.push(value, Op::StopGradient { input }, false)
    }

    /// Elementwise clamp. Gradient passes through strictly inside the range
    /// and is 0 outside (and at the saturated boundary).
    pub fn clip(&mut self, input: NodeId, lo: f64, hi: f64) -> NodeId {
        let src = self.value(input);
        let values = src.values().iter().map(|&v| v.clamp(lo, hi)).collect();
        let value = Tensor::from_values(&src.shape().to_vec(), values).unwrap();
        let rg = self.nodes[input.0].requires_grad;
        self.push(value, Op::Clip { input, lo, hi }, rg)
    }

    /// Sum of all entries, as a scalar node.
    pub fn sum_all(&mut self, input: NodeId) -> NodeId {
        let s: f64 = self.value(input).values().iter().sum();
        let rg = self.nodes[input.0].requires_grad;
        self.push(Tensor::scalar(s), Op::SumAll { input }, rg)
    }

    /// `sum((pred - target)^2)` as a scalar node.
    pub fn sum_squared_diff(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        if self.value(pred).len() != self.value(target).len() {
            return Err(Error::shape(
                "sum_squared_diff",
                format!("{} vs {} elements", self.value(pred).len(), self.value(target).len()),
            ));
        }
        let s: f64 = self
            .value(pred)
            .values()
            .iter()
            .zip(self.value(target).values())
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        let rg = self.any_requires(&[pred, target]);
        Ok(self.push(Tensor::scalar(s), Op::SumSquaredDiff { pred, target }, rg))
    }

    /// Cross entropy `-sum_l target[l] * f(probs[l])` where `f(p) = ln p`
    /// for `p >= threshold` and the first-order Taylor expansion
    /// `ln threshold + (p - threshold)/threshold` below it, which bounds the
    /// gradient magnitude by `1/threshold`.
    pub fn cross_entropy_stable(
        &mut self,
        probs: NodeId,
        target: NodeId,
        threshold: f64,
    ) -> Result<NodeId> {
        if self.value(probs).len() != self.value(target).len() {
            return Err(Error::shape(
                "cross_entropy_stable",
                format!("{} vs {} classes", self.value(probs).len(), self.value(target).len()),
            ));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidConfig("taylor threshold must lie in (0,1)".into()));
        }
        let s: f64 = self
            .value(probs)
            .values()
            .iter()
            .zip(self.value(target).values())
            .map(|(&p, &t)| -t * stable_log(p, threshold))
            .sum();
        let rg = self.any_requires(&[probs, target]);
        Ok(self.push(Tensor::scalar(s), Op::CrossEntropyStable { probs, target, threshold }, rg))
    }

    /// Sum of scalar nodes.
    pub fn add_scalars(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        let mut s = 0.0;
        for &id in inputs {
            if self.value(id).len() != 1 {
                return Err(Error::shape("add_scalars", "all inputs must be scalars"));
            }
            s += self.value(id).values()[0];
        }
        let rg = self.any_requires(inputs);
        Ok(self.push(Tensor::scalar(s), Op::AddScalars { inputs: inputs.to_vec() }, rg))
    }

    /// Multiply every entry by a constant factor.
    pub fn scale(&mut self, input: NodeId, factor: f64) -> NodeId {
        let src = self.value(input);
        let values = src.values().iter().map(|&v| v * factor).collect();
        let value = Tensor::from_values(&src.shape().to_vec(), values).unwrap();
        let rg = self.nodes[input.0].requires_grad;
        self.push(value, Op::Scale { input, factor }, rg)
    }

    // ── backward ─────────────────────────────────────────────────────

    /// Reverse sweep from a scalar node. Gradients accumulate into each
    /// contributing node's buffer and are readable via [`Tape::grad`].
    pub fn backward(&mut self, output: NodeId) -> Result<()> {
        if self.value(output).len() != 1 {
            return Err(Error::shape("backward", "output must be a scalar"));
        }
        self.nodes[output.0].value.grad_mut()[0] = 1.0;
        for i in (0..=output.0).rev() {
            if self.nodes[i].value.grad().is_none() || !self.nodes[i].requires_grad {
                continue;
            }
            let (parents, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            let d_out = node.value.grad().unwrap();
            match &node.op {
                Op::Leaf => {}
                Op::Conv2d { input, kernels, bias, geom } => {
                    let bias = *bias;
                    let x = parents[input.0].value.values().to_vec();
                    let k = parents[kernels.0].value.values().to_vec();
                    let mut dx = want(parents, *input).then(|| vec![0.0; x.len()]);
                    let mut dk = want(parents, *kernels).then(|| vec![0.0; k.len()]);
                    let mut db = bias
                        .filter(|b| want(parents, *b))
                        .map(|b| vec![0.0; parents[b.0].value.len()]);
                    conv::conv2d_backward(
                        &x,
                        &k,
                        d_out,
                        geom,
                        dx.as_deref_mut(),
                        dk.as_deref_mut(),
                        db.as_deref_mut(),
                    );
                    if let Some(dx) = dx {
                        acc(parents, *input, &dx);
                    }
                    if let Some(dk) = dk {
                        acc(parents, *kernels, &dk);
                    }
                    if let (Some(b), Some(db)) = (bias, db) {
                        acc(parents, b, &db);
                    }
                }
                Op::Deconv2d { input, kernels, bias, geom } => {
                    let bias = *bias;
                    let x = parents[input.0].value.values().to_vec();
                    let k = parents[kernels.0].value.values().to_vec();
                    let mut dx = want(parents, *input).then(|| vec![0.0; x.len()]);
                    let mut dk = want(parents, *kernels).then(|| vec![0.0; k.len()]);
                    let mut db = bias
                        .filter(|b| want(parents, *b))
                        .map(|b| vec![0.0; parents[b.0].value.len()]);
                    conv::deconv2d_backward(
                        &x,
                        &k,
                        d_out,
                        geom,
                        dx.as_deref_mut(),
                        dk.as_deref_mut(),
                        db.as_deref_mut(),
                    );
                    if let Some(dx) = dx {
                        acc(parents, *input, &dx);
                    }
                    if let Some(dk) = dk {
                        acc(parents, *kernels, &dk);
                    }
                    if let (Some(b), Some(db)) = (bias, db) {
                        acc(parents, b, &db);
                    }
                }
                Op::Dense { input, weights, bias } => {
                    let x = parents[input.0].value.values().to_vec();
                    let w = parents[weights.0].value.values().to_vec();
                    let (m, n) = (d_out.len(), x.len());
                    if want(parents, *input) {
                        // dx = W^T * dy
                        let wt = conv::transpose(&w, m, n);
                        let dx = conv::matmul(&wt, d_out, n, m, 1);
                        acc(parents, *input, &dx);
                    }
                    if want(parents, *weights) {
                        // dW = dy (x) x  (outer product)
                        let mut dw = vec![0.0; m * n];
                        for r in 0..m {
                            let dr = d_out[r];
                            if dr != 0.0 {
                                for c in 0..n {
                                    dw[r * n + c] = dr * x[c];
                                }
                            }
                        }
                        acc(parents, *weights, &dw);
                    }
                    if let Some(b) = bias {
                        if want(parents, *b) {
                            acc(parents, *b, d_out);
                        }
                    }
                }
                Op::Relu { input } => {
                    if want(parents, *input) {
                        let x = parents[input.0].value.values();
                        let dx: Vec<f64> = x
                            .iter()
                            .zip(d_out)
                            .map(|(&xv, &d)| if xv > 0.0 { d } else { 0.0 })
                            .collect();
                        acc(parents, *input, &dx);
                    }
                }
                Op::Softmax { input } => {
                    if want(parents, *input) {
                        let y = node.value.values();
                        let dot: f64 = y.iter().zip(d_out).map(|(a, b)| a * b).sum();
                        let dx: Vec<f64> = y.iter().zip(d_out).map(|(&yv, &d)| yv * (d - dot)).collect();
                        acc(parents, *input, &dx);
                    }
                }
                Op::Hadamard { a, b } => {
                    let av = parents[a.0].value.values().to_vec();
                    let bv = parents[b.0].value.values().to_vec();
                    if want(parents, *a) {
                        let da: Vec<f64> = d_out.iter().zip(&bv).map(|(d, y)| d * y).collect();
                        acc(parents, *a, &da);
                    }
                    if want(parents, *b) {
                        let db: Vec<f64> = d_out.iter().zip(&av).map(|(d, x)| d * x).collect();
                        acc(parents, *b, &db);
                    }
                }
                Op::ConcatChannels { inputs } => {
                    let mut offset = 0;
                    let inputs = inputs.clone();
                    for id in inputs {
                        let len = parents[id.0].value.len();
                        if want(parents, id) {
                            let slice = d_out[offset..offset + len].to_vec();
                            acc(parents, id, &slice);
                        }
                        offset += len;
                    }
                }
                Op::Reshape { input } => {
                    if want(parents, *input) {
                        let d = d_out.to_vec();
                        acc(parents, *input, &d);
                    }
                }
                Op::StopGradient { .. } => {}
                Op::Clip { input, lo, hi } => {
                    if want(parents, *input) {
                        let x = parents[input.0].value.values();
                        let dx: Vec<f64> = x
                            .iter()
                            .zip(d_out)
                            .map(|(&xv, &d)| if xv > *lo && xv < *hi { d } else { 0.0 })
                            .collect();
                        acc(parents, *input, &dx);
                    }
                }
                Op::SumAll { input } => {
                    if want(parents, *input) {
                        let d = vec![d_out[0]; parents[input.0].value.len()];
                        acc(parents, *input, &d);
                    }
                }
                Op::SumSquaredDiff { pred, target } => {
                    let pv = parents[pred.0].value.values().to_vec();
                    let tv = parents[target.0].value.values().to_vec();
                    let d = d_out[0];
                    if want(parents, *pred) {
                        let dp: Vec<f64> = pv.iter().zip(&tv).map(|(p, t)| 2.0 * d * (p - t)).collect();
                        acc(parents, *pred, &dp);
                    }
                    if want(parents, *target) {
                        let dt: Vec<f64> = pv.iter().zip(&tv).map(|(p, t)| -2.0 * d * (p - t)).collect();
                        acc(parents, *target, &dt);
                    }
                }
                Op::CrossEntropyStable { probs, target, threshold } => {
                    let d = d_out[0];
                    let th = *threshold;
                    if want(parents, *probs) {
                        let pv = parents[probs.0].value.values().to_vec();
                        let tv = parents[target.0].value.values().to_vec();
                        let dp: Vec<f64> = pv
                            .iter()
                            .zip(&tv)
                            .map(|(&p, &t)| -d * t * stable_log_grad(p, th))
                            .collect();
                        acc(parents, *probs, &dp);
                    }
                }
                Op::AddScalars { inputs } => {
                    let d = [d_out[0]];
                    let inputs = inputs.clone();
                    for id in inputs {
                        if want(parents, id) {
                            acc(parents, id, &d);
                        }
                    }
                }
                Op::Scale { input, factor } => {
                    if want(parents, *input) {
                        let dx: Vec<f64> = d_out.iter().map(|d| d * factor).collect();
                        acc(parents, *input, &dx);
                    }
                }
            }
        }
        Ok(())
    }
}

fn want(nodes: &[Node], id: NodeId) -> bool {
    nodes[id.0].requires_grad
}

fn acc(nodes: &mut [Node], id: NodeId, delta: &[f64]) {
    let g = nodes[id.0].value.grad_mut();
    for (a, b) in g.iter_mut().zip(delta) {
        *a += b;
    }
}

/// `ln p` with the stabilized tail used by the reward loss.
pub fn stable_log(p: f64, threshold: f64) -> f64 {
    if p >= threshold {
        p.ln()
    } else {
        threshold.ln() + (p - threshold) / threshold
    }
}

/// Derivative of [`stable_log`] w.r.t. `p`; bounded by `1/threshold`.
pub fn stable_log_grad(p: f64, threshold: f64) -> f64 {
    if p >= threshold {
        1.0 / p
    } else {
        1.0 / threshold
    }
}
