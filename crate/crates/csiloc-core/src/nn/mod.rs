//! Hybrid position regressor: a two-branch network over the synthetic image
//! and the raw feature row, trained from scratch with plain backpropagation.
//!
//! Topology (one network per coordinate axis, scalar output in mm):
//!
//! ```text
//! image ──┬─ cnn_a: conv3x3 -> relu -> conv3x3 -> relu -> max pool ─ flatten ─┐
//!         └─ cnn_b: conv3x3 -> relu -> conv3x3 -> relu -> avg pool ─ flatten ─┤
//!                                                                             ├─ concat ─ dense ─ relu ─ dense(1)
//! features ─┬─ mlp_a: [dense -> batchnorm -> relu -> dropout] x2 ─────────────┤
//!           └─ mlp_b: [dense -> batchnorm -> relu -> dropout] x2 ─────────────┘
//! ```
//!
//! The two convolutional sub-branches share their shape but not their
//! weights and end in different poolings; the two feature sub-branches are
//! identically shaped dense stacks that only differ by initialisation.
//! Parameters live in one flat buffer described by [`HynnParams::segments`],
//! which keeps checkpointing, the optimiser and finite-difference probing
//! trivial.

mod layers;
pub mod train;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::PointMm;
use crate::image::{render, BlurSpec, FeatureLayout, ImageError, SyntheticImage};
use crate::rng::GaussSource;
use crate::table::FingerprintTable;
use layers::*;

pub use layers::BN_EPSILON;
pub use train::{train, EpochRecord, TrainConfig, TrainLog};

/// Errors from network construction, evaluation and training.
#[derive(Clone, Debug, PartialEq)]
pub enum NnError {
    BadArchitecture { what: &'static str },
    /// An input's size disagrees with the architecture.
    ShapeMismatch { what: &'static str, expected: usize, got: usize },
    /// A non-finite value appeared in the forward pass.
    NonFiniteActivation { stage: &'static str },
    /// A non-finite value appeared in the gradients.
    NonFiniteGradient,
    EmptyBatch,
    BadTrainConfig { what: &'static str },
    /// Training loss became non-finite.
    Diverged { epoch: usize },
}

impl core::fmt::Display for NnError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NnError::BadArchitecture { what } => write!(f, "bad architecture: {what}"),
            NnError::ShapeMismatch { what, expected, got } => {
                write!(f, "shape mismatch: {what} expected {expected}, got {got}")
            }
            NnError::NonFiniteActivation { stage } => {
                write!(f, "non-finite activation at {stage}")
            }
            NnError::NonFiniteGradient => write!(f, "non-finite gradient"),
            NnError::EmptyBatch => write!(f, "empty batch"),
            NnError::BadTrainConfig { what } => write!(f, "bad training configuration: {what}"),
            NnError::Diverged { epoch } => write!(f, "training diverged at epoch {epoch}"),
        }
    }
}

impl core::error::Error for NnError {}

/// Shape of the hybrid network. `conv_filters` are the output channels of
/// the two convolution layers in each image sub-branch; `mlp_widths` the
/// hidden sizes of each feature sub-branch; `merge_width` the hidden size of
/// the head that joins the four flattened sub-branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HynnArchitecture {
    pub image_side: usize,
    pub feature_dim: usize,
    pub conv_filters: [usize; 2],
    pub mlp_widths: [usize; 2],
    pub merge_width: usize,
    pub dropout: f64,
}

impl HynnArchitecture {
    /// Reference shape for 35x35 images: conv filters (8, 16), hidden
    /// widths (64, 32), merge width 32, light dropout.
    pub fn default_for(image_side: usize, feature_dim: usize) -> Self {
        Self {
            image_side,
            feature_dim,
            conv_filters: [8, 16],
            mlp_widths: [64, 32],
            merge_width: 32,
            dropout: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.image_side < 6 {
            return Err(NnError::BadArchitecture {
                what: "image side must be at least 6 (two 3x3 convolutions plus 2x2 pooling)",
            });
        }
        if self.feature_dim == 0 {
            return Err(NnError::BadArchitecture { what: "feature dimension must be positive" });
        }
        if self.conv_filters.iter().any(|&c| c == 0)
            || self.mlp_widths.iter().any(|&w| w == 0)
            || self.merge_width == 0
        {
            return Err(NnError::BadArchitecture { what: "layer widths must be positive" });
        }
        if !(0.0..1.0).contains(&self.dropout) || !self.dropout.is_finite() {
            return Err(NnError::BadArchitecture { what: "dropout must lie in [0, 1)" });
        }
        Ok(())
    }

    /// Side of the feature maps after the two convolutions.
    fn conv2_side(&self) -> usize {
        self.image_side - 4
    }

    /// Side after the final 2x2 pooling.
    fn pool_side(&self) -> usize {
        self.conv2_side() / 2
    }

    /// Flattened length of one image sub-branch.
    fn cnn_flat(&self) -> usize {
        self.conv_filters[1] * self.pool_side() * self.pool_side()
    }

    /// Width of the concatenated representation entering the merge head.
    pub fn concat_dim(&self) -> usize {
        2 * self.cnn_flat() + 2 * self.mlp_widths[1]
    }
}

/// What a parameter segment parameterises; used for init scaling and for
/// naming coverage in gradient checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamKind {
    ConvWeight,
    ConvBias,
    DenseWeight,
    DenseBias,
    BnGamma,
    BnBeta,
}

/// One named slice of the flat parameter buffer.
#[derive(Clone, Debug)]
pub struct Segment {
    pub name: &'static str,
    pub kind: ParamKind,
    pub offset: usize,
    pub len: usize,
    /// Fan-in of the layer the segment feeds (He-init scale for weights).
    pub fan_in: usize,
}

impl Segment {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Resolved buffer layout for one architecture.
struct Plan {
    segments: Vec<Segment>,
    total: usize,
    /// Running-statistics layout: (bn1 mean, bn1 var, bn2 mean, bn2 var) per
    /// feature sub-branch.
    run: [[Range<usize>; 4]; 2],
    run_total: usize,
}

/// Index of a segment within the canonical plan order. Keep in sync with
/// `Plan::new`.
#[derive(Clone, Copy)]
#[rustfmt::skip]
enum Seg {
    AConv1W, AConv1B, AConv2W, AConv2B,
    BConv1W, BConv1B, BConv2W, BConv2B,
    MaD1W, MaD1B, MaBn1G, MaBn1B, MaD2W, MaD2B, MaBn2G, MaBn2B,
    MbD1W, MbD1B, MbBn1G, MbBn1B, MbD2W, MbD2B, MbBn2G, MbBn2B,
    MergeW, MergeB, OutW, OutB,
}

impl Plan {
    #[rustfmt::skip]
    fn new(arch: &HynnArchitecture) -> Self {
        let [f1, f2] = arch.conv_filters;
        let [h1, h2] = arch.mlp_widths;
        let fd = arch.feature_dim;
        let mw = arch.merge_width;
        let concat = arch.concat_dim();

        let mut segments = Vec::with_capacity(28);
        let mut cursor = 0usize;
        let mut push = |name: &'static str, kind: ParamKind, len: usize, fan_in: usize| {
            segments.push(Segment { name, kind, offset: cursor, len, fan_in });
            cursor += len;
        };

        push("cnn_a.conv1.weight", ParamKind::ConvWeight, f1 * 9, 9);
        push("cnn_a.conv1.bias",   ParamKind::ConvBias,   f1, 9);
        push("cnn_a.conv2.weight", ParamKind::ConvWeight, f2 * f1 * 9, f1 * 9);
        push("cnn_a.conv2.bias",   ParamKind::ConvBias,   f2, f1 * 9);
        push("cnn_b.conv1.weight", ParamKind::ConvWeight, f1 * 9, 9);
        push("cnn_b.conv1.bias",   ParamKind::ConvBias,   f1, 9);
        push("cnn_b.conv2.weight", ParamKind::ConvWeight, f2 * f1 * 9, f1 * 9);
        push("cnn_b.conv2.bias",   ParamKind::ConvBias,   f2, f1 * 9);

        push("mlp_a.dense1.weight", ParamKind::DenseWeight, h1 * fd, fd);
        push("mlp_a.dense1.bias",   ParamKind::DenseBias,   h1, fd);
        push("mlp_a.bn1.gamma",     ParamKind::BnGamma,     h1, h1);
        push("mlp_a.bn1.beta",      ParamKind::BnBeta,      h1, h1);
        push("mlp_a.dense2.weight", ParamKind::DenseWeight, h2 * h1, h1);
        push("mlp_a.dense2.bias",   ParamKind::DenseBias,   h2, h1);
        push("mlp_a.bn2.gamma",     ParamKind::BnGamma,     h2, h2);
        push("mlp_a.bn2.beta",      ParamKind::BnBeta,      h2, h2);
        push("mlp_b.dense1.weight", ParamKind::DenseWeight, h1 * fd, fd);
        push("mlp_b.dense1.bias",   ParamKind::DenseBias,   h1, fd);
        push("mlp_b.bn1.gamma",     ParamKind::BnGamma,     h1, h1);
        push("mlp_b.bn1.beta",      ParamKind::BnBeta,      h1, h1);
        push("mlp_b.dense2.weight", ParamKind::DenseWeight, h2 * h1, h1);
        push("mlp_b.dense2.bias",   ParamKind::DenseBias,   h2, h1);
        push("mlp_b.bn2.gamma",     ParamKind::BnGamma,     h2, h2);
        push("mlp_b.bn2.beta",      ParamKind::BnBeta,      h2, h2);

        push("merge.dense.weight", ParamKind::DenseWeight, mw * concat, concat);
        push("merge.dense.bias",   ParamKind::DenseBias,   mw, concat);
        push("output.weight",      ParamKind::DenseWeight, mw, mw);
        push("output.bias",        ParamKind::DenseBias,   1, mw);

        let total = cursor;

        let mut run_cursor = 0usize;
        let mut run_range = |len: usize| {
            let r = run_cursor..run_cursor + len;
            run_cursor += len;
            r
        };
        let run = [
            [run_range(h1), run_range(h1), run_range(h2), run_range(h2)],
            [run_range(h1), run_range(h1), run_range(h2), run_range(h2)],
        ];

        Self { segments, total, run, run_total: run_cursor }
    }

    fn seg(&self, which: Seg) -> &Segment {
        &self.segments[which as usize]
    }

    fn range(&self, which: Seg) -> Range<usize> {
        self.seg(which).range()
    }
}

/// Trainable state of one network: the flat parameter buffer plus the
/// batch-norm running statistics used at inference time.
#[derive(Clone, Debug, PartialEq)]
pub struct HynnParams {
    arch: HynnArchitecture,
    values: Vec<f64>,
    running: Vec<f64>,
}

/// Momentum of the running-statistics update after each training batch.
pub const RUNNING_STAT_MOMENTUM: f64 = 0.1;

impl HynnParams {
    /// All-zero parameters (running variances start at one). The output of
    /// such a network is exactly its final bias for any input.
    pub fn zeroed(arch: HynnArchitecture) -> Result<Self, NnError> {
        arch.validate()?;
        let plan = Plan::new(&arch);
        let mut running = vec![0.0; plan.run_total];
        for branch in &plan.run {
            running[branch[1].clone()].fill(1.0);
            running[branch[3].clone()].fill(1.0);
        }
        Ok(Self { arch, values: vec![0.0; plan.total], running })
    }

    /// Seeded He-style initialisation: weights `N(0, sqrt(2/fan_in))`,
    /// biases zero, batch-norm gamma one / beta zero.
    pub fn init(arch: HynnArchitecture, seed: u64) -> Result<Self, NnError> {
        let mut params = Self::zeroed(arch)?;
        let plan = Plan::new(&arch);
        let mut gauss = GaussSource::new(seed);
        for seg in &plan.segments {
            match seg.kind {
                ParamKind::ConvWeight | ParamKind::DenseWeight => {
                    let scale = (2.0 / seg.fan_in as f64).sqrt();
                    for v in &mut params.values[seg.range()] {
                        *v = scale * gauss.next();
                    }
                }
                ParamKind::BnGamma => params.values[seg.range()].fill(1.0),
                ParamKind::ConvBias | ParamKind::DenseBias | ParamKind::BnBeta => {}
            }
        }
        Ok(params)
    }

    /// Rebuild from checkpointed buffers, validating lengths.
    pub fn from_parts(
        arch: HynnArchitecture,
        values: Vec<f64>,
        running: Vec<f64>,
    ) -> Result<Self, NnError> {
        arch.validate()?;
        let plan = Plan::new(&arch);
        if values.len() != plan.total {
            return Err(NnError::ShapeMismatch {
                what: "parameter buffer",
                expected: plan.total,
                got: values.len(),
            });
        }
        if running.len() != plan.run_total {
            return Err(NnError::ShapeMismatch {
                what: "running statistics buffer",
                expected: plan.run_total,
                got: running.len(),
            });
        }
        Ok(Self { arch, values, running })
    }

    pub fn arch(&self) -> &HynnArchitecture {
        &self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flat batch-norm running statistics. Per feature branch, in branch
    /// order (a then b): layer-1 means, layer-1 variances, layer-2 means,
    /// layer-2 variances, so each branch occupies `2 * (h1 + h2)` slots.
    pub fn running(&self) -> &[f64] {
        &self.running
    }

    /// Named segments of the flat parameter buffer, in canonical order.
    pub fn segments(&self) -> Vec<Segment> {
        Plan::new(&self.arch).segments
    }

    /// Bias of the final scalar layer.
    pub fn output_bias(&self) -> f64 {
        let plan = Plan::new(&self.arch);
        self.values[plan.range(Seg::OutB)][0]
    }

    pub fn set_output_bias(&mut self, bias: f64) {
        let plan = Plan::new(&self.arch);
        let r = plan.range(Seg::OutB);
        self.values[r][0] = bias;
    }
}

/// One training example: rendered image, normalised feature row, and the
/// target coordinate in millimetres.
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub image: SyntheticImage,
    pub features: Vec<f64>,
    pub target_mm: f64,
}

/// Which coordinate a network regresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn of(&self, p: PointMm) -> f64 {
        match self {
            Axis::X => p.x,
            Axis::Y => p.y,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// Render every table row and pair it with its normalised features and the
/// chosen coordinate as the target.
pub fn prepare_samples(
    table: &FingerprintTable,
    layout: &FeatureLayout,
    blur: &BlurSpec,
    axis: Axis,
) -> Result<Vec<TrainSample>, ImageError> {
    (0..table.len())
        .map(|row| {
            let raw = table.features(row);
            let image = render(raw, layout, blur)?;
            let features = layout.normalise_row(raw)?;
            Ok(TrainSample { image, features, target_mm: axis.of(table.position(row)) })
        })
        .collect()
}

/// Whether a forward pass uses batch statistics and dropout (training) or
/// frozen running statistics with dropout disabled (inference).
#[derive(Clone, Copy, Debug)]
pub enum ForwardMode {
    Inference,
    Train { dropout_seed: u64 },
}

// ── Forward / backward internals ────────────────────────────────────────────

struct CnnSampleCache {
    c1_pre: Vec<f64>,
    c1_act: Vec<f64>,
    c2_pre: Vec<f64>,
    argmax: Option<Vec<usize>>,
}

struct MlpBranchCache {
    bn1: BnCache,
    bn1_y: Vec<f64>,
    mask1: Vec<f64>,
    drop1_y: Vec<f64>,
    bn2: BnCache,
    bn2_y: Vec<f64>,
    mask2: Vec<f64>,
    out: Vec<f64>,
}

struct BatchCache {
    cnn: [Vec<CnnSampleCache>; 2],
    mlp: [MlpBranchCache; 2],
    concat: Vec<f64>,
    m_pre: Vec<f64>,
    m_act: Vec<f64>,
    preds: Vec<f64>,
}

/// Batch statistics observed during one training forward pass, used to
/// update the running statistics.
pub(crate) struct BnBatchStats {
    /// (bn1 mean, bn1 var, bn2 mean, bn2 var) per feature sub-branch.
    stats: [[Vec<f64>; 4]; 2],
}

fn check_finite(values: &[f64], stage: &'static str) -> Result<(), NnError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NonFiniteActivation { stage })
    }
}

fn validate_inputs(
    arch: &HynnArchitecture,
    images: &[&SyntheticImage],
    features: &[&[f64]],
) -> Result<(), NnError> {
    if images.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    if features.len() != images.len() {
        return Err(NnError::ShapeMismatch {
            what: "feature rows per batch",
            expected: images.len(),
            got: features.len(),
        });
    }
    for img in images {
        if img.side() != arch.image_side {
            return Err(NnError::ShapeMismatch {
                what: "image side",
                expected: arch.image_side,
                got: img.side(),
            });
        }
    }
    for f in features {
        if f.len() != arch.feature_dim {
            return Err(NnError::ShapeMismatch {
                what: "feature row",
                expected: arch.feature_dim,
                got: f.len(),
            });
        }
    }
    Ok(())
}

fn cnn_branch_forward(
    params: &HynnParams,
    plan: &Plan,
    images: &[&SyntheticImage],
    branch: usize,
) -> (Vec<f64>, Vec<CnnSampleCache>) {
    let arch = &params.arch;
    let side = arch.image_side;
    let [f1, f2] = arch.conv_filters;
    let (w1r, b1r, w2r, b2r, use_max) = if branch == 0 {
        (Seg::AConv1W, Seg::AConv1B, Seg::AConv2W, Seg::AConv2B, true)
    } else {
        (Seg::BConv1W, Seg::BConv1B, Seg::BConv2W, Seg::BConv2B, false)
    };
    let w1 = &params.values[plan.range(w1r)];
    let b1 = &params.values[plan.range(b1r)];
    let w2 = &params.values[plan.range(w2r)];
    let b2 = &params.values[plan.range(b2r)];

    let flat_len = arch.cnn_flat();
    let mut flat = Vec::with_capacity(images.len() * flat_len);
    let mut caches = Vec::with_capacity(images.len());
    for img in images {
        let c1_pre = conv3x3_forward(img.pixels(), side, 1, w1, b1, f1);
        let c1_act = relu_forward(&c1_pre);
        let c2_pre = conv3x3_forward(&c1_act, side - 2, f1, w2, b2, f2);
        let c2_act = relu_forward(&c2_pre);
        let (pooled, argmax) = if use_max {
            let (p, a) = maxpool2_forward(&c2_act, arch.conv2_side(), f2);
            (p, Some(a))
        } else {
            (avgpool2_forward(&c2_act, arch.conv2_side(), f2), None)
        };
        debug_assert_eq!(pooled.len(), flat_len);
        flat.extend_from_slice(&pooled);
        caches.push(CnnSampleCache { c1_pre, c1_act, c2_pre, argmax });
    }
    (flat, caches)
}

#[allow(clippy::too_many_arguments)]
fn mlp_branch_forward_train(
    params: &HynnParams,
    plan: &Plan,
    x: &[f64],
    batch: usize,
    branch: usize,
    rng: &mut ChaCha8Rng,
) -> MlpBranchCache {
    let arch = &params.arch;
    let [h1, h2] = arch.mlp_widths;
    let fd = arch.feature_dim;
    let s = mlp_segs(branch);
    let v = &params.values;

    let d1_pre = dense_forward(x, batch, fd, &v[plan.range(s[0])], &v[plan.range(s[1])], h1);
    let (bn1_y, bn1) =
        batchnorm_forward_train(&d1_pre, batch, h1, &v[plan.range(s[2])], &v[plan.range(s[3])]);
    let relu1 = relu_forward(&bn1_y);
    let (drop1_y, mask1) = dropout_forward(&relu1, arch.dropout, rng);
    let d2_pre = dense_forward(&drop1_y, batch, h1, &v[plan.range(s[4])], &v[plan.range(s[5])], h2);
    let (bn2_y, bn2) =
        batchnorm_forward_train(&d2_pre, batch, h2, &v[plan.range(s[6])], &v[plan.range(s[7])]);
    let relu2 = relu_forward(&bn2_y);
    let (out, mask2) = dropout_forward(&relu2, arch.dropout, rng);
    MlpBranchCache { bn1, bn1_y, mask1, drop1_y, bn2, bn2_y, mask2, out }
}

fn mlp_branch_forward_infer(
    params: &HynnParams,
    plan: &Plan,
    x: &[f64],
    batch: usize,
    branch: usize,
) -> Vec<f64> {
    let arch = &params.arch;
    let [h1, h2] = arch.mlp_widths;
    let fd = arch.feature_dim;
    let s = mlp_segs(branch);
    let v = &params.values;
    let run = &plan.run[branch];

    let d1_pre = dense_forward(x, batch, fd, &v[plan.range(s[0])], &v[plan.range(s[1])], h1);
    let bn1_y = batchnorm_forward_infer(
        &d1_pre,
        batch,
        h1,
        &v[plan.range(s[2])],
        &v[plan.range(s[3])],
        &params.running[run[0].clone()],
        &params.running[run[1].clone()],
    );
    let relu1 = relu_forward(&bn1_y);
    let d2_pre = dense_forward(&relu1, batch, h1, &v[plan.range(s[4])], &v[plan.range(s[5])], h2);
    let bn2_y = batchnorm_forward_infer(
        &d2_pre,
        batch,
        h2,
        &v[plan.range(s[6])],
        &v[plan.range(s[7])],
        &params.running[run[2].clone()],
        &params.running[run[3].clone()],
    );
    relu_forward(&bn2_y)
}

/// Segment order: d1_w, d1_b, bn1_g, bn1_b, d2_w, d2_b, bn2_g, bn2_b.
fn mlp_segs(branch: usize) -> [Seg; 8] {
    if branch == 0 {
        [Seg::MaD1W, Seg::MaD1B, Seg::MaBn1G, Seg::MaBn1B, Seg::MaD2W, Seg::MaD2B, Seg::MaBn2G, Seg::MaBn2B]
    } else {
        [Seg::MbD1W, Seg::MbD1B, Seg::MbBn1G, Seg::MbBn1B, Seg::MbD2W, Seg::MbD2B, Seg::MbBn2G, Seg::MbBn2B]
    }
}

fn build_concat(
    arch: &HynnArchitecture,
    batch: usize,
    cnn_a: &[f64],
    cnn_b: &[f64],
    mlp_a: &[f64],
    mlp_b: &[f64],
) -> Vec<f64> {
    let flat = arch.cnn_flat();
    let h2 = arch.mlp_widths[1];
    let concat_dim = arch.concat_dim();
    let mut concat = Vec::with_capacity(batch * concat_dim);
    for s in 0..batch {
        concat.extend_from_slice(&cnn_a[s * flat..(s + 1) * flat]);
        concat.extend_from_slice(&cnn_b[s * flat..(s + 1) * flat]);
        concat.extend_from_slice(&mlp_a[s * h2..(s + 1) * h2]);
        concat.extend_from_slice(&mlp_b[s * h2..(s + 1) * h2]);
    }
    concat
}

fn merge_head_forward(
    params: &HynnParams,
    plan: &Plan,
    concat: &[f64],
    batch: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let arch = &params.arch;
    let mw = arch.merge_width;
    let v = &params.values;
    let m_pre = dense_forward(
        concat,
        batch,
        arch.concat_dim(),
        &v[plan.range(Seg::MergeW)],
        &v[plan.range(Seg::MergeB)],
        mw,
    );
    let m_act = relu_forward(&m_pre);
    let preds = dense_forward(
        &m_act,
        batch,
        mw,
        &v[plan.range(Seg::OutW)],
        &v[plan.range(Seg::OutB)],
        1,
    );
    (m_pre, m_act, preds)
}

/// Training-mode batch forward: batch statistics, dropout from a seeded
/// stream, full cache for the backward pass.
fn forward_train_batch(
    params: &HynnParams,
    images: &[&SyntheticImage],
    features: &[&[f64]],
    dropout_seed: u64,
) -> Result<BatchCache, NnError> {
    validate_inputs(&params.arch, images, features)?;
    let plan = Plan::new(&params.arch);
    let batch = images.len();
    let fd = params.arch.feature_dim;

    let mut feat_flat = Vec::with_capacity(batch * fd);
    for f in features {
        feat_flat.extend_from_slice(f);
    }

    let (cnn_a_flat, cnn_a_cache) = cnn_branch_forward(params, &plan, images, 0);
    check_finite(&cnn_a_flat, "cnn_a")?;
    let (cnn_b_flat, cnn_b_cache) = cnn_branch_forward(params, &plan, images, 1);
    check_finite(&cnn_b_flat, "cnn_b")?;

    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let mlp_a = mlp_branch_forward_train(params, &plan, &feat_flat, batch, 0, &mut rng);
    check_finite(&mlp_a.out, "mlp_a")?;
    let mlp_b = mlp_branch_forward_train(params, &plan, &feat_flat, batch, 1, &mut rng);
    check_finite(&mlp_b.out, "mlp_b")?;

    let concat = build_concat(&params.arch, batch, &cnn_a_flat, &cnn_b_flat, &mlp_a.out, &mlp_b.out);
    let (m_pre, m_act, preds) = merge_head_forward(params, &plan, &concat, batch);
    check_finite(&preds, "output")?;

    Ok(BatchCache {
        cnn: [cnn_a_cache, cnn_b_cache],
        mlp: [mlp_a, mlp_b],
        concat,
        m_pre,
        m_act,
        preds,
    })
}

/// Inference-mode batch forward: running statistics, no dropout.
fn forward_infer_batch(
    params: &HynnParams,
    images: &[&SyntheticImage],
    features: &[&[f64]],
) -> Result<Vec<f64>, NnError> {
    validate_inputs(&params.arch, images, features)?;
    let plan = Plan::new(&params.arch);
    let batch = images.len();
    let fd = params.arch.feature_dim;
    let mut feat_flat = Vec::with_capacity(batch * fd);
    for f in features {
        feat_flat.extend_from_slice(f);
    }

    let (cnn_a_flat, _) = cnn_branch_forward(params, &plan, images, 0);
    check_finite(&cnn_a_flat, "cnn_a")?;
    let (cnn_b_flat, _) = cnn_branch_forward(params, &plan, images, 1);
    check_finite(&cnn_b_flat, "cnn_b")?;
    let mlp_a = mlp_branch_forward_infer(params, &plan, &feat_flat, batch, 0);
    check_finite(&mlp_a, "mlp_a")?;
    let mlp_b = mlp_branch_forward_infer(params, &plan, &feat_flat, batch, 1);
    check_finite(&mlp_b, "mlp_b")?;

    let concat = build_concat(&params.arch, batch, &cnn_a_flat, &cnn_b_flat, &mlp_a, &mlp_b);
    let (_, _, preds) = merge_head_forward(params, &plan, &concat, batch);
    check_finite(&preds, "output")?;
    Ok(preds)
}

/// Backward pass over a cached training forward. Returns `(gradients,
/// batch statistics)`; gradients align with [`HynnParams::values`].
fn backward_batch(
    params: &HynnParams,
    images: &[&SyntheticImage],
    features: &[&[f64]],
    targets: &[f64],
    cache: BatchCache,
) -> Result<(f64, Vec<f64>, BnBatchStats), NnError> {
    let arch = &params.arch;
    let plan = Plan::new(arch);
    let batch = images.len();
    let v = &params.values;
    let mut grads = vec![0.0f64; v.len()];

    // MSE loss and its gradient at the scalar outputs.
    let mut loss = 0.0;
    let mut d_preds = Vec::with_capacity(batch);
    for (p, t) in cache.preds.iter().zip(targets) {
        let r = p - t;
        loss += r * r;
        d_preds.push(2.0 * r / batch as f64);
    }
    loss /= batch as f64;
    if !loss.is_finite() {
        return Err(NnError::NonFiniteActivation { stage: "loss" });
    }

    // Merge head.
    let mw = arch.merge_width;
    let concat_dim = arch.concat_dim();
    let (d_m_act, d_out_w, d_out_b) =
        dense_backward(&cache.m_act, batch, mw, &v[plan.range(Seg::OutW)], 1, &d_preds);
    grads[plan.range(Seg::OutW)].copy_from_slice(&d_out_w);
    grads[plan.range(Seg::OutB)].copy_from_slice(&d_out_b);
    let d_m_pre = relu_backward(&d_m_act, &cache.m_pre);
    let (d_concat, d_merge_w, d_merge_b) = dense_backward(
        &cache.concat,
        batch,
        concat_dim,
        &v[plan.range(Seg::MergeW)],
        mw,
        &d_m_pre,
    );
    grads[plan.range(Seg::MergeW)].copy_from_slice(&d_merge_w);
    grads[plan.range(Seg::MergeB)].copy_from_slice(&d_merge_b);

    // Split the concat gradient back into the four sub-branches.
    let flat = arch.cnn_flat();
    let h2 = arch.mlp_widths[1];
    let mut d_cnn = [vec![0.0f64; batch * flat], vec![0.0f64; batch * flat]];
    let mut d_mlp = [vec![0.0f64; batch * h2], vec![0.0f64; batch * h2]];
    for s in 0..batch {
        let row = &d_concat[s * concat_dim..(s + 1) * concat_dim];
        d_cnn[0][s * flat..(s + 1) * flat].copy_from_slice(&row[..flat]);
        d_cnn[1][s * flat..(s + 1) * flat].copy_from_slice(&row[flat..2 * flat]);
        d_mlp[0][s * h2..(s + 1) * h2].copy_from_slice(&row[2 * flat..2 * flat + h2]);
        d_mlp[1][s * h2..(s + 1) * h2].copy_from_slice(&row[2 * flat + h2..]);
    }

    // Feature sub-branches (batched).
    let fd = arch.feature_dim;
    let [h1, _] = arch.mlp_widths;
    let mut feat_flat = Vec::with_capacity(batch * fd);
    for f in features {
        feat_flat.extend_from_slice(f);
    }
    let mut stats: [[Vec<f64>; 4]; 2] = [
        [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
        [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
    ];
    for branch in 0..2 {
        let s = mlp_segs(branch);
        let mlp = &cache.mlp[branch];
        let d_relu2 = dropout_backward(&d_mlp[branch], &mlp.mask2);
        let d_bn2_y = relu_backward(&d_relu2, &mlp.bn2_y);
        let (d_d2_pre, d_g2, d_be2) =
            batchnorm_backward(&d_bn2_y, &mlp.bn2, batch, h2, &v[plan.range(s[6])]);
        grads[plan.range(s[6])].copy_from_slice(&d_g2);
        grads[plan.range(s[7])].copy_from_slice(&d_be2);
        let (d_drop1, d_w2, d_b2) =
            dense_backward(&mlp.drop1_y, batch, h1, &v[plan.range(s[4])], h2, &d_d2_pre);
        grads[plan.range(s[4])].copy_from_slice(&d_w2);
        grads[plan.range(s[5])].copy_from_slice(&d_b2);
        let d_relu1 = dropout_backward(&d_drop1, &mlp.mask1);
        let d_bn1_y = relu_backward(&d_relu1, &mlp.bn1_y);
        let (d_d1_pre, d_g1, d_be1) =
            batchnorm_backward(&d_bn1_y, &mlp.bn1, batch, h1, &v[plan.range(s[2])]);
        grads[plan.range(s[2])].copy_from_slice(&d_g1);
        grads[plan.range(s[3])].copy_from_slice(&d_be1);
        let (_, d_w1, d_b1) =
            dense_backward(&feat_flat, batch, fd, &v[plan.range(s[0])], h1, &d_d1_pre);
        grads[plan.range(s[0])].copy_from_slice(&d_w1);
        grads[plan.range(s[1])].copy_from_slice(&d_b1);

        stats[branch] = [
            mlp.bn1.mean.clone(),
            mlp.bn1.var.clone(),
            mlp.bn2.mean.clone(),
            mlp.bn2.var.clone(),
        ];
    }

    // Image sub-branches (per sample, accumulating weight gradients).
    let side = arch.image_side;
    let [f1, f2] = arch.conv_filters;
    let s2 = arch.conv2_side();
    for branch in 0..2 {
        let (w1r, b1r, w2r, b2r) = if branch == 0 {
            (Seg::AConv1W, Seg::AConv1B, Seg::AConv2W, Seg::AConv2B)
        } else {
            (Seg::BConv1W, Seg::BConv1B, Seg::BConv2W, Seg::BConv2B)
        };
        let w1 = &v[plan.range(w1r)];
        let w2 = &v[plan.range(w2r)];
        for (sample, img) in images.iter().enumerate() {
            let c = &cache.cnn[branch][sample];
            let d_flat = &d_cnn[branch][sample * flat..(sample + 1) * flat];
            let d_c2_act = match &c.argmax {
                Some(arg) => maxpool2_backward(d_flat, arg, f2 * s2 * s2),
                None => avgpool2_backward(d_flat, s2, f2),
            };
            let d_c2_pre = relu_backward(&d_c2_act, &c.c2_pre);
            let (d_c1_act, d_w2, d_b2) =
                conv3x3_backward(&c.c1_act, side - 2, f1, w2, f2, &d_c2_pre);
            let d_c1_pre = relu_backward(&d_c1_act, &c.c1_pre);
            let (_, d_w1, d_b1) =
                conv3x3_backward(img.pixels(), side, 1, w1, f1, &d_c1_pre);
            accumulate(&mut grads[plan.range(w2r)], &d_w2);
            accumulate(&mut grads[plan.range(b2r)], &d_b2);
            accumulate(&mut grads[plan.range(w1r)], &d_w1);
            accumulate(&mut grads[plan.range(b1r)], &d_b1);
        }
    }

    if !grads.iter().all(|g| g.is_finite()) {
        return Err(NnError::NonFiniteGradient);
    }
    Ok((loss, grads, BnBatchStats { stats }))
}

fn accumulate(into: &mut [f64], from: &[f64]) {
    for (a, b) in into.iter_mut().zip(from) {
        *a += b;
    }
}

/// Apply one training batch's statistics to the running statistics.
pub(crate) fn update_running_stats(params: &mut HynnParams, stats: &BnBatchStats) {
    let plan = Plan::new(&params.arch);
    let m = RUNNING_STAT_MOMENTUM;
    for branch in 0..2 {
        for k in 0..4 {
            let range = plan.run[branch][k].clone();
            for (r, &b) in params.running[range].iter_mut().zip(&stats.stats[branch][k]) {
                *r = (1.0 - m) * *r + m * b;
            }
        }
    }
}

// ── Public evaluation API ───────────────────────────────────────────────────

/// Evaluate one sample. Training mode uses batch statistics over this single
/// sample plus seeded dropout, mirroring what the optimiser sees; inference
/// mode is deterministic and uses the frozen running statistics.
pub fn forward(
    params: &HynnParams,
    image: &SyntheticImage,
    features: &[f64],
    mode: ForwardMode,
) -> Result<f64, NnError> {
    match mode {
        ForwardMode::Inference => {
            forward_infer_batch(params, &[image], &[features]).map(|p| p[0])
        }
        ForwardMode::Train { dropout_seed } => {
            forward_train_batch(params, &[image], &[features], dropout_seed).map(|c| c.preds[0])
        }
    }
}

/// Mean squared error of a training batch under training-mode semantics
/// (batch statistics, dropout from `dropout_seed`). The same seed yields the
/// same masks as [`batch_gradient`], which makes finite-difference probing
/// of the training loss well defined.
pub fn batch_loss(
    params: &HynnParams,
    batch: &[TrainSample],
    dropout_seed: u64,
) -> Result<f64, NnError> {
    let (images, features, targets) = split_batch(batch);
    let cache = forward_train_batch(params, &images, &features, dropout_seed)?;
    let mut loss = 0.0;
    for (p, t) in cache.preds.iter().zip(&targets) {
        let r = p - t;
        loss += r * r;
    }
    Ok(loss / batch.len() as f64)
}

/// Loss and gradient of a training batch; gradients align with
/// [`HynnParams::values`].
pub fn batch_gradient(
    params: &HynnParams,
    batch: &[TrainSample],
    dropout_seed: u64,
) -> Result<(f64, Vec<f64>), NnError> {
    let (loss, grads, _) = batch_gradient_with_stats(params, batch, dropout_seed)?;
    Ok((loss, grads))
}

pub(crate) fn batch_gradient_with_stats(
    params: &HynnParams,
    batch: &[TrainSample],
    dropout_seed: u64,
) -> Result<(f64, Vec<f64>, BnBatchStats), NnError> {
    let (images, features, targets) = split_batch(batch);
    let cache = forward_train_batch(params, &images, &features, dropout_seed)?;
    backward_batch(params, &images, &features, &targets, cache)
}

/// Same as [`batch_gradient_with_stats`] over a subset of `samples` picked
/// by index (the shuffled-minibatch path, no cloning).
pub(crate) fn batch_gradient_indexed(
    params: &HynnParams,
    samples: &[TrainSample],
    idx: &[usize],
    dropout_seed: u64,
) -> Result<(f64, Vec<f64>, BnBatchStats), NnError> {
    let images: Vec<&SyntheticImage> = idx.iter().map(|&i| &samples[i].image).collect();
    let features: Vec<&[f64]> = idx.iter().map(|&i| samples[i].features.as_slice()).collect();
    let targets: Vec<f64> = idx.iter().map(|&i| samples[i].target_mm).collect();
    let cache = forward_train_batch(params, &images, &features, dropout_seed)?;
    backward_batch(params, &images, &features, &targets, cache)
}

fn split_batch(batch: &[TrainSample]) -> (Vec<&SyntheticImage>, Vec<&[f64]>, Vec<f64>) {
    let images: Vec<&SyntheticImage> = batch.iter().map(|s| &s.image).collect();
    let features: Vec<&[f64]> = batch.iter().map(|s| s.features.as_slice()).collect();
    let targets: Vec<f64> = batch.iter().map(|s| s.target_mm).collect();
    (images, features, targets)
}

/// Inference-mode mean squared error over a sample set, in mm^2.
pub fn dataset_mse(params: &HynnParams, samples: &[TrainSample]) -> Result<f64, NnError> {
    if samples.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mut total = 0.0;
    for chunk in samples.chunks(64) {
        let (images, features, targets) = split_batch(chunk);
        let preds = forward_infer_batch(params, &images, &features)?;
        for (p, t) in preds.iter().zip(&targets) {
            total += (p - t) * (p - t);
        }
    }
    Ok(total / samples.len() as f64)
}

/// Combine the per-axis regressors into a position estimate (inference mode).
pub fn predict_position(
    model_x: &HynnParams,
    model_y: &HynnParams,
    image: &SyntheticImage,
    features: &[f64],
) -> Result<PointMm, NnError> {
    let x = forward(model_x, image, features, ForwardMode::Inference)?;
    let y = forward(model_y, image, features, ForwardMode::Inference)?;
    Ok(PointMm::new(x, y))
}
