//! Dense volumetric tensors and the forward/backward kernels for every layer
//! type the fusion network uses.
//!
//! Convolution uses the cross-correlation convention (no kernel flip) with
//! zero padding and stride 1 on all axes. All ops are pure functions; given
//! finite inputs they produce finite outputs.

use crate::error::{Error, Result};
use crate::plane::ImagePlane;

/// A d×H×W stack of real-valued image planes, row-major with depth outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    depth: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Volume {
    pub fn zeros(depth: usize, height: usize, width: usize) -> Self {
        assert!(depth >= 1 && height >= 1 && width >= 1);
        Volume {
            depth,
            height,
            width,
            data: vec![0.0; depth * height * width],
        }
    }

    pub fn from_vec(depth: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != depth * height * width {
            return Err(Error::Shape(format!(
                "volume data length {} does not equal {}x{}x{}",
                data.len(),
                depth,
                height,
                width
            )));
        }
        Ok(Volume {
            depth,
            height,
            width,
            data,
        })
    }

    pub fn from_planes(planes: &[ImagePlane]) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::Argument("cannot build a volume from zero planes".into()));
        }
        let (h, w) = planes[0].dims();
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for p in planes {
            p.require_same_dims(&planes[0], "volume planes")?;
            data.extend_from_slice(p.as_slice());
        }
        Ok(Volume {
            depth: planes.len(),
            height: h,
            width: w,
            data,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.depth, self.height, self.width)
    }

    #[inline]
    pub fn at(&self, z: usize, y: usize, x: usize) -> f64 {
        self.data[(z * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, z: usize, y: usize, x: usize, v: f64) {
        self.data[(z * self.height + y) * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn plane(&self, z: usize) -> ImagePlane {
        let start = z * self.height * self.width;
        ImagePlane::from_vec(
            self.height,
            self.width,
            self.data[start..start + self.height * self.width].to_vec(),
        )
        .expect("plane slice has exact length")
    }

    pub fn scale(&self, factor: f64) -> Volume {
        Volume {
            depth: self.depth,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    fn row(&self, z: usize, y: usize) -> &[f64] {
        let start = (z * self.height + y) * self.width;
        &self.data[start..start + self.width]
    }
}

/// An n×d×H×W activation tensor: `n` filter responses over a volume.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    filters: usize,
    depth: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureStack {
    pub fn zeros(filters: usize, depth: usize, height: usize, width: usize) -> Self {
        assert!(filters >= 1 && depth >= 1 && height >= 1 && width >= 1);
        FeatureStack {
            filters,
            depth,
            height,
            width,
            data: vec![0.0; filters * depth * height * width],
        }
    }

    pub fn from_vec(
        filters: usize,
        depth: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != filters * depth * height * width {
            return Err(Error::Shape(format!(
                "feature stack data length {} does not equal {}x{}x{}x{}",
                data.len(),
                filters,
                depth,
                height,
                width
            )));
        }
        Ok(FeatureStack {
            filters,
            depth,
            height,
            width,
            data,
        })
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.filters, self.depth, self.height, self.width)
    }

    #[inline]
    pub fn at(&self, k: usize, z: usize, y: usize, x: usize) -> f64 {
        self.data[((k * self.depth + z) * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, k: usize, z: usize, y: usize, x: usize, v: f64) {
        self.data[((k * self.depth + z) * self.height + y) * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn volume_len(&self) -> usize {
        self.depth * self.height * self.width
    }
}

/// A bank of `n` 3D filters of size c×h×w with one bias per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filters: usize,
    kernel_depth: usize,
    kernel_height: usize,
    kernel_width: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl FilterBank {
    pub fn zeros(
        filters: usize,
        kernel_depth: usize,
        kernel_height: usize,
        kernel_width: usize,
    ) -> Self {
        assert!(filters >= 1 && kernel_depth >= 1 && kernel_height >= 1 && kernel_width >= 1);
        FilterBank {
            filters,
            kernel_depth,
            kernel_height,
            kernel_width,
            weights: vec![0.0; filters * kernel_depth * kernel_height * kernel_width],
            biases: vec![0.0; filters],
        }
    }

    pub fn new(
        filters: usize,
        kernel_depth: usize,
        kernel_height: usize,
        kernel_width: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != filters * kernel_depth * kernel_height * kernel_width {
            return Err(Error::Shape(format!(
                "filter weights length {} does not equal {}x{}x{}x{}",
                weights.len(),
                filters,
                kernel_depth,
                kernel_height,
                kernel_width
            )));
        }
        if biases.len() != filters {
            return Err(Error::Shape(format!(
                "bias count {} does not equal filter count {}",
                biases.len(),
                filters
            )));
        }
        Ok(FilterBank {
            filters,
            kernel_depth,
            kernel_height,
            kernel_width,
            weights,
            biases,
        })
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn kernel_dims(&self) -> (usize, usize, usize) {
        (self.kernel_depth, self.kernel_height, self.kernel_width)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    #[inline]
    fn weight_row(&self, k: usize, kz: usize, ky: usize) -> &[f64] {
        let start = ((k * self.kernel_depth + kz) * self.kernel_height + ky) * self.kernel_width;
        &self.weights[start..start + self.kernel_width]
    }
}

/// Symmetric zero padding on the depth, height and width axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pad3 {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
}

impl Pad3 {
    pub const NONE: Pad3 = Pad3 {
        depth: 0,
        height: 0,
        width: 0,
    };

    pub fn new(depth: usize, height: usize, width: usize) -> Self {
        Pad3 {
            depth,
            height,
            width,
        }
    }
}

fn conv_output_extent(input: usize, pad: usize, kernel: usize, axis: &str) -> Result<usize> {
    let padded = input + 2 * pad;
    if padded < kernel {
        return Err(Error::Shape(format!(
            "{axis} axis: padded input extent {padded} is smaller than kernel extent {kernel}"
        )));
    }
    Ok(padded - kernel + 1)
}

fn pad_volume(input: &Volume, pad: Pad3) -> Volume {
    if pad == Pad3::NONE {
        return input.clone();
    }
    let (d, h, w) = input.dims();
    let mut out = Volume::zeros(d + 2 * pad.depth, h + 2 * pad.height, w + 2 * pad.width);
    for z in 0..d {
        for y in 0..h {
            let src = input.row(z, y);
            let zw = out.width;
            let start = ((z + pad.depth) * out.height + y + pad.height) * zw + pad.width;
            out.data[start..start + w].copy_from_slice(src);
        }
    }
    out
}

/// 3D convolution (cross-correlation), stride 1, symmetric zero padding.
///
/// `out[k,z,y,x] = bias_k + Σ_{i,j,l} weight_k[i,j,l] · padded[z+i, y+j, x+l]`
pub fn conv3d_forward(input: &Volume, bank: &FilterBank, pad: Pad3) -> Result<FeatureStack> {
    let (d, h, w) = input.dims();
    let (kd, kh, kw) = bank.kernel_dims();
    let od = conv_output_extent(d, pad.depth, kd, "depth")?;
    let oh = conv_output_extent(h, pad.height, kh, "height")?;
    let ow = conv_output_extent(w, pad.width, kw, "width")?;

    let padded = pad_volume(input, pad);
    let mut out = FeatureStack::zeros(bank.filters(), od, oh, ow);
    for k in 0..bank.filters() {
        let bias = bank.biases[k];
        for oz in 0..od {
            for oy in 0..oh {
                let out_start = ((k * od + oz) * oh + oy) * ow;
                let out_row = &mut out.data[out_start..out_start + ow];
                out_row.fill(bias);
                for kz in 0..kd {
                    for ky in 0..kh {
                        let wt = bank.weight_row(k, kz, ky);
                        let in_row = padded.row(oz + kz, oy + ky);
                        for (ox, acc) in out_row.iter_mut().enumerate() {
                            let window = &in_row[ox..ox + kw];
                            let mut s = 0.0;
                            for (wv, iv) in wt.iter().zip(window) {
                                s += wv * iv;
                            }
                            *acc += s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of `Σ (grad_out ⊙ conv3d_forward(input, bank, pad))` with respect
/// to the input, the filter weights and the biases. Weight and bias gradients
/// come back in a `FilterBank` of the same shape as `bank`.
pub fn conv3d_backward(
    input: &Volume,
    bank: &FilterBank,
    pad: Pad3,
    grad_out: &FeatureStack,
) -> Result<(Volume, FilterBank)> {
    let (d, h, w) = input.dims();
    let (kd, kh, kw) = bank.kernel_dims();
    let od = conv_output_extent(d, pad.depth, kd, "depth")?;
    let oh = conv_output_extent(h, pad.height, kh, "height")?;
    let ow = conv_output_extent(w, pad.width, kw, "width")?;
    if grad_out.dims() != (bank.filters(), od, oh, ow) {
        return Err(Error::Shape(format!(
            "grad_out dims {:?} do not match forward output dims {:?}",
            grad_out.dims(),
            (bank.filters(), od, oh, ow)
        )));
    }

    let padded = pad_volume(input, pad);
    let mut grad_padded = Volume::zeros(padded.depth, padded.height, padded.width);
    let mut grads = FilterBank::zeros(bank.filters(), kd, kh, kw);

    for k in 0..bank.filters() {
        let mut grad_bias = 0.0;
        for oz in 0..od {
            for oy in 0..oh {
                let go_start = ((k * od + oz) * oh + oy) * ow;
                let go_row = &grad_out.data[go_start..go_start + ow];
                for (ox, &g) in go_row.iter().enumerate() {
                    grad_bias += g;
                    if g == 0.0 {
                        continue;
                    }
                    for kz in 0..kd {
                        for ky in 0..kh {
                            let in_start = ((oz + kz) * padded.height + oy + ky) * padded.width + ox;
                            let in_row = &padded.data[in_start..in_start + kw];
                            let wrow_start =
                                ((k * kd + kz) * kh + ky) * kw;
                            let gw_row = &mut grads.weights[wrow_start..wrow_start + kw];
                            for (gw, iv) in gw_row.iter_mut().zip(in_row) {
                                *gw += g * iv;
                            }
                            let w_row = &bank.weights[wrow_start..wrow_start + kw];
                            let gp_row =
                                &mut grad_padded.data[in_start..in_start + kw];
                            for (gp, wv) in gp_row.iter_mut().zip(w_row) {
                                *gp += g * wv;
                            }
                        }
                    }
                }
            }
        }
        grads.biases[k] = grad_bias;
    }

    // Crop the padding back off the input gradient.
    let mut grad_input = Volume::zeros(d, h, w);
    for z in 0..d {
        for y in 0..h {
            let src_start =
                ((z + pad.depth) * grad_padded.height + y + pad.height) * grad_padded.width
                    + pad.width;
            let dst_start = (z * h + y) * w;
            grad_input.data[dst_start..dst_start + w]
                .copy_from_slice(&grad_padded.data[src_start..src_start + w]);
        }
    }
    Ok((grad_input, grads))
}

/// Elementwise hyperbolic tangent.
pub fn tanh_slice(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = v.tanh();
    }
}

/// Backward rule for tanh given the *activated* values: `grad_in = grad_out · (1 − t²)`.
pub fn tanh_backward_slice(grad_out: &[f64], activated: &[f64], grad_in: &mut [f64]) {
    for ((gi, &go), &t) in grad_in.iter_mut().zip(grad_out).zip(activated) {
        *gi = go * (1.0 - t * t);
    }
}

/// Sum over the filter axis, then a scalar affine map and tanh:
/// `out[z,y,x] = tanh(weight · Σ_k input[k,z,y,x] + bias)`.
///
/// Returns the pre-activation filter sum alongside the activated volume; the
/// sum is what the backward pass needs for the weight gradient.
pub fn filter_collapse(input: &FeatureStack, weight: f64, bias: f64) -> (Volume, Volume) {
    let (n, d, h, w) = input.dims();
    let vol_len = d * h * w;
    let mut sum = Volume::zeros(d, h, w);
    for k in 0..n {
        let src = &input.data[k * vol_len..(k + 1) * vol_len];
        for (acc, v) in sum.data.iter_mut().zip(src) {
            *acc += v;
        }
    }
    let mut out = sum.clone();
    for v in out.data.iter_mut() {
        *v = (weight * *v + bias).tanh();
    }
    (out, sum)
}

/// Gradients for [`filter_collapse`]. Takes the activated output and the
/// cached filter sum from the forward call.
pub fn filter_collapse_backward(
    input: &FeatureStack,
    weight: f64,
    output: &Volume,
    filter_sum: &Volume,
    grad_out: &Volume,
) -> (FeatureStack, f64, f64) {
    let (n, d, h, w) = input.dims();
    let vol_len = d * h * w;
    // Through the tanh and the affine map.
    let mut grad_pre = vec![0.0; vol_len];
    tanh_backward_slice(grad_out.as_slice(), output.as_slice(), &mut grad_pre);
    let mut grad_weight = 0.0;
    let mut grad_bias = 0.0;
    for (g, s) in grad_pre.iter().zip(filter_sum.as_slice()) {
        grad_weight += g * s;
        grad_bias += g;
    }
    // The filter sum broadcasts the same gradient to every filter.
    let mut grad_input = FeatureStack::zeros(n, d, h, w);
    for k in 0..n {
        let dst = &mut grad_input.data[k * vol_len..(k + 1) * vol_len];
        for (d, g) in dst.iter_mut().zip(&grad_pre) {
            *d = weight * g;
        }
    }
    (grad_input, grad_weight, grad_bias)
}

/// Linear reconstruction: collapse both the filter and depth axes,
/// `out[y,x] = weight · Σ_{k,z} input[k,z,y,x] + bias`. No activation.
///
/// Returns the plane sum alongside the output for the backward pass.
pub fn global_collapse(input: &FeatureStack, weight: f64, bias: f64) -> (ImagePlane, ImagePlane) {
    let (n, d, h, w) = input.dims();
    let plane_len = h * w;
    let mut sum = ImagePlane::zeros(h, w);
    for kz in 0..n * d {
        let src = &input.data[kz * plane_len..(kz + 1) * plane_len];
        for (acc, v) in sum.as_mut_slice().iter_mut().zip(src) {
            *acc += v;
        }
    }
    let out = sum.map(|s| weight * s + bias);
    (out, sum)
}

/// Gradients for [`global_collapse`].
pub fn global_collapse_backward(
    input: &FeatureStack,
    weight: f64,
    plane_sum: &ImagePlane,
    grad_out: &ImagePlane,
) -> (FeatureStack, f64, f64) {
    let (n, d, h, w) = input.dims();
    let plane_len = h * w;
    let mut grad_weight = 0.0;
    let mut grad_bias = 0.0;
    for (g, s) in grad_out.as_slice().iter().zip(plane_sum.as_slice()) {
        grad_weight += g * s;
        grad_bias += g;
    }
    let mut grad_input = FeatureStack::zeros(n, d, h, w);
    for kz in 0..n * d {
        let dst = &mut grad_input.data[kz * plane_len..(kz + 1) * plane_len];
        for (dv, g) in dst.iter_mut().zip(grad_out.as_slice()) {
            *dv = weight * g;
        }
    }
    (grad_input, grad_weight, grad_bias)
}
