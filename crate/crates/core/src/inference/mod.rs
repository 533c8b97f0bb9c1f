//! Forward-only convnet execution from `CRVW1` weight files.
//!
//! Tensors are `f64` internally; weights are stored as `f32` exactly as they
//! appear on disk so that a load/save cycle is lossless.

mod format;
mod layers;
mod network;
pub mod zoo;

pub use format::{decode_weights, encode_weights, load_weights, save_weights, MAGIC};
pub use layers::{
    batchnorm_inference, conv2d, fully_connected, maxpool2, relu, sigmoid, softmax_channel,
    upsample_bilinear2, BN_EPSILON,
};
pub(crate) use layers::sigmoid_scalar;
pub use network::{Layer, Network, Shape, FINAL_OUTPUT};

use crate::error::{Error, Result};

/// Channel-major, row-major feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor3 {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "{channels}x{height}x{width} tensor needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Param("tensor values must be finite".into()));
        }
        Ok(Tensor3 {
            channels,
            height,
            width,
            data,
        })
    }

    /// Single-channel tensor from a raster.
    pub fn from_map(map: &crate::FloatMap) -> Self {
        Tensor3 {
            channels: 1,
            height: map.height(),
            width: map.width(),
            data: map.data().to_vec(),
        }
    }

    pub fn channel_map(&self, c: usize) -> crate::FloatMap {
        crate::FloatMap::from_vec(self.width, self.height, self.channel(c).to_vec())
            .expect("channel slice has plane size")
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }
}
