use super::layers::{
    batchnorm_inference, conv2d, fully_connected, maxpool2, relu, sigmoid, softmax_channel,
    upsample_bilinear2,
};
use super::Tensor3;
use crate::error::{Error, Result};

/// Name of the main-stream tensor returned by [`Network::forward`].
pub const FINAL_OUTPUT: &str = "output";

/// One layer descriptor with its weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Declared input shape; a zero height or width accepts any size.
    Input {
        channels: usize,
        height: usize,
        width: usize,
    },
    /// Square `kernel`×`kernel` convolution, stride 1, padding `kernel / 2`.
    Conv {
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    Relu,
    MaxPool2,
    FullyConnected {
        inputs: usize,
        outputs: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    BatchNorm {
        mean: Vec<f32>,
        var: Vec<f32>,
        gamma: Vec<f32>,
        beta: Vec<f32>,
    },
    Sigmoid,
    SoftmaxChannel,
    UpsampleBilinear2,
    /// Identity at inference.
    Dropout { ratio: f32 },
    /// Side branch: `layers` run on a copy of the current tensor and the result is
    /// exposed as output `s{id}`; the main stream continues unchanged.
    Branch { id: u32, layers: Vec<Layer> },
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Input { .. } => "input",
            Layer::Conv { kernel: 1, .. } => "conv1x1",
            Layer::Conv { .. } => "conv3x3",
            Layer::Relu => "relu",
            Layer::MaxPool2 => "maxpool2",
            Layer::FullyConnected { .. } => "fc",
            Layer::BatchNorm { .. } => "batchnorm_inference",
            Layer::Sigmoid => "sigmoid",
            Layer::SoftmaxChannel => "softmax_channel",
            Layer::UpsampleBilinear2 => "upsample_bilinear2",
            Layer::Dropout { .. } => "dropout",
            Layer::Branch { .. } => "branch",
        }
    }

    pub(crate) fn branch_name(id: u32) -> String {
        format!("s{id}")
    }
}

/// Symbolic shape used for load-time validation; `None` means "any size".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub channels: usize,
    pub height: Option<usize>,
    pub width: Option<usize>,
}

fn propagate(layer: &Layer, s: Shape) -> Result<Shape> {
    let shape_err = |msg: String| Err(Error::Shape(format!("{}: {msg}", layer.kind())));
    match layer {
        Layer::Input { .. } => shape_err("input layer may only appear first".into()),
        Layer::Conv {
            kernel,
            in_channels,
            out_channels,
            weights,
            bias,
        } => {
            if *kernel != 1 && *kernel != 3 {
                return shape_err(format!("kernel {kernel} not supported"));
            }
            if weights.len() != out_channels * in_channels * kernel * kernel
                || bias.len() != *out_channels
            {
                return shape_err("weight block does not match declared dims".into());
            }
            if s.channels != *in_channels {
                return shape_err(format!("expects {in_channels} channels, got {}", s.channels));
            }
            Ok(Shape {
                channels: *out_channels,
                ..s
            })
        }
        Layer::MaxPool2 => Ok(Shape {
            channels: s.channels,
            height: s.height.map(|h| h / 2),
            width: s.width.map(|w| w / 2),
        }),
        Layer::UpsampleBilinear2 => Ok(Shape {
            channels: s.channels,
            height: s.height.map(|h| h * 2),
            width: s.width.map(|w| w * 2),
        }),
        Layer::FullyConnected {
            inputs,
            outputs,
            weights,
            bias,
        } => {
            if weights.len() != inputs * outputs || bias.len() != *outputs {
                return shape_err("weight block does not match declared dims".into());
            }
            if let (Some(h), Some(w)) = (s.height, s.width) {
                if s.channels * h * w != *inputs {
                    return shape_err(format!(
                        "expects {inputs} inputs, got {}x{h}x{w}",
                        s.channels
                    ));
                }
            }
            Ok(Shape {
                channels: *outputs,
                height: Some(1),
                width: Some(1),
            })
        }
        Layer::BatchNorm {
            mean,
            var,
            gamma,
            beta,
        } => {
            let c = mean.len();
            if var.len() != c || gamma.len() != c || beta.len() != c {
                return shape_err("parameter vectors differ in length".into());
            }
            if c != s.channels {
                return shape_err(format!("expects {c} channels, got {}", s.channels));
            }
            Ok(s)
        }
        Layer::Relu
        | Layer::Sigmoid
        | Layer::SoftmaxChannel
        | Layer::Dropout { .. } => Ok(s),
        Layer::Branch { layers, .. } => {
            let mut b = s;
            for l in layers {
                if matches!(l, Layer::Branch { .. }) {
                    return shape_err("nested branches are not supported".into());
                }
                b = propagate(l, b)?;
            }
            Ok(s)
        }
    }
}

fn apply(layer: &Layer, x: &Tensor3) -> Result<Tensor3> {
    match layer {
        Layer::Input { .. } | Layer::Dropout { .. } | Layer::Branch { .. } => Ok(x.clone()),
        Layer::Conv {
            kernel,
            in_channels,
            weights,
            bias,
            ..
        } => {
            if x.channels() != *in_channels {
                return Err(Error::Shape(format!(
                    "conv expects {in_channels} channels, got {}",
                    x.channels()
                )));
            }
            conv2d(x, weights, bias, *kernel, kernel / 2)
        }
        Layer::Relu => Ok(relu(x)),
        Layer::MaxPool2 => Ok(maxpool2(x)),
        Layer::FullyConnected { weights, bias, .. } => fully_connected(x, weights, bias),
        Layer::BatchNorm {
            mean,
            var,
            gamma,
            beta,
        } => batchnorm_inference(x, mean, var, gamma, beta),
        Layer::Sigmoid => Ok(sigmoid(x)),
        Layer::SoftmaxChannel => Ok(softmax_channel(x)),
        Layer::UpsampleBilinear2 => upsample_bilinear2(x),
    }
}

/// Immutable layer stack. Safe to share across threads; `forward` keeps all
/// intermediate state local to the call.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input: Shape,
    layers: Vec<Layer>,
}

impl Network {
    /// Validates shape chaining. The first layer must be [`Layer::Input`].
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let input = match layers.first() {
            Some(&Layer::Input {
                channels,
                height,
                width,
            }) => Shape {
                channels,
                height: (height > 0).then_some(height),
                width: (width > 0).then_some(width),
            },
            _ => return Err(Error::Shape("network must start with an input layer".into())),
        };
        let mut s = input;
        for l in &layers[1..] {
            s = propagate(l, s)?;
        }
        let mut ids: Vec<u32> = layers
            .iter()
            .filter_map(|l| match l {
                Layer::Branch { id, .. } => Some(*id),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Shape("duplicate branch id".into()));
        }
        Ok(Network { input, layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn output_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .layers
            .iter()
            .filter_map(|l| match l {
                Layer::Branch { id, .. } => Some(Layer::branch_name(*id)),
                _ => None,
            })
            .collect();
        names.push(FINAL_OUTPUT.to_string());
        names
    }

    fn check_input(&self, x: &Tensor3) -> Result<()> {
        let s = self.input;
        let ok = x.channels() == s.channels
            && s.height.is_none_or(|h| h == x.height())
            && s.width.is_none_or(|w| w == x.width());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "network input is {}x{:?}x{:?}, got {:?}",
                s.channels,
                s.height,
                s.width,
                x.shape()
            )))
        }
    }

    /// Runs every layer; returns branch outputs in declaration order followed by
    /// the final main-stream tensor under [`FINAL_OUTPUT`].
    pub fn forward(&self, input: &Tensor3) -> Result<Vec<(String, Tensor3)>> {
        self.run(input, None)
    }

    /// Like [`forward`](Self::forward) but also records `(kind, shape)` after every
    /// main-stream layer.
    pub fn forward_traced(
        &self,
        input: &Tensor3,
    ) -> Result<(Vec<(String, Tensor3)>, Vec<(&'static str, (usize, usize, usize))>)> {
        let mut trace = Vec::new();
        let outs = self.run(input, Some(&mut trace))?;
        Ok((outs, trace))
    }

    fn run(
        &self,
        input: &Tensor3,
        mut trace: Option<&mut Vec<(&'static str, (usize, usize, usize))>>,
    ) -> Result<Vec<(String, Tensor3)>> {
        self.check_input(input)?;
        let mut outputs = Vec::new();
        let mut x = input.clone();
        for layer in &self.layers[1..] {
            if let Layer::Branch { id, layers } = layer {
                let mut b = x.clone();
                for l in layers {
                    b = apply(l, &b)?;
                }
                outputs.push((Layer::branch_name(*id), b));
                continue;
            }
            x = apply(layer, &x)?;
            if let Some(t) = trace.as_deref_mut() {
                t.push((layer.kind(), x.shape()));
            }
        }
        outputs.push((FINAL_OUTPUT.to_string(), x));
        Ok(outputs)
    }

    /// Convenience lookup of one named output.
    pub fn forward_output(&self, input: &Tensor3, name: &str) -> Result<Tensor3> {
        self.forward(input)?
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Shape(format!("network has no output named {name}")))
    }
}
