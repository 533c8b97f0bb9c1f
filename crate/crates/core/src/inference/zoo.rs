//! Builders for the two architectures the pipeline knows how to drive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{Layer, Network};

/// Side length of the refinement window.
pub const PATCH_SIZE: usize = 45;

/// Weight initialisation for freshly built networks.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zeros,
    /// Uniform in `±sqrt(3 / fan_in)`, seeded.
    Random(u64),
}

struct Filler {
    rng: Option<ChaCha8Rng>,
}

impl Filler {
    fn new(init: Init) -> Self {
        Filler {
            rng: match init {
                Init::Zeros => None,
                Init::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            },
        }
    }

    fn block(&mut self, n: usize, fan_in: usize) -> Vec<f32> {
        match &mut self.rng {
            None => vec![0.0; n],
            Some(rng) => {
                let a = (3.0 / fan_in.max(1) as f32).sqrt();
                (0..n).map(|_| rng.random_range(-a..a)).collect()
            }
        }
    }

    fn conv(&mut self, kernel: usize, in_channels: usize, out_channels: usize) -> Layer {
        let fan = in_channels * kernel * kernel;
        Layer::Conv {
            kernel,
            in_channels,
            out_channels,
            weights: self.block(out_channels * fan, fan),
            bias: self.block(out_channels, fan),
        }
    }

    fn fc(&mut self, inputs: usize, outputs: usize) -> Layer {
        Layer::FullyConnected {
            inputs,
            outputs,
            weights: self.block(inputs * outputs, inputs),
            bias: self.block(outputs, inputs),
        }
    }

    fn batchnorm(&mut self, c: usize) -> Layer {
        let random = self.rng.is_some();
        Layer::BatchNorm {
            mean: self.block(c, 1),
            var: vec![1.0; c],
            gamma: if random { vec![1.0; c] } else { vec![0.0; c] },
            beta: self.block(c, 1),
        }
    }
}

/// The 45×45 patch classifier: three conv/pool stages with batch norm, two fully
/// connected layers with dropout between them, and a sigmoid head with two outputs
/// (channel 0 is read as the skeleton probability).
pub fn patch_net(init: Init) -> Network {
    let mut f = Filler::new(init);
    let layers = vec![
        Layer::Input {
            channels: 1,
            height: PATCH_SIZE,
            width: PATCH_SIZE,
        },
        f.conv(3, 1, 32),
        Layer::MaxPool2,
        f.batchnorm(32),
        f.conv(3, 32, 64),
        Layer::MaxPool2,
        f.batchnorm(64),
        f.conv(3, 64, 128),
        Layer::MaxPool2,
        f.fc(128 * 5 * 5, 512),
        Layer::Dropout { ratio: 0.5 },
        f.fc(512, 2),
        Layer::Sigmoid,
    ];
    Network::new(layers).expect("patch net shapes chain")
}

/// Three-encoder fully convolutional scorer. Encoders 1 and 2 are two conv3x3+relu
/// pairs and a 2×2 max pool, encoder 3 has three pairs; after each encoder a 1×1
/// convolution branch emits a two-channel score map `s1`, `s2`, `s3`.
pub fn fcn_net(widths: [usize; 3], init: Init) -> Network {
    let mut f = Filler::new(init);
    let mut layers = vec![Layer::Input {
        channels: 1,
        height: 0,
        width: 0,
    }];
    let mut c_in = 1;
    for (stage, &w) in widths.iter().enumerate() {
        let convs = if stage == 2 { 3 } else { 2 };
        for i in 0..convs {
            layers.push(f.conv(3, if i == 0 { c_in } else { w }, w));
            layers.push(Layer::Relu);
        }
        layers.push(Layer::MaxPool2);
        layers.push(Layer::Branch {
            id: stage as u32 + 1,
            layers: vec![f.conv(1, w, 2)],
        });
        c_in = w;
    }
    Network::new(layers).expect("fcn shapes chain")
}
