//! `CRVW1` weight files.
//!
//! ```text
//! magic        5 bytes  "CRVW1"
//! layer_count  u32      number of layer records that follow (branch bodies included)
//! record:
//!   tag        u8
//!   ndims      u32
//!   dims       ndims x u32
//!   nfloats    u32
//!   floats     nfloats x f32
//! ```
//!
//! All integers and floats are little-endian. Tags and their dims:
//!
//! | tag | layer               | dims                      | floats                      |
//! |-----|---------------------|---------------------------|-----------------------------|
//! | 0   | input               | `[c, h, w]` (0 = any)     | none                        |
//! | 1   | conv                | `[k, k, in, out]`         | `out*in*k*k` weights, `out` bias |
//! | 2   | relu                | `[]`                      | none                        |
//! | 3   | maxpool2            | `[]`                      | none                        |
//! | 4   | fully connected     | `[in, out]`               | `out*in` weights, `out` bias |
//! | 5   | batchnorm_inference | `[c]`                     | mean, var, gamma, beta (`4c`) |
//! | 6   | sigmoid             | `[]`                      | none                        |
//! | 7   | softmax_channel     | `[]`                      | none                        |
//! | 8   | upsample_bilinear2  | `[]`                      | none                        |
//! | 9   | dropout             | `[]`                      | `[ratio]`                   |
//! | 10  | branch              | `[id, n]`                 | none; the next `n` records form the branch |

use std::path::Path;

use super::network::{Layer, Network};
use crate::error::{Error, Result};
use crate::imagecore::pnm::write_atomic;

pub const MAGIC: &[u8; 5] = b"CRVW1";

const TAG_INPUT: u8 = 0;
const TAG_CONV: u8 = 1;
const TAG_RELU: u8 = 2;
const TAG_POOL: u8 = 3;
const TAG_FC: u8 = 4;
const TAG_BN: u8 = 5;
const TAG_SIGMOID: u8 = 6;
const TAG_SOFTMAX: u8 = 7;
const TAG_UPSAMPLE: u8 = 8;
const TAG_DROPOUT: u8 = 9;
const TAG_BRANCH: u8 = 10;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u8(&mut self) -> Result<u8> {
        self.take(1)
            .map(|b| b[0])
            .ok_or_else(|| Error::Truncated("layer tag".into()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::Truncated(what.to_string()))
    }
}

struct Record {
    tag: u8,
    dims: Vec<usize>,
    floats: Vec<f32>,
}

fn read_record(r: &mut Reader) -> Result<Record> {
    let tag = r.u8()?;
    let ndims = r.u32("dim count")? as usize;
    if ndims > 16 {
        return Err(Error::Format(format!("implausible dim count {ndims}")));
    }
    let dims = (0..ndims)
        .map(|_| r.u32("dims").map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let nfloats = r.u32("float count")? as usize;
    let expected = expected_floats(tag, &dims)?;
    if nfloats != expected {
        return Err(Error::Shape(format!(
            "layer tag {tag} with dims {dims:?} needs {expected} floats, header declares {nfloats}"
        )));
    }
    let raw = r.take(nfloats * 4).ok_or_else(|| {
        Error::Shape(format!(
            "layer tag {tag} with dims {dims:?} needs {expected} floats, payload is short"
        ))
    })?;
    let floats = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Record { tag, dims, floats })
}

fn expected_floats(tag: u8, dims: &[usize]) -> Result<usize> {
    let want = |n: usize| -> Result<()> {
        if dims.len() == n {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "layer tag {tag} needs {n} dims, got {}",
                dims.len()
            )))
        }
    };
    match tag {
        TAG_INPUT => want(3).map(|_| 0),
        TAG_CONV => {
            want(4)?;
            if dims[0] != dims[1] {
                return Err(Error::Format("non-square conv kernel".into()));
            }
            Ok(dims[3] * dims[2] * dims[0] * dims[1] + dims[3])
        }
        TAG_FC => want(2).map(|_| dims[0] * dims[1] + dims[1]),
        TAG_BN => want(1).map(|_| 4 * dims[0]),
        TAG_DROPOUT => want(0).map(|_| 1),
        TAG_BRANCH => want(2).map(|_| 0),
        TAG_RELU | TAG_POOL | TAG_SIGMOID | TAG_SOFTMAX | TAG_UPSAMPLE => want(0).map(|_| 0),
        other => Err(Error::Format(format!("unknown layer tag {other}"))),
    }
}

fn to_layer(rec: Record) -> Layer {
    let d = &rec.dims;
    let f = rec.floats;
    match rec.tag {
        TAG_INPUT => Layer::Input {
            channels: d[0],
            height: d[1],
            width: d[2],
        },
        TAG_CONV => {
            let n = d[3] * d[2] * d[0] * d[0];
            Layer::Conv {
                kernel: d[0],
                in_channels: d[2],
                out_channels: d[3],
                weights: f[..n].to_vec(),
                bias: f[n..].to_vec(),
            }
        }
        TAG_FC => {
            let n = d[0] * d[1];
            Layer::FullyConnected {
                inputs: d[0],
                outputs: d[1],
                weights: f[..n].to_vec(),
                bias: f[n..].to_vec(),
            }
        }
        TAG_BN => {
            let c = d[0];
            Layer::BatchNorm {
                mean: f[..c].to_vec(),
                var: f[c..2 * c].to_vec(),
                gamma: f[2 * c..3 * c].to_vec(),
                beta: f[3 * c..].to_vec(),
            }
        }
        TAG_RELU => Layer::Relu,
        TAG_POOL => Layer::MaxPool2,
        TAG_SIGMOID => Layer::Sigmoid,
        TAG_SOFTMAX => Layer::SoftmaxChannel,
        TAG_UPSAMPLE => Layer::UpsampleBilinear2,
        TAG_DROPOUT => Layer::Dropout { ratio: f[0] },
        _ => unreachable!("branch records are assembled by the caller"),
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<Network> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("missing CRVW1 magic".into()));
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let count = r.u32("layer count")? as usize;
    let mut layers = Vec::new();
    let mut read = 0;
    while read < count {
        let rec = read_record(&mut r)?;
        read += 1;
        if rec.tag == TAG_BRANCH {
            let (id, n) = (rec.dims[0] as u32, rec.dims[1]);
            if read + n > count {
                return Err(Error::Format("branch extends past the layer count".into()));
            }
            let mut body = Vec::with_capacity(n);
            for _ in 0..n {
                let inner = read_record(&mut r)?;
                if inner.tag == TAG_BRANCH {
                    return Err(Error::Format("nested branch".into()));
                }
                body.push(to_layer(inner));
            }
            read += n;
            layers.push(Layer::Branch { id, layers: body });
        } else {
            layers.push(to_layer(rec));
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Shape(format!(
            "{} trailing bytes after the last layer",
            bytes.len() - r.pos
        )));
    }
    Network::new(layers)
}

fn put_record(out: &mut Vec<u8>, tag: u8, dims: &[usize], floats: &[&[f32]]) {
    out.push(tag);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let n: usize = floats.iter().map(|f| f.len()).sum();
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for block in floats {
        for v in *block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

fn put_layer(out: &mut Vec<u8>, layer: &Layer) -> usize {
    match layer {
        Layer::Input {
            channels,
            height,
            width,
        } => put_record(out, TAG_INPUT, &[*channels, *height, *width], &[]),
        Layer::Conv {
            kernel,
            in_channels,
            out_channels,
            weights,
            bias,
        } => put_record(
            out,
            TAG_CONV,
            &[*kernel, *kernel, *in_channels, *out_channels],
            &[weights, bias],
        ),
        Layer::Relu => put_record(out, TAG_RELU, &[], &[]),
        Layer::MaxPool2 => put_record(out, TAG_POOL, &[], &[]),
        Layer::FullyConnected {
            inputs,
            outputs,
            weights,
            bias,
        } => put_record(out, TAG_FC, &[*inputs, *outputs], &[weights, bias]),
        Layer::BatchNorm {
            mean,
            var,
            gamma,
            beta,
        } => put_record(out, TAG_BN, &[mean.len()], &[mean, var, gamma, beta]),
        Layer::Sigmoid => put_record(out, TAG_SIGMOID, &[], &[]),
        Layer::SoftmaxChannel => put_record(out, TAG_SOFTMAX, &[], &[]),
        Layer::UpsampleBilinear2 => put_record(out, TAG_UPSAMPLE, &[], &[]),
        Layer::Dropout { ratio } => put_record(out, TAG_DROPOUT, &[], &[&[*ratio]]),
        Layer::Branch { id, layers } => {
            put_record(out, TAG_BRANCH, &[*id as usize, layers.len()], &[]);
            return 1 + layers.iter().map(|l| put_layer(out, l)).sum::<usize>();
        }
    }
    1
}

pub fn encode_weights(net: &Network) -> Vec<u8> {
    let mut body = Vec::new();
    let count: usize = net.layers().iter().map(|l| put_layer(&mut body, l)).sum();
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&(count as u32).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn load_weights(path: &Path) -> Result<Network> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

pub fn save_weights(net: &Network, path: &Path) -> Result<()> {
    write_atomic(path, &encode_weights(net))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::zoo::{fcn_net, patch_net, Init};

    #[test]
    fn round_trip_is_structural_identity() {
        for net in [
            patch_net(Init::Random(3)),
            fcn_net([4, 6, 8], Init::Random(4)),
        ] {
            let back = decode_weights(&encode_weights(&net)).unwrap();
            assert_eq!(back, net);
        }
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_weights(&patch_net(Init::Zeros));
        bytes[..5].copy_from_slice(b"XXXX1");
        assert!(matches!(decode_weights(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn short_conv_payload_is_shape_error() {
        let conv = Layer::Conv {
            kernel: 3,
            in_channels: 8,
            out_channels: 16,
            weights: vec![0.5; 3 * 3 * 8 * 16],
            bias: vec![0.0; 16],
        };
        let net = Network::new(vec![
            Layer::Input {
                channels: 8,
                height: 0,
                width: 0,
            },
            conv,
        ])
        .unwrap();
        let bytes = encode_weights(&net);
        // Drop the last seven floats from the payload.
        let short = &bytes[..bytes.len() - 7 * 4];
        assert!(matches!(decode_weights(short), Err(Error::Shape(_))));
        // Or keep the payload consistent with a float count that is seven short.
        let mut body = MAGIC.to_vec();
        body.extend_from_slice(&2u32.to_le_bytes());
        put_record(&mut body, TAG_INPUT, &[8, 0, 0], &[]);
        let floats = vec![0.0f32; 3 * 3 * 8 * 16 + 16 - 7];
        put_record(&mut body, TAG_CONV, &[3, 3, 8, 16], &[&floats]);
        assert!(matches!(decode_weights(&body), Err(Error::Shape(_))));
    }
}
