//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.
//!
//! Run with `cargo test -p curvseg --test acceptance` (add `--release` for speed).

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvseg::evalbench::{
    average_prf, evaluate_corpus, formula_on_averages, generate_corpus, prf, sherd_seed, synth_design,
    synth_sherd, CorpusConfig, DesignParams, PrfScore, Segmenter, SynthParams,
};
use curvseg::imagecore::{count_components8, distance_transform, thin};
use curvseg::inference::zoo::{patch_net, Init, PATCH_SIZE};
use curvseg::inference::{
    batchnorm_inference, conv2d, fully_connected, maxpool2, relu, sigmoid, softmax_channel, Tensor3, BN_EPSILON,
};
use curvseg::matching::{match_design, FieldKind, PointSet, RigidTransform, SearchParams, TransformGrid};
use curvseg::pipeline::{segment, SegmentConfig};
use curvseg::scorer::{fuse, fused_logits, ScaleScores, TwoChannel};
use curvseg::skeleton::{probability_map, SkeletonSet};
use curvseg::width::recover_width;
use curvseg::{BinaryMap, DepthImage, FloatMap};

// Tolerances.
const TOL_PROB_MAP: f64 = 1e-9;
const TOL_CHAMFER: f64 = 1e-6;
const TOL_SOFTMAX_SUM: f64 = 1e-9;
const TOL_FUSE: f64 = 1e-6;
const TOL_LAYER: f64 = 1e-6;
const TOL_PRF: f64 = 1e-12;
const MAX_PROB_MAP_SECS: f64 = 5.0;
const MIN_COMPONENT_KEEP: f64 = 0.95;
const MIN_NOISELESS_F: f64 = 0.95;
const MIN_F_MARGIN: f64 = 0.05;
const MIN_RANK1: f64 = 0.8;
const MAX_SUITE_SECS: f64 = 300.0;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, n: usize, ok: bool, what: &str, detail: String) {
        println!("criterion {n} {}: {what} ({detail})", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_mask(r: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMap {
    BinaryMap::from_fn(w, h, |_, _| r.random_bool(density))
}

/// Blobby mask: a handful of random filled discs.
fn blob_mask(r: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryMap {
    let discs: Vec<(f64, f64, f64)> = (0..r.random_range(1..6))
        .map(|_| {
            (
                r.random_range(0.0..w as f64),
                r.random_range(0.0..h as f64),
                r.random_range(1.5..7.0),
            )
        })
        .collect();
    BinaryMap::from_fn(w, h, |x, y| {
        discs
            .iter()
            .any(|&(cx, cy, rad)| (x as f64 - cx).hypot(y as f64 - cy) <= rad)
    })
}

fn brute_nearest(mask: &BinaryMap, x: usize, y: usize) -> f64 {
    mask.points()
        .iter()
        .map(|&(px, py)| (px as f64 - x as f64).hypot(py as f64 - y as f64))
        .fold(f64::INFINITY, f64::min)
}

fn criterion_1(rep: &mut Report) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut r = rng(101);
    let mut n = 0;
    while n < 100 {
        let skel = thin(&blob_mask(&mut r, 32, 32));
        if skel.count() == 0 {
            continue;
        }
        n += 1;
        let d = probability_map(&SkeletonSet::from_mask(&skel), (32, 32)).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let want = 1.0 / (1.0 + brute_nearest(&skel, x, y));
                worst = worst.max((d.get(x, y) - want).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    rep.check(
        1,
        worst <= TOL_PROB_MAP && secs < MAX_PROB_MAP_SECS,
        "probability map equals brute-force 1/(1+d) on 100 random 32x32 skeletons",
        format!("max err {worst:.1e} <= {TOL_PROB_MAP:.0e}, {secs:.2}s < {MAX_PROB_MAP_SECS}s"),
    );
}

fn criterion_2(rep: &mut Report) {
    let mut r = rng(202);
    let mut mismatches = 0;
    let mut n = 0;
    while n < 100 {
        let density = r.random_range(0.01..0.5);
        let m = random_mask(&mut r, 16, 16, density);
        if m.count() == 0 {
            continue;
        }
        n += 1;
        let dt = distance_transform(&m);
        for y in 0..16 {
            for x in 0..16 {
                if *dt.get(x, y) != brute_nearest(&m, x, y) {
                    mismatches += 1;
                }
            }
        }
    }
    rep.check(
        2,
        mismatches == 0,
        "distance transform equals O(N^2) nearest-point search on 100 random 16x16 masks",
        format!("{mismatches} mismatching pixels, exact equality"),
    );
}

/// Line-by-line transcription of the width recovery algorithm, scanning the
/// whole image for each neighbourhood.
fn width_oracle(depth: &FloatMap, p: &[(usize, usize)], scales: &curvseg::scorer::ScaleMap) -> BinaryMap {
    let (w, h) = depth.dims();
    let mut c = BinaryMap::new(w, h);
    for &(x, y) in p {
        let s = *scales.get(x, y) as u32;
        let radius = 2f64.powi(s as i32);
        let mut hood = Vec::new();
        for yy in 0..h {
            for xx in 0..w {
                let dx = xx as f64 - x as f64;
                let dy = yy as f64 - y as f64;
                if (dx * dx + dy * dy).sqrt() <= radius {
                    hood.push((xx, yy));
                }
            }
        }
        let mut m = f64::INFINITY;
        for &(xx, yy) in &hood {
            if *depth.get(xx, yy) < m {
                m = *depth.get(xx, yy);
            }
        }
        let level = (depth.get(x, y) + m) / 2.0;
        for &(xx, yy) in &hood {
            if *depth.get(xx, yy) >= level {
                c.set(xx, yy, true);
            }
        }
    }
    c
}

fn criterion_3(rep: &mut Report) {
    let mut r = rng(303);
    let mut mismatched = 0;
    let mut uncovered = 0;
    for _ in 0..50 {
        let depth = FloatMap::from_fn(32, 32, |_, _| r.random_range(-1.0..1.0));
        let scales = curvseg::scorer::ScaleMap::from_fn(32, 32, |_, _| r.random_range(1..=3u8));
        let n = r.random_range(1..25);
        let mut pts: Vec<(usize, usize)> = (0..n).map(|_| (r.random_range(0..32), r.random_range(0..32))).collect();
        pts.sort_by_key(|&(x, y)| (y, x));
        pts.dedup();
        let p = SkeletonSet::from_points(32, 32, pts.clone()).unwrap();
        let d = DepthImage::new(depth.clone(), 0.1).unwrap();
        let got = recover_width(&d, &p, &scales).unwrap();
        if got != width_oracle(&depth, &pts, &scales) {
            mismatched += 1;
        }
        if pts.iter().any(|&(x, y)| !*got.get(x, y)) {
            uncovered += 1;
        }
    }
    rep.check(
        3,
        mismatched == 0 && uncovered == 0,
        "width recovery matches a literal transcription on 50 seeded 32x32 instances, skeleton inside C",
        format!("{mismatched} mismatching instances, {uncovered} with skeleton outside C"),
    );
}

fn brute_grid_chamfer(u: &PointSet, v: &PointSet, params: &SearchParams) -> f64 {
    let grid = TransformGrid::new(v, params).unwrap();
    let c = u.centroid().unwrap();
    let mut best = f64::INFINITY;
    for i in 0..grid.rotations {
        for jx in 0..grid.nx {
            for jy in 0..grid.ny {
                let t = grid.transform(c, i, jx, jy);
                let sum: f64 = u
                    .points()
                    .iter()
                    .map(|&p| {
                        let (x, y) = t.apply(p);
                        v.points()
                            .iter()
                            .map(|&(vx, vy)| (x - vx).hypot(y - vy))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum();
                best = best.min(sum / u.len() as f64);
            }
        }
    }
    best
}

fn random_points(r: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (r.random_range(0.0..extent), r.random_range(0.0..extent)))
        .collect()
}

/// Three smooth random curves, 12 mm long and sampled every 0.1 mm, in a 15 mm box.
/// At the default 0.5 mm translation pitch the rotation is only pinned to 1 deg
/// when the set has a sherd-sized lever arm.
fn random_curves(r: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for _ in 0..3 {
        let (mut x, mut y) = (r.random_range(0.0..15.0), r.random_range(0.0..15.0));
        let mut heading = r.random_range(0.0..TAU);
        let mut turn: f64 = r.random_range(-0.1..0.1);
        for _ in 0..120 {
            pts.push((x, y));
            turn = (turn + r.random_range(-0.05..0.05)).clamp(-0.15, 0.15);
            heading += turn;
            x += 0.1 * heading.cos();
            y += 0.1 * heading.sin();
        }
    }
    pts
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn criterion_4(rep: &mut Report) {
    let exact = SearchParams {
        exact: true,
        field: FieldKind::Exact,
        ..SearchParams::default()
    };
    let mut worst = 0.0f64;
    for seed in 0..25u64 {
        let mut r = rng(400 + seed);
        let nv = r.random_range(5..=25);
        let nu = r.random_range(3..=15);
        let v = PointSet::new("v", random_points(&mut r, nv, 5.0)).unwrap();
        let u = PointSet::new("u", random_points(&mut r, nu, 3.0)).unwrap();
        let got = match_design(&u, &v, &exact).unwrap().distance;
        worst = worst.max((got - brute_grid_chamfer(&u, &v, &exact)).abs());
    }

    let params = SearchParams::default();
    let step = params.rot_step_deg.to_radians();
    let mut planted_fail = Vec::new();
    let mut worst_d = 0.0f64;
    let mut worst_rot = 0.0f64;
    for seed in 0..20u64 {
        let mut r = rng(450 + seed);
        let v = PointSet::new("v", random_curves(&mut r)).unwrap();
        let theta = r.random_range(0.0..TAU);
        let t = RigidTransform::new(theta, r.random_range(-20.0..20.0), r.random_range(-20.0..20.0));
        let subset: Vec<(f64, f64)> = v
            .points()
            .iter()
            .filter(|_| r.random_bool(0.5))
            .map(|&p| t.apply(p))
            .collect();
        let u = PointSet::new("u", subset).unwrap();
        let m = match_design(&u, &v, &params).unwrap();
        let gap = angle_gap(m.transform.rotation(), -theta);
        worst_d = worst_d.max(m.distance);
        worst_rot = worst_rot.max(gap);
        if m.distance > params.pitch || gap > step + 1e-9 {
            planted_fail.push(seed);
        }
    }
    rep.check(
        4,
        worst <= TOL_CHAMFER && planted_fail.is_empty(),
        "grid search equals exhaustive brute force on 25 instances; planted subsets recovered on 20 seeds",
        format!(
            "max |search - brute| {worst:.1e} <= {TOL_CHAMFER:.0e}; planted max d {worst_d:.3} <= {} mm, \
             max rotation error {:.3} <= {} deg, failing seeds {planted_fail:?}",
            params.pitch,
            worst_rot.to_degrees(),
            params.rot_step_deg
        ),
    );
}

/// Factor-2 decoder as a transposed convolution: edge-pad by one, stride-2
/// scatter with the 4x4 bilinear kernel, keep `2h x 2w` starting at offset 3.
fn psi(x: &FloatMap) -> FloatMap {
    let k1 = [0.25, 0.75, 0.75, 0.25];
    let (w, h) = x.dims();
    let (pw, ph) = (w + 2, h + 2);
    let pad = |i: usize, j: usize| *x.get(j.saturating_sub(1).min(w - 1), i.saturating_sub(1).min(h - 1));
    let (yw, yh) = (2 * pw + 2, 2 * ph + 2);
    let mut y = vec![0.0; yw * yh];
    for i in 0..ph {
        for j in 0..pw {
            let v = pad(i, j);
            for a in 0..4 {
                for b in 0..4 {
                    y[(2 * i + a) * yw + 2 * j + b] += v * k1[a] * k1[b];
                }
            }
        }
    }
    FloatMap::from_fn(2 * w, 2 * h, |c, r| y[(r + 3) * yw + c + 3])
}

fn add(a: &FloatMap, b: &FloatMap) -> FloatMap {
    FloatMap::from_fn(a.width(), a.height(), |x, y| a.get(x, y) + b.get(x, y))
}

fn criterion_5(rep: &mut Report) {
    let mut r = rng(505);
    let (mut out_of_range, mut worst_sum, mut worst_fuse) = (0, 0.0f64, 0.0f64);
    for _ in 0..30 {
        let (w, h): (usize, usize) = (r.random_range(5..50), r.random_range(5..50));
        let (w1, h1) = (w.div_ceil(8) * 4, h.div_ceil(8) * 4);
        let mut rand_map = |k: usize| {
            FloatMap::from_fn(w1 >> k, h1 >> k, |_, _| r.random_range(-6.0..6.0))
        };
        let maps: Vec<TwoChannel> = (0..3)
            .map(|k| TwoChannel {
                background: rand_map(k),
                skeleton: rand_map(k),
            })
            .collect();
        let scores = ScaleScores {
            width: w,
            height: h,
            maps: maps.clone().try_into().unwrap(),
        };
        let heat = fuse(&scores).unwrap();
        out_of_range += heat.data().iter().filter(|v| !(0.0..=1.0).contains(*v)).count();

        let logits = fused_logits(&scores).unwrap();
        let mut data = logits.background.data().to_vec();
        data.extend_from_slice(logits.skeleton.data());
        let sm = softmax_channel(&Tensor3::from_vec(2, h, w, data).unwrap());
        for (a, b) in sm.channel(0).iter().zip(sm.channel(1)) {
            worst_sum = worst_sum.max((a + b - 1.0).abs());
        }

        let compose = |ch: fn(&TwoChannel) -> &FloatMap| {
            let inner = add(ch(&maps[1]), &psi(ch(&maps[2])));
            let full = psi(&add(ch(&maps[0]), &psi(&inner)));
            FloatMap::from_fn(w, h, |x, y| *full.get(x, y))
        };
        let s = compose(|t| &t.skeleton);
        let b = compose(|t| &t.background);
        for y in 0..h {
            for x in 0..w {
                let (es, eb) = (s.get(x, y).exp(), b.get(x, y).exp());
                worst_fuse = worst_fuse.max((heat.get(x, y) - es / (es + eb)).abs());
            }
        }
    }
    rep.check(
        5,
        out_of_range == 0 && worst_sum <= TOL_SOFTMAX_SUM && worst_fuse <= TOL_FUSE,
        "fused heat in [0,1], channel softmax sums to 1, fusion equals composed transposed-conv oracle",
        format!(
            "{out_of_range} values outside [0,1]; max |sum-1| {worst_sum:.1e} <= {TOL_SOFTMAX_SUM:.0e}; \
             max fuse err {worst_fuse:.1e} <= {TOL_FUSE:.0e}"
        ),
    );
}

fn random_tensor(r: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor3 {
    Tensor3::from_vec(c, h, w, (0..c * h * w).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap()
}

fn random_f32(r: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| r.random_range(-1.0f32..1.0)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_6(rep: &mut Report) {
    let mut r = rng(606);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (ci, co) = (r.random_range(1..4), r.random_range(1..4));
        let (h, w) = (r.random_range(3..12), r.random_range(3..12));
        let k = [1, 3, 5][r.random_range(0..3)];
        let pad = r.random_range(0..=k / 2);
        let x = random_tensor(&mut r, ci, h, w);
        let wt = random_f32(&mut r, co * ci * k * k);
        let bias = random_f32(&mut r, co);
        let got = conv2d(&x, &wt, &bias, k, pad).unwrap();
        let (oh, ow) = (h + 2 * pad - k + 1, w + 2 * pad - k + 1);
        let mut want = Vec::new();
        for o in 0..co {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias[o] as f64;
                    for i in 0..ci {
                        for ky in 0..k {
                            for kx in 0..k {
                                let sy = oy as isize + ky as isize - pad as isize;
                                let sx = ox as isize + kx as isize - pad as isize;
                                if sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < w {
                                    acc += wt[((o * ci + i) * k + ky) * k + kx] as f64
                                        * x.at(i, sy as usize, sx as usize);
                                }
                            }
                        }
                    }
                    want.push(acc);
                }
            }
        }
        worst = worst.max(max_diff(got.data(), &want));

        let pooled = maxpool2(&x);
        let mut want = Vec::new();
        for c in 0..ci {
            for py in 0..h / 2 {
                for px in 0..w / 2 {
                    let mut m = f64::NEG_INFINITY;
                    for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        m = m.max(x.at(c, 2 * py + dy, 2 * px + dx));
                    }
                    want.push(m);
                }
            }
        }
        worst = worst.max(max_diff(pooled.data(), &want));

        let n_out = r.random_range(1..6);
        let fw = random_f32(&mut r, n_out * ci * h * w);
        let fb = random_f32(&mut r, n_out);
        let got = fully_connected(&x, &fw, &fb).unwrap();
        let want: Vec<f64> = (0..n_out)
            .map(|o| {
                let mut acc = fb[o] as f64;
                for (j, v) in x.data().iter().enumerate() {
                    acc += fw[o * x.data().len() + j] as f64 * v;
                }
                acc
            })
            .collect();
        worst = worst.max(max_diff(got.data(), &want));

        let want: Vec<f64> = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        worst = worst.max(max_diff(relu(&x).data(), &want));
        let want: Vec<f64> = x.data().iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect();
        worst = worst.max(max_diff(sigmoid(&x).data(), &want));

        let sm = softmax_channel(&x);
        let plane = h * w;
        let mut want = vec![0.0; ci * plane];
        for p in 0..plane {
            let total: f64 = (0..ci).map(|c| x.data()[c * plane + p].exp()).sum();
            for c in 0..ci {
                want[c * plane + p] = x.data()[c * plane + p].exp() / total;
            }
        }
        worst = worst.max(max_diff(sm.data(), &want));

        let (mean, gamma, beta) = (random_f32(&mut r, ci), random_f32(&mut r, ci), random_f32(&mut r, ci));
        let var: Vec<f32> = (0..ci).map(|_| r.random_range(0.1f32..2.0)).collect();
        let got = batchnorm_inference(&x, &mean, &var, &gamma, &beta).unwrap();
        let want: Vec<f64> = x
            .data()
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let c = j / plane;
                (v - mean[c] as f64) / (var[c] as f64 + BN_EPSILON).sqrt() * gamma[c] as f64 + beta[c] as f64
            })
            .collect();
        worst = worst.max(max_diff(got.data(), &want));
    }

    let net = patch_net(Init::Random(6));
    let input = random_tensor(&mut r, 1, PATCH_SIZE, PATCH_SIZE);
    let (_, trace) = net.forward_traced(&input).unwrap();
    let expected_trace = [
        ("conv3x3", (32, 45, 45)),
        ("maxpool2", (32, 22, 22)),
        ("batchnorm_inference", (32, 22, 22)),
        ("conv3x3", (64, 22, 22)),
        ("maxpool2", (64, 11, 11)),
        ("batchnorm_inference", (64, 11, 11)),
        ("conv3x3", (128, 11, 11)),
        ("maxpool2", (128, 5, 5)),
        ("fc", (512, 1, 1)),
        ("dropout", (512, 1, 1)),
        ("fc", (2, 1, 1)),
        ("sigmoid", (2, 1, 1)),
    ];
    let mut shapes: Vec<(usize, usize, usize)> = trace.iter().map(|t| t.1).collect();
    shapes.dedup();
    let listed = [
        (32, 45, 45),
        (32, 22, 22),
        (64, 22, 22),
        (64, 11, 11),
        (128, 11, 11),
        (128, 5, 5),
        (512, 1, 1),
        (2, 1, 1),
    ];
    let trace_ok = trace == expected_trace && shapes == listed && trace.last().map(|t| t.0) == Some("sigmoid");
    rep.check(
        6,
        worst <= TOL_LAYER && trace_ok,
        "conv/pool/fc/activation/batch-norm layers match naive loops; 45x45 patch net shape trace",
        format!(
            "max err {worst:.1e} <= {TOL_LAYER:.0e}; trace {}",
            shapes
                .iter()
                .map(|(c, h, w)| format!("{c}x{h}x{w}"))
                .collect::<Vec<_>>()
                .join(" -> ")
                + " -> sigmoid"
        ),
    );
}

fn criterion_7(rep: &mut Report, masks: &[&BinaryMap]) {
    let (mut not_idem, mut not_subset, mut kept) = (0, 0, 0);
    for m in masks {
        let t = thin(m);
        if thin(&t) != t {
            not_idem += 1;
        }
        if !t.is_subset_of(m) {
            not_subset += 1;
        }
        if count_components8(&t) == count_components8(m) {
            kept += 1;
        }
    }
    let frac = kept as f64 / masks.len() as f64;
    rep.check(
        7,
        not_idem == 0 && not_subset == 0 && frac >= MIN_COMPONENT_KEEP,
        "thinning is idempotent, a subset, and keeps 8-connected components on the corpus masks",
        format!(
            "{} masks, {not_idem} not idempotent, {not_subset} not subsets, components kept on {:.1}% >= {:.0}%",
            masks.len(),
            100.0 * frac,
            100.0 * MIN_COMPONENT_KEEP
        ),
    );
}

fn criterion_8(rep: &mut Report) {
    let cfg = SegmentConfig::default();
    let scores: Vec<PrfScore> = (0..20)
        .map(|i| {
            let design = synth_design(i as u64, &DesignParams::default()).unwrap();
            let s = synth_sherd(&design, &SynthParams::noiseless(sherd_seed(0, i, 0))).unwrap();
            prf(&segment(&s.depth, &cfg).unwrap().seg, &s.gt_mask).unwrap()
        })
        .collect();
    let mean = average_prf(&scores).unwrap();
    rep.check(
        8,
        mean.f_measure >= MIN_NOISELESS_F,
        "pipeline on 20 noiseless flat-base sherds",
        format!(
            "mean F {:.3} >= {MIN_NOISELESS_F} (P {:.3}, R {:.3})",
            mean.f_measure, mean.precision, mean.recall
        ),
    );
}

fn criterion_9(rep: &mut Report, pipeline: &PrfScore, dog: &PrfScore) {
    rep.check(
        9,
        pipeline.f_measure >= dog.f_measure + MIN_F_MARGIN,
        "pipeline beats the DoG baseline on the default noisy corpus (20 designs x 3 sherds)",
        format!(
            "pipeline F {:.3} (P {:.3}, R {:.3}) vs DoG F {:.3} (P {:.3}, R {:.3}), margin {:.3} >= {MIN_F_MARGIN}",
            pipeline.f_measure,
            pipeline.precision,
            pipeline.recall,
            dog.f_measure,
            dog.precision,
            dog.recall,
            pipeline.f_measure - dog.f_measure
        ),
    );
}

fn criterion_10(rep: &mut Report, suite_start: Instant) {
    let start = Instant::now();
    let corpus = generate_corpus(&CorpusConfig {
        n_designs: 10,
        ..CorpusConfig::default()
    })
    .unwrap();
    let eval = evaluate_corpus(
        &corpus,
        &Segmenter::Pipeline(SegmentConfig::default()),
        Some(&SearchParams::default()),
    )
    .unwrap();
    let cmc = eval.cmc.unwrap_or_default();
    let monotone = cmc.windows(2).all(|w| w[0] <= w[1]);
    let rank1 = cmc.first().copied().unwrap_or(0.0);
    let last = cmc.last().copied().unwrap_or(0.0);
    let secs = start.elapsed().as_secs_f64();
    let suite = suite_start.elapsed().as_secs_f64();
    rep.check(
        10,
        rank1 >= MIN_RANK1 && monotone && last == 1.0 && suite < MAX_SUITE_SECS,
        "matching 30 sherds against 10 designs",
        format!(
            "CMC {:?}, rank-1 {rank1:.3} >= {MIN_RANK1}, monotone {monotone}, ends at {last}; \
             matching {secs:.1}s, suite so far {suite:.1}s < {MAX_SUITE_SECS}s",
            cmc.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    );
}

fn criterion_11(rep: &mut Report, dog_scores: &[PrfScore]) {
    let mut r = rng(1111);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (w, h) = (r.random_range(1..20), r.random_range(1..20));
        let (dp, dg) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let s = prf(&random_mask(&mut r, w, h, dp), &random_mask(&mut r, w, h, dg)).unwrap();
        let (p, rc) = (s.precision, s.recall);
        if p + rc > 0.0 {
            worst = worst.max((s.f_measure - 2.0 * p * rc / (p + rc)).abs());
        }
    }

    let avg = average_prf(dog_scores).unwrap();
    let on_avg = formula_on_averages(dog_scores).unwrap();
    let n = dog_scores.len() as f64;
    let mean_f = dog_scores.iter().map(|s| s.f_measure).sum::<f64>() / n;
    let mean_p = dog_scores.iter().map(|s| s.precision).sum::<f64>() / n;
    let mean_r = dog_scores.iter().map(|s| s.recall).sum::<f64>() / n;
    let harmonic = 2.0 * mean_p * mean_r / (mean_p + mean_r);
    let averaging_ok = (avg.f_measure - mean_f).abs() <= TOL_PRF
        && (on_avg.f_measure - harmonic).abs() <= TOL_PRF
        && (avg.f_measure - on_avg.f_measure).abs() > 1e-3;

    // Reference DoG and proposed rows: F from their averaged P and R
    let harmonic_of = |p: f64, r: f64| 2.0 * p * r / (p + r);
    let dog_row = harmonic_of(0.366, 0.774);
    let proposed_row = harmonic_of(0.660, 0.827);
    let reference_ok = (dog_row - 0.497).abs() < 5e-4 && (proposed_row - 0.734).abs() < 5e-4;

    rep.check(
        11,
        worst <= TOL_PRF && averaging_ok && reference_ok,
        "F equals 2PR/(P+R); per-image averaging differs from the formula on averaged P and R",
        format!(
            "max |F-2PR/(P+R)| {worst:.1e} <= {TOL_PRF:.0e}; DoG corpus per-image F {:.3} vs formula on averages {:.3}; \
             reference rows give {dog_row:.3} (per-image 0.490) and {proposed_row:.3} (per-image 0.731)",
            avg.f_measure, on_avg.f_measure
        ),
    );
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    let mut rep = Report { failed: 0 };
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep);

    let corpus = generate_corpus(&CorpusConfig::default()).unwrap();
    let masks: Vec<&BinaryMap> = corpus.items.iter().map(|i| &i.gt_mask).collect();
    criterion_7(&mut rep, &masks);
    criterion_8(&mut rep);
    let pipeline = evaluate_corpus(&corpus, &Segmenter::Pipeline(SegmentConfig::default()), None).unwrap();
    let dog = evaluate_corpus(&corpus, &Segmenter::Dog, None).unwrap();
    criterion_9(&mut rep, &pipeline.mean, &dog.mean);
    criterion_10(&mut rep, suite_start);
    let dog_scores: Vec<PrfScore> = dog.per_image.iter().map(|(_, s)| *s).collect();
    criterion_11(&mut rep, &dog_scores);

    println!(
        "acceptance: {} of 11 criteria passed in {:.1}s",
        11 - rep.failed,
        suite_start.elapsed().as_secs_f64()
    );
    if rep.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
