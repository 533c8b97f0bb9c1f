use super::{BinaryMap, FloatMap};
use rayon::prelude::*;

/// Exact Euclidean distance from every pixel to the nearest set pixel.
///
/// Two separable passes of the lower-envelope-of-parabolas method over squared
/// distances. All intermediate values are integers held in `f64`, so the result
/// is exact. An empty mask yields `+inf` everywhere.
pub fn distance_transform(mask: &BinaryMap) -> FloatMap {
    let (w, h) = mask.dims();
    if w == 0 || h == 0 {
        return FloatMap::new(w, h);
    }

    // Column pass: squared vertical distance to the nearest set pixel in the column.
    let mut col = vec![f64::INFINITY; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        for y in 0..h {
            if *mask.get(x, y) {
                last = Some(y);
            }
            if let Some(l) = last {
                let d = (y - l) as f64;
                col[y * w + x] = d * d;
            }
        }
        let mut next: Option<usize> = None;
        for y in (0..h).rev() {
            if *mask.get(x, y) {
                next = Some(y);
            }
            if let Some(n) = next {
                let d = (n - y) as f64;
                let i = y * w + x;
                col[i] = col[i].min(d * d);
            }
        }
    }

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w)
        .zip(col.par_chunks(w))
        .for_each(|(dst, src)| {
            let mut sites = Vec::with_capacity(w);
            let mut bounds = Vec::with_capacity(w + 1);
            envelope_row(src, dst, &mut sites, &mut bounds);
        });
    for v in &mut out {
        *v = v.sqrt();
    }
    FloatMap::from_vec(w, h, out).expect("dims match")
}

/// 1-D squared distance transform `dst[q] = min_p (q - p)^2 + f[p]` over the finite
/// entries of `f`.
fn envelope_row(f: &[f64], dst: &mut [f64], sites: &mut Vec<usize>, bounds: &mut Vec<f64>) {
    sites.clear();
    bounds.clear();
    let intersect = |p: usize, q: usize| -> f64 {
        let (pf, qf) = (p as f64, q as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    for q in 0..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            match sites.last() {
                None => {
                    sites.push(q);
                    bounds.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = intersect(p, q);
                    if s <= *bounds.last().unwrap() {
                        sites.pop();
                        bounds.pop();
                    } else {
                        sites.push(q);
                        bounds.push(s);
                        break;
                    }
                }
            }
        }
    }
    if sites.is_empty() {
        dst.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, out) in dst.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < sites.len() && bounds[k + 1] < qf {
            k += 1;
        }
        // Evaluate both neighbours at a boundary so ties never depend on rounding.
        let p = sites[k];
        let mut best = (qf - p as f64).powi(2) + f[p];
        if k + 1 < sites.len() {
            let p2 = sites[k + 1];
            best = best.min((qf - p2 as f64).powi(2) + f[p2]);
        }
        *out = best;
    }
}
