use super::BinaryMap;

// Neighbour offsets in the order P2..P9: N, NE, E, SE, S, SW, W, NW.
const RING: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

#[inline]
fn ring(mask: &BinaryMap, x: usize, y: usize) -> [bool; 8] {
    let mut n = [false; 8];
    for (k, &(dx, dy)) in RING.iter().enumerate() {
        n[k] = *mask
            .get_signed(x as isize + dx, y as isize + dy)
            .unwrap_or(&false);
    }
    n
}

/// Number of 0 -> 1 transitions around the ring.
#[inline]
fn transitions(n: &[bool; 8]) -> usize {
    (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count()
}

/// One Zhang-Suen sub-iteration. Returns whether any pixel was removed.
fn zhang_suen_pass(mask: &mut BinaryMap, first: bool) -> bool {
    let (w, h) = mask.dims();
    let mut doomed = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !*mask.get(x, y) {
                continue;
            }
            let n = ring(mask, x, y);
            let b = n.iter().filter(|&&v| v).count();
            if !(2..=6).contains(&b) || transitions(&n) != 1 {
                continue;
            }
            let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
            let ok = if first {
                !(p2 && p4 && p6) && !(p4 && p6 && p8)
            } else {
                !(p2 && p4 && p8) && !(p2 && p6 && p8)
            };
            if ok {
                doomed.push((x, y));
            }
        }
    }
    for &(x, y) in &doomed {
        mask.set(x, y, false);
    }
    !doomed.is_empty()
}

/// Whether removing the centre changes neither the 8-connected foreground nor the
/// 4-connected background locally.
fn is_simple(n: &[bool; 8]) -> bool {
    // Foreground: 8-components among ring pixels. Consecutive ring entries are
    // always 8-adjacent, and so are entries two apart when the middle one is an
    // edge neighbour (odd index => corner, even index => edge).
    let fg = n.iter().filter(|&&v| v).count();
    if fg == 0 {
        return false;
    }
    let mut fg_components = 0;
    let mut seen = [false; 8];
    for start in 0..8 {
        if !n[start] || seen[start] {
            continue;
        }
        fg_components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            for j in 0..8 {
                if n[j] && !seen[j] && ring_adjacent8(k, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    if fg_components != 1 {
        return false;
    }
    // Background: 4-components among ring pixels that touch an edge neighbour.
    let mut bg_components = 0;
    let mut seen = [false; 8];
    for start in (0..8).step_by(2) {
        if n[start] || seen[start] {
            continue;
        }
        bg_components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            for j in [(k + 1) % 8, (k + 7) % 8] {
                if !n[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    bg_components == 1
}

#[inline]
fn ring_adjacent8(a: usize, b: usize) -> bool {
    let (ax, ay) = RING[a];
    let (bx, by) = RING[b];
    a != b && (ax - bx).abs() <= 1 && (ay - by).abs() <= 1
}

/// Removes simple non-end pixels in raster order: the staircase corners that
/// Zhang-Suen leaves behind on diagonal runs.
fn prune_redundant(mask: &mut BinaryMap) -> bool {
    let (w, h) = mask.dims();
    let mut changed = false;
    for y in 0..h {
        for x in 0..w {
            if !*mask.get(x, y) {
                continue;
            }
            let n = ring(mask, x, y);
            if n.iter().filter(|&&v| v).count() < 2 {
                continue;
            }
            if is_simple(&n) {
                mask.set(x, y, false);
                changed = true;
            }
        }
    }
    changed
}

/// Zhang-Suen thinning to a one-pixel-wide 8-connected skeleton.
///
/// The two sub-iterations run to a fixpoint, then redundant staircase pixels are
/// removed; both steps repeat until neither changes the mask, which makes the
/// operation idempotent.
pub fn thin(mask: &BinaryMap) -> BinaryMap {
    let mut out = mask.clone();
    loop {
        let mut changed = false;
        loop {
            let a = zhang_suen_pass(&mut out, true);
            let b = zhang_suen_pass(&mut out, false);
            if !(a || b) {
                break;
            }
            changed = true;
        }
        if prune_redundant(&mut out) {
            changed = true;
        }
        if !changed {
            return out;
        }
    }
}

/// Number of 8-connected components of set pixels.
pub fn count_components8(mask: &BinaryMap) -> usize {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.data()[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for &(dx, dy) in &RING {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.data()[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_rows(rows: &[&str]) -> BinaryMap {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMap::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn diagonal_line_is_unchanged() {
        let m = BinaryMap::from_fn(10, 10, |x, y| x == y);
        assert_eq!(thin(&m), m);
    }

    #[test]
    fn isolated_pixel_survives() {
        let mut m = BinaryMap::new(5, 5);
        m.set(2, 2, true);
        assert_eq!(thin(&m), m);
    }

    #[test]
    fn horizontal_bar_thins_to_middle_row() {
        let mut m = BinaryMap::new(13, 7);
        for y in 2..5 {
            for x in 2..11 {
                m.set(x, y, true);
            }
        }
        let t = thin(&m);
        assert_eq!(t, reference_zhang_suen(&m));
        // Frozen from the reference trace: the east end loses one extra pixel in
        // the second sub-iteration, leaving x = 3..=8 on the middle row.
        let expected: Vec<(usize, usize)> = (3..=8).map(|x| (x, 3)).collect();
        assert_eq!(t.points(), expected);
    }

    /// Literal Zhang-Suen over a padded `Vec<Vec<u8>>`, written independently of
    /// the implementation above.
    fn reference_zhang_suen(m: &BinaryMap) -> BinaryMap {
        let (w, h) = m.dims();
        let mut img = vec![vec![0u8; w + 2]; h + 2];
        for (x, y) in m.points() {
            img[y + 1][x + 1] = 1;
        }
        loop {
            let mut changed = false;
            for step in 0..2 {
                let mut del = vec![];
                for i in 1..=h {
                    for j in 1..=w {
                        if img[i][j] == 0 {
                            continue;
                        }
                        let p = [
                            img[i - 1][j],
                            img[i - 1][j + 1],
                            img[i][j + 1],
                            img[i + 1][j + 1],
                            img[i + 1][j],
                            img[i + 1][j - 1],
                            img[i][j - 1],
                            img[i - 1][j - 1],
                        ];
                        let b: u8 = p.iter().sum();
                        let a = (0..8).filter(|&k| p[k] == 0 && p[(k + 1) % 8] == 1).count();
                        let (c, d) = if step == 0 {
                            (p[0] * p[2] * p[4], p[2] * p[4] * p[6])
                        } else {
                            (p[0] * p[2] * p[6], p[0] * p[4] * p[6])
                        };
                        if (2..=6).contains(&b) && a == 1 && c == 0 && d == 0 {
                            del.push((i, j));
                        }
                    }
                }
                changed |= !del.is_empty();
                for (i, j) in del {
                    img[i][j] = 0;
                }
            }
            if !changed {
                break;
            }
        }
        BinaryMap::from_fn(w, h, |x, y| img[y + 1][x + 1] == 1)
    }

    #[test]
    fn staircase_corners_are_removed() {
        let m = from_rows(&[
            "......", //
            ".##...", //
            "..##..", //
            "...##.", //
            "......", //
        ]);
        let t = thin(&m);
        assert_eq!(count_components8(&t), 1);
        // every pixel has at most two neighbours
        for (x, y) in t.points() {
            let n = ring(&t, x, y).iter().filter(|&&v| v).count();
            assert!(n <= 2);
        }
        assert!(t.count() < m.count());
    }

    #[test]
    fn simple_point_cases() {
        // isolated endpoint of a line: one neighbour -> simple
        let mut n = [false; 8];
        n[2] = true;
        assert!(is_simple(&n));
        // middle of a straight line -> not simple
        let mut n = [false; 8];
        n[2] = true;
        n[6] = true;
        assert!(!is_simple(&n));
        // L-corner with N and E -> simple
        let mut n = [false; 8];
        n[0] = true;
        n[2] = true;
        assert!(is_simple(&n));
        // interior point -> not simple
        assert!(!is_simple(&[true; 8]));
    }

    proptest! {
        #[test]
        fn thin_is_idempotent_subset(bits in proptest::collection::vec(any::<bool>(), 24 * 24)) {
            let m = BinaryMap::from_vec(24, 24, bits).unwrap();
            let t = thin(&m);
            prop_assert!(t.is_subset_of(&m));
            prop_assert_eq!(thin(&t), t);
        }
    }
}
