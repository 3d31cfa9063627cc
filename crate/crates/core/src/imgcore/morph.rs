use crate::imgcore::RegionMask;

/// Half-widths of the discrete Euclidean disc `{(dx, dy) : dx² + dy² ≤ r²}`,
/// indexed by `dy + radius`.
pub fn disc_half_widths(radius: usize) -> Vec<usize> {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| {
            let rem = r * r - dy * dy;
            let mut hw = (rem as f64).sqrt() as i64;
            while (hw + 1) * (hw + 1) <= rem {
                hw += 1;
            }
            while hw * hw > rem {
                hw -= 1;
            }
            hw as usize
        })
        .collect()
}

/// Binary dilation with a Euclidean disc of the given radius.
///
/// A pixel is set iff some input pixel lies within distance `radius`. Each
/// output pixel scans the `2r+1` rows of its disc using per-row prefix counts.
pub fn dilate_disc(mask: &RegionMask, radius: usize) -> RegionMask {
    let (h, w) = mask.dims();
    if radius == 0 || mask.is_empty() {
        return mask.clone();
    }
    // prefix[r][c] = number of members in row r strictly left of column c
    let mut prefix = vec![0u32; h * (w + 1)];
    for r in 0..h {
        let row = &mut prefix[r * (w + 1)..(r + 1) * (w + 1)];
        for c in 0..w {
            row[c + 1] = row[c] + mask.get(r, c) as u32;
        }
    }
    let half = disc_half_widths(radius);
    let rad = radius as i64;
    RegionMask::from_fn(h, w, |r, c| {
        for dy in -rad..=rad {
            let rr = r as i64 + dy;
            if rr < 0 || rr >= h as i64 {
                continue;
            }
            let hw = half[(dy + rad) as usize] as i64;
            let c0 = (c as i64 - hw).max(0) as usize;
            let c1 = ((c as i64 + hw).min(w as i64 - 1) + 1) as usize;
            let row = &prefix[rr as usize * (w + 1)..];
            if row[c1] > row[c0] {
                return true;
            }
        }
        false
    })
}

/// Binary erosion with a Euclidean disc (dual of [`dilate_disc`]); pixels
/// outside the image count as non-members.
pub fn erode_disc(mask: &RegionMask, radius: usize) -> RegionMask {
    let (h, w) = mask.dims();
    // outside pixels are background, so pad by one ring before dualizing
    let padded = RegionMask::from_fn(h + 2, w + 2, |r, c| {
        r == 0 || c == 0 || r == h + 1 || c == w + 1 || !mask.get(r - 1, c - 1)
    });
    let grown = dilate_disc(&padded, radius);
    RegionMask::from_fn(h, w, |r, c| !grown.get(r + 1, c + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(mask: &RegionMask, radius: usize) -> RegionMask {
        let (h, w) = mask.dims();
        let r2 = (radius * radius) as i64;
        RegionMask::from_fn(h, w, |r, c| {
            mask.indices().any(|i| {
                let (mr, mc) = ((i / w) as i64, (i % w) as i64);
                let (dr, dc) = (mr - r as i64, mc - c as i64);
                dr * dr + dc * dc <= r2
            })
        })
    }

    #[test]
    fn empty_and_full() {
        let e = RegionMask::empty(30, 30);
        assert!(dilate_disc(&e, 5).is_empty());
        let f = RegionMask::full(30, 30);
        assert_eq!(dilate_disc(&f, 20), f);
    }

    #[test]
    fn unit_disc_is_plus() {
        let mut m = RegionMask::empty(5, 5);
        m.set(2, 2, true);
        let d = dilate_disc(&m, 1);
        assert_eq!(d.count(), 5);
        for (r, c) in [(1, 2), (3, 2), (2, 1), (2, 3), (2, 2)] {
            assert!(d.get(r, c));
        }
    }

    #[test]
    fn radius_twenty_lattice_count() {
        // lattice points with x² + y² ≤ 400
        let mut count = 0;
        for x in -20i64..=20 {
            for y in -20i64..=20 {
                if x * x + y * y <= 400 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 1257);
        let mut m = RegionMask::empty(61, 61);
        m.set(30, 30, true);
        assert_eq!(dilate_disc(&m, 20).count(), count);
    }

    #[test]
    fn erosion_shrinks_rectangle() {
        let m = RegionMask::rect(20, 20, 2, 18, 5, 15);
        let e = erode_disc(&m, 2);
        assert_eq!(e, RegionMask::rect(20, 20, 4, 16, 7, 13));
    }

    fn arb_mask() -> impl Strategy<Value = RegionMask> {
        (1usize..10, 1usize..10).prop_flat_map(|(h, w)| {
            proptest::collection::vec(proptest::bool::weighted(0.15), h * w)
                .prop_map(move |bits| RegionMask::from_bits(h, w, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in arb_mask(), radius in 0usize..5) {
            prop_assert_eq!(dilate_disc(&m, radius), brute(&m, radius));
        }

        #[test]
        fn extensive_and_monotone(m in arb_mask(), radius in 0usize..5, seed in any::<u64>()) {
            let d = dilate_disc(&m, radius);
            prop_assert!(m.is_subset(&d));
            // a superset built by adding pseudo-random pixels
            let (h, w) = m.dims();
            let bigger = RegionMask::from_fn(h, w, |r, c| {
                m.get(r, c) || ((seed >> ((r * w + c) % 64)) & 1) == 1
            });
            prop_assert!(d.is_subset(&dilate_disc(&bigger, radius)));
        }
    }
}
