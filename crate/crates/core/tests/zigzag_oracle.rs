mod oracles;

use proptest::prelude::*;
use rand::Rng;
use zigzag_core::rng::seeded;
use zigzag_core::scan::{zigzag_plane_scan, Plane, ScanParams};
use zigzag_core::PointCloud;

fn plane_name(plane: Plane) -> &'static str {
    match plane {
        Plane::Xy => "xy",
        Plane::Xz => "xz",
        Plane::Yz => "yz",
    }
}

fn check_against_reference(points: &[[f64; 3]], params: &ScanParams) {
    let cloud = PointCloud::new(points.to_vec()).unwrap();
    for plane in Plane::ALL {
        let got = zigzag_plane_scan(&cloud, plane, params).unwrap();
        let want = oracles::zigzag_reference(
            points,
            plane_name(plane),
            params.layer_budget,
            params.segment_size,
            params.max_segments,
        );
        assert_eq!(
            got.permutation(),
            want.as_slice(),
            "plane {plane}, params {params:?}, points {points:?}"
        );
    }
}

#[test]
fn reference_layer_counts() {
    for budget in 3..40 {
        let expected = oracles::layer_counts(budget);
        let got = (
            Plane::Xy.layer_count(budget),
            Plane::Xz.layer_count(budget),
            Plane::Yz.layer_count(budget),
        );
        assert_eq!(got, expected, "budget {budget}");
    }
}

#[test]
fn cube_corners_match_hand_enumeration() {
    // index = 4x + 2y + z
    let corners: Vec<[f64; 3]> = (0..8)
        .map(|i| [(i >> 2 & 1) as f64, (i >> 1 & 1) as f64, (i & 1) as f64])
        .collect();
    // budget 6 gives two XY layers
    let params = ScanParams {
        layer_budget: 6,
        segment_size: 2,
        max_segments: 4,
    };
    let cloud = PointCloud::new(corners.clone()).unwrap();
    let order = zigzag_plane_scan(&cloud, Plane::Xy, &params).unwrap();
    let path: Vec<[f64; 3]> = order.permutation().iter().map(|&i| corners[i]).collect();
    assert_eq!(
        path[..4],
        [
            [0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [1.0, 0.0, 0.0]
        ]
    );
    assert_eq!(
        path[4..],
        [
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
            [1.0, 0.0, 1.0]
        ]
    );
    check_against_reference(&corners, &params);
}

#[test]
fn random_small_clouds_match_reference() {
    let mut rng = seeded(2024);
    for trial in 0..200 {
        let n = rng.random_range(1..=16);
        // a coarse grid forces plenty of coordinate ties
        let coarse = trial % 2 == 0;
        let points: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                std::array::from_fn(|_| {
                    if coarse {
                        rng.random_range(0..3) as f64
                    } else {
                        rng.random::<f64>()
                    }
                })
            })
            .collect();
        let params = ScanParams {
            layer_budget: rng.random_range(3..=12),
            segment_size: rng.random_range(1..=4),
            max_segments: rng.random_range(1..=5),
        };
        check_against_reference(&points, &params);
    }
}

fn dyadic_cloud() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-64i32..64), 1..200)
        .prop_map(|pts| pts.into_iter().map(|p| p.map(|v| v as f64 / 8.0)).collect())
}

proptest! {
    #[test]
    fn scan_is_a_bijection(points in dyadic_cloud(), budget in 3usize..20, d in 1usize..8, m in 1usize..20) {
        let cloud = PointCloud::new(points.clone()).unwrap();
        let params = ScanParams { layer_budget: budget, segment_size: d, max_segments: m };
        for plane in Plane::ALL {
            let mut perm = zigzag_plane_scan(&cloud, plane, &params).unwrap().permutation().to_vec();
            perm.sort_unstable();
            prop_assert_eq!(perm, (0..points.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn translation_and_scaling_keep_the_path(points in dyadic_cloud(), shift in prop::array::uniform3(-8i32..8), scale_pow in -3i32..4) {
        // power-of-two scales and small dyadic shifts are exact in f64
        let scale = 2f64.powi(scale_pow);
        let moved: Vec<[f64; 3]> = points
            .iter()
            .map(|p| std::array::from_fn(|a| p[a] * scale + shift[a] as f64 / 4.0))
            .collect();
        let (a, b) = (PointCloud::new(points).unwrap(), PointCloud::new(moved).unwrap());
        let params = ScanParams::default();
        for plane in Plane::ALL {
            prop_assert_eq!(
                zigzag_plane_scan(&a, plane, &params).unwrap(),
                zigzag_plane_scan(&b, plane, &params).unwrap()
            );
        }
    }

    #[test]
    fn xy_segments_alternate_in_y(points in dyadic_cloud(), d in 1usize..6, m in 1usize..10) {
        let params = ScanParams { layer_budget: 12, segment_size: d, max_segments: m };
        let cloud = PointCloud::new(points.clone()).unwrap();
        let order = zigzag_plane_scan(&cloud, Plane::Xy, &params).unwrap();
        let layers = Plane::Xy.layer_count(12).min(points.len());
        let mut pos = 0;
        for l in 0..layers {
            let layer_len = points.len() / layers + usize::from(l < points.len() % layers);
            let segments = params.segment_count(layer_len);
            for s in 0..segments {
                let seg_len = layer_len / segments + usize::from(s < layer_len % segments);
                let ys: Vec<f64> = order.permutation()[pos..pos + seg_len].iter().map(|&i| points[i][1]).collect();
                for w in ys.windows(2) {
                    if s % 2 == 0 {
                        prop_assert!(w[0] <= w[1]);
                    } else {
                        prop_assert!(w[0] >= w[1]);
                    }
                }
                pos += seg_len;
            }
        }
        prop_assert_eq!(pos, points.len());
    }

    #[test]
    fn reversed_indices_give_the_same_point_path(points in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 1..150)) {
        let n = points.len();
        let reversed: Vec<[f64; 3]> = points.iter().rev().copied().collect();
        let (a, b) = (PointCloud::new(points.clone()).unwrap(), PointCloud::new(reversed).unwrap());
        for plane in Plane::ALL {
            let pa = zigzag_plane_scan(&a, plane, &ScanParams::default()).unwrap();
            let pb = zigzag_plane_scan(&b, plane, &ScanParams::default()).unwrap();
            let relabeled: Vec<usize> = pb.permutation().iter().map(|&i| n - 1 - i).collect();
            prop_assert_eq!(pa.permutation(), relabeled.as_slice());
        }
    }
}
