use proptest::prelude::*;
use zigzag_core::pointcloud::{farthest_point_sampling_from, knn_group, squared_distance};
use zigzag_core::PointCloud;

fn cloud_strategy() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 2..120)
}

proptest! {
    #[test]
    fn knn_is_the_brute_force_neighborhood(points in cloud_strategy(), k_frac in 0.0f64..1.0) {
        let cloud = PointCloud::new(points.clone()).unwrap();
        let k = 1 + ((points.len() - 1) as f64 * k_frac) as usize;
        let centers: Vec<usize> = (0..points.len()).step_by(7).collect();
        for (group, &c) in knn_group(&cloud, &centers, k).unwrap().iter().zip(&centers) {
            let mut all: Vec<usize> = (0..points.len()).filter(|&i| i != c).collect();
            all.sort_by(|&i, &j| {
                squared_distance(&points[c], &points[i])
                    .total_cmp(&squared_distance(&points[c], &points[j]))
                    .then(i.cmp(&j))
            });
            let mut want = vec![c];
            want.extend_from_slice(&all[..k - 1]);
            prop_assert_eq!(&group.neighbor_indices, &want);
        }
    }

    #[test]
    fn fps_picks_the_farthest_point_each_time(points in cloud_strategy(), first_frac in 0.0f64..1.0) {
        let cloud = PointCloud::new(points.clone()).unwrap();
        let n = points.len();
        let first = ((n - 1) as f64 * first_frac) as usize;
        let picks = farthest_point_sampling_from(&cloud, n, first).unwrap();
        prop_assert_eq!(picks[0], first);
        for step in 1..n {
            let chosen = &picks[..step];
            let gap = |i: usize| chosen.iter().map(|&c| squared_distance(&points[i], &points[c])).fold(f64::INFINITY, f64::min);
            let best = (0..n)
                .filter(|i| !chosen.contains(i))
                .max_by(|&i, &j| gap(i).total_cmp(&gap(j)).then(j.cmp(&i)))
                .unwrap();
            prop_assert_eq!(picks[step], best);
        }
    }
}

proptest! {
    #[test]
    fn knn_is_permutation_equivariant(points in cloud_strategy(), seed in any::<u64>(), k_frac in 0.0f64..1.0) {
        let n = points.len();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        // new position of old point i is inverse[i]
        let perm = zigzag_core::rng::permutation(&mut zigzag_core::rng::seeded(seed), n);
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let shuffled: Vec<[f64; 3]> = perm.iter().map(|&old| points[old]).collect();
        let centers: Vec<usize> = (0..n).step_by(5).collect();
        let moved_centers: Vec<usize> = centers.iter().map(|&c| inverse[c]).collect();
        let a = knn_group(&PointCloud::new(points).unwrap(), &centers, k).unwrap();
        let b = knn_group(&PointCloud::new(shuffled).unwrap(), &moved_centers, k).unwrap();
        for (ga, gb) in a.iter().zip(&b) {
            let mut want: Vec<usize> = ga.neighbor_indices.iter().map(|&i| inverse[i]).collect();
            let mut got = gb.neighbor_indices.clone();
            want.sort_unstable();
            got.sort_unstable();
            prop_assert_eq!(got, want);
        }
    }
}
