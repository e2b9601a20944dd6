mod common;

use common::image_oracle::{enumerate, wall_of_point};
use sitewave_core::scene::fixtures::box_room;
use sitewave_core::tracer::{trace, SimConfig};
use sitewave_core::{Scene, Vec3};

fn compare(tx: [f64; 3], rx: [f64; 3], n_rays: usize) -> (usize, usize) {
    let scene = Scene::from_meshes(vec![box_room()]).unwrap();
    let cfg = SimConfig { tx_pos: tx, rx_pos: rx, n_rays, max_reflections: 2, ..SimConfig::default() };
    let paths = trace(&scene, &cfg).unwrap().paths;
    let oracle = enumerate(Vec3::from(tx), Vec3::from(rx), 2, cfg.freq_hz);
    let mut found = 0;
    for o in &oracle {
        let hit = paths
            .iter()
            .find(|p| p.interactions.iter().map(|i| wall_of_point(&i.point).unwrap()).eq(o.walls.iter().copied()));
        if let Some(p) = hit {
            found += 1;
            assert!((p.delay_s - o.delay_s).abs() < 1e-9, "{:?}", o.walls);
            assert!((p.power_dbm - o.power_dbm).abs() < 0.01, "{:?}: {} vs {}", o.walls, p.power_dbm, o.power_dbm);
        }
    }
    // nothing beyond the oracle
    assert_eq!(paths.len(), found);
    (found, oracle.len())
}

#[test]
fn order_two_matches_image_sources_at_full_density() {
    let (found, total) = compare([1.0, 1.0, 1.5], [4.0, 2.5, 1.2], 1_000_000);
    assert_eq!(found, total);
    assert_eq!(total, 25);
}

#[test]
fn order_two_recall_at_reduced_density() {
    let pairs =
        [([0.7, 3.1, 2.2], [5.2, 0.6, 0.9]), ([3.0, 2.0, 1.5], [3.5, 2.2, 1.4]), ([5.5, 0.4, 0.4], [0.3, 3.7, 2.8])];
    let (mut found, mut total) = (0, 0);
    for (tx, rx) in pairs {
        let (f, t) = compare(tx, rx, 100_000);
        found += f;
        total += t;
    }
    assert!(found as f64 >= 0.99 * total as f64, "{found}/{total}");
}
