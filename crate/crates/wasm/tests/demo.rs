use iagf_wasm::demo::{field_shape, manipulability_map, simulate};

#[test]
fn isotropic_field_is_a_circle() {
    let s = field_shape("passive", 1.5, 0.0, 30.0, 64).unwrap();
    assert_eq!(s.points.len(), 128);
    for p in s.points.chunks(2) {
        assert!((p[0].hypot(p[1]) - 1.5).abs() < 1e-12);
    }
}

#[test]
fn field_extent_follows_mode() {
    let passive = field_shape("passive", 2.0, 1.0, 0.0, 64).unwrap();
    // first sample sits at phi = -pi, opposite v_r = (1, 0): the long side
    assert!((passive.points[0] + 3.0).abs() < 1e-12);
    let active = field_shape("active", 2.0, 1.0, 0.0, 64).unwrap();
    assert!((active.points[0] + 1.0).abs() < 1e-12);
    assert!((field_shape("active", 2.0, 5.0, 0.0, 8).unwrap().d2 - 1.96).abs() < 1e-12);
    assert!(field_shape("sideways", 2.0, 1.0, 0.0, 8).is_err());
}

#[test]
fn map_matches_closed_form() {
    let n = 41;
    let map = manipulability_map(0.4, 0.4, n).unwrap();
    assert_eq!(map.len(), n * n);
    let reach = 0.8;
    for (i, m) in map.iter().enumerate() {
        let (row, col) = (i / n, i % n);
        let x = -reach + 2.0 * reach * col as f64 / (n - 1) as f64;
        let y = reach - 2.0 * reach * row as f64 / (n - 1) as f64;
        let r = x.hypot(y);
        if r > reach {
            assert!(m.is_nan());
        } else {
            let (l1, l2) = (0.4f64, 0.4f64);
            let c2 = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
            assert!((m - l1 * l2 * c2.acos().sin()).abs() < 1e-9, "r {r} m {m} c2 {c2}");
        }
    }
}

#[test]
fn simulate_returns_whole_episode() {
    let t = simulate("s2", "iagf", 3, 10.0).unwrap();
    assert!(t.metrics.success);
    assert_eq!(t.x.len(), t.m.len());
    assert_eq!(t.goals.len(), 3);
    assert!(t.target.windows(2).any(|w| w[0] != w[1]));
    let json = serde_json::to_string(&t).unwrap();
    assert!(json.contains("\"metrics\""));
    assert!(simulate("s2", "zz", 0, 10.0).is_err());
    assert!(simulate("s2", "na", 0, f64::NAN).is_err());
}
