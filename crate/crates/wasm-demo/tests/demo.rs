use ehmec_wasm::{compare_json, tau_sweep_json, trace_json};
use serde_json::Value;

#[test]
fn compare_lists_every_scheme() {
    let v: Value = serde_json::from_str(&compare_json(3, 2, 6, 0.02).unwrap()).unwrap();
    let schemes = v["schemes"].as_array().unwrap();
    assert_eq!(schemes.len(), 4);
    let best = schemes[0]["objective"].as_f64().unwrap();
    for s in schemes {
        assert!(s["objective"].as_f64().unwrap() <= best * (1.0 + 1e-3));
        assert_eq!(s["local_bits"].as_array().unwrap().len(), 2);
        let spent = s["spent"][0].as_array().unwrap();
        let avail = v["users"][0]["available"].as_array().unwrap();
        for (a, b) in spent.iter().zip(avail) {
            assert!(a.as_f64().unwrap() <= b.as_f64().unwrap() + 1e-9);
        }
    }
}

#[test]
fn trace_is_bounded_below_by_primal() {
    let v: Value =
        serde_json::from_str(&trace_json(1, 8, 0.02, "adaptive", 0.3, 5000).unwrap()).unwrap();
    let p = v["primal_value"].as_f64().unwrap();
    let dual = v["dual"].as_array().unwrap();
    assert!(!dual.is_empty());
    assert!(dual.iter().all(|g| g.as_f64().unwrap() >= p * (1.0 - 1e-9)));
    assert!(trace_json(1, 8, 0.02, "newton", 1.0, 10).is_err());
}

#[test]
fn sweep_has_ten_points_per_scheme() {
    let v: Value = serde_json::from_str(&tau_sweep_json(2, 2, 5, 2).unwrap()).unwrap();
    assert_eq!(v["tau"].as_array().unwrap().len(), 10);
    for s in v["series"].as_array().unwrap() {
        assert_eq!(s[1].as_array().unwrap().len(), 10);
    }
}

#[test]
fn rejects_oversized_requests() {
    assert!(compare_json(0, 0, 5, 0.02).is_err());
    assert!(compare_json(0, 2, 500, 0.02).is_err());
    assert!(tau_sweep_json(0, 2, 5, 0).is_err());
}
