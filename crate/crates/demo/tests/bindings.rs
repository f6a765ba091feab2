use clarklab_demo::{clark_json, sweep_json, verify_json};

#[test]
fn clark_of_z_squared() {
    let v: serde_json::Value = serde_json::from_str(&clark_json(&[0.0, 0.0, 0.0, 0.0], 0.0, 0.0, 8).unwrap()).unwrap();
    let atoms = v["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 2);
    assert!((v["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((atoms[0][1].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(clark_json(&[0.0], 0.0, 0.0, 8).is_err());
    assert!(clark_json(&[2.0, 0.0], 0.0, 0.0, 8).is_err());
}

#[test]
fn verify_and_sweep() {
    let v: serde_json::Value = serde_json::from_str(&verify_json("crofoot", 3, 1, 200).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    let s: serde_json::Value = serde_json::from_str(&sweep_json("triangular", 4, 2, 50).unwrap()).unwrap();
    assert_eq!(s["series"].as_array().unwrap().len(), 51);
    assert!(verify_json("nope", 3, 1, 10).is_err());
}
