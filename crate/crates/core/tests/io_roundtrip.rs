use std::path::PathBuf;

use laplacian_growth::conformal::LaurentMap;
use laplacian_growth::curve::{build_curve, solve_double_point, CurveN1};
use laplacian_growth::schwarz::{Pole, PoleData};
use laplacian_growth::{Contour, Error};
use num_complex::Complex64;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lg-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn contour_file_is_bit_exact() {
    let map = LaurentMap::random(6, 0.2, 7).unwrap();
    let contour = map.boundary_contour(256).unwrap();
    let path = scratch("contour.csv");
    contour.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,y\n"));
    let back = Contour::read_csv(&path).unwrap();
    for (a, b) in contour.samples().iter().zip(back.samples()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}

#[test]
fn map_file_round_trips_and_rejects_bad_radius() {
    let map = LaurentMap::random(5, 0.2, 3).unwrap();
    let path = scratch("map.json");
    map.write_json(&path).unwrap();
    assert_eq!(LaurentMap::read_json(&path).unwrap(), map);

    for r in ["0.0", "-1.5"] {
        let text = format!(r#"{{"r": {r}, "a0": [0.0, 0.0], "u": [[0.1, 0.0]]}}"#);
        let err = LaurentMap::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("radius must be positive"), "r = {r}: {err}");
    }
}

#[test]
fn curve_file_round_trips() {
    let c = build_curve(Complex64::new(2.0, 0.0), Complex64::new(-3.0, 0.0), Complex64::new(0.1, 0.0), Complex64::new(-0.9, 0.0))
        .unwrap();
    let solved = solve_double_point(&c).unwrap();
    let path = scratch("curve.json");
    solved.write_json(&path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["p", "q", "mu", "nu", "h", "E"] {
        assert!(value.get(key).is_some(), "missing {key}");
    }
    assert_eq!(value["E"].as_array().unwrap().len(), 3);
    let back = CurveN1::read_json(&path).unwrap();
    assert_eq!(back.h.map(f64::to_bits), solved.h.map(f64::to_bits));
    assert_eq!(back.q_sheet, solved.q_sheet);
    assert_eq!(back.branch_data().unwrap().e3, solved.branch_data().unwrap().e3);
}

#[test]
fn pole_file_round_trips() {
    let data = PoleData {
        poles: vec![
            Pole { z: Complex64::new(2.0, 0.0), order: 1, residue: Complex64::new(-0.1, 1e-17) },
            Pole { z: Complex64::new(0.1, -0.3), order: 2, residue: Complex64::new(1.0 / 3.0, 0.0) },
        ],
    };
    let path = scratch("poles.json");
    data.write_json(&path).unwrap();
    assert_eq!(PoleData::read_json(&path).unwrap(), data);
}

#[test]
fn missing_file_is_io_error() {
    let err = Contour::read_csv(&scratch("absent.csv")).unwrap_err();
    assert!(matches!(err, Error::Io(_)));
    assert!(!err.is_numerical());
}
