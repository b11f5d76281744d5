use cokernels_web::{isotropy_json, limits_json, smith_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn smith_over_integers_and_mod_a() {
    let v = parse(&smith_json(r#"{"modulus":0,"rows":[[2,4],[6,8]]}"#).unwrap());
    assert_eq!(v["d"], serde_json::json!(["2", "4"]));
    assert_eq!(v["cokernel"], "2,4");
    let v = parse(&smith_json(r#"{"modulus":4,"rows":[[2,0],[0,0]]}"#).unwrap());
    assert_eq!(v["cokernel"], "2,4");
    assert_eq!(v["rank"], 1);
}

#[test]
fn smith_rejects_bad_input() {
    assert!(smith_json("not json").is_err());
    assert!(smith_json(r#"{"modulus":0,"rows":[[1,2],[3]]}"#).is_err());
}

#[test]
fn isotropy_worked_value() {
    let v = parse(&isotropy_json(2, 2, "2,2", 2).unwrap());
    assert_eq!(v["exact"], "5/8");
    assert!(isotropy_json(3, 3, "2", 2).is_err());
}

#[test]
fn limits_table() {
    let v = parse(&limits_json("sandpile", 2, 0, 2).unwrap());
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!((v["rows"][0]["value"].as_f64().unwrap() - 0.419_422_442).abs() < 1e-9);
    assert!(limits_json("poisson", 2, 0, 2).is_err());
}
