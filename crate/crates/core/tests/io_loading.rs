use std::fs;
use std::path::PathBuf;

use qcorr::io::{load_raw_1d, load_raw_2d};

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcorr-io-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn loads_csv_and_json() {
    let a = load_raw_1d(&scratch("a.csv", "1\n2\n3\n4\n")).unwrap();
    assert_eq!(a.values(), &[1.0, 2.0, 3.0, 4.0]);
    let b = load_raw_1d(&scratch("b.json", "[0.5, 1, 2, 3]")).unwrap();
    assert_eq!(b.len(), 4);
    let m = load_raw_2d(&scratch("m.csv", "1,2\n3,4\n")).unwrap();
    assert_eq!(m.side(), Some(2));
    let j = load_raw_2d(&scratch("m.json", "[[1,2],[3,4]]")).unwrap();
    assert_eq!(j.values(), m.values());
}

#[test]
fn rejects_bad_shapes_and_values() {
    assert!(load_raw_1d(&scratch("odd.csv", "1,2,3")).is_err());
    assert!(load_raw_2d(&scratch("rect.csv", "1,2\n3,4\n5,6\n7,8\n")).is_err());
    assert!(load_raw_1d(&scratch("nan.csv", "1,nan")).is_err());
    assert!(load_raw_1d(&scratch("empty.csv", "# nothing\n")).is_err());
    let err = load_raw_1d(&scratch("bad.csv", "1,x,3,4")).unwrap_err().to_string();
    assert!(err.contains("bad.csv"), "{err}");
    assert!(load_raw_1d(std::path::Path::new("/nonexistent/qcorr.csv")).is_err());
}
