use msve_core::numerics::RngStream;
use msve_core::{load_chain, ChainFormat, ChainMatrix, Error};
use ndarray::Array2;

fn random_chain(n: usize, p: usize) -> ChainMatrix {
    let mut rng = RngStream::new(12, 0);
    let mut v = vec![0.0; n * p];
    rng.fill_standard_normal(&mut v);
    for x in v.iter_mut().step_by(7) {
        *x *= 1e-300;
    }
    ChainMatrix::new(Array2::from_shape_vec((n, p), v).unwrap()).unwrap()
}

#[test]
fn both_formats_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let chain = random_chain(123, 4);
    for (name, format) in [("c.csv", ChainFormat::Csv), ("c.bin", ChainFormat::RawF64)] {
        let path = dir.path().join(name);
        chain.write(&path, format).unwrap();
        assert_eq!(ChainFormat::from_path(&path), format);
        assert_eq!(load_chain(&path, format, 0).unwrap(), chain);
        assert_eq!(load_chain(&path, format, 23).unwrap(), chain.skip(23).unwrap());
    }
}

#[test]
fn csv_header_blank_lines_and_crlf() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    std::fs::write(&path, "alpha,beta\r\n1,2\r\n\r\n3,4.5e0\r\n").unwrap();
    let c = load_chain(&path, ChainFormat::Csv, 0).unwrap();
    assert_eq!((c.n(), c.p()), (2, 2));
    assert_eq!(c.values()[[1, 1]], 4.5);
}

#[test]
fn malformed_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases: [(&str, &[u8]); 4] = [
        ("ragged.csv", b"1,2\n3\n"),
        ("nan.csv", b"1,2\n3,NaN\n"),
        ("text.csv", b"1,2\n3,abc\n"),
        ("short.bin", b"MCOV\x02\x00\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00\x00\x00"),
    ];
    for (name, bytes) in cases {
        std::fs::write(d.join(name), bytes).unwrap();
    }
    assert!(matches!(load_chain(&d.join("ragged.csv"), ChainFormat::Csv, 0), Err(Error::Dimension(_))));
    assert!(matches!(load_chain(&d.join("nan.csv"), ChainFormat::Csv, 0), Err(Error::NonFinite { row: 1, col: 1 })));
    assert!(matches!(load_chain(&d.join("text.csv"), ChainFormat::Csv, 0), Err(Error::Parse { line: 2, .. })));
    assert!(load_chain(&d.join("short.bin"), ChainFormat::RawF64, 0).is_err());
    assert!(matches!(load_chain(&d.join("absent.csv"), ChainFormat::Csv, 0), Err(Error::Io { .. })));
    let ok = d.join("ok.csv");
    std::fs::write(&ok, "1\n2\n").unwrap();
    assert!(load_chain(&ok, ChainFormat::Csv, 2).is_err());
}
