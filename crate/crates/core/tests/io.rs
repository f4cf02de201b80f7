use pgb::compression::{Layout, SparseCoefficients};
use pgb::image2d::Image;
use pgb::signalio::*;
use pgb::{build_config, Complex64, Error, Mode, Signal1D};

#[test]
fn wav_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ramp.wav");
    let x = Signal1D::from_real(&(0..10000).map(|k| (k as f64 - 5000.0) / 5001.0).collect::<Vec<_>>()).with_rate(10000.0);
    write_wav(&path, &x, WavEncoding::Pcm16).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.len(), 10000);
    assert_eq!(back.sample_rate, Some(10000.0));
    for (a, b) in x.samples.iter().zip(&back.samples) {
        assert!((a.re - b.re).abs() <= 1.0 / 32768.0);
    }
}

#[test]
fn wav_skips_unknown_chunks() {
    let x = Signal1D::from_real(&[0.5, -0.25]);
    let plain = wav_bytes(&x, WavEncoding::Pcm16).unwrap();
    let mut with_list = plain[..36].to_vec();
    with_list.extend_from_slice(b"LIST");
    with_list.extend_from_slice(&3u32.to_le_bytes());
    with_list.extend_from_slice(&[1, 2, 3, 0]);
    with_list.extend_from_slice(&plain[36..]);
    assert_eq!(parse_wav(&with_list).unwrap().real_parts(), vec![0.5, -0.25]);
}

#[test]
fn errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.wav");
    let e = read_wav(&missing).unwrap_err();
    assert!(e.to_string().contains("nope.wav"));
    assert!(matches!(e.root(), Error::Io(_)));
    let bad = dir.path().join("bad.pgm");
    std::fs::write(&bad, b"P5\n4 4\n255\n\x00").unwrap();
    let e = read_pgm(&bad).unwrap_err();
    assert!(e.to_string().contains("bad.pgm") && e.to_string().contains("needs 16 bytes, found 1"), "{e}");
}

#[test]
fn pgm_and_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::new(3, 2, vec![0.0, 10.0, 20.0, 30.0, 254.0, 255.0]).unwrap();
    let p = dir.path().join("a.pgm");
    write_pgm(&p, &img).unwrap();
    assert_eq!(read_pgm(&p).unwrap(), img);
    let s = Signal1D::from_complex(vec![Complex64::new(0.1, 0.2), Complex64::new(-1e-300, 3.0)]);
    let q = dir.path().join("s.csv");
    write_csv_signal(&q, &s).unwrap();
    assert_eq!(read_csv_signal(&q).unwrap(), s);
}

#[test]
fn coeff_file_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.pgbc");
    let cfg = build_config(16, 32).unwrap();
    let file = CoefficientFile {
        sparse: SparseCoefficients {
            mode: Mode::Pgb,
            layout: Layout::Lattice2 { rows: cfg, cols: cfg },
            entries: vec![(0, Complex64::new(1.5, -0.5)), (262143, Complex64::new(f64::EPSILON, 0.0))],
            porat: true,
        },
        real: true,
        sample_rate: None,
    };
    write_coeffs(&p, &file).unwrap();
    assert_eq!(read_coeffs(&p).unwrap(), file);
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("PGBC1\nmode=pgb dims=2 nt=16 nw=32 nt2=16 nw2=32 n=262144 porat=1"));
}

#[test]
fn unsorted_entries_are_accepted_and_sorted() {
    let text = "PGBC1\nmode=pg dims=1 nt=2 nw=2 n=4 porat=0\n3 1 0\n0 2 0\n";
    let f = parse_coeffs(text).unwrap();
    assert_eq!(f.sparse.indices(), vec![0, 3]);
}
