mod common;

use alsel_core::io::{
    decode, encode, read_csv_matrix, read_index_set, read_matrix, read_predictions, read_tensor,
    write_csv_matrix, write_index_set, write_matrix, write_predictions, Tensor,
};
use alsel_core::{EmbeddingMatrix, Error, IndexSet, PredictionTensor};
use common::*;
use proptest::prelude::*;
use tempfile::TempDir;

fn bits(values: &[f32]) -> Vec<u32> {
    values.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn matrix_round_trip_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.altf");
    let mut rng = rng(40);
    let m = gaussian_matrix(100, 16, &mut rng);
    write_matrix(&path, &m).unwrap();
    let back = read_matrix(&path).unwrap();
    assert_eq!((back.n_samples(), back.dim()), (100, 16));
    assert_eq!(bits(back.values()), bits(m.values()));
    // 4 magic + 2 version + 1 rank + 2·8 dims + 1 dtype + payload
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 24 + 100 * 16 * 4);
}

#[test]
fn prediction_round_trip_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p.altf");
    let mut rng = rng(41);
    let p = random_predictions(30, 6, 5, &mut rng);
    write_predictions(&path, &p).unwrap();
    match read_tensor(&path).unwrap() {
        Tensor::Predictions(back) => {
            assert_eq!(back.dims(), [30, 6, 5]);
            assert_eq!(bits(back.values()), bits(p.values()));
        }
        other => panic!("expected predictions, got {other:?}"),
    }
}

#[test]
fn csv_round_trip_keeps_nine_digits() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.csv");
    let mut rng = rng(42);
    let m = gaussian_matrix(1000, 8, &mut rng);
    write_csv_matrix(&path, &m).unwrap();
    let back = read_csv_matrix(&path).unwrap();
    let worst = m
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn index_set_round_trip_preserves_order() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("idx.txt");
    let set = IndexSet::from_indices(vec![3, 0, 7, 1_000_000, 12]).unwrap();
    write_index_set(&path, &set).unwrap();
    assert_eq!(read_index_set(&path).unwrap(), set);
    std::fs::write(&path, "3\n0\n7").unwrap();
    assert_eq!(read_index_set(&path).unwrap().as_slice(), &[3, 0, 7]);
}

/// Writes raw bytes to a fixture file and returns its path.
fn fixture(dir: &TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

#[test]
fn truncated_payload_reports_byte_counts() {
    let dir = TempDir::new().unwrap();
    let mut bytes = encode(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
    bytes.truncate(bytes.len() - 4);
    let err = read_matrix(fixture(&dir, "short.altf", &bytes)).unwrap_err();
    assert!(
        matches!(
            err,
            Error::Truncated {
                expected: 40,
                actual: 36
            }
        ),
        "{err:?}"
    );
    assert_eq!(err.code(), "truncated");
    let message = err.to_string();
    assert!(
        message.contains("40") && message.contains("36"),
        "{message}"
    );
}

#[test]
fn bad_magic_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut bytes = encode(&[1, 1], &[0.0]);
    bytes[..4].copy_from_slice(b"NPY\0");
    let err = read_tensor(fixture(&dir, "magic.altf", &bytes)).unwrap_err();
    assert!(
        matches!(err, Error::BadMagic { found } if &found == b"NPY\0"),
        "{err:?}"
    );
    assert_eq!(err.code(), "bad-magic");
}

#[test]
fn other_header_faults() {
    let good = encode(&[1, 2], &[0.5, 0.5]);
    let mut version = good.clone();
    version[4] = 2;
    assert!(matches!(
        decode(&version),
        Err(Error::UnsupportedVersion(2))
    ));
    let mut rank = good.clone();
    rank[6] = 4;
    assert!(matches!(decode(&rank), Err(Error::UnsupportedRank(4))));
    let mut dtype = good.clone();
    dtype[23] = 1;
    assert!(matches!(decode(&dtype), Err(Error::UnsupportedDtype(1))));
    let mut long = good.clone();
    long.extend_from_slice(&[0, 0]);
    assert!(matches!(
        decode(&long),
        Err(Error::TrailingData { extra: 2 })
    ));
    assert!(matches!(decode(&good[..10]), Err(Error::Truncated { .. })));
    let dir = TempDir::new().unwrap();
    let err = read_predictions(fixture(&dir, "rank2.altf", &good)).unwrap_err();
    assert!(
        matches!(
            err,
            Error::WrongRank {
                expected: 3,
                actual: 2
            }
        ),
        "{err:?}"
    );
}

#[test]
fn row_sum_violation_names_its_coordinates() {
    let dir = TempDir::new().unwrap();
    // sample 1, augmentation 0 sums to 1.2
    let values = [0.5, 0.5, 0.4, 0.6, 0.6, 0.6, 0.3, 0.7];
    let bytes = encode(&[2, 2, 2], &values);
    let err = read_predictions(fixture(&dir, "sum.altf", &bytes)).unwrap_err();
    match err {
        Error::RowSum {
            sample,
            augmentation,
            sum,
        } => {
            assert_eq!((sample, augmentation), (1, 0));
            assert!((sum - 1.2).abs() < 1e-6);
        }
        other => panic!("expected a row-sum error, got {other:?}"),
    }
}

#[test]
fn non_finite_payload_is_a_validation_error() {
    let bytes = encode(&[1, 2], &[1.0, f32::NAN]);
    assert!(matches!(
        decode(&bytes),
        Err(Error::NonFinite { row: 0, col: 1, .. })
    ));
}

#[test]
fn csv_faults() {
    let dir = TempDir::new().unwrap();
    let ok = read_csv_matrix(fixture(&dir, "ok.csv", b"1,2\n3,4")).unwrap();
    assert_eq!(ok.values(), &[1.0, 2.0, 3.0, 4.0]);
    let err = read_csv_matrix(fixture(&dir, "ragged.csv", b"1,2\n3")).unwrap_err();
    assert!(
        matches!(
            err,
            Error::RaggedRow {
                line: 2,
                expected: 2,
                actual: 1
            }
        ),
        "{err:?}"
    );
    assert_eq!(err.code(), "ragged-row");
    let err = read_csv_matrix(fixture(&dir, "text.csv", b"1,2\n3,x")).unwrap_err();
    assert!(matches!(err, Error::ParseNumber { line: 2, .. }), "{err:?}");
}

#[test]
fn index_faults() {
    let dir = TempDir::new().unwrap();
    let err = read_index_set(fixture(&dir, "dup.txt", b"1\n1")).unwrap_err();
    assert!(matches!(err, Error::DuplicateIndex { index: 1 }), "{err:?}");
    assert_eq!(err.code(), "duplicate-index");
    for bad in ["-1", "2.5", "seven"] {
        let err = read_index_set(fixture(&dir, "bad.txt", bad.as_bytes())).unwrap_err();
        assert!(
            matches!(err, Error::ParseIndex { line: 1, .. }),
            "{bad}: {err:?}"
        );
    }
}

#[test]
fn missing_file_names_the_path() {
    let err = read_matrix("/nonexistent/dir/m.altf").unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/m.altf"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_finite_matrix_round_trips(
        (n, d, values) in (1usize..20, 1usize..10).prop_flat_map(|(n, d)| {
            (Just(n), Just(d), prop::collection::vec(prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO, n * d))
        })
    ) {
        let m = EmbeddingMatrix::new(n, d, values).unwrap();
        let bytes = encode(&[n, d], m.values());
        match decode(&bytes).unwrap() {
            Tensor::Matrix(back) => prop_assert_eq!(bits(back.values()), bits(m.values())),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn predictions_round_trip(seed in any::<u64>(), n in 1usize..8, k in 2usize..6, c in 2usize..6) {
        let mut rng = common::rng(seed);
        let p: PredictionTensor = random_predictions(n, k, c, &mut rng);
        match decode(&encode(&[n, k, c], p.values())).unwrap() {
            Tensor::Predictions(back) => prop_assert_eq!(bits(back.values()), bits(p.values())),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }
}
