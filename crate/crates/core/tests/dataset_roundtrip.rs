use nalgebra::DMatrix;
use proptest::prelude::*;
use slke::dataset::{read_dataset, read_labels, write_dataset, write_labels, DataMatrix, LabelVector};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0), Just(1e-300)]
}

proptest! {
    #[test]
    fn dataset_survives_write_and_read(
        (m, n, cells) in (1usize..5, 2usize..8).prop_flat_map(|(m, n)| {
            (Just(m), Just(n), proptest::collection::vec(finite(), m * n))
        }),
        raw_labels in proptest::collection::vec(0usize..3, 8),
    ) {
        let x = DataMatrix::new(DMatrix::from_vec(m, n, cells)).unwrap();
        let labels = LabelVector::from_raw(raw_labels[..n].iter().map(|l| l.to_string())).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &x, Some(&labels)).unwrap();
        let (back, back_labels) = read_dataset(buf.as_slice(), true).unwrap();
        prop_assert_eq!(back.values(), x.values());
        prop_assert_eq!(back_labels.unwrap(), labels);
    }

    #[test]
    fn labels_survive_write_and_read(raw in proptest::collection::vec(0usize..6, 1..30)) {
        let labels = LabelVector::canonical(&raw).unwrap();
        let mut buf = Vec::new();
        write_labels(&mut buf, &labels).unwrap();
        prop_assert_eq!(read_labels(buf.as_slice()).unwrap(), labels);
    }
}
