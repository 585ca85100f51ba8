use tmgnn_web::{gumbel_histogram, outbreak, resolution_selection};

#[test]
fn outbreak_on_a_square() {
    let steps: serde_json::Value = serde_json::from_str(&outbreak(4, 1, 3).unwrap()).unwrap();
    let sizes: Vec<_> = steps
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["cluster_sizes"].clone())
        .collect();
    assert_eq!(
        sizes,
        vec![
            serde_json::json!([3, 1]),
            serde_json::json!([1, 3]),
            serde_json::json!([4, 0])
        ]
    );
    assert!(outbreak(2, 0, 1).is_err());
    assert!(outbreak(5, 9, 1).is_err());
}

#[test]
fn histogram_tracks_softmax() {
    let counts = gumbel_histogram(vec![2f64.ln(), 0.0], 1.0, 20_000, 3).unwrap();
    assert_eq!(counts.iter().sum::<u32>(), 20_000);
    assert!((f64::from(counts[0]) / 20_000.0 - 2.0 / 3.0).abs() < 0.02);
    assert!(gumbel_histogram(vec![], 1.0, 10, 0).is_err());
    assert!(gumbel_histogram(vec![0.0], 0.0, 10, 0).is_err());
}

#[test]
fn selection_report_shape() {
    let r: serde_json::Value = serde_json::from_str(&resolution_selection("1, 4, 12", 2, 0).unwrap()).unwrap();
    assert_eq!(r["level_sizes"], serde_json::json!([1, 4, 12]));
    let p: Vec<f64> = serde_json::from_value(r["level_probabilities"].clone()).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let sel = r["selected_level"].as_u64().unwrap() as usize;
    assert!(p.iter().all(|&q| q <= p[sel - 1]));
    assert!(resolution_selection("4, x", 1, 0).is_err());
    assert!(resolution_selection("4, 12", 9, 0).is_err());
    assert!(resolution_selection("0", 1, 0).is_err());
}
