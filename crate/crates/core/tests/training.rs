use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfprobe::embedding::{EmbeddingTable, Token};
use surfprobe::probe::{
    load_checkpoint, predict_set, save_checkpoint, train, Head, MatrixSet, MlpConfig, MlpParams, Optimizer,
    Predictions, Targets, TrainConfig,
};
use surfprobe::tasks::{build_length_dataset, TableExamples};

fn blobs(n: usize, seed: u64) -> MatrixSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let positive = i % 2 == 0;
        let c = if positive { 2.0 } else { -2.0 };
        rows.push(c + rng.gen_range(-1.0..1.0));
        rows.push(-c + rng.gen_range(-1.0..1.0));
        labels.push(positive);
    }
    MatrixSet {
        cols: 2,
        rows,
        targets: Targets::Binary(labels),
    }
}

fn config(epochs: usize, batch_size: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size,
        optimizer: Optimizer::default(),
        seed,
    }
}

#[test]
fn separable_blobs_are_learned() {
    let data = blobs(400, 1);
    let ids: Vec<usize> = (0..400).collect();
    let params = MlpParams::init(MlpConfig::new(2, 1).with_hidden(16), 0).unwrap();
    let out = train(params, &data, &ids, &config(20, 32, 0), &Head::Binary).unwrap();
    let test = blobs(400, 2);
    let Predictions::Probability(p) = predict_set(&out.params, &test, &ids, &Head::Binary, 100).unwrap() else {
        panic!()
    };
    let Targets::Binary(labels) = &test.targets else { panic!() };
    let hits = p.iter().zip(labels).filter(|(p, &l)| (**p > 0.5) == l).count();
    assert!(hits as f64 / 400.0 >= 0.99, "{hits}");
}

#[test]
fn single_example_is_memorised() {
    let data = MatrixSet {
        cols: 3,
        rows: vec![0.3, -1.2, 0.8],
        targets: Targets::Real(vec![3.7]),
    };
    let params = MlpParams::init(MlpConfig::new(3, 1).with_hidden(8), 4).unwrap();
    let out = train(params, &data, &[0], &config(2000, 1, 0), &Head::Regression).unwrap();
    let last = *out.loss_curve.last().unwrap();
    assert!(last < 1e-3, "{last}");
    assert_eq!(out.loss_curve.len(), 2000);
}

#[test]
fn training_is_deterministic_per_seed() {
    let data = blobs(100, 3);
    let ids: Vec<usize> = (0..100).collect();
    let init = MlpParams::init(MlpConfig::new(2, 1).with_hidden(6), 9).unwrap();
    let a = train(init.clone(), &data, &ids, &config(3, 7, 5), &Head::Binary).unwrap();
    let b = train(init.clone(), &data, &ids, &config(3, 7, 5), &Head::Binary).unwrap();
    let c = train(init, &data, &ids, &config(3, 7, 6), &Head::Binary).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.loss_curve, b.loss_curve);
    assert_ne!(a.params, c.params);
}

#[test]
fn embeddings_stay_frozen() {
    let words = ["a", "bb", "ccc", "dddd", "ab", "abc"];
    let tokens: Vec<Token> = words.iter().map(|w| Token::plain(w)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let vectors: Vec<f64> = (0..words.len() * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let table = EmbeddingTable::new(tokens, vectors, 4).unwrap();
    let before = table.clone();
    let ds = build_length_dataset(&table);
    let view = TableExamples::new(&table, &ds.examples).unwrap();
    let ids: Vec<usize> = (0..ds.len()).collect();
    let params = MlpParams::init(MlpConfig::new(4, 1).with_hidden(8), 0).unwrap();
    train(params, &view, &ids, &config(5, 2, 0), &Head::Regression).unwrap();
    let bits = |t: &EmbeddingTable<f64>| t.matrix().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&table), bits(&before));
}

#[test]
fn checkpoints_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let params = MlpParams::<f64>::init(MlpConfig::new(5, 3).with_hidden(7), 12).unwrap();
    let path = dir.path().join("probe.json");
    save_checkpoint(&params, &path).unwrap();
    assert_eq!(load_checkpoint::<f64>(&path).unwrap(), params);
}

#[test]
fn divergence_is_reported() {
    let data = MatrixSet {
        cols: 1,
        rows: vec![1e300, -1e300],
        targets: Targets::Real(vec![1e300, 0.0]),
    };
    let params = MlpParams::init(MlpConfig::new(1, 1).with_hidden(4), 0).unwrap();
    let err = train(params, &data, &[0, 1], &config(2, 2, 0), &Head::Regression).unwrap_err();
    assert_eq!(err.kind(), "diverged");
}
