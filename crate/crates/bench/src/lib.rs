//! Deterministic workload builders for the benchmark suite: Gaussian
//! samples for the distribution metrics and seeded mixed-type tables for
//! the privacy and utility paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use syntab_core::table::{Cell, ColumnKind, ColumnSchema, DatasetTable, TableSchema};

pub fn gaussian_sample(n: usize, mean: f64, stdev: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(mean, stdev).expect("valid normal");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// Schema with two numerics, a binary label, and a categorical
/// quasi-identifier, shaped like a small clinical extract.
pub fn mixed_schema() -> TableSchema {
    let col = |name: &str, kind: ColumnKind, qi: bool| ColumnSchema {
        name: name.into(),
        kind,
        bounds: None,
        categories: None,
        description: String::new(),
        quasi_identifier: qi,
    };
    TableSchema {
        columns: vec![
            col("age", ColumnKind::Numeric, true),
            col("marker", ColumnKind::Numeric, false),
            col("site", ColumnKind::Categorical, true),
            col("outcome", ColumnKind::Binary, false),
        ],
        label_column: Some("outcome".into()),
        task: Some("outcome prediction".into()),
    }
}

/// A complete seeded table over [`mixed_schema`]. The label depends on the
/// marker so trained models have signal to find.
pub fn mixed_table(rows: usize, seed: u64) -> DatasetTable {
    const SITES: [&str; 4] = ["north", "south", "east", "west"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let age = Normal::new(55.0, 12.0).expect("valid normal");
    let marker = Normal::new(1.0, 0.4).expect("valid normal");
    let data = (0..rows)
        .map(|_| {
            let a: f64 = age.sample(&mut rng);
            let m: f64 = marker.sample(&mut rng);
            let site = SITES[rng.gen_range(0..SITES.len())];
            let outcome = if m > 1.1 || rng.gen_bool(0.1) { 1.0 } else { 0.0 };
            vec![
                Cell::Number(a.clamp(18.0, 95.0).round()),
                Cell::Number((m.max(0.0) * 100.0).round() / 100.0),
                Cell::Text(site.into()),
                Cell::Number(outcome),
            ]
        })
        .collect();
    DatasetTable::new(mixed_schema(), data).expect("benchmark table is valid")
}
