//! Generates the bundled demonstration fixture: a seeded diabetes-style
//! table with dependent columns, plus matching schema, rule, check, and
//! pipeline config files. Regenerating with the same seed reproduces the
//! files byte for byte.

use std::path::PathBuf;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use syntab_core::fidelity::ConsistencyCheck;
use syntab_core::rules::{ClinicalRule, Comparator, Condition, RuleSet, RuleValue};
use syntab_core::table::{ColumnKind, ColumnSchema, TableSchema};

const SEED: u64 = 4242;
const ROWS: usize = 500;

#[derive(Parser)]
#[command(name = "make-fixtures", about = "Write the demo dataset and config files")]
struct Cli {
    /// Directory to write the fixture files into.
    #[arg(long, default_value = "fixtures")]
    out: PathBuf,
}

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + sd * z
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

struct Row {
    gender: &'static str,
    age: i64,
    hypertension: u8,
    heart_disease: u8,
    smoking: &'static str,
    bmi: f64,
    hba1c: f64,
    glucose: i64,
    diabetes: u8,
}

fn sample_row(rng: &mut ChaCha8Rng) -> Row {
    let gender = if rng.gen_bool(0.48) { "Male" } else { "Female" };
    let age = normal(rng, 45.0, 15.0).round().clamp(18.0, 80.0) as i64;
    let hyper_p = (0.08 + 0.30 * (age - 18) as f64 / 62.0).clamp(0.0, 1.0);
    let hypertension = u8::from(rng.gen_bool(hyper_p));
    let heart_disease = if age < 25 {
        0
    } else {
        let p = (0.05 + 0.15 * (age - 25) as f64 / 55.0).clamp(0.0, 1.0);
        u8::from(rng.gen_bool(p))
    };
    let smoking = {
        let u: f64 = rng.gen_range(0.0..1.0);
        if u < 0.42 {
            "never"
        } else if u < 0.64 {
            "former"
        } else if u < 0.84 {
            "current"
        } else {
            "ever"
        }
    };
    let bmi = round1(normal(rng, 27.5, 6.0).clamp(15.0, 60.0));
    let hba1c = round1(normal(rng, 5.5, 0.9).clamp(3.5, 9.0));
    let glucose = (80.0 + 10.0 * hba1c + normal(rng, 0.0, 20.0))
        .round()
        .clamp(80.0, 300.0) as i64;
    let diabetes = if hba1c > 6.5 || glucose > 250 {
        1
    } else if hba1c > 5.5 {
        u8::from(rng.gen_bool(0.12))
    } else {
        0
    };
    Row {
        gender,
        age,
        hypertension,
        heart_disease,
        smoking,
        bmi,
        hba1c,
        glucose,
        diabetes,
    }
}

fn render_csv(rows: &[Row]) -> String {
    let mut doc = String::from(
        "gender,age,hypertension,heart_disease,smoking_history,bmi,HbA1c_level,blood_glucose_level,diabetes\n",
    );
    for r in rows {
        doc.push_str(&format!(
            "{},{},{},{},{},{:.1},{:.1},{},{}\n",
            r.gender, r.age, r.hypertension, r.heart_disease, r.smoking, r.bmi, r.hba1c,
            r.glucose, r.diabetes
        ));
    }
    doc
}

fn schema() -> TableSchema {
    let col = |name: &str, kind: ColumnKind| ColumnSchema {
        name: name.into(),
        kind,
        bounds: None,
        categories: None,
        description: String::new(),
        quasi_identifier: false,
    };
    TableSchema {
        columns: vec![
            ColumnSchema {
                categories: Some(vec!["Female".into(), "Male".into()]),
                description: "patient gender".into(),
                quasi_identifier: true,
                ..col("gender", ColumnKind::Categorical)
            },
            ColumnSchema {
                bounds: Some((18.0, 80.0)),
                description: "age in years".into(),
                quasi_identifier: true,
                ..col("age", ColumnKind::Numeric)
            },
            ColumnSchema {
                description: "diagnosed hypertension".into(),
                ..col("hypertension", ColumnKind::Binary)
            },
            ColumnSchema {
                description: "diagnosed heart disease".into(),
                ..col("heart_disease", ColumnKind::Binary)
            },
            ColumnSchema {
                categories: Some(vec![
                    "current".into(),
                    "ever".into(),
                    "former".into(),
                    "never".into(),
                ]),
                description: "smoking history category".into(),
                ..col("smoking_history", ColumnKind::Categorical)
            },
            ColumnSchema {
                bounds: Some((15.0, 60.0)),
                description: "body mass index".into(),
                ..col("bmi", ColumnKind::Numeric)
            },
            ColumnSchema {
                bounds: Some((3.5, 9.0)),
                description: "glycated hemoglobin percentage".into(),
                ..col("HbA1c_level", ColumnKind::Numeric)
            },
            ColumnSchema {
                bounds: Some((80.0, 300.0)),
                description: "blood glucose in mg/dL".into(),
                ..col("blood_glucose_level", ColumnKind::Numeric)
            },
            ColumnSchema {
                description: "diabetes diagnosis".into(),
                ..col("diabetes", ColumnKind::Binary)
            },
        ],
        label_column: Some("diabetes".into()),
        task: Some("diabetes prediction".into()),
    }
}

fn cond(field: &str, op: Comparator, value: f64) -> Condition {
    Condition {
        field: field.into(),
        op,
        value: RuleValue::Number(value),
    }
}

fn rules() -> RuleSet {
    RuleSet {
        rules: vec![
            ClinicalRule {
                id: "hba1c_diagnostic".into(),
                antecedent: vec![cond("HbA1c_level", Comparator::Gt, 6.5)],
                consequent: vec![cond("diabetes", Comparator::Eq, 1.0)],
                hard: true,
            },
            ClinicalRule {
                id: "glucose_diagnostic".into(),
                antecedent: vec![cond("blood_glucose_level", Comparator::Gt, 250.0)],
                consequent: vec![cond("diabetes", Comparator::Eq, 1.0)],
                hard: true,
            },
            ClinicalRule {
                id: "young_heart".into(),
                antecedent: vec![cond("age", Comparator::Lt, 25.0)],
                consequent: vec![cond("heart_disease", Comparator::Eq, 0.0)],
                hard: true,
            },
            ClinicalRule {
                id: "diabetic_hba1c_floor".into(),
                antecedent: vec![cond("diabetes", Comparator::Eq, 1.0)],
                consequent: vec![cond("HbA1c_level", Comparator::Gt, 5.5)],
                hard: false,
            },
        ],
        provenance: "demo ruleset for the bundled fixture".into(),
    }
}

fn checks() -> Vec<ConsistencyCheck> {
    vec![
        ConsistencyCheck::GroupMeanGap {
            value: "HbA1c_level".into(),
            group: "diabetes".into(),
        },
        ConsistencyCheck::GroupMeanGap {
            value: "blood_glucose_level".into(),
            group: "diabetes".into(),
        },
        ConsistencyCheck::SlopeGap {
            x: "age".into(),
            y: "blood_glucose_level".into(),
        },
        ConsistencyCheck::CooccurrenceGap {
            a: "hypertension".into(),
            b: "heart_disease".into(),
        },
    ]
}

fn config() -> serde_json::Value {
    serde_json::json!({
        "dataset": "diabetes.csv",
        "schema": "schema.json",
        "rules": "rules.json",
        "checks": "checks.json",
        "k": 120,
        "seed": 42,
        "out_dir": "out",
        "thresholds": {"eps_stat": 0.2, "eps_util": 0.1, "delta_priv": 0.5}
    })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    std::fs::create_dir_all(&cli.out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let rows: Vec<Row> = (0..ROWS).map(|_| sample_row(&mut rng)).collect();

    let files = [
        ("diabetes.csv", render_csv(&rows)),
        (
            "schema.json",
            format!("{}\n", serde_json::to_string_pretty(&schema())?),
        ),
        (
            "rules.json",
            format!("{}\n", serde_json::to_string_pretty(&rules())?),
        ),
        (
            "checks.json",
            format!("{}\n", serde_json::to_string_pretty(&checks())?),
        ),
        (
            "config.json",
            format!("{}\n", serde_json::to_string_pretty(&config())?),
        ),
    ];
    for (name, content) in files {
        let path = cli.out.join(name);
        std::fs::write(&path, content)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
