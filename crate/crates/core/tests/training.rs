//! End-to-end training behavior on small TBoxes.

use selbox::generator::{generate, GeneratorConfig};
use selbox::inference::GeometricInterpretation;
use selbox::ontology::parse_tbox;
use selbox::train::{train, train_ensemble, TrainConfig, TrainError};

fn quick(seed: u64) -> TrainConfig {
    TrainConfig {
        dim: 4,
        epochs: 60,
        batch_size: 16,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn loss_falls_on_a_consistent_tbox() {
    let t = parse_tbox("gci B A\ngci C A\ncond 0.3 0.5 B | A\ncond 0.2 0.4 C | B").unwrap();
    let cfg = TrainConfig {
        relative_loss: true,
        use_vol: false,
        epochs: 400,
        ..quick(1)
    };
    let (e, report) = train(&t, &cfg).unwrap();
    assert_eq!(report.epoch_loss.len(), 400);
    assert!(report.final_hard_loss < report.initial_hard_loss);
    let first = report.epoch_loss[..5].iter().sum::<f64>();
    let last = report.epoch_loss[395..].iter().sum::<f64>();
    assert!(last < first, "loss went from {first} to {last}");
    let g = GeometricInterpretation::new(e);
    let (a, b) = (t.conditionals()[0].head.clone(), t.conditionals()[0].body.clone());
    let p = g.point_estimate(&a, &b).unwrap();
    assert!(p > 0.9, "B ⊑ A holds only to {p}");
}

#[test]
fn same_seed_same_embedding() {
    let t = parse_tbox("gci B A\ncond 0.5 0.5 B | A\ngci A (some r B)").unwrap();
    let a = train(&t, &quick(3)).unwrap().0;
    let b = train(&t, &quick(3)).unwrap().0;
    assert_eq!(a.to_json(), b.to_json());
    assert_ne!(a.to_json(), train(&t, &quick(4)).unwrap().0.to_json());
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let t = parse_tbox("gci B A\ncond 0.5 0.5 B | A").unwrap();
    let one = train_ensemble(&t, t.signature(), &quick(0), 3, 1).unwrap();
    let many = train_ensemble(&t, t.signature(), &quick(0), 3, 3).unwrap();
    for ((a, _), (b, _)) in one.iter().zip(&many) {
        assert_eq!(a.to_json(), b.to_json());
    }
    assert_ne!(one[0].0.to_json(), one[1].0.to_json());
}

#[test]
fn complex_conditionals_need_the_option() {
    let (_, t) = generate(&GeneratorConfig {
        concepts: 4,
        domain: 100,
        ..GeneratorConfig::default()
    })
    .unwrap();
    assert_eq!(train(&t, &quick(0)).unwrap_err(), TrainError::NotNormalized);
    let cfg = TrainConfig {
        complex_conditionals: true,
        relative_loss: true,
        epochs: 5,
        ..quick(0)
    };
    let (_, report) = train(&t, &cfg).unwrap();
    assert!(report.final_hard_loss.is_finite());

    let nested = parse_tbox("gci (some r (and A B)) C").unwrap();
    assert_eq!(train(&nested, &cfg).unwrap_err(), TrainError::NotNormalized);
}
