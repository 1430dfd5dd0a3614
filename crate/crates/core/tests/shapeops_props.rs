use proptest::prelude::*;
use shapereg::shapeops::{
    monotonic_projection_grid, monotonic_projection_grid_with, pava_1d, rearrangement_1d,
    GridFunction, ProjectionOptions,
};
use shapereg::{Execution, ShapeConstraintSpec, Sign};

fn grid_2d(rows: usize, cols: usize, values: Vec<f64>) -> GridFunction {
    let axes = vec![
        (0..rows).map(|i| i as f64).collect(),
        (0..cols).map(|i| i as f64).collect(),
    ];
    GridFunction::new(axes, values).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn one_dimensional_projection_equals_pava(
        values in prop::collection::vec(-10.0f64..10.0, 1..=12),
        decreasing in any::<bool>(),
    ) {
        let axis = (0..values.len()).map(|i| i as f64).collect();
        let g = GridFunction::new(vec![axis], values.clone()).unwrap();
        let (sig, sign) = if decreasing { (-1, Sign::Negative) } else { (1, Sign::Positive) };
        let spec = ShapeConstraintSpec::from_signature(&[sig]).unwrap();
        let p = monotonic_projection_grid(&g, &spec).unwrap();
        let q = pava_1d(&values, sign);
        for (a, b) in p.values().iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn projection_is_nonexpansive_and_idempotent(
        a in prop::collection::vec(-5.0f64..5.0, 12),
        b in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        let spec = ShapeConstraintSpec::from_signature(&[1, -1]).unwrap();
        let pa = monotonic_projection_grid(&grid_2d(3, 4, a.clone()), &spec).unwrap();
        let pb = monotonic_projection_grid(&grid_2d(3, 4, b.clone()), &spec).unwrap();
        prop_assert!(dist(pa.values(), pb.values()) <= dist(&a, &b) + 1e-9);
        prop_assert!(pa.min_monotone_slack(&spec) >= -1e-8);
        let again = monotonic_projection_grid(&pa, &spec).unwrap();
        prop_assert!(dist(again.values(), pa.values()) <= 1e-10);
    }

    #[test]
    fn rearrangement_keeps_multiset_and_is_idempotent(
        values in prop::collection::vec(-10.0f64..10.0, 1..=20),
    ) {
        let axis = (0..values.len()).map(|i| i as f64).collect();
        let g = GridFunction::new(vec![axis], values.clone()).unwrap();
        let r = rearrangement_1d(&g, Sign::Positive).unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(r.values(), &sorted[..]);
        prop_assert_eq!(rearrangement_1d(&r, Sign::Positive).unwrap(), r);
    }
}

#[test]
fn sequential_and_parallel_projection_agree() {
    let axes = GridFunction::uniform_axes(&[0.0; 3], &[1.0; 3], 12);
    let g = GridFunction::from_fn(axes, |x| (9.0 * x[0]).sin() + x[1] * (4.0 * x[2]).cos()).unwrap();
    let spec = ShapeConstraintSpec::from_signature(&[1, 1, -1]).unwrap();
    let run = |execution| {
        let opts = ProjectionOptions {
            execution,
            ..ProjectionOptions::default()
        };
        monotonic_projection_grid_with(&g, &spec, &opts).unwrap()
    };
    let s = run(Execution::Sequential);
    let p = run(Execution::Parallel);
    assert_eq!(s.grid, p.grid);
    assert!(s.kkt_residual <= 1e-6);
}
