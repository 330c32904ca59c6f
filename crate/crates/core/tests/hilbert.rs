mod common;

use common::*;
use proptest::prelude::*;
use qdc_core::hilbert::{
    apply_local, born_probabilities, inner_product, measure_projective, partial_trace, superpose,
    LocalOperator, MixedRadixState, ProjectiveMeasurement, SubsystemLayout,
};
use qdc_core::linalg::{self, ONE, ZERO};
use qdc_core::protocol::{canonical_state, PairProjectorSet, ReceiverPair, Sign};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn layout_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=4, 1..=4)
        .prop_filter("≤ 144 amplitudes", |d| d.iter().product::<usize>() <= 144)
}

/// Rank-one-per-basis-vector projectors onto a random split of the local basis.
fn random_projector_set(
    dim: usize,
    targets: Vec<usize>,
    rng: &mut ChaCha8Rng,
) -> ProjectiveMeasurement {
    use rand::Rng;
    let u = random_unitary(dim, rng);
    let parts = rng.random_range(1..=dim.min(4));
    let mut groups = vec![vec![]; parts];
    for col in 0..dim {
        groups[if col < parts {
            col
        } else {
            rng.random_range(0..parts)
        }]
        .push(col);
    }
    let projectors = groups
        .iter()
        .map(|cols| {
            let mut p = ndarray::Array2::from_elem((dim, dim), ZERO);
            for &j in cols {
                let v = u.column(j).to_vec();
                p += &linalg::outer(&v, &v);
            }
            LocalOperator::new(p, targets.clone()).unwrap()
        })
        .collect();
    ProjectiveMeasurement::new(projectors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unitaries_preserve_norm(dims in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let state = random_state(&layout, &mut rng);
        let targets = random_targets(dims.len(), &mut rng);
        let dim = targets.iter().map(|&t| dims[t]).product();
        let op = LocalOperator::unitary(random_unitary(dim, &mut rng), targets).unwrap();
        let out = apply_local(&state, &op).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composition_matches_product(dims in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let state = random_state(&layout, &mut rng);
        let targets = random_targets(dims.len(), &mut rng);
        let dim = targets.iter().map(|&t| dims[t]).product();
        let a = LocalOperator::unitary(random_unitary(dim, &mut rng), targets.clone()).unwrap();
        let b = LocalOperator::unitary(random_unitary(dim, &mut rng), targets).unwrap();
        let sequential = apply_local(&apply_local(&state, &a).unwrap(), &b).unwrap();
        let composed = apply_local(&state, &a.then(&b).unwrap()).unwrap();
        prop_assert!(sequential.max_deviation(&composed).unwrap() < 1e-12);
    }

    #[test]
    fn born_probabilities_sum_to_one(dims in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let state = random_state(&layout, &mut rng);
        let targets = random_targets(dims.len(), &mut rng);
        let dim = targets.iter().map(|&t| dims[t]).product();
        let set = random_projector_set(dim, targets, &mut rng);
        let total: f64 = born_probabilities(&state, &set).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn repeated_measurement_is_idempotent(dims in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let state = random_state(&layout, &mut rng);
        let targets = random_targets(dims.len(), &mut rng);
        let dim = targets.iter().map(|&t| dims[t]).product();
        let set = random_projector_set(dim, targets, &mut rng);
        let first = measure_projective(&state, &set, &mut rng).unwrap();
        let second = measure_projective(&first.post, &set, &mut rng).unwrap();
        prop_assert_eq!(first.outcome, second.outcome);
        prop_assert!((second.probability - 1.0).abs() < 1e-10);
        prop_assert!((first.post.fidelity(&second.post).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn apply_local_matches_full_embedding(dims in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let state = random_state(&layout, &mut rng);
        let targets = random_targets(dims.len(), &mut rng);
        let dim = targets.iter().map(|&t| dims[t]).product();
        let op = LocalOperator::new(random_matrix(dim, &mut rng), targets).unwrap();
        let out = apply_local(&state, &op).unwrap();
        let expected = mat_vec(&full_embedding(&op, &dims), state.amplitudes());
        prop_assert!(max_vec_diff(out.amplitudes(), &expected) < 1e-12);
        if let Some(k) = kron_embedding(&op, &dims) {
            prop_assert!(max_vec_diff(out.amplitudes(), &mat_vec(&k, state.amplitudes())) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_matches_summation(dims in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let state = random_state(&layout, &mut rng);
        let keep = random_targets(dims.len(), &mut rng);
        let rho = partial_trace(&state, &keep).unwrap();
        prop_assert!(linalg::max_abs_diff(rho.matrix(), &reduced_by_summation(&state, &keep)) < 1e-12);
        prop_assert!((linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_bounded(dims in layout_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let a = random_state(&layout, &mut rng);
        let b = random_state(&layout, &mut rng);
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        prop_assert!(ab.norm() <= 1.0 + 1e-12);
        prop_assert!((ab - ba.conj()).norm() < 1e-15);
    }

    #[test]
    fn flat_index_matches_positional(dims in layout_strategy(), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = SubsystemLayout::new(&dims).unwrap();
        let flat = rng.random_range(0..layout.total_dim());
        prop_assert_eq!(layout.flat_index(&digits_of(flat, &dims)).unwrap(), flat);
    }
}

#[test]
fn same_seed_same_outcome() {
    let layout = SubsystemLayout::new(&[3, 2]).unwrap();
    let state = superpose(
        &layout,
        &[(ONE, vec![0, 0]), (ONE, vec![1, 0]), (ONE, vec![2, 1])],
    )
    .unwrap();
    let set = PairProjectorSet::get()
        .on(ReceiverPair::for_slot(1, 1).unwrap())
        .unwrap();
    for seed in 0..20 {
        let a = measure_projective(&state, &set, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = measure_projective(&state, &set, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.post, b.post);
        assert_eq!(a.probability.to_bits(), b.probability.to_bits());
    }
}

#[test]
fn all_layouts_enumeration_is_complete() {
    let layouts = all_layouts(144);
    assert_eq!(layouts.len(), 1824);
    assert!(layouts.iter().all(|d| d.iter().product::<usize>() <= 144));
}

#[test]
fn reduced_states_of_protocol_states() {
    let half = |i: usize, j: usize| {
        if i == j && (i == 0 || i == 3) {
            0.5
        } else {
            0.0
        }
    };
    // Channel state, keep (qutrit 1, qubit 3): ½(|00⟩⟨00| + |11⟩⟨11|).
    let mu1 = canonical_state(1, Sign::Plus).unwrap();
    let rho = partial_trace(&mu1, &[0, 2]).unwrap();
    let oracle = reduced_by_summation(&mu1, &[0, 2]);
    assert!(linalg::max_abs_diff(rho.matrix(), &oracle) < 1e-12);
    for i in 0..6 {
        for j in 0..6 {
            assert!((oracle[[i, j]].re - half(i, j)).abs() < 1e-12);
        }
    }
    // μ₂⁻, keep (qutrit 2, qubit 4): same operator; the sign is invisible.
    let mu2m = canonical_state(2, Sign::Minus).unwrap();
    let rho = partial_trace(&mu2m, &[1, 3]).unwrap();
    let oracle = reduced_by_summation(&mu2m, &[1, 3]);
    assert!(linalg::max_abs_diff(rho.matrix(), &oracle) < 1e-12);
    for i in 0..6 {
        for j in 0..6 {
            assert!((oracle[[i, j]].re - half(i, j)).abs() < 1e-12);
        }
    }
}

#[test]
fn table_inner_products() {
    let p1 = canonical_state(1, Sign::Plus).unwrap();
    let p2 = canonical_state(2, Sign::Plus).unwrap();
    let m2 = canonical_state(2, Sign::Minus).unwrap();
    let p9 = canonical_state(9, Sign::Plus).unwrap();
    assert!((inner_product(&p1, &p1).unwrap() - ONE).norm() < 1e-12);
    assert!(inner_product(&p2, &m2).unwrap().norm() < 1e-12);
    assert!(inner_product(&p1, &p9).unwrap().norm() < 1e-12);
    // Explicit amplitude dot product for the last pair.
    let dot: num_complex::Complex64 = p1
        .amplitudes()
        .iter()
        .zip(p9.amplitudes())
        .map(|(a, b)| a.conj() * b)
        .sum();
    assert_eq!(dot, ZERO);
}

#[test]
fn mixed_state_rejects_foreign_layout() {
    let a = MixedRadixState::basis(SubsystemLayout::new(&[3, 2]).unwrap(), &[1, 1]).unwrap();
    let rho = partial_trace(&a, &[1]).unwrap();
    assert_eq!(rho.layout().dims(), &[2]);
    assert!(rho.eigenvalues().iter().all(|&l| l > -1e-10));
}
