use proptest::prelude::*;

use superent::bounds::{clifford_mixture_super, pushforward_witness, random_pauli_channel};
use superent::channels::{random_channel_with, tensor_channels};
use superent::divergences::{
    channel_entropy_telecov, divergence_at, entropy_at, rel_entropy, vn_entropy, PureBipartiteState,
};
use superent::linalg::{
    fidelity, hermitize, identity, max_abs, min_eig, partial_trace, tensor, trace, trace_norm, Keep,
};
use superent::random::{ginibre, random_density, stream_rng};
use superent::recovery::{petz, universal_recovery};
use superent::superchannels::{is_r_subpreserving, random_isometry_super_seeded, tp_fix};
use superent::Quadrature;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let (a, b) = (random_density(da, &mut rng), random_density(db, &mut rng));
        let ab = tensor(&a, &b);
        prop_assert!(max_abs(&(partial_trace(&ab, (da, db), Keep::First).unwrap() - &a)) < 1e-12);
        prop_assert!(max_abs(&(partial_trace(&ab, (da, db), Keep::Second).unwrap() - &b)) < 1e-12);
    }

    #[test]
    fn random_channels_are_cptp(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, env in 1usize..4) {
        prop_assume!(dout * env >= din);
        let n = random_channel_with(din, dout, env, &mut stream_rng(seed, 0)).unwrap();
        prop_assert!(min_eig(&n.choi) > -1e-10);
        prop_assert!(max_abs(&(n.trace_out() - identity(din))) < 1e-10);
        let rho = random_density(din, &mut stream_rng(seed, 1));
        let out = n.apply(&rho).unwrap();
        prop_assert!((trace(&out).re - 1.0).abs() < 1e-10);
        prop_assert!(min_eig(&hermitize(&out)) > -1e-10);
    }

    #[test]
    fn entropies_in_range(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = stream_rng(seed, 0);
        let (rho, sigma) = (random_density(d, &mut rng), random_density(d, &mut rng));
        let s = vn_entropy(&rho).unwrap();
        prop_assert!(s >= -1e-12 && s <= (d as f64).log2() + 1e-12);
        prop_assert!(rel_entropy(&rho, &sigma).unwrap() >= -1e-10);
        prop_assert!(rel_entropy(&rho, &rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = stream_rng(seed, 0);
        let (rho, sigma) = (random_density(d, &mut rng), random_density(d, &mut rng));
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-8);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn state_dpi_and_petz(seed in any::<u64>(), din in 2usize..4, dout in 2usize..4) {
        let mut rng = stream_rng(seed, 0);
        let (rho, sigma) = (random_density(din, &mut rng), random_density(din, &mut rng));
        let n = random_channel_with(din, dout, 2, &mut rng).unwrap();
        let before = rel_entropy(&rho, &sigma).unwrap();
        let after = rel_entropy(&hermitize(&n.apply(&rho).unwrap()), &hermitize(&n.apply(&sigma).unwrap())).unwrap();
        prop_assert!(before >= after - 1e-9);
        let p = petz(&sigma, &n).unwrap();
        prop_assert!(trace_norm(&(p.apply(&n.apply(&sigma).unwrap()).unwrap() - &sigma)) < 1e-8);
    }

    #[test]
    fn tensor_channel_acts_on_products(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let n = random_channel_with(2, 3, 2, &mut rng).unwrap();
        let m = random_channel_with(2, 2, 2, &mut rng).unwrap();
        let (a, b) = (random_density(2, &mut rng), random_density(2, &mut rng));
        let lhs = tensor_channels(&n, &m).apply(&tensor(&a, &b)).unwrap();
        let rhs = tensor(&n.apply(&a).unwrap(), &m.apply(&b).unwrap());
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn isometry_superchannels_preserve_channels(seed in any::<u64>(), terms in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let theta = random_isometry_super_seeded(terms, [2, 2, 2, 2], &mut rng).unwrap();
        let n = random_channel_with(2, 2, 2, &mut rng).unwrap();
        let out = theta.apply(&n).unwrap();
        prop_assert!(min_eig(&out.choi) > -1e-10);
        prop_assert!(max_abs(&(out.trace_out() - identity(2))) < 1e-10);
        prop_assert!(is_r_subpreserving(&theta).min_eig > -1e-10);
    }

    #[test]
    fn pushforward_witness_bounds_both_sides(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let theta = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut rng).unwrap();
        let n = random_channel_with(2, 2, 2, &mut rng).unwrap();
        let m = random_channel_with(2, 2, 4, &mut rng).unwrap();
        let phi = PureBipartiteState::new(ginibre(2, 2, &mut rng)).unwrap();
        let psi = pushforward_witness(&theta, &phi).unwrap();
        let (tn, tm) = (theta.apply(&n).unwrap(), theta.apply(&m).unwrap());
        prop_assert!(divergence_at(&n, &m, &psi).unwrap() >= divergence_at(&tn, &tm, &phi).unwrap() - 1e-9);
        prop_assert!(entropy_at(&tn, &phi).unwrap() >= entropy_at(&n, &psi).unwrap() - 1e-9);
    }

    #[test]
    fn pauli_entropy_closed_form_in_range(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let n = random_pauli_channel(&mut rng).unwrap();
        let s = channel_entropy_telecov(&n).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s));
        let theta = clifford_mixture_super(2, &mut rng).unwrap();
        let after = channel_entropy_telecov(&theta.apply(&n).unwrap()).unwrap();
        prop_assert!(after >= s - 1e-9);
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn universal_recovery_is_a_channel(seed in any::<u64>(), din in 2usize..4, dout in 2usize..4) {
        let mut rng = stream_rng(seed, 0);
        let sigma = random_density(din, &mut rng);
        let n = random_channel_with(din, dout, 2, &mut rng).unwrap();
        let q = Quadrature { half_width: 20.0, nodes: 201 };
        let rec = universal_recovery(&sigma, &n, &q).unwrap();
        prop_assert!(rec.choi_min_eig() > -1e-9);
        prop_assert!(rec.tp_residual() < 1e-8);
    }

    #[test]
    fn tp_fix_leaves_channels_alone(seed in any::<u64>()) {
        let n = random_channel_with(2, 2, 2, &mut stream_rng(seed, 0)).unwrap();
        let fixed = tp_fix(&n, None).unwrap();
        let rho = random_density(2, &mut stream_rng(seed, 1));
        prop_assert!(fixed.is_cptp);
        prop_assert!(max_abs(&(fixed.map.apply(&rho).unwrap() - n.apply(&rho).unwrap())) < 1e-10);
        prop_assert!(fixed.tp_residual < 1e-10);
    }
}
