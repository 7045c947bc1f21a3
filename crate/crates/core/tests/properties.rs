use msqg::chaos::{apply_gm, cutoff_split, tuples, CutoffSpec};
use msqg::harness::{
    config_hash, run_galerkin_ensemble, sum_identity_residual, EnsembleSpec, ExperimentKind,
};
use msqg::kernel::{bump, h_eps_phi, KernelSeries};
use msqg::modes::{dot, modes_in_ball};
use msqg::rng::{derive_seed, stream, StreamRole};
use msqg::theta::{key_identity_matrix, stratonovich_correction};
use msqg::vortex::{sample_initial_vortices, simulate_vortex_path, vortex_drift, VortexState};
use msqg::*;
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = Mode> {
    (-12i32..=12, -12i32..=12)
        .prop_filter("nonzero", |(a, b)| (*a, *b) != (0, 0))
        .prop_map(|(a, b)| Mode::of(a, b))
}

fn small_mode() -> impl Strategy<Value = Mode> {
    (-3i32..=3, -3i32..=3)
        .prop_filter("nonzero", |(a, b)| (*a, *b) != (0, 0))
        .prop_map(|(a, b)| Mode::of(a, b))
}

fn radial_theta() -> impl Strategy<Value = ThetaSeq> {
    (1usize..=12, 0.3f64..1.5, 0.0f64..0.9).prop_map(|(n, g, a)| {
        ThetaSeq::from_radial(n, move |r| r.powf(-g) * (1.0 + a * r.cos())).unwrap()
    })
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_and_basis_vectors(k in mode()) {
        prop_assert_eq!(k.neg().sign(), -k.sign());
        prop_assert_ne!(k.is_positive(), k.neg().is_positive());
        prop_assert_eq!(k.a(), k.neg().a());
        prop_assert!(dot(k.a(), k.as_vec()).abs() <= 1e-14 * k.norm());
        prop_assert!((dot(k.a(), k.perp()) - k.sign() as f64 * k.norm()).abs() <= 1e-14 * k.norm());
    }

    #[test]
    fn mode_serde_round_trip(k in mode()) {
        let s = serde_json::to_string(&k).unwrap();
        prop_assert_eq!(serde_json::from_str::<Mode>(&s).unwrap(), k);
    }

    #[test]
    fn key_identity_holds(th in radial_theta(), x in point()) {
        let k = key_identity_matrix(&th, x).unwrap();
        let half = 0.5 * th.norm2();
        prop_assert!((k.matrix[0][0] - half).abs() <= 1e-12 * half.max(1.0));
        prop_assert!((k.matrix[1][1] - half).abs() <= 1e-12 * half.max(1.0));
        prop_assert!(k.matrix[0][1].abs() <= 1e-12 && k.matrix[1][0].abs() <= 1e-12);
        prop_assert!(k.max_imag <= 1e-12);
        let c = stratonovich_correction(&th, x);
        prop_assert!(c[0].norm() <= 1e-12 && c[1].norm() <= 1e-12);
    }

    #[test]
    fn sum_identity_holds(th in radial_theta(), l in mode()) {
        let scale = 0.5 * l.norm2() as f64 * th.norm2();
        prop_assert!(sum_identity_residual(&th, l) <= 1e-12 * scale);
    }

    #[test]
    fn kernel_is_odd(x in point()) {
        let k = KernelSeries::new(0.5, 24).unwrap();
        let a = k.eval(x).value;
        let b = k.eval([1.0 - x[0], 1.0 - x[1]]).value;
        prop_assert!((a[0] + b[0]).abs() <= 1e-12 * (1.0 + a[0].abs()));
        prop_assert!((a[1] + b[1]).abs() <= 1e-12 * (1.0 + a[1].abs()));
    }

    #[test]
    fn nonlinear_pairing_symmetric_zero_on_diagonal(x in point(), y in point(), l in small_mode()) {
        let kernel = Kernel::series(0.7, 12).unwrap();
        let phi = TestFunction::fourier(l);
        let a = h_eps_phi(x, y, &phi, &kernel);
        let b = h_eps_phi(y, x, &phi, &kernel);
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        prop_assert!(h_eps_phi(x, x, &phi, &kernel).norm() == 0.0);
    }

    #[test]
    fn bump_is_a_cutoff(z in -3.0f64..3.0, r in 0.1f64..2.0) {
        let b = bump(z, r);
        prop_assert!((0.0..=1.0).contains(&b));
        if z.abs() <= 0.5 * r { prop_assert_eq!(b, 1.0); }
        if z.abs() >= r { prop_assert_eq!(b, 0.0); }
    }

    #[test]
    fn white_noise_is_real(seed in any::<u64>(), m in 1usize..6) {
        let xi = sample_white_noise(&mut stream(seed, 0, StreamRole::Field), m).unwrap();
        prop_assert!(xi.reality_residual() == 0.0);
        for k in modes_in_ball(m) {
            prop_assert_eq!(xi.get(k.neg()), xi.get(k).conj());
        }
    }

    #[test]
    fn drift_backends_agree_and_are_skew(seed in any::<u64>(), m in 2usize..7) {
        let xi = sample_white_noise(&mut stream(seed, 0, StreamRole::Field), m).unwrap();
        let exact = DriftEngine::new(m, 0.5, DriftBackend::Exact).unwrap().drift(&xi);
        let fast = DriftEngine::new(m, 0.5, DriftBackend::Fast).unwrap().drift(&xi);
        let scale = exact.l2_norm2().sqrt().max(1e-300);
        let mut diff = exact.clone();
        diff.scale(-1.0);
        diff.add_assign(&fast);
        prop_assert!(diff.l2_norm2().sqrt() <= 1e-11 * scale);
        prop_assert!(exact.l2_inner(&xi).abs() <= 1e-10 * scale * xi.l2_norm2().sqrt());
        prop_assert!(exact.reality_residual() <= 1e-13 * scale);
    }

    #[test]
    fn vortex_drift_is_relabeling_equivariant(seed in any::<u64>(), n in 2usize..8, shift in 1usize..7) {
        let (st, _) = sample_initial_vortices(seed, 0, n).unwrap();
        let kernel = Kernel::series(0.5, 12).unwrap();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let permuted = VortexState {
            t: st.t,
            pos: perm.iter().map(|&i| st.pos[i]).collect(),
            intensities: perm.iter().map(|&i| st.intensities[i]).collect(),
        };
        let a = vortex_drift(&st, &kernel);
        let b = vortex_drift(&permuted, &kernel);
        for (j, &i) in perm.iter().enumerate() {
            for c in 0..2 {
                prop_assert!((a[i][c] - b[j][c]).abs() <= 1e-12 * (1.0 + a[i][c].abs()));
            }
        }
        let phi = TestFunction::fourier(Mode::of(1, 2));
        prop_assert!((st.empirical_pairing(&phi) - permuted.empirical_pairing(&phi)).norm() <= 1e-13);
    }

    #[test]
    fn seeds_are_deterministic_and_role_separated(root in any::<u64>(), r in 0u64..1000) {
        prop_assert_eq!(derive_seed(root, r, StreamRole::Noise), derive_seed(root, r, StreamRole::Noise));
        prop_assert_ne!(derive_seed(root, r, StreamRole::Noise), derive_seed(root, r, StreamRole::Initial));
        prop_assert_ne!(derive_seed(root, r, StreamRole::Noise), derive_seed(root, r + 1, StreamRole::Noise));
    }

    #[test]
    fn config_hash_tracks_content(seed in any::<u64>(), replicas in 1usize..100) {
        let cfg = IntegratorConfig::default();
        let a = EnsembleSpec::new(replicas, seed, ExperimentKind::Galerkin, &cfg).unwrap();
        prop_assert_eq!(a.config_hash(), a.clone().config_hash());
        let mut other = cfg.clone();
        other.dt *= 0.5;
        prop_assert_ne!(config_hash(&cfg), config_hash(&other));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generator_drift_is_antisymmetric(seed in any::<u64>(), n_max in 1usize..=3, m in 1usize..=3) {
        let phi = ChaosVector::random(&mut stream(seed, 0, StreamRole::Aux), n_max, 2, true);
        let g = apply_gm(&phi, m, 0.6).unwrap();
        prop_assert!(phi.inner(&g).norm() <= 1e-10 * phi.norm() * g.norm().max(1.0));
    }

    #[test]
    fn chaos_storage_is_symmetric(seed in any::<u64>(), n_max in 1usize..=3) {
        let phi = ChaosVector::random(&mut stream(seed, 0, StreamRole::Aux), n_max, 2, false);
        prop_assert_eq!(phi.symmetric_readback_residual(), 0.0);
        let modes = modes_in_ball(1);
        for key in tuples(&modes, 2) {
            let mut rev = key.clone();
            rev.reverse();
            prop_assert_eq!(phi.get(&key), phi.get(&rev));
        }
    }

    #[test]
    fn cutoff_split_sums_to_whole(seed in any::<u64>(), l in 1.0f64..50.0) {
        let phi = ChaosVector::random(&mut stream(seed, 0, StreamRole::Aux), 2, 2, true);
        let (hi, lo) = cutoff_split(&phi, &CutoffSpec::new(l, 0.5).unwrap(), 2, 0.5).unwrap();
        let g = apply_gm(&phi, 2, 0.5).unwrap();
        prop_assert_eq!(hi.add_vec(&lo).sub_vec(&g).norm(), 0.0);
    }

    #[test]
    fn intensities_are_constant_along_paths(seed in any::<u64>()) {
        let cfg = VortexConfig { n_vortices: 5, t_final: 0.02, dt: 1e-3, kernel_cutoff: 8, ..Default::default() };
        let (init, _) = sample_initial_vortices(seed, 0, 5).unwrap();
        let theta = msqg::theta::theta_power(1.0, 3).unwrap();
        let p = simulate_vortex_path(
            &cfg,
            &theta,
            init.clone(),
            &[],
            stream(seed, 0, StreamRole::Noise),
            stream(seed, 0, StreamRole::Bridge),
            false,
        )
        .unwrap();
        prop_assert_eq!(&p.final_state.intensities, &init.intensities);
        for x in &p.final_state.pos {
            prop_assert!((0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]));
        }
    }
}

#[test]
fn galerkin_replicas_are_reproducible() {
    let cfg = IntegratorConfig {
        galerkin_m: 3,
        t_final: 0.02,
        record_every: 1,
        ..Default::default()
    };
    let a = run_galerkin_ensemble(&cfg, 4, 11).unwrap();
    let b = run_galerkin_ensemble(&cfg, 4, 11).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(p.series, q.series);
        assert_eq!(p.final_state.field.reality_residual(), 0.0);
    }
}

/// `‖G^m F − G^M F‖` for `m < M` and a fixed band-limited real F.
fn gm_distances_to(seed: u64, eps: f64, top: usize) -> Vec<f64> {
    let phi = ChaosVector::random(&mut stream(seed, 0, StreamRole::Aux), 2, 1, true);
    let limit = apply_gm(&phi, top, eps).unwrap();
    (1..top)
        .map(|m| apply_gm(&phi, m, eps).unwrap().sub_vec(&limit).norm())
        .collect()
}

#[test]
fn galerkin_generator_is_cauchy() {
    for (seed, eps) in [(0, 0.5), (1, 0.5), (2, 1.0), (3, 0.3)] {
        let d = gm_distances_to(seed, eps, 14);
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    }
}
