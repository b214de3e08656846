use pathspace_core::linalg::{dist, dot, norm};
use pathspace_core::manifold::{
    Circle, CircleHeatKernel, EmbeddedManifold, Frame, HeatKernel, So3, So3HeatKernel, Sphere, SphereHeatKernel,
};
use pathspace_core::pathcalc::{
    damped_derivative, damped_inverse, exterior_derivative_cylinder, parallel_h_field, tbar_ito, CylinderOneForm,
};
use pathspace_core::sde::{
    antidevelopment, development, ito_map, ito_map_h_derivative, CircleSystem, GradientSystem, IntegratorConfig,
    So3BiinvariantSystem,
};
use pathspace_core::wiener::{
    h_derivative_flat, paley_wiener, sample_brownian, skorohod_discrete, CameronMartinPath, ClosureField,
    DerivativeSource, DrivingPath, FlatCylinderFunction, TimeGrid,
};
use pathspace_core::SeedStream;
use proptest::prelude::*;
use std::sync::Arc;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

fn projector_checks<const A: usize, const N: usize, M: EmbeddedManifold<A, N>>(m: &M, seed: u64) {
    let mut st = SeedStream::new(seed).path(0);
    let x = m.sample_uniform(&mut st);
    let v: [f64; A] = std::array::from_fn(|_| st.normal());
    let w: [f64; A] = std::array::from_fn(|_| st.normal());
    let pv = m.project(&x, &v);
    assert!(dist(&m.project(&x, &pv), &pv) <= 1e-10, "idempotence");
    assert!((dot(&pv, &w) - dot(&v, &m.project(&x, &w))).abs() <= 1e-10, "symmetry");
    let y = m.exp(&x, &pv);
    assert!(m.residual(&y) <= 1e-10, "exp leaves the manifold");
    let f = Frame::reference(m, &x).transport(m, &m.exp(&x, &pathspace_core::linalg::scale(0.3 / (1.0 + m.norm(&pv)), &pv)));
    let f = f.unwrap();
    assert!(f.orthonormality_defect(m) <= 1e-10 && f.tangency_defect(m) <= 1e-10);
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn projectors_retractions_and_frames(seed in any::<u64>()) {
        projector_checks(&Circle, seed);
        projector_checks(&Sphere, seed);
        projector_checks(&So3, seed);
    }

    #[test]
    fn heat_kernels_are_symmetric(seed in any::<u64>(), t in 0.05f64..2.0) {
        let mut st = SeedStream::new(seed).path(0);
        let (x, y) = (Circle.sample_uniform(&mut st), Circle.sample_uniform(&mut st));
        let k = CircleHeatKernel::default();
        let (a, b) = (k.density(t, &x, &y).unwrap(), k.density(t, &y, &x).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        let (x, y) = (Sphere.sample_uniform(&mut st), Sphere.sample_uniform(&mut st));
        let k = SphereHeatKernel::default();
        let (a, b) = (k.density(t, &x, &y).unwrap(), k.density(t, &y, &x).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        let (x, y) = (So3.sample_uniform(&mut st), So3.sample_uniform(&mut st));
        let k = So3HeatKernel::default();
        let (a, b) = (k.density(t, &x, &y).unwrap(), k.density(t, &y, &x).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn paley_wiener_and_flat_derivative_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = Arc::new(TimeGrid::uniform(1.0, 16).unwrap());
        let mut st = SeedStream::new(seed).path(0);
        let sigma = sample_brownian(&g, 2, &mut st).unwrap();
        let h = CameronMartinPath::new(g.clone(), 2, (0..32).map(|_| st.normal()).collect()).unwrap();
        let k = CameronMartinPath::new(g.clone(), 2, (0..32).map(|_| st.normal()).collect()).unwrap();
        let hk = h.combine(a, &k, b).unwrap();
        let lin = a * paley_wiener(&h, &sigma).unwrap() + b * paley_wiener(&k, &sigma).unwrap();
        prop_assert!((paley_wiener(&hk, &sigma).unwrap() - lin).abs() <= 1e-12 * (1.0 + lin.abs()));
        let f = FlatCylinderFunction::new(vec![8, 16], 2, |x| (x[0] * x[3]).sin(), |x, o| {
            let c = (x[0] * x[3]).cos();
            o.fill(0.0);
            o[0] = c * x[3];
            o[3] = c * x[0];
        });
        let d = |h: &CameronMartinPath| h_derivative_flat(&f, h, &sigma).unwrap();
        let lin = a * d(&h) + b * d(&k);
        prop_assert!((d(&hk) - lin).abs() <= 1e-12 * (1.0 + lin.abs()));
    }

    #[test]
    fn adapted_divergence_is_increment_sum(seed in any::<u64>(), c in -2.0f64..2.0) {
        let g = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
        let sigma = sample_brownian(&g, 2, &mut SeedStream::new(seed).path(0)).unwrap();
        // V̇_i depends on B(t_i) only
        let field = ClosureField::new(2, true, move |s: &DrivingPath, i, out| {
            let b = s.value(i);
            out[0] = (c * b[0]).sin() + b[1];
            out[1] = b[0] * b[1];
        })
        .with_trace(|_, _, _| 0.0);
        let v = skorohod_discrete(&field, &sigma, DerivativeSource::Analytic).unwrap();
        prop_assert!((v.value - v.increment_sum).abs() <= 1e-12);
        let fd = skorohod_discrete(&field, &sigma, DerivativeSource::FiniteDifference).unwrap();
        prop_assert!((fd.value - fd.increment_sum).abs() <= 1e-12);
    }

    #[test]
    fn solution_paths_keep_invariants(seed in any::<u64>()) {
        let g = Arc::new(TimeGrid::uniform(1.0, 64).unwrap());
        let mut st = SeedStream::new(seed).path(0);
        let cfg = IntegratorConfig::default();
        let s2 = ito_map(&GradientSystem::new(Sphere), &sample_brownian(&g, 3, &mut st).unwrap(), &Sphere.base_point(), &cfg).unwrap();
        prop_assert!(s2.check_invariants(&Sphere).is_ok());
        let so3 = ito_map(&So3BiinvariantSystem::new(), &sample_brownian(&g, 6, &mut st).unwrap(), &So3.base_point(), &cfg).unwrap();
        prop_assert!(so3.check_invariants(&So3).is_ok());
        let s1 = ito_map(&CircleSystem::new(), &sample_brownian(&g, 1, &mut st).unwrap(), &Circle.base_point(), &cfg).unwrap();
        prop_assert!(s1.check_invariants(&Circle).is_ok());
    }

    #[test]
    fn variational_derivative_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let sys = GradientSystem::new(Sphere);
        let g = Arc::new(TimeGrid::uniform(1.0, 32).unwrap());
        let mut st = SeedStream::new(seed).path(0);
        let w = sample_brownian(&g, 3, &mut st).unwrap();
        let h = CameronMartinPath::new(g.clone(), 3, (0..96).map(|_| st.normal()).collect()).unwrap();
        let k = CameronMartinPath::new(g.clone(), 3, (0..96).map(|_| st.normal()).collect()).unwrap();
        let cfg = IntegratorConfig::default();
        let x0 = Sphere.base_point();
        let th = ito_map_h_derivative(&sys, &w, &h, &x0, &cfg).unwrap();
        let tk = ito_map_h_derivative(&sys, &w, &k, &x0, &cfg).unwrap();
        let thk = ito_map_h_derivative(&sys, &w, &h.combine(a, &k, b).unwrap(), &x0, &cfg).unwrap();
        for j in 0..=32 {
            let lin: [f64; 3] = std::array::from_fn(|c| a * th.vector(j)[c] + b * tk.vector(j)[c]);
            prop_assert!(dist(&thk.vector(j), &lin) <= 1e-12 * (1.0 + norm(&lin)));
        }
    }

    #[test]
    fn damped_pair_and_tbar_membership(seed in any::<u64>()) {
        let sys = GradientSystem::new(Sphere);
        let g = Arc::new(TimeGrid::uniform(1.0, 64).unwrap());
        let mut st = SeedStream::new(seed).path(0);
        let w = sample_brownian(&g, 3, &mut st).unwrap();
        let p = Arc::new(ito_map(&sys, &w, &Sphere.base_point(), &IntegratorConfig::default()).unwrap());
        let u: Vec<[f64; 3]> = (0..64).map(|i| {
            let a: [f64; 3] = std::array::from_fn(|_| st.normal());
            Sphere.project(p.point(i), &a)
        }).collect();
        let v = damped_inverse(&Sphere, &p, &u).unwrap();
        prop_assert!(v.membership_defect(&Sphere) <= 1e-12);
        // with constant Ricci curvature the discrete pair is an exact inverse
        let d = damped_derivative(&Sphere, &v).unwrap();
        for i in 0..64 {
            let c = p.frame(i).coords(&Sphere, &u[i]);
            prop_assert!((d[i][0] - c[0]).abs() <= 1e-10 && (d[i][1] - c[1]).abs() <= 1e-10);
        }
        let h = CameronMartinPath::new(g.clone(), 3, (0..192).map(|_| st.normal()).collect()).unwrap();
        let tb = tbar_ito(&sys, &p, &h).unwrap();
        prop_assert!(tb.norm_sq().is_finite());
        prop_assert!(tb.membership_defect(&Sphere) <= 1e-12);
    }

    #[test]
    fn exterior_derivative_is_antisymmetric(seed in any::<u64>()) {
        let sys = GradientSystem::new(Sphere);
        let g = Arc::new(TimeGrid::uniform(1.0, 16).unwrap());
        let mut st = SeedStream::new(seed).path(0);
        let w = sample_brownian(&g, 3, &mut st).unwrap();
        let p = Arc::new(ito_map(&sys, &w, &Sphere.base_point(), &IntegratorConfig::default()).unwrap());
        let e: [f64; 3] = std::array::from_fn(|_| st.normal());
        // α_1(x) = ⟨x_0, e⟩ P_{x_1} e on slots (t_0, t_1)
        let phi = CylinderOneForm::new(vec![0.5, 1.0], move |xs, out| {
            out[0] = [0.0; 3];
            out[1] = pathspace_core::linalg::scale(dot(&xs[0], &e), &Sphere.project(&xs[1], &e));
        })
        .unwrap()
        .with_derivative(move |xs, dxs, out| {
            out[0] = [0.0; 3];
            let pe = Sphere.project(&xs[1], &e);
            let dpe: [f64; 3] = std::array::from_fn(|k| -dot(&dxs[1], &e) * xs[1][k] - dot(&xs[1], &e) * dxs[1][k]);
            out[1] = std::array::from_fn(|k| dot(&dxs[0], &e) * pe[k] + dot(&xs[0], &e) * dpe[k]);
        });
        let h1 = CameronMartinPath::new(g.clone(), 2, (0..32).map(|_| st.normal()).collect()).unwrap();
        let h2 = CameronMartinPath::new(g.clone(), 2, (0..32).map(|_| st.normal()).collect()).unwrap();
        let (v1, v2) = (parallel_h_field(&p, &h1).unwrap(), parallel_h_field(&p, &h2).unwrap());
        let a = exterior_derivative_cylinder(&Sphere, &phi, &v1, &v2).unwrap();
        let b = exterior_derivative_cylinder(&Sphere, &phi, &v2, &v1).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!(exterior_derivative_cylinder(&Sphere, &phi, &v1, &v1).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn development_round_trip(seed in any::<u64>()) {
        let g = Arc::new(TimeGrid::uniform(1.0, 128).unwrap());
        let mut st = SeedStream::new(seed).path(0);
        let c: Vec<f64> = (0..4).map(|_| st.normal()).collect();
        let b = CameronMartinPath::from_fn(g.clone(), 2, |t, _, o| {
            o[0] = c[0] * (3.0 * t).cos() + c[1];
            o[1] = c[2] * t + c[3];
        })
        .unwrap();
        let drv = DrivingPath::from_cameron_martin(&b);
        let sigma = development(&Sphere, &drv, &Sphere.base_point()).unwrap();
        let back = antidevelopment(&Sphere, &sigma).unwrap();
        let worst = drv.increments().iter().zip(back.increments()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-8, "{worst:e}");
    }
}
