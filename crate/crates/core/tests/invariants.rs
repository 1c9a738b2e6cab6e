use pmc_core::barriers::HeightBarrier;
use pmc_core::conditions::check_ricci_condition;
use pmc_core::parallels::{
    focal_time, hyperbolic_parallel_curvature, hyperbolic_parallel_derivative, integrate_parallel_mean_curvature,
};
use pmc_core::*;
use proptest::prelude::*;

fn disk_point(max_r: f64) -> impl Strategy<Value = Point> {
    (0.0..max_r, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| [r * a.cos(), r * a.sin()])
}

fn model() -> impl Strategy<Value = ManifoldModel> {
    prop_oneof![Just(ManifoldModel::euclidean(2)), Just(ManifoldModel::hyperbolic(2))]
}

proptest! {
    #[test]
    fn distance_is_a_metric(m in model(), p in disk_point(0.9), q in disk_point(0.9), r in disk_point(0.9)) {
        let d = |a, b| m.geodesic_distance(a, b).unwrap();
        prop_assert!(d(p, q) >= 0.0);
        prop_assert!((d(p, q) - d(q, p)).abs() <= 1e-12 * (1.0 + d(p, q)));
        prop_assert!(d(p, r) <= d(p, q) + d(q, r) + 1e-10);
    }

    #[test]
    fn normal_geodesics_have_unit_speed(m in model(), y in disk_point(0.5), a in 0.0..std::f64::consts::TAU, t in 0.0..1.0f64) {
        let lam = m.conformal_factor(&y);
        let n = [a.cos() / lam, a.sin() / lam];
        let p = m.normal_geodesic(y, n, t).unwrap();
        let d = m.geodesic_distance(y, p).unwrap();
        prop_assert!((d - t).abs() <= 1e-9 * (1.0 + t), "{} vs {}", d, t);
    }

    #[test]
    fn metric_and_inverse_are_consistent(m in model(), x in disk_point(0.95)) {
        let g = m.metric_at(x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e: f64 = (0..2).map(|k| g.sigma[i][k] * g.sigma_inv[k][j]).sum();
                prop_assert!((e - (i == j) as u8 as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expression_jets_match_differences(
        a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64,
        x1 in -0.8..0.8f64, x2 in -0.8..0.8f64, z in -2.0..2.0f64,
    ) {
        let src = format!("{a}*x1*x2 + sin({b}*x2) + {c}*tanh(z)*x1 + exp(0.3*x1) - sqrt(2 + x2*x2)");
        let e = Expr::parse(&src).unwrap();
        let j = e.jet(x1, x2, z);
        prop_assert_eq!(j.value, e.eval(x1, x2, z));
        let h = 1e-6;
        let at = |v: [f64; 3]| e.eval(v[0], v[1], v[2]);
        for k in 0..3 {
            let mut p = [x1, x2, z];
            let mut q = p;
            p[k] += h;
            q[k] -= h;
            let fd = (at(p) - at(q)) / (2.0 * h);
            prop_assert!((fd - j.grad[k]).abs() < 1e-6 * (1.0 + fd.abs()), "d{} {} vs {}", k, fd, j.grad[k]);
        }
        for k in 0..3 {
            for l in 0..3 {
                prop_assert!((j.hess[k][l] - j.hess[l][k]).abs() <= 1e-12 * (1.0 + j.hess[k][l].abs()));
            }
        }
    }

    #[test]
    fn height_profile_is_increasing_and_concave(mu in 0.1..5.0f64, delta in 0.1..3.0f64, sup in 0.0..2.0f64, t in 0.0..1.0f64) {
        let b = HeightBarrier::from_constants(2, mu, delta, sup).unwrap();
        let t = t * delta;
        let [v, d1, d2] = b.profile(t);
        prop_assert!(v >= 0.0 && d1 > 0.0 && d2 < 0.0);
        prop_assert!(b.value_at_distance(t) <= b.bound + 1e-12 * b.bound);
        prop_assert_eq!(b.profile(0.0)[0], 0.0);
    }

    #[test]
    fn gradient_barrier_invariants(
        kappa in 0.0..4.0f64, tau in 0.05..1.0f64, hn in 0.0..2.0f64,
        p0 in 0.0..2.0f64, p1 in 0.0..2.0f64, p2 in 0.0..3.0f64, u in 0.0..5.0f64,
    ) {
        let g = GradientBarrier::from_constants(2, 1.0, tau, kappa, hn, [p0, p1, p2], u, "test").unwrap();
        prop_assert!(g.check_invariants().is_ok());
        prop_assert!((g.psi_prime(g.a) - 1.0).abs() <= 1e-10);
        prop_assert_eq!(g.psi(0.0), 0.0);
        let mid = 0.5 * g.a;
        prop_assert!(g.psi(mid) <= g.psi(g.a) && g.psi_prime(mid) >= g.psi_prime(g.a));
    }

    #[test]
    fn euclidean_circle_parallels(rho in 0.2..5.0f64, frac in 0.1..0.9f64) {
        let p = RiccatiProblem::constant(2, 0.0, 0.0, 1.0 / rho, frac * rho, 1e-3 * rho);
        let tr = integrate_parallel_mean_curvature(&p).unwrap();
        for (t, c) in tr.t.iter().zip(&tr.curvature) {
            prop_assert!((c * (rho - t) - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn hyperbolic_closed_form_is_consistent(l0 in -3.0..3.0f64, t in 0.0..2.0f64) {
        let limit = focal_time(l0).unwrap_or(f64::INFINITY);
        prop_assume!(t < 0.95 * limit);
        let c = hyperbolic_parallel_curvature(l0, t).unwrap();
        let d = hyperbolic_parallel_derivative(l0, t).unwrap();
        // λ′ = λ² − 1 along hyperbolic parallels
        prop_assert!((d - (c * c - 1.0)).abs() <= 1e-9 * (1.0 + c * c));
        if l0 > 1.0 {
            prop_assert!(hyperbolic_parallel_curvature(l0, limit + 1e-3).is_err());
        }
    }

    #[test]
    fn ricci_margin_is_quadratic_in_h(c in -1.5..1.5f64) {
        let dom = DomainSpec::hyperbolic_geodesic_disk(1.0).unwrap();
        let h = PrescribedH::parse(&format!("{c}"), [-1.0, 1.0], &dom).unwrap();
        let r = check_ricci_condition(dom.model(), &h, &[[0.0, 0.0], [0.3, 0.1]]).unwrap();
        prop_assert!((r.worst_margin - (4.0 * c * c - 1.0)).abs() <= 1e-12);
        prop_assert_eq!(r.pass, r.worst_margin >= 0.0);
    }
}
