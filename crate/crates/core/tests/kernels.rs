use mindiv::divergence::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn pi(a: f64) -> PowerIndex {
    PowerIndex::new(a).unwrap()
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.1 * (100f64).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn phi_vanishes_at_one_and_is_convex() {
    for alpha in [0.0, 0.3, 0.5, 1.0, 1.7, 2.0, 3.0] {
        assert_eq!(phi(alpha, 1.0).unwrap(), 0.0);
        let ts = grid(200);
        for w in ts.windows(3) {
            let (a, b, c) = (phi(alpha, w[0]).unwrap(), phi(alpha, w[1]).unwrap(), phi(alpha, w[2]).unwrap());
            // second divided difference on the uneven grid
            let d = (c - b) / (w[2] - w[1]) - (b - a) / (w[1] - w[0]);
            assert!(d >= -1e-10, "alpha {alpha} at {}", w[1]);
        }
    }
}

#[test]
fn adjoint_identity_on_grid() {
    for alpha in [0.0, 0.3, 1.0, 2.0] {
        for t in grid(100) {
            let lhs = phi_star(alpha, t).unwrap();
            let rhs = phi(1.0 - alpha, t).unwrap();
            assert!(rel(lhs, rhs) < 1e-12 || (lhs - rhs).abs() < 1e-15, "{alpha} {t}: {lhs} {rhs}");
        }
    }
}

#[test]
fn psi_is_reflexive_and_nonnegative_on_grid() {
    let g = grid(50);
    for alpha in [0.0, 0.5, 1.0, 2.0] {
        for &s in &g {
            for &t in &g {
                let v = psi_kernel(pi(alpha), s, t).unwrap();
                if s == t {
                    assert!(v.abs() < 1e-12 * s.max(1.0).powf(1.0 + alpha));
                } else {
                    assert!(v > 0.0, "alpha {alpha} s {s} t {t}: {v}");
                }
            }
        }
    }
}

#[test]
fn psi_is_continuous_at_zero() {
    let g = grid(50);
    for &s in &g {
        for &t in &g {
            let d = (psi_kernel(pi(1e-6), s, t).unwrap() - psi_kernel(pi(0.0), s, t).unwrap()).abs();
            assert!(d < 1e-4, "{s} {t}: {d}");
        }
    }
}

#[test]
fn rho_limit_at_zero() {
    let c = psi_components(pi(1e-8), 2.0, 1.0).unwrap();
    assert!((c.rho + 2f64.ln()).abs() < 1e-6);
}

#[test]
fn orthogonal_constants() {
    assert_eq!(orthogonal_divergence(0.5), Extended::Finite(4.0));
    assert!(orthogonal_divergence(1.0).is_infinite());
    assert!(orthogonal_divergence(2.0).is_infinite());
}

proptest! {
    #[test]
    fn adjoint(alpha in 0.0f64..3.0, t in 0.05f64..20.0) {
        let lhs = phi_star(alpha, t).unwrap();
        let rhs = phi(1.0 - alpha, t).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn decomposition(alpha in 0.0f64..3.0, t in 0.05f64..20.0) {
        let whole = phi(alpha, t).unwrap();
        let parts = phi_ring(alpha, t).unwrap() + phi_sharp(alpha, t).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * (1.0 + whole.abs()));
    }

    #[test]
    fn psi_nonnegative(alpha in 0.0f64..3.0, s in 0.05f64..20.0, t in 0.05f64..20.0) {
        let v = psi_kernel(pi(alpha), s, t).unwrap();
        prop_assert!(v >= -1e-12 * (1.0 + s.max(t).powf(1.0 + alpha)));
    }

    #[test]
    fn psi_recombines(alpha in 0.0f64..3.0, s in 0.05f64..20.0, t in 0.05f64..20.0) {
        let c = psi_components(pi(alpha), s, t).unwrap();
        let v = psi_kernel(pi(alpha), s, t).unwrap();
        let scale = c.psi0.abs() + c.psi1.abs() + (c.rho * t).abs();
        prop_assert!((c.recombine(t) - v).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn weighted_mixture(alpha in 0.0f64..3.0, s in 0.05f64..20.0, t in 0.05f64..20.0) {
        // psi_a(s,t) = t^{1+a} [a phi_{1+a}(s/t) + (1-a) phi_a(s/t)]
        let r = s / t;
        let mix = t.powf(1.0 + alpha) * (alpha * phi(1.0 + alpha, r).unwrap() + (1.0 - alpha) * phi(alpha, r).unwrap());
        let v = psi_kernel(pi(alpha), s, t).unwrap();
        let scale = t.powf(1.0 + alpha) * (alpha * phi(1.0 + alpha, r).unwrap().abs() + (1.0 - alpha).abs() * phi(alpha, r).unwrap().abs());
        prop_assert!((mix - v).abs() <= 1e-10 * scale.max(1e-300) + 1e-13, "{mix} vs {v}");
    }

    #[test]
    fn kernels_reject_nonpositive(alpha in 0.0f64..3.0, t in -5.0f64..=0.0) {
        prop_assert!(phi(alpha, t).is_err());
        prop_assert!(phi_star(alpha, t).is_err());
        prop_assert!(phi_ring(alpha, t).is_err());
        prop_assert!(phi_sharp(alpha, t).is_err());
        prop_assert!(psi_kernel(pi(alpha), t, 1.0).is_err());
    }
}
