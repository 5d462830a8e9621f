use std::f64::consts::PI;

use fermi_mf::linalg::loglog_slope;
use fermi_mf::scaling3d::*;
use quadrature::double_exponential::integrate;
use statrs::function::gamma::gamma;

/// ∫_{[-a,a]³} |x|^(-s) through the 48 pyramids x ≥ y ≥ z ≥ 0.
fn pyramid_cube_integral(s: f64, a: f64) -> f64 {
    let inner = |u: f64| integrate(|w: f64| (1.0 + u * u + w * w).powf(-s / 2.0), 0.0, u, 1e-12).integral;
    48.0 * a.powf(3.0 - s) / (3.0 - s) * integrate(inner, 0.0, 1.0, 1e-12).integral
}

#[test]
fn cube_integral_matches_pyramid_decomposition() {
    for s in [0.0, 0.3, 0.5, 1.0, 1.19, 2.0] {
        let radial = unit_cube_integral(s);
        let pyramid = pyramid_cube_integral(s, 1.0);
        assert!((radial - pyramid).abs() < 1e-6 * pyramid, "s={s}: {radial} vs {pyramid}");
    }
    // v ≡ 1 returns the particle number.
    assert!((unit_cube_integral(0.0) - 8.0).abs() < 1e-9);
    let knots = [0.0, 1.0, 2f64.sqrt(), 3f64.sqrt()];
    let mass: f64 = knots.windows(2).map(|w| integrate(cube_radial_mass, w[0], w[1], 1e-10).integral).sum();
    assert!((mass - 8.0).abs() < 1e-6);
}

#[test]
fn radial_quadrature_on_a_ball() {
    // The ball of the same volume as the box, where ρ₀ 2π R² is exact for s = 1.
    for n in [100usize, 1000] {
        let c = 1.0;
        let l = (n as f64 / c).cbrt();
        let r = l * (3.0 / (4.0 * PI)).cbrt();
        let quad = c * radial_potential(1.0, |x| 4.0 * PI * x * x, &[0.0, r]);
        let exact = c * 2.0 * PI * r * r;
        assert!((quad - exact).abs() < 0.01 * exact);
        // The box value sits within a few percent of the ball value.
        let cube = mean_field_sup(1.0, n, c).unwrap();
        assert!(cube < exact && cube > 0.95 * exact);
    }
}

#[test]
fn shell_enumeration() {
    let one = fermi_ball(1, 1.0);
    assert_eq!((one.n, one.momenta.clone()), (1, vec![[0, 0, 0]]));
    assert_eq!(fermi_ball(2, 1.0).n, 7);
    assert_eq!(fermi_ball(7, 1.0).n, 7);
    assert_eq!(fermi_ball(30, 1.0).n, 33);
    assert_eq!(closed_shells(1, 40), vec![1, 7, 19, 27, 33]);
    let ball = fermi_ball(500, 2.0);
    let mut ks = ball.momenta.clone();
    ks.sort();
    ks.dedup();
    assert_eq!(ks.len(), ball.n);
    // Closed: nothing outside is shorter than the last shell.
    let kmax = ball.fermi_shell();
    let r = (kmax as f64).sqrt().ceil() as i32 + 1;
    let mut inside = 0;
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                if (x * x + y * y + z * z) as i64 <= kmax {
                    inside += 1;
                }
            }
        }
    }
    assert_eq!(inside, ball.n);
    assert!((ball.density() - 2.0).abs() < 1e-12);
}

#[test]
fn kinetic_energy_examples_and_exponents() {
    assert_eq!(fermi_ball_kinetic(&fermi_ball(1, 1.0)), 0.0);
    let seven = fermi_ball(7, 1.0).with_side(1.0);
    assert!((fermi_ball_kinetic(&seven) - (2.0 * PI).powi(2) * 6.0).abs() < 1e-9);

    let shells = closed_shells(100, 10_000);
    let ns: Vec<f64> = shells.iter().map(|&n| n as f64).collect();
    let fixed_density: Vec<f64> = shells.iter().map(|&n| fermi_ball_kinetic(&fermi_ball(n, 1.0))).collect();
    let fixed_side: Vec<f64> = shells.iter().map(|&n| fermi_ball_kinetic(&fermi_ball(n, 1.0).with_side(1.0))).collect();
    assert!((loglog_slope(&ns, &fixed_density) - 1.0).abs() < 0.05);
    assert!((loglog_slope(&ns, &fixed_side) - 5.0 / 3.0).abs() < 0.05);
}

#[test]
fn kinetic_inequality_on_closed_shells() {
    for n in closed_shells(7, 10_000) {
        for c in [0.1, 1.0, 10.0] {
            let ball = fermi_ball(n, c);
            let (lhs, rhs) = lieb_thirring_margin(&ball);
            assert!(lhs <= rhs, "N={n} c={c}: {lhs} > {rhs}");
            let closed = c.powf(5.0 / 3.0) * ball.l.powi(3);
            assert!((lhs - closed).abs() < 1e-9 * closed);
            for frac in [0.1, 0.5, 1.0] {
                let (inside, bound) = subvolume_margin(&ball, frac * ball.l).unwrap();
                assert!(inside <= bound);
            }
        }
    }
    // N = 7 at unit density by hand: six unit momenta.
    let ball = fermi_ball(7, 1.0);
    let e = 6.0 * (2.0 * PI / 7f64.cbrt()).powi(2);
    let (lhs, rhs) = lieb_thirring_margin(&ball);
    assert!((lhs - 7.0).abs() < 1e-12);
    assert!((rhs - 5.0 / 9.0 * (2.0 * PI).powf(-2.0 / 3.0) * e).abs() < 1e-9);
}

#[test]
fn mean_field_sup_exponents_and_constant() {
    assert!(mean_field_sup(0.0, 10, 1.0).is_err());
    assert!(mean_field_sup(1.2, 10, 1.0).is_err());
    let shells = closed_shells(100, 10_000);
    let ns: Vec<f64> = shells.iter().map(|&n| n as f64).collect();
    for s in [0.5, 1.0] {
        let sup: Vec<f64> = shells.iter().map(|&n| mean_field_sup(s, n, 1.0).unwrap()).collect();
        assert!((loglog_slope(&ns, &sup) - (1.0 - s / 3.0)).abs() < 0.05);
        let pot = BoxPotential::new(s).unwrap();
        let mut lows = Vec::new();
        for &n in &shells {
            let ball = fermi_ball(n, 1.0);
            let scaled = sup[shells.iter().position(|&x| x == n).unwrap()] * (n as f64).powf(s / 3.0 - 1.0);
            let a = fermi_ball_kinetic(&ball) / n as f64;
            assert!(scaled <= scaling_constant_bound(s, a).unwrap());
            lows.push(pot.corner(n, 1.0) * (n as f64).powf(s / 3.0 - 1.0));
        }
        // The lower direction: bounded away from zero uniformly in N.
        let lo = lows.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = lows.iter().copied().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 1.0 + 1e-9);
    }
}

#[test]
fn explicit_constant_values() {
    let c = scaling_constant_bound(1.0, 1.0).unwrap();
    let by_hand = 0.2f64.powf(-0.5) * 1.2 * 2f64.powf(2.0 / 3.0) / 3.0 * 5f64.powf(1.0 / 6.0);
    assert!((c - by_hand).abs() < 1e-12);
    for s in [0.3, 0.5, 1.0, 1.1] {
        let ratio = scaling_constant_bound(s, 2.0).unwrap() / scaling_constant_bound(s, 1.0).unwrap();
        assert!((ratio - 2f64.powf(s / 2.0)).abs() < 1e-12);
    }
    assert!(scaling_constant_bound(1.0, 0.0).is_err());
}

#[test]
fn exchange_sum_examples_and_exponent() {
    assert_eq!(fermi_ball_exchange_sum(&fermi_ball(1, 1.0)), 0.0);
    // 12 origin-unit terms, 24 orthogonal pairs at |d|² = 2, 6 opposite pairs at |d|² = 4.
    let seven = fermi_ball(7, 1.0);
    let by_hand = (12.0 + 24.0 / 2.0 + 6.0 / 4.0) / seven.l;
    assert!((fermi_ball_exchange_sum(&seven) - by_hand).abs() < 1e-12);

    let shells: Vec<usize> = closed_shells(50, 5000).into_iter().step_by(3).collect();
    let ns: Vec<f64> = shells.iter().map(|&n| n as f64).collect();
    let sums: Vec<f64> = shells.iter().map(|&n| fermi_ball_exchange_sum(&fermi_ball(n, 1.0))).collect();
    let slope = loglog_slope(&ns, &sums);
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn hardy_on_radial_profiles() {
    let g = RadialProfile::Gaussian { width: 1.0 };
    let m = hardy_spot_check(&g);
    assert!((m.lhs / m.rhs - 1.0 / 3.0).abs() < 1e-8);
    assert!((m.lhs - 4.0 * PI * PI.sqrt() / 2.0).abs() < 1e-8);
    for lambda in [0.5, 3.0] {
        let scaled = hardy_spot_check(&g.scaled(lambda));
        assert!((scaled.lhs / scaled.rhs - 1.0 / 3.0).abs() < 1e-8);
    }
    for p in [RadialProfile::Lorentzian { width: 1.0, power: 1.0 }, RadialProfile::Lorentzian { width: 0.5, power: 3.0 }] {
        assert!(hardy_spot_check(&p).margin() >= -1e-6);
    }
}

#[test]
fn hls_on_gaussians() {
    let g = RadialProfile::Gaussian { width: 1.0 };
    for s in [0.5, 1.0, 1.25] {
        let lambda = 2.0 * s;
        let closed = PI.powf(1.5) * 2.0 * PI * 2f64.powf(3.0 - lambda) * gamma((3.0 - lambda) / 2.0);
        let m = hls_spot_check(s, &g, &g).unwrap();
        assert!((m.lhs - closed).abs() < 1e-6 * closed, "s={s}: {} vs {closed}", m.lhs);
        assert!(m.margin() > 0.0);
    }
    // The optimiser (1 + r²)^(-(6-λ)/2) attains the sharp constant.
    let lambda = 2.0;
    let opt = RadialProfile::Lorentzian { width: 1.0, power: (6.0 - lambda) / 2.0 };
    let m = hls_spot_check(1.0, &opt, &opt).unwrap();
    assert!(m.margin() >= -1e-6 * m.rhs && m.margin() < 1e-5 * m.rhs, "{m:?}");
    let mixed = hls_spot_check(0.75, &g, &RadialProfile::Lorentzian { width: 2.0, power: 2.0 }).unwrap();
    assert!(mixed.margin() >= -1e-6);
    assert!(hls_spot_check(1.5, &g, &g).is_err());
}
