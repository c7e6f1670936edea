use std::f64::consts::PI;

use nematic_core::continuity::continuity_step;
use nematic_core::director::{director_step, DirectorState};
use nematic_core::galerkin::build_basis;
use nematic_core::ops::{director_gradient, gradient, lp_norm};
use nematic_core::snapshot::Snapshot;
use nematic_core::{
    BoundarySpec, DirectorField64, DirichletTrace, GinzburgLandau, Grid64, Penalty, ScalarField64,
    VectorField64,
};
use proptest::prelude::*;

fn grid(n: usize) -> Grid64 {
    Grid64::unit(2, n).unwrap()
}

fn positive_field(n: usize) -> impl Strategy<Value = ScalarField64> {
    prop::collection::vec(0.05f64..5.0, n * n)
        .prop_map(move |v| ScalarField64::from_vec(&grid(n), v).unwrap())
}

/// Solenoidal-ish velocity vanishing on the boundary.
fn velocity(n: usize, a: f64, b: f64) -> VectorField64 {
    VectorField64::from_fn(&grid(n), |x| {
        let s = (PI * x[0]).sin() * (PI * x[1]).sin();
        [a * s * (PI * x[1]).cos(), b * s * (PI * x[0]).cos(), 0.0]
    })
}

fn rotate_z(v: [f64; 3], t: f64) -> [f64; 3] {
    let (s, c) = t.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_norm_is_absolutely_homogeneous(rho in positive_field(8), c in -4.0f64..4.0, p in 1.0f64..6.0) {
        let base = lp_norm(&rho, p).unwrap();
        let scaled = lp_norm(&rho.scaled(c), p).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + scaled));
    }

    #[test]
    fn continuity_step_conserves_mass_and_positivity(
        rho in positive_field(12),
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        eps in 0.0f64..0.1,
    ) {
        let u = velocity(12, a, b);
        let next = continuity_step(&rho, &u, eps, 0.005).unwrap();
        let (m0, m1) = (rho.integral(), next.integral());
        prop_assert!((m1 - m0).abs() <= 1e-12 * m0, "mass {m0} -> {m1}");
        prop_assert!(next.min() > 0.0);
    }

    #[test]
    fn penalty_force_is_energy_gradient(
        d in prop::array::uniform3(-2.5f64..2.5),
        sigma in 0.2f64..2.0,
    ) {
        let gl = GinzburgLandau::new(sigma).unwrap();
        let f = gl.force(d);
        let h = 1e-6;
        let scale = f.iter().fold(1.0f64 / (sigma * sigma), |m, v| m.max(v.abs()));
        for k in 0..3 {
            let (mut p, mut q) = (d, d);
            p[k] += h;
            q[k] -= h;
            let fd = (gl.energy(p) - gl.energy(q)) / (2.0 * h);
            prop_assert!((fd - f[k]).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn penalty_is_rotation_equivariant(d in prop::array::uniform3(-2.0f64..2.0), t in 0.0f64..6.3) {
        let gl = GinzburgLandau::new(0.7).unwrap();
        let r = rotate_z(d, t);
        prop_assert!((gl.energy(r) - gl.energy(d)).abs() <= 1e-12 * (1.0 + gl.energy(d)));
        let (fr, rf) = (gl.force(r), rotate_z(gl.force(d), t));
        for k in 0..3 {
            prop_assert!((fr[k] - rf[k]).abs() <= 1e-12 * (1.0 + rf[k].abs()));
        }
    }

    #[test]
    fn gradient_is_exact_on_affine_data(a in -3.0f64..3.0, bx in -3.0f64..3.0, by in -3.0f64..3.0) {
        let g = grid(9);
        let affine = move |x: [f64; 3]| a + bx * x[0] + by * x[1];
        let s = ScalarField64::from_fn(&g, affine);
        let trace = DirichletTrace::from_fn(&g, 1, move |x| [affine(x), 0.0, 0.0]);
        let grad = gradient(&s, &BoundarySpec::Dirichlet(trace));
        for (axis, slope) in [bx, by].into_iter().enumerate() {
            for &v in grad.component(axis) {
                prop_assert!((v - slope).abs() <= 1e-10);
            }
        }
        let dfield = DirectorField64::from_fn(&g, move |x| [affine(x), -affine(x), 0.5]);
        let dtrace = DirichletTrace::from_fn(&g, 3, move |x| [affine(x), -affine(x), 0.5]);
        let dg = director_gradient(&dfield, &BoundarySpec::Dirichlet(dtrace));
        for &v in dg[1].component(0) {
            prop_assert!((v + bx).abs() <= 1e-10);
        }
        prop_assert!(dg[2].component(1).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn director_step_keeps_unit_ball(seed in 0u64..1000, amp in 0.0f64..1.0) {
        let g = grid(12);
        let angle = move |x: [f64; 3]| {
            amp * (PI * x[0]).sin().powi(3) * (PI * x[1]).sin().powi(3) * (1.0 + seed as f64 / 500.0)
        };
        let d0 = DirectorField64::from_fn(&g, |x| [angle(x).cos(), angle(x).sin(), 0.0]);
        let state = DirectorState::new(d0, DirichletTrace::constant(&g, [1.0, 0.0, 0.0])).unwrap();
        let u = velocity(12, 0.3, -0.2);
        let gl = GinzburgLandau::new(1.0).unwrap();
        let next = director_step(&state, &u, &gl, 0.001).unwrap();
        prop_assert!(next.d().max_norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn galerkin_projection_reproduces_span(coeffs in prop::collection::vec(-1.0f64..1.0, 2 * 9)) {
        let basis = build_basis(&grid(16), 3).unwrap();
        let back = basis.project(&basis.realize(&coeffs)).unwrap();
        for (a, b) in coeffs.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn snapshot_round_trips(values in prop::collection::vec(-1e6f64..1e6, 64), t in 0.0f64..100.0) {
        let s = ScalarField64::from_vec(&grid(8), values).unwrap();
        let snap = Snapshot::from_scalar(&s, t);
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::<f64>::read_from(&buf[..]).unwrap();
        prop_assert_eq!(back, snap);
    }
}
