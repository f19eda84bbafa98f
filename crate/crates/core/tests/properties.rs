//! Randomised structural properties over measures and grid functions
//! that the fixed-family checks do not cover.

use proptest::prelude::*;

use levyfd::coefficients::CoefficientSet;
use levyfd::grid::{restrict, GridFunction, GridSpec, Spacing};
use levyfd::integrator::{check_solvability, implicit_euler_solve, ImplicitOptions, ProbeOptions, TimeGrid};
use levyfd::levy::{JumpDensity, LevyMeasure, DEFAULT_TAIL_CAP};
use levyfd::operators::{apply_jump, DiscreteOperator, JumpOperator, StencilWeights};
use levyfd::problem::ProblemSpec;

fn measure() -> impl Strategy<Value = LevyMeasure> {
    prop_oneof![
        (0.1f64..3.0, 0.05f64..0.95).prop_map(|(c, a)| LevyMeasure::power_law(c, a).unwrap()),
        (0.1f64..3.0, 0.05f64..0.95, 0.0f64..4.0).prop_map(|(c, a, l)| LevyMeasure::tempered(c, a, l).unwrap()),
        (0.1f64..5.0, -1.0f64..1.0, 0.05f64..1.5).prop_map(|(r, m, s)| {
            LevyMeasure::compound_poisson(r, JumpDensity::Normal { mean: m, std: s }).unwrap()
        }),
        (0.1f64..5.0, -2.0f64..0.0, 0.1f64..2.0).prop_map(|(r, lo, w)| {
            LevyMeasure::compound_poisson(r, JumpDensity::Uniform { lo, hi: lo + w }).unwrap()
        }),
        prop::collection::vec((prop_oneof![-2.5f64..-0.01, 0.01f64..2.5], 0.01f64..2.0), 1..5)
            .prop_map(|atoms| LevyMeasure::atomic(atoms).unwrap()),
    ]
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

const N: u32 = 8;
const RADIUS: f64 = 3.0;

fn grid() -> GridSpec {
    GridSpec::new(Spacing::new(N).unwrap(), RADIUS).unwrap()
}

/// Zero outside `|x| <= 1.5`, so the window edge never matters.
fn compact(v: &[f64]) -> GridFunction {
    let g = grid();
    let mut f = GridFunction::zeros(g);
    for (i, (slot, &x)) in f.values_mut().iter_mut().zip(v).enumerate() {
        if g.x(i).abs() <= 1.5 {
            *slot = x;
        }
    }
    f
}

fn jump(m: &LevyMeasure) -> JumpOperator {
    let g = grid();
    let k = m.tail_truncation_index(g.spacing(), 1e-10, DEFAULT_TAIL_CAP).unwrap();
    JumpOperator::new(m, g, k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadratic_form_is_nonpositive(m in measure(), v in values(2 * 3 * N as usize + 1)) {
        let phi = compact(&v);
        let j = jump(&m);
        let jphi = GridFunction::from_values(grid(), j.matrix().matvec(phi.values())).unwrap();
        let q = jphi.inner(&phi).unwrap();
        prop_assert!(q <= 1e-10 * phi.inner(&phi).unwrap(), "{q} for {m:?}");
    }

    #[test]
    fn matrix_matches_matrix_free(m in measure(), v in values(2 * 3 * N as usize + 1), s in -2.0f64..2.0) {
        let j = jump(&m);
        let w = StencilWeights::new(&m, grid(), j.weights().k_max()).unwrap();
        let phi = compact(&v);
        let psi = restrict(|x| (1.0 - x * x).max(0.0), grid()).unwrap();
        let mut comb = phi.clone();
        for (c, p) in comb.values_mut().iter_mut().zip(psi.values()) {
            *c = s * *c + p;
        }
        let lhs = apply_jump(&comb, &w).unwrap();
        let a = apply_jump(&phi, &w).unwrap();
        let b = apply_jump(&psi, &w).unwrap();
        let scale = 1.0 + lhs.norm_sup();
        for ((l, x), y) in lhs.values().iter().zip(a.values()).zip(b.values()) {
            prop_assert!((l - (s * x + y)).abs() <= 1e-12 * scale);
        }
        let via_matrix = j.matrix().matvec(comb.values());
        for (x, y) in lhs.values().iter().zip(&via_matrix) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    /// A constant annihilates `J^h` away from the window edge.
    #[test]
    fn constants_are_annihilated_inside(m in measure()) {
        let g = GridSpec::new(Spacing::new(N).unwrap(), 8.0).unwrap();
        let k = m.tail_truncation_index(g.spacing(), 1e-10, DEFAULT_TAIL_CAP).unwrap();
        let w = StencilWeights::new(&m, g, k).unwrap();
        let reach = (k as f64 + 1.0) / N as f64;
        prop_assume!(reach < 3.0);
        let one = restrict(|_| 1.0, g).unwrap();
        let j = apply_jump(&one, &w).unwrap();
        for (x, v) in g.xs().zip(j.values()) {
            if x.abs() + reach <= 8.0 {
                prop_assert!((v + w.truncated_mass()).abs() <= 1e-9, "x={x}: {v}");
            }
        }
    }
}

/// With `c = κ > 0` the implicit step is bounded by `(1 - τκ)^{-1}` in `l2`,
/// because `J^h` is non-positive.
#[test]
fn growth_obeys_discrete_gronwall_bound() {
    let kappa = 0.75;
    let m = LevyMeasure::power_law(1.0, 0.5).unwrap();
    let j = jump(&m);
    let p = ProblemSpec::homogeneous(
        CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, move |_, _| kappa, kappa),
        |x| (1.0 - x * x).max(0.0).powi(3),
        1.0,
    );
    let tg = TimeGrid::new(1.0, 32).unwrap();
    let traj = implicit_euler_solve(&p, *j.grid(), &m, j.weights().k_max(), tg, &ImplicitOptions::default()).unwrap();
    let n0 = traj.states()[0].norm_l2();
    for (i, s) in traj.states().iter().enumerate() {
        let bound = n0 * (1.0 - tg.tau() * kappa).powi(-(i as i32));
        assert!(
            s.norm_l2() <= bound * (1.0 + 1e-10),
            "step {i}: {} > {bound}",
            s.norm_l2()
        );
    }

    let op = DiscreteOperator::at(&j, &p.coeffs, 0.0).unwrap();
    let report = check_solvability(&op, tg.tau(), &ProbeOptions::default());
    assert!(report.n_hat <= kappa + 1e-10, "{}", report.n_hat);
    assert!(report.passes);
}
