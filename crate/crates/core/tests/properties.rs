use ch_ocp::ocp::{solve_ocp, SweepConfig};
use ch_ocp::schemes::{
    adjoint_step, state_step_s1, state_step_s2, state_step_s3, AdjointVariant, NewtonConfig,
    StepParams,
};
use ch_ocp::{
    bilaplacian, inner_product, laplacian, mass, norm_l2, norm_max, parse, seminorm_h1,
    seminorm_h2, Expr, Field, ProblemSpec, SchemeKind, SpaceGrid, TimeGrid,
};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = SpaceGrid<f64>> {
    prop_oneof![
        (4usize..40, 0.5f64..3.0)
            .prop_map(|(n, len)| SpaceGrid::new_1d(-0.25, -0.25 + len, n).unwrap()),
        (4usize..12, 4usize..12).prop_map(|(nx, ny)| SpaceGrid::new_2d(
            (0.0, 1.0, nx),
            (0.0, 1.0, ny)
        )
        .unwrap()),
    ]
}

fn field_strategy() -> impl Strategy<Value = (Field<f64>, Field<f64>)> {
    grid_strategy().prop_flat_map(|g| {
        let n = g.len();
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(a, b)| {
                (
                    Field::from_values(g, a).unwrap(),
                    Field::from_values(g, b).unwrap(),
                )
            })
    })
}

fn scale(z: &Field<f64>) -> f64 {
    norm_max(z).max(1.0)
}

proptest! {
    #[test]
    fn laplacian_annihilates_constants(g in grid_strategy(), c in -5.0f64..5.0) {
        let l = laplacian(&Field::constant(g, c)).unwrap();
        prop_assert!(l.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bilaplacian_is_laplacian_squared((z, _) in field_strategy()) {
        let b = bilaplacian(&z).unwrap();
        let ll = laplacian(&laplacian(&z).unwrap()).unwrap();
        prop_assert!(b.max_abs_diff(&ll).unwrap() <= 1e-14 * scale(&ll));
    }

    #[test]
    fn laplacian_range_has_zero_mass((z, _) in field_strategy()) {
        let l = laplacian(&z).unwrap();
        let m = l.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(mass(&l).abs() <= 1e-12 * m.max(1.0));
    }

    #[test]
    fn laplacian_is_self_adjoint((y, z) in field_strategy()) {
        let ly = laplacian(&y).unwrap();
        let lz = laplacian(&z).unwrap();
        let lhs = inner_product(&ly, &z).unwrap();
        let rhs = inner_product(&y, &lz).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn norms_are_homogeneous((z, _) in field_strategy(), c in -4.0f64..4.0) {
        let cz = z.scaled(c);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-13 * b.abs().max(1e-300);
        prop_assert!(close(norm_l2(&cz), c.abs() * norm_l2(&z)));
        prop_assert!(close(norm_max(&cz), c.abs() * norm_max(&z)));
        prop_assert!(close(seminorm_h1(&cz), c.abs() * seminorm_h1(&z)));
        prop_assert!(close(seminorm_h2(&cz), c.abs() * seminorm_h2(&z)));
    }

    #[test]
    fn max_norm_is_bounded_by_weighted_l2((z, _) in field_strategy()) {
        let wmin = z.grid().weights().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(norm_max(&z) <= norm_l2(&z) / wmin.sqrt() * (1.0 + 1e-14));
    }
}

/// Expression tree built independently of the library's AST.
#[derive(Debug, Clone)]
enum E {
    Num(f64),
    Pi,
    X,
    Y,
    T,
    Neg(Box<E>),
    Add(Box<E>, Box<E>),
    Sub(Box<E>, Box<E>),
    Mul(Box<E>, Box<E>),
    Div(Box<E>, Box<E>),
    Pow(Box<E>, Box<E>),
    Sin(Box<E>),
    Cos(Box<E>),
    Exp(Box<E>),
}

impl E {
    fn text(&self) -> String {
        match self {
            E::Num(v) => format!("{v}"),
            E::Pi => "pi".into(),
            E::X => "x".into(),
            E::Y => " y ".into(),
            E::T => "t".into(),
            E::Neg(a) => format!("-({})", a.text()),
            E::Add(a, b) => format!("({})+({})", a.text(), b.text()),
            E::Sub(a, b) => format!("({}) - ({})", a.text(), b.text()),
            E::Mul(a, b) => format!("({})*({})", a.text(), b.text()),
            E::Div(a, b) => format!("({})/({})", a.text(), b.text()),
            E::Pow(a, b) => format!("({})^({})", a.text(), b.text()),
            E::Sin(a) => format!("sin({})", a.text()),
            E::Cos(a) => format!("cos( {} )", a.text()),
            E::Exp(a) => format!("exp({})", a.text()),
        }
    }

    fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            E::Num(v) => *v,
            E::Pi => std::f64::consts::PI,
            E::X => x,
            E::Y => y,
            E::T => t,
            E::Neg(a) => -a.eval(x, y, t),
            E::Add(a, b) => a.eval(x, y, t) + b.eval(x, y, t),
            E::Sub(a, b) => a.eval(x, y, t) - b.eval(x, y, t),
            E::Mul(a, b) => a.eval(x, y, t) * b.eval(x, y, t),
            E::Div(a, b) => a.eval(x, y, t) / b.eval(x, y, t),
            E::Pow(a, b) => a.eval(x, y, t).powf(b.eval(x, y, t)),
            E::Sin(a) => a.eval(x, y, t).sin(),
            E::Cos(a) => a.eval(x, y, t).cos(),
            E::Exp(a) => a.eval(x, y, t).exp(),
        }
    }
}

fn expr_strategy() -> impl Strategy<Value = E> {
    let leaf = prop_oneof![
        (0u32..400).prop_map(|k| E::Num(k as f64 / 8.0)),
        Just(E::Pi),
        Just(E::X),
        Just(E::Y),
        Just(E::T),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let b = |a: E| Box::new(a);
        prop_oneof![
            inner.clone().prop_map(move |a| E::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Div(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| E::Pow(b(x), b(y))),
            inner.clone().prop_map(move |a| E::Sin(b(a))),
            inner.clone().prop_map(move |a| E::Cos(b(a))),
            inner.prop_map(move |a| E::Exp(b(a))),
        ]
    })
}

fn same(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= 1e-15 * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn parser_matches_tree_walk(e in expr_strategy(), pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.0f64..1.0), 5)) {
        let parsed = parse(&e.text()).unwrap();
        for (x, y, t) in pts {
            let got = parsed.evaluate(x, Some(y), t).unwrap();
            prop_assert!(same(got, e.eval(x, y, t)), "{} at ({x},{y},{t}): {got}", e.text());
        }
    }

    #[test]
    fn pretty_print_round_trips(e in expr_strategy()) {
        let first: Expr = parse(&e.text()).unwrap();
        let second: Expr = parse(&first.to_string()).unwrap();
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..100 {
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let (x, y, t) = (4.0 * next() - 2.0, 4.0 * next() - 2.0, next());
            let a = first.evaluate(x, Some(y), t).unwrap();
            let b = second.evaluate(x, Some(y), t).unwrap();
            prop_assert!(same(a, b));
        }
    }

    #[test]
    fn solutions_satisfy_control_and_terminal_identities(
        scheme in prop::sample::select(SchemeKind::ALL.to_vec()),
        n in 4usize..9,
        nt in 1usize..4,
        lambda in 0.05f64..2.0,
        amp in 0.0f64..0.8,
    ) {
        let spec = ProblemSpec {
            grid: SpaceGrid::new_1d(0.0, 1.0, n).unwrap(),
            time: TimeGrid::new(1e-3 * nt as f64, nt).unwrap(),
            eps: 0.1,
            lambda,
            scheme,
            y0: parse(&format!("{amp}*cos(pi*x)")).unwrap(),
            target: parse("0.5*cos(2*pi*x)*(1+t)").unwrap(),
            adjoint_variant: AdjointVariant::CoeffAtN,
            newton: NewtonConfig::default(),
        };
        let sol = solve_ocp(&spec, &SweepConfig::default()).unwrap();
        prop_assert!(sol.p.last().values().iter().all(|&v| v == 0.0));
        for (u, p) in sol.u.levels().iter().zip(sol.p.levels()) {
            for (&a, &b) in u.values().iter().zip(p.values()) {
                prop_assert_eq!(a, b / lambda);
            }
        }
    }
}

fn smooth_pair(n: usize) -> (Field<f64>, Field<f64>) {
    let g = SpaceGrid::new_1d(0.0, 1.0, n).unwrap();
    let y = Field::from_fn(g, |x, _| 0.5 * (std::f64::consts::PI * x).cos() + 0.1);
    let p = Field::from_fn(g, |x, _| 0.01 * (2.0 * std::f64::consts::PI * x).cos());
    (y, p)
}

fn tight() -> NewtonConfig<f64> {
    NewtonConfig {
        residual_tol: 1e-14,
        max_iters: 25,
    }
}

fn ratio_near_four(d: f64, d_half: f64) -> bool {
    let r = d / d_half;
    (3.0..=5.0).contains(&r)
}

#[test]
fn linear_schemes_agree_with_s1_to_second_order() {
    let (y, p) = smooth_pair(9);
    let diffs = |dt: f64| {
        let prm = StepParams::new(0.1, 0.1, dt).unwrap();
        let (y1, _) = state_step_s1(&y, &p, &prm, &tight()).unwrap();
        let (y2, _) = state_step_s2(&y, &p, &prm).unwrap();
        let (y3, _) = state_step_s3(&y, &p, &prm, None).unwrap();
        (y1.max_abs_diff(&y2).unwrap(), y1.max_abs_diff(&y3).unwrap())
    };
    let (a2, a3) = diffs(1e-4);
    let (b2, b3) = diffs(5e-5);
    assert!(ratio_near_four(a2, b2), "S2 ratio {}", a2 / b2);
    assert!(ratio_near_four(a3, b3), "S3 ratio {}", a3 / b3);
}

#[test]
fn adjoint_variants_agree_to_second_order() {
    let (y, p) = smooth_pair(9);
    let g = *y.grid();
    let target = Field::from_fn(g, |x, _| (std::f64::consts::PI * x).cos());
    let diff = |dt: f64| {
        let prm = StepParams::new(0.1, 0.1, dt).unwrap();
        let (y1, _) = state_step_s1(&y, &p, &prm, &tight()).unwrap();
        let a = adjoint_step(&y, &y1, &p, &target, 0.1, dt, AdjointVariant::CoeffAtN).unwrap();
        let b = adjoint_step(&y, &y1, &p, &target, 0.1, dt, AdjointVariant::CoeffAtN1).unwrap();
        a.max_abs_diff(&b).unwrap()
    };
    let (d, dh) = (diff(1e-4), diff(5e-5));
    assert!(ratio_near_four(d, dh), "ratio {}", d / dh);
}

#[test]
fn newton_tail_is_quadratic_on_fig1_setup() {
    let g = SpaceGrid::new_1d(0.0, 1.0, 257).unwrap();
    let y0 = Field::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x).cos());
    let p0 = Field::zeros(g);
    for dt in [0.01, 0.00125] {
        let prm = StepParams::new(0.05, 0.1, dt).unwrap();
        let (_, rep) = state_step_s1(&y0, &p0, &prm, &NewtonConfig::default()).unwrap();
        let h = &rep.residual_history;
        assert!(h.windows(2).all(|w| w[1] < w[0]), "{h:?}");
        // Pairs whose newer residual sits at the roundoff floor say nothing about the rate.
        let pair = h.windows(2).rfind(|w| w[1] > 1e-9);
        if let Some(w) = pair {
            assert!(w[1] <= 1e6 * w[0] * w[0], "{h:?}");
        }
    }
}
