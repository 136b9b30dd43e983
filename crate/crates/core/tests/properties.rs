use conflict_game::dynamics::state_rate;
use conflict_game::equilibrium::{
    aggression_margin, hamiltonian, mne_controls, optimal_appropriation, optimal_consumption, ControlPair,
};
use conflict_game::{GameState, ModelParams, Player};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (
        0.05..0.95f64,
        1.1..12.0f64,
        0.05..0.95f64,
        0.5..10.0f64,
        0.3..4.0f64,
        (0.1..2.0f64, 0.2..0.9f64, 0.0..0.2f64),
    )
        .prop_map(|(delta, theta, gamma, horizon_t, eta, (tech_a, tech_alpha, tech_mu))| ModelParams {
            delta,
            theta,
            gamma,
            horizon_t,
            eta,
            tech_a,
            tech_alpha,
            tech_mu,
            ..ModelParams::default()
        })
}

fn state() -> impl Strategy<Value = GameState> {
    (0.1..50.0f64, 0.1..50.0f64, 0.05..10.0f64, 0.05..10.0f64)
        .prop_map(|(x1, x2, l1, l2)| GameState::new(0.0, x1, x2, l1, l2))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn felicity_is_increasing_and_concave(p in params(), c in 1e-2..1e2f64) {
        let h = 1e-3 * c;
        let (lo, mid, hi) = (p.felicity(c - h).unwrap(), p.felicity(c).unwrap(), p.felicity(c + h).unwrap());
        prop_assert!(hi > mid && mid > lo);
        prop_assert!(hi - 2.0 * mid + lo < 0.0);
        prop_assert!(p.marginal_utility(c).unwrap() > 0.0);
        prop_assert!(p.felicity_curvature(c).unwrap() < 0.0);
    }

    #[test]
    fn inverse_marginal_utility_round_trips(p in params(), e in -3.0..3.0f64) {
        let c = 10f64.powf(e);
        let back = p.inverse_marginal_utility(p.marginal_utility(c).unwrap()).unwrap();
        prop_assert!(close(back, c, 1e-12), "{back} vs {c}");
        let lam = 10f64.powf(e);
        let again = p.marginal_utility(p.inverse_marginal_utility(lam).unwrap()).unwrap();
        prop_assert!(close(again, lam, 1e-12), "{again} vs {lam}");
    }

    #[test]
    fn retention_is_a_fraction(p in params(), e in -8.0..6.0f64) {
        let r = p.retention_rate(10f64.powf(e)).unwrap();
        prop_assert!(r > 0.0 && r <= 1.0);
        prop_assert_eq!(p.retention_rate(0.0).unwrap(), 1.0);
        prop_assert!(p.retention_rate(1e9).unwrap() < 1e-6);
    }

    #[test]
    fn loss_slope_identity(p in params(), e in -3.0..3.0f64) {
        let a = 10f64.powf(e);
        let h = 1e-5 * a;
        // Difference whichever of p and 1 - p is small, to avoid cancellation.
        let slope = if p.theta * a < 1.0 {
            (p.loss_rate(a + h).unwrap() - p.loss_rate(a - h).unwrap()) / (2.0 * h)
        } else {
            (p.retention_rate(a - h).unwrap() - p.retention_rate(a + h).unwrap()) / (2.0 * h)
        };
        let r = p.retention_rate(a).unwrap();
        let identity = (r - r * r) / a;
        prop_assert!(close(slope, identity, 1e-8), "{slope} vs {identity}");
    }

    #[test]
    fn elasticity_is_reciprocal_eta(p in params(), e in -3.0..3.0f64) {
        let s = p.elasticity_of_substitution(10f64.powf(e)).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(close(s, 1.0 / p.eta, 1e-14));
    }

    #[test]
    fn appropriation_is_clamped_at_the_threshold(p in params(), s in state()) {
        for i in Player::BOTH {
            let j = i.other();
            let a = optimal_appropriation(s.wealth(j), s.price(i), s.price(j), &p).unwrap();
            let m = aggression_margin(s.wealth(j), s.price(i), s.price(j), &p).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a > 0.0, m.active);
            if m.margin <= 0.0 {
                prop_assert_eq!(a, 0.0);
            }
        }
    }

    #[test]
    fn closed_form_controls_are_a_best_response(
        p in params(),
        s in state(),
        own in (1e-3..1e2f64, 0.0..20.0f64),
        others in ((1e-3..1e2f64, 0.0..20.0f64), (1e-3..1e2f64, 0.0..20.0f64)),
    ) {
        let star = mne_controls(&s, &p).unwrap();
        let trial = ControlPair::new(own.0, own.1);
        let o1 = ControlPair::new(others.0.0, others.0.1);
        let o2 = ControlPair::new(others.1.0, others.1.1);
        for i in Player::BOTH {
            let best = hamiltonian(&s, star[i.index()], o1, i, &p).unwrap();
            let any = hamiltonian(&s, trial, o1, i, &p).unwrap();
            prop_assert!(best >= any - 1e-6 * (1.0 + best.abs()), "{best} < {any}");
            // The own-control gain does not depend on the opponent's controls.
            let gain1 = best - any;
            let gain2 = hamiltonian(&s, star[i.index()], o2, i, &p).unwrap() - hamiltonian(&s, trial, o2, i, &p).unwrap();
            let scale = best.abs() + any.abs() + 1.0;
            prop_assert!((gain1 - gain2).abs() <= 1e-9 * scale, "{gain1} vs {gain2}");
        }
    }

    #[test]
    fn appropriation_grows_with_the_prize(p in params(), s in state(), bump in 1.01..3.0f64) {
        let (xj, li, lj) = (s.x[1], s.lam[0], s.lam[1]);
        let a = optimal_appropriation(xj, li, lj, &p).unwrap();
        let richer = optimal_appropriation(xj * bump, li, lj, &p).unwrap();
        let cheaper = optimal_appropriation(xj, li, lj / bump, &p).unwrap();
        prop_assert!(richer >= a && cheaper >= a);
        if a > 0.0 {
            prop_assert!(richer > a && cheaper > a);
        }
    }

    #[test]
    fn appropriation_is_scale_free_in_prices(p in params(), s in state(), e in -3.0..3.0f64) {
        let k = 10f64.powf(e);
        let (xj, li, lj) = (s.x[1], s.lam[0], s.lam[1]);
        let a = optimal_appropriation(xj, li, lj, &p).unwrap();
        let scaled = optimal_appropriation(xj, k * li, k * lj, &p).unwrap();
        prop_assert!(close(a, scaled, 1e-12) || (a - scaled).abs() < 1e-14, "{a} vs {scaled}");
        let c = optimal_consumption(li, &p).unwrap();
        let cs = optimal_consumption(k * li, &p).unwrap();
        prop_assert!(close(cs, c * k.powf(-1.0 / p.eta), 1e-12));
    }

    #[test]
    fn interior_appropriation_satisfies_its_first_order_condition(p in params(), s in state()) {
        for i in Player::BOTH {
            let j = i.other();
            let (xj, li, lj) = (s.wealth(j), s.price(i), s.price(j));
            let a = optimal_appropriation(xj, li, lj, &p).unwrap();
            if a > 1e-6 {
                let r = p.retention_rate(a).unwrap();
                let lhs = a / (r - r * r);
                let rhs = p.delta * xj * (p.gamma * li - lj) / li;
                prop_assert!(close(lhs, rhs, 1e-8), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn wealth_flow_forms_agree(p in params(), s in state(), a in (0.0..20.0f64, 0.0..20.0f64), c in 1e-3..1e2f64) {
        use conflict_game::dynamics::state_rate_retention_form;
        let direct = state_rate(s.x[0], s.x[1], c, a.0, a.1, &p).unwrap();
        let retained = state_rate_retention_form(s.x[0], s.x[1], c, a.0, a.1, &p).unwrap();
        let scale = c + a.0 + p.delta * (s.x[0] + s.x[1]) + p.production(s.x[0]).unwrap().abs();
        prop_assert!((direct - retained).abs() <= 1e-12 * scale);
    }
}
