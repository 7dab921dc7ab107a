use lotprice::constructions::{gen_polylog_gap, gen_uniform_gap};
use lotprice::io::{distribution_from_json, distribution_to_json, instance_from_json, instance_to_json, menu_from_json, menu_to_json};
use lotprice::lp::solve_optimal_buy_one;
use lotprice::model::{buy_one_revenue_with, item_choice, TieBreak};
use lotprice::oracles::{bounded_bundle_choice, brute_force_item_pricing, grid_lottery_search, BundleLimits};
use lotprice::rounding::{base_prices, derandomize, round_1d, round_2d, round_buy_many, step_two_range, PROB_SUM_TOL};
use lotprice::{
    add_dummy_item, bundle_utility, buy_one_choice, buy_one_revenue, buy_one_utility, epsilon_discount, Bundle,
    ConsumerType, Instance, ItemPricing, Lottery, LotteryMenu, DEFAULT_TOL,
};
use proptest::prelude::*;

/// Values on a half-integer grid so that ties actually occur.
fn value() -> impl Strategy<Value = f64> {
    (0u32..=20).prop_map(|k| k as f64 / 2.0)
}

fn instance(n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    prop::collection::vec((prop::collection::vec(value(), n), 1u32..=4), 1..=max_m).prop_map(move |rows| {
        Instance::from_rows(n, rows.into_iter().map(|(v, w)| (v, w as f64 / 4.0))).unwrap()
    })
}

fn lottery(n: usize) -> impl Strategy<Value = Lottery> {
    (prop::collection::vec(0u32..=4, n), 0u32..=4, 0u32..=40).prop_map(move |(raw, slack, price)| {
        let total = raw.iter().sum::<u32>() + slack;
        let probs = raw.iter().map(|&r| if total == 0 { 0.0 } else { r as f64 / total as f64 }).collect();
        Lottery::new(probs, price as f64 / 4.0).unwrap()
    })
}

fn full_lottery(n: usize) -> impl Strategy<Value = Lottery> {
    (prop::collection::vec(1u32..=4, n), 0u32..=40).prop_map(move |(raw, price)| {
        let total: u32 = raw.iter().sum();
        Lottery::new(raw.iter().map(|&r| r as f64 / total as f64).collect(), price as f64 / 4.0).unwrap()
    })
}

fn menu(n: usize, max_len: usize) -> impl Strategy<Value = LotteryMenu> {
    prop::collection::vec(lottery(n), 0..=max_len).prop_map(move |ls| LotteryMenu::new(n, ls).unwrap())
}

fn instance_and_menu(max_n: usize) -> impl Strategy<Value = (Instance, LotteryMenu)> {
    (1..=max_n).prop_flat_map(|n| (instance(n, 5), menu(n, 5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn buy_one_choice_is_utility_maximal((inst, menu) in instance_and_menu(3)) {
        for c in inst.consumers() {
            let choice = buy_one_choice(c, &menu, DEFAULT_TOL).unwrap();
            prop_assert!(choice.payment <= menu.max_price());
            for l in menu.lotteries() {
                prop_assert!(choice.utility >= buy_one_utility(c, l).unwrap() - DEFAULT_TOL);
            }
        }
    }

    #[test]
    fn single_copy_bundle_is_buy_one_utility((inst, menu) in instance_and_menu(3)) {
        for c in inst.consumers() {
            for (i, l) in menu.lotteries().iter().enumerate() {
                let b = bundle_utility(c, &menu, &Bundle::single(i, 1)).unwrap();
                prop_assert!((b - buy_one_utility(c, l).unwrap()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn free_copies_never_hurt((inst, menu) in instance_and_menu(3), copies in 1u32..4) {
        let free: Vec<usize> = (0..menu.len()).filter(|&i| menu.lotteries()[i].price() == 0.0).collect();
        for c in inst.consumers() {
            for &i in &free {
                let fewer = bundle_utility(c, &menu, &Bundle::single(i, copies)).unwrap();
                let more = bundle_utility(c, &menu, &Bundle::single(i, copies + 1)).unwrap();
                prop_assert!(more >= fewer - 1e-12);
            }
        }
    }

    #[test]
    fn revenue_is_invariant_under_item_permutation((inst, menu) in instance_and_menu(3), seed in any::<u64>()) {
        let n = inst.n();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((seed % n as u64) as usize);
        if seed % 2 == 1 {
            perm.reverse();
        }
        let a = buy_one_revenue(&inst, &menu).unwrap();
        let b = buy_one_revenue(&inst.permute_items(&perm).unwrap(), &menu.permute_items(&perm).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn discount_recovers_lowest_price_revenue((inst, menu) in instance_and_menu(3), k in 1u32..=5) {
        let eps = k as f64 / 100.0;
        let discounted = buy_one_revenue(&inst, &epsilon_discount(&menu, eps).unwrap()).unwrap();
        let pessimistic = buy_one_revenue_with(&inst, &menu, DEFAULT_TOL, TieBreak::LowestPrice).unwrap();
        prop_assert!(discounted >= (1.0 - eps) * pessimistic - 1e-9);
    }

    #[test]
    fn dummy_item_preserves_revenue_and_bundles((inst, menu) in instance_and_menu(3)) {
        let (inst2, menu2) = add_dummy_item(&inst, &menu).unwrap();
        let a = buy_one_revenue(&inst, &menu).unwrap();
        prop_assert!((a - buy_one_revenue(&inst2, &menu2).unwrap()).abs() <= 1e-12);
        for (c, c2) in inst.consumers().iter().zip(inst2.consumers()) {
            for i in 0..menu.len() {
                let j = menu2.lotteries().iter().position(|l| l.probs()[..inst.n()] == *menu.lotteries()[i].probs()
                    && l.price() == menu.lotteries()[i].price()).unwrap();
                let u = bundle_utility(c, &menu, &Bundle::single(i, 2)).unwrap();
                let u2 = bundle_utility(c2, &menu2, &Bundle::single(j, 2)).unwrap();
                prop_assert!((u - u2).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lp_solution_dominates_item_pricing(inst in (1usize..=2).prop_flat_map(|n| instance(n, 5))) {
        let opt = solve_optimal_buy_one(&inst).unwrap();
        let (_, items) = brute_force_item_pricing(&inst, &[]).unwrap();
        prop_assert!(opt.revenue >= items - 1e-6);
        if inst.n() == 2 {
            prop_assert!(opt.revenue <= 3.0 * items + 1e-6);
        }
        prop_assert!((buy_one_revenue(&inst, &opt.menu).unwrap() - opt.revenue).abs() <= 1e-6);
        for l in opt.menu.lotteries() {
            prop_assert!(l.total_prob() <= 1.0 + 1e-7 && l.price() >= 0.0);
        }
    }

    #[test]
    fn one_item_lp_is_a_single_price(inst in instance(1, 6)) {
        let opt = solve_optimal_buy_one(&inst).unwrap();
        let best = inst
            .consumers()
            .iter()
            .map(|c| c.values()[0])
            .map(|p| lotprice::item_pricing_revenue(&inst, &ItemPricing::uniform(1, p).unwrap(), DEFAULT_TOL).unwrap())
            .fold(0.0, f64::max);
        prop_assert!((opt.revenue - best).abs() <= 1e-6);
    }

    #[test]
    fn grid_search_never_beats_the_lp(inst in (1usize..=2).prop_flat_map(|n| instance(n, 2))) {
        let (_, grid) = grid_lottery_search(&inst, 0.25).unwrap();
        prop_assert!(grid <= solve_optimal_buy_one(&inst).unwrap().revenue + 1e-6);
    }

    #[test]
    fn one_dim_rounding_is_exact(inst in instance(1, 6), menu in menu(1, 8)) {
        let expected = round_1d(&menu).unwrap().expected_revenue(&inst, DEFAULT_TOL).unwrap();
        prop_assert!((expected - buy_one_revenue(&inst, &menu).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn two_dim_rounding_keeps_a_third(inst in instance(2, 5), ls in prop::collection::vec(full_lottery(2), 0..=5)) {
        let menu = LotteryMenu::new(2, ls).unwrap();
        let pd = round_2d(&inst, &menu).unwrap();
        let d = derandomize(&pd, &inst, DEFAULT_TOL).unwrap();
        prop_assert!(d.expected_revenue >= buy_one_revenue(&inst, &menu).unwrap() / 3.0 - 1e-6);
        prop_assert!(d.best_revenue >= d.expected_revenue);
    }

    #[test]
    fn buy_many_rounding_is_a_distribution(inst in (1usize..=3).prop_flat_map(|n| (instance(n, 4), prop::collection::vec(full_lottery(n), 0..=4)))) {
        let (inst, ls) = inst;
        let menu = LotteryMenu::new(inst.n(), ls).unwrap();
        let pd = round_buy_many(&menu, &inst).unwrap();
        prop_assert!((pd.total_prob() - 1.0).abs() <= PROB_SUM_TOL);
        let d = derandomize(&pd, &inst, DEFAULT_TOL).unwrap();
        prop_assert!(d.best_revenue >= d.expected_revenue);
    }

    #[test]
    fn scaled_base_prices_move_down_the_items(inst in (2usize..=4).prop_flat_map(|n| (instance(n, 4), prop::collection::vec(full_lottery(n), 1..=4)))) {
        let (inst, ls) = inst;
        let n = inst.n();
        let menu = LotteryMenu::new(n, ls).unwrap();
        let base = base_prices(&menu, n).unwrap();
        for c in inst.consumers() {
            let mut bought = Vec::new();
            for t in step_two_range(n) {
                let prices: Vec<f64> = base.iter().map(|&p| if p == 0.0 { 0.0 } else { p * 2f64.powi(t) }).collect();
                if let Some(i) = item_choice(c, &ItemPricing::new(prices).unwrap(), DEFAULT_TOL).unwrap() {
                    if bought.last() != Some(&i) {
                        bought.push(i);
                    }
                }
            }
            for w in bought.windows(2) {
                prop_assert!(base[w[1]] < base[w[0]]);
                prop_assert!(c.values()[w[1]] <= c.values()[w[0]]);
            }
        }
    }

    #[test]
    fn bundle_search_beats_single_lotteries((inst, menu) in instance_and_menu(3)) {
        let small = BundleLimits::new(1, 1, 2).unwrap();
        let large = BundleLimits::new(3, 2, 6).unwrap();
        for c in inst.consumers() {
            let one = buy_one_choice(c, &menu, DEFAULT_TOL).unwrap();
            let a = bounded_bundle_choice(c, &menu, small).unwrap();
            let b = bounded_bundle_choice(c, &menu, large).unwrap();
            prop_assert!(a.utility >= one.utility.max(0.0) - 1e-9);
            prop_assert!(b.utility >= a.utility - 1e-9);
        }
    }

    #[test]
    fn json_round_trips((inst, menu) in instance_and_menu(3)) {
        prop_assert_eq!(instance_from_json(&instance_to_json(&inst)).unwrap(), inst.clone());
        prop_assert_eq!(menu_from_json(&menu_to_json(&menu)).unwrap(), menu.clone());
        if menu.n() == 1 {
            let pd = round_1d(&menu).unwrap();
            prop_assert_eq!(distribution_from_json(&distribution_to_json(&pd)).unwrap(), pd);
        }
    }
}

#[test]
fn generators_are_deterministic_and_normalized() {
    for n in 2..=6 {
        let g = gen_uniform_gap(n).unwrap();
        assert_eq!(g, gen_uniform_gap(n).unwrap());
        assert!((g.instance.total_weight() - 1.0).abs() <= 1e-9);
    }
    let g = gen_polylog_gap(7, 3).unwrap();
    assert_eq!(g, gen_polylog_gap(7, 3).unwrap());
    let sets: Vec<Vec<usize>> = g
        .instance
        .consumers()
        .iter()
        .map(|c| (0..c.dim()).filter(|&i| c.values()[i] > 0.0).collect())
        .collect();
    assert!(sets.iter().all(|s| s.len() == 7));
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            assert!(a.iter().filter(|x| b.contains(x)).count() <= 2);
        }
    }
    assert!(ConsumerType::new(vec![1.0], f64::NAN).is_err());
}
