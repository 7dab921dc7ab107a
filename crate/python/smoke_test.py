"""Smoke test for the pylotprice extension module.

Build and install it with `maturin build --release` in crates/python, then
`pip install` the wheel, and run `python3 python/smoke_test.py`.
"""

import json
import math

import pylotprice as lp


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    # One consumer valuing the single item at 4 buys the full lottery at 4.
    inst = lp.Instance(1, [([4.0], 1.0)])
    menu = lp.LotteryMenu(1, [([1.0], 4.0)])
    assert close(lp.buy_one_revenue(inst, menu), 4.0)

    # Two consumers with opposed values: the optimal menu sells each her item.
    inst = lp.Instance(2, [([4.0, 0.0], 0.5), ([0.0, 4.0], 0.5)])
    opt, revenue = lp.solve_optimal_buy_one(inst)
    assert close(revenue, 4.0), revenue
    assert close(lp.buy_one_revenue(inst, opt), revenue)
    pricing, items = lp.brute_force_item_pricing(inst)
    assert close(items, 4.0)
    assert close(lp.item_pricing_revenue(inst, pricing), items)

    # One-dimensional rounding is exact in expectation.
    inst = lp.Instance(1, [([2.5], 1.0), ([5.0], 1.0)])
    menu = lp.LotteryMenu(1, [([0.5], 1.0), ([1.0], 3.0)])
    dist = lp.round_1d(menu)
    assert len(dist) == 2
    assert close(sum(p for p, _ in dist.outcomes), 1.0)
    assert close(dist.expected_revenue(inst), lp.buy_one_revenue(inst, menu))
    best, best_rev, expected = dist.derandomize(inst)
    assert best_rev >= expected

    # Several copies of a cheap half-chance lottery beat the sure lottery.
    inst = lp.Instance(1, [([1.0], 1.0)])
    menu = lp.LotteryMenu(1, [([1.0], 0.5), ([0.5], 1 / 16)])
    assert lp.buy_many_revenue(inst, menu) in (0.1875, 0.25)

    # Generated uniform family: the optimal menu clears (2^n - 2) / n.
    inst, designed, meta = lp.generate("uniform", n=3)
    assert len(inst) == 7 and designed is not None
    assert json.loads(meta)["family"] == "uniform"
    opt, revenue = lp.solve_optimal_buy_one(inst)
    assert revenue >= 2.0 - 1e-6, revenue
    dist = lp.round_uniform_valuations(inst, designed)
    assert close(sum(p for p, _ in dist.outcomes), 1.0)

    # JSON round trip and "inf" prices.
    p = lp.ItemPricing([1.0, math.inf])
    assert lp.ItemPricing.from_json(p.to_json()).prices == [1.0, math.inf]
    assert lp.Instance.from_json(inst.to_json()).consumers == inst.consumers

    try:
        lp.round_2d(lp.Instance(3, [([1.0, 2.0, 3.0], 1.0)]), lp.LotteryMenu(3, [([0, 0, 1], 3.0)]))
    except lp.LotpriceError:
        pass
    else:
        raise AssertionError("2d rounding accepted three items")

    print("pylotprice smoke test passed")


if __name__ == "__main__":
    main()
