"""Smoke test for the hydride Python extension.

Build and install first, e.g. ``pip install --no-build-isolation ./crates/python``
(requires maturin), then run ``python python/smoke_test.py``.
"""

import math

import hydride

CONFIG = """
[grid]
dim = 1
cells = 16
[time]
T = 0.5
N = 16
"""


def main():
    c_h, c_h_prime, c_s = hydride.certify()
    assert c_s > 0 and math.isclose(c_s, 1.0 - c_h_prime), (c_h, c_h_prime, c_s)
    try:
        hydride.certify(c1=1.0)
    except hydride.ConfigError:
        pass
    else:
        raise AssertionError("c1 = 1 must fail admissibility on [0, 1]")

    cfg = hydride.Config.parse(CONFIG)
    assert cfg.n_steps == 16 and math.isclose(cfg.tau, 0.5 / 16)
    assert hydride.Config.parse(cfg.emit()).emit() == cfg.emit()
    try:
        hydride.Config.parse("[grid]\ncellz = 4\n")
    except hydride.ConfigError:
        pass
    else:
        raise AssertionError("unknown keys must be rejected")

    result = hydride.run(cfg)
    assert result.temperature_positive
    assert len(result.ledger("step")) == cfg.n_steps + 1
    assert all(v == 1.0 for v in result.ledger("phase_bounds_ok"))
    assert max(abs(v) for v in result.ledger("mass_balance_residual")) < 1e-8
    final = result.final_state()
    assert final.step == cfg.n_steps
    assert min(final.field("p")) > 0 and all(0 <= c <= 1 for c in final.field("chi"))
    assert final.snapshot().startswith("#")

    report = hydride.mms_study(cfg, "trig1d")
    assert report["passed"], report["table"]

    print("hydride smoke test passed")
    print(f"  c_h = {c_h:.6f}, c_h' = {c_h_prime:.6f}, c_s = {c_s:.6f}")
    print(f"  final min Theta = {min(final.field('theta')):.6f}")
    print(f"  spatial orders = {report['spatial_orders']}")
    print(f"  temporal orders = {report['temporal_orders']}")


if __name__ == "__main__":
    main()
