"""Smoke test for the noonsim_py extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math

import noonsim_py as ns


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    delays = [200.0 * k for k in range(-10, 11)]

    noon4 = ns.preset("noon4")
    assert noon4.labels == "ABCD" and noon4.n_paths == 4
    assert noon4.unitarity_residual() < 1e-10

    far = 4000.0 + 40 * 140.0
    v_same = ns.visibility_model_free(delays, ns.delay_scan(noon4, "ABCD", delays, [0.0, 0.0]))
    v_sep = ns.visibility_model_free(delays, ns.delay_scan(noon4, "ABCD", delays, [0.0, far]))
    assert close(v_same, 1.0, 1e-6), v_same
    assert close(v_sep, 1 / 3, 1e-6), v_sep

    pairs = {p: ns.delay_scan(noon4, p, delays, [0.0]) for p in ["AB", "AC", "AD", "BC", "BD", "CD"]}
    combined = ns.combine_four_from_pairs(delays, pairs, "ABCD")
    assert close(ns.visibility_model_free(delays, combined), 1 / 3, 1e-9)

    assert close(ns.v4_from_ea(1.0, 0.0), 1 / 3, 1e-15)
    value, raw = ns.ea_from_v4(ns.v4_from_ea(0.9, 0.5), 0.9)
    assert close(raw, 0.5, 1e-12) and value == raw

    assert close(ns.packet_overlap(0.0, 140.0, 140.0), math.exp(-1 / 8), 1e-12)
    assert close(ns.exchange_ratio(0.0, 140.0, 140.0), math.exp(-0.5), 1e-12)

    rates = [3.0 * (1 - 0.6 * math.exp(-d * d / (2 * 150.0**2))) for d in delays]
    f = ns.fit_gaussian_dip(delays, rates)
    assert f["converged"] and close(f["visibility"], 0.6, 1e-6), f

    classes = ns.list_patterns(ns.preset("noon6"))
    assert sum(len(p) for n, _, p in classes if n == 2) == 15
    assert sum(len(p) for n, _, p in classes if n == 4) == 15

    try:
        ns.preset("noon8")
    except ValueError as e:
        assert "noon8" in str(e)
    else:
        raise AssertionError("unknown preset accepted")

    print("noonsim_py smoke test passed")


if __name__ == "__main__":
    main()
