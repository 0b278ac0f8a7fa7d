"""Smoke test of the bifconj_py extension module.

Exercises every exported binding once with representative parameters and
checks the numbers against known-good magnitudes. Run it directly after
`pip install --no-build-isolation -e crates/bifconj-py`:

    python python/smoke_test.py
"""

import math
import sys

import bifconj_py as b


def check(label, condition):
    status = "ok" if condition else "FAIL"
    print(f"  {status}: {label}")
    return condition


def main():
    failures = 0

    print("suite_names / verify")
    suites = b.suite_names()
    failures += not check("suite list is populated", "huls" in suites)
    reports = b.verify("huls", seed=42)
    failures += not check("huls suite returns reports", len(reports) > 0)
    failures += not check(
        "every huls report passes", all(r["passed"] for r in reports)
    )
    failures += not check(
        "reports carry measured/bound fields",
        all(0 <= r["measured"] <= r["bound"] for r in reports),
    )

    print("classify_map")
    wiggins = b.classify_map("wiggins-counterexample")
    failures += not check(
        "the planar counterexample classifies as none",
        wiggins["verdict"] == "none" and wiggins["discriminant"] < 0,
    )
    tc = b.classify_map("tc-phi")
    failures += not check(
        "the transcritical flow map classifies as transcritical",
        tc["verdict"] == "transcritical",
    )
    failures += not check(
        "condition records are structured",
        all(
            set(c) == {"name", "value", "satisfied"} for c in tc["conditions"]
        ),
    )

    print("Conjugacy")
    j = b.Conjugacy("tc", 0.1, 0.01, 1, "inner")
    lo, hi = j.interval()
    failures += not check("interval is ordered", lo < hi)
    failures += not check("eval fixes the anchor end", j.eval(hi) == hi)
    failures += not check("residual is tiny", j.residual(512) <= 1e-10)
    mid = 0.5 * (lo + hi)
    failures += not check("defect is tiny", abs(j.defect(mid)) <= 1e-10)
    xs = [lo + (hi - lo) * i / 63 for i in range(64)]
    many = j.eval_many(xs)
    failures += not check(
        "batched evaluation matches per-point evaluation",
        many == [j.eval(x) for x in xs],
    )
    failures += not check(
        "id - J is O(h^p) small",
        max(abs(x - v) for x, v in zip(xs, many)) < 0.1 * 0.01,
    )
    try:
        b.Conjugacy("pf", 0.1, 0.005, 1, "inner")
        failures += not check("out-of-box parameters are rejected", False)
    except ValueError as e:
        failures += not check(
            "out-of-box rejection names the constraint", "alpha0" in str(e)
        )

    print("alignment / orbit_closeness")
    a = b.alignment(1e-3, -0.5)
    failures += not check(
        "state rescaling is near 1", abs(a["rho"] - 1.0) < 1e-3
    )
    failures += not check(
        "aligned parameter is near alpha", abs(a["alpha_tilde"] + 0.5) < 1e-3
    )
    u6 = abs(-0.5 * 1e-3) ** 6
    failures += not check(
        "series residuals are below |alpha h|^6",
        a["series_check"]["alpha_tilde"] <= u6 and a["series_check"]["rho"] <= u6,
    )
    o = b.orbit_closeness(1e-3, -1.0, -0.5, 500, 0.0)
    failures += not check("orbit has N+1 samples", len(o["values"]) == 501)
    failures += not check(
        "normalized difference stays bounded",
        math.isfinite(o["sup"]) and o["sup"] < 1.0,
    )
    perturbed = b.orbit_closeness(1e-3, -1.0, -0.5, 500, 1e-3)
    failures += not check(
        "perturbing the aligned parameter degrades closeness",
        perturbed["sup"] > 10.0 * o["sup"],
    )

    if failures:
        print(f"\n{failures} check(s) failed")
        return 1
    print("\nall checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
