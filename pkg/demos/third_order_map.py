"""The third-order substitution with a surd, checked by two independent oracles.

Run with ``python3 demos/third_order_map.py``.  The canonical route reduces the
residual to a normal form over Q(params)(sqrt(u1^2 + alpha)); the series route
evaluates it on random exact Taylor jets.
"""

from __future__ import annotations

import time

from jetalg import catalog as C
from jetalg.taylor import taylor_pushforward
from jetalg.transform import pushforward_residual

source, target = C.get_equation("cd"), C.get_equation("kdv")
print("source:", source)

for name in ("cd_third_order", "cd_third_order_corrected"):
    for sign in (1, -1):
        S = C.get_map(name, {"sign": sign})
        t0 = time.perf_counter()
        canon = pushforward_residual(S, source, target).verdict
        t1 = time.perf_counter()
        series = taylor_pushforward(S, source, target, trials=3)
        t2 = time.perf_counter()
        print(f"{name:26s} z-sign {sign:+d}: canonical {canon.kind:11s} ({t1 - t0:.2f}s)"
              f"  series {series.kind:10s} ({t2 - t1:.2f}s)")

# alpha with a constant term does not work with the corrected map
b = {"with_k0": 1, "sign": 1}
r = pushforward_residual(C.get_map("cd_third_order_corrected", b), C.get_equation("cd", b), target)
print("alpha with a constant term:", r.verdict.kind)
