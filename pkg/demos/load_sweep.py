"""Where does each scheme stop coping?

We sweep the number of devices and call a load supported while at least 95 % of
devices finish random access. The fluid model makes a fine-grained sweep cheap.
"""
from nora.config import build_config
from nora.runner import max_supported_ues, sweep

grid = list(range(5000, 50001, 5000))
for tm in ("tm1", "tm2"):
    base = build_config(overrides={"traffic_model": tm})
    print(f"\n{tm.upper()}")
    print(f"{'U':>6} {'NORA P_S':>9} {'ORA P_S':>9}")
    rows = {}
    for value, scheme, res in sweep(base, "ues", grid, ["nora", "ora"]):
        rows.setdefault(value, {})[scheme] = res.reports["analytic"].P_S
    for u in grid:
        print(f"{u:>6} {rows[u]['nora']:9.4f} {rows[u]['ora']:9.4f}")
    n = max_supported_ues(base.replace(scheme="nora"), grid)
    o = max_supported_ues(base.replace(scheme="ora"), grid)
    print(f"supported: NORA {n}, ORA {o}")
