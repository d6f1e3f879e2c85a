"""Per-slot successes under heavy load, from the analytic fluid model.

With 50000 devices and uniform arrivals, both schemes peak early and then settle to
a congested steady state. NORA's steady state sits well above ORA's. With Beta
arrivals the burst is sharper: successes collapse while failures pile up and only
recover once devices run out of attempts. The spike after the arrival period ends
comes from the last back-off retries draining out.
"""

from nora.analytic import run_fluid_model
from nora.config import build_config
from nora.metrics import compute_report

def describe(tm):
    print(f"\n{tm.upper()}, 50000 devices")
    for scheme in ("nora", "ora"):
        cfg = build_config(overrides={"traffic_model": tm, "ues": 50000, "scheme": scheme})
        tr = run_fluid_model(cfg)
        ms = tr.per_slot("U_MS")
        rep = compute_report(cfg, tr)
        marks = "  ".join(f"k={k}:{ms[k]:.2f}" for k in (30, 300, 800, 1000, 1500))
        print(f"  {scheme:>4}  P_S={rep.P_S:.3f}  mean attempts={rep.L_bar:.2f}  first peak {ms[:1000].max():.2f} at k={ms[:1000].argmax()}")
        print(f"        {marks}")

describe("tm1")
describe("tm2")
