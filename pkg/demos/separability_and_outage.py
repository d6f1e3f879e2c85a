"""Two ingredients of NORA, evaluated at the default cell.

First, how often two random devices in a 500 m cell are far enough apart (in
round-trip time) for the base station to tell their preambles apart. Second, the
probability that their message 3 transmissions fail after successive interference
cancellation, next to a single device sending alone.
"""
import numpy as np

from nora.channel import OutageParams, outage_group, outage_single, sample_sic_outcomes, sic_exact_outage
from nora.core import CellGeometry, separability_probabilities

for t_rms in (0.1, 0.3, 1.0):
    p1, p2 = separability_probabilities(CellGeometry(d_c=500.0, t_rms=t_rms * 1e-6))
    print(f"delay spread {t_rms:.1f} us: pair separable with probability {p2:.4f}")

p = OutageParams()
print(f"\nsingle device outage           {outage_single(p):.4f}")
c1, c2 = outage_group(p)
print(f"pair outage (closed form)      first {c1:.4f}, second {c2:.4f}")

# The closed form decodes the stronger channel first. Decoding in back-off order
# with a shared fading draw tells a different story; both numbers are shown.
e1, e2 = sic_exact_outage(p)
ok1, ok2 = sample_sic_outcomes(p, 200_000, np.random.default_rng(1))
print(f"pair outage (exact, TA order)  first {e1:.4f}, second {e2:.4f}")
print(f"pair outage (sampled)          first {1 - ok1.mean():.4f}, second {1 - ok2.mean():.4f}")
