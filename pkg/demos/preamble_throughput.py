"""How many preambles succeed per slot when m devices contend for R = 54 preambles?

Under orthogonal access a preamble only succeeds when exactly one device picks it.
Non-orthogonal access also rescues a preamble picked by two devices, provided their
timing advances differ by more than the delay spread. We print both curves around
their peaks.
"""
from nora.runner import preamble_throughput

m, ora, nora = preamble_throughput(R=54, p_s2=0.6, m_max=200)
print(f"{'m':>4} {'ORA':>8} {'NORA':>8}")
for i in range(0, 200, 10):
    print(f"{m[i]:>4} {ora[i]:8.3f} {nora[i]:8.3f}")

i, j = ora.argmax(), nora.argmax()
print(f"\nORA peaks at m={m[i]} with {ora[i]:.2f} successes per slot.")
print(f"NORA peaks at m={m[j]} with {nora[j]:.2f}, a gain of {nora[j] / ora[i] - 1:.0%}.")
