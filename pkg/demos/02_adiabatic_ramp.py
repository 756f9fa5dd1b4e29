"""Slow stiffening of the foundation.

k doubles over theta in [1, 2].  The action J = E / omega stays put while
the energy and frequency both change; the drift of J shrinks as the ramp
gets slower.
"""

from trapwave.verify import k_ramp, ramp_measurement

for eps in (0.02, 0.01):
    r = ramp_measurement(k_ramp(eps))
    e_change = r["trace"]["E"][-1] / r["trace"]["E"][0] - 1
    print(f"eps={eps}: energy changed by {e_change:+.3f}, J drift {r['J_drift']:.2e}, "
          f"late amplitude {r['amplitude']:.5f} vs {r['wkb']:.5f} from J conservation")
