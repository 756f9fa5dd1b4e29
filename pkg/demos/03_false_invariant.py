"""Which energy is adiabatically conserved for an accelerating inclusion.

The inclusion speeds up from v=0.1 to v=0.5.  The lab-frame energy minus
the work of the kink force, divided by the frequency, changes by about a
quarter; the same ratio built on the co-moving quasi-energy barely moves.
"""

from trapwave.verify import check_false_invariant

for c in check_false_invariant():
    print(c.line())
