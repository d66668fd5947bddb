"""Two-station CHSH referee harness.

Exact Clifford-algebra checks, a quantum singlet oracle, pluggable
local-hidden-variable strategies (including a faithfully diagnosed
broken one), a randomized-trials referee protocol with locality audits,
and martingale tail-bound certificates.
"""

__version__ = "0.1.0"
