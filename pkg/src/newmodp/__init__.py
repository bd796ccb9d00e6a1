"""Exact computations with q-expansions modulo p: l-old and l-new parts, traces, and Hecke algebras.

Submodules:

* ``qexp``      truncated q-expansions, Eisenstein series, Delta
* ``spaces``    spaces M_k(N) and S_k(N) over ZZ, QQ, Z/p^b, F_q; graded mod p spaces
* ``operators`` T_r, U_m, W_l, w_l, S, the trace and its identities
* ``newold``    old and new subspaces, intersections, level raising, span conditions
* ``heckealg``  K(N) = ker U_p, eigencomponents, filtrations, the dual basis
* ``fixtures``  newform fixture files
* ``cli``       the ``newmodp`` command
"""

__version__ = "0.1.0"

from .errors import NewModPError  # noqa: F401
