"""Sign, phase, and ordering conventions shared by every module.

All formulas elsewhere in the package (wavefunctions, mixed-mode quadratures,
circuit sampling order, file layouts) defer to this block. The hash of the
text below is embedded in dataset and model files so that artifacts produced
under different conventions cannot be silently mixed.
"""

import hashlib

CONVENTIONS = """\
cvpattern conventions v1
- Fock index: mixed radix, mode 0 is the most significant digit; amplitudes
  reshape to (D_0, ..., D_{m-1}) in C order, axis i <-> mode i.
- Quadratures: x = a^dag + a, p = i(a^dag - a); vacuum variance 1.
- Position wavefunction: psi_n(x) = (2*pi)^(-1/4) (2^n n!)^(-1/2)
  H_n(x/sqrt(2)) exp(-x^2/4); momentum: <p|n> = (-i)^n psi_n(p).
- Squeeze: S(xi) = expm((conj(xi) a^2 - xi a^dag^2)/2), xi = s exp(i*phi);
  Var(x) of S|0> is exp(-2 s) at phi = 0.
- Displace: D(alpha) = expm(alpha a^dag - conj(alpha) a); <x> = 2 Re alpha,
  <p> = 2 Im alpha.
- Beam splitter on ordered pair (i, j):
  B(theta, phi) = expm(theta (exp(i*phi) a_i^dag a_j - exp(-i*phi) a_i a_j^dag));
  balanced mixing is theta = pi/4, phi = 0, under which measuring mode i after
  B gives (x_i + x_j)/sqrt(2): mode i is the mixed output M, mode j is the
  discarded output, and B|1,0> = (|1,0> - |0,1>)/sqrt(2).
- Random circuit order: squeezes (mode ascending), displacements (mode
  ascending), beam splitters (pairs in lexicographic ascending order).
- Mixing cascade for patterns, singled mode k: tripartite, one balanced B on
  the two non-k modes in ascending order; quadripartite, B(i, j) then B(i, l)
  for non-k modes i < j < l, so x_M = (x_i + x_j + sqrt(2) x_l)/2. M is always
  the lowest-labelled non-k mode.
- Grid: 24 uniform bins on [-6, 6], bin centers at midpoints, midpoint rule
  (density at center times bin area).
- Stored grid axes: axis 0 = singled-mode quadrature, axis 1 = mixed-mode
  quadrature; groups ordered by singled mode ascending; quadrature pairs
  ordered (X,X),(X,P),(P,X),(P,P).
- Class order: tripartite FULLY_SEP, BISEP, FULLY_INSEP; quadripartite
  FULLY_SEP, TRISEP, BISEP_22, BISEP_13, FULLY_INSEP.
- Files: little-endian; dataset magic CVPD v1, model magic CVPM v1.
"""


def convention_hash() -> int:
    """First 8 bytes (little-endian) of the SHA-256 of the convention text."""
    digest = hashlib.sha256(CONVENTIONS.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
