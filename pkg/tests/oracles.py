"""Reference computations that share no code with the package.

Each oracle is deliberately naive: direct quadrature, brute-force search,
plain formulas typed in from the coefficient sources.
"""

import math

import numpy as np
from scipy import integrate


def jundt_ne(lam, T):
    """Extraordinary index of congruent LiNbO3, temperature-dependent Sellmeier."""
    a1, a2, a3, a4, a5, a6 = 5.35583, 0.100473, 0.20692, 100.0, 11.34927, 1.5334e-2
    b1, b2, b3, b4 = 4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5
    f = (T - 24.5) * (T + 570.82)
    l2 = lam * lam
    n2 = a1 + b1 * f + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2) + (a4 + b4 * f) / (l2 - a5**2) - a6 * l2
    return math.sqrt(n2)


def zelmon_no_21c(lam):
    """Ordinary index of congruent LiNbO3 at 21 C (three-term Sellmeier)."""
    l2 = lam * lam
    terms = ((2.6734, 0.01764), (1.229, 0.05914), (12.614, 474.6))
    return math.sqrt(1.0 + sum(a * l2 / (l2 - b) for a, b in terms))


def g_of_z(z, starts, ends, signs):
    out = np.zeros_like(z)
    for a, b, s in zip(starts, ends, signs):
        out[(z >= a) & (z < b)] = s
    return out


def pmf_quadrature(dk, starts, ends, signs, length, steps_per_domain=10_000):
    """(1/L) * integral of g(z) exp(-i dk z) dz by Simpson's rule, domain by domain."""
    total = 0.0 + 0.0j
    for a, b, s in zip(starts, ends, signs):
        if b <= a:
            continue
        z = np.linspace(a, b, steps_per_domain + 1)
        total += s * integrate.simpson(np.exp(-1j * dk * z), x=z)
    return total / length


def grid_minimum(f, bounds, n=801):
    """Brute-force minimum of a 2-D function on an n x n grid."""
    xs = np.linspace(*bounds[0], n)
    ys = np.linspace(*bounds[1], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    v = f(X, Y)
    k = np.unravel_index(np.argmin(v), v.shape)
    return float(v[k]), (float(X[k]), float(Y[k]))


def central_difference_group_index(n_of_lam, lam, rel_step):
    """d(n*nu)/dnu with nu = 2 pi / lam by a plain central difference."""
    nu = 2 * math.pi / lam
    h = rel_step * nu
    hi, lo = nu + h, nu - h
    return (n_of_lam(2 * math.pi / hi) * hi - n_of_lam(2 * math.pi / lo) * lo) / (2 * h)
