"""Independent reference computations used only by the tests.

Integrals are evaluated by a composite midpoint rule on 10^6 subintervals after
the substitution ``t = a + u^2``; closed forms are used where they exist.
"""
import math

import numpy as np

from killing_cmc import geometry as _geo

N_MIDPOINT = 1_000_000


def midpoint_sqrt(f, a, b, n=N_MIDPOINT):
    """``int_a^b f(t) dt`` as ``int_0^sqrt(b-a) 2u f(a + u^2) du`` by the midpoint rule."""
    U = math.sqrt(b - a)
    h = U / n
    u = (np.arange(n) + 0.5) * h
    return float(np.sum(2.0 * u * f(a + u * u)) * h)


def profile_integrand(rho, s, H):
    """Integrand of the rotational profile written straight from the slope function."""
    if s == math.inf:
        C = -H * math.cosh(2 * rho) + math.sinh(2 * rho)
    else:
        c = math.cosh(rho)
        C = -H * math.cosh(2 * rho) + math.sinh(2 * rho) * c * s / math.sqrt(1 + c * c * s * s)

    def f(t):
        g = (H * np.cosh(2 * t) + C) / np.sinh(2 * t)
        return g / (np.cosh(t) * np.sqrt(1 - g * g))

    return f


def profile_midpoint(r, rho, s, H):
    return midpoint_sqrt(profile_integrand(rho, s, H), rho, r)


def B_midpoint(H, T=40.0):
    """B(H) truncated at T (tail below 4 e^{-T})."""

    def f(t):
        x = H + (1 - H) * np.exp(-2 * t)
        return x / (np.cosh(t) * np.sqrt(1 - x * x))

    return midpoint_sqrt(f, 0.0, T)


def catenoid_midpoint(r, rho):
    def f(t):
        return math.sinh(rho) / np.sqrt(np.sinh(t + rho) ** 2 - math.sinh(rho) ** 2)

    return midpoint_sqrt(f, 0.0, r)


def w_closed(r, H):
    """Height of the equidistant surface over H^2: ``-arsinh(H / (sqrt(1-H^2) cosh r))``."""
    return -np.arcsinh(H / (math.sqrt(1 - H * H) * np.cosh(r)))


def w_prime_closed(r, H):
    a = H / math.sqrt(1 - H * H)
    return a * np.tanh(r) / np.sqrt(np.cosh(r) ** 2 + a * a)


def eh_sphere(H):
    """E_H is the Euclidean sphere through the unit circle centered at (0, 0, -k)."""
    k = H / math.sqrt(1 - H * H)
    return k, math.sqrt(1 + k * k)


def eh_meridian_point(alpha, H):
    """Point of E_H in the xz half-plane at angle ``alpha`` from the top of its sphere."""
    k, a = eh_sphere(H)
    return np.array([a * math.sin(alpha), 0.0, -k + a * math.cos(alpha)])


def eh_meridian_length(alpha, H):
    """Hyperbolic length of the E_H meridian from its top to ``alpha``."""
    from scipy.integrate import quad
    k, a = eh_sphere(H)
    return quad(lambda s: a / (-k + a * math.cos(s)), 0.0, alpha, epsabs=0, epsrel=1e-13)[0]


def profile_curve(radii, rho, s, H, n=20_000):
    """Profile heights at increasing ``radii`` by chained substituted midpoint sums."""
    f = profile_integrand(rho, s, H)
    out, acc, prev = [], 0.0, rho
    for r in radii:
        if r > prev:
            acc += midpoint_sqrt(f, prev, r, n)
            prev = r
        out.append(acc)
    return np.array(out)


def base_slope_for_eh_slope(r, s, H):
    """Radial base slope of ``u~`` whose graph over E_H has slope ``s`` at base radius ``r``.

    Along a meridian of E_H the arclength element is ``sqrt(1 + cosh^2 r w'^2) dr``.
    """
    wp = float(w_prime_closed(r, H))
    return wp + s * math.sqrt(1.0 + math.cosh(r) ** 2 * wp * wp)


# -- gradients on E_H ------------------------------------------------------------------------

def axis_distance(p):
    """Hyperbolic distance to the vertical geodesic through the origin."""
    return np.arcsinh(np.hypot(p[..., 0], p[..., 1]) / p[..., 2])


TEST_FUNCTIONS = [
    lambda p: 0.3 * axis_distance(p),
    lambda p: axis_distance(p) * p[..., 0] / np.linalg.norm(p, axis=-1),
    lambda p: np.sin(axis_distance(p)) * axis_distance(p) * p[..., 1] / np.linalg.norm(p, axis=-1),
]


def eh_gradient(F, x, H, h=1e-6):
    """Tangential hyperbolic gradient on E_H of an ambient function, by central differences."""
    k, _ = eh_sphere(H)
    g = np.array([(F(x + h * e) - F(x - h * e)) / (2 * h) for e in np.eye(3)])
    g = x[2] ** 2 * g
    n = np.array([x[0], x[1], x[2] + k])
    n /= np.linalg.norm(n)
    return g - np.dot(g, n) * n


def base_gradient_fd(F, r, th, chart, h, central=True):
    """Frame components of grad u~ for u~(r, th) = F(lift(r, th)) + w(r), by differences."""
    def ut(r_, th_):
        x = chart.lift(r_, th_)
        return F(x) + chart.w(r_)

    if central:
        d_r = (ut(r + h, th) - ut(r - h, th)) / (2 * h)
        d_t = (ut(r, th + h) - ut(r, th - h)) / (2 * h) / math.sinh(r)
    else:
        d_r = (ut(r + h, th) - ut(r, th)) / h
        d_t = (ut(r, th + h) - ut(r, th)) / h / math.sinh(r)
    return np.array([d_r, d_t])


def frame_components(vec, r, th):
    """Components of a tangent vector of H^2 in the polar orthonormal frame."""
    p = _geo.hemisphere_point(r, th)
    e_r, e_t = _geo.polar_frame(r, th)
    return np.array([_geo.model_inner(p, vec, e_r), _geo.model_inner(p, vec, e_t)])
