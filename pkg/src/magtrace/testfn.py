"""Schwartz test functions paired with their Fourier transforms.

Transform convention used throughout the package::

    phi_hat(xi) = integral phi(x) exp(-i*xi*x) dx
    phi(x)      = (1/2pi) integral phi_hat(xi) exp(+i*xi*x) dxi

Three families are provided:

``gaussian``
    phi(x) = exp(-x^2/(2 s^2)),  phi_hat(xi) = s*sqrt(2pi)*exp(-s^2 xi^2/2).
``gaussian_modulated``
    phi(x) = exp(-x^2/(2 s^2)) * exp(i b x); the transform is the gaussian
    one recentred at ``b``.  Complex-valued for b != 0.
``fourier_bump``
    phi_hat is the standard smooth bump exp(-1/(1-t^2)), t = (xi-tau0)/w,
    identically zero outside [tau0-w, tau0+w]; phi is recovered by a fixed
    Gauss-Legendre rule on the support.  Complex-valued for tau0 != 0.

Every instance also carries *certified decay envelopes* on both sides of
the transform.  These envelopes are what the spectral-window truncation
and the Poisson-summation self-test use to bound everything they omit.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc

from .errors import QuadratureError, ValidationError

TWO_PI = 2.0 * math.pi

# L1 norms D_m = int_{-1}^{1} |psi^(m)(t)| dt of the unit bump
# psi(t) = exp(-1/(1-t^2)), computed offline from the exact symbolic
# derivatives and rounded *up* (2% headroom): they only ever enter as
# upper bounds.  |phi(x)| <= w^(1-m) * D_m / (2pi |x|^m) for the bump of
# half-width w, by m-fold integration by parts.
_BUMP_D0 = 0.4441
_BUMP_D2 = 3.258
_BUMP_D4 = 1098.0

# Fixed Gauss-Legendre rule for the bump's inverse transform.  The rule
# resolves e^{i xi x} while the node count exceeds w*|x|/2 plus a margin
# for the bump itself; 1024 nodes keep full precision out to w*|x| ~ 1600,
# past which the bump's phi is below double-precision resolution anyway.
_BUMP_GL_NODES = 1024

# Dyadic radius search for the bump is capped at w*|x| = 1600 accordingly.
_BUMP_U_CAP = 1600.0


# ---------------------------------------------------------------------------
# decay envelopes
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class GaussianEnvelope:
    """Envelope amp*exp(-u^2/(2 scale^2)) for u = distance past the center."""

    amp: float
    scale: float

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.amp * np.exp(-np.square(u) / (2.0 * self.scale**2))

    def lattice_sum(self, start: float, step: float,
                    w0: float = 1.0, w1: float = 0.0, w2: float = 0.0) -> float:
        """Certified bound on sum_{m>=0} (w0+w1*m+w2*m^2) env(start+m*step).

        Uses (start+m*step)^2 >= start^2 + 2*start*step*m, which turns the
        tail into a weighted geometric series.
        """
        if start <= 0.0 or step <= 0.0:
            raise ValidationError("lattice_sum needs start > 0 and step > 0")
        t0 = float(self(start))
        r = math.exp(-start * step / self.scale**2)
        if r >= 1.0:
            raise ValidationError("lattice_sum ratio >= 1; start too small")
        g1 = r / (1.0 - r) ** 2
        g2 = r * (1.0 + r) / (1.0 - r) ** 3
        return t0 * (w0 / (1.0 - r) + w1 * g1 + w2 * g2)

    def halfline_moment(self, a: float, c0: float, c1: float) -> float:
        """Exact integral_a^inf (c0 + c1*x) env(x) dx  (a > 0)."""
        s = self.scale
        gauss_tail = s * math.sqrt(math.pi / 2.0) * erfc(a / (s * math.sqrt(2.0)))
        exp_term = s * s * math.exp(-a * a / (2.0 * s * s))
        return self.amp * (c0 * gauss_tail + c1 * exp_term)


@dataclasses.dataclass(frozen=True)
class PowerEnvelope:
    """Envelope min(cap, c2/u^2, c4/u^4) for compactly band-limited phi."""

    cap: float
    c2: float
    c4: float

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            v2 = np.where(u > 0, self.c2 / np.square(u), np.inf)
            v4 = np.where(u > 0, self.c4 / np.square(np.square(u)), np.inf)
        return np.minimum(self.cap, np.minimum(v2, v4))

    def lattice_sum(self, start: float, step: float,
                    w0: float = 1.0, w1: float = 0.0, w2: float = 0.0) -> float:
        if w1 or w2:
            raise ValidationError("PowerEnvelope supports unweighted lattice sums only")
        if start <= 0.0 or step <= 0.0:
            raise ValidationError("lattice_sum needs start > 0 and step > 0")
        # first term + integral comparison with the monotone envelope
        head = float(self(start))
        tail = self.c4 / (3.0 * step * start**3)
        return w0 * (head + tail)

    def halfline_moment(self, a: float, c0: float, c1: float) -> float:
        """Bound on integral_a^inf (c0 + c1*x) env(x) dx using the 1/u^4 leg."""
        if a <= 0.0:
            raise ValidationError("halfline_moment needs a > 0")
        return self.c4 * (c1 / (2.0 * a * a) + c0 / (3.0 * a**3))


@dataclasses.dataclass(frozen=True)
class SumEnvelope:
    """|a1| env1 + |a2| env2 + ... for linear combinations."""

    terms: tuple  # of (|coeff|, envelope)

    def __call__(self, u):
        out = 0.0
        for c, env in self.terms:
            out = out + c * env(u)
        return out

    def lattice_sum(self, start, step, w0=1.0, w1=0.0, w2=0.0):
        return sum(c * env.lattice_sum(start, step, w0, w1, w2)
                   for c, env in self.terms)

    def halfline_moment(self, a, c0, c1):
        return sum(c * env.halfline_moment(a, c0, c1) for c, env in self.terms)


# ---------------------------------------------------------------------------
# the test function record
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class TestFunction:
    """A Schwartz function with explicit evaluators for both transform sides.

    All evaluators are pure, vectorized over numpy arrays, and safe to call
    concurrently; instances are immutable after construction.

    Attributes
    ----------
    kind : str
        One of ``gaussian``, ``gaussian_modulated``, ``fourier_bump`` (or
        ``combination`` for harness-built linear combinations).
    complex_valued : bool
        Whether phi takes complex values.
    params : dict
        Defining parameters, for reports and CLI round-trips.
    hat_support : tuple or None
        Exact support interval of phi_hat when compact, else None.
    hat_center : float
        Center of mass of phi_hat's decay (b for modulated gaussians).
    time_env, hat_env
        Certified decay envelopes: |phi(x)| <= time_env(|x|) and
        |phi_hat(xi)| <= hat_env(|xi - hat_center|).
    """

    __test__ = False  # domain type, not a pytest collection target

    kind: str
    complex_valued: bool
    params: dict
    phi: Callable
    phi_hat: Callable
    phi_hat_d1: Callable
    phi_hat_d2: Callable
    time_env: object
    hat_env: object
    hat_center: float = 0.0
    hat_support: tuple | None = None
    _radius_fn: Callable = None
    _hat_radius_fn: Callable = None
    _hat_abs_fn: Callable = None

    def hat_abs_bound(self, order: int, u) -> float:
        """Upper bound for |phi_hat^{(order)}| at distance u from hat_center.

        order is 0, 1 or 2; used to certify truncations of k-sums built on
        phi_hat and its first two derivatives.
        """
        if order not in (0, 1, 2):
            raise ValidationError(f"hat_abs_bound supports orders 0..2, got {order}")
        return self._hat_abs_fn(order, u)

    def radius(self, tol: float) -> float:
        """Smallest reported r with |phi(x)| <= tol for all |x| >= r."""
        if not (0.0 < tol < 1.0):
            raise ValidationError(f"radius tolerance must lie in (0,1), got {tol}")
        return self._radius_fn(tol)

    def hat_radius(self, tol: float) -> float:
        """Radius around hat_center past which |phi_hat| <= tol."""
        if not (0.0 < tol < 1.0):
            raise ValidationError(f"hat_radius tolerance must lie in (0,1), got {tol}")
        return self._hat_radius_fn(tol)

    def hat_support_interval(self, tol: float) -> tuple:
        """Interval outside which |phi_hat| <= tol (exact for bumps)."""
        if self.hat_support is not None:
            return self.hat_support
        r = self.hat_radius(tol)
        return (self.hat_center - r, self.hat_center + r)


# ---------------------------------------------------------------------------
# factories
# ---------------------------------------------------------------------------

def make_gaussian(s: float) -> TestFunction:
    """Gaussian pair phi(x) = exp(-x^2/(2 s^2)), phi_hat = s*sqrt(2pi)*exp(-s^2 xi^2/2)."""
    if not (s > 0.0 and math.isfinite(s)):
        raise ValidationError(f"gaussian width s must be positive, got {s}")
    amp = s * math.sqrt(TWO_PI)

    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.square(x) / (2.0 * s * s))

    def phi_hat(xi):
        xi = np.asarray(xi, dtype=float)
        return amp * np.exp(-s * s * np.square(xi) / 2.0)

    def phi_hat_d1(xi):
        xi = np.asarray(xi, dtype=float)
        return -s * s * xi * phi_hat(xi)

    def phi_hat_d2(xi):
        xi = np.asarray(xi, dtype=float)
        return (s**4 * np.square(xi) - s * s) * phi_hat(xi)

    def radius(tol):
        return s * math.sqrt(2.0 * math.log(1.0 / tol))

    def hat_radius(tol):
        if tol >= amp:
            return 0.0
        return math.sqrt(2.0 * math.log(amp / tol)) / s

    hat_env = GaussianEnvelope(amp, 1.0 / s)

    def hat_abs(order, u):
        e = hat_env(u)
        if order == 0:
            return e
        if order == 1:
            return s * s * np.abs(u) * e
        return (s**4 * np.square(u) + s * s) * e

    return TestFunction(
        kind="gaussian", complex_valued=False, params={"s": s},
        phi=phi, phi_hat=phi_hat, phi_hat_d1=phi_hat_d1, phi_hat_d2=phi_hat_d2,
        time_env=GaussianEnvelope(1.0, s), hat_env=hat_env,
        _radius_fn=radius, _hat_radius_fn=hat_radius, _hat_abs_fn=hat_abs,
    )


def make_gaussian_modulated(s: float, b: float) -> TestFunction:
    """Modulated gaussian exp(-x^2/(2 s^2)) exp(i b x); phi_hat recentred at b."""
    if not (s > 0.0 and math.isfinite(s)):
        raise ValidationError(f"gaussian width s must be positive, got {s}")
    if not math.isfinite(b):
        raise ValidationError(f"modulation frequency must be finite, got {b}")
    amp = s * math.sqrt(TWO_PI)

    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.square(x) / (2.0 * s * s)) * np.exp(1j * b * x)

    def phi_hat(xi):
        u = np.asarray(xi, dtype=float) - b
        return amp * np.exp(-s * s * np.square(u) / 2.0)

    def phi_hat_d1(xi):
        u = np.asarray(xi, dtype=float) - b
        return -s * s * u * phi_hat(xi)

    def phi_hat_d2(xi):
        u = np.asarray(xi, dtype=float) - b
        return (s**4 * np.square(u) - s * s) * phi_hat(xi)

    def radius(tol):
        return s * math.sqrt(2.0 * math.log(1.0 / tol))

    def hat_radius(tol):
        if tol >= amp:
            return 0.0
        return math.sqrt(2.0 * math.log(amp / tol)) / s

    hat_env = GaussianEnvelope(amp, 1.0 / s)

    def hat_abs(order, u):
        e = hat_env(u)
        if order == 0:
            return e
        if order == 1:
            return s * s * np.abs(u) * e
        return (s**4 * np.square(u) + s * s) * e

    return TestFunction(
        kind="gaussian_modulated", complex_valued=(b != 0.0),
        params={"s": s, "b": b},
        phi=phi, phi_hat=phi_hat, phi_hat_d1=phi_hat_d1, phi_hat_d2=phi_hat_d2,
        time_env=GaussianEnvelope(1.0, s), hat_env=hat_env,
        hat_center=b,
        _radius_fn=radius, _hat_radius_fn=hat_radius, _hat_abs_fn=hat_abs,
    )


def _bump_psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


def make_fourier_bump(tau0: float, w: float) -> TestFunction:
    """Bump on the transform side: phi_hat(xi) = exp(-1/(1-t^2)), t = (xi-tau0)/w.

    phi_hat vanishes identically outside [tau0-w, tau0+w], so only the
    flow periods inside that interval can contribute to any k-sum built
    on it.  phi itself is evaluated by a fixed ``_BUMP_GL_NODES``-point
    Gauss-Legendre rule on the support (the integrand is smooth there);
    phi is complex-valued whenever tau0 != 0.
    """
    if not (w > 0.0 and math.isfinite(w)):
        raise ValidationError(f"bump half-width w must be positive, got {w}")
    if not math.isfinite(tau0):
        raise ValidationError(f"bump center must be finite, got {tau0}")

    nodes, weights = leggauss(_BUMP_GL_NODES)
    psi_nodes = _bump_psi(nodes)
    xi_nodes = tau0 + w * nodes
    # (w/2pi) sum_m weights_m psi(t_m) exp(i xi_m x)
    coeff = (w / TWO_PI) * weights * psi_nodes
    real_valued = (tau0 == 0.0)

    def phi(x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.zeros(flat.shape, dtype=(float if real_valued else complex))
        # past the rule's resolution the true |phi| is below 1e-16; report 0
        # there rather than quadrature aliasing noise
        ok = np.flatnonzero(np.abs(flat) * w <= _BUMP_U_CAP)
        step = 2048
        for i in range(0, ok.size, step):
            sel = ok[i:i + step]
            blk = flat[sel, None]
            if real_valued:
                out[sel] = (coeff * np.cos(xi_nodes * blk)).sum(axis=1)
            else:
                out[sel] = (coeff * np.exp(1j * xi_nodes * blk)).sum(axis=1)
        return out.reshape(np.shape(x)) if np.ndim(x) else out[0]

    def phi_hat(xi):
        xi = np.asarray(xi, dtype=float)
        return _bump_psi((xi - tau0) / w)

    def phi_hat_d1(xi):
        xi = np.asarray(xi, dtype=float)
        t = (xi - tau0) / w
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        ti = t[inside]
        om = 1.0 - ti * ti
        out[inside] = np.exp(-1.0 / om) * (-2.0 * ti) / (w * om * om)
        return out

    def phi_hat_d2(xi):
        xi = np.asarray(xi, dtype=float)
        t = (xi - tau0) / w
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        ti = t[inside]
        om = 1.0 - ti * ti
        out[inside] = np.exp(-1.0 / om) * 2.0 * (3.0 * ti**4 - 1.0) / (w * w * om**4)
        return out

    env = PowerEnvelope(
        cap=w * _BUMP_D0 / TWO_PI,
        c2=_BUMP_D2 / (TWO_PI * w),
        c4=_BUMP_D4 / (TWO_PI * w**3),
    )

    def _probe_max(u):
        # dense probe of [u, min(2u, cap)], clipped where evaluation is exact
        top = min(2.0 * u, _BUMP_U_CAP)
        n_probe = int(min(4096, max(64, 2.0 * (top - u) + 64)))
        xs = np.linspace(u, top, n_probe) / w
        return float(np.max(np.abs(phi(xs))))

    def radius(tol):
        # dyadic search on u = w*|x|; |phi| depends on x only through u.
        u = 1.0
        while u < _BUMP_U_CAP:
            if _probe_max(u) <= tol:
                break
            u *= 2.0
        else:
            return _BUMP_U_CAP / w  # capped; envelope still certifies decay
        lo, hi = u / 2.0, u
        for _ in range(10):
            mid = 0.5 * (lo + hi)
            if _probe_max(mid) <= tol:
                hi = mid
            else:
                lo = mid
        return hi / w

    def hat_radius(tol):
        # exact compact support around tau0, independent of the tolerance
        return w

    def hat_abs(order, u):
        # crude but safe sup-norm caps inside the support, exact zero outside
        caps = (0.3679, 1.0 / w, 12.0 / (w * w))
        u = np.asarray(u, dtype=float)
        return np.where(u > w, 0.0, caps[order])

    return TestFunction(
        kind="fourier_bump", complex_valued=(tau0 != 0.0),
        params={"tau0": tau0, "w": w},
        phi=phi, phi_hat=phi_hat, phi_hat_d1=phi_hat_d1, phi_hat_d2=phi_hat_d2,
        time_env=env, hat_env=env,  # hat side never consulted past the support
        hat_center=tau0, hat_support=(tau0 - w, tau0 + w),
        _radius_fn=radius, _hat_radius_fn=hat_radius, _hat_abs_fn=hat_abs,
    )


def linear_combination(coeffs, fns) -> TestFunction:
    """Formal linear combination sum_i a_i f_i as a TestFunction.

    Evaluators combine exactly (same floating-point expression the
    linearity invariants demand); envelopes combine by |a_i|-weighted sums.
    Intended for verification harnesses.
    """
    coeffs = [complex(c) for c in coeffs]
    fns = list(fns)
    if len(coeffs) != len(fns) or not fns:
        raise ValidationError("linear_combination needs matching nonempty lists")
    is_complex = (any(f.complex_valued for f in fns)
                  or any(c.imag != 0.0 for c in coeffs))
    if not is_complex:
        coeffs = [c.real for c in coeffs]  # keep real evaluators exactly real

    def lift(attr):
        def ev(x):
            out = coeffs[0] * getattr(fns[0], attr)(x)
            for c, f in zip(coeffs[1:], fns[1:]):
                out = out + c * getattr(f, attr)(x)
            return out
        return ev

    # zero-coefficient members contribute exactly nothing to the decay data
    active = [(c, f) for c, f in zip(coeffs, fns) if abs(c) > 0.0]
    time_env = SumEnvelope(tuple((abs(c), f.time_env) for c, f in active))
    hat_env = SumEnvelope(tuple((abs(c), f.hat_env) for c, f in active))

    def radius(tol):
        if not active:
            return 1.0
        n = len(active)
        return max(f.radius(min(0.5, tol / (n * abs(c)))) for c, f in active)

    def hat_radius(tol):
        if not active:
            return 1.0
        n = len(active)
        return max(abs(f.hat_center) + f.hat_radius(min(0.5, tol / (n * abs(c))))
                   for c, f in active)

    supports = [f.hat_support for f in fns]
    if all(s is not None for s in supports):
        support = (min(s[0] for s in supports), max(s[1] for s in supports))
    else:
        support = None

    def hat_abs(order, u):
        u = np.asarray(u, dtype=float)
        out = 0.0
        for c, f in zip(coeffs, fns):
            # shrinking the distance by |center| keeps each bound valid
            out = out + abs(c) * f.hat_abs_bound(
                order, np.maximum(u - abs(f.hat_center), 0.0))
        return out

    return TestFunction(
        kind="combination",
        complex_valued=is_complex,
        params={"n_terms": len(fns)},
        phi=lift("phi"), phi_hat=lift("phi_hat"),
        phi_hat_d1=lift("phi_hat_d1"), phi_hat_d2=lift("phi_hat_d2"),
        time_env=time_env, hat_env=hat_env,
        hat_center=0.0, hat_support=support,
        _radius_fn=radius, _hat_radius_fn=hat_radius, _hat_abs_fn=hat_abs,
    )


def from_config(spec: dict) -> TestFunction:
    """Build a TestFunction from its CLI/JSON description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("test_function spec must be an object with a 'kind'")
    kind = spec["kind"]
    keys = set(spec) - {"kind"}
    if kind == "gaussian":
        if keys != {"s"}:
            raise ValidationError(f"gaussian takes exactly 's', got {sorted(keys)}")
        return make_gaussian(float(spec["s"]))
    if kind == "gaussian_modulated":
        if keys != {"s", "b"}:
            raise ValidationError(f"gaussian_modulated takes 's' and 'b', got {sorted(keys)}")
        return make_gaussian_modulated(float(spec["s"]), float(spec["b"]))
    if kind == "fourier_bump":
        if keys != {"tau0", "w"}:
            raise ValidationError(f"fourier_bump takes 'tau0' and 'w', got {sorted(keys)}")
        return make_fourier_bump(float(spec["tau0"]), float(spec["w"]))
    raise ValidationError(f"unknown test function kind {kind!r}")


# ---------------------------------------------------------------------------
# verification: transform-pair consistency and Poisson summation
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class PairValidation:
    """Result of checking phi_hat against direct quadrature of phi."""

    grid: tuple
    deviations: tuple
    max_abs_dev: float
    truncation_bound: float
    refinement_delta: float
    tol: float
    passed: bool


def _fourier_quadrature(f: TestFunction, xi_grid, rel_floor: float):
    """Quadrature of integral phi(x) exp(-i xi x) dx on [-R, R].

    Composite 16-point Gauss-Legendre with panels short enough to resolve
    the fastest oscillation; returns (values, truncation bound, refinement
    delta), the last from doubling the panel count.
    """
    xi_grid = np.asarray(xi_grid, dtype=float)
    R = f.radius(rel_floor)
    xi_max = float(np.max(np.abs(xi_grid))) if xi_grid.size else 0.0
    panel = min(1.0, math.pi / (2.0 * (xi_max + 1.0)))
    n_panels = max(8, int(math.ceil(2.0 * R / panel)))

    def run(n_panels):
        edges = np.linspace(-R, R, n_panels + 1)
        nodes, weights = leggauss(16)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        ws = (half[:, None] * weights[None, :]).ravel()
        vals = f.phi(xs) * ws
        out = np.empty(xi_grid.shape, dtype=complex)
        for i, xi in enumerate(xi_grid.ravel()):
            out.ravel()[i] = np.sum(vals * np.exp(-1j * xi * xs))
        return out

    coarse = run(n_panels)
    fine = run(2 * n_panels)
    trunc = 2.0 * f.time_env.halfline_moment(R, 1.0, 0.0)
    return fine, trunc, float(np.max(np.abs(fine - coarse)))


def validate_pair(f: TestFunction, grid, tol: float) -> PairValidation:
    """Compare phi_hat against numeric quadrature of phi on a frequency grid.

    Raises
    ------
    QuadratureError
        If the quadrature refinement step does not converge below tol/10.
    """
    grid = list(grid)
    if not grid:
        raise ValidationError("validate_pair needs a nonempty grid")
    xi = np.asarray(grid, dtype=float)
    quad, trunc, delta = _fourier_quadrature(f, xi, rel_floor=min(tol * 1e-3, 1e-10))
    if delta > tol / 10.0:
        raise QuadratureError(
            f"fourier quadrature did not converge: refinement moved the result "
            f"by {delta:.3e} (> {tol / 10.0:.3e})"
        )
    dev = np.abs(np.asarray(f.phi_hat(xi), dtype=complex) - quad)
    max_dev = float(np.max(dev))
    return PairValidation(
        grid=tuple(grid), deviations=tuple(float(d) for d in dev),
        max_abs_dev=max_dev, truncation_bound=trunc, refinement_delta=delta,
        tol=tol, passed=bool(max_dev <= tol),
    )


@dataclasses.dataclass(frozen=True)
class PoissonReport:
    """Both sides of the summation identity with certified truncation tails."""

    lhs: complex
    rhs: complex
    lhs_tail: float
    rhs_tail: float

    @property
    def diff(self) -> float:
        return abs(self.lhs - self.rhs)


def poisson_check(f: TestFunction, P: float, t: float,
                  term_tol: float = 1e-22) -> PoissonReport:
    """Evaluate sum_n phi(n P + t) against sum_k (1/P) phi_hat(2pi k/P) e^{2pi i k t/P}.

    Both sides are truncated where the respective envelope falls below
    ``term_tol`` and the omitted lattice tails are bounded by the
    envelopes' closed forms.
    """
    if P <= 0:
        raise ValidationError("Poisson period P must be positive")
    # left side: lattice n*P + t
    R = f.radius(term_tol) if term_tol < 1.0 else 1.0
    n_lo = int(math.floor((-R - t) / P)) - 1
    n_hi = int(math.ceil((R - t) / P)) + 1
    xs = t + P * np.arange(n_lo, n_hi + 1)
    vals = np.asarray(f.phi(xs), dtype=complex)
    lhs = complex(math.fsum(vals.real), math.fsum(vals.imag))
    lhs_tail = (f.time_env.lattice_sum(abs(xs[0]) + P, P)
                + f.time_env.lattice_sum(abs(xs[-1]) + P, P))

    # right side: frequencies 2 pi k / P
    step = TWO_PI / P
    hr = f.hat_radius(term_tol)
    k_hi = int(math.ceil((f.hat_center + hr) / step)) + 1
    k_lo = int(math.floor((f.hat_center - hr) / step)) - 1
    ks = np.arange(k_lo, k_hi + 1)
    terms = (np.asarray(f.phi_hat(step * ks), dtype=complex)
             * np.exp(2j * math.pi * ks * t / P) / P)
    rhs = complex(math.fsum(terms.real), math.fsum(terms.imag))
    if f.hat_support is not None:
        rhs_tail = 0.0
    else:
        d_lo = abs(step * (k_lo - 1) - f.hat_center)
        d_hi = abs(step * (k_hi + 1) - f.hat_center)
        rhs_tail = (f.hat_env.lattice_sum(d_hi, step)
                    + f.hat_env.lattice_sum(d_lo, step)) / P
    return PoissonReport(lhs=lhs, rhs=rhs, lhs_tail=lhs_tail, rhs_tail=rhs_tail)
