"""Gaussian transforms of monotone mass functions and the high-moment
machinery that separates homogeneous V(r) = kappa r^n from everything else."""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError
from .geom.quadrature import gauss_legendre

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class MomentFunction:
    """Piecewise-linear nondecreasing V with V(0) = 0.

    A repeated breakpoint radius encodes a jump (a point mass of dV). Past
    the last breakpoint V is held constant (``tail="constant"``) or continued
    as V_last (r / r_last)^n (``tail="power"``).
    """

    r: np.ndarray
    V: np.ndarray
    n: int
    c3: float
    tail: str = "constant"

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        V = np.asarray(self.V, dtype=float)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "V", V)
        if r.ndim != 1 or r.shape != V.shape or len(r) < 2:
            raise DomainError("breakpoints and values must be 1-D arrays of equal length >= 2")
        if r[0] != 0.0 or V[0] != 0.0:
            raise DomainError("V must start at r=0 with V(0)=0")
        if np.any(np.diff(r) < 0):
            raise DomainError("breakpoints must be ascending (repeat a radius for a jump)")
        if np.any(np.diff(V) < 0):
            raise DomainError("V must be nondecreasing")
        if self.n < 1:
            raise DomainError("dimension n must be >= 1")
        if self.tail not in ("constant", "power"):
            raise DomainError(f"unknown tail rule {self.tail!r}")
        bound = self.c3 * r ** self.n
        if np.any(V > bound * (1 + 1e-12) + 1e-300):
            i = int(np.argmax(V - bound))
            raise DomainError(f"growth bound V <= c3 r^n fails at r={r[i]:.6g} "
                              f"(V={V[i]:.6g}, c3 r^n={bound[i]:.6g})")

    @classmethod
    def from_samples(cls, r, V, n, c3=None, tail="constant"):
        r = np.asarray(r, dtype=float)
        V = np.asarray(V, dtype=float)
        if c3 is None:
            pos = r > 0
            c3 = float(np.max(V[pos] / r[pos] ** n)) if np.any(pos) else 1.0
        return cls(r, V, int(n), float(c3), tail)

    @classmethod
    def power(cls, n, kappa=1.0, r_min=1e-6, r_max=250.0, ratio=1 + 1e-4):
        """kappa r^n interpolated on a geometric grid with a power tail."""
        count = int(math.ceil(math.log(r_max / r_min) / math.log(ratio))) + 1
        r = np.concatenate([[0.0], np.geomspace(r_min, r_max, count)])
        return cls(r, kappa * r ** n, int(n), float(kappa), "power")

    @classmethod
    def from_function(cls, func, n, r_max=250.0, count=20001, c3=None, tail="constant",
                      extra=()):
        r = np.union1d(np.linspace(0.0, r_max, count), np.asarray(extra, dtype=float))
        return cls.from_samples(r, func(r), n, c3, tail)

    @property
    def has_jumps(self):
        return bool(np.any(np.diff(self.r) == 0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        # right-continuous evaluation at jumps
        out = np.interp(x, self.r, self.V)
        beyond = x > self.r[-1]
        if np.any(beyond):
            if self.tail == "power":
                out = np.where(beyond, self.V[-1] * (x / self.r[-1]) ** self.n, out)
            else:
                out = np.where(beyond, self.V[-1], out)
        return out

    def scaled(self, a):
        return MomentFunction(self.r, a * self.V, self.n, a * self.c3, self.tail)

    def __add__(self, other):
        if other.n != self.n:
            raise DomainError("cannot add mass functions of different dimension")
        if self.has_jumps or other.has_jumps:
            raise DomainError("sum of mass functions with jumps is not supported")
        r = np.union1d(self.r, other.r)
        tail = "power" if "power" in (self.tail, other.tail) else "constant"
        return MomentFunction(r, self(r) + other(r), self.n, self.c3 + other.c3, tail)


def homogeneous_transform(n):
    """Gaussian transform of V = r^n: Gamma(n/2 + 1) / pi^(n/2)."""
    return math.gamma(n / 2 + 1) / math.pi ** (n / 2)


def _gauss_segment(a, b, t):
    """int_a^b exp(-r^2/4t) dr, accurate in the far tail."""
    s = 2 * math.sqrt(t)
    xa, xb = a / s, b / s
    far = xa > 0.5
    diff = np.where(far, special.erfc(xa) - special.erfc(xb), special.erf(xb) - special.erf(xa))
    return 0.5 * SQRT_PI * s * diff


def gaussian_transform(V, t):
    """(4 pi t)^(-n/2) int_0^inf exp(-r^2/4t) dV(r) for a MomentFunction."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    r, v = V.r, V.V
    dr, dv = np.diff(r), np.diff(v)
    atom = dr == 0
    parts = []
    if np.any(atom):
        parts.append(dv[atom] * np.exp(-r[1:][atom] ** 2 / (4 * t)))
    lin = ~atom
    slope = dv[lin] / dr[lin]
    parts.append(slope * _gauss_segment(r[:-1][lin], r[1:][lin], t))
    total = math.fsum(np.concatenate(parts).tolist())
    if V.tail == "power" and v[-1] > 0:
        # d(c r^n) past r_L: c n int r^(n-1) e^{-r^2/4t} = c/2 n (4t)^(n/2) Gamma(n/2, r_L^2/4t)
        c = v[-1] / r[-1] ** V.n
        a = r[-1] ** 2 / (4 * t)
        n = V.n
        total += c * 0.5 * n * (4 * t) ** (n / 2) * special.gamma(n / 2) * special.gammaincc(n / 2, a)
    return total * (4 * math.pi * t) ** (-V.n / 2)


def default_t_grid():
    return np.geomspace(1e-2, 1e2, 25)


@dataclass(frozen=True)
class ConstancyResult:
    homogeneous: bool
    kappa1: float
    spread: float
    t_grid: np.ndarray
    values: np.ndarray


def constancy_test(V, t_grid=None, tol=1e-6):
    """Is the Gaussian transform of V constant over ``t_grid``?

    ``spread`` is (max - min) / mean of the transform values; ``kappa1`` is
    the transform at the largest t divided by that of r^n.
    """
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or t_grid.max() / t_grid.min() < 100 * (1 - 1e-12):
        raise DomainError("t-grid must be positive and span at least two decades")
    vals = np.array([gaussian_transform(V, t) for t in t_grid])
    mean = float(np.mean(vals))
    spread = float((vals.max() - vals.min()) / abs(mean)) if mean else float(vals.max() - vals.min())
    kappa1 = float(vals[np.argmax(t_grid)] / homogeneous_transform(V.n))
    return ConstancyResult(spread < tol, kappa1, spread, t_grid, vals)


# -- Laplace asymptotics -----------------------------------------------------

def _laplace_integral(p, a, exponent):
    """int_{-a}^{a} exp(p * exponent(t / sqrt(p))) dt with the peak at 0."""
    sp = math.sqrt(p)
    f = lambda x: math.exp(p * exponent(x / sp))
    left, _ = integrate.quad(f, -a, 0.0, limit=200, epsabs=0, epsrel=1e-13)
    right, _ = integrate.quad(f, 0.0, a, limit=200, epsabs=0, epsrel=1e-13)
    return left + right


def _log_shape(s):
    # log(1+s) - s - s^2/2, the exponent of (1+s)^p e^{-p(1+s)^2/2} e^{p/2} per unit p
    return math.log1p(s) - s - 0.5 * s * s


def laplace_asymptotic_I(p, r0=2.0, delta=0.5):
    """I(p) = sqrt(p) e^{p/2} r0^{-(p+1)} int_{r0-delta}^{r0+delta} r^p e^{-r^2/t_p} dr.

    With t_p = 2 r0^2 / p and s = r/r0 - 1 the integrand becomes
    exp(p (log(1+s) - s - s^2/2)), which never overflows.
    """
    if not (p >= 2 and math.isfinite(p)):
        raise DomainError(f"p must be finite and >= 2, got {p}")
    if not 0 < delta < r0 / 2:
        raise DomainError("need 0 < delta < r0/2")
    if p > 1e15:
        raise DomainError(f"p={p:g} is beyond the range where the quadrature is resolved")
    a = delta / r0 * math.sqrt(p)
    # beyond |t| = 40 the integrand is below e^{-1000} for every admissible p
    return _laplace_integral(p, min(a, 40.0), _log_shape)


def laplace_sandwich(p, r0=2.0, delta=0.5):
    """Lower and upper integrals from min(0, 8s^3/3) <= log(1+s) - s + s^2/2 <= s^3/3."""
    a = min(delta / r0 * math.sqrt(p), 40.0)
    lower = _laplace_integral(p, a, lambda s: -s * s + min(0.0, 8.0 * s ** 3 / 3.0))
    upper = _laplace_integral(p, a, lambda s: -s * s + s ** 3 / 3.0)
    return lower, upper


def laplace_scan(ps, r0=2.0, delta=0.5):
    """I(p) along ``ps`` with a flag telling whether |I - sqrt(pi)| decreases."""
    vals = [laplace_asymptotic_I(p, r0, delta) for p in ps]
    errs = [abs(v - SQRT_PI) for v in vals]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))
    return vals, monotone


def integrand_argmax(p, r0):
    """Numerical argmax of r^p e^{-r^2/t_p} on (0, inf), t_p = 2 r0^2 / p."""
    tp = 2 * r0 * r0 / p
    out = optimize.minimize_scalar(lambda r: -(p * math.log(r) - r * r / tp),
                          bracket=(0.5 * r0, r0 * 1.01, 2 * r0), tol=1e-14)
    return float(out.x)


# -- high moments --------------------------------------------------------------

@dataclass(frozen=True)
class MomentSeparation:
    k: int
    t: float
    r_peak: float
    scaled: float
    log_abs_raw: float

    @property
    def sign(self):
        return int(np.sign(self.scaled))


def moment_separation(V, ks, t=None, kappa1=None, r_peak=None):
    """int_0^inf (V - kappa1 r^n) r^{2k+1} e^{-r^2/t} dr for each k.

    Values are reported scaled by sqrt(p) e^{p/2} / r_peak^{p+1} with
    p = 2k+1 and r_peak = sqrt(p t / 2) the peak of the weight, which keeps
    them O(1); ``log_abs_raw`` recovers the unscaled magnitude. When ``t``
    is omitted it is chosen per k so the weight peaks at ``r_peak``.
    """
    if kappa1 is None:
        kappa1 = constancy_test(V).kappa1
    out = []
    for k in ks:
        k = int(k)
        if k < 0:
            raise DomainError("moment orders must be nonnegative")
        p = 2 * k + 1
        if t is None:
            if r_peak is None:
                raise DomainError("give either t or r_peak")
            tk = 2 * r_peak ** 2 / p
        else:
            tk = float(t)
        r0 = math.sqrt(p * tk / 2)
        width = r0 / math.sqrt(p)
        lo, hi = max(0.0, r0 - 40 * width), r0 + 40 * width
        inner = V.r[(V.r > lo) & (V.r < hi)]
        edges = np.union1d(np.linspace(lo, hi, 321), inner)
        x, w = gauss_legendre(-1.0, 1.0, 8)
        a, b = edges[:-1], edges[1:]
        keep = b > a
        a, b = a[keep], b[keep]
        half = 0.5 * (b - a)
        nodes = (0.5 * (a + b))[:, None] + half[:, None] * x
        weights = half[:, None] * w
        nodes, weights = nodes.ravel(), weights.ravel()
        pos = nodes > 0
        nodes, weights = nodes[pos], weights[pos]
        log_w = p * np.log(nodes / r0) - nodes ** 2 / tk + p / 2 + 0.5 * math.log(p) - math.log(r0)
        f = (V(nodes) - kappa1 * nodes ** V.n) * np.exp(log_w)
        scaled = math.fsum((f * weights).tolist())
        log_pref = 0.5 * math.log(p) + p / 2 - (p + 1) * math.log(r0)
        log_raw = math.log(abs(scaled)) - log_pref if scaled else -math.inf
        out.append(MomentSeparation(k, tk, r0, scaled, log_raw))
    return out


def bump_fixture(n=2, r0=2.0, height=0.1, width=0.5, sign=1, r_max=250.0):
    """r^n plus (sign=+1) or minus (sign=-1) a hat of the given height centred at r0."""
    def func(r):
        hat = height * np.clip(1 - np.abs(r - r0) / width, 0, None)
        return r ** n + sign * hat
    extra = [r0 - width, r0, r0 + width]
    return MomentFunction.from_function(func, n, r_max=r_max, count=50001, tail="power",
                                        extra=extra, c3=1.0 + height / (r0 - width) ** n)


def kink_fixture(n=2, r_max=250.0):
    """r^2 + min(r, 1) r, homogeneous of degree 2 away from [0, 1] only."""
    return MomentFunction.from_function(lambda r: r ** n + np.minimum(r, 1.0) * r, n,
                                        r_max=r_max, count=50001, tail="power", extra=[1.0],
                                        c3=2.0)


def read_moment_function(path):
    """Two-column ``r V`` table under a ``# n=... c3=...`` header."""
    header, rows = {}, []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        s = raw.strip()
        if not s:
            continue
        if s.startswith("#"):
            for item in s[1:].split():
                if "=" in item:
                    key, val = item.split("=", 1)
                    header[key] = val
            continue
        try:
            r, v = (float(x) for x in s.split())
        except ValueError:
            raise DomainError(f"{path}:{lineno}: expected two numbers") from None
        rows.append((r, v))
    if "n" not in header or "c3" not in header:
        raise DomainError(f"{path}: header must declare n and c3")
    data = np.array(rows)
    return MomentFunction(data[:, 0], data[:, 1], int(header["n"]), float(header["c3"]),
                          header.get("tail", "constant"))


def write_moment_function(path, V):
    lines = [f"# n={V.n} c3={V.c3!r} tail={V.tail}"]
    lines += [f"{r!r} {v!r}" for r, v in zip(V.r.tolist(), V.V.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")
