"""Non-private black-box bandit learners used inside the private reductions.

Contains:
  * ball/box decision sets with Euclidean projection onto a shrunken copy,
  * a one-point sphere-sampling gradient-descent learner (estimator
    (d/rho) * loss * u for a uniform unit vector u),
  * a two-query gradient-descent learner (estimator (d/2 rho) * (f1 - f2) * u),
  * Tsallis-INF for multi-armed bandits (1/2-Tsallis regularizer,
    importance-weighted loss estimates),
  * lil'UCB for fixed-confidence best-arm identification.

Learner state is owned by a single actor; methods mutate the instance.  Any
number of independent learners can run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation, NumericalError


# ---------------------------------------------------------------------------
# decision sets


@dataclass(frozen=True)
class DecisionSet:
    """A ball or axis-aligned box, with its inner/outer radii about the origin.

    inner_radius r and outer_radius R satisfy  r*B subset X subset R*B  where
    B is the unit ball; both are needed by the query-feasibility margins.
    """

    kind: str
    center: np.ndarray | None = None
    radius: float = 0.0
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    @staticmethod
    def ball(radius: float, center=None, dim: int | None = None) -> "DecisionSet":
        if radius <= 0:
            raise ConfigurationError("ball radius must be positive")
        if center is None:
            if dim is None:
                raise ConfigurationError("ball needs a center or an explicit dim")
            center = np.zeros(dim)
        center = np.asarray(center, dtype=float)
        if np.linalg.norm(center) >= radius:
            raise ConfigurationError("ball must contain the origin strictly")
        return DecisionSet(kind="ball", center=center, radius=float(radius))

    @staticmethod
    def box(lower, upper) -> "DecisionSet":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ConfigurationError("box bounds must be 1-d arrays of equal shape")
        if not np.all(lower < 0) or not np.all(upper > 0):
            raise ConfigurationError("box must contain the origin strictly")
        return DecisionSet(kind="box", lower=lower, upper=upper)

    @property
    def dim(self) -> int:
        return self.center.size if self.kind == "ball" else self.lower.size

    @property
    def inner_radius(self) -> float:
        if self.kind == "ball":
            return self.radius - float(np.linalg.norm(self.center))
        return float(min(self.upper.min(), (-self.lower).min()))

    @property
    def outer_radius(self) -> float:
        if self.kind == "ball":
            return self.radius + float(np.linalg.norm(self.center))
        return float(np.sqrt(np.sum(np.maximum(self.upper, -self.lower) ** 2)))

    def contains(self, x, shrink: float = 0.0, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        s = 1.0 - shrink
        if self.kind == "ball":
            return np.linalg.norm(x - s * self.center) <= s * self.radius + tol
        return bool(np.all(x >= s * self.lower - tol) and np.all(x <= s * self.upper + tol))


def project(point, dset: DecisionSet, shrink: float = 0.0) -> np.ndarray:
    """Euclidean projection of point onto (1 - shrink) * dset.

    The shrunken set is the original scaled about the origin.  Idempotent.
    """
    if not (0 <= shrink < 1):
        raise ConfigurationError(f"shrink must be in [0, 1), got {shrink}")
    p = np.asarray(point, dtype=float)
    s = 1.0 - shrink
    if dset.kind == "ball":
        c = s * dset.center
        r = s * dset.radius
        diff = p - c
        norm = np.linalg.norm(diff)
        if norm <= r:
            return p.copy()
        return c + diff * (r / norm)
    return np.clip(p, s * dset.lower, s * dset.upper)


def _uniform_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        u = rng.standard_normal(d)
        norm = np.linalg.norm(u)
        if norm > 1e-12:
            return u / norm


# ---------------------------------------------------------------------------
# one-point sphere-sampling learner


class FkmBandit:
    """Gradient descent with the one-point estimator (d/rho) * loss * u.

    Per round: the center moves against the previous round's estimate, then a
    fresh uniform unit direction u is drawn and the query y + rho * u is
    played.  The center lives in the shrunken set (1 - xi) * X, which keeps
    every query inside X as long as rho <= xi * inner_radius.
    """

    def __init__(self, dset: DecisionSet, eta: float, rho: float, xi: float,
                 rng: np.random.Generator):
        if rho <= 0 or eta <= 0:
            raise ConfigurationError("eta and rho must be positive")
        if not (0 <= xi < 1):
            raise ConfigurationError(f"xi must be in [0, 1), got {xi}")
        if rho > xi * dset.inner_radius + 1e-12:
            raise ConfigurationError(
                f"infeasible exploration radius: rho={rho} exceeds "
                f"xi * r = {xi * dset.inner_radius}; queries could exit the set"
            )
        self.dset = dset
        self.d = dset.dim
        self.eta = float(eta)
        self.rho = float(rho)
        self.xi = float(xi)
        self.rng = rng
        self.y = np.zeros(self.d)
        self.last_u = np.zeros(self.d)
        self.t = 0

    @staticmethod
    def default_parameters(dset: DecisionSet, horizon: int, loss_bound: float):
        """Classical schedule: rho = r * T^(-1/4), xi = rho / r,
        eta = R / ((d * B / rho) * sqrt(T)).  loss_bound should be the
        effective bound of the fed-back values, noise included."""
        r = dset.inner_radius
        R = dset.outer_radius
        d = dset.dim
        rho = r * horizon ** -0.25
        xi = rho / r
        eta = R / ((d * loss_bound / rho) * math.sqrt(horizon))
        return eta, rho, xi

    def observe(self, feedback: float):
        grad = (self.d / self.rho) * float(feedback) * self.last_u
        self.y = project(self.y - self.eta * grad, self.dset, self.xi)

    def propose(self) -> np.ndarray:
        self.t += 1
        self.last_u = _uniform_unit_vector(self.d, self.rng)
        return self.y + self.rho * self.last_u

    def step(self, observed_loss: float) -> np.ndarray:
        """Consume the previous query's feedback, then emit the next query.

        Pass 0.0 on the first call (no pending feedback; the stored direction
        is zero so the update is a no-op).
        """
        self.observe(observed_loss)
        return self.propose()


# ---------------------------------------------------------------------------
# two-query learner


class TwoPointBandit:
    """Gradient descent fed by two symmetric queries per round.

    Queries are y + rho*u and y - rho*u; the update uses
    g = (d / 2 rho) * (value difference) * u and projects back onto
    (1 - xi) * X.  With mu > 0 the step size is 1/(mu * t), otherwise the
    fixed eta is used.
    """

    def __init__(self, dset: DecisionSet, eta: float, rho: float, xi: float,
                 rng: np.random.Generator, mu: float = 0.0):
        if rho <= 0:
            raise ConfigurationError("rho must be positive")
        if not (0 <= xi < 1):
            raise ConfigurationError(f"xi must be in [0, 1), got {xi}")
        if rho > xi * dset.inner_radius + 1e-12:
            raise ConfigurationError(
                f"infeasible exploration radius: rho={rho} exceeds "
                f"xi * r = {xi * dset.inner_radius}"
            )
        if mu < 0:
            raise ConfigurationError("mu must be nonnegative")
        if mu == 0.0 and eta <= 0:
            raise ConfigurationError("eta must be positive in the convex mode")
        self.dset = dset
        self.d = dset.dim
        self.eta = float(eta)
        self.rho = float(rho)
        self.xi = float(xi)
        self.mu = float(mu)
        self.rng = rng
        self.y = np.zeros(self.d)
        self.u = np.zeros(self.d)
        self.t = 0
        self._pending = False

    def queries(self) -> tuple[np.ndarray, np.ndarray]:
        """Draw a fresh unit direction and return (y + rho u, y - rho u)."""
        if self._pending:
            raise ContractViolation("queries() called twice without update()")
        self.t += 1
        self.u = _uniform_unit_vector(self.d, self.rng)
        step = self.rho * self.u
        self._pending = True
        return self.y + step, self.y - step

    def update(self, value_difference: float):
        """Descend along (d / 2 rho) * difference * u for the stored u."""
        if not self._pending:
            raise ContractViolation("update() called before queries()")
        self._pending = False
        eta_t = 1.0 / (self.mu * self.t) if self.mu > 0 else self.eta
        grad = (self.d / (2.0 * self.rho)) * float(value_difference) * self.u
        self.y = project(self.y - eta_t * grad, self.dset, self.xi)


# ---------------------------------------------------------------------------
# Tsallis-INF


def tsallis_weights(lhat: np.ndarray, eta: float, *, method: str = "newton",
                    tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Sampling weights w_i = 4 / (eta^2 (lhat_i - z)^2) with z chosen so the
    weights sum to one.

    h(z) = sum_i w_i(z) - 1 is increasing and convex on z < min(lhat), and
    z in (min - 2K/eta, min) brackets the root, so both bisection and the
    safeguarded Newton iteration converge.  Newton (warm-startable, few
    iterations) is the default; bisection is the reference method.
    """
    lhat = np.asarray(lhat, dtype=float)
    k = lhat.size
    if k == 1:
        return np.ones(1)
    lmin = lhat.min()
    inv_eta2 = 1.0 / (eta * eta)

    def residual(z):
        q = lhat - z
        return 4.0 * inv_eta2 * np.sum(1.0 / (q * q)) - 1.0

    if method == "bisection":
        lo = lmin - 2.0 * k / eta
        hi = lmin - 1e-15 * max(1.0, abs(lmin))
        z = 0.5 * (lo + hi)
        for _ in range(max_iter):
            h = residual(z)
            if abs(h) <= tol:
                break
            if h > 0:
                hi = z
            else:
                lo = z
            z = 0.5 * (lo + hi)
        else:
            h = residual(z)
            if abs(h) > 1e-9:
                raise NumericalError(
                    f"weight normalization did not converge: residual={h:.3e}, "
                    f"bracket=({lo}, {hi})"
                )
    elif method == "newton":
        z = _tsallis_newton(lhat, eta, lmin, inv_eta2, tol, max_iter)
    else:
        raise ConfigurationError(f"unknown root-find method {method!r}")

    q = lhat - z
    w = 4.0 * inv_eta2 / (q * q)
    total = w.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-9:
        raise NumericalError(f"weight normalization residual too large: {total - 1.0:.3e}")
    return w / total


def _tsallis_newton(lhat, eta, lmin, inv_eta2, tol, max_iter, z0=None):
    # Start left of the root (residual < 0 there); Newton overshoots once,
    # then descends monotonically.  Iterates are clamped below lmin where
    # the residual has its pole.  Scalar arithmetic: arm counts are small
    # enough that numpy per-op overhead dominates the vectorized version.
    values = lhat.tolist()
    z = z0 if z0 is not None and z0 < lmin else lmin - 2.0 * math.sqrt(len(values)) / eta
    scale = 4.0 * inv_eta2
    h = None
    for _ in range(max_iter):
        h = -1.0
        hp = 0.0
        for v in values:
            q = v - z
            w = scale / (q * q)
            h += w
            hp += 2.0 * w / q
        if abs(h) <= tol:
            return z
        z_new = z - h / hp
        if not (z_new < lmin):
            z_new = 0.5 * (z + lmin)
        z = z_new
    if h is None or abs(h) > 1e-9:
        raise NumericalError("Newton root-find for sampling weights did not converge")
    return z


class TsallisInf:
    """Tsallis-INF with the 1/2-Tsallis regularizer and importance weighting.

    Learning rate eta_t = 2 / sqrt(t).  Loss estimates are the plain
    importance-weighted ones, lhat_i += loss * 1{i = arm} / p(arm); the
    reduced-variance variant is not implemented, so stochastic-regime
    constants may differ from the best known ones.
    """

    def __init__(self, n_arms: int, rng: np.random.Generator):
        if n_arms < 1:
            raise ConfigurationError("need at least one arm")
        self.k = n_arms
        self.rng = rng
        self.lhat = np.zeros(n_arms)
        self.t = 1
        self._z = None  # warm start for the weight solve

    def eta(self) -> float:
        return 2.0 / math.sqrt(self.t)

    def weights(self) -> np.ndarray:
        if self.k == 1:
            return np.ones(1)
        eta = self.eta()
        lmin = self.lhat.min()
        inv_eta2 = 1.0 / (eta * eta)
        z = _tsallis_newton(self.lhat, eta, lmin, inv_eta2, 1e-12, 200, z0=self._z)
        self._z = z
        q = self.lhat - z
        w = 4.0 * inv_eta2 / (q * q)
        return w / w.sum()

    def sample(self) -> tuple[int, float]:
        """Draw an arm from the current weights; returns (arm, probability)."""
        w = self.weights()
        if self.k == 1:
            return 0, 1.0
        arm = int(np.searchsorted(np.cumsum(w), self.rng.random()))
        arm = min(arm, self.k - 1)
        return arm, float(w[arm])

    def update(self, arm: int, observed_loss: float, probability: float):
        if probability <= 0:
            raise ContractViolation(f"sampling probability must be > 0, got {probability}")
        self.lhat[arm] += float(observed_loss) / probability
        self.t += 1


# ---------------------------------------------------------------------------
# lil'UCB


@dataclass
class LilUcbParams:
    """Heuristic constants of the practical lil'UCB variant."""

    eps_lil: float = 0.01
    beta_lil: float = 0.5
    lam_lil: float = 9.0


class LilUcb:
    """Fixed-confidence best-arm identification via lil'UCB (reward framing).

    Confidence width for an arm pulled n times:
        (1 + beta)(1 + sqrt(eps)) * sqrt(2 * proxy * (1+eps) * ln(ln((1+eps) n)/gamma) / n)
    where proxy is the sub-Gaussian variance proxy of the rewards.  Where the
    log-log term is undefined (ln((1+eps) n) < gamma, which happens only at
    n = 1 for the usual constants) the width is treated as infinite, so such
    arms are re-pulled before any comparison; a zero floor would instead
    starve an arm that drew badly on its single bootstrap pull.  Stops once
    some arm's count reaches 1 + lam * (pulls of all other arms); the stopped
    flag never resets.
    """

    def __init__(self, n_arms: int, gamma: float, variance_proxy: float,
                 params: LilUcbParams | None = None):
        if n_arms < 1:
            raise ConfigurationError("need at least one arm")
        if not (0 < gamma < 1):
            raise ConfigurationError(f"gamma must be in (0, 1), got {gamma}")
        if variance_proxy <= 0:
            raise ConfigurationError("variance proxy must be positive")
        self.k = n_arms
        self.gamma = gamma
        self.proxy = variance_proxy
        self.params = params or LilUcbParams()
        self.counts = np.zeros(n_arms, dtype=np.int64)
        self.sums = np.zeros(n_arms)
        self.stopped = n_arms == 1
        self.best = 0 if n_arms == 1 else None

    def _width(self, n: np.ndarray) -> np.ndarray:
        p = self.params
        inner = np.log((1.0 + p.eps_lil) * n)
        with np.errstate(divide="ignore", invalid="ignore"):
            loglog = np.log(inner / self.gamma)
            width = (
                (1.0 + p.beta_lil)
                * (1.0 + math.sqrt(p.eps_lil))
                * np.sqrt(2.0 * self.proxy * (1.0 + p.eps_lil) * loglog / n)
            )
        return np.where(inner < self.gamma, np.inf, width)

    def select(self) -> int:
        """Next arm to pull: bootstrap order first, then the UCB argmax."""
        if self.stopped:
            raise ContractViolation("select() after the learner stopped")
        unexplored = np.flatnonzero(self.counts == 0)
        if unexplored.size:
            return int(unexplored[0])
        index = self.sums / self.counts + self._width(self.counts)
        return int(np.argmax(index))

    def update(self, arm: int, reward: float):
        if self.stopped:
            raise ContractViolation("update() after the learner stopped")
        self.counts[arm] += 1
        self.sums[arm] += float(reward)
        if np.all(self.counts > 0):
            total = int(self.counts.sum())
            leader = int(np.argmax(self.counts))
            if self.counts[leader] >= 1 + self.params.lam_lil * (total - self.counts[leader]):
                self.stopped = True
                self.best = leader

    def force_stop(self):
        """Stop at a horizon cap; the arm with the most pulls is reported."""
        if not self.stopped:
            self.stopped = True
            self.best = int(np.argmax(self.counts))

    @property
    def total_pulls(self) -> int:
        return int(self.counts.sum())
