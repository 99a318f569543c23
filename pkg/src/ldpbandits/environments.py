"""Synthetic seeded environments with analytically declared bounds.

Every environment states the bounds its values respect (loss range, |f| <= B,
gradient norm <= G, arm norms, reward noise range); the declared constants
feed the noise calibrations, so they are enforced rather than estimated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blackbox import DecisionSet, project
from .errors import ConfigurationError, ContractViolation


# ---------------------------------------------------------------------------
# multi-armed bandits


class StochasticMab:
    """Bernoulli losses with fixed means in [0, 1]."""

    def __init__(self, means, rng: np.random.Generator):
        self.means = np.asarray(means, dtype=float)
        if self.means.ndim != 1 or not np.all((0 <= self.means) & (self.means <= 1)):
            raise ConfigurationError("arm means must be a vector in [0, 1]")
        self.k = self.means.size
        self.rng = rng
        self.best_arm = int(np.argmin(self.means))
        self.best_mean = float(self.means.min())

    def sample(self, t: int, arm: int) -> float:
        if not (0 <= arm < self.k):
            raise ContractViolation(f"arm {arm} out of range [0, {self.k})")
        return float(self.rng.random() < self.means[arm])

    def instant_regret(self, arm: int) -> float:
        """Expected suboptimality gap of the pulled arm."""
        return float(self.means[arm] - self.best_mean)

    def gaps(self) -> np.ndarray:
        return self.means - self.best_mean


class AdversarialMab:
    """An oblivious loss table in [0, 1]^(T x K), fixed before the game."""

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2:
            raise ConfigurationError("loss table must be T x K")
        if not np.all((0 <= table) & (table <= 1)):
            raise ConfigurationError("adversarial losses must lie in [0, 1]")
        self.table = table
        self.horizon, self.k = table.shape
        cumulative = table.sum(axis=0)
        self.best_arm = int(np.argmin(cumulative))
        self.best_cumulative = float(cumulative.min())

    def sample(self, t: int, arm: int) -> float:
        """Loss of round t (1-based) for the chosen arm."""
        if not (0 <= arm < self.k):
            raise ContractViolation(f"arm {arm} out of range [0, {self.k})")
        return float(self.table[t - 1, arm])

    def instant_regret(self, t: int, arm: int) -> float:
        """Per-round loss gap against the best fixed arm in hindsight."""
        return float(self.table[t - 1, arm] - self.table[t - 1, self.best_arm])

    @staticmethod
    def fixed_gap(n_arms: int, horizon: int, best_loss: float = 0.3,
                  gap: float = 0.2) -> "AdversarialMab":
        """Constant losses: one best arm at best_loss, the rest at best_loss + gap."""
        losses = np.full(n_arms, best_loss + gap)
        losses[0] = best_loss
        return AdversarialMab(np.tile(losses, (horizon, 1)))

    @staticmethod
    def switching(n_arms: int, horizon: int, anchor_loss: float = 0.45,
                  dip_loss: float = 0.44, off_loss: float = 0.65,
                  n_blocks: int = 10) -> "AdversarialMab":
        """Best arm alternates every horizon/n_blocks rounds.

        Arm 0 holds a constant anchor loss; in each block one of the other
        arms dips just below it (so the per-block best arm rotates) while the
        remaining arms sit at a high loss.  Arm 0 stays the best fixed arm in
        hindsight, and the shallow dips keep the alternation from being
        exploitable.
        """
        if n_arms < 2:
            raise ConfigurationError("switching sequence needs at least 2 arms")
        if not (dip_loss < anchor_loss < off_loss):
            raise ConfigurationError("need dip_loss < anchor_loss < off_loss")
        block = max(horizon // n_blocks, 1)
        table = np.full((horizon, n_arms), off_loss)
        table[:, 0] = anchor_loss
        for t in range(horizon):
            winner = 1 + (min(t // block, n_blocks - 1) % (n_arms - 1))
            table[t, winner] = dip_loss
        return AdversarialMab(table)


# ---------------------------------------------------------------------------
# convex losses with one- or two-point value access


class QuadraticOracle:
    """f_t(x) = scale * |x - x_star|^2, constant over rounds.

    B, G and the strong-convexity modulus are exact on the given set.
    """

    def __init__(self, x_star, dset: DecisionSet, scale: float = 1.0):
        self.x_star = np.asarray(x_star, dtype=float)
        if not dset.contains(self.x_star):
            raise ConfigurationError("minimizer must lie inside the decision set")
        if scale <= 0:
            raise ConfigurationError("scale must be positive")
        self.dset = dset
        self.scale = float(scale)
        reach = dset.outer_radius + float(np.linalg.norm(self.x_star))
        self.bound = self.scale * reach**2
        self.lipschitz = 2.0 * self.scale * reach
        self.mu = 2.0 * self.scale

    def value(self, t: int, x) -> float:
        x = np.asarray(x, dtype=float)
        if not self.dset.contains(x, tol=1e-7):
            raise ContractViolation("query outside the decision set")
        diff = x - self.x_star
        return self.scale * float(diff @ diff)

    def optimum(self, horizon: int) -> tuple[np.ndarray, float]:
        """(argmin, minimal cumulative loss) of sum_t f_t over the set."""
        return self.x_star.copy(), 0.0


class AffineQuadraticOracle:
    """f_t(x) = scale * |x - x_star|^2 + a_t . x with a small rotating drift.

    The drift directions are fixed before the game (oblivious); the best
    fixed point in hindsight has the closed form
    x_star - sum(a_t) / (2 T scale), projected onto the set.
    """

    def __init__(self, x_star, dset: DecisionSet, horizon: int,
                 drift_norm: float = 0.1, scale: float = 1.0, seed: int = 0):
        self.base = QuadraticOracle(x_star, dset, scale)
        self.dset = dset
        self.scale = float(scale)
        self.x_star = self.base.x_star
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
        raw = rng.standard_normal((horizon, self.x_star.size))
        self.drifts = drift_norm * raw / np.linalg.norm(raw, axis=1)[:, None]
        self.horizon = horizon
        self.bound = self.base.bound + drift_norm * dset.outer_radius
        self.lipschitz = self.base.lipschitz + drift_norm
        self.mu = self.base.mu

    def value(self, t: int, x) -> float:
        x = np.asarray(x, dtype=float)
        if not self.dset.contains(x, tol=1e-7):
            raise ContractViolation("query outside the decision set")
        diff = x - self.x_star
        return self.scale * float(diff @ diff) + float(self.drifts[t - 1] @ x)

    def optimum(self, horizon: int) -> tuple[np.ndarray, float]:
        a_sum = self.drifts[:horizon].sum(axis=0)
        x_opt = project(self.x_star - a_sum / (2.0 * horizon * self.scale), self.dset)
        diff = x_opt - self.x_star
        total = horizon * self.scale * float(diff @ diff) + float(a_sum @ x_opt)
        return x_opt, total


# ---------------------------------------------------------------------------
# contextual worlds


def sample_unit_ball(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform in the d-dimensional unit ball (normalized Gaussian
    directions with the radial correction U^(1/d))."""
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    radii = rng.random(n) ** (1.0 / d)
    return g * radii[:, None]


@dataclass(frozen=True)
class ContextualRound:
    arms: np.ndarray
    best_arm: int
    best_value: float


class ContextualEnv:
    """Per-round arm sets in the unit ball with linear or link-shaped rewards.

    Linear law: y = x . theta_star + eta with eta uniform on [-1, 1]
    (mean zero, |eta| <= 1, |y| <= 2).  GLM law: y is the Bernoulli draw with
    success probability g(x . theta_star), i.e. the noise is 1 - g(a) with
    probability g(a) and -g(a) otherwise.
    """

    def __init__(self, theta_star, n_arms: int, rng: np.random.Generator,
                 link=None):
        self.theta_star = np.asarray(theta_star, dtype=float)
        if np.linalg.norm(self.theta_star) > 1.0 + 1e-12:
            raise ConfigurationError("theta_star must lie in the unit ball")
        if n_arms < 1:
            raise ConfigurationError("need at least one arm")
        self.k = n_arms
        self.d = self.theta_star.size
        self.rng = rng
        self.link = link

    def _mean_value(self, a: float) -> float:
        return float(self.link.g(a)) if self.link is not None else float(a)

    def step(self, t: int) -> ContextualRound:
        arms = sample_unit_ball(self.k, self.d, self.rng)
        scores = arms @ self.theta_star
        best = int(np.argmax(scores))
        return ContextualRound(arms=arms, best_arm=best,
                               best_value=self._mean_value(float(scores[best])))

    def reward(self, x) -> float:
        a = float(np.asarray(x, dtype=float) @ self.theta_star)
        if self.link is None:
            return a + float(self.rng.uniform(-1.0, 1.0))
        return float(self.rng.random() < self.link.g(a))

    def instant_regret(self, rnd: ContextualRound, arm: int) -> float:
        chosen = float(rnd.arms[arm] @ self.theta_star)
        return rnd.best_value - self._mean_value(chosen)
