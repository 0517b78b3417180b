"""Two-armed Bayesian learning automaton.

Arm 1 is local computing, arm 2 is offloading. Each arm keeps a Beta(a, b)
posterior over its reward probability; the automaton draws one sample per
arm and plays the larger.

With X1 ~ Beta(a1, b1), X2 ~ Beta(a2, b2) and integer parameters, P(X1 > X2)
has three finite-sum forms. All are evaluated in log space.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Tuple

import numpy as np
from scipy.special import betainc, betaln, gammaln, logsumexp, xlog1py, xlogy

from ..errors import DomainError, NumericConsistencyError, PreconditionError, SizeLimitError

MAX_PARAM_SUM = 1_000_000
FORM_TOL = 1e-10


class Arm(IntEnum):
    """Value equals the offloading flag x_i it produces."""
    OFFLOAD = 0
    LOCAL = 1


def _check_shape(a: float, b: float) -> None:
    if not (a > 0 and b > 0):
        raise DomainError(f"Beta parameters must be positive, got ({a}, {b})")


def beta_pdf(x: float, a: float, b: float) -> float:
    _check_shape(a, b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return float(np.exp(xlogy(a - 1.0, x) + xlog1py(b - 1.0, -x) - betaln(a, b)))


def beta_cdf(x: float, a: float, b: float) -> float:
    """Regularised incomplete Beta I_x(a, b)."""
    _check_shape(a, b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return float(betainc(a, b, x))


def beta_cdf_integer(x: float, a: int, b: int) -> float:
    """I_x(a, b) = sum_{j=a}^{a+b-1} C(a+b-1, j) x^j (1-x)^(a+b-1-j) for integer a, b."""
    _check_shape(a, b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    n = a + b - 1
    j = np.arange(a, n + 1)
    log_terms = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1) + j * np.log(x) + (n - j) * np.log1p(-x)
    return float(np.exp(logsumexp(log_terms)))


@dataclass(frozen=True)
class BetaArmState:
    a1: int = 1
    b1: int = 1
    a2: int = 1
    b2: int = 1

    def __post_init__(self):
        for name in ("a1", "b1", "a2", "b2"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be an integer >= 1, got {v}")

    @property
    def total(self) -> int:
        return self.a1 + self.b1 + self.a2 + self.b2

    def swapped(self) -> "BetaArmState":
        return BetaArmState(self.a2, self.b2, self.a1, self.b1)

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return self.a1, self.b1, self.a2, self.b2


def sample_beta(a: float, b: float, rng: np.random.Generator) -> float:
    """Beta draw as a ratio of two Gamma draws."""
    g1 = rng.standard_gamma(a)
    g2 = rng.standard_gamma(b)
    return float(g1 / (g1 + g2))


def sample_and_select(arm: BetaArmState, rng: np.random.Generator) -> Arm:
    x1 = sample_beta(arm.a1, arm.b1, rng)
    x2 = sample_beta(arm.a2, arm.b2, rng)
    return Arm.LOCAL if x1 > x2 else Arm.OFFLOAD


def update_arm(arm: BetaArmState, action: Arm, rewarded: bool) -> BetaArmState:
    if action == Arm.LOCAL:
        return replace(arm, a1=arm.a1 + 1) if rewarded else replace(arm, b1=arm.b1 + 1)
    return replace(arm, a2=arm.a2 + 1) if rewarded else replace(arm, b2=arm.b2 + 1)


def _guard(arm: BetaArmState) -> None:
    if arm.total > MAX_PARAM_SUM:
        raise SizeLimitError("Beta parameters too large for the finite sums", total=arm.total, limit=MAX_PARAM_SUM)


def p_arm1_closed_form(arm: BetaArmState) -> float:
    """P(X1 > X2) = sum_{j=a2}^{n-1} C(n-1, j) B(a1 + j, b1 + n-1-j) / B(a1, b1), n = a2 + b2."""
    _guard(arm)
    n = arm.a2 + arm.b2
    j = np.arange(arm.a2, n)
    log_terms = (gammaln(n) - gammaln(j + 1) - gammaln(n - j)
                 + betaln(arm.a1 + j, arm.b1 + n - 1 - j) - betaln(arm.a1, arm.b1))
    return float(np.exp(logsumexp(log_terms)))


def _form_over_a1(arm: BetaArmState) -> float:
    i = np.arange(arm.a1)
    log_terms = (betaln(arm.a2 + i, arm.b1 + arm.b2) - np.log(arm.b1 + i)
                 - betaln(1 + i, arm.b1) - betaln(arm.a2, arm.b2))
    return float(np.exp(logsumexp(log_terms)))


def _form_over_b2(arm: BetaArmState) -> float:
    i = np.arange(arm.b2)
    log_terms = (betaln(arm.b1 + i, arm.a1 + arm.a2) - np.log(arm.a2 + i)
                 - betaln(1 + i, arm.a2) - betaln(arm.a1, arm.b1))
    return float(np.exp(logsumexp(log_terms)))


def exact_superiority_prob(arm: BetaArmState, tol: float = FORM_TOL) -> float:
    """Both superiority sums (over i < a1 and over i < b2); they must agree."""
    _guard(arm)
    p1 = _form_over_a1(arm)
    p2 = _form_over_b2(arm)
    if abs(p1 - p2) > tol:
        raise NumericConsistencyError(f"superiority forms disagree for {arm.as_tuple()}: {p1!r} vs {p2!r}")
    return 0.5 * (p1 + p2)


def p_local(arm: BetaArmState) -> float:
    """P(X1 > X2) through whichever superiority sum is shorter."""
    _guard(arm)
    return _form_over_a1(arm) if arm.a1 <= arm.b2 else _form_over_b2(arm)


def _tail_gap(arm: BetaArmState, up: BetaArmState, down: BetaArmState) -> float:
    """p(up) - p(down), taken on the complement when p is close to 1."""
    if p_local(arm) > 0.5:
        return p_local(down.swapped()) - p_local(up.swapped())
    return p_local(up) - p_local(down)


def expected_p_local_after_pull(arm: BetaArmState, r: float, pulled: Arm = Arm.LOCAL) -> float:
    """E[P(local)] after one pull of `pulled`, whose reward probability is r."""
    win = update_arm(arm, pulled, True)
    lose = update_arm(arm, pulled, False)
    return r * p_local(win) + (1.0 - r) * p_local(lose)


def self_correction_delta(arm: BetaArmState, r1: float, r2: float = 0.5, pulled: Arm = Arm.LOCAL) -> float:
    """Expected one-pull change in the pulled arm's selection probability.

    The posterior mean m = a/(a+b) of the pulled arm is a martingale weight:
    p = m p(win) + (1 - m) p(lose), so the change is (r - m)(p(win) - p(lose))
    measured for the pulled arm. Computed that way it keeps full precision
    near the boundary r = m.
    """
    for name, r in (("r1", r1), ("r2", r2)):
        if not 0.0 < r < 1.0:
            raise PreconditionError(f"{name} must lie in (0, 1), got {r}")
    if pulled == Arm.LOCAL:
        r, m = r1, arm.a1 / (arm.a1 + arm.b1)
        gap = _tail_gap(arm, update_arm(arm, Arm.LOCAL, True), update_arm(arm, Arm.LOCAL, False))
    else:
        # offload arm's selection probability is P(X2 > X1)
        r, m = r2, arm.a2 / (arm.a2 + arm.b2)
        mirrored = arm.swapped()
        gap = _tail_gap(mirrored, update_arm(mirrored, Arm.LOCAL, True), update_arm(mirrored, Arm.LOCAL, False))
    return (r - m) * gap


def self_correction_check(arm: BetaArmState, r1: float, r2: float = 0.5, pulled: Arm = Arm.LOCAL) -> bool:
    """True when one pull is expected to raise the pulled arm's selection probability."""
    return self_correction_delta(arm, r1, r2, pulled) > 0.0


@dataclass(frozen=True)
class ConvergenceTrace:
    p_local: np.ndarray  # (steps + 1,), closed form, entry 0 is the prior
    actions: np.ndarray  # (steps,), Arm values

    __hash__ = None  # type: ignore[assignment]

    @property
    def final(self) -> float:
        return float(self.p_local[-1])


def _bandit_preconditions(r1: float, r2: float, steps: int) -> None:
    if r1 == r2:
        raise PreconditionError("the two arms must have different reward probabilities")
    for name, r in (("r1", r1), ("r2", r2)):
        if not 0.0 <= r <= 1.0:
            raise PreconditionError(f"{name} must lie in [0, 1], got {r}")
    if steps < 0:
        raise PreconditionError("steps must be >= 0")


def convergence_check(r1: float, r2: float, steps: int, rng: np.random.Generator) -> ConvergenceTrace:
    """Bernoulli two-armed bandit played by one automaton; P(local) after every step."""
    _bandit_preconditions(r1, r2, steps)
    arm = BetaArmState()
    probs = np.empty(steps + 1)
    actions = np.empty(steps, dtype=np.int8)
    probs[0] = p_local(arm)
    for t in range(steps):
        action = sample_and_select(arm, rng)
        rate = r1 if action == Arm.LOCAL else r2
        arm = update_arm(arm, action, bool(rng.random() < rate))
        actions[t] = int(action)
        probs[t + 1] = p_local(arm)
    return ConvergenceTrace(probs, actions)


def convergence_batch(r1: float, r2: float, steps: int, runs: int, rng: np.random.Generator) -> np.ndarray:
    """Final closed-form P(local) of `runs` independent automata, simulated side by side."""
    _bandit_preconditions(r1, r2, steps)
    a1 = np.ones(runs)
    b1 = np.ones(runs)
    a2 = np.ones(runs)
    b2 = np.ones(runs)
    for _ in range(steps):
        g = rng.standard_gamma(np.stack([a1, b1, a2, b2]))
        local = g[0] / (g[0] + g[1]) > g[2] / (g[2] + g[3])
        win = rng.random(runs) < np.where(local, r1, r2)
        a1 += local & win
        b1 += local & ~win
        a2 += ~local & win
        b2 += ~local & ~win
    return np.array([
        p_local(BetaArmState(int(p), int(q), int(u), int(v))) for p, q, u, v in zip(a1, b1, a2, b2)
    ])
