"""Stochastic-approximation driver over the constrained parameter space.

The iteration takes a step a_n = n^{-a} along a simulated gradient drawn
at sample length ceil(n^b); candidates that leave the parameter space are
rejected (theta kept unchanged).  The trace records everything needed for
rate fitting and reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .channel import ChannelSpec, sample_path, stream_rng
from .constraints import ForbiddenPairSet
from .errors import (InsufficientTrace, InvalidConfig, NonFiniteGradient,
                     TooShort)
from .hmm import encode_xy, sample_entropy, view_XY, view_Y
from .markov import (MarkovParams, build_transition, feasible,
                     markov_entropy_gradient, markov_entropy_rate,
                     transition_derivatives)
from .simulator import estimate_gradient, make_schedule


@dataclass(frozen=True)
class SAConfig:
    a: float = 0.75
    b: float = 2.0
    alpha: float = 0.3
    beta: float = 0.2
    epsilon_floor: float = 1e-3
    theta0: object = "random"      # explicit vector or "random"
    max_iters: int = 1000
    seed: int = 0
    grad_window: int = 50
    grad_tol: float = 0.0          # 0 disables the stopping rule
    f_hat_every: int = 50


def validate_config(cfg: SAConfig) -> SAConfig:
    """Checks every exponent inequality; raises InvalidConfig naming the
    violated one."""
    if not 0.5 < cfg.a < 1.0:
        raise InvalidConfig(f"a: need 1/2 < a < 1, got a={cfg.a}")
    if cfg.b <= 0:
        raise InvalidConfig(f"b: need b > 0, got b={cfg.b}")
    if not 0.0 < cfg.beta:
        raise InvalidConfig(f"beta: need 0 < beta, got beta={cfg.beta}")
    if not cfg.beta < cfg.alpha:
        raise InvalidConfig(f"alpha: need beta < alpha, got alpha={cfg.alpha} beta={cfg.beta}")
    if not cfg.alpha < 1.0 / 3.0:
        raise InvalidConfig(f"alpha: need alpha < 1/3, got alpha={cfg.alpha}")
    lhs = 2 * cfg.a + cfg.b - 3 * cfg.b * cfg.beta
    if not lhs > 1.0:
        raise InvalidConfig(f"2a+b-3b*beta: need > 1, got {lhs}")
    if cfg.epsilon_floor <= 0:
        raise InvalidConfig(f"epsilon_floor: need > 0, got {cfg.epsilon_floor}")
    if cfg.max_iters < 0:
        raise InvalidConfig("max_iters: need >= 0")
    return cfg


@dataclass(frozen=True)
class Problem:
    """What the iteration needs from the outside world.

    gradient(theta_params, m, rng) returns a simulated (or exact) gradient;
    objective, if present, evaluates or estimates the objective for
    diagnostics only.  min_sim_length clamps ceil(n^b) from below so the
    block schedule stays valid.
    """
    F: ForbiddenPairSet
    gradient: Callable
    objective: Optional[Callable] = None
    min_sim_length: Optional[int] = None


def mc_problem(F: ForbiddenPairSet, channel: ChannelSpec,
               alpha: float = 0.3, beta: float = 0.2) -> Problem:
    """Monte Carlo gradient problem for a concrete channel."""
    m_min = _min_schedule_length(alpha, beta)

    def gradient(params: MarkovParams, m: int, rng):
        est = estimate_gradient(params, F, channel, m, rng=rng,
                                alpha=alpha, beta=beta)
        return est.g

    def objective(params: MarkovParams, m: int, rng):
        # I ~ H(X) + H_hat(Y) - H_hat(X, Y); diagnostics only
        tm = build_transition(params, F)
        dP = transition_derivatives(params.theta, F)
        path = sample_path(tm, channel, m, rng)
        hy = sample_entropy(view_Y(tm, dP, channel), path.y)
        z = encode_xy(path.x, path.y, channel.num_outputs)
        hxy = sample_entropy(view_XY(tm, dP, channel), z)
        return markov_entropy_rate(tm) + hy - hxy

    return Problem(F=F, gradient=gradient, objective=objective,
                   min_sim_length=m_min)


def exact_gradient_problem(F: ForbiddenPairSet) -> Problem:
    """Noiseless-limit test harness: the exact Markov entropy gradient
    stands in for the simulator and the entropy rate is the objective."""

    def gradient(params: MarkovParams, m: int, rng):
        return markov_entropy_gradient(params, F)

    def objective(params: MarkovParams, m: int, rng):
        return markov_entropy_rate(build_transition(params, F))

    return Problem(F=F, gradient=gradient, objective=objective)


def _min_schedule_length(alpha: float, beta: float) -> int:
    m = 2
    while m < 1 << 20:
        try:
            make_schedule(m, alpha, beta)
            return m
        except TooShort:
            m *= 2
    raise TooShort("no valid schedule length found")


@dataclass(frozen=True)
class SARecord:
    n: int
    theta: np.ndarray
    g: np.ndarray
    a_n: float
    rejected: bool
    f_hat: Optional[float] = None


@dataclass
class SATrace:
    records: list = field(default_factory=list)
    theta_final: np.ndarray = None
    reject_count: int = 0
    stopped_early: bool = False
    late_rejections: int = 0   # rejections in the final 10% of iterations

    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.records])

    def grads(self) -> np.ndarray:
        return np.array([r.g for r in self.records])


def random_theta0(F: ForbiddenPairSet, epsilon_floor: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the product of epsilon-shrunk simplices
    (symmetric Dirichlet per row, rescaled to the floor)."""
    adj = F.adjacency()
    coords = []
    for i in range(F.alphabet_size):
        m = int(adj[i].sum())
        if m < 2:
            continue
        v = rng.dirichlet(np.ones(m))
        row = epsilon_floor + (1.0 - m * epsilon_floor) * v
        coords.extend(row[:-1])
    return np.array(coords)


def sa_step(params: MarkovParams, n: int, cfg: SAConfig, problem: Problem,
            rng: np.random.Generator, f_hat: Optional[float] = None):
    """One iteration; returns (next_params, record)."""
    a_n = float(n) ** (-cfg.a)
    m = int(math.ceil(float(n) ** cfg.b))
    if problem.min_sim_length is not None:
        m = max(m, problem.min_sim_length)
    g = np.asarray(problem.gradient(params, m, rng), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient(f"non-finite gradient at iteration {n}: {g}")
    candidate = params.theta + a_n * g
    if feasible(candidate, problem.F, cfg.epsilon_floor):
        next_params = replace(params, theta=candidate)
        rejected = False
    else:
        next_params = params
        rejected = True
    rec = SARecord(n=n, theta=params.theta.copy(), g=g, a_n=a_n,
                   rejected=rejected, f_hat=f_hat)
    return next_params, rec


def run(cfg: SAConfig, problem: Problem) -> SATrace:
    """Iterate until max_iters or the gradient-magnitude stopping rule."""
    validate_config(cfg)
    if isinstance(cfg.theta0, str) and cfg.theta0 == "random":
        theta0 = random_theta0(problem.F, cfg.epsilon_floor,
                               stream_rng(cfg.seed, 0))
    else:
        theta0 = np.atleast_1d(np.asarray(cfg.theta0, dtype=float))
    params = MarkovParams(theta0, cfg.epsilon_floor)
    if not feasible(params.theta, problem.F, cfg.epsilon_floor):
        raise InvalidConfig("theta0 is not feasible")

    trace = SATrace()
    recent_g = []
    for n in range(1, cfg.max_iters + 1):
        rng = stream_rng(cfg.seed, n)
        f_hat = None
        if problem.objective is not None and (n % cfg.f_hat_every == 0 or n == 1):
            m = int(math.ceil(float(n) ** cfg.b))
            if problem.min_sim_length is not None:
                m = max(m, problem.min_sim_length)
            f_hat = float(problem.objective(params, m, stream_rng(cfg.seed, n, 1)))
        try:
            params, rec = sa_step(params, n, cfg, problem, rng, f_hat=f_hat)
        except NonFiniteGradient as exc:
            exc.trace = trace
            raise
        trace.records.append(rec)
        if rec.rejected:
            trace.reject_count += 1
            if n > 0.9 * cfg.max_iters:
                trace.late_rejections += 1
        recent_g.append(float(np.linalg.norm(rec.g)))
        if len(recent_g) > cfg.grad_window:
            recent_g.pop(0)
        if (cfg.grad_tol > 0 and len(recent_g) == cfg.grad_window
                and np.mean(recent_g) < cfg.grad_tol):
            trace.stopped_early = True
            break
    trace.theta_final = params.theta.copy()
    if not trace.records:
        trace.records.append(SARecord(n=0, theta=params.theta.copy(),
                                      g=np.zeros_like(params.theta),
                                      a_n=0.0, rejected=False))
    return trace


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    n_points: int


def _loglog_fit(ns: np.ndarray, errs: np.ndarray) -> RateFit:
    keep = errs > 1e-12
    ns, errs = ns[keep], errs[keep]
    if len(ns) < 10:
        raise InsufficientTrace("too few usable points for a rate fit")
    x = np.log(ns)
    y = np.log(errs)
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(s2 / sxx) if sxx > 0 else float("inf")
    return RateFit(slope=float(coef[0]), stderr=stderr, n_points=len(ns))


def fit_rates(trace: SATrace, theta_ref, f_ref: Optional[float] = None,
              f_fn: Optional[Callable] = None) -> dict:
    """Least-squares rate exponents on the tail half of the trace.

    theta_ref is an external reference optimum; f_ref (with f_fn to
    evaluate the objective at trace points) enables the objective-gap fit.
    """
    if len(trace.records) < 100:
        raise InsufficientTrace("need at least 100 iterations")
    theta_ref = np.atleast_1d(np.asarray(theta_ref, dtype=float))
    recs = trace.records[len(trace.records) // 2:]
    ns = np.array([r.n for r in recs], dtype=float)
    errs = np.array([np.linalg.norm(r.theta - theta_ref) for r in recs])
    out = {"theta_rate": _loglog_fit(ns, errs)}
    if f_ref is not None and f_fn is not None:
        f_errs = np.array([abs(f_fn(r.theta) - f_ref) for r in recs])
        out["f_rate"] = _loglog_fit(ns, f_errs)
    return out
