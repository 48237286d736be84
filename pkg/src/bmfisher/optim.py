"""SGD and damped natural-gradient updates and the training loop."""

from __future__ import annotations

import enum
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .encoding import Encoding, ModelParams, n_params
from .fisher import FimMatrix, MomentTable, fim_from_moments, likelihood_gradient, offblock_ratio
from .gibbs import EmpiricalDistribution, data_moments, enumerate_distribution, exact_moments, kl_divergence
from .sampler import AnnealSchedule, empirical_moments, metropolis_sample
from .spectral import Spectrum, fim_spectrum, schur_bound, spectral_entropy

THETA_LIMIT = 1e3
KL_BLOWUP = 10.0


class Optimizer(str, enum.Enum):
    SGD = "SGD"
    NGD = "NGD"


class MomentSource(str, enum.Enum):
    EXACT = "EXACT"
    SA = "SA"


def _as_enum(cls, value):
    return value if isinstance(value, cls) else cls(str(value).upper())


@dataclass(frozen=True)
class TrainConfig:
    encoding: Encoding = Encoding.ISING
    optimizer: Optimizer = Optimizer.SGD
    beta: float = 1.0
    iterations: int = 500
    eta_ngd: float = 0.01
    eta_sgd_numerator: float = 0.01
    damping: float = 0.001
    moment_source: MomentSource = MomentSource.EXACT
    fim_source: MomentSource = MomentSource.EXACT
    n_samples: int = 10_000
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    n_chains: int = 8
    seed: int = 0
    trace_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding.parse(self.encoding))
        object.__setattr__(self, "optimizer", _as_enum(Optimizer, self.optimizer))
        object.__setattr__(self, "moment_source", _as_enum(MomentSource, self.moment_source))
        object.__setattr__(self, "fim_source", _as_enum(MomentSource, self.fim_source))
        if self.eta_ngd <= 0 or self.eta_sgd_numerator <= 0:
            raise ValueError("learning rates must be positive")
        if self.damping < 0:
            raise ValueError("damping must be nonnegative")
        if self.iterations < 1 or self.trace_every < 1:
            raise ValueError("iterations and trace_every must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("encoding", "optimizer", "moment_source", "fim_source"):
            out[key] = getattr(self, key).value
        return out


TRACE_COLUMNS = (
    "iter",
    "kl",
    "grad_norm",
    "eta",
    "lambda_max",
    "lambda_min",
    "spectral_entropy",
    "offblock_ratio",
    "schur_lhs",
    "schur_rhs",
)


@dataclass
class TrainingTrace:
    config: TrainConfig
    rows: list[dict] = field(default_factory=list)
    eigenvalues: list[np.ndarray] = field(default_factory=list)
    thetas: list[np.ndarray] = field(default_factory=list)
    moments: dict[int, MomentTable] = field(default_factory=dict)
    fims: dict[int, FimMatrix] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    aborted: str | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    @property
    def iters(self) -> np.ndarray:
        return self.column("iter").astype(int)

    @property
    def kl(self) -> np.ndarray:
        return self.column("kl")

    @property
    def final_params(self) -> ModelParams:
        return ModelParams(self.config.encoding, self.meta["d"], self.thetas[-1])


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite input")


def sgd_step(theta: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    """``theta - eta * grad``."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise ValueError("theta and grad lengths differ")
    if not eta > 0:
        raise ValueError("eta must be positive")
    _check_finite(theta, grad)
    return theta - eta * grad


def eta_sgd_policy(F, numerator: float = 0.01) -> float:
    """``numerator / lambda_max(F)``; accepts a :class:`FimMatrix` or a precomputed :class:`Spectrum`."""
    spec = F if isinstance(F, Spectrum) else fim_spectrum(F)
    lam = spec.lambda_max
    if not lam > 0:
        raise ValueError("learning-rate policy needs lambda_max > 0")
    return numerator / lam


def ngd_step(theta, grad, F: FimMatrix, eta: float, damping: float) -> np.ndarray:
    """``theta - eta * delta`` with ``(F + damping I) delta = grad``."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape or F.M.shape != (theta.size, theta.size):
        raise ValueError("shape mismatch between theta, grad and F")
    if not eta > 0:
        raise ValueError("eta must be positive")
    _check_finite(theta, grad, F.M)
    A = 0.5 * (F.M + F.M.T) + damping * np.eye(theta.size)
    try:
        delta = scipy.linalg.solve(A, grad, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        cond = np.linalg.cond(A)
        raise np.linalg.LinAlgError(f"damped FIM solve failed (condition ~{cond:.3e})") from exc
    return theta - eta * delta


def _iteration_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


def train(
    dataset: EmpiricalDistribution,
    cfg: TrainConfig,
    keep_moments_at=(),
    keep_fim_at=(),
) -> TrainingTrace:
    """Fit a fully connected Boltzmann machine to ``dataset`` starting from zero parameters.

    Rows are recorded for iterations ``0, trace_every, ...`` and always for the
    final iteration; each row describes the parameters *before* that
    iteration's update, so row ``iterations`` is the trained model.
    """
    d = dataset.d
    enc = cfg.encoding
    beta = cfg.beta
    keep_moments_at = set(keep_moments_at)
    keep_fim_at = set(keep_fim_at)
    trace = TrainingTrace(cfg)
    trace.meta = {
        "d": d,
        "dataset_digest": dataset.digest(),
        "kl_direction": "D(p_data || p_model)",
        "entropy_log_base": "e",
        "init": "zeros",
    }
    data_m = data_moments(dataset, enc, 2)
    theta = np.zeros(n_params(d))
    kl0 = None
    start = time.perf_counter()
    for t in range(cfg.iterations + 1):
        params = ModelParams(enc, d, theta)
        dist = enumerate_distribution(params, beta)
        kl = kl_divergence(dataset, dist)
        kl0 = kl if kl0 is None else kl0

        exact_m = None
        if cfg.moment_source is MomentSource.EXACT or cfg.fim_source is MomentSource.EXACT:
            exact_m = exact_moments(dist, enc, 4)
        sampled_m = None
        if cfg.moment_source is MomentSource.SA or cfg.fim_source is MomentSource.SA:
            samples = metropolis_sample(
                params, beta, cfg.schedule, cfg.n_samples, _iteration_seed(cfg.seed, t), cfg.n_chains
            )
            sampled_m = empirical_moments(samples, 4)
        model_m = exact_m if cfg.moment_source is MomentSource.EXACT else sampled_m
        fim_m = exact_m if cfg.fim_source is MomentSource.EXACT else sampled_m

        grad = likelihood_gradient(data_m, model_m, beta)
        F = fim_from_moments(fim_m, beta)
        spec = fim_spectrum(F)
        degenerate = not spec.lambda_max > 0
        if degenerate:
            eta = float("nan")
        elif cfg.optimizer is Optimizer.SGD:
            eta = eta_sgd_policy(spec, cfg.eta_sgd_numerator)
        else:
            eta = cfg.eta_ngd

        if degenerate or t % cfg.trace_every == 0 or t == cfg.iterations:
            try:
                bound = schur_bound(F)
            except np.linalg.LinAlgError:
                bound = schur_bound(F, damping=cfg.damping)
            trace.rows.append(
                {
                    "iter": t,
                    "kl": kl,
                    "grad_norm": float(np.linalg.norm(grad)),
                    "eta": eta,
                    "lambda_max": spec.lambda_max,
                    "lambda_min": spec.lambda_min,
                    "spectral_entropy": float("nan") if degenerate else spectral_entropy(spec),
                    "offblock_ratio": offblock_ratio(F),
                    "schur_lhs": bound.lhs,
                    "schur_rhs": bound.rhs,
                }
            )
            trace.eigenvalues.append(spec.eigenvalues)
            trace.thetas.append(theta.copy())
        if t in keep_moments_at:
            trace.moments[t] = model_m
        if t in keep_fim_at:
            trace.fims[t] = F

        if degenerate:
            trace.aborted = f"FIM vanished (model collapsed to a point mass) at iteration {t}"
            break
        if kl > kl0 * (1.0 + KL_BLOWUP) and kl0 > 0:
            trace.aborted = f"KL grew from {kl0:.6g} to {kl:.6g} at iteration {t}"
            break
        if t == cfg.iterations:
            break

        if cfg.optimizer is Optimizer.SGD:
            new_theta = sgd_step(theta, grad, eta)
        else:
            new_theta = ngd_step(theta, grad, F, eta, cfg.damping)
        if not np.all(np.isfinite(new_theta)) or np.max(np.abs(new_theta)) > THETA_LIMIT:
            trace.aborted = f"parameters left the finite box |theta| <= {THETA_LIMIT:g} after iteration {t}"
            break
        theta = new_theta

    trace.meta["wall_time_s"] = time.perf_counter() - start
    trace.meta["aborted"] = trace.aborted
    return trace


def iterations_to_reach(trace: TrainingTrace, target: float) -> int | None:
    """First recorded iteration whose KL is at or below ``target``."""
    hits = np.nonzero(trace.kl <= target)[0]
    return int(trace.iters[hits[0]]) if hits.size else None
