"""Brute-force reference computations.

These deliberately avoid the vectorized paths used by the library (cached
product bases, moment tables, reduction rules) so they can serve as
independent checks of them.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_energy(values, linear, pairs_matrix) -> float:
    """Energy by explicit double loop; ``pairs_matrix[i][j]`` read for ``i < j``."""
    d = len(values)
    e = 0.0
    for i in range(d):
        e += linear[i] * values[i]
        for j in range(i + 1, d):
            e += pairs_matrix[i][j] * values[i] * values[j]
    return e


def all_configs(d: int, spin: bool):
    """Configurations in integer order (bit ``i`` of ``k`` is variable ``i``)."""
    for k in range(2**d):
        bits = [(k >> i) & 1 for i in range(d)]
        yield [2 * b - 1 for b in bits] if spin else bits


def stats_vector(values) -> list[float]:
    d = len(values)
    out = [float(v) for v in values]
    for i in range(d):
        for j in range(i + 1, d):
            out.append(float(values[i] * values[j]))
    return out


def brute_distribution(theta, d: int, spin: bool, beta: float = 1.0) -> np.ndarray:
    """Probabilities of all configurations from explicit energies."""
    theta = list(theta)
    E = np.array([sum(t * s for t, s in zip(theta, stats_vector(z))) for z in all_configs(d, spin)])
    a = -beta * E
    a -= a.max()
    w = np.exp(a)
    return w / w.sum()


def direct_covariance(theta, d: int, spin: bool, beta: float = 1.0) -> np.ndarray:
    """``beta^2 (E[phi phi^T] - E[phi] E[phi]^T)`` by enumeration."""
    p = brute_distribution(theta, d, spin, beta)
    Phi = np.array([stats_vector(z) for z in all_configs(d, spin)])
    mean = p @ Phi
    second = (Phi * p[:, None]).T @ Phi
    return beta**2 * (second - np.outer(mean, mean))


def nll(theta, d: int, spin: bool, data_configs, beta: float = 1.0) -> float:
    """Average negative log-likelihood of ``data_configs`` (integer indices)."""
    theta = list(theta)
    E = [sum(t * s for t, s in zip(theta, stats_vector(z))) for z in all_configs(d, spin)]
    a = [-beta * e for e in E]
    m = max(a)
    logZ = m + math.log(sum(math.exp(x - m) for x in a))
    return float(np.mean([beta * E[k] + logZ for k in data_configs]))


def fd_gradient(f, theta, step: float = 1e-4) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    g = np.zeros_like(theta)
    for a in range(theta.size):
        e = np.zeros_like(theta)
        e[a] = step
        g[a] = (f(theta + e) - f(theta - e)) / (2 * step)
    return g


def fd_hessian(f, theta, step: float = 1e-4) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    H = np.zeros((n, n))
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = step
        for b in range(a, n):
            eb = np.zeros(n)
            eb[b] = step
            H[a, b] = H[b, a] = (
                f(theta + ea + eb) - f(theta + ea - eb) - f(theta - ea + eb) + f(theta - ea - eb)
            ) / (4 * step * step)
    return H


def power_iteration(M, iters: int = 10_000, tol: float = 1e-14, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD matrix."""
    M = np.asarray(M, dtype=float)
    v = np.random.default_rng(seed).normal(size=M.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        if abs(new - lam) <= tol * max(abs(new), 1.0):
            lam = new
            break
        lam = new
    return lam


def moment_by_enumeration(theta, d: int, spin: bool, indices, beta: float = 1.0) -> float:
    """``E[prod_k z_{indices[k]}]`` by enumeration (repeated indices allowed)."""
    p = brute_distribution(theta, d, spin, beta)
    vals = [math.prod(z[i] for i in indices) for z in all_configs(d, spin)]
    return float(p @ np.array(vals, dtype=float))


def sorted_tuples(d: int, order: int):
    return list(itertools.combinations(range(d), order))
