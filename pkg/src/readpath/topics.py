"""Latent-topic model fit by collapsed Gibbs sampling.

The sampler sweeps token-level topic assignments with the standard
collapsed conditional p(z=j) proportional to (n_dk + alpha) * (n_kv + beta)
/ (n_k + V*beta). Document-topic rows (theta) and topic-word rows (phi)
are Dirichlet-smoothed point estimates, so every entry is strictly
positive and downstream KL divergences stay finite.

Randomness comes from numpy's PCG64 stream seeded explicitly, and the
per-sweep update order is fixed, so a (corpus, params) pair always
produces the same model. The inner sweep is JIT-compiled when numba is
available; the pure-Python fallback runs the identical arithmetic.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusMatrix
from .errors import InputError

MODEL_FORMAT_VERSION = 1

ROW_SUM_TOL = 1e-9


def _gibbs_sweep(doc_of, word_of, z, n_dk, n_kv, n_k, alpha, beta, u, cum):
    n_tokens = z.shape[0]
    k = n_kv.shape[0]
    vbeta = n_kv.shape[1] * beta
    for t in range(n_tokens):
        d = doc_of[t]
        w = word_of[t]
        old = z[t]
        n_dk[d, old] -= 1
        n_kv[old, w] -= 1
        n_k[old] -= 1
        total = 0.0
        for j in range(k):
            total += (n_dk[d, j] + alpha) * (n_kv[j, w] + beta) / (n_k[j] + vbeta)
            cum[j] = total
        r = u[t] * total
        new = 0
        while cum[new] < r:
            new += 1
        z[t] = new
        n_dk[d, new] += 1
        n_kv[new, w] += 1
        n_k[new] += 1


try:  # pragma: no cover - exercised implicitly
    import numba

    _gibbs_sweep = numba.njit(cache=True, nogil=True)(_gibbs_sweep)
except ImportError:  # pragma: no cover
    pass


@dataclass(frozen=True)
class TopicModelParams:
    k: int = 80
    alpha: float | None = None  # None = 50/k
    beta: float = 0.01
    iterations: int = 1000
    seed: int = 0
    # Trailing sweeps averaged into the point estimate; 1 = final state only.
    average_last: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (1 <= self.average_last <= self.iterations):
            raise ValueError("average_last must be in [1, iterations]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def resolved_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.k

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class TopicModel:
    theta: np.ndarray  # D x k document-topic rows
    phi: np.ndarray  # k x V topic-word rows
    params: TopicModelParams
    corpus_fingerprint: str = ""

    def __post_init__(self):
        for name, m in (("theta", self.theta), ("phi", self.phi)):
            if np.abs(m.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
                raise ValueError(f"{name} rows must sum to 1 within {ROW_SUM_TOL}")
            if m.min() <= 0:
                raise ValueError(f"{name} entries must be strictly positive")

    @property
    def n_docs(self) -> int:
        return self.theta.shape[0]

    @property
    def k(self) -> int:
        return self.theta.shape[1]


def train(corpus: CorpusMatrix, params: TopicModelParams, fingerprint: str = "") -> TopicModel:
    """Fit a model; deterministic for a fixed (corpus, params) pair."""
    if corpus.n_docs == 0:
        raise InputError("cannot train on an empty corpus")
    doc_of, word_of = corpus.token_streams()
    n_tokens = doc_of.shape[0]
    if params.k > n_tokens:
        raise InputError(f"k={params.k} exceeds the total token count {n_tokens}")

    k, v, d = params.k, corpus.n_vocab, corpus.n_docs
    alpha, beta = float(params.resolved_alpha), float(params.beta)
    rng = np.random.Generator(np.random.PCG64(params.seed))

    z = rng.integers(0, k, n_tokens, dtype=np.int64)
    n_dk = np.zeros((d, k), dtype=np.int64)
    n_kv = np.zeros((k, v), dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kv, (z, word_of), 1)
    n_k = np.bincount(z, minlength=k).astype(np.int64)
    n_doc = np.bincount(doc_of, minlength=d).astype(np.int64)
    cum = np.empty(k, dtype=np.float64)

    theta_acc = np.zeros((d, k), dtype=np.float64)
    phi_acc = np.zeros((k, v), dtype=np.float64)
    first_kept = params.iterations - params.average_last
    for sweep in range(params.iterations):
        u = rng.random(n_tokens)
        _gibbs_sweep(doc_of, word_of, z, n_dk, n_kv, n_k, alpha, beta, u, cum)
        if sweep >= first_kept:
            theta_acc += (n_dk + alpha) / (n_doc[:, None] + k * alpha)
            phi_acc += (n_kv + beta) / (n_k[:, None] + v * beta)

    theta = theta_acc / params.average_last
    phi = phi_acc / params.average_last
    return TopicModel(theta=theta, phi=phi, params=params, corpus_fingerprint=fingerprint)


def theta_row(model: TopicModel, doc_index: int) -> np.ndarray:
    """Copy of one document's topic distribution."""
    if not (0 <= doc_index < model.n_docs):
        raise IndexError(f"doc_index {doc_index} out of range [0, {model.n_docs})")
    return model.theta[doc_index].copy()


def sweep_k(
    corpus: CorpusMatrix,
    k_list: list[int],
    base_params: TopicModelParams,
    fingerprint: str = "",
    threads: int = 1,
) -> list[TopicModel]:
    """Train one independent model per k; model i is seeded base seed + i.

    Models are independent chains, so they may train concurrently; the
    returned list always follows ``k_list`` order.
    """
    if not k_list:
        raise ValueError("k_list must be nonempty")
    all_params = [
        dataclasses.replace(base_params, k=k_i, seed=base_params.seed + i)
        for i, k_i in enumerate(k_list)
    ]
    if threads > 1 and len(all_params) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda p: train(corpus, p, fingerprint), all_params))
    return [train(corpus, p, fingerprint) for p in all_params]


def save_model(path: Path | str, model: TopicModel) -> None:
    """Single binary artifact: one JSON header line, then theta and phi as
    row-major float64 bytes. Contains no timestamps, so identical models
    serialize to identical bytes."""
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "topic-model",
        "d": model.theta.shape[0],
        "k": model.theta.shape[1],
        "v": model.phi.shape[1],
        "params": model.params.as_dict(),
        "corpus_fingerprint": model.corpus_fingerprint,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(model.theta, dtype=np.float64).tobytes())
        fh.write(np.ascontiguousarray(model.phi, dtype=np.float64).tobytes())


def load_model(path: Path | str) -> TopicModel:
    path = Path(path)
    if not path.exists():
        raise InputError(f"model artifact not found: {path}")
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise InputError(f"model artifact {path}: bad header") from exc
        if header.get("kind") != "topic-model" or header.get("format_version") != MODEL_FORMAT_VERSION:
            raise InputError(f"model artifact {path}: unsupported format tag")
        d, k, v = header["d"], header["k"], header["v"]
        theta = np.frombuffer(fh.read(d * k * 8), dtype=np.float64).reshape(d, k)
        phi = np.frombuffer(fh.read(k * v * 8), dtype=np.float64).reshape(k, v)
    params = TopicModelParams(**header["params"])
    return TopicModel(
        theta=theta, phi=phi, params=params, corpus_fingerprint=header.get("corpus_fingerprint", "")
    )
