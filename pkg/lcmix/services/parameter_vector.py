"""Flat free-parameter vectors for numerical derivatives and Wald tests."""

from typing import List, Optional

import numpy as np

from lcmix.schemas.model_spec import ModelSpec, SlopeConstraint, VarianceMode
from lcmix.schemas.parameters import Parameters


class ParameterLayout:
    """
    Position of every free parameter in the flat vector.

    Order: theta[2..S], mu[1..S], sigma2 (S entries, or 1 when pooled), then per item
    the S x (K_j-1) intercepts followed by its slopes: S x (K_j-1) when free,
    (K_j-1) when shared across classes, none when fixed at zero.
    """

    def __init__(self, spec: ModelSpec, item_names: Optional[List[str]] = None):
        self.spec = spec
        self.item_names = list(item_names) if item_names else [f"item{j + 1}" for j in range(spec.n_items)]
        self.names: List[str] = []
        s = spec.s

        self.theta = self._take([f"theta[class{c + 1}]" for c in range(1, s)])
        self.mu = None
        self.sigma2 = None
        if spec.models_z:
            self.mu = self._take([f"mu[class{c + 1}]" for c in range(s)])
            if spec.variance_mode == VarianceMode.COMMON:
                self.sigma2 = self._take(["sigma2[common]"])
            else:
                self.sigma2 = self._take([f"sigma2[class{c + 1}]" for c in range(s)])

        self.intercepts: List[np.ndarray] = []
        self.slopes: List[Optional[np.ndarray]] = []
        for item, (k, constraint) in enumerate(zip(spec.cardinalities, spec.slope_constraints)):
            name = self.item_names[item]
            self.intercepts.append(
                self._take(
                    [f"beta0[{name},class{c + 1},cat{cat}]" for c in range(s) for cat in range(1, k)]
                ).reshape(s, k - 1)
            )
            if constraint == SlopeConstraint.FREE:
                self.slopes.append(
                    self._take(
                        [f"beta[{name},class{c + 1},cat{cat}]" for c in range(s) for cat in range(1, k)]
                    ).reshape(s, k - 1)
                )
            elif constraint == SlopeConstraint.EQUAL:
                self.slopes.append(self._take([f"beta[{name},all,cat{cat}]" for cat in range(1, k)]))
            else:
                self.slopes.append(None)

    def _take(self, labels: List[str]) -> np.ndarray:
        start = len(self.names)
        self.names.extend(labels)
        return np.arange(start, len(self.names))

    @property
    def size(self) -> int:
        return len(self.names)

    # ----- Pack -----
    def pack(self, params: Parameters, *, log_variances: bool = False) -> np.ndarray:
        """Free parameters of ``params`` as one vector."""
        vector = np.empty(self.size)
        vector[self.theta] = params.theta[1:]
        if self.mu is not None:
            vector[self.mu] = params.mu
            sigma2 = params.sigma2[: len(self.sigma2)]
            vector[self.sigma2] = np.log(sigma2) if log_variances else sigma2
        for item, constraint in enumerate(self.spec.slope_constraints):
            vector[self.intercepts[item]] = params.beta0[item][:, 1:]
            if constraint == SlopeConstraint.FREE:
                vector[self.slopes[item]] = params.beta[item][:, 1:]
            elif constraint == SlopeConstraint.EQUAL:
                vector[self.slopes[item]] = params.beta[item][0, 1:]
        return vector

    # ----- Unpack -----
    def unpack(self, vector: np.ndarray, *, log_variances: bool = False) -> Parameters:
        """Inverse of `pack`; constrained entries are rebuilt from the free ones."""
        vector = np.asarray(vector, dtype=float)
        s = self.spec.s
        theta = np.concatenate([[0.0], vector[self.theta]])
        mu = sigma2 = None
        if self.mu is not None:
            mu = vector[self.mu]
            raw = vector[self.sigma2]
            sigma2 = np.exp(raw) if log_variances else raw
            if len(sigma2) == 1:
                sigma2 = np.repeat(sigma2, s)
        beta0, beta = [], []
        for item, (k, constraint) in enumerate(zip(self.spec.cardinalities, self.spec.slope_constraints)):
            b0 = np.zeros((s, k))
            b0[:, 1:] = vector[self.intercepts[item]]
            b = np.zeros((s, k))
            if constraint == SlopeConstraint.FREE:
                b[:, 1:] = vector[self.slopes[item]]
            elif constraint == SlopeConstraint.EQUAL:
                b[:, 1:] = vector[self.slopes[item]][None, :]
            beta0.append(b0)
            beta.append(b)
        return Parameters(theta=theta, mu=mu, sigma2=sigma2, beta0=tuple(beta0), beta=tuple(beta))

    def variance_positions(self) -> np.ndarray:
        return np.array([], dtype=int) if self.sigma2 is None else self.sigma2
