"""Per-sample observables recorded by the kernels, and ready-made estimands.

An estimand is any callable mapping an :class:`Observables` batch to an array
of per-sample values.  Functions wrapped with :func:`per_configuration` are
instead called with each :class:`LinkConfiguration` (slow, i.i.d. path only).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels as K


@dataclass(frozen=True)
class Observables:
    ints: np.ndarray
    floats: np.ndarray

    def __len__(self) -> int:
        return self.ints.shape[0]

    @property
    def ell(self) -> np.ndarray:
        return self.ints[:, K.I_ELL]

    @property
    def n_links(self) -> np.ndarray:
        return self.ints[:, K.I_NLINKS]

    @property
    def root_reach(self) -> np.ndarray:
        """Largest generation visited by the loop through ``(root, 0)``."""
        return self.ints[:, K.I_REACH]

    @property
    def connected(self) -> np.ndarray:
        """Whether ``(partner, 0)`` lies on the loop through ``(root, 0)``."""
        return self.ints[:, K.I_CONN].astype(bool)

    @property
    def event(self) -> np.ndarray:
        return self.ints[:, K.I_EVENT]

    @property
    def lambda_root(self) -> np.ndarray:
        return self.floats[:, K.F_LAM_ROOT]

    @property
    def lambda_child(self) -> np.ndarray:
        return self.floats[:, K.F_LAM_CHILD]

    @property
    def subtree_edges(self) -> np.ndarray:
        return self.ints[:, K.I_TEDGES]

    def subtree_size(self, k: int) -> np.ndarray:
        if not 0 <= k < K.KMAX:
            raise ValueError(f"generation sizes are recorded for k < {K.KMAX}")
        return self.ints[:, K.I_V0 + k]

    def boundary_size(self, k: int) -> np.ndarray:
        if not 0 <= k < K.KMAX:
            raise ValueError(f"boundary sizes are recorded for k < {K.KMAX}")
        return self.ints[:, K.I_E0 + k]


Estimand = Callable[[Observables], np.ndarray]


def per_configuration(fn):
    """Mark ``fn(config) -> float`` as a configuration-level estimand."""
    fn.per_configuration = True
    return fn


def is_per_configuration(fn) -> bool:
    return bool(getattr(fn, "per_configuration", False))


def constant_one(o: Observables) -> np.ndarray:
    return np.ones(len(o))


def ell_equals(k: int) -> Estimand:
    return lambda o: (o.ell == k).astype(float)


def reaches(m: int) -> Estimand:
    return lambda o: (o.root_reach >= m).astype(float)


def connected(o: Observables) -> np.ndarray:
    return o.connected.astype(float)


def no_links(o: Observables) -> np.ndarray:
    return (o.n_links == 0).astype(float)


def link_count(o: Observables) -> np.ndarray:
    return o.n_links.astype(float)


def event_in(*codes: int) -> Estimand:
    return lambda o: np.isin(o.event, codes).astype(float)


def inverse_weight(theta: float) -> Estimand:
    """``theta ** -ell``; its weighted mean is ``1/Z``."""
    return lambda o: np.power(float(theta), -o.ell.astype(float))
