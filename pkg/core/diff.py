# core/diff.py
import numpy as np
from dataclasses import dataclass

from .errors import NumericalError
from .grids import phase_l2_norm
from .models import SleState


@dataclass
class StateDiff:
    """Discrete l2 distances between two states on identical grids."""
    err_psi: float
    err_rho: float
    err_mu: float
    rel_mu: float

    def row(self) -> tuple[float, float, float]:
        return (self.err_psi, self.err_rho, self.err_mu)


def x_l2(values: np.ndarray, dx: float) -> float:
    return float(np.sqrt(dx * np.sum(np.abs(values) ** 2)))


def diff_states(state: SleState, reference: SleState) -> StateDiff:
    """
    Compare state against reference:
    - err_psi: ||psi - psi_ref|| in the dx-weighted l2 norm
    - err_rho: same for |psi|^2
    - err_mu: sqrt(dy deta sum |mu - mu_ref|^2)
    - rel_mu: err_mu / ||mu_ref||
    """
    if state.psi.grid != reference.psi.grid:
        raise NumericalError("cannot compare wave fields on different x-grids")
    if state.mu.grid != reference.mu.grid:
        raise NumericalError("cannot compare phase densities on different phase grids")

    dx = state.psi.grid.dx
    psi, ref = state.psi.values, reference.psi.values
    err_mu = phase_l2_norm(state.mu.values - reference.mu.values, state.mu.grid)
    norm_mu = phase_l2_norm(reference.mu.values, reference.mu.grid)
    return StateDiff(
        err_psi=x_l2(psi - ref, dx),
        err_rho=x_l2(np.abs(psi) ** 2 - np.abs(ref) ** 2, dx),
        err_mu=err_mu,
        rel_mu=err_mu / norm_mu if norm_mu > 0.0 else err_mu,
    )
