"""Classical stochastic bath: lattice sites, sampling, Overhauser fields.

Bath nuclear spins are treated as classical projections m_I in
{-7/2 ... +7/2}, quasi-static during a trajectory; their dipolar field is
evaluated at the qubit (driving the induced-dipole physics) and at the
register sites (direct nuclear Zeeman dephasing).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import DIPOLE_PREFACTOR, LATTICE_A, LATTICE_C, MU_N, VanadiumConstants

M_VALUES = np.arange(-3.5, 4.0, 1.0)  # eight projections
M_VARIANCE = float(np.mean(M_VALUES**2))  # 21/4


def lattice_sites(cutoff: float) -> np.ndarray:
    """Nuclear-spin lattice sites of the host within ``cutoff`` of the qubit.

    Sites are generated from the tetragonal (zircon) cell: spin-carrying
    ions at the 4b positions, qubit substituted at a 4a position.  The four
    register sites of the second shell are excluded; the two first-shell
    ions remain (they are bath-by-position).  Positions in Angstrom.
    """
    if cutoff <= 3.9:
        raise ValueError(f"cutoff must exceed the register shell, got {cutoff}")
    a, c = LATTICE_A, LATTICE_C
    v_frac = np.array([
        [0.0, 0.25, 0.375],
        [0.5, 0.25, 0.125],
        [0.5, 0.75, 0.875],
        [0.0, 0.75, 0.625],
    ])
    y_frac = np.array([0.0, 0.75, 0.125])
    n_a = int(np.ceil(cutoff / a)) + 1
    n_c = int(np.ceil(cutoff / c)) + 1
    shifts = np.array(
        [[i, j, k] for i in range(-n_a, n_a + 1)
         for j in range(-n_a, n_a + 1)
         for k in range(-n_c, n_c + 1)]
    )
    cells = (shifts[:, None, :] + v_frac[None, :, :]).reshape(-1, 3)
    cart = (cells - y_frac) * np.array([a, a, c])
    r = np.linalg.norm(cart, axis=1)
    keep = (r > 1e-6) & (r <= cutoff)
    cart, r = cart[keep], r[keep]
    # drop the second shell (register ions, simulated quantum-mechanically)
    register_shell = (r > 3.5) & (r < 4.2)
    return cart[~register_shell]


@dataclass(frozen=True)
class BathSpec:
    """Site list and dynamics parameters of the classical bath."""

    positions: np.ndarray  # (n, 3) Angstrom
    cutoff: float
    jump_rate: float = 0.0  # 1/us per site

    def __post_init__(self):
        if len(self.positions) == 0:
            raise ValueError("bath requires at least one site")
        if np.any(np.linalg.norm(self.positions, axis=1) <= 0):
            raise ValueError("bath sites must have positive distance")


def default_bath_spec(cutoff: float = 25.0, jump_rate: float = 0.0) -> BathSpec:
    return BathSpec(positions=lattice_sites(cutoff), cutoff=cutoff, jump_rate=jump_rate)


@dataclass(frozen=True)
class BathState:
    """Projections m_I per site; field values derive deterministically."""

    m: np.ndarray  # (n,) values in M_VALUES

    def __post_init__(self):
        if not np.all(np.isin(self.m, M_VALUES)):
            raise ValueError("bath projections must be half-integers in [-7/2, 7/2]")


def sample_bath(spec: BathSpec, rng: np.random.Generator) -> BathState:
    """Infinite-temperature sample: each site uniform over 8 projections."""
    return BathState(m=rng.choice(M_VALUES, size=len(spec.positions)))


def field_prefactors(
    spec: BathSpec, vanadium: VanadiumConstants, at: np.ndarray | None = None
) -> np.ndarray:
    """Gauss per unit m_I contributed by each site at point ``at`` (default origin).

    z field of a z-quantized nuclear moment: mu0 mu_N g_vz (3n^2 - 1) / (4 pi r^3);
    with moments stored as rad/us/G the dipole prefactor yields Gauss directly.
    """
    rel = spec.positions if at is None else spec.positions - np.asarray(at)[None, :]
    r = np.linalg.norm(rel, axis=1)
    n = rel[:, 2] / r
    return DIPOLE_PREFACTOR * MU_N * vanadium.g_vz * (3.0 * n**2 - 1.0) / r**3


def overhauser_field(
    spec: BathSpec, state: BathState, vanadium: VanadiumConstants
) -> float:
    """z component of the bath field at the qubit, in Gauss."""
    return float(field_prefactors(spec, vanadium) @ state.m)


def site_fields(
    spec: BathSpec,
    state: BathState,
    vanadium: VanadiumConstants,
    positions: np.ndarray,
) -> np.ndarray:
    """Bath field (Gauss) at each given position (n_pos, 3)."""
    return np.array(
        [field_prefactors(spec, vanadium, at=p) @ state.m for p in np.atleast_2d(positions)]
    )


def field_variance(spec: BathSpec, vanadium: VanadiumConstants,
                   at: np.ndarray | None = None) -> float:
    """Closed-form ensemble variance of the field (Gauss^2)."""
    pref = field_prefactors(spec, vanadium, at=at)
    return float(np.sum(pref**2) * M_VARIANCE)


def evolve_bath(
    spec: BathSpec,
    state: BathState,
    dt: float,
    rng: np.random.Generator,
    jump_rate: float | None = None,
) -> BathState:
    """Poisson-scheduled single-step jumps m -> m +/- 1, reflecting at +/-7/2."""
    rate = spec.jump_rate if jump_rate is None else jump_rate
    if rate < 0:
        raise ValueError(f"jump rate must be non-negative, got {rate}")
    if rate == 0.0 or dt == 0.0:
        return state
    m = state.m.copy()
    n_jumps = rng.poisson(rate * dt, size=m.shape)
    for _ in range(int(n_jumps.max(initial=0))):
        active = n_jumps > 0
        step = np.where(rng.random(m.shape) < 0.5, -1.0, 1.0)
        # reflect at the ladder ends
        step = np.where(m >= 3.5, -1.0, step)
        step = np.where(m <= -3.5, 1.0, step)
        m = np.where(active, m + step, m)
        n_jumps = np.maximum(n_jumps - 1, 0)
    return BathState(m=m)
