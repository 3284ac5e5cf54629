"""Composite central-qubit / nuclear-register model and Hamiltonian builders.

The simulated Hilbert space is  qubit (x) register ions (x) optional
"simulated bath" ions.  Each nuclear ion is represented in one of three
spaces (the +/- doublet degeneracy is collapsed to one level per doublet):

- ``reduced``: the two levels of the highest transition, [|5/2|, |7/2|]
- ``mixed3``:  [|3/2|, |5/2|, |7/2|] (single-excitation shelving runs)
- ``full``:    all eight projections |7/2> ... |-7/2>

Reduced/mixed operators are projections of the full spin-7/2 matrices, so
ladder factors such as the sqrt(7) matrix element emerge rather than being
inserted by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .constants import (
    DIPOLE_PREFACTOR,
    MU_N,
    IonSite,
    QubitConstants,
    RegisterGeometry,
    VanadiumConstants,
)
from .spinops import embed, kron, qubit_operators, spin_operators

REPRESENTATIONS = ("reduced", "mixed3", "full")

# projections kept per representation, in basis order (matching |m| labels)
_KEPT_M = {
    "reduced": (2.5, 3.5),
    "mixed3": (1.5, 2.5, 3.5),
    "full": (3.5, 2.5, 1.5, 0.5, -0.5, -1.5, -2.5, -3.5),
}


@dataclass(frozen=True)
class SiteCoupling:
    """Effective second-order couplings of one ion to the qubit (per Gauss)."""

    j_x: float
    j_y: float
    j_z: float

    @property
    def a_x(self) -> float:
        return float(np.hypot(self.j_x, self.j_y))

    @property
    def a_z(self) -> float:
        return self.j_z


@dataclass(frozen=True)
class CouplingSet:
    """Homogeneous register couplings plus the drive amplification factors."""

    a_x: float  # rad/us/G, identical across register ions
    a_z: float  # rad/us/G (signed)
    amp_x: float  # |A_x|, dimensionless transverse drive amplification
    amp_z: float  # A_z, dimensionless Knight-field amplification
    per_site: tuple[SiteCoupling, ...]


def site_coupling(
    r: float, l: float, m: float, n: float,
    qubit: QubitConstants, vanadium: VanadiumConstants,
) -> SiteCoupling:
    """Second-order qubit-ion couplings J_{x,y,z} for one lattice site."""
    if r <= 0:
        raise ValueError(f"ion distance must be positive, got r={r}")
    gz2 = qubit.gamma_z**2
    base = DIPOLE_PREFACTOR * MU_N * gz2 / (r**3 * qubit.omega01)
    return SiteCoupling(
        j_x=3.0 * base * vanadium.g_vx * l * n,
        j_y=3.0 * base * vanadium.g_vx * m * n,
        j_z=base * vanadium.g_vz * (3.0 * n**2 - 1.0),
    )


def amplification_factors(
    r: float, l: float, m: float, n: float, qubit: QubitConstants
) -> tuple[float, float]:
    """(|A_x|, A_z): dimensionless field amplification at one site."""
    if r <= 0:
        raise ValueError(f"ion distance must be positive, got r={r}")
    gz2 = qubit.gamma_z**2
    base = DIPOLE_PREFACTOR * gz2 / (2.0 * r**3 * qubit.omega01)
    lm = np.hypot(l, m)
    return 3.0 * base * lm * abs(n), base * (1.0 - 3.0 * n**2)


def coupling_constants(
    geometry: RegisterGeometry,
    qubit: QubitConstants,
    vanadium: VanadiumConstants,
) -> CouplingSet:
    """Register couplings from the tabulated shell geometry.

    The four register ions are equidistant with equal |l n|, |m n| so a_x
    and a_z come out site-independent; this is checked rather than assumed.
    """
    sites = geometry.register_ions
    per = tuple(site_coupling(s.r, s.l, s.m, s.n, qubit, vanadium) for s in sites)
    ax = np.array([c.a_x for c in per])
    az = np.array([c.a_z for c in per])
    if np.ptp(ax) > 1e-12 * ax.mean() or np.ptp(np.abs(az)) > 1e-12 * np.abs(az).mean():
        raise ValueError("register couplings are not homogeneous across ions")
    s0 = sites[0]
    amp_x, amp_z = amplification_factors(s0.r, s0.l, s0.m, s0.n, qubit)
    return CouplingSet(
        a_x=float(ax[0]), a_z=float(az[0]), amp_x=float(amp_x), amp_z=float(amp_z),
        per_site=per,
    )


@dataclass(frozen=True)
class SimBathIon:
    """A driveable bath ion simulated quantum-mechanically (spectroscopy)."""

    position: tuple[float, float, float]  # Angstrom

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.position))

    @property
    def cosines(self) -> tuple[float, float, float]:
        r = self.r
        return tuple(p / r for p in self.position)


def _projected_ops(representation: str) -> dict[str, np.ndarray]:
    full = spin_operators(3.5)
    kept = _KEPT_M[representation]
    idx = [int(round(3.5 - m)) for m in kept]  # positions in |7/2>..|-7/2>
    sel = np.ix_(idx, idx)
    return {
        "ix": full.ix[sel],
        "iy": full.iy[sel],
        "iz": full.iz[sel],
        "iz2": (full.iz @ full.iz)[sel],
        "identity": np.eye(len(idx), dtype=complex),
    }


@dataclass(frozen=True)
class SpinSystem:
    """Immutable fully-specified model; Hamiltonian builders are pure.

    ``register_mask`` selects which of the four register ions are present
    (supporting depolarization-by-removal sampling).  ``sim_bath`` lists
    additional quantum bath ions with the bulk quadrupole constant.
    """

    qubit: QubitConstants = field(default_factory=QubitConstants)
    vanadium: VanadiumConstants = field(default_factory=VanadiumConstants)
    geometry: RegisterGeometry = field(default_factory=RegisterGeometry)
    representation: str = "reduced"
    register_mask: tuple[bool, ...] = (True, True, True, True)
    sim_bath: tuple[SimBathIon, ...] = ()
    include_nz: bool = True
    include_ndd: bool = True
    include_edd: bool = True
    include_knight: bool = True

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(
                f"unknown representation {self.representation!r}; "
                f"expected one of {REPRESENTATIONS}"
            )
        if len(self.register_mask) != 4:
            raise ValueError("register_mask must have four entries")

    # -- structure ---------------------------------------------------------

    @property
    def register_sites(self) -> tuple[IonSite, ...]:
        sites = self.geometry.register_ions
        return tuple(s for s, keep in zip(sites, self.register_mask) if keep)

    @property
    def n_register(self) -> int:
        return sum(self.register_mask)

    @property
    def n_ions(self) -> int:
        return self.n_register + len(self.sim_bath)

    @cached_property
    def couplings(self) -> CouplingSet:
        return coupling_constants(self.geometry, self.qubit, self.vanadium)

    @cached_property
    def site_dim(self) -> int:
        return len(_KEPT_M[self.representation])

    @cached_property
    def dims(self) -> tuple[int, ...]:
        return (2,) + (self.site_dim,) * self.n_ions

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def with_register(self, mask: tuple[bool, ...]) -> "SpinSystem":
        return replace(self, register_mask=tuple(bool(b) for b in mask))

    # -- embedded operators --------------------------------------------------

    @cached_property
    def _local(self) -> dict[str, np.ndarray]:
        return _projected_ops(self.representation)

    @cached_property
    def yb(self) -> dict[str, np.ndarray]:
        q = qubit_operators()
        dims = self.dims
        return {
            name: embed(getattr(q, attr), 0, dims)
            for name, attr in [
                ("sz", "sz"), ("sx", "sx"), ("sy", "sy"),
                ("p0", "p0"), ("p1", "p1"),
                ("raising", "raising"), ("lowering", "lowering"),
            ]
        }

    def ion_op(self, which: str, ion: int) -> np.ndarray:
        """Embedded single-ion operator; ion indexes register then sim-bath."""
        return embed(self._local[which], 1 + ion, self.dims)

    @cached_property
    def _ion_couplings(self) -> list[tuple[float, float]]:
        """(a_x, a_z) per simulated ion, register first then sim bath."""
        cs = self.couplings
        out = [(cs.a_x, cs.a_z)] * self.n_register
        for ion in self.sim_bath:
            l, m, n = ion.cosines
            c = site_coupling(ion.r, l, m, n, self.qubit, self.vanadium)
            out.append((c.a_x, c.a_z))
        return out

    @cached_property
    def _quadrupole(self) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.n_register):
            h += self.vanadium.q_register * self.ion_op("iz2", i)
        for j in range(len(self.sim_bath)):
            h += self.vanadium.q_bath * self.ion_op("iz2", self.n_register + j)
        return h

    @cached_property
    def _interaction_x(self) -> np.ndarray:
        """S_z (x) sum_i a_x I_x^(i)  (multiplied by B when used)."""
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for i, (ax, _) in enumerate(self._ion_couplings):
            h += ax * self.ion_op("ix", i)
        return self.yb["sz"] @ h

    @cached_property
    def _interaction_z(self) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for i, (_, az) in enumerate(self._ion_couplings):
            h += az * self.ion_op("iz", i)
        return self.yb["sz"] @ h

    @cached_property
    def _register_dipole(self) -> np.ndarray:
        """Nuclear dipole-dipole interaction among simulated ions."""
        positions = [
            np.array([s.r * s.l, s.r * s.m, s.r * s.n]) for s in self.register_sites
        ] + [np.array(b.position) for b in self.sim_bath]
        g = np.array([self.vanadium.g_vx, self.vanadium.g_vx, self.vanadium.g_vz])
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(len(positions)):
            ops_i = [g[0] * self.ion_op("ix", i), g[1] * self.ion_op("iy", i),
                     g[2] * self.ion_op("iz", i)]
            for j in range(i + 1, len(positions)):
                rij = positions[j] - positions[i]
                r = np.linalg.norm(rij)
                u = rij / r
                ops_j = [g[0] * self.ion_op("ix", j), g[1] * self.ion_op("iy", j),
                         g[2] * self.ion_op("iz", j)]
                pref = DIPOLE_PREFACTOR * MU_N**2 / r**3
                dot = sum(a @ b for a, b in zip(ops_i, ops_j))
                proj_i = sum(ui * a for ui, a in zip(u, ops_i))
                proj_j = sum(uj * b for uj, b in zip(u, ops_j))
                h += pref * (dot - 3.0 * (proj_i @ proj_j))
        return h

    @cached_property
    def _enhanced_ising(self) -> np.ndarray:
        """Qubit-mediated Ising coupling among register ions."""
        inner = []
        for s in self.register_sites:
            inner.append(
                (3.0 * s.n**2 - 1.0)
                * DIPOLE_PREFACTOR * MU_N * self.qubit.gamma_z
                * self.vanadium.g_vz / s.r**3
            )
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for i, ci in enumerate(inner):
            for j, cj in enumerate(inner):
                h += (ci * cj / (2.0 * self.qubit.omega01)) * (
                    self.ion_op("iz", i) @ self.ion_op("iz", j)
                )
        return self.yb["sz"] @ h

    # -- Hamiltonian builders ----------------------------------------------

    def full_hamiltonian(self, b_oh: float, b_rf: float) -> np.ndarray:
        """Detuning + quadrupole + field-induced interaction, Hermitian.

        ``include_knight=False`` drops only the Overhauser part of the
        Ising interaction (the qubit Knight field seen by the ions); the
        RF-driven part always stays.
        """
        b_tot = b_oh + b_rf
        detuning = self.qubit.gamma_z**2 * b_tot**2 / (2.0 * self.qubit.omega01)
        h = detuning * self.yb["sz"] + self._quadrupole
        h = h + b_tot * self._interaction_x
        z_field = b_rf + (b_oh if self.include_knight else 0.0)
        h = h + z_field * self._interaction_z
        return h

    def extra_terms(self, site_fields: np.ndarray | None) -> np.ndarray:
        """Optional terms: site-resolved nuclear Zeeman, dipole, enhanced Ising."""
        h = np.zeros((self.dim, self.dim), dtype=complex)
        if self.include_nz and site_fields is not None:
            if len(site_fields) != self.n_ions:
                raise ValueError(
                    f"need {self.n_ions} site fields, got {len(site_fields)}"
                )
            for i, b in enumerate(site_fields):
                h += MU_N * self.vanadium.g_vz * b * self.ion_op("iz", i)
        if self.include_ndd:
            h = h + self._register_dipole
        if self.include_edd:
            h = h + self._enhanced_ising
        return h

    def hamiltonian(
        self, b_oh: float, b_rf: float, site_fields: np.ndarray | None = None
    ) -> np.ndarray:
        """Full model Hamiltonian for one piecewise-constant segment."""
        return self.full_hamiltonian(b_oh, b_rf) + self.extra_terms(site_fields)

    def knight_field_hamiltonian(self, b_oh: float, yb_state: str) -> np.ndarray:
        """Analytic Knight-field operator for a fixed qubit label '0g'/'1g'."""
        if yb_state not in ("0g", "1g"):
            raise ValueError(f"yb_state must be '0g' or '1g', got {yb_state!r}")
        sign = -1.0 if yb_state == "1g" else 1.0
        coeff = sign * self.vanadium.g_vz * MU_N * b_oh * self.couplings.amp_z
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(self.n_register):
            h += coeff * self.ion_op("iz", i)
        return h

    def drive_hamiltonian(self, b_osc: float, phase: float, t: float) -> np.ndarray:
        """Instantaneous Hamiltonian under a sinusoidal z-directed RF drive.

        The drive enters exactly like the square-wave field: an oscillating
        qubit dipole produces the amplified transverse field at each ion.
        """
        b_inst = b_osc * np.sin(self.vanadium.omega_c * t + phase)
        return self.full_hamiltonian(0.0, b_inst)

    # -- register states and projectors --------------------------------------

    def ion_level_index(self, m_abs: float) -> int:
        kept = _KEPT_M[self.representation]
        if m_abs not in kept:
            raise ValueError(f"|m|={m_abs} not in representation {self.representation}")
        return kept.index(m_abs)

    def product_state(self, yb: int, ion_levels: list[int] | tuple[int, ...]) -> np.ndarray:
        """|yb> (x) |levels...> as a normalized state vector."""
        if len(ion_levels) != self.n_ions:
            raise ValueError(f"need {self.n_ions} ion levels, got {len(ion_levels)}")
        psi = np.zeros(2, dtype=complex)
        psi[yb] = 1.0
        for d, lvl in zip(self.dims[1:], ion_levels):
            v = np.zeros(d, dtype=complex)
            v[lvl] = 1.0
            psi = np.kron(psi, v)
        return psi

    def zero_v_state(self, yb: int) -> np.ndarray:
        """|yb> with every register ion in |7/2| (and sim bath in |7/2|)."""
        down = self.ion_level_index(3.5)
        return self.product_state(yb, [down] * self.n_ions)

    def w_state(self, yb: int, upper: float = 2.5, lower: float = 3.5) -> np.ndarray:
        """|yb> (x) single-excitation W state over the register ions."""
        up = self.ion_level_index(upper)
        down = self.ion_level_index(lower)
        psi = np.zeros(self.dim, dtype=complex)
        for i in range(self.n_register):
            levels = [down] * self.n_ions
            levels[i] = up
            psi += self.product_state(yb, levels)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValueError("W state undefined with zero register ions")
        return psi / norm

    def projector_yb(self, yb: int) -> np.ndarray:
        return self.yb["p1"] if yb == 1 else self.yb["p0"]

    def ion_population_op(self, m_abs: float) -> np.ndarray:
        """Mean population of level |m_abs| across register ions."""
        idx = self.ion_level_index(m_abs)
        h = np.zeros((self.dim, self.dim), dtype=complex)
        local = np.zeros((self.site_dim, self.site_dim), dtype=complex)
        local[idx, idx] = 1.0
        for i in range(self.n_register):
            h += embed(local, 1 + i, self.dims)
        return h / max(self.n_register, 1)
