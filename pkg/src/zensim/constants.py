"""Physical constants and device parameters.

Internal unit system (all modules assume it):

- angular frequency: rad/us (energies with hbar = 1)
- time: us
- magnetic field: Gauss
- distance: Angstrom

Magnetic moments are stored as gyromagnetic-style factors in rad/us/G so
that ``moment * B`` is directly an angular frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

# Bohr / nuclear magneton over hbar, converted from rad/s/T to rad/us/G.
MU_B = 8.7941004e0  # rad/us/G  (= 2pi x 1.399625 MHz/G)
MU_N = 4.7894243e-3  # rad/us/G  (= 2pi x 762.259 Hz/G)

# mu0/(4 pi) * hbar expressed so that  DIPOLE_PREFACTOR * g1 * g2 / r^3
# (g's in rad/us/G, r in Angstrom) is an angular frequency in rad/us.
# Numerically equal to hbar[J s] * 1e37.
DIPOLE_PREFACTOR = 1.054571817e3  # G^2 us / Angstrom^3


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed CODATA-derived magneton values in internal units."""

    mu_b: float = MU_B
    mu_n: float = MU_N
    dipole_prefactor: float = DIPOLE_PREFACTOR


@dataclass(frozen=True)
class QubitConstants:
    """Central-qubit parameters (zero-field hyperfine clock transition).

    ``gamma_z`` is the longitudinal gyromagnetic ratio |g_z| mu_B; it is
    derived rather than stored so the g-tensor stays the single source.
    """

    omega01: float = TWO_PI * 675.0  # rad/us (675 MHz)
    g_z: float = -6.08
    g_x: float = 0.85

    @property
    def gamma_z(self) -> float:
        return abs(self.g_z) * MU_B


@dataclass(frozen=True)
class VanadiumConstants:
    """Nuclear spin-7/2 register/bath parameters.

    The quadrupole constants are stored as the primary quantities; the
    three transition frequencies of the  Q Iz^2  ladder follow as
    (2Q, 4Q, 6Q).  Defaults are fixed by the observed transitions
    991 kHz (register) and 1028 kHz (bath), i.e. Q/2pi = 165.17 kHz and
    171.33 kHz (nominally quoted as 165 / 171.3 kHz).
    """

    q_register: float = TWO_PI * 0.991 / 6.0  # rad/us
    q_bath: float = TWO_PI * 1.028 / 6.0  # rad/us
    g_vx: float = 0.6
    g_vz: float = 1.6  # uncertain up to ~25%; overridable via config

    @property
    def omega_a(self) -> float:
        return 2.0 * self.q_register

    @property
    def omega_b(self) -> float:
        return 4.0 * self.q_register

    @property
    def omega_c(self) -> float:
        return 6.0 * self.q_register

    @property
    def omega_c_bath(self) -> float:
        return 6.0 * self.q_bath

    def transition(self, name: str) -> float:
        """Angular frequency of a named register transition ('a'|'b'|'c')."""
        try:
            return {"a": self.omega_a, "b": self.omega_b, "c": self.omega_c}[name]
        except KeyError:
            raise ValueError(f"unknown transition {name!r}; expected 'a', 'b' or 'c'")


@dataclass(frozen=True)
class IonSite:
    """One lattice ion relative to the central qubit."""

    index: int
    shell: int
    r: float  # Angstrom
    l: float  # x direction cosine
    m: float  # y direction cosine
    n: float  # z direction cosine
    classification: str  # 'register' or 'bath-by-position'


# Positions of the six nearest nuclear-spin ions (r in Angstrom, direction
# cosines of the displacement vector).  Ions 1-2 sit on the z axis and only
# couple through Ising terms; ions 3-6 form the equidistant register shell.
NEAREST_IONS: tuple[IonSite, ...] = (
    IonSite(1, 1, 3.1, 0.0, 0.0, -1.0, "bath-by-position"),
    IonSite(2, 1, 3.1, 0.0, 0.0, 1.0, "bath-by-position"),
    IonSite(3, 2, 3.9, 0.0, -0.91, 0.40, "register"),
    IonSite(4, 2, 3.9, 0.0, 0.91, 0.40, "register"),
    IonSite(5, 2, 3.9, -0.91, 0.0, -0.40, "register"),
    IonSite(6, 2, 3.9, 0.91, 0.0, -0.40, "register"),
)


@dataclass(frozen=True)
class RegisterGeometry:
    """The tabulated near-shell geometry; the single source of positions."""

    ions: tuple[IonSite, ...] = NEAREST_IONS

    @property
    def register_ions(self) -> tuple[IonSite, ...]:
        return tuple(i for i in self.ions if i.classification == "register")

    @property
    def bath_ions(self) -> tuple[IonSite, ...]:
        return tuple(i for i in self.ions if i.classification != "register")

    def positions(self) -> np.ndarray:
        """Cartesian positions (Angstrom), shape (n_ions, 3)."""
        out = np.array([[i.r * i.l, i.r * i.m, i.r * i.n] for i in self.ions])
        return out


# Tetragonal (zircon) lattice constants of the host crystal; used only to
# generate bath sites beyond the tabulated shells.  c/2 = 3.14, a/2 = 3.56
# and c/4 = 1.57 reproduce the tabulated shells to the table's rounding.
LATTICE_A = 7.1183  # Angstrom
LATTICE_C = 6.2893  # Angstrom
