"""Piecewise-constant propagation, Monte Carlo averaging, Floquet checks.

The engine never applies a rotating-wave approximation: one sequence
period is compiled into free-evolution propagators (Hamiltonian constant
per interval) interleaved with pulse unitaries, and repeated periods are
matrix powers.  Observables are recorded stroboscopically at period
boundaries unless a caller asks for finer recording.
"""

from __future__ import annotations

import pickle
import os
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .bath import BathSpec, BathState, overhauser_field, site_fields
from .sequences import PulseSequence
from .spinops import eig_propagator_factory, is_unitary, propagator
from .system import SpinSystem


@dataclass(frozen=True)
class FieldSample:
    """Quasi-static classical fields for one trajectory."""

    b_oh: float  # Gauss at the qubit
    site: np.ndarray | None = None  # Gauss at each simulated ion


ZERO_FIELDS = FieldSample(b_oh=0.0, site=None)


def simulated_ion_positions(sys: SpinSystem) -> np.ndarray:
    pos = [
        np.array([s.r * s.l, s.r * s.m, s.r * s.n]) for s in sys.register_sites
    ] + [np.array(b.position) for b in sys.sim_bath]
    return np.array(pos)


def fields_from_bath(sys: SpinSystem, spec: BathSpec, state: BathState) -> FieldSample:
    return FieldSample(
        b_oh=overhauser_field(spec, state, sys.vanadium),
        site=site_fields(spec, state, sys.vanadium, simulated_ion_positions(sys)),
    )


@dataclass(frozen=True)
class Trajectory:
    """Named observable series along one simulated evolution."""

    times: np.ndarray
    observables: dict[str, np.ndarray]


@dataclass(frozen=True)
class EnsembleResult:
    """Monte Carlo mean and standard error per observable."""

    times: np.ndarray
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    repetitions: int
    seed: int


# -- period compilation -------------------------------------------------------


def _compile_segments(seq: PulseSequence):
    """Ordered ('free', t0, dt) / ('pulse', Pulse) events over one period.

    Instantaneous pulses fire at their nominal offsets.  Finite-width
    pulses consume real time centered on the offset (clamped to the period
    edges), shrinking the neighbouring free intervals; the period length
    is preserved.
    """
    pulses = sorted(seq.pulses, key=lambda p: p.offset)  # stable for ties
    if all(p.duration == 0.0 for p in pulses):
        events = []
        cursor = 0.0
        for p in pulses:
            if p.offset > cursor + 1e-12:
                events.append(("free", cursor, p.offset - cursor))
                cursor = p.offset
            events.append(("pulse", p, 0.0))
        if seq.period > cursor + 1e-12:
            events.append(("free", cursor, seq.period - cursor))
        return events
    # finite widths: group by offset, center each group on its slot
    groups: dict[float, list] = {}
    for p in pulses:
        groups.setdefault(round(p.offset, 12), []).append(p)
    events = []
    cursor = 0.0
    for t_b in sorted(groups):
        group = groups[t_b]
        width = sum(p.duration for p in group)
        start = min(max(t_b - width / 2.0, cursor), seq.period - width)
        if start > cursor + 1e-12:
            events.append(("free", cursor, start - cursor))
        t = start
        for p in group:
            events.append(("pulse", p, t))
            t += p.duration
        cursor = t
    if cursor < seq.period - 1e-12:
        events.append(("free", cursor, seq.period - cursor))
    return events


def _rf_value(seq: PulseSequence, t: float) -> float:
    rf = seq.rf
    if rf is None:
        return 0.0
    if rf.kind == "square":
        return rf.amplitude * rf.square_sign(t, seq.period)
    raise ValueError("square-wave evaluation requested for non-square RF")


_AXIS_ATTR = {"x": "sx", "y": "sy", "-x": "sx", "-y": "sy"}


def period_propagator(
    sys: SpinSystem, seq: PulseSequence, fields: FieldSample
) -> np.ndarray:
    """Exact propagator of one full period for fixed classical fields."""
    if seq.rf is not None and seq.rf.kind == "sine":
        stepper = SineDriveStepper(sys, seq, fields)
        return stepper.propagator(0.0, seq.period)
    u = np.eye(sys.dim, dtype=complex)
    h_cache: dict[float, np.ndarray] = {}
    eye_rest = np.eye(sys.dim // 2)

    def free_h(b_rf: float) -> np.ndarray:
        key = round(b_rf, 15)
        if key not in h_cache:
            h = sys.hamiltonian(fields.b_oh, b_rf, fields.site)
            if seq.drive_rabi != 0.0:
                h = h + seq.drive_rabi * sys.yb["sy"]
            h_cache[key] = h
        return h_cache[key]

    for kind, a, b in _compile_segments(seq):
        if kind == "free":
            t0, dt = a, b
            u = propagator(free_h(_rf_value(seq, t0 + dt / 2.0)), dt) @ u
        else:
            pulse, t_start = a, b
            if pulse.duration > 0.0:
                rabi = pulse.angle / pulse.duration
                sign = -1.0 if pulse.axis.startswith("-") else 1.0
                h = sys.hamiltonian(
                    fields.b_oh, _rf_value(seq, t_start), fields.site
                )
                h = h + sign * rabi * sys.yb[_AXIS_ATTR[pulse.axis]]
                u = propagator(h, pulse.duration) @ u
            else:
                u = np.kron(pulse.unitary(), eye_rest) @ u
    return u


class SineDriveStepper:
    """Split-operator integrator for a sinusoidal z-directed RF drive.

    H(t) = H_static + b(t) V + d(t) S_z with V the field-coupled operator;
    V and S_z commute, so each step Trotterizes only [H_static, time-dep]
    with error O(dt^3).  Diagonalizations happen once per trajectory.
    """

    def __init__(self, sys: SpinSystem, seq: PulseSequence, fields: FieldSample,
                 steps_per_cycle: int = 64):
        rf = seq.rf
        if rf is None or rf.kind != "sine":
            raise ValueError("SineDriveStepper requires a sine RF waveform")
        self.sys = sys
        self.seq = seq
        self.rf = rf
        self.fields = fields
        self.dt = (2.0 * np.pi / rf.omega) / steps_per_cycle
        h_static = sys.hamiltonian(fields.b_oh, 0.0, fields.site)
        if seq.drive_rabi != 0.0:
            h_static = h_static + seq.drive_rabi * sys.yb["sy"]
        self._u_static = eig_propagator_factory(h_static)
        self._half_cache: dict[float, np.ndarray] = {}
        v = sys._interaction_x + sys._interaction_z
        self._v_evals, self._v_vecs = np.linalg.eigh(v)
        self._v_vecs_h = self._v_vecs.conj().T
        self._sz_diag = np.real(np.diag(sys.yb["sz"]))
        self._gz2 = sys.qubit.gamma_z**2 / (2.0 * sys.qubit.omega01)
        self._events = sorted(
            [(p.offset, "pulse", p) for p in seq.pulses]
            + [(t, "flip", None) for t in rf.phase_flips],
            key=lambda e: e[0],
        )
        self._eye_rest = np.eye(sys.dim // 2)

    def _half_step(self, dt: float) -> np.ndarray:
        key = round(dt, 15)
        if key not in self._half_cache:
            self._half_cache[key] = self._u_static(dt / 2.0)
        return self._half_cache[key]

    def _step_u(self, t_mid: float, phase: float, dt: float) -> np.ndarray:
        b = self.rf.amplitude * np.sin(self.rf.omega * t_mid + phase)
        d = self._gz2 * ((self.fields.b_oh + b) ** 2 - self.fields.b_oh**2)
        uh = self._half_step(dt)
        core = (self._v_vecs * np.exp(-1j * b * self._v_evals * dt)) @ self._v_vecs_h
        core = core * np.exp(-1j * d * self._sz_diag * dt)[:, None]
        return uh @ core @ uh

    def propagator(self, t0: float, t1: float) -> np.ndarray:
        u = np.eye(self.sys.dim, dtype=complex)

        def apply(mat, _t):
            nonlocal u
            u = mat @ u

        self._run(t0, t1, apply)
        return u

    def evolve(self, psi0: np.ndarray, record_times: np.ndarray, ops: dict):
        """Evolve from t=0, recording expectation values at the sorted times."""
        out = {name: np.empty(len(record_times)) for name in ops}
        state = {"psi": psi0.astype(complex), "idx": 0}

        def apply(mat, t_now):
            state["psi"] = mat @ state["psi"]
            while (
                state["idx"] < len(record_times)
                and record_times[state["idx"]] <= t_now + 1e-9
            ):
                for name, op in ops.items():
                    out[name][state["idx"]] = np.real(
                        np.vdot(state["psi"], op @ state["psi"])
                    )
                state["idx"] += 1

        apply(np.eye(self.sys.dim), 0.0)
        self._run(0.0, float(record_times[-1]), apply)
        return out

    def _run(self, t0: float, t1: float, apply):
        phase = self.rf.phase
        events = [e for e in self._events if t0 - 1e-12 <= e[0] <= t1 + 1e-12]
        for e in self._events:
            if e[0] < t0 - 1e-12 and e[1] == "flip":
                phase += np.pi
        t = t0
        idx = 0
        while True:
            t_next = t1
            if idx < len(events) and events[idx][0] < t1 - 1e-12:
                t_next = max(events[idx][0], t)
            while t < t_next - 1e-12:
                step = min(self.dt, t_next - t)
                apply(self._step_u(t + step / 2.0, phase, step), t + step)
                t += step
            if idx >= len(events):
                if t >= t1 - 1e-12:
                    break
                continue
            while idx < len(events) and events[idx][0] <= t + 1e-9:
                _, kind, payload = events[idx]
                if kind == "pulse":
                    apply(np.kron(payload.unitary(), self._eye_rest), t)
                else:
                    phase += np.pi
                idx += 1
            if t >= t1 - 1e-12 and idx >= len(events):
                break


def propagate_sequence(
    sys: SpinSystem,
    seq: PulseSequence,
    fields: FieldSample,
    psi0: np.ndarray,
    observables: dict[str, np.ndarray],
) -> Trajectory:
    """Stroboscopic evolution over ``seq.repetitions`` periods.

    Expectation values of the given operators are recorded at every period
    boundary, including t = 0.
    """
    if psi0.shape[0] != sys.dim:
        raise ValueError(
            f"state dimension {psi0.shape[0]} does not match system dim {sys.dim}"
        )
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"initial state norm deviates from 1 by {abs(norm - 1):.2e}")
    u = period_propagator(sys, seq, fields)
    m = seq.repetitions
    times = np.arange(m + 1) * seq.period
    psi = psi0.astype(complex)
    series = {name: np.empty(m + 1) for name in observables}
    for step in range(m + 1):
        for name, op in observables.items():
            series[name][step] = np.real(np.vdot(psi, op @ psi))
        if step < m:
            psi = u @ psi
    return Trajectory(times=times, observables=series)


# -- Monte Carlo --------------------------------------------------------------


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Counter-style per-repetition stream: identical for any worker layout."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, rep))))


def resolve_workers(requested: int | None = None) -> int:
    """Worker count from ZENSIM_THREADS (0 = auto); defaults to serial."""
    env = os.environ.get("ZENSIM_THREADS", "").strip()
    if requested is None:
        if not env:
            return 1
        requested = int(env)
    if requested == 0:
        return os.cpu_count() or 1
    return max(1, requested)


def _run_chunk(args):
    fn, seed, reps = args
    return [fn(rep_rng(seed, r)) for r in reps]


def monte_carlo(fn, reps: int, seed: int, workers: int | None = None) -> EnsembleResult:
    """Average ``fn(rng) -> Trajectory`` over deterministic per-rep streams.

    Bit-identical for a given (seed, reps) regardless of worker count:
    every repetition owns stream (seed, rep) and the reduction runs in
    repetition order.
    """
    if reps < 1:
        raise ValueError(f"repetition count must be >= 1, got {reps}")
    n_workers = resolve_workers(workers)
    parallel = n_workers > 1 and reps > 1
    if parallel:
        try:
            pickle.dumps(fn)
        except Exception:
            parallel = False
    if parallel:
        chunks = np.array_split(np.arange(reps), min(n_workers, reps))
        with get_context("fork").Pool(len(chunks)) as pool:
            per_chunk = pool.map(_run_chunk, [(fn, seed, list(c)) for c in chunks])
        results = [traj for chunk in per_chunk for traj in chunk]
    else:
        results = [fn(rep_rng(seed, r)) for r in range(reps)]
    times = results[0].times
    mean, stderr = {}, {}
    for name in results[0].observables:
        stack = np.stack([t.observables[name] for t in results], axis=0)
        mean[name] = stack.mean(axis=0)
        if reps > 1:
            stderr[name] = stack.std(axis=0, ddof=1) / np.sqrt(reps)
        else:
            stderr[name] = np.zeros_like(stack[0])
    return EnsembleResult(times=times, mean=mean, stderr=stderr,
                          repetitions=reps, seed=seed)


# -- imperfect polarization ----------------------------------------------------


@dataclass(frozen=True)
class RegisterInit:
    """Sampled register initialization: removal mask + residual excitation."""

    mask: tuple[bool, ...]
    excited: tuple[bool, ...]


def imperfect_initial_state(
    eps1: float, eps2: float, rng: np.random.Generator, n_sites: int = 4
) -> RegisterInit:
    """Sample per-ion initialization errors.

    eps1: probability of residual population in the upper manifold level;
    eps2: probability of population outside the manifold, modeled by
    removing the ion from the simulation.
    """
    if eps1 < 0 or eps2 < 0 or eps1 + eps2 > 1:
        raise ValueError("need eps1, eps2 >= 0 and eps1 + eps2 <= 1")
    u = rng.random(n_sites)
    removed = u < eps2
    excited = (~removed) & (u < eps2 + eps1)
    return RegisterInit(mask=tuple(bool(b) for b in ~removed),
                        excited=tuple(bool(b) for b in excited))


def register_state_from_init(sys: SpinSystem, init: RegisterInit, yb: int) -> np.ndarray:
    """Product state with the sampled ion levels; ``sys`` must match the mask."""
    up = sys.ion_level_index(2.5)
    down = sys.ion_level_index(3.5)
    kept_excited = [e for e, keep in zip(init.excited, init.mask) if keep]
    if len(kept_excited) != sys.n_register:
        raise ValueError("register mask of system and init sample disagree")
    levels = [up if e else down for e in kept_excited]
    levels += [down] * len(sys.sim_bath)
    return sys.product_state(yb, levels)


# -- Floquet oracle -----------------------------------------------------------


def floquet_oracle(
    sys: SpinSystem, seq: PulseSequence, fields: FieldSample
) -> dict[str, np.ndarray]:
    """Exact one-period propagator plus its effective interaction generator.

    The generator is taken in the interaction picture of the zero-field
    Hamiltonian, where eigenphases are small at the engineered resonance
    and the principal matrix log is unambiguous.  If an eigenphase still
    approaches the branch cut, the period is split in half and the two
    half-window generators are averaged (first-order equivalent).
    """
    u = period_propagator(sys, seq, fields)
    if not is_unitary(u, tol=1e-9):
        raise ValueError("one-period propagator failed the unitarity check")
    h0 = sys.hamiltonian(0.0, 0.0, None)
    u0 = propagator(h0, seq.period)
    h_eff, max_phase = _principal_generator(u0.conj().T @ u, seq.period)
    if max_phase > 3.0:
        h_eff = _halved_generator(sys, seq, fields, h0)
    return {"propagator": u, "generator": h_eff}


def _principal_generator(u_int: np.ndarray, span: float) -> tuple[np.ndarray, float]:
    evals, evecs = np.linalg.eig(u_int)
    phases = np.angle(evals / np.abs(evals))
    h = (evecs * (-phases / span)) @ np.linalg.inv(evecs)
    h = 0.5 * (h + h.conj().T)
    return h, float(np.max(np.abs(phases)))


def _window_propagator(sys, seq, fields, t0, t1) -> np.ndarray:
    u = np.eye(sys.dim, dtype=complex)
    eye_rest = np.eye(sys.dim // 2)
    for kind, a, b in _compile_segments(seq):
        if kind == "free":
            s0, dt = a, b
            lo, hi = max(s0, t0), min(s0 + dt, t1)
            if hi > lo + 1e-15:
                h = sys.hamiltonian(
                    fields.b_oh, _rf_value(seq, (lo + hi) / 2.0), fields.site
                )
                u = propagator(h, hi - lo) @ u
        else:
            pulse, _ = a, b
            fire_at = pulse.offset
            in_window = (t0 - 1e-12 <= fire_at < t1 - 1e-12) or (
                abs(fire_at - t1) < 1e-12 and abs(t1 - seq.period) < 1e-12
            )
            if in_window:
                u = np.kron(pulse.unitary(), eye_rest) @ u
    return u


def _halved_generator(sys, seq, fields, h0) -> np.ndarray:
    halves = []
    for t0, t1 in ((0.0, seq.period / 2.0), (seq.period / 2.0, seq.period)):
        uh = _window_propagator(sys, seq, fields, t0, t1)
        u0 = propagator(h0, t1 - t0)
        g, _ = _principal_generator(u0.conj().T @ uh, t1 - t0)
        halves.append(g)
    return 0.5 * (halves[0] + halves[1])
