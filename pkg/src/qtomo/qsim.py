"""Exact statevector simulation of the quantum MRI and CT reconstructions.

States are dense complex vectors over ``2**q`` basis states. A
:class:`RegisterLayout` names contiguous groups of qubits, most significant
first, so a state reshaped to ``layout.shape`` has one axis per register.

For CT the register order after the ancilla is appended is
``[anc, k_rho, theta]``. The ancilla-|0> half of the vector holds the
Cartesian block ``[k_y, k_x]`` and the ancilla-|1> half the polar block.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import FormatError, NumericalDiagnostic
from .grids import ImageGrid, _parse_dims, _split_header, _write_atomic
from .interp import SparseInterpMatrix, build_interp_matrix, schur_bound
from .radon import Sinogram
from .spectral import (
    FORWARD,
    INVERSE,
    UNITARY,
    ComplexField,
    dft1d,
    fftshift,
    is_power_of_two,
    origin_phase,
    unshift,
)

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
# sigma^2(A) <= 21 for bilinear interpolation in the large-N limit
DEFAULT_NORM_BOUND = math.sqrt(21.0)
# Taylor remainder target never looser than this, whatever epsilon is
TAYLOR_FLOOR = 1e-12
MAX_TAYLOR_ORDER = 60

ANCILLA = "anc"


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple  # ((name, width), ...), most significant first

    def __post_init__(self):
        regs = tuple((str(name), int(width)) for name, width in self.registers)
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names: {names}")
        if any(w < 1 for _, w in regs):
            raise ValueError("every register needs at least one qubit")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, **widths) -> "RegisterLayout":
        return cls(tuple(widths.items()))

    @property
    def q(self) -> int:
        return sum(w for _, w in self.registers)

    @property
    def names(self):
        return [name for name, _ in self.registers]

    @property
    def shape(self):
        return tuple(2**w for _, w in self.registers)

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no register named {name!r} in {self}") from None

    def renamed(self, mapping) -> "RegisterLayout":
        return RegisterLayout(tuple((mapping.get(n, n), w) for n, w in self.registers))

    def __str__(self):
        return ",".join(f"{n}:{w}" for n, w in self.registers)

    @classmethod
    def parse(cls, text: str) -> "RegisterLayout":
        regs = []
        for part in text.split(","):
            name, _, width = part.partition(":")
            if not name or not width.isdigit():
                raise ValueError(f"bad layout string {text!r}")
            regs.append((name, int(width)))
        return cls(tuple(regs))


@dataclass(frozen=True, eq=False)
class RegisterState:
    """Normalized amplitudes over a register layout.

    ``scale`` is the classical norm divided out at encoding time, kept so a
    caller can restore physical units.
    """

    layout: RegisterLayout
    amplitudes: np.ndarray
    scale: float = 1.0
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).ravel()
        if amps.shape[0] != 2**self.layout.q:
            raise ValueError(f"need {2**self.layout.q} amplitudes for {self.layout}, got {amps.shape[0]}")
        if self.check:
            norm = np.linalg.norm(amps)
            if abs(norm - 1.0) > NORM_TOL:
                raise ValueError(f"state norm {norm!r} is not 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def block(self, ancilla_value: int) -> np.ndarray:
        """Amplitudes with the leading ancilla fixed (unnormalized)."""
        if self.layout.names[0] != ANCILLA:
            raise KeyError("state has no leading ancilla register")
        half = self.amplitudes.shape[0] // 2
        return self.amplitudes[half:] if ancilla_value else self.amplitudes[:half]


def phase_aligned_distance(a, b) -> float:
    """``min_phi ||e^{i phi} a_hat - b_hat|| `` for unit-normalized copies of ``a`` and ``b``."""
    a = np.asarray(a.amplitudes if isinstance(a, RegisterState) else a, dtype=complex).ravel()
    b = np.asarray(b.amplitudes if isinstance(b, RegisterState) else b, dtype=complex).ravel()
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    overlap = np.vdot(a, b)
    phase = overlap / abs(overlap) if overlap != 0 else 1.0
    # direct difference: sqrt(2 - 2|<a,b>|) loses half the digits near 0
    return float(np.linalg.norm(a * phase - b))


def encode_amplitudes(field, names=("hi", "lo")) -> RegisterState:
    """Amplitude-encode a 2D array, row index on the more significant register."""
    arr = field.data if isinstance(field, (ComplexField, ImageGrid)) else field
    arr = np.asarray(arr, dtype=np.complex128)
    if arr.ndim != 2 or not all(is_power_of_two(d) for d in arr.shape):
        raise ValueError(f"field dimensions must be powers of two, got {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("cannot encode an all-zero field")
    layout = RegisterLayout(((names[0], arr.shape[0].bit_length() - 1), (names[1], arr.shape[1].bit_length() - 1)))
    return RegisterState(layout, arr.ravel() / norm, scale=norm)


def qft_on_register(state: RegisterState, register: str, direction: str = FORWARD) -> RegisterState:
    """Unitary DFT on one register, identity on the rest."""
    axis = state.layout.axis(register)
    out = dft1d(state.tensor, direction, UNITARY, axis=axis)
    return replace(state, amplitudes=out.ravel())


def mri_reconstruct_quantum(kspace) -> RegisterState:
    """Inverse 2D QFT of amplitude-encoded k-space (standard DFT ordering).

    Returns a state on registers ``[y, x]`` whose amplitudes are the
    normalized density.
    """
    state = encode_amplitudes(kspace, names=("ky", "kx"))
    state = qft_on_register(state, "ky", INVERSE)
    state = qft_on_register(state, "kx", INVERSE)
    return replace(state, layout=state.layout.renamed({"ky": "y", "kx": "x"}))


# --- Hermitian dilation ------------------------------------------------------


class DilatedHamiltonian:
    """``H = [[0, A], [A^T, 0]]`` acting on ``(cartesian, polar)`` blocks.

    Both blocks are padded to a common power-of-two size ``dim`` so the
    ancilla is a single qubit. ``A`` is real, so ``A^dagger = A^T``.
    """

    def __init__(self, A: SparseInterpMatrix):
        self.A = A
        self.dim = 1 << max(A.n_rows - 1, A.n_cols - 1, 1).bit_length()
        self._csr = A.csr
        self._csrT = A.csr.T.tocsr()

    @cached_property
    def norm_bound(self) -> float:
        return math.sqrt(schur_bound(self.A)[2])

    @property
    def sparsity(self) -> int:
        return self.A.scheme.sparsity

    def split(self, vec):
        vec = np.asarray(vec)
        return vec[: self.dim], vec[self.dim :]

    def apply(self, vec) -> np.ndarray:
        """``H @ vec`` for a vector of length ``2 * dim``."""
        u, v = self.split(vec)
        top = np.zeros(self.dim, dtype=complex)
        bottom = np.zeros(self.dim, dtype=complex)
        top[: self.A.n_rows] = self._csr @ v[: self.A.n_cols]
        bottom[: self.A.n_cols] = self._csrT @ u[: self.A.n_rows]
        return np.concatenate([top, bottom])

    @cached_property
    def svd(self):
        """Full SVD of ``A`` zero-padded to ``dim x dim``."""
        dense = np.zeros((self.dim, self.dim))
        dense[: self.A.n_rows, : self.A.n_cols] = self.A.to_dense()
        U, S, Vh = np.linalg.svd(dense)
        return U, S, Vh

    def _blocks(self, vec):
        U, S, Vh = self.svd
        u, v = self.split(vec)
        return U, S, Vh, U.T @ u, Vh @ v

    def cos_apply(self, vec, t: float) -> np.ndarray:
        U, S, Vh, cu, cv = self._blocks(vec)
        c = np.cos(t * S)
        return np.concatenate([U @ (c * cu), Vh.T @ (c * cv)])

    def sin_apply(self, vec, t: float) -> np.ndarray:
        U, S, Vh, cu, cv = self._blocks(vec)
        s = np.sin(t * S)
        return np.concatenate([U @ (s * cv), Vh.T @ (s * cu)])

    def expm_apply(self, vec, t: float) -> np.ndarray:
        """``exp(-i H t) @ vec`` through the singular value decomposition."""
        U, S, Vh, cu, cv = self._blocks(vec)
        c, s = np.cos(t * S), np.sin(t * S)
        top = U @ (c * cu - 1j * s * cv)
        bottom = Vh.T @ (c * cv - 1j * s * cu)
        return np.concatenate([top, bottom])


def choose_evolution_time(epsilon: float, norm_bound: float = DEFAULT_NORM_BOUND) -> float:
    """Largest ``t`` with ``norm_bound**3 * t**3 / 6 <= epsilon``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if norm_bound <= 0:
        raise ValueError("norm_bound must be positive")
    return (6.0 * epsilon) ** (1.0 / 3.0) / norm_bound


def taylor_order(norm_bound: float, t: float, epsilon: float, floor: float = TAYLOR_FLOOR) -> int:
    """Smallest order whose remainder bound ``(b t)^(K+1) / (K+1)!`` is <= min(epsilon/10, floor)."""
    target = min(epsilon / 10.0, floor)
    x = abs(norm_bound * t)
    term = x  # x^(K+1) / (K+1)! at K = 0
    for order in range(1, MAX_TAYLOR_ORDER + 1):
        term *= x / (order + 1)
        if term <= target:
            return order
    raise NumericalDiagnostic(
        f"Taylor order cap {MAX_TAYLOR_ORDER} exceeded for norm*t = {x}", detail={"norm_t": x}
    )


EXACT = "exact_spectral"
TAYLOR = "taylor"


def _ct_layout(H: DilatedHamiltonian) -> RegisterLayout:
    A = H.A
    theta_w = max(A.n_theta.bit_length() - 1, 1)
    rest = H.dim.bit_length() - 1 - theta_w
    return RegisterLayout(((ANCILLA, 1), ("k_rho", max(rest, 1)), ("theta", theta_w)))


def evolve_dilated(
    state: RegisterState,
    H: DilatedHamiltonian,
    t: float,
    epsilon: float = 1e-4,
    engine: str = EXACT,
) -> RegisterState:
    """Apply ``exp(-i H t)`` to a state whose ancilla-|0> block is empty."""
    vec = state.amplitudes
    if vec.shape[0] != 2 * H.dim:
        raise ValueError(f"state has {vec.shape[0]} amplitudes, dilation needs {2 * H.dim}")
    if np.linalg.norm(vec[: H.dim]) > 1e-12:
        raise ValueError("ancilla-|0> block must be empty before evolution")
    if t == 0:
        return state
    if engine == EXACT:
        out = H.expm_apply(vec, t)
    elif engine == TAYLOR:
        order = taylor_order(H.norm_bound, t, epsilon)
        term = vec.astype(complex)
        out = term.copy()
        for k in range(1, order + 1):
            term = H.apply(term) * (-1j * t / k)
            out += term
        drift = abs(np.linalg.norm(out) - 1.0)
        if drift > epsilon:
            raise NumericalDiagnostic(f"Taylor norm drift {drift:.3e} exceeds epsilon", detail={"drift": drift})
        out /= np.linalg.norm(out)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return replace(state, amplitudes=out)


def measure_ancilla(state: RegisterState, mode: str = "postselect", outcome: int = 0, seed=None, rng=None):
    """Measure the leading ancilla qubit.

    ``mode="sample"`` draws the outcome from ``rng`` (or a generator seeded with
    ``seed``). ``mode="postselect"`` forces ``outcome``. Returns
    ``(outcome, collapsed_state, probability_of_that_outcome)``; the collapsed
    state keeps the ancilla register with the other branch zeroed.
    """
    p0 = float(np.sum(np.abs(state.block(0)) ** 2)) / state.norm() ** 2
    if mode == "sample":
        if rng is None:
            rng = np.random.default_rng(seed)
        outcome = 0 if rng.random() < p0 else 1
    elif mode != "postselect":
        raise ValueError(f"unknown measurement mode {mode!r}")
    if outcome not in (0, 1):
        raise ValueError("ancilla outcome must be 0 or 1")
    prob = p0 if outcome == 0 else 1.0 - p0
    if prob <= 0.0:
        raise ValueError(f"ancilla outcome {outcome} has zero probability")
    half = state.amplitudes.shape[0] // 2
    amps = np.zeros_like(state.amplitudes)
    keep = slice(0, half) if outcome == 0 else slice(half, None)
    amps[keep] = state.amplitudes[keep]
    amps /= np.linalg.norm(amps)
    return outcome, replace(state, amplitudes=amps, check=True), prob


def amplification_cost(p0: float):
    """Expected repetitions: ``1/p0`` plain, ``ceil((pi/4) / asin(sqrt(p0)))`` amplified."""
    if not 0.0 < p0 <= 1.0:
        raise ValueError("p0 must be in (0, 1]")
    plain = 1.0 / p0
    amplified = math.ceil((math.pi / 4.0) / math.asin(math.sqrt(p0)))
    return plain, amplified


@dataclass(frozen=True)
class EvolutionReport:
    t: float
    epsilon: float
    taylor_order: int
    p0: float
    expected_iterations_plain: float
    expected_iterations_amplified: int
    post_selected: bool
    engine: str = EXACT
    norm_bound: float = DEFAULT_NORM_BOUND
    iterations: int = 1
    reentry_deviation: float = 0.0
    wall_time: float = 0.0

    def as_lines(self, with_time: bool = False):
        keys = [
            "engine", "t", "epsilon", "norm_bound", "taylor_order", "p0",
            "expected_iterations_plain", "expected_iterations_amplified",
            "post_selected", "iterations", "reentry_deviation",
        ]
        lines = [f"{k}={getattr(self, k)!r}" if isinstance(getattr(self, k), float) else f"{k}={getattr(self, k)}" for k in keys]
        if with_time:
            lines.append(f"wall_time={self.wall_time:.6f}")
        return lines


class CTQuantumResult(NamedTuple):
    image: ImageGrid
    report: EvolutionReport
    state: RegisterState


def prepare_polar_state(sino: Sinogram, H: DilatedHamiltonian) -> RegisterState:
    """Encode, QFT the rho register, append the ancilla in |1>, center the k_rho labels.

    Centering (a cyclic relabeling plus a linear phase that refers the spectrum
    to rho = 0) is a fixed unitary on the index register.
    """
    state = encode_amplitudes(sino.data, names=("rho", "theta"))
    state = qft_on_register(state, "rho", FORWARD)
    polar = fftshift(state.tensor, axes=(0,)) * origin_phase(sino.n_rho)[:, None]
    vec = np.zeros(2 * H.dim, dtype=complex)
    vec[H.dim : H.dim + polar.size] = polar.ravel()
    return RegisterState(_ct_layout(H), vec, scale=state.scale)


def finish_cartesian(collapsed: RegisterState, H: DilatedHamiltonian) -> RegisterState:
    """Take the ancilla-|0> block, undo the centering, inverse 2D QFT to ``[y, x]``."""
    n = H.A.n
    block = collapsed.block(0)
    spill = np.linalg.norm(block[n * n :])
    if spill > 1e-9:
        logger.warning("%.3e of the amplitude sits in padded Cartesian rows", spill)
    cart = block[: n * n] / np.linalg.norm(block[: n * n])
    ph = np.conj(origin_phase(n))
    spec = unshift(cart.reshape(n, n) * ph[:, None] * ph[None, :])
    w = n.bit_length() - 1
    state = RegisterState(RegisterLayout((("ky", w), ("kx", w))), spec.ravel())
    state = qft_on_register(state, "ky", INVERSE)
    state = qft_on_register(state, "kx", INVERSE)
    return replace(state, layout=state.layout.renamed({"ky": "y", "kx": "x"}))


def real_image(state: RegisterState) -> ImageGrid:
    """Amplitudes with the global phase removed, read as a signed real image.

    The phase is chosen to make the vector as real as possible, and the
    overall sign so the pixel sum is non-negative.
    """
    amps = state.amplitudes
    phase = 0.5 * np.angle(np.sum(amps * amps))
    aligned = amps * np.exp(-1j * phase)
    if np.sum(aligned.real) < 0:
        aligned = -aligned
    signed = np.abs(aligned) * np.where(aligned.real < 0, -1.0, 1.0)
    side = int(round(math.sqrt(signed.size)))
    return ImageGrid(signed.reshape(side, side))


def run_ct_quantum_pipeline(
    sino: Sinogram,
    scheme="bilinear",
    epsilon: float = 1e-4,
    engine: str = EXACT,
    mode: str = "postselect",
    seed: int = 0,
    n: int | None = None,
    t: float | None = None,
    norm_bound: float = DEFAULT_NORM_BOUND,
    max_iterations: int = 10**6,
    hamiltonian: DilatedHamiltonian | None = None,
) -> CTQuantumResult:
    """Simulate the quantum slice-theorem reconstruction end to end.

    ``t`` defaults to :func:`choose_evolution_time` with ``norm_bound``.
    In ``"sample"`` mode the evolve/measure loop runs until the ancilla reads
    0 and the number of rounds is recorded; in ``"postselect"`` mode the
    success branch is taken directly.
    """
    if not (is_power_of_two(sino.n_rho) and is_power_of_two(sino.n_theta)):
        raise ValueError("sinogram dimensions must be powers of two")
    start = time.perf_counter()
    n = sino.n_rho if n is None else n
    if not is_power_of_two(n):
        raise ValueError("output side must be a power of two")
    H = hamiltonian or DilatedHamiltonian(build_interp_matrix(n, sino.n_rho, sino.n_theta, scheme))
    if t is None:
        t = choose_evolution_time(epsilon, norm_bound)
    order = taylor_order(H.norm_bound, t, epsilon)

    initial = prepare_polar_state(sino, H)
    state = initial
    rng = np.random.default_rng(seed)
    p0_first = None
    iterations = 0
    while True:
        iterations += 1
        evolved = evolve_dilated(state, H, t, epsilon, engine)
        if mode == "postselect":
            _, collapsed, p0_first = measure_ancilla(evolved, "postselect", 0)
            break
        p0 = float(np.sum(np.abs(evolved.block(0)) ** 2))
        if p0_first is None:
            p0_first = p0
        outcome, collapsed, _ = measure_ancilla(evolved, "sample", rng=rng)
        if outcome == 0:
            break
        if iterations >= max_iterations:
            raise NumericalDiagnostic(
                f"ancilla never read 0 in {max_iterations} rounds", detail={"p0": p0_first}
            )
        state = collapsed
    deviation = float(np.linalg.norm(state.block(1) - initial.block(1)))

    final = finish_cartesian(collapsed, H)
    plain, amplified = amplification_cost(p0_first)
    report = EvolutionReport(
        t=t,
        epsilon=epsilon,
        taylor_order=order,
        p0=p0_first,
        expected_iterations_plain=plain,
        expected_iterations_amplified=amplified,
        post_selected=(mode == "postselect"),
        engine=engine,
        norm_bound=norm_bound,
        iterations=iterations,
        reentry_deviation=deviation,
        wall_time=time.perf_counter() - start,
    )
    return CTQuantumResult(real_image(final), report, final)


def sample_pixels(state: RegisterState, shots: int, seed=0) -> np.ndarray:
    """Measure every register ``shots`` times; returns counts shaped like the layout."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = state.probabilities()
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    return counts.reshape(state.layout.shape)


def total_variation(counts: np.ndarray, state: RegisterState) -> float:
    freq = counts.ravel() / counts.sum()
    p = state.probabilities()
    return 0.5 * float(np.abs(freq - p / p.sum()).sum())


# --- rvec files ----------------------------------------------------------------

RVEC_MAGIC = "RVEC1"


def encode_rvec(state: RegisterState) -> bytes:
    header = f"{RVEC_MAGIC} {state.layout.q} {state.layout}\n".encode("ascii")
    return header + state.amplitudes.astype("<c16").tobytes()


def decode_rvec(raw: bytes) -> RegisterState:
    if not raw.startswith(RVEC_MAGIC.encode()):
        raise FormatError("not an rvec file")
    tokens, pos = _split_header(raw, 3)
    (q,) = _parse_dims(tokens[1:2], "rvec")
    try:
        layout = RegisterLayout.parse(tokens[2])
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if layout.q != q:
        raise FormatError(f"layout {layout} has {layout.q} qubits, header says {q}")
    payload = raw[pos:]
    if len(payload) != 16 * 2**q:
        raise FormatError(f"rvec payload has {len(payload)} bytes, expected {16 * 2**q}")
    try:
        return RegisterState(layout, np.frombuffer(payload, dtype="<c16"))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_state(state: RegisterState, path) -> None:
    _write_atomic(path, encode_rvec(state))


def read_state(path) -> RegisterState:
    with open(path, "rb") as fh:
        return decode_rvec(fh.read())
