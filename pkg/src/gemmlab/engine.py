"""Problem generation and GEMM kernel execution.

Computes ``C' = alpha * op(A) @ op(B) + beta * C`` for square row-major
matrices, where ``op`` is identity or transpose according to the kernel's
layout. Input elements are drawn from PCG64 as exact multiples of
``2**-(mantissa+1)`` strictly inside (-0.5, +0.5), so generation is
bit-reproducible on every platform for a given seed.
"""

from __future__ import annotations

import hashlib
import re
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, UnknownVariant
from .registry import Flavour, KernelSpec

DEFAULT_ALPHA = 1.5
DEFAULT_BETA = 0.5
DEFAULT_REPETITIONS = 4
TILE_DEPTH = 8

DTYPES = {"S": np.float32, "D": np.float64}

# (mantissa bits + 1): every sample is k / 2**bits - 0.5 with 0 < k < 2**bits
_SAMPLE_BITS = {"S": 24, "D": 53}

_VARIANT_RE = re.compile(r"^(?:[SD]GEMM_[NT]{2}_)?(\d+)x(\d+)(_barrier)?$", re.IGNORECASE)


@dataclass(frozen=True)
class TileShape:
    s_j: int
    s_i: int

    def __post_init__(self):
        for v in (self.s_j, self.s_i):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"tile dimensions must be positive integers, got ({self.s_j}, {self.s_i})")

    @property
    def total(self) -> int:
        return self.s_j * self.s_i

    @classmethod
    def parse(cls, text: str) -> "TileShape":
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected J,I but got {text!r}")
        try:
            s_j, s_i = (int(p.strip()) for p in parts)
        except ValueError:
            raise ValueError(f"expected two integers in {text!r}") from None
        if s_j < 1 or s_i < 1:
            raise ValueError(f"tile dimensions must be positive: {text!r}")
        return cls(s_j, s_i)

    def __str__(self) -> str:
        return f"{self.s_j},{self.s_i}"


DEFAULT_TILE = TileShape(8, 8)


@dataclass(frozen=True)
class LaunchConfig:
    kernel: KernelSpec
    n: int
    tile: TileShape = DEFAULT_TILE
    repetitions: int = DEFAULT_REPETITIONS
    seed: int = 0
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    @property
    def precision(self) -> str:
        return self.kernel.precision

    def check(self) -> None:
        """Raise ConfigError unless the global range divides into groups and blocks."""
        if self.n < 1:
            raise ConfigError(f"matrix order must be positive, got {self.n}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be positive, got {self.repetitions}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")
        k = self.kernel
        step_j = k.d_j * self.tile.s_j
        step_i = k.d_i * self.tile.s_i
        if self.n % step_j or self.n % step_i:
            raise ConfigError(
                f"order {self.n} is not divisible by d_j*s_j={step_j} and d_i*s_i={step_i} "
                f"(kernel {k.name}, tile {self.tile})"
            )

    def is_valid(self) -> bool:
        try:
            self.check()
        except ConfigError:
            return False
        return True


@dataclass
class ProblemInstance:
    n: int
    a: np.ndarray
    b: np.ndarray
    c_initial: np.ndarray
    alpha: float
    beta: float
    seed: int
    precision: str = "S"

    def __post_init__(self):
        for m in (self.a, self.b, self.c_initial):
            if m.shape != (self.n, self.n):
                raise ValueError(f"matrix shape {m.shape} does not match order {self.n}")
            # kernels only ever read the inputs
            m.flags.writeable = False

    @property
    def dtype(self):
        return np.dtype(DTYPES[self.precision])

    def digest(self) -> str:
        h = hashlib.sha256()
        for m in (self.a, self.b, self.c_initial):
            h.update(np.ascontiguousarray(m).tobytes())
        return h.hexdigest()[:16]


def generate_problem(n: int, seed: int, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA,
                     precision: str = "S") -> ProblemInstance:
    if n < 1:
        raise ConfigError(f"matrix order must be positive, got {n}")
    dtype = DTYPES[precision]
    bits = _SAMPLE_BITS[precision]
    rng = np.random.Generator(np.random.PCG64(seed))
    scale = 2.0 ** -bits

    def draw():
        k = rng.integers(1, 2**bits, size=(n, n), dtype=np.int64)
        return ((k - 2 ** (bits - 1)) * scale).astype(dtype)

    a = draw()
    b = draw()
    c = draw()
    return ProblemInstance(n, a, b, c, alpha, beta, seed, precision)


def _strides(n: int, layout: Flavour):
    a_si, a_sk = (n, 1) if layout.trans_a == "N" else (1, n)
    b_sk, b_sj = (n, 1) if layout.trans_b == "N" else (1, n)
    return a_si, a_sk, b_sk, b_sj


def _scalars(problem: ProblemInstance):
    t = problem.dtype.type
    return t(problem.alpha), t(problem.beta)


def reference_gemm(problem: ProblemInstance, layout: Flavour) -> np.ndarray:
    """Plain (i, j, k) triple loop in the problem's precision."""
    n = problem.n
    out = np.empty(n * n, dtype=problem.dtype)
    alpha, beta = _scalars(problem)
    _kernels.reference(problem.a.ravel(), problem.b.ravel(), problem.c_initial.ravel(), out, n,
                       alpha, beta, *_strides(n, layout))
    return out.reshape(n, n)


def variant_of(spec: KernelSpec) -> str:
    """Map a spec's variant key to 'naive', 'coarsened' or 'tiled'.

    Keys look like ``SGEMM_NT_4x1_barrier.cl``: an optional flavour prefix,
    a ``{dj}x{di}`` block that must agree with the spec, and an optional
    ``_barrier`` suffix selecting the cache-tiled kernel.
    """
    stem = spec.source_id
    if stem.lower().endswith(".cl"):
        stem = stem[:-3]
    m = _VARIANT_RE.match(stem)
    if m is None:
        raise UnknownVariant(f"kernel {spec.name}: unrecognised variant key {spec.source_id!r}")
    dj, di = int(m.group(1)), int(m.group(2))
    if (dj, di) != (spec.d_j, spec.d_i):
        raise UnknownVariant(
            f"kernel {spec.name}: variant key {spec.source_id!r} declares {dj}x{di} "
            f"but metadata says dj={spec.d_j}, di={spec.d_i}"
        )
    if m.group(3):
        return "tiled"
    return "naive" if (dj, di) == (1, 1) else "coarsened"


_warm: set = set()


def _dispatch(variant, spec, config, problem, out, tile_depth):
    n = problem.n
    alpha, beta = _scalars(problem)
    args = (problem.a.ravel(), problem.b.ravel(), problem.c_initial.ravel(), out, n, alpha, beta,
            *_strides(n, spec.flavour))
    tile = config.tile
    if variant == "naive":
        return _kernels.naive, args + (tile.s_j, tile.s_i)
    if variant == "coarsened":
        return _kernels.coarsened, args + (spec.d_j, spec.d_i, tile.s_j, tile.s_i)
    return _kernels.tiled, args + (spec.d_j, spec.d_i, tile.s_j, tile.s_i, tile_depth)


def _ensure_compiled(fn, args):
    # run once on an empty problem so JIT compilation stays out of the timed region
    key = (fn.py_func.__name__, args[3].dtype, tuple(x.flags.writeable for x in args[:3]))
    if key in _warm:
        return
    dtype = args[3].dtype
    inputs = []
    for src in args[:3]:
        e = np.empty(0, dtype=dtype)
        e.flags.writeable = src.flags.writeable
        inputs.append(e)
    fn(*inputs, np.empty(0, dtype=dtype), 0, *args[5:])
    _warm.add(key)


def run_kernel(spec: KernelSpec, config: LaunchConfig, problem: ProblemInstance,
               tile_depth: int = TILE_DEPTH) -> tuple[np.ndarray, float]:
    """Execute one variant and return ``(C, elapsed_seconds)``.

    Only the kernel dispatch is timed. A, B and ``c_initial`` are untouched.
    """
    variant = variant_of(spec)
    config.check()
    if problem.n != config.n:
        raise ConfigError(f"problem order {problem.n} does not match config order {config.n}")
    if problem.precision != spec.precision:
        raise ConfigError(f"problem precision {problem.precision} does not match kernel {spec.name}")
    if tile_depth < 1:
        raise ConfigError(f"tile depth must be positive, got {tile_depth}")
    out = np.empty(problem.n * problem.n, dtype=problem.dtype)
    fn, args = _dispatch(variant, spec, config, problem, out, tile_depth)
    _ensure_compiled(fn, args)
    start = time.perf_counter()
    fn(*args)
    elapsed = time.perf_counter() - start
    return out.reshape(problem.n, problem.n), elapsed


def flops_for(n: int) -> int:
    return 2 * n**3


def precompile(spec: KernelSpec, config: LaunchConfig, problem: ProblemInstance,
               tile_depth: int = TILE_DEPTH) -> None:
    """JIT-compile the variant for this problem's types without running it."""
    variant = variant_of(spec)
    out = np.empty(problem.n * problem.n, dtype=problem.dtype)
    fn, args = _dispatch(variant, spec, config, problem, out, tile_depth)
    _ensure_compiled(fn, args)
