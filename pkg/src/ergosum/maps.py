"""Expanding circle maps, orbit streams, period detection, and the slow-recurrence check.

Two map families are supported: linear x -> m*x (mod 1) for integer m >= 2, and the
perturbed doubling map x -> 2x + (eps/2pi) sin(2pi x) (mod 1) with 0 <= eps < 1.
Linear maps get an exact orbit engine driven by a lazily extended base-m digit
stream; iterating them in plain float64 destroys one digit of information per
step, so floats are only offered for the smooth family (with a burn-in) and for
short diagnostic runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError

TWO_PI = 2.0 * math.pi

#: digits kept ahead of the emission point in exact streams (base-2 equivalent)
GUARD_BITS = 64

_DIGIT_BLOCK = 1 << 16


def circle_dist(u, v):
    """Arc distance on the circle R/Z, vectorized."""
    d = np.abs(np.asarray(u, dtype=float) - np.asarray(v, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class CircleMap:
    """A uniformly expanding degree-m circle map.

    kind is "linear" (x -> m x mod 1) or "perturbed_doubling"
    (x -> 2x + (eps_pert/2pi) sin(2pi x) mod 1).
    """

    kind: str
    m: int = 2
    eps_pert: float = 0.0

    def __post_init__(self):
        if self.kind == "linear":
            if int(self.m) != self.m or self.m < 2:
                raise ValueError(f"linear map needs integer m >= 2, got {self.m}")
        elif self.kind == "perturbed_doubling":
            if not (0.0 <= self.eps_pert < 1.0):
                raise ValueError(f"perturbed doubling needs 0 <= eps_pert < 1, got {self.eps_pert}")
        else:
            raise ValueError(f"unknown map kind {self.kind!r}")

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    @property
    def degree(self) -> int:
        return int(self.m) if self.is_linear else 2

    @property
    def gamma(self) -> float:
        """Lower expansion bound, min |f'|."""
        return float(self.m) if self.is_linear else 2.0 - self.eps_pert

    @property
    def Lambda(self) -> float:
        """Upper expansion bound, max |f'|."""
        return float(self.m) if self.is_linear else 2.0 + self.eps_pert

    def step(self, y):
        """One application of the map; accepts scalars or arrays, reduces mod 1."""
        y = np.asarray(y, dtype=float) % 1.0
        if self.is_linear:
            out = (self.m * y) % 1.0
        else:
            out = (2.0 * y + (self.eps_pert / TWO_PI) * np.sin(TWO_PI * y)) % 1.0
        return out if out.ndim else float(out)

    def derivative(self, y):
        y = np.asarray(y, dtype=float) % 1.0
        if self.is_linear:
            out = np.full_like(y, float(self.m))
        else:
            out = 2.0 + self.eps_pert * np.cos(TWO_PI * y)
        return out if out.ndim else float(out)

    def iterate(self, y, k: int):
        """f^k(y), float arithmetic."""
        for _ in range(k):
            y = self.step(y)
        return y

    def step_fraction(self, y: Fraction) -> Fraction:
        """Exact rational step; linear maps only."""
        if not self.is_linear:
            raise ValueError("exact rational stepping requires a linear map")
        return (self.m * y) % 1


def doubling() -> CircleMap:
    return CircleMap("linear", m=2)


def linear(m: int) -> CircleMap:
    return CircleMap("linear", m=m)


def perturbed_doubling(eps_pert: float) -> CircleMap:
    return CircleMap("perturbed_doubling", eps_pert=eps_pert)


# ---------------------------------------------------------------------------
# exact digit-window emission
# ---------------------------------------------------------------------------

def _window_rows(bits: np.ndarray, n: int) -> np.ndarray:
    """Sliding 64-bit windows of a 0/1 uint8 array in rows layout.

    Row r, column q holds window k = 64 q + r (bits[k : k+64], MSB first), so
    window * 2^-64 is the orbit point after k doublings of 0.b1 b2 ...
    """
    need = n + GUARD_BITS - 1
    if bits.size < need:
        raise ValueError("digit buffer too short")
    nq = (n + 63) // 64
    padded = np.zeros((nq + 2) * 64, dtype=np.uint8)
    padded[:need] = bits[:need]
    words = np.frombuffer(np.packbits(padded).tobytes(), dtype=">u8").astype(np.uint64)
    w0 = words[:nq]
    w1 = words[1: nq + 1]
    rows = np.empty((64, nq), dtype=np.uint64)
    rows[0] = w0
    for r in range(1, 64):
        rows[r] = (w0 << np.uint64(r)) | (w1 >> np.uint64(64 - r))
    return rows


def _bits_to_words(bits: np.ndarray, n: int) -> np.ndarray:
    """First n sliding 64-bit windows in orbit order, as uint64 integers."""
    rows = _window_rows(bits, n)
    nq = rows.shape[1]
    out = np.empty(64 * nq, dtype=np.uint64)
    chunk = 4096  # block transpose keeps the gather in cache
    for q0 in range(0, nq, chunk):
        q1 = min(q0 + chunk, nq)
        out[64 * q0: 64 * q1] = rows[:, q0:q1].T.reshape(-1)
    return out[:n]


def _bits_to_points(bits: np.ndarray, n: int) -> np.ndarray:
    return _bits_to_words(bits, n).astype(np.float64) * 2.0 ** -64


def _digits_to_points(digits: np.ndarray, n: int, m: int, window: int) -> np.ndarray:
    """General base-m analogue of _bits_to_points via direct convolution."""
    need = n + window - 1
    if digits.size < need:
        raise ValueError("digit buffer too short")
    kernel = (float(m) ** -np.arange(window, 0, -1)).astype(np.float64)
    return np.convolve(digits[:need].astype(np.float64), kernel, mode="valid")[:n]


def fraction_digits(y: Fraction, m: int, n: int) -> np.ndarray:
    """First n base-m digits of a rational y in [0,1), exact."""
    y = y % 1
    out = np.empty(n, dtype=np.uint8)
    for i in range(n):
        y = y * m
        d = int(y)
        out[i] = d
        y -= d
    return out


class OrbitStream:
    """Single-owner stream of orbit points f^1 y0, f^2 y0, ...

    Modes:
      "exact"  linear maps only; the state is a lazily extended base-m digit
               string.  With a seed, fresh uniform digits are appended on
               demand, which samples y0 from Lebesgue measure (the invariant
               measure of x -> m x).  With an explicit point or digit list the
               tail is the exact expansion (rational continuation, zeros for a
               finite digit list), so dyadic initial points genuinely collapse.
      "float"  float64 iteration; for smooth maps.  Seeded streams draw y0
               uniformly and burn in so the emitted points approximately follow
               the invariant measure.
      "iid"    no dynamics; every emitted point is a fresh uniform draw
               (surrogate source for oracle cross-checks).

    Identical (map, mode, seed) always reproduce the identical stream, and
    take(a) followed by take(b) equals take(a+b) in one call.
    """

    def __init__(self, cmap: CircleMap, mode: str = "auto", *, seed=None, y0=None,
                 digits=None, burn_in: int = 1000, max_steps: int = 1 << 34):
        if mode == "auto":
            mode = "exact" if cmap.is_linear else "float"
        if mode not in ("exact", "float", "iid"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "exact" and not cmap.is_linear:
            raise ValueError("exact mode requires a linear map")
        given = sum(v is not None for v in (seed, y0, digits))
        if given != 1:
            raise ValueError("provide exactly one of seed, y0, digits")
        self.cmap = cmap
        self.mode = mode
        self.step_count = 0
        self.max_steps = int(max_steps)
        self._m = cmap.degree
        self.window = GUARD_BITS if self._m == 2 else int(math.ceil(64.0 / math.log2(self._m)))
        self._rng = None
        self._frac_tail = None
        self._digits = np.zeros(0, dtype=np.uint8)
        self._filled = 0

        if mode == "iid":
            if seed is None:
                raise ValueError("iid mode needs a seed")
            self._rng = np.random.default_rng(seed)
            return
        if mode == "float":
            if seed is not None:
                self._rng = np.random.default_rng(seed)
                y = float(self._rng.random())
                for _ in range(burn_in):
                    y = cmap.step(y)
                self._y = y
            else:
                if y0 is None:
                    raise ValueError("float mode needs seed or y0")
                self._y = float(y0) % 1.0
            return
        # exact
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        elif y0 is not None:
            self._frac_tail = Fraction(float(y0)) % 1
        else:
            d = np.asarray(digits, dtype=np.uint8)
            if d.size and d.max() >= self._m:
                raise ValueError("digit out of range for base")
            self._append(d)
            self._frac_tail = Fraction(0)

    # -- digit bookkeeping ---------------------------------------------------

    def _append(self, arr: np.ndarray):
        need = self._filled + arr.size
        if need > self._digits.size:
            grown = np.zeros(max(need, 2 * self._digits.size, _DIGIT_BLOCK), dtype=np.uint8)
            grown[: self._filled] = self._digits[: self._filled]
            self._digits = grown
        self._digits[self._filled: need] = arr
        self._filled = need

    def _ensure_digits(self, upto: int):
        while self._filled < upto:
            if self._rng is not None:
                block = self._rng.integers(0, self._m, size=_DIGIT_BLOCK, dtype=np.uint8)
                self._append(block)
            else:
                n = max(upto - self._filled, _DIGIT_BLOCK)
                block = fraction_digits(self._frac_tail, self._m, n)
                self._frac_tail = (self._frac_tail * Fraction(self._m) ** n) % 1
                self._append(block)

    def peek_digits(self, lo: int, hi: int) -> np.ndarray:
        """Digits d_{lo+1} .. d_{hi} of the initial expansion (0-indexed slice)."""
        if self.mode != "exact":
            raise ValueError("digits only exist in exact mode")
        self._ensure_digits(hi)
        return self._digits[lo:hi].copy()

    # -- emission --------------------------------------------------------------

    def take(self, n: int) -> np.ndarray:
        """Next n orbit points f^(k+1) y0 ... f^(k+n) y0; advances the stream."""
        n = int(n)
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.step_count + n > self.max_steps:
            raise BudgetError(f"orbit budget exceeded: {self.step_count + n} > {self.max_steps}")
        if self.mode == "iid":
            out = self._rng.random(n)
        elif self.mode == "float":
            out = np.empty(n)
            y = self._y
            cmap = self.cmap
            for i in range(n):
                y = cmap.step(y)
                out[i] = y
            self._y = y
        else:
            start = self.step_count + 1
            self._ensure_digits(start + n + self.window)
            buf = self._digits[start: start + n + self.window - 1]
            if self._m == 2:
                out = _bits_to_points(buf, n)
            else:
                out = _digits_to_points(buf, n, self._m, self.window)
        self.step_count += n
        return out

    def take_words(self, n: int) -> np.ndarray:
        """Next n orbit points as 64-bit digit windows (binary exact streams only).

        window * 2^-64 is the point; integer comparisons against scaled arc
        bounds avoid the float conversion on bulk scans.
        """
        if self.mode != "exact" or self._m != 2:
            raise ValueError("take_words requires an exact base-2 stream")
        n = int(n)
        if self.step_count + n > self.max_steps:
            raise BudgetError(f"orbit budget exceeded: {self.step_count + n} > {self.max_steps}")
        start = self.step_count + 1
        self._ensure_digits(start + n + self.window)
        out = _bits_to_words(self._digits[start: start + n + self.window - 1], n)
        self.step_count += n
        return out

    def scan_arcs(self, n: int, arcs) -> tuple:
        """Steps k in (pos, pos+n] whose point lies in one of the arcs, plus the
        points themselves; exact base-2 streams only.

        Works in the raw window layout (no orbit-order materialization), so it
        is the cheap way to sift rare arc hits out of very long orbits.  Arc
        membership is resolved at the 2^-64 digit-window resolution.
        """
        if self.mode != "exact" or self._m != 2:
            raise ValueError("scan_arcs requires an exact base-2 stream")
        n = int(n)
        if self.step_count + n > self.max_steps:
            raise BudgetError(f"orbit budget exceeded: {self.step_count + n} > {self.max_steps}")
        start = self.step_count + 1
        self._ensure_digits(start + n + self.window)
        rows = _window_rows(self._digits[start: start + n + self.window - 1], n)
        scale = 2.0 ** 64
        top = np.uint64(0xFFFFFFFFFFFFFFFF)
        mask = np.zeros(rows.shape, dtype=bool)
        for lo, hi in arcs:
            a = np.uint64(min(max(int(lo * scale), 0), 2 ** 64 - 1))
            b = top if hi >= 1.0 else np.uint64(min(max(int(hi * scale), 0), 2 ** 64 - 1))
            mask |= (rows >= a) & (rows < b)
        r_idx, q_idx = np.nonzero(mask)
        k = 64 * q_idx + r_idx
        order = np.argsort(k, kind="stable")
        k = k[order]
        keep = k < n
        k = k[keep]
        pts = rows[r_idx[order][keep], q_idx[order][keep]].astype(np.float64) * 2.0 ** -64
        self.step_count += n
        return k + start, pts

    def skip(self, n: int):
        """Advance without emitting (digit state is still materialized)."""
        if self.mode == "float":
            self.take(n)
        else:
            self.step_count += int(n)


def orbit_stream(cmap: CircleMap, seed, mode: str = "auto", **kw) -> OrbitStream:
    return OrbitStream(cmap, mode, seed=seed, **kw)


def orbit_segment(stream: OrbitStream, n: int) -> np.ndarray:
    """Points f^1 y0 .. f^n y0 relative to the stream position; advances by n."""
    return stream.take(n)


# ---------------------------------------------------------------------------
# period detection and the recurrence (Diophantine) check
# ---------------------------------------------------------------------------

def detect_period(cmap: CircleMap, x: float, q_max: int, tol: float):
    """Smallest q <= q_max with d(f^q x, x) <= tol, or None.

    Linear maps use exact rational iteration so rationals p/(m^q - 1) are
    detected at any tol > 0; smooth maps iterate in float64.
    """
    if q_max < 1 or tol <= 0:
        raise ValueError("need q_max >= 1 and tol > 0")
    if cmap.is_linear:
        x0 = Fraction(float(x)) % 1
        y = x0
        for q in range(1, q_max + 1):
            y = cmap.step_fraction(y)
            d = abs(y - x0)
            if min(d, 1 - d) <= tol:
                return q
        return None
    y = float(x) % 1.0
    x0 = y
    for q in range(1, q_max + 1):
        y = cmap.step(y)
        if circle_dist(y, x0) <= tol:
            return q
    return None


@dataclass
class DiophantineReport:
    is_diophantine: bool
    certified: bool                 # exact arithmetic (linear) vs grid cover (smooth)
    witnesses: list                 # (rho, k, y) triples where B(x,rho) returns at time k
    rho_grid: list
    k_max_tested: int


def diophantine_check(cmap: CircleMap, x: float, rho_min: float, eps: float,
                      rho0: float, *, budget: int = 10 ** 8) -> DiophantineReport:
    """Search for early returns of B(x, rho) to itself.

    For every dyadic rho in [rho_min, rho0] and every k <= eps*|ln rho| the check
    decides whether f^k B(x, rho) meets B(x, rho).  Linear maps: exact interval
    arithmetic (the image of an arc under x -> m x is an arc of stretched
    length, so the test reduces to a rational center-distance comparison).
    Smooth maps: a certified cover with test points spaced rho/Lambda^k and
    Lipschitz padding; a clean result then means "no return found on the tested
    grid", never an unconditional certificate.
    """
    if not (0 < rho_min <= rho0 < 0.5) or eps <= 0:
        raise ValueError("need 0 < rho_min <= rho0 < 1/2 and eps > 0")
    rhos = []
    r = rho0
    while r >= rho_min:
        rhos.append(r)
        r /= 2.0
    witnesses = []
    k_max_tested = 0
    work = 0

    if cmap.is_linear:
        m = cmap.degree
        xq = Fraction(float(x)) % 1
        for rho in rhos:
            rq = Fraction(rho)
            k_top = int(eps * abs(math.log(rho)))
            k_max_tested = max(k_max_tested, k_top)
            fk = xq
            mk = 1
            for k in range(1, k_top + 1):
                fk = cmap.step_fraction(fk)
                mk *= m
                work += 1
                if work > budget:
                    raise BudgetError("diophantine_check budget exceeded")
                reach = (mk + 1) * rq
                d = abs(fk - xq)
                d = min(d, 1 - d)
                if mk * rq >= Fraction(1, 2) or d <= reach:
                    witnesses.append((rho, k, _return_witness(cmap, xq, rho, k)))
        return DiophantineReport(not witnesses, True, witnesses, rhos, k_max_tested)

    Lam = cmap.Lambda
    for rho in rhos:
        k_top = int(eps * abs(math.log(rho)))
        k_max_tested = max(k_max_tested, k_top)
        for k in range(1, k_top + 1):
            h = rho / Lam ** k
            npts = int(math.ceil(2.0 * rho / h)) + 1
            work += npts
            if work > budget:
                raise BudgetError("diophantine_check budget exceeded")
            ys = (x - rho + np.arange(npts) * (2.0 * rho / max(npts - 1, 1))) % 1.0
            imgs = ys.copy()
            for _ in range(k):
                imgs = cmap.step(imgs)
            pad = Lam ** k * (2.0 * rho / max(npts - 1, 1)) / 2.0
            d = circle_dist(imgs, x)
            hit = d <= rho + pad
            if np.any(hit):
                i = int(np.argmax(hit))
                witnesses.append((rho, k, float(ys[i])))
    return DiophantineReport(not witnesses, False, witnesses, rhos, k_max_tested)


def _return_witness(cmap: CircleMap, xq: Fraction, rho: float, k: int):
    """A point y in B(x,rho) with f^k y in B(x,rho), for a linear map."""
    m = cmap.degree
    mk = Fraction(m) ** k
    rq = Fraction(rho)
    # want y = x + t with |t| <= rho and m^k (x + t) near x mod 1: solve for the
    # integer branch closest to the center offset
    delta = (mk * xq - xq) % 1
    if delta > Fraction(1, 2):
        delta -= 1
    t = -delta / mk
    if t > rq:
        t = rq
    if t < -rq:
        t = -rq
    return float((xq + t) % 1)
