"""Data-generating processes and their exact impulse responses.

Three univariate families are provided: AR(1), AR(p) and a finite moving
average whose coefficients follow a sum of Gaussian bumps. All innovations are
Gaussian. Each ``simulate_*`` function is a pure function of its spec and the
seed it receives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import InfeasibleBandError, InvalidSpecError
from .seeding import as_seed_sequence

DEFAULT_BURN_IN = 500
STABILITY_TOL = 1e-10
MAX_DRAWS = 100_000


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))


def companion_matrix(coefficients) -> np.ndarray:
    """Companion matrix of a univariate AR polynomial."""
    a = np.asarray(coefficients, dtype=float)
    P = a.size
    comp = np.zeros((P, P))
    comp[0] = a
    comp[1:, :-1] = np.eye(P - 1)
    return comp


def spectral_radius(coefficients) -> float:
    """Largest eigenvalue modulus of the companion matrix."""
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(coefficients)))))


@dataclass(frozen=True)
class Ar1Spec:
    """y_t = phi * y_{t-1} + innovation_sd * e_t with |phi| <= 1."""

    phi: float
    innovation_sd: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise InvalidSpecError(f"phi must be finite, got {self.phi!r}")
        if abs(self.phi) > 1.0:
            raise InvalidSpecError(f"|phi| must not exceed 1, got {self.phi}")
        if not (math.isfinite(self.innovation_sd) and self.innovation_sd > 0):
            raise InvalidSpecError("innovation_sd must be positive and finite")

    @property
    def coefficients(self) -> tuple:
        return (float(self.phi),)


@dataclass(frozen=True)
class ArpSpec:
    """y_t = sum_i coefficients[i-1] * y_{t-i} + innovation_sd * e_t.

    Unit-root sets (spectral radius equal to one up to ``STABILITY_TOL``) are
    accepted; explosive sets are rejected.
    """

    coefficients: tuple
    innovation_sd: float = 1.0

    def __post_init__(self):
        coefs = tuple(float(c) for c in np.atleast_1d(self.coefficients))
        object.__setattr__(self, "coefficients", coefs)
        if len(coefs) == 0:
            raise InvalidSpecError("an AR(p) spec needs at least one coefficient")
        if not all(math.isfinite(c) for c in coefs):
            raise InvalidSpecError("AR coefficients must be finite")
        if not (math.isfinite(self.innovation_sd) and self.innovation_sd > 0):
            raise InvalidSpecError("innovation_sd must be positive and finite")
        rho = spectral_radius(coefs)
        if rho > 1.0 + STABILITY_TOL:
            raise InvalidSpecError(f"explosive AR coefficients (spectral radius {rho:.6g})")

    @property
    def order(self) -> int:
        return len(self.coefficients)

    @property
    def persistence(self) -> float:
        """Sum of the AR coefficients."""
        return float(sum(self.coefficients))


@dataclass(frozen=True)
class GbfSpec:
    """MA(q) whose coefficients are a sum of Gaussian bumps.

    theta_h = sum_n a_n * exp(-((h - b_n) / c_n)**2) for h = 1..q.

    Attributes
    ----------
    q : int
        Moving-average order.
    components : tuple of (a, b, c)
        Amplitude, center and width of each bump. Widths must be positive.
    """

    q: int
    components: tuple = field(default_factory=tuple)
    innovation_sd: float = 1.0

    def __post_init__(self):
        comps = tuple(tuple(float(v) for v in c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if int(self.q) != self.q or self.q < 1:
            raise InvalidSpecError(f"q must be a positive integer, got {self.q!r}")
        for c in comps:
            if len(c) != 3:
                raise InvalidSpecError("each component must be an (a, b, c) triple")
            if not all(math.isfinite(v) for v in c):
                raise InvalidSpecError("component values must be finite")
            if c[2] <= 0:
                raise InvalidSpecError(f"component width c must be positive, got {c[2]}")
        if not (math.isfinite(self.innovation_sd) and self.innovation_sd > 0):
            raise InvalidSpecError("innovation_sd must be positive and finite")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def theta(self) -> np.ndarray:
        """MA coefficients theta_1..theta_q."""
        h = np.arange(1, self.q + 1, dtype=float)
        out = np.zeros(self.q)
        for a, b, c in self.components:
            out += a * np.exp(-(((h - b) / c) ** 2))
        return out


@dataclass(frozen=True)
class TrueIrf:
    """Population impulse response r_0..r_H to a one-sd shock (r_0 = 1)."""

    values: np.ndarray

    @property
    def H(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, h):
        return self.values[h]

    def __len__(self):
        return len(self.values)


def _check_length(T, burn_in=0):
    if int(T) != T or T < 10:
        raise InvalidSpecError(f"T must be an integer >= 10, got {T!r}")
    if int(burn_in) != burn_in or burn_in < 0:
        raise InvalidSpecError(f"burn_in must be a non-negative integer, got {burn_in!r}")


def _ar_filter(coefficients, innovations, presample=None):
    """Run y_t = sum a_i y_{t-i} + e_t; ``presample`` lists (y_{-1}, ..., y_{-P})."""
    a = np.concatenate(([1.0], -np.asarray(coefficients, dtype=float)))
    if presample is None:
        return signal.lfilter([1.0], a, innovations)
    zi = signal.lfiltic([1.0], a, y=np.asarray(presample, dtype=float))
    return signal.lfilter([1.0], a, innovations, zi=zi)[0]


def simulate_arp(spec: ArpSpec, T: int, burn_in: int = DEFAULT_BURN_IN, seed=None) -> np.ndarray:
    """Simulate ``T`` observations of an AR(p) process.

    The recursion starts from zeros and the first ``burn_in`` values are
    discarded. For a unit-root coefficient set the burn-in is ignored so the
    series starts at zero.

    Parameters
    ----------
    spec : ArpSpec
    T : int
        Number of retained observations.
    burn_in : int
        Warm-up steps for stationary designs.
    seed : int, SeedSequence or Generator
        Source of the Gaussian innovations.

    Returns
    -------
    ndarray of shape (T,)
    """
    _check_length(T, burn_in)
    if spectral_radius(spec.coefficients) >= 1.0 - STABILITY_TOL:
        burn_in = 0
    e = _rng(seed).standard_normal(T + burn_in) * spec.innovation_sd
    return _ar_filter(spec.coefficients, e)[burn_in:]


def simulate_ar1(spec: Ar1Spec, T: int, burn_in: int = DEFAULT_BURN_IN, seed=None) -> np.ndarray:
    """Simulate an AR(1); identical to :func:`simulate_arp` with one coefficient."""
    return simulate_arp(ArpSpec((spec.phi,), spec.innovation_sd), T, burn_in, seed)


def simulate_ma_gbf(spec: GbfSpec, T: int, seed=None) -> np.ndarray:
    """Simulate y_t = e_t + sum_{h=1..q} theta_h e_{t-h}.

    ``q`` presample innovations are drawn, so every retained observation has
    the stationary distribution.
    """
    _check_length(T)
    e = _rng(seed).standard_normal(T + spec.q) * spec.innovation_sd
    kernel = np.concatenate(([1.0], spec.theta()))
    return np.convolve(e, kernel, mode="valid")


def simulate(spec, T: int, burn_in: int = DEFAULT_BURN_IN, seed=None) -> np.ndarray:
    """Dispatch on the spec type."""
    if isinstance(spec, Ar1Spec):
        return simulate_ar1(spec, T, burn_in, seed)
    if isinstance(spec, ArpSpec):
        return simulate_arp(spec, T, burn_in, seed)
    if isinstance(spec, GbfSpec):
        return simulate_ma_gbf(spec, T, seed)
    raise InvalidSpecError(f"unsupported DGP spec {type(spec).__name__}")


def draw_arp_coefficients(P: int, persistence_band, seed=None, innovation_sd: float = 1.0) -> ArpSpec:
    """Draw a stable AR(P) whose coefficient sum lies inside ``persistence_band``.

    Coefficients start as i.i.d. U(-1, 1) draws and are rescaled to a target
    sum drawn uniformly from the band. Draws with spectral radius >= 1 are
    rejected.

    Raises
    ------
    InfeasibleBandError
        If no stable draw is found after 100000 attempts.
    """
    low, high = (float(v) for v in persistence_band)
    if not (0.0 <= low < high < 1.0):
        raise InvalidSpecError(f"persistence band must satisfy 0 <= low < high < 1, got {persistence_band}")
    if int(P) != P or P < 1:
        raise InvalidSpecError(f"order P must be a positive integer, got {P!r}")
    rng = _rng(seed)
    for _ in range(MAX_DRAWS):
        u = rng.uniform(-1.0, 1.0, size=P)
        target = rng.uniform(low, high)
        total = u.sum()
        if abs(total) < 1e-8:
            continue
        phi = u * (target / total)
        if spectral_radius(phi) < 1.0 - STABILITY_TOL:
            return ArpSpec(tuple(phi), innovation_sd)
    raise InfeasibleBandError(f"no stable AR({P}) with coefficient sum in [{low}, {high}] after {MAX_DRAWS} draws")


def true_irf(spec, H: int) -> TrueIrf:
    """Exact impulse response r_0..r_H of a DGP spec to a unit shock."""
    if int(H) != H or H < 0:
        raise InvalidSpecError(f"H must be a non-negative integer, got {H!r}")
    H = int(H)
    if isinstance(spec, GbfSpec):
        r = np.zeros(H + 1)
        r[0] = 1.0
        k = min(H, spec.q)
        r[1 : k + 1] = spec.theta()[:k]
        return TrueIrf(r)
    if isinstance(spec, Ar1Spec):
        return TrueIrf(float(spec.phi) ** np.arange(H + 1))
    if isinstance(spec, ArpSpec):
        impulse = np.zeros(H + 1)
        impulse[0] = 1.0
        return TrueIrf(_ar_filter(spec.coefficients, impulse))
    raise InvalidSpecError(f"unsupported DGP spec {type(spec).__name__}")


FIXTURE_DIR = Path(__file__).with_name("fixtures")


def load_gbf(source) -> GbfSpec:
    """Read a GBF spec from a fixture name, a TOML path, or a mapping.

    A mapping needs ``q`` and a ``components`` list of ``{a, b, c}`` tables.
    """
    if isinstance(source, dict):
        data = source
    else:
        from ._toml import load_toml

        path = Path(source)
        if not path.suffix:
            path = FIXTURE_DIR / f"gbf_{source}.toml"
        data = load_toml(path)
    unknown = set(data) - {"q", "components", "innovation_sd", "description"}
    if unknown:
        raise InvalidSpecError(f"unknown GBF fields: {sorted(unknown)}")
    try:
        comps = tuple((c["a"], c["b"], c["c"]) for c in data.get("components", []))
        return GbfSpec(int(data["q"]), comps, float(data.get("innovation_sd", 1.0)))
    except KeyError as exc:
        raise InvalidSpecError(f"GBF spec missing field {exc}") from None
