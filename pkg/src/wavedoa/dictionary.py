"""Device acoustic dictionary: steering vectors over a direction grid.

A steering vector is the complex per-microphone response to a plane wave
arriving from a grid direction, at one analysis frequency. Two models are
provided: free-field (pure inter-mic delays, constant magnitude) and an
analytic rigid-sphere model whose surface scattering adds the per-mic
magnitude differences that disambiguate aliased directions.

Conventions: directions (theta, phi) are polar/azimuth angles of the arrival
direction, i.e. the unit vector pointing from the array toward the source is
d = (sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)). The relative
arrival delay at microphone m is tau_m = -(r_m . d)/c (negative = earlier
than the array origin), and the free-field steering phase is exp(-j w tau_m).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre, spherical_jn, spherical_yn

from .errors import ConfigurationError, FormatError, GeometryError

_MAGIC = b"WDOA"
_VERSION = 1
_MODEL_CODES = {"free-field": 0, "rigid-sphere": 1}
_MODEL_NAMES = {v: k for k, v in _MODEL_CODES.items()}

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ArrayGeometry:
    """Microphone positions (meters) in the device-centered frame."""

    mic_positions: np.ndarray
    name: str = "array"

    def __post_init__(self):
        pos = np.asarray(self.mic_positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise GeometryError(f"mic_positions must be [M, 3], got shape {pos.shape}")
        if pos.shape[0] < 2:
            raise GeometryError("need at least 2 microphones")
        if not np.all(np.isfinite(pos)):
            raise GeometryError("microphone positions must be finite")
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        np.fill_diagonal(dist, np.inf)
        if dist.min() < 1e-9:
            raise GeometryError("two microphones are coincident")
        object.__setattr__(self, "mic_positions", pos)

    @property
    def num_mics(self) -> int:
        return self.mic_positions.shape[0]


def circular_array(num_mics: int = 8, radius: float = 0.04, name: str = "circular8") -> ArrayGeometry:
    """Uniform circle in the horizontal plane, first mic on the +x axis."""
    angles = TWO_PI * np.arange(num_mics) / num_mics
    pos = radius * np.stack([np.cos(angles), np.sin(angles), np.zeros(num_mics)], axis=1)
    return ArrayGeometry(mic_positions=pos, name=name)


def star_array(radius: float = 0.03, height: float = 0.01, name: str = "star4") -> ArrayGeometry:
    """Center mic plus three mics 120 degrees apart, raised by `height`."""
    angles = TWO_PI * np.arange(3) / 3
    outer = np.stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.full(3, height)], axis=1
    )
    pos = np.vstack([np.zeros((1, 3)), outer])
    return ArrayGeometry(mic_positions=pos, name=name)


@dataclass(frozen=True)
class DirectionGrid:
    """Candidate directions: entries[i] = (theta, phi) in radians."""

    entries: np.ndarray
    azimuth_step: float
    elevation_levels: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[1] != 2:
            raise ConfigurationError(f"grid entries must be [N, 2], got shape {entries.shape}")
        if entries.shape[0] == 0:
            raise ConfigurationError("direction grid is empty")
        theta, phi = entries[:, 0], entries[:, 1]
        if np.any((theta < 0) | (theta > np.pi)):
            raise ConfigurationError("elevation must lie in [0, pi]")
        if np.any((phi < 0) | (phi >= TWO_PI)):
            raise ConfigurationError("azimuth must lie in [0, 2*pi)")
        if len(np.unique(entries, axis=0)) != entries.shape[0]:
            raise ConfigurationError("grid entries must be unique")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(
            self, "elevation_levels", np.asarray(self.elevation_levels, dtype=np.float64)
        )

    @classmethod
    def regular(
        cls,
        azimuth_step_deg: float = 5.0,
        elevation_levels_deg=(60.0, 90.0, 120.0),
    ) -> "DirectionGrid":
        """Full-circle azimuth sweep crossed with a few elevation rings."""
        if azimuth_step_deg <= 0 or 360.0 % azimuth_step_deg > 1e-9:
            raise ConfigurationError(
                f"azimuth_step_deg must divide 360, got {azimuth_step_deg}"
            )
        azimuths = np.deg2rad(np.arange(0.0, 360.0, azimuth_step_deg))
        elevations = np.deg2rad(np.asarray(elevation_levels_deg, dtype=np.float64))
        entries = np.array([(th, ph) for th in elevations for ph in azimuths])
        return cls(
            entries=entries,
            azimuth_step=np.deg2rad(azimuth_step_deg),
            elevation_levels=elevations,
        )

    @property
    def num_directions(self) -> int:
        return self.entries.shape[0]

    @property
    def azimuths(self) -> np.ndarray:
        """Unique azimuth values, sorted ascending."""
        return np.unique(self.entries[:, 1])

    def unit_vectors(self) -> np.ndarray:
        """Arrival-direction unit vectors, shape [N, 3]."""
        theta, phi = self.entries[:, 0], self.entries[:, 1]
        return np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
            axis=1,
        )


@dataclass(frozen=True)
class SteeringDictionary:
    """vectors[frequency, direction, microphone], unit-norm over microphones."""

    geometry: ArrayGeometry
    grid: DirectionGrid
    frequencies: np.ndarray
    vectors: np.ndarray
    model: str = "free-field"

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        expected = (freqs.shape[0], self.grid.num_directions, self.geometry.num_mics)
        if self.vectors.shape != expected:
            raise ConfigurationError(
                f"tensor shape {self.vectors.shape} != (freq, dir, mic) {expected}"
            )
        object.__setattr__(self, "frequencies", freqs)

    @property
    def num_frequencies(self) -> int:
        return self.frequencies.shape[0]


def _check_build_inputs(grid: DirectionGrid, frequencies, c: float) -> np.ndarray:
    freqs = np.asarray(frequencies, dtype=np.float64)
    if freqs.size == 0:
        raise ConfigurationError("frequency list is empty")
    if np.any(freqs <= 0):
        raise ConfigurationError("frequencies must be positive")
    if c <= 0:
        raise ConfigurationError(f"speed of sound must be > 0, got {c}")
    if grid.num_directions == 0:
        raise ConfigurationError("direction grid is empty")
    return freqs


def build_freefield_dictionary(
    geometry: ArrayGeometry,
    grid: DirectionGrid,
    frequencies,
    c: float = 343.0,
) -> SteeringDictionary:
    """Plane-wave delay dictionary: per-element magnitude 1/sqrt(M)."""
    freqs = _check_build_inputs(grid, frequencies, c)
    # tau[dir, mic] = -(r_m . d)/c
    tau = -(grid.unit_vectors() @ geometry.mic_positions.T) / c
    phase = -np.einsum("f,dm->fdm", freqs, tau)
    vectors = np.exp(1j * phase) / np.sqrt(geometry.num_mics)
    return SteeringDictionary(
        geometry=geometry, grid=grid, frequencies=freqs, vectors=vectors, model="free-field"
    )


def _sphere_surface_response(ka: float, cos_gamma: np.ndarray, order: int) -> np.ndarray:
    """Total (incident + scattered) pressure on a rigid sphere's surface.

    gamma is the angle between the surface point's radial direction and the
    propagation direction. The Wronskian identity collapses the incident and
    scattered series into 1/h_n'(ka) terms; the conjugate at the end moves the
    standard exp(+ikr) result into this package's delay sign convention.
    """
    n = np.arange(order + 1)
    hn_prime = spherical_jn(n, ka, derivative=True) + 1j * spherical_yn(n, ka, derivative=True)
    coef = (1j**n) * (2 * n + 1) * (1j / ka**2) / hn_prime
    legendre = np.stack([eval_legendre(int(m), cos_gamma) for m in n], axis=0)
    return np.conj(np.tensordot(coef, legendre, axes=(0, 0)))


def build_rigid_sphere_dictionary(
    geometry: ArrayGeometry,
    grid: DirectionGrid,
    frequencies,
    c: float = 343.0,
    radius: float | None = None,
    surface_tol: float = 1e-6,
) -> SteeringDictionary:
    """Analytic scattering dictionary for mics mounted on a rigid sphere.

    All microphones must lie on the sphere surface (radius inferred from the
    mean mic radius unless given). Unlike the free-field model the per-mic
    magnitudes vary with direction, which is the anti-aliasing cue.
    """
    freqs = _check_build_inputs(grid, frequencies, c)
    radii = np.linalg.norm(geometry.mic_positions, axis=1)
    a = float(np.mean(radii)) if radius is None else float(radius)
    if a <= 0:
        raise GeometryError("sphere radius must be positive")
    off = np.abs(radii - a)
    if off.max() > surface_tol:
        raise GeometryError(
            f"microphone {int(off.argmax())} is {off.max():.2e} m off the sphere surface"
        )

    mic_radial = geometry.mic_positions / radii[:, None]
    propagation = -grid.unit_vectors()
    cos_gamma = np.clip(mic_radial @ propagation.T, -1.0, 1.0)  # [mic, dir]

    ka_max = freqs.max() * a / c
    order = int(np.ceil(np.e * ka_max / 2.0)) + 4

    vectors = np.empty((freqs.shape[0], grid.num_directions, geometry.num_mics), dtype=complex)
    for i, omega in enumerate(freqs):
        ka = omega * a / c
        vectors[i] = _sphere_surface_response(ka, cos_gamma, order).T
    norms = np.linalg.norm(vectors, axis=2, keepdims=True)
    vectors /= norms
    return SteeringDictionary(
        geometry=geometry, grid=grid, frequencies=freqs, vectors=vectors, model="rigid-sphere"
    )


def save_dictionary(dictionary: SteeringDictionary, path) -> None:
    """Write the versioned little-endian binary dictionary file."""
    geo = dictionary.geometry
    grid = dictionary.grid
    name_bytes = geo.name.encode("utf-8")
    header = struct.pack(
        "<4sIIIIB3x",
        _MAGIC,
        _VERSION,
        geo.num_mics,
        dictionary.num_frequencies,
        grid.num_directions,
        _MODEL_CODES[dictionary.model],
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<H", len(name_bytes)))
        fh.write(name_bytes)
        fh.write(geo.mic_positions.astype("<f8").tobytes())
        fh.write(struct.pack("<d", grid.azimuth_step))
        fh.write(struct.pack("<I", grid.elevation_levels.shape[0]))
        fh.write(grid.elevation_levels.astype("<f8").tobytes())
        fh.write(grid.entries.astype("<f8").tobytes())
        fh.write(dictionary.frequencies.astype("<f8").tobytes())
        fh.write(dictionary.vectors.astype("<c16").tobytes())


class _Reader:
    def __init__(self, fh):
        self.fh = fh

    def take(self, nbytes: int) -> bytes:
        data = self.fh.read(nbytes)
        if len(data) != nbytes:
            raise FormatError("dictionary file is truncated")
        return data

    def array(self, dtype, count: int, shape) -> np.ndarray:
        raw = self.take(np.dtype(dtype).itemsize * count)
        return np.frombuffer(raw, dtype=dtype, count=count).reshape(shape).copy()


def load_dictionary(path) -> SteeringDictionary:
    """Read a dictionary file; raises FormatError on any structural problem."""
    with open(path, "rb") as fh:
        r = _Reader(fh)
        magic, version, n_mic, n_freq, n_dir, model_code = struct.unpack(
            "<4sIIIIB3x", r.take(24)
        )
        if magic != _MAGIC:
            raise FormatError(f"bad magic header {magic!r}")
        if version != _VERSION:
            raise FormatError(f"unsupported dictionary version {version}")
        if model_code not in _MODEL_NAMES:
            raise FormatError(f"unknown steering model code {model_code}")
        (name_len,) = struct.unpack("<H", r.take(2))
        name = r.take(name_len).decode("utf-8")
        positions = r.array("<f8", n_mic * 3, (n_mic, 3))
        (azimuth_step,) = struct.unpack("<d", r.take(8))
        (n_elev,) = struct.unpack("<I", r.take(4))
        elevations = r.array("<f8", n_elev, (n_elev,))
        entries = r.array("<f8", n_dir * 2, (n_dir, 2))
        frequencies = r.array("<f8", n_freq, (n_freq,))
        vectors = r.array("<c16", n_freq * n_dir * n_mic, (n_freq, n_dir, n_mic))
        if fh.read(1):
            raise FormatError("trailing bytes after dictionary payload")

    try:
        geometry = ArrayGeometry(mic_positions=positions, name=name)
        grid = DirectionGrid(
            entries=entries, azimuth_step=azimuth_step, elevation_levels=elevations
        )
        return SteeringDictionary(
            geometry=geometry,
            grid=grid,
            frequencies=frequencies,
            vectors=vectors,
            model=_MODEL_NAMES[model_code],
        )
    except (GeometryError, ConfigurationError) as exc:
        raise FormatError(f"dictionary payload is inconsistent: {exc}") from exc
