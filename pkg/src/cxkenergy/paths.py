"""Time-sampled paths of complex potentials."""
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

PATH_MAGIC = b"CXKP"
PATH_VERSION = 1
_BACKENDS = ("torus", "cp1")


@dataclass
class PotentialPath:
    """Samples psi(t_i) of a path of complex potentials on a fixed backend grid.

    ``values`` has shape ``(len(times),) + grid shape``. Exact velocities and
    accelerations may be attached when the path is known in closed form.
    """

    times: np.ndarray
    values: np.ndarray
    backend: str
    dim: int
    m: int
    velocity: Optional[np.ndarray] = None
    acceleration: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[0] != self.times.size:
            raise ValueError("one sample per time is required")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.backend not in _BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")

    def __len__(self):
        return self.times.size

    @property
    def real(self):
        return self.values.real

    @property
    def imag(self):
        return self.values.imag

    def uniform_step(self):
        dt = np.diff(self.times)
        if dt.size == 0 or np.ptp(dt) > 1e-12 * abs(dt[0]):
            raise ValueError("path is not uniformly sampled")
        return float(dt[0])

    def fd_velocity(self):
        """Second-order central differences at interior times."""
        dt = self.uniform_step()
        return (self.values[2:] - self.values[:-2]) / (2 * dt)

    def fd_acceleration(self):
        dt = self.uniform_step()
        return (self.values[2:] - 2 * self.values[1:-1] + self.values[:-2]) / dt**2

    def save(self, path):
        """Binary layout: magic, version, backend id, dim, m, count, times, samples."""
        with open(path, "wb") as fh:
            fh.write(PATH_MAGIC)
            fh.write(struct.pack("<HBHII", PATH_VERSION, _BACKENDS.index(self.backend),
                                 self.dim, self.m, self.times.size))
            fh.write(self.times.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(self.values, dtype=np.complex128).view(np.float64).astype("<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            if fh.read(4) != PATH_MAGIC:
                raise ValueError(f"{path}: not a path file")
            version, bid, dim, m, count = struct.unpack("<HBHII", fh.read(13))
            if version != PATH_VERSION:
                raise ValueError(f"{path}: unsupported path version {version}")
            times = np.frombuffer(fh.read(8 * count), dtype="<f8").astype(float)
            raw = np.frombuffer(fh.read(), dtype="<f8").astype(float)
        backend = _BACKENDS[bid]
        grid_shape = (m,) * (2 * dim) if backend == "torus" else (m,)
        values = raw.view(np.complex128).reshape((count,) + grid_shape)
        return cls(times, values, backend, dim, m)
