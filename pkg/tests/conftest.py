"""Test configuration.

GitHub Actions appears to run Python with a safe import path where the working
directory isn't automatically importable. Ensure the repo root is on sys.path so
`import heun_connect` and `import config_helpers` work without installing the package.
"""

from __future__ import annotations

import cmath
import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from heun_connect.series import SymmetricHeunConfig  # noqa: E402

CHI = (0.3, 0.5, 0.7, 0.9)

# unit-circle angles and cross-ratio giving z3 = 1/3
WITNESS_PHI = (2 * math.pi / 3, 4 * math.pi / 3)
WITNESS_A = complex(0.5, math.sqrt(3))


@pytest.fixture()
def feasible_config() -> SymmetricHeunConfig:
    """z = (i, -1, -2i, 1): Conditions A and B hold and the origin lies in every disc."""
    return SymmetricHeunConfig(z=(1j, -1, -2j, 1), chi=CHI, lam=0.5)


@pytest.fixture()
def witness_config() -> SymmetricHeunConfig:
    e1 = complex(math.cos(WITNESS_PHI[0]), math.sin(WITNESS_PHI[0]))
    e2 = complex(math.cos(WITNESS_PHI[1]), math.sin(WITNESS_PHI[1]))
    return SymmetricHeunConfig(z=(e1, e2, 1 / 3, 1), chi=CHI, lam=complex(0.7, 0.2))


@pytest.fixture()
def isolated_env(tmp_path, monkeypatch) -> Path:
    """Point the settings file at an empty temp location and clear managed variables."""
    env_path = tmp_path / "config.env"
    monkeypatch.setenv("HEUN_CONNECT_ENV_PATH", str(env_path))
    for key in ("HEUN_CONNECT_JOBS", "HEUN_CONNECT_TOLERANCE", "HEUN_CONNECT_SEED", "HEUN_CONNECT_OUTPUT_PATH"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("HEUN_CONNECT_OUTPUT_PATH", str(tmp_path / "out"))
    return env_path


def _draw_config(rng: np.random.Generator, single_point: bool = False) -> SymmetricHeunConfig:
    if single_point:
        # unit points spread over the arc opposite z_3, about 72 degrees apart
        theta = rng.uniform(0.0, 2 * math.pi)
        offsets = np.radians(np.array([-72.0, 0.0, 72.0]) + rng.uniform(-3.0, 3.0, 3))
        unit = [cmath.exp(1j * (theta + math.pi + o)) for o in rng.permutation(offsets)]
        z3 = rng.uniform(0.2, 0.45) * cmath.exp(1j * theta)
        turn = unit[2].conjugate()
        z = (unit[0] * turn, unit[1] * turn, z3 * turn, 1 + 0j)
    else:
        while True:
            phi1, phi2, theta = rng.uniform(0.0, 2 * math.pi, 3)
            z3 = rng.uniform(0.2, 0.45) * cmath.exp(1j * theta)
            z = (cmath.exp(1j * phi1), cmath.exp(1j * phi2), z3, 1 + 0j)
            if min(abs(z[i] - z[j]) for i in range(4) for j in range(i + 1, 4)) > 0.2:
                break
    # exponent differences become integers at odd multiples of pi / 4
    chi = rng.uniform(0.05, 0.7, 4) + (math.pi / 2) * rng.integers(0, 2, 4)
    lam = 5.0 * math.sqrt(rng.uniform()) * cmath.exp(1j * rng.uniform(0.0, 2 * math.pi))
    return SymmetricHeunConfig(z=z, chi=tuple(float(c) for c in chi), lam=lam)


@pytest.fixture()
def draw_config():
    """Random configurations: z_1, z_2, z_4 on the unit circle, 0.2 <= |z_3| <= 0.45, |lam| <= 5.

    ``single_point=True`` places the unit points opposite z_3 so that Conditions A and B
    hold and the origin lies in every disc.
    """
    return _draw_config
