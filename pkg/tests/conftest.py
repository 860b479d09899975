import math

import numpy as np
import pytest

from nsplab.gridio import read_grid, write_grid


def dft_longitudinal_field(g, N=32, L=16.0, workdir=None):
    """Physical field of ``m_hat = -i xi g(|xi|)`` by a discrete 3-D Fourier sum.

    Returns ``(s, |m|)`` at every grid point.  When ``workdir`` is given the
    spectral samples go through a grid-file round trip first.
    """
    dk = 2.0 * math.pi / L
    idx = np.fft.fftfreq(N, 1.0 / N)
    k1 = dk * idx
    kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij")
    r = np.sqrt(kx ** 2 + ky ** 2 + kz ** 2)
    gr = g(r)
    # centre the box: x_j = -L/2 + j dx, so e^{-i k L/2} = (-1)^n
    sign = (-1.0) ** (idx[:, None, None] + idx[None, :, None] + idx[None, None, :])
    comps = []
    for kc in (kx, ky, kz):
        spec = -1j * kc * gr * sign
        if workdir is not None:
            path = workdir / "spectrum.grid"
            write_grid(path, spec)
            spec = read_grid(path)
        comps.append(np.fft.ifftn(spec) * N ** 3 * dk ** 3 / (2.0 * math.pi) ** 1.5)
    x = -L / 2.0 + (L / N) * np.arange(N)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    s = np.sqrt(X ** 2 + Y ** 2 + Z ** 2)
    mag = np.sqrt(sum(np.abs(c) ** 2 for c in comps))
    return s.ravel(), mag.ravel()


@pytest.fixture(scope="session")
def dft_gaussian_gradient(tmp_path_factory):
    workdir = tmp_path_factory.mktemp("dft")
    return dft_longitudinal_field(lambda r: np.exp(-0.5 * r * r), workdir=workdir)
