"""Received-signal model, measurement correlation, and the lifted forward map.

The received signal at receiver i is a sum of phasors over scene pixels
with two-leg path length |y - x| + |x - gamma_i(s)|.  Correlating the
two receivers' signals gives data that is linear in the Kronecker scene
rho = refl * refl^H.  In the far-field transmitter regime the correlated
kernel factorizes per data row:

    F[(m,p), (k, k')] = U[(m,p), k] * conj(V[(m,p), k'])
    U[r, k] = exp(-i w_m (|x_k - g1(s_p)| - yhat.x_k) / c0) * a1[r, k]

so the operator is applied with two small matrix products instead of an
MP x npix^2 matrix.  An explicit dense representation is available for
debugging and small problems, assembled independently of the factors.

Data vectorization is slow-time major: row r = m + p*M.  Kronecker
matrices are vectorized by column stacking (Fortran order), so column
c = k + k'*npix of F addresses the (k, k') matrix entry.
"""

import warnings

import numpy as np

from .constants import C0
from .errors import DimensionError, InvalidConfigError, MemoryBudgetError
from .scene import KroneckerMatrix

FOUR_PI = 4.0 * np.pi

DEFAULT_MEMORY_BUDGET = 2 * 1024 ** 3  # bytes, explicit operator storage cap


class SamplingGrid:
    """Uniform fast-time frequency and slow-time sampling.

    Frequencies span [w_c - B/2, w_c + B/2] (rad/s) inclusive; slow
    times span the aperture interval.  A single sample sits at the
    interval midpoint.
    """

    def __init__(self, center_frequency, bandwidth, num_frequencies,
                 aperture_interval, num_slow_times):
        if num_frequencies < 1 or num_slow_times < 1:
            raise InvalidConfigError("sample counts must be >= 1")
        if not bandwidth > 0:
            raise InvalidConfigError("bandwidth must be > 0")
        if not center_frequency > bandwidth / 2:
            raise InvalidConfigError("need center_frequency > bandwidth/2")
        s_a, s_b = float(aperture_interval[0]), float(aperture_interval[1])
        if not s_b > s_a:
            raise InvalidConfigError("aperture interval must have s_a < s_b")
        self.center_frequency = float(center_frequency)
        self.bandwidth = float(bandwidth)
        self.num_frequencies = int(num_frequencies)
        self.aperture_interval = (s_a, s_b)
        self.num_slow_times = int(num_slow_times)

    @staticmethod
    def _axis(lo, hi, count):
        if count == 1:
            return np.array([(lo + hi) / 2.0])
        return np.linspace(lo, hi, count)

    @property
    def frequencies(self):
        """(M,) angular frequencies [rad/s]."""
        w = self.center_frequency
        b = self.bandwidth
        return self._axis(w - b / 2, w + b / 2, self.num_frequencies)

    @property
    def baseband_frequencies(self):
        """(M,) frequencies shifted to baseband [-B/2, B/2]."""
        return self.frequencies - self.center_frequency

    @property
    def slow_times(self):
        s_a, s_b = self.aperture_interval
        return self._axis(s_a, s_b, self.num_slow_times)

    @property
    def num_samples(self):
        return self.num_frequencies * self.num_slow_times


class ImagingGeometry:
    """Two receiver trajectories plus the transmitter."""

    def __init__(self, receiver1, receiver2, transmitter):
        if receiver1.interval != receiver2.interval:
            raise InvalidConfigError("receivers must share a parameter interval")
        self.receiver1 = receiver1
        self.receiver2 = receiver2
        self.transmitter = transmitter

    def receiver(self, index):
        if index == 1:
            return self.receiver1
        if index == 2:
            return self.receiver2
        raise InvalidConfigError("receiver index must be 1 or 2")

    @property
    def collocated(self):
        return self.receiver1 is self.receiver2


class Measurement:
    """Vectorized correlated data, slow-time major (r = m + p*M)."""

    def __init__(self, values, grid, mode):
        values = np.asarray(values, dtype=complex).reshape(-1)
        if values.size != grid.num_samples:
            raise DimensionError("measurement length does not match sampling grid")
        if mode not in ("cross", "auto"):
            raise InvalidConfigError("mode must be 'cross' or 'auto'")
        self.values = values
        self.grid = grid
        self.mode = mode


def _flat_waveform(omega):
    return np.ones_like(np.asarray(omega, dtype=float))


def bistatic_phase(geometry, receiver_index, s, x):
    """Exact two-leg path length |y - x| + |x - gamma_i(s)| [m]."""
    x = np.asarray(x, dtype=float)
    gpos = geometry.receiver(receiver_index).position(s)
    tx = geometry.transmitter.location
    return (np.linalg.norm(tx - x, axis=-1)
            + np.linalg.norm(x - gpos, axis=-1))


def received_signal(img, sampling, geometry, receiver_index,
                    amplitude_mode="unit", waveform=None,
                    transmitter_model="exact"):
    """Simulate the received signal at one receiver.

    Returns an (M, P) complex matrix over (frequency, slow time).  The
    transmitter leg uses the exact range |y - x| by default; with
    transmitter_model='far_field' it uses |y| - yhat.x, the regime the
    correlated imaging kernel assumes.  amplitude_mode 'unit' sets the
    amplitude factor to 1; 'geometric' applies the spreading factor
    J(w) / ((4 pi)^2 |x - gamma| |y - x|).
    """
    if transmitter_model not in ("exact", "far_field"):
        raise InvalidConfigError("transmitter_model must be 'exact' or 'far_field'")
    waveform = waveform or _flat_waveform
    px = img.grid.pixel_centers
    omegas = sampling.frequencies
    gpos = geometry.receiver(receiver_index).position(sampling.slow_times)  # (P,3)
    tx = geometry.transmitter
    rx_range = np.linalg.norm(px[None, :, :] - gpos[:, None, :], axis=2)  # (P,N)
    if transmitter_model == "exact":
        tx_range = np.linalg.norm(tx.location[None, :] - px, axis=1)  # (N,)
    else:
        tx_range = tx.range - px @ tx.unit_direction
    path = tx_range[None, :] + rx_range  # (P,N)
    phase = np.exp(-1j * (omegas[:, None, None] / C0) * path[None, :, :])  # (M,P,N)
    if amplitude_mode == "unit":
        weighted = phase * img.values[None, None, :]
    elif amplitude_mode == "geometric":
        amp = 1.0 / (FOUR_PI ** 2 * rx_range * tx_range[None, :])  # (P,N)
        j = np.asarray(waveform(omegas), dtype=complex)
        weighted = (j[:, None, None] * phase) * (amp * img.values[None, :])[None, :, :]
    else:
        raise InvalidConfigError("amplitude_mode must be 'unit' or 'geometric'")
    return weighted.sum(axis=2)


def correlate(f1, f2, sampling, mode="cross"):
    """Pointwise correlation d = f1 * conj(f2) of two (M, P) signals.

    In 'auto' mode the two signals must be identical (self-correlation),
    and the result is real and nonnegative.
    """
    f1 = np.asarray(f1, dtype=complex)
    f2 = np.asarray(f2, dtype=complex)
    if f1.shape != f2.shape:
        raise DimensionError(f"shape mismatch {f1.shape} vs {f2.shape}")
    if f1.shape != (sampling.num_frequencies, sampling.num_slow_times):
        raise DimensionError("signals do not match the sampling grid")
    if mode == "auto" and not np.array_equal(f1, f2):
        raise InvalidConfigError("auto mode requires f2 identical to f1")
    d = f1 * np.conj(f2)
    return Measurement(d.ravel(order="F"), sampling, mode)


def add_measurement_noise(measurement, std, seed):
    """Additive complex Gaussian noise hook (std per complex sample)."""
    if std <= 0:
        return measurement
    rng = np.random.default_rng(seed)
    n = measurement.values.size
    noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * (std / np.sqrt(2))
    return Measurement(measurement.values + noise, measurement.grid,
                       measurement.mode)


def correlated_kernel_entry(geometry, omega, s, x_k, x_kp,
                            amplitude_mode="unit", waveform=None):
    """One entry of the correlated imaging kernel.

    Phase: |x_k - g1(s)| - |x_k' - g2(s)| + yhat.(x_k' - x_k); the sign
    of the transmitter term is fixed by the far-field limit of the
    correlated received signals, so that the kernel applied to a lifted
    scene reproduces the correlation of far-field signals exactly.
    Amplitude: 1 in unit mode, else
    J(w)^2* / ((4 pi)^2 |x_k - g1| |x_k' - g2| |y|^2).
    """
    waveform = waveform or _flat_waveform
    x_k = np.asarray(x_k, dtype=float)
    x_kp = np.asarray(x_kp, dtype=float)
    g1 = geometry.receiver1.position(s)
    g2 = geometry.receiver2.position(s)
    tx = geometry.transmitter
    r1 = np.linalg.norm(x_k - g1, axis=-1)
    r2 = np.linalg.norm(x_kp - g2, axis=-1)
    phase = r1 - r2 + tx.unit_direction @ (x_kp - x_k)
    entry = np.exp(-1j * (np.asarray(omega) / C0) * phase)
    if amplitude_mode == "geometric":
        j = np.asarray(waveform(omega), dtype=complex)
        entry = entry * (j * np.conj(j)) / (FOUR_PI ** 2 * r1 * r2 * tx.range ** 2)
    elif amplitude_mode != "unit":
        raise InvalidConfigError("amplitude_mode must be 'unit' or 'geometric'")
    return entry


def _factor_matrices(grid, geometry, sampling, amplitude_mode, waveform):
    """Factor matrices U, V with F[r, k + k'*N] = U[r, k] conj(V[r, k'])."""
    waveform = waveform or _flat_waveform
    px = grid.pixel_centers
    omegas = sampling.frequencies
    slow = sampling.slow_times
    tx = geometry.transmitter
    proj = px @ tx.unit_direction  # (N,)

    def one_side(traj):
        gpos = traj.position(slow)  # (P,3)
        rng = np.linalg.norm(px[None, :, :] - gpos[:, None, :], axis=2)  # (P,N)
        ph = (omegas[None, :, None] / C0) * (rng[:, None, :] - proj[None, None, :])
        mat = np.exp(-1j * ph)  # (P,M,N) -> rows r = m + p*M
        if amplitude_mode == "geometric":
            j = np.asarray(waveform(omegas), dtype=complex)
            mat = mat * (j[None, :, None] / (FOUR_PI * rng[:, None, :] * tx.range))
        return mat.reshape(-1, grid.npix)

    u = one_side(geometry.receiver1)
    v = u if geometry.collocated else one_side(geometry.receiver2)
    return u, v


def vec_kron(matrix):
    """Column-stack a Kronecker matrix into a vector."""
    m = matrix.entries if isinstance(matrix, KroneckerMatrix) else np.asarray(matrix)
    return m.ravel(order="F")


def unvec_kron(vector, npix):
    """Inverse of vec_kron."""
    vector = np.asarray(vector)
    if vector.size != npix * npix:
        raise DimensionError("vector length is not npix^2")
    return vector.reshape((npix, npix), order="F")


class ForwardOperator:
    """Discrete lifted forward map from Kronecker scenes to correlated data.

    Stores the per-row factors (the matrix-free representation); an
    explicit dense matrix can be materialized on demand, subject to a
    memory budget.  An optional scalar normalization rescales the map
    so its largest singular value is ~1.
    """

    def __init__(self, grid, geometry, sampling, amplitude_mode="unit",
                 waveform=None, scale=1.0, representation="factored",
                 memory_budget=None):
        if representation not in ("factored", "explicit"):
            raise InvalidConfigError("representation must be 'factored' or 'explicit'")
        self.grid = grid
        self.geometry = geometry
        self.sampling = sampling
        self.amplitude_mode = amplitude_mode
        self.waveform = waveform
        self.scale = float(scale)
        self.representation = representation
        self.memory_budget = memory_budget
        self._u, self._v = _factor_matrices(grid, geometry, sampling,
                                            amplitude_mode, waveform)
        self._matrix = None
        if representation == "explicit":
            self._matrix = self._build_explicit()

    @property
    def shape(self):
        return (self.sampling.num_samples, self.grid.npix ** 2)

    def explicit_bytes(self):
        return self.shape[0] * self.shape[1] * 16

    def _build_explicit(self):
        budget = self.memory_budget
        if budget is None:
            budget = DEFAULT_MEMORY_BUDGET
        if self.explicit_bytes() > budget:
            raise MemoryBudgetError(
                f"explicit operator needs {self.explicit_bytes()} bytes "
                f"(> budget {budget}); use the factored (matrix-free) form")
        # Assembled entrywise from the kernel formula rather than from the
        # factor matrices, so the two representations can be cross-checked.
        px = self.grid.pixel_centers
        n = self.grid.npix
        omegas = self.sampling.frequencies
        slow = self.sampling.slow_times
        tx = self.geometry.transmitter
        g1 = self.geometry.receiver1.position(slow)
        g2 = self.geometry.receiver2.position(slow)
        r1 = np.linalg.norm(px[None, :, :] - g1[:, None, :], axis=2)  # (P,N)
        r2 = np.linalg.norm(px[None, :, :] - g2[:, None, :], axis=2)
        proj = px @ tx.unit_direction
        # phase[p, k, k'] = r1[p,k] - r2[p,k'] + proj[k'] - proj[k]
        phase = (r1[:, :, None] - r2[:, None, :]
                 + proj[None, None, :] - proj[None, :, None])
        rows = []
        wf = self.waveform or _flat_waveform
        jw = np.asarray(wf(omegas), dtype=complex)
        for p in range(slow.size):
            block = np.exp(-1j * np.multiply.outer(omegas / C0, phase[p]))  # (M,N,N)
            if self.amplitude_mode == "geometric":
                amp = 1.0 / (FOUR_PI ** 2 * tx.range ** 2
                             * np.multiply.outer(r1[p], r2[p]))
                block = block * (jw * np.conj(jw))[:, None, None] * amp[None, :, :]
            # column c = k + k'*N: Fortran-ravel the (k, k') axes
            rows.append(block.reshape(omegas.size, n * n, order="F"))
        return self.scale * np.concatenate(rows, axis=0)

    def explicit_matrix(self):
        if self._matrix is None:
            self._matrix = self._build_explicit()
        return self._matrix

    def _as_matrix_input(self, x):
        x = np.asarray(x, dtype=complex)
        n = self.grid.npix
        if x.ndim == 1:
            if x.size != n * n:
                raise DimensionError("input length is not npix^2")
            return x.reshape((n, n), order="F")
        if x.shape == (n, n):
            return x
        raise DimensionError("expected a vectorized or square Kronecker scene")

    def apply_kron(self, rho):
        """Apply to a Kronecker matrix (or its vectorization)."""
        if isinstance(rho, KroneckerMatrix):
            rho = rho.entries
        mat = self._as_matrix_input(rho)
        if self.representation == "explicit":
            return self._matrix @ mat.ravel(order="F")
        t = mat @ self._v.conj().T  # (N, MP)
        return self.scale * np.einsum("rk,kr->r", self._u, t)

    def apply(self, vec):
        """Forward action on a column-stacked scene vector."""
        return self.apply_kron(vec)

    def apply_lifted(self, vectors, coeffs=None):
        """Apply to sum_j c_j v_j v_j^H given the factors v_j.

        vectors: (npix, r); coeffs: (r,) real, default all ones.  Much
        cheaper than forming the matrix when r << npix.
        """
        vectors = np.asarray(vectors, dtype=complex)
        if vectors.ndim == 1:
            vectors = vectors[:, None]
        a = self._u @ vectors      # (MP, r)
        b = self._v @ vectors
        if coeffs is None:
            out = np.sum(a * np.conj(b), axis=1)
        else:
            out = np.sum(a * np.asarray(coeffs)[None, :] * np.conj(b), axis=1)
        return self.scale * out

    def adjoint_matrix(self, data):
        """Adjoint action reshaped to an npix x npix matrix."""
        data = np.asarray(data, dtype=complex)
        if data.size != self.sampling.num_samples:
            raise DimensionError("data length does not match sampling grid")
        if self.representation == "explicit":
            n = self.grid.npix
            return (self._matrix.conj().T @ data).reshape((n, n), order="F")
        return self.scale * ((self._u.conj().T * data[None, :]) @ self._v)

    def adjoint(self, data):
        """Adjoint action as a column-stacked vector."""
        return self.adjoint_matrix(data).ravel(order="F")


def assemble_forward(grid, geometry, sampling, amplitude_mode="unit",
                     waveform=None, representation="factored",
                     normalize=False, memory_budget=None):
    """Build the forward operator; optionally rescale so sigma_max ~ 1."""
    op = ForwardOperator(grid, geometry, sampling, amplitude_mode, waveform,
                         representation=representation,
                         memory_budget=memory_budget)
    if normalize:
        sigma = largest_singular_value(op)
        if sigma > 0:
            op = ForwardOperator(grid, geometry, sampling, amplitude_mode,
                                 waveform, scale=1.0 / sigma,
                                 representation=representation,
                                 memory_budget=memory_budget)
    return op


def apply_forward(operator, vec):
    return operator.apply(vec)


def apply_adjoint(operator, data):
    return operator.adjoint(data)


def largest_singular_value(operator, tol=1e-6, max_iterations=500, seed=0):
    """Largest singular value via power iteration on F^H F.

    Deterministic seeded start; warns and returns the last estimate if
    the relative change has not dropped below tol within the cap.
    """
    n2 = operator.shape[1]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n2) + 1j * rng.standard_normal(n2)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(max_iterations):
        z = operator.adjoint(operator.apply(x))
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        x = z / nz
        new = float(np.sqrt(nz))
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    warnings.warn(
        f"power iteration did not converge to rel tol {tol} in "
        f"{max_iterations} iterations; returning last estimate", RuntimeWarning)
    return sigma
