"""Band-limited periodic force fields with prescribed spectral decay.

A field F: R^d -> R^d is stored as a finite Fourier sum

    F(x) = sum_k alpha(k) exp(2 pi i k.x / L),   k in Z^d, |k|_inf <= K,

with Hermitian symmetry alpha(-k) = conj(alpha(k)) so that F is real.
Fields synthesized here follow the magnitude law

    |alpha(k)| = c |2 pi k / L|^{-(s + d/2 + margin)}

which places F in the fractional Sobolev class H^s with margin to spare,
while sum_k |alpha(k)| = A certifies the L-infinity bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralField",
    "RegularityTarget",
    "synthesize",
    "sobolev_seminorm",
    "mollify",
    "save_field",
    "load_field",
    "field_to_json",
    "field_from_json",
    "gridded_evaluator",
]

TWO_PI = 2.0 * np.pi

# Relative budget for the imaginary residue left by the full complex mode sum.
IMAG_RESIDUE_TOL = 1e-12


@dataclass(frozen=True)
class RegularityTarget:
    """Requested regularity/size for a synthesized field.

    s            Sobolev exponent the field must belong to (H^s).
    cutoff       largest wavenumber K (|k|_inf <= K).
    amplitude    target certified sup bound A = sum |alpha(k)|.
    decay_margin extra spectral decay epsilon on top of the critical rate.
    """

    s: float
    cutoff: int
    amplitude: float
    decay_margin: float = 0.05

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"Sobolev exponent must be positive, got {self.s}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must allow at least one mode, got {self.cutoff}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if self.decay_margin <= 0:
            raise ValueError(f"decay_margin must be positive, got {self.decay_margin}")


class SpectralField:
    """Immutable band-limited field; safe for shared read access.

    Wavevectors are kept lexicographically sorted so mode tables (and their
    serializations) are canonical. ``potential_coeffs`` holds the scalar
    spectrum phi_hat with alpha(k) = -i (2 pi / L) k phi_hat(k) when the
    field is a gradient, enabling exact potential evaluation.
    """

    def __init__(self, dim, period, wavevectors, coeffs, is_gradient=False,
                 potential_coeffs=None, sup_bound=None):
        if dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
        if not period > 0:
            raise ValueError(f"period must be positive, got {period}")
        wavevectors = np.asarray(wavevectors, dtype=np.int64).reshape(-1, dim)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1, dim)
        if wavevectors.shape[0] != coeffs.shape[0]:
            raise ValueError("wavevectors and coeffs disagree in length")
        order = np.lexsort(wavevectors.T[::-1])
        self.dim = int(dim)
        self.period = float(period)
        self.wavevectors = wavevectors[order]
        self.coeffs = coeffs[order]
        self.is_gradient = bool(is_gradient)
        if potential_coeffs is not None:
            potential_coeffs = np.asarray(potential_coeffs, dtype=np.complex128)[order]
        self.potential_coeffs = potential_coeffs
        self._check_hermitian()
        if self.is_gradient:
            self._check_gradient_structure()
        abs_sum = float(np.sum(np.linalg.norm(self.coeffs, axis=1)))
        self.mode_abs_sum = abs_sum
        self.sup_bound = abs_sum if sup_bound is None else float(sup_bound)
        if self.sup_bound < abs_sum * (1.0 - 1e-12):
            raise ValueError("sup_bound below the triangle-inequality certificate")
        self.wavevectors.setflags(write=False)
        self.coeffs.setflags(write=False)
        if self.potential_coeffs is not None:
            self.potential_coeffs.setflags(write=False)
        self._prepare_fast_path()

    # -- construction-time invariants ------------------------------------

    def _check_hermitian(self):
        index = {tuple(k): i for i, k in enumerate(self.wavevectors)}
        for i, k in enumerate(self.wavevectors):
            j = index.get(tuple(-k))
            if j is None:
                raise ValueError(f"mode {tuple(k)} has no conjugate partner")
            if not np.allclose(self.coeffs[i], np.conj(self.coeffs[j]),
                               rtol=0.0, atol=1e-14 * (1.0 + np.abs(self.coeffs[i]).max())):
                raise ValueError(f"Hermitian symmetry violated at k={tuple(k)}")
            if self.potential_coeffs is not None:
                if not np.allclose(self.potential_coeffs[i],
                                   np.conj(self.potential_coeffs[j]),
                                   rtol=0.0, atol=1e-14):
                    raise ValueError(f"potential spectrum not Hermitian at k={tuple(k)}")

    def _check_gradient_structure(self):
        if self.potential_coeffs is None:
            raise ValueError("gradient field requires a potential spectrum")
        expected = (-1j * TWO_PI / self.period) * self.wavevectors * \
            self.potential_coeffs[:, None]
        scale = np.abs(self.coeffs).max(initial=0.0) + 1.0
        if not np.allclose(self.coeffs, expected, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("coefficients do not derive from the stored potential")

    def _prepare_fast_path(self):
        # split the table into k=0 and one representative per conjugate pair
        # (first nonzero component positive); the regrouped sum
        #   F = alpha(0) + sum_{k>0} 2 Re(alpha(k) e^{i theta})
        # is the same finite sum with the cancellation done algebraically.
        kv = self.wavevectors
        nonzero = np.any(kv != 0, axis=1)
        first = np.argmax(kv != 0, axis=1)
        lead = kv[np.arange(len(kv)), first]
        pos = nonzero & (lead > 0)
        zero = ~nonzero
        self._k_pos = kv[pos].astype(np.float64)
        self._c_pos_re = np.ascontiguousarray(self.coeffs[pos].real)
        self._c_pos_im = np.ascontiguousarray(self.coeffs[pos].imag)
        c0 = self.coeffs[zero]
        self._c_zero = c0[0].real if len(c0) else np.zeros(self.dim)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, x):
        """Force at a single point, by the full complex mode sum.

        The imaginary residue must stay below 1e-12 * sum|alpha|; it is
        checked and discarded.
        """
        pt = np.asarray(x, dtype=np.float64).reshape(self.dim)
        if len(self.coeffs) == 0:
            return np.zeros(self.dim)
        phase = (TWO_PI / self.period) * (self.wavevectors @ pt)
        total = np.exp(1j * phase) @ self.coeffs
        resid = np.abs(total.imag).max()
        if resid > IMAG_RESIDUE_TOL * max(self.mode_abs_sum, 1e-300):
            raise ArithmeticError(
                f"imaginary residue {resid:.3e} exceeds tolerance; "
                "mode table is not Hermitian")
        return total.real

    def evaluate_batch(self, x):
        """Force at points ``x`` of shape (n, d), regrouped over conjugate
        pairs so the sum is exactly real. Same finite sum as ``evaluate``."""
        pts = np.asarray(x, dtype=np.float64).reshape(-1, self.dim)
        out = np.broadcast_to(self._c_zero, (pts.shape[0], self.dim)).copy()
        if len(self._k_pos):
            theta = (TWO_PI / self.period) * (pts @ self._k_pos.T)
            out += 2.0 * (np.cos(theta) @ self._c_pos_re
                          - np.sin(theta) @ self._c_pos_im)
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim <= 1:
            return self.evaluate_batch(x)[0]
        return self.evaluate_batch(x)

    def evaluate_potential(self, x):
        """Scalar potential phi with F = -grad phi; gradient fields only."""
        if not self.is_gradient:
            raise ValueError("field has no potential structure")
        pt = np.asarray(x, dtype=np.float64).reshape(self.dim)
        if len(self.potential_coeffs) == 0:
            return 0.0
        phase = (TWO_PI / self.period) * (self.wavevectors @ pt)
        total = np.exp(1j * phase) @ self.potential_coeffs
        pot_sum = float(np.sum(np.abs(self.potential_coeffs)))
        if abs(total.imag) > IMAG_RESIDUE_TOL * max(pot_sum, 1e-300):
            raise ArithmeticError("potential spectrum is not Hermitian")
        return float(total.real)

    # -- housekeeping ------------------------------------------------------

    @property
    def max_wavenumber(self):
        """Largest Euclidean |k| in the table (0.0 for an empty table)."""
        if len(self.wavevectors) == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.wavevectors, axis=1)))

    def mode_count(self):
        return len(self.wavevectors)

    def __repr__(self):
        return (f"SpectralField(dim={self.dim}, period={self.period}, "
                f"modes={self.mode_count()}, sup_bound={self.sup_bound:.6g}, "
                f"gradient={self.is_gradient})")


def synthesize(target, dim=1, period=TWO_PI, seed=0, gradient=False):
    """Build a field matching ``target`` with deterministic pseudorandom phases.

    Magnitudes follow |alpha(k)| = c |2 pi k / L|^{-(s + d/2 + margin)} and c
    normalizes sum|alpha(k)| = amplitude, so ``sup_bound`` equals the target
    amplitude exactly. The same seed reproduces the mode table bit for bit
    (counter-based Philox generator).
    """
    if not isinstance(target, RegularityTarget):
        raise TypeError("target must be a RegularityTarget")
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if not period > 0:
        raise ValueError(f"period must be positive, got {period}")
    K = target.cutoff
    ranges = [np.arange(-K, K + 1)] * dim
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, dim)
    grid = grid[np.any(grid != 0, axis=1)]
    order = np.lexsort(grid.T[::-1])
    kvec = grid[order]

    first = np.argmax(kvec != 0, axis=1)
    lead = kvec[np.arange(len(kvec)), first]
    pos_mask = lead > 0
    kpos = kvec[pos_mask]

    decay = target.s + dim / 2.0 + target.decay_margin
    wnorm = np.linalg.norm(kpos, axis=1) * (TWO_PI / period)
    mag = wnorm ** (-decay)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    phases = rng.uniform(0.0, TWO_PI, size=len(kpos))

    pot_pos = None
    if gradient:
        # phases live on the scalar spectrum; alpha = -i (2 pi / L) k phi_hat
        pot_pos = (mag / wnorm) * np.exp(1j * phases)
        coef_pos = (-1j * TWO_PI / period) * kpos * pot_pos[:, None]
    elif dim == 1:
        coef_pos = (mag * np.exp(1j * phases))[:, None]
    else:
        direction = rng.normal(size=(len(kpos), dim)) + \
            1j * rng.normal(size=(len(kpos), dim))
        direction /= np.linalg.norm(direction, axis=1)[:, None]
        coef_pos = mag[:, None] * direction * np.exp(1j * phases)[:, None]

    raw_abs = 2.0 * float(np.sum(np.linalg.norm(coef_pos, axis=1)))
    scale = target.amplitude / raw_abs
    coef_pos = coef_pos * scale

    coeffs = np.empty((len(kvec), dim), dtype=np.complex128)
    coeffs[pos_mask] = coef_pos
    neg_index = {tuple(k): i for i, k in enumerate(kvec)}
    for i in np.nonzero(pos_mask)[0]:
        coeffs[neg_index[tuple(-kvec[i])]] = np.conj(coeffs[i])

    pot = None
    if gradient:
        pot = np.zeros(len(kvec), dtype=np.complex128)
        pot[pos_mask] = pot_pos * scale
        for i in np.nonzero(pos_mask)[0]:
            pot[neg_index[tuple(-kvec[i])]] = np.conj(pot[i])

    return SpectralField(dim, period, kvec, coeffs, is_gradient=gradient,
                         potential_coeffs=pot)


def sobolev_seminorm(field, s):
    """Discrete H^s seminorm ( sum_{k!=0} |2 pi k/L|^{2s} |alpha(k)|^2 )^{1/2}."""
    kv = field.wavevectors
    if len(kv) == 0:
        return 0.0
    knorm = np.linalg.norm(kv, axis=1) * (TWO_PI / field.period)
    nz = knorm > 0
    amp2 = np.sum(np.abs(field.coeffs[nz]) ** 2, axis=1)
    return float(np.sqrt(np.sum(knorm[nz] ** (2.0 * s) * amp2)))


def mollify(field, n):
    """Sharp spectral truncation to Euclidean |k| <= n.

    Partial sums of the spectrum, so seminorms of the result increase
    monotonically to the original as n grows; n >= max wavenumber returns an
    identical mode table.
    """
    if n < 0:
        raise ValueError(f"cutoff must be nonnegative, got {n}")
    keep = np.linalg.norm(field.wavevectors, axis=1) <= n
    pot = None
    if field.potential_coeffs is not None:
        pot = field.potential_coeffs[keep]
    return SpectralField(field.dim, field.period, field.wavevectors[keep],
                         field.coeffs[keep], is_gradient=field.is_gradient,
                         potential_coeffs=pot)


# -- serialization ----------------------------------------------------------


def field_to_json(field):
    """Canonical JSON document; modes sorted lexicographically by k."""
    modes = []
    for k, c in zip(field.wavevectors, field.coeffs):
        modes.append({
            "k": [int(v) for v in k],
            "re": [float(v) for v in c.real],
            "im": [float(v) for v in c.imag],
        })
    doc = {
        "dim": field.dim,
        "period": field.period,
        "sup_bound": field.sup_bound,
        "is_gradient": field.is_gradient,
        "modes": modes,
    }
    return json.dumps(doc, indent=1)


def field_from_json(text):
    doc = json.loads(text)
    dim = int(doc["dim"])
    kvec = np.array([m["k"] for m in doc["modes"]], dtype=np.int64).reshape(-1, dim)
    coeffs = np.array(
        [[complex(r, i) for r, i in zip(m["re"], m["im"])] for m in doc["modes"]],
        dtype=np.complex128).reshape(-1, dim)
    pot = None
    if doc["is_gradient"]:
        # reconstruct phi_hat from alpha = -i (2 pi/L) k phi_hat (alpha || k)
        period = float(doc["period"])
        pot = np.zeros(len(kvec), dtype=np.complex128)
        for i, k in enumerate(kvec):
            k2 = float(k @ k)
            if k2 == 0.0:
                if np.abs(coeffs[i]).max(initial=0.0) > 0:
                    raise ValueError("gradient field with nonzero mean force")
                continue
            pot[i] = 1j * period * (coeffs[i] @ k) / (TWO_PI * k2)
    return SpectralField(dim, float(doc["period"]), kvec, coeffs,
                         is_gradient=bool(doc["is_gradient"]),
                         potential_coeffs=pot,
                         sup_bound=float(doc["sup_bound"]))


def save_field(field, path):
    with open(path, "w") as fh:
        fh.write(field_to_json(field))
        fh.write("\n")


def load_field(path):
    with open(path) as fh:
        return field_from_json(fh.read())


# -- optional precomputed-grid mode (not used by any acceptance path) --------


def gridded_evaluator(field, points_per_axis=4096):
    """Tabulated evaluation with linear interpolation; d=1 only.

    Cheap but perturbs the field between grid nodes, so correctness-mode
    studies must keep using direct summation.
    """
    if field.dim != 1:
        raise NotImplementedError("grid mode is implemented for d=1 only")
    xs = np.linspace(0.0, field.period, points_per_axis, endpoint=False)
    table = field.evaluate_batch(xs[:, None])[:, 0]

    def interpolate(x):
        pts = np.asarray(x, dtype=np.float64).reshape(-1)
        u = np.mod(pts, field.period) / field.period * points_per_axis
        i0 = np.floor(u).astype(np.int64) % points_per_axis
        i1 = (i0 + 1) % points_per_axis
        w = u - np.floor(u)
        return ((1.0 - w) * table[i0] + w * table[i1])[:, None]

    return interpolate
