"""Jones calculus for single photons and its lift to photon pairs in one mode.

Two indistinguishable photons sharing one spatial mode span the symmetric
(bosonic) three-dimensional subspace with orthonormal basis

    {|HH>, |HV>, |VV>},   |HV> = (|H>|V> + |V>|H>) / sqrt(2),

so a photon pair behaves as a spin-1 (qutrit) system.  Wave plates act on
each photon with the same 2x2 Jones matrix; on the pair this is the
symmetric-square representation computed by :func:`symmetric_lift`.

Conventions
-----------
* Wave plates are ``R(theta) @ D @ R(-theta)`` with ``R`` the counter-
  clockwise rotation and the fast axis horizontal at ``theta = 0``.
* Retardances: ``D = diag(1, -1)`` for a half-wave plate and
  ``D = diag(1, -1j)`` for a quarter-wave plate.  With this phase sign a
  quarter-wave plate at 45 deg maps |H> to the right-circular state and a
  half-wave plate at 22.5 deg maps |H> to the plus-diagonal state.
* Global phases are physically irrelevant; the helpers below fix them only
  to make outputs deterministic.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "H", "V", "P", "M", "R", "L",
    "waveplate", "symmetric_lift", "two_photon_product",
    "pair_state_hv", "pair_state_pm", "pair_state_rl",
    "fix_global_phase", "equal_up_to_phase", "is_unitary",
]

_SQRT2 = math.sqrt(2.0)

# Single-photon Jones vectors.
H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
P = np.array([1.0, 1.0], dtype=complex) / _SQRT2        # plus-diagonal
M = np.array([1.0, -1.0], dtype=complex) / _SQRT2       # minus-diagonal
R = np.array([1.0, 1.0j], dtype=complex) / _SQRT2       # right-circular
L = np.array([1.0, -1.0j], dtype=complex) / _SQRT2      # left-circular

UNITARITY_TOL = 1e-9


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def waveplate(kind: str, angle: float) -> np.ndarray:
    """Jones matrix of a wave plate with its fast axis at ``angle`` radians.

    Parameters
    ----------
    kind : {'quarter', 'half'}
    angle : float
        Fast-axis angle from horizontal, radians.

    Returns
    -------
    (2, 2) complex ndarray, unitary.
    """
    if not math.isfinite(angle):
        raise ValueError(f"wave-plate angle must be finite, got {angle!r}")
    if kind == "quarter":
        d = np.diag([1.0, -1.0j]).astype(complex)
    elif kind == "half":
        d = np.diag([1.0, -1.0]).astype(complex)
    else:
        raise ValueError(f"unknown wave-plate kind {kind!r}")
    rot = _rotation(angle)
    return rot @ d @ rot.conj().T


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def symmetric_lift(u: np.ndarray) -> np.ndarray:
    """Lift a single-photon unitary to the symmetric two-photon subspace.

    For ``u = [[a, b], [c, d]]`` the lifted matrix maps the pair basis as

        |HH> -> a^2 |HH> + sqrt(2) a c |HV> + c^2 |VV>
        |HV> -> sqrt(2) a b |HH> + (a d + b c) |HV> + sqrt(2) c d |VV>
        |VV> -> b^2 |HH> + sqrt(2) b d |HV> + d^2 |VV>

    which is the spin-1 representation of ``u``; it is a homomorphism and
    unitary whenever ``u`` is.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    if not is_unitary(u, UNITARITY_TOL):
        raise ValueError("input matrix is not unitary within 1e-9")
    a, b, c, d = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
    return np.array(
        [
            [a * a, _SQRT2 * a * b, b * b],
            [_SQRT2 * a * c, a * d + b * c, _SQRT2 * b * d],
            [c * c, _SQRT2 * c * d, d * d],
        ],
        dtype=complex,
    )


def two_photon_product(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Normalized symmetrized product of two single-photon states.

    Returns the pair state of one photon in ``p`` and one in ``q`` sharing a
    mode, as coefficients over {|HH>, |HV>, |VV>}.  The global phase is fixed
    so the first nonzero coefficient in basis order is real and non-negative.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    if p.shape != (2,) or q.shape != (2,):
        raise ValueError("single-photon states must be length-2 vectors")
    coeff = np.array(
        [p[0] * q[0], (p[0] * q[1] + p[1] * q[0]) / _SQRT2, p[1] * q[1]],
        dtype=complex,
    )
    norm = np.linalg.norm(coeff)
    if norm < 1e-12:
        raise RuntimeError("degenerate symmetrized product (zero vector)")
    coeff = coeff / norm
    first = np.flatnonzero(np.abs(coeff) > 1e-12)[0]
    return coeff * np.exp(-1j * np.angle(coeff[first]))


def pair_state_hv() -> np.ndarray:
    """One H and one V photon in the same mode: (0, 1, 0)."""
    return two_photon_product(H, V)


def pair_state_pm() -> np.ndarray:
    """One plus- and one minus-diagonal photon: (|HH> - |VV>)/sqrt(2)."""
    return two_photon_product(P, M)


def pair_state_rl() -> np.ndarray:
    """One right- and one left-circular photon: (|HH> + |VV>)/sqrt(2)."""
    return two_photon_product(R, L)


def fix_global_phase(state: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude amplitude is real >= 0."""
    state = np.asarray(state, dtype=complex)
    idx = int(np.argmax(np.abs(state)))
    mag = abs(state[idx])
    if mag == 0.0:
        return state.copy()
    return state * (state[idx].conjugate() / mag)


def equal_up_to_phase(x: np.ndarray, y: np.ndarray, tol: float = 1e-10) -> bool:
    """True when two normalized states differ only by a global phase."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    if x.shape != y.shape:
        return False
    return bool(abs(abs(np.vdot(x, y)) - 1.0) <= tol)
