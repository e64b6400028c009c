import numpy as np

from ..errors import NotHermitianError


def hermitian_embed(H: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    """Real symmetric ``2n x 2n`` embedding ``[[Re H, -Im H], [Im H, Re H]]``.

    The map is linear, preserves semidefiniteness in both directions and
    doubles the trace; each eigenvalue of ``H`` appears twice.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {H.shape}")
    if not np.allclose(H, H.conj().T, rtol=0.0, atol=atol):
        raise NotHermitianError("matrix is not Hermitian")
    A, B = H.real, H.imag
    return np.block([[A, -B], [B, A]])


def hermitian_unembed(S: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`hermitian_embed` with respect to the trace inner product.

    For any real symmetric ``S`` (2n x 2n) and Hermitian ``X``,
    ``<hermitian_embed(X), S> == Re Tr(hermitian_unembed(S) X)``.  If ``S``
    is PSD, so is the result.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0] // 2
    S11, S12 = S[:n, :n], S[:n, n:]
    S21, S22 = S[n:, :n], S[n:, n:]
    C = S11 + S22
    D = S21 - S12
    Y = C + 1j * D
    return 0.5 * (Y + Y.conj().T)
