"""SDPA sparse-format problems and a dense symmetric eigensolver.

Reads the standard ``.dat-s`` text layout: optional comment lines starting
with ``"`` or ``*``, the number of decision variables, the number of blocks,
the block sizes (negative size means a diagonal block), the cost vector, and
then one entry per line as ``matno blkno i j value`` with ``matno 0``
denoting the constant matrix.  Only the upper triangle is stored; symmetric
completion is implicit.

The smallest eigenvalue of the assembled blocks is what the penalty
objective needs, and the matrices here are tiny, so a cyclic Jacobi sweep
(vectorized over a batch of matrices) does the job.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SdpaParseError(ValueError):
    """Malformed SDPA sparse input; the message names the offending line."""


@dataclass(frozen=True)
class SdpProblem:
    """A problem in SDPA sparse form: minimize costs @ x with
    ``sum_i x_i F_i - F_0`` positive semidefinite, blockwise."""

    m: int
    block_sizes: tuple[int, ...]
    costs: np.ndarray
    entries: tuple[tuple[int, int, int, int, float], ...]

    @property
    def n_total(self) -> int:
        return int(sum(abs(s) for s in self.block_sizes))


def _tokens(line: str) -> list[str]:
    return line.replace(",", " ").replace("{", " ").replace("}", " ") \
               .replace("(", " ").replace(")", " ").split()


def parse_sdpa_sparse(text: str) -> SdpProblem:
    """Parse SDPA sparse text into an :class:`SdpProblem`."""
    lines = text.splitlines()
    cursor = 0

    def next_data_line(expect: str) -> tuple[int, str]:
        nonlocal cursor
        while cursor < len(lines):
            line = lines[cursor]
            cursor += 1
            stripped = line.strip()
            if not stripped or stripped[0] in '"*':
                continue
            return cursor, line
        raise SdpaParseError(f"line {len(lines)}: file truncated, expected {expect}")

    def parse_int(token: str, lineno: int, what: str) -> int:
        try:
            return int(token)
        except ValueError:
            raise SdpaParseError(f"line {lineno}: non-numeric {what} {token!r}") from None

    lineno, line = next_data_line("the number of variables")
    toks = _tokens(line)
    m = parse_int(toks[0], lineno, "variable count")
    if m < 1:
        raise SdpaParseError(f"line {lineno}: variable count must be positive, got {m}")

    lineno, line = next_data_line("the number of blocks")
    nblocks = parse_int(_tokens(line)[0], lineno, "block count")
    if nblocks < 1:
        raise SdpaParseError(f"line {lineno}: block count must be positive, got {nblocks}")

    lineno, line = next_data_line("the block sizes")
    toks = _tokens(line)
    if len(toks) < nblocks:
        raise SdpaParseError(
            f"line {lineno}: expected {nblocks} block sizes, found {len(toks)}")
    sizes = tuple(parse_int(tok, lineno, "block size") for tok in toks[:nblocks])
    if any(s == 0 for s in sizes):
        raise SdpaParseError(f"line {lineno}: block sizes must be nonzero")

    costs: list[float] = []
    while len(costs) < m:
        lineno, line = next_data_line("the cost vector")
        for tok in _tokens(line):
            try:
                costs.append(float(tok))
            except ValueError:
                raise SdpaParseError(
                    f"line {lineno}: non-numeric cost entry {tok!r}") from None
    if len(costs) > m:
        raise SdpaParseError(f"line {lineno}: expected {m} costs, found {len(costs)}")

    entries: list[tuple[int, int, int, int, float]] = []
    while cursor < len(lines):
        line = lines[cursor]
        cursor += 1
        lineno = cursor
        stripped = line.strip()
        if not stripped or stripped[0] in '"*':
            continue
        toks = _tokens(line)
        if len(toks) != 5:
            raise SdpaParseError(
                f"line {lineno}: entry needs 5 fields 'matno blkno i j value', "
                f"found {len(toks)}")
        matno = parse_int(toks[0], lineno, "matrix number")
        blkno = parse_int(toks[1], lineno, "block number")
        i = parse_int(toks[2], lineno, "row index")
        j = parse_int(toks[3], lineno, "column index")
        try:
            value = float(toks[4])
        except ValueError:
            raise SdpaParseError(f"line {lineno}: non-numeric value {toks[4]!r}") from None
        if not 0 <= matno <= m:
            raise SdpaParseError(f"line {lineno}: matrix number {matno} out of range 0..{m}")
        if not 1 <= blkno <= nblocks:
            raise SdpaParseError(f"line {lineno}: block number {blkno} out of range 1..{nblocks}")
        size = sizes[blkno - 1]
        order = abs(size)
        if not (1 <= i <= order and 1 <= j <= order):
            raise SdpaParseError(
                f"line {lineno}: indices ({i}, {j}) exceed block order {order}")
        if size < 0 and i != j:
            raise SdpaParseError(
                f"line {lineno}: off-diagonal entry in diagonal block {blkno}")
        if i > j:
            i, j = j, i
        entries.append((matno, blkno, i, j, value))

    return SdpProblem(m=m, block_sizes=sizes, costs=np.array(costs),
                      entries=tuple(entries))


def serialize_sdpa_sparse(problem: SdpProblem) -> str:
    """Canonical SDPA sparse text for ``problem`` (reparses identically)."""
    out = [str(problem.m), str(len(problem.block_sizes)),
           " ".join(str(s) for s in problem.block_sizes),
           " ".join(f"{c:.17g}" for c in problem.costs)]
    for matno, blkno, i, j, value in problem.entries:
        out.append(f"{matno} {blkno} {i} {j} {value:.17g}")
    return "\n".join(out) + "\n"


def assemble(problem: SdpProblem, x) -> list[np.ndarray]:
    """Materialize the blocks of ``sum_i x_i F_i - F_0`` as dense matrices."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.m,):
        raise ValueError(f"expected {problem.m} variables, got shape {x.shape}")
    blocks = [np.zeros((abs(s), abs(s))) for s in problem.block_sizes]
    for matno, blkno, i, j, value in problem.entries:
        coeff = -value if matno == 0 else x[matno - 1] * value
        block = blocks[blkno - 1]
        block[i - 1, j - 1] += coeff
        if i != j:
            block[j - 1, i - 1] += coeff
    return blocks


def _jacobi_batch(stack: np.ndarray, tol: float, want_vectors: bool = False,
                  max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray | None]:
    """Cyclic Jacobi diagonalization of a batch of symmetric matrices.

    Sweeps rotate every off-diagonal pair once per pass and stop when the
    off-diagonal Frobenius mass of every matrix falls below ``tol`` times its
    original Frobenius norm.  Returns the (unsorted) diagonal eigenvalue
    estimates and, optionally, the accumulated rotation basis.
    """
    A = np.array(stack, dtype=float, copy=True)
    b, d, _ = A.shape
    norms = np.sqrt((A ** 2).sum(axis=(1, 2)))
    thresholds = tol * np.maximum(norms, np.finfo(float).tiny)
    V = None
    if want_vectors:
        V = np.broadcast_to(np.eye(d), (b, d, d)).copy()
    if d == 1:
        return np.diagonal(A, axis1=1, axis2=2).copy(), V

    for _ in range(max_sweeps):
        diag_sq = (np.diagonal(A, axis1=1, axis2=2) ** 2).sum(axis=1)
        off = np.sqrt(np.clip((A ** 2).sum(axis=(1, 2)) - diag_sq, 0.0, None))
        if np.all(off <= thresholds):
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[:, p, q].copy()
                app = A[:, p, p]
                aqq = A[:, q, q]
                with np.errstate(divide="ignore", invalid="ignore"):
                    theta = (aqq - app) / (2.0 * apq)
                    sign = np.where(theta >= 0.0, 1.0, -1.0)
                    t = sign / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(apq == 0.0, 0.0, t)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, :, p].copy()
                col_q = A[:, :, q].copy()
                A[:, :, p] = c[:, None] * col_p - s[:, None] * col_q
                A[:, :, q] = s[:, None] * col_p + c[:, None] * col_q
                row_p = A[:, p, :].copy()
                row_q = A[:, q, :].copy()
                A[:, p, :] = c[:, None] * row_p - s[:, None] * row_q
                A[:, q, :] = s[:, None] * row_p + c[:, None] * row_q
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0
                if want_vectors:
                    v_p = V[:, :, p].copy()
                    v_q = V[:, :, q].copy()
                    V[:, :, p] = c[:, None] * v_p - s[:, None] * v_q
                    V[:, :, q] = s[:, None] * v_p + c[:, None] * v_q
    else:
        raise RuntimeError(f"Jacobi sweeps did not converge within {max_sweeps} passes")
    return np.diagonal(A, axis1=1, axis2=2).copy(), V


def _check_symmetric(matrix: np.ndarray) -> np.ndarray:
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.abs(A).max()) if A.size else 1.0)
    if float(np.abs(A - A.T).max() if A.size else 0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric within 1e-12")
    return A


def jacobi_eigensystem(matrix, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and the rotation basis of a dense symmetric matrix."""
    A = _check_symmetric(matrix)
    values, vectors = _jacobi_batch(A[None, :, :], tol, want_vectors=True)
    return values[0], vectors[0]


def min_eigenvalue(block, tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a dense symmetric block, accurate to
    ``tol * ||block||``."""
    A = _check_symmetric(block)
    if A.size == 0:
        raise ValueError("empty matrix has no eigenvalues")
    values, _ = _jacobi_batch(A[None, :, :], tol)
    return float(values[0].min())
