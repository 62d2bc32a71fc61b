"""Pure-Python / numpy twins of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np
from scipy import sparse


def _lev(a: str, b: str, bound: int = -1) -> int:
    lb = len(b)
    row = list(range(lb + 1))
    for i in range(1, len(a) + 1):
        ca = a[i - 1]
        diag = row[0]
        row[0] = i
        rowmin = i
        for j in range(1, lb + 1):
            up = row[j]
            if ca == b[j - 1]:
                cur = diag
            else:
                cur = min(diag, up, row[j - 1]) + 1
            row[j] = cur
            diag = up
            if cur < rowmin:
                rowmin = cur
        if bound >= 0 and rowmin > bound:
            return bound + 1
    return row[lb]


def levenshtein(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    return _lev(a, b)


def _max_allowed(m: int, threshold: float) -> int:
    d = int(threshold * m)
    while d + 1 <= m and (d + 1) / m <= threshold:
        d += 1
    while d >= 0 and d / m > threshold:
        d -= 1
    return d


def title_match_pairs(titles: list[str], threshold: float) -> list[tuple[int, int]]:
    n = len(titles)
    if n < 2:
        return []
    order = sorted(range(n), key=lambda k: len(titles[k]))
    out = []
    for p in range(n):
        i = order[p]
        li = len(titles[i])
        for q in range(p + 1, n):
            j = order[q]
            lj = len(titles[j])
            if lj == 0:
                continue
            if (lj - li) / lj > threshold:
                break
            bound = _max_allowed(lj, threshold)
            if bound < 0:
                continue
            if _lev(titles[j], titles[i], bound) <= bound:
                out.append((i, j) if i < j else (j, i))
    out.sort()
    return out


def _cosine_from_dots(dots: np.ndarray, qn: np.ndarray, xn: np.ndarray) -> np.ndarray:
    denom = np.outer(qn, xn)
    out = np.zeros_like(dots)
    np.divide(dots, denom, out=out, where=denom != 0.0)
    return np.clip(out, -1.0, 1.0)


def dense_cosine_rows(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    if Q.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {X.shape[1]}")
    qn = np.sqrt(np.einsum("ij,ij->i", Q, Q))
    xn = np.sqrt(np.einsum("ij,ij->i", X, X))
    return _cosine_from_dots(Q @ X.T, qn, xn)


def sparse_cosine_rows(q_indptr, q_indices, q_data, x_indptr, x_indices, x_data, n_features):
    nq, nx = len(q_indptr) - 1, len(x_indptr) - 1
    Qs = sparse.csr_matrix((q_data, q_indices, q_indptr), shape=(nq, n_features))
    Xs = sparse.csr_matrix((x_data, x_indices, x_indptr), shape=(nx, n_features))
    qn = np.sqrt(np.asarray(Qs.multiply(Qs).sum(axis=1)).ravel())
    xn = np.sqrt(np.asarray(Xs.multiply(Xs).sum(axis=1)).ravel())
    dots = np.asarray((Qs @ Xs.T).todense(), dtype=np.float64)
    return _cosine_from_dots(dots, qn, xn)


def transe_sgd_step(E, R, ph, pr, pt, nh, nt, lr, margin, l1) -> float:
    dpos = E[ph] + R[pr] - E[pt]
    dneg = E[nh] + R[pr] - E[nt]
    if l1:
        npos = np.abs(dpos).sum(axis=1)
        nneg = np.abs(dneg).sum(axis=1)
        gp, gn = np.sign(dpos), np.sign(dneg)
    else:
        npos = np.sqrt((dpos * dpos).sum(axis=1))
        nneg = np.sqrt((dneg * dneg).sum(axis=1))
        gp = np.divide(dpos, npos[:, None], out=np.zeros_like(dpos), where=npos[:, None] > 0)
        gn = np.divide(dneg, nneg[:, None], out=np.zeros_like(dneg), where=nneg[:, None] > 0)
    loss = npos - nneg + margin
    active = loss > 0.0
    gp[~active] = 0.0
    gn[~active] = 0.0
    np.add.at(E, ph, -lr * gp)
    np.add.at(R, pr, -lr * (gp - gn))
    np.add.at(E, pt, lr * gp)
    np.add.at(E, nh, lr * gn)
    np.add.at(E, nt, -lr * gn)
    touched = np.unique(np.concatenate([ph, pt, nh, nt]))
    norms = np.sqrt((E[touched] ** 2).sum(axis=1))
    norms[norms == 0] = 1.0
    E[touched] /= norms[:, None]
    return float(loss[active].sum())
