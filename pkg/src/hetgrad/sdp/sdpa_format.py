"""SDPA sparse (.dat-s) writer and reader for StandardSdp instances.

The file encodes the dual pair of the maximization: SDPA's reader solves

    min d'y   s.t.   sum_j y_j F_j - F_0 >= 0 (block diagonal),

whose optimal value equals the StandardSdp maximum under strong duality.
Block 1 is the PSD block G. Block 2 is one diagonal block holding, in
order, a slack entry per inequality and a +/- pair per free variable (so
equality of the split pair pins sum_j y_j a_j = c). A structured comment
line carries the block-2 composition so this module's reader can rebuild
the exact StandardSdp; external SDPA consumers ignore comments.
"""

from __future__ import annotations

import io

import numpy as np

from .model import LinearConstraint, StandardSdp

__all__ = ["write_sdpa", "read_sdpa"]


def _entries(dest, matno, blkno, M, base=0):
    n = M.shape[0]
    for a in range(n):
        for b in range(a, n):
            v = M[a, b]
            if v != 0.0:
                dest.append(f"{matno} {blkno} {base + a + 1} {base + b + 1} "
                            f"{v:.17g}")


def _diag_entries(dest, matno, blkno, values, base):
    for t, v in enumerate(values):
        if v != 0.0:
            dest.append(f"{matno} {blkno} {base + t + 1} {base + t + 1} "
                        f"{v:.17g}")


def write_sdpa(sdp: StandardSdp, sink) -> None:
    """Write the .dat-s text for this problem to a text sink."""
    n = sdp.psd_dim
    nF = sdp.free_dim
    cons = sdp.constraints
    ineq_rows = [j for j, c in enumerate(cons) if c.sense == "<="]
    slack_of = {j: t for t, j in enumerate(ineq_rows)}
    n_ineq = len(ineq_rows)
    diag = n_ineq + 2 * nF

    lines = [f'"hetgrad sdpa export: nineq={n_ineq} nfree={nF} npsd={n}']
    lines.append(f"{len(cons)}")
    if diag:
        lines.append("2")
        lines.append(f"{n} -{diag}")
    else:
        lines.append("1")
        lines.append(f"{n}")
    lines.append(" ".join(f"{c.d:.17g}" for c in cons))

    entries: list[str] = []
    _entries(entries, 0, 1, sdp.C)
    if nF:
        _diag_entries(entries, 0, 2, sdp.c, n_ineq)
        _diag_entries(entries, 0, 2, -sdp.c, n_ineq + nF)
    for j, con in enumerate(cons):
        _entries(entries, j + 1, 1, con.A)
        if j in slack_of:
            entries.append(f"{j + 1} 2 {slack_of[j] + 1} {slack_of[j] + 1} 1")
        if nF:
            _diag_entries(entries, j + 1, 2, con.a, n_ineq)
            _diag_entries(entries, j + 1, 2, -con.a, n_ineq + nF)
    lines.extend(entries)
    sink.write("\n".join(lines) + "\n")


def read_sdpa(source) -> StandardSdp:
    """Rebuild a StandardSdp from text produced by write_sdpa."""
    if isinstance(source, str):
        source = io.StringIO(source)
    n_ineq = n_free = n_psd = None
    tokens: list[str] = []
    header: list[float] = []
    for raw in source:
        line = raw.strip()
        if not line:
            continue
        if line[0] in '"*':
            for part in line.strip('"* ').split():
                if "=" in part:
                    key, val = part.split("=", 1)
                    if key == "nineq":
                        n_ineq = int(val)
                    elif key == "nfree":
                        n_free = int(val)
                    elif key == "npsd":
                        n_psd = int(val)
            continue
        tokens.append(line)
    if n_ineq is None or n_free is None or n_psd is None:
        raise ValueError("missing hetgrad structure comment; cannot rebuild "
                         "a StandardSdp from a foreign SDPA file")

    m = int(float(tokens[0]))
    nblocks = int(float(tokens[1]))
    block_sizes = [int(float(t)) for t in tokens[2].split()]
    if len(block_sizes) != nblocks or block_sizes[0] != n_psd:
        raise ValueError("inconsistent block structure")
    d = [float(t) for t in tokens[3].split()]
    if len(d) != m:
        raise ValueError(f"expected {m} objective entries, got {len(d)}")

    C = np.zeros((n_psd, n_psd))
    c = np.zeros(n_free)
    A = [np.zeros((n_psd, n_psd)) for _ in range(m)]
    a = [np.zeros(n_free) for _ in range(m)]
    senses = ["="] * m
    for line in tokens[4:]:
        matno_s, blkno_s, i_s, j_s, val_s = line.split()
        matno, blkno = int(matno_s), int(blkno_s)
        i, j, val = int(i_s) - 1, int(j_s) - 1, float(val_s)
        if blkno == 1:
            target = C if matno == 0 else A[matno - 1]
            target[i, j] = val
            target[j, i] = val
        else:
            if i != j:
                raise ValueError("off-diagonal entry in the diagonal block")
            if i < n_ineq:
                if matno == 0:
                    raise ValueError("objective touches a slack entry")
                senses[matno - 1] = "<="
            elif i < n_ineq + n_free:
                t = i - n_ineq
                if matno == 0:
                    c[t] = val
                else:
                    a[matno - 1][t] = val
            # the mirrored -c / -a entries are redundant on read

    cons = [LinearConstraint(A[j], a[j], senses[j], d[j], f"sdpa[{j}]")
            for j in range(m)]
    return StandardSdp(C, c, cons)
