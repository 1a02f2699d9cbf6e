#!/usr/bin/env python3
"""SDPA-format solver adapter: `sdpa_cvxpy.py input.dat-s output.sol`.

Solves  min c.x  s.t.  sum_i x_i F_i - F_0 >= 0  with cvxpy (Clarabel, SCS
as a fallback) and writes the solution in the CSDP layout: the x vector on
the first line, then "1 b i j v" for the slack and "2 b i j v" for the dual
matrix (upper triangles, 1-based)."""

import re
import sys

import cvxpy as cp
import numpy as np


def read_sdpa(path):
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and ln.lstrip()[0] not in '*"']
    toks = lambda s: re.sub(r"[{}(),]", " ", s).split()
    m = int(toks(lines[0])[0])
    nb = int(toks(lines[1])[0])
    dims = [int(t) for t in toks(lines[2])[:nb]]
    c = np.array([float(t) for t in toks(lines[3])[:m]])
    F = [[np.zeros((abs(d), abs(d))) for d in dims] for _ in range(m + 1)]
    for ln in lines[4:]:
        k, b, i, j, v = toks(ln)[:5]
        k, b, i, j, v = int(k), int(b) - 1, int(i) - 1, int(j) - 1, float(v)
        F[k][b][i, j] = v
        F[k][b][j, i] = v
    return m, dims, c, F


def solve(m, dims, c, F):
    x = cp.Variable(m)
    cons = []
    for b, d in enumerate(dims):
        k = abs(d)
        if d < 0:
            A = np.stack([np.diag(F[i + 1][b]) for i in range(m)], axis=1) if m else np.zeros((k, 0))
            cons.append(A @ x - np.diag(F[0][b]) >= 0)
        else:
            A = np.stack([F[i + 1][b].reshape(-1) for i in range(m)], axis=1) if m else np.zeros((k * k, 0))
            S = cp.reshape(A @ x - F[0][b].reshape(-1), (k, k), order="C")
            cons.append(0.5 * (S + S.T) >> 0)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    for solver in ("CLARABEL", "SCS"):
        try:
            prob.solve(solver=solver)
        except cp.error.SolverError:
            continue
        if prob.status in ("optimal", "optimal_inaccurate"):
            break
    return x, cons, prob


def write_solution(path, dims, x, cons, F, m):
    xv = np.zeros(m) if x.value is None else x.value
    with open(path, "w") as out:
        out.write(" ".join(f"{v:.17g}" for v in xv) + "\n")
        for tag in (1, 2):
            for b, d in enumerate(dims):
                k = abs(d)
                if tag == 1:
                    M = sum((xv[i] * F[i + 1][b] for i in range(m)), -F[0][b])
                    vals = np.diag(M) if d < 0 else M
                else:
                    dual = cons[b].dual_value
                    if dual is None:
                        continue
                    vals = np.asarray(dual).reshape(-1) if d < 0 else np.asarray(dual)
                for i in range(k):
                    for j in range(i, k):
                        if d < 0 and i != j:
                            continue
                        v = vals[i] if d < 0 else vals[i, j]
                        if v != 0.0:
                            out.write(f"{tag} {b + 1} {i + 1} {j + 1} {v:.17g}\n")


def main():
    if len(sys.argv) != 3:
        sys.stderr.write("usage: sdpa_cvxpy.py input.dat-s output.sol\n")
        return 1
    m, dims, c, F = read_sdpa(sys.argv[1])
    x, cons, prob = solve(m, dims, c, F)
    print(prob.status, prob.value)
    if x.value is None:
        return 2
    write_solution(sys.argv[2], dims, x, cons, F, m)
    return 0


if __name__ == "__main__":
    sys.exit(main())
