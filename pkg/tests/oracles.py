"""Slow, independent reference computations used only by tests."""

import math


def gauss_solve(M, r):
    """Gaussian elimination with partial pivoting on nested Python lists."""
    n = len(M)
    a = [list(map(float, row)) + [float(r[i])] for i, row in enumerate(M)]
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(a[i][col]))
        if a[piv][col] == 0.0:
            raise ZeroDivisionError("singular")
        a[col], a[piv] = a[piv], a[col]
        for i in range(col + 1, n):
            f = a[i][col] / a[col][col]
            if f:
                for j in range(col, n + 1):
                    a[i][j] -= f * a[col][j]
    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        s = a[i][n] - sum(a[i][j] * x[j] for j in range(i + 1, n))
        x[i] = s / a[i][i]
    return x


def matmul_t(X, Y):
    """X @ Y.T by explicit triple loop."""
    out = []
    for xi in X:
        row = []
        for yj in Y:
            s = 0.0
            for a, b in zip(xi, yj):
                s += a * b
            row.append(s)
        out.append(row)
    return out


def rbf_scalar(x, y, sigma):
    return math.exp(-sum((a - b) ** 2 for a, b in zip(x, y)) / (2.0 * sigma * sigma))
