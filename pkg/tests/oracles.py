"""Independent reference implementations used by the tests.

Nothing here imports the package: quaternions are plain tuples multiplied through
the unit table, eigenvalues come from inertia counting, and the diagonal LMI is
scanned on a grid.
"""
import math

# products of the units 1, i, j, k as (sign, index)
_TABLE = {
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
    (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
    (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
}


def qmul(p, q):
    out = [0.0, 0.0, 0.0, 0.0]
    for a in range(4):
        for b in range(4):
            sign, idx = _TABLE[(a, b)]
            out[idx] += sign * p[a] * q[b]
    return tuple(out)


def qconj(p):
    return (p[0], -p[1], -p[2], -p[3])


def qadd(*ps):
    return tuple(sum(c) for c in zip(*ps))


def qscale(c, p):
    return tuple(c * v for v in p)


def qnorm(p):
    return math.sqrt(sum(v * v for v in p))


def ref_bracket(x, y, eps_b=0.1):
    """eps_b (conj(x) y - conj(y) x) on single quaternions."""
    return qscale(eps_b, qadd(qmul(qconj(x), y), qscale(-1.0, qmul(qconj(y), x))))


def jacobiator(L, x, y, z):
    return qadd(L(x, L(y, z)), L(y, L(z, x)), L(z, L(x, y)))


def omega0(L, x, y):
    return qscale(1.0 / 3.0, jacobiator(L, x, y, qadd(x, y)))


def d_omega(L, w, x0, x1, x2):
    """Six-term coboundary, signs written out term by term."""
    t1 = L(x0, w(x1, x2))
    t2 = qscale(-1.0, L(x1, w(x0, x2)))
    t3 = L(x2, w(x0, x1))
    t4 = w(L(x0, x1), x2)
    t5 = qscale(-1.0, w(L(x0, x2), x1))
    t6 = w(L(x1, x2), x0)
    return qadd(t1, t2, t3, t4, t5, t6)


def phi_left(q):
    """Real 4x4 matrix of y -> q y, built column by column from unit products."""
    cols = [qmul(q, e) for e in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))]
    return [[cols[c][r] for c in range(4)] for r in range(4)]


def negative_count(S, sigma):
    """Number of eigenvalues of symmetric S below sigma, by Sylvester inertia of an
    unpivoted LDL^T factorization of S - sigma I."""
    n = len(S)
    M = [[S[i][j] - (sigma if i == j else 0.0) for j in range(n)] for i in range(n)]
    count = 0
    for k in range(n):
        piv = M[k][k]
        if piv == 0.0:
            piv = -1e-300
        if piv < 0:
            count += 1
        for i in range(k + 1, n):
            f = M[i][k] / piv
            for j in range(k + 1, n):
                M[i][j] -= f * M[k][j]
    return count


def bisect_eigenvalues(S, tol=1e-12):
    """All eigenvalues of symmetric S, ascending, by bisection on inertia counts."""
    n = len(S)
    r = max(sum(abs(v) for v in row) for row in S) + 1.0
    out = []
    for k in range(n):
        lo, hi = -r, r
        while hi - lo > tol * max(1.0, abs(lo) + abs(hi)):
            mid = 0.5 * (lo + hi)
            if negative_count(S, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return out


def diagonal_lmi_beta(a, theta, mu, step=1e-4):
    """Largest beta on a grid of spacing ``step`` for which some diagonal P with
    1 <= p_i <= mu satisfies 2 a_i p_i + theta <= -beta p_i for every i."""
    def feasible(beta):
        for ai in a:
            c = 2.0 * ai + beta
            if theta <= 0.0:
                if c > 0 and theta + c > 0:
                    return False
                continue
            if c >= 0.0:
                return False
            if theta / -c > mu:
                return False
        return True

    top = -2.0 * max(a)
    best = None
    k = 1
    while k * step < top:
        if feasible(k * step):
            best = k * step
        else:
            break
        k += 1
    return best
