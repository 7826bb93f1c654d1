#!/usr/bin/env python3
"""Regenerate the bundled triangulation documents under data/.

Requires SnapPy (pip install snappy) plus numpy/scipy. The C++ code never
calls this; it only reads the JSON written here.

    python3 scripts/export_census.py data/
"""
import json
import sys
from pathlib import Path

import numpy as np
import scipy.optimize as so
import snappy
from snappy.raytracing.cohomology_fractal import rational_cohomology_basis

PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def parity(p):
    return sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j]) % 2


def edge_classes(gluing):
    seen = set()
    classes = []
    for t in range(len(gluing)):
        for a, b in PAIRS:
            if (t, a, b) in seen:
                continue
            cyc = []
            tt, aa, bb = t, a, b
            while (tt, min(aa, bb), max(aa, bb)) not in seen:
                seen.add((tt, min(aa, bb), max(aa, bb)))
                cyc.append([tt, [min(aa, bb), max(aa, bb)], 1 if aa < bb else -1])
                others = [x for x in range(4) if x not in (aa, bb)]
                if parity([aa, bb] + others):
                    others.reverse()
                d = others[1]
                nb, perm = gluing[tt][0][d], gluing[tt][1][d]
                tt, aa, bb = nb, perm[aa], perm[bb]
            classes.append(cyc)
    return classes


def reduce_cocycle(w, gluing):
    """Greedily add tetrahedron coboundaries while the L1 norm drops.

    Raising the primitive on tet t by s changes every face of t by +s and its
    partner face by -s (faces glued to t itself are unchanged)."""
    n = len(gluing)
    w = list(w)
    improved = True
    while improved:
        improved = False
        for t in range(n):
            for s in (1, -1):
                trial = list(w)
                for f in range(4):
                    nb, perm = gluing[t][0][f], gluing[t][1][f]
                    trial[4 * t + f] += s
                    trial[4 * nb + perm[f]] -= s
                if sum(map(abs, trial)) < sum(map(abs, w)):
                    w = trial
                    improved = True
    return w


def peripheral_values(M, w):
    _, pd = M._get_cusp_indices_and_peripheral_curve_data()
    out = []
    for row in (0, 2):
        s = 0
        for t in range(M.num_tetrahedra()):
            c = pd[4 * t + row]
            s += sum(c[4 * v + f] * w[4 * t + f] for v in range(4) for f in range(4))
        out.append(s // 2)
    return out


def rows_from(matrix, n, target):
    rows = []
    for r in matrix:
        r = [int(x) for x in r]
        rows.append({"abc": [[r[3 * i], r[3 * i + 1], r[3 * i + 2]] for i in range(n)],
                     "target": target})
    return rows


def tet_document(gluing, weights):
    return [{"gluings": [{"tet": int(gluing[t][0][f]), "perm": [int(x) for x in gluing[t][1][f]]}
                         for f in range(4)],
             "weights": [float(x) for x in weights[4 * t:4 * t + 4]]}
            for t in range(len(gluing))]


def cusped_document(name, cocycles):
    M = snappy.Manifold(name)
    n = M.num_tetrahedra()
    gluing = M._get_tetrahedra_gluing_data()
    eqs = np.array([[int(x) for x in row] for row in M.gluing_equations()])
    ncusp = M.num_cusps()
    edge_rows = eqs[:n]
    mer = eqs[n::2]
    lon = eqs[n + 1::2]
    doc = {
        "name": name,
        "cusps": ncusp,
        "tets": tet_document(gluing, cocycles[0]["weights_flat"]),
        "edge_classes": edge_classes(gluing),
        "equations": {
            "edge_rows": rows_from(edge_rows, n, 2),
            "completeness_rows": rows_from(np.vstack([mer, lon]), n, 0),
            "cusp_rows_meridian": rows_from(mer, n, 0),
            "cusp_rows_longitude": rows_from(lon, n, 0),
        },
        "shapes": [[float(z.real()), float(z.imag())] for z in M.tetrahedra_shapes("rect")],
        "cocycles": [{"name": c["name"], "peripheral": c["peripheral"],
                      "weights": [c["weights_flat"][4 * t:4 * t + 4] for t in range(n)]}
                     for c in cocycles],
    }
    return doc


def cusped_cocycles(name, labels):
    M = snappy.Manifold(name)
    n = M.num_tetrahedra()
    out = []
    for label, w in zip(labels, rational_cohomology_basis(M)):
        w = reduce_cocycle(w, M._get_tetrahedra_gluing_data())
        out.append({"name": label, "weights_flat": w, "peripheral": peripheral_values(M, w)})
    return out


def tet_angles(lengths):
    g = np.full((4, 4), -1.0)
    for (a, b), l in zip(PAIRS, lengths):
        g[a, b] = g[b, a] = -np.cosh(l)
    h = np.linalg.inv(g)
    ang = []
    for a, b in PAIRS:
        i, j = [x for x in range(4) if x not in (a, b)]
        ang.append(np.arccos(np.clip(-h[i, j] / np.sqrt(abs(h[i, i] * h[j, j])), -1, 1)))
    return ang, np.linalg.eigvalsh(g)


def material_document(name, filling):
    M = snappy.Manifold(name)
    M.dehn_fill(filling)
    F = M.filled_triangulation()
    n = F.num_tetrahedra()
    gluing = F._get_tetrahedra_gluing_data()
    classes = edge_classes(gluing)
    index = {}
    for c, cyc in enumerate(classes):
        for t, (a, b), _ in cyc:
            index[(t, a, b)] = c

    def per_tet(x, t):
        return [x[index[(t, a, b)]] for a, b in PAIRS]

    def residual(x):
        s = np.zeros(len(classes))
        for t in range(n):
            ang, _ = tet_angles(per_tet(x, t))
            for (a, b), v in zip(PAIRS, ang):
                s[index[(t, a, b)]] += v
        return s - 2 * np.pi

    rng = np.random.default_rng(1)
    for _ in range(2000):
        sol = so.least_squares(residual, rng.uniform(0.5, 2.0, len(classes)),
                               bounds=(0.05, 10), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        valid = all(np.sum(tet_angles(per_tet(sol.x, t))[1] < 0) == 1 for t in range(n))
        if valid and np.max(np.abs(residual(sol.x))) < 1e-11:
            break
    else:
        raise RuntimeError("no edge-length solution found")
    x = sol.x
    w = reduce_cocycle(rational_cohomology_basis(F)[0], gluing)
    label = "%s(%d,%d)" % (name, filling[0], filling[1])
    return {
        "name": label,
        "cusps": 0,
        "tets": tet_document(gluing, w),
        "edge_classes": classes,
        "equations": {"edge_rows": [], "completeness_rows": [],
                      "cusp_rows_meridian": [], "cusp_rows_longitude": []},
        "material": {"edge_lengths": [[float(v) for v in per_tet(x, t)] for t in range(n)]},
        "cocycles": [{"name": "generator", "weights": [w[4 * t:4 * t + 4] for t in range(n)]}],
    }


def dump(doc, path):
    # repr() of a Python float round-trips, which is >= 17 significant digits
    # where it matters.
    text = json.dumps(doc, indent=1)
    path.write_text(text + "\n")


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    dump(cusped_document("m004", cusped_cocycles("m004", ["fiber"])), out / "m004.json")
    s789 = cusped_cocycles("s789", ["b0", "b1"])
    s789.sort(key=lambda c: any(c["peripheral"]))
    s789[0]["name"], s789[1]["name"] = "cusp_vanishing", "cusp_nonvanishing"
    dump(cusped_document("s789", s789), out / "s789.json")
    dump(cusped_document("m122", cusped_cocycles("m122", ["generator"])), out / "m122.json")
    dump(material_document("m122", (4, -1)), out / "m122_4_-1.json")


if __name__ == "__main__":
    main()
