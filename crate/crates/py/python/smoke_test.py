"""Quick end-to-end check of the pyg2scatter extension."""

import math
import os
import tempfile

import pyg2scatter as g

K = 2.0 * math.pi


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    j0, y0, j1, y1 = g.bessel(1.0)
    close(j0, 0.7651976865579666, 1e-14)
    close(j1, 0.4400505857449335, 1e-14)
    h = g.hankel1(0, 30.0)
    close(h.real, g.bessel(30.0)[0], 1e-14)

    free = g.Factorization(g.Medium.free_space("TM"))
    for d in (0.1, 0.37, 1.3):
        p1, p2, big = free.integrated((-d / 2, 0.0), (d / 2, 0.0))
        jd = g.bessel(K * d)[0]
        close(big, 0.5 * (1.0 + jd * jd), 1e-10)
        close(p2 / p1**2, big, 1e-14)

    m = g.Medium.generate(7, 40, (-2.0, -2.0, 4.0, 4.0), 1.5, 0.05, "TE")
    again = g.Medium.generate(7, 40, (-2.0, -2.0, 4.0, 4.0), 1.5, 0.05, "TE")
    assert len(m) == 40 and m.digest() == again.digest()
    assert g.Medium.from_json(m.to_json()).digest() == m.digest()
    diag = m.diagnostics()
    assert diag["ell"] > 0 and diag["k_ell"] > 0

    fact = g.Factorization(m)
    val = fact.g2((-0.3, 0.1), (0.4, -0.2), (3.0, 0.0), (0.0, 3.0))
    assert 0.0 <= val <= 1.0 + 1e-12
    print("classification:", fact.classify((-0.3, 0.1), (0.4, -0.2)))

    gm = fact.g2_map((0.0, 0.0), (-1.0, -1.0), (2.0, 2.0), (8, 6))
    assert gm.shape == (6, 8) and gm.channel == "G2"
    finite = [v for row in gm.values for v in row if not math.isnan(v)]
    assert finite and all(0.0 <= v <= 1.0 + 1e-12 for v in finite)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "m.csv")
        gm.to_csv(path)
        back = g.Map.from_csv(path)
        assert back.shape == gm.shape
        gm.to_pgm(os.path.join(tmp, "m.pgm"))

    one = g.Medium.free_space("TM").with_scatterer((0.0, 0.0), 1.0)
    try:
        g.Factorization(one).g2((0.0, 0.0), (1.0, 0.0), (3.0, 0.0), (0.0, 3.0))
    except g.GeometryError:
        pass
    else:
        raise AssertionError("emitter on a scatterer should raise GeometryError")

    print("pyg2scatter", g.__version__, "smoke test OK")


if __name__ == "__main__":
    main()
