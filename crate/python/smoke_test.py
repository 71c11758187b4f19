"""Quick end-to-end check of the pycrwave bindings."""

from fractions import Fraction

import pycrwave as w


def check(label, cond):
    print(f"{'ok  ' if cond else 'FAIL'} {label}")
    return cond


def main():
    results = []
    k = w.Field(3)
    results.append(check("field q", k.q == 3 and k.degree == 1))

    a, b = k.scalar(5), k.scalar(7)
    results.append(check("scalar ring ops", (a * b).eq_to_precision(k.scalar(35))))
    results.append(check("scalar division", ((a / b) * b).eq_to_precision(a)))
    results.append(check("uniformizer valuation", k.uniformizer(2).valuation() == (2, 1)))

    z = w.LocPolyFun.monomial(k, [1], k.scalar(1))
    z2 = z * z
    results.append(check("eval z^2 at 4", z2.eval(k.scalar(4)).eq_to_precision(k.scalar(16))))
    results.append(check("derived of z^2", z2.derived([1]).eq_to_precision(z + z)))

    rep = w.cr_norm(z, 1)
    results.append(check("cr norm of z is 1", rep["norm"]["tight"] and rep["norm"]["log_q_upper"] == {"num": 0, "den": 1}))
    num, den = w.basis_norm(k, [1], [1], Fraction(1, 2))
    results.append(check("basis norm within [1, q]", 0 <= num <= den))

    f = z2 + z
    coeffs = w.analyze(f, 2)
    results.append(check("analyze/synthesize round trip", w.synthesize(k, coeffs).eq_to_precision(f)))
    results.append(check("approximant at level 0", w.approximant(f, 2, 0).eq_to_precision(f)))

    haar = w.avv(k, "haar", 1)
    results.append(check("haar is additive and admissible", haar["additive"] and haar["avv"]["pass"]))
    dirac = w.avv(k, "dirac", "1/2", point=k.scalar(2))
    results.append(check("dirac is additive and admissible", dirac["additive"] and dirac["avv"]["pass"]))

    sep = w.separation(3, ["3/2", "1/2"], 2)
    results.append(check("separating distribution", sep["separated"] and sep["exact"]))

    lead = w.recover_leading(k, [([2], k.scalar(5)), ([0], k.scalar(1))], [2], 1, k.scalar(4))
    results.append(check("recover leading coefficient", lead.eq_to_precision(k.scalar(5))))

    ok, detail = w.run_criterion(4)
    results.append(check(f"criterion 4 fast ({detail})", ok))

    if not all(results):
        raise SystemExit(1)
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
