#!/usr/bin/env python3
"""Regenerate the standard scenario fixtures in scenarios/."""

import argparse
import json
import math
from pathlib import Path

import numpy as np

DIM = 2
LADDER = [0.5, 0.25, 0.125, 0.0625]


def swap(d):
    p = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            p[j * d + i, i * d + j] = 1.0
    return p


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def pairs(m):
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).ravel()]


def op(m, labels):
    return {"dim": DIM, "labels": labels, "data": pairs(m)}


def rotation(rng):
    q, _ = np.linalg.qr(rng.normal(size=(DIM, DIM)) + 1j * rng.normal(size=(DIM, DIM)))
    return q


def fixture_a(seed, scale):
    rng = np.random.default_rng(seed)
    s = swap(DIM)
    phi = random_hermitian(rng, DIM * DIM)
    phi = (phi + s @ phi @ s) / 2
    phi *= 0.1 / np.linalg.norm(phi, 2)
    v = rotation(rng)
    f1 = scale * v @ np.diag([0.7, 0.3]) @ v.conj().T
    # h is block diagonal in the eigenbasis of f1 x f1, hence commutes with it.
    b, c = rng.normal(size=2)
    h_eig = np.diag(rng.normal(size=4)).astype(complex)
    h_eig[1:3, 1:3] = [[b, c], [c, b]]
    vv = np.kron(v, v)
    h = vv @ h_eig @ vv.conj().T
    h /= np.linalg.norm(h, 2)
    g2 = np.eye(DIM * DIM) + 0.2 * h
    return {
        "dim": DIM,
        "kinetic": op(np.diag([0.0, 1.0]), [1]),
        "potential": op(phi, [1, 2]),
        "epsilon": 1.0,
        "f1_0": op(f1, [1]),
        "correlations": {"closure": "pair", "g": {"2": op(g2, [1, 2])}},
        "truncation": {"n_max": 2, "s_max": 3},
        "time": {"t_end": 0.5, "steps": 5},
        "eps_ladder": LADDER,
    }


def chaos(base):
    out = dict(base)
    out["correlations"] = {"closure": "pair", "g": {}}
    return out


def scenario(name, experiment, body, description, **extra):
    doc = {"name": name, "experiment": experiment, "seed": 20240611, "description": description}
    doc.update(body)
    doc.update(extra)
    return doc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "scenarios"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    small = fixture_a(7, 0.01)
    large = fixture_a(7, 0.1)
    docs = [
        scenario("a_small_identities", "identities", small,
                 "d=2 correlated pair fixture, trace norm 0.01"),
        scenario("a_large_identities", "identities", large,
                 "d=2 correlated pair fixture, trace norm 0.1"),
        scenario("a_small_equivalence", "hierarchy-equivalence", small,
                 "marginal hierarchy vs kinetic equation plus marginal functionals"),
        scenario("a_small_meanfield", "meanfield-ladder", small,
                 "distance to the modified Vlasov solution along the epsilon ladder"),
        scenario("a_small_propagation", "correlation-propagation", small,
                 "propagated initial correlations along the epsilon ladder"),
        scenario("b_chaos_identities", "identities", chaos(small), "chaos control, g = I"),
        scenario("b_chaos_equivalence", "hierarchy-equivalence", chaos(small),
                 "chaos control, g = I"),
        scenario("b_chaos_meanfield", "meanfield-ladder", chaos(small), "chaos control, g = I"),
        scenario("b_chaos_propagation", "correlation-propagation", chaos(small),
                 "chaos control, g = I"),
        {"name": "c_continuum_nls", "experiment": "continuum", "seed": 1,
         "description": "soliton-free defocusing NLS on a periodic box",
         "continuum": {"length": 2 * math.pi, "points": 64, "t_end": 1.0, "steps": 1000,
                       "equation": "nls", "initial": "modulated", "amplitude": 0.1,
                       "mode": 1, "snapshot_stride": 100}},
        {"name": "c_continuum_gp_delta", "experiment": "continuum", "seed": 1,
         "description": "pair-kernel equation with an identity kernel reduces to NLS",
         "continuum": {"length": 2 * math.pi, "points": 32, "t_end": 0.5, "steps": 50,
                       "equation": "gp", "initial": "modulated", "amplitude": 0.5,
                       "mode": 1, "kernel": "delta", "kernel_strength": 1.0}},
        {"name": "c_continuum_hartree", "experiment": "continuum", "seed": 1,
         "description": "Hartree evolution with a smooth Gaussian pair potential",
         "continuum": {"length": 2 * math.pi, "points": 64, "t_end": 1.0, "steps": 500,
                       "equation": "hartree", "initial": "gaussian", "x0": math.pi,
                       "sigma": 0.5, "k0": 1.0, "kernel_strength": 2.0, "kernel_width": 0.3}},
    ]
    for d in docs:
        (out / f"{d['name']}.json").write_text(json.dumps(d, indent=1) + "\n")
        print(out / f"{d['name']}.json")


if __name__ == "__main__":
    main()
