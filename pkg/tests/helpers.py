"""Random valid model systems shared by the test modules."""

import numpy as np

from qedcc.model import IntegralSet, ModelSystem, PhysicalConstants, SpinorLevel


def random_hermitian(rng, n, scale, complex_=True):
    a = rng.normal(size=(n, n))
    if complex_:
        a = a + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_antisymmetric(rng, n, scale, complex_=True):
    """Tensor with <pq||rs> = -<qp||rs> = -<pq||sr> = conj(<rs||pq>)."""
    v = rng.normal(size=(n,) * 4)
    if complex_:
        v = v + 1j * rng.normal(size=(n,) * 4)
    v = v - v.transpose(1, 0, 2, 3)
    v = v - v.transpose(0, 1, 3, 2)
    v = v + v.transpose(2, 3, 0, 1).conj()
    return scale * v / 4.0


def random_system(rng, n_levels, n_electrons, gap=1.0, coupling=0.05,
                  complex_=True, spins=None, breit=False):
    """Closed-shell positive-sector system with a clear occupied/virtual gap."""
    eps = np.sort(rng.uniform(-1.0, 0.0, n_electrons)).tolist()
    eps += np.sort(rng.uniform(gap, gap + 1.0, n_levels - n_electrons)).tolist()
    h = np.diag(eps).astype(complex) + random_hermitian(rng, n_levels, coupling, complex_)
    v = random_antisymmetric(rng, n_levels, coupling, complex_)
    vb = random_antisymmetric(rng, n_levels, 0.1 * coupling, complex_) if breit else None
    levels = [
        SpinorLevel(p, eps[p], "positive", p < n_electrons,
                    spin=None if spins is None else spins[p])
        for p in range(n_levels)
    ]
    ints = IntegralSet(h_ext=h, v_coulomb=v, v_breit=vb,
                       h_hf=random_hermitian(rng, n_levels, 1e-4, complex_))
    return ModelSystem(PhysicalConstants(), levels, ints, float(n_electrons))


ACCEPTANCE = {}


def criterion(number, ok, detail):
    """Record one acceptance criterion outcome, print it and assert it."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line
