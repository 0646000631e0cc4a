"""Cluster amplitude container shared by the CC, Fock and MRCC modules."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Amplitudes:
    """Cluster coefficients keyed by level indices.

    ``t1[(i, a)]`` multiplies ``a+_a a_i``; every doubles map stores
    ``(i, j, a, b)`` with ``i < j`` and multiplies ``a+_a a+_b a_j a_i``.
    Positive-sector targets live in ``t2``; one negative-sector target
    (always in the last slot) in ``t2_1pair``; two in ``t2_2pair``.
    """

    t1: dict = field(default_factory=dict)
    t2: dict = field(default_factory=dict)
    t2_1pair: dict = field(default_factory=dict)
    t2_2pair: dict = field(default_factory=dict)
    iterations: int = 0
    residual_norm: float = 0.0
    converged: bool = True

    def excitations(self):
        """Yield ``(annihilated, created, coefficient)`` in application order.

        Annihilators are applied left to right, then creators left to right,
        so ``((i, j), (b, a), t)`` realises ``t a+_a a+_b a_j a_i``.
        """
        for (i, a), t in self.t1.items():
            yield (i,), (a,), t
        for block in (self.t2, self.t2_1pair, self.t2_2pair):
            for (i, j, a, b), t in block.items():
                yield (i, j), (b, a), t

    def __len__(self):
        return len(self.t1) + len(self.t2) + len(self.t2_1pair) + len(self.t2_2pair)

    def max_abs(self) -> float:
        vals = [abs(t) for _, _, t in self.excitations()]
        return max(vals, default=0.0)
