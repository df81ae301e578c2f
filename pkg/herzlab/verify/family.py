import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, config_field
from ..functions import Term, TestFunction
from ..util import check_dimension, dyadic_radius

logger = logging.getLogger(__name__)

GENERATORS = ("dilations", "annulus_shifts", "random_combinations", "members")
RANDOM_KINDS = ("indicator", "power", "gaussian")


class FunctionFamily:
    """Seeded, reproducible family of test functions, built up generator by generator.

        family = (
            FunctionFamily(n=1, seed=7)
            .dilations(TestFunction.ball(1.0), [2**m for m in range(11)])
            .annulus_shifts(range(-5, 6))
            .random_combinations(20)
        )
    """

    def __init__(self, n: int = 1, seed: int = 0, generators: Optional[List[dict]] = None):
        self.n = check_dimension(n)
        self.seed = int(seed)
        if generators is None:
            generators = []
        self._generators = generators

    def _add(self, generator: dict) -> "FunctionFamily":
        self._generators.append(generator)
        return self

    def dilations(self, base: TestFunction, scales: Sequence[float]) -> "FunctionFamily":
        """f_s(x) = base(s x) for every s in scales."""
        if base.n != self.n:
            raise ConfigurationError(f"dimension mismatch: base.n={base.n} family.n={self.n}")
        return self._add(
            {"generator": "dilations", "base": base.to_dict(), "scales": [float(s) for s in scales]}
        )

    def annulus_shifts(self, indices: Sequence[int], coeff: float = 1.0) -> "FunctionFamily":
        return self._add(
            {"generator": "annulus_shifts", "indices": [int(j) for j in indices], "coeff": coeff}
        )

    def random_combinations(
        self,
        count: int,
        indices: Tuple[int, int] = (-4, 4),
        terms: int = 3,
        coeff_range: Tuple[float, float] = (0.1, 2.0),
        kinds: Sequence[str] = ("indicator",),
    ) -> "FunctionFamily":
        unknown = set(kinds) - set(RANDOM_KINDS)
        if unknown:
            raise ConfigurationError(f"unknown random primitive kinds {sorted(unknown)}")
        if not indices[0] <= indices[1]:
            raise ConfigurationError(f"empty index range {indices}")
        return self._add(
            {
                "generator": "random_combinations",
                "count": int(count),
                "indices": [int(indices[0]), int(indices[1])],
                "terms": int(terms),
                "coeff_range": [float(c) for c in coeff_range],
                "kinds": list(kinds),
            }
        )

    def members_of(self, functions: Sequence[TestFunction]) -> "FunctionFamily":
        """Explicit members, kept in the given order."""
        return self._add({"generator": "members", "functions": [f.to_dict() for f in functions]})

    def __add__(self, other: "FunctionFamily") -> "FunctionFamily":
        if self.n != other.n:
            raise ConfigurationError(f"dimension mismatch: {self.n} vs {other.n}")
        return FunctionFamily(self.n, self.seed, self._generators + other._generators)

    def _random(self, index: int, g: dict) -> List[Tuple[str, TestFunction]]:
        rng = np.random.default_rng([self.seed, index])
        lo, hi = (int(j) for j in g.get("indices", (-4, 4)))
        c_lo, c_hi = (float(c) for c in g.get("coeff_range", (0.1, 2.0)))
        size = int(g.get("terms", 3))
        names = list(g.get("kinds", ["indicator"]))
        unknown = set(names) - set(RANDOM_KINDS)
        if unknown:
            raise ConfigurationError(f"unknown random primitive kinds {sorted(unknown)}")
        if not lo <= hi:
            raise ConfigurationError(f"empty index range {(lo, hi)}")
        out = []
        for m in range(int(g["count"])):
            js = rng.integers(lo, hi + 1, size=size)
            coeffs = rng.uniform(c_lo, c_hi, size=size)
            kinds = rng.choice(len(names), size=size)
            terms = []
            for j, c, kind in zip(js.tolist(), coeffs.tolist(), kinds.tolist()):
                a, b = dyadic_radius(j - 1), dyadic_radius(j)
                kind = names[kind]
                if kind == "indicator":
                    terms.append(Term("indicator", c, a, b))
                elif kind == "power":
                    terms.append(Term("power", c, a, b, s=float(rng.uniform(-0.5, 0.5))))
                else:
                    terms.append(Term("gaussian", c, a, b, scale=b))
            out.append((f"random:{index}:{m}", TestFunction(tuple(terms), self.n)))
        return out

    def _generate(self, i: int, g: dict) -> List[Tuple[str, TestFunction]]:
        kind = g["generator"]
        if kind == "dilations":
            base = TestFunction.from_dict(g["base"])
            if base.n != self.n:
                raise ConfigurationError(f"dimension mismatch: base.n={base.n} family.n={self.n}")
            return [(f"dilation:s={float(s):g}", base.dilate(float(s))) for s in g["scales"]]
        if kind == "annulus_shifts":
            coeff = float(g.get("coeff", 1.0))
            return [
                (f"annulus:{int(j)}", TestFunction.annulus_indicator(int(j), self.n, coeff))
                for j in g["indices"]
            ]
        if kind == "random_combinations":
            return self._random(i, g)
        if kind == "members":
            return [
                (f"member:{i}:{m}", TestFunction.from_dict(d)) for m, d in enumerate(g["functions"])
            ]
        raise ConfigurationError(f"unknown generator {kind!r}; expected one of {GENERATORS}")

    def members(self) -> List[Tuple[str, TestFunction]]:
        """(label, function) pairs; identical for identical generators and seed."""
        out = []
        for i, g in enumerate(self._generators):
            with config_field(f"generators[{i}]"):
                out += self._generate(i, g)
        logger.debug("family of %d members from %d generators", len(out), len(self._generators))
        return out

    def pairs(self) -> List[Tuple[str, TestFunction, TestFunction]]:
        """Consecutive members paired up: (m0, m1), (m2, m3), ..."""
        ms = self.members()
        return [(f"{a[0]}|{b[0]}", a[1], b[1]) for a, b in zip(ms[0::2], ms[1::2])]

    def __len__(self):
        return len(self.members())

    def to_dict(self) -> dict:
        return {"n": self.n, "seed": self.seed, "generators": [dict(g) for g in self._generators]}

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionFamily":
        """Family from its descriptor; every member is built once so bad generators fail here."""
        with config_field("generators"):
            generators = [dict(g) for g in d.get("generators", [])]
        with config_field("seed"):
            seed = int(d.get("seed", 0))
        with config_field("n"):
            n = int(d.get("n", 1))
        for g in generators:
            if g.get("generator") not in GENERATORS:
                raise ConfigurationError(
                    f"unknown generator {g.get('generator')!r}; expected one of {GENERATORS}"
                )
        family = cls(n, seed, generators)
        family.members()
        return family
