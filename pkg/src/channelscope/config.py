"""Numerical tolerances shared by every module."""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10  # hermiticity, trace, first-row checks
    reconstruction: float = 1e-9  # eigen/round-trip reconstruction
    quadrature: float = 1e-6  # relative agreement of integrals
    completeness: float = 1e-9  # sum_j E_j^dag E_j = I
    cp: float = 1e-9  # Choi negativity threshold per unit epsilon
    p: float = 1e-7  # trace-distance derivative threshold
    condition: float = 1e12  # largest admissible condition number
    step_agreement: float = 1e-4  # h vs h/2 generator estimates
    integration: float = 1e-6  # step-doubling endpoint agreement

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOLERANCES = Tolerances()
