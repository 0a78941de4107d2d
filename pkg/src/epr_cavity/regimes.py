"""Validity inequalities and derived rates for both entanglement schemes.

A strong inequality ``left >> right`` is scored by the margin ``left/right`` and
passes when the margin reaches ``threshold`` (default 5). The detuning enters
all rate formulas through ``|Delta|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .effective import scheme2_coupling, squeeze_time
from .errors import PhysicsDomainError
from .model import SystemParams

TWO_PI = 2 * math.pi
DEFAULT_THRESHOLD = 5.0


@dataclass(frozen=True)
class Cavity:
    """Cavity described by its geometric factor, free spectral range and finesse."""

    sigma_tilde: float
    fsr: float
    finesse: float

    def __post_init__(self):
        for name in ("sigma_tilde", "fsr", "finesse"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise PhysicsDomainError(f"cavity parameter {name} must be positive, got {value}")


@dataclass(frozen=True)
class DerivedRates:
    g: float
    kappa: float
    theta: float
    gamma_theta: float
    gamma_kappa: float
    r: float
    t_pi: float


def derived_rates(cavity: Cavity, gamma: float, eta: float, nu: float, delta: float,
                  omega: float) -> DerivedRates:
    """Coupling, decay and effective rates in the far-detuned limit (``gamma -> 0`` couplings)."""
    if gamma < 0 or eta < 0 or nu <= 0 or delta == 0:
        raise PhysicsDomainError("need gamma >= 0, eta >= 0, nu > 0 and delta != 0")
    d = abs(delta)
    om = abs(omega)
    g = math.sqrt(cavity.sigma_tilde * gamma * cavity.fsr)
    kappa = cavity.fsr / cavity.finesse
    theta = math.sqrt(2) * eta * math.sqrt(2 * nu / d) * (om / d) * g
    return DerivedRates(
        g=g,
        kappa=kappa,
        theta=theta,
        gamma_theta=gamma * eta**2 * om**2 / d**2,
        gamma_kappa=gamma * g**2 / d**2,
        r=1 + 2 * nu / d,
        t_pi=math.pi / theta if theta > 0 else math.inf,
    )


@dataclass(frozen=True)
class Condition:
    """One strong inequality ``left >> right``."""

    id: str
    description: str
    left: float
    right: float
    threshold: float = DEFAULT_THRESHOLD

    @property
    def margin(self) -> float:
        if self.right == 0:
            return math.inf
        return self.left / self.right

    @property
    def passed(self) -> bool:
        return self.margin >= self.threshold

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "marginal" if self.margin >= 1 else "fail"

    def to_dict(self) -> dict:
        return {"id": self.id, "description": self.description, "left": self.left,
                "relation": ">>", "right": self.right, "margin": self.margin,
                "threshold": self.threshold, "passed": self.passed, "status": self.status}


@dataclass
class RegimeReport:
    scheme: str
    conditions: list[Condition]
    rates: dict[str, float]
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def failing(self) -> list[str]:
        return [c.id for c in self.conditions if not c.passed]

    def condition(self, cid: str) -> Condition:
        for c in self.conditions:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "passed": self.passed, "failing": self.failing,
                "conditions": [c.to_dict() for c in self.conditions],
                "rates": self.rates, **self.extras}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def table(self) -> str:
        rows = [f"{'condition':<22} {'left':>12} {'':>3} {'right':>12} {'margin':>10}  status"]
        for c in self.conditions:
            rows.append(f"{c.id:<22} {c.left:>12.5g} {'>>':>3} {c.right:>12.5g} {c.margin:>10.4g}  {c.status}")
        rows.append(f"overall: {'pass' if self.passed else 'fail'}"
                    + ("" if self.passed else f" ({', '.join(self.failing)})"))
        return "\n".join(rows)


def _one_sig(x: float) -> float:
    """Round to one significant figure."""
    if x == 0:
        return 0.0
    return round(x, -int(math.floor(math.log10(abs(x)))))


def supercondition_chain(params: SystemParams, cavity: Cavity) -> dict:
    """The three-link chain ``4|D|nu/gamma^2 >> F 4 nu s/|D| >> ... >> 1``.

    ``exact`` evaluates each link directly. ``summary`` writes every link as a
    prefactor times the remaining ratio (``(nu/gamma)^2``, ``F`` and
    ``sqrt(fsr/gamma)``) with the prefactor rounded to one significant figure.
    """
    nu, d, gamma = params.nu, abs(params.delta), params.gamma
    om = abs(params.omega)
    s = cavity.sigma_tilde
    eta = params.eta
    x = 4 * nu * s / d
    c1 = 4 * d / nu
    c2 = x
    c3 = math.sqrt(x) / (eta * om / d)
    exact = [c1 * (nu / gamma) ** 2, c2 * cavity.finesse, c3 * math.sqrt(cavity.fsr / gamma)]
    coeffs = [_one_sig(c) for c in (c1, c2, c3)]
    summary = [coeffs[0] * (nu / gamma) ** 2, coeffs[1] * cavity.finesse,
               coeffs[2] * math.sqrt(cavity.fsr / gamma)]
    return {"exact": exact, "coefficients": [c1, c2, c3], "summary": summary,
            "summary_coefficients": coeffs}


def _require(params: SystemParams) -> None:
    missing = [name for name, ok in (("gamma", params.gamma > 0), ("omega", params.omega != 0),
                                     ("delta", params.delta != 0), ("eta", params.eta > 0)) if not ok]
    if missing:
        raise PhysicsDomainError(f"incomplete parameters for the regime check: {', '.join(missing)}")


def validate_scheme1(params: SystemParams, cavity: Cavity,
                     threshold: float = DEFAULT_THRESHOLD) -> RegimeReport:
    """Check the bichromatic scheme's validity conditions and the summarized chain."""
    _require(params)
    rates = derived_rates(cavity, params.gamma, params.eta, params.nu, params.delta, abs(params.omega))
    d = abs(params.delta)
    inv_t = 1 / rates.t_pi
    chain = supercondition_chain(params, cavity)
    links = chain["exact"]

    def cond(cid, desc, left, right):
        return Condition(cid, desc, left, right, threshold)

    conditions = [
        cond("kappa_T", "1/T >> kappa (no cavity decay during the pulse)", inv_t, rates.kappa),
        cond("T_nu", "nu >> 1/T (sideband resolution)", params.nu, inv_t),
        cond("nu_gamma", "nu >> gamma", params.nu, params.gamma),
        cond("theta_gamma_theta", "Theta >> gamma_Theta (sideband scattering)", rates.theta, rates.gamma_theta),
        cond("kappa_gamma_kappa", "kappa >> gamma_kappa (cavity photon scattering)", rates.kappa, rates.gamma_kappa),
        cond("lamb_dicke", "1 >> eta sqrt(|Delta|/4 nu)", 1.0, params.eta * math.sqrt(d / (4 * params.nu))),
        cond("delta_omega", "|Delta| >> Omega", d, abs(params.omega)),
        cond("delta_g", "|Delta| >> g", d, rates.g),
        cond("delta_nu", "|Delta| >> nu", d, params.nu),
        cond("chain_1", "first >> second chain link", links[0], links[1]),
        cond("chain_2", "second >> third chain link", links[1], links[2]),
        cond("chain_3", "third chain link >> 1", links[2], 1.0),
    ]
    return RegimeReport("scheme1", conditions, asdict(rates), {"chain": chain})


def validate_scheme2(params: SystemParams, cavity: Cavity, target_n: float,
                     threshold: float = DEFAULT_THRESHOLD) -> RegimeReport:
    """Check the sequential scheme for a squeezing pulse producing ``target_n`` quanta."""
    _require(params)
    if target_n <= 0:
        raise PhysicsDomainError("target_n must be positive")
    ld = params.eta * math.sqrt(target_n)
    if ld >= 1:
        raise PhysicsDomainError(
            f"eta*sqrt(target_n) = {ld:.3g} >= 1: the Lamb-Dicke regime is violated by construction"
        )
    rates = derived_rates(cavity, params.gamma, params.eta, params.nu, params.delta, abs(params.omega))
    chi = scheme2_coupling(params.replace(g1=rates.g))
    if chi == 0:
        raise PhysicsDomainError("scheme-2 coupling vanishes for these parameters")
    t1 = squeeze_time(chi, target_n)
    t2 = math.pi / (2 * abs(chi))

    def cond(cid, desc, left, right):
        return Condition(cid, desc, left, right, threshold)

    g300 = rates.g / 300
    conditions = [
        cond("nu_T1", "nu >> 1/T1", params.nu, 1 / t1),
        cond("nu_T2", "nu >> 1/T2", params.nu, 1 / t2),
        cond("T1_kappa", "1/T1 >> kappa", 1 / t1, rates.kappa),
        cond("T2_kappa", "1/T2 >> kappa", 1 / t2, rates.kappa),
        cond("lamb_dicke", "1 >> eta sqrt(<n>)", 1.0, ld),
        cond("kappa_gamma_kappa", "kappa >> gamma_kappa", rates.kappa, rates.gamma_kappa),
        cond("gamma_theta_T1", "1 >> gamma_Theta T1", 1.0, rates.gamma_theta * t1),
        cond("nu_g300", "nu >> g/300", params.nu, g300),
        cond("g300_kappa", "g/300 >> kappa", g300, rates.kappa),
    ]
    extras = {"chi": [chi.real, chi.imag], "T1": t1, "T2": t2, "target_n": target_n}
    return RegimeReport("scheme2", conditions, asdict(rates), extras)


def indium_preset() -> tuple[SystemParams, Cavity]:
    """Single In+ ion on its 231 nm intercombination line in a high-finesse cavity."""
    cavity = Cavity(sigma_tilde=1e-3, fsr=TWO_PI * 1e9, finesse=1e6)
    gamma = TWO_PI * 360e3
    g = math.sqrt(cavity.sigma_tilde * gamma * cavity.fsr)
    nu = TWO_PI * 3e6
    params = SystemParams.scheme1(
        nu=nu, delta=-TWO_PI * 60e6, omega=TWO_PI * 18e6, g1=g, eta=0.1, gamma=gamma,
        kappa1=cavity.fsr / cavity.finesse, kappa2=cavity.fsr / cavity.finesse,
    )
    return params, cavity
