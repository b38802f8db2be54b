from datetime import datetime
from typing import Any, Literal

from ninja import Field, Schema
from pydantic import field_validator, model_validator

Matrix = list[list[float]]


def _positive(value: float, name: str) -> float:
    if value <= 0.0:
        raise ValueError(f"{name} must be positive")
    return value


# --- Scenario document ---

class TopologySection(Schema):
    adjacency: list[list[int]]
    row_norm: float = 1.0
    # explicit consensus matrix; rows need only be orthogonal to 1 to within 1e-3
    M: Matrix | None = None

    @field_validator("row_norm")
    @classmethod
    def check_row_norm(cls, value):
        return _positive(value, "row_norm")


class ModelSection(Schema):
    label: Literal["unicycle", "custom-affine"] = "unicycle"
    m: float = 10.0
    R: float = 0.5
    r: float = 0.05
    p: float = 0.04
    drift: Matrix | None = None
    input: Matrix | None = None
    # controller's belief about the unicycle parameters, when it differs from the plant
    nominal: dict[str, float] | None = None

    @model_validator(mode="after")
    def check_model(self):
        if self.label == "custom-affine" and (self.drift is None or self.input is None):
            raise ValueError("drift and input required for custom-affine")
        if self.label == "unicycle":
            for name in ("m", "R", "r", "p"):
                _positive(getattr(self, name), name)
            unknown = set(self.nominal or {}) - {"m", "R", "r", "p"}
            if unknown:
                raise ValueError(f"unknown nominal parameters: {', '.join(sorted(unknown))}")
        return self


class ControlSection(Schema):
    mode: Literal["full_state", "partial_access", "leader_follower", "stochastic"] = "full_state"
    delay_mode: Literal["uniform_bound", "per_link"] = "uniform_bound"


class GainsSection(Schema):
    K1: Matrix
    K2: Matrix
    K3: Matrix | None = None
    C: Matrix | None = None
    alpha: float
    a: float
    b: float
    gamma: float | None = None
    Q: Literal["auto"] | float | Matrix = "auto"

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, value):
        if value <= 1.0:
            raise ValueError("alpha must exceed 1")
        return value

    @field_validator("a", "b")
    @classmethod
    def check_weights(cls, value, info):
        return _positive(value, info.field_name)

    @field_validator("gamma")
    @classmethod
    def check_gamma(cls, value):
        if value is not None and value <= 1.0:
            raise ValueError("gamma must exceed 1")
        return value


class SynthesisSection(Schema):
    when: Literal["always", "infeasible", "never"] = "never"
    k1_seed: Matrix | None = None
    k2_seed: Matrix | None = None
    k3_seed: Matrix | None = None
    k1_scales: list[float] = [1.0]
    k2_scales: list[float] = [1.0]
    k3_scales: list[float] = [1.0]
    a_values: list[float] = []
    b_values: list[float] = []
    gamma_values: list[float] = []


class LinkDelaySection(Schema):
    receiver: int = Field(..., ge=1)
    sender: int = Field(..., ge=1)
    c0: float
    c1: float = 0.0
    rate: float = 1.0


class DelaySection(Schema):
    profile: Literal["constant", "decaying"] = "constant"
    c0: float
    c1: float = 0.0
    rate: float = 1.0
    bound: float | None = None
    links: list[LinkDelaySection] = []

    @model_validator(mode="after")
    def check_bound(self):
        delays = [(self.c0, self.c1 if self.profile == "decaying" else 0.0)]
        delays += [(link.c0, link.c1) for link in self.links]
        if any(c0 < 0.0 or c0 + min(c1, 0.0) < 0.0 for c0, c1 in delays):
            raise ValueError("delays must be nonnegative")
        sup = max(c0 + max(c1, 0.0) for c0, c1 in delays)
        if self.bound is not None and sup > self.bound + 1e-12:
            raise ValueError("delay exceeds bound d")
        if (self.bound if self.bound is not None else sup) <= 0.0:
            raise ValueError("delay bound d must be positive")
        return self

    @property
    def sup(self) -> float:
        delays = [self.c0 + (max(self.c1, 0.0) if self.profile == "decaying" else 0.0)]
        delays += [link.c0 + max(link.c1, 0.0) for link in self.links]
        return max(delays)


class SignalSection(Schema):
    kind: Literal["zero", "constant", "sinusoid"] = "zero"
    value: float = 0.0
    waveform: Literal["cos", "sin"] = "sin"
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0


class DisturbanceSection(Schema):
    gain: Literal["friction", "none"] = "none"
    signal: SignalSection = SignalSection()


class NoiseSection(Schema):
    gain: Literal["fractional", "none"] = "none"
    power: float = Field(0.0, ge=0.0)


class SinusoidSection(Schema):
    kind: Literal["cos", "sin"] = "cos"
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0
    offset: float = 0.0


class ReferenceSection(Schema):
    components: list[SinusoidSection]


class InitialSection(Schema):
    states: Matrix
    poses: Matrix | None = None


class IntegrationSection(Schema):
    step: float | None = None
    horizon: float = Field(10.0, ge=0.0)
    output_interval: float | None = None
    settle_tol: float = 1e-2

    @field_validator("step", "output_interval")
    @classmethod
    def check_positive(cls, value, info):
        return value if value is None else _positive(value, info.field_name)


class VerificationSection(Schema):
    samples: int | None = Field(None, ge=0)
    radius: float | None = None
    razumikhin_tol: float = 1e-3


class SeedsSection(Schema):
    root: int = Field(0, ge=0)


class ScenarioDocument(Schema):
    name: str
    description: str = ""
    topology: TopologySection
    model: ModelSection = ModelSection()
    control: ControlSection = ControlSection()
    gains: GainsSection
    synthesis: SynthesisSection = SynthesisSection()
    delay: DelaySection
    disturbance: DisturbanceSection = DisturbanceSection()
    noise: NoiseSection = NoiseSection()
    reference: ReferenceSection | None = None
    initial: InitialSection
    integration: IntegrationSection = IntegrationSection()
    verification: VerificationSection = VerificationSection()
    seeds: SeedsSection = SeedsSection()

    @property
    def stochastic(self) -> bool:
        return self.control.mode == "stochastic" or self.noise.gain != "none"

    @model_validator(mode="after")
    def check_mode_requirements(self):
        mode = self.control.mode
        if mode == "stochastic" and self.noise.gain == "none":
            raise ValueError("stochastic mode requires a noise gain")
        if not self.stochastic and self.gains.gamma is None:
            raise ValueError("gamma required")
        if mode == "partial_access" and (self.gains.C is None or self.gains.K3 is None):
            raise ValueError("partial access requires C and K3")
        if mode == "leader_follower":
            if self.gains.K3 is None:
                raise ValueError("leader-follower mode requires K3")
            if self.reference is None:
                raise ValueError("leader-follower mode requires a reference")
        if self.integration.step is not None:
            bound = self.delay.bound if self.delay.bound is not None else self.delay.sup
            if self.integration.step > bound:
                raise ValueError("integration step must not exceed the delay bound d")
        return self


# --- API payloads ---

class ScenarioName(Schema):
    name: str
    path: str


class CheckIn(Schema):
    scenario: dict[str, Any]


class RunIn(Schema):
    scenario: dict[str, Any]
    strict: bool = False


class MonteCarloIn(Schema):
    scenario: dict[str, Any]
    runs: int = Field(100, ge=1)
    seed: int = Field(0, ge=0)


class SweepIn(Schema):
    scenario: dict[str, Any]
    parameter: Literal["d", "b", "a", "gamma", "noise_power"]
    grid: str
    simulate: bool = False


class RunOut(Schema):
    id: int
    name: str
    command: str
    status: str
    options: dict[str, Any]
    summary: dict[str, Any] | None
    error: str
    created_at: datetime
    finished_at: datetime | None
