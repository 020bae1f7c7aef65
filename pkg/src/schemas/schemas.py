from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (BaseModel, Field, NonNegativeInt, PositiveInt,
                      field_validator, model_validator)


class NodeKind(str, Enum):
    PERSON = "person"
    PAGE = "page"


class Gender(str, Enum):
    FEMALE = "female"
    MALE = "male"


class NodeAttrs(BaseModel):
    kind: NodeKind
    age: Optional[int] = Field(default=None, ge=13, le=100)
    gender: Optional[Gender] = None
    country: Optional[str] = None

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_demographics(self):
        demographics = (self.age, self.gender, self.country)
        if self.kind == NodeKind.PAGE and any(value is not None for value in demographics):
            raise ValueError("pages carry no demographics")
        if self.kind == NodeKind.PERSON and any(value is None for value in demographics):
            raise ValueError("persons need age, gender and country")
        return self

    @classmethod
    def person(cls, age: int, gender: Gender | str, country: str) -> "NodeAttrs":
        return cls(kind=NodeKind.PERSON, age=age, gender=gender, country=country)

    @classmethod
    def page(cls) -> "NodeAttrs":
        return cls(kind=NodeKind.PAGE)


class GraphModel(str, Enum):
    PREFERENTIAL_ATTACHMENT = "preferential-attachment"
    SMALL_WORLD = "small-world"
    UNIFORM_RANDOM = "uniform-random"


class GraphGenConfig(BaseModel):
    model: GraphModel = GraphModel.PREFERENTIAL_ATTACHMENT
    n_people: PositiveInt
    n_pages: NonNegativeInt = 0
    attachment: PositiveInt = 3
    neighbors: PositiveInt = 6
    rewiring_p: float = Field(default=0.1, ge=0.0, le=1.0)
    edge_p: float = Field(default=0.01, ge=0.0, le=1.0)
    n_countries: PositiveInt = 10
    country_assortativity: float = Field(default=0.8, ge=0.0, le=1.0)
    page_follow_mean: float = Field(default=50.0, gt=0.0)
    rng_seed: int = 0


class PeakParams(BaseModel):
    h0: float = Field(default=10, ge=1)
    m_mult: float = Field(default=2, ge=1)
    w: PositiveInt = 7
    v: float = Field(default=0.5, gt=0.0, le=1.0)

    class Config:
        frozen = True


class Peak(BaseModel):
    day: PositiveInt
    height: NonNegativeInt

    class Config:
        frozen = True


class Burst(BaseModel):
    peak: Peak
    start_day: PositiveInt
    end_day: PositiveInt
    reshares: NonNegativeInt

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_extent(self):
        if not self.start_day <= self.peak.day <= self.end_day:
            raise ValueError("burst must contain its peak")
        return self

    @property
    def width(self) -> int:
        return (self.peak.day - self.start_day) + (self.end_day - self.peak.day)

    def contains(self, day: int) -> bool:
        return self.start_day <= day <= self.end_day


class DailySeries(BaseModel):
    """
    Reshare counts r_1 ... r_t. Day indices are 1-based; zero days count
    toward t and the mean.
    """
    counts: List[NonNegativeInt] = Field(min_length=1)

    class Config:
        frozen = True

    @property
    def t(self) -> int:
        return len(self.counts)

    @cached_property
    def mean(self) -> float:
        return sum(self.counts) / self.t

    @cached_property
    def array(self) -> np.ndarray:
        values = np.asarray(self.counts, dtype=np.int64)
        values.flags.writeable = False
        return values

    def count(self, day: int) -> int:
        return self.counts[day - 1]

    def total(self, start_day: int, end_day: int) -> int:
        return int(self.array[start_day - 1:end_day].sum())

    @classmethod
    def from_days(cls, days: Dict[int, int], t: int) -> "DailySeries":
        counts = [0] * t
        for day, count in days.items():
            if not 1 <= day <= t:
                raise ValueError(f"day {day} outside [1, {t}]")
            counts[day - 1] += count
        return cls(counts=counts)


class EventKind(str, Enum):
    CREATE_COPY = "create_copy"
    RESHARE = "reshare"


class ReshareEvent(BaseModel):
    actor: NonNegativeInt
    copy_id: NonNegativeInt
    day: PositiveInt
    kind: EventKind = EventKind.RESHARE
    parent_actor: Optional[NonNegativeInt] = None

    class Config:
        frozen = True


class SimConfig(BaseModel):
    p0: float = Field(ge=0.0, le=1.0)
    p1: float = Field(ge=0.0, le=1.0)
    mu: float = 500.0
    sigma: float = Field(default=250.0, ge=0.0)
    m_copies: PositiveInt = 50
    steps: PositiveInt = 1000
    rng_seed: int = 0

    class Config:
        frozen = True

    @model_validator(mode="before")
    @classmethod
    def default_reinfection(cls, data):
        if isinstance(data, dict) and data.get("p1") is None and data.get("p0") is not None:
            data = {**data, "p1": 0.5 * float(data["p0"])}
        return data

    @model_validator(mode="after")
    def check_probabilities(self):
        if self.p1 > self.p0 or (self.p1 == self.p0 and self.p0 > 0):
            raise ValueError("reinfection probability p1 must be below p0")
        return self


class SweepKind(str, Enum):
    VIRALITY = "virality"
    COPIES = "copies"


class SweepConfig(BaseModel):
    kind: SweepKind = SweepKind.VIRALITY
    grid: List[float] = Field(min_length=1)
    grid_mode: Literal["absolute", "threshold"] = "absolute"
    reps: PositiveInt = 10
    p1_ratio: float = Field(default=0.5, ge=0.0, lt=1.0)
    base: SimConfig
    detector: PeakParams = PeakParams()

    @model_validator(mode="after")
    def check_grid(self):
        if self.kind == SweepKind.COPIES:
            if any(value < 1 or value != int(value) for value in self.grid):
                raise ValueError("copy grid must hold positive integers")
        elif self.grid_mode == "absolute" and any(not 0.0 <= value <= 1.0 for value in self.grid):
            raise ValueError("virality grid must hold probabilities")
        elif any(value < 0 for value in self.grid):
            raise ValueError("threshold multipliers must be non-negative")
        return self


class CorpusConfig(BaseModel):
    """
    Seeded repetitions of the simulation. Each run draws p0 uniformly from
    `p0_range` (as probabilities, or as multiples of the epidemic threshold
    with range_mode "threshold") and the copy count uniformly from the
    integers of `m_copies_range`; a range left out keeps the base value.
    """
    reps: PositiveInt = 1
    p0_range: Optional[Tuple[float, float]] = None
    m_copies_range: Optional[Tuple[PositiveInt, PositiveInt]] = None
    range_mode: Literal["absolute", "threshold"] = "absolute"
    p1_ratio: float = Field(default=0.5, ge=0.0, lt=1.0)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_ranges(self):
        if self.p0_range is not None:
            low, high = self.p0_range
            if low > high or low < 0:
                raise ValueError("p0 range must be an ordered pair of non-negative values")
            if self.range_mode == "absolute" and high > 1.0:
                raise ValueError("absolute p0 range must hold probabilities")
        if self.m_copies_range is not None and self.m_copies_range[0] > self.m_copies_range[1]:
            raise ValueError("copy count range must be ordered")
        return self


class DetectorConfig(BaseModel):
    detector: PeakParams = PeakParams()
    window: PositiveInt = 100


class DemographicSummary(BaseModel):
    mean_age: float
    prop_female: float = Field(ge=0.0, le=1.0)
    age_entropy: float = Field(ge=0.0)
    gender_entropy: float = Field(ge=0.0, le=1.0 + 1e-12)
    country_entropy: float = Field(ge=0.0)


class TestResult(BaseModel):
    __test__ = False

    statistic: float
    p_value: float = Field(ge=0.0, le=1.0)
    effect_size_r: float


class CorrelationResult(BaseModel):
    value: float
    degenerate: bool = False
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None


class FeatureVector(BaseModel):
    # temporal
    days_before_peak: float = Field(ge=0)
    days_after_peak: float = Field(ge=0)
    reshares_before_peak: float = Field(ge=0)
    reshares_after_peak: float = Field(ge=0)
    peak_height: float = Field(ge=0)
    gradient_before: float
    gradient_after: float
    # demographic
    mean_age: float = Field(ge=0)
    prop_female: float = Field(ge=0, le=1)
    age_entropy: float = Field(ge=0)
    gender_entropy: float = Field(ge=0)
    country_entropy: float = Field(ge=0)
    # network
    friend_edges: float = Field(ge=0)
    follow_edges: float = Field(ge=0)
    exposed_count: float = Field(ge=0)
    n_users: float = Field(ge=0)
    n_pages: float = Field(ge=0)
    prop_pages: float = Field(ge=0, le=1)
    # multiple-copy
    n_copies: float = Field(ge=0)
    copy_reshare_entropy: float = Field(ge=0)
    mean_reshares_per_copy: float = Field(ge=0)
    top_copy_share: float = Field(ge=0, le=1)
    prop_copies_by_pages: float = Field(ge=0, le=1)
    prop_reshares_by_pages: float = Field(ge=0, le=1)
    prop_reshares_page_copies: float = Field(ge=0, le=1)
    top_copy_by_page: float = Field(ge=0, le=1)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)


FEATURE_NAMES = tuple(FeatureVector.model_fields)

FEATURE_GROUPS = {
    "temporal": FEATURE_NAMES[0:7],
    "demographic": FEATURE_NAMES[7:12],
    "network": FEATURE_NAMES[12:18],
    "multiple-copy": FEATURE_NAMES[18:26],
}


class Task(str, Enum):
    RECUR = "recur"
    SIZE = "size"
    WHEN = "when"


class RawLabels(BaseModel):
    recurred: bool
    size_ratio: Optional[float] = None
    gap: Optional[int] = None


class Labels(BaseModel):
    recurred: bool
    rel_size_large: Optional[bool] = None
    late_recurrence: Optional[bool] = None

    @model_validator(mode="after")
    def check_optional_fields(self):
        present = self.rel_size_large is not None or self.late_recurrence is not None
        if present and not self.recurred:
            raise ValueError("size and timing labels exist only for recurring cascades")
        return self


class ForestConfig(BaseModel):
    n_trees: PositiveInt = 100
    max_depth: PositiveInt = 12
    min_leaf: PositiveInt = 5
    features_per_split: PositiveInt = 5
    bootstrap: bool = True
    rng_seed: int = 0


class LogisticConfig(BaseModel):
    l2: float = Field(default=1.0, ge=0.0)
    iterations: NonNegativeInt = 500
    learning_rate: float = Field(default=0.1, gt=0.0)


class FoldMetrics(BaseModel):
    accuracy: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    roc_auc: float = Field(ge=0.0, le=1.0)


class EvalReport(FoldMetrics):
    model: str
    task: Optional[Task] = None
    per_fold: List[FoldMetrics]
    per_feature_auc: Dict[str, float] = {}


class PredictConfig(BaseModel):
    task: Task = Task.RECUR
    model: Literal["forest", "logistic", "both"] = "both"
    folds: int = Field(default=10, ge=2)
    forest: ForestConfig = ForestConfig()
    logistic: LogisticConfig = LogisticConfig()
    detector: PeakParams = PeakParams()
    per_copy: bool = False
    rng_seed: int = 0


class RunManifest(BaseModel):
    command: str
    argv: List[str]
    version: str
    seeds: Dict[str, int] = {}
    configs: Dict[str, str] = {}
    inputs: Dict[str, str] = {}
    outputs: List[str] = []

    @field_validator("argv")
    @classmethod
    def check_argv(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("manifest needs the recorded argv")
        return value


class BurstPopulation(BaseModel):
    burst: Burst
    persons: FrozenSet[int]
    pages: FrozenSet[int]

    @model_validator(mode="after")
    def check_disjoint(self):
        if self.persons & self.pages:
            raise ValueError("a node cannot be both a person and a page")
        return self

    @property
    def members(self) -> FrozenSet[int]:
        return self.persons | self.pages


class EdgeCounts(BaseModel):
    friend_within_first: NonNegativeInt
    follow_within_first: NonNegativeInt
    friend_within_second: NonNegativeInt
    follow_within_second: NonNegativeInt
    friend_across: NonNegativeInt
    follow_across: NonNegativeInt


class DemographicShift(BaseModel):
    age_change: float = Field(ge=0.0)
    female_change: float = Field(ge=0.0, le=1.0)
    majority_country_changed: bool


class SuppressionReport(BaseModel):
    primary_peaks: List[int]
    alternate_peaks: List[int]
    test: TestResult
    overlap_correlation: CorrelationResult
