import dataclasses
from dataclasses import dataclass, field
from json import JSONEncoder
from typing import Any, Dict, List, Optional

import numpy as np
from dataclasses_json import dataclass_json

from rigidity_lab.manifolds import ModelManifold


@dataclass_json
@dataclass
class AssertionRecord:
    name: str
    value: float
    bound: float
    holds: bool
    detail: str = ""


def at_most(name: str, value: float, bound: float, detail: str = "") -> AssertionRecord:
    return AssertionRecord(name, float(value), float(bound), bool(value <= bound), detail)


def at_least(name: str, value: float, bound: float, detail: str = "") -> AssertionRecord:
    return AssertionRecord(name, float(value), float(bound), bool(value >= bound), detail)


def flag(name: str, holds: bool, detail: str = "") -> AssertionRecord:
    return AssertionRecord(name, 1.0 if holds else 0.0, 1.0, bool(holds), detail)


@dataclass
class RunReport:
    subcommand: str
    seed: int
    version: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    assertions: List[AssertionRecord] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.holds for a in self.assertions)

    def add(self, record: AssertionRecord) -> AssertionRecord:
        self.assertions.append(record)
        return record

    def assertion(self, name: str) -> Optional[AssertionRecord]:
        return next((a for a in self.assertions if a.name == name), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "seed": self.seed,
            "version": self.version,
            "passed": self.passed,
            "parameters": self.parameters,
            "assertions": [a.to_dict() for a in self.assertions],
            "results": self.results,
        }


class ReportEncoder(JSONEncoder):
    def default(self, obj):
        if hasattr(obj, 'to_dict'):
            return obj.to_dict()
        elif isinstance(obj, ModelManifold):
            return obj.describe()
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, complex):
            return [obj.real, obj.imag]
        elif dataclasses.is_dataclass(obj):
            return dataclasses.asdict(obj)
        return super().default(obj)
