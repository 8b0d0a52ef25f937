"""Patient case records, role slicing, diagnosis options and synthetic cases."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import catalog
from .errors import InvalidConfig, PoolTooSmall, SchemaError
from .evidence_tree import normalize_label
from .roles import SPECIALISTS, AgentRole

TEXT_FIELDS = (
    "chief_complaints",
    "present_illness",
    "physical_examination",
    "lab_results",
    "imaging_results",
    "pathology_results",
)
FIELDS = ("case_id", "age", "sex", *TEXT_FIELDS, "department", "gold_labels")
SEXES = ("male", "female")

ROLE_SECTIONS: dict[AgentRole, tuple[str, ...]] = {
    AgentRole.OUTPATIENT: (
        "age", "sex", "chief_complaints", "present_illness", "physical_examination",
    ),
    AgentRole.LABORATORY: ("lab_results",),
    AgentRole.RADIOLOGY: ("imaging_results",),
    AgentRole.PATHOLOGY: ("pathology_results",),
}
DATA_SECTIONS = tuple(name for role in SPECIALISTS for name in ROLE_SECTIONS[role])


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    age: int
    sex: str
    chief_complaints: str
    present_illness: str
    physical_examination: str
    lab_results: str
    imaging_results: str
    pathology_results: str
    department: str
    gold_labels: tuple[str, ...]

    def section(self, name: str) -> str:
        if name not in DATA_SECTIONS:
            raise KeyError(name)
        return str(getattr(self, name))

    def patient_data(self) -> dict:
        """The eight data sections, as shown to agents (no labels, no ids)."""
        return {name: getattr(self, name) for name in DATA_SECTIONS}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gold_labels"] = list(self.gold_labels)
        return d


@dataclass(frozen=True)
class RoleInput:
    role: AgentRole
    sections: tuple[tuple[str, str], ...]

    def get(self, name: str, default: str = "") -> str:
        for key, text in self.sections:
            if key == name:
                return text
        return default

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.sections)


@dataclass(frozen=True)
class OptionItem:
    letter: str
    label: str
    is_gold: bool


@dataclass(frozen=True)
class DiagnosisOptions:
    items: tuple[OptionItem, ...]

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(i.letter for i in self.items)

    @property
    def gold_letters(self) -> frozenset[str]:
        return frozenset(i.letter for i in self.items if i.is_gold)

    def render(self) -> str:
        return "\n".join(f"{i.letter}. {i.label}" for i in self.items)

    def to_dict(self) -> list[dict]:
        return [{"letter": i.letter, "label": i.label, "is_gold": i.is_gold} for i in self.items]


LabelPool = Mapping[str, Sequence[str]]


# ---------------------------------------------------------------------------
# loading / saving
# ---------------------------------------------------------------------------


def _check_record(index: int, raw: object) -> list[SchemaError]:
    errs: list[SchemaError] = []
    if not isinstance(raw, dict):
        return [SchemaError(index, "<record>", "not a JSON object")]
    for name in FIELDS:
        if name not in raw:
            errs.append(SchemaError(index, name, "missing"))
    for name in raw:
        if name not in FIELDS:
            errs.append(SchemaError(index, name, "unknown field"))
    if "case_id" in raw and (not isinstance(raw["case_id"], str) or not raw["case_id"]):
        errs.append(SchemaError(index, "case_id", "must be a non-empty string"))
    age = raw.get("age", 0)
    if isinstance(age, bool) or not isinstance(age, int) or age < 0:
        errs.append(SchemaError(index, "age", "must be an integer >= 0"))
    if "sex" in raw and raw["sex"] not in SEXES:
        errs.append(SchemaError(index, "sex", f"must be one of {SEXES}, got {raw['sex']!r}"))
    for name in TEXT_FIELDS:
        if name in raw and not isinstance(raw[name], str):
            errs.append(SchemaError(index, name, "must be a string"))
    dept = raw.get("department", "-")
    if not isinstance(dept, str) or not dept.strip():
        errs.append(SchemaError(index, "department", "must be a non-empty string"))
    if "gold_labels" not in raw:
        return errs
    gold = raw["gold_labels"]
    if not isinstance(gold, list) or not gold:
        errs.append(SchemaError(index, "gold_labels", "must be a non-empty list"))
    elif not all(isinstance(g, str) and g.strip() for g in gold):
        errs.append(SchemaError(index, "gold_labels", "labels must be non-empty strings"))
    elif len({normalize_label(g) for g in gold}) != len(gold):
        errs.append(SchemaError(index, "gold_labels", "duplicate labels"))
    return errs


def check_cases(data: object) -> list[SchemaError]:
    """Every schema violation in a decoded case document."""
    if not isinstance(data, list):
        return [SchemaError(-1, "<document>", "expected a JSON array of records")]
    errs: list[SchemaError] = []
    seen: set[str] = set()
    for i, raw in enumerate(data):
        errs.extend(_check_record(i, raw))
        if isinstance(raw, dict) and isinstance(raw.get("case_id"), str):
            if raw["case_id"] in seen:
                errs.append(SchemaError(i, "case_id", "duplicate case_id"))
            seen.add(raw["case_id"])
    return errs


def case_from_dict(raw: dict) -> CaseRecord:
    errs = _check_record(0, raw)
    if errs:
        raise errs[0]
    values = {name: raw[name] for name in FIELDS}
    values["gold_labels"] = tuple(raw["gold_labels"])
    return CaseRecord(**values)


def load_cases(path: str | Path) -> list[CaseRecord]:
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    errs = check_cases(data)
    if errs:
        raise errs[0]
    return [case_from_dict(raw) for raw in data]


def dump_cases(cases: Iterable[CaseRecord]) -> str:
    return json.dumps([c.to_dict() for c in cases], ensure_ascii=False, indent=2) + "\n"


def save_cases(cases: Iterable[CaseRecord], path: str | Path) -> None:
    Path(path).write_text(dump_cases(cases), encoding="utf-8")


def check_pool(data: object) -> list[str]:
    if not isinstance(data, dict):
        return ["label pool must be a JSON object of department -> labels"]
    problems = []
    for dept, labels in data.items():
        if not isinstance(labels, list) or not labels:
            problems.append(f"department {dept!r}: must map to a non-empty array")
        elif not all(isinstance(x, str) and x.strip() for x in labels):
            problems.append(f"department {dept!r}: labels must be non-empty strings")
    return problems


def load_pool(path: str | Path) -> dict[str, tuple[str, ...]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    problems = check_pool(data)
    if problems:
        raise SchemaError(-1, "<pool>", problems[0])
    return {dept: tuple(labels) for dept, labels in data.items()}


def save_pool(pool: LabelPool, path: str | Path) -> None:
    doc = {dept: list(labels) for dept, labels in pool.items()}
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# role slicing
# ---------------------------------------------------------------------------


def slice_for_role(
    case: CaseRecord, role: AgentRole, active_roles: Iterable[AgentRole]
) -> RoleInput:
    """Sections of ``case`` that ``role`` sees before any discussion.

    Data of inactive specialists is handed to the outpatient doctor.
    """
    active = frozenset(active_roles)
    if AgentRole.OUTPATIENT not in active:
        raise InvalidConfig("the outpatient doctor must always be active")
    if role not in active or not role.is_specialist:
        raise InvalidConfig(f"{role.value} is not an active specialist")
    names = list(ROLE_SECTIONS[role])
    if role is AgentRole.OUTPATIENT:
        for other in SPECIALISTS:
            if other not in active:
                names.extend(ROLE_SECTIONS[other])
    return RoleInput(role, tuple((n, case.section(n)) for n in names))


# ---------------------------------------------------------------------------
# diagnosis options
# ---------------------------------------------------------------------------


def option_letter(i: int) -> str:
    """0 -> A, 25 -> Z, 26 -> AA, ..."""
    out = ""
    i += 1
    while i > 0:
        i, rem = divmod(i - 1, 26)
        out = chr(ord("A") + rem) + out
    return out


def default_distractor_count(case: CaseRecord) -> int:
    return max(3, len(case.gold_labels))


def eligible_distractors(case: CaseRecord, pool: LabelPool) -> list[str]:
    gold = {normalize_label(g) for g in case.gold_labels}
    seen: dict[str, str] = {}
    for label in pool.get(case.department, ()):
        key = normalize_label(label)
        if key not in gold and key not in seen:
            seen[key] = label
    return [seen[k] for k in sorted(seen)]


def build_options(
    case: CaseRecord,
    pool: LabelPool,
    distractor_count: int | None = None,
    seed: int = 0,
) -> DiagnosisOptions:
    if distractor_count is None:
        distractor_count = default_distractor_count(case)
    eligible = eligible_distractors(case, pool)
    if len(eligible) < distractor_count:
        raise PoolTooSmall(case.department, distractor_count, len(eligible))
    rng = random.Random(seed)
    picked = rng.sample(eligible, distractor_count)
    combined = [(g, True) for g in case.gold_labels] + [(d, False) for d in picked]
    rng.shuffle(combined)
    return DiagnosisOptions(
        tuple(OptionItem(option_letter(i), label, gold) for i, (label, gold) in enumerate(combined))
    )


# ---------------------------------------------------------------------------
# synthetic cases
# ---------------------------------------------------------------------------


def default_label_pool() -> dict[str, tuple[str, ...]]:
    return {dept: tuple(sorted(diseases)) for dept, diseases in catalog.CATALOG.items()}


def _join(parts: Iterable[str]) -> str:
    return "; ".join(p for p in parts if p)


def _age_bands(count: int, rng: random.Random) -> list[tuple[int, int]]:
    # jittered stratified draw: band frequencies stay within 1/count of the weights
    bounds, acc = [], 0.0
    total = sum(w for _, _, w in catalog.AGE_BANDS)
    for lo, hi, w in catalog.AGE_BANDS:
        acc += w / total
        bounds.append((acc, (lo, hi)))
    bands = []
    for i in range(count):
        u = (i + rng.random()) / count
        bands.append(next((band for edge, band in bounds if u < edge), bounds[-1][1]))
    rng.shuffle(bands)
    return bands


def generate_cases(count: int, seed: int = 0) -> list[CaseRecord]:
    """Deterministic synthetic cases drawn from the built-in catalog."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    departments = sorted(catalog.DEPARTMENT_WEIGHTS)
    weights = [catalog.DEPARTMENT_WEIGHTS[d] for d in departments]
    bands = _age_bands(count, rng)
    cases = []
    for i in range(count):
        dept = rng.choices(departments, weights)[0]
        diseases = catalog.CATALOG[dept]
        n_gold = rng.choice((1, 2, 2, 3))
        gold = rng.sample(sorted(diseases), n_gold)
        frags = [diseases[g] for g in gold]
        lo, hi = bands[i]
        lab = _join(f["lab"] for f in frags)
        if not lab and rng.random() < 0.5:
            lab = "blood routine and liver function within normal limits"
        imaging = "" if rng.random() < 0.1 else _join(f["imaging"] for f in frags)
        pathology = "" if rng.random() < 0.3 else _join(f["pathology"] for f in frags)
        cases.append(
            CaseRecord(
                case_id=f"syn-{seed}-{i + 1:05d}",
                age=rng.randint(lo, hi),
                sex="female" if rng.random() < catalog.FEMALE_SHARE else "male",
                chief_complaints=_join(f["complaint"] for f in frags) or "routine admission",
                present_illness=_join(f["illness"] for f in frags),
                physical_examination=_join(f["exam"] for f in frags) or "no abnormal signs",
                lab_results=lab,
                imaging_results=imaging,
                pathology_results=pathology,
                department=dept,
                gold_labels=tuple(gold),
            )
        )
    return cases
