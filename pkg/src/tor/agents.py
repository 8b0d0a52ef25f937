"""The four specialist doctors and the moderator.

Every behaviour of the discussion loop lives here: prompt rendering, the
model call, and reading the answer back (with a bounded repair loop when the
answer does not follow the requested format).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

from .cases import CaseRecord, DiagnosisOptions, RoleInput
from .errors import AgentError, BackendError, FinalDecisionError, ParseError, ValidationError
from .evidence_tree import EvidenceTree, diff_trees, parse_tree, render_tree, tree_from_dict, validate_tree
from .llm import Backend, ChatRequest, Message
from .prompts import TemplateSet, fill
from .retrieval import NO_REFERENCES, RetrievedDoc, format_retrieved
from .roles import SPECIALISTS, AgentRole
from .trace import Trace, digest

__all__ = [
    "AgentRole",
    "OpinionRecord",
    "FinalDecision",
    "Situation",
    "Agents",
    "make_tag",
    "parse_letters",
    "parse_decision",
]

View = Union[EvidenceTree, str]

MODERATOR_PERSONA = "You are the head of the medical team."
REPAIR_PREAMBLE = (
    "Your previous output did not match the required format. "
    "Answer again, following the required output format exactly and adding nothing else."
)
PARTICIPATION_REPAIR = 'Your previous answer was not understood. Please answer only with "Yes" or "No".'
NOT_PERFORMED = "Not performed."

SECTION_TITLES = {
    "age": "Age",
    "sex": "Sex",
    "chief_complaints": "Chief-Complaints",
    "present_illness": "Present-Illness",
    "physical_examination": "Physical-Examination",
    "lab_results": "Laboratory test results",
    "imaging_results": "Imaging test results",
    "pathology_results": "Pathology test results",
}

_ROLE_WORDS = {
    "outpatient": AgentRole.OUTPATIENT,
    "attending": AgentRole.OUTPATIENT,
    "laboratory": AgentRole.LABORATORY,
    "lab": AgentRole.LABORATORY,
    "radiology": AgentRole.RADIOLOGY,
    "radiologist": AgentRole.RADIOLOGY,
    "imaging": AgentRole.RADIOLOGY,
    "pathology": AgentRole.PATHOLOGY,
    "pathologist": AgentRole.PATHOLOGY,
}
_ROLE_WORD_RE = re.compile(r"\b(" + "|".join(sorted(_ROLE_WORDS, key=len, reverse=True)) + r")\b")
_YES_NO = re.compile(r"^(yes|no)\b")
_FENCE = re.compile(r"```[a-zA-Z]*\s*\n?(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class OpinionRecord:
    round: int
    turn: int
    source: AgentRole
    target: AgentRole
    text: str

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("an agent cannot address itself")
        if not (self.source.is_specialist and self.target.is_specialist):
            raise ValueError("opinions are exchanged between specialists only")

    def to_dict(self) -> dict:
        return {"round": self.round, "turn": self.turn, "source": self.source.value,
                "target": self.target.value, "text": self.text}


@dataclass(frozen=True)
class FinalDecision:
    selected_letters: tuple[str, ...]
    merged_tree: EvidenceTree
    raw: str


@dataclass
class Situation:
    """What a specialist sees during discussion: the case and everyone's view."""

    patient_case: str
    round_num: int
    turn_num: int
    views: Mapping[AgentRole, View] = field(default_factory=dict)

    @property
    def active(self) -> tuple[AgentRole, ...]:
        return tuple(r for r in SPECIALISTS if r in self.views)


def make_tag(role: AgentRole, phase: str, round_num: int | None = None,
             turn_num: int | None = None) -> str:
    tag = f"{role.value}/{phase}"
    if round_num is not None:
        tag += f"/{round_num}" if turn_num is None else f"/{round_num}.{turn_num}"
    return tag


def view_text(view: View) -> str:
    return render_tree(view).rstrip("\n") if isinstance(view, EvidenceTree) else str(view).strip()


def render_opinions(views: Mapping[AgentRole, View]) -> str:
    return "\n".join(
        f"{role.display}: {view_text(views[role])}" for role in SPECIALISTS if role in views
    )


def patient_case_json(case: CaseRecord) -> str:
    return json.dumps(case.patient_data(), ensure_ascii=False, indent=2)


# ---------------------------------------------------------------------------
# final decision parsing
# ---------------------------------------------------------------------------


def parse_letters(value: object, valid: Sequence[str]) -> list[str]:
    """Option letters mentioned in ``value``; unknown letters are kept.

    Accepts ``"A"``, ``"A,C"``, ``"AC"``, ``"A and C"`` and JSON lists.
    """
    items = value if isinstance(value, (list, tuple)) else [value]
    valid_set = set(valid)
    found: list[str] = []
    for item in items:
        if item is None:
            continue
        for tok in re.findall(r"[A-Za-z]+", str(item)):
            if tok in valid_set:
                found.append(tok)
            elif len(tok) == 1 and tok.upper() in valid_set:
                found.append(tok.upper())
            elif tok.isupper() and all(ch in valid_set for ch in tok):
                found.extend(tok)
            elif tok.isupper() and len(tok) <= 2:
                found.append(tok)
    return list(dict.fromkeys(found))


def _extract_json(text: str) -> dict:
    body = text.strip()
    fenced = _FENCE.search(body)
    if fenced:
        body = fenced.group(1)
    start, end = body.find("{"), body.rfind("}")
    if start < 0 or end <= start:
        raise FinalDecisionError("Unparseable", "no JSON object in the answer")
    try:
        obj = json.loads(body[start:end + 1], strict=False)
    except json.JSONDecodeError as exc:
        raise FinalDecisionError("Unparseable", f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise FinalDecisionError("Unparseable", "JSON answer is not an object")
    for key in ("selected_options", "evi_tree"):
        if key not in obj:
            raise FinalDecisionError("Unparseable", f"missing key {key!r}")
    return obj


def parse_decision(text: str, options: DiagnosisOptions) -> FinalDecision:
    obj = _extract_json(text)
    mentioned = parse_letters(obj["selected_options"], options.letters)
    letters = tuple(l for l in options.letters if l in mentioned)
    if not letters:
        raise FinalDecisionError("NoValidLetters", f"no known option in {obj['selected_options']!r}")
    evi = obj["evi_tree"]
    try:
        if isinstance(evi, dict):
            tree = tree_from_dict(evi)
            problems = validate_tree(tree)
            if problems:
                raise ValidationError(problems)
        else:
            tree = parse_tree(str(evi))
    except (ParseError, ValidationError) as exc:
        raise FinalDecisionError("Unparseable", f"evi_tree: {exc}") from None
    return FinalDecision(letters, tree, text)


# ---------------------------------------------------------------------------
# agents
# ---------------------------------------------------------------------------


class Agents:
    """Runs agent behaviours against one backend, logging into ``trace``."""

    def __init__(
        self,
        backend: Backend,
        templates: TemplateSet | None = None,
        trace: Trace | None = None,
        repair_budget: int = 2,
        evidence_tree: bool = True,
        temperature: float = 0.0,
        max_tokens: int = 2048,
    ):
        self.backend = backend
        self.templates = templates or TemplateSet()
        self.trace = trace if trace is not None else Trace()
        self.repair_budget = repair_budget
        self.evidence_tree = evidence_tree
        self.temperature = temperature
        self.max_tokens = max_tokens

    # -- plumbing ---------------------------------------------------------

    def persona(self, role: AgentRole) -> str:
        if role is AgentRole.MODERATOR:
            return MODERATOR_PERSONA
        return self.templates.get(role.value).split("\n", 1)[0].strip()

    def _call(self, role: AgentRole, tag: str, messages: list[Message]) -> str:
        request = ChatRequest(tuple(messages), tag, self.temperature, self.max_tokens)
        response = self.backend.complete(request)
        self.trace.add("call", tag, role=role.value, request=request.digest(),
                       response=digest(response.content))
        return response.content

    def _start(self, role: AgentRole, user: str) -> list[Message]:
        return [Message("system", self.persona(role)), Message("user", user)]

    def _with_repairs(self, role: AgentRole, tag: str, prompt: str, read: Callable[[str], object]):
        """Call, read, and on failure re-prompt up to ``repair_budget`` times.

        Returns ``(value, raw, repairs)``; re-raises the last read error.
        """
        messages = self._start(role, prompt)
        phase_tag = tag
        for attempt in range(self.repair_budget + 1):
            raw = self._call(role, phase_tag, messages)
            try:
                return read(raw), raw, attempt
            except (ParseError, FinalDecisionError) as exc:
                self.trace.add("repair", phase_tag, role=role.value, attempt=attempt + 1,
                               error=str(exc))
                if attempt == self.repair_budget:
                    raise
                messages = messages + [
                    Message("assistant", raw),
                    Message("user", f"{REPAIR_PREAMBLE}\nProblem: {exc}"),
                ]
                phase, _, rest = tag.partition("/")[2].partition("/")
                phase_tag = f"{role.value}/{phase}-repair" + (f"/{rest}" if rest else "")
        raise AssertionError("unreachable")

    # -- initial diagnosis --------------------------------------------------

    def render_initial_prompt(self, role: AgentRole, role_input: RoleInput,
                              retrieved: Sequence[RetrievedDoc] | str | None = None) -> str:
        if not role.is_specialist:
            raise AgentError(role, "the moderator does not diagnose on its own")
        if isinstance(retrieved, str):
            retrieved_text = retrieved
        else:
            retrieved_text = format_retrieved(list(retrieved or ()))
        name = role.value if self.evidence_tree else f"{role.value}_freetext"
        values: dict[str, str] = {"retrieved_info": retrieved_text or NO_REFERENCES}
        for key, text in role_input.sections:
            values[key] = str(text).strip() or NOT_PERFORMED
        extra = []
        if role is AgentRole.OUTPATIENT:
            own = ("age", "sex", "chief_complaints", "present_illness", "physical_examination")
            extra = [(k, t) for k, t in role_input.sections if k not in own]
        values["additional_data"] = (
            "\n\nAdditional examination data:\n"
            + "\n".join(f"{SECTION_TITLES[k]}: {str(t).strip() or NOT_PERFORMED}" for k, t in extra)
            if extra else ""
        )
        return fill(self.templates.get(name), values)

    def initial_diagnosis(self, role: AgentRole, role_input: RoleInput,
                          retrieved: Sequence[RetrievedDoc] | str | None = None) -> View:
        full = self.render_initial_prompt(role, role_input, retrieved)
        prompt = full.split("\n", 1)[1].lstrip("\n") if "\n" in full else full
        tag = make_tag(role, "initial")
        if not self.evidence_tree:
            return self._call(role, tag, self._start(role, prompt)).strip()
        try:
            tree, _, _ = self._with_repairs(role, tag, prompt, parse_tree)
        except ParseError as exc:
            raise AgentError(role, "ParseFailureAfterRepairs", exc) from exc
        except BackendError as exc:
            raise AgentError(role, "BackendError", exc) from exc
        return tree

    # -- discussion ---------------------------------------------------------

    def should_participate(self, role: AgentRole, situation: Situation) -> tuple[bool, str]:
        """Ask for Yes/No. Never raises; unreadable answers default to No.

        Returns the flag and the answer it was read from.
        """
        prompt = fill(self.templates.get("participate"), {
            "patient_case": situation.patient_case,
            "round_num": situation.round_num,
            "turn_num": situation.turn_num,
            "doctor_opinions": render_opinions(situation.views),
        })
        tag = make_tag(role, "participate", situation.round_num, situation.turn_num)
        messages = self._start(role, prompt)
        answer = ""
        for attempt in range(2):
            try:
                answer = self._call(role, tag, messages)
            except BackendError as exc:
                self.trace.add("anomaly", tag, role=role.value, error=str(exc), default=False)
                return False, ""
            flag = read_yes_no(answer)
            if flag is not None:
                return flag, answer
            self.trace.add("anomaly", tag, role=role.value, answer=answer, attempt=attempt + 1)
            messages = messages + [Message("assistant", answer), Message("user", PARTICIPATION_REPAIR)]
            tag = make_tag(role, "participate-repair", situation.round_num, situation.turn_num)
        self.trace.add("anomaly", tag, role=role.value, default=False)
        return False, answer

    def choose_targets(self, role: AgentRole, situation: Situation, answer: str = "") -> list[AgentRole]:
        """Peers named in the participation answer, else peers in conflict.

        No model call is made: targets ride along with the Yes/No answer.
        """
        peers = [r for r in situation.active if r is not role]
        named = named_roles(answer)
        targets = [r for r in peers if r in named]
        if targets:
            return targets
        mine = situation.views.get(role)
        fallback = []
        if isinstance(mine, EvidenceTree):
            for peer in peers:
                theirs = situation.views.get(peer)
                if isinstance(theirs, EvidenceTree) and diff_trees(mine, theirs).has_conflict:
                    fallback.append(peer)
        self.trace.add("anomaly", make_tag(role, "targets", situation.round_num, situation.turn_num),
                       role=role.value, answer=answer, fallback=[r.value for r in fallback])
        return fallback

    def generate_opinion(self, source: AgentRole, target: AgentRole, situation: Situation) -> OpinionRecord:
        if source is target:
            raise ValueError("source and target must differ")
        prompt = fill(self.templates.get("opinion"), {
            "source_doctor": source.display,
            "target_doctor": target.display,
            "patient_case": situation.patient_case,
            "round_num": situation.round_num,
            "turn_num": situation.turn_num,
            "doctor_opinions": render_opinions(situation.views),
        })
        tag = make_tag(source, f"opinion-{target.value}", situation.round_num, situation.turn_num)
        text = self._call(source, tag, self._start(source, prompt))
        return OpinionRecord(situation.round_num, situation.turn_num, source, target, text)

    def update_tree(self, role: AgentRole, original: View, feedback: Sequence[OpinionRecord],
                    round_num: int) -> View:
        """Revise ``original`` with this round's feedback addressed to ``role``.

        Without feedback the original comes back untouched and nothing is
        sent to the model. When the revision cannot be read after repairs the
        original is kept and an anomaly is traced.
        """
        mine = [f for f in feedback if f.target is role and f.round == round_num]
        if not mine:
            return original
        name = "update" if self.evidence_tree else "update_freetext"
        prompt = fill(self.templates.get(name), {
            "doctor_type": role.display,
            "original_diagnosis": view_text(original),
            "feedback": render_feedback(mine),
        })
        tag = make_tag(role, "update", round_num)
        if not self.evidence_tree:
            return self._call(role, tag, self._start(role, prompt)).strip()
        try:
            tree, _, _ = self._with_repairs(role, tag, prompt, parse_tree)
        except ParseError as exc:
            self.trace.add("anomaly", tag, role=role.value, error=str(exc), kept_original=True)
            return original
        return tree

    # -- moderator ----------------------------------------------------------

    def final_decision(self, case: CaseRecord, views: Mapping[AgentRole, View],
                       options: DiagnosisOptions) -> FinalDecision:
        missing = [r.value for r in SPECIALISTS if r in views and views[r] is None]
        if missing or not views:
            raise FinalDecisionError("Unparseable", f"missing specialist views: {missing}")
        prompt = fill(self.templates.get("final"), {
            "patient_case": patient_case_json(case),
            "doctor_opinions": render_opinions(views),
            "options": options.render(),
        })
        tag = make_tag(AgentRole.MODERATOR, "final")
        decision, _, _ = self._with_repairs(
            AgentRole.MODERATOR, tag, prompt, lambda raw: parse_decision(raw, options)
        )
        return decision


def read_yes_no(answer: str) -> bool | None:
    text = answer.strip().casefold()
    text = re.sub(r"^[\W_]+", "", text)
    m = _YES_NO.match(text)
    if not m:
        return None
    return m.group(1) == "yes"


def named_roles(answer: str) -> set[AgentRole]:
    text = answer.casefold()
    m = _YES_NO.match(re.sub(r"^[\W_]+", "", text.strip()))
    if m:
        text = re.sub(r"^[\W_]+", "", text.strip())[m.end():]
    return {_ROLE_WORDS[w] for w in _ROLE_WORD_RE.findall(text)}


def render_feedback(feedback: Sequence[OpinionRecord]) -> str:
    """Opinions grouped by source doctor, in fixed role order."""
    blocks = []
    for source in SPECIALISTS:
        mine = sorted((f for f in feedback if f.source is source), key=lambda f: (f.round, f.turn))
        if not mine:
            continue
        lines = [f"From the {source.display} doctor:"]
        lines += [f"(Round {f.round}, Turn {f.turn}) {f.text.strip()}" for f in mine]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)
