"""Survey instruments and scoring for the analyst trust-evaluation loop.

Ships editable instrument definitions (a 24-item six-trait personality
short form, trust and reliability item groups, and a 10-item usability
scale) plus the scoring machinery: reverse keying, construct means, the
0-100 usability score, Cronbach's alpha, and per-item Likert summaries.
Item texts are placeholders; analytics are text-agnostic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PERSONALITY_TRAITS = (
    "Honesty-Humility",
    "Neuroticism",
    "Extraversion",
    "Agreeableness",
    "Conscientiousness",
    "Openness",
)
VALIDATION_CONSTRUCTS = ("Trust", "Reliability", "Usability")


class SurveyError(Exception):
    pass


class OutOfScale(SurveyError):
    pass


class IncompleteResponse(SurveyError):
    def __init__(self, missing: list[str]):
        super().__init__(f"missing responses for items: {', '.join(missing)}")
        self.missing = missing


class WrongItemCount(SurveyError):
    pass


class ZeroTotalVariance(SurveyError):
    pass


class UnknownItem(SurveyError):
    pass


@dataclass(frozen=True)
class LikertItem:
    id: str
    construct: str
    prompt: str
    reverse_keyed: bool = False
    scale_max: int = 5


@dataclass
class SurveyInstrument:
    items: list[LikertItem]
    scale_max: int = 5

    def __post_init__(self):
        ids = [i.id for i in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("item ids must be unique")
        for trait in PERSONALITY_TRAITS:
            n = len(self.construct_items(trait))
            if n not in (0, 4):
                raise ValueError(f"trait {trait} must have exactly 4 items, found {n}")

    def construct_items(self, construct: str) -> list[LikertItem]:
        return [i for i in self.items if i.construct == construct]

    @property
    def constructs(self) -> list[str]:
        seen = []
        for item in self.items:
            if item.construct not in seen:
                seen.append(item.construct)
        return seen

    def item(self, item_id: str) -> LikertItem:
        for i in self.items:
            if i.id == item_id:
                return i
        raise UnknownItem(f"no item with id {item_id!r}")

    def to_jsonable(self) -> dict:
        return {
            "scale_max": self.scale_max,
            "items": [
                {
                    "id": i.id,
                    "construct": i.construct,
                    "prompt": i.prompt,
                    "reverse_keyed": i.reverse_keyed,
                    "scale_max": i.scale_max,
                }
                for i in self.items
            ],
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "SurveyInstrument":
        return cls(
            items=[LikertItem(**entry) for entry in obj["items"]],
            scale_max=obj.get("scale_max", 5),
        )


@dataclass
class SurveyResponse:
    session_id: str
    demographics: dict[str, str] = field(default_factory=dict)
    answers: dict[str, int] = field(default_factory=dict)  # item id -> 1..scale_max
    created_at: str = ""
    completed_at: str = ""

    @property
    def complete(self) -> bool:
        return bool(self.completed_at)


# ---------------------------------------------------------------------------
# Default instrument definition (placeholder texts, standard counts/keying)


def _personality_items() -> list[LikertItem]:
    prompts = {
        "Honesty-Humility": [
            ("I would never accept praise for work I did not do.", False),
            ("I deserve more recognition than most people get.", True),
            ("I am comfortable bending rules when it benefits me.", True),
            ("I return extra change when a cashier miscounts.", False),
        ],
        "Neuroticism": [
            ("I often feel tense when decisions carry risk.", False),
            ("I stay relaxed under time pressure.", True),
            ("Small setbacks can unsettle me for hours.", False),
            ("I rarely worry about things going wrong.", True),
        ],
        "Extraversion": [
            ("I enjoy being the one who starts conversations.", False),
            ("I keep quiet in group discussions.", True),
            ("Meeting new colleagues energizes me.", False),
            ("I prefer working alone over working in teams.", True),
        ],
        "Agreeableness": [
            ("I make time to hear out a colleague's concerns.", False),
            ("Other people's problems are not my business.", True),
            ("I look for compromises during disagreements.", False),
            ("I find it hard to sympathize with strangers.", True),
        ],
        "Conscientiousness": [
            ("I double-check my work before handing it off.", False),
            ("I often leave tasks unfinished.", True),
            ("I keep my files and notes well organized.", False),
            ("Deadlines tend to sneak up on me.", True),
        ],
        "Openness": [
            ("I like experimenting with unfamiliar tools.", False),
            ("I avoid changing methods that already work.", True),
            ("Abstract ideas hold my attention easily.", False),
            ("I have little interest in theoretical discussions.", True),
        ],
    }
    items = []
    for trait_index, trait in enumerate(PERSONALITY_TRAITS):
        for j, (prompt, reverse) in enumerate(prompts[trait], start=1):
            items.append(LikertItem(f"pers_{trait_index + 1}{j}", trait, prompt, reverse))
    return items


def _trust_items() -> list[LikertItem]:
    prompts = [
        ("I would rely on this system's alerts when triaging incidents.", False),
        ("The system's explanations made its decisions understandable.", False),
        ("I am confident the system flags the traffic that matters.", False),
        ("I would be comfortable acting on this system's output.", False),
        ("I am wary of depending on this system.", True),
        ("The system behaves the way I expect it to.", False),
    ]
    return [LikertItem(f"trust_{i + 1}", "Trust", p, r) for i, (p, r) in enumerate(prompts)]


def _reliability_items() -> list[LikertItem]:
    prompts = [
        ("The system produces consistent results on similar traffic.", False),
        ("The system's performance seems stable over time.", False),
        ("I can predict how the system will classify a given record.", False),
        ("The system sometimes behaves erratically.", True),
        ("The explanations stay consistent across similar cases.", False),
        ("Errors by the system appear at random.", True),
    ]
    return [LikertItem(f"rel_{i + 1}", "Reliability", p, r) for i, (p, r) in enumerate(prompts)]


def _usability_items() -> list[LikertItem]:
    # Ten alternating-keyed items: odd positions positive, even negative.
    prompts = [
        "I would use this interface regularly for alert review.",
        "The interface felt needlessly complicated.",
        "The interface was easy to work with.",
        "I would need help from a specialist to use this interface.",
        "The different views of the interface fit together well.",
        "The interface behaved inconsistently between screens.",
        "Most analysts would pick this interface up quickly.",
        "The interface was awkward to operate.",
        "I felt confident moving through the interface.",
        "I had to learn many things before I could get going.",
    ]
    return [
        LikertItem(f"sus_{i + 1}", "Usability", p, reverse_keyed=(i % 2 == 1))
        for i, p in enumerate(prompts)
    ]


def default_instrument() -> SurveyInstrument:
    return SurveyInstrument(items=_personality_items() + _trust_items() + _reliability_items() + _usability_items())


def save_instrument(instrument: SurveyInstrument, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instrument.to_jsonable(), indent=2))


def load_instrument(path: str | Path) -> SurveyInstrument:
    return SurveyInstrument.from_jsonable(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Scoring


def reverse_score(response: int, scale_max: int = 5, reverse: bool = True) -> int:
    """(m+1) - r for reverse-keyed items; identity otherwise. An involution."""
    if not 1 <= response <= scale_max:
        raise OutOfScale(f"response {response} outside 1..{scale_max}")
    return (scale_max + 1) - response if reverse else response


def score_construct(response: SurveyResponse, instrument: SurveyInstrument, construct: str) -> float:
    """Mean of reverse-adjusted responses over the construct's items."""
    items = instrument.construct_items(construct)
    if not items:
        raise UnknownItem(f"instrument has no construct {construct!r}")
    missing = [i.id for i in items if i.id not in response.answers]
    if missing:
        raise IncompleteResponse(missing)
    adjusted = [
        reverse_score(response.answers[i.id], i.scale_max, i.reverse_keyed) for i in items
    ]
    return float(np.mean(adjusted))


def trait_scores(response: SurveyResponse, instrument: SurveyInstrument) -> dict[str, float]:
    return {
        trait: score_construct(response, instrument, trait)
        for trait in PERSONALITY_TRAITS
        if instrument.construct_items(trait)
    }


def sus_score(responses: list[int] | tuple[int, ...]) -> float:
    """Standard 10-item usability score: odd items contribute r-1, even items
    5-r, total scaled by 2.5 onto 0..100."""
    if len(responses) != 10:
        raise WrongItemCount(f"usability scoring needs exactly 10 items, got {len(responses)}")
    total = 0
    for pos, r in enumerate(responses, start=1):
        if not 1 <= r <= 5:
            raise OutOfScale(f"item {pos}: response {r} outside 1..5")
        total += (r - 1) if pos % 2 == 1 else (5 - r)
    return total * 2.5


@dataclass
class AlphaReport:
    construct: str
    n_respondents: int
    k_items: int
    item_variances: np.ndarray
    total_variance: float
    alpha: float

    def to_jsonable(self) -> dict:
        return {
            "construct": self.construct,
            "n_respondents": self.n_respondents,
            "k_items": self.k_items,
            "item_variances": self.item_variances.tolist(),
            "total_variance": self.total_variance,
            "alpha": self.alpha,
        }


def cronbach_alpha(matrix: np.ndarray, construct: str = "") -> AlphaReport:
    """alpha = k/(k-1) * (1 - sum(item variances) / variance(row totals)),
    with sample (n-1) variances. Reverse adjustment must already be applied.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise SurveyError("expected an n_respondents x k_items matrix")
    n, k = matrix.shape
    if n < 2 or k < 2:
        raise SurveyError(f"alpha needs at least 2 respondents and 2 items, got {n} x {k}")
    item_var = matrix.var(axis=0, ddof=1)
    total_var = float(matrix.sum(axis=1).var(ddof=1))
    if total_var == 0.0:
        raise ZeroTotalVariance("all respondents have identical total scores")
    alpha = (k / (k - 1)) * (1.0 - item_var.sum() / total_var)
    return AlphaReport(construct, n, k, item_var, total_var, float(alpha))


def response_matrix(
    responses: list[SurveyResponse], instrument: SurveyInstrument, construct: str
) -> np.ndarray:
    """Reverse-adjusted item matrix over complete responses for a construct."""
    items = instrument.construct_items(construct)
    rows = []
    for r in responses:
        if not all(i.id in r.answers for i in items):
            continue
        rows.append([reverse_score(r.answers[i.id], i.scale_max, i.reverse_keyed) for i in items])
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(items))


def likert_summary(responses: list[SurveyResponse], instrument: SurveyInstrument) -> dict[str, dict]:
    """Per-item counts and percentages over the 1..scale_max points."""
    out: dict[str, dict] = {}
    for item in instrument.items:
        answered = [r.answers[item.id] for r in responses if item.id in r.answers]
        counts = [0] * item.scale_max
        for a in answered:
            if not 1 <= a <= item.scale_max:
                raise OutOfScale(f"item {item.id}: response {a} outside 1..{item.scale_max}")
            counts[a - 1] += 1
        n = len(answered)
        out[item.id] = {
            "construct": item.construct,
            "prompt": item.prompt,
            "counts": counts,
            "percentages": [100.0 * c / n if n else 0.0 for c in counts],
            "n": n,
        }
    return out


def render_responses_csv(responses: list[SurveyResponse], instrument: SurveyInstrument) -> str:
    """One row per complete response: demographics, raw answers, construct scores."""
    complete = [r for r in responses if r.complete]
    demo_keys = sorted({k for r in complete for k in r.demographics})
    constructs = [c for c in instrument.constructs]
    header = (
        ["session_id"]
        + demo_keys
        + [i.id for i in instrument.items]
        + [f"score_{c}" for c in constructs]
    )
    lines = [",".join(header)]
    for r in complete:
        scores = []
        for c in constructs:
            try:
                scores.append(f"{score_construct(r, instrument, c):.4f}")
            except IncompleteResponse:
                scores.append("")
        row = (
            [r.session_id]
            + [str(r.demographics.get(k, "")) for k in demo_keys]
            + [str(r.answers.get(i.id, "")) for i in instrument.items]
            + scores
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def export_responses_csv(
    responses: list[SurveyResponse], instrument: SurveyInstrument, path: str | Path
) -> int:
    Path(path).write_text(render_responses_csv(responses, instrument))
    return sum(1 for r in responses if r.complete)
