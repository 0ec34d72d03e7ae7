"""Model-input construction: physician style tokens and the two templates.

Encoder-decoder inputs are four stacked parts (exam description line,
style-token line, ``Findings:`` section, ``Indication:`` section).
Decoder-only inputs are an instruction line, an ``Input:`` section holding
findings and indications joined by a blank line, and a ``Response:``
prefix that the target follows in train mode.

Section labels must not occur at line starts inside section bodies;
corpora produced by :mod:`petsumm.synth` guarantee this, which makes
formatted inputs parse back losslessly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import Report
from .errors import MissingTokenError, TokenBudgetError

ENCODER_DECODER = "encoder_decoder"
DECODER_ONLY = "decoder_only"
ARCHES = (ENCODER_DECODER, DECODER_ONLY)

TRAIN = "train"
INFER = "infer"

STYLE_TOKEN_RE = re.compile(r"\[PHYS\d{4,}\]")
RESPONSE_PREFIX = "Response:"


class StyleTokenRegistry:
    """Injective physician-id -> reserved-token mapping.

    Tokens are bracketed words (``[PHYS0007]``) derived from a stable
    registration index, so they never collide with normalizer output or
    with each other. Registration is idempotent.
    """

    def __init__(self, prefix: str = "PHYS"):
        self.prefix = prefix
        self._tokens: dict[str, str] = {}

    def register(self, physician_id: str) -> str:
        token = self._tokens.get(physician_id)
        if token is None:
            token = f"[{self.prefix}{len(self._tokens):04d}]"
            self._tokens[physician_id] = token
        return token

    def register_all(self, physician_ids) -> list[str]:
        return [self.register(pid) for pid in physician_ids]

    def token_for(self, physician_id: str) -> str:
        try:
            return self._tokens[physician_id]
        except KeyError:
            raise MissingTokenError(
                f"physician {physician_id!r} is not registered") from None

    def physicians(self) -> list[str]:
        return list(self._tokens)

    def tokens(self) -> list[str]:
        return list(self._tokens.values())

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, physician_id):
        return physician_id in self._tokens

    def content_hash(self) -> str:
        import hashlib
        blob = json.dumps(self._tokens, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"prefix": self.prefix, "tokens": self._tokens}
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "StyleTokenRegistry":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        registry = cls(prefix=payload["prefix"])
        registry._tokens = dict(payload["tokens"])
        return registry


@dataclass(frozen=True)
class FormattedExample:
    """Model-ready input/target pair.

    ``style_token`` is None for plain pairs (e.g. scorer adaptation data)
    that carry no physician conditioning.
    """

    input_text: str
    target_text: str
    arch: str
    style_token: str | None
    report_id: str | None = None
    truncated: bool = False


def _check_once(text: str, token: str) -> None:
    if text.count(token) != 1:
        raise ValueError(f"style token {token!r} must occur exactly once")


def build_encoder_decoder_input(report: Report, registry: StyleTokenRegistry,
                                mode: str = TRAIN) -> FormattedExample:
    """Four-part input: description / style token / findings / indications."""
    token = registry.token_for(report.physician_id)
    input_text = (
        f"{report.exam_description}\n"
        f"{token}\n"
        f"Findings: {report.findings}\n"
        f"Indication: {report.indications}"
    )
    _check_once(input_text, token)
    target = report.impression if mode == TRAIN else ""
    return FormattedExample(input_text, target, ENCODER_DECODER, token,
                            report_id=report.report_id)


def build_decoder_only_prompt(report: Report, registry: StyleTokenRegistry,
                              mode: str = TRAIN) -> FormattedExample:
    """Instruction prompt ending with the ``Response:`` prefix."""
    token = registry.token_for(report.physician_id)
    prompt = (
        f"Derive the impression from the given {report.exam_description} "
        f"report for {token}.\n"
        f"Input: {report.findings}\n\n{report.indications}\n"
        f"{RESPONSE_PREFIX}"
    )
    _check_once(prompt, token)
    if mode == TRAIN:
        input_text = f"{prompt} {report.impression}"
        target = report.impression
    else:
        input_text = prompt
        target = ""
    return FormattedExample(input_text, target, DECODER_ONLY, token,
                            report_id=report.report_id)


def parse_encoder_decoder_input(text: str) -> dict[str, str]:
    """Recover the four parts of an encoder-decoder input."""
    first_nl = text.index("\n")
    second_nl = text.index("\n", first_nl + 1)
    description = text[:first_nl]
    style_token = text[first_nl + 1:second_nl]
    rest = text[second_nl + 1:]
    if not rest.startswith("Findings: "):
        raise ValueError("missing 'Findings:' section")
    body = rest[len("Findings: "):]
    marker = "\nIndication: "
    cut = body.rfind(marker)
    if cut < 0:
        raise ValueError("missing 'Indication:' section")
    return {
        "exam_description": description,
        "style_token": style_token,
        "findings": body[:cut],
        "indications": body[cut + len(marker):],
    }


def parse_decoder_only_prompt(text: str) -> dict[str, str]:
    """Recover instruction, findings, indications, and any response text."""
    first_nl = text.index("\n")
    instruction = text[:first_nl]
    rest = text[first_nl + 1:]
    if not rest.startswith("Input: "):
        raise ValueError("missing 'Input:' section")
    resp_at = rest.rfind(f"\n{RESPONSE_PREFIX}")
    if resp_at < 0:
        raise ValueError("missing 'Response:' prefix")
    body = rest[len("Input: "):resp_at]
    after = rest[resp_at + 1 + len(RESPONSE_PREFIX):]
    sep = body.find("\n\n")
    if sep < 0:
        findings, indications = body, ""
    else:
        findings, indications = body[:sep], body[sep + 2:]
    return {
        "instruction": instruction,
        "findings": findings,
        "indications": indications,
        "response": after.lstrip(" "),
    }


def _rebuild(example: FormattedExample, findings: str) -> str:
    if example.arch == ENCODER_DECODER:
        parts = parse_encoder_decoder_input(example.input_text)
        return (
            f"{parts['exam_description']}\n{parts['style_token']}\n"
            f"Findings: {findings}\nIndication: {parts['indications']}"
        )
    parts = parse_decoder_only_prompt(example.input_text)
    rebuilt = (
        f"{parts['instruction']}\n"
        f"Input: {findings}\n\n{parts['indications']}\n{RESPONSE_PREFIX}"
    )
    if parts["response"]:
        rebuilt += f" {parts['response']}"
    return rebuilt


def truncate_to_budget(example: FormattedExample, token_budget: int,
                       tokenizer) -> FormattedExample:
    """Fit the input within ``token_budget`` tokens.

    Only trailing findings text is dropped; the description line, style
    token, and section headers always survive. Truncated findings are
    whitespace-normalized (words rejoined with single spaces).
    """
    if token_budget <= 0:
        raise TokenBudgetError(f"token_budget must be positive, got {token_budget}")

    def count(text: str) -> int:
        return len(tokenizer.encode(text))

    if count(example.input_text) <= token_budget:
        return example

    if example.arch == ENCODER_DECODER:
        findings = parse_encoder_decoder_input(example.input_text)["findings"]
    else:
        findings = parse_decoder_only_prompt(example.input_text)["findings"]
    words = findings.split()

    if count(_rebuild(example, "")) > token_budget:
        raise TokenBudgetError(
            f"budget {token_budget} cannot hold the non-findings skeleton")

    lo, hi = 0, len(words)  # max k with count(keep k words) <= budget
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if count(_rebuild(example, " ".join(words[:mid]))) <= token_budget:
            lo = mid
        else:
            hi = mid - 1
    return replace(example,
                   input_text=_rebuild(example, " ".join(words[:lo])),
                   truncated=True)
