"""Questionnaire board: a line-oriented questionnaire DSL, response validation,
and Likert scoring with reverse-coded items.

DSL, one declaration per line, ``#`` starts a comment:

    questionnaire "oxford_happiness" version 1
    scale agree likert 1..6 labels "strongly disagree" ... "strongly agree"
    item q1 "I feel great" scale agree reverse optional
    item q2 "Anything to add?" text optional
    score mean

The first declared scale is the default for items that name none.
Parsing then serializing then parsing yields an equal definition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import SierraError

SCORE_MODES = ("mean", "sum")


class ParseError(SierraError):
    """DSL rejection with a 1-based source line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class OutOfRange(SierraError):
    pass


class NoScorableItems(SierraError):
    pass


class ResponseError(SierraError):
    """One or more answers rejected; ``issues`` lists (item_id, reason)."""

    def __init__(self, issues: list[tuple[str, str]]):
        super().__init__("; ".join(f"{i}: {r}" for i, r in issues))
        self.issues = issues


@dataclass(frozen=True)
class ScaleDef:
    name: str
    lo: int
    hi: int
    labels: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ItemDef:
    id: str
    prompt: str
    kind: str  # "likert" | "text"
    scale: str | None = None  # resolved scale name for likert items
    reverse: bool = False
    required: bool = True


@dataclass(frozen=True)
class QuestionnaireDef:
    id: str
    version: int
    scales: dict[str, ScaleDef]
    items: tuple[ItemDef, ...]
    score_mode: str = "mean"

    def scale_of(self, item: ItemDef) -> ScaleDef:
        return self.scales[item.scale]


@dataclass(frozen=True)
class ResponseSet:
    questionnaire_id: str
    version: int
    subject: str
    answered_at: int
    answers: dict[str, int | str] = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreReport:
    total: float
    per_item: dict[str, int]
    n_scored: int


# ---------------------------------------------------------------------------
# tokenizer / parser

def _tokenize(line: str, lineno: int) -> list[str | tuple[str]]:
    """Split a line into bare words and (string,) tuples; drop comments."""
    tokens: list[str | tuple[str]] = []
    i, n = 0, len(line)
    while i < n:
        c = line[i]
        if c in " \t":
            i += 1
        elif c == "#":
            break
        elif c == '"':
            i += 1
            buf = []
            while i < n and line[i] != '"':
                if line[i] == "\\" and i + 1 < n:
                    buf.append(line[i + 1])
                    i += 2
                else:
                    buf.append(line[i])
                    i += 1
            if i >= n:
                raise ParseError(lineno, "unterminated string")
            i += 1
            tokens.append((("".join(buf)),))
        else:
            j = i
            while j < n and line[j] not in ' \t"#':
                j += 1
            tokens.append(line[i:j])
            i = j
    return tokens


def _is_string(tok) -> bool:
    return isinstance(tok, tuple)


def _want_int(tok, lineno: int, what: str) -> int:
    if _is_string(tok) or not isinstance(tok, str):
        raise ParseError(lineno, f"expected {what}")
    try:
        return int(tok, 10)
    except ValueError:
        raise ParseError(lineno, f"expected {what}, got {tok!r}") from None


def _parse_range(tokens: list, pos: int, lineno: int) -> tuple[int, int, int]:
    """Accept ``1..6`` as one token or ``1 .. 6`` as three."""
    if pos >= len(tokens):
        raise ParseError(lineno, "expected likert range lo..hi")
    tok = tokens[pos]
    if not _is_string(tok) and ".." in tok:
        lo_s, _, hi_s = tok.partition("..")
        return _want_int(lo_s, lineno, "range low"), _want_int(hi_s, lineno, "range high"), pos + 1
    lo = _want_int(tok, lineno, "range low")
    if pos + 1 >= len(tokens) or tokens[pos + 1] != "..":
        raise ParseError(lineno, "expected '..' in likert range")
    hi = _want_int(tokens[pos + 2] if pos + 2 < len(tokens) else None, lineno, "range high")
    return lo, hi, pos + 3


def parse_questionnaire(text: str) -> QuestionnaireDef:
    """Parse DSL source into a QuestionnaireDef; raise ParseError on rejection."""
    header: tuple[str, int] | None = None
    header_line = 0
    scales: dict[str, ScaleDef] = {}
    items: list[ItemDef] = []
    item_lines: dict[str, int] = {}
    pending_scale_refs: list[tuple[int, str | None, int]] = []  # (item idx, ref, line)
    score_mode: str | None = None
    score_line = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw, lineno)
        if not tokens:
            continue
        kw = tokens[0]
        if _is_string(kw):
            raise ParseError(lineno, "declaration must start with a keyword")

        if header is None:
            if kw != "questionnaire":
                raise ParseError(lineno, "missing header: expected 'questionnaire \"id\" version N'")
            if len(tokens) != 4 or not _is_string(tokens[1]) or tokens[2] != "version":
                raise ParseError(lineno, "malformed header: expected 'questionnaire \"id\" version N'")
            version = _want_int(tokens[3], lineno, "version number")
            if version < 1:
                raise ParseError(lineno, "version must be >= 1")
            qid = tokens[1][0]
            if not qid:
                raise ParseError(lineno, "questionnaire id must be non-empty")
            header = (qid, version)
            header_line = lineno
            continue

        if kw == "scale":
            if len(tokens) < 4 or _is_string(tokens[1]) or tokens[2] != "likert":
                raise ParseError(lineno, "malformed scale: expected 'scale NAME likert LO..HI'")
            name = tokens[1]
            if name in scales:
                raise ParseError(lineno, f"duplicate scale name: {name}")
            lo, hi, pos = _parse_range(tokens, 3, lineno)
            if lo >= hi:
                raise ParseError(lineno, f"scale range must have lo < hi, got {lo}..{hi}")
            labels: tuple[str, ...] | None = None
            if pos < len(tokens):
                if tokens[pos] != "labels":
                    raise ParseError(lineno, f"unexpected token after scale range: {tokens[pos]!r}")
                label_toks = tokens[pos + 1:]
                if not label_toks or not all(_is_string(t) for t in label_toks):
                    raise ParseError(lineno, "labels must be quoted strings")
                labels = tuple(t[0] for t in label_toks)
                if len(labels) != hi - lo + 1:
                    raise ParseError(
                        lineno,
                        f"labels count mismatch: expected {hi - lo + 1}, got {len(labels)}",
                    )
            scales[name] = ScaleDef(name, lo, hi, labels)

        elif kw == "item":
            if len(tokens) < 3 or _is_string(tokens[1]) or not _is_string(tokens[2]):
                raise ParseError(lineno, "malformed item: expected 'item ID \"prompt\" ...'")
            iid = tokens[1]
            prompt = tokens[2][0]
            if iid in item_lines:
                raise ParseError(lineno, f"duplicate item id: {iid}")
            if not prompt:
                raise ParseError(lineno, "item prompt must be non-empty")
            pos = 3
            kind = "likert"
            scale_ref: str | None = None
            if pos < len(tokens) and tokens[pos] == "text":
                kind = "text"
                pos += 1
            elif pos < len(tokens) and tokens[pos] == "scale":
                if pos + 1 >= len(tokens) or _is_string(tokens[pos + 1]):
                    raise ParseError(lineno, "expected scale name after 'scale'")
                scale_ref = tokens[pos + 1]
                pos += 2
            reverse = False
            if pos < len(tokens) and tokens[pos] == "reverse":
                if kind == "text":
                    raise ParseError(lineno, f"reverse not allowed on text item: {iid}")
                reverse = True
                pos += 1
            required = True
            if pos < len(tokens) and tokens[pos] == "optional":
                required = False
                pos += 1
            if pos < len(tokens):
                raise ParseError(lineno, f"unexpected token on item line: {tokens[pos]!r}")
            item_lines[iid] = lineno
            if kind == "likert":
                pending_scale_refs.append((len(items), scale_ref, lineno))
            items.append(ItemDef(iid, prompt, kind, scale_ref, reverse, required))

        elif kw == "score":
            if score_mode is not None:
                raise ParseError(lineno, "duplicate score declaration")
            if len(tokens) != 2 or tokens[1] not in SCORE_MODES:
                raise ParseError(lineno, "score mode must be 'mean' or 'sum'")
            score_mode = tokens[1]
            score_line = lineno

        else:
            raise ParseError(lineno, f"unknown keyword: {kw!r}")

    if header is None:
        raise ParseError(1, "missing header: expected 'questionnaire \"id\" version N'")
    if not items:
        raise ParseError(header_line, "questionnaire has no items")

    default_scale = next(iter(scales), None)
    for idx, ref, lineno in pending_scale_refs:
        if ref is None:
            if default_scale is None:
                raise ParseError(lineno, "undeclared scale: no scales declared")
            ref = default_scale
        elif ref not in scales:
            raise ParseError(lineno, f"undeclared scale: {ref}")
        it = items[idx]
        items[idx] = ItemDef(it.id, it.prompt, it.kind, ref, it.reverse, it.required)

    n_likert = sum(1 for it in items if it.kind == "likert")
    if score_mode is not None and n_likert == 0:
        raise ParseError(score_line, "score requires at least one likert item")

    return QuestionnaireDef(
        id=header[0],
        version=header[1],
        scales=scales,
        items=tuple(items),
        score_mode=score_mode or "mean",
    )


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_questionnaire(qdef: QuestionnaireDef) -> str:
    """Emit canonical DSL source; parse(serialize(qdef)) == qdef."""
    lines = [f"questionnaire {_quote(qdef.id)} version {qdef.version}"]
    for sc in qdef.scales.values():
        line = f"scale {sc.name} likert {sc.lo}..{sc.hi}"
        if sc.labels is not None:
            line += " labels " + " ".join(_quote(l) for l in sc.labels)
        lines.append(line)
    for it in qdef.items:
        line = f"item {it.id} {_quote(it.prompt)}"
        if it.kind == "text":
            line += " text"
        else:
            line += f" scale {it.scale}"
            if it.reverse:
                line += " reverse"
        if not it.required:
            line += " optional"
        lines.append(line)
    if any(it.kind == "likert" for it in qdef.items):
        lines.append(f"score {qdef.score_mode}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# responses and scoring

def reverse_value(scale: ScaleDef, v: int) -> int:
    """Mirror ``v`` within the scale: lo + hi - v."""
    if not scale.lo <= v <= scale.hi:
        raise OutOfRange(f"value {v} outside {scale.lo}..{scale.hi}")
    return scale.lo + scale.hi - v


def validate_response(
    qdef: QuestionnaireDef,
    subject: str,
    answers: dict[str, int | str],
    answered_at: int = 0,
) -> ResponseSet:
    """Check raw answers against the definition; raise ResponseError listing
    every offending item, or return the accepted ResponseSet."""
    issues: list[tuple[str, str]] = []
    known = {it.id: it for it in qdef.items}

    for iid in answers:
        if iid not in known:
            issues.append((iid, "unknown_item"))

    for it in qdef.items:
        if it.id not in answers:
            if it.required:
                issues.append((it.id, "missing_required"))
            continue
        v = answers[it.id]
        if it.kind == "likert":
            if isinstance(v, bool) or not isinstance(v, int):
                issues.append((it.id, "type_mismatch"))
            else:
                sc = qdef.scale_of(it)
                if not sc.lo <= v <= sc.hi:
                    issues.append((it.id, "out_of_range"))
        else:
            if not isinstance(v, str):
                issues.append((it.id, "type_mismatch"))

    if issues:
        raise ResponseError(issues)
    return ResponseSet(
        questionnaire_id=qdef.id,
        version=qdef.version,
        subject=subject,
        answered_at=answered_at,
        answers=dict(answers),
    )


def score_response(qdef: QuestionnaireDef, rs: ResponseSet) -> ScoreReport:
    """Apply reversals and aggregate likert answers per score_mode.

    Text items never score; unanswered optional likert items are excluded
    from the mean's denominator.
    """
    per_item: dict[str, int] = {}
    for it in qdef.items:
        if it.kind != "likert" or it.id not in rs.answers:
            continue
        v = rs.answers[it.id]
        sc = qdef.scale_of(it)
        per_item[it.id] = reverse_value(sc, v) if it.reverse else v
    if not per_item:
        raise NoScorableItems(f"no scorable answers for {qdef.id}")
    values = list(per_item.values())
    total = sum(values) / len(values) if qdef.score_mode == "mean" else float(sum(values))
    return ScoreReport(total=total, per_item=per_item, n_scored=len(per_item))


def emit_form_spec(qdef: QuestionnaireDef) -> dict:
    """Renderable form document. Deliberately omits scoring direction so
    respondents cannot see which items are mirrored."""
    entries = []
    for it in qdef.items:
        entry: dict = {"id": it.id, "prompt": it.prompt, "kind": it.kind, "required": it.required}
        if it.kind == "likert":
            sc = qdef.scale_of(it)
            entry["min"] = sc.lo
            entry["max"] = sc.hi
            entry["labels"] = list(sc.labels) if sc.labels is not None else None
        entries.append(entry)
    return {"questionnaire_id": qdef.id, "version": qdef.version, "items": entries}
