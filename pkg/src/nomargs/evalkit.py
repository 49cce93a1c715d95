"""Gold data, metrics, baselines, dataset builders, and perturbations.

Relation-F1 pools predicted (head, label) pairs across all noun instances;
a pair is correct only when both parts match.  Exact-Match is the fraction
of instances whose whole pair set is right.  The per-relation table breaks
both numbers down by label and adds a row for the null verdict, computed
over identified-but-not-gold candidates.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace

from .errors import AlignmentError, NomargsError, SwapUnsupportedError
from .identify import find_noun_instances
from .lexicon import Lexicon, gather_bindings, match_patterns, role_to_relation
from .refbank import RefBank
from .treebank import Sentence, validate_sentence

NULL_LABEL = "∅"


@dataclass(frozen=True)
class GoldInstance:
    sent_id: str
    tokens: tuple[str, ...]
    noun: int
    verb_lemma: str
    gold: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.gold]
        heads = [head for _, head in self.gold]
        if len(set(labels)) != len(labels) or len(set(heads)) != len(heads):
            raise NomargsError(
                f"gold instance {self.sent_id}:{self.noun} repeats a label or head"
            )


@dataclass(frozen=True)
class PredInstance:
    sent_id: str
    noun: int
    pairs: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class CandidateSet:
    """The candidate argument heads identified for one noun instance."""

    sent_id: str
    noun: int
    heads: tuple[int, ...]


@dataclass
class RelationRow:
    support: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class EvalReport:
    precision: float
    recall: float
    relation_f1: float
    exact_match: float
    instances: int
    per_relation: dict[str, RelationRow] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "relation_f1": self.relation_f1,
            "exact_match": self.exact_match,
            "instances": self.instances,
            "per_relation": {
                label: {
                    "support": row.support,
                    "f1": row.f1,
                    "precision": row.precision,
                    "recall": row.recall,
                    "tp": row.tp,
                    "fp": row.fp,
                    "fn": row.fn,
                }
                for label, row in self.per_relation.items()
            },
        }

    def to_text_table(self) -> str:
        lines = [
            f"instances    {self.instances}",
            f"precision    {self.precision:.4f}",
            f"recall       {self.recall:.4f}",
            f"relation-f1  {self.relation_f1:.4f}",
            f"exact-match  {self.exact_match:.4f}",
        ]
        if self.per_relation:
            width = max(len(label) for label in self.per_relation)
            width = max(width, len("relation"))
            lines.append("")
            lines.append(f"{'relation':<{width}}  support      f1")
            for label, row in self.per_relation.items():
                lines.append(f"{label:<{width}}  {row.support:>7}  {row.f1:>6.4f}")
        return "\n".join(lines)


def _align(
    gold: list[GoldInstance], pred: list[PredInstance]
) -> dict[tuple[str, int], set[tuple[str, int]]]:
    keys = {(g.sent_id, g.noun) for g in gold}
    aligned: dict[tuple[str, int], set[tuple[str, int]]] = {}
    for p in pred:
        key = (p.sent_id, p.noun)
        if key not in keys:
            raise AlignmentError(f"prediction for unknown instance {key}")
        if key in aligned:
            raise AlignmentError(f"duplicate prediction for instance {key}")
        aligned[key] = set(p.pairs)
    return aligned


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def score(gold: list[GoldInstance], pred: list[PredInstance]) -> EvalReport:
    """Micro precision/recall/F1 over pooled pairs, plus Exact-Match.

    Every prediction must match a gold instance by (sent_id, noun); gold
    instances without a prediction count as predicted-empty.
    """
    aligned = _align(gold, pred)
    tp = p_total = g_total = exact = 0
    for g in gold:
        g_pairs = set(g.gold)
        p_pairs = aligned.get((g.sent_id, g.noun), set())
        tp += len(g_pairs & p_pairs)
        p_total += len(p_pairs)
        g_total += len(g_pairs)
        exact += int(g_pairs == p_pairs)
    if p_total == 0 and g_total == 0:
        precision = recall = 1.0
    else:
        precision = tp / p_total if p_total else 0.0
        recall = tp / g_total if g_total else 0.0
    return EvalReport(
        precision=precision,
        recall=recall,
        relation_f1=_f1(precision, recall),
        exact_match=exact / len(gold) if gold else 0.0,
        instances=len(gold),
    )


def per_relation_report(
    gold: list[GoldInstance],
    pred: list[PredInstance],
    identified: list[CandidateSet] | None = None,
) -> EvalReport:
    """The pooled report extended with one row per relation label.

    When ``identified`` supplies the candidate heads used at prediction
    time, a null-verdict row is added: its gold set is the candidates absent
    from gold, its predicted set the candidates absent from the prediction.
    """
    report = score(gold, pred)
    aligned = _align(gold, pred)
    rows: dict[str, RelationRow] = {"nsubj": RelationRow(), "dobj": RelationRow()}
    for g in gold:
        g_pairs = set(g.gold)
        p_pairs = aligned.get((g.sent_id, g.noun), set())
        for label in sorted({l for l, _ in g_pairs | p_pairs}, key=_label_order):
            row = rows.setdefault(label, RelationRow())
            g_r = {pair for pair in g_pairs if pair[0] == label}
            p_r = {pair for pair in p_pairs if pair[0] == label}
            row.support += len(g_r)
            row.tp += len(g_r & p_r)
            row.fp += len(p_r - g_r)
            row.fn += len(g_r - p_r)
    if identified is not None:
        null_row = RelationRow()
        by_key = {(g.sent_id, g.noun): g for g in gold}
        for cand in identified:
            g = by_key.get((cand.sent_id, cand.noun))
            if g is None:
                continue
            gold_heads = {head for _, head in g.gold}
            pred_heads = {head for _, head in aligned.get((cand.sent_id, cand.noun), set())}
            gold_null = set(cand.heads) - gold_heads
            pred_null = set(cand.heads) - pred_heads
            null_row.support += len(gold_null)
            null_row.tp += len(gold_null & pred_null)
            null_row.fp += len(pred_null - gold_null)
            null_row.fn += len(gold_null - pred_null)
        rows[NULL_LABEL] = null_row
    ordered = dict(
        sorted(rows.items(), key=lambda item: _label_order(item[0]))
    )
    report.per_relation = ordered
    return report


def _label_order(label: str) -> tuple[int, str]:
    if label == "nsubj":
        return (0, "")
    if label == "dobj":
        return (1, "")
    if label == NULL_LABEL:
        return (3, "")
    return (2, label)


def baseline_all(label: str, instances: list[CandidateSet]) -> list[PredInstance]:
    """Give every instance's first candidate the fixed label (others null)."""
    if label not in ("nsubj", "dobj"):
        raise ValueError(f"baseline label must be nsubj or dobj, got {label!r}")
    out = []
    for inst in instances:
        pairs = ((label, min(inst.heads)),) if inst.heads else ()
        out.append(PredInstance(sent_id=inst.sent_id, noun=inst.noun, pairs=pairs))
    return out


def build_nomlex_evalset(
    corpus: list[Sentence], lexicon: Lexicon, per_verb_cap: int = 25
) -> list[GoldInstance]:
    """Harvest unambiguous two-argument noun instances via lexicon patterns.

    An instance is discarded when its fulfilled patterns disagree (a head
    with two roles, or a relation claimed by two heads), or when it does not
    yield exactly two labeled arguments.  At most ``per_verb_cap`` instances
    per verb are kept, in corpus order.
    """
    kept: list[GoldInstance] = []
    per_verb: dict[str, int] = {}
    for sentence in corpus:
        for instance in find_noun_instances(sentence, lexicon):
            entry = lexicon[sentence.token(instance.noun).lemma.lower()]
            matches = match_patterns(entry, sentence, instance.noun)
            if not matches:
                continue
            gathered = gather_bindings(matches)
            if any(len(roles) != 1 for roles, _ in gathered.values()):
                continue  # conflicting role assignment
            pairs: dict[str, int] = {}
            conflicted = False
            for head in sorted(gathered):
                roles, rel = gathered[head]
                relation = role_to_relation(next(iter(roles)), rel)
                if relation is None:
                    continue  # undetermined argument
                if relation in pairs and pairs[relation] != head:
                    conflicted = True
                    break
                pairs[relation] = head
            if conflicted or len(pairs) != 2:
                continue
            if per_verb.get(entry.verb_lemma, 0) >= per_verb_cap:
                continue
            per_verb[entry.verb_lemma] = per_verb.get(entry.verb_lemma, 0) + 1
            kept.append(
                GoldInstance(
                    sent_id=sentence.sent_id,
                    tokens=tuple(t.form for t in sentence.tokens),
                    noun=instance.noun,
                    verb_lemma=entry.verb_lemma,
                    gold=tuple(sorted(((rel, head) for rel, head in pairs.items()),
                                      key=lambda p: p[1])),
                )
            )
    return kept


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def normalized_edit_distance(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    return levenshtein(a, b) / longest if longest else 0.0


@dataclass
class ConversionResult:
    instances: list[GoldInstance]
    dropped: list[tuple[int, str]]  # (row index, reason)


def _find_span(sentence: Sentence, phrase: str) -> tuple[int, int] | None:
    """First token window whose forms equal the phrase words, case-insensitive."""
    words = [w.lower() for w in phrase.split()]
    if not words:
        return None
    forms = [t.form.lower() for t in sentence.tokens]
    for start in range(len(forms) - len(words) + 1):
        if forms[start : start + len(words)] == words:
            return (start + 1, start + len(words))
    return None


def _span_root(sentence: Sentence, span: tuple[int, int]) -> int:
    """The token inside the span whose head lies outside it (shallowest wins)."""
    inside = set(range(span[0], span[1] + 1))
    candidates = [i for i in inside if sentence.token(i).head not in inside]

    def depth(index: int) -> int:
        steps, node = 0, index
        while node != 0:
            node = sentence.token(node).head
            steps += 1
        return steps

    if not candidates:
        return span[0]
    return min(candidates, key=lambda i: (depth(i), i))


_VERBAL_SLOT_PREFERENCE = {"arg1": 0, "arg0": 1, "pp": 2}


def convert_paraphrase_dataset(
    records: list[dict], corpus: dict[str, Sentence]
) -> ConversionResult:
    """Turn paraphrasing annotation rows into gold instances.

    Each row names the nominal components (``modifier``, ``pobj``) and the
    verbal ones (``arg0``, ``verb``, ``arg1``, ``pp``).  Nominal components
    are matched to verbal slots by smallest length-normalized edit distance
    (ties prefer arg1), then mapped to nsubj/dobj/nmod:X, with X the leading
    preposition of the verbal pp.  Head indices come from the sentence
    parse: the subtree root of the first matching token window.
    """
    instances: list[GoldInstance] = []
    dropped: list[tuple[int, str]] = []
    seen_phrases: set[str] = set()
    for index, row in enumerate(records):
        reason = _convert_row(row, corpus, seen_phrases, instances)
        if reason is not None:
            dropped.append((index, reason))
    return ConversionResult(instances=instances, dropped=dropped)


def _convert_row(
    row: dict,
    corpus: dict[str, Sentence],
    seen_phrases: set[str],
    instances: list[GoldInstance],
) -> str | None:
    sent_id = row.get("sent_id", "")
    sentence = corpus.get(sent_id)
    if sentence is None:
        return f"unknown sent_id {sent_id!r}"
    phrase_key = (row.get("noun_phrase") or "").strip().lower()
    if phrase_key and phrase_key in seen_phrases:
        return "duplicate nominal phrase"
    noun_form = (row.get("noun") or "").strip()
    noun_index = next(
        (t.id for t in sentence.tokens if t.form.lower() == noun_form.lower()), None
    )
    if not noun_form or noun_index is None:
        return f"nominalization {noun_form!r} not found in sentence"

    nominal = [
        (slot, (row.get(slot) or "").strip())
        for slot in ("modifier", "pobj")
        if (row.get(slot) or "").strip()
    ]
    verbal = {
        slot: (row.get(slot) or "").strip()
        for slot in ("arg0", "arg1", "pp")
        if (row.get(slot) or "").strip()
    }
    if not nominal or not verbal:
        return "row lacks nominal or verbal components"

    assignments: dict[str, str] = {}
    for slot, text in nominal:
        best = min(
            verbal,
            key=lambda v: (
                normalized_edit_distance(text.lower(), verbal[v].lower()),
                _VERBAL_SLOT_PREFERENCE[v],
            ),
        )
        if best in assignments.values():
            return f"two nominal components match verbal {best!r}"
        assignments[slot] = best

    pairs: list[tuple[str, int]] = []
    for slot, text in nominal:
        verbal_slot = assignments[slot]
        if verbal_slot == "arg0":
            label = "nsubj"
        elif verbal_slot == "arg1":
            label = "dobj"
        else:
            preposition = verbal[verbal_slot].split()[0].lower()
            if not preposition.isalpha():
                return f"pp component {verbal[verbal_slot]!r} has no usable preposition"
            label = f"nmod:{preposition}"
        span = _find_span(sentence, text)
        if span is None:
            return f"component {text!r} not locatable in sentence"
        pairs.append((label, _span_root(sentence, span)))

    labels = [label for label, _ in pairs]
    heads = [head for _, head in pairs]
    if len(set(labels)) != len(labels) or len(set(heads)) != len(heads):
        return "components resolve to a repeated label or head"
    if phrase_key:
        seen_phrases.add(phrase_key)
    instances.append(
        GoldInstance(
            sent_id=sent_id,
            tokens=tuple(t.form for t in sentence.tokens),
            noun=noun_index,
            verb_lemma=(row.get("verb") or "").strip().lower(),
            gold=tuple(sorted(pairs, key=lambda p: p[1])),
        )
    )
    return None


@dataclass(frozen=True)
class VerbPartition:
    tune_only: frozenset[str]
    test_only: frozenset[str]
    shared: frozenset[str]


def tune_test_split(
    instances: list[GoldInstance],
    ratio: float = 0.2,
    seed: int = 0,
    verb_partition: VerbPartition | None = None,
) -> tuple[list[GoldInstance], list[GoldInstance]]:
    """Deterministic tune/test split (tune receives ``ratio`` of the data).

    With a verb partition, tune-only and test-only verbs route wholesale and
    the remaining verbs are split per verb at the same ratio.  Both outputs
    preserve the input order.
    """
    rng = random.Random(seed)
    tune_idx: set[int] = set()
    if verb_partition is None:
        indices = list(range(len(instances)))
        rng.shuffle(indices)
        tune_idx = set(indices[: round(len(indices) * ratio)])
    else:
        groups: dict[str, list[int]] = {}
        for i, inst in enumerate(instances):
            if inst.verb_lemma in verb_partition.tune_only:
                tune_idx.add(i)
            elif inst.verb_lemma in verb_partition.test_only:
                continue
            else:
                groups.setdefault(inst.verb_lemma, []).append(i)
        for verb in sorted(groups):
            indices = groups[verb][:]
            rng.shuffle(indices)
            tune_idx.update(indices[: round(len(indices) * ratio)])
    tune = [inst for i, inst in enumerate(instances) if i in tune_idx]
    test = [inst for i, inst in enumerate(instances) if i not in tune_idx]
    return tune, test


def swap_arguments(
    instance: GoldInstance, sentence: Sentence
) -> tuple[GoldInstance, Sentence]:
    """Exchange the sentence positions of the two gold argument head words.

    Only the two head tokens trade places ("Rome 's destruction of the
    city" becomes "city 's destruction of the Rome"); gold pairs follow
    their words to the new indices and dependency arcs are re-indexed
    through the transposition, so swapping twice restores the original.
    The perturbed sentence exists to be re-embedded, not re-parsed.
    """
    if len(instance.gold) != 2:
        raise SwapUnsupportedError(
            f"need exactly two gold arguments, got {len(instance.gold)}"
        )
    (label_a, head_a), (label_b, head_b) = sorted(instance.gold, key=lambda p: p[1])
    sentence.token(head_a)
    sentence.token(head_b)
    position = {i: i for i in range(len(sentence.tokens) + 1)}
    position[head_a], position[head_b] = head_b, head_a
    new_tokens: list = [None] * len(sentence.tokens)
    for tok in sentence.tokens:
        new_tokens[position[tok.id] - 1] = replace(
            tok,
            id=position[tok.id],
            head=position[tok.head],
            deps=tuple(sorted((position[h], rel) for h, rel in tok.deps)),
        )
    swapped_sentence = Sentence(
        sent_id=sentence.sent_id,
        tokens=tuple(new_tokens),
        extras=sentence.extras,
    )
    validate_sentence(swapped_sentence)
    swapped_instance = GoldInstance(
        sent_id=instance.sent_id,
        tokens=tuple(t.form for t in swapped_sentence.tokens),
        noun=position[instance.noun],
        verb_lemma=instance.verb_lemma,
        gold=tuple(
            sorted(
                ((label_a, position[head_a]), (label_b, position[head_b])),
                key=lambda p: p[1],
            )
        ),
    )
    return swapped_instance, swapped_sentence


def export_argument_vectors(
    bank: RefBank, enriched: list[tuple[str, str, str, int, list[float]]], path
) -> int:
    """Dump reference and enriched argument vectors as JSONL for projection tools.

    ``enriched`` rows are (verb, label, sent_id, token index, vector).
    Returns the number of rows written (bank size + enriched count).
    """
    rows = 0
    with open(path, "w", encoding="utf-8") as handle:
        for verb in bank.verbs():
            for arg in bank.arguments(verb):
                handle.write(
                    json.dumps(
                        {
                            "verb": arg.verb_lemma,
                            "label": arg.label,
                            "source": [arg.source[0], arg.source[1]],
                            "vector": [float(x) for x in arg.vector],
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
                rows += 1
        for verb, label, sent_id, token_index, vector in enriched:
            handle.write(
                json.dumps(
                    {
                        "verb": verb,
                        "label": label,
                        "source": [sent_id, token_index],
                        "vector": [float(x) for x in vector],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
            rows += 1
    return rows


def write_gold_jsonl(instances: list[GoldInstance], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for inst in instances:
            handle.write(
                json.dumps(
                    {
                        "sent_id": inst.sent_id,
                        "noun": inst.noun,
                        "verb": inst.verb_lemma,
                        "tokens": list(inst.tokens),
                        "pairs": [
                            {"label": label, "head": head} for label, head in inst.gold
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_gold_jsonl(path) -> list[GoldInstance]:
    instances = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            instances.append(
                GoldInstance(
                    sent_id=row["sent_id"],
                    tokens=tuple(row.get("tokens", ())),
                    noun=int(row["noun"]),
                    verb_lemma=row.get("verb", ""),
                    gold=tuple(
                        sorted(
                            ((p["label"], int(p["head"])) for p in row["pairs"]),
                            key=lambda p: p[1],
                        )
                    ),
                )
            )
    return instances


def read_predictions(path) -> list[PredInstance]:
    predictions = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            predictions.append(
                PredInstance(
                    sent_id=row["sent_id"],
                    noun=int(row["noun"]),
                    pairs=tuple(
                        sorted(
                            ((p["label"], int(p["head"])) for p in row["pairs"]),
                            key=lambda p: p[1],
                        )
                    ),
                )
            )
    return predictions


def read_candidate_sets(path) -> list[CandidateSet]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            out.append(
                CandidateSet(
                    sent_id=row["sent_id"],
                    noun=int(row["noun"]),
                    heads=tuple(int(c["head"]) for c in row.get("candidates", ())),
                )
            )
    return out
