import itertools
import json

import pytest

from nomargs.errors import LexiconError
from nomargs.lexicon import (
    Constraint,
    DepPattern,
    LexiconEntry,
    baseline_label,
    lexicon_from_dict,
    lexicon_to_dict,
    load_lexicon,
    match_patterns,
    role_to_relation,
    save_lexicon,
)
from nomargs.treebank import relation_matches

from conftest import make_sentence

DESTRUCTION_ENTRY = LexiconEntry(
    noun_lemma="destruction",
    verb_lemma="destroy",
    patterns=(
        DepPattern(
            constraints=(
                Constraint(rel="nmod:poss", role="SUBJECT"),
                Constraint(rel="nmod:of", role="OBJECT"),
            )
        ),
    ),
)


class TestLoadLexicon:
    def test_destruction_entry_round_trips(self, tmp_path):
        data = {
            "nouns": [
                {
                    "noun": "destruction",
                    "verb": "destroy",
                    "patterns": [
                        {
                            "constraints": [
                                {"rel": "nmod:poss", "role": "SUBJECT", "required": True},
                                {"rel": "nmod:of", "role": "OBJECT", "required": True},
                            ]
                        }
                    ],
                }
            ]
        }
        path = tmp_path / "lex.json"
        path.write_text(json.dumps(data))
        lexicon = load_lexicon(path)
        assert lexicon["destruction"] == DESTRUCTION_ENTRY
        out = tmp_path / "roundtrip.json"
        save_lexicon(lexicon, out)
        assert lexicon_to_dict(load_lexicon(out)) == data

    def test_empty_object_gives_empty_lexicon(self):
        assert len(lexicon_from_dict({})) == 0
        assert len(lexicon_from_dict({"nouns": []})) == 0

    def test_missing_verb_is_schema_error(self):
        with pytest.raises(LexiconError, match="verb"):
            lexicon_from_dict({"nouns": [{"noun": "destruction"}]})

    def test_uppercase_lemma_rejected(self):
        with pytest.raises(LexiconError):
            lexicon_from_dict({"nouns": [{"noun": "Destruction", "verb": "destroy"}]})

    def test_bad_role_named_in_error(self):
        data = {
            "nouns": [
                {
                    "noun": "destruction",
                    "verb": "destroy",
                    "patterns": [
                        {"constraints": [{"rel": "nmod:of", "role": "AGENT"}]}
                    ],
                }
            ]
        }
        with pytest.raises(LexiconError, match="destruction"):
            lexicon_from_dict(data)

    def test_duplicate_noun_last_wins_with_warning(self):
        data = {
            "nouns": [
                {"noun": "waste", "verb": "waste"},
                {"noun": "waste", "verb": "wasted"},
            ]
        }
        lexicon = lexicon_from_dict(data)
        assert lexicon["waste"].verb_lemma == "wasted"
        assert any("waste" in w for w in lexicon.warnings)

    def test_pp_role_needs_preposition(self):
        data = {
            "nouns": [
                {
                    "noun": "waste",
                    "verb": "waste",
                    "patterns": [{"constraints": [{"rel": "compound", "role": "PP"}]}],
                }
            ]
        }
        with pytest.raises(LexiconError, match="PP"):
            lexicon_from_dict(data)

    def test_sample_lexicon_loads(self, sample_lexicon):
        assert len(sample_lexicon) >= 10
        assert "destruction" in sample_lexicon
        assert not sample_lexicon.warnings


class TestRoleMap:
    def test_fixed_mapping(self):
        assert role_to_relation("SUBJECT", "nmod:poss") == "nsubj"
        assert role_to_relation("OBJECT", "compound") == "dobj"
        assert role_to_relation("PP", "nmod:for") == "nmod:for"
        assert role_to_relation("UNKNOWN", "nmod:of") is None

    def test_pp_without_preposition_has_no_label(self):
        assert role_to_relation("PP", "nmod") is None
        assert role_to_relation("PP", "nmod:poss") is None


class TestMatchPatterns:
    def test_figure_one_bindings(self, nominal_sentence):
        matches = match_patterns(DESTRUCTION_ENTRY, nominal_sentence, 3)
        assert len(matches) == 1
        assert {(b.role, b.head) for b in matches[0].bindings} == {
            ("SUBJECT", 1),
            ("OBJECT", 6),
        }

    def test_no_children_no_matches(self):
        sentence = make_sentence([("destruction", "destruction", "NOUN", 0, "root")])
        assert match_patterns(DESTRUCTION_ENTRY, sentence, 1) == []

    def test_two_patterns_two_matches(self):
        # both patterns bind the single compound child, to different roles
        entry = LexiconEntry(
            noun_lemma="waste",
            verb_lemma="waste",
            patterns=(
                DepPattern((Constraint(rel="compound", role="SUBJECT"),)),
                DepPattern((Constraint(rel="compound", role="OBJECT"),)),
            ),
        )
        sentence = make_sentence(
            [
                ("time", "time", "NOUN", 2, "compound"),
                ("waste", "waste", "NOUN", 0, "root"),
            ]
        )
        matches = match_patterns(entry, sentence, 2)
        assert [
            {(b.role, b.head) for b in m.bindings} for m in matches
        ] == [{("SUBJECT", 1)}, {("OBJECT", 1)}]

    def test_optional_constraint_bound_when_present(self, nominal_sentence):
        entry = LexiconEntry(
            noun_lemma="destruction",
            verb_lemma="destroy",
            patterns=(
                DepPattern(
                    (
                        Constraint(rel="nmod:of", role="OBJECT"),
                        Constraint(rel="nmod:poss", role="SUBJECT", required=False),
                    )
                ),
            ),
        )
        matches = match_patterns(entry, nominal_sentence, 3)
        assert {(b.role, b.head) for b in matches[0].bindings} == {
            ("OBJECT", 6),
            ("SUBJECT", 1),
        }

    def test_optional_constraint_skipped_when_absent(self):
        entry = LexiconEntry(
            noun_lemma="treatment",
            verb_lemma="treat",
            patterns=(
                DepPattern(
                    (
                        Constraint(rel="nmod:of", role="OBJECT"),
                        Constraint(rel="nmod:by", role="SUBJECT", required=False),
                    )
                ),
            ),
        )
        sentence = make_sentence(
            [
                ("treatment", "treatment", "NOUN", 0, "root"),
                ("of", "of", "ADP", 3, "case"),
                ("illness", "illness", "NOUN", 1, "nmod:of"),
            ]
        )
        matches = match_patterns(entry, sentence, 1)
        assert {(b.role, b.head) for b in matches[0].bindings} == {("OBJECT", 3)}

    def test_required_constraints_bind_distinct_children(self):
        # one nmod:of child cannot satisfy two required constraints
        entry = LexiconEntry(
            noun_lemma="treatment",
            verb_lemma="treat",
            patterns=(
                DepPattern(
                    (
                        Constraint(rel="nmod:of", role="OBJECT"),
                        Constraint(rel="nmod:*", role="PP"),
                    )
                ),
            ),
        )
        sentence = make_sentence(
            [
                ("treatment", "treatment", "NOUN", 0, "root"),
                ("of", "of", "ADP", 3, "case"),
                ("illness", "illness", "NOUN", 1, "nmod:of"),
            ]
        )
        assert match_patterns(entry, sentence, 1) == []

    def test_deleting_a_pattern_never_adds_matches(self, nominal_sentence, sample_lexicon):
        entry = sample_lexicon["destruction"]
        full = match_patterns(entry, nominal_sentence, 3)
        for drop in range(len(entry.patterns)):
            reduced = LexiconEntry(
                noun_lemma=entry.noun_lemma,
                verb_lemma=entry.verb_lemma,
                patterns=entry.patterns[:drop] + entry.patterns[drop + 1 :],
            )
            reduced_matches = match_patterns(reduced, nominal_sentence, 3)
            assert len(reduced_matches) <= len(full)
            full_bindings = [m.bindings for m in full]
            for m in reduced_matches:
                assert m.bindings in full_bindings

    def test_fulfillment_matches_exhaustive_oracle(self):
        # oracle: a pattern is fulfilled iff some injective child assignment
        # satisfies every required constraint
        child_rels = ["nmod:poss", "compound", "compound", "nmod:of", "amod"]
        sentence = make_sentence(
            [("w%d" % i, "w%d" % i, "NOUN", 6, rel) for i, rel in enumerate(child_rels)]
            + [("noun", "noun", "NOUN", 0, "root")]
        )
        rels = ["nmod:poss", "compound", "nmod:*", "amod", "nmod:from"]
        cases = []
        for size in (1, 2, 3):
            for combo in itertools.combinations(rels, size):
                constraints = tuple(Constraint(rel=rel, role="UNKNOWN") for rel in combo)
                cases.append(DepPattern(constraints=constraints))
        children = [(t.id, t.deprel) for t in sentence.tokens if t.head == 6]
        for pattern in cases:
            required = [c for c in pattern.constraints if c.required]
            fulfilled = any(
                all(
                    relation_matches(rel, c.rel)
                    for c, (_, rel) in zip(required, assignment)
                )
                for assignment in itertools.permutations(children, len(required))
            )
            entry = LexiconEntry("noun", "verb", patterns=(pattern,))
            assert bool(match_patterns(entry, sentence, 6)) == fulfilled


class TestBaselineLabel:
    def test_single_pattern_maps_roles(self, nominal_sentence):
        assert baseline_label(DESTRUCTION_ENTRY, nominal_sentence, 3) == {
            ("nsubj", 1),
            ("dobj", 6),
        }

    def test_colliding_head_dropped(self):
        entry = LexiconEntry(
            noun_lemma="waste",
            verb_lemma="waste",
            patterns=(
                DepPattern((Constraint(rel="compound", role="SUBJECT"),)),
                DepPattern((Constraint(rel="compound", role="OBJECT"),)),
            ),
        )
        sentence = make_sentence(
            [
                ("time", "time", "NOUN", 2, "compound"),
                ("waste", "waste", "NOUN", 0, "root"),
            ]
        )
        assert baseline_label(entry, sentence, 2) == set()

    def test_no_fulfilled_pattern_empty(self):
        sentence = make_sentence([("destruction", "destruction", "NOUN", 0, "root")])
        assert baseline_label(DESTRUCTION_ENTRY, sentence, 1) == set()

    def test_relation_claimed_by_two_heads_dropped(self):
        # pattern A assigns SUBJECT to the possessor, pattern B to the compound
        entry = LexiconEntry(
            noun_lemma="research",
            verb_lemma="research",
            patterns=(
                DepPattern((Constraint(rel="nmod:poss", role="SUBJECT"),)),
                DepPattern((Constraint(rel="compound", role="SUBJECT"),)),
            ),
        )
        sentence = make_sentence(
            [
                ("IBM", "ibm", "NOUN", 3, "nmod:poss"),
                ("cancer", "cancer", "NOUN", 3, "compound"),
                ("research", "research", "NOUN", 0, "root"),
            ]
        )
        assert baseline_label(entry, sentence, 3) == set()

    def test_output_never_repeats_relation_or_head(self, sample_lexicon, nominal_sentence):
        for entry in (sample_lexicon[n] for n in sample_lexicon):
            pairs = baseline_label(entry, nominal_sentence, 3)
            relations = [rel for rel, _ in pairs]
            heads = [head for _, head in pairs]
            assert len(set(relations)) == len(relations)
            assert len(set(heads)) == len(heads)
