import pytest

from dishrec.errors import InputError, MalformedArcs, MalformedRecord
from dishrec.fragmenter import (
    Mention,
    find_mentions,
    load_arcs,
    load_item_lexicon,
    scope_fragments,
    scope_fragments_with_arcs,
)


class TestFindMentions:
    def test_longest_match_wins(self, food_items):
        mentions = find_mentions(["garlic", "bread", "good"], food_items)
        assert mentions == [Mention(7, 0, 2)]

    def test_disjoint_matches(self, food_items):
        mentions = find_mentions(["pasta", "and", "pizza"], food_items)
        assert [(m.item_id, m.start) for m in mentions] == [(1, 0), (2, 2)]

    def test_no_match(self, food_items):
        assert find_mentions(["great", "service"], food_items) == []

    def test_consumed_tokens_not_rematched(self, food_items):
        # "bread" inside "garlic bread" must not also match item 3
        mentions = find_mentions(["garlic", "bread", "bread"], food_items)
        assert [(m.item_id, m.start, m.end) for m in mentions] == [(7, 0, 2), (3, 2, 3)]


class TestScopeFragments:
    def test_one_mention_per_clause(self, food_items):
        tokens = ["pasta", "great", "but", "pizza", "soggy"]
        frags = scope_fragments(tokens, find_mentions(tokens, food_items), review_id="r")
        by_item = {f.item_id: list(f.tokens) for f in frags}
        assert by_item == {1: ["pasta", "great"], 2: ["pizza", "soggy"]}

    def test_trailing_clauses_attach_to_preceding_mention(self, food_items):
        tokens = ["pasta", "cooked", "but", "very", "salty", "while", "cheap"]
        frags = scope_fragments(tokens, find_mentions(tokens, food_items), review_id="r")
        assert len(frags) == 1
        assert list(frags[0].tokens) == ["pasta", "cooked", "very", "salty", "cheap"]

    def test_shared_clause_duplicated_to_both(self, food_items):
        # hand enumeration: single clause, two mentions -> every clause token
        # is assigned to both items
        tokens = ["pasta", "pizza", "cold"]
        frags = scope_fragments(tokens, find_mentions(tokens, food_items), review_id="r")
        assert len(frags) == 2
        for f in frags:
            assert list(f.tokens) == ["pasta", "pizza", "cold"]
            assert "cold" in f.tokens

    def test_leading_clause_attaches_to_following_mention(self, food_items):
        tokens = ["really", "liked", "but", "pizza", "cold"]
        frags = scope_fragments(tokens, find_mentions(tokens, food_items), review_id="r")
        assert len(frags) == 1
        assert list(frags[0].tokens) == ["really", "liked", "pizza", "cold"]

    def test_attachment_stops_at_sentence_boundary(self, food_items):
        tokens = ["pasta", "fine", "<s>", "service", "slow"]
        frags = scope_fragments(tokens, find_mentions(tokens, food_items), review_id="r")
        assert len(frags) == 1
        assert list(frags[0].tokens) == ["pasta", "fine"]  # second sentence dropped

    def test_no_mentions_yields_nothing(self, food_items):
        assert scope_fragments(["nice", "place"], [], review_id="r") == []

    def test_duplication_bound(self, food_items):
        # each token appears across fragments at most max(1, mentions in its clause) times
        tokens = ["pasta", "pizza", "bread", "tasty", "but", "pricey"]
        mentions = find_mentions(tokens, food_items)
        frags = scope_fragments(tokens, mentions, review_id="r")
        from collections import Counter
        counts = Counter()
        for f in frags:
            counts.update(f.tokens)
        assert counts["tasty"] == 3  # three mentions share the clause
        assert counts["pricey"] == 1  # attached clause goes to one mention only

    def test_deterministic(self, food_items):
        tokens = ["pasta", "nice", "but", "pizza", "bad", "<s>", "bread", "ok"]
        mentions = find_mentions(tokens, food_items)
        a = scope_fragments(tokens, mentions, review_id="r")
        b = scope_fragments(tokens, mentions, review_id="r")
        assert a == b

    def test_single_item_review_gets_all_kept_tokens(self, food_items):
        tokens = ["pasta", "good", "but", "small", "while", "pricey"]
        mentions = find_mentions(tokens, food_items)
        frags = scope_fragments(tokens, mentions, review_id="r")
        assert len(frags) == 1
        assert sorted(frags[0].tokens) == sorted(t for t in tokens if t not in ("but", "while"))


class TestScopeWithArcs:
    def test_star_graph_single_mention(self, food_items):
        tokens = ["pasta", "was", "really", "good"]
        mentions = [Mention(1, 0, 1)]
        arcs = [(0, 1, "dep"), (0, 2, "dep"), (0, 3, "dep")]
        frags = scope_fragments_with_arcs(tokens, mentions, arcs, review_id="r")
        assert len(frags) == 1
        assert list(frags[0].tokens) == tokens

    def test_disconnected_components_partition(self, food_items):
        tokens = ["pasta", "good", "pizza", "bad"]
        mentions = [Mention(1, 0, 1), Mention(2, 2, 3)]
        arcs = [(0, 1, "dep"), (2, 3, "dep")]
        frags = scope_fragments_with_arcs(tokens, mentions, arcs, review_id="r")
        by_item = {f.item_id: list(f.tokens) for f in frags}
        assert by_item == {1: ["pasta", "good"], 2: ["pizza", "bad"]}

    def test_equidistant_tie_goes_to_earlier_mention(self, food_items):
        tokens = ["pasta", "and", "pizza"]
        mentions = [Mention(1, 0, 1), Mention(2, 2, 3)]
        arcs = [(0, 1, "cc"), (1, 2, "conj")]  # path a-b-c
        frags = scope_fragments_with_arcs(tokens, mentions, arcs, review_id="r")
        by_item = {f.item_id: list(f.tokens) for f in frags}
        assert by_item[1] == ["pasta", "and"]
        assert by_item[2] == ["pizza"]

    def test_mentionless_component_dropped(self, food_items):
        tokens = ["pasta", "good", "service", "slow"]
        mentions = [Mention(1, 0, 1)]
        arcs = [(0, 1, "dep"), (2, 3, "dep")]
        frags = scope_fragments_with_arcs(tokens, mentions, arcs, review_id="r")
        assert len(frags) == 1
        assert list(frags[0].tokens) == ["pasta", "good"]

    def test_out_of_bounds_arc(self):
        with pytest.raises(MalformedArcs):
            scope_fragments_with_arcs(["a", "b"], [Mention(1, 0, 1)], [(0, 5, "dep")])

    def test_cycle_detected(self):
        arcs = [(0, 1, "d"), (1, 2, "d"), (2, 0, "d")]
        with pytest.raises(MalformedArcs):
            scope_fragments_with_arcs(["a", "b", "c"], [Mention(1, 0, 1)], arcs)


class TestItemLexiconFile:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "items.tsv"
        path.write_text(
            "# id\tname\taliases\n1\tpasta\tpasta|penne\n7\tgarlic bread\tgarlic bread\n",
            encoding="utf-8",
        )
        items = load_item_lexicon(path)
        assert items[0].aliases == (("pasta",), ("penne",))
        assert items[1].aliases == (("garlic", "bread"),)

    def test_overlapping_aliases_rejected(self, tmp_path):
        path = tmp_path / "items.tsv"
        path.write_text("1\tpasta\tpasta\n2\tpenne\tpasta\n", encoding="utf-8")
        with pytest.raises(InputError):
            load_item_lexicon(path)

    def test_canonical_name_added_as_alias(self, tmp_path):
        path = tmp_path / "items.tsv"
        path.write_text("4\tmomos\tdumplings\n", encoding="utf-8")
        items = load_item_lexicon(path)
        assert ("momos",) in items[0].aliases


class TestArcsFile:
    def test_load_keyed_by_review(self, tmp_path):
        path = tmp_path / "arcs.tsv"
        path.write_text(
            "# review\thead\tdep\trel\nv1\t0\t1\tdet\nv1\t0\t2\tamod\nv2\t1\t0\tnsubj\n",
            encoding="utf-8",
        )
        arcs = load_arcs(path)
        assert arcs["v1"] == [(0, 1, "det"), (0, 2, "amod")]
        assert arcs["v2"] == [(1, 0, "nsubj")]

    def test_bad_line_reports_number(self, tmp_path):
        path = tmp_path / "arcs.tsv"
        path.write_text("v1\t0\tx\tdet\n", encoding="utf-8")
        with pytest.raises(MalformedRecord):
            load_arcs(path)

    def test_loaded_arcs_feed_scoping(self, tmp_path, food_items):
        path = tmp_path / "arcs.tsv"
        path.write_text("v1\t0\t1\tcop\nv1\t0\t2\tamod\n", encoding="utf-8")
        arcs = load_arcs(path)["v1"]
        frags = scope_fragments_with_arcs(
            ["pasta", "was", "great"], [Mention(1, 0, 1)], arcs, review_id="v1"
        )
        assert list(frags[0].tokens) == ["pasta", "was", "great"]
