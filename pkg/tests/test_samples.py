import pytest

from mlmattack.errors import ConfigError, EmptyInput
from mlmattack.samples import TextSample, load_corpus, save_corpus


class TestTextSample:
    def test_single_text_form(self):
        s = TextSample(id="a", label="positive", text="fine day")
        assert not s.is_pair
        assert s.attackable_text() == "fine day"
        assert s.render(("grim", "day")) == "grim day"

    def test_pair_form_attacks_hypothesis_by_default(self):
        s = TextSample(id="a", label=0, premise="p q", hypothesis="h k")
        assert s.is_pair
        assert s.attackable_text() == "h k"
        assert s.render(("x", "k")) == ("p q", "x k")

    def test_pair_form_can_attack_premise(self):
        s = TextSample(
            id="a", label=0, premise="p q", hypothesis="h", attack_side="premise"
        )
        assert s.attackable_text() == "p q"
        assert s.render(("x", "q")) == ("x q", "h")

    def test_must_have_exactly_one_form(self):
        with pytest.raises(ConfigError):
            TextSample(id="a", label=0)
        with pytest.raises(ConfigError):
            TextSample(id="a", label=0, text="t", premise="p", hypothesis="h")
        with pytest.raises(ConfigError):
            TextSample(id="a", label=0, premise="p")  # half a pair

    def test_id_required(self):
        with pytest.raises(ConfigError):
            TextSample(id="", label=0, text="t")

    def test_unknown_attack_side(self):
        with pytest.raises(ConfigError):
            TextSample(id="a", label=0, premise="p", hypothesis="h", attack_side="both")

    def test_json_round_trip_single(self):
        s = TextSample(id="a", label="positive", text="fine day")
        assert TextSample.from_json(s.to_json()) == s
        assert set(s.to_json()) == {"id", "label", "text"}

    def test_json_round_trip_pair(self):
        s = TextSample(id="a", label=1, premise="p", hypothesis="h")
        assert TextSample.from_json(s.to_json()) == s

    def test_from_json_requires_label(self):
        with pytest.raises(ConfigError):
            TextSample.from_json({"id": "a", "text": "t"})


class TestCorpusIO:
    def test_round_trip(self, tmp_path):
        samples = [
            TextSample(id="a", label=0, text="one"),
            TextSample(id="b", label="positive", premise="p", hypothesis="h"),
        ]
        path = tmp_path / "corpus.jsonl"
        save_corpus(samples, path)
        assert load_corpus(path) == samples

    def test_missing_ids_default_to_line_numbers(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"label": 0, "text": "x"}\n{"label": 1, "text": "y"}\n')
        loaded = load_corpus(path)
        assert [s.id for s in loaded] == ["s000000", "s000001"]

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(
            '{"id": "a", "label": 0, "text": "x"}\n'
            '{"id": "a", "label": 1, "text": "y"}\n'
        )
        with pytest.raises(ConfigError):
            load_corpus(path)

    def test_empty_corpus_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n")
        with pytest.raises(EmptyInput):
            load_corpus(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('\n{"id": "a", "label": 0, "text": "x"}\n\n')
        assert len(load_corpus(path)) == 1
