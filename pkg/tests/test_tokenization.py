import pytest
from hypothesis import given, strategies as st

from mlmattack.errors import VocabMissingSpecialToken
from mlmattack.tokenization import (
    MASK_TOKEN,
    UNK_TOKEN,
    Vocabulary,
    WordSequence,
    align_subwords,
    detokenize,
    encode_for_classifier,
    is_punctuation,
    split_words,
)
from stubs import make_vocab


class TestSplitWords:
    def test_sentence_with_final_period(self):
        assert split_words("I like the cat.").words == ("i", "like", "the", "cat", ".")

    def test_interior_apostrophe_is_kept(self):
        assert split_words("don't stop").words == ("don't", "stop")

    def test_leading_and_trailing_punctuation_detach_per_character(self):
        assert split_words('"well..."').words == ('"', "well", ".", ".", ".", '"')

    def test_special_tokens_survive_unsplit_and_unfolded(self):
        assert split_words("the [MASK] token").words == ("the", MASK_TOKEN, "token")

    def test_cased_mode_preserves_case(self):
        assert split_words("Good Film", lower=False).words == ("Good", "Film")

    def test_uncased_mode_folds(self):
        assert split_words("Good Film").words == ("good", "film")

    def test_empty_text(self):
        assert split_words("  ").words == ()

    def test_source_text_retained(self):
        ws = split_words("A b")
        assert ws.source_text == "A b"

    @given(
        st.lists(
            st.text(
                alphabet="abcdefgh.,!?'\"", min_size=1, max_size=8
            ).filter(lambda t: t.strip()),
            min_size=0,
            max_size=10,
        )
    )
    def test_resplit_of_canonical_form_is_stable(self, chunks):
        ws = split_words(" ".join(chunks))
        again = split_words(detokenize(ws.words))
        assert again.words == ws.words


class TestWordSequence:
    def test_replaced_rebuilds_text(self):
        ws = split_words("a fine day")
        swapped = ws.replaced(1, "grim")
        assert swapped.words == ("a", "grim", "day")
        assert swapped.text == "a grim day"
        assert ws.words == ("a", "fine", "day")  # original untouched


class TestIsPunctuation:
    @pytest.mark.parametrize("text", [".", "!?", '"', "...", "'"])
    def test_pure_punctuation(self, text):
        assert is_punctuation(text)

    @pytest.mark.parametrize("text", ["", "a", "a.", "don't", "3"])
    def test_not_pure_punctuation(self, text):
        assert not is_punctuation(text)


class TestVocabulary:
    def test_requires_mask_and_unk(self):
        with pytest.raises(VocabMissingSpecialToken):
            Vocabulary(tokens=["a", "b"])

    def test_line_number_is_id(self):
        vocab = make_vocab(["alpha", "beta"])
        assert vocab.decode(vocab.token_to_id["beta"]) == "beta"

    def test_round_trip_preserves_ids(self, tmp_path):
        vocab = make_vocab(["alpha", "beta"])
        vocab.save(tmp_path / "vocab.txt")
        loaded = Vocabulary.load(tmp_path / "vocab.txt")
        assert loaded.tokens == vocab.tokens
        assert loaded.token_to_id == vocab.token_to_id

    def test_wordpiece_whole_word_hit(self):
        vocab = make_vocab(["play", "##ing", "playing"])
        assert vocab.wordpiece("playing") == [vocab.token_to_id["playing"]]

    def test_wordpiece_greedy_split(self):
        vocab = make_vocab(["play", "##ing"])
        assert vocab.wordpiece("playing") == [
            vocab.token_to_id["play"],
            vocab.token_to_id["##ing"],
        ]

    def test_wordpiece_unmatchable_residue_collapses_to_unk(self):
        vocab = make_vocab(["play"])
        assert vocab.wordpiece("playing") == [vocab.unk_id]
        assert vocab.wordpiece("zzz") == [vocab.unk_id]

    def test_wordpiece_prefers_longest_match(self):
        vocab = make_vocab(["un", "unhappy", "##happy"])
        assert vocab.wordpiece("unhappy") == [vocab.token_to_id["unhappy"]]


class TestAlignment:
    def test_spans_partition_the_token_list(self):
        vocab = make_vocab(["play", "##ing", "the", "game"])
        ws = split_words("the playing game")
        alignment = align_subwords(ws, vocab)
        assert alignment.spans == ((0, 1), (1, 3), (3, 4))
        assert len(alignment.tokens) == 4
        assert alignment.span_length(1) == 2

    @given(st.lists(st.sampled_from(["play", "playing", "the", "zzz"]), min_size=1, max_size=8))
    def test_spans_are_contiguous_and_cover_everything(self, words):
        vocab = make_vocab(["play", "##ing", "the"])
        alignment = align_subwords(WordSequence(tuple(words), " ".join(words)), vocab)
        cursor = 0
        for start, end in alignment.spans:
            assert start == cursor
            assert end > start
            cursor = end
        assert cursor == len(alignment.tokens)


class TestEncodeForClassifier:
    def test_single_text_framing(self):
        vocab = make_vocab(["good", "film"])
        ids, types = encode_for_classifier(vocab, "good film")
        assert ids == [
            vocab.cls_id,
            vocab.token_to_id["good"],
            vocab.token_to_id["film"],
            vocab.sep_id,
        ]
        assert types == [0, 0, 0, 0]

    def test_pair_framing_marks_second_segment(self):
        vocab = make_vocab(["a", "b"])
        ids, types = encode_for_classifier(vocab, "a", pair="b b")
        sep = vocab.sep_id
        assert ids == [vocab.cls_id, vocab.token_to_id["a"], sep,
                       vocab.token_to_id["b"], vocab.token_to_id["b"], sep]
        assert types == [0, 0, 0, 1, 1, 1]

    def test_trimming_removes_from_longest_segment_first(self):
        vocab = make_vocab(["a", "b"])
        ids, types = encode_for_classifier(vocab, "a a a a a", pair="b", max_positions=7)
        # room for 4 inner tokens; the five-token first segment loses one
        assert len(ids) == 7
        assert ids.count(vocab.token_to_id["a"]) == 3
        assert ids.count(vocab.token_to_id["b"]) == 1

    def test_unknown_words_become_unk(self):
        vocab = make_vocab(["good"])
        ids, _ = encode_for_classifier(vocab, "good zzz")
        assert ids[2] == vocab.unk_id
