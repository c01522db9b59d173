import string

from hypothesis import given
from hypothesis import strategies as st

from faqforge.preprocess import default_resources, preprocess

RES = default_resources()


def test_dropbox_example():
    assert preprocess("How secure is my sensitive data on dropbox", RES).tokens == (
        "secure",
        "sensitive",
        "data",
        "dropbox",
    )


def test_gmail_example_lemmatizes():
    assert preprocess("Splitting conversations in gmail", RES).tokens == (
        "split",
        "conversation",
        "gmail",
    )


def test_empty_input():
    assert preprocess("", RES).tokens == ()


def test_fully_stopword_input():
    assert preprocess("is it on the?", RES).tokens == ()


def test_punctuation_stripped_and_lowercased():
    assert preprocess("DELETE, my Account!!", RES).tokens == ("delete", "account")


def test_unknown_words_identity():
    assert preprocess("zorblax dropbox", RES).tokens == ("zorblax", "dropbox")


def test_source_entry_id_carried():
    seq = preprocess("secure dropbox", RES, source_entry_id=7)
    assert seq.source_entry_id == 7


def test_no_stopwords_survive():
    seq = preprocess("the data is in the dropbox folder", RES)
    assert not set(seq.tokens) & RES.stopwords


words = st.text(alphabet=string.ascii_lowercase + string.punctuation, min_size=1, max_size=12)
texts = st.lists(words, max_size=12).map(" ".join)


@given(texts)
def test_idempotent(text):
    once = preprocess(text, RES).tokens
    again = preprocess(" ".join(once), RES).tokens
    assert once == again


@given(texts)
def test_output_invariants(text):
    seq = preprocess(text, RES)
    for token in seq.tokens:
        assert token not in RES.stopwords
        assert " " not in token and "\t" not in token
        # token is a lexicon lemma or an identity-mapped unknown
        assert RES.lemmas.get(token, token) == token or token not in RES.lemmas


def test_lexicon_closure():
    """Lemma values are fixed points and never stopwords, which guarantees
    idempotence structurally."""
    for surface, lemma in RES.lemmas.items():
        assert lemma not in RES.stopwords, (surface, lemma)
        assert RES.lemmas.get(lemma, lemma) == lemma, (surface, lemma)


def test_load_resources_from_paths(tmp_path):
    from faqforge.preprocess import load_resources

    stop = tmp_path / "stop.txt"
    stop.write_text("foo\nbar\n")
    lem = tmp_path / "lem.tsv"
    lem.write_text("# comment\nrunning\trun\n")
    res = load_resources(stop, lem)
    assert preprocess("foo running baz", res).tokens == ("run", "baz")
