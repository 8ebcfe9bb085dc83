import json

import pytest
from hypothesis import given, strategies as st

from mumprof.corpus import (
    LabeledTweet,
    RawTweet,
    TokenizedTweet,
    TopicLabelMap,
    extract_hashtags,
    group_by_user,
    label_by_hashtag,
    read_labels_csv,
    read_raw_jsonl,
    read_tokenized_jsonl,
    tokenize,
    tokenize_tweet,
    write_labels_csv,
    write_tokenized_jsonl,
)
from mumprof.errors import ConfigError, DataError


@pytest.mark.parametrize("text, expected", [
    ("RT @user Hola http://t.co/x #Ecu911", ["hola", "#ecu911"]),
    ("", []),
    ("Política y economía.", ["política", "y", "economía"]),
    ("rt: RT hola", ["hola"]),
    ("(@alguien) dijo: «¡Qué bien!»", ["dijo", "qué", "bien"]),
    ("#¡Ecuador! ##doble", ["#ecuador", "#doble"]),
    ("HTTPS://Example.com/a?b=1 www.sitio.ec", ["www.sitio.ec"]),
    ("hola,mundo ... !!!", ["hola,mundo"]),
    ("ÁRBOL Niño", ["árbol", "niño"]),
])
def test_tokenize_examples(text, expected):
    assert tokenize(text) == expected


def test_tokenize_keeps_rt_after_position_zero():
    assert tokenize("hola rt amigos") == ["hola", "rt", "amigos"]


def test_tokenize_nfc():
    decomposed = "economi\u0301a"
    assert tokenize(decomposed) == ["economía"]


_alphabet = st.sampled_from(list("abcxyzABCáéíóúñÑü#@.,;:!?¿¡()'\"-_ 0123") + [" ", "  ", "http://", "́"])


@given(st.lists(_alphabet, max_size=40).map("".join))
def test_tokenize_idempotent(text):
    once = tokenize(text)
    assert tokenize(" ".join(once)) == once
    assert all(t and t == t.lower() for t in once)
    assert not any(t.startswith("@") or "://" in t for t in once)


def test_extract_hashtags():
    assert extract_hashtags(TokenizedTweet("1", "u", ["#ecu911", "hola", "#ecu911"])) == ["ecu911"]
    assert extract_hashtags(TokenizedTweet("1", "u", ["hola"])) == []
    assert extract_hashtags(TokenizedTweet("1", "u", ["#A", "#b"])) == ["a", "b"]


def test_provided_hashtags_take_precedence():
    tw = tokenize_tweet(RawTweet("1", "u", "sin etiquetas", ("Futbol", "#ECU911")))
    assert extract_hashtags(tw) == ["futbol", "ecu911"]
    assert tw.tokens == ("sin", "etiquetas")


@pytest.fixture
def label_map():
    return TopicLabelMap(["safety", "sports"], {"ecu911": "safety", "#Futbol": "sports"})


def test_label_by_hashtag_rules(label_map):
    tweets = [
        TokenizedTweet("a", "u", ["#ecu911"]),
        TokenizedTweet("b", "u", ["#ecu911", "#futbol"]),
        TokenizedTweet("c", "u", ["nada"]),
        TokenizedTweet("d", "u", ["#futbol", "#otro", "#futbol"]),
    ]
    labeled, report = label_by_hashtag(tweets, label_map)
    assert labeled == [LabeledTweet("a", 0), LabeledTweet("d", 1)]
    assert report.ambiguous_ids == ["b"]
    assert report.ambiguous_count == 1
    assert report.unmatched == 1


def test_label_fraction_tracks_tagged_share(label_map):
    # 213 of 1000 tweets carry a mapped hashtag -> 21.3% labeled
    tweets = [TokenizedTweet(str(i), "u", ["#ecu911"] if i < 213 else ["hola"]) for i in range(1000)]
    labeled, _ = label_by_hashtag(tweets, label_map)
    assert len(labeled) / len(tweets) == pytest.approx(0.213)


@given(st.lists(st.lists(st.sampled_from(["#ecu911", "#futbol", "#x", "hola"]), max_size=4), max_size=30))
def test_label_partition(token_lists):
    lm = TopicLabelMap(["safety", "sports"], {"ecu911": "safety", "futbol": "sports"})
    tweets = [TokenizedTweet(str(i), "u", toks) for i, toks in enumerate(token_lists)]
    labeled, report = label_by_hashtag(tweets, lm)
    assert len(labeled) + report.ambiguous_count + report.unmatched == len(tweets)
    assert len({lab.tweet_id for lab in labeled}) == len(labeled)


def test_label_map_validation():
    with pytest.raises(ConfigError):
        TopicLabelMap(["a", "a"], {})
    with pytest.raises(ConfigError):
        TopicLabelMap(["a"], {"x": "b"})
    with pytest.raises(ConfigError):
        TopicLabelMap(["a", "b"], {"X": "a", "#x": "b"})
    with pytest.raises(ConfigError):
        label_by_hashtag([], TopicLabelMap(["a"], {}))


def test_group_by_user():
    tweets = [TokenizedTweet(f"t{i}", u, []) for i, u in enumerate(["u1", "u1", "u2", "u1"], 1)]
    assert group_by_user(tweets) == {"u1": ["t1", "t2", "t4"], "u2": ["t3"]}
    assert group_by_user([]) == {}


@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=50))
def test_group_by_user_partitions(users):
    tweets = [TokenizedTweet(str(i), u, []) for i, u in enumerate(users)]
    groups = group_by_user(tweets)
    assert sum(len(v) for v in groups.values()) == len(tweets)
    assert sorted(i for v in groups.values() for i in v) == sorted(t.id for t in tweets)


def test_group_by_user_many_users():
    # 294,986 tweets spread over 399 authors
    tweets = [TokenizedTweet(str(i), f"u{i % 399}", ()) for i in range(294_986)]
    assert len(group_by_user(tweets)) == 399


def test_jsonl_round_trip(tmp_path):
    src = tmp_path / "corpus.jsonl"
    src.write_text(
        json.dumps({"id": "1", "user_id": "u", "text": "Hola #Quito"}) + "\n"
        + json.dumps({"id": "2", "user_id": "v", "text": "", "hashtags": ["A"]}) + "\n",
        encoding="utf-8")
    raw = read_raw_jsonl(src)
    toks = [tokenize_tweet(t) for t in raw]
    write_tokenized_jsonl(toks, tmp_path / "tok.jsonl")
    assert read_tokenized_jsonl(tmp_path / "tok.jsonl") == toks
    labels = [LabeledTweet("1", 3), LabeledTweet("2", 0)]
    write_labels_csv(labels, tmp_path / "labels.csv")
    assert (tmp_path / "labels.csv").read_text().splitlines()[0] == "tweet_id,topic_index"
    assert read_labels_csv(tmp_path / "labels.csv") == labels


def test_read_raw_rejects_duplicates(tmp_path):
    src = tmp_path / "c.jsonl"
    line = json.dumps({"id": "1", "user_id": "u", "text": "x"})
    src.write_text(line + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_raw_jsonl(src)
