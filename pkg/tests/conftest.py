import io
import json

import pytest
from hypothesis import HealthCheck, settings

from faqforge import corpus
from faqforge.embeddings import EmbeddingTable
from faqforge.preprocess import default_resources

# shared-CPU runs (training in parallel with tests) trip timing health checks
settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")

DROPBOX_CLUSTER = [
    "How secure is my sensitive data on dropbox",
    "Are there security threats to dropbox",
    "Is sensitive data on dropbox secure",
    "Does dropbox have good security against attackers",
    "How safe is my data on dropbox",
]

GMAIL_CLUSTER = [
    "Is splitting conversations possible in mail threads on gmail",
    "Can i split a conversation in gmail",
    "How do I split two merged gmail conversations",
    "Splitting conversations in gmail",
    "How to divide a conversation on gmail",
]

SPOTIFY_CLUSTER = [
    "How do I share a playlist on spotify",
    "Sharing playlists in spotify",
    "Can I send my spotify playlist to a friend",
    "Is it possible to share my playlist on spotify",
    "Best way to share a spotify playlist",
]

GITHUB_CLUSTER = [
    "How do I delete a repository on github",
    "Deleting repositories in github",
    "Can I remove a github repository",
    "Is it possible to erase a repository on github",
    "How to remove an old repository from github",
]


def collection_from_clusters(clusters, answers=None):
    """Build a collection from question clusters via the canonical JSONL path."""
    lines = []
    for tid, questions in enumerate(clusters):
        answer = answers[tid] if answers else f"answer for thread {tid}"
        for qi, q in enumerate(questions):
            lines.append(
                json.dumps(
                    {
                        "thread_id": tid,
                        "question": q,
                        "answer": answer,
                        "is_paraphrase": qi > 0,
                    }
                )
            )
    return corpus.load_faq(io.StringIO("\n".join(lines)), format="jsonl")


@pytest.fixture(scope="session")
def resources():
    return default_resources()


@pytest.fixture(scope="session")
def fixture_collection():
    """Four topic clusters; the first is the dropbox-security cluster."""
    return collection_from_clusters(
        [DROPBOX_CLUSTER, GMAIL_CLUSTER, SPOTIFY_CLUSTER, GITHUB_CLUSTER]
    )


@pytest.fixture(scope="session")
def hash_table():
    """Empty table under hash-random policy: every token gets a stable unit vector."""
    return EmbeddingTable(dim=16, vectors={}, oov_policy="hash-random")


TOY_CLI_ARGS = [
    "--encoder-units", "64",
    "--classifier-units", "32",
    "--dense-units", "16",
    "--epochs", "60",
    "--batch-size", "16",
    "--seed", "7",
]


@pytest.fixture(scope="session")
def toy_artifacts(tmp_path_factory):
    """Full pipeline artifacts built once via the CLI on a 5-thread corpus."""
    from faqforge.cli import main

    root = tmp_path_factory.mktemp("toy")
    data_dir, art_dir = root / "data", root / "artifacts"
    assert main(["make-synthetic", "--out", str(data_dir), "--seed", "7", "--threads", "5"]) == 0
    base = ["--artifacts-dir", str(art_dir)]
    assert (
        main(
            ["ingest", "--corpus", str(data_dir / "threads.json"), "--format", "stackfaq"]
            + base
        )
        == 0
    )
    assert (
        main(
            ["train", "--embeddings", str(data_dir / "vectors.bin")]
            + base
            + TOY_CLI_ARGS
        )
        == 0
    )
    assert main(["translate"] + base) == 0
    return {"data": data_dir, "artifacts": art_dir}
