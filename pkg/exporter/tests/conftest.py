"""Shared fixtures: a tiny local BERT checkpoint and a 20-essay corpus.

The checkpoint is randomly initialized (seeded), which exercises the full
export path: file formats, truncation, determinism, and primary-ingest
compatibility do not depend on pretrained weights. The directional
coherence test does, and skips unless a real model is supplied.
"""

import numpy as np
import pytest
import torch
import transformers
from transformers import BertConfig, BertForPreTraining, BertTokenizer

transformers.logging.set_verbosity_error()

WORDS = (
    "the cat sat on mat river flows past old mill people walk along "
    "water every morning small town market opens early traders bring "
    "fruit bread stories children play near bridge while boats move "
    "slowly under grey sky light rain falls evening comes quiet"
).split()


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tinybert")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", ".", ",", '"'] + sorted(set(WORDS))
    vocab_file = path / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file))
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    torch.manual_seed(1234)
    model = BertForPreTraining(config)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


def _essay_text(rng: np.random.Generator, n_sentences: int) -> str:
    sentences = []
    for _ in range(n_sentences):
        words = rng.choice(WORDS, size=int(rng.integers(5, 10)))
        sentences.append(" ".join(words).capitalize() + ".")
    return " ".join(sentences)


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """20-essay corpus TSV + the sentence manifest the primary produces."""
    from aesfuse.corpus import load_corpus
    from aesfuse.encoder_io import write_sentence_manifest

    root = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(99)
    rows = []
    for i in range(20):
        if i == 0:
            text = _essay_text(rng, 1)  # single-sentence essay: empty NSP row
        elif i == 1:
            text = _essay_text(rng, 40)  # far beyond the 64-token window
        else:
            text = _essay_text(rng, int(rng.integers(3, 9)))
        rows.append((f"x{i:03d}", text))
    corpus_path = root / "corpus.tsv"
    with open(corpus_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("#range 1 0 10\n")
        f.write("essay_id\tprompt_id\tscore\ttext\n")
        for essay_id, text in rows:
            f.write(f"{essay_id}\t1\t5\t{text}\n")
    corpus = load_corpus(corpus_path, format="simple")
    manifest_path = root / "sentences.jsonl"
    write_sentence_manifest(manifest_path, corpus)
    return {"corpus_path": corpus_path, "manifest_path": manifest_path, "corpus": corpus}
