import pytest


@pytest.fixture(scope="session")
def local_bert(tmp_path_factory):
    """A randomly initialized BERT-base-width checkpoint saved locally, so the
    exporter can be exercised without network access."""
    from transformers import BertConfig, BertModel, BertTokenizerFast

    root = tmp_path_factory.mktemp("bert")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
             "the", "a", "cat", "cats", "dog", "dogs", "sits", "sit",
             "on", "mat", "runs", "run", "fast", "slow", "bird", "birds",
             "##s", "she", "they", "he", "it", "was", "were", "seen", "likes"]
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file))
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=768,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=256,
        max_position_embeddings=64,
    )
    import torch

    torch.manual_seed(1234)
    model = BertModel(config)
    checkpoint = root / "checkpoint"
    model.save_pretrained(checkpoint)
    tokenizer.save_pretrained(checkpoint)
    return checkpoint


@pytest.fixture()
def dataset_tsv(tmp_path):
    rows = [
        ("tr", "A", "the cat sits on the mat"),
        ("tr", "B", "dogs run fast"),
        ("va", "A", "she was seen"),
        ("te", "B", "they sit"),
        ("tr", "A", "the cat sits on the mat"),  # duplicate sentence
        ("te", "B", "he likes cats"),
        ("tr", "A", "a bird runs"),
        ("va", "B", "it was slow"),
        ("tr", "A", "the dogs were seen"),
        ("te", "B", "cats sit on the mat"),
    ]
    path = tmp_path / "probe.tsv"
    with open(path, "w", encoding="utf-8") as f:
        for tag, label, sentence in rows:
            f.write(f"{tag}\t{label}\t{sentence}\n")
    return path
