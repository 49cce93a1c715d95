import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

# Enough vocabulary for the fixtures; "destruction" is deliberately absent so
# it splits into two pieces and exercises subword mean pooling.
VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "rome", "'", "s", "of", "the", "city", "destru", "##ction", "destroyed",
    "was", "by", "fire", "destroys", "forests", "treatment", "illness",
    "professional", "a", "analysis", "genetic", "sample", "from", "time",
    "waste", "money", "enemy", "bridge", "army",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("tinybert")
    tokenizer = BertTokenizer(
        vocab={token: index for index, token in enumerate(VOCAB)}, do_lower_case=True
    )
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=48,
    )
    model = BertModel(config)
    model.eval()
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)
