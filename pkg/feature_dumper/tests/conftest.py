"""Fixtures: tiny locally-saved pretrained-format models and WAV helpers."""

import wave

import numpy as np
import pytest
import torch


@pytest.fixture(scope="session")
def tiny_speech_model(tmp_path_factory):
    """A miniature wav-input transformer saved in the hub layout."""
    from transformers import HubertConfig, HubertModel, Wav2Vec2FeatureExtractor

    torch.manual_seed(0)
    config = HubertConfig(
        hidden_size=32, num_hidden_layers=2, num_attention_heads=2,
        intermediate_size=64, conv_dim=(32, 32), conv_stride=(5, 4),
        conv_kernel=(10, 3), num_conv_pos_embeddings=16,
        num_conv_pos_embedding_groups=2, vocab_size=10,
    )
    model_dir = tmp_path_factory.mktemp("tiny_speech")
    HubertModel(config).eval().save_pretrained(model_dir)
    Wav2Vec2FeatureExtractor(
        feature_size=1, sampling_rate=16000, padding_value=0.0,
        do_normalize=True, return_attention_mask=False,
    ).save_pretrained(model_dir)
    return model_dir


@pytest.fixture(scope="session")
def tiny_text_model(tmp_path_factory):
    """A miniature text encoder plus a ten-word WordPiece tokenizer."""
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.pre_tokenizers import Whitespace
    from tokenizers.processors import TemplateProcessing
    from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

    torch.manual_seed(1)
    vocab = {"[PAD]": 0, "[UNK]": 1, "[CLS]": 2, "[SEP]": 3, "[MASK]": 4,
             "hello": 5, "world": 6, "speech": 7, "sound": 8, "words": 9}
    tok = Tokenizer(WordPiece(vocab=vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    tok.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", 2), ("[SEP]", 3)],
    )
    model_dir = tmp_path_factory.mktemp("tiny_text")
    PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="[UNK]", pad_token="[PAD]",
        cls_token="[CLS]", sep_token="[SEP]", mask_token="[MASK]",
    ).save_pretrained(model_dir)
    config = BertConfig(vocab_size=10, hidden_size=16, num_hidden_layers=2,
                        num_attention_heads=2, intermediate_size=32,
                        max_position_embeddings=32)
    BertModel(config).eval().save_pretrained(model_dir)
    return model_dir


def write_wav(path, samples, sample_rate=16000):
    samples = np.asarray(samples, dtype="<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(sample_rate)
        f.writeframes(samples.tobytes())
    return path


@pytest.fixture
def audio_corpus(tmp_path):
    """Three short WAV files plus a transcript TSV (one transcript empty)."""
    audio_dir = tmp_path / "audio"
    audio_dir.mkdir()
    rng = np.random.default_rng(7)
    for name in ("utt1", "utt2", "utt3"):
        write_wav(audio_dir / f"{name}.wav",
                  (rng.standard_normal(3200) * 3000).astype(np.int16))
    transcripts = tmp_path / "transcripts.tsv"
    transcripts.write_text(
        "utt1\thello world\nutt2\tspeech sound words\nutt3\thello\nutt4\t\n",
        encoding="utf-8",
    )
    return audio_dir, transcripts
