"""Dumper tests: shapes, determinism, pooling semantics, and the
cross-package contract with the analysis toolkit's CLI."""

import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
import torch

from conftest import write_wav
from feature_dumper.dump import (
    DumpJob,
    dump_speech_features,
    dump_text_features,
    read_transcripts,
    read_wav_mono,
    write_lockfile,
    write_manifest,
)
from feature_dumper.psrf import read_feature, write_feature

PSR_KIT = shutil.which("psr-kit")
needs_psr_kit = pytest.mark.skipif(PSR_KIT is None, reason="psr-kit CLI not installed")


class TestPsrfFormat:
    def test_round_trip(self, tmp_path):
        tensor = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        path = tmp_path / "t.psrf"
        write_feature(path, tensor)
        np.testing.assert_array_equal(read_feature(path), tensor)

    def test_rejects_bad_file(self, tmp_path):
        path = tmp_path / "bad.psrf"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(ValueError):
            read_feature(path)


class TestWavAndTranscripts:
    def test_wav_scaling(self, tmp_path):
        path = write_wav(tmp_path / "x.wav", np.array([16384, -32768], dtype=np.int16))
        samples, rate = read_wav_mono(path)
        assert rate == 16000
        np.testing.assert_allclose(samples, [0.5, -1.0])

    def test_transcript_parsing(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("u1\thello world\nu2\t\n", encoding="utf-8")
        assert read_transcripts(path) == {"u1": "hello world", "u2": ""}


class TestSpeechDump:
    def test_dumps_all_layers_per_utterance(self, tiny_speech_model, audio_corpus,
                                            tmp_path):
        audio_dir, _ = audio_corpus
        job = DumpJob(model_id=str(tiny_speech_model), out_dir=tmp_path / "out",
                      view_name="ssl", audio_dir=audio_dir)
        fragment = dump_speech_features(job)
        assert sorted(fragment["utterances"]) == ["utt1", "utt2", "utt3"]
        assert fragment["n_layers"] == 3  # embeddings + 2 transformer layers
        assert fragment["dims"] == 32
        shapes = set()
        for utt, rel in fragment["utterances"].items():
            stack = read_feature(tmp_path / "out" / rel)
            assert stack.ndim == 3
            shapes.add((stack.shape[0], stack.shape[2]))
        assert shapes == {(3, 32)}

    def test_matches_in_process_hidden_states(self, tiny_speech_model, audio_corpus,
                                              tmp_path):
        """Dumped file equals the model's own hidden states (float32 cast)."""
        from transformers import AutoFeatureExtractor, AutoModel

        audio_dir, _ = audio_corpus
        job = DumpJob(model_id=str(tiny_speech_model), out_dir=tmp_path / "out",
                      view_name="ssl", audio_dir=audio_dir)
        fragment = dump_speech_features(job)

        model = AutoModel.from_pretrained(tiny_speech_model).eval()
        extractor = AutoFeatureExtractor.from_pretrained(tiny_speech_model)
        samples, rate = read_wav_mono(audio_dir / "utt1.wav")
        inputs = extractor(samples, sampling_rate=rate, return_tensors="pt")
        with torch.inference_mode():
            outputs = model(inputs["input_values"], output_hidden_states=True)
        expected = torch.stack(outputs.hidden_states, dim=0)[:, 0].numpy()
        dumped = read_feature(tmp_path / "out" / fragment["utterances"]["utt1"])
        np.testing.assert_array_equal(dumped, expected.astype(np.float32))

    def test_layer_subset(self, tiny_speech_model, audio_corpus, tmp_path):
        audio_dir, _ = audio_corpus
        job = DumpJob(model_id=str(tiny_speech_model), out_dir=tmp_path / "out",
                      view_name="ssl", audio_dir=audio_dir, layers=[2])
        fragment = dump_speech_features(job)
        assert fragment["n_layers"] == 1

    def test_undecodable_file_skipped(self, tiny_speech_model, audio_corpus, tmp_path):
        audio_dir, _ = audio_corpus
        (audio_dir / "broken.wav").write_bytes(b"not audio")
        job = DumpJob(model_id=str(tiny_speech_model), out_dir=tmp_path / "out",
                      view_name="ssl", audio_dir=audio_dir)
        fragment = dump_speech_features(job)
        assert "broken" not in fragment["utterances"]
        assert len(fragment["utterances"]) == 3

    def test_deterministic(self, tiny_speech_model, audio_corpus, tmp_path):
        audio_dir, _ = audio_corpus
        blobs = []
        for run in ("r1", "r2"):
            job = DumpJob(model_id=str(tiny_speech_model), out_dir=tmp_path / run,
                          view_name="ssl", audio_dir=audio_dir)
            fragment = dump_speech_features(job)
            blobs.append((tmp_path / run / fragment["utterances"]["utt2"]).read_bytes())
        assert blobs[0] == blobs[1]


class TestTextDump:
    def test_vector_dimension_is_hidden_size(self, tiny_text_model, audio_corpus,
                                             tmp_path):
        _, transcripts = audio_corpus
        job = DumpJob(model_id=str(tiny_text_model), out_dir=tmp_path / "out",
                      view_name="text", transcripts=transcripts)
        fragment = dump_text_features(job)
        assert fragment["dims"] == 16
        vec = read_feature(tmp_path / "out" / fragment["utterances"]["utt1"])
        assert vec.shape == (16,)

    def test_identical_transcripts_identical_vectors(self, tiny_text_model, tmp_path):
        transcripts = tmp_path / "t.tsv"
        transcripts.write_text("u1\thello world\nu2\thello world\n", encoding="utf-8")
        job = DumpJob(model_id=str(tiny_text_model), out_dir=tmp_path / "out",
                      view_name="text", transcripts=transcripts)
        fragment = dump_text_features(job)
        v1 = read_feature(tmp_path / "out" / fragment["utterances"]["u1"])
        v2 = read_feature(tmp_path / "out" / fragment["utterances"]["u2"])
        np.testing.assert_array_equal(v1, v2)

    def test_single_token_transcript_is_that_tokens_vector(self, tiny_text_model,
                                                           tmp_path):
        """Mean over one content token is exactly that token's hidden state."""
        from transformers import AutoModel, AutoTokenizer

        transcripts = tmp_path / "t.tsv"
        transcripts.write_text("u1\thello\n", encoding="utf-8")
        job = DumpJob(model_id=str(tiny_text_model), out_dir=tmp_path / "out",
                      view_name="text", transcripts=transcripts)
        fragment = dump_text_features(job)
        dumped = read_feature(tmp_path / "out" / fragment["utterances"]["u1"])

        tokenizer = AutoTokenizer.from_pretrained(tiny_text_model)
        model = AutoModel.from_pretrained(tiny_text_model).eval()
        encoded = tokenizer("hello", return_tensors="pt")
        with torch.inference_mode():
            states = model(**encoded).last_hidden_state[0]
        np.testing.assert_array_equal(dumped, states[1].numpy().astype(np.float32))

    def test_empty_transcript_skipped(self, tiny_text_model, audio_corpus, tmp_path):
        _, transcripts = audio_corpus
        job = DumpJob(model_id=str(tiny_text_model), out_dir=tmp_path / "out",
                      view_name="text", transcripts=transcripts)
        fragment = dump_text_features(job)
        assert "utt4" not in fragment["utterances"]
        assert sorted(fragment["utterances"]) == ["utt1", "utt2", "utt3"]


class TestManifestAssembly:
    def test_fragments_merge(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        write_feature(tmp_path / "a" / "u1.psrf", np.ones(3, dtype=np.float32))
        write_feature(tmp_path / "b" / "u1.psrf", np.ones(2, dtype=np.float32))
        fragments = [
            {"view": "a", "utterances": {"u1": "a/u1.psrf"}},
            {"view": "b", "utterances": {"u1": "b/u1.psrf"}},
        ]
        manifest = write_manifest(tmp_path, fragments, {"u1": "hello"})
        doc = json.loads(manifest.read_text())
        assert doc["views"] == ["a", "b"]
        assert doc["utterances"]["u1"]["transcript"] == "hello"

    def test_lockfile_pins_models(self, tmp_path):
        path = write_lockfile(tmp_path, "some/speech", "some/text")
        lock = json.loads(path.read_text())
        assert lock["speech_model"] == "some/speech"
        assert lock["text_model"] == "some/text"
        assert "transformers" in lock and "torch" in lock


class TestEndToEnd:
    def run_dump(self, tiny_speech_model, tiny_text_model, audio_dir, transcripts,
                 out_dir):
        return subprocess.run(
            [sys.executable, "-m", "feature_dumper.cli",
             "--speech-model", str(tiny_speech_model),
             "--text-model", str(tiny_text_model),
             "--audio-dir", str(audio_dir),
             "--transcripts", str(transcripts),
             "--out", str(out_dir)],
            capture_output=True, text=True,
        )

    def test_cli_dump_writes_everything(self, tiny_speech_model, tiny_text_model,
                                        audio_corpus, tmp_path):
        audio_dir, transcripts = audio_corpus
        out_dir = tmp_path / "dump"
        proc = self.run_dump(tiny_speech_model, tiny_text_model, audio_dir,
                             transcripts, out_dir)
        assert proc.returncode == 0, proc.stderr
        assert (out_dir / "manifest.json").is_file()
        assert (out_dir / "models.lock.json").is_file()
        doc = json.loads((out_dir / "manifest.json").read_text())
        assert doc["views"] == ["ssl", "text"]
        assert doc["utterances"]["utt1"]["transcript"] == "hello world"

    @needs_psr_kit
    def test_outputs_pass_validate_manifest(self, tiny_speech_model, tiny_text_model,
                                            audio_corpus, tmp_path):
        audio_dir, transcripts = audio_corpus
        out_dir = tmp_path / "dump"
        proc = self.run_dump(tiny_speech_model, tiny_text_model, audio_dir,
                             transcripts, out_dir)
        assert proc.returncode == 0, proc.stderr
        check = subprocess.run(
            [PSR_KIT, "validate-manifest", "--manifest", str(out_dir / "manifest.json")],
            capture_output=True, text=True,
        )
        assert check.returncode == 0, check.stderr
        assert "n_utterances=3" in check.stdout

    @needs_psr_kit
    def test_full_pipeline_through_analysis_cli(self, tiny_speech_model,
                                                tiny_text_model, tmp_path):
        """Dump real-model features, add a mel view, and run the analysis
        toolkit end to end on the merged manifest."""
        rng = np.random.default_rng(3)
        audio_dir = tmp_path / "audio"
        audio_dir.mkdir()
        n_utts = 12
        for i in range(n_utts):
            write_wav(audio_dir / f"utt{i:02d}.wav",
                      (rng.standard_normal(3200) * 3000).astype(np.int16))
        words = ["hello", "world", "speech", "sound", "words"]
        transcripts = tmp_path / "transcripts.tsv"
        transcripts.write_text(
            "".join(f"utt{i:02d}\t{words[i % 5]} {words[(i + 2) % 5]}\n"
                    for i in range(n_utts)),
            encoding="utf-8",
        )
        out_dir = tmp_path / "dump"
        proc = self.run_dump(tiny_speech_model, tiny_text_model, audio_dir,
                             transcripts, out_dir)
        assert proc.returncode == 0, proc.stderr

        mel_dir = out_dir / "mel"
        proc = subprocess.run(
            [PSR_KIT, "mel-extract", "--wav-dir", str(audio_dir),
             "--out-dir", str(mel_dir)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr

        doc = json.loads((out_dir / "manifest.json").read_text())
        doc["views"].append("mel")
        for utt in doc["utterances"]:
            doc["utterances"][utt]["mel"] = f"mel/{utt}.psrf"
        merged = out_dir / "merged.json"
        merged.write_text(json.dumps(doc), encoding="utf-8")

        report_path = tmp_path / "report.json"
        proc = subprocess.run(
            [PSR_KIT, "psr", "--manifest", str(merged), "--ssl-view", "ssl",
             "--mel-view", "mel", "--text-view", "text",
             "--layer-weights", "uniform", "--rank", "3", "--lr", "1e-3",
             "--batch", "8", "--epochs", "3", "--hidden-dim", "8",
             "--out", str(report_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads(report_path.read_text())
        assert report["n"] == n_utts
        assert np.isfinite(report["psr_percent"])
