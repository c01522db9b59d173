"""Encoder-decoder keyword translation with concat attention and teacher forcing.

The encoder consumes frozen pre-trained word vectors; the decoder is a gated
recurrent cell over a learned embedding of the keyword vocabulary, attending
to encoder states via the concat scoring form score(h_t, h_s) =
v . tanh(W [h_t; h_s]). Training feeds gold previous tokens (teacher forcing)
under integer-class cross-entropy; decoding is greedy.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from . import artifacts
from .corpus import DatasetSplit, FaqCollection
from .embeddings import EmbeddingTable
from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    MissingKeywordSet,
    NonFiniteLoss,
)
from .keywords import KeywordSet, QuestionGroup
from .preprocess import PreprocessResources, TokenSequence, preprocess

START = "<s>"
END = "</s>"
PAD = "<pad>"
SENTINELS = (PAD, START, END)


@dataclass(frozen=True)
class Seq2SeqConfig:
    encoder_units: int = 2048
    decoder_units: int | None = None  # None means same as encoder_units
    attention: str = "concat-luong"
    dropout: float = 0.4
    batch_size: int = 32
    epochs: int = 30
    learning_rate: float = 1e-3
    decoder_embed_dim: int = 32
    max_decode_len: int | None = None  # None means longest training target + 2
    dtype: str = "float32"
    seed: int = 0

    def __post_init__(self):
        if self.encoder_units <= 0 or (self.decoder_units or 1) <= 0:
            raise ValueError("unit counts must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.attention != "concat-luong":
            raise ValueError(f"unsupported attention variant: {self.attention!r}")
        if self.batch_size <= 0 or self.epochs < 0:
            raise ValueError("batch_size must be positive and epochs non-negative")

    @property
    def dec_units(self) -> int:
        return self.decoder_units if self.decoder_units is not None else self.encoder_units

    @property
    def torch_dtype(self) -> torch.dtype:
        return {"float32": torch.float32, "float64": torch.float64}[self.dtype]


@dataclass(frozen=True)
class TrainingExample:
    """A preprocessed question and its sentinel-wrapped keyword target."""

    input: TokenSequence
    target: tuple[str, ...]


def build_training_set(
    collection: FaqCollection,
    groups: Sequence[QuestionGroup],
    keyword_sets: Sequence[KeywordSet],
    split: DatasetSplit,
    resources: PreprocessResources | None = None,
) -> list[TrainingExample]:
    """One example per train entry; target = its group's sorted keywords."""
    keywords_by_group = {ks.group_id: ks.keywords for ks in keyword_sets}
    group_of_entry: dict[int, int] = {}
    for g in groups:
        for mid in g.member_ids:
            group_of_entry[mid] = g.group_id

    examples = []
    for entry_id in sorted(split.train_ids):
        gid = group_of_entry.get(entry_id)
        if gid is None or gid not in keywords_by_group:
            raise MissingKeywordSet(f"entry {entry_id} has no keyword set for its group")
        keywords = keywords_by_group[gid]
        if not keywords:
            raise MissingKeywordSet(f"group {gid} has an empty keyword set")
        entry = collection.entry(entry_id)
        examples.append(
            TrainingExample(
                input=preprocess(entry.question_text, resources, source_entry_id=entry_id),
                target=(START, *keywords, END),
            )
        )
    return examples


def attention_score(
    decoder_state: np.ndarray,
    encoder_state: np.ndarray,
    w: np.ndarray,
    v: np.ndarray,
) -> float:
    """Concat attention score: v . tanh(W [decoder_state; encoder_state])."""
    decoder_state = np.asarray(decoder_state, dtype=np.float64).reshape(-1)
    encoder_state = np.asarray(encoder_state, dtype=np.float64).reshape(-1)
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    concat = np.concatenate([decoder_state, encoder_state])
    if w.ndim != 2 or w.shape[1] != concat.shape[0]:
        raise DimensionMismatch(
            f"W has shape {w.shape}, expected (*, {concat.shape[0]})"
        )
    if v.shape[0] != w.shape[0]:
        raise DimensionMismatch(f"v has length {v.shape[0]}, expected {w.shape[0]}")
    return float(v @ np.tanh(w @ concat))


class _ConcatAttention(nn.Module):
    def __init__(self, dec_units: int, enc_units: int, attn_dim: int):
        super().__init__()
        self.w = nn.Linear(dec_units + enc_units, attn_dim, bias=False)
        self.v = nn.Linear(attn_dim, 1, bias=False)

    def forward(self, dec_state: torch.Tensor, enc_outputs: torch.Tensor, mask: torch.Tensor):
        # dec_state [B, Dd]; enc_outputs [B, S, De]; mask [B, S] (True = real)
        expanded = dec_state.unsqueeze(1).expand(-1, enc_outputs.shape[1], -1)
        energy = self.v(torch.tanh(self.w(torch.cat([expanded, enc_outputs], dim=2))))
        scores = energy.squeeze(2).masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=1)
        context = torch.bmm(weights.unsqueeze(1), enc_outputs).squeeze(1)
        return context, weights


class _Seq2SeqNet(nn.Module):
    def __init__(self, input_dim: int, vocab_size: int, config: Seq2SeqConfig):
        super().__init__()
        enc, dec = config.encoder_units, config.dec_units
        self.encoder = nn.LSTM(input_dim, enc, batch_first=True)
        self.bridge_h = nn.Linear(enc, dec) if enc != dec else nn.Identity()
        self.bridge_c = nn.Linear(enc, dec) if enc != dec else nn.Identity()
        self.dec_embed = nn.Embedding(vocab_size, config.decoder_embed_dim)
        nn.init.uniform_(
            self.dec_embed.weight,
            -1.0 / math.sqrt(config.decoder_embed_dim),
            1.0 / math.sqrt(config.decoder_embed_dim),
        )
        self.dec_cell = nn.LSTMCell(config.decoder_embed_dim, dec)
        self.attention = _ConcatAttention(dec, enc, dec)
        self.combine = nn.Linear(dec + enc, dec, bias=False)
        self.out = nn.Linear(dec, vocab_size)
        self.drop = nn.Dropout(config.dropout)

    def encode(self, inputs: torch.Tensor, lengths: torch.Tensor):
        packed = pack_padded_sequence(
            inputs, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        packed_out, (h, c) = self.encoder(packed)
        enc_outputs, _ = pad_packed_sequence(packed_out, batch_first=True)
        enc_outputs = self.drop(enc_outputs)
        state = (self.bridge_h(h.squeeze(0)), self.bridge_c(c.squeeze(0)))
        return enc_outputs, state

    def decode_step(self, prev_ids: torch.Tensor, state, enc_outputs, mask):
        h, c = self.dec_cell(self.dec_embed(prev_ids), state)
        context, weights = self.attention(h, enc_outputs, mask)
        attentional = torch.tanh(self.combine(torch.cat([h, context], dim=1)))
        logits = self.out(self.drop(attentional))
        return logits, (h, c), weights

    def forward_teacher(self, inputs, lengths, mask, target_in):
        enc_outputs, state = self.encode(inputs, lengths)
        logits_steps = []
        for t in range(target_in.shape[1]):
            logits, state, _ = self.decode_step(target_in[:, t], state, enc_outputs, mask)
            logits_steps.append(logits)
        return torch.stack(logits_steps, dim=1)


class Seq2SeqModel:
    """A trained (or freshly initialized) keyword translation model."""

    def __init__(
        self,
        net: _Seq2SeqNet,
        vocab: tuple[str, ...],
        config: Seq2SeqConfig,
        input_dim: int,
        max_decode_len: int,
        loss_history: tuple[float, ...] = (),
    ):
        self.net = net
        self.vocab = vocab
        self.token_to_id = {t: i for i, t in enumerate(vocab)}
        self.config = config
        self.input_dim = input_dim
        self.max_decode_len = max_decode_len
        self.loss_history = loss_history
        self.net.eval()

    # -- inference ---------------------------------------------------------

    def predict(self, tokens: TokenSequence, table: EmbeddingTable) -> list[str]:
        return self.predict_batch([tokens], table)[0]

    def predict_batch(
        self,
        token_seqs: Sequence[TokenSequence],
        table: EmbeddingTable,
        batch_size: int = 256,
    ) -> list[list[str]]:
        """Greedy decode; sentinels stripped; dropout disabled."""
        self.net.eval()
        out: list[list[str]] = []
        with torch.no_grad():
            for lo in range(0, len(token_seqs), batch_size):
                chunk = token_seqs[lo : lo + batch_size]
                inputs, lengths, mask = _encode_inputs(
                    chunk, table, self.input_dim, self.config.torch_dtype
                )
                ids = self._greedy_ids(inputs, lengths, mask)
                for row in ids:
                    out.append([self.vocab[i] for i in row if self.vocab[i] not in SENTINELS])
        return out

    def _greedy_ids(self, inputs, lengths, mask) -> list[list[int]]:
        batch = inputs.shape[0]
        enc_outputs, state = self.net.encode(inputs, lengths)
        prev = torch.full((batch,), self.token_to_id[START], dtype=torch.long)
        end_id = self.token_to_id[END]
        finished = torch.zeros(batch, dtype=torch.bool)
        rows: list[list[int]] = [[] for _ in range(batch)]
        for _ in range(self.max_decode_len):
            logits, state, _ = self.net.decode_step(prev, state, enc_outputs, mask)
            prev = logits.argmax(dim=1)
            for b in range(batch):
                if not finished[b]:
                    if prev[b].item() == end_id:
                        finished[b] = True
                    else:
                        rows[b].append(prev[b].item())
            if bool(finished.all()):
                break
        return rows

    def attention_map(self, tokens: TokenSequence, table: EmbeddingTable) -> np.ndarray:
        """Attention weights (decode steps x source positions) of one greedy decode."""
        self.net.eval()
        with torch.no_grad():
            inputs, lengths, mask = _encode_inputs(
                [tokens], table, self.input_dim, self.config.torch_dtype
            )
            enc_outputs, state = self.net.encode(inputs, lengths)
            prev = torch.tensor([self.token_to_id[START]], dtype=torch.long)
            steps = []
            for _ in range(self.max_decode_len):
                logits, state, weights = self.net.decode_step(prev, state, enc_outputs, mask)
                steps.append(weights[0].numpy().copy())
                prev = logits.argmax(dim=1)
                if prev.item() == self.token_to_id[END]:
                    break
        return np.stack(steps)

    # -- persistence -------------------------------------------------------

    def _meta(self) -> dict:
        return {
            "format": "faqforge-checkpoint",
            "kind": "seq2seq",
            "config": asdict(self.config),
            "vocab": list(self.vocab),
            "input_dim": self.input_dim,
            "max_decode_len": self.max_decode_len,
            "loss_history": list(self.loss_history),
            "byte_order": "little",
        }

    def _tensors(self) -> dict[str, np.ndarray]:
        return {name: t.detach().numpy().copy() for name, t in self.net.state_dict().items()}

    def fingerprint(self) -> str:
        return artifacts.archive_fingerprint(self._meta(), self._tensors())

    def save(self, path: str | Path) -> None:
        artifacts.save_archive(path, self._meta(), self._tensors())

    @classmethod
    def load(cls, path: str | Path) -> "Seq2SeqModel":
        meta, tensors = artifacts.load_archive(path)
        if meta.get("kind") != "seq2seq":
            raise ValueError(f"not a seq2seq checkpoint: {path}")
        cfg_dict = dict(meta["config"])
        config = Seq2SeqConfig(**cfg_dict)
        vocab = tuple(meta["vocab"])
        net = _Seq2SeqNet(meta["input_dim"], len(vocab), config).to(config.torch_dtype)
        net.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
        return cls(
            net=net,
            vocab=vocab,
            config=config,
            input_dim=meta["input_dim"],
            max_decode_len=meta["max_decode_len"],
            loss_history=tuple(meta["loss_history"]),
        )


def _encode_inputs(
    token_seqs: Sequence[TokenSequence],
    table: EmbeddingTable,
    dim: int,
    dtype: torch.dtype,
):
    """Pad embedded inputs; an empty question becomes one zero-vector step."""
    arrays = []
    for seq in token_seqs:
        vecs = [table.embed(t) for t in seq.tokens]
        if not vecs:
            vecs = [np.zeros(dim, dtype=np.float32)]
        arrays.append(np.stack(vecs))
    lengths = torch.tensor([a.shape[0] for a in arrays], dtype=torch.long)
    max_len = int(lengths.max())
    batch = np.zeros((len(arrays), max_len, dim), dtype=np.float32)
    for i, a in enumerate(arrays):
        batch[i, : a.shape[0]] = a
    inputs = torch.from_numpy(batch).to(dtype)
    mask = torch.arange(max_len)[None, :] < lengths[:, None]
    return inputs, lengths, mask


def _target_batch(
    targets: Sequence[tuple[str, ...]],
    token_to_id: dict[str, int],
) -> tuple[torch.Tensor, torch.Tensor]:
    """Teacher-forcing tensors: inputs are gold tokens shifted right."""
    pad = token_to_id[PAD]
    max_len = max(len(t) for t in targets) - 1
    tgt_in = torch.full((len(targets), max_len), pad, dtype=torch.long)
    tgt_out = torch.full((len(targets), max_len), pad, dtype=torch.long)
    for i, t in enumerate(targets):
        ids = [token_to_id[tok] for tok in t]
        tgt_in[i, : len(ids) - 1] = torch.tensor(ids[:-1])
        tgt_out[i, : len(ids) - 1] = torch.tensor(ids[1:])
    return tgt_in, tgt_out


def batch_loss(
    model: Seq2SeqModel,
    examples: Sequence[TrainingExample],
    table: EmbeddingTable,
) -> torch.Tensor:
    """Teacher-forcing cross-entropy of a batch under the model's current mode."""
    inputs, lengths, mask = _encode_inputs(
        [e.input for e in examples], table, model.input_dim, model.config.torch_dtype
    )
    tgt_in, tgt_out = _target_batch([e.target for e in examples], model.token_to_id)
    logits = model.net.forward_teacher(inputs, lengths, mask, tgt_in)
    return nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        tgt_out.reshape(-1),
        ignore_index=model.token_to_id[PAD],
    )


def train(
    config: Seq2SeqConfig,
    examples: Sequence[TrainingExample],
    table: EmbeddingTable,
) -> Seq2SeqModel:
    """Teacher-forcing training over the examples; deterministic given seed.

    epochs = 0 returns a randomly initialized model with an empty loss
    history, still usable for decoding.
    """
    if not examples:
        raise EmptyTrainingSet("no training examples")

    keyword_vocab = sorted({tok for e in examples for tok in e.target} - set(SENTINELS))
    vocab = (PAD, START, END, *keyword_vocab)
    longest_target = max(len(e.target) - 2 for e in examples)
    max_decode_len = (
        config.max_decode_len if config.max_decode_len is not None else longest_target + 2
    )

    torch.manual_seed(config.seed)
    net = _Seq2SeqNet(table.dim, len(vocab), config).to(config.torch_dtype)
    model = Seq2SeqModel(
        net=net,
        vocab=vocab,
        config=config,
        input_dim=table.dim,
        max_decode_len=max_decode_len,
    )

    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    for _ in range(config.epochs):
        net.train()
        order = rng.permutation(len(examples))
        epoch_losses = []
        for lo in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[lo : lo + config.batch_size]]
            optimizer.zero_grad()
            loss = batch_loss(model, batch, table)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(f"loss diverged at epoch {len(history)}")
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
        history.append(float(np.mean(epoch_losses)))
    net.eval()
    model.loss_history = tuple(history)
    return model


def predict_keywords(
    model: Seq2SeqModel,
    input: TokenSequence,
    table: EmbeddingTable,
) -> list[str]:
    """Greedy decode from START until END or the decode-length cap."""
    return model.predict(input, table)
