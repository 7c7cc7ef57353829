"""Feature schemas and document-to-vector transforms.

Three feature families over object-code payloads:

* byte-level (1,2,3)-gram TF-IDF over the raw bytes,
* character-level (1,2,3)-gram TF-IDF over a binary-to-text encoding,
* symbol histogram + four 2-byte endianness pattern rates (baseline).

TF uses a per-window-length denominator (count / number of length-n
windows); IDF is the smoothed natural-log form ln((D+1)/(df+1)) + 1; the
concatenated vector is scaled to unit Euclidean norm unless the schema
disables it.  1- and 2-gram blocks enumerate the full alphabet; the 3-gram
block holds the top-ranked grams by training occurrence count (ascending
code order breaking ties), capped at 5000.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import codec, kernels
from .corpus import Corpus, Document

NGRAM3_CAP = 5000

TFIDF_METHODS = ("tfidf_byte", "tfidf_char")
HIST_METHODS = ("hist_endian_byte", "hist_endian_char")
METHODS = TFIDF_METHODS + HIST_METHODS

# 2-byte probe patterns, in feature order: 0x0001, 0x0100, 0xfffe, 0xfeff
ENDIAN_PATTERNS = (b"\x00\x01", b"\x01\x00", b"\xff\xfe", b"\xfe\xff")
_ENDIAN_ARRAYS = tuple(np.frombuffer(p, dtype=np.uint8) for p in ENDIAN_PATTERNS)


@dataclass(frozen=True, eq=False)
class GramVocabulary:
    """Term coordinates and IDF weights learned from a training corpus.

    1- and 2-gram blocks are implicit full enumerations in code order, so
    only the selected 3-gram codes are stored (in rank order, which is the
    feature-block order).  ``idf3`` aligns with ``codes3``.
    """

    base: int
    alphabet: Optional[str]  # sorted symbol string (char mode) or None (byte)
    codes3: np.ndarray
    idf1: np.ndarray
    idf2: np.ndarray
    idf3: np.ndarray
    fit_corpus_size: int

    def __post_init__(self):
        order = np.argsort(self.codes3)
        object.__setattr__(self, "sorted3", self.codes3[order])
        object.__setattr__(self, "pos3", order.astype(np.int64))

    @property
    def dimension(self) -> int:
        return self.base + self.base * self.base + self.codes3.shape[0]

    def gram3_terms(self) -> list[str]:
        """Selected 3-grams as text, block order: hex triples or 3-char runs."""
        b = self.base
        out = []
        for c in self.codes3.tolist():
            syms = (c // (b * b), (c // b) % b, c % b)
            if self.alphabet is None:
                out.append(bytes(syms).hex())
            else:
                out.append("".join(self.alphabet[s] for s in syms))
        return out


def terms3_to_codes(terms: Sequence[str], alphabet: Optional[str]) -> np.ndarray:
    """Inverse of GramVocabulary.gram3_terms for model deserialization."""
    b = 256 if alphabet is None else len(alphabet)
    codes = []
    for t in terms:
        syms = bytes.fromhex(t) if alphabet is None else [alphabet.index(ch) for ch in t]
        codes.append((syms[0] * b + syms[1]) * b + syms[2])
    return np.asarray(codes, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class FeatureSchema:
    method: str  # tfidf_byte | tfidf_char | hist_endian_byte | hist_endian_char
    encoding: Optional[codec.Encoding] = None
    vocab: Optional[GramVocabulary] = None
    normalize: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown feature method {self.method!r}")
        if self.is_char and self.encoding is None:
            raise ValueError(f"{self.method} requires an encoding")
        if not self.is_char and self.encoding is not None:
            raise ValueError(f"{self.method} does not take an encoding")
        if self.is_tfidf and self.vocab is None:
            raise ValueError(f"{self.method} schema must be fitted (fit_tfidf)")

    @property
    def is_tfidf(self) -> bool:
        return self.method in TFIDF_METHODS

    @property
    def is_char(self) -> bool:
        return self.method.endswith("_char")

    @property
    def base(self) -> int:
        return len(self.encoding.alphabet) if self.is_char else 256

    @property
    def dimension(self) -> int:
        if self.is_tfidf:
            return self.vocab.dimension
        return self.base + len(ENDIAN_PATTERNS)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    schema: FeatureSchema


def hist_schema(mode: str, encoding: Optional[codec.Encoding] = None) -> FeatureSchema:
    """Static histogram+endianness schema; no fitting step exists or is needed."""
    _check_mode(mode, encoding)
    method = "hist_endian_byte" if mode == "byte" else "hist_endian_char"
    return FeatureSchema(method=method, encoding=encoding)


def _check_mode(mode: str, encoding: Optional[codec.Encoding]) -> None:
    if mode not in ("byte", "char"):
        raise ValueError(f"mode must be 'byte' or 'char', got {mode!r}")
    if (mode == "char") != (encoding is not None):
        raise ValueError("encoding must be supplied iff mode is 'char'")


def _char_lut(encoding: codec.Encoding) -> np.ndarray:
    lut = np.full(128, -1, dtype=np.int64)
    for i, ch in enumerate(sorted(encoding.alphabet)):
        lut[ord(ch)] = i
    return lut


_LUT_CACHE: dict[str, np.ndarray] = {}


def _payload_codes(payload: bytes, is_char: bool, encoding) -> np.ndarray:
    """Term-code sequence of one document (byte values or alphabet ranks)."""
    if not is_char:
        return np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    text = codec.strip_padding(encoding, codec.encode(encoding, payload))
    if encoding.name not in _LUT_CACHE:
        _LUT_CACHE[encoding.name] = _char_lut(encoding)
    raw = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
    return _LUT_CACHE[encoding.name][raw]


def _flatten(seqs: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    np.cumsum([s.shape[0] for s in seqs], out=offsets[1:])
    flat = np.concatenate(seqs) if seqs else np.empty(0, dtype=np.int64)
    return flat, offsets


def _select_grams3(counts3: np.ndarray, base: int, cap: int) -> np.ndarray:
    """Rank by total count descending, code ascending on ties, cap the block.

    All base^3 candidates compete when they fit under the cap (fixed block);
    otherwise only grams observed in training enter the ranking.
    """
    if base ** 3 <= cap:
        pool = np.arange(base ** 3, dtype=np.int64)
        pool_counts = counts3
    else:
        pool = np.nonzero(counts3)[0].astype(np.int64)
        pool_counts = counts3[pool]
    order = np.argsort(-pool_counts, kind="stable")
    return pool[order[:cap]]


def fit_tfidf(
    train: Corpus,
    mode: str,
    encoding: Optional[codec.Encoding] = None,
    ngram3_cap: int = NGRAM3_CAP,
    normalize: bool = True,
) -> FeatureSchema:
    """Learn the gram vocabulary and IDF weights from a training corpus."""
    _check_mode(mode, encoding)
    if len(train) == 0:
        raise ValueError("cannot fit TF-IDF features on an empty corpus")
    if ngram3_cap < 0:
        raise ValueError("ngram3_cap must be >= 0")
    is_char = mode == "char"
    base = len(encoding.alphabet) if is_char else 256
    seqs = [_payload_codes(d.payload, is_char, encoding) for d in train]
    flat, offsets = _flatten(seqs)
    stats = []
    for n in (1, 2, 3):
        counts = np.zeros(base ** n, dtype=np.int64)
        df = np.zeros(base ** n, dtype=np.int64)
        kernels.gram_stats(flat, offsets, n, base, counts, df)
        stats.append((counts, df))
    codes3 = _select_grams3(stats[2][0], base, ngram3_cap)
    d_total = len(train)

    def idf(df: np.ndarray) -> np.ndarray:
        return np.log((d_total + 1.0) / (df + 1.0)) + 1.0

    vocab = GramVocabulary(
        base=base,
        alphabet="".join(sorted(encoding.alphabet)) if is_char else None,
        codes3=codes3,
        idf1=idf(stats[0][1]),
        idf2=idf(stats[1][1]),
        idf3=idf(stats[2][1][codes3]),
        fit_corpus_size=d_total,
    )
    method = "tfidf_char" if is_char else "tfidf_byte"
    return FeatureSchema(method=method, encoding=encoding, vocab=vocab, normalize=normalize)


def transform_matrix(schema: FeatureSchema, docs: Sequence[Document]) -> np.ndarray:
    """Feature rows for a batch of documents, shape (len(docs), dimension)."""
    docs = list(docs)
    out = np.zeros((len(docs), schema.dimension), dtype=np.float64)
    if not docs:
        return out
    seqs = [_payload_codes(d.payload, schema.is_char, schema.encoding) for d in docs]
    flat, offsets = _flatten(seqs)
    if schema.is_tfidf:
        v = schema.vocab
        kernels.tfidf_fill(
            flat, offsets, v.base, v.sorted3, v.pos3, v.idf1, v.idf2, v.idf3, out
        )
        if schema.normalize:
            norms = np.sqrt(np.einsum("ij,ij->i", out, out))
            # all-zero rows stay zero: dividing them by 1 avoids a fancy-index copy
            out /= np.where(norms > 0.0, norms, 1.0)[:, None]
        return out
    base = schema.base
    kernels.hist_fill(flat, offsets, out[:, :base])
    for i, d in enumerate(docs):
        data = np.frombuffer(d.payload, dtype=np.uint8)
        scale = 1.0 / len(d.payload)
        for j, pat in enumerate(_ENDIAN_ARRAYS):
            out[i, base + j] = kernels.count_pattern(data, pat) * scale
    return out


def transform_tfidf(schema: FeatureSchema, doc: Document) -> FeatureVector:
    """TF x IDF per vocabulary slot, unit-norm unless disabled or all zero."""
    if not schema.is_tfidf:
        raise ValueError(f"schema method {schema.method} is not a TF-IDF method")
    return FeatureVector(transform_matrix(schema, [doc])[0], schema)


def transform_hist_endian(
    mode: str, encoding: Optional[codec.Encoding], doc: Document
) -> FeatureVector:
    """Symbol histogram plus 0x0001/0x0100/0xfffe/0xfeff rates (raw bytes)."""
    schema = hist_schema(mode, encoding)
    return FeatureVector(transform_matrix(schema, [doc])[0], schema)


def simplified_endianness(doc: Document | bytes) -> tuple[int, int]:
    """(big, little) indicator: which of 0x0001 / 0x0100 occurs more; tie -> (0, 0)."""
    payload = doc.payload if isinstance(doc, Document) else doc
    data = np.frombuffer(payload, dtype=np.uint8)
    big = kernels.count_pattern(data, _ENDIAN_ARRAYS[0])
    little = kernels.count_pattern(data, _ENDIAN_ARRAYS[1])
    if big > little:
        return (1, 0)
    if little > big:
        return (0, 1)
    return (0, 0)


def export_features(schema: FeatureSchema, corpus: Corpus, path) -> int:
    """CSV export: header id,label,f0..f{d-1}; full-precision decimal values."""
    rows = transform_matrix(schema, corpus.documents)
    with open(path, "w", encoding="utf-8") as fh:
        header = ["id", "label"] + [f"f{i}" for i in range(schema.dimension)]
        fh.write(",".join(header) + "\n")
        for d, row in zip(corpus, rows):
            cells = [d.id, d.label if d.label is not None else ""]
            cells.extend(repr(v) for v in row.tolist())
            fh.write(",".join(cells) + "\n")
    return len(corpus)
