"""Character vocabulary and one-hot quantization of review text."""
from __future__ import annotations

import string

import numpy as np

DEFAULT_WINDOW = 1014

# letters, digits, the 32 distinct punctuation marks of the classic
# character-CNN alphabet, and newline: 69 symbols.  Space is not in the
# alphabet and encodes as an all-zero column.
ALPHABET = (
    string.ascii_lowercase
    + string.digits
    + "-,;.!?:'\"/\\|_@#$%^&*~`+=<>()[]{}"
    + "\n"
)


class CharVocabulary:
    def __init__(self, alphabet: str = ALPHABET):
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet has repeated characters")
        self.alphabet = alphabet
        self.index = {c: i for i, c in enumerate(alphabet)}

    def __len__(self) -> int:
        return len(self.alphabet)

    def __eq__(self, other) -> bool:
        return isinstance(other, CharVocabulary) and other.alphabet == self.alphabet


def encode_indices(text: str, vocab: CharVocabulary, window: int = DEFAULT_WINDOW,
                   reverse: bool = False) -> np.ndarray:
    """Row index of each character of the lowercased text, -1 for unknown
    characters and padding.  Text beyond ``window`` characters is dropped."""
    text = text.lower()
    if reverse:
        text = text[:window][::-1]
    out = np.full(window, -1, dtype=np.int16)
    get = vocab.index.get
    for j, ch in enumerate(text[:window]):
        out[j] = get(ch, -1)
    return out


def encode_many(texts, vocab: CharVocabulary, window: int = DEFAULT_WINDOW,
                reverse: bool = False) -> np.ndarray:
    texts = list(texts)
    out = np.full((len(texts), window), -1, dtype=np.int16)
    for i, t in enumerate(texts):
        out[i] = encode_indices(t, vocab, window, reverse)
    return out


def quantize_text(text: str, vocab: CharVocabulary, window: int = DEFAULT_WINDOW,
                  reverse: bool = False) -> np.ndarray:
    """Binary (len(vocab), window) matrix; column j one-hot encodes character j."""
    idx = encode_indices(text, vocab, window, reverse)
    m = np.zeros((len(vocab), window), dtype=np.uint8)
    cols = np.flatnonzero(idx >= 0)
    m[idx[cols], cols] = 1
    return m


def dense_to_indices(matrix: np.ndarray) -> np.ndarray:
    """Inverse of :func:`quantize_text` for one matrix or a stack of them."""
    m = np.asarray(matrix)
    hot = m.any(axis=-2)
    idx = np.argmax(m, axis=-2).astype(np.int16)
    idx[~hot] = -1
    return idx
