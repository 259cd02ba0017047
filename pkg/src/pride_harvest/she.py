"""Somewhat-homomorphic encryption interface with a transparent backend.

The protocol needs encryption, decryption, ciphertext addition and
subtraction, multiplication by a plaintext constant, and a single level of
ciphertext-ciphertext multiplication (for squared distances). The reference
backend below carries the plaintext in the clear and uses key ids purely
to enforce who may combine and open which values; swap in a real scheme
by providing objects with the same methods.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

PLAINTEXT_BOUND = 2**63


class KeyMismatchError(ValueError):
    """Raised when ciphertexts or keys under different key ids are combined."""


class PlaintextOverflowError(OverflowError):
    """Raised when a plaintext leaves the signed range the scheme can encode."""


class DepthExceededError(ValueError):
    """Raised when ciphertext products exceed the scheme's multiplicative depth."""


MAX_DEPTH = 1


def _check_bound(m: int) -> int:
    if not isinstance(m, int):
        raise TypeError(f"plaintexts are integers, got {type(m).__name__}")
    if abs(m) >= PLAINTEXT_BOUND:
        raise PlaintextOverflowError(f"|{m}| >= 2^63")
    return m


@dataclass(frozen=True)
class PublicKey:
    key_id: str

    def encrypt(self, m: int) -> Ciphertext:
        return Ciphertext(self.key_id, _check_bound(m))


@dataclass(frozen=True)
class SecretKey:
    key_id: str = field(repr=False)

    def decrypt(self, c: Ciphertext) -> int:
        if c.key_id != self.key_id:
            raise KeyMismatchError(f"ciphertext under key {c.key_id} cannot be opened with key {self.key_id}")
        return c._payload


@dataclass(frozen=True)
class KeyPair:
    public_key: PublicKey
    secret_key: SecretKey

    @property
    def key_id(self) -> str:
        return self.public_key.key_id


@dataclass(frozen=True)
class Ciphertext:
    key_id: str
    _payload: int = field(repr=False)
    depth: int = 0

    def _same_key(self, other: Ciphertext) -> None:
        if not isinstance(other, Ciphertext):
            raise TypeError("expected a Ciphertext")
        if other.key_id != self.key_id:
            raise KeyMismatchError(f"key ids differ: {self.key_id} vs {other.key_id}")

    def __add__(self, other: Ciphertext) -> Ciphertext:
        self._same_key(other)
        return Ciphertext(self.key_id, _check_bound(self._payload + other._payload), max(self.depth, other.depth))

    def __sub__(self, other: Ciphertext) -> Ciphertext:
        self._same_key(other)
        return Ciphertext(self.key_id, _check_bound(self._payload - other._payload), max(self.depth, other.depth))

    def __mul__(self, k) -> Ciphertext:
        if isinstance(k, Ciphertext):
            self._same_key(k)
            depth = max(self.depth, k.depth) + 1
            if depth > MAX_DEPTH:
                raise DepthExceededError(f"multiplicative depth {depth} > {MAX_DEPTH}")
            return Ciphertext(self.key_id, _check_bound(self._payload * k._payload), depth)
        return Ciphertext(self.key_id, _check_bound(self._payload * _check_bound(int(k))), self.depth)

    __rmul__ = __mul__


def keygen(seed=None) -> KeyPair:
    """Fresh key pair; the key id is a deterministic function of ``seed``."""
    key_id = f"{random.Random(seed).getrandbits(64):016x}"
    return KeyPair(PublicKey(key_id), SecretKey(key_id))


def encrypt(m: int, pk: PublicKey) -> Ciphertext:
    return pk.encrypt(m)


def decrypt(c: Ciphertext, sk: SecretKey) -> int:
    return sk.decrypt(c)


def ct_add(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    return a + b


def ct_sub(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    return a - b


def ct_plain_mult(a: Ciphertext, k: int) -> Ciphertext:
    if isinstance(k, Ciphertext):
        raise TypeError("use ct_mult for ciphertext products")
    return a * k


def ct_mult(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    return a * b
