"""Abstract group-engine interface.

Two backends implement it: pc-presentations (derq.pc) and BSGS permutation
groups (derq.perm).  The series machinery (derq.series) is written against
this interface only, so every scan runs unchanged on either backend.
"""

from abc import ABC, abstractmethod

from .errors import InputError


class SubgroupHandle(ABC):
    """A subgroup of an engine's group with exact membership and order."""

    @property
    @abstractmethod
    def engine(self):
        """The owning GroupEngine."""

    @abstractmethod
    def order(self) -> int:
        ...

    @abstractmethod
    def contains(self, x) -> bool:
        ...

    @abstractmethod
    def gens(self) -> list:
        """A generating list for the subgroup (induced/strong generators)."""

    def is_trivial(self) -> bool:
        return self.order() == 1

    def equals(self, other: "SubgroupHandle") -> bool:
        """Subgroup equality via order plus one-sided generator membership."""
        if self.order() != other.order():
            return False
        return all(self.contains(g) for g in other.gens())

    def le(self, other: "SubgroupHandle") -> bool:
        """Containment self <= other, decided on generators."""
        return all(other.contains(g) for g in self.gens())


class GroupEngine(ABC):
    """Exact arithmetic for one finite group."""

    @abstractmethod
    def order(self) -> int:
        ...

    @abstractmethod
    def identity(self):
        ...

    @abstractmethod
    def generators(self) -> list:
        ...

    @abstractmethod
    def multiply(self, u, v):
        ...

    @abstractmethod
    def inverse(self, u):
        ...

    @abstractmethod
    def subgroup(self, gens) -> SubgroupHandle:
        """Subgroup generated by the given elements."""

    def power(self, u, k: int):
        if k < 0:
            return self.power(self.inverse(u), -k)
        acc = self.identity()
        sq = u
        while k:
            if k & 1:
                acc = self.multiply(acc, sq)
            k >>= 1
            if k:
                sq = self.multiply(sq, sq)
        return acc

    def commutator(self, u, v):
        """Left-normed convention [u, v] = u^-1 v^-1 u v."""
        iu = self.inverse(u)
        iv = self.inverse(v)
        return self.multiply(self.multiply(iu, iv), self.multiply(u, v))

    def conjugate(self, u, g):
        """u^g = g^-1 u g."""
        return self.multiply(self.multiply(self.inverse(g), u), g)

    def element_order(self, u) -> int:
        e = self.identity()
        k = 1
        w = u
        while w != e:
            w = self.multiply(w, u)
            k += 1
        return k

    def prime_power(self):
        """(p, e) with order() == p**e; InputError if the order is mixed."""
        m = self.order()
        if m == 1:
            raise InputError("trivial group has no defining prime")
        p = 2
        while p * p <= m and m % p:
            p += 1 if p == 2 else 2
        if m % p:
            p = m
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        if m != 1:
            raise InputError(f"group order is not a prime power (order {self.order()})")
        return p, e

    def full_subgroup(self) -> SubgroupHandle:
        return self.subgroup(self.generators())
