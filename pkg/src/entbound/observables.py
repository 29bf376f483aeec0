"""Named observables, their matrix-free action and measured expectation records.

Observable names follow a small text grammar (sites are 1-based):

    "X 3"          single-site Pauli
    "Z 1 Z 2"      Pauli string given as letter/site pairs
    "ZZ 1 2"       the same with the letters grouped
    "PARITY_X"     X on every site
    "H"            the model Hamiltonian (needs a model)
    "I"            identity

Pauli matrices: X = [[0,1],[1,0]], Y = [[0,-i],[i,0]], Z = diag(1,-1), with
|0> the +1 eigenstate of Z.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .states import DensityOperator, StateVector


class ObservableError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator on ``n_sites`` qubits, applied without a dense matrix."""

    name: str
    n_sites: int
    norm_bound: float
    _flip: int = 0
    _phase: np.ndarray | None = field(default=None, repr=False)
    _apply: object = field(default=None, repr=False)

    def apply(self, v):
        if self._apply is not None:
            return self._apply(v)
        idx = np.arange(v.size)
        out = np.empty(v.shape, dtype=np.result_type(v.dtype, self._phase.dtype))
        out[idx ^ self._flip] = self._phase * v
        return out

    def expectation(self, state):
        if isinstance(state, StateVector):
            a = state.amplitudes
            return float(np.vdot(a, self.apply(a)).real)
        m = np.asarray(state.matrix if isinstance(state, DensityOperator) else state)
        if self._apply is None:
            idx = np.arange(m.shape[0])
            return float((self._phase * m[idx, idx ^ self._flip]).sum().real)
        cols = np.stack([self.apply(np.ascontiguousarray(m[:, k])) for k in range(m.shape[1])], axis=1)
        return float(np.trace(cols).real)

    def quadratic_form(self, v):
        return float(np.vdot(v, self.apply(v)).real)

    def dense(self):
        d = 1 << self.n_sites
        return np.stack([self.apply(np.eye(d, dtype=complex)[:, k]) for k in range(d)], axis=1)

    def scaled(self, factor):
        """``factor`` times this observable (name gets a prefix)."""
        return Observable(f"{factor:g}*{self.name}", self.n_sites, abs(factor) * self.norm_bound,
                          _apply=lambda v: factor * self.apply(v))


def pauli_observable(ops, n):
    """Pauli string from ``{site (0-based): 'X'|'Y'|'Z'}``."""
    d = 1 << n
    idx = np.arange(d)
    flip = 0
    phase = np.ones(d, dtype=complex)
    for site, letter in sorted(ops.items()):
        bit = (idx >> (n - 1 - site)) & 1
        if letter in "XY":
            flip |= 1 << (n - 1 - site)
        if letter == "Z":
            phase *= 1 - 2 * bit
        elif letter == "Y":
            phase *= 1j * (1 - 2 * bit)
        elif letter != "X":
            raise ObservableError(f"unknown Pauli letter {letter!r}")
    if np.all(phase.imag == 0):
        phase = phase.real.copy()
    name = " ".join(f"{ops[s]} {s + 1}" for s in sorted(ops))
    return Observable(name, n, 1.0, flip, phase)


def identity(n):
    return Observable("I", n, 1.0, 0, np.ones(1 << n))


def parity_x(n):
    return Observable("PARITY_X", n, 1.0, (1 << n) - 1, np.ones(1 << n))


def hamiltonian_observable(model):
    J = np.asarray(model.couplings)
    norm = float(np.abs(np.triu(J, 1)).sum() + model.n_sites * abs(model.field_b))
    return Observable("H", model.n_sites, norm, _apply=model.apply)


def dense_observable(name, matrix):
    M = np.asarray(matrix)
    n = int(M.shape[0]).bit_length() - 1
    return Observable(name, n, float(np.linalg.norm(M, 2)), _apply=lambda v: M @ v)


def parse_observable(text, n, model=None):
    """Observable from its grammar string; raises ObservableError naming the problem."""
    tokens = text.split()
    if not tokens:
        raise ObservableError("empty observable")
    head = tokens[0].upper()
    if len(tokens) == 1 and head in ("PARITY_X", "H", "I", "ID", "IDENTITY"):
        if head == "PARITY_X":
            return parity_x(n)
        if head == "H":
            if model is None:
                raise ObservableError("observable 'H' needs a model")
            return hamiltonian_observable(model)
        return identity(n)

    if set(head) <= set("XYZ") and len(head) > 1:
        letters, idx_tokens = list(head), tokens[1:]
    else:
        letters = [t.upper() for t in tokens[0::2]]
        idx_tokens = tokens[1::2]
        if len(tokens) % 2:
            idx_tokens = idx_tokens + [None]
    sites = []
    for tok in idx_tokens:
        if tok is None:
            continue
        try:
            site = int(tok)
        except ValueError:
            raise ObservableError(f"bad site index {tok!r} in {text!r}") from None
        if not 1 <= site <= n:
            raise ObservableError(f"site index {site} out of range 1..{n} in {text!r}")
        sites.append(site)
    for letter in letters:
        if letter not in ("X", "Y", "Z"):
            raise ObservableError(f"unknown operator {letter!r} in {text!r}")
    if len(sites) != len(letters):
        raise ObservableError(f"{len(letters)} operators but {len(sites)} site indices in {text!r}")
    if len(set(sites)) != len(sites):
        raise ObservableError(f"repeated site in {text!r}")
    return pauli_observable({s - 1: l for s, l in zip(sites, letters)}, n)


class ObservableSet:
    """Ordered collection of named observables."""

    def __init__(self, observables):
        self.observables = list(observables)
        names = [o.name for o in self.observables]
        if len(set(names)) != len(names):
            raise ObservableError("duplicate observable names")
        if len({o.n_sites for o in self.observables}) > 1:
            raise ObservableError("observables act on different numbers of sites")
        self._index = {nm: i for i, nm in enumerate(names)}

    def __len__(self):
        return len(self.observables)

    def __iter__(self):
        return iter(self.observables)

    @property
    def names(self):
        return [o.name for o in self.observables]

    @property
    def n_sites(self):
        return self.observables[0].n_sites

    def index(self, name):
        return self._index[name]

    def __contains__(self, name):
        return name in self._index

    @classmethod
    def default(cls, n, include_identity=True, include_parity=True):
        """All single-site Paulis, all same-letter pairs, identity and X...X."""
        obs = [identity(n)] if include_identity else []
        for a in "XYZ":
            obs += [pauli_observable({i: a}, n) for i in range(n)]
        for a in "XYZ":
            obs += [pauli_observable({i: a, j: a}, n) for i, j in combinations(range(n), 2)]
        if include_parity:
            obs.append(parity_x(n))
        return cls(obs)

    @classmethod
    def from_names(cls, names, n, model=None):
        return cls([parse_observable(nm, n, model) for nm in names])


@dataclass(frozen=True)
class ExpectationRecord:
    name: str
    value: float
    sigma: float | None = None


def measure_expectations(state, obs_set):
    """Exact expectations of every observable in the set."""
    if state.n_sites != obs_set.n_sites:
        raise ObservableError(f"state has {state.n_sites} sites, observables act on {obs_set.n_sites}")
    return [ExpectationRecord(o.name, o.expectation(state)) for o in obs_set]


def load_measurements(path_or_obj, n, model=None):
    """Read a measured-expectations JSON file.

    Accepts a list of ``{observable, value, sigma?}`` or an object with a
    ``measurements`` list. Returns ``(ObservableSet, [ExpectationRecord])``.
    """
    if isinstance(path_or_obj, (str, bytes)) or hasattr(path_or_obj, "__fspath__"):
        with open(path_or_obj) as fh:
            data = json.load(fh)
    else:
        data = path_or_obj
    entries = data["measurements"] if isinstance(data, dict) else data
    observables, records = [], []
    for line, entry in enumerate(entries, start=1):
        try:
            obs = parse_observable(str(entry["observable"]), n, model)
        except ObservableError as exc:
            raise ObservableError(f"entry {line}: {exc}") from None
        except KeyError:
            raise ObservableError(f"entry {line}: missing 'observable'") from None
        value = float(entry["value"])
        if abs(value) > obs.norm_bound * (1 + 1e-12):
            raise ObservableError(f"entry {line}: |{value}| exceeds the operator norm {obs.norm_bound:g} of {obs.name!r}")
        observables.append(obs)
        sigma = entry.get("sigma")
        records.append(ExpectationRecord(obs.name, value, None if sigma is None else float(sigma)))
    return ObservableSet(observables), records
