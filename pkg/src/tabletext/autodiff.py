"""Reverse-mode automatic differentiation on dense float64 arrays.

A Tape records each primitive as it runs; ``backward`` replays the records
in exact reverse order, accumulating into per-tensor gradient buffers.
Everything is eager numpy: no graph optimization, no dtype promotion, no
implicit broadcasting beyond what each primitive explicitly supports.

The primitive set is exactly what the encoder/dispatcher/decoder stack
needs. Each op states the shapes it accepts and raises ShapeError for
anything else; silent broadcasting is how gradient bugs hide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not match what the primitive supports."""


class Tensor:
    """A float64 array paired with a same-shaped gradient buffer.

    The gradient buffer is allocated eagerly and only ever written with
    ``+=`` during backward, so reusing a tensor in several places
    accumulates correctly.
    """

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"


class Parameter:
    """A named trainable tensor that outlives any single tape."""

    __slots__ = ("name", "tensor")

    def __init__(self, name: str, data):
        self.name = name
        self.tensor = Tensor(data)

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @property
    def grad(self) -> np.ndarray:
        return self.tensor.grad

    @property
    def shape(self) -> tuple:
        return self.tensor.data.shape

    def zero_grad(self) -> None:
        self.tensor.zero_grad()

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.tensor.data.shape})"


def _t(x) -> Tensor:
    """Accept Tensor or Parameter wherever an operand is expected."""
    if isinstance(x, Parameter):
        return x.tensor
    if isinstance(x, Tensor):
        return x
    raise TypeError(f"expected Tensor or Parameter, got {type(x).__name__}")


class Tape:
    """Ordered record of executed primitives.

    With ``recording=False`` the same ops run forward-only and
    ``backward`` replays nothing, which is the inference path.
    """

    def __init__(self, recording: bool = True):
        self.recording = recording
        self._records: list[tuple[Callable[[], None], Tensor]] = []

    def __len__(self) -> int:
        return len(self._records)

    def _push(self, fn: Callable[[], None], out: Tensor) -> None:
        if self.recording:
            self._records.append((fn, out))

    def backward(self, root) -> None:
        """Seed d(root)/d(root) = 1 and replay records in reverse.

        root must be a scalar (0-d). Buffers of op outputs are per-pass
        scratch and are cleared first, so leaf gradients (parameters,
        inputs) accumulate additively across repeated calls; an empty
        tape replays nothing.
        """
        root = _t(root)
        if root.data.ndim != 0:
            raise ShapeError(f"backward root must be scalar, got shape {root.data.shape}")
        for _, out in self._records:
            out.grad[...] = 0.0
        root.grad[...] += 1.0
        for fn, _ in reversed(self._records):
            fn()

    # ---- primitives ------------------------------------------------

    def constant(self, data) -> Tensor:
        """Wrap raw data as a leaf tensor (no record)."""
        return Tensor(data)

    def matmul(self, a, b) -> Tensor:
        """Matrix product for the (2d,1d), (1d,2d) and (2d,2d) cases."""
        a, b = _t(a), _t(b)
        if a.data.ndim == 2 and b.data.ndim == 1:
            if a.data.shape[1] != b.data.shape[0]:
                raise ShapeError(f"matmul {a.data.shape} @ {b.data.shape}")
            out = Tensor(a.data @ b.data)

            def bw():
                a.grad += np.outer(out.grad, b.data)
                b.grad += a.data.T @ out.grad

        elif a.data.ndim == 1 and b.data.ndim == 2:
            if a.data.shape[0] != b.data.shape[0]:
                raise ShapeError(f"matmul {a.data.shape} @ {b.data.shape}")
            out = Tensor(a.data @ b.data)

            def bw():
                a.grad += b.data @ out.grad
                b.grad += np.outer(a.data, out.grad)

        elif a.data.ndim == 2 and b.data.ndim == 2:
            if a.data.shape[1] != b.data.shape[0]:
                raise ShapeError(f"matmul {a.data.shape} @ {b.data.shape}")
            out = Tensor(a.data @ b.data)

            def bw():
                a.grad += out.grad @ b.data.T
                b.grad += a.data.T @ out.grad

        else:
            raise ShapeError(f"matmul needs 2d/1d operands, got {a.data.shape} @ {b.data.shape}")
        self._push(bw, out)
        return out

    def add(self, a, b) -> Tensor:
        a, b = _t(a), _t(b)
        if a.data.shape != b.data.shape:
            raise ShapeError(f"add {a.data.shape} + {b.data.shape}")
        out = Tensor(a.data + b.data)

        def bw():
            a.grad += out.grad
            b.grad += out.grad

        self._push(bw, out)
        return out

    def mul(self, a, b) -> Tensor:
        """Elementwise product; one operand may be a 0-d scalar."""
        a, b = _t(a), _t(b)
        if a.data.shape != b.data.shape and a.data.ndim != 0 and b.data.ndim != 0:
            raise ShapeError(f"mul {a.data.shape} * {b.data.shape}")
        out = Tensor(a.data * b.data)

        def bw():
            ga = out.grad * b.data
            gb = out.grad * a.data
            a.grad += ga.sum() if a.data.ndim == 0 and ga.ndim != 0 else ga
            b.grad += gb.sum() if b.data.ndim == 0 and gb.ndim != 0 else gb

        self._push(bw, out)
        return out

    def affine(self, x, scale: float, shift: float) -> Tensor:
        """scale * x + shift with python-float constants."""
        x = _t(x)
        out = Tensor(scale * x.data + shift)

        def bw():
            x.grad += scale * out.grad

        self._push(bw, out)
        return out

    def sigmoid(self, x) -> Tensor:
        x = _t(x)
        d = x.data
        # split by sign so exp never overflows
        out_data = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                            np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
        out = Tensor(out_data)

        def bw():
            x.grad += out.grad * out.data * (1.0 - out.data)

        self._push(bw, out)
        return out

    def tanh(self, x) -> Tensor:
        x = _t(x)
        out = Tensor(np.tanh(x.data))

        def bw():
            x.grad += out.grad * (1.0 - out.data * out.data)

        self._push(bw, out)
        return out

    def softmax(self, x, mask: np.ndarray | None = None) -> Tensor:
        """Max-shifted softmax over a 1-d vector.

        mask, when given, is a boolean keep-vector; masked positions get
        probability exactly 0.0 and receive no gradient. All-masked input
        is an error (there is nothing to normalize).
        """
        x = _t(x)
        if x.data.ndim != 1:
            raise ShapeError(f"softmax needs 1-d input, got {x.data.shape}")
        if mask is None:
            shifted = x.data - x.data.max()
            e = np.exp(shifted)
            out = Tensor(e / e.sum())
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != x.data.shape:
                raise ShapeError(f"mask shape {mask.shape} vs input {x.data.shape}")
            if not mask.any():
                raise ValueError("softmax over fully masked input")
            shifted = x.data - x.data[mask].max()
            e = np.where(mask, np.exp(np.where(mask, shifted, 0.0)), 0.0)
            out = Tensor(e / e.sum())

        def bw():
            g = out.grad
            y = out.data
            x.grad += y * (g - np.dot(g, y))

        self._push(bw, out)
        return out

    def log_softmax(self, x) -> Tensor:
        """log softmax over a 1-d vector; finite for any finite input."""
        x = _t(x)
        if x.data.ndim != 1:
            raise ShapeError(f"log_softmax needs 1-d input, got {x.data.shape}")
        shifted = x.data - x.data.max()
        lse = np.log(np.exp(shifted).sum())
        out = Tensor(shifted - lse)

        def bw():
            g = out.grad
            x.grad += g - np.exp(out.data) * g.sum()

        self._push(bw, out)
        return out

    def lookup(self, table, index: int) -> Tensor:
        """Row of a 2-d table; backward scatters into that row."""
        table = _t(table)
        if table.data.ndim != 2:
            raise ShapeError(f"lookup table must be 2-d, got {table.data.shape}")
        index = int(index)
        if not 0 <= index < table.data.shape[0]:
            raise IndexError(f"lookup row {index} out of range [0, {table.data.shape[0]})")
        out = Tensor(table.data[index].copy())

        def bw():
            table.grad[index] += out.grad

        self._push(bw, out)
        return out

    def stack_rows(self, rows: Sequence) -> Tensor:
        """Stack equal-length 1-d tensors into a 2-d tensor."""
        rows = [_t(r) for r in rows]
        if not rows:
            raise ShapeError("stack_rows of nothing")
        n = rows[0].data.shape
        if any(r.data.ndim != 1 or r.data.shape != n for r in rows):
            raise ShapeError("stack_rows needs equal-length 1-d rows")
        out = Tensor(np.stack([r.data for r in rows]))

        def bw():
            for i, r in enumerate(rows):
                r.grad += out.grad[i]

        self._push(bw, out)
        return out

    def concat(self, parts: Sequence) -> Tensor:
        """Concatenate 1-d tensors."""
        parts = [_t(p) for p in parts]
        if not parts or any(p.data.ndim != 1 for p in parts):
            raise ShapeError("concat needs one or more 1-d parts")
        out = Tensor(np.concatenate([p.data for p in parts]))
        offsets = np.cumsum([0] + [p.data.shape[0] for p in parts])

        def bw():
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                p.grad += out.grad[lo:hi]

        self._push(bw, out)
        return out

    def slice1d(self, x, start: int, stop: int) -> Tensor:
        x = _t(x)
        if x.data.ndim != 1:
            raise ShapeError(f"slice1d needs 1-d input, got {x.data.shape}")
        if not 0 <= start <= stop <= x.data.shape[0]:
            raise IndexError(f"slice [{start}:{stop}] out of range for length {x.data.shape[0]}")
        out = Tensor(x.data[start:stop].copy())

        def bw():
            x.grad[start:stop] += out.grad

        self._push(bw, out)
        return out

    def pick(self, x, index: int) -> Tensor:
        """Scalar element of a 1-d vector."""
        x = _t(x)
        if x.data.ndim != 1:
            raise ShapeError(f"pick needs 1-d input, got {x.data.shape}")
        index = int(index)
        if not 0 <= index < x.data.shape[0]:
            raise IndexError(f"pick index {index} out of range [0, {x.data.shape[0]})")
        out = Tensor(x.data[index])

        def bw():
            x.grad[index] += out.grad

        self._push(bw, out)
        return out

    def scatter_add(self, base, indices, src) -> Tensor:
        """base with src[k] added at position indices[k]; duplicates sum."""
        base, src = _t(base), _t(src)
        indices = np.asarray(indices, dtype=np.intp)
        if base.data.ndim != 1 or src.data.ndim != 1 or indices.shape != src.data.shape:
            raise ShapeError("scatter_add needs 1-d base/src and matching indices")
        if indices.size and (indices.min() < 0 or indices.max() >= base.data.shape[0]):
            raise IndexError("scatter_add index out of range")
        out_data = base.data.copy()
        np.add.at(out_data, indices, src.data)
        out = Tensor(out_data)

        def bw():
            base.grad += out.grad
            src.grad += out.grad[indices]

        self._push(bw, out)
        return out

    def submatrix(self, m, row_ids, col_ids) -> Tensor:
        """m[rows x cols] as a dense block; repeated ids accumulate in backward."""
        m = _t(m)
        row_ids = np.asarray(row_ids, dtype=np.intp)
        col_ids = np.asarray(col_ids, dtype=np.intp)
        if m.data.ndim != 2 or row_ids.ndim != 1 or col_ids.ndim != 1:
            raise ShapeError("submatrix needs a 2-d source and 1-d index vectors")
        out = Tensor(m.data[np.ix_(row_ids, col_ids)])

        def bw():
            np.add.at(m.grad, np.ix_(row_ids, col_ids), out.grad)

        self._push(bw, out)
        return out

    def sum(self, x) -> Tensor:
        x = _t(x)
        out = Tensor(x.data.sum())

        def bw():
            x.grad += out.grad

        self._push(bw, out)
        return out

    def dot(self, a, b) -> Tensor:
        a, b = _t(a), _t(b)
        if a.data.ndim != 1 or a.data.shape != b.data.shape:
            raise ShapeError(f"dot {a.data.shape} . {b.data.shape}")
        out = Tensor(np.dot(a.data, b.data))

        def bw():
            a.grad += out.grad * b.data
            b.grad += out.grad * a.data

        self._push(bw, out)
        return out

    def sum_squares(self, x) -> Tensor:
        x = _t(x)
        out = Tensor((x.data * x.data).sum())

        def bw():
            x.grad += 2.0 * out.grad * x.data

        self._push(bw, out)
        return out


@dataclass
class GradCheckReport:
    """Outcome of a finite-difference sweep over parameters.

    Relative error uses a unit floor: |analytic - numeric| divided by
    max(|analytic|, |numeric|, 1), so near-zero entries are compared
    absolutely instead of amplifying rounding noise.
    """

    max_rel_error: float
    worst_parameter: str
    worst_index: int
    per_parameter: dict[str, float]
    entries_checked: int

    def __str__(self) -> str:
        lines = [f"grad check: {self.entries_checked} entries, "
                 f"max rel error {self.max_rel_error:.3e} "
                 f"at {self.worst_parameter}[{self.worst_index}]"]
        for name in sorted(self.per_parameter):
            lines.append(f"  {name:24s} {self.per_parameter[name]:.3e}")
        return "\n".join(lines)


def grad_check(loss_fn, params: Sequence[Parameter], step: float = 1e-5,
               sample: int | None = None, seed: int = 0) -> GradCheckReport:
    """Compare tape gradients against central finite differences.

    loss_fn(tape) must rebuild the scalar loss from the live parameter
    values every time it is called; it is invoked once recording for the
    analytic pass and twice non-recording per checked entry. With
    ``sample`` set, at most that many entries per parameter are checked,
    chosen by a seeded rng (deterministic across calls).
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    tape = Tape()
    loss = _t(loss_fn(tape))
    if loss.data.ndim != 0:
        raise ShapeError(f"loss must be scalar, got shape {loss.data.shape}")
    if not np.isfinite(loss.data):
        raise ValueError("loss is not finite at the base point")
    tape.backward(loss)
    analytic = {p.name: p.grad.copy().reshape(-1) for p in params}

    rng = np.random.default_rng(seed)
    max_rel = 0.0
    worst_param, worst_index = "", -1
    per_parameter: dict[str, float] = {}
    checked = 0

    for p in params:
        flat = p.data.reshape(-1)
        if sample is not None and flat.size > sample:
            idxs = np.sort(rng.choice(flat.size, size=sample, replace=False))
        else:
            idxs = np.arange(flat.size)
        worst_here = 0.0
        for i in idxs:
            keep = flat[i]
            flat[i] = keep + step
            lp = float(_t(loss_fn(Tape(recording=False))).data)
            flat[i] = keep - step
            lm = float(_t(loss_fn(Tape(recording=False))).data)
            flat[i] = keep
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise ValueError(f"non-finite loss while perturbing {p.name}[{i}]")
            numeric = (lp - lm) / (2.0 * step)
            ana = analytic[p.name][i]
            rel = abs(numeric - ana) / max(abs(numeric), abs(ana), 1.0)
            checked += 1
            if rel > worst_here:
                worst_here = rel
            if rel > max_rel:
                max_rel, worst_param, worst_index = rel, p.name, int(i)
        per_parameter[p.name] = worst_here

    return GradCheckReport(max_rel_error=max_rel, worst_parameter=worst_param,
                           worst_index=worst_index, per_parameter=per_parameter,
                           entries_checked=checked)
