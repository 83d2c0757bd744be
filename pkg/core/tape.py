"""Computation tape for reverse-mode differentiation.

Every primitive in ``core.ops`` that receives at least one taped
``Variable`` appends a ``TapeEntry`` holding a backward closure. Replaying
the tape walks the entries in exact reverse order and sums the gradient
contributions of every consumer of a tensor.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import DimensionError, StateError

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


@dataclass(eq=False)
class Variable:
    """A tensor value, optionally registered on a tape."""

    value: np.ndarray
    tape: Optional["Tape"] = None
    index: int = -1
    name: str = ""

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def taped(self) -> bool:
        return self.tape is not None


@dataclass
class TapeEntry:
    """One executed primitive."""

    op: str
    layer: str
    inputs: Tuple[int, ...]
    output: int
    backward: BackwardFn


@dataclass
class Tape:
    """Ordered record of executed primitives."""

    entries: List[TapeEntry] = field(default_factory=list)
    variables: List[Variable] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def watch(self, value: np.ndarray, name: str = "") -> Variable:
        """Register a leaf tensor whose gradient should be tracked."""
        var = Variable(value=value, tape=self, index=len(self.variables), name=name)
        self.variables.append(var)
        return var

    def record(
        self,
        op: str,
        layer: str,
        inputs: Sequence[Variable],
        value: np.ndarray,
        backward: BackwardFn
    ) -> Variable:
        """Append an executed primitive and return its output variable."""
        out = self.watch(value, name=layer)
        taped = tuple(v.index if v.tape is self else -1 for v in inputs)
        self.entries.append(TapeEntry(op=op, layer=layer, inputs=taped, output=out.index, backward=backward))
        return out

    def gradients(self, output: Variable, seed: np.ndarray) -> "GradientSet":
        """Replay the tape backward from output with the given seed gradient.

        Args:
            output: Variable the seed gradient belongs to
            seed: Gradient of the scalar objective with respect to output

        Returns:
            Gradients for every variable on this tape
        """
        if not self.entries:
            raise StateError("computation tape is empty; run forward with recording enabled")
        if output.tape is not self:
            raise StateError("output variable does not belong to this tape")
        if seed.shape != output.value.shape:
            raise DimensionError(f"seed shape {seed.shape} does not match output shape {output.value.shape}")

        grads: Dict[int, np.ndarray] = {output.index: seed.astype(output.value.dtype, copy=False)}
        for entry in reversed(self.entries):
            upstream = grads.get(entry.output)
            if upstream is None:
                continue
            contributions = entry.backward(upstream)
            for idx, contribution in zip(entry.inputs, contributions):
                if idx < 0 or contribution is None:
                    continue
                if idx in grads:
                    grads[idx] = grads[idx] + contribution
                else:
                    grads[idx] = contribution
        return GradientSet(tape=self, grads=grads)


@dataclass
class GradientSet:
    """Gradients of one scalar objective with respect to taped tensors."""

    tape: Tape
    grads: Dict[int, np.ndarray]

    def wrt(self, var: Variable) -> np.ndarray:
        """Gradient with respect to var; zeros when var is off the path."""
        if var.tape is not self.tape:
            raise StateError(f"variable '{var.name}' is not recorded on this tape")
        grad = self.grads.get(var.index)
        if grad is None:
            return np.zeros_like(var.value)
        return grad

    def by_name(self, name: str) -> np.ndarray:
        """Gradient with respect to the last variable recorded under name."""
        for var in reversed(self.tape.variables):
            if var.name == name:
                return self.wrt(var)
        raise KeyError(name)
