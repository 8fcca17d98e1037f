"""A tour of the reverse-mode engine underneath the model.

Builds a small expression on a tape, reads gradients back, and then
confirms them against central finite differences, the same way the
test suite vets every layer.
"""

import numpy as np

from tabletext.autodiff import Parameter, Tape, Tensor, grad_check

# A tape records every primitive op; backward() replays them in reverse.
w = Parameter("w", np.array([[0.4, -0.3], [0.1, 0.8]]))
b = Parameter("b", np.array([0.05, -0.2]))
x = Tensor(np.array([1.5, -2.0]))

tape = Tape()
h = tape.tanh(tape.add(tape.matmul(w, x), b))
loss = tape.sum(tape.mul(h, h))
print(f"loss = {float(loss.data):.6f}")

tape.backward(loss)
print("dloss/dw =")
print(w.grad)
print("dloss/db =", b.grad)

# The engine's promise: analytic gradients match finite differences.
def rebuild(t: Tape) -> Tensor:
    hh = t.tanh(t.add(t.matmul(w, x), b))
    return t.sum(t.mul(hh, hh))

report = grad_check(rebuild, [w, b])
print(f"finite-difference agreement: max rel error "
      f"{report.max_rel_error:.2e} over {report.entries_checked} entries "
      f"(worst: {report.worst_parameter})")
