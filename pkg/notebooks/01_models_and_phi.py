# Building models: base laws, the interaction function, and the joint tensor.

import numpy as np

from gremlab import make_spec, product_measure
from gremlab.model import flat_index, load_model
from gremlab.phi import evaluate, parse, to_text

# Two species give three subsets {1}, {2}, {1,2}; masks 1, 2, 3 in that order.
spec = load_model("notebooks/models/pair.json")
print("n =", spec.n, " |S| =", spec.alphabet_size, " tensor size =", spec.size)

# phi is written over subset variables; x12 is the coordinate of {1,2}
tree = parse("x1*x2 + 0.5*x12")
print("parsed:", to_text(tree))
print("phi at x1=1, x2=-1, x12=1:", evaluate(tree, {1: 1.0, 2: -1.0, 3: 1.0}))

# the tabulated phi is indexed in C order, coordinate {1} most significant
print("phi table:", spec.phi_table_)
print("entry (1, 0, 1):", spec.phi_table_[flat_index((1, 0, 1), 2)])

# product reference law mu over S^3
lopsided = make_spec(2, {"1": [0.3, 0.7], "2": [0.5, 0.5], "12": [0.5, 0.5]}, phi=np.zeros(8))
print("mu(0,0,0) =", product_measure(lopsided).weights[0])
