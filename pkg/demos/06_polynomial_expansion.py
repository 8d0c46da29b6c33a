"""Degree-2 grouped polynomial expansion and the binary dataset cache."""
import tempfile
from pathlib import Path

from proxnewton.dataio import gen_synthetic, load_dataset, poly_expand, save_dataset

for p in (8, 22):
    ex = poly_expand(gen_synthetic(20, p, seed=0))
    print(f"p={p}: n={ex.n}, J={len(ex.structure.groups)}, first group {ex.structure.groups[0]}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "expanded.cache"
    save_dataset(path, ex)
    back = load_dataset(path)
    print("cache round trip:", back.X.shape, back.provenance["kind"])
