"""Regenerate the labeled canonical reference meshes shipped in the package."""
from anthrograsp import objects
from anthrograsp.posture import build_reference, reference_path, save_reference

if __name__ == "__main__":
    for cat in objects.Category:
        ref = build_reference(cat)
        save_reference(ref, reference_path(cat))
        print(cat.value, ref.mesh.n_vertices, "vertices", sorted(set(ref.labels.tolist())))
