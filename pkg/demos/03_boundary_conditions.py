# Boundary conditions decide which multiplier endpoint values are admissible.
from intsos.boundary import boundary_classify, boundary_matrix, multiplier_constraints, parse_atoms

cases = {
    "Dirichlet, second order": (["u(0)=0", "u(1)=0"], 2),
    "inflow pinned (transport)": (["u(0)=0"], 1),
    "periodic": (["u(0)=u(1)", "u_x(0)=u_x(1)"], 2),
}
for title, (lines, theta) in cases.items():
    atoms = parse_atoms(lines, ["u"], theta)
    spec = boundary_matrix(atoms, 1, theta, ["u"])
    cls = boundary_classify(spec)
    cons = multiplier_constraints(cls)
    print(f"{title}: B has shape {spec.B.shape}")
    for label, tags in zip(cls.basis.labels(), cls.tags):
        print(f"    {label:8s} at x=0: {tags[0].value:10s} at x=1: {tags[1].value}")
    print("    constraints:", [str(c) for c in cons] or "none")
