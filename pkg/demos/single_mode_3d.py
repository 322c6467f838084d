"""Three-dimensional voxel check that data in one angular mode stay in that mode.

Solves the insulated problem on a 33^3 voxel grid with lateral data x_1 and then
x_1^2 - x_2^2, and prints how the projected energy splits over circle harmonics.

    python demos/single_mode_3d.py
"""
from flatgap.geometry import Profile
from flatgap.harmonics import ModeIndex
from flatgap.oracle3d import mode_energy_fraction, solve_voxel


def main():
    profile = Profile(a=1.0, r0=0.25)
    for label, phi, mode in (
        ("x1", lambda x, y, z: x, ModeIndex(1, 1)),
        ("x1^2 - x2^2", lambda x, y, z: x * x - y * y, ModeIndex(2, 1)),
    ):
        sol = solve_voxel(profile, 0.1, phi)
        frac, energy = mode_energy_fraction(sol, mode)
        total = sum(energy.values())
        top = sorted(energy.items(), key=lambda kv: -kv[1])[:3]
        print(f"data {label}: fraction in {mode} = {frac:.6f}")
        for md, e in top:
            print(f"    k={md.k} i={md.i}: {e / total:.2e}")


if __name__ == "__main__":
    main()
