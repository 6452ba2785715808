"""Ball and boundary sizes per radius for the built-in groups."""
import argparse

from fsgroup.groups import GeneratorSet, parse_group
from fsgroup.sets import BallCache, omega_boundary, omega_interior


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--groups", default="Z^N:1,Z^N:2,F:2,H3")
    ap.add_argument("--nmax", type=int, default=6)
    a = ap.parse_args(argv)
    print("group,n,ball,sphere,interior,boundary")
    for spec in a.groups.split(","):
        g = parse_group(spec)
        gens = GeneratorSet.standard(g)
        bc = BallCache(gens)
        for n in range(a.nmax + 1):
            B = bc.ball(n)
            sphere = len(B) - (len(bc.ball(n - 1)) if n else 0)
            print(f"{spec},{n},{len(B)},{sphere},{len(omega_interior(B, gens))},{len(omega_boundary(B, gens))}")


if __name__ == "__main__":
    main()
