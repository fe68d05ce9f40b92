"""c* against the Hardy constant and linearised zero counts for several configurations."""
from supercrit.morse import morse_regime_check
from supercrit.nonlinearity import make_builtin

CASES = [("exp", 3), ("exp", 9), ("exp", 10), ("exp", 12), ("power:p=6,a=1", 3),
         ("power:p=7,a=1", 11), ("exppow:p=2", 3)]


def main():
    print(f"{'f':16s} {'N':>3s} {'c*':>10s} {'hardy':>7s}  counts(1e-2..1e-5)  verdict")
    for spec, N in CASES:
        rep = morse_regime_check(make_builtin(spec), N)
        counts = " ".join(f"{c:2d}" for _, c in rep.zero_counts)
        print(f"{spec:16s} {N:3d} {rep.c_star:10.5f} {rep.hardy:7.2f}  {counts:18s}  {rep.verdict}")


if __name__ == "__main__":
    main()
