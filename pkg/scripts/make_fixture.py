"""Write the synthetic demo dataset (frames, manifest, Q-frame scores, ground truth)."""
import argparse

from rvos_tta.fixtures import DEFAULT_LENGTHS, DEFAULT_SHAPE, make_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("root")
    ap.add_argument("--lengths", type=int, nargs="+", default=list(DEFAULT_LENGTHS),
                    help="frames per video")
    ap.add_argument("--shape", type=int, nargs=2, default=list(DEFAULT_SHAPE), metavar=("H", "W"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    path = make_fixture(args.root, args.lengths, tuple(args.shape), args.seed)
    print(f"manifest: {path}")


if __name__ == "__main__":
    main()
