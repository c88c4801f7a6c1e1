"""Tree sums against the recursion for every class up to a given order."""
import argparse

from fraclind.acceptance import criterion_trees


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.parse_args()
    r = criterion_trees()
    print(r.line())
    for key, value in r.metrics.items():
        print(f"  {key}: {value}")


if __name__ == "__main__":
    main()
