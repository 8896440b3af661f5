#!/usr/bin/env python3
"""Write the built-in procedural asset palette to an on-disk repository.

The resulting directory (OBJ meshes + manifest.json) can be pointed at via
the pipeline config's "assets_dir" and edited or extended by hand.
"""

import argparse

from affordgen.assets import default_repository


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="assets", help="repository directory to create")
    args = parser.parse_args()
    repo = default_repository()
    repo.write_dir(args.out)
    print(f"wrote {len(repo.assets)} assets to {args.out}/")


if __name__ == "__main__":
    main()
